#!/usr/bin/env python3
"""Fetch the German Breast Cancer Study Group 2 data and write data/gbsg.csv.

The output has columns id, time (days), event, arm. Arm 1 is the group
without hormonal therapy (horTh = "no", 440 patients) and arm 2
the group with it. Event 1 is recurrence or death (cens = 1 in the source).

    python3 scripts/fetch_gbsg.py                 # download from Rdatasets
    python3 scripts/fetch_gbsg.py --input GBSG2.csv
"""

import argparse
import csv
import io
import pathlib
import sys
import urllib.request

URL = "https://vincentarelbundock.github.io/Rdatasets/csv/TH.data/GBSG2.csv"
ARMS = {"no": 1, "yes": 2}


def convert(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"horTh", "time", "cens"} <= rows[0].keys():
        sys.exit("input lacks the horTh, time and cens columns")
    out = []
    for i, r in enumerate(rows, start=1):
        ident = r.get("rownames") or r.get("") or str(i)
        out.append((ident, r["time"], r["cens"], ARMS[r["horTh"].strip().strip('"')]))
    return out


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--input", help="local GBSG2 CSV instead of downloading")
    p.add_argument("--output", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "gbsg.csv"))
    args = p.parse_args()

    if args.input:
        text = pathlib.Path(args.input).read_text()
    else:
        with urllib.request.urlopen(URL, timeout=60) as resp:
            text = resp.read().decode("utf-8")

    rows = convert(text)
    out = pathlib.Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "time", "event", "arm"])
        w.writerows(rows)
    counts = {a: sum(1 for r in rows if r[3] == a) for a in (1, 2)}
    events = {a: sum(1 for r in rows if r[3] == a and r[2] == "1") for a in (1, 2)}
    print(f"wrote {out}: arm 1 {counts[1]} records / {events[1]} events, arm 2 {counts[2]} / {events[2]}")


if __name__ == "__main__":
    main()
