//! Adaptive Gauss-Kronrod (7/15) quadrature used as an independent oracle in
//! tests. Nothing in the library calls it.
#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = kronrod(f, a, b);
    // Stop once the error estimate is at rounding level.
    if err <= tol.max(1e-300) || err <= 50.0 * f64::EPSILON * val.abs() || depth == 0 {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` to roughly `tol` absolute error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 40)
}

/// `∫_a^∞ f` via `t = a + scale·x/(1−x)`; `scale` should be near the bulk of the mass.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64) -> f64 {
    let g = |x: f64| {
        if x >= 1.0 {
            return 0.0;
        }
        let t = a + scale * x / (1.0 - x);
        let jac = scale / ((1.0 - x) * (1.0 - x));
        let v = f(t) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // Split at a few points so that sharp peaks near the origin are resolved.
    let cuts = [0.0, 0.01, 0.05, 0.2, 0.5, 0.8, 0.95, 0.99, 1.0];
    cuts.windows(2).map(|w| integrate(g, w[0], w[1], 1e-13)).sum()
}
