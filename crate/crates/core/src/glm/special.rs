//! Special functions used by the likelihoods.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
///
/// Large arguments switch to the Stirling series, which is more accurate
/// there than the Lanczos sum.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 20.0 {
        return stirling_ln_gamma(x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn stirling_ln_gamma(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // B_{2k} / (2k (2k-1) x^{2k-1})
    let series = inv
        * (1.0 / 12.0
            - inv2
                * (1.0 / 360.0
                    - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// Digamma for `x > 0`: recurrence up to 10, then the asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// `ln Γ(m + y) − ln Γ(m)` and `ψ(m + y) − ψ(m)` for a count `y`.
///
/// Small counts use the exact finite sums, which stay accurate when `m`
/// is huge (the near-Poisson regime).
pub fn gamma_ratio_terms(m: f64, y: u64) -> (f64, f64) {
    if y <= 1000 {
        let mut lg = 0.0;
        let mut psi = 0.0;
        for k in 0..y {
            let v = m + k as f64;
            lg += v.ln();
            psi += 1.0 / v;
        }
        (lg, psi)
    } else {
        let yf = y as f64;
        (ln_gamma(m + yf) - ln_gamma(m), digamma(m + yf) - digamma(m))
    }
}

/// `ln(Σ exp(v))`, shifted by the maximum.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln(1 + exp(x))` without overflow.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Two-sided normal critical values for p < 0.05, 0.01, 0.001.
pub const Z_CRITICAL: [f64; 3] = [1.959_963_984_540_054, 2.575_829_303_548_901, 3.290_526_731_491_926];

/// `*`, `**` or `***` by the normal-approximation p-value of `z`.
pub fn stars(z: f64) -> &'static str {
    let z = z.abs();
    if z > Z_CRITICAL[2] {
        "***"
    } else if z > Z_CRITICAL[1] {
        "**"
    } else if z > Z_CRITICAL[0] {
        "*"
    } else {
        ""
    }
}
