//! Special functions and small descriptive statistics.
//!
//! The chi-square distribution is expressed through the regularized
//! incomplete gamma function: `F(x; k) = P(k/2, x/2)`.

use serde::{Deserialize, Serialize};

const LANCZOS_G: f64 = 7.0;
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

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

pub fn chi_square_cdf(x: f64, df: f64) -> f64 {
    gamma_p(0.5 * df, 0.5 * x)
}

pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

fn chi_square_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * df;
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Inverse CDF of chi-square with `df` degrees of freedom for `p` in (0, 1).
///
/// Newton iterations on the tail closest to `p`, seeded by the
/// Wilson-Hilferty cube approximation and guarded by a bisection bracket.
pub fn chi_square_inv(p: f64, df: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0 && df > 0.0);
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    // Signed residual, increasing in x.
    let resid = |x: f64| {
        if upper {
            target - chi_square_sf(x, df)
        } else {
            chi_square_cdf(x, df) - target
        }
    };

    let h = 2.0 / (9.0 * df);
    let z = normal_quantile_approx(p);
    let mut x = df * (1.0 - h + z * h.sqrt()).powi(3);
    if !(x.is_finite() && x > 0.0) {
        x = df.max(1e-3) * 0.5;
    }

    let (mut lo, mut hi) = (0.0_f64, x.max(1.0));
    while resid(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    for _ in 0..200 {
        let r = resid(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let dens = chi_square_pdf(x, df);
        let mut next = if dens > 0.0 { x - r / dens } else { f64::NAN };
        if !(next.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Two-sided standard-normal critical value for a central `level`,
/// i.e. `z` with `P(|Z| <= z) = level`. Uses `Z^2 ~ chi2(1)`.
pub fn normal_two_sided_z(level: f64) -> f64 {
    chi_square_inv(level, 1.0).sqrt()
}

// Acklam's rational approximation (|err| < 1.2e-9); only seeds Newton.
fn normal_quantile_approx(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile_approx(1.0 - p)
    }
}

/// Median and quartiles of a sample (linear interpolation between order
/// statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            count: v.len(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn chi2_two_df_is_exponential() {
        for x in [0.1, 1.0, 2.0, 7.5, 30.0] {
            let exact = 1.0 - (-x / 2.0f64).exp();
            assert!((chi_square_cdf(x, 2.0) - exact).abs() < 1e-14);
        }
        assert!((chi_square_inv(0.5, 2.0) - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    // statrs is an independent implementation used only as an oracle here.
    #[test]
    fn quantile_matches_independent_library() {
        for df in [1.0, 2.0, 3.0, 5.0, 18.0, 50.0, 105.0, 500.0, 1000.0] {
            let oracle = ChiSquared::new(df).unwrap();
            for p in [1e-6, 0.001, 0.01, 0.05, 0.5, 0.9, 0.95, 0.99, 0.999, 0.999_999] {
                let ours = chi_square_inv(p, df);
                let theirs = oracle.inverse_cdf(p);
                assert!(
                    (ours - theirs).abs() < 1e-6 * theirs.max(1.0),
                    "df={df} p={p}: {ours} vs {theirs}"
                );
                assert!((chi_square_cdf(ours, df) - p).abs() < 1e-12 * p.max(1e-3));
            }
        }
    }

    #[test]
    fn two_sided_z() {
        assert!((normal_two_sided_z(0.95) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((normal_two_sided_z(0.99) - 2.575_829_303_548_901).abs() < 1e-9);
    }

    #[test]
    fn summary_quartiles() {
        let s = Summary::of(&[5.0, 1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert!(Summary::of(&[]).is_none());
    }
}
