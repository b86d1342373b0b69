//! Chi-square test on the residual variance and the dual-speed verdict.
//!
//! Under `H0: sigma^2 = delta` the statistic `T = (n - 3) sigma_hat^2 / delta`
//! is chi-square with `n - 3` degrees of freedom; `H1: sigma^2 > delta` is
//! one-sided, so `H0` is rejected when `T` exceeds the `1 - alpha` quantile.
//! A detection is false when `H0` is rejected under both wave speeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{estimate_hypocenter, EstimatorConfig, FitResult, Trigger, MIN_TRIGGERS};
use crate::geo::WaveSpeed;
use crate::stats;

/// Parameters fitted per speed: latitude, longitude, depth.
pub const FITTED_PARAMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    /// Null residual variance (s^2), shared by both wave speeds.
    pub delta: f64,
    pub alpha: f64,
}

impl Default for TestSpec {
    fn default() -> Self {
        TestSpec {
            delta: 0.6,
            alpha: 0.01,
        }
    }
}

impl TestSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(format!("delta {} must be > 0", self.delta)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityTestResult {
    pub v: WaveSpeed,
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub rejected: bool,
    pub fit: FitResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TrueEarthquake,
    FalseDetection,
}

impl Verdict {
    pub fn from_rejections(primary_rejected: bool, secondary_rejected: bool) -> Self {
        if primary_rejected && secondary_rejected {
            Verdict::FalseDetection
        } else {
            Verdict::TrueEarthquake
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::TrueEarthquake => "true_earthquake",
            Verdict::FalseDetection => "false_detection",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub primary_test: VelocityTestResult,
    pub secondary_test: VelocityTestResult,
    pub verdict: Verdict,
}

pub fn degrees_of_freedom(n: usize) -> Result<usize> {
    if n < MIN_TRIGGERS {
        return Err(Error::InsufficientData {
            n,
            required: MIN_TRIGGERS,
        });
    }
    Ok(n - FITTED_PARAMS)
}

pub fn test_statistic(sigma2: f64, n: usize, delta: f64) -> Result<f64> {
    let df = degrees_of_freedom(n)?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("delta {delta} must be > 0")));
    }
    Ok(df as f64 * sigma2 / delta)
}

/// Inverse CDF of the chi-square distribution.
pub fn chi_square_quantile(p: f64, df: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability {p} outside (0, 1)")));
    }
    if df == 0 {
        return Err(Error::invalid("degrees of freedom must be >= 1"));
    }
    Ok(stats::chi_square_inv(p, df as f64))
}

pub fn chi_square_cdf(x: f64, df: usize) -> f64 {
    stats::chi_square_cdf(x, df as f64)
}

/// Upper-tail critical value of the test for `n` triggers.
pub fn critical_value(n: usize, alpha: f64) -> Result<f64> {
    chi_square_quantile(1.0 - alpha, degrees_of_freedom(n)?)
}

/// Test an already fitted detection.
pub fn test_fit(fit: FitResult, spec: &TestSpec) -> Result<VelocityTestResult> {
    spec.validate()?;
    let df = degrees_of_freedom(fit.n)?;
    let statistic = test_statistic(fit.sigma2, fit.n, spec.delta)?;
    let critical = critical_value(fit.n, spec.alpha)?;
    Ok(VelocityTestResult {
        v: fit.wave,
        statistic,
        df,
        critical,
        rejected: statistic > critical,
        fit,
    })
}

pub fn run_test(
    triggers: &[Trigger],
    v: WaveSpeed,
    spec: &TestSpec,
    cfg: &EstimatorConfig,
) -> Result<VelocityTestResult> {
    spec.validate()?;
    degrees_of_freedom(triggers.len())?;
    let fit = estimate_hypocenter(triggers, v, cfg)?;
    test_fit(fit, spec)
}

pub fn classify(
    triggers: &[Trigger],
    spec: &TestSpec,
    cfg: &EstimatorConfig,
) -> Result<Classification> {
    classify_with_speeds(
        triggers,
        WaveSpeed::primary(),
        WaveSpeed::secondary(),
        spec,
        cfg,
    )
}

pub fn classify_with_speeds(
    triggers: &[Trigger],
    primary: WaveSpeed,
    secondary: WaveSpeed,
    spec: &TestSpec,
    cfg: &EstimatorConfig,
) -> Result<Classification> {
    let (p, s) = if cfg.parallel {
        rayon::join(
            || run_test(triggers, primary, spec, cfg),
            || run_test(triggers, secondary, spec, cfg),
        )
    } else {
        (
            run_test(triggers, primary, spec, cfg),
            run_test(triggers, secondary, spec, cfg),
        )
    };
    let (primary_test, secondary_test) = (p?, s?);
    let verdict = Verdict::from_rejections(primary_test.rejected, secondary_test.rejected);
    Ok(Classification {
        primary_test,
        secondary_test,
        verdict,
    })
}
