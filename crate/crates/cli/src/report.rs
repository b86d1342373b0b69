//! Serialized report shapes. Field order is part of the output contract.

use serde::Serialize;

use quakeml_core::estimation::{FitResult, Interval};
use quakeml_core::hypothesis::VelocityTestResult;
use quakeml_core::stats::Summary;
use quakeml_core::{EstimatorConfig, TestSpec, Trigger, WaveKind};

/// Interval bounds; an unbounded side serializes as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounds(pub [Option<f64>; 2]);

impl From<Interval> for Bounds {
    fn from(i: Interval) -> Self {
        let side = |x: f64| x.is_finite().then_some(x);
        Bounds([side(i.lower), side(i.upper)])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Ci {
    pub level: f64,
    pub lat: Bounds,
    pub lon: Bounds,
    pub depth_km: Bounds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub lat: f64,
    pub lon: f64,
    pub depth_km: f64,
    pub ci: Ci,
}

impl From<&FitResult> for Estimate {
    fn from(f: &FitResult) -> Self {
        let ci = &f.conf_intervals;
        Estimate {
            lat: f.hypocenter.epicentre.lat,
            lon: f.hypocenter.epicentre.lon,
            depth_km: f.hypocenter.depth_km,
            ci: Ci {
                level: ci.level,
                lat: ci.lat.into(),
                lon: ci.lon.into(),
                depth_km: ci.depth_km.into(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestBlock {
    pub v: f64,
    pub estimate: Estimate,
    pub sigma2: f64,
    #[serde(rename = "T")]
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub rejected: bool,
    pub wave: WaveKind,
    pub t_origin: f64,
    pub converged: bool,
    pub boundary_hit: bool,
    pub degenerate: bool,
}

impl From<&VelocityTestResult> for TestBlock {
    fn from(r: &VelocityTestResult) -> Self {
        TestBlock {
            v: r.v.v_kms,
            estimate: (&r.fit).into(),
            sigma2: r.fit.sigma2,
            statistic: r.statistic,
            df: r.df,
            critical: r.critical,
            rejected: r.rejected,
            wave: r.v.label,
            t_origin: r.fit.hypocenter.t_origin,
            converged: r.fit.converged,
            boundary_hit: r.fit.boundary_hit,
            degenerate: r.fit.degenerate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorEcho {
    pub restarts: usize,
    pub depth_min_km: f64,
    pub depth_max_km: f64,
    pub box_margin_deg: f64,
    pub f_tol: f64,
    pub max_iter: usize,
    pub confidence_level: f64,
    pub earth_radius_km: f64,
}

impl From<&EstimatorConfig> for EstimatorEcho {
    fn from(c: &EstimatorConfig) -> Self {
        EstimatorEcho {
            restarts: c.restarts,
            depth_min_km: c.depth_min_km,
            depth_max_km: c.depth_max_km,
            box_margin_deg: c.box_margin_deg,
            f_tol: c.f_tol,
            max_iter: c.max_iter,
            confidence_level: c.confidence_level,
            earth_radius_km: c.earth.radius_km,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyEcho {
    pub delta: f64,
    pub alpha: f64,
    pub vp: f64,
    pub vs: f64,
    #[serde(flatten)]
    pub estimator: EstimatorEcho,
}

impl ClassifyEcho {
    pub fn new(spec: &TestSpec, vp: f64, vs: f64, est: &EstimatorConfig) -> Self {
        ClassifyEcho {
            delta: spec.delta,
            alpha: spec.alpha,
            vp,
            vs,
            estimator: est.into(),
        }
    }
}

/// Size and extent of the input trigger list.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub n: usize,
    pub lat: [f64; 2],
    pub lon: [f64; 2],
    pub t: [f64; 2],
}

impl InputDigest {
    pub fn of(triggers: &[Trigger]) -> Self {
        let span = |f: &dyn Fn(&Trigger) -> f64| {
            triggers.iter().map(f).fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], x| {
                [lo.min(x), hi.max(x)]
            })
        };
        InputDigest {
            n: triggers.len(),
            lat: span(&|t| t.location.lat),
            lon: span(&|t| t.location.lon),
            t: span(&|t| t.time),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub verdict: String,
    pub tests: Vec<TestBlock>,
    pub timing_ms: f64,
    pub seed: u64,
    pub config: ClassifyEcho,
    pub input: InputDigest,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub id: Option<String>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub v: f64,
    pub estimate: Estimate,
    pub sigma2: f64,
    pub t_origin: f64,
    pub objective: f64,
    pub log_likelihood: Option<f64>,
    pub wave: WaveKind,
    pub converged: bool,
    pub restarts_used: usize,
    pub restarts_converged: usize,
    pub boundary_hit: bool,
    pub degenerate: bool,
    pub residuals: Vec<ResidualRow>,
    pub timing_ms: f64,
    pub seed: u64,
    pub config: EstimatorEcho,
    pub input: InputDigest,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub kind: String,
    pub replications: usize,
    pub detected: usize,
    pub detection_rate: f64,
    pub seed: u64,
}

/// Equal-width histogram of the tested residual variance per arm.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub true_counts: Vec<usize>,
    pub false_counts: Vec<usize>,
}

impl Histogram {
    pub fn build(true_vals: &[f64], false_vals: &[f64], bins: usize) -> Self {
        let hi = true_vals
            .iter()
            .chain(false_vals)
            .copied()
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let width = hi / bins as f64;
        let edges = (0..=bins).map(|i| i as f64 * width).collect();
        let count = |vals: &[f64]| {
            let mut c = vec![0usize; bins];
            for &v in vals {
                let k = ((v / width) as usize).min(bins - 1);
                c[k] += 1;
            }
            c
        };
        Histogram {
            edges,
            true_counts: count(true_vals),
            false_counts: count(false_vals),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxPlots {
    pub epicentre_km: Summary,
    pub depth_km: Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationOutput {
    pub delta: f64,
    pub alpha: f64,
    pub type1: f64,
    pub type2: f64,
    pub replications: usize,
    pub true_detected: usize,
    pub false_detected: usize,
    pub true_excluded: usize,
    pub false_excluded: usize,
    pub errors: BoxPlots,
    pub histogram: Histogram,
    pub timing_ms: f64,
    pub seed: u64,
}
