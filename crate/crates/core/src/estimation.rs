//! Maximum-likelihood fit of epicentre and depth to triggering times.
//!
//! For an assumed wave speed `v`, the residual of trigger `i` at hypocenter
//! `h` is `t_i - D_iH / v`. The origin time only shifts every residual by the
//! same constant, so the objective is the *centered* sum of squares
//! `sum (r_i - mean(r))^2`, which profiles the origin time out. The residual
//! variance estimate divides that sum by `n`.
//!
//! Before the objective is evaluated the triggers are put in a canonical
//! order and their times are re-referenced to the earliest trigger on a 1 µs
//! grid. This makes the estimates independent of input order and of the time
//! epoch, bit for bit (for inputs given at a resolution coarser than 1 µs).
//! Reported residuals use the times as given.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, EarthModel, GeoPoint, WaveSpeed};
use crate::optim::{nelder_mead, Bounds, NelderMeadOptions};
use crate::rng::child_rng;
use crate::stats::normal_two_sided_z;

/// Minimum trigger count for a fit with at least one residual degree of freedom.
pub const MIN_TRIGGERS: usize = 4;

/// Resolution of the canonical trigger-time grid, in seconds.
pub const TIME_QUANTUM_S: f64 = 1e-6;

/// Depth coordinate scale inside the optimizer (km per internal unit), so
/// that one unit of depth is comparable to one degree of latitude.
const DEPTH_UNIT_KM: f64 = 111.194_926_644_558_74;

/// Finite-difference step for the Hessian, in internal units.
const HESSIAN_STEP: f64 = 1e-4;

/// Eigenvalue ratio below which the Hessian is treated as singular.
const SINGULAR_RATIO: f64 = 1e-10;

const RESTART_STREAM: u64 = 0x5245_5354; // "REST"

/// One smartphone's trigger: where and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub location: GeoPoint,
    /// Seconds relative to any epoch shared by the whole detection.
    pub time: f64,
}

impl Trigger {
    pub fn new(location: GeoPoint, time: f64) -> Self {
        Trigger {
            id: None,
            location,
            time,
        }
    }

    pub fn with_id(id: impl Into<String>, location: GeoPoint, time: f64) -> Self {
        Trigger {
            id: Some(id.into()),
            location,
            time,
        }
    }

    fn validate(&self) -> Result<()> {
        self.location.validate()?;
        if !self.time.is_finite() {
            return Err(Error::invalid(format!("non-finite trigger time {}", self.time)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypocenter {
    pub epicentre: GeoPoint,
    pub depth_km: f64,
    /// Origin time. A nuisance parameter: never estimated, fixed at 0 in fits.
    pub t_origin: f64,
}

impl Hypocenter {
    pub fn new(lat: f64, lon: f64, depth_km: f64) -> Result<Self> {
        Ok(Hypocenter {
            epicentre: GeoPoint::new(lat, lon)?,
            depth_km,
            t_origin: 0.0,
        })
    }
}

/// Residuals `t_i - D_iH / v` in input order, with their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    pub deltas: Vec<f64>,
    pub mean: f64,
}

impl ResidualSet {
    pub fn new(deltas: Vec<f64>) -> Self {
        let mean = if deltas.is_empty() {
            0.0
        } else {
            deltas.iter().sum::<f64>() / deltas.len() as f64
        };
        ResidualSet { deltas, mean }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn centered_sse(&self) -> f64 {
        self.deltas.iter().map(|d| (d - self.mean).powi(2)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn unbounded() -> Self {
        Interval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Wald intervals from the observed information at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceIntervals {
    pub level: f64,
    pub lat: Interval,
    pub lon: Interval,
    pub depth_km: Interval,
    /// Set when the information matrix is (near) singular; intervals are then unbounded.
    pub degenerate: bool,
}

impl ConfidenceIntervals {
    fn unbounded(level: f64) -> Self {
        ConfidenceIntervals {
            level,
            lat: Interval::unbounded(),
            lon: Interval::unbounded(),
            depth_km: Interval::unbounded(),
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub wave: WaveSpeed,
    pub n: usize,
    pub hypocenter: Hypocenter,
    /// Residual variance, centered sum of squares over `n`.
    pub sigma2: f64,
    pub residuals: ResidualSet,
    /// Minimized centered sum of squares (s^2).
    pub objective: f64,
    pub conf_intervals: ConfidenceIntervals,
    pub converged: bool,
    pub restarts_used: usize,
    pub restarts_converged: usize,
    /// `None` when `sigma2 == 0` (likelihood unbounded).
    pub log_likelihood: Option<f64>,
    /// The optimum sits on a bound of the search box or the depth range.
    pub boundary_hit: bool,
    /// Trigger geometry does not identify the hypocenter.
    pub degenerate: bool,
}

/// Explicit latitude/longitude search region in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lat: (f64, f64),
    pub lon: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub restarts: usize,
    pub depth_min_km: f64,
    pub depth_max_km: f64,
    /// Margin added around the trigger bounding box, degrees.
    pub box_margin_deg: f64,
    /// Overrides the box derived from the triggers.
    pub search_box: Option<SearchBox>,
    /// Convergence tolerance on the objective spread (s^2).
    pub f_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub confidence_level: f64,
    pub earth: EarthModel,
    /// Run restarts on the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            restarts: 20,
            depth_min_km: 0.0,
            depth_max_km: 100.0,
            box_margin_deg: 1.0,
            search_box: None,
            f_tol: 1e-8,
            max_iter: 500,
            seed: 0,
            confidence_level: 0.99,
            earth: EarthModel::default(),
            parallel: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be >= 1"));
        }
        if !(self.depth_min_km >= 0.0
            && self.depth_min_km <= self.depth_max_km
            && self.depth_max_km < self.earth.radius_km)
        {
            return Err(Error::invalid(format!(
                "depth bounds [{}, {}] must satisfy 0 <= min <= max < R",
                self.depth_min_km, self.depth_max_km
            )));
        }
        if let Some(b) = self.search_box {
            if !(b.lat.0 <= b.lat.1 && b.lon.0 <= b.lon.1) {
                return Err(Error::invalid("search box bounds are not ordered"));
            }
        }
        if !(self.box_margin_deg >= 0.0) {
            return Err(Error::invalid("box margin must be >= 0"));
        }
        if !(self.f_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("tolerance and iteration cap must be positive"));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::invalid(format!(
                "confidence level {} outside (0, 1)",
                self.confidence_level
            )));
        }
        EarthModel::new(self.earth.radius_km)?;
        Ok(())
    }
}

/// Triggers in canonical order with precomputed trigonometry.
struct Prepared {
    /// `order[k]` is the input index of canonical trigger `k`.
    order: Vec<usize>,
    lat: Vec<f64>,
    lon: Vec<f64>,
    cos_lat: Vec<f64>,
    /// Canonical times: re-referenced and quantized.
    time: Vec<f64>,
    /// Times as given, for reporting residuals.
    raw_time: Vec<f64>,
    radius: f64,
}

impl Prepared {
    fn new(triggers: &[Trigger], earth: EarthModel) -> Result<Self> {
        for t in triggers {
            t.validate()?;
        }
        let mut order: Vec<usize> = (0..triggers.len()).collect();
        order.sort_by(|&a, &b| {
            let (ta, tb) = (&triggers[a], &triggers[b]);
            ta.time
                .total_cmp(&tb.time)
                .then(ta.location.lat.total_cmp(&tb.location.lat))
                .then(ta.location.lon.total_cmp(&tb.location.lon))
                .then_with(|| ta.id.cmp(&tb.id))
        });
        let t0 = order.first().map(|&i| triggers[i].time).unwrap_or(0.0);
        let mut p = Prepared {
            lat: Vec::with_capacity(order.len()),
            lon: Vec::with_capacity(order.len()),
            cos_lat: Vec::with_capacity(order.len()),
            time: Vec::with_capacity(order.len()),
            raw_time: Vec::with_capacity(order.len()),
            radius: earth.radius_km,
            order,
        };
        for &i in &p.order {
            let t = &triggers[i];
            let lat = t.location.lat.to_radians();
            p.lat.push(lat);
            p.lon.push(t.location.lon.to_radians());
            p.cos_lat.push(lat.cos());
            p.time.push(((t.time - t0) / TIME_QUANTUM_S).round() * TIME_QUANTUM_S);
            p.raw_time.push(t.time);
        }
        Ok(p)
    }

    fn len(&self) -> usize {
        self.order.len()
    }

    /// Residuals of the given times, canonical order. Depth is not range-checked.
    fn residuals_into(
        &self,
        times: &[f64],
        lat_deg: f64,
        lon_deg: f64,
        depth_km: f64,
        v: f64,
        out: &mut [f64],
    ) {
        let (elat, elon) = (lat_deg.to_radians(), lon_deg.to_radians());
        let ecos = elat.cos();
        for k in 0..self.len() {
            let epi = geo::haversine_km_with_cos(
                elat,
                elon,
                ecos,
                self.lat[k],
                self.lon[k],
                self.cos_lat[k],
                self.radius,
            );
            let hypo = geo::chord_distance(epi, depth_km, self.radius);
            out[k] = times[k] - hypo / v;
        }
    }

    fn objective(&self, lat_deg: f64, lon_deg: f64, depth_km: f64, v: f64) -> f64 {
        // Two passes keep the centered sum accurate when the mean is large.
        let (elat, elon) = (lat_deg.to_radians(), lon_deg.to_radians());
        let ecos = elat.cos();
        let n = self.len() as f64;
        let resid = |k: usize| {
            let epi = geo::haversine_km_with_cos(
                elat,
                elon,
                ecos,
                self.lat[k],
                self.lon[k],
                self.cos_lat[k],
                self.radius,
            );
            self.time[k] - geo::chord_distance(epi, depth_km, self.radius) / v
        };
        let mut sum = 0.0;
        for k in 0..self.len() {
            sum += resid(k);
        }
        let mean = sum / n;
        let mut sse = 0.0;
        for k in 0..self.len() {
            let d = resid(k) - mean;
            sse += d * d;
        }
        sse
    }

    /// Residual set in input order, against the times as given. Their mean
    /// estimates the origin time.
    fn residual_set(&self, h: &Hypocenter, v: f64) -> ResidualSet {
        let mut canon = vec![0.0; self.len()];
        self.residuals_into(&self.raw_time, h.epicentre.lat, h.epicentre.lon, h.depth_km, v, &mut canon);
        let mut deltas = vec![0.0; self.len()];
        for (k, &i) in self.order.iter().enumerate() {
            deltas[i] = canon[k];
        }
        // The mean is taken in canonical order so it is permutation-exact.
        let mean = canon.iter().sum::<f64>() / canon.len() as f64;
        ResidualSet { deltas, mean }
    }

    fn all_coincident(&self) -> bool {
        let (la, lo) = (self.lat[0], self.lon[0]);
        self.lat.iter().zip(&self.lon).all(|(&a, &b)| a == la && b == lo)
    }
}

/// Centered residual sum of squares at `h`; independent of `h.t_origin`
/// and of any common shift of the trigger times.
pub fn centered_sse(
    h: &Hypocenter,
    triggers: &[Trigger],
    v: WaveSpeed,
    earth: EarthModel,
) -> Result<f64> {
    if triggers.is_empty() {
        return Err(Error::invalid("empty trigger list"));
    }
    h.epicentre.validate()?;
    if !(h.depth_km.is_finite() && h.depth_km >= 0.0 && h.depth_km < earth.radius_km) {
        return Err(Error::invalid(format!("depth {} outside [0, R)", h.depth_km)));
    }
    WaveSpeed::new(v.v_kms, v.label)?;
    let prep = Prepared::new(triggers, earth)?;
    Ok(prep.objective(h.epicentre.lat, h.epicentre.lon, h.depth_km, v.v_kms))
}

/// Residual variance with the `1/n` divisor.
pub fn estimate_variance(residuals: &ResidualSet) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    residuals.centered_sse() / residuals.len() as f64
}

/// Gaussian log-likelihood of the centered residuals at variance `sigma2`.
pub fn log_likelihood(sigma2: f64, residuals: &ResidualSet) -> Result<f64> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::invalid(format!("variance {sigma2} must be > 0")));
    }
    let n = residuals.len() as f64;
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(-0.5 * n * two_pi.ln() - 0.5 * n * sigma2.ln() - residuals.centered_sse() / (2.0 * sigma2))
}

struct Problem<'a> {
    prep: &'a Prepared,
    v: f64,
    bounds: Bounds,
    depth: (f64, f64),
}

impl Problem<'_> {
    fn eval_internal(&self, x: &[f64]) -> f64 {
        self.prep.objective(x[0], x[1], x[2] * DEPTH_UNIT_KM, self.v)
    }
}

fn search_bounds(prep: &Prepared, triggers: &[Trigger], cfg: &EstimatorConfig) -> Bounds {
    let (lat, lon) = match cfg.search_box {
        Some(b) => (b.lat, b.lon),
        None => {
            let mut lat = (f64::INFINITY, f64::NEG_INFINITY);
            let mut lon = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &prep.order {
                let p = triggers[i].location;
                lat = (lat.0.min(p.lat), lat.1.max(p.lat));
                lon = (lon.0.min(p.lon), lon.1.max(p.lon));
            }
            let m = cfg.box_margin_deg;
            (
                ((lat.0 - m).max(-90.0), (lat.1 + m).min(90.0)),
                ((lon.0 - m).max(-180.0), (lon.1 + m).min(180.0)),
            )
        }
    };
    Bounds {
        lower: vec![lat.0, lon.0, cfg.depth_min_km / DEPTH_UNIT_KM],
        upper: vec![lat.1, lon.1, cfg.depth_max_km / DEPTH_UNIT_KM],
    }
}

struct RestartOutcome {
    x: Vec<f64>,
    f: f64,
    converged: bool,
}

fn run_restart(problem: &Problem<'_>, cfg: &EstimatorConfig, index: usize) -> RestartOutcome {
    let mut rng = child_rng(cfg.seed, RESTART_STREAM, index as u64);
    let b = &problem.bounds;
    let x0: Vec<f64> = (0..3)
        .map(|i| {
            if b.upper[i] > b.lower[i] {
                rng.random_range(b.lower[i]..=b.upper[i])
            } else {
                b.lower[i]
            }
        })
        .collect();
    let opts = NelderMeadOptions {
        max_iter: cfg.max_iter,
        f_tol: cfg.f_tol,
        x_tol: 1e-7,
        initial_step: vec![0.05, 0.05, 5.0 / DEPTH_UNIT_KM],
    };
    let r = nelder_mead(|x| problem.eval_internal(x), &x0, b, &opts);
    RestartOutcome {
        x: r.x,
        f: r.f,
        converged: r.converged,
    }
}

/// Multi-start maximum-likelihood estimate of the hypocenter for speed `v`.
pub fn estimate_hypocenter(
    triggers: &[Trigger],
    v: WaveSpeed,
    cfg: &EstimatorConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    WaveSpeed::new(v.v_kms, v.label)?;
    if triggers.len() < MIN_TRIGGERS {
        return Err(Error::InsufficientData {
            n: triggers.len(),
            required: MIN_TRIGGERS,
        });
    }
    let prep = Prepared::new(triggers, cfg.earth)?;
    let bounds = search_bounds(&prep, triggers, cfg);

    if prep.all_coincident() {
        let loc = triggers[prep.order[0]].location;
        let h = Hypocenter {
            epicentre: loc,
            depth_km: cfg.depth_min_km,
            t_origin: 0.0,
        };
        return Ok(assemble(&prep, h, v, cfg, cfg.restarts, 0, true, true, false));
    }

    let problem = Problem {
        prep: &prep,
        v: v.v_kms,
        bounds,
        depth: (cfg.depth_min_km, cfg.depth_max_km),
    };
    let outcomes: Vec<RestartOutcome> = if cfg.parallel {
        (0..cfg.restarts)
            .into_par_iter()
            .map(|i| run_restart(&problem, cfg, i))
            .collect()
    } else {
        (0..cfg.restarts).map(|i| run_restart(&problem, cfg, i)).collect()
    };

    let pick = |only_converged: bool| {
        let mut best: Option<usize> = None;
        for (i, o) in outcomes.iter().enumerate() {
            if only_converged && !o.converged {
                continue;
            }
            // Strict comparison keeps the lowest index on ties.
            if best.is_none_or(|b| o.f < outcomes[b].f) {
                best = Some(i);
            }
        }
        best
    };
    let n_converged = outcomes.iter().filter(|o| o.converged).count();
    let (best, converged) = match pick(true) {
        Some(i) => (i, true),
        None => (pick(false).expect("at least one restart"), false),
    };
    let x = &outcomes[best].x;
    let h = Hypocenter {
        epicentre: GeoPoint {
            lat: x[0],
            lon: x[1],
        },
        depth_km: (x[2] * DEPTH_UNIT_KM).clamp(problem.depth.0, problem.depth.1),
        t_origin: 0.0,
    };
    let boundary_hit = x
        .iter()
        .zip(problem.bounds.lower.iter().zip(&problem.bounds.upper))
        .any(|(xi, (lo, hi))| xi <= lo || xi >= hi);
    let fit = assemble(
        &prep,
        h,
        v,
        cfg,
        cfg.restarts,
        n_converged,
        converged,
        false,
        boundary_hit,
    );
    if converged {
        Ok(fit)
    } else {
        Err(Error::NonConvergence { best: Box::new(fit) })
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    prep: &Prepared,
    mut h: Hypocenter,
    v: WaveSpeed,
    cfg: &EstimatorConfig,
    restarts_used: usize,
    restarts_converged: usize,
    converged: bool,
    coincident: bool,
    boundary_hit: bool,
) -> FitResult {
    let residuals = prep.residual_set(&h, v.v_kms);
    h.t_origin = residuals.mean;
    let objective = prep.objective(h.epicentre.lat, h.epicentre.lon, h.depth_km, v.v_kms);
    let sigma2 = objective / prep.len() as f64;
    let log_likelihood = log_likelihood(sigma2, &residuals).ok();
    let mut fit = FitResult {
        wave: v,
        n: prep.len(),
        hypocenter: h,
        sigma2,
        residuals,
        objective,
        conf_intervals: ConfidenceIntervals::unbounded(cfg.confidence_level),
        converged,
        restarts_used,
        restarts_converged,
        log_likelihood,
        boundary_hit,
        degenerate: coincident,
    };
    if !coincident {
        match hessian_intervals(prep, &fit, cfg) {
            Ok(ci) => fit.conf_intervals = ci,
            Err(_) => fit.degenerate = true,
        }
    }
    fit
}

/// Central-difference Hessian of the objective in internal units.
fn objective_hessian(prep: &Prepared, fit: &FitResult) -> Matrix3<f64> {
    let v = fit.wave.v_kms;
    let x = [
        fit.hypocenter.epicentre.lat,
        fit.hypocenter.epicentre.lon,
        fit.hypocenter.depth_km / DEPTH_UNIT_KM,
    ];
    let f = |p: [f64; 3]| prep.objective(p[0], p[1], p[2] * DEPTH_UNIT_KM, v);
    let h = HESSIAN_STEP;
    let at = |di: [f64; 3]| f([x[0] + di[0], x[1] + di[1], x[2] + di[2]]);
    let unit = |i: usize, s: f64| {
        let mut d = [0.0; 3];
        d[i] = s;
        d
    };
    let add = |a: [f64; 3], b: [f64; 3]| [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let f0 = f(x);
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        m[(i, i)] = (at(unit(i, h)) - 2.0 * f0 + at(unit(i, -h))) / (h * h);
        for j in (i + 1)..3 {
            let pp = at(add(unit(i, h), unit(j, h)));
            let pm = at(add(unit(i, h), unit(j, -h)));
            let mp = at(add(unit(i, -h), unit(j, h)));
            let mm = at(add(unit(i, -h), unit(j, -h)));
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn hessian_intervals(
    prep: &Prepared,
    fit: &FitResult,
    cfg: &EstimatorConfig,
) -> Result<ConfidenceIntervals> {
    let hess = objective_hessian(prep, fit);
    let eig = SymmetricEigen::new(hess);
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    if !(max_eig > 0.0 && min_eig > SINGULAR_RATIO * max_eig) {
        return Err(Error::DegenerateGeometry(format!(
            "singular information matrix (eigenvalues {min_eig:.3e} .. {max_eig:.3e})"
        )));
    }
    let inv = hess
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("information matrix not invertible".into()))?;
    // Observed information of the profile likelihood is H / (2 sigma^2).
    let cov = inv * (2.0 * fit.sigma2);
    let z = normal_two_sided_z(cfg.confidence_level);
    let sd = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let h = &fit.hypocenter;
    let around = |x: f64, half: f64, lo: f64, hi: f64| Interval {
        lower: (x - half).max(lo),
        upper: (x + half).min(hi),
    };
    Ok(ConfidenceIntervals {
        level: cfg.confidence_level,
        lat: around(h.epicentre.lat, z * sd(0), -90.0, 90.0),
        lon: around(h.epicentre.lon, z * sd(1), -180.0, 180.0),
        depth_km: around(
            h.depth_km,
            z * sd(2) * DEPTH_UNIT_KM,
            cfg.depth_min_km,
            cfg.depth_max_km,
        ),
        degenerate: false,
    })
}

/// Recompute confidence intervals for a fit at another level.
pub fn hessian_confidence(
    fit: &FitResult,
    triggers: &[Trigger],
    level: f64,
    cfg: &EstimatorConfig,
) -> Result<ConfidenceIntervals> {
    if !fit.converged {
        return Err(Error::invalid("confidence intervals need a converged fit"));
    }
    let cfg = EstimatorConfig {
        confidence_level: level,
        ..cfg.clone()
    };
    cfg.validate()?;
    let prep = Prepared::new(triggers, cfg.earth)?;
    hessian_intervals(&prep, fit, &cfg)
}

/// Residuals at a given hypocenter, in input order.
pub fn residuals_at(
    h: &Hypocenter,
    triggers: &[Trigger],
    v: WaveSpeed,
    earth: EarthModel,
) -> Result<ResidualSet> {
    let prep = Prepared::new(triggers, earth)?;
    Ok(prep.residual_set(h, v.v_kms))
}
