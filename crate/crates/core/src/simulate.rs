//! Monte Carlo generation of true and false detections, calibration of the
//! null variance and assessment of classification and location errors.
//!
//! True events: epicentre uniform in a box, depth uniform in a range, a
//! fixed fraction of the network triggers at the modelled arrival time plus
//! Gaussian noise, and a fraction of the remaining phones trigger at uniform
//! random times. False events: a fraction of the network triggers at uniform
//! random times. Either stream is sorted and replayed through the detector.
//!
//! Every replication draws from its own seeded stream, so a study is
//! reproducible and independent of thread scheduling.

use log::warn;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Detection, DetectorConfig, Smartphone, StreamingDetector};
use crate::error::{Error, Result};
use crate::estimation::{estimate_hypocenter, EstimatorConfig, FitResult, Hypocenter, Trigger};
use crate::geo::{self, GeoPoint, WaveSpeed};
use crate::hypothesis::{critical_value, degrees_of_freedom, TestSpec, Verdict};
use crate::rng::{child_rng, derive_seed, Rng as SimRng};
use crate::stats::Summary;

pub const LIMA_LAT: (f64, f64) = (-12.39, -11.74);
pub const LIMA_LON: (f64, f64) = (-77.17, -76.66);

/// Fewest simulated detections accepted by calibration and error assessment.
pub const MIN_SIMULATIONS: usize = 100;

const NETWORK_STREAM: u64 = 0x4E45_5457;
const TRUE_STREAM: u64 = 0x5452_5545;
const FALSE_STREAM: u64 = 0x4641_4C53;
const FIT_STREAM: u64 = 0x4649_5400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    Uniform,
    /// Use these phones as given (e.g. loaded from a roster file).
    Roster(Vec<Smartphone>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub count: usize,
    pub lat: (f64, f64),
    pub lon: (f64, f64),
    pub placement: Placement,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            count: 1000,
            lat: LIMA_LAT,
            lon: LIMA_LON,
            placement: Placement::Uniform,
        }
    }
}

fn check_box(lat: (f64, f64), lon: (f64, f64)) -> Result<()> {
    GeoPoint::new(lat.0, lon.0)?;
    GeoPoint::new(lat.1, lon.1)?;
    if lat.0 > lat.1 || lon.0 > lon.1 {
        return Err(Error::invalid("coordinate box bounds are not ordered"));
    }
    Ok(())
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{what} {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_window(w: (f64, f64), what: &str) -> Result<()> {
    if !(w.0.is_finite() && w.1.is_finite() && w.0 <= w.1) {
        return Err(Error::invalid(format!("{what} [{}, {}] is not ordered", w.0, w.1)));
    }
    Ok(())
}

fn uniform(rng: &mut SimRng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..=range.1)
    } else {
        range.0
    }
}

pub fn generate_network(spec: &NetworkSpec, rng: &mut SimRng) -> Result<Vec<Smartphone>> {
    match &spec.placement {
        Placement::Roster(phones) => {
            if phones.is_empty() {
                return Err(Error::invalid("empty roster"));
            }
            Ok(phones.clone())
        }
        Placement::Uniform => {
            if spec.count == 0 {
                return Err(Error::invalid("network count must be >= 1"));
            }
            check_box(spec.lat, spec.lon)?;
            let width = spec.count.to_string().len().max(4);
            (0..spec.count)
                .map(|i| {
                    let lat = uniform(rng, spec.lat);
                    let lon = uniform(rng, spec.lon);
                    Ok(Smartphone {
                        id: format!("p{i:0width$}"),
                        location: GeoPoint::new(lat, lon)?,
                        active: true,
                    })
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEventSpec {
    pub epicentre_lat: (f64, f64),
    pub epicentre_lon: (f64, f64),
    pub depth_km: (f64, f64),
    pub wave: WaveSpeed,
    pub t_origin: f64,
    pub p_triggering: f64,
    pub noise_variance: f64,
    /// Fraction of the non-triggering phones that trigger at random.
    pub p_spurious: f64,
    pub spurious_window: (f64, f64),
}

impl Default for TrueEventSpec {
    fn default() -> Self {
        TrueEventSpec {
            epicentre_lat: LIMA_LAT,
            epicentre_lon: LIMA_LON,
            depth_km: (0.0, 100.0),
            wave: WaveSpeed::primary(),
            t_origin: 0.0,
            p_triggering: 0.70,
            noise_variance: 1.67,
            p_spurious: 0.06,
            spurious_window: (0.0, 12.0),
        }
    }
}

impl TrueEventSpec {
    pub fn validate(&self) -> Result<()> {
        check_box(self.epicentre_lat, self.epicentre_lon)?;
        if !(self.depth_km.0 >= 0.0 && self.depth_km.0 <= self.depth_km.1) {
            return Err(Error::invalid("depth range must satisfy 0 <= min <= max"));
        }
        WaveSpeed::new(self.wave.v_kms, self.wave.label)?;
        check_prob(self.p_triggering, "triggering probability")?;
        check_prob(self.p_spurious, "spurious probability")?;
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be >= 0"));
        }
        check_window(self.spurious_window, "spurious window")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalseEventSpec {
    pub p_triggering: f64,
    pub window: (f64, f64),
}

impl Default for FalseEventSpec {
    fn default() -> Self {
        FalseEventSpec {
            p_triggering: 0.30,
            window: (0.0, 12.0),
        }
    }
}

impl FalseEventSpec {
    pub fn validate(&self) -> Result<()> {
        check_prob(self.p_triggering, "triggering probability")?;
        check_window(self.window, "trigger window")
    }
}

/// A simulated trigger stream with its detector outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedEvent {
    /// Every trigger, sorted by time.
    pub stream: Vec<Trigger>,
    /// Ground truth; `None` for false events.
    pub truth: Option<Hypocenter>,
    pub detection: Option<Detection>,
}

fn count_of(p: f64, total: usize) -> usize {
    ((p * total as f64).round() as usize).min(total)
}

fn sort_stream(stream: &mut [Trigger]) {
    stream.sort_by(|a, b| a.time.total_cmp(&b.time).then_with(|| a.id.cmp(&b.id)));
}

fn run_detector(
    network: &[Smartphone],
    stream: &[Trigger],
    det: &DetectorConfig,
) -> Result<Option<Detection>> {
    StreamingDetector::new(network, *det)?.run(stream.iter().cloned())
}

/// Trigger stream of a true event (no detector applied).
pub fn true_event_stream(
    network: &[Smartphone],
    ev: &TrueEventSpec,
    rng: &mut SimRng,
) -> Result<(Vec<Trigger>, Hypocenter)> {
    ev.validate()?;
    let truth = Hypocenter {
        epicentre: GeoPoint::new(uniform(rng, ev.epicentre_lat), uniform(rng, ev.epicentre_lon))?,
        depth_km: uniform(rng, ev.depth_km),
        t_origin: ev.t_origin,
    };
    let earth = geo::EarthModel::default();
    let n = network.len();
    let n_trig = count_of(ev.p_triggering, n);
    let mut chosen = vec![false; n];
    let triggering = sample(rng, n, n_trig).into_vec();
    for &i in &triggering {
        chosen[i] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
    let n_spur = count_of(ev.p_spurious, rest.len());
    let spurious: Vec<usize> = sample(rng, rest.len(), n_spur)
        .into_iter()
        .map(|k| rest[k])
        .collect();

    let noise = Normal::new(0.0, ev.noise_variance.sqrt())
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
    let mut stream = Vec::with_capacity(n_trig + n_spur);
    for &i in &triggering {
        let p = &network[i];
        let epi = geo::epicentral_distance(truth.epicentre, p.location, earth)?;
        let hypo = geo::hypocentral_distance(epi, truth.depth_km, earth)?;
        let t = geo::expected_trigger_time(hypo, ev.wave, truth.t_origin)? + noise.sample(rng);
        stream.push(Trigger::with_id(p.id.clone(), p.location, t));
    }
    for &i in &spurious {
        let p = &network[i];
        let t = uniform(rng, ev.spurious_window);
        stream.push(Trigger::with_id(p.id.clone(), p.location, t));
    }
    sort_stream(&mut stream);
    Ok((stream, truth))
}

pub fn simulate_true_event(
    network: &[Smartphone],
    ev: &TrueEventSpec,
    det: &DetectorConfig,
    rng: &mut SimRng,
) -> Result<SimulatedEvent> {
    let (stream, truth) = true_event_stream(network, ev, rng)?;
    let detection = run_detector(network, &stream, det)?;
    Ok(SimulatedEvent {
        stream,
        truth: Some(truth),
        detection,
    })
}

pub fn simulate_true_detection(
    network: &[Smartphone],
    ev: &TrueEventSpec,
    det: &DetectorConfig,
    rng: &mut SimRng,
) -> Result<Option<(Detection, Hypocenter)>> {
    let sim = simulate_true_event(network, ev, det, rng)?;
    Ok(sim.detection.zip(sim.truth))
}

/// Trigger stream of a false event (no detector applied).
pub fn false_event_stream(
    network: &[Smartphone],
    ev: &FalseEventSpec,
    rng: &mut SimRng,
) -> Result<Vec<Trigger>> {
    ev.validate()?;
    let n_trig = count_of(ev.p_triggering, network.len());
    let mut stream: Vec<Trigger> = sample(rng, network.len(), n_trig)
        .into_iter()
        .map(|i| {
            let p = &network[i];
            Trigger::with_id(p.id.clone(), p.location, uniform(rng, ev.window))
        })
        .collect();
    sort_stream(&mut stream);
    Ok(stream)
}

pub fn simulate_false_event(
    network: &[Smartphone],
    ev: &FalseEventSpec,
    det: &DetectorConfig,
    rng: &mut SimRng,
) -> Result<SimulatedEvent> {
    let stream = false_event_stream(network, ev, rng)?;
    let detection = run_detector(network, &stream, det)?;
    Ok(SimulatedEvent {
        stream,
        truth: None,
        detection,
    })
}

pub fn simulate_false_detection(
    network: &[Smartphone],
    ev: &FalseEventSpec,
    det: &DetectorConfig,
    rng: &mut SimRng,
) -> Result<Option<Detection>> {
    Ok(simulate_false_event(network, ev, det, rng)?.detection)
}

/// Residual variance of one simulated detection, as seen by the test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSample {
    pub sigma2: f64,
    pub n: usize,
}

/// Fraction of samples whose statistic exceeds the critical value at `delta`.
pub fn rejection_rate(samples: &[VarianceSample], delta: f64, alpha: f64) -> Result<f64> {
    let mut rejected = 0usize;
    for s in samples {
        let df = degrees_of_freedom(s.n)?;
        if df as f64 * s.sigma2 / delta > critical_value(s.n, alpha)? {
            rejected += 1;
        }
    }
    Ok(rejected as f64 / samples.len() as f64)
}

/// Smallest null variance whose empirical rejection rate is at most `alpha`.
///
/// The rate is a non-increasing step function of `delta`; bisection brackets
/// its last step to relative width `1e-4`. When even `floor` meets the target
/// (all variances ~0), `floor` is returned.
pub fn calibrate_delta(samples: &[VarianceSample], alpha: f64, floor: f64) -> Result<f64> {
    if samples.len() < MIN_SIMULATIONS {
        return Err(Error::InsufficientReplications {
            got: samples.len(),
            required: MIN_SIMULATIONS,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    if !(floor > 0.0) {
        return Err(Error::invalid("delta floor must be > 0"));
    }
    // Each sample is rejected exactly when delta < df * sigma2 / critical.
    let mut cut = Vec::with_capacity(samples.len());
    for s in samples {
        let df = degrees_of_freedom(s.n)? as f64;
        cut.push(df * s.sigma2 / critical_value(s.n, alpha)?);
    }
    let rate = |d: f64| cut.iter().filter(|&&c| d < c).count() as f64 / cut.len() as f64;

    if rate(floor) <= alpha {
        warn!("all simulated variances are negligible; returning delta floor {floor}");
        return Ok(floor);
    }
    let (mut lo, mut hi) = (floor, cut.iter().cloned().fold(floor, f64::max) * 2.0);
    while (hi - lo) > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if rate(mid) <= alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorAssessment {
    pub epicentre_km: Summary,
    pub depth_km: Summary,
}

/// Location errors of fitted true detections against their ground truth.
pub fn assess_errors(pairs: &[(Hypocenter, Hypocenter)]) -> Result<ErrorAssessment> {
    if pairs.len() < MIN_SIMULATIONS {
        return Err(Error::InsufficientReplications {
            got: pairs.len(),
            required: MIN_SIMULATIONS,
        });
    }
    let (epi, depth) = location_errors(pairs)?;
    Ok(ErrorAssessment {
        epicentre_km: Summary::of(&epi).expect("non-empty"),
        depth_km: Summary::of(&depth).expect("non-empty"),
    })
}

fn location_errors(pairs: &[(Hypocenter, Hypocenter)]) -> Result<(Vec<f64>, Vec<f64>)> {
    let earth = geo::EarthModel::default();
    let mut epi = Vec::with_capacity(pairs.len());
    let mut depth = Vec::with_capacity(pairs.len());
    for (truth, est) in pairs {
        epi.push(geo::epicentral_distance(truth.epicentre, est.epicentre, earth)?);
        depth.push((truth.depth_km - est.depth_km).abs());
    }
    Ok((epi, depth))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Simulated events per arm (true and false).
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub network: NetworkSpec,
    pub true_event: TrueEventSpec,
    pub false_event: FalseEventSpec,
    pub detector: DetectorConfig,
    pub estimator: EstimatorConfig,
    pub speeds: (WaveSpeed, WaveSpeed),
    pub delta_floor: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            replications: 1000,
            alpha: 0.01,
            seed: 0,
            network: NetworkSpec::default(),
            true_event: TrueEventSpec::default(),
            false_event: FalseEventSpec::default(),
            detector: DetectorConfig::default(),
            estimator: EstimatorConfig::default(),
            speeds: (WaveSpeed::primary(), WaveSpeed::secondary()),
            delta_floor: 1e-6,
        }
    }
}

/// Fits of one simulated detection under both speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionFits {
    pub replication: usize,
    pub n: usize,
    pub primary: FitSummary,
    pub secondary: FitSummary,
    pub truth: Option<Hypocenter>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub hypocenter: Hypocenter,
    pub sigma2: f64,
    pub converged: bool,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            hypocenter: f.hypocenter,
            sigma2: f.sigma2,
            converged: f.converged,
        }
    }
}

impl DetectionFits {
    /// The test rejects under both speeds exactly when the smaller variance
    /// exceeds the threshold, since both fits share `n`.
    pub fn classification_sample(&self) -> VarianceSample {
        VarianceSample {
            sigma2: self.primary.sigma2.min(self.secondary.sigma2),
            n: self.n,
        }
    }

    pub fn verdict(&self, spec: &TestSpec) -> Result<Verdict> {
        let crit = critical_value(self.n, spec.alpha)?;
        let df = degrees_of_freedom(self.n)? as f64;
        let rej = |s2: f64| df * s2 / spec.delta > crit;
        Ok(Verdict::from_rejections(
            rej(self.primary.sigma2),
            rej(self.secondary.sigma2),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub delta: f64,
    pub alpha: f64,
    /// True detections classified false at `delta`.
    pub type1: f64,
    /// False detections classified true at `delta`.
    pub type2: f64,
    pub epicentre_errors_km: Summary,
    pub depth_errors_km: Summary,
    pub replications: usize,
    pub seed: u64,
    pub true_detected: usize,
    pub false_detected: usize,
    /// Replications the detector never fired on, or with fewer than 4 triggers.
    pub true_excluded: usize,
    pub false_excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStudy {
    pub report: CalibrationReport,
    pub true_fits: Vec<DetectionFits>,
    pub false_fits: Vec<DetectionFits>,
    pub network: Vec<Smartphone>,
}

impl CalibrationStudy {
    /// Epicentre and depth errors (km) of every fitted true detection, primary speed.
    pub fn location_errors(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let pairs: Vec<(Hypocenter, Hypocenter)> = self
            .true_fits
            .iter()
            .filter_map(|f| f.truth.map(|t| (t, f.primary.hypocenter)))
            .collect();
        location_errors(&pairs)
    }
}

fn fit_detection(
    triggers: &[Trigger],
    replication: usize,
    truth: Option<Hypocenter>,
    cfg: &StudyConfig,
    stream_tag: u64,
) -> Result<Option<DetectionFits>> {
    if triggers.len() < crate::estimation::MIN_TRIGGERS {
        return Ok(None);
    }
    let est = EstimatorConfig {
        seed: derive_seed(cfg.seed, FIT_STREAM ^ stream_tag, replication as u64),
        ..cfg.estimator.clone()
    };
    let fit = |v: WaveSpeed| match estimate_hypocenter(triggers, v, &est) {
        Ok(f) => Ok(f),
        Err(Error::NonConvergence { best }) => Ok(*best),
        Err(e) => Err(e),
    };
    let p = fit(cfg.speeds.0)?;
    let s = fit(cfg.speeds.1)?;
    Ok(Some(DetectionFits {
        replication,
        n: triggers.len(),
        primary: (&p).into(),
        secondary: (&s).into(),
        truth,
    }))
}

/// Network shared by all replications of a study.
pub fn study_network(cfg: &StudyConfig) -> Result<Vec<Smartphone>> {
    let mut rng = child_rng(cfg.seed, NETWORK_STREAM, 0);
    generate_network(&cfg.network, &mut rng)
}

pub fn true_replication(
    network: &[Smartphone],
    cfg: &StudyConfig,
    index: usize,
) -> Result<SimulatedEvent> {
    let mut rng = child_rng(cfg.seed, TRUE_STREAM, index as u64);
    simulate_true_event(network, &cfg.true_event, &cfg.detector, &mut rng)
}

pub fn false_replication(
    network: &[Smartphone],
    cfg: &StudyConfig,
    index: usize,
) -> Result<SimulatedEvent> {
    let mut rng = child_rng(cfg.seed, FALSE_STREAM, index as u64);
    simulate_false_event(network, &cfg.false_event, &cfg.detector, &mut rng)
}

fn run_arm(
    network: &[Smartphone],
    cfg: &StudyConfig,
    tag: u64,
) -> Result<Vec<Option<DetectionFits>>> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let sim = if tag == TRUE_STREAM {
                true_replication(network, cfg, i)?
            } else {
                false_replication(network, cfg, i)?
            };
            match sim.detection {
                Some(d) => fit_detection(&d.triggers, i, sim.truth, cfg, tag),
                None => Ok(None),
            }
        })
        .collect()
}

/// Simulate both arms, calibrate the null variance on the true arm and
/// evaluate both error rates and location errors at the calibrated value.
pub fn run_calibration(cfg: &StudyConfig) -> Result<CalibrationStudy> {
    if cfg.replications < MIN_SIMULATIONS {
        return Err(Error::InsufficientReplications {
            got: cfg.replications,
            required: MIN_SIMULATIONS,
        });
    }
    cfg.true_event.validate()?;
    cfg.false_event.validate()?;
    cfg.detector.validate()?;
    cfg.estimator.validate()?;
    let network = study_network(cfg)?;

    let true_all = run_arm(&network, cfg, TRUE_STREAM)?;
    let false_all = run_arm(&network, cfg, FALSE_STREAM)?;
    let true_fits: Vec<DetectionFits> = true_all.into_iter().flatten().collect();
    let false_fits: Vec<DetectionFits> = false_all.into_iter().flatten().collect();

    let samples: Vec<VarianceSample> = true_fits.iter().map(|f| f.classification_sample()).collect();
    let delta = calibrate_delta(&samples, cfg.alpha, cfg.delta_floor)?;
    let spec = TestSpec {
        delta,
        alpha: cfg.alpha,
    };

    let type1 = fraction(&true_fits, |f| Ok(f.verdict(&spec)? == Verdict::FalseDetection))?;
    let type2 = fraction(&false_fits, |f| Ok(f.verdict(&spec)? == Verdict::TrueEarthquake))?;

    let pairs: Vec<(Hypocenter, Hypocenter)> = true_fits
        .iter()
        .filter_map(|f| f.truth.map(|t| (t, f.primary.hypocenter)))
        .collect();
    let errors = assess_errors(&pairs)?;

    let report = CalibrationReport {
        delta,
        alpha: cfg.alpha,
        type1,
        type2,
        epicentre_errors_km: errors.epicentre_km,
        depth_errors_km: errors.depth_km,
        replications: cfg.replications,
        seed: cfg.seed,
        true_detected: true_fits.len(),
        false_detected: false_fits.len(),
        true_excluded: cfg.replications - true_fits.len(),
        false_excluded: cfg.replications - false_fits.len(),
    };
    Ok(CalibrationStudy {
        report,
        true_fits,
        false_fits,
        network,
    })
}

fn fraction<F>(fits: &[DetectionFits], pred: F) -> Result<f64>
where
    F: Fn(&DetectionFits) -> Result<bool>,
{
    if fits.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for f in fits {
        if pred(f)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / fits.len() as f64)
}
