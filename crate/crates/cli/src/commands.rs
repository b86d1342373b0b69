use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use quakeml_core::hypothesis::test_fit;
use quakeml_core::simulate::{
    false_replication, run_calibration, study_network, true_replication, CalibrationStudy,
    SimulatedEvent,
};
use quakeml_core::stats::Summary;
use quakeml_core::{
    estimate_hypocenter, Detection, Error, EstimatorConfig, FitResult, Smartphone,
    StreamingDetector, Trigger, Verdict, WaveSpeed,
};

use crate::report::{
    BoxPlots, CalibrationOutput, ClassificationReport, ClassifyEcho, EstimateReport, Histogram,
    InputDigest, ResidualRow, SimulationSummary,
};
use crate::{
    check_min_triggers, exit, io, CalibrateArgs, ClassifyArgs, CliError, DetectArgs,
    DetectorArgs, EstimateArgs, EventKind, SimulateArgs,
};

fn fit_or_best(triggers: &[Trigger], v: WaveSpeed, cfg: &EstimatorConfig) -> Result<FitResult, CliError> {
    match estimate_hypocenter(triggers, v, cfg) {
        Ok(f) => Ok(f),
        Err(Error::NonConvergence { best }) => {
            warn!("no restart converged at v = {} km/s; reporting the best one", v.v_kms);
            Ok(*best)
        }
        Err(e) => Err(e.into()),
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

/// Fit both speeds and test each fit.
pub fn classify(triggers: &[Trigger], args: &ClassifyArgs) -> Result<ClassificationReport, CliError> {
    let spec = args.spec()?;
    let (vp, vs) = args.speeds.speeds()?;
    let est = args.estimator.to_config(args.seed.seed)?;
    check_min_triggers(triggers.len())?;

    let start = Instant::now();
    let p = test_fit(fit_or_best(triggers, vp, &est)?, &spec)?;
    let s = test_fit(fit_or_best(triggers, vs, &est)?, &spec)?;
    let verdict = Verdict::from_rejections(p.rejected, s.rejected);
    let timing_ms = elapsed_ms(start);

    Ok(ClassificationReport {
        verdict: verdict.as_str().to_string(),
        tests: vec![(&p).into(), (&s).into()],
        timing_ms,
        seed: args.seed.seed,
        config: ClassifyEcho::new(&spec, vp.v_kms, vs.v_kms, &est),
        input: InputDigest::of(triggers),
    })
}

pub(crate) fn run_classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let triggers = io::read_triggers(&args.input, false)?;
    let report = classify(&triggers, args)?;
    info!("classified n = {} in {:.1} ms", triggers.len(), report.timing_ms);
    emit(&report, args.output.as_deref(), out)?;
    Ok(if report.verdict == Verdict::FalseDetection.as_str() {
        exit::FALSE_DETECTION
    } else {
        exit::TRUE_EARTHQUAKE
    })
}

pub fn estimate(triggers: &[Trigger], args: &EstimateArgs) -> Result<EstimateReport, CliError> {
    let v = args.speed()?;
    let est = args.estimator.to_config(args.seed.seed)?;
    check_min_triggers(triggers.len())?;

    let start = Instant::now();
    let fit = fit_or_best(triggers, v, &est)?;
    let timing_ms = elapsed_ms(start);
    if fit.degenerate {
        warn!("degenerate trigger geometry; intervals are unbounded");
    }
    let residuals = triggers
        .iter()
        .zip(&fit.residuals.deltas)
        .map(|(t, &r)| ResidualRow {
            id: t.id.clone(),
            residual: r,
        })
        .collect();

    Ok(EstimateReport {
        v: v.v_kms,
        estimate: (&fit).into(),
        sigma2: fit.sigma2,
        t_origin: fit.hypocenter.t_origin,
        objective: fit.objective,
        log_likelihood: fit.log_likelihood,
        wave: v.label,
        converged: fit.converged,
        restarts_used: fit.restarts_used,
        restarts_converged: fit.restarts_converged,
        boundary_hit: fit.boundary_hit,
        degenerate: fit.degenerate,
        residuals,
        timing_ms,
        seed: args.seed.seed,
        config: (&est).into(),
        input: InputDigest::of(triggers),
    })
}

pub(crate) fn run_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let triggers = io::read_triggers(&args.input, false)?;
    let report = estimate(&triggers, args)?;
    emit(&report, args.output.as_deref(), out)?;
    Ok(exit::OK)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn plot_rows(i: usize, network: &[Smartphone], sim: &SimulatedEvent) -> Vec<Vec<String>> {
    let times: HashMap<&str, f64> = sim
        .stream
        .iter()
        .filter_map(|t| t.id.as_deref().map(|id| (id, t.time)))
        .collect();
    network
        .iter()
        .map(|p| {
            let t = times.get(p.id.as_str());
            vec![
                i.to_string(),
                p.id.clone(),
                p.location.lat.to_string(),
                p.location.lon.to_string(),
                u8::from(t.is_some()).to_string(),
                t.map(|t| t.to_string()).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Generate events and write them under `args.out`:
///
/// * `roster.csv`: the network.
/// * `triggers_NNNN.csv`: the full trigger stream of each replication.
/// * `truth.csv`: hypocentres of true events (header only for false events).
/// * `detections.csv`: detector outcome per replication.
/// * `plot_points.csv`: every phone per replication with its trigger flag and time.
pub fn simulate(args: &SimulateArgs) -> Result<SimulationSummary, CliError> {
    let cfg = args.scenario.study(args.seed.seed)?;
    create_dir(&args.out)?;
    let network = study_network(&cfg)?;
    io::save_roster(&args.out.join("roster.csv"), &network)?;

    let width = args.replications.saturating_sub(1).to_string().len().max(4);
    let mut truth = Vec::new();
    let mut detections = Vec::new();
    let mut plot = Vec::new();
    for i in 0..args.replications {
        let sim = match args.kind {
            EventKind::True => true_replication(&network, &cfg, i)?,
            EventKind::False => false_replication(&network, &cfg, i)?,
        };
        io::save_triggers(&args.out.join(format!("triggers_{i:0width$}.csv")), &sim.stream)?;
        if let Some(h) = sim.truth {
            truth.push(vec![
                i.to_string(),
                h.epicentre.lat.to_string(),
                h.epicentre.lon.to_string(),
                h.depth_km.to_string(),
                h.t_origin.to_string(),
            ]);
        }
        detections.push(match &sim.detection {
            Some(d) => vec![
                i.to_string(),
                "1".into(),
                d.triggers.len().to_string(),
                d.detection_time.to_string(),
                d.center.lat.to_string(),
                d.center.lon.to_string(),
            ],
            None => vec![i.to_string(), "0".into(), "0".into(), String::new(), String::new(), String::new()],
        });
        plot.extend(plot_rows(i, &network, &sim));
    }
    let detected = detections.iter().filter(|r| r[1] == "1").count();

    io::save_rows(
        &args.out.join("truth.csv"),
        &["replication", "lat", "lon", "depth_km", "t_origin"],
        truth,
    )?;
    io::save_rows(
        &args.out.join("detections.csv"),
        &["replication", "detected", "n", "detection_time", "center_lat", "center_lon"],
        detections,
    )?;
    io::save_rows(
        &args.out.join("plot_points.csv"),
        &["replication", "id", "lat", "lon", "triggered", "t"],
        plot,
    )?;

    Ok(SimulationSummary {
        kind: match args.kind {
            EventKind::True => "true",
            EventKind::False => "false",
        }
        .into(),
        replications: args.replications,
        detected,
        detection_rate: if args.replications == 0 {
            0.0
        } else {
            detected as f64 / args.replications as f64
        },
        seed: args.seed.seed,
    })
}

pub(crate) fn run_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let summary = simulate(args)?;
    emit(&summary, None, out)?;
    Ok(exit::OK)
}

/// Run the calibration study and summarize it.
pub fn calibrate(args: &CalibrateArgs) -> Result<(CalibrationOutput, CalibrationStudy), CliError> {
    let mut cfg = args.scenario.study(args.seed.seed)?;
    cfg.replications = args.replications;
    cfg.alpha = args.alpha;
    cfg.speeds = args.speeds.speeds()?;
    cfg.estimator = args.estimator.to_config(args.seed.seed)?;
    if args.bins == 0 {
        return Err(CliError::Usage("--bins must be >= 1".into()));
    }

    let start = Instant::now();
    let study = run_calibration(&cfg)?;
    let timing_ms = elapsed_ms(start);
    let r = &study.report;
    let sample = |fits: &[quakeml_core::simulate::DetectionFits]| -> Vec<f64> {
        fits.iter().map(|f| f.classification_sample().sigma2).collect()
    };
    let output = CalibrationOutput {
        delta: r.delta,
        alpha: r.alpha,
        type1: r.type1,
        type2: r.type2,
        replications: r.replications,
        true_detected: r.true_detected,
        false_detected: r.false_detected,
        true_excluded: r.true_excluded,
        false_excluded: r.false_excluded,
        errors: BoxPlots {
            epicentre_km: r.epicentre_errors_km,
            depth_km: r.depth_errors_km,
        },
        histogram: Histogram::build(&sample(&study.true_fits), &sample(&study.false_fits), args.bins),
        timing_ms,
        seed: r.seed,
    };
    Ok((output, study))
}

fn write_study(dir: &Path, output: &CalibrationOutput, study: &CalibrationStudy) -> Result<(), CliError> {
    create_dir(dir)?;
    let arm = |name: &'static str, fits: &[quakeml_core::simulate::DetectionFits]| {
        fits.iter()
            .map(move |f| {
                vec![
                    name.to_string(),
                    f.replication.to_string(),
                    f.n.to_string(),
                    f.primary.sigma2.to_string(),
                    f.secondary.sigma2.to_string(),
                ]
            })
            .collect::<Vec<_>>()
    };
    let mut rows = arm("true", &study.true_fits);
    rows.extend(arm("false", &study.false_fits));
    io::save_rows(
        &dir.join("sigma2.csv"),
        &["arm", "replication", "n", "sigma2_primary", "sigma2_secondary"],
        rows,
    )?;

    let (epi, depth) = study.location_errors()?;
    io::save_rows(
        &dir.join("errors.csv"),
        &["replication", "epicentre_km", "depth_km"],
        study
            .true_fits
            .iter()
            .zip(epi.iter().zip(&depth))
            .map(|(f, (e, d))| vec![f.replication.to_string(), e.to_string(), d.to_string()]),
    )?;

    let h = &output.histogram;
    io::save_rows(
        &dir.join("histogram.csv"),
        &["bin_lower", "bin_upper", "true_count", "false_count"],
        (0..h.true_counts.len()).map(|k| {
            vec![
                h.edges[k].to_string(),
                h.edges[k + 1].to_string(),
                h.true_counts[k].to_string(),
                h.false_counts[k].to_string(),
            ]
        }),
    )?;

    let boxes = [("epicentre_km", &epi), ("depth_km", &depth)];
    io::save_rows(
        &dir.join("boxplot.csv"),
        &["quantity", "min", "q1", "median", "q3", "max"],
        boxes.iter().filter_map(|(name, v)| {
            Summary::of(v).map(|s| {
                vec![
                    name.to_string(),
                    s.min.to_string(),
                    s.q1.to_string(),
                    s.median.to_string(),
                    s.q3.to_string(),
                    s.max.to_string(),
                ]
            })
        }),
    )
}

pub(crate) fn run_calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (output, study) = calibrate(args)?;
    if let Some(dir) = &args.out {
        write_study(dir, &output, &study)?;
    }
    emit(&output, args.output.as_deref(), out)?;
    Ok(exit::OK)
}

/// Replay the detector over a time-ordered stream.
pub fn detect(
    stream: &[Trigger],
    roster: &[Smartphone],
    args: &DetectorArgs,
) -> Result<Option<Detection>, CliError> {
    let cfg = args.to_config()?;
    let mut det = StreamingDetector::new(roster, cfg)?;
    Ok(det.run(stream.iter().cloned())?)
}

pub(crate) fn run_detect(args: &DetectArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let stream = io::read_triggers(&args.stream, true)?;
    let roster = io::read_roster(&args.roster)?;
    let Some(d) = detect(&stream, &roster, &args.detector)? else {
        let _ = writeln!(err, "no detection");
        return Ok(exit::NO_DETECTION);
    };
    let _ = writeln!(
        err,
        "detection at t = {} s: n = {}, active = {}, centre = ({}, {})",
        d.detection_time,
        d.triggers.len(),
        d.active_count,
        d.center.lat,
        d.center.lon
    );
    match &args.output {
        Some(path) => io::save_triggers(path, &d.triggers)?,
        None => io::write_triggers(&mut *out, &d.triggers).map_err(|e| CliError::Usage(e.to_string()))?,
    }
    Ok(exit::OK)
}
