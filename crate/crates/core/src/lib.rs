//! Near real-time classification of smartphone-network earthquake detections.
//!
//! A detection is a list of smartphone triggers (location + triggering time).
//! The triggering times are fitted by maximum likelihood to a travel-time
//! model on a spherical earth, once for the primary and once for the
//! secondary wave speed. A chi-square test on the residual variance then
//! decides whether the detection behaves like a propagating seismic wave.
//! A detection whose residual variance is too large under both speeds is
//! classified as false.
//!
//! Modules:
//!
//! * [`geo`]: great-circle and hypocentral distances, travel times.
//! * [`estimation`]: multi-start maximum-likelihood hypocenter fit.
//! * [`hypothesis`]: chi-square variance test and the dual-speed verdict.
//! * [`detector`]: the radius/window ratio detector over a trigger stream.
//! * [`simulate`]: Monte Carlo generation of true and false detections and
//!   calibration of the null variance.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod detector;
pub mod error;
pub mod estimation;
pub mod geo;
pub mod hypothesis;
pub mod optim;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use detector::{detect, Detection, DetectorConfig, Smartphone, StreamingDetector};
pub use error::{Error, Result};
pub use estimation::{
    centered_sse, estimate_hypocenter, estimate_variance, hessian_confidence, log_likelihood,
    ConfidenceIntervals, EstimatorConfig, FitResult, Hypocenter, Interval, ResidualSet, Trigger,
};
pub use geo::{
    epicentral_distance, expected_trigger_time, hypocentral_distance, EarthModel, GeoPoint,
    WaveKind, WaveSpeed,
};
pub use hypothesis::{
    chi_square_cdf, chi_square_quantile, classify, classify_with_speeds, run_test,
    test_statistic, Classification, TestSpec, VelocityTestResult, Verdict,
};
