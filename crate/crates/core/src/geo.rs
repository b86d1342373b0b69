//! Spherical-earth geodesy and travel-time kinematics.
//!
//! Coordinates are degrees at the API boundary and radians internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EARTH_RADIUS_KM: f64 = 6371.0;
pub const PRIMARY_SPEED_KMS: f64 = 7.8;
pub const SECONDARY_SPEED_KMS: f64 = 4.5;

/// A surface location in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite coordinates ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn validate(&self) -> Result<()> {
        GeoPoint::new(self.lat, self.lon).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    pub radius_km: f64,
}

impl EarthModel {
    pub fn new(radius_km: f64) -> Result<Self> {
        if !(radius_km.is_finite() && radius_km > 0.0) {
            return Err(Error::invalid(format!("earth radius {radius_km} must be > 0")));
        }
        Ok(EarthModel { radius_km })
    }
}

impl Default for EarthModel {
    fn default() -> Self {
        EarthModel {
            radius_km: DEFAULT_EARTH_RADIUS_KM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Primary,
    Secondary,
}

/// Propagation speed assumed for every trigger of a detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeed {
    pub v_kms: f64,
    pub label: WaveKind,
}

impl WaveSpeed {
    pub fn new(v_kms: f64, label: WaveKind) -> Result<Self> {
        if !(v_kms.is_finite() && v_kms > 0.0) {
            return Err(Error::invalid(format!("wave speed {v_kms} must be > 0")));
        }
        Ok(WaveSpeed { v_kms, label })
    }

    pub fn primary() -> Self {
        WaveSpeed {
            v_kms: PRIMARY_SPEED_KMS,
            label: WaveKind::Primary,
        }
    }

    pub fn secondary() -> Self {
        WaveSpeed {
            v_kms: SECONDARY_SPEED_KMS,
            label: WaveKind::Secondary,
        }
    }
}

/// Great-circle (haversine) distance in km.
pub fn epicentral_distance(a: GeoPoint, b: GeoPoint, earth: EarthModel) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    Ok(haversine_km(
        a.lat.to_radians(),
        a.lon.to_radians(),
        b.lat.to_radians(),
        b.lon.to_radians(),
        earth.radius_km,
    ))
}

/// Straight-line distance from a hypocenter at `depth` below the epicentre to
/// a surface point `epi_dist` km (along the surface) away.
pub fn hypocentral_distance(epi_dist: f64, depth: f64, earth: EarthModel) -> Result<f64> {
    let r = earth.radius_km;
    if !epi_dist.is_finite() || epi_dist < 0.0 || epi_dist > std::f64::consts::PI * r * (1.0 + 1e-12)
    {
        return Err(Error::invalid(format!(
            "epicentral distance {epi_dist} outside [0, pi*R]"
        )));
    }
    if !depth.is_finite() || depth < 0.0 || depth >= r {
        return Err(Error::invalid(format!("depth {depth} outside [0, R)")));
    }
    Ok(chord_distance(epi_dist, depth, r))
}

pub fn expected_trigger_time(hypo_dist: f64, v: WaveSpeed, t_origin: f64) -> Result<f64> {
    if !hypo_dist.is_finite() || hypo_dist < 0.0 {
        return Err(Error::invalid(format!("hypocentral distance {hypo_dist} < 0")));
    }
    if !(v.v_kms.is_finite() && v.v_kms > 0.0) {
        return Err(Error::invalid(format!("wave speed {} must be > 0", v.v_kms)));
    }
    Ok(hypo_dist / v.v_kms + t_origin)
}

// Unchecked kernels shared with the estimator's inner loop.

#[inline]
pub(crate) fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64, radius: f64) -> f64 {
    let (cos1, cos2) = (lat1.cos(), lat2.cos());
    haversine_km_with_cos(lat1, lon1, cos1, lat2, lon2, cos2, radius)
}

#[inline]
pub(crate) fn haversine_km_with_cos(
    lat1: f64,
    lon1: f64,
    cos_lat1: f64,
    lat2: f64,
    lon2: f64,
    cos_lat2: f64,
    radius: f64,
) -> f64 {
    let s_lat = ((lat2 - lat1) * 0.5).sin();
    let s_lon = ((lon2 - lon1) * 0.5).sin();
    let h = (s_lat * s_lat + cos_lat1 * cos_lat2 * s_lon * s_lon).clamp(0.0, 1.0);
    2.0 * radius * h.sqrt().asin()
}

/// `sqrt(d^2 + 4R(R-d) sin^2(D/2R))`. Also evaluated at slightly negative
/// depths by the finite-difference Hessian at the surface bound.
#[inline]
pub(crate) fn chord_distance(epi_dist: f64, depth: f64, radius: f64) -> f64 {
    let s = (epi_dist / (2.0 * radius)).sin();
    (depth * depth + 4.0 * radius * (radius - depth) * s * s)
        .max(0.0)
        .sqrt()
}
