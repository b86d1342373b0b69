//! Ratio detector over a time-ordered trigger stream.
//!
//! After each trigger, every trigger still inside the time window is a
//! candidate area center. An area fires when the triggers in the window and
//! within the radius, divided by the active smartphones within the radius,
//! exceeds the threshold and at least `min_triggers` triggers concur. The
//! first firing stops the detector.
//!
//! [`detect`] recomputes each area from scratch at every step.
//! [`StreamingDetector`] keeps per-candidate counts up to date as triggers
//! enter and leave the window; both produce identical detections.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::Trigger;
use crate::geo::{self, EarthModel, GeoPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smartphone {
    pub id: String,
    pub location: GeoPoint,
    pub active: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub radius_km: f64,
    pub window_s: f64,
    pub ratio_threshold: f64,
    pub min_triggers: usize,
    pub earth: EarthModel,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            radius_km: 30.0,
            window_s: 10.0,
            ratio_threshold: 0.25,
            min_triggers: 4,
            earth: EarthModel::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_km > 0.0 && self.radius_km.is_finite()) {
            return Err(Error::invalid("detector radius must be > 0"));
        }
        if !(self.window_s > 0.0 && self.window_s.is_finite()) {
            return Err(Error::invalid("detector window must be > 0"));
        }
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "ratio threshold {} outside (0, 1]",
                self.ratio_threshold
            )));
        }
        if self.min_triggers == 0 {
            return Err(Error::invalid("min_triggers must be >= 1"));
        }
        EarthModel::new(self.earth.radius_km)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub center: GeoPoint,
    /// Id of the trigger whose location anchors the firing area.
    pub center_id: Option<String>,
    pub detection_time: f64,
    /// Concurring triggers in stream order.
    pub triggers: Vec<Trigger>,
    pub active_count: usize,
}

impl Detection {
    pub fn ratio(&self) -> f64 {
        self.triggers.len() as f64 / self.active_count as f64
    }
}

#[derive(Debug, Clone, Copy)]
struct Rad {
    lat: f64,
    lon: f64,
    cos: f64,
}

impl Rad {
    fn of(p: GeoPoint) -> Self {
        let lat = p.lat.to_radians();
        Rad {
            lat,
            lon: p.lon.to_radians(),
            cos: lat.cos(),
        }
    }

    fn dist(&self, other: &Rad, radius: f64) -> f64 {
        geo::haversine_km_with_cos(
            self.lat, self.lon, self.cos, other.lat, other.lon, other.cos, radius,
        )
    }
}

/// Active smartphones sorted by latitude for band queries.
#[derive(Debug, Clone)]
struct Roster {
    active: Vec<Rad>,
    band: f64,
    radius_km: f64,
    earth_km: f64,
}

impl Roster {
    fn new(roster: &[Smartphone], cfg: &DetectorConfig) -> Result<Self> {
        if roster.is_empty() {
            return Err(Error::invalid("empty smartphone roster"));
        }
        let mut seen = HashSet::with_capacity(roster.len());
        for s in roster {
            s.location.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::invalid(format!("duplicate smartphone id {:?}", s.id)));
            }
        }
        let mut active: Vec<Rad> = roster
            .iter()
            .filter(|s| s.active)
            .map(|s| Rad::of(s.location))
            .collect();
        active.sort_by(|a, b| a.lat.total_cmp(&b.lat));
        Ok(Roster {
            active,
            // Great-circle distance is at least the latitude difference.
            band: cfg.radius_km / cfg.earth.radius_km * (1.0 + 1e-9),
            radius_km: cfg.radius_km,
            earth_km: cfg.earth.radius_km,
        })
    }

    fn count_within(&self, c: &Rad) -> usize {
        let lo = self.active.partition_point(|p| p.lat < c.lat - self.band);
        let hi = self.active.partition_point(|p| p.lat <= c.lat + self.band);
        self.active[lo..hi]
            .iter()
            .filter(|p| c.dist(p, self.earth_km) <= self.radius_km)
            .count()
    }
}

fn check_trigger(t: &Trigger, last: Option<f64>) -> Result<()> {
    t.location.validate()?;
    if !t.time.is_finite() {
        return Err(Error::invalid(format!("non-finite trigger time {}", t.time)));
    }
    if let Some(prev) = last {
        if t.time < prev {
            return Err(Error::invalid(format!(
                "trigger stream not sorted by time ({} after {})",
                t.time, prev
            )));
        }
    }
    Ok(())
}

fn fires(count: usize, active: usize, cfg: &DetectorConfig) -> bool {
    count >= cfg.min_triggers && active > 0 && count as f64 / active as f64 > cfg.ratio_threshold
}

/// Tie-break key among areas firing on the same trigger: smallest id, then
/// earliest stream position.
fn better(a: (&Option<String>, usize), b: (&Option<String>, usize)) -> bool {
    a.0.cmp(b.0).then(a.1.cmp(&b.1)).is_lt()
}

/// Batch replay of the detector.
pub fn detect(
    stream: &[Trigger],
    roster: &[Smartphone],
    cfg: &DetectorConfig,
) -> Result<Option<Detection>> {
    cfg.validate()?;
    let roster = Roster::new(roster, cfg)?;
    let mut last = None;
    for t in stream {
        check_trigger(t, last)?;
        last = Some(t.time);
    }
    let radius = cfg.earth.radius_km;
    let rad: Vec<Rad> = stream.iter().map(|t| Rad::of(t.location)).collect();
    let mut active: Vec<Option<usize>> = vec![None; stream.len()];
    let mut lo = 0usize;

    for k in 0..stream.len() {
        let now = stream[k].time;
        while stream[lo].time < now - cfg.window_s {
            lo += 1;
        }
        let mut best: Option<(usize, usize, usize)> = None; // (center, count, active)
        for c in lo..=k {
            let count = (lo..=k)
                .filter(|&m| rad[c].dist(&rad[m], radius) <= cfg.radius_km)
                .count();
            let act = *active[c].get_or_insert_with(|| roster.count_within(&rad[c]));
            if fires(count, act, cfg)
                && best.is_none_or(|(b, _, _)| better((&stream[c].id, c), (&stream[b].id, b)))
            {
                best = Some((c, count, act));
            }
        }
        if let Some((c, _, act)) = best {
            let triggers: Vec<Trigger> = (lo..=k)
                .filter(|&m| rad[c].dist(&rad[m], radius) <= cfg.radius_km)
                .map(|m| stream[m].clone())
                .collect();
            return Ok(Some(Detection {
                center: stream[c].location,
                center_id: stream[c].id.clone(),
                detection_time: now,
                triggers,
                active_count: act,
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone)]
struct Entry {
    trigger: Trigger,
    seq: usize,
    rad: Rad,
    count: usize,
    active: usize,
}

/// Push-style detector with a sliding window.
///
/// Single writer. Once it fires, the detection is latched and further pushes
/// return `Ok(None)` until [`StreamingDetector::reset`].
#[derive(Debug, Clone)]
pub struct StreamingDetector {
    cfg: DetectorConfig,
    roster: Roster,
    window: VecDeque<Entry>,
    last_time: Option<f64>,
    seq: usize,
    fired: Option<Detection>,
}

impl StreamingDetector {
    pub fn new(roster: &[Smartphone], cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(StreamingDetector {
            roster: Roster::new(roster, &cfg)?,
            cfg,
            window: VecDeque::new(),
            last_time: None,
            seq: 0,
            fired: None,
        })
    }

    pub fn detection(&self) -> Option<&Detection> {
        self.fired.as_ref()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.last_time = None;
        self.seq = 0;
        self.fired = None;
    }

    pub fn push(&mut self, trigger: Trigger) -> Result<Option<Detection>> {
        if self.fired.is_some() {
            return Ok(None);
        }
        check_trigger(&trigger, self.last_time)?;
        self.last_time = Some(trigger.time);
        let radius = self.cfg.earth.radius_km;
        let r_km = self.cfg.radius_km;
        let now = trigger.time;

        while let Some(front) = self.window.front() {
            if front.trigger.time >= now - self.cfg.window_s {
                break;
            }
            let gone = self.window.pop_front().expect("front exists");
            for e in self.window.iter_mut() {
                if gone.rad.dist(&e.rad, radius) <= r_km {
                    e.count -= 1;
                }
            }
        }

        let rad = Rad::of(trigger.location);
        let mut entry = Entry {
            active: self.roster.count_within(&rad),
            trigger,
            seq: self.seq,
            rad,
            count: 1,
        };
        self.seq += 1;
        for e in self.window.iter_mut() {
            if rad.dist(&e.rad, radius) <= r_km {
                e.count += 1;
                entry.count += 1;
            }
        }
        self.window.push_back(entry);

        let mut best: Option<usize> = None;
        for (i, e) in self.window.iter().enumerate() {
            if fires(e.count, e.active, &self.cfg)
                && best.is_none_or(|b| {
                    let b = &self.window[b];
                    better((&e.trigger.id, e.seq), (&b.trigger.id, b.seq))
                })
            {
                best = Some(i);
            }
        }
        let Some(c) = best else {
            return Ok(None);
        };
        let center = &self.window[c];
        let triggers: Vec<Trigger> = self
            .window
            .iter()
            .filter(|e| center.rad.dist(&e.rad, radius) <= r_km)
            .map(|e| e.trigger.clone())
            .collect();
        let det = Detection {
            center: center.trigger.location,
            center_id: center.trigger.id.clone(),
            detection_time: now,
            triggers,
            active_count: center.active,
        };
        self.fired = Some(det.clone());
        Ok(Some(det))
    }

    /// Feed a whole stream; returns the first detection, if any.
    pub fn run(&mut self, stream: impl IntoIterator<Item = Trigger>) -> Result<Option<Detection>> {
        for t in stream {
            if let Some(d) = self.push(t)? {
                return Ok(Some(d));
            }
        }
        Ok(None)
    }
}
