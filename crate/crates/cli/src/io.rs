//! CSV readers and writers for trigger and roster files.
//!
//! Trigger files carry the header `id,lat,lon,t`, rosters `id,lat,lon`.
//! Times are seconds relative to any shared epoch. Every parse failure is
//! reported with the 1-based line number of the offending record.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use quakeml_core::{GeoPoint, Smartphone, Trigger};

use crate::CliError;

pub const TRIGGER_HEADER: [&str; 4] = ["id", "lat", "lon", "t"];
pub const ROSTER_HEADER: [&str; 3] = ["id", "lat", "lon"];

fn parse_error(path: &Path, line: u64, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<File>, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(rdr)
}

fn number(path: &Path, line: u64, field: &str, raw: &str) -> Result<f64, CliError> {
    let x: f64 = raw
        .parse()
        .map_err(|_| parse_error(path, line, format!("{field}: cannot parse `{raw}` as a number")))?;
    if !x.is_finite() {
        return Err(parse_error(path, line, format!("{field}: `{raw}` is not finite")));
    }
    Ok(x)
}

fn point(path: &Path, line: u64, lat: &str, lon: &str) -> Result<GeoPoint, CliError> {
    let lat = number(path, line, "lat", lat)?;
    let lon = number(path, line, "lon", lon)?;
    GeoPoint::new(lat, lon).map_err(|e| parse_error(path, line, e.to_string()))
}

fn record(path: &Path, r: csv::Result<csv::StringRecord>) -> Result<(u64, csv::StringRecord), CliError> {
    let rec = r.map_err(|e| {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        parse_error(path, line, e.to_string())
    })?;
    let line = rec.position().map(|p| p.line()).unwrap_or(0);
    Ok((line, rec))
}

/// Read a trigger file. An empty file (header only) is an error unless
/// `allow_empty` is set.
pub fn read_triggers(path: &Path, allow_empty: bool) -> Result<Vec<Trigger>, CliError> {
    let mut rdr = open(path, &TRIGGER_HEADER)?;
    let mut out = Vec::new();
    for r in rdr.records() {
        let (line, rec) = record(path, r)?;
        let loc = point(path, line, &rec[1], &rec[2])?;
        let t = number(path, line, "t", &rec[3])?;
        out.push(match &rec[0] {
            "" => Trigger::new(loc, t),
            id => Trigger::with_id(id, loc, t),
        });
    }
    if out.is_empty() && !allow_empty {
        return Err(parse_error(path, 1, "no trigger rows"));
    }
    Ok(out)
}

/// Read a roster; every listed phone is active.
pub fn read_roster(path: &Path) -> Result<Vec<Smartphone>, CliError> {
    let mut rdr = open(path, &ROSTER_HEADER)?;
    let mut out = Vec::new();
    for r in rdr.records() {
        let (line, rec) = record(path, r)?;
        if rec[0].is_empty() {
            return Err(parse_error(path, line, "id: empty"));
        }
        out.push(Smartphone {
            id: rec[0].to_string(),
            location: point(path, line, &rec[1], &rec[2])?,
            active: true,
        });
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no roster rows"));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Usage(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_triggers<W: Write>(w: W, triggers: &[Trigger]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRIGGER_HEADER)?;
    for t in triggers {
        wtr.write_record([
            t.id.as_deref().unwrap_or(""),
            &t.location.lat.to_string(),
            &t.location.lon.to_string(),
            &t.time.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_roster<W: Write>(w: W, phones: &[Smartphone]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(ROSTER_HEADER)?;
    for p in phones {
        wtr.write_record([
            p.id.as_str(),
            &p.location.lat.to_string(),
            &p.location.lon.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Create (truncate) `path` for writing.
pub fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_triggers(path: &Path, triggers: &[Trigger]) -> Result<(), CliError> {
    write_triggers(create(path)?, triggers).map_err(|e| csv_error(path, e))
}

pub fn save_roster(path: &Path, phones: &[Smartphone]) -> Result<(), CliError> {
    write_roster(create(path)?, phones).map_err(|e| csv_error(path, e))
}

/// Write arbitrary rows under `header` to `path`.
pub fn save_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut wtr = csv::Writer::from_writer(create(path)?);
    let run = |wtr: &mut csv::Writer<File>| -> csv::Result<()> {
        wtr.write_record(header)?;
        for row in rows {
            wtr.write_record(row)?;
        }
        wtr.flush()?;
        Ok(())
    };
    run(&mut wtr).map_err(|e| csv_error(path, e))
}
