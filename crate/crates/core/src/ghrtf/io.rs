//! Database file format.
//!
//! One line of compact JSON (the header) terminated by `\n`, followed by
//! `M·K·D` pairs of little-endian `f64` (real, imaginary), ordered m-major,
//! then k, then j.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{CandidatePositionSet, DirectionSet, FrequencyGrid, SurfacePoint};
use super::{Direction, GhrtfDatabase};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "D")]
    d: usize,
    head_radius_m: f64,
    frequencies_hz: Vec<f64>,
    candidate_positions: Vec<CandidateRecord>,
    directions: Vec<Direction>,
    provenance: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    direction_sets: Vec<DirectionSet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CandidateRecord {
    azimuth: f64,
    elevation: f64,
    radius: f64,
}

pub fn save_database(db: &GhrtfDatabase, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_database(db, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_database(path: impl AsRef<Path>) -> Result<GhrtfDatabase> {
    read_database(BufReader::new(File::open(path)?))
}

pub fn write_database<W: Write>(db: &GhrtfDatabase, mut w: W) -> Result<()> {
    let header = Header {
        format_version: FORMAT_VERSION,
        m: db.num_candidates(),
        k: db.num_frequencies(),
        d: db.num_directions(),
        head_radius_m: db.candidates().head_radius(),
        frequencies_hz: db.frequencies().values().to_vec(),
        candidate_positions: db
            .candidates()
            .positions()
            .iter()
            .map(|p| CandidateRecord {
                azimuth: p.direction.azimuth,
                elevation: p.direction.elevation,
                radius: p.radius,
            })
            .collect(),
        directions: db.directions().to_vec(),
        provenance: db.provenance().to_owned(),
        direction_sets: db.direction_sets().to_vec(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(16 * 4096);
    for chunk in db.values().chunks(4096) {
        buf.clear();
        for z in chunk {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_database<R: Read>(mut r: R) -> Result<GhrtfDatabase> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_database(&bytes)
}

pub fn parse_database(bytes: &[u8]) -> Result<GhrtfDatabase> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(bytes.len() as u64, "no newline terminating the JSON header"))?;
    let header: Header = serde_json::from_slice(&bytes[..newline]).map_err(|e| {
        // serde_json reports 1-based columns on a single line
        Error::format(e.column().saturating_sub(1) as u64, format!("malformed header: {e}"))
    })?;
    let payload_start = (newline + 1) as u64;

    if header.format_version != FORMAT_VERSION {
        return Err(Error::format(0, format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    if header.frequencies_hz.len() != header.k
        || header.candidate_positions.len() != header.m
        || header.directions.len() != header.d
    {
        return Err(Error::format(0, format!(
            "header declares M={}, K={}, D={} but lists {} candidates, {} frequencies, {} directions",
            header.m,
            header.k,
            header.d,
            header.candidate_positions.len(),
            header.frequencies_hz.len(),
            header.directions.len()
        )));
    }

    let count = header
        .m
        .checked_mul(header.k)
        .and_then(|x| x.checked_mul(header.d))
        .ok_or_else(|| Error::format(0, "M·K·D overflows"))?;
    let payload = &bytes[newline + 1..];
    let expected_len = count as u64 * 16;
    if payload.len() as u64 != expected_len {
        let at = payload_start + (payload.len() as u64).min(expected_len);
        return Err(Error::format(at, format!(
            "payload holds {} bytes but M·K·D = {count} complex values need {expected_len}",
            payload.len()
        )));
    }

    let mut values = Vec::with_capacity(count);
    for (i, c) in payload.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::format(
                payload_start + 16 * i as u64,
                format!("non-finite coefficient #{i}"),
            ));
        }
        values.push(Complex64::new(re, im));
    }

    let to_format = |e: Error| Error::format(0, format!("invalid header: {e}"));
    let positions = header
        .candidate_positions
        .iter()
        .map(|c| {
            Ok(SurfacePoint {
                direction: checked_direction(c.azimuth, c.elevation)?,
                radius: c.radius,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(to_format)?;
    let directions = header
        .directions
        .iter()
        .map(|d| checked_direction(d.azimuth, d.elevation))
        .collect::<Result<Vec<_>>>()
        .map_err(to_format)?;
    let candidates = CandidatePositionSet::new(positions, header.head_radius_m).map_err(to_format)?;
    let frequencies = FrequencyGrid::new(header.frequencies_hz).map_err(to_format)?;
    GhrtfDatabase::new(candidates, frequencies, directions, values, header.provenance)
        .and_then(|db| db.with_direction_sets(header.direction_sets))
        .map_err(to_format)
}

/// Accepts only already-normalized angles so that a load never rewrites them.
fn checked_direction(azimuth: f64, elevation: f64) -> Result<Direction> {
    let d = Direction::new(azimuth, elevation)?;
    if d.azimuth != azimuth {
        return Err(Error::invalid(format!("azimuth {azimuth} outside [0, 2π)")));
    }
    Ok(d)
}
