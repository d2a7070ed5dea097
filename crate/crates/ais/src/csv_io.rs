//! CSV import and export of vessel records.
//!
//! Schema: `mmsi,timestamp,lat,lon,sog_kn,cog_deg,ais_type,length_m,beam_m,draft_m,nav_status`.
//! The first six of `mmsi,timestamp,lat,lon,sog_kn,ais_type` are required;
//! optional columns may be absent or empty. `nav_status` defaults to 0.
//! Extra columns (e.g. `name`) are ignored on import, except `name` which is kept.

use std::io::Read;

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;
use urnmap_core::VesselRecord;

pub const CSV_COLUMNS: [&str; 11] = [
    "mmsi",
    "timestamp",
    "lat",
    "lon",
    "sog_kn",
    "cog_deg",
    "ais_type",
    "length_m",
    "beam_m",
    "draft_m",
    "nav_status",
];

pub const REQUIRED_COLUMNS: [&str; 6] = ["mmsi", "timestamp", "lat", "lon", "sog_kn", "ais_type"];

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("missing required column '{0}'")]
    MissingColumn(String),
    #[error("unreadable CSV: {0}")]
    Unreadable(String),
}

/// A row that could not be imported.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the file (the header is line 1).
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Imported {
    pub records: Vec<VesselRecord>,
    pub rejected: Vec<RowError>,
}

/// Parses an ISO-8601 timestamp that is explicitly UTC (`Z` or `+00:00`).
pub fn parse_utc(s: &str) -> Result<DateTime<Utc>, String> {
    let t = DateTime::parse_from_rfc3339(s).map_err(|_| format!("timestamp '{s}' is not ISO-8601"))?;
    if t.offset().local_minus_utc() != 0 {
        return Err(format!("timestamp '{s}' is not UTC"));
    }
    Ok(t.with_timezone(&Utc))
}

pub fn format_utc(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Reads records; unparseable rows are rejected with a line-numbered message.
pub fn import_csv<R: Read>(reader: R) -> Result<Imported, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| CsvError::Unreadable(e.to_string()))?.clone();
    let index = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    for col in REQUIRED_COLUMNS {
        if index(col).is_none() {
            return Err(CsvError::MissingColumn(col.to_string()));
        }
    }
    let cols: Vec<Option<usize>> = CSV_COLUMNS.iter().map(|c| index(c)).collect();
    let name_col = index("name");

    let mut out = Imported::default();
    for (n, row) in rdr.records().enumerate() {
        let line = n + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.rejected.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_row(&row, &cols, name_col) {
            Ok(r) => out.records.push(r),
            Err(message) => out.rejected.push(RowError { line, message }),
        }
    }
    for e in &out.rejected {
        log::warn!("CSV line {}: {}", e.line, e.message);
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, cols: &[Option<usize>], name_col: Option<usize>) -> Result<VesselRecord, String> {
    let get = |k: usize| cols[k].and_then(|i| row.get(i)).filter(|s| !s.is_empty());
    let req = |k: usize| get(k).ok_or_else(|| format!("empty {}", CSV_COLUMNS[k]));
    let num = |k: usize| -> Result<Option<f64>, String> {
        get(k)
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("bad {} '{s}'", CSV_COLUMNS[k]))
            })
            .transpose()
    };
    let int = |k: usize, max: u64| -> Result<Option<u64>, String> {
        get(k)
            .map(|s| {
                s.parse::<u64>()
                    .ok()
                    .filter(|v| *v <= max)
                    .ok_or_else(|| format!("bad {} '{s}'", CSV_COLUMNS[k]))
            })
            .transpose()
    };
    let mmsi = int(0, u32::MAX as u64)?.ok_or("empty mmsi")? as u32;
    let timestamp = parse_utc(req(1)?)?;
    let lat = num(2)?.ok_or("empty lat")?;
    let lon = num(3)?.ok_or("empty lon")?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(format!("position {lat},{lon} out of range"));
    }
    let sog_kn = num(4)?.ok_or("empty sog_kn")?;
    if sog_kn < 0.0 {
        return Err(format!("negative sog_kn {sog_kn}"));
    }
    Ok(VesselRecord {
        mmsi,
        name: name_col.and_then(|i| row.get(i)).filter(|s| !s.is_empty()).map(str::to_string),
        timestamp,
        lat,
        lon,
        sog_kn,
        cog_deg: num(5)?,
        ais_type: int(6, 255)?.ok_or("empty ais_type")? as u8,
        length_m: num(7)?,
        beam_m: num(8)?,
        draft_m: num(9)?,
        nav_status: int(10, 15)?.unwrap_or(0) as u8,
        je_class: None,
    })
}

/// Writes records in the import schema. Numbers use the shortest form that
/// reads back to the same value.
pub fn export_csv(records: &[VesselRecord]) -> String {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(CSV_COLUMNS).expect("in-memory write");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        wtr.write_record([
            r.mmsi.to_string(),
            format_utc(&r.timestamp),
            r.lat.to_string(),
            r.lon.to_string(),
            r.sog_kn.to_string(),
            opt(r.cog_deg),
            r.ais_type.to_string(),
            opt(r.length_m),
            opt(r.beam_m),
            opt(r.draft_m),
            r.nav_status.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
