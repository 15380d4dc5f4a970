//! Event-catalog ingestion: delimited-text parsing, planar projection, and
//! disc/date filtering.
//!
//! Geographic coordinates are projected onto a local planar frame with an
//! equirectangular approximation around the study center. Over a 5 km disc at
//! mid latitudes the distance error is below 0.1%, which is negligible next
//! to the 0.25 km grid used downstream.

use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by the planar projection.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A single point event: a timestamp, geographic and planar coordinates, and
/// a category label.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Fractional days since the catalog epoch.
    pub time: f64,
    /// Latitude in degrees.
    pub lat: f64,
    /// Longitude in degrees.
    pub lon: f64,
    /// East offset from the catalog center, km.
    pub x: f64,
    /// North offset from the catalog center, km.
    pub y: f64,
    /// Event-category label.
    pub kind: String,
}

impl Event {
    /// Planar distance from the catalog center, km.
    pub fn dist_from_center(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// A time-sorted collection of events sharing one epoch and planar frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCatalog {
    /// Events in non-decreasing time order.
    pub events: Vec<Event>,
    /// Calendar date of `time = 0` (local midnight).
    pub epoch: NaiveDate,
    /// (latitude, longitude) of the planar-frame origin, degrees.
    pub center: (f64, f64),
    /// Disc radius the catalog was filtered to, if any.
    pub radius_km: Option<f64>,
}

impl EventCatalog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Whole days spanned by the catalog (`floor(max time) + 1`), 0 if empty.
    pub fn day_span(&self) -> usize {
        self.events
            .last()
            .map(|e| e.time.floor() as usize + 1)
            .unwrap_or(0)
    }

    /// Retains only events with the given kind label.
    pub fn filter_kind(&self, kind: &str) -> EventCatalog {
        EventCatalog {
            events: self
                .events
                .iter()
                .filter(|e| e.kind == kind)
                .cloned()
                .collect(),
            ..self.clone()
        }
    }

    /// Events with `day0 <= time < day1`, times shifted so `day0` becomes 0.
    /// The epoch moves forward accordingly.
    pub fn window(&self, day0: usize, day1: usize) -> EventCatalog {
        let lo = day0 as f64;
        let hi = day1 as f64;
        let events = self
            .events
            .iter()
            .filter(|e| e.time >= lo && e.time < hi)
            .map(|e| Event {
                time: e.time - lo,
                ..e.clone()
            })
            .collect();
        EventCatalog {
            events,
            epoch: self.epoch + chrono::Days::new(day0 as u64),
            center: self.center,
            radius_km: self.radius_km,
        }
    }
}

/// Maps the roles needed from a delimited file onto its header columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub date: String,
    pub lat: String,
    pub lon: String,
    pub kind: String,
    /// chrono format string for the date column.
    #[serde(default = "default_date_format")]
    pub date_format: String,
    /// Field delimiter, `,` or `\t`.
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_date_format() -> String {
    "%Y-%m-%dT%H:%M:%S".to_string()
}

fn default_delimiter() -> char {
    ','
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            date: "date".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            kind: "kind".into(),
            date_format: default_date_format(),
            delimiter: default_delimiter(),
        }
    }
}

impl ColumnMapping {
    fn validate(&self) -> Result<()> {
        let names = [&self.date, &self.lat, &self.lon, &self.kind];
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::DuplicateColumn((*a).clone()));
                }
            }
        }
        Ok(())
    }
}

/// Equirectangular projection of (lat, lon) onto km offsets from `center`.
///
/// The center maps to (0, 0); x grows east, y grows north.
pub fn project(lat: f64, lon: f64, center: (f64, f64)) -> (f64, f64) {
    let x = EARTH_RADIUS_KM * center.0.to_radians().cos() * (lon - center.1).to_radians();
    let y = EARTH_RADIUS_KM * (lat - center.0).to_radians();
    (x, y)
}

/// Inverse of [`project`].
pub fn unproject(x: f64, y: f64, center: (f64, f64)) -> (f64, f64) {
    let lat = center.0 + (y / EARTH_RADIUS_KM).to_degrees();
    let lon = center.1 + (x / (EARTH_RADIUS_KM * center.0.to_radians().cos())).to_degrees();
    (lat, lon)
}

fn parse_datetime(s: &str, format: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, format) {
        return Some(dt);
    }
    // Date-only formats parse as local midnight.
    NaiveDate::parse_from_str(s, format)
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
}

/// Parses a delimited event file into a catalog, projecting every row onto
/// the planar frame around `center`.
///
/// Rows whose date, latitude, or longitude cannot be parsed (or whose
/// latitude is outside [-90, 90]) are skipped and counted, not fatal. A
/// missing mapped column is fatal. The catalog epoch is `epoch` when given,
/// otherwise the calendar date of the earliest event.
pub fn parse_catalog<R: Read>(
    source: R,
    mapping: &ColumnMapping,
    center: (f64, f64),
    epoch: Option<NaiveDate>,
) -> Result<(EventCatalog, usize)> {
    mapping.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .flexible(true)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = col(&mapping.date)?;
    let lat_idx = col(&mapping.lat)?;
    let lon_idx = col(&mapping.lon)?;
    let kind_idx = col(&mapping.kind)?;

    let mut rows: Vec<(NaiveDateTime, f64, f64, String)> = Vec::new();
    let mut skipped = 0usize;
    for record in reader.records() {
        let record = record?;
        let parsed = (|| {
            let when = parse_datetime(record.get(date_idx)?, &mapping.date_format)?;
            let lat: f64 = record.get(lat_idx)?.trim().parse().ok()?;
            let lon: f64 = record.get(lon_idx)?.trim().parse().ok()?;
            if !lat.is_finite() || !lon.is_finite() || lat.abs() > 90.0 {
                return None;
            }
            let kind = record.get(kind_idx)?.to_string();
            Some((when, lat, lon, kind))
        })();
        match parsed {
            Some(row) => rows.push(row),
            None => skipped += 1,
        }
    }

    rows.sort_by_key(|r| r.0);
    let epoch = epoch
        .or_else(|| rows.first().map(|r| r.0.date()))
        .unwrap_or(NaiveDate::from_ymd_opt(1970, 1, 1).unwrap());
    let epoch_start = epoch.and_hms_opt(0, 0, 0).unwrap();

    let events = rows
        .into_iter()
        .map(|(when, lat, lon, kind)| {
            let (x, y) = project(lat, lon, center);
            let time = (when - epoch_start).num_seconds() as f64 / 86_400.0;
            Event {
                time,
                lat,
                lon,
                x,
                y,
                kind,
            }
        })
        .collect();

    Ok((
        EventCatalog {
            events,
            epoch,
            center,
            radius_km: None,
        },
        skipped,
    ))
}

/// Restricts a catalog to a disc of `radius_km` around `center` and to the
/// half-open date window `[start, end)`.
///
/// Events exactly on the disc boundary are included. If `center` differs
/// from the catalog's frame origin, events are re-projected onto the new
/// frame first.
pub fn filter_catalog(
    catalog: &EventCatalog,
    center: (f64, f64),
    radius_km: f64,
    start: NaiveDate,
    end: NaiveDate,
) -> EventCatalog {
    let same_center = center == catalog.center;
    let start_day = (start - catalog.epoch).num_days() as f64;
    let end_day = (end - catalog.epoch).num_days() as f64;
    let events = catalog
        .events
        .iter()
        .filter_map(|e| {
            let (x, y) = if same_center {
                (e.x, e.y)
            } else {
                project(e.lat, e.lon, center)
            };
            if x.hypot(y) <= radius_km && e.time >= start_day && e.time < end_day {
                Some(Event {
                    x,
                    y,
                    ..e.clone()
                })
            } else {
                None
            }
        })
        .collect();
    EventCatalog {
        events,
        epoch: catalog.epoch,
        center,
        radius_km: Some(radius_km),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogMeta {
    epoch: NaiveDate,
    center_lat: f64,
    center_lon: f64,
    radius_km: Option<f64>,
}

/// Writes the canonical catalog CSV: `day,x_km,y_km,kind`.
pub fn write_canonical<W: Write>(catalog: &EventCatalog, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["day", "x_km", "y_km", "kind"])?;
    for e in &catalog.events {
        w.write_record([
            e.time.to_string(),
            e.x.to_string(),
            e.y.to_string(),
            e.kind.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes the catalog's frame metadata (epoch, center, radius) as JSON.
pub fn write_meta<W: Write>(catalog: &EventCatalog, writer: W) -> Result<()> {
    let meta = CatalogMeta {
        epoch: catalog.epoch,
        center_lat: catalog.center.0,
        center_lon: catalog.center.1,
        radius_km: catalog.radius_km,
    };
    serde_json::to_writer_pretty(writer, &meta).map_err(|e| Error::Metadata(e.to_string()))?;
    Ok(())
}

/// Reads a canonical catalog CSV plus its JSON metadata sidecar.
///
/// Latitude/longitude are reconstructed by inverting the projection, so a
/// write/read cycle is exact.
pub fn read_canonical<R: Read, M: Read>(csv_reader: R, meta_reader: M) -> Result<EventCatalog> {
    let meta: CatalogMeta =
        serde_json::from_reader(meta_reader).map_err(|e| Error::Metadata(e.to_string()))?;
    let center = (meta.center_lat, meta.center_lon);
    let mut reader = csv::ReaderBuilder::new().from_reader(csv_reader);
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Metadata(format!("short row in canonical catalog: {record:?}")))
        };
        let time: f64 = field(0)?
            .parse()
            .map_err(|_| Error::Metadata(format!("bad day value `{}`", &record[0])))?;
        let x: f64 = field(1)?
            .parse()
            .map_err(|_| Error::Metadata(format!("bad x value `{}`", &record[1])))?;
        let y: f64 = field(2)?
            .parse()
            .map_err(|_| Error::Metadata(format!("bad y value `{}`", &record[2])))?;
        let kind = field(3)?.to_string();
        let (lat, lon) = unproject(x, y, center);
        events.push(Event {
            time,
            lat,
            lon,
            x,
            y,
            kind,
        });
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    Ok(EventCatalog {
        events,
        epoch: meta.epoch,
        center,
        radius_km: meta.radius_km,
    })
}
