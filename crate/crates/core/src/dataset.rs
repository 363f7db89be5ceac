//! Historical incident tables: typed records, CSV ingestion, the year-keyed
//! join, and the preprocessing steps applied before regression.
//!
//! Three files make up the bundled data set:
//!
//! | file            | header                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | `incidents.csv` | `year,fatalities,injuries,density_ppm2,trigger,admin_response` |
//! | `inquiries.csv` | `year,key_phrases,effectiveness_score`                        |
//! | `venues.csv`    | `year,chokepoint_width_m,exits,vip_routes`                    |
//!
//! The source table for incidents labels its death column "Facilities". The
//! values (700 in 1954, 48 in 2025) are the widely reported death tolls, so
//! the column is read as fatalities. The injuries column is ingested as-is;
//! its provenance is not documented upstream.
//!
//! Key phrases are separated by `;` inside their cell.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INCIDENT_COLUMNS: [&str; 6] = [
    "year",
    "fatalities",
    "injuries",
    "density_ppm2",
    "trigger",
    "admin_response",
];
pub const INQUIRY_COLUMNS: [&str; 3] = ["year", "key_phrases", "effectiveness_score"];
pub const VENUE_COLUMNS: [&str; 4] = ["year", "chokepoint_width_m", "exits", "vip_routes"];

pub const PHRASE_SEPARATOR: char = ';';

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column '{column}'")]
    MissingColumn { column: String },
    #[error("row {row}: column '{column}' has unknown value '{value}'")]
    BadEnumValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: column '{column}' is not numeric: '{value}'")]
    NonNumericField {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: effectiveness score {value} outside [1, 10]")]
    ScoreOutOfRange { row: usize, value: i64 },
    #[error("row {row}: {message}")]
    Invariant { row: usize, message: String },
    #[error("year {year} appears more than once")]
    DuplicateYear { year: i32 },
    #[error("no year is common to all three tables")]
    EmptyJoin,
    #[error("empty input")]
    EmptyInput,
}

impl DatasetError {
    /// Short machine-readable tag, used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            DatasetError::Io { .. } => "Io",
            DatasetError::Csv(_) => "Csv",
            DatasetError::MissingColumn { .. } => "MissingColumn",
            DatasetError::BadEnumValue { .. } => "BadEnumValue",
            DatasetError::NonNumericField { .. } => "NonNumericField",
            DatasetError::ScoreOutOfRange { .. } => "ScoreOutOfRange",
            DatasetError::Invariant { .. } => "Invariant",
            DatasetError::DuplicateYear { .. } => "DuplicateYear",
            DatasetError::EmptyJoin => "EmptyJoin",
            DatasetError::EmptyInput => "EmptyInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Trigger {
    Overcrowding,
    NarrowPathways,
    PanicPropagation,
    RailwayStampede,
    BarricadeBreach,
}

impl Trigger {
    pub const ALL: [Trigger; 5] = [
        Trigger::Overcrowding,
        Trigger::NarrowPathways,
        Trigger::PanicPropagation,
        Trigger::RailwayStampede,
        Trigger::BarricadeBreach,
    ];

    /// Label as written in the incident table.
    pub fn label(self) -> &'static str {
        match self {
            Trigger::Overcrowding => "Overcrowding",
            Trigger::NarrowPathways => "Narrow Pathways",
            Trigger::PanicPropagation => "Panic Propagation",
            Trigger::RailwayStampede => "Railway Stampede",
            Trigger::BarricadeBreach => "Barricade Breach",
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTrigger(pub String);

impl FromStr for Trigger {
    type Err = UnknownTrigger;

    // Accepts the table label or the variant name, case- and space-insensitive.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        Trigger::ALL
            .into_iter()
            .find(|t| {
                let label: String = t
                    .label()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .flat_map(char::to_lowercase)
                    .collect();
                label == key
            })
            .ok_or_else(|| UnknownTrigger(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub year: i32,
    pub fatalities: u32,
    pub injuries: u32,
    /// Persons per square metre.
    pub density: f64,
    pub trigger: Trigger,
    pub admin_response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InquiryRecord {
    pub year: i32,
    pub key_phrases: Vec<String>,
    /// Administrative effectiveness, 1 (worst) to 10.
    pub effectiveness_score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VenueGeometry {
    pub year: i32,
    /// Narrowest passable width on the approach, metres.
    pub chokepoint_width: f64,
    pub exits: u32,
    /// Exits reserved for dignitaries and closed to the public.
    pub vip_routes: u32,
}

impl VenueGeometry {
    pub fn open_exits(&self) -> u32 {
        self.exits - self.vip_routes
    }
}

/// Records from one file plus any non-fatal diagnostics (unknown columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}

struct Columns {
    index: Vec<usize>,
    warnings: Vec<String>,
}

fn resolve_columns(headers: &csv::StringRecord, expected: &[&str]) -> Result<Columns> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let mut index = Vec::with_capacity(expected.len());
    for col in expected {
        match names.iter().position(|h| h == col) {
            Some(i) => index.push(i),
            None => {
                return Err(DatasetError::MissingColumn {
                    column: (*col).to_string(),
                })
            }
        }
    }
    let warnings = names
        .iter()
        .filter(|h| !expected.contains(h))
        .map(|h| format!("ignoring unknown column '{h}'"))
        .collect();
    Ok(Columns { index, warnings })
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    cols: &'a Columns,
    names: &'a [&'a str],
    line: usize,
}

impl Row<'_> {
    fn cell(&self, i: usize) -> &str {
        self.record.get(self.cols.index[i]).unwrap_or("").trim()
    }

    fn number<T: FromStr>(&self, i: usize) -> Result<T> {
        let raw = self.cell(i);
        raw.parse().map_err(|_| DatasetError::NonNumericField {
            row: self.line,
            column: self.names[i].to_string(),
            value: raw.to_string(),
        })
    }

    fn invariant(&self, message: impl Into<String>) -> DatasetError {
        DatasetError::Invariant {
            row: self.line,
            message: message.into(),
        }
    }
}

fn read_table<R, T, F>(reader: R, expected: &[&str], mut parse: F) -> Result<Loaded<T>>
where
    R: Read,
    F: FnMut(&Row<'_>) -> Result<T>,
{
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = resolve_columns(&headers, expected)?;
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let row = Row {
            record: &rec,
            cols: &cols,
            names: expected,
            line,
        };
        records.push(parse(&row)?);
    }
    Ok(Loaded {
        records,
        warnings: cols.warnings,
    })
}

fn check_year(row: &Row<'_>, year: i32) -> Result<()> {
    if !(1900..=2100).contains(&year) {
        return Err(row.invariant(format!("year {year} outside [1900, 2100]")));
    }
    Ok(())
}

pub fn read_incidents<R: Read>(reader: R) -> Result<Loaded<IncidentRecord>> {
    read_table(reader, &INCIDENT_COLUMNS, |row| {
        let year: i32 = row.number(0)?;
        check_year(row, year)?;
        let density: f64 = row.number(3)?;
        if !(density > 0.0) || !density.is_finite() {
            return Err(row.invariant(format!("density {density} must be positive")));
        }
        let trigger_raw = row.cell(4);
        let trigger = trigger_raw
            .parse::<Trigger>()
            .map_err(|UnknownTrigger(value)| DatasetError::BadEnumValue {
                row: row.line,
                column: "trigger".into(),
                value,
            })?;
        Ok(IncidentRecord {
            year,
            fatalities: row.number(1)?,
            injuries: row.number(2)?,
            density,
            trigger,
            admin_response: row.cell(5).to_string(),
        })
    })
}

pub fn read_inquiries<R: Read>(reader: R) -> Result<Loaded<InquiryRecord>> {
    read_table(reader, &INQUIRY_COLUMNS, |row| {
        let year: i32 = row.number(0)?;
        check_year(row, year)?;
        let key_phrases: Vec<String> = row
            .cell(1)
            .split(PHRASE_SEPARATOR)
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(String::from)
            .collect();
        if key_phrases.is_empty() {
            return Err(row.invariant("key_phrases is empty"));
        }
        let score: i64 = row.number(2)?;
        if !(1..=10).contains(&score) {
            return Err(DatasetError::ScoreOutOfRange {
                row: row.line,
                value: score,
            });
        }
        Ok(InquiryRecord {
            year,
            key_phrases,
            effectiveness_score: score as u8,
        })
    })
}

pub fn read_venues<R: Read>(reader: R) -> Result<Loaded<VenueGeometry>> {
    read_table(reader, &VENUE_COLUMNS, |row| {
        let year: i32 = row.number(0)?;
        check_year(row, year)?;
        let chokepoint_width: f64 = row.number(1)?;
        if !(chokepoint_width > 0.0) || !chokepoint_width.is_finite() {
            return Err(row.invariant(format!(
                "chokepoint width {chokepoint_width} must be positive"
            )));
        }
        let exits: u32 = row.number(2)?;
        let vip_routes: u32 = row.number(3)?;
        if exits == 0 {
            return Err(row.invariant("a venue needs at least one exit"));
        }
        if vip_routes >= exits {
            return Err(row.invariant(format!(
                "vip_routes ({vip_routes}) must be fewer than exits ({exits})"
            )));
        }
        Ok(VenueGeometry {
            year,
            chokepoint_width,
            exits,
            vip_routes,
        })
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_incidents(path: impl AsRef<Path>) -> Result<Loaded<IncidentRecord>> {
    read_incidents(open(path.as_ref())?)
}

pub fn load_inquiries(path: impl AsRef<Path>) -> Result<Loaded<InquiryRecord>> {
    read_inquiries(open(path.as_ref())?)
}

pub fn load_venues(path: impl AsRef<Path>) -> Result<Loaded<VenueGeometry>> {
    read_venues(open(path.as_ref())?)
}

pub fn write_incidents<W: Write>(records: &[IncidentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INCIDENT_COLUMNS)?;
    for r in records {
        w.write_record([
            r.year.to_string(),
            r.fatalities.to_string(),
            r.injuries.to_string(),
            r.density.to_string(),
            r.trigger.label().to_string(),
            r.admin_response.clone(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_inquiries<W: Write>(records: &[InquiryRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INQUIRY_COLUMNS)?;
    let sep = PHRASE_SEPARATOR.to_string();
    for r in records {
        w.write_record([
            r.year.to_string(),
            r.key_phrases.join(&sep),
            r.effectiveness_score.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_venues<W: Write>(records: &[VenueGeometry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VENUE_COLUMNS)?;
    for r in records {
        // Widths are tabulated to one decimal ("5.0"); Debug keeps the ".0".
        w.write_record([
            r.year.to_string(),
            format!("{:?}", r.chokepoint_width),
            r.exits.to_string(),
            r.vip_routes.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelRow {
    pub year: i32,
    pub incident: IncidentRecord,
    pub inquiry: InquiryRecord,
    pub venue: VenueGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JoinedPanel {
    /// Sorted by year, strictly increasing.
    pub rows: Vec<PanelRow>,
    /// Years present in at least one source but not in all three.
    pub dropped_years: BTreeSet<i32>,
}

impl JoinedPanel {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn years(&self) -> Vec<i32> {
        self.rows.iter().map(|r| r.year).collect()
    }

    pub fn fatalities(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.incident.fatalities as f64)
            .collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.incident.density).collect()
    }

    pub fn admin_scores(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.inquiry.effectiveness_score as f64)
            .collect()
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.dropped_years.is_empty() {
            Vec::new()
        } else {
            let years: Vec<String> = self.dropped_years.iter().map(|y| y.to_string()).collect();
            vec![format!(
                "years missing from at least one table: {{{}}}",
                years.join(",")
            )]
        }
    }
}

fn by_year<T: Clone>(records: &[T], year: impl Fn(&T) -> i32) -> Result<BTreeMap<i32, T>> {
    let mut map = BTreeMap::new();
    for r in records {
        let y = year(r);
        if map.insert(y, r.clone()).is_some() {
            return Err(DatasetError::DuplicateYear { year: y });
        }
    }
    Ok(map)
}

/// Inner join of the three tables on year.
pub fn join_panel(
    incidents: &[IncidentRecord],
    inquiries: &[InquiryRecord],
    venues: &[VenueGeometry],
) -> Result<JoinedPanel> {
    let inc = by_year(incidents, |r| r.year)?;
    let inq = by_year(inquiries, |r| r.year)?;
    let ven = by_year(venues, |r| r.year)?;

    let all: BTreeSet<i32> = inc
        .keys()
        .chain(inq.keys())
        .chain(ven.keys())
        .copied()
        .collect();
    let mut rows = Vec::new();
    let mut dropped_years = BTreeSet::new();
    for year in all {
        match (inc.get(&year), inq.get(&year), ven.get(&year)) {
            (Some(i), Some(q), Some(v)) => rows.push(PanelRow {
                year,
                incident: i.clone(),
                inquiry: q.clone(),
                venue: v.clone(),
            }),
            _ => {
                dropped_years.insert(year);
            }
        }
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyJoin);
    }
    Ok(JoinedPanel {
        rows,
        dropped_years,
    })
}

/// Loads and joins `incidents.csv`, `inquiries.csv` and `venues.csv` from `dir`.
/// Returns the panel and all non-fatal warnings.
pub fn load_panel(dir: impl AsRef<Path>) -> Result<(JoinedPanel, Vec<String>)> {
    let dir = dir.as_ref();
    let inc = load_incidents(dir.join("incidents.csv"))?;
    let inq = load_inquiries(dir.join("inquiries.csv"))?;
    let ven = load_venues(dir.join("venues.csv"))?;
    let panel = join_panel(&inc.records, &inq.records, &ven.records)?;
    let mut warnings = Vec::new();
    for (file, w) in [
        ("incidents.csv", &inc.warnings),
        ("inquiries.csv", &inq.warnings),
        ("venues.csv", &ven.warnings),
    ] {
        warnings.extend(w.iter().map(|m| format!("{file}: {m}")));
    }
    warnings.extend(panel.warnings());
    Ok((panel, warnings))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub values: Vec<f64>,
    /// Set when every input was equal; `values` is then all zeros.
    pub constant: bool,
}

/// Min-max scaling onto [0, 1].
pub fn minmax_normalize(values: &[f64]) -> Result<Normalized> {
    if values.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return Ok(Normalized {
            values: vec![0.0; values.len()],
            constant: true,
        });
    }
    let span = hi - lo;
    Ok(Normalized {
        values: values
            .iter()
            .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect(),
        constant: false,
    })
}

/// Treatment-coded indicators. The first level in sorted order is the
/// reference and gets no column, so an intercept column stays linearly
/// independent of the indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalEncoding<T> {
    pub reference: Option<T>,
    /// One entry per indicator column.
    pub levels: Vec<T>,
    /// Column-major: `columns[j][i]` is 1.0 when row `i` has `levels[j]`.
    pub columns: Vec<Vec<f64>>,
}

impl<T> CategoricalEncoding<T> {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }
}

pub fn encode_categorical<T: Ord + Clone>(values: &[T]) -> CategoricalEncoding<T> {
    let distinct: BTreeSet<&T> = values.iter().collect();
    let mut it = distinct.into_iter();
    let reference = it.next().cloned();
    let levels: Vec<T> = it.cloned().collect();
    let columns = levels
        .iter()
        .map(|lvl| {
            values
                .iter()
                .map(|v| if v == lvl { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    CategoricalEncoding {
        reference,
        levels,
        columns,
    }
}
