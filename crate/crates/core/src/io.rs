//! Count files: a JSON array of records or a CSV table with header
//! `i,j,n_pp,n_pm,n_mp,n_mm`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};
use crate::measurement::CountRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// `.csv` files are CSV; everything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Wide integer fields so negative or oversized counts are reported, not
/// swallowed by the parser.
#[derive(Debug, Deserialize)]
struct RawJson {
    setting: [i64; 2],
    counts: [i64; 4],
    #[serde(default)]
    budget: Option<i64>,
}

#[derive(Debug, Deserialize)]
struct RawCsv {
    i: i64,
    j: i64,
    n_pp: i64,
    n_pm: i64,
    n_mp: i64,
    n_mm: i64,
}

#[derive(Serialize)]
struct CsvRow {
    i: usize,
    j: usize,
    n_pp: u64,
    n_pm: u64,
    n_mp: u64,
    n_mm: u64,
}

fn validate(setting: [i64; 2], counts: [i64; 4], budget: Option<i64>) -> std::result::Result<CountRecord, String> {
    let [i, j] = setting;
    if !(1..=3).contains(&i) || !(1..=3).contains(&j) {
        return Err(format!("setting ({i}, {j}) outside 1..=3"));
    }
    if let Some(k) = counts.iter().position(|&c| c < 0) {
        return Err(format!("negative count {} at position {k}", counts[k]));
    }
    let counts = counts.map(|c| c as u64);
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err("total count is zero".into());
    }
    let budget = match budget {
        Some(b) if b <= 0 => return Err(format!("budget {b} must be positive")),
        Some(b) => b as u64,
        None => total,
    };
    Ok(CountRecord {
        setting: (i as usize, j as usize),
        counts,
        budget,
    })
}

fn collect(parsed: Vec<std::result::Result<CountRecord, String>>) -> Result<Vec<CountRecord>> {
    let mut errors = Vec::new();
    let mut records = Vec::new();
    let mut seen = [[None; 3]; 3];
    for (index, item) in parsed.into_iter().enumerate() {
        match item {
            Ok(r) => {
                let slot = &mut seen[r.setting.0 - 1][r.setting.1 - 1];
                if let Some(first) = *slot {
                    errors.push(RecordError {
                        index,
                        message: format!("duplicate setting {:?} (first at record {first})", r.setting),
                    });
                } else {
                    *slot = Some(index);
                    records.push(r);
                }
            }
            Err(message) => errors.push(RecordError { index, message }),
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(Error::InvalidRecords(errors))
    }
}

pub fn read_json<R: Read>(reader: R) -> Result<Vec<CountRecord>> {
    let items: Vec<serde_json::Value> = serde_json::from_reader(reader)?;
    let parsed = items
        .into_iter()
        .map(|v| {
            serde_json::from_value::<RawJson>(v)
                .map_err(|e| e.to_string())
                .and_then(|r| validate(r.setting, r.counts, r.budget))
        })
        .collect();
    collect(parsed)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parsed = rdr
        .deserialize::<RawCsv>()
        .map(|row| {
            row.map_err(|e| e.to_string())
                .and_then(|r| validate([r.i, r.j], [r.n_pp, r.n_pm, r.n_mp, r.n_mm], None))
        })
        .collect();
    collect(parsed)
}

pub fn write_json<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = writer;
    serde_json::to_writer_pretty(&mut w, records)?;
    writeln!(w)?;
    Ok(())
}

/// CSV output carries no budget column; reading it back sets the budget to
/// the total count.
pub fn write_csv<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        let [n_pp, n_pm, n_mp, n_mm] = r.counts;
        wtr.serialize(CsvRow {
            i: r.setting.0,
            j: r.setting.1,
            n_pp,
            n_pm,
            n_mp,
            n_mm,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_counts(path: &Path) -> Result<Vec<CountRecord>> {
    let reader = BufReader::new(File::open(path)?);
    match Format::from_path(path) {
        Format::Json => read_json(reader),
        Format::Csv => read_csv(reader),
    }
}

pub fn write_counts(path: &Path, records: &[CountRecord], format: Format) -> Result<()> {
    let writer = BufWriter::new(File::create(path)?);
    match format {
        Format::Json => write_json(writer, records),
        Format::Csv => write_csv(writer, records),
    }
}
