use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::canonical_name;
use super::{DatasetError, FeatureSchema, FlowDataset, FlowRecord, Result};

/// What to do with feature cells that are blank, unparseable or non-finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingValuePolicy {
    #[default]
    DropRow,
    ImputeMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub policy: MissingValuePolicy,
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub invalid_cells: usize,
    pub cells_imputed: usize,
    /// Invalid cells per feature column; only columns with at least one entry.
    pub invalid_by_column: BTreeMap<String, usize>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "policy = {:?}", self.policy)?;
        writeln!(f, "rows_read = {}", self.rows_read)?;
        writeln!(f, "rows_kept = {}", self.rows_kept)?;
        writeln!(f, "rows_dropped = {}", self.rows_dropped)?;
        writeln!(f, "invalid_cells = {}", self.invalid_cells)?;
        write!(f, "cells_imputed = {}", self.cells_imputed)?;
        for (col, n) in &self.invalid_by_column {
            write!(f, "\ninvalid[{col}] = {n}")?;
        }
        Ok(())
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

/// Header lookup: exact match first, then canonical-name match.
fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name).or_else(|| {
        let key = canonical_name(name);
        headers.iter().position(|h| canonical_name(h) == key)
    })
}

/// Reads an RFC-4180 CSV with a header row. Columns are matched by name;
/// extra columns are ignored.
pub fn read_csv<R: Read>(
    reader: R,
    schema: &FeatureSchema,
    policy: MissingValuePolicy,
) -> Result<(FlowDataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let columns = schema
        .names()
        .iter()
        .map(|n| find_column(&headers, n).ok_or_else(|| DatasetError::MissingColumn(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    let label_col = find_column(&headers, schema.label_name())
        .ok_or_else(|| DatasetError::MissingColumn(schema.label_name().to_string()))?;

    let d = schema.n_features();
    let mut rows: Vec<(Vec<Option<f64>>, usize)> = Vec::new();
    let mut invalid_by_col = vec![0usize; d];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let raw_label = rec.get(label_col).unwrap_or("");
        let label = schema
            .parse_label(raw_label)
            .ok_or_else(|| DatasetError::LabelOutOfRange { line, value: raw_label.to_string() })?;
        let cells: Vec<Option<f64>> = columns.iter().map(|&c| rec.get(c).and_then(parse_cell)).collect();
        for (j, c) in cells.iter().enumerate() {
            if c.is_none() {
                invalid_by_col[j] += 1;
            }
        }
        rows.push((cells, label));
    }

    let rows_read = rows.len();
    let invalid_cells: usize = invalid_by_col.iter().sum();
    let mut report = LoadReport {
        policy,
        rows_read,
        rows_kept: 0,
        rows_dropped: 0,
        invalid_cells,
        cells_imputed: 0,
        invalid_by_column: schema
            .names()
            .iter()
            .zip(&invalid_by_col)
            .filter(|(_, &n)| n > 0)
            .map(|(name, &n)| (name.clone(), n))
            .collect(),
    };

    let records: Vec<FlowRecord> = match policy {
        MissingValuePolicy::DropRow => rows
            .into_iter()
            .filter_map(|(cells, label)| {
                cells.into_iter().collect::<Option<Vec<f64>>>().map(|features| FlowRecord { features, label })
            })
            .collect(),
        MissingValuePolicy::ImputeMedian => {
            let mut medians = vec![0.0; d];
            for (j, m) in medians.iter_mut().enumerate() {
                if invalid_by_col[j] == 0 {
                    continue;
                }
                let mut valid: Vec<f64> = rows.iter().filter_map(|(c, _)| c[j]).collect();
                *m = match median(&mut valid) {
                    Some(v) => v,
                    None if rows.is_empty() => 0.0,
                    None => return Err(DatasetError::NoValidValues(schema.names()[j].clone())),
                };
            }
            report.cells_imputed = invalid_cells;
            rows.into_iter()
                .map(|(cells, label)| FlowRecord {
                    features: cells.iter().enumerate().map(|(j, c)| c.unwrap_or(medians[j])).collect(),
                    label,
                })
                .collect()
        }
    };
    report.rows_kept = records.len();
    report.rows_dropped = rows_read - records.len();
    if records.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    Ok((FlowDataset::new(schema.clone(), records)?, report))
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    policy: MissingValuePolicy,
) -> Result<(FlowDataset, LoadReport)> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), schema, policy)
}

/// Writes features in schema order followed by the label id. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(dataset: &FlowDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = dataset.schema();
    w.write_record(schema.names().iter().map(String::as_str).chain([schema.label_name()]))?;
    for r in dataset.records() {
        let mut row: Vec<String> = r.features.iter().map(|v| v.to_string()).collect();
        row.push(r.label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
