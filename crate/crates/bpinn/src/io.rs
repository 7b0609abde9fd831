//! CSV formats: cohort input, ground-truth sidecar, trajectories and tables.
//!
//! Cohort files have the header `patient_id,time_days,volume_mm3`; lines
//! starting with `#` are comments. Numbers are written in the shortest form
//! that round-trips, so repeated runs produce identical bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use bpinn_core::predictive::PredictiveSummary;
use bpinn_core::simulate::SyntheticPatient;
use bpinn_core::LongitudinalSeries;

use crate::error::{Error, Result};

pub const COHORT_HEADER: [&str; 3] = ["patient_id", "time_days", "volume_mm3"];
pub const TRAJECTORY_HEADER: [&str; 7] = ["time", "mean_log", "lo_log", "hi_log", "mean_vol", "lo_vol", "hi_vol"];

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    /// In order of first appearance in the file.
    pub series: Vec<LongitudinalSeries>,
    pub warnings: Vec<String>,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn fields(line: u64, text: &str) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let record = rdr
        .records()
        .next()
        .unwrap_or_else(|| Ok(csv::StringRecord::new()))
        .map_err(|e| parse_err(line, e.to_string()))?;
    Ok(record.iter().map(str::to_string).collect())
}

/// Parses a cohort CSV. Rows are grouped by patient and sorted by time;
/// blank lines and `#` comments are skipped.
pub fn parse_cohort<R: Read>(mut reader: R) -> Result<Cohort> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| parse_err(0, format!("unreadable input: {e}")))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let Some((header_line, header)) = lines.next() else {
        return Err(parse_err(1, "missing header"));
    };
    if fields(header_line, header)? != COHORT_HEADER {
        return Err(parse_err(header_line, format!("expected header `{}`", COHORT_HEADER.join(","))));
    }
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(f64, f64, u64)>> = HashMap::new();
    for (line, raw) in lines {
        let record = fields(line, raw)?;
        if record.len() != 3 {
            return Err(parse_err(line, format!("expected 3 fields, found {}", record.len())));
        }
        let id = record[0].clone();
        if id.is_empty() {
            return Err(parse_err(line, "empty patient_id"));
        }
        let time: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad time `{}`", record[1])))?;
        let volume: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(line, format!("bad volume `{}`", record[2])))?;
        if !time.is_finite() {
            return Err(parse_err(line, "time must be finite"));
        }
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(parse_err(line, format!("volume must be positive and finite, got {volume}")));
        }
        let entry = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        if let Some(first) = entry.iter().find(|(t, _, _)| *t == time) {
            return Err(parse_err(
                line,
                format!("duplicate time {time} for patient `{id}` (first at line {})", first.2),
            ));
        }
        entry.push((time, volume, line));
    }
    let mut warnings = Vec::new();
    if order.is_empty() {
        warnings.push("cohort file has no observations".to_string());
    }
    let series = order
        .into_iter()
        .map(|id| {
            let mut obs = rows.remove(&id).expect("grouped patient");
            obs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let line = obs[0].2;
            LongitudinalSeries::new(id, obs.iter().map(|o| o.0).collect(), obs.iter().map(|o| o.1).collect())
                .map_err(|e| parse_err(line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Cohort { series, warnings })
}

pub fn load_cohort(path: &Path) -> Result<Cohort> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_cohort(file)
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

/// Writes a table of pre-formatted rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_cohort(path: &Path, series: &[LongitudinalSeries]) -> Result<()> {
    let rows: Vec<Vec<String>> = series
        .iter()
        .flat_map(|s| {
            s.times()
                .iter()
                .zip(s.volumes())
                .map(|(t, v)| vec![s.patient_id().to_string(), num(*t), num(*v)])
        })
        .collect();
    write_table(path, &COHORT_HEADER, &rows)
}

/// Ground-truth parameters of simulated patients.
pub fn write_truth(path: &Path, patients: &[SyntheticPatient]) -> Result<()> {
    let rows: Vec<Vec<String>> = patients
        .iter()
        .map(|p| {
            vec![
                p.series.patient_id().to_string(),
                num(p.truth.alpha()),
                num(p.truth.beta()),
                num(p.truth.y0()),
                num(p.truth.t0()),
            ]
        })
        .collect();
    write_table(path, &["patient_id", "alpha", "beta", "y0", "t0"], &rows)
}

pub fn write_trajectory(path: &Path, s: &PredictiveSummary) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..s.len())
        .map(|j| {
            [s.grid[j], s.mean_log[j], s.lo_log[j], s.hi_log[j], s.mean_vol[j], s.lo_vol[j], s.hi_vol[j]]
                .iter()
                .map(|x| num(*x))
                .collect()
        })
        .collect();
    write_table(path, &TRAJECTORY_HEADER, &rows)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Cohort> {
        parse_cohort(text.as_bytes())
    }

    #[test]
    fn groups_and_sorts() {
        let c = parse("patient_id,time_days,volume_mm3\nA,365,20\n# note\nA,0,10\nB,0,5\nA,730,30\n").unwrap();
        assert_eq!(c.series.len(), 2);
        assert_eq!(c.series[0].patient_id(), "A");
        assert_eq!(c.series[0].times(), &[0.0, 365.0, 730.0]);
        assert_eq!(c.series[0].volumes(), &[10.0, 20.0, 30.0]);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn header_only_is_empty_with_warning() {
        let c = parse("patient_id,time_days,volume_mm3\n").unwrap();
        assert!(c.series.is_empty());
        assert_eq!(c.warnings.len(), 1);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "patient_id,time_days,volume_mm3\nA,0,10\nA,1,10\nA,2,10\nA,3,0\n";
        match parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let text = "patient_id,time_days,volume_mm3\n# c\nA,0,10\nA,0,12\n";
        match parse(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("line 3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("id,t,v\nA,0,1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("# c\n\nid,t,v\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse("patient_id,time_days,volume_mm3\nA,x,1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("patient_id,time_days,volume_mm3\nA,1\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn written_cohorts_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let s = LongitudinalSeries::new("P1", vec![0.0, 0.1 + 0.2], vec![1.0 / 3.0, 2e-7]).unwrap();
        write_cohort(&path, std::slice::from_ref(&s)).unwrap();
        let back = load_cohort(&path).unwrap();
        assert_eq!(back.series, vec![s]);
    }
}
