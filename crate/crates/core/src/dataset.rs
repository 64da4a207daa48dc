//! Competing-risks data model: validation, CSV ingestion, and the canonical
//! descending-time ordering every scan in this crate relies on.
//!
//! The canonical order sorts by time descending with a deterministic
//! tie-break (primary events first, then competing events, then censoring,
//! then input order), so risk-set scans can treat positions as a strict
//! total order even when real data carry tied times.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Event code for a subject: censored, the primary event, or the competing
/// event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Censored,
    Cause1,
    Cause2,
}

impl Status {
    pub fn from_code(code: u8) -> Option<Status> {
        match code {
            0 => Some(Status::Censored),
            1 => Some(Status::Cause1),
            2 => Some(Status::Cause2),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Status::Censored => 0,
            Status::Cause1 => 1,
            Status::Cause2 => 2,
        }
    }

    /// Tie-break priority at a shared time: events precede censoring.
    fn tie_priority(self) -> u8 {
        match self {
            Status::Cause1 => 0,
            Status::Cause2 => 1,
            Status::Censored => 2,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One observed subject: follow-up time, event code, covariate row.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub time: f64,
    pub status: Status,
    pub covariates: Vec<f64>,
}

impl Subject {
    pub fn new(time: f64, status: Status, covariates: Vec<f64>) -> Result<Self> {
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::InvalidData(format!(
                "subject time must be positive and finite, got {time}"
            )));
        }
        if covariates.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidData(
                "subject covariates contain a non-finite entry".to_string(),
            ));
        }
        Ok(Subject {
            time,
            status,
            covariates,
        })
    }
}

/// A validated sample in canonical order: times strictly non-increasing,
/// ties resolved by (status priority, input order). Immutable after
/// construction and safe to share across fitting jobs.
#[derive(Debug, Clone)]
pub struct Dataset {
    times: Vec<f64>,
    status: Vec<Status>,
    /// Column-major covariates: entry (i, j) lives at `j * n + i`.
    covariates: Vec<f64>,
    /// Original input row of each canonical position.
    input_index: Vec<usize>,
    /// Start positions of the distinct-time groups, plus a trailing `n`.
    group_starts: Vec<usize>,
    p: usize,
}

impl Dataset {
    /// Validate, sort descending by time with the deterministic tie-break,
    /// and freeze. Rejects empty input and samples without any primary
    /// event (fitting is undefined on those).
    pub fn canonicalize(raw: Vec<Subject>) -> Result<Self> {
        let ds = Self::canonicalize_lenient(raw)?;
        if ds.n_cause1() == 0 {
            return Err(Error::InvalidData(
                "no primary events (status = 1) in the sample".to_string(),
            ));
        }
        Ok(ds)
    }

    /// As `canonicalize` but admits samples without primary events; such
    /// datasets support censoring estimation and the degenerate scan case
    /// yet are rejected by the fitting entry points.
    pub(crate) fn canonicalize_lenient(raw: Vec<Subject>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidData("empty sample".to_string()));
        }
        let p = raw[0].covariates.len();
        for (i, s) in raw.iter().enumerate() {
            if !(s.time.is_finite() && s.time > 0.0) {
                return Err(Error::InvalidData(format!(
                    "non-positive time at input row {i}"
                )));
            }
            if s.covariates.len() != p {
                return Err(Error::InvalidData(format!(
                    "inconsistent covariate dimension at input row {i}: {} vs {p}",
                    s.covariates.len()
                )));
            }
            if s.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "non-finite covariate at input row {i}"
                )));
            }
        }

        let n = raw.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Stable sort: time descending, events before censoring at ties,
        // original index last so the order is a strict total order.
        order.sort_by(|&a, &b| {
            raw[b]
                .time
                .total_cmp(&raw[a].time)
                .then(raw[a].status.tie_priority().cmp(&raw[b].status.tie_priority()))
                .then(a.cmp(&b))
        });

        let mut times = Vec::with_capacity(n);
        let mut status = Vec::with_capacity(n);
        let mut covariates = vec![0.0; n * p];
        for (pos, &src) in order.iter().enumerate() {
            times.push(raw[src].time);
            status.push(raw[src].status);
            for j in 0..p {
                covariates[j * n + pos] = raw[src].covariates[j];
            }
        }

        let mut group_starts = vec![0];
        for i in 1..n {
            if times[i] != times[i - 1] {
                group_starts.push(i);
            }
        }
        group_starts.push(n);

        Ok(Dataset {
            times,
            status,
            covariates,
            input_index: order,
            group_starts,
            p,
        })
    }

    /// Read a dataset from a CSV file with header `ftime,fstatus,z1,...,zp`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(file);

        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                column: 1,
                message: format!("cannot read header: {e}"),
            })?
            .clone();
        if headers.len() < 3 || headers.get(0) != Some("ftime") || headers.get(1) != Some("fstatus")
        {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!(
                    "header must be ftime,fstatus,z1,...,zp; got '{}'",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let p = headers.len() - 2;
        for j in 0..p {
            let expected = format!("z{}", j + 1);
            if headers.get(j + 2) != Some(expected.as_str()) {
                return Err(Error::Parse {
                    line: 1,
                    column: j + 3,
                    message: format!(
                        "expected covariate column '{expected}', got '{}'",
                        headers.get(j + 2).unwrap_or("")
                    ),
                });
            }
        }

        let mut subjects = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let line = row_idx + 2; // 1-based, after the header line
            let record = record.map_err(|e| Error::Parse {
                line,
                column: 1,
                message: format!("cannot read record: {e}"),
            })?;
            if record.len() != p + 2 {
                return Err(Error::Parse {
                    line,
                    column: record.len().min(p + 2),
                    message: format!("expected {} fields, got {}", p + 2, record.len()),
                });
            }
            let parse_cell = |col: usize| -> Result<f64> {
                let text = record.get(col).unwrap_or("");
                text.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    column: col + 1,
                    message: format!("non-numeric cell '{text}'"),
                })
            };

            let time = parse_cell(0)?;
            if !(time.is_finite() && time > 0.0) {
                return Err(Error::Parse {
                    line,
                    column: 1,
                    message: format!("non-positive time {time}"),
                });
            }
            let status_raw = parse_cell(1)?;
            let status = if status_raw == 0.0 || status_raw == 1.0 || status_raw == 2.0 {
                Status::from_code(status_raw as u8).unwrap()
            } else {
                return Err(Error::Parse {
                    line,
                    column: 2,
                    message: format!("status must be 0, 1, or 2; got {status_raw}"),
                });
            };
            let mut covariates = Vec::with_capacity(p);
            for j in 0..p {
                let z = parse_cell(j + 2)?;
                if !z.is_finite() {
                    return Err(Error::Parse {
                        line,
                        column: j + 3,
                        message: format!("non-finite covariate {z}"),
                    });
                }
                covariates.push(z);
            }
            subjects.push(Subject {
                time,
                status,
                covariates,
            });
        }

        if subjects.len() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 data rows, got {}",
                subjects.len()
            )));
        }
        Self::canonicalize(subjects)
    }

    /// Write the dataset back to CSV in original input order. Floats use
    /// the shortest representation that round-trips exactly, so
    /// `load_csv . write_csv` is the identity on canonical datasets.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io_err = |e: std::io::Error| Error::io(path, e);

        let mut header = String::from("ftime,fstatus");
        for j in 0..self.p {
            header.push_str(&format!(",z{}", j + 1));
        }
        writeln!(out, "{header}").map_err(io_err)?;

        let n = self.n();
        // canonical position of each original input row
        let mut pos_of_input = vec![0usize; n];
        for (pos, &src) in self.input_index.iter().enumerate() {
            pos_of_input[src] = pos;
        }
        for &pos in &pos_of_input {
            write!(out, "{},{}", self.times[pos], self.status[pos]).map_err(io_err)?;
            for j in 0..self.p {
                write!(out, ",{}", self.covariates[j * n + pos]).map_err(io_err)?;
            }
            writeln!(out).map_err(io_err)?;
        }
        out.flush().map_err(io_err)?;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Times in canonical (descending) order.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[Status] {
        &self.status
    }

    /// Covariate column `j` in canonical order (contiguous).
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.covariates[j * n..(j + 1) * n]
    }

    pub fn covariate(&self, i: usize, j: usize) -> f64 {
        self.covariates[j * self.n() + i]
    }

    /// Covariate row of the subject at canonical position `i`.
    pub fn covariate_row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.covariate(i, j)).collect()
    }

    /// Original input row of each canonical position.
    pub fn input_index(&self) -> &[usize] {
        &self.input_index
    }

    /// Distinct-time group boundaries in canonical order: `starts[g]..starts[g+1]`
    /// hold equal times; `starts.last() == n`.
    pub(crate) fn group_starts(&self) -> &[usize] {
        &self.group_starts
    }

    pub fn status_counts(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for s in &self.status {
            counts[s.code() as usize] += 1;
        }
        counts
    }

    pub fn n_cause1(&self) -> usize {
        self.status_counts()[1]
    }

    /// Rebuild the subject list (canonical order).
    pub fn to_subjects(&self) -> Vec<Subject> {
        (0..self.n())
            .map(|i| Subject {
                time: self.times[i],
                status: self.status[i],
                covariates: self.covariate_row(i),
            })
            .collect()
    }

    /// A copy with covariate column `j` replaced by `(z - center[j]) / scale[j]`.
    /// Used by the penalized path's optional standardization.
    pub(crate) fn transformed_columns(&self, center: &[f64], scale: &[f64]) -> Dataset {
        let n = self.n();
        let mut out = self.clone();
        for j in 0..self.p {
            for i in 0..n {
                out.covariates[j * n + i] = (self.covariates[j * n + i] - center[j]) / scale[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn subj(time: f64, status: u8, z: &[f64]) -> Subject {
        Subject::new(time, Status::from_code(status).unwrap(), z.to_vec()).unwrap()
    }

    #[test]
    fn canonical_order_is_descending() {
        let ds = Dataset::canonicalize(vec![
            subj(1.0, 1, &[0.0]),
            subj(3.0, 1, &[1.0]),
            subj(2.0, 1, &[2.0]),
        ])
        .unwrap();
        assert_eq!(ds.times(), &[3.0, 2.0, 1.0]);
        assert_eq!(ds.input_index(), &[1, 2, 0]);
    }

    #[test]
    fn tie_break_puts_cause1_first() {
        let ds = Dataset::canonicalize(vec![
            subj(2.0, 0, &[0.0]),
            subj(2.0, 1, &[1.0]),
            subj(2.0, 2, &[2.0]),
        ])
        .unwrap();
        let codes: Vec<u8> = ds.status().iter().map(|s| s.code()).collect();
        assert_eq!(codes, vec![1, 2, 0]);
        // single tie group
        assert_eq!(ds.group_starts(), &[0, 3]);
    }

    #[test]
    fn rejects_empty_and_eventless() {
        assert!(Dataset::canonicalize(vec![]).is_err());
        let no_events = vec![subj(1.0, 0, &[0.0]), subj(2.0, 2, &[0.0])];
        assert!(Dataset::canonicalize(no_events.clone()).is_err());
        assert!(Dataset::canonicalize_lenient(no_events).is_ok());
    }

    #[test]
    fn load_csv_two_rows() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        std::fs::write(&path, "ftime,fstatus,z1\n1.0,1,0.5\n2.0,0,-0.5\n").unwrap();
        let ds = Dataset::load_csv(&path).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.p(), 1);
        assert_eq!(ds.times(), &[2.0, 1.0]);
    }

    #[test]
    fn load_csv_rejects_bad_cells() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");

        std::fs::write(&path, "ftime,fstatus,z1\n-1.0,1,0.5\n2.0,0,-0.5\n").unwrap();
        match Dataset::load_csv(&path) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 1));
                assert!(message.contains("non-positive time"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, "ftime,fstatus,z1\n1.0,1,abc\n2.0,0,-0.5\n").unwrap();
        match Dataset::load_csv(&path) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("expected parse error, got {other:?}"),
        }

        std::fs::write(&path, "ftime,fstatus,z1\n1.0,3,0.1\n2.0,0,-0.5\n").unwrap();
        assert!(matches!(Dataset::load_csv(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, "ftime,fstatus,z1\n1.0,1\n2.0,0,-0.5\n").unwrap();
        assert!(matches!(Dataset::load_csv(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, "time,fstatus,z1\n1.0,1,0.0\n2.0,0,-0.5\n").unwrap();
        assert!(matches!(Dataset::load_csv(&path), Err(Error::Parse { line: 1, .. })));

        assert!(matches!(
            Dataset::load_csv(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let ds = Dataset::canonicalize(vec![
            subj(0.123456789012345, 1, &[1.5e-8, -2.0]),
            subj(7.25, 2, &[0.3333333333333333, 4.0]),
            subj(7.25, 0, &[1e300, -1e-300]),
        ])
        .unwrap();
        ds.write_csv(&path).unwrap();
        let back = Dataset::load_csv(&path).unwrap();
        assert_eq!(ds.times(), back.times());
        assert_eq!(ds.status(), back.status());
        for j in 0..ds.p() {
            assert_eq!(ds.column(j), back.column(j));
        }
        assert_eq!(ds.input_index(), back.input_index());
    }

    proptest! {
        #[test]
        fn canonicalize_is_a_permutation_and_sorted(
            rows in prop::collection::vec((0.01f64..100.0, 0u8..3, -5.0f64..5.0), 1..200)
        ) {
            let subjects: Vec<Subject> = rows
                .iter()
                .map(|&(t, s, z)| subj(t, s, &[z]))
                .collect();
            prop_assume!(subjects.iter().any(|s| s.status == Status::Cause1));
            let ds = Dataset::canonicalize(subjects.clone()).unwrap();

            // non-increasing times
            for w in ds.times().windows(2) {
                prop_assert!(w[0] >= w[1]);
            }

            // multiset preserved: compare sorted triples
            let mut orig: Vec<(f64, u8, f64)> = subjects
                .iter()
                .map(|s| (s.time, s.status.code(), s.covariates[0]))
                .collect();
            let mut got: Vec<(f64, u8, f64)> = (0..ds.n())
                .map(|i| (ds.times()[i], ds.status()[i].code(), ds.covariate(i, 0)))
                .collect();
            let key = |a: &(f64, u8, f64)| (a.0.to_bits(), a.1, a.2.to_bits());
            orig.sort_by_key(key);
            got.sort_by_key(key);
            prop_assert_eq!(orig, got);

            // idempotent
            let again = Dataset::canonicalize(ds.to_subjects()).unwrap();
            prop_assert_eq!(ds.times(), again.times());
            prop_assert_eq!(ds.status(), again.status());
            prop_assert_eq!(ds.column(0), again.column(0));
        }
    }
}
