use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Iterations completed, starting at 1.
    pub iter: u64,
    /// Row projected onto in this iteration.
    pub row: usize,
    /// `||Ax - b||^2`, or `||e(Ax - b)||_inf` for systems with inequalities.
    pub sq_error: f64,
    /// `||x - x*||^2` when a reference solution is known; for inequality
    /// systems the exact squared distance to the feasible set when it has a
    /// closed form.
    pub sq_dist: Option<f64>,
    /// Cumulative wall time in nanoseconds.
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub initial_sq_error: f64,
    pub initial_sq_dist: Option<f64>,
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    iter: u64,
    row: Option<usize>,
    sq_error: f64,
    sq_error_norm: f64,
    sq_dist: Option<f64>,
    sq_dist_norm: Option<f64>,
    wall_ns: u64,
}

/// `value / initial`, with `0 / 0 = 0`.
pub fn normalize(value: f64, initial: f64) -> f64 {
    if initial == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        value / initial
    }
}

impl ConvergenceTrace {
    pub fn new(initial_sq_error: f64, initial_sq_dist: Option<f64>) -> Self {
        Self {
            initial_sq_error,
            initial_sq_dist,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rows(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.row).collect()
    }

    /// Error before the first step followed by the error after each step.
    pub fn sq_errors(&self) -> Vec<f64> {
        std::iter::once(self.initial_sq_error)
            .chain(self.records.iter().map(|r| r.sq_error))
            .collect()
    }

    /// Distance before the first step followed by the distance after each
    /// step.
    pub fn sq_dists(&self) -> Result<Vec<f64>> {
        let first = self.initial_sq_dist.ok_or(Error::MissingDistance)?;
        let mut out = Vec::with_capacity(self.records.len() + 1);
        out.push(first);
        for r in &self.records {
            out.push(r.sq_dist.ok_or(Error::MissingDistance)?);
        }
        Ok(out)
    }

    pub fn final_sq_error(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_sq_error, |r| r.sq_error)
    }

    pub fn final_sq_error_norm(&self) -> f64 {
        normalize(self.final_sq_error(), self.initial_sq_error)
    }

    pub fn final_sq_dist_norm(&self) -> Option<f64> {
        let initial = self.initial_sq_dist?;
        let last = self.records.last().map_or(Some(initial), |r| r.sq_dist)?;
        Some(normalize(last, initial))
    }

    /// Per-step ratios `d_k / d_{k-1}` of the squared distance. `None` where
    /// the previous distance is zero.
    pub fn distance_ratios(&self) -> Result<Vec<Option<f64>>> {
        let d = self.sq_dists()?;
        Ok(d.windows(2)
            .map(|w| if w[0] > 0.0 { Some(w[1] / w[0]) } else { None })
            .collect())
    }

    /// CSV with header `iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns`.
    /// The first data line (`iter = 0`, empty `row`) holds the initial state.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d0 = self.initial_sq_dist;
        let norm_dist = |d: Option<f64>| d.zip(d0).map(|(d, d0)| normalize(d, d0));
        let mut put = |row: CsvRow| w.serialize(row).map_err(|e| Error::Io(e.to_string()));
        put(CsvRow {
            iter: 0,
            row: None,
            sq_error: self.initial_sq_error,
            sq_error_norm: normalize(self.initial_sq_error, self.initial_sq_error),
            sq_dist: d0,
            sq_dist_norm: norm_dist(d0),
            wall_ns: 0,
        })?;
        for r in &self.records {
            put(CsvRow {
                iter: r.iter,
                row: Some(r.row),
                sq_error: r.sq_error,
                sq_error_norm: normalize(r.sq_error, self.initial_sq_error),
                sq_dist: r.sq_dist,
                sq_dist_norm: norm_dist(r.sq_dist),
                wall_ns: r.wall_ns,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Reads the format produced by [`write_csv`](Self::write_csv). The
    /// normalized columns are ignored.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut trace: Option<Self> = None;
        for (k, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let line = k + 2;
            let row = row.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            match (&mut trace, row.row) {
                (None, None) => trace = Some(Self::new(row.sq_error, row.sq_dist)),
                (None, Some(_)) => {
                    return Err(Error::Parse {
                        line,
                        message: "first record must be the initial state (empty row)".into(),
                    })
                }
                (Some(t), Some(r)) => t.records.push(TraceRecord {
                    iter: row.iter,
                    row: r,
                    sq_error: row.sq_error,
                    sq_dist: row.sq_dist,
                    wall_ns: row.wall_ns,
                }),
                (Some(_), None) => {
                    return Err(Error::Parse {
                        line,
                        message: "empty row index after the initial state".into(),
                    })
                }
            }
        }
        trace.ok_or(Error::Parse {
            line: 1,
            message: "trace has no records".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConvergenceTrace {
        let mut t = ConvergenceTrace::new(4.0, Some(2.0));
        t.records.push(TraceRecord {
            iter: 1,
            row: 1,
            sq_error: 1.0,
            sq_dist: Some(1.0),
            wall_ns: 10,
        });
        t.records.push(TraceRecord {
            iter: 2,
            row: 0,
            sq_error: 0.0,
            sq_dist: Some(0.0),
            wall_ns: 20,
        });
        t
    }

    #[test]
    fn csv_layout() {
        let s = sample().to_csv_string();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(
            lines[0],
            "iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns"
        );
        assert_eq!(lines[1], "0,,4.0,1.0,2.0,1.0,0");
        assert_eq!(lines[2], "1,1,1.0,0.25,1.0,0.5,10");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let back = ConvergenceTrace::read_csv(t.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn missing_distance_round_trip() {
        let mut t = ConvergenceTrace::new(1.0, None);
        t.records.push(TraceRecord {
            iter: 1,
            row: 0,
            sq_error: 0.5,
            sq_dist: None,
            wall_ns: 3,
        });
        let s = t.to_csv_string();
        assert!(s.lines().nth(2).unwrap().starts_with("1,0,0.5,0.5,,,"));
        assert_eq!(ConvergenceTrace::read_csv(s.as_bytes()).unwrap(), t);
        assert_eq!(t.distance_ratios().unwrap_err(), Error::MissingDistance);
    }

    #[test]
    fn ratios_skip_zero_predecessors() {
        assert_eq!(
            sample().distance_ratios().unwrap(),
            vec![Some(0.5), Some(0.0)]
        );
        let mut t = sample();
        t.records.push(TraceRecord {
            iter: 3,
            row: 1,
            sq_error: 0.0,
            sq_dist: Some(0.0),
            wall_ns: 30,
        });
        assert_eq!(t.distance_ratios().unwrap()[2], None);
    }

    #[test]
    fn rejects_a_headless_body() {
        let bad = "iter,row,sq_error,sq_error_norm,sq_dist,sq_dist_norm,wall_ns\n1,0,1,1,,,0\n";
        assert!(matches!(
            ConvergenceTrace::read_csv(bad.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }
}
