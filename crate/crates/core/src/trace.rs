//! Per-iteration solver records and their CSV form.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "iter,dual_obj,primal_obj,gap,consensus_residual,n_comm,n_comp,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub dual_obj: f64,
    pub primal_obj: f64,
    pub gap: f64,
    pub consensus_residual: f64,
    pub n_comm: u64,
    pub n_comp: u64,
    pub wall_ms: f64,
}

impl TraceRow {
    /// Bitwise equality, so `NaN` columns compare equal to themselves.
    pub fn bit_eq(&self, other: &TraceRow) -> bool {
        self.iter == other.iter
            && self.n_comm == other.n_comm
            && self.n_comp == other.n_comp
            && [
                (self.dual_obj, other.dual_obj),
                (self.primal_obj, other.primal_obj),
                (self.gap, other.gap),
                (self.consensus_residual, other.consensus_residual),
                (self.wall_ms, other.wall_ms),
            ]
            .iter()
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Ordered trace rows. `iter` strictly increases and the counters never
/// decrease.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    rows: Vec<TraceRow>,
}

impl SolverTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.iter <= last.iter {
                return Err(Error::Numeric(format!(
                    "trace iteration {} does not follow {}",
                    row.iter, last.iter
                )));
            }
            if row.n_comm < last.n_comm || row.n_comp < last.n_comp {
                return Err(Error::Numeric("trace counters decreased".into()));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn bit_eq(&self, other: &SolverTrace) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.bit_eq(b))
    }

    /// Values of a named numeric column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let pick: fn(&TraceRow) -> f64 = match name {
            "iter" => |r| r.iter as f64,
            "dual_obj" => |r| r.dual_obj,
            "primal_obj" => |r| r.primal_obj,
            "gap" => |r| r.gap,
            "consensus_residual" => |r| r.consensus_residual,
            "n_comm" => |r| r.n_comm as f64,
            "n_comp" => |r| r.n_comp as f64,
            "wall_ms" => |r| r.wall_ms,
            _ => return Err(Error::Config(format!("unknown trace column '{name}'"))),
        };
        Ok(self.rows.iter().map(pick).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.iter,
                r.dual_obj,
                r.primal_obj,
                r.gap,
                r.consensus_residual,
                r.n_comm,
                r.n_comp,
                r.wall_ms
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected header '{TRACE_HEADER}'"),
                })
            }
        }
        let mut trace = SolverTrace::new();
        for (k, line) in lines {
            let line_no = k + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 8 fields, got {}", f.len()),
                });
            }
            let int = |s: &str| {
                s.parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad integer '{s}'"),
                })
            };
            let real = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad real '{s}'"),
                })
            };
            let row = TraceRow {
                iter: int(f[0])?,
                dual_obj: real(f[1])?,
                primal_obj: real(f[2])?,
                gap: real(f[3])?,
                consensus_residual: real(f[4])?,
                n_comm: int(f[5])?,
                n_comp: int(f[6])?,
                wall_ms: real(f[7])?,
            };
            trace.push(row).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
        }
        Ok(trace)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Optional wall clock: reports zero when disabled so traces stay
/// byte-reproducible.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    start: Option<Instant>,
}

impl Clock {
    pub fn new(enabled: bool) -> Self {
        Clock { start: enabled.then(Instant::now) }
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3)
    }
}
