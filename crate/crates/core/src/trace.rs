//! Solver traces: one row per MM iterate, saddle iteration, bias iteration
//! and SDCA call, plus aggregate oracle-call counters.
//!
//! CSV columns, in order:
//!
//! | column      | meaning                                                       |
//! |-------------|---------------------------------------------------------------|
//! | level       | `mm`, `saddle`, `bias` or `sdca`                              |
//! | mm_iter     | MM iteration (0 for the initial point / standalone solves)    |
//! | saddle_iter | multiplier cutting-plane iteration                            |
//! | bias_iter   | bias cutting-plane iteration                                  |
//! | epochs      | SDCA epochs (sdca rows)                                       |
//! | chooser     | cut chooser in effect (`max`, `centroid`, `min`, or empty)    |
//! | m           | number of constraints                                         |
//! | target_eps  | tolerance this loop must reach                                |
//! | lower       | running lower bound (`L_t`, `L'_t`, dual value)               |
//! | upper       | running upper bound (`U_t`, `U'_t`, primal value)             |
//! | eps         | tolerance handed to the next level (`eps_t`, `eps'_t`)        |
//! | cut_value   | upper value of the new cut (`u_t`, `u'_t`); mm: ramp objective|
//! | cut_lower   | lower value of the new cut (`l_t`, `l'_t`)                    |
//! | point       | `v_t` (`;`-separated), `b_t`, or the MM iterate's bias        |
//! | area        | measure of the centroid region (1-d choosers)                 |
//! | violation   | max ramp constraint violation (mm rows)                       |
//! | calls       | inner oracle calls made for this row                          |
//!
//! A row with an empty `point` closes its loop: bounds are final and no cut
//! was added. Missing numbers are written as `NaN`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Mm,
    Saddle,
    Bias,
    Sdca,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Mm => "mm",
            Level::Saddle => "saddle",
            Level::Bias => "bias",
            Level::Sdca => "sdca",
        }
    }

    fn parse(s: &str) -> Option<Level> {
        Some(match s {
            "mm" => Level::Mm,
            "saddle" => Level::Saddle,
            "bias" => Level::Bias,
            "sdca" => Level::Sdca,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub level: Level,
    pub mm_iter: usize,
    pub saddle_iter: usize,
    pub bias_iter: usize,
    pub epochs: usize,
    pub chooser: String,
    pub m: usize,
    pub target_eps: f64,
    pub lower: f64,
    pub upper: f64,
    pub eps: f64,
    pub cut_value: f64,
    pub cut_lower: f64,
    pub point: Vec<f64>,
    pub area: f64,
    pub violation: f64,
    pub calls: usize,
}

impl TraceRow {
    pub fn new(level: Level) -> Self {
        TraceRow {
            level,
            mm_iter: 0,
            saddle_iter: 0,
            bias_iter: 0,
            epochs: 0,
            chooser: String::new(),
            m: 0,
            target_eps: f64::NAN,
            lower: f64::NAN,
            upper: f64::NAN,
            eps: f64::NAN,
            cut_value: f64::NAN,
            cut_lower: f64::NAN,
            point: Vec::new(),
            area: f64::NAN,
            violation: f64::NAN,
            calls: 0,
        }
    }

    /// Whether this row closes its loop (no cut was added).
    pub fn is_final(&self) -> bool {
        self.point.is_empty() && matches!(self.level, Level::Saddle | Level::Bias)
    }
}

/// Nesting position that new rows inherit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Position {
    pub mm_iter: usize,
    pub saddle_iter: usize,
    pub bias_iter: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    pub svm_calls: usize,
    pub sdca_calls: usize,
    pub sdca_epochs: usize,
    pub lp_pivots: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub rows: Vec<TraceRow>,
    pub position: Position,
    pub counters: Counters,
}

pub const HEADER: &str = "level,mm_iter,saddle_iter,bias_iter,epochs,chooser,m,target_eps,lower,upper,eps,cut_value,cut_lower,point,area,violation,calls";

impl SolverTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row stamped with the current position.
    pub fn push(&mut self, mut row: TraceRow) {
        row.mm_iter = self.position.mm_iter;
        if row.level != Level::Mm {
            row.saddle_iter = self.position.saddle_iter;
        }
        if matches!(row.level, Level::Bias | Level::Sdca) {
            row.bias_iter = self.position.bias_iter;
        }
        self.rows.push(row);
    }

    pub fn rows_at(&self, level: Level) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.level == level)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            let point = r.point.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?},{:?},{}",
                r.level.as_str(),
                r.mm_iter,
                r.saddle_iter,
                r.bias_iter,
                r.epochs,
                r.chooser,
                r.m,
                r.target_eps,
                r.lower,
                r.upper,
                r.eps,
                r.cut_value,
                r.cut_lower,
                point,
                r.area,
                r.violation,
                r.calls
            );
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == HEADER => {}
            _ => return Err(parse_err(1, "missing or unexpected trace header".into())),
        }
        let mut trace = SolverTrace::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 17 {
                return Err(parse_err(lineno, format!("expected 17 fields, found {}", f.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| parse_err(lineno, format!("{s:?}: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(lineno, format!("{s:?}: {e}")));
            let level = Level::parse(f[0]).ok_or_else(|| parse_err(lineno, format!("unknown level {:?}", f[0])))?;
            let point = if f[13].is_empty() {
                Vec::new()
            } else {
                f[13].split(';').map(num).collect::<Result<Vec<_>>>()?
            };
            trace.rows.push(TraceRow {
                level,
                mm_iter: int(f[1])?,
                saddle_iter: int(f[2])?,
                bias_iter: int(f[3])?,
                epochs: int(f[4])?,
                chooser: f[5].to_string(),
                m: int(f[6])?,
                target_eps: num(f[7])?,
                lower: num(f[8])?,
                upper: num(f[9])?,
                eps: num(f[10])?,
                cut_value: num(f[11])?,
                cut_lower: num(f[12])?,
                point,
                area: num(f[14])?,
                violation: num(f[15])?,
                calls: int(f[16])?,
            });
        }
        Ok(trace)
    }
}
