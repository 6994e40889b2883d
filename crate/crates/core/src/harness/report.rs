use std::fmt::Write as _;

use serde::Serialize;

/// A single checked property with its measured value and threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// Informational verdicts do not affect [`ConvergenceReport::passed`].
    pub hard: bool,
    pub detail: String,
}

/// Tabulated campaign output: one row per rung or sample group, plus verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    pub seconds: f64,
}

impl ConvergenceReport {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        ConvergenceReport {
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
            seconds: 0.0,
        }
    }

    pub fn push_row(&mut self, label: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((label.into(), values));
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> bool {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            passed,
            hard: true,
            detail: detail.into(),
        });
        passed
    }

    pub fn inform(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.to_string(),
            passed,
            hard: false,
            detail: detail.into(),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().filter(|v| v.hard).all(|v| v.passed)
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.1[i]).collect())
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== {} ({:.1} s)", self.title, self.seconds);
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
        let _ = write!(out, "{:width$}", "");
        for c in &self.columns {
            let _ = write!(out, "  {:>14}", c);
        }
        out.push('\n');
        for (label, vals) in &self.rows {
            let _ = write!(out, "{label:width$}");
            for v in vals {
                let _ = write!(out, "  {:>14.6e}", v);
            }
            out.push('\n');
        }
        for v in &self.verdicts {
            let tag = match (v.passed, v.hard) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "note",
            };
            let _ = writeln!(out, "[{tag}] {}: {}", v.name, v.detail);
        }
        for n in &self.notes {
            let _ = writeln!(out, "  - {n}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (label, vals) in &self.rows {
            out.push_str(label);
            for v in vals {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

/// `true` when every element is strictly smaller than its predecessor.
pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// `[a, b, c]` with each value in short scientific notation.
pub fn fmt_series(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}
