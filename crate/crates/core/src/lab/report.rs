use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A named verdict inside a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A report column: quantity name and unit, written as `name [unit]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }

    pub fn header(&self) -> String {
        format!("{} [{}]", self.name, self.unit)
    }
}

/// Per-`eps` values of the quantities a study tracks, with the verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    pub study: String,
    pub scenario: String,
    pub eps: Vec<T>,
    /// Boundary mesh size used at each `eps` (zero when no mesh is involved).
    pub h: Vec<T>,
    pub columns: Vec<Column>,
    /// One row per `eps`, one value per column.
    pub rows: Vec<Vec<T>>,
    /// Column whose decay the rate column describes.
    pub primary: usize,
    pub extrapolated: Option<T>,
    /// Discretization floor from the h-refinement control run, if one was made.
    pub floor: Option<T>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl<T: Real> ConvergenceReport<T> {
    pub fn new(study: &str, scenario: &str, columns: Vec<Column>, primary: usize) -> Self {
        Self {
            study: study.into(),
            scenario: scenario.into(),
            eps: Vec::new(),
            h: Vec::new(),
            columns,
            rows: Vec::new(),
            primary,
            extrapolated: None,
            floor: None,
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, eps: T, h: T, row: Vec<T>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.eps.push(eps);
        self.h.push(h);
        self.rows.push(row);
    }

    /// True when every check passed (and there is at least one).
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn column(&self, name: &str) -> Option<Vec<T>> {
        let k = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Observed order `log(v_{k-1} / v_k) / log(eps_{k-1} / eps_k)` of the
    /// primary column (against `h` when the report has no `eps`); `None`
    /// where either value is not positive. Empty when the report has no
    /// primary column.
    pub fn rates(&self) -> Vec<Option<T>> {
        if self.primary >= self.columns.len() {
            return Vec::new();
        }
        let v: Vec<T> = self.rows.iter().map(|r| r[self.primary]).collect();
        let x = if self.eps.iter().all(|&e| e > T::zero()) {
            &self.eps
        } else {
            &self.h
        };
        (0..v.len())
            .map(|k| {
                if k == 0 || !(v[k] > T::zero() && v[k - 1] > T::zero() && x[k] > T::zero() && x[k] != x[k - 1]) {
                    return None;
                }
                Some((v[k - 1] / v[k]).ln() / (x[k - 1] / x[k]).ln())
            })
            .collect()
    }

    /// Columns `eps, h, <values>, rate, pass`. The pass column repeats the
    /// overall verdict so every row is self-describing.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["eps [1]".to_string(), "h [length]".to_string()];
        header.extend(self.columns.iter().map(Column::header));
        let rates = self.rates();
        let with_rate = self.primary < self.columns.len();
        if with_rate {
            header.push(format!("rate of {} [1]", self.columns[self.primary].name));
        }
        header.push("pass [bool]".into());
        w.write_record(&header).map_err(csv_error)?;
        let pass = self.passed().to_string();
        for (k, row) in self.rows.iter().enumerate() {
            let mut rec = vec![number(self.eps[k]), number(self.h[k])];
            rec.extend(row.iter().map(|&v| number(v)));
            if with_rate {
                rec.push(rates[k].map(number).unwrap_or_default());
            }
            rec.push(pass.clone());
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal form; stable across runs.
pub(crate) fn number<T: Real>(v: T) -> String {
    format!("{v:e}")
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Aitken extrapolation of a sequence from its last three values. `None`
/// when the differences do not shrink geometrically with one sign.
pub fn aitken<T: Real>(values: &[T]) -> Option<T> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let (m1, m2, m3) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (m2 - m1, m3 - m2);
    if d2 == T::zero() {
        return Some(m3);
    }
    if d1 * d2 <= T::zero() || d2.abs() >= d1.abs() {
        return None;
    }
    Some(m3 - d2 * d2 / (d2 - d1))
}

/// Strict decrease, allowing each step to rise by at most `slack`.
pub fn decreasing<T: Real>(values: &[T], slack: T) -> bool {
    values.windows(2).all(|w| w[1] < w[0] || w[1] <= w[0] + slack)
}

/// The convergence rule for distance-like sequences tending to zero: the
/// last value is at most 5% of the first, or the extrapolated limit is at
/// most three discretization floors. Sequences that are zero throughout
/// (up to roundoff relative to `scale`) pass.
pub fn convergence_check<T: Real>(name: &str, values: &[T], floor: Option<T>, scale: T) -> (Check, T) {
    let first = values.first().copied().unwrap_or_else(T::zero);
    let last = values.last().copied().unwrap_or_else(T::zero);
    let limit = aitken(values).unwrap_or(last).abs();
    let tiny = T::tol(1e-12, 100.0) * scale.max(T::one());
    if values.iter().all(|v| v.abs() <= tiny) {
        return (Check::new(name, true, "identically zero"), T::zero());
    }
    let ratio_ok = last <= T::lit(0.05) * first;
    let floor_ok = floor.is_some_and(|f| limit <= T::lit(3.0) * f);
    let detail = format!(
        "first {first:e}, last {last:e}, extrapolated {limit:e}, floor {}",
        floor.map_or("n/a".into(), |f| format!("{f:e}"))
    );
    (Check::new(name, ratio_ok || floor_ok, detail), limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aitken_recovers_geometric_limit() {
        let v: Vec<f64> = (0..5).map(|k| 3.0 + 0.5f64.powi(k)).collect();
        assert!((aitken(&v).unwrap() - 3.0).abs() < 1e-12);
        assert!(aitken(&[1.0, 2.0, 1.0]).is_none());
    }

    #[test]
    fn csv_has_units_and_rates() {
        let mut r = ConvergenceReport::<f64>::new("demo", "none", vec![Column::new("d", "energy")], 0);
        r.push_row(0.2, 0.025, vec![1.0]);
        r.push_row(0.1, 0.0125, vec![0.5]);
        r.checks.push(Check::new("ok", true, ""));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "eps [1],h [length],d [energy],rate of d [1],pass [bool]");
        assert_eq!(lines[2], "1e-1,1.25e-2,5e-1,1e0,true");
    }

    #[test]
    fn empty_report_writes_header_only() {
        let r = ConvergenceReport::<f64>::new("demo", "none", Vec::new(), 2);
        assert!(r.rates().is_empty());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "eps [1],h [length],pass [bool]\n");
    }

    #[test]
    fn zero_sequences_pass() {
        let (c, l) = convergence_check("z", &[0.0, 0.0, 0.0], None, 1.0);
        assert!(c.passed && l == 0.0);
        let (c, _) = convergence_check("slow", &[1.0, 0.9, 0.8], Some(0.01), 1.0);
        assert!(!c.passed);
    }
}
