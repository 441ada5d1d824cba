use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use subexp::diag::DiagnosticReport;

use crate::CliError;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A rectangular numeric table with named columns.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| num(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.to_string(), json!(v)))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

/// Reports in long format: `group,report,x,observed,target,err_estimate,verdict`.
pub fn reports_csv(reports: &[(String, DiagnosticReport)]) -> String {
    let mut s = String::from("group,report,x,observed,target,err_estimate,verdict\n");
    for (group, r) in reports {
        for i in 0..r.xs.len() {
            let e = r.err.get(i).copied().unwrap_or(0.0);
            let _ = writeln!(
                s,
                "{group},{},{},{},{},{},{}",
                r.name,
                num(r.xs[i]),
                num(r.observed[i]),
                num(r.target),
                num(e),
                r.verdict
            );
        }
    }
    s
}

pub fn reports_json(reports: &[(String, DiagnosticReport)]) -> Value {
    Value::Array(
        reports
            .iter()
            .map(|(g, r)| json!({ "group": g, "report": r }))
            .collect(),
    )
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
        }
    }
    Ok(())
}

pub fn emit_json(v: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    emit(&text, out)
}

pub fn summary(reports: &[(String, DiagnosticReport)]) {
    for (g, r) in reports {
        let last = r.last().map(|(x, o)| format!(" last {o:.6e} at x = {x:.4e}")).unwrap_or_default();
        eprintln!("{g} {}: {} (target {}, trend {:.3}){last}", r.name, r.verdict, r.target, r.trend);
    }
}
