use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Overlay the flags given on the command line onto a JSON config file.
/// Flags that were not given serialise as null and leave the file's value.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Path>) -> Result<T, CliError> {
    let mut base = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            match serde_json::from_str(&text)? {
                Value::Object(m) => m,
                _ => return Err(CliError::Config("config file must hold a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    if let Value::Object(over) = serde_json::to_value(flags)? {
        for (k, v) in over {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    Ok(serde_json::from_value(Value::Object(base))?)
}

/// `log:start,stop,count` (log-spaced) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("x grid `{spec}`: {why}"));
    let xs = if let Some(rest) = spec.trim().strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(bad("expected log:start,stop,count"));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad("stop is not a number"))?;
        let n: usize = parts[2].parse().map_err(|_| bad("count is not an integer"))?;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(bad("need 0 < start < stop"));
        }
        if n < 4 {
            return Err(bad("count must be at least 4"));
        }
        subexp::diag::log_grid(lo, hi, n)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("not a number list")))
            .collect::<Result<_, _>>()?
    };
    if xs.len() < 4 {
        return Err(bad("count must be at least 4"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(bad("values must be finite, nonnegative and strictly increasing"));
    }
    Ok(xs)
}

pub fn parse_list(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what} `{spec}` is not a number list")))
        })
        .collect()
}

pub fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}
