//! Text forms accepted on the command line: symbolic multiples of pi,
//! parameter lists, grids, bands and map axes.

use std::f64::consts::PI;

use serde_json::{Map, Number, Value};
use walsh_filter::optimize::Axis;

use crate::error::CliError;

/// Parses `3pi`, `-pi/2`, `0.25*pi`, `3π/4`, `1/6` or a plain number.
pub fn number(text: &str) -> Result<f64, CliError> {
    let s = text.trim().replace('π', "pi").replace(' ', "");
    let bad = || CliError::parse(format!("cannot read `{text}` as a number"));
    if s.is_empty() {
        return Err(bad());
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let ratio = |num: &str, den: &str| -> Result<f64, CliError> {
        let n: f64 = num.parse().map_err(|_| bad())?;
        let d: f64 = den.parse().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(bad());
        }
        Ok(n / d)
    };
    let value = if let Some((before, after)) = body.split_once("pi") {
        let coef = match before.trim_end_matches('*') {
            "" => 1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let den = match after {
            "" => 1.0,
            a => a.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        if den == 0.0 {
            return Err(bad());
        }
        coef * PI / den
    } else if let Some((num, den)) = body.split_once('/') {
        ratio(num, den)?
    } else {
        body.parse::<f64>().map_err(|_| bad())?
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(sign * value)
}

/// JSON value for a parameter: integers stay integers so that index
/// parameters such as `k` deserialize.
pub fn json_number(text: &str) -> Result<Value, CliError> {
    if let Ok(i) = text.trim().parse::<i64>() {
        return Ok(Value::Number(i.into()));
    }
    let v = number(text)?;
    Number::from_f64(v).map(Value::Number).ok_or_else(|| CliError::parse(format!("`{text}` is not finite")))
}

/// `X0=3pi,X3=pi` into a JSON object.
pub fn params(text: &str) -> Result<Map<String, Value>, CliError> {
    let mut out = Map::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) =
            item.split_once('=').ok_or_else(|| CliError::parse(format!("parameter `{item}` is not of the form key=value")))?;
        let key = key.trim();
        if out.insert(key.to_string(), json_number(value)?).is_some() {
            return Err(CliError::parse(format!("parameter `{key}` given twice")));
        }
    }
    Ok(out)
}

/// Comma-separated list of numbers.
pub fn list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(number).collect()
}

/// Frequency grid `lo:hi:points_per_decade`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points_per_decade: usize,
}

pub fn grid(text: &str) -> Result<GridSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, ppd] = parts.as_slice() else {
        return Err(CliError::parse(format!("grid `{text}` is not lo:hi:points_per_decade")));
    };
    let (lo, hi) = (number(lo)?, number(hi)?);
    let ppd: usize = ppd.trim().parse().map_err(|_| CliError::parse(format!("points per decade `{ppd}`")))?;
    if !(lo > 0.0) || !(hi > lo) || ppd == 0 {
        return Err(CliError::parse(format!("grid `{text}` needs 0 < lo < hi and a positive density")));
    }
    Ok(GridSpec { lo, hi, points_per_decade: ppd })
}

/// Band `lo:hi` with `lo >= 0`.
pub fn band(text: &str) -> Result<(f64, f64), CliError> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| CliError::parse(format!("band `{text}` is not lo:hi")))?;
    let (lo, hi) = (number(lo)?, number(hi)?);
    if !(lo >= 0.0) || !(hi > lo) {
        return Err(CliError::parse(format!("band `{text}` needs 0 <= lo < hi")));
    }
    Ok((lo, hi))
}

/// Map axis `name=lo:hi:points`.
pub fn axis(text: &str) -> Result<(String, Axis), CliError> {
    let (name, range) = text.split_once('=').ok_or_else(|| CliError::parse(format!("axis `{text}` is not name=lo:hi:points")))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(CliError::parse(format!("axis `{text}` is not name=lo:hi:points")));
    };
    let points: usize = n.trim().parse().map_err(|_| CliError::parse(format!("axis point count `{n}`")))?;
    if points == 0 {
        return Err(CliError::parse(format!("axis `{text}` has no points")));
    }
    Ok((name.trim().to_string(), Axis { lo: number(lo)?, hi: number(hi)?, points }))
}

/// Replaces string leaves that read as numbers (`"3pi"`) by numbers, except
/// under keys that hold names.
pub fn numeric_strings(value: &mut Value) {
    const NAMES: [&str; 5] = ["family", "kind", "quadrature", "label", "method"];
    match value {
        Value::Object(map) => {
            for (key, v) in map.iter_mut() {
                if NAMES.contains(&key.as_str()) {
                    continue;
                }
                if let Value::String(s) = v {
                    if let Ok(n) = json_number(s) {
                        *v = n;
                    }
                } else {
                    numeric_strings(v);
                }
            }
        }
        Value::Array(items) => {
            for v in items {
                if let Value::String(s) = v {
                    if let Ok(n) = json_number(s) {
                        *v = n;
                    }
                } else {
                    numeric_strings(v);
                }
            }
        }
        _ => {}
    }
}
