//! Deterministic number formatting for emitted reports.

use serde::Serialize;
use serde_json::Value;

/// `v` rounded to 9 significant digits.
pub fn round9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().unwrap_or(v)
}

/// Shortest decimal text of `v` rounded to 9 significant digits.
pub fn fmt9(v: f64) -> String {
    format!("{}", round9(v))
}

/// JSON value of `data` with every float rounded to 9 significant digits.
/// Non-finite floats become `null`.
pub fn to_rounded_json<T: Serialize>(data: &T) -> serde_json::Result<Value> {
    let mut v = serde_json::to_value(data)?;
    round_in_place(&mut v);
    Ok(v)
}

fn round_in_place(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            *v = serde_json::Number::from_f64(round9(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_in_place),
        Value::Object(map) => map.values_mut().for_each(round_in_place),
        _ => {}
    }
}
