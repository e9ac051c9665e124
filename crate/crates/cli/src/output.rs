//! CSV and JSON writers.

use std::io::Write;

/// Shortest decimal form of `x` rounded to 12 significant digits; exponent
/// notation outside `[1e-4, 1e15)`.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

/// Writes `header` and `rows` as comma-separated lines with LF endings.
/// `None` cells are left empty.
pub fn write_csv<W: Write>(mut w: W, header: &[String], rows: &[Vec<Option<f64>>]) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(sig12).unwrap_or_default()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Rounds every number in a JSON value to 12 significant digits.
pub fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if !n.is_i64() && !n.is_u64() {
                    let r: f64 = sig12(x).parse().expect("rounded float parses");
                    if let Some(m) = serde_json::Number::from_f64(r) {
                        *n = m;
                    }
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}
