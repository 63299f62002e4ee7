//! Deterministic JSON and CSV emission with atomic file replacement.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::Failure;

/// Fixed 17-significant-digit rendering.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn render(v: &Value, pretty: bool, depth: usize, out: &mut String) {
    let pad = |out: &mut String, d: usize| {
        if pretty {
            out.push('\n');
            out.push_str(&"  ".repeat(d));
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) if !n.is_f64() => out.push_str(&u.to_string()),
            (_, Some(i), _) if !n.is_f64() => out.push_str(&i.to_string()),
            (_, _, Some(x)) if x.is_finite() => out.push_str(&num(x)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                pad(out, depth + 1);
                render(item, pretty, depth + 1, out);
            }
            if !items.is_empty() {
                pad(out, depth);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(key).expect("key"));
                out.push_str(if pretty { ": " } else { ":" });
                render(item, pretty, depth + 1, out);
            }
            if !map.is_empty() {
                pad(out, depth);
            }
            out.push('}');
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Invalid(format!("serialization: {e}")))
}

/// Indented JSON document ending in a newline.
pub fn json_pretty<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = String::new();
    render(&to_value(v)?, true, 0, &mut s);
    s.push('\n');
    Ok(s)
}

/// Single-line JSON.
pub fn json_line<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = String::new();
    render(&to_value(v)?, false, 0, &mut s);
    Ok(s)
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>, Failure>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().flexible(header.is_empty()).from_writer(Vec::new());
    let err = |e: csv::Error| Failure::Invalid(format!("csv: {e}"));
    if !header.is_empty() {
        w.write_record(header).map_err(err)?;
    }
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Failure::Invalid(format!("csv: {e}")))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), Failure> {
    write_atomic(path, json_pretty(v)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_digits() {
        assert_eq!(num(2.0), "2.0000000000000000e0");
        assert_eq!(num(-0.1), "-1.0000000000000001e-1");
        let v = serde_json::json!({"b": 1, "a": [0.5, null, true], "c": "x"});
        assert_eq!(json_line(&v).unwrap(), r#"{"a":[5.0000000000000000e-1,null,true],"b":1,"c":"x"}"#);
        assert!(json_pretty(&v).unwrap().ends_with("}\n"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
