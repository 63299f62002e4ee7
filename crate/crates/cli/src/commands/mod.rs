pub mod cone;
pub mod minimize;
pub mod profile;
pub mod stability;
pub mod sweep;
pub mod varifold;

/// Comma-separated reals, e.g. `1,0` or `0.1,-0.2,0.3`.
pub fn reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}

pub fn pair(s: &str) -> Result<(f64, f64), String> {
    match reals(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        v => Err(format!("expected 2 comma-separated values, found {}", v.len())),
    }
}

pub fn triple(s: &str) -> Result<[f64; 3], String> {
    match reals(s)?.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        v => Err(format!("expected 3 comma-separated values, found {}", v.len())),
    }
}
