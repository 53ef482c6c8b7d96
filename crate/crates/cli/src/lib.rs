//! Support code for the `sinfreq` binary: the sample file format, list
//! flags, and the rows of the emitted tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod sample_file;
pub mod tables;

pub use sample_file::{ParseError, SampleFile};

/// Parses `a,b,c` where each item is a number or an inclusive `start:stop:step` range.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
        match parts.as_slice() {
            [v] => out.push(num(v)?),
            [a, b, s] => {
                let (a, b, s) = (num(a)?, num(b)?, num(s)?);
                if !(s > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
                    return Err(format!("range '{item}' needs start <= stop and a positive step"));
                }
                let count = ((b - a) / s + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| a + i as f64 * s));
            }
            _ => return Err(format!("'{item}' is neither a number nor start:stop:step")),
        }
    }
    Ok(out)
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("'{s}' is not a non-negative integer")))
        .collect()
}

/// One value for both axes, or one per axis.
pub fn parse_pair(text: &str) -> Result<[usize; 2], String> {
    match parse_usize_list(text)?.as_slice() {
        [a] => Ok([*a, *a]),
        [a, b] => Ok([*a, *b]),
        _ => Err(format!("expected 'K' or 'K1,K2', got '{text}'")),
    }
}
