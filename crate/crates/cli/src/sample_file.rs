//! Text sample files.
//!
//! ```text
//! # sinfreq v1 dims=2 M=3 N=2
//! 1,0
//! 0.5,-0.25
//! ...
//! ```
//!
//! One `re,im` line per sample, row-major for 2-D data (row index is the
//! first dimension). Sample `i` of a row sits at instant `-ceil(M/2) + i`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use sinfreq::dft::{SignalFrame, SignalFrame1D, SignalFrame2D};

const MAGIC: &str = "# sinfreq v1";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("empty file: expected a '{MAGIC} dims=<d> M=<M> [N=<N>]' header")]
    Empty,
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("expected {expected} samples, found {found}")]
    Count { expected: usize, found: usize },
}

fn at(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Line { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub dims: usize,
    pub m: usize,
    /// 1 for 1-D files.
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl SampleFile {
    pub fn from_frame(frame: &SignalFrame) -> Self {
        match frame {
            SignalFrame::OneD(f) => Self {
                dims: 1,
                m: f.len(),
                n: 1,
                data: f.data().to_vec(),
            },
            SignalFrame::TwoD(f) => Self {
                dims: 2,
                m: f.rows(),
                n: f.cols(),
                data: f.data().to_vec(),
            },
        }
    }

    pub fn to_frame(&self) -> sinfreq::Result<SignalFrame> {
        Ok(match self.dims {
            1 => SignalFrame::OneD(SignalFrame1D::new(self.data.clone())?),
            _ => SignalFrame::TwoD(SignalFrame2D::new(self.m, self.n, self.data.clone())?),
        })
    }

    fn header(&self) -> String {
        match self.dims {
            1 => format!("{MAGIC} dims=1 M={}", self.m),
            _ => format!("{MAGIC} dims=2 M={} N={}", self.m, self.n),
        }
    }

    /// Serializes with shortest round-trip float formatting.
    pub fn render(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for z in &self.data {
            let _ = writeln!(out, "{},{}", z.re, z.im);
        }
        out
    }
}

fn parse_header(line: &str) -> Result<(usize, usize, usize), ParseError> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| at(1, format!("header must start with '{MAGIC}'")))?;
    let (mut dims, mut m, mut n) = (None, None, None);
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| at(1, format!("malformed header field '{token}'")))?;
        let v: usize = value
            .parse()
            .map_err(|_| at(1, format!("header field {key} must be a non-negative integer, got '{value}'")))?;
        let slot = match key {
            "dims" => &mut dims,
            "M" => &mut m,
            "N" => &mut n,
            other => return Err(at(1, format!("unknown header field '{other}'"))),
        };
        if slot.replace(v).is_some() {
            return Err(at(1, format!("duplicate header field '{key}'")));
        }
    }
    let dims = dims.ok_or_else(|| at(1, "header is missing dims="))?;
    let m = m.ok_or_else(|| at(1, "header is missing M="))?;
    match (dims, n) {
        (1, None) => Ok((1, m, 1)),
        (1, Some(_)) => Err(at(1, "N= is only valid for dims=2")),
        (2, Some(n)) => Ok((2, m, n)),
        (2, None) => Err(at(1, "dims=2 header is missing N=")),
        (d, _) => Err(at(1, format!("dims must be 1 or 2, got {d}"))),
    }
}

fn parse_value(text: &str, line: usize, what: &str) -> Result<f64, ParseError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| at(line, format!("cannot parse {what} part '{}'", text.trim())))?;
    if !v.is_finite() {
        return Err(at(line, format!("{what} part is not finite")));
    }
    Ok(v)
}

impl FromStr for SampleFile {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.find(|(_, l)| !l.trim().is_empty()).ok_or(ParseError::Empty)?;
        let (dims, m, n) = parse_header(first.trim_end())?;
        let mut data = Vec::with_capacity(m * n);
        for (no, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (re, im) = line
                .split_once(',')
                .ok_or_else(|| at(no, format!("expected 're,im', got '{line}'")))?;
            data.push(Complex64::new(parse_value(re, no, "real")?, parse_value(im, no, "imaginary")?));
        }
        if data.len() != m * n {
            return Err(ParseError::Count {
                expected: m * n,
                found: data.len(),
            });
        }
        Ok(Self { dims, m, n, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_2d() {
        let f: SampleFile = "# sinfreq v1 dims=2 M=2 N=1\n1,0\n-0.5,2e-3\n".parse().unwrap();
        assert_eq!((f.dims, f.m, f.n), (2, 2, 1));
        assert_eq!(f.data[1], Complex64::new(-0.5, 2e-3));
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = "# sinfreq v1 dims=1 M=2\n1,0\n1;0\n".parse::<SampleFile>().unwrap_err();
        assert_eq!(err.to_string().split(':').next(), Some("line 3"));
        assert_eq!("".parse::<SampleFile>(), Err(ParseError::Empty));
        assert!(matches!(
            "# sinfreq v1 dims=1 M=3\n1,0\n".parse::<SampleFile>(),
            Err(ParseError::Count { expected: 3, found: 1 })
        ));
        assert!("# sinfreq v1 dims=3 M=3\n".parse::<SampleFile>().is_err());
        assert!("# sinfreq v1 dims=1 M=1\nnan,0\n".parse::<SampleFile>().is_err());
        assert!("hello\n".parse::<SampleFile>().is_err());
    }
}
