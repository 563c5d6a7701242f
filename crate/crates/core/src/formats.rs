//! Plain-text files for signals and measurements.
//!
//! A signal file starts with a header line holding `n`, followed by `n`
//! lines `re im`. A measurement file starts with `m sigma noise_norm`,
//! followed by `m` lines with one intensity each. Numbers are written with
//! enough digits to round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Splits non-empty lines, numbering them from 1.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number `{field}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("non-finite number `{field}`")))
    }
}

fn fields<const N: usize>(line: &str, no: usize) -> Result<[&str; N]> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| Error::parse(no, format!("expected {N} fields, found {}", p.len())))
}

pub fn signal_to_text(signal: &[Complex64]) -> String {
    let mut out = format!("{}\n", signal.len());
    for c in signal {
        let _ = writeln!(out, "{:e} {:e}", c.re, c.im);
    }
    out
}

pub fn signal_from_text(text: &str) -> Result<Vec<Complex64>> {
    let mut lines = numbered_lines(text);
    let (no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty signal file"))?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::parse(no, format!("bad length `{header}`")))?;
    let signal = lines
        .map(|(no, line)| {
            let [re, im] = fields::<2>(line, no)?;
            Ok(Complex64::new(parse_f64(re, no)?, parse_f64(im, no)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if signal.len() != n {
        return Err(Error::parse(
            no,
            format!("header says {n} entries, found {}", signal.len()),
        ));
    }
    Ok(signal)
}

pub fn write_signal(path: impl AsRef<Path>, signal: &[Complex64]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, signal_to_text(signal)).map_err(|e| Error::io(path, e))
}

pub fn read_signal(path: impl AsRef<Path>) -> Result<Vec<Complex64>> {
    let path = path.as_ref();
    signal_from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Intensity data with the noise level that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    pub values: Vec<f64>,
    /// Standard deviation of the added noise.
    pub sigma: f64,
    /// Realized noise norm `||eps||_2`.
    pub noise_norm: f64,
}

impl Measurements {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {:e} {:e}\n",
            self.values.len(),
            self.sigma,
            self.noise_norm
        );
        for v in &self.values {
            let _ = writeln!(out, "{v:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = numbered_lines(text);
        let (no, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty measurement file"))?;
        let [m, sigma, noise] = fields::<3>(header, no)?;
        let m: usize = m
            .parse()
            .map_err(|_| Error::parse(no, format!("bad count `{m}`")))?;
        let (sigma, noise_norm) = (parse_f64(sigma, no)?, parse_f64(noise, no)?);
        if sigma < 0.0 || noise_norm < 0.0 {
            return Err(Error::parse(
                no,
                "sigma and noise norm must be non-negative",
            ));
        }
        let values = lines
            .map(|(no, line)| parse_f64(line, no))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != m {
            return Err(Error::parse(
                no,
                format!("header says {m} values, found {}", values.len()),
            ));
        }
        Ok(Self {
            values,
            sigma,
            noise_norm,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip() {
        let s = vec![
            Complex64::new(0.1, -2.0 / 3.0),
            Complex64::new(1e-300, 5e10),
            Complex64::new(0.0, 0.0),
        ];
        let text = signal_to_text(&s);
        assert!(text.starts_with("3\n"));
        assert_eq!(signal_from_text(&text).unwrap(), s);
    }

    #[test]
    fn signal_errors() {
        assert!(matches!(signal_from_text(""), Err(Error::Parse { .. })));
        assert!(matches!(
            signal_from_text("2\n1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            signal_from_text("1\n1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            signal_from_text("1\n1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(signal_from_text("1\nNaN 0\n").is_err());
    }

    #[test]
    fn measurement_round_trip() {
        let m = Measurements {
            values: vec![0.5, 1.0 / 7.0, 3e-12],
            sigma: 0.01,
            noise_norm: 0.0173,
        };
        let text = m.to_text();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(Measurements::from_text(&text).unwrap(), m);
        assert!(Measurements::from_text("2 0 0\n1\n").is_err());
        assert!(Measurements::from_text("1 -1 0\n1\n").is_err());
        assert!(Measurements::from_text("1 0\n1\n").is_err());
    }
}
