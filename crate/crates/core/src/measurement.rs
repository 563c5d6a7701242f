//! Masked Fourier intensity measurements.
//!
//! With binary probes `a_1, ..., a_l in {0,1}^n` the linear part of the
//! measurement stacks `l` masked DFTs,
//!
//! ```text
//! A f = [ F diag(a_1) f ; ... ; F diag(a_l) f ]   (m = n * l rows)
//! ```
//!
//! and the measurement map is the elementwise intensity `|A f|^2`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{ensure_len, Error, Result};
use crate::numerics::{real_stack, Dft};
use crate::rng::seeded;

/// A set of `l` binary probes of length `n`, together with the seed that
/// produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeSet {
    n: usize,
    seed: u64,
    probes: Vec<Vec<u8>>,
}

impl ProbeSet {
    /// Builds a probe set from explicit masks. Every entry must be 0 or 1
    /// and no probe may be identically zero.
    pub fn from_masks(n: usize, seed: u64, probes: Vec<Vec<u8>>) -> Result<Self> {
        if n == 0 || probes.is_empty() {
            return Err(Error::Parameter(
                "probe set needs n >= 1 and at least one probe".into(),
            ));
        }
        for (i, p) in probes.iter().enumerate() {
            ensure_len(p.len(), n, "probe length")?;
            if p.iter().any(|&v| v > 1) {
                return Err(Error::Parameter(format!(
                    "probe {i} has a non-binary entry"
                )));
            }
            if p.iter().all(|&v| v == 0) {
                return Err(Error::Parameter(format!("probe {i} is all zero")));
            }
        }
        Ok(Self { n, seed, probes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn probes(&self) -> &[Vec<u8>] {
        &self.probes
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?
            .parse()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

/// Draws `count` probes of length `n` with i.i.d. Bernoulli(1/2) entries.
/// A probe that comes out all zero is redrawn.
pub fn make_probes(count: usize, n: usize, seed: u64) -> Result<ProbeSet> {
    if count == 0 || n == 0 {
        return Err(Error::Parameter(format!(
            "probe count and length must be positive, got l={count}, n={n}"
        )));
    }
    let mut rng = seeded(seed);
    let probes = (0..count)
        .map(|_| loop {
            let p: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<bool>())).collect();
            if p.iter().any(|&v| v == 1) {
                break p;
            }
        })
        .collect();
    Ok(ProbeSet { n, seed, probes })
}

/// Text format: a header line `n l seed`, then one line per probe with `n`
/// space-separated 0/1 digits.
impl fmt::Display for ProbeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.n, self.probes.len(), self.seed)?;
        for p in &self.probes {
            let line: Vec<&str> = p.iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for ProbeSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty probe file"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(1, "header must be `n l seed`"));
        }
        let n: usize = fields[0].parse().map_err(|_| Error::parse(1, "bad n"))?;
        let count: usize = fields[1].parse().map_err(|_| Error::parse(1, "bad l"))?;
        let seed: u64 = fields[2].parse().map_err(|_| Error::parse(1, "bad seed"))?;

        let mut probes = Vec::with_capacity(count);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::parse(
                        idx + 1,
                        format!("expected 0 or 1, got `{other}`"),
                    )),
                })
                .collect::<Result<Vec<u8>>>()?;
            if row.len() != n {
                return Err(Error::parse(
                    idx + 1,
                    format!("expected {n} entries, got {}", row.len()),
                ));
            }
            probes.push(row);
        }
        if probes.len() != count {
            return Err(Error::parse(
                1,
                format!("header announces {count} probes, found {}", probes.len()),
            ));
        }
        ProbeSet::from_masks(n, seed, probes)
    }
}

/// The measurement map `f -> |A f|^2` for a fixed probe set.
#[derive(Clone, Debug)]
pub struct MeasurementOperator {
    probes: ProbeSet,
    masks: Vec<f64>,
    dft: Dft,
}

impl MeasurementOperator {
    pub fn new(probes: ProbeSet) -> Result<Self> {
        let dft = Dft::new(probes.n())?;
        let masks = probes
            .probes()
            .iter()
            .flat_map(|p| p.iter().map(|&v| f64::from(v)))
            .collect();
        Ok(Self { probes, masks, dft })
    }

    pub fn probes(&self) -> &ProbeSet {
        &self.probes
    }

    /// Signal dimension.
    pub fn n(&self) -> usize {
        self.probes.n()
    }

    /// Number of measurements, `n * l`.
    pub fn m(&self) -> usize {
        self.masks.len()
    }

    /// `A f`: block `i` is `dft(a_i * f)`.
    pub fn apply(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(f.len(), self.n(), "signal length")?;
        let mut out: Vec<Complex64> = self
            .masks
            .chunks_exact(self.n())
            .flat_map(|mask| mask.iter().zip(f).map(|(&a, &x)| x * a))
            .collect();
        self.dft.forward_in_place(&mut out);
        Ok(out)
    }

    /// `A^H g = sum_i diag(a_i) idft(g_i)`; masks are real so no conjugate is
    /// needed.
    pub fn apply_adjoint(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(g.len(), self.m(), "measurement length")?;
        let mut buf = g.to_vec();
        Ok(self.adjoint_in_place(&mut buf))
    }

    fn adjoint_in_place(&self, buf: &mut [Complex64]) -> Vec<Complex64> {
        let n = self.n();
        self.dft.inverse_in_place(buf);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (block, mask) in buf.chunks_exact(n).zip(self.masks.chunks_exact(n)) {
            for ((o, b), &a) in out.iter_mut().zip(block).zip(mask) {
                *o += b * a;
            }
        }
        out
    }

    /// Intensities `|A f|^2`.
    pub fn forward(&self, f: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self.apply(f)?.iter().map(|u| u.norm_sqr()).collect())
    }

    /// `||forward(f) - y||^2` and its gradient in complex form, `4 A^H (r * A f)`
    /// with `r = |A f|^2 - y`. The real-stacked gradient is `(Re g, Im g)`.
    pub fn datafit(&self, f: &[Complex64], y: &[f64]) -> Result<(f64, Vec<Complex64>)> {
        ensure_len(y.len(), self.m(), "measurement length")?;
        let mut u = self.apply(f)?;
        let mut value = 0.0;
        for (uj, &yj) in u.iter_mut().zip(y) {
            let r = uj.norm_sqr() - yj;
            value += r * r;
            *uj *= 4.0 * r;
        }
        Ok((value, self.adjoint_in_place(&mut u)))
    }

    /// Gradient of `||forward(f) - y||^2` with respect to `(Re f, Im f)`.
    pub fn datafit_gradient(&self, f: &[Complex64], y: &[f64]) -> Result<Vec<f64>> {
        Ok(real_stack(&self.datafit(f, y)?.1))
    }

    /// `||forward(f) - y||_2`.
    pub fn residual(&self, f: &[Complex64], y: &[f64]) -> Result<f64> {
        ensure_len(y.len(), self.m(), "measurement length")?;
        Ok(self
            .forward(f)?
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}
