//! Affine generative model `G(z) = G z + b` fitted by principal component
//! analysis.
//!
//! The basis `G` has orthonormal columns, so `G` is an isometry from the
//! latent space onto its range and projection onto the model is the closed
//! form `z0 = G^H (f - b)`. Variance information lives in the `spectrum`
//! (singular values of the centered training matrix) and is only used when
//! sampling latents.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_len, Error, Result};
use crate::numerics::{norm, ComplexMatrix};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq)]
pub struct GenerativeModel {
    basis: ComplexMatrix,
    offset: Vec<Complex64>,
    spectrum: Vec<f64>,
    rank_deficient: bool,
}

impl GenerativeModel {
    /// Assembles a model from parts, checking orthonormality of `basis`
    /// (to 1e-10), `k < n`, and a non-negative descending spectrum.
    pub fn new(basis: ComplexMatrix, offset: Vec<Complex64>, spectrum: Vec<f64>) -> Result<Self> {
        let (n, k) = (basis.rows(), basis.cols());
        ensure_len(offset.len(), n, "model offset")?;
        ensure_len(spectrum.len(), k, "model spectrum")?;
        if k >= n {
            return Err(Error::Parameter(format!(
                "latent dimension {k} must be below n={n}"
            )));
        }
        if spectrum.iter().any(|s| !(s.is_finite() && *s >= 0.0))
            || spectrum.windows(2).any(|w| w[0] < w[1])
        {
            return Err(Error::Parameter(
                "spectrum must be finite, non-negative and descending".into(),
            ));
        }
        let gram = basis.gram();
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram.get(i, j) - target).norm() > 1e-10 {
                    return Err(Error::Parameter("basis columns are not orthonormal".into()));
                }
            }
        }
        let rank_deficient = spectrum.contains(&0.0);
        Ok(Self {
            basis,
            offset,
            spectrum,
            rank_deficient,
        })
    }

    /// Signal dimension `n`.
    pub fn n(&self) -> usize {
        self.basis.rows()
    }

    /// Latent dimension `k`.
    pub fn k(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    /// The training mean `b`.
    pub fn offset(&self) -> &[Complex64] {
        &self.offset
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// True when the training data had rank below `k` and the basis was
    /// padded with an orthonormal completion (zero spectrum entries).
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// `G z + b`.
    pub fn generate(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(z.len(), self.k(), "latent length")?;
        let mut f = self.basis.mul_vec(z)?;
        f.iter_mut().zip(&self.offset).for_each(|(x, b)| *x += b);
        Ok(f)
    }

    /// The least-squares latent `G^H (f - b)`.
    pub fn project(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(f.len(), self.n(), "signal length")?;
        let centered: Vec<Complex64> = f.iter().zip(&self.offset).map(|(x, b)| x - b).collect();
        self.basis.adjoint_mul_vec(&centered)
    }

    /// Distance from `f` to the range of the model.
    pub fn bias_of(&self, f: &[Complex64]) -> Result<f64> {
        let fit = self.generate(&self.project(f)?)?;
        Ok(crate::numerics::distance(&fit, f))
    }

    /// Draws a latent with independent complex Gaussian entries whose real and
    /// imaginary parts have standard deviation `spectrum_i / sqrt(n_train)`.
    pub fn sample_latent(&self, seed: u64, n_train: usize) -> Result<Vec<Complex64>> {
        if n_train < 2 {
            return Err(Error::Parameter(format!(
                "training set size must be at least 2, got {n_train}"
            )));
        }
        let mut rng = seeded(seed);
        let scale = 1.0 / (n_train as f64).sqrt();
        Ok(self
            .spectrum
            .iter()
            .map(|s| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * (s * scale)
            })
            .collect())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Text form: header `n k`, then `b` (n lines `re im`), then `G`
    /// row-major (n*k lines `re im`), then the spectrum (k lines).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n(), self.k());
        for c in self.offset.iter().chain(self.basis.as_slice()) {
            let _ = writeln!(out, "{:e} {:e}", c.re, c.im);
        }
        for s in &self.spectrum {
            let _ = writeln!(out, "{s:e}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty model file"))?;
        let dims = parse_floats_as::<usize>(1, header, 2)?;
        let (n, k) = (dims[0], dims[1]);
        let mut complex = |count: usize| -> Result<Vec<Complex64>> {
            (0..count)
                .map(|_| {
                    let (no, line) = lines
                        .next()
                        .ok_or_else(|| Error::parse(0, "model file truncated"))?;
                    let v = parse_floats_as::<f64>(no, line, 2)?;
                    Ok(Complex64::new(v[0], v[1]))
                })
                .collect()
        };
        let offset = complex(n)?;
        let entries = complex(n * k)?;
        let spectrum = (0..k)
            .map(|_| {
                let (no, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(0, "model file truncated"))?;
                Ok(parse_floats_as::<f64>(no, line, 1)?[0])
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some((no, _)) = lines.next() {
            return Err(Error::parse(no, "trailing content after spectrum"));
        }
        let basis = ComplexMatrix::new(n, k, entries)?;
        Self::new(basis, offset, spectrum)
    }
}

fn parse_floats_as<T: std::str::FromStr>(
    line_no: usize,
    line: &str,
    count: usize,
) -> Result<Vec<T>> {
    let vals = line
        .split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::parse(line_no, format!("cannot parse `{t}`")))
        })
        .collect::<Result<Vec<T>>>()?;
    if vals.len() != count {
        return Err(Error::parse(
            line_no,
            format!("expected {count} fields, got {}", vals.len()),
        ));
    }
    Ok(vals)
}

/// Fits the model to `dataset` (N signals of length n) with latent dimension
/// `k`, using the SVD of the mean-centered `n x N` data matrix.
pub fn train_pca(dataset: &[Vec<Complex64>], k: usize) -> Result<GenerativeModel> {
    let count = dataset.len();
    if count < 2 {
        return Err(Error::Dataset(format!(
            "need at least 2 samples, got {count}"
        )));
    }
    let n = dataset[0].len();
    for sample in dataset {
        ensure_len(sample.len(), n, "training sample length")?;
    }
    if k == 0 || k >= n.min(count) {
        return Err(Error::Parameter(format!(
            "latent dimension must satisfy 1 <= k < min(n, N) = {}, got {k}",
            n.min(count)
        )));
    }

    let mut offset = vec![Complex64::new(0.0, 0.0); n];
    for sample in dataset {
        offset.iter_mut().zip(sample).for_each(|(m, x)| *m += x);
    }
    offset.iter_mut().for_each(|m| *m /= count as f64);

    let centered = DMatrix::from_fn(n, count, |r, c| dataset[c][r] - offset[r]);
    let svd = centered.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let top = order
        .first()
        .map(|&i| svd.singular_values[i])
        .unwrap_or(0.0);
    let cutoff = n.max(count) as f64 * f64::EPSILON * top;

    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let mut spectrum = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let s = svd.singular_values[idx];
        if s <= cutoff || s == 0.0 {
            break;
        }
        columns.push(u.column(idx).iter().copied().collect());
        spectrum.push(s);
    }
    // Orthonormal completion from the standard basis.
    let mut candidate = 0;
    while columns.len() < k {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[candidate] = Complex64::new(1.0, 0.0);
        candidate += 1;
        for _ in 0..2 {
            for col in &columns {
                let ip: Complex64 = col.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(col).for_each(|(x, c)| *x -= ip * c);
            }
        }
        let len = norm(&v);
        if len > 1e-6 {
            v.iter_mut().for_each(|x| *x /= len);
            columns.push(v);
            spectrum.push(0.0);
        }
    }

    let basis = ComplexMatrix::from_fn(n, k, |r, c| columns[c][r]);
    GenerativeModel::new(basis, offset, spectrum)
}
