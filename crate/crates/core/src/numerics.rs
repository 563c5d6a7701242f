//! Dense complex linear algebra, the unitary DFT, and the real-stacking
//! bijection between `C^d` and `R^{2d}`.
//!
//! Vectors are plain `[Complex64]` slices. The DFT is unitary:
//!
//! ```text
//! dft(v)[j] = n^{-1/2} * sum_t v[t] * exp(-2 pi i j t / n)
//! ```
//!
//! so it preserves Euclidean norms and its inverse is its adjoint.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_len, Error, Result};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        ensure_len(data.len(), rows * cols, "matrix entries")?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(v.len(), self.cols, "matrix-vector product")?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `M^H v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(v.len(), self.rows, "adjoint matrix-vector product")?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (row, &vr) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * vr;
            }
        }
        Ok(out)
    }

    /// `M^H M`, a `cols x cols` Hermitian matrix.
    pub fn gram(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.cols, |i, j| {
            (0..self.rows)
                .map(|r| self.get(r, i).conj() * self.get(r, j))
                .sum()
        })
    }
}

/// Cached forward/inverse FFT plans for a fixed length, scaled to be unitary.
///
/// The in-place methods accept any buffer whose length is a multiple of the
/// plan length and transform each consecutive block independently.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

impl Dft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::dim(1, 0, "dft length"));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.len, 0);
        self.forward.process(buf);
        buf.iter_mut().for_each(|c| *c *= self.scale);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.len, 0);
        self.inverse.process(buf);
        buf.iter_mut().for_each(|c| *c *= self.scale);
    }
}

/// Unitary discrete Fourier transform.
pub fn dft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let plan = Dft::new(v.len())?;
    let mut out = v.to_vec();
    plan.forward_in_place(&mut out);
    Ok(out)
}

/// Inverse (and adjoint) of [`dft`].
pub fn idft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let plan = Dft::new(v.len())?;
    let mut out = v.to_vec();
    plan.inverse_in_place(&mut out);
    Ok(out)
}

/// Maps `v in C^d` to `(Re v, Im v) in R^{2d}`.
pub fn real_stack(v: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.len());
    out.extend(v.iter().map(|c| c.re));
    out.extend(v.iter().map(|c| c.im));
    out
}

/// Inverse of [`real_stack`]. The input length must be even.
pub fn real_unstack(x: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() % 2 != 0 {
        return Err(Error::Parameter(format!(
            "real-stacked vector must have even length, got {}",
            x.len()
        )));
    }
    let d = x.len() / 2;
    Ok(x[..d]
        .iter()
        .zip(&x[d..])
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect())
}

/// Hermitian inner product `sum_t conj(u_t) v_t`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    ensure_len(v.len(), u.len(), "inner product")?;
    Ok(u.iter().zip(v).map(|(a, b)| a.conj() * b).sum())
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn real_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||u - v||_2`; panics on length mismatch.
pub fn distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `min_phi ||e^{i phi} u - v||_2`, attained at `phi = arg <u, v>` with the
/// conjugate-linear-first convention of [`inner`].
pub fn phase_aligned_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    assert_eq!(u.len(), v.len());
    let ip: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    let rot = if ip.norm() > 0.0 {
        ip / ip.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    u.iter()
        .zip(v)
        .map(|(a, b)| (a * rot - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn ensure_finite(v: &[Complex64], context: &str) -> Result<()> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{context}: non-finite entry")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    // O(n^2) summation, kept independent of rustfft.
    fn dft_direct(v: &[Complex64]) -> Vec<Complex64> {
        let n = v.len();
        let s = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|j| {
                v.iter()
                    .enumerate()
                    .map(|(t, x)| {
                        let ang = -2.0 * std::f64::consts::PI * ((j * t) % n) as f64 / n as f64;
                        x * Complex64::from_polar(1.0, ang)
                    })
                    .sum::<Complex64>()
                    * s
            })
            .collect()
    }

    fn assert_vec_close(a: &[Complex64], b: &[Complex64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn dft_of_impulse_is_flat() {
        let e0 = [c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)];
        assert_vec_close(&dft(&e0).unwrap(), &[c(0.5, 0.); 4], 1e-15);
    }

    #[test]
    fn dft_of_constant_is_scaled_impulse() {
        let ones = [c(1., 0.); 4];
        let expected = [c(2., 0.), c(0., 0.), c(0., 0.), c(0., 0.)];
        assert_vec_close(&dft(&ones).unwrap(), &expected, 1e-15);
    }

    #[test]
    fn dft_two_point_matches_direct_sum() {
        let v = [c(1., 0.), c(0., 1.)];
        let oracle = dft_direct(&v);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_vec_close(&oracle, &[c(h, h), c(h, -h)], 1e-15);
        assert_vec_close(&dft(&v).unwrap(), &oracle, 1e-15);
    }

    #[test]
    fn fast_dft_matches_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 8, 17, 64] {
            let v = random_vec(&mut rng, n);
            let fast = dft(&v).unwrap();
            let slow = dft_direct(&v);
            let scale = norm(&v);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() <= 1e-12 * scale, "n={n}");
            }
        }
    }

    #[test]
    fn idft_inverts_examples() {
        let e0 = [c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)];
        assert_vec_close(&idft(&[c(0.5, 0.); 4]).unwrap(), &e0, 1e-15);
        let imp = [c(2., 0.), c(0., 0.), c(0., 0.), c(0., 0.)];
        assert_vec_close(&idft(&imp).unwrap(), &[c(1., 0.); 4], 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = random_vec(&mut rng, 64);
        let back = idft(&dft(&v).unwrap()).unwrap();
        assert!(distance(&back, &v) <= 1e-12 * norm(&v));
    }

    #[test]
    fn empty_input_is_a_dimension_error() {
        assert!(matches!(dft(&[]), Err(Error::Dimension { .. })));
        assert!(matches!(idft(&[]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn parseval_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 8, 64] {
            let u = random_vec(&mut rng, n);
            let v = random_vec(&mut rng, n);
            let fu = dft(&u).unwrap();
            assert!((norm(&fu) - norm(&u)).abs() <= 1e-12 * norm(&u));

            let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
            let mix: Vec<_> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = dft(&mix).unwrap();
            let fv = dft(&v).unwrap();
            let rhs: Vec<_> = fu.iter().zip(&fv).map(|(x, y)| a * x + b * y).collect();
            assert!(distance(&lhs, &rhs) <= 1e-12 * norm(&rhs));
        }
    }

    #[test]
    fn real_stack_examples() {
        assert_eq!(real_stack(&[c(1., 2.)]), vec![1., 2.]);
        assert_eq!(real_stack(&[c(0., 0.); 2]), vec![0.; 4]);
        assert!(real_unstack(&[1., 2., 3.]).is_err());
    }

    #[test]
    fn inner_examples() {
        let e0 = [c(1., 0.), c(0., 0.)];
        let e1 = [c(0., 0.), c(1., 0.)];
        assert_eq!(inner(&e0, &e1).unwrap(), c(0., 0.));
        let v = [c(3., 0.), c(0., 4.)];
        assert_eq!(inner(&v, &v).unwrap(), c(25., 0.));
        assert!(matches!(
            inner(&e0, &[c(1., 0.)]),
            Err(Error::Dimension { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = random_vec(&mut rng, 7);
            let w = random_vec(&mut rng, 7);
            let a = inner(&u, &w).unwrap();
            let b = inner(&w, &u).unwrap().conj();
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-14);
        }
    }

    #[test]
    fn phase_aligned_distance_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_vec(&mut rng, 10);
        let rot = Complex64::from_polar(1.0, 1.1);
        let u: Vec<_> = v.iter().map(|x| x * rot).collect();
        assert!(phase_aligned_distance(&u, &v) < 1e-14);
        assert!(distance(&u, &v) > 0.1);
    }

    #[test]
    fn matrix_products_agree_with_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = ComplexMatrix::new(3, 2, random_vec(&mut rng, 6)).unwrap();
        let x = random_vec(&mut rng, 2);
        let y = random_vec(&mut rng, 3);
        let lhs = inner(&m.mul_vec(&x).unwrap(), &y).unwrap();
        let rhs = inner(&x, &m.adjoint_mul_vec(&y).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
        assert!(ComplexMatrix::new(2, 2, vec![c(0., 0.); 3]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cvec(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
            prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..max).prop_map(|v| {
                v.into_iter()
                    .map(|(re, im)| Complex64::new(re, im))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn real_stack_round_trips_exactly(v in cvec(64)) {
                let x = real_stack(&v);
                prop_assert_eq!(x.len(), 2 * v.len());
                prop_assert_eq!(real_unstack(&x).unwrap(), v.clone());
                let rel = (real_norm(&x) - norm(&v)).abs() / norm(&v).max(1e-300);
                prop_assert!(rel <= 1e-14);
            }
        }
    }
}
