use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure_len, Error, Result};
use crate::measurement::MeasurementOperator;
use crate::numerics::{norm, phase_aligned_distance};
use crate::rng::seeded;

/// Adds i.i.d. `N(0, sigma^2)` noise to `y`. Returns the noisy data and the
/// realized noise norm `||eps||_2`.
pub fn add_noise(y: &[f64], sigma: f64, seed: u64) -> Result<(Vec<f64>, f64)> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok((y.to_vec(), 0.0));
    }
    let dist = Normal::new(0.0, sigma).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = seeded(seed);
    let mut energy = 0.0;
    let noisy = y
        .iter()
        .map(|v| {
            let e = dist.sample(&mut rng);
            energy += e * e;
            v + e
        })
        .collect();
    Ok((noisy, energy.sqrt()))
}

/// Relative error after optimal global-phase alignment:
/// `min_phi ||e^{i phi} estimate - truth|| / ||truth||`.
pub fn relative_error(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    ensure_len(estimate.len(), truth.len(), "relative error")?;
    let scale = norm(truth);
    if scale == 0.0 {
        return Err(Error::Parameter("reference signal is zero".into()));
    }
    Ok(phase_aligned_distance(estimate, truth) / scale)
}

/// `10 log10(||A(f0)||^2 / (m sigma^2))`; `+inf` when `sigma == 0`.
pub fn snr_db(op: &MeasurementOperator, truth: &[Complex64], sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    let power: f64 = op.forward(truth)?.iter().map(|v| v * v).sum();
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (power / (op.m() as f64 * sigma * sigma)).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{make_probes, ProbeSet};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn noiseless_is_identity() {
        let y = vec![1.0, 2.0, 3.0];
        assert_eq!(add_noise(&y, 0.0, 4).unwrap(), (y, 0.0));
        assert!(add_noise(&[1.0], -1.0, 0).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_has_the_right_variance() {
        let y = vec![0.0; 200];
        assert_eq!(
            add_noise(&y, 0.1, 9).unwrap(),
            add_noise(&y, 0.1, 9).unwrap()
        );
        let draws = 1000;
        let mean: f64 = (0..draws)
            .map(|s| add_noise(&y, 0.1, s).unwrap().1.powi(2) / y.len() as f64)
            .sum::<f64>()
            / draws as f64;
        assert!((mean / 0.01 - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn relative_error_examples() {
        let f0 = vec![c(1., 2.), c(-0.5, 0.), c(3., 1.)];
        assert_eq!(relative_error(&f0, &f0).unwrap(), 0.0);
        let rot = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let turned: Vec<_> = f0.iter().map(|x| x * rot).collect();
        assert!(relative_error(&turned, &f0).unwrap() < 1e-12);
        let doubled: Vec<_> = f0.iter().map(|x| x * 2.0).collect();
        assert!((relative_error(&doubled, &f0).unwrap() - 1.0).abs() < 1e-15);
        assert!(relative_error(&f0, &[c(0., 0.); 3]).is_err());
    }

    #[test]
    fn snr_examples() {
        let p = ProbeSet::from_masks(1, 0, vec![vec![1]]).unwrap();
        let op = MeasurementOperator::new(p).unwrap();
        // ||A f||^2 = 4 with m = 1, so sigma = 2 gives 0 dB.
        let f = [c(2f64.sqrt(), 0.0)];
        assert!(snr_db(&op, &f, 2.0).unwrap().abs() < 1e-12);

        let op = MeasurementOperator::new(make_probes(3, 8, 1).unwrap()).unwrap();
        let f: Vec<_> = (0..8).map(|i| c(i as f64, 1.0)).collect();
        let a = snr_db(&op, &f, 0.01).unwrap();
        let b = snr_db(&op, &f, 0.1).unwrap();
        assert!((a - b - 20.0).abs() < 1e-10);
        let power: f64 = op.forward(&f).unwrap().iter().map(|v| v * v).sum();
        assert!((a - 10.0 * (power / (24.0 * 1e-4)).log10()).abs() < 1e-12);
        assert_eq!(snr_db(&op, &f, 0.0).unwrap(), f64::INFINITY);
    }
}
