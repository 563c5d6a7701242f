//! Empirical bi-Lipschitz constants and the reconstruction error bounds built
//! from them.
//!
//! For a map `M`, the two-sided estimate over sampled pairs `(u, v)` is
//!
//! ```text
//! lower <= ||M(u) - M(v)|| / ||u - v|| <= upper
//! ```
//!
//! and the single constant `c = max(upper, 1 / lower) >= 1` satisfies
//! `c^-1 ||u - v|| <= ||M(u) - M(v)|| <= c ||u - v||` on the sample. With
//! `alpha`, `beta`, `gamma` the constants of the measurement map, the
//! generative model and their composition, `bias = ||G(z0) - f0||` and
//! `eps = ||noise||`:
//!
//! ```text
//! conventional:  ||f - f0|| <= 2 alpha eps
//! generative:    ||f - f0|| <= (1 + 2 alpha beta gamma) bias + 2 beta gamma eps
//! combined:      ||f - f0|| <= lambda alpha bias + 2 alpha eps
//! bias interval: max(0, (rho - eps) / alpha) <= ||G(z) - f0|| <= alpha (rho + eps)
//! ```
//!
//! where `rho` is the data residual at the generative solution. The
//! constants are estimates over a declared sampling domain, not certified
//! bounds, and every report carries that domain.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::generative::GenerativeModel;
use crate::measurement::MeasurementOperator;
use crate::numerics::{distance, real_stack};
use crate::rng::{derive_seed, seeded};

/// Two-sided ratio estimate for one map.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimate {
    pub upper: f64,
    pub lower: f64,
    /// Pairs that entered the estimate (degenerate pairs excluded).
    pub num_pairs: usize,
    pub seed: u64,
    /// Description of the sampling distribution.
    pub domain: String,
}

impl LipschitzEstimate {
    /// `max(upper, 1 / lower)`, always `>= 1`.
    pub fn constant(&self) -> f64 {
        self.upper.max(1.0 / self.lower)
    }
}

/// Estimates the bi-Lipschitz ratios of `map` over `num_pairs` pairs drawn by
/// `sampler`. Pair `i` uses its own generator seeded from `(seed, i)`, so a
/// larger `num_pairs` only ever adds pairs. Pairs closer than `1e-12` are
/// skipped.
pub fn estimate_bilipschitz<M, S>(
    mut map: M,
    mut sampler: S,
    num_pairs: usize,
    seed: u64,
    domain: &str,
) -> Result<LipschitzEstimate>
where
    M: FnMut(&[Complex64]) -> Result<Vec<f64>>,
    S: FnMut(&mut ChaCha8Rng) -> Result<(Vec<Complex64>, Vec<Complex64>)>,
{
    if num_pairs < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 pairs, got {num_pairs}"
        )));
    }
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    let mut used = 0;
    for i in 0..num_pairs {
        let mut rng = seeded(derive_seed(seed, &[i as u64]));
        let (u, v) = sampler(&mut rng)?;
        let gap = distance(&u, &v);
        if gap <= 1e-12 {
            continue;
        }
        let (mu, mv) = (map(&u)?, map(&v)?);
        let spread = mu
            .iter()
            .zip(&mv)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let ratio = spread / gap;
        upper = upper.max(ratio);
        lower = lower.min(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Estimation(
            "every sampled pair was degenerate".into(),
        ));
    }
    if !(lower > 0.0) {
        return Err(Error::Estimation(
            "map collapsed a sampled pair; lower ratio is zero".into(),
        ));
    }
    Ok(LipschitzEstimate {
        upper,
        lower,
        num_pairs: used,
        seed,
        domain: domain.to_string(),
    })
}

/// Draws signals `G(z) + perturbation` with `z` from
/// [`GenerativeModel::sample_latent`] and i.i.d. complex Gaussian
/// perturbations whose real and imaginary parts have standard deviation
/// `perturbation`.
#[derive(Clone, Debug)]
pub struct SignalSampler<'a> {
    pub model: &'a GenerativeModel,
    pub n_train: usize,
    pub perturbation: f64,
}

impl SignalSampler<'_> {
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Vec<Complex64>> {
        let latent_seed = rand::Rng::random::<u64>(rng);
        let mut f = self
            .model
            .generate(&self.model.sample_latent(latent_seed, self.n_train)?)?;
        if self.perturbation > 0.0 {
            let dist =
                Normal::new(0.0, self.perturbation).map_err(|e| Error::Parameter(e.to_string()))?;
            for x in f.iter_mut() {
                *x += Complex64::new(dist.sample(rng), dist.sample(rng));
            }
        }
        Ok(f)
    }

    pub fn pair(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        Ok((self.draw(rng)?, self.draw(rng)?))
    }

    pub fn domain(&self) -> String {
        format!(
            "signal:generate(sample_latent;n_train={})+gauss(std={})",
            self.n_train, self.perturbation
        )
    }
}

/// Draws latent pairs from [`GenerativeModel::sample_latent`].
#[derive(Clone, Debug)]
pub struct LatentSampler<'a> {
    pub model: &'a GenerativeModel,
    pub n_train: usize,
}

impl LatentSampler<'_> {
    pub fn pair(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let a = rand::Rng::random::<u64>(rng);
        let b = rand::Rng::random::<u64>(rng);
        Ok((
            self.model.sample_latent(a, self.n_train)?,
            self.model.sample_latent(b, self.n_train)?,
        ))
    }

    pub fn domain(&self) -> String {
        format!("latent:sample_latent(n_train={})", self.n_train)
    }
}

/// Estimates of `alpha` (measurement map), `beta` (generative model) and
/// `gamma` (their composition).
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantEstimates {
    pub alpha: LipschitzEstimate,
    pub beta: LipschitzEstimate,
    pub gamma: LipschitzEstimate,
    /// Seed the three per-constant seeds were derived from.
    pub seed: u64,
}

/// Samples the three constants on the default domains: signal pairs from
/// [`SignalSampler`] for the measurement map, latent pairs from
/// [`LatentSampler`] for the model and the composition.
pub fn estimate_constants(
    op: &MeasurementOperator,
    model: &GenerativeModel,
    n_train: usize,
    perturbation: f64,
    num_pairs: usize,
    seed: u64,
) -> Result<ConstantEstimates> {
    let signals = SignalSampler {
        model,
        n_train,
        perturbation,
    };
    let latents = LatentSampler { model, n_train };
    let alpha = estimate_bilipschitz(
        |f| op.forward(f),
        |rng| signals.pair(rng),
        num_pairs,
        derive_seed(seed, &[0]),
        &signals.domain(),
    )?;
    let beta = estimate_bilipschitz(
        |z| Ok(real_stack(&model.generate(z)?)),
        |rng| latents.pair(rng),
        num_pairs,
        derive_seed(seed, &[1]),
        &latents.domain(),
    )?;
    let gamma = estimate_bilipschitz(
        |z| op.forward(&model.generate(z)?),
        |rng| latents.pair(rng),
        num_pairs,
        derive_seed(seed, &[2]),
        &latents.domain(),
    )?;
    Ok(ConstantEstimates {
        alpha,
        beta,
        gamma,
        seed,
    })
}

fn check_constant(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be >= 1, got {value}"
        )))
    }
}

fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be >= 0, got {value}"
        )))
    }
}

/// Error bound for the unregularized conventional solution: `2 alpha eps`.
pub fn lemma1_bound(alpha: f64, eps_norm: f64) -> Result<f64> {
    check_constant("alpha", alpha)?;
    check_nonneg("noise norm", eps_norm)?;
    Ok(2.0 * alpha * eps_norm)
}

/// Error bound for the generative solution:
/// `(1 + 2 alpha beta gamma) bias + 2 beta gamma eps`.
pub fn lemma2_bound(alpha: f64, beta: f64, gamma: f64, bias: f64, eps_norm: f64) -> Result<f64> {
    check_constant("alpha", alpha)?;
    check_constant("beta", beta)?;
    check_constant("gamma", gamma)?;
    check_nonneg("bias", bias)?;
    check_nonneg("noise norm", eps_norm)?;
    Ok((1.0 + 2.0 * alpha * beta * gamma) * bias + 2.0 * beta * gamma * eps_norm)
}

/// Error bound for the combined solution: `lambda alpha bias + 2 alpha eps`.
pub fn lemma3_bound(lambda: f64, alpha: f64, bias: f64, eps_norm: f64) -> Result<f64> {
    check_nonneg("lambda", lambda)?;
    check_constant("alpha", alpha)?;
    check_nonneg("bias", bias)?;
    check_nonneg("noise norm", eps_norm)?;
    Ok(lambda * alpha * bias + 2.0 * alpha * eps_norm)
}

/// Interval for the distance of the generative solution to the truth, from
/// the residual `rho` and noise norm `sigma`. The lower end is clamped at 0.
pub fn bias_interval(alpha: f64, residual: f64, sigma: f64) -> Result<(f64, f64)> {
    check_constant("alpha", alpha)?;
    check_nonneg("residual", residual)?;
    check_nonneg("sigma", sigma)?;
    Ok((
        ((residual - sigma) / alpha).max(0.0),
        alpha * (residual + sigma),
    ))
}

/// All bounds evaluated for one reconstruction, with their inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub alpha: f64,
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    pub beta: f64,
    pub beta_upper: f64,
    pub beta_lower: f64,
    pub gamma: f64,
    pub gamma_upper: f64,
    pub gamma_lower: f64,
    pub lambda: f64,
    pub bias: f64,
    pub eps_norm: f64,
    pub residual: f64,
    pub sigma: f64,
    pub lemma1: f64,
    pub lemma2: f64,
    pub lemma3: f64,
    pub bias_lo: f64,
    pub bias_hi: f64,
    pub num_pairs: usize,
    pub seed: u64,
    pub alpha_domain: String,
    pub latent_domain: String,
}

/// Quantities a report is computed from besides the constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub lambda: f64,
    /// `||G(z0) - f0||`, or an estimate of it.
    pub bias: f64,
    /// Realized noise norm `||eps||`.
    pub eps_norm: f64,
    /// Data residual `||A(f) - y||` of the reconstruction.
    pub residual: f64,
}

impl BoundReport {
    /// Evaluates every bound; `sigma` in the bias interval is the noise norm.
    pub fn new(constants: &ConstantEstimates, inputs: BoundInputs) -> Result<Self> {
        let (alpha, beta, gamma) = (
            constants.alpha.constant(),
            constants.beta.constant(),
            constants.gamma.constant(),
        );
        let (bias_lo, bias_hi) = bias_interval(alpha, inputs.residual, inputs.eps_norm)?;
        Ok(Self {
            alpha,
            alpha_upper: constants.alpha.upper,
            alpha_lower: constants.alpha.lower,
            beta,
            beta_upper: constants.beta.upper,
            beta_lower: constants.beta.lower,
            gamma,
            gamma_upper: constants.gamma.upper,
            gamma_lower: constants.gamma.lower,
            lambda: inputs.lambda,
            bias: inputs.bias,
            eps_norm: inputs.eps_norm,
            residual: inputs.residual,
            sigma: inputs.eps_norm,
            lemma1: lemma1_bound(alpha, inputs.eps_norm)?,
            lemma2: lemma2_bound(alpha, beta, gamma, inputs.bias, inputs.eps_norm)?,
            lemma3: lemma3_bound(inputs.lambda, alpha, inputs.bias, inputs.eps_norm)?,
            bias_lo,
            bias_hi,
            num_pairs: constants.alpha.num_pairs,
            seed: constants.seed,
            alpha_domain: constants.alpha.domain.clone(),
            latent_domain: constants.gamma.domain.clone(),
        })
    }

    fn numeric_fields(&self) -> [(&'static str, f64); 19] {
        [
            ("alpha", self.alpha),
            ("alpha_upper", self.alpha_upper),
            ("alpha_lower", self.alpha_lower),
            ("beta", self.beta),
            ("beta_upper", self.beta_upper),
            ("beta_lower", self.beta_lower),
            ("gamma", self.gamma),
            ("gamma_upper", self.gamma_upper),
            ("gamma_lower", self.gamma_lower),
            ("lambda", self.lambda),
            ("bias", self.bias),
            ("eps_norm", self.eps_norm),
            ("residual", self.residual),
            ("sigma", self.sigma),
            ("lemma1", self.lemma1),
            ("lemma2", self.lemma2),
            ("lemma3", self.lemma3),
            ("bias_lo", self.bias_lo),
            ("bias_hi", self.bias_hi),
        ]
    }

    /// One `name value` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, value) in self.numeric_fields() {
            let _ = writeln!(out, "{name} {value:e}");
        }
        let _ = writeln!(out, "num_pairs {}", self.num_pairs);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "alpha_domain {}", self.alpha_domain);
        let _ = writeln!(out, "latent_domain {}", self.latent_domain);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(i + 1, "expected `name value`"))?;
            if map
                .insert(key.to_string(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::parse(i + 1, format!("duplicate key `{key}`")));
            }
        }
        let mut take = |key: &str| {
            map.remove(key)
                .ok_or_else(|| Error::parse(0, format!("missing key `{key}`")))
        };
        let mut num = |key: &str| -> Result<f64> {
            let (line, v) = take(key)?;
            v.parse()
                .map_err(|_| Error::parse(line, format!("bad number for `{key}`")))
        };
        let report = Self {
            alpha: num("alpha")?,
            alpha_upper: num("alpha_upper")?,
            alpha_lower: num("alpha_lower")?,
            beta: num("beta")?,
            beta_upper: num("beta_upper")?,
            beta_lower: num("beta_lower")?,
            gamma: num("gamma")?,
            gamma_upper: num("gamma_upper")?,
            gamma_lower: num("gamma_lower")?,
            lambda: num("lambda")?,
            bias: num("bias")?,
            eps_norm: num("eps_norm")?,
            residual: num("residual")?,
            sigma: num("sigma")?,
            lemma1: num("lemma1")?,
            lemma2: num("lemma2")?,
            lemma3: num("lemma3")?,
            bias_lo: num("bias_lo")?,
            bias_hi: num("bias_hi")?,
            num_pairs: num("num_pairs")? as usize,
            seed: {
                let (line, v) = take("seed")?;
                v.parse().map_err(|_| Error::parse(line, "bad seed"))?
            },
            alpha_domain: take("alpha_domain")?.1,
            latent_domain: take("latent_domain")?.1,
        };
        if let Some((key, (line, _))) = map.into_iter().next() {
            return Err(Error::parse(line, format!("unknown key `{key}`")));
        }
        Ok(report)
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
