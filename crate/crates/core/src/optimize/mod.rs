//! The unified reconstruction problem
//!
//! ```text
//! min_x || A(B(x)) - y ||^2 + lambda^2 || w * x ||^2
//! ```
//!
//! and its three instances:
//!
//! | kind           | x            | B(x)           | default w              |
//! |----------------|--------------|----------------|------------------------|
//! | `Conventional` | f in C^n     | f              | all ones               |
//! | `Generative`   | z in C^k     | G z + b        | all ones               |
//! | `Combined`     | (z, h) in C^(k+n) | G z + b + h | zeros on z, ones on h |
//!
//! With the combined defaults the penalty is `lambda^2 ||G(z) - f||^2` for
//! `f = G(z) + h`. Minimization runs L-BFGS over the real-stacked variables.

pub mod lbfgs;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_len, Error, Result};
use crate::generative::GenerativeModel;
use crate::measurement::MeasurementOperator;
use crate::numerics::{real_stack, real_unstack};
use crate::rng::{derive_seed, seeded};

pub use lbfgs::{LbfgsOutcome, LbfgsParams, Termination};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulationKind {
    Conventional,
    Generative,
    Combined,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 3] = [
        FormulationKind::Conventional,
        FormulationKind::Generative,
        FormulationKind::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::Conventional => "conventional",
            FormulationKind::Generative => "generative",
            FormulationKind::Combined => "combined",
        }
    }

    /// Length of the optimization variable.
    pub fn dimension(self, k: usize, n: usize) -> usize {
        match self {
            FormulationKind::Conventional => n,
            FormulationKind::Generative => k,
            FormulationKind::Combined => k + n,
        }
    }
}

impl std::fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FormulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conventional" => Ok(FormulationKind::Conventional),
            "generative" => Ok(FormulationKind::Generative),
            "combined" => Ok(FormulationKind::Combined),
            other => Err(Error::Parameter(format!("unknown formulation `{other}`"))),
        }
    }
}

/// Weight vector used when none is given: for `Combined` it zeroes the
/// latent block and keeps the signal offset; otherwise all ones, which makes
/// `lambda > 0` a plain Tikhonov term.
pub fn default_weights(kind: FormulationKind, k: usize, n: usize) -> Vec<f64> {
    match kind {
        FormulationKind::Combined => {
            let mut w = vec![0.0; k];
            w.extend(std::iter::repeat_n(1.0, n));
            w
        }
        _ => vec![1.0; kind.dimension(k, n)],
    }
}

/// Which instance of the unified problem to solve, with its penalty.
#[derive(Clone, Debug)]
pub struct Formulation {
    kind: FormulationKind,
    model: Option<GenerativeModel>,
    n: usize,
    lambda: f64,
    weights: Vec<f64>,
}

impl Formulation {
    pub fn conventional(n: usize, lambda: f64) -> Result<Self> {
        Self::build(FormulationKind::Conventional, None, n, lambda, None)
    }

    pub fn generative(model: &GenerativeModel, lambda: f64) -> Result<Self> {
        Self::build(
            FormulationKind::Generative,
            Some(model.clone()),
            model.n(),
            lambda,
            None,
        )
    }

    pub fn combined(model: &GenerativeModel, lambda: f64) -> Result<Self> {
        Self::build(
            FormulationKind::Combined,
            Some(model.clone()),
            model.n(),
            lambda,
            None,
        )
    }

    /// Builds any kind; `model` may be `None` only for `Conventional`.
    pub fn new(
        kind: FormulationKind,
        model: Option<&GenerativeModel>,
        n: usize,
        lambda: f64,
    ) -> Result<Self> {
        Self::build(kind, model.cloned(), n, lambda, None)
    }

    fn build(
        kind: FormulationKind,
        model: Option<GenerativeModel>,
        n: usize,
        lambda: f64,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Parameter(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        let k = match (kind, &model) {
            (FormulationKind::Conventional, _) => 0,
            (_, Some(m)) => {
                ensure_len(m.n(), n, "model signal dimension")?;
                m.k()
            }
            (_, None) => {
                return Err(Error::Parameter(format!(
                    "{kind} formulation needs a model"
                )));
            }
        };
        let model = if kind == FormulationKind::Conventional {
            None
        } else {
            model
        };
        let weights = weights.unwrap_or_else(|| default_weights(kind, k, n));
        let form = Self {
            kind,
            model,
            n,
            lambda,
            weights,
        };
        form.check_weights(&form.weights)?;
        Ok(form)
    }

    fn check_weights(&self, w: &[f64]) -> Result<()> {
        ensure_len(w.len(), self.dimension(), "weight vector")?;
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Parameter("weights must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Replaces the weight vector.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.check_weights(&weights)?;
        self.weights = weights;
        Ok(self)
    }

    pub fn kind(&self) -> FormulationKind {
        self.kind
    }

    pub fn model(&self) -> Option<&GenerativeModel> {
        self.model.as_ref()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Latent dimension, 0 for `Conventional`.
    pub fn k(&self) -> usize {
        self.model.as_ref().map_or(0, |m| m.k())
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension(self.k(), self.n)
    }

    /// The inner map `B`.
    pub fn apply_b(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_len(x.len(), self.dimension(), "optimization variable")?;
        match (self.kind, &self.model) {
            (FormulationKind::Conventional, _) => Ok(x.to_vec()),
            (FormulationKind::Generative, Some(m)) => m.generate(x),
            (FormulationKind::Combined, Some(m)) => {
                let (z, offset) = x.split_at(m.k());
                let mut f = m.generate(z)?;
                f.iter_mut().zip(offset).for_each(|(a, b)| *a += b);
                Ok(f)
            }
            _ => unreachable!("model presence checked at construction"),
        }
    }

    /// Pulls a signal-space gradient back through `B` (`B^H` applied to `g`).
    fn pull_back(&self, g: Vec<Complex64>) -> Result<Vec<Complex64>> {
        match (self.kind, &self.model) {
            (FormulationKind::Conventional, _) => Ok(g),
            (FormulationKind::Generative, Some(m)) => m.basis().adjoint_mul_vec(&g),
            (FormulationKind::Combined, Some(m)) => {
                let mut out = m.basis().adjoint_mul_vec(&g)?;
                out.extend(g);
                Ok(out)
            }
            _ => unreachable!("model presence checked at construction"),
        }
    }
}

/// One instance of the unified problem: a formulation, a measurement
/// operator and the measured intensities.
#[derive(Clone, Debug)]
pub struct UnifiedProblem {
    formulation: Formulation,
    operator: MeasurementOperator,
    y: Vec<f64>,
}

impl UnifiedProblem {
    pub fn new(
        formulation: Formulation,
        operator: MeasurementOperator,
        y: Vec<f64>,
    ) -> Result<Self> {
        ensure_len(operator.n(), formulation.n(), "operator signal dimension")?;
        ensure_len(y.len(), operator.m(), "measurement length")?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("measurements must be finite".into()));
        }
        Ok(Self {
            formulation,
            operator,
            y,
        })
    }

    pub fn formulation(&self) -> &Formulation {
        &self.formulation
    }

    pub fn operator(&self) -> &MeasurementOperator {
        &self.operator
    }

    pub fn measurements(&self) -> &[f64] {
        &self.y
    }

    pub fn dimension(&self) -> usize {
        self.formulation.dimension()
    }

    /// Objective value and its gradient with respect to `(Re x, Im x)`.
    pub fn objective(&self, x: &[Complex64]) -> Result<(f64, Vec<f64>)> {
        let f = self.formulation.apply_b(x)?;
        let (mut value, g) = self.operator.datafit(&f, &self.y)?;
        let mut grad = self.formulation.pull_back(g)?;
        let lam2 = self.formulation.lambda * self.formulation.lambda;
        if lam2 > 0.0 {
            for ((gi, xi), w) in grad.iter_mut().zip(x).zip(&self.formulation.weights) {
                let w2 = w * w;
                value += lam2 * w2 * xi.norm_sqr();
                *gi += xi * (2.0 * lam2 * w2);
            }
        }
        Ok((value, real_stack(&grad)))
    }

    /// `||A(B(x)) - y||_2`.
    pub fn residual(&self, x: &[Complex64]) -> Result<f64> {
        self.operator
            .residual(&self.formulation.apply_b(x)?, &self.y)
    }

    /// Hessian diagonal of the penalty in real-stacked coordinates,
    /// `2 lambda^2 w^2` for both the real and the imaginary part.
    fn penalty_curvature(&self) -> Vec<f64> {
        let lambda = self.formulation.lambda();
        let half: Vec<f64> = self
            .formulation
            .weights()
            .iter()
            .map(|w| 2.0 * lambda * lambda * w * w)
            .collect();
        [half.as_slice(), half.as_slice()].concat()
    }

    fn eval_stacked(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let xc = real_unstack(x).expect("even length");
        let (value, g) = self
            .objective(&xc)
            .expect("dimensions fixed at construction");
        grad.copy_from_slice(&g);
        value
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    /// Standard deviation of each complex entry of a random start.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-8,
            max_iter: 500,
            restarts: 5,
            init_scale: 1.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.max_iter == 0 || self.restarts == 0 {
            return Err(Error::Parameter(
                "memory, max_iter and restarts must be positive".into(),
            ));
        }
        if !(self.grad_tol > 0.0 && self.init_scale > 0.0) {
            return Err(Error::Parameter(
                "grad_tol and init_scale must be positive".into(),
            ));
        }
        Ok(())
    }

    fn lbfgs_params(&self) -> LbfgsParams {
        LbfgsParams {
            memory: self.memory,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            ..LbfgsParams::default()
        }
    }

    /// Random start for restart `index`: i.i.d. circular complex Gaussian
    /// entries with `E|x_t|^2 = init_scale^2`.
    pub fn initial_point(&self, index: usize, dimension: usize) -> Vec<Complex64> {
        let mut rng = seeded(derive_seed(self.seed, &[index as u64]));
        let s = self.init_scale / std::f64::consts::SQRT_2;
        (0..dimension)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * s, im * s)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    /// Minimizer in the optimization variable.
    pub x: Vec<Complex64>,
    /// The reconstructed signal `B(x)`.
    pub signal: Vec<Complex64>,
    pub objective_value: f64,
    /// `||A(B(x)) - y||_2`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub restart_index: usize,
}

/// Runs L-BFGS from `x0`. A failed line search ends the run early with
/// `converged == false`; it is not reported as an error.
pub fn lbfgs_minimize(
    problem: &UnifiedProblem,
    x0: &[Complex64],
    config: &SolverConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    ensure_len(x0.len(), problem.dimension(), "initial point")?;
    let outcome = lbfgs::minimize_with_curvature(
        |x, g| problem.eval_stacked(x, g),
        &real_stack(x0),
        &config.lbfgs_params(),
        &problem.penalty_curvature(),
    );
    let x = real_unstack(&outcome.x)?;
    let signal = problem.formulation.apply_b(&x)?;
    let residual = problem.operator.residual(&signal, &problem.y)?;
    Ok(ReconstructionResult {
        x,
        signal,
        objective_value: outcome.value,
        residual,
        iterations: outcome.iterations,
        converged: outcome.converged(),
        termination: outcome.termination,
        restart_index: 0,
    })
}

/// Best of `config.restarts` seeded random starts, by objective value.
pub fn reconstruct(
    problem: &UnifiedProblem,
    config: &SolverConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    let mut best: Option<ReconstructionResult> = None;
    for index in 0..config.restarts {
        let x0 = config.initial_point(index, problem.dimension());
        let mut result = lbfgs_minimize(problem, &x0, config)?;
        result.restart_index = index;
        if best
            .as_ref()
            .is_none_or(|b| result.objective_value < b.objective_value)
        {
            best = Some(result);
        }
    }
    best.ok_or_else(|| Error::Numerical("no restart produced a result".into()))
}
