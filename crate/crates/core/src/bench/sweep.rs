//! Noise-level sweep comparing the three formulations on in-distribution and
//! out-of-distribution ground truths.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::SliceRandom;

use super::metrics::{add_noise, relative_error, snr_db};
use crate::error::{Error, Result};
use crate::generative::GenerativeModel;
use crate::measurement::MeasurementOperator;
use crate::optimize::{reconstruct, Formulation, FormulationKind, SolverConfig, UnifiedProblem};
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    /// Ground truth drawn from the generative model.
    InDistribution,
    /// Ground truth taken from held-out data.
    OutOfDistribution,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::InDistribution, Scenario::OutOfDistribution];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::InDistribution => "in_distribution",
            Scenario::OutOfDistribution => "out_of_distribution",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "in_distribution" => Ok(Scenario::InDistribution),
            "out_of_distribution" => Ok(Scenario::OutOfDistribution),
            other => Err(Error::Parameter(format!("unknown scenario `{other}`"))),
        }
    }
}

/// How the penalty weight and weights are chosen from the noise level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaRule {
    /// `lambda = sigma^2` with unit weights for the conventional and
    /// generative formulations; `lambda = 10 sigma^2` with unit weights for
    /// the combined one (so the latent block is penalized too).
    Paper,
    /// `lambda = 0` with default weights.
    Zero,
    /// A fixed `lambda` with default weights.
    Fixed(f64),
}

impl LambdaRule {
    /// The penalty weight this rule assigns to `kind` at noise level `sigma`.
    pub fn lambda(self, kind: FormulationKind, sigma: f64) -> f64 {
        match self {
            LambdaRule::Paper => match kind {
                FormulationKind::Combined => 10.0 * sigma * sigma,
                _ => sigma * sigma,
            },
            LambdaRule::Zero => 0.0,
            LambdaRule::Fixed(lambda) => lambda,
        }
    }

    /// Builds the formulation for `kind` at noise level `sigma`. `model` may
    /// be `None` only for the conventional formulation.
    pub fn formulation(
        self,
        kind: FormulationKind,
        model: Option<&GenerativeModel>,
        n: usize,
        sigma: f64,
    ) -> Result<Formulation> {
        let form = Formulation::new(kind, model, n, self.lambda(kind, sigma))?;
        match self {
            LambdaRule::Paper => {
                let d = form.dimension();
                form.with_weights(vec![1.0; d])
            }
            _ => Ok(form),
        }
    }
}

impl fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::Paper => f.write_str("paper"),
            LambdaRule::Zero => f.write_str("zero"),
            LambdaRule::Fixed(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for LambdaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "paper" => Ok(LambdaRule::Paper),
            "zero" => Ok(LambdaRule::Zero),
            _ => {
                let v = s
                    .strip_prefix("fixed:")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| Error::Parameter(format!("unknown lambda rule `{s}`")))?;
                Ok(LambdaRule::Fixed(v))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    /// Number of probes.
    pub probes: usize,
    /// Ascending noise standard deviations.
    pub sigma_grid: Vec<f64>,
    pub trials: usize,
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<FormulationKind>,
    pub seed: u64,
    pub lambda_rule: LambdaRule,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 64,
            k: 30,
            probes: 100,
            sigma_grid: default_sigma_grid(),
            trials: 10,
            scenarios: Scenario::ALL.to_vec(),
            methods: FormulationKind::ALL.to_vec(),
            seed: 0,
            lambda_rule: LambdaRule::Paper,
            solver: SolverConfig::default(),
        }
    }
}

/// Eight logarithmically spaced noise levels from `1e-4` to `1e1`.
pub fn default_sigma_grid() -> Vec<f64> {
    log_grid(1e-4, 1e1, 8)
}

/// `count` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_grid.is_empty() {
            return Err(Error::Config("sigma grid is empty".into()));
        }
        if self
            .sigma_grid
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
            || self.sigma_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Config(
                "sigma grid must be finite, non-negative and strictly ascending".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(Error::Config(
                "scenarios and methods must be non-empty".into(),
            ));
        }
        if self.k == 0 || self.k >= self.n || self.probes == 0 {
            return Err(Error::Config(format!(
                "need 1 <= k < n and probes >= 1, got n={}, k={}, probes={}",
                self.n, self.k, self.probes
            )));
        }
        self.solver.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub sigma: f64,
    pub snr_db: f64,
    pub method: FormulationKind,
    pub scenario: Scenario,
    pub trial: usize,
    pub relative_error: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

/// Mean over trials of one `(sigma, scenario, method)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub sigma: f64,
    pub scenario: Scenario,
    pub method: FormulationKind,
    pub mean_error: f64,
    /// Mean over trials with finite SNR; infinite when all are noiseless.
    pub mean_snr_db: f64,
    pub trials: usize,
}

impl SweepResult {
    /// Cell means in first-appearance order of the records.
    pub fn cells(&self) -> Vec<CellSummary> {
        let mut cells: Vec<(CellSummary, usize)> = Vec::new();
        for r in &self.records {
            let pos = cells.iter().position(|(c, _)| {
                c.sigma == r.sigma && c.scenario == r.scenario && c.method == r.method
            });
            let (cell, finite) = match pos {
                Some(p) => &mut cells[p],
                None => {
                    cells.push((
                        CellSummary {
                            sigma: r.sigma,
                            scenario: r.scenario,
                            method: r.method,
                            mean_error: 0.0,
                            mean_snr_db: 0.0,
                            trials: 0,
                        },
                        0,
                    ));
                    cells.last_mut().unwrap()
                }
            };
            cell.mean_error += r.relative_error;
            cell.trials += 1;
            if r.snr_db.is_finite() {
                cell.mean_snr_db += r.snr_db;
                *finite += 1;
            }
        }
        cells
            .into_iter()
            .map(|(mut c, finite)| {
                c.mean_error /= c.trials as f64;
                c.mean_snr_db = if finite > 0 {
                    c.mean_snr_db / finite as f64
                } else {
                    f64::INFINITY
                };
                c
            })
            .collect()
    }

    /// The summary for one cell, if present.
    pub fn cell(
        &self,
        sigma: f64,
        scenario: Scenario,
        method: FormulationKind,
    ) -> Option<CellSummary> {
        self.cells()
            .into_iter()
            .find(|c| c.sigma == sigma && c.scenario == scenario && c.method == method)
    }
}

/// Everything a sweep needs besides its configuration: the trained model,
/// the measurement operator, and held-out data for out-of-distribution
/// ground truths.
#[derive(Clone, Debug)]
pub struct SweepContext<'a> {
    pub config: &'a ExperimentConfig,
    pub model: &'a GenerativeModel,
    pub operator: &'a MeasurementOperator,
    /// Size of the training set, which sets the latent sampling scale.
    pub n_train: usize,
    pub holdout: &'a [Vec<Complex64>],
}

impl<'a> SweepContext<'a> {
    pub fn new(
        config: &'a ExperimentConfig,
        model: &'a GenerativeModel,
        operator: &'a MeasurementOperator,
        n_train: usize,
        holdout: &'a [Vec<Complex64>],
    ) -> Result<Self> {
        config.validate()?;
        if model.n() != config.n || model.k() != config.k || operator.n() != config.n {
            return Err(Error::Config(format!(
                "model ({}x{}) and operator (n={}) do not match config n={}, k={}",
                model.n(),
                model.k(),
                operator.n(),
                config.n,
                config.k
            )));
        }
        if config.scenarios.contains(&Scenario::OutOfDistribution) && holdout.is_empty() {
            return Err(Error::Dataset(
                "no held-out samples for out-of-distribution trials".into(),
            ));
        }
        if holdout.iter().any(|f| f.len() != config.n) {
            return Err(Error::Dataset("held-out sample has wrong length".into()));
        }
        Ok(Self {
            config,
            model,
            operator,
            n_train,
            holdout,
        })
    }

    /// Ground truth for a trial. In-distribution truths are `G(z)` with a
    /// sampled latent; out-of-distribution truths walk through a seeded
    /// permutation of the held-out set.
    pub fn ground_truth(&self, scenario: Scenario, trial: usize) -> Result<Vec<Complex64>> {
        let seed = self.config.seed;
        match scenario {
            Scenario::InDistribution => {
                let z = self
                    .model
                    .sample_latent(derive_seed(seed, &[1, trial as u64]), self.n_train)?;
                self.model.generate(&z)
            }
            Scenario::OutOfDistribution => {
                let mut order: Vec<usize> = (0..self.holdout.len()).collect();
                order.shuffle(&mut seeded(derive_seed(seed, &[2])));
                Ok(self.holdout[order[trial % order.len()]].clone())
            }
        }
    }

    /// Runs the sweep; `progress` sees every record as it is produced.
    pub fn run(&self, mut progress: impl FnMut(&SweepRecord)) -> Result<SweepResult> {
        let cfg = self.config;
        let mut records = Vec::new();
        for (si, &sigma) in cfg.sigma_grid.iter().enumerate() {
            for &scenario in &cfg.scenarios {
                let sc = scenario as u64;
                let truths = (0..cfg.trials)
                    .map(|t| self.ground_truth(scenario, t))
                    .collect::<Result<Vec<_>>>()?;
                for &method in &cfg.methods {
                    for (trial, truth) in truths.iter().enumerate() {
                        let clean = self.operator.forward(truth)?;
                        let noise_seed = derive_seed(cfg.seed, &[3, si as u64, sc, trial as u64]);
                        let (y, _) = add_noise(&clean, sigma, noise_seed)?;
                        let form =
                            cfg.lambda_rule
                                .formulation(method, Some(self.model), cfg.n, sigma)?;
                        let problem = UnifiedProblem::new(form, self.operator.clone(), y)?;
                        let solver = SolverConfig {
                            seed: derive_seed(
                                cfg.seed,
                                &[4, si as u64, sc, method as u64, trial as u64],
                            ),
                            ..cfg.solver
                        };
                        // Solver trouble shows up as `converged == false`, not as an error.
                        let res = reconstruct(&problem, &solver)?;
                        let record = SweepRecord {
                            sigma,
                            snr_db: snr_db(self.operator, truth, sigma)?,
                            method,
                            scenario,
                            trial,
                            relative_error: relative_error(&res.signal, truth)?,
                            residual: res.residual,
                            iterations: res.iterations,
                            converged: res.converged,
                        };
                        progress(&record);
                        records.push(record);
                    }
                }
            }
        }
        Ok(SweepResult { records })
    }
}

/// Convenience wrapper around [`SweepContext::run`].
pub fn run_sweep(
    config: &ExperimentConfig,
    model: &GenerativeModel,
    operator: &MeasurementOperator,
    n_train: usize,
    holdout: &[Vec<Complex64>],
) -> Result<SweepResult> {
    SweepContext::new(config, model, operator, n_train, holdout)?.run(|_| {})
}
