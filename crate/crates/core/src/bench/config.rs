//! `key = value` sweep configuration files and the pipeline that turns one
//! into a finished sweep.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma
//! separated. Unknown or repeated keys are errors. Relative paths are
//! resolved against the directory containing the configuration file.
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `dataset` | path to a pixel CSV | required |
//! | `model` | path to a model file; trained from the dataset if absent | none |
//! | `csv` | output path for records | required |
//! | `plot` | output path for the SVG | none |
//! | `n`, `k`, `probes` | integers | 64, 30, 100 |
//! | `sigma_grid` | ascending list of reals | 8 log-spaced values, `1e-4`..`1e1` |
//! | `trials` | integer | 10 |
//! | `scenarios` | list of `in_distribution`, `out_of_distribution` | both |
//! | `methods` | list of `conventional`, `generative`, `combined` | all three |
//! | `seed` | integer | 0 |
//! | `lambda_rule` | `paper`, `zero` or `fixed:<value>` | `paper` |
//! | `holdout_fraction` | real in `(0, 1)` | 0.2 |
//! | `restarts`, `max_iter`, `memory` | integers | 5, 500, 10 |
//! | `grad_tol`, `init_scale` | reals | `1e-8`, 1 |

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;

use super::dataset::{complexify, holdout_split, load_pixels};
use super::io::emit_csv;
use super::plot::emit_plot;
use super::sweep::{ExperimentConfig, SweepContext, SweepRecord, SweepResult};
use crate::error::{Error, Result};
use crate::generative::{train_pca, GenerativeModel};
use crate::measurement::{make_probes, MeasurementOperator};
use crate::rng::derive_seed;

/// A parsed configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub experiment: ExperimentConfig,
    pub dataset: PathBuf,
    pub model: Option<PathBuf>,
    pub holdout_fraction: f64,
    pub csv: PathBuf,
    pub plot: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("line {line}: bad value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|item| parse_value(key, item.trim(), line))
        .collect()
}

impl SweepPlan {
    /// Parses configuration text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut exp = ExperimentConfig::default();
        let (mut dataset, mut model, mut csv, mut plot) = (None, None, None, None);
        let mut holdout_fraction = 0.2;
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {line}: duplicate key `{key}`")));
            }
            let path = || base.join(value);
            match key {
                "dataset" => dataset = Some(path()),
                "model" => model = Some(path()),
                "csv" => csv = Some(path()),
                "plot" => plot = Some(path()),
                "n" => exp.n = parse_value(key, value, line)?,
                "k" => exp.k = parse_value(key, value, line)?,
                "probes" => exp.probes = parse_value(key, value, line)?,
                "sigma_grid" => exp.sigma_grid = parse_list(key, value, line)?,
                "trials" => exp.trials = parse_value(key, value, line)?,
                "scenarios" => exp.scenarios = parse_list(key, value, line)?,
                "methods" => exp.methods = parse_list(key, value, line)?,
                "seed" => exp.seed = parse_value(key, value, line)?,
                "lambda_rule" => exp.lambda_rule = parse_value(key, value, line)?,
                "holdout_fraction" => holdout_fraction = parse_value(key, value, line)?,
                "restarts" => exp.solver.restarts = parse_value(key, value, line)?,
                "max_iter" => exp.solver.max_iter = parse_value(key, value, line)?,
                "memory" => exp.solver.memory = parse_value(key, value, line)?,
                "grad_tol" => exp.solver.grad_tol = parse_value(key, value, line)?,
                "init_scale" => exp.solver.init_scale = parse_value(key, value, line)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key `{key}`"))),
            }
        }
        let dataset = dataset.ok_or_else(|| Error::Config("missing key `dataset`".into()))?;
        let csv = csv.ok_or_else(|| Error::Config("missing key `csv`".into()))?;
        if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout_fraction must be in (0, 1), got {holdout_fraction}"
            )));
        }
        exp.validate().map_err(|e| match e {
            Error::Parameter(m) => Error::Config(m),
            other => other,
        })?;
        Ok(Self {
            experiment: exp,
            dataset,
            model,
            holdout_fraction,
            csv,
            plot,
        })
    }

    /// Reads and parses a configuration file.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

/// Everything a sweep consumes, derived deterministically from a plan.
#[derive(Clone, Debug)]
pub struct SweepInputs {
    pub model: GenerativeModel,
    pub operator: MeasurementOperator,
    pub n_train: usize,
    pub holdout: Vec<Vec<Complex64>>,
}

/// Loads the dataset, complexifies it, splits off the held-out part, trains
/// (or loads) the model and draws the probes. Seeds are derived from the
/// master seed.
pub fn prepare_inputs(plan: &SweepPlan) -> Result<SweepInputs> {
    let exp = &plan.experiment;
    let pixels = load_pixels(&plan.dataset, exp.n)?;
    let (train, holdout) = split_dataset(&pixels, exp.seed, plan.holdout_fraction)?;
    let model = match &plan.model {
        Some(path) => GenerativeModel::read(path)?,
        None => train_pca(&train, exp.k)?,
    };
    let operator = MeasurementOperator::new(make_probes(
        exp.probes,
        exp.n,
        derive_seed(exp.seed, &[12]),
    )?)?;
    Ok(SweepInputs {
        model,
        operator,
        n_train: train.len(),
        holdout,
    })
}

/// Complexifies real images and splits them into `(train, holdout)` with
/// seeds derived from `seed`, exactly as [`prepare_inputs`] does.
pub fn split_dataset(
    pixels: &[Vec<f64>],
    seed: u64,
    holdout_fraction: f64,
) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
    let signals = complexify(pixels, derive_seed(seed, &[10]))?;
    let (train_idx, test_idx) =
        holdout_split(signals.len(), holdout_fraction, derive_seed(seed, &[11]))?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| signals[i].clone()).collect();
    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Runs the plan end to end and writes the CSV (and the plot, if
/// configured).
pub fn run_plan(plan: &SweepPlan, progress: impl FnMut(&SweepRecord)) -> Result<SweepResult> {
    let inputs = prepare_inputs(plan)?;
    let result = SweepContext::new(
        &plan.experiment,
        &inputs.model,
        &inputs.operator,
        inputs.n_train,
        &inputs.holdout,
    )?
    .run(progress)?;
    emit_csv(&result, &plan.csv)?;
    if let Some(plot) = &plan.plot {
        emit_plot(&result, plot)?;
    }
    Ok(result)
}
