//! Limited-memory BFGS on `R^N` with a strong Wolfe line search.
//!
//! The line search follows the bracketing/zoom scheme of Nocedal & Wright
//! (Algorithms 3.5 and 3.6) with safeguarded cubic interpolation.

use std::collections::VecDeque;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LbfgsParams {
    pub memory: usize,
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Sufficient decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Evaluation budget of one line search (bracketing plus zoom).
    pub max_line_search: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        Self {
            memory: 10,
            grad_tol: 1e-8,
            max_iter: 500,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Gradient norm fell below `grad_tol * max(1, |value|)`.
    GradientTolerance,
    MaxIterations,
    /// No acceptable step was found, even along steepest descent.
    LineSearchFailure,
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl LbfgsOutcome {
    pub fn converged(&self) -> bool {
        self.termination == Termination::GradientTolerance
    }
}

struct CurvaturePair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn converged(value: f64, grad_norm: f64, tol: f64) -> bool {
    grad_norm <= tol * value.abs().max(1.0)
}

/// Applies the initial inverse Hessian of the two-loop recursion to `q`.
///
/// Without known curvature this is the usual scalar `s'y / y'y`. With a
/// known diagonal part `p` of the Hessian (a separable quadratic penalty),
/// only the remainder is estimated: `mu = y_r'y_r / s'y_r` with
/// `y_r = y - p s`, and `H0 = diag(1 / (mu + p))`. This keeps a stiff penalty
/// from shrinking the steps along the directions it does not touch.
fn scale_initial(q: &mut [f64], last: &CurvaturePair, known: &[f64]) {
    let scalar = dot(&last.s, &last.y) / dot(&last.y, &last.y);
    if known.is_empty() {
        q.iter_mut().for_each(|qi| *qi *= scalar);
        return;
    }
    let rest: Vec<f64> = last
        .y
        .iter()
        .zip(&last.s)
        .zip(known)
        .map(|((y, s), p)| y - p * s)
        .collect();
    let (sr, rr) = (dot(&last.s, &rest), dot(&rest, &rest));
    let mu = if sr > 0.0 && rr > 0.0 {
        rr / sr
    } else {
        norm(&rest) / norm(&last.s)
    };
    if !(mu > 0.0 && mu.is_finite()) {
        q.iter_mut().for_each(|qi| *qi *= scalar);
        return;
    }
    q.iter_mut().zip(known).for_each(|(qi, p)| *qi /= mu + p);
}

/// Two-loop recursion: returns `-H g`.
fn direction(history: &VecDeque<CurvaturePair>, grad: &[f64], known: &[f64]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        q.iter_mut().zip(&pair.y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        scale_initial(&mut q, last, known);
    }
    for (pair, a) in history.iter().zip(alphas.iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        q.iter_mut()
            .zip(&pair.s)
            .for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Minimizer of the cubic interpolating `(a, fa, ga)` and `(b, fb, gb)`,
/// clamped into `[lo + 0.1 w, hi - 0.1 w]` of the interval; falls back to
/// bisection when the cubic has no real minimizer.
fn cubic_step(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let width = hi - lo;
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    let mid = 0.5 * (lo + hi);
    if !(disc >= 0.0) || !disc.is_finite() {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * ((gb + d2 - d1) / (gb - ga + 2.0 * d2));
    if !t.is_finite() {
        return mid;
    }
    t.clamp(lo + 0.1 * width, hi - 0.1 * width)
}

struct Trial {
    step: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

/// Strong Wolfe line search along `dir` from `x` with value `f0` and
/// directional derivative `slope0 < 0`. Returns the accepted point, or the
/// best sufficient-decrease point seen if the budget runs out, or `None`.
fn line_search<F>(
    eval: &mut F,
    evaluations: &mut usize,
    x: &[f64],
    f0: f64,
    slope0: f64,
    dir: &[f64],
    initial_step: f64,
    params: &LbfgsParams,
) -> Option<Trial>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut probe = |step: f64, evaluations: &mut usize| -> Trial {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + step * di).collect();
        let mut g = vec![0.0; x.len()];
        let value = eval(&xt, &mut g);
        *evaluations += 1;
        let slope = dot(&g, dir);
        Trial {
            step,
            value,
            slope,
            x: xt,
            grad: g,
        }
    };
    // Strict decrease is also required so that steps lost to rounding are not
    // accepted as progress.
    let armijo = |t: &Trial| t.value <= f0 + params.c1 * t.step * slope0 && t.value < f0;
    let curvature = |t: &Trial| t.slope.abs() <= -params.c2 * slope0;

    let mut budget = params.max_line_search;
    let mut best: Option<Trial> = None;
    let keep_best = |t: &Trial, best: &mut Option<Trial>| {
        if t.value.is_finite() && armijo(t) && best.as_ref().map_or(true, |b| t.value < b.value) {
            *best = Some(Trial {
                step: t.step,
                value: t.value,
                slope: t.slope,
                x: t.x.clone(),
                grad: t.grad.clone(),
            });
        }
    };

    let mut prev = Trial {
        step: 0.0,
        value: f0,
        slope: slope0,
        x: x.to_vec(),
        grad: Vec::new(),
    };
    let mut step = initial_step;
    let (mut lo, mut hi);
    let mut first = true;
    loop {
        if budget == 0 {
            return best;
        }
        budget -= 1;
        let cur = probe(step, evaluations);
        if !cur.value.is_finite() {
            // Overshot into overflow; shrink.
            step *= 0.1;
            continue;
        }
        keep_best(&cur, &mut best);
        if !armijo(&cur) || (!first && cur.value >= prev.value) {
            lo = prev;
            hi = cur;
            break;
        }
        if curvature(&cur) {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            lo = cur;
            hi = prev;
            break;
        }
        first = false;
        step *= 2.0;
        prev = cur;
    }

    // zoom: `lo` satisfies sufficient decrease and has the lower value.
    while budget > 0 {
        budget -= 1;
        let t = cubic_step(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope);
        if (hi.step - lo.step).abs() <= f64::EPSILON * lo.step.abs().max(1e-300) {
            break;
        }
        let cur = probe(t, evaluations);
        keep_best(&cur, &mut best);
        if !cur.value.is_finite() || !armijo(&cur) || cur.value >= lo.value {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Some(cur);
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    best
}

/// Minimizes `eval`, which writes the gradient into its second argument and
/// returns the objective value, starting from `x0`.
pub fn minimize<F>(eval: F, x0: &[f64], params: &LbfgsParams) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    minimize_with_curvature(eval, x0, params, &[])
}

/// Like [`minimize`] for objectives that contain a separable quadratic with
/// known constant Hessian `diag(known)` (empty for none). The known part
/// only shapes the initial inverse Hessian; iterates and stopping rules are
/// otherwise those of plain L-BFGS.
pub fn minimize_with_curvature<F>(
    mut eval: F,
    x0: &[f64],
    params: &LbfgsParams,
    known: &[f64],
) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    assert!(
        known.is_empty() || known.len() == x0.len(),
        "known curvature must be empty or match the dimension"
    );
    let mut x = x0.to_vec();
    let mut grad = vec![0.0; x.len()];
    let mut value = eval(&x, &mut grad);
    let mut evaluations = 1;
    let mut history: VecDeque<CurvaturePair> = VecDeque::with_capacity(params.memory);
    let mut iterations = 0;

    let termination = loop {
        let gnorm = norm(&grad);
        if converged(value, gnorm, params.grad_tol) {
            break Termination::GradientTolerance;
        }
        if iterations >= params.max_iter {
            break Termination::MaxIterations;
        }

        let mut dir = direction(&history, &grad, known);
        let mut slope = dot(&dir, &grad);
        if !(slope < 0.0) {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }
        let initial = if history.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };

        let mut found = line_search(
            &mut eval,
            &mut evaluations,
            &x,
            value,
            slope,
            &dir,
            initial,
            params,
        );
        if found.is_none() && !history.is_empty() {
            history.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
            found = line_search(
                &mut eval,
                &mut evaluations,
                &x,
                value,
                slope,
                &dir,
                (1.0 / gnorm).min(1.0),
                params,
            );
        }
        let Some(trial) = found else {
            break Termination::LineSearchFailure;
        };
        debug_assert!(trial.value <= value, "objective increased");

        let s: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = trial.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-10 * norm(&s) * norm(&yv) {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back(CurvaturePair {
                s,
                y: yv,
                rho: 1.0 / sy,
            });
        }
        x = trial.x;
        grad = trial.grad;
        value = trial.value;
        iterations += 1;
    };

    LbfgsOutcome {
        grad_norm: norm(&grad),
        x,
        value,
        iterations,
        evaluations,
        termination,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let c = [1.0, -2.0, 3.5, 0.25];
        let out = minimize(
            |x, g| {
                let mut v = 0.0;
                for i in 0..x.len() {
                    let d = x[i] - c[i];
                    v += d * d;
                    g[i] = 2.0 * d;
                }
                v
            },
            &[10.0, 10.0, -10.0, 0.0],
            &LbfgsParams::default(),
        );
        assert!(out.converged());
        for (a, b) in out.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rosenbrock() {
        let out = minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &[-1.2, 1.0],
            &LbfgsParams {
                grad_tol: 1e-10,
                ..LbfgsParams::default()
            },
        );
        assert!(out.converged(), "{:?}", out.termination);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let out = minimize(
            |x, g| {
                g[0] = 2.0 * x[0];
                x[0] * x[0]
            },
            &[0.0],
            &LbfgsParams::default(),
        );
        assert_eq!(out.iterations, 0);
        assert!(out.converged());
        assert_eq!(out.x, vec![0.0]);
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let scales = [1e-2, 1.0, 1e4, 1e8];
        let out = minimize(
            |x, g| {
                let mut v = 0.0;
                for i in 0..4 {
                    v += scales[i] * (x[i] - 1.0).powi(2);
                    g[i] = 2.0 * scales[i] * (x[i] - 1.0);
                }
                v
            },
            &[0.0; 4],
            &LbfgsParams::default(),
        );
        for xi in &out.x {
            assert!((xi - 1.0).abs() < 1e-6, "{:?}", out);
        }
    }

    #[test]
    fn known_stiff_penalty_does_not_stall_the_soft_directions() {
        // Rosenbrock in (x0, x1) plus a stiff quadratic 1e12 * x2^2 whose
        // Hessian is supplied as known curvature.
        let stiff = 1e12;
        let eval = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            g[2] = 2.0 * stiff * x[2];
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2) + stiff * x[2] * x[2]
        };
        let params = LbfgsParams {
            max_iter: 200,
            ..LbfgsParams::default()
        };
        let out =
            minimize_with_curvature(eval, &[-1.2, 1.0, 1.0], &params, &[0.0, 0.0, 2.0 * stiff]);
        assert!(
            (out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6,
            "{out:?}"
        );
        assert!(out.x[2].abs() < 1e-9);
        // Without the hint the same budget is not enough.
        let plain = minimize(eval, &[-1.2, 1.0, 1.0], &params);
        assert!(plain.value > out.value);
    }

    #[test]
    fn empty_curvature_matches_plain() {
        let eval = |x: &[f64], g: &mut [f64]| {
            g[0] = 4.0 * x[0].powi(3) - 1.0;
            g[1] = 2.0 * x[1];
            x[0].powi(4) - x[0] + x[1] * x[1]
        };
        let a = minimize(eval, &[2.0, -1.0], &LbfgsParams::default());
        let b = minimize_with_curvature(eval, &[2.0, -1.0], &LbfgsParams::default(), &[]);
        assert_eq!(a.x, b.x);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn inconsistent_gradient_reports_line_search_failure() {
        // The gradient points uphill, so no step can decrease the value.
        let out = minimize(
            |x, g| {
                g[0] = -2.0 * x[0];
                x[0] * x[0]
            },
            &[1.0],
            &LbfgsParams::default(),
        );
        assert_eq!(out.termination, Termination::LineSearchFailure);
        assert!(!out.converged());
        assert_eq!(out.x, vec![1.0]);
    }

    #[test]
    fn cubic_step_stays_inside_interval() {
        let t = cubic_step(0.0, 1.0, -1.0, 1.0, 2.0, 3.0);
        assert!((0.1..=0.9).contains(&t));
        let t = cubic_step(2.0, 1.0, 1.0, 0.0, 0.0, -1.0);
        assert!((0.2..=1.8).contains(&t));
    }
}
