//! Maximum-likelihood fits over the probability simplex.
//!
//! Cells are parametrized as `p = softmax(θ)` with `θ_0 = 0`, which keeps
//! every cell strictly positive. The objective is maximized by a modified
//! Newton method: the Hessian in `θ` is Jacobi-scaled, its eigenvalues are
//! replaced by their magnitudes (floored relative to the largest), and the
//! step is safeguarded by a backtracking line search. Once the predicted
//! gain falls below the rounding noise of the objective, full Newton steps
//! are taken without comparing values, and the fit stops on a vanishing
//! Newton decrement or step.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::detection::CountRecord;
use crate::error::{invalid, Error, Result};
use crate::estimator::model::{Bound, LikelihoodModel, Reconstruction};

const THETA_LIMIT: f64 = 700.0;
const FLOOR: f64 = 1e-15;

/// Which likelihood to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// All outcomes of every setting, `Σ f log W`.
    Ml,
    /// Outcomes renormalized across settings, `Σ f log(W_ν / Σ_λ W_λ)`,
    /// with the all-click outcome left out.
    Eml,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub max_iter: usize,
    /// Jittered restarts in addition to the least-squares start.
    pub restarts: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub step_tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, restarts: 4, seed: 0, rel_tol: 1e-12, step_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartSummary {
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub reconstruction: Reconstruction,
    /// The maximized objective in its unshifted form.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub starts: Vec<StartSummary>,
}

impl EstimateResult {
    pub fn p_hat(&self) -> Option<&crate::pnd::PndMatrix> {
        self.reconstruction.pnd()
    }
}

/// One observed outcome with nonzero count.
struct Term {
    block: usize,
    outcome: usize,
    f: f64,
    /// `log(f / N)` (ML) or `log(f / F_o)` (EML), subtracted for precision.
    shift: f64,
}

struct Problem {
    objective: Objective,
    k: usize,
    responses: Vec<DMatrix<f64>>,
    terms: Vec<Term>,
    /// EML only: per-outcome total counts `F_o`.
    totals: Vec<(usize, f64)>,
    /// `Σ f · shift`, restoring the unshifted objective.
    constant: f64,
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

impl Problem {
    fn new(objective: Objective, model: &LikelihoodModel, bound: &[Bound<'_>]) -> Result<Self> {
        let k = model.unknowns();
        let responses: Vec<DMatrix<f64>> = bound.iter().map(|b| b.response.clone()).collect();
        let mut terms = Vec::new();
        let mut totals = Vec::new();
        match objective {
            Objective::Ml => {
                for (bi, b) in bound.iter().enumerate() {
                    let n = b.record.n_m();
                    for (o, &f) in b.record.counts().iter().enumerate() {
                        if f > 0.0 {
                            check_reachable(&b.response, o, b.record)?;
                            terms.push(Term { block: bi, outcome: o, f, shift: (f / n).ln() });
                        }
                    }
                }
            }
            Objective::Eml => {
                let settings: std::collections::BTreeSet<usize> = bound.iter().map(|b| b.record.setting()).collect();
                if settings.len() < 2 {
                    return Err(invalid("the renormalized likelihood needs at least two attenuator settings"));
                }
                let all_click = bound[0].all_click;
                if bound.iter().any(|b| b.all_click != all_click) {
                    return Err(invalid("settings disagree on the all-click outcome"));
                }
                let outcomes = bound[0].record.counts().len();
                for o in (0..outcomes).filter(|o| *o != all_click) {
                    let total: f64 = bound.iter().map(|b| b.record.counts()[o]).sum();
                    if total <= 0.0 {
                        continue;
                    }
                    totals.push((o, total));
                    for (bi, b) in bound.iter().enumerate() {
                        let f = b.record.counts()[o];
                        if f > 0.0 {
                            check_reachable(&b.response, o, b.record)?;
                            terms.push(Term { block: bi, outcome: o, f, shift: (f / total).ln() });
                        }
                    }
                }
                if terms.is_empty() {
                    return Err(invalid("no counts outside the all-click outcome"));
                }
            }
        }
        let constant = terms.iter().map(|t| t.f * t.shift).sum();
        Ok(Self { objective, k, responses, terms, totals, constant })
    }

    fn probs(&self, p: &DVector<f64>) -> Vec<DVector<f64>> {
        self.responses.iter().map(|r| r * p).collect()
    }

    /// Shifted objective only; `None` if some observed outcome has zero
    /// probability.
    fn value(&self, p: &DVector<f64>) -> Option<f64> {
        let w = self.probs(p);
        let mut v = 0.0;
        for t in &self.terms {
            let wo = w[t.block][t.outcome];
            if !(wo > 0.0) {
                return None;
            }
            v += t.f * (wo.ln() - t.shift);
        }
        if self.objective == Objective::Eml {
            for &(o, total) in &self.totals {
                let s: f64 = w.iter().map(|wb| wb[o]).sum();
                v -= total * s.ln();
            }
        }
        v.is_finite().then_some(v)
    }

    fn eval(&self, p: &DVector<f64>) -> Option<Eval> {
        let value = self.value(p)?;
        let w = self.probs(p);
        let mut grad = DVector::zeros(self.k);
        let mut hess = DMatrix::zeros(self.k, self.k);
        for t in &self.terms {
            let row = self.responses[t.block].row(t.outcome).transpose();
            let wo = w[t.block][t.outcome];
            grad.axpy(t.f / wo, &row, 1.0);
            hess.ger(-t.f / (wo * wo), &row, &row, 1.0);
        }
        if self.objective == Objective::Eml {
            for &(o, total) in &self.totals {
                let mut rsum = DVector::zeros(self.k);
                for r in &self.responses {
                    rsum += r.row(o).transpose();
                }
                let s: f64 = w.iter().map(|wb| wb[o]).sum();
                grad.axpy(-total / s, &rsum, 1.0);
                hess.ger(total / (s * s), &rsum, &rsum, 1.0);
            }
        }
        Some(Eval { value, grad, hess })
    }
}

fn check_reachable(response: &DMatrix<f64>, outcome: usize, rec: &CountRecord) -> Result<()> {
    if response.row(outcome).iter().all(|v| *v <= 0.0) {
        return Err(Error::Infeasible(format!(
            "outcome {} of setting {} has counts but zero probability under the model",
            outcome,
            rec.setting()
        )));
    }
    Ok(())
}

fn softmax(theta: &DVector<f64>) -> DVector<f64> {
    let m = theta.max();
    let e = theta.map(|t| (t - m).exp());
    let s = e.sum();
    e / s
}

/// Weighted least squares on the linear count model, floored and
/// renormalized.
fn least_squares_start(problem: &Problem, bound: &[Bound<'_>]) -> DVector<f64> {
    let k = problem.k;
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let skip = |o: usize, b: &Bound<'_>| problem.objective == Objective::Eml && o == b.all_click;
    for b in bound {
        let n = b.record.n_m();
        for (o, &f) in b.record.counts().iter().enumerate() {
            if skip(o, b) {
                continue;
            }
            let w = n / f.max(1.0).sqrt();
            rows.push((b.response.row(o).iter().map(|v| v * w).collect(), f / n * w));
        }
    }
    let big = rows.iter().flat_map(|(r, _)| r.iter()).fold(1.0f64, |m, v| m.max(v.abs())) * 1e3;
    rows.push((vec![big; k], big));
    let a = DMatrix::from_fn(rows.len(), k, |r, c| rows[r].0[c]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let sol = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .unwrap_or_else(|_| DVector::from_element(k, 1.0 / k as f64));
    let floored = sol.map(|v| if v.is_finite() { v.max(FLOOR) } else { FLOOR });
    let s = floored.sum();
    floored / s
}

struct StartOutcome {
    p: DVector<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn newton(problem: &Problem, p0: &DVector<f64>, opts: &EstimateOptions) -> Option<StartOutcome> {
    let k = problem.k;
    let ln0 = p0[0].ln();
    let mut theta = p0.map(|v| (v.ln() - ln0).clamp(-THETA_LIMIT, THETA_LIMIT));
    theta[0] = 0.0;
    let mut p = softmax(&theta);
    let mut cur = problem.eval(&p)?;
    let mut converged = false;
    let mut iterations = 0;
    // rounding noise of the objective grows with the number of counts
    let mass: f64 = problem.terms.iter().map(|t| t.f).sum();
    let noise = 1e-14 * mass;
    let dec_tol = 1e-24 * mass;

    while iterations < opts.max_iter {
        iterations += 1;
        let gbar = p.dot(&cur.grad);
        let u = p.component_mul(&cur.grad.map(|g| g - gbar));
        // free coordinates are 1..k
        let m = k - 1;
        let g_t = DVector::from_fn(m, |a, _| u[a + 1]);
        let jp = DMatrix::from_fn(k, m, |r, c| {
            let a = c + 1;
            p[r] * (if r == a { 1.0 } else { 0.0 } - p[a])
        });
        let mut h_t = jp.transpose() * &cur.hess * &jp;
        for a in 0..m {
            for b in 0..m {
                let (pa, pb) = (p[a + 1], p[b + 1]);
                let (ga, gb) = (cur.grad[a + 1], cur.grad[b + 1]);
                h_t[(a, b)] -= pa * pb * (ga + gb - 2.0 * gbar);
            }
            h_t[(a, a)] += u[a + 1];
        }

        let step = ascent_direction(&h_t, &g_t);
        let decrement = g_t.dot(&step);
        let scale = (cur.value + problem.constant).abs().max(1.0);
        if !(decrement > 0.0) || decrement <= dec_tol {
            converged = decrement.is_finite();
            break;
        }

        let trial_at = |alpha: f64| {
            let t = DVector::from_fn(k, |r, _| {
                if r == 0 {
                    0.0
                } else {
                    (theta[r] + alpha * step[r - 1]).clamp(-THETA_LIMIT, THETA_LIMIT)
                }
            });
            let tp = softmax(&t);
            (t, tp)
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        if decrement <= noise {
            // the predicted gain is below rounding noise of the objective, so
            // value comparisons are meaningless; trust the quadratic model
            let (t, tp) = trial_at(1.0);
            accepted = problem.value(&tp).map(|v| (t, tp, v));
        } else {
            for _ in 0..60 {
                let (t, tp) = trial_at(alpha);
                if let Some(v) = problem.value(&tp) {
                    if v >= cur.value + 1e-4 * alpha * decrement {
                        accepted = Some((t, tp, v));
                        break;
                    }
                }
                alpha *= 0.5;
            }
        }
        let Some((trial, tp, v)) = accepted else {
            break;
        };
        let change = v - cur.value;
        let max_step = alpha * step.amax();
        theta = trial;
        p = tp;
        cur = problem.eval(&p)?;
        if change.abs() <= (opts.rel_tol * scale).max(noise) && max_step < opts.step_tol {
            converged = true;
            break;
        }
    }
    Some(StartOutcome { p, value: cur.value, iterations, converged })
}

/// Solves `(-H) s = g` with Jacobi scaling and eigenvalue magnitudes.
fn ascent_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let m = g.len();
    let d = DVector::from_fn(m, |a, _| {
        let v = h[(a, a)].abs();
        if v > 0.0 && v.is_finite() {
            1.0 / v.sqrt()
        } else {
            1.0
        }
    });
    let scaled = DMatrix::from_fn(m, m, |a, b| -h[(a, b)] * d[a] * d[b]);
    let eig = SymmetricEigen::new(scaled);
    let top = eig.eigenvalues.amax();
    let floor = (top * 1e-10).max(f64::MIN_POSITIVE);
    let gs = g.component_mul(&d);
    let coeffs = eig.eigenvectors.transpose() * gs;
    let inv = DVector::from_fn(m, |i, _| coeffs[i] / eig.eigenvalues[i].abs().max(floor));
    (eig.eigenvectors * inv).component_mul(&d)
}

/// Maximizes `objective` for `records` under `model`.
pub fn estimate(
    objective: Objective,
    records: &[CountRecord],
    model: &LikelihoodModel,
    opts: &EstimateOptions,
) -> Result<EstimateResult> {
    let bound = model.bind(records)?;
    let problem = Problem::new(objective, model, &bound)?;
    let p0 = least_squares_start(&problem, &bound);
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut starts = vec![p0.clone()];
    for _ in 0..opts.restarts {
        let jittered = p0.map(|v| v * rng.random_range(-1.0f64..1.0).exp());
        let s = jittered.sum();
        starts.push(jittered / s);
    }

    let mut best: Option<StartOutcome> = None;
    let mut summaries = Vec::new();
    for p_start in &starts {
        let Some(out) = newton(&problem, p_start, opts) else {
            summaries.push(StartSummary { loglik: f64::NEG_INFINITY, iterations: 0, converged: false });
            continue;
        };
        summaries.push(StartSummary {
            loglik: out.value + problem.constant,
            iterations: out.iterations,
            converged: out.converged,
        });
        let better = match &best {
            None => true,
            Some(b) => out.value > b.value,
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible("no start point has finite likelihood".into()))?;
    let cells: Vec<f64> = best.p.iter().copied().collect();
    let reconstruction = Reconstruction::from_cells(model.layout(), model.n_max(), cells)?;
    Ok(EstimateResult {
        reconstruction,
        loglik: best.value + problem.constant,
        iterations: best.iterations,
        converged: best.converged,
        starts: summaries,
    })
}

/// Full-information maximum likelihood over all outcomes.
pub fn ml_estimate(records: &[CountRecord], model: &LikelihoodModel, opts: &EstimateOptions) -> Result<EstimateResult> {
    estimate(Objective::Ml, records, model, opts)
}

/// Renormalized likelihood over attenuator settings, ignoring all-click
/// events.
pub fn eml_estimate(records: &[CountRecord], model: &LikelihoodModel, opts: &EstimateOptions) -> Result<EstimateResult> {
    estimate(Objective::Eml, records, model, opts)
}
