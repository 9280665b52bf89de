//! Inverse-Hessian BFGS with an interpolating Armijo backtracking line search.
//!
//! The update keeps the approximation exactly symmetric and skips pairs that
//! fail the curvature condition. The line search first tries the minimizer of
//! the one-dimensional quadratic model through the trial point, which makes
//! the search exact on quadratic objectives, and falls back to step halving.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Relative curvature floor: a pair (s, delta) is accepted only when
/// s'delta > floor * |s| * |delta|.
pub const CURVATURE_FLOOR: f64 = 1e-10;

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;

/// Inverse-Hessian approximation together with the pair that last updated it.
#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    pub b: Array2<f64>,
    pub s: Array1<f64>,
    pub delta: Array1<f64>,
}

impl BfgsState {
    pub fn identity(n: usize) -> Self {
        Self {
            b: Array2::eye(n),
            s: Array1::zeros(n),
            delta: Array1::zeros(n),
        }
    }
}

/// Apply one BFGS update with step `s` and gradient difference `delta`:
/// B+ = (I - rho s delta')B(I - rho delta s') + rho s s', rho = 1/(s'delta).
///
/// Pairs failing the curvature floor are skipped and the state is returned
/// unchanged; the boolean reports whether the update was accepted.
pub fn bfgs_update(state: &BfgsState, s: &Array1<f64>, delta: &Array1<f64>) -> (BfgsState, bool) {
    let sd = s.dot(delta);
    let floor = CURVATURE_FLOOR * norm(s) * norm(delta);
    if sd.is_nan() || sd <= floor {
        return (state.clone(), false);
    }
    let rho = 1.0 / sd;
    let bd = state.b.dot(delta); // equals delta'B by symmetry of B
    let dbd = delta.dot(&bd);
    let coef = rho * rho * dbd + rho;
    let n = s.len();
    let mut b = state.b.clone();
    for i in 0..n {
        for j in 0..n {
            // the two rank-one terms are written symmetrically so B stays
            // exactly symmetric in floating point
            b[[i, j]] += coef * s[i] * s[j] - rho * (s[i] * bd[j] + bd[i] * s[j]);
        }
    }
    (
        BfgsState {
            b,
            s: s.clone(),
            delta: delta.clone(),
        },
        true,
    )
}

/// One accepted update, recorded for diagnostics.
#[derive(Debug, Clone)]
pub struct BfgsTrace {
    pub s: Array1<f64>,
    pub delta: Array1<f64>,
    pub b_after: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct BfgsSolution {
    pub x: Array1<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub state: BfgsState,
    pub skipped_updates: usize,
    /// Every accepted update in order.
    pub trace: Vec<BfgsTrace>,
}

/// Minimize `f` (returning value and gradient) from `x0`, stopping once the
/// gradient norm falls below `epsilon` or after `max_iters` iterations.
pub fn minimize_bfgs<F>(
    f: F,
    x0: Array1<f64>,
    epsilon: f64,
    max_iters: usize,
) -> Result<BfgsSolution>
where
    F: Fn(&Array1<f64>) -> (f64, Array1<f64>),
{
    let n = x0.len();
    let mut state = BfgsState::identity(n);
    let mut x = x0;
    let (mut fx, mut gx) = f(&x);
    if !fx.is_finite() {
        return Err(Error::Divergence(0));
    }
    let mut trace = Vec::new();
    let mut skipped_updates = 0;
    let mut iterations = 0;

    for iter in 0..max_iters {
        if norm(&gx) < epsilon {
            break;
        }
        iterations = iter + 1;
        let mut direction = -state.b.dot(&gx);
        let mut slope = gx.dot(&direction);
        if slope >= 0.0 {
            // approximation lost positive definiteness: restart from identity
            state = BfgsState::identity(n);
            direction = -gx.clone();
            slope = gx.dot(&direction);
        }
        let (step, _) = line_search(&f, &x, fx, &direction, slope)?;
        let s = step * &direction;
        let x_next = &x + &s;
        let (f_next, g_next) = f(&x_next);
        if !f_next.is_finite() {
            return Err(Error::Divergence(iter + 1));
        }
        let delta = &g_next - &gx;
        let (next_state, accepted) = bfgs_update(&state, &s, &delta);
        if accepted {
            trace.push(BfgsTrace {
                s,
                delta,
                b_after: next_state.b.clone(),
            });
        } else {
            skipped_updates += 1;
        }
        state = next_state;
        x = x_next;
        fx = f_next;
        gx = g_next;
    }

    Ok(BfgsSolution {
        grad_norm: norm(&gx),
        x,
        value: fx,
        iterations,
        state,
        skipped_updates,
        trace,
    })
}

/// Armijo backtracking (c = 1e-4, step halving) with a quadratic
/// interpolation candidate tried at each trial step.
fn line_search<F>(
    f: &F,
    x: &Array1<f64>,
    fx: f64,
    direction: &Array1<f64>,
    slope: f64,
) -> Result<(f64, f64)>
where
    F: Fn(&Array1<f64>) -> (f64, Array1<f64>),
{
    let value_at = |t: f64| f(&(x + &(t * direction))).0;
    let mut t = 1.0;
    for _ in 0..MAX_HALVINGS {
        let ft = value_at(t);
        // minimizer of the quadratic through f(0), slope and f(t); exact for
        // quadratic objectives
        let denom = ft - fx - t * slope;
        if denom > 0.0 {
            let tq = -slope * t * t / (2.0 * denom);
            if tq.is_finite() && tq > 1e-3 * t && tq < 10.0 * t {
                let fq = value_at(tq);
                if fq <= fx + ARMIJO_C * tq * slope && fq <= ft {
                    return Ok((tq, fq));
                }
            }
        }
        if ft <= fx + ARMIJO_C * t * slope {
            return Ok((t, ft));
        }
        t *= 0.5;
    }
    Err(Error::Stagnation(MAX_HALVINGS))
}

pub(crate) fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}
