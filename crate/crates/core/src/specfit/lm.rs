// index loops keep the symmetric normal-matrix accumulation readable
#![allow(clippy::needless_range_loop)]

//! Small dense Levenberg-Marquardt engine for the line-shape fits.
//!
//! The fits in this crate have at most four parameters, so the normal
//! equations are solved directly with partially pivoted elimination. Damping
//! uses Marquardt's `lambda * diag(J^T W J)` form, which makes the iteration
//! invariant under rescaling of individual parameters; convergence is judged
//! on the same scaled step. Accepted steps strictly decrease the cost, and
//! the accepted-cost trace is returned so callers can assert monotonicity.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("axis and value lengths differ ({axis} vs {values})")]
    MismatchedLengths { axis: usize, values: usize },
    #[error("window span {span} is below the required {need} (2x estimated FWHM)")]
    WindowTooNarrow { span: f64, need: f64 },
    #[error("singular normal equations (flat or degenerate window)")]
    SingularNormalEquations,
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("non-finite value encountered in model or data")]
    NonFinite,
    #[error("min_prominence must be in (0, 1], got {0}")]
    InvalidProminence(f64),
    #[error("operation requires a {0}")]
    MissingInput(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Scaled-step convergence threshold.
    pub relative_step_tol: f64,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_step_tol: 1e-8,
            lambda_init: 1e-3,
            lambda_up: 5.0,
            lambda_down: 0.2,
        }
    }
}

/// Raw optimizer output; line-shape wrappers repackage this into their
/// domain fit types.
#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Parameter covariance `s^2 (J^T W J)^-1`; `None` when the final normal
    /// matrix is singular.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Cost after the initial evaluation and after every accepted step.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// sqrt(weighted cost / sum of weights).
    pub residual_rms: f64,
}

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        if a[row][row] == 0.0 {
            return None;
        }
        x[row] = s / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Inverts a small symmetric matrix by solving against unit vectors.
fn invert_dense(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_dense(a.to_vec(), e)?);
    }
    // transpose column solutions into rows
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Weighted damped least squares over a scalar model `y = f(x; p)`.
///
/// `jacobian(x, p, row)` fills `row` with `df/dp_j` at `x`.
pub fn levenberg_marquardt<F, J>(
    xs: &[f64],
    ys: &[f64],
    weights: Option<&[f64]>,
    initial: &[f64],
    model: F,
    jacobian: J,
    opts: &LmOptions,
) -> Result<LmFit, FitError>
where
    F: Fn(f64, &[f64]) -> f64,
    J: Fn(f64, &[f64], &mut [f64]),
{
    let m = xs.len();
    let n = initial.len();
    if ys.len() != m {
        return Err(FitError::MismatchedLengths {
            axis: m,
            values: ys.len(),
        });
    }
    if m < n + 1 {
        return Err(FitError::TooFewSamples { got: m, need: n + 1 });
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);

    let cost_of = |p: &[f64]| -> f64 {
        let mut c = 0.0;
        for i in 0..m {
            let r = ys[i] - model(xs[i], p);
            c += weight(i) * r * r;
        }
        c
    };

    let mut params = initial.to_vec();
    let mut cost = cost_of(&params);
    if !cost.is_finite() {
        return Err(FitError::NonFinite);
    }
    let mut trace = vec![cost];
    let mut lambda = opts.lambda_init;
    let mut converged = false;
    let mut iterations = 0;
    let mut row = vec![0.0; n];

    'outer: for iter in 0..opts.max_iterations {
        iterations = iter + 1;

        // normal matrix and gradient at the current point
        let mut a = vec![vec![0.0; n]; n];
        let mut g = vec![0.0; n];
        for i in 0..m {
            jacobian(xs[i], &params, &mut row);
            let r = ys[i] - model(xs[i], &params);
            let w = weight(i);
            for j in 0..n {
                g[j] += w * row[j] * r;
                for k in j..n {
                    a[j][k] += w * row[j] * row[k];
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                a[j][k] = a[k][j];
            }
        }

        // scale for the convergence test: column norms of sqrt(W) J
        let scale: Vec<f64> = (0..n).map(|j| a[j][j].sqrt()).collect();
        let scaled_p_norm: f64 = params
            .iter()
            .zip(&scale)
            .map(|(p, d)| (p * d).powi(2))
            .sum::<f64>()
            .sqrt();

        // inner damping loop: grow lambda until a step is accepted
        loop {
            let mut damped = a.clone();
            for (j, dj) in damped.iter_mut().enumerate() {
                if a[j][j] == 0.0 {
                    return Err(FitError::SingularNormalEquations);
                }
                dj[j] = a[j][j] * (1.0 + lambda);
            }
            let delta = solve_dense(damped, g.clone())
                .ok_or(FitError::SingularNormalEquations)?;

            let candidate: Vec<f64> = params.iter().zip(&delta).map(|(p, d)| p + d).collect();
            let new_cost = cost_of(&candidate);

            if new_cost.is_finite() && new_cost < cost {
                let scaled_step: f64 = delta
                    .iter()
                    .zip(&scale)
                    .map(|(d, s)| (d * s).powi(2))
                    .sum::<f64>()
                    .sqrt();
                params = candidate;
                cost = new_cost;
                trace.push(cost);
                lambda = (lambda * opts.lambda_down).max(1e-12);
                if scaled_step <= opts.relative_step_tol * scaled_p_norm.max(1e-300) {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= opts.lambda_up;
            if lambda > 1e15 {
                // no descent direction left at machine precision
                converged = true;
                break 'outer;
            }
        }
    }

    // covariance from the undamped normal matrix at the solution
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..m {
        jacobian(xs[i], &params, &mut row);
        let w = weight(i);
        for j in 0..n {
            for k in j..n {
                a[j][k] += w * row[j] * row[k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[j][k] = a[k][j];
        }
    }
    let dof = (m - n).max(1) as f64;
    let s2 = cost / dof;
    let covariance = invert_dense(&a).map(|inv| {
        inv.into_iter()
            .map(|r| r.into_iter().map(|v| v * s2).collect())
            .collect()
    });

    let weight_sum: f64 = (0..m).map(weight).sum();
    Ok(LmFit {
        params,
        covariance,
        cost_trace: trace,
        iterations,
        converged,
        residual_rms: (cost / weight_sum).sqrt(),
    })
}
