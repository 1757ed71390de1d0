//! Log-barrier interior-point method for [`ConvexForm`] programs with
//! affine equality constraints.

use nalgebra::{DMatrix, DVector};

use super::transform::ConvexForm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierOptions {
    /// Stop once the duality-gap bound `m / t` drops below this.
    pub tol: f64,
    pub t0: f64,
    /// Factor by which `t` grows between centering steps.
    pub mu: f64,
    /// Newton steps allowed per centering.
    pub max_newton: usize,
    /// Centering ends once half the squared Newton decrement is below this.
    pub newton_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            t0: 1.0,
            mu: 10.0,
            max_newton: 200,
            newton_tol: 1e-11,
            armijo: 0.25,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierOutcome {
    pub y: Vec<f64>,
    pub t: f64,
    /// `m / t`, an upper bound on the suboptimality of `y`.
    pub gap: f64,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
    /// False if a centering step ran out of Newton iterations.
    pub converged: bool,
    /// Largest inequality value at `y` (negative means strictly feasible).
    pub max_inequality: f64,
    pub max_equality_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierError {
    /// The starting point violates an inequality or equality.
    InfeasibleStart { constraint: usize, value: f64 },
    /// Newton system could not be solved.
    Singular,
}

fn barrier_value(form: &ConvexForm, t: f64, y: &[f64]) -> Option<f64> {
    let mut v = t * form.objective.eval(y);
    for c in &form.inequalities {
        let f = c.eval(y);
        if !(f < 0.0) {
            return None;
        }
        v -= (-f).ln();
    }
    v.is_finite().then_some(v)
}

fn barrier_derivatives(form: &ConvexForm, t: f64, y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = form.dim;
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for &(k, a) in &form.objective.coeffs {
        g[k] += t * a;
    }
    for c in &form.inequalities {
        let (f, gc, hc) = c.value_grad_hess(y);
        let inv = -1.0 / f;
        g.axpy(inv, &gc, 1.0);
        h += hc * inv;
        let support = c.support();
        for &k in &support {
            for &l in &support {
                h[(k, l)] += inv * inv * gc[k] * gc[l];
            }
        }
    }
    (g, h)
}

/// Solves the equality-constrained Newton system
/// `[H Aᵀ; A 0] [dy; w] = [−g; −r]` by block elimination.
fn newton_step(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    r: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = h.nrows();
    let chol = h.clone().cholesky().or_else(|| {
        let scale = h.diagonal().amax().max(1.0);
        let mut reg = h.clone();
        for i in 0..n {
            reg[(i, i)] += 1e-12 * scale;
        }
        reg.cholesky()
    })?;
    let hinv_g = chol.solve(g);
    if a.nrows() == 0 {
        return Some(-hinv_g);
    }
    let hinv_at = chol.solve(&a.transpose());
    let schur = a * &hinv_at;
    // A dy = −r with dy = −H⁻¹(g + Aᵀw)  ⇒  (A H⁻¹ Aᵀ) w = r − A H⁻¹ g
    let rhs = r - a * &hinv_g;
    let w = schur.lu().solve(&rhs)?;
    Some(-(hinv_g + hinv_at * w))
}

/// Minimizes `form` from the strictly feasible point `y0`.
pub fn barrier_solve(
    form: &ConvexForm,
    y0: &[f64],
    opts: &BarrierOptions,
) -> Result<BarrierOutcome, BarrierError> {
    let n = form.dim;
    let m = form.inequalities.len();
    for (i, c) in form.inequalities.iter().enumerate() {
        let v = c.eval(y0);
        if !(v < 0.0) {
            return Err(BarrierError::InfeasibleStart {
                constraint: i,
                value: v,
            });
        }
    }
    for (j, e) in form.equalities.iter().enumerate() {
        let v = e.eval(y0);
        if v.abs() > 1e-9 {
            return Err(BarrierError::InfeasibleStart {
                constraint: m + j,
                value: v,
            });
        }
    }
    let mut a = DMatrix::zeros(form.equalities.len(), n);
    for (j, e) in form.equalities.iter().enumerate() {
        for &(k, c) in &e.coeffs {
            a[(j, k)] += c;
        }
    }

    let mut y = y0.to_vec();
    let mut t = opts.t0;
    let mut outer = 0;
    let mut newton_total = 0;
    let mut converged = true;
    loop {
        outer += 1;
        let mut centered = false;
        for _ in 0..opts.max_newton {
            let (g, h) = barrier_derivatives(form, t, &y);
            let r = DVector::from_iterator(
                form.equalities.len(),
                form.equalities.iter().map(|e| e.eval(&y)),
            );
            let dy = newton_step(&h, &g, &a, &r).ok_or(BarrierError::Singular)?;
            newton_total += 1;
            let decrement2 = dy.dot(&(&h * &dy));
            if decrement2 / 2.0 <= opts.newton_tol {
                centered = true;
                break;
            }
            let f0 = barrier_value(form, t, &y).expect("iterate stays feasible");
            let slope = g.dot(&dy);
            let mut s = 1.0;
            let mut decrease = None;
            while s > 1e-14 {
                let trial: Vec<f64> = y.iter().zip(dy.iter()).map(|(a, b)| a + s * b).collect();
                if let Some(f1) = barrier_value(form, t, &trial) {
                    if f1 <= f0 + opts.armijo * s * slope {
                        y = trial;
                        decrease = Some(f0 - f1);
                        break;
                    }
                }
                s *= opts.backtrack;
            }
            // Stop once progress is below what floating point can resolve.
            match decrease {
                Some(d) if d > 1e-14 * f0.abs().max(1.0) => {}
                _ => {
                    centered = true;
                    break;
                }
            }
        }
        if !centered {
            converged = false;
        }
        if m as f64 / t < opts.tol || m == 0 {
            break;
        }
        t *= opts.mu;
    }
    let max_inequality = form
        .inequalities
        .iter()
        .map(|c| c.eval(&y))
        .fold(f64::NEG_INFINITY, f64::max);
    let max_equality_residual = form
        .equalities
        .iter()
        .map(|e| e.eval(&y).abs())
        .fold(0.0, f64::max);
    Ok(BarrierOutcome {
        gap: m as f64 / t,
        y,
        t,
        outer_iterations: outer,
        newton_iterations: newton_total,
        converged,
        max_inequality,
        max_equality_residual,
    })
}
