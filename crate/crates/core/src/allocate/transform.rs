//! Log change of variables `y = log x`: monomials become affine functions
//! and posynomials become log-sum-exp functions, which are convex.

use nalgebra::{DMatrix, DVector};

use super::gp::{GpForm, Monomial, Posynomial};

/// `aᵀy + b`, with `a` stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn from_monomial(m: &Monomial) -> Self {
        Self {
            coeffs: m.exps.clone(),
            constant: m.coeff.ln(),
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .fold(self.constant, |acc, &(k, a)| acc + a * y[k])
    }
}

/// `log Σ_k exp(a_kᵀy + b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSumExp {
    pub terms: Vec<Affine>,
}

impl LogSumExp {
    pub fn from_posynomial(p: &Posynomial) -> Self {
        Self {
            terms: p.terms.iter().map(Affine::from_monomial).collect(),
        }
    }

    fn exponents(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let z: Vec<f64> = self.terms.iter().map(|t| t.eval(y)).collect();
        let zmax = z.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        (z, zmax)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let (z, zmax) = self.exponents(y);
        if !zmax.is_finite() {
            return zmax;
        }
        zmax + z.iter().map(|&v| (v - zmax).exp()).sum::<f64>().ln()
    }

    /// Softmax weights of the terms; they sum to one.
    fn weights(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let (z, zmax) = self.exponents(y);
        let mut w: Vec<f64> = z.iter().map(|&v| (v - zmax).exp()).collect();
        let s: f64 = w.iter().sum();
        for v in &mut w {
            *v /= s;
        }
        (zmax + s.ln(), w)
    }

    /// Value and gradient `Σ_k w_k a_k`.
    pub fn value_grad(&self, y: &[f64]) -> (f64, DVector<f64>) {
        let (value, w) = self.weights(y);
        let mut g = DVector::zeros(y.len());
        for (t, &wk) in self.terms.iter().zip(&w) {
            for &(k, a) in &t.coeffs {
                g[k] += wk * a;
            }
        }
        (value, g)
    }

    /// Value, gradient, and Hessian `Σ_k w_k a_k a_kᵀ − g gᵀ`.
    pub fn value_grad_hess(&self, y: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let (value, w) = self.weights(y);
        let dim = y.len();
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        for (t, &wk) in self.terms.iter().zip(&w) {
            for &(k, a) in &t.coeffs {
                g[k] += wk * a;
                for &(l, b) in &t.coeffs {
                    h[(k, l)] += wk * a * b;
                }
            }
        }
        let support = self.support();
        for &k in &support {
            for &l in &support {
                h[(k, l)] -= g[k] * g[l];
            }
        }
        (value, g, h)
    }

    /// Variables appearing in any term.
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self
            .terms
            .iter()
            .flat_map(|t| t.coeffs.iter().map(|&(k, _)| k))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// `minimize objective(y)` subject to `inequalities[i](y) ≤ 0` and
/// `equalities[j](y) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexForm {
    pub dim: usize,
    pub objective: Affine,
    pub inequalities: Vec<LogSumExp>,
    pub equalities: Vec<Affine>,
}

pub fn log_transform(gp: &GpForm) -> ConvexForm {
    ConvexForm {
        dim: gp.var_count(),
        objective: Affine::from_monomial(&gp.objective),
        inequalities: gp
            .inequalities
            .iter()
            .map(|c| LogSumExp::from_posynomial(&c.standard()))
            .collect(),
        equalities: gp.equalities.iter().map(Affine::from_monomial).collect(),
    }
}
