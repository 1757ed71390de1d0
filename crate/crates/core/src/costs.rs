//! Cost families for preventive (rate-lowering) and corrective
//! (recovery-raising) resources.
//!
//! Every family is a univariate posynomial in its GP variable minus a
//! constant offset: `cost(x) = Σ_k c_k x^{a_k} − offset` with `c_k > 0`.
//! The GP variable is the propagation rate `β` for prevention and the
//! complementary recovery rate `δ̂ = Δ − δ` for correction. The optimiser
//! moves the offsets to the budget side of the constraint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("rate {rate} outside [{lo}, {hi}]")]
    RateOutOfBounds { rate: f64, lo: f64, hi: f64 },
    #[error("spend {spend} outside [{min}, {max}]")]
    SpendOutOfRange { spend: f64, min: f64, max: f64 },
    #[error("invalid bounds: need 0 < lo ≤ hi, got [{lo}, {hi}]")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("recovery upper bound {hi} must stay below the cap {cap}")]
    CapExceeded { hi: f64, cap: f64 },
    #[error("custom term {index} has nonpositive coefficient {coeff}")]
    NonPositiveCoefficient { index: usize, coeff: f64 },
    #[error("custom cost family has no terms")]
    NoTerms,
    #[error("custom cost is not monotone on its bounds")]
    NotMonotone,
}

/// `Σ c_k x^{a_k} − offset` in one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivariatePosynomial {
    /// `(c_k, a_k)` pairs.
    pub terms: Vec<(f64, f64)>,
    pub offset: f64,
}

impl UnivariatePosynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, a)| c * x.powf(a)).sum::<f64>() - self.offset
    }

    /// Checks the posynomial structure: at least one term, all coefficients
    /// positive and finite.
    pub fn validate(&self) -> Result<(), CostError> {
        if self.terms.is_empty() {
            return Err(CostError::NoTerms);
        }
        for (index, &(c, a)) in self.terms.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() || !a.is_finite() {
                return Err(CostError::NonPositiveCoefficient { index, coeff: c });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub lo: f64,
    pub hi: f64,
}

impl RateBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self, CostError> {
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(CostError::InvalidBounds { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn check(&self, rate: f64) -> Result<(), CostError> {
        // one ulp of slack so boundary values computed by inversion pass
        let slack = 4.0 * f64::EPSILON * self.hi;
        if rate < self.lo - slack || rate > self.hi + slack || rate.is_nan() {
            return Err(CostError::RateOutOfBounds {
                rate,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(())
    }
}

/// `f(β) = (β⁻¹ − β̄⁻¹)/(β̲⁻¹ − β̄⁻¹)`.
pub fn vaccine_cost(beta: f64, beta_lo: f64, beta_hi: f64) -> Result<f64, CostError> {
    PreventionCost::new(
        PreventionFamily::Vaccine,
        RateBounds::new(beta_lo, beta_hi)?,
    )?
    .cost(beta)
}

/// `g(δ) = ((1−δ)⁻¹ − (1−δ̲)⁻¹)/((1−δ̄)⁻¹ − (1−δ̲)⁻¹)`; requires `δ̄ < 1`.
pub fn antidote_cost(delta: f64, delta_lo: f64, delta_hi: f64) -> Result<f64, CostError> {
    CorrectionCost::new(
        CorrectionFamily::Antidote,
        RateBounds::new(delta_lo, delta_hi)?,
        1.0,
    )?
    .cost(delta)
}

/// `f(β) = β̲(β̄/β − 1)/(β̄ − β̲)`.
pub fn workstation_cost(beta: f64, beta_lo: f64, beta_hi: f64) -> Result<f64, CostError> {
    PreventionCost::new(
        PreventionFamily::Workstation,
        RateBounds::new(beta_lo, beta_hi)?,
    )?
    .cost(beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PreventionFamily {
    /// Reciprocal cost normalised to 1 at `β̲`.
    Vaccine,
    /// Reciprocal cost with `f(β̄) = 0`, `f(β̲) = 1`.
    Workstation,
    /// User-supplied posynomial in `β`.
    CustomPosynomial(UnivariatePosynomial),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CorrectionFamily {
    /// Reciprocal cost in `Δ − δ`, normalised to `[0, 1]`.
    Antidote,
    /// User-supplied posynomial in `δ̂ = Δ − δ`.
    CustomPosynomial(UnivariatePosynomial),
}

/// A prevention family bound to its rate interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PreventionCost {
    family: PreventionFamily,
    bounds: RateBounds,
    posy: UnivariatePosynomial,
}

impl PreventionCost {
    pub fn new(family: PreventionFamily, bounds: RateBounds) -> Result<Self, CostError> {
        let RateBounds { lo, hi } = bounds;
        let posy = match &family {
            // A pinned rate has no decision to pay for.
            _ if bounds.is_fixed() && !matches!(family, PreventionFamily::CustomPosynomial(_)) => {
                UnivariatePosynomial {
                    terms: vec![],
                    offset: 0.0,
                }
            }
            PreventionFamily::Vaccine => {
                let scale = 1.0 / (1.0 / lo - 1.0 / hi);
                UnivariatePosynomial {
                    terms: vec![(scale, -1.0)],
                    offset: scale / hi,
                }
            }
            PreventionFamily::Workstation => {
                let scale = lo / (hi - lo);
                UnivariatePosynomial {
                    terms: vec![(scale * hi, -1.0)],
                    offset: scale,
                }
            }
            PreventionFamily::CustomPosynomial(p) => {
                p.validate()?;
                p.clone()
            }
        };
        Ok(Self {
            family,
            bounds,
            posy,
        })
    }

    pub fn family(&self) -> &PreventionFamily {
        &self.family
    }

    pub fn bounds(&self) -> RateBounds {
        self.bounds
    }

    /// Posynomial in `β` (minus offset).
    pub fn posynomial(&self) -> &UnivariatePosynomial {
        &self.posy
    }

    pub fn cost(&self, beta: f64) -> Result<f64, CostError> {
        self.bounds.check(beta)?;
        Ok(self.cost_unchecked(beta))
    }

    pub(crate) fn cost_unchecked(&self, beta: f64) -> f64 {
        if self.posy.terms.is_empty() {
            return 0.0;
        }
        self.posy.eval(beta)
    }

    /// Spend at `β̲` (full protection).
    pub fn max_spend(&self) -> f64 {
        self.cost_unchecked(self.bounds.lo)
    }

    /// Spend at `β̄`; zero for the normalized families.
    pub fn min_spend(&self) -> f64 {
        self.cost_unchecked(self.bounds.hi)
    }

    /// Rate that costs exactly `spend`.
    pub fn inverse(&self, spend: f64) -> Result<f64, CostError> {
        let (lo, hi) = (self.bounds.lo, self.bounds.hi);
        let at_hi = self.cost_unchecked(hi);
        let at_lo = self.cost_unchecked(lo);
        let (min, max) = (at_hi.min(at_lo), at_hi.max(at_lo));
        if !(spend >= min - 1e-12 && spend <= max + 1e-12) {
            return Err(CostError::SpendOutOfRange { spend, min, max });
        }
        if self.bounds.is_fixed() {
            return Ok(lo);
        }
        match &self.family {
            PreventionFamily::Vaccine => {
                let scale = 1.0 / lo - 1.0 / hi;
                Ok((1.0 / (spend * scale + 1.0 / hi)).clamp(lo, hi))
            }
            PreventionFamily::Workstation => {
                let scale = lo / (hi - lo);
                Ok((hi / (spend / scale + 1.0)).clamp(lo, hi))
            }
            PreventionFamily::CustomPosynomial(_) => {
                bisect_inverse(|x| self.cost_unchecked(x), lo, hi, spend)
            }
        }
    }
}

/// A correction family bound to its recovery interval and cap `Δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionCost {
    family: CorrectionFamily,
    bounds: RateBounds,
    cap: f64,
    posy: UnivariatePosynomial,
}

impl CorrectionCost {
    pub fn new(family: CorrectionFamily, bounds: RateBounds, cap: f64) -> Result<Self, CostError> {
        if !(bounds.hi < cap) {
            return Err(CostError::CapExceeded { hi: bounds.hi, cap });
        }
        let posy = match &family {
            _ if bounds.is_fixed() && !matches!(family, CorrectionFamily::CustomPosynomial(_)) => {
                UnivariatePosynomial {
                    terms: vec![],
                    offset: 0.0,
                }
            }
            CorrectionFamily::Antidote => {
                // in δ̂: ((δ̂)⁻¹ − (Δ−δ̲)⁻¹) / ((Δ−δ̄)⁻¹ − (Δ−δ̲)⁻¹)
                let at_lo = 1.0 / (cap - bounds.lo);
                let at_hi = 1.0 / (cap - bounds.hi);
                let scale = 1.0 / (at_hi - at_lo);
                UnivariatePosynomial {
                    terms: vec![(scale, -1.0)],
                    offset: scale * at_lo,
                }
            }
            CorrectionFamily::CustomPosynomial(p) => {
                p.validate()?;
                p.clone()
            }
        };
        Ok(Self {
            family,
            bounds,
            cap,
            posy,
        })
    }

    pub fn family(&self) -> &CorrectionFamily {
        &self.family
    }

    pub fn bounds(&self) -> RateBounds {
        self.bounds
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Posynomial in `δ̂ = Δ − δ` (minus offset).
    pub fn posynomial(&self) -> &UnivariatePosynomial {
        &self.posy
    }

    pub fn cost(&self, delta: f64) -> Result<f64, CostError> {
        self.bounds.check(delta)?;
        Ok(self.cost_complementary_unchecked(self.cap - delta))
    }

    /// `ĝ(δ̂) = g(Δ − δ̂)`.
    pub fn cost_complementary(&self, delta_hat: f64) -> Result<f64, CostError> {
        self.cost(self.cap - delta_hat)
    }

    pub(crate) fn cost_complementary_unchecked(&self, delta_hat: f64) -> f64 {
        if self.posy.terms.is_empty() {
            return 0.0;
        }
        self.posy.eval(delta_hat)
    }

    pub fn max_spend(&self) -> f64 {
        self.cost_complementary_unchecked(self.cap - self.bounds.hi)
    }

    /// Recovery rate `δ` that costs exactly `spend`.
    pub fn inverse(&self, spend: f64) -> Result<f64, CostError> {
        let (lo, hi) = (self.bounds.lo, self.bounds.hi);
        let at_lo = self.cost_complementary_unchecked(self.cap - lo);
        let at_hi = self.cost_complementary_unchecked(self.cap - hi);
        let (min, max) = (at_hi.min(at_lo), at_hi.max(at_lo));
        if !(spend >= min - 1e-12 && spend <= max + 1e-12) {
            return Err(CostError::SpendOutOfRange { spend, min, max });
        }
        if self.bounds.is_fixed() {
            return Ok(lo);
        }
        match &self.family {
            CorrectionFamily::Antidote => {
                let a = 1.0 / (self.cap - lo);
                let b = 1.0 / (self.cap - hi);
                let recip = a + spend * (b - a);
                Ok((self.cap - 1.0 / recip).clamp(lo, hi))
            }
            CorrectionFamily::CustomPosynomial(_) => bisect_inverse(
                |d| self.cost_complementary_unchecked(self.cap - d),
                lo,
                hi,
                spend,
            ),
        }
    }
}

fn bisect_inverse(f: impl Fn(f64) -> f64, lo: f64, hi: f64, target: f64) -> Result<f64, CostError> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    let increasing = f_hi >= f_lo;
    // sample interior points to reject obviously non-monotone families
    let mut prev = f_lo;
    for k in 1..=64 {
        let x = lo + (hi - lo) * k as f64 / 64.0;
        let v = f(x);
        if (increasing && v < prev - 1e-12) || (!increasing && v > prev + 1e-12) {
            return Err(CostError::NotMonotone);
        }
        prev = v;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let below = f(mid) < target;
        if below == increasing {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= f64::EPSILON * b {
            break;
        }
    }
    Ok(0.5 * (a + b))
}
