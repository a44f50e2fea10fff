//! First-order predictors for `P(S_N = t)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticePmf, PowerLawSpec, SlowlyVarying};

use super::regime::Predictor;
use super::stable::StableLaw;

/// A law given either by a tabulated pmf or by its untruncated spec.
#[derive(Debug, Clone, Copy)]
pub enum LawRef<'a> {
    Pmf(&'a LatticePmf),
    Spec(&'a PowerLawSpec),
}

impl<'a> From<&'a LatticePmf> for LawRef<'a> {
    fn from(p: &'a LatticePmf) -> Self {
        LawRef::Pmf(p)
    }
}

impl<'a> From<&'a PowerLawSpec> for LawRef<'a> {
    fn from(s: &'a PowerLawSpec) -> Self {
        LawRef::Spec(s)
    }
}

impl LawRef<'_> {
    /// Point probability; a tabulated law refuses points outside its
    /// retained support when mass was cut off on that side.
    pub fn prob(&self, t: i64) -> Result<f64> {
        match self {
            LawRef::Spec(s) => Ok(s.prob(t)),
            LawRef::Pmf(p) => {
                let beyond = if t > p.max_support() {
                    p.tail_right()
                } else if t < p.min_support() {
                    p.tail_left()
                } else {
                    0.0
                };
                if beyond > 0.0 {
                    return Err(Error::ErrorBudget {
                        t,
                        bound: beyond,
                        allowance: 0.0,
                    });
                }
                Ok(p.prob(t))
            }
        }
    }
}

/// How the scale `a` of `P(X = t) ~ a t^-α` enters the subcritical formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleConvention {
    /// `a^{(α-1)(γ-1)/α} (α-1) E Z₁^{(α-1)(γ-1)}` as commonly stated, with
    /// `Z₁` the law whose Lévy tail is `x^{-(α-1)}`.
    Literal,
    /// The limit obtained from `n^{-1/(α-1)} S_n → Z_a` with
    /// `Z_a = (a/(α-1))^{1/(α-1)} Z₁`, so the factor is
    /// `(a/(α-1))^{γ-1} (α-1) E Z₁^{(α-1)(γ-1)}`.
    #[default]
    TailMatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubcriticalParams {
    pub alpha: f64,
    pub gamma: f64,
    /// `a` in `P(X = t) ~ a t^-α`.
    pub a: f64,
    /// `L₂` in `P(N = t) = t^-γ L₂(t)`.
    pub l2: SlowlyVarying,
    pub convention: ScaleConvention,
}

impl SubcriticalParams {
    /// Constants read off the two specs; both must have `ρ = 0` on `X`.
    pub fn from_specs(x: &PowerLawSpec, n: &PowerLawSpec, convention: ScaleConvention) -> Result<Self> {
        if x.sv.rho != 0.0 {
            return Err(Error::Precondition(
                "subcritical predictor needs P(X = t) ~ a t^-α".into(),
            ));
        }
        let zn = n.normalizer();
        Ok(Self {
            alpha: x.alpha,
            gamma: n.alpha,
            a: x.right_constant(),
            l2: SlowlyVarying {
                c: n.a * n.sv.c / zn,
                rho: n.sv.rho,
            },
            convention,
        })
    }

    /// Constant multiplying `t^{-1-(α-1)(γ-1)} L₂(t^{α-1})`.
    pub fn constant(&self) -> Result<f64> {
        let (alpha, gamma) = (self.alpha, self.gamma);
        if !(alpha > 1.0 && alpha < 2.0 && gamma > 1.0 && gamma < 2.0) {
            return Err(invalid(format!(
                "subcritical predictor needs α, γ in (1, 2), got α = {alpha}, γ = {gamma}"
            )));
        }
        if !(self.a > 0.0) {
            return Err(invalid("scale a must be positive"));
        }
        let nu = alpha - 1.0;
        let s = nu * (gamma - 1.0);
        let moment = StableLaw::one_sided(nu)?.frac_moment(s)?;
        let scale = match self.convention {
            ScaleConvention::Literal => self.a.powf(s / alpha),
            ScaleConvention::TailMatched => (self.a / nu).powf(gamma - 1.0),
        };
        Ok(scale * nu * moment)
    }
}

/// Subcritical stable predictor at `t`.
pub fn predict_subcritical(t: f64, params: &SubcriticalParams) -> Result<f64> {
    let c = params.constant()?;
    Ok(subcritical_with_constant(t, params, c))
}

/// Same as [`predict_subcritical`] with the constant precomputed, for grids.
pub fn subcritical_with_constant(t: f64, params: &SubcriticalParams, constant: f64) -> f64 {
    let nu = params.alpha - 1.0;
    let s = nu * (params.gamma - 1.0);
    constant * t.powf(-1.0 - s) * params.l2.eval(t.powf(nu))
}

/// Inputs shared by the predictors.
#[derive(Debug, Clone, Copy)]
pub struct PredictInputs<'a> {
    pub x: LawRef<'a>,
    pub n: LawRef<'a>,
    pub mu: f64,
    pub en: f64,
    pub subcritical: Option<SubcriticalParams>,
}

pub fn single_big_jump(t: i64, x: LawRef<'_>, en: f64) -> Result<f64> {
    Ok(en * x.prob(t)?)
}

pub fn stopping_dominates(t: i64, n: LawRef<'_>, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!(
            "stopping-dominated predictor needs μ > 0, got {mu}"
        )));
    }
    let k = (t as f64 / mu).floor() as i64;
    Ok(n.prob(k)? / mu)
}

pub fn predict(predictor: Predictor, t: i64, inputs: &PredictInputs<'_>) -> Result<f64> {
    match predictor {
        Predictor::SingleBigJump => single_big_jump(t, inputs.x, inputs.en),
        Predictor::StoppingDominates => stopping_dominates(t, inputs.n, inputs.mu),
        Predictor::Combined => Ok(single_big_jump(t, inputs.x, inputs.en)?
            + stopping_dominates(t, inputs.n, inputs.mu)?),
        Predictor::SubcriticalStable => {
            let p = inputs.subcritical.as_ref().ok_or_else(|| {
                Error::Precondition("subcritical predictor needs stable parameters".into())
            })?;
            predict_subcritical(t as f64, p)
        }
    }
}
