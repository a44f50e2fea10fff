//! Regime selection, first-order predictors and stable limit laws.

mod predict;
mod regime;
mod stable;

pub use predict::{
    predict, predict_subcritical, single_big_jump, stopping_dominates, subcritical_with_constant,
    LawRef, PredictInputs, ScaleConvention, SubcriticalParams,
};
pub use regime::{select_regime, Flag, MuSign, Predictor, RegimeInput, RegimeReport, RegimeRow};
pub use stable::{density_mass, normal_density, stable_cf, StableLaw, INVERSION_RANGE};
