//! Degree laws `d*^(r)`, the probabilities `p1(k)`, `p2(k)` and the limit
//! clustering function `C*(k)` of a power-law random intersection graph.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticePmf, PowerLawSpec};
use crate::numeric::log_log_slope;
use crate::report::{Cell, Table};
use crate::stopsum::{stopped_sum_pmf, Cutoff, CutoffPolicy};

use super::mixed::{mixed_poisson_from_spec, MixedPoisson};

/// Absolute tolerance for cutting the series over the number of
/// attributes of an actor.
const DEGREE_CUTOFF_TOL: f64 = 1e-40;

/// `a_i = E X^i` (attribute weights) and `b_i = E Y^i` (actor weights).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightMoments {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Law of the attribute weight `X` (exponent α).
    pub attr: PowerLawSpec,
    /// Law of the actor weight `Y` (exponent γ).
    pub actor: PowerLawSpec,
    /// Limit of `m / n`.
    pub beta: f64,
    pub moments: WeightMoments,
}

impl ClusterParams {
    pub fn new(attr: PowerLawSpec, actor: PowerLawSpec, beta: f64) -> Result<Self> {
        attr.validate()?;
        actor.validate()?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {beta}")));
        }
        if !attr.is_nonnegative() || !actor.is_nonnegative() {
            return Err(invalid("weights must be nonnegative"));
        }
        let moments = WeightMoments {
            a1: attr.raw_moment(1)?,
            a2: attr.raw_moment(2)?,
            a3: attr.raw_moment(3)?,
            b1: actor.raw_moment(1)?,
            b2: actor.raw_moment(2)?,
        };
        Ok(Self {
            attr,
            actor,
            beta,
            moments,
        })
    }

    /// Unit-scale one-sided laws with exponents `alpha` and `gamma`.
    pub fn unit(alpha: f64, gamma: f64, beta: f64) -> Result<Self> {
        Self::new(PowerLawSpec::one_sided(alpha), PowerLawSpec::one_sided(gamma), beta)
    }

    pub fn with_moments(mut self, moments: WeightMoments) -> Self {
        self.moments = moments;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.attr.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.actor.alpha
    }

    /// Non-fatal notes on parameters outside the range the limit is known for.
    pub fn warnings(&self) -> Vec<String> {
        delta_exponent(self.alpha(), self.gamma()).warning.into_iter().collect()
    }

    /// `λ0 = Y √β a1`.
    pub fn lambda0_scale(&self) -> f64 {
        self.beta.sqrt() * self.moments.a1
    }

    /// `λ1 = X b1 / √β`.
    pub fn lambda1_scale(&self) -> f64 {
        self.moments.b1 / self.beta.sqrt()
    }

    /// `√β a2² b2 / (a3 b1)`.
    pub fn prefactor(&self) -> f64 {
        let m = &self.moments;
        self.beta.sqrt() * m.a2 * m.a2 * m.b2 / (m.a3 * m.b1)
    }
}

/// `Λ0^(r)`: mixed Poisson with mixing `λ0`.
pub fn lambda0(params: &ClusterParams, r: u32, s_max: i64) -> Result<MixedPoisson> {
    mixed_poisson_from_spec(&params.actor, params.lambda0_scale(), r, s_max)
}

/// `Λ1^(r)`: mixed Poisson with mixing `λ1`.
pub fn lambda1(params: &ClusterParams, r: u32, s_max: i64) -> Result<MixedPoisson> {
    mixed_poisson_from_spec(&params.attr, params.lambda1_scale(), r, s_max)
}

/// Law on `0..=t_max` with a uniform bound on the error of each value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLaw {
    pub pmf: LatticePmf,
    pub error: f64,
}

impl ComponentLaw {
    fn from_mixed(m: MixedPoisson) -> Self {
        Self {
            pmf: m.pmf,
            error: m.mixing_error,
        }
    }

    /// `self * other` on `0..=t_max`.
    fn convolve(&self, other: &Self, t_max: i64) -> Result<Self> {
        let pmf = self.pmf.convolve_window(&other.pmf, t_max)?;
        // |Δ(A*B)(t)| <= Σ_s |ΔA(s)| B(t-s) + A(s) |ΔB(t-s)| + |ΔA||ΔB|.
        let n = (t_max + 1) as f64;
        let error = self.error + other.error + n * self.error * other.error;
        Ok(Self { pmf, error })
    }
}

/// `d*^(r)`: sum of `Λ0^(r)` independent copies of `Λ1^(1)`.
pub fn d_star_pmf(r: u32, params: &ClusterParams, t_max: i64) -> Result<ComponentLaw> {
    if r > 2 {
        return Err(invalid(format!("r must be 0, 1 or 2, got {r}")));
    }
    if t_max < 0 {
        return Err(invalid(format!("t_max must be nonnegative, got {t_max}")));
    }
    let tau = lambda1(params, 1, t_max)?;
    // Lengthen the count law until the cut-off rule can be met.
    let mut s_max = 2 * t_max + 64;
    let mut attempts = 0;
    loop {
        let count = lambda0(params, r, s_max)?;
        match stopped_degree(&tau, &count, t_max) {
            Ok(mut d) => {
                d.pmf.set_label(format!("d*({r})"));
                return Ok(d);
            }
            Err(Error::Precondition(_)) if attempts < 8 => {
                s_max *= 2;
                attempts += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Sum of `count` independent copies of `tau`, on `0..=t_max`.
pub fn stopped_degree(tau: &MixedPoisson, count: &MixedPoisson, t_max: i64) -> Result<ComponentLaw> {
    let policy = CutoffPolicy {
        cutoff: Cutoff::Auto {
            tol: DEGREE_CUTOFF_TOL,
        },
        window: Some(t_max),
    };
    let s = stopped_sum_pmf(&tau.pmf, &count.pmf, &policy)?;
    let local = (0..=t_max).map(|t| s.local_error(t)).fold(0.0, f64::max);
    // Perturbing the summand law by ε per point moves P(S_n = t) by at most
    // n (t_max + 1) ε; perturbing P(N = n) by ε' moves the sum by ε' each.
    let en: f64 = (0..=s.n_cutoff).map(|k| k as f64 * count.pmf.prob(k)).sum();
    let mixing =
        en * (t_max + 1) as f64 * tau.mixing_error + (s.n_cutoff + 1) as f64 * count.mixing_error;
    Ok(ComponentLaw {
        pmf: s.pmf,
        error: local + mixing,
    })
}

/// `C*(k) = (1 + c p1 / p2)^-1` with `c` the moment prefactor.
pub fn c_star_from(k: i64, p1: f64, p2: f64, prefactor: f64) -> Result<f64> {
    if p2 <= 0.0 {
        return Err(Error::UndefinedPoint(k));
    }
    Ok(1.0 / (1.0 + prefactor * p1 / p2))
}

/// Component laws shared by every `k <= t_max + 2`.
#[derive(Debug, Clone)]
pub struct ClusterPipeline {
    pub params: ClusterParams,
    pub t_max: i64,
    /// Law of `d*^(2) + Λ1^(2) + Λ̄1^(2)`.
    pub first: ComponentLaw,
    /// Law of `d*^(1) + Λ1^(3)`.
    pub second: ComponentLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPoint {
    pub k: i64,
    pub p1: f64,
    pub p2: f64,
    pub c_star: f64,
}

impl ClusterPipeline {
    pub fn new(params: ClusterParams, t_max: i64) -> Result<Self> {
        let d1 = d_star_pmf(1, &params, t_max)?;
        let d2 = d_star_pmf(2, &params, t_max)?;
        let l2 = ComponentLaw::from_mixed(lambda1(&params, 2, t_max)?);
        let l3 = ComponentLaw::from_mixed(lambda1(&params, 3, t_max)?);
        let first = d2.convolve(&l2, t_max)?.convolve(&l2, t_max)?;
        let second = d1.convolve(&l3, t_max)?;
        Ok(Self {
            params,
            t_max,
            first,
            second,
        })
    }

    /// Pipeline covering `k <= k_max`.
    pub fn up_to(params: ClusterParams, k_max: i64) -> Result<Self> {
        if k_max < 2 {
            return Err(invalid(format!("k must be at least 2, got {k_max}")));
        }
        Self::new(params, k_max - 2)
    }

    fn index(&self, k: i64) -> Result<i64> {
        if k < 2 {
            return Err(invalid(format!("k must be at least 2, got {k}")));
        }
        if k - 2 > self.t_max {
            return Err(invalid(format!("k = {k} exceeds the pipeline range {}", self.t_max + 2)));
        }
        Ok(k - 2)
    }

    pub fn p1_p2(&self, k: i64) -> Result<(f64, f64)> {
        let t = self.index(k)?;
        Ok((self.first.pmf.prob(t), self.second.pmf.prob(t)))
    }

    /// Error bounds on `(p1(k), p2(k))`.
    pub fn errors(&self) -> (f64, f64) {
        (self.first.error, self.second.error)
    }

    pub fn c_star(&self, k: i64) -> Result<f64> {
        let (p1, p2) = self.p1_p2(k)?;
        c_star_from(k, p1, p2, self.params.prefactor())
    }

    pub fn point(&self, k: i64) -> Result<ClusterPoint> {
        let (p1, p2) = self.p1_p2(k)?;
        Ok(ClusterPoint {
            k,
            p1,
            p2,
            c_star: c_star_from(k, p1, p2, self.params.prefactor())?,
        })
    }

    /// CSV-ready table `(k, p1, p2, c_star)`.
    pub fn curve(&self, ks: &[i64]) -> Result<Table> {
        let mut table = Table::new(["k", "p1", "p2", "c_star"]);
        for &k in ks {
            let p = self.point(k)?;
            table.push(vec![Cell::Int(k), Cell::Real(p.p1), Cell::Real(p.p2), Cell::Real(p.c_star)]);
        }
        Ok(table)
    }

    /// Least-squares slope of `ln C*(k)` on `ln k` over dyadic `k` in
    /// `[lo, hi]`.
    pub fn c_star_slope(&self, lo: i64, hi: i64) -> Result<f64> {
        let pts = dyadic(lo, hi)
            .into_iter()
            .map(|k| Ok((k as f64, self.c_star(k)?)))
            .collect::<Result<Vec<_>>>()?;
        log_log_slope(&pts).ok_or_else(|| Error::Empty("fewer than two usable points".into()))
    }

    /// Slope of `ln(p1/p2)` on `ln k` over dyadic `k` in `[lo, hi]`.
    pub fn ratio_slope(&self, lo: i64, hi: i64) -> Result<f64> {
        let pts = dyadic(lo, hi)
            .into_iter()
            .map(|k| {
                let (p1, p2) = self.p1_p2(k)?;
                Ok((k as f64, p1 / p2))
            })
            .collect::<Result<Vec<_>>>()?;
        log_log_slope(&pts).ok_or_else(|| Error::Empty("fewer than two usable points".into()))
    }
}

/// Powers of two in `[lo, hi]`.
pub fn dyadic(lo: i64, hi: i64) -> Vec<i64> {
    (0..63)
        .map(|e| 1i64 << e)
        .filter(|&k| k >= lo && k <= hi)
        .collect()
}

pub fn p1_p2(k: i64, params: &ClusterParams, t_max: i64) -> Result<(f64, f64)> {
    ClusterPipeline::new(*params, t_max)?.p1_p2(k)
}

pub fn c_star(k: i64, params: &ClusterParams, t_max: i64) -> Result<f64> {
    ClusterPipeline::new(*params, t_max)?.c_star(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaExponent {
    pub value: f64,
    pub warning: Option<String>,
}

/// `δ = max{0, min{α - γ - 1, 1}}` in `C*(k) ~ c k^-δ`.
pub fn delta_exponent(alpha: f64, gamma: f64) -> DeltaExponent {
    let warning = (!(alpha > 6.0 && gamma > 6.0))
        .then(|| format!("the k^-δ law is established for α, γ > 6; got α = {alpha}, γ = {gamma}"));
    DeltaExponent {
        value: (alpha - gamma - 1.0).clamp(0.0, 1.0),
        warning,
    }
}

/// Exponent `κ` in `p1(k) / p2(k) ~ c k^κ`.
pub fn kappa_exponent(alpha: f64, gamma: f64) -> f64 {
    if alpha <= gamma {
        -1.0
    } else if alpha < gamma + 2.0 {
        alpha - gamma - 1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{mixed_poisson_pmf, MixedPoissonSpec};
    use proptest::prelude::*;

    #[test]
    fn delta_examples() {
        assert_eq!(delta_exponent(8.0, 6.5).value, 0.5);
        assert_eq!(delta_exponent(6.5, 8.0).value, 0.0);
        assert_eq!(delta_exponent(9.1, 6.1).value, 1.0);
        assert!(delta_exponent(8.0, 6.5).warning.is_none());
        let w = delta_exponent(5.0, 3.0);
        assert_eq!(w.value, 1.0);
        assert!(w.warning.is_some());
    }

    #[test]
    fn kappa_branches() {
        assert_eq!(kappa_exponent(6.5, 8.0), -1.0);
        assert_eq!(kappa_exponent(8.0, 6.5), 0.5);
        assert_eq!(kappa_exponent(9.0, 6.5), 1.0);
    }

    #[test]
    fn c_star_formula_limits() {
        assert_eq!(c_star_from(5, 0.0, 0.3, 2.0).unwrap(), 1.0);
        assert_eq!(c_star_from(5, 0.1, 0.0, 2.0).unwrap_err(), Error::UndefinedPoint(5));
        let small = c_star_from(5, 0.2, 0.1, 1e-12).unwrap();
        assert!((small - 1.0).abs() < 1e-11);
    }

    #[test]
    fn unit_moments_are_zeta_ratios() {
        let p = ClusterParams::unit(8.0, 6.5, 1.0).unwrap();
        // a1 = ζ(7)/ζ(8).
        assert!((p.moments.a1 - 1.008_349_277_381_922_8 / 1.004_077_356_197_944_3).abs() < 1e-12);
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn d_star_with_count_at_zero_is_zero() {
        let p = ClusterParams::unit(8.0, 6.5, 1.0).unwrap();
        let tau = lambda1(&p, 1, 16).unwrap();
        let count = mixed_poisson_pmf(
            &MixedPoissonSpec {
                mixing: LatticePmf::point_mass(0),
                scale: 1.0,
                tilt: 0,
            },
            16,
        )
        .unwrap();
        let d = stopped_degree(&tau, &count, 16).unwrap();
        assert_eq!(d.pmf.prob(0), 1.0);
        assert_eq!(d.pmf.len(), 1);
    }

    #[test]
    fn k_two_is_product_at_zero() {
        let p = ClusterParams::unit(8.0, 6.5, 1.0).unwrap();
        let pipe = ClusterPipeline::new(p, 8).unwrap();
        let d1 = d_star_pmf(1, &p, 8).unwrap();
        let l3 = lambda1(&p, 3, 8).unwrap();
        let (_, p2) = pipe.p1_p2(2).unwrap();
        assert!((p2 - d1.pmf.prob(0) * l3.pmf.prob(0)).abs() < 1e-15);
        assert!(pipe.p1_p2(1).is_err());
        assert!(pipe.p1_p2(11).is_err());
    }

    #[test]
    fn convolution_matches_double_sum_at_five() {
        let p = ClusterParams::unit(8.0, 6.5, 1.0).unwrap();
        let pipe = ClusterPipeline::new(p, 8).unwrap();
        let d2 = d_star_pmf(2, &p, 8).unwrap().pmf;
        let l2 = lambda1(&p, 2, 8).unwrap().pmf;
        let d1 = d_star_pmf(1, &p, 8).unwrap().pmf;
        let l3 = lambda1(&p, 3, 8).unwrap().pmf;
        let t = 3i64;
        let mut p1 = 0.0;
        for i in 0..=t {
            for j in 0..=t - i {
                p1 += d2.prob(i) * l2.prob(j) * l2.prob(t - i - j);
            }
        }
        let p2: f64 = (0..=t).map(|i| d1.prob(i) * l3.prob(t - i)).sum();
        let (c1, c2) = pipe.p1_p2(5).unwrap();
        assert!((c1 - p1).abs() < 1e-14 * p1.max(1e-300) + 1e-17, "{c1} vs {p1}");
        assert!((c2 - p2).abs() < 1e-14 * p2.max(1e-300) + 1e-17, "{c2} vs {p2}");
        let (e1, e2) = pipe.errors();
        assert!(e1 < 1e-20 && e2 < 1e-20, "{e1} {e2}");
    }

    #[test]
    fn d_star_conserves_mass() {
        let p = ClusterParams::unit(8.0, 6.5, 1.0).unwrap();
        for r in 0..3 {
            let d = d_star_pmf(r, &p, 64).unwrap();
            assert!((d.pmf.total_mass() - 1.0).abs() < 1e-9);
        }
        assert!(d_star_pmf(3, &p, 64).is_err());
    }

    #[test]
    fn vanishing_beta_sends_c_star_to_one() {
        let p = ClusterParams::unit(8.0, 6.5, 1e-16).unwrap();
        assert!((c_star_from(4, 0.3, 0.2, p.prefactor()).unwrap() - 1.0).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn c_star_is_scale_free(p1 in 0.0f64..1.0, p2 in 1e-6f64..1.0, s in 1e-3f64..1e3, c in 0.0f64..10.0) {
            let a = c_star_from(3, p1, p2, c).unwrap();
            let b = c_star_from(3, p1 * s, p2 * s, c).unwrap();
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
