//! Mixed Poisson laws `P(Λ = s) = E[e^-λ λ^(s+r) / s!] / E[λ^r]` with
//! `λ = b Z` for a nonnegative lattice weight `Z`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_power_law, LatticePmf, PowerLawSpec, TruncationPolicy, MAX_SUPPORT};
use crate::numeric::{ln_factorial, NeumaierSum};
use crate::report::{Cell, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPoissonSpec {
    pub mixing: LatticePmf,
    pub scale: f64,
    pub tilt: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedPoisson {
    /// Values on `0..=s_max`; the rest of the mass is tail.
    pub pmf: LatticePmf,
    /// Bound on the error of each retained value caused by mixing mass
    /// beyond the mixing pmf's support.
    pub mixing_error: f64,
}

fn ln_poisson(ln_lambda: f64, lambda: f64, k: u64, ln_fact: &[f64]) -> f64 {
    -lambda + k as f64 * ln_lambda - ln_fact[k as usize]
}

/// Largest `s -> P(Poisson(λ) = s)` over `s <= s_max` when `λ >= lambda`.
fn poisson_sup(lambda: f64, s_max: u64) -> f64 {
    if lambda <= s_max as f64 {
        return 1.0;
    }
    let k = s_max as f64;
    (-lambda + k * lambda.ln() - ln_factorial(s_max)).exp()
}

pub fn mixed_poisson_pmf(spec: &MixedPoissonSpec, s_max: i64) -> Result<MixedPoisson> {
    let b = spec.scale;
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("mixing scale must be positive, got {b}")));
    }
    if s_max < 0 {
        return Err(invalid(format!("s_max must be nonnegative, got {s_max}")));
    }
    let z = &spec.mixing;
    if z.offset() < 0 || z.tail_left() > 0.0 {
        return Err(Error::Precondition("mixing weight must be nonnegative".into()));
    }
    let r = spec.tilt;
    let zr = z.moment(r)?;
    let br = b.powi(r as i32);
    let norm = (zr.value + zr.tail_bound) * br;
    if !(norm >= 1e-300) {
        return Err(Error::DegenerateLaw(format!("E[λ^{r}] = {norm:e} is below 1e-300")));
    }
    let ln_norm = norm.ln();
    let s_max = s_max as u64;
    let ln_fact: Vec<f64> = (0..=s_max).map(ln_factorial).collect();

    let mut acc = vec![NeumaierSum::new(); s_max as usize + 1];
    for (zv, p) in z.iter() {
        if p == 0.0 {
            continue;
        }
        if zv == 0 {
            if r == 0 {
                acc[0].add(p / norm);
            }
            continue;
        }
        let lambda = b * zv as f64;
        let ln_lambda = lambda.ln();
        let ln_p = p.ln() - ln_norm + r as f64 * ln_lambda;
        // Terms are unimodal in s around λ; walk out until they underflow.
        let mode = (lambda.floor() as u64).min(s_max);
        let term = |s: u64| (ln_p + ln_poisson(ln_lambda, lambda, s, &ln_fact)).exp();
        for s in mode..=s_max {
            let v = term(s);
            if v == 0.0 && s > mode {
                break;
            }
            acc[s as usize].add(v);
        }
        for s in (0..mode).rev() {
            let v = term(s);
            if v == 0.0 {
                break;
            }
            acc[s as usize].add(v);
        }
    }
    let probs: Vec<f64> = acc.iter().map(|a| a.value()).collect();
    let retained: f64 = probs.iter().copied().collect::<NeumaierSum>().value();

    let mixing_error = if z.tail_right() > 0.0 {
        let share = zr.tail_bound * br / norm;
        share * poisson_sup(b * (z.max_support() + 1) as f64, s_max)
    } else {
        0.0
    };
    let label = format!("mixed-poisson[{}; b={b}, r={r}]", z.label());
    let tail = (1.0 - retained).max(0.0);
    let pmf = LatticePmf::with_tails(0, probs, 0.0, tail, label)?;
    Ok(MixedPoisson { pmf, mixing_error })
}

/// Mixed Poisson law with the mixing weight cut from `weight`, extending
/// the cut until the mixing error is below `1e-3` of the smallest positive
/// retained value.
pub fn mixed_poisson_from_spec(
    weight: &PowerLawSpec,
    scale: f64,
    tilt: u32,
    s_max: i64,
) -> Result<MixedPoisson> {
    if !weight.is_nonnegative() {
        return Err(Error::Precondition("mixing weight must be nonnegative".into()));
    }
    let s = s_max.max(0) as f64;
    let mut z_max = ((s + 10.0 * s.sqrt() + 50.0) / scale).ceil() as i64;
    for _ in 0..12 {
        if z_max > MAX_SUPPORT as i64 {
            return Err(Error::SupportOverflow {
                len: z_max as usize,
                budget: MAX_SUPPORT,
            });
        }
        let mixing = build_power_law(weight, &TruncationPolicy::keep_tail(z_max))?;
        let spec = MixedPoissonSpec {
            mixing,
            scale,
            tilt,
        };
        let out = mixed_poisson_pmf(&spec, s_max)?;
        let smallest = out
            .pmf
            .probs()
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min);
        if out.mixing_error <= 1e-3 * smallest {
            return Ok(out);
        }
        z_max = z_max + z_max / 2 + 1;
    }
    Err(Error::ErrorBudget {
        t: s_max,
        bound: f64::NAN,
        allowance: 1e-3,
    })
}

/// Rows `(t, t^α lhs, a b^(α-1), deviation, remainder)` comparing
/// `lhs = E[e^-bZ (bZ)^t / t!]` with its power-law asymptote.
pub fn lambda_tail_check(spec: &MixedPoissonSpec, t_grid: &[i64]) -> Result<Table> {
    let weight = spec
        .mixing
        .source
        .ok_or_else(|| Error::Precondition("mixing weight is not a power law".into()))?;
    if !weight.is_nonnegative() || weight.sv.rho != 0.0 {
        return Err(Error::Precondition(
            "mixing weight must be a one-sided power law with constant slowly varying part".into(),
        ));
    }
    if spec.tilt != 0 {
        return Err(Error::Precondition("the tail check is for the untilted law".into()));
    }
    let b = spec.scale;
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("mixing scale must be positive, got {b}")));
    }
    let alpha = weight.alpha;
    let a = weight.right_constant();
    let target = a * b.powf(alpha - 1.0);
    let mut table = Table::new(["t", "scaled", "target", "deviation", "remainder"]);
    for &t in t_grid {
        if t < 0 {
            return Err(invalid(format!("t must be nonnegative, got {t}")));
        }
        let tf = t as f64;
        let z_end = ((tf + 40.0 * tf.sqrt() + 100.0) / b).ceil() as i64;
        let ln_t_fact = ln_factorial(t as u64);
        let mut lhs = NeumaierSum::new();
        for z in 1..=z_end {
            let lambda = b * z as f64;
            let v = (-lambda + tf * lambda.ln() - ln_t_fact).exp() * weight.prob(z);
            lhs.add(v);
        }
        let remainder = weight.tail_right(z_end) * poisson_sup(b * (z_end + 1) as f64, t as u64);
        let scaled = lhs.value() * tf.powf(alpha);
        table.push(vec![
            Cell::Int(t),
            Cell::Real(scaled),
            Cell::Real(target),
            Cell::Real((scaled / target - 1.0).abs()),
            Cell::Real(remainder * tf.powf(alpha)),
        ]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(mixing: LatticePmf, scale: f64, tilt: u32) -> MixedPoissonSpec {
        MixedPoissonSpec {
            mixing,
            scale,
            tilt,
        }
    }

    #[test]
    fn degenerate_mixing_is_poisson() {
        let out = mixed_poisson_pmf(&spec(LatticePmf::point_mass(1), 1.0, 0), 40).unwrap();
        assert!((out.pmf.prob(0) - (-1f64).exp()).abs() < 1e-15);
        assert!((out.pmf.total_mass() - 1.0).abs() < 1e-9);
        assert_eq!(out.mixing_error, 0.0);
    }

    #[test]
    fn tilt_cancels_for_constant_weight() {
        let out = mixed_poisson_pmf(&spec(LatticePmf::point_mass(1), 1.0, 1), 40).unwrap();
        let mut fact = 1.0;
        for s in 0..10i64 {
            if s > 0 {
                fact *= s as f64;
            }
            assert!((out.pmf.prob(s) - (-1f64).exp() / fact).abs() < 1e-15);
        }
        let sum: f64 = out.pmf.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_mixing_matches_hand_mixture() {
        let out = mixed_poisson_pmf(&spec(LatticePmf::uniform(1, 2).unwrap(), 1.0, 1), 60).unwrap();
        let want = ((-1f64).exp() + 2.0 * (-2f64).exp()) / 3.0;
        assert!((out.pmf.prob(0) - want).abs() < 1e-15);
        assert!((want - 0.212850).abs() < 1e-6);
    }

    #[test]
    fn zero_weight_mass_sits_at_zero() {
        let mix = LatticePmf::new(0, vec![0.25, 0.75], "z").unwrap();
        let out = mixed_poisson_pmf(&spec(mix.clone(), 2.0, 0), 40).unwrap();
        assert!((out.pmf.prob(0) - (0.25 + 0.75 * (-2f64).exp())).abs() < 1e-15);
        // Tilting removes the atom at zero.
        let tilted = mixed_poisson_pmf(&spec(mix, 2.0, 1), 40).unwrap();
        assert!((tilted.pmf.prob(0) - (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn vanishing_normalizer_is_rejected() {
        let err = mixed_poisson_pmf(&spec(LatticePmf::point_mass(0), 1.0, 1), 5).unwrap_err();
        assert!(matches!(err, Error::DegenerateLaw(_)));
    }

    #[test]
    fn tail_check_trends_and_scales() {
        let w = PowerLawSpec::one_sided(3.0);
        let mixing = build_power_law(&w, &TruncationPolicy::keep_tail(16)).unwrap();
        let t = lambda_tail_check(&spec(mixing.clone(), 1.0, 0), &[64, 4096]).unwrap();
        let dev = t.column("deviation").unwrap();
        assert!(dev[1] < dev[0], "{dev:?}");
        let t2 = lambda_tail_check(&spec(mixing, 2.0, 0), &[64]).unwrap();
        let ratio = t2.column("target").unwrap()[0] / t.column("target").unwrap()[0];
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tail_check_rejects_degenerate_mixing() {
        let err = lambda_tail_check(&spec(LatticePmf::point_mass(1), 1.0, 0), &[8]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn tail_exponent_of_tilted_law() {
        // P(Λ^(r) = t) ~ t^-(α - r).
        let w = PowerLawSpec::one_sided(8.0);
        let out = mixed_poisson_from_spec(&w, 1.0, 2, 4096).unwrap();
        let pts: Vec<(f64, f64)> = [256i64, 512, 1024, 2048, 4096]
            .iter()
            .map(|&t| (t as f64, out.pmf.prob(t)))
            .collect();
        let slope = crate::numeric::log_log_slope(&pts).unwrap();
        assert!((slope + 6.0).abs() < 0.15, "{slope}");
    }

    proptest! {
        #[test]
        fn size_bias_identity(p in 0.01f64..0.99, z1 in 0i64..6, dz in 1i64..6, b in 0.1f64..3.0) {
            let mut probs = vec![0.0; (dz + 1) as usize];
            probs[0] = p;
            probs[dz as usize] = 1.0 - p;
            let mix = LatticePmf::new(z1, probs, "two-point").unwrap();
            let plain = mixed_poisson_pmf(&spec(mix.clone(), b, 0), 30).unwrap();
            let tilted = mixed_poisson_pmf(&spec(mix, b, 1), 30).unwrap();
            let l1 = b * z1 as f64;
            let l2 = b * (z1 + dz) as f64;
            let mean = p * l1 + (1.0 - p) * l2;
            for s in 0..15i64 {
                // λ P(Poisson(λ) = s) = (s + 1) P(Poisson(λ) = s + 1).
                let via_plain = (s + 1) as f64 * plain.pmf.prob(s + 1) / mean;
                prop_assert!((tilted.pmf.prob(s) - via_plain).abs() < 1e-12);
                let pois = |l: f64| if l == 0.0 { 0.0 } else {
                    (-l + (s + 1) as f64 * l.ln() - ln_factorial(s as u64)).exp()
                };
                let direct = (p * pois(l1) + (1.0 - p) * pois(l2)) / mean;
                prop_assert!((tilted.pmf.prob(s) - direct).abs() < 1e-12);
            }
            prop_assert!((tilted.pmf.total_mass() - 1.0).abs() < 1e-9);
        }
    }
}
