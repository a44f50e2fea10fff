//! Window sums `Σ_{|nμ - t| ≤ u} P(S_n = t)` and renewal sums
//! `Σ_{n ≥ 1} P(S_n = t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticePmf;
use crate::numeric::NeumaierSum;

/// Renewal sums stop once `nμ > t + STOP_SPREAD · σ√n` and the last
/// `STOP_RUN` increments were all below `STOP_INCREMENT`.
const STOP_SPREAD: f64 = 20.0;
const STOP_RUN: usize = 50;
const STOP_INCREMENT: f64 = 1e-14;

/// Successive laws of `S_n`, restricted to `[.., t]` when the summands
/// are nonnegative (exact there) and kept whole otherwise.
struct PartialSums<'a> {
    x: &'a LatticePmf,
    hi: Option<i64>,
    current: LatticePmf,
    n: u64,
}

impl<'a> PartialSums<'a> {
    fn start(x: &'a LatticePmf, t: i64, n: u64) -> Result<Self> {
        let nonneg = x.min_support() >= 0 && x.tail_left() == 0.0;
        let hi = nonneg.then_some(t.max(0));
        let current = match hi {
            Some(h) => x.self_convolve_window(n, h)?,
            None => x.self_convolve(n)?,
        };
        Ok(Self { x, hi, current, n })
    }

    fn advance(&mut self) -> Result<()> {
        self.current = match self.hi {
            Some(h) => self.current.convolve_window(self.x, h)?,
            None => self.current.convolve(self.x)?,
        };
        self.n += 1;
        Ok(())
    }
}

fn positive_mean(x: &LatticePmf) -> Result<f64> {
    let mu = x.mean()?;
    if !(mu > 0.0) {
        return Err(Error::Precondition(format!("mean {mu} is not positive")));
    }
    Ok(mu)
}

fn check_exact_at(x: &LatticePmf, t: i64) -> Result<()> {
    let nonneg = x.min_support() >= 0 && x.tail_left() == 0.0;
    if x.tail_mass() > 0.0 && !(nonneg && t <= x.max_support()) {
        return Err(Error::ErrorBudget {
            t,
            bound: x.tail_mass(),
            allowance: 0.0,
        });
    }
    Ok(())
}

/// `Σ_{n ≥ 1, |nμ - t| ≤ u} P(S_n = t)`.
pub fn window_sum(x: &LatticePmf, t: i64, u: f64) -> Result<f64> {
    let mu = positive_mean(x)?;
    check_exact_at(x, t)?;
    let lo = (((t as f64 - u) / mu).ceil() as i64).max(1);
    let hi = ((t as f64 + u) / mu).floor() as i64;
    if lo > hi {
        return Err(Error::Empty(format!("no n with |nμ - {t}| <= {u}")));
    }
    let mut sums = PartialSums::start(x, t, lo as u64)?;
    let mut acc = NeumaierSum::new();
    loop {
        acc.add(sums.current.prob(t));
        if sums.n as i64 >= hi {
            break;
        }
        sums.advance()?;
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalReport {
    pub t: i64,
    pub value: f64,
    /// Number of `n` summed.
    pub terms: u64,
    /// Upper bound on the omitted terms.
    pub remainder_bound: f64,
}

/// Chernoff bound on `Σ_{m > n} P(S_m = t) ≤ Σ_{m > n} P(S_m ≤ t)`.
fn chernoff_remainder(x: &LatticePmf, t: i64, n: u64) -> f64 {
    if x.tail_left() > 0.0 {
        return f64::INFINITY;
    }
    let beyond = (x.max_support() + 1) as f64;
    (0..400)
        .map(|i| 1e-6 * 1.05f64.powi(i))
        .filter_map(|theta| {
            let mut phi = NeumaierSum::new();
            for (k, p) in x.iter() {
                phi.add(p * (-theta * k as f64).exp());
            }
            phi.add(x.tail_right() * (-theta * beyond).exp());
            let phi = phi.value();
            (phi < 1.0).then(|| {
                let log = theta * t as f64 + (n + 1) as f64 * phi.ln() - (1.0 - phi).ln();
                log.exp()
            })
        })
        .fold(f64::INFINITY, f64::min)
}

/// `Σ_{n ≥ 1} P(S_n = t)`, summed until the terms are provably or
/// numerically exhausted (or `n_max`), with a bound on what was left out.
pub fn renewal_sum(x: &LatticePmf, t: i64, n_max: Option<u64>) -> Result<RenewalReport> {
    match x.span() {
        1 => {}
        0 => return Err(Error::DegenerateLaw(format!("{} is a point mass", x.label()))),
        span => return Err(Error::LatticeSpan { span }),
    }
    let mu = positive_mean(x)?;
    check_exact_at(x, t)?;
    let (_, var) = x.window_mean_var();
    let sd = var.max(0.0).sqrt();
    let min = x.min_support();
    // With summands >= 1, S_n >= n > t ends the series exactly.
    let exact_end = (min >= 1 && x.tail_left() == 0.0).then_some(t.max(0) as u64);

    let mut sums = PartialSums::start(x, t, 1)?;
    let mut acc = NeumaierSum::new();
    let mut small_run = 0usize;
    loop {
        let n = sums.n;
        let p = sums.current.prob(t);
        acc.add(p);
        if exact_end.is_some_and(|e| n >= e) {
            return Ok(RenewalReport {
                t,
                value: acc.value(),
                terms: n,
                remainder_bound: 0.0,
            });
        }
        small_run = if p < STOP_INCREMENT { small_run + 1 } else { 0 };
        let past = n as f64 * mu > t as f64 + STOP_SPREAD * sd * (n as f64).sqrt();
        if (past && small_run >= STOP_RUN) || n_max == Some(n) {
            return Ok(RenewalReport {
                t,
                value: acc.value(),
                terms: n,
                remainder_bound: chernoff_remainder(x, t, n),
            });
        }
        sums.advance()?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_power_law, norming_b, Law, PowerLawSpec, TruncationPolicy};
    use proptest::prelude::*;

    #[test]
    fn unit_steps_hit_every_point_once() {
        let x = LatticePmf::point_mass(1);
        assert_eq!(window_sum(&x, 17, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn span_two_misses_odd_points() {
        let x = LatticePmf::point_mass(2);
        assert_eq!(window_sum(&x, 17, 3.0).unwrap(), 0.0);
        assert_eq!(renewal_sum(&x, 17, None).unwrap_err(), Error::DegenerateLaw("point-mass(2) is a point mass".into()));
        let y = LatticePmf::new(0, vec![0.5, 0.0, 0.5], "even").unwrap();
        assert_eq!(renewal_sum(&y, 17, None).unwrap_err(), Error::LatticeSpan { span: 2 });
    }

    #[test]
    fn renewal_uniform_one_two() {
        let x = LatticePmf::uniform(1, 2).unwrap();
        // Closed form: u_t = 2/3 + (1/3)(-1/2)^t.
        for t in [1i64, 2, 3, 10, 20] {
            let r = renewal_sum(&x, t, None).unwrap();
            let want = 2.0 / 3.0 + (-0.5f64).powi(t as i32) / 3.0;
            assert!((r.value - want).abs() < 1e-15, "t={t}");
            assert_eq!(r.remainder_bound, 0.0);
        }
        assert_eq!(renewal_sum(&x, 0, None).unwrap().value, 0.0);
    }

    #[test]
    fn renewal_with_zero_mass_uses_chernoff_tail() {
        let x = LatticePmf::new(0, vec![0.5, 0.25, 0.25], "x").unwrap();
        let r = renewal_sum(&x, 30, None).unwrap();
        assert!(r.remainder_bound < 1e-6, "{r:?}");
        assert!((r.value - 1.0 / 0.75).abs() < 1e-6);
    }

    #[test]
    fn window_sum_power_law_tends_to_inverse_mean() {
        let spec = PowerLawSpec::one_sided(4.0);
        let mu = spec.mean().unwrap();
        let mut devs = Vec::new();
        for t in [100i64, 1000] {
            let x = build_power_law(&spec, &TruncationPolicy::keep_tail(t)).unwrap();
            let u = norming_b(&Law::PowerLaw(spec), t as f64).unwrap() * (t as f64).ln();
            devs.push((window_sum(&x, t, u).unwrap() - 1.0 / mu).abs());
        }
        assert!(devs[1] < devs[0], "{devs:?}");
    }

    proptest! {
        #[test]
        fn window_monotone_and_below_renewal(
            w in prop::collection::vec(0.01f64..1.0, 2..5),
            t in 1i64..40,
            u1 in 0.0f64..10.0,
            du in 0.0f64..10.0,
        ) {
            let s: f64 = w.iter().sum();
            let x = LatticePmf::new(1, w.iter().map(|v| v / s).collect(), "x").unwrap();
            let mu = x.mean().unwrap();
            let total = renewal_sum(&x, t, None).unwrap().value;
            let a = window_sum(&x, t, u1.max(mu));
            let b = window_sum(&x, t, u1.max(mu) + du);
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!(a <= b + 1e-15);
                prop_assert!(b <= total + 1e-12);
            }
        }
    }
}
