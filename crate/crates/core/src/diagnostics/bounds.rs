//! The decomposition inequality, large-deviation bounds for sums with
//! small summands, and the two-term approximation for `α > 3`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_power_law, LatticePmf, Law, PowerLawSpec, Side, TruncationPolicy};
use crate::numeric::{integrate, integrate_to_infinity, NeumaierSum};
use crate::rng::{domain, run_blocks, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Exact,
    MonteCarlo { samples: u64, half_width: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs_without_constant: f64,
    pub ratio: f64,
    pub method: Method,
    /// Intermediate quantities of the bound, by name.
    pub quantities: BTreeMap<String, f64>,
    pub degenerate: bool,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, method: Method) -> Self {
        Self {
            lhs,
            rhs_without_constant: rhs,
            ratio: lhs / rhs,
            method,
            quantities: BTreeMap::new(),
            degenerate: false,
        }
    }

    fn with(mut self, name: &str, v: f64) -> Self {
        self.quantities.insert(name.to_string(), v);
        self
    }
}

fn mass_at_least(p: &LatticePmf, from: i64) -> f64 {
    let mut acc = NeumaierSum::new();
    for (s, v) in p.iter() {
        if s >= from {
            acc.add(v);
        }
    }
    acc.value()
}

/// Both sides of
/// `P(S_n = t) ≤ n max_{i ≥ δt} P(X = i) + Q⁽¹⁾ L⁽²⁾(t, δ) + Q⁽²⁾ L⁽¹⁾(t, δ)`,
/// where the halves `S⁽¹⁾, S⁽²⁾` hold `⌊n/2⌋` and `n - ⌊n/2⌋` summands,
/// `Q⁽ᵏ⁾ = sup_i P(S⁽ᵏ⁾ = i)` and `L⁽ᵏ⁾ = P(S⁽ᵏ⁾ ≥ t/2, M⁽ᵏ⁾ < δt)`.
pub fn decomposition_bound(x: &LatticePmf, n: u64, t: i64, delta: f64) -> Result<BoundReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("δ = {delta} outside (0, 1)")));
    }
    if n < 2 || t < 2 {
        return Err(invalid("n and t must be at least 2"));
    }
    if x.tail_mass() > 0.0 {
        return Err(Error::Precondition(
            "exact bound needs a law without truncated tail mass".into(),
        ));
    }
    let dt = delta * t as f64;
    let big = dt.ceil() as i64;
    let half = (t as f64 / 2.0).ceil() as i64;
    let n1 = n / 2;
    let n2 = n - n1;

    let lhs = x.self_convolve(n)?.prob(t);
    let max_big = x.iter().filter(|(i, _)| *i >= big).map(|(_, p)| p).fold(0.0, f64::max);
    let jump = n as f64 * max_big;

    let small = x.restrict_below(big);
    let small_all = small.self_convolve(n)?.prob(t);
    let q = |k: u64| -> Result<f64> { Ok(x.self_convolve(k)?.max_prob()) };
    let l = |k: u64| -> Result<f64> { Ok(mass_at_least(&small.self_convolve(k)?, half)) };
    let (q1, q2) = (q(n1)?, q(n2)?);
    let (l1, l2) = (l(n1)?, l(n2)?);
    let split = q1 * l2 + q2 * l1;
    Ok(BoundReport::new(lhs, jump + split, Method::Exact)
        .with("jump_term", jump)
        .with("q1", q1)
        .with("q2", q2)
        .with("l1", l1)
        .with("l2", l2)
        .with("p_small_max", small_all)
        .with("split_term", split))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LargeDevVariant {
    /// `1 < α < 2`.
    I,
    /// `α = 2` under the `L_Δ` condition.
    Ii,
    /// `2 ≤ α < 3`, centred summands.
    Iii,
    /// `α = 3`, centred summands under the `V, W` condition.
    Iv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargeDevOptions {
    /// Largest admissible `x/y`.
    pub r: f64,
    /// `β` in the `α = 2` condition.
    pub beta: f64,
    /// `η` bounding the variant conditions.
    pub eta: f64,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    /// Cut-off of the law sampled by Monte Carlo.
    pub t_max: i64,
}

impl Default for LargeDevOptions {
    fn default() -> Self {
        Self {
            r: 10.0,
            beta: 0.5,
            eta: 1.0,
            samples: 1_000_000,
            seed: 0,
            workers: 1,
            t_max: 1 << 20,
        }
    }
}

/// Largest exact convolution `n · y` attempted before falling back to
/// Monte Carlo.
const EXACT_WORK: f64 = 1e8;
const MC_BLOCK: u64 = 1 << 14;

/// `L_Δ(y) = ∫₀^y P(X ≥ u) du / (y P(X ≥ y))`.
pub fn l_delta(spec: &PowerLawSpec, y: f64) -> f64 {
    let fl = y.floor() as i64;
    let mut acc = NeumaierSum::new();
    for k in 1..=fl {
        acc.add(spec.tail_right(k - 1));
    }
    acc.add((y - fl as f64) * spec.tail_right(fl));
    acc.value() / (y * spec.tail_right(y.ceil() as i64 - 1))
}

/// `c_* = sup_{t ≥ 1} P(X ≥ t) / (t^{1-α} L₁(t))` over a dense grid.
pub fn tail_constant(spec: &PowerLawSpec) -> f64 {
    let ratio = |t: i64| {
        let tf = t as f64;
        spec.tail_right(t - 1) / (tf.powf(1.0 - spec.alpha) * spec.right_slowly_varying(tf))
    };
    let small = (1..=1000).map(ratio);
    let large = (0..200).map(|i| ratio((1000.0 * 1.08f64.powi(i)) as i64));
    small.chain(large).fold(0.0, f64::max)
}

/// `V(u)` and `W(u)` of the `α = 3` condition, with the inner integrals
/// of `s^{-1} L₁(s)` started at 1.
pub fn v_w(spec: &PowerLawSpec, u: f64) -> Result<(f64, f64)> {
    let l1 = |s: f64| spec.right_slowly_varying(s);
    let finite = integrate_to_infinity(|s| l1(s) / s, 1.0, 1e-10, 0.0)
        .map(|r| r.value.is_finite())
        .unwrap_or(false)
        && spec.sv.rho < -1.0;
    if finite || u <= 1.0 {
        return Ok((u.powi(-2), u.powi(-2)));
    }
    let v = integrate(|s| l1(s) / s, 1.0, u, 1e-10, 0.0)?.value * u.powi(-2);
    let inner = |s: f64| {
        integrate_to_infinity(|t| l1(t) / (t * t), s, 1e-10, 0.0)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    };
    let w = integrate(inner, 1.0, u, 1e-8, 0.0)?.value * l1(u) * u.powi(-2);
    Ok((v, w))
}

/// `P(S_n ≥ x, M_n < y)` with every summand below `y`: exact convolution
/// of the restricted law when it is finite, Monte Carlo otherwise.
fn small_summand_lhs(law: &Law, n: u64, x: f64, y: f64, opts: &LargeDevOptions) -> Result<(f64, Method)> {
    let below = y.ceil() as i64;
    let from = x.ceil() as i64;
    let finite = match law {
        Law::Finite(p) if p.tail_mass() == 0.0 => Some(p.clone()),
        Law::PowerLaw(s) if s.is_nonnegative() && (n as f64) * y <= EXACT_WORK => {
            Some(build_power_law(s, &TruncationPolicy::keep_tail((below - 1).max(1)))?)
        }
        _ => None,
    };
    if let Some(p) = finite {
        let small = p.restrict_below(below).self_convolve(n)?;
        return Ok((mass_at_least(&small, from), Method::Exact));
    }
    let p = match law {
        Law::Finite(p) => p.clone(),
        Law::PowerLaw(s) => build_power_law(s, &TruncationPolicy::keep_tail(opts.t_max))?,
    };
    monte_carlo(&p, n, from, below, opts)
}

fn monte_carlo(p: &LatticePmf, n: u64, from: i64, below: i64, opts: &LargeDevOptions) -> Result<(f64, Method)> {
    if opts.samples == 0 {
        return Err(invalid("Monte Carlo needs at least one sample"));
    }
    // Inverse-CDF sampling of the retained (renormalized) law.
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = NeumaierSum::new();
    for &v in p.probs() {
        acc.add(v);
        cdf.push(acc.value());
    }
    let total = acc.value();
    let offset = p.offset();
    let blocks = opts.samples.div_ceil(MC_BLOCK);
    let hits = run_blocks(blocks, opts.workers, |b| {
        let mut rng = substream(opts.seed, domain::LARGE_DEVIATION, b);
        let count = MC_BLOCK.min(opts.samples - b * MC_BLOCK);
        let mut hits = 0u64;
        for _ in 0..count {
            let mut sum = 0i64;
            let mut ok = true;
            for _ in 0..n {
                let u: f64 = rng.random::<f64>() * total;
                let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                let v = offset + i as i64;
                if v >= below {
                    ok = false;
                }
                sum += v;
            }
            if ok && sum >= from {
                hits += 1;
            }
        }
        hits
    })?;
    let hits: u64 = hits.iter().sum();
    let m = opts.samples as f64;
    let phat = hits as f64 / m;
    let half_width = if hits == 0 {
        3.0 / m
    } else {
        1.96 * (phat * (1.0 - phat) / m).sqrt().max(1.0 / m)
    };
    Ok((
        phat,
        Method::MonteCarlo {
            samples: opts.samples,
            half_width,
            seed: opts.seed,
        },
    ))
}

/// `P(S_n ≥ x, M_n < y)` against `(n y^{1-α} L₁(y))^{x/y}` (the constant
/// is not known and not included).
pub fn large_dev_bound(
    variant: LargeDevVariant,
    law: &Law,
    n: u64,
    x: f64,
    y: f64,
    opts: &LargeDevOptions,
) -> Result<BoundReport> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if let Law::Finite(p) = law {
        if x <= 0.0 && p.min_support() >= 0 && p.tail_mass() == 0.0 && y > p.max_support() as f64 {
            let mut r = BoundReport::new(1.0, f64::NAN, Method::Exact);
            r.degenerate = true;
            return Ok(r);
        }
    }
    if !(y > 0.0 && x >= y) {
        return Err(invalid(format!("need x >= y > 0, got x = {x}, y = {y}")));
    }
    if x / y > opts.r {
        return Err(invalid(format!("x/y = {} exceeds r = {}", x / y, opts.r)));
    }
    let Law::PowerLaw(spec) = law else {
        return Err(Error::Unsupported(
            "the right-hand side needs a power-law spec".into(),
        ));
    };
    let alpha = spec.alpha;
    let nf = n as f64;
    let l1y = spec.right_slowly_varying(y);
    let rhs = (nf * y.powf(1.0 - alpha) * l1y).powf(x / y);
    let centred = || -> Result<()> {
        let mu = spec.mean()?;
        if mu.abs() > 1e-12 {
            return Err(Error::Precondition(format!("summands must be centred, mean is {mu}")));
        }
        if spec.side == Side::TwoSided && spec.a == 0.0 {
            return Err(Error::Precondition("left tail is not O(right tail)".into()));
        }
        Ok(())
    };
    let mut extra = BTreeMap::new();
    match variant {
        LargeDevVariant::I => {
            if !(alpha > 1.0 && alpha < 2.0) {
                return Err(Error::Precondition(format!("variant (i) needs 1 < α < 2, got {alpha}")));
            }
        }
        LargeDevVariant::Ii => {
            if alpha != 2.0 {
                return Err(Error::Precondition(format!("variant (ii) needs α = 2, got {alpha}")));
            }
            let ld = l_delta(spec, y);
            let cond = nf * spec.tail_right(y.ceil() as i64 - 1) * ld.powf(1.0 + opts.beta);
            extra.insert("l_delta".to_string(), ld);
            extra.insert("condition".to_string(), cond);
            if cond > opts.eta {
                return Err(Error::Precondition(format!(
                    "n P(X ≥ y) L_Δ(y)^(1+β) = {cond} exceeds η = {}",
                    opts.eta
                )));
            }
        }
        LargeDevVariant::Iii => {
            if !(alpha > 2.0 && alpha < 3.0) {
                return Err(Error::Precondition(format!(
                    "variant (iii) needs a finite mean and α < 3, got α = {alpha}"
                )));
            }
            centred()?;
        }
        LargeDevVariant::Iv => {
            if alpha != 3.0 {
                return Err(Error::Precondition(format!("variant (iv) needs α = 3, got {alpha}")));
            }
            centred()?;
            let c_star = tail_constant(spec);
            let pi = nf * c_star * x.powi(-2) * spec.right_slowly_varying(x);
            let u = y / pi.ln().abs();
            let (v, w) = v_w(spec, u)?;
            let cond = nf * (v + w);
            extra.insert("c_star".to_string(), c_star);
            extra.insert("pi".to_string(), pi);
            extra.insert("v".to_string(), v);
            extra.insert("w".to_string(), w);
            extra.insert("condition".to_string(), cond);
            if cond >= opts.eta {
                return Err(Error::Precondition(format!(
                    "n V + n W = {cond} is not below η = {}",
                    opts.eta
                )));
            }
        }
    }
    let (lhs, method) = small_summand_lhs(law, n, x, y, opts)?;
    let mut report = BoundReport::new(lhs, rhs, method).with("l1_y", l1y);
    report.quantities.extend(extra);
    Ok(report)
}

/// `(2πn)^{-1/2} σ⁻¹ e^{-t²/(2nσ²)} + n(α-1) t⁻¹ P(X - μ > t)` for `t ≥ √n`.
pub fn two_term_approx(spec: &PowerLawSpec, n: u64, t: i64) -> Result<f64> {
    if !(spec.alpha > 3.0) {
        return Err(Error::Precondition(format!("needs α > 3, got {}", spec.alpha)));
    }
    let nf = n as f64;
    if (t as f64) < nf.sqrt() {
        return Err(Error::Precondition(format!("t = {t} is below √n")));
    }
    let mu = spec.mean()?;
    let sigma = spec.variance()?.max(0.0).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegenerateLaw("zero variance".into()));
    }
    let tf = t as f64;
    let gauss = (-tf * tf / (2.0 * nf * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI * nf).sqrt());
    let jump = nf * (spec.alpha - 1.0) / tf * spec.tail_right((tf + mu).floor() as i64);
    Ok(gauss + jump)
}

/// Exact `P(S_n - ⌊nμ⌋ = t)` for a nonnegative spec, from the law
/// truncated just above the point of interest.
pub fn two_term_exact(spec: &PowerLawSpec, n: u64, t: i64) -> Result<f64> {
    if !spec.is_nonnegative() {
        return Err(Error::Unsupported("exact companion needs nonnegative summands".into()));
    }
    let mu = spec.mean()?;
    let target = t + (n as f64 * mu).floor() as i64;
    let x = build_power_law(spec, &TruncationPolicy::keep_tail(target.max(1)))?;
    Ok(x.self_convolve_window(n, target)?.prob(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Normalization;
    use proptest::prelude::*;

    #[test]
    fn uniform_one_two_brute_force() {
        let x = LatticePmf::uniform(1, 2).unwrap();
        let r = decomposition_bound(&x, 2, 4, 0.6).unwrap();
        // Enumerate the four outcomes of (X1, X2).
        let mut lhs = 0.0;
        let mut l = 0.0;
        for a in 1..=2 {
            for b in 1..=2 {
                if a + b == 4 {
                    lhs += 0.25;
                }
            }
            if a as f64 >= 2.0 && (a as f64) < 2.4 {
                l += 0.5;
            }
        }
        let q = 0.5;
        assert_eq!(r.lhs, lhs);
        assert_eq!(r.lhs, 0.25);
        assert_eq!(r.quantities["jump_term"], 0.0);
        assert!((r.rhs_without_constant - 2.0 * q * l).abs() < 1e-15);
        assert!(r.lhs <= r.rhs_without_constant);
    }

    #[test]
    fn empty_jump_term_when_support_is_small() {
        let x = LatticePmf::uniform(0, 3).unwrap();
        let r = decomposition_bound(&x, 4, 10, 0.99).unwrap();
        assert_eq!(r.quantities["jump_term"], 0.0);
        assert!((r.rhs_without_constant - r.quantities["split_term"]).abs() < 1e-18);
    }

    #[test]
    fn power_law_instance() {
        let spec = PowerLawSpec::one_sided(2.5);
        let policy = TruncationPolicy {
            mode: crate::lattice::TruncationMode::Renormalize,
            ..TruncationPolicy::keep_tail(400)
        };
        let x = build_power_law(&spec, &policy).unwrap();
        let r = decomposition_bound(&x, 8, 200, 0.3).unwrap();
        assert!(r.lhs <= r.rhs_without_constant);
        assert!(r.quantities["p_small_max"] <= r.quantities["split_term"]);
    }

    #[test]
    fn degenerate_large_deviation() {
        let law = Law::Finite(LatticePmf::uniform(1, 5).unwrap());
        let r = large_dev_bound(LargeDevVariant::I, &law, 3, 0.0, 10.0, &LargeDevOptions::default()).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert!(r.degenerate);
    }

    #[test]
    fn variant_one_exact_path() {
        let law = Law::PowerLaw(PowerLawSpec::one_sided(1.5));
        let r = large_dev_bound(LargeDevVariant::I, &law, 16, 200.0, 100.0, &LargeDevOptions::default()).unwrap();
        assert_eq!(r.method, Method::Exact);
        assert!(r.lhs > 0.0 && r.lhs < 1.0);
        assert!(r.rhs_without_constant > 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_exact_and_is_reproducible() {
        let p = LatticePmf::uniform(0, 9).unwrap();
        let exact = p.restrict_below(8).self_convolve(4).unwrap();
        let want = mass_at_least(&exact, 20);
        let opts = LargeDevOptions { samples: 200_000, seed: 11, ..Default::default() };
        let (got, method) = monte_carlo(&p, 4, 20, 8, &opts).unwrap();
        let Method::MonteCarlo { half_width, .. } = method else { panic!() };
        assert!(half_width > 0.0);
        assert!((got - want).abs() < 2.0 * half_width, "{got} vs {want} ± {half_width}");
        let again = monte_carlo(&p, 4, 20, 8, &LargeDevOptions { workers: 3, ..opts }).unwrap();
        assert_eq!(again.0.to_bits(), got.to_bits());
    }

    #[test]
    fn l_delta_grows_like_log() {
        let spec = PowerLawSpec::one_sided(2.0);
        let r = l_delta(&spec, 1e4) / l_delta(&spec, 1e2);
        // Independent oracle: P(X ≥ k) by direct partial sums with an
        // integral remainder, then the same ratio.
        let z: f64 = std::f64::consts::PI.powi(2) / 6.0;
        let tail = |k: u64| -> f64 {
            let m = 200_000u64;
            let head: f64 = (k..m).map(|j| 1.0 / (j as f64).powi(2)).sum();
            (head + 1.0 / m as f64 - 0.5 / (m as f64).powi(2)) / z
        };
        let ld = |y: u64| -> f64 {
            let num: f64 = (1..=y).map(tail).sum();
            num / (y as f64 * tail(y))
        };
        let oracle = ld(10_000) / ld(100);
        assert!((r - oracle).abs() < 1e-6 * oracle, "{r} vs {oracle}");
        assert!((r / 2.0 - 1.0).abs() < 0.15, "{r}");
    }

    #[test]
    fn centred_variants_reject_one_sided_laws() {
        let law = Law::PowerLaw(PowerLawSpec::one_sided(2.5));
        let e = large_dev_bound(LargeDevVariant::Iii, &law, 4, 20.0, 10.0, &LargeDevOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn variant_four_reports_condition() {
        let spec = PowerLawSpec::two_sided(3.0, 1.0, 1.0);
        let opts = LargeDevOptions { samples: 20_000, eta: 1e9, t_max: 1 << 14, ..Default::default() };
        let r = large_dev_bound(LargeDevVariant::Iv, &Law::PowerLaw(spec), 4, 400.0, 200.0, &opts).unwrap();
        assert!(r.quantities["condition"] > 0.0);
        assert!(r.quantities["c_star"] > 0.0);
        assert!(matches!(r.method, Method::MonteCarlo { .. }));
        let _ = Normalization::Exact;
    }

    #[test]
    fn two_term_regions() {
        let spec = PowerLawSpec::one_sided(4.5);
        let n = 256u64;
        // Deep tail: the jump term dominates.
        let mu = spec.mean().unwrap();
        let sigma = spec.variance().unwrap().sqrt();
        let t = n as i64;
        let g = (-(t as f64).powi(2) / (2.0 * n as f64 * sigma * sigma)).exp();
        assert!(g < 1e-10);
        let approx = two_term_approx(&spec, n, t).unwrap();
        let exact = two_term_exact(&spec, n, t).unwrap();
        assert!((exact / approx - 1.0).abs() < 0.5, "{exact} vs {approx}");
        // Gaussian edge.
        let t = (n as f64).sqrt().ceil() as i64;
        let approx = two_term_approx(&spec, n, t).unwrap();
        let jump = n as f64 * 3.5 / t as f64 * spec.tail_right((t as f64 + mu).floor() as i64);
        assert!(approx - jump > jump);
        assert!(two_term_approx(&spec, n, 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn decomposition_never_violated(
            w in prop::collection::vec(0.0f64..1.0, 1..8),
            offset in 0i64..3,
            n in 2u64..=6,
            t in 2i64..40,
            d in prop::sample::select(vec![0.3, 0.5, 0.7]),
        ) {
            let s: f64 = w.iter().sum();
            prop_assume!(s > 0.0);
            let x = LatticePmf::new(offset, w.iter().map(|v| v / s).collect(), "x").unwrap();
            let r = decomposition_bound(&x, n, t, d).unwrap();
            prop_assert!(r.lhs <= r.rhs_without_constant * (1.0 + 1e-12) + 1e-300);
        }
    }
}
