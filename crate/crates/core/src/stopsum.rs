//! Exact laws of the stopped sum `S_N` and stopped maximum `M_N` for an
//! independent count `N`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{convolve_slices, LatticePmf, MAX_SUPPORT};
use crate::numeric::NeumaierSum;
use crate::report::{Cell, Table};

/// How far to follow the series over `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    /// Smallest `n` with `P(N > n) <= tol`.
    Auto { tol: f64 },
    Fixed(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffPolicy {
    pub cutoff: Cutoff,
    /// Only values `t <= window` are computed (nonnegative summands).
    pub window: Option<i64>,
}

impl CutoffPolicy {
    /// Default rule for a predictor of typical size `scale`.
    pub fn auto(scale: f64) -> Self {
        Self {
            cutoff: Cutoff::Auto { tol: 1e-9 * scale },
            window: None,
        }
    }

    pub fn fixed(n: i64) -> Self {
        Self {
            cutoff: Cutoff::Fixed(n),
            window: None,
        }
    }

    pub fn with_window(mut self, t: i64) -> Self {
        self.window = Some(t);
        self
    }
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        Self::auto(1.0)
    }
}

/// Law of a stopped sum or maximum together with its error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedSumResult {
    /// Proper law; mass that was not resolved (beyond the window, from
    /// truncated summands, or from `N > n_cutoff`) sits in the tails.
    pub pmf: LatticePmf,
    pub n_cutoff: i64,
    /// `P(N > n_cutoff)`, including mass `N` lost to its own truncation.
    pub truncation_error: f64,
    /// Bound on `|P(. = t) - pmf.prob(t)|` for each retained `t`.
    local_error: Vec<f64>,
    pub notes: Vec<String>,
}

impl StoppedSumResult {
    /// Error bound at `t`; outside the retained window nothing is known.
    pub fn local_error(&self, t: i64) -> f64 {
        let i = t - self.pmf.offset();
        if i < 0 || i >= self.local_error.len() as i64 {
            1.0
        } else {
            self.local_error[i as usize]
        }
    }

    pub fn prob(&self, t: i64) -> f64 {
        self.pmf.prob(t)
    }
}

fn check_count_law(n: &LatticePmf) -> Result<()> {
    if n.offset() < 0 || n.tail_left() > 0.0 {
        return Err(Error::Precondition(
            "stopping variable must live on the nonnegative integers".into(),
        ));
    }
    Ok(())
}

fn choose_cutoff(
    n: &LatticePmf,
    policy: &CutoffPolicy,
    exact_window: bool,
    shrink: &dyn Fn(i64) -> f64,
) -> Result<i64> {
    let n_max = n.max_support();
    match policy.cutoff {
        Cutoff::Fixed(k) if k < 0 => Err(invalid("cutoff must be nonnegative")),
        Cutoff::Fixed(k) => Ok(k.min(n_max)),
        Cutoff::Auto { tol } => {
            if !(tol > 0.0) {
                return Err(invalid("cutoff tolerance must be positive"));
            }
            if exact_window {
                // Walk up from the top: P(N > k) grows as k decreases.
                let mut above = n.tail_right();
                let mut k = n_max;
                while k > n.offset() {
                    let next = above + n.prob(k);
                    if next > tol {
                        break;
                    }
                    above = next;
                    k -= 1;
                }
                return Ok(k);
            }
            // Both factors are nonincreasing in k, so bisect.
            let cost = |k: i64| n.tail_prob(k).min(1.0) * shrink(k);
            let top = cost(n_max);
            if top > tol {
                return Err(Error::Precondition(format!(
                    "cutoff rule unsatisfiable: error {top:e} at N = {n_max} exceeds {tol:e}"
                )));
            }
            let (mut lo, mut hi) = (n.offset() - 1, n_max);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if cost(mid) <= tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi.max(n.offset()))
        }
    }
}

/// Chernoff bound on `P(X_1 + ... + X_n <= w)` for nonnegative summands.
pub(crate) fn lower_deviation(x: &LatticePmf, n: i64, w: i64) -> f64 {
    if n <= 0 {
        return 1.0;
    }
    let beyond = (x.max_support() + 1) as f64;
    (0..240)
        .map(|i| 1e-4 * 1.05f64.powi(i))
        .map(|theta| {
            let mut phi = NeumaierSum::new();
            for (k, p) in x.iter() {
                phi.add(p * (-theta * k as f64).exp());
            }
            phi.add(x.tail_right() * (-theta * beyond).exp());
            (theta * w as f64 + n as f64 * phi.value().ln()).exp()
        })
        .fold(1.0, f64::min)
}

/// Dense sequence with an integer offset.
#[derive(Clone)]
struct Seq {
    offset: i64,
    v: Vec<f64>,
}

impl Seq {
    fn from_pmf(p: &LatticePmf) -> Self {
        Self {
            offset: p.offset(),
            v: p.probs().to_vec(),
        }
    }

    fn unit() -> Self {
        Self {
            offset: 0,
            v: vec![1.0],
        }
    }

    fn hi(&self) -> i64 {
        self.offset + self.v.len() as i64 - 1
    }

    fn conv(&self, other: &Seq, window: Option<i64>) -> Result<Seq> {
        let offset = self.offset + other.offset;
        let full = self.v.len() + other.v.len() - 1;
        let keep = match window {
            Some(w) if w < offset => return Ok(Seq { offset, v: vec![0.0] }),
            Some(w) => full.min((w - offset + 1) as usize),
            None => full,
        };
        if keep > MAX_SUPPORT {
            return Err(Error::SupportOverflow {
                len: keep,
                budget: MAX_SUPPORT,
            });
        }
        let a = &self.v[..self.v.len().min(keep)];
        let b = &other.v[..other.v.len().min(keep)];
        Ok(Seq {
            offset,
            v: convolve_slices(a, b, keep),
        })
    }

    /// `self += c * other`
    fn axpy(&mut self, c: f64, other: &Seq) {
        if c == 0.0 {
            return;
        }
        let lo = self.offset.min(other.offset);
        let hi = self.hi().max(other.hi());
        if lo < self.offset || hi > self.hi() {
            let mut v = vec![0.0; (hi - lo + 1) as usize];
            let s = (self.offset - lo) as usize;
            v[s..s + self.v.len()].copy_from_slice(&self.v);
            self.v = v;
            self.offset = lo;
        }
        let s = (other.offset - self.offset) as usize;
        for (d, &x) in self.v[s..].iter_mut().zip(&other.v) {
            *d += c * x;
        }
    }

    fn zero() -> Self {
        Self {
            offset: 0,
            v: vec![0.0],
        }
    }
}

/// `sum_{k <= K} coef[k] X^{*k}` by baby-step/giant-step Horner
/// evaluation: `m ~ sqrt(K)` powers `X^{*i}` plus `K/m` giant steps in
/// `X^{*m}`, about `2 sqrt(K)` convolutions in total.
fn convolution_polynomial(x: &Seq, coef: &[f64], window: Option<i64>) -> Result<Seq> {
    let k_max = coef.len() - 1;
    let m = ((k_max + 1) as f64).sqrt().ceil().max(1.0) as usize;
    let mut baby = Vec::with_capacity(m);
    baby.push(Seq::unit());
    for i in 1..m {
        let next = baby[i - 1].conv(x, window)?;
        baby.push(next);
    }
    let giant = if k_max >= m {
        Some(baby[m - 1].conv(x, window)?)
    } else {
        None
    };
    let block = |j: usize| {
        let mut acc = Seq::zero();
        for (i, b) in baby.iter().enumerate() {
            if let Some(&c) = coef.get(j * m + i) {
                acc.axpy(c, b);
            }
        }
        acc
    };
    let blocks = k_max / m;
    let mut r = block(blocks);
    for j in (0..blocks).rev() {
        let y = giant.as_ref().expect("giant step exists when blocks > 0");
        r = r.conv(y, window)?;
        let b = block(j);
        r.axpy(1.0, &b);
    }
    Ok(r)
}

/// Law of `S_N = X_1 + ... + X_N` with `N` independent of the summands.
///
/// With a window `T` and summands on the nonnegative integers, values on
/// `[0, T]` only involve summand values on `[0, T]` and are computed
/// exactly. When additionally `X >= 1`, terms with `k > t` vanish at `t`,
/// so the series over `N` is exact at every `t <= n_cutoff`.
pub fn stopped_sum_pmf(
    x: &LatticePmf,
    n: &LatticePmf,
    policy: &CutoffPolicy,
) -> Result<StoppedSumResult> {
    check_count_law(n)?;
    let nonneg = x.offset() >= 0 && x.tail_left() == 0.0;
    if policy.window.is_some() && !nonneg {
        return Err(Error::Precondition(
            "windowed stopped sums need summands on the nonnegative integers".into(),
        ));
    }
    let positive = nonneg && x.offset() >= 1;
    let exact_window = positive && policy.window.is_some_and(|w| w <= n.max_support());
    // Zero-valued summands: S_n <= w becomes unlikely as n grows.
    let shrink = |k: i64| match policy.window {
        Some(w) if nonneg && !positive => lower_deviation(x, k + 1, w),
        _ => 1.0,
    };
    let n_cutoff = choose_cutoff(n, policy, exact_window, &shrink)?;
    let truncation_error = n.tail_prob(n_cutoff).min(1.0);
    let window_error = truncation_error * shrink(n_cutoff);

    let coef: Vec<f64> = (0..=n_cutoff).map(|k| n.prob(k)).collect();
    let mut notes = Vec::new();
    let seq = if n.len() == 1 && n.tail_mass() == 0.0 && n_cutoff >= n.offset() {
        // Point mass: plain power, identical to self_convolve.
        let k = n.offset() as u64;
        let p = match policy.window {
            Some(w) => x.self_convolve_window(k, w)?,
            None => x.self_convolve(k)?,
        };
        Seq::from_pmf(&p)
    } else {
        convolution_polynomial(&Seq::from_pmf(x), &coef, policy.window)?
    };

    // Tail bookkeeping. Left tail only arises from two-sided summands.
    let mut tail_left = NeumaierSum::new();
    if x.tail_left() > 0.0 {
        let tau = x.tail_mass();
        for (k, &p) in coef.iter().enumerate() {
            let total = 1.0 - (1.0 - tau).powi(k as i32);
            let right = 1.0 - (1.0 - x.tail_right()).powi(k as i32);
            tail_left.add(p * (total - right));
        }
    }
    let tail_left = tail_left.value().max(0.0);
    let retained: f64 = seq.v.iter().copied().collect::<NeumaierSum>().value();
    let tail_right = (1.0 - retained - tail_left).max(0.0);

    let en_retained: f64 = coef.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let x_tail_error = (en_retained * x.tail_mass()).min(1.0);
    let x_exact_to = if x.tail_mass() == 0.0 {
        i64::MAX
    } else if nonneg {
        x.max_support()
    } else {
        i64::MIN
    };
    let seq_offset = seq.offset;
    let mut local_error: Vec<f64> = (0..seq.v.len())
        .map(|i| {
            let t = seq.offset + i as i64;
            let from_n = if positive && t <= n_cutoff { 0.0 } else { window_error };
            let from_x = if t <= x_exact_to { 0.0 } else { x_tail_error };
            from_n + from_x
        })
        .collect();
    if let Some(w) = policy.window {
        notes.push(format!("values computed on t <= {w}"));
    }
    notes.push(format!("N series cut at {n_cutoff}"));

    let mut pmf = LatticePmf::raw(
        seq.offset,
        seq.v,
        tail_left,
        tail_right,
        format!("S_N[{}; {}]", x.label(), n.label()),
    );
    pmf.notes = notes.clone();
    align_errors(&mut local_error, seq_offset, &pmf);
    Ok(StoppedSumResult {
        pmf,
        n_cutoff,
        truncation_error,
        local_error,
        notes,
    })
}

/// Keep the error vector aligned after leading/trailing zeros are trimmed.
fn align_errors(errors: &mut Vec<f64>, offset: i64, pmf: &LatticePmf) {
    let shift = (pmf.offset() - offset).max(0) as usize;
    errors.drain(..shift.min(errors.len()));
    errors.truncate(pmf.len());
}

/// Law of `M_N = max(X_1, ..., X_N)`.
///
/// `M_0 = 0` for summands on the nonnegative integers, so `P(M_N = 0)`
/// includes `P(N = 0)`. For two-sided summands `N = 0` must be impossible.
pub fn stopped_max_pmf(
    x: &LatticePmf,
    n: &LatticePmf,
    policy: &CutoffPolicy,
) -> Result<StoppedSumResult> {
    check_count_law(n)?;
    let nonneg = x.offset() >= 0 && x.tail_left() == 0.0;
    if !nonneg && n.prob(0) > 0.0 {
        return Err(Error::Precondition(
            "the maximum of an empty sample is undefined for two-sided summands".into(),
        ));
    }
    let n_cutoff = choose_cutoff(n, policy, false, &|_| 1.0).or_else(|e| {
        // Series over N converges uniformly here; fall back to the whole
        // retained support and report the error honestly.
        if policy.window.is_some() {
            Ok(n.max_support())
        } else {
            Err(e)
        }
    })?;
    let truncation_error = n.tail_prob(n_cutoff).min(1.0);
    // E[N; N > n_cutoff], when the tail of N admits a first moment.
    let tail_first_moment = {
        let mut acc = NeumaierSum::new();
        for k in (n_cutoff + 1)..=n.max_support() {
            acc.add(k as f64 * n.prob(k));
        }
        match n.moment(1) {
            Ok(m) => acc.value() + m.tail_bound,
            Err(_) => f64::INFINITY,
        }
    };

    let lo = if nonneg { 0 } else { x.min_support() };
    let hi = policy.window.unwrap_or(x.max_support()).min(x.max_support()).max(lo);
    let coef: Vec<f64> = (0..=n_cutoff).map(|k| n.prob(k)).collect();
    let mut probs = Vec::with_capacity((hi - lo + 1) as usize);
    let mut local_error = Vec::with_capacity(probs.capacity());
    let mut below = if nonneg { 0.0 } else { x.tail_left() };
    for t in lo..=hi {
        let q = x.prob(t);
        let f = below + q;
        // d_k = F^k - G^k via d_{k+1} = F d_k + G^k q, free of cancellation.
        let mut d = 0.0;
        let mut gk = 1.0;
        let mut acc = NeumaierSum::new();
        for &p in coef.iter().skip(1) {
            d = f * d + gk * q;
            gk *= below;
            acc.add(p * d);
        }
        if t == 0 && nonneg {
            acc.add(coef[0]);
        }
        probs.push(acc.value());
        local_error.push(truncation_error.min(q * tail_first_moment));
        below = f;
    }
    let retained: f64 = probs.iter().copied().collect::<NeumaierSum>().value();
    let tail_left = if nonneg {
        0.0
    } else {
        // M_N below the window only if every summand is.
        let mut acc = NeumaierSum::new();
        let mut pw = 1.0;
        for &p in coef.iter().skip(1) {
            pw *= x.tail_left();
            acc.add(p * pw);
        }
        acc.value()
    };
    let tail_right = (1.0 - retained - tail_left).max(0.0);
    let mut notes = vec![format!("N series cut at {n_cutoff}")];
    if nonneg {
        notes.push("empty maximum M_0 = 0".to_string());
    }
    let mut pmf = LatticePmf::raw(
        lo,
        probs,
        tail_left,
        tail_right,
        format!("M_N[{}; {}]", x.label(), n.label()),
    );
    pmf.notes = notes.clone();
    align_errors(&mut local_error, lo, &pmf);
    Ok(StoppedSumResult {
        pmf,
        n_cutoff,
        truncation_error,
        local_error,
        notes,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub t: i64,
    pub exact: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub error_budget: f64,
}

/// Share of the predictor the exact value's error bound may take.
pub const RATIO_ERROR_ALLOWANCE: f64 = 1e-3;

/// `exact / predicted` along `t_grid`, refusing points where the exact
/// value's error bound exceeds `RATIO_ERROR_ALLOWANCE` of the predictor.
pub fn ratio_curve<F: Fn(i64) -> Result<f64>>(
    exact: &StoppedSumResult,
    predictor: F,
    t_grid: &[i64],
) -> Result<Vec<RatioRow>> {
    t_grid
        .iter()
        .map(|&t| {
            let predicted = predictor(t)?;
            if !(predicted > 0.0) {
                return Err(invalid(format!("predictor is not positive at t = {t}")));
            }
            let budget = exact.local_error(t);
            let allowance = RATIO_ERROR_ALLOWANCE * predicted;
            if budget > allowance {
                return Err(Error::ErrorBudget {
                    t,
                    bound: budget,
                    allowance,
                });
            }
            let e = exact.prob(t);
            Ok(RatioRow {
                t,
                exact: e,
                predicted,
                ratio: e / predicted,
                error_budget: budget,
            })
        })
        .collect()
}

pub fn ratio_table(rows: &[RatioRow]) -> Table {
    let mut table = Table::new(["t", "exact", "predicted", "ratio", "error_budget"]);
    for r in rows {
        table.push(vec![
            Cell::Int(r.t),
            r.exact.into(),
            r.predicted.into(),
            r.ratio.into(),
            r.error_budget.into(),
        ]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_power_law, PowerLawSpec, TruncationPolicy};
    use proptest::prelude::*;

    fn close(a: &LatticePmf, b: &LatticePmf, tol: f64) -> bool {
        let lo = a.min_support().min(b.min_support());
        let hi = a.max_support().max(b.max_support());
        (lo..=hi).all(|t| (a.prob(t) - b.prob(t)).abs() <= tol)
    }

    #[test]
    fn n_zero_gives_point_mass_at_zero() {
        let x = LatticePmf::uniform(1, 3).unwrap();
        let r = stopped_sum_pmf(&x, &LatticePmf::point_mass(0), &CutoffPolicy::default()).unwrap();
        assert_eq!((r.pmf.offset(), r.pmf.probs()), (0, &[1.0][..]));
        assert_eq!(r.truncation_error, 0.0);
    }

    #[test]
    fn unit_summands_reproduce_n() {
        let n = LatticePmf::new(0, vec![0.1, 0.2, 0.3, 0.4], "n").unwrap();
        let r = stopped_sum_pmf(&LatticePmf::point_mass(1), &n, &CutoffPolicy::default()).unwrap();
        for t in 0..4 {
            assert!((r.prob(t) - n.prob(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn bernoulli_count_uniform_enumeration() {
        // Enumerate N in {0,1,2} and both coin flips.
        let mut oracle = 0.0;
        for nn in 0..3 {
            for bits in 0..4u32 {
                let heads = (0..nn).filter(|i| bits >> i & 1 == 1).count();
                let weight = (1.0 / 3.0) * 0.5f64.powi(nn) * if bits >> nn == 0 { 1.0 } else { 0.0 };
                if heads == 1 {
                    oracle += weight;
                }
            }
        }
        let x = LatticePmf::bernoulli(0.5).unwrap();
        let n = LatticePmf::uniform(0, 2).unwrap();
        let r = stopped_sum_pmf(&x, &n, &CutoffPolicy::default()).unwrap();
        assert!((oracle - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.prob(1) - oracle).abs() < 1e-15);
    }

    #[test]
    fn max_of_two_uniforms() {
        let x = LatticePmf::uniform(1, 2).unwrap();
        let r = stopped_max_pmf(&x, &LatticePmf::point_mass(2), &CutoffPolicy::default()).unwrap();
        let brute = [(1, 1), (1, 2), (2, 1), (2, 2)]
            .iter()
            .filter(|(a, b)| (*a).max(*b) == 2)
            .count() as f64
            / 4.0;
        assert_eq!(brute, 0.75);
        assert!((r.prob(2) - brute).abs() < 1e-15);
        let one = stopped_max_pmf(&x, &LatticePmf::point_mass(1), &CutoffPolicy::default()).unwrap();
        assert!((one.prob(1) - 0.5).abs() < 1e-15 && (one.prob(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_maximum_is_zero() {
        let x = LatticePmf::uniform(1, 2).unwrap();
        let n = LatticePmf::new(0, vec![0.5, 0.5], "n").unwrap();
        let r = stopped_max_pmf(&x, &n, &CutoffPolicy::default()).unwrap();
        assert_eq!(r.prob(0), 0.5);
        let two = LatticePmf::uniform(-1, 1).unwrap();
        assert!(stopped_max_pmf(&two, &n, &CutoffPolicy::default()).is_err());
    }

    #[test]
    fn windowed_power_law_sum_is_exact_against_ladder() {
        let x = build_power_law(&PowerLawSpec::one_sided(2.5), &TruncationPolicy::keep_tail(400))
            .unwrap();
        let n = build_power_law(&PowerLawSpec::one_sided(4.0), &TruncationPolicy::keep_tail(400))
            .unwrap();
        let r = stopped_sum_pmf(&x, &n, &CutoffPolicy::auto(1e-12).with_window(400)).unwrap();
        // Oracle: explicit sum of windowed powers.
        let mut oracle = vec![0.0; 401];
        let mut pw = LatticePmf::point_mass(0);
        for k in 1..=400 {
            pw = pw.convolve_window(&x, 400).unwrap();
            let pk = n.prob(k);
            for (t, p) in pw.iter() {
                oracle[t as usize] += pk * p;
            }
        }
        for t in [1usize, 7, 50, 399, 400] {
            assert!((r.prob(t as i64) - oracle[t]).abs() <= 1e-14 * oracle[t] + 1e-300, "t={t}");
            assert_eq!(r.local_error(t as i64), 0.0);
        }
    }

    #[test]
    fn windowed_cutoff_error_covers_the_dropped_counts() {
        // X can be 0, so large counts still reach the window. A window well
        // below E S_13 makes the dropped counts unlikely there.
        let x = LatticePmf::new(0, vec![0.4, 0.35, 0.25], "x").unwrap();
        let n = build_power_law(&PowerLawSpec::one_sided(3.0), &TruncationPolicy::keep_tail(200))
            .unwrap();
        let short = stopped_sum_pmf(&x, &n, &CutoffPolicy::fixed(12).with_window(4)).unwrap();
        let long = stopped_sum_pmf(&x, &n, &CutoffPolicy::fixed(200).with_window(4)).unwrap();
        for t in 0..=4 {
            let gap = (short.prob(t) - long.prob(t)).abs();
            let allowed = short.local_error(t) + long.local_error(t);
            assert!(gap > 0.0, "t={t}");
            assert!(gap <= allowed * (1.0 + 1e-9), "t={t}: {gap:e} > {allowed:e}");
            assert!(short.local_error(t) < 0.1 * short.truncation_error, "t={t}");
        }
    }

    #[test]
    fn ratio_curve_basics() {
        let x = LatticePmf::point_mass(5);
        let n = LatticePmf::point_mass(1);
        let r = stopped_sum_pmf(&x, &n, &CutoffPolicy::default()).unwrap();
        let rows = ratio_curve(&r, |_| Ok(2.0), &[5]).unwrap();
        assert_eq!(rows[0].ratio, 0.5);
        let same = ratio_curve(&r, |t| Ok(r.prob(t)), &[5]).unwrap();
        assert_eq!(same[0].ratio, 1.0);
        assert!(ratio_curve(&r, |_| Ok(0.0), &[5]).is_err());
    }

    #[test]
    fn budget_violation_is_refused() {
        let x = LatticePmf::uniform(0, 1).unwrap();
        let n = build_power_law(&PowerLawSpec::one_sided(2.5), &TruncationPolicy::keep_tail(10))
            .unwrap();
        let r = stopped_sum_pmf(&x, &n, &CutoffPolicy::fixed(10)).unwrap();
        let err = ratio_curve(&r, |_| Ok(1e-6), &[3]).unwrap_err();
        assert!(matches!(err, Error::ErrorBudget { .. }));
    }

    #[test]
    fn unsatisfiable_cutoff_is_reported() {
        let x = LatticePmf::uniform(0, 1).unwrap();
        let n = build_power_law(&PowerLawSpec::one_sided(2.5), &TruncationPolicy::keep_tail(10))
            .unwrap();
        assert!(matches!(
            stopped_sum_pmf(&x, &n, &CutoffPolicy::auto(1.0)),
            Err(Error::Precondition(_))
        ));
    }

    fn small_pmf(lo: i64) -> impl Strategy<Value = LatticePmf> {
        (lo..lo + 3, prop::collection::vec(0.01f64..1.0, 1..6)).prop_map(|(off, w)| {
            let s: f64 = w.iter().sum();
            LatticePmf::new(off, w.iter().map(|x| x / s).collect(), "rand").unwrap()
        })
    }

    proptest! {
        #[test]
        fn point_mass_count_equals_power(x in small_pmf(-2), k in 0i64..7) {
            let r = stopped_sum_pmf(&x, &LatticePmf::point_mass(k), &CutoffPolicy::default()).unwrap();
            let p = x.self_convolve(k as u64).unwrap();
            prop_assert!(close(&r.pmf, &p, 0.0));
        }

        #[test]
        fn mass_is_conserved(x in small_pmf(-1), n in small_pmf(0), cut in 0i64..8) {
            let r = stopped_sum_pmf(&x, &n, &CutoffPolicy::fixed(cut)).unwrap();
            let covered = r.pmf.retained_mass() + r.pmf.tail_left();
            prop_assert!((covered + r.truncation_error - 1.0).abs() < 1e-9);
            prop_assert!(r.truncation_error >= n.tail_prob(r.n_cutoff) - 1e-15);
        }

        #[test]
        fn refinement_is_monotone(x in small_pmf(0), n in small_pmf(0), cut in 0i64..6) {
            let a = stopped_sum_pmf(&x, &n, &CutoffPolicy::fixed(cut)).unwrap();
            let b = stopped_sum_pmf(&x, &n, &CutoffPolicy::fixed(cut + 1)).unwrap();
            for t in a.pmf.min_support()..=a.pmf.max_support() {
                prop_assert!(b.prob(t) >= a.prob(t) - 1e-15);
            }
        }

        #[test]
        fn max_cdf_is_pgf_of_cdf(x in small_pmf(0), n in small_pmf(0)) {
            let r = stopped_max_pmf(&x, &n, &CutoffPolicy::fixed(20)).unwrap();
            for t in 0..=x.max_support() {
                let f = x.cdf(t);
                let direct: f64 = n.iter().map(|(k, p)| p * f.powi(k as i32)).sum();
                prop_assert!((r.pmf.cdf(t) - direct).abs() < 1e-12);
            }
        }
    }
}
