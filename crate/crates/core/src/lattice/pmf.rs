use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::NeumaierSum;

use super::conv::convolve_slices;
use super::powerlaw::{PowerLawSpec, TruncationPolicy};

/// Largest dense support we are willing to allocate.
pub const MAX_SUPPORT: usize = 1 << 27;

const MASS_TOL: f64 = 1e-9;

/// Integer lattice law on a finite window `offset..offset+len`, plus the
/// mass that fell outside it on either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePmf {
    offset: i64,
    probs: Vec<f64>,
    tail_left: f64,
    tail_right: f64,
    label: String,
    /// Law the pmf was cut from, when known; enables analytic tail sums.
    pub source: Option<PowerLawSpec>,
    pub truncation: Option<TruncationPolicy>,
    pub notes: Vec<String>,
}

/// Moment over the retained support with a bound on the omitted part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    pub tail_bound: f64,
}

impl MomentEstimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tail_bound + 1e-12 * x.abs().max(1.0)
    }
}

impl LatticePmf {
    pub fn new(offset: i64, probs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::with_tails(offset, probs, 0.0, 0.0, label)
    }

    pub fn with_tails(
        offset: i64,
        probs: Vec<f64>,
        tail_left: f64,
        tail_right: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("pmf needs at least one support point"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid(format!("probability {p} is not a finite nonnegative number")));
        }
        if !(tail_left >= 0.0 && tail_right >= 0.0) {
            return Err(invalid("tail mass must be nonnegative"));
        }
        let pmf = Self::raw(offset, probs, tail_left, tail_right, label.into());
        let total = pmf.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("total mass {total} is not 1")));
        }
        Ok(pmf)
    }

    pub(crate) fn raw(
        offset: i64,
        probs: Vec<f64>,
        tail_left: f64,
        tail_right: f64,
        label: String,
    ) -> Self {
        let mut pmf = Self {
            offset,
            probs,
            tail_left,
            tail_right,
            label,
            source: None,
            truncation: None,
            notes: Vec::new(),
        };
        pmf.trim_zeros();
        pmf
    }

    pub fn point_mass(t: i64) -> Self {
        Self::raw(t, vec![1.0], 0.0, 0.0, format!("point-mass({t})"))
    }

    /// Uniform law on `{lo, ..., hi}`.
    pub fn uniform(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(invalid("uniform needs lo <= hi"));
        }
        let n = (hi - lo + 1) as usize;
        Self::new(lo, vec![1.0 / n as f64; n], format!("uniform({lo}..={hi})"))
    }

    /// Bernoulli(p) on `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("bernoulli parameter outside [0,1]"));
        }
        Self::new(0, vec![1.0 - p, p], format!("bernoulli({p})"))
    }

    fn trim_zeros(&mut self) {
        let first = self.probs.iter().position(|&p| p > 0.0);
        match first {
            None => {
                // Keep one explicit zero so offset stays meaningful.
                self.probs.truncate(1);
            }
            Some(f) => {
                let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap();
                self.probs.truncate(last + 1);
                self.probs.drain(..f);
                self.offset += f as i64;
            }
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min_support(&self) -> i64 {
        self.offset
    }

    pub fn max_support(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn tail_left(&self) -> f64 {
        self.tail_left
    }

    pub fn tail_right(&self) -> f64 {
        self.tail_right
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_left + self.tail_right
    }

    pub fn retained_mass(&self) -> f64 {
        self.probs.iter().copied().collect::<NeumaierSum>().value()
    }

    pub fn total_mass(&self) -> f64 {
        self.retained_mass() + self.tail_mass()
    }

    /// `P(X = t)` on the retained window (zero outside).
    pub fn prob(&self, t: i64) -> f64 {
        let i = t - self.offset;
        if i < 0 || i >= self.probs.len() as i64 {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    /// Whether `P(X = t)` is known exactly, i.e. `t` is not in a region
    /// where truncated mass could live.
    pub fn is_exact_at(&self, t: i64) -> bool {
        (t >= self.min_support() || self.tail_left == 0.0)
            && (t <= self.max_support() || self.tail_right == 0.0)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    /// `P(X <= t)`; left tail mass counts as lying below the window.
    pub fn cdf(&self, t: i64) -> f64 {
        if t < self.offset {
            return if self.tail_left > 0.0 { self.tail_left } else { 0.0 };
        }
        let upto = ((t - self.offset + 1) as usize).min(self.probs.len());
        let mut acc: NeumaierSum = self.probs[..upto].iter().copied().collect();
        acc.add(self.tail_left);
        acc.value()
    }

    /// `P(X > t)`: retained mass above `t` plus the right tail mass.
    pub fn tail_prob(&self, t: i64) -> f64 {
        let from = (t + 1 - self.offset).max(0) as usize;
        let mut acc = NeumaierSum::new();
        acc.add(self.tail_right);
        if from < self.probs.len() {
            for &p in self.probs[from..].iter().rev() {
                acc.add(p);
            }
        }
        if t < self.offset - 1 {
            // Left tail mass sits somewhere below the window; count it when
            // the threshold is below everything.
            if t == i64::MIN {
                acc.add(self.tail_left);
            }
        }
        acc.value()
    }

    /// `E X^k` over the retained support with a bound on the truncated part.
    pub fn moment(&self, k: u32) -> Result<MomentEstimate> {
        let mut acc = NeumaierSum::new();
        for (i, &p) in self.probs.iter().enumerate().rev() {
            let t = (self.offset + i as i64) as f64;
            acc.add(p * t.powi(k as i32));
        }
        let tail_bound = self.moment_tail_bound(k)?;
        Ok(MomentEstimate {
            value: acc.value(),
            tail_bound,
        })
    }

    fn moment_tail_bound(&self, k: u32) -> Result<f64> {
        let tail = self.tail_mass();
        if tail == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.source.map(|s| s.alpha);
        let unbounded = || Error::UnboundedTailError {
            order: k,
            alpha,
            tail_mass: tail,
        };
        if k == 0 {
            return Ok(tail);
        }
        match (self.source, self.truncation) {
            (Some(spec), Some(policy)) if (k as f64) < spec.alpha - 1.0 => {
                let (l, r) = spec.tail_moment(k, policy.t_max).map_err(|_| unbounded())?;
                // Analytic remainder, padded for rounding in the series.
                Ok((l + r) * (1.0 + 1e-9))
            }
            _ => Err(unbounded()),
        }
    }

    /// Mean over the retained window; errors if the tail could dominate.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.moment(1)?.value / self.retained_mass())
    }

    pub fn variance(&self) -> Result<f64> {
        let w = self.retained_mass();
        let m1 = self.moment(1)?.value / w;
        let m2 = self.moment(2)?.value / w;
        Ok((m2 - m1 * m1).max(0.0))
    }

    /// Mean and variance of the retained window, ignoring any tail.
    pub fn window_mean_var(&self) -> (f64, f64) {
        let w = self.retained_mass();
        let mut m1 = NeumaierSum::new();
        for (i, &p) in self.probs.iter().enumerate() {
            m1.add(p * (self.offset + i as i64) as f64);
        }
        let mean = m1.value() / w;
        let mut m2 = NeumaierSum::new();
        for (i, &p) in self.probs.iter().enumerate() {
            let d = (self.offset + i as i64) as f64 - mean;
            m2.add(p * d * d);
        }
        (mean, m2.value() / w)
    }

    /// gcd of differences between support points (0 for a point mass).
    pub fn span(&self) -> i64 {
        let mut g = 0i64;
        let mut first = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                match first {
                    None => first = Some(i as i64),
                    Some(f) => g = gcd(g, i as i64 - f),
                }
            }
        }
        g
    }

    fn check_budget(len: usize) -> Result<()> {
        if len > MAX_SUPPORT {
            return Err(Error::SupportOverflow {
                len,
                budget: MAX_SUPPORT,
            });
        }
        Ok(())
    }

    fn combine_tails(&self, other: &Self) -> (f64, f64) {
        let total = self.tail_mass() + other.tail_mass() - self.tail_mass() * other.tail_mass();
        let right = self.tail_right + other.tail_right - self.tail_right * other.tail_right;
        (total - right, right)
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let len = self.len() + other.len() - 1;
        Self::check_budget(len)?;
        let probs = convolve_slices(&self.probs, &other.probs, len);
        let (tl, tr) = self.combine_tails(other);
        Ok(Self::raw(
            self.offset + other.offset,
            probs,
            tl.max(0.0),
            tr,
            format!("({}) * ({})", self.label, other.label),
        ))
    }

    /// Convolution restricted to support `<= hi`; the excess joins the
    /// right tail. Values on the window are exact when both laws live on
    /// the nonnegative integers.
    pub fn convolve_window(&self, other: &Self, hi: i64) -> Result<Self> {
        if self.offset < 0 || other.offset < 0 || self.tail_left > 0.0 || other.tail_left > 0.0 {
            return Err(Error::Precondition(
                "windowed convolution needs laws on the nonnegative integers".into(),
            ));
        }
        let lo = self.offset + other.offset;
        if hi < lo {
            let mass = self.total_mass() * other.total_mass();
            return Ok(Self::raw(lo, vec![0.0], 0.0, mass, "empty window".into()));
        }
        let keep = ((hi - lo + 1) as usize).min(self.len() + other.len() - 1);
        Self::check_budget(keep)?;
        let a_keep = ((hi - lo + 1) as usize).min(self.len());
        let b_keep = ((hi - lo + 1) as usize).min(other.len());
        let probs = convolve_slices(&self.probs[..a_keep], &other.probs[..b_keep], keep);
        let kept: f64 = probs.iter().copied().collect::<NeumaierSum>().value();
        let total = self.total_mass() * other.total_mass();
        Ok(Self::raw(
            lo,
            probs,
            0.0,
            (total - kept).max(0.0),
            format!("({}) * ({})", self.label, other.label),
        ))
    }

    /// Law of `X_1 + ... + X_n` by binary exponentiation.
    pub fn self_convolve(&self, n: u64) -> Result<Self> {
        self.power(n, None)
    }

    /// As [`self_convolve`](Self::self_convolve), keeping support `<= hi`.
    pub fn self_convolve_window(&self, n: u64, hi: i64) -> Result<Self> {
        self.power(n, Some(hi))
    }

    fn power(&self, n: u64, hi: Option<i64>) -> Result<Self> {
        let full = (self.len() as u128 - 1) * n as u128 + 1;
        let need = match hi {
            Some(h) => full.min((h - self.offset.saturating_mul(n as i64) + 1).max(1) as u128),
            None => full,
        };
        if need > MAX_SUPPORT as u128 {
            return Err(Error::SupportOverflow {
                len: need.min(usize::MAX as u128) as usize,
                budget: MAX_SUPPORT,
            });
        }
        let mul = |a: &Self, b: &Self| match hi {
            Some(h) => a.convolve_window(b, h),
            None => a.convolve(b),
        };
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => mul(&r, &base)?,
                });
            }
            k >>= 1;
            if k > 0 {
                base = mul(&base, &base)?;
            }
        }
        let mut out = result.unwrap_or_else(|| Self::point_mass(0));
        out.label = format!("S_{n}[{}]", self.label);
        Ok(out)
    }

    /// Move the mass above `hi` into the right tail.
    pub fn truncate_right(&self, hi: i64) -> Self {
        if hi >= self.max_support() {
            return self.clone();
        }
        if hi < self.offset {
            let mut out = Self::raw(self.offset, vec![0.0], self.tail_left, 0.0, self.label.clone());
            out.tail_right = self.total_mass() - self.tail_left;
            return out;
        }
        let keep = (hi - self.offset + 1) as usize;
        let dropped: NeumaierSum = self.probs[keep..].iter().copied().collect();
        let mut out = Self::raw(
            self.offset,
            self.probs[..keep].to_vec(),
            self.tail_left,
            self.tail_right + dropped.value(),
            self.label.clone(),
        );
        out.notes = self.notes.clone();
        out
    }

    /// Keep the support inside `[lo, hi]`, moving the rest into the tails.
    pub fn clip(&self, lo: i64, hi: i64) -> Self {
        let right = self.truncate_right(hi);
        if lo <= right.offset {
            return right;
        }
        let drop = ((lo - right.offset) as usize).min(right.probs.len());
        let dropped: NeumaierSum = right.probs[..drop].iter().copied().collect();
        let rest = if drop < right.probs.len() {
            right.probs[drop..].to_vec()
        } else {
            vec![0.0]
        };
        let mut out = Self::raw(
            lo,
            rest,
            right.tail_left + dropped.value(),
            right.tail_right,
            right.label.clone(),
        );
        out.notes = right.notes;
        out
    }

    /// Sub-probability `P(X = t, X < y)`; not a law, used by the bound
    /// computations.
    pub(crate) fn restrict_below(&self, y: i64) -> Self {
        let mut probs = self.probs.clone();
        for (i, p) in probs.iter_mut().enumerate() {
            if self.offset + i as i64 >= y {
                *p = 0.0;
            }
        }
        Self::raw(self.offset, probs, 0.0, 0.0, format!("{}|<{y}", self.label))
    }

    /// Shift the support by `k`.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.offset += k;
        out
    }

    /// `(t, P(X = t))` pairs over the retained window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.offset + i as i64, p))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}
