use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate_to_infinity, NeumaierSum};

use super::pmf::{LatticePmf, MAX_SUPPORT};

/// Which half-lines carry mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Support `{1, 2, ...}`.
    OneSided,
    /// Support `Z`, constant `a` on the right and `b` on the left.
    TwoSided,
}

/// Slowly varying factor `L(t) = C * ln(t + e)^rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowlyVarying {
    pub c: f64,
    pub rho: f64,
}

impl Default for SlowlyVarying {
    fn default() -> Self {
        Self { c: 1.0, rho: 0.0 }
    }
}

impl SlowlyVarying {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if self.rho == 0.0 {
            self.c
        } else {
            self.c * (t + std::f64::consts::E).ln().powf(self.rho)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Divide by the exact normalizing series.
    Exact,
    /// Divide by a user supplied constant; any deficit goes to `P(X = 0)`.
    GivenConstant(f64),
}

/// Parametric heavy-tailed lattice law:
/// `P(X = t) = a t^-alpha L(t) / Z` for `t >= 1`, and `b |t|^-alpha L(|t|) / Z`
/// for `t <= -1` when two-sided.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSpec {
    pub alpha: f64,
    pub side: Side,
    pub a: f64,
    pub b: f64,
    pub sv: SlowlyVarying,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    KeepTailMass,
    Renormalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub t_max: i64,
    pub mode: TruncationMode,
    /// When set, the smallest cut-off not exceeding `t_max` whose tail mass
    /// is at most this value is used.
    pub target_tail: Option<f64>,
}

impl TruncationPolicy {
    pub fn keep_tail(t_max: i64) -> Self {
        Self {
            t_max,
            mode: TruncationMode::KeepTailMass,
            target_tail: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max < 1 {
            return Err(invalid(format!("t_max must be >= 1, got {}", self.t_max)));
        }
        if let Some(tt) = self.target_tail {
            if !(tt > 0.0 && tt < 1.0) {
                return Err(invalid(format!("target_tail must lie in (0,1), got {tt}")));
            }
        }
        Ok(())
    }
}

// Direct summation length before switching to the Euler–Maclaurin tail.
const EM_START: u64 = 4096;

/// `sum_{t >= from} t^-s ln(t+e)^rho` for `s > 1`, `from >= 1`.
pub(crate) fn power_log_tail(s: f64, rho: f64, from: u64) -> f64 {
    debug_assert!(s > 1.0 && from >= 1);
    let m = from.max(EM_START);
    let f = |t: f64| t.powf(-s) * (t + std::f64::consts::E).ln().powf(rho);
    let mut acc = NeumaierSum::new();
    // Smallest terms first.
    for t in (from..m).rev() {
        acc.add(f(t as f64));
    }
    let mf = m as f64;
    let fm = f(mf);
    let log_m = (mf + std::f64::consts::E).ln();
    let dfm = fm * (-s / mf + rho / ((mf + std::f64::consts::E) * log_m));
    let integral = if rho == 0.0 {
        mf.powf(1.0 - s) / (s - 1.0)
    } else {
        let g = |u: f64| {
            let x = mf * u.exp();
            ((1.0 - s) * u).exp() * (x + std::f64::consts::E).ln().powf(rho)
        };
        let r = integrate_to_infinity(g, 0.0, 0.0, 1e-15)
            .or_else(|_| integrate_to_infinity(g, 0.0, 0.0, 1e-12))
            .expect("tail integral of a regularly varying function");
        mf.powf(1.0 - s) * r.value
    };
    acc.add(integral);
    acc.add(0.5 * fm);
    acc.add(-dfm / 12.0);
    acc.value()
}

impl PowerLawSpec {
    pub fn one_sided(alpha: f64) -> Self {
        Self {
            alpha,
            side: Side::OneSided,
            a: 1.0,
            b: 0.0,
            sv: SlowlyVarying::default(),
            normalization: Normalization::Exact,
        }
    }

    pub fn two_sided(alpha: f64, a: f64, b: f64) -> Self {
        Self {
            alpha,
            side: Side::TwoSided,
            a,
            b,
            sv: SlowlyVarying::default(),
            normalization: Normalization::Exact,
        }
    }

    pub fn with_slowly_varying(mut self, c: f64, rho: f64) -> Self {
        self.sv = SlowlyVarying { c, rho };
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::NonConvergentNormalization { alpha: self.alpha });
        }
        if !(self.a >= 0.0 && self.b >= 0.0) || !(self.a + self.b > 0.0) {
            return Err(invalid("tail constants need a, b >= 0 and a + b > 0"));
        }
        if self.side == Side::OneSided && self.a <= 0.0 {
            return Err(invalid("one-sided law needs a > 0"));
        }
        if !(self.sv.c > 0.0) || !(-3.0..=3.0).contains(&self.sv.rho) {
            return Err(invalid("slowly varying factor needs C > 0 and rho in [-3, 3]"));
        }
        if let Normalization::GivenConstant(z) = self.normalization {
            if !(z > 0.0) {
                return Err(invalid("normalizing constant must be positive"));
            }
        }
        Ok(())
    }

    fn left_weight(&self) -> f64 {
        match self.side {
            Side::OneSided => 0.0,
            Side::TwoSided => self.b,
        }
    }

    /// `sum_{t >= from} t^k t^-alpha L(t)` (unit tail constant).
    pub(crate) fn unit_series(&self, k: f64, from: u64) -> f64 {
        self.sv.c * power_log_tail(self.alpha - k, self.sv.rho, from.max(1))
    }

    /// Normalizing constant `Z`.
    pub fn normalizer(&self) -> f64 {
        match self.normalization {
            Normalization::Exact => (self.a + self.left_weight()) * self.unit_series(0.0, 1),
            Normalization::GivenConstant(z) => z,
        }
    }

    /// Mass assigned to zero.
    pub fn zero_mass(&self) -> Result<f64> {
        let nonzero = (self.a + self.left_weight()) * self.unit_series(0.0, 1) / self.normalizer();
        let rem = 1.0 - nonzero;
        match (self.side, self.normalization) {
            (_, Normalization::Exact) => Ok(0.0),
            (Side::OneSided, _) if rem.abs() <= 1e-12 => Ok(0.0),
            (Side::OneSided, _) => Err(invalid(format!(
                "one-sided law with given constant has total mass {nonzero}"
            ))),
            (Side::TwoSided, _) if rem >= -1e-12 => Ok(rem.max(0.0)),
            (Side::TwoSided, _) => Err(invalid(format!(
                "given constant leaves negative mass {rem} at zero"
            ))),
        }
    }

    /// `P(X = t)` on the untruncated law.
    pub fn prob(&self, t: i64) -> f64 {
        let z = self.normalizer();
        match t.cmp(&0) {
            std::cmp::Ordering::Greater => {
                let x = t as f64;
                self.a * x.powf(-self.alpha) * self.sv.eval(x) / z
            }
            std::cmp::Ordering::Less => {
                let x = (-t) as f64;
                self.left_weight() * x.powf(-self.alpha) * self.sv.eval(x) / z
            }
            std::cmp::Ordering::Equal => self.zero_mass().unwrap_or(0.0),
        }
    }

    /// `L_1(t)` with `P(X = t) = t^-alpha L_1(t)` on the right half-line.
    pub fn right_slowly_varying(&self, t: f64) -> f64 {
        self.a * self.sv.eval(t) / self.normalizer()
    }

    /// Limit of `t^alpha P(X = t)` when `rho = 0`.
    pub fn right_constant(&self) -> f64 {
        self.a * self.sv.c / self.normalizer()
    }

    pub fn left_constant(&self) -> f64 {
        self.left_weight() * self.sv.c / self.normalizer()
    }

    /// `P(X > x)` on the untruncated law.
    pub fn tail_right(&self, x: i64) -> f64 {
        let z = self.normalizer();
        if x >= 0 {
            return self.a * self.unit_series(0.0, x as u64 + 1) / z;
        }
        let right = self.a * self.unit_series(0.0, 1) / z;
        let p0 = self.zero_mass().unwrap_or(0.0);
        let lw = self.left_weight();
        if x == -1 || lw == 0.0 {
            return right + p0;
        }
        // Left points t in (x, -1], i.e. |t| in [1, -x-1].
        let m = (-x - 1) as u64;
        let left_total = lw * self.unit_series(0.0, 1) / z;
        let left_far = lw * self.unit_series(0.0, m + 1) / z;
        right + p0 + (left_total - left_far)
    }

    /// `P(|X| > x)` for real `x >= 0`.
    pub fn tail_abs(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        let from = x.floor() as u64 + 1;
        (self.a + self.left_weight()) * self.unit_series(0.0, from) / self.normalizer()
    }

    /// `sum_{|t| > t_max} |t|^k P(X = t)` split into (left, right).
    pub fn tail_moment(&self, k: u32, t_max: i64) -> Result<(f64, f64)> {
        if (k as f64) >= self.alpha - 1.0 {
            return Err(Error::UnboundedTailError {
                order: k,
                alpha: Some(self.alpha),
                tail_mass: 1.0,
            });
        }
        let z = self.normalizer();
        let s = self.unit_series(k as f64, t_max.max(0) as u64 + 1);
        Ok((self.left_weight() * s / z, self.a * s / z))
    }

    /// `E X^k` of the untruncated law.
    pub fn raw_moment(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(1.0);
        }
        if (k as f64) >= self.alpha - 1.0 {
            return Err(Error::UnboundedTailError {
                order: k,
                alpha: Some(self.alpha),
                tail_mass: 1.0,
            });
        }
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok((self.a + sign * self.left_weight()) * self.unit_series(k as f64, 1) / self.normalizer())
    }

    /// Exact mean of the untruncated law.
    pub fn mean(&self) -> Result<f64> {
        if self.alpha <= 2.0 {
            return Err(Error::UnboundedTailError {
                order: 1,
                alpha: Some(self.alpha),
                tail_mass: 1.0,
            });
        }
        Ok((self.a - self.left_weight()) * self.unit_series(1.0, 1) / self.normalizer())
    }

    pub fn second_moment(&self) -> Result<f64> {
        if self.alpha <= 3.0 {
            return Err(Error::UnboundedTailError {
                order: 2,
                alpha: Some(self.alpha),
                tail_mass: 1.0,
            });
        }
        Ok((self.a + self.left_weight()) * self.unit_series(2.0, 1) / self.normalizer())
    }

    pub fn variance(&self) -> Result<f64> {
        let m = self.mean()?;
        Ok(self.second_moment()? - m * m)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.side == Side::OneSided || self.b == 0.0
    }

    pub fn describe(&self) -> String {
        let side = match self.side {
            Side::OneSided => "one-sided",
            Side::TwoSided => "two-sided",
        };
        format!(
            "power-law(alpha={}, {side}, a={}, b={}, C={}, rho={})",
            self.alpha, self.a, self.b, self.sv.c, self.sv.rho
        )
    }
}

/// Truncated power-law pmf.
///
/// One-sided laws live on `{1..t_max}`; two-sided laws on `{-t_max..t_max}`
/// with `P(0)` carrying whatever the normalization leaves over. The mass
/// beyond the cut-off is reported as tail mass (or dropped when the policy
/// renormalizes).
pub fn build_power_law(spec: &PowerLawSpec, policy: &TruncationPolicy) -> Result<LatticePmf> {
    spec.validate()?;
    policy.validate()?;
    let t_max = match policy.target_tail {
        None => policy.t_max,
        Some(target) => {
            let total_tail = |t: i64| spec.tail_abs(t as f64);
            if total_tail(policy.t_max) > target {
                return Err(Error::TruncationTooSmall {
                    t_max: policy.t_max,
                    target,
                    limit: policy.t_max,
                });
            }
            // Smallest cut-off meeting the target, by bisection.
            let (mut lo, mut hi) = (0i64, policy.t_max);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if total_tail(mid) <= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi.max(1)
        }
    };
    let width = match spec.side {
        Side::OneSided => t_max as u128 + 1,
        Side::TwoSided => 2 * t_max as u128 + 1,
    };
    if width > MAX_SUPPORT as u128 {
        return Err(Error::SupportOverflow {
            len: usize::try_from(width).unwrap_or(usize::MAX),
            budget: MAX_SUPPORT,
        });
    }
    let z = spec.normalizer();
    let p0 = spec.zero_mass()?;
    let right: Vec<f64> = (1..=t_max)
        .map(|t| {
            let x = t as f64;
            spec.a * x.powf(-spec.alpha) * spec.sv.eval(x) / z
        })
        .collect();
    let tail_unit = spec.unit_series(0.0, t_max as u64 + 1);
    let tail_r = spec.a * tail_unit / z;
    let mut notes = Vec::new();
    let (offset, mut probs, tail_l) = match spec.side {
        Side::OneSided => {
            notes.push("support starts at 1; P(X=0)=0".to_string());
            (1, right, 0.0)
        }
        Side::TwoSided => {
            let lw = spec.left_weight();
            let mut v: Vec<f64> = (1..=t_max)
                .rev()
                .map(|t| {
                    let x = t as f64;
                    lw * x.powf(-spec.alpha) * spec.sv.eval(x) / z
                })
                .collect();
            v.push(p0);
            v.extend_from_slice(&right);
            notes.push(format!("P(X=0) = {p0:e} absorbs the normalization remainder"));
            (-t_max, v, lw * tail_unit / z)
        }
    };
    let (tail_l, tail_r) = match policy.mode {
        TruncationMode::KeepTailMass => (tail_l, tail_r),
        TruncationMode::Renormalize => {
            let s: NeumaierSum = probs.iter().copied().collect();
            let s = s.value();
            probs.iter_mut().for_each(|p| *p /= s);
            notes.push("renormalized after truncation".to_string());
            (0.0, 0.0)
        }
    };
    let mut pmf = LatticePmf::with_tails(offset, probs, tail_l, tail_r, spec.describe())?;
    pmf.source = Some(*spec);
    pmf.truncation = Some(TruncationPolicy { t_max, ..*policy });
    pmf.notes = notes;
    Ok(pmf)
}
