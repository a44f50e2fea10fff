//! Local limit theorem errors `τ_n = sup_s |b_n P(S_n = s) - g((s - a_n)/b_n)|`.

use serde::{Deserialize, Serialize};

use crate::asym::{normal_density, StableLaw, INVERSION_RANGE};
use crate::error::{Error, Result};
use crate::lattice::{
    build_power_law, norming_b, LatticePmf, Law, PowerLawSpec, Side, TruncationPolicy,
};

/// Largest window used for the exact `S_n`.
const MAX_WINDOW: i64 = 1 << 22;
/// Window half-widths in units of `b_n`.
const ONE_SIDED_WIDTH: f64 = 60.0;
const TWO_SIDED_WIDTH: f64 = 200.0;
/// Above this many evaluation points the stable density is interpolated
/// from a table instead of inverted at every point.
const DIRECT_EVALUATIONS: usize = 2000;
const TABLE_NODES: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitDensity {
    Stable { index: f64, c_plus: f64, c_minus: f64 },
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LltReport {
    pub n: u64,
    pub a_n: f64,
    pub b_n: f64,
    /// Supremum over the computed window.
    pub tau: f64,
    pub argmax: i64,
    /// Bound on `b_n |P̂(S_n = s) - P(S_n = s)|` for the computed values.
    pub value_error: f64,
    /// `P(S_n)` outside the window, where no deviation was evaluated.
    pub outside_mass: f64,
    /// Larger limit density value at the two window edges.
    pub edge_density: f64,
    pub window: (i64, i64),
    pub limit: LimitDensity,
}

struct Setup {
    a_n: f64,
    b_n: f64,
    limit: LimitDensity,
    sums: LatticePmf,
    /// Mass whose omission can lower the computed point values.
    lost_mass: f64,
}

fn check_span(p: &LatticePmf) -> Result<()> {
    match p.span() {
        0 => Err(Error::DegenerateLaw(format!("{} is a point mass", p.label()))),
        1 => Ok(()),
        span => Err(Error::LatticeSpan { span }),
    }
}

/// `S_n` for a law on both half-lines, clipping every partial sum to a
/// window around its mean; the clipped mass is carried in the tails.
fn clipped_power(x: &LatticePmf, n: u64, mu: f64, half_width: i64) -> Result<LatticePmf> {
    let clip = |p: LatticePmf, k: u64| {
        let c = (k as f64 * mu).round() as i64;
        p.clip(c - half_width, c + half_width)
    };
    let mut result: Option<(LatticePmf, u64)> = None;
    let mut base = (x.clone(), 1u64);
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some((r, m)) => (clip(r.convolve(&base.0)?, m + base.1), m + base.1),
            });
        }
        k >>= 1;
        if k > 0 {
            let m = 2 * base.1;
            base = (clip(base.0.convolve(&base.0)?, m), m);
        }
    }
    Ok(result.map(|r| r.0).unwrap_or_else(|| LatticePmf::point_mass(0)))
}

fn setup_power_law(spec: &PowerLawSpec, n: u64) -> Result<Setup> {
    let alpha = spec.alpha;
    let law = Law::PowerLaw(*spec);
    let nf = n as f64;
    if alpha == 2.0 {
        return Err(Error::Unsupported(
            "no centering/norming pair is implemented for α = 2".into(),
        ));
    }
    let b_n = norming_b(&law, nf)?;
    let mu = if alpha > 2.0 { spec.mean()? } else { 0.0 };
    let a_n = nf * mu;
    let limit = if alpha < 3.0 {
        let right = spec.right_constant();
        let left = match spec.side {
            Side::OneSided => 0.0,
            Side::TwoSided => spec.left_constant(),
        };
        LimitDensity::Stable {
            index: alpha - 1.0,
            c_plus: right / (right + left),
            c_minus: left / (right + left),
        }
    } else {
        LimitDensity::Gaussian
    };
    let sums = if spec.is_nonnegative() {
        let hi = ((a_n + ONE_SIDED_WIDTH * b_n).ceil() as i64).clamp(2, MAX_WINDOW);
        let x = build_power_law(spec, &TruncationPolicy::keep_tail(hi))?;
        // Exact on the window: every summand of a sum <= hi is <= hi.
        (x.self_convolve_window(n, hi)?, 0.0)
    } else {
        let w = ((TWO_SIDED_WIDTH * b_n).ceil() as i64).clamp(2, MAX_WINDOW / 4);
        let x = build_power_law(spec, &TruncationPolicy::keep_tail(w))?;
        let s = clipped_power(&x, n, mu, w)?;
        let lost = s.tail_mass();
        (s, lost)
    };
    let (sums, lost_mass) = sums;
    Ok(Setup {
        a_n,
        b_n,
        limit,
        sums,
        lost_mass,
    })
}

fn setup_finite(p: &LatticePmf, n: u64) -> Result<Setup> {
    check_span(p)?;
    let law = Law::Finite(p.clone());
    let (mu, _) = law.mean_sd()?;
    let b_n = norming_b(&law, n as f64)?;
    let sums = p.self_convolve(n)?;
    Ok(Setup {
        a_n: n as f64 * mu,
        b_n,
        limit: LimitDensity::Gaussian,
        lost_mass: sums.tail_mass(),
        sums,
    })
}

/// Cubic Lagrange interpolation on a uniform grid.
struct Table {
    z0: f64,
    h: f64,
    values: Vec<f64>,
}

impl Table {
    fn new(law: &StableLaw, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        let h = (hi - lo) / (nodes - 1) as f64;
        let z0 = lo - h;
        let values = (0..nodes + 2)
            .map(|j| law.density(z0 + j as f64 * h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { z0, h, values })
    }

    fn eval(&self, z: f64) -> f64 {
        let u = (z - self.z0) / self.h;
        let j = (u.floor() as usize).clamp(1, self.values.len() - 3);
        let s = u - j as f64;
        let (p0, p1, p2, p3) = (
            self.values[j - 1],
            self.values[j],
            self.values[j + 1],
            self.values[j + 2],
        );
        -s * (s - 1.0) * (s - 2.0) / 6.0 * p0 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * p1
            - (s + 1.0) * s * (s - 2.0) / 2.0 * p2
            + (s + 1.0) * s * (s - 1.0) / 6.0 * p3
    }
}

/// `τ_n` for a power-law spec (truncated and convolved exactly on a
/// window) or a finite pmf (convolved exactly).
pub fn llt_error(law: &Law, n: u64) -> Result<LltReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let setup = match law {
        Law::PowerLaw(spec) => setup_power_law(spec, n)?,
        Law::Finite(p) => setup_finite(p, n)?,
    };
    let Setup {
        a_n,
        b_n,
        limit,
        sums,
        lost_mass,
    } = setup;
    let z_of = |s: i64| (s as f64 - a_n) / b_n;
    let (lo, hi) = (sums.min_support(), sums.max_support());

    let density: Box<dyn Fn(f64) -> Result<f64>> = match limit {
        LimitDensity::Gaussian => Box::new(|z| Ok(normal_density(z))),
        LimitDensity::Stable {
            index,
            c_plus,
            c_minus,
        } => {
            let law = StableLaw::new(index, c_plus, c_minus)?;
            let zl = z_of(lo).max(-INVERSION_RANGE);
            let zh = z_of(hi).min(INVERSION_RANGE);
            let inside = if zh > zl { ((zh - zl) * b_n) as usize } else { 0 };
            if inside > DIRECT_EVALUATIONS {
                let table = Table::new(&law, zl, zh, TABLE_NODES)?;
                Box::new(move |z| {
                    if z.abs() <= INVERSION_RANGE {
                        Ok(table.eval(z))
                    } else {
                        law.density(z)
                    }
                })
            } else {
                Box::new(move |z| law.density(z))
            }
        }
    };

    let mut tau = 0.0f64;
    let mut argmax = lo;
    for (s, p) in sums.iter() {
        let dev = (b_n * p - density(z_of(s))?).abs();
        if dev > tau {
            tau = dev;
            argmax = s;
        }
    }
    let edge = density(z_of(lo - 1))?.max(density(z_of(hi + 1))?).max(0.0);
    Ok(LltReport {
        n,
        a_n,
        b_n,
        tau,
        argmax,
        value_error: b_n * lost_mass,
        outside_mass: sums.tail_mass(),
        edge_density: edge,
        window: (lo, hi),
        limit,
    })
}

/// `min_{1 < A < ln² n} T(A)` with
/// `T(A) = A⁵/n + A³ (h + ln ln n) / ln n + e^{-c₁ A}`.
pub fn alpha3_bound_shape(n: u64, h: f64, c1: f64) -> f64 {
    let nf = n as f64;
    let ln = nf.ln();
    let upper = ln * ln;
    if !(upper > 1.0) {
        return f64::INFINITY;
    }
    let t = |a: f64| a.powi(5) / nf + a.powi(3) * (h + ln.ln().max(0.0)) / ln + (-c1 * a).exp();
    (1..1000)
        .map(|i| 1.0 + (upper - 1.0) * i as f64 / 1000.0)
        .map(t)
        .fold(f64::INFINITY, f64::min)
}

/// `h(k) = Σ_{1≤j≤k} (|η_j| + |η_{-j}|)/j` where
/// `P(X = ±j) = (c± + η_{±j}) j^-3`.
pub fn alpha3_h(spec: &PowerLawSpec, k: u64) -> f64 {
    let a = spec.right_constant();
    let b = match spec.side {
        Side::OneSided => 0.0,
        Side::TwoSided => spec.left_constant(),
    };
    (1..=k)
        .map(|j| {
            let jf = j as f64;
            let c = jf.powi(3);
            let ep = c * spec.prob(j as i64) - a;
            let em = c * spec.prob(-(j as i64)) - b;
            (ep.abs() + em.abs()) / jf
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_is_degenerate() {
        let err = llt_error(&Law::Finite(LatticePmf::point_mass(2)), 4).unwrap_err();
        assert!(matches!(err, Error::DegenerateLaw(_)));
    }

    #[test]
    fn even_support_has_span_two() {
        let p = LatticePmf::new(0, vec![0.5, 0.0, 0.5], "x").unwrap();
        let err = llt_error(&Law::Finite(p), 4).unwrap_err();
        assert_eq!(err, Error::LatticeSpan { span: 2 });
    }

    #[test]
    fn bernoulli_gaussian_branch_improves() {
        let law = Law::Finite(LatticePmf::bernoulli(0.5).unwrap());
        let small = llt_error(&law, 16).unwrap();
        let large = llt_error(&law, 1024).unwrap();
        assert!(large.tau < small.tau, "{} vs {}", large.tau, small.tau);
        assert!(small.tau >= 0.0);
    }

    #[test]
    fn alpha_two_and_a_half_improves() {
        let law = Law::PowerLaw(PowerLawSpec::one_sided(2.5));
        let t4 = llt_error(&law, 4).unwrap();
        let t1024 = llt_error(&law, 1024).unwrap();
        assert!(t1024.tau < t4.tau, "{} vs {}", t1024.tau, t4.tau);
        assert_eq!(t1024.value_error, 0.0);
    }

    #[test]
    fn interpolation_table_is_accurate() {
        let law = StableLaw::one_sided(1.5).unwrap();
        let table = Table::new(&law, -10.0, 20.0, 2000).unwrap();
        for z in [-3.3, 0.123, 1.0, 7.77] {
            let d = law.density(z).unwrap();
            assert!((table.eval(z) - d).abs() < 1e-8, "z={z}");
        }
    }

    #[test]
    fn bound_shape_decreases_eventually() {
        let a = alpha3_bound_shape(1 << 10, 0.0, 1.0);
        let b = alpha3_bound_shape(1 << 30, 0.0, 1.0);
        assert!(b < a);
    }

    #[test]
    fn exact_power_law_has_zero_h() {
        use crate::lattice::Normalization;
        let spec = PowerLawSpec::two_sided(3.0, 0.2, 0.2).with_normalization(Normalization::GivenConstant(1.0));
        assert!(alpha3_h(&spec, 100) < 1e-12);
    }
}
