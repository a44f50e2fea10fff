//! Stable laws with index in `(0, 1) ∪ (1, 2)` given by their Lévy tails.
//!
//! A law with right tail weight `c₊` and left tail weight `c₋` has Lévy
//! measure `ν c± |x|^{-ν-1} dx` on either half-line, which gives
//!
//! ```text
//! log φ(λ) = -Γ(1-ν) |λ|^ν [ (c₊+c₋) cos(πν/2) - i sgn(λ) (c₊-c₋) sin(πν/2) ]
//! ```
//!
//! For `ν < 1` the law is not centered; for `ν > 1` it has mean zero.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::{gamma, integrate, integrate_panels, ln_gamma};

use std::f64::consts::PI;

/// Densities are inverted on `|z| <= INVERSION_RANGE`; beyond it the
/// asymptotic series is used.
pub const INVERSION_RANGE: f64 = 50.0;

const PANEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableLaw {
    /// Stability index `ν`.
    pub index: f64,
    pub c_plus: f64,
    pub c_minus: f64,
}

impl StableLaw {
    /// Totally skewed law with Lévy tail `x^-ν` on the right: the limit
    /// of `n^{-1/ν} S_n` when `P(X > x) ~ x^-ν`.
    pub fn one_sided(index: f64) -> Result<Self> {
        Self::new(index, 1.0, 0.0)
    }

    pub fn new(index: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(index > 0.0 && index < 2.0) || index == 1.0 {
            return Err(invalid(format!("stable index {index} outside (0,1) ∪ (1,2)")));
        }
        if !(c_plus >= 0.0 && c_minus >= 0.0 && c_plus + c_minus > 0.0) {
            return Err(invalid("stable tail weights must be nonnegative, not both zero"));
        }
        Ok(Self {
            index,
            c_plus,
            c_minus,
        })
    }

    fn kappa(&self) -> f64 {
        gamma(1.0 - self.index)
    }

    /// Real and imaginary coefficients `(K, B)` with
    /// `log φ(λ) = (-K + i B) λ^ν` for `λ > 0`.
    fn coefficients(&self) -> (f64, f64) {
        let nu = self.index;
        let g = self.kappa();
        let k = g * (self.c_plus + self.c_minus) * (PI * nu / 2.0).cos();
        let b = g * (self.c_plus - self.c_minus) * (PI * nu / 2.0).sin();
        (k, b)
    }

    pub fn log_cf(&self, lambda: f64) -> Complex64 {
        if lambda == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let (k, b) = self.coefficients();
        let p = lambda.abs().powf(self.index);
        Complex64::new(-k * p, lambda.signum() * b * p)
    }

    pub fn cf(&self, lambda: f64) -> Complex64 {
        self.log_cf(lambda).exp()
    }

    pub fn is_one_sided(&self) -> bool {
        self.index < 1.0 && self.c_minus == 0.0
    }

    /// Density by Fourier inversion for `|z| <= INVERSION_RANGE`, by the
    /// asymptotic series beyond.
    pub fn density(&self, z: f64) -> Result<f64> {
        if z.abs() > INVERSION_RANGE {
            return Ok(self.tail_density(z));
        }
        self.invert(z)
    }

    /// `(1/π) ∫_0^∞ e^{-K λ^ν} cos(B λ^ν - λ z) dλ`.
    pub fn invert(&self, z: f64) -> Result<f64> {
        let (k, b) = self.coefficients();
        let nu = self.index;
        // e^{-K λ^ν} < 1e-18 beyond this point.
        let upper = (41.5 / k).powf(1.0 / nu);
        let f = |l: f64| {
            let p = l.powf(nu);
            (-k * p).exp() * (b * p - l * z).cos()
        };
        // Panels no wider than half an oscillation of the e^{-iλz} factor,
        // refined near the origin where λ^ν is not smooth.
        let width = if z == 0.0 { upper / 64.0 } else { (PI / z.abs()).min(upper / 64.0) };
        let mut breaks = vec![0.0];
        let mut x = upper.min(width) * 1e-6;
        while x < width {
            breaks.push(x);
            x *= 8.0;
        }
        let mut x = width;
        while x < upper {
            breaks.push(x);
            x += width;
        }
        breaks.push(upper);
        let max_panels = 4 * breaks.len() + 2000;
        let r = integrate_panels(&f, &breaks, PANEL_TOL, 0.0, max_panels)?;
        Ok(r.value / PI)
    }

    /// Leading terms of the large-`|z|` expansion.
    pub fn tail_density(&self, z: f64) -> f64 {
        if self.is_one_sided() {
            if z <= 0.0 {
                return 0.0;
            }
            return one_sided_series(self.index, self.c_plus * self.kappa(), z, 40);
        }
        let c = if z > 0.0 { self.c_plus } else { self.c_minus };
        c * self.index * z.abs().powf(-self.index - 1.0)
    }

    /// `E Z^s` of a one-sided law by quadrature of `z^s g(z)` on the
    /// inverted density over `[0, INVERSION_RANGE]`, plus the termwise
    /// integral of the asymptotic series beyond.
    pub fn frac_moment(&self, s: f64) -> Result<f64> {
        if !self.is_one_sided() {
            return Err(Error::Unsupported(
                "fractional moments are implemented for one-sided laws".into(),
            ));
        }
        if !(s >= 0.0) {
            return Err(invalid("moment order must be nonnegative"));
        }
        if s >= self.index {
            return Err(Error::DivergentMoment {
                order: s,
                index: self.index,
            });
        }
        let failure = std::cell::Cell::new(None);
        let f = |z: f64| {
            if z <= 0.0 {
                return 0.0;
            }
            match self.invert(z) {
                Ok(g) => z.powf(s) * g.max(0.0),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let breaks = [0.0, 0.05, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, INVERSION_RANGE];
        let body = integrate_panels(&f, &breaks, 1e-9, 1e-10, 400)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let tail = one_sided_series_moment_tail(
            self.index,
            self.c_plus * self.kappa(),
            s,
            INVERSION_RANGE,
            40,
        );
        Ok(body.value + tail)
    }

    /// Closed form `E Z^s = Γ(1 - s/ν) κ^{s/ν} / Γ(1 - s)`, `κ = Γ(1-ν)`,
    /// from the Laplace transform `E e^{-uZ} = exp(-κ u^ν)`.
    pub fn frac_moment_closed_form(&self, s: f64) -> Result<f64> {
        if !self.is_one_sided() {
            return Err(Error::Unsupported("closed form needs a one-sided law".into()));
        }
        if s >= self.index {
            return Err(Error::DivergentMoment {
                order: s,
                index: self.index,
            });
        }
        let nu = self.index;
        let scale = self.c_plus * self.kappa();
        Ok((ln_gamma(1.0 - s / nu) - ln_gamma(1.0 - s) + (s / nu) * scale.ln()).exp())
    }

    /// Draw from a one-sided law (Kanter's representation).
    pub fn sample_one_sided<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        debug_assert!(self.is_one_sided());
        let nu = self.index;
        let u = PI * rng.random::<f64>();
        let e = -(1.0 - rng.random::<f64>()).ln();
        let a = (nu * u).sin() / u.sin().powf(1.0 / nu);
        let b = (((1.0 - nu) * u).sin() / e).powf((1.0 - nu) / nu);
        let unit = a * b;
        (self.c_plus * self.kappa()).powf(1.0 / nu) * unit
    }
}

fn one_sided_series(nu: f64, kappa: f64, z: f64, terms: usize) -> f64 {
    // g(z) = (1/π) Σ_{k≥1} (-1)^{k+1} κ^k Γ(kν+1)/k! sin(kπν) z^{-kν-1}
    let mut acc = 0.0;
    for k in 1..=terms {
        let kf = k as f64;
        let log_mag = kf * kappa.ln() + ln_gamma(kf * nu + 1.0) - ln_gamma(kf + 1.0)
            - (kf * nu + 1.0) * z.ln();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * log_mag.exp() * (kf * PI * nu).sin();
        acc += term;
        if log_mag < -60.0 {
            break;
        }
    }
    acc / PI
}

fn one_sided_series_moment_tail(nu: f64, kappa: f64, s: f64, from: f64, terms: usize) -> f64 {
    // ∫_from^∞ z^s z^{-kν-1} dz = from^{s-kν} / (kν - s)
    let mut acc = 0.0;
    for k in 1..=terms {
        let kf = k as f64;
        let log_mag = kf * kappa.ln() + ln_gamma(kf * nu + 1.0) - ln_gamma(kf + 1.0)
            + (s - kf * nu) * from.ln();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * log_mag.exp() * (kf * PI * nu).sin() / (kf * nu - s);
        if log_mag < -60.0 {
            break;
        }
    }
    acc / PI
}

/// Characteristic function of the limit in the subcritical regime, written
/// in terms of the summand tail index `α ∈ (1, 2)`:
/// `exp{|λ|^{α-1} Γ(2-α) (sgn(λ) i sin((α-1)π/2) - cos((α-1)π/2))}`.
pub fn stable_cf(alpha: f64, lambda: f64) -> Result<Complex64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha = {alpha} outside (1,2)")));
    }
    Ok(StableLaw::one_sided(alpha - 1.0)?.cf(lambda))
}

/// Standard normal density.
pub fn normal_density(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `∫ g` over `[lo, hi]` with the density evaluated by inversion.
pub fn density_mass(law: &StableLaw, lo: f64, hi: f64) -> Result<f64> {
    let f = |z: f64| law.density(z).unwrap_or(f64::NAN);
    let r = integrate(f, lo, hi, 1e-9, 0.0)?;
    if r.value.is_nan() {
        return Err(Error::Quadrature("density evaluation failed".into()));
    }
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cf_values() {
        assert_eq!(stable_cf(1.5, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        let c = stable_cf(1.5, 1.0).unwrap();
        // Γ(1/2) = √π, bracket = (i - 1)/√2: modulus e^{-√(π/2)}, phase √(π/2).
        let m = (-(PI / 2.0).sqrt()).exp();
        assert!((c.norm() - m).abs() < 1e-14);
        assert!((m - 0.285557).abs() < 1e-6);
        assert!((c.arg() - (PI / 2.0).sqrt()).abs() < 1e-14);
        let p = stable_cf(1.3, 2.0).unwrap();
        let q = stable_cf(1.3, -2.0).unwrap();
        assert!((p.conj() - q).norm() < 1e-15);
    }

    #[test]
    fn cf_modulus_bounded_on_grid() {
        for law in [
            StableLaw::one_sided(0.5).unwrap(),
            StableLaw::new(1.5, 0.7, 0.3).unwrap(),
        ] {
            for i in 0..10_000 {
                let l = -50.0 + 0.01 * i as f64;
                assert!(law.cf(l).norm() <= 1.0 + 1e-15);
                assert!((law.cf(-l) - law.cf(l).conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn levy_half_density() {
        // κ = Γ(1/2) = √π gives E e^{-uZ} = e^{-√(π u)}: Lévy with c = π/2.
        let law = StableLaw::one_sided(0.5).unwrap();
        let levy = |z: f64| 0.5 * z.powf(-1.5) * (-PI / (4.0 * z)).exp();
        for z in [0.05, 0.3, 1.0, 2.5, 10.0, 49.0] {
            let g = law.density(z).unwrap();
            assert!((g - levy(z)).abs() < 1e-8, "z={z}: {g} vs {}", levy(z));
        }
        for z in [60.0, 500.0] {
            let g = law.density(z).unwrap();
            assert!((g - levy(z)).abs() < 1e-12 * levy(z).max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn density_is_normalized_and_nonnegative() {
        let two = StableLaw::new(1.5, 0.5, 0.5).unwrap();
        let mass = density_mass(&two, -50.0, 50.0).unwrap();
        // Tails beyond 50 carry about 2 c 50^{-1.5}.
        let tail = 2.0 * 0.5 * 50f64.powf(-1.5);
        assert!((mass + tail - 1.0).abs() < 1e-3);
        for i in -40..=40 {
            assert!(two.density(i as f64 * 1.25).unwrap() >= -1e-9);
        }
        let skew = StableLaw::new(1.7, 1.0, 0.0).unwrap();
        let m = density_mass(&skew, -50.0, 50.0).unwrap() + 50f64.powf(-1.7);
        assert!((m - 1.0).abs() < 1e-3);
    }

    #[test]
    fn frac_moment_matches_closed_form() {
        let law = StableLaw::one_sided(0.5).unwrap();
        let zero = law.frac_moment(0.0).unwrap();
        assert!((zero - 1.0).abs() < 1e-6, "{zero}");
        for s in [0.1, 0.25, 0.4] {
            let q = law.frac_moment(s).unwrap();
            let c = law.frac_moment_closed_form(s).unwrap();
            assert!((q - c).abs() < 1e-6 * c, "s={s}: {q} vs {c}");
        }
        assert!(law.frac_moment(0.45).unwrap() > law.frac_moment(0.25).unwrap());
        assert!(matches!(law.frac_moment(0.5), Err(Error::DivergentMoment { .. })));
    }

    #[test]
    fn sampler_matches_laplace_transform() {
        let law = StableLaw::one_sided(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let u = 0.7;
        let mean: f64 =
            (0..n).map(|_| (-u * law.sample_one_sided(&mut rng)).exp()).sum::<f64>() / n as f64;
        let exact = (-(PI * u).sqrt()).exp();
        assert!((mean - exact).abs() < 4.0 * 0.5 / (n as f64).sqrt());
    }
}
