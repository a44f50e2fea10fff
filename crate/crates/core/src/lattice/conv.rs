//! Convolution kernels on dense nonnegative sequences.
//!
//! Small products use direct summation, which keeps full relative accuracy
//! in the far tails. Large products go through an FFT on exponentially
//! tilted inputs: `(a e^{θ·}) * (b e^{θ·}) = (a * b) e^{θ·}`, so the tilt
//! lifts the power-law tails to the scale of the bulk before the transform
//! and the rounding noise no longer swamps them. Entries that still sit
//! near the rounding floor of the transform are recomputed by direct
//! summation, so every output keeps relative accuracy.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Work (multiply-adds) above which the transform path is used.
pub(crate) const DIRECT_WORK_LIMIT: usize = 1 << 24;
/// Both operands must have at least this many points for the transform path.
pub(crate) const FFT_MIN_LEN: usize = 1 << 10;
/// Largest `θ · length` the tilt may reach.
const MAX_TILT_EXPONENT: f64 = 600.0;
/// Transform values must exceed the rounding floor by this factor to be
/// used; smaller entries are recomputed by direct summation.
const RELATIVE_GUARD: f64 = 1e8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn direct_work(la: usize, lb: usize, keep: usize) -> usize {
    let (short, long) = if la < lb { (la, lb) } else { (lb, la) };
    // Upper bound is good enough for dispatch.
    short.saturating_mul(long.min(keep))
}

/// Convolution of `a` and `b`, keeping the first `keep` output entries.
pub(crate) fn convolve_slices(a: &[f64], b: &[f64], keep: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() || keep == 0 {
        return Vec::new();
    }
    let full = a.len() + b.len() - 1;
    let keep = keep.min(full);
    let use_fft = a.len().min(b.len()) >= FFT_MIN_LEN
        && direct_work(a.len(), b.len(), keep) > DIRECT_WORK_LIMIT;
    if use_fft {
        convolve_fft(a, b, keep)
    } else {
        convolve_direct(a, b, keep)
    }
}

pub(crate) fn convolve_direct(a: &[f64], b: &[f64], keep: usize) -> Vec<f64> {
    let full = a.len() + b.len() - 1;
    let keep = keep.min(full);
    let mut out = vec![0.0; keep];
    let (a, b) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 || i >= keep {
            continue;
        }
        let n = b.len().min(keep - i);
        let dst = &mut out[i..i + n];
        for (d, &y) in dst.iter_mut().zip(&b[..n]) {
            *d += x * y;
        }
    }
    out
}

/// Decay rate from the bulk maximum to the last positive entry.
fn tail_rate(x: &[f64]) -> f64 {
    let (imax, &xmax) = x
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let Some(last) = x.iter().rposition(|&v| v > 0.0) else {
        return 0.0;
    };
    if last <= imax || xmax <= 0.0 {
        return 0.0;
    }
    ((xmax / x[last]).ln() / (last - imax) as f64).max(0.0)
}

pub(crate) fn convolve_fft(a: &[f64], b: &[f64], keep: usize) -> Vec<f64> {
    let full = a.len() + b.len() - 1;
    let keep = keep.min(full);
    let size = full.next_power_of_two();

    let theta = tail_rate(a)
        .min(tail_rate(b))
        .min(MAX_TILT_EXPONENT / full as f64);

    let tilt = |x: &[f64]| -> (Vec<f64>, f64) {
        let v: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &p)| p * (theta * i as f64).exp())
            .collect();
        let s = v.iter().fold(0.0f64, |m, &p| m.max(p.abs()));
        let s = if s > 0.0 { s } else { 1.0 };
        (v.into_iter().map(|p| p / s).collect(), s)
    };
    let (ta, sa) = tilt(a);
    let (tb, sb) = tilt(b);

    // Pack both real sequences into one complex transform.
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (i, &v) in ta.iter().enumerate() {
        buf[i].re = v;
    }
    for (i, &v) in tb.iter().enumerate() {
        buf[i].im = v;
    }
    plan(size, false).process(&mut buf);

    let mut prod = vec![Complex64::new(0.0, 0.0); size];
    for k in 0..size {
        let zk = buf[k];
        let zn = buf[(size - k) % size].conj();
        let fa = (zk + zn) * 0.5;
        let fb = (zk - zn) * Complex64::new(0.0, -0.5);
        prod[k] = fa * fb;
    }
    plan(size, true).process(&mut prod);

    // Rounding error of the transform is bounded by a small multiple of
    // eps * log2(size) * |a|_2 |b|_2 in the tilted, scaled coordinates.
    // Entries that are not well above that floor are summed directly.
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let floor = 8.0 * f64::EPSILON * (size as f64).log2() * norm(&ta) * norm(&tb);
    let trusted = floor * RELATIVE_GUARD;
    (0..keep)
        .map(|k| {
            let tilted = prod[k].re / size as f64;
            if tilted >= trusted {
                tilted * sa * sb * (-theta * k as f64).exp()
            } else {
                direct_entry(a, b, k)
            }
        })
        .collect()
}

fn direct_entry(a: &[f64], b: &[f64], k: usize) -> f64 {
    let lo = k.saturating_sub(b.len() - 1);
    let hi = k.min(a.len() - 1);
    if lo > hi {
        return 0.0;
    }
    (lo..=hi).map(|i| a[i] * b[k - i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power_tail(len: usize, alpha: f64) -> Vec<f64> {
        let z: f64 = (1..=len).map(|t| (t as f64).powf(-alpha)).sum();
        (1..=len).map(|t| (t as f64).powf(-alpha) / z).collect()
    }

    #[test]
    fn fft_agrees_with_direct_in_absolute_terms() {
        let a = power_tail(3000, 2.5);
        let b = power_tail(2500, 3.0);
        let d = convolve_direct(&a, &b, usize::MAX);
        let f = convolve_fft(&a, &b, usize::MAX);
        assert_eq!(d.len(), f.len());
        let worst = d
            .iter()
            .zip(&f)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "max abs diff {worst:e}");
    }

    #[test]
    fn tilt_keeps_relative_accuracy_in_the_far_tail() {
        let a = power_tail(4096, 6.0);
        let d = convolve_direct(&a, &a, 4096);
        let f = convolve_fft(&a, &a, 4096);
        // Values near the end are ~1e-19; an untilted transform would be
        // pure noise there.
        for k in [1000usize, 2000, 4000] {
            let rel = (d[k] - f[k]).abs() / d[k];
            assert!(rel < 1e-6, "k={k} rel={rel:e} value {:e}", d[k]);
        }
    }

    #[test]
    fn keep_truncates_output() {
        let a = [0.5, 0.5];
        let out = convolve_slices(&a, &a, 2);
        assert_eq!(out, vec![0.25, 0.5]);
    }
}
