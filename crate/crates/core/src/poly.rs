//! Polynomial helpers for inverse filters `A(z) = 1 + a_1 z^-1 + ... + a_P z^-P`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;

/// Roots of `z^P + a_1 z^(P-1) + ... + a_P`, i.e. the poles of `1/A(z)`.
///
/// Aberth-Ehrlich simultaneous iteration followed by one Newton polish per
/// root. Starting points sit on a circle of the Cauchy bound radius with an
/// irrational angular offset so that no start is real.
pub fn poles(a: &[f64]) -> Result<Vec<Complex64>> {
    let p = a.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    if p == 1 {
        return Ok(vec![Complex64::new(-a[0], 0.0)]);
    }
    let bound = a.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let geometric = libm::pow(a[p - 1].abs(), 1.0 / p as f64);
    let radius = geometric.clamp(0.3, 1.0 + bound);
    let start = (0..p)
        .map(|k| {
            let theta = 2.0 * core::f64::consts::PI * k as f64 / p as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();
    aberth(a, start)
}

fn aberth(a: &[f64], mut roots: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let p = a.len();
    // monic coefficients, highest degree first
    let coeffs: Vec<f64> = core::iter::once(1.0).chain(a.iter().copied()).collect();

    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut max_step = 0.0_f64;
        for i in 0..p {
            let z = roots[i];
            let (value, deriv) = eval_with_derivative(&coeffs, z);
            if value.norm() <= 1e-15 * scale {
                continue;
            }
            let ratio = value / deriv;
            let repulsion: Complex64 = (0..p)
                .filter(|&j| j != i)
                .map(|j| (z - roots[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                return Err(Error::RootFinding { iterations: MAX_ITERATIONS });
            }
            roots[i] = z - step;
            max_step = max_step.max(step.norm() / (1.0 + z.norm()));
        }
        if max_step < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::RootFinding { iterations: MAX_ITERATIONS });
    }
    for root in &mut roots {
        let (value, deriv) = eval_with_derivative(&coeffs, *root);
        if deriv.norm() > 0.0 {
            let polished = *root - value / deriv;
            if polished.re.is_finite() && polished.im.is_finite() {
                *root = polished;
            }
        }
    }
    pair_conjugates(&mut roots);
    Ok(roots)
}

/// Makes a root set of a real polynomial exactly closed under conjugation.
///
/// Each root, taken in order of decreasing imaginary magnitude, is matched
/// with the nearest unmatched root to its conjugate and both are replaced by
/// the averaged pair. A root closer to its own mirror image becomes real.
fn pair_conjugates(roots: &mut [Complex64]) {
    let mut order: Vec<usize> = (0..roots.len()).collect();
    order.sort_by(|&i, &j| roots[j].im.abs().total_cmp(&roots[i].im.abs()));
    let mut done = vec![false; roots.len()];
    for &i in &order {
        if done[i] {
            continue;
        }
        done[i] = true;
        let r = roots[i];
        let mirror = r.conj();
        let partner = (0..roots.len())
            .filter(|&j| !done[j])
            .min_by(|&x, &y| (roots[x] - mirror).norm().total_cmp(&(roots[y] - mirror).norm()));
        match partner {
            Some(j) if (roots[j] - mirror).norm() < 2.0 * r.im.abs() => {
                done[j] = true;
                let upper = (r + roots[j].conj()) * 0.5;
                roots[i] = upper;
                roots[j] = upper.conj();
            }
            _ => roots[i] = Complex64::new(r.re, 0.0),
        }
    }
}

/// Horner evaluation of a polynomial (highest degree first) and its derivative.
fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        deriv = deriv * z + value;
        value = value * z + c;
    }
    (value, deriv)
}

/// Largest pole magnitude of `1/A(z)`; below one means minimum phase.
pub fn max_pole_radius(a: &[f64]) -> Result<f64> {
    Ok(poles(a)?.iter().fold(0.0_f64, |m, z| m.max(z.norm())))
}

/// Expands `prod_i (1 - r_i z^-1)` into `[a_1, .., a_P]` (leading 1 dropped).
///
/// Roots are expected to come in conjugate pairs; imaginary residue is
/// discarded.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    c.into_iter().skip(1).map(|z| z.re).collect()
}

/// Quotient of `A(z) / (1 - r z^-1)`, coefficients `[q_0 = 1, q_1, .., q_(P-1)]`.
pub fn deflate(a: &[f64], r: Complex64) -> Vec<Complex64> {
    let p = a.len();
    let mut q = Vec::with_capacity(p);
    let mut prev = Complex64::new(1.0, 0.0);
    q.push(prev);
    for &ak in a.iter().take(p.saturating_sub(1)) {
        prev = ak + r * prev;
        q.push(prev);
    }
    q
}
