#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random poles of a stable real filter of order `p`: conjugate pairs plus
/// one real pole when `p` is odd, radii in [0.1, max_radius].
pub fn random_poles(rng: &mut ChaCha8Rng, p: usize, max_radius: f64) -> Vec<Complex64> {
    let mut poles = Vec::with_capacity(p);
    while poles.len() + 1 < p {
        let z = Complex64::from_polar(
            rng.random_range(0.1..max_radius),
            rng.random_range(0.05..std::f64::consts::PI - 0.05),
        );
        poles.push(z);
        poles.push(z.conj());
    }
    if poles.len() < p {
        poles.push(Complex64::new(rng.random_range(-max_radius..max_radius), 0.0));
    }
    poles
}

/// `[a_1..a_P]` of `prod (1 - p_i z^-1)`, expanded independently of the crate.
pub fn poly_from_poles(poles: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    c[1..].iter().map(|z| z.re).collect()
}

/// Cepstrum c_1..c_q of a minimum-phase response given its squared
/// magnitude on an N-point frequency grid: inverse DFT of log|H|^2.
pub fn cepstrum_from_power(power: impl Fn(f64) -> f64, q: usize, n: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..n)
        .map(|k| power(2.0 * std::f64::consts::PI * k as f64 / n as f64).ln())
        .collect();
    (1..=q)
        .map(|m| {
            logs.iter()
                .enumerate()
                .map(|(k, l)| l * (2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64).cos())
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

/// |1/A(e^{jw})|^2 evaluated directly.
pub fn all_pole_power(a: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |w| {
        let mut s = Complex64::new(1.0, 0.0);
        for (k, ak) in a.iter().enumerate() {
            s += ak * Complex64::from_polar(1.0, -w * (k + 1) as f64);
        }
        1.0 / s.norm_sqr()
    }
}

/// |sum_i 1/(1 - p_i e^{-jw})|^2.
pub fn pole_sum_power(poles: &[Complex64]) -> impl Fn(f64) -> f64 + '_ {
    move |w| {
        let e = Complex64::from_polar(1.0, -w);
        let s: Complex64 = poles.iter().map(|p| (Complex64::new(1.0, 0.0) - p * e).inv()).sum();
        s.norm_sqr()
    }
}

/// Largest eigenvalue magnitude of the companion matrix of A(z).
pub fn companion_spectral_radius(a: &[f64]) -> f64 {
    let p = a.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        m[(0, j)] = -a[j];
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

pub fn l2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// AR process driven by seeded white Gaussian noise.
pub fn ar_process(a: &[f64], n: usize, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rng(seed);
    let mut y = vec![0.0; n];
    for t in 0..n {
        let mut v: f64 = StandardNormal.sample(&mut rng);
        for (k, ak) in a.iter().enumerate() {
            if t > k {
                v -= ak * y[t - k - 1];
            }
        }
        y[t] = v;
    }
    y
}
