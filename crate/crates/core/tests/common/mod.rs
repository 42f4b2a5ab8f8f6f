#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tensor_dmd::{CMat, Tensor3, Transform, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn rand_tensor(rng: &mut impl Rng, m: usize, p: usize, n: usize) -> Tensor3 {
    Tensor3::from_real_fn(m, p, n, |_, _, _| gauss(rng))
}

pub fn rand_complex_tensor(rng: &mut impl Rng, m: usize, p: usize, n: usize) -> Tensor3 {
    Tensor3::from_fn(m, p, n, |_, _, _| C64::new(gauss(rng), gauss(rng)))
}

pub fn rand_matrix(rng: &mut impl Rng, r: usize, c: usize) -> CMat {
    DMatrix::from_fn(r, c, |_, _| C64::new(gauss(rng), 0.0))
}

/// DCT, DST and a data-driven transform, all of size `n`.
pub fn all_transforms(rng: &mut impl Rng, n: usize) -> Vec<Transform> {
    let seed = rand_tensor(rng, 3, 2, n);
    vec![
        Transform::dct(n).unwrap(),
        Transform::dst(n).unwrap(),
        Transform::data_driven(&seed).unwrap(),
    ]
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn mat_rel_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn tensor_rel_diff(a: &Tensor3, b: &Tensor3) -> f64 {
    a.sub(b).unwrap().norm_fro() / b.norm_fro().max(f64::MIN_POSITIVE)
}

/// Characteristic polynomial coefficients `[1, c_1, .., c_n]` of `a`
/// (Faddeev-LeVerrier).
pub fn char_poly(a: &CMat) -> Vec<C64> {
    let n = a.nrows();
    let eye = CMat::identity(n, n);
    let mut coeffs = vec![C64::new(1.0, 0.0)];
    let mut m = CMat::zeros(n, n);
    for k in 1..=n {
        m = a * &m + &eye * coeffs[k - 1];
        let am = a * &m;
        coeffs.push(-am.trace() / k as f64);
    }
    coeffs
}

/// Roots of a monic polynomial by Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: C64| coeffs.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let bound = 1.0 + coeffs[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|i| seed.powu(i as u32) * bound).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let zi = roots[i];
            let denom = (0..n)
                .filter(|&j| j != i)
                .fold(C64::new(1.0, 0.0), |acc, j| acc * (zi - roots[j]));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(zi) / denom;
            roots[i] = zi - step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * bound {
            break;
        }
    }
    // Newton polish on the polynomial itself.
    let deriv: Vec<C64> = coeffs[..n].iter().enumerate().map(|(i, &c)| c * (n - i) as f64).collect();
    let eval_d = |z: C64| deriv.iter().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c);
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = eval_d(*r);
            if d.norm() > 1e-8 {
                *r -= eval(*r) / d;
            }
        }
    }
    roots
}

/// Dense eigenvalue oracle independent of the library's Schur path.
pub fn eig_oracle(a: &CMat) -> Vec<C64> {
    poly_roots(&char_poly(a))
}

/// Largest distance under a greedy nearest matching of two multisets, or
/// infinity when the sizes differ.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut worst = 0.0f64;
    for (d, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}
