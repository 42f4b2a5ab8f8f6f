mod common;

use common::*;
use tensor_dmd::algebra::kron_identity;
use tensor_dmd::datasets::gen_linear_starm;
use tensor_dmd::dmd::{
    alt_opt_minimizer, alt_opt_minimizer_with_cap, equalized_rank, fold_matrix_reconstruction, storage_count,
    ModelSize, SnapshotPair,
};
use tensor_dmd::linalg;
use tensor_dmd::*;

fn matrix_trajectory(a: &CMat, x0: &CMat, steps: usize) -> CMat {
    let mut out = linalg::zeros(x0.nrows(), steps + 1);
    let mut x = x0.clone();
    for t in 0..=steps {
        out.set_column(t, &x.column(0));
        x = a * x;
    }
    out
}

fn vec2(a: f64, b: f64) -> CMat {
    CMat::from_column_slice(2, 1, &[real(a), real(b)])
}

fn diag2(a: f64, b: f64) -> CMat {
    linalg::real_diag(&[a, b])
}

/// Random `N x N` matrix scaled to spectral radius 0.95.
fn stable_matrix(r: &mut impl rand::Rng, n: usize) -> CMat {
    let a = rand_matrix(r, n, n);
    let radius = eig_oracle(&a).iter().map(|z| z.norm()).fold(0.0, f64::max);
    a * real(0.95 / radius)
}

#[test]
fn exact_dmd_examples() {
    let c = matrix_trajectory(&diag2(0.9, 0.5), &vec2(1.0, 0.0), 6);
    let (x, y) = (c.columns(0, 6).into_owned(), c.columns(1, 6).into_owned());
    let model = exact_dmd(&x, &y, 1).unwrap();
    assert!((model.eigenvalues()[0][0] - real(0.9)).norm() <= 1e-10);

    let c = matrix_trajectory(&linalg::eye(3), &CMat::from_column_slice(3, 1, &[real(1.0), real(-2.0), real(0.5)]), 5);
    let (x, y) = (c.columns(0, 5).into_owned(), c.columns(1, 5).into_owned());
    let model = exact_dmd(&x, &y, 1).unwrap();
    assert!((model.eigenvalues()[0][0] - real(1.0)).norm() <= 1e-12);
    let recon = model.reconstruct(5).unwrap();
    assert!((recon.frontal_slice(0) - &c).norm() <= 1e-12 * c.norm());

    let c = matrix_trajectory(&diag2(0.9, 0.5), &vec2(1.0, 1.0), 8);
    let (x, y) = (c.columns(0, 8).into_owned(), c.columns(1, 8).into_owned());
    let model = exact_dmd(&x, &y, 2).unwrap();
    let oracle = eig_oracle(&(&y * linalg::pinv(&x, linalg::default_pinv_tol(2, 8))));
    assert!(multiset_distance(&model.eigenvalues()[0], &oracle) <= 1e-8);
    assert!(multiset_distance(&model.eigenvalues()[0], &[real(0.9), real(0.5)]) <= 1e-8);

    assert!(matches!(exact_dmd(&x, &y, 3), Err(Error::InvalidRank { .. })));
    // Rank-one data asked for rank two.
    let c = matrix_trajectory(&diag2(0.9, 0.5), &vec2(1.0, 0.0), 6);
    let (x, y) = (c.columns(0, 6).into_owned(), c.columns(1, 6).into_owned());
    assert!(matches!(exact_dmd(&x, &y, 2), Err(Error::RankDeficient { index: 1, .. })));
}

fn planted_system(t: &Transform, n: usize, steps: usize, seed: u64) -> Tensor3 {
    let mut r = rng(seed);
    let a = t.inverse_slices(&vec![diag2(0.9, 0.5); n]).unwrap();
    let x0 = rand_tensor(&mut r, 2, 1, n);
    gen_linear_starm(&a, &x0, steps, t).unwrap()
}

#[test]
fn planted_star_m_system() {
    for t in [Transform::dct(3).unwrap(), Transform::dst(4).unwrap()] {
        let c = planted_system(&t, t.size(), 10, 20);
        let pair = SnapshotPair::from_trajectory(&c).unwrap();
        for trunc in [Truncation::Rank(2), Truncation::Energy(1.0)] {
            let model = star_m_dmd(&pair.x, &pair.y, &t, trunc).unwrap();
            for ev in model.eigenvalues() {
                assert!(multiset_distance(&ev, &[real(0.9), real(0.5)]) <= 1e-8);
            }
            let recon = model.reconstruct(10).unwrap();
            for j in 0..=10 {
                let d = c.lateral_slice(j).sub(&recon.lateral_slice(j)).unwrap().norm_fro();
                assert!(d <= 1e-8 * c.lateral_norm(j), "state {j}");
            }
            // Modes have orthonormal slices.
            let zz = star_m(&conj_transpose(&model.modes, &t).unwrap(), &model.modes, &t).unwrap();
            assert!(tensor_rel_diff(&zz, &identity_tensor(2, &t)) <= 1e-10);
        }
    }
}

#[test]
fn identity_dynamics() {
    let mut r = rng(21);
    let t = Transform::dct(3).unwrap();
    let a = identity_tensor(3, &t);
    let c = gen_linear_starm(&a, &rand_tensor(&mut r, 3, 1, 3), 6, &t).unwrap();
    let pair = SnapshotPair::from_trajectory(&c).unwrap();
    for trunc in [Truncation::Rank(1), Truncation::Energy(0.999)] {
        let model = star_m_dmd(&pair.x, &pair.y, &t, trunc).unwrap();
        for ev in model.eigenvalues() {
            assert!(ev.iter().all(|z| (z - real(1.0)).norm() <= 1e-10));
        }
        let recon = model.reconstruct(6).unwrap();
        assert!(relative_error(&c, &recon).unwrap().global <= 1e-10);
        for j in 1..=6 {
            assert!(recon.lateral_slice(j).max_abs_diff(&recon.lateral_slice(0)).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn reconstruct_at_zero_projects_initial_state() {
    let mut r = rng(22);
    let t = Transform::dst(3).unwrap();
    let c = rand_tensor(&mut r, 4, 6, 3);
    let pair = SnapshotPair::from_trajectory(&c).unwrap();
    let model = star_m_dmd(&pair.x, &pair.y, &t, Truncation::Rank(2)).unwrap();
    let x0 = c.lateral_slice(0);
    let zt = conj_transpose(&model.modes, &t).unwrap();
    let proj = star_m(&model.modes, &star_m(&zt, &x0, &t).unwrap(), &t).unwrap();
    assert!(tensor_rel_diff(&model.reconstruct(0).unwrap(), &proj) <= 1e-12);
    assert_eq!(model.storage_flns, storage_count(ModelSize::StarMDmd { k: 2 }, 4, 3, 0));
}

#[test]
fn matrix_collapse() {
    let mut r = rng(23);
    let one = Transform::identity(1).unwrap();
    for trial in 0..10 {
        let size = 3 + trial % 4;
        let a = stable_matrix(&mut r, size);
        let c = matrix_trajectory(&a, &rand_matrix(&mut r, size, 1), 12);
        let (x, y) = (c.columns(0, 12).into_owned(), c.columns(1, 12).into_owned());
        let k = 1 + trial % size;
        let reference = exact_dmd(&x, &y, k).unwrap();
        let xt = Tensor3::from_frontal_slices(&[x]).unwrap();
        let yt = Tensor3::from_frontal_slices(&[y]).unwrap();
        let model = star_m_dmd(&xt, &yt, &one, Truncation::Rank(k)).unwrap();
        assert!(multiset_distance(&model.eigenvalues()[0], &reference.eigenvalues()[0]) <= 1e-9);
        let (ra, rb) = (model.reconstruct(12).unwrap(), reference.reconstruct(12).unwrap());
        assert!(ra.max_abs_diff(&rb).unwrap() <= 1e-9 * rb.max_abs());
    }
}

#[test]
fn schur_form_matricization() {
    let mut r = rng(24);
    let t = Transform::dct(3).unwrap();
    let x = rand_tensor(&mut r, 3, 6, 3);
    let y = rand_tensor(&mut r, 3, 6, 3);
    let model = star_m_dmd(&x, &y, &t, Truncation::Rank(3)).unwrap();
    let (m, n) = (3, 3);
    let mut bz = linalg::zeros(m * n, m * n);
    let mut bt = linalg::zeros(m * n, m * n);
    for (j, (z, tt)) in model.z_hat().iter().zip(model.t_hat()).enumerate() {
        bz.view_mut((j * m, j * m), (m, m)).copy_from(z);
        bt.view_mut((j * m, j * m), (m, m)).copy_from(tt);
    }
    let w = kron_identity(t.adjoint(), m) * bz;
    assert!(linalg::max_abs(&(w.adjoint() * &w - linalg::eye(m * n))) <= 1e-9);
    let oracle = to_structured_matrix(&star_m(&y, &pinv(&x, &t).unwrap(), &t).unwrap(), &t).unwrap();
    assert!(mat_rel_diff(&(&w * bt * w.adjoint()), &oracle) <= 1e-8);
    // The fitted operator agrees too.
    assert!(mat_rel_diff(&model.operator_matrix().unwrap(), &oracle) <= 1e-8);
}

#[test]
fn rayleigh_ritz_consistency() {
    let mut r = rng(25);
    for (m, p, n, k) in [(4, 6, 3, 2), (3, 5, 2, 2), (4, 4, 3, 3)] {
        let t = Transform::dst(n).unwrap();
        let x = rand_tensor(&mut r, m, p, n);
        let y = rand_tensor(&mut r, m, p, n);
        let model = star_m_dmd(&x, &y, &t, Truncation::Rank(k)).unwrap();
        let u = tr_tsvdm(&x, &t, k).unwrap();
        let mut bu = linalg::zeros(m * n, k * n);
        for (j, s) in t.forward_slices(&u.u).unwrap().iter().enumerate() {
            bu.view_mut((j * m, j * k), (m, k)).copy_from(s);
        }
        let v_proj = kron_identity(t.adjoint(), m) * bu;
        let a_mat = to_structured_matrix(&star_m(&y, &pinv(&x, &t).unwrap(), &t).unwrap(), &t).unwrap();
        let restricted = v_proj.adjoint() * a_mat * &v_proj;
        let ritz = eig_oracle(&restricted);
        let ours: Vec<C64> = model.eigenvalues().into_iter().flatten().collect();
        assert!(multiset_distance(&ours, &ritz) <= 1e-7, "{m}x{p}x{n}");
    }
}

/// Orthogonal projection of an `mn x mn` matrix onto the star-M structured subspace.
fn project(b: &CMat, t: &Transform, m: usize) -> CMat {
    let n = t.size();
    let inner = kron_identity(t.matrix(), m) * b * kron_identity(t.adjoint(), m);
    let mut blocks = linalg::zeros(m * n, m * n);
    for j in 0..n {
        blocks
            .view_mut((j * m, j * m), (m, m))
            .copy_from(&inner.view((j * m, j * m), (m, m)));
    }
    kron_identity(t.adjoint(), m) * blocks * kron_identity(t.matrix(), m)
}

#[test]
fn alt_opt_minimizer_oracles() {
    let mut r = rng(26);
    // n = 1: the unconstrained least-squares operator.
    let one = Transform::identity(1).unwrap();
    let x = rand_tensor(&mut r, 3, 5, 1);
    let y = rand_tensor(&mut r, 3, 5, 1);
    let a = alt_opt_minimizer(&x, &y, &one).unwrap();
    let ls = y.unfold() * linalg::pinv(&x.unfold(), linalg::default_pinv_tol(3, 5));
    assert!(mat_rel_diff(&a, &ls) <= 1e-12);

    // M = I, square full-rank X: block-diagonal part of Y X^{-1}.
    let id = Transform::identity(2).unwrap();
    let x = rand_tensor(&mut r, 2, 4, 2);
    let y = rand_tensor(&mut r, 2, 4, 2);
    let a = alt_opt_minimizer(&x, &y, &id).unwrap();
    let full = y.unfold() * x.unfold().try_inverse().unwrap();
    let mut block = linalg::zeros(4, 4);
    for j in 0..2 {
        block.view_mut((2 * j, 2 * j), (2, 2)).copy_from(&full.view((2 * j, 2 * j), (2, 2)));
    }
    assert!(mat_rel_diff(&a, &block) <= 1e-10);

    // Random 2x3x2: beats the structured matrix of Y * pinv(X) and equals the projection.
    for t in all_transforms(&mut r, 2) {
        let x = rand_tensor(&mut r, 2, 3, 2);
        let y = rand_tensor(&mut r, 2, 3, 2);
        let target = y.unfold() * linalg::pinv(&x.unfold(), linalg::default_pinv_tol(4, 3));
        let a = alt_opt_minimizer(&x, &y, &t).unwrap();
        let other = to_structured_matrix(&star_m(&y, &pinv(&x, &t).unwrap(), &t).unwrap(), &t).unwrap();
        assert!((&target - &a).norm() <= (&target - other).norm() + 1e-12);
        assert!(mat_rel_diff(&a, &project(&target, &t, 2)) <= 1e-10);
    }

    let big = Tensor3::zeros(30, 2, 20);
    assert!(matches!(
        alt_opt_minimizer(&big, &big, &Transform::dct(20).unwrap()),
        Err(Error::SizeLimit { size: 600, cap: 512 })
    ));
    assert!(alt_opt_minimizer_with_cap(&Tensor3::zeros(3, 2, 2), &Tensor3::zeros(3, 2, 2), &Transform::dct(2).unwrap(), 4).is_err());
}

#[test]
fn relative_error_examples() {
    let a = Tensor3::from_real_fn(1, 2, 1, |_, j, _| if j == 0 { 3.0 } else { 4.0 });
    let e = relative_error(&a, &a).unwrap();
    assert_eq!(e.global, 0.0);
    assert_eq!(e.statewise, vec![0.0, 0.0]);
    assert_eq!(relative_error(&a, &Tensor3::zeros(1, 2, 1)).unwrap().global, 1.0);
    let mut b = a.clone();
    b[(0, 1, 0)] += real(0.04);
    let e = relative_error(&a, &b).unwrap();
    assert!(e.statewise[0] == 0.0 && (e.statewise[1] - 1e-2).abs() <= 1e-15);
    assert!((e.global - 0.04 / 5.0).abs() <= 1e-15);
    assert!(relative_error(&a, &Tensor3::zeros(2, 2, 1)).is_err());
}

#[test]
fn storage_and_equalized_rank() {
    assert_eq!(storage_count(ModelSize::Dmd { k: 2 }, 5, 3, 0), 33);
    assert_eq!(storage_count(ModelSize::StarMDmd { k: 2 }, 5, 3, 0), 45);
    assert_eq!(storage_count(ModelSize::StarMDmdII { multirank: &[2, 1, 0] }, 5, 3, 9), 31);
    assert_eq!(equalized_rank(10000, Method::Dmd, 64, 40, 0).unwrap().k, 3);
    let at5 = storage_count(ModelSize::Dmd { k: 5 }, 7, 3, 0);
    assert_eq!(equalized_rank(at5, Method::Dmd, 7, 3, 0).unwrap().k, 5);
    let low = equalized_rank(10, Method::Dmd, 64, 40, 0).unwrap();
    assert!(low.k == 1 && low.over_budget);
    assert!(equalized_rank(100, Method::StarMDmdII, 4, 4, 0).is_err());
    let mut prev = 0;
    for target in (0..5000).step_by(37) {
        let k = equalized_rank(target, Method::StarMDmd, 6, 4, 16).unwrap().k;
        assert!(k >= prev);
        prev = k;
    }
}

#[test]
fn lowrank_factors_match_explicit_pipeline() {
    let mut r = rng(27);
    let t = Transform::dct(3).unwrap();
    let c = rand_tensor(&mut r, 3, 8, 3);
    let pair = SnapshotPair::from_trajectory(&c).unwrap();
    let explicit = star_m_dmd(&pair.x, &pair.y, &t, Truncation::Energy(1.0)).unwrap();
    let factored = lowrank_dmd(&tsvdm(&c, &t).unwrap(), &t).unwrap();
    for (a, b) in factored.eigenvalues().iter().zip(explicit.eigenvalues()) {
        assert!(multiset_distance(a, &b) <= 1e-8);
    }
    let (ra, rb) = (factored.reconstruct(7).unwrap(), explicit.reconstruct(7).unwrap());
    assert!(tensor_rel_diff(&ra, &rb) <= 1e-8);
    assert_eq!(factored.method, Method::StarMDmdII);

    // Identity dynamics through the factored path.
    let a = identity_tensor(2, &t);
    let c = gen_linear_starm(&a, &rand_tensor(&mut r, 2, 1, 3), 5, &t).unwrap();
    let model = lowrank_dmd(&tr_tsvdm(&c, &t, 1).unwrap(), &t).unwrap();
    assert!(model.eigenvalues().iter().flatten().all(|z| (z - real(1.0)).norm() <= 1e-8));

    let single = tsvdm(&c.lateral_range(0, 1), &t).unwrap();
    assert!(matches!(lowrank_dmd(&single, &t), Err(Error::InsufficientData(_))));
}

#[test]
fn matrix_reconstruction_folds_back() {
    let mut r = rng(28);
    let c = rand_tensor(&mut r, 3, 6, 2);
    let pair = SnapshotPair::from_trajectory(&c).unwrap();
    let model = exact_dmd(&pair.x.unfold(), &pair.y.unfold(), 5).unwrap();
    let recon = fold_matrix_reconstruction(&model.reconstruct(5).unwrap(), 3, 2).unwrap();
    assert_eq!(recon.shape(), (3, 6, 2));
    // Full-rank fit reproduces the first state exactly.
    assert!(recon.lateral_slice(0).max_abs_diff(&c.lateral_slice(0)).unwrap() <= 1e-10);
}
