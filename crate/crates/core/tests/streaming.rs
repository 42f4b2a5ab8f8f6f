mod common;

use common::*;
use tensor_dmd::datasets::{batch_split, gen_linear_starm, gen_vortex_street};
use tensor_dmd::dmd::SnapshotPair;
use tensor_dmd::linalg;
use tensor_dmd::*;

fn options(rho_max: usize, gamma: f64, seed: u64) -> StreamingOptions {
    StreamingOptions {
        rho_max,
        gamma,
        seed,
        keep_intermediates: true,
    }
}

/// Tensor whose transform-domain slices all have rank `r`.
fn low_rank(r: &mut impl rand::Rng, m: usize, p: usize, n: usize, rank: usize, t: &Transform) -> Tensor3 {
    let slices: Vec<CMat> = (0..n).map(|_| rand_matrix(r, m, rank) * rand_matrix(r, rank, p)).collect();
    t.inverse_slices(&slices).unwrap()
}

#[test]
fn sketches_are_linear_in_the_batches() {
    let mut r = rng(30);
    let t = Transform::dct(3).unwrap();
    let c = rand_tensor(&mut r, 5, 8, 3);
    let tol = 1e-12 * c.norm_fro();

    let whole = update_sketch(init_sketch(5, 8, 3, 3, &t, 9).unwrap(), &c).unwrap();
    let y1 = star_m(&c, &whole.g1.tensor, &t).unwrap();
    let y2 = star_m(&whole.g2.tensor, &c, &t).unwrap();
    assert!(whole.y1().unwrap().max_abs_diff(&y1).unwrap() <= tol);
    assert!(whole.y2().unwrap().max_abs_diff(&y2).unwrap() <= tol);

    let batches = batch_split(&c, 2).unwrap();
    let mut split = init_sketch(5, 8, 3, 3, &t, 9).unwrap();
    for b in &batches {
        split.update(b).unwrap();
    }
    assert_eq!(split.batches_seen, 2);
    assert!(split.y1().unwrap().max_abs_diff(&y1).unwrap() <= tol);
    assert!(split.y2().unwrap().max_abs_diff(&y2).unwrap() <= tol);
}

#[test]
fn batch_order_does_not_matter() {
    let mut r = rng(31);
    let t = Transform::dst(4).unwrap();
    let c = rand_tensor(&mut r, 6, 12, 4);
    let batches = batch_split(&c, 4).unwrap();
    let mut forward = init_sketch(6, 12, 4, 4, &t, 1).unwrap();
    let mut backward = forward.clone();
    for b in &batches {
        forward.update(b).unwrap();
    }
    for b in batches.iter().rev() {
        backward.update(b).unwrap();
    }
    let tol = 1e-12 * c.norm_fro();
    assert!(forward.y1().unwrap().max_abs_diff(&backward.y1().unwrap()).unwrap() <= tol);
    assert!(forward.y2().unwrap().max_abs_diff(&backward.y2().unwrap()).unwrap() <= tol);
}

#[test]
fn exact_rank_recovery() {
    let mut r = rng(32);
    let t = Transform::dct(3).unwrap();
    for rank in 1..=3 {
        let c = low_rank(&mut r, 8, 10, 3, rank, &t);
        let mut s = init_sketch(8, 10, 3, rank + 1, &t, 5).unwrap();
        s.update(&c).unwrap();
        let approx = s.reconstruct_lowrank(1.0).unwrap();
        assert!(tensor_rel_diff(&approx.reconstruct(&t).unwrap(), &c) <= 1e-8);
        assert!(tensor_rel_diff(&s.approximation().unwrap(), &c) <= 1e-8);
    }
}

#[test]
fn single_batch_matches_in_memory_pipeline() {
    let mut r = rng(33);
    let t = Transform::dct(3).unwrap();
    let c = rand_tensor(&mut r, 4, 9, 3);
    for gamma in [1.0, 0.99] {
        let streamed = streaming_dmd(&batch_split(&c, 1).unwrap(), &t, &options(4, gamma, 2)).unwrap();
        let direct = lowrank_dmd(&tr_tsvdm2(&c, &t, gamma).unwrap(), &t).unwrap();
        for (a, b) in streamed.model.eigenvalues().iter().zip(direct.eigenvalues()) {
            assert!(multiset_distance(a, &b) <= 1e-8);
        }
        let (ra, rb) = (streamed.model.reconstruct(8).unwrap(), direct.reconstruct(8).unwrap());
        assert!(tensor_rel_diff(&ra, &rb) <= 1e-8, "gamma {gamma}");
        assert_eq!(streamed.model.multirank, direct.multirank);
    }
}

#[test]
fn streamed_planted_systems() {
    let mut r = rng(34);
    let t = Transform::dct(2).unwrap();
    let id = identity_tensor(3, &t);
    let c = gen_linear_starm(&id, &rand_tensor(&mut r, 3, 1, 2), 9, &t).unwrap();
    let out = streaming_dmd(&batch_split(&c, 2).unwrap(), &t, &options(2, 0.999, 3)).unwrap();
    assert!(out.model.eigenvalues().iter().flatten().all(|z| (z - real(1.0)).norm() <= 1e-8));

    let a = t.inverse_slices(&vec![linalg::real_diag(&[0.9, 0.5]); 2]).unwrap();
    let c = gen_linear_starm(&a, &rand_tensor(&mut r, 2, 1, 2), 11, &t).unwrap();
    let out = streaming_dmd(&batch_split(&c, 3).unwrap(), &t, &options(2, 1.0, 4)).unwrap();
    for ev in out.model.eigenvalues() {
        assert!(multiset_distance(&ev, &[real(0.9), real(0.5)]) <= 1e-7);
    }
    assert_eq!(out.intermediates.len(), 3);
    assert_eq!(out.intermediates.iter().map(|b| b.observed).collect::<Vec<_>>(), vec![4, 8, 12]);
}

#[test]
fn determinism_and_seeds() {
    let mut r = rng(35);
    let t = Transform::dst(3).unwrap();
    let c = rand_tensor(&mut r, 5, 10, 3);
    let batches = batch_split(&c, 5).unwrap();
    let a = streaming_dmd(&batches, &t, &options(3, 0.99, 17)).unwrap();
    let b = streaming_dmd(&batches, &t, &options(3, 0.99, 17)).unwrap();
    assert_eq!(a.model.modes, b.model.modes);
    assert_eq!(a.model.eigen, b.model.eigen);
    let other = init_sketch(5, 10, 3, 3, &t, 18).unwrap();
    assert_ne!(a.sketch.g1.base, other.g1.base);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c1 = serial.install(|| streaming_dmd(&batches, &t, &options(3, 0.99, 17)).unwrap());
    assert!(c1.model.modes.max_abs_diff(&a.model.modes).unwrap() <= 1e-12);
}

#[test]
fn twenty_batches_of_ten_on_vortex_data() {
    let v = gen_vortex_street(24, 12, 199, 3, 0.995, 7);
    let c = v.trajectory;
    let t = Transform::dct(12).unwrap();
    let batches = batch_split(&c, 20).unwrap();
    assert!(batches.iter().all(|b| (0..200).filter(|&j| b.lateral_norm(j) > 0.0).count() == 10));
    let out = streaming_dmd(&batches, &t, &options(9, 0.99999, 0)).unwrap();
    assert_eq!(out.intermediates.len(), 20);
    let global = |m: &DmdModel| relative_error(&c, &m.reconstruct(199).unwrap()).unwrap().global;
    let first = global(&out.intermediates[0].model);
    let last = global(&out.model);
    assert!(last <= first, "final {last} vs first {first}");
}

#[test]
fn errors() {
    let t = Transform::dct(2).unwrap();
    assert!(matches!(init_sketch(3, 4, 2, 4, &t, 0), Err(Error::InvalidParameter(_))));
    assert!(matches!(streaming_dmd(&[], &t, &options(1, 1.0, 0)), Err(Error::InsufficientData(_))));
    let z = Tensor3::zeros(3, 4, 2);
    assert!(matches!(streaming_dmd(&[z], &t, &options(2, 1.0, 0)), Err(Error::DegenerateInput(_))));
    let s = init_sketch(3, 4, 2, 2, &t, 0).unwrap();
    assert!(update_sketch(s, &Tensor3::zeros(3, 4, 3)).is_err());
    let snap = SnapshotPair::from_trajectory(&Tensor3::zeros(2, 1, 2));
    assert!(matches!(snap, Err(Error::InsufficientData(_))));
}
