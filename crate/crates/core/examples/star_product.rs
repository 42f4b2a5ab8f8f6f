//! The star-M product and its companions: identity, conjugate transpose,
//! pseudoinverse and the equivalent block-structured matrix.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tensor_dmd::{conj_transpose, identity_tensor, pinv, star_m, to_structured_matrix, Result, Tensor3, Transform};

fn random(rng: &mut ChaCha8Rng, m: usize, p: usize, n: usize) -> Tensor3 {
    Tensor3::from_fn(m, p, n, |_, _, _| Complex64::new(StandardNormal.sample(rng), 0.0))
}

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let t = Transform::dct(4)?;
    let a = random(&mut rng, 3, 5, 4);
    let b = random(&mut rng, 5, 2, 4);

    let ab = star_m(&a, &b, &t)?;
    println!("A * B has shape {:?}", ab.shape());

    let id = identity_tensor(3, &t);
    println!("|I * A - A|_max = {:.2e}", star_m(&id, &a, &t)?.max_abs_diff(&a)?);

    // Multiplying by A equals multiplying the unfolding by a structured matrix.
    let dense = to_structured_matrix(&a, &t)? * b.unfold();
    println!("|unfold(A * B) - mat(A) unfold(B)|_max = {:.2e}", (ab.unfold() - dense).camax());

    let ah = conj_transpose(&a, &t)?;
    let ai = pinv(&a, &t)?;
    let aia = star_m(&star_m(&a, &ai, &t)?, &a, &t)?;
    println!("|A * A+ * A - A|_max = {:.2e}", aia.max_abs_diff(&a)?);
    let g = star_m(&ah, &a, &t)?;
    println!("A^H * A is {:?} and Hermitian to {:.2e}", g.shape(), conj_transpose(&g, &t)?.max_abs_diff(&g)?);
    Ok(())
}
