//! Matrix DMD on the flattened vortex street recovers the planted
//! oscillator eigenvalues.

use tensor_dmd::datasets::gen_vortex_street;
use tensor_dmd::dmd::SnapshotPair;
use tensor_dmd::{exact_dmd, relative_error, Result};

fn main() -> Result<()> {
    let steps = 80;
    let street = gen_vortex_street(48, 24, steps, 3, 0.99, 11);
    let pair = SnapshotPair::from_trajectory(&street.trajectory)?;
    let model = exact_dmd(&pair.x.unfold(), &pair.y.unfold(), 6)?;

    println!("{:>26}   {:>26}", "fitted", "planted");
    let by_angle = |v: &mut Vec<tensor_dmd::C64>| v.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    let mut fitted = model.eigenvalues().remove(0);
    let mut planted = street.spectrum.clone();
    by_angle(&mut fitted);
    by_angle(&mut planted);
    for (z, w) in fitted.iter().zip(&planted) {
        println!("{:>12.6} {:>+12.6}i   {:>12.6} {:>+12.6}i", z.re, z.im, w.re, w.im);
    }

    let recon = model.reconstruct(steps)?;
    let folded = tensor_dmd::dmd::fold_matrix_reconstruction(&recon, 48, 24)?;
    let re = relative_error(&street.trajectory, &folded)?;
    println!("global relative error {:.2e}, storage {} flns", re.global, model.storage_flns);
    Ok(())
}
