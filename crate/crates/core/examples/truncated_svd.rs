//! Facewise SVD of a traveling wave, truncated by uniform rank and by energy.

use tensor_dmd::datasets::gen_traveling_wave;
use tensor_dmd::{tr_tsvdm, tr_tsvdm2, tsvdm, Result, Transform};

fn main() -> Result<()> {
    let wave = gen_traveling_wave(32, 16, 40, 0.3, 2.0, 1.0);
    let t = Transform::dct(16)?;
    let norm = wave.norm_fro();

    let full = tsvdm(&wave, &t)?;
    println!("full tubal rank {}, leading values per slice:", full.rank());
    for (k, s) in full.sigma_hat.iter().enumerate().take(4) {
        println!("  slice {k}: {:.3e} {:.3e} {:.3e}", s[0], s[1], s[2]);
    }

    for k in [1, 2, 4] {
        let d = tr_tsvdm(&wave, &t, k)?;
        let err = wave.sub(&d.reconstruct(&t)?)?.norm_fro() / norm;
        println!("rank {k}: relative error {err:.3e}");
    }
    for gamma in [0.9, 0.99, 0.9999] {
        let d = tr_tsvdm2(&wave, &t, gamma)?;
        let err = wave.sub(&d.reconstruct(&t)?)?.norm_fro() / norm;
        println!(
            "gamma {gamma}: multirank {:?}, relative error {err:.3e} (bound {:.3e})",
            d.multirank,
            (1.0 - gamma).sqrt()
        );
    }
    Ok(())
}
