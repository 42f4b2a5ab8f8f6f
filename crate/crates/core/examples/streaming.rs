//! Single-pass streaming DMD: snapshots arrive in 20 batches, are folded
//! into two sketches and dropped. A model is fitted after every batch.

use tensor_dmd::datasets::{batch_ranges, batch_split, gen_vortex_street};
use tensor_dmd::{relative_error, streaming_dmd, Result, StreamingOptions, Transform};

fn main() -> Result<()> {
    let c = gen_vortex_street(32, 16, 199, 3, 0.995, 5).trajectory;
    let t = Transform::dct(16)?;
    let batches = batch_split(&c, 20)?;
    let options = StreamingOptions {
        rho_max: 9,
        gamma: 0.99999,
        seed: 0,
        keep_intermediates: true,
    };
    let out = streaming_dmd(&batches, &t, &options)?;
    let (y1, y2) = out.sketch.storage_flns();
    println!("sketch sizes rho1 = {}, rho2 = {}; sketch storage {} + {} flns", out.sketch.rho1, out.sketch.rho2, y1, y2);

    println!("{:>5} {:>9} {:>12} {:>12}", "batch", "observed", "batch RE", "global RE");
    for (b, range) in out.intermediates.iter().zip(batch_ranges(200, 20)?) {
        let recon = b.model.reconstruct(199)?;
        let batch_re = relative_error(&c.lateral_range(range.start, range.end), &recon.lateral_range(range.start, range.end))?;
        let global = relative_error(&c, &recon)?;
        println!("{:>5} {:>9} {:>12.3e} {:>12.3e}", b.batch, b.observed, batch_re.global, global.global);
    }
    println!("final multirank {:?}", out.model.multirank);
    Ok(())
}
