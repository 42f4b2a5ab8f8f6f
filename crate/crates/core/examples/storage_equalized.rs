//! Storage accounting: fit the energy-truncated model first, then give matrix
//! DMD and uniform-rank star-M DMD the same budget.

use tensor_dmd::datasets::gen_vortex_street;
use tensor_dmd::dmd::{equalized_rank, fold_matrix_reconstruction, SnapshotPair};
use tensor_dmd::{exact_dmd, relative_error, star_m_dmd, Method, Result, Transform, Truncation};

fn main() -> Result<()> {
    let (m, n, steps) = (48, 24, 79);
    let c = gen_vortex_street(m, n, steps, 3, 0.995, 9).trajectory;
    let t = Transform::dct(n)?;
    let pair = SnapshotPair::from_trajectory(&c)?;

    println!("{:>8} {:>11} {:>6} {:>8} {:>10}", "gamma", "method", "rank", "storage", "RE");
    for gamma in [0.99, 0.999, 0.99999] {
        let dmd2 = star_m_dmd(&pair.x, &pair.y, &t, Truncation::Energy(gamma))?;
        let budget = dmd2.storage_flns;
        let re = relative_error(&c, &dmd2.reconstruct(steps)?)?.global;
        let sum: usize = dmd2.multirank.iter().sum();
        println!("{gamma:>8} {:>11} {sum:>6} {budget:>8} {re:>10.3e}", "starm_dmd2");

        let k = equalized_rank(budget, Method::StarMDmd, m, n, t.storage_cost())?.k.min(m);
        let uniform = star_m_dmd(&pair.x, &pair.y, &t, Truncation::Rank(k))?;
        let re = relative_error(&c, &uniform.reconstruct(steps)?)?.global;
        println!("{gamma:>8} {:>11} {k:>6} {:>8} {re:>10.3e}", "starm_dmd", uniform.storage_flns);

        let k = equalized_rank(budget, Method::Dmd, m, n, 0)?.k;
        let dmd = exact_dmd(&pair.x.unfold(), &pair.y.unfold(), k)?;
        let recon = fold_matrix_reconstruction(&dmd.reconstruct(steps)?, m, n)?;
        let re = relative_error(&c, &recon)?.global;
        println!("{gamma:>8} {:>11} {k:>6} {:>8} {re:>10.3e}", "dmd", dmd.storage_flns);
    }
    Ok(())
}
