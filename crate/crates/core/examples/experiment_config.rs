//! Drives the experiment harness from code: write a TOML config, load it
//! back and run the storage-matched comparison.

use std::path::PathBuf;

use tensor_dmd::cli::{cmd_compare, ExperimentConfig, InputSpec, TransformChoice};
use tensor_dmd::{Method, Result};

fn main() -> Result<()> {
    let out = std::env::temp_dir().join("tdmd-example");
    let cfg = ExperimentConfig {
        transform: TransformChoice::Dct,
        methods: vec![Method::StarMDmdII, Method::Dmd],
        gammas: vec![0.999, 0.99999],
        input: InputSpec::Wave {
            m: 24,
            n: 12,
            t: 49,
            speed: 0.3,
            kx: 2.0,
            ky: 1.0,
        },
        out: out.clone(),
        ..ExperimentConfig::default()
    };
    std::fs::create_dir_all(&out).map_err(|e| tensor_dmd::Error::io(&out, e))?;
    let path: PathBuf = out.join("experiment.toml");
    cfg.save(&path)?;
    println!("{}", cfg.to_toml()?);

    let report = cmd_compare(&ExperimentConfig::load(&path)?)?;
    for row in &report.rows {
        println!("{:<8} {:<11} {:<14} {:>7} {:.3e}", row.gamma, row.method, row.rank, row.storage, row.global_re);
    }
    println!("results in {}", out.display());
    Ok(())
}
