//! Writes a trajectory as a binary tdt file and as a directory of CSV
//! snapshots, then reads both back.

use tensor_dmd::datasets::{gen_traveling_wave, load_snapshots, save_csv_dir, save_snapshots, SnapshotFormat};
use tensor_dmd::Result;

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("tdmd-snapshots");
    let wave = gen_traveling_wave(12, 6, 9, 0.5, 1.0, 2.0);

    let file = dir.join("wave.tdt");
    std::fs::create_dir_all(&dir).map_err(|e| tensor_dmd::Error::io(&dir, e))?;
    save_snapshots(&wave, &file)?;
    let back = load_snapshots(&file, SnapshotFormat::Tdt)?;
    println!("tdt: {} bytes, shape {:?}, identical: {}", std::fs::metadata(&file).map(|m| m.len()).unwrap_or(0), back.shape(), back == wave);

    let csv = dir.join("csv");
    save_csv_dir(&wave, &csv)?;
    let back = load_snapshots(&csv, SnapshotFormat::CsvDir)?;
    println!("csv_dir: shape {:?}, max difference {:.1e}", back.shape(), back.max_abs_diff(&wave)?);

    std::fs::write(dir.join("bad.tdt"), b"TDT1\x00\x02").map_err(|e| tensor_dmd::Error::io(&dir, e))?;
    if let Err(e) = load_snapshots(dir.join("bad.tdt"), SnapshotFormat::Tdt) {
        println!("truncated file rejected: {e}");
    }
    Ok(())
}
