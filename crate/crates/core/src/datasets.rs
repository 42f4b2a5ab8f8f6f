//! Synthetic trajectories, snapshot files and batching.
//!
//! Grid convention: the row index `i` runs along `x` (`m = n_x`), the tube
//! index `k` along `y` (`n = n_y`) and the lateral index `j` over time.
//!
//! # File formats
//!
//! `tdt` is a small binary container:
//!
//! ```text
//! "TDT1" | u8 complex flag (0 real, 1 complex) | u64 LE m | u64 LE p | u64 LE n
//! payload: f64 LE values, frontal slice k outermost, then column j, row i fastest;
//!          complex payloads interleave (re, im)
//! ```
//!
//! `csv_dir` is a directory of headerless CSV files, one `m x n` real grid per
//! snapshot, ordered by file name.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::{CMat, C64};

/// Largest transform-domain spectral radius accepted by [`gen_linear_starm`].
pub const SPECTRAL_RADIUS_LIMIT: f64 = 1.05;

pub const TDT_MAGIC: &[u8; 4] = b"TDT1";
const TDT_HEADER_LEN: u64 = 4 + 1 + 3 * 8;

/// Exact iteration `X_{t+1} = A * X_t` for `t < steps`, returned as an
/// `m x (steps + 1) x n` trajectory.
pub fn gen_linear_starm(a: &Tensor3, x0: &Tensor3, steps: usize, transform: &Transform) -> Result<Tensor3> {
    let (m, m2, n) = a.shape();
    if m != m2 {
        return Err(Error::dim(format!("operator slices must be square, got {m}x{m2}")));
    }
    if x0.shape() != (m, 1, n) {
        return Err(Error::dim(format!(
            "initial state has shape {:?}, expected {:?}",
            x0.shape(),
            (m, 1, n)
        )));
    }
    let ah = transform.forward_slices(a)?;
    for (slice, s) in ah.iter().enumerate() {
        let (_, t) = linalg::schur(s);
        let radius = (0..m).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
        if radius > SPECTRAL_RADIUS_LIMIT {
            return Err(Error::SpectralRadius {
                slice,
                radius,
                limit: SPECTRAL_RADIUS_LIMIT,
            });
        }
    }
    let xh = transform.forward_slices(x0)?;
    let slices: Vec<CMat> = ah
        .iter()
        .zip(&xh)
        .map(|(a, x)| {
            let mut out = linalg::zeros(m, steps + 1);
            let mut state = x.clone();
            for t in 0..=steps {
                out.set_column(t, &state.column(0));
                state = a * state;
            }
            out
        })
        .collect();
    transform.inverse_slices(&slices)
}

/// `u(x_i, y_k, t) = sin(k_x x_i - c t) cos(k_y y_k)` on a uniform grid of
/// `[0, 2 pi)^2`, for `t = 0..=steps`.
pub fn gen_traveling_wave(m: usize, n: usize, steps: usize, speed: f64, kx: f64, ky: f64) -> Tensor3 {
    let dx = 2.0 * PI / m as f64;
    let dy = 2.0 * PI / n as f64;
    Tensor3::from_real_fn(m, steps + 1, n, |i, t, k| {
        (kx * i as f64 * dx - speed * t as f64).sin() * (ky * k as f64 * dy).cos()
    })
}

/// One shedding oscillator: two Gaussian blobs in quadrature, the second
/// displaced downstream by `offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillator {
    pub center: (f64, f64),
    pub width: f64,
    pub offset: f64,
    /// Growth factor per step, `|lambda| <= 1`.
    pub lambda: f64,
    /// Angular frequency per step.
    pub omega: f64,
    pub phase: f64,
}

impl Oscillator {
    fn blob(&self, x: f64, y: f64, shift: f64) -> f64 {
        let dx = x - self.center.0 - shift;
        let dy = y - self.center.1;
        (-(dx * dx + dy * dy) / (2.0 * self.width * self.width)).exp()
    }

    /// Field value at `(x, y)` and step `t`:
    /// `lambda^t [cos(omega t + phase) b_0(x, y) + sin(omega t + phase) b_1(x, y)]`.
    pub fn value(&self, x: f64, y: f64, t: usize) -> f64 {
        let amp = self.lambda.powi(t as i32);
        let arg = self.omega * t as f64 + self.phase;
        amp * (arg.cos() * self.blob(x, y, 0.0) + arg.sin() * self.blob(x, y, self.offset))
    }

    /// The conjugate eigenvalue pair `lambda e^{+- i omega}`.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let z = C64::from_polar(self.lambda, self.omega);
        [z, z.conj()]
    }
}

/// Vortex-street-like trajectory with a planted Koopman spectrum.
#[derive(Debug, Clone)]
pub struct VortexStreet {
    pub trajectory: Tensor3,
    pub oscillators: Vec<Oscillator>,
    /// Ground-truth eigenvalues, two per oscillator.
    pub spectrum: Vec<C64>,
}

impl VortexStreet {
    /// Samples the field of `oscillators` on the unit square, `x_i = i / m`,
    /// `y_k = k / n`.
    pub fn from_oscillators(m: usize, n: usize, steps: usize, oscillators: Vec<Oscillator>) -> Self {
        let trajectory = Tensor3::from_real_fn(m, steps + 1, n, |i, t, k| {
            let (x, y) = (i as f64 / m as f64, k as f64 / n as f64);
            oscillators.iter().map(|o| o.value(x, y, t)).sum()
        });
        let spectrum = oscillators.iter().flat_map(|o| o.eigenvalues()).collect();
        VortexStreet {
            trajectory,
            oscillators,
            spectrum,
        }
    }
}

/// `num_oscillators` shedding oscillators with seeded centers, widths,
/// frequencies and phases, all decaying by `decay` per step.
pub fn gen_vortex_street(m: usize, n: usize, steps: usize, num_oscillators: usize, decay: f64, seed: u64) -> VortexStreet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let oscillators = (0..num_oscillators)
        .map(|q| {
            let width = rng.random_range(0.07..0.12);
            Oscillator {
                center: (rng.random_range(0.15..0.55), rng.random_range(0.3..0.7)),
                width,
                offset: 2.5 * width,
                lambda: decay,
                // Frequencies are spread over disjoint bands so they stay distinct.
                omega: 0.2 + 0.5 * q as f64 + rng.random_range(0.0..0.3),
                phase: rng.random_range(0.0..2.0 * PI),
            }
        })
        .collect();
    VortexStreet::from_oscillators(m, n, steps, oscillators)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Tdt,
    CsvDir,
}

pub fn load_snapshots(path: impl AsRef<Path>, format: SnapshotFormat) -> Result<Tensor3> {
    match format {
        SnapshotFormat::Tdt => load_tdt(path.as_ref()),
        SnapshotFormat::CsvDir => load_csv_dir(path.as_ref()),
    }
}

/// Writes `x` in `tdt` format, as real data when every imaginary part is zero.
pub fn save_snapshots(x: &Tensor3, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let complex = !x.is_real();
    let (m, p, n) = x.shape();
    let mut bytes = Vec::with_capacity(TDT_HEADER_LEN as usize + x.as_slice().len() * 16);
    bytes.extend_from_slice(TDT_MAGIC);
    bytes.push(u8::from(complex));
    for d in [m, p, n] {
        bytes.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for z in x.as_slice() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        if complex {
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn load_tdt(path: &Path) -> Result<Tensor3> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 || &bytes[..4] != TDT_MAGIC {
        return Err(parse_err(path, 0, "bad magic, expected \"TDT1\""));
    }
    if bytes.len() < TDT_HEADER_LEN as usize {
        return Err(parse_err(path, bytes.len() as u64, "truncated header"));
    }
    let complex = match bytes[4] {
        0 => false,
        1 => true,
        other => return Err(parse_err(path, 4, format!("complex flag must be 0 or 1, got {other}"))),
    };
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (m, p, n) = (dim(5), dim(13), dim(21));
    let count = m
        .checked_mul(p)
        .and_then(|v| v.checked_mul(n))
        .and_then(|v| v.checked_mul(if complex { 2 } else { 1 }))
        .ok_or_else(|| parse_err(path, 5, "dimensions overflow"))?;
    let expected = count
        .checked_mul(8)
        .and_then(|v| v.checked_add(TDT_HEADER_LEN))
        .ok_or_else(|| parse_err(path, 5, "dimensions overflow"))?;
    if bytes.len() as u64 != expected {
        return Err(parse_err(
            path,
            bytes.len().min(expected as usize) as u64,
            format!("payload holds {} bytes, header implies {expected}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(count as usize);
    for (idx, chunk) in bytes[TDT_HEADER_LEN as usize..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            let offset = TDT_HEADER_LEN + 8 * idx as u64;
            return Err(parse_err(path, offset, format!("non-finite value {v}")));
        }
        values.push(v);
    }
    let data = if complex {
        values.chunks_exact(2).map(|c| C64::new(c[0], c[1])).collect()
    } else {
        values.into_iter().map(|v| C64::new(v, 0.0)).collect()
    };
    Tensor3::from_vec(m as usize, p as usize, n as usize, data)
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn read_grid(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let offset = e.position().map(|p| p.byte()).unwrap_or(0);
            parse_err(path, offset, e.to_string())
        })?;
        let offset = record.position().map(|p| p.byte()).unwrap_or(0);
        let row = record
            .iter()
            .map(|field| {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(path, offset, format!("cannot parse {field:?} as a number")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_err(path, offset, format!("non-finite value {field:?}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    offset,
                    format!("row has {} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn load_csv_dir(dir: &Path) -> Result<Tensor3> {
    let files = csv_files(dir)?;
    if files.is_empty() {
        return Err(parse_err(dir, 0, "directory contains no .csv files"));
    }
    let mut grids = Vec::with_capacity(files.len());
    let mut shape = None;
    for file in &files {
        let grid = read_grid(file)?;
        let dims = (grid.len(), grid.first().map_or(0, |r| r.len()));
        if dims.0 == 0 || dims.1 == 0 {
            return Err(parse_err(file, 0, "empty snapshot"));
        }
        match shape {
            None => shape = Some(dims),
            Some(s) if s != dims => {
                return Err(parse_err(
                    file,
                    0,
                    format!("snapshot is {}x{}, expected {}x{}", dims.0, dims.1, s.0, s.1),
                ))
            }
            Some(_) => {}
        }
        grids.push(grid);
    }
    let (m, n) = shape.expect("at least one file");
    Ok(Tensor3::from_real_fn(m, grids.len(), n, |i, j, k| grids[j][i][k]))
}

/// Writes each lateral slice as `snapshot_XXXXX.csv` (real parts only).
pub fn save_csv_dir(x: &Tensor3, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (m, p, n) = x.shape();
    let width = p.to_string().len().max(5);
    for j in 0..p {
        let path = dir.join(format!("snapshot_{j:0width$}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| parse_err(&path, 0, e.to_string()))?;
        for i in 0..m {
            let row: Vec<String> = (0..n).map(|k| x[(i, j, k)].re.to_string()).collect();
            w.write_record(&row).map_err(|e| parse_err(&path, 0, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Contiguous lateral ranges of near-equal size (earlier batches take the
/// remainder).
pub fn batch_ranges(p: usize, b: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if b == 0 || b > p {
        return Err(Error::InvalidParameter(format!(
            "batch count {b} must lie in 1..={p}"
        )));
    }
    let (base, rem) = (p / b, p % b);
    let mut start = 0;
    Ok((0..b)
        .map(|i| {
            let len = base + usize::from(i < rem);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Splits `c` into `b` full-shaped tensors that are zero outside their range
/// and sum to `c`.
pub fn batch_split(c: &Tensor3, b: usize) -> Result<Vec<Tensor3>> {
    let (m, p, n) = c.shape();
    Ok(batch_ranges(p, b)?
        .into_iter()
        .map(|r| Tensor3::from_fn(m, p, n, |i, j, k| if r.contains(&j) { c[(i, j, k)] } else { C64::new(0.0, 0.0) }))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::identity_tensor;

    #[test]
    fn identity_operator_gives_constant_trajectory() {
        let t = Transform::dct(3).unwrap();
        let a = identity_tensor(2, &t);
        let x0 = Tensor3::from_real_fn(2, 1, 3, |i, _, k| (1 + i + k) as f64);
        let traj = gen_linear_starm(&a, &x0, 4, &t).unwrap();
        for j in 0..5 {
            assert!(traj.lateral_slice(j).max_abs_diff(&x0).unwrap() < 1e-14);
        }
    }

    #[test]
    fn spectral_radius_guard() {
        let t = Transform::dct(2).unwrap();
        let a = t.inverse_slices(&[linalg::real_diag(&[1.2]), linalg::real_diag(&[0.5])]).unwrap();
        let x0 = Tensor3::from_real_fn(1, 1, 2, |_, _, _| 1.0);
        assert!(matches!(
            gen_linear_starm(&a, &x0, 3, &t),
            Err(Error::SpectralRadius { slice: 0, .. })
        ));
    }

    #[test]
    fn standing_wave_and_origin() {
        let w = gen_traveling_wave(6, 4, 5, 0.0, 1.0, 1.0);
        for j in 1..6 {
            assert_eq!(w.lateral_slice(j), w.lateral_slice(0));
        }
        let w = gen_traveling_wave(6, 4, 5, 0.7, 2.0, 1.0);
        assert_eq!(w[(0, 0, 0)].re, 0.0);
    }

    #[test]
    fn vortex_without_oscillators_is_zero() {
        let v = gen_vortex_street(5, 4, 6, 0, 0.99, 1);
        assert!(v.trajectory.is_zero());
        assert!(v.spectrum.is_empty());
    }

    #[test]
    fn vortex_period_eight() {
        let osc = Oscillator {
            center: (0.4, 0.5),
            width: 0.1,
            offset: 0.25,
            lambda: 1.0,
            omega: PI / 4.0,
            phase: 0.3,
        };
        let v = VortexStreet::from_oscillators(8, 6, 10, vec![osc]);
        let d = v.trajectory.lateral_slice(0).max_abs_diff(&v.trajectory.lateral_slice(8)).unwrap();
        assert!(d <= 1e-12);
    }

    #[test]
    fn vortex_is_deterministic() {
        let a = gen_vortex_street(6, 5, 8, 3, 0.98, 42);
        let b = gen_vortex_street(6, 5, 8, 3, 0.98, 42);
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.spectrum.len(), 6);
    }

    #[test]
    fn batch_sizes() {
        let lens = |p, b| batch_ranges(p, b).unwrap().iter().map(|r| r.len()).collect::<Vec<_>>();
        assert_eq!(lens(7, 3), vec![3, 2, 2]);
        assert_eq!(lens(200, 20), vec![10; 20]);
        assert_eq!(lens(5, 1), vec![5]);
        assert!(batch_ranges(5, 0).is_err());
        assert!(batch_ranges(5, 6).is_err());
    }

    #[test]
    fn single_batch_is_whole_tensor() {
        let c = Tensor3::from_real_fn(2, 4, 3, |i, j, k| (i + 3 * j + 11 * k) as f64);
        let b = batch_split(&c, 1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0], c);
    }

    #[test]
    fn tdt_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.tdt");
        fs::write(&path, b"NOPE\0").unwrap();
        let err = load_snapshots(&path, SnapshotFormat::Tdt).unwrap_err();
        assert!(err.to_string().contains("TDT1"));
    }

    #[test]
    fn tdt_rejects_non_finite_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tdt");
        let mut x = Tensor3::zeros(2, 1, 1);
        x[(1, 0, 0)] = C64::new(f64::NAN, 0.0);
        save_snapshots(&x, &path).unwrap();
        match load_snapshots(&path, SnapshotFormat::Tdt) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, TDT_HEADER_LEN + 8),
            other => panic!("expected parse error, got {other:?}"),
        }
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_snapshots(&path, SnapshotFormat::Tdt), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_dir_order_and_shape() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.csv"), "5,6\n7,8\n").unwrap();
        fs::write(dir.path().join("a.csv"), "1,2\n3,4\n").unwrap();
        fs::write(dir.path().join("c.csv"), "9,10\n11,12\n").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let x = load_snapshots(dir.path(), SnapshotFormat::CsvDir).unwrap();
        assert_eq!(x.shape(), (2, 3, 2));
        assert_eq!(x[(0, 0, 0)].re, 1.0);
        assert_eq!(x[(1, 0, 1)].re, 4.0);
        assert_eq!(x[(0, 1, 1)].re, 6.0);
        assert_eq!(x[(1, 2, 0)].re, 11.0);
    }

    #[test]
    fn csv_dir_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1,2\n3,4\n").unwrap();
        fs::write(dir.path().join("b.csv"), "1,2,3\n4,5,6\n").unwrap();
        let err = load_snapshots(dir.path(), SnapshotFormat::CsvDir).unwrap_err();
        assert!(err.to_string().contains("b.csv"), "{err}");

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1,inf\n3,4\n").unwrap();
        let err = load_snapshots(dir.path(), SnapshotFormat::CsvDir).unwrap_err();
        assert!(err.to_string().contains("a.csv") && err.to_string().contains("non-finite"), "{err}");
    }
}
