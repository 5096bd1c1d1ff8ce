//! On-disk formats: the exact complex-array container, the mask container,
//! PGM magnitude previews, and the per-solver trace CSV.
//!
//! Complex arrays live in "CPLX1" files: the magic bytes `CPLX1\0`, a
//! little-endian `u32` rank, `u32` extents, then `f64` values interleaved
//! `(re, im)` in row-major order. Masks live in "MASK1" files with the same
//! header layout followed by one `0`/`1` byte per entry, row-major. Both
//! round-trip losslessly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3};
use recon_core::{Cplx, Image64, SamplingMask, SensitivityMaps64, SolverTrace};

use crate::error::{read_err, write_err, HarnessError, Result};

pub const CPLX1_MAGIC: &[u8; 6] = b"CPLX1\0";
pub const MASK1_MAGIC: &[u8; 6] = b"MASK1\0";

/// Upper bound on the element count accepted from a file header, so a
/// corrupt or hostile header cannot request an absurd allocation.
const MAX_ELEMENTS: usize = 1 << 28;

fn product_checked(dims: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(HarnessError::Config("array files cannot have zero extents".into()));
        }
        n = n
            .checked_mul(d)
            .filter(|&n| n <= MAX_ELEMENTS)
            .ok_or_else(|| HarnessError::Config("array file dimensions overflow the element cap".into()))?;
    }
    Ok(n)
}

fn write_header(w: &mut impl Write, magic: &[u8; 6], dims: &[usize]) -> std::io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 6], what: &str) -> Result<Vec<usize>> {
    let bad = |msg: &str| HarnessError::Config(format!("{what}: {msg}"));
    let mut m = [0u8; 6];
    r.read_exact(&mut m).map_err(|_| bad("file too short for a header"))?;
    if &m != magic {
        return Err(bad("magic bytes do not match"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(|_| bad("truncated rank field"))?;
    let ndim = u32::from_le_bytes(b4) as usize;
    if ndim == 0 || ndim > 8 {
        return Err(bad("rank must be between 1 and 8"));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        r.read_exact(&mut b4).map_err(|_| bad("truncated extent field"))?;
        dims.push(u32::from_le_bytes(b4) as usize);
    }
    product_checked(&dims).map_err(|_| bad("extents are zero or overflow the element cap"))?;
    Ok(dims)
}

/// Writes a complex array of any rank; `data` is row-major and must match
/// the product of `dims`.
pub fn write_cplx1(path: &Path, dims: &[usize], data: &[Cplx<f64>]) -> Result<()> {
    let n = product_checked(dims)?;
    if n != data.len() {
        return Err(HarnessError::Config(format!(
            "{} values do not fill a {dims:?} array",
            data.len()
        )));
    }
    if dims.iter().any(|&d| d > u32::MAX as usize) {
        return Err(HarnessError::Config("array extent exceeds the 32-bit header field".into()));
    }
    let werr = |e: std::io::Error| write_err(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(werr)?);
    write_header(&mut w, CPLX1_MAGIC, dims).map_err(werr)?;
    for v in data {
        w.write_all(&v.re.to_le_bytes()).map_err(werr)?;
        w.write_all(&v.im.to_le_bytes()).map_err(werr)?;
    }
    w.flush().map_err(werr)
}

/// Reads a complex array of any rank, returning its extents and row-major
/// values.
pub fn read_cplx1(path: &Path) -> Result<(Vec<usize>, Vec<Cplx<f64>>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| read_err(path, e))?);
    let dims = read_header(&mut r, CPLX1_MAGIC, &format!("{} is not a CPLX1 file", path.display()))?;
    let n = product_checked(&dims)?;
    let mut raw = vec![0u8; 16 * n];
    r.read_exact(&mut raw)
        .map_err(|_| HarnessError::Config(format!("{}: truncated value section", path.display())))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| read_err(path, e))? != 0 {
        return Err(HarnessError::Config(format!(
            "{}: trailing bytes after the value section",
            path.display()
        )));
    }
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            Cplx::new(
                f64::from_le_bytes(c[..8].try_into().expect("chunk size")),
                f64::from_le_bytes(c[8..].try_into().expect("chunk size")),
            )
        })
        .collect();
    Ok((dims, data))
}

/// Writes one image as a rank-2 CPLX1 array.
pub fn write_image(path: &Path, img: &Image64) -> Result<()> {
    let data: Vec<Cplx<f64>> = img.data().iter().copied().collect();
    write_cplx1(path, &[img.nx(), img.ny()], &data)
}

/// Reads a rank-2 CPLX1 array as an image.
pub fn read_image(path: &Path) -> Result<Image64> {
    let (dims, data) = read_cplx1(path)?;
    let [nx, ny]: [usize; 2] = dims
        .try_into()
        .map_err(|_| HarnessError::Config(format!("{} does not hold a rank-2 image", path.display())))?;
    let arr = Array2::from_shape_vec((nx, ny), data).expect("length checked by reader");
    Ok(Image64::new(arr)?)
}

/// Writes k-space sample columns (one column per coil) as a rank-2 CPLX1
/// array of shape (samples, coils).
pub fn write_samples(path: &Path, samples: &Array2<Cplx<f64>>) -> Result<()> {
    let data: Vec<Cplx<f64>> = samples.iter().copied().collect();
    write_cplx1(path, &[samples.nrows(), samples.ncols()], &data)
}

/// Reads k-space sample columns written by [`write_samples`].
pub fn read_samples(path: &Path) -> Result<Array2<Cplx<f64>>> {
    let (dims, data) = read_cplx1(path)?;
    let [m, l]: [usize; 2] = dims
        .try_into()
        .map_err(|_| HarnessError::Config(format!("{} does not hold rank-2 sample data", path.display())))?;
    Ok(Array2::from_shape_vec((m, l), data).expect("length checked by reader"))
}

/// Writes coil sensitivity maps as a rank-3 CPLX1 array of shape
/// (coils, nx, ny).
pub fn write_smaps(path: &Path, smaps: &SensitivityMaps64) -> Result<()> {
    let mut data = Vec::with_capacity(smaps.ncoils() * smaps.nx() * smaps.ny());
    for l in 0..smaps.ncoils() {
        data.extend(smaps.coil(l).iter().copied());
    }
    write_cplx1(path, &[smaps.ncoils(), smaps.nx(), smaps.ny()], &data)
}

/// Reads coil maps from a rank-3 CPLX1 array; the normalized flag is set
/// when the per-pixel power is 1 to within 1e-9 everywhere.
pub fn read_smaps(path: &Path) -> Result<SensitivityMaps64> {
    let (dims, data) = read_cplx1(path)?;
    let [nc, nx, ny]: [usize; 3] = dims
        .try_into()
        .map_err(|_| HarnessError::Config(format!("{} does not hold rank-3 coil maps", path.display())))?;
    let arr = Array3::from_shape_vec((nc, nx, ny), data).expect("length checked by reader");
    let mut normalized = true;
    for i in 0..nx {
        for j in 0..ny {
            let p: f64 = (0..nc).map(|l| arr[[l, i, j]].norm_sqr()).sum();
            if (p - 1.0).abs() > 1e-9 {
                normalized = false;
            }
        }
    }
    Ok(SensitivityMaps64::new(arr, normalized)?)
}

/// Writes a sampling mask as a MASK1 file.
pub fn write_mask(path: &Path, mask: &SamplingMask) -> Result<()> {
    let werr = |e: std::io::Error| write_err(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(werr)?);
    write_header(&mut w, MASK1_MAGIC, &[mask.nx(), mask.ny()]).map_err(werr)?;
    for &keep in mask.grid().iter() {
        w.write_all(&[u8::from(keep)]).map_err(werr)?;
    }
    w.flush().map_err(werr)
}

/// Reads a MASK1 file back into a sampling mask.
pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    let mut r = BufReader::new(File::open(path).map_err(|e| read_err(path, e))?);
    let dims = read_header(&mut r, MASK1_MAGIC, &format!("{} is not a MASK1 file", path.display()))?;
    let [nx, ny]: [usize; 2] = dims
        .try_into()
        .map_err(|_| HarnessError::Config(format!("{} does not hold a rank-2 mask", path.display())))?;
    let mut raw = vec![0u8; nx * ny];
    r.read_exact(&mut raw)
        .map_err(|_| HarnessError::Config(format!("{}: truncated mask section", path.display())))?;
    let mut keep = Array2::from_elem((nx, ny), false);
    for (slot, &b) in keep.iter_mut().zip(raw.iter()) {
        *slot = match b {
            0 => false,
            1 => true,
            _ => {
                return Err(HarnessError::Config(format!(
                    "{}: mask bytes must be 0 or 1, found {b}",
                    path.display()
                )))
            }
        };
    }
    Ok(SamplingMask::new(keep)?)
}

/// Writes an 8-bit binary PGM of the image magnitude, linearly scaled so the
/// largest magnitude maps to 255 (an all-zero image stays all zero).
pub fn write_pgm(path: &Path, img: &Image64) -> Result<()> {
    let werr = |e: std::io::Error| write_err(path, e);
    let maxmag = img.data().iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let scale = if maxmag > 0.0 { 255.0 / maxmag } else { 0.0 };
    let mut w = BufWriter::new(File::create(path).map_err(werr)?);
    write!(w, "P5\n{} {}\n255\n", img.ny(), img.nx()).map_err(werr)?;
    let bytes: Vec<u8> = img.data().iter().map(|v| (v.norm() * scale).round() as u8).collect();
    w.write_all(&bytes).map_err(werr)?;
    w.flush().map_err(werr)
}

/// Writes a solver trace as CSV with the fixed header `iter,cost,nrmse,seconds`,
/// one row per iteration starting at iteration 0.
///
/// The seconds column is written as `0` unless `wall_clock` is set: the CSV
/// is part of the reproducibility contract (identical configurations must
/// produce byte-identical traces), and wall-clock values would break that.
pub fn write_trace_csv(path: &Path, trace: &SolverTrace<f64>, wall_clock: bool) -> Result<()> {
    let werr = |e: std::io::Error| write_err(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(werr)?);
    writeln!(w, "iter,cost,nrmse,seconds").map_err(werr)?;
    for rec in trace.records() {
        let nrmse = match rec.nrmse {
            Some(v) => format!("{v}"),
            None => "nan".into(),
        };
        let seconds = if wall_clock { format!("{}", rec.seconds) } else { "0".into() };
        writeln!(w, "{},{},{},{}", rec.iter, rec.cost, nrmse, seconds).map_err(werr)?;
    }
    w.flush().map_err(werr)
}

/// One parsed trace row: iteration, cost, relative error, seconds.
pub type TraceRow = (usize, f64, f64, f64);

/// Reads a trace CSV written by [`write_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Config(format!("{} is empty", path.display())))?;
    if header != "iter,cost,nrmse,seconds" {
        return Err(HarnessError::Config(format!(
            "{}: unexpected trace header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Config(format!(
                "{} line {}: expected 4 fields, found {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            HarnessError::Config(format!("{} line {}: bad {what} field", path.display(), lineno + 2))
        };
        rows.push((
            fields[0].parse().map_err(|_| bad("iter"))?,
            fields[1].parse().map_err(|_| bad("cost"))?,
            fields[2].parse().map_err(|_| bad("nrmse"))?,
            fields[3].parse().map_err(|_| bad("seconds"))?,
        ));
    }
    Ok(rows)
}

/// Human-readable description of a data file for the `info` subcommand:
/// detects CPLX1, MASK1, and PGM payloads by their magic bytes.
pub fn describe_data_file(path: &Path) -> Result<Option<String>> {
    let mut f = File::open(path).map_err(|e| read_err(path, e))?;
    let mut magic = [0u8; 6];
    let got = f.read(&mut magic).map_err(|e| read_err(path, e))?;
    drop(f);
    if got >= 6 && &magic == CPLX1_MAGIC {
        let (dims, data) = read_cplx1(path)?;
        let maxmag = data.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let norm = data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let dims_s: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
        return Ok(Some(format!(
            "CPLX1 complex array: dims {} ({} values), max magnitude {:.6e}, Frobenius norm {:.6e}",
            dims_s.join("x"),
            data.len(),
            maxmag,
            norm
        )));
    }
    if got >= 6 && &magic == MASK1_MAGIC {
        let mask = read_mask(path)?;
        return Ok(Some(format!(
            "MASK1 sampling mask: {}x{}, {} of {} samples kept (fraction {:.4})",
            mask.nx(),
            mask.ny(),
            mask.count(),
            mask.nx() * mask.ny(),
            mask.fraction()
        )));
    }
    if got >= 2 && &magic[..2] == b"P5" {
        let text = std::fs::read(path).map_err(|e| read_err(path, e))?;
        // The ASCII header fits well inside 64 bytes; the binary payload
        // after it need not be valid UTF-8, so decode lossily.
        let head = String::from_utf8_lossy(&text[..text.len().min(64)]).into_owned();
        let header: Vec<&str> = head.split_ascii_whitespace().take(4).collect();
        if header.len() == 4 {
            return Ok(Some(format!(
                "PGM magnitude preview: {} wide x {} tall, max gray {}",
                header[1], header[2], header[3]
            )));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn cx(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    #[test]
    fn complex_arrays_round_trip_bit_exactly() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.cplx1");
        let data = vec![cx(1.5, -2.25), cx(0.0, 1e-300), cx(-7.0, 3.5), cx(f64::MIN_POSITIVE, 0.0)];
        write_cplx1(&p, &[2, 2], &data).unwrap();
        let (dims, back) = read_cplx1(&p).unwrap();
        assert_eq!(dims, vec![2, 2]);
        for (a, b) in data.iter().zip(back.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn image_and_samples_round_trip() {
        let dir = tempdir().unwrap();
        let arr = Array2::from_shape_fn((3, 5), |(i, j)| cx(i as f64 + 0.5, j as f64 - 2.0));
        let img = Image64::new(arr.clone()).unwrap();
        let p = dir.path().join("img.cplx1");
        write_image(&p, &img).unwrap();
        assert_eq!(read_image(&p).unwrap().data(), img.data());

        let p2 = dir.path().join("y.cplx1");
        write_samples(&p2, &arr).unwrap();
        assert_eq!(read_samples(&p2).unwrap(), arr);
    }

    #[test]
    fn masks_round_trip_and_reject_junk_bytes() {
        let dir = tempdir().unwrap();
        let keep = Array2::from_shape_fn((4, 6), |(i, j)| (i * 6 + j) % 3 != 1);
        let mask = SamplingMask::new(keep).unwrap();
        let p = dir.path().join("m.mask1");
        write_mask(&p, &mask).unwrap();
        let back = read_mask(&p).unwrap();
        assert_eq!(back.grid(), mask.grid());

        let mut bytes = std::fs::read(&p).unwrap();
        let last = bytes.len() - 1;
        bytes[last] = 7;
        std::fs::write(&p, &bytes).unwrap();
        let err = read_mask(&p).unwrap_err();
        assert!(err.to_string().contains("0 or 1"), "{err}");
    }

    #[test]
    fn header_validation_rejects_wrong_magic_truncation_and_trailing_bytes() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad");
        std::fs::write(&p, b"NOPE!\0\x01\x00\x00\x00\x02\x00\x00\x00").unwrap();
        assert!(read_cplx1(&p).is_err());

        let good = dir.path().join("good.cplx1");
        write_cplx1(&good, &[2], &[cx(1.0, 2.0), cx(3.0, 4.0)]).unwrap();
        let mut bytes = std::fs::read(&good).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_cplx1(&p).unwrap_err().to_string().contains("truncated"));

        let mut bytes = std::fs::read(&good).unwrap();
        bytes.push(0);
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_cplx1(&p).unwrap_err().to_string().contains("trailing"));
    }

    #[test]
    fn oversized_headers_are_rejected_without_allocation() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("huge.cplx1");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(CPLX1_MAGIC);
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&(u32::MAX).to_le_bytes());
        bytes.extend_from_slice(&(u32::MAX).to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_cplx1(&p).is_err());
    }

    #[test]
    fn pgm_scales_the_largest_magnitude_to_255() {
        let dir = tempdir().unwrap();
        let mut arr = Array2::from_elem((2, 3), cx(0.0, 0.0));
        arr[[0, 0]] = cx(0.0, -2.0); // magnitude 2 -> 255
        arr[[1, 2]] = cx(1.0, 0.0); // magnitude 1 -> 128
        let p = dir.path().join("x.pgm");
        write_pgm(&p, &Image64::new(arr).unwrap()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[255, 0, 0, 0, 0, 128]);
    }

    #[test]
    fn pgm_of_an_all_zero_image_is_all_zero() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("z.pgm");
        write_pgm(&p, &Image64::zeros(2, 2).unwrap()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert!(bytes[b"P5\n2 2\n255\n".len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn trace_csv_round_trips_and_zeroes_the_seconds_column() {
        let dir = tempdir().unwrap();
        let mut tr = SolverTrace::new();
        tr.record(0, 10.0, Some(1.0));
        tr.record(1, 2.5, Some(0.25));
        tr.record(2, 2.5e-3, None);
        let p = dir.path().join("t.csv");
        write_trace_csv(&p, &tr, false).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("iter,cost,nrmse,seconds\n"));
        for line in text.lines().skip(1) {
            assert!(line.ends_with(",0"), "seconds not zeroed: {line}");
        }
        let rows = read_trace_csv(&p).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], (0, 10.0, 1.0, 0.0));
        assert_eq!(rows[1], (1, 2.5, 0.25, 0.0));
        assert_eq!(rows[2].0, 2);
        assert!(rows[2].2.is_nan());
    }

    #[test]
    fn trace_csv_can_opt_into_wall_clock_seconds() {
        let dir = tempdir().unwrap();
        let mut tr = SolverTrace::new();
        tr.record(0, 1.0, Some(1.0));
        let p = dir.path().join("t.csv");
        write_trace_csv(&p, &tr, true).unwrap();
        let rows = read_trace_csv(&p).unwrap();
        assert!(rows[0].3 >= 0.0);
    }

    #[test]
    fn describe_recognizes_each_format() {
        let dir = tempdir().unwrap();
        let img = Image64::new(Array2::from_elem((8, 9), cx(0.5, 0.0))).unwrap();
        let pi = dir.path().join("i.cplx1");
        write_image(&pi, &img).unwrap();
        let d = describe_data_file(&pi).unwrap().unwrap();
        assert!(d.contains("CPLX1") && d.contains("8x9"), "{d}");

        let pm = dir.path().join("m.mask1");
        write_mask(&pm, &SamplingMask::full(4, 4).unwrap()).unwrap();
        let d = describe_data_file(&pm).unwrap().unwrap();
        assert!(d.contains("MASK1") && d.contains("16 of 16"), "{d}");

        let pp = dir.path().join("p.pgm");
        write_pgm(&pp, &img).unwrap();
        let d = describe_data_file(&pp).unwrap().unwrap();
        assert!(d.contains("PGM"), "{d}");

        let pt = dir.path().join("t.txt");
        std::fs::write(&pt, "hello").unwrap();
        assert!(describe_data_file(&pt).unwrap().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn any_complex_payload_round_trips(
            nx in 1usize..6,
            ny in 1usize..6,
            bits in proptest::collection::vec((any::<f64>(), any::<f64>()), 36),
        ) {
            let dir = tempdir().unwrap();
            let p = dir.path().join("rt.cplx1");
            let data: Vec<Cplx<f64>> = bits[..nx * ny].iter().map(|&(a, b)| cx(a, b)).collect();
            write_cplx1(&p, &[nx, ny], &data).unwrap();
            let (dims, back) = read_cplx1(&p).unwrap();
            prop_assert_eq!(dims, vec![nx, ny]);
            for (a, b) in data.iter().zip(back.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }

        #[test]
        fn any_mask_round_trips(nx in 1usize..7, ny in 1usize..7, seed in any::<u64>()) {
            // Pseudo-random but deterministic fill from the seed.
            let mut state = seed | 1;
            let mut keep = Array2::from_elem((nx, ny), false);
            let mut any_true = false;
            for v in keep.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *v = state >> 63 == 1;
                any_true |= *v;
            }
            if !any_true {
                keep[[0, 0]] = true;
            }
            let mask = SamplingMask::new(keep).unwrap();
            let dir = tempdir().unwrap();
            let p = dir.path().join("m.mask1");
            write_mask(&p, &mask).unwrap();
            let back = read_mask(&p).unwrap();
            prop_assert_eq!(back.grid(), mask.grid());
        }
    }
}
