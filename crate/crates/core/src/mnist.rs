//! IDX image/label files and a synthetic handwritten-digit stand-in.
//!
//! The loaders read the standard big-endian IDX containers (magic
//! `0x00000803` for images, `0x00000801` for labels) and normalize pixel
//! bytes by 1/255. The synthetic generator renders jittered, noisy glyphs
//! for the ten digits; it exercises the full embedding pipeline when the
//! real dataset is not on disk.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32_be<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

/// Load an IDX image file as an `n x (rows*cols)` matrix with pixel values
/// in `[0, 1]`.
pub fn load_idx_images(path: &Path) -> Result<Array2<f64>> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_u32_be(&mut r)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad IDX image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}",
            path.display()
        )));
    }
    let n = read_u32_be(&mut r)? as usize;
    let rows = read_u32_be(&mut r)? as usize;
    let cols = read_u32_be(&mut r)? as usize;
    let pixels = rows * cols;
    if n == 0 || pixels == 0 {
        return Err(Error::Format(format!(
            "{}: empty IDX image file",
            path.display()
        )));
    }
    let mut bytes = vec![0u8; n * pixels];
    r.read_exact(&mut bytes).map_err(|e| {
        Error::Format(format!(
            "{}: truncated IDX image payload: {e}",
            path.display()
        ))
    })?;
    let mut out = Array2::zeros((n, pixels));
    for (i, chunk) in bytes.chunks_exact(pixels).enumerate() {
        for (j, &b) in chunk.iter().enumerate() {
            out[(i, j)] = b as f64 / 255.0;
        }
    }
    Ok(out)
}

/// Load an IDX label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_u32_be(&mut r)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "{}: bad IDX label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}",
            path.display()
        )));
    }
    let n = read_u32_be(&mut r)? as usize;
    let mut bytes = vec![0u8; n];
    r.read_exact(&mut bytes).map_err(|e| {
        Error::Format(format!(
            "{}: truncated IDX label payload: {e}",
            path.display()
        ))
    })?;
    Ok(bytes.into_iter().map(|b| b as usize).collect())
}

/// Write images (values in `[0, 1]`, one row per image) as an IDX file.
pub fn write_idx_images(path: &Path, images: &ArrayView2<f64>, rows: usize, cols: usize) -> Result<()> {
    if rows * cols != images.ncols() {
        return Err(Error::Shape(format!(
            "{}x{} geometry does not match {} pixels",
            rows,
            cols,
            images.ncols()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&IMAGE_MAGIC.to_be_bytes())?;
    w.write_all(&(images.nrows() as u32).to_be_bytes())?;
    w.write_all(&(rows as u32).to_be_bytes())?;
    w.write_all(&(cols as u32).to_be_bytes())?;
    for row in images.rows() {
        let bytes: Vec<u8> = row
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

/// Write labels as an IDX file.
pub fn write_idx_labels(path: &Path, labels: &[usize]) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&l| l > 255) {
        return Err(Error::Input(format!("label {bad} does not fit in a byte")));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&LABEL_MAGIC.to_be_bytes())?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    let bytes: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

// 5x7 glyph bitmaps for the digits, one byte per row, bit 4 = leftmost.
const DIGIT_FONT: [[u8; 7]; 10] = [
    [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
    [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
    [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
    [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
    [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
    [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
    [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
    [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
    [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
];

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

/// Render `n_per_class` jittered, noisy 28x28 glyphs per digit class.
///
/// Rows come out shuffled (seeded); pixel values lie in `[0, 1]`.
pub fn synthetic_digits(n_per_class: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let n = n_per_class * 10;
    let mut rng = rng_from_seed(seed);
    let mut features = Array2::zeros((n, IMAGE_PIXELS));
    let mut labels = vec![0usize; n];
    let scale = 3usize; // glyph cells become 3x3 pixel blocks: 15x21 total
    for digit in 0..10 {
        for i in 0..n_per_class {
            let row_idx = digit * n_per_class + i;
            labels[row_idx] = digit;
            let dx = 6 + rng.gen_range(-3i32..=3) as i64;
            let dy = 3 + rng.gen_range(-3i32..=3) as i64;
            let intensity = rng.gen_range(0.6..1.0);
            let mut canvas = [0.0f64; IMAGE_PIXELS];
            for (gy, bits) in DIGIT_FONT[digit].iter().enumerate() {
                for gx in 0..5 {
                    if bits & (1 << (4 - gx)) == 0 {
                        continue;
                    }
                    for sy in 0..scale {
                        for sx in 0..scale {
                            let x = dx + (gx * scale + sx) as i64;
                            let y = dy + (gy * scale + sy) as i64;
                            if (0..IMAGE_SIDE as i64).contains(&x)
                                && (0..IMAGE_SIDE as i64).contains(&y)
                            {
                                canvas[y as usize * IMAGE_SIDE + x as usize] = intensity;
                            }
                        }
                    }
                }
            }
            // box blur softens the hard glyph edges
            let mut blurred = [0.0f64; IMAGE_PIXELS];
            for y in 0..IMAGE_SIDE {
                for x in 0..IMAGE_SIDE {
                    let mut acc = 0.0;
                    let mut count = 0.0;
                    for oy in -1i64..=1 {
                        for ox in -1i64..=1 {
                            let nx = x as i64 + ox;
                            let ny = y as i64 + oy;
                            if (0..IMAGE_SIDE as i64).contains(&nx)
                                && (0..IMAGE_SIDE as i64).contains(&ny)
                            {
                                acc += canvas[ny as usize * IMAGE_SIDE + nx as usize];
                                count += 1.0;
                            }
                        }
                    }
                    blurred[y * IMAGE_SIDE + x] = acc / count;
                }
            }
            for (j, &v) in blurred.iter().enumerate() {
                let noise: f64 = rng.sample(StandardNormal);
                features[(row_idx, j)] = (v + 0.05 * noise).clamp(0.0, 1.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut shuffled = Array2::zeros((n, IMAGE_PIXELS));
    let mut shuffled_labels = vec![0usize; n];
    for (r, &src) in order.iter().enumerate() {
        shuffled.row_mut(r).assign(&features.row(src));
        shuffled_labels[r] = labels[src];
    }
    (shuffled, shuffled_labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idx_round_trip() {
        let dir = std::env::temp_dir().join("acclim_idx_test");
        std::fs::create_dir_all(&dir).unwrap();
        let (images, labels) = synthetic_digits(2, 1);
        let img_path = dir.join("images.idx");
        let lbl_path = dir.join("labels.idx");
        write_idx_images(&img_path, &images.view(), 28, 28).unwrap();
        write_idx_labels(&lbl_path, &labels).unwrap();
        let loaded = load_idx_images(&img_path).unwrap();
        let loaded_labels = load_idx_labels(&lbl_path).unwrap();
        assert_eq!(loaded.shape(), images.shape());
        assert_eq!(loaded_labels, labels);
        // quantization to bytes is the only loss
        for (a, b) in loaded.iter().zip(images.iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn idx_rejects_bad_magic() {
        let dir = std::env::temp_dir().join("acclim_idx_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.idx");
        std::fs::write(&path, [0u8, 0, 8, 4, 0, 0, 0, 1]).unwrap();
        assert!(matches!(load_idx_images(&path), Err(Error::Format(_))));
        assert!(matches!(load_idx_labels(&path), Err(Error::Format(_))));
    }

    #[test]
    fn idx_rejects_truncated_payload() {
        let dir = std::env::temp_dir().join("acclim_idx_trunc");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tr.idx");
        let mut bytes = Vec::new();
        bytes.extend(0x0000_0803u32.to_be_bytes());
        bytes.extend(2u32.to_be_bytes());
        bytes.extend(2u32.to_be_bytes());
        bytes.extend(2u32.to_be_bytes());
        bytes.extend([1u8, 2, 3]); // needs 8 pixel bytes
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_idx_images(&path), Err(Error::Format(_))));
    }

    #[test]
    fn synthetic_digits_are_labeled_and_bounded() {
        let (images, labels) = synthetic_digits(5, 7);
        assert_eq!(images.nrows(), 50);
        assert_eq!(images.ncols(), 784);
        assert_eq!(labels.len(), 50);
        let mut counts = [0usize; 10];
        for &l in &labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c == 5));
        assert!(images.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // determinism
        let (again, again_labels) = synthetic_digits(5, 7);
        assert_eq!(again, images);
        assert_eq!(again_labels, labels);
    }

    #[test]
    fn synthetic_classes_are_distinguishable() {
        // the per-class mean images of different digits differ markedly
        let (images, labels) = synthetic_digits(20, 3);
        let mut means = vec![vec![0.0f64; 784]; 10];
        let mut counts = vec![0usize; 10];
        for (row, &label) in images.rows().into_iter().zip(&labels) {
            counts[label] += 1;
            for (j, &v) in row.iter().enumerate() {
                means[label][j] += v;
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            for v in m.iter_mut() {
                *v /= c as f64;
            }
        }
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        for a in 0..10 {
            for b in (a + 1)..10 {
                assert!(
                    dist(&means[a], &means[b]) > 1.0,
                    "digits {a} and {b} are too similar"
                );
            }
        }
    }
}
