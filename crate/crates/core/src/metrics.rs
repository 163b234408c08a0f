//! Class-separability scoring via the general discrimination value (GDV).
//!
//! Points are first z-scored per dimension (population standard deviation)
//! and scaled by one half. The GDV is the mean intra-class distance,
//! averaged over classes, minus the mean inter-class distance, averaged
//! over unordered class pairs, divided by `sqrt(D)`. More negative values
//! mean better-separated classes.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;
use crate::rng::rng_from_seed;

/// Above this point count the set is subsampled (seeded) before the exact
/// O(N^2) distance computation.
pub const SUBSAMPLE_CAP: usize = 10_000;

const SUBSAMPLE_SEED: u64 = 0xD15C;

/// GDV with the default subsample cap and seed.
pub fn gdv(points: &ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    gdv_seeded(points, labels, SUBSAMPLE_CAP, SUBSAMPLE_SEED)
}

/// GDV with explicit subsampling control.
pub fn gdv_seeded(
    points: &ArrayView2<f64>,
    labels: &[usize],
    cap: usize,
    seed: u64,
) -> Result<f64> {
    let n = points.nrows();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{n} points but {} labels",
            labels.len()
        )));
    }
    if n > cap && cap >= 2 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng_from_seed(seed));
        idx.truncate(cap);
        idx.sort_unstable();
        let d = points.ncols();
        let mut sub = Array2::zeros((cap, d));
        let mut sub_labels = Vec::with_capacity(cap);
        for (r, &i) in idx.iter().enumerate() {
            sub.row_mut(r).assign(&points.row(i));
            sub_labels.push(labels[i]);
        }
        return gdv_exact(&sub.view(), &sub_labels);
    }
    gdv_exact(points, labels)
}

fn gdv_exact(points: &ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let n = points.nrows();
    let d = points.ncols();
    if n < 2 {
        return Err(Error::Input("GDV needs at least two points".into()));
    }
    if d == 0 {
        return Err(Error::Shape("GDV needs at least one dimension".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("GDV: non-finite point coordinates".into()));
    }

    // map distinct labels (sorted) to dense class indices
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let l = distinct.len();
    if l < 2 {
        return Err(Error::Input("GDV needs at least two classes".into()));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|lab| distinct.binary_search(lab).expect("label present"))
        .collect();
    let mut class_sizes = vec![0usize; l];
    for &c in &class_of {
        class_sizes[c] += 1;
    }
    if let Some(small) = class_sizes.iter().position(|&s| s < 2) {
        return Err(Error::Domain(format!(
            "class {} has fewer than 2 points",
            distinct[small]
        )));
    }

    // z-score each dimension with the population standard deviation and
    // scale by one half
    let mut scaled = points.to_owned();
    for col in 0..d {
        let column = scaled.column(col);
        let mean = column.sum() / n as f64;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            return Err(Error::Domain(format!(
                "dimension {col} has zero variance; GDV is undefined"
            )));
        }
        let inv = 0.5 / var.sqrt();
        for v in scaled.column_mut(col) {
            *v = (*v - mean) * inv;
        }
    }

    // one pass over all point pairs, bucketed into intra-class sums and
    // per-class-pair inter sums; per-row partials are reduced in row order
    let n_pairs = l * (l - 1) / 2;
    let n_buckets = l + n_pairs;
    let pair_bucket = |a: usize, b: usize| -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        l + a * l - a * (a + 1) / 2 + (b - a - 1)
    };
    let row_partials: Vec<Vec<f64>> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut local = vec![0.0f64; n_buckets];
            let pi = scaled.row(i);
            let ci = class_of[i];
            for j in (i + 1)..n {
                let pj = scaled.row(j);
                let mut acc = 0.0;
                for k in 0..d {
                    let diff = pi[k] - pj[k];
                    acc += diff * diff;
                }
                let dist = acc.sqrt();
                let cj = class_of[j];
                let bucket = if ci == cj { ci } else { pair_bucket(ci, cj) };
                local[bucket] += dist;
            }
            local
        })
        .collect();
    let mut sums = vec![0.0f64; n_buckets];
    let mut scratch = vec![0.0f64; row_partials.len()];
    for (b, sum) in sums.iter_mut().enumerate() {
        for (r, part) in row_partials.iter().enumerate() {
            scratch[r] = part[b];
        }
        *sum = pairwise_sum(&scratch);
    }

    let mut mean_intra = 0.0;
    for c in 0..l {
        let n_c = class_sizes[c] as f64;
        mean_intra += sums[c] * 2.0 / (n_c * (n_c - 1.0));
    }
    mean_intra /= l as f64;

    let mut mean_inter = 0.0;
    for a in 0..l {
        for b in (a + 1)..l {
            let n_a = class_sizes[a] as f64;
            let n_b = class_sizes[b] as f64;
            mean_inter += sums[pair_bucket(a, b)] / (n_a * n_b);
        }
    }
    mean_inter *= 2.0 / (l as f64 * (l as f64 - 1.0));

    Ok((mean_intra - mean_inter) / (d as f64).sqrt())
}

/// Per-dataset GDV values with aggregate statistics.
#[derive(Debug, Clone)]
pub struct GdvSweep {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the values.
    pub spread: f64,
}

/// Evaluate the GDV of several labeled point sets.
pub fn gdv_sweep(sets: &[(ArrayView2<f64>, &[usize])]) -> Result<GdvSweep> {
    if sets.is_empty() {
        return Err(Error::Input("gdv_sweep needs at least one dataset".into()));
    }
    let mut values = Vec::with_capacity(sets.len());
    for (points, labels) in sets {
        values.push(gdv(points, labels)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / values.len() as f64)
        .sqrt();
    Ok(GdvSweep {
        values,
        mean,
        spread,
    })
}
