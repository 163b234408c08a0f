//! Superstatistical two-class Gaussian data generator.
//!
//! Three control quantities shape the data: dimensionality `D`, class
//! separation `S`, and intra-class feature correlation `C`. For each
//! repetition a fresh parameter set (per-class mean and covariance) is
//! drawn from C/S-controlled meta-distributions, then `n_vec` vectors are
//! sampled from the resulting Gaussians.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Control quantities of the generator.
#[derive(Debug, Clone)]
pub struct DscControl {
    /// Feature-space dimensionality.
    pub dims: usize,
    /// Class separation: class-1 feature means are uniform in `[0, S]`.
    pub separation: f64,
    /// Correlation quantity in `[0, 2]` steering the off-diagonal
    /// covariance distribution.
    pub correlation: f64,
    /// Number of independent parameter sets (repetitions).
    pub n_rep: usize,
    /// Vectors per data set, split equally over the two classes.
    pub n_vec: usize,
    pub seed: u64,
}

impl DscControl {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::Config("D must be >= 1".into()));
        }
        if !(0.0..=2.0).contains(&self.correlation) {
            return Err(Error::Domain(format!(
                "correlation quantity must lie in [0, 2], got {}",
                self.correlation
            )));
        }
        if self.separation < 0.0 {
            return Err(Error::Domain(format!(
                "separation must be non-negative, got {}",
                self.separation
            )));
        }
        if self.n_vec == 0 || self.n_vec % 2 != 0 {
            return Err(Error::Config(format!(
                "n_vec must be a positive even number, got {}",
                self.n_vec
            )));
        }
        Ok(())
    }
}

/// Mean vector and covariance matrix of one class.
#[derive(Debug, Clone)]
pub struct ClassParams {
    pub mu: Array1<f64>,
    pub sigma: Array2<f64>,
}

impl ClassParams {
    pub fn dims(&self) -> usize {
        self.mu.len()
    }
}

/// Draw one off-diagonal covariance entry from the box density `q(x, C)`:
/// uniform on `[0, C]` for `C <= 1`, uniform on `[C-1, 1]` for `C > 1`.
pub fn sample_offdiag(c: f64, rng: &mut Rng) -> Result<f64> {
    if !(0.0..=2.0).contains(&c) {
        return Err(Error::Domain(format!(
            "correlation quantity must lie in [0, 2], got {c}"
        )));
    }
    let (lo, hi) = if c <= 1.0 { (0.0, c) } else { (c - 1.0, 1.0) };
    // lo + u*(hi-lo) keeps the degenerate endpoints (C=0, C=2) exact.
    let u: f64 = rng.gen();
    Ok(lo + u * (hi - lo))
}

/// Clip negative eigenvalues to zero and reconstruct.
///
/// The random covariance construction does not guarantee positive
/// semidefiniteness; this repairs the draw deterministically while leaving
/// already-PSD inputs untouched (within round-off).
pub fn repair_psd(sigma: &Array2<f64>) -> Result<Array2<f64>> {
    let eig = symmetric_eigen(&sigma.view())?;
    if eig.values.iter().all(|&v| v >= 0.0) {
        return Ok(sigma.clone());
    }
    let d = sigma.nrows();
    let mut out = Array2::zeros((d, d));
    for (k, &lambda) in eig.values.iter().enumerate() {
        let l = lambda.max(0.0);
        if l == 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += l * v[i] * v[j];
            }
        }
    }
    // re-symmetrize against accumulation round-off
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Draw one parameter set for the two classes.
///
/// Class 0 means are zero, class 1 means are uniform in `[0, S]`; both
/// covariance matrices have unit diagonal and `q(x, C)`-distributed
/// off-diagonals, PSD-repaired.
pub fn build_class_params(control: &DscControl, rng: &mut Rng) -> Result<(ClassParams, ClassParams)> {
    control.validate()?;
    let d = control.dims;
    let mu0 = Array1::zeros(d);
    let mut mu1 = Array1::zeros(d);
    for f in 0..d {
        let u: f64 = rng.gen();
        mu1[f] = u * control.separation;
    }
    let mut sigmas = Vec::with_capacity(2);
    for _class in 0..2 {
        let mut sigma = Array2::eye(d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = sample_offdiag(control.correlation, rng)?;
                sigma[(i, j)] = v;
                sigma[(j, i)] = v;
            }
        }
        sigmas.push(repair_psd(&sigma)?);
    }
    let sigma1 = sigmas.pop().expect("two sigmas");
    let sigma0 = sigmas.pop().expect("two sigmas");
    Ok((
        ClassParams {
            mu: mu0,
            sigma: sigma0,
        },
        ClassParams {
            mu: mu1,
            sigma: sigma1,
        },
    ))
}

/// Factorized sampler for one multivariate Gaussian.
///
/// Uses the eigendecomposition `sigma = E diag(L) E^T`, so singular
/// covariances (fully correlated classes) are handled exactly.
pub struct GaussianSampler {
    mu: Array1<f64>,
    // E * sqrt(L), with negative round-off eigenvalues clipped to zero
    factor: Array2<f64>,
}

impl GaussianSampler {
    pub fn new(params: &ClassParams) -> Result<Self> {
        let d = params.dims();
        if params.sigma.nrows() != d || params.sigma.ncols() != d {
            return Err(Error::Shape(format!(
                "mean has {} entries but covariance is {}x{}",
                d,
                params.sigma.nrows(),
                params.sigma.ncols()
            )));
        }
        let eig = symmetric_eigen(&params.sigma.view())?;
        let mut factor = Array2::zeros((d, d));
        for k in 0..d {
            let scale = eig.values[k].max(0.0).sqrt();
            for i in 0..d {
                factor[(i, k)] = eig.vectors[(i, k)] * scale;
            }
        }
        Ok(Self {
            mu: params.mu.clone(),
            factor,
        })
    }

    pub fn sample(&self, rng: &mut Rng) -> Array1<f64> {
        let d = self.mu.len();
        let z = Array1::from_shape_simple_fn(d, || rng.sample::<f64, _>(StandardNormal));
        &self.mu + &self.factor.dot(&z)
    }
}

/// Sample a labeled two-class dataset, `n_vec/2` vectors per class, rows in
/// random class order.
pub fn sample_dataset(
    params0: &ClassParams,
    params1: &ClassParams,
    n_vec: usize,
    rng: &mut Rng,
) -> Result<LabeledDataset> {
    if params0.dims() != params1.dims() {
        return Err(Error::Shape(format!(
            "class dimensions disagree: {} vs {}",
            params0.dims(),
            params1.dims()
        )));
    }
    if n_vec == 0 || n_vec % 2 != 0 {
        return Err(Error::Config(format!(
            "n_vec must be a positive even number, got {n_vec}"
        )));
    }
    let d = params0.dims();
    let half = n_vec / 2;
    let sampler0 = GaussianSampler::new(params0)?;
    let sampler1 = GaussianSampler::new(params1)?;

    let mut features = Array2::zeros((n_vec, d));
    let mut labels = vec![0usize; n_vec];
    for i in 0..half {
        features.row_mut(i).assign(&sampler0.sample(rng));
    }
    for i in half..n_vec {
        features.row_mut(i).assign(&sampler1.sample(rng));
        labels[i] = 1;
    }
    let mut order: Vec<usize> = (0..n_vec).collect();
    order.shuffle(rng);
    let mut shuffled = Array2::zeros((n_vec, d));
    let mut shuffled_labels = vec![0usize; n_vec];
    for (row, &src) in order.iter().enumerate() {
        shuffled.row_mut(row).assign(&features.row(src));
        shuffled_labels[row] = labels[src];
    }
    LabeledDataset::new(shuffled, shuffled_labels)
}

/// Random train/test partition (see [`LabeledDataset::split_random`]).
pub fn split_dataset(
    mut data: LabeledDataset,
    train_fraction: f64,
    rng: &mut Rng,
) -> Result<LabeledDataset> {
    data.split_random(train_fraction, rng)?;
    Ok(data)
}

/// RMS over the strictly-upper-triangular entries of a matrix.
pub fn offdiag_rms(sigma: &Array2<f64>) -> Result<f64> {
    let d = sigma.nrows();
    if d < 2 || sigma.ncols() != d {
        return Err(Error::Domain(format!(
            "off-diagonal RMS needs a square matrix with D >= 2, got {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..d {
        for j in (i + 1)..d {
            acc += sigma[(i, j)] * sigma[(i, j)];
            count += 1;
        }
    }
    Ok((acc / count as f64).sqrt())
}

/// One generated repetition: the parameter set and the sampled data.
pub struct DscRepetition {
    pub params0: ClassParams,
    pub params1: ClassParams,
    pub dataset: LabeledDataset,
}

/// Generate repetition `index` of the control's stream: parameters and an
/// 80/20-split dataset, reproducible from `(control.seed, index)` alone.
pub fn generate_repetition(control: &DscControl, index: usize) -> Result<DscRepetition> {
    generate_repetition_with_split(control, index, 0.8)
}

pub fn generate_repetition_with_split(
    control: &DscControl,
    index: usize,
    train_fraction: f64,
) -> Result<DscRepetition> {
    control.validate()?;
    let mut rng = rng_from_seed(derive_seed(control.seed, index as u64));
    let (params0, params1) = build_class_params(control, &mut rng)?;
    let dataset = sample_dataset(&params0, &params1, control.n_vec, &mut rng)?;
    let dataset = split_dataset(dataset, train_fraction, &mut rng)?;
    Ok(DscRepetition {
        params0,
        params1,
        dataset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn control(d: usize, s: f64, c: f64) -> DscControl {
        DscControl {
            dims: d,
            separation: s,
            correlation: c,
            n_rep: 1,
            n_vec: 100,
            seed: 1234,
        }
    }

    #[test]
    fn offdiag_endpoints_are_exact() {
        let mut rng = rng_from_seed(0);
        for _ in 0..100 {
            assert_eq!(sample_offdiag(0.0, &mut rng).unwrap(), 0.0);
            assert_eq!(sample_offdiag(2.0, &mut rng).unwrap(), 1.0);
        }
        assert!(sample_offdiag(-0.1, &mut rng).is_err());
        assert!(sample_offdiag(2.1, &mut rng).is_err());
    }

    #[test]
    fn offdiag_rms_matches_uniform_second_moment() {
        // E[x^2] of uniform[0, C] is C^2/3, so the RMS tends to C/sqrt(3).
        let mut rng = rng_from_seed(5);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let v = sample_offdiag(0.5, &mut rng).unwrap();
            acc += v * v;
        }
        let rms = (acc / n as f64).sqrt();
        assert_abs_diff_eq!(rms, 0.5 / 3.0_f64.sqrt(), epsilon = 3e-3);
    }

    #[test]
    fn offdiag_ranges_follow_correlation_quantity() {
        let mut rng = rng_from_seed(6);
        for _ in 0..1000 {
            let v = sample_offdiag(0.7, &mut rng).unwrap();
            assert!((0.0..=0.7).contains(&v));
            let w = sample_offdiag(1.6, &mut rng).unwrap();
            assert!((0.6..=1.0).contains(&w));
        }
    }

    #[test]
    fn class_params_zero_separation_means_zero_mu1() {
        let mut rng = rng_from_seed(7);
        let (p0, p1) = build_class_params(&control(4, 0.0, 0.5), &mut rng).unwrap();
        assert!(p0.mu.iter().all(|&v| v == 0.0));
        assert!(p1.mu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn class_params_c0_gives_identity() {
        let mut rng = rng_from_seed(8);
        let (p0, p1) = build_class_params(&control(5, 1.0, 0.0), &mut rng).unwrap();
        assert_eq!(p0.sigma, Array2::eye(5));
        assert_eq!(p1.sigma, Array2::eye(5));
    }

    #[test]
    fn class_params_c2_gives_all_ones() {
        let mut rng = rng_from_seed(9);
        let (p0, _) = build_class_params(&control(3, 1.0, 2.0), &mut rng).unwrap();
        for v in p0.sigma.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-10);
        }
        // rank-1 all-ones matrix is PSD: eigenvalues {D, 0, 0}
        let eig = symmetric_eigen(&p0.sigma.view()).unwrap();
        assert!(eig.values.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn repair_psd_keeps_psd_input() {
        let eye: Array2<f64> = Array2::eye(4);
        assert_eq!(repair_psd(&eye).unwrap(), eye);
        let near = array![[1.0, 0.999], [0.999, 1.0]];
        let repaired = repair_psd(&near).unwrap();
        for (a, b) in repaired.iter().zip(near.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn repair_psd_fixes_indefinite_matrix() {
        // One flipped sign makes this 3x3 indefinite.
        let sigma = array![
            [1.0, 0.9, 0.9],
            [0.9, 1.0, -0.9],
            [0.9, -0.9, 1.0]
        ];
        let pre = symmetric_eigen(&sigma.view()).unwrap();
        assert!(pre.values.iter().any(|&v| v < 0.0));
        let repaired = repair_psd(&sigma).unwrap();
        let post = symmetric_eigen(&repaired.view()).unwrap();
        assert!(post.values.iter().all(|&v| v >= -1e-10));
    }

    #[test]
    fn sampled_moments_match_parameters() {
        let params = ClassParams {
            mu: Array1::zeros(3),
            sigma: Array2::eye(3),
        };
        let sampler = GaussianSampler::new(&params).unwrap();
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let mut sum = Array1::<f64>::zeros(3);
        let mut cov = Array2::<f64>::zeros((3, 3));
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let x = sampler.sample(&mut rng);
            sum += &x;
            samples.push(x);
        }
        let mean = &sum / n as f64;
        for x in &samples {
            let d = x - &mean;
            for i in 0..3 {
                for j in 0..3 {
                    cov[(i, j)] += d[i] * d[j];
                }
            }
        }
        cov /= n as f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(cov[(i, j)], want, epsilon = 0.02);
            }
        }
    }

    #[test]
    fn fully_correlated_components_are_identical() {
        let d = 4;
        let params = ClassParams {
            mu: Array1::zeros(d),
            sigma: Array2::from_elem((d, d), 1.0),
        };
        let sampler = GaussianSampler::new(&params).unwrap();
        let mut rng = rng_from_seed(12);
        for _ in 0..50 {
            let x = sampler.sample(&mut rng);
            for i in 1..d {
                assert_abs_diff_eq!(x[i], x[0], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dataset_has_equal_class_counts() {
        let params = ClassParams {
            mu: Array1::zeros(2),
            sigma: Array2::eye(2),
        };
        let mut rng = rng_from_seed(13);
        let ds = sample_dataset(&params, &params, 10, &mut rng).unwrap();
        let counts = ds.class_counts();
        assert_eq!(counts, vec![5, 5]);
    }

    #[test]
    fn repetitions_are_reproducible() {
        let ctrl = control(6, 1.0, 0.8);
        let a = generate_repetition(&ctrl, 3).unwrap();
        let b = generate_repetition(&ctrl, 3).unwrap();
        assert_eq!(a.dataset.features, b.dataset.features);
        assert_eq!(a.dataset.labels, b.dataset.labels);
        assert_eq!(a.dataset.split, b.dataset.split);
        let c = generate_repetition(&ctrl, 4).unwrap();
        assert_ne!(a.dataset.features, c.dataset.features);
    }

    #[test]
    fn generated_sigmas_are_psd() {
        for c in [0.25, 0.5, 0.9, 1.3, 1.9] {
            let ctrl = control(8, 1.0, c);
            let rep = generate_repetition(&ctrl, 0).unwrap();
            for sigma in [&rep.params0.sigma, &rep.params1.sigma] {
                let eig = symmetric_eigen(&sigma.view()).unwrap();
                assert!(
                    eig.values.iter().all(|&v| v >= -1e-10),
                    "C={c}: min eigenvalue {:?}",
                    eig.values.last()
                );
            }
        }
    }

    #[test]
    fn offdiag_rms_values() {
        let eye: Array2<f64> = Array2::eye(3);
        assert_eq!(offdiag_rms(&eye).unwrap(), 0.0);
        let ones = Array2::from_elem((3, 3), 1.0);
        assert_abs_diff_eq!(offdiag_rms(&ones).unwrap(), 1.0, epsilon = 1e-15);
        let m = array![[1.0, 0.6], [0.6, 1.0]];
        assert_abs_diff_eq!(offdiag_rms(&m).unwrap(), 0.6, epsilon = 1e-15);
        let one = Array2::<f64>::eye(1);
        assert!(offdiag_rms(&one).is_err());
    }

    #[test]
    fn split_sizes_for_canonical_run() {
        let params = ClassParams {
            mu: Array1::zeros(2),
            sigma: Array2::eye(2),
        };
        let mut rng = rng_from_seed(14);
        let ds = sample_dataset(&params, &params, 10_000, &mut rng).unwrap();
        let ds = split_dataset(ds, 0.8, &mut rng).unwrap();
        let split = ds.split.as_ref().unwrap();
        assert_eq!(split.train.len(), 8000);
        assert_eq!(split.test.len(), 2000);
    }
}
