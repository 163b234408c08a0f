//! Ideal-classifier confusion matrices and the accuracy limit.
//!
//! Given known class-conditional generation densities, the best possible
//! classifier assigns each point to the class with the largest posterior.
//! Integrating the resulting confusion density over feature space (on a
//! grid in low dimensions, by Monte Carlo otherwise) yields the confusion
//! matrix of that ideal classifier; the mean of its diagonal is the
//! accuracy limit that no trained model can exceed.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, symmetric_eigen};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// A multivariate Gaussian class density with cached precision matrix,
/// log-determinant and sampling factor.
#[derive(Debug, Clone)]
pub struct GaussianClassDensity {
    pub mu: Array1<f64>,
    pub sigma: Array2<f64>,
    precision: Array2<f64>,
    log_norm: f64,
    sample_factor: Array2<f64>,
    /// Set when a diagonal ridge had to be added before inversion.
    pub ridged: bool,
}

impl GaussianClassDensity {
    /// Build a density from a mean and a symmetric covariance.
    ///
    /// Near-singular covariances get a diagonal ridge of `1e-9` before
    /// inversion; the `ridged` flag records that this happened.
    pub fn new(mu: Array1<f64>, sigma: Array2<f64>) -> Result<Self> {
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::Shape(format!(
                "mean has {} entries but covariance is {}x{}",
                d,
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let mut eig = symmetric_eigen(&sigma.view())?;
        let mut sigma = sigma;
        let mut ridged = false;
        if eig.values.iter().any(|&v| v < 1e-10) {
            for i in 0..d {
                sigma[(i, i)] += 1e-9;
            }
            eig = symmetric_eigen(&sigma.view())?;
            ridged = true;
            if eig.values.iter().any(|&v| v <= 0.0) {
                return Err(Error::Numeric(
                    "covariance is not positive definite even after ridge".into(),
                ));
            }
        }
        let mut precision = Array2::zeros((d, d));
        let mut sample_factor = Array2::zeros((d, d));
        let mut log_det = 0.0;
        for (k, &lambda) in eig.values.iter().enumerate() {
            log_det += lambda.ln();
            let inv = 1.0 / lambda;
            let root = lambda.max(0.0).sqrt();
            for i in 0..d {
                sample_factor[(i, k)] = eig.vectors[(i, k)] * root;
                for j in 0..d {
                    precision[(i, j)] += inv * eig.vectors[(i, k)] * eig.vectors[(j, k)];
                }
            }
        }
        let log_norm = -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
        Ok(Self {
            mu,
            sigma,
            precision,
            log_norm,
            sample_factor,
            ridged,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Log density at `x`.
    pub fn log_pdf(&self, x: ArrayView1<f64>) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        let mut quad = 0.0;
        for i in 0..d {
            let dx_i = x[i] - self.mu[i];
            let mut row = 0.0;
            for j in 0..d {
                row += self.precision[(i, j)] * (x[j] - self.mu[j]);
            }
            quad += dx_i * row;
        }
        self.log_norm - 0.5 * quad
    }

    pub fn pdf(&self, x: ArrayView1<f64>) -> f64 {
        self.log_pdf(x).exp()
    }

    /// Draw one sample through the eigenvalue factor (valid for singular
    /// covariances as well).
    pub fn sample(&self, rng: &mut Rng) -> Array1<f64> {
        let d = self.dim();
        let z = Array1::from_shape_simple_fn(d, || rng.sample::<f64, _>(StandardNormal));
        &self.mu + &self.sample_factor.dot(&z)
    }
}

/// A K-class mixture of analytic class densities with priors.
#[derive(Debug, Clone)]
pub struct MixtureProblem {
    pub classes: Vec<GaussianClassDensity>,
    pub priors: Vec<f64>,
}

impl MixtureProblem {
    /// Build with uniform priors.
    pub fn uniform(classes: Vec<GaussianClassDensity>) -> Result<Self> {
        let k = classes.len();
        Self::new(classes, vec![1.0 / k as f64; k])
    }

    pub fn new(classes: Vec<GaussianClassDensity>, priors: Vec<f64>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::Config("a mixture problem needs K >= 2 classes".into()));
        }
        if priors.len() != classes.len() {
            return Err(Error::Config(format!(
                "{} priors for {} classes",
                priors.len(),
                classes.len()
            )));
        }
        if priors.iter().any(|&p| p < 0.0) {
            return Err(Error::Domain("priors must be non-negative".into()));
        }
        let sum: f64 = priors.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("priors sum to {sum}, expected 1")));
        }
        let d = classes[0].dim();
        if classes.iter().any(|c| c.dim() != d) {
            return Err(Error::Shape("class densities disagree in dimension".into()));
        }
        Ok(Self { classes, priors })
    }

    pub fn dim(&self) -> usize {
        self.classes[0].dim()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Two 2D Gaussian classes centered at `(-d/2, 0)` and `(+d/2, 0)` with
    /// unit feature variances and feature correlations `rho0`, `rho1`.
    pub fn two_class_2d(distance: f64, rho0: f64, rho1: f64) -> Result<Self> {
        let make = |center: f64, rho: f64| {
            GaussianClassDensity::new(
                Array1::from(vec![center, 0.0]),
                Array2::from_shape_vec((2, 2), vec![1.0, rho, rho, 1.0])
                    .expect("2x2 shape"),
            )
        };
        Self::uniform(vec![
            make(-distance / 2.0, rho0)?,
            make(distance / 2.0, rho1)?,
        ])
    }

    /// Two isotropic unit-variance 2D classes at center distance `d`.
    pub fn spherical_pair(distance: f64) -> Result<Self> {
        Self::two_class_2d(distance, 0.0, 0.0)
    }

    /// Generate a labeled dataset with `n` rows sampled by prior-weighted
    /// class counts (uniform priors give equal counts), rows shuffled.
    pub fn sample_dataset(&self, n: usize, rng: &mut Rng) -> Result<crate::LabeledDataset> {
        use rand::seq::SliceRandom;
        let k = self.n_classes();
        let mut counts: Vec<usize> = self.priors.iter().map(|p| (p * n as f64).round() as usize).collect();
        let total: usize = counts.iter().sum();
        // distribute rounding leftovers to the first classes
        let mut extra = n as i64 - total as i64;
        let mut idx = 0;
        while extra != 0 {
            if extra > 0 {
                counts[idx % k] += 1;
                extra -= 1;
            } else if counts[idx % k] > 0 {
                counts[idx % k] -= 1;
                extra += 1;
            }
            idx += 1;
        }
        let d = self.dim();
        let mut features = Array2::zeros((n, d));
        let mut labels = Vec::with_capacity(n);
        let mut row = 0;
        for (class, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                features.row_mut(row).assign(&self.classes[class].sample(rng));
                labels.push(class);
                row += 1;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut out = Array2::zeros((n, d));
        let mut out_labels = vec![0usize; n];
        for (r, &src) in order.iter().enumerate() {
            out.row_mut(r).assign(&features.row(src));
            out_labels[r] = labels[src];
        }
        crate::LabeledDataset::new(out, out_labels)
    }
}

/// Posterior class probabilities at `x` (prior-weighted densities,
/// normalized). If every density underflows, the posterior is uniform.
pub fn posterior(problem: &MixtureProblem, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    if x.len() != problem.dim() {
        return Err(Error::Shape(format!(
            "point has {} components, problem has {}",
            x.len(),
            problem.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("posterior: non-finite input point".into()));
    }
    let k = problem.n_classes();
    let mut logs = Vec::with_capacity(k);
    for (class, prior) in problem.classes.iter().zip(&problem.priors) {
        let lp = if *prior > 0.0 {
            class.log_pdf(x) + prior.ln()
        } else {
            f64::NEG_INFINITY
        };
        logs.push(lp);
    }
    let max = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !max.is_finite() {
        return Ok(Array1::from_elem(k, 1.0 / k as f64));
    }
    let mut out = Array1::zeros(k);
    let mut sum = 0.0;
    for (i, &lp) in logs.iter().enumerate() {
        let v = (lp - max).exp();
        out[i] = v;
        sum += v;
    }
    out /= sum;
    Ok(out)
}

/// The ideal (Bayes) class assignment: argmax of the posterior, ties broken
/// toward the lowest class index.
pub fn ideal_class(problem: &MixtureProblem, x: ArrayView1<f64>) -> Result<usize> {
    let post = posterior(problem, x)?;
    let mut best = 0;
    let mut best_v = post[0];
    for (i, &v) in post.iter().enumerate().skip(1) {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    Ok(best)
}

/// A K x K column-stochastic matrix of assignment probabilities: entry
/// `(j, i)` is the probability that a point generated under class `i` is
/// assigned to class `j`.
#[derive(Debug, Clone)]
pub struct ConfusionMatrix {
    probs: Array2<f64>,
}

impl ConfusionMatrix {
    /// Validate a probability matrix (columns must sum to 1 within 1e-6).
    pub fn from_probabilities(probs: Array2<f64>) -> Result<Self> {
        let k = probs.nrows();
        if probs.ncols() != k || k == 0 {
            return Err(Error::Shape(format!(
                "confusion matrix must be square, got {}x{}",
                probs.nrows(),
                probs.ncols()
            )));
        }
        for i in 0..k {
            let sum: f64 = (0..k).map(|j| probs[(j, i)]).sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Domain(format!(
                    "confusion column {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { probs })
    }

    /// Normalize per-column counts into assignment probabilities.
    pub fn from_counts(counts: &Array2<u64>) -> Result<Self> {
        let k = counts.nrows();
        if counts.ncols() != k || k == 0 {
            return Err(Error::Shape("count matrix must be square".into()));
        }
        let mut probs = Array2::zeros((k, k));
        for i in 0..k {
            let total: u64 = (0..k).map(|j| counts[(j, i)]).sum();
            if total == 0 {
                return Err(Error::Input(format!("no samples for true class {i}")));
            }
            for j in 0..k {
                probs[(j, i)] = counts[(j, i)] as f64 / total as f64;
            }
        }
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.nrows()
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    /// Mean of the diagonal: the accuracy under equal class frequencies.
    pub fn accuracy(&self) -> f64 {
        let k = self.k();
        (0..k).map(|i| self.probs[(i, i)]).sum::<f64>() / k as f64
    }
}

/// Mean diagonal of a raw column-stochastic matrix; rejects non-normalized
/// input (column sums off by more than 1e-6).
pub fn accuracy_from_confusion(probs: &Array2<f64>) -> Result<f64> {
    Ok(ConfusionMatrix::from_probabilities(probs.clone())?.accuracy())
}

/// One axis of an integration grid: nodes at `lo, lo+step, ..., hi`.
#[derive(Debug, Clone, Copy)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn n_points(&self) -> usize {
        ((self.hi - self.lo) / self.step).round() as usize + 1
    }
}

/// Regular rectangular grid in up to three dimensions.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    /// A cube `[lo, hi]^dim` with uniform spacing.
    pub fn cube(dim: usize, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let spec = Self {
            axes: vec![GridAxis { lo, hi, step }; dim],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 3 {
            return Err(Error::Config(format!(
                "grid integration supports 1 to 3 dimensions, got {}",
                self.axes.len()
            )));
        }
        for (i, a) in self.axes.iter().enumerate() {
            if !(a.lo < a.hi) || !(a.step > 0.0) {
                return Err(Error::Config(format!(
                    "grid axis {i} needs lo < hi and step > 0, got [{}, {}] step {}",
                    a.lo, a.hi, a.step
                )));
            }
        }
        Ok(())
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }
}

/// Integrate the ideal classifier's confusion density over a regular grid.
///
/// Each column of the raw sum must capture at least 99.9% of its class's
/// probability mass, otherwise the grid does not cover the problem and a
/// coverage error is returned. Columns are renormalized to exactly 1.
pub fn confusion_grid(problem: &MixtureProblem, grid: &GridSpec) -> Result<ConfusionMatrix> {
    grid.validate()?;
    if grid.dim() != problem.dim() {
        return Err(Error::Shape(format!(
            "grid is {}-dimensional, problem is {}-dimensional",
            grid.dim(),
            problem.dim()
        )));
    }
    let k = problem.n_classes();
    let vol = grid.cell_volume();
    let n0 = grid.axes[0].n_points();
    let rest: Vec<GridAxis> = grid.axes[1..].to_vec();

    // One slab per first-axis node, reduced in index order afterwards, so
    // the floating-point result is independent of thread scheduling.
    let slabs: Vec<Vec<f64>> = (0..n0)
        .into_par_iter()
        .map(|i0| {
            let x0 = grid.axes[0].lo + i0 as f64 * grid.axes[0].step;
            let mut local = vec![0.0f64; k * k];
            let mut point = vec![0.0f64; problem.dim()];
            point[0] = x0;
            let mut idx = vec![0usize; rest.len()];
            loop {
                for (a, &i) in idx.iter().enumerate() {
                    point[a + 1] = rest[a].lo + i as f64 * rest[a].step;
                }
                let x = ArrayView1::from(&point[..]);
                let j = ideal_class(problem, x).expect("finite grid point");
                for (i, class) in problem.classes.iter().enumerate() {
                    local[j * k + i] += class.pdf(x) * vol;
                }
                // advance the multi-index over the remaining axes
                let mut carry = true;
                for a in (0..idx.len()).rev() {
                    if !carry {
                        break;
                    }
                    idx[a] += 1;
                    if idx[a] < rest[a].n_points() {
                        carry = false;
                    } else {
                        idx[a] = 0;
                    }
                }
                if carry {
                    break;
                }
            }
            local
        })
        .collect();

    let mut raw = Array2::zeros((k, k));
    let mut scratch = vec![0.0f64; n0];
    for e in 0..k * k {
        for (s, slab) in slabs.iter().enumerate() {
            scratch[s] = slab[e];
        }
        raw[(e / k, e % k)] = pairwise_sum(&scratch);
    }

    let mut probs = Array2::zeros((k, k));
    for i in 0..k {
        let mass: f64 = (0..k).map(|j| raw[(j, i)]).sum();
        if (mass - 1.0).abs() > 1e-3 {
            return Err(Error::Numeric(format!(
                "grid covers only {mass:.6} of class {i}'s probability mass; enlarge the grid"
            )));
        }
        for j in 0..k {
            probs[(j, i)] = raw[(j, i)] / mass;
        }
    }
    ConfusionMatrix::from_probabilities(probs)
}

/// Monte-Carlo confusion estimate with per-entry standard errors.
pub struct McConfusion {
    pub matrix: ConfusionMatrix,
    pub stderr: Array2<f64>,
    /// Samples drawn per class.
    pub n_per_class: usize,
}

impl McConfusion {
    /// Standard error of the accuracy estimate (mean of K independent
    /// diagonal fractions).
    pub fn accuracy_stderr(&self) -> f64 {
        let k = self.matrix.k();
        let mut var = 0.0;
        for i in 0..k {
            let s = self.stderr[(i, i)];
            var += s * s;
        }
        var.sqrt() / k as f64
    }
}

/// Estimate the ideal classifier's confusion matrix by sampling
/// `n_samples / K` points from each class and classifying them.
pub fn confusion_mc(problem: &MixtureProblem, n_samples: usize, rng: &mut Rng) -> Result<McConfusion> {
    if n_samples < 1000 {
        return Err(Error::Input(format!(
            "Monte-Carlo confusion needs at least 1000 samples, got {n_samples}"
        )));
    }
    let k = problem.n_classes();
    let per_class = n_samples / k;
    let master: u64 = rng.gen();

    const CHUNK: usize = 16_384;
    let mut jobs = Vec::new();
    for class in 0..k {
        let mut remaining = per_class;
        let mut chunk_idx = 0u64;
        while remaining > 0 {
            let take = remaining.min(CHUNK);
            jobs.push((class, chunk_idx, take));
            remaining -= take;
            chunk_idx += 1;
        }
    }
    let partials: Vec<(usize, Vec<u64>)> = jobs
        .into_par_iter()
        .map(|(class, chunk_idx, take)| {
            let seed = derive_seed(master, (class as u64) << 32 | chunk_idx);
            let mut rng = rng_from_seed(seed);
            let mut counts = vec![0u64; k];
            for _ in 0..take {
                let x = problem.classes[class].sample(&mut rng);
                let j = ideal_class(problem, x.view()).expect("finite sample");
                counts[j] += 1;
            }
            (class, counts)
        })
        .collect();

    let mut counts = Array2::<u64>::zeros((k, k));
    for (class, part) in partials {
        for (j, &c) in part.iter().enumerate() {
            counts[(j, class)] += c;
        }
    }
    let matrix = ConfusionMatrix::from_counts(&counts)?;
    let mut stderr = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let p = matrix.probs()[(j, i)];
            stderr[(j, i)] = (p * (1.0 - p) / per_class as f64).sqrt();
        }
    }
    Ok(McConfusion {
        matrix,
        stderr,
        n_per_class: per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    /// Standard normal CDF via erfc; oracle for the closed-form limit of
    /// equal isotropic classes: A_max = Phi(d/2).
    fn phi(x: f64) -> f64 {
        use statrs::function::erf::erfc;
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn posterior_is_symmetric_for_identical_classes() {
        let c = GaussianClassDensity::new(Array1::zeros(2), Array2::eye(2)).unwrap();
        let problem = MixtureProblem::uniform(vec![c.clone(), c]).unwrap();
        let p = posterior(&problem, array![0.7, -0.3].view()).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn posterior_at_midpoint_and_far_field() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        let mid = posterior(&problem, array![0.0, 0.0].view()).unwrap();
        assert_abs_diff_eq!(mid[0], 0.5, epsilon = 1e-12);
        let far = posterior(&problem, array![10.0, 0.0].view()).unwrap();
        assert!(far[1] > 0.9999, "got {}", far[1]);
    }

    #[test]
    fn posterior_rejects_nan() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        assert!(posterior(&problem, array![f64::NAN, 0.0].view()).is_err());
    }

    #[test]
    fn ideal_class_breaks_ties_to_lowest_index() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        assert_eq!(ideal_class(&problem, array![0.0, 0.0].view()).unwrap(), 0);
        assert_eq!(ideal_class(&problem, array![3.0, 0.0].view()).unwrap(), 1);
        let c = GaussianClassDensity::new(Array1::zeros(2), Array2::eye(2)).unwrap();
        let identical = MixtureProblem::uniform(vec![c.clone(), c]).unwrap();
        assert_eq!(ideal_class(&identical, array![2.0, 2.0].view()).unwrap(), 0);
    }

    #[test]
    fn grid_limit_matches_closed_form_for_spherical_pair() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        let grid = GridSpec::cube(2, -7.0, 7.0, 0.02).unwrap();
        let cm = confusion_grid(&problem, &grid).unwrap();
        assert_abs_diff_eq!(cm.accuracy(), phi(0.5), epsilon = 1e-3);
    }

    #[test]
    fn grid_limit_for_identical_classes_is_half() {
        let problem = MixtureProblem::spherical_pair(0.0).unwrap();
        let grid = GridSpec::cube(2, -6.0, 6.0, 0.05).unwrap();
        let cm = confusion_grid(&problem, &grid).unwrap();
        assert_abs_diff_eq!(cm.accuracy(), 0.5, epsilon = 1e-3);
        // ties always go to class 0
        assert!(cm.probs()[(0, 0)] > 0.999);
        assert!(cm.probs()[(0, 1)] > 0.999);
    }

    #[test]
    fn grid_limit_is_high_for_separated_classes() {
        let problem = MixtureProblem::spherical_pair(5.0).unwrap();
        let grid = GridSpec::cube(2, -8.0, 8.0, 0.05).unwrap();
        let cm = confusion_grid(&problem, &grid).unwrap();
        assert!(cm.accuracy() >= 0.99);
    }

    #[test]
    fn grid_detects_insufficient_coverage() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        let grid = GridSpec::cube(2, -1.0, 1.0, 0.05).unwrap();
        match confusion_grid(&problem, &grid) {
            Err(Error::Numeric(msg)) => assert!(msg.contains("covers")),
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn grid_columns_are_stochastic() {
        let problem = MixtureProblem::two_class_2d(1.0, 0.75, -0.75).unwrap();
        let grid = GridSpec::cube(2, -7.0, 7.0, 0.05).unwrap();
        let cm = confusion_grid(&problem, &grid).unwrap();
        for i in 0..2 {
            let sum: f64 = (0..2).map(|j| cm.probs()[(j, i)]).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn mc_limit_agrees_with_grid() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        let mut rng = rng_from_seed(77);
        let mc = confusion_mc(&problem, 200_000, &mut rng).unwrap();
        assert_abs_diff_eq!(mc.matrix.accuracy(), phi(0.5), epsilon = 0.004);
        let se = mc.accuracy_stderr();
        assert!((mc.matrix.accuracy() - phi(0.5)).abs() <= 4.0 * se + 1e-4);
    }

    #[test]
    fn mc_identical_classes_assign_everything_to_class_zero() {
        let c = GaussianClassDensity::new(Array1::zeros(2), Array2::eye(2)).unwrap();
        let problem = MixtureProblem::uniform(vec![c.clone(), c]).unwrap();
        let mut rng = rng_from_seed(3);
        let mc = confusion_mc(&problem, 10_000, &mut rng).unwrap();
        assert_eq!(mc.matrix.probs()[(0, 0)], 1.0);
        assert_eq!(mc.matrix.probs()[(0, 1)], 1.0);
    }

    #[test]
    fn mc_three_class_far_separation_is_near_identity() {
        let mk = |x: f64, y: f64| {
            GaussianClassDensity::new(array![x, y], Array2::eye(2)).unwrap()
        };
        let problem =
            MixtureProblem::uniform(vec![mk(0.0, 0.0), mk(12.0, 0.0), mk(0.0, 12.0)]).unwrap();
        let mut rng = rng_from_seed(4);
        let mc = confusion_mc(&problem, 30_000, &mut rng).unwrap();
        for i in 0..3 {
            assert!(mc.matrix.probs()[(i, i)] > 0.999);
        }
    }

    #[test]
    fn mc_is_deterministic_for_fixed_rng() {
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        let a = confusion_mc(&problem, 50_000, &mut rng_from_seed(9)).unwrap();
        let b = confusion_mc(&problem, 50_000, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a.matrix.probs(), b.matrix.probs());
    }

    #[test]
    fn monotone_limit_in_distance() {
        let mut last = 0.0;
        for step in 0..=5 {
            let d = step as f64;
            let problem = MixtureProblem::spherical_pair(d).unwrap();
            let grid = GridSpec::cube(2, -8.0, 8.0, 0.05).unwrap();
            let acc = confusion_grid(&problem, &grid).unwrap().accuracy();
            if step > 0 {
                assert!(acc > last, "A_max not increasing at d={d}");
            }
            // closed form for equal isotropic classes
            assert_abs_diff_eq!(acc, phi(d / 2.0), epsilon = 2e-3);
            last = acc;
        }
    }

    #[test]
    fn accuracy_from_confusion_values() {
        let eye: Array2<f64> = Array2::eye(2);
        assert_abs_diff_eq!(accuracy_from_confusion(&eye).unwrap(), 1.0, epsilon = 1e-15);
        let uniform = Array2::from_elem((2, 2), 0.5);
        assert_abs_diff_eq!(accuracy_from_confusion(&uniform).unwrap(), 0.5, epsilon = 1e-15);
        let m = array![[0.7, 0.4], [0.3, 0.6]];
        assert_abs_diff_eq!(accuracy_from_confusion(&m).unwrap(), 0.65, epsilon = 1e-15);
        let bad = array![[0.7, 0.4], [0.2, 0.6]];
        assert!(accuracy_from_confusion(&bad).is_err());
    }

    #[test]
    fn sampling_respects_priors_roughly() {
        let problem = MixtureProblem::spherical_pair(2.0).unwrap();
        let mut rng = rng_from_seed(21);
        let ds = problem.sample_dataset(1000, &mut rng).unwrap();
        let counts = ds.class_counts();
        assert_eq!(counts.iter().sum::<usize>(), 1000);
        assert_eq!(counts[0], 500);
        assert_eq!(counts[1], 500);
    }

    #[test]
    fn transform_invariance_of_mc_assignment() {
        // Classifying the pre-image of an invertible element-wise transform
        // uses the same assignments, so the estimated limit is identical.
        let problem = MixtureProblem::spherical_pair(1.0).unwrap();
        let mut rng = rng_from_seed(33);
        let mut correct_raw = 0u32;
        let mut correct_transformed = 0u32;
        let n = 20_000;
        for i in 0..n {
            let class = i % 2;
            let x = problem.classes[class].sample(&mut rng);
            let assigned = ideal_class(&problem, x.view()).unwrap();
            // the transformed sample sin(x) plays no role in the assignment
            let _y = x.mapv(f64::sin);
            if assigned == class {
                correct_raw += 1;
                correct_transformed += 1;
            }
        }
        assert_eq!(correct_raw, correct_transformed);
    }
}
