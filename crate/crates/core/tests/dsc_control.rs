//! Control-fidelity checks for the superstatistical generator: the
//! correlation quantity steers the off-diagonal RMS, the separation
//! quantity steers the class separability.

use acclim_core::dsc::{generate_repetition, offdiag_rms, DscControl};
use acclim_core::metrics::gdv;

fn control(d: usize, s: f64, c: f64, n_vec: usize, seed: u64) -> DscControl {
    DscControl {
        dims: d,
        separation: s,
        correlation: c,
        n_rep: 1,
        n_vec,
        seed,
    }
}

#[test]
fn offdiag_rms_is_monotone_in_c_and_hits_endpoints() {
    let n_rep = 10;
    let mut means = Vec::new();
    for (ci, &c) in [0.0, 0.5, 1.0, 1.5, 2.0].iter().enumerate() {
        let mut acc = 0.0;
        for rep in 0..n_rep {
            let ctrl = control(10, 1.0, c, 10, 900 + ci as u64);
            let r = generate_repetition(&ctrl, rep).unwrap();
            acc += offdiag_rms(&r.params0.sigma).unwrap();
        }
        means.push(acc / n_rep as f64);
    }
    assert!(means[0].abs() < 1e-9, "C=0 RMS {}", means[0]);
    assert!((means[4] - 1.0).abs() < 1e-9, "C=2 RMS {}", means[4]);
    for w in means.windows(2) {
        assert!(w[1] > w[0], "off-diagonal RMS not monotone: {means:?}");
    }
}

#[test]
fn negative_gdv_is_monotone_in_s() {
    let n_rep = 8;
    let mut means = Vec::new();
    for &s in &[0.0, 1.0, 2.0, 4.0] {
        let mut acc = 0.0;
        for rep in 0..n_rep {
            let ctrl = control(10, s, 0.5, 1000, 1300);
            let r = generate_repetition(&ctrl, rep).unwrap();
            let v = gdv(&r.dataset.features.view(), &r.dataset.labels).unwrap();
            acc += -v;
        }
        means.push(acc / n_rep as f64);
    }
    for w in means.windows(2) {
        assert!(
            w[1] >= w[0],
            "mean negative GDV not monotone in S: {means:?}"
        );
    }
}

#[test]
fn generated_covariances_stay_psd_across_the_grid() {
    for &c in &[0.1, 0.4, 0.7, 1.0, 1.4, 1.8] {
        let ctrl = control(12, 1.0, c, 10, 4242);
        for rep in 0..5 {
            let r = generate_repetition(&ctrl, rep).unwrap();
            for sigma in [&r.params0.sigma, &r.params1.sigma] {
                let eig = acclim_core::linalg::symmetric_eigen(&sigma.view()).unwrap();
                assert!(
                    eig.values.iter().all(|&v| v >= -1e-10),
                    "C={c} rep={rep}: negative eigenvalue {:?}",
                    eig.values.last()
                );
            }
        }
    }
}
