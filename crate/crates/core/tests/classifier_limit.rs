//! Classifiers against the analytic accuracy limit, at reduced scale.
//! The acceptance suite in the CLI crate runs the full-scale versions.

use acclim_core::classify::{
    evaluate, fit_classifier, ClassifierKind, PerceptronConfig, TrainedClassifier,
};
use acclim_core::features::{apply_transform, Transform};
use acclim_core::limit::{confusion_grid, GridSpec, MixtureProblem};
use acclim_core::neuralnet::TrainConfig;
use acclim_core::rng::rng_from_seed;
use acclim_core::LabeledDataset;

fn split_problem(problem: &MixtureProblem, n: usize, seed: u64) -> (LabeledDataset, LabeledDataset) {
    let mut rng = rng_from_seed(seed);
    let mut data = problem.sample_dataset(n, &mut rng).unwrap();
    data.split_random(0.8, &mut rng).unwrap();
    (data.train_set().unwrap(), data.test_set().unwrap())
}

#[test]
fn bayes_models_reach_the_limit_on_the_spherical_problem() {
    let problem = MixtureProblem::spherical_pair(1.0).unwrap();
    let grid = GridSpec::cube(2, -7.0, 7.0, 0.02).unwrap();
    let a_max = confusion_grid(&problem, &grid).unwrap().accuracy();
    let (train, test) = split_problem(&problem, 5000, 50);

    let cmvg = fit_classifier(ClassifierKind::Cmvg, &train, &PerceptronConfig::default()).unwrap();
    let acc_cmvg = evaluate(&cmvg, &test).unwrap().accuracy;
    assert!(
        (acc_cmvg - a_max).abs() <= 0.03,
        "CMVG {acc_cmvg} vs limit {a_max}"
    );

    let nb = fit_classifier(ClassifierKind::NaiveBayes, &train, &PerceptronConfig::default())
        .unwrap();
    let acc_nb = evaluate(&nb, &test).unwrap().accuracy;
    assert!(
        (acc_nb - a_max).abs() <= 0.03,
        "naive Bayes {acc_nb} vs limit {a_max}"
    );
}

#[test]
fn transforms_shift_accuracy_as_information_allows() {
    // sine and signum keep the sign of the first feature (the relevant
    // information for symmetric classes at distance 1) while cosine
    // destroys it
    let problem = MixtureProblem::spherical_pair(1.0).unwrap();
    let (train, test) = split_problem(&problem, 5000, 51);
    let fit_eval = |t: Transform| -> f64 {
        let train_t = apply_transform(t, &train);
        let test_t = apply_transform(t, &test);
        let model = TrainedClassifier::Cmvg(acclim_core::classify::fit_cmvg(&train_t).unwrap());
        evaluate(&model, &test_t).unwrap().accuracy
    };
    let base = fit_eval(Transform::Identity);
    let sine = fit_eval(Transform::Sine);
    let signum = fit_eval(Transform::Signum);
    let cosine = fit_eval(Transform::Cosine);
    assert!((sine - base).abs() <= 0.03, "sine {sine} vs base {base}");
    assert!(
        (signum - base).abs() <= 0.03,
        "signum {signum} vs base {base}"
    );
    assert!((cosine - 0.5).abs() <= 0.04, "cosine {cosine}");
}

#[test]
fn perceptron_tracks_cmvg_on_correlated_data() {
    let problem = MixtureProblem::two_class_2d(0.0, 0.75, -0.75).unwrap();
    let (train, test) = split_problem(&problem, 5000, 52);
    let cfg = PerceptronConfig::with_seed(7);
    let perc = fit_classifier(ClassifierKind::Perceptron, &train, &cfg).unwrap();
    let cmvg = fit_classifier(ClassifierKind::Cmvg, &train, &cfg).unwrap();
    let acc_p = evaluate(&perc, &test).unwrap().accuracy;
    let acc_c = evaluate(&cmvg, &test).unwrap().accuracy;
    assert!(
        (acc_p - acc_c).abs() <= 0.04,
        "perceptron {acc_p} vs CMVG {acc_c}"
    );
    assert!(acc_c > 0.6, "correlation signal not exploited: {acc_c}");
}

#[test]
fn perceptron_fit_is_deterministic_per_seed() {
    let problem = MixtureProblem::spherical_pair(1.0).unwrap();
    let (train, test) = split_problem(&problem, 1000, 53);
    let cfg = PerceptronConfig {
        hidden_size: 20,
        train: TrainConfig {
            max_epochs: 5,
            seed: 3,
            ..TrainConfig::default()
        },
    };
    let a = fit_classifier(ClassifierKind::Perceptron, &train, &cfg).unwrap();
    let b = fit_classifier(ClassifierKind::Perceptron, &train, &cfg).unwrap();
    let ea = evaluate(&a, &test).unwrap();
    let eb = evaluate(&b, &test).unwrap();
    assert_eq!(ea.accuracy, eb.accuracy);
    assert_eq!(ea.confusion.probs(), eb.confusion.probs());
}
