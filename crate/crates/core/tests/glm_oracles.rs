mod common;

use followgraph::glm::optim::{maximize, LogLikelihood};
use followgraph::glm::special::ln_gamma;
use followgraph::glm::{
    logit_fit, logit_loglik, marginal_effect, mnl_fit, mnl_gradient, mnl_loglik, multinomial_fit, nb_fit, nb_loglik,
    predicted_probabilities, DesignMatrix, FitConfig, MnlParams, NbParams,
};
use followgraph::roster::PartisanClass;
use followgraph::synth::{self, SimRng, Stream};
use followgraph::Error;
use proptest::prelude::*;

fn design(rng: &mut SimRng, n: usize) -> DesignMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![1.0, rng.normal(), f64::from(u8::from(rng.bernoulli(0.5)))])
        .collect();
    DesignMatrix::from_rows(vec!["intercept".into(), "x".into(), "flag".into()], &rows).unwrap()
}

/// The negative binomial log-likelihood term by term, from `statrs`.
fn nb_oracle(beta: &[f64], alpha: f64, y: &[u64], x: &DesignMatrix) -> f64 {
    use statrs::function::gamma::ln_gamma as lg;
    let m = 1.0 / alpha;
    (0..y.len())
        .map(|i| {
            let mu: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum::<f64>().exp();
            let p = 1.0 / (1.0 + alpha * mu);
            let yi = y[i] as f64;
            lg(m + yi) - lg(yi + 1.0) - lg(m) + m * p.ln() + yi * (1.0 - p).ln()
        })
        .sum()
}

#[test]
fn nb_matches_displayed_formula() {
    let mut rng = SimRng::new(5, Stream::Population);
    let x = design(&mut rng, 200);
    let y: Vec<u64> = (0..200).map(|_| rng.poisson(3.0)).collect();
    for (beta, alpha) in [(vec![0.2, 0.3, -0.1], 0.5), (vec![1.0, -0.2, 0.4], 2.0), (vec![0.0, 0.0, 0.0], 0.05)] {
        let p = NbParams { beta: beta.clone(), ln_alpha: f64::ln(alpha) };
        let got = nb_loglik(&p, &y, &x).unwrap();
        let want = nb_oracle(&beta, alpha, &y, &x);
        assert!((got - want).abs() <= 1e-9 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn nb_poisson_limit_loglik() {
    let x = DesignMatrix::from_flat(vec!["intercept".into()], vec![1.0; 4]).unwrap();
    let y = [0u64, 1, 2, 7];
    let mu = 2.0f64;
    let p = NbParams { beta: vec![mu.ln()], ln_alpha: 1e-8f64.ln() };
    let pois: f64 = y.iter().map(|&k| k as f64 * mu.ln() - mu - ln_gamma(k as f64 + 1.0)).sum();
    assert!((nb_loglik(&p, &y, &x).unwrap() - pois).abs() < 1e-4);
}

#[test]
fn nb_rank_deficiency_names_columns() {
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
    let x = DesignMatrix::from_rows(vec!["intercept".into(), "a".into(), "b".into()], &rows).unwrap();
    match nb_fit(&[1; 20], &x, &FitConfig::default()) {
        Err(Error::RankDeficient { columns }) => assert!(columns.contains(&"b".to_string())),
        other => panic!("{other:?}"),
    }
}

#[test]
fn spec_mnl_and_logit_recovery() {
    let s = common::scenario("single_covariate.json");
    let (classes, x) = synth::simulate_mnl(&s).unwrap();
    let fit = mnl_fit(&classes, &x, &FitConfig::default()).unwrap();
    let p = fit.mnl_params().unwrap();
    let t = s.mnl.as_ref().unwrap();
    for (a, b) in p.beta_democrat.iter().chain(&p.beta_republican).zip(t.beta_democrat.iter().chain(&t.beta_republican)) {
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }
    let (y, x) = synth::simulate_logit(&s).unwrap();
    let fit = logit_fit(&y, &x, &FitConfig::default()).unwrap();
    for (e, b) in fit.coefficients.iter().zip(&s.logit.as_ref().unwrap().beta) {
        assert!((e.estimate - b).abs() < 0.05);
    }
}

#[test]
fn null_models_center_on_zero() {
    let mut rng = SimRng::new(77, Stream::Population);
    let x = design(&mut rng, 6000);
    let classes: Vec<PartisanClass> = (0..6000).map(|_| PartisanClass::ALL[rng.below(3) as usize]).collect();
    let fit = mnl_fit(&classes, &x, &FitConfig::default()).unwrap();
    for e in fit.coefficients.iter().filter(|e| e.name != "intercept") {
        assert!(e.estimate.abs() < 3.0 * e.std_error.unwrap(), "{e:?}");
    }
    let y: Vec<bool> = (0..6000).map(|_| rng.bernoulli(0.5)).collect();
    let fit = logit_fit(&y, &x, &FitConfig::default()).unwrap();
    let b0 = fit.coefficient(None, "intercept").unwrap();
    assert!(b0.estimate.abs() < 3.0 * b0.std_error.unwrap());
}

#[test]
fn threshold_outcome_is_flagged_separated() {
    let mut rng = SimRng::new(3, Stream::Population);
    let x = design(&mut rng, 300);
    let y: Vec<bool> = (0..300).map(|i| x.row(i)[1] > 0.0).collect();
    let fit = logit_fit(&y, &x, &FitConfig::default()).unwrap();
    assert!(fit.separation_warning);
}

#[test]
fn logit_equals_two_class_multinomial() {
    let mut rng = SimRng::new(9, Stream::Population);
    let x = design(&mut rng, 3000);
    let y: Vec<bool> = (0..3000).map(|i| rng.uniform() < 1.0 / (1.0 + (-(0.3 - 0.8 * x.row(i)[1])).exp())).collect();
    let a = logit_fit(&y, &x, &FitConfig::default()).unwrap();
    let idx: Vec<usize> = y.iter().map(|&b| usize::from(b)).collect();
    let b = multinomial_fit(&idx, &["0".into(), "1".into()], 0, &x, &FitConfig::default()).unwrap();
    for (u, v) in a.params().iter().zip(b.params()) {
        assert!((u - v).abs() < 1e-6);
    }
    assert!((logit_loglik(&a.params(), &y, &x).unwrap() - a.log_likelihood).abs() < 1e-9);
}

struct Mnl<'a> {
    classes: &'a [PartisanClass],
    x: &'a DesignMatrix,
}

impl LogLikelihood for Mnl<'_> {
    fn dim(&self) -> usize {
        2 * self.x.n_cols()
    }

    fn value_grad(&self, t: &[f64]) -> followgraph::Result<(f64, Vec<f64>)> {
        let p = self.x.n_cols();
        let params = MnlParams { beta_democrat: t[..p].to_vec(), beta_republican: t[p..].to_vec() };
        Ok((mnl_loglik(&params, self.classes, self.x)?, mnl_gradient(&params, self.classes, self.x)?))
    }
}

#[test]
fn concave_objective_has_one_optimum() {
    let mut rng = SimRng::new(12, Stream::Population);
    let x = design(&mut rng, 1500);
    let classes: Vec<PartisanClass> = (0..1500)
        .map(|i| {
            let v = x.row(i)[1] + rng.normal();
            if v > 0.7 { PartisanClass::RepublicanFollower } else if v < -0.7 { PartisanClass::DemocratFollower } else { PartisanClass::IndependentFollower }
        })
        .collect();
    let obj = Mnl { classes: &classes, x: &x };
    let lls: Vec<f64> = (0..5)
        .map(|_| {
            let start: Vec<f64> = (0..6).map(|_| 2.0 * rng.normal()).collect();
            maximize(&obj, start, &FitConfig::default()).unwrap().log_likelihood
        })
        .collect();
    for ll in &lls {
        assert!((ll - lls[0]).abs() < 1e-6, "{lls:?}");
    }
}

#[test]
fn effects_closed_form_and_zero_column() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![f64::from(i % 2)]).collect();
    let x = DesignMatrix::from_rows(vec!["celebrity".into()], &rows).unwrap();
    let params = MnlParams { beta_democrat: vec![1.0], beta_republican: vec![0.0] };
    let me = marginal_effect(&params, &x, "celebrity").unwrap();
    let e = std::f64::consts::E;
    assert!((me.delta[0] - (e / (e + 2.0) - 1.0 / 3.0)).abs() < 1e-12);

    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, f64::from(i % 2), i as f64]).collect();
    let x = DesignMatrix::from_rows(vec!["intercept".into(), "celebrity".into(), "t".into()], &rows).unwrap();
    let params = MnlParams { beta_democrat: vec![0.2, 0.0, 0.1], beta_republican: vec![-0.3, 0.0, 0.05] };
    assert_eq!(marginal_effect(&params, &x, "celebrity").unwrap().delta, [0.0; 3]);
    assert!(matches!(marginal_effect(&params, &x, "t"), Err(Error::NotBinary(_))));
    assert!(matches!(marginal_effect(&params, &x, "nope"), Err(Error::UnknownColumn(_))));
}

#[test]
fn planted_celebrity_effect_is_positive_for_republicans() {
    let s = common::scenario("election.json");
    let (classes, x) = synth::simulate_mnl(&s).unwrap();
    let fit = mnl_fit(&classes, &x, &FitConfig::default()).unwrap();
    let me = marginal_effect(&fit.mnl_params().unwrap(), &x, "celebrity").unwrap();
    assert!(me.delta[2] > 0.0);
}

proptest! {
    #[test]
    fn probabilities_match_naive_softmax(
        b1 in prop::collection::vec(-3.0f64..3.0, 3),
        b3 in prop::collection::vec(-3.0f64..3.0, 3),
        row in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let params = MnlParams { beta_democrat: b1.clone(), beta_republican: b3.clone() };
        let p = predicted_probabilities(&params, &row).unwrap();
        let e1: f64 = row.iter().zip(&b1).map(|(a, b)| a * b).sum::<f64>().exp();
        let e3: f64 = row.iter().zip(&b3).map(|(a, b)| a * b).sum::<f64>().exp();
        let z = e1 + 1.0 + e3;
        let naive = [e1 / z, 1.0 / z, e3 / z];
        for k in 0..3 {
            prop_assert!((p[k] - naive[k]).abs() < 1e-12);
            prop_assert!(p[k] > 0.0 && p[k] < 1.0);
        }
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);

        // the log-likelihood of one row is the log of its predicted probability
        let x = DesignMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], std::slice::from_ref(&row)).unwrap();
        for (k, class) in PartisanClass::ALL.iter().enumerate() {
            let ll = mnl_loglik(&params, &[*class], &x).unwrap();
            prop_assert!((ll - naive[k].ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn deltas_sum_to_zero(b1 in prop::collection::vec(-2.0f64..2.0, 2), b3 in prop::collection::vec(-2.0f64..2.0, 2)) {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, f64::from(i % 3 == 0)]).collect();
        let x = DesignMatrix::from_rows(vec!["intercept".into(), "flag".into()], &rows).unwrap();
        let me = marginal_effect(&MnlParams { beta_democrat: b1, beta_republican: b3 }, &x, "flag").unwrap();
        prop_assert!(me.delta.iter().sum::<f64>().abs() <= 1e-12);
    }
}
