//! Multinomial logit with one reference class.
//!
//! For the partisan outcome the classes are Democrat (c = 1), Independent
//! (c = 2) and Republican (c = 3); Independent is the reference, so
//!
//! ```text
//! P1 = e^{xβ₁} / (e^{xβ₁} + 1 + e^{xβ₃}),  P2 = 1 / (…),  P3 = e^{xβ₃} / (…)
//! ```
//!
//! The general routine handles any number of classes; a two-class fit is the
//! binary logit.

use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::optim::{self, FitConfig, LogLikelihood};
use super::special::log_sum_exp;
use super::{assemble_fit, ModelFit, ModelKind, FLAT_SE_BOUND, SEPARATION_BOUND};
use crate::error::{Error, Result};
use crate::par;
use crate::roster::PartisanClass;

/// Coefficients of the two non-reference partisan classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnlParams {
    pub beta_democrat: Vec<f64>,
    pub beta_republican: Vec<f64>,
}

impl MnlParams {
    pub fn zeros(p: usize) -> Self {
        MnlParams {
            beta_democrat: vec![0.0; p],
            beta_republican: vec![0.0; p],
        }
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = self.beta_democrat.clone();
        v.extend_from_slice(&self.beta_republican);
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Multinomial logit over `n_classes` outcomes with `reference` pinned at 0.
/// Parameters are stacked per non-reference class in class order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Softmax {
    pub n_classes: usize,
    pub reference: usize,
    pub p: usize,
}

impl Softmax {
    fn block(&self, class: usize) -> Option<usize> {
        match class.cmp(&self.reference) {
            std::cmp::Ordering::Less => Some(class),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(class - 1),
        }
    }

    fn dim(&self) -> usize {
        (self.n_classes - 1) * self.p
    }

    /// Linear predictors for every class (reference = 0).
    fn etas(&self, params: &[f64], row: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|k| match self.block(k) {
                Some(b) => dot(&params[b * self.p..(b + 1) * self.p], row),
                None => 0.0,
            })
            .collect()
    }

    pub fn probabilities(&self, params: &[f64], row: &[f64]) -> Vec<f64> {
        let eta = self.etas(params, row);
        let lse = log_sum_exp(&eta);
        eta.iter().map(|e| (e - lse).exp()).collect()
    }

    pub fn value_grad(&self, params: &[f64], y: &[usize], x: &DesignMatrix) -> Result<(f64, Vec<f64>)> {
        if params.len() != self.dim() {
            return Err(Error::Dimension(format!("{} parameters, expected {}", params.len(), self.dim())));
        }
        if y.len() != x.n_rows() || x.n_cols() != self.p {
            return Err(Error::Dimension(format!(
                "{} outcomes for a {}x{} design",
                y.len(),
                x.n_rows(),
                x.n_cols()
            )));
        }
        let dim = self.dim();
        par::block_reduce(
            y.len(),
            |range| -> Result<(f64, Vec<f64>)> {
                let mut ll = 0.0;
                let mut g = vec![0.0; dim];
                for i in range {
                    let row = x.row(i);
                    let eta = self.etas(params, row);
                    let lse = log_sum_exp(&eta);
                    let li = eta[y[i]] - lse;
                    if !li.is_finite() {
                        return Err(Error::NonFinite { row: i });
                    }
                    ll += li;
                    for (k, e) in eta.iter().enumerate() {
                        if let Some(b) = self.block(k) {
                            let resid = f64::from(u8::from(y[i] == k)) - (e - lse).exp();
                            for (gj, xj) in g[b * self.p..(b + 1) * self.p].iter_mut().zip(row) {
                                *gj += resid * xj;
                            }
                        }
                    }
                }
                Ok((ll, g))
            },
            |a, b| {
                let (la, ga) = a?;
                let (lb, gb) = b?;
                Ok((la + lb, par::add_vecs(ga, gb)))
            },
        )
        .unwrap_or_else(|| Ok((0.0, vec![0.0; dim])))
    }
}

struct SoftmaxObjective<'a> {
    model: Softmax,
    y: &'a [usize],
    x: &'a DesignMatrix,
}

impl LogLikelihood for SoftmaxObjective<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn value_grad(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.model.value_grad(v, self.y, self.x)
    }
}

const PARTISAN: Softmax = Softmax {
    n_classes: 3,
    reference: 1,
    p: 0,
};

fn partisan_model(p: usize) -> Softmax {
    Softmax { p, ..PARTISAN }
}

fn class_indices(classes: &[PartisanClass]) -> Vec<usize> {
    classes.iter().map(|c| c.index()).collect()
}

pub fn mnl_loglik(params: &MnlParams, classes: &[PartisanClass], x: &DesignMatrix) -> Result<f64> {
    partisan_model(x.n_cols())
        .value_grad(&params.to_vec(), &class_indices(classes), x)
        .map(|(ll, _)| ll)
}

/// Gradient stacked as `[∂/∂β₁, ∂/∂β₃]`.
pub fn mnl_gradient(params: &MnlParams, classes: &[PartisanClass], x: &DesignMatrix) -> Result<Vec<f64>> {
    partisan_model(x.n_cols())
        .value_grad(&params.to_vec(), &class_indices(classes), x)
        .map(|(_, g)| g)
}

/// `(P1, P2, P3)` for a single covariate vector.
pub fn predicted_probabilities(params: &MnlParams, x: &[f64]) -> Result<[f64; 3]> {
    let p = params.beta_democrat.len();
    if x.len() != p || params.beta_republican.len() != p {
        return Err(Error::Dimension(format!("covariate vector of length {} for {p} coefficients", x.len())));
    }
    let probs = partisan_model(p).probabilities(&params.to_vec(), x);
    Ok([probs[0], probs[1], probs[2]])
}

/// Fit a multinomial logit over arbitrary class labels `0..class_names.len()`.
pub fn multinomial_fit(
    y: &[usize],
    class_names: &[String],
    reference: usize,
    x: &DesignMatrix,
    config: &FitConfig,
) -> Result<ModelFit> {
    let k = class_names.len();
    if k < 2 || reference >= k {
        return Err(Error::InvalidArgument(format!("{k} classes with reference {reference}")));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Dimension(format!("{} outcomes for {} rows", y.len(), x.n_rows())));
    }
    let mut counts = vec![0usize; k];
    for &c in y {
        if c >= k {
            return Err(Error::InvalidArgument(format!("class index {c} out of range")));
        }
        counts[c] += 1;
    }
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(class_names[empty].clone()));
    }
    x.check_full_rank()?;
    let model = Softmax {
        n_classes: k,
        reference,
        p: x.n_cols(),
    };
    let obj = SoftmaxObjective { model, y, x };
    let opt = optim::maximize(&obj, vec![0.0; model.dim()], config)?;
    let hess = optim::fd_hessian(&obj, &opt.params)?;
    let se = optim::standard_errors(&hess);
    let names = (0..k)
        .filter(|&c| c != reference)
        .flat_map(|c| x.names().iter().map(move |n| (Some(class_names[c].clone()), n.clone())))
        .collect();
    let mut fit = assemble_fit(
        ModelKind::Mnl {
            classes: class_names.to_vec(),
            reference,
        },
        names,
        &opt,
        &se,
        x,
        false,
    );
    flag_separation(&mut fit, &opt.params, x, |i| {
        model.probabilities(&opt.params, x.row(i))[y[i]]
    });
    Ok(fit)
}

/// Diverging coefficients, or every observation fitted with probability ~1,
/// mark the fit as separated. A coefficient diverges when its effect over
/// one standard deviation of its column (or its raw size, for constant
/// columns) exceeds [`SEPARATION_BOUND`], so rescaling a covariate does not
/// change the verdict. A standardized SE above [`FLAT_SE_BOUND`] counts too.
pub(crate) fn flag_separation<F: Fn(usize) -> f64>(fit: &mut ModelFit, params: &[f64], x: &DesignMatrix, fitted: F) {
    let spread: Vec<f64> = x.column_sds().into_iter().map(|s| if s > 0.0 { s } else { 1.0 }).collect();
    let p = spread.len();
    let diverging = params
        .iter()
        .enumerate()
        .any(|(i, b)| b.abs() * spread[i % p] > SEPARATION_BOUND);
    let flat = fit
        .coefficients
        .iter()
        .enumerate()
        .any(|(i, e)| e.std_error.is_some_and(|se| se * spread[i % p] > FLAT_SE_BOUND));
    let perfect = fit.observations > 0 && (0..fit.observations).all(|i| fitted(i) > 1.0 - 1e-6);
    if diverging || flat || perfect {
        fit.separation_warning = true;
        fit.warnings.push("possible (quasi-)separation: coefficients diverging".into());
    }
}

/// Three-class partisan fit with Independent as reference.
pub fn mnl_fit(classes: &[PartisanClass], x: &DesignMatrix, config: &FitConfig) -> Result<ModelFit> {
    let names: Vec<String> = PartisanClass::ALL.iter().map(|c| c.name().to_string()).collect();
    multinomial_fit(&class_indices(classes), &names, 1, x, config)
}

/// Predicted probabilities with a binary column at 0 and at 1, every other
/// column at its sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginalEffect {
    pub at_zero: [f64; 3],
    pub at_one: [f64; 3],
    pub delta: [f64; 3],
}

pub fn marginal_effect(params: &MnlParams, x: &DesignMatrix, column: &str) -> Result<MarginalEffect> {
    let j = x
        .column_index(column)
        .ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
    if x.column(j).any(|v| v != 0.0 && v != 1.0) {
        return Err(Error::NotBinary(column.to_string()));
    }
    let mut xbar = x.column_means();
    xbar[j] = 0.0;
    let at_zero = predicted_probabilities(params, &xbar)?;
    xbar[j] = 1.0;
    let at_one = predicted_probabilities(params, &xbar)?;
    let delta = [0, 1, 2].map(|k| at_one[k] - at_zero[k]);
    Ok(MarginalEffect { at_zero, at_one, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use PartisanClass::*;

    fn x1(n: usize) -> DesignMatrix {
        DesignMatrix::from_flat(vec!["x".into()], vec![1.0; n]).unwrap()
    }

    #[test]
    fn uniform_at_zero() {
        let classes = [DemocratFollower, IndependentFollower, RepublicanFollower, DemocratFollower];
        let ll = mnl_loglik(&MnlParams::zeros(1), &classes, &x1(4)).unwrap();
        assert!((ll - 4.0 * (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert_eq!(predicted_probabilities(&MnlParams::zeros(2), &[0.3, 5.0]).unwrap(), [1.0 / 3.0; 3]);
    }

    #[test]
    fn ln2_example() {
        let params = MnlParams {
            beta_democrat: vec![2f64.ln()],
            beta_republican: vec![0.0],
        };
        let p = predicted_probabilities(&params, &[1.0]).unwrap();
        for (a, b) in p.iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn extreme_predictors_stay_finite() {
        let params = MnlParams {
            beta_democrat: vec![700.0],
            beta_republican: vec![-700.0],
        };
        let classes = [DemocratFollower, IndependentFollower, RepublicanFollower];
        let ll = mnl_loglik(&params, &classes, &x1(3)).unwrap();
        assert!(ll.is_finite());
        let p = predicted_probabilities(&params, &[1.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_class_rejected() {
        let classes = vec![DemocratFollower, RepublicanFollower, DemocratFollower];
        assert!(matches!(
            mnl_fit(&classes, &x1(3), &FitConfig::default()),
            Err(Error::EmptyClass(c)) if c == "independent"
        ));
    }

    #[test]
    fn closed_form_marginal_effect() {
        // flag only, β₁ = 1, β₃ = 0
        let x = DesignMatrix::from_flat(vec!["flag".into()], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let params = MnlParams {
            beta_democrat: vec![1.0],
            beta_republican: vec![0.0],
        };
        let me = marginal_effect(&params, &x, "flag").unwrap();
        let e = std::f64::consts::E;
        assert!((me.delta[0] - (e / (e + 2.0) - 1.0 / 3.0)).abs() < 1e-15);
        assert!(me.delta.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn marginal_effect_errors() {
        let x = DesignMatrix::from_flat(vec!["a".into()], vec![0.0, 2.0]).unwrap();
        let params = MnlParams::zeros(1);
        assert!(matches!(marginal_effect(&params, &x, "a"), Err(Error::NotBinary(_))));
        assert!(matches!(marginal_effect(&params, &x, "b"), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn zero_coefficient_column_has_no_effect() {
        let x = DesignMatrix::from_flat(
            vec!["intercept".into(), "flag".into()],
            vec![1.0, 0.0, 1.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let params = MnlParams {
            beta_democrat: vec![0.4, 0.0],
            beta_republican: vec![-0.2, 0.0],
        };
        let me = marginal_effect(&params, &x, "flag").unwrap();
        assert_eq!(me.delta, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn perfect_predictor_flags_separation() {
        // class 1 iff flag
        let n = 300;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let flag = (i % 3 == 0) as u8 as f64;
            rows.push(vec![1.0, flag]);
            y.push(if flag == 1.0 {
                DemocratFollower
            } else if i % 2 == 0 {
                IndependentFollower
            } else {
                RepublicanFollower
            });
        }
        let x = DesignMatrix::from_rows(vec!["intercept".into(), "flag".into()], &rows).unwrap();
        let fit = mnl_fit(&y, &x, &FitConfig::default()).unwrap();
        assert!(fit.separation_warning, "{fit:?}");
    }
}
