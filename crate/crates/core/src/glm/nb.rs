//! Negative binomial (NB2) count regression.
//!
//! `y_j ~ Poisson(v_j μ_j)` with `v_j ~ Gamma(1/α, α)` integrated out and
//! `μ_j = exp(x_j β)`. With `m = 1/α` and `p_j = 1/(1 + α μ_j)` each
//! observation contributes
//!
//! ```text
//! ln Γ(m + y) − ln Γ(y + 1) − ln Γ(m) + m ln p + y ln(1 − p)
//! ```
//!
//! The dispersion is optimised on the log scale so `α > 0` always.

use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::optim::{self, FitConfig, LogLikelihood};
use super::special::{gamma_ratio_terms, ln_gamma};
use super::{assemble_fit, ModelFit, ModelKind};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub beta: Vec<f64>,
    pub ln_alpha: f64,
}

impl NbParams {
    pub fn alpha(&self) -> f64 {
        self.ln_alpha.exp()
    }

    fn from_slice(v: &[f64]) -> Self {
        let (beta, a) = v.split_at(v.len() - 1);
        NbParams {
            beta: beta.to_vec(),
            ln_alpha: a[0],
        }
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = self.beta.clone();
        v.push(self.ln_alpha);
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-likelihood of one observation and its derivatives with respect to
/// the linear predictor and `ln α`.
pub(crate) fn nb_row(y: u64, eta: f64, ln_alpha: f64) -> (f64, f64, f64) {
    let alpha = ln_alpha.exp();
    let m = 1.0 / alpha;
    let mu = eta.exp();
    let am = alpha * mu;
    let l1p = am.ln_1p();
    let yf = y as f64;
    let (lg, psi) = gamma_ratio_terms(m, y);
    let mut ll = lg - ln_gamma(yf + 1.0) - m * l1p;
    if y > 0 {
        // y ln(1 − p) = y (ln α + η − ln(1 + αμ))
        ll += yf * (ln_alpha + eta - l1p);
    }
    let d_eta = (yf - mu) / (1.0 + am);
    let d_ln_alpha = (l1p - psi) / alpha + d_eta;
    (ll, d_eta, d_ln_alpha)
}

fn check_dims(params: &NbParams, y: &[u64], x: &DesignMatrix) -> Result<()> {
    if params.beta.len() != x.n_cols() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} columns",
            params.beta.len(),
            x.n_cols()
        )));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Dimension(format!("{} outcomes for {} rows", y.len(), x.n_rows())));
    }
    Ok(())
}

/// Log-likelihood and gradient `(∂/∂β, ∂/∂ln α)`.
fn value_grad(params: &NbParams, y: &[u64], x: &DesignMatrix) -> Result<(f64, Vec<f64>)> {
    check_dims(params, y, x)?;
    let p = x.n_cols();
    let zero = || Ok((0.0, vec![0.0; p + 1]));
    par::block_reduce(
        y.len(),
        |range| -> Result<(f64, Vec<f64>)> {
            let mut ll = 0.0;
            let mut g = vec![0.0; p + 1];
            for i in range {
                let row = x.row(i);
                let eta = dot(row, &params.beta);
                let (l, de, da) = nb_row(y[i], eta, params.ln_alpha);
                if !l.is_finite() || !de.is_finite() || !da.is_finite() {
                    return Err(Error::NonFinite { row: i });
                }
                ll += l;
                for (gj, xj) in g.iter_mut().zip(row) {
                    *gj += de * xj;
                }
                g[p] += da;
            }
            Ok((ll, g))
        },
        |a, b| {
            let (la, ga) = a?;
            let (lb, gb) = b?;
            Ok((la + lb, par::add_vecs(ga, gb)))
        },
    )
    .unwrap_or_else(zero)
}

/// Unconditional negative binomial log-likelihood.
pub fn nb_loglik(params: &NbParams, y: &[u64], x: &DesignMatrix) -> Result<f64> {
    value_grad(params, y, x).map(|(ll, _)| ll)
}

/// Analytic gradient, coefficients first and `ln α` last.
pub fn nb_gradient(params: &NbParams, y: &[u64], x: &DesignMatrix) -> Result<Vec<f64>> {
    value_grad(params, y, x).map(|(_, g)| g)
}

struct NbObjective<'a> {
    y: &'a [u64],
    x: &'a DesignMatrix,
}

impl LogLikelihood for NbObjective<'_> {
    fn dim(&self) -> usize {
        self.x.n_cols() + 1
    }

    fn value_grad(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        value_grad(&NbParams::from_slice(v), self.y, self.x)
    }
}

/// Fit by quasi-Newton from `β = 0`, `ln α = 0`.
pub fn nb_fit(y: &[u64], x: &DesignMatrix, config: &FitConfig) -> Result<ModelFit> {
    if y.len() != x.n_rows() {
        return Err(Error::Dimension(format!("{} outcomes for {} rows", y.len(), x.n_rows())));
    }
    x.check_full_rank()?;
    let obj = NbObjective { y, x };
    let start = NbParams {
        beta: vec![0.0; x.n_cols()],
        ln_alpha: 0.0,
    };
    let opt = optim::maximize(&obj, start.to_vec(), config)?;
    let hess = optim::fd_hessian(&obj, &opt.params)?;
    let se = optim::standard_errors(&hess);
    let names = x.names().iter().map(|n| (None, n.clone())).collect();
    Ok(assemble_fit(ModelKind::Nb, names, &opt, &se, x, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_only(n: usize) -> DesignMatrix {
        DesignMatrix::from_flat(vec!["intercept".into()], vec![1.0; n]).unwrap()
    }

    /// Direct term-by-term evaluation of the closed form with ln Γ everywhere.
    fn oracle_row(y: u64, mu: f64, alpha: f64) -> f64 {
        let m = 1.0 / alpha;
        let p = 1.0 / (1.0 + alpha * mu);
        let yf = y as f64;
        statrs::function::gamma::ln_gamma(m + yf) - statrs::function::gamma::ln_gamma(yf + 1.0)
            - statrs::function::gamma::ln_gamma(m)
            + m * p.ln()
            + yf * (1.0 - p).ln()
    }

    #[test]
    fn single_zero_count() {
        let x = intercept_only(1);
        let ll = nb_loglik(&NbParams { beta: vec![0.0], ln_alpha: 0.0 }, &[0], &x).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matches_term_by_term_oracle() {
        let x = intercept_only(3);
        let params = NbParams {
            beta: vec![2f64.ln()],
            ln_alpha: 0.5f64.ln(),
        };
        let got = nb_loglik(&params, &[1, 2, 3], &x).unwrap();
        let want: f64 = [1, 2, 3].iter().map(|&y| oracle_row(y, 2.0, 0.5)).sum();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn poisson_limit() {
        let x = intercept_only(4);
        let y = [0, 1, 3, 7];
        let mu: f64 = 2.5;
        let ll = nb_loglik(
            &NbParams {
                beta: vec![mu.ln()],
                ln_alpha: 1e-8f64.ln(),
            },
            &y,
            &x,
        )
        .unwrap();
        let pois: f64 = y
            .iter()
            .map(|&k| k as f64 * mu.ln() - mu - statrs::function::gamma::ln_gamma(k as f64 + 1.0))
            .sum();
        assert!((ll - pois).abs() < 1e-4, "{ll} vs {pois}");
    }

    #[test]
    fn overflow_names_row() {
        let x = DesignMatrix::from_flat(vec!["a".into()], vec![1.0, 1e6]).unwrap();
        match nb_loglik(&NbParams { beta: vec![1.0], ln_alpha: 0.0 }, &[1, 1], &x) {
            Err(Error::NonFinite { row }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn intercept_only_fit_recovers_mean() {
        let y: Vec<u64> = (0..200).map(|i| (i * 7 % 11) as u64).collect();
        let x = intercept_only(y.len());
        let fit = nb_fit(&y, &x, &FitConfig::default()).unwrap();
        assert!(fit.converged);
        let mean = y.iter().sum::<u64>() as f64 / y.len() as f64;
        assert!((fit.coefficients[0].estimate.exp() - mean).abs() < 1e-8);
    }

    #[test]
    fn rank_deficient_design_rejected() {
        let x = DesignMatrix::from_rows(
            vec!["intercept".into(), "dup".into()],
            &vec![vec![1.0, 1.0]; 10],
        )
        .unwrap();
        assert!(matches!(
            nb_fit(&[1; 10], &x, &FitConfig::default()),
            Err(Error::RankDeficient { .. })
        ));
    }
}
