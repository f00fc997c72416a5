//! Binary logit: `Pr(y = 1) = 1 / (1 + e^{-xβ})`.

use super::design::DesignMatrix;
use super::mnl::flag_separation;
use super::optim::{self, FitConfig, LogLikelihood};
use super::special::{log1p_exp, sigmoid};
use super::{assemble_fit, ModelFit, ModelKind};
use crate::error::{Error, Result};
use crate::par;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn value_grad(beta: &[f64], y: &[bool], x: &DesignMatrix) -> Result<(f64, Vec<f64>)> {
    let p = x.n_cols();
    if beta.len() != p || y.len() != x.n_rows() {
        return Err(Error::Dimension(format!(
            "{} coefficients and {} outcomes for a {}x{p} design",
            beta.len(),
            y.len(),
            x.n_rows()
        )));
    }
    par::block_reduce(
        y.len(),
        |range| -> Result<(f64, Vec<f64>)> {
            let mut ll = 0.0;
            let mut g = vec![0.0; p];
            for i in range {
                let row = x.row(i);
                let eta = dot(row, beta);
                // ln σ(η) = −ln(1 + e^{−η}); ln(1 − σ(η)) = −ln(1 + e^{η})
                let li = if y[i] { -log1p_exp(-eta) } else { -log1p_exp(eta) };
                if !li.is_finite() {
                    return Err(Error::NonFinite { row: i });
                }
                ll += li;
                let resid = f64::from(u8::from(y[i])) - sigmoid(eta);
                for (gj, xj) in g.iter_mut().zip(row) {
                    *gj += resid * xj;
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
    .unwrap_or_else(|| Ok((0.0, vec![0.0; p])))
}

pub fn logit_loglik(beta: &[f64], y: &[bool], x: &DesignMatrix) -> Result<f64> {
    value_grad(beta, y, x).map(|(ll, _)| ll)
}

pub fn logit_gradient(beta: &[f64], y: &[bool], x: &DesignMatrix) -> Result<Vec<f64>> {
    value_grad(beta, y, x).map(|(_, g)| g)
}

struct LogitObjective<'a> {
    y: &'a [bool],
    x: &'a DesignMatrix,
}

impl LogLikelihood for LogitObjective<'_> {
    fn dim(&self) -> usize {
        self.x.n_cols()
    }

    fn value_grad(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        value_grad(v, self.y, self.x)
    }
}

pub fn logit_fit(y: &[bool], x: &DesignMatrix, config: &FitConfig) -> Result<ModelFit> {
    if y.len() != x.n_rows() {
        return Err(Error::Dimension(format!("{} outcomes for {} rows", y.len(), x.n_rows())));
    }
    if !y.iter().any(|&v| v) {
        return Err(Error::EmptyClass("1".into()));
    }
    if y.iter().all(|&v| v) {
        return Err(Error::EmptyClass("0".into()));
    }
    x.check_full_rank()?;
    let obj = LogitObjective { y, x };
    let opt = optim::maximize(&obj, vec![0.0; x.n_cols()], config)?;
    let hess = optim::fd_hessian(&obj, &opt.params)?;
    let se = optim::standard_errors(&hess);
    let names = x.names().iter().map(|n| (None, n.clone())).collect();
    let mut fit = assemble_fit(ModelKind::Logit, names, &opt, &se, x, false);
    flag_separation(&mut fit, &opt.params, x, |i| {
        let p1 = sigmoid(dot(x.row(i), &opt.params));
        if y[i] {
            p1
        } else {
            1.0 - p1
        }
    });
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglik_at_zero() {
        let x = DesignMatrix::from_flat(vec!["intercept".into()], vec![1.0; 4]).unwrap();
        let ll = logit_loglik(&[0.0], &[true, false, true, true], &x).unwrap();
        assert!((ll - 4.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn threshold_outcome_is_separated() {
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 - 99.5) / 50.0).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
        let y: Vec<bool> = xs.iter().map(|&v| v > 0.0).collect();
        let x = DesignMatrix::from_rows(vec!["intercept".into(), "x".into()], &rows).unwrap();
        let fit = logit_fit(&y, &x, &FitConfig::default()).unwrap();
        assert!(fit.separation_warning);
    }

    #[test]
    fn single_outcome_rejected() {
        let x = DesignMatrix::from_flat(vec!["intercept".into()], vec![1.0; 3]).unwrap();
        assert!(matches!(
            logit_fit(&[true; 3], &x, &FitConfig::default()),
            Err(Error::EmptyClass(_))
        ));
    }
}
