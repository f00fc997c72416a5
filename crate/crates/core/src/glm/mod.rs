//! Maximum-likelihood estimation: negative binomial counts, multinomial and
//! binary logit choice, with observed-information standard errors.

pub mod design;
pub mod logit;
pub mod mnl;
pub mod nb;
pub mod optim;
pub mod special;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use design::{DesignMatrix, DesignSpec, Table};
pub use logit::{logit_fit, logit_gradient, logit_loglik};
pub use mnl::{
    marginal_effect, mnl_fit, mnl_gradient, mnl_loglik, multinomial_fit, predicted_probabilities, MarginalEffect,
    MnlParams,
};
pub use nb::{nb_fit, nb_gradient, nb_loglik, NbParams};
pub use optim::FitConfig;

/// Coefficient magnitude beyond which a choice-model fit is flagged as
/// (quasi-)separated.
pub const SEPARATION_BOUND: f64 = 30.0;

/// Standardized standard error beyond which the likelihood is treated as
/// flat along that coefficient, which is what quasi-separation looks like
/// when the optimizer stops before the coefficient has run off.
pub const FLAT_SE_BOUND: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    /// Multinomial logit. `classes` lists outcome labels in index order;
    /// the `reference` class has its coefficients pinned at zero.
    Mnl { classes: Vec<String>, reference: usize },
    Logit,
}

/// One estimated parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Outcome block for multinomial fits (e.g. `democrat`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<String>,
    pub name: String,
    pub estimate: f64,
    pub std_error: Option<f64>,
}

impl Estimate {
    pub fn z(&self) -> Option<f64> {
        self.std_error.map(|se| self.estimate / se)
    }

    pub fn stars(&self) -> &'static str {
        self.z().map(special::stars).unwrap_or("")
    }
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: ModelKind,
    pub coefficients: Vec<Estimate>,
    /// Log of the over-dispersion parameter (negative binomial only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_alpha: Option<Estimate>,
    pub log_likelihood: f64,
    pub observations: usize,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Design column names, in order.
    pub columns: Vec<String>,
    /// Divisors applied to raw covariates before fitting.
    #[serde(default)]
    pub scales: BTreeMap<String, f64>,
    #[serde(default)]
    pub separation_warning: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ModelFit {
    /// Raw parameter vector in optimizer order.
    pub fn params(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.coefficients.iter().map(|e| e.estimate).collect();
        if let Some(a) = &self.ln_alpha {
            v.push(a.estimate);
        }
        v
    }

    pub fn standard_errors(&self) -> Vec<Option<f64>> {
        let mut v: Vec<Option<f64>> = self.coefficients.iter().map(|e| e.std_error).collect();
        if let Some(a) = &self.ln_alpha {
            v.push(a.std_error);
        }
        v
    }

    pub fn nb_params(&self) -> Option<NbParams> {
        let ln_alpha = self.ln_alpha.as_ref()?.estimate;
        matches!(self.model, ModelKind::Nb).then(|| NbParams {
            beta: self.coefficients.iter().map(|e| e.estimate).collect(),
            ln_alpha,
        })
    }

    /// The two non-reference blocks of a three-class partisan fit.
    pub fn mnl_params(&self) -> Option<MnlParams> {
        match &self.model {
            ModelKind::Mnl { classes, reference } if classes.len() == 3 && *reference == 1 => {
                let p = self.columns.len();
                let v = self.params();
                Some(MnlParams {
                    beta_democrat: v[..p].to_vec(),
                    beta_republican: v[p..2 * p].to_vec(),
                })
            }
            _ => None,
        }
    }

    pub fn coefficient(&self, block: Option<&str>, name: &str) -> Option<&Estimate> {
        self.coefficients
            .iter()
            .find(|e| e.name == name && e.block.as_deref() == block)
    }

    /// Plain-text coefficient table: estimate with stars, standard error in
    /// parentheses underneath, then fit statistics.
    pub fn render_table(&self) -> String {
        use std::fmt::Write;
        let title = match &self.model {
            ModelKind::Nb => "Negative binomial regression".to_string(),
            ModelKind::Mnl { classes, reference } => {
                format!("Multinomial logit (reference: {})", classes[*reference])
            }
            ModelKind::Logit => "Logistic regression".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let width = self
            .coefficients
            .iter()
            .map(|e| e.name.len())
            .chain([8])
            .max()
            .unwrap_or(8)
            + 2;
        let mut block: Option<&str> = None;
        let rows = self.coefficients.iter().chain(self.ln_alpha.iter());
        for e in rows {
            if e.block.as_deref() != block {
                block = e.block.as_deref();
                if let Some(b) = block {
                    let _ = writeln!(out, "[{b}]");
                }
            }
            let name = if self.ln_alpha.as_ref() == Some(e) { "lnalpha" } else { e.name.as_str() };
            let _ = writeln!(out, "{name:<width$}{:>12.6}{}", e.estimate, e.stars());
            match e.std_error {
                Some(se) => {
                    let _ = writeln!(out, "{:<width$}{:>12}", "", format!("({se:.6})"));
                }
                None => {
                    let _ = writeln!(out, "{:<width$}{:>12}", "", "(n/a)");
                }
            }
        }
        let _ = writeln!(out, "{:<width$}{:>12}", "Observations", self.observations);
        let _ = writeln!(out, "{:<width$}{:>12.4}", "Log-lik", self.log_likelihood);
        let _ = writeln!(out, "{:<width$}{:>12}", "Converged", self.converged);
        let _ = writeln!(out, "Standard errors in parentheses");
        let _ = writeln!(out, "* p<0.05, ** p<0.01, *** p<0.001");
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Estimates and standard errors from an optimum, plus the shared fit
/// metadata.
pub(crate) fn assemble_fit(
    model: ModelKind,
    names: Vec<(Option<String>, String)>,
    optimum: &optim::Optimum,
    std_errors: &[Option<f64>],
    x: &DesignMatrix,
    has_ln_alpha: bool,
) -> ModelFit {
    let mut coefficients: Vec<Estimate> = names
        .into_iter()
        .zip(&optimum.params)
        .zip(std_errors)
        .map(|(((block, name), &estimate), &std_error)| Estimate {
            block,
            name,
            estimate,
            std_error,
        })
        .collect();
    let ln_alpha = if has_ln_alpha {
        let k = optimum.params.len() - 1;
        coefficients.truncate(k);
        Some(Estimate {
            block: None,
            name: "lnalpha".into(),
            estimate: optimum.params[k],
            std_error: std_errors[k],
        })
    } else {
        None
    };
    let mut warnings = Vec::new();
    if !optimum.converged {
        warnings.push(format!("did not converge after {} iterations", optimum.iterations));
    }
    if std_errors.iter().any(Option::is_none) {
        warnings.push("observed information is not positive definite; standard errors unavailable".into());
    }
    ModelFit {
        model,
        coefficients,
        ln_alpha,
        log_likelihood: optimum.log_likelihood,
        observations: x.n_rows(),
        converged: optimum.converged,
        iterations: optimum.iterations,
        gradient_norm: optim::inf_norm(&optimum.gradient),
        columns: x.names().to_vec(),
        scales: x.scales().clone(),
        separation_warning: false,
        warnings,
    }
}
