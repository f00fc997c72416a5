//! Quasi-Newton maximisation of log-likelihoods.
//!
//! BFGS on the negated log-likelihood with a backtracking Armijo line
//! search. Once the objective stops moving in floating point but the
//! gradient is still above tolerance, a few Newton steps on a
//! finite-difference Hessian finish the job.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// A log-likelihood with an analytic gradient.
pub trait LogLikelihood: Sync {
    fn dim(&self) -> usize;
    fn value_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Relative log-likelihood change between iterations.
    pub ll_tol: f64,
    /// Infinity norm of the gradient.
    pub grad_tol: f64,
    /// Newton polishing steps allowed over the whole run.
    pub max_polish: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 500,
            ll_tol: 1e-9,
            grad_tol: 1e-6,
            max_polish: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub gradient: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Point {
    x: Vec<f64>,
    /// negated log-likelihood
    f: f64,
    g: Vec<f64>,
}

fn eval(obj: &dyn LogLikelihood, x: Vec<f64>) -> Result<Point> {
    let (ll, grad) = obj.value_grad(&x)?;
    Ok(Point {
        x,
        f: -ll,
        g: grad.into_iter().map(|v| -v).collect(),
    })
}

fn scaled_identity(p: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::identity(p, p) * scale
}

/// Maximise `obj` starting from `x0`.
pub fn maximize(obj: &dyn LogLikelihood, x0: Vec<f64>, config: &FitConfig) -> Result<Optimum> {
    let p = obj.dim();
    let mut cur = eval(obj, x0)?;
    let mut h_inv = scaled_identity(p, 1.0 / inf_norm(&cur.g).max(1.0));
    let mut converged = false;
    let mut polish_left = config.max_polish;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        if inf_norm(&cur.g) < config.grad_tol {
            converged = true;
            break;
        }
        let g = DVector::from_column_slice(&cur.g);
        let mut d: Vec<f64> = (-(&h_inv * &g)).iter().copied().collect();
        if dot(&d, &cur.g) >= 0.0 {
            h_inv = scaled_identity(p, 1.0 / inf_norm(&cur.g).max(1.0));
            d = cur.g.iter().map(|v| -v / inf_norm(&cur.g).max(1.0)).collect();
        }
        let next = line_search(obj, &cur, &d)?;
        let Some(next) = next else {
            // no Armijo progress: the objective is flat to working precision
            if polish_left > 0 {
                if let Some(better) = newton_polish(obj, &cur, config, &mut polish_left)? {
                    cur = better;
                    h_inv = scaled_identity(p, 1.0 / inf_norm(&cur.g).max(1.0));
                    continue;
                }
            }
            break;
        };

        let rel = (next.f - cur.f).abs() / next.f.abs().max(1.0);
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if iterations == 1 {
                h_inv = scaled_identity(p, sy / dot(&y, &y));
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        cur = next;

        let gnorm = inf_norm(&cur.g);
        if rel < config.ll_tol {
            if gnorm < config.grad_tol {
                converged = true;
                break;
            }
            if polish_left > 0 {
                if let Some(better) = newton_polish(obj, &cur, config, &mut polish_left)? {
                    cur = better;
                    if inf_norm(&cur.g) < config.grad_tol {
                        converged = true;
                        break;
                    }
                }
            }
        }
    }

    Ok(Optimum {
        log_likelihood: -cur.f,
        gradient: cur.g.iter().map(|v| -v).collect(),
        params: cur.x,
        converged,
        iterations,
    })
}

fn bfgs_update(h: &mut DMatrix<f64>, s: &[f64], y: &[f64], sy: f64) {
    let p = s.len();
    let s = DVector::from_column_slice(s);
    let y = DVector::from_column_slice(y);
    let rho = 1.0 / sy;
    let i = DMatrix::<f64>::identity(p, p);
    let left = &i - rho * &s * y.transpose();
    let right = &i - rho * &y * s.transpose();
    *h = &left * &*h * &right + rho * &s * s.transpose();
}

/// Backtracking Armijo search along `d`. Steps that overflow the likelihood
/// count as failures and are shortened.
fn line_search(obj: &dyn LogLikelihood, cur: &Point, d: &[f64]) -> Result<Option<Point>> {
    const C1: f64 = 1e-4;
    let slope = dot(&cur.g, d);
    let mut t = 1.0;
    for _ in 0..60 {
        let x: Vec<f64> = cur.x.iter().zip(d).map(|(a, b)| a + t * b).collect();
        match eval(obj, x) {
            Ok(pt) if pt.f.is_finite() && pt.f <= cur.f + C1 * t * slope => return Ok(Some(pt)),
            Ok(_) => {}
            Err(e) if e.is_numerical() => {}
            Err(e) => return Err(e),
        }
        t *= 0.5;
    }
    Ok(None)
}

/// Newton steps on the finite-difference Hessian, each accepted only if it
/// lowers the gradient norm without making the objective measurably worse.
fn newton_polish(
    obj: &dyn LogLikelihood,
    start: &Point,
    config: &FitConfig,
    budget: &mut usize,
) -> Result<Option<Point>> {
    let mut cur: Option<Point> = None;
    while *budget > 0 {
        *budget -= 1;
        let base = cur.as_ref().unwrap_or(start);
        let hess = fd_hessian(obj, &base.x)?;
        // hess is the Hessian of the log-likelihood; Newton solves (-H) d = grad
        let neg = -DMatrix::from_row_slice(hess.len(), hess.len(), &hess.concat());
        let Some(chol) = neg.cholesky() else { break };
        let grad_ll = DVector::from_iterator(base.g.len(), base.g.iter().map(|v| -v));
        let step = chol.solve(&grad_ll);
        let x: Vec<f64> = base.x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let next = match eval(obj, x) {
            Ok(p) => p,
            Err(e) if e.is_numerical() => break,
            Err(e) => return Err(e),
        };
        let noise = 1e-12 * base.f.abs().max(1.0);
        if inf_norm(&next.g).partial_cmp(&inf_norm(&base.g)) != Some(std::cmp::Ordering::Less) || next.f > base.f + noise {
            break;
        }
        let done = inf_norm(&next.g) < config.grad_tol;
        cur = Some(next);
        if done {
            break;
        }
    }
    Ok(cur)
}

/// Hessian of the log-likelihood by central differences of the analytic
/// gradient, symmetrised. Step per coordinate is `1e-5 · max(1, |θ|)`.
pub fn fd_hessian(obj: &dyn LogLikelihood, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let p = x.len();
    let mut h = vec![vec![0.0; p]; p];
    for j in 0..p {
        let step = 1e-5 * x[j].abs().max(1.0);
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[j] += step;
        dn[j] -= step;
        let (_, gu) = obj.value_grad(&up)?;
        let (_, gd) = obj.value_grad(&dn)?;
        for i in 0..p {
            h[i][j] = (gu[i] - gd[i]) / (2.0 * step);
        }
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..p {
        for j in 0..i {
            let avg = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = avg;
            h[j][i] = avg;
        }
    }
    Ok(h)
}

/// Standard errors from the inverse observed information. `None` for every
/// coordinate when the information matrix is not positive definite.
pub fn standard_errors(hessian: &[Vec<f64>]) -> Vec<Option<f64>> {
    let p = hessian.len();
    let info = -DMatrix::from_row_slice(p, p, &hessian.concat());
    match info.cholesky() {
        Some(chol) => {
            let cov = chol.inverse();
            (0..p)
                .map(|i| {
                    let v = cov[(i, i)];
                    (v.is_finite() && v > 0.0).then(|| v.sqrt())
                })
                .collect()
        }
        None => vec![None; p],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave quadratic with known maximiser.
    struct Quadratic {
        center: Vec<f64>,
        weights: Vec<f64>,
    }

    impl LogLikelihood for Quadratic {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let mut f = 0.0;
            let mut g = Vec::new();
            for ((xi, ci), wi) in x.iter().zip(&self.center).zip(&self.weights) {
                f -= 0.5 * wi * (xi - ci).powi(2);
                g.push(-wi * (xi - ci));
            }
            Ok((f, g))
        }
    }

    /// Negated Rosenbrock, maximised at (1, 1).
    struct Rosenbrock;

    impl LogLikelihood for Rosenbrock {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let ga = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            let gb = 200.0 * (b - a * a);
            Ok((-f, vec![-ga, -gb]))
        }
    }

    #[test]
    fn finds_quadratic_maximum() {
        let q = Quadratic {
            center: vec![1.0, -2.0, 3.0],
            weights: vec![1.0, 1e3, 1e-2],
        };
        let opt = maximize(&q, vec![0.0; 3], &FitConfig::default()).unwrap();
        assert!(opt.converged);
        for (a, b) in opt.params.iter().zip(&q.center) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let opt = maximize(&Rosenbrock, vec![-1.2, 1.0], &FitConfig::default()).unwrap();
        assert!(opt.converged, "{opt:?}");
        assert!((opt.params[0] - 1.0).abs() < 1e-6);
        assert!((opt.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fd_hessian_of_quadratic() {
        let q = Quadratic {
            center: vec![0.5, 0.5],
            weights: vec![2.0, 4.0],
        };
        let h = fd_hessian(&q, &[0.1, 0.2]).unwrap();
        assert!((h[0][0] + 2.0).abs() < 1e-8);
        assert!((h[1][1] + 4.0).abs() < 1e-8);
        assert!(h[0][1].abs() < 1e-8);
        let se = standard_errors(&h);
        assert!((se[0].unwrap() - 0.5f64.sqrt()).abs() < 1e-8);
        assert!((se[1].unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn indefinite_information_gives_no_errors() {
        let se = standard_errors(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(se, vec![None, None]);
    }
}
