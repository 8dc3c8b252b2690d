use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::linalg::cholesky_solve;
use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Ridge {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Dimension {
                what: "ridge input".into(),
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

pub(crate) fn to_matrix(x: &[Vec<f64>]) -> Result<Array2<f64>> {
    let p = x.first().map_or(0, Vec::len);
    let mut m = Array2::zeros((x.len(), p));
    for (i, row) in x.iter().enumerate() {
        if row.len() != p {
            return Err(Error::Dimension {
                what: format!("feature row {i}"),
                expected: p,
                got: row.len(),
            });
        }
        ensure_finite("features", row)?;
        m.row_mut(i).assign(&Array1::from(row.clone()));
    }
    Ok(m)
}

/// Minimises `‖Xw + b − y‖² + λ‖w‖²` with the bias left unpenalised.
///
/// Centering removes the bias from the system. With more features than rows
/// and `λ > 0`, the equivalent n×n dual system is solved instead.
pub fn ridge_fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Ridge> {
    if x.is_empty() {
        return Err(Error::EmptyDataset("ridge needs at least one row".into()));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    ensure_finite("targets", y)?;
    let xm = to_matrix(x)?;
    let (n, p) = xm.dim();
    let col_mean = xm.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(p));
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let xc = &xm - &col_mean.view().insert_axis(Axis(0));
    let yc = Array1::from_iter(y.iter().map(|v| v - y_mean));

    let w = if n < p && lambda > 0.0 {
        let mut k = xc.dot(&xc.t());
        k.diag_mut().iter_mut().for_each(|v| *v += lambda);
        let alpha = cholesky_solve(&k, &yc)?;
        xc.t().dot(&alpha)
    } else {
        let mut a = xc.t().dot(&xc);
        a.diag_mut().iter_mut().for_each(|v| *v += lambda);
        let rhs = xc.t().dot(&yc);
        cholesky_solve(&a, &rhs).map_err(|e| match e {
            Error::Singular(m) => Error::Singular(format!("ridge normal equations with lambda {lambda}: {m}")),
            other => other,
        })?
    };
    let bias = y_mean - col_mean.dot(&w);
    let weights = w.to_vec();
    ensure_finite("ridge weights", &weights)?;
    Ok(Ridge { lambda, weights, bias })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64 + 1.0).collect();
        let r = ridge_fit(&x, &y, 0.0).unwrap();
        assert!((r.weights[0] - 2.0).abs() < 1e-9);
        assert!((r.bias - 1.0).abs() < 1e-9);
    }

    #[test]
    fn huge_lambda_gives_mean() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = [1.0, 4.0, 2.0, 8.0, 5.0, 3.0];
        let r = ridge_fit(&x, &y, 1e9).unwrap();
        assert!(r.weights.iter().all(|w| w.abs() < 1e-6));
        assert!((r.bias - y.iter().sum::<f64>() / 6.0).abs() < 1e-5);
    }

    #[test]
    fn singular_without_penalty() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(matches!(ridge_fit(&x, &[1.0, 2.0, 3.0], 0.0), Err(Error::Singular(_))));
        assert!(ridge_fit(&x, &[1.0, 2.0, 3.0], 0.1).is_ok());
    }
}
