use crate::error::{ensure_finite, Error, Result};

fn check(y: &[f64], yhat: &[f64], min: usize) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch(y.len(), yhat.len()));
    }
    if y.len() < min {
        return Err(Error::EmptyDataset(format!(
            "metric needs at least {min} pairs, got {}",
            y.len()
        )));
    }
    ensure_finite("targets", y)?;
    ensure_finite("predictions", yhat)
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    Ok((y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt())
}

/// `1 − SS_res / SS_total`; undefined for constant `y`.
pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 2)?;
    if is_constant(y) {
        return Err(Error::Undefined("R² of a constant target"));
    }
    let m = mean(y);
    let ss_total: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_total)
}

/// Sample Pearson correlation; undefined when either side is constant.
pub fn pearson(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 2)?;
    if is_constant(y) || is_constant(yhat) {
        return Err(Error::Undefined("Pearson correlation with a constant input"));
    }
    let (my, mp) = (mean(y), mean(yhat));
    let mut cov = 0.0;
    let mut vy = 0.0;
    let mut vp = 0.0;
    for (a, b) in y.iter().zip(yhat) {
        cov += (a - my) * (b - mp);
        vy += (a - my).powi(2);
        vp += (b - mp).powi(2);
    }
    Ok((cov / (vy * vp).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(mae(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(r2(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), -3.0);
        assert_eq!(r2(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap(), 1.0);
        assert!((pearson(&[1.0, 2.0, 4.0], &[-1.0, -2.0, -4.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_cases() {
        assert!(matches!(r2(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::Undefined(_))));
        assert!(matches!(pearson(&[1.0, 3.0], &[2.0, 2.0]), Err(Error::Undefined(_))));
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(mae(&[], &[]).is_err());
    }
}
