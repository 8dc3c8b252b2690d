//! Straight-loop metric definitions used as test oracles.
pub fn mae(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - p[i]).abs();
    }
    s / y.len() as f64
}

pub fn rmse(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += (y[i] - p[i]) * (y[i] - p[i]);
    }
    (s / y.len() as f64).sqrt()
}

pub fn r2(y: &[f64], p: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut m = 0.0;
    for v in y {
        m += v / n;
    }
    let (mut res, mut tot) = (0.0, 0.0);
    for i in 0..y.len() {
        res += (y[i] - p[i]).powi(2);
        tot += (y[i] - m).powi(2);
    }
    1.0 - res / tot
}

/// Covariance over the product of standard deviations, all with 1/(n−1).
pub fn pearson(y: &[f64], p: &[f64]) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mp = p.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    for i in 0..y.len() {
        cov += (y[i] - my) * (p[i] - mp);
    }
    cov /= n - 1.0;
    let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sd(y, my) * sd(p, mp))
}
