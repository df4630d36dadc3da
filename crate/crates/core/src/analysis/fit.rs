use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y = a exp(-M / upsilon) + b` with least-squares standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    pub upsilon: f64,
    pub b: f64,
    pub se_a: f64,
    pub se_upsilon: f64,
    pub se_b: f64,
    pub residual_norm: f64,
    /// False when the decay constant cannot be determined (e.g. a flat curve).
    pub identifiable: bool,
    pub iterations: usize,
}

impl DecayFit {
    pub fn eval(&self, m: f64) -> f64 {
        self.a * (-m / self.upsilon).exp() + self.b
    }
}

/// Linear least squares for `(a, b)` at fixed `upsilon`, returning the weighted RSS.
fn linear_part(m: &[f64], y: &[f64], w: &[f64], upsilon: f64) -> (f64, f64, f64) {
    let (mut s_w, mut s_e, mut s_ee, mut s_y, mut s_ey) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&mi, &yi), &wi) in m.iter().zip(y).zip(w) {
        let e = (-mi / upsilon).exp();
        s_w += wi;
        s_e += wi * e;
        s_ee += wi * e * e;
        s_y += wi * yi;
        s_ey += wi * e * yi;
    }
    let det = s_w * s_ee - s_e * s_e;
    if det.abs() < 1e-300 {
        return (0.0, s_y / s_w, f64::INFINITY);
    }
    let a = (s_w * s_ey - s_e * s_y) / det;
    let b = (s_ee * s_y - s_e * s_ey) / det;
    let rss = m
        .iter()
        .zip(y)
        .zip(w)
        .map(|((&mi, &yi), &wi)| wi * (yi - a * (-mi / upsilon).exp() - b).powi(2))
        .sum();
    (a, b, rss)
}

/// Levenberg-Marquardt from the best point of a logarithmic grid over `upsilon`.
///
/// With `sigma`, residuals are weighted by `1/sigma^2` and the covariance is
/// `(J^T W J)^-1`; without, it is scaled by the residual variance.
pub fn fit_decay(m: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<DecayFit> {
    let n = m.len();
    if n < 4 || y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::SequenceTooShort {
            needed: 4,
            got: n.min(y.len()),
        });
    }
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; n],
    };
    let span = m.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - m.iter().cloned().fold(f64::INFINITY, f64::min);
    let grid_lo = (span.max(1.0) * 1e-3).ln();
    let grid_hi = (span.max(1.0) * 1e3).ln();
    let mut best = (f64::INFINITY, 0.0, 0.0, 1.0);
    for k in 0..=400 {
        let u = (grid_lo + (grid_hi - grid_lo) * k as f64 / 400.0).exp();
        let (a, b, rss) = linear_part(m, y, &w, u);
        if rss < best.0 {
            best = (rss, a, b, u);
        }
    }
    let (_, a0, b0, u0) = best;
    // Work in log(upsilon) so the decay constant stays positive.
    let mut p = Vector3::new(a0, u0.ln(), b0);
    let residuals = |p: &Vector3<f64>| -> Vec<f64> {
        let u = p[1].exp();
        m.iter()
            .zip(y)
            .map(|(&mi, &yi)| yi - p[0] * (-mi / u).exp() - p[2])
            .collect()
    };
    let jacobian = |p: &Vector3<f64>| -> Vec<Vector3<f64>> {
        let u = p[1].exp();
        m.iter()
            .map(|&mi| {
                let e = (-mi / u).exp();
                Vector3::new(e, p[0] * e * mi / u, 1.0)
            })
            .collect()
    };
    let cost = |r: &[f64]| r.iter().zip(&w).map(|(r, w)| w * r * r).sum::<f64>();
    let normal = |j: &[Vector3<f64>], r: &[f64]| {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((ji, &ri), &wi) in j.iter().zip(r).zip(&w) {
            jtj += wi * ji * ji.transpose();
            jtr += wi * ri * ji;
        }
        (jtj, jtr)
    };

    let mut lambda = 1e-3;
    let mut r = residuals(&p);
    let mut c = cost(&r);
    let mut iterations = 0;
    for _ in 0..500 {
        iterations += 1;
        let (jtj, jtr) = normal(&jacobian(&p), &r);
        let mut improved = false;
        while lambda < 1e16 {
            let damped = jtj + lambda * Matrix3::from_diagonal(&jtj.diagonal());
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let r_trial = residuals(&trial);
            let c_trial = cost(&r_trial);
            if c_trial.is_finite() && c_trial <= c {
                let done = (c - c_trial) <= 1e-15 * c.max(1e-300) || step.norm() < 1e-14;
                p = trial;
                r = r_trial;
                c = c_trial;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    let upsilon = p[1].exp();
    let (jtj, _) = normal(&jacobian(&p), &r);
    let scale = if sigma.is_some() { 1.0 } else { c / (n as f64 - 3.0).max(1.0) };
    let cov = jtj.try_inverse().map(|inv| inv * scale);
    let se = |k: usize| cov.map_or(f64::INFINITY, |c| c[(k, k)].max(0.0).sqrt());
    // Standard error of log(upsilon) carries over to upsilon by the chain rule.
    let se_upsilon = se(1) * upsilon;
    let y_scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    let identifiable = cov.is_some()
        && se_upsilon.is_finite()
        && se_upsilon < 10.0 * upsilon
        && p[0].abs() > 1e-6 * y_scale;
    Ok(DecayFit {
        a: p[0],
        upsilon,
        b: p[2],
        se_a: se(0),
        se_upsilon,
        se_b: se(2),
        residual_norm: c.sqrt(),
        identifiable,
        iterations,
    })
}
