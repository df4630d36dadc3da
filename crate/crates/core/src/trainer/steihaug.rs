//! Truncated conjugate gradient for the trust-region subproblem.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(h: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&h[i * n..(i + 1) * n], v)).collect()
}

/// Step to the sphere `|s + tau d| = radius` with `tau >= 0`.
fn to_boundary(s: &[f64], d: &[f64], radius: f64) -> Vec<f64> {
    let a = dot(d, d);
    let b = 2.0 * dot(s, d);
    let c = dot(s, s) - radius * radius;
    let tau = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
    s.iter().zip(d).map(|(x, y)| x + tau * y).collect()
}

/// Approximately minimizes `g.s + s.H.s/2` over `|s| <= radius`.
///
/// `h` is row-major `n x n`. Returns the step and the model decrease
/// `-(g.s + s.H.s/2)`, which is nonnegative.
pub(crate) fn solve(g: &[f64], h: &[f64], radius: f64, tol: f64) -> (Vec<f64>, f64) {
    let n = g.len();
    let mut s = vec![0.0; n];
    let mut r: Vec<f64> = g.to_vec();
    let mut d: Vec<f64> = r.iter().map(|x| -x).collect();
    let r0 = dot(&r, &r).sqrt();
    if r0 > 0.0 {
        for _ in 0..(2 * n).max(1) {
            let hd = mat_vec(h, &d);
            let curv = dot(&d, &hd);
            if curv <= 0.0 {
                s = to_boundary(&s, &d, radius);
                break;
            }
            let rr = dot(&r, &r);
            let alpha = rr / curv;
            let next: Vec<f64> = s.iter().zip(&d).map(|(x, y)| x + alpha * y).collect();
            if dot(&next, &next).sqrt() >= radius {
                s = to_boundary(&s, &d, radius);
                break;
            }
            s = next;
            for (ri, hi) in r.iter_mut().zip(&hd) {
                *ri += alpha * hi;
            }
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= tol * r0 {
                break;
            }
            let beta = rr_new / rr;
            for (di, ri) in d.iter_mut().zip(&r) {
                *di = -ri + beta * *di;
            }
        }
    }
    let decrease = -(dot(g, &s) + 0.5 * dot(&s, &mat_vec(h, &s)));
    (s, decrease)
}
