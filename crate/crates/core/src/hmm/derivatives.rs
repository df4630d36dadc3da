use crate::error::{Error, Result};
use crate::hmm::spec::{Assembled, GeneratorKind, HmmSpec};
use crate::matrix::Mat;
use crate::scalar::Real;

/// Log-likelihood with gradient and Hessian over the free parameters.
#[derive(Clone, Debug)]
pub struct Derivatives<T> {
    pub log_likelihood: T,
    pub gradient: Vec<T>,
    /// Empty (0x0) when only the gradient was requested.
    pub hessian: Mat<T>,
}

type Sparse<T> = Vec<(usize, usize, T)>;

/// Precomputed pieces for differentiating the forward recursion.
///
/// Alongside the normalized posterior we carry its first and second
/// derivatives and accumulate the derivatives of the log-normalizers.
#[derive(Clone, Debug)]
pub struct DerivativeModel<T> {
    assembled: Assembled<T>,
    trans: Vec<Sparse<T>>,
    out: Vec<Sparse<T>>,
}

fn sparse<T: Real>(m: &Mat<T>) -> Sparse<T> {
    m.iter().filter(|&(_, _, x)| !x.is_zero()).collect()
}

fn sparse_mul_add<T: Real>(d: &Sparse<T>, v: &[T], out: &mut [T]) {
    for &(r, c, x) in d {
        out[r] = out[r] + x * v[c];
    }
}

impl<T: Real> HmmSpec<T> {
    /// Fails with [`Error::DerivativeAtBound`] if a free rate sits on 0 or 1.
    pub fn derivative_model(&self) -> Result<DerivativeModel<T>> {
        let assembled = self.assemble()?;
        let mut trans = Vec::new();
        let mut out = Vec::new();
        for i in self.free_indices() {
            let p = &self.params()[i];
            if !(p.value > T::zero() && p.value < T::one()) {
                return Err(Error::DerivativeAtBound(p.name.clone()));
            }
            let g = &self.generators()[i];
            match g.kind {
                GeneratorKind::Transition => {
                    trans.push(sparse(&g.matrix));
                    out.push(Vec::new());
                }
                GeneratorKind::Output => {
                    trans.push(Vec::new());
                    out.push(sparse(&g.matrix));
                }
            }
        }
        Ok(DerivativeModel {
            assembled,
            trans,
            out,
        })
    }

    pub fn log_likelihood_derivatives(&self, obs_seq: &[usize]) -> Result<Derivatives<T>> {
        self.derivative_model()?.evaluate(obs_seq, true)
    }
}

impl<T: Real> DerivativeModel<T> {
    pub fn n_free(&self) -> usize {
        self.trans.len()
    }

    pub fn assembled(&self) -> &Assembled<T> {
        &self.assembled
    }

    pub fn evaluate(&self, obs_seq: &[usize], with_hessian: bool) -> Result<Derivatives<T>> {
        if obs_seq.is_empty() {
            return Err(Error::EmptyInput("observation sequence"));
        }
        let n_h = self.assembled.n_states();
        let n = self.n_free();
        let n2 = if with_hessian { n * n } else { 0 };
        let a = &self.assembled.transition;
        let zero = T::zero();

        let mut pi = self.assembled.prior.clone();
        let mut dpi = vec![zero; n * n_h];
        let mut d2pi = vec![zero; n2 * n_h];
        let mut q = vec![zero; n_h];
        let mut dq = vec![zero; n * n_h];
        let mut d2q = vec![zero; n2 * n_h];
        let mut dc = vec![zero; n];
        let mut ll = zero;
        let mut grad = vec![zero; n];
        let mut hess = if with_hessian { Mat::zeros(n, n) } else { Mat::zeros(0, 0) };

        for (step, &obs) in obs_seq.iter().enumerate() {
            self.assembled.check_symbol(obs)?;
            // Markov evolution (the first observation uses the prior directly).
            if step == 0 {
                q.copy_from_slice(&pi);
            } else {
                a.mul_vec_into(&pi, &mut q);
                for i in 0..n {
                    let dqi = &mut dq[i * n_h..(i + 1) * n_h];
                    a.mul_vec_into(&dpi[i * n_h..(i + 1) * n_h], dqi);
                    sparse_mul_add(&self.trans[i], &pi, dqi);
                }
                if with_hessian {
                    for i in 0..n {
                        for j in i..n {
                            let k = (i * n + j) * n_h;
                            let d2qij = &mut d2q[k..k + n_h];
                            a.mul_vec_into(&d2pi[k..k + n_h], d2qij);
                            sparse_mul_add(&self.trans[i], &dpi[j * n_h..(j + 1) * n_h], d2qij);
                            sparse_mul_add(&self.trans[j], &dpi[i * n_h..(i + 1) * n_h], d2qij);
                        }
                    }
                }
            }

            // Bayesian update: u = B[obs] * q and its derivatives, written back into q/dq/d2q.
            let b = self.assembled.output.row(obs);
            let db_row = |i: usize| self.out[i].iter().filter(move |&&(r, _, _)| r == obs);
            if with_hessian {
                for i in 0..n {
                    for j in i..n {
                        let k = (i * n + j) * n_h;
                        for h in 0..n_h {
                            d2q[k + h] = b[h] * d2q[k + h];
                        }
                        for &(_, c, x) in db_row(i) {
                            d2q[k + c] = d2q[k + c] + x * dq[j * n_h + c];
                        }
                        for &(_, c, x) in db_row(j) {
                            d2q[k + c] = d2q[k + c] + x * dq[i * n_h + c];
                        }
                    }
                }
            }
            for i in 0..n {
                for h in 0..n_h {
                    dq[i * n_h + h] = b[h] * dq[i * n_h + h];
                }
                for &(_, c, x) in db_row(i) {
                    dq[i * n_h + c] = dq[i * n_h + c] + x * q[c];
                }
            }
            for h in 0..n_h {
                q[h] = b[h] * q[h];
            }

            let c: T = q.iter().copied().sum();
            if !(c >= T::likelihood_floor()) {
                return Err(Error::ZeroLikelihood {
                    round: step + 1,
                    symbol: obs,
                });
            }
            for i in 0..n {
                dc[i] = dq[i * n_h..(i + 1) * n_h].iter().copied().sum();
            }
            ll = ll + c.ln();
            for i in 0..n {
                grad[i] = grad[i] + dc[i] / c;
            }

            // Renormalize: pi = u / c and its derivatives.
            for h in 0..n_h {
                pi[h] = q[h] / c;
            }
            for i in 0..n {
                for h in 0..n_h {
                    dpi[i * n_h + h] = (dq[i * n_h + h] - pi[h] * dc[i]) / c;
                }
            }
            if with_hessian {
                for i in 0..n {
                    for j in i..n {
                        let k = (i * n + j) * n_h;
                        let d2c: T = d2q[k..k + n_h].iter().copied().sum();
                        let hij = d2c / c - dc[i] * dc[j] / (c * c);
                        hess[(i, j)] = hess[(i, j)] + hij;
                        if i != j {
                            hess[(j, i)] = hess[(i, j)];
                        }
                        for h in 0..n_h {
                            d2pi[k + h] = (d2q[k + h]
                                - dpi[i * n_h + h] * dc[j]
                                - dpi[j * n_h + h] * dc[i]
                                - pi[h] * d2c)
                                / c;
                        }
                    }
                }
            }
        }
        Ok(Derivatives {
            log_likelihood: ll,
            gradient: grad,
            hessian: hess,
        })
    }
}
