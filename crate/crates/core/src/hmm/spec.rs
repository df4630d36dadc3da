use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Transition,
    Output,
}

/// An error channel: `A` (or `B`) moves by `rate * matrix`.
#[derive(Clone, Debug)]
pub struct Generator<T> {
    pub name: String,
    pub kind: GeneratorKind,
    pub matrix: Mat<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: T,
    pub frozen: bool,
}

/// A linearly parametrized hidden Markov model.
///
/// Matrices are column-stochastic: `A[(new, old)]` and `B[(output, state)]`.
/// There is exactly one parameter per generator, in the same order.
#[derive(Clone, Debug)]
pub struct HmmSpec<T> {
    name: String,
    state_labels: Vec<String>,
    output_labels: Vec<String>,
    base_transition: Mat<T>,
    base_output: Mat<T>,
    generators: Vec<Generator<T>>,
    params: Vec<Param<T>>,
    prior: Vec<T>,
    leaked_mask: Vec<bool>,
}

/// Assembled transition/output matrices plus what filtering needs.
#[derive(Clone, Debug)]
pub struct Assembled<T> {
    pub transition: Mat<T>,
    pub output: Mat<T>,
    pub prior: Vec<T>,
    pub leaked_mask: Vec<bool>,
}

impl<T: Real> HmmSpec<T> {
    /// Validates the structural invariants and wraps the parts into a spec.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        state_labels: Vec<String>,
        output_labels: Vec<String>,
        base_transition: Mat<T>,
        base_output: Mat<T>,
        generators: Vec<(Generator<T>, T)>,
        prior: Vec<T>,
        leaked_mask: Vec<bool>,
    ) -> Result<Self> {
        let n_h = state_labels.len();
        let n_o = output_labels.len();
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        if n_h == 0 || n_o == 0 {
            return invalid("empty state or output alphabet".into());
        }
        if (base_transition.rows(), base_transition.cols()) != (n_h, n_h) {
            return invalid(format!("A0 must be {n_h}x{n_h}"));
        }
        if (base_output.rows(), base_output.cols()) != (n_o, n_h) {
            return invalid(format!("B0 must be {n_o}x{n_h}"));
        }
        let tol = T::prob_tol();
        for c in 0..n_h {
            if (base_transition.column_sum(c) - T::one()).abs() > tol {
                return invalid(format!("A0 column {c} does not sum to 1"));
            }
            if (base_output.column_sum(c) - T::one()).abs() > tol {
                return invalid(format!("B0 column {c} does not sum to 1"));
            }
        }
        let mut gens = Vec::with_capacity(generators.len());
        let mut params = Vec::with_capacity(generators.len());
        for (g, value) in generators {
            let shape = match g.kind {
                GeneratorKind::Transition => (n_h, n_h),
                GeneratorKind::Output => (n_o, n_h),
            };
            if (g.matrix.rows(), g.matrix.cols()) != shape {
                return invalid(format!("generator `{}` has wrong shape", g.name));
            }
            for c in 0..n_h {
                if g.matrix.column_sum(c).abs() > tol {
                    return invalid(format!("generator `{}` column {c} does not sum to 0", g.name));
                }
            }
            if params.iter().any(|p: &Param<T>| p.name == g.name) {
                return invalid(format!("duplicate generator `{}`", g.name));
            }
            params.push(Param {
                name: g.name.clone(),
                value,
                frozen: false,
            });
            gens.push(g);
        }
        if prior.len() != n_h || leaked_mask.len() != n_h {
            return invalid("prior and leaked mask must have one entry per state".into());
        }
        if prior.iter().any(|&p| p < T::zero())
            || (prior.iter().copied().sum::<T>() - T::one()).abs() > tol
        {
            return invalid("prior is not a probability vector".into());
        }
        if leaked_mask.iter().all(|&l| l) {
            return invalid("every state is marked leaked".into());
        }
        Ok(Self {
            name: name.into(),
            state_labels,
            output_labels,
            base_transition,
            base_output,
            generators: gens,
            params,
            prior,
            leaked_mask,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_states(&self) -> usize {
        self.state_labels.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_labels.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn base_transition(&self) -> &Mat<T> {
        &self.base_transition
    }

    pub fn base_output(&self) -> &Mat<T> {
        &self.base_output
    }

    pub fn generators(&self) -> &[Generator<T>] {
        &self.generators
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn leaked_mask(&self) -> &[bool] {
        &self.leaked_mask
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn param(&self, name: &str) -> Result<T> {
        Ok(self.params[self.param_index(name)?].value)
    }

    pub fn set_param(&mut self, name: &str, value: T) -> Result<()> {
        let i = self.param_index(name)?;
        self.params[i].value = value;
        Ok(())
    }

    /// Fixes a parameter at `value`; frozen parameters are excluded from fitting.
    pub fn freeze(&mut self, name: &str, value: T) -> Result<()> {
        let i = self.param_index(name)?;
        self.params[i].value = value;
        self.params[i].frozen = true;
        Ok(())
    }

    pub fn unfreeze(&mut self, name: &str) -> Result<()> {
        let i = self.param_index(name)?;
        self.params[i].frozen = false;
        Ok(())
    }

    /// Indices of the non-frozen parameters, in declaration order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.params.len())
            .filter(|&i| !self.params[i].frozen)
            .collect()
    }

    pub fn n_free(&self) -> usize {
        self.params.iter().filter(|p| !p.frozen).count()
    }

    pub fn free_values(&self) -> Vec<T> {
        self.params
            .iter()
            .filter(|p| !p.frozen)
            .map(|p| p.value)
            .collect()
    }

    /// Overwrites the free parameters in declaration order.
    pub fn set_free_values(&mut self, values: &[T]) {
        let free = self.free_indices();
        assert_eq!(free.len(), values.len(), "free-parameter count mismatch");
        for (&i, &v) in free.iter().zip(values) {
            self.params[i].value = v;
        }
    }

    pub fn set_prior(&mut self, prior: Vec<T>) -> Result<()> {
        let tol = T::prob_tol();
        if prior.len() != self.n_states()
            || prior.iter().any(|&p| p < T::zero())
            || (prior.iter().copied().sum::<T>() - T::one()).abs() > tol
        {
            return Err(Error::InvalidModel("prior is not a probability vector".into()));
        }
        self.prior = prior;
        Ok(())
    }

    /// `A = A0 + sum p D^(A)`, `B = B0 + sum p D^(B)`, checked entrywise.
    pub fn assemble(&self) -> Result<Assembled<T>> {
        let mut a = self.base_transition.clone();
        let mut b = self.base_output.clone();
        for (g, p) in self.generators.iter().zip(&self.params) {
            if !(p.value >= T::zero() && p.value <= T::one()) {
                return Err(Error::InvalidParametrization {
                    generator: g.name.clone(),
                    reason: format!("rate {} outside [0, 1]", p.value),
                });
            }
            match g.kind {
                GeneratorKind::Transition => a.add_scaled(p.value, &g.matrix),
                GeneratorKind::Output => b.add_scaled(p.value, &g.matrix),
            }
        }
        let tol = T::prob_tol();
        for (kind, m) in [(GeneratorKind::Transition, &a), (GeneratorKind::Output, &b)] {
            if let Some((r, c, x)) = m
                .iter()
                .find(|&(_, _, x)| x < -tol || x > T::one() + tol || x.is_nan())
            {
                return Err(Error::InvalidParametrization {
                    generator: self.blame(kind, r, c),
                    reason: format!("assembled entry ({r},{c}) = {x} outside [0, 1]"),
                });
            }
        }
        Ok(Assembled {
            transition: a,
            output: b,
            prior: self.prior.clone(),
            leaked_mask: self.leaked_mask.clone(),
        })
    }

    /// Name of the active generator contributing most to an out-of-range entry.
    fn blame(&self, kind: GeneratorKind, r: usize, c: usize) -> String {
        self.generators
            .iter()
            .zip(&self.params)
            .filter(|(g, p)| g.kind == kind && !p.value.is_zero())
            .map(|(g, p)| (g, (g.matrix[(r, c)] * p.value).abs()))
            .filter(|(_, w)| !w.is_zero())
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
            .map_or_else(|| "<base>".to_string(), |(g, _)| g.name.clone())
    }

    /// The same model in another scalar type.
    pub fn cast<U: Real>(&self) -> HmmSpec<U> {
        let conv = |x: T| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan());
        HmmSpec {
            name: self.name.clone(),
            state_labels: self.state_labels.clone(),
            output_labels: self.output_labels.clone(),
            base_transition: self.base_transition.cast(),
            base_output: self.base_output.cast(),
            generators: self
                .generators
                .iter()
                .map(|g| Generator {
                    name: g.name.clone(),
                    kind: g.kind,
                    matrix: g.matrix.cast(),
                })
                .collect(),
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    value: conv(p.value),
                    frozen: p.frozen,
                })
                .collect(),
            prior: self.prior.iter().map(|&x| conv(x)).collect(),
            leaked_mask: self.leaked_mask.clone(),
        }
    }
}

impl<T: Real> Assembled<T> {
    pub fn n_states(&self) -> usize {
        self.prior.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output.rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(p_leak: f64, p_seep: f64) -> HmmSpec<f64> {
        let labels = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        let gen = |name: &str, kind, rows: &[Vec<f64>]| Generator {
            name: name.into(),
            kind,
            matrix: Mat::from_rows(rows),
        };
        HmmSpec::new(
            "two",
            labels(&["comp", "leaked"]),
            labels(&["+1", "-1"]),
            Mat::identity(2),
            Mat::identity(2),
            vec![
                (
                    gen("p_leak", GeneratorKind::Transition, &[vec![-1.0, 0.0], vec![1.0, 0.0]]),
                    p_leak,
                ),
                (
                    gen("p_seep", GeneratorKind::Transition, &[vec![0.0, 1.0], vec![0.0, -1.0]]),
                    p_seep,
                ),
            ],
            vec![1.0, 0.0],
            vec![false, true],
        )
        .unwrap()
    }

    #[test]
    fn assemble_substitutes_rates() {
        let a = two_state(0.1, 0.2).assemble().unwrap();
        assert_eq!(
            a.transition,
            Mat::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]])
        );
        assert_eq!(a.output, Mat::identity(2));
    }

    #[test]
    fn zero_params_give_base_matrices() {
        let spec = two_state(0.0, 0.0);
        let a = spec.assemble().unwrap();
        assert_eq!(&a.transition, spec.base_transition());
        assert_eq!(&a.output, spec.base_output());
    }

    #[test]
    fn out_of_range_rate_names_generator() {
        let err = two_state(1.5, 0.0).assemble().unwrap_err();
        match err {
            Error::InvalidParametrization { generator, .. } => assert_eq!(generator, "p_leak"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_generator_column_sum() {
        let err = HmmSpec::<f64>::new(
            "bad",
            vec!["a".into(), "b".into()],
            vec!["x".into()],
            Mat::identity(2),
            Mat::from_rows(&[vec![1.0, 1.0]]),
            vec![(
                Generator {
                    name: "g".into(),
                    kind: GeneratorKind::Transition,
                    matrix: Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
                },
                0.1,
            )],
            vec![1.0, 0.0],
            vec![false, true],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn freezing_removes_from_free_set() {
        let mut spec = two_state(0.1, 0.2);
        spec.freeze("p_leak", 0.05).unwrap();
        assert_eq!(spec.free_indices(), vec![1]);
        assert_eq!(spec.free_values(), vec![0.2]);
        assert_eq!(spec.param("p_leak").unwrap(), 0.05);
    }
}
