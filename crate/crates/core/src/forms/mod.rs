//! Vector- and Lie-algebra-valued differential forms on chart domains.
//!
//! A [`Form`] is anything that can produce its Taylor expansion at a point
//! ([`FormSource`]). Polynomial and closure-over-Taylor backends are exact;
//! the sampled backend falls back on central differences.

mod backends;
mod combinators;
pub mod literal;
pub mod local;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

pub use backends::{FnForm, PolyForm, SampledForm};
pub use local::{multi_indices, LocalForm};

use crate::error::{Error, Result};
use crate::lie::{LieAlgebra, MatrixRep, MultilinearFunction};
use crate::taylor::{basis, TMat, Taylor};

/// A source of Taylor expansions of a form.
pub trait FormSource: Send + Sync {
    fn degree(&self) -> usize;
    fn chart_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    /// Expansion at `x` truncated at `order`.
    fn expand(&self, x: &[f64], order: usize) -> LocalForm;
    /// Whether expansions are exact (no finite differences anywhere below).
    fn exact(&self) -> bool {
        true
    }
}

/// Function of Taylor arguments, used for maps and matrix fields that must
/// be expandable to any order.
pub type TaylorFn = Arc<dyn Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[Taylor]) -> TMat + Send + Sync>;

/// A smooth map between chart domains written in Taylor arithmetic.
#[derive(Clone)]
pub struct ChartMap {
    pub in_dim: usize,
    pub out_dim: usize,
    f: TaylorFn,
}

impl fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChartMap({} -> {})", self.in_dim, self.out_dim)
    }
}

impl ChartMap {
    pub fn new(in_dim: usize, out_dim: usize, f: impl Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync + 'static) -> Self {
        ChartMap { in_dim, out_dim, f: Arc::new(f) }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, |x| x.to_vec())
    }

    /// Affine map `y -> A y + b`.
    pub fn affine(a: DMatrix<f64>, b: Vec<f64>) -> Self {
        let (m, n) = a.shape();
        Self::new(n, m, move |y| {
            (0..m)
                .map(|i| {
                    let mut t = Taylor::constant(y[0].basis(), b[i]);
                    for (j, yj) in y.iter().enumerate() {
                        if a[(i, j)] != 0.0 {
                            t.add_scaled(yj, a[(i, j)]);
                        }
                    }
                    t
                })
                .collect()
        })
    }

    pub fn apply(&self, x: &[Taylor]) -> Vec<Taylor> {
        (self.f)(x)
    }

    pub fn expand(&self, y: &[f64], order: usize) -> Vec<Taylor> {
        (self.f)(&Taylor::point(&basis(self.in_dim, order), y))
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        self.expand(y, 0).iter().map(|t| t.value()).collect()
    }

    /// Jacobian matrix at `y`.
    pub fn jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let e = self.expand(y, 1);
        DMatrix::from_fn(self.out_dim, self.in_dim, |i, j| e[i].derivative(j).value())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ChartMap) -> ChartMap {
        let (outer, inner_f) = (self.f.clone(), inner.f.clone());
        ChartMap { in_dim: inner.in_dim, out_dim: self.out_dim, f: Arc::new(move |x| outer(&inner_f(x))) }
    }
}

/// Shared handle to a form source.
#[derive(Clone)]
pub struct Form(Arc<dyn FormSource>);

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form(degree {}, chart {}, target {})", self.degree(), self.chart_dim(), self.target_dim())
    }
}

impl Form {
    pub fn new(src: impl FormSource + 'static) -> Self {
        Form(Arc::new(src))
    }

    pub fn degree(&self) -> usize {
        self.0.degree()
    }

    pub fn chart_dim(&self) -> usize {
        self.0.chart_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.0.target_dim()
    }

    pub fn exact(&self) -> bool {
        self.0.exact()
    }

    pub fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        assert_eq!(x.len(), self.chart_dim(), "point has the wrong dimension");
        self.0.expand(x, order)
    }

    /// Point value (order-0 expansion).
    pub fn at(&self, x: &[f64]) -> LocalForm {
        self.expand(x, 0)
    }

    pub fn eval(&self, x: &[f64], vectors: &[&[f64]]) -> Vec<f64> {
        self.at(x).eval(vectors)
    }

    /// Largest coefficient magnitude at `x`.
    pub fn norm_at(&self, x: &[f64]) -> f64 {
        self.at(x).max_abs()
    }

    pub fn zero(chart_dim: usize, degree: usize, target_dim: usize) -> Form {
        Form::new(FnForm::new(chart_dim, degree, target_dim, move |x, order| {
            LocalForm::zero(x.len(), degree, target_dim, &basis(x.len(), order))
        }))
    }

    /// Constant-coefficient 1-form `x -> M dx` with `M` of shape `w x n`.
    pub fn constant_one_form(m: DMatrix<f64>) -> Form {
        let (w, n) = m.shape();
        Form::new(FnForm::new(n, 1, w, move |_, order| LocalForm::one_form(&TMat::from_matrix(&basis(n, order), &m))))
    }

    /// 1-form whose `w x n` coefficient matrix is a Taylor-expandable field.
    pub fn one_form_from_field(n: usize, w: usize, field: impl Fn(&[Taylor]) -> TMat + Send + Sync + 'static) -> Form {
        Form::new(FnForm::new(n, 1, w, move |x, order| LocalForm::one_form(&field(&Taylor::point(&basis(n, order), x)))))
    }

    /// Vector-valued function as a 0-form.
    pub fn function(n: usize, w: usize, f: impl Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync + 'static) -> Form {
        Form::new(FnForm::new(n, 0, w, move |x, order| LocalForm::function(n, f(&Taylor::point(&basis(n, order), x)))))
    }

    pub fn d(&self) -> Form {
        Form::new(combinators::Exterior(self.clone()))
    }

    /// Wedge through a bilinear map `(k, i, j, c)` into `R^out_dim`.
    pub fn wedge(&self, other: &Form, tensor: Vec<(usize, usize, usize, f64)>, out_dim: usize) -> Result<Form> {
        if self.chart_dim() != other.chart_dim() {
            return Err(Error::DimensionMismatch("forms live on different charts".into()));
        }
        Ok(Form::new(combinators::Wedge { a: self.clone(), b: other.clone(), tensor: Arc::new(tensor), out_dim }))
    }

    /// Scalar wedge of scalar forms.
    pub fn wedge_scalar(&self, other: &Form) -> Result<Form> {
        self.wedge(other, vec![(0, 0, 0, 1.0)], 1)
    }

    /// Graded bracket `[self, other]^∧` in the algebra `alg`.
    pub fn bracket(&self, other: &Form, alg: &LieAlgebra) -> Result<Form> {
        if self.target_dim() != alg.dim() || other.target_dim() != alg.dim() {
            return Err(Error::TargetMismatch(format!(
                "bracket of forms with targets {} and {} in algebra of dim {}",
                self.target_dim(),
                other.target_dim(),
                alg.dim()
            )));
        }
        self.wedge(other, alg.bracket_tensor(), alg.dim())
    }

    /// `ρ^∧(self) psi` for an h-valued 1-form `self` and W-valued `psi`.
    pub fn rho_wedge(&self, psi: &Form, rep: &MatrixRep) -> Result<Form> {
        if self.degree() != 1 {
            return Err(Error::DimensionMismatch("rho_wedge needs a 1-form on the left".into()));
        }
        if rep.algebra_dim() != self.target_dim() || rep.dim() != psi.target_dim() {
            return Err(Error::DimensionMismatch(format!(
                "representation of dim {} on W = R^{} against forms with targets {} and {}",
                rep.algebra_dim(),
                rep.dim(),
                self.target_dim(),
                psi.target_dim()
            )));
        }
        let mut tensor = Vec::new();
        for (a, g) in rep.generators().iter().enumerate() {
            for u in 0..rep.dim() {
                for v in 0..rep.dim() {
                    if g[(u, v)] != 0.0 {
                        tensor.push((u, a, v, g[(u, v)]));
                    }
                }
            }
        }
        self.wedge(psi, tensor, rep.dim())
    }

    /// `f ∘ (psi_1 ⊗_∧ .. ⊗_∧ psi_k)`.
    pub fn apply_multilinear(f: &MultilinearFunction, forms: &[Form]) -> Result<Form> {
        if forms.len() != f.arity() || f.arity() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} forms for a function of arity {}",
                forms.len(),
                f.arity()
            )));
        }
        let n = forms[0].chart_dim();
        for p in forms {
            if p.target_dim() != f.dim() || p.chart_dim() != n {
                return Err(Error::TargetMismatch("multilinear argument targets".into()));
            }
        }
        Ok(Form::new(combinators::Multilinear { f: f.clone(), forms: forms.to_vec() }))
    }

    pub fn pullback(&self, map: &ChartMap) -> Result<Form> {
        if map.out_dim != self.chart_dim() {
            return Err(Error::DimensionMismatch(format!(
                "map into R^{} against a form on R^{}",
                map.out_dim,
                self.chart_dim()
            )));
        }
        Ok(Form::new(combinators::Pullback { map: map.clone(), form: self.clone() }))
    }

    pub fn map_target(&self, m: DMatrix<f64>) -> Result<Form> {
        if m.ncols() != self.target_dim() {
            return Err(Error::DimensionMismatch("target map".into()));
        }
        Ok(Form::new(combinators::MapTarget { form: self.clone(), m }))
    }

    /// Apply the point-dependent linear map `field(x)` to the target.
    pub fn twist(&self, rows: usize, field: MatrixFn) -> Form {
        Form::new(combinators::Twist { form: self.clone(), rows, field })
    }

    pub fn linear_combination(terms: Vec<(f64, Form)>) -> Result<Form> {
        let first = terms.first().ok_or_else(|| Error::DimensionMismatch("empty combination".into()))?;
        let shape = (first.1.degree(), first.1.chart_dim(), first.1.target_dim());
        for (_, t) in &terms {
            if (t.degree(), t.chart_dim(), t.target_dim()) != shape {
                return Err(Error::TargetMismatch("combining forms of different shapes".into()));
            }
        }
        Ok(Form::new(combinators::Combo(terms)))
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        Self::linear_combination(vec![(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        Self::linear_combination(vec![(1.0, self.clone()), (-1.0, other.clone())])
    }

    pub fn scale(&self, s: f64) -> Form {
        Form::new(combinators::Combo(vec![(s, self.clone())]))
    }

    /// Form backed by a closure producing expansions.
    pub fn from_fn(
        chart_dim: usize,
        degree: usize,
        target_dim: usize,
        f: impl Fn(&[f64], usize) -> LocalForm + Send + Sync + 'static,
    ) -> Form {
        Form::new(FnForm::new(chart_dim, degree, target_dim, f))
    }
}
