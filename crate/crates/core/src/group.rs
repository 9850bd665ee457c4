//! Matrix Lie groups near the identity: exponential, logarithm, adjoint
//! action and logarithmic derivatives of group-valued maps.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::{Form, FormSource, LocalForm, SampledForm};
use crate::lie::presets::GroupRelation;
use crate::lie::{LieAlgebra, MatrixRep};
use crate::poly::Polynomial;
use crate::taylor::{basis, TMat, Taylor};

/// Tolerance on the algebra-span residual of [`log`].
pub const LOG_SPAN_TOL: f64 = 1e-8;

/// A group element in a matrix representation.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub matrix: DMatrix<f64>,
    pub relation: GroupRelation,
}

impl GroupElement {
    pub fn new(matrix: DMatrix<f64>, relation: GroupRelation) -> Self {
        GroupElement { matrix, relation }
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d), GroupRelation::None)
    }

    pub fn condition_number(&self) -> f64 {
        crate::linalg::condition_number(&self.matrix)
    }

    pub fn relation_residual(&self) -> f64 {
        self.relation.residual(&self.matrix)
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.matrix.clone().try_inverse().ok_or(Error::SingularFrame)?;
        Ok(Self::new(inv, self.relation.clone()))
    }

    pub fn mul(&self, other: &GroupElement) -> Self {
        Self::new(&self.matrix * &other.matrix, self.relation.clone())
    }
}

/// `exp(rho(X))`.
pub fn exp(rep: &MatrixRep, x: &[f64]) -> DMatrix<f64> {
    rep.apply(x).exp()
}

fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().fold(0.0, |r, z| r.max(z.norm()))
}

/// Principal matrix logarithm by inverse scaling and squaring.
pub fn log_matrix(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let rho = spectral_radius(&(g - &id));
    if rho >= 1.0 {
        return Err(Error::OutOfBranch(rho));
    }
    let mut y = g.clone();
    let mut s = 0;
    while (&y - &id).norm() > 0.25 && s < 40 {
        y = sqrt_db(&y)?;
        s += 1;
    }
    let a = &y - &id;
    let mut term = a.clone();
    let mut out = DMatrix::zeros(n, n);
    for k in 1..200 {
        let add = &term / k as f64;
        if k % 2 == 1 {
            out += &add;
        } else {
            out -= &add;
        }
        if add.amax() < 1e-18 {
            break;
        }
        term = &term * &a;
    }
    Ok(out * 2f64.powi(s))
}

/// Denman-Beavers square root.
fn sqrt_db(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..60 {
        let yi = y.clone().try_inverse().ok_or(Error::OutOfBranch(f64::INFINITY))?;
        let zi = z.clone().try_inverse().ok_or(Error::OutOfBranch(f64::INFINITY))?;
        let y2 = (&y + zi) * 0.5;
        let z2 = (&z + yi) * 0.5;
        let delta = (&y2 - &y).amax();
        y = y2;
        z = z2;
        if delta < 1e-15 * y.amax().max(1.0) {
            break;
        }
    }
    Ok(y)
}

/// Algebra coordinates of `log g`; fails outside the principal branch or
/// when the logarithm leaves the generator span.
pub fn log(rep: &MatrixRep, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let l = log_matrix(g)?;
    let (x, res) = rep.coords(&l);
    if res > LOG_SPAN_TOL * l.amax().max(1.0) {
        return Err(Error::NotInAlgebra(res));
    }
    Ok(x)
}

/// `Ad(g) X` via conjugation in the representation.
pub fn ad_action(rep: &MatrixRep, g: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
    let gi = g.clone().try_inverse().ok_or(Error::SingularFrame)?;
    let m = g * rep.apply(x) * gi;
    let (y, res) = rep.coords(&m);
    if res > 1e-8 * m.amax().max(1.0) {
        return Err(Error::NotInAlgebra(res));
    }
    Ok(y)
}

/// `exp(ad Z)` computed from structure constants.
pub fn exp_ad(alg: &LieAlgebra, z: &[f64]) -> DMatrix<f64> {
    alg.ad(z).expect("dimension checked by caller").exp()
}

type TaylorGroupFn = Arc<dyn Fn(&[Taylor]) -> TMat + Send + Sync>;
type SampledGroupFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum Backend {
    /// `x -> exp(rho(P_1(x))) .. exp(rho(P_r(x)))` with polynomial algebra maps.
    ExpProduct(Vec<Vec<Polynomial>>),
    Taylor(TaylorGroupFn),
    Sampled(SampledGroupFn),
}

/// A smooth map from a chart domain into a matrix group.
#[derive(Clone)]
pub struct GroupValuedMap {
    domain_dim: usize,
    rep: MatrixRep,
    backend: Backend,
}

impl std::fmt::Debug for GroupValuedMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GroupValuedMap(R^{} -> GL({}))", self.domain_dim, self.rep.dim())
    }
}

impl GroupValuedMap {
    /// Product of exponentials of polynomial algebra-valued maps.
    pub fn exp_product(domain_dim: usize, rep: MatrixRep, factors: Vec<Vec<Polynomial>>) -> Result<Self> {
        for f in &factors {
            if f.len() != rep.algebra_dim() || f.iter().any(|p| p.nvars() != domain_dim) {
                return Err(Error::DimensionMismatch("exp-product factor shape".into()));
            }
        }
        Ok(GroupValuedMap { domain_dim, rep, backend: Backend::ExpProduct(factors) })
    }

    /// Map written in Taylor arithmetic.
    pub fn from_taylor(domain_dim: usize, rep: MatrixRep, f: impl Fn(&[Taylor]) -> TMat + Send + Sync + 'static) -> Self {
        GroupValuedMap { domain_dim, rep, backend: Backend::Taylor(Arc::new(f)) }
    }

    /// Black-box map; derivatives by central differences.
    pub fn sampled(domain_dim: usize, rep: MatrixRep, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        GroupValuedMap { domain_dim, rep, backend: Backend::Sampled(Arc::new(f)) }
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn rep(&self) -> &MatrixRep {
        &self.rep
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.backend, Backend::Sampled(_))
    }

    /// Left multiplication by a constant matrix, `x -> g0 phi(x)`.
    pub fn left_translate(&self, g0: DMatrix<f64>) -> Self {
        let inner = self.clone();
        match &self.backend {
            Backend::Sampled(f) => {
                let f = f.clone();
                Self::sampled(self.domain_dim, self.rep.clone(), move |x| &g0 * f(x))
            }
            _ => Self::from_taylor(self.domain_dim, self.rep.clone(), move |x| inner.taylor(x).premul_const(&g0)),
        }
    }

    /// Right multiplication by a constant matrix, `x -> phi(x) g0`.
    pub fn right_translate(&self, g0: DMatrix<f64>) -> Self {
        let inner = self.clone();
        match &self.backend {
            Backend::Sampled(f) => {
                let f = f.clone();
                Self::sampled(self.domain_dim, self.rep.clone(), move |x| f(x) * &g0)
            }
            _ => Self::from_taylor(self.domain_dim, self.rep.clone(), move |x| {
                let b = x[0].basis().clone();
                inner.taylor(x).matmul(&TMat::from_matrix(&b, &g0))
            }),
        }
    }

    /// Expansion in Taylor arithmetic (exact backends only).
    pub fn taylor(&self, x: &[Taylor]) -> TMat {
        match &self.backend {
            Backend::ExpProduct(factors) => {
                let b = x[0].basis().clone();
                let d = self.rep.dim();
                let mut acc = TMat::identity(&b, d);
                for f in factors {
                    let coeffs: Vec<Taylor> = f.iter().map(|p| p.eval_taylor(x)).collect();
                    let m = TMat::linear_combination(&coeffs, self.rep.generators());
                    acc = acc.matmul(&m.exp());
                }
                acc
            }
            Backend::Taylor(f) => f(x),
            Backend::Sampled(_) => panic!("sampled group-valued map has no Taylor expansion"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.backend {
            Backend::Sampled(f) => f(x),
            _ => self.taylor(&Taylor::point(&basis(self.domain_dim, 0), x)).value(),
        }
    }

    /// `(D_v phi)(x)`: exact for Taylor backends, central differences otherwise.
    pub fn directional_derivative(&self, x: &[f64], v: &[f64]) -> DMatrix<f64> {
        match &self.backend {
            Backend::Sampled(f) => {
                let h = 1e-4 * (1.0 + x.iter().map(|a| a * a).sum::<f64>().sqrt());
                let xp: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
                let xm: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
                (f(&xp) - f(&xm)) / (2.0 * h)
            }
            _ => {
                let t = self.taylor(&Taylor::point(&basis(self.domain_dim, 1), x));
                let d = self.rep.dim();
                let mut out = DMatrix::zeros(d, d);
                for (j, &vj) in v.iter().enumerate() {
                    if vj != 0.0 {
                        out += t.derivative(j).value() * vj;
                    }
                }
                out
            }
        }
    }

    fn project(&self, m: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (c, res) = self.rep.coords(m);
        if res > 1e-6 * m.amax().max(1.0) {
            return Err(Error::NotInAlgebra(res));
        }
        Ok(c)
    }

    /// `phi(x)^{-1} (D_v phi)(x)` in algebra coordinates.
    pub fn left_log_derivative(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let p = self.eval(x).try_inverse().ok_or(Error::SingularFrame)?;
        self.project(&(p * self.directional_derivative(x, v)))
    }

    /// `(D_v phi)(x) phi(x)^{-1}` in algebra coordinates.
    pub fn right_log_derivative(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let p = self.eval(x).try_inverse().ok_or(Error::SingularFrame)?;
        self.project(&(self.directional_derivative(x, v) * p))
    }

    /// The left or right logarithmic derivative as an algebra-valued 1-form.
    pub fn log_derivative_form(&self, left: bool) -> Form {
        let n = self.domain_dim;
        let w = self.rep.algebra_dim();
        if !self.is_exact() {
            let me = self.clone();
            return Form::new(SampledForm::new(n, 1, w, move |x, v| {
                let r = if left { me.left_log_derivative(x, v[0]) } else { me.right_log_derivative(x, v[0]) };
                r.unwrap_or_else(|_| vec![f64::NAN; w])
            }));
        }
        Form::new(LogDerivative { map: self.clone(), left })
    }
}

struct LogDerivative {
    map: GroupValuedMap,
    left: bool,
}

impl FormSource for LogDerivative {
    fn degree(&self) -> usize {
        1
    }
    fn chart_dim(&self) -> usize {
        self.map.domain_dim
    }
    fn target_dim(&self) -> usize {
        self.map.rep.algebra_dim()
    }
    fn expand(&self, x: &[f64], order: usize) -> LocalForm {
        let n = self.map.domain_dim;
        let phi = self.map.taylor(&Taylor::point(&basis(n, order + 1), x));
        let inv = phi.inverse().expect("group-valued map must be invertible").truncate(order);
        let rep = &self.map.rep;
        let d = rep.dim();
        let w = rep.algebra_dim();
        let b = basis(n, order);
        let mut f = LocalForm::zero(n, 1, w, &b);
        for j in 0..n {
            let dj = phi.derivative(j);
            let m = if self.left { inv.matmul(&dj) } else { dj.matmul(&inv) };
            // coordinates are linear in the matrix, so project coefficientwise
            for (c, coef) in coords_taylor(rep, &m, d).into_iter().enumerate() {
                *f.coeff_mut(j, c) = coef;
            }
        }
        f
    }
}

/// Algebra coordinates of a Taylor matrix, coefficient by coefficient.
pub fn coords_taylor(rep: &MatrixRep, m: &TMat, d: usize) -> Vec<Taylor> {
    let b = m.basis().clone();
    let w = rep.algebra_dim();
    let mut out = vec![Taylor::zero(&b); w];
    for mono in 0..b.len() {
        let mat = DMatrix::from_fn(d, d, |i, j| m.get(i, j).coeffs()[mono]);
        if mat.iter().all(|&v| v == 0.0) {
            continue;
        }
        let (c, _) = rep.coords(&mat);
        for (k, v) in c.into_iter().enumerate() {
            out[k].coeffs_mut()[mono] = v;
        }
    }
    out
}

/// Least-squares algebra coordinates of a matrix, as a vector.
pub fn coords_vector(rep: &MatrixRep, m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_vec(rep.coords(m).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::presets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-r..r)).collect()
    }

    #[test]
    fn so2_rotation() {
        let p = presets::algebra("so2").unwrap();
        let g = exp(p.rep().unwrap(), &[0.3]);
        let r = DMatrix::from_row_slice(2, 2, &[0.3f64.cos(), -0.3f64.sin(), 0.3f64.sin(), 0.3f64.cos()]);
        assert!((&g - r).amax() < 1e-15);
        let x = log(p.rep().unwrap(), &g).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn exp_log_round_trips_on_presets() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for name in ["so2", "so3", "sl2", "heisenberg", "e2", "sp2", "gl2", "co3"] {
            let p = presets::algebra(name).unwrap();
            let rep = p.rep().unwrap();
            for _ in 0..1000 {
                let x = small(&mut rng, p.algebra.dim(), 0.3);
                let g = exp(rep, &x);
                let minus: Vec<f64> = x.iter().map(|v| -v).collect();
                let id = &g * exp(rep, &minus);
                assert!((id - DMatrix::identity(rep.dim(), rep.dim())).amax() <= 1e-10, "{name}");
                let y = log(rep, &g).unwrap();
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err <= 1e-9, "{name}: {err}");
                assert!(p.relation.residual(&g) <= 1e-8, "{name}");
            }
        }
    }

    #[test]
    fn log_rejects_far_elements() {
        let p = presets::algebra("so2").unwrap();
        let g = exp(p.rep().unwrap(), &[3.0]);
        assert!(matches!(log(p.rep().unwrap(), &g), Err(Error::OutOfBranch(_))));
    }

    #[test]
    fn adjoint_matches_exp_ad_and_is_an_automorphism() {
        let p = presets::algebra("so3").unwrap();
        let rep = p.rep().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = small(&mut rng, 3, 1.0);
            let x = small(&mut rng, 3, 1.0);
            let y = small(&mut rng, 3, 1.0);
            let g = exp(rep, &z);
            let a = ad_action(rep, &g, &x).unwrap();
            let b = exp_ad(&p.algebra, &z) * DVector::from_column_slice(&x);
            assert!(a.iter().zip(b.iter()).all(|(u, v)| (u - v).abs() <= 1e-8));
            let lhs = ad_action(rep, &g, &p.algebra.bracket(&x, &y).unwrap()).unwrap();
            let rhs = p.algebra.bracket(&ad_action(rep, &g, &x).unwrap(), &ad_action(rep, &g, &y).unwrap()).unwrap();
            assert!(lhs.iter().zip(&rhs).all(|(u, v)| (u - v).abs() <= 1e-9));
        }
    }

    #[test]
    fn log_derivatives_of_one_parameter_subgroup() {
        let p = presets::algebra("sl2").unwrap();
        let x = [0.4, -0.2, 0.7];
        let polys: Vec<Polynomial> = x.iter().map(|&c| {
            let mut q = Polynomial::zero(1);
            q.add_term(vec![1], c);
            q
        }).collect();
        let phi = GroupValuedMap::exp_product(1, p.rep().unwrap().clone(), vec![polys]).unwrap();
        for t in [0.0, 0.3, -0.8] {
            let l = phi.left_log_derivative(&[t], &[1.0]).unwrap();
            let r = phi.right_log_derivative(&[t], &[1.0]).unwrap();
            for k in 0..3 {
                assert!((l[k] - x[k]).abs() <= 1e-8 && (r[k] - x[k]).abs() <= 1e-8);
            }
        }
        let sampled = {
            let rep = p.rep().unwrap().clone();
            GroupValuedMap::sampled(1, rep.clone(), move |t| exp(&rep, &x.map(|c| c * t[0])))
        };
        let l = sampled.left_log_derivative(&[0.3], &[1.0]).unwrap();
        assert!((l[2] - 0.7).abs() <= 1e-8);
        let c = GroupValuedMap::from_taylor(2, p.rep().unwrap().clone(), |x| TMat::identity(x[0].basis(), 2));
        assert_eq!(c.left_log_derivative(&[0.1, 0.2], &[1.0, 1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn translations_leave_the_matching_log_derivative_unchanged() {
        let p = presets::algebra("so3").unwrap();
        let rep = p.rep().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let factors = vec![(0..3).map(|_| Polynomial::random(2, 2, 0.5, &mut rng)).collect::<Vec<_>>()];
        let phi = GroupValuedMap::exp_product(2, rep.clone(), factors).unwrap();
        let g0 = exp(&rep, &[0.3, -0.1, 0.5]);
        let left = phi.left_translate(g0.clone());
        let right = phi.right_translate(g0);
        let (x, v) = ([0.1, 0.4], [0.7, -0.2]);
        let a = phi.left_log_derivative(&x, &v).unwrap();
        let b = left.left_log_derivative(&x, &v).unwrap();
        let c = phi.right_log_derivative(&x, &v).unwrap();
        let d = right.right_log_derivative(&x, &v).unwrap();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() <= 1e-9 && (c[k] - d[k]).abs() <= 1e-9);
        }
        // right log derivative is Ad(phi) of the left one
        let ad = ad_action(&rep, &phi.eval(&x), &a).unwrap();
        assert!(ad.iter().zip(&c).all(|(u, v)| (u - v).abs() <= 1e-8));
    }
}
