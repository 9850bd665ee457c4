//! Truncated jets at 0 of local diffeomorphisms and vector fields of `R^n`,
//! the truncated algebra `a_k = V ⊕ g ⊕ g^(1) ⊕ .. ⊕ g^(k-1)` and the flat
//! model Cartan connection on `V x G_k`.
//!
//! Jets are polynomial maps of degree `<= k` stored as [`Taylor`] series
//! over `basis(n, k)`; every operation drops terms of degree above `k`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::cartan::{self, CartanConnection, LocalModel};
use crate::chart::{ChartKind, GroupChart};
use crate::error::{Error, Result};
use crate::lie::presets::GroupRelation;
use crate::lie::{LieAlgebra, MatrixRep, SubalgebraEmbedding};
use crate::linalg;
use crate::prolongation::{self, LinearLieAlgebra, SymTensorSpace};
use crate::taylor::{basis, MonomialBasis, TMat, Taylor};

/// Largest jet order accepted by the algebra and connection builders.
pub const MAX_ORDER: usize = 3;
/// Largest `dim V` accepted by the algebra and connection builders.
pub const MAX_DIM: usize = 3;
pub const JACOBI_TOL: f64 = 1e-12;
/// Relative tolerance for brackets landing in the truncated algebra.
pub const SPAN_TOL: f64 = 1e-9;

fn pad(t: &Taylor, b: &Arc<MonomialBasis>) -> Taylor {
    let mut c = t.coeffs().to_vec();
    c.resize(b.len(), 0.0);
    Taylor::from_coeffs(b, c)
}

fn linear_block(n: usize, k: usize, comps: &[Taylor]) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::zeros(n, n);
    }
    let b = basis(n, k);
    DMatrix::from_fn(n, n, |i, j| {
        let mut e = vec![0u8; n];
        e[j] = 1;
        comps[i].coeffs()[b.index_of(&e).unwrap()]
    })
}

fn linear_comps(a: &DMatrix<f64>, k: usize) -> Vec<Taylor> {
    let n = a.nrows();
    let b = basis(n, k);
    let x = Taylor::point(&b, &vec![0.0; n]);
    (0..n)
        .map(|i| {
            let mut t = Taylor::zero(&b);
            for j in 0..n {
                t.add_scaled(&x[j], a[(i, j)]);
            }
            t
        })
        .collect()
}

fn eval_comps(comps: &[Taylor], x: &[f64]) -> Vec<f64> {
    comps.iter().map(|c| c.eval(x)).collect()
}

/// `(Df) . X`: directional derivative of each component of `f` along `X`.
fn lie_derivative(f: &[Taylor], x: &[Taylor]) -> Vec<Taylor> {
    let b = x[0].basis().clone();
    if b.order() == 0 {
        return vec![Taylor::zero(&b); f.len()];
    }
    f.iter()
        .map(|fi| {
            let mut acc = Taylor::zero(&b);
            for (j, xj) in x.iter().enumerate() {
                pad(&fi.derivative(j), &b).mul_add_into(xj, &mut acc);
            }
            acc
        })
        .collect()
}

/// `j^k_0 phi` for a local diffeomorphism fixing 0.
#[derive(Clone, Debug, PartialEq)]
pub struct JetElement {
    n: usize,
    k: usize,
    comps: Vec<Taylor>,
}

/// `j^k_0 X` for a polynomial vector field, possibly with a constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct JetVectorField {
    n: usize,
    k: usize,
    comps: Vec<Taylor>,
}

impl JetElement {
    /// Components over `basis(n, k)`; the constant term must vanish and the
    /// linear part must be invertible.
    pub fn new(n: usize, k: usize, comps: Vec<Taylor>) -> Result<Self> {
        check_shape(n, k, &comps)?;
        if k == 0 {
            return Err(Error::DimensionMismatch("jet order must be at least 1".into()));
        }
        if comps.iter().any(|c| c.coeffs()[0] != 0.0) {
            return Err(Error::DimensionMismatch("jet of a map fixing 0 has no constant term".into()));
        }
        let el = JetElement { n, k, comps };
        if el.linear_part().determinant().abs() < 1e-14 {
            return Err(Error::SingularLinearPart);
        }
        Ok(el)
    }

    pub fn identity(n: usize, k: usize) -> Self {
        Self::linear(&DMatrix::identity(n, n), k).expect("identity is invertible")
    }

    pub fn linear(a: &DMatrix<f64>, k: usize) -> Result<Self> {
        Self::new(a.nrows(), k, linear_comps(a, k))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn comps(&self) -> &[Taylor] {
        &self.comps
    }

    pub fn linear_part(&self) -> DMatrix<f64> {
        linear_block(self.n, self.k, &self.comps)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        eval_comps(&self.comps, x)
    }

    pub fn max_abs_diff(&self, other: &JetElement) -> f64 {
        max_diff(&self.comps, &other.comps)
    }
}

impl JetVectorField {
    pub fn new(n: usize, k: usize, comps: Vec<Taylor>) -> Result<Self> {
        check_shape(n, k, &comps)?;
        Ok(JetVectorField { n, k, comps })
    }

    pub fn zero(n: usize, k: usize) -> Self {
        let b = basis(n, k);
        JetVectorField { n, k, comps: vec![Taylor::zero(&b); n] }
    }

    pub fn linear(a: &DMatrix<f64>, k: usize) -> Self {
        JetVectorField { n: a.nrows(), k, comps: linear_comps(a, k) }
    }

    pub fn constant(v: &[f64], k: usize) -> Self {
        let b = basis(v.len(), k);
        JetVectorField { n: v.len(), k, comps: v.iter().map(|&c| Taylor::constant(&b, c)).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn comps(&self) -> &[Taylor] {
        &self.comps
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.comps.iter().all(|c| c.coeffs()[0] == 0.0)
    }

    pub fn linear_part(&self) -> DMatrix<f64> {
        linear_block(self.n, self.k, &self.comps)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        eval_comps(&self.comps, x)
    }

    pub fn scale(&self, s: f64) -> Self {
        JetVectorField { n: self.n, k: self.k, comps: self.comps.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        let mut comps = self.comps.clone();
        for (a, b) in comps.iter_mut().zip(&other.comps) {
            a.add_scaled(b, s);
        }
        JetVectorField { n: self.n, k: self.k, comps }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn max_abs_diff(&self, other: &JetVectorField) -> f64 {
        max_diff(&self.comps, &other.comps)
    }

    /// The same polynomial field as a jet of order `k`, truncated or padded
    /// with zeros.
    pub fn with_order(&self, k: usize) -> Self {
        let b = basis(self.n, k);
        let keep = b.len().min(self.comps.first().map_or(0, |c| c.coeffs().len()));
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let mut v = c.coeffs()[..keep].to_vec();
                v.resize(b.len(), 0.0);
                Taylor::from_coeffs(&b, v)
            })
            .collect();
        JetVectorField { n: self.n, k, comps }
    }
}

/// A jet with dyadic coefficients in `[-1, 1]` and a (possibly row-swapped)
/// unitriangular linear part, so that composition and inversion are exact
/// in floating point for small `n` and `k`.
pub fn random_dyadic_element(n: usize, k: usize, rng: &mut impl rand::Rng) -> JetElement {
    let dyadic = |rng: &mut dyn rand::RngCore| rand::Rng::gen_range(rng, -8i32..=8) as f64 / 8.0;
    let mut a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else if j > i { dyadic(rng) } else { 0.0 });
    if n > 1 && rng.gen_bool(0.5) {
        a.swap_rows(0, n - 1);
    }
    let b = basis(n, k);
    let comps = (0..n)
        .map(|i| {
            let mut c: Vec<f64> = (0..b.len()).map(|_| dyadic(rng)).collect();
            c[0] = 0.0;
            for j in 0..n {
                let mut e = vec![0u8; n];
                e[j] = 1;
                c[b.index_of(&e).unwrap()] = a[(i, j)];
            }
            Taylor::from_coeffs(&b, c)
        })
        .collect();
    JetElement::new(n, k, comps).expect("unitriangular linear part")
}

fn check_shape(n: usize, k: usize, comps: &[Taylor]) -> Result<()> {
    if comps.len() != n || comps.iter().any(|c| c.basis().nvars() != n || c.order() != k) {
        return Err(Error::DimensionMismatch(format!("jet components must be {n} series of order {k} in {n} variables")));
    }
    Ok(())
}

fn max_diff(a: &[Taylor], b: &[Taylor]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.coeffs().iter().zip(y.coeffs()).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

fn same_shape(n1: usize, k1: usize, n2: usize, k2: usize) -> Result<()> {
    if n1 != n2 || k1 != k2 {
        return Err(Error::DimensionMismatch(format!("jets of shape ({n1}, {k1}) and ({n2}, {k2})")));
    }
    Ok(())
}

/// `j(phi o psi)`, truncated.
pub fn jet_compose(a: &JetElement, b: &JetElement) -> Result<JetElement> {
    same_shape(a.n, a.k, b.n, b.k)?;
    let comps = a.comps.iter().map(|c| c.compose(&b.comps)).collect();
    Ok(JetElement { n: a.n, k: a.k, comps })
}

/// `j(phi^{-1})`, solved one degree at a time.
pub fn jet_invert(a: &JetElement) -> Result<JetElement> {
    let ainv = a.linear_part().try_inverse().ok_or(Error::SingularLinearPart)?;
    let id = JetElement::identity(a.n, a.k);
    let mut b = JetElement::linear(&ainv, a.k)?;
    for _ in 1..a.k {
        let err = jet_compose(a, &b)?;
        let diff: Vec<Taylor> = err
            .comps
            .iter()
            .zip(&id.comps)
            .map(|(e, i)| {
                let mut d = e.clone();
                d.add_scaled(i, -1.0);
                d
            })
            .collect();
        for (r, c) in b.comps.iter_mut().enumerate() {
            for (j, d) in diff.iter().enumerate() {
                if ainv[(r, j)] != 0.0 {
                    c.add_scaled(d, -ainv[(r, j)]);
                }
            }
        }
    }
    Ok(b)
}

/// `-[X, Y]` where `[X, Y] = DY.X - DX.Y` is the vector-field bracket.
pub fn jet_bracket(x: &JetVectorField, y: &JetVectorField) -> Result<JetVectorField> {
    same_shape(x.n, x.k, y.n, y.k)?;
    let dxy = lie_derivative(&x.comps, &y.comps);
    let dyx = lie_derivative(&y.comps, &x.comps);
    let comps = dxy
        .into_iter()
        .zip(dyx)
        .map(|(mut a, b)| {
            a.add_scaled(&b, -1.0);
            a
        })
        .collect();
    Ok(JetVectorField { n: x.n, k: x.k, comps })
}

/// Jet of the time-one flow of `X`. The flow of `X / 2^s` is summed as
/// `sum_m (X.D)^m id / m!` and then squared `s` times by composition; the
/// sum is finite when the linear part of `X` vanishes.
pub fn jet_exp(x: &JetVectorField) -> Result<JetElement> {
    if !x.vanishes_at_zero() {
        return Err(Error::DimensionMismatch("exp needs a field vanishing at 0".into()));
    }
    let norm = x.linear_part().norm();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let xs = x.scale(1.0 / 2f64.powi(s));
    let id = JetElement::identity(x.n, x.k);
    let mut term = id.comps.clone();
    let mut acc = id.comps.clone();
    for m in 1..=40 {
        term = lie_derivative(&term, &xs.comps).into_iter().map(|t| t.scale(1.0 / m as f64)).collect();
        if term.iter().all(|t| t.is_zero()) {
            break;
        }
        for (a, t) in acc.iter_mut().zip(&term) {
            a.add_scaled(t, 1.0);
        }
        if term.iter().all(|t| t.max_abs() < 1e-18) {
            break;
        }
    }
    let mut e = JetElement { n: x.n, k: x.k, comps: acc };
    for _ in 0..s {
        e = jet_compose(&e, &e)?;
    }
    Ok(e)
}

/// Pullback `phi^* X = (T phi)^{-1} o X o phi`, computed as
/// `(D(phi^{-1}) . X) o phi`.
pub fn jet_ad(a: &JetElement, x: &JetVectorField) -> Result<JetVectorField> {
    same_shape(a.n, a.k, x.n, x.k)?;
    let inv = jet_invert(a)?;
    let w = lie_derivative(&inv.comps, &x.comps);
    let comps = w.iter().map(|c| c.compose(&a.comps)).collect();
    Ok(JetVectorField { n: x.n, k: x.k, comps })
}

/// Homogeneous vector field of degree `d` for a symmetric tensor in
/// `S^d V* ⊗ V`: `X_i(x) = sum_K t[i, K] x^K / K!`.
pub fn field_of_tensor(n: usize, k: usize, d: usize, t: &[f64]) -> JetVectorField {
    let space = SymTensorSpace::new(n, d);
    let b = basis(n, k);
    let mut comps = vec![Taylor::zero(&b); n];
    if d <= k {
        for (m, ms) in space.multisets().iter().enumerate() {
            let mut e = vec![0u8; n];
            for &j in ms {
                e[j] += 1;
            }
            let fact: f64 = e.iter().map(|&c| (1..=c as u32).product::<u32>() as f64).product();
            let idx = b.index_of(&e).unwrap();
            for (i, c) in comps.iter_mut().enumerate() {
                c.coeffs_mut()[idx] += t[i * space.len() + m] / fact;
            }
        }
    }
    JetVectorField { n, k, comps }
}

/// `a_k` with basis fields in the order `g, g^(1), .., g^(k-1), V`.
#[derive(Clone, Debug)]
pub struct TruncatedAlgebra {
    pub algebra: LieAlgebra,
    pub fields: Vec<JetVectorField>,
    /// Dimensions of `g^(0), .., g^(k-1)`.
    pub degree_dims: Vec<usize>,
    pub n: usize,
    pub k: usize,
    pub jacobi_residual: f64,
    /// Largest distance of a truncated bracket from the span of the basis.
    pub span_residual: f64,
}

impl TruncatedAlgebra {
    pub fn isotropy_dim(&self) -> usize {
        self.degree_dims.iter().sum()
    }

    /// Index of the `i`-th translation generator.
    pub fn v_index(&self, i: usize) -> usize {
        self.isotropy_dim() + i
    }
}

fn check_desk_scale(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > MAX_ORDER || n > MAX_DIM {
        return Err(Error::DimensionOverflow(format!("jet order {k} with dim V = {n}; limits are order 1..={MAX_ORDER}, dim <= {MAX_DIM}")));
    }
    Ok(())
}

/// `a_k = V ⊕ g ⊕ g^(1) ⊕ .. ⊕ g^(k-1)` with [`jet_bracket`]; brackets are
/// truncated at polynomial degree `k`.
pub fn g_infinity_truncated(g: &LinearLieAlgebra, k: usize) -> Result<TruncatedAlgebra> {
    let n = g.n();
    check_desk_scale(n, k)?;
    let mut fields: Vec<JetVectorField> = g.matrices().iter().map(|m| JetVectorField::linear(m, k)).collect();
    let mut names: Vec<String> = g.algebra().names().to_vec();
    let mut degree_dims = vec![g.dim()];
    if k >= 2 {
        let table = prolongation::prolong(g, k - 1)?;
        for j in 1..k {
            let bj = &table.bases[j];
            for (c, col) in bj.column_iter().enumerate() {
                fields.push(field_of_tensor(n, k, j + 1, col.as_slice()));
                names.push(format!("p{j}_{}", c + 1));
            }
            degree_dims.push(bj.ncols());
        }
    }
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        fields.push(JetVectorField::constant(&v, k));
        names.push(format!("v{}", i + 1));
    }
    let d = fields.len();
    let flat = |f: &JetVectorField| DVector::from_iterator(f.comps.iter().map(|c| c.coeffs().len()).sum(), f.comps.iter().flat_map(|c| c.coeffs().iter().copied()));
    let m = DMatrix::from_columns(&fields.iter().map(flat).collect::<Vec<_>>());
    let mut c = vec![0.0; d * d * d];
    let mut span_residual = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            let br = jet_bracket(&fields[i], &fields[j])?;
            let (x, r) = linalg::lstsq(&m, &flat(&br));
            span_residual = span_residual.max(r / br.max_abs().max(1.0));
            for t in 0..d {
                let v = if x[t].abs() < 1e-13 { 0.0 } else { x[t] };
                c[(t * d + i) * d + j] = v;
                c[(t * d + j) * d + i] = -v;
            }
        }
    }
    if span_residual > SPAN_TOL {
        return Err(Error::TruncationNotClosed(span_residual));
    }
    let jr = jacobi_residual(d, &c);
    if jr > JACOBI_TOL {
        return Err(Error::TruncationNotClosed(jr));
    }
    let algebra = LieAlgebra::new(d, c, names)?;
    Ok(TruncatedAlgebra { algebra, fields, degree_dims, n, k, jacobi_residual: jr, span_residual })
}

fn jacobi_residual(d: usize, c: &[f64]) -> f64 {
    let br = |x: &[f64], y: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yj == 0.0 {
                    continue;
                }
                for (t, o) in out.iter_mut().enumerate() {
                    *o += c[(t * d + i) * d + j] * xi * yj;
                }
            }
        }
        out
    };
    let e = |i: usize| {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    };
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i + 1..d {
            let bij = br(&e(i), &e(j));
            for k in j + 1..d {
                let a = br(&bij, &e(k));
                let b = br(&br(&e(j), &e(k)), &e(i));
                let cc = br(&br(&e(k), &e(i)), &e(j));
                for t in 0..d {
                    worst = worst.max((a[t] + b[t] + cc[t]).abs());
                }
            }
        }
    }
    worst
}

/// The flat model: the left Maurer-Cartan form of `exp(x.v) a(s)` where
/// `a(s)` runs over the group of `g ⊕ .. ⊕ g^(k-1)` in second-kind
/// coordinates, highest degree first.
pub fn flat_model_connection(g: &LinearLieAlgebra, k: usize, samples_count: usize, seed: u64) -> Result<(CartanConnection, TruncatedAlgebra)> {
    let ak = g_infinity_truncated(g, k)?;
    let n = ak.n;
    let iso = ak.isotropy_dim();
    let sub_idx: Vec<usize> = (0..iso).collect();
    let emb = SubalgebraEmbedding::from_indices(&ak.algebra, &sub_idx)?;
    let sub = emb.sub().clone();
    let mats: Vec<DMatrix<f64>> = sub_idx.iter().map(|&i| ak.algebra.ad_basis(i)).collect();
    let mut blocks = Vec::new();
    let mut start = 0;
    for &dd in &ak.degree_dims {
        blocks.push((start..start + dd).collect::<Vec<_>>());
        start += dd;
    }
    blocks.reverse();
    blocks.retain(|b| !b.is_empty());
    let rep = if iso > 0 { MatrixRep::new_unchecked(mats) } else { MatrixRep::new_unchecked(vec![]) };
    let chart = GroupChart::new(sub, rep, ChartKind::Second(blocks), GroupRelation::None)?;
    let model = Arc::new(LocalModel::principal(n, chart, ak.algebra.clone(), emb)?);
    let d = ak.algebra.dim();
    let ad_v: Vec<DMatrix<f64>> = (0..n).map(|i| ak.algebra.ad_basis(iso + i)).collect();
    // left Maurer-Cartan form of x -> exp(x.v): sum_j (-ad_{x.v})^j / (j+1)!,
    // a finite sum since ad_v lowers the degree
    let field = Arc::new(move |x: &[Taylor]| {
        let b = x[0].basis().clone();
        let mneg = TMat::linear_combination(x, &ad_v).scale(-1.0);
        let mut term = TMat::identity(&b, d);
        let mut acc = term.clone();
        for j in 1..=k + 1 {
            term = term.matmul(&mneg).scale(1.0 / (j + 1) as f64);
            acc = acc.add(&term);
        }
        let mut a = TMat::zeros(&b, d, n);
        for r in 0..d {
            for c in 0..n {
                a.set(r, c, acc.get(r, iso + c).clone());
            }
        }
        a
    });
    let conn = cartan::make_principal_cartan_with(model.clone(), field)?;
    let samples = model.samples(samples_count, seed);
    Ok((CartanConnection::new(conn, &samples)?, ak))
}
