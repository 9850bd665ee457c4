//! Forms expanded at a point: Taylor coefficients over strictly increasing
//! multi-indices, with the determinant evaluation convention
//! `dx^I(v_1..v_p) = det[v_a(I_b)]`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use once_cell::sync::Lazy;

use crate::lie::multilinear::{permutation_sign, permutations};
use crate::taylor::{basis, MonomialBasis, TMat, Taylor};

/// Strictly increasing multi-indices of length `p` from `0..n`, lex order.
#[derive(Debug)]
pub struct MultiIndexTable {
    pub n: usize,
    pub p: usize,
    pub list: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl MultiIndexTable {
    pub fn rank(&self, idx: &[usize]) -> Option<usize> {
        self.index.get(idx).copied()
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }
}

fn combos(n: usize, p: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == p {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        combos(n, p, i + 1, cur, out);
        cur.pop();
    }
}

static TABLES: Lazy<Mutex<HashMap<(usize, usize), Arc<MultiIndexTable>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

pub fn multi_indices(n: usize, p: usize) -> Arc<MultiIndexTable> {
    if let Some(t) = TABLES.lock().unwrap().get(&(n, p)) {
        return t.clone();
    }
    let mut list = Vec::new();
    if p <= n {
        combos(n, p, 0, &mut Vec::new(), &mut list);
    }
    let index = list.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let t = Arc::new(MultiIndexTable { n, p, list, index });
    TABLES.lock().unwrap().entry((n, p)).or_insert(t).clone()
}

/// `(rank I, rank J, rank I∪J, sign)` for disjoint pairs of sizes `p`, `q`.
type Shuffles = Vec<(usize, usize, usize, f64)>;

static SHUFFLES: Lazy<Mutex<HashMap<(usize, usize, usize), Arc<Shuffles>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn shuffles(n: usize, p: usize, q: usize) -> Arc<Shuffles> {
    if let Some(t) = SHUFFLES.lock().unwrap().get(&(n, p, q)) {
        return t.clone();
    }
    let (ti, tj, tk) = (multi_indices(n, p), multi_indices(n, q), multi_indices(n, p + q));
    let mut out = Vec::new();
    for (a, i) in ti.list.iter().enumerate() {
        for (b, j) in tj.list.iter().enumerate() {
            if i.iter().any(|x| j.contains(x)) {
                continue;
            }
            let mut cat = i.clone();
            cat.extend(j);
            let sign = permutation_sign(&cat);
            cat.sort_unstable();
            out.push((a, b, tk.rank(&cat).unwrap(), sign));
        }
    }
    let t = Arc::new(out);
    SHUFFLES.lock().unwrap().entry((n, p, q)).or_insert(t).clone()
}

/// A vector-valued p-form expanded to a fixed Taylor order at a point.
#[derive(Clone, Debug)]
pub struct LocalForm {
    degree: usize,
    chart_dim: usize,
    target_dim: usize,
    basis: Arc<MonomialBasis>,
    table: Arc<MultiIndexTable>,
    coeffs: Vec<Taylor>,
}

impl LocalForm {
    pub fn zero(chart_dim: usize, degree: usize, target_dim: usize, basis: &Arc<MonomialBasis>) -> Self {
        let table = multi_indices(chart_dim, degree);
        let coeffs = vec![Taylor::zero(basis); table.len() * target_dim];
        LocalForm { degree, chart_dim, target_dim, basis: basis.clone(), table, coeffs }
    }

    /// Zero-form (function) with the given component expansions.
    pub fn function(chart_dim: usize, values: Vec<Taylor>) -> Self {
        let b = values[0].basis().clone();
        let mut f = Self::zero(chart_dim, 0, values.len(), &b);
        f.coeffs = values;
        f
    }

    /// One-form `sum_j M[k][j] dx^j` from a Taylor matrix of shape `w x n`.
    pub fn one_form(m: &TMat) -> Self {
        let (w, n) = (m.rows(), m.cols());
        let mut f = Self::zero(n, 1, w, m.basis());
        for j in 0..n {
            for k in 0..w {
                f.coeffs[j * w + k] = m.get(k, j).clone();
            }
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn chart_dim(&self) -> usize {
        self.chart_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn table(&self) -> &Arc<MultiIndexTable> {
        &self.table
    }

    pub fn coeff(&self, mi: usize, k: usize) -> &Taylor {
        &self.coeffs[mi * self.target_dim + k]
    }

    pub fn coeff_mut(&mut self, mi: usize, k: usize) -> &mut Taylor {
        &mut self.coeffs[mi * self.target_dim + k]
    }

    pub fn coeffs(&self) -> &[Taylor] {
        &self.coeffs
    }

    /// Coefficients of a 1-form as a `w x n` Taylor matrix.
    pub fn as_matrix(&self) -> TMat {
        assert_eq!(self.degree, 1);
        let (w, n) = (self.target_dim, self.chart_dim);
        let mut data = Vec::with_capacity(w * n);
        for k in 0..w {
            for j in 0..n {
                data.push(self.coeffs[j * w + k].clone());
            }
        }
        if data.is_empty() {
            return TMat::zeros(&self.basis, w, n);
        }
        TMat::from_entries(w, n, data)
    }

    /// Point values of the 1-form coefficients as a `w x n` matrix.
    pub fn value_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.degree, 1);
        let w = self.target_dim;
        DMatrix::from_fn(w, self.chart_dim, |k, j| self.coeffs[j * w + k].value())
    }

    /// Evaluate on tangent vectors at the expansion point.
    pub fn eval(&self, vectors: &[&[f64]]) -> Vec<f64> {
        self.eval_at(None, vectors)
    }

    /// Evaluate at displacement `h` from the expansion point (`None` for 0).
    pub fn eval_at(&self, h: Option<&[f64]>, vectors: &[&[f64]]) -> Vec<f64> {
        assert_eq!(vectors.len(), self.degree);
        let w = self.target_dim;
        let mut out = vec![0.0; w];
        let perms = permutations(self.degree);
        for (mi, idx) in self.table.list.iter().enumerate() {
            let mut det = 0.0;
            for p in &perms {
                let mut t = permutation_sign(p);
                for (a, &b) in p.iter().enumerate() {
                    t *= vectors[a][idx[b]];
                }
                det += t;
            }
            if det == 0.0 {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                let c = &self.coeffs[mi * w + k];
                *o += det * h.map_or_else(|| c.value(), |h| c.eval(h));
            }
        }
        out
    }

    /// Largest absolute point value over all coefficients (the sup over basis tuples).
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.value().abs()))
    }

    /// Largest absolute Taylor coefficient of any component.
    pub fn max_abs_all(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn truncate(&self, order: usize) -> LocalForm {
        if order >= self.order() {
            return self.clone();
        }
        let coeffs: Vec<Taylor> = self.coeffs.iter().map(|c| c.truncate(order)).collect();
        LocalForm { basis: basis(self.basis.nvars(), order), coeffs, table: self.table.clone(), ..*self }
    }

    fn same_shape(&self, other: &LocalForm) {
        assert_eq!(
            (self.degree, self.chart_dim, self.target_dim),
            (other.degree, other.chart_dim, other.target_dim),
            "form shapes differ"
        );
    }

    pub fn add(&self, other: &LocalForm) -> LocalForm {
        self.same_shape(other);
        let order = self.order().min(other.order());
        let mut out = self.truncate(order);
        let o = other.truncate(order);
        for (a, b) in out.coeffs.iter_mut().zip(&o.coeffs) {
            a.add_scaled(b, 1.0);
        }
        out
    }

    pub fn sub(&self, other: &LocalForm) -> LocalForm {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> LocalForm {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c = c.scale(s));
        out
    }

    /// Exterior derivative; drops one Taylor order.
    pub fn d(&self) -> LocalForm {
        let lower = basis(self.basis.nvars(), self.order().saturating_sub(1));
        let mut out = LocalForm::zero(self.chart_dim, self.degree + 1, self.target_dim, &lower);
        if self.order() == 0 {
            panic!("exterior derivative needs a Taylor expansion of order at least 1");
        }
        let w = self.target_dim;
        let derivs: Vec<Vec<Taylor>> = (0..self.chart_dim)
            .map(|j| self.coeffs.iter().map(|c| c.derivative(j)).collect())
            .collect();
        for (ki, k) in out.table.list.clone().iter().enumerate() {
            for a in 0..k.len() {
                let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = k.clone();
                let j = rest.remove(a);
                let ri = self.table.rank(&rest).unwrap();
                for t in 0..w {
                    out.coeffs[ki * w + t].add_scaled(&derivs[j][ri * w + t], sign);
                }
            }
        }
        out
    }

    /// Wedge through a bilinear map given as `(k, i, j, c)` entries:
    /// `(phi ^ psi)_K = sum sign(I,J) c phi_{I,i} psi_{J,j}`, the coefficient form
    /// of the `1/(p!q!)` shuffle sum.
    pub fn wedge(&self, other: &LocalForm, tensor: &[(usize, usize, usize, f64)], out_dim: usize) -> LocalForm {
        assert_eq!(self.chart_dim, other.chart_dim);
        let order = self.order().min(other.order());
        let a = self.truncate(order);
        let b = other.truncate(order);
        let n = self.chart_dim;
        let mut out = LocalForm::zero(n, self.degree + other.degree, out_dim, &a.basis);
        if self.degree + other.degree > n {
            return out;
        }
        let (wa, wb) = (self.target_dim, other.target_dim);
        for &(ri, rj, rk, sign) in shuffles(n, self.degree, other.degree).iter() {
            for &(k, i, j, c) in tensor {
                let x = &a.coeffs[ri * wa + i];
                let y = &b.coeffs[rj * wb + j];
                if x.is_zero() || y.is_zero() {
                    continue;
                }
                let acc = &mut out.coeffs[rk * out_dim + k];
                x.mul_add_scaled_into(y, sign * c, acc);
            }
        }
        out
    }

    /// Wedge with the tensor product of targets, `k = i * w_b + j`.
    pub fn tensor_wedge(&self, other: &LocalForm) -> LocalForm {
        let (wa, wb) = (self.target_dim, other.target_dim);
        let tensor: Vec<(usize, usize, usize, f64)> =
            (0..wa).flat_map(|i| (0..wb).map(move |j| (i * wb + j, i, j, 1.0))).collect();
        self.wedge(other, &tensor, wa * wb)
    }

    /// Apply a constant linear map to the target.
    pub fn map_target(&self, m: &DMatrix<f64>) -> LocalForm {
        assert_eq!(m.ncols(), self.target_dim);
        let w2 = m.nrows();
        let mut out = LocalForm::zero(self.chart_dim, self.degree, w2, &self.basis);
        for mi in 0..self.table.len() {
            for k2 in 0..w2 {
                let acc = &mut out.coeffs[mi * w2 + k2];
                for k in 0..self.target_dim {
                    let s = m[(k2, k)];
                    if s != 0.0 {
                        acc.add_scaled(&self.coeffs[mi * self.target_dim + k], s);
                    }
                }
            }
        }
        out
    }

    /// Apply a point-dependent linear map to the target.
    pub fn twist(&self, m: &TMat) -> LocalForm {
        assert_eq!(m.cols(), self.target_dim);
        let order = self.order().min(m.basis().order());
        let a = self.truncate(order);
        let m = m.truncate(order);
        let w2 = m.rows();
        let mut out = LocalForm::zero(self.chart_dim, self.degree, w2, &a.basis);
        for mi in 0..self.table.len() {
            for k2 in 0..w2 {
                for k in 0..self.target_dim {
                    let c = &a.coeffs[mi * self.target_dim + k];
                    if c.is_zero() {
                        continue;
                    }
                    m.get(k2, k).mul_add_into(c, &mut out.coeffs[mi * w2 + k2]);
                }
            }
        }
        out
    }

    /// Multiply every coefficient by a scalar function.
    pub fn mul_function(&self, f: &Taylor) -> LocalForm {
        let order = self.order().min(f.order());
        let mut out = self.truncate(order);
        let f = f.truncate(order);
        for c in out.coeffs.iter_mut() {
            *c = &f * c;
        }
        out
    }

    /// Interior product with a vector field given by Taylor components.
    pub fn interior(&self, v: &[Taylor]) -> LocalForm {
        assert!(self.degree > 0);
        assert_eq!(v.len(), self.chart_dim);
        let order = self.order().min(v[0].order());
        let a = self.truncate(order);
        let w = self.target_dim;
        let mut out = LocalForm::zero(self.chart_dim, self.degree - 1, w, &a.basis);
        for (ri, idx) in out.table.list.clone().iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                if idx.contains(&j) {
                    continue;
                }
                let vj = vj.truncate(order);
                // position of j in the sorted (j, idx)
                let pos = idx.iter().filter(|&&x| x < j).count();
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let mut full = idx.clone();
                full.insert(pos, j);
                let fi = self.table.rank(&full).unwrap();
                for t in 0..w {
                    vj.mul_add_scaled_into(&a.coeffs[fi * w + t], sign, &mut out.coeffs[ri * w + t]);
                }
            }
        }
        out
    }

    /// Pull back along a map `F` whose components are Taylor expansions in
    /// the new variables, one order higher than the result. `self` must be
    /// expanded at `F(0)`.
    pub fn pullback(&self, f: &[Taylor]) -> LocalForm {
        assert_eq!(f.len(), self.chart_dim);
        let new_basis = f[0].basis().clone();
        let n_new = new_basis.nvars();
        let order = self.order().min(new_basis.order().saturating_sub(1));
        let inner: Vec<Taylor> = f
            .iter()
            .map(|t| {
                let mut t = t.truncate(order);
                t.coeffs_mut()[0] = 0.0;
                t
            })
            .collect();
        let jac: Vec<Vec<Taylor>> =
            f.iter().map(|t| (0..n_new).map(|j| t.derivative(j).truncate(order)).collect()).collect();
        let target = basis(n_new, order);
        let w = self.target_dim;
        let mut out = LocalForm::zero(n_new, self.degree, w, &target);
        let composed: Vec<Taylor> = if self.chart_dim == 0 {
            self.coeffs.iter().map(|c| Taylor::constant(&target, c.value())).collect()
        } else {
            self.coeffs.iter().map(|c| c.truncate(order).compose(&inner)).collect()
        };
        let perms = permutations(self.degree);
        let new_table = out.table.clone();
        for (ri, old) in self.table.list.iter().enumerate() {
            if (0..w).all(|k| composed[ri * w + k].is_zero()) {
                continue;
            }
            for (li, new) in new_table.list.iter().enumerate() {
                let mut minor = Taylor::zero(&target);
                for p in &perms {
                    let mut term = Taylor::constant(&target, permutation_sign(p));
                    for (a, &b) in p.iter().enumerate() {
                        term = &term * &jac[old[a]][new[b]];
                    }
                    minor.add_scaled(&term, 1.0);
                }
                if minor.is_zero() {
                    continue;
                }
                for k in 0..w {
                    composed[ri * w + k].mul_add_into(&minor, &mut out.coeffs[li * w + k]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_dy() -> LocalForm {
        // omega = x dy on R^2, expanded at (0.5, 0.2)
        let b = basis(2, 2);
        let p = Taylor::point(&b, &[0.5, 0.2]);
        let mut f = LocalForm::zero(2, 1, 1, &b);
        *f.coeff_mut(1, 0) = p[0].clone();
        f
    }

    #[test]
    fn d_of_x_dy_is_area_form() {
        let d = x_dy().d();
        assert_eq!(d.eval(&[&[1.0, 0.0], &[0.0, 1.0]]), vec![1.0]);
        assert_eq!(d.eval(&[&[0.0, 1.0], &[1.0, 0.0]]), vec![-1.0]);
    }

    #[test]
    fn d_squared_is_zero_exactly() {
        let b = basis(3, 3);
        let p = Taylor::point(&b, &[0.1, 0.4, -0.3]);
        let mut f = LocalForm::zero(3, 1, 2, &b);
        *f.coeff_mut(0, 0) = &(&p[1] * &p[2]) * &p[0];
        *f.coeff_mut(1, 1) = (&p[0] * &p[2]).sin();
        *f.coeff_mut(2, 0) = p[1].exp();
        assert_eq!(f.d().d().max_abs_all(), 0.0);
    }

    #[test]
    fn wedge_of_one_forms_two_term_formula() {
        let b = basis(2, 0);
        let mut phi = LocalForm::zero(2, 1, 1, &b);
        *phi.coeff_mut(0, 0) = Taylor::constant(&b, 2.0);
        *phi.coeff_mut(1, 0) = Taylor::constant(&b, 1.0);
        let mut psi = LocalForm::zero(2, 1, 1, &b);
        *psi.coeff_mut(1, 0) = Taylor::constant(&b, 3.0);
        let w = phi.wedge(&psi, &[(0, 0, 0, 1.0)], 1);
        let (x, y) = ([0.3, -1.0], [0.7, 0.4]);
        let expect = (2.0 * x[0] + x[1]) * 3.0 * y[1] - (2.0 * y[0] + y[1]) * 3.0 * x[1];
        assert!((w.eval(&[&x, &y])[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn interior_product_matches_evaluation() {
        let d = x_dy().d();
        let b = d.basis().clone();
        let v = vec![Taylor::constant(&b, 0.3), Taylor::constant(&b, 2.0)];
        let i = d.interior(&v);
        let direct = d.eval(&[&[0.3, 2.0], &[1.0, -1.0]])[0];
        assert!((i.eval(&[&[1.0, -1.0]])[0] - direct).abs() < 1e-15);
    }

    #[test]
    fn pullback_along_polar_coordinates() {
        // dx ^ dy pulled back along (r, t) -> (r cos t, r sin t) is r dr ^ dt
        let b0 = basis(2, 0);
        let mut area = LocalForm::zero(2, 2, 1, &b0);
        *area.coeff_mut(0, 0) = Taylor::constant(&b0, 1.0);
        let b = basis(2, 1);
        let p = Taylor::point(&b, &[1.5, 0.4]);
        let f = vec![&p[0] * &p[1].cos(), &p[0] * &p[1].sin()];
        let pulled = area.pullback(&f);
        assert!((pulled.eval(&[&[1.0, 0.0], &[0.0, 1.0]])[0] - 1.5).abs() < 1e-14);
    }
}
