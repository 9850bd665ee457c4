//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Taylor`] value is a polynomial in `n` displacement variables `h`
//! truncated at total degree `r`. Evaluating any smooth expression on
//! `x0 + h` in this arithmetic yields its Taylor expansion at `x0`, so
//! derivatives of composite forms come out exact up to roundoff. The same
//! type doubles as the truncated polynomial algebra used for jets.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use once_cell::sync::Lazy;

/// Monomials in `nvars` variables of total degree at most `order`, in
/// graded order so that lower-order bases are prefixes of higher ones.
#[derive(Debug)]
pub struct MonomialBasis {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    /// For each variable: (source index, target index in the order-1 basis, factor).
    derivs: Vec<Vec<(u32, u32, f64)>>,
}

static BASES: Lazy<Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared monomial basis for `nvars` variables truncated at `order`.
pub fn basis(nvars: usize, order: usize) -> Arc<MonomialBasis> {
    if let Some(b) = BASES.lock().unwrap().get(&(nvars, order)) {
        return b.clone();
    }
    let b = Arc::new(MonomialBasis::build(nvars, order));
    BASES
        .lock()
        .unwrap()
        .entry((nvars, order))
        .or_insert(b)
        .clone()
}

fn exponents_of_degree(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    if nvars == 0 {
        return if degree == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in exponents_of_degree(nvars - 1, degree - first) {
            let mut e = vec![first as u8];
            e.append(&mut rest);
            out.push(e);
        }
    }
    out
}

impl MonomialBasis {
    fn build(nvars: usize, order: usize) -> Self {
        let mut exps = Vec::new();
        let mut degrees = Vec::new();
        for d in 0..=order {
            for e in exponents_of_degree(nvars, d) {
                exps.push(e);
                degrees.push(d);
            }
        }
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut products = Vec::new();
        for i in 0..exps.len() {
            for j in 0..exps.len() {
                if degrees[i] + degrees[j] > order {
                    continue;
                }
                let sum: Vec<u8> = exps[i].iter().zip(&exps[j]).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        let mut derivs = vec![Vec::new(); nvars];
        if order > 0 {
            // Graded order makes the order-1 basis a prefix with identical indices.
            for (src, e) in exps.iter().enumerate() {
                for (v, dv) in derivs.iter_mut().enumerate() {
                    if e[v] > 0 {
                        let mut lower = e.clone();
                        lower[v] -= 1;
                        dv.push((src as u32, index[&lower] as u32, e[v] as f64));
                    }
                }
            }
        }
        MonomialBasis { nvars, order, exps, degrees, index, products, derivs }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Number of monomials of degree at most `d` (a prefix length).
    pub fn prefix_len(&self, d: usize) -> usize {
        self.degrees.iter().take_while(|&&x| x <= d).count()
    }
}

/// Truncated Taylor polynomial over a shared [`MonomialBasis`].
#[derive(Clone, Debug)]
pub struct Taylor {
    basis: Arc<MonomialBasis>,
    c: Vec<f64>,
}

impl PartialEq for Taylor {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c && Arc::ptr_eq(&self.basis, &other.basis)
    }
}

fn mul_acc(acc: &mut [f64], a: &[f64], b: &[f64], products: &[(u32, u32, u32)]) {
    for &(i, j, k) in products {
        let (x, y) = (a[i as usize], b[j as usize]);
        if x != 0.0 && y != 0.0 {
            acc[k as usize] += x * y;
        }
    }
}

impl Taylor {
    pub fn zero(basis: &Arc<MonomialBasis>) -> Self {
        Taylor { basis: basis.clone(), c: vec![0.0; basis.len()] }
    }

    pub fn constant(basis: &Arc<MonomialBasis>, v: f64) -> Self {
        let mut t = Self::zero(basis);
        t.c[0] = v;
        t
    }

    /// The coordinate function `x0 + h_var`.
    pub fn variable(basis: &Arc<MonomialBasis>, var: usize, x0: f64) -> Self {
        let mut t = Self::constant(basis, x0);
        if basis.order > 0 {
            let mut e = vec![0u8; basis.nvars];
            e[var] = 1;
            t.c[basis.index[&e]] = 1.0;
        }
        t
    }

    /// Expansion variables `x0 + h` for every coordinate.
    pub fn point(basis: &Arc<MonomialBasis>, x0: &[f64]) -> Vec<Taylor> {
        x0.iter().enumerate().map(|(i, &v)| Self::variable(basis, i, v)).collect()
    }

    pub fn from_coeffs(basis: &Arc<MonomialBasis>, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), basis.len());
        Taylor { basis: basis.clone(), c }
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn order(&self) -> usize {
        self.basis.order
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Taylor { basis: self.basis.clone(), c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add_scaled(&mut self, other: &Taylor, s: f64) {
        for (a, b) in self.c.iter_mut().zip(&other.c) {
            *a += s * b;
        }
    }

    pub fn mul_add_into(&self, other: &Taylor, acc: &mut Taylor) {
        mul_acc(&mut acc.c, &self.c, &other.c, &self.basis.products);
    }

    /// `acc += s * self * other`.
    pub fn mul_add_scaled_into(&self, other: &Taylor, s: f64, acc: &mut Taylor) {
        for &(i, j, k) in &self.basis.products {
            let (x, y) = (self.c[i as usize], other.c[j as usize]);
            if x != 0.0 && y != 0.0 {
                acc.c[k as usize] += s * x * y;
            }
        }
    }

    /// Partial derivative in variable `var`; the result has order one less.
    pub fn derivative(&self, var: usize) -> Taylor {
        assert!(self.basis.order > 0, "derivative of an order-0 expansion");
        let lower = basis(self.basis.nvars, self.basis.order - 1);
        let mut c = vec![0.0; lower.len()];
        for &(src, dst, f) in &self.basis.derivs[var] {
            c[dst as usize] += f * self.c[src as usize];
        }
        Taylor { basis: lower, c }
    }

    /// Drop all terms of degree above `order`.
    pub fn truncate(&self, order: usize) -> Taylor {
        if order >= self.basis.order {
            return self.clone();
        }
        let lower = basis(self.basis.nvars, order);
        Taylor { basis: lower.clone(), c: self.c[..lower.len()].to_vec() }
    }

    /// Homogeneous part of the given degree.
    pub fn homogeneous(&self, degree: usize) -> Taylor {
        let mut out = Taylor::zero(&self.basis);
        for (i, &v) in self.c.iter().enumerate() {
            if self.basis.degrees[i] == degree {
                out.c[i] = v;
            }
        }
        out
    }

    /// Evaluate the polynomial at displacement `h`.
    pub fn eval(&self, h: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, &coef) in self.c.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            let mut m = coef;
            for (v, &e) in self.basis.exps[i].iter().enumerate() {
                m *= h[v].powi(e as i32);
            }
            total += m;
        }
        total
    }

    /// Substitute `inner[v]` for the variable `h_v`. Every inner series must
    /// have zero constant term; the result lives in the inner basis,
    /// truncated at the smaller of the two orders.
    pub fn compose(&self, inner: &[Taylor]) -> Taylor {
        assert_eq!(inner.len(), self.basis.nvars);
        let target = inner
            .first()
            .map(|t| t.basis.clone())
            .expect("compose needs at least one inner series");
        let order = self.basis.order.min(target.order);
        let tb = basis(target.nvars, order);
        let inner: Vec<Taylor> = inner.iter().map(|t| t.truncate(order)).collect();
        for t in &inner {
            debug_assert!(t.c[0].abs() == 0.0, "inner series must vanish at 0");
        }
        let mono_count = self.basis.prefix_len(order);
        let mut values: Vec<Taylor> = Vec::with_capacity(mono_count);
        values.push(Taylor::constant(&tb, 1.0));
        let mut out = Taylor::zero(&tb);
        out.c[0] = self.c[0];
        for i in 1..mono_count {
            let e = &self.basis.exps[i];
            let v = e.iter().position(|&x| x > 0).unwrap();
            let mut lower = e.clone();
            lower[v] -= 1;
            let li = self.basis.index[&lower];
            let val = &values[li] * &inner[v];
            if self.c[i] != 0.0 {
                out.add_scaled(&val, self.c[i]);
            }
            values.push(val);
        }
        out
    }

    fn series(&self, derivs: &[f64]) -> Taylor {
        // f(c0 + N) = sum_j f^(j)(c0) N^j / j!, N nilpotent of index order+1.
        let mut nil = self.clone();
        nil.c[0] = 0.0;
        let mut out = Taylor::constant(&self.basis, derivs[0]);
        let mut power = Taylor::constant(&self.basis, 1.0);
        let mut fact = 1.0;
        for (j, &d) in derivs.iter().enumerate().skip(1) {
            power = &power * &nil;
            fact *= j as f64;
            out.add_scaled(&power, d / fact);
        }
        out
    }

    pub fn recip(&self) -> Taylor {
        let x = self.c[0];
        let derivs: Vec<f64> = (0..=self.basis.order)
            .scan(1.0 / x, |acc, j| {
                let cur = *acc;
                *acc *= -((j + 1) as f64) / x;
                Some(cur)
            })
            .collect();
        self.series(&derivs)
    }

    pub fn exp(&self) -> Taylor {
        let e = self.c[0].exp();
        self.series(&vec![e; self.basis.order + 1])
    }

    pub fn sin(&self) -> Taylor {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.basis.order).map(|j| cyc[j % 4]).collect();
        self.series(&d)
    }

    pub fn cos(&self) -> Taylor {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.basis.order).map(|j| cyc[j % 4]).collect();
        self.series(&d)
    }
}

impl<'a> Add<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        let mut out = self.clone();
        out.add_scaled(rhs, 1.0);
        out
    }
}

impl<'a> Sub<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        let mut out = self.clone();
        out.add_scaled(rhs, -1.0);
        out
    }
}

impl<'a> Mul<&'a Taylor> for &'a Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let mut out = Taylor::zero(&self.basis);
        mul_acc(&mut out.c, &self.c, &rhs.c, &self.basis.products);
        out
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

/// Dense matrix with [`Taylor`] entries, row-major.
#[derive(Clone, Debug)]
pub struct TMat {
    rows: usize,
    cols: usize,
    basis: Arc<MonomialBasis>,
    data: Vec<Taylor>,
}

impl TMat {
    pub fn zeros(basis: &Arc<MonomialBasis>, rows: usize, cols: usize) -> Self {
        TMat { rows, cols, basis: basis.clone(), data: vec![Taylor::zero(basis); rows * cols] }
    }

    pub fn identity(basis: &Arc<MonomialBasis>, n: usize) -> Self {
        let mut m = Self::zeros(basis, n, n);
        for i in 0..n {
            m.data[i * n + i] = Taylor::constant(basis, 1.0);
        }
        m
    }

    pub fn from_matrix(basis: &Arc<MonomialBasis>, a: &DMatrix<f64>) -> Self {
        let mut m = Self::zeros(basis, a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m.data[i * a.ncols() + j] = Taylor::constant(basis, a[(i, j)]);
            }
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, data: Vec<Taylor>) -> Self {
        assert_eq!(data.len(), rows * cols);
        let basis = data[0].basis.clone();
        TMat { rows, cols, basis, data }
    }

    /// `sum_i coeffs[i] * mats[i]` with Taylor coefficients and constant matrices.
    pub fn linear_combination(coeffs: &[Taylor], mats: &[DMatrix<f64>]) -> Self {
        let basis = coeffs[0].basis.clone();
        let (r, c) = mats[0].shape();
        let mut m = Self::zeros(&basis, r, c);
        for (t, a) in coeffs.iter().zip(mats) {
            for i in 0..r {
                for j in 0..c {
                    let v = a[(i, j)];
                    if v != 0.0 {
                        m.data[i * c + j].add_scaled(t, v);
                    }
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn basis(&self) -> &Arc<MonomialBasis> {
        &self.basis
    }

    pub fn get(&self, i: usize, j: usize) -> &Taylor {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Taylor) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Taylor] {
        &self.data
    }

    pub fn value(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).value())
    }

    pub fn map(&self, f: impl Fn(&Taylor) -> Taylor) -> TMat {
        let data: Vec<Taylor> = self.data.iter().map(f).collect();
        let basis = data.first().map(|t| t.basis.clone()).unwrap_or_else(|| self.basis.clone());
        TMat { rows: self.rows, cols: self.cols, basis, data }
    }

    pub fn scale(&self, s: f64) -> TMat {
        self.map(|t| t.scale(s))
    }

    pub fn add(&self, other: &TMat) -> TMat {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            a.add_scaled(b, 1.0);
        }
        out
    }

    pub fn sub(&self, other: &TMat) -> TMat {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            a.add_scaled(b, -1.0);
        }
        out
    }

    pub fn transpose(&self) -> TMat {
        let mut out = TMat::zeros(&self.basis, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        out
    }

    pub fn matmul(&self, other: &TMat) -> TMat {
        assert_eq!(self.cols, other.rows);
        let mut out = TMat::zeros(&self.basis, self.rows, other.cols);
        let prods = &self.basis.products;
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other.data[k * other.cols + j];
                    mul_acc(&mut out.data[i * other.cols + j].c, &a.c, &b.c, prods);
                }
            }
        }
        out
    }

    /// Left multiplication by a constant matrix.
    pub fn premul_const(&self, a: &DMatrix<f64>) -> TMat {
        assert_eq!(a.ncols(), self.rows);
        let mut out = TMat::zeros(&self.basis, a.nrows(), self.cols);
        for i in 0..a.nrows() {
            for k in 0..self.rows {
                let s = a[(i, k)];
                if s == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    out.data[i * self.cols + j].add_scaled(&self.data[k * self.cols + j], s);
                }
            }
        }
        out
    }

    /// Matrix times a vector of Taylor entries.
    pub fn apply(&self, v: &[Taylor]) -> Vec<Taylor> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Taylor::zero(&self.basis);
                for (j, vj) in v.iter().enumerate() {
                    self.get(i, j).mul_add_into(vj, &mut acc);
                }
                acc
            })
            .collect()
    }

    pub fn derivative(&self, var: usize) -> TMat {
        self.map(|t| t.derivative(var))
    }

    pub fn truncate(&self, order: usize) -> TMat {
        self.map(|t| t.truncate(order))
    }

    /// Inverse via the Neumann series around the constant part.
    pub fn inverse(&self) -> Option<TMat> {
        assert_eq!(self.rows, self.cols);
        let a0inv = self.value().try_inverse()?;
        let mut nil = self.clone();
        for t in nil.data.iter_mut() {
            t.c[0] = 0.0;
        }
        // A^{-1} = sum_j (-A0^{-1} N)^j A0^{-1}
        let step = nil.premul_const(&a0inv).scale(-1.0);
        let a0inv_t = TMat::from_matrix(&self.basis, &a0inv);
        let mut term = a0inv_t.clone();
        let mut total = a0inv_t;
        for _ in 0..self.basis.order {
            term = step.matmul(&term);
            total = total.add(&term);
        }
        Some(total)
    }

    /// Matrix exponential by scaling and squaring with a degree-18 Taylor
    /// polynomial on the scaled matrix.
    pub fn exp(&self) -> TMat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let norm = self.value().iter().fold(0.0f64, |m, x| m + x.abs());
        let mut s = 0;
        while norm / 2f64.powi(s) > 0.5 {
            s += 1;
        }
        let a = self.scale(1.0 / 2f64.powi(s));
        let mut result = TMat::identity(&self.basis, n);
        let mut term = TMat::identity(&self.basis, n);
        for j in 1..=18 {
            term = term.matmul(&a).scale(1.0 / j as f64);
            result = result.add(&term);
        }
        for _ in 0..s {
            result = result.matmul(&result);
        }
        result
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_prefix_property() {
        let b2 = basis(3, 2);
        let b1 = basis(3, 1);
        for i in 0..b1.len() {
            assert_eq!(b1.exponents(i), b2.exponents(i));
        }
        assert_eq!(b2.len(), 10);
        assert_eq!(b2.prefix_len(1), 4);
    }

    #[test]
    fn product_and_derivative_of_polynomials() {
        let b = basis(2, 3);
        let x = Taylor::variable(&b, 0, 1.0);
        let y = Taylor::variable(&b, 1, 2.0);
        // f = x^2 y at (1,2): f = 2, df/dx = 4, df/dy = 1, d2f/dxdy = 2
        let f = &(&x * &x) * &y;
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.derivative(0).value(), 4.0);
        assert_eq!(f.derivative(1).value(), 1.0);
        assert_eq!(f.derivative(0).derivative(1).value(), 2.0);
        assert_eq!(f.derivative(0).derivative(0).derivative(1).value(), 2.0);
    }

    #[test]
    fn mixed_partials_commute_exactly() {
        let b = basis(3, 3);
        let p = Taylor::point(&b, &[0.3, -0.7, 1.1]);
        let f = &(&p[0] * &p[1]).sin() * &p[2].exp();
        let a = f.derivative(0).derivative(2);
        let c = f.derivative(2).derivative(0);
        assert_eq!(a.coeffs(), c.coeffs());
    }

    #[test]
    fn recip_exp_sin_cos_match_closed_forms() {
        let b = basis(1, 4);
        let x = Taylor::variable(&b, 0, 0.4);
        let r = x.recip();
        assert!((r.value() - 2.5).abs() < 1e-15);
        assert!((r.derivative(0).value() + 1.0 / 0.16).abs() < 1e-12);
        let s = x.sin();
        let c = x.cos();
        let one = &(&s * &s) + &(&c * &c);
        assert!((one.value() - 1.0).abs() < 1e-15);
        for k in 1..b.len() {
            assert!(one.coeffs()[k].abs() < 1e-14);
        }
        let e = x.exp();
        assert!((e.derivative(0).derivative(0).value() - 0.4f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn compose_single_variable() {
        // (x + a x^2) o (x + b x^2) = x + (a + b) x^2 mod x^3
        let b = basis(1, 2);
        let x = Taylor::variable(&b, 0, 0.0);
        let x2 = &x * &x;
        let mut f = x.clone();
        f.add_scaled(&x2, 0.5);
        let mut g = x.clone();
        g.add_scaled(&x2, -1.5);
        let h = f.compose(&[g]);
        assert_eq!(h.coeffs(), &[0.0, 1.0, -1.0]);
    }

    #[test]
    fn matrix_inverse_and_exp() {
        let b = basis(2, 2);
        let p = Taylor::point(&b, &[0.2, -0.1]);
        let one = Taylor::constant(&b, 1.0);
        let m = TMat::from_entries(2, 2, vec![one.clone(), p[0].clone(), p[1].clone(), &one + &p[0]]);
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let t = id.get(i, j);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((t.value() - expect).abs() < 1e-14);
                assert!(t.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
            }
        }
        // exp(t J) for J the rotation generator is a rotation by t
        let zero = Taylor::zero(&b);
        let a = TMat::from_entries(2, 2, vec![zero.clone(), -&p[0], p[0].clone(), zero]);
        let r = a.exp();
        assert!((r.get(0, 0).value() - 0.2f64.cos()).abs() < 1e-15);
        assert!((r.get(1, 0).derivative(0).value() - 0.2f64.cos()).abs() < 1e-14);
    }
}
