//! Coordinate charts on matrix groups near the identity.
//!
//! First-kind charts use `a(s) = exp(sum s_i X_i)`; second-kind charts use a
//! product `exp(B_1) .. exp(B_r)` where each `B_t` collects one block of
//! basis indices. All derived quantities are computed in Taylor arithmetic
//! from structure constants, so they are exact up to series truncation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::group;
use crate::lie::presets::GroupRelation;
use crate::lie::{LieAlgebra, MatrixRep};
use crate::taylor::{basis, TMat, Taylor};

#[derive(Clone, Debug, PartialEq)]
pub enum ChartKind {
    First,
    /// Blocks of basis indices, multiplied left to right.
    Second(Vec<Vec<usize>>),
}

#[derive(Clone, Debug)]
pub struct GroupChart {
    algebra: LieAlgebra,
    rep: MatrixRep,
    kind: ChartKind,
    relation: GroupRelation,
    ad: Vec<DMatrix<f64>>,
}

/// `phi(M) = (1 - exp(-M)) / M`, by series on a scaled argument and the
/// doubling rule `phi(2M) = phi(M) (I + exp(-M)) / 2`.
fn phi_series(m: &TMat) -> TMat {
    let b = m.basis().clone();
    let n = m.rows();
    let norm = m.value().norm().max(m.max_abs());
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
    }
    let ms = m.scale(-1.0 / 2f64.powi(s));
    let id = TMat::identity(&b, n);
    let mut term = id.clone();
    let mut acc = id.clone();
    for k in 1..40 {
        term = term.matmul(&ms).scale(1.0 / (k + 1) as f64);
        acc = acc.add(&term);
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    if s == 0 {
        return acc;
    }
    let mut e = ms.exp();
    for _ in 0..s {
        acc = acc.matmul(&id.add(&e)).scale(0.5);
        e = e.matmul(&e);
    }
    acc
}

impl GroupChart {
    pub fn new(algebra: LieAlgebra, rep: MatrixRep, kind: ChartKind, relation: GroupRelation) -> Result<Self> {
        if rep.algebra_dim() != algebra.dim() {
            return Err(Error::DimensionMismatch("chart rep vs algebra".into()));
        }
        if let ChartKind::Second(blocks) = &kind {
            let mut seen: Vec<usize> = blocks.iter().flatten().copied().collect();
            seen.sort_unstable();
            if seen != (0..algebra.dim()).collect::<Vec<_>>() {
                return Err(Error::DimensionMismatch("second-kind blocks must partition the basis".into()));
            }
        }
        let ad = (0..algebra.dim()).map(|i| algebra.ad_basis(i)).collect();
        Ok(GroupChart { algebra, rep, kind, relation, ad })
    }

    pub fn first_kind(algebra: LieAlgebra, rep: MatrixRep, relation: GroupRelation) -> Result<Self> {
        Self::new(algebra, rep, ChartKind::First, relation)
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn rep(&self) -> &MatrixRep {
        &self.rep
    }

    pub fn kind(&self) -> &ChartKind {
        &self.kind
    }

    pub fn relation(&self) -> &GroupRelation {
        &self.relation
    }

    fn blocks(&self) -> Vec<Vec<usize>> {
        match &self.kind {
            ChartKind::First => vec![(0..self.dim()).collect()],
            ChartKind::Second(b) => b.clone(),
        }
    }

    fn block_combination(s: &[Taylor], block: &[usize], mats: &[DMatrix<f64>]) -> TMat {
        let coeffs: Vec<Taylor> = block.iter().map(|&i| s[i].clone()).collect();
        let ms: Vec<DMatrix<f64>> = block.iter().map(|&i| mats[i].clone()).collect();
        TMat::linear_combination(&coeffs, &ms)
    }

    /// `R(a(s))` for a representation given by generator matrices `mats`
    /// (one per basis element of the chart algebra).
    pub fn rep_of(&self, s: &[Taylor], mats: &[DMatrix<f64>]) -> TMat {
        let b = s[0].basis().clone();
        let d = mats[0].nrows();
        let mut acc = TMat::identity(&b, d);
        for block in self.blocks() {
            acc = acc.matmul(&Self::block_combination(s, &block, mats).exp());
        }
        acc
    }

    /// `R(a(s)^{-1})`.
    pub fn rep_of_inverse(&self, s: &[Taylor], mats: &[DMatrix<f64>]) -> TMat {
        let b = s[0].basis().clone();
        let d = mats[0].nrows();
        let mut acc = TMat::identity(&b, d);
        for block in self.blocks().iter().rev() {
            acc = acc.matmul(&Self::block_combination(s, block, mats).scale(-1.0).exp());
        }
        acc
    }

    pub fn element_taylor(&self, s: &[Taylor]) -> TMat {
        self.rep_of(s, self.rep.generators())
    }

    pub fn element(&self, s: &[f64]) -> DMatrix<f64> {
        let mut acc = DMatrix::identity(self.rep.dim(), self.rep.dim());
        for block in self.blocks() {
            let mut x = vec![0.0; self.dim()];
            for &i in &block {
                x[i] = s[i];
            }
            acc *= group::exp(&self.rep, &x);
        }
        acc
    }

    /// `Ad(a(s)^{-1})` on the chart algebra.
    pub fn ad_inverse(&self, s: &[Taylor]) -> TMat {
        self.rep_of_inverse(s, &self.ad)
    }

    /// Columns are the algebra coordinates of `a^{-1} da/ds_j`.
    pub fn left_trivialization(&self, s: &[Taylor]) -> TMat {
        let b = s[0].basis().clone();
        let n = self.dim();
        let blocks = self.blocks();
        let mut out = TMat::zeros(&b, n, n);
        // suffix[t] = Ad(Q_t^{-1}) with Q_t the product of the factors after block t
        let mut suffix = vec![TMat::identity(&b, n); blocks.len()];
        for t in (0..blocks.len().saturating_sub(1)).rev() {
            let e = Self::block_combination(s, &blocks[t + 1], &self.ad).scale(-1.0).exp();
            suffix[t] = suffix[t + 1].matmul(&e);
        }
        for (t, block) in blocks.iter().enumerate() {
            let m = Self::block_combination(s, block, &self.ad);
            let full = suffix[t].matmul(&phi_series(&m));
            for &j in block {
                for i in 0..n {
                    out.set(i, j, full.get(i, j).clone());
                }
            }
        }
        out
    }

    pub fn left_trivialization_at(&self, s: &[f64]) -> DMatrix<f64> {
        self.left_trivialization(&Taylor::point(&basis(self.dim(), 0), s)).value()
    }

    /// Chart coordinates of `target`, by Newton iteration from `guess`.
    pub fn solve(&self, target: &DMatrix<f64>, guess: &[f64]) -> Result<Vec<f64>> {
        let mut s = guess.to_vec();
        for _ in 0..60 {
            let a = self.element(&s);
            let ai = a.try_inverse().ok_or(Error::SingularFrame)?;
            let z = group::log(&self.rep, &(ai * target))?;
            let step = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let l = self.left_trivialization_at(&s);
            let ds = l.lu().solve(&DVector::from_vec(z)).ok_or(Error::SingularFrame)?;
            for (a, d) in s.iter_mut().zip(ds.iter()) {
                *a += d;
            }
            if step < 1e-15 {
                return Ok(s);
            }
        }
        let a = self.element(&s);
        let res = (a - target).amax();
        if res < 1e-12 {
            Ok(s)
        } else {
            Err(Error::NoSolution(res))
        }
    }

    pub fn log_coords(&self, g: &DMatrix<f64>) -> Result<Vec<f64>> {
        let guess = group::log(&self.rep, g)?;
        match self.kind {
            ChartKind::First => Ok(guess),
            ChartKind::Second(_) => self.solve(g, &guess),
        }
    }

    /// Coordinates of `a(s) g`.
    pub fn right_translate(&self, s: &[f64], g: &DMatrix<f64>) -> Result<Vec<f64>> {
        let target = self.element(s) * g;
        let guess = match self.kind {
            ChartKind::First => group::log(&self.rep, &target).unwrap_or_else(|_| s.to_vec()),
            ChartKind::Second(_) => s.to_vec(),
        };
        self.solve(&target, &guess)
    }

    /// Tangent map of right translation by `exp(Z)` from `s` to `s2`.
    pub fn right_translate_tangent(&self, s: &[f64], s2: &[f64], z: &[f64]) -> Result<DMatrix<f64>> {
        let l1 = self.left_trivialization_at(s);
        let l2 = self.left_trivialization_at(s2);
        let minus: Vec<f64> = z.iter().map(|v| -v).collect();
        let ad = group::exp_ad(&self.algebra, &minus);
        l2.lu().solve(&(ad * l1)).ok_or(Error::SingularFrame)
    }
}
