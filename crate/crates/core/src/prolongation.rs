//! Spencer calculus for linear Lie algebras `g ⊂ gl(V)`: prolongations,
//! the alternation operator, torsion complements, the torsion function of a
//! local `G`-structure and the canonical connections built from it.
//!
//! Indexing: `g^(0) = g ⊂ V* ⊗ V` and `g^(k) ⊂ S^{k+1} V* ⊗ V`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::cartan::{self, CartanConnection, GeneralizedCartanConnection, LocalModel};
use crate::chart::GroupChart;
use crate::error::{Error, Result};
use crate::forms::literal::PolyMatrix;
use crate::forms::Form;
use crate::group;
use crate::lie::presets::{self, GroupRelation};
use crate::lie::{LieAlgebra, MatrixRep, SubalgebraEmbedding};
use crate::linalg::{self, RANK_TOL};
use crate::taylor::{TMat, Taylor};

pub const CLOSURE_TOL: f64 = 1e-10;
/// Membership and symmetry tolerance on prolongation bases.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Leakage tolerance for `G`-invariance of complements.
pub const INVARIANCE_TOL: f64 = 1e-6;
pub const MAX_K: usize = 4;

/// A Lie subalgebra of `gl(V)` given by basis matrices.
#[derive(Clone, Debug)]
pub struct LinearLieAlgebra {
    name: String,
    n: usize,
    matrices: Vec<DMatrix<f64>>,
    algebra: LieAlgebra,
    relation: GroupRelation,
}

impl LinearLieAlgebra {
    pub fn new(name: &str, n: usize, matrices: Vec<DMatrix<f64>>, relation: GroupRelation) -> Result<Self> {
        if matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(Error::DimensionMismatch("basis matrices must be n x n".into()));
        }
        let algebra = if matrices.is_empty() {
            LieAlgebra::abelian(0)
        } else {
            let names = (0..matrices.len()).map(|i| format!("X{}", i + 1)).collect();
            LieAlgebra::from_matrices(&matrices, names)?
        };
        let g = LinearLieAlgebra { name: name.into(), n, matrices, algebra, relation };
        let r = g.closure_residual();
        if r > CLOSURE_TOL {
            return Err(Error::InvalidAlgebra(format!("not closed under commutator (residual {r:.3e})")));
        }
        Ok(g)
    }

    /// A preset algebra acting on its defining representation.
    pub fn preset(name: &str) -> Result<Self> {
        let p = presets::algebra(name)?;
        let rep = p.rep()?;
        let mut g = Self::new(name, rep.dim(), rep.generators().to_vec(), p.relation.clone())?;
        g.algebra = p.algebra.clone();
        Ok(g)
    }

    /// `g = {0}` in `gl(n)`.
    pub fn trivial(n: usize) -> Self {
        LinearLieAlgebra { name: format!("trivial{n}"), n, matrices: vec![], algebra: LieAlgebra::abelian(0), relation: GroupRelation::None }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn relation(&self) -> &GroupRelation {
        &self.relation
    }

    pub fn rep(&self) -> MatrixRep {
        MatrixRep::new_unchecked(self.matrices.clone())
    }

    /// Basis as columns in `gl(V)` coordinates `i * n + j`.
    pub fn gl_coords(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n * n, self.dim(), |r, a| self.matrices[a][(r / n, r % n)])
    }

    /// Least-squares coordinates of `m` and the distance of `m` from `g`.
    pub fn coords(&self, m: &DMatrix<f64>) -> (Vec<f64>, f64) {
        if self.dim() == 0 {
            return (vec![], m.amax());
        }
        let b = DVector::from_iterator(self.n * self.n, m.transpose().iter().copied());
        let (x, r) = linalg::lstsq(&self.gl_coords(), &b);
        (x.iter().copied().collect(), r)
    }

    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in &self.matrices {
            for b in &self.matrices {
                worst = worst.max(self.coords(&(a * b - b * a)).1);
            }
        }
        worst
    }
}

/// Coordinates on `S^d V* ⊗ V`: one value per output index and sorted
/// multi-index, at `i * len + m`.
#[derive(Clone, Debug)]
pub struct SymTensorSpace {
    n: usize,
    degree: usize,
    multisets: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl SymTensorSpace {
    pub fn new(n: usize, degree: usize) -> Self {
        let mut multisets = Vec::new();
        fn rec(n: usize, d: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == d {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(n, d, i, cur, out);
                cur.pop();
            }
        }
        rec(n, degree, 0, &mut Vec::new(), &mut multisets);
        let index = multisets.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        SymTensorSpace { n, degree, multisets, index }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.multisets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multisets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n * self.len()
    }

    pub fn multisets(&self) -> &[Vec<usize>] {
        &self.multisets
    }

    /// Coordinate of output `i` at the (unsorted) multi-index `idx`.
    pub fn coord(&self, i: usize, idx: &[usize]) -> usize {
        let mut s = idx.to_vec();
        s.sort_unstable();
        i * self.len() + self.index[&s]
    }
}

/// `A^(1) = {T in S^{d+1} V* ⊗ V : T(v, ..) in A for every v}` for a subspace
/// `A ⊂ S^d V* ⊗ V` given by basis columns. Returns an orthonormal basis and
/// the singular gap ratio of the constraint matrix.
pub fn first_prolongation(n: usize, degree: usize, a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let src = SymTensorSpace::new(n, degree);
    let dst = SymTensorSpace::new(n, degree + 1);
    let q = linalg::orthogonal_complement(a, RANK_TOL);
    slice_constraints(&src, &dst, &q, n)
}

fn slice_constraints(src: &SymTensorSpace, dst: &SymTensorSpace, q: &DMatrix<f64>, n: usize) -> (DMatrix<f64>, f64) {
    if q.ncols() == 0 {
        return (DMatrix::identity(dst.dim(), dst.dim()), f64::INFINITY);
    }
    let c = q.ncols();
    let mut rows = DMatrix::zeros(n * c, dst.dim());
    for j in 0..n {
        for r in 0..c {
            for i in 0..n {
                for (m, ms) in src.multisets.iter().enumerate() {
                    let w = q[(i * src.len() + m, r)];
                    if w != 0.0 {
                        let mut idx = ms.clone();
                        idx.push(j);
                        rows[(j * c + r, dst.coord(i, &idx))] += w;
                    }
                }
            }
        }
    }
    (linalg::nullspace(&rows, RANK_TOL), linalg::spectral_gap(&rows, RANK_TOL))
}

/// `g^(k)` straight from the definition: symmetric `T` with every slice
/// `T(., v_1, .., v_k)` in `g`.
pub fn direct_prolongation(g: &LinearLieAlgebra, k: usize) -> (DMatrix<f64>, f64) {
    let n = g.n();
    let q = linalg::orthogonal_complement(&g.gl_coords(), RANK_TOL);
    let src = SymTensorSpace::new(n, k);
    let dst = SymTensorSpace::new(n, k + 1);
    if q.ncols() == 0 {
        return (DMatrix::identity(dst.dim(), dst.dim()), f64::INFINITY);
    }
    let c = q.ncols();
    let mut rows = DMatrix::zeros(src.len() * c, dst.dim());
    for (kk, ks) in src.multisets.iter().enumerate() {
        for r in 0..c {
            for i in 0..n {
                for j in 0..n {
                    let w = q[(i * n + j, r)];
                    if w != 0.0 {
                        let mut idx = ks.clone();
                        idx.push(j);
                        rows[(kk * c + r, dst.coord(i, &idx))] += w;
                    }
                }
            }
        }
    }
    (linalg::nullspace(&rows, RANK_TOL), linalg::spectral_gap(&rows, RANK_TOL))
}

/// Largest distance of a slice `T(., e_K)` of a basis element from `g`.
pub fn membership_residual(g: &LinearLieAlgebra, k: usize, basis: &DMatrix<f64>) -> f64 {
    let n = g.n();
    let src = SymTensorSpace::new(n, k);
    let dst = SymTensorSpace::new(n, k + 1);
    let mut worst = 0.0f64;
    for col in basis.column_iter() {
        for ks in &src.multisets {
            let m = DMatrix::from_fn(n, n, |i, j| {
                let mut idx = ks.clone();
                idx.push(j);
                col[dst.coord(i, &idx)]
            });
            worst = worst.max(g.coords(&m).1);
        }
    }
    worst
}

/// `dim g^(k)` by brute force: all of `V ⊗ (V*)^{⊗(k+1)}` as full tensors,
/// with symmetry and slice membership imposed as linear constraints.
pub fn brute_force_dim(g: &LinearLieAlgebra, k: usize) -> usize {
    let n = g.n();
    let slots = k + 1;
    let t = Tensor::zeros(n, slots);
    let idxs = t.indices();
    let total = t.data.len();
    let q = linalg::orthogonal_complement(&g.gl_coords(), RANK_TOL);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for idx in &idxs {
            for s in 0..slots - 1 {
                let mut sw = idx.clone();
                sw.swap(s, s + 1);
                let mut r = vec![0.0; total];
                r[t.at(i, idx)] += 1.0;
                r[t.at(i, &sw)] -= 1.0;
                rows.push(r);
            }
        }
    }
    let rest = Tensor::zeros(n, k);
    for ks in rest.indices() {
        for c in 0..q.ncols() {
            let mut r = vec![0.0; total];
            for i in 0..n {
                for j in 0..n {
                    let mut idx = vec![j];
                    idx.extend(&ks);
                    r[t.at(i, &idx)] += q[(i * n + j, c)];
                }
            }
            rows.push(r);
        }
    }
    let m = DMatrix::from_fn(rows.len(), total, |r, c| rows[r][c]);
    total - linalg::rank(&m, RANK_TOL)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeVerdict {
    Type1,
    Type2,
    /// `g^(1)` and `g^(2)` nonzero up to the given order.
    HigherOrInfinite(usize),
}

impl fmt::Display for TypeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeVerdict::Type1 => write!(f, "TYPE1"),
            TypeVerdict::Type2 => write!(f, "TYPE2"),
            TypeVerdict::HigherOrInfinite(k) => write!(f, "HIGHER_OR_INFINITE({k})"),
        }
    }
}

impl Serialize for TypeVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProlongationTable {
    pub n: usize,
    pub k_max: usize,
    /// `dims[k] = dim g^(k)`, `k = 0..=k_max`.
    pub dims: Vec<usize>,
    /// Singular gap ratio of each constraint matrix.
    pub gaps: Vec<f64>,
    pub membership_residual: f64,
    pub verdict: TypeVerdict,
    #[serde(skip)]
    pub bases: Vec<DMatrix<f64>>,
}

/// `g^(1), .., g^(k_max)` by repeated first prolongation.
pub fn prolong(g: &LinearLieAlgebra, k_max: usize) -> Result<ProlongationTable> {
    if k_max == 0 || k_max > MAX_K {
        return Err(Error::DimensionOverflow(format!("k_max must be in 1..={MAX_K}")));
    }
    let n = g.n();
    let mut bases = vec![linalg::column_space(&g.gl_coords(), RANK_TOL)];
    let mut gaps = vec![f64::INFINITY];
    for k in 1..=k_max {
        let (b, gap) = first_prolongation(n, k, &bases[k - 1]);
        bases.push(b);
        gaps.push(gap);
    }
    let dims: Vec<usize> = bases.iter().map(|b| b.ncols()).collect();
    let membership = (1..=k_max).map(|k| membership_residual(g, k, &bases[k])).fold(0.0, f64::max);
    let verdict = if dims[1] == 0 {
        TypeVerdict::Type1
    } else if k_max >= 2 && dims[2] == 0 {
        TypeVerdict::Type2
    } else {
        TypeVerdict::HigherOrInfinite(k_max)
    };
    Ok(ProlongationTable { n, k_max, dims, gaps, membership_residual: membership, verdict, bases })
}

/// Distance between the spans of `g^(k)` computed directly and iteratively.
pub fn span_equality_residual(g: &LinearLieAlgebra, table: &ProlongationTable, k: usize) -> f64 {
    let (direct, _) = direct_prolongation(g, k);
    let it = &table.bases[k];
    if direct.ncols() == 0 && it.ncols() == 0 {
        return 0.0;
    }
    linalg::span_distance(&direct, it, RANK_TOL)
}

/// A tensor in `V ⊗ (V*)^{⊗ slots}`, stored at `i * n^slots + flat(idx)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub n: usize,
    pub slots: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, slots: usize) -> Self {
        Tensor { n, slots, data: vec![0.0; n.pow(slots as u32 + 1)] }
    }

    fn at(&self, i: usize, idx: &[usize]) -> usize {
        idx.iter().fold(i, |acc, &b| acc * self.n + b)
    }

    pub fn get(&self, i: usize, idx: &[usize]) -> f64 {
        self.data[self.at(i, idx)]
    }

    pub fn set(&mut self, i: usize, idx: &[usize], v: f64) {
        let k = self.at(i, idx);
        self.data[k] = v;
    }

    fn indices(&self) -> Vec<Vec<usize>> {
        let total = self.n.pow(self.slots as u32);
        (0..total)
            .map(|mut f| {
                let mut idx = vec![0; self.slots];
                for s in (0..self.slots).rev() {
                    idx[s] = f % self.n;
                    f /= self.n;
                }
                idx
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Alternation `V ⊗ V* ⊗ Λ^q V* -> V ⊗ Λ^{q+1} V*`,
/// `(δT)(v_0..v_q) = sum_i (-1)^i T(v_i; v_0..^i..v_q)`.
pub fn spencer_delta(t: &Tensor) -> Result<Tensor> {
    if t.slots < 1 {
        return Err(Error::DimensionMismatch("alternation needs at least one covector slot".into()));
    }
    let mut out = Tensor::zeros(t.n, t.slots);
    for idx in out.indices() {
        for i in 0..t.n {
            let mut v = 0.0;
            for k in 0..idx.len() {
                let mut args = vec![idx[k]];
                args.extend(idx.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &b)| b));
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                v += sign * t.get(i, &args);
            }
            out.set(i, &idx, v);
        }
    }
    Ok(out)
}

/// Pairs `a < b`, indexing `Λ^2 V*`.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).flat_map(move |b| (b + 1..n).map(move |c| (a, b, c)))).collect()
}

/// Matrix of `δ: g ⊗ V* -> V ⊗ Λ^2 V*`, `δl(u, w) = l(w) u - l(u) w`.
/// Columns `alpha * n + c` stand for `l(e_c) = X_alpha`; rows `i * P + p`.
pub fn delta_matrix(g: &LinearLieAlgebra) -> DMatrix<f64> {
    let n = g.n();
    let ps = pairs(n);
    let np = ps.len();
    let mut d = DMatrix::zeros(n * np, g.dim() * n);
    for (alpha, x) in g.matrices().iter().enumerate() {
        for c in 0..n {
            for (p, &(a, b)) in ps.iter().enumerate() {
                for i in 0..n {
                    let mut v = 0.0;
                    if c == b {
                        v += x[(i, a)];
                    }
                    if c == a {
                        v -= x[(i, b)];
                    }
                    d[(i * np + p, alpha * n + c)] = v;
                }
            }
        }
    }
    d
}

/// `V ⊗ Λ^2 V* = δ(g ⊗ V*) ⊕ 𝔡` with `𝔡` the orthogonal complement.
#[derive(Clone, Debug)]
pub struct TorsionComplement {
    pub delta: DMatrix<f64>,
    /// Orthonormal basis of `δ(g ⊗ V*)`.
    pub image: DMatrix<f64>,
    /// Orthonormal basis of `𝔡`.
    pub basis: DMatrix<f64>,
    /// `dim ker(δ|g ⊗ V*)`.
    pub kernel_dim: usize,
    /// Largest component of `a · d` outside `𝔡` over sampled `a` in `G`.
    pub leakage: f64,
}

impl TorsionComplement {
    /// Orthogonal projection onto `δ(g ⊗ V*)`.
    pub fn project_image(&self, t: &DVector<f64>) -> DVector<f64> {
        &self.image * (self.image.transpose() * t)
    }
}

/// Action of `a` in `GL(V)` on `V ⊗ Λ^2 V*`, `(a t)(u, w) = a t(a^{-1} u, a^{-1} w)`.
pub fn act_on_torsion(a: &DMatrix<f64>, t: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    let ai = a.clone().try_inverse().ok_or(Error::SingularFrame)?;
    let ps = pairs(n);
    let np = ps.len();
    let mut out = DVector::zeros(n * np);
    for (q, &(c, d)) in ps.iter().enumerate() {
        let mut v = DVector::zeros(n);
        for (p, &(a0, b0)) in ps.iter().enumerate() {
            let w = ai[(a0, c)] * ai[(b0, d)] - ai[(b0, c)] * ai[(a0, d)];
            if w != 0.0 {
                for i in 0..n {
                    v[i] += w * t[i * np + p];
                }
            }
        }
        let av = a * v;
        for i in 0..n {
            out[i * np + q] = av[i];
        }
    }
    Ok(out)
}

fn group_samples(g: &LinearLieAlgebra, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rep = g.rep();
    (0..count)
        .map(|_| {
            let z: Vec<f64> = (0..g.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            group::exp(&rep, &z)
        })
        .collect()
}

pub fn torsion_complement(g: &LinearLieAlgebra, strict: bool) -> Result<TorsionComplement> {
    let delta = delta_matrix(g);
    let image = linalg::column_space(&delta, RANK_TOL);
    let basis = linalg::orthogonal_complement(&image, RANK_TOL);
    let kernel_dim = delta.ncols() - image.ncols();
    let mut leakage = 0.0f64;
    if g.dim() > 0 {
        for a in group_samples(g, 8, 0xD) {
            for col in basis.column_iter() {
                let moved = act_on_torsion(&a, &col.into_owned())?;
                leakage = leakage.max((&image * (image.transpose() * moved)).amax());
            }
        }
    }
    if strict && leakage > INVARIANCE_TOL {
        return Err(Error::NotGInvariant(leakage));
    }
    Ok(TorsionComplement { delta, image, basis, kernel_dim, leakage })
}

/// Dimensions of the splittings of `g ⊗ Λ^2 V*`, `R(g)` and `g ⊗ V*`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplittingDims {
    pub g_lambda2: usize,
    /// Curvature tensors: kernel of `δ: g ⊗ Λ^2 V* -> V ⊗ Λ^3 V*`.
    pub r_g: usize,
    pub d1: usize,
    pub delta_g1: usize,
    pub d2: usize,
    pub g_v: usize,
    pub g1: usize,
    pub d3: usize,
    /// `max |δ ∘ δ|` on `g^(1) ⊗ V*`.
    pub delta_squared: f64,
}

/// Coordinates in `g ⊗ V*` (`alpha * n + c`) of each `g^(1)` basis element,
/// read as `u -> T(u, .)`.
fn g1_as_maps(g: &LinearLieAlgebra, g1: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.n();
    let dst = SymTensorSpace::new(n, 2);
    let mut out = DMatrix::zeros(g.dim() * n, g1.ncols());
    for (beta, col) in g1.column_iter().enumerate() {
        for c in 0..n {
            let m = DMatrix::from_fn(n, n, |i, j| col[dst.coord(i, &[c, j])]);
            let (x, _) = g.coords(&m);
            for (alpha, v) in x.iter().enumerate() {
                out[(alpha * n + c, beta)] = *v;
            }
        }
    }
    out
}

pub fn splitting_dims(g: &LinearLieAlgebra, table: &ProlongationTable) -> SplittingDims {
    let n = g.n();
    let dg = g.dim();
    let ps = pairs(n);
    let np = ps.len();
    let ts = triples(n);
    let pair_index = |a: usize, b: usize| ps.iter().position(|&p| p == (a, b)).expect("a < b");
    // δ: g ⊗ Λ^2 V* -> V ⊗ Λ^3 V*, (δψ)(a,b,c) = ψ(b,c) e_a - ψ(a,c) e_b + ψ(a,b) e_c
    let mut d2m = DMatrix::zeros(n * ts.len(), dg * np);
    for (alpha, x) in g.matrices().iter().enumerate() {
        for (t, &(a, b, c)) in ts.iter().enumerate() {
            for i in 0..n {
                d2m[(i * ts.len() + t, alpha * np + pair_index(b, c))] += x[(i, a)];
                d2m[(i * ts.len() + t, alpha * np + pair_index(a, c))] -= x[(i, b)];
                d2m[(i * ts.len() + t, alpha * np + pair_index(a, b))] += x[(i, c)];
            }
        }
    }
    let rank_d2 = linalg::rank(&d2m, RANK_TOL);
    // δ: g^(1) ⊗ V* -> g ⊗ Λ^2 V*, (δφ)(u, w) = φ(w)(u) - φ(u)(w)
    let maps = g1_as_maps(g, &table.bases[1]);
    let d1 = table.dims[1];
    let mut d1m = DMatrix::zeros(dg * np, d1 * n);
    for beta in 0..d1 {
        for c in 0..n {
            for (p, &(a, b)) in ps.iter().enumerate() {
                for alpha in 0..dg {
                    let mut v = 0.0;
                    if c == b {
                        v += maps[(alpha * n + a, beta)];
                    }
                    if c == a {
                        v -= maps[(alpha * n + b, beta)];
                    }
                    d1m[(alpha * np + p, beta * n + c)] = v;
                }
            }
        }
    }
    let rank_d1 = linalg::rank(&d1m, RANK_TOL);
    let delta_squared = if d1m.ncols() > 0 && d2m.nrows() > 0 { (&d2m * &d1m).amax() } else { 0.0 };
    let r_g = dg * np - rank_d2;
    SplittingDims {
        g_lambda2: dg * np,
        r_g,
        d1: rank_d2,
        delta_g1: rank_d1,
        d2: r_g - rank_d1,
        g_v: dg * n,
        g1: d1,
        d3: dg * n - d1,
        delta_squared,
    }
}

/// A local `G`-structure on `U ⊂ V` given by a frame field `S: U -> GL(V)`;
/// the soldering form on `U x G` is `theta(xi, zeta) = a^{-1} S(x)^{-1} xi`.
#[derive(Clone, Debug)]
pub struct LocalGStructure {
    group: LinearLieAlgebra,
    frame: PolyMatrix,
    model: Arc<LocalModel>,
    h_rep: MatrixRep,
}

impl LocalGStructure {
    pub fn new(group: LinearLieAlgebra, frame: PolyMatrix) -> Result<Self> {
        let n = group.n();
        if frame.rows != n || frame.cols != n || frame.nvars != n {
            return Err(Error::DimensionMismatch(format!("frame must be an {n} x {n} polynomial matrix in {n} variables")));
        }
        if group.dim() == 0 {
            return Err(Error::DimensionMismatch("structure group must be nontrivial".into()));
        }
        let rep = group.rep();
        let h = LieAlgebra::semidirect(group.algebra(), &rep)?;
        let dg = group.dim();
        let emb = SubalgebraEmbedding::from_indices(&h, &(0..dg).collect::<Vec<_>>())?;
        let chart = GroupChart::first_kind(group.algebra().clone(), rep.clone(), group.relation().clone())?;
        let model = Arc::new(LocalModel::principal(n, chart, h, emb)?);
        let mut gens = group.matrices().to_vec();
        gens.extend((0..n).map(|_| DMatrix::zeros(n, n)));
        Ok(LocalGStructure { group, frame, model, h_rep: MatrixRep::new_unchecked(gens) })
    }

    /// The standard flat structure `S = I`.
    pub fn flat(group: LinearLieAlgebra) -> Result<Self> {
        let n = group.n();
        Self::new(group, PolyMatrix::identity(n, n))
    }

    pub fn group(&self) -> &LinearLieAlgebra {
        &self.group
    }

    pub fn frame(&self) -> &PolyMatrix {
        &self.frame
    }

    pub fn model(&self) -> &Arc<LocalModel> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.group.n()
    }

    pub fn is_flat(&self) -> bool {
        self.frame.is_constant() && (self.frame.eval(&vec![0.0; self.n()]) - DMatrix::identity(self.n(), self.n())).amax() == 0.0
    }

    /// `h = g ⋉ V` acting on `V` through `g`.
    pub fn h_rep(&self) -> &MatrixRep {
        &self.h_rep
    }

    fn frame_inverse(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let s = self.frame.eval(x);
        if s.determinant().abs() < 1e-12 {
            return Err(Error::SingularFrame);
        }
        s.try_inverse().ok_or(Error::SingularFrame)
    }

    pub fn soldering_form(&self) -> Result<Form> {
        let frame = self.frame.clone();
        let n = self.n();
        let base = Form::one_form_from_field(n, n, move |x| frame.eval_taylor(x).inverse().expect("frame invertible on the chart"));
        cartan::equivariant_form(&self.model, &base, &self.h_rep)
    }

    /// `t(H)(v, w) = dtheta(theta|_H^{-1} v, theta|_H^{-1} w)` at `(x, e)`,
    /// where `H: V -> g` (a `dim g x n` matrix) has graph the horizontal
    /// subspace. Coordinates `i * P + p` over pairs `p = (a < b)`.
    pub fn torsion_function(&self, x: &[f64], h: &DMatrix<f64>) -> Result<DVector<f64>> {
        let n = self.n();
        let s = self.frame.eval(x);
        self.frame_inverse(x)?;
        let mut point = x.to_vec();
        point.extend(vec![0.0; self.group.dim()]);
        let dtheta = self.soldering_form()?.d().at(&point);
        let lifts: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                let xi = s.column(a).into_owned();
                let zeta = h * &xi;
                xi.iter().chain(zeta.iter()).copied().collect()
            })
            .collect();
        let ps = pairs(n);
        let np = ps.len();
        let mut t = DVector::zeros(n * np);
        for (p, &(a, b)) in ps.iter().enumerate() {
            let v = dtheta.eval(&[&lifts[a], &lifts[b]]);
            for i in 0..n {
                t[i * np + p] = v[i];
            }
        }
        Ok(t)
    }

    /// `t(0)` in Taylor arithmetic:
    /// `t(e_a, e_b) = -S^{-1} sum_k (S_ka dS_k e_b - S_kb dS_k e_a)`.
    fn torsion_at_zero_taylor(&self, x: &[Taylor]) -> (Vec<Taylor>, TMat) {
        let n = self.n();
        let s = self.frame.eval_taylor(x);
        let sinv = s.inverse().expect("frame invertible on the chart");
        let ds: Vec<TMat> = (0..n).map(|k| self.frame.derivative(k).eval_taylor(x)).collect();
        let ps = pairs(n);
        let np = ps.len();
        let b = x[0].basis().clone();
        let mut t = vec![Taylor::zero(&b); n * np];
        for (p, &(a, bb)) in ps.iter().enumerate() {
            let mut v = vec![Taylor::zero(&b); n];
            for (k, dk) in ds.iter().enumerate() {
                for r in 0..n {
                    let mut e = dk.get(r, bb) * s.get(k, a);
                    e.add_scaled(&(dk.get(r, a) * s.get(k, bb)), -1.0);
                    v[r].add_scaled(&e, 1.0);
                }
            }
            let w = sinv.apply(&v);
            for i in 0..n {
                t[i * np + p] = w[i].scale(-1.0);
            }
        }
        (t, sinv)
    }

    /// The connection of the least-norm torsion-normalized horizontal
    /// subspaces: at `(x, e)`, `H(x) = l(x) S(x)^{-1}` with
    /// `l = -δ^+ t(0)` so that `t(H)` lies in `𝔡`.
    pub fn normalized_connection(&self, complement: &TorsionComplement) -> Result<GeneralizedCartanConnection> {
        let me = self.clone();
        let n = self.n();
        let dg = self.group.dim();
        let pinv = linalg::pinv(&complement.delta);
        let field = Arc::new(move |x: &[Taylor]| {
            let (t0, sinv) = me.torsion_at_zero_taylor(x);
            let b = x[0].basis().clone();
            let l: Vec<Taylor> = (0..dg * n)
                .map(|r| {
                    let mut acc = Taylor::zero(&b);
                    for (c, tc) in t0.iter().enumerate() {
                        let w = pinv[(r, c)];
                        if w != 0.0 {
                            acc.add_scaled(tc, -w);
                        }
                    }
                    acc
                })
                .collect();
            let lmat = TMat::from_entries(dg, n, l);
            let h = lmat.matmul(&sinv);
            let mut a = TMat::zeros(&b, dg + n, n);
            for i in 0..dg {
                for j in 0..n {
                    a.set(i, j, h.get(i, j).scale(-1.0));
                }
            }
            for i in 0..n {
                for j in 0..n {
                    a.set(dg + i, j, sinv.get(i, j).clone());
                }
            }
            a
        });
        cartan::make_principal_cartan_with(self.model.clone(), field)
    }

    /// `H(x)` of [`Self::normalized_connection`] at a point.
    pub fn normalized_horizontal(&self, complement: &TorsionComplement, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n();
        let sinv = self.frame_inverse(x)?;
        let t0 = self.torsion_function(x, &DMatrix::zeros(self.group.dim(), n))?;
        let l = -linalg::pinv(&complement.delta) * t0;
        let lmat = DMatrix::from_fn(self.group.dim(), n, |a, c| l[a * n + c]);
        Ok(lmat * sinv)
    }
}

/// Normalization data of the first prolongation at one base point.
#[derive(Clone, Debug, Serialize)]
pub struct FirstProlongationSample {
    pub x: Vec<f64>,
    /// `|t(H)|` for the normalized `H`.
    pub torsion_norm: f64,
    /// Component of `t(H)` along `δ(g ⊗ V*)`, zero when `t(H)` lies in `𝔡`.
    pub normalization_residual: f64,
    /// Dimension of the affine family of normalized `H`.
    pub coset_dim: usize,
}

#[derive(Clone, Debug)]
pub struct FirstProlongation {
    pub samples: Vec<FirstProlongationSample>,
    pub coset_dim: usize,
    /// `theta^1` along the least-norm section, a `g ⋉ V`-valued form on `U x G`.
    pub connection: GeneralizedCartanConnection,
    pub equivariance_residual: f64,
    pub reproduction_residual: f64,
}

pub const NORMALIZATION_TOL: f64 = 1e-8;

pub fn first_prolongation_bundle(st: &LocalGStructure, complement: &TorsionComplement, samples: &[Vec<f64>], seed: u64) -> Result<FirstProlongation> {
    let n = st.n();
    let mut out = Vec::new();
    for x in samples {
        let x = &x[..n];
        let h = st.normalized_horizontal(complement, x)?;
        let t = st.torsion_function(x, &h)?;
        let res = complement.project_image(&t).amax();
        if res > NORMALIZATION_TOL * t.amax().max(1.0) {
            return Err(Error::NoSolution(res));
        }
        out.push(FirstProlongationSample { x: x.to_vec(), torsion_norm: t.amax(), normalization_residual: res, coset_dim: complement.kernel_dim });
    }
    let connection = st.normalized_connection(complement)?;
    let model = st.model();
    let full = model.samples(samples.len().max(4), seed);
    let gs = model.group_samples(8, seed);
    let equivariance_residual = cartan::equivariance_residual(&connection, &full, &gs)?;
    let reproduction_residual = cartan::reproduction_residual(&connection, &full)?;
    Ok(FirstProlongation { samples: out, coset_dim: complement.kernel_dim, connection, equivariance_residual, reproduction_residual })
}

/// The canonical Cartan connection of type `(g ⋉ V)/g` of a type-1 structure.
pub fn type1_connection(st: &LocalGStructure, samples: &[Vec<f64>]) -> Result<CartanConnection> {
    let table = prolong(st.group(), 1)?;
    if table.dims[1] != 0 {
        return Err(Error::NotType1(table.dims[1]));
    }
    let complement = torsion_complement(st.group(), false)?;
    CartanConnection::new(st.normalized_connection(&complement)?, samples)
}

/// The canonical Cartan connection of a type-2 structure, built on the
/// standard flat structure only: the flat model on `V x G_2` with values in
/// `g ⊕ g^(1) ⊕ V`.
pub fn type2_connection(st: &LocalGStructure, samples_count: usize, seed: u64) -> Result<(CartanConnection, crate::jets::TruncatedAlgebra)> {
    let table = prolong(st.group(), 2)?;
    if table.verdict != TypeVerdict::Type2 {
        return Err(Error::NotType2);
    }
    if !st.is_flat() {
        return Err(Error::UnsupportedCurvedBase);
    }
    crate::jets::flat_model_connection(st.group(), 2, samples_count, seed)
}

/// Torsion of a `g ⋉ V`-valued connection: the `V` part of its curvature
/// on `theta`-dual horizontal vectors at `(x, e)`, in the coordinates of
/// [`LocalGStructure::torsion_function`].
pub fn connection_torsion(st: &LocalGStructure, conn: &GeneralizedCartanConnection, x: &[f64]) -> Result<DVector<f64>> {
    let n = st.n();
    let dg = st.group().dim();
    let mut point = x.to_vec();
    point.extend(vec![0.0; dg]);
    let kappa = conn.kappa().at(&point).value_matrix();
    let k = cartan::curvature(conn).at(&point);
    // horizontal lifts: kappa(lift_a) = (0, e_a)
    let ps = pairs(n);
    let np = ps.len();
    let lifts: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut target = DVector::zeros(dg + n);
            target[dg + a] = 1.0;
            kappa.clone().lu().solve(&target).map(|v| v.iter().copied().collect()).ok_or(Error::SingularFrame)
        })
        .collect::<Result<_>>()?;
    let mut t = DVector::zeros(n * np);
    for (p, &(a, b)) in ps.iter().enumerate() {
        let v = k.eval(&[&lifts[a], &lifts[b]]);
        for i in 0..n {
            t[i * np + p] = v[dg + i];
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{bianchi_residual, curvature, form_norm, form_scale};
    use crate::poly::Polynomial;

    fn dims(name: &str, k: usize) -> Vec<usize> {
        prolong(&LinearLieAlgebra::preset(name).unwrap(), k).unwrap().dims
    }

    #[test]
    fn prolongation_dimensions_match_brute_force() {
        assert_eq!(dims("so2", 2)[1], 0);
        assert_eq!(dims("so3", 2)[1], 0);
        assert_eq!(&dims("gl2", 2)[1..], &[6, 8]);
        assert_eq!(&dims("co3", 2)[1..], &[3, 0]);
        for (name, k) in [("so2", 1), ("so3", 1), ("gl2", 1), ("gl2", 2), ("co3", 1), ("co3", 2), ("sl2", 1), ("sl2", 2)] {
            let g = LinearLieAlgebra::preset(name).unwrap();
            assert_eq!(prolong(&g, k).unwrap().dims[k], brute_force_dim(&g, k), "{name} k={k}");
        }
        assert_eq!(prolong(&LinearLieAlgebra::preset("so3").unwrap(), 2).unwrap().verdict, TypeVerdict::Type1);
        assert_eq!(prolong(&LinearLieAlgebra::preset("co3").unwrap(), 2).unwrap().verdict, TypeVerdict::Type2);
        assert_eq!(prolong(&LinearLieAlgebra::preset("gl2").unwrap(), 2).unwrap().verdict, TypeVerdict::HigherOrInfinite(2));
    }

    #[test]
    fn iterated_and_direct_prolongations_agree() {
        for name in ["so3", "co3", "gl2"] {
            let g = LinearLieAlgebra::preset(name).unwrap();
            let t = prolong(&g, 3).unwrap();
            assert!(t.membership_residual <= MEMBERSHIP_TOL);
            for k in 1..=3 {
                assert!(span_equality_residual(&g, &t, k) <= 1e-9, "{name} k={k}");
            }
        }
    }

    #[test]
    fn alternation_examples() {
        let n = 2;
        // symmetric tensor
        let mut s = Tensor::zeros(n, 2);
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    s.set(i, &[a, b], (i + a + b) as f64 + (a * b) as f64);
                }
            }
        }
        assert_eq!(spencer_delta(&s).unwrap().max_abs(), 0.0);
        // T(v) w = <v, w> u0
        let u0 = [0.3, -1.2];
        let mut e = Tensor::zeros(n, 2);
        for i in 0..n {
            for a in 0..n {
                e.set(i, &[a, a], u0[i]);
            }
        }
        assert_eq!(spencer_delta(&e).unwrap().max_abs(), 0.0);
        // u0 ⊗ e^1 ⊗ e^2
        let mut t = Tensor::zeros(n, 2);
        for i in 0..n {
            t.set(i, &[0, 1], u0[i]);
        }
        let d = spencer_delta(&t).unwrap();
        assert_eq!((d.get(0, &[0, 1]), d.get(1, &[0, 1])), (u0[0], u0[1]));
        assert_eq!((d.get(0, &[1, 0]), d.get(1, &[1, 0])), (-u0[0], -u0[1]));
        // delta_matrix agrees with the tensor formula on g ⊗ V*
        let g = LinearLieAlgebra::preset("gl2").unwrap();
        let dm = delta_matrix(&g);
        for col in 0..dm.ncols() {
            let (alpha, c) = (col / n, col % n);
            let mut l = Tensor::zeros(n, 2);
            for i in 0..n {
                for a in 0..n {
                    l.set(i, &[a, c], g.matrices()[alpha][(i, a)]);
                }
            }
            let d = spencer_delta(&l).unwrap();
            for i in 0..n {
                assert_eq!(d.get(i, &[0, 1]), dm[(i, col)]);
            }
        }
    }

    #[test]
    fn torsion_complements() {
        for name in ["so2", "so3", "gl2"] {
            let tc = torsion_complement(&LinearLieAlgebra::preset(name).unwrap(), true).unwrap();
            assert_eq!(tc.basis.ncols(), 0, "{name}");
        }
        let co3 = LinearLieAlgebra::preset("co3").unwrap();
        let tc = torsion_complement(&co3, true).unwrap();
        assert_eq!(tc.kernel_dim, prolong(&co3, 1).unwrap().dims[1]);
        let tc = torsion_complement(&LinearLieAlgebra::trivial(3), true).unwrap();
        assert_eq!(tc.basis.ncols(), 9);
        // the diagonal algebra diag(1, 2) already spans all of V ⊗ Λ^2 V* for n = 2
        let diag = LinearLieAlgebra::new("d", 2, vec![DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))], GroupRelation::None).unwrap();
        let tc = torsion_complement(&diag, true).unwrap();
        assert_eq!((tc.basis.ncols(), tc.kernel_dim), (0, 0));
        // the action on V ⊗ Λ^2 V* is a left action
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(3, 3, |i, j| rng.gen_range(-0.3..0.3) + if i == j { 1.0 } else { 0.0 });
        let b = DMatrix::from_fn(3, 3, |i, j| rng.gen_range(-0.3..0.3) + if i == j { 1.0 } else { 0.0 });
        let t = DVector::from_fn(9, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = act_on_torsion(&(&a * &b), &t).unwrap();
        let rhs = act_on_torsion(&a, &act_on_torsion(&b, &t).unwrap()).unwrap();
        assert!((lhs - rhs).amax() <= 1e-12);
    }

    fn frame(entries: &[(usize, usize, &[(Vec<u8>, f64)])]) -> PolyMatrix {
        let mut s = PolyMatrix::identity(2, 2);
        for (i, j, terms) in entries {
            let mut p = s.get(*i, *j).clone();
            for (e, c) in terms.iter() {
                p.add_term(e.clone(), *c);
            }
            s.set(*i, *j, p);
        }
        s
    }

    #[test]
    fn torsion_function_examples_and_shift_law() {
        let gl2 = LinearLieAlgebra::preset("gl2").unwrap();
        let flat = LocalGStructure::flat(gl2.clone()).unwrap();
        assert_eq!(flat.torsion_function(&[0.2, 0.1], &DMatrix::zeros(4, 2)).unwrap().amax(), 0.0);
        // S = diag(1, 1 + x1): theta^2 = dx2 / (1 + x1)
        let st = LocalGStructure::new(gl2.clone(), frame(&[(1, 1, &[(vec![1, 0], 1.0)])])).unwrap();
        let x = [0.3, -0.2];
        let t = st.torsion_function(&x, &DMatrix::zeros(4, 2)).unwrap();
        assert!((t[0]).abs() <= 1e-14 && (t[1] + 1.0 / 1.3).abs() <= 1e-12);
        // diag(1 + x1, 1) has closed soldering form
        let st0 = LocalGStructure::new(gl2.clone(), frame(&[(0, 0, &[(vec![1, 0], 1.0)])])).unwrap();
        assert!(st0.torsion_function(&x, &DMatrix::zeros(4, 2)).unwrap().amax() <= 1e-14);
        // t(H + l S^{-1}) - t(H) = δl
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = delta_matrix(&gl2);
        let sinv = st.frame.eval(&x).try_inverse().unwrap();
        for _ in 0..5 {
            let h = DMatrix::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
            let l = DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0));
            let lmat = DMatrix::from_fn(4, 2, |a, c| l[a * 2 + c]);
            let t1 = st.torsion_function(&x, &(&h + lmat * &sinv)).unwrap();
            let t0 = st.torsion_function(&x, &h).unwrap();
            assert!((t1 - t0 - &d * &l).amax() <= 1e-12);
        }
        let bad = LocalGStructure::new(gl2, frame(&[(0, 0, &[(vec![0, 0], -1.0)])])).unwrap();
        assert!(matches!(bad.torsion_function(&x, &DMatrix::zeros(4, 2)), Err(Error::SingularFrame)));
    }

    #[test]
    fn first_prolongation_cosets() {
        for (name, coset) in [("so2", 0), ("gl2", 6)] {
            let g = LinearLieAlgebra::preset(name).unwrap();
            let st = LocalGStructure::new(g.clone(), frame(&[(0, 1, &[(vec![1, 0], 0.2)]), (1, 1, &[(vec![0, 1], 0.1)])])).unwrap();
            let tc = torsion_complement(&g, true).unwrap();
            let p1 = first_prolongation_bundle(&st, &tc, &st.model().samples(6, 1), 2).unwrap();
            assert_eq!(p1.coset_dim, coset);
            assert!(p1.samples.iter().all(|s| s.normalization_residual <= 1e-10));
            assert!(p1.equivariance_residual <= 1e-6 && p1.reproduction_residual <= 1e-8);
        }
    }

    #[test]
    fn type1_flat_so2_is_flat_euclidean() {
        let st = LocalGStructure::flat(LinearLieAlgebra::preset("so2").unwrap()).unwrap();
        let samples = st.model().samples(16, 4);
        let conn = type1_connection(&st, &samples).unwrap();
        assert!(form_norm(&curvature(&conn), &samples) <= 1e-10);
        // matches the Maurer-Cartan form of E(2) in (rotation, translation) order
        let y = [0.3, -0.4, 0.7];
        let m = conn.kappa().at(&y).value_matrix();
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, c, s, 0.0, -s, c, 0.0]);
        assert!((m - want).amax() <= 1e-12);
    }

    #[test]
    fn type1_perturbed_so2_passes_validators_and_is_torsion_free() {
        let g = LinearLieAlgebra::preset("so2").unwrap();
        let s = frame(&[(0, 0, &[(vec![0, 1], 0.2)]), (1, 0, &[(vec![1, 1], 0.15)]), (1, 1, &[(vec![2, 0], -0.1)])]);
        let st = LocalGStructure::new(g, s).unwrap();
        let samples = st.model().samples(12, 5);
        let conn = type1_connection(&st, &samples).unwrap();
        let gs = st.model().group_samples(8, 5);
        assert!(cartan::reproduction_residual(&conn, &samples).unwrap() <= 1e-8);
        assert!(cartan::equivariance_residual(&conn, &samples, &gs).unwrap() <= 1e-7);
        let k = curvature(&conn);
        assert!(form_norm(&k, &samples) > 1e-4);
        assert!(bianchi_residual(&conn, &samples).unwrap() <= 1e-6 * form_scale(&k, &samples, 1).max(1.0));
        for y in &samples {
            assert!(connection_torsion(&st, &conn, &y[..2]).unwrap().amax() <= 1e-9);
        }
        assert!(matches!(type1_connection(&LocalGStructure::flat(LinearLieAlgebra::preset("gl2").unwrap()).unwrap(), &samples), Err(Error::NotType1(6))));
    }

    #[test]
    fn type2_connection_on_flat_conformal_structure() {
        let co3 = LinearLieAlgebra::preset("co3").unwrap();
        let st = LocalGStructure::flat(co3.clone()).unwrap();
        let (conn, ak) = type2_connection(&st, 8, 6).unwrap();
        assert_eq!(ak.algebra.dim(), 10);
        let samples = conn.model().samples(8, 7);
        assert!(form_norm(&curvature(&conn), &samples) <= 1e-5);
        assert!(matches!(type2_connection(&LocalGStructure::flat(LinearLieAlgebra::preset("so3").unwrap()).unwrap(), 4, 1), Err(Error::NotType2)));
        let mut s = PolyMatrix::identity(3, 3);
        let mut p = s.get(0, 0).clone();
        p.add_term(vec![0, 1, 0], 0.1);
        s.set(0, 0, p);
        let curved = LocalGStructure::new(co3, s).unwrap();
        assert!(matches!(type2_connection(&curved, 4, 1), Err(Error::UnsupportedCurvedBase)));
    }

    #[test]
    fn splittings_are_consistent() {
        for name in ["co3", "so3", "co2"] {
            let g = LinearLieAlgebra::preset(name).unwrap();
            let t = prolong(&g, 2).unwrap();
            let s = splitting_dims(&g, &t);
            assert_eq!(s.g_lambda2, s.r_g + s.d1);
            assert_eq!(s.r_g, s.delta_g1 + s.d2);
            assert_eq!(s.g_v, s.g1 + s.d3);
            assert!(s.delta_squared <= 1e-12, "{name}");
            // 𝔡₃ is the image of δ on g ⊗ V*
            assert_eq!(s.d3, linalg::rank(&delta_matrix(&g), RANK_TOL));
        }
        let _ = Polynomial::zero(1);
    }
}
