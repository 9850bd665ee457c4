//! Finite-dimensional real Lie algebras by structure constants.

mod json;
pub mod multilinear;
pub mod presets;

pub use json::AlgebraJson;
pub use multilinear::{MultilinearFunction, Symmetry};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for the Jacobi check on constructed algebras.
pub const JACOBI_TOL: f64 = 1e-12;

/// A Lie algebra with `[e_i, e_j] = sum_k c[k][i][j] e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    c: Vec<f64>,
    names: Vec<String>,
}

impl LieAlgebra {
    /// Build from a dense `c[k][i][j]` array; validates antisymmetry and Jacobi.
    pub fn new(dim: usize, c: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if c.len() != dim * dim * dim || names.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "structure array of length {} and {} names for dim {dim}",
                c.len(),
                names.len()
            )));
        }
        let alg = LieAlgebra { dim, c, names };
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    if alg.sc(k, i, j) != -alg.sc(k, j, i) {
                        return Err(Error::InvalidAlgebra(format!(
                            "c[{k}][{i}][{j}] is not antisymmetric"
                        )));
                    }
                }
            }
        }
        let scale = alg.c.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let jr = alg.jacobi_residual();
        if jr > JACOBI_TOL * scale * scale {
            return Err(Error::InvalidAlgebra(format!("Jacobi residual {jr:.3e}")));
        }
        Ok(alg)
    }

    /// Build from the antisymmetric bracket values `[e_i, e_j]` for `i < j`.
    pub fn from_brackets(dim: usize, names: Vec<String>, brackets: &[(usize, usize, Vec<f64>)]) -> Result<Self> {
        let mut c = vec![0.0; dim * dim * dim];
        for (i, j, v) in brackets {
            if *i >= dim || *j >= dim || v.len() != dim {
                return Err(Error::DimensionMismatch(format!("bracket entry ({i},{j})")));
            }
            for k in 0..dim {
                c[(k * dim + i) * dim + j] = v[k];
                c[(k * dim + j) * dim + i] = -v[k];
            }
        }
        Self::new(dim, c, names)
    }

    pub fn abelian(dim: usize) -> Self {
        let names = (1..=dim).map(|i| format!("e{i}")).collect();
        LieAlgebra { dim, c: vec![0.0; dim * dim * dim], names }
    }

    /// Structure constants of the span of `generators` under the commutator.
    pub fn from_matrices(generators: &[DMatrix<f64>], names: Vec<String>) -> Result<Self> {
        let rep = MatrixRep::new(generators.to_vec())?;
        let dim = generators.len();
        let mut c = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let comm = &generators[i] * &generators[j] - &generators[j] * &generators[i];
                let (coords, res) = rep.coords(&comm);
                let scale = comm.amax().max(1.0);
                if res > 1e-10 * scale {
                    return Err(Error::NotInAlgebra(res));
                }
                for k in 0..dim {
                    c[(k * dim + i) * dim + j] = clean(coords[k]);
                }
            }
        }
        // exact antisymmetry
        for k in 0..dim {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let v = 0.5 * (c[(k * dim + i) * dim + j] - c[(k * dim + j) * dim + i]);
                    c[(k * dim + i) * dim + j] = v;
                    c[(k * dim + j) * dim + i] = -v;
                }
                c[(k * dim + i) * dim + i] = 0.0;
            }
        }
        Self::new(dim, c, names)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn structure(&self) -> &[f64] {
        &self.c
    }

    #[inline]
    pub fn sc(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[(k * self.dim + i) * self.dim + j]
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&x| x == 0.0)
    }

    /// Nonzero structure constants as `(k, i, j, c)`.
    pub fn bracket_tensor(&self) -> Vec<(usize, usize, usize, f64)> {
        let d = self.dim;
        let mut out = Vec::new();
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let v = self.sc(k, i, j);
                    if v != 0.0 {
                        out.push((k, i, j, v));
                    }
                }
            }
        }
        out
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in algebra of dim {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub fn bracket_unchecked(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                let xy = x[i] * y[j];
                for (k, o) in out.iter_mut().enumerate() {
                    *o += self.sc(k, i, j) * xy;
                }
            }
        }
        out
    }

    /// Matrix of `Y -> [X, Y]`.
    pub fn ad(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let d = self.dim;
        Ok(DMatrix::from_fn(d, d, |k, j| (0..d).map(|i| self.sc(k, i, j) * x[i]).sum()))
    }

    pub fn ad_basis(&self, i: usize) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |k, j| self.sc(k, i, j))
    }

    /// The adjoint representation.
    pub fn ad_rep(&self) -> MatrixRep {
        MatrixRep::new_unchecked((0..self.dim).map(|i| self.ad_basis(i)).collect())
    }

    pub fn killing_form(&self) -> DMatrix<f64> {
        let ads: Vec<DMatrix<f64>> = (0..self.dim).map(|i| self.ad_basis(i)).collect();
        DMatrix::from_fn(self.dim, self.dim, |i, j| (&ads[i] * &ads[j]).trace())
    }

    /// Max over basis triples of the cyclic Jacobi sum.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let e = |i: usize| {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            v
        };
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let bij = self.bracket_unchecked(&e(i), &e(j));
                for k in 0..d {
                    let bjk = self.bracket_unchecked(&e(j), &e(k));
                    let bki = self.bracket_unchecked(&e(k), &e(i));
                    let a = self.bracket_unchecked(&bij, &e(k));
                    let b = self.bracket_unchecked(&bjk, &e(i));
                    let c = self.bracket_unchecked(&bki, &e(j));
                    for t in 0..d {
                        worst = worst.max((a[t] + b[t] + c[t]).abs());
                    }
                }
            }
        }
        worst
    }

    /// `g ⋉ V` with `[(X,u),(Y,v)] = ([X,Y], Xv - Yu)`; g coordinates come first.
    pub fn semidirect(g: &LieAlgebra, rep: &MatrixRep) -> Result<LieAlgebra> {
        let res = rep.homomorphism_residual(g)?;
        if res > 1e-10 {
            return Err(Error::InvalidRep(format!("homomorphism residual {res:.3e}")));
        }
        let (m, n) = (g.dim, rep.dim());
        let d = m + n;
        let mut c = vec![0.0; d * d * d];
        let at = |k: usize, i: usize, j: usize| (k * d + i) * d + j;
        for k in 0..m {
            for i in 0..m {
                for j in 0..m {
                    c[at(k, i, j)] = g.sc(k, i, j);
                }
            }
        }
        for a in 0..m {
            let r = &rep.generators()[a];
            for v in 0..n {
                for u in 0..n {
                    c[at(m + u, a, m + v)] = r[(u, v)];
                    c[at(m + u, m + v, a)] = -r[(u, v)];
                }
            }
        }
        let mut names: Vec<String> = g.names.clone();
        names.extend((1..=n).map(|i| format!("v{i}")));
        LieAlgebra::new(d, c, names)
    }

    /// Projection of `x` onto a basis vector direction list, for diagnostics.
    pub fn basis_vector(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[i] = 1.0;
        v
    }
}

fn clean(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-13 {
        r
    } else {
        x
    }
}

/// A representation by matrices `rho(e_i)`, one per basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRep {
    generators: Vec<DMatrix<f64>>,
    /// Least-squares projection from flattened matrices to coordinates.
    proj: DMatrix<f64>,
    stacked: DMatrix<f64>,
}

impl MatrixRep {
    pub fn new(generators: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = generators.first().map(|g| g.nrows()).unwrap_or(0);
        for g in &generators {
            if g.nrows() != d || g.ncols() != d {
                return Err(Error::InvalidRep("generators must be square of equal size".into()));
            }
        }
        Ok(Self::new_unchecked(generators))
    }

    pub fn new_unchecked(generators: Vec<DMatrix<f64>>) -> Self {
        let d = generators.first().map(|g| g.nrows()).unwrap_or(0);
        let stacked = DMatrix::from_fn(d * d, generators.len(), |r, c| generators[c][(r / d, r % d)]);
        let proj = linalg::pinv(&stacked);
        MatrixRep { generators, proj, stacked }
    }

    /// The zero representation of an algebra of dimension `n` on `W = R^w`.
    pub fn trivial(n: usize, w: usize) -> Self {
        Self::new_unchecked(vec![DMatrix::zeros(w, w); n])
    }

    pub fn dim(&self) -> usize {
        self.generators.first().map(|g| g.nrows()).unwrap_or(0)
    }

    pub fn algebra_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn apply(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (g, &xi) in self.generators.iter().zip(x) {
            if xi != 0.0 {
                m += g * xi;
            }
        }
        m
    }

    /// Least-squares algebra coordinates of a matrix and the residual norm.
    pub fn coords(&self, m: &DMatrix<f64>) -> (Vec<f64>, f64) {
        let d = self.dim();
        let flat = DVector::from_fn(d * d, |r, _| m[(r / d, r % d)]);
        let x = &self.proj * &flat;
        let res = (&self.stacked * &x - flat).amax();
        (x.iter().copied().collect(), res)
    }

    /// `max ||rho([e_i,e_j]) - [rho(e_i), rho(e_j)]||`.
    pub fn homomorphism_residual(&self, alg: &LieAlgebra) -> Result<f64> {
        if self.generators.len() != alg.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} generators for algebra of dim {}",
                self.generators.len(),
                alg.dim()
            )));
        }
        let mut worst = 0.0f64;
        for i in 0..alg.dim() {
            for j in 0..alg.dim() {
                let b = alg.bracket_unchecked(&alg.basis_vector(i), &alg.basis_vector(j));
                let lhs = self.apply(&b);
                let g = &self.generators;
                let rhs = &g[i] * &g[j] - &g[j] * &g[i];
                worst = worst.max((lhs - rhs).amax());
            }
        }
        Ok(worst)
    }

    /// Rank of the generator span (faithful iff equal to the algebra dimension).
    pub fn rank(&self) -> usize {
        linalg::rank(&self.stacked, linalg::RANK_TOL)
    }

    /// Pull back along a linear map `phi: k -> this algebra` given as a matrix.
    pub fn compose(&self, phi: &DMatrix<f64>) -> MatrixRep {
        let gens = (0..phi.ncols())
            .map(|a| self.apply(&phi.column(a).iter().copied().collect::<Vec<_>>()))
            .collect();
        MatrixRep::new_unchecked(gens)
    }
}

/// A subalgebra `g` of `h` given by an injective homomorphism `g -> h`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubalgebraEmbedding {
    sub: LieAlgebra,
    inclusion: DMatrix<f64>,
    complement: Option<DMatrix<f64>>,
}

impl SubalgebraEmbedding {
    /// Embed the span of the columns of `inclusion` as a subalgebra of `h`.
    pub fn from_inclusion(h: &LieAlgebra, inclusion: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if inclusion.nrows() != h.dim() {
            return Err(Error::DimensionMismatch("inclusion rows must equal dim h".into()));
        }
        let m = inclusion.ncols();
        if linalg::rank(&inclusion, linalg::RANK_TOL) != m {
            return Err(Error::InvalidAlgebra("inclusion lacks full column rank".into()));
        }
        let pinv = linalg::pinv(&inclusion);
        let mut c = vec![0.0; m * m * m];
        let mut worst = 0.0f64;
        for i in 0..m {
            let xi: Vec<f64> = inclusion.column(i).iter().copied().collect();
            for j in 0..m {
                let xj: Vec<f64> = inclusion.column(j).iter().copied().collect();
                let b = DVector::from_vec(h.bracket_unchecked(&xi, &xj));
                let y = &pinv * &b;
                worst = worst.max((&inclusion * &y - &b).amax());
                for k in 0..m {
                    c[(k * m + i) * m + j] = clean(y[k]);
                }
            }
        }
        if worst > 1e-10 {
            return Err(Error::NotInAlgebra(worst));
        }
        for k in 0..m {
            for i in 0..m {
                for j in (i + 1)..m {
                    let v = 0.5 * (c[(k * m + i) * m + j] - c[(k * m + j) * m + i]);
                    c[(k * m + i) * m + j] = v;
                    c[(k * m + j) * m + i] = -v;
                }
                c[(k * m + i) * m + i] = 0.0;
            }
        }
        let sub = LieAlgebra::new(m, c, names)?;
        Ok(SubalgebraEmbedding { sub, inclusion, complement: None })
    }

    /// Embed the span of the given basis vectors of `h`.
    pub fn from_indices(h: &LieAlgebra, indices: &[usize]) -> Result<Self> {
        let mut inc = DMatrix::zeros(h.dim(), indices.len());
        for (c, &i) in indices.iter().enumerate() {
            if i >= h.dim() {
                return Err(Error::DimensionMismatch(format!("basis index {i}")));
            }
            inc[(i, c)] = 1.0;
        }
        let names = indices.iter().map(|&i| h.names()[i].clone()).collect();
        Self::from_inclusion(h, inc, names)
    }

    pub fn identity(h: &LieAlgebra) -> Self {
        SubalgebraEmbedding {
            sub: h.clone(),
            inclusion: DMatrix::identity(h.dim(), h.dim()),
            complement: Some(DMatrix::zeros(h.dim(), 0)),
        }
    }

    /// Attach a complement; `[inclusion | complement]` must be a basis of h.
    pub fn with_complement(mut self, complement: DMatrix<f64>) -> Result<Self> {
        let n = self.inclusion.nrows();
        if complement.nrows() != n || complement.ncols() + self.inclusion.ncols() != n {
            return Err(Error::DimensionMismatch("complement has the wrong shape".into()));
        }
        let mut full = DMatrix::zeros(n, n);
        full.columns_mut(0, self.inclusion.ncols()).copy_from(&self.inclusion);
        full.columns_mut(self.inclusion.ncols(), complement.ncols()).copy_from(&complement);
        if linalg::rank(&full, linalg::RANK_TOL) != n {
            return Err(Error::InvalidAlgebra("inclusion and complement do not span h".into()));
        }
        self.complement = Some(complement);
        Ok(self)
    }

    /// Complement spanned by the basis vectors of h not in `indices`.
    pub fn with_coordinate_complement(self, h_dim: usize, indices: &[usize]) -> Result<Self> {
        let rest: Vec<usize> = (0..h_dim).filter(|i| !indices.contains(i)).collect();
        let mut c = DMatrix::zeros(h_dim, rest.len());
        for (col, &i) in rest.iter().enumerate() {
            c[(i, col)] = 1.0;
        }
        self.with_complement(c)
    }

    pub fn sub(&self) -> &LieAlgebra {
        &self.sub
    }

    pub fn inclusion(&self) -> &DMatrix<f64> {
        &self.inclusion
    }

    pub fn complement(&self) -> Option<&DMatrix<f64>> {
        self.complement.as_ref()
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        (&self.inclusion * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::presets;

    #[test]
    fn so3_bracket_and_killing() {
        let p = presets::algebra("so3").unwrap();
        let b = p.algebra.bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(b, vec![0.0, 0.0, 1.0]);
        let k = p.algebra.killing_form();
        assert!((k - DMatrix::identity(3, 3) * -2.0).amax() < 1e-14);
    }

    #[test]
    fn so3_ad_e3_rotates_plane() {
        let p = presets::algebra("so3").unwrap();
        let a = p.algebra.ad(&[0.0, 0.0, 1.0]).unwrap();
        // [e3, e1] = e2, [e3, e2] = -e1
        assert_eq!(a.column(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert_eq!(a.column(1).iter().copied().collect::<Vec<_>>(), vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn sl2_killing_signature() {
        let p = presets::algebra("sl2").unwrap();
        let eig = p.algebra.killing_form().symmetric_eigen().eigenvalues;
        let pos = eig.iter().filter(|&&x| x > 1e-9).count();
        let neg = eig.iter().filter(|&&x| x < -1e-9).count();
        assert_eq!((pos, neg), (2, 1));
    }

    #[test]
    fn semidirect_line_is_affine_algebra() {
        let gl1 = LieAlgebra::from_matrices(&[DMatrix::identity(1, 1)], vec!["X".into()]).unwrap();
        let rep = MatrixRep::new(vec![DMatrix::identity(1, 1)]).unwrap();
        let a = LieAlgebra::semidirect(&gl1, &rep).unwrap();
        assert_eq!(a.bracket(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn semidirect_so3_r3_is_jacobi() {
        let p = presets::algebra("so3").unwrap();
        let e3 = LieAlgebra::semidirect(&p.algebra, p.rep.as_ref().unwrap()).unwrap();
        assert!(e3.jacobi_residual() <= 1e-12);
        let t = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let s = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert!(e3.bracket(&t, &s).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_non_jacobi_constants() {
        // [e1,e2]=e1, [e2,e3]=e2, [e3,e1]=e3 violates Jacobi
        let r = LieAlgebra::from_brackets(
            3,
            vec!["a".into(), "b".into(), "c".into()],
            &[(0, 1, vec![1.0, 0.0, 0.0]), (1, 2, vec![0.0, 1.0, 0.0]), (0, 2, vec![0.0, 0.0, -1.0])],
        );
        assert!(matches!(r, Err(Error::InvalidAlgebra(_))));
    }

    #[test]
    fn borel_embeds_in_sl2() {
        let sl2 = presets::algebra("sl2").unwrap().algebra;
        let b = SubalgebraEmbedding::from_indices(&sl2, &[0, 1]).unwrap();
        assert_eq!(b.sub().bracket(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), vec![0.0, 2.0]);
        assert!(SubalgebraEmbedding::from_indices(&sl2, &[1, 2]).is_err());
    }
}
