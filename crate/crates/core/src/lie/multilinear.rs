//! Multilinear functions on a Lie algebra as dense coefficient tensors.

use nalgebra::DMatrix;
use rand::Rng;

use super::{LieAlgebra, MatrixRep};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Alternating,
    General,
}

/// A k-linear function with `f(e_{i1}, .., e_{ik}) = coeffs[i1 * d^{k-1} + .. + ik]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearFunction {
    dim: usize,
    arity: usize,
    symmetry: Symmetry,
    coeffs: Vec<f64>,
}

fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

fn unflatten(dim: usize, arity: usize, mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; arity];
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim.max(1);
        flat /= dim.max(1);
    }
    idx
}

/// Sign of the permutation sorting `idx`, or 0 if it has repeats.
pub fn permutation_sign(idx: &[usize]) -> f64 {
    let mut sign = 1.0;
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            if idx[a] == idx[b] {
                return 0.0;
            }
            if idx[a] > idx[b] {
                sign = -sign;
            }
        }
    }
    sign
}

/// All permutations of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

impl MultilinearFunction {
    pub fn new(dim: usize, arity: usize, symmetry: Symmetry, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dim.pow(arity as u32) {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for arity {arity} on dim {dim}",
                coeffs.len()
            )));
        }
        let f = MultilinearFunction { dim, arity, symmetry, coeffs };
        if f.symmetry_defect() != 0.0 {
            return Err(Error::InvalidAlgebra(format!("declared {symmetry:?} symmetry does not hold")));
        }
        Ok(f)
    }

    pub fn from_fn(dim: usize, arity: usize, symmetry: Symmetry, f: impl Fn(&[usize]) -> f64) -> Self {
        let n = dim.pow(arity as u32);
        let coeffs = (0..n).map(|i| f(&unflatten(dim, arity, i))).collect();
        MultilinearFunction { dim, arity, symmetry, coeffs }
    }

    pub fn zero(dim: usize, arity: usize, symmetry: Symmetry) -> Self {
        MultilinearFunction { dim, arity, symmetry, coeffs: vec![0.0; dim.pow(arity as u32)] }
    }

    /// Symmetric bilinear function from a symmetric matrix.
    pub fn bilinear(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        Self::new(d, 2, Symmetry::Symmetric, (0..d * d).map(|i| m[(i / d, i % d)]).collect())
    }

    pub fn killing(alg: &LieAlgebra) -> Self {
        let k = alg.killing_form();
        Self::from_fn(alg.dim(), 2, Symmetry::Symmetric, |i| k[(i[0], i[1])])
    }

    /// The dual basis functional `e_i^*`.
    pub fn dual(dim: usize, i: usize) -> Self {
        Self::from_fn(dim, 1, Symmetry::Alternating, |j| if j[0] == i { 1.0 } else { 0.0 })
    }

    /// Polarization `f(X1..Xk) = (1/k!) sum_S (-1)^{k-|S|} p(sum_{i in S} X_i)` of a
    /// homogeneous degree-k polynomial.
    pub fn polarize(dim: usize, k: usize, p: impl Fn(&[f64]) -> f64) -> Self {
        let fact: f64 = (1..=k).map(|x| x as f64).product();
        let mut f = Self::zero(dim, k, Symmetry::Symmetric);
        for flat in 0..f.coeffs.len() {
            let idx = unflatten(dim, k, flat);
            if idx.windows(2).any(|w| w[0] > w[1]) {
                continue;
            }
            let mut total = 0.0;
            for mask in 1u32..(1 << k) {
                let mut x = vec![0.0; dim];
                for (slot, &i) in idx.iter().enumerate() {
                    if mask & (1 << slot) != 0 {
                        x[i] += 1.0;
                    }
                }
                let sign = if (k - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * p(&x);
            }
            let v = total / fact;
            for perm in permutations(k) {
                let pidx: Vec<usize> = perm.iter().map(|&s| idx[s]).collect();
                f.coeffs[flat_index(dim, &pidx)] = v;
            }
        }
        f
    }

    /// Polarization of `X -> tr(rho(X)^k)`.
    pub fn trace_power(rep: &MatrixRep, k: usize) -> Self {
        Self::polarize(rep.algebra_dim(), k, |x| {
            let m = rep.apply(x);
            let mut p = DMatrix::identity(m.nrows(), m.nrows());
            for _ in 0..k {
                p = &p * &m;
            }
            p.trace()
        })
    }

    /// Random alternating function with coefficients in [-1, 1].
    pub fn random_alternating(dim: usize, arity: usize, rng: &mut impl Rng) -> Self {
        let mut f = Self::zero(dim, arity, Symmetry::Alternating);
        for flat in 0..f.coeffs.len() {
            let idx = unflatten(dim, arity, flat);
            if idx.windows(2).all(|w| w[0] < w[1]) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                for perm in permutations(arity) {
                    let pidx: Vec<usize> = perm.iter().map(|&s| idx[s]).collect();
                    f.coeffs[flat_index(dim, &pidx)] = v * permutation_sign(&perm);
                }
            }
        }
        f
    }

    /// Random general bilinear function with coefficients in [-1, 1].
    pub fn random_bilinear(dim: usize, rng: &mut impl Rng) -> Self {
        let coeffs = (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        MultilinearFunction { dim, arity: 2, symmetry: Symmetry::General, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.coeffs[flat_index(self.dim, idx)]
    }

    /// Nonzero entries as `(index tuple, value)`.
    pub fn nonzeros(&self) -> Vec<(Vec<usize>, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (unflatten(self.dim, self.arity, i), v))
            .collect()
    }

    pub fn eval(&self, args: &[&[f64]]) -> Result<f64> {
        if args.len() != self.arity || args.iter().any(|a| a.len() != self.dim) {
            return Err(Error::DimensionMismatch("multilinear arguments".into()));
        }
        let mut total = 0.0;
        for (flat, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let idx = unflatten(self.dim, self.arity, flat);
            let mut t = c;
            for (a, &i) in args.iter().zip(&idx) {
                t *= a[i];
                if t == 0.0 {
                    break;
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Largest violation of the declared symmetry.
    pub fn symmetry_defect(&self) -> f64 {
        let sign_of = |perm: &[usize]| match self.symmetry {
            Symmetry::Symmetric => 1.0,
            Symmetry::Alternating => permutation_sign(perm),
            Symmetry::General => 0.0,
        };
        if self.symmetry == Symmetry::General {
            return 0.0;
        }
        let perms = permutations(self.arity);
        let mut worst = 0.0f64;
        for flat in 0..self.coeffs.len() {
            let idx = unflatten(self.dim, self.arity, flat);
            for p in &perms {
                let pidx: Vec<usize> = p.iter().map(|&s| idx[s]).collect();
                let other = self.coeffs[flat_index(self.dim, &pidx)];
                worst = worst.max((other - sign_of(p) * self.coeffs[flat]).abs());
            }
            if self.symmetry == Symmetry::Alternating && permutation_sign(&idx) == 0.0 {
                worst = worst.max(self.coeffs[flat].abs());
            }
        }
        worst
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.coeffs.iter_mut().for_each(|c| *c *= s);
        f
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim || self.arity != other.arity {
            return Err(Error::DimensionMismatch("adding multilinear functions".into()));
        }
        let symmetry = if self.symmetry == other.symmetry { self.symmetry } else { Symmetry::General };
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(MultilinearFunction { dim: self.dim, arity: self.arity, symmetry, coeffs })
    }

    /// Exterior product of alternating functions, determinant convention:
    /// `(a ^ b)(X_1..X_{p+q}) = (1/(p!q!)) sum_s sign(s) a(X_s..) b(X_s..)`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("wedge of multilinear functions".into()));
        }
        let (p, q, d) = (self.arity, other.arity, self.dim);
        let norm: f64 = (1..=p).chain(1..=q).map(|x| x as f64).product();
        let perms = permutations(p + q);
        Ok(Self::from_fn(d, p + q, Symmetry::Alternating, |idx| {
            let mut total = 0.0;
            for perm in &perms {
                let a: Vec<usize> = perm[..p].iter().map(|&s| idx[s]).collect();
                let b: Vec<usize> = perm[p..].iter().map(|&s| idx[s]).collect();
                total += permutation_sign(perm) * self.at(&a) * other.at(&b);
            }
            total / norm
        }))
    }

    /// Chevalley-Eilenberg differential
    /// `(df)(X_0..X_k) = sum_{i<j} (-1)^{i+j} f([X_i,X_j], X_0..^i..^j..X_k)`.
    pub fn ce_differential(&self, alg: &LieAlgebra) -> Result<Self> {
        if self.symmetry != Symmetry::Alternating {
            return Err(Error::InvalidAlgebra("Chevalley-Eilenberg differential needs an alternating function".into()));
        }
        if alg.dim() != self.dim {
            return Err(Error::DimensionMismatch("algebra and function dimensions differ".into()));
        }
        let (d, k) = (self.dim, self.arity);
        if k + 1 > d || k == 0 {
            return Ok(Self::zero(d, k + 1, Symmetry::Alternating));
        }
        Ok(Self::from_fn(d, k + 1, Symmetry::Alternating, |idx| {
            if permutation_sign(idx) == 0.0 {
                return 0.0;
            }
            let mut total = 0.0;
            for a in 0..=k {
                for b in (a + 1)..=k {
                    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                    let mut rest: Vec<usize> = Vec::with_capacity(k);
                    rest.push(0);
                    rest.extend(idx.iter().enumerate().filter(|(t, _)| *t != a && *t != b).map(|(_, &v)| v));
                    for m in 0..d {
                        let c = alg.sc(m, idx[a], idx[b]);
                        if c != 0.0 {
                            rest[0] = m;
                            total += sign * c * self.at(&rest);
                        }
                    }
                }
            }
            total
        }))
    }

    /// `max_{Z, tuples} |sum_i f(X_1, .., [Z, X_i], .., X_k)|` over basis inputs.
    pub fn invariance_residual(&self, alg: &LieAlgebra) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for z in 0..d {
            for flat in 0..self.coeffs.len() {
                let idx = unflatten(d, self.arity, flat);
                let mut total = 0.0;
                for slot in 0..self.arity {
                    let mut moved = idx.clone();
                    for m in 0..d {
                        let c = alg.sc(m, z, idx[slot]);
                        if c != 0.0 {
                            moved[slot] = m;
                            total += c * self.at(&moved);
                        }
                    }
                }
                worst = worst.max(total.abs());
            }
        }
        worst
    }

    /// `f(A., .., A.)` for a linear map `A: R^m -> R^dim`.
    pub fn pull_back(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != self.dim {
            return Err(Error::DimensionMismatch("pull back of multilinear function".into()));
        }
        let m = a.ncols();
        let nz = self.nonzeros();
        Ok(Self::from_fn(m, self.arity, self.symmetry, |idx| {
            nz.iter()
                .map(|(t, v)| v * t.iter().zip(idx).map(|(&i, &j)| a[(i, j)]).product::<f64>())
                .sum()
        }))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::presets;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn so3_dual_basis_differential() {
        let so3 = presets::algebra("so3").unwrap().algebra;
        let d = MultilinearFunction::dual(3, 0).ce_differential(&so3).unwrap();
        let e23 = MultilinearFunction::dual(3, 1).wedge(&MultilinearFunction::dual(3, 2)).unwrap();
        assert!((d.add(&e23).unwrap()).max_abs() < 1e-15);
        assert_eq!(d.at(&[1, 2]), -1.0);
    }

    #[test]
    fn d_squared_vanishes_on_random_cochains() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in ["so3", "sl2", "heisenberg", "e2", "aff2"] {
            let alg = presets::algebra(name).unwrap().algebra;
            for k in 1..alg.dim() {
                let f = MultilinearFunction::random_alternating(alg.dim(), k, &mut rng);
                let dd = f.ce_differential(&alg).unwrap().ce_differential(&alg).unwrap();
                assert!(dd.max_abs() <= 1e-12, "{name} arity {k}");
            }
        }
    }

    #[test]
    fn killing_and_trace_forms_are_invariant() {
        for name in presets::names() {
            let p = presets::algebra(name).unwrap();
            assert!(MultilinearFunction::killing(&p.algebra).invariance_residual(&p.algebra) <= 1e-10, "{name}");
            let t = MultilinearFunction::trace_power(p.rep().unwrap(), 2);
            assert!(t.invariance_residual(&p.algebra) <= 1e-10, "{name}");
        }
    }

    #[test]
    fn random_bilinear_form_is_not_invariant() {
        let so3 = presets::algebra("so3").unwrap().algebra;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        let f = MultilinearFunction::random_bilinear(3, &mut rng);
        assert!(f.invariance_residual(&so3) > 1e-3);
    }

    #[test]
    fn polarization_matches_direct_symmetrization() {
        let p = presets::algebra("sl2").unwrap();
        let rep = p.rep().unwrap();
        let f = MultilinearFunction::trace_power(rep, 3);
        let g = rep.generators();
        for idx in [[0usize, 1, 2], [1, 1, 2], [0, 0, 0]] {
            let mut direct = 0.0;
            for perm in permutations(3) {
                direct += (&g[idx[perm[0]]] * &g[idx[perm[1]]] * &g[idx[perm[2]]]).trace();
            }
            assert!((f.at(&idx) - direct / 6.0).abs() < 1e-12);
        }
        assert_eq!(f.symmetry_defect(), 0.0);
    }
}
