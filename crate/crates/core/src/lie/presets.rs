//! Built-in algebras with faithful matrix representations.

use nalgebra::DMatrix;

use super::{LieAlgebra, MatrixRep};
use crate::error::{Error, Result};

/// Defining relation of a matrix group, used for membership checks and
/// drift correction.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupRelation {
    None,
    /// `g^T g = I`
    Orthogonal,
    /// `det g = 1`
    UnitDeterminant,
    /// `g^T J g = J`
    Symplectic(DMatrix<f64>),
    /// Affine matrices whose linear block is orthogonal.
    Euclidean,
    /// Upper triangular with unit diagonal.
    Unitriangular,
}

impl GroupRelation {
    pub fn residual(&self, g: &DMatrix<f64>) -> f64 {
        let n = g.nrows();
        match self {
            GroupRelation::None => 0.0,
            GroupRelation::Orthogonal => (g.transpose() * g - DMatrix::identity(n, n)).amax(),
            GroupRelation::UnitDeterminant => (g.determinant() - 1.0).abs(),
            GroupRelation::Symplectic(j) => (g.transpose() * j * g - j).amax(),
            GroupRelation::Euclidean => {
                let a = g.view((0, 0), (n - 1, n - 1)).into_owned();
                let orth = (a.transpose() * &a - DMatrix::identity(n - 1, n - 1)).amax();
                let last = (0..n)
                    .map(|j| (g[(n - 1, j)] - if j == n - 1 { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max);
                orth.max(last)
            }
            GroupRelation::Unitriangular => {
                let mut worst = 0.0f64;
                for i in 0..n {
                    worst = worst.max((g[(i, i)] - 1.0).abs());
                    for j in 0..i {
                        worst = worst.max(g[(i, j)].abs());
                    }
                }
                worst
            }
        }
    }

    /// Nearest-point style correction back onto the group. Relations without
    /// a cheap projection are returned unchanged.
    pub fn project(&self, g: &DMatrix<f64>) -> DMatrix<f64> {
        let n = g.nrows();
        match self {
            GroupRelation::Orthogonal => polar(g),
            GroupRelation::UnitDeterminant => {
                let d = g.determinant();
                if d > 0.0 {
                    g / d.powf(1.0 / n as f64)
                } else {
                    g.clone()
                }
            }
            GroupRelation::Euclidean => {
                let mut out = g.clone();
                let a = polar(&g.view((0, 0), (n - 1, n - 1)).into_owned());
                out.view_mut((0, 0), (n - 1, n - 1)).copy_from(&a);
                for j in 0..n {
                    out[(n - 1, j)] = if j == n - 1 { 1.0 } else { 0.0 };
                }
                out
            }
            GroupRelation::Unitriangular => {
                let mut out = g.clone();
                for i in 0..n {
                    out[(i, i)] = 1.0;
                    for j in 0..i {
                        out[(i, j)] = 0.0;
                    }
                }
                out
            }
            GroupRelation::None | GroupRelation::Symplectic(_) => g.clone(),
        }
    }
}

fn polar(g: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = g.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// A named algebra with an optional faithful representation.
#[derive(Clone, Debug)]
pub struct AlgebraPreset {
    pub name: String,
    pub algebra: LieAlgebra,
    pub rep: Option<MatrixRep>,
    pub relation: GroupRelation,
}

impl AlgebraPreset {
    pub fn rep(&self) -> Result<&MatrixRep> {
        self.rep
            .as_ref()
            .ok_or_else(|| Error::InvalidRep(format!("preset `{}` has no matrix representation", self.name)))
    }
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

fn from_matrices(name: &str, gens: Vec<DMatrix<f64>>, names: Vec<String>, relation: GroupRelation) -> Result<AlgebraPreset> {
    let algebra = LieAlgebra::from_matrices(&gens, names)?;
    Ok(AlgebraPreset { name: name.into(), algebra, rep: Some(MatrixRep::new(gens)?), relation })
}

fn so_generators(n: usize) -> (Vec<DMatrix<f64>>, Vec<String>) {
    if n == 3 {
        // (L_i)_{jk} = -eps_{ijk}, so that [L1, L2] = L3
        let mut gens = vec![DMatrix::zeros(3, 3); 3];
        for (i, g) in gens.iter_mut().enumerate() {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            g[(j, k)] = -1.0;
            g[(k, j)] = 1.0;
        }
        return (gens, vec!["L1".into(), "L2".into(), "L3".into()]);
    }
    let mut gens = Vec::new();
    let mut names = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            gens.push(unit(n, j, i) - unit(n, i, j));
            names.push(format!("R{}{}", i + 1, j + 1));
        }
    }
    (gens, names)
}

fn gl_generators(n: usize) -> (Vec<DMatrix<f64>>, Vec<String>) {
    let mut gens = Vec::new();
    let mut names = Vec::new();
    for i in 0..n {
        for j in 0..n {
            gens.push(unit(n, i, j));
            names.push(format!("E{}{}", i + 1, j + 1));
        }
    }
    (gens, names)
}

/// Affine `(n+1)x(n+1)` representation of `g ⋉ R^n`, g coordinates first.
pub fn affine_generators(linear: &[DMatrix<f64>], names: &[String]) -> (Vec<DMatrix<f64>>, Vec<String>) {
    let n = linear.first().map(|m| m.nrows()).unwrap_or(0);
    let mut gens = Vec::new();
    for a in linear {
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        gens.push(m);
    }
    for i in 0..n {
        gens.push(unit(n + 1, i, n));
    }
    let mut out_names = names.to_vec();
    out_names.extend((1..=n).map(|i| format!("v{i}")));
    (gens, out_names)
}

fn sp_generators() -> (Vec<DMatrix<f64>>, Vec<String>) {
    let mut gens = Vec::new();
    let mut names = Vec::new();
    let block = |a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>| {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(&a);
        m.view_mut((0, 2), (2, 2)).copy_from(&b);
        m.view_mut((2, 0), (2, 2)).copy_from(&c);
        m.view_mut((2, 2), (2, 2)).copy_from(&(-a.transpose()));
        m
    };
    let z = DMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            gens.push(block(unit(2, i, j), z.clone(), z.clone()));
            names.push(format!("A{}{}", i + 1, j + 1));
        }
    }
    let syms = [unit(2, 0, 0), unit(2, 1, 1), unit(2, 0, 1) + unit(2, 1, 0)];
    for (k, s) in syms.iter().enumerate() {
        gens.push(block(z.clone(), s.clone(), z.clone()));
        names.push(format!("B{}", k + 1));
    }
    for (k, s) in syms.iter().enumerate() {
        gens.push(block(z.clone(), z.clone(), s.clone()));
        names.push(format!("C{}", k + 1));
    }
    (gens, names)
}

/// Standard symplectic form on R^4.
pub fn symplectic_form() -> DMatrix<f64> {
    let mut j = DMatrix::zeros(4, 4);
    j.view_mut((0, 2), (2, 2)).copy_from(&DMatrix::identity(2, 2));
    j.view_mut((2, 0), (2, 2)).copy_from(&(-DMatrix::identity(2, 2)));
    j
}

fn suffix(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix).and_then(|s| s.parse().ok())
}

/// Linear generators of a preset acting on `R^n`, when it is a linear algebra.
pub fn linear_generators(name: &str) -> Result<(Vec<DMatrix<f64>>, Vec<String>)> {
    if let Some(n) = suffix(name, "so").filter(|n| (2..=4).contains(n)) {
        return Ok(so_generators(n));
    }
    if let Some(n) = suffix(name, "gl").filter(|n| (1..=4).contains(n)) {
        return Ok(gl_generators(n));
    }
    if let Some(n) = suffix(name, "co").filter(|n| (2..=4).contains(n)) {
        let (so, so_names) = so_generators(n);
        let mut gens = vec![DMatrix::identity(n, n)];
        gens.extend(so);
        let mut names = vec!["I".to_string()];
        names.extend(so_names);
        return Ok((gens, names));
    }
    match name {
        "sl2" => Ok((
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
                unit(2, 0, 1),
                unit(2, 1, 0),
            ],
            vec!["H".into(), "E".into(), "F".into()],
        )),
        "borel" => Ok((
            vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]), unit(2, 0, 1)],
            vec!["H".into(), "E".into()],
        )),
        "sp2" => Ok(sp_generators()),
        _ => Err(Error::UnknownPreset(name.into())),
    }
}

/// Look up an algebra preset by name.
pub fn algebra(name: &str) -> Result<AlgebraPreset> {
    if let Some(n) = suffix(name, "abelian").filter(|n| (1..=8).contains(n)) {
        let gens: Vec<DMatrix<f64>> = (0..n).map(|i| unit(n + 1, i, n)).collect();
        let names = (1..=n).map(|i| format!("e{i}")).collect();
        return from_matrices(name, gens, names, GroupRelation::None);
    }
    if let Some(n) = suffix(name, "e").filter(|n| (2..=4).contains(n)) {
        let (so, so_names) = so_generators(n);
        let (gens, names) = affine_generators(&so, &so_names);
        return from_matrices(name, gens, names, GroupRelation::Euclidean);
    }
    if let Some(n) = suffix(name, "aff").filter(|n| (1..=3).contains(n)) {
        let (gl, gl_names) = gl_generators(n);
        let (gens, names) = affine_generators(&gl, &gl_names);
        return from_matrices(name, gens, names, GroupRelation::None);
    }
    if name == "heisenberg" {
        let gens = vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)];
        return from_matrices(name, gens, vec!["X".into(), "Y".into(), "Z".into()], GroupRelation::Unitriangular);
    }
    let (gens, names) = linear_generators(name)?;
    let relation = match name {
        "so2" | "so3" | "so4" => GroupRelation::Orthogonal,
        "sl2" => GroupRelation::UnitDeterminant,
        "sp2" => GroupRelation::Symplectic(symplectic_form()),
        _ => GroupRelation::None,
    };
    from_matrices(name, gens, names, relation)
}

/// Stable catalog of algebra preset names.
pub fn names() -> Vec<&'static str> {
    vec![
        "abelian1", "abelian2", "abelian3", "heisenberg", "so2", "so3", "so4", "sl2", "borel", "gl1", "gl2", "gl3",
        "gl4", "sp2", "co2", "co3", "co4", "e2", "e3", "aff1", "aff2", "aff3",
    ]
}
