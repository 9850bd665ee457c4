//! Cartan connections on explicit local models.
//!
//! Three model shapes are supported. A bare chart box carries no group
//! action. A principal model `U x G` uses base coordinates `x` followed by
//! chart coordinates `s` on `G`, with `G` acting by right translation. A
//! group-manifold model is a chart on `H` with a subgroup `G` acting on the
//! right.

mod validate;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::GroupChart;
use crate::error::{Error, Result};
use crate::forms::literal::PolyMatrix;
use crate::forms::{ChartMap, FnForm, Form, LocalForm, MatrixFn};
use crate::group;
use crate::lie::{LieAlgebra, SubalgebraEmbedding};
use crate::sampling;
use crate::taylor::{basis, TMat, Taylor};

pub use validate::*;

/// Vector field in Taylor arithmetic: component functions of the chart point.
pub type VectorField = Arc<dyn Fn(&[Taylor]) -> Vec<Taylor> + Send + Sync>;

#[derive(Clone, Debug)]
pub enum ModelKind {
    Bare { dim: usize },
    Principal { base_dim: usize, chart: GroupChart },
    GroupManifold { chart: GroupChart },
}

#[derive(Clone, Debug)]
pub struct LocalModel {
    kind: ModelKind,
    h: LieAlgebra,
    g: SubalgebraEmbedding,
    half_widths: Vec<f64>,
    /// `ad_h(iota e_i)` for the basis of `g`.
    ad_g: Vec<DMatrix<f64>>,
}

/// Default half-width of the group-coordinate box.
pub const FIBER_HALF_WIDTH: f64 = 0.6;
/// Default half-width of the base box.
pub const BASE_HALF_WIDTH: f64 = 1.0;

impl LocalModel {
    fn build(kind: ModelKind, h: LieAlgebra, g: SubalgebraEmbedding) -> Result<Self> {
        if g.inclusion().nrows() != h.dim() {
            return Err(Error::DimensionMismatch("subalgebra embedding target".into()));
        }
        let half_widths = match &kind {
            ModelKind::Bare { dim } => vec![BASE_HALF_WIDTH; *dim],
            ModelKind::Principal { base_dim, chart } => {
                if chart.dim() != g.sub().dim() {
                    return Err(Error::DimensionMismatch("group chart vs subalgebra".into()));
                }
                let mut w = vec![BASE_HALF_WIDTH; *base_dim];
                w.extend(vec![FIBER_HALF_WIDTH; chart.dim()]);
                w
            }
            ModelKind::GroupManifold { chart } => {
                if chart.dim() != h.dim() {
                    return Err(Error::DimensionMismatch("group chart vs algebra".into()));
                }
                vec![FIBER_HALF_WIDTH; chart.dim()]
            }
        };
        let ad_g = (0..g.sub().dim()).map(|i| h.ad(&g.embed(&g.sub().basis_vector(i))).unwrap()).collect();
        Ok(LocalModel { kind, h, g, half_widths, ad_g })
    }

    /// Chart box in `R^dim` without group action.
    pub fn bare(dim: usize, h: LieAlgebra, g: SubalgebraEmbedding) -> Result<Self> {
        Self::build(ModelKind::Bare { dim }, h, g)
    }

    /// `U x G` with `U` a box in `R^base_dim` and `G` charted by `chart`.
    pub fn principal(base_dim: usize, chart: GroupChart, h: LieAlgebra, g: SubalgebraEmbedding) -> Result<Self> {
        Self::build(ModelKind::Principal { base_dim, chart }, h, g)
    }

    /// A chart on the group of `h` with `g` acting on the right.
    pub fn group_manifold(chart: GroupChart, g: SubalgebraEmbedding) -> Result<Self> {
        let h = chart.algebra().clone();
        Self::build(ModelKind::GroupManifold { chart }, h, g)
    }

    pub fn with_half_widths(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.chart_dim() {
            return Err(Error::DimensionMismatch("half-width count".into()));
        }
        self.half_widths = w;
        Ok(self)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn h(&self) -> &LieAlgebra {
        &self.h
    }

    pub fn g(&self) -> &SubalgebraEmbedding {
        &self.g
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn chart_dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn base_dim(&self) -> usize {
        match &self.kind {
            ModelKind::Bare { dim } => *dim,
            ModelKind::Principal { base_dim, .. } => *base_dim,
            ModelKind::GroupManifold { .. } => 0,
        }
    }

    pub fn has_action(&self) -> bool {
        !matches!(self.kind, ModelKind::Bare { .. })
    }

    /// `ad_h(iota e_i)` matrices for the basis of `g`.
    pub fn ad_g(&self) -> &[DMatrix<f64>] {
        &self.ad_g
    }

    pub fn samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sampling::box_points(&self.half_widths, count, seed)
    }

    /// Small algebra elements of `g` used as group samples `exp(z)`.
    pub fn group_samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sampling::box_points(&vec![0.35; self.g.sub().dim()], count, seed ^ 0xA5A5)
    }

    /// `exp(-ad_h(iota z))`, the action of `exp(z)^{-1}` on `h`.
    pub fn ad_h_inverse(&self, z: &[f64]) -> DMatrix<f64> {
        let n = self.h.dim();
        let mut m = DMatrix::zeros(n, n);
        for (a, zi) in self.ad_g.iter().zip(z) {
            m -= a * *zi;
        }
        m.exp()
    }

    /// Fundamental vector field of `X` in `g`.
    pub fn fundamental_field(&self, x: &[f64]) -> Option<VectorField> {
        let x = x.to_vec();
        match &self.kind {
            ModelKind::Bare { .. } => None,
            ModelKind::Principal { base_dim, chart } => {
                let (m, chart) = (*base_dim, chart.clone());
                Some(Arc::new(move |y: &[Taylor]| {
                    let b = y[0].basis().clone();
                    let l = chart.left_trivialization(&y[m..]);
                    let rhs = TMat::from_matrix(&b, &DMatrix::from_column_slice(x.len(), 1, &x));
                    let sol = l.inverse().expect("left trivialization is invertible").matmul(&rhs);
                    let mut out = vec![Taylor::zero(&b); m];
                    out.extend((0..chart.dim()).map(|i| sol.get(i, 0).clone()));
                    out
                }))
            }
            ModelKind::GroupManifold { chart } => {
                let (chart, ix) = (chart.clone(), self.g.embed(&x));
                Some(Arc::new(move |y: &[Taylor]| {
                    let b = y[0].basis().clone();
                    let l = chart.left_trivialization(y);
                    let rhs = TMat::from_matrix(&b, &DMatrix::from_column_slice(ix.len(), 1, &ix));
                    let sol = l.inverse().expect("left trivialization is invertible").matmul(&rhs);
                    (0..chart.dim()).map(|i| sol.get(i, 0).clone()).collect()
                }))
            }
        }
    }

    /// Right action by `exp(z)`, `z` in `g`: the image point and the tangent map.
    pub fn right_action(&self, y: &[f64], z: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        match &self.kind {
            ModelKind::Bare { .. } => Err(Error::ModelMismatch),
            ModelKind::Principal { base_dim, chart } => {
                let m = *base_dim;
                let g = group::exp(chart.rep(), z);
                let s2 = chart.right_translate(&y[m..], &g)?;
                let t = chart.right_translate_tangent(&y[m..], &s2, z)?;
                let n = self.chart_dim();
                let mut full = DMatrix::identity(n, n);
                full.view_mut((m, m), (chart.dim(), chart.dim())).copy_from(&t);
                let mut y2 = y[..m].to_vec();
                y2.extend(s2);
                Ok((y2, full))
            }
            ModelKind::GroupManifold { chart } => {
                let iz = self.g.embed(z);
                let g = group::exp(chart.rep(), &iz);
                let s2 = chart.right_translate(y, &g)?;
                let t = chart.right_translate_tangent(y, &s2, &iz)?;
                Ok((s2, t))
            }
        }
    }
}

/// An `h`-valued 1-form on a local model.
#[derive(Clone)]
pub struct GeneralizedCartanConnection {
    model: Arc<LocalModel>,
    kappa: Form,
}

impl std::fmt::Debug for GeneralizedCartanConnection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GeneralizedCartanConnection(dim {} -> {})", self.kappa.chart_dim(), self.kappa.target_dim())
    }
}

impl GeneralizedCartanConnection {
    pub fn new(model: Arc<LocalModel>, kappa: Form) -> Result<Self> {
        if kappa.degree() != 1 || kappa.chart_dim() != model.chart_dim() || kappa.target_dim() != model.h().dim() {
            return Err(Error::DimensionMismatch(format!(
                "connection form must be an h-valued 1-form on R^{}",
                model.chart_dim()
            )));
        }
        Ok(GeneralizedCartanConnection { model, kappa })
    }

    pub fn model(&self) -> &Arc<LocalModel> {
        &self.model
    }

    pub fn kappa(&self) -> &Form {
        &self.kappa
    }

    pub fn with_kappa(&self, kappa: Form) -> Result<Self> {
        Self::new(self.model.clone(), kappa)
    }
}

/// Connection whose form is an absolute parallelism at the sampled points.
#[derive(Clone, Debug)]
pub struct CartanConnection {
    inner: GeneralizedCartanConnection,
    min_singular_value: f64,
}

impl CartanConnection {
    /// Checks nondegeneracy at `samples`.
    pub fn new(inner: GeneralizedCartanConnection, samples: &[Vec<f64>]) -> Result<Self> {
        let n = inner.model.chart_dim();
        if n != inner.model.h().dim() {
            return Err(Error::DimensionMismatch("Cartan connections need dim P = dim h".into()));
        }
        let s = validate::nondegeneracy(&inner, samples);
        if s <= 1e-12 * inner.kappa.norm_at(&samples[0]).max(1.0) {
            return Err(Error::SingularCoframe(s));
        }
        Ok(CartanConnection { inner, min_singular_value: s })
    }

    pub fn min_singular_value(&self) -> f64 {
        self.min_singular_value
    }

    pub fn generalized(&self) -> &GeneralizedCartanConnection {
        &self.inner
    }
}

impl std::ops::Deref for CartanConnection {
    type Target = GeneralizedCartanConnection;
    fn deref(&self) -> &Self::Target {
        &self.inner
    }
}

/// `kappa(x, s)(xi, sigma) = Ad(a(s)^{-1}) A(x) xi + iota(L(s) sigma)`.
pub fn make_principal_cartan(model: Arc<LocalModel>, a: PolyMatrix) -> Result<GeneralizedCartanConnection> {
    let m = model.base_dim();
    let hd = model.h().dim();
    if a.rows != hd || a.cols != m || a.nvars != m {
        return Err(Error::DimensionMismatch(format!("A must be a {hd} x {m} polynomial matrix in {m} variables")));
    }
    make_principal_cartan_with(model, Arc::new(move |x: &[Taylor]| a.eval_taylor(x)))
}

/// As [`make_principal_cartan`] with `A` any Taylor-expandable `h x m` field
/// of the base coordinates.
pub fn make_principal_cartan_with(model: Arc<LocalModel>, a: MatrixFn) -> Result<GeneralizedCartanConnection> {
    let (m, chart) = match model.kind() {
        ModelKind::Principal { base_dim, chart } => (*base_dim, chart.clone()),
        _ => return Err(Error::ModelMismatch),
    };
    let hd = model.h().dim();
    let inc = model.g().inclusion().clone();
    let ad_g = model.ad_g().to_vec();
    let n = model.chart_dim();
    let k = chart.dim();
    let form = FnForm::new(n, 1, hd, move |y, order| {
        let b = basis(n, order);
        let yt = Taylor::point(&b, y);
        let mut mat = TMat::zeros(&b, hd, n);
        if m > 0 {
            let twisted = if k == 0 { a(&yt[..m]) } else { chart.rep_of_inverse(&yt[m..], &ad_g).matmul(&a(&yt[..m])) };
            for i in 0..hd {
                for j in 0..m {
                    mat.set(i, j, twisted.get(i, j).clone());
                }
            }
        }
        if k == 0 {
            return LocalForm::one_form(&mat);
        }
        let vert = chart.left_trivialization(&yt[m..]).premul_const(&inc);
        for i in 0..hd {
            for j in 0..k {
                mat.set(i, m + j, vert.get(i, j).clone());
            }
        }
        LocalForm::one_form(&mat)
    });
    GeneralizedCartanConnection::new(model, Form::new(form))
}

/// The left Maurer-Cartan form `a^{-1} da` on a group-manifold model.
pub fn maurer_cartan(model: Arc<LocalModel>) -> Result<GeneralizedCartanConnection> {
    let chart = match model.kind() {
        ModelKind::GroupManifold { chart } => chart.clone(),
        ModelKind::Principal { base_dim: 0, chart } if chart.dim() == model.h().dim() => chart.clone(),
        _ => return Err(Error::ModelMismatch),
    };
    let n = chart.dim();
    let inc = model.g().inclusion().clone();
    let full = matches!(model.kind(), ModelKind::Principal { .. });
    let form = FnForm::new(n, 1, n, move |y, order| {
        let b = basis(n, order);
        let l = chart.left_trivialization(&Taylor::point(&b, y));
        LocalForm::one_form(&if full { l.premul_const(&inc) } else { l })
    });
    GeneralizedCartanConnection::new(model, Form::new(form))
}

/// Maurer-Cartan form of a preset group as a group-manifold model with the
/// subalgebra spanned by `sub_indices`.
pub fn maurer_cartan_preset(name: &str, sub_indices: &[usize]) -> Result<GeneralizedCartanConnection> {
    let p = crate::lie::presets::algebra(name)?;
    let chart = GroupChart::first_kind(p.algebra.clone(), p.rep()?.clone(), p.relation.clone())?;
    let g = SubalgebraEmbedding::from_indices(&p.algebra, sub_indices)?;
    maurer_cartan(Arc::new(LocalModel::group_manifold(chart, g)?))
}

/// Principal model `R^m x G` for the subalgebra of `h` spanned by
/// `sub_indices`, with `G` charted through a preset representation of `h`.
pub fn principal_model(h_preset: &str, sub_indices: &[usize], base_dim: usize) -> Result<Arc<LocalModel>> {
    let p = crate::lie::presets::algebra(h_preset)?;
    let g = SubalgebraEmbedding::from_indices(&p.algebra, sub_indices)?;
    let rep_h = p.rep()?;
    let gens: Vec<DMatrix<f64>> = sub_indices.iter().map(|&i| rep_h.generators()[i].clone()).collect();
    let rep = crate::lie::MatrixRep::new(gens)?;
    let chart = GroupChart::first_kind(g.sub().clone(), rep, p.relation.clone())?;
    Ok(Arc::new(LocalModel::principal(base_dim, chart, p.algebra.clone(), g)?))
}

/// Random polynomial `A: R^m -> Hom(R^m, h)` with coefficients of size `scale`.
pub fn random_coefficients(h_dim: usize, m: usize, degree: usize, scale: f64, rng: &mut impl rand::Rng) -> PolyMatrix {
    let mut a = PolyMatrix::zero(h_dim, m, m);
    for i in 0..h_dim {
        for j in 0..m {
            a.set(i, j, crate::poly::Polynomial::random(m, degree, scale, rng));
        }
    }
    a
}

/// Constant `A`.
pub fn constant_coefficients(a: &DMatrix<f64>) -> PolyMatrix {
    let m = a.ncols();
    let mut out = PolyMatrix::zero(a.nrows(), m, m);
    for i in 0..a.nrows() {
        for j in 0..m {
            out.set(i, j, crate::poly::Polynomial::constant(m, a[(i, j)]));
        }
    }
    out
}

/// Horizontal equivariant form `Psi(x, a) = rho(a^{-1}) Psi_0(x)` on a
/// principal model, built from a form `Psi_0` on the base and a
/// representation `rho` of `h` on `W`.
pub fn equivariant_form(model: &LocalModel, base: &Form, rho: &crate::lie::MatrixRep) -> Result<Form> {
    let (m, chart) = match model.kind() {
        ModelKind::Principal { base_dim, chart } => (*base_dim, chart.clone()),
        _ => return Err(Error::ModelMismatch),
    };
    if base.chart_dim() != m || base.target_dim() != rho.dim() {
        return Err(Error::DimensionMismatch("base form shape".into()));
    }
    let n = model.chart_dim();
    let proj = DMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    let pulled = base.pullback(&ChartMap::affine(proj, vec![0.0; m]))?;
    let mats: Vec<DMatrix<f64>> = (0..model.g().sub().dim())
        .map(|i| rho.apply(&model.g().embed(&model.g().sub().basis_vector(i))))
        .collect();
    let w = rho.dim();
    Ok(pulled.twist(w, Arc::new(move |y: &[Taylor]| chart.rep_of_inverse(&y[m..], &mats))))
}
