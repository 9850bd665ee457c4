//! Extension of a local `G`-model `U x G` to the `H`-model `U x H` for a
//! subgroup `G` of `H`, and the transport `q_flat` of connections and
//! horizontal equivariant forms.
//!
//! A point `(x, b)` of `U x H` is identified with the class of `((x, e), b)`.
//! Both groups use first-kind charts, so the embedding `U x G -> U x H`,
//! `(x, a) -> (x, a)`, is linear in coordinates: `(x, s) -> (x, iota s)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cartan::{self, GeneralizedCartanConnection, LocalModel, ModelKind};
use crate::chart::{ChartKind, GroupChart};
use crate::error::{Error, Result};
use crate::forms::{ChartMap, FnForm, Form, LocalForm};
use crate::group;
use crate::lie::presets::GroupRelation;
use crate::lie::{LieAlgebra, MatrixRep, SubalgebraEmbedding};
use crate::linalg;
use crate::taylor::{basis, TMat, Taylor};

#[derive(Clone, Debug)]
pub struct ExtendedModel {
    inner: Arc<LocalModel>,
    outer: Arc<LocalModel>,
    inner_chart: GroupChart,
    outer_chart: GroupChart,
    base_dim: usize,
}

/// Tolerance on `G` generators matching `rho_H(iota X)`.
pub const CLOSURE_TOL: f64 = 1e-10;
/// Tolerance on sampled `G` elements satisfying the defining relation of `H`.
pub const SUBGROUP_TOL: f64 = 1e-8;

impl ExtendedModel {
    /// `inner` must be a principal model with a first-kind chart whose
    /// representation is `rho_H` restricted along the embedding.
    pub fn new(inner: Arc<LocalModel>, outer_rep: MatrixRep, relation: GroupRelation) -> Result<Self> {
        let (m, inner_chart) = match inner.kind() {
            ModelKind::Principal { base_dim, chart } if *chart.kind() == ChartKind::First => (*base_dim, chart.clone()),
            _ => return Err(Error::ModelMismatch),
        };
        let h = inner.h().clone();
        if outer_rep.algebra_dim() != h.dim() || outer_rep.dim() != inner_chart.rep().dim() {
            return Err(Error::DimensionMismatch("outer representation".into()));
        }
        let g = inner.g();
        for i in 0..g.sub().dim() {
            let want = outer_rep.apply(&g.embed(&g.sub().basis_vector(i)));
            let res = (&want - &inner_chart.rep().generators()[i]).amax();
            if res > CLOSURE_TOL {
                return Err(Error::NotInAlgebra(res));
            }
        }
        for z in inner.group_samples(16, 0) {
            let a = group::exp(inner_chart.rep(), &z);
            let r = relation.residual(&a);
            if r > SUBGROUP_TOL {
                return Err(Error::SubgroupViolation(r));
            }
        }
        let outer_chart = GroupChart::first_kind(h.clone(), outer_rep, relation)?;
        let outer = Arc::new(LocalModel::principal(m, outer_chart.clone(), h.clone(), SubalgebraEmbedding::identity(&h))?);
        Ok(ExtendedModel { inner, outer, inner_chart, outer_chart, base_dim: m })
    }

    /// `U x G` for the subalgebra of a preset `h` spanned by the columns of
    /// `inclusion`, extended to `U x H`.
    pub fn from_preset(h_preset: &str, inclusion: DMatrix<f64>, names: Vec<String>, base_dim: usize) -> Result<Self> {
        let p = crate::lie::presets::algebra(h_preset)?;
        let rep_h = p.rep()?.clone();
        let g = SubalgebraEmbedding::from_inclusion(&p.algebra, inclusion, names)?;
        let gens = (0..g.sub().dim()).map(|i| rep_h.apply(&g.embed(&g.sub().basis_vector(i)))).collect();
        let chart = GroupChart::first_kind(g.sub().clone(), MatrixRep::new(gens)?, p.relation.clone())?;
        let inner = Arc::new(LocalModel::principal(base_dim, chart, p.algebra.clone(), g)?);
        Self::new(inner, rep_h, p.relation)
    }

    /// `SO(2)` embedded in `SL(2)` as the rotation generator `F - E`.
    pub fn so2_in_sl2(base_dim: usize) -> Result<Self> {
        Self::from_preset("sl2", DMatrix::from_column_slice(3, 1, &[0.0, -1.0, 1.0]), vec!["R".into()], base_dim)
    }

    pub fn inner(&self) -> &Arc<LocalModel> {
        &self.inner
    }

    pub fn outer(&self) -> &Arc<LocalModel> {
        &self.outer
    }

    pub fn h(&self) -> &LieAlgebra {
        self.inner.h()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    /// `(x, s_H) -> (x, 0)` from the outer chart to the inner chart.
    pub fn section_map(&self) -> ChartMap {
        let (no, ni) = (self.outer.chart_dim(), self.inner.chart_dim());
        ChartMap::affine(DMatrix::from_fn(ni, no, |i, j| if i == j && i < self.base_dim { 1.0 } else { 0.0 }), vec![0.0; ni])
    }

    /// `(x, s_G) -> (x, iota s_G)` from the inner chart to the outer chart.
    pub fn embedding_map(&self) -> ChartMap {
        let (no, ni, m) = (self.outer.chart_dim(), self.inner.chart_dim(), self.base_dim);
        let inc = self.inner.g().inclusion().clone();
        ChartMap::affine(
            DMatrix::from_fn(no, ni, |i, j| match (i < m, j < m) {
                (true, true) => (i == j) as u8 as f64,
                (false, false) => inc[(i - m, j - m)],
                _ => 0.0,
            }),
            vec![0.0; no],
        )
    }

    fn twist(&self, form: Form, mats: Vec<DMatrix<f64>>) -> Form {
        let chart = self.outer_chart.clone();
        let m = self.base_dim;
        let w = mats[0].nrows();
        form.twist(w, Arc::new(move |y: &[Taylor]| chart.rep_of_inverse(&y[m..], &mats)))
    }

    /// Maurer-Cartan part `b^{-1} db` of the outer model.
    fn vertical_form(&self) -> Form {
        let chart = self.outer_chart.clone();
        let (m, n, hd) = (self.base_dim, self.outer.chart_dim(), self.h().dim());
        Form::new(FnForm::new(n, 1, hd, move |y, order| {
            let b = basis(n, order);
            let yt = Taylor::point(&b, y);
            let l = chart.left_trivialization(&yt[m..]);
            let mut mat = TMat::zeros(&b, hd, n);
            for i in 0..hd {
                for j in 0..hd {
                    mat.set(i, m + j, l.get(i, j).clone());
                }
            }
            LocalForm::one_form(&mat)
        }))
    }
}

fn check_inner(conn: &GeneralizedCartanConnection, ext: &ExtendedModel) -> Result<()> {
    let a = conn.model();
    if a.chart_dim() != ext.inner.chart_dim() || a.h() != ext.h() || a.g().inclusion() != ext.inner.g().inclusion() {
        return Err(Error::ModelMismatch);
    }
    Ok(())
}

/// `(q_flat kappa)(xi, b Y) = Y + Ad(b^{-1}) kappa_(x,e)(xi)`.
pub fn q_flat_connection(conn: &GeneralizedCartanConnection, ext: &ExtendedModel) -> Result<GeneralizedCartanConnection> {
    check_inner(conn, ext)?;
    let pulled = conn.kappa().pullback(&ext.section_map())?;
    let ad: Vec<DMatrix<f64>> = (0..ext.h().dim()).map(|i| ext.h().ad_basis(i)).collect();
    let horizontal = ext.twist(pulled, ad);
    GeneralizedCartanConnection::new(ext.outer.clone(), ext.vertical_form().add(&horizontal)?)
}

/// Restriction of a principal `H`-connection along `(x, a) -> (x, a)`.
pub fn q_flat_inverse(omega: &GeneralizedCartanConnection, ext: &ExtendedModel) -> Result<GeneralizedCartanConnection> {
    if omega.model().chart_dim() != ext.outer.chart_dim() || omega.model().h() != ext.h() {
        return Err(Error::ModelMismatch);
    }
    GeneralizedCartanConnection::new(ext.inner.clone(), omega.kappa().pullback(&ext.embedding_map())?)
}

/// `(q_flat Psi)_(x,b) = rho(b^{-1}) Psi_(x,e)` on horizontal forms.
pub fn q_flat_form(psi: &Form, ext: &ExtendedModel, rho: &MatrixRep, samples: &[Vec<f64>]) -> Result<Form> {
    if psi.chart_dim() != ext.inner.chart_dim() || rho.algebra_dim() != ext.h().dim() || psi.target_dim() != rho.dim() {
        return Err(Error::DimensionMismatch("form, model and representation disagree".into()));
    }
    let res = cartan::horizontality_residual(psi, &ext.inner, samples)?;
    if res > cartan::HORIZONTAL_TOL * cartan::form_scale(psi, samples, 0) {
        return Err(Error::NotHorizontal(res));
    }
    let pulled = psi.pullback(&ext.section_map())?;
    Ok(ext.twist(pulled, rho.generators().to_vec()))
}

/// Restriction of a horizontal `H`-equivariant form back to `U x G`.
pub fn q_flat_form_inverse(phi: &Form, ext: &ExtendedModel) -> Result<Form> {
    phi.pullback(&ext.embedding_map())
}

/// Residual of `q_flat kappa` on `Tq(X_u, b Y)` at general `u = (x, a)`
/// against `Y + Ad(b^{-1}) kappa_u(X_u)`, over sampled `(u, b)` pairs.
pub fn well_definedness_residual(
    conn: &GeneralizedCartanConnection,
    qk: &GeneralizedCartanConnection,
    ext: &ExtendedModel,
    samples: &[Vec<f64>],
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, hd) = (ext.base_dim, ext.h().dim());
    let ni = ext.inner.chart_dim();
    let mut worst = 0.0f64;
    for u in samples {
        let yb: Vec<f64> = (0..hd).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let yv: Vec<f64> = (0..hd).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xu: Vec<f64> = (0..ni).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = ext.inner_chart.element(&u[m..]);
        let b = group::exp(ext.outer_chart.rep(), &yb);
        let s_ab = ext.outer_chart.log_coords(&(&a * &b))?;
        let ad_b_inv = group::exp_ad(ext.h(), &yb.iter().map(|v| -v).collect::<Vec<_>>());
        let lg = ext.inner_chart.left_trivialization_at(&u[m..]);
        let sigma_g = &lg * DVector::from_column_slice(&xu[m..]);
        let inc = ext.inner.g().inclusion();
        let body = &ad_b_inv * (inc * sigma_g) + DVector::from_column_slice(&yv);
        let lh = ext.outer_chart.left_trivialization_at(&s_ab);
        let sigma_h = lh.lu().solve(&body).ok_or(Error::SingularFrame)?;
        let mut point = u[..m].to_vec();
        point.extend(&s_ab);
        let mut tangent = xu[..m].to_vec();
        tangent.extend(sigma_h.iter());
        let lhs = qk.kappa().eval(&point, &[&tangent]);
        let k = DVector::from_vec(conn.kappa().eval(u, &[&xu]));
        let rhs = DVector::from_column_slice(&yv) + ad_b_inv * k;
        worst = worst.max(lhs.iter().zip(rhs.iter()).fold(0.0, |w, (p, q)| w.max((p - q).abs())));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum RestrictionVerdict {
    Cartan,
    NotCartan,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RestrictionReport {
    /// `dim(T_u P intersect ker omega)` at each sample.
    pub intersection_dims: Vec<usize>,
    pub verdict: RestrictionVerdict,
    /// Whether `ker omega` lies in `T_u P` at every sample.
    pub horizontal_in_subbundle: bool,
}

/// Compares `omega` restricted to `U x G` with the Cartan condition.
pub fn restrict_connection(omega: &GeneralizedCartanConnection, ext: &ExtendedModel, samples: &[Vec<f64>]) -> RestrictionReport {
    let dphi = ext.embedding_map().jacobian(&samples[0]);
    let ni = ext.inner.chart_dim();
    let emb = ext.embedding_map();
    let mut dims = Vec::new();
    let mut contained = true;
    for u in samples {
        let p = emb.eval(u);
        let w = omega.kappa().at(&p).value_matrix();
        dims.push(ni - linalg::rank(&(&w * &dphi), linalg::RANK_TOL));
        let ker = linalg::nullspace(&w, linalg::RANK_TOL);
        let both = DMatrix::from_fn(dphi.nrows(), dphi.ncols() + ker.ncols(), |i, j| {
            if j < dphi.ncols() { dphi[(i, j)] } else { ker[(i, j - dphi.ncols())] }
        });
        contained &= linalg::rank(&both, linalg::RANK_TOL) == linalg::rank(&dphi, linalg::RANK_TOL);
    }
    let verdict = if ni != ext.h().dim() {
        RestrictionVerdict::NotApplicable
    } else if dims.iter().all(|&d| d == 0) {
        RestrictionVerdict::Cartan
    } else {
        RestrictionVerdict::NotCartan
    };
    RestrictionReport { intersection_dims: dims, verdict, horizontal_in_subbundle: contained }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{
        covariant_derivative, curvature, equivariance_residual, equivariance_residual_with, equivariant_form, form_norm,
        form_scale, make_principal_cartan, random_coefficients, reproduction_residual,
    };
    use crate::chern_weil::chern_weil_form;
    use crate::forms::PolyForm;
    use crate::lie::MultilinearFunction;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_conn(ext: &ExtendedModel, seed: u64) -> GeneralizedCartanConnection {
        make_principal_cartan(ext.inner().clone(), random_coefficients(3, ext.base_dim(), 2, 0.6, &mut rng(seed))).unwrap()
    }

    fn diff(a: &Form, b: &Form, samples: &[Vec<f64>]) -> f64 {
        form_norm(&a.sub(b).unwrap(), samples)
    }

    #[test]
    fn q_flat_is_a_principal_connection_and_inverts() {
        let ext = ExtendedModel::so2_in_sl2(2).unwrap();
        let si = ext.inner().samples(16, 1);
        let so = ext.outer().samples(16, 1);
        let gs = ext.outer().group_samples(20, 2);
        for seed in 0..2 {
            let kappa = random_conn(&ext, seed);
            let qk = q_flat_connection(&kappa, &ext).unwrap();
            assert!(reproduction_residual(&qk, &so).unwrap() <= 1e-8);
            assert!(equivariance_residual(&qk, &so, &gs).unwrap() <= 1e-7);
            assert!(well_definedness_residual(&kappa, &qk, &ext, &si, seed).unwrap() <= 1e-7);
            let back = q_flat_inverse(&qk, &ext).unwrap();
            assert!(diff(back.kappa(), kappa.kappa(), &si) <= 1e-8);
            let again = q_flat_connection(&back, &ext).unwrap();
            assert!(diff(again.kappa(), qk.kappa(), &so) <= 1e-8);
        }
    }

    #[test]
    fn trivial_extension_is_the_identity() {
        let ext = ExtendedModel::from_preset("sl2", DMatrix::identity(3, 3), vec!["H".into(), "E".into(), "F".into()], 1).unwrap();
        let kappa = random_conn(&ext, 4);
        let qk = q_flat_connection(&kappa, &ext).unwrap();
        assert!(diff(qk.kappa(), kappa.kappa(), &ext.inner().samples(8, 3)) <= 1e-12);
    }

    #[test]
    fn forms_transport_and_intertwine() {
        let ext = ExtendedModel::so2_in_sl2(2).unwrap();
        let si = ext.inner().samples(12, 4);
        let so = ext.outer().samples(12, 4);
        let ad = ext.h().ad_rep();
        let kappa = random_conn(&ext, 7);
        let qk = q_flat_connection(&kappa, &ext).unwrap();
        for p in 0..3 {
            let base = Form::new(PolyForm::random(2, p, 3, 2, &mut rng(10 + p as u64)));
            let psi = equivariant_form(ext.inner(), &base, &ad).unwrap();
            let qpsi = q_flat_form(&psi, &ext, &ad, &si).unwrap();
            assert!(diff(&q_flat_form_inverse(&qpsi, &ext).unwrap(), &psi, &si) <= 1e-8);
            assert!(cartan::horizontality_residual(&qpsi, ext.outer(), &so).unwrap() <= 1e-8);
            let outer = ext.outer().clone();
            let gs = outer.group_samples(12, 5);
            assert!(equivariance_residual_with(&qpsi, &outer, &|z| outer.ad_h_inverse(z), &so, &gs).unwrap() <= 1e-7);
            let lhs = covariant_derivative(&qk, &ad, &qpsi, &so).unwrap();
            let rhs = q_flat_form(&covariant_derivative(&kappa, &ad, &psi, &si).unwrap(), &ext, &ad, &si).unwrap();
            assert!(diff(&lhs, &rhs, &so) <= 1e-5 * form_scale(&lhs, &so, 0));
            if p == 0 {
                // rho(b^{-1}) Psi(x, e), pointwise
                let y = &so[0];
                let b = ext.outer_chart.element(&y[2..]).try_inverse().unwrap();
                let want = ad_matrix(&ext, &b) * DVector::from_vec(psi.eval(&[y[0], y[1], 0.0], &[]));
                let got = qpsi.eval(y, &[]);
                assert!(got.iter().zip(want.iter()).all(|(a, b)| (a - b).abs() <= 1e-10));
            }
        }
        assert!(form_norm(&q_flat_form(&Form::zero(3, 1, 3), &ext, &ad, &si).unwrap(), &so) == 0.0);
        assert!(matches!(q_flat_form(kappa.kappa(), &ext, &ad, &si), Err(Error::NotHorizontal(_))));
    }

    fn ad_matrix(ext: &ExtendedModel, b: &DMatrix<f64>) -> DMatrix<f64> {
        let rep = ext.outer_chart.rep();
        DMatrix::from_fn(3, 3, |i, j| group::ad_action(rep, b, &ext.h().basis_vector(j)).unwrap()[i])
    }

    #[test]
    fn curvature_and_characteristic_forms_correspond() {
        let ext = ExtendedModel::so2_in_sl2(2).unwrap();
        let si = ext.inner().samples(12, 6);
        let so = ext.outer().samples(12, 6);
        let kappa = random_conn(&ext, 9);
        let qk = q_flat_connection(&kappa, &ext).unwrap();
        let ad = ext.h().ad_rep();
        let qkk = q_flat_form(&curvature(&kappa), &ext, &ad, &si).unwrap();
        let kq = curvature(&qk);
        assert!(diff(&qkk, &kq, &so) <= 1e-6 * form_scale(&kq, &so, 0));
        let f = MultilinearFunction::killing(ext.h());
        let fk = chern_weil_form(&f, &kappa).unwrap();
        let fq = chern_weil_form(&f, &qk).unwrap().pullback(&ext.embedding_map()).unwrap();
        assert!(diff(&fk, &fq, &si) <= 1e-8);
    }

    #[test]
    fn restriction_report() {
        let ext = ExtendedModel::so2_in_sl2(2).unwrap();
        let si = ext.inner().samples(8, 7);
        // Cartan: A(x) invertible modulo so(2)
        let a = cartan::constant_coefficients(&DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0]));
        let kappa = make_principal_cartan(ext.inner().clone(), a).unwrap();
        let r = restrict_connection(&q_flat_connection(&kappa, &ext).unwrap(), &ext, &si);
        assert_eq!(r.verdict, RestrictionVerdict::Cartan);
        assert!(r.intersection_dims.iter().all(|&d| d == 0));
        assert!(!r.horizontal_in_subbundle);
        // induced from an so(2)-connection: horizontal spaces stay inside U x G
        let a = cartan::constant_coefficients(&DMatrix::from_row_slice(3, 2, &[0.0, 0.0, -0.5, 0.3, 0.5, -0.3]));
        let kappa = make_principal_cartan(ext.inner().clone(), a).unwrap();
        let r = restrict_connection(&q_flat_connection(&kappa, &ext).unwrap(), &ext, &si);
        assert!(r.horizontal_in_subbundle);
        assert_eq!(r.verdict, RestrictionVerdict::NotCartan);
        let ext1 = ExtendedModel::so2_in_sl2(1).unwrap();
        let kappa = random_conn(&ext1, 1);
        let r = restrict_connection(&q_flat_connection(&kappa, &ext1).unwrap(), &ext1, &ext1.inner().samples(4, 1));
        assert_eq!(r.verdict, RestrictionVerdict::NotApplicable);
    }

    #[test]
    fn groups_outside_the_outer_relation_are_rejected() {
        let p = crate::lie::presets::algebra("gl2").unwrap();
        let g = SubalgebraEmbedding::from_inclusion(&p.algebra, DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 1.0]), vec!["I".into()]).unwrap();
        let rep = MatrixRep::new(vec![DMatrix::identity(2, 2)]).unwrap();
        let chart = GroupChart::first_kind(g.sub().clone(), rep, GroupRelation::None).unwrap();
        let inner = Arc::new(LocalModel::principal(1, chart, p.algebra.clone(), g).unwrap());
        let err = ExtendedModel::new(inner, p.rep().unwrap().clone(), GroupRelation::UnitDeterminant).unwrap_err();
        assert!(matches!(err, Error::SubgroupViolation(_)));
    }
}
