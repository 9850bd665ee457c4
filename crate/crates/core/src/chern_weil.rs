//! Characteristic forms `f(K, .., K)` of connections and their transgressions.

use std::sync::Arc;

use crate::cartan::{curvature, GeneralizedCartanConnection};
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::lie::{MultilinearFunction, Symmetry};

/// Invariance tolerance on `f` before forming characteristic forms.
pub const INVARIANCE_TOL: f64 = 1e-8;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess, Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn check(f: &MultilinearFunction, conn: &GeneralizedCartanConnection) -> Result<()> {
    if f.dim() != conn.model().h().dim() {
        return Err(Error::DimensionMismatch("invariant function vs algebra".into()));
    }
    if f.symmetry() != Symmetry::Symmetric {
        return Err(Error::NotInvariant(f.symmetry_defect().max(f64::MIN_POSITIVE)));
    }
    let r = f.invariance_residual(conn.model().h());
    if r > INVARIANCE_TOL * f.max_abs().max(1.0) {
        return Err(Error::NotInvariant(r));
    }
    Ok(())
}

/// `f^K = f(K, .., K)`.
pub fn chern_weil_form(f: &MultilinearFunction, conn: &GeneralizedCartanConnection) -> Result<Form> {
    check(f, conn)?;
    let k = curvature(conn);
    Form::apply_multilinear(f, &vec![k; f.arity()])
}

fn same_model(a: &GeneralizedCartanConnection, b: &GeneralizedCartanConnection) -> bool {
    Arc::ptr_eq(a.model(), b.model())
        || (a.model().chart_dim() == b.model().chart_dim()
            && a.model().h() == b.model().h()
            && a.model().g().inclusion() == b.model().g().inclusion())
}

/// `k int_0^1 f(kappa_1 - kappa_0, K_t, .., K_t) dt` along the straight line
/// `kappa_t = kappa_0 + t (kappa_1 - kappa_0)`.
pub fn transgression(
    f: &MultilinearFunction,
    conn0: &GeneralizedCartanConnection,
    conn1: &GeneralizedCartanConnection,
) -> Result<Form> {
    if !same_model(conn0, conn1) {
        return Err(Error::ModelMismatch);
    }
    check(f, conn0)?;
    let k = f.arity();
    let alpha = conn1.kappa().sub(conn0.kappa())?;
    // the integrand is polynomial of degree 2(k-1) in t, so k nodes are exact
    let nodes = gauss_legendre(k.max(1));
    let mut terms = Vec::with_capacity(nodes.len());
    for (t, w) in nodes {
        let kt = conn0.with_kappa(conn0.kappa().add(&alpha.scale(t))?)?;
        let mut args = vec![alpha.clone()];
        args.extend(std::iter::repeat(curvature(&kt)).take(k - 1));
        terms.push((w * k as f64, Form::apply_multilinear(f, &args)?));
    }
    Form::linear_combination(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{form_norm, form_scale, make_principal_cartan, maurer_cartan_preset, principal_model, random_coefficients};
    use crate::lie::presets;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gauss_legendre_integrates_degree_fifteen_exactly() {
        let nodes = gauss_legendre(8);
        let w: f64 = nodes.iter().map(|p| p.1).sum();
        assert!((w - 1.0).abs() < 1e-15);
        for d in 0..16 {
            let q: f64 = nodes.iter().map(|(t, w)| w * t.powi(d)).sum();
            assert!((q - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "degree {d}");
        }
    }

    fn conns(h: &str, sub: &[usize], m: usize, seed: u64) -> (GeneralizedCartanConnection, GeneralizedCartanConnection) {
        let model = principal_model(h, sub, m).unwrap();
        let hd = model.h().dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a0 = random_coefficients(hd, m, 2, 0.6, &mut rng);
        let a1 = random_coefficients(hd, m, 2, 0.6, &mut rng);
        (make_principal_cartan(model.clone(), a0).unwrap(), make_principal_cartan(model, a1).unwrap())
    }

    #[test]
    fn flat_connection_has_vanishing_characteristic_form() {
        let conn = maurer_cartan_preset("sl2", &[0]).unwrap();
        let f = MultilinearFunction::killing(conn.model().h());
        let fk = chern_weil_form(&f, &conn).unwrap();
        assert!(form_norm(&fk, &conn.model().samples(8, 1)) <= 1e-10);
    }

    #[test]
    fn characteristic_forms_are_closed_and_transgress() {
        for (h, sub, m) in [("e2", vec![0], 4), ("sl2", vec![0, 1], 4), ("aff2", vec![0, 1, 2, 3], 4)] {
            let p = presets::algebra(h).unwrap();
            let f = MultilinearFunction::trace_power(p.rep().unwrap(), 2);
            let (c0, c1) = conns(h, &sub, m, 3);
            let samples = c0.model().samples(6, 2);
            let f0 = chern_weil_form(&f, &c0).unwrap();
            let f1 = chern_weil_form(&f, &c1).unwrap();
            assert!(form_norm(&f1, &samples) > 1e-3, "{h}: characteristic form should be nonzero");
            let scale = form_scale(&f1, &samples, 1);
            assert!(form_norm(&f1.d(), &samples) <= 1e-6 * scale, "{h}");
            let tp = transgression(&f, &c0, &c1).unwrap();
            let defect = f1.sub(&f0).unwrap().sub(&tp.d()).unwrap();
            assert!(form_norm(&defect, &samples) <= 1e-5 * scale, "{h}");
            assert!(form_norm(&transgression(&f, &c0, &c0).unwrap(), &samples) == 0.0);
        }
    }

    #[test]
    fn characteristic_form_is_exact_against_the_flat_reference() {
        let (_, c1) = conns("e2", &[0], 4, 8);
        let model = c1.model().clone();
        let flat = make_principal_cartan(model.clone(), crate::forms::literal::PolyMatrix::zero(3, 4, 4)).unwrap();
        let samples = model.samples(4, 1);
        assert!(form_norm(&curvature(&flat), &samples) <= 1e-12);
        let f = MultilinearFunction::trace_power(presets::algebra("e2").unwrap().rep().unwrap(), 2);
        let fk = chern_weil_form(&f, &c1).unwrap();
        let tp = transgression(&f, &flat, &c1).unwrap();
        let scale = form_scale(&fk, &samples, 1);
        assert!(form_norm(&fk.sub(&tp.d()).unwrap(), &samples) <= 1e-6 * scale);
    }

    #[test]
    fn abelian_linear_case_is_exact() {
        let model = principal_model("abelian3", &[0], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c0 = make_principal_cartan(model.clone(), random_coefficients(3, 2, 3, 1.0, &mut rng)).unwrap();
        let c1 = make_principal_cartan(model.clone(), random_coefficients(3, 2, 3, 1.0, &mut rng)).unwrap();
        let f = MultilinearFunction::dual(3, 1);
        let f = MultilinearFunction::new(3, 1, Symmetry::Symmetric, f.coeffs().to_vec()).unwrap();
        let samples = model.samples(8, 3);
        let fk = chern_weil_form(&f, &c1).unwrap();
        let direct = Form::apply_multilinear(&f, &[c1.kappa().d()]).unwrap();
        assert!(form_norm(&fk.sub(&direct).unwrap(), &samples) <= 1e-14);
        let tp = transgression(&f, &c0, &c1).unwrap();
        let defect = fk.sub(&chern_weil_form(&f, &c0).unwrap()).unwrap().sub(&tp.d()).unwrap();
        assert!(form_norm(&defect, &samples) <= 1e-12);
    }

    #[test]
    fn non_invariant_functions_and_mismatched_models_are_rejected() {
        let (c0, _) = conns("sl2", &[0, 1], 2, 1);
        let f = MultilinearFunction::bilinear(&DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(chern_weil_form(&f, &c0), Err(Error::NotInvariant(_))));
        let (d0, _) = conns("e2", &[0], 2, 1);
        let k = MultilinearFunction::killing(c0.model().h());
        assert!(matches!(transgression(&k, &c0, &d0), Err(Error::ModelMismatch)));
    }
}
