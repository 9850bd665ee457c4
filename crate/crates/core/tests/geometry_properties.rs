use cartanlab::developing::{develop, exp_map, translation_residual, DevelopOptions, Path};
use cartanlab::group;
use cartanlab::jets::{self, field_of_tensor, jet_compose, jet_exp, jet_invert, random_dyadic_element, JetElement, JetVectorField};
use cartanlab::prolongation::{
    brute_force_dim, prolong, span_equality_residual, splitting_dims, torsion_complement, LinearLieAlgebra, SymTensorSpace,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn prolongation_dimensions_agree_with_the_constraint_oracle() {
    for name in ["so2", "so3", "gl2", "co2", "co3", "sp2"] {
        let g = LinearLieAlgebra::preset(name).unwrap();
        let table = prolong(&g, 2).unwrap();
        for k in 1..=2 {
            assert_eq!(table.dims[k], brute_force_dim(&g, k), "{name} k={k}");
        }
    }
}

#[test]
fn iterated_prolongation_spans_the_direct_one() {
    for name in ["so3", "co3", "gl2"] {
        let g = LinearLieAlgebra::preset(name).unwrap();
        let table = prolong(&g, 2).unwrap();
        assert!(span_equality_residual(&g, &table, 1) <= 1e-9, "{name}");
    }
}

#[test]
fn spencer_splittings_are_consistent() {
    for name in ["so2", "so3", "gl2", "co3"] {
        let g = LinearLieAlgebra::preset(name).unwrap();
        let table = prolong(&g, 2).unwrap();
        let s = splitting_dims(&g, &table);
        assert_eq!(s.g_lambda2, s.r_g + s.d1, "{name}");
        assert_eq!(s.r_g, s.delta_g1 + s.d2, "{name}");
        assert_eq!(s.g_v, s.g1 + s.d3, "{name}");
        assert_eq!(s.g1, table.dims[1], "{name}");
        assert!(s.delta_squared <= 1e-12, "{name}");
        let tc = torsion_complement(&g, false).unwrap();
        assert_eq!(tc.kernel_dim, table.dims[1], "{name}");
        // image and complement together span V ⊗ Λ²V*
        let n = g.n();
        assert_eq!(tc.image.ncols() + tc.basis.ncols(), n * n * (n - 1) / 2, "{name}");
    }
}

/// Linear part from `a` plus a quadratic part from a random symmetric tensor.
fn random_field(n: usize, k: usize, r: &mut ChaCha8Rng) -> JetVectorField {
    let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-0.5..0.5));
    let len = SymTensorSpace::new(n, 2).len();
    let t: Vec<f64> = (0..n * len).map(|_| r.gen_range(-0.5..0.5)).collect();
    JetVectorField::linear(&a, k).add_scaled(&field_of_tensor(n, k, 2, &t), 1.0)
}

fn rk4(x: &JetVectorField, p0: &[f64], steps: usize) -> Vec<f64> {
    let dt = 1.0 / steps as f64;
    let f = |p: &[f64]| x.eval(p);
    let shift = |p: &[f64], k: &[f64], s: f64| -> Vec<f64> { p.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut p = p0.to_vec();
    for _ in 0..steps {
        let k1 = f(&p);
        let k2 = f(&shift(&p, &k1, dt / 2.0));
        let k3 = f(&shift(&p, &k2, dt / 2.0));
        let k4 = f(&shift(&p, &k3, dt));
        for i in 0..p.len() {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn jet_group_axioms_hold_exactly(seed in 0u64..100_000, n in 1usize..=3, k in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_dyadic_element(n, k, &mut r);
        let b = random_dyadic_element(n, k, &mut r);
        let c = random_dyadic_element(n, k, &mut r);
        let id = JetElement::identity(n, k);
        prop_assert_eq!(jet_compose(&jet_compose(&a, &b).unwrap(), &c).unwrap(), jet_compose(&a, &jet_compose(&b, &c).unwrap()).unwrap());
        prop_assert_eq!(jet_compose(&a, &id).unwrap(), a.clone());
        let ai = jet_invert(&a).unwrap();
        prop_assert_eq!(jet_compose(&a, &ai).unwrap(), id.clone());
        prop_assert_eq!(jet_compose(&ai, &a).unwrap(), id);
    }

    #[test]
    fn jet_exponential_is_the_time_one_flow(seed in 0u64..100_000, n in 1usize..=2) {
        let mut r = rng(seed);
        let x = random_field(n, 2, &mut r);
        // the field is exactly quadratic, so a higher-order jet of its flow
        // matches the true flow up to the truncation term
        let e = jet_exp(&x.with_order(6)).unwrap();
        for _ in 0..5 {
            let p: Vec<f64> = (0..n).map(|_| r.gen_range(-0.05..0.05)).collect();
            let flow = rk4(&x, &p, 200);
            let jet = e.eval(&p);
            for (a, b) in flow.iter().zip(&jet) {
                prop_assert!((a - b).abs() <= 1e-6, "flow {:?} jet {:?}", flow, jet);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn developments_differ_by_a_constant_left_translation(seed in 0u64..10_000) {
        let e = exp_map("sl2-exp").unwrap();
        let kappa = e.map.log_derivative_form(true);
        let opts = DevelopOptions { steps: 128, relation: e.relation() };
        let mut r = rng(seed);
        let path = Path::random(2, 1.0, 2, false, &mut r);
        let y: Vec<f64> = (0..3).map(|_| r.gen_range(-0.5..0.5)).collect();
        let a = develop(&kappa, e.map.rep(), &path, &DMatrix::identity(2, 2), &opts).unwrap();
        let b = develop(&kappa, e.map.rep(), &path, &group::exp(e.map.rep(), &y), &opts).unwrap();
        prop_assert!(translation_residual(&a, &b).unwrap() <= 1e-8);
    }

    #[test]
    fn flat_development_is_path_independent(seed in 0u64..10_000) {
        let e = exp_map("so3-exp").unwrap();
        let kappa = e.map.log_derivative_form(true);
        let opts = DevelopOptions { steps: 256, relation: e.relation() };
        let mut r = rng(seed);
        let mut pt = || -> Vec<f64> { (0..2).map(|_| r.gen_range(-0.4..0.4)).collect() };
        let (a, b, q) = (pt(), pt(), pt());
        let straight = Path::segment(&a, &b).unwrap();
        let bent = Path::bent(&a, &b, &[q]).unwrap();
        let id = DMatrix::identity(3, 3);
        let d1 = develop(&kappa, e.map.rep(), &straight, &id, &opts).unwrap();
        let d2 = develop(&kappa, e.map.rep(), &bent, &id, &opts).unwrap();
        prop_assert!((d1.endpoint() - d2.endpoint()).amax() <= 1e-6);
    }
}

#[test]
fn truncated_algebra_of_so2_contains_the_euclidean_algebra() {
    let so2 = LinearLieAlgebra::preset("so2").unwrap();
    let a1 = jets::g_infinity_truncated(&so2, 1).unwrap();
    let e2 = cartanlab::lie::LieAlgebra::semidirect(so2.algebra(), &so2.rep()).unwrap();
    assert_eq!(a1.algebra.dim(), e2.dim());
    for (x, y) in a1.algebra.structure().iter().zip(e2.structure()) {
        assert!((x - y).abs() <= 1e-12);
    }
}
