use cartanlab::group;
use cartanlab::lie::{presets, LieAlgebra, MultilinearFunction};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn algebra(name: &str) -> LieAlgebra {
    presets::algebra(name).unwrap().algebra
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

#[test]
fn every_preset_is_a_lie_algebra_with_invariant_killing_form() {
    for name in presets::names() {
        let alg = algebra(name);
        let d = alg.dim();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    assert_eq!(alg.sc(k, i, j), -alg.sc(k, j, i), "{name}");
                }
            }
        }
        assert!(alg.jacobi_residual() <= 1e-12, "{name}");
        assert!(MultilinearFunction::killing(&alg).invariance_residual(&alg) <= 1e-10, "{name}");
        if let Ok(rep) = presets::algebra(name).unwrap().rep() {
            assert!(rep.homomorphism_residual(&alg).unwrap() <= 1e-10, "{name}");
        }
    }
}

#[test]
fn ce_differential_squares_to_zero_on_basis_inputs() {
    for name in ["so3", "sl2", "heisenberg", "e2", "borel"] {
        let Ok(p) = presets::algebra(name) else { continue };
        let alg = p.algebra;
        let d = alg.dim();
        for arity in 1..d {
            let f = MultilinearFunction::random_alternating(d, arity, &mut ChaCha8Rng::seed_from_u64(arity as u64));
            let dd = f.ce_differential(&alg).unwrap().ce_differential(&alg).unwrap();
            assert!(dd.max_abs() <= 1e-12, "{name} arity {arity}");
        }
    }
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ad_is_a_homomorphism(name in prop::sample::select(vec!["so3", "sl2", "heisenberg", "e2"]), x in vec3(), y in vec3()) {
        let alg = algebra(name);
        let xy = alg.bracket(&x, &y).unwrap();
        let ax = alg.ad(&x).unwrap();
        let ay = alg.ad(&y).unwrap();
        let lhs = alg.ad(&xy).unwrap();
        prop_assert!(max_abs(&(lhs - (&ax * &ay - &ay * &ax))) <= 1e-10);
    }

    #[test]
    fn exp_and_log_round_trip(name in prop::sample::select(vec!["so3", "sl2", "heisenberg", "e2"]), x in vec3()) {
        let p = presets::algebra(name).unwrap();
        let rep = p.rep().unwrap();
        // small enough that exp(x) - I stays inside the principal branch
        let small: Vec<f64> = x.iter().map(|v| 0.3 * v).collect();
        let g = group::exp(rep, &small);
        let back = group::log(rep, &g).unwrap();
        for (a, b) in back.iter().zip(&small) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn adjoint_action_is_an_automorphism(name in prop::sample::select(vec!["so3", "sl2", "e2"]), z in vec3(), x in vec3(), y in vec3()) {
        let p = presets::algebra(name).unwrap();
        let rep = p.rep().unwrap();
        let alg = &p.algebra;
        let g = group::exp(rep, &z);
        let lhs = group::ad_action(rep, &g, &alg.bracket(&x, &y).unwrap()).unwrap();
        let gx = group::ad_action(rep, &g, &x).unwrap();
        let gy = group::ad_action(rep, &g, &y).unwrap();
        let rhs = alg.bracket(&gx, &gy).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
