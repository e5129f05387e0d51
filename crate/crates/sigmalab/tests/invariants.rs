use std::f64::consts::PI;

use proptest::prelude::*;
use sigmalab::geometry::{Hypersurface, ManifoldModel};
use sigmalab::lrcontrol::miller::gramian_form;
use sigmalab::lrcontrol::{elliptic_evolve, heat_evolve, transmutation_eval, SpectralModel, TransmutationKernel};
use sigmalab::raydyn::{base_distance, char_lift, flow, FlowOptions};

fn torus_model() -> SpectralModel {
    SpectralModel::torus(&Hypersurface::torus_union(), 6.0).unwrap()
}

fn vec_for(model: &SpectralModel) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, model.len())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_semigroup(v in vec_for(&torus_model()), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let m = torus_model();
        let two = heat_evolve(&m, &heat_evolve(&m, &v, a).unwrap(), b).unwrap();
        let one = heat_evolve(&m, &v, a + b).unwrap();
        for (x, y) in two.iter().zip(&one) {
            prop_assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn heat_is_contractive(v in vec_for(&torus_model()), t in 0.0f64..2.0) {
        let m = torus_model();
        let w = heat_evolve(&m, &v, t).unwrap();
        prop_assert!(m.sobolev_norm(&w, 0.0) <= m.sobolev_norm(&v, 0.0) * (1.0 + 1e-14));
    }

    #[test]
    fn elliptic_at_zero_is_identity(v0 in vec_for(&torus_model()), v1 in vec_for(&torus_model())) {
        let m = torus_model();
        prop_assert_eq!(elliptic_evolve(&m, &v0, &v1, 0.0).unwrap(), v0);
    }

    #[test]
    fn gramian_form_grows_with_horizon(y in vec_for(&torus_model()), t in 0.1f64..1.0, dt in 0.01f64..1.0) {
        let m = torus_model();
        let a = gramian_form(&m, &y, t);
        let b = gramian_form(&m, &y, t + dt);
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn kernel_is_odd_in_s(t in 0.05f64..0.95, s in 0.01f64..1.0) {
        let k = TransmutationKernel::with_defaults(1.0, 1.0).unwrap();
        let (p, _) = transmutation_eval(&k, t, s).unwrap();
        let (q, _) = transmutation_eval(&k, t, -s).unwrap();
        prop_assert!((p + q).abs() <= 1e-12 * p.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn torus_flow_is_reversible(x in 0.0f64..2.0 * PI, y in 0.0f64..2.0 * PI, th in 0.0f64..2.0 * PI, s in 0.5f64..4.0) {
        let m = ManifoldModel::torus();
        let p = char_lift(&m, [x, y], [th.cos(), th.sin()], 1.0).unwrap();
        let opts = FlowOptions::default();
        let fwd = flow(&m, None, &p, s, &opts).unwrap();
        prop_assert!(fwd.end.defect(&m).unwrap() <= 1e-9);
        let back = flow(&m, None, &fwd.end, -s, &opts).unwrap();
        prop_assert!(base_distance(&m, back.end.x, p.x) <= 1e-8);
        prop_assert!((back.end.xi[0] - p.xi[0]).abs() <= 1e-8);
        prop_assert!((back.end.xi[1] - p.xi[1]).abs() <= 1e-8);
    }

    #[test]
    fn sphere_geodesics_close_after_two_pi(phi in 0.0f64..2.0 * PI, polar in 0.3f64..2.8, th in 0.0f64..2.0 * PI) {
        // Chart (φ, θ) with θ the polar angle.
        let m = ManifoldModel::sphere();
        let g = m.metric([phi, polar]).unwrap();
        let v = [th.cos() / g[0].sqrt(), th.sin() / g[1].sqrt()];
        let p = char_lift(&m, [phi, polar], v, 1.0).unwrap();
        let tr = flow(&m, None, &p, 2.0 * PI, &FlowOptions::default()).unwrap();
        prop_assert!(base_distance(&m, tr.end.x, p.x) <= 1e-6);
    }
}
