use proptest::prelude::*;
use scri_core::energy::{
    bulk_positivity_certificate, curve_margin, deformation_tensor, frame_vectors, inner, q_general, q_tensor,
    ConstantVector, EnergyWeights,
};
use scri_core::field::Point;
use scri_core::metric::{conformal_reduce, make_minkowski, make_schwarzschild, ReducedProblem, LAPSE_MAX, THETA_CHART};

fn problem(mass: f64) -> ReducedProblem {
    let m = if mass == 0.0 { make_minkowski(1.0, 1.0) } else { make_schwarzschild(mass, 1.0, 1.0) };
    conformal_reduce(&m.unwrap()).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (0.0f64..1.0, 0.0f64..1.0, THETA_CHART.0..THETA_CHART.1, 0.0f64..std::f64::consts::TAU).prop_map(|(t, z, th, ph)| Point::new(t, z, th, ph))
}

fn raise(g: &[[f64; 4]; 4], d: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a] += g[a][b] * d[b];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frame_is_null_and_normalized(p in point(), mass in 0.0f64..0.25) {
        let pr = problem(mass);
        let g = pr.metric(p);
        let f = frame_vectors(&pr, p);
        prop_assert!(inner(&g, f.n1, f.n1).abs() < 1e-12);
        prop_assert!(inner(&g, f.n2, f.n2).abs() < 1e-12);
        prop_assert!((inner(&g, f.n1, f.n2) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coordinate_gradients_in_frame(p in point(), mass in 0.0f64..0.25) {
        let pr = problem(mass);
        let ginv = pr.inverse_metric(p);
        let f = frame_vectors(&pr, p);
        let v = pr.lapse.value(p);
        let grad_tau = raise(&ginv, [1.0, 0.0, 0.0, 0.0]);
        let grad_z = raise(&ginv, [0.0, 1.0, 0.0, 0.0]);
        for a in 0..4 {
            prop_assert!((grad_tau[a] + f.n1[a]).abs() < 1e-12);
            let expect = -0.5 * p.z * p.z * v * f.n1[a] + f.n2[a];
            prop_assert!((grad_z[a] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn q_frame_form_matches_definition(
        p in point(), mass in 0.0f64..0.25,
        d in prop::array::uniform4(-3.0f64..3.0), value in -3.0f64..3.0,
        x in (-2.0f64..2.0, -2.0f64..2.0), y in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let pr = problem(mass);
        let f = frame_vectors(&pr, p);
        let vec = |c: (f64, f64)| -> [f64; 4] { std::array::from_fn(|i| c.0 * f.n1[i] + c.1 * f.n2[i]) };
        let frame = q_tensor(d, value, x, y, &pr, p);
        let general = q_general(d, value, vec(x), vec(y), &pr, p);
        prop_assert!((frame - general).abs() < 1e-12 * (1.0 + general.abs()));
        prop_assert!((frame - q_tensor(d, value, y, x, &pr, p)).abs() < 1e-12 * (1.0 + frame.abs()));
    }

    #[test]
    fn q_is_nonnegative_on_future_cone(
        p in point(), mass in 0.0f64..0.25,
        d in prop::array::uniform4(-3.0f64..3.0), value in -3.0f64..3.0,
        x in (0.0f64..2.0, 0.0f64..2.0), y in (0.0f64..2.0, 0.0f64..2.0),
    ) {
        let pr = problem(mass);
        prop_assert!(q_tensor(d, value, x, y, &pr, p) >= -1e-12);
    }

    #[test]
    fn static_time_translation_is_killing(p in point(), mass in 0.0f64..0.25) {
        let pr = problem(mass);
        let pi = deformation_tensor(&ConstantVector([1.0, 0.0, 0.0, 0.0]), &pr, p);
        for row in pi {
            for x in row {
                prop_assert!(x.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn curve_margin_nonnegative_for_admissible_lapse(z in 0.0f64..1.0, v in 0.5f64..LAPSE_MAX) {
        prop_assert!(curve_margin(z, v) >= 0.0);
    }
}

#[test]
fn default_weights_certify_builtin_backgrounds() {
    for mass in [0.0, 0.05, 0.25] {
        let pr = problem(mass);
        let c = bulk_positivity_certificate(&pr, &EnergyWeights::defaults(&pr), 500, 7).unwrap();
        assert!(c.margin.eigen_margin >= 0.0 && c.margin.sample_margin >= 0.0);
    }
}
