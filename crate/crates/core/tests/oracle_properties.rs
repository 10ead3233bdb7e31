use proptest::prelude::*;
use scri_core::metric::{conformal_reduce, make_minkowski, Domain};
use scri_core::operator::{assemble, mode_reduce};
use scri_core::oracle::{evaluate_series, substitution_oracle, taylor_solve, BuiltinMetric};
use scri_core::solver::{solve, BoundaryData, Grid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn substitution_agrees_with_reduction(mass in 1e-3f64..0.25, l in 0u32..6) {
        let r = substitution_oracle(BuiltinMetric::Schwarzschild { mass }, l).unwrap();
        prop_assert!(r.max_diff_reduced < 1e-14, "{r:?}");
        prop_assert!(r.max_diff_printed < 1e-14, "{r:?}");
        prop_assert_eq!(r.mixed, 2.0);
        prop_assert_eq!(r.omega_sign, 1);
    }
}

#[test]
fn dipole_series_tracks_solver_near_initial_slice() {
    // v = cos(tau) + z sin(tau)
    let modes = mode_reduce(&assemble(&conformal_reduce(&make_minkowski(1.0, 1.0).unwrap()).unwrap()).unwrap(), 1).unwrap();
    let grid = Grid::square(101, Domain::new(1.0, 1.0).unwrap()).unwrap();
    let data = BoundaryData::from_solution(1.0, |t: f64, z: f64| t.cos() + z * t.sin());
    let psi: Vec<f64> = (0..=8)
        .map(|i| {
            let f: f64 = (1..=i).map(|k| k as f64).product();
            let c = [1.0, 1.0, -1.0, -1.0][i % 4];
            c / f
        })
        .collect();
    let phi: Vec<f64> = grid.zs().iter().map(|z| 1.0 + 0.0 * z).collect();
    let s = taylor_solve(&modes, &phi, &psi, &grid, 8).unwrap();
    assert!(s.recurrence_defect() < 1e-13);
    let v = solve(&modes, &data, grid).unwrap();
    for n in 0..=grid.n_tau / 4 {
        for j in 0..grid.n_z {
            let diff = (evaluate_series(&s, grid.tau(n), j) - v.get(n, j)).abs();
            assert!(diff < 1e-3, "n={n} j={j} diff={diff}");
        }
    }
}
