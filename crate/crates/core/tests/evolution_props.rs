use std::sync::Arc;

use proptest::prelude::*;
use rdlab_core::closed_forms::PowerPair;
use rdlab_core::discretization::{build_grid, integrate_field, BoundaryCondition, Field, Grid, SpatialDomain};
use rdlab_core::evolution::{heat_solve, solve, SolverConfig};

fn grid(n: usize) -> Arc<Grid> {
    build_grid(SpatialDomain::interval(1.0).unwrap(), n).unwrap()
}

fn field(g: &Arc<Grid>, values: &[f64]) -> Field {
    Field::new(g.clone(), values.to_vec()).unwrap()
}

fn data() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0..10.0f64, 41),
        prop::collection::vec(0.0..10.0f64, 41),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_stay_nonnegative((u, v) in data(), p in 1.0..4.0f64, q in 1.0..4.0f64, dirichlet in any::<bool>()) {
        let g = grid(41);
        let bc = if dirichlet { BoundaryCondition::DirichletZero } else { BoundaryCondition::NeumannZero };
        let cfg = SolverConfig::new(PowerPair::new(p, q).unwrap(), bc, 0.0, 0.05).with_tol(1e-3);
        let traj = solve(&field(&g, &u), &field(&g, &v), &cfg, &[0.01, 0.05]).unwrap();
        for s in traj.snapshots() {
            prop_assert!(s.u.min() >= 0.0 && s.v.min() >= 0.0);
        }
    }

    #[test]
    fn neumann_mass_never_grows((u, v) in data(), p in 1.0..4.0f64, q in 1.0..4.0f64) {
        let g = grid(41);
        let cfg = SolverConfig::new(PowerPair::new(p, q).unwrap(), BoundaryCondition::NeumannZero, 0.0, 0.1).with_tol(1e-3);
        let (u0, v0) = (field(&g, &u), field(&g, &v));
        let outs: Vec<f64> = (1..=10).map(|k| 0.01 * k as f64).collect();
        let traj = solve(&u0, &v0, &cfg, &outs).unwrap();
        let mut prev = integrate_field(&u0, None).unwrap() + integrate_field(&v0, None).unwrap();
        for s in traj.snapshots() {
            let m = integrate_field(&s.u, None).unwrap() + integrate_field(&s.v, None).unwrap();
            prop_assert!(m <= prev * (1.0 + 1e-12) + 1e-14, "{} > {}", m, prev);
            prev = m;
        }
    }

    #[test]
    fn absorption_only_lowers_the_heat_flow((u, v) in data(), p in 1.0..4.0f64, q in 1.0..4.0f64) {
        // identical fixed step sequences: tolerance never binds, dt pinned
        let g = grid(41);
        let cfg = SolverConfig::new(PowerPair::new(p, q).unwrap(), BoundaryCondition::NeumannZero, 0.0, 0.05)
            .with_tol(1e12)
            .with_dt_init(1e-3)
            .with_dt_max(1e-3);
        let (u0, v0) = (field(&g, &u), field(&g, &v));
        let sys = solve(&u0, &v0, &cfg, &[0.02, 0.05]).unwrap();
        let hu = heat_solve(&u0, &cfg, &[0.02, 0.05]).unwrap();
        let hv = heat_solve(&v0, &cfg, &[0.02, 0.05]).unwrap();
        for ((s, a), b) in sys.snapshots().iter().zip(hu.snapshots()).zip(hv.snapshots()) {
            for (x, y) in s.u.values().iter().zip(a.u.values()) {
                prop_assert!(*x <= y + 1e-12);
            }
            for (x, y) in s.v.values().iter().zip(b.u.values()) {
                prop_assert!(*x <= y + 1e-12);
            }
        }
    }

    #[test]
    fn runs_are_deterministic((u, v) in data(), p in 1.0..4.0f64, q in 1.0..4.0f64) {
        let g = grid(41);
        let cfg = SolverConfig::new(PowerPair::new(p, q).unwrap(), BoundaryCondition::NeumannZero, 0.0, 0.05).with_tol(1e-3);
        let (u0, v0) = (field(&g, &u), field(&g, &v));
        let a = solve(&u0, &v0, &cfg, &[0.05]).unwrap();
        let b = solve(&u0, &v0, &cfg, &[0.05]).unwrap();
        prop_assert_eq!(a.last(), b.last());
        prop_assert_eq!(a.steps(), b.steps());
    }
}

#[test]
fn radial_flat_tracking() {
    let pair = PowerPair::new(2.0, 2.0).unwrap();
    let g = build_grid(SpatialDomain::radial_ball(1.0, 3).unwrap(), 101).unwrap();
    let (u0, v0) = rdlab_core::closed_forms::eval_flat(&pair, 0.1).unwrap();
    let cfg = SolverConfig::new(pair, BoundaryCondition::NeumannZero, 0.1, 1.0);
    let traj = solve(&Field::constant(g.clone(), u0), &Field::constant(g, v0), &cfg, &[0.5, 1.0]).unwrap();
    for s in traj.snapshots() {
        for &u in s.u.values() {
            assert!((u * s.t - 1.0).abs() < 1e-4);
        }
    }
}

#[test]
fn radial_heat_conserves_mass() {
    let pair = PowerPair::new(2.0, 2.0).unwrap();
    for n in [2, 3] {
        let g = build_grid(SpatialDomain::radial_ball(1.0, n).unwrap(), 201).unwrap();
        let ic = Field::from_fn(g.clone(), |r| (-(r * r) / 0.02).exp());
        let m0 = integrate_field(&ic, None).unwrap();
        let cfg = SolverConfig::new(pair, BoundaryCondition::NeumannZero, 0.0, 0.2).with_tol(1e-5);
        let traj = heat_solve(&ic, &cfg, &[0.05, 0.2]).unwrap();
        for s in traj.snapshots() {
            let m = integrate_field(&s.u, None).unwrap();
            // the radial stencil is not exactly conservative against the trapezoid weights
            assert!(((m - m0) / m0).abs() < 1e-3, "N = {n}: {m} vs {m0}");
        }
    }
}
