use proptest::prelude::*;

use pnsk_lab::grid::{integrate, FluidState, Grid1D};
use pnsk_lab::lab::metrics::weak_distance;
use pnsk_lab::lab::{gen_oscillating_density, limit_measure, OscillationSpec, Profile};
use pnsk_lab::pnsk::step_continuity;

fn state_strategy(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0f64..10.0, n),
        prop::collection::vec(-1.0f64..1.0, n - 1),
    )
}

proptest! {
    #[test]
    fn continuity_conserves_mass_and_sign((rho, inner) in state_strategy(48), courant in 0.0f64..0.5) {
        let g = Grid1D::new(48, 1.0).unwrap();
        let mut u = vec![0.0];
        u.extend(inner);
        u.push(0.0);
        let dt = courant * g.dx();
        let s = FluidState::new(0.0, rho.clone(), u, vec![1.0; 48]);
        let next = step_continuity(&g, &s, dt).unwrap();
        let (m0, m1) = (integrate(&g, &rho), integrate(&g, &next));
        prop_assert!((m1 - m0).abs() <= 1e-13 * m0.max(1.0));
        prop_assert!(next.iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn weak_distance_is_homogeneous(
        a in prop::collection::vec(-5.0f64..5.0, 64),
        b in prop::collection::vec(-5.0f64..5.0, 64),
        s in -4.0f64..4.0,
    ) {
        let g = Grid1D::new(64, 1.0).unwrap();
        let h = 4.0 * g.dx();
        let d = weak_distance(&g, &a, &b, h).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| s * v).collect();
        let sb: Vec<f64> = b.iter().map(|v| s * v).collect();
        let ds = weak_distance(&g, &sa, &sb, h).unwrap();
        prop_assert!((ds - s.abs() * d).abs() <= 1e-12 * (1.0 + d));
        prop_assert_eq!(weak_distance(&g, &a, &a, h).unwrap(), 0.0);
    }

    #[test]
    fn block_mean_matches_limit_measure(n in 1usize..=16, theta in 0.05f64..0.95, r_vap in 0.1f64..2.0) {
        let g = Grid1D::new(512, 1.0).unwrap();
        let spec = OscillationSpec { n_interfaces: n, r_vap, r_liq: r_vap + 3.0, theta, profile: Profile::Blocks };
        let rho = gen_oscillating_density(&g, &spec).unwrap();
        let mean = integrate(&g, &rho);
        let limit = limit_measure(theta, r_vap, r_vap + 3.0).unwrap().mean();
        prop_assert!((mean - limit).abs() <= 3.0 * g.dx() * n as f64 + 1e-12);
    }
}
