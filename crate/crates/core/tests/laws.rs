//! Property tests for the algebraic laws on randomized configurations.

use proptest::prelude::*;
use stableflow::cocycle::Cocycle;
use stableflow::flowspace::{floor_mod, CyclicFiber, FlowSpace, Point, SpecialRep};
use stableflow::functional::SemiAdditiveFunctional;
use std::sync::Arc;

fn cyclic(qs: &[f64]) -> Arc<FlowSpace> {
    Arc::new(
        FlowSpace::cyclic(
            qs.iter()
                .enumerate()
                .map(|(i, q)| CyclicFiber {
                    label: format!("z{i}"),
                    weight: 1.0,
                    period: *q,
                })
                .collect(),
        )
        .unwrap(),
    )
}

proptest! {
    #[test]
    fn floor_mod_reconstructs_and_bounds(
        v in -1e6f64..1e6,
        a in prop::sample::select(vec![1e-3, 0.1, 0.25, 1.0, 2.0, std::f64::consts::PI, 700.0])
    ) {
        let (n, rem) = floor_mod(v, a).unwrap();
        prop_assert!((0.0..a).contains(&rem), "rem {rem} outside [0, {a})");
        let back = a * n as f64 + rem;
        let ulps = 2.0 * f64::EPSILON * v.abs().max(a * n.abs() as f64).max(a);
        prop_assert!((back - v).abs() <= ulps, "v={v} back={back}");
    }

    #[test]
    fn seesaw_group_law_and_winding_additivity(
        q in 0.05f64..4.0,
        frac in 0.0f64..1.0,
        s1 in -6.0f64..6.0,
        s2 in -6.0f64..6.0,
    ) {
        let space = cyclic(&[q]);
        let p = Point::new(0, frac * q);
        let both = space.apply_log(s1 + s2, &p).unwrap();
        let mid = space.apply_log(s2, &p).unwrap();
        let step = space.apply_log(s1, &mid).unwrap();
        prop_assert!((both.coord - step.coord).abs() <= 1e-12 * (1.0 + q));

        let n12 = space.winding_log(s1 + s2, &p).unwrap();
        let n2 = space.winding_log(s2, &p).unwrap();
        let n1 = space.winding_log(s1, &mid).unwrap();
        prop_assert_eq!(n12, n1 + n2);
    }

    #[test]
    fn sign_coboundary_law_is_exact_everywhere(
        u in -20.0f64..20.0,
        s1 in -6.0f64..6.0,
        s2 in -6.0f64..6.0,
        freq in 0.5f64..3.0,
    ) {
        let space = Arc::new(FlowSpace::dissipative(vec![
            stableflow::flowspace::Fiber { label: "y0".into(), weight: 1.0 }
        ]).unwrap());
        let coc = Cocycle::coboundary(&space, move |p: &Point| {
            if (freq * p.coord).sin() >= 0.0 { 1.0 } else { -1.0 }
        }).unwrap();
        let p = Point::new(0, u);
        let lhs = coc.eval_log(s1 + s2, &p);
        let moved = space.apply_log(s1, &p).unwrap();
        let rhs = coc.eval_log(s1, &p) * coc.eval_log(s2, &moved);
        prop_assert_eq!(lhs, rhs);
        prop_assert!(lhs == 1.0 || lhs == -1.0);
    }

    #[test]
    fn one_semi_law_on_random_seesaws(
        q in 0.2f64..3.0,
        frac in 0.0f64..1.0,
        s1 in -5.0f64..5.0,
        s2 in -5.0f64..5.0,
    ) {
        let space = cyclic(&[q]);
        let g = SemiAdditiveFunctional::solve_one_semi(&space, |p: &Point| p.coord.sin());
        let p = Point::new(0, frac * q);
        let lhs = g.eval_log(s1 + s2, &p);
        let moved = space.apply_log(s1, &p).unwrap();
        let rhs = (-s2).exp() * g.eval_log(s1, &p) + g.eval_log(s2, &moved);
        prop_assert!((lhs - rhs).abs() / (1.0 + lhs.abs()) <= 1e-12,
            "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn roof_sum_additivity_with_dyadic_roofs(
        perm_seed in 0u64..1000,
        roof_idx in prop::collection::vec(1u32..32, 2..5),
        n in -6i64..6,
        m in -6i64..6,
    ) {
        let k = roof_idx.len();
        // random permutation from the seed
        let mut order: Vec<usize> = (0..k).collect();
        let mut state = perm_seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
        for i in (1..k).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let roofs: Vec<f64> = roof_idx.iter().map(|i| *i as f64 / 16.0).collect();
        let rep = SpecialRep::new(
            (0..k).map(|i| format!("y{i}")).collect(),
            order,
            roofs,
        ).unwrap();
        for y in 0..k {
            let lhs = rep.roof_sum(y, n + m);
            let rhs = rep.roof_sum(y, n) + rep.roof_sum(rep.v_pow(y, n), m);
            prop_assert_eq!(lhs, rhs); // dyadic roofs: bit exact
        }
    }
}
