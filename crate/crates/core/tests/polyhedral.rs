use moderator_core::polyhedral::{
    direction, normal_equiv_2d, pareto_filter_2d, polarize_2d, restricted_fan_2d, UtilityPolytope,
    ANGLE_TOL,
};
use proptest::prelude::*;

fn cloud() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::btree_set((0i32..20, 0i32..20), 1..12)
        .prop_map(|s| s.into_iter().map(|(x, y)| [x as f64, y as f64]).collect())
}

fn polytope(points: &[[f64; 2]]) -> UtilityPolytope {
    UtilityPolytope::new(0, points.iter().map(|p| p.to_vec()).collect()).unwrap()
}

fn brute_pareto(points: &[[f64; 2]]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !(0..points.len()).any(|j| {
                j != i
                    && points[j][0] >= points[i][0]
                    && points[j][1] >= points[i][1]
                    && points[j] != points[i]
            })
        })
        .collect()
}

/// `p` is weakly dominated by some point of a segment between two other
/// points (or by one other point).
fn dominated_by_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    // lambda * (a - b) + b >= p componentwise for some lambda in [0, 1]
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for k in 0..2 {
        let (slope, need) = (a[k] - b[k], p[k] - b[k]);
        if slope > 0.0 {
            lo = lo.max(need / slope);
        } else if slope < 0.0 {
            hi = hi.min(need / slope);
        } else if need > 0.0 {
            return false;
        }
    }
    lo <= hi
}

fn brute_exposed(points: &[[f64; 2]]) -> Vec<usize> {
    brute_pareto(points)
        .into_iter()
        .filter(|&i| {
            let others: Vec<[f64; 2]> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| points[j])
                .collect();
            !others.iter().any(|&a| {
                others
                    .iter()
                    .any(|&b| dominated_by_segment(points[i], a, b))
            })
        })
        .collect()
}

proptest! {
    #[test]
    fn pareto_and_vertices_match_brute_force(points in cloud()) {
        let pol = polarize_2d(&polytope(&points)).unwrap();
        let mut pareto: Vec<usize> = pol.pareto.iter().map(|v| v.0).collect();
        prop_assert!(pol.pareto.windows(2).all(|w| w[0].1[0] < w[1].1[0]));
        pareto.sort_unstable();
        prop_assert_eq!(&pareto, &brute_pareto(&points));
        prop_assert_eq!(pareto_filter_2d(&points).len(), pareto.len());
        let mut vertices: Vec<usize> = pol.vertices.iter().map(|v| v.0).collect();
        vertices.sort_unstable();
        prop_assert_eq!(vertices, brute_exposed(&points));
    }

    #[test]
    fn fan_labels_are_argmax_sets(points in cloud(), t in 0.001f64..0.999) {
        let p = polytope(&points);
        let fan = restricted_fan_2d(&p).unwrap();
        let theta = t * std::f64::consts::FRAC_PI_2;
        if fan.breakpoints.iter().all(|b| (b.angle - theta).abs() > 1e-9) {
            let best = p.argmax(&direction(theta));
            prop_assert_eq!(fan.label_at(theta).unwrap(), best.as_slice());
        }
        let pol = polarize_2d(&p).unwrap();
        prop_assert_eq!(fan.breakpoints.len() + 1, pol.vertices.len());
    }

    #[test]
    fn normal_equivalence_is_fan_equality(a in cloud(), b in cloud()) {
        let (pa, pb) = (polytope(&a), polytope(&b));
        let fans_equal = restricted_fan_2d(&pa)
            .unwrap()
            .same_breakpoints(&restricted_fan_2d(&pb).unwrap(), ANGLE_TOL);
        let equiv = normal_equiv_2d(&polarize_2d(&pa).unwrap(), &polarize_2d(&pb).unwrap());
        prop_assert_eq!(equiv, fans_equal);
    }
}
