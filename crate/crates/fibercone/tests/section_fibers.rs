//! Cross-section tests: cell degrees, the positive cone, and fiber graphs
//! with first-return maps.

use fibercone::cones::CohomClass;
use fibercone::cover::{build_pe, generalized_fibered_cone, h_structure, mcmullen_cone};
use fibercone::fixtures::*;
use fibercone::folding::suspension;
use fibercone::graph::*;
use fibercone::section::{cell_degrees, fiber_graph, positive_cone};
use fibercone::{Int, Rat};
use num_traits::Signed;

#[test]
fn cell_degrees_rose2_gold_are_uniform() {
    let m = rose2_gold();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let degrees = cell_degrees(&susp, &hs).unwrap();
    // d = 0: every vector is a positive multiple of the suspension unit.
    assert!(!degrees.is_empty());
    for dg in &degrees {
        assert!(dg.h.is_empty());
        assert!(dg.z.is_positive());
        assert_eq!(dg.normal(), vec![1]);
    }
    // All cells carry the same degree (one stage unit each).
    assert_eq!(degrees.len(), 1);
}

#[test]
fn doubling_the_normalization_doubles_z() {
    // Renormalization oracle: degrees are in pass units; scaling the unit
    // by two doubles every coordinate and fixes the cone.
    let m = fix_d1();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let degrees = cell_degrees(&susp, &hs).unwrap();
    let doubled: Vec<(Vec<Rat>, Rat)> = degrees
        .iter()
        .map(|dg| {
            (
                dg.h.iter().map(|x| x.clone() * Rat::from_integer(Int::from(2))).collect(),
                dg.z.clone() * Rat::from_integer(Int::from(2)),
            )
        })
        .collect();
    for (dg, (h2, z2)) in degrees.iter().zip(&doubled) {
        for (a, b) in dg.h.iter().zip(h2) {
            assert_eq!(a.clone() * Rat::from_integer(Int::from(2)), b.clone());
        }
        assert_eq!(dg.z.clone() * Rat::from_integer(Int::from(2)), z2.clone());
        // The positivity normal is scale-invariant.
        let scaled = fibercone::section::CellDegree { h: h2.clone(), z: z2.clone() };
        assert_eq!(scaled.normal(), dg.normal());
    }
}

#[test]
fn positive_cone_rose2_gold_is_positive_ray() {
    let m = rose2_gold();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let cone = positive_cone(&susp, &hs).unwrap();
    assert_eq!(cone.normals.iter().collect::<Vec<_>>(), vec![&vec![1]]);
}

#[test]
fn positive_cone_contains_suspension_class() {
    for m in [rose2_gold(), rose2_fib(), fix_d1()] {
        let susp = suspension(&m).unwrap();
        let hs = h_structure(&m).unwrap();
        let cone = positive_cone(&susp, &hs).unwrap();
        let mut class = vec![0i64; hs.d];
        class.push(1);
        assert!(cone.contains_int(&class).unwrap());
        assert!(cone.has_nonempty_interior());
    }
}

#[test]
fn positive_cone_inside_generalized_cone_fix_d1() {
    let m = fix_d1();
    let mi = fix_d1_inverse();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let pos = positive_cone(&susp, &hs).unwrap();
    let lt = build_pe(&m, &hs).unwrap();
    let lti = build_pe(&mi, &hs).unwrap();
    let gen = generalized_fibered_cone(&lt, &lti).unwrap();
    let mc = mcmullen_cone(&lt).unwrap();
    // Membership oracle on random rational points.
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut hits = 0;
    for _ in 0..200 {
        let x = [
            Rat::new(Int::from(rng.gen_range(-40..40i64)), Int::from(rng.gen_range(1..8i64))),
            Rat::new(Int::from(rng.gen_range(-40..40i64)), Int::from(rng.gen_range(1..8i64))),
        ];
        if pos.contains(&x).unwrap() {
            hits += 1;
            assert!(gen.contains(&x).unwrap(), "positive cone point {x:?} outside generalized cone");
        }
        if gen.contains(&x).unwrap() {
            assert!(mc.contains(&x).unwrap(), "generalized cone point {x:?} outside McMullen cone");
        }
    }
    assert!(hits > 0, "sampled no positive-cone points");
}

#[test]
fn fiber_of_suspension_class_is_the_original_map() {
    // alpha = (0, 1) on FIX_D1: the fiber is G itself and the first return
    // is psi up to the terminal relabeling.
    let m = fix_d1();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let alpha = CohomClass::new(vec![0, 1]);
    let fiber = fiber_graph(&alpha, &susp, &hs).unwrap();
    assert_eq!(fiber.n_alpha, 1);
    assert_eq!(fiber.graph.n_vertices(), m.domain.n_vertices());
    assert_eq!(fiber.graph.n_edges(), m.domain.n_edges());
    assert_eq!(fiber.rank(), 3);
    // Same unsigned transition data as psi, up to relabeling: compare
    // characteristic polynomials of the transition matrices.
    let t_fiber = transition_matrix(&fiber.first_return).unwrap();
    let t_psi = transition_matrix(&m).unwrap();
    let chi = |t: &TransitionMatrix| {
        let n = t.n;
        let mut lm = fibercone::PolyMatrix::zero(n, n, 0);
        for r in 0..n {
            for c in 0..n {
                *lm.at_mut(r, c) =
                    fibercone::Poly::constant(0, t.entries.at(r, c).clone());
            }
        }
        lm.char_poly().unwrap()
    };
    assert_eq!(chi(&t_fiber), chi(&t_psi));
    // And the return map passes the train track battery.
    assert!(is_train_track(&fiber.first_return).unwrap());
    assert!(is_irreducible(&t_fiber));
    assert!(is_expanding(&fiber.first_return, t_fiber.n.max(4)).unwrap());
}

#[test]
fn fiber_rejects_bad_classes() {
    let m = fix_d1();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    assert!(fiber_graph(&CohomClass::new(vec![0, 2]), &susp, &hs).is_err()); // not primitive
    assert!(fiber_graph(&CohomClass::new(vec![0, -1]), &susp, &hs).is_err()); // outside cone
    // d = 0 input.
    let g = rose2_gold();
    let susp0 = suspension(&g).unwrap();
    let hs0 = h_structure(&g).unwrap();
    assert!(fiber_graph(&CohomClass::new(vec![1]), &susp0, &hs0).is_err());
}

#[test]
fn fibers_of_small_positive_classes() {
    let m = fix_d1();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let cone = positive_cone(&susp, &hs).unwrap();
    let mut tested = 0;
    for a in -4..=4i64 {
        for n in 1..=4i64 {
            let alpha = CohomClass::new(vec![a, n]);
            if !alpha.is_primitive() || !cone.contains_int(&alpha.coords).unwrap() {
                continue;
            }
            let fiber = fiber_graph(&alpha, &susp, &hs).unwrap();
            tested += 1;
            let t = transition_matrix(&fiber.first_return).unwrap();
            assert!(is_train_track(&fiber.first_return).unwrap(), "alpha {alpha:?}");
            assert!(is_irreducible(&t), "alpha {alpha:?}");
            assert!(is_expanding(&fiber.first_return, t.n.max(4)).unwrap(), "alpha {alpha:?}");
            assert!(fiber.rank() >= 1);
        }
    }
    assert!(tested >= 3, "expected at least three primitive classes, got {tested}");
}

#[test]
fn stretch_factor_homogeneity() {
    // lambda(return of k-level flow) = lambda(return)^k, checked through
    // the k-th power of the return map for alpha and the deck relation.
    let m = fix_d1();
    let susp = suspension(&m).unwrap();
    let hs = h_structure(&m).unwrap();
    let alpha = CohomClass::new(vec![0, 1]);
    let fiber = fiber_graph(&alpha, &susp, &hs).unwrap();
    let t1 = transition_matrix(&fiber.first_return).unwrap();
    let l1 = pf_eigenvalue(&t1).unwrap().approx();
    for k in 2..=3u32 {
        let mk = iterate(&fiber.first_return, k).unwrap();
        let tk = transition_matrix(&mk).unwrap();
        let lk = pf_eigenvalue(&tk).unwrap().approx();
        assert!((lk - l1.powi(k as i32)).abs() < 1e-6, "k={k}: {lk} vs {}", l1.powi(k as i32));
    }
}
