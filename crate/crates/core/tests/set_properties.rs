mod common;

use proptest::prelude::*;
use rand::Rng;

use credal::credal::{hull, posterior_y, support_x, JointDistribution};
use credal::polytope::{member, prune, set_equal, subset, VPolytope};
use credal::rational::int;
use credal::sampling::{random_distribution, random_mixture};
use credal::Rational;

fn random_polytope<R: Rng>(r: &mut R, dim: usize, points: usize) -> VPolytope {
    let gens = (0..points)
        .map(|_| random_distribution(r, dim, false))
        .collect();
    VPolytope::new(dim, gens, true).unwrap()
}

/// `conv(s ∪ extra)`.
fn grow(s: &VPolytope, extra: Vec<Vec<Rational>>) -> VPolytope {
    let mut gens = s.generators().to_vec();
    gens.extend(extra);
    VPolytope::new(s.dim(), gens, true).unwrap()
}

proptest! {
    #![proptest_config(common::config(common::CASES))]

    #[test]
    fn subset_is_a_partial_order(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let dim = r.gen_range(2..=4);
        let k = r.gen_range(1..=4);
        let a = random_polytope(&mut r, dim, k);
        let b = grow(&a, (0..r.gen_range(0..=2)).map(|_| random_distribution(&mut r, dim, false)).collect());
        let c = grow(&b, (0..r.gen_range(0..=2)).map(|_| random_distribution(&mut r, dim, false)).collect());
        prop_assert!(subset(&a, &a).unwrap());
        prop_assert!(subset(&a, &b).unwrap() && subset(&b, &c).unwrap() && subset(&a, &c).unwrap());
        // A copy padded with interior points describes the same set.
        let inner = (0..3).map(|_| random_mixture(&mut r, a.generators())).collect();
        let same = grow(&a, inner);
        prop_assert!(subset(&a, &same).unwrap() && subset(&same, &a).unwrap());
        let mut pa = prune(&a).unwrap().generators().to_vec();
        let mut ps = prune(&same).unwrap().generators().to_vec();
        pa.sort();
        ps.sort();
        prop_assert_eq!(pa, ps);
        if subset(&c, &a).unwrap() {
            prop_assert!(set_equal(&a, &c).unwrap());
        }
    }

    #[test]
    fn prune_preserves_membership(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let dim = r.gen_range(2..=4);
        let k = r.gen_range(1..=6);
        let s = random_polytope(&mut r, dim, k);
        let pruned = prune(&s).unwrap();
        for i in 0..5 {
            let point = if i % 2 == 0 {
                random_mixture(&mut r, s.generators())
            } else {
                random_distribution(&mut r, dim, false)
            };
            prop_assert_eq!(member(&point, &s).unwrap(), member(&point, &pruned).unwrap());
        }
    }

    #[test]
    fn conditioned_projections_are_convex(seed in any::<u64>()) {
        let p = common::credal_set(seed, false, true);
        let mut r = common::rng(seed.wrapping_add(1));
        let event = common::nonempty_subset(&mut r, &support_x(&p));
        let post = posterior_y(&p, &event).unwrap();
        let g = post.generators();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                prop_assert!(member(&common::midpoint(&g[i], &g[j]), &post).unwrap());
            }
        }
    }

    #[test]
    fn equal_cell_posteriors_contain_the_union_posterior(seed in any::<u64>(), shared in any::<bool>()) {
        let p = if shared { common::shared_conditionals(seed) } else { common::credal_set(seed, true, true) };
        let nx = p.space().nx();
        let posts: Vec<VPolytope> = (0..nx).map(|x| posterior_y(&p, &[x]).unwrap()).collect();
        for a in 0..nx {
            for b in a + 1..nx {
                if set_equal(&posts[a], &posts[b]).unwrap() {
                    let union = posterior_y(&p, &[a, b]).unwrap();
                    prop_assert!(subset(&union, &posts[a]).unwrap());
                    prop_assert!(subset(&union, &posts[b]).unwrap());
                }
            }
        }
        if shared {
            let all: Vec<usize> = (0..nx).collect();
            prop_assert!(subset(&posterior_y(&p, &all).unwrap(), &posts[0]).unwrap());
        }
    }

    #[test]
    fn rectangular_posterior_contains_the_intersection(seed in any::<u64>()) {
        let p = common::rectangular_set(seed, false);
        let mut r = common::rng(seed.wrapping_add(2));
        let u = common::nonempty_subset(&mut r, &support_x(&p));
        let sets: Vec<VPolytope> = u.iter().map(|&x| posterior_y(&p, &[x]).unwrap()).collect();
        let given_u = posterior_y(&p, &u).unwrap();
        let ny = p.space().ny();
        for _ in 0..3 {
            let c: Vec<Rational> = (0..ny).map(|_| int(r.gen_range(-3..=3))).collect();
            if let Some(v) = common::intersection_vertex(&sets, &c) {
                prop_assert!(member(&v, &given_u).unwrap());
            }
        }
    }

    #[test]
    fn hull_contains_the_set_and_keeps_its_projections(seed in any::<u64>(), convex in any::<bool>()) {
        let p = common::credal_set(seed, false, convex);
        let h = hull(&p).unwrap();
        let hp = h.as_polytope();
        for g in p.generators() {
            prop_assert!(member(g.mass(), &hp).unwrap());
        }
        prop_assert!(set_equal(&h.marginal_x().unwrap(), &p.marginal_x().unwrap()).unwrap());
        prop_assert_eq!(support_x(&h), support_x(&p));
        for x in support_x(&p) {
            prop_assert!(set_equal(&posterior_y(&h, &[x]).unwrap(), &posterior_y(&p, &[x]).unwrap()).unwrap());
        }
    }

    #[test]
    fn hull_is_idempotent(seed in any::<u64>()) {
        let p = common::credal_set(seed, false, seed % 2 == 0);
        let h = hull(&p).unwrap();
        prop_assert!(set_equal(&hull(&h).unwrap().as_polytope(), &h.as_polytope()).unwrap());
    }
}

proptest! {
    #![proptest_config(common::config(500))]

    #[test]
    fn hull_points_have_achievable_marginal_and_conditionals(seed in any::<u64>()) {
        let p = common::credal_set(seed, false, true);
        let h = hull(&p).unwrap();
        let mut r = common::rng(seed.wrapping_add(3));
        let gens: Vec<Vec<Rational>> = h.generators().iter().map(|g| g.mass().to_vec()).collect();
        let (nx, ny) = (p.space().nx(), p.space().ny());
        let point = JointDistribution::new(nx, ny, random_mixture(&mut r, &gens)).unwrap();
        prop_assert!(member(&point.x_marginal(), &p.marginal_x().unwrap()).unwrap());
        for x in 0..nx {
            if let Some(c) = point.conditional_y(x) {
                prop_assert!(member(&c, &posterior_y(&p, &[x]).unwrap()).unwrap());
            }
        }
    }
}
