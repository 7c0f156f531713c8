use proptest::prelude::*;

use tauforge::derive::{exp_product, ExpSum};
use tauforge::exactpoly::{CharVector, Monomial, MultiPoly, NuLinear};
use tauforge::operator::{e7_operator, ProjectiveParams};
use tauforge::rootsys::{int, rat, reflect, RVec, Rational, RootSystem, SystemKind};

fn rational() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=6).prop_map(|(n, d)| rat(n, d))
}

fn monomial(max_total: u32) -> impl Strategy<Value = Monomial> {
    proptest::collection::vec(0u32..=2, 7)
        .prop_filter("small total degree", move |e| e.iter().sum::<u32>() <= max_total)
        .prop_map(Monomial)
}

/// Nu-free polynomial in seven variables.
fn poly(max_terms: usize) -> impl Strategy<Value = MultiPoly> {
    proptest::collection::vec((monomial(3), rational()), 0..=max_terms).prop_map(|ts| {
        let mut p = MultiPoly::zero(7);
        for (m, c) in ts {
            p.add_term(m, NuLinear::constant(c));
        }
        p
    })
}

fn point() -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec(rational(), 7)
}

fn rvec(dim: usize) -> impl Strategy<Value = RVec> {
    proptest::collection::vec(rational(), dim).prop_map(RVec::new)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn apply_is_linear(f in poly(3), g in poly(3), a in rational(), b in rational()) {
        let op = e7_operator().unwrap();
        let lhs = op.apply(&(&f.scale(&a) + &g.scale(&b))).unwrap();
        let rhs = &op.apply(&f).unwrap().scale(&a) + &op.apply(&g).unwrap().scale(&b);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn weighted_degree_is_additive(f in poly(4), g in poly(4)) {
        prop_assume!(!f.is_zero() && !g.is_zero());
        let cv = CharVector::e7();
        let fg = f.try_mul(&g).unwrap();
        prop_assert_eq!(fg.weighted_degree(&cv), Some(f.weighted_degree(&cv).unwrap() + g.weighted_degree(&cv).unwrap()));
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(f in poly(4), g in poly(4), x in point(), nu in rational()) {
        let ev = |p: &MultiPoly| p.evaluate_exact(&x, &nu).unwrap();
        prop_assert_eq!(ev(&f.try_mul(&g).unwrap()), ev(&f) * ev(&g));
        prop_assert_eq!(ev(&(&f + &g)), ev(&f) + ev(&g));
        prop_assert_eq!(ev(&(&f - &f)), int(0));
    }

    #[test]
    fn records_round_trip(f in poly(6), c1 in rational(), m in monomial(2)) {
        let cv = CharVector::e7();
        let mut p = f.clone();
        p.add_term(m, NuLinear::nu(c1));
        let recs = p.to_records(&cv);
        let json = serde_json::to_string(&recs).unwrap();
        let back: Vec<tauforge::exactpoly::TermRecord> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(MultiPoly::from_records(7, &back).unwrap(), p);
    }

    #[test]
    fn reflections_are_isometric_involutions(v in rvec(8), k in 0usize..63) {
        let e7 = RootSystem::build(SystemKind::E7).unwrap();
        let a = &e7.positive_roots[k];
        let r = reflect(&v, a).unwrap();
        prop_assert_eq!(r.norm_sq(), v.norm_sq());
        prop_assert_eq!(reflect(&r, a).unwrap(), v.clone());
        prop_assert_eq!(r.dot(a), -v.dot(a));
    }

    #[test]
    fn orbits_are_uniform(kind in prop_oneof![Just(SystemKind::A2), Just(SystemKind::G2)], a in 0i64..3, b in 0i64..3) {
        let sys = RootSystem::build(kind).unwrap();
        let w = &sys.fundamental_weights[0].scale(&int(a)) + &sys.fundamental_weights[1].scale(&int(b));
        let orbit = sys.orbit_of(&w);
        let group_order = if kind == SystemKind::A2 { 6 } else { 12 };
        prop_assert_eq!(group_order % orbit.size(), 0);
        prop_assert!(orbit.elements.iter().all(|u| u.norm_sq() == w.norm_sq()));
        prop_assert_eq!(orbit.elements.iter().filter(|u| sys.is_dominant(u)).count(), 1);
        for s in &sys.simple_roots {
            prop_assert!(orbit.elements.iter().all(|u| orbit.contains(&reflect(u, s).unwrap())));
        }
    }

    #[test]
    fn substitution_preserves_weighted_degree(seed in any::<u64>(), m in monomial(4)) {
        let cv = CharVector::e7();
        let images = ProjectiveParams::random(seed).images();
        let img = MultiPoly::monomial(m.clone()).substitute(&images).unwrap();
        prop_assert_eq!(img.weighted_degree(&cv), Some(m.weighted_degree(&cv)));
    }

    #[test]
    fn exp_product_is_commutative_and_associative(
        s in proptest::collection::vec((rvec(2), rational()), 0..4),
        t in proptest::collection::vec((rvec(2), rational()), 0..4),
        u in proptest::collection::vec((rvec(2), rational()), 0..3),
    ) {
        let build = |xs: &[(RVec, Rational)]| {
            let mut e = ExpSum::new();
            for (mu, c) in xs {
                e.add(mu.clone(), c.clone());
            }
            e
        };
        let (s, t, u) = (build(&s), build(&t), build(&u));
        prop_assert_eq!(exp_product(&s, &t), exp_product(&t, &s));
        prop_assert_eq!(exp_product(&exp_product(&s, &t), &u), exp_product(&s, &exp_product(&t, &u)));
    }
}
