use proptest::prelude::*;

use nilwalk::bounds::{check_elo, elo_bound};
use nilwalk::group::{GroupContext, GroupElement, Mat2};
use nilwalk::measure::{d_mu, sign_walk, Measure, StepOrder, WalkSpec};
use nilwalk::nilprog::{collect, letters_from_signed, Progression};
use nilwalk::rational::{int, rat, Rational};
use nilwalk::sl2::{commutator_pair, transfer_matrix};
use nilwalk::structure::{mult_energy, truncate_measure, TruncationParams};

fn perm4() -> impl Strategy<Value = GroupElement> {
    Just((0u32..4).collect::<Vec<_>>()).prop_shuffle().prop_map(GroupElement::Perm)
}

fn measure4() -> impl Strategy<Value = Measure> {
    prop::collection::vec((perm4(), 1i64..30), 1..12).prop_map(|atoms| {
        let total: i64 = atoms.iter().map(|a| a.1).sum();
        let ctx = GroupContext::symmetric(4).unwrap();
        Measure::from_atoms(&ctx, atoms.into_iter().map(|(g, w)| (g, rat(w, total)))).unwrap()
    })
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-40i64..40, 1i64..12).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convolution_is_associative(a in measure4(), b in measure4(), c in measure4()) {
        let left = a.convolve(&b, 100).unwrap().convolve(&c, 100).unwrap();
        let right = a.convolve(&b.convolve(&c, 100).unwrap(), 100).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn young_chain(a in measure4(), b in measure4()) {
        let ab = a.convolve(&b, 100).unwrap();
        prop_assert!(a.norms().young_chain_holds());
        prop_assert!(ab.norms().young_chain_holds());
        let (sup, _) = ab.linf();
        prop_assert!(&sup * &sup <= a.l2sq() * b.l2sq());
        prop_assert!(ab.l2sq() <= a.l2sq().min(b.l2sq()));
    }

    #[test]
    fn d_mu_symmetric_and_inversion_invariant(mu in measure4(), g in perm4(), h in perm4()) {
        let ctx = mu.ctx().clone();
        prop_assert_eq!(d_mu(&mu, &g, &h), d_mu(&mu, &h, &g));
        prop_assert_eq!(d_mu(&mu, &g, &ctx.identity()), d_mu(&mu, &ctx.inv(&g), &ctx.identity()));
        prop_assert!(d_mu(&mu, &g, &g).squared == Rational::from_integer(0.into()));
    }

    #[test]
    fn truncation_partitions(mu in measure4(), k in 1i64..50) {
        let params = TruncationParams::new(int(k)).unwrap();
        let t = truncate_measure(&mu, &params);
        prop_assert!(t.partitions(&mu));
        prop_assert!(t.heavy_bound_holds && t.light_bound_holds);
        prop_assert!(t.heavy.mass() <= int(1) / &params.m);
        prop_assert!(t.light.l2sq() <= &params.delta * mu.l2sq());
    }

    #[test]
    fn energy_between_sizes(a in prop::collection::btree_set(perm4(), 1..8), b in prop::collection::btree_set(perm4(), 1..8)) {
        let ctx = GroupContext::symmetric(4).unwrap();
        let (a, b): (Vec<_>, Vec<_>) = (a.into_iter().collect(), b.into_iter().collect());
        let e = mult_energy(&ctx, &a, &b, 10_000).unwrap();
        let (x, y) = (a.len() as u128, b.len() as u128);
        // |A||B| <= E(A, B) <= |A|^2 |B| and <= |A||B|^2
        prop_assert!(x * y <= e && e <= x * y * x.min(y));
    }

    #[test]
    fn elo_bound_holds(a in prop::collection::vec(prop_oneof![-30i64..0, 1i64..30], 1..12)) {
        let r = check_elo(&sign_walk(&a).unwrap(), 1 << 16).unwrap();
        prop_assert!(r.passes);
        prop_assert!(r.rho <= elo_bound(a.len()));
    }

    #[test]
    fn commutator_displays(e in small_rational(), l in (1i64..20, 1i64..12), a in small_rational()) {
        prop_assume!(a != int(0));
        let lambda = rat(l.0, l.1);
        let p = commutator_pair(&e, &lambda, &a).unwrap();
        let t = int(2) * &lambda * &a;
        prop_assert_eq!(p.h1, GroupElement::RatMatrix(Mat2::new([int(1), t.clone(), int(0), int(1)])));
        prop_assert_eq!(p.h2, GroupElement::RatMatrix(Mat2::new([int(1), int(0), t, int(1)])));
        prop_assert!(p.mu.clone() * p.mu.clone() >= int(4));
        match transfer_matrix(&e, &lambda, &a) {
            GroupElement::RatMatrix(m) => prop_assert_eq!(m.det(), int(1)),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn collected_word_reproduces_element(w in prop::collection::vec(prop_oneof![-3i64..0, 1i64..4], 0..24)) {
        let ctx = GroupContext::Heisenberg;
        let gens = vec![
            GroupElement::Heisenberg([1, 0, 0]),
            GroupElement::Heisenberg([0, 1, 0]),
            GroupElement::Heisenberg([0, 0, 1]),
        ];
        let p = Progression::new(&ctx, gens.clone(), vec![int(24), int(24), int(576)]).unwrap();
        let r = collect(&letters_from_signed(&w).unwrap(), &p, p.lengths(), &int(1)).unwrap();
        let direct = w.iter().fold(ctx.identity(), |acc, &x| {
            let g = &gens[(x.unsigned_abs() - 1) as usize];
            ctx.mul(&acc, &if x < 0 { ctx.inv(g) } else { g.clone() })
        });
        prop_assert_eq!(r.element, direct.clone());
        prop_assert_eq!(p.normal_form_element(&r.exponents), direct);
    }

    #[test]
    fn rho_at_least_heaviest_path(steps in prop::collection::vec(measure4(), 1..5)) {
        let ctx = GroupContext::symmetric(4).unwrap();
        let floor: Rational = steps.iter().map(|m| m.linf().0).product();
        let w = WalkSpec::new(&ctx, steps, int(0)).unwrap();
        prop_assert!(w.rho_exact(None, StepOrder::LaterLeft, 1000).unwrap().rho >= floor);
    }
}
