use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geocoh::oracle::{agree, random_model, Evaluator};
use geocoh::rewrite::{normalize, sgnt0_canonicalize, Walk};
use geocoh::sgf::{alternating_reduce, roof, Sgf};
use geocoh::sgnt::{Basic, Cell, Kind, SgntTerm};
use geocoh::spaces::{Presentation, Tri};
use geocoh::structures::GeoStructure;
use geocoh::testkit::{letters, random_walk, random_word, small_presentation, COMP_TRIV, SGNT, SGNT0};

fn setup(seed: u64, len: usize) -> Option<(Presentation, Sgf, ChaCha8Rng)> {
    let p = small_presentation(seed % 8);
    let ls = letters(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_word(&p, &ls, len, &mut rng)?;
    Some((p, f, rng))
}

fn walk(p: &mut Presentation, f: &Sgf, kinds: &[geocoh::testkit::MoveKind], steps: usize, rng: &mut ChaCha8Rng) -> SgntTerm {
    random_walk(p, f, kinds, steps, 7, rng).unwrap().finish(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alternating_reduction_is_idempotent(seed in any::<u64>(), len in 0usize..=6) {
        let Some((mut p, f, _)) = setup(seed, len) else { return Ok(()) };
        let (alt, t) = alternating_reduce(&mut p, &f).unwrap();
        prop_assert!(alt.is_alternating(&p));
        prop_assert!(t.flags().in_comp_triv());
        let (again, t2) = alternating_reduce(&mut p, &alt).unwrap();
        prop_assert_eq!(again, alt);
        prop_assert!(t2.is_identity());
    }

    #[test]
    fn roofs_are_roof_shaped_and_fixed(seed in any::<u64>(), len in 0usize..=6) {
        let Some((mut p, f, _)) = setup(seed, len) else { return Ok(()) };
        let r = roof(&mut p, &f).unwrap();
        prop_assert!(r.as_sgf.is_roof_shaped(&p));
        prop_assert!(r.to_roof.flags().in_sgnt0());
        prop_assert!(r.to_roof.layers.iter().all(|l| !l.cell.is_inverse()));
        let again = roof(&mut p, &r.as_sgf).unwrap();
        prop_assert_eq!(&again.as_sgf, &r.as_sgf);
        prop_assert!(again.to_roof.is_identity());
    }

    #[test]
    fn sgnt0_terms_preserve_the_roof(seed in any::<u64>(), len in 1usize..=5, steps in 0usize..=6) {
        let Some((mut p, f, mut rng)) = setup(seed, len) else { return Ok(()) };
        let phi = walk(&mut p, &f, SGNT0, steps, &mut rng);
        let rf = roof(&mut p, &f).unwrap();
        let rg = roof(&mut p, &phi.cod).unwrap();
        prop_assert_eq!(&rf.as_sgf, &rg.as_sgf);
        let via = SgntTerm::vcompose(&rg.to_roof, &phi).unwrap();
        prop_assert_eq!(sgnt0_canonicalize(&mut p, &via).unwrap(), sgnt0_canonicalize(&mut p, &rf.to_roof).unwrap());
    }

    #[test]
    fn normalization_is_idempotent_and_sound(seed in any::<u64>(), len in 1usize..=4, steps in 0usize..=6) {
        let Some((mut p, f, mut rng)) = setup(seed, len) else { return Ok(()) };
        let phi = walk(&mut p, &f, SGNT, steps, &mut rng);
        let n = normalize(&mut p, &phi).unwrap().term;
        prop_assert_eq!((n.dom.clone(), n.cod.clone()), (phi.dom.clone(), phi.cod.clone()));
        prop_assert_eq!(&normalize(&mut p, &n).unwrap().term, &n);
        prop_assert!(agree(&p, &phi, &n, 4, seed));
    }

    #[test]
    fn free_inverses_cancel(seed in any::<u64>(), len in 1usize..=5, steps in 0usize..=6) {
        let Some((mut p, f, mut rng)) = setup(seed, len) else { return Ok(()) };
        let phi = walk(&mut p, &f, COMP_TRIV, steps, &mut rng);
        let inv = phi.inverse_free().unwrap();
        let loop_ = SgntTerm::vcompose(&inv, &phi).unwrap();
        prop_assert!(normalize(&mut p, &loop_).unwrap().term.is_identity());
    }

    #[test]
    fn class_never_drops_when_layers_are_added(seed in any::<u64>(), len in 1usize..=4, steps in 1usize..=6) {
        let Some((mut p, f, mut rng)) = setup(seed, len) else { return Ok(()) };
        let phi = walk(&mut p, &f, SGNT, steps, &mut rng);
        let mut w = Walk::start(phi.dom.clone());
        let mut last = w.clone().finish(&p).unwrap().level();
        for l in &phi.layers {
            w.apply(&mut p, l.left.len(), l.cell.clone()).unwrap();
            let now = w.clone().finish(&p).unwrap().level();
            prop_assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn pullbacks_are_memoized_and_fibered(seed in any::<u64>(), i in 0usize..5, j in 0usize..5) {
        let mut p = small_presentation(seed % 8);
        let (f, g) = (p.gen_map(i), p.gen_map(j));
        if p.dst(f) != p.dst(g) {
            return Ok(());
        }
        let a = p.pullback(f, g).unwrap();
        prop_assert_eq!(&p.pullback(f, g).unwrap(), &a);
        prop_assert_eq!(p.compose(f, a.gt).unwrap(), p.compose(g, a.ft).unwrap());
        let mut ev = Evaluator::canonical(&p).unwrap();
        let (gf, gg) = (ev.graph(f).unwrap(), ev.graph(g).unwrap());
        let pairs = gf.iter().flat_map(|x| gg.iter().filter(move |z| *z == x)).count();
        prop_assert_eq!(ev.size(a.apex).unwrap(), pairs);
    }

    #[test]
    fn base_changes_evaluate_invertibly(seed in any::<u64>(), len in 2usize..=5) {
        let Some((mut p, f, mut rng)) = setup(seed, len) else { return Ok(()) };
        let phi = walk(&mut p, &f, SGNT0, 6, &mut rng);
        let Some(model) = random_model(&p, &mut rng) else { return Ok(()) };
        let mut ev = Evaluator::new(&p, model);
        for l in phi.layers.iter().filter(|l| l.cell.basic().kind() == Kind::Bc) {
            let Cell::Fwd(b @ Basic::Bc(_)) = &l.cell else { continue };
            let shape = ev.ones(b.input(&p)).unwrap();
            let m = ev.basic_component(b, &shape).unwrap();
            prop_assert!(m.iter().all(|x| x.inverse().is_some()));
        }
    }

    #[test]
    fn good_functors_have_invertible_roof_maps(seed in any::<u64>(), len in 1usize..=5) {
        let Some((mut p, f, _)) = setup(seed, len) else { return Ok(()) };
        let geo = GeoStructure::finite();
        if geo.is_good(&mut p, &f).unwrap() != Tri::Yes {
            return Ok(());
        }
        let r = roof(&mut p, &f).unwrap();
        let mut ev = Evaluator::canonical(&p).unwrap();
        let shape = ev.ones(f.src).unwrap();
        let m = ev.eval_sgnt(&r.to_roof, &shape).unwrap();
        prop_assert!(m.iter().all(|x| x.inverse().is_some()));
    }
}
