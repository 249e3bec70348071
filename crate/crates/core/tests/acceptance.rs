//! The nine acceptance criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the lines reach stdout; exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geocoh::cli::{Query, Session};
use geocoh::decide::{decide_equal, sgnt0_square, DecideOptions, Verdict};
use geocoh::oracle::{agree, agree_in_model, compare_at, replay, Evaluator, Witness};
use geocoh::rewrite::{
    check_instance, coherence_form, level_form, normalize, rule_catalogue, sgnt0_canonicalize, Walk,
};
use geocoh::sgf::{alternating_reduce, roof, Sgf, Term};
use geocoh::sgnt::SgntTerm;
use geocoh::spaces::{FiniteModel, Presentation};
use geocoh::structures::GeoStructure;
use geocoh::testkit::{
    apply_move, drive, enumerate_words, moves, Move, explore, letters, random_walk, random_word, small_presentation, MoveKind, BC_COMP_TRIV,
    COMP_TRIV, SGNT, SGNT0, SGNT0_UNIT,
};

type Outcome = Result<String, String>;

/// Verdicts seen across suites, checked against the oracle.
#[derive(Default)]
struct Soundness {
    equal: usize,
    refuted: Vec<String>,
    unequal: usize,
    not_replayed: Vec<String>,
    unknown: usize,
}

impl Soundness {
    fn record(&mut self, p: &Presentation, phi: &SgntTerm, psi: &SgntTerm, v: &Verdict, trials: usize, seed: u64) {
        match v {
            Verdict::Equal { proof } => {
                self.equal += 1;
                // Main-theorem hypotheses are checked in the session model.
                let ok = if proof.step == "main-theorem" {
                    agree_in_model(p, phi, psi, trials, seed)
                } else {
                    agree(p, phi, psi, trials, seed)
                };
                if !ok {
                    self.refuted.push(format!("{} == {} by {}", phi.display(p), psi.display(p), proof.step));
                }
            }
            Verdict::Unequal { .. } => {
                self.unequal += 1;
                let json = serde_json::to_string(v).expect("verdicts serialize");
                let back: serde_json::Value = serde_json::from_str(&json).expect("round trip");
                let ok = serde_json::from_value::<Witness>(back["witness"].clone())
                    .map(|w| replay(p, phi, psi, &w) && replay(p, phi, psi, &w))
                    .unwrap_or(false);
                if !ok {
                    self.not_replayed.push(format!("{} vs {}", phi.display(p), psi.display(p)));
                }
            }
            Verdict::Unknown { .. } => self.unknown += 1,
        }
    }

    fn merge(&mut self, o: Soundness) {
        self.equal += o.equal;
        self.refuted.extend(o.refuted);
        self.unequal += o.unequal;
        self.not_replayed.extend(o.not_replayed);
        self.unknown += o.unknown;
    }
}

fn fail_if(bad: &[String], what: &str, ok: String) -> Outcome {
    if bad.is_empty() {
        Ok(ok)
    } else {
        Err(format!("{} {what}; first: {}", bad.len(), bad[0]))
    }
}

// ---------------------------------------------------------------------

fn comp_triv_coherence() -> Outcome {
    let mut p = small_presentation(101);
    let ls = letters(&p);
    let words = enumerate_words(&p, &ls, 6);
    let mut bad = Vec::new();
    let (mut states, mut compared, mut spot) = (0, 0, 0);
    for (i, f) in words.iter().enumerate() {
        let ex = explore(&mut p, f, COMP_TRIV, true, |p, t| Ok(normalize(p, t)?.term)).map_err(|e| e.to_string())?;
        states += ex.states;
        compared += ex.paths_compared;
        bad.extend(ex.divergences);
        let (alt, _) = alternating_reduce(&mut p, f).map_err(|e| e.to_string())?;
        let canon = coherence_form(&mut p, f, &alt).map_err(|e| e.to_string())?;
        for (w, t) in &ex.terminals {
            if *w != alt.terms {
                bad.push(format!("{} reaches {:?}", f.display(&p), w));
            }
            let n = normalize(&mut p, t).map_err(|e| e.to_string())?.term;
            if n != normalize(&mut p, &canon).map_err(|e| e.to_string())?.term {
                bad.push(format!("{}: normal form differs from the canonical map", f.display(&p)));
            }
            if i % 61 == 0 {
                spot += 1;
                if !agree(&p, t, &canon, 3, i as u64) {
                    bad.push(format!("{}: oracle separates a path from the canonical map", f.display(&p)));
                }
            }
        }
    }
    fail_if(
        &bad,
        "divergences",
        format!(
            "{} words, {} states, {} path meetings compared, {} oracle spot checks, 0 divergences",
            words.len(),
            states,
            compared,
            spot
        ),
    )
}

fn roof_uniqueness() -> Outcome {
    let mut p = small_presentation(202);
    let ls = letters(&p);
    let words = enumerate_words(&p, &ls, 6);
    let mut bad = Vec::new();
    let (mut terminals, mut spot) = (0, 0);
    for (i, f) in words.iter().enumerate() {
        let ex = explore(&mut p, f, BC_COMP_TRIV, false, |p, t| sgnt0_canonicalize(p, t)).map_err(|e| e.to_string())?;
        bad.extend(ex.divergences);
        let r = roof(&mut p, f).map_err(|e| e.to_string())?;
        let lf = level_form(&mut p, f).map_err(|e| e.to_string())?;
        for (w, t) in &ex.terminals {
            terminals += 1;
            if *w != r.as_sgf.terms {
                bad.push(format!("{} ends at {:?}, roof {}", f.display(&p), w, r.as_sgf.display(&p)));
                continue;
            }
            if i % 53 == 0 {
                spot += 1;
                let c = sgnt0_canonicalize(&mut p, t).map_err(|e| e.to_string())?;
                if !agree(&p, t, &lf, 3, i as u64) || !agree(&p, &c, &lf, 3, i as u64) {
                    bad.push(format!("{}: oracle separates an order from the level form", f.display(&p)));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut trials = 0;
    while trials < 1000 {
        let len = rng.gen_range(1..=6);
        let Some(f) = random_word(&p, &ls, len, &mut rng) else { continue };
        trials += 1;
        let steps = rng.gen_range(1..=8);
        let w = random_walk(&mut p, &f, SGNT0, steps, 8, &mut rng).map_err(|e| e.to_string())?;
        let phi = w.finish(&p).map_err(|e| e.to_string())?;
        let rf = roof(&mut p, &f).map_err(|e| e.to_string())?;
        let rg = roof(&mut p, &phi.cod).map_err(|e| e.to_string())?;
        if rf.as_sgf != rg.as_sgf {
            bad.push(format!(
                "{} -> {}: roofs {} and {}",
                f.display(&p),
                phi.cod.display(&p),
                rf.as_sgf.display(&p),
                rg.as_sgf.display(&p)
            ));
            continue;
        }
        let via = SgntTerm::vcompose(&rg.to_roof, &phi).map_err(|e| e.to_string())?;
        if !agree(&p, &via, &rf.to_roof, 2, trials as u64) {
            bad.push(format!("{}: roof maps differ after {}", f.display(&p), phi.display(&p)));
        }
    }
    fail_if(
        &bad,
        "failures",
        format!(
            "{} words, {} roof states, every order into them canonicalizes identically, {} oracle spot checks; roof invariant in {} random SGNT0 trials",
            words.len(),
            terminals,
            spot,
            trials
        ),
    )
}

fn rule_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rules = rule_catalogue();
    let mut bad = Vec::new();
    for r in &rules {
        for k in 0..100 {
            match r.instantiate(&mut rng) {
                Ok(inst) => {
                    if let Err(e) = check_instance(&inst, 1, &mut rng) {
                        bad.push(format!("{} instance {k}: {e}", r.name));
                        break;
                    }
                }
                Err(e) => {
                    bad.push(format!("{} instance {k}: {e}", r.name));
                    break;
                }
            }
        }
    }
    let families: std::collections::BTreeSet<&str> = rules.iter().map(|r| r.family).collect();
    fail_if(
        &bad,
        "rules failed",
        format!("{} rules in {} families, 100 instances each, exact", rules.len(), families.len()),
    )
}

// ---------------------------------------------------------------------
// Exhaustive small models

/// Every model with carriers of size 1..=max and every function for
/// each generator.
fn all_models(p: &Presentation, max: usize) -> Vec<FiniteModel> {
    let nb = p.bases().len();
    let mut out = Vec::new();
    let mut sizes = vec![1usize; nb];
    loop {
        let carriers: Vec<Vec<String>> = sizes.iter().map(|&n| (0..n).map(|i| i.to_string()).collect()).collect();
        let gens = p.gens();
        let mut graphs: Vec<Vec<usize>> = gens.iter().map(|g| vec![0; sizes[g.src]]).collect();
        'graphs: loop {
            out.push(FiniteModel {
                carriers: carriers.clone(),
                graphs: graphs.clone(),
            });
            for (gi, g) in gens.iter().enumerate() {
                for x in 0..graphs[gi].len() {
                    graphs[gi][x] += 1;
                    if graphs[gi][x] < sizes[g.dst] {
                        continue 'graphs;
                    }
                    graphs[gi][x] = 0;
                }
            }
            break;
        }
        let mut i = 0;
        loop {
            if i == nb {
                return out;
            }
            sizes[i] += 1;
            if sizes[i] <= max {
                break;
            }
            sizes[i] = 1;
            i += 1;
        }
    }
}

fn all_shapes(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..=max).map(move |d| {
                    let mut s = s.clone();
                    s.push(d);
                    s
                })
            })
            .collect();
    }
    out
}

fn exhaustive(p: &Presentation, eqs: &[(&str, SgntTerm, SgntTerm)], bad: &mut Vec<String>) -> usize {
    let mut checks = 0;
    for m in all_models(p, 3) {
        let mut ev = Evaluator::new(p, m);
        for (name, a, b) in eqs {
            let n = ev.size(a.src()).expect("base carrier");
            for s in all_shapes(n, 2) {
                checks += 1;
                match compare_at(&mut ev, a, b, &s) {
                    Ok(None) => {}
                    Ok(Some((pt, x, y))) => {
                        bad.push(format!("{name}: dims {s:?}, point {pt}: {x} vs {y}"));
                        return checks;
                    }
                    Err(e) => {
                        bad.push(format!("{name}: {e}"));
                        return checks;
                    }
                }
            }
        }
    }
    checks
}

fn pseudofunctor_axioms() -> Outcome {
    let e = |x: geocoh::spaces::SpaceError| x.to_string();
    let mut bad = Vec::new();
    let mut checks = 0;

    // Triangle identities and trivializations against composition.
    let mut p = Presentation::new();
    let x = p.add_base("X").unwrap();
    let y = p.add_base("Y").unwrap();
    let f = p.add_map("f", x, y, false).unwrap();
    let (ix, iy) = (p.id(p.base_space(x)), p.id(p.base_space(y)));
    let mut eqs = Vec::new();
    for (name, word, unit_at, counit_at) in [
        ("triangle f_*", vec![Term::lower(f)], 0, 1),
        ("triangle f^*", vec![Term::upper(f)], 1, 0),
    ] {
        let mut w = Walk::new(&p, word.clone()).map_err(e)?;
        w.unit(&mut p, unit_at, f).map_err(e)?;
        w.counit(&mut p, counit_at).map_err(e)?;
        let id = SgntTerm::id(Sgf::new(&p, word).map_err(e)?);
        eqs.push((name, w.finish(&p).map_err(e)?, id));
    }
    for (name, word, triv_at) in [
        ("f_* id_*", vec![Term::lower(f), Term::lower(ix)], 1),
        ("id_* f_*", vec![Term::lower(iy), Term::lower(f)], 0),
        ("f^* id^*", vec![Term::upper(f), Term::upper(iy)], 1),
        ("id^* f^*", vec![Term::upper(ix), Term::upper(f)], 0),
        ("id_* id_*", vec![Term::lower(ix), Term::lower(ix)], 0),
        ("id^* id^*", vec![Term::upper(ix), Term::upper(ix)], 1),
    ] {
        let mut a = Walk::new(&p, word.clone()).map_err(e)?;
        a.triv(&mut p, triv_at).map_err(e)?;
        let mut b = Walk::new(&p, word).map_err(e)?;
        b.merge(&mut p, 0).map_err(e)?;
        if b.word != a.word {
            b.triv(&mut p, 0).map_err(e)?;
        }
        eqs.push((name, a.finish(&p).map_err(e)?, b.finish(&p).map_err(e)?));
    }
    let n_small = eqs.len();
    checks += exhaustive(&p, &eqs, &mut bad);

    // Associativity, both variances.
    let mut q = Presentation::new();
    let b: Vec<_> = ["W", "X", "Y", "Z"].iter().map(|n| q.add_base(n).unwrap()).collect();
    let f = q.add_map("f", b[0], b[1], false).unwrap();
    let g = q.add_map("g", b[1], b[2], false).unwrap();
    let h = q.add_map("h", b[2], b[3], false).unwrap();
    let mut eqs = Vec::new();
    for (name, word) in [
        ("assoc h_* g_* f_*", vec![Term::lower(h), Term::lower(g), Term::lower(f)]),
        ("assoc f^* g^* h^*", vec![Term::upper(f), Term::upper(g), Term::upper(h)]),
    ] {
        let mut l = Walk::new(&q, word.clone()).map_err(e)?;
        l.merge(&mut q, 0).map_err(e)?;
        l.merge(&mut q, 0).map_err(e)?;
        let mut r = Walk::new(&q, word).map_err(e)?;
        r.merge(&mut q, 1).map_err(e)?;
        r.merge(&mut q, 0).map_err(e)?;
        eqs.push((name, l.finish(&q).map_err(e)?, r.finish(&q).map_err(e)?));
    }
    checks += exhaustive(&q, &eqs, &mut bad);
    fail_if(
        &bad,
        "failures",
        format!(
            "{} identities, {} (model, shape) evaluations over carriers <= 3, dims <= 2, all exact",
            n_small + eqs.len(),
            checks
        ),
    )
}

// ---------------------------------------------------------------------

fn balmer(snd: &mut Soundness) -> Outcome {
    let mut p = Presentation::new();
    let x = p.add_base("X").unwrap();
    let y = p.add_base("Y").unwrap();
    let f = p.add_map("f", x, y, false).unwrap();
    p.set_model(FiniteModel {
        carriers: vec![vec!["1".into(), "2".into()], vec!["*".into()]],
        graphs: vec![vec![0, 0]],
    })
    .map_err(|e| e.to_string())?;
    let word = vec![Term::upper(f), Term::lower(f), Term::upper(f)];
    let mut w = Walk::new(&p, word.clone()).map_err(|e| e.to_string())?;
    w.counit(&mut p, 0).map_err(|e| e.to_string())?;
    w.unit(&mut p, 1, f).map_err(|e| e.to_string())?;
    let phi = w.finish(&p).map_err(|e| e.to_string())?;
    let id = SgntTerm::id(Sgf::new(&p, word).map_err(|e| e.to_string())?);
    let v = decide_equal(&mut p, &phi, &id, &GeoStructure::finite(), DecideOptions::default()).map_err(|e| e.to_string())?;
    snd.record(&p, &phi, &id, &v, 100, 5);
    let Verdict::Unequal { witness, diagnostics } = &v else {
        return Err(format!("verdict {}", v.name()));
    };
    let want = vec![vec!["1".to_string(), "0".into()], vec!["1".into(), "0".into()]];
    if witness.point_label != "1" || witness.lhs != want {
        return Err(format!("witness at {} is {:?}", witness.point_label, witness.lhs));
    }
    let first = diagnostics.first().map(|h| h.name.clone()).unwrap_or_default();
    if first.is_empty() {
        return Err("no failed hypothesis named".into());
    }
    Ok(format!(
        "unequal; at point {} lhs = {:?}, rhs = {:?}; failed hypotheses: {}",
        witness.point_label,
        witness.lhs,
        witness.rhs,
        diagnostics.iter().map(|h| h.name.as_str()).collect::<Vec<_>>().join(", ")
    ))
}

fn sessions_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../sessions")
}

fn worked_diagrams(snd: &mut Soundness) -> Outcome {
    let mut steps: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut bad = Vec::new();
    for name in [
        "projection_associativity",
        "projection_composite",
        "cup_naturality",
        "cohomological_pullback",
    ] {
        let path = sessions_dir().join(format!("{name}.gfc"));
        let src = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut s = Session::parse(&src).map_err(|e| format!("{name}: {e}"))?;
        let checks: Vec<_> = s.queries.clone();
        let mut first = true;
        for st in checks {
            let Query::Check { lhs, rhs } = &st.query else { continue };
            let v = decide_equal(&mut s.p, lhs, rhs, &s.geo, DecideOptions::default()).map_err(|e| e.to_string())?;
            snd.record(&s.p, lhs, rhs, &v, 100, 6);
            match &v {
                Verdict::Equal { proof } if proof.step != "main-theorem" => {
                    if first {
                        steps.entry(proof.step.clone()).or_default().push(name.to_string());
                        first = false;
                    }
                }
                other => bad.push(format!("{name} line {}: {}", st.line, other.name())),
            }
        }
    }
    let summary = steps
        .iter()
        .map(|(k, v)| format!("{k}: {}", v.join(", ")))
        .collect::<Vec<_>>()
        .join("; ");
    fail_if(&bad, "not settled by a coherence step", format!("all equal without oracle fallback ({summary})"))
}

// ---------------------------------------------------------------------

/// Random in-class endomorphisms of words with at most one basic term,
/// and maps between trivial words.
fn secondary_theorem(snd: &mut Soundness) -> Outcome {
    let mut p = small_presentation(707);
    let ls = letters(&p);
    let geo = GeoStructure::finite();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let contract = [MoveKind::Counit, MoveKind::Bc, MoveKind::Comp, MoveKind::Triv];
    let trivial = |p: &Presentation, f: &Sgf| f.terms.iter().all(|t| p.is_identity(t.map)) && f.len() <= 1;
    let mut bad = Vec::new();
    let mut steps: BTreeMap<String, usize> = BTreeMap::new();
    let (mut accepted, mut attempts) = (0, 0);
    while accepted < 1000 && attempts < 500_000 {
        attempts += 1;
        let len = rng.gen_range(0..=1);
        let Some(f) = random_word(&p, &ls, len, &mut rng) else { continue };
        let steps_n = rng.gen_range(1..=6);
        let mut w = random_walk(&mut p, &f, SGNT, steps_n, 5, &mut rng).map_err(|e| e.to_string())?;
        drive(&mut p, &mut w, &contract, &mut rng).map_err(|e| e.to_string())?;
        let phi = w.finish(&p).map_err(|e| e.to_string())?;
        let (td, tc) = (trivial(&p, &phi.dom), trivial(&p, &phi.cod));
        let canon = if td && tc {
            coherence_form(&mut p, &phi.dom, &phi.cod).map_err(|e| e.to_string())?
        } else if phi.cod == phi.dom {
            SgntTerm::id(phi.dom.clone())
        } else {
            continue;
        };
        if phi.layers.is_empty() {
            continue;
        }
        accepted += 1;
        let v = decide_equal(&mut p, &phi, &canon, &geo, DecideOptions { trials: 20, seed: accepted }).map_err(|e| e.to_string())?;
        snd.record(&p, &phi, &canon, &v, 10, accepted as u64);
        match &v {
            Verdict::Equal { proof } => *steps.entry(proof.step.clone()).or_default() += 1,
            other => bad.push(format!("{}: {}", phi.display(&p), other.name())),
        }
    }
    if accepted < 1000 {
        bad.push(format!("only {accepted} in-class terms generated in {attempts} attempts"));
    }
    let by = steps.iter().map(|(k, n)| format!("{k} {n}")).collect::<Vec<_>>().join(", ");
    fail_if(&bad, "not equal to the canonical map", format!("{accepted} random terms equal to the canonical map ({by})"))
}

fn squares() -> Outcome {
    let mut p = small_presentation(808);
    let ls = letters(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = Vec::new();
    let (mut done, mut with_unit, mut with_down) = (0, 0, 0);
    while done < 200 {
        let len = rng.gen_range(0..=4);
        let Some(f) = random_word(&p, &ls, len, &mut rng) else { continue };
        let steps = rng.gen_range(1..=6);
        let w = random_walk(&mut p, &f, SGNT0_UNIT, steps, 6, &mut rng).map_err(|e| e.to_string())?;
        let phi = w.finish(&p).map_err(|e| e.to_string())?;
        done += 1;
        if phi.flags().in_sgnt0_unit() && !phi.flags().in_sgnt0() {
            with_unit += 1;
        }
        match sgnt0_square(&mut p, &phi) {
            Ok(sq) => {
                with_down += usize::from(sq.down.is_some());
                let (a, b) = sq.paths().map_err(|e| e.to_string())?;
                if !agree(&p, &a, &b, 20, done as u64) {
                    bad.push(format!("square of {} does not commute", phi.display(&p)));
                }
            }
            Err(e) => bad.push(format!("{}: {e}", phi.display(&p))),
        }
    }
    fail_if(
        &bad,
        "failures",
        format!("{done} terms ({with_unit} with units, {with_down} with a nontrivial lower edge), both paths equal in 20 models each"),
    )
}

/// Random endomorphisms decided against the identity, mixing counits and
/// units so that all three verdicts occur.
fn soundness(snd: &mut Soundness) -> Outcome {
    let geo = GeoStructure::finite();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let contract = [MoveKind::Counit, MoveKind::Comp, MoveKind::Triv];
    let mut n = 0;
    let mut attempts = 0;
    let mut p = small_presentation(900);
    let mut ls = letters(&p);
    let mut fresh_at = 30;
    while n < 300 && attempts < 100_000 {
        attempts += 1;
        // Fresh random graphs every 30 terms.
        if n == fresh_at {
            fresh_at += 30;
            p = small_presentation(900 + n);
            ls = letters(&p);
        }
        let len = rng.gen_range(1..=3);
        let Some(f) = random_word(&p, &ls, len, &mut rng) else { continue };
        let steps = rng.gen_range(1..=4);
        let expand = [MoveKind::Unit, MoveKind::Split, MoveKind::Untriv];
        let w = if attempts % 3 == 2 {
            // A counit and a unit on the same map, as in the unit-counit
            // counterexample.
            let mut w = Walk::start(f.clone());
            let counits = moves(&p, &w.word, w.dom.src, &[MoveKind::Counit]);
            let Some(&c) = counits.choose(&mut rng) else { continue };
            apply_move(&mut p, &mut w, c).map_err(|e| e.to_string())?;
            let Move::Counit(i) = c else { unreachable!() };
            let m = f.terms[i + 1].map;
            let units: Vec<Move> = moves(&p, &w.word, w.dom.src, &[MoveKind::Unit])
                .into_iter()
                .filter(|u| matches!(u, Move::Unit(_, n) if *n == m))
                .collect();
            let Some(&u) = units.choose(&mut rng) else { continue };
            apply_move(&mut p, &mut w, u).map_err(|e| e.to_string())?;
            w
        } else if attempts % 3 == 0 {
            let mut w = random_walk(&mut p, &f, &expand, steps, 6, &mut rng).map_err(|e| e.to_string())?;
            drive(&mut p, &mut w, &contract, &mut rng).map_err(|e| e.to_string())?;
            w
        } else {
            // Contract first, then expand back: the shape of the unit-counit
            // counterexample.
            let mut w = random_walk(&mut p, &f, &contract, 2, 6, &mut rng).map_err(|e| e.to_string())?;
            let mid = w.clone().finish(&p).map_err(|e| e.to_string())?.cod;
            let back = random_walk(&mut p, &mid, &expand, steps, 6, &mut rng).map_err(|e| e.to_string())?;
            w.layers.extend(back.layers);
            w.word = back.word;
            w
        };
        let phi = w.finish(&p).map_err(|e| e.to_string())?;
        if phi.cod != phi.dom || phi.layers.is_empty() {
            continue;
        }
        n += 1;
        let id = SgntTerm::id(phi.dom.clone());
        let v = decide_equal(&mut p, &phi, &id, &geo, DecideOptions { trials: 50, seed: n }).map_err(|e| e.to_string())?;
        snd.record(&p, &phi, &id, &v, 30, n);
    }
    let mut bad = snd.refuted.clone();
    bad.extend(snd.not_replayed.iter().cloned());
    if snd.unequal == 0 {
        bad.push("no unequal verdict was produced".into());
    }
    fail_if(
        &bad,
        "unsound verdicts",
        format!(
            "{} equal verdicts confirmed by the oracle, {} unequal witnesses replayed from JSON, {} unknown",
            snd.equal, snd.unequal, snd.unknown
        ),
    )
}

/// Criterion numbers given on the command line select a subset.
fn selected() -> Vec<usize> {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if picked.is_empty() {
        (1..=9).collect()
    } else {
        picked
    }
}

fn main() {
    let started = std::time::Instant::now();
    let want = selected();
    let on = |k: usize| want.contains(&k);
    let skip = || Err::<String, String>("skipped".into());
    let j = |r: std::thread::Result<Outcome>| r.unwrap_or_else(|_| Err("panicked".into()));
    let (c1, c2, c3, c4, (c5, c6, c7, s), c8) = std::thread::scope(|sc| {
        let h1 = sc.spawn(|| if on(1) { comp_triv_coherence() } else { skip() });
        let h2 = sc.spawn(|| if on(2) { roof_uniqueness() } else { skip() });
        let h3 = sc.spawn(|| if on(3) { rule_soundness() } else { skip() });
        let h4 = sc.spawn(|| if on(4) { pseudofunctor_axioms() } else { skip() });
        let h57 = sc.spawn(|| {
            let mut s = Soundness::default();
            let c5 = if on(5) { balmer(&mut s) } else { skip() };
            let c6 = if on(6) { worked_diagrams(&mut s) } else { skip() };
            let c7 = if on(7) { secondary_theorem(&mut s) } else { skip() };
            (c5, c6, c7, s)
        });
        let h8 = sc.spawn(|| if on(8) { squares() } else { skip() });
        (
            j(h1.join()),
            j(h2.join()),
            j(h3.join()),
            j(h4.join()),
            h57.join().unwrap_or_else(|_| {
                let e = || Err("panicked".to_string());
                (e(), e(), e(), Soundness::default())
            }),
            j(h8.join()),
        )
    });
    let mut snd = Soundness::default();
    snd.merge(s);
    let c9 = if on(9) { soundness(&mut snd) } else { skip() };
    let results = [
        ("1 comp/triv coherence", c1),
        ("2 roof uniqueness", c2),
        ("3 rule soundness", c3),
        ("4 triangle and pseudofunctor axioms", c4),
        ("5 balmer counterexample", c5),
        ("6 worked diagrams", c6),
        ("7 secondary theorem", c7),
        ("8 unit-roof and SGNT0 squares", c8),
        ("9 verdict soundness", c9),
    ];
    let mut failed = 0;
    for (k, (name, r)) in results.iter().enumerate() {
        if !on(k + 1) {
            continue;
        }
        match r {
            Ok(d) => println!("PASS criterion {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d}");
            }
        }
    }
    println!(
        "{} of {} criteria pass ({:.1}s)",
        want.len() - failed,
        want.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
