//! Word enumeration, move sets and random walks shared by the test suites.
//!
//! Nothing here is used by the decision procedure itself.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rewrite::{Fixture, Walk};
use crate::sgf::{Sgf, Term, Var};
use crate::sgnt::SgntTerm;
use crate::spaces::{MapId, Origin, Presentation, Result, SpaceId};

/// Four spaces and five maps with a cycle `X1 -> X2 -> X3 -> X1`, so that
/// every pattern of composable and cospan pairs occurs in short words.
pub fn small_presentation(seed: u64) -> Presentation {
    let mut fx = Fixture::new(seed);
    let x: Vec<_> = (0..4).map(|_| fx.space()).collect();
    fx.map(x[0], x[1]);
    fx.map(x[1], x[2]);
    fx.map(x[2], x[3]);
    fx.map(x[0], x[2]);
    fx.map(x[3], x[1]);
    fx.finish().expect("fixture model satisfies an empty relation set")
}

/// `f_*` and `f^*` for every generator, and both identity terms on every
/// base space.
pub fn letters(p: &Presentation) -> Vec<Term> {
    let mut out = Vec::new();
    for g in 0..p.gens().len() {
        let m = p.gen_map(g);
        out.push(Term::lower(m));
        out.push(Term::upper(m));
    }
    for b in 0..p.bases().len() {
        let id = p.id(p.base_space(b));
        out.push(Term::lower(id));
        out.push(Term::upper(id));
    }
    out
}

/// Every nonempty chaining word of length at most `maxlen`.
pub fn enumerate_words(p: &Presentation, letters: &[Term], maxlen: usize) -> Vec<Sgf> {
    fn go(p: &Presentation, letters: &[Term], maxlen: usize, src: SpaceId, rev: &mut Vec<Term>, out: &mut Vec<Sgf>) {
        if !rev.is_empty() {
            let terms: Vec<Term> = rev.iter().rev().copied().collect();
            out.push(Sgf {
                dst: terms[0].output(p),
                terms,
                src,
            });
        }
        if rev.len() == maxlen {
            return;
        }
        let cur = rev.last().map_or(src, |t| t.output(p));
        for t in letters {
            if t.input(p) == cur {
                rev.push(*t);
                go(p, letters, maxlen, src, rev, out);
                rev.pop();
            }
        }
    }
    let mut out = Vec::new();
    for b in 0..p.bases().len() {
        go(p, letters, maxlen, p.base_space(b), &mut Vec::new(), &mut out);
    }
    out
}

/// A uniformly random chaining word of length `len` starting at a random
/// base space; `None` when the walk gets stuck.
pub fn random_word(p: &Presentation, letters: &[Term], len: usize, rng: &mut impl Rng) -> Option<Sgf> {
    let src = p.base_space(rng.gen_range(0..p.bases().len()));
    let mut rev: Vec<Term> = Vec::with_capacity(len);
    let mut cur = src;
    for _ in 0..len {
        let next: Vec<&Term> = letters.iter().filter(|t| t.input(p) == cur).collect();
        let t = **next.choose(rng)?;
        cur = t.output(p);
        rev.push(t);
    }
    rev.reverse();
    Sgf::from_terms(p, rev, src).ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Comp(usize),
    Triv(usize),
    Bc(usize),
    Counit(usize),
    Unit(usize, MapId),
    Untriv(usize, Var),
    /// Split the composite at a position into `(outer, inner)`.
    Split(usize, MapId, MapId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Comp,
    Triv,
    Bc,
    Counit,
    Unit,
    Untriv,
    Split,
}

pub const COMP_TRIV: &[MoveKind] = &[MoveKind::Comp, MoveKind::Triv];
pub const BC_COMP_TRIV: &[MoveKind] = &[MoveKind::Bc, MoveKind::Comp, MoveKind::Triv];
pub const SGNT0: &[MoveKind] = &[MoveKind::Bc, MoveKind::Comp, MoveKind::Triv, MoveKind::Untriv, MoveKind::Split];
pub const SGNT0_UNIT: &[MoveKind] = &[
    MoveKind::Bc,
    MoveKind::Comp,
    MoveKind::Triv,
    MoveKind::Untriv,
    MoveKind::Split,
    MoveKind::Unit,
];
pub const SGNT: &[MoveKind] = &[
    MoveKind::Bc,
    MoveKind::Comp,
    MoveKind::Triv,
    MoveKind::Untriv,
    MoveKind::Split,
    MoveKind::Unit,
    MoveKind::Counit,
];

/// Space between `word[..i]` and `word[i..]`.
pub fn space_at(p: &Presentation, word: &[Term], src: SpaceId, i: usize) -> SpaceId {
    word.get(i).map_or(src, |t| t.output(p))
}

/// Moves of the given kinds applicable to `word`. Units range over the
/// generators and the maps already in the word.
pub fn moves(p: &Presentation, word: &[Term], src: SpaceId, kinds: &[MoveKind]) -> Vec<Move> {
    let mut out = Vec::new();
    let n = word.len();
    for k in kinds {
        match k {
            MoveKind::Comp => out.extend((0..n.saturating_sub(1)).filter(|&i| word[i].var == word[i + 1].var).map(Move::Comp)),
            MoveKind::Triv => out.extend((0..n).filter(|&i| p.is_identity(word[i].map)).map(Move::Triv)),
            MoveKind::Bc => out.extend(
                (0..n.saturating_sub(1))
                    .filter(|&i| word[i].var == Var::Upper && word[i + 1].var == Var::Lower)
                    .map(Move::Bc),
            ),
            MoveKind::Counit => out.extend(
                (0..n.saturating_sub(1))
                    .filter(|&i| word[i] == Term::upper(word[i + 1].map) && word[i + 1].var == Var::Lower)
                    .map(Move::Counit),
            ),
            MoveKind::Unit => {
                let mut maps: Vec<MapId> = (0..p.gens().len()).map(|g| p.gen_map(g)).collect();
                maps.extend(word.iter().map(|t| t.map).filter(|m| !p.is_identity(*m)));
                maps.sort();
                maps.dedup();
                for i in 0..=n {
                    let s = space_at(p, word, src, i);
                    out.extend(maps.iter().filter(|&&m| p.dst(m) == s).map(|&m| Move::Unit(i, m)));
                }
            }
            MoveKind::Untriv => {
                for i in 0..=n {
                    out.push(Move::Untriv(i, Var::Lower));
                    out.push(Move::Untriv(i, Var::Upper));
                }
            }
            MoveKind::Split => {
                for (i, t) in word.iter().enumerate() {
                    for o in p.origins(t.map) {
                        if let Origin::Compose(outer, inner) = o {
                            out.push(Move::Split(i, *outer, *inner));
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn apply_move(p: &mut Presentation, w: &mut Walk, mv: Move) -> Result<()> {
    match mv {
        Move::Comp(i) => w.merge(p, i),
        Move::Triv(i) => w.triv(p, i),
        Move::Bc(i) => w.bc(p, i),
        Move::Counit(i) => w.counit(p, i),
        Move::Unit(i, f) => w.unit(p, i, f),
        Move::Untriv(i, var) => {
            let s = space_at(p, &w.word, w.dom.src, i);
            w.untriv(p, i, var, s)
        }
        Move::Split(i, outer, inner) => w.split(p, i, outer, inner),
    }
}

/// A random walk of at most `steps` moves from `start`. Moves that lengthen
/// the word are skipped once it has `cap` terms.
pub fn random_walk(
    p: &mut Presentation,
    start: &Sgf,
    kinds: &[MoveKind],
    steps: usize,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<Walk> {
    let mut w = Walk::start(start.clone());
    for _ in 0..steps {
        let ms: Vec<Move> = moves(p, &w.word, w.dom.src, kinds)
            .into_iter()
            .filter(|m| w.word.len() < cap || !matches!(m, Move::Unit(..) | Move::Untriv(..) | Move::Split(..)))
            .collect();
        let Some(&mv) = ms.choose(rng) else { break };
        apply_move(p, &mut w, mv)?;
    }
    Ok(w)
}

/// Applies random moves of the given kinds until none applies.
pub fn drive(p: &mut Presentation, w: &mut Walk, kinds: &[MoveKind], rng: &mut impl Rng) -> Result<()> {
    loop {
        let ms = moves(p, &w.word, w.dom.src, kinds);
        let Some(&mv) = ms.choose(rng) else { return Ok(()) };
        apply_move(p, w, mv)?;
    }
}

/// Outcome of exploring every move order from one word.
pub struct Exploration {
    pub states: usize,
    /// Words where no move applies, each with the term of the first path
    /// found to it.
    pub terminals: Vec<(Vec<Term>, SgntTerm)>,
    /// Paths whose key differed from the key of an earlier path to the
    /// same state.
    pub divergences: Vec<String>,
    pub paths_compared: usize,
}

/// Explores all move orders from `dom`, identifying states by their word.
/// `key` is compared along every edge into a state when `every_state` is
/// set, and along edges into terminal states otherwise. Comparing at every
/// state is enough for all maximal paths: two paths agree as soon as they
/// meet.
pub fn explore(
    p: &mut Presentation,
    dom: &Sgf,
    kinds: &[MoveKind],
    every_state: bool,
    mut key: impl FnMut(&mut Presentation, &SgntTerm) -> Result<SgntTerm>,
) -> Result<Exploration> {
    let mut seen: HashMap<Vec<Term>, (Walk, Option<SgntTerm>)> = HashMap::new();
    let mut queue = vec![Walk::start(dom.clone())];
    let mut terminals = Vec::new();
    let mut divergences = Vec::new();
    let mut compared = 0;
    seen.insert(dom.terms.clone(), (queue[0].clone(), None));
    while let Some(w) = queue.pop() {
        let ms = moves(p, &w.word, w.dom.src, kinds);
        if ms.is_empty() {
            terminals.push((w.word.clone(), w.clone().finish(p)?));
            continue;
        }
        for mv in ms {
            let mut next = w.clone();
            apply_move(p, &mut next, mv)?;
            let terminal = moves(p, &next.word, next.dom.src, kinds).is_empty();
            let want = every_state || terminal;
            let k = if want { Some(key(p, &next.clone().finish(p)?)?) } else { None };
            match seen.get_mut(&next.word) {
                Some((_, stored)) => {
                    if let (Some(a), Some(b)) = (stored.as_ref(), k.as_ref()) {
                        compared += 1;
                        if a != b {
                            divergences.push(format!(
                                "{} via {:?}: {} vs {}",
                                dom.display(p),
                                mv,
                                a.display(p),
                                b.display(p)
                            ));
                        }
                    }
                }
                None => {
                    seen.insert(next.word.clone(), (next.clone(), k));
                    queue.push(next);
                }
            }
        }
    }
    Ok(Exploration {
        states: seen.len(),
        terminals,
        divergences,
        paths_compared: compared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts_chains() {
        let p = small_presentation(1);
        let ls = letters(&p);
        let one = enumerate_words(&p, &ls, 1);
        assert_eq!(one.len(), ls.len());
        let two = enumerate_words(&p, &ls, 2);
        assert!(two.iter().all(|w| w.check(&p).is_ok()));
    }

    #[test]
    fn random_walks_stay_well_typed() {
        use rand::SeedableRng;
        let mut p = small_presentation(2);
        let ls = letters(&p);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = random_word(&p, &ls, 3, &mut rng).unwrap();
            let w = random_walk(&mut p, &f, SGNT, 6, 6, &mut rng).unwrap();
            w.finish(&p).unwrap().check(&p).unwrap();
        }
    }
}
