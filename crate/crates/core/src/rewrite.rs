//! Canonical forms and the rule catalogue.
//!
//! Normalization is a fixed sequence of passes repeated to a fixpoint
//! (bounded): identity cells become trivializations, inverse pairs and
//! triangle composites cancel, and every maximal run of `SGNT0` cells is
//! replaced by the canonical representative of its endpoints.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::oracle::{compare_at, random_model, Evaluator};
use crate::sgf::{alternating_reduce, merge_cell, Sgf, Term, Var};
use crate::sgnt::{counit_expand, make_bc, rna, Basic, Cell, Direction, Kind, Layer, Licence, SgntTerm};
use crate::spaces::{BaseId, FiniteModel, MapId, Presentation, Result, SpaceError, SpaceId};

const MAX_ROUNDS: usize = 64;

/// A term built one cell at a time on a running word.
#[derive(Clone, Debug)]
pub struct Walk {
    pub dom: Sgf,
    pub word: Vec<Term>,
    pub layers: Vec<Layer>,
}

impl Walk {
    pub fn start(dom: Sgf) -> Walk {
        Walk {
            word: dom.terms.clone(),
            dom,
            layers: vec![],
        }
    }

    pub fn new(p: &Presentation, terms: Vec<Term>) -> Result<Walk> {
        Ok(Walk::start(Sgf::new(p, terms)?))
    }

    /// A walk from a word that may be empty, over `space` when it is.
    pub fn on(p: &Presentation, terms: Vec<Term>, space: SpaceId) -> Result<Walk> {
        Ok(Walk::start(Sgf::from_terms(p, terms, space)?))
    }

    pub fn apply(&mut self, p: &mut Presentation, pos: usize, cell: Cell) -> Result<()> {
        let dom = cell.dom_terms(p);
        if pos + dom.len() > self.word.len() || self.word[pos..pos + dom.len()] != dom[..] {
            return Err(SpaceError::Endpoint(format!(
                "`{}` does not apply at position {} of `{}`",
                cell.display(p),
                pos,
                self.display_word(p)
            )));
        }
        let layer = crate::sgf::apply_at(p, &mut self.word, pos, cell);
        self.layers.push(layer);
        Ok(())
    }

    fn display_word(&self, p: &Presentation) -> String {
        self.word.iter().map(|t| t.display(p)).collect::<Vec<_>>().join(" ")
    }

    fn term(&self, pos: usize) -> Result<Term> {
        self.word
            .get(pos)
            .copied()
            .ok_or_else(|| SpaceError::Endpoint(format!("no term at position {pos}")))
    }

    /// Composition cell on `word[pos], word[pos+1]`.
    pub fn merge(&mut self, p: &mut Presentation, pos: usize) -> Result<()> {
        let (l, r) = (self.term(pos)?, self.term(pos + 1)?);
        let b = merge_cell(p, l, r)?
            .ok_or_else(|| SpaceError::Endpoint(format!("`{}` and `{}` do not compose", l.display(p), r.display(p))))?;
        self.apply(p, pos, Cell::Fwd(b))
    }

    /// Splits `(outer . inner)` at `pos` into its two factors.
    pub fn split(&mut self, p: &mut Presentation, pos: usize, outer: MapId, inner: MapId) -> Result<()> {
        let gf = p.compose(outer, inner)?;
        let t = self.term(pos)?;
        if t.map != gf {
            return Err(SpaceError::Endpoint(format!("`{}` is not the composite being split", t.display(p))));
        }
        let b = match t.var {
            Var::Lower => Basic::CompLower { f: inner, g: outer, gf },
            Var::Upper => Basic::CompUpper { f: inner, g: outer, gf },
        };
        self.apply(p, pos, Cell::inv_free(b))
    }

    /// Base change at the pair `g^* f_*` at `pos`.
    pub fn bc(&mut self, p: &mut Presentation, pos: usize) -> Result<()> {
        let (g, f) = (self.term(pos)?, self.term(pos + 1)?);
        if g.var != Var::Upper || f.var != Var::Lower {
            return Err(SpaceError::Endpoint("base change needs a `g^* f_*` pair".into()));
        }
        let sq = p.pullback(f.map, g.map)?;
        self.apply(p, pos, Cell::Fwd(Basic::Bc(sq)))
    }

    pub fn unit(&mut self, p: &mut Presentation, pos: usize, f: MapId) -> Result<()> {
        self.apply(p, pos, Cell::Fwd(Basic::Unit(f)))
    }

    pub fn counit(&mut self, p: &mut Presentation, pos: usize) -> Result<()> {
        let f = self.term(pos)?.map;
        self.apply(p, pos, Cell::Fwd(Basic::Counit(f)))
    }

    /// Deletes the identity term at `pos`.
    pub fn triv(&mut self, p: &mut Presentation, pos: usize) -> Result<()> {
        let t = self.term(pos)?;
        let b = triv_of(p, t).ok_or_else(|| SpaceError::Endpoint(format!("`{}` is not an identity term", t.display(p))))?;
        self.apply(p, pos, Cell::Fwd(b))
    }

    /// Inserts an identity term of variance `var` on `space` at `pos`.
    pub fn untriv(&mut self, p: &mut Presentation, pos: usize, var: Var, space: SpaceId) -> Result<()> {
        let b = match var {
            Var::Lower => Basic::TrivLower(space),
            Var::Upper => Basic::TrivUpper(space),
        };
        self.apply(p, pos, Cell::inv_free(b))
    }

    pub fn finish(self, p: &Presentation) -> Result<SgntTerm> {
        SgntTerm::from_layers(p, self.dom, self.layers)
    }
}

fn triv_of(p: &Presentation, t: Term) -> Option<Basic> {
    if !p.is_identity(t.map) {
        return None;
    }
    let x = p.src(t.map);
    Some(match t.var {
        Var::Lower => Basic::TrivLower(x),
        Var::Upper => Basic::TrivUpper(x),
    })
}

fn sub(p: &Presentation, phi: &SgntTerm, i: usize, j: usize) -> SgntTerm {
    let words = phi.words(p);
    SgntTerm {
        dom: words[i].clone(),
        cod: words[j].clone(),
        layers: phi.layers[i..j].to_vec(),
    }
}

fn splice(phi: &SgntTerm, i: usize, j: usize, repl: &SgntTerm) -> SgntTerm {
    let mut layers = phi.layers[..i].to_vec();
    layers.extend(repl.layers.iter().cloned());
    layers.extend(phi.layers[j..].iter().cloned());
    SgntTerm {
        dom: phi.dom.clone(),
        cod: phi.cod.clone(),
        layers,
    }
}

/// Removes adjacent layers that are inverse to each other.
pub fn cancel_inverses(phi: &SgntTerm) -> (SgntTerm, usize) {
    let mut out: Vec<Layer> = Vec::with_capacity(phi.layers.len());
    let mut count = 0;
    for l in &phi.layers {
        if let Some(top) = out.last() {
            if are_inverse(top, l) {
                out.pop();
                count += 1;
                continue;
            }
        }
        out.push(l.clone());
    }
    (
        SgntTerm {
            dom: phi.dom.clone(),
            cod: phi.cod.clone(),
            layers: out,
        },
        count,
    )
}

fn are_inverse(a: &Layer, b: &Layer) -> bool {
    a.left == b.left && a.right == b.right && a.cell.basic() == b.cell.basic() && a.cell.is_inverse() != b.cell.is_inverse()
}

/// The canonical `<comp, triv>` map `dom -> cod`: `alt(cod)^-1 . alt(dom)`.
pub fn coherence_form(p: &mut Presentation, dom: &Sgf, cod: &Sgf) -> Result<SgntTerm> {
    let (a, ta) = alternating_reduce(p, dom)?;
    let (b, tb) = alternating_reduce(p, cod)?;
    if a != b {
        return Err(SpaceError::Class(format!(
            "`{}` and `{}` have different alternating reductions (`{}` and `{}`)",
            dom.display(p),
            cod.display(p),
            a.display(p),
            b.display(p)
        )));
    }
    let back = tb.inverse_free().expect("alternating reductions are free isomorphisms");
    Ok(cancel_inverses(&SgntTerm::vcompose(&back, &ta)?).0)
}

/// The level-ordered `SGNT0+` map from `f` to its roof: base changes at
/// every `g^* f_*` pair of a level (left to right), level after level, then
/// the pushforward block and the pullback block each composed left to
/// right, then identity terms deleted left to right.
pub fn level_form(p: &mut Presentation, f: &Sgf) -> Result<SgntTerm> {
    let mut w = Walk::start(f.clone());
    loop {
        let pos: Vec<usize> = (0..w.word.len().saturating_sub(1))
            .filter(|&i| w.word[i].var == Var::Upper && w.word[i + 1].var == Var::Lower)
            .collect();
        if pos.is_empty() {
            break;
        }
        for i in pos {
            w.bc(p, i)?;
        }
    }
    while w.word.len() >= 2 && w.word[0].var == Var::Lower && w.word[1].var == Var::Lower {
        w.merge(p, 0)?;
    }
    let k = w.word.iter().position(|t| t.var == Var::Upper).unwrap_or(w.word.len());
    while k + 1 < w.word.len() {
        w.merge(p, k)?;
    }
    while let Some(i) = w.word.iter().position(|t| p.is_identity(t.map)) {
        w.triv(p, i)?;
    }
    w.finish(p)
}

fn is_sgnt0_cell(c: &Cell) -> bool {
    match c {
        Cell::Fwd(b) => matches!(b.kind(), Kind::Comp | Kind::Triv | Kind::Bc),
        Cell::Inv(b, lic) => match b.kind() {
            Kind::Comp | Kind::Triv => true,
            Kind::Bc => matches!(lic, Licence::Geoloc(_)),
            _ => false,
        },
    }
}

/// The canonical representative of an `SGNT0` map between the given
/// endpoints, when one is determined by them.
fn sgnt0_candidate(p: &mut Presentation, dom: &Sgf, cod: &Sgf, comp_triv: bool) -> Result<Option<(SgntTerm, &'static str)>> {
    if comp_triv {
        return Ok(Some((coherence_form(p, dom, cod)?, "coherence")));
    }
    let lf = level_form(p, dom)?;
    if cod.is_roof_shaped(p) {
        if lf.cod != *cod {
            return Err(SpaceError::Endpoint(format!(
                "`{}` is roof-shaped but differs from the roof `{}`",
                cod.display(p),
                lf.cod.display(p)
            )));
        }
        return Ok(Some((lf, "roof-canonical")));
    }
    let (alt, t) = alternating_reduce(p, cod)?;
    if alt.is_roof_shaped(p) && alt == lf.cod {
        let back = t.inverse_free().expect("alternating reductions are free isomorphisms");
        let c = cancel_inverses(&SgntTerm::vcompose(&back, &lf)?).0;
        return Ok(Some((c, "roof-canonical")));
    }
    Ok(None)
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub term: SgntTerm,
    /// Rule names in application order.
    pub trace: Vec<String>,
}

/// Normal form of a term: staged passes repeated until nothing changes.
pub fn normalize(p: &mut Presentation, phi: &SgntTerm) -> Result<Normalized> {
    phi.check(p)?;
    let mut cur = phi.clone();
    let mut trace = Vec::new();
    for _ in 0..MAX_ROUNDS {
        let before = cur.clone();
        cur = pass_identity_cells(p, &cur, &mut trace)?;
        let (c, n) = cancel_inverses(&cur);
        trace.extend(std::iter::repeat("inverse-cancel".to_string()).take(n));
        cur = c;
        cur = pass_triangles(&cur, &mut trace);
        cur = pass_runs(p, &cur, &mut trace)?;
        if cur == before {
            break;
        }
    }
    cur.check(p)?;
    Ok(Normalized { term: cur, trace })
}

/// The trivialization form of a cell with an identity leg, unwhiskered.
fn identity_cell_form(p: &mut Presentation, b: &Basic) -> Result<Option<(SgntTerm, &'static str)>> {
    let one = |p: &Presentation, b: &Basic| -> Result<Walk> {
        Walk::on(p, b.dom_terms(p), b.input(p))
    };
    match b {
        Basic::Unit(f) if p.is_identity(*f) => {
            let x = p.src(*f);
            let mut w = one(p, b)?;
            w.untriv(p, 0, Var::Upper, x)?;
            w.untriv(p, 0, Var::Lower, x)?;
            Ok(Some((w.finish(p)?, "identity-unit")))
        }
        Basic::Counit(f) if p.is_identity(*f) => {
            let mut w = one(p, b)?;
            w.triv(p, 0)?;
            w.triv(p, 0)?;
            Ok(Some((w.finish(p)?, "identity-counit")))
        }
        Basic::Bc(sq) if p.is_identity(sq.f) || p.is_identity(sq.g) => {
            let mut w = one(p, b)?;
            if p.is_identity(sq.f) {
                w.triv(p, 1)?;
                w.untriv(p, 0, Var::Lower, p.src(sq.g))?;
            } else {
                w.triv(p, 0)?;
                w.untriv(p, 1, Var::Upper, p.src(sq.f))?;
            }
            let t = w.finish(p)?;
            if t.cod.terms != b.cod_terms(p) {
                return Ok(None);
            }
            Ok(Some((t, "identity-bc")))
        }
        _ => Ok(None),
    }
}

fn pass_identity_cells(p: &mut Presentation, phi: &SgntTerm, trace: &mut Vec<String>) -> Result<SgntTerm> {
    let mut layers = Vec::with_capacity(phi.layers.len());
    for l in &phi.layers {
        let b = l.cell.basic().clone();
        let form = match identity_cell_form(p, &b)? {
            Some((t, name)) => match &l.cell {
                Cell::Fwd(_) => Some((t, name)),
                Cell::Inv(..) => t.inverse_free().map(|i| (i, name)),
            },
            None => None,
        };
        match form {
            Some((t, name)) => {
                trace.push(name.to_string());
                layers.extend(t.layers.into_iter().map(|x| Layer {
                    left: [l.left.clone(), x.left].concat(),
                    cell: x.cell,
                    right: [x.right, l.right.clone()].concat(),
                }));
            }
            None => layers.push(l.clone()),
        }
    }
    Ok(SgntTerm {
        dom: phi.dom.clone(),
        cod: phi.cod.clone(),
        layers,
    })
}

fn pass_triangles(phi: &SgntTerm, trace: &mut Vec<String>) -> SgntTerm {
    let mut out: Vec<Layer> = Vec::with_capacity(phi.layers.len());
    for l in &phi.layers {
        if let (Some(u), Cell::Fwd(Basic::Counit(g))) = (out.last(), &l.cell) {
            if let Cell::Fwd(Basic::Unit(f)) = &u.cell {
                let (s, t) = (u.left.len(), l.left.len());
                if f == g && (t + 1 == s || t == s + 1) {
                    trace.push(if t + 1 == s { "triangle-left" } else { "triangle-right" }.to_string());
                    out.pop();
                    continue;
                }
            }
        }
        out.push(l.clone());
    }
    SgntTerm {
        dom: phi.dom.clone(),
        cod: phi.cod.clone(),
        layers: out,
    }
}

fn pass_runs(p: &mut Presentation, phi: &SgntTerm, trace: &mut Vec<String>) -> Result<SgntTerm> {
    let mut cur = phi.clone();
    let mut i = 0;
    while i < cur.layers.len() {
        if !is_sgnt0_cell(&cur.layers[i].cell) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < cur.layers.len() && is_sgnt0_cell(&cur.layers[j].cell) {
            j += 1;
        }
        let run = sub(p, &cur, i, j);
        let comp_triv = run.flags().in_comp_triv();
        let cand = match sgnt0_candidate(p, &run.dom, &run.cod, comp_triv)? {
            Some(c) => Some(c),
            None => canonical_subruns(p, &run)?.map(|t| (t, "coherence")),
        };
        if let Some((c, name)) = cand {
            if c != run {
                trace.push(name.to_string());
                let n = c.layers.len();
                cur = splice(&cur, i, j, &c);
                i += n;
                continue;
            }
        }
        i = j;
    }
    Ok(cur)
}

/// Canonicalizes the maximal `<comp, triv>` stretches of a run.
fn canonical_subruns(p: &mut Presentation, run: &SgntTerm) -> Result<Option<SgntTerm>> {
    let free = |c: &Cell| c.basic().is_free_iso();
    let mut cur = run.clone();
    let mut changed = false;
    let mut i = 0;
    while i < cur.layers.len() {
        if !free(&cur.layers[i].cell) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < cur.layers.len() && free(&cur.layers[j].cell) {
            j += 1;
        }
        let part = sub(p, &cur, i, j);
        let c = coherence_form(p, &part.dom, &part.cod)?;
        if c != part {
            let n = c.layers.len();
            cur = splice(&cur, i, j, &c);
            changed = true;
            i += n;
        } else {
            i = j;
        }
    }
    Ok(changed.then_some(cur))
}

/// Canonical representative of a term in `SGNT0`.
pub fn sgnt0_canonicalize(p: &mut Presentation, phi: &SgntTerm) -> Result<SgntTerm> {
    phi.check(p)?;
    if let Some(l) = phi.layers.iter().find(|l| !is_sgnt0_cell(&l.cell)) {
        return Err(SpaceError::Class(format!("`{}` is not an SGNT0 cell", l.cell.display(p))));
    }
    // Base changes along identities are trivializations first, so the
    // class below depends only on the map.
    let phi = pass_identity_cells(p, phi, &mut Vec::new())?;
    let comp_triv = phi.flags().in_comp_triv();
    match sgnt0_candidate(p, &phi.dom, &phi.cod, comp_triv)? {
        Some((c, _)) => Ok(c),
        None => Ok(normalize(p, &phi)?.term),
    }
}

fn rank(p: &Presentation, c: &Cell) -> Result<u8> {
    match c {
        Cell::Fwd(b) => Ok(match b.kind() {
            Kind::Bc => 0,
            Kind::Comp => 1,
            Kind::Triv => 2,
            _ => return Err(SpaceError::Class(format!("`{}` is not in <comp0, triv0, bc>", c.display(p)))),
        }),
        Cell::Inv(..) => Err(SpaceError::Class(format!("`{}` is not in <comp0, triv0, bc>", c.display(p)))),
    }
}

/// `(start, dom length, cod length)` of a layer's cell.
fn span(p: &Presentation, l: &Layer) -> (usize, usize, usize) {
    (l.left.len(), l.cell.dom_terms(p).len(), l.cell.cod_terms(p).len())
}

/// Swaps two adjacent layers acting on disjoint parts of the word.
/// `None` when they overlap.
pub fn swap_disjoint(p: &Presentation, lower: &Layer, upper: &Layer) -> Option<(Layer, Layer)> {
    let (s1, d1, c1) = span(p, lower);
    let (s2, d2, _) = span(p, upper);
    let word = lower.dom_word(p);
    if s2 + d2 <= s1 {
        // Upper cell sits left of the lower one.
        let new_lower = Layer {
            left: word[..s2].to_vec(),
            cell: upper.cell.clone(),
            right: word[s2 + d2..].to_vec(),
        };
        let mid = new_lower.cod_word(p);
        let shift = upper.cell.cod_terms(p).len() as isize - d2 as isize;
        let s1n = (s1 as isize + shift) as usize;
        let new_upper = Layer {
            left: mid[..s1n].to_vec(),
            cell: lower.cell.clone(),
            right: mid[s1n + d1..].to_vec(),
        };
        Some((new_lower, new_upper))
    } else if s1 + c1 <= s2 {
        // Upper cell sits right of the lower one.
        let s2n = s2 + d1 - c1;
        let new_lower = Layer {
            left: word[..s2n].to_vec(),
            cell: upper.cell.clone(),
            right: word[s2n + d2..].to_vec(),
        };
        let mid = new_lower.cod_word(p);
        let new_upper = Layer {
            left: mid[..s1].to_vec(),
            cell: lower.cell.clone(),
            right: mid[s1 + d1..].to_vec(),
        };
        Some((new_lower, new_upper))
    } else {
        None
    }
}

/// Factors `phi` in `<comp0, triv0, bc>` as `alpha . gamma . beta` with
/// `beta` base changes, `gamma` compositions and `alpha` trivializations.
pub fn order_sgnt0(p: &mut Presentation, phi: &SgntTerm) -> Result<(SgntTerm, SgntTerm, SgntTerm)> {
    phi.check(p)?;
    for l in &phi.layers {
        rank(p, &l.cell)?;
    }
    let mut cur = phi.clone();
    let mut guard = 0usize;
    loop {
        let mut k = None;
        for i in 0..cur.layers.len().saturating_sub(1) {
            if rank(p, &cur.layers[i].cell)? > rank(p, &cur.layers[i + 1].cell)? {
                k = Some(i);
                break;
            }
        }
        let Some(k) = k else { break };
        guard += 1;
        if guard > 100_000 {
            return Err(SpaceError::Unsupported("ordering did not terminate".into()));
        }
        let (x, y) = (cur.layers[k].clone(), cur.layers[k + 1].clone());
        let repl = match swap_disjoint(p, &x, &y) {
            Some((a, b)) => vec![a, b],
            None => commute(p, &x, &y)?,
        };
        let dom = cur.words(p)[k].clone();
        let piece = SgntTerm::from_layers(p, dom, repl)?;
        if piece.cod != cur.words(p)[k + 2] {
            return Err(SpaceError::Endpoint("commutation changed the endpoints".into()));
        }
        cur = splice(&cur, k, k + 2, &piece);
    }
    let words = cur.words(p);
    let nb = cur.layers.iter().take_while(|l| l.cell.basic().kind() == Kind::Bc).count();
    let nc = cur.layers[nb..].iter().take_while(|l| l.cell.basic().kind() == Kind::Comp).count();
    let part = |i: usize, j: usize| SgntTerm {
        dom: words[i].clone(),
        cod: words[j].clone(),
        layers: cur.layers[i..j].to_vec(),
    };
    let n = cur.layers.len();
    Ok((part(nb + nc, n), part(nb, nb + nc), part(0, nb)))
}

/// Rewrites an overlapping out-of-order pair `upper . lower` by the
/// commutation relations.
fn commute(p: &mut Presentation, lower: &Layer, upper: &Layer) -> Result<Vec<Layer>> {
    let word = lower.dom_word(p);
    let (s1, _, _) = span(p, lower);
    let (s2, _, _) = span(p, upper);
    let mut w = Walk {
        dom: Sgf {
            terms: word.clone(),
            src: SpaceId(0),
            dst: SpaceId(0),
        },
        word: word.clone(),
        layers: vec![],
    };
    match (lower.cell.basic().kind(), upper.cell.basic().kind()) {
        (Kind::Triv, Kind::Comp | Kind::Bc) => {
            let i = s1;
            debug_assert_eq!(s2 + 1, i);
            let (l, id, r) = (word[i - 1], word[i], word[i + 1]);
            let upper_bc = upper.cell.basic().kind() == Kind::Bc;
            match (upper_bc, id.var, l.var) {
                // a_* id_* b_*, a^* id^* b^*, g^* id_* f_*: absorb into the right neighbour.
                (false, v, lv) if v == lv => {
                    w.merge(p, i)?;
                    w.apply(p, i - 1, upper.cell.clone())?;
                }
                (true, Var::Lower, _) => {
                    w.merge(p, i)?;
                    w.bc(p, i - 1)?;
                }
                // g^* id^* f_*: absorb into the left neighbour.
                (true, Var::Upper, _) => {
                    w.merge(p, i - 1)?;
                    w.bc(p, i - 1)?;
                }
                // a_* id^* b_*: move the identity right past b_*.
                (false, Var::Upper, _) => {
                    w.bc(p, i)?;
                    w.merge(p, i - 1)?;
                    w.triv(p, i)?;
                }
                // a^* id_* b^*: move the identity left past a^*.
                (false, Var::Lower, _) => {
                    w.bc(p, i - 1)?;
                    w.merge(p, i)?;
                    w.triv(p, i - 1)?;
                }
            }
            let _ = r;
        }
        (Kind::Comp, Kind::Bc) => {
            let j = s1;
            match word[j].var {
                // g^* (f_* h_*): bc(f,g), then bc(h, g~), then compose.
                Var::Lower => {
                    debug_assert_eq!(s2 + 1, j);
                    w.bc(p, j - 1)?;
                    w.bc(p, j)?;
                    w.merge(p, j - 1)?;
                }
                // (h^* f^*) g_*: bc(g,f), then bc(g~, h), then compose.
                Var::Upper => {
                    debug_assert_eq!(s2, j);
                    w.bc(p, j + 1)?;
                    w.bc(p, j)?;
                    w.merge(p, j + 1)?;
                }
            }
        }
        _ => {
            return Err(SpaceError::Unsupported(format!(
                "no commutation relation for `{}` below `{}`",
                lower.cell.display(p),
                upper.cell.display(p)
            )))
        }
    }
    Ok(w.layers)
}

/// Factors `phi: G -> F` in `<bc, comp0, triv0>` as `phi_triv . psi` with
/// `psi` in `<bc, comp0>` and `phi_triv` deleting identity terms only at the
/// boundary: a leading `id_*` (when `F` starts with a pullback) or a
/// trailing `id^*` (when `F` ends with a pushforward).
pub fn canonical_triv(p: &mut Presentation, phi: &SgntTerm) -> Result<(SgntTerm, SgntTerm)> {
    let (_alpha, gamma, beta) = order_sgnt0(p, phi)?;
    let mut w = Walk::start(beta.dom.clone());
    w.layers = [beta.layers, gamma.layers].concat();
    w.word = gamma.cod.terms.clone();
    let settled = |p: &Presentation, word: &[Term], i: usize| -> bool {
        p.is_identity(word[i].map)
            && match word[i].var {
                Var::Lower => i == 0 && word.get(1).map_or(true, |t| t.var == Var::Upper),
                Var::Upper => i + 1 == word.len() && (i == 0 || word[i - 1].var == Var::Lower),
            }
    };
    loop {
        let Some(i) = (0..w.word.len()).find(|&i| p.is_identity(w.word[i].map) && !settled(p, &w.word, i)) else {
            break;
        };
        let t = w.word[i];
        let same = |j: usize, word: &[Term]| word.get(j).is_some_and(|u| u.var == t.var);
        match t.var {
            Var::Lower => {
                if i > 0 && same(i - 1, &w.word) {
                    w.merge(p, i - 1)?;
                } else if same(i + 1, &w.word) {
                    w.merge(p, i)?;
                } else {
                    w.bc(p, i - 1)?;
                }
            }
            Var::Upper => {
                if same(i + 1, &w.word) {
                    w.merge(p, i)?;
                } else if i > 0 && same(i - 1, &w.word) {
                    w.merge(p, i - 1)?;
                } else {
                    w.bc(p, i)?;
                }
            }
        }
    }
    let psi = w.clone().finish(p)?;
    let mut top = Walk::start(psi.cod.clone());
    while top.word.first().is_some_and(|t| t.var == Var::Lower && p.is_identity(t.map)) {
        top.triv(p, 0)?;
    }
    while top.word.last().is_some_and(|t| t.var == Var::Upper && p.is_identity(t.map)) {
        let n = top.word.len();
        top.triv(p, n - 1)?;
    }
    let phi_triv = top.finish(p)?;
    if phi_triv.cod != phi.cod {
        return Err(SpaceError::Endpoint("boundary trivializations do not reach the codomain".into()));
    }
    Ok((phi_triv, psi))
}

// ---------------------------------------------------------------------
// Rule catalogue

/// One named identity between basic-cell composites.
pub struct RewriteRule {
    pub name: &'static str,
    pub family: &'static str,
    pub lhs: &'static str,
    pub rhs: &'static str,
    build: fn(&mut Fixture) -> Result<(SgntTerm, SgntTerm)>,
}

pub struct RuleInstance {
    pub p: Presentation,
    pub lhs: SgntTerm,
    pub rhs: SgntTerm,
}

impl RewriteRule {
    /// A random instance in a random finite model.
    pub fn instantiate(&self, rng: &mut ChaCha8Rng) -> Result<RuleInstance> {
        let mut fx = Fixture::new(rng.gen());
        let (lhs, rhs) = (self.build)(&mut fx)?;
        let p = fx.finish()?;
        lhs.check(&p)?;
        rhs.check(&p)?;
        if lhs.dom != rhs.dom || lhs.cod != rhs.cod {
            return Err(SpaceError::Endpoint(format!("rule `{}`: sides have different endpoints", self.name)));
        }
        Ok(RuleInstance { p, lhs, rhs })
    }
}

/// Random spaces and maps for rule instances; the model is fixed at the end.
pub struct Fixture {
    pub p: Presentation,
    rng: ChaCha8Rng,
    carriers: Vec<usize>,
    graphs: Vec<Vec<usize>>,
}

impl Fixture {
    pub fn new(seed: u64) -> Fixture {
        use rand::SeedableRng;
        Fixture {
            p: Presentation::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            carriers: vec![],
            graphs: vec![],
        }
    }

    pub fn space(&mut self) -> BaseId {
        let n = self.carriers.len();
        let b = self.p.add_base(&format!("X{n}")).expect("fresh name");
        self.carriers.push(self.rng.gen_range(1..=3));
        b
    }

    pub fn map(&mut self, a: BaseId, b: BaseId) -> MapId {
        let n = self.graphs.len();
        let names = ["f", "g", "h", "k", "l", "m", "n", "q", "r", "s"];
        let name = names.get(n).map(|s| s.to_string()).unwrap_or_else(|| format!("u{n}"));
        let m = self.p.add_map(&name, a, b, false).expect("fresh name");
        let size = self.carriers[b];
        let g = (0..self.carriers[a]).map(|_| self.rng.gen_range(0..size)).collect();
        self.graphs.push(g);
        m
    }

    pub fn sp(&self, b: BaseId) -> SpaceId {
        self.p.base_space(b)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen()
    }

    pub fn finish(mut self) -> Result<Presentation> {
        let model = FiniteModel {
            carriers: self
                .carriers
                .iter()
                .map(|&n| (0..n).map(|i| i.to_string()).collect())
                .collect(),
            graphs: self.graphs,
        };
        self.p.set_model(model)?;
        Ok(self.p)
    }
}

/// Checks `lhs = rhs` at `trials` random models and shapes, exactly.
pub fn check_instance(inst: &RuleInstance, trials: usize, rng: &mut ChaCha8Rng) -> std::result::Result<(), String> {
    for t in 0..trials {
        let model = if t == 0 {
            inst.p.model().cloned()
        } else {
            random_model(&inst.p, rng)
        };
        let Some(model) = model else { continue };
        let mut ev = Evaluator::new(&inst.p, model);
        let n = ev.size(inst.lhs.src()).map_err(|e| e.to_string())?;
        let dims: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
        match compare_at(&mut ev, &inst.lhs, &inst.rhs, &dims) {
            Ok(None) => {}
            Ok(Some((pt, a, b))) => {
                return Err(format!(
                    "differ at point {pt}: {:?} vs {:?}",
                    a.to_strings(),
                    b.to_strings()
                ))
            }
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

fn both(p: &Presentation, a: Walk, b: Walk) -> Result<(SgntTerm, SgntTerm)> {
    Ok((a.finish(p)?, b.finish(p)?))
}

fn rule_triangle_left(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y) = (fx.space(), fx.space());
    let f = fx.map(x, y);
    let p = &mut fx.p;
    let mut a = Walk::new(p, vec![Term::upper(f)])?;
    a.unit(p, 1, f)?;
    a.counit(p, 0)?;
    both(p, a, Walk::new(p, vec![Term::upper(f)])?)
}

fn rule_triangle_right(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y) = (fx.space(), fx.space());
    let f = fx.map(x, y);
    let p = &mut fx.p;
    let mut a = Walk::new(p, vec![Term::lower(f)])?;
    a.unit(p, 0, f)?;
    a.counit(p, 1)?;
    both(p, a, Walk::new(p, vec![Term::lower(f)])?)
}

fn chain3(fx: &mut Fixture) -> (MapId, MapId, MapId) {
    let (w, x, y, z) = (fx.space(), fx.space(), fx.space(), fx.space());
    let f = fx.map(w, x);
    let g = fx.map(x, y);
    let h = fx.map(y, z);
    (f, g, h)
}

fn rule_comp_cancel(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(y, z);
    let split_first = fx.coin();
    let p = &mut fx.p;
    let gf = p.compose(g, f)?;
    let pair = match var {
        Var::Lower => vec![Term::lower(g), Term::lower(f)],
        Var::Upper => vec![Term::upper(f), Term::upper(g)],
    };
    let one = vec![Term { map: gf, var }];
    if split_first {
        let mut a = Walk::new(p, one.clone())?;
        a.split(p, 0, g, f)?;
        a.merge(p, 0)?;
        both(p, a, Walk::new(p, one)?)
    } else {
        let mut a = Walk::new(p, pair.clone())?;
        a.merge(p, 0)?;
        a.split(p, 0, g, f)?;
        both(p, a, Walk::new(p, pair)?)
    }
}

fn rule_triv_cancel(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let x = fx.space();
    let (var, del_first) = (if fx.coin() { Var::Lower } else { Var::Upper }, fx.coin());
    let xs = fx.sp(x);
    let p = &mut fx.p;
    let id = Term { map: p.id(xs), var };
    if del_first {
        let mut a = Walk::new(p, vec![id])?;
        a.triv(p, 0)?;
        a.untriv(p, 0, var, xs)?;
        both(p, a, Walk::new(p, vec![id])?)
    } else {
        let mut a = Walk::on(p, vec![], xs)?;
        a.untriv(p, 0, var, xs)?;
        a.triv(p, 0)?;
        both(p, a, Walk::on(p, vec![], xs)?)
    }
}

fn rule_comp_assoc(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (f, g, h) = chain3(fx);
    let p = &mut fx.p;
    let word = match var {
        Var::Lower => vec![Term::lower(h), Term::lower(g), Term::lower(f)],
        Var::Upper => vec![Term::upper(f), Term::upper(g), Term::upper(h)],
    };
    let mut a = Walk::new(p, word.clone())?;
    a.merge(p, 0)?;
    a.merge(p, 0)?;
    let mut b = Walk::new(p, word)?;
    b.merge(p, 1)?;
    b.merge(p, 0)?;
    both(p, a, b)
}

fn rule_triv_comp(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y) = (fx.space(), fx.space());
    let f = fx.map(x, y);
    let on_left = fx.coin();
    let p = &mut fx.p;
    // The identity sits on the side where it composes with `f`.
    let id_space = match (var, on_left) {
        (Var::Lower, true) | (Var::Upper, false) => p.dst(f),
        _ => p.src(f),
    };
    let id = Term { map: p.id(id_space), var };
    let ft = Term { map: f, var };
    let (word, ipos) = if on_left { (vec![id, ft], 0) } else { (vec![ft, id], 1) };
    let mut a = Walk::new(p, word.clone())?;
    a.merge(p, 0)?;
    let mut b = Walk::new(p, word)?;
    b.triv(p, ipos)?;
    both(p, a, b)
}

fn rule_unit_identity(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let x = fx.space();
    let xs = fx.sp(x);
    let p = &mut fx.p;
    let id = p.id(xs);
    let mut a = Walk::on(p, vec![], xs)?;
    a.unit(p, 0, id)?;
    let mut b = Walk::on(p, vec![], xs)?;
    b.untriv(p, 0, Var::Upper, xs)?;
    b.untriv(p, 0, Var::Lower, xs)?;
    both(p, a, b)
}

fn rule_counit_identity(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let x = fx.space();
    let xs = fx.sp(x);
    let p = &mut fx.p;
    let id = p.id(xs);
    let word = vec![Term::upper(id), Term::lower(id)];
    let mut a = Walk::new(p, word.clone())?;
    a.counit(p, 0)?;
    let mut b = Walk::new(p, word)?;
    b.triv(p, 0)?;
    b.triv(p, 0)?;
    both(p, a, b)
}

fn rule_triv_mate(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    let x = fx.space();
    let xs = fx.sp(x);
    let p = &mut fx.p;
    let id = p.id(xs);
    let t = Term { map: id, var };
    let mut a = Walk::new(p, vec![t])?;
    a.triv(p, 0)?;
    let mut b = Walk::new(p, vec![t])?;
    match var {
        // triv^* = counit(id) . (id^* triv_*^-1)
        Var::Upper => b.untriv(p, 1, Var::Lower, xs)?,
        // triv_* = counit(id) . (triv^*^-1 id_*)
        Var::Lower => b.untriv(p, 0, Var::Upper, xs)?,
    }
    b.counit(p, 0)?;
    both(p, a, b)
}

fn rule_loop(fx: &mut Fixture, via_counit: bool) -> Result<(SgntTerm, SgntTerm)> {
    let x = fx.space();
    let xs = fx.sp(x);
    let p = &mut fx.p;
    let id = p.id(xs);
    let mut a = Walk::on(p, vec![], xs)?;
    if via_counit {
        a.untriv(p, 0, Var::Upper, xs)?;
        a.untriv(p, 1, Var::Lower, xs)?;
        a.counit(p, 0)?;
    } else {
        a.unit(p, 0, id)?;
        a.triv(p, 1)?;
        a.triv(p, 0)?;
    }
    both(p, a, Walk::on(p, vec![], xs)?)
}

fn rule_unit_composite(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(y, z);
    let zs = fx.sp(z);
    let p = &mut fx.p;
    let gf = p.compose(g, f)?;
    let mut a = Walk::on(p, vec![], zs)?;
    a.unit(p, 0, gf)?;
    let mut b = Walk::on(p, vec![], zs)?;
    b.unit(p, 0, g)?;
    b.unit(p, 1, f)?;
    b.merge(p, 0)?;
    b.merge(p, 1)?;
    both(p, a, b)
}

fn rule_counit_composite(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(y, z);
    let p = &mut fx.p;
    let gf = p.compose(g, f)?;
    let word = vec![Term::upper(gf), Term::lower(gf)];
    let mut a = Walk::new(p, word.clone())?;
    a.counit(p, 0)?;
    let mut b = Walk::new(p, word)?;
    b.split(p, 1, g, f)?;
    b.split(p, 0, g, f)?;
    b.counit(p, 1)?;
    b.counit(p, 0)?;
    both(p, a, b)
}

fn rule_comp_mate(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(y, z);
    let p = &mut fx.p;
    let gf = p.compose(g, f)?;
    match var {
        Var::Upper => {
            let word = vec![Term::upper(f), Term::upper(g)];
            let mut a = Walk::new(p, word.clone())?;
            a.merge(p, 0)?;
            let mut b = Walk::new(p, word)?;
            b.unit(p, 2, gf)?;
            b.split(p, 2, g, f)?;
            b.counit(p, 1)?;
            b.counit(p, 0)?;
            both(p, a, b)
        }
        Var::Lower => {
            let word = vec![Term::lower(g), Term::lower(f)];
            let mut a = Walk::new(p, word.clone())?;
            a.merge(p, 0)?;
            let mut b = Walk::new(p, word)?;
            b.unit(p, 0, gf)?;
            b.split(p, 1, g, f)?;
            b.counit(p, 2)?;
            b.counit(p, 1)?;
            both(p, a, b)
        }
    }
}

fn rule_comp_exchange(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    // f . (l . k) = (f . l) . k with g = l.k and h = f.l.
    let (w, x, y, z) = (fx.space(), fx.space(), fx.space(), fx.space());
    let k = fx.map(w, x);
    let l = fx.map(x, y);
    let f = fx.map(y, z);
    let p = &mut fx.p;
    let g = p.compose(l, k)?;
    let h = p.compose(f, l)?;
    match var {
        Var::Lower => {
            let word = vec![Term::lower(f), Term::lower(g)];
            let mut a = Walk::new(p, word.clone())?;
            a.merge(p, 0)?;
            a.split(p, 0, h, k)?;
            let mut b = Walk::new(p, word)?;
            b.split(p, 1, l, k)?;
            b.merge(p, 0)?;
            both(p, a, b)
        }
        Var::Upper => {
            let word = vec![Term::upper(g), Term::upper(f)];
            let mut a = Walk::new(p, word.clone())?;
            a.merge(p, 0)?;
            a.split(p, 0, h, k)?;
            let mut b = Walk::new(p, word)?;
            b.split(p, 0, l, k)?;
            b.merge(p, 1)?;
            both(p, a, b)
        }
    }
}

fn cospan(fx: &mut Fixture) -> (MapId, MapId) {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(z, y);
    (f, g)
}

fn rule_bc_expansion(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (f, g) = cospan(fx);
    let p = &mut fx.p;
    let mut a = Walk::new(p, vec![Term::upper(g), Term::lower(f)])?;
    a.bc(p, 0)?;
    let sq = p.pullback(f, g)?;
    let b = make_bc(p, &sq)?;
    Ok((a.finish(p)?, b))
}

fn rule_bc_identity(fx: &mut Fixture, lower_id: bool) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y) = (fx.space(), fx.space());
    let f = fx.map(x, y);
    let p = &mut fx.p;
    let word = if lower_id {
        // f^* id_* -> id_* f^*
        vec![Term::upper(f), Term::lower(p.id(p.dst(f)))]
    } else {
        // id^* f_* -> f_* id^*
        vec![Term::upper(p.id(p.dst(f))), Term::lower(f)]
    };
    let mut a = Walk::new(p, word.clone())?;
    a.bc(p, 0)?;
    let mut b = Walk::new(p, word)?;
    if lower_id {
        b.triv(p, 1)?;
        b.untriv(p, 0, Var::Lower, p.src(f))?;
    } else {
        b.triv(p, 0)?;
        b.untriv(p, 1, Var::Upper, p.src(f))?;
    }
    both(p, a, b)
}

/// Relation a: a trivialization below a composition.
fn rule_comm_a(fx: &mut Fixture, outer: Var, mid: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(y, z);
    let ys = fx.sp(y);
    let p = &mut fx.p;
    let id = Term { map: p.id(ys), var: mid };
    let word = match outer {
        Var::Lower => vec![Term::lower(g), id, Term::lower(f)],
        Var::Upper => vec![Term::upper(f), id, Term::upper(g)],
    };
    let mut a = Walk::new(p, word.clone())?;
    a.triv(p, 1)?;
    a.merge(p, 0)?;
    let mut b = Walk::new(p, word)?;
    match (outer, mid) {
        (o, m) if o == m => {
            b.merge(p, 1)?;
            b.merge(p, 0)?;
        }
        (Var::Lower, _) => {
            b.bc(p, 1)?;
            b.merge(p, 0)?;
            b.triv(p, 1)?;
        }
        (Var::Upper, _) => {
            b.bc(p, 0)?;
            b.merge(p, 1)?;
            b.triv(p, 0)?;
        }
    }
    both(p, a, b)
}

/// Relation b: a trivialization below a base change.
fn rule_comm_b(fx: &mut Fixture, mid: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (f, g) = cospan(fx);
    let p = &mut fx.p;
    let ys = p.dst(f);
    let id = match mid {
        Var::Lower => Term::lower(p.id(ys)),
        Var::Upper => Term::upper(p.id(ys)),
    };
    let word = vec![Term::upper(g), id, Term::lower(f)];
    let mut a = Walk::new(p, word.clone())?;
    a.triv(p, 1)?;
    a.bc(p, 0)?;
    let mut b = Walk::new(p, word)?;
    match mid {
        Var::Lower => b.merge(p, 1)?,
        Var::Upper => b.merge(p, 0)?,
    }
    b.bc(p, 0)?;
    both(p, a, b)
}

/// Relation c: a composition below a base change.
fn rule_comm_c(fx: &mut Fixture, var: Var) -> Result<(SgntTerm, SgntTerm)> {
    let (w, x, y, z) = (fx.space(), fx.space(), fx.space(), fx.space());
    let h = fx.map(w, x);
    let f = fx.map(x, y);
    let g = fx.map(z, y);
    let p = &mut fx.p;
    match var {
        Var::Lower => {
            let word = vec![Term::upper(g), Term::lower(f), Term::lower(h)];
            let mut a = Walk::new(p, word.clone())?;
            a.merge(p, 1)?;
            a.bc(p, 0)?;
            let mut b = Walk::new(p, word)?;
            b.bc(p, 0)?;
            b.bc(p, 1)?;
            b.merge(p, 0)?;
            both(p, a, b)
        }
        Var::Upper => {
            // h^* f^* g_* with h: w -> x and f: x -> y; g: z -> y.
            let word = vec![Term::upper(h), Term::upper(f), Term::lower(g)];
            let mut a = Walk::new(p, word.clone())?;
            a.merge(p, 0)?;
            a.bc(p, 0)?;
            let mut b = Walk::new(p, word)?;
            b.bc(p, 1)?;
            b.bc(p, 0)?;
            b.merge(p, 1)?;
            both(p, a, b)
        }
    }
}

fn rule_counit_expansion(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y) = (fx.space(), fx.space());
    let f = fx.map(x, y);
    let p = &mut fx.p;
    let mut a = Walk::new(p, vec![Term::upper(f), Term::lower(f)])?;
    a.counit(p, 0)?;
    let b = counit_expand(p, f)?;
    Ok((a.finish(p)?, b))
}

/// A random basic cell acting on shapes over `m` and landing over `m`.
fn cell_on(fx: &mut Fixture, m: BaseId) -> Result<(Vec<Term>, Cell)> {
    let ms = fx.sp(m);
    let choice = fx.rng.gen_range(0..6);
    let p_cell = match choice {
        0 => {
            let a = fx.space();
            let f = fx.map(a, m);
            (vec![], Cell::Fwd(Basic::Unit(f)))
        }
        1 => {
            let b = fx.space();
            let f = fx.map(m, b);
            (vec![Term::upper(f), Term::lower(f)], Cell::Fwd(Basic::Counit(f)))
        }
        2 => {
            let b = fx.space();
            let f = fx.map(m, b);
            let g = fx.map(b, m);
            let p = &mut fx.p;
            let gf = p.compose(g, f)?;
            (vec![Term::lower(g), Term::lower(f)], Cell::Fwd(Basic::CompLower { f, g, gf }))
        }
        3 => {
            let c = fx.space();
            let f = fx.map(m, c);
            let g = fx.map(m, c);
            let sq = fx.p.pullback(f, g)?;
            (vec![Term::upper(g), Term::lower(f)], Cell::Fwd(Basic::Bc(sq)))
        }
        4 => (vec![Term::lower(fx.p.id(ms))], Cell::Fwd(Basic::TrivLower(ms))),
        _ => (vec![Term::upper(fx.p.id(ms))], Cell::Fwd(Basic::TrivUpper(ms))),
    };
    Ok(p_cell)
}

fn rule_interchange(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let m = fx.space();
    let ms = fx.sp(m);
    let (dl, cl) = cell_on(fx, m)?;
    let (dr, cr) = cell_on(fx, m)?;
    let p = &mut fx.p;
    let word = [dl.clone(), dr.clone()].concat();
    let n_left_cod = cl.cod_terms(p).len();
    let mut a = Walk::on(p, word.clone(), ms)?;
    a.apply(p, 0, cl.clone())?;
    a.apply(p, n_left_cod, cr.clone())?;
    let mut b = Walk::on(p, word, ms)?;
    b.apply(p, dl.len(), cr)?;
    b.apply(p, 0, cl)?;
    both(p, a, b)
}

fn rule_rna_roundtrip(fx: &mut Fixture) -> Result<(SgntTerm, SgntTerm)> {
    let (x, y, z) = (fx.space(), fx.space(), fx.space());
    let f = fx.map(x, y);
    let g = fx.map(y, z);
    let p = &mut fx.p;
    let mut a = Walk::new(p, vec![Term::lower(g), Term::lower(f)])?;
    a.merge(p, 0)?;
    let phi = a.finish(p)?;
    let there = rna(p, &phi, f, Direction::Fwd)?;
    let back = rna(p, &there, f, Direction::Bwd)?;
    Ok((back, phi))
}

macro_rules! rule {
    ($name:expr, $fam:expr, $lhs:expr, $rhs:expr, $build:expr) => {
        RewriteRule {
            name: $name,
            family: $fam,
            lhs: $lhs,
            rhs: $rhs,
            build: $build,
        }
    };
}

/// The fixed rule set. Names are stable and appear in proof traces.
pub fn rule_catalogue() -> Vec<RewriteRule> {
    vec![
        rule!("triangle-left", "adjunction", "(counit(f) f^*) . (f^* unit(f))", "id(f^*)", rule_triangle_left),
        rule!("triangle-right", "adjunction", "(f_* counit(f)) . (unit(f) f_*)", "id(f_*)", rule_triangle_right),
        rule!("comp-lower-cancel", "composition", "comp_*(f,g)^-1 . comp_*(f,g)", "id", |fx| rule_comp_cancel(fx, Var::Lower)),
        rule!("comp-upper-cancel", "composition", "comp^*(f,g)^-1 . comp^*(f,g)", "id", |fx| rule_comp_cancel(fx, Var::Upper)),
        rule!("triv-cancel", "trivialization", "triv^-1 . triv", "id", rule_triv_cancel),
        rule!("comp-lower-assoc", "composition", "comp_*(g,h) after comp_*(f,hg)", "comp_*(f,g) after comp_*(gf,h)", |fx| rule_comp_assoc(fx, Var::Lower)),
        rule!("comp-upper-assoc", "composition", "comp^* left first", "comp^* right first", |fx| rule_comp_assoc(fx, Var::Upper)),
        rule!("triv-comp-lower", "trivialization", "comp_*(f,id) or comp_*(id,f)", "triv_* f_* or f_* triv_*", |fx| rule_triv_comp(fx, Var::Lower)),
        rule!("triv-comp-upper", "trivialization", "comp^*(id,f) or comp^*(f,id)", "triv^* f^* or f^* triv^*", |fx| rule_triv_comp(fx, Var::Upper)),
        rule!("identity-unit", "trivialization", "unit(id)", "(triv_*^-1 id^*) . triv^*^-1", rule_unit_identity),
        rule!("identity-counit", "trivialization", "counit(id)", "triv_* . (triv^* id_*)", rule_counit_identity),
        rule!("triv-upper-mate", "trivialization", "triv^*", "counit(id) . (id^* triv_*^-1)", |fx| rule_triv_mate(fx, Var::Upper)),
        rule!("triv-lower-mate", "trivialization", "triv_*", "counit(id) . (triv^*^-1 id_*)", |fx| rule_triv_mate(fx, Var::Lower)),
        rule!("loop-unit", "loop", "triv_* . (id_* triv^*) . unit(id)", "id", |fx| rule_loop(fx, false)),
        rule!("loop-counit", "loop", "counit(id) . (id^* triv_*^-1) . triv^*^-1", "id", |fx| rule_loop(fx, true)),
        rule!("unit-composite", "adjunction-composition", "unit(gf)", "comps . (g_* unit(f) g^*) . unit(g)", rule_unit_composite),
        rule!("counit-composite", "adjunction-composition", "counit(gf)", "counit(f) . (f^* counit(g) f_*) . comps^-1", rule_counit_composite),
        rule!("comp-upper-mate", "adjunction-composition", "comp^*(f,g)", "counits . comp_*^-1 . unit(gf)", |fx| rule_comp_mate(fx, Var::Upper)),
        rule!("comp-lower-mate", "adjunction-composition", "comp_*(f,g)", "counits . comp^*^-1 . unit(gf)", |fx| rule_comp_mate(fx, Var::Lower)),
        rule!("comp-lower-exchange", "composition", "comp_*(k,h)^-1 . comp_*(lk,f)", "comp_*(l,f) . comp_*(k,l)^-1", |fx| rule_comp_exchange(fx, Var::Lower)),
        rule!("comp-upper-exchange", "composition", "comp^*(k,h)^-1 . comp^*(lk,f)", "comp^*(l,f) . comp^*(k,l)^-1", |fx| rule_comp_exchange(fx, Var::Upper)),
        rule!("bc-expansion", "base-change", "bc(f,g)", "counit(g) . comp_*^-1 . comp_* . unit(gt)", rule_bc_expansion),
        rule!("bc-identity-lower", "base-change", "bc(id,f)", "(triv_*^-1 f^*) . (f^* triv_*)", |fx| rule_bc_identity(fx, true)),
        rule!("bc-identity-upper", "base-change", "bc(f,id)", "(f_* triv^*^-1) . (triv^* f_*)", |fx| rule_bc_identity(fx, false)),
        rule!("commute-triv-comp-lower", "commutation", "comp_* . (g_* triv_* f_*)", "comp_* . (g_* comp_*(f,id))", |fx| rule_comm_a(fx, Var::Lower, Var::Lower)),
        rule!("commute-triv-comp-lower-mixed", "commutation", "comp_* . (g_* triv^* f_*)", "(triv^*) . comp_* . bc(f,id)", |fx| rule_comm_a(fx, Var::Lower, Var::Upper)),
        rule!("commute-triv-comp-upper", "commutation", "comp^* . (f^* triv^* g^*)", "comp^* . (f^* comp^*(id,g))", |fx| rule_comm_a(fx, Var::Upper, Var::Upper)),
        rule!("commute-triv-comp-upper-mixed", "commutation", "comp^* . (f^* triv_* g^*)", "(triv_*) . comp^* . bc(id,f)", |fx| rule_comm_a(fx, Var::Upper, Var::Lower)),
        rule!("commute-triv-bc-lower", "commutation", "bc(f,g) . (g^* triv_* f_*)", "bc(f,g) . (g^* comp_*(f,id))", |fx| rule_comm_b(fx, Var::Lower)),
        rule!("commute-triv-bc-upper", "commutation", "bc(f,g) . (g^* triv^* f_*)", "bc(f,g) . (comp^*(g,id) f_*)", |fx| rule_comm_b(fx, Var::Upper)),
        rule!("commute-comp-bc-lower", "commutation", "bc(fh,g) . (g^* comp_*(h,f))", "comp_* . bc(h,g~) . bc(f,g)", |fx| rule_comm_c(fx, Var::Lower)),
        rule!("commute-comp-bc-upper", "commutation", "bc(g,fh) . (comp^*(h,f) g_*)", "comp^* . bc(g~,h) . bc(g,f)", |fx| rule_comm_c(fx, Var::Upper)),
        rule!("counit-expansion", "counit", "counit(f)", "trivs . comps . unit(diag) . bc(f,f)", rule_counit_expansion),
        rule!("interchange", "interchange", "(A psi) . (phi B)", "(phi B') . (A' psi)", rule_interchange),
        rule!("rna-roundtrip", "adjunction", "rna_bwd(rna_fwd(phi))", "phi", rule_rna_roundtrip),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn line() -> (Presentation, MapId, MapId, MapId) {
        let mut fx = Fixture::new(7);
        let (f, g, h) = chain3(&mut fx);
        (fx.finish().unwrap(), f, g, h)
    }

    #[test]
    fn catalogue_rules_are_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in rule_catalogue() {
            for _ in 0..10 {
                let inst = r.instantiate(&mut rng).unwrap_or_else(|e| panic!("{}: {e}", r.name));
                check_instance(&inst, 3, &mut rng).unwrap_or_else(|e| panic!("{}: {e}", r.name));
            }
        }
    }

    #[test]
    fn checker_refutes_a_false_identity() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        p.set_model(FiniteModel {
            carriers: vec![vec!["1".into(), "2".into()], vec!["*".into()]],
            graphs: vec![vec![0, 0]],
        })
        .unwrap();
        let word = vec![Term::upper(f), Term::lower(f), Term::upper(f)];
        let mut w = Walk::new(&p, word.clone()).unwrap();
        w.counit(&mut p, 0).unwrap();
        w.unit(&mut p, 1, f).unwrap();
        let inst = RuleInstance {
            lhs: w.finish(&p).unwrap(),
            rhs: SgntTerm::id(Sgf::new(&p, word).unwrap()),
            p,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(check_instance(&inst, 1, &mut rng).is_err());
    }

    #[test]
    fn catalogue_names_are_unique() {
        let mut names: Vec<_> = rule_catalogue().iter().map(|r| r.name).collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }

    #[test]
    fn triangles_normalize_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for name in ["triangle-left", "triangle-right"] {
            let r = rule_catalogue().into_iter().find(|r| r.name == name).unwrap();
            let mut inst = r.instantiate(&mut rng).unwrap();
            let n = normalize(&mut inst.p, &inst.lhs).unwrap();
            assert!(n.term.is_identity());
            assert_eq!(n.trace, vec![name.to_string()]);
        }
    }

    #[test]
    fn association_orders_share_a_normal_form() {
        let (mut p, f, g, h) = line();
        let word = vec![Term::lower(h), Term::lower(g), Term::lower(f)];
        let mut a = Walk::new(&p, word.clone()).unwrap();
        a.merge(&mut p, 0).unwrap();
        a.merge(&mut p, 0).unwrap();
        let mut b = Walk::new(&p, word).unwrap();
        b.merge(&mut p, 1).unwrap();
        b.merge(&mut p, 0).unwrap();
        let (a, b) = (a.finish(&p).unwrap(), b.finish(&p).unwrap());
        assert_ne!(a, b);
        let na = normalize(&mut p, &a).unwrap().term;
        let nb = normalize(&mut p, &b).unwrap().term;
        assert_eq!(na, nb);
        assert_eq!(sgnt0_canonicalize(&mut p, &a).unwrap(), sgnt0_canonicalize(&mut p, &b).unwrap());
    }

    #[test]
    fn term_then_inverse_is_identity() {
        let (mut p, f, g, _) = line();
        let mut a = Walk::new(&p, vec![Term::lower(g), Term::lower(f)]).unwrap();
        a.merge(&mut p, 0).unwrap();
        let a = a.finish(&p).unwrap();
        let t = SgntTerm::vcompose(&a.inverse_free().unwrap(), &a).unwrap();
        assert!(normalize(&mut p, &t).unwrap().term.is_identity());
    }

    #[test]
    fn counit_expansion_of_identity_is_trivializations() {
        let mut fx = Fixture::new(3);
        let x = fx.space();
        let mut p = fx.finish().unwrap();
        let id = p.id(p.base_space(x));
        let e = counit_expand(&mut p, id).unwrap();
        let n = normalize(&mut p, &e).unwrap().term;
        assert!(n.layers.iter().all(|l| l.cell.basic().kind() == Kind::Triv));
    }

    #[test]
    fn bc_orders_to_the_roof_canonicalize_alike() {
        let mut fx = Fixture::new(5);
        let (a, b, c, d, e) = (fx.space(), fx.space(), fx.space(), fx.space(), fx.space());
        // f^* g^* h_* k_* over a zigzag a <- b -> c <- d <- e.
        let k = fx.map(e, d);
        let h = fx.map(d, c);
        let g = fx.map(b, c);
        let f = fx.map(a, b);
        let mut p = fx.finish().unwrap();
        let word = vec![Term::upper(f), Term::upper(g), Term::lower(h), Term::lower(k)];
        let dom = Sgf::new(&p, word.clone()).unwrap();
        let lf = level_form(&mut p, &dom).unwrap();
        assert!(lf.cod.is_roof_shaped(&p));
        let mut alt = Walk::new(&p, word).unwrap();
        alt.merge(&mut p, 0).unwrap();
        alt.merge(&mut p, 1).unwrap();
        alt.bc(&mut p, 0).unwrap();
        let alt = alt.finish(&p).unwrap();
        assert_eq!(alt.cod, lf.cod);
        assert_ne!(alt, lf);
        assert_eq!(sgnt0_canonicalize(&mut p, &alt).unwrap(), lf);
        assert!(crate::oracle::agree(&p, &alt, &lf, 20, 1));
    }

    #[test]
    fn single_bc_orders_trivially() {
        let mut fx = Fixture::new(9);
        let (f, g) = cospan(&mut fx);
        let mut p = fx.finish().unwrap();
        let mut w = Walk::new(&p, vec![Term::upper(g), Term::lower(f)]).unwrap();
        w.bc(&mut p, 0).unwrap();
        let phi = w.finish(&p).unwrap();
        let (a, c, b) = order_sgnt0(&mut p, &phi).unwrap();
        assert!(a.is_identity() && c.is_identity());
        assert_eq!(b, phi);
    }

    #[test]
    fn triv_below_comp_moves_up() {
        let mut fx = Fixture::new(2);
        let (x, y, z) = (fx.space(), fx.space(), fx.space());
        let f = fx.map(x, y);
        let g = fx.map(y, z);
        let mut p = fx.finish().unwrap();
        let ys = p.base_space(y);
        let word = vec![Term::lower(g), Term::lower(p.id(ys)), Term::lower(f)];
        let mut w = Walk::new(&p, word).unwrap();
        w.triv(&mut p, 1).unwrap();
        w.merge(&mut p, 0).unwrap();
        let phi = w.finish(&p).unwrap();
        let (a, c, b) = order_sgnt0(&mut p, &phi).unwrap();
        assert!(b.is_identity());
        let back = SgntTerm::vcompose_all(&[a, c, b]).unwrap();
        assert!(crate::oracle::agree(&p, &back, &phi, 20, 3));
    }

    #[test]
    fn canonical_triv_pushes_left() {
        let mut fx = Fixture::new(4);
        let (x, y) = (fx.space(), fx.space());
        let f = fx.map(x, y);
        let mut p = fx.finish().unwrap();
        let ys = p.base_space(y);
        // f^* id_* -> f^*: the identity leaves through the left boundary.
        let mut w = Walk::new(&p, vec![Term::upper(f), Term::lower(p.id(ys))]).unwrap();
        w.triv(&mut p, 1).unwrap();
        let phi = w.finish(&p).unwrap();
        let (t, psi) = canonical_triv(&mut p, &phi).unwrap();
        assert_eq!(psi.layers.len(), 1);
        assert_eq!(psi.layers[0].cell.basic().kind(), Kind::Bc);
        assert_eq!(t.layers.len(), 1);
        assert!(matches!(t.layers[0].cell.basic(), Basic::TrivLower(_)));
        let back = SgntTerm::vcompose(&t, &psi).unwrap();
        assert!(crate::oracle::agree(&p, &back, &phi, 20, 5));
    }

    #[test]
    fn canonical_triv_on_roof_has_no_boundary() {
        let mut fx = Fixture::new(6);
        let (f, g) = cospan(&mut fx);
        let mut p = fx.finish().unwrap();
        let mut w = Walk::new(&p, vec![Term::upper(g), Term::lower(f)]).unwrap();
        w.bc(&mut p, 0).unwrap();
        let phi = w.finish(&p).unwrap();
        let (t, _) = canonical_triv(&mut p, &phi).unwrap();
        assert!(t.is_identity());
    }
}
