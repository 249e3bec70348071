//! Standard geometric functors: zigzag words of `f_*` and `f^*`.
//!
//! Words are stored as printed: `terms[0]` is the leftmost factor and is
//! applied last.

use std::fmt::Write as _;

use crate::sgnt::{Basic, Cell, Layer, SgntTerm};
use crate::spaces::{MapId, Presentation, Result, SpaceError, SpaceId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub map: MapId,
    pub var: Var,
}

impl Term {
    pub fn lower(map: MapId) -> Term {
        Term { map, var: Var::Lower }
    }

    pub fn upper(map: MapId) -> Term {
        Term { map, var: Var::Upper }
    }

    /// Space whose shapes the functor consumes.
    pub fn input(&self, p: &Presentation) -> SpaceId {
        match self.var {
            Var::Lower => p.src(self.map),
            Var::Upper => p.dst(self.map),
        }
    }

    pub fn output(&self, p: &Presentation) -> SpaceId {
        match self.var {
            Var::Lower => p.dst(self.map),
            Var::Upper => p.src(self.map),
        }
    }

    pub fn display(&self, p: &Presentation) -> String {
        let star = match self.var {
            Var::Lower => "_*",
            Var::Upper => "^*",
        };
        format!("{}{}", p.map_name(self.map), star)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sgf {
    pub terms: Vec<Term>,
    pub src: SpaceId,
    pub dst: SpaceId,
}

impl Sgf {
    pub fn id(space: SpaceId) -> Sgf {
        Sgf {
            terms: vec![],
            src: space,
            dst: space,
        }
    }

    /// A nonempty word; fails when consecutive terms do not chain.
    pub fn new(p: &Presentation, terms: Vec<Term>) -> Result<Sgf> {
        let first = terms
            .first()
            .ok_or_else(|| SpaceError::Endpoint("empty word needs an explicit space".into()))?;
        let dst = first.output(p);
        let src = terms.last().unwrap().input(p);
        let s = Sgf { terms, src, dst };
        s.check(p)?;
        Ok(s)
    }

    pub fn from_terms(p: &Presentation, terms: Vec<Term>, space: SpaceId) -> Result<Sgf> {
        if terms.is_empty() {
            Ok(Sgf::id(space))
        } else {
            Sgf::new(p, terms)
        }
    }

    pub fn check(&self, p: &Presentation) -> Result<()> {
        check_chain(p, &self.terms, self.src, self.dst)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `self` after `other`.
    pub fn then_after(&self, other: &Sgf) -> Result<Sgf> {
        if self.src != other.dst {
            return Err(SpaceError::Endpoint("functors do not compose".into()));
        }
        Ok(Sgf {
            terms: [self.terms.clone(), other.terms.clone()].concat(),
            src: other.src,
            dst: self.dst,
        })
    }

    pub fn display(&self, p: &Presentation) -> String {
        if self.terms.is_empty() {
            return format!("1_{}", p.space_name(self.src));
        }
        let mut s = String::new();
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{}", t.display(p));
        }
        s
    }

    /// No composable neighbours and no identity terms.
    pub fn is_alternating(&self, p: &Presentation) -> bool {
        self.terms.windows(2).all(|w| w[0].var != w[1].var) && self.terms.iter().all(|t| !p.is_identity(t.map))
    }

    /// Of the shape `a_* b^*`, `a_*`, `b^*` or empty, with no identity legs.
    pub fn is_roof_shaped(&self, p: &Presentation) -> bool {
        let vars: Vec<Var> = self.terms.iter().map(|t| t.var).collect();
        let shape = matches!(
            vars.as_slice(),
            [] | [Var::Lower] | [Var::Upper] | [Var::Lower, Var::Upper]
        );
        shape && self.terms.iter().all(|t| !p.is_identity(t.map))
    }
}

pub fn check_chain(p: &Presentation, terms: &[Term], src: SpaceId, dst: SpaceId) -> Result<()> {
    let mut cur = src;
    for t in terms.iter().rev() {
        if t.input(p) != cur {
            return Err(SpaceError::Endpoint(format!(
                "`{}` expects shapes on `{}` but receives shapes on `{}`",
                t.display(p),
                p.space_name(t.input(p)),
                p.space_name(cur)
            )));
        }
        cur = t.output(p);
    }
    if cur != dst {
        return Err(SpaceError::Endpoint(format!(
            "word ends on `{}`, expected `{}`",
            p.space_name(cur),
            p.space_name(dst)
        )));
    }
    Ok(())
}

/// The composite cell merging `terms[i]` and `terms[i+1]`, if they are
/// composable.
pub fn merge_cell(p: &mut Presentation, left: Term, right: Term) -> Result<Option<Basic>> {
    if left.var != right.var {
        return Ok(None);
    }
    Ok(Some(match left.var {
        // a_* b_* -> (ab)_* is comp_*(b, a).
        Var::Lower => {
            let gf = p.compose(left.map, right.map)?;
            Basic::CompLower {
                f: right.map,
                g: left.map,
                gf,
            }
        }
        // a^* b^* -> (ba)^* is comp^*(a, b).
        Var::Upper => {
            let gf = p.compose(right.map, left.map)?;
            Basic::CompUpper {
                f: left.map,
                g: right.map,
                gf,
            }
        }
    }))
}

/// Applies a cell to the running word at `pos`, returning the layer.
pub fn apply_at(p: &mut Presentation, word: &mut Vec<Term>, pos: usize, cell: Cell) -> Layer {
    let dom_len = cell.dom_terms(p).len();
    let cod = cell.cod_terms(p);
    let left = word[..pos].to_vec();
    let right = word[pos + dom_len..].to_vec();
    word.splice(pos..pos + dom_len, cod);
    Layer { left, cell, right }
}

/// The deterministic two-phase pass: merge composable pairs left to right,
/// then delete identity terms; repeat until stable.
pub fn alternating_reduce(p: &mut Presentation, f: &Sgf) -> Result<(Sgf, SgntTerm)> {
    let mut word = f.terms.clone();
    let mut layers = Vec::new();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < word.len() {
            match merge_cell(p, word[i], word[i + 1])? {
                Some(b) => {
                    layers.push(apply_at(p, &mut word, i, Cell::Fwd(b)));
                    changed = true;
                }
                None => i += 1,
            }
        }
        let mut i = 0;
        while i < word.len() {
            if p.is_identity(word[i].map) {
                let x = word[i].input(p);
                let b = match word[i].var {
                    Var::Lower => Basic::TrivLower(x),
                    Var::Upper => Basic::TrivUpper(x),
                };
                layers.push(apply_at(p, &mut word, i, Cell::Fwd(b)));
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    let out = Sgf {
        terms: word,
        src: f.src,
        dst: f.dst,
    };
    let term = SgntTerm {
        dom: f.clone(),
        cod: out.clone(),
        layers,
    };
    Ok((out, term))
}

#[derive(Clone, Debug)]
pub struct RoofData {
    pub apex: SpaceId,
    /// `apex -> dst`.
    pub a: MapId,
    /// `apex -> src`.
    pub b: MapId,
    pub as_sgf: Sgf,
    pub to_roof: SgntTerm,
}

/// The roof of `f`: alternating reduction, then base changes at the
/// leftmost `g^* f_*` pair, re-reducing after each.
pub fn roof(p: &mut Presentation, f: &Sgf) -> Result<RoofData> {
    let (mut cur, mut to_roof) = alternating_reduce(p, f)?;
    loop {
        let pos = cur
            .terms
            .windows(2)
            .position(|w| w[0].var == Var::Upper && w[1].var == Var::Lower);
        let Some(i) = pos else { break };
        let g = cur.terms[i].map;
        let fm = cur.terms[i + 1].map;
        let sq = p.pullback(fm, g)?;
        let mut word = cur.terms.clone();
        let layer = apply_at(p, &mut word, i, Cell::Fwd(Basic::Bc(sq)));
        let next = Sgf {
            terms: word,
            src: f.src,
            dst: f.dst,
        };
        to_roof.layers.push(layer);
        let (reduced, alt) = alternating_reduce(p, &next)?;
        to_roof.layers.extend(alt.layers);
        to_roof.cod = reduced.clone();
        cur = reduced;
    }
    to_roof.cod = cur.clone();
    let (apex, a, b) = match cur.terms.as_slice() {
        [] => (f.src, p.id(f.src), p.id(f.src)),
        [t] if t.var == Var::Lower => (p.src(t.map), t.map, p.id(p.src(t.map))),
        [t] => (p.src(t.map), p.id(p.src(t.map)), t.map),
        [ta, tb] => (p.src(ta.map), ta.map, tb.map),
        _ => unreachable!("roof reduction leaves at most two terms"),
    };
    Ok(RoofData {
        apex,
        a,
        b,
        as_sgf: cur,
        to_roof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{FiniteModel, ModelView};

    fn balmer() -> (Presentation, MapId) {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        p.set_model(FiniteModel {
            carriers: vec![vec!["1".into(), "2".into()], vec!["*".into()]],
            graphs: vec![vec![0, 0]],
        })
        .unwrap();
        (p, f)
    }

    #[test]
    fn chaining_errors_name_both_spaces() {
        let (mut p, f) = balmer();
        let z = p.add_base("Z").unwrap();
        let g = p.add_map("g", z, 0, false).unwrap();
        assert!(Sgf::new(&p, vec![Term::lower(f), Term::lower(g)]).is_ok());
        let err = Sgf::new(&p, vec![Term::upper(f), Term::lower(g)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`Y`") && msg.contains("`X`"), "{msg}");
    }

    #[test]
    fn single_composition() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let z = p.add_base("Z").unwrap();
        let g = p.add_map("g", x, y, false).unwrap();
        let f = p.add_map("f", y, z, false).unwrap();
        let s = Sgf::new(&p, vec![Term::lower(f), Term::lower(g)]).unwrap();
        let (r, t) = alternating_reduce(&mut p, &s).unwrap();
        let fg = p.compose(f, g).unwrap();
        assert_eq!(r.terms, vec![Term::lower(fg)]);
        assert_eq!(t.layers.len(), 1);
        assert_eq!(
            t.layers[0].cell,
            Cell::Fwd(Basic::CompLower { f: g, g: f, gf: fg })
        );
    }

    #[test]
    fn identities_are_absorbed() {
        let (mut p, f) = balmer();
        let ix = p.id(p.src(f));
        let iy = p.id(p.dst(f));
        let s = Sgf::new(&p, vec![Term::upper(iy), Term::lower(f), Term::lower(ix)]).unwrap();
        let (r, t) = alternating_reduce(&mut p, &s).unwrap();
        assert_eq!(r.terms, vec![Term::lower(f)]);
        t.check(&p).unwrap();
        let (r2, t2) = alternating_reduce(&mut p, &r).unwrap();
        assert_eq!(r2, r);
        assert!(t2.layers.is_empty());
    }

    #[test]
    fn roof_of_a_pullback() {
        let (mut p, f) = balmer();
        let s = Sgf::new(&p, vec![Term::upper(f)]).unwrap();
        let r = roof(&mut p, &s).unwrap();
        assert_eq!(r.apex, p.src(f));
        assert!(p.is_identity(r.a));
        assert_eq!(r.b, f);
        assert_eq!(r.as_sgf, s);
    }

    #[test]
    fn roof_of_base_change() {
        let (mut p, f) = balmer();
        let s = Sgf::new(&p, vec![Term::upper(f), Term::lower(f)]).unwrap();
        let r = roof(&mut p, &s).unwrap();
        let sq = p.pullback(f, f).unwrap();
        assert_eq!(r.as_sgf.terms, vec![Term::lower(sq.ft), Term::upper(sq.gt)]);
        assert_eq!(r.to_roof.layers.len(), 1);
        assert_eq!(r.to_roof.layers[0].cell, Cell::Fwd(Basic::Bc(sq)));
    }

    #[test]
    fn roof_of_balmer_word() {
        let (mut p, f) = balmer();
        let s = Sgf::new(&p, vec![Term::upper(f), Term::lower(f), Term::upper(f)]).unwrap();
        let r = roof(&mut p, &s).unwrap();
        r.to_roof.check(&p).unwrap();
        let mut v = ModelView::canonical(&p).unwrap();
        let apex = v.carrier(&p, r.apex).unwrap();
        assert_eq!(apex.len(), 4);
        let a = v.graph(&p, r.a).unwrap();
        let b = v.graph(&p, r.b).unwrap();
        // Valleys run from the input end: t = (x1, x3), and a reads x3.
        for (i, t) in apex.tuples.iter().enumerate() {
            assert_eq!(v.label(&p, p.dst(r.a), a[i]), ["1", "2"][t[1]]);
            assert_eq!(v.label(&p, p.dst(r.b), b[i]), "*");
        }
    }
}
