//! Geolocalizing classes, goodness, acyclicity and admissibility.
//!
//! Membership in a geolocalizing class is the closure of the declared
//! generators under composition, isomorphisms and base change. It is
//! searched lazily and every positive answer carries a certificate that
//! can be replayed. In the finite-set backend every map is push- and
//! pull-geolocalizing and every pair is acyclic.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use crate::oracle::Evaluator;
use crate::sgf::{alternating_reduce, roof, Sgf, Term, Var};
use crate::sgnt::{Basic, Cell, Layer, Licence};
use crate::spaces::{MapId, Origin, Presentation, Result, Square, Tri};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Push,
    Pull,
}

/// Why a map lies in a geolocalizing class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemberCert {
    Identity(MapId),
    Generator(MapId),
    Iso(MapId),
    Compose { map: MapId, outer: Box<MemberCert>, inner: Box<MemberCert> },
    BaseChange { map: MapId, of: Box<MemberCert>, along: MapId },
    FiniteSet(MapId),
}

impl MemberCert {
    pub fn map(&self) -> MapId {
        match self {
            MemberCert::Identity(m)
            | MemberCert::Generator(m)
            | MemberCert::Iso(m)
            | MemberCert::FiniteSet(m) => *m,
            MemberCert::Compose { map, .. } | MemberCert::BaseChange { map, .. } => *map,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Acyclicity {
    /// Only the pairs `(a, iso)` and `(iso, b)`.
    Trivial,
    /// Every pair; finite-set backend only.
    AllPairs,
    /// The trivial pairs and these `(a, b)`.
    Declared(Vec<(MapId, MapId)>),
}

/// Licence for inverting `bc(f, g)`: `f` push- or `g` pull-geolocalizing.
#[derive(Clone, Debug)]
pub struct GeoLicence {
    pub side: Side,
    pub cert: MemberCert,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AcyclicWitness {
    AllPairs,
    /// `b` is an isomorphism and `a` is push-geolocalizing.
    PushIso(MemberCert),
    /// `a` is an isomorphism and `b` is pull-geolocalizing.
    PullIso(MemberCert),
    Declared(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IsoWitness {
    /// The unit of an isomorphism.
    IsoMap,
    /// Every component of `A unit(f) B` is invertible in the session model.
    FiniteSet,
}

/// Certificate that a layer `(F A unit(f) B G)` lies in the class `Unit`.
#[derive(Clone, Debug)]
pub struct UnitCert {
    pub f: MapId,
    pub a: Vec<Term>,
    pub b: Vec<Term>,
    /// Roof legs of `AB`.
    pub pair: (MapId, MapId),
    pub acyclic: AcyclicWitness,
    pub iso: IsoWitness,
}

#[derive(Clone, Debug)]
pub struct GeoStructure {
    pub push: BTreeSet<MapId>,
    pub pull: BTreeSet<MapId>,
    pub acyclicity: Acyclicity,
    memo: RefCell<HashMap<(MapId, Side), Option<MemberCert>>>,
}

impl GeoStructure {
    pub fn new(push: BTreeSet<MapId>, pull: BTreeSet<MapId>, acyclicity: Acyclicity) -> Self {
        GeoStructure {
            push,
            pull,
            acyclicity,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn trivial() -> Self {
        GeoStructure::new(BTreeSet::new(), BTreeSet::new(), Acyclicity::Trivial)
    }

    /// The structure used by finite-set sessions.
    pub fn finite() -> Self {
        GeoStructure::new(BTreeSet::new(), BTreeSet::new(), Acyclicity::AllPairs)
    }

    fn gens(&self, side: Side) -> &BTreeSet<MapId> {
        match side {
            Side::Push => &self.push,
            Side::Pull => &self.pull,
        }
    }

    /// Membership of `m` in the closure of one class.
    pub fn member(&self, p: &mut Presentation, m: MapId, side: Side) -> (Tri, Option<MemberCert>) {
        if p.is_finite() {
            return (Tri::Yes, Some(MemberCert::FiniteSet(m)));
        }
        if let Some(r) = self.memo.borrow().get(&(m, side)) {
            return match r {
                Some(c) => (Tri::Yes, Some(c.clone())),
                None => (Tri::Unknown, None),
            };
        }
        let mut visiting = HashSet::new();
        let r = self.search(p, m, side, &mut visiting);
        self.memo.borrow_mut().insert((m, side), r.clone());
        match r {
            Some(c) => (Tri::Yes, Some(c)),
            None => (Tri::Unknown, None),
        }
    }

    fn search(&self, p: &mut Presentation, m: MapId, side: Side, visiting: &mut HashSet<MapId>) -> Option<MemberCert> {
        if let Some(Some(c)) = self.memo.borrow().get(&(m, side)) {
            return Some(c.clone());
        }
        if p.is_identity(m) {
            return Some(MemberCert::Identity(m));
        }
        if self.gens(side).contains(&m) {
            return Some(MemberCert::Generator(m));
        }
        if p.is_iso(m) == Tri::Yes {
            return Some(MemberCert::Iso(m));
        }
        if !visiting.insert(m) {
            return None;
        }
        // Words in base generators: peel off the last letter.
        if let Some(w) = p.as_word(m).cloned() {
            if w.len() > 1 {
                let last = p.gen_map(*w.last().unwrap());
                let rest = w[..w.len() - 1].to_vec();
                let src = p.gens()[*w.last().unwrap()].dst;
                if let Ok(outer) = word_map(p, src, &rest) {
                    if let (Some(a), Some(b)) = (self.search(p, outer, side, visiting), self.search(p, last, side, visiting)) {
                        visiting.remove(&m);
                        return Some(MemberCert::Compose {
                            map: m,
                            outer: Box::new(a),
                            inner: Box::new(b),
                        });
                    }
                }
            }
        }
        for o in p.origins(m).to_vec() {
            let found = match o {
                Origin::Compose(f, g) => match (self.search(p, f, side, visiting), self.search(p, g, side, visiting)) {
                    (Some(a), Some(b)) => Some(MemberCert::Compose {
                        map: m,
                        outer: Box::new(a),
                        inner: Box::new(b),
                    }),
                    _ => None,
                },
                Origin::BaseChange { of, along } => self.search(p, of, side, visiting).map(|c| MemberCert::BaseChange {
                    map: m,
                    of: Box::new(c),
                    along,
                }),
            };
            if found.is_some() {
                visiting.remove(&m);
                return found;
            }
        }
        visiting.remove(&m);
        None
    }

    /// Re-derives a membership certificate step by step.
    pub fn replay(&self, p: &mut Presentation, c: &MemberCert, side: Side) -> bool {
        match c {
            MemberCert::Identity(m) => p.is_identity(*m),
            MemberCert::Generator(m) => self.gens(side).contains(m),
            MemberCert::Iso(m) => p.is_iso(*m) == Tri::Yes,
            MemberCert::FiniteSet(_) => p.is_finite(),
            MemberCert::Compose { map, outer, inner } => {
                p.compose(outer.map(), inner.map()).ok() == Some(*map)
                    && self.replay(p, outer, side)
                    && self.replay(p, inner, side)
            }
            MemberCert::BaseChange { map, of, along } => {
                let sq = match side {
                    Side::Push => p.pullback(of.map(), *along).map(|s| s.ft),
                    Side::Pull => p.pullback(*along, of.map()).map(|s| s.gt),
                };
                let direct = sq.ok() == Some(*map);
                let flipped = match side {
                    Side::Push => p.pullback(*along, of.map()).map(|s| s.gt),
                    Side::Pull => p.pullback(of.map(), *along).map(|s| s.ft),
                };
                (direct || flipped.ok() == Some(*map)) && self.replay(p, of, side)
            }
        }
    }

    /// Licence to invert `bc(f, g)`.
    pub fn license_bc(&self, p: &mut Presentation, sq: &Square) -> Option<GeoLicence> {
        if let (Tri::Yes, Some(cert)) = self.member(p, sq.f, Side::Push) {
            return Some(GeoLicence { side: Side::Push, cert });
        }
        if let (Tri::Yes, Some(cert)) = self.member(p, sq.g, Side::Pull) {
            return Some(GeoLicence { side: Side::Pull, cert });
        }
        None
    }

    /// Goodness of the alternating reduction.
    pub fn is_good(&self, p: &mut Presentation, f: &Sgf) -> Result<Tri> {
        let (alt, _) = alternating_reduce(p, f)?;
        let mut pulls = Tri::Yes;
        let mut pushes = Tri::Yes;
        for t in &alt.terms {
            match t.var {
                Var::Upper => pulls = pulls.and(self.member(p, t.map, Side::Pull).0),
                Var::Lower => pushes = pushes.and(self.member(p, t.map, Side::Push).0),
            }
        }
        Ok(pulls.or(pushes))
    }

    /// Whether the pair `(a, b)` is in the acyclicity class.
    pub fn pair_acyclic(&self, p: &mut Presentation, a: MapId, b: MapId) -> (Tri, Option<AcyclicWitness>) {
        if self.acyclicity == Acyclicity::AllPairs {
            return (Tri::Yes, Some(AcyclicWitness::AllPairs));
        }
        if let Acyclicity::Declared(pairs) = &self.acyclicity {
            if let Some(i) = pairs.iter().position(|q| *q == (a, b)) {
                return (Tri::Yes, Some(AcyclicWitness::Declared(i)));
            }
        }
        let b_iso = p.is_iso(b);
        let (a_push, ca) = self.member(p, a, Side::Push);
        if b_iso == Tri::Yes && a_push == Tri::Yes {
            return (Tri::Yes, ca.map(AcyclicWitness::PushIso));
        }
        let a_iso = p.is_iso(a);
        let (b_pull, cb) = self.member(p, b, Side::Pull);
        if a_iso == Tri::Yes && b_pull == Tri::Yes {
            return (Tri::Yes, cb.map(AcyclicWitness::PullIso));
        }
        let first = b_iso.and(a_push);
        let second = a_iso.and(b_pull);
        (first.or(second), None)
    }

    pub fn is_admissible(&self, p: &mut Presentation, f: &Sgf) -> Result<Tri> {
        let r = roof(p, f)?;
        Ok(self.pair_acyclic(p, r.a, r.b).0)
    }

    /// Whether the pair map of the roof is a universal monomorphism.
    pub fn is_weakly_admissible(&self, p: &mut Presentation, f: &Sgf) -> Result<Tri> {
        let r = roof(p, f)?;
        Ok(pair_is_mono(p, r.a, r.b))
    }

    /// Certifies the inverse of a unit layer, trying the shortest splits
    /// `L = F A`, `R = B G` first.
    pub fn certify_unit_inverse(&self, p: &mut Presentation, layer: &Layer) -> std::result::Result<UnitCert, String> {
        let f = match layer.cell.basic() {
            Basic::Unit(f) => *f,
            _ => return Err("only units can be inverted through the acyclicity structure".into()),
        };
        let space = p.src(p.id(p.dst(f)));
        let src = layer.right.last().map(|t| t.input(p)).unwrap_or(space);
        let dst = layer.left.first().map(|t| t.output(p)).unwrap_or(space);
        let lower = Sgf {
            terms: [layer.left.clone(), layer.right.clone()].concat(),
            src,
            dst,
        };
        let upper = Sgf {
            terms: [layer.left.clone(), vec![Term::lower(f), Term::upper(f)], layer.right.clone()].concat(),
            src,
            dst,
        };
        for (which, s) in [("domain", &lower), ("codomain", &upper)] {
            match self.is_good(p, s).map_err(|e| e.to_string())? {
                Tri::Yes => {}
                t => {
                    return Err(format!(
                        "goodness: the {} `{}` of the inverted unit is not known to be good ({})",
                        which,
                        s.display(p),
                        t
                    ))
                }
            }
        }
        let nl = layer.left.len();
        let nr = layer.right.len();
        let mut splits: Vec<(usize, usize)> = (0..=nl).flat_map(|i| (0..=nr).map(move |j| (i, j))).collect();
        splits.sort_by_key(|(i, j)| (i + j, *i));
        // Reported failure is the one for the widest split.
        let mut last_err = None;
        for (i, j) in splits {
            let a: Vec<Term> = layer.left[nl - i..].to_vec();
            let b: Vec<Term> = layer.right[..j].to_vec();
            let inner_src = b.last().map(|t| t.input(p)).unwrap_or(p.dst(f));
            let inner_dst = a.first().map(|t| t.output(p)).unwrap_or(p.dst(f));
            let ab = Sgf {
                terms: [a.clone(), b.clone()].concat(),
                src: inner_src,
                dst: inner_dst,
            };
            let r = roof(p, &ab).map_err(|e| e.to_string())?;
            let (adm, wit) = self.pair_acyclic(p, r.a, r.b);
            let Some(wit) = wit.filter(|_| adm == Tri::Yes) else {
                last_err = Some(format!(
                    "admissibility: the pair ({}, {}) of `{}` is not in the acyclicity class",
                    p.map_name(r.a),
                    p.map_name(r.b),
                    ab.display(p)
                ));
                continue;
            };
            let iso = match unit_layer_iso(p, f, &a, &b, inner_src) {
                Some(w) => w,
                None => {
                    last_err = Some(format!(
                        "invertibility: `{}` is not known to be an isomorphism",
                        Layer {
                            left: a.clone(),
                            cell: Cell::Fwd(Basic::Unit(f)),
                            right: b.clone()
                        }
                        .display(p)
                    ));
                    continue;
                }
            };
            return Ok(UnitCert {
                f,
                a,
                b,
                pair: (r.a, r.b),
                acyclic: wit,
                iso,
            });
        }
        Err(last_err.unwrap_or_else(|| "no split certifies the unit".into()))
    }

    /// A licence for the inverse of a layer's cell, if one can be found.
    pub fn licence_for(&self, p: &mut Presentation, layer: &Layer) -> Licence {
        match layer.cell.basic() {
            b if b.is_free_iso() => Licence::Free,
            Basic::Bc(sq) => match self.license_bc(p, sq) {
                Some(l) => Licence::Geoloc(Rc::new(l)),
                None => Licence::Uncertified(format!(
                    "geolocalization: neither `{}` is push- nor `{}` is pull-geolocalizing",
                    p.map_name(sq.f),
                    p.map_name(sq.g)
                )),
            },
            Basic::Unit(_) => match self.certify_unit_inverse(p, layer) {
                Ok(c) => Licence::Unit(Rc::new(c)),
                Err(e) => Licence::Uncertified(e),
            },
            Basic::Counit(f) => Licence::Uncertified(format!(
                "counit inverses are not certified (counit of `{}`)",
                p.map_name(*f)
            )),
            _ => unreachable!(),
        }
    }

    /// Rechecks a unit certificate against the layer it licenses.
    pub fn replay_unit(&self, p: &mut Presentation, layer: &Layer, c: &UnitCert) -> bool {
        if layer.cell.basic() != &Basic::Unit(c.f) || !layer.left.ends_with(&c.a) || !layer.right.starts_with(&c.b) {
            return false;
        }
        self.certify_unit_inverse(p, layer)
            .map(|d| d.pair == c.pair && d.a.len() + d.b.len() <= c.a.len() + c.b.len())
            .unwrap_or(false)
    }
}

/// Whether `(a, b)` into `dst x src` is a universal monomorphism.
pub fn pair_is_mono(p: &mut Presentation, a: MapId, b: MapId) -> Tri {
    if p.is_finite() {
        let Some(mut ev) = Evaluator::canonical(p) else {
            return Tri::Unknown;
        };
        let (Ok(ga), Ok(gb)) = (ev.graph(a), ev.graph(b)) else {
            return Tri::Unknown;
        };
        let mut seen = HashSet::new();
        return Tri::from_bool(ga.iter().zip(gb.iter()).all(|pair| seen.insert(pair)));
    }
    p.is_mono(a).or(p.is_mono(b)).or(Tri::Unknown)
}

/// Whether `(b2, a2)` factors through `(b1, a1)`, both into `src x dst`.
pub fn pair_factors(p: &mut Presentation, a1: MapId, b1: MapId, a2: MapId, b2: MapId) -> Tri {
    if (a1, b1) == (a2, b2) {
        return Tri::Yes;
    }
    if p.is_finite() {
        let Some(mut ev) = Evaluator::canonical(p) else {
            return Tri::Unknown;
        };
        let (Ok(ga1), Ok(gb1), Ok(ga2), Ok(gb2)) = (ev.graph(a1), ev.graph(b1), ev.graph(a2), ev.graph(b2)) else {
            return Tri::Unknown;
        };
        let image: HashSet<(usize, usize)> = ga1.iter().copied().zip(gb1.iter().copied()).collect();
        return Tri::from_bool(ga2.iter().copied().zip(gb2.iter().copied()).all(|q| image.contains(&q)));
    }
    Tri::Unknown
}

fn word_map(p: &mut Presentation, src: usize, w: &[usize]) -> Result<MapId> {
    let mut acc = p.id(p.base_space(src));
    for g in w.iter().rev() {
        acc = p.compose(p.gen_map(*g), acc)?;
    }
    Ok(acc)
}

/// Evidence that `A unit(f) B` is an isomorphism.
fn unit_layer_iso(p: &mut Presentation, f: MapId, a: &[Term], b: &[Term], src: crate::spaces::SpaceId) -> Option<IsoWitness> {
    if p.is_iso(f) == Tri::Yes {
        return Some(IsoWitness::IsoMap);
    }
    if !p.is_finite() {
        return None;
    }
    // Components are block diagonal over points with identity blocks, so
    // unit dimensions decide invertibility for every shape.
    let mut ev = Evaluator::canonical(p)?;
    let layer = Layer {
        left: a.to_vec(),
        cell: Cell::Fwd(Basic::Unit(f)),
        right: b.to_vec(),
    };
    let ones = ev.ones(src).ok()?;
    let m = ev.layer_component(&layer, &ones).ok()?;
    m.iter().all(|x| x.inverse().is_some()).then_some(IsoWitness::FiniteSet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::FiniteModel;

    #[test]
    fn identity_functor_is_good() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let g = GeoStructure::trivial();
        let xs = p.base_space(x);
        assert_eq!(g.is_good(&mut p, &Sgf::id(xs)).unwrap(), Tri::Yes);
    }

    #[test]
    fn declared_push_makes_a_word_good() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let z = p.add_base("Z").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        let g = p.add_map("g", z, y, false).unwrap();
        let s = Sgf::new(&p, vec![Term::upper(g), Term::lower(f)]).unwrap();
        let geo = GeoStructure::new([f].into_iter().collect(), BTreeSet::new(), Acyclicity::Trivial);
        assert_eq!(geo.is_good(&mut p, &s).unwrap(), Tri::Yes);
        assert_eq!(GeoStructure::trivial().is_good(&mut p, &s).unwrap(), Tri::Unknown);
    }

    #[test]
    fn base_change_membership_replays() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let z = p.add_base("Z").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        let g = p.add_map("g", z, y, false).unwrap();
        let sq = p.pullback(f, g).unwrap();
        let geo = GeoStructure::new([f].into_iter().collect(), BTreeSet::new(), Acyclicity::Trivial);
        let (t, c) = geo.member(&mut p, sq.ft, Side::Push);
        assert_eq!(t, Tri::Yes);
        assert!(geo.replay(&mut p, &c.unwrap(), Side::Push));
        assert_eq!(geo.member(&mut p, sq.gt, Side::Push).0, Tri::Unknown);
    }

    #[test]
    fn admissibility_of_trivial_pairs() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let a = p.add_map("a", x, y, false).unwrap();
        let geo = GeoStructure::new([a].into_iter().collect(), BTreeSet::new(), Acyclicity::Trivial);
        let s = Sgf::new(&p, vec![Term::lower(a)]).unwrap();
        assert_eq!(geo.is_admissible(&mut p, &s).unwrap(), Tri::Yes);
        let t = Sgf::new(&p, vec![Term::lower(a), Term::upper(a)]).unwrap();
        assert_eq!(geo.is_admissible(&mut p, &t).unwrap(), Tri::No);
    }

    #[test]
    fn weak_admissibility() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        let fu = Sgf::new(&p, vec![Term::upper(f)]).unwrap();
        let geo = GeoStructure::trivial();
        assert_eq!(geo.is_weakly_admissible(&mut p, &fu).unwrap(), Tri::Yes);
        let fl = Sgf::new(&p, vec![Term::lower(f), Term::upper(f)]).unwrap();
        assert_eq!(geo.is_weakly_admissible(&mut p, &fl).unwrap(), Tri::Unknown);
        p.set_model(FiniteModel {
            carriers: vec![vec!["1".into(), "2".into()], vec!["*".into()]],
            graphs: vec![vec![0, 0]],
        })
        .unwrap();
        let fff = Sgf::new(&p, vec![Term::upper(f), Term::lower(f), Term::upper(f)]).unwrap();
        assert_eq!(GeoStructure::finite().is_weakly_admissible(&mut p, &fff).unwrap(), Tri::No);
    }

    #[test]
    fn far_from_an_immersion_is_rejected() {
        // p: X -> pt, a point f: P -> X, and the layer p_* unit(f) p^*.
        let mut s = Presentation::new();
        let x = s.add_base("X").unwrap();
        let pt = s.add_base("pt").unwrap();
        let p0 = s.add_base("P").unwrap();
        let p = s.add_map("p", x, pt, false).unwrap();
        let f = s.add_map("f", p0, x, false).unwrap();
        let geo = GeoStructure::new([p, f].into_iter().collect(), BTreeSet::new(), Acyclicity::Trivial);
        let layer = Layer {
            left: vec![Term::lower(p)],
            cell: Cell::Fwd(Basic::Unit(f)),
            right: vec![Term::upper(p)],
        };
        let err = geo.certify_unit_inverse(&mut s, &layer).unwrap_err();
        assert!(err.starts_with("admissibility"), "{err}");
    }
}
