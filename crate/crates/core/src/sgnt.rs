//! Terms for standard geometric natural transformations.
//!
//! A term is a vertical stack of layers `(L cell R)`, applied bottom to top:
//! `layers[0]` acts first. Every intermediate functor has the source and
//! target of `dom`.

use std::fmt;
use std::rc::Rc;

use crate::sgf::{check_chain, Sgf, Term};
use crate::spaces::{MapId, Presentation, Result, SpaceError, SpaceId, Square};
use crate::structures::{GeoLicence, UnitCert};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Basic {
    /// `id -> f_* f^*`.
    Unit(MapId),
    /// `f^* f_* -> id`.
    Counit(MapId),
    /// `g_* f_* -> (gf)_*`.
    CompLower { f: MapId, g: MapId, gf: MapId },
    /// `f^* g^* -> (gf)^*`.
    CompUpper { f: MapId, g: MapId, gf: MapId },
    /// `id_* -> id` on the given space.
    TrivLower(SpaceId),
    /// `id^* -> id` on the given space.
    TrivUpper(SpaceId),
    /// `g^* f_* -> ft_* gt^*` for the chosen square of `(f, g)`.
    Bc(Square),
}

/// Why an inverse cell is allowed.
#[derive(Clone, Debug)]
pub enum Licence {
    /// Compositions and trivializations are isomorphisms outright.
    Free,
    Geoloc(Rc<GeoLicence>),
    Unit(Rc<UnitCert>),
    Uncertified(String),
}

#[derive(Clone, Debug)]
pub enum Cell {
    Fwd(Basic),
    Inv(Basic, Licence),
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Cell::Fwd(a), Cell::Fwd(b)) => a == b,
            (Cell::Inv(a, _), Cell::Inv(b, _)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Cell {}

impl std::hash::Hash for Cell {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.is_inverse().hash(state);
        self.basic().hash(state);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Unit,
    Counit,
    Comp,
    Triv,
    Bc,
}

impl Basic {
    pub fn kind(&self) -> Kind {
        match self {
            Basic::Unit(_) => Kind::Unit,
            Basic::Counit(_) => Kind::Counit,
            Basic::CompLower { .. } | Basic::CompUpper { .. } => Kind::Comp,
            Basic::TrivLower(_) | Basic::TrivUpper(_) => Kind::Triv,
            Basic::Bc(_) => Kind::Bc,
        }
    }

    pub fn dom_terms(&self, p: &Presentation) -> Vec<Term> {
        match self {
            Basic::Unit(_) => vec![],
            Basic::Counit(f) => vec![Term::upper(*f), Term::lower(*f)],
            Basic::CompLower { f, g, .. } => vec![Term::lower(*g), Term::lower(*f)],
            Basic::CompUpper { f, g, .. } => vec![Term::upper(*f), Term::upper(*g)],
            Basic::TrivLower(x) => vec![Term::lower(p.id(*x))],
            Basic::TrivUpper(x) => vec![Term::upper(p.id(*x))],
            Basic::Bc(sq) => vec![Term::upper(sq.g), Term::lower(sq.f)],
        }
    }

    pub fn cod_terms(&self, _p: &Presentation) -> Vec<Term> {
        match self {
            Basic::Unit(f) => vec![Term::lower(*f), Term::upper(*f)],
            Basic::Counit(_) => vec![],
            Basic::CompLower { gf, .. } => vec![Term::lower(*gf)],
            Basic::CompUpper { gf, .. } => vec![Term::upper(*gf)],
            Basic::TrivLower(_) | Basic::TrivUpper(_) => vec![],
            Basic::Bc(sq) => vec![Term::lower(sq.ft), Term::upper(sq.gt)],
        }
    }

    /// Space of the shapes the cell's functors consume.
    pub fn input(&self, p: &Presentation) -> SpaceId {
        match self {
            Basic::Unit(f) => p.dst(*f),
            Basic::Counit(f) => p.src(*f),
            Basic::CompLower { f, .. } => p.src(*f),
            Basic::CompUpper { g, .. } => p.dst(*g),
            Basic::TrivLower(x) | Basic::TrivUpper(x) => *x,
            Basic::Bc(sq) => p.src(sq.f),
        }
    }

    pub fn output(&self, p: &Presentation) -> SpaceId {
        match self {
            Basic::Unit(f) => p.dst(*f),
            Basic::Counit(f) => p.src(*f),
            Basic::CompLower { g, .. } => p.dst(*g),
            Basic::CompUpper { f, .. } => p.src(*f),
            Basic::TrivLower(x) | Basic::TrivUpper(x) => *x,
            Basic::Bc(sq) => p.src(sq.g),
        }
    }

    pub fn display(&self, p: &Presentation) -> String {
        let n = |m: &MapId| p.map_name(*m).to_string();
        match self {
            Basic::Unit(f) => format!("unit({})", n(f)),
            Basic::Counit(f) => format!("counit({})", n(f)),
            Basic::CompLower { f, g, .. } => format!("comp_*({},{})", n(f), n(g)),
            Basic::CompUpper { f, g, .. } => format!("comp^*({},{})", n(f), n(g)),
            Basic::TrivLower(x) => format!("triv_*({})", p.space_name(*x)),
            Basic::TrivUpper(x) => format!("triv^*({})", p.space_name(*x)),
            Basic::Bc(sq) => format!("bc({},{})", n(&sq.f), n(&sq.g)),
        }
    }

    /// Whether the cell is invertible without any structure.
    pub fn is_free_iso(&self) -> bool {
        matches!(self.kind(), Kind::Comp | Kind::Triv)
    }
}

impl Cell {
    pub fn basic(&self) -> &Basic {
        match self {
            Cell::Fwd(b) | Cell::Inv(b, _) => b,
        }
    }

    pub fn is_inverse(&self) -> bool {
        matches!(self, Cell::Inv(..))
    }

    pub fn inv_free(b: Basic) -> Cell {
        Cell::Inv(b, Licence::Free)
    }

    pub fn dom_terms(&self, p: &Presentation) -> Vec<Term> {
        match self {
            Cell::Fwd(b) => b.dom_terms(p),
            Cell::Inv(b, _) => b.cod_terms(p),
        }
    }

    pub fn cod_terms(&self, p: &Presentation) -> Vec<Term> {
        match self {
            Cell::Fwd(b) => b.cod_terms(p),
            Cell::Inv(b, _) => b.dom_terms(p),
        }
    }

    /// The inverse cell; forward cells other than compositions and
    /// trivializations need a licence.
    pub fn inverse_with(&self, licence: Licence) -> Cell {
        match self {
            Cell::Fwd(b) => Cell::Inv(b.clone(), licence),
            Cell::Inv(b, _) => Cell::Fwd(b.clone()),
        }
    }

    pub fn display(&self, p: &Presentation) -> String {
        match self {
            Cell::Fwd(b) => b.display(p),
            Cell::Inv(b, _) => format!("{}^-1", b.display(p)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Layer {
    pub left: Vec<Term>,
    pub cell: Cell,
    pub right: Vec<Term>,
}

impl Layer {
    pub fn dom_word(&self, p: &Presentation) -> Vec<Term> {
        [self.left.clone(), self.cell.dom_terms(p), self.right.clone()].concat()
    }

    pub fn cod_word(&self, p: &Presentation) -> Vec<Term> {
        [self.left.clone(), self.cell.cod_terms(p), self.right.clone()].concat()
    }

    pub fn display(&self, p: &Presentation) -> String {
        if self.left.is_empty() && self.right.is_empty() {
            return self.cell.display(p);
        }
        let mut parts: Vec<String> = self.left.iter().map(|t| t.display(p)).collect();
        parts.push(self.cell.display(p));
        parts.extend(self.right.iter().map(|t| t.display(p)));
        format!("({})", parts.join(" "))
    }
}

/// Membership flags; a term's class is the least one containing all its
/// cells.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassFlags {
    pub bc: bool,
    pub bc_inv: bool,
    pub unit: bool,
    pub unit_inv: bool,
    pub uncertified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Level {
    /// `<comp, triv>`.
    CompTriv,
    /// `<bc, comp_0, triv_0>` with comp/triv inverses.
    Sgnt0Plus,
    /// Adds certified inverse base changes.
    Sgnt0,
    /// Adds units and counits.
    Sgnt0Unit,
    /// Adds certified inverse units.
    Sgnt0UnitInv,
    /// Contains an uncertified inverse.
    Full,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::CompTriv => "<comp,triv>",
            Level::Sgnt0Plus => "SGNT0+",
            Level::Sgnt0 => "SGNT0",
            Level::Sgnt0Unit => "<SGNT0,unit>",
            Level::Sgnt0UnitInv => "<SGNT0,unit,Unit^-1>",
            Level::Full => "uncertified",
        })
    }
}

impl ClassFlags {
    pub fn of_cell(c: &Cell) -> ClassFlags {
        let mut f = ClassFlags::default();
        match c {
            Cell::Fwd(b) => match b.kind() {
                Kind::Bc => f.bc = true,
                Kind::Unit | Kind::Counit => f.unit = true,
                _ => {}
            },
            Cell::Inv(b, lic) => match (b.kind(), lic) {
                (Kind::Comp | Kind::Triv, _) => {}
                (Kind::Bc, Licence::Geoloc(_)) => f.bc_inv = true,
                (Kind::Unit, Licence::Unit(_)) => f.unit_inv = true,
                _ => f.uncertified = true,
            },
        }
        f
    }

    pub fn join(self, o: ClassFlags) -> ClassFlags {
        ClassFlags {
            bc: self.bc || o.bc,
            bc_inv: self.bc_inv || o.bc_inv,
            unit: self.unit || o.unit,
            unit_inv: self.unit_inv || o.unit_inv,
            uncertified: self.uncertified || o.uncertified,
        }
    }

    pub fn level(&self) -> Level {
        if self.uncertified {
            Level::Full
        } else if self.unit_inv {
            Level::Sgnt0UnitInv
        } else if self.unit {
            Level::Sgnt0Unit
        } else if self.bc_inv {
            Level::Sgnt0
        } else if self.bc {
            Level::Sgnt0Plus
        } else {
            Level::CompTriv
        }
    }

    pub fn in_comp_triv(&self) -> bool {
        self.level() == Level::CompTriv
    }

    pub fn in_sgnt0(&self) -> bool {
        !self.unit && !self.unit_inv && !self.uncertified
    }

    /// `<SGNT0, unit>`.
    pub fn in_sgnt0_unit(&self) -> bool {
        !self.unit_inv && !self.uncertified
    }

    /// `<SGNT0, Unit^-1>`.
    pub fn in_sgnt0_unit_inv(&self) -> bool {
        !self.unit && !self.uncertified
    }

    /// `<SGNT, bc^-1, Unit^-1>`: everything certified.
    pub fn in_main_class(&self) -> bool {
        !self.uncertified
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SgntTerm {
    pub dom: Sgf,
    pub cod: Sgf,
    pub layers: Vec<Layer>,
}

impl SgntTerm {
    pub fn id(f: Sgf) -> SgntTerm {
        SgntTerm {
            dom: f.clone(),
            cod: f,
            layers: vec![],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn src(&self) -> SpaceId {
        self.dom.src
    }

    pub fn dst(&self) -> SpaceId {
        self.dom.dst
    }

    /// A single unwhiskered cell.
    pub fn cell(p: &Presentation, cell: Cell) -> Result<SgntTerm> {
        let b = cell.basic();
        let (i, o) = (b.input(p), b.output(p));
        let dom = Sgf {
            terms: cell.dom_terms(p),
            src: i,
            dst: o,
        };
        let cod = Sgf {
            terms: cell.cod_terms(p),
            src: i,
            dst: o,
        };
        dom.check(p)?;
        cod.check(p)?;
        Ok(SgntTerm {
            dom,
            cod,
            layers: vec![Layer {
                left: vec![],
                cell,
                right: vec![],
            }],
        })
    }

    pub fn basic(p: &Presentation, b: Basic) -> Result<SgntTerm> {
        SgntTerm::cell(p, Cell::Fwd(b))
    }

    /// Builds a term from a domain and a list of layers, checking every step.
    pub fn from_layers(p: &Presentation, dom: Sgf, layers: Vec<Layer>) -> Result<SgntTerm> {
        let mut cur = dom.terms.clone();
        for l in &layers {
            check_layer(p, l, &cur, dom.src, dom.dst)?;
            cur = l.cod_word(p);
        }
        let cod = Sgf {
            terms: cur,
            src: dom.src,
            dst: dom.dst,
        };
        Ok(SgntTerm { dom, cod, layers })
    }

    /// Checks layer chaining from `dom` to `cod`.
    pub fn check(&self, p: &Presentation) -> Result<()> {
        self.dom.check(p)?;
        self.cod.check(p)?;
        if self.cod.src != self.dom.src || self.cod.dst != self.dom.dst {
            return Err(SpaceError::Endpoint("domain and codomain live over different spaces".into()));
        }
        let mut cur = self.dom.terms.clone();
        for l in &self.layers {
            check_layer(p, l, &cur, self.dom.src, self.dom.dst)?;
            cur = l.cod_word(p);
        }
        if cur != self.cod.terms {
            return Err(SpaceError::Endpoint("last layer does not reach the codomain".into()));
        }
        Ok(())
    }

    /// Running functors: `words()[k]` is the functor before layer `k`.
    pub fn words(&self, p: &Presentation) -> Vec<Sgf> {
        let mut out = vec![self.dom.clone()];
        for l in &self.layers {
            out.push(Sgf {
                terms: l.cod_word(p),
                src: self.dom.src,
                dst: self.dom.dst,
            });
        }
        out
    }

    /// `upper . lower`.
    pub fn vcompose(upper: &SgntTerm, lower: &SgntTerm) -> Result<SgntTerm> {
        if upper.dom != lower.cod {
            return Err(SpaceError::Endpoint("vertical composite: codomain and domain differ".into()));
        }
        Ok(SgntTerm {
            dom: lower.dom.clone(),
            cod: upper.cod.clone(),
            layers: [lower.layers.clone(), upper.layers.clone()].concat(),
        })
    }

    /// Vertical composite of a list given top first.
    pub fn vcompose_all(parts: &[SgntTerm]) -> Result<SgntTerm> {
        let mut it = parts.iter().rev();
        let mut acc = it.next().expect("nonempty composite").clone();
        for t in it {
            acc = SgntTerm::vcompose(t, &acc)?;
        }
        Ok(acc)
    }

    /// `F phi G`.
    pub fn whisker(f: &Sgf, phi: &SgntTerm, g: &Sgf) -> Result<SgntTerm> {
        if f.src != phi.dom.dst || g.dst != phi.dom.src {
            return Err(SpaceError::Endpoint("whiskering functors do not meet the term".into()));
        }
        let wrap = |s: &Sgf| Sgf {
            terms: [f.terms.clone(), s.terms.clone(), g.terms.clone()].concat(),
            src: g.src,
            dst: f.dst,
        };
        Ok(SgntTerm {
            dom: wrap(&phi.dom),
            cod: wrap(&phi.cod),
            layers: phi
                .layers
                .iter()
                .map(|l| Layer {
                    left: [f.terms.clone(), l.left.clone()].concat(),
                    cell: l.cell.clone(),
                    right: [l.right.clone(), g.terms.clone()].concat(),
                })
                .collect(),
        })
    }

    pub fn flags(&self) -> ClassFlags {
        self.layers
            .iter()
            .fold(ClassFlags::default(), |acc, l| acc.join(ClassFlags::of_cell(&l.cell)))
    }

    pub fn level(&self) -> Level {
        self.flags().level()
    }

    /// The inverse, licensing each forward cell through `licence`.
    pub fn inverse_with(&self, mut licence: impl FnMut(&Layer) -> Option<Licence>) -> Option<SgntTerm> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in self.layers.iter().rev() {
            let cell = match &l.cell {
                Cell::Inv(b, _) => Cell::Fwd(b.clone()),
                Cell::Fwd(b) if b.is_free_iso() => Cell::Inv(b.clone(), Licence::Free),
                Cell::Fwd(b) => Cell::Inv(b.clone(), licence(l)?),
            };
            layers.push(Layer {
                left: l.left.clone(),
                cell,
                right: l.right.clone(),
            });
        }
        Some(SgntTerm {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            layers,
        })
    }

    /// The inverse of a term whose forward cells are all compositions or
    /// trivializations.
    pub fn inverse_free(&self) -> Option<SgntTerm> {
        self.inverse_with(|_| None)
    }

    pub fn display(&self, p: &Presentation) -> String {
        if self.layers.is_empty() {
            if self.dom.is_empty() {
                return format!("id({})", p.space_name(self.dom.src));
            }
            return format!("id({})", self.dom.display(p));
        }
        self.layers
            .iter()
            .rev()
            .map(|l| l.display(p))
            .collect::<Vec<_>>()
            .join(" . ")
    }
}

fn check_layer(p: &Presentation, l: &Layer, cur: &[Term], src: SpaceId, dst: SpaceId) -> Result<()> {
    let dom = l.dom_word(p);
    if dom != cur {
        return Err(SpaceError::Endpoint(format!(
            "layer `{}` does not apply to the running functor",
            l.display(p)
        )));
    }
    check_chain(p, &dom, src, dst)?;
    check_chain(p, &l.cod_word(p), src, dst)?;
    let b = l.cell.basic();
    let inner = l.right.first().map(|t| t.output(p)).unwrap_or(src);
    let outer = l.left.last().map(|t| t.input(p)).unwrap_or(dst);
    if inner != b.input(p) || outer != b.output(p) {
        return Err(SpaceError::Endpoint(format!(
            "cell `{}` sits between the wrong spaces",
            l.cell.display(p)
        )));
    }
    Ok(())
}

/// The expanded base change for a square:
/// `(counit(g) ft_* gt^*) . (g^* comp_*(ft,g)^-1 gt^*) . (g^* comp_*(gt,f) gt^*) . (g^* f_* unit(gt))`.
pub fn make_bc(p: &mut Presentation, sq: &Square) -> Result<SgntTerm> {
    let fgt = p.compose(sq.f, sq.gt)?;
    let gft = p.compose(sq.g, sq.ft)?;
    if fgt != gft {
        return Err(SpaceError::Endpoint("square does not commute".into()));
    }
    let dom = Sgf::new(p, vec![Term::upper(sq.g), Term::lower(sq.f)])?;
    let (g, f, ft, gt) = (sq.g, sq.f, sq.ft, sq.gt);
    let layers = vec![
        Layer {
            left: vec![Term::upper(g), Term::lower(f)],
            cell: Cell::Fwd(Basic::Unit(gt)),
            right: vec![],
        },
        Layer {
            left: vec![Term::upper(g)],
            cell: Cell::Fwd(Basic::CompLower { f: gt, g: f, gf: fgt }),
            right: vec![Term::upper(gt)],
        },
        Layer {
            left: vec![Term::upper(g)],
            cell: Cell::inv_free(Basic::CompLower { f: ft, g, gf: gft }),
            right: vec![Term::upper(gt)],
        },
        Layer {
            left: vec![],
            cell: Cell::Fwd(Basic::Counit(g)),
            right: vec![Term::lower(ft), Term::upper(gt)],
        },
    ];
    SgntTerm::from_layers(p, dom, layers)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Fwd,
    Bwd,
}

/// Reverse natural adjunction along `f`.
///
/// `Fwd`: `phi: F f_* -> G` becomes `(phi f^*) . (F unit(f)): F -> G f^*`.
/// `Bwd`: `psi: F -> G f^*` becomes `(G counit(f)) . (psi f_*): F f_* -> G`.
pub fn rna(p: &Presentation, phi: &SgntTerm, f: MapId, dir: Direction) -> Result<SgntTerm> {
    let shape_err = || SpaceError::Endpoint(format!("term does not have the shape required to transpose along `{}`", p.map_name(f)));
    match dir {
        Direction::Fwd => {
            let (last, fst) = phi.dom.terms.split_last().ok_or_else(shape_err)?;
            if *last != Term::lower(f) {
                return Err(shape_err());
            }
            let big_f = Sgf {
                terms: fst.to_vec(),
                src: p.dst(f),
                dst: phi.dom.dst,
            };
            let unit = SgntTerm::whisker(&big_f, &SgntTerm::basic(p, Basic::Unit(f))?, &Sgf::id(p.dst(f)))?;
            let fstar = Sgf::new(p, vec![Term::upper(f)])?;
            let top = SgntTerm::whisker(&Sgf::id(phi.dom.dst), phi, &fstar)?;
            SgntTerm::vcompose(&top, &unit)
        }
        Direction::Bwd => {
            let (last, gst) = phi.cod.terms.split_last().ok_or_else(shape_err)?;
            if *last != Term::upper(f) {
                return Err(shape_err());
            }
            let big_g = Sgf {
                terms: gst.to_vec(),
                src: p.src(f),
                dst: phi.cod.dst,
            };
            let flow = Sgf::new(p, vec![Term::lower(f)])?;
            let bottom = SgntTerm::whisker(&Sgf::id(phi.dom.dst), phi, &flow)?;
            let counit = SgntTerm::whisker(&big_g, &SgntTerm::basic(p, Basic::Counit(f))?, &Sgf::id(p.src(f)))?;
            SgntTerm::vcompose(&counit, &bottom)
        }
    }
}

/// The counit rebuilt from a base change and the unit of the diagonal:
/// `f^* f_* -> ft_* gt^* -> ft_* d_* d^* gt^* -> id_* id^* -> id`.
pub fn counit_expand(p: &mut Presentation, f: MapId) -> Result<SgntTerm> {
    let sq = p.pullback(f, f)?;
    if sq.declared {
        return Err(SpaceError::Unsupported(format!(
            "counit of `{}` cannot be expanded through a declared self-pullback",
            p.map_name(f)
        )));
    }
    let d = p.diagonal(f)?;
    let x = p.src(f);
    let idx = p.id(x);
    let dom = Sgf::new(p, vec![Term::upper(f), Term::lower(f)])?;
    let layers = vec![
        Layer {
            left: vec![],
            cell: Cell::Fwd(Basic::Bc(sq.clone())),
            right: vec![],
        },
        Layer {
            left: vec![Term::lower(sq.ft)],
            cell: Cell::Fwd(Basic::Unit(d)),
            right: vec![Term::upper(sq.gt)],
        },
        Layer {
            left: vec![],
            cell: Cell::Fwd(Basic::CompLower { f: d, g: sq.ft, gf: idx }),
            right: vec![Term::upper(d), Term::upper(sq.gt)],
        },
        Layer {
            left: vec![Term::lower(idx)],
            cell: Cell::Fwd(Basic::CompUpper { f: d, g: sq.gt, gf: idx }),
            right: vec![],
        },
        Layer {
            left: vec![],
            cell: Cell::Fwd(Basic::TrivLower(x)),
            right: vec![Term::upper(idx)],
        },
        Layer {
            left: vec![],
            cell: Cell::Fwd(Basic::TrivUpper(x)),
            right: vec![],
        },
    ];
    SgntTerm::from_layers(p, dom, layers)
}
