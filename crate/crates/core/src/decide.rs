//! Square decompositions and equality verdicts.

use serde::Serialize;

use crate::oracle::{find_counterexample, Witness};
use crate::rewrite::{coherence_form, level_form, normalize, Walk};
use crate::sgf::{alternating_reduce, roof, RoofData, Sgf, Term, Var};
use crate::sgnt::{counit_expand, Basic, Cell, Kind, Layer, Licence, SgntTerm};
use crate::spaces::{MapId, Presentation, Result, SpaceError, SpaceId, Tri};
use crate::structures::{pair_factors, pair_is_mono, GeoStructure};

/// The square of a single whiskered unit `F unit(f) G`.
#[derive(Clone, Debug)]
pub struct UnitRoof {
    /// `Q -> P`, where `P` is the apex of `roof(FG)`.
    pub f_tilde: MapId,
    pub unit: SgntTerm,
    /// `FG -> a_* b^*` (identity legs kept as padding).
    pub left: SgntTerm,
    /// `a_* unit(f~) b^*`.
    pub top: SgntTerm,
    /// `F f_* f^* G -> a_* f~_* f~^* b^*`, in `SGNT0`.
    pub bottom: SgntTerm,
}

impl UnitRoof {
    /// `(bottom . unit, top . left)`.
    pub fn paths(&self) -> Result<(SgntTerm, SgntTerm)> {
        Ok((
            SgntTerm::vcompose(&self.bottom, &self.unit)?,
            SgntTerm::vcompose(&self.top, &self.left)?,
        ))
    }
}

/// Applies `t` to the walk's word at offset `at`.
fn run_at(p: &mut Presentation, w: &mut Walk, at: usize, t: &SgntTerm) -> Result<()> {
    for l in &t.layers {
        w.apply(p, at + l.left.len(), l.cell.clone())?;
    }
    Ok(())
}

/// Inserts identity terms so the roof word at `at` reads `a_* b^*`.
fn pad(p: &mut Presentation, w: &mut Walk, at: usize, r: &RoofData) -> Result<()> {
    if p.is_identity(r.a) {
        w.untriv(p, at, Var::Lower, r.apex)?;
    }
    if p.is_identity(r.b) {
        w.untriv(p, at + 1, Var::Upper, r.apex)?;
    }
    Ok(())
}

/// Deletes every identity term, left to right.
fn strip(p: &mut Presentation, w: &mut Walk) -> Result<()> {
    while let Some(i) = w.word.iter().position(|t| p.is_identity(t.map)) {
        w.triv(p, i)?;
    }
    Ok(())
}

pub fn unit_roof_square(p: &mut Presentation, f_word: &Sgf, f: MapId, g_word: &Sgf) -> Result<UnitRoof> {
    let y = p.dst(f);
    if f_word.src != y || g_word.dst != y {
        return Err(SpaceError::Endpoint(format!(
            "`{}` and `{}` do not meet at the target of `{}`",
            f_word.display(p),
            g_word.display(p),
            p.map_name(f)
        )));
    }
    let rf = roof(p, f_word)?;
    let rg = roof(p, g_word)?;
    let nf = rf.as_sgf.len();
    let fg = f_word.then_after(g_word)?;

    let mut left = Walk::start(fg.clone());
    run_at(p, &mut left, 0, &rf.to_roof)?;
    run_at(p, &mut left, nf, &rg.to_roof)?;
    pad(p, &mut left, 0, &rf)?;
    pad(p, &mut left, 2, &rg)?;
    left.bc(p, 1)?;
    let sq0 = p.pullback_full(rg.a, rf.b)?;
    let lim = sq0.1.ok_or_else(|| {
        SpaceError::Unsupported(format!(
            "the unit roof needs the computed pullback of `{}` and `{}`, which is declared",
            p.map_name(rg.a),
            p.map_name(rf.b)
        ))
    })?;
    left.merge(p, 0)?;
    left.merge(p, 1)?;

    let unit_dom = Sgf {
        terms: [f_word.terms.clone(), vec![Term::lower(f), Term::upper(f)], g_word.terms.clone()].concat(),
        src: fg.src,
        dst: fg.dst,
    };
    let mut bottom = Walk::start(unit_dom);
    run_at(p, &mut bottom, 0, &rf.to_roof)?;
    run_at(p, &mut bottom, nf + 2, &rg.to_roof)?;
    pad(p, &mut bottom, 0, &rf)?;
    pad(p, &mut bottom, 4, &rg)?;
    bottom.bc(p, 1)?;
    bottom.bc(p, 3)?;
    bottom.bc(p, 2)?;
    bottom.merge(p, 1)?;
    bottom.merge(p, 2)?;
    let (u, v) = (bottom.word[1].map, bottom.word[2].map);
    let q = p.src(u);
    let av = p.compose(rg.a, v)?;
    let name = format!("{}~", p.map_name(f));
    let f_tilde = p.factor(&lim, q, &[v, av, u], name)?;
    bottom.split(p, 1, sq0.0.ft, f_tilde)?;
    bottom.split(p, 3, sq0.0.gt, f_tilde)?;
    bottom.merge(p, 0)?;
    bottom.merge(p, 3)?;

    let mut unit = Walk::start(fg);
    unit.unit(p, f_word.len(), f)?;
    let mut top = Walk::start(Sgf {
        terms: left.word.clone(),
        src: f_word.src,
        dst: f_word.dst,
    });
    top.dom.src = g_word.src;
    top.dom.dst = f_word.dst;
    top.unit(p, 1, f_tilde)?;
    let out = UnitRoof {
        f_tilde,
        unit: unit.finish(p)?,
        left: left.finish(p)?,
        top: top.finish(p)?,
        bottom: bottom.finish(p)?,
    };
    if out.bottom.cod != out.top.cod {
        return Err(SpaceError::Endpoint("unit roof: the two paths end at different functors".into()));
    }
    Ok(out)
}

/// A commutative square `roof(G) . phi = right . roof(F)`.
#[derive(Clone, Debug)]
pub struct SquareDecomposition {
    /// `phi` with counits expanded.
    pub phi: SgntTerm,
    pub left: SgntTerm,
    pub target_roof: SgntTerm,
    /// `g` and `E_g: roof(F) -> (a_F g)_* (b_F g)^*`.
    pub up: (MapId, SgntTerm),
    /// `f` and `E_f: roof(G) -> (a_G f)_* (b_G f)^*`, when units were inverted.
    pub down: Option<(MapId, SgntTerm)>,
    /// `roof(F) -> roof(G)`.
    pub right: SgntTerm,
}

impl SquareDecomposition {
    /// `(roof(G) . phi, right . roof(F))`.
    pub fn paths(&self) -> Result<(SgntTerm, SgntTerm)> {
        Ok((
            SgntTerm::vcompose(&self.target_roof, &self.phi)?,
            SgntTerm::vcompose(&self.right, &self.left)?,
        ))
    }
}

/// Replaces every counit layer by its expansion through a base change and
/// the unit of a diagonal.
pub fn expand_counits(p: &mut Presentation, phi: &SgntTerm) -> Result<SgntTerm> {
    let mut layers = Vec::with_capacity(phi.layers.len());
    for l in &phi.layers {
        match &l.cell {
            Cell::Fwd(Basic::Counit(f)) => {
                let e = counit_expand(p, *f)?;
                layers.extend(e.layers.into_iter().map(|x| Layer {
                    left: [l.left.clone(), x.left].concat(),
                    cell: x.cell,
                    right: [x.right, l.right.clone()].concat(),
                }));
            }
            Cell::Inv(Basic::Counit(_), _) => {
                return Err(SpaceError::Class(format!(
                    "`{}` is an inverted counit",
                    l.cell.display(p)
                )))
            }
            _ => layers.push(l.clone()),
        }
    }
    SgntTerm::from_layers(p, phi.dom.clone(), layers)
}

/// `roof -> (a g)_* (b g)^*` with identity legs deleted.
fn unit_edge(p: &mut Presentation, r: &RoofData, g: MapId) -> Result<SgntTerm> {
    let mut w = Walk::start(r.as_sgf.clone());
    pad(p, &mut w, 0, r)?;
    w.unit(p, 1, g)?;
    w.merge(p, 0)?;
    w.merge(p, 1)?;
    strip(p, &mut w)?;
    w.finish(p)
}

fn split_unit_layer(p: &Presentation, l: &Layer, f: MapId) -> (Sgf, Sgf) {
    let y = p.dst(f);
    let left = Sgf {
        terms: l.left.clone(),
        src: y,
        dst: l.left.first().map(|t| t.output(p)).unwrap_or(y),
    };
    let right = Sgf {
        terms: l.right[..].to_vec(),
        src: l.right.last().map(|t| t.input(p)).unwrap_or(y),
        dst: y,
    };
    (left, right)
}

fn is_sgnt0(c: &Cell) -> bool {
    match c {
        Cell::Fwd(b) => matches!(b.kind(), Kind::Comp | Kind::Triv | Kind::Bc),
        Cell::Inv(b, lic) => b.is_free_iso() || (b.kind() == Kind::Bc && matches!(lic, Licence::Geoloc(_))),
    }
}

/// The square of a term in `<SGNT0, unit>`: one upward unit, no downward one.
pub fn sgnt0_square(p: &mut Presentation, phi: &SgntTerm) -> Result<SquareDecomposition> {
    if !phi.flags().in_sgnt0_unit() {
        return Err(SpaceError::Class(format!("`{}` is not in <SGNT0, unit>", phi.display(p))));
    }
    inverses_square(p, phi, &GeoStructure::trivial())
}

/// The square of a term in `<SGNT0, unit, Unit^-1>`: `right = E_f^-1 . E_g`.
pub fn inverses_square(p: &mut Presentation, phi: &SgntTerm, geo: &GeoStructure) -> Result<SquareDecomposition> {
    let phi = expand_counits(p, phi)?;
    let rf = roof(p, &phi.dom)?;
    let rg = roof(p, &phi.cod)?;
    let words = phi.words(p);
    let mut apex: SpaceId = rf.apex;
    let mut g = p.id(rf.apex);
    let mut f = p.id(rf.apex);
    let mut cur = rf.apex;
    for (k, l) in phi.layers.iter().enumerate() {
        let next = roof(p, &words[k + 1])?.apex;
        match &l.cell {
            c if is_sgnt0(c) => {
                if next != cur {
                    return Err(SpaceError::Endpoint(format!("`{}` changed the roof", c.display(p))));
                }
            }
            Cell::Fwd(Basic::Unit(u)) => {
                let (lw, rw) = split_unit_layer(p, l, *u);
                let ur = unit_roof_square(p, &lw, *u, &rw)?;
                if p.dst(ur.f_tilde) != cur || p.src(ur.f_tilde) != next {
                    return Err(SpaceError::Endpoint("unit roof apexes differ from the computed roofs".into()));
                }
                if p.is_identity(f) {
                    apex = next;
                    g = p.compose(g, ur.f_tilde)?;
                    f = p.id(next);
                } else if !p.is_identity(ur.f_tilde) {
                    let sq = p.pullback(f, ur.f_tilde)?;
                    apex = sq.apex;
                    g = p.compose(g, sq.gt)?;
                    f = sq.ft;
                }
            }
            Cell::Inv(Basic::Unit(u), Licence::Unit(_)) => {
                let (lw, rw) = split_unit_layer(p, l, *u);
                let ur = unit_roof_square(p, &lw, *u, &rw)?;
                if p.dst(ur.f_tilde) != next || p.src(ur.f_tilde) != cur {
                    return Err(SpaceError::Endpoint("unit roof apexes differ from the computed roofs".into()));
                }
                f = p.compose(ur.f_tilde, f)?;
            }
            c => {
                return Err(SpaceError::Class(format!(
                    "layer {} `{}` is outside <SGNT0, unit, Unit^-1>",
                    k,
                    c.display(p)
                )))
            }
        }
        cur = next;
    }
    debug_assert_eq!(p.src(g), apex);
    let e_g = unit_edge(p, &rf, g)?;
    let (down, right) = if p.is_identity(f) {
        if e_g.cod != rg.as_sgf {
            return Err(SpaceError::Endpoint(format!(
                "upward edge ends at `{}`, not at the roof `{}`",
                e_g.cod.display(p),
                rg.as_sgf.display(p)
            )));
        }
        (None, e_g.clone())
    } else {
        let e_f = unit_edge(p, &rg, f)?;
        if e_f.cod != e_g.cod {
            return Err(SpaceError::Endpoint("the two unit edges end at different functors".into()));
        }
        let mut blocked = None;
        let inv = e_f.inverse_with(|l| match geo.licence_for(p, l) {
            Licence::Uncertified(why) => {
                blocked = Some(why);
                None
            }
            lic => Some(lic),
        });
        let inv = inv.ok_or_else(|| {
            SpaceError::Class(format!(
                "the downward unit of `{}` is not certified: {}",
                p.map_name(f),
                blocked.unwrap_or_default()
            ))
        })?;
        (Some((f, e_f)), SgntTerm::vcompose(&inv, &e_g)?)
    };
    Ok(SquareDecomposition {
        phi,
        left: rf.to_roof,
        target_roof: rg.to_roof,
        up: (g, e_g),
        down,
        right,
    })
}

// ---------------------------------------------------------------------
// Verdicts

#[derive(Clone, Debug, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: Tri,
    pub detail: String,
}

impl Hypothesis {
    fn new(name: &str, status: Tri, detail: String) -> Hypothesis {
        Hypothesis {
            name: name.to_string(),
            status,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Proof {
    /// Which theorem settled the question.
    pub step: String,
    pub canonical: Option<String>,
    pub hypotheses: Vec<Hypothesis>,
    pub trace_lhs: Vec<String>,
    pub trace_rhs: Vec<String>,
    pub squares: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Equal { proof: Proof },
    Unequal { witness: Witness, diagnostics: Vec<Hypothesis> },
    Unknown { diagnostics: Vec<Hypothesis> },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Equal { .. } => "equal",
            Verdict::Unequal { .. } => "unequal",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DecideOptions {
    pub trials: usize,
    pub seed: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { trials: 100, seed: 0 }
    }
}

fn is_trivial_word(p: &Presentation, f: &Sgf) -> bool {
    f.terms.is_empty() || (f.terms.len() == 1 && p.is_identity(f.terms[0].map))
}

fn uncertified(p: &Presentation, phi: &SgntTerm) -> Option<String> {
    phi.layers.iter().find_map(|l| match &l.cell {
        Cell::Inv(_, Licence::Uncertified(why)) => Some(format!("`{}`: {}", l.cell.display(p), why)),
        _ => None,
    })
}

/// Decides `phi = psi` by the first applicable rung of the ladder.
pub fn decide_equal(
    p: &mut Presentation,
    phi: &SgntTerm,
    psi: &SgntTerm,
    geo: &GeoStructure,
    opts: DecideOptions,
) -> Result<Verdict> {
    phi.check(p)?;
    psi.check(p)?;
    if phi.dom != psi.dom || phi.cod != psi.cod {
        return Err(SpaceError::Endpoint(format!(
            "`{} -> {}` and `{} -> {}` are not parallel",
            phi.dom.display(p),
            phi.cod.display(p),
            psi.dom.display(p),
            psi.cod.display(p)
        )));
    }
    let (fa, fb) = (phi.flags(), psi.flags());
    let proof = |step: &str, canonical: Option<String>, hyps: Vec<Hypothesis>| Proof {
        step: step.to_string(),
        canonical,
        hypotheses: hyps,
        trace_lhs: vec![],
        trace_rhs: vec![],
        squares: vec![],
    };
    let with_traces = |p: &mut Presentation, mut pr: Proof| -> Result<Verdict> {
        pr.trace_lhs = normalize(p, phi)?.trace;
        pr.trace_rhs = normalize(p, psi)?.trace;
        Ok(Verdict::Equal { proof: pr })
    };

    // (1) Compositions and trivializations only.
    if fa.in_comp_triv() && fb.in_comp_triv() {
        let c = coherence_form(p, &phi.dom, &phi.cod)?;
        return with_traces(p, proof("comp-triv-coherence", Some(c.display(p)), vec![]));
    }
    // (2) SGNT0 into a roof-shaped functor.
    if fa.in_sgnt0() && fb.in_sgnt0() {
        let (alt, _) = alternating_reduce(p, &phi.cod)?;
        if phi.cod.is_roof_shaped(p) || alt.is_roof_shaped(p) {
            let c = level_form(p, &phi.dom)?;
            return with_traces(p, proof("sgnt0-roof-uniqueness", Some(c.display(p)), vec![]));
        }
    }
    // (3) At most one basic functor on each side.
    let in_sgnt = |f: &crate::sgnt::ClassFlags| !f.bc_inv && !f.unit_inv && !f.uncertified;
    if phi.dom.len() <= 1 && phi.cod.len() <= 1 && in_sgnt(&fa) && in_sgnt(&fb) {
        let (td, tc) = (is_trivial_word(p, &phi.dom), is_trivial_word(p, &phi.cod));
        if td && tc {
            let c = coherence_form(p, &phi.dom, &phi.cod)?;
            return with_traces(p, proof("short-endpoints", Some(c.display(p)), vec![]));
        }
        if !td && !tc && phi.dom == phi.cod {
            let c = SgntTerm::id(phi.dom.clone());
            return with_traces(p, proof("short-endpoints", Some(c.display(p)), vec![]));
        }
    }
    // (4) The general theorem.
    let mut hyps = Vec::new();
    for (which, t) in [("lhs", phi), ("rhs", psi)] {
        if let Some(why) = uncertified(p, t) {
            hyps.push(Hypothesis::new("certificates", Tri::No, format!("{which} has an uncertified inverse {why}")));
        }
    }
    let certified = hyps.is_empty();
    let good = geo.is_good(p, &phi.cod)?;
    hyps.push(Hypothesis::new(
        "goodness",
        good,
        goodness_detail(p, geo, &phi.cod, good)?,
    ));
    let rf = roof(p, &phi.dom)?;
    let rg = roof(p, &phi.cod)?;
    let wa_f = pair_is_mono(p, rf.a, rf.b);
    let fact = pair_factors(p, rf.a, rf.b, rg.a, rg.b);
    let some_unit = fa.in_sgnt0_unit() || fb.in_sgnt0_unit();
    let some_inv = fa.in_sgnt0_unit_inv() || fb.in_sgnt0_unit_inv();
    let route_a = wa_f.and(Tri::from_bool(some_unit).or(fact));
    hyps.push(Hypothesis::new(
        "weak admissibility",
        wa_f,
        format!("pair ({}, {}) of the domain roof", p.map_name(rf.a), p.map_name(rf.b)),
    ));
    if !some_unit {
        hyps.push(Hypothesis::new(
            "factorization",
            fact,
            format!(
                "({}, {}) through ({}, {})",
                p.map_name(rg.b),
                p.map_name(rg.a),
                p.map_name(rf.b),
                p.map_name(rf.a)
            ),
        ));
    }
    let wa_g = pair_is_mono(p, rg.a, rg.b);
    let route_b = wa_g.and(Tri::from_bool(some_inv));
    hyps.push(Hypothesis::new(
        "weak admissibility (codomain)",
        wa_g,
        format!("pair ({}, {}) of the codomain roof", p.map_name(rg.a), p.map_name(rg.b)),
    ));
    let (route_c, c_detail) = direct_unit_check(p, geo, &rf, &rg)?;
    let unit_b = route_a.or(route_b).or(route_c);
    hyps.push(Hypothesis::new(
        "unit(b) invertibility",
        unit_b,
        format!(
            "via domain weak admissibility: {route_a}; via codomain weak admissibility: {route_b}; direct: {route_c} ({c_detail})"
        ),
    ));
    if certified && good.is_yes() && unit_b.is_yes() {
        let mut pr = proof("main-theorem", None, hyps);
        for (which, t) in [("lhs", phi), ("rhs", psi)] {
            pr.squares.push(match inverses_square(p, t, geo) {
                Ok(sq) => format!("{which}: right edge {}", sq.right.display(p)),
                Err(e) => format!("{which}: square unavailable ({e})"),
            });
        }
        return with_traces(p, pr);
    }
    // (5) Refutation.
    let first_failed: Vec<Hypothesis> = {
        let mut v: Vec<Hypothesis> = hyps.iter().filter(|h| h.status != Tri::Yes).cloned().collect();
        v.sort_by_key(|h| hypothesis_rank(&h.name));
        v
    };
    let diagnostics = if first_failed.is_empty() { hyps } else { first_failed };
    if let Some(w) = find_counterexample(p, phi, psi, opts.trials, opts.seed) {
        return Ok(Verdict::Unequal { witness: w, diagnostics });
    }
    Ok(Verdict::Unknown { diagnostics })
}

fn hypothesis_rank(name: &str) -> usize {
    [
        "certificates",
        "goodness",
        "admissibility",
        "weak admissibility",
        "factorization",
        "weak admissibility (codomain)",
        "unit(b) invertibility",
    ]
    .iter()
    .position(|n| *n == name)
    .unwrap_or(usize::MAX)
}

fn goodness_detail(p: &mut Presentation, geo: &GeoStructure, g: &Sgf, good: Tri) -> Result<String> {
    if good.is_yes() {
        return Ok(format!("`{}` is good", g.display(p)));
    }
    let (alt, _) = alternating_reduce(p, g)?;
    let mut pull = None;
    let mut push = None;
    for t in &alt.terms {
        let side = match t.var {
            Var::Upper => crate::structures::Side::Pull,
            Var::Lower => crate::structures::Side::Push,
        };
        if !geo.member(p, t.map, side).0.is_yes() {
            let slot = if t.var == Var::Upper { &mut pull } else { &mut push };
            slot.get_or_insert(t.display(p));
        }
    }
    Ok(format!(
        "`{}`: `{}` is not known to be pull-geolocalizing and `{}` is not known to be push-geolocalizing",
        alt.display(p),
        pull.unwrap_or_default(),
        push.unwrap_or_default()
    ))
}

/// `a_G* unit(b) b_G^*` certified directly, where `b` is the projection of
/// `roof(F) x_Z roof(G)` onto `roof(G)`.
fn direct_unit_check(p: &mut Presentation, geo: &GeoStructure, rf: &RoofData, rg: &RoofData) -> Result<(Tri, String)> {
    if !p.is_finite() {
        return Ok((Tri::Unknown, "formal backend".into()));
    }
    let (x, y) = (p.dst(rf.b), p.dst(rf.a));
    let lim = p.limit(
        &[rf.apex, rg.apex, x, y],
        &[(0, 2, rf.b), (1, 2, rg.b), (0, 3, rf.a), (1, 3, rg.a)],
        None,
    )?;
    let b = lim.proj[1];
    let left: Vec<Term> = if p.is_identity(rg.a) { vec![] } else { vec![Term::lower(rg.a)] };
    let right: Vec<Term> = if p.is_identity(rg.b) { vec![] } else { vec![Term::upper(rg.b)] };
    let layer = Layer {
        left,
        cell: Cell::Fwd(Basic::Unit(b)),
        right,
    };
    let shown = layer.display(p);
    Ok(match geo.certify_unit_inverse(p, &layer) {
        Ok(_) => (Tri::Yes, format!("`{shown}` is invertible")),
        Err(e) => (Tri::No, format!("`{shown}`: {e}")),
    })
}
