//! The category of spaces: base objects, generator maps, relations and
//! chosen fibered products.
//!
//! Every space is a [`Chain`]: a list of base "valleys" together with
//! equations (links) between them. A base space is a chain with one valley
//! and no links. Fibered products are chains too, so iterated pullbacks of
//! the same zigzag land on the same interned [`SpaceId`] whatever the
//! association order.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("endpoint mismatch: {0}")]
    Endpoint(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("model: {0}")]
    Model(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("class violation: {0}")]
    Class(String),
}

pub type Result<T> = std::result::Result<T, SpaceError>;

/// Three-valued answer used by every hypothesis check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }

    pub fn or(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::Yes, _) | (_, Tri::Yes) => Tri::Yes,
            (Tri::No, Tri::No) => Tri::No,
            _ => Tri::Unknown,
        }
    }

    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            _ => Tri::Unknown,
        }
    }

    pub fn is_yes(self) -> bool {
        self == Tri::Yes
    }
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpaceId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MapId(pub u32);

pub type BaseId = usize;
pub type GenId = usize;

/// A composite of generators; `w[0]` is applied last, the empty word is an
/// identity.
pub type Word = Vec<GenId>;

#[derive(Clone, Debug)]
pub struct BaseSpace {
    pub name: String,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub src: BaseId,
    pub dst: BaseId,
    pub iso: bool,
}

#[derive(Clone, Debug)]
pub struct Relation {
    pub lhs: Word,
    pub rhs: Word,
}

/// `apex` with `ft: apex -> src(g)` and `gt: apex -> src(f)` is declared to be
/// the fibered product of `f` and `g`.
#[derive(Clone, Debug)]
pub struct DeclaredPullback {
    pub f: GenId,
    pub g: GenId,
    pub apex: BaseId,
    pub ft: GenId,
    pub gt: GenId,
}

/// `u . pi_a = v . pi_b` into the base space `peak`. Stored with `a <= b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub peak: BaseId,
    pub u: Word,
    pub v: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chain {
    pub valleys: Vec<BaseId>,
    pub links: Vec<Link>,
}

/// One coordinate of a map into a chain: `word . pi_valley`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comp {
    pub valley: usize,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MapKey {
    pub src: SpaceId,
    pub dst: SpaceId,
    pub comps: Vec<Comp>,
}

/// A chosen cartesian square for the cospan `f: X -> Y <- Z: g`.
///
/// `ft: apex -> Z`, `gt: apex -> X`, and `diag = f . gt = g . ft`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Square {
    pub f: MapId,
    pub g: MapId,
    pub apex: SpaceId,
    pub ft: MapId,
    pub gt: MapId,
    pub diag: MapId,
    pub declared: bool,
}

/// Apex of a limit with its projections; `prov[k]` names the input vertex
/// and valley that apex valley `k` came from.
#[derive(Clone, Debug)]
pub struct LimitResult {
    pub apex: SpaceId,
    pub proj: Vec<MapId>,
    pub prov: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
struct SpaceRec {
    chain: Chain,
    name: String,
    id_map: MapId,
}

#[derive(Clone, Debug)]
struct MapRec {
    key: MapKey,
    name: String,
}

/// A finite-set interpretation of the base spaces and generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteModel {
    pub carriers: Vec<Vec<String>>,
    pub graphs: Vec<Vec<usize>>,
}

const BFS_STATES: usize = 20_000;
const BFS_SLACK: usize = 6;

#[derive(Clone, Debug, Default)]
pub struct Presentation {
    bases: Vec<BaseSpace>,
    gens: Vec<Generator>,
    relations: Vec<Relation>,
    declared: Vec<DeclaredPullback>,
    monos: BTreeSet<GenId>,
    model: Option<FiniteModel>,
    spaces: Vec<SpaceRec>,
    space_ids: HashMap<Chain, SpaceId>,
    maps: Vec<MapRec>,
    map_ids: HashMap<MapKey, MapId>,
    base_space: Vec<SpaceId>,
    gen_map: Vec<MapId>,
    pb_memo: HashMap<(MapId, MapId), (Square, Option<LimitResult>)>,
    canon_memo: HashMap<(SpaceId, Comp), Comp>,
    origins: HashMap<MapId, Vec<Origin>>,
    lim_counter: usize,
}

/// How a derived map arose; a map may have several origins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    /// `f . g`.
    Compose(MapId, MapId),
    /// The base change of `of` along `along`.
    BaseChange { of: MapId, along: MapId },
}

impl Presentation {
    pub fn new() -> Self {
        Self::default()
    }

    // ---- declarations -------------------------------------------------

    pub fn add_base(&mut self, name: &str) -> Result<BaseId> {
        if self.base_by_name(name).is_some() {
            return Err(SpaceError::Duplicate(name.to_string()));
        }
        let b = self.bases.len();
        self.bases.push(BaseSpace { name: name.to_string() });
        let sid = self.intern_space(
            Chain {
                valleys: vec![b],
                links: vec![],
            },
            name.to_string(),
        );
        self.base_space.push(sid);
        Ok(b)
    }

    pub fn add_gen(&mut self, name: &str, src: BaseId, dst: BaseId, iso: bool) -> Result<GenId> {
        if self.gen_by_name(name).is_some() {
            return Err(SpaceError::Duplicate(name.to_string()));
        }
        let g = self.gens.len();
        self.gens.push(Generator {
            name: name.to_string(),
            src,
            dst,
            iso,
        });
        self.canon_memo.clear();
        let key = MapKey {
            src: self.base_space[src],
            dst: self.base_space[dst],
            comps: vec![Comp {
                valley: 0,
                word: vec![g],
            }],
        };
        let m = self.intern_map(key, name.to_string());
        self.gen_map.push(m);
        Ok(g)
    }

    /// [`Presentation::add_gen`] returning the interned map.
    pub fn add_map(&mut self, name: &str, src: BaseId, dst: BaseId, iso: bool) -> Result<MapId> {
        let g = self.add_gen(name, src, dst, iso)?;
        Ok(self.gen_map[g])
    }

    pub fn add_relation(&mut self, lhs: Word, rhs: Word) -> Result<()> {
        let (ls, ld) = self.word_ends(&lhs)?;
        let (rs, rd) = self.word_ends(&rhs)?;
        let ok = match (ls, rs) {
            (Some(a), Some(b)) => a == b && ld == rd,
            _ => ld == rd,
        };
        if !ok {
            return Err(SpaceError::Endpoint(format!(
                "relation sides `{}` and `{}` have different endpoints",
                self.word_name(&lhs),
                self.word_name(&rhs)
            )));
        }
        if lhs.is_empty() && rhs.is_empty() {
            return Ok(());
        }
        self.relations.push(Relation { lhs, rhs });
        self.canon_memo.clear();
        self.pb_memo.clear();
        Ok(())
    }

    /// Declares `apex` (fresh) with `ft: apex -> src(g)`, `gt: apex -> src(f)`
    /// as the pullback of `f` and `g`, and adds the relation `f.gt = g.ft`.
    pub fn declare_pullback(
        &mut self,
        apex: &str,
        ft: &str,
        gt: &str,
        f: GenId,
        g: GenId,
    ) -> Result<()> {
        if self.gens[f].dst != self.gens[g].dst {
            return Err(SpaceError::Endpoint(format!(
                "pullback of `{}` and `{}`: targets differ",
                self.gens[f].name, self.gens[g].name
            )));
        }
        let w = self.add_base(apex)?;
        let zsrc = self.gens[g].src;
        let xsrc = self.gens[f].src;
        let ftg = self.add_gen(ft, w, zsrc, false)?;
        let gtg = self.add_gen(gt, w, xsrc, false)?;
        self.add_relation(vec![f, gtg], vec![g, ftg])?;
        self.declared.push(DeclaredPullback {
            f,
            g,
            apex: w,
            ft: ftg,
            gt: gtg,
        });
        Ok(())
    }

    pub fn declare_mono(&mut self, g: GenId) {
        self.monos.insert(g);
    }

    pub fn set_model(&mut self, model: FiniteModel) -> Result<()> {
        self.check_model(&model)?;
        self.model = Some(model);
        Ok(())
    }

    // ---- accessors ----------------------------------------------------

    pub fn bases(&self) -> &[BaseSpace] {
        &self.bases
    }

    pub fn gens(&self) -> &[Generator] {
        &self.gens
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn declared_pullbacks(&self) -> &[DeclaredPullback] {
        &self.declared
    }

    pub fn monos(&self) -> &BTreeSet<GenId> {
        &self.monos
    }

    pub fn model(&self) -> Option<&FiniteModel> {
        self.model.as_ref()
    }

    pub fn is_finite(&self) -> bool {
        self.model.is_some()
    }

    pub fn base_by_name(&self, name: &str) -> Option<BaseId> {
        self.bases.iter().position(|b| b.name == name)
    }

    pub fn gen_by_name(&self, name: &str) -> Option<GenId> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn base_space(&self, b: BaseId) -> SpaceId {
        self.base_space[b]
    }

    pub fn gen_map(&self, g: GenId) -> MapId {
        self.gen_map[g]
    }

    pub fn chain(&self, s: SpaceId) -> &Chain {
        &self.spaces[s.0 as usize].chain
    }

    pub fn space_name(&self, s: SpaceId) -> &str {
        &self.spaces[s.0 as usize].name
    }

    pub fn map_name(&self, m: MapId) -> &str {
        &self.maps[m.0 as usize].name
    }

    pub fn key(&self, m: MapId) -> &MapKey {
        &self.maps[m.0 as usize].key
    }

    pub fn src(&self, m: MapId) -> SpaceId {
        self.key(m).src
    }

    pub fn dst(&self, m: MapId) -> SpaceId {
        self.key(m).dst
    }

    pub fn num_spaces(&self) -> usize {
        self.spaces.len()
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    /// Base space of a single-valley space.
    pub fn as_base(&self, s: SpaceId) -> Option<BaseId> {
        let c = self.chain(s);
        (c.valleys.len() == 1 && c.links.is_empty()).then(|| c.valleys[0])
    }

    pub fn id(&self, s: SpaceId) -> MapId {
        self.spaces[s.0 as usize].id_map
    }

    pub fn is_identity(&self, m: MapId) -> bool {
        self.id(self.src(m)) == m
    }

    /// The generator word of a map between base spaces.
    pub fn as_word(&self, m: MapId) -> Option<&Word> {
        let k = self.key(m);
        if self.as_base(k.src).is_some() && self.as_base(k.dst).is_some() {
            Some(&k.comps[0].word)
        } else {
            None
        }
    }

    pub fn word_name(&self, w: &Word) -> String {
        if w.is_empty() {
            return "id".to_string();
        }
        w.iter()
            .map(|g| self.gens[*g].name.as_str())
            .collect::<Vec<_>>()
            .join(".")
    }

    /// Source and target base of a word; the source is `None` for the empty
    /// word, whose endpoints are fixed by context.
    fn word_ends(&self, w: &Word) -> Result<(Option<BaseId>, Option<BaseId>)> {
        if w.is_empty() {
            return Ok((None, None));
        }
        let src = self.gens[*w.last().unwrap()].src;
        let dst = self.word_target(src, w)?;
        Ok((Some(src), Some(dst)))
    }

    pub fn word_target(&self, src: BaseId, w: &[GenId]) -> Result<BaseId> {
        let mut cur = src;
        for g in w.iter().rev() {
            let gen = &self.gens[*g];
            if gen.src != cur {
                return Err(SpaceError::Endpoint(format!(
                    "`{}` starts at `{}`, not `{}`",
                    gen.name, self.bases[gen.src].name, self.bases[cur].name
                )));
            }
            cur = gen.dst;
        }
        Ok(cur)
    }

    // ---- interning ----------------------------------------------------

    fn intern_space(&mut self, chain: Chain, name: String) -> SpaceId {
        if let Some(s) = self.space_ids.get(&chain) {
            return *s;
        }
        let sid = SpaceId(self.spaces.len() as u32);
        let comps = (0..chain.valleys.len())
            .map(|i| Comp {
                valley: i,
                word: vec![],
            })
            .collect();
        let id_name = if chain.valleys.len() == 1 && chain.links.is_empty() {
            format!("id_{}", name)
        } else {
            format!("id({})", name)
        };
        self.spaces.push(SpaceRec {
            chain: chain.clone(),
            name,
            id_map: MapId(u32::MAX),
        });
        self.space_ids.insert(chain, sid);
        let key = MapKey {
            src: sid,
            dst: sid,
            comps,
        };
        let idm = self.intern_map(key, id_name);
        self.spaces[sid.0 as usize].id_map = idm;
        sid
    }

    fn intern_map(&mut self, key: MapKey, name: String) -> MapId {
        if let Some(m) = self.map_ids.get(&key) {
            return *m;
        }
        let mid = MapId(self.maps.len() as u32);
        self.maps.push(MapRec {
            key: key.clone(),
            name,
        });
        self.map_ids.insert(key, mid);
        mid
    }

    /// Builds and interns a map from raw coordinates, canonicalizing them
    /// and checking the link equations of the target.
    pub fn make_map(&mut self, src: SpaceId, dst: SpaceId, comps: Vec<Comp>, name: String) -> Result<MapId> {
        let dchain = self.chain(dst).clone();
        let schain = self.chain(src).clone();
        if comps.len() != dchain.valleys.len() {
            return Err(SpaceError::Endpoint(format!(
                "map `{}` has {} coordinates, target `{}` needs {}",
                name,
                comps.len(),
                self.space_name(dst),
                dchain.valleys.len()
            )));
        }
        let mut canon = Vec::with_capacity(comps.len());
        for (j, c) in comps.into_iter().enumerate() {
            if c.valley >= schain.valleys.len() {
                return Err(SpaceError::Endpoint(format!("map `{}`: bad valley", name)));
            }
            let t = self.word_target(schain.valleys[c.valley], &c.word)?;
            if t != dchain.valleys[j] {
                return Err(SpaceError::Endpoint(format!(
                    "map `{}`: coordinate {} lands in `{}`, expected `{}`",
                    name, j, self.bases[t].name, self.bases[dchain.valleys[j]].name
                )));
            }
            canon.push(self.canon(src, c));
        }
        for l in &dchain.links {
            let lhs = Comp {
                valley: canon[l.a].valley,
                word: [l.u.clone(), canon[l.a].word.clone()].concat(),
            };
            let rhs = Comp {
                valley: canon[l.b].valley,
                word: [l.v.clone(), canon[l.b].word.clone()].concat(),
            };
            if self.canon(src, lhs) != self.canon(src, rhs) {
                return Err(SpaceError::Endpoint(format!(
                    "map `{}` does not satisfy an equation of `{}`",
                    name,
                    self.space_name(dst)
                )));
            }
        }
        Ok(self.intern_map(
            MapKey {
                src,
                dst,
                comps: canon,
            },
            name,
        ))
    }

    // ---- composition --------------------------------------------------

    /// `f . g`.
    pub fn compose(&mut self, f: MapId, g: MapId) -> Result<MapId> {
        if self.dst(g) != self.src(f) {
            return Err(SpaceError::Endpoint(format!(
                "cannot compose `{}` after `{}`: `{}` is not `{}`",
                self.map_name(f),
                self.map_name(g),
                self.space_name(self.dst(g)),
                self.space_name(self.src(f))
            )));
        }
        if self.is_identity(f) {
            return Ok(g);
        }
        if self.is_identity(g) {
            return Ok(f);
        }
        let gk = self.key(g).clone();
        let fk = self.key(f).clone();
        let comps = fk
            .comps
            .iter()
            .map(|c| {
                let inner = &gk.comps[c.valley];
                Comp {
                    valley: inner.valley,
                    word: [c.word.clone(), inner.word.clone()].concat(),
                }
            })
            .collect();
        let name = format!("({}.{})", strip_parens(self.map_name(f)), strip_parens(self.map_name(g)));
        let m = self.make_map(gk.src, fk.dst, comps, name)?;
        self.add_origin(m, Origin::Compose(f, g));
        Ok(m)
    }

    fn add_origin(&mut self, m: MapId, o: Origin) {
        let v = self.origins.entry(m).or_default();
        if !v.contains(&o) {
            v.push(o);
        }
    }

    pub fn origins(&self, m: MapId) -> &[Origin] {
        self.origins.get(&m).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn compose_all(&mut self, maps: &[MapId]) -> Result<MapId> {
        let mut it = maps.iter().rev();
        let mut acc = *it.next().expect("nonempty composite");
        for m in it {
            acc = self.compose(*m, acc)?;
        }
        Ok(acc)
    }

    // ---- canonical coordinates ----------------------------------------

    /// Canonical representative of a coordinate of a map out of `s`.
    pub fn canon(&mut self, s: SpaceId, c: Comp) -> Comp {
        if let Some(r) = self.canon_memo.get(&(s, c.clone())) {
            return r.clone();
        }
        let chain = self.chain(s).clone();
        let r = self.canon_in(&chain, &c);
        self.canon_memo.insert((s, c), r.clone());
        r
    }

    /// Breadth-first search over relation rewrites and link moves, keeping
    /// the least element by (valley, length, word).
    pub fn canon_in(&self, chain: &Chain, c: &Comp) -> Comp {
        let max_len = c.word.len() + BFS_SLACK;
        let mut seen: HashSet<Comp> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(c.clone());
        queue.push_back(c.clone());
        let mut best = c.clone();
        while let Some(cur) = queue.pop_front() {
            if comp_less(&cur, &best) {
                best = cur.clone();
            }
            if seen.len() >= BFS_STATES {
                continue;
            }
            for next in self.neighbours(chain, &cur) {
                if next.word.len() <= max_len && !seen.contains(&next) {
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }
        best
    }

    fn neighbours(&self, chain: &Chain, c: &Comp) -> Vec<Comp> {
        let mut out = Vec::new();
        for w in self.rewrites(&c.word) {
            out.push(Comp {
                valley: c.valley,
                word: w,
            });
        }
        for l in &chain.links {
            if c.valley == l.a && c.word.ends_with(&l.u) {
                let mut w = c.word[..c.word.len() - l.u.len()].to_vec();
                w.extend_from_slice(&l.v);
                out.push(Comp { valley: l.b, word: w });
            }
            if c.valley == l.b && c.word.ends_with(&l.v) {
                let mut w = c.word[..c.word.len() - l.v.len()].to_vec();
                w.extend_from_slice(&l.u);
                out.push(Comp { valley: l.a, word: w });
            }
        }
        out
    }

    fn rewrites(&self, w: &Word) -> Vec<Word> {
        let mut out = Vec::new();
        for r in &self.relations {
            for (from, to) in [(&r.lhs, &r.rhs), (&r.rhs, &r.lhs)] {
                if from.is_empty() || from.len() > w.len() {
                    continue;
                }
                for i in 0..=w.len() - from.len() {
                    if w[i..i + from.len()] == from[..] {
                        let mut nw = w[..i].to_vec();
                        nw.extend_from_slice(to);
                        nw.extend_from_slice(&w[i + from.len()..]);
                        out.push(nw);
                    }
                }
            }
        }
        out
    }

    pub fn canon_word(&self, src: BaseId, w: &Word) -> Word {
        let chain = Chain {
            valleys: vec![src],
            links: vec![],
        };
        self.canon_in(
            &chain,
            &Comp {
                valley: 0,
                word: w.clone(),
            },
        )
        .word
    }

    // ---- limits -------------------------------------------------------

    /// Limit of a finite diagram. `edges[k] = (i, j, m)` with `m: verts[i] ->
    /// verts[j]`. Vertices without incoming edges contribute their valleys to
    /// the apex, in vertex order.
    pub fn limit(
        &mut self,
        verts: &[SpaceId],
        edges: &[(usize, usize, MapId)],
        name: Option<String>,
    ) -> Result<LimitResult> {
        for (i, j, m) in edges {
            if self.src(*m) != verts[*i] || self.dst(*m) != verts[*j] {
                return Err(SpaceError::Endpoint(format!(
                    "diagram edge `{}` does not match its vertices",
                    self.map_name(*m)
                )));
            }
        }
        let n = verts.len();
        let mut incoming = vec![false; n];
        for (_, j, _) in edges {
            incoming[*j] = true;
        }
        let mut valleys = Vec::new();
        let mut prov = Vec::new();
        let mut exprs: Vec<Option<Vec<Comp>>> = vec![None; n];
        for v in 0..n {
            if incoming[v] {
                continue;
            }
            let ch = self.chain(verts[v]).clone();
            let off = valleys.len();
            valleys.extend_from_slice(&ch.valleys);
            for k in 0..ch.valleys.len() {
                prov.push((v, k));
            }
            exprs[v] = Some(
                (0..ch.valleys.len())
                    .map(|k| Comp {
                        valley: off + k,
                        word: vec![],
                    })
                    .collect(),
            );
        }
        // Internal equations of the free vertices.
        let mut links = Vec::new();
        for v in 0..n {
            if incoming[v] {
                continue;
            }
            let off = exprs[v].as_ref().unwrap()[0].valley;
            for l in &self.chain(verts[v]).links {
                links.push(Link {
                    a: l.a + off,
                    b: l.b + off,
                    peak: l.peak,
                    u: l.u.clone(),
                    v: l.v.clone(),
                });
            }
        }
        let mut used = vec![false; edges.len()];
        loop {
            let mut changed = false;
            for (k, (i, j, m)) in edges.iter().enumerate() {
                if exprs[*i].is_some() && exprs[*j].is_none() {
                    let e = push_comps(self.key(*m), exprs[*i].as_ref().unwrap());
                    exprs[*j] = Some(e);
                    used[k] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if exprs.iter().any(|e| e.is_none()) {
            return Err(SpaceError::Unsupported(
                "diagram has a vertex unreachable from a source".into(),
            ));
        }
        for (k, (i, j, m)) in edges.iter().enumerate() {
            if used[k] {
                continue;
            }
            let via = push_comps(self.key(*m), exprs[*i].as_ref().unwrap());
            let direct = exprs[*j].as_ref().unwrap();
            let peaks = self.chain(verts[*j]).valleys.clone();
            for (q, peak) in peaks.iter().enumerate() {
                links.push(Link {
                    a: direct[q].valley,
                    b: via[q].valley,
                    peak: *peak,
                    u: direct[q].word.clone(),
                    v: via[q].word.clone(),
                });
            }
        }
        let mut tracked: Vec<Comp> = exprs.iter().flat_map(|e| e.clone().unwrap()).collect();
        let mut chain = self.canonicalize_chain(valleys, links, &mut tracked, &mut prov);
        if let Some(existing) = self.equivalent_chain(&chain) {
            chain = existing;
            for t in tracked.iter_mut() {
                *t = self.canon_in(&chain, t);
            }
        }
        let apex_name = name.unwrap_or_else(|| {
            self.lim_counter += 1;
            format!("lim{}", self.lim_counter)
        });
        let apex = self.intern_space(chain, apex_name.clone());
        let mut proj = Vec::with_capacity(n);
        let mut t = 0;
        for v in 0..n {
            let len = self.chain(verts[v]).valleys.len();
            let comps = tracked[t..t + len].to_vec();
            t += len;
            let pname = format!("pr{}({})", v, strip_parens(&apex_name));
            proj.push(self.make_map(apex, verts[v], comps, pname)?);
        }
        Ok(LimitResult { apex, proj, prov })
    }

    fn canonicalize_chain(
        &self,
        mut valleys: Vec<BaseId>,
        mut links: Vec<Link>,
        tracked: &mut [Comp],
        prov: &mut Vec<(usize, usize)>,
    ) -> Chain {
        loop {
            links = self.normalize_links(&valleys, links);
            // Eliminate a valley fixed by an identity leg.
            let elim = links.iter().position(|l| l.a != l.b && (l.u.is_empty() || l.v.is_empty()));
            if let Some(k) = elim {
                let l = links.remove(k);
                let (gone, keep, extra) = if l.v.is_empty() {
                    (l.b, l.a, l.u.clone())
                } else {
                    (l.a, l.b, l.v.clone())
                };
                let subst = |c: &mut Comp| {
                    if c.valley == gone {
                        c.valley = keep;
                        c.word.extend_from_slice(&extra);
                    }
                    if c.valley > gone {
                        c.valley -= 1;
                    }
                };
                for t in tracked.iter_mut() {
                    subst(t);
                }
                let mut nl = Vec::with_capacity(links.len());
                for l in links.into_iter() {
                    let mut ca = Comp {
                        valley: l.a,
                        word: l.u,
                    };
                    let mut cb = Comp {
                        valley: l.b,
                        word: l.v,
                    };
                    subst(&mut ca);
                    subst(&mut cb);
                    nl.push(Link {
                        a: ca.valley,
                        b: cb.valley,
                        peak: l.peak,
                        u: ca.word,
                        v: cb.word,
                    });
                }
                links = nl;
                valleys.remove(gone);
                prov.remove(gone);
                continue;
            }
            // Drop one link implied by the others.
            let mut dropped = false;
            for k in 0..links.len() {
                let mut rest = links.clone();
                let l = rest.remove(k);
                let ch = Chain {
                    valleys: valleys.clone(),
                    links: rest.clone(),
                };
                let x = self.canon_in(
                    &ch,
                    &Comp {
                        valley: l.a,
                        word: l.u.clone(),
                    },
                );
                let y = self.canon_in(
                    &ch,
                    &Comp {
                        valley: l.b,
                        word: l.v.clone(),
                    },
                );
                if x == y {
                    links = rest;
                    dropped = true;
                    break;
                }
            }
            if !dropped {
                break;
            }
        }
        let chain = Chain { valleys, links };
        for t in tracked.iter_mut() {
            *t = self.canon_in(&chain, t);
        }
        chain
    }

    /// An interned chain over the same valleys presenting the same
    /// equations, if any.
    fn equivalent_chain(&self, chain: &Chain) -> Option<Chain> {
        if self.space_ids.contains_key(chain) {
            return None;
        }
        let holds = |ch: &Chain, l: &Link| {
            let x = self.canon_in(ch, &Comp { valley: l.a, word: l.u.clone() });
            let y = self.canon_in(ch, &Comp { valley: l.b, word: l.v.clone() });
            x == y
        };
        self.spaces
            .iter()
            .map(|r| &r.chain)
            .filter(|c| c.valleys == chain.valleys)
            .find(|c| c.links.iter().all(|l| holds(chain, l)) && chain.links.iter().all(|l| holds(c, l)))
            .cloned()
    }

    fn normalize_links(&self, valleys: &[BaseId], links: Vec<Link>) -> Vec<Link> {
        let mut out: Vec<Link> = links
            .into_iter()
            .map(|l| {
                let u = self.canon_word(valleys[l.a], &l.u);
                let v = self.canon_word(valleys[l.b], &l.v);
                if l.a > l.b || (l.a == l.b && u > v) {
                    Link {
                        a: l.b,
                        b: l.a,
                        peak: l.peak,
                        u: v,
                        v: u,
                    }
                } else {
                    Link {
                        a: l.a,
                        b: l.b,
                        peak: l.peak,
                        u,
                        v,
                    }
                }
            })
            .filter(|l| !(l.a == l.b && l.u == l.v))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// The chosen pullback of `f: X -> Y` and `g: Z -> Y`, memoized on the
    /// ordered pair. Declared squares take precedence.
    pub fn pullback(&mut self, f: MapId, g: MapId) -> Result<Square> {
        Ok(self.pullback_full(f, g)?.0)
    }

    /// The pullback with its limit data; the limit data is absent for
    /// declared squares.
    pub fn pullback_full(&mut self, f: MapId, g: MapId) -> Result<(Square, Option<LimitResult>)> {
        if let Some(r) = self.pb_memo.get(&(f, g)) {
            return Ok(r.clone());
        }
        if self.dst(f) != self.dst(g) {
            return Err(SpaceError::Endpoint(format!(
                "pullback of `{}` and `{}`: targets `{}` and `{}` differ",
                self.map_name(f),
                self.map_name(g),
                self.space_name(self.dst(f)),
                self.space_name(self.dst(g))
            )));
        }
        let declared = self.declared.iter().find(|d| self.gen_map[d.f] == f && self.gen_map[d.g] == g).cloned();
        let strict = |p: &mut Self, keep: MapId, other_is_f: bool| -> Result<(Square, Option<LimitResult>)> {
            // Pullback along an identity is the other map itself.
            let s = p.src(keep);
            let one = p.id(s);
            let n = p.chain(s).valleys.len();
            let (ft, gt, proj, v) = if other_is_f {
                (keep, one, vec![one, keep, keep], 0)
            } else {
                (one, keep, vec![keep, keep, one], 2)
            };
            Ok((
                Square {
                    f,
                    g,
                    apex: s,
                    ft,
                    gt,
                    diag: keep,
                    declared: false,
                },
                Some(LimitResult {
                    apex: s,
                    proj,
                    prov: (0..n).map(|k| (v, k)).collect(),
                }),
            ))
        };
        let result = if let Some(d) = declared {
            let ft = self.gen_map[d.ft];
            let gt = self.gen_map[d.gt];
            let diag = self.compose(f, gt)?;
            (
                Square {
                    f,
                    g,
                    apex: self.base_space[d.apex],
                    ft,
                    gt,
                    diag,
                    declared: true,
                },
                None,
            )
        } else if self.is_identity(f) {
            strict(self, g, false)?
        } else if self.is_identity(g) {
            strict(self, f, true)?
        } else {
            let fname = strip_parens(self.map_name(f)).to_string();
            let gname = strip_parens(self.map_name(g)).to_string();
            let (x, y, z) = (self.src(f), self.dst(f), self.src(g));
            let lim = self.limit(
                &[x, y, z],
                &[(0, 1, f), (2, 1, g)],
                Some(format!("src(pb1({},{}))", fname, gname)),
            )?;
            let mut proj = lim.proj.clone();
            proj[2] = self.rename(proj[2], format!("pb1({},{})", fname, gname));
            proj[0] = self.rename(proj[0], format!("pb2({},{})", fname, gname));
            let sq = Square {
                f,
                g,
                apex: lim.apex,
                ft: proj[2],
                gt: proj[0],
                diag: proj[1],
                declared: false,
            };
            (
                sq,
                Some(LimitResult {
                    apex: lim.apex,
                    proj,
                    prov: lim.prov,
                }),
            )
        };
        let sq = &result.0;
        if sq.ft != f && !self.is_identity(sq.ft) {
            self.add_origin(sq.ft, Origin::BaseChange { of: f, along: g });
        }
        if sq.gt != g && !self.is_identity(sq.gt) {
            self.add_origin(sq.gt, Origin::BaseChange { of: g, along: f });
        }
        self.pb_memo.insert((f, g), result.clone());
        Ok(result)
    }

    /// Replaces a generated name (`pr..`) by a better one; names of maps that
    /// already carried a user-facing name are kept.
    fn rename(&mut self, m: MapId, name: String) -> MapId {
        let rec = &mut self.maps[m.0 as usize];
        if rec.name.starts_with("pr") && rec.name.contains('(') && !rec.name.starts_with("pb") {
            rec.name = name;
        }
        m
    }

    /// The unique map `t -> apex` whose composite with each projection is
    /// `legs[v]`.
    pub fn factor(&mut self, lim: &LimitResult, t: SpaceId, legs: &[MapId], name: String) -> Result<MapId> {
        for (v, m) in legs.iter().enumerate() {
            if self.src(*m) != t || self.dst(*m) != self.dst(lim.proj[v]) {
                return Err(SpaceError::Endpoint(format!(
                    "leg `{}` does not match the limit vertex",
                    self.map_name(*m)
                )));
            }
        }
        let comps: Vec<Comp> = lim
            .prov
            .iter()
            .map(|(v, k)| self.key(legs[*v]).comps[*k].clone())
            .collect();
        let m = self.make_map(t, lim.apex, comps, name)?;
        for (v, leg) in legs.iter().enumerate() {
            let c = self.compose(lim.proj[v], m)?;
            if c != *leg {
                return Err(SpaceError::Endpoint(format!(
                    "legs do not form a cone (vertex {} via `{}`)",
                    v,
                    self.map_name(*leg)
                )));
            }
        }
        Ok(m)
    }

    /// The diagonal `src(f) -> pb(f,f)`.
    pub fn diagonal(&mut self, f: MapId) -> Result<MapId> {
        let (sq, lim) = self.pullback_full(f, f)?;
        let lim = lim.ok_or_else(|| {
            SpaceError::Unsupported(format!(
                "diagonal into the declared self-pullback of `{}` is not presented",
                self.map_name(f)
            ))
        })?;
        let x = self.src(f);
        let idx = self.id(x);
        let legs = [idx, f, idx];
        let name = format!("diag({})", strip_parens(self.map_name(f)));
        let d = self.factor(&lim, x, &legs, name)?;
        debug_assert_eq!(self.dst(d), sq.apex);
        Ok(d)
    }

    // ---- properties ---------------------------------------------------

    /// Isomorphism test; isos of the formal backend are exactly the words in
    /// declared iso generators.
    pub fn is_iso(&mut self, m: MapId) -> Tri {
        if self.is_identity(m) {
            return Tri::Yes;
        }
        if self.is_finite() {
            return match ModelView::canonical(self) {
                Some(mut v) => match v.graph(self, m) {
                    Ok(gr) => {
                        let n = v.carrier(self, self.dst(m)).map(|c| c.len()).unwrap_or(0);
                        Tri::from_bool(is_bijection(&gr, n))
                    }
                    Err(_) => Tri::Unknown,
                },
                None => Tri::Unknown,
            };
        }
        match self.as_word(m) {
            Some(w) => Tri::from_bool(w.iter().all(|g| self.gens[*g].iso)),
            None => Tri::Unknown,
        }
    }

    pub fn is_mono(&mut self, m: MapId) -> Tri {
        if self.is_identity(m) {
            return Tri::Yes;
        }
        if self.is_finite() {
            return match ModelView::canonical(self) {
                Some(mut v) => match v.graph(self, m) {
                    Ok(gr) => Tri::from_bool(is_injective(&gr)),
                    Err(_) => Tri::Unknown,
                },
                None => Tri::Unknown,
            };
        }
        match self.as_word(m) {
            Some(w) if w.iter().all(|g| self.gens[*g].iso || self.monos.contains(g)) => Tri::Yes,
            _ => Tri::Unknown,
        }
    }

    // ---- models -------------------------------------------------------

    pub fn check_model(&self, m: &FiniteModel) -> Result<()> {
        if m.carriers.len() != self.bases.len() || m.graphs.len() != self.gens.len() {
            return Err(SpaceError::Model("model does not cover every space and map".into()));
        }
        for (gi, g) in self.gens.iter().enumerate() {
            let gr = &m.graphs[gi];
            if gr.len() != m.carriers[g.src].len() || gr.iter().any(|y| *y >= m.carriers[g.dst].len()) {
                return Err(SpaceError::Model(format!("graph of `{}` is not a function", g.name)));
            }
            if g.iso && !is_bijection(gr, m.carriers[g.dst].len()) {
                return Err(SpaceError::Model(format!("iso `{}` is not a bijection", g.name)));
            }
        }
        check_relations(self, m)?;
        for d in &self.declared {
            let f = &m.graphs[d.f];
            let g = &m.graphs[d.g];
            let ft = &m.graphs[d.ft];
            let gt = &m.graphs[d.gt];
            let mut pairs: Vec<(usize, usize)> = (0..m.carriers[d.apex].len()).map(|w| (gt[w], ft[w])).collect();
            let n = pairs.len();
            pairs.sort();
            pairs.dedup();
            let mut fiber = Vec::new();
            for (x, fx) in f.iter().enumerate() {
                for (z, gz) in g.iter().enumerate() {
                    if fx == gz {
                        fiber.push((x, z));
                    }
                }
            }
            if pairs.len() != n || pairs != fiber {
                return Err(SpaceError::Model(format!(
                    "`{}` is not the fibered product of `{}` and `{}`",
                    self.bases[d.apex].name, self.gens[d.f].name, self.gens[d.g].name
                )));
            }
        }
        Ok(())
    }
}

/// Checks every declared relation on a model.
pub fn check_relations(p: &Presentation, m: &FiniteModel) -> Result<()> {
    for r in p.relations() {
        let src = match (r.lhs.last(), r.rhs.last()) {
            (Some(g), _) | (None, Some(g)) => p.gens()[*g].src,
            (None, None) => continue,
        };
        for x in 0..m.carriers[src].len() {
            if apply_word(m, &r.lhs, x) != apply_word(m, &r.rhs, x) {
                return Err(SpaceError::Model(format!(
                    "relation `{}` = `{}` fails at `{}`",
                    p.word_name(&r.lhs),
                    p.word_name(&r.rhs),
                    m.carriers[src][x]
                )));
            }
        }
    }
    Ok(())
}

pub fn apply_word(m: &FiniteModel, w: &[GenId], x: usize) -> usize {
    w.iter().rev().fold(x, |acc, g| m.graphs[*g][acc])
}

pub fn is_injective(gr: &[usize]) -> bool {
    let mut seen = HashSet::new();
    gr.iter().all(|y| seen.insert(*y))
}

pub fn is_bijection(gr: &[usize], n: usize) -> bool {
    gr.len() == n && is_injective(gr)
}

fn comp_less(a: &Comp, b: &Comp) -> bool {
    (a.valley, a.word.len(), &a.word) < (b.valley, b.word.len(), &b.word)
}

/// Coordinates of `m . e` where `e` gives the coordinates of a map into
/// `src(m)`.
fn push_comps(m: &MapKey, e: &[Comp]) -> Vec<Comp> {
    m.comps
        .iter()
        .map(|c| {
            let inner = &e[c.valley];
            Comp {
                valley: inner.valley,
                word: [c.word.clone(), inner.word.clone()].concat(),
            }
        })
        .collect()
}

pub fn strip_parens(s: &str) -> &str {
    if s.starts_with('(') && s.ends_with(')') {
        // Only strip if the outer parentheses match each other.
        let mut depth = 0i32;
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 && i != s.len() - 1 {
                        return s;
                    }
                }
                _ => {}
            }
        }
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Carriers and graphs of derived spaces and maps in a finite model.
///
/// Elements of a chain space are tuples over its valleys satisfying the
/// links, in lexicographic order.
#[derive(Clone, Debug)]
pub struct ModelView {
    pub model: FiniteModel,
    carriers: HashMap<SpaceId, std::rc::Rc<Carrier>>,
    graphs: HashMap<MapId, std::rc::Rc<Vec<usize>>>,
}

#[derive(Clone, Debug)]
pub struct Carrier {
    pub tuples: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl Carrier {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn index_of(&self, t: &[usize]) -> Option<usize> {
        self.index.get(t).copied()
    }
}

impl ModelView {
    pub fn new(model: FiniteModel) -> Self {
        ModelView {
            model,
            carriers: HashMap::new(),
            graphs: HashMap::new(),
        }
    }

    pub fn canonical(p: &Presentation) -> Option<Self> {
        p.model().cloned().map(ModelView::new)
    }

    pub fn carrier(&mut self, p: &Presentation, s: SpaceId) -> Result<std::rc::Rc<Carrier>> {
        if let Some(c) = self.carriers.get(&s) {
            return Ok(c.clone());
        }
        let chain = p.chain(s).clone();
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for (k, b) in chain.valleys.iter().enumerate() {
            let n = self.model.carriers[*b].len();
            let mut next = Vec::new();
            for t in &tuples {
                for x in 0..n {
                    let mut t2 = t.clone();
                    t2.push(x);
                    if chain
                        .links
                        .iter()
                        .filter(|l| l.b == k)
                        .all(|l| apply_word(&self.model, &l.u, t2[l.a]) == apply_word(&self.model, &l.v, t2[l.b]))
                    {
                        next.push(t2);
                    }
                }
            }
            tuples = next;
        }
        let index = tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let c = std::rc::Rc::new(Carrier { tuples, index });
        self.carriers.insert(s, c.clone());
        Ok(c)
    }

    pub fn graph(&mut self, p: &Presentation, m: MapId) -> Result<std::rc::Rc<Vec<usize>>> {
        if let Some(g) = self.graphs.get(&m) {
            return Ok(g.clone());
        }
        let key = p.key(m).clone();
        let sc = self.carrier(p, key.src)?;
        let dc = self.carrier(p, key.dst)?;
        let mut gr = Vec::with_capacity(sc.len());
        for t in &sc.tuples {
            let img: Vec<usize> = key
                .comps
                .iter()
                .map(|c| apply_word(&self.model, &c.word, t[c.valley]))
                .collect();
            match dc.index_of(&img) {
                Some(i) => gr.push(i),
                None => {
                    return Err(SpaceError::Model(format!(
                        "map `{}` leaves its target in this model",
                        p.map_name(m)
                    )))
                }
            }
        }
        let g = std::rc::Rc::new(gr);
        self.graphs.insert(m, g.clone());
        Ok(g)
    }

    /// Label of an element of a derived space.
    pub fn label(&mut self, p: &Presentation, s: SpaceId, i: usize) -> String {
        let c = match self.carrier(p, s) {
            Ok(c) => c,
            Err(_) => return format!("#{}", i),
        };
        let chain = p.chain(s);
        let t = &c.tuples[i];
        if t.len() == 1 {
            return self.model.carriers[chain.valleys[0]][t[0]].clone();
        }
        let parts: Vec<String> = t
            .iter()
            .zip(&chain.valleys)
            .map(|(x, b)| self.model.carriers[*b][*x].clone())
            .collect();
        format!("({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_to_one() -> (Presentation, GenId) {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let f = p.add_gen("f", x, y, false).unwrap();
        p.set_model(FiniteModel {
            carriers: vec![vec!["1".into(), "2".into()], vec!["*".into()]],
            graphs: vec![vec![0, 0]],
        })
        .unwrap();
        (p, f)
    }

    #[test]
    fn identity_laws() {
        let (mut p, f) = two_to_one();
        let fm = p.gen_map(f);
        let ix = p.id(p.src(fm));
        let iy = p.id(p.dst(fm));
        assert_eq!(p.compose(fm, ix).unwrap(), fm);
        assert_eq!(p.compose(iy, fm).unwrap(), fm);
    }

    #[test]
    fn composite_graph() {
        let (mut p, f) = two_to_one();
        let a = p.add_base("A").unwrap();
        let g = p.add_gen("g", a, 0, false).unwrap();
        let mut m = p.model().unwrap().clone();
        m.carriers.push(vec!["a".into()]);
        m.graphs.push(vec![1]);
        p.set_model(m).unwrap();
        let c = p.compose(p.gen_map(f), p.gen_map(g)).unwrap();
        let mut v = ModelView::canonical(&p).unwrap();
        let gr = v.graph(&p, c).unwrap();
        assert_eq!(*gr, vec![0]);
        assert_eq!(v.label(&p, p.dst(c), gr[0]), "*");
    }

    #[test]
    fn strict_identity_pullbacks() {
        let (mut p, f) = two_to_one();
        let fm = p.gen_map(f);
        let iy = p.id(p.dst(fm));
        let ix = p.id(p.src(fm));
        let sq = p.pullback(fm, iy).unwrap();
        assert_eq!(sq.apex, p.src(fm));
        assert_eq!(sq.ft, fm);
        assert_eq!(sq.gt, ix);
        let sq = p.pullback(iy, fm).unwrap();
        assert_eq!(sq.apex, p.src(fm));
        assert_eq!(sq.ft, ix);
        assert_eq!(sq.gt, fm);
    }

    #[test]
    fn self_pullback_has_four_points() {
        let (mut p, f) = two_to_one();
        let fm = p.gen_map(f);
        let sq = p.pullback(fm, fm).unwrap();
        let mut v = ModelView::canonical(&p).unwrap();
        let c = v.carrier(&p, sq.apex).unwrap();
        assert_eq!(c.tuples, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let again = p.pullback(fm, fm).unwrap();
        assert_eq!(again.apex, sq.apex);
    }

    #[test]
    fn mono_answers() {
        let (mut p, f) = two_to_one();
        let fm = p.gen_map(f);
        assert_eq!(p.is_mono(fm), Tri::No);
        let ix = p.id(p.src(fm));
        assert_eq!(p.is_mono(ix), Tri::Yes);
        let mut q = Presentation::new();
        let x = q.add_base("X").unwrap();
        let y = q.add_base("Y").unwrap();
        let g = q.add_gen("g", x, y, false).unwrap();
        assert_eq!(q.is_mono(q.gen_map(g)), Tri::Unknown);
    }

    #[test]
    fn pasting_gives_the_same_apex() {
        // h: H -> X, f: X -> Y, g: Z -> Y.
        let mut p = Presentation::new();
        let h0 = p.add_base("H").unwrap();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let z = p.add_base("Z").unwrap();
        let h = p.add_map("h", h0, x, false).unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        let g = p.add_map("g", z, y, false).unwrap();
        let fh = p.compose(f, h).unwrap();
        let big = p.pullback(fh, g).unwrap();
        let first = p.pullback(f, g).unwrap();
        let second = p.pullback(h, first.gt).unwrap();
        assert_eq!(second.apex, big.apex);
        let ft = p.compose(first.ft, second.ft).unwrap();
        assert_eq!(ft, big.ft);
        assert_eq!(second.gt, big.gt);
    }

    #[test]
    fn ordered_pairs_are_distinct() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let z = p.add_base("Z").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        let g = p.add_map("g", z, y, false).unwrap();
        let a = p.pullback(f, g).unwrap();
        let b = p.pullback(g, f).unwrap();
        assert_ne!(a.apex, b.apex);
    }

    #[test]
    fn relations_identify_words() {
        let mut p = Presentation::new();
        let a = p.add_base("A").unwrap();
        let b = p.add_base("B").unwrap();
        let c = p.add_base("C").unwrap();
        let d = p.add_base("D").unwrap();
        let f = p.add_gen("f", a, b, false).unwrap();
        let g = p.add_gen("g", b, d, false).unwrap();
        let h = p.add_gen("h", a, c, false).unwrap();
        let k = p.add_gen("k", c, d, false).unwrap();
        p.add_relation(vec![g, f], vec![k, h]).unwrap();
        let gf = p.compose(p.gen_map(g), p.gen_map(f)).unwrap();
        let kh = p.compose(p.gen_map(k), p.gen_map(h)).unwrap();
        assert_eq!(gf, kh);
    }

    #[test]
    fn declared_square_wins() {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let z = p.add_base("Z").unwrap();
        let f = p.add_gen("f", x, y, false).unwrap();
        let g = p.add_gen("g", z, y, false).unwrap();
        p.declare_pullback("W", "ft", "gt", f, g).unwrap();
        let sq = p.pullback(p.gen_map(f), p.gen_map(g)).unwrap();
        assert!(sq.declared);
        assert_eq!(p.space_name(sq.apex), "W");
    }

    #[test]
    fn diagonal_is_a_section_of_both_projections() {
        let (mut p, f) = two_to_one();
        let fm = p.gen_map(f);
        let d = p.diagonal(fm).unwrap();
        let sq = p.pullback(fm, fm).unwrap();
        let a = p.compose(sq.ft, d).unwrap();
        let b = p.compose(sq.gt, d).unwrap();
        assert!(p.is_identity(a) && p.is_identity(b));
    }
}
