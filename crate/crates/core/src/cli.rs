//! Session files and the command-line front end.
//!
//! A session is a sequence of `;`-terminated statements. Declarations come
//! first; the first binding or query freezes them. Functor words are written
//! as composites are: `f^* g_*` applies `g_*` first. Vertical composition
//! `phi . psi` applies `psi` first, and juxtaposition whiskers.
//!
//! ```text
//! space X, Y;
//! map f: X -> Y;
//! model M { X = {1, 2}; Y = {*}; f = {1 -> *, 2 -> *}; }
//! sgf F = f^* f_* f^*;
//! sgnt phi = (f^* unit(f)) . (counit(f) f^*);
//! check phi == id(F);
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser as ClapParser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::decide::{decide_equal, DecideOptions, Verdict};
use crate::rewrite::{normalize, Walk};
use crate::sgf::{roof, Sgf, Term, Var};
use crate::sgnt::{Basic, Cell, Layer, Licence, SgntTerm};
use crate::spaces::{BaseId, FiniteModel, GenId, MapId, Presentation, SpaceError, SpaceId, Word};
use crate::structures::{Acyclicity, GeoStructure};
use crate::svg::{render_svg, RenderOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{line}:{col}: {msg} (at `{token}`)")]
    Parse {
        line: usize,
        col: usize,
        token: String,
        msg: String,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

type PResult<T> = std::result::Result<T, CliError>;

macro_rules! lift {
    ($s:expr, $at:expr, $e:expr) => {{
        let r = $e;
        $s.lift($at, r)
    }};
}

// ---------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    /// `_*`
    Lower,
    /// `^*`
    Upper,
    /// `^-1`
    Inv,
    Arrow,
    EqEq,
    Sym(char),
    /// Raw text after `>` up to `;`.
    Path(String),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    text: String,
    /// Char offsets into the source.
    span: (usize, usize),
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '~' || c == '\''
}

fn lex(src: &str) -> PResult<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let bump = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                let c = chars[i];
                bump(&mut i, &mut line, &mut col, c);
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('_', Some('*')) => (Tok::Lower, 2),
            ('^', Some('*')) => (Tok::Upper, 2),
            ('^', Some('-')) if chars.get(i + 2) == Some(&'1') => (Tok::Inv, 3),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            _ if ident_char(c) => {
                let mut j = i;
                while j < chars.len() && ident_char(chars[j]) && !(chars[j] == '_' && chars.get(j + 1) == Some(&'*')) {
                    j += 1;
                }
                (Tok::Ident(chars[i..j].iter().collect()), j - i)
            }
            ('>', _) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j] != ';' && chars[j] != '\n' {
                    j += 1;
                }
                let raw: String = chars[i + 1..j].iter().collect();
                out.push(Token {
                    tok: Tok::Sym('>'),
                    line: l0,
                    col: c0,
                    text: ">".into(),
                    span: (i, i + 1),
                });
                out.push(Token {
                    tok: Tok::Path(raw.trim().to_string()),
                    line: l0,
                    col: c0 + 1,
                    text: raw.trim().to_string(),
                    span: (i + 1, j),
                });
                for _ in i..j {
                    bump(&mut i, &mut line, &mut col, ' ');
                }
                continue;
            }
            _ if "(){},;:=.*".contains(c) => (Tok::Sym(c), 1),
            _ => {
                return Err(CliError::Parse {
                    line,
                    col,
                    token: c.to_string(),
                    msg: "unexpected character".into(),
                })
            }
        };
        let text: String = chars[i..i + len].iter().collect();
        let span = (i, i + len);
        for _ in 0..len {
            let c = chars[i];
            bump(&mut i, &mut line, &mut col, c);
        }
        out.push(Token {
            tok,
            line: l0,
            col: c0,
            text,
            span,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
        text: "end of input".into(),
        span: (chars.len(), chars.len()),
    });
    Ok(out)
}

// ---------------------------------------------------------------------
// Sessions

#[derive(Clone, Debug)]
pub enum Query {
    Check { lhs: SgntTerm, rhs: SgntTerm },
    Roof { word: Sgf },
    Render { term: SgntTerm, path: String },
}

#[derive(Clone, Debug)]
pub struct Statement {
    pub line: usize,
    pub text: String,
    pub query: Query,
}

#[derive(Clone, Debug, Default)]
struct PendingModel {
    carriers: BTreeMap<String, Vec<String>>,
    graphs: BTreeMap<String, Vec<(String, String)>>,
    line: usize,
}

/// A parsed session: presentation, structure, bindings and queries.
#[derive(Debug)]
pub struct Session {
    pub p: Presentation,
    pub geo: GeoStructure,
    pub sgfs: BTreeMap<String, Sgf>,
    pub sgnts: BTreeMap<String, SgntTerm>,
    /// `let` bindings of map expressions.
    pub maps: BTreeMap<String, MapId>,
    pub queries: Vec<Statement>,
    frozen: bool,
    push: BTreeSet<MapId>,
    pull: BTreeSet<MapId>,
    pairs: Vec<(MapId, MapId)>,
    model: Option<PendingModel>,
}

impl Default for Session {
    fn default() -> Self {
        Session {
            p: Presentation::new(),
            geo: GeoStructure::trivial(),
            sgfs: BTreeMap::new(),
            sgnts: BTreeMap::new(),
            maps: BTreeMap::new(),
            queries: Vec::new(),
            frozen: false,
            push: BTreeSet::new(),
            pull: BTreeSet::new(),
            pairs: Vec::new(),
            model: None,
        }
    }
}

impl Session {
    pub fn parse(src: &str) -> PResult<Session> {
        let mut s = Session::default();
        s.extend(src)?;
        Ok(s)
    }

    /// Parses further statements into the session.
    pub fn extend(&mut self, src: &str) -> PResult<()> {
        let toks = lex(src)?;
        let mut ps = Parser { src: src.chars().collect(), toks, pos: 0, s: self };
        while ps.peek() != &Tok::Eof {
            ps.statement()?;
        }
        Ok(())
    }

    /// Parses a transformation expression against the frozen session.
    pub fn parse_sgnt(&mut self, src: &str) -> PResult<SgntTerm> {
        self.freeze(1)?;
        let toks = lex(src)?;
        let mut ps = Parser { src: src.chars().collect(), toks, pos: 0, s: self };
        let t = ps.sgnt_expr()?;
        ps.expect_eof()?;
        Ok(t)
    }

    /// Parses a functor word against the frozen session.
    pub fn parse_sgf(&mut self, src: &str) -> PResult<Sgf> {
        self.freeze(1)?;
        let toks = lex(src)?;
        let mut ps = Parser { src: src.chars().collect(), toks, pos: 0, s: self };
        let f = ps.sgf_word()?;
        ps.expect_eof()?;
        Ok(f)
    }

    fn freeze(&mut self, line: usize) -> PResult<()> {
        if self.frozen {
            return Ok(());
        }
        self.frozen = true;
        if let Some(m) = self.model.take() {
            let model = self.build_model(&m).map_err(|msg| CliError::Parse {
                line: m.line,
                col: 1,
                token: "model".into(),
                msg,
            })?;
            self.p.set_model(model).map_err(|e| CliError::Parse {
                line: m.line,
                col: 1,
                token: "model".into(),
                msg: e.to_string(),
            })?;
        }
        let acyclicity = if self.p.is_finite() {
            Acyclicity::AllPairs
        } else if self.pairs.is_empty() {
            Acyclicity::Trivial
        } else {
            Acyclicity::Declared(self.pairs.clone())
        };
        self.geo = GeoStructure::new(self.push.clone(), self.pull.clone(), acyclicity);
        let _ = line;
        Ok(())
    }

    fn build_model(&self, m: &PendingModel) -> std::result::Result<FiniteModel, String> {
        let mut carriers = Vec::new();
        for b in self.p.bases() {
            let c = m
                .carriers
                .get(&b.name)
                .ok_or_else(|| format!("model gives no carrier for space `{}`", b.name))?;
            carriers.push(c.clone());
        }
        let mut graphs = Vec::new();
        for g in self.p.gens() {
            let pairs = m
                .graphs
                .get(&g.name)
                .ok_or_else(|| format!("model gives no graph for map `{}`", g.name))?;
            let (src, dst) = (&carriers[g.src], &carriers[g.dst]);
            let mut gr = Vec::with_capacity(src.len());
            for x in src {
                let hits: Vec<&(String, String)> = pairs.iter().filter(|(a, _)| a == x).collect();
                let [(_, y)] = hits.as_slice() else {
                    return Err(format!("map `{}` must send `{}` to exactly one element", g.name, x));
                };
                let j = dst
                    .iter()
                    .position(|e| e == y)
                    .ok_or_else(|| format!("map `{}` sends `{}` to `{}`, which is not in its target", g.name, x, y))?;
                gr.push(j);
            }
            if let Some((a, _)) = pairs.iter().find(|(a, _)| !src.contains(a)) {
                return Err(format!("map `{}` is given on `{}`, which is not in its source", g.name, a));
            }
            graphs.push(gr);
        }
        for name in m.carriers.keys().chain(m.graphs.keys()) {
            if self.p.base_by_name(name).is_none() && self.p.gen_by_name(name).is_none() {
                return Err(format!("model names `{}`, which is not declared", name));
            }
        }
        Ok(FiniteModel { carriers, graphs })
    }

    /// Reinstates licences for every inverse cell from the session structure.
    fn relicense(&mut self, t: &SgntTerm) -> SgntTerm {
        let layers = t
            .layers
            .iter()
            .map(|l| match &l.cell {
                Cell::Inv(b, _) => {
                    let lic = self.geo.licence_for(&mut self.p, l);
                    Layer {
                        left: l.left.clone(),
                        cell: Cell::Inv(b.clone(), lic),
                        right: l.right.clone(),
                    }
                }
                _ => l.clone(),
            })
            .collect();
        SgntTerm {
            dom: t.dom.clone(),
            cod: t.cod.clone(),
            layers,
        }
    }

    fn map_by_name(&self, name: &str) -> Option<MapId> {
        if let Some(m) = self.maps.get(name) {
            return Some(*m);
        }
        if let Some(g) = self.p.gen_by_name(name) {
            return Some(self.p.gen_map(g));
        }
        (0..self.p.num_maps() as u32).map(MapId).find(|m| self.p.map_name(*m) == name)
    }

    fn space_by_name(&self, name: &str) -> Option<SpaceId> {
        if let Some(b) = self.p.base_by_name(name) {
            return Some(self.p.base_space(b));
        }
        (0..self.p.num_spaces() as u32).map(SpaceId).find(|s| self.p.space_name(*s) == name)
    }
}

// ---------------------------------------------------------------------
// Parser

struct Parser<'a> {
    src: Vec<char>,
    toks: Vec<Token>,
    pos: usize,
    s: &'a mut Session,
}

/// A piece of a horizontal composite.
enum Piece {
    Functor(Sgf),
    Term(SgntTerm),
}

const PENDING: &str = "pending";

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at<T>(&self, at: usize, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[at.min(self.toks.len() - 1)];
        Err(CliError::Parse {
            line: t.line,
            col: t.col,
            token: t.text.clone(),
            msg: msg.into(),
        })
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        self.err_at(self.pos, msg)
    }

    fn lift<T>(&self, at: usize, r: crate::spaces::Result<T>) -> PResult<T> {
        r.or_else(|e: SpaceError| self.err_at(at, e.to_string()))
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == &Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if self.peek() == &Tok::Eof {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("expected a name"),
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    /// Source text of tokens `start..pos`, whitespace collapsed.
    fn text_from(&self, start: usize) -> String {
        if self.pos <= start {
            return String::new();
        }
        let (a, b) = (self.toks[start].span.0, self.toks[self.pos - 1].span.1);
        let raw: String = self.src[a..b].iter().collect();
        raw.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    // ---- statements ---------------------------------------------------

    fn statement(&mut self) -> PResult<()> {
        let start = self.pos;
        let kw = self.ident()?;
        let decl = matches!(
            kw.as_str(),
            "space" | "map" | "iso" | "relation" | "pullback" | "pushgeoloc" | "pullgeoloc" | "mono" | "acyclic" | "model"
        );
        if decl && self.s.frozen {
            return self.err_at(start, "declarations must precede bindings and queries");
        }
        if !decl {
            self.s.freeze(self.toks[start].line)?;
        }
        match kw.as_str() {
            "space" => loop {
                let at = self.pos;
                let name = self.ident()?;
                lift!(self, at, self.s.p.add_base(&name))?;
                if !self.eat_sym(',') {
                    break;
                }
            },
            "map" | "iso" => {
                let mut names = vec![(self.pos, self.ident()?)];
                while self.eat_sym(',') {
                    names.push((self.pos, self.ident()?));
                }
                self.expect_sym(':')?;
                let a = self.base()?;
                if self.peek() != &Tok::Arrow {
                    return self.err("expected `->`");
                }
                self.bump();
                let b = self.base()?;
                for (at, n) in names {
                    lift!(self, at, self.s.p.add_gen(&n, a, b, kw == "iso"))?;
                }
            }
            "relation" => {
                let at = self.pos;
                let lhs = self.gen_word()?;
                self.expect_sym('=')?;
                let rhs = self.gen_word()?;
                lift!(self, at, self.s.p.add_relation(lhs, rhs))?;
            }
            "pullback" => {
                let apex = self.ident()?;
                self.expect_sym('(')?;
                let ft = self.ident()?;
                self.expect_sym(',')?;
                let gt = self.ident()?;
                self.expect_sym(')')?;
                self.keyword("of")?;
                self.expect_sym('(')?;
                let f = self.gen()?;
                self.expect_sym(',')?;
                let g = self.gen()?;
                self.expect_sym(')')?;
                lift!(self, start, self.s.p.declare_pullback(&apex, &ft, &gt, f, g))?;
            }
            "pushgeoloc" | "pullgeoloc" => {
                self.expect_sym('{')?;
                let mut ms = vec![];
                if !self.eat_sym('}') {
                    loop {
                        ms.push(self.map_chain()?);
                        if self.eat_sym('}') {
                            break;
                        }
                        self.expect_sym(',')?;
                    }
                }
                let set = if kw == "pushgeoloc" { &mut self.s.push } else { &mut self.s.pull };
                set.extend(ms);
            }
            "mono" => {
                self.expect_sym('{')?;
                if !self.eat_sym('}') {
                    loop {
                        let g = self.gen()?;
                        self.s.p.declare_mono(g);
                        if self.eat_sym('}') {
                            break;
                        }
                        self.expect_sym(',')?;
                    }
                }
            }
            "acyclic" => {
                self.keyword("pairs")?;
                self.expect_sym('{')?;
                if !self.eat_sym('}') {
                    loop {
                        self.expect_sym('(')?;
                        let at = self.pos;
                        let a = self.map_chain()?;
                        self.expect_sym(',')?;
                        let b = self.map_chain()?;
                        self.expect_sym(')')?;
                        if self.s.p.src(a) != self.s.p.src(b) {
                            return self.err_at(at, "an acyclic pair needs a common source");
                        }
                        self.s.pairs.push((a, b));
                        if self.eat_sym('}') {
                            break;
                        }
                        self.expect_sym(',')?;
                    }
                }
            }
            "model" => {
                if self.s.model.is_some() {
                    return self.err_at(start, "a session has at most one model");
                }
                self.model_block(self.toks[start].line)?;
                self.eat_sym(';');
                return Ok(());
            }
            "let" => {
                let name = self.ident()?;
                self.expect_sym('=')?;
                let m = self.map_chain()?;
                self.s.maps.insert(name, m);
            }
            "sgf" => {
                let name = self.ident()?;
                self.expect_sym('=')?;
                let f = self.sgf_word()?;
                self.s.sgfs.insert(name, f);
            }
            "sgnt" => {
                let name = self.ident()?;
                self.expect_sym('=')?;
                let t = self.sgnt_expr()?;
                self.s.sgnts.insert(name, t);
            }
            "check" => {
                let body = self.pos;
                let lhs = self.sgnt_expr()?;
                if self.peek() != &Tok::EqEq {
                    return self.err("expected `==`");
                }
                self.bump();
                let rhs = self.sgnt_expr()?;
                let text = self.text_from(body);
                self.s.queries.push(Statement {
                    line: self.toks[start].line,
                    text,
                    query: Query::Check { lhs, rhs },
                });
            }
            "roof" => {
                let body = self.pos;
                let word = self.sgf_word()?;
                let text = self.text_from(body);
                self.s.queries.push(Statement {
                    line: self.toks[start].line,
                    text,
                    query: Query::Roof { word },
                });
            }
            "render" => {
                let body = self.pos;
                let term = self.sgnt_expr()?;
                let text = self.text_from(body);
                self.expect_sym('>')?;
                let Tok::Path(path) = self.peek().clone() else {
                    return self.err("expected an output path");
                };
                if path.is_empty() {
                    return self.err("expected an output path");
                }
                self.bump();
                self.s.queries.push(Statement {
                    line: self.toks[start].line,
                    text,
                    query: Query::Render { term, path },
                });
            }
            other => return self.err_at(start, format!("unknown statement `{other}`")),
        }
        self.expect_sym(';')
    }

    fn model_block(&mut self, line: usize) -> PResult<()> {
        let _name = self.ident()?;
        self.expect_sym('{')?;
        let mut m = PendingModel {
            line,
            ..Default::default()
        };
        while !self.eat_sym('}') {
            let at = self.pos;
            let name = self.ident()?;
            self.expect_sym('=')?;
            self.expect_sym('{')?;
            let is_space = self.s.p.base_by_name(&name).is_some();
            let mut elems = vec![];
            let mut pairs = vec![];
            if !self.eat_sym('}') {
                loop {
                    let x = self.element()?;
                    if is_space {
                        elems.push(x);
                    } else {
                        if self.peek() != &Tok::Arrow {
                            return self.err("expected `->`");
                        }
                        self.bump();
                        pairs.push((x, self.element()?));
                    }
                    if self.eat_sym('}') {
                        break;
                    }
                    self.expect_sym(',')?;
                }
            }
            self.expect_sym(';')?;
            let dup = if is_space {
                if elems.iter().collect::<BTreeSet<_>>().len() != elems.len() {
                    return self.err_at(at, format!("carrier of `{name}` repeats an element"));
                }
                m.carriers.insert(name.clone(), elems).is_some()
            } else {
                if self.s.p.gen_by_name(&name).is_none() {
                    return self.err_at(at, format!("`{name}` is neither a declared space nor a declared map"));
                }
                m.graphs.insert(name.clone(), pairs).is_some()
            };
            if dup {
                return self.err_at(at, format!("`{name}` is given twice"));
            }
        }
        self.s.model = Some(m);
        Ok(())
    }

    fn element(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Sym('*') => {
                self.bump();
                Ok("*".into())
            }
            _ => self.err("expected an element"),
        }
    }

    fn base(&mut self) -> PResult<BaseId> {
        let at = self.pos;
        let n = self.ident()?;
        match self.s.p.base_by_name(&n) {
            Some(b) => Ok(b),
            None => self.err_at(at, format!("unknown space `{n}`")),
        }
    }

    fn gen(&mut self) -> PResult<GenId> {
        let at = self.pos;
        let n = self.ident()?;
        match self.s.p.gen_by_name(&n) {
            Some(g) => Ok(g),
            None => self.err_at(at, format!("unknown map `{n}`")),
        }
    }

    /// `a.b.c` or `id`, leftmost applied last.
    fn gen_word(&mut self) -> PResult<Word> {
        if matches!(self.peek(), Tok::Ident(s) if s == "id") {
            self.bump();
            return Ok(vec![]);
        }
        let mut w = vec![self.gen()?];
        while self.eat_sym('.') {
            w.push(self.gen()?);
        }
        Ok(w)
    }

    // ---- spaces and maps ----------------------------------------------

    /// A space named `head`, possibly `src(m)` or `dst(m)`.
    fn space_named(&mut self, at: usize, head: &str) -> PResult<SpaceId> {
        if self.peek() == &Tok::Sym('(') && (head == "src" || head == "dst") {
            self.bump();
            let m = self.map_chain()?;
            self.expect_sym(')')?;
            return Ok(if head == "src" { self.s.p.src(m) } else { self.s.p.dst(m) });
        }
        let full = if self.peek() == &Tok::Sym('(') {
            format!("{head}{}", self.balanced()?)
        } else {
            head.to_string()
        };
        match self.s.space_by_name(&full) {
            Some(s) => Ok(s),
            None => self.err_at(at, format!("unknown space `{full}`")),
        }
    }

    fn space(&mut self) -> PResult<SpaceId> {
        let at = self.pos;
        let head = self.ident()?;
        self.space_named(at, &head)
    }

    /// Raw text of a parenthesized group, for names of derived maps.
    fn balanced(&mut self) -> PResult<String> {
        let mut depth = 0usize;
        let mut s = String::new();
        loop {
            let t = self.bump();
            match t.tok {
                Tok::Sym('(') => depth += 1,
                Tok::Sym(')') => depth -= 1,
                Tok::Eof => return self.err("unbalanced parentheses"),
                _ => {}
            }
            s.push_str(&t.text);
            if depth == 0 {
                return Ok(s);
            }
        }
    }

    /// `a.b.c`, leftmost applied last.
    fn map_chain(&mut self) -> PResult<MapId> {
        let at = self.pos;
        let mut ms = vec![self.map_atom()?];
        while self.eat_sym('.') {
            ms.push(self.map_atom()?);
        }
        lift!(self, at, self.s.p.compose_all(&ms))
    }

    fn map_atom(&mut self) -> PResult<MapId> {
        let at = self.pos;
        if self.eat_sym('(') {
            let m = self.map_chain()?;
            self.expect_sym(')')?;
            return Ok(m);
        }
        let name = self.ident()?;
        if self.peek() == &Tok::Sym('(') {
            match name.as_str() {
                "pb1" | "pb2" => {
                    self.bump();
                    let f = self.map_chain()?;
                    self.expect_sym(',')?;
                    let g = self.map_chain()?;
                    self.expect_sym(')')?;
                    let sq = lift!(self, at, self.s.p.pullback(f, g))?;
                    return Ok(if name == "pb1" { sq.ft } else { sq.gt });
                }
                "pair" => {
                    self.bump();
                    let u = self.map_chain()?;
                    self.expect_sym(',')?;
                    let v = self.map_chain()?;
                    self.expect_sym(';')?;
                    let a = self.map_chain()?;
                    self.expect_sym(',')?;
                    let b = self.map_chain()?;
                    self.expect_sym(')')?;
                    return self.pair(at, u, v, a, b);
                }
                "diag" => {
                    self.bump();
                    let f = self.map_chain()?;
                    self.expect_sym(')')?;
                    return lift!(self, at, self.s.p.diagonal(f));
                }
                _ => {}
            }
            if let Some(rest) = name.strip_prefix("id_") {
                let s = self.space_named(at, rest)?;
                return Ok(self.s.p.id(s));
            }
            let full = format!("{name}{}", self.balanced()?);
            return match self.s.map_by_name(&full) {
                Some(m) => Ok(m),
                None => self.err_at(at, format!("unknown map `{full}`")),
            };
        }
        if let Some(m) = self.s.map_by_name(&name) {
            return Ok(m);
        }
        if let Some(rest) = name.strip_prefix("id_") {
            let s = self.space_named(at, rest)?;
            return Ok(self.s.p.id(s));
        }
        self.err_at(at, format!("unknown map `{name}`"))
    }

    /// The map into the pullback of `(u, v)` with legs `a` to `src u` and
    /// `b` to `src v`.
    fn pair(&mut self, at: usize, u: MapId, v: MapId, a: MapId, b: MapId) -> PResult<MapId> {
        let (_, lim) = lift!(self, at, self.s.p.pullback_full(u, v))?;
        let Some(lim) = lim else {
            return self.err_at(at, "maps into a declared pullback are not presented");
        };
        let ua = lift!(self, at, self.s.p.compose(u, a))?;
        let n = |m: MapId| crate::spaces::strip_parens(self.s.p.map_name(m)).to_string();
        let name = format!("pair({},{};{},{})", n(u), n(v), n(a), n(b));
        let t = self.s.p.src(a);
        lift!(self, at, self.s.p.factor(&lim, t, &[a, ua, b], name))
    }

    // ---- functors -----------------------------------------------------

    fn star(&mut self) -> Option<Var> {
        let v = match self.peek() {
            Tok::Lower => Var::Lower,
            Tok::Upper => Var::Upper,
            _ => return None,
        };
        self.bump();
        Some(v)
    }

    /// A basic term `m_*`/`m^*`, or `1_X`; `None` without consuming input
    /// when the next tokens are something else.
    fn try_functor_atom(&mut self) -> PResult<Option<Sgf>> {
        let save = self.pos;
        if let Tok::Ident(name) = self.peek().clone() {
            if let Some(rest) = name.strip_prefix("1_") {
                self.bump();
                let s = self.space_named(save, rest)?;
                return Ok(Some(Sgf::id(s)));
            }
            if let Some(f) = self.s.sgfs.get(&name).cloned() {
                if !matches!(self.peek_at(1), Tok::Lower | Tok::Upper) {
                    self.bump();
                    return Ok(Some(f));
                }
            }
        }
        match self.map_atom() {
            Ok(m) => match self.star() {
                Some(v) => {
                    let t = Term { map: m, var: v };
                    Ok(Some(lift!(self, save, Sgf::new(&self.s.p, vec![t]))?))
                }
                None => {
                    self.pos = save;
                    Ok(None)
                }
            },
            Err(_) => {
                self.pos = save;
                Ok(None)
            }
        }
    }

    fn chain_functors(&self, at: usize, a: &Sgf, b: &Sgf) -> PResult<Sgf> {
        if a.src != b.dst {
            return self.err_at(
                at,
                format!(
                    "`{}` acts on `{}` but `{}` lands in `{}`",
                    a.display(&self.s.p),
                    self.s.p.space_name(a.src),
                    b.display(&self.s.p),
                    self.s.p.space_name(b.dst)
                ),
            );
        }
        lift!(self, at, a.then_after(b))
    }

    fn sgf_word(&mut self) -> PResult<Sgf> {
        let at = self.pos;
        let Some(mut acc) = self.try_functor_atom()? else {
            return self.err("expected a functor word");
        };
        loop {
            let here = self.pos;
            match self.try_functor_atom()? {
                Some(f) => acc = self.chain_functors(here, &acc, &f)?,
                None => break,
            }
        }
        let _ = at;
        Ok(acc)
    }

    // ---- transformations ----------------------------------------------

    /// `a . b . c`, top first.
    fn sgnt_expr(&mut self) -> PResult<SgntTerm> {
        let at = self.pos;
        let mut parts = vec![self.horizontal()?];
        while self.eat_sym('.') {
            parts.push(self.horizontal()?);
        }
        for k in 1..parts.len() {
            if parts[k - 1].dom != parts[k].cod {
                return self.err_at(
                    at,
                    format!(
                        "`{}` starts at `{}` but the term below ends at `{}`",
                        parts[k - 1].display(&self.s.p),
                        parts[k - 1].dom.display(&self.s.p),
                        parts[k].cod.display(&self.s.p)
                    ),
                );
            }
        }
        let t = lift!(self, at, SgntTerm::vcompose_all(&parts))?;
        Ok(self.s.relicense(&t))
    }

    fn horizontal(&mut self) -> PResult<SgntTerm> {
        let at = self.pos;
        let mut acc: Option<Piece> = None;
        loop {
            let here = self.pos;
            let Some(piece) = self.piece()? else { break };
            acc = Some(match acc {
                None => piece,
                Some(a) => self.hcompose(here, a, piece)?,
            });
        }
        match acc {
            None => self.err_at(at, "expected a transformation"),
            Some(Piece::Term(t)) => Ok(t),
            Some(Piece::Functor(f)) => Ok(SgntTerm::id(f)),
        }
    }

    fn hcompose(&self, at: usize, a: Piece, b: Piece) -> PResult<Piece> {
        let (ad, bd) = match (&a, &b) {
            (Piece::Functor(f), _) => (f.clone(), None),
            (Piece::Term(t), _) => (t.dom.clone(), Some(())),
        };
        let _ = bd;
        let bcod = match &b {
            Piece::Functor(g) => g.clone(),
            Piece::Term(t) => t.dom.clone(),
        };
        self.chain_functors(at, &ad, &bcod)?;
        let wrap = |r| lift!(self, at, r);
        Ok(match (a, b) {
            (Piece::Functor(f), Piece::Functor(g)) => Piece::Functor(self.chain_functors(at, &f, &g)?),
            (Piece::Functor(f), Piece::Term(t)) => {
                let id = Sgf::id(t.dom.src);
                Piece::Term(wrap(SgntTerm::whisker(&f, &t, &id))?)
            }
            (Piece::Term(t), Piece::Functor(g)) => {
                let id = Sgf::id(t.dom.dst);
                Piece::Term(wrap(SgntTerm::whisker(&id, &t, &g))?)
            }
            (Piece::Term(s), Piece::Term(t)) => {
                let first = wrap(SgntTerm::whisker(&s.dom, &t, &Sgf::id(t.dom.src)))?;
                let second = wrap(SgntTerm::whisker(&Sgf::id(s.dom.dst), &s, &t.cod))?;
                Piece::Term(wrap(SgntTerm::vcompose(&second, &first))?)
            }
        })
    }

    fn piece(&mut self) -> PResult<Option<Piece>> {
        let at = self.pos;
        match self.peek().clone() {
            Tok::Ident(name) if self.peek_at(1) == &Tok::Sym('(') || matches!(self.peek_at(1), Tok::Lower | Tok::Upper) && self.peek_at(2) == &Tok::Sym('(') => {
                if let Some(cell) = self.try_cell(&name)? {
                    let t = lift!(self, at, SgntTerm::cell(&self.s.p, cell))?;
                    return Ok(Some(Piece::Term(t)));
                }
                if name == "id" {
                    self.bump();
                    self.bump();
                    let f = self.id_arg()?;
                    self.expect_sym(')')?;
                    return Ok(Some(Piece::Term(SgntTerm::id(f))));
                }
            }
            Tok::Ident(name) if name == "walk" => {
                self.bump();
                return Ok(Some(Piece::Term(self.walk()?)));
            }
            Tok::Ident(name) => {
                if let Some(t) = self.s.sgnts.get(&name).cloned() {
                    if !matches!(self.peek_at(1), Tok::Lower | Tok::Upper) {
                        self.bump();
                        return Ok(Some(Piece::Term(self.maybe_invert(t))));
                    }
                }
            }
            Tok::Sym('(') => {
                if let Some(f) = self.try_functor_atom()? {
                    return Ok(Some(Piece::Functor(f)));
                }
                self.bump();
                let t = self.sgnt_expr()?;
                self.expect_sym(')')?;
                return Ok(Some(Piece::Term(self.maybe_invert(t))));
            }
            _ => return Ok(None),
        }
        Ok(self.try_functor_atom()?.map(Piece::Functor))
    }

    /// `walk WORD { move POS; ... }`: a term built by local moves.
    fn walk(&mut self) -> PResult<SgntTerm> {
        let dom = self.sgf_word()?;
        let mut w = Walk::start(dom);
        self.expect_sym('{')?;
        while !self.eat_sym('}') {
            let at = self.pos;
            let mv = self.ident()?;
            let r = match mv.as_str() {
                "bc" | "comp" | "counit" | "triv" => {
                    let i = self.position()?;
                    let p = &mut self.s.p;
                    match mv.as_str() {
                        "bc" => w.bc(p, i),
                        "comp" => w.merge(p, i),
                        "counit" => w.counit(p, i),
                        _ => w.triv(p, i),
                    }
                }
                "unit" => {
                    self.expect_sym('(')?;
                    let f = self.map_chain()?;
                    self.expect_sym(')')?;
                    let i = self.position()?;
                    w.unit(&mut self.s.p, i, f)
                }
                "split" => {
                    self.expect_sym('(')?;
                    let outer = self.map_chain()?;
                    self.expect_sym(',')?;
                    let inner = self.map_chain()?;
                    self.expect_sym(')')?;
                    let i = self.position()?;
                    w.split(&mut self.s.p, i, outer, inner)
                }
                "untriv" => {
                    let Some(var) = self.star() else {
                        return self.err("expected `_*` or `^*`");
                    };
                    self.expect_sym('(')?;
                    let x = self.space()?;
                    self.expect_sym(')')?;
                    let i = self.position()?;
                    w.untriv(&mut self.s.p, i, var, x)
                }
                "apply" => {
                    let name = match self.peek() {
                        Tok::Ident(n) => n.clone(),
                        _ => return self.err("expected a cell"),
                    };
                    let Some(cell) = self.try_cell(&name)? else {
                        return self.err("expected a cell");
                    };
                    let i = self.position()?;
                    w.apply(&mut self.s.p, i, cell)
                }
                other => return self.err_at(at, format!("unknown move `{other}`")),
            };
            lift!(self, at, r)?;
            self.expect_sym(';')?;
        }
        let at = self.pos;
        lift!(self, at, w.finish(&self.s.p))
    }

    fn position(&mut self) -> PResult<usize> {
        let at = self.pos;
        let n = self.ident()?;
        n.parse().or_else(|_| self.err_at(at, "expected a position"))
    }

    fn maybe_invert(&mut self, t: SgntTerm) -> SgntTerm {
        if self.peek() != &Tok::Inv {
            return t;
        }
        self.bump();
        t.inverse_with(|_| Some(Licence::Uncertified(PENDING.into())))
            .expect("every cell receives a licence")
    }

    fn id_arg(&mut self) -> PResult<Sgf> {
        let save = self.pos;
        if let Tok::Ident(name) = self.peek().clone() {
            if !self.s.sgfs.contains_key(&name) && !matches!(self.peek_at(1), Tok::Lower | Tok::Upper) {
                self.bump();
                if let Ok(s) = self.space_named(save, &name) {
                    if self.peek() == &Tok::Sym(')') {
                        return Ok(Sgf::id(s));
                    }
                }
                self.pos = save;
            }
        }
        self.sgf_word()
    }

    /// A basic cell with an optional `^-1`.
    fn try_cell(&mut self, name: &str) -> PResult<Option<Cell>> {
        let at = self.pos;
        let var = match self.peek_at(1) {
            Tok::Lower => Some(Var::Lower),
            Tok::Upper => Some(Var::Upper),
            _ => None,
        };
        let basic = match (name, var) {
            ("unit" | "counit", None) => {
                self.bump();
                self.bump();
                let f = self.map_chain()?;
                self.expect_sym(')')?;
                if name == "unit" {
                    Basic::Unit(f)
                } else {
                    Basic::Counit(f)
                }
            }
            ("bc", None) => {
                self.bump();
                self.bump();
                let f = self.map_chain()?;
                self.expect_sym(',')?;
                let g = self.map_chain()?;
                self.expect_sym(')')?;
                Basic::Bc(lift!(self, at, self.s.p.pullback(f, g))?)
            }
            ("comp", Some(v)) => {
                self.bump();
                self.bump();
                self.bump();
                let f = self.map_chain()?;
                self.expect_sym(',')?;
                let g = self.map_chain()?;
                self.expect_sym(')')?;
                let gf = lift!(self, at, self.s.p.compose(g, f))?;
                match v {
                    Var::Lower => Basic::CompLower { f, g, gf },
                    Var::Upper => Basic::CompUpper { f, g, gf },
                }
            }
            ("triv", Some(v)) => {
                self.bump();
                self.bump();
                self.bump();
                let x = self.space()?;
                self.expect_sym(')')?;
                match v {
                    Var::Lower => Basic::TrivLower(x),
                    Var::Upper => Basic::TrivUpper(x),
                }
            }
            _ => return Ok(None),
        };
        if self.peek() == &Tok::Inv {
            self.bump();
            let lic = if basic.is_free_iso() {
                Licence::Free
            } else {
                Licence::Uncertified(PENDING.into())
            };
            return Ok(Some(Cell::Inv(basic, lic)));
        }
        Ok(Some(Cell::Fwd(basic)))
    }
}

// ---------------------------------------------------------------------
// Commands

#[derive(ClapParser, Debug)]
#[command(name = "geocoh", version, about = "Decide equalities between pushforward/pullback transformations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print rule-name traces.
    #[arg(long, global = true)]
    pub trace: bool,
    /// Oracle budget for counterexample search.
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every `check` statement.
    Check { file: PathBuf },
    /// Print the normal form of a named transformation.
    Normalize { file: PathBuf, name: String },
    /// Print the roof of a named functor.
    Roof { file: PathBuf, name: String },
    /// Write a string diagram of a named transformation.
    Render {
        file: PathBuf,
        name: String,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Label strands with their functors.
        #[arg(long)]
        labels: bool,
        /// Draw each strand as a single line.
        #[arg(long)]
        single: bool,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub line: usize,
    pub statement: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

fn load(path: &Path) -> PResult<Session> {
    let src = std::fs::read_to_string(path)?;
    Session::parse(&src).map_err(|e| match e {
        CliError::Parse { .. } => CliError::Other(format!("{}:{}", path.display(), e)),
        e => e,
    })
}

/// Exit code for a list of verdicts: unequal beats unknown.
pub fn exit_code(verdicts: &[Verdict]) -> i32 {
    if verdicts.iter().any(|v| matches!(v, Verdict::Unequal { .. })) {
        1
    } else if verdicts.iter().any(|v| matches!(v, Verdict::Unknown { .. })) {
        2
    } else {
        0
    }
}

/// Runs the queries of a session in source order.
pub fn run_session(s: &mut Session, opts: DecideOptions, base: &Path, out: &mut dyn Write, cli: (bool, bool)) -> PResult<Vec<Outcome>> {
    let (trace, as_json) = cli;
    let mut outcomes = Vec::new();
    for st in s.queries.clone() {
        match &st.query {
            Query::Check { lhs, rhs } => {
                let v = decide_equal(&mut s.p, lhs, rhs, &s.geo, opts)
                    .map_err(|e| CliError::Other(format!("line {}: {}", st.line, e)))?;
                if !as_json {
                    writeln!(out, "{}", describe(&s.p, &st, &v, trace))?;
                }
                outcomes.push(Outcome {
                    line: st.line,
                    statement: st.text.clone(),
                    verdict: v,
                });
            }
            Query::Roof { word } => {
                let text = roof_text(&mut s.p, word).map_err(|e| CliError::Other(format!("line {}: {}", st.line, e)))?;
                if !as_json {
                    writeln!(out, "line {}: roof {}\n{}", st.line, st.text, text)?;
                }
            }
            Query::Render { term, path } => {
                let svg = render_svg(&s.p, term, &RenderOptions::default());
                let target = base.join(path);
                std::fs::write(&target, svg)?;
                if !as_json {
                    writeln!(out, "line {}: wrote {}", st.line, target.display())?;
                }
            }
        }
    }
    if as_json {
        writeln!(out, "{}", serde_json::to_string_pretty(&outcomes).map_err(|e| CliError::Other(e.to_string()))?)?;
    }
    Ok(outcomes)
}

fn describe(p: &Presentation, st: &Statement, v: &Verdict, trace: bool) -> String {
    let mut s = format!("line {}: {}: {}", st.line, st.text, v.name());
    match v {
        Verdict::Equal { proof } => {
            let _ = write!(s, " by {}", proof.step);
            if let Some(c) = &proof.canonical {
                let _ = write!(s, "\n  canonical: {c}");
            }
            for h in &proof.hypotheses {
                let _ = write!(s, "\n  {}: {} ({})", h.name, h.status, h.detail);
            }
            for q in &proof.squares {
                let _ = write!(s, "\n  square {q}");
            }
            if trace {
                let _ = write!(s, "\n  lhs trace: {}", proof.trace_lhs.join(", "));
                let _ = write!(s, "\n  rhs trace: {}", proof.trace_rhs.join(", "));
            }
        }
        Verdict::Unequal { witness, diagnostics } => {
            let _ = write!(
                s,
                "\n  witness at {} (trial {}, dims {:?})\n  lhs = {:?}\n  rhs = {:?}",
                witness.point_label, witness.trial, witness.dims, witness.lhs, witness.rhs
            );
            for h in diagnostics {
                let _ = write!(s, "\n  failed hypothesis {}: {} ({})", h.name, h.status, h.detail);
            }
        }
        Verdict::Unknown { diagnostics } => {
            for h in diagnostics {
                let _ = write!(s, "\n  failed hypothesis {}: {} ({})", h.name, h.status, h.detail);
            }
        }
    }
    let _ = p;
    s
}

fn roof_text(p: &mut Presentation, f: &Sgf) -> crate::spaces::Result<String> {
    let r = roof(p, f)?;
    Ok(format!(
        "  apex {}\n  legs a = {}, b = {}\n  roof {}\n  map {}",
        p.space_name(r.apex),
        p.map_name(r.a),
        p.map_name(r.b),
        r.as_sgf.display(p),
        r.to_roof.display(p)
    ))
}

/// Runs a command, writing to `out`; returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            if cli.json {
                let _ = writeln!(out, "{}", json!({ "error": e.to_string() }));
            } else {
                eprintln!("error: {e}");
            }
            3
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> PResult<i32> {
    let opts = DecideOptions {
        trials: cli.trials,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Check { file } => {
            let mut s = load(file)?;
            let base = file.parent().unwrap_or(Path::new(".")).to_path_buf();
            let outcomes = run_session(&mut s, opts, &base, out, (cli.trace, cli.json))?;
            let vs: Vec<Verdict> = outcomes.into_iter().map(|o| o.verdict).collect();
            Ok(exit_code(&vs))
        }
        Command::Normalize { file, name } => {
            let mut s = load(file)?;
            let t = s
                .sgnts
                .get(name)
                .cloned()
                .ok_or_else(|| CliError::Other(format!("no transformation named `{name}`")))?;
            let n = normalize(&mut s.p, &t).map_err(|e| CliError::Other(e.to_string()))?;
            let shown = n.term.display(&s.p);
            if cli.json {
                writeln!(out, "{}", json!({ "name": name, "normal_form": shown, "trace": n.trace }))?;
            } else {
                writeln!(out, "{shown}")?;
                if cli.trace {
                    writeln!(out, "trace: {}", n.trace.join(", "))?;
                }
            }
            Ok(0)
        }
        Command::Roof { file, name } => {
            let mut s = load(file)?;
            let f = s
                .sgfs
                .get(name)
                .cloned()
                .ok_or_else(|| CliError::Other(format!("no functor named `{name}`")))?;
            let r = roof(&mut s.p, &f).map_err(|e| CliError::Other(e.to_string()))?;
            if cli.json {
                writeln!(
                    out,
                    "{}",
                    json!({
                        "name": name,
                        "apex": s.p.space_name(r.apex),
                        "a": s.p.map_name(r.a),
                        "b": s.p.map_name(r.b),
                        "roof": r.as_sgf.display(&s.p),
                        "map": r.to_roof.display(&s.p),
                    })
                )?;
            } else {
                writeln!(out, "{}", roof_text(&mut s.p, &f).map_err(|e| CliError::Other(e.to_string()))?)?;
            }
            Ok(0)
        }
        Command::Render {
            file,
            name,
            output,
            labels,
            single,
        } => {
            let s = load(file)?;
            let t = s
                .sgnts
                .get(name)
                .ok_or_else(|| CliError::Other(format!("no transformation named `{name}`")))?;
            let opts = RenderOptions {
                labels: *labels,
                doubled: !*single,
            };
            std::fs::write(output, render_svg(&s.p, t, &opts))?;
            Ok(0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALMER: &str = "
        space X, Y;
        map f: X -> Y;
        model M { X = {1, 2}; Y = {*}; f = {1 -> *, 2 -> *}; }
        sgf F = f^* f_* f^*;
        sgnt phi = (f^* unit(f)) . (counit(f) f^*);
        check phi == id(F);
    ";

    #[test]
    fn empty_source_is_an_empty_session() {
        let s = Session::parse("").unwrap();
        assert!(s.queries.is_empty() && s.sgfs.is_empty());
    }

    #[test]
    fn balmer_session_parses() {
        let s = Session::parse(BALMER).unwrap();
        assert!(s.p.is_finite());
        let phi = &s.sgnts["phi"];
        assert_eq!(phi.layers.len(), 2);
        assert_eq!(phi.display(&s.p), "(f^* unit(f)) . (counit(f) f^*)");
        assert_eq!(s.queries.len(), 1);
    }

    #[test]
    fn mismatched_word_names_both_spaces() {
        let src = "space X, Y, Z; map f: X -> Y; map g: Z -> Y; sgf F = f^* g^*;";
        let e = Session::parse(src).unwrap_err().to_string();
        assert!(e.contains("`X`") || e.contains("`Z`"), "{e}");
        assert!(e.contains("`Y`"), "{e}");
        assert!(e.starts_with("1:"), "{e}");
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = Session::parse("space X;\nmap f: X -> W;").unwrap_err();
        let CliError::Parse { line, col, token, .. } = e else { panic!() };
        assert_eq!((line, col, token.as_str()), (2, 13, "W"));
    }

    #[test]
    fn declarations_after_bindings_are_rejected() {
        let e = Session::parse("space X; sgf F = 1_X; space Y;").unwrap_err().to_string();
        assert!(e.contains("declarations must precede"), "{e}");
    }

    #[test]
    fn displays_reparse() {
        let mut s = Session::parse(
            "space X, Y, Z, W; map f: X -> Y; map g: Y -> Z; map h: W -> Z;
             sgnt a = (comp_*(f,g) f^*) . (g_* unit(f));
             sgnt b = (bc(g, h) f_*) . (h^* comp_*(f,g)^-1);
             sgnt c = triv_*(X)^-1 . triv^*(X);",
        )
        .unwrap();
        for name in ["a", "b", "c"] {
            let t = s.sgnts[name].clone();
            let shown = t.display(&s.p);
            let back = s.parse_sgnt(&shown).unwrap();
            assert_eq!(back, t, "{shown}");
        }
    }

    #[test]
    fn juxtaposed_terms_interchange() {
        let mut s = Session::parse("space X, Y; map f: X -> Y; sgnt u = unit(f); sgnt v = u u;").unwrap();
        let v = s.sgnts["v"].clone();
        assert_eq!(v.cod.len(), 4);
        assert_eq!(v.layers.len(), 2);
        let w = s.parse_sgnt("(u f_* f^*) . u").unwrap();
        assert_eq!(w.cod, v.cod);
    }

    #[test]
    fn uncertified_inverse_keeps_its_reason() {
        let s = Session::parse(
            "space X, Y, Z; map f: X -> Y; map g: Z -> Y; sgnt b = bc(f, g)^-1;",
        )
        .unwrap();
        let Cell::Inv(_, Licence::Uncertified(why)) = &s.sgnts["b"].layers[0].cell else { panic!() };
        assert!(why.contains("geolocalization"));
    }

    #[test]
    fn declared_geolocalization_licenses_bc_inverse() {
        let s = Session::parse(
            "space X, Y, Z; map f: X -> Y; map g: Z -> Y; pushgeoloc {f}; sgnt b = bc(f, g)^-1;",
        )
        .unwrap();
        assert!(matches!(s.sgnts["b"].layers[0].cell, Cell::Inv(_, Licence::Geoloc(_))));
    }

    #[test]
    fn model_must_cover_every_map() {
        let e = Session::parse("space X; map f: X -> X; model M { X = {1}; } sgf F = f_*;")
            .unwrap_err()
            .to_string();
        assert!(e.contains("no graph for map `f`"), "{e}");
    }

    #[test]
    fn derived_maps_parse() {
        let mut s = Session::parse(
            "space X, Y, Z; map f: X -> Y; map g: Z -> Y;
             sgf F = pb1(f, g)_* pb2(f,g)^*;
             sgf D = diag(f)^*;",
        )
        .unwrap();
        let sq = s.p.pullback(s.p.gen_map(0), s.p.gen_map(1)).unwrap();
        assert_eq!(s.sgfs["F"].terms, vec![Term::lower(sq.ft), Term::upper(sq.gt)]);
        let d = s.sgfs["D"].clone();
        assert_eq!(s.parse_sgf(&d.display(&s.p)).unwrap(), d);
    }

    #[test]
    fn balmer_check_exits_unequal() {
        let mut s = Session::parse(BALMER).unwrap();
        let mut out = Vec::new();
        let o = run_session(&mut s, DecideOptions::default(), Path::new("."), &mut out, (false, false)).unwrap();
        let vs: Vec<Verdict> = o.into_iter().map(|o| o.verdict).collect();
        assert_eq!(exit_code(&vs), 1);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("unequal"), "{text}");
        assert!(text.contains("unit(b) invertibility"), "{text}");
    }
}
