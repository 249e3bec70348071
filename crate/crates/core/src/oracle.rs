//! Evaluation in the discrete-family model.
//!
//! A shape over a finite set is a family of rational vector spaces, one
//! dimension per element. `f^*` reindexes and `f_*` takes the direct sum
//! over each fiber, in carrier order, so compositions and trivializations
//! evaluate to permutation and identity matrices on the nose.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sgf::{Sgf, Term, Var};
use crate::sgnt::{Basic, Cell, Layer, SgntTerm};
use crate::spaces::{
    apply_word, check_relations, is_bijection, FiniteModel, MapId, ModelView, Presentation, SpaceError, SpaceId,
};

pub type Q = BigRational;

/// Dense matrix over the rationals, row major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Q>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.data[r * self.cols + c] = v;
    }

    /// Places `I_n` with its corner at `(r, c)`.
    fn put_identity(&mut self, r: usize, c: usize, n: usize) {
        for i in 0..n {
            self.set(r + i, c + i, Q::one());
        }
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        assert_eq!(self.cols, o.rows, "matrix product shapes");
        let mut out = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j) + a * b;
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn block_diag(blocks: &[Mat]) -> Mat {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.set(r0 + i, c0 + j, b.get(i, j).clone());
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// Gauss-Jordan inverse; `None` if not square or singular.
    pub fn inverse(&self) -> Option<Mat> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|r| !a.get(*r, col).is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = a.get(col, col).clone();
            for j in 0..n {
                let v = a.get(col, j) / &d;
                a.set(col, j, v);
                let v = inv.get(col, j) / &d;
                inv.set(col, j, v);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j) - &factor * a.get(col, j);
                    a.set(r, j, v);
                    let v = inv.get(r, j) - &factor * inv.get(col, j);
                    inv.set(r, j, v);
                }
            }
        }
        Some(inv)
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat::identity(self.rows)
    }

    /// Rows of integers; panics on non-integral entries.
    pub fn to_int_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| {
                        let q = self.get(i, j);
                        assert!(q.is_integer());
                        i64::try_from(q.to_integer()).expect("small entry")
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect())
            .collect()
    }

    pub fn from_strings(rows: &[Vec<String>]) -> Option<Mat> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return None;
            }
            for (j, s) in row.iter().enumerate() {
                m.set(i, j, parse_q(s)?);
            }
        }
        Some(m)
    }
}

fn parse_q(s: &str) -> Option<Q> {
    match s.split_once('/') {
        Some((n, d)) => Some(Q::new(n.parse::<BigInt>().ok()?, d.parse::<BigInt>().ok()?)),
        None => Some(Q::from_integer(s.parse::<BigInt>().ok()?)),
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.to_strings().iter().map(|r| format!("[{}]", r.join(","))).collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// Dimension per carrier element.
pub type Shape = Vec<usize>;

/// One matrix per carrier element.
pub type FamMor = Vec<Mat>;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("inverse cell `{0}` is not invertible in this model")]
    Singular(String),
    #[error("shape has {got} entries, space has {want} points")]
    ShapeSize { got: usize, want: usize },
}

pub type EvalResult<T> = std::result::Result<T, EvalError>;

/// Evaluator bound to one model of a presentation.
pub struct Evaluator<'a> {
    pub p: &'a Presentation,
    pub view: ModelView,
    fibers: HashMap<MapId, std::rc::Rc<Vec<Vec<usize>>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(p: &'a Presentation, model: FiniteModel) -> Self {
        Evaluator {
            p,
            view: ModelView::new(model),
            fibers: HashMap::new(),
        }
    }

    pub fn canonical(p: &'a Presentation) -> Option<Self> {
        p.model().cloned().map(|m| Evaluator::new(p, m))
    }

    pub fn size(&mut self, s: SpaceId) -> EvalResult<usize> {
        Ok(self.view.carrier(self.p, s)?.len())
    }

    pub fn graph(&mut self, m: MapId) -> EvalResult<std::rc::Rc<Vec<usize>>> {
        Ok(self.view.graph(self.p, m)?)
    }

    /// Fibers of `m` over each target point, in source carrier order.
    pub fn fibers(&mut self, m: MapId) -> EvalResult<std::rc::Rc<Vec<Vec<usize>>>> {
        if let Some(f) = self.fibers.get(&m) {
            return Ok(f.clone());
        }
        let g = self.graph(m)?;
        let n = self.size(self.p.dst(m))?;
        let mut out = vec![Vec::new(); n];
        for (x, y) in g.iter().enumerate() {
            out[*y].push(x);
        }
        let rc = std::rc::Rc::new(out);
        self.fibers.insert(m, rc.clone());
        Ok(rc)
    }

    pub fn ones(&mut self, s: SpaceId) -> EvalResult<Shape> {
        Ok(vec![1; self.size(s)?])
    }

    pub fn apply_term(&mut self, t: Term, s: &Shape) -> EvalResult<Shape> {
        match t.var {
            Var::Upper => {
                let g = self.graph(t.map)?;
                Ok(g.iter().map(|y| s[*y]).collect())
            }
            Var::Lower => {
                let fib = self.fibers(t.map)?;
                Ok(fib.iter().map(|xs| xs.iter().map(|x| s[*x]).sum()).collect())
            }
        }
    }

    pub fn apply_term_mor(&mut self, t: Term, m: &FamMor) -> EvalResult<FamMor> {
        match t.var {
            Var::Upper => {
                let g = self.graph(t.map)?;
                Ok(g.iter().map(|y| m[*y].clone()).collect())
            }
            Var::Lower => {
                let fib = self.fibers(t.map)?;
                Ok(fib
                    .iter()
                    .map(|xs| Mat::block_diag(&xs.iter().map(|x| m[*x].clone()).collect::<Vec<_>>()))
                    .collect())
            }
        }
    }

    pub fn eval_terms(&mut self, terms: &[Term], s: &Shape) -> EvalResult<Shape> {
        let mut cur = s.clone();
        for t in terms.iter().rev() {
            cur = self.apply_term(*t, &cur)?;
        }
        Ok(cur)
    }

    pub fn eval_sgf(&mut self, f: &Sgf, s: &Shape) -> EvalResult<Shape> {
        let want = self.size(f.src)?;
        if s.len() != want {
            return Err(EvalError::ShapeSize { got: s.len(), want });
        }
        self.eval_terms(&f.terms, s)
    }

    /// Component of a forward basic cell at a shape over its input space.
    pub fn basic_component(&mut self, b: &Basic, t: &Shape) -> EvalResult<FamMor> {
        match b {
            Basic::Unit(f) => {
                let fib = self.fibers(*f)?;
                Ok(fib
                    .iter()
                    .enumerate()
                    .map(|(y, xs)| {
                        let d = t[y];
                        let mut m = Mat::zeros(d * xs.len(), d);
                        for k in 0..xs.len() {
                            m.put_identity(k * d, 0, d);
                        }
                        m
                    })
                    .collect())
            }
            Basic::Counit(f) => {
                let g = self.graph(*f)?;
                let fib = self.fibers(*f)?;
                Ok(g.iter()
                    .enumerate()
                    .map(|(x, y)| {
                        let xs = &fib[*y];
                        let total: usize = xs.iter().map(|x2| t[*x2]).sum();
                        let off: usize = xs.iter().take_while(|x2| **x2 != x).map(|x2| t[*x2]).sum();
                        let mut m = Mat::zeros(t[x], total);
                        m.put_identity(0, off, t[x]);
                        m
                    })
                    .collect())
            }
            Basic::CompLower { f, g, gf } => {
                let ff = self.fibers(*f)?;
                let gfib = self.fibers(*g)?;
                let gff = self.fibers(*gf)?;
                Ok(gff
                    .iter()
                    .enumerate()
                    .map(|(z, cod_xs)| {
                        let dom_xs: Vec<usize> = gfib[z].iter().flat_map(|y| ff[*y].iter().copied()).collect();
                        permutation(&dom_xs, cod_xs, t)
                    })
                    .collect())
            }
            Basic::CompUpper { gf, .. } => {
                let g = self.graph(*gf)?;
                Ok(g.iter().map(|y| Mat::identity(t[*y])).collect())
            }
            Basic::TrivLower(_) | Basic::TrivUpper(_) => Ok(t.iter().map(|d| Mat::identity(*d)).collect()),
            Basic::Bc(sq) => {
                // Block (w, x) is the identity exactly when x = gt(w).
                let ffib = self.fibers(sq.f)?;
                let gg = self.graph(sq.g)?;
                let ftfib = self.fibers(sq.ft)?;
                let gtg = self.graph(sq.gt)?;
                Ok(gg
                    .iter()
                    .enumerate()
                    .map(|(z, y)| {
                        let xs = &ffib[*y];
                        let ws = &ftfib[z];
                        let rows: usize = ws.iter().map(|w| t[gtg[*w]]).sum();
                        let cols: usize = xs.iter().map(|x| t[*x]).sum();
                        let mut m = Mat::zeros(rows, cols);
                        let mut r = 0;
                        for w in ws {
                            let x = gtg[*w];
                            let c: usize = xs.iter().take_while(|x2| **x2 != x).map(|x2| t[*x2]).sum();
                            m.put_identity(r, c, t[x]);
                            r += t[x];
                        }
                        m
                    })
                    .collect())
            }
        }
    }

    /// Matrix of one layer at the shape `s` over the term's source.
    pub fn layer_component(&mut self, l: &Layer, s: &Shape) -> EvalResult<FamMor> {
        let inner = self.eval_terms(&l.right, s)?;
        let mut m = self.basic_component(l.cell.basic(), &inner)?;
        for t in l.left.iter().rev() {
            m = self.apply_term_mor(*t, &m)?;
        }
        if let Cell::Inv(..) = l.cell {
            m = m
                .iter()
                .map(|x| x.inverse().ok_or_else(|| EvalError::Singular(l.cell.display(self.p))))
                .collect::<EvalResult<_>>()?;
        }
        Ok(m)
    }

    /// Component of a term at `s`, one matrix per point of its target.
    pub fn eval_sgnt(&mut self, phi: &SgntTerm, s: &Shape) -> EvalResult<FamMor> {
        let start = self.eval_sgf(&phi.dom, s)?;
        let mut acc: FamMor = start.iter().map(|d| Mat::identity(*d)).collect();
        for l in &phi.layers {
            let m = self.layer_component(l, s)?;
            acc = m.iter().zip(&acc).map(|(a, b)| a.mul(b)).collect();
        }
        Ok(acc)
    }

    pub fn label(&mut self, s: SpaceId, i: usize) -> String {
        self.view.label(self.p, s, i)
    }
}

/// Permutation taking blocks listed in `dom` order to `cod` order.
fn permutation(dom: &[usize], cod: &[usize], t: &Shape) -> Mat {
    let n: usize = dom.iter().map(|x| t[*x]).sum();
    let mut m = Mat::zeros(n, n);
    let offset = |list: &[usize], x: usize| -> usize { list.iter().take_while(|x2| **x2 != x).map(|x2| t[*x2]).sum() };
    for x in dom {
        m.put_identity(offset(cod, *x), offset(dom, *x), t[*x]);
    }
    m
}

/// A serializable disagreement between two terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub carriers: Vec<Vec<String>>,
    pub graphs: Vec<Vec<usize>>,
    pub dims: Vec<usize>,
    pub point: usize,
    pub point_label: String,
    pub lhs: Vec<Vec<String>>,
    pub rhs: Vec<Vec<String>>,
}

impl Witness {
    pub fn model(&self) -> FiniteModel {
        FiniteModel {
            carriers: self.carriers.clone(),
            graphs: self.graphs.clone(),
        }
    }

    pub fn lhs_mat(&self) -> Option<Mat> {
        Mat::from_strings(&self.lhs)
    }

    pub fn rhs_mat(&self) -> Option<Mat> {
        Mat::from_strings(&self.rhs)
    }
}

/// Compares two parallel terms at one model and shape; returns the first
/// differing point.
pub fn compare_at(
    ev: &mut Evaluator,
    phi: &SgntTerm,
    psi: &SgntTerm,
    dims: &Shape,
) -> EvalResult<Option<(usize, Mat, Mat)>> {
    let a = ev.eval_sgnt(phi, dims)?;
    let b = ev.eval_sgnt(psi, dims)?;
    for (i, (x, y)) in a.into_iter().zip(b).enumerate() {
        if x != y {
            return Ok(Some((i, x, y)));
        }
    }
    Ok(None)
}

/// Searches for a model and shape where the two terms differ. Trial 0 is
/// the session's own model with unit dimensions.
pub fn find_counterexample(
    p: &Presentation,
    phi: &SgntTerm,
    psi: &SgntTerm,
    trials: usize,
    seed: u64,
) -> Option<Witness> {
    if phi == psi {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let model = if trial == 0 {
            p.model().cloned().or_else(|| random_model(p, &mut rng))
        } else {
            random_model(p, &mut rng).or_else(|| p.model().cloned())
        };
        let Some(model) = model else { return None };
        let mut ev = Evaluator::new(p, model.clone());
        let Ok(n) = ev.size(phi.src()) else { continue };
        let dims: Shape = if trial == 0 {
            vec![1; n]
        } else {
            (0..n).map(|_| rng.gen_range(1..=3)).collect()
        };
        if let Ok(Some((point, a, b))) = compare_at(&mut ev, phi, psi, &dims) {
            let point_label = ev.label(phi.dst(), point);
            return Some(Witness {
                trial,
                carriers: model.carriers,
                graphs: model.graphs,
                dims,
                point,
                point_label,
                lhs: a.to_strings(),
                rhs: b.to_strings(),
            });
        }
    }
    None
}

/// Re-evaluates both terms in the witness model; true when the recorded
/// disagreement is reproduced exactly.
pub fn replay(p: &Presentation, phi: &SgntTerm, psi: &SgntTerm, w: &Witness) -> bool {
    let model = w.model();
    if validate_model(p, &model).is_err() {
        return false;
    }
    let mut ev = Evaluator::new(p, model);
    let (Ok(a), Ok(b)) = (ev.eval_sgnt(phi, &w.dims), ev.eval_sgnt(psi, &w.dims)) else {
        return false;
    };
    let (Some(la), Some(lb)) = (w.lhs_mat(), w.rhs_mat()) else {
        return false;
    };
    a.get(w.point) == Some(&la) && b.get(w.point) == Some(&lb) && la != lb
}

/// Whether two terms agree on `trials` models and shapes; unit-dimension
/// shapes on the session model come first.
pub fn agree(p: &Presentation, phi: &SgntTerm, psi: &SgntTerm, trials: usize, seed: u64) -> bool {
    find_counterexample(p, phi, psi, trials, seed).is_none()
}

/// Whether two terms agree on the session's own model at `trials` random
/// shapes. Verdicts whose hypotheses were checked in that model are only
/// claims about it.
pub fn agree_in_model(p: &Presentation, phi: &SgntTerm, psi: &SgntTerm, trials: usize, seed: u64) -> bool {
    let Some(model) = p.model().cloned() else {
        return agree(p, phi, psi, trials, seed);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = Evaluator::new(p, model);
    let Ok(n) = ev.size(phi.src()) else { return false };
    (0..trials).all(|t| {
        let dims: Shape = (0..n).map(|_| if t == 0 { 1 } else { rng.gen_range(0..=3) }).collect();
        matches!(compare_at(&mut ev, phi, psi, &dims), Ok(None))
    })
}

pub fn validate_model(p: &Presentation, m: &FiniteModel) -> Result<(), SpaceError> {
    p.check_model(m)
}

/// A random model of the presentation: random carriers of size 1 to 3,
/// declared apexes built as fiber products, random functions
/// rejection-sampled against the relations.
pub fn random_model(p: &Presentation, rng: &mut impl Rng) -> Option<FiniteModel> {
    random_model_sized(p, rng, 3)
}

pub fn random_model_sized(p: &Presentation, rng: &mut impl Rng, max: usize) -> Option<FiniteModel> {
    let nb = p.bases().len();
    let apex_of: HashMap<usize, usize> = p.declared_pullbacks().iter().enumerate().map(|(i, d)| (d.apex, i)).collect();
    let proj: HashMap<usize, (usize, bool)> = p
        .declared_pullbacks()
        .iter()
        .enumerate()
        .flat_map(|(i, d)| [(d.ft, (i, true)), (d.gt, (i, false))])
        .collect();
    // Bases joined by iso generators share a size.
    let mut class: Vec<usize> = (0..nb).collect();
    fn find(c: &mut Vec<usize>, x: usize) -> usize {
        if c[x] != x {
            let r = find(c, c[x]);
            c[x] = r;
        }
        c[x]
    }
    for g in p.gens() {
        if g.iso {
            let (a, b) = (find(&mut class, g.src), find(&mut class, g.dst));
            class[a] = b;
        }
    }
    'attempt: for _ in 0..200 {
        let mut root_size = HashMap::new();
        let mut carriers: Vec<Vec<String>> = vec![vec![]; nb];
        let mut graphs: Vec<Vec<usize>> = vec![vec![]; p.gens().len()];
        let mut done_base = vec![false; nb];
        let mut done_gen = vec![false; p.gens().len()];
        for b in 0..nb {
            if apex_of.contains_key(&b) {
                continue;
            }
            let r = find(&mut class, b);
            let n = *root_size.entry(r).or_insert_with(|| rng.gen_range(1..=max));
            carriers[b] = (1..=n).map(|i| i.to_string()).collect();
            done_base[b] = true;
        }
        // Generators, then declared apexes whose legs are known.
        let mut progress = true;
        while progress {
            progress = false;
            for (gi, g) in p.gens().iter().enumerate() {
                if done_gen[gi] || proj.contains_key(&gi) || !done_base[g.src] || !done_base[g.dst] {
                    continue;
                }
                let n = carriers[g.src].len();
                let m = carriers[g.dst].len();
                graphs[gi] = if g.iso {
                    if n != m {
                        continue 'attempt;
                    }
                    let mut perm: Vec<usize> = (0..n).collect();
                    for i in (1..n).rev() {
                        perm.swap(i, rng.gen_range(0..=i));
                    }
                    perm
                } else {
                    (0..n).map(|_| rng.gen_range(0..m)).collect()
                };
                done_gen[gi] = true;
                progress = true;
            }
            for (i, d) in p.declared_pullbacks().iter().enumerate() {
                if done_base[d.apex] || !done_gen[d.f] || !done_gen[d.g] {
                    continue;
                }
                let _ = i;
                let mut pairs = Vec::new();
                for (x, fx) in graphs[d.f].iter().enumerate() {
                    for (z, gz) in graphs[d.g].iter().enumerate() {
                        if fx == gz {
                            pairs.push((x, z));
                        }
                    }
                }
                if pairs.is_empty() {
                    continue 'attempt;
                }
                carriers[d.apex] = pairs
                    .iter()
                    .map(|(x, z)| format!("{}{}", carriers[p.gens()[d.f].src][*x], carriers[p.gens()[d.g].src][*z]))
                    .collect();
                graphs[d.gt] = pairs.iter().map(|(x, _)| *x).collect();
                graphs[d.ft] = pairs.iter().map(|(_, z)| *z).collect();
                done_base[d.apex] = true;
                done_gen[d.gt] = true;
                done_gen[d.ft] = true;
                progress = true;
            }
        }
        if done_gen.iter().any(|d| !d) {
            return None;
        }
        let model = FiniteModel { carriers, graphs };
        if p.gens().iter().enumerate().any(|(gi, g)| g.iso && !is_bijection(&model.graphs[gi], model.carriers[g.dst].len())) {
            continue;
        }
        if check_relations(p, &model).is_ok() && validate_model(p, &model).is_ok() {
            return Some(model);
        }
    }
    None
}

/// Evaluates a word on a single element; used by tests.
pub fn word_image(m: &FiniteModel, w: &[usize], x: usize) -> usize {
    apply_word(m, w, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgnt::{make_bc, Basic};
    use crate::spaces::FiniteModel;

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
    fn inverse_roundtrip() {
        let mut m = Mat::zeros(2, 2);
        m.set(0, 0, Q::from_integer(2.into()));
        m.set(0, 1, Q::from_integer(1.into()));
        m.set(1, 0, Q::from_integer(1.into()));
        m.set(1, 1, Q::from_integer(1.into()));
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(Mat::zeros(2, 2).inverse().is_none());
    }

    #[test]
    fn pushforward_dimensions() {
        let (p, f) = balmer();
        let mut ev = Evaluator::canonical(&p).unwrap();
        let s = ev.ones(p.dst(f)).unwrap();
        let f_up = Sgf::new(&p, vec![Term::lower(f), Term::upper(f)]).unwrap();
        assert_eq!(ev.eval_sgf(&f_up, &s).unwrap(), vec![2]);
        let s = ev.ones(p.dst(f)).unwrap();
        let fff = Sgf::new(&p, vec![Term::upper(f), Term::lower(f), Term::upper(f)]).unwrap();
        assert_eq!(ev.eval_sgf(&fff, &s).unwrap(), vec![2, 2]);
    }

    #[test]
    fn unit_is_the_diagonal() {
        let (p, f) = balmer();
        let mut ev = Evaluator::canonical(&p).unwrap();
        let u = SgntTerm::basic(&p, Basic::Unit(f)).unwrap();
        let m = ev.eval_sgnt(&u, &vec![1]).unwrap();
        assert_eq!(m[0].to_int_rows(), vec![vec![1], vec![1]]);
    }

    #[test]
    fn direct_bc_matches_expansion() {
        let (mut p, f) = balmer();
        let sq = p.pullback(f, f).unwrap();
        let atom = SgntTerm::basic(&p, Basic::Bc(sq.clone())).unwrap();
        let exp = make_bc(&mut p, &sq).unwrap();
        let mut ev = Evaluator::canonical(&p).unwrap();
        for dims in [vec![1, 1], vec![2, 1], vec![1, 3]] {
            let a = ev.eval_sgnt(&atom, &dims).unwrap();
            let b = ev.eval_sgnt(&exp, &dims).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|m| m.inverse().is_some()));
        }
    }

    #[test]
    fn random_models_respect_relations() {
        let mut p = Presentation::new();
        let a = p.add_base("A").unwrap();
        let b = p.add_base("B").unwrap();
        let c = p.add_base("C").unwrap();
        let f = p.add_gen("f", a, b, false).unwrap();
        let g = p.add_gen("g", b, c, false).unwrap();
        let h = p.add_gen("h", a, c, false).unwrap();
        p.add_relation(vec![g, f], vec![h]).unwrap();
        p.declare_pullback("W", "ft", "gt", g, h).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_model(&p, &mut rng).unwrap();
            validate_model(&p, &m).unwrap();
        }
    }
}
