//! String diagrams as SVG.
//!
//! Layers are stacked bottom to top, one band each. Strands read left to
//! right in the order functors act, so a word's last term is the leftmost
//! strand. Output is a pure function of the term and options.

use std::fmt::Write;

use crate::sgf::{Term, Var};
use crate::sgnt::{Basic, Cell, SgntTerm};
use crate::spaces::Presentation;

const DX: f64 = 48.0;
const BAND: f64 = 72.0;
const MARGIN: f64 = 36.0;
const LABEL_W: f64 = 150.0;

#[derive(Clone, Debug)]
pub struct RenderOptions {
    pub labels: bool,
    pub doubled: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            labels: false,
            doubled: true,
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Canvas<'a> {
    out: String,
    cx: f64,
    height: f64,
    opts: &'a RenderOptions,
}

impl Canvas<'_> {
    /// x of the strand of term `i` in a word of length `n`.
    fn x(&self, n: usize, i: usize) -> f64 {
        let j = (n - 1 - i) as f64;
        self.cx + (j - (n as f64 - 1.0) / 2.0) * DX
    }

    /// y of the boundary below band `k`.
    fn y(&self, k: usize) -> f64 {
        self.height - MARGIN - k as f64 * BAND
    }

    fn strand(&mut self, d: &str, class: &str) {
        if self.opts.doubled {
            for off in [-1.5, 1.5] {
                let _ = writeln!(
                    self.out,
                    r#"<path class="{class}" d="{d}" transform="translate({off:.1} 0)" fill="none" stroke="black" stroke-width="1"/>"#
                );
            }
        } else {
            let _ = writeln!(self.out, r#"<path class="{class}" d="{d}" fill="none" stroke="black" stroke-width="1.5"/>"#);
        }
    }

    fn arrow(&mut self, x: f64, y: f64, t: &Term, p: &Presentation) {
        let (tip, base) = match t.var {
            Var::Lower => (y - 5.0, y + 3.0),
            Var::Upper => (y + 5.0, y - 3.0),
        };
        let _ = writeln!(
            self.out,
            r#"<polygon class="arrow" points="{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}" fill="black"/>"#,
            x,
            tip,
            x - 4.0,
            base,
            x + 4.0,
            base
        );
        if self.opts.labels {
            let _ = writeln!(
                self.out,
                r#"<text class="edge-label" x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
                x + 6.0,
                y - 4.0,
                esc(&t.display(p))
            );
        }
    }
}

fn curve(x0: f64, y0: f64, x1: f64, y1: f64) -> String {
    let m = (y0 + y1) / 2.0;
    format!("M {x0:.1} {y0:.1} C {x0:.1} {m:.1}, {x1:.1} {m:.1}, {x1:.1} {y1:.1}")
}

fn kind_class(c: &Cell) -> &'static str {
    match c.basic() {
        Basic::Unit(_) => "unit",
        Basic::Counit(_) => "counit",
        Basic::CompLower { .. } | Basic::CompUpper { .. } => "comp",
        Basic::TrivLower(_) | Basic::TrivUpper(_) => "triv",
        Basic::Bc(_) => "bc",
    }
}

pub fn render_svg(p: &Presentation, phi: &SgntTerm, opts: &RenderOptions) -> String {
    let words = phi.words(p);
    let bands = phi.layers.len().max(1);
    let widest = words.iter().map(|w| w.terms.len()).max().unwrap_or(0).max(1);
    let width = 2.0 * MARGIN + (widest as f64 - 1.0) * DX + LABEL_W;
    let height = 2.0 * MARGIN + bands as f64 * BAND;
    let mut c = Canvas {
        out: String::new(),
        cx: MARGIN + (widest as f64 - 1.0) * DX / 2.0,
        height,
        opts,
    };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(c.out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if phi.layers.is_empty() {
        let w = &phi.dom.terms;
        let n = w.len();
        for i in 0..n {
            let x = c.x(n, i);
            let d = format!("M {x:.1} {:.1} L {x:.1} {:.1}", c.y(0), c.y(1));
            c.strand(&d, "strand");
        }
    }

    for (k, l) in phi.layers.iter().enumerate() {
        let (dom, cod) = (&words[k].terms, &words[k + 1].terms);
        let (nd, nc) = (dom.len(), cod.len());
        let (bot, top) = (c.y(k), c.y(k + 1));
        let mid = (bot + top) / 2.0;
        let left = l.left.len();
        let (cd, cc) = (l.cell.dom_terms(p).len(), l.cell.cod_terms(p).len());
        for i in 0..left {
            let d = curve(c.x(nd, i), bot, c.x(nc, i), top);
            c.strand(&d, "strand");
        }
        for r in 0..l.right.len() {
            let d = curve(c.x(nd, left + cd + r), bot, c.x(nc, left + cc + r), top);
            c.strand(&d, "strand");
        }
        let ins: Vec<f64> = (0..cd).map(|i| c.x(nd, left + i)).collect();
        let outs: Vec<f64> = (0..cc).map(|i| c.x(nc, left + i)).collect();
        let all: Vec<f64> = ins.iter().chain(outs.iter()).copied().collect();
        let nx = if all.is_empty() {
            c.cx
        } else {
            all.iter().sum::<f64>() / all.len() as f64
        };
        let class = format!("cell {}{}", kind_class(&l.cell), if l.cell.is_inverse() { " inv" } else { "" });
        match (&l.cell, ins.as_slice(), outs.as_slice()) {
            (Cell::Fwd(Basic::Unit(_)), [], [a, b]) => {
                let d = format!(
                    "M {a:.1} {top:.1} C {a:.1} {:.1}, {b:.1} {:.1}, {b:.1} {top:.1}",
                    mid + BAND * 0.3,
                    mid + BAND * 0.3
                );
                c.strand(&d, &class);
            }
            (Cell::Fwd(Basic::Counit(_)), [a, b], []) => {
                let d = format!(
                    "M {a:.1} {bot:.1} C {a:.1} {:.1}, {b:.1} {:.1}, {b:.1} {bot:.1}",
                    mid - BAND * 0.3,
                    mid - BAND * 0.3
                );
                c.strand(&d, &class);
            }
            _ => {
                for x in &ins {
                    let d = curve(*x, bot, nx, mid);
                    c.strand(&d, &class);
                }
                for x in &outs {
                    let d = curve(nx, mid, *x, top);
                    c.strand(&d, &class);
                }
                let fill = if l.cell.is_inverse() { "white" } else { "black" };
                match l.cell.basic() {
                    Basic::Bc(_) => {
                        let _ = writeln!(
                            c.out,
                            r#"<rect class="{class}" x="{:.1}" y="{:.1}" width="10" height="10" fill="{fill}" stroke="black"/>"#,
                            nx - 5.0,
                            mid - 5.0
                        );
                    }
                    Basic::TrivLower(_) | Basic::TrivUpper(_) => {
                        let _ = writeln!(
                            c.out,
                            r#"<circle class="{class}" cx="{nx:.1}" cy="{mid:.1}" r="5" fill="white" stroke="black"/>"#
                        );
                    }
                    _ => {
                        let _ = writeln!(
                            c.out,
                            r#"<circle class="{class}" cx="{nx:.1}" cy="{mid:.1}" r="4" fill="{fill}" stroke="black"/>"#
                        );
                    }
                }
            }
        }
        let lx = c.x(nd.max(nc).max(1), 0).max(c.cx) + DX / 2.0;
        let _ = writeln!(
            c.out,
            r#"<text class="cell-label" x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx.max(nx + 10.0),
            mid + 4.0,
            esc(&l.cell.display(p))
        );
    }

    for (k, w) in words.iter().enumerate() {
        let n = w.terms.len();
        let y = c.y(k);
        for (i, t) in w.terms.iter().enumerate() {
            let x = c.x(n, i);
            c.arrow(x, y, t, p);
        }
    }
    if phi.layers.is_empty() {
        let n = phi.dom.terms.len();
        let y = c.y(1);
        for (i, t) in phi.dom.terms.iter().enumerate() {
            let x = c.x(n, i);
            c.arrow(x, y, t, p);
        }
    }
    c.out.push_str("</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgf::Sgf;
    use crate::spaces::Presentation;

    fn fixture() -> (Presentation, crate::spaces::MapId) {
        let mut p = Presentation::new();
        let x = p.add_base("X").unwrap();
        let y = p.add_base("Y").unwrap();
        let f = p.add_map("f", x, y, false).unwrap();
        (p, f)
    }

    #[test]
    fn identity_is_two_parallel_lines() {
        let (p, f) = fixture();
        let id = SgntTerm::id(Sgf::new(&p, vec![Term::upper(f)]).unwrap());
        let s = render_svg(&p, &id, &RenderOptions::default());
        assert_eq!(s.matches("<path").count(), 2);
        assert!(!s.contains("class=\"cell"));
    }

    #[test]
    fn unit_is_a_cup() {
        let (p, f) = fixture();
        let u = SgntTerm::basic(&p, Basic::Unit(f)).unwrap();
        let s = render_svg(&p, &u, &RenderOptions { labels: true, doubled: false });
        assert_eq!(s.matches("class=\"cell unit\"").count(), 1);
        assert!(s.contains(">unit(f)</text>"));
        assert!(s.contains(">f_*</text>") && s.contains(">f^*</text>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let (p, f) = fixture();
        let u = SgntTerm::basic(&p, Basic::Counit(f)).unwrap();
        let a = render_svg(&p, &u, &RenderOptions::default());
        let b = render_svg(&p, &u, &RenderOptions::default());
        assert_eq!(a, b);
    }
}
