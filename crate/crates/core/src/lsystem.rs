//! Bracketed L-system grammar, turtle interpretation and rasterisation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Point};
use crate::image::{self, GrayImage, INK};

/// Rules shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("../rules/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    /// Inner branch segment with its iteration digit.
    Forward(u32),
    /// Leaf segment; the rewrite site.
    Apex(u32),
    TurnLeft,
    TurnRight,
    Push,
    Pop,
}

/// A bracketed symbol string such as `F0[+A0]F0[-A0]A0`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LSequence(pub Vec<Symbol>);

impl LSequence {
    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of drawn segments (`F` and `A`).
    pub fn segments(&self) -> usize {
        self.0.iter().filter(|s| matches!(s, Symbol::Forward(_) | Symbol::Apex(_))).count()
    }

    pub fn max_digit(&self) -> u32 {
        self.0
            .iter()
            .filter_map(|s| match s {
                Symbol::Forward(d) | Symbol::Apex(d) => Some(*d),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_balanced(&self) -> bool {
        let mut depth = 0i64;
        for s in &self.0 {
            match s {
                Symbol::Push => depth += 1,
                Symbol::Pop => {
                    depth -= 1;
                    if depth < 0 {
                        return false;
                    }
                }
                _ => {}
            }
        }
        depth == 0
    }
}

impl fmt::Display for LSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            match s {
                Symbol::Forward(d) => write!(f, "F{d}")?,
                Symbol::Apex(d) => write!(f, "A{d}")?,
                Symbol::TurnLeft => f.write_str("+")?,
                Symbol::TurnRight => f.write_str("-")?,
                Symbol::Push => f.write_str("[")?,
                Symbol::Pop => f.write_str("]")?,
            }
        }
        Ok(())
    }
}

/// Parses a symbol string. `digits` says whether `F`/`A` carry iteration digits.
fn parse_symbols(text: &str, digits: bool) -> Result<Vec<Symbol>> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        i += 1;
        let sym = match c {
            'F' | 'A' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let num: String = chars[start..i].iter().collect();
                let d = match (digits, num.is_empty()) {
                    (true, true) => return Err(Error::MalformedRule(format!("'{c}' without iteration digit in {text:?}"))),
                    (false, false) => return Err(Error::MalformedRule(format!("unexpected digits after '{c}' in {text:?}"))),
                    (true, false) => num.parse().map_err(|_| Error::MalformedRule(format!("bad digit {num:?}")))?,
                    (false, true) => 0,
                };
                if c == 'F' {
                    Symbol::Forward(d)
                } else {
                    Symbol::Apex(d)
                }
            }
            '+' => Symbol::TurnLeft,
            '-' | '\u{2212}' => Symbol::TurnRight,
            '[' => Symbol::Push,
            ']' => Symbol::Pop,
            other => return Err(Error::MalformedRule(format!("unexpected character {other:?} in {text:?}"))),
        };
        out.push(sym);
    }
    if !LSequence(out.clone()).is_balanced() {
        return Err(Error::MalformedRule(format!("unbalanced brackets in {text:?}")));
    }
    Ok(out)
}

impl FromStr for LSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_symbols(s, true).map(LSequence)
    }
}

/// Rewrite rule `F -> F; A -> pattern`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    apex: Vec<Symbol>,
}

impl Rule {
    /// Parses either a bare production for `A` (`F[-A]`) or the full form
    /// `F→F; A→F[-A]` (`->` is accepted for the arrow).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.replace('\u{2192}', "->");
        if !text.contains("->") {
            return Self::from_pattern(&text);
        }
        let mut apex = None;
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (lhs, rhs) =
                part.split_once("->").ok_or_else(|| Error::MalformedRule(format!("missing arrow in {part:?}")))?;
            match lhs.trim() {
                "F" if rhs.trim() == "F" => {}
                "F" => return Err(Error::MalformedRule(format!("F must rewrite to F, got {:?}", rhs.trim()))),
                "A" => apex = Some(Self::from_pattern(rhs.trim())?),
                other => return Err(Error::MalformedRule(format!("unknown rule head {other:?}"))),
            }
        }
        apex.ok_or_else(|| Error::MalformedRule(format!("no production for A in {text:?}")))
    }

    fn from_pattern(pattern: &str) -> Result<Self> {
        let apex = parse_symbols(pattern, false)?;
        if apex.is_empty() {
            return Err(Error::MalformedRule("empty production".into()));
        }
        Ok(Self { apex })
    }
}

/// Replaces every `A` by the rule's pattern; new `F`/`A` symbols get the
/// rewritten apex's digit plus one.
pub fn rewrite(seq: &LSequence, rule: &Rule) -> LSequence {
    let mut out = Vec::with_capacity(seq.0.len() * 2);
    for &s in &seq.0 {
        match s {
            Symbol::Apex(d) => out.extend(rule.apex.iter().map(|&p| match p {
                Symbol::Forward(_) => Symbol::Forward(d + 1),
                Symbol::Apex(_) => Symbol::Apex(d + 1),
                other => other,
            })),
            other => out.push(other),
        }
    }
    LSequence(out)
}

/// Axioms and productions, usually loaded from a TOML data file.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub axioms: Vec<LSequence>,
    pub productions: Vec<Rule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    axioms: Vec<String>,
    productions: Vec<String>,
}

impl RuleSet {
    pub fn parse_toml(text: &str) -> Result<Self> {
        let raw: RuleFile = toml::from_str(text).map_err(|e| Error::MalformedRule(e.to_string()))?;
        if raw.axioms.is_empty() || raw.productions.is_empty() {
            return Err(Error::MalformedRule("rule file needs at least one axiom and one production".into()));
        }
        Ok(Self {
            axioms: raw.axioms.iter().map(|a| a.parse()).collect::<Result<_>>()?,
            productions: raw.productions.iter().map(|p| Rule::parse(p)).collect::<Result<_>>()?,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse_toml(&text).map_err(|e| Error::file(path, e))
    }

    /// Picks an axiom and applies `iterations` randomly chosen productions.
    ///
    /// Choices are drawn up front, so for a fixed generator state a longer
    /// run extends a shorter one.
    pub fn grow<R: Rng>(&self, iterations: u32, rng: &mut R) -> LSequence {
        let axiom = &self.axioms[rng.gen_range(0..self.axioms.len())];
        let picks: Vec<usize> = (0..iterations).map(|_| rng.gen_range(0..self.productions.len())).collect();
        picks.iter().fold(axiom.clone(), |seq, &p| rewrite(&seq, &self.productions[p]))
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        Self::parse_toml(DEFAULT_RULES).expect("bundled rules parse")
    }
}

/// Geometry and rendering parameters of a dataset profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeomConfig {
    /// Segment length before random scaling, in turtle units.
    pub base_length: f64,
    pub length_scale: [f64; 2],
    /// Joint angle range in degrees; equal bounds fix the angle.
    pub angle_deg: [f64; 2],
    pub max_iterations: u32,
    pub node_cap: usize,
    pub canvas: [u32; 2],
    pub stroke: u32,
    /// Fraction of the canvas left free on every side when fitting.
    pub margin: f64,
    /// Resample drawn trees at this interval (pixels) after fitting.
    #[serde(default)]
    pub resample_interval: Option<f64>,
}

impl Default for GeomConfig {
    fn default() -> Self {
        Self {
            base_length: 10.0,
            length_scale: [0.5, 2.5],
            angle_deg: [10.0, 35.0],
            max_iterations: 3,
            node_cap: 100,
            canvas: [512, 512],
            stroke: 1,
            margin: 0.05,
            resample_interval: None,
        }
    }
}

/// Approximate node capacity `floor(H/s) * floor(W/s)` of a canvas sampled every `s` pixels.
pub fn node_capacity(height: u32, width: u32, interval: f64) -> usize {
    ((height as f64 / interval).floor() * (width as f64 / interval).floor()) as usize
}

impl GeomConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.base_length > 0.0) {
            return bad(format!("base_length must be positive, got {}", self.base_length));
        }
        if !(self.length_scale[0] > 0.0 && self.length_scale[0] <= self.length_scale[1]) {
            return bad(format!("length_scale {:?} is not a valid range", self.length_scale));
        }
        if !(self.angle_deg[0] >= 0.0 && self.angle_deg[0] <= self.angle_deg[1]) {
            return bad(format!("angle_deg {:?} is not a valid range", self.angle_deg));
        }
        if self.node_cap < 2 {
            return bad(format!("node_cap must be at least 2, got {}", self.node_cap));
        }
        if self.canvas[0] == 0 || self.canvas[1] == 0 || self.stroke == 0 {
            return bad("canvas and stroke must be nonzero".into());
        }
        if !(0.0..0.5).contains(&self.margin) {
            return bad(format!("margin {} outside [0, 0.5)", self.margin));
        }
        if let Some(s) = self.resample_interval {
            if !(s > 0.0) {
                return bad(format!("resample interval must be positive, got {s}"));
            }
            // Uniform density bound H*W/s^2 (about 388 at 256x256, s = 13).
            let bound = (self.canvas[0] as f64 * self.canvas[1] as f64 / (s * s)).floor() as usize;
            if self.node_cap > bound {
                return bad(format!("node cap {} exceeds the canvas capacity {bound} at {s} px", self.node_cap));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Turtle {
    pos: Point,
    heading: f64,
    node: usize,
}

/// Draws a sequence with a turtle and fits the result onto the canvas.
///
/// `F` and `A` both draw a segment of length `base * u`, `u` uniform in
/// `length_scale`; `+`/`-` turn by a fresh angle from `angle_deg`; brackets
/// push and pop the turtle. The turtle starts heading up the image.
pub fn interpret<R: Rng>(seq: &LSequence, geom: &GeomConfig, rng: &mut R) -> Result<Graph> {
    if !seq.is_balanced() {
        return Err(Error::MalformedRule(format!("unbalanced sequence {seq}")));
    }
    let nodes_needed = seq.segments() + 1;
    if nodes_needed > geom.node_cap {
        return Err(Error::NodeCapExceeded { nodes: nodes_needed, cap: geom.node_cap });
    }
    let mut nodes = vec![Point::new(0.0, 0.0)];
    let mut edges = Vec::with_capacity(seq.segments());
    let mut turtle = Turtle { pos: nodes[0], heading: -std::f64::consts::FRAC_PI_2, node: 0 };
    let mut stack = Vec::new();
    let [lo, hi] = geom.length_scale;
    let [alo, ahi] = geom.angle_deg;
    for &s in seq.symbols() {
        match s {
            Symbol::Forward(_) | Symbol::Apex(_) => {
                let len = geom.base_length * rng.gen_range(lo..=hi);
                let next = Point::new(turtle.pos.x + len * turtle.heading.cos(), turtle.pos.y + len * turtle.heading.sin());
                let id = nodes.len();
                nodes.push(next);
                edges.push((turtle.node, id));
                turtle = Turtle { pos: next, node: id, ..turtle };
            }
            Symbol::TurnLeft => turtle.heading += rng.gen_range(alo..=ahi).to_radians(),
            Symbol::TurnRight => turtle.heading -= rng.gen_range(alo..=ahi).to_radians(),
            Symbol::Push => stack.push(turtle),
            Symbol::Pop => turtle = stack.pop().expect("balanced"),
        }
    }
    fit_to_canvas(&mut nodes, geom);
    Graph::new((geom.canvas[0], geom.canvas[1]), nodes, edges)
}

/// Uniform scale and translation that centres the drawing with a margin.
fn fit_to_canvas(nodes: &mut [Point], geom: &GeomConfig) {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in nodes.iter() {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (w, h) = (geom.canvas[0] as f64, geom.canvas[1] as f64);
    let avail_w = w * (1.0 - 2.0 * geom.margin);
    let avail_h = h * (1.0 - 2.0 * geom.margin);
    let sx = if x1 - x0 > 0.0 { avail_w / (x1 - x0) } else { f64::INFINITY };
    let sy = if y1 - y0 > 0.0 { avail_h / (y1 - y0) } else { f64::INFINITY };
    let scale = if sx.min(sy).is_finite() { sx.min(sy) } else { 1.0 };
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    for p in nodes.iter_mut() {
        // Clamp guards against rounding at the far margin of tiny canvases.
        p.x = (w / 2.0 + (p.x - cx) * scale).clamp(0.0, w - 1e-9);
        p.y = (h / 2.0 + (p.y - cy) * scale).clamp(0.0, h - 1e-9);
    }
}

/// Draws every edge in white with the configured stroke on black.
pub fn rasterize(g: &Graph, geom: &GeomConfig) -> Result<GrayImage> {
    g.validate()?;
    if g.canvas != (geom.canvas[0], geom.canvas[1]) {
        return Err(Error::InvalidArgument(format!(
            "graph canvas {:?} differs from profile canvas {:?}",
            g.canvas, geom.canvas
        )));
    }
    let mut img = image::blank(g.canvas.0, g.canvas.1);
    for &(a, b) in &g.edges {
        let (p, q) = (g.nodes[a], g.nodes[b]);
        image::draw_line(&mut img, (p.x, p.y), (q.x, q.y), geom.stroke, INK);
    }
    Ok(img)
}
