//! Dressed Chevalley generators, SOS tail weights and quasi-local SOS
//! currents.
//!
//! A dressed triangle `F(a; b, c)` sits on a line with `a` on the
//! right-hand side of the traveller and `b`, `c` the upstream and
//! downstream heights on the left. A tail face `T(a, b, c, d)` uses the
//! face convention of [`crate::sos_weights::face_weight`] in the frame of
//! the crossed line.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{c64, scalar_residual, C64};
use crate::sos_weights::{
    boundary_height, boundary_dressing, dressed_partition_function, face_weight, height_value, intertwiner,
    sinh_height, summed_boundary, IntertwinerKind, SosLatticeSpec,
};
use crate::embedding::{contour_sum, ContourSum, EmbeddingMap, Parafermion, ParafermionKind};
use crate::vertex_lattice::{
    configuration_sum_weighted, plaquette_tails, CurrentInsertion, EdgeId, Face, Step, TailPath, VertexLatticeSpec,
};
use crate::vertex_weights::{generator_mat, t_entry, GeneratorId, GeneratorKind, Mat2, ModelParams};

const ZERO: C64 = c64(0.0, 0.0);
const ONE: C64 = c64(1.0, 0.0);

/// `μ_0 = 1`, `μ_1 = -1`.
pub fn mu(index: u8) -> f64 {
    if index == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of a tail face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailSign {
    /// `T^-`, left- and up-going tails.
    Minus,
    /// `T^+`, right- and down-going tails.
    Plus,
}

impl TailSign {
    /// Sign used when crossing with `step`.
    pub fn of_step(step: Step) -> Self {
        if step.uses_inverse() {
            TailSign::Minus
        } else {
            TailSign::Plus
        }
    }
}

fn adjacent(a: i64, b: i64) -> bool {
    (a - b).abs() == 1
}

fn sandwich(row: &[C64; 2], m: &Mat2, col: &[C64; 2]) -> C64 {
    let mut s = ZERO;
    for i in 0..2 {
        for j in 0..2 {
            s += row[i] * m[i][j] * col[j];
        }
    }
    s
}

fn check_index(index: u8) -> Result<()> {
    if index > 1 {
        return Err(Error::ArgError(format!("generator index {index} not in {{0,1}}")));
    }
    Ok(())
}

/// `F_i(a; b, c)` or `F̄_i(a; b, c)` by direct contraction
/// `ψ*(a, c) f ψ(a, b)`.
pub fn dressed_f_contract(index: u8, barred: bool, a: i64, b: i64, c: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    check_index(index)?;
    let gen = if barred { GeneratorId::f_bar(index) } else { GeneratorId::f(index) };
    let row = intertwiner(IntertwinerKind::PsiStar, a, c, lambda, params)?;
    let col = intertwiner(IntertwinerKind::Psi, a, b, lambda, params)?;
    Ok(sandwich(&row, &generator_mat(gen, lambda, params.eta), &col))
}

/// `F_i(a; b, c)` or `F̄_i(a; b, c)` in closed form; zero unless `b` and
/// `c` are both adjacent to `a`.
pub fn dressed_f(index: u8, barred: bool, a: i64, b: i64, c: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    check_index(index)?;
    if !adjacent(a, b) || !adjacent(a, c) {
        return Ok(ZERO);
    }
    let eta = params.eta;
    let pre = if barred { (2.0 * lambda + eta).exp() } else { ONE };
    let i = if barred { 1 - index } else { index };
    let s = (c - a) as f64;
    let ae = height_value(a, params) * eta;
    let den = 2.0 * sinh_height(a, params)?;
    let v = match (i, b == c) {
        (0, true) => c64(s, 0.0) / den,
        (0, false) => s * (s * ae).exp() / den,
        (1, true) => -s * (-2.0 * lambda).exp() / den,
        _ => -s * (-2.0 * lambda - s * ae).exp() / den,
    };
    Ok(pre * v)
}

/// `τ^±_μ(a, b, c, d)` by direct contraction.
pub fn tau_contract(mu: C64, sign: TailSign, a: i64, b: i64, c: i64, d: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    let e = (mu * params.eta).exp();
    let (row, diag) = match sign {
        TailSign::Minus => (intertwiner(IntertwinerKind::PsiStar, d, c, lambda, params)?, [e, ONE / e]),
        TailSign::Plus => (intertwiner(IntertwinerKind::PsiPrime, d, c, lambda, params)?, [ONE / e, e]),
    };
    let col = intertwiner(IntertwinerKind::Psi, a, b, lambda, params)?;
    Ok(row[0] * diag[0] * col[0] + row[1] * diag[1] * col[1])
}

/// `τ^±_μ(a, b, c, d)` in closed form; zero unless `|a - b| = |c - d| = 1`.
pub fn tau(mu: C64, sign: TailSign, a: i64, b: i64, c: i64, d: i64, _lambda: C64, params: &ModelParams) -> Result<C64> {
    if sign == TailSign::Plus {
        return tau(mu, TailSign::Minus, b, a, d, c, _lambda, params);
    }
    if !adjacent(a, b) || !adjacent(c, d) {
        return Ok(ZERO);
    }
    let eta = params.eta;
    let (av, dv) = (height_value(a, params), height_value(d, params));
    let s = (c - d) as f64;
    let num = if b - a == c - d { (dv + av + 2.0 * s * mu) * eta / 2.0 } else { (dv - av + 2.0 * s * mu) * eta / 2.0 };
    Ok(num.sinh() / sinh_height(d, params)?)
}

/// `T^±_i(a, b, c, d)` by direct contraction with `t_i^{∓1}`.
pub fn dressed_t_contract(index: u8, sign: TailSign, a: i64, b: i64, c: i64, d: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    check_index(index)?;
    let inverse = sign == TailSign::Minus;
    let row = match sign {
        TailSign::Minus => intertwiner(IntertwinerKind::PsiStar, d, c, lambda, params)?,
        TailSign::Plus => intertwiner(IntertwinerKind::PsiPrime, d, c, lambda, params)?,
    };
    let col = intertwiner(IntertwinerKind::Psi, a, b, lambda, params)?;
    Ok((0..2).map(|s| row[s] * t_entry(index, params.eta, inverse, s) * col[s]).sum())
}

/// `T^±_i(a, b, c, d)` in closed form.
pub fn dressed_t(index: u8, sign: TailSign, a: i64, b: i64, c: i64, d: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    check_index(index)?;
    tau(c64(mu(index), 0.0), sign, a, b, c, d, lambda, params)
}

/// Which tail weights an identity uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFamily {
    /// `T^±_i`.
    Index(u8),
    /// `τ^±_μ`.
    Mu(C64),
}

impl TailFamily {
    fn mu(&self) -> C64 {
        match *self {
            TailFamily::Index(i) => c64(mu(i), 0.0),
            TailFamily::Mu(m) => m,
        }
    }

    fn weight(&self, sign: TailSign, h: [i64; 4], lambda: C64, params: &ModelParams) -> Result<C64> {
        tau(self.mu(), sign, h[0], h[1], h[2], h[3], lambda, params)
    }
}

fn around(a: i64, r: i64) -> core::ops::RangeInclusive<i64> {
    (a - r)..=(a + r)
}

/// Residual of the tail Yang-Baxter move on heights `[a, b, c, d, e, f]`.
pub fn check_tail_ybe(
    sign: TailSign,
    family: TailFamily,
    h: [i64; 6],
    l1: C64,
    l2: C64,
    params: &ModelParams,
) -> Result<f64> {
    let [a, b, c, d, e, f] = h;
    let l12 = l1 - l2;
    let t = |x: [i64; 4], l: C64| family.weight(sign, x, l, params);
    let w = |p, q, r, s, l| face_weight(p, q, r, s, l, params);
    let mut lhs = ZERO;
    let mut rhs = ZERO;
    for g in around(a, 4) {
        lhs += w(f, g, d, e, l12)? * t([a, b, g, f], l1)? * t([b, c, d, g], l2)?;
        rhs += t([a, g, e, f], l2)? * t([g, c, d, e], l1)? * w(a, b, c, g, l12)?;
    }
    Ok(scalar_residual(lhs, rhs))
}

/// Height patterns `[a, b, c, d, e, f]` around `a`. The pairs `(c, d)` and
/// `(f, a)` sit across the tail and differ by an even amount.
pub fn tail_hexagons(a: i64) -> Vec<[i64; 6]> {
    let mut out = Vec::new();
    for b in [a - 1, a + 1] {
        for c in [b - 1, b + 1] {
            for d in [c - 2, c, c + 2] {
                for e in [d - 1, d + 1] {
                    for f in [a - 2, a, a + 2] {
                        if adjacent(e, f) {
                            out.push([a, b, c, d, e, f]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Residual of inversion relation `which` (1 to 4) at heights
/// `(a, b, c, d)`.
pub fn check_sos_inversions(which: u8, family: TailFamily, h: [i64; 4], lambda: C64, params: &ModelParams) -> Result<f64> {
    use TailSign::*;
    let [a, b, c, d] = h;
    let t = |s, x: [i64; 4]| family.weight(s, x, lambda, params);
    let ratio = |p: i64, q: i64| -> Result<C64> { Ok(sinh_height(p, params)? / sinh_height(q, params)?) };
    let delta = if b == c { ONE } else { ZERO };
    let mut lhs = ZERO;
    let rhs = match which {
        1 | 3 => delta,
        2 | 4 => {
            if b == c {
                ratio(d, b)?
            } else {
                ZERO
            }
        }
        _ => return Err(Error::ArgError(format!("inversion {which} not in 1..=4"))),
    };
    for e in around(d, 1) {
        if e == d {
            continue;
        }
        lhs += match which {
            1 => t(Plus, [d, e, a, c])? * t(Minus, [b, a, e, d])?,
            2 => ratio(e, a)? * t(Minus, [d, e, a, c])? * t(Plus, [b, a, e, d])?,
            3 => t(Minus, [e, d, c, a])? * t(Plus, [a, b, d, e])?,
            _ => ratio(e, a)? * t(Plus, [e, d, c, a])? * t(Minus, [a, b, d, e])?,
        };
    }
    Ok(scalar_residual(lhs, rhs))
}

/// Residual of commutation relation `which` (1 to 4) at `(a, b, c)`.
/// Relations 1 and 2 use `F_i`, relations 3 and 4 use `F̄_i`. The loop
/// phase is `e^{2(μ_i - 1)η}` for relations 1 and 4 and its inverse for
/// 2 and 3.
pub fn check_sos_commutation(which: u8, index: u8, h: [i64; 3], lambda: C64, params: &ModelParams) -> Result<f64> {
    use TailSign::*;
    let [a, b, c] = h;
    let barred = which >= 3;
    let t = |s, x: [i64; 4]| dressed_t(index, s, x[0], x[1], x[2], x[3], lambda, params);
    let f = |p, q, r| dressed_f(index, barred, p, q, r, lambda, params);
    let ratio = |p: i64, q: i64| -> Result<C64> { Ok(sinh_height(p, params)? / sinh_height(q, params)?) };
    let m = mu(index);
    let phase = match which {
        1 | 4 => 2.0 * (m - 1.0),
        2 | 3 => 2.0 * (1.0 - m),
        _ => return Err(Error::ArgError(format!("commutation {which} not in 1..=4"))),
    };
    let mut lhs = ZERO;
    for d in around(a, 2) {
        for e in around(a, 3) {
            lhs += if which % 2 == 1 {
                ratio(d, a)? * t(Plus, [d, e, c, a])? * f(d, c, e)? * t(Minus, [a, b, c, d])?
            } else {
                ratio(e, b)? * t(Minus, [d, b, c, a])? * f(d, e, b)? * t(Plus, [a, b, e, d])?
            };
        }
    }
    let rhs = (params.eta * phase).exp() * f(a, b, c)?;
    Ok(scalar_residual(lhs, rhs))
}

/// Residual of the four-term relation at heights `(a, b, c, d, e)`.
pub fn check_sos_four_term(barred: bool, index: u8, h: [i64; 5], l1: C64, l2: C64, params: &ModelParams) -> Result<f64> {
    let [a, b, c, d, e] = h;
    let l12 = l1 - l2;
    let w = |p, q, r, s| face_weight(p, q, r, s, l12, params);
    let f = |p, q, r, l| dressed_f(index, barred, p, q, r, l, params);
    let t = |p, q, r, s, l| dressed_t(index, TailSign::Minus, p, q, r, s, l, params);
    let mut lhs = w(a, b, d, e)? * f(b, c, d, l2)?;
    let mut rhs = f(e, c, d, l1)? * w(a, b, c, e)?;
    for g in around(a, 2) {
        lhs += w(a, g, d, e)? * f(a, b, g, l1)? * t(b, c, d, g, l2)?;
        rhs += f(a, g, e, l2)? * t(g, c, d, e, l1)? * w(a, b, c, g)?;
    }
    Ok(scalar_residual(lhs, rhs))
}

/// Height patterns `(a, b, c, d, e)` for the four-term relation; `c` and
/// `d` sit across the tail.
pub fn four_term_patterns(a: i64) -> Vec<[i64; 5]> {
    let mut out = Vec::new();
    for b in [a - 1, a + 1] {
        for c in [b - 1, b + 1] {
            for d in [c - 2, c, c + 2] {
                for e in [a - 1, a + 1] {
                    if adjacent(d, e) {
                        out.push([a, b, c, d, e]);
                    }
                }
            }
        }
    }
    out
}

/// A quasi-local SOS current: a dressed generator on an edge of the
/// underlying vertex lattice, plus the tail joining it to the boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SosCurrentInsertion {
    /// Generator of kind `F` or `FBar`.
    pub gen: GeneratorId,
    /// Dual path shared with the vertex picture.
    pub tail: TailPath,
}

impl SosCurrentInsertion {
    /// Checked constructor.
    pub fn new(gen: GeneratorId, tail: TailPath) -> Result<Self> {
        if !matches!(gen.kind(), GeneratorKind::F | GeneratorKind::FBar) {
            return Err(Error::ArgError(format!("current generator must be F or F_bar, got {gen:?}")));
        }
        Ok(Self { gen, tail })
    }

    /// Same operator viewed on the vertex side.
    pub fn from_vertex(ins: &CurrentInsertion) -> Self {
        Self { gen: ins.gen, tail: ins.tail.clone() }
    }

    /// Vertex-side counterpart.
    pub fn to_vertex(&self) -> CurrentInsertion {
        CurrentInsertion { gen: self.gen, tail: self.tail.clone() }
    }

    /// Whether the generator is barred.
    pub fn barred(&self) -> bool {
        self.gen.kind() == GeneratorKind::FBar
    }

    /// Anticlockwise winding of the tail.
    pub fn winding(&self) -> i32 {
        self.tail.winding()
    }
}

/// Side of the tail, looking along it from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Left-hand side.
    Left,
    /// Right-hand side.
    Right,
}

/// A height variable: a whole face of the vertex lattice, or one side of a
/// face the tail runs through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    /// Face of the vertex lattice.
    pub face: Face,
    /// Side of the tail, for faces on the tail.
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq)]
enum Element {
    Face([usize; 4], C64),
    Tail(TailSign, [usize; 4], C64),
    Insert([usize; 3], C64),
    Corner { inner: usize, outer: usize },
}

/// The SOS lattice with a current insertion: height variables and the
/// weights that couple them.
#[derive(Debug, Clone, PartialEq)]
pub struct SosCurrentNetwork {
    /// Height variables.
    pub regions: Vec<Region>,
    /// Boundary value of each variable, `None` when summed.
    pub fixed: Vec<Option<i64>>,
    elements: Vec<Element>,
    index: u8,
    barred: bool,
    params: ModelParams,
}

type Pt = (i64, i64);

fn cross(o: Pt, a: Pt, b: Pt) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn side_of(p0: Pt, c: Pt, p1: Pt, q: Pt) -> Side {
    let turn = cross(p0, c, p1);
    let s1 = cross(p0, c, q);
    let s2 = cross(c, p1, q);
    let left = if turn > 0 {
        s1 > 0 && s2 > 0
    } else if turn < 0 {
        !(s1 < 0 && s2 < 0)
    } else {
        s1 > 0
    };
    if left {
        Side::Left
    } else {
        Side::Right
    }
}

fn centre2(f: Face) -> Pt {
    (2 * f.fx as i64 + 1, 2 * f.fy as i64 + 1)
}

fn mid2(e: EdgeId) -> Pt {
    match e {
        EdgeId::V { x, k } => (2 * x as i64, 2 * k as i64 + 1),
        EdgeId::H { y, k } => (2 * k as i64 + 1, 2 * y as i64),
    }
}

fn corners(f: Face) -> [(usize, usize); 4] {
    [(f.fx, f.fy), (f.fx + 1, f.fy), (f.fx, f.fy + 1), (f.fx + 1, f.fy + 1)]
}

/// Right-hand face, left-hand face, upstream and downstream endpoints and
/// spectral parameter of an edge, in the frame of its line.
fn edge_frame(spec: &SosLatticeSpec, e: EdgeId) -> (Face, Face, (usize, usize), (usize, usize), C64) {
    match e {
        EdgeId::V { x, k } => (Face::new(x - 1, k), Face::new(x, k), (x, k + 1), (x, k), spec.col_lambdas[x - 1]),
        EdgeId::H { y, k } => (Face::new(k, y), Face::new(k, y - 1), (k + 1, y), (k, y), spec.row_lambdas[y - 1]),
    }
}

struct TailGeometry {
    faces: Vec<Face>,
    polylines: Vec<(Pt, Pt, Pt)>,
}

impl TailGeometry {
    fn new(tail: &TailPath) -> Result<Self> {
        let faces = tail.faces()?;
        for (i, f) in faces.iter().enumerate() {
            if faces[..i].contains(f) {
                return Err(Error::GeometryError(format!("tail visits {f:?} twice")));
            }
        }
        let a = tail.anchor;
        let out: Pt = match (a.fx, a.fy) {
            (0, 0) => (-1, -1),
            (0, _) => (-1, 0),
            _ => (0, -1),
        };
        let crossings = tail.crossings();
        let mut polylines = Vec::with_capacity(faces.len());
        for (k, f) in faces.iter().enumerate() {
            let c = centre2(*f);
            let p0 = if k == 0 { (c.0 + out.0, c.1 + out.1) } else { mid2(crossings[k - 1].0) };
            let p1 = if k + 1 < faces.len() { mid2(crossings[k].0) } else { mid2(tail.insertion) };
            polylines.push((p0, c, p1));
        }
        Ok(Self { faces, polylines })
    }

    fn side(&self, f: Face, q: (usize, usize)) -> Option<Side> {
        let k = self.faces.iter().position(|g| *g == f)?;
        let (p0, c, p1) = self.polylines[k];
        Some(side_of(p0, c, p1, (2 * q.0 as i64, 2 * q.1 as i64)))
    }
}

fn pseudo_exit(e: EdgeId) -> Step {
    match e {
        EdgeId::V { .. } => Step::Left,
        EdgeId::H { .. } => Step::Up,
    }
}

impl SosCurrentNetwork {
    /// Builds the network for `ins` on `spec`. The anchor must lie on the
    /// left or bottom boundary and the tail may not revisit a face.
    pub fn build(spec: &SosLatticeSpec, ins: &SosCurrentInsertion) -> Result<Self> {
        if spec.cyclic.is_some() {
            return Err(Error::ArgError("SOS currents need unrestricted heights".into()));
        }
        if spec.n_cols * spec.n_rows > crate::sos_weights::MAX_FACES {
            return Err(Error::SizeError(format!("{} faces exceed the enumeration limit", spec.n_cols * spec.n_rows)));
        }
        let (nc, nr) = (spec.n_cols, spec.n_rows);
        let tail = &ins.tail;
        tail.validate(nc, nr)?;
        if tail.anchor.fx != 0 && tail.anchor.fy != 0 {
            return Err(Error::GeometryError(format!("anchor {:?} is not on the left or bottom boundary", tail.anchor)));
        }
        let geo = TailGeometry::new(tail)?;
        let outside = |q: (usize, usize)| !((1..=nc).contains(&q.0) && (1..=nr).contains(&q.1));

        let mut regions = Vec::new();
        let mut fixed = Vec::new();
        let mut lookup: BTreeMap<Region, usize> = BTreeMap::new();
        for fy in 0..=nr {
            for fx in 0..=nc {
                let f = Face::new(fx, fy);
                let bh = boundary_height(nc, nr, &spec.boundary, f);
                let sides: Vec<Option<Side>> =
                    if geo.faces.contains(&f) { vec![Some(Side::Left), Some(Side::Right)] } else { vec![None] };
                for side in sides {
                    let touches_outside = corners(f).iter().any(|&q| outside(q) && (side.is_none() || geo.side(f, q) == side));
                    let r = Region { face: f, side };
                    lookup.insert(r, regions.len());
                    regions.push(r);
                    fixed.push(if touches_outside { bh } else { None });
                }
            }
        }
        let region_at = |f: Face, q: (usize, usize)| -> usize { lookup[&Region { face: f, side: geo.side(f, q) }] };

        let mut elements = Vec::new();
        for y in 1..=nr {
            for x in 1..=nc {
                let q = (x, y);
                elements.push(Element::Face(
                    [
                        region_at(Face::new(x - 1, y), q),
                        region_at(Face::new(x, y), q),
                        region_at(Face::new(x, y - 1), q),
                        region_at(Face::new(x - 1, y - 1), q),
                    ],
                    spec.col_lambdas[x - 1] - spec.row_lambdas[y - 1],
                ));
            }
        }
        for (e, step) in tail.crossings() {
            let (rf, lf, up, dn, lam) = edge_frame(spec, e);
            elements.push(Element::Tail(
                TailSign::of_step(step),
                [region_at(rf, up), region_at(lf, up), region_at(lf, dn), region_at(rf, dn)],
                lam,
            ));
        }
        let (rf, lf, up, dn, lam) = edge_frame(spec, tail.insertion);
        let (a_up, a_dn) = (region_at(rf, up), region_at(rf, dn));
        if a_up != a_dn {
            return Err(Error::GeometryError("tail separates the two ends of the insertion edge".into()));
        }
        elements.push(Element::Insert([a_up, region_at(lf, up), region_at(lf, dn)], lam));
        let n = geo.faces.len();
        for k in 1..n {
            let s_in = tail.steps[k - 1];
            let s_out = if k + 1 < n { tail.steps[k] } else { pseudo_exit(tail.insertion) };
            if matches!((s_in, s_out), (Step::Left, Step::Down) | (Step::Down, Step::Left)) {
                let f = geo.faces[k];
                let (p0, c, p1) = geo.polylines[k];
                let q = (((p0.0 + p1.0 - c.0) / 2) as usize, ((p0.1 + p1.1 - c.1) / 2) as usize);
                let inner = region_at(f, q);
                let other = match geo.side(f, q) {
                    Some(Side::Left) => Side::Right,
                    _ => Side::Left,
                };
                let outer = lookup[&Region { face: f, side: Some(other) }];
                elements.push(Element::Corner { inner, outer });
            }
        }
        Ok(Self { regions, fixed, elements, index: ins.gen.index(), barred: ins.barred(), params: spec.params })
    }

    fn element_weight(&self, el: &Element, h: &[i64]) -> Result<C64> {
        let p = &self.params;
        match *el {
            Element::Face(r, l) => face_weight(h[r[0]], h[r[1]], h[r[2]], h[r[3]], l, p),
            Element::Tail(sign, r, l) => dressed_t(self.index, sign, h[r[0]], h[r[1]], h[r[2]], h[r[3]], l, p),
            Element::Insert(r, l) => dressed_f(self.index, self.barred, h[r[0]], h[r[1]], h[r[2]], l, p),
            Element::Corner { inner, outer } => Ok(sinh_height(h[inner], p)? / sinh_height(h[outer], p)?),
        }
    }

    fn adjacency(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for el in &self.elements {
            match *el {
                Element::Face(r, _) => pairs.extend([(r[0], r[1]), (r[1], r[2]), (r[2], r[3]), (r[3], r[0])]),
                Element::Tail(_, r, _) => pairs.extend([(r[0], r[1]), (r[2], r[3])]),
                Element::Insert(r, _) => pairs.extend([(r[0], r[1]), (r[0], r[2])]),
                Element::Corner { .. } => {}
            }
        }
        pairs
    }

    /// Every admissible assignment of the summed heights, each as a full
    /// height vector indexed like [`Self::regions`].
    pub fn assignments(&self) -> Result<Vec<Vec<i64>>> {
        let n = self.regions.len();
        let pairs = self.adjacency();
        let mut nbrs = vec![Vec::new(); n];
        for &(u, v) in &pairs {
            if u != v {
                nbrs[u].push(v);
                nbrs[v].push(u);
            }
        }
        let mut order = Vec::new();
        let mut placed = vec![false; n];
        let mut queue: alloc::collections::VecDeque<usize> = (0..n).filter(|&r| self.fixed[r].is_some()).collect();
        for &r in &queue {
            placed[r] = true;
        }
        let mut parent = vec![usize::MAX; n];
        while let Some(u) = queue.pop_front() {
            for &v in &nbrs[u] {
                if !placed[v] {
                    placed[v] = true;
                    parent[v] = u;
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }
        if let Some(r) = (0..n).find(|&r| !placed[r]) {
            return Err(Error::GeometryError(format!("height {:?} is not tied to the boundary", self.regions[r])));
        }
        let mut rank = vec![usize::MAX; n];
        for (k, &r) in order.iter().enumerate() {
            rank[r] = k;
        }
        let mut checks = vec![Vec::new(); order.len()];
        for &(u, v) in &pairs {
            let ku = if self.fixed[u].is_some() { None } else { Some(rank[u]) };
            let kv = if self.fixed[v].is_some() { None } else { Some(rank[v]) };
            match (ku, kv) {
                (Some(a), Some(b)) => checks[a.max(b)].push((u, v)),
                (Some(a), None) | (None, Some(a)) => checks[a].push((u, v)),
                (None, None) => {
                    if (self.fixed[u].unwrap() - self.fixed[v].unwrap()).abs() != 1 {
                        return Ok(Vec::new());
                    }
                }
            }
        }
        let mut h: Vec<i64> = self.fixed.iter().map(|x| x.unwrap_or(0)).collect();
        let mut out = Vec::new();
        fill(&order, &parent, &checks, 0, &mut h, &mut out);
        Ok(out)
    }

    /// Unnormalised weighted sum over heights, with the sum of absolute
    /// weights.
    pub fn weighted_sum(&self) -> Result<(C64, f64)> {
        let mut total = ZERO;
        let mut abs = 0.0;
        for h in self.assignments()? {
            let mut w = ONE;
            for el in &self.elements {
                w *= self.element_weight(el, &h)?;
                if w == ZERO {
                    break;
                }
            }
            total += w;
            abs += w.norm();
        }
        Ok((total, abs))
    }

    /// Weight of one full height assignment.
    pub fn configuration_weight(&self, h: &[i64]) -> Result<C64> {
        let mut w = ONE;
        for el in &self.elements {
            w *= self.element_weight(el, h)?;
        }
        Ok(w)
    }

    /// Variables touched by a tail face or the insertion triangle.
    pub fn tail_regions(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for el in &self.elements {
            match el {
                Element::Tail(_, r, _) => out.extend(r),
                Element::Insert(r, _) => out.extend(r),
                _ => {}
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Product of the tail faces and corner factors of one assignment.
    pub fn tail_product(&self, h: &[i64]) -> Result<C64> {
        let mut w = ONE;
        for el in &self.elements {
            if matches!(el, Element::Tail(..) | Element::Corner { .. }) {
                w *= self.element_weight(el, h)?;
            }
        }
        Ok(w)
    }

    /// Tail faces as `(right-upstream, left-upstream, left-downstream,
    /// right-downstream)` height quadruples of one assignment.
    pub fn tail_faces(&self, h: &[i64]) -> Vec<(TailSign, [i64; 4])> {
        self.elements
            .iter()
            .filter_map(|el| match el {
                Element::Tail(s, r, _) => Some((*s, [h[r[0]], h[r[1]], h[r[2]], h[r[3]]])),
                _ => None,
            })
            .collect()
    }

    /// Heights `(a, b, c)` of the insertion triangle in one assignment.
    pub fn insertion_heights(&self, h: &[i64]) -> [i64; 3] {
        for el in &self.elements {
            if let Element::Insert(r, _) = el {
                return [h[r[0]], h[r[1]], h[r[2]]];
            }
        }
        unreachable!("network always has an insertion")
    }
}

fn fill(
    order: &[usize],
    parent: &[usize],
    checks: &[Vec<(usize, usize)>],
    k: usize,
    h: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if k == order.len() {
        out.push(h.clone());
        return;
    }
    let r = order[k];
    let base = h[parent[r]];
    for v in [base - 1, base + 1] {
        h[r] = v;
        if checks[k].iter().all(|&(u, w)| (h[u] - h[w]).abs() == 1) {
            fill(order, parent, checks, k + 1, h, out);
        }
    }
}

/// Unnormalised SOS current sum.
pub fn sos_current_sum(spec: &SosLatticeSpec, ins: &SosCurrentInsertion) -> Result<(C64, f64)> {
    SosCurrentNetwork::build(spec, ins)?.weighted_sum()
}

/// `⟨J⟩`: current sum over the SOS partition function.
pub fn sos_current_expectation(spec: &SosLatticeSpec, ins: &SosCurrentInsertion) -> Result<C64> {
    let z = crate::sos_weights::sos_partition_function(spec)?;
    let abs: f64 = spec.configurations()?.iter().map(|g| spec.configuration_weight(g).map(|w| w.norm())).sum::<Result<f64>>()?;
    if abs == 0.0 || z.norm() <= 1e-12 * abs {
        return Err(Error::DegenerateNormalization(format!("Z_SOS = {z}")));
    }
    Ok(sos_current_sum(spec, ins)?.0 / z)
}

/// Dressed vertex-side current `⟨j⟩` with the boundary dressing switched
/// at the tail anchor.
pub fn dressed_vertex_current(vspec: &VertexLatticeSpec, boundary: &[i64], ins: &CurrentInsertion) -> Result<C64> {
    let anchor = ins.tail.anchor;
    let dressing = boundary_dressing(vspec, boundary, anchor)?;
    let z = dressed_partition_function(vspec, boundary, anchor)?;
    let (_, abs) = configuration_sum_weighted(&summed_boundary(vspec), &dressing, None)?;
    if abs == 0.0 || z.norm() <= 1e-12 * abs {
        return Err(Error::DegenerateNormalization(format!("dressed Z = {z}")));
    }
    Ok(configuration_sum_weighted(&summed_boundary(vspec), &dressing, Some(ins))?.0 / z)
}

/// Exponent `k` with `⟨j⟩ = e^{kη}⟨J⟩`: `-2Mμ_i` for `f_i` and `+2Mμ_i` for
/// `f̄_i`, where `M` is [`TailPath::winding_from_north`].
pub fn equivalence_exponent(ins: &SosCurrentInsertion) -> i32 {
    let m = ins.tail.winding_from_north();
    let mu = if ins.gen.index() == 0 { 1 } else { -1 };
    if ins.barred() {
        2 * m * mu
    } else {
        -2 * m * mu
    }
}

/// Residual of `⟨j⟩ = e^{kη}⟨J⟩` with `k` from [`equivalence_exponent`],
/// comparing the dressed vertex current against the SOS current built on
/// the matching height boundary.
pub fn check_equivalence_6v_sos(vspec: &VertexLatticeSpec, boundary: &[i64], ins: &CurrentInsertion) -> Result<f64> {
    if vspec.n_cols > 3 || vspec.n_rows > 3 {
        return Err(Error::SizeError(format!("{}x{} lattice; the equivalence check stops at 3x3", vspec.n_cols, vspec.n_rows)));
    }
    let sspec = SosLatticeSpec::from_vertex_lattice(vspec, boundary.to_vec())?;
    let sins = SosCurrentInsertion::from_vertex(ins);
    let j = dressed_vertex_current(vspec, boundary, ins)?;
    let big = sos_current_expectation(&sspec, &sins)?;
    let k = equivalence_exponent(&sins) as f64;
    Ok(scalar_residual(j, (vspec.params.eta * k).exp() * big))
}

/// The four SOS insertions around face `(x, y)` of the SOS lattice, which is
/// vertex `(x, y)` of the underlying vertex lattice, in the order of
/// [`plaquette_tails`].
pub fn sos_plaquette_family(
    spec: &SosLatticeSpec,
    x: usize,
    y: usize,
    gen: GeneratorId,
    anchor: Face,
) -> Result<[SosCurrentInsertion; 4]> {
    let [a, b, c, d] = plaquette_tails(spec.n_cols, spec.n_rows, x, y, anchor)?;
    Ok([
        SosCurrentInsertion::new(gen, a)?,
        SosCurrentInsertion::new(gen, b)?,
        SosCurrentInsertion::new(gen, c)?,
        SosCurrentInsertion::new(gen, d)?,
    ])
}

/// Residual `|J(r1) - J(r2) - J(r3) + J(r4)| / max|J(r_k)|`.
pub fn check_sos_plaquette(spec: &SosLatticeSpec, family: &[SosCurrentInsertion; 4]) -> Result<f64> {
    let (x, y) = match family[0].tail.insertion {
        EdgeId::V { x, k } if k > 0 => (x, k),
        _ => return Err(Error::GeometryError("r1 must be the top edge of a face".into())),
    };
    let expected = [EdgeId::V { x, k: y }, EdgeId::H { y, k: x - 1 }, EdgeId::V { x, k: y - 1 }, EdgeId::H { y, k: x }];
    if family.iter().zip(expected).any(|(i, e)| i.tail.insertion != e) {
        return Err(Error::GeometryError("insertion points do not surround a single face".into()));
    }
    if family.iter().any(|i| i.gen != family[0].gen) {
        return Err(Error::ArgError("mixed generators in a plaquette family".into()));
    }
    let mut j = [ZERO; 4];
    for (slot, ins) in j.iter_mut().zip(family) {
        *slot = sos_current_expectation(spec, ins)?;
    }
    let total = j[0] - j[1] - j[2] + j[3];
    let scale = j.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(if scale == 0.0 { total.norm() } else { total.norm() / scale })
}

/// Contour sum of the SOS parafermion on `gen` around face `(x, y)`; barred
/// flavours pair with `δz̄`.
pub fn sos_contour(spec: &SosLatticeSpec, emb: &EmbeddingMap, x: usize, y: usize, gen: GeneratorId, anchor: Face) -> Result<ContourSum> {
    let fam = sos_plaquette_family(spec, x, y, gen, anchor)?;
    let g = emb.plaquette(x, y);
    let kind = if gen.kind() == GeneratorKind::FBar { ParafermionKind::SosBar } else { ParafermionKind::Sos };
    let pf = Parafermion::new(kind, gen.index(), spec.params.eta)?;
    let mut values = [ZERO; 4];
    for k in 0..4 {
        values[k] = pf.value(g.alphas[k], sos_current_expectation(spec, &fam[k])?);
    }
    let deltas = if pf.kind.is_bar() { g.deltas_bar } else { g.deltas };
    Ok(contour_sum(&values, &deltas))
}

/// Outcome of [`check_j0_locality`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct J0Locality {
    /// Height assignments with nonzero weight.
    pub configurations: usize,
    /// Tail faces in those assignments that are not of the form
    /// `T(a, b, b, a)`.
    pub off_pattern: usize,
    /// Largest relative gap between the tail product and
    /// `sinh(h_anchor η) / sinh(bη)`.
    pub telescoping: f64,
    /// Residual of `⟨J_0⟩` against the local formula.
    pub local: f64,
}

impl J0Locality {
    /// Whether every part holds within `tol`.
    pub fn passed(&self, tol: f64) -> bool {
        self.off_pattern == 0 && self.telescoping <= tol && self.local <= tol
    }
}

/// Checks that a `J_0` or `J̄_0` current is local: along the tail the
/// heights repeat, the tail product collapses to
/// `sinh(h_anchor η) / sinh(bη)`, and the expectation equals
/// `sinh(h_anchor η) ⟨F_0(a; b, b) / sinh(bη)⟩` summed without tail weights.
pub fn check_j0_locality(spec: &SosLatticeSpec, ins: &SosCurrentInsertion) -> Result<J0Locality> {
    if ins.gen.index() != 0 {
        return Err(Error::ArgError(format!("locality concerns J_0, got {:?}", ins.gen)));
    }
    let net = SosCurrentNetwork::build(spec, ins)?;
    let anchor = ins.tail.anchor;
    let h_anchor = boundary_height(spec.n_cols, spec.n_rows, &spec.boundary, anchor)
        .ok_or_else(|| Error::GeometryError(format!("anchor {anchor:?} has no boundary height")))?;
    let s_anchor = sinh_height(h_anchor, &spec.params)?;
    let mut report = J0Locality { configurations: 0, off_pattern: 0, telescoping: 0.0, local: 0.0 };
    let mut local = ZERO;
    let mut full = ZERO;
    for h in net.assignments()? {
        let w = net.configuration_weight(&h)?;
        full += w;
        let pattern = net.tail_faces(&h).iter().all(|(_, q)| q[2] == q[1] && q[3] == q[0]);
        if w != ZERO {
            report.configurations += 1;
            report.off_pattern += net.tail_faces(&h).iter().filter(|(_, q)| !(q[2] == q[1] && q[3] == q[0])).count();
            let [_, b, _] = net.insertion_heights(&h);
            let expected = s_anchor / sinh_height(b, &spec.params)?;
            report.telescoping = report.telescoping.max(scalar_residual(net.tail_product(&h)?, expected));
        }
        if pattern {
            let [a, b, c] = net.insertion_heights(&h);
            if b == c {
                let mut bulk = ONE;
                for el in &net.elements {
                    if let Element::Face(..) = el {
                        bulk *= net.element_weight(el, &h)?;
                    }
                }
                let f = dressed_f(0, ins.barred(), a, b, c, insertion_lambda(spec, ins), &spec.params)?;
                local += bulk * f * s_anchor / sinh_height(b, &spec.params)?;
            }
        }
    }
    report.local = scalar_residual(full, local);
    Ok(report)
}

fn insertion_lambda(spec: &SosLatticeSpec, ins: &SosCurrentInsertion) -> C64 {
    edge_frame(spec, ins.tail.insertion).4
}

/// A nonvanishing configuration of an SOS current at a root of unity in
/// which a height outside `1..=p` sits next to the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RsosWitness {
    /// Restriction parameter, `η = iπ/(p+1)`.
    pub p: u32,
    /// Lattice and boundary heights, with `x0 = 0`.
    pub spec: SosLatticeSpec,
    /// The current.
    pub insertion: SosCurrentInsertion,
    /// Height variables of the current network.
    pub regions: Vec<Region>,
    /// The offending assignment.
    pub heights: Vec<i64>,
    /// Variables next to the tail or insertion whose height is out of range.
    pub out_of_range: Vec<Region>,
    /// Weight of the assignment as `x0 → 0`.
    pub weight: C64,
}

/// Outcome of [`rsos_incompatibility_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct RsosProbe {
    /// First witness found.
    pub witness: RsosWitness,
    /// Out-of-range configurations of the plain partition function that
    /// were inspected on the witness lattice.
    pub plain_out_of_range: usize,
    /// Largest `x0 → 0` weight among them.
    pub plain_max_weight: f64,
}

const RSOS_OFFSETS: [f64; 2] = [1e-5, 1e-6];

fn root_of_unity_params(p: u32, x0: f64) -> ModelParams {
    let mut params = ModelParams::with_eta(c64(0.0, core::f64::consts::PI / (p as f64 + 1.0)));
    params.x0 = c64(x0, 0.0);
    params.tol.singularity_guard = 0.0;
    params
}

/// Leading behaviour `w ≈ C x0^k` of a weight as `x0 → 0`, read off from two
/// small offsets. `None` when the weight vanishes identically.
fn limit_at_zero(w: [C64; 2]) -> Option<(C64, i32)> {
    if w[0] == ZERO && w[1] == ZERO {
        return None;
    }
    let ratio = w[0].norm() / w[1].norm();
    let k = libm::round(libm::log10(ratio) / libm::log10(RSOS_OFFSETS[0] / RSOS_OFFSETS[1])) as i32;
    Some((w[1] / libm::pow(RSOS_OFFSETS[1], k as f64), k))
}

fn in_range(h: i64, p: u32) -> bool {
    (1..=p as i64).contains(&h)
}

fn closed_walks(len: usize, p: u32) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(len: usize, p: u32, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == len {
            if (cur[0] - cur[len - 1]).abs() == 1 {
                out.push(cur.clone());
            }
            return;
        }
        let next: Vec<i64> = match cur.last() {
            None => (1..=p as i64).collect(),
            Some(&h) => [h - 1, h + 1].into_iter().filter(|&v| in_range(v, p)).collect(),
        };
        for v in next {
            cur.push(v);
            rec(len, p, cur, out);
            cur.pop();
        }
    }
    rec(len, p, &mut cur, &mut out);
    out
}

/// Searches small lattices at `η = iπ/(p+1)`, `x0 = 0`, with boundary
/// heights inside `1..=p`, for a current configuration of finite nonzero
/// weight that puts an out-of-range height next to the tail. On the lattice
/// of the witness it also confirms that every out-of-range configuration of
/// the plain partition function vanishes.
pub fn rsos_incompatibility_probe(p: u32) -> Result<RsosProbe> {
    if p < 3 {
        return Err(Error::ArgError(format!("p = {p}; the restriction needs p >= 3")));
    }
    let guard = ModelParams::default().tol.singularity_guard;
    let params: [ModelParams; 2] = RSOS_OFFSETS.map(|d| root_of_unity_params(p, d));
    for (nc, nr) in [(2usize, 2usize), (3, 2), (2, 3)] {
        let cols: Vec<C64> = (0..nc).map(|k| c64(0.21 + 0.17 * k as f64, 0.05 * k as f64)).collect();
        let rows: Vec<C64> = (0..nr).map(|k| c64(-0.13 + 0.11 * k as f64, -0.04 * k as f64)).collect();
        let mut edges = Vec::new();
        for x in 1..=nc {
            for k in 1..nr {
                edges.push(EdgeId::V { x, k });
            }
        }
        for y in 1..=nr {
            for k in 1..nc {
                edges.push(EdgeId::H { y, k });
            }
        }
        for boundary in closed_walks(2 * (nc + nr), p) {
            let specs: Vec<SosLatticeSpec> = params
                .iter()
                .map(|pr| SosLatticeSpec::new(cols.clone(), rows.clone(), boundary.clone(), None, *pr))
                .collect::<Result<_>>()?;
            for &e in &edges {
                for anchor in crate::sos_weights::outgoing_arc(nc, nr) {
                    let Ok(tail) = crate::vertex_lattice::shortest_tail(anchor, e, 0, nc, nr, &[]) else { continue };
                    for gen in [GeneratorId::f(0), GeneratorId::f(1), GeneratorId::f_bar(0), GeneratorId::f_bar(1)] {
                        let ins = SosCurrentInsertion::new(gen, tail.clone())?;
                        let Ok(net0) = SosCurrentNetwork::build(&specs[0], &ins) else { continue };
                        let net1 = SosCurrentNetwork::build(&specs[1], &ins)?;
                        let near = net0.tail_regions();
                        for h in net0.assignments()? {
                            let bad: Vec<usize> = near.iter().copied().filter(|&r| !in_range(h[r], p)).collect();
                            if bad.is_empty() {
                                continue;
                            }
                            let w = [net0.configuration_weight(&h)?, net1.configuration_weight(&h)?];
                            if let Some((c, 0)) = limit_at_zero(w) {
                                if c.norm() > guard && (w[0] - w[1]).norm() <= 1e-3 * w[1].norm() {
                                    let mut spec = specs[0].clone();
                                    spec.params = root_of_unity_params(p, 0.0);
                                    spec.params.tol = ModelParams::default().tol;
                                    let (count, max) = plain_out_of_range(p)?;
                                    return Ok(RsosProbe {
                                        witness: RsosWitness {
                                            p,
                                            spec,
                                            insertion: ins,
                                            regions: net0.regions.clone(),
                                            out_of_range: bad.iter().map(|&r| net0.regions[r]).collect(),
                                            heights: h,
                                            weight: c,
                                        },
                                        plain_out_of_range: count,
                                        plain_max_weight: max,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Err(Error::ProbeInconclusive(format!("no out-of-range witness for p = {p} on lattices up to 3x2")))
}

/// Out-of-range configurations of the plain partition function over every
/// in-range boundary of the 2x2, 3x2 and 3x3 lattices, and the largest of
/// their `x0 → 0` weights (infinite if one diverges).
fn plain_out_of_range(p: u32) -> Result<(usize, f64)> {
    let params: [ModelParams; 2] = RSOS_OFFSETS.map(|d| root_of_unity_params(p, d));
    let mut count = 0;
    let mut max: f64 = 0.0;
    for (nc, nr) in [(2usize, 2usize), (3, 2), (3, 3)] {
        let cols: Vec<C64> = (0..nc).map(|k| c64(0.21 + 0.17 * k as f64, 0.05 * k as f64)).collect();
        let rows: Vec<C64> = (0..nr).map(|k| c64(-0.13 + 0.11 * k as f64, -0.04 * k as f64)).collect();
        for boundary in closed_walks(2 * (nc + nr), p) {
            let specs: Vec<SosLatticeSpec> = params
                .iter()
                .map(|pr| SosLatticeSpec::new(cols.clone(), rows.clone(), boundary.clone(), None, *pr))
                .collect::<Result<_>>()?;
            for g in specs[0].configurations()? {
                if g.iter().all(|&h| in_range(h, p)) {
                    continue;
                }
                count += 1;
                let w = [specs[0].configuration_weight(&g)?, specs[1].configuration_weight(&g)?];
                match limit_at_zero(w) {
                    Some((_, k)) if k < 0 => max = f64::INFINITY,
                    Some((c, 0)) => max = max.max(c.norm()),
                    _ => {}
                }
            }
        }
    }
    Ok((count, max))
}
