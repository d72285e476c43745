//! Finite six-vertex lattices with quasi-local current insertions.
//!
//! Geometry: vertical lines `x = 1..=n_cols` point down, horizontal lines
//! `y = 1..=n_rows` point left, and vertex `(x, y)` sits at the crossing.
//! Faces are labelled `(fx, fy)` with `0 <= fx <= n_cols`,
//! `0 <= fy <= n_rows`, lying between lines `fx, fx + 1` and `fy, fy + 1`.
//! Faces touching the boundary are outer faces and extend to infinity.
//!
//! A tail starts on an outer face and walks through faces; each step crosses
//! exactly one edge. Steps to the left or up weigh the crossed edge with
//! `t_i^{-1}`, steps to the right or down with `t_i`. The tail reaches the
//! inserted generator from the left-hand side of the line carrying it: the
//! east face of a vertical edge, the south face of a horizontal one.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{c64, scalar_residual, ComplexBox, C64};
use crate::vertex_weights::{generator_mat, t_entry, GeneratorId, GeneratorKind, Mat2, ModelParams};

const ZERO: C64 = c64(0.0, 0.0);
const ONE: C64 = c64(1.0, 0.0);

/// Largest lattice, in edges, accepted by the enumeration engine.
pub const MAX_EDGES: usize = 26;

/// Lattice edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeId {
    /// Segment `k` of vertical line `x`, between rows `k` and `k + 1`.
    V {
        /// Column, `1..=n_cols`.
        x: usize,
        /// Segment, `0..=n_rows`.
        k: usize,
    },
    /// Segment `k` of horizontal line `y`, between columns `k` and `k + 1`.
    H {
        /// Row, `1..=n_rows`.
        y: usize,
        /// Segment, `0..=n_cols`.
        k: usize,
    },
}

impl EdgeId {
    /// Midpoint in lattice coordinates.
    pub fn midpoint(&self) -> (f64, f64) {
        match *self {
            EdgeId::V { x, k } => (x as f64, k as f64 + 0.5),
            EdgeId::H { y, k } => (k as f64 + 0.5, y as f64),
        }
    }

    /// The face from which a tail attaches to an insertion on this edge.
    pub fn attach_face(&self) -> Option<Face> {
        match *self {
            EdgeId::V { x, k } => Some(Face::new(x, k)),
            EdgeId::H { y, k } => y.checked_sub(1).map(|fy| Face::new(k, fy)),
        }
    }

    /// Whether the edge has a free end.
    pub fn is_external(&self, n_cols: usize, n_rows: usize) -> bool {
        match *self {
            EdgeId::V { k, .. } => k == 0 || k == n_rows,
            EdgeId::H { k, .. } => k == 0 || k == n_cols,
        }
    }

    /// Whether the edge exists on an `n_cols x n_rows` lattice.
    pub fn in_range(&self, n_cols: usize, n_rows: usize) -> bool {
        match *self {
            EdgeId::V { x, k } => (1..=n_cols).contains(&x) && k <= n_rows,
            EdgeId::H { y, k } => (1..=n_rows).contains(&y) && k <= n_cols,
        }
    }
}

/// Face of the lattice, including the outer ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    /// Horizontal label.
    pub fx: usize,
    /// Vertical label.
    pub fy: usize,
}

impl Face {
    /// Face `(fx, fy)`.
    pub const fn new(fx: usize, fy: usize) -> Self {
        Self { fx, fy }
    }

    /// Centre in lattice coordinates.
    pub fn centre(&self) -> (f64, f64) {
        (self.fx as f64 + 0.5, self.fy as f64 + 0.5)
    }

    /// Whether the face touches the boundary.
    pub fn is_outer(&self, n_cols: usize, n_rows: usize) -> bool {
        self.fx == 0 || self.fy == 0 || self.fx == n_cols || self.fy == n_rows
    }

    /// Neighbour across one step, with the crossed edge.
    pub fn step(&self, s: Step) -> Option<(Face, EdgeId)> {
        let Face { fx, fy } = *self;
        match s {
            Step::Up => Some((Face::new(fx, fy + 1), EdgeId::H { y: fy + 1, k: fx })),
            Step::Down => fy.checked_sub(1).map(|ny| (Face::new(fx, ny), EdgeId::H { y: fy, k: fx })),
            Step::Left => fx.checked_sub(1).map(|nx| (Face::new(nx, fy), EdgeId::V { x: fx, k: fy })),
            Step::Right => Some((Face::new(fx + 1, fy), EdgeId::V { x: fx + 1, k: fy })),
        }
    }
}

/// One dual step of a tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    /// `L`.
    Left,
    /// `U`.
    Up,
    /// `R`.
    Right,
    /// `D`.
    Down,
}

impl Step {
    /// All steps in search order.
    pub const ALL: [Step; 4] = [Step::Left, Step::Up, Step::Right, Step::Down];

    /// Parses one of `L`, `U`, `R`, `D`.
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'L' => Ok(Step::Left),
            'U' => Ok(Step::Up),
            'R' => Ok(Step::Right),
            'D' => Ok(Step::Down),
            _ => Err(Error::GeometryError(format!("unknown step {c:?}"))),
        }
    }

    /// Single-letter form.
    pub fn as_char(&self) -> char {
        match self {
            Step::Left => 'L',
            Step::Up => 'U',
            Step::Right => 'R',
            Step::Down => 'D',
        }
    }

    /// Reverse step.
    pub fn opposite(&self) -> Step {
        match self {
            Step::Left => Step::Right,
            Step::Up => Step::Down,
            Step::Right => Step::Left,
            Step::Down => Step::Up,
        }
    }

    /// Whether the crossing weighs with `t^{-1}` (left and up) rather than `t`.
    pub fn uses_inverse(&self) -> bool {
        matches!(self, Step::Left | Step::Up)
    }
}

/// Parses a step string such as `"UULLU"`.
pub fn parse_steps(s: &str) -> Result<Vec<Step>> {
    s.chars().map(Step::from_char).collect()
}

/// Renders steps back into a string.
pub fn steps_string(steps: &[Step]) -> String {
    steps.iter().map(Step::as_char).collect()
}

/// Tail from an outer anchor face to an insertion edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TailPath {
    /// Starting outer face.
    pub anchor: Face,
    /// Dual steps.
    pub steps: Vec<Step>,
    /// Edge carrying the generator.
    pub insertion: EdgeId,
}

impl TailPath {
    /// Checked constructor: no backtracking, no crossing of the insertion
    /// edge, and the path ends on the attach face of the insertion.
    pub fn new(anchor: Face, steps: Vec<Step>, insertion: EdgeId) -> Result<Self> {
        let tail = Self { anchor, steps, insertion };
        tail.faces()?;
        Ok(tail)
    }

    /// Constructor from a step string.
    pub fn from_str_steps(anchor: Face, steps: &str, insertion: EdgeId) -> Result<Self> {
        Self::new(anchor, parse_steps(steps)?, insertion)
    }

    /// Faces visited, anchor first.
    pub fn faces(&self) -> Result<Vec<Face>> {
        let mut out = vec![self.anchor];
        let mut here = self.anchor;
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 && self.steps[i - 1] == s.opposite() {
                return Err(Error::GeometryError(format!("tail backtracks at step {i}")));
            }
            let (next, edge) = here
                .step(*s)
                .ok_or_else(|| Error::GeometryError(format!("tail leaves the lattice at step {i}")))?;
            if edge == self.insertion {
                return Err(Error::GeometryError("tail crosses its own insertion edge".into()));
            }
            out.push(next);
            here = next;
        }
        if Some(here) != self.insertion.attach_face() {
            return Err(Error::GeometryError(format!(
                "tail ends on {here:?}, insertion {:?} is attached from {:?}",
                self.insertion,
                self.insertion.attach_face()
            )));
        }
        Ok(out)
    }

    /// Crossed edges in order, with the step that crosses each.
    pub fn crossings(&self) -> Vec<(EdgeId, Step)> {
        let mut here = self.anchor;
        let mut out = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let (next, e) = here.step(*s).expect("validated tail");
            out.push((e, *s));
            here = next;
        }
        out
    }

    /// Final face.
    pub fn attach_face(&self) -> Face {
        self.insertion.attach_face().expect("validated tail")
    }

    /// Checks the tail against lattice dimensions.
    pub fn validate(&self, n_cols: usize, n_rows: usize) -> Result<()> {
        if !self.anchor.is_outer(n_cols, n_rows) {
            return Err(Error::GeometryError(format!("anchor {:?} is not an outer face", self.anchor)));
        }
        if !self.insertion.in_range(n_cols, n_rows) || self.insertion.is_external(n_cols, n_rows) {
            return Err(Error::GeometryError(format!("insertion {:?} is not an interior edge", self.insertion)));
        }
        for f in self.faces()? {
            if f.fx > n_cols || f.fy > n_rows {
                return Err(Error::GeometryError(format!("tail visits {f:?} outside the lattice")));
            }
        }
        Ok(())
    }

    /// Winding number `M` around the insertion point: anticlockwise turns
    /// count positively.
    pub fn winding(&self) -> i32 {
        let faces = self.faces().expect("validated tail");
        let p = self.insertion.midpoint();
        let mut theta = 0.0;
        for w in faces.windows(2) {
            theta += swept_angle(p, w[0].centre(), w[1].centre());
        }
        winding_class(p, faces[0], *faces.last().expect("non-empty"), theta)
    }

    /// Winding counted against the ray pointing north from the insertion
    /// point: a tail that never crosses that ray has winding zero.
    pub fn winding_from_north(&self) -> i32 {
        let faces = self.faces().expect("validated tail");
        let p = self.insertion.midpoint();
        let mut theta = 0.0;
        for w in faces.windows(2) {
            theta += swept_angle(p, w[0].centre(), w[1].centre());
        }
        let end = faces.last().expect("non-empty").centre();
        let reference = north_branch(angle_of(p, end)) - north_branch(angle_of(p, faces[0].centre()));
        libm::round((theta - reference) / (2.0 * PI)) as i32
    }
}

fn north_branch(a: f64) -> f64 {
    if a > PI / 2.0 {
        a - 2.0 * PI
    } else {
        a
    }
}

fn angle_of(p: (f64, f64), q: (f64, f64)) -> f64 {
    libm::atan2(q.1 - p.1, q.0 - p.0)
}

fn reduce_angle(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn swept_angle(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    reduce_angle(angle_of(p, b) - angle_of(p, a))
}

fn winding_class(p: (f64, f64), start: Face, end: Face, theta: f64) -> i32 {
    let reference = reduce_angle(angle_of(p, end.centre()) - angle_of(p, start.centre()));
    libm::round((theta - reference) / (2.0 * PI)) as i32
}

/// Shortest tail from `anchor` to the attach face of `insertion` with the
/// requested winding, searching inside `[0, max_fx] x [0, max_fy]` and never
/// crossing an edge in `forbidden`.
pub fn shortest_tail(
    anchor: Face,
    insertion: EdgeId,
    winding: i32,
    max_fx: usize,
    max_fy: usize,
    forbidden: &[EdgeId],
) -> Result<TailPath> {
    let target = insertion
        .attach_face()
        .ok_or_else(|| Error::GeometryError(format!("{insertion:?} has no attach face")))?;
    let p = insertion.midpoint();
    let bound = winding.abs() + 2;
    let width = 2 * bound as usize + 1;
    let idx = |f: Face, w: i32| ((f.fy * (max_fx + 1) + f.fx) * width) + (w + bound) as usize;
    let n_states = (max_fx + 1) * (max_fy + 1) * width;
    let mut prev: Vec<Option<(usize, Step, Face, i32)>> = vec![None; n_states];
    let mut seen = vec![false; n_states];
    let mut queue = VecDeque::new();
    seen[idx(anchor, 0)] = true;
    queue.push_back((anchor, 0i32, 2.0 * PI * 0.0 + 0.0, None::<Step>));
    let mut found = None;
    while let Some((face, w, theta, last)) = queue.pop_front() {
        if face == target && w == winding {
            found = Some((face, w));
            break;
        }
        for s in Step::ALL {
            if last == Some(s.opposite()) {
                continue;
            }
            let Some((next, edge)) = face.step(s) else { continue };
            if next.fx > max_fx || next.fy > max_fy || edge == insertion || forbidden.contains(&edge) {
                continue;
            }
            let theta_next = theta + swept_angle(p, face.centre(), next.centre());
            let w_next = winding_class(p, anchor, next, theta_next);
            if w_next.abs() > bound {
                continue;
            }
            let k = idx(next, w_next);
            if !seen[k] {
                seen[k] = true;
                prev[k] = Some((idx(face, w), s, face, w));
                queue.push_back((next, w_next, theta_next, Some(s)));
            }
        }
    }
    let (mut face, mut w) =
        found.ok_or_else(|| Error::GeometryError(format!("no tail with winding {winding} to {insertion:?}")))?;
    let mut steps = Vec::new();
    while let Some((_, s, f, pw)) = prev[idx(face, w)] {
        steps.push(s);
        face = f;
        w = pw;
    }
    steps.reverse();
    TailPath::new(anchor, steps, insertion)
}

/// A current operator: generator `f_i` or `f̄_i` plus its tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CurrentInsertion {
    /// Generator, of kind `F` or `FBar`.
    pub gen: GeneratorId,
    /// Tail.
    pub tail: TailPath,
}

impl CurrentInsertion {
    /// Checked constructor.
    pub fn new(gen: GeneratorId, tail: TailPath) -> Result<Self> {
        if !matches!(gen.kind(), GeneratorKind::F | GeneratorKind::FBar) {
            return Err(Error::ArgError(format!("current generator must be f or f_bar, got {gen:?}")));
        }
        Ok(Self { gen, tail })
    }

    /// `k` such that unwinding the tail multiplies by `e^{k η}`.
    pub fn unwind_exponent(&self) -> i32 {
        let m = self.tail.winding();
        match self.gen.kind() {
            GeneratorKind::FBar => 2 * m,
            _ => -2 * m,
        }
    }
}

/// Returns an equivalent insertion with winding zero and the factor `c`
/// such that `⟨original⟩ = c ⟨unwound⟩`.
pub fn unwind(ins: &CurrentInsertion, eta: C64) -> Result<(CurrentInsertion, C64)> {
    let m = ins.tail.winding();
    let factor = (eta * ins.unwind_exponent() as f64).exp();
    if m == 0 {
        return Ok((ins.clone(), ONE));
    }
    let faces = ins.tail.faces()?;
    let max_fx = faces.iter().map(|f| f.fx).max().unwrap_or(0);
    let max_fy = faces.iter().map(|f| f.fy).max().unwrap_or(0);
    let tail = shortest_tail(ins.tail.anchor, ins.tail.insertion, 0, max_fx, max_fy, &[])?;
    Ok((CurrentInsertion { gen: ins.gen, tail }, factor))
}

/// Boundary condition on one external edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySpin {
    /// Fixed spin `+1` or `-1`.
    Fixed(i8),
    /// Summed over.
    Summed,
}

impl BoundarySpin {
    /// Integer encoding: `±1` fixed, `0` summed.
    pub fn to_int(&self) -> i8 {
        match self {
            BoundarySpin::Fixed(s) => *s,
            BoundarySpin::Summed => 0,
        }
    }

    /// Inverse of [`BoundarySpin::to_int`].
    pub fn from_int(v: i8) -> Result<Self> {
        match v {
            1 | -1 => Ok(BoundarySpin::Fixed(v)),
            0 => Ok(BoundarySpin::Summed),
            _ => Err(Error::ArgError(format!("boundary spin {v} not in {{-1,0,1}}"))),
        }
    }
}

/// Finite six-vertex lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexLatticeSpec {
    /// Number of vertical lines.
    pub n_cols: usize,
    /// Number of horizontal lines.
    pub n_rows: usize,
    /// Spectral parameter of each vertical line, `x = 1..=n_cols`.
    pub col_lambdas: Vec<C64>,
    /// Spectral parameter of each horizontal line, `y = 1..=n_rows`.
    pub row_lambdas: Vec<C64>,
    /// One entry per external edge, in the order of [`Self::external_edges`].
    pub boundary: Vec<BoundarySpin>,
    /// Model parameters.
    pub params: ModelParams,
}

impl VertexLatticeSpec {
    /// Checked constructor.
    pub fn new(
        col_lambdas: Vec<C64>,
        row_lambdas: Vec<C64>,
        boundary: Vec<BoundarySpin>,
        params: ModelParams,
    ) -> Result<Self> {
        let spec = Self { n_cols: col_lambdas.len(), n_rows: row_lambdas.len(), col_lambdas, row_lambdas, boundary, params };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::SizeError("lattice needs at least one line each way".into()));
        }
        if self.col_lambdas.len() != self.n_cols || self.row_lambdas.len() != self.n_rows {
            return Err(Error::ShapeError("one spectral parameter per line".into()));
        }
        if self.boundary.len() != 2 * (self.n_cols + self.n_rows) {
            return Err(Error::ShapeError(format!(
                "expected {} boundary entries, got {}",
                2 * (self.n_cols + self.n_rows),
                self.boundary.len()
            )));
        }
        for b in &self.boundary {
            if let BoundarySpin::Fixed(s) = b {
                if *s != 1 && *s != -1 {
                    return Err(Error::ArgError(format!("fixed boundary spin {s}")));
                }
            }
        }
        Ok(())
    }

    /// Total number of edges.
    pub fn n_edges(&self) -> usize {
        self.n_cols * (self.n_rows + 1) + self.n_rows * (self.n_cols + 1)
    }

    /// External edges: top left to right, right bottom to top, bottom left
    /// to right, left bottom to top.
    pub fn external_edges(&self) -> Vec<EdgeId> {
        let (c, r) = (self.n_cols, self.n_rows);
        let mut v = Vec::with_capacity(2 * (c + r));
        v.extend((1..=c).map(|x| EdgeId::V { x, k: r }));
        v.extend((1..=r).map(|y| EdgeId::H { y, k: c }));
        v.extend((1..=c).map(|x| EdgeId::V { x, k: 0 }));
        v.extend((1..=r).map(|y| EdgeId::H { y, k: 0 }));
        v
    }

    /// Seeded lattice: spectral parameters drawn from `lambda_box`, fixed
    /// random spins on the top, right and left edges and summed bottom
    /// edges, with a charge that admits insertions of either sign.
    pub fn seeded(n_cols: usize, n_rows: usize, seed: u64, lambda_box: ComplexBox, params: ModelParams) -> Result<Self> {
        if n_cols < 2 || n_rows == 0 {
            return Err(Error::SizeError("seeded lattices need n_cols >= 2 and n_rows >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let col_lambdas: Vec<C64> = (0..n_cols).map(|_| lambda_box.draw(&mut rng)).collect();
        let row_lambdas: Vec<C64> = (0..n_rows).map(|_| lambda_box.draw(&mut rng)).collect();
        for _ in 0..256 {
            let top: Vec<i8> = (0..n_cols).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let right: Vec<i8> = (0..n_rows).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let left: Vec<i8> = (0..n_rows).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let plus = |v: &[i8]| v.iter().filter(|s| **s == 1).count() as i64;
            let bottom_plus = plus(&top) + plus(&right) - plus(&left);
            if bottom_plus >= 1 && bottom_plus < n_cols as i64 {
                let mut boundary: Vec<BoundarySpin> = Vec::new();
                boundary.extend(top.iter().map(|s| BoundarySpin::Fixed(*s)));
                boundary.extend(right.iter().map(|s| BoundarySpin::Fixed(*s)));
                boundary.extend((0..n_cols).map(|_| BoundarySpin::Summed));
                boundary.extend(left.iter().map(|s| BoundarySpin::Fixed(*s)));
                return Self::new(col_lambdas, row_lambdas, boundary, params);
            }
        }
        Err(Error::SamplingError("no admissible boundary found".into()))
    }

    fn edge_index(&self, e: EdgeId) -> usize {
        match e {
            EdgeId::V { x, k } => (x - 1) * (self.n_rows + 1) + k,
            EdgeId::H { y, k } => self.n_cols * (self.n_rows + 1) + (y - 1) * (self.n_cols + 1) + k,
        }
    }

    fn boundary_of(&self) -> Vec<Option<BoundarySpin>> {
        let mut out = vec![None; self.n_edges()];
        for (e, b) in self.external_edges().into_iter().zip(&self.boundary) {
            out[self.edge_index(e)] = Some(*b);
        }
        out
    }
}

fn spin_index(s: i8) -> usize {
    if s == 1 {
        0
    } else {
        1
    }
}

/// Vertex weights `[a, b, c] = [sinh(u+η), sinh u, sinh η]`, `u = λ_col - λ_row`.
fn vertex_abc(spec: &VertexLatticeSpec, x: usize, y: usize) -> [C64; 3] {
    let u = spec.col_lambdas[x - 1] - spec.row_lambdas[y - 1];
    let eta = spec.params.eta;
    [(u + eta).sinh(), u.sinh(), eta.sinh()]
}

#[inline]
fn vertex_weight(abc: &[C64; 3], top: usize, right: usize, bottom: usize, left: usize) -> C64 {
    if top + right != bottom + left {
        ZERO
    } else if top == right {
        abc[0]
    } else if top == bottom {
        abc[1]
    } else {
        abc[2]
    }
}

struct VertexSlot {
    abc: [C64; 3],
    top: usize,
    right: usize,
    bottom: usize,
    left: usize,
}

/// Depth-first enumeration of edge configurations, vertex by vertex from
/// the top-right corner; zero-weight branches are pruned by the ice rule.
struct Enumerator {
    vertices: Vec<VertexSlot>,
    boundary: Vec<Option<BoundarySpin>>,
    edge_factor: Vec<[C64; 2]>,
    insertion: Option<(usize, Mat2)>,
    spins: Vec<usize>,
    sum: C64,
    abs_sum: f64,
}

impl Enumerator {
    fn new(spec: &VertexLatticeSpec) -> Self {
        let mut vertices = Vec::with_capacity(spec.n_cols * spec.n_rows);
        for y in (1..=spec.n_rows).rev() {
            for x in (1..=spec.n_cols).rev() {
                vertices.push(VertexSlot {
                    abc: vertex_abc(spec, x, y),
                    top: spec.edge_index(EdgeId::V { x, k: y }),
                    right: spec.edge_index(EdgeId::H { y, k: x }),
                    bottom: spec.edge_index(EdgeId::V { x, k: y - 1 }),
                    left: spec.edge_index(EdgeId::H { y, k: x - 1 }),
                });
            }
        }
        Self {
            vertices,
            boundary: spec.boundary_of(),
            edge_factor: vec![[ONE, ONE]; spec.n_edges()],
            insertion: None,
            spins: vec![0; spec.n_edges()],
            sum: ZERO,
            abs_sum: 0.0,
        }
    }

    /// Options for an input edge: `(spin seen by the vertex, weight)`.
    fn input_options(&self, e: usize, out: &mut [(usize, C64); 2]) -> usize {
        match self.boundary[e] {
            Some(BoundarySpin::Fixed(s)) => {
                let s = spin_index(s);
                out[0] = (s, self.edge_factor[e][s]);
                1
            }
            Some(BoundarySpin::Summed) => {
                out[0] = (0, self.edge_factor[e][0]);
                out[1] = (1, self.edge_factor[e][1]);
                2
            }
            None => match self.insertion {
                Some((ie, m)) if ie == e => {
                    let s_in = self.spins[e];
                    let mut n = 0;
                    for s_out in 0..2 {
                        if m[s_out][s_in] != ZERO {
                            out[n] = (s_out, m[s_out][s_in]);
                            n += 1;
                        }
                    }
                    n
                }
                _ => {
                    out[0] = (self.spins[e], ONE);
                    1
                }
            },
        }
    }

    fn output_ok(&self, e: usize, s: usize) -> bool {
        match self.boundary[e] {
            Some(BoundarySpin::Fixed(f)) => spin_index(f) == s,
            _ => true,
        }
    }

    fn run(&mut self, vi: usize, acc: C64) {
        if acc == ZERO {
            return;
        }
        if vi == self.vertices.len() {
            self.sum += acc;
            self.abs_sum += acc.norm();
            return;
        }
        let (top, right, bottom, left, abc) = {
            let v = &self.vertices[vi];
            (v.top, v.right, v.bottom, v.left, v.abc)
        };
        let mut tops = [(0, ZERO); 2];
        let mut rights = [(0, ZERO); 2];
        let nt = self.input_options(top, &mut tops);
        let nr = self.input_options(right, &mut rights);
        for &(ts, tw) in &tops[..nt] {
            for &(rs, rw) in &rights[..nr] {
                for bs in 0..2 {
                    let Some(ls) = (ts + rs).checked_sub(bs) else { continue };
                    if ls > 1 || !self.output_ok(bottom, bs) || !self.output_ok(left, ls) {
                        continue;
                    }
                    let w = vertex_weight(&abc, ts, rs, bs, ls)
                        * tw
                        * rw
                        * self.edge_factor[bottom][bs]
                        * self.edge_factor[left][ls];
                    self.spins[bottom] = bs;
                    self.spins[left] = ls;
                    self.run(vi + 1, acc * w);
                }
            }
        }
    }
}

fn check_size(spec: &VertexLatticeSpec) -> Result<()> {
    spec.validate()?;
    if spec.n_edges() > MAX_EDGES {
        return Err(Error::SizeError(format!("{} edges, enumeration allows {MAX_EDGES}", spec.n_edges())));
    }
    Ok(())
}

/// Unnormalised configuration sum with an optional current insertion,
/// together with the sum of absolute values of its terms.
pub fn configuration_sum(spec: &VertexLatticeSpec, ins: Option<&CurrentInsertion>) -> Result<(C64, f64)> {
    configuration_sum_weighted(spec, &[], ins)
}

/// [`configuration_sum`] with extra per-edge factors `[w(+), w(-)]`, used to
/// dress boundary edges.
pub fn configuration_sum_weighted(
    spec: &VertexLatticeSpec,
    edge_weights: &[(EdgeId, [C64; 2])],
    ins: Option<&CurrentInsertion>,
) -> Result<(C64, f64)> {
    check_size(spec)?;
    let mut en = Enumerator::new(spec);
    for (e, w) in edge_weights {
        if !e.in_range(spec.n_cols, spec.n_rows) {
            return Err(Error::GeometryError(format!("edge {e:?} outside the lattice")));
        }
        let ei = spec.edge_index(*e);
        en.edge_factor[ei][0] *= w[0];
        en.edge_factor[ei][1] *= w[1];
    }
    if let Some(ins) = ins {
        ins.tail.validate(spec.n_cols, spec.n_rows)?;
        let index = ins.gen.index();
        for (e, s) in ins.tail.crossings() {
            let ei = spec.edge_index(e);
            for spin in 0..2 {
                en.edge_factor[ei][spin] *= t_entry(index, spec.params.eta, s.uses_inverse(), spin);
            }
        }
        let lam = match ins.tail.insertion {
            EdgeId::V { x, .. } => spec.col_lambdas[x - 1],
            EdgeId::H { y, .. } => spec.row_lambdas[y - 1],
        };
        en.insertion = Some((spec.edge_index(ins.tail.insertion), generator_mat(ins.gen, lam, spec.params.eta)));
    }
    en.run(0, ONE);
    Ok((en.sum, en.abs_sum))
}

/// Partition function by row-to-row transfer.
pub fn partition_function_transfer(spec: &VertexLatticeSpec) -> Result<C64> {
    spec.validate()?;
    let (c, r) = (spec.n_cols, spec.n_rows);
    if c > 12 {
        return Err(Error::SizeError(format!("transfer over {c} columns")));
    }
    let bnd = spec.boundary_of();
    let allowed = |e: EdgeId, s: usize| match bnd[spec.edge_index(e)] {
        Some(BoundarySpin::Fixed(f)) => spin_index(f) == s,
        _ => true,
    };
    let n_states = 1usize << c;
    // Bit x-1 of a state is the spin on column x.
    let mut vec_state = vec![ZERO; n_states];
    for (state, v) in vec_state.iter_mut().enumerate() {
        if (1..=c).all(|x| allowed(EdgeId::V { x, k: r }, (state >> (x - 1)) & 1)) {
            *v = ONE;
        }
    }
    for y in (1..=r).rev() {
        let mut next = vec![ZERO; n_states];
        for (top, &wt) in vec_state.iter().enumerate() {
            if wt == ZERO {
                continue;
            }
            // partial[bottom bits | h << c]
            let mut partial = vec![ZERO; n_states << 1];
            for h in 0..2 {
                if allowed(EdgeId::H { y, k: c }, h) {
                    partial[h << c] = wt;
                }
            }
            for x in (1..=c).rev() {
                let abc = vertex_abc(spec, x, y);
                let ts = (top >> (x - 1)) & 1;
                let mut np = vec![ZERO; n_states << 1];
                for (key, &w) in partial.iter().enumerate() {
                    if w == ZERO {
                        continue;
                    }
                    let rs = key >> c;
                    let bits = key & (n_states - 1);
                    for bs in 0..2 {
                        for ls in 0..2 {
                            let vw = vertex_weight(&abc, ts, rs, bs, ls);
                            if vw == ZERO {
                                continue;
                            }
                            np[(bits | (bs << (x - 1))) | (ls << c)] += w * vw;
                        }
                    }
                }
                partial = np;
            }
            for (key, &w) in partial.iter().enumerate() {
                if w != ZERO && allowed(EdgeId::H { y, k: 0 }, key >> c) {
                    next[key & (n_states - 1)] += w;
                }
            }
        }
        vec_state = next;
    }
    let mut z = ZERO;
    for (state, &w) in vec_state.iter().enumerate() {
        if (1..=c).all(|x| allowed(EdgeId::V { x, k: 0 }, (state >> (x - 1)) & 1)) {
            z += w;
        }
    }
    Ok(z)
}

/// Partition function by enumeration, cross-checked against the transfer
/// evaluation.
pub fn partition_function(spec: &VertexLatticeSpec) -> Result<C64> {
    let (z, abs_sum) = configuration_sum(spec, None)?;
    let zt = partition_function_transfer(spec)?;
    let tol = spec.params.tol.abs_tol * (1.0 + abs_sum);
    if (z - zt).norm() > tol {
        return Err(Error::InternalInconsistency(format!("enumeration {z} vs transfer {zt}")));
    }
    Ok(z)
}

/// `⟨j⟩`: the configuration sum with insertion divided by `Z`.
pub fn current_expectation(spec: &VertexLatticeSpec, ins: &CurrentInsertion) -> Result<C64> {
    let z = partition_function(spec)?;
    let (_, abs_z) = configuration_sum(spec, None)?;
    if abs_z == 0.0 || z.norm() <= 1e-12 * abs_z {
        return Err(Error::DegenerateNormalization(format!("Z = {z}")));
    }
    let (s, _) = configuration_sum(spec, Some(ins))?;
    Ok(s / z)
}

/// The four tails around vertex `(x, y)` in the order `r1` (top), `r2`
/// (left), `r3` (bottom), `r4` (right). They share a path from `anchor` to
/// the south-east face that crosses none of the vertex's edges and stays out
/// of the north-east and south-west faces, so no tail visits a face twice.
pub fn plaquette_tails(n_cols: usize, n_rows: usize, x: usize, y: usize, anchor: Face) -> Result<[TailPath; 4]> {
    if !(1..=n_cols).contains(&x) || !(1..=n_rows).contains(&y) {
        return Err(Error::GeometryError(format!("no vertex ({x}, {y})")));
    }
    let top = EdgeId::V { x, k: y };
    let left = EdgeId::H { y, k: x - 1 };
    let bottom = EdgeId::V { x, k: y - 1 };
    let right = EdgeId::H { y, k: x };
    let around = [top, left, bottom, right];
    if around.iter().any(|e| e.is_external(n_cols, n_rows)) {
        return Err(Error::GeometryError(format!("vertex ({x}, {y}) is not interior")));
    }
    let mut avoid = around.to_vec();
    avoid.extend([EdgeId::H { y: y + 1, k: x }, EdgeId::V { x: x + 1, k: y }]);
    avoid.extend([EdgeId::V { x: x - 1, k: y - 1 }, EdgeId::H { y: y - 1, k: x - 1 }]);
    let base = shortest_tail(anchor, bottom, 0, n_cols, n_rows, &avoid)
        .or_else(|_| shortest_tail(anchor, bottom, 1, n_cols, n_rows, &avoid))
        .or_else(|_| shortest_tail(anchor, bottom, -1, n_cols, n_rows, &avoid))?;
    let with = |extra: Option<Step>, edge: EdgeId| -> Result<TailPath> {
        let mut steps = base.steps.clone();
        steps.extend(extra);
        TailPath::new(anchor, steps, edge)
    };
    Ok([with(Some(Step::Up), top)?, with(Some(Step::Left), left)?, with(None, bottom)?, with(None, right)?])
}

/// [`plaquette_tails`] carrying the generator `gen`.
pub fn plaquette_family(
    spec: &VertexLatticeSpec,
    x: usize,
    y: usize,
    gen: GeneratorId,
    anchor: Face,
) -> Result<[CurrentInsertion; 4]> {
    let [a, b, c, d] = plaquette_tails(spec.n_cols, spec.n_rows, x, y, anchor)?;
    Ok([
        CurrentInsertion::new(gen, a)?,
        CurrentInsertion::new(gen, b)?,
        CurrentInsertion::new(gen, c)?,
        CurrentInsertion::new(gen, d)?,
    ])
}

/// Residual `|j(r1) - j(r2) - j(r3) + j(r4)| / max|j(r_k)|` for four
/// insertions around one vertex in the order of [`plaquette_family`].
pub fn check_plaquette_conservation(spec: &VertexLatticeSpec, family: &[CurrentInsertion; 4]) -> Result<f64> {
    let edges: Vec<EdgeId> = family.iter().map(|i| i.tail.insertion).collect();
    let (x, y) = match edges[0] {
        EdgeId::V { x, k } => (x, k),
        _ => return Err(Error::GeometryError("r1 must be the top edge of a vertex".into())),
    };
    let expected = [EdgeId::V { x, k: y }, EdgeId::H { y, k: x - 1 }, EdgeId::V { x, k: y - 1 }, EdgeId::H { y, k: x }];
    if y == 0 || edges[..] != expected[..] {
        return Err(Error::GeometryError("insertion points do not surround a single vertex".into()));
    }
    if family.iter().any(|i| i.gen != family[0].gen) {
        return Err(Error::ArgError("mixed generators in a plaquette family".into()));
    }
    let mut j = [ZERO; 4];
    for (slot, ins) in j.iter_mut().zip(family) {
        *slot = current_expectation(spec, ins)?;
    }
    let total = j[0] - j[1] - j[2] + j[3];
    let scale = j.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(if scale == 0.0 { total.norm() } else { total.norm() / scale })
}

/// Residual of `⟨original⟩ = c ⟨unwound⟩`.
pub fn check_unwinding(spec: &VertexLatticeSpec, ins: &CurrentInsertion) -> Result<f64> {
    let (unwound, factor) = unwind(ins, spec.params.eta)?;
    let lhs = current_expectation(spec, ins)?;
    let rhs = current_expectation(spec, &unwound)? * factor;
    Ok(scalar_residual(lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec3() -> VertexLatticeSpec {
        VertexLatticeSpec::seeded(3, 3, 11, ComplexBox::default(), ModelParams::default()).unwrap()
    }

    #[test]
    fn one_by_one_all_plus() {
        let p = ModelParams::default();
        let (lc, lr) = (c64(0.3, 0.1), c64(-0.2, 0.4));
        let spec = VertexLatticeSpec::new(vec![lc], vec![lr], vec![BoundarySpin::Fixed(1); 4], p).unwrap();
        let z = partition_function(&spec).unwrap();
        assert!((z - (lc - lr + p.eta).sinh()).norm() < 1e-15);
    }

    #[test]
    fn two_by_two_all_plus_is_product() {
        let p = ModelParams::default();
        let cols = vec![c64(0.3, 0.1), c64(-0.5, 0.2)];
        let rows = vec![c64(-0.2, 0.4), c64(0.1, -0.3)];
        let spec = VertexLatticeSpec::new(cols.clone(), rows.clone(), vec![BoundarySpin::Fixed(1); 8], p).unwrap();
        let mut expected = ONE;
        for lc in &cols {
            for lr in &rows {
                expected *= (lc - lr + p.eta).sinh();
            }
        }
        assert!(scalar_residual(partition_function(&spec).unwrap(), expected) < 1e-14);
    }

    #[test]
    fn domain_wall_two_strategies() {
        let p = ModelParams::default();
        let s = |v: i8| BoundarySpin::Fixed(v);
        let boundary = vec![s(1), s(1), s(-1), s(-1), s(-1), s(-1), s(1), s(1)];
        let spec = VertexLatticeSpec::new(vec![c64(0.3, 0.1), c64(-0.5, 0.2)], vec![c64(-0.2, 0.4), c64(0.1, -0.3)], boundary, p)
            .unwrap();
        let (z, _) = configuration_sum(&spec, None).unwrap();
        let zt = partition_function_transfer(&spec).unwrap();
        assert!(z.norm() > 1e-3);
        assert!((z - zt).norm() <= 1e-12);
    }

    #[test]
    fn zero_boundary_is_degenerate() {
        let spec = VertexLatticeSpec::new(
            vec![c64(0.3, 0.0), c64(0.1, 0.0)],
            vec![c64(0.2, 0.0), c64(-0.1, 0.0)],
            vec![BoundarySpin::Fixed(1), BoundarySpin::Fixed(1), BoundarySpin::Fixed(1), BoundarySpin::Fixed(1),
                 BoundarySpin::Fixed(-1), BoundarySpin::Fixed(-1), BoundarySpin::Fixed(1), BoundarySpin::Fixed(1)],
            ModelParams::default(),
        )
        .unwrap();
        let fam = plaquette_family(&spec, 1, 1, GeneratorId::f(0), Face::new(2, 0));
        assert!(fam.is_err());
        let ins = CurrentInsertion::new(
            GeneratorId::f(1),
            TailPath::from_str_steps(Face::new(1, 0), "U", EdgeId::V { x: 1, k: 1 }).unwrap(),
        )
        .unwrap();
        assert!(matches!(current_expectation(&spec, &ins), Err(Error::DegenerateNormalization(_))));
    }

    #[test]
    fn tail_validation() {
        let ins = EdgeId::V { x: 2, k: 1 };
        assert!(TailPath::from_str_steps(Face::new(2, 0), "U", ins).is_ok());
        assert!(TailPath::from_str_steps(Face::new(2, 0), "UD U", ins).is_err());
        assert!(TailPath::from_str_steps(Face::new(2, 0), "UDU", ins).is_err());
        assert!(TailPath::from_str_steps(Face::new(1, 0), "UR", ins).is_err());
        assert!(TailPath::from_str_steps(Face::new(3, 1), "L", ins).is_ok());
        assert_eq!(TailPath::from_str_steps(Face::new(2, 0), "U", ins).unwrap().winding(), 0);
    }

    #[test]
    fn winding_numbers() {
        let ins = EdgeId::V { x: 1, k: 1 };
        let ccw = TailPath::from_str_steps(Face::new(0, 2), "DDRU", ins).unwrap();
        assert_eq!(ccw.winding(), 1);
        let straight = TailPath::from_str_steps(Face::new(0, 2), "RD", ins).unwrap();
        assert_eq!(straight.winding(), 0);
        let cw = TailPath::from_str_steps(Face::new(0, 0), "UURD", ins).unwrap();
        assert_eq!(cw.winding(), -1);
    }

    #[test]
    fn conservation_central_vertex() {
        let spec = spec3();
        for gen in [GeneratorId::f(0), GeneratorId::f(1), GeneratorId::f_bar(0), GeneratorId::f_bar(1)] {
            let fam = plaquette_family(&spec, 2, 2, gen, Face::new(2, 0)).unwrap();
            let nonzero = fam.iter().filter(|i| current_expectation(&spec, i).unwrap().norm() > 1e-6).count();
            assert!(nonzero >= 2 || matches!(gen.kind(), GeneratorKind::F) == (gen.index() == 1));
            let r = check_plaquette_conservation(&spec, &fam).unwrap();
            assert!(r <= 1e-9, "{gen:?}: {r}");
        }
    }

    #[test]
    fn path_independence_and_unwinding() {
        let spec = spec3();
        let ins = EdgeId::V { x: 2, k: 1 };
        let a = TailPath::from_str_steps(Face::new(2, 0), "U", ins).unwrap();
        let b = TailPath::from_str_steps(Face::new(2, 0), "RUL", ins).unwrap();
        assert_eq!(b.winding(), 0);
        let gen = GeneratorId::f(0);
        let ja = current_expectation(&spec, &CurrentInsertion::new(gen, a).unwrap()).unwrap();
        let jb = current_expectation(&spec, &CurrentInsertion::new(gen, b).unwrap()).unwrap();
        assert!(ja.norm() > 1e-6);
        assert!(scalar_residual(ja, jb) <= 1e-10);
        for gen in [GeneratorId::f(0), GeneratorId::f_bar(1)] {
            let looped = TailPath::from_str_steps(Face::new(0, 0), "RRUULLDR", EdgeId::H { y: 2, k: 1 }).unwrap();
            assert_eq!(looped.winding(), 1);
            let ins = CurrentInsertion::new(gen, looped).unwrap();
            assert!(current_expectation(&spec, &ins).unwrap().norm() > 1e-6);
            assert!(check_unwinding(&spec, &ins).unwrap() <= 1e-10, "{gen:?}");
        }
    }
}
