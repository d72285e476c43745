//! Baxter intertwiners, trigonometric SOS face weights and the
//! vertex-face correspondence.
//!
//! Heights are integer offsets `k` standing for `a = x0 + k`. In cyclic
//! mode they are residues modulo `n`.
//!
//! On a line, `ψ(a, b)` puts `a` on the right-hand side of the traveller:
//! west then east on a downward line, north then south on a leftward one.
//! `W(a, b, c, d)` lists the heights NW, NE, SE, SW around a face.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{c64, residual, scalar_residual, ComplexTensor, C64};
use crate::vertex_lattice::{configuration_sum_weighted, BoundarySpin, EdgeId, Face, VertexLatticeSpec};
use crate::vertex_weights::{r_entry, ModelParams};

const ZERO: C64 = c64(0.0, 0.0);
const ONE: C64 = c64(1.0, 0.0);

/// Largest SOS lattice, in faces, accepted by the enumeration.
pub const MAX_FACES: usize = 16;

/// `x0 + k`.
pub fn height_value(k: i64, params: &ModelParams) -> C64 {
    params.x0 + k as f64
}

/// `sinh((x0 + k) η)`, rejected when closer to zero than the guard.
pub fn sinh_height(k: i64, params: &ModelParams) -> Result<C64> {
    let s = (height_value(k, params) * params.eta).sinh();
    if s.norm() <= params.tol.singularity_guard {
        return Err(Error::SingularHeight(format!("|sinh(({})η)| = {:e}", height_value(k, params), s.norm())));
    }
    Ok(s)
}

/// Which intertwiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntertwinerKind {
    /// Column vector `ψ(a, b)`.
    Psi,
    /// Row vector `ψ*(a, b)`.
    PsiStar,
    /// Row vector `ψ'(a, b) = sinh(aη)/sinh(bη) ψ*(a, b) e^{ησ^z}`.
    PsiPrime,
}

fn unit_step(a: i64, b: i64) -> Result<f64> {
    match b - a {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::ArgError(format!("heights {a}, {b} are not adjacent"))),
    }
}

/// Components `[+, -]` of an intertwiner.
pub fn intertwiner(kind: IntertwinerKind, a: i64, b: i64, lambda: C64, params: &ModelParams) -> Result<[C64; 2]> {
    let pm = unit_step(a, b)?;
    let eta = params.eta;
    let ae = height_value(a, params) * eta;
    match kind {
        IntertwinerKind::Psi => Ok([((-lambda + pm * ae) / 2.0).exp(), ((lambda - pm * ae) / 2.0).exp()]),
        IntertwinerKind::PsiStar => {
            let pre = pm / (2.0 * sinh_height(a, params)?);
            Ok([pre * ((lambda + pm * ae) / 2.0).exp(), -pre * ((-lambda - pm * ae) / 2.0).exp()])
        }
        IntertwinerKind::PsiPrime => {
            let star = intertwiner(IntertwinerKind::PsiStar, a, b, lambda, params)?;
            let ratio = sinh_height(a, params)? / sinh_height(b, params)?;
            Ok([ratio * star[0] * eta.exp(), ratio * star[1] * (-eta).exp()])
        }
    }
}

/// Face weight `W(a, b, c, d | λ)`; zero for inadmissible quadruples.
pub fn face_weight(a: i64, b: i64, c: i64, d: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    let adj = |x: i64, y: i64| (x - y).abs() == 1;
    if !(adj(a, b) && adj(b, c) && adj(c, d) && adj(d, a)) {
        return Ok(ZERO);
    }
    let pm = (b - a) as f64;
    let eta = params.eta;
    if c == a + 2 * (b - a) {
        return Ok((lambda + eta).sinh());
    }
    let sa = sinh_height(a, params)?;
    let ae = height_value(a, params) * eta;
    if d == b {
        Ok(eta.sinh() * (ae - pm * lambda).sinh() / sa)
    } else {
        Ok(lambda.sinh() * (ae + pm * eta).sinh() / sa)
    }
}

/// Face weight with heights read modulo `n`.
pub fn face_weight_cyclic(a: i64, b: i64, c: i64, d: i64, n: i64, lambda: C64, params: &ModelParams) -> Result<C64> {
    let step = |x: i64, y: i64| -> Option<i64> {
        match (y - x).rem_euclid(n) {
            1 => Some(1),
            r if r == n - 1 => Some(-1),
            _ => None,
        }
    };
    let a0 = a.rem_euclid(n);
    let (Some(sb), Some(sc), Some(sd), Some(_)) = (step(a, b), step(b, c), step(a, d), step(d, c)) else {
        return Ok(ZERO);
    };
    face_weight(a0, a0 + sb, a0 + sb + sc, a0 + sd, lambda, params)
}

fn kron2(u: &[C64; 2], v: &[C64; 2]) -> [C64; 4] {
    [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]]
}

fn r_apply(lambda: C64, eta: C64, v: &[C64; 4]) -> [C64; 4] {
    let mut out = [ZERO; 4];
    for (row, o) in out.iter_mut().enumerate() {
        for (col, x) in v.iter().enumerate() {
            *o += r_entry(lambda, eta, row >> 1, row & 1, col >> 1, col & 1) * x;
        }
    }
    out
}

fn r_apply_left(lambda: C64, eta: C64, v: &[C64; 4]) -> [C64; 4] {
    let mut out = [ZERO; 4];
    for (col, o) in out.iter_mut().enumerate() {
        for (row, x) in v.iter().enumerate() {
            *o += x * r_entry(lambda, eta, row >> 1, row & 1, col >> 1, col & 1);
        }
    }
    out
}

fn vec_residual(lhs: &[C64], rhs: &[C64]) -> f64 {
    let l = ComplexTensor::vector(lhs);
    let r = ComplexTensor::vector(rhs);
    residual(&l, &r).expect("same length")
}

/// Residual of the vertex-face relation. Direction 1 takes `(a, b, c)`
/// and sums over `d`; direction 2 takes `(a, d, c)` and sums over `b`.
pub fn check_virf(direction: u8, a: i64, mid: i64, c: i64, l1: C64, l2: C64, params: &ModelParams) -> Result<f64> {
    use IntertwinerKind::*;
    let eta = params.eta;
    let l12 = l1 - l2;
    let mut rhs = [ZERO; 4];
    match direction {
        1 => {
            let b = mid;
            let lhs = r_apply(l12, eta, &kron2(&intertwiner(Psi, a, b, l1, params)?, &intertwiner(Psi, b, c, l2, params)?));
            for d in [a - 1, a + 1] {
                if (d - c).abs() != 1 {
                    continue;
                }
                let w = face_weight(a, b, c, d, l12, params)?;
                let t = kron2(&intertwiner(Psi, d, c, l1, params)?, &intertwiner(Psi, a, d, l2, params)?);
                for k in 0..4 {
                    rhs[k] += t[k] * w;
                }
            }
            Ok(vec_residual(&lhs, &rhs))
        }
        2 => {
            let d = mid;
            let lhs = r_apply_left(
                l12,
                eta,
                &kron2(&intertwiner(PsiStar, d, c, l1, params)?, &intertwiner(PsiStar, a, d, l2, params)?),
            );
            for b in [a - 1, a + 1] {
                if (b - c).abs() != 1 {
                    continue;
                }
                let w = face_weight(a, b, c, d, l12, params)?;
                let t = kron2(&intertwiner(PsiStar, a, b, l1, params)?, &intertwiner(PsiStar, b, c, l2, params)?);
                for k in 0..4 {
                    rhs[k] += t[k] * w;
                }
            }
            Ok(vec_residual(&lhs, &rhs))
        }
        _ => Err(Error::ArgError(format!("direction {direction} not in {{1,2}}"))),
    }
}

/// The four inversion relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Inversion {
    /// `ψ*(a,c) ψ(a,b) = δ_bc`.
    A,
    /// `Σ_b ψ(a,b) ψ*(a,b) = 1`.
    B,
    /// `ψ'(c,a) ψ(b,a) = δ_bc`.
    C,
    /// `Σ_b ψ(b,a) ψ'(b,a) = 1`.
    D,
}

impl Inversion {
    /// All four relations.
    pub const ALL: [Inversion; 4] = [Inversion::A, Inversion::B, Inversion::C, Inversion::D];
}

fn dot(u: &[C64; 2], v: &[C64; 2]) -> C64 {
    u[0] * v[0] + u[1] * v[1]
}

/// Largest residual of one inversion relation over every neighbour choice
/// around height `a`.
pub fn check_inversions(which: Inversion, a: i64, lambda: C64, params: &ModelParams) -> Result<f64> {
    use IntertwinerKind::*;
    let nb = [a - 1, a + 1];
    let mut worst: f64 = 0.0;
    match which {
        Inversion::A | Inversion::C => {
            for b in nb {
                for c in nb {
                    let v = if which == Inversion::A {
                        dot(&intertwiner(PsiStar, a, c, lambda, params)?, &intertwiner(Psi, a, b, lambda, params)?)
                    } else {
                        dot(&intertwiner(PsiPrime, c, a, lambda, params)?, &intertwiner(Psi, b, a, lambda, params)?)
                    };
                    let target = if b == c { ONE } else { ZERO };
                    worst = worst.max(scalar_residual(target, v));
                }
            }
        }
        Inversion::B | Inversion::D => {
            let mut m = [ZERO; 4];
            for b in nb {
                let (col, row) = if which == Inversion::B {
                    (intertwiner(Psi, a, b, lambda, params)?, intertwiner(PsiStar, a, b, lambda, params)?)
                } else {
                    (intertwiner(Psi, b, a, lambda, params)?, intertwiner(PsiPrime, b, a, lambda, params)?)
                };
                for i in 0..2 {
                    for j in 0..2 {
                        m[2 * i + j] += col[i] * row[j];
                    }
                }
            }
            worst = vec_residual(&m, &[ONE, ZERO, ZERO, ONE]);
        }
    }
    Ok(worst)
}

/// Residual of the face Yang-Baxter equation on the hexagon
/// `(a, b, c, d, e, f)`.
pub fn check_sos_ybe(h: [i64; 6], l1: C64, l2: C64, l3: C64, params: &ModelParams) -> Result<f64> {
    let [a, b, c, d, e, f] = h;
    for k in 0..6 {
        if (h[k] - h[(k + 1) % 6]).abs() != 1 {
            return Err(Error::ArgError(format!("hexagon {h:?} is not admissible")));
        }
    }
    let (l12, l13, l23) = (l1 - l2, l1 - l3, l2 - l3);
    let w = |p: i64, q: i64, r: i64, s: i64, l: C64| face_weight(p, q, r, s, l, params);
    let mut lhs = ZERO;
    let mut rhs = ZERO;
    for g in (a - 3)..=(a + 3) {
        lhs += w(f, g, d, e, l12)? * w(a, b, g, f, l13)? * w(b, c, d, g, l23)?;
        rhs += w(a, g, e, f, l23)? * w(g, c, d, e, l13)? * w(a, b, c, g, l12)?;
    }
    Ok(scalar_residual(lhs, rhs))
}

/// The 20 closed six-step walks starting at `a`.
pub fn admissible_hexagons(a: i64) -> Vec<[i64; 6]> {
    let mut out = Vec::new();
    for mask in 0u32..64 {
        if mask.count_ones() != 3 {
            continue;
        }
        let mut h = [a; 6];
        for k in 1..6 {
            h[k] = h[k - 1] + if mask >> (k - 1) & 1 == 1 { 1 } else { -1 };
        }
        out.push(h);
    }
    out
}

/// Corners of an `n_cols x n_rows` face grid on its perimeter, clockwise
/// from the top-left corner.
pub fn perimeter_corners(n_cols: usize, n_rows: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(2 * (n_cols + n_rows));
    v.extend((0..=n_cols).map(|i| (i, n_rows)));
    v.extend((0..n_rows).rev().map(|j| (n_cols, j)));
    v.extend((0..n_cols).rev().map(|i| (i, 0)));
    v.extend((1..n_rows).map(|j| (0, j)));
    v
}

/// Finite SOS lattice with fixed boundary heights.
#[derive(Debug, Clone, PartialEq)]
pub struct SosLatticeSpec {
    /// Faces per row.
    pub n_cols: usize,
    /// Faces per column.
    pub n_rows: usize,
    /// Spectral parameter of each vertical line.
    pub col_lambdas: Vec<C64>,
    /// Spectral parameter of each horizontal line.
    pub row_lambdas: Vec<C64>,
    /// Boundary heights in the order of [`perimeter_corners`].
    pub boundary: Vec<i64>,
    /// Period of the heights in cyclic mode.
    pub cyclic: Option<u32>,
    /// Model parameters.
    pub params: ModelParams,
}

impl SosLatticeSpec {
    /// Checked constructor.
    pub fn new(
        col_lambdas: Vec<C64>,
        row_lambdas: Vec<C64>,
        boundary: Vec<i64>,
        cyclic: Option<u32>,
        params: ModelParams,
    ) -> Result<Self> {
        let spec = Self { n_cols: col_lambdas.len(), n_rows: row_lambdas.len(), col_lambdas, row_lambdas, boundary, cyclic, params };
        spec.validate()?;
        Ok(spec)
    }

    /// SOS lattice whose faces are the vertices of `vspec`.
    pub fn from_vertex_lattice(vspec: &VertexLatticeSpec, boundary: Vec<i64>) -> Result<Self> {
        Self::new(vspec.col_lambdas.clone(), vspec.row_lambdas.clone(), boundary, None, vspec.params)
    }

    fn validate(&self) -> Result<()> {
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::SizeError("SOS lattice needs at least one face".into()));
        }
        if let Some(n) = self.cyclic {
            if n < 3 {
                return Err(Error::ArgError(format!("cyclic period {n} below 3")));
            }
        }
        let per = perimeter_corners(self.n_cols, self.n_rows);
        if self.boundary.len() != per.len() {
            return Err(Error::ShapeError(format!("expected {} boundary heights, got {}", per.len(), self.boundary.len())));
        }
        for k in 0..per.len() {
            if !self.adjacent(self.boundary[k], self.boundary[(k + 1) % per.len()]) {
                return Err(Error::ArgError(format!("boundary heights {:?} do not form an admissible walk", self.boundary)));
            }
        }
        Ok(())
    }

    /// Whether two heights may sit on neighbouring corners.
    pub fn adjacent(&self, a: i64, b: i64) -> bool {
        match self.cyclic {
            None => (a - b).abs() == 1,
            Some(n) => {
                let r = (a - b).rem_euclid(n as i64);
                r == 1 || r == n as i64 - 1
            }
        }
    }

    fn normalise(&self, a: i64) -> i64 {
        match self.cyclic {
            None => a,
            Some(n) => a.rem_euclid(n as i64),
        }
    }

    /// Face weight of face `(i, j)`, `1 <= i <= n_cols`, `1 <= j <= n_rows`.
    pub fn weight(&self, i: usize, j: usize, nw: i64, ne: i64, se: i64, sw: i64) -> Result<C64> {
        let l = self.col_lambdas[i - 1] - self.row_lambdas[j - 1];
        match self.cyclic {
            None => face_weight(nw, ne, se, sw, l, &self.params),
            Some(n) => face_weight_cyclic(nw, ne, se, sw, n as i64, l, &self.params),
        }
    }

    fn corner_grid(&self) -> Vec<Option<i64>> {
        let w = self.n_cols + 1;
        let mut g = vec![None; w * (self.n_rows + 1)];
        for ((i, j), h) in perimeter_corners(self.n_cols, self.n_rows).into_iter().zip(&self.boundary) {
            g[j * w + i] = Some(self.normalise(*h));
        }
        g
    }

    /// Every admissible filling of the interior corners, as full grids
    /// indexed `j * (n_cols + 1) + i`.
    pub fn configurations(&self) -> Result<Vec<Vec<i64>>> {
        if self.n_cols * self.n_rows > MAX_FACES {
            return Err(Error::SizeError(format!("{} faces, enumeration allows {MAX_FACES}", self.n_cols * self.n_rows)));
        }
        let w = self.n_cols + 1;
        let grid = self.corner_grid();
        let interior: Vec<usize> = (1..self.n_rows)
            .rev()
            .flat_map(|j| (1..self.n_cols).map(move |i| j * w + i))
            .collect();
        let mut out = Vec::new();
        let mut cur: Vec<i64> = grid.iter().map(|h| h.unwrap_or(0)).collect();
        self.fill(&interior, 0, &mut cur, &mut out);
        Ok(out)
    }

    fn fill(&self, interior: &[usize], k: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        let w = self.n_cols + 1;
        if k == interior.len() {
            let ok = interior.iter().all(|&p| self.adjacent(cur[p], cur[p + 1]) && self.adjacent(cur[p], cur[p - w]));
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        let p = interior[k];
        let up = cur[p + w];
        for h in [up - 1, up + 1] {
            let h = self.normalise(h);
            if self.adjacent(h, cur[p - 1]) {
                cur[p] = h;
                self.fill(interior, k + 1, cur, out);
            }
        }
    }

    /// Product of the face weights of one full grid of heights.
    pub fn configuration_weight(&self, grid: &[i64]) -> Result<C64> {
        let w = self.n_cols + 1;
        let mut prod = ONE;
        for j in 1..=self.n_rows {
            for i in 1..=self.n_cols {
                let h = |ii: usize, jj: usize| grid[jj * w + ii];
                prod *= self.weight(i, j, h(i - 1, j), h(i, j), h(i, j - 1), h(i - 1, j - 1))?;
            }
        }
        Ok(prod)
    }
}

/// Partition function by row-to-row transfer over height rows.
pub fn sos_partition_function_transfer(spec: &SosLatticeSpec) -> Result<C64> {
    let w = spec.n_cols + 1;
    let grid = spec.corner_grid();
    let fixed = |i: usize, j: usize| grid[j * w + i];
    let top: Vec<i64> = (0..w).map(|i| fixed(i, spec.n_rows).expect("boundary")).collect();
    let mut states: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
    states.insert(top, ONE);
    for j in (1..=spec.n_rows).rev() {
        let lower = j - 1;
        let mut next: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
        for (upper, wt) in &states {
            let mut rows: Vec<Vec<i64>> = vec![vec![fixed(0, lower).expect("boundary")]];
            for i in 1..w {
                let mut grown = Vec::new();
                for r in &rows {
                    let last = *r.last().expect("non-empty");
                    let candidates: Vec<i64> = match fixed(i, lower) {
                        Some(h) if lower == 0 || i == w - 1 => vec![h],
                        _ => vec![spec.normalise(last - 1), spec.normalise(last + 1)],
                    };
                    for h in candidates {
                        if spec.adjacent(h, last) && spec.adjacent(h, upper[i]) {
                            let mut r2 = r.clone();
                            r2.push(h);
                            grown.push(r2);
                        }
                    }
                }
                rows = grown;
            }
            for r in rows {
                let mut prod = *wt;
                for i in 1..w {
                    prod *= spec.weight(i, j, upper[i - 1], upper[i], r[i], r[i - 1])?;
                }
                *next.entry(r).or_insert(ZERO) += prod;
            }
        }
        states = next;
    }
    Ok(states.values().copied().sum())
}

/// Partition function by enumeration, cross-checked against the row
/// transfer.
pub fn sos_partition_function(spec: &SosLatticeSpec) -> Result<C64> {
    let mut z = ZERO;
    let mut abs_sum = 0.0;
    for g in spec.configurations()? {
        let v = spec.configuration_weight(&g)?;
        z += v;
        abs_sum += v.norm();
    }
    let zt = sos_partition_function_transfer(spec)?;
    if (z - zt).norm() > spec.params.tol.abs_tol * (1.0 + abs_sum) {
        return Err(Error::InternalInconsistency(format!("enumeration {z} vs transfer {zt}")));
    }
    Ok(z)
}

/// Outer faces of the outgoing boundary arc, from the top-left corner down
/// the left side and along the bottom.
pub fn outgoing_arc(n_cols: usize, n_rows: usize) -> Vec<Face> {
    let mut v: Vec<Face> = (0..=n_rows).rev().map(|fy| Face::new(0, fy)).collect();
    v.extend((1..=n_cols).map(|fx| Face::new(fx, 0)));
    v
}

/// Boundary height of an outer face.
pub fn boundary_height(n_cols: usize, n_rows: usize, boundary: &[i64], f: Face) -> Option<i64> {
    perimeter_corners(n_cols, n_rows).iter().position(|&(i, j)| i == f.fx && j == f.fy).map(|k| boundary[k])
}

/// Intertwiner weights on the external edges of a vertex lattice: `ψ` on
/// incoming edges, `ψ*` on outgoing edges before `switch` along
/// [`outgoing_arc`] and `ψ'` after it.
pub fn boundary_dressing(vspec: &VertexLatticeSpec, boundary: &[i64], switch: Face) -> Result<Vec<(EdgeId, [C64; 2])>> {
    use IntertwinerKind::*;
    let (c, r) = (vspec.n_cols, vspec.n_rows);
    let p = &vspec.params;
    let h = |f: Face| {
        boundary_height(c, r, boundary, f).ok_or_else(|| Error::GeometryError(format!("{f:?} is not an outer face")))
    };
    let arc = outgoing_arc(c, r);
    let switch_at = arc
        .iter()
        .position(|f| *f == switch)
        .ok_or_else(|| Error::GeometryError(format!("{switch:?} is not on the outgoing boundary arc")))?;
    let mut out = Vec::with_capacity(2 * (c + r));
    for x in 1..=c {
        let lam = vspec.col_lambdas[x - 1];
        out.push((EdgeId::V { x, k: r }, intertwiner(Psi, h(Face::new(x - 1, r))?, h(Face::new(x, r))?, lam, p)?));
    }
    for y in 1..=r {
        let lam = vspec.row_lambdas[y - 1];
        out.push((EdgeId::H { y, k: c }, intertwiner(Psi, h(Face::new(c, y))?, h(Face::new(c, y - 1))?, lam, p)?));
    }
    for t in 0..arc.len() - 1 {
        let (f0, f1) = (arc[t], arc[t + 1]);
        let kind = if t < switch_at { PsiStar } else { PsiPrime };
        let (edge, lam) = if f0.fx == 0 && f1.fx == 0 {
            (EdgeId::H { y: f0.fy, k: 0 }, vspec.row_lambdas[f0.fy - 1])
        } else {
            (EdgeId::V { x: f1.fx, k: 0 }, vspec.col_lambdas[f1.fx - 1])
        };
        out.push((edge, intertwiner(kind, h(f0)?, h(f1)?, lam, p)?));
    }
    Ok(out)
}

/// Vertex lattice with every external edge summed, ready for dressing.
pub fn summed_boundary(vspec: &VertexLatticeSpec) -> VertexLatticeSpec {
    let mut s = vspec.clone();
    s.boundary = vec![BoundarySpin::Summed; s.boundary.len()];
    s
}

/// Dressed six-vertex partition function.
pub fn dressed_partition_function(vspec: &VertexLatticeSpec, boundary: &[i64], switch: Face) -> Result<C64> {
    let dressing = boundary_dressing(vspec, boundary, switch)?;
    Ok(configuration_sum_weighted(&summed_boundary(vspec), &dressing, None)?.0)
}

/// Residual between the dressed six-vertex and the SOS partition functions.
pub fn check_partition_correspondence(vspec: &VertexLatticeSpec, boundary: &[i64]) -> Result<f64> {
    if vspec.n_cols > 3 || vspec.n_rows > 3 {
        return Err(Error::SizeError("correspondence check limited to 3x3".into()));
    }
    let sos = SosLatticeSpec::from_vertex_lattice(vspec, boundary.to_vec())?;
    let z_sos = sos_partition_function(&sos)?;
    let z_6v = dressed_partition_function(vspec, boundary, Face::new(vspec.n_cols, 0))?;
    Ok(scalar_residual(z_sos, z_6v))
}

/// Random closed admissible walk around an `n_cols x n_rows` face grid,
/// starting from height `start`.
pub fn random_boundary_walk<R: Rng>(n_cols: usize, n_rows: usize, start: i64, rng: &mut R) -> Vec<i64> {
    let len = 2 * (n_cols + n_rows);
    let mut steps: Vec<i64> = (0..len).map(|k| if k < len / 2 { 1 } else { -1 }).collect();
    steps.shuffle(rng);
    let mut walk = Vec::with_capacity(len);
    let mut h = start;
    for s in &steps {
        walk.push(h);
        h += s;
    }
    walk
}

/// Seeded boundary walk.
pub fn seeded_boundary_walk(n_cols: usize, n_rows: usize, start: i64, seed: u64) -> Vec<i64> {
    random_boundary_walk(n_cols, n_rows, start, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ParamSampler;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn psi_components() {
        let l = c64(0.2, -0.3);
        let params = p();
        let a = 2;
        let ae = height_value(a, &params) * params.eta;
        let v = intertwiner(IntertwinerKind::Psi, a, a + 1, l, &params).unwrap();
        assert_eq!(v, [((-l + ae) / 2.0).exp(), ((l - ae) / 2.0).exp()]);
        let s = intertwiner(IntertwinerKind::PsiStar, a, a + 1, l, &params).unwrap();
        assert!((dot(&s, &v) - ONE).norm() < 1e-14);
        let s2 = intertwiner(IntertwinerKind::PsiStar, a, a - 1, l, &params).unwrap();
        assert!(dot(&s2, &v).norm() < 1e-14);
        assert!(intertwiner(IntertwinerKind::Psi, 0, 2, l, &params).is_err());
    }

    #[test]
    fn singular_height() {
        let params = ModelParams { x0: c64(0.0, 0.0), ..p() };
        assert!(matches!(
            intertwiner(IntertwinerKind::PsiStar, 0, 1, c64(0.1, 0.0), &params),
            Err(Error::SingularHeight(_))
        ));
        assert!(matches!(face_weight(0, 1, 0, 1, c64(0.1, 0.0), &params), Err(Error::SingularHeight(_))));
    }

    #[test]
    fn face_weight_cases() {
        let params = p();
        let l = c64(0.3, 0.2);
        let a = 1;
        let ae = height_value(a, &params) * params.eta;
        let sa = ae.sinh();
        assert_eq!(face_weight(a, a + 1, a + 2, a + 1, l, &params).unwrap(), (l + params.eta).sinh());
        assert_eq!(face_weight(a, a - 1, a - 2, a - 1, l, &params).unwrap(), (l + params.eta).sinh());
        assert!(face_weight(a, a + 1, a, a - 1, c64(0.0, 0.0), &params).unwrap().norm() < 1e-16);
        let w = face_weight(a, a + 1, a, a + 1, l, &params).unwrap();
        assert!((w - params.eta.sinh() * (ae - l).sinh() / sa).norm() < 1e-14);
        let w = face_weight(a, a - 1, a, a + 1, l, &params).unwrap();
        assert!((w - l.sinh() * (ae - params.eta).sinh() / sa).norm() < 1e-14);
        assert_eq!(face_weight(a, a + 1, a + 2, a + 3, l, &params).unwrap(), ZERO);
    }

    #[test]
    fn virf_all_patterns() {
        let params = p();
        let draws = ParamSampler::new(3, 2).sample(10).unwrap();
        for d in &draws {
            for a in -3..=3 {
                for b in [a - 1, a + 1] {
                    for c in [b - 1, b + 1] {
                        assert!(check_virf(1, a, b, c, d.lambdas[0], d.lambdas[1], &params).unwrap() <= 1e-10);
                    }
                }
                for dd in [a - 1, a + 1] {
                    for c in [dd - 1, dd + 1] {
                        assert!(check_virf(2, a, dd, c, d.lambdas[0], d.lambdas[1], &params).unwrap() <= 1e-10);
                    }
                }
            }
        }
        let l = c64(0.4, 0.1);
        assert!(check_virf(1, 0, 1, 2, l, l, &params).unwrap() <= 1e-12);
        assert!(check_virf(3, 0, 1, 2, l, l, &params).is_err());
    }

    #[test]
    fn inversions() {
        let params = p();
        for which in Inversion::ALL {
            for a in -4..=4 {
                let r = check_inversions(which, a, c64(0.3, -0.7), &params).unwrap();
                assert!(r <= 1e-12, "{which:?} a={a}: {r}");
            }
        }
    }

    #[test]
    fn sos_ybe_sweep() {
        let params = p();
        let (l1, l2, l3) = (c64(0.3, 0.1), c64(-0.2, 0.5), c64(0.1, -0.4));
        let hex = admissible_hexagons(0);
        assert_eq!(hex.len(), 20);
        for h in hex {
            assert!(check_sos_ybe(h, l1, l2, l3, &params).unwrap() <= 1e-10, "{h:?}");
        }
        assert!(check_sos_ybe([0, 1, 0, 1, 0, 2], l1, l2, l3, &params).is_err());
    }

    #[test]
    fn single_face_partition_function() {
        let params = p();
        let (lc, lr) = (c64(0.3, 0.1), c64(-0.1, 0.2));
        let spec = SosLatticeSpec::new(vec![lc], vec![lr], vec![0, 1, 2, 1], None, params).unwrap();
        let z = sos_partition_function(&spec).unwrap();
        assert!((z - face_weight(0, 1, 2, 1, lc - lr, &params).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn two_strategies_agree() {
        let params = p();
        let walk = seeded_boundary_walk(3, 3, 0, 9);
        let spec = SosLatticeSpec::new(
            vec![c64(0.1, 0.2), c64(-0.3, 0.1), c64(0.2, -0.2)],
            vec![c64(0.4, 0.0), c64(-0.1, 0.3), c64(0.0, -0.5)],
            walk,
            None,
            params,
        )
        .unwrap();
        let z = sos_partition_function(&spec).unwrap();
        let zt = sos_partition_function_transfer(&spec).unwrap();
        assert!((z - zt).norm() <= 1e-12 * (1.0 + z.norm()));
        let big = SosLatticeSpec::new(vec![ONE; 5], vec![ONE; 4], [0, 1].repeat(9), None, params).unwrap();
        assert!(matches!(big.configurations(), Err(Error::SizeError(_))));
    }

    #[test]
    fn cyclic_shift_is_not_a_symmetry() {
        let params = p();
        let cols = vec![c64(0.1, 0.2), c64(-0.3, 0.1)];
        let rows = vec![c64(0.4, 0.0), c64(-0.1, 0.3)];
        let walk = vec![0, 1, 2, 1, 0, 7, 0, 7];
        let shifted: Vec<i64> = walk.iter().map(|h| (h + 1) % 8).collect();
        let z = sos_partition_function(&SosLatticeSpec::new(cols.clone(), rows.clone(), walk, Some(8), params).unwrap()).unwrap();
        let z1 = sos_partition_function(&SosLatticeSpec::new(cols, rows, shifted, Some(8), params).unwrap()).unwrap();
        assert!((z - z1).norm() > 1e-6);
    }

    #[test]
    fn correspondence_small_lattices() {
        let params = p();
        let one = VertexLatticeSpec::new(vec![c64(0.3, 0.1)], vec![c64(-0.1, 0.2)], vec![BoundarySpin::Summed; 4], params).unwrap();
        assert!(check_partition_correspondence(&one, &[0, 1, 2, 1]).unwrap() <= 1e-12);
        let sampler = ParamSampler::new(21, 4);
        for (k, d) in sampler.sample(3).unwrap().into_iter().enumerate() {
            let v = VertexLatticeSpec::new(d.lambdas[..2].to_vec(), d.lambdas[2..].to_vec(), vec![BoundarySpin::Summed; 8], params)
                .unwrap();
            let walk = seeded_boundary_walk(2, 2, 0, k as u64);
            assert!(check_partition_correspondence(&v, &walk).unwrap() <= 1e-9);
            for switch in outgoing_arc(2, 2) {
                let z = dressed_partition_function(&v, &walk, switch).unwrap();
                let zs = sos_partition_function(&SosLatticeSpec::from_vertex_lattice(&v, walk.clone()).unwrap()).unwrap();
                assert!(scalar_residual(zs, z) <= 1e-9, "{switch:?}");
            }
        }
    }
}
