//! Rhombic embedding of the lattice, parafermion prefactors and discrete
//! contour sums.
//!
//! A line with spectral parameter `λ` gets the angle `α = -πλ/η`. Crossing
//! a vertical line from west to east moves a face by `e^{iα_col}`, crossing
//! a horizontal line from north to south by `e^{iα_row}`, so every vertex
//! becomes a rhombus whose corners are its four faces.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{c64, C64};
use crate::vertex_lattice::{current_expectation, plaquette_family, EdgeId, Face, VertexLatticeSpec};
use crate::vertex_weights::{GeneratorId, GeneratorKind};

const I: C64 = c64(0.0, 1.0);

/// Angle `α = -πλ/η` of a line.
pub fn line_angle(lambda: C64, eta: C64) -> Result<C64> {
    if eta.norm() == 0.0 {
        return Err(Error::ArgError("the embedding needs η ≠ 0".into()));
    }
    Ok(-lambda * PI / eta)
}

/// Opening angle `θ = α_col - α_row = π(λ_row - λ_col)/η` of the rhombus at a vertex.
pub fn opening_angle(lambda_col: C64, lambda_row: C64, eta: C64) -> Result<C64> {
    Ok(line_angle(lambda_col, eta)? - line_angle(lambda_row, eta)?)
}

/// Geometry of the rhombus around one vertex, in the order top, left,
/// bottom, right of its edge midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaquetteGeometry {
    /// Embedded edge midpoints `z_k`.
    pub points: [C64; 4],
    /// Anticlockwise rhombus edges `δz_k` through each midpoint.
    pub deltas: [C64; 4],
    /// Their antiholomorphic partners, `δz̄_k` with `e^{iα} -> e^{-iα}`.
    pub deltas_bar: [C64; 4],
    /// Line angle `α(z_k)`.
    pub alphas: [C64; 4],
}

/// Embedding of a whole lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap {
    /// Angle of each vertical line.
    pub col_angles: Vec<C64>,
    /// Angle of each horizontal line.
    pub row_angles: Vec<C64>,
}

impl EmbeddingMap {
    /// Embedding from the line angles, without any validity check.
    pub fn from_angles(col_angles: Vec<C64>, row_angles: Vec<C64>) -> Self {
        Self { col_angles, row_angles }
    }

    /// Embedding of a lattice; every rhombus must be real with opening
    /// angle in `(0, π)`.
    pub fn embed(col_lambdas: &[C64], row_lambdas: &[C64], eta: C64) -> Result<Self> {
        let col_angles = col_lambdas.iter().map(|l| line_angle(*l, eta)).collect::<Result<Vec<_>>>()?;
        let row_angles = row_lambdas.iter().map(|l| line_angle(*l, eta)).collect::<Result<Vec<_>>>()?;
        for a in &col_angles {
            for b in &row_angles {
                let theta = a - b;
                if theta.im.abs() > 1e-9 {
                    return Err(Error::GeometryError(format!("complex opening angle {theta}")));
                }
                let t = num_traits::Euclid::rem_euclid(&theta.re, &(2.0 * PI));
                if !(1e-9..=PI - 1e-9).contains(&t) {
                    return Err(Error::GeometryError(format!("degenerate rhombus, θ = {}", theta.re)));
                }
            }
        }
        Ok(Self { col_angles, row_angles })
    }

    /// Embedding of a vertex lattice.
    pub fn of_vertex_lattice(spec: &VertexLatticeSpec) -> Result<Self> {
        Self::embed(&spec.col_lambdas, &spec.row_lambdas, spec.params.eta)
    }

    fn position(&self, f: Face, sign: f64) -> C64 {
        let mut z = C64::new(0.0, 0.0);
        for a in &self.col_angles[..f.fx] {
            z += (I * sign * a).exp();
        }
        for b in &self.row_angles[..f.fy] {
            z -= (I * sign * b).exp();
        }
        z
    }

    /// Image of a face.
    pub fn face_point(&self, f: Face) -> C64 {
        self.position(f, 1.0)
    }

    /// Image of an edge midpoint.
    pub fn edge_point(&self, e: EdgeId) -> C64 {
        let (a, b) = edge_faces(e);
        (self.face_point(a) + self.face_point(b)) / 2.0
    }

    /// Angle of the line carrying an edge.
    pub fn edge_angle(&self, e: EdgeId) -> C64 {
        match e {
            EdgeId::V { x, .. } => self.col_angles[x - 1],
            EdgeId::H { y, .. } => self.row_angles[y - 1],
        }
    }

    /// Rhombus of vertex `(x, y)`.
    pub fn plaquette(&self, x: usize, y: usize) -> PlaquetteGeometry {
        let nw = Face::new(x - 1, y);
        let ne = Face::new(x, y);
        let se = Face::new(x, y - 1);
        let sw = Face::new(x - 1, y - 1);
        // Anticlockwise: NW -> SW -> SE -> NE -> NW, i.e. W -> S -> E -> N.
        let edges = [(ne, nw), (nw, sw), (sw, se), (se, ne)];
        let lines = [
            EdgeId::V { x, k: y },
            EdgeId::H { y, k: x - 1 },
            EdgeId::V { x, k: y - 1 },
            EdgeId::H { y, k: x },
        ];
        let mut g = PlaquetteGeometry {
            points: [C64::new(0.0, 0.0); 4],
            deltas: [C64::new(0.0, 0.0); 4],
            deltas_bar: [C64::new(0.0, 0.0); 4],
            alphas: [C64::new(0.0, 0.0); 4],
        };
        for k in 0..4 {
            let (from, to) = edges[k];
            g.points[k] = self.edge_point(lines[k]);
            g.deltas[k] = self.position(to, 1.0) - self.position(from, 1.0);
            g.deltas_bar[k] = self.position(to, -1.0) - self.position(from, -1.0);
            g.alphas[k] = self.edge_angle(lines[k]);
        }
        g
    }

    /// Image of vertex `(x, y)`: the centre of its rhombus.
    pub fn vertex_point(&self, x: usize, y: usize) -> C64 {
        let fs = [Face::new(x - 1, y), Face::new(x, y), Face::new(x, y - 1), Face::new(x - 1, y - 1)];
        fs.iter().map(|f| self.face_point(*f)).sum::<C64>() / 4.0
    }
}

fn edge_faces(e: EdgeId) -> (Face, Face) {
    match e {
        EdgeId::V { x, k } => (Face::new(x - 1, k), Face::new(x, k)),
        EdgeId::H { y, k } => (Face::new(k, y), Face::new(k, y - 1)),
    }
}

/// Flavour of a parafermion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParafermionKind {
    /// `φ_i` from `j_i`.
    Vertex,
    /// `φ̄_i` from `j̄_i`.
    VertexBar,
    /// `Φ_i` from `J_i`.
    Sos,
    /// `Φ̄_i` from `J̄_i`.
    SosBar,
}

impl ParafermionKind {
    /// Whether the flavour pairs with `δz̄`.
    pub fn is_bar(&self) -> bool {
        matches!(self, ParafermionKind::VertexBar | ParafermionKind::SosBar)
    }

    /// Flavour of a vertex current built from `gen`.
    pub fn of_vertex_generator(gen: GeneratorId) -> Self {
        if gen.kind() == GeneratorKind::FBar {
            ParafermionKind::VertexBar
        } else {
            ParafermionKind::Vertex
        }
    }
}

/// A parafermion and its spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parafermion {
    /// Flavour.
    pub kind: ParafermionKind,
    /// Node index `i`.
    pub index: u8,
    /// Spin `s`.
    pub spin: C64,
}

impl Parafermion {
    /// Parafermion with its spin: `1 + iη/π` for vertex flavours, `1` and
    /// `1 + 2iη/π` for the SOS ones with `i = 0, 1`.
    pub fn new(kind: ParafermionKind, index: u8, eta: C64) -> Result<Self> {
        if index > 1 {
            return Err(Error::ArgError(format!("parafermion index {index}")));
        }
        let spin = match kind {
            ParafermionKind::Vertex | ParafermionKind::VertexBar => 1.0 + I * eta / PI,
            ParafermionKind::Sos | ParafermionKind::SosBar => {
                if index == 0 {
                    c64(1.0, 0.0)
                } else {
                    1.0 + 2.0 * I * eta / PI
                }
            }
        };
        Ok(Self { kind, index, spin })
    }

    fn sign(&self) -> f64 {
        if self.kind.is_bar() {
            1.0
        } else {
            -1.0
        }
    }

    /// `e^{∓iα} j`, from the current with its spectral dependence.
    pub fn value(&self, alpha: C64, current: C64) -> C64 {
        (I * self.sign() * alpha).exp() * current
    }

    /// The spectral-parameter-free current: `e^{±ηα/π} j` for vertex
    /// flavours, `e^{∓2ηα/π} J` for `i = 1` SOS flavours, `J` for `i = 0`.
    pub fn stripped(&self, alpha: C64, current: C64, eta: C64) -> C64 {
        let sign = self.sign();
        match self.kind {
            ParafermionKind::Vertex | ParafermionKind::VertexBar => (sign * eta * alpha / PI).exp() * current,
            ParafermionKind::Sos | ParafermionKind::SosBar => {
                if self.index == 1 {
                    (2.0 * sign * eta * alpha / PI).exp() * current
                } else {
                    current
                }
            }
        }
    }

    /// `e^{∓isα} 𝔧`, from the stripped current.
    pub fn value_from_stripped(&self, alpha: C64, stripped: C64) -> C64 {
        (I * self.sign() * self.spin * alpha).exp() * stripped
    }
}

/// Multiplies a current by its parafermion prefactor.
pub fn parafermion_value(pf: &Parafermion, alpha: C64, current: C64) -> C64 {
    pf.value(alpha, current)
}

/// A discrete contour sum together with the size of its largest term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSum {
    /// `Σ δz_k φ(z_k)`.
    pub sum: C64,
    /// `max |δz_k φ(z_k)|`.
    pub scale: f64,
}

impl ContourSum {
    /// `|sum| / scale`, or `|sum|` when every term vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.sum.norm()
        } else {
            self.sum.norm() / self.scale
        }
    }
}

/// `Σ δz_k v_k`.
pub fn contour_sum(values: &[C64; 4], deltas: &[C64; 4]) -> ContourSum {
    let mut sum = C64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    for (v, d) in values.iter().zip(deltas) {
        let term = v * d;
        sum += term;
        scale = scale.max(term.norm());
    }
    ContourSum { sum, scale }
}

/// Contour sum of the parafermion built on `gen` around vertex `(x, y)`,
/// with tails from `anchor`; barred flavours use `δz̄`.
pub fn vertex_contour(spec: &VertexLatticeSpec, emb: &EmbeddingMap, x: usize, y: usize, gen: GeneratorId, anchor: Face) -> Result<ContourSum> {
    let fam = plaquette_family(spec, x, y, gen, anchor)?;
    let g = emb.plaquette(x, y);
    let pf = Parafermion::new(ParafermionKind::of_vertex_generator(gen), gen.index(), spec.params.eta)?;
    let mut values = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        values[k] = pf.value(g.alphas[k], current_expectation(spec, &fam[k])?);
    }
    let deltas = if pf.kind.is_bar() { g.deltas_bar } else { g.deltas };
    Ok(contour_sum(&values, &deltas))
}

/// The face contour around face `(fx, fy)`, whose vanishing is the second
/// half of the discrete Cauchy-Riemann relations. The currents are not
/// expected to satisfy it; the value is only reported.
pub fn face_contour(emb: &EmbeddingMap, fx: usize, fy: usize, values: &[C64; 4]) -> ContourSum {
    // Edges of the face: top, left, bottom, right; the contour visits the
    // vertex images anticlockwise.
    let (ne, nw, sw, se) = ((fx + 1, fy + 1), (fx, fy + 1), (fx, fy), (fx + 1, fy));
    let p = |(x, y): (usize, usize)| emb.vertex_point(x, y);
    let deltas = [p(nw) - p(ne), p(sw) - p(nw), p(se) - p(sw), p(ne) - p(se)];
    contour_sum(values, &deltas)
}

/// Electric and magnetic charges of a free-boson vertex operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeBosonCharge {
    /// Electric charge `e`.
    pub e: C64,
    /// Magnetic charge `m`.
    pub m: i32,
    /// Coupling `g = 1 + iη/π`.
    pub g: C64,
}

impl FreeBosonCharge {
    /// Coupling `g = 1 + iη/π`.
    pub fn coupling(eta: C64) -> C64 {
        1.0 + I * eta / PI
    }
}

/// `(Δ, Δ̄) = ((e + mg)^2 / 4g, (e - mg)^2 / 4g)`.
pub fn boson_dimensions(charge: &FreeBosonCharge) -> Result<(C64, C64)> {
    if charge.g.norm() == 0.0 {
        return Err(Error::DegenerateCoupling("g = 0".into()));
    }
    let mg = charge.g * charge.m as f64;
    let four_g = 4.0 * charge.g;
    Ok(((charge.e + mg).powu(2) / four_g, (charge.e - mg).powu(2) / four_g))
}

/// Charges `(e, m)` of `φ_0`, `φ_1`, `φ̄_0`, `φ̄_1` in this order.
pub fn parafermion_charges(eta: C64) -> [FreeBosonCharge; 4] {
    let g = FreeBosonCharge::coupling(eta);
    [
        FreeBosonCharge { e: g, m: 1, g },
        FreeBosonCharge { e: -g, m: -1, g },
        FreeBosonCharge { e: g, m: -1, g },
        FreeBosonCharge { e: -g, m: 1, g },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_embedding() {
        let eta = c64(0.3, -0.4);
        let lc = c64(0.1, 0.2);
        let theta = opening_angle(lc, lc + eta / 2.0, eta).unwrap();
        assert!((theta - c64(PI / 2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn closed_rhombi() {
        let eta = c64(0.0, 0.9);
        let emb = EmbeddingMap::embed(&[eta * -0.1, eta * 0.05], &[eta * 0.3, eta * 0.6], eta).unwrap();
        for (x, y) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
            let g = emb.plaquette(x, y);
            assert!(g.deltas.iter().sum::<C64>().norm() < 1e-14);
            for d in g.deltas {
                assert!((d.norm() - 1.0).abs() < 1e-14);
            }
            let c = contour_sum(&[c64(0.7, -0.2); 4], &g.deltas);
            assert!(c.sum.norm() < 1e-14);
        }
    }

    #[test]
    fn degenerate_rhombus() {
        let eta = c64(0.0, 0.9);
        assert!(matches!(EmbeddingMap::embed(&[eta * 0.2], &[eta * 0.2], eta), Err(Error::GeometryError(_))));
        assert!(EmbeddingMap::embed(&[c64(0.1, 0.0)], &[c64(0.4, 0.3)], c64(0.45, -0.2)).is_err());
        assert!(line_angle(c64(1.0, 0.0), c64(0.0, 0.0)).is_err());
    }

    #[test]
    fn spins() {
        let eta = c64(0.0, PI / 5.0);
        let v = Parafermion::new(ParafermionKind::Vertex, 0, eta).unwrap();
        assert!((v.spin - c64(0.8, 0.0)).norm() < 1e-15);
        let s = Parafermion::new(ParafermionKind::Sos, 1, eta).unwrap();
        assert!((s.spin - c64(0.6, 0.0)).norm() < 1e-15);
        assert_eq!(Parafermion::new(ParafermionKind::SosBar, 0, eta).unwrap().spin, c64(1.0, 0.0));
    }

    #[test]
    fn prefactor_factorisations_agree() {
        let eta = c64(0.45, -0.2);
        let lambda = c64(0.3, 0.17);
        let alpha = line_angle(lambda, eta).unwrap();
        let j = c64(0.4, -1.3);
        for kind in [ParafermionKind::Vertex, ParafermionKind::VertexBar, ParafermionKind::Sos, ParafermionKind::SosBar] {
            for i in 0..2 {
                let pf = Parafermion::new(kind, i, eta).unwrap();
                let raw = pf.value(alpha, j);
                let split = pf.value_from_stripped(alpha, pf.stripped(alpha, j, eta));
                assert!((raw - split).norm() <= 1e-12 * (1.0 + raw.norm()));
            }
        }
        let pf = Parafermion::new(ParafermionKind::Vertex, 0, eta).unwrap();
        assert_eq!(pf.value(c64(0.0, 0.0), j), j);
        // j = e^{-λ} 𝔧 for the unbarred vertex currents.
        assert!((pf.stripped(alpha, j, eta) - lambda.exp() * j).norm() < 1e-12);
    }

    #[test]
    fn boson_examples() {
        let eta = c64(0.45, -0.2);
        let ch = parafermion_charges(eta);
        let (d0, db0) = boson_dimensions(&ch[0]).unwrap();
        assert!((d0 - ch[0].g).norm() < 1e-14 && db0.norm() < 1e-14);
        let (d1, db1) = boson_dimensions(&ch[1]).unwrap();
        assert!((d1 - ch[1].g).norm() < 1e-14 && db1.norm() < 1e-14);
        let s0 = Parafermion::new(ParafermionKind::Vertex, 0, eta).unwrap().spin;
        assert!((d0 - db0 - s0).norm() < 1e-14);
        let zero = FreeBosonCharge { e: c64(0.0, 0.0), m: 0, g: ch[0].g };
        assert_eq!(boson_dimensions(&zero).unwrap(), (c64(0.0, 0.0), c64(0.0, 0.0)));
        let bad = FreeBosonCharge { e: c64(1.0, 0.0), m: 1, g: c64(0.0, 0.0) };
        assert!(matches!(boson_dimensions(&bad), Err(Error::DegenerateCoupling(_))));
    }

    #[test]
    fn vertex_contours_vanish() {
        use crate::numerics::ComplexBox;
        use crate::vertex_weights::ModelParams;
        let p = ModelParams::default();
        let mut spec = VertexLatticeSpec::seeded(3, 3, 11, ComplexBox::default(), p).unwrap();
        spec.col_lambdas = [-0.2, -0.1, 0.0].iter().map(|a| p.eta * *a).collect();
        spec.row_lambdas = [0.3, 0.45, 0.6].iter().map(|b| p.eta * *b).collect();
        let emb = EmbeddingMap::of_vertex_lattice(&spec).unwrap();
        for gen in [GeneratorId::f(0), GeneratorId::f_bar(1)] {
            let c = vertex_contour(&spec, &emb, 2, 2, gen, Face::new(2, 0)).unwrap();
            assert!(c.scale > 1e-6);
            assert!(c.relative() <= 1e-9, "{gen:?}: {}", c.relative());
        }
    }
}
