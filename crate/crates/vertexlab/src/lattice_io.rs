//! JSON form of a lattice, as described by `schema/lattice.json`.

use serde::{Deserialize, Serialize};
use vertexlab_core::sos_weights::SosLatticeSpec;
use vertexlab_core::vertex_lattice::{parse_steps, steps_string, BoundarySpin, EdgeId, Face, TailPath, VertexLatticeSpec};
use vertexlab_core::{c64, ModelParams, C64};

use crate::error::{CliError, CliResult};

/// Lattice with its spectral parameters and boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    /// Number of vertical lines.
    pub n_cols: usize,
    /// Number of horizontal lines.
    pub n_rows: usize,
    /// `[re, im]` of each vertical line, west to east.
    pub col_lambdas: Vec<[f64; 2]>,
    /// `[re, im]` of each horizontal line, south to north.
    pub row_lambdas: Vec<[f64; 2]>,
    /// Six-vertex boundary: `+1`, `-1` fixed, `0` summed, one per external edge.
    pub boundary: Vec<i8>,
    /// SOS boundary heights on the perimeter corners, clockwise from the top left.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<i64>>,
    /// Anisotropy.
    pub eta: [f64; 2],
    /// Height reference point.
    pub x0: [f64; 2],
    /// Optional tail attached to the lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailFile>,
}

/// Tail as stored in a lattice file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailFile {
    /// Outer face `[fx, fy]` the tail starts from.
    pub anchor: [usize; 2],
    /// Dual steps, e.g. `"UULLU"`.
    pub steps: String,
    /// Insertion edge, `V{x}.{k}` or `H{y}.{k}`.
    pub insertion: String,
}

/// Parses `V{x}.{k}` / `H{y}.{k}`.
pub fn parse_edge(s: &str) -> CliResult<EdgeId> {
    let bad = || CliError::Usage(format!("'{s}': expected V<x>.<k> or H<y>.<k>"));
    let (kind, rest) = s.split_at_checked(1).ok_or_else(bad)?;
    let (a, b) = rest.split_once('.').ok_or_else(bad)?;
    let a: usize = a.parse().map_err(|_| bad())?;
    let k: usize = b.parse().map_err(|_| bad())?;
    match kind {
        "V" => Ok(EdgeId::V { x: a, k }),
        "H" => Ok(EdgeId::H { y: a, k }),
        _ => Err(bad()),
    }
}

/// Renders an edge as `V{x}.{k}` / `H{y}.{k}`.
pub fn edge_string(e: EdgeId) -> String {
    match e {
        EdgeId::V { x, k } => format!("V{x}.{k}"),
        EdgeId::H { y, k } => format!("H{y}.{k}"),
    }
}

impl TailFile {
    /// Checked tail.
    pub fn to_tail(&self) -> CliResult<TailPath> {
        let steps = parse_steps(&self.steps)?;
        Ok(TailPath::new(Face::new(self.anchor[0], self.anchor[1]), steps, parse_edge(&self.insertion)?)?)
    }

    /// File form of a tail.
    pub fn from_tail(t: &TailPath) -> Self {
        Self { anchor: [t.anchor.fx, t.anchor.fy], steps: steps_string(&t.steps), insertion: edge_string(t.insertion) }
    }
}

fn z(v: [f64; 2]) -> C64 {
    c64(v[0], v[1])
}

fn pair(v: C64) -> [f64; 2] {
    [v.re, v.im]
}

impl LatticeFile {
    /// Model parameters of the file.
    pub fn params(&self) -> ModelParams {
        ModelParams { eta: z(self.eta), x0: z(self.x0), ..ModelParams::default() }
    }

    /// Six-vertex lattice.
    pub fn vertex_spec(&self) -> CliResult<VertexLatticeSpec> {
        let boundary = self.boundary.iter().map(|v| BoundarySpin::from_int(*v)).collect::<Result<Vec<_>, _>>()?;
        let cols = self.col_lambdas.iter().copied().map(z).collect();
        let rows = self.row_lambdas.iter().copied().map(z).collect();
        Ok(VertexLatticeSpec::new(cols, rows, boundary, self.params())?)
    }

    /// SOS lattice; needs `heights`.
    pub fn sos_spec(&self) -> CliResult<SosLatticeSpec> {
        let heights = self.heights.clone().ok_or_else(|| CliError::Usage("the lattice has no SOS heights".into()))?;
        Ok(SosLatticeSpec::from_vertex_lattice(&self.vertex_spec()?, heights)?)
    }

    /// Tail of the file, checked against the lattice size.
    pub fn tail_path(&self) -> CliResult<Option<TailPath>> {
        let Some(t) = &self.tail else { return Ok(None) };
        let tail = t.to_tail()?;
        tail.validate(self.n_cols, self.n_rows)?;
        Ok(Some(tail))
    }

    /// File form of a six-vertex lattice.
    pub fn from_vertex(spec: &VertexLatticeSpec, heights: Option<Vec<i64>>) -> Self {
        Self {
            n_cols: spec.n_cols,
            n_rows: spec.n_rows,
            col_lambdas: spec.col_lambdas.iter().copied().map(pair).collect(),
            row_lambdas: spec.row_lambdas.iter().copied().map(pair).collect(),
            boundary: spec.boundary.iter().map(|b| b.to_int()).collect(),
            heights,
            eta: pair(spec.params.eta),
            x0: pair(spec.params.x0),
            tail: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vertexlab_core::numerics::ComplexBox;

    #[test]
    fn round_trip() {
        let spec = VertexLatticeSpec::seeded(2, 2, 4, ComplexBox::default(), ModelParams::default()).unwrap();
        let f = LatticeFile::from_vertex(&spec, Some(vec![0, 1, 0, 1, 0, 1, 0, 1]));
        let text = serde_json::to_string(&f).unwrap();
        let back: LatticeFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.vertex_spec().unwrap(), spec);
        assert!(back.sos_spec().is_ok());
    }

    #[test]
    fn tails_round_trip() {
        let t = TailFile { anchor: [0, 1], steps: "RU".into(), insertion: "V1.2".into() };
        let tail = t.to_tail().unwrap();
        assert_eq!(TailFile::from_tail(&tail), t);
        assert!(parse_edge("X1.1").is_err());
        assert!(parse_edge("V1").is_err());
    }
}
