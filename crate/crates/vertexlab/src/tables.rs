//! Spectrum and weight tables.

use std::path::Path;

use serde::Serialize;
use vertexlab_core::csos::{spectrum, ChargeGrid, CsosParams};
use vertexlab_core::sos_weights::face_weight;
use vertexlab_core::{ModelParams, C64};

use crate::config::Format;
use crate::error::CliResult;

/// Which table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TableKind {
    /// Conformal dimensions of the cyclic model.
    Spectrum,
    /// Face weights around `x0`.
    Weights,
}

/// Inputs of [`emit_tables`].
#[derive(Debug, Clone, PartialEq)]
pub struct TableParams {
    /// Pairs `(p, p')` for the spectrum.
    pub pp: Vec<[i64; 2]>,
    /// Bound on `|e|`.
    pub e_max: i64,
    /// Bound on `|m|/n`.
    pub m_max: i64,
    /// Charge grid.
    pub grid: ChargeGrid,
    /// Model parameters for the weights.
    pub params: ModelParams,
    /// Spectral parameter for the weights.
    pub lambda: C64,
    /// Heights `a` run over `-radius..=radius`.
    pub radius: i64,
}

/// One spectrum line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    /// `p`.
    pub p: i64,
    /// `p'`.
    pub p_prime: i64,
    /// Numerator of `e`.
    pub e_num: i64,
    /// Denominator of `e`.
    pub e_den: i64,
    /// `m`.
    pub m: i64,
    /// `Re h`.
    pub h_re: f64,
    /// `Im h`.
    pub h_im: f64,
    /// `Re h̄`.
    pub h_bar_re: f64,
    /// `Im h̄`.
    pub h_bar_im: f64,
}

/// One face weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightRow {
    /// Corner heights relative to `x0`, in the order `a, b, c, d`.
    pub a: i64,
    /// `b`.
    pub b: i64,
    /// `c`.
    pub c: i64,
    /// `d`.
    pub d: i64,
    /// `Re W`.
    pub w_re: f64,
    /// `Im W`.
    pub w_im: f64,
}

/// Spectrum rows for every configured pair.
pub fn spectrum_rows(t: &TableParams) -> CliResult<Vec<SpectrumRow>> {
    let mut out = Vec::new();
    for &[p, pp] in &t.pp {
        let cs = CsosParams::new(p, pp)?;
        for s in spectrum(&cs, t.e_max, t.m_max, t.grid) {
            let f = |x: vertexlab_core::csos::Rational| *x.numer() as f64 / *x.denom() as f64;
            out.push(SpectrumRow {
                p,
                p_prime: pp,
                e_num: *s.e.numer(),
                e_den: *s.e.denom(),
                m: s.m,
                h_re: f(s.h),
                h_im: 0.0,
                h_bar_re: f(s.h_bar),
                h_bar_im: 0.0,
            });
        }
    }
    Ok(out)
}

/// Every admissible face around `a` in `-radius..=radius`.
pub fn weight_rows(t: &TableParams) -> CliResult<Vec<WeightRow>> {
    let mut out = Vec::new();
    for a in -t.radius..=t.radius {
        for b in [a - 1, a + 1] {
            for c in [b - 1, b + 1] {
                for d in [a - 1, a + 1] {
                    if (c - d).abs() != 1 {
                        continue;
                    }
                    let w = face_weight(a, b, c, d, t.lambda, &t.params)?;
                    out.push(WeightRow { a, b, c, d, w_re: w.re, w_im: w.im });
                }
            }
        }
    }
    Ok(out)
}

fn encode<T: Serialize>(rows: &[T], format: Format) -> CliResult<Vec<u8>> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(rows).expect("rows serialise");
            v.push(b'\n');
            Ok(v)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            Ok(w.into_inner().map_err(|e| e.into_error())?)
        }
    }
}

/// Encoded table.
pub fn render_table(kind: TableKind, t: &TableParams, format: Format) -> CliResult<Vec<u8>> {
    match kind {
        TableKind::Spectrum => encode(&spectrum_rows(t)?, format),
        TableKind::Weights => encode(&weight_rows(t)?, format),
    }
}

/// Writes a table to `path`.
pub fn emit_tables(kind: TableKind, t: &TableParams, path: &Path, format: Format) -> CliResult<()> {
    std::fs::write(path, render_table(kind, t, format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vertexlab_core::c64;

    fn params() -> TableParams {
        TableParams {
            pp: vec![[5, 4]],
            e_max: 2,
            m_max: 2,
            grid: ChargeGrid::Integer,
            params: ModelParams::default(),
            lambda: c64(0.3, 0.1),
            radius: 3,
        }
    }

    #[test]
    fn spectrum_has_25_rows() {
        assert_eq!(spectrum_rows(&params()).unwrap().len(), 25);
        let csv = String::from_utf8(render_table(TableKind::Spectrum, &params(), Format::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().next().unwrap(), "p,p_prime,e_num,e_den,m,h_re,h_im,h_bar_re,h_bar_im");
        assert_eq!(csv.lines().count(), 26);
    }

    #[test]
    fn weights_cover_all_faces() {
        // Six admissible faces around each of the seven heights.
        assert_eq!(weight_rows(&params()).unwrap().len(), 42);
    }
}
