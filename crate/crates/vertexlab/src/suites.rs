//! The check suites behind `vertexlab run`.

use std::time::{Duration, Instant};

use vertexlab_core::csos::{
    adjacency_eigensystem, central_charge, check_cyclic_periodicity, check_spin_identification, check_tl_relations,
    check_w_tl_decomposition, coprime_pairs, derive_ln, effective_central_charge, h13, torus_character, CsosParams,
    Rational,
};
use vertexlab_core::embedding::{boson_dimensions, parafermion_charges, vertex_contour, EmbeddingMap, Parafermion, ParafermionKind};
use vertexlab_core::numerics::{residual, scalar_residual, ComplexBox, ParamSampler};
use vertexlab_core::sos_currents::{
    check_equivalence_6v_sos, check_j0_locality, check_sos_commutation, check_sos_four_term, check_sos_inversions,
    check_sos_plaquette, check_tail_ybe, dressed_f, dressed_f_contract, dressed_t, dressed_t_contract,
    equivalence_exponent, four_term_patterns, rsos_incompatibility_probe, sos_contour, sos_plaquette_family,
    tail_hexagons, tau, tau_contract, SosCurrentInsertion, TailFamily, TailSign,
};
use vertexlab_core::sos_weights::{
    admissible_hexagons, check_inversions, check_partition_correspondence, check_sos_ybe, check_virf, outgoing_arc,
    seeded_boundary_walk, summed_boundary, Inversion, SosLatticeSpec,
};
use vertexlab_core::vertex_lattice::{
    check_plaquette_conservation, check_unwinding, current_expectation, plaquette_family, plaquette_tails,
    shortest_tail, CurrentInsertion, EdgeId, Face, TailPath, VertexLatticeSpec,
};
use vertexlab_core::vertex_weights::{
    check_antipode, check_crossing, check_unitarity, check_vertex_intertwining, check_winding_relation, check_ybe,
    coproduct_action, coproduct_action_iterated, GeneratorId, GeneratorKind,
};
use vertexlab_core::{c64, ModelParams, Result, C64};

use crate::config::SuiteConfig;
use crate::error::CliResult;
use crate::report::{digest, CheckRow, SuiteReport};

/// Tolerance of the algebraic identities.
pub const TOL_IDENTITY: f64 = 1e-9;
/// Tolerance of closed forms against contractions.
pub const TOL_CLOSED_FORM: f64 = 1e-12;
/// Tolerance of lattice conservation and contour sums.
pub const TOL_LATTICE: f64 = 1e-9;
/// Tolerance of tail and winding laws.
pub const TOL_TAIL: f64 = 1e-10;
/// Tolerance of the spin identification.
pub const TOL_SPIN: f64 = 1e-14;
/// Tolerance of the Temperley-Lieb relations.
pub const TOL_TL: f64 = 1e-10;
/// Tolerance of periodicity, decomposition and eigenvector checks.
pub const TOL_CYCLIC: f64 = 1e-12;
/// Allowed relative change of the torus sum when its truncation doubles.
pub const TOL_TORUS: f64 = 1e-8;
/// Smallest `x0 → 0` weight accepted for an RSOS witness.
pub const RSOS_MIN_WEIGHT: f64 = 1e-6;
/// Number of `(λ, η, x0)` draws for closed forms.
pub const CLOSED_FORM_DRAWS: usize = 20;

fn current_gens() -> [GeneratorId; 4] {
    [GeneratorId::f(0), GeneratorId::f(1), GeneratorId::f_bar(0), GeneratorId::f_bar(1)]
}

struct Runner<'a> {
    cfg: &'a SuiteConfig,
    start: Instant,
    budget: Duration,
    rows: Vec<CheckRow>,
    skipped: usize,
}

impl<'a> Runner<'a> {
    fn out_of_time(&mut self) -> bool {
        if self.start.elapsed() > self.budget {
            self.skipped += 1;
            true
        } else {
            false
        }
    }

    fn push(&mut self, id: String, params: String, tol: f64, r: Result<f64>, value: Option<String>) {
        let r = r.map_err(|e| e.to_string()).and_then(|x| if x.is_finite() { Ok(x) } else { Err(format!("non-finite residual {x}")) });
        let mut row = CheckRow::new(id, params, r, tol);
        row.value = value;
        self.rows.push(row);
    }

    fn check(&mut self, id: String, params: &str, tol: f64, f: impl FnOnce() -> Result<f64>) {
        if self.out_of_time() {
            return;
        }
        let tol = self.cfg.tol.unwrap_or(tol);
        self.push(id, params.to_string(), tol, f(), None);
    }

    fn check_with_value(&mut self, id: String, params: &str, tol: f64, f: impl FnOnce() -> Result<(f64, String)>) {
        if self.out_of_time() {
            return;
        }
        let tol = self.cfg.tol.unwrap_or(tol);
        match f() {
            Ok((r, v)) => self.push(id, params.to_string(), tol, Ok(r), Some(v)),
            Err(e) => self.push(id, params.to_string(), tol, Err(e), None),
        }
    }

    /// Exact comparison: residual 0 or 1, never loosened by `--tol`.
    fn exact(&mut self, id: String, params: &str, holds: bool, value: String) {
        if self.out_of_time() {
            return;
        }
        self.push(id, params.to_string(), 0.0, Ok(if holds { 0.0 } else { 1.0 }), Some(value));
    }
}

/// Runs the configured suite.
pub fn run(cfg: &SuiteConfig) -> CliResult<SuiteReport> {
    cfg.validate()?;
    let mut r = Runner {
        cfg,
        start: Instant::now(),
        budget: Duration::from_secs_f64(cfg.budget_secs),
        rows: Vec::new(),
        skipped: 0,
    };
    match cfg.suite.as_str() {
        "vertex-identities" => vertex_identities(&mut r)?,
        "vertex-conservation" => vertex_conservation(&mut r)?,
        "vertex-parafermion" => vertex_parafermion(&mut r)?,
        "sos-identities" => sos_identities(&mut r)?,
        "sos-currents" => sos_currents(&mut r)?,
        "equivalence" => equivalence(&mut r)?,
        "csos-spectrum" => csos_spectrum(&mut r)?,
        "rsos-probe" => rsos_probe(&mut r)?,
        _ => unreachable!("validated suite name"),
    }
    let wall = cfg.timings.then(|| r.start.elapsed().as_millis() as u64);
    Ok(SuiteReport::new(&cfg.suite, cfg.seed, digest(&cfg.canonical()), r.rows, r.skipped, wall))
}

fn etas(cfg: &SuiteConfig) -> Vec<C64> {
    cfg.etas.iter().map(|e| c64(e[0], e[1])).collect()
}

fn sampler(cfg: &SuiteConfig, arity: usize) -> ParamSampler {
    ParamSampler { etas: etas(cfg), ..ParamSampler::new(cfg.seed, arity) }
}

/// Short label of a generator.
pub fn gen_label(g: GeneratorId) -> String {
    let k = match g.kind() {
        GeneratorKind::E => "e",
        GeneratorKind::F => "f",
        GeneratorKind::T => "t",
        GeneratorKind::TInv => "tinv",
        GeneratorKind::FBar => "fbar",
        GeneratorKind::EBar => "ebar",
    };
    format!("{k}{}", g.index())
}

fn face_label(f: Face) -> String {
    format!("F{}.{}", f.fx, f.fy)
}

fn edge_label(e: EdgeId) -> String {
    match e {
        EdgeId::V { x, k } => format!("V{x}.{k}"),
        EdgeId::H { y, k } => format!("H{y}.{k}"),
    }
}

fn worst(it: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut w: f64 = 0.0;
    for r in it {
        w = w.max(r?);
    }
    Ok(w)
}

fn sizes(cfg: &SuiteConfig, default: [usize; 2]) -> Vec<[usize; 2]> {
    if let Some(l) = &cfg.lattice {
        vec![[l.n_cols, l.n_rows]]
    } else if cfg.sizes.is_empty() {
        vec![default]
    } else {
        cfg.sizes.clone()
    }
}

fn vertex_lattice(cfg: &SuiteConfig, [c, r]: [usize; 2]) -> CliResult<VertexLatticeSpec> {
    if let Some(l) = &cfg.lattice {
        return l.vertex_spec();
    }
    Ok(VertexLatticeSpec::seeded(c, r, cfg.seed, ComplexBox::default(), ModelParams::with_eta(etas(cfg)[0]))?)
}

fn sos_lattice(cfg: &SuiteConfig, size: [usize; 2]) -> CliResult<SosLatticeSpec> {
    if let Some(l) = &cfg.lattice {
        return l.sos_spec();
    }
    let v = vertex_lattice(cfg, size)?;
    Ok(SosLatticeSpec::from_vertex_lattice(&v, seeded_boundary_walk(size[0], size[1], 0, cfg.seed))?)
}

/// Spectral parameters that are real multiples of `η`, so every rhombus of
/// the embedding is a real rhombus.
fn embedded_lambdas(cfg: &SuiteConfig, eta: C64, c: usize, r: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    let draws = ParamSampler::new(cfg.seed, c + r).sample(1)?;
    let u = |z: C64| (z.re + 1.0) / 2.0;
    let cols = draws[0].lambdas[..c].iter().map(|z| eta * (-0.3 + 0.25 * u(*z))).collect();
    let rows = draws[0].lambdas[c..].iter().map(|z| eta * (0.35 + 0.25 * u(*z))).collect();
    Ok((cols, rows))
}

fn outer_faces(c: usize, r: usize) -> Vec<Face> {
    let mut out = Vec::new();
    for fy in 0..=r {
        for fx in 0..=c {
            let f = Face::new(fx, fy);
            if f.is_outer(c, r) {
                out.push(f);
            }
        }
    }
    out
}

fn internal_edges(c: usize, r: usize) -> Vec<EdgeId> {
    let mut out = Vec::new();
    for x in 1..=c {
        for k in 1..r {
            out.push(EdgeId::V { x, k });
        }
    }
    for y in 1..=r {
        for k in 1..c {
            out.push(EdgeId::H { y, k });
        }
    }
    out
}

fn interior_vertices(c: usize, r: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for x in 2..c {
        for y in 2..r {
            out.push((x, y));
        }
    }
    out
}

fn is_simple(tail: &TailPath) -> bool {
    tail.faces().map(|f| (1..f.len()).all(|k| !f[..k].contains(&f[k]))).unwrap_or(false)
}

fn vertex_identities(r: &mut Runner) -> CliResult<()> {
    let draws = sampler(r.cfg, 3).sample(r.cfg.samples)?;
    for (k, d) in draws.iter().enumerate() {
        let p = ModelParams::with_eta(d.eta);
        let (l1, l2, l3) = (d.lambdas[0], d.lambdas[1], d.lambdas[2]);
        let ps = format!("eta={};l1={l1};l2={l2};l3={l3}", d.eta);
        r.check(format!("ybe-6v/{k:03}"), &ps, TOL_IDENTITY, || Ok(check_ybe(l1, l2, l3, &p)));
        r.check(format!("unitarity/{k:03}"), &ps, TOL_IDENTITY, || Ok(check_unitarity(l1, &p)));
        r.check(format!("crossing/{k:03}"), &ps, TOL_IDENTITY, || Ok(check_crossing(l1, &p)));
        for g in GeneratorId::all() {
            let gl = gen_label(g);
            r.check(format!("rdef/{gl}/{k:03}"), &ps, TOL_IDENTITY, || Ok(check_vertex_intertwining(g, l1, l2, &p)));
            r.check(format!("coproduct/{gl}/{k:03}"), &ps, TOL_IDENTITY, || {
                let a = coproduct_action(g, &[l1, l2, l3], &p)?;
                let b = coproduct_action_iterated(g, &[l1, l2, l3], &p)?;
                residual(&a.matrix, &b.matrix)
            });
        }
        for i in 0..2u8 {
            r.check(format!("winding/{i}/{k:03}"), &ps, TOL_IDENTITY, || {
                Ok(check_winding_relation(i, l1, &p).into_iter().fold(0.0, f64::max))
            });
            r.check(format!("antipode/{i}/{k:03}"), &ps, TOL_IDENTITY, || Ok(check_antipode(i, l1, &p)));
        }
    }
    Ok(())
}

fn sos_identities(r: &mut Runner) -> CliResult<()> {
    let draws = sampler(r.cfg, 3).sample(r.cfg.samples)?;
    for (k, d) in draws.iter().enumerate() {
        let p = ModelParams::with_eta(d.eta);
        let (l1, l2, l3) = (d.lambdas[0], d.lambdas[1], d.lambdas[2]);
        let ps = format!("eta={};x0={};l1={l1};l2={l2};l3={l3}", d.eta, p.x0);
        let around = -3..=3i64;
        r.check(format!("virf1/{k:03}"), &ps, TOL_IDENTITY, || {
            worst(around.clone().flat_map(|a| {
                [a - 1, a + 1].into_iter().flat_map(move |b| [b - 1, b + 1].into_iter().map(move |c| (a, b, c)))
            }).map(|(a, b, c)| check_virf(1, a, b, c, l1, l2, &p)))
        });
        r.check(format!("virf2/{k:03}"), &ps, TOL_IDENTITY, || {
            worst(around.clone().flat_map(|a| {
                [a - 1, a + 1].into_iter().flat_map(move |d| [d - 1, d + 1].into_iter().map(move |c| (a, d, c)))
            }).map(|(a, d, c)| check_virf(2, a, d, c, l1, l2, &p)))
        });
        for (name, which) in ["a", "b", "c", "d"].into_iter().zip(Inversion::ALL) {
            r.check(format!("inv-{name}/{k:03}"), &ps, TOL_IDENTITY, || {
                worst(around.clone().map(|a| check_inversions(which, a, l1, &p)))
            });
        }
        r.check(format!("ybe-sos/{k:03}"), &ps, TOL_IDENTITY, || {
            worst((-1..=1).flat_map(admissible_hexagons).map(|h| check_sos_ybe(h, l1, l2, l3, &p)))
        });
        let families = [TailFamily::Index(0), TailFamily::Index(1), TailFamily::Mu(l3)];
        for (name, sign) in [("ybt1", TailSign::Minus), ("ybt2", TailSign::Plus)] {
            r.check(format!("{name}/{k:03}"), &ps, TOL_IDENTITY, || {
                worst((-1..=1).flat_map(tail_hexagons).flat_map(|h| families.map(|f| check_tail_ybe(sign, f, h, l1, l2, &p))))
            });
        }
        for which in 1..=4u8 {
            r.check(format!("sosinv{which}/{k:03}"), &ps, TOL_IDENTITY, || {
                let mut out = Vec::new();
                for a in -2..=2i64 {
                    for b in [a - 1, a + 1] {
                        for c in [a - 1, a + 1] {
                            for dd in (b - 2..=b + 2).step_by(2) {
                                for f in families {
                                    out.push(check_sos_inversions(which, f, [a, b, c, dd], l1, &p));
                                }
                            }
                        }
                    }
                }
                worst(out)
            });
            r.check(format!("soscr{which}/{k:03}"), &ps, TOL_IDENTITY, || {
                let mut out = Vec::new();
                for a in -2..=2i64 {
                    for b in [a - 1, a + 1] {
                        for c in [a - 1, a + 1] {
                            for i in 0..2 {
                                out.push(check_sos_commutation(which, i, [a, b, c], l1, &p));
                            }
                        }
                    }
                }
                worst(out)
            });
        }
        for (name, barred) in [("sosint1", false), ("sosint2", true)] {
            r.check(format!("{name}/{k:03}"), &ps, TOL_IDENTITY, || {
                worst((-1..=1).flat_map(four_term_patterns).flat_map(|h| [0, 1].map(|i| check_sos_four_term(barred, i, h, l1, l2, &p))))
            });
        }
        r.check(format!("t-symm/{k:03}"), &ps, TOL_IDENTITY, || {
            let mut out = Vec::new();
            for (a, b, c, dd) in tail_quadruples() {
                for i in 0..2 {
                    let plus = dressed_t_contract(i, TailSign::Plus, a, b, c, dd, l1, &p)?;
                    let minus = dressed_t_contract(i, TailSign::Minus, b, a, dd, c, l1, &p)?;
                    out.push(Ok(scalar_residual(plus, minus)));
                }
            }
            worst(out)
        });
    }
    closed_forms(r)
}

/// `(a, b, c, d)` with `|a - b| = |c - d| = 1` and `a - d` even, around `a`
/// in `-3..=3`.
fn tail_quadruples() -> Vec<(i64, i64, i64, i64)> {
    let mut out = Vec::new();
    for a in -3..=3i64 {
        for b in [a - 1, a + 1] {
            for d in [a - 2, a, a + 2] {
                for c in [d - 1, d + 1] {
                    out.push((a, b, c, d));
                }
            }
        }
    }
    out
}

/// Closed forms against `ψ*`/`ψ` sandwiches at random `(λ, η, x0)`.
fn closed_forms(r: &mut Runner) -> CliResult<()> {
    let n = CLOSED_FORM_DRAWS.min(r.cfg.samples);
    let draws = ParamSampler::new(r.cfg.seed ^ 0x00c1_05ed, 3).sample(n)?;
    for (k, d) in draws.iter().enumerate() {
        let (u, v, mu) = (d.lambdas[0], d.lambdas[1], d.lambdas[2]);
        let lambda = u;
        let eta = c64(0.45 + 0.25 * v.re, 0.5 * v.im);
        let x0 = c64(0.5 + 0.4 * mu.re, 0.3 * mu.im);
        let p = ModelParams { eta, x0, ..ModelParams::default() };
        let ps = format!("eta={eta};x0={x0};lambda={lambda};mu={mu}");
        r.check(format!("closed-f/{k:03}"), &ps, TOL_CLOSED_FORM, || {
            let mut out = Vec::new();
            for a in -3..=3i64 {
                for b in [a - 1, a + 1] {
                    for c in [a - 1, a + 1] {
                        for i in 0..2 {
                            for barred in [false, true] {
                                let x = dressed_f(i, barred, a, b, c, lambda, &p)?;
                                out.push(Ok(scalar_residual(dressed_f_contract(i, barred, a, b, c, lambda, &p)?, x)));
                            }
                        }
                    }
                }
            }
            worst(out)
        });
        r.check(format!("closed-t/{k:03}"), &ps, TOL_CLOSED_FORM, || {
            let mut out = Vec::new();
            for (a, b, c, dd) in tail_quadruples() {
                for sign in [TailSign::Minus, TailSign::Plus] {
                    for i in 0..2 {
                        let x = dressed_t(i, sign, a, b, c, dd, lambda, &p)?;
                        out.push(Ok(scalar_residual(dressed_t_contract(i, sign, a, b, c, dd, lambda, &p)?, x)));
                    }
                    let x = tau(mu, sign, a, b, c, dd, lambda, &p)?;
                    out.push(Ok(scalar_residual(tau_contract(mu, sign, a, b, c, dd, lambda, &p)?, x)));
                }
            }
            worst(out)
        });
    }
    Ok(())
}

fn vertex_conservation(r: &mut Runner) -> CliResult<()> {
    for size in sizes(r.cfg, [3, 3]) {
        let [c, rr] = size;
        let spec = vertex_lattice(r.cfg, size)?;
        let tag = format!("{c}x{rr}");
        let ps = format!("size={tag};seed={};eta={}", r.cfg.seed, spec.params.eta);
        for (x, y) in interior_vertices(c, rr) {
            for anchor in outer_faces(c, rr) {
                if plaquette_tails(c, rr, x, y, anchor).is_err() {
                    continue;
                }
                for g in current_gens() {
                    let id = format!("conservation/{tag}/{x}-{y}/{}/{}", gen_label(g), face_label(anchor));
                    r.check(id, &ps, TOL_LATTICE, || check_plaquette_conservation(&spec, &plaquette_family(&spec, x, y, g, anchor)?));
                }
            }
        }
        for e in internal_edges(c, rr) {
            for anchor in outer_faces(c, rr) {
                let Ok(direct) = shortest_tail(anchor, e, 0, c, rr, &[]) else { continue };
                let blocks: Vec<EdgeId> = direct.crossings().into_iter().map(|(edge, _)| edge).take(2).collect();
                for block in blocks {
                    let Ok(detour) = shortest_tail(anchor, e, 0, c, rr, &[block]) else { continue };
                    if detour.winding() != direct.winding() {
                        continue;
                    }
                    for g in current_gens() {
                        let id = format!("path/{tag}/{}/{}/{}/{}", edge_label(e), face_label(anchor), edge_label(block), gen_label(g));
                        let tails = format!("{ps};direct={};detour={}", steps(&direct), steps(&detour));
                        r.check(id, &tails, TOL_TAIL, || {
                            let a = current_expectation(&spec, &CurrentInsertion::new(g, direct.clone())?)?;
                            let b = current_expectation(&spec, &CurrentInsertion::new(g, detour.clone())?)?;
                            Ok(scalar_residual(a, b))
                        });
                    }
                }
            }
            let anchor = Face::new(c, 0);
            for m in [-1, 1] {
                let Ok(tail) = shortest_tail(anchor, e, m, c, rr, &[]) else { continue };
                for g in current_gens() {
                    let id = format!("unwind/{tag}/{}/M{m:+}/{}", edge_label(e), gen_label(g));
                    let tps = format!("{ps};tail={}", steps(&tail));
                    let Ok(ins) = CurrentInsertion::new(g, tail.clone()) else { continue };
                    let sign = if g.kind() == GeneratorKind::F { -1 } else { 1 };
                    let expected = 2 * sign * tail.winding();
                    let got = ins.unwind_exponent();
                    r.exact(format!("{id}/exponent"), &tps, got == expected, format!("k={got}"));
                    r.check(id, &tps, TOL_TAIL, || check_unwinding(&spec, &ins));
                }
            }
        }
    }
    Ok(())
}

fn steps(t: &TailPath) -> String {
    format!("{}:{}", face_label(t.anchor), vertexlab_core::vertex_lattice::steps_string(&t.steps))
}

fn vertex_parafermion(r: &mut Runner) -> CliResult<()> {
    for size in sizes(r.cfg, [3, 3]) {
        let [c, rr] = size;
        let mut spec = vertex_lattice(r.cfg, size)?;
        let eta = spec.params.eta;
        if r.cfg.lattice.is_none() {
            (spec.col_lambdas, spec.row_lambdas) = embedded_lambdas(r.cfg, eta, c, rr)?;
        }
        let tag = format!("{c}x{rr}");
        let ps = format!("size={tag};seed={};eta={eta};cols={:?};rows={:?}", r.cfg.seed, spec.col_lambdas, spec.row_lambdas);
        let emb = match EmbeddingMap::of_vertex_lattice(&spec) {
            Ok(e) => e,
            Err(e) => {
                r.check(format!("embedding/{tag}"), &ps, TOL_LATTICE, || Err(e));
                continue;
            }
        };
        for (x, y) in interior_vertices(c, rr) {
            for anchor in outer_faces(c, rr) {
                if plaquette_tails(c, rr, x, y, anchor).is_err() {
                    continue;
                }
                for g in current_gens() {
                    let id = format!("contour/{tag}/{x}-{y}/{}/{}", gen_label(g), face_label(anchor));
                    r.check_with_value(id, &ps, TOL_LATTICE, || {
                        let s = vertex_contour(&spec, &emb, x, y, g, anchor)?;
                        Ok((s.relative(), format!("scale={:e}", s.scale)))
                    });
                }
            }
        }
    }
    for (k, eta) in etas(r.cfg).into_iter().enumerate() {
        let kinds = [ParafermionKind::Vertex, ParafermionKind::Vertex, ParafermionKind::VertexBar, ParafermionKind::VertexBar];
        for (j, ch) in parafermion_charges(eta).iter().enumerate() {
            let ps = format!("eta={eta};e={};m={}", ch.e, ch.m);
            r.check_with_value(format!("spin/{k}/{j}"), &ps, TOL_CLOSED_FORM, || {
                let (h, hb) = boson_dimensions(ch)?;
                let pf = Parafermion::new(kinds[j], (j % 2) as u8, eta)?;
                let target = if kinds[j] == ParafermionKind::Vertex { pf.spin } else { -pf.spin };
                Ok((scalar_residual(h - hb, target), format!("h={h};hbar={hb}")))
            });
        }
    }
    Ok(())
}

fn sos_currents(r: &mut Runner) -> CliResult<()> {
    for size in sizes(r.cfg, [3, 3]) {
        let [c, rr] = size;
        let spec = sos_lattice(r.cfg, size)?;
        let tag = format!("{c}x{rr}");
        let ps = format!("size={tag};seed={};eta={};heights={:?}", r.cfg.seed, spec.params.eta, spec.boundary);
        for (x, y) in interior_vertices(c, rr) {
            for anchor in outgoing_arc(c, rr) {
                if plaquette_tails(c, rr, x, y, anchor).is_err() {
                    continue;
                }
                for g in current_gens() {
                    let id = format!("sos-conservation/{tag}/{x}-{y}/{}/{}", gen_label(g), face_label(anchor));
                    r.check(id, &ps, TOL_LATTICE, || check_sos_plaquette(&spec, &sos_plaquette_family(&spec, x, y, g, anchor)?));
                }
            }
        }
        let mut emb_spec = spec.clone();
        if r.cfg.lattice.is_none() {
            (emb_spec.col_lambdas, emb_spec.row_lambdas) = embedded_lambdas(r.cfg, spec.params.eta, c, rr)?;
        }
        let eps = format!("{ps};cols={:?};rows={:?}", emb_spec.col_lambdas, emb_spec.row_lambdas);
        match EmbeddingMap::embed(&emb_spec.col_lambdas, &emb_spec.row_lambdas, emb_spec.params.eta) {
            Ok(emb) => {
                for (x, y) in interior_vertices(c, rr) {
                    for anchor in outgoing_arc(c, rr) {
                        if plaquette_tails(c, rr, x, y, anchor).is_err() {
                            continue;
                        }
                        for g in current_gens() {
                            let id = format!("sos-contour/{tag}/{x}-{y}/{}/{}", gen_label(g), face_label(anchor));
                            r.check_with_value(id, &eps, TOL_LATTICE, || {
                                let s = sos_contour(&emb_spec, &emb, x, y, g, anchor)?;
                                Ok((s.relative(), format!("scale={:e}", s.scale)))
                            });
                        }
                    }
                }
            }
            Err(e) => r.check(format!("sos-embedding/{tag}"), &eps, TOL_LATTICE, || Err(e)),
        }
        for e in internal_edges(c, rr) {
            for anchor in outgoing_arc(c, rr) {
                let Ok(tail) = shortest_tail(anchor, e, 0, c, rr, &[]) else { continue };
                if !is_simple(&tail) {
                    continue;
                }
                for g in [GeneratorId::f(0), GeneratorId::f_bar(0)] {
                    let id = format!("j0-local/{tag}/{}/{}/{}", edge_label(e), face_label(anchor), gen_label(g));
                    let tps = format!("{ps};tail={}", steps(&tail));
                    r.check_with_value(id, &tps, TOL_TAIL, || {
                        let rep = check_j0_locality(&spec, &SosCurrentInsertion::new(g, tail.clone())?)?;
                        let res = if rep.off_pattern > 0 { 1.0 } else { rep.telescoping.max(rep.local) };
                        Ok((res, format!("configurations={};off_pattern={}", rep.configurations, rep.off_pattern)))
                    });
                }
            }
        }
    }
    Ok(())
}

fn equivalence(r: &mut Runner) -> CliResult<()> {
    const WALKS: u64 = 3;
    for size in sizes(r.cfg, [2, 2]) {
        let [c, rr] = size;
        let v = summed_boundary(&vertex_lattice(r.cfg, size)?);
        let tag = format!("{c}x{rr}");
        let mut seen = [false; 3];
        for w in 0..WALKS {
            let walk = seeded_boundary_walk(c, rr, 0, r.cfg.seed.wrapping_add(w));
            let ps = format!("size={tag};seed={};eta={};heights={walk:?}", r.cfg.seed, v.params.eta);
            r.check(format!("partition/{tag}/w{w}"), &ps, TOL_LATTICE, || check_partition_correspondence(&v, &walk));
            for e in internal_edges(c, rr) {
                for anchor in outgoing_arc(c, rr) {
                    for m in -1..=1 {
                        let Ok(tail) = shortest_tail(anchor, e, m, c, rr, &[]) else { continue };
                        if !is_simple(&tail) {
                            continue;
                        }
                        let mn = tail.winding_from_north();
                        if let Some(s) = seen.get_mut((mn + 1) as usize) {
                            *s = true;
                        }
                        for g in current_gens() {
                            let id = format!("equiv/{tag}/w{w}/{}/{}/M{mn:+}/{}", edge_label(e), face_label(anchor), gen_label(g));
                            let tps = format!("{ps};tail={}", steps(&tail));
                            r.check_with_value(id, &tps, TOL_LATTICE, || {
                                let ins = CurrentInsertion::new(g, tail.clone())?;
                                let k = equivalence_exponent(&SosCurrentInsertion::from_vertex(&ins));
                                Ok((check_equivalence_6v_sos(&v, &walk, &ins)?, format!("exponent={k}")))
                            });
                        }
                    }
                }
            }
        }
        for (k, s) in seen.iter().enumerate() {
            r.exact(format!("equiv-coverage/{tag}/M{:+}", k as i32 - 1), &format!("size={tag}"), *s, format!("seen={s}"));
        }
    }
    Ok(())
}

fn rational(x: Rational) -> String {
    if *x.denom() == 1 {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn to_f64(x: Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn csos_spectrum(r: &mut Runner) -> CliResult<()> {
    const P_MAX: i64 = 12;
    const TL_MAX_PERIOD: i64 = 12;
    const TL_MAX_ROW: usize = 6;
    let x0 = ModelParams::default().x0;
    let lambda = c64(0.23, -0.31);
    for (p, pp) in coprime_pairs(P_MAX) {
        let tag = format!("{p:02}-{pp:02}");
        let ps = format!("p={p};pprime={pp}");
        let (ell, n) = derive_ln(p, pp)?;
        let oracle = Rational::new(p - pp, 2 * p);
        r.exact(format!("ln/{tag}"), &ps, (ell, n) == (*oracle.numer(), *oracle.denom()), format!("l={ell};n={n}"));
        let cs = CsosParams::new(p, pp)?;
        let c = central_charge(&cs);
        let c_float = 1.0 - 6.0 * ((p - pp) * (p - pp)) as f64 / (p * pp) as f64;
        r.check_with_value(format!("c/{tag}"), &ps, TOL_SPIN, || Ok(((to_f64(c) - c_float).abs(), rational(c))));
        r.check_with_value(format!("spin/{tag}"), &ps, TOL_SPIN, || Ok((check_spin_identification(&cs), rational(h13(&cs)))));
        let ceff = effective_central_charge(&cs);
        r.exact(format!("ceff/{tag}"), &ps, ceff == Rational::from_integer(1), rational(ceff));
        let cps = format!("{ps};x0={x0};lambda={lambda}");
        r.check(format!("periodic/{tag}"), &cps, TOL_CYCLIC, || check_cyclic_periodicity(&cs, x0, lambda));
        r.check(format!("w-tl/{tag}"), &cps, TOL_CYCLIC, || {
            let mut out = Vec::new();
            for a in 0..n {
                for b in [a - 1, a + 1] {
                    for d in [a - 1, a + 1] {
                        for cc in [b - 1, b + 1] {
                            if (cc - d).abs() == 1 {
                                out.push(check_w_tl_decomposition(&cs, [a, b, cc, d], lambda, x0));
                            }
                        }
                    }
                }
            }
            worst(out)
        });
        if n <= TL_MAX_PERIOD {
            for len in 2..=TL_MAX_ROW {
                r.check(format!("tl/{tag}/L{len}"), &cps, TOL_TL, || {
                    Ok(check_tl_relations(&cs, len, x0)?.into_iter().fold(0.0, f64::max))
                });
            }
        }
    }
    for n in 3..=12usize {
        r.check(format!("eigen/{n:02}"), &format!("n={n}"), TOL_CYCLIC, || {
            let es = adjacency_eigensystem(n)?;
            Ok(es.orthonormality_residual().max(es.eigen_residual()))
        });
    }
    for &[p, pp] in &r.cfg.pp.clone() {
        let cs = CsosParams::new(p, pp)?;
        let tag = format!("{p:02}-{pp:02}");
        let ps = format!("p={p};pprime={pp}");
        r.exact(format!("table/{tag}/c"), &ps, true, rational(central_charge(&cs)));
        r.exact(format!("table/{tag}/h13"), &ps, h13(&cs) == Rational::new(2 * pp - p, p), rational(h13(&cs)));
        let q = c64(0.1, 0.0);
        r.check_with_value(format!("torus/{tag}"), &format!("{ps};q={q}"), TOL_TORUS, || {
            let a = torus_character(&cs, q, 4)?;
            let b = torus_character(&cs, q, 8)?;
            Ok(((a.value - b.value).norm() / b.value.norm(), format!("value={};leading_exponent={}", b.value, rational(b.leading_exponent))))
        });
    }
    Ok(())
}

fn rsos_probe(r: &mut Runner) -> CliResult<()> {
    for p in r.cfg.rsos_p.clone() {
        if r.out_of_time() {
            continue;
        }
        let ps = format!("p={p}");
        match rsos_incompatibility_probe(p) {
            Ok(probe) => {
                let w = &probe.witness;
                let found = w.weight.norm() > RSOS_MIN_WEIGHT && !w.out_of_range.is_empty();
                let desc = format!(
                    "lattice={}x{};tail={};gen={};heights={:?};weight={}",
                    w.spec.n_cols,
                    w.spec.n_rows,
                    steps(&w.insertion.tail),
                    gen_label(w.insertion.gen),
                    w.heights,
                    w.weight
                );
                r.exact(format!("witness/{p}"), &ps, found, desc);
                let holds = probe.plain_out_of_range > 0 && probe.plain_max_weight == 0.0;
                r.exact(format!("plain/{p}"), &ps, holds, format!("out_of_range={};max_weight={}", probe.plain_out_of_range, probe.plain_max_weight));
            }
            Err(e) => r.push(format!("witness/{p}"), ps, 0.0, Err(e), None),
        }
    }
    Ok(())
}
