//! The cyclic SOS model at `η = iπ(p - p')/p`: the integers `(ℓ, n)`,
//! periodicity of the weights, the Temperley-Lieb action on height walks,
//! the adjacency eigenvectors, and the Coulomb-gas spectrum arithmetic.
//!
//! Charges and dimensions that are rational are kept as exact
//! [`Rational`]s; complex values only appear where `η` enters.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::numerics::{c64, C64};
use crate::sos_weights::{face_weight, face_weight_cyclic, intertwiner, IntertwinerKind};
use crate::vertex_weights::ModelParams;

/// Exact rational.
pub type Rational = Ratio<i64>;

const ZERO: C64 = c64(0.0, 0.0);

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// Largest `n` handled by the walk-space constructions.
pub const MAX_PERIOD: u32 = 12;
/// Longest height row for [`tl_generator`].
pub const MAX_ROW: usize = 8;

/// The coprime pair `(p, p')` and the integers derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CsosParams {
    /// `p`.
    pub p: i64,
    /// `p' < p`.
    pub p_prime: i64,
    /// `ℓ`.
    pub ell: i64,
    /// Period `n` of the heights.
    pub n: i64,
}

/// `(ℓ, n)` from `(p, p')`: `((p-p')/2, p)` when `p - p'` is even,
/// `(p - p', 2p)` when it is odd.
pub fn derive_ln(p: i64, p_prime: i64) -> Result<(i64, i64)> {
    if p_prime < 1 || p_prime >= p {
        return Err(Error::ArgError(format!("need 1 <= p' < p, got ({p}, {p_prime})")));
    }
    if p.gcd(&p_prime) != 1 {
        return Err(Error::ArgError(format!("({p}, {p_prime}) are not coprime")));
    }
    let d = p - p_prime;
    let (ell, n) = if d % 2 == 0 { (d / 2, p) } else { (d, 2 * p) };
    if rat(2 * ell, n) != rat(d, p) {
        return Err(Error::InternalInconsistency(format!("2ℓ/n = {}/{} differs from (p-p')/p", 2 * ell, n)));
    }
    Ok((ell, n))
}

impl CsosParams {
    /// Checked constructor.
    pub fn new(p: i64, p_prime: i64) -> Result<Self> {
        let (ell, n) = derive_ln(p, p_prime)?;
        Ok(Self { p, p_prime, ell, n })
    }

    /// `η = iπ(p - p')/p = 2iπℓ/n`.
    pub fn eta(&self) -> C64 {
        c64(0.0, PI * (self.p - self.p_prime) as f64 / self.p as f64)
    }

    /// Model parameters at this `η` with the given `x0`.
    pub fn model_params(&self, x0: C64) -> ModelParams {
        let mut params = ModelParams::with_eta(self.eta());
        params.x0 = x0;
        params
    }

    /// Whether the intertwiners are periodic (even `ℓ`) rather than
    /// antiperiodic under `a -> a + n`.
    pub fn intertwiners_periodic(&self) -> bool {
        self.ell % 2 == 0
    }
}

/// Deviation of `W` under `a -> a + n` on all four heights and of `ψ`, `ψ*`
/// from `(-1)^ℓ` times themselves, maximised over heights `0..n`.
pub fn check_cyclic_periodicity(csos: &CsosParams, x0: C64, lambda: C64) -> Result<f64> {
    let params = csos.model_params(x0);
    let n = csos.n;
    let sign = if csos.intertwiners_periodic() { 1.0 } else { -1.0 };
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in [a - 1, a + 1] {
            for c in [b - 1, b + 1] {
                for d in [a - 1, a + 1] {
                    if (c - d).abs() != 1 {
                        continue;
                    }
                    let w0 = face_weight(a, b, c, d, lambda, &params)?;
                    let w1 = face_weight(a + n, b + n, c + n, d + n, lambda, &params)?;
                    worst = worst.max((w1 - w0).norm() / (1.0 + w0.norm()));
                }
            }
            for kind in [IntertwinerKind::Psi, IntertwinerKind::PsiStar] {
                let v0 = intertwiner(kind, a, b, lambda, &params)?;
                let v1 = intertwiner(kind, a + n, b + n, lambda, &params)?;
                for k in 0..2 {
                    worst = worst.max((v1[k] - sign * v0[k]).norm() / (1.0 + v0[k].norm()));
                }
            }
        }
    }
    Ok(worst)
}

fn sinh_cyclic(a: i64, params: &ModelParams) -> Result<C64> {
    crate::sos_weights::sinh_height(a, params)
}

/// `E(a b; d c)` in matrix layout: `-ε1 ε2 δ_{ac} sinh((a+ε1)η)/sinh(aη)`
/// with `b = a + ε1`, `d = a + ε2`, heights read modulo `n`.
pub fn tl_entry(csos: &CsosParams, a: i64, b: i64, d: i64, c: i64, x0: C64) -> Result<C64> {
    let params = csos.model_params(x0);
    let n = csos.n;
    let step = |x: i64, y: i64| -> Option<i64> {
        match (y - x).rem_euclid(n) {
            1 => Some(1),
            r if r == n - 1 => Some(-1),
            _ => None,
        }
    };
    let (Some(e1), Some(e2)) = (step(a, b), step(a, d)) else { return Ok(ZERO) };
    if (a - c).rem_euclid(n) != 0 {
        return Ok(ZERO);
    }
    let a0 = a.rem_euclid(n);
    Ok(-((e1 * e2) as f64) * sinh_cyclic(a0 + e1, &params)? / sinh_cyclic(a0, &params)?)
}

/// Residual of `W(a,b,c,d) = sinh(λ+η) δ_{bd} + sinh λ E(a b; d c)` for one
/// quadruple of cyclic heights.
pub fn check_w_tl_decomposition(csos: &CsosParams, h: [i64; 4], lambda: C64, x0: C64) -> Result<f64> {
    let [a, b, c, d] = h;
    let params = csos.model_params(x0);
    let n = csos.n;
    let w = face_weight_cyclic(a, b, c, d, n, lambda, &params)?;
    let delta = if (b - d).rem_euclid(n) == 0 { (lambda + params.eta).sinh() } else { ZERO };
    let rhs = delta + lambda.sinh() * tl_entry(csos, a, b, d, c, x0)?;
    Ok((w - rhs).norm() / (1.0 + w.norm()))
}

/// Admissible cyclic height rows `a_0, ..., a_len` with `a_0` in `0..n`.
pub fn height_walks(n: i64, len: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len + 1);
    fn rec(n: i64, len: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == len + 1 {
            out.push(cur.clone());
            return;
        }
        let last = *cur.last().expect("seeded");
        for s in [-1, 1] {
            cur.push((last + s).rem_euclid(n));
            rec(n, len, cur, out);
            cur.pop();
        }
    }
    for a in 0..n {
        cur.push(a);
        rec(n, len, &mut cur, &mut out);
        cur.pop();
    }
    out.sort();
    out.dedup();
    out
}

/// Sparse matrix on height walks, stored column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct TlGenerator {
    /// Site `j` the generator acts on.
    pub site: usize,
    /// Basis of height walks.
    pub walks: Vec<Vec<i64>>,
    /// Nonzero entries `(row, value)` of every column.
    pub columns: Vec<Vec<(usize, C64)>>,
}

/// `E_j` on height rows of length `len` (so `len + 1` heights), acting on
/// the height `a_j` between `a_{j-1}` and `a_{j+1}`.
pub fn tl_generator(csos: &CsosParams, len: usize, j: usize, x0: C64) -> Result<TlGenerator> {
    if !(1..len).contains(&j) {
        return Err(Error::ArgError(format!("site {j} outside 1..{len}")));
    }
    if len > MAX_ROW || csos.n > MAX_PERIOD as i64 {
        return Err(Error::SizeError(format!("row {len}, period {}; limits {MAX_ROW}, {MAX_PERIOD}", csos.n)));
    }
    let walks = height_walks(csos.n, len);
    let index: BTreeMap<&[i64], usize> = walks.iter().enumerate().map(|(k, w)| (w.as_slice(), k)).collect();
    let mut columns = Vec::with_capacity(walks.len());
    for w in &walks {
        let mut col = Vec::new();
        for s in [-1, 1] {
            let mut v = w.clone();
            v[j] = (w[j - 1] + s).rem_euclid(csos.n);
            if let Some(&row) = index.get(v.as_slice()) {
                let e = tl_entry(csos, w[j - 1], w[j], v[j], w[j + 1], x0)?;
                if e != ZERO {
                    col.push((row, e));
                }
            }
        }
        columns.push(col);
    }
    Ok(TlGenerator { site: j, walks, columns })
}

type SparseVec = BTreeMap<usize, C64>;

impl TlGenerator {
    fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&k, &x) in v {
            for &(row, e) in &self.columns[k] {
                *out.entry(row).or_insert(ZERO) += e * x;
            }
        }
        out
    }
}

fn sparse_gap(a: &SparseVec, b: &SparseVec) -> (f64, f64) {
    let mut gap: f64 = 0.0;
    let mut size: f64 = 0.0;
    for (k, x) in a {
        size = size.max(x.norm());
        gap = gap.max((x - b.get(k).copied().unwrap_or(ZERO)).norm());
    }
    for (k, y) in b {
        if !a.contains_key(k) {
            gap = gap.max(y.norm());
        }
    }
    (gap, size)
}

/// Residuals of the Temperley-Lieb relations on rows of length `len`:
/// `[E_j² = -2cosh η E_j, E_j E_{j±1} E_j = E_j, [E_j, E_k] = 0 for |j-k| >= 2]`,
/// each the worst `max|lhs - rhs| / (1 + max|lhs|)` over columns.
pub fn check_tl_relations(csos: &CsosParams, len: usize, x0: C64) -> Result<[f64; 3]> {
    let gens: Vec<TlGenerator> = (1..len).map(|j| tl_generator(csos, len, j, x0)).collect::<Result<_>>()?;
    let loop_weight = -2.0 * csos.eta().cosh();
    let mut worst = [0.0f64; 3];
    let dim = gens.first().map_or(0, |g| g.walks.len());
    let mut record = |slot: usize, lhs: &SparseVec, rhs: &SparseVec| {
        let (gap, size) = sparse_gap(lhs, rhs);
        worst[slot] = worst[slot].max(gap / (1.0 + size));
    };
    for col in 0..dim {
        let unit: SparseVec = [(col, c64(1.0, 0.0))].into_iter().collect();
        for (a, ga) in gens.iter().enumerate() {
            let e = ga.apply(&unit);
            let ee = ga.apply(&e);
            let scaled: SparseVec = e.iter().map(|(&k, &x)| (k, loop_weight * x)).collect();
            record(0, &ee, &scaled);
            for (b, gb) in gens.iter().enumerate() {
                if a.abs_diff(b) == 1 {
                    record(1, &ga.apply(&gb.apply(&e)), &e);
                } else if a.abs_diff(b) >= 2 {
                    record(2, &ga.apply(&gb.apply(&unit)), &gb.apply(&e));
                }
            }
        }
    }
    Ok(worst)
}

/// Orthonormal eigenvectors of the cyclic adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigSystem {
    /// Period.
    pub n: usize,
    /// `(j, S^(j))` for `1 <= j < n/2`.
    pub sines: Vec<(usize, Vec<f64>)>,
    /// `(j, T^(j))` for `0 <= j <= n/2`.
    pub cosines: Vec<(usize, Vec<f64>)>,
}

/// `N_j`: `sqrt(1/n)` for `j = 0` and `j = n/2`, `sqrt(2/n)` otherwise.
pub fn eigen_norm(n: usize, j: usize) -> f64 {
    if j == 0 || 2 * j == n {
        libm::sqrt(1.0 / n as f64)
    } else {
        libm::sqrt(2.0 / n as f64)
    }
}

/// `S^(j)_a = N_j sin(2πaj/n)` and `T^(j)_a = N_j cos(2πaj/n)`.
pub fn adjacency_eigensystem(n: usize) -> Result<EigSystem> {
    if n < 3 {
        return Err(Error::ArgError(format!("period {n} below 3")));
    }
    let comp = |j: usize, f: fn(f64) -> f64| -> Vec<f64> {
        (0..n).map(|a| eigen_norm(n, j) * f(2.0 * PI * (a * j) as f64 / n as f64)).collect()
    };
    let sines = (1..n.div_ceil(2)).map(|j| (j, comp(j, libm::sin))).collect();
    let cosines = (0..=n / 2).map(|j| (j, comp(j, libm::cos))).collect();
    Ok(EigSystem { n, sines, cosines })
}

impl EigSystem {
    /// All vectors with their `j`, sines first.
    pub fn vectors(&self) -> Vec<(usize, &[f64])> {
        self.sines.iter().chain(&self.cosines).map(|(j, v)| (*j, v.as_slice())).collect()
    }

    /// `max |G - I|` for the Gram matrix.
    pub fn orthonormality_residual(&self) -> f64 {
        let vs = self.vectors();
        let mut worst: f64 = 0.0;
        for (k, (_, u)) in vs.iter().enumerate() {
            for (l, (_, v)) in vs.iter().enumerate() {
                let dot: f64 = u.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max |A v - 2cos(2πj/n) v|` over all vectors.
    pub fn eigen_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for (j, v) in self.vectors() {
            let lam = 2.0 * libm::cos(2.0 * PI * j as f64 / n as f64);
            for a in 0..n {
                let av = v[(a + 1) % n] + v[(a + n - 1) % n];
                worst = worst.max((av - lam * v[a]).abs());
            }
        }
        worst
    }
}

/// `(h, h̄)` with `h = ((ep - mp')² - (p-p')²)/4pp'` and
/// `h̄ = ((ep + mp')² - (p-p')²)/4pp'`.
pub fn conformal_dimensions(csos: &CsosParams, e: Rational, m: i64) -> (Rational, Rational) {
    let (p, pp) = (csos.p, csos.p_prime);
    let shift = Rational::from_integer((p - pp) * (p - pp));
    let den = Rational::from_integer(4 * p * pp);
    let ep = e * p;
    let mp = Rational::from_integer(m * pp);
    (((ep - mp) * (ep - mp) - shift) / den, ((ep + mp) * (ep + mp) - shift) / den)
}

/// Electric dimension `h = h̄ = (2j/n + k)²/(4p'/p) - (p-p')²/4pp'`.
pub fn electric_dimension(csos: &CsosParams, j: i64, k: i64) -> Rational {
    let e = rat(2 * j, csos.n) + k;
    e * e * rat(csos.p, 4 * csos.p_prime) - rat((csos.p - csos.p_prime).pow(2), 4 * csos.p * csos.p_prime)
}

/// Magnetic dimension `h = h̄ = (p'/4p)(mn)² - (p-p')²/4pp'` of the defect
/// `a -> a + mn`.
pub fn magnetic_dimension(csos: &CsosParams, m: i64) -> Rational {
    let mn = m * csos.n;
    rat(csos.p_prime * mn * mn, 4 * csos.p) - rat((csos.p - csos.p_prime).pow(2), 4 * csos.p * csos.p_prime)
}

/// `c = 1 - 6(p-p')²/pp'`.
pub fn central_charge(csos: &CsosParams) -> Rational {
    Rational::from_integer(1) - rat(6 * (csos.p - csos.p_prime).pow(2), csos.p * csos.p_prime)
}

/// `c - 12(h_0 + h̄_0)` with `h_0` the dimension of the `e = 0` operator.
pub fn effective_central_charge(csos: &CsosParams) -> Rational {
    let (h, hb) = conformal_dimensions(csos, Rational::from_integer(0), 0);
    central_charge(csos) - (h + hb) * 12
}

/// `s_1 = 1 + 2iη/π` of the SOS parafermion.
pub fn sos_spin_one(csos: &CsosParams) -> C64 {
    c64(1.0, 0.0) + c64(0.0, 2.0) * csos.eta() / PI
}

/// `h_13`, read as the `(e, m) = (1, 3)` slot of the dimension formula.
pub fn h13(csos: &CsosParams) -> Rational {
    conformal_dimensions(csos, Rational::from_integer(1), 3).0
}

/// `|s_1 - h_13|`.
pub fn check_spin_identification(csos: &CsosParams) -> f64 {
    (sos_spin_one(csos) - to_c64(h13(csos))).norm()
}

/// Rational to complex.
pub fn to_c64(r: Rational) -> C64 {
    c64(*r.numer() as f64 / *r.denom() as f64, 0.0)
}

/// One row of the spectrum table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpectrumEntry {
    /// `p`.
    pub p: i64,
    /// `p'`.
    pub p_prime: i64,
    /// Electric charge.
    pub e: Rational,
    /// Magnetic charge, a multiple of `n`.
    pub m: i64,
    /// `h`.
    pub h: Rational,
    /// `h̄`.
    pub h_bar: Rational,
}

/// Electric charges enumerated by [`spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChargeGrid {
    /// Integer `e`.
    Integer,
    /// Every multiple of `1/n`.
    Full,
}

/// Spectrum entries with `|e| <= e_max` on the chosen grid and
/// `m = kn`, `|k| <= m_max`, sorted by `(e, m)`.
pub fn spectrum(csos: &CsosParams, e_max: i64, m_max: i64, grid: ChargeGrid) -> Vec<SpectrumEntry> {
    let step = match grid {
        ChargeGrid::Integer => Rational::from_integer(1),
        ChargeGrid::Full => rat(1, csos.n),
    };
    let count = (Rational::from_integer(e_max) / step).to_integer();
    let mut out = Vec::new();
    for k in -count..=count {
        let e = step * k;
        for mk in -m_max..=m_max {
            let m = mk * csos.n;
            let (h, h_bar) = conformal_dimensions(csos, e, m);
            out.push(SpectrumEntry { p: csos.p, p_prime: csos.p_prime, e, m, h, h_bar });
        }
    }
    out
}

/// Truncated torus partition function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusCharacter {
    /// Truncated value.
    pub value: C64,
    /// Exponent of `|q|` of the leading term for real `q`,
    /// `h_0 + h̄_0 + c/12 - 1/12`.
    pub leading_exponent: Rational,
    /// Bound on the first omitted shell of the charge sum, relative to
    /// `|value|`.
    pub tail_estimate: f64,
}

/// `(q q̄)^{c/24} / |η_D(q)|² Σ q^{h_em} q̄^{h̄_em}` with `e` a multiple of
/// `1/n` and `m` of `n`, both cut at `|e|, |m|/n <= truncation`, and the
/// Dedekind product cut at `4 truncation` factors.
pub fn torus_character(csos: &CsosParams, q: C64, truncation: usize) -> Result<TorusCharacter> {
    let r = q.norm();
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::ArgError(format!("|q| = {r} outside (0, 1)")));
    }
    if truncation == 0 {
        return Err(Error::ArgError("truncation must be positive".into()));
    }
    let qb = q.conj();
    let ln_q = q.ln();
    let ln_qb = qb.ln();
    let c = to_c64(central_charge(csos));
    let power = |h: Rational, hb: Rational| (ln_q * to_c64(h) + ln_qb * to_c64(hb)).exp();
    let t = truncation as i64;
    let shell = |k_e: i64, k_m: i64| -> C64 {
        let (h, hb) = conformal_dimensions(csos, rat(k_e, csos.n), k_m * csos.n);
        power(h, hb)
    };
    let mut sum = ZERO;
    for k_e in -t * csos.n..=t * csos.n {
        for k_m in -t..=t {
            sum += shell(k_e, k_m);
        }
    }
    let mut edge: f64 = 0.0;
    let (te, tm) = ((t + 1) * csos.n, t + 1);
    for k_e in -te..=te {
        for k_m in [-tm, tm] {
            edge += shell(k_e, k_m).norm();
        }
    }
    for k_m in -tm..=tm {
        for k_e in [-te, te] {
            edge += shell(k_e, k_m).norm();
        }
    }
    let mut dedekind = c64(1.0, 0.0);
    for k in 1..=4 * truncation as i32 {
        dedekind *= c64(1.0, 0.0) - q.powi(k);
    }
    let eta_sq = (ln_q / 24.0).exp() * dedekind * ((ln_qb / 24.0).exp() * dedekind.conj());
    let prefactor = ((ln_q + ln_qb) * c / 24.0).exp();
    let value = prefactor * sum / eta_sq;
    let product_tail = libm::pow(r, (4 * truncation + 1) as f64) / (1.0 - r);
    let tail_estimate = (prefactor / eta_sq).norm() * edge / value.norm() + 2.0 * product_tail;
    if !tail_estimate.is_finite() || tail_estimate > 1e-3 {
        return Err(Error::TruncationError(format!("first omitted shell is {tail_estimate:e} of the value")));
    }
    let (h0, hb0) = conformal_dimensions(csos, Rational::from_integer(0), 0);
    let leading_exponent = h0 + hb0 + central_charge(csos) / 12 - rat(1, 12);
    Ok(TorusCharacter { value, leading_exponent, tail_estimate })
}

/// Coprime pairs `(p, p')` with `2 <= p <= p_max`, `1 <= p' < p`.
pub fn coprime_pairs(p_max: i64) -> Vec<(i64, i64)> {
    let mut out = vec![];
    for p in 2..=p_max {
        for pp in 1..p {
            if p.gcd(&pp) == 1 {
                out.push((p, pp));
            }
        }
    }
    out
}
