//! Six-vertex R-matrix, generators on `V_λ`, coproducts and the matrix
//! identities they satisfy.
//!
//! Spin index `0` is `+` and `1` is `-`. Two-site spaces use the
//! lexicographic basis `(++, +-, -+, --)`; multi-site spaces continue the
//! same convention with site 0 as the slowest index.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::{c64, residual, ComplexTensor, ToleranceConfig, C64, DEFAULT_ETA, DEFAULT_X0};

/// Global model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Anisotropy `η`, with `q = e^η`.
    pub eta: C64,
    /// Height reference point `x0`.
    pub x0: C64,
    /// Tolerances.
    pub tol: ToleranceConfig,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { eta: DEFAULT_ETA, x0: DEFAULT_X0, tol: ToleranceConfig::default() }
    }
}

impl ModelParams {
    /// Parameters with the given `η` and default `x0`, tolerances.
    pub fn with_eta(eta: C64) -> Self {
        Self { eta, ..Self::default() }
    }
}

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = c64(0.0, 0.0);
const ONE: C64 = c64(1.0, 0.0);

/// Identity on `V_λ`.
pub const IDENTITY2: Mat2 = [[ONE, ZERO], [ZERO, ONE]];

/// Product of two 2x2 matrices.
pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Converts a [`Mat2`] into a `2 x 2` tensor.
pub fn mat2_tensor(m: &Mat2) -> ComplexTensor {
    ComplexTensor::matrix(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]).expect("2x2")
}

/// Kind of Chevalley-type generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorKind {
    /// `e_i`.
    E,
    /// `f_i`.
    F,
    /// `t_i`.
    T,
    /// `t_i^{-1}`.
    TInv,
    /// `f̄_i = e_i t_i^{-1}`.
    FBar,
    /// `ē_i = f_i t_i`.
    EBar,
}

/// A generator together with its node index `i ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneratorId {
    kind: GeneratorKind,
    index: u8,
}

impl GeneratorId {
    /// Checked constructor.
    pub fn new(kind: GeneratorKind, index: u8) -> Result<Self> {
        if index > 1 {
            return Err(Error::ArgError(format!("generator index {index} not in {{0,1}}")));
        }
        Ok(Self { kind, index })
    }

    /// Generator kind.
    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Node index.
    pub fn index(&self) -> u8 {
        self.index
    }

    /// `f_i`.
    pub fn f(index: u8) -> Self {
        Self::new(GeneratorKind::F, index).expect("index")
    }

    /// `f̄_i`.
    pub fn f_bar(index: u8) -> Self {
        Self::new(GeneratorKind::FBar, index).expect("index")
    }

    /// `t_i`.
    pub fn t(index: u8) -> Self {
        Self::new(GeneratorKind::T, index).expect("index")
    }

    /// `t_i^{-1}`.
    pub fn t_inv(index: u8) -> Self {
        Self::new(GeneratorKind::TInv, index).expect("index")
    }

    /// Every generator, in a fixed order.
    pub fn all() -> Vec<Self> {
        use GeneratorKind::*;
        let mut v = Vec::new();
        for kind in [E, F, T, TInv, FBar, EBar] {
            for index in 0..2 {
                v.push(Self { kind, index });
            }
        }
        v
    }
}

/// `sinh`-parametrised six-vertex weight `R(λ)^{in1 in2}_{out1 out2}`.
///
/// Line 1 is the vertical line, line 2 the horizontal one.
#[inline]
pub fn r_entry(lambda: C64, eta: C64, in1: usize, in2: usize, out1: usize, out2: usize) -> C64 {
    if in1 + in2 != out1 + out2 {
        return ZERO;
    }
    if in1 == in2 {
        (lambda + eta).sinh()
    } else if in1 == out1 {
        lambda.sinh()
    } else {
        eta.sinh()
    }
}

/// The 4x4 R-matrix in the basis `(++, +-, -+, --)`.
pub fn r_matrix(lambda: C64, params: &ModelParams) -> ComplexTensor {
    let mut r = ComplexTensor::zeros(vec![4, 4]);
    for row in 0..4 {
        for col in 0..4 {
            let v = r_entry(lambda, params.eta, row >> 1, row & 1, col >> 1, col & 1);
            r.set(&[row, col], v);
        }
    }
    r
}

/// Swap matrix `P` on two sites.
pub fn swap_matrix() -> ComplexTensor {
    let mut p = ComplexTensor::zeros(vec![4, 4]);
    for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        p.set(&[i, j], ONE);
    }
    p
}

fn kron_all(factors: &[ComplexTensor]) -> ComplexTensor {
    let mut out = factors[0].clone();
    for f in &factors[1..] {
        out = out.kron(f).expect("matrices");
    }
    out
}

/// Residual of the Yang-Baxter equation on three sites.
pub fn check_ybe(l1: C64, l2: C64, l3: C64, params: &ModelParams) -> f64 {
    let id2 = ComplexTensor::identity(2);
    let p23 = kron_all(&[id2.clone(), swap_matrix()]);
    let r12 = kron_all(&[r_matrix(l1 - l2, params), id2.clone()]);
    let r23 = kron_all(&[id2.clone(), r_matrix(l2 - l3, params)]);
    let r13_raw = kron_all(&[r_matrix(l1 - l3, params), id2]);
    let r13 = p23.matmul(&r13_raw).and_then(|m| m.matmul(&p23)).expect("8x8");
    let lhs = r12.matmul(&r13).and_then(|m| m.matmul(&r23)).expect("8x8");
    let rhs = r23.matmul(&r13).and_then(|m| m.matmul(&r12)).expect("8x8");
    residual(&lhs, &rhs).expect("same shape")
}

/// Residual of `R21(-λ) R12(λ) = sinh(λ+η) sinh(-λ+η) 𝟙`.
pub fn check_unitarity(lambda: C64, params: &ModelParams) -> f64 {
    let p = swap_matrix();
    let r21 = p.matmul(&r_matrix(-lambda, params)).and_then(|m| m.matmul(&p)).expect("4x4");
    let lhs = r21.matmul(&r_matrix(lambda, params)).expect("4x4");
    let s = (lambda + params.eta).sinh() * (-lambda + params.eta).sinh();
    let rhs = ComplexTensor::identity(4).scale(s);
    residual(&lhs, &rhs).expect("same shape")
}

/// Maximal crossing-symmetry defect over all 16 spin assignments,
/// normalised like [`residual`].
pub fn check_crossing(lambda: C64, params: &ModelParams) -> f64 {
    let spin = |s: usize| if s == 0 { 1i32 } else { -1 };
    let flip = |s: usize| 1 - s;
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for e1 in 0..2 {
        for e2 in 0..2 {
            for f1 in 0..2 {
                for f2 in 0..2 {
                    let lhs = r_entry(lambda, params.eta, e1, e2, f1, f2);
                    let exponent = (spin(e1) + spin(f1)) / 2;
                    let sign = if exponent % 2 == 0 { 1.0 } else { -1.0 };
                    let rhs = r_entry(-lambda - params.eta, params.eta, e2, flip(f1), f2, flip(e1)) * sign;
                    diff = diff.max((lhs - rhs).norm());
                    scale = scale.max(lhs.norm());
                }
            }
        }
    }
    diff / (1.0 + scale)
}

/// `t_1` weights: `diag(e^η, e^{-η})`; `t_0` swaps the two entries.
fn t_diag(index: u8, eta: C64, inverse: bool) -> [C64; 2] {
    let (p, m) = (eta.exp(), (-eta).exp());
    let d = if index == 1 { [p, m] } else { [m, p] };
    if inverse {
        [ONE / d[0], ONE / d[1]]
    } else {
        d
    }
}

/// Diagonal entry of `t_i` (`inverse = false`) or `t_i^{-1}` on spin `s`.
#[inline]
pub fn t_entry(index: u8, eta: C64, inverse: bool, s: usize) -> C64 {
    t_diag(index, eta, inverse)[s]
}

/// The generator as a 2x2 matrix on `V_λ`.
pub fn generator_mat(gen: GeneratorId, lambda: C64, eta: C64) -> Mat2 {
    use GeneratorKind::*;
    let swap = |m: Mat2| -> Mat2 { [[m[1][1], m[1][0]], [m[0][1], m[0][0]]] };
    let node1: Mat2 = match gen.kind {
        E => [[ZERO, lambda.exp()], [ZERO, ZERO]],
        F => [[ZERO, ZERO], [(-lambda).exp(), ZERO]],
        T => [[eta.exp(), ZERO], [ZERO, (-eta).exp()]],
        TInv => [[(-eta).exp(), ZERO], [ZERO, eta.exp()]],
        FBar => [[ZERO, (lambda + eta).exp()], [ZERO, ZERO]],
        EBar => [[ZERO, ZERO], [(-lambda + eta).exp(), ZERO]],
    };
    if gen.index == 1 {
        node1
    } else {
        swap(node1)
    }
}

/// The generator as a `2 x 2` tensor on `V_λ`.
pub fn generator_on_v(gen: GeneratorId, lambda: C64, params: &ModelParams) -> ComplexTensor {
    mat2_tensor(&generator_mat(gen, lambda, params.eta))
}

/// Action of a generator on `V_{λ_1} ⊗ … ⊗ V_{λ_N}` through the iterated
/// coproduct.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteOperator {
    /// Number of sites `N`.
    pub n_sites: usize,
    /// `2^N x 2^N` matrix.
    pub matrix: ComplexTensor,
    /// Spectral parameter of each site.
    pub site_lambdas: Vec<C64>,
}

/// Largest supported number of sites for coproducts.
pub const MAX_COPRODUCT_SITES: usize = 12;

/// `Δ^{(N)}(x)` as an explicit sum of tensor products.
pub fn coproduct_action(gen: GeneratorId, site_lambdas: &[C64], params: &ModelParams) -> Result<SiteOperator> {
    use GeneratorKind::*;
    let n = site_lambdas.len();
    if n == 0 || n > MAX_COPRODUCT_SITES {
        return Err(Error::SizeError(format!("coproduct on {n} sites, allowed 1..={MAX_COPRODUCT_SITES}")));
    }
    let eta = params.eta;
    let at = |g: GeneratorId, j: usize| mat2_tensor(&generator_mat(g, site_lambdas[j], eta));
    let id = ComplexTensor::identity(2);
    let t = GeneratorId::t(gen.index);
    let t_inv = GeneratorId::t_inv(gen.index);
    let matrix = match gen.kind {
        T | TInv => kron_all(&(0..n).map(|j| at(gen, j)).collect::<Vec<_>>()),
        F | FBar => {
            let mut acc = ComplexTensor::zeros(vec![1 << n, 1 << n]);
            for j in 0..n {
                let factors: Vec<_> = (0..n)
                    .map(|k| if k < j { id.clone() } else if k == j { at(gen, k) } else { at(t_inv, k) })
                    .collect();
                acc = acc.add(&kron_all(&factors))?;
            }
            acc
        }
        E | EBar => {
            let mut acc = ComplexTensor::zeros(vec![1 << n, 1 << n]);
            for j in 0..n {
                let factors: Vec<_> = (0..n)
                    .map(|k| if k < j { at(t, k) } else if k == j { at(gen, k) } else { id.clone() })
                    .collect();
                acc = acc.add(&kron_all(&factors))?;
            }
            acc
        }
    };
    Ok(SiteOperator { n_sites: n, matrix, site_lambdas: site_lambdas.to_vec() })
}

/// Letters of a word in the generators; `One` is the unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Letter {
    One,
    Gen(GeneratorId),
}

/// `Δ` of a single letter, as a list of two-letter terms.
fn coproduct_letter(l: Letter) -> Vec<(Letter, Letter)> {
    use GeneratorKind::*;
    match l {
        Letter::One => vec![(Letter::One, Letter::One)],
        Letter::Gen(g) => {
            let t = Letter::Gen(GeneratorId::t(g.index));
            let t_inv = Letter::Gen(GeneratorId::t_inv(g.index));
            match g.kind {
                T | TInv => vec![(l, l)],
                F | FBar => vec![(l, t_inv), (Letter::One, l)],
                E | EBar => vec![(l, Letter::One), (t, l)],
            }
        }
    }
}

/// `Δ^{(N)}(x)` built by repeated application of `Δ ⊗ 1` to the first
/// tensor factor, as an independent route to [`coproduct_action`].
pub fn coproduct_action_iterated(gen: GeneratorId, site_lambdas: &[C64], params: &ModelParams) -> Result<SiteOperator> {
    let n = site_lambdas.len();
    if n == 0 || n > MAX_COPRODUCT_SITES {
        return Err(Error::SizeError(format!("coproduct on {n} sites, allowed 1..={MAX_COPRODUCT_SITES}")));
    }
    let mut terms: Vec<Vec<Letter>> = vec![vec![Letter::Gen(gen)]];
    for _ in 1..n {
        let mut next = Vec::new();
        for word in &terms {
            for (a, b) in coproduct_letter(word[0]) {
                let mut w = vec![a, b];
                w.extend_from_slice(&word[1..]);
                next.push(w);
            }
        }
        terms = next;
    }
    let mut acc = ComplexTensor::zeros(vec![1 << n, 1 << n]);
    for word in &terms {
        let factors: Vec<_> = word
            .iter()
            .zip(site_lambdas)
            .map(|(l, &lam)| match l {
                Letter::One => ComplexTensor::identity(2),
                Letter::Gen(g) => generator_on_v(*g, lam, params),
            })
            .collect();
        acc = acc.add(&kron_all(&factors))?;
    }
    Ok(SiteOperator { n_sites: n, matrix: acc, site_lambdas: site_lambdas.to_vec() })
}

/// Residual of `R(λ1-λ2) Δ(x) = Δ'(x) R(λ1-λ2)` on `V_{λ1} ⊗ V_{λ2}`.
pub fn check_vertex_intertwining(gen: GeneratorId, l1: C64, l2: C64, params: &ModelParams) -> f64 {
    let r = r_matrix(l1 - l2, params);
    let p = swap_matrix();
    let delta = coproduct_action(gen, &[l1, l2], params).expect("two sites").matrix;
    let delta_swapped = coproduct_action(gen, &[l2, l1], params).expect("two sites").matrix;
    let delta_op = p.matmul(&delta_swapped).and_then(|m| m.matmul(&p)).expect("4x4");
    let lhs = r.matmul(&delta).expect("4x4");
    let rhs = delta_op.matmul(&r).expect("4x4");
    residual(&lhs, &rhs).expect("same shape")
}

/// Residuals of the winding relations for node `i`.
///
/// Returns `[t x t⁻¹ - e^{-2η} x, t⁻¹ x t - e^{2η} x]` for `x = f_i` followed
/// by `[t x̄ t⁻¹ - e^{2η} x̄, t⁻¹ x̄ t - e^{-2η} x̄]` for `x̄ = f̄_i`.
pub fn check_winding_relation(index: u8, lambda: C64, params: &ModelParams) -> [f64; 4] {
    let eta = params.eta;
    let t = generator_mat(GeneratorId::t(index), lambda, eta);
    let ti = generator_mat(GeneratorId::t_inv(index), lambda, eta);
    let conj = |a: &Mat2, x: &Mat2, b: &Mat2| mat2_tensor(&mat2_mul(&mat2_mul(a, x), b));
    let f = generator_mat(GeneratorId::f(index), lambda, eta);
    let fb = generator_mat(GeneratorId::f_bar(index), lambda, eta);
    let res = |lhs: ComplexTensor, x: &Mat2, factor: C64| residual(&lhs, &mat2_tensor(x).scale(factor)).expect("2x2");
    let (down, up) = ((-2.0 * eta).exp(), (2.0 * eta).exp());
    [
        res(conj(&t, &f, &ti), &f, down),
        res(conj(&ti, &f, &t), &f, up),
        res(conj(&t, &fb, &ti), &fb, up),
        res(conj(&ti, &fb, &t), &fb, down),
    ]
}

/// Residual of `ē_i = -S(f_i) = f_i t_i` against the stored `ē_i` matrix.
pub fn check_antipode(index: u8, lambda: C64, params: &ModelParams) -> f64 {
    let eta = params.eta;
    let ft = mat2_mul(&generator_mat(GeneratorId::f(index), lambda, eta), &generator_mat(GeneratorId::t(index), lambda, eta));
    let eb = generator_mat(GeneratorId::new(GeneratorKind::EBar, index).expect("index"), lambda, eta);
    residual(&mat2_tensor(&eb), &mat2_tensor(&ft)).expect("2x2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ParamSampler;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn r_matrix_entries() {
        let p = params();
        let l = c64(0.3, 0.1);
        let r = r_matrix(l, &p);
        assert_eq!(r.get(&[0, 0]), (l + p.eta).sinh());
        assert_eq!(r.get(&[1, 2]), p.eta.sinh());
        assert_eq!(r.get(&[1, 1]), l.sinh());
        assert_eq!(r.get(&[0, 1]), ZERO);
        assert_eq!(r, r.transpose().unwrap());
    }

    #[test]
    fn r_at_zero_is_scaled_swap() {
        let p = params();
        let r = r_matrix(ZERO, &p);
        assert!(residual(&r, &swap_matrix().scale(p.eta.sinh())).unwrap() < 1e-15);
    }

    #[test]
    fn yang_baxter_examples() {
        let p = params();
        assert!(check_ybe(c64(0.3, 0.1), c64(-0.2, 0.0), c64(0.0, 0.7), &p) <= 1e-10);
        assert!(check_ybe(c64(0.4, 0.2), c64(0.4, 0.2), c64(-0.1, 0.3), &p) <= 1e-12);
    }

    #[test]
    fn unitarity_examples() {
        let p = params();
        assert!(check_unitarity(ZERO, &p) <= 1e-14);
        assert!(check_unitarity(c64(0.21, -0.4), &p) <= 1e-10);
        let prod = {
            let pm = swap_matrix();
            let r21 = pm.matmul(&r_matrix(-p.eta, &p)).unwrap().matmul(&pm).unwrap();
            r21.matmul(&r_matrix(p.eta, &p)).unwrap()
        };
        assert!(prod.max_abs() < 1e-14);
    }

    #[test]
    fn crossing_examples() {
        let p = params();
        assert!(check_crossing(c64(0.3, -0.6), &p) <= 1e-12);
        assert!(check_crossing(-p.eta / 2.0, &p) <= 1e-12);
    }

    #[test]
    fn generator_matrices() {
        let p = params();
        let l = c64(0.2, 0.5);
        let f1 = generator_mat(GeneratorId::f(1), l, p.eta);
        assert_eq!(f1, [[ZERO, ZERO], [(-l).exp(), ZERO]]);
        let fb1 = generator_mat(GeneratorId::f_bar(1), l, p.eta);
        assert_eq!(fb1, [[ZERO, (l + p.eta).exp()], [ZERO, ZERO]]);
        for i in 0..2 {
            let t = generator_mat(GeneratorId::t(i), l, p.eta);
            let ti = generator_mat(GeneratorId::t_inv(i), l, p.eta);
            let id = mat2_tensor(&IDENTITY2);
            assert!(residual(&mat2_tensor(&mat2_mul(&t, &ti)), &id).unwrap() < 1e-15);
            let e = generator_mat(GeneratorId::new(GeneratorKind::E, i).unwrap(), l, p.eta);
            let fb = generator_mat(GeneratorId::f_bar(i), l, p.eta);
            assert!(residual(&mat2_tensor(&mat2_mul(&e, &ti)), &mat2_tensor(&fb)).unwrap() < 1e-15);
            assert!(check_antipode(i, l, &p) < 1e-15);
        }
        assert!(GeneratorId::new(GeneratorKind::F, 2).is_err());
    }

    #[test]
    fn coproduct_small_cases() {
        let p = params();
        let l = [c64(0.1, 0.2), c64(-0.3, 0.4), c64(0.5, -0.1)];
        for g in GeneratorId::all() {
            let one = coproduct_action(g, &l[..1], &p).unwrap();
            assert_eq!(one.matrix, generator_on_v(g, l[0], &p));
            for n in 2..=3 {
                let a = coproduct_action(g, &l[..n], &p).unwrap();
                let b = coproduct_action_iterated(g, &l[..n], &p).unwrap();
                assert!(residual(&a.matrix, &b.matrix).unwrap() <= 1e-12, "{g:?} n={n}");
            }
        }
        let f1 = GeneratorId::f(1);
        let two = coproduct_action(f1, &l[..2], &p).unwrap().matrix;
        let direct = generator_on_v(f1, l[0], &p)
            .kron(&generator_on_v(GeneratorId::t_inv(1), l[1], &p))
            .unwrap()
            .add(&ComplexTensor::identity(2).kron(&generator_on_v(f1, l[1], &p)).unwrap())
            .unwrap();
        assert!(residual(&two, &direct).unwrap() < 1e-15);
        assert!(matches!(coproduct_action(f1, &[], &p), Err(Error::SizeError(_))));
        assert!(matches!(coproduct_action(f1, &[ZERO; 13], &p), Err(Error::SizeError(_))));
    }

    #[test]
    fn intertwining_all_generators() {
        let p = params();
        let draws = ParamSampler::new(5, 2).sample(20).unwrap();
        for d in draws {
            for g in GeneratorId::all() {
                let r = check_vertex_intertwining(g, d.lambdas[0], d.lambdas[1], &p);
                assert!(r <= 1e-10, "{g:?}: {r}");
            }
        }
        assert!(check_vertex_intertwining(GeneratorId::f(0), c64(0.3, 0.0), c64(0.3, 0.0), &p) <= 1e-12);
    }

    #[test]
    fn winding_relations() {
        let p = params();
        for i in 0..2 {
            for r in check_winding_relation(i, c64(0.3, -0.2), &p) {
                assert!(r <= 1e-13);
            }
        }
        let flat = ModelParams::with_eta(ZERO);
        for r in check_winding_relation(1, c64(0.3, -0.2), &flat) {
            assert!(r <= 1e-15);
        }
    }
}
