use proptest::prelude::*;

use vertexlab_core::csos::{
    check_cyclic_periodicity, check_tl_relations, conformal_dimensions, derive_ln, CsosParams, Rational,
};
use vertexlab_core::embedding::{line_angle, Parafermion, ParafermionKind};
use vertexlab_core::numerics::{contract, ComplexBox};
use vertexlab_core::sos_currents::{dressed_t, tail_hexagons, TailSign};
use vertexlab_core::sos_weights::{
    check_inversions, check_sos_ybe, admissible_hexagons, face_weight, seeded_boundary_walk, Inversion,
};
use vertexlab_core::vertex_lattice::{
    current_expectation, shortest_tail, CurrentInsertion, EdgeId, Face, VertexLatticeSpec,
};
use vertexlab_core::vertex_weights::{check_crossing, check_unitarity, check_ybe, GeneratorId};
use vertexlab_core::{c64, ComplexTensor, ModelParams, C64};

fn lam() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c64(a, b))
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + a.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vertex_identities(l1 in lam(), l2 in lam(), l3 in lam()) {
        let p = ModelParams::default();
        prop_assert!(check_ybe(l1, l2, l3, &p) <= 1e-9);
        prop_assert!(check_unitarity(l1, &p) <= 1e-9);
        prop_assert!(check_crossing(l1, &p) <= 1e-9);
    }

    #[test]
    fn face_identities(l1 in lam(), l2 in lam(), l3 in lam(), a in -3i64..=3) {
        let p = ModelParams::default();
        for h in admissible_hexagons(a) {
            prop_assert!(check_sos_ybe(h, l1, l2, l3, &p).unwrap() <= 1e-9);
        }
        for which in Inversion::ALL {
            prop_assert!(check_inversions(which, a, l1, &p).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn tail_weight_symmetry(l in lam(), a in -3i64..=3, s1 in 0usize..2, s2 in 0usize..2, gap in -1i64..=1) {
        let p = ModelParams::default();
        let b = a + [-1, 1][s1];
        let d = a + 2 * gap;
        let c = d + [-1, 1][s2];
        for i in 0..2 {
            let plus = dressed_t(i, TailSign::Plus, a, b, c, d, l, &p).unwrap();
            let minus = dressed_t(i, TailSign::Minus, b, a, d, c, l, &p).unwrap();
            prop_assert_eq!(plus, minus);
        }
    }

    #[test]
    fn cyclic_weights_are_periodic(l in lam(), k in 0usize..4) {
        let (pp, ppr) = [(4, 3), (5, 3), (5, 2), (7, 4)][k];
        let cs = CsosParams::new(pp, ppr).unwrap();
        prop_assert!(check_cyclic_periodicity(&cs, c64(0.37, 0.11), l).unwrap() <= 1e-12);
    }

    #[test]
    fn spin_is_minus_em(num in -40i64..40, den in 1i64..13, m in -3i64..=3, k in 0usize..4) {
        let (pp, ppr) = [(4, 3), (5, 4), (5, 2), (11, 7)][k];
        let cs = CsosParams::new(pp, ppr).unwrap();
        let e = Rational::new(num, den);
        let (h, hb) = conformal_dimensions(&cs, e, m);
        prop_assert_eq!(h - hb, -e * m);
    }

    #[test]
    fn contraction_is_associative(v in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 24)) {
        let d: Vec<C64> = v.iter().map(|(a, b)| c64(*a, *b)).collect();
        let a = ComplexTensor::new(vec![2, 3], d[..6].to_vec()).unwrap();
        let b = ComplexTensor::new(vec![3, 2, 2], d[6..18].to_vec()).unwrap();
        let c = ComplexTensor::new(vec![2, 3], d[18..24].to_vec()).unwrap();
        let ab_c = contract(&contract(&a, &b, &[(1, 0)]).unwrap(), &c, &[(1, 0)]).unwrap();
        let a_bc = contract(&a, &contract(&b, &c, &[(1, 0)]).unwrap(), &[(1, 0)]).unwrap();
        prop_assert!(vertexlab_core::numerics::residual(&ab_c, &a_bc).unwrap() <= 1e-12);
    }

    #[test]
    fn tails_are_path_independent(seed in 0u64..200, block in 0usize..6) {
        let spec = VertexLatticeSpec::seeded(3, 3, seed, ComplexBox::default(), ModelParams::default()).unwrap();
        let ins = EdgeId::V { x: 2, k: 1 };
        let anchor = Face::new(3, 0);
        let direct = shortest_tail(anchor, ins, 0, 3, 3, &[]).unwrap();
        let blocks = [
            EdgeId::V { x: 3, k: 0 }, EdgeId::V { x: 3, k: 1 }, EdgeId::H { y: 1, k: 2 },
            EdgeId::V { x: 3, k: 2 }, EdgeId::H { y: 2, k: 2 }, EdgeId::H { y: 2, k: 3 },
        ];
        let Ok(detour) = shortest_tail(anchor, ins, 0, 3, 3, &[blocks[block]]) else { return Ok(()) };
        for gen in [GeneratorId::f(0), GeneratorId::f(1), GeneratorId::f_bar(0), GeneratorId::f_bar(1)] {
            let a = current_expectation(&spec, &CurrentInsertion::new(gen, direct.clone()).unwrap());
            let b = current_expectation(&spec, &CurrentInsertion::new(gen, detour.clone()).unwrap());
            if let (Ok(a), Ok(b)) = (a, b) {
                prop_assert!(rel(a, b) <= 1e-10, "{gen:?} {a} {b}");
            }
        }
    }

    #[test]
    fn stripped_current_ignores_a_common_shift(seed in 0u64..100, shift in -0.4..0.4f64) {
        let p = ModelParams::default();
        let spec = VertexLatticeSpec::seeded(2, 2, seed, ComplexBox::default(), p).unwrap();
        let mut moved = spec.clone();
        let delta = p.eta * shift;
        for l in moved.col_lambdas.iter_mut().chain(moved.row_lambdas.iter_mut()) {
            *l += delta;
        }
        let tail = shortest_tail(Face::new(1, 0), EdgeId::V { x: 1, k: 1 }, 0, 2, 2, &[]).unwrap();
        for gen in [GeneratorId::f(0), GeneratorId::f(1), GeneratorId::f_bar(0), GeneratorId::f_bar(1)] {
            let ins = CurrentInsertion::new(gen, tail.clone()).unwrap();
            let (Ok(j), Ok(j2)) = (current_expectation(&spec, &ins), current_expectation(&moved, &ins)) else { continue };
            let pf = Parafermion::new(ParafermionKind::of_vertex_generator(gen), gen.index(), p.eta).unwrap();
            let a = line_angle(spec.col_lambdas[0], p.eta).unwrap();
            let a2 = line_angle(moved.col_lambdas[0], p.eta).unwrap();
            let s = pf.stripped(a, j, p.eta);
            prop_assert!(rel(s, pf.stripped(a2, j2, p.eta)) <= 1e-10, "{gen:?}");
        }
    }
}

#[test]
fn tl_relations_on_all_small_periods() {
    let x0 = c64(0.37, 0.11);
    let mut covered = std::collections::BTreeSet::new();
    for p in 2..=12i64 {
        for pp in 1..p {
            let Ok(cs) = CsosParams::new(p, pp) else { continue };
            if cs.n > 12 {
                continue;
            }
            covered.insert(cs.n);
            for len in 2..=6 {
                let r = check_tl_relations(&cs, len, x0).unwrap();
                assert!(r.iter().all(|x| *x <= 1e-10), "({p},{pp}) L={len}: {r:?}");
            }
        }
    }
    assert!(covered.len() >= 8, "{covered:?}");
}

#[test]
fn derived_integers_are_coprime() {
    for p in 2..=40i64 {
        for pp in 1..p {
            let Ok((ell, n)) = derive_ln(p, pp) else { continue };
            assert_eq!(num_gcd(ell, n), 1, "({p},{pp})");
            assert_eq!(Rational::new(2 * ell, n), Rational::new(p - pp, p));
        }
    }
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { num_gcd(b, a % b) }
}

#[test]
fn literal_ybt2_right_side_vanishes() {
    // With the displayed corner W(a,b,g,c) the right side never survives.
    let p = ModelParams::default();
    let (l1, l2) = (c64(0.31, -0.22), c64(-0.12, 0.4));
    let t = |h: [i64; 4], l| dressed_t(1, TailSign::Plus, h[0], h[1], h[2], h[3], l, &p).unwrap();
    let w = |a, b, c, d| face_weight(a, b, c, d, l1 - l2, &p).unwrap();
    let mut nonzero_lhs = 0;
    for a in -1..=1 {
        for [a, b, c, d, e, f] in tail_hexagons(a) {
            let mut lhs = c64(0.0, 0.0);
            let mut rhs = c64(0.0, 0.0);
            for g in (a - 4)..=(a + 4) {
                lhs += w(f, g, d, e) * t([a, b, g, f], l1) * t([b, c, d, g], l2);
                rhs += t([a, g, e, f], l2) * t([g, c, d, e], l1) * w(a, b, g, c);
            }
            assert_eq!(rhs, c64(0.0, 0.0));
            if lhs.norm() > 1e-6 {
                nonzero_lhs += 1;
            }
        }
    }
    assert!(nonzero_lhs > 0);
}

#[test]
fn detours_exist_and_carry_weight() {
    let spec = VertexLatticeSpec::seeded(3, 3, 3, ComplexBox::default(), ModelParams::default()).unwrap();
    let ins = EdgeId::V { x: 2, k: 1 };
    let direct = shortest_tail(Face::new(3, 0), ins, 0, 3, 3, &[]).unwrap();
    let detour = shortest_tail(Face::new(3, 0), ins, 0, 3, 3, &[EdgeId::V { x: 3, k: 0 }]).unwrap();
    assert_ne!(direct.steps, detour.steps);
    let gen = GeneratorId::f(0);
    let a = current_expectation(&spec, &CurrentInsertion::new(gen, direct).unwrap()).unwrap();
    let b = current_expectation(&spec, &CurrentInsertion::new(gen, detour).unwrap()).unwrap();
    assert!(a.norm() > 1e-6);
    assert!(rel(a, b) <= 1e-10);
}

#[test]
fn boundary_walks_are_admissible() {
    for seed in 0..50 {
        let w = seeded_boundary_walk(3, 3, 0, seed);
        for k in 0..w.len() {
            assert_eq!((w[k] - w[(k + 1) % w.len()]).abs(), 1);
        }
    }
}
