//! Property tests for the module invariants: norm identities, Schatten
//! monotonicity, multiset canonicalization, lifting bounds, and
//! serialization round trips.

use matsparse::constructions::{ball_in_cube_pairs, cross_polytope, cube_simplex_construction};
use matsparse::decomp::{extract_guarantees, lift_pairs};
use matsparse::matrix::{l2_norm, outer, Matrix};
use matsparse::multiset::Multiset;
use matsparse::sampling::{draw_multiset, rng_from_seed, sample_error};
use proptest::prelude::*;

fn matrix_strategy(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim)
        .prop_flat_map(|d| {
            proptest::collection::vec(-10.0f64..10.0, d * d)
                .prop_map(move |data| Matrix::new(d, d, data).unwrap())
        })
}

fn square_pair_strategy(max_dim: usize) -> impl Strategy<Value = (Matrix, Matrix)> {
    (1..=max_dim).prop_flat_map(|d| {
        (
            proptest::collection::vec(-10.0f64..10.0, d * d),
            proptest::collection::vec(-10.0f64..10.0, d * d),
        )
            .prop_map(move |(a, b)| {
                (Matrix::new(d, d, a).unwrap(), Matrix::new(d, d, b).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn operator_norm_transpose_invariant(a in matrix_strategy(8)) {
        let n = a.operator_norm().unwrap();
        let nt = a.transpose().operator_norm().unwrap();
        prop_assert!((n - nt).abs() <= 1e-10 * (1.0 + n));
    }

    #[test]
    fn operator_norm_triangle_inequality((a, b) in square_pair_strategy(8)) {
        let sum = (&a + &b).operator_norm().unwrap();
        let parts = a.operator_norm().unwrap() + b.operator_norm().unwrap();
        prop_assert!(sum <= parts + 1e-9);
    }

    #[test]
    fn schatten_monotone_in_p(a in matrix_strategy(8), p in 1.0f64..6.0, dq in 0.0f64..4.0) {
        let q = p + dq;
        let sp = a.schatten_norm(p).unwrap();
        let sq = a.schatten_norm(q).unwrap();
        prop_assert!(sq <= sp + 1e-10, "p={p} q={q}: {sq} > {sp}");
    }

    #[test]
    fn trace_bounded_by_dim_times_norm(a in matrix_strategy(8)) {
        let t = a.trace().unwrap().abs();
        let bound = a.rows() as f64 * a.operator_norm().unwrap();
        prop_assert!(t <= bound + 1e-9);
    }

    #[test]
    fn outer_norm_is_product_of_lengths(
        u in proptest::collection::vec(-5.0f64..5.0, 1..8),
        scale in -3.0f64..3.0,
    ) {
        let v: Vec<f64> = u.iter().rev().map(|x| x * scale + 0.25).collect();
        let m = outer(&u, &v).unwrap();
        let expected = l2_norm(&u) * l2_norm(&v);
        prop_assert!((m.operator_norm().unwrap() - expected).abs() <= 1e-9 * (1.0 + expected));
    }

    #[test]
    fn multiset_canonical_under_permutation(mut draws in proptest::collection::vec(0usize..6, 1..12)) {
        let a = Multiset::from_draws(&draws).unwrap();
        draws.reverse();
        let b = Multiset::from_draws(&draws).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.size(), draws.len());
    }

    #[test]
    fn matrix_json_round_trip(a in matrix_strategy(6)) {
        let s = serde_json::to_string(&a).unwrap();
        let back: Matrix = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(a, back);
    }

    #[test]
    fn sample_error_invariant_under_representation(
        draws in proptest::collection::vec(0usize..8, 1..10)
    ) {
        let dec = cross_polytope(4);
        let sigma = Multiset::from_draws(&draws).unwrap();
        let mut rev = draws.clone();
        rev.reverse();
        let sigma_rev = Multiset::from_draws(&rev).unwrap();
        let e1 = sample_error(&dec, &sigma).unwrap();
        let e2 = sample_error(&dec, &sigma_rev).unwrap();
        prop_assert_eq!(e1, e2);
    }

    #[test]
    fn extracted_bounds_never_exceed_lifted_error(seed in 0u64..500, k in 1usize..40) {
        let pairs = ball_in_cube_pairs(5);
        let lifted = lift_pairs(&pairs, 1e-9).unwrap();
        let dec = lifted.to_decomposition();
        let mut rng = rng_from_seed(seed);
        let sigma = draw_multiset(dec.weights(), k, &mut rng).unwrap();
        let lifted_error = sample_error(&dec, &sigma).unwrap();
        let b = extract_guarantees(&lifted, &sigma).unwrap();
        let root_d = 5.0f64.sqrt();
        prop_assert!(b.identity_error <= lifted_error + 1e-9);
        prop_assert!(root_d * b.balance_u <= lifted_error + 1e-9);
        prop_assert!(root_d * b.balance_v <= lifted_error + 1e-9);
    }
}

/// Lifted norms of contact configurations built from a body with
/// `B ⊆ K ⊆ r·B`: every lifted member norm is at most `d·r·(1+1/d)`, and for
/// `r ≤ 2` the symmetrized average norm is at most `4d√(r−1) + 1`.
#[test]
fn lifted_norm_bounds_on_constructed_instances() {
    // ball in cube: r = 1, both bounds are tight
    let d = 6usize;
    let lifted = lift_pairs(&ball_in_cube_pairs(d), 1e-9).unwrap();
    let dec = lifted.to_decomposition();
    let gamma = dec.gamma();
    let r = 1.0f64;
    assert!(gamma <= d as f64 * r * (1.0 + 1.0 / d as f64) + 1e-9, "γ = {gamma}");
    let sym = dec.symmetrize().unwrap();
    let b_bound = 4.0 * d as f64 * (r - 1.0f64).sqrt() + 1.0;
    assert!(
        sym.average_norm <= b_bound + 1e-9,
        "b = {} > {b_bound}",
        sym.average_norm
    );

    // cube/simplex contact points with ± copies: r = √(1+δ²) ≤ 2
    for (d, delta) in [(4usize, 0.3), (8, 0.5), (8, 1.0)] {
        let inst = cube_simplex_construction(d, delta).unwrap();
        let pairs = inst.symmetrized_contact_pairs();
        let lifted = lift_pairs(&pairs, 1e-9).unwrap();
        let dec = lifted.to_decomposition();
        let r = (1.0 + delta * delta).sqrt();
        let gamma = dec.gamma();
        assert!(
            gamma <= d as f64 * r * (1.0 + 1.0 / d as f64) + 1e-9,
            "d={d} δ={delta}: γ = {gamma}"
        );
        let sym = dec.symmetrize().unwrap();
        let b_bound = 4.0 * d as f64 * (r - 1.0).sqrt() + 1.0;
        assert!(
            sym.average_norm <= b_bound + 1e-9,
            "d={d} δ={delta}: b = {} > {b_bound}",
            sym.average_norm
        );
    }
}

/// The sampling error of PSD decompositions of the identity never exceeds
/// `max(γ, 1)`.
#[test]
fn psd_sampling_error_coarse_bound() {
    for dim in [2usize, 4, 7] {
        let dec = cross_polytope(dim);
        let bound = dec.gamma().max(1.0);
        for seed in 0..50u64 {
            let mut rng = rng_from_seed(seed);
            let k = 1 + (seed as usize % 9);
            let sigma = draw_multiset(dec.weights(), k, &mut rng).unwrap();
            let err = sample_error(&dec, &sigma).unwrap();
            assert!(err <= bound + 1e-9, "dim={dim} seed={seed}: {err} > {bound}");
        }
    }
}
