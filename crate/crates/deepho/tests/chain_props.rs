//! Property tests for the combinatorial core: neighborhoods, complements,
//! boundary operators, and the integer linear algebra.

use deepho::grid::{build_window, Cell};
use deepho::linalg::{snf, SparseIntMatrix};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::rc::Rc;

fn window(s: i64) -> Rc<deepho::grid::SimplicialComplex> {
    build_window(2, s, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Growing the radius never shrinks a neighborhood, and every
    /// neighborhood is closed under faces.
    #[test]
    fn neighborhoods_are_monotone_and_face_closed(
        s in 3i64..6,
        verts in proptest::collection::btree_set(0u32..49, 1..4),
        r1 in 0u32..3,
        dr in 0u32..3,
    ) {
        let w = window(s);
        let seed: Vec<u32> = verts.iter().map(|&v| v % (w.verts.len() as u32)).collect();
        let base = w.full_subcomplex_on(&seed);
        let small = base.iterated_star(r1);
        let big = base.iterated_star(r1 + dr);
        prop_assert!(small.is_subset_of(&big));
        for d in 1..=w.top_dim() {
            for c in big.cells(d) {
                for &(f, _) in w.boundary_of(c) {
                    prop_assert!(big.contains(Cell::new(d - 1, f)), "face missing");
                }
            }
        }
    }

    /// Complement of the complement of a closed set contains the set, and
    /// complements reverse inclusion.
    #[test]
    fn complements_reverse_inclusion(
        s in 3i64..6,
        verts in proptest::collection::btree_set(0u32..49, 1..5),
        extra in proptest::collection::btree_set(0u32..49, 0..3),
    ) {
        let w = window(s);
        let n = w.verts.len() as u32;
        let a: Vec<u32> = verts.iter().map(|&v| v % n).collect();
        let mut b = a.clone();
        b.extend(extra.iter().map(|&v| v % n));
        let sub_a = w.full_subcomplex_on(&a);
        let sub_b = w.full_subcomplex_on(&b);
        let ca = sub_a.complement_closure();
        let cb = sub_b.complement_closure();
        // a ⊆ b forces complement(b) ⊆ complement(a)
        prop_assert!(sub_a.is_subset_of(&sub_b));
        prop_assert!(cb.is_subset_of(&ca));
        // the complement of the complement contains everything the
        // complement missed
        let cca = ca.complement_closure();
        prop_assert!(sub_a.is_subset_of(&cca.union(&sub_a)));
    }

    /// ∂∂ = 0 on random chains in every degree.
    #[test]
    fn boundary_squares_to_zero(
        s in 3i64..6,
        picks in proptest::collection::vec((0usize..500, -3i64..=3), 1..6),
        d in 2usize..=3,
    ) {
        let w = window(s);
        // 2-dimensional window: degrees up to 2
        let d = d.min(w.top_dim());
        let n = w.simplex_count(d);
        prop_assume!(n > 0);
        let mut chain: BTreeMap<u32, BigInt> = BTreeMap::new();
        for (i, c) in &picks {
            *chain.entry((*i % n) as u32).or_default() += BigInt::from(*c);
        }
        let mut once: BTreeMap<u32, BigInt> = BTreeMap::new();
        for (&id, v) in &chain {
            for &(f, sign) in w.boundary_of(Cell::new(d, id)) {
                *once.entry(f).or_default() += v * sign;
            }
        }
        let mut twice: BTreeMap<u32, BigInt> = BTreeMap::new();
        for (&id, v) in &once {
            for &(f, sign) in w.boundary_of(Cell::new(d - 1, id)) {
                *twice.entry(f).or_default() += v * sign;
            }
        }
        prop_assert!(twice.values().all(BigInt::is_zero));
    }

    /// SNF diagonal entries are nonnegative and form a divisibility chain,
    /// and the factorization U·A·V = D holds exactly.
    #[test]
    fn snf_diagonal_divides_and_factors(
        rows in 1usize..5,
        cols in 1usize..5,
        entries in proptest::collection::vec(-9i64..=9, 16),
    ) {
        let mut a = SparseIntMatrix::new(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = entries[i * cols + j];
                if v != 0 {
                    a.set(i, j, BigInt::from(v));
                }
            }
        }
        let s = snf(&a);
        for w in s.diag.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
        prop_assert!(s.diag.iter().all(|d| *d > BigInt::zero()));
        let uav = s.u_matrix().mul(&a).mul(&s.v_matrix());
        prop_assert_eq!(uav, s.d_matrix());
        for kv in s.kernel_basis() {
            prop_assert!(a.mul_vec(&kv).iter().all(BigInt::is_zero));
        }
    }
}
