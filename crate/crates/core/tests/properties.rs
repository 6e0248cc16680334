//! Property tests for the structural invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use snake_walk::graph::{self, Graph};
use snake_walk::linalg;
use snake_walk::word::Word;

/// Random small undirected graph without self-loops or duplicates.
fn arb_graph() -> impl Strategy<Value = Graph> {
    (2usize..7, proptest::collection::vec((0usize..7, 0usize..7), 1..12)).prop_map(
        |(extra, pairs)| {
            let mut g = Graph::new();
            for v in 0..extra {
                g.add_vertex(format!("v{v}"));
            }
            for (a, b) in pairs {
                let u = g.add_vertex(format!("v{a}"));
                let v = g.add_vertex(format!("v{b}"));
                if u != v {
                    let _ = g.add_edge(u, v);
                }
            }
            g
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn snake_space_invariants(g in arb_graph(), n in 1usize..4) {
        if g.edge_count() == 0 {
            return Ok(());
        }
        let space = graph::enumerate_snakes(&g, n, 200_000).unwrap();
        // Count identity against the adjacency power.
        prop_assert_eq!(space.len() as u128, g.count_walks(n));
        // Exact symmetry and weights in {0, 1, 2}.
        prop_assert_eq!(space.adjacency().symmetry_defect(), 0.0);
        for (_, _, vals) in space.adjacency().rows() {
            for &v in vals {
                prop_assert!(v == 1.0 || v == 2.0);
            }
        }
        // Row sums equal the head and tail degrees.
        for (i, s) in space.snakes().iter().enumerate() {
            let expect = (g.degree(s.head()) + g.degree(s.tail())) as f64;
            prop_assert_eq!(space.adjacency().row_sum(i), expect);
        }
    }

    #[test]
    fn line_encoding_round_trip(x in -50i64..50, bits in 0u32..(1 << 12), len in 1usize..13) {
        let word = Word::new(bits, len);
        let positions = graph::line_decode(x, word);
        let (x2, word2) = graph::line_encode(&positions).unwrap();
        prop_assert_eq!(x, x2);
        prop_assert_eq!(word, word2);
    }

    #[test]
    fn chebyshev_evolution_preserves_norm(seed in 0u64..500, t in 0.0f64..8.0) {
        use rand::{Rng, SeedableRng};
        let dim = 24;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut h = linalg::CMatrix::zeros(dim, dim);
        for i in 0..dim {
            h[(i, i)] = Complex64::new(rng.gen::<f64>() - 0.5, 0.0);
            for j in i + 1..dim {
                let z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = linalg::norm2(&v);
        v.iter_mut().for_each(|c| *c /= norm);
        let out = snake_walk::propagator::chebyshev_evolve(&h, t, &v, 1e-10).unwrap();
        prop_assert!((linalg::norm2(&out) - 1.0).abs() < 1e-8);
        // Energy is conserved along the way.
        let before = linalg::inner(&v, &h.clone().apply_vec(&v)).re;
        let after = linalg::inner(&out, &h.clone().apply_vec(&out)).re;
        prop_assert!((before - after).abs() < 1e-7);
    }
}

use snake_walk::linalg::HermitianOp;
