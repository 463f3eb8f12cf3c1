//! Pinned graph-map fixtures and deterministic random positive
//! automorphisms used across test suites.
//!
//! `fix_d1` is an expanding irreducible train track automorphism of the
//! rank-3 rose with `det(Phi - I) = 0` and free cokernel rank 1, found by
//! exhaustive search over short compositions of positive Nielsen
//! generators (the search harness lives in the test suite) and pinned
//! here together with a train-track inverse representative.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::graph::{CombGraph, EdgePath, GraphMap};
use crate::words::Letter;

/// Build a rose self-map from images of the petals given as words in the
/// petal letters (`+k`/`-k`, 1-based).
pub fn rose_map(rank: u32, images: &[Vec<Letter>]) -> GraphMap {
    let g = CombGraph::rose(rank);
    let paths: Vec<EdgePath> = images
        .iter()
        .map(|w| {
            let darts = w
                .iter()
                .map(|&l| {
                    let e = (l.unsigned_abs() - 1) * 2;
                    if l > 0 { e } else { e | 1 }
                })
                .collect();
            EdgePath::new(&g, darts, 0).expect("rose paths always compose")
        })
        .collect();
    GraphMap::from_edge_images(g.clone(), g, vec![0], paths).expect("valid rose map")
}

/// Golden-ratio rose map: `a -> b`, `b -> ba`.
pub fn rose2_gold() -> GraphMap {
    rose_map(2, &[vec![2], vec![2, 1]])
}

/// Derived inverse representative of [`rose2_gold`]: `a -> a^-1 b`, `b -> a`.
pub fn rose2_gold_inverse() -> GraphMap {
    rose_map(2, &[vec![-1, 2], vec![1]])
}

/// Fibonacci rose map: `a -> ab`, `b -> a`.
pub fn rose2_fib() -> GraphMap {
    rose_map(2, &[vec![1, 2], vec![1]])
}

/// Degree-two circle map: one loop, `e -> ee`. Not a homotopy equivalence.
pub fn rose1_double() -> GraphMap {
    rose_map(1, &[vec![1, 1]])
}

/// Pinned d = 1 fixture: `a -> aabac`, `b -> ab`, `c -> ac`, a positive
/// automorphism of the rank-3 rose that is an expanding irreducible train
/// track map with `det(Phi - I) = 0` and free cokernel rank 1 (so the
/// invariant free abelian cover rank is d = 1, with edge labels
/// `a -> 0, b -> 1, c -> -1`).
pub fn fix_d1() -> GraphMap {
    rose_map(3, &[vec![1, 1, 2, 1, 3], vec![1, 2], vec![1, 3]])
}

/// Inverse representative of [`fix_d1`]: `a -> a c^-1 b^-1`,
/// `b -> b c a^-1 b`, `c -> b c a^-1 c`. Composing with [`fix_d1`] freely
/// reduces to the identity on each petal, and the map is itself an
/// expanding irreducible train track map.
pub fn fix_d1_inverse() -> GraphMap {
    rose_map(3, &[vec![1, -3, -2], vec![2, 3, -1, 2], vec![2, 3, -1, 3]])
}

/// Positive Nielsen generators of rank `r`: maps `x_i -> x_i x_j` and
/// `x_i -> x_j x_i` for `i != j`, as petal-image tables.
pub fn positive_nielsen_generators(rank: u32) -> Vec<Vec<Vec<Letter>>> {
    let mut gens = Vec::new();
    for i in 1..=rank as Letter {
        for j in 1..=rank as Letter {
            if i == j {
                continue;
            }
            let mut right: Vec<Vec<Letter>> = (1..=rank as Letter).map(|k| vec![k]).collect();
            right[(i - 1) as usize] = vec![i, j];
            gens.push(right);
            let mut left: Vec<Vec<Letter>> = (1..=rank as Letter).map(|k| vec![k]).collect();
            left[(i - 1) as usize] = vec![j, i];
            gens.push(left);
        }
    }
    gens
}

/// Compose an automorphism table on the left with a generator table.
fn substitute_table(outer: &[Vec<Letter>], inner: &[Vec<Letter>]) -> Vec<Vec<Letter>> {
    outer
        .iter()
        .map(|w| {
            w.iter()
                .flat_map(|&l| {
                    let img = &inner[(l.unsigned_abs() - 1) as usize];
                    if l > 0 { img.clone() } else { crate::words::inverse(img) }
                })
                .collect()
        })
        .collect()
}

/// Deterministic pseudo-random positive automorphism: composition of
/// `len` positive Nielsen generators of the given rank.
pub fn random_positive_automorphism(rank: u32, len: usize, seed: u64) -> GraphMap {
    let gens = positive_nielsen_generators(rank);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images: Vec<Vec<Letter>> = (1..=rank as Letter).map(|k| vec![k]).collect();
    for _ in 0..len {
        let g = &gens[rng.gen_range(0..gens.len())];
        images = substitute_table(g, &images);
    }
    rose_map(rank, &images)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        rose2_gold();
        rose2_gold_inverse();
        rose2_fib();
        rose1_double();
        fix_d1();
        fix_d1_inverse();
    }

    #[test]
    fn random_automorphisms_are_deterministic() {
        let a = random_positive_automorphism(3, 6, 42);
        let b = random_positive_automorphism(3, 6, 42);
        assert_eq!(a, b);
    }
}
