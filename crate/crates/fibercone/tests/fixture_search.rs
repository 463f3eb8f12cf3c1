//! Search harness that found the pinned `fix_d1` fixture: exhaustive
//! enumeration of short compositions of positive Nielsen generators (and
//! petal permutations) of the rank-3 rose, filtered by
//!   - free cokernel rank of `Phi - I` exactly 1 (Smith normal form),
//!   - expanding, irreducible, train track,
//!   - the inverse automorphism also being an expanding irreducible train
//!     track map on the rose.
//!
//! Run manually with `cargo test -p fibercone --test fixture_search -- --ignored --nocapture`.

use fibercone::fixtures::{positive_nielsen_generators, rose_map};
use fibercone::graph::*;
use fibercone::linalg::smith_normal_form;
use fibercone::words::{inverse, reduce, Letter};
use fibercone::IntMatrix;

type Table = Vec<Vec<Letter>>;

fn substitute_table(outer: &Table, inner: &Table) -> Table {
    outer
        .iter()
        .map(|w| {
            reduce(
                &w.iter()
                    .flat_map(|&l| {
                        let img = &inner[(l.unsigned_abs() - 1) as usize];
                        if l > 0 { img.clone() } else { inverse(img) }
                    })
                    .collect::<Vec<_>>(),
            )
        })
        .collect()
}

/// Generator list: positive Nielsen transvections plus their inverses
/// paired, and the two 3-cycles.
fn generators(rank: u32) -> Vec<(Table, Table)> {
    let mut gens = Vec::new();
    for g in positive_nielsen_generators(rank) {
        // invert: x_i -> x_i x_j  has inverse  x_i -> x_i x_j^-1, etc.
        let mut inv: Table = (1..=rank as Letter).map(|k| vec![k]).collect();
        for (i, w) in g.iter().enumerate() {
            if w.len() == 2 {
                if w[0] == (i + 1) as Letter {
                    inv[i] = vec![w[0], -w[1]];
                } else {
                    inv[i] = vec![-w[0], w[1]];
                }
            }
        }
        gens.push((g, inv));
    }
    if rank == 3 {
        gens.push((vec![vec![2], vec![3], vec![1]], vec![vec![3], vec![1], vec![2]]));
        gens.push((vec![vec![3], vec![1], vec![2]], vec![vec![2], vec![3], vec![1]]));
    }
    gens
}

fn phi_minus_i(m: &GraphMap) -> IntMatrix {
    let phi = induced_homology_matrix(m).unwrap();
    phi.sub(&IntMatrix::identity(phi.rows))
}

fn qualifies(table: &Table, inv_table: &Table) -> bool {
    if table.iter().any(|w| w.is_empty() || w.iter().any(|&l| l < 0)) {
        return false; // positive maps only
    }
    let m = rose_map(3, table);
    let s = smith_normal_form(&phi_minus_i(&m));
    if s.free_rank() != 1 {
        return false;
    }
    let Ok(t) = transition_matrix(&m) else { return false };
    if !is_irreducible(&t) || !is_expanding(&m, 8).unwrap() || !is_train_track(&m).unwrap() {
        return false;
    }
    if inv_table.iter().any(|w| w.is_empty()) {
        return false;
    }
    let mi = rose_map(3, inv_table);
    let Ok(ti) = transition_matrix(&mi) else { return false };
    is_irreducible(&ti) && is_expanding(&mi, 8).unwrap() && is_train_track(&mi).unwrap()
}

#[test]
#[ignore = "search harness; run manually to regenerate the pinned fixture"]
fn search_fix_d1() {
    let gens = generators(3);
    let id: Table = vec![vec![1], vec![2], vec![3]];
    // BFS over composition sequences.
    let mut frontier: Vec<(Table, Table)> = vec![(id.clone(), id)];
    let mut found: Vec<(usize, usize, Table, Table)> = Vec::new();
    for depth in 1..=5usize {
        let mut next = Vec::new();
        for (fwd, inv) in &frontier {
            for (g, ginv) in &gens {
                // new = g  after fwd ; inverse = inv after ginv
                let nf = substitute_table(g, fwd);
                let ni = substitute_table(inv, ginv);
                next.push((nf, ni));
            }
        }
        for (nf, ni) in &next {
            if qualifies(nf, ni) {
                let size: usize = nf.iter().map(Vec::len).sum();
                found.push((size, depth, nf.clone(), ni.clone()));
            }
        }
        if !found.is_empty() {
            break;
        }
        frontier = next;
    }
    found.sort();
    assert!(!found.is_empty(), "no fixture found at depth <= 5");
    for (size, depth, fwd, inv) in found.iter().take(12) {
        println!("size={size} depth={depth} fwd={fwd:?} inv={inv:?}");
    }
}
