//! Subdivision of a train track map into an edge-to-edge map and its
//! greedy decomposition into Stallings folds, with bit-exact composition
//! verification. The fold order is deterministic (lowest dart pair first)
//! so folding sequences are replayable; they serialize to JSON for audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    compose, CombGraph, DartId, EdgeId, EdgePath, GraphError, GraphMap, VertexId,
};

#[derive(Debug, Error)]
pub enum FoldingError {
    #[error("map must send darts to single darts (subdivide first)")]
    NotEdgeToEdge,
    #[error("map is not a self-map")]
    NotSelfMap,
    #[error(
        "no foldable pair remains but the map is not an isomorphism; \
         the map is not pi1-surjective (stuck graph has {stuck_vertices} vertices, {stuck_edges} edges)"
    )]
    Stuck { stuck_vertices: u32, stuck_edges: u32, stuck: GraphMap },
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
}

/// Subdivision data: the refined graph `G_Delta`, the combinatorial
/// subdivision map `G -> G_Delta` (each dart to its chain of sub-darts),
/// interior preimage points per original edge, and the provenance of each
/// refined edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subdivision {
    pub refined: CombGraph,
    /// `G -> G_Delta`; the topological identification `G_Delta -> G` is its
    /// inverse homeomorphism and has no combinatorial representative.
    pub subdivision_map: GraphMap,
    /// Interior vertices of `G_Delta` inside each original edge, in order.
    pub section_points: Vec<Vec<VertexId>>,
    /// For each refined edge: (original edge, position in its chain, chain length).
    pub edge_origin: Vec<(EdgeId, usize, usize)>,
}

impl Subdivision {
    /// Forgetting the interior valence-2 vertices must recover the original
    /// graph: each original edge's chain composes back to a single edge.
    pub fn collapses_to(&self, g: &CombGraph) -> bool {
        if self.subdivision_map.domain != *g {
            return false;
        }
        for e in g.edges() {
            let chain = &self.subdivision_map.dart_image[g.positive_dart(e) as usize];
            let l = chain.len();
            if l == 0 {
                return false;
            }
            for (j, &d) in chain.darts.iter().enumerate() {
                if self.edge_origin[self.refined.edge_of(d) as usize] != (e, j, l) {
                    return false;
                }
            }
            // Interior chain vertices must be exactly the section points.
            let interior: Vec<VertexId> = chain.darts[..l - 1]
                .iter()
                .map(|&d| self.refined.term(d))
                .collect();
            if interior != self.section_points[e as usize] {
                return false;
            }
        }
        true
    }
}

/// One Stallings fold: two darts with a common initial vertex and equal
/// images are identified (with the forced terminal-vertex identification).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fold {
    pub graph_before: CombGraph,
    pub dart_pair: (DartId, DartId),
    pub graph_after: CombGraph,
    pub dart_projection: Vec<DartId>,
    pub vertex_projection: Vec<VertexId>,
}

impl Fold {
    /// The fold as a combinatorial graph map.
    pub fn as_map(&self) -> GraphMap {
        let dart_image = self
            .graph_before
            .darts()
            .map(|d| EdgePath {
                darts: vec![self.dart_projection[d as usize]],
                basepoint: self.vertex_projection[self.graph_before.init(d) as usize],
            })
            .collect();
        GraphMap::new(
            self.graph_before.clone(),
            self.graph_after.clone(),
            self.vertex_projection.clone(),
            dart_image,
        )
        .expect("fold projection is a valid graph map")
    }
}

/// A complete folding decomposition of an edge-to-edge map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldingSequence {
    pub start: CombGraph,
    pub folds: Vec<Fold>,
    pub terminal_iso: GraphMap,
    pub target_map: GraphMap,
}

impl FoldingSequence {
    /// Graphs along the sequence: `start = Gamma_0, ..., Gamma_k`.
    pub fn graphs(&self) -> Vec<&CombGraph> {
        let mut gs = vec![&self.start];
        for f in &self.folds {
            gs.push(&f.graph_after);
        }
        gs
    }
}

/// Suspension package: the subdivision and the folding decomposition of
/// one self-map, which together close up into the folded mapping torus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Suspension {
    pub subdivision: Subdivision,
    pub folding: FoldingSequence,
}

/// Subdivide a combinatorial self-map at the interior preimages of
/// vertices, producing `G_Delta` and the edge-to-edge map
/// `phi : G_Delta -> G` with `phi . subdivision = m`.
pub fn subdivide(m: &GraphMap) -> Result<(Subdivision, GraphMap), GraphError> {
    if !m.is_self_map() {
        return Err(GraphError::NotSelfMap);
    }
    let g = &m.domain;
    let mut n_vertices = g.n_vertices();
    let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut edge_origin: Vec<(EdgeId, usize, usize)> = Vec::new();
    let mut section_points: Vec<Vec<VertexId>> = Vec::new();
    let mut chains: Vec<Vec<DartId>> = Vec::new(); // positive darts per original edge
    for e in g.edges() {
        let d = g.positive_dart(e);
        let l = m.dart_image[d as usize].len();
        let mut interior = Vec::new();
        for _ in 1..l {
            interior.push(n_vertices);
            n_vertices += 1;
        }
        let mut stops = vec![g.init(d)];
        stops.extend(&interior);
        stops.push(g.term(d));
        let mut chain = Vec::new();
        for j in 0..l {
            chain.push((edges.len() as DartId) << 1);
            edges.push((stops[j], stops[j + 1]));
            edge_origin.push((e, j, l));
        }
        section_points.push(interior);
        chains.push(chain);
    }
    let refined = CombGraph::new(n_vertices, &edges)?;
    // Subdivision map G -> G_Delta.
    let sub_map = GraphMap::from_edge_images(
        g.clone(),
        refined.clone(),
        (0..g.n_vertices()).collect(),
        g.edges()
            .map(|e| EdgePath::new(&refined, chains[e as usize].clone(), g.init(g.positive_dart(e))))
            .collect::<Result<Vec<_>, _>>()?,
    )?;
    // Edge-to-edge map phi : G_Delta -> G.
    let mut vertex_image: Vec<VertexId> = (0..g.n_vertices())
        .map(|v| m.vertex_image[v as usize])
        .collect();
    let mut phi_images: Vec<EdgePath> = Vec::with_capacity(refined.n_edges() as usize);
    for re in refined.edges() {
        let (orig, j, _) = edge_origin[re as usize];
        let target = m.dart_image[g.positive_dart(orig) as usize].darts[j];
        phi_images.push(EdgePath::new(g, vec![target], g.init(target))?);
    }
    for e in g.edges() {
        let img = &m.dart_image[g.positive_dart(e) as usize];
        for (j, &int_v) in section_points[e as usize].iter().enumerate() {
            debug_assert_eq!(int_v as usize, vertex_image.len());
            vertex_image.push(g.term(img.darts[j]));
        }
        let _ = e;
    }
    // Interior vertices were appended per edge in edge order, matching the
    // numbering used above.
    let phi = GraphMap::from_edge_images(refined.clone(), g.clone(), vertex_image, phi_images)?;
    let subdivision = Subdivision { refined, subdivision_map: sub_map, section_points, edge_origin };
    Ok((subdivision, phi))
}

/// Apply a single fold of `(d1, d2)` to `graph`, returning the fold record.
fn apply_fold(graph: &CombGraph, d1: DartId, d2: DartId) -> Result<Fold, GraphError> {
    debug_assert_eq!(graph.init(d1), graph.init(d2));
    let e1 = graph.edge_of(d1);
    let e2 = graph.edge_of(d2);
    debug_assert_ne!(e1, e2);
    let w1 = graph.term(d1);
    let w2 = graph.term(d2);
    // Vertex projection: merge w2 into w1 (if distinct), compact ids.
    let merged: Vec<VertexId> = (0..graph.n_vertices())
        .map(|v| if v == w2 { w1 } else { v })
        .collect();
    let mut remap = vec![u32::MAX; graph.n_vertices() as usize];
    let mut next = 0u32;
    for v in 0..graph.n_vertices() {
        let tgt = merged[v as usize];
        if remap[tgt as usize] == u32::MAX {
            remap[tgt as usize] = next;
            next += 1;
        }
    }
    let vertex_projection: Vec<VertexId> =
        (0..graph.n_vertices()).map(|v| remap[merged[v as usize] as usize]).collect();
    // Edge set: drop e2; compact.
    let mut new_edges: Vec<(VertexId, VertexId)> = Vec::new();
    let mut edge_remap = vec![u32::MAX; graph.n_edges() as usize];
    for e in graph.edges() {
        if e == e2 {
            continue;
        }
        edge_remap[e as usize] = new_edges.len() as u32;
        let d = graph.positive_dart(e);
        new_edges.push((
            vertex_projection[graph.init(d) as usize],
            vertex_projection[graph.term(d) as usize],
        ));
    }
    let graph_after = CombGraph::new(next, &new_edges)?;
    // Dart projection: e2's darts go to e1's image, matching d2 -> d1.
    let dart_projection: Vec<DartId> = graph
        .darts()
        .map(|d| {
            let e = graph.edge_of(d);
            if e == e2 {
                let img_e1 = edge_remap[e1 as usize];
                // d2 maps onto d1's orientation.
                let same_side = (d == d2) == (d1 % 2 == 0);
                (img_e1 << 1) | u32::from(!same_side)
            } else {
                let img = edge_remap[e as usize];
                (img << 1) | (d & 1)
            }
        })
        .collect();
    Ok(Fold {
        graph_before: graph.clone(),
        dart_pair: (d1, d2),
        graph_after,
        dart_projection,
        vertex_projection,
    })
}

/// Greedy fold decomposition of an edge-to-edge self-map-to-target:
/// while two darts at a common vertex share an image dart, fold the
/// lexicographically least such pair; terminate at a graph isomorphism.
pub fn decompose_into_folds(phi: &GraphMap) -> Result<FoldingSequence, FoldingError> {
    decompose_with_order(phi, false)
}

/// Same decomposition with the dart-pair scan reversed (largest first);
/// used to exercise confluence of the composition identity.
pub fn decompose_into_folds_reversed(phi: &GraphMap) -> Result<FoldingSequence, FoldingError> {
    decompose_with_order(phi, true)
}

fn decompose_with_order(phi: &GraphMap, reversed: bool) -> Result<FoldingSequence, FoldingError> {
    if !phi.is_edge_to_edge() {
        return Err(FoldingError::NotEdgeToEdge);
    }
    let mut current = phi.clone();
    let mut folds: Vec<Fold> = Vec::new();
    loop {
        // Find a foldable pair.
        let g = current.domain.clone();
        let mut pairs: Vec<(DartId, DartId)> = Vec::new();
        for d1 in g.darts() {
            for d2 in d1 + 1..g.n_darts() {
                if g.init(d1) == g.init(d2)
                    && current.dart_image[d1 as usize].darts == current.dart_image[d2 as usize].darts
                {
                    pairs.push((d1, d2));
                }
            }
        }
        let pick = if reversed { pairs.last() } else { pairs.first() };
        let Some(&(d1, d2)) = pick else {
            if current.is_isomorphism() {
                return Ok(FoldingSequence {
                    start: phi.domain.clone(),
                    folds,
                    terminal_iso: current,
                    target_map: phi.clone(),
                });
            }
            return Err(FoldingError::Stuck {
                stuck_vertices: current.domain.n_vertices(),
                stuck_edges: current.domain.n_edges(),
                stuck: current,
            });
        };
        let fold = apply_fold(&g, d1, d2)?;
        // Induced map on the quotient: image of a new dart is the image of
        // any preimage dart (they agree on the folded pair by construction).
        let after = fold.graph_after.clone();
        let mut vertex_image = vec![0; after.n_vertices() as usize];
        for v in 0..g.n_vertices() {
            vertex_image[fold.vertex_projection[v as usize] as usize] =
                current.vertex_image[v as usize];
        }
        let mut dart_image: Vec<Option<EdgePath>> = vec![None; after.n_darts() as usize];
        for d in g.darts() {
            let nd = fold.dart_projection[d as usize];
            dart_image[nd as usize].get_or_insert_with(|| current.dart_image[d as usize].clone());
        }
        let dart_image: Vec<EdgePath> = dart_image.into_iter().map(Option::unwrap).collect();
        current = GraphMap::new(after, current.codomain.clone(), vertex_image, dart_image)?;
        folds.push(fold);
    }
}

/// Bit-exact verification that the folds composed with the terminal
/// isomorphism reproduce the target map dart-by-dart.
pub fn verify_composition(fs: &FoldingSequence) -> bool {
    let mut acc = GraphMap::identity(&fs.start);
    for fold in &fs.folds {
        if fold.graph_before != acc.codomain {
            return false;
        }
        let Ok(next) = compose(&fold.as_map(), &acc) else { return false };
        acc = next;
    }
    let Ok(total) = compose(&fs.terminal_iso, &acc) else { return false };
    total == fs.target_map
}

/// Full suspension pipeline: subdivide, then decompose into folds.
pub fn suspension(m: &GraphMap) -> Result<Suspension, FoldingError> {
    let (subdivision, phi) = subdivide(m)?;
    let folding = decompose_into_folds(&phi)?;
    Ok(Suspension { subdivision, folding })
}

pub use crate::section::{cell_degrees, CellDegree};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::graph::iterate;

    #[test]
    fn subdivide_rose2_gold() {
        let m = rose2_gold();
        let (sub, phi) = subdivide(&m).unwrap();
        // 2 vertices, 3 edges {a, b1, b2}; a -> b, b1 -> b, b2 -> a.
        assert_eq!(sub.refined.n_vertices(), 2);
        assert_eq!(sub.refined.n_edges(), 3);
        assert!(phi.is_edge_to_edge());
        // Composing with the subdivision map recovers m.
        assert_eq!(compose(&phi, &sub.subdivision_map).unwrap(), m);
        assert!(sub.collapses_to(&m.domain));
    }

    #[test]
    fn subdivide_edge_to_edge_is_trivial() {
        let g = crate::graph::CombGraph::rose(2);
        let swap = rose_map(2, &[vec![2], vec![1]]);
        let (sub, phi) = subdivide(&swap).unwrap();
        assert_eq!(sub.refined, g);
        assert_eq!(phi, swap);
    }

    #[test]
    fn subdivide_rose1_double() {
        let m = rose1_double();
        let (sub, phi) = subdivide(&m).unwrap();
        assert_eq!(sub.refined.n_vertices(), 2);
        assert_eq!(sub.refined.n_edges(), 2);
        assert!(phi.is_edge_to_edge());
        assert_eq!(compose(&phi, &sub.subdivision_map).unwrap(), m);
    }

    #[test]
    fn decompose_rose2_gold() {
        let (_, phi) = subdivide(&rose2_gold()).unwrap();
        let fs = decompose_into_folds(&phi).unwrap();
        assert_eq!(fs.folds.len(), 1);
        assert!(verify_composition(&fs));
        // The fold identifies the two vertices of G_Delta.
        assert_eq!(fs.folds[0].graph_after.n_vertices(), 1);
    }

    #[test]
    fn decompose_isomorphism_is_empty() {
        let swap = rose_map(2, &[vec![2], vec![1]]);
        let fs = decompose_into_folds(&swap).unwrap();
        assert!(fs.folds.is_empty());
        assert!(verify_composition(&fs));
    }

    #[test]
    fn decompose_rose1_double_fails() {
        let (_, phi) = subdivide(&rose1_double()).unwrap();
        match decompose_into_folds(&phi) {
            Err(FoldingError::Stuck { stuck_edges, .. }) => assert!(stuck_edges > 0),
            other => panic!("expected stuck decomposition, got {other:?}"),
        }
    }

    #[test]
    fn fold_shrinks_dart_count() {
        let (_, phi) = subdivide(&fix_d1()).unwrap();
        let fs = decompose_into_folds(&phi).unwrap();
        assert!(verify_composition(&fs));
        let mut darts = fs.start.n_darts();
        assert!(fs.folds.len() as u32 <= fs.start.n_darts() / 2);
        for f in &fs.folds {
            assert_eq!(f.graph_after.n_darts(), darts - 2);
            darts = f.graph_after.n_darts();
        }
    }

    #[test]
    fn composition_verifies_on_random_automorphisms() {
        for seed in 0..20u64 {
            let rank = 2 + (seed % 3) as u32;
            let m = random_positive_automorphism(rank, 6, seed);
            let (_, phi) = subdivide(&m).unwrap();
            let fs = decompose_into_folds(&phi).unwrap();
            assert!(verify_composition(&fs), "seed {seed}");
            // Confluence: the reversed greedy order also composes correctly.
            let fs_rev = decompose_into_folds_reversed(&phi).unwrap();
            assert!(verify_composition(&fs_rev), "seed {seed} reversed");
        }
    }

    #[test]
    fn tampered_sequence_fails_verification() {
        let m = random_positive_automorphism(3, 5, 1);
        let (_, phi) = subdivide(&m).unwrap();
        let mut fs = decompose_into_folds(&phi).unwrap();
        assert!(verify_composition(&fs));
        if fs.folds.len() > 1 {
            fs.folds.remove(0);
            assert!(!verify_composition(&fs));
        }
    }

    #[test]
    fn subdivision_of_iterate_composes() {
        let m2 = iterate(&rose2_gold(), 2).unwrap();
        let (sub, phi) = subdivide(&m2).unwrap();
        assert_eq!(compose(&phi, &sub.subdivision_map).unwrap(), m2);
    }

    #[test]
    fn folding_sequence_serializes() {
        let (_, phi) = subdivide(&rose2_gold()).unwrap();
        let fs = decompose_into_folds(&phi).unwrap();
        let json = serde_json::to_string(&fs).unwrap();
        let back: FoldingSequence = serde_json::from_str(&json).unwrap();
        assert!(verify_composition(&back));
    }
}
