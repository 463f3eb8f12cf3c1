//! The suspension stack of a folding sequence with its free-abelian
//! grading, and the cross-section machinery built on it: cell degree
//! vectors, the positive cone, and fiber graphs with first-return maps
//! for primitive classes in the positive cone.
//!
//! The folded mapping torus is modelled as a cyclic stack of stages (one
//! per fold, plus the wrap through the terminal isomorphism and the
//! subdivision). Stage data carries exact `Z^d` voltages on darts and
//! lift potentials on vertices, so heights in the `Gamma = H + Z` cover
//! are exact rationals with denominator the stage count. A fiber is the
//! level set of a generic exact height; its first-return map is read off
//! by flowing one height unit, with mid-arc vertex landings snapped
//! forward along their arc (a homotopy that leaves the monodromy class
//! untouched).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{CohomClass, OpenCone};
use crate::cover::{hvec_add, hvec_sub, HStructure, HVec};
use crate::folding::Suspension;
use crate::graph::{CombGraph, DartId, EdgeId, EdgePath, GraphError, GraphMap, VertexId};
use crate::linalg::{reduce_mod_lattice, row_kernel_basis};
use crate::{Int, Rat};

#[derive(Debug, Error)]
pub enum SectionError {
    #[error("suspension and H-structure belong to different maps")]
    MismatchedInputs,
    #[error("class has wrong dimension: expected {expected}, got {got}")]
    BadDimension { expected: usize, got: usize },
    #[error("class is not primitive")]
    NotPrimitive,
    #[error("class lies outside the positive cone")]
    OutsidePositiveCone,
    #[error("the cover rank is d = 0; fiber construction needs d >= 1")]
    DegenerateRank,
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("internal section invariant failed: {0}")]
    Internal(&'static str),
}

fn rat_i(v: i64) -> Rat {
    Rat::from_integer(Int::from(v))
}

// ---------------------------------------------------------------------------
// Voltage stack
// ---------------------------------------------------------------------------

/// One stage of the cyclic suspension stack: a graph with exact voltages,
/// the map to the next stage's graph, and the stage-map lift potentials.
#[derive(Clone, Debug)]
pub struct Stage {
    pub graph: CombGraph,
    /// Voltage per dart (odd darts carry the negated even voltage).
    pub voltages: Vec<HVec>,
    /// Stage-map lift potential per vertex.
    pub potentials: Vec<HVec>,
    /// Vertex images in the next stage's graph.
    pub vertex_image: Vec<VertexId>,
    /// Dart images in the next stage's graph (single darts except the wrap).
    pub dart_image: Vec<Vec<DartId>>,
}

/// The full cyclic stack: stages `0..k` are folds, stage `k` is the wrap
/// (terminal isomorphism followed by subdivision back into stage 0).
#[derive(Clone, Debug)]
pub struct VoltageStack {
    pub d: usize,
    pub stages: Vec<Stage>,
}

/// Assemble the voltage stack of a suspension with respect to an
/// H-structure of the underlying self-map.
pub fn build_stack(susp: &Suspension, h: &HStructure) -> Result<VoltageStack, SectionError> {
    let g = &susp.subdivision.subdivision_map.domain;
    let phi = &susp.folding.target_map;
    if phi.codomain != *g
        || susp.folding.start != susp.subdivision.refined
        || h.edge_label.len() != g.n_edges() as usize
    {
        return Err(SectionError::MismatchedInputs);
    }
    let d = h.d;
    let refined = &susp.subdivision.refined;
    // Potentials of phi_0 : Gamma_0 -> G: original vertices carry the psi
    // potentials, interior subdivision vertices carry the prefix voltage
    // of the image path they cut.
    let mut dphi: Vec<HVec> = vec![vec![0; d]; refined.n_vertices() as usize];
    for v in 0..g.n_vertices() {
        dphi[v as usize] = h.psi_potentials[v as usize].clone();
    }
    for e in g.edges() {
        let dart = g.positive_dart(e);
        let chain = &susp.subdivision.subdivision_map.dart_image[dart as usize].darts;
        let mut acc = h.psi_potentials[g.init(dart) as usize].clone();
        for (j, &sub_dart) in chain.iter().enumerate() {
            let target = phi.dart_image[sub_dart as usize].darts[0];
            acc = hvec_add(&acc, &h.voltage(target));
            if j + 1 < chain.len() {
                let interior = susp.subdivision.section_points[e as usize][j];
                dphi[interior as usize] = acc.clone();
            }
        }
    }
    // Walk the folds, tracking the composite-to-G dart maps and potentials.
    let mut graphs: Vec<CombGraph> = vec![refined.clone()];
    let mut maps_to_g: Vec<Vec<DartId>> =
        vec![phi.dart_image.iter().map(|p| p.darts[0]).collect()];
    let mut potentials_to_g: Vec<Vec<HVec>> = vec![dphi];
    for fold in &susp.folding.folds {
        let prev_map = maps_to_g.last().unwrap().clone();
        let prev_pot = potentials_to_g.last().unwrap().clone();
        let after = fold.graph_after.clone();
        let mut next_map = vec![u32::MAX; after.n_darts() as usize];
        for dart in fold.graph_before.darts() {
            next_map[fold.dart_projection[dart as usize] as usize] = prev_map[dart as usize];
        }
        // Quotient potentials: the kept terminal vertex of the folded pair
        // pins the merged class; everything else passes through.
        let (d1, d2) = fold.dart_pair;
        let w1 = fold.graph_before.term(d1);
        let w2 = fold.graph_before.term(d2);
        let mut next_pot: Vec<Option<HVec>> = vec![None; after.n_vertices() as usize];
        for v in 0..fold.graph_before.n_vertices() {
            if v != w2 {
                next_pot[fold.vertex_projection[v as usize] as usize] =
                    Some(prev_pot[v as usize].clone());
            }
        }
        if w1 == w2 {
            next_pot[fold.vertex_projection[w2 as usize] as usize] =
                Some(prev_pot[w2 as usize].clone());
        }
        graphs.push(after);
        maps_to_g.push(next_map);
        potentials_to_g.push(
            next_pot
                .into_iter()
                .map(|o| o.expect("every quotient vertex has a surviving preimage"))
                .collect(),
        );
    }
    // Per-stage dart voltages derived from the composite potentials:
    // g_s(dart) = dphi(init) + g_G(image dart) - dphi(term).
    let voltages_of = |graph: &CombGraph, to_g: &[DartId], pot: &[HVec]| -> Vec<HVec> {
        graph
            .darts()
            .map(|dart| {
                hvec_sub(
                    &hvec_add(&pot[graph.init(dart) as usize], &h.voltage(to_g[dart as usize])),
                    &pot[graph.term(dart) as usize],
                )
            })
            .collect()
    };
    let k = susp.folding.folds.len();
    let mut stages: Vec<Stage> = Vec::with_capacity(k + 1);
    for (s, fold) in susp.folding.folds.iter().enumerate() {
        let graph = graphs[s].clone();
        let voltages = voltages_of(&graph, &maps_to_g[s], &potentials_to_g[s]);
        let potentials: Vec<HVec> = (0..graph.n_vertices())
            .map(|v| {
                hvec_sub(
                    &potentials_to_g[s][v as usize],
                    &potentials_to_g[s + 1][fold.vertex_projection[v as usize] as usize],
                )
            })
            .collect();
        stages.push(Stage {
            graph,
            voltages,
            potentials,
            vertex_image: fold.vertex_projection.clone(),
            dart_image: fold.dart_projection.iter().map(|&nd| vec![nd]).collect(),
        });
    }
    // Wrap stage: terminal iso into G, then subdivision into stage 0.
    let iso = &susp.folding.terminal_iso;
    let sub = &susp.subdivision.subdivision_map;
    let graph = graphs[k].clone();
    let voltages = voltages_of(&graph, &maps_to_g[k], &potentials_to_g[k]);
    let potentials = potentials_to_g[k].clone();
    let vertex_image: Vec<VertexId> =
        (0..graph.n_vertices()).map(|v| iso.vertex_image[v as usize]).collect();
    let dart_image: Vec<Vec<DartId>> = graph
        .darts()
        .map(|dart| {
            let iso_dart = iso.dart_image[dart as usize].darts[0];
            sub.dart_image[iso_dart as usize].darts.clone()
        })
        .collect();
    stages.push(Stage { graph, voltages, potentials, vertex_image, dart_image });
    let stack = VoltageStack { d, stages };
    validate_stack(&stack)?;
    Ok(stack)
}

/// Voltage-map condition on every stage and dart:
/// `delta(init) + g_next(image path) = g(dart) + delta(term)`.
fn validate_stack(stack: &VoltageStack) -> Result<(), SectionError> {
    let s_count = stack.stages.len();
    for (s, stage) in stack.stages.iter().enumerate() {
        let next = &stack.stages[(s + 1) % s_count];
        for dart in stage.graph.darts() {
            let mut path_voltage = vec![0i64; stack.d];
            for &q in &stage.dart_image[dart as usize] {
                path_voltage = hvec_add(&path_voltage, &next.voltages[q as usize]);
            }
            let lhs = hvec_add(&stage.potentials[stage.graph.init(dart) as usize], &path_voltage);
            let rhs = hvec_add(
                &stage.voltages[dart as usize],
                &stage.potentials[stage.graph.term(dart) as usize],
            );
            if lhs != rhs {
                return Err(SectionError::Internal("voltage-map condition violated"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Cell degrees and the positive cone
// ---------------------------------------------------------------------------

/// Degree of a 1-cell trajectory of the folded mapping torus in
/// `Gamma tensor Q`: an exact rational H-part and the suspension part
/// (each stage contributes `1/S` of a full pass).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellDegree {
    pub h: Vec<Rat>,
    pub z: Rat,
}

impl CellDegree {
    pub fn pair(&self, alpha: &CohomClass) -> Rat {
        let mut acc = Rat::zero();
        for (a, x) in alpha.h_part().iter().zip(&self.h) {
            acc += rat_i(*a) * x.clone();
        }
        acc + rat_i(alpha.n_alpha()) * self.z.clone()
    }

    /// Primitive integer normal with the same positivity half-space.
    pub fn normal(&self) -> Vec<i64> {
        let mut denom = self.z.denom().clone();
        for x in &self.h {
            denom = num_integer::lcm(denom, x.denom().clone());
        }
        let scale = Rat::from_integer(denom);
        let mut v: Vec<i64> = self
            .h
            .iter()
            .map(|x| (x.clone() * scale.clone()).to_integer().to_i64().expect("small normal"))
            .collect();
        v.push((self.z.clone() * scale).to_integer().to_i64().expect("small normal"));
        crate::cones::primitive(&v)
    }
}

/// Constraint digraph over vertex-trajectory nodes `(stage, vertex)`.
///
/// Arcs carry the degree contribution of one 1-cell crossing:
/// - vertical cells: `(s, v) -> (s+1, f_s(v))` weighted by the stage-map
///   potential at `v`;
/// - junction cells of length-`>= 2` image chains: from both bottom
///   corners to the junction vertex, weighted by the displacement of the
///   interior junction.
///
/// A height function transverse to the suspension semiflow exists for
/// `alpha` exactly when every directed cycle has positive total pairing;
/// cycle classes are honest elements of `Gamma` (closed 1-cell
/// trajectories).
pub(crate) struct ConstraintGraph {
    /// Node index per (stage, vertex).
    pub offsets: Vec<usize>,
    pub n_nodes: usize,
    /// Arcs (from, to, h-part, stage-steps).
    pub arcs: Vec<(usize, usize, HVec, i64)>,
    pub s_count: i64,
}

impl ConstraintGraph {
    pub fn node(&self, s: usize, v: VertexId) -> usize {
        self.offsets[s] + v as usize
    }
}

pub(crate) fn constraint_graph(stack: &VoltageStack) -> ConstraintGraph {
    let s_count = stack.stages.len();
    let mut offsets = Vec::with_capacity(s_count);
    let mut n_nodes = 0usize;
    for stage in &stack.stages {
        offsets.push(n_nodes);
        n_nodes += stage.graph.n_vertices() as usize;
    }
    let mut cg = ConstraintGraph { offsets, n_nodes, arcs: Vec::new(), s_count: s_count as i64 };
    for (s, stage) in stack.stages.iter().enumerate() {
        let next_s = (s + 1) % s_count;
        let next = &stack.stages[next_s];
        for v in 0..stage.graph.n_vertices() {
            cg.arcs.push((
                cg.node(s, v),
                cg.node(next_s, stage.vertex_image[v as usize]),
                stage.potentials[v as usize].clone(),
                1,
            ));
        }
        for dart in stage.graph.darts() {
            let path = &stage.dart_image[dart as usize];
            let l = path.len();
            if l < 2 {
                continue;
            }
            let v0 = stage.graph.init(dart);
            let v1 = stage.graph.term(dart);
            let base = &stage.potentials[v0 as usize];
            let g = &stage.voltages[dart as usize];
            let mut prefix = vec![0i64; stack.d];
            for &q in path.iter().take(l - 1) {
                prefix = hvec_add(&prefix, &next.voltages[q as usize]);
                let junction = next.graph.term(q);
                let from_left = hvec_add(base, &prefix);
                cg.arcs.push((cg.node(s, v0), cg.node(next_s, junction), from_left.clone(), 1));
                cg.arcs.push((
                    cg.node(s, v1),
                    cg.node(next_s, junction),
                    hvec_sub(&from_left, g),
                    1,
                ));
            }
        }
    }
    cg
}

/// Classes of the simple directed cycles of the constraint digraph, as
/// degree vectors (the suspension part counts stage steps over the stage
/// count). The digraph is layered, so every cycle length is a multiple of
/// the stage count and enumeration terminates quickly at desk scale.
pub(crate) fn cycle_classes(cg: &ConstraintGraph) -> Vec<CellDegree> {
    let mut adj: Vec<Vec<(usize, &HVec)>> = vec![Vec::new(); cg.n_nodes];
    for (from, to, h, _) in &cg.arcs {
        adj[*from].push((*to, h));
    }
    let d = cg.arcs.first().map_or(0, |(_, _, h, _)| h.len());
    let mut classes: BTreeSet<(HVec, i64)> = BTreeSet::new();
    // DFS for simple cycles whose minimal node is the start (Johnson-style
    // deduplication).
    for start in 0..cg.n_nodes {
        let mut stack_nodes: Vec<usize> = vec![start];
        let mut on_path = vec![false; cg.n_nodes];
        on_path[start] = true;
        // Frame: (node, next arc index, accumulated h).
        let mut frames: Vec<(usize, usize, HVec)> = vec![(start, 0, vec![0; d])];
        while let Some(&mut (node, ref mut idx, ref acc)) = frames.last_mut() {
            if *idx < adj[node].len() {
                let (to, h) = adj[node][*idx];
                *idx += 1;
                let acc2 = hvec_add(acc, h);
                if to == start {
                    classes.insert((acc2, frames.len() as i64));
                } else if to > start && !on_path[to] {
                    on_path[to] = true;
                    stack_nodes.push(to);
                    frames.push((to, 0, acc2));
                }
            } else {
                frames.pop();
                on_path[stack_nodes.pop().unwrap()] = false;
            }
        }
    }
    classes
        .into_iter()
        .map(|(h, len)| CellDegree {
            h: h.into_iter().map(rat_i).collect(),
            z: Rat::new(Int::from(len), Int::from(cg.s_count)),
        })
        .collect()
}

/// Degree classes of the closed 1-cell trajectories of the folded mapping
/// torus: integer H-parts with the suspension coordinate normalized so a
/// full pass through the sequence contributes 1.
pub fn cell_degrees(susp: &Suspension, h: &HStructure) -> Result<Vec<CellDegree>, SectionError> {
    let stack = build_stack(susp, h)?;
    Ok(cycle_classes(&constraint_graph(&stack)))
}

/// The positive cone: classes strictly positive on every closed 1-cell
/// trajectory degree.
pub fn positive_cone(susp: &Suspension, h: &HStructure) -> Result<OpenCone, SectionError> {
    let degrees = cell_degrees(susp, h)?;
    Ok(OpenCone::from_normals(h.d + 1, degrees.iter().map(CellDegree::normal)))
}

// ---------------------------------------------------------------------------
// Heights and the generic cut
// ---------------------------------------------------------------------------

/// Exact height data for a class alpha on the stack's Gamma cover: the
/// linear part plus per-(stage, vertex) potentials from the feasible
/// difference-constraint system, plus tiny distinct perturbations.
struct Heights<'a> {
    stack: &'a VoltageStack,
    alpha: CohomClass,
    s_count: i64,
    /// Feasible potentials per (stage, vertex).
    potential: Vec<Vec<Rat>>,
    /// Perturbations per (stage, vertex), tiny and pairwise distinct.
    rho: Vec<Vec<Rat>>,
}

impl<'a> Heights<'a> {
    /// Solve the difference constraints by Bellman-Ford and build the
    /// height data. Requires `alpha` strictly positive on every cycle
    /// class (the positive cone).
    fn new(
        stack: &'a VoltageStack,
        alpha: &CohomClass,
        cg: &ConstraintGraph,
        cycles: &[CellDegree],
    ) -> Self {
        let margin = cycles
            .iter()
            .map(|dg| dg.pair(alpha))
            .min()
            .expect("the constraint digraph always has cycles");
        assert!(margin > Rat::zero(), "alpha must lie in the positive cone");
        // Slack per arc: every cycle keeps at least half its margin.
        let max_len = cycles
            .iter()
            .map(|dg| (dg.z.clone() * rat_i(cg.s_count)).to_integer().to_i64().unwrap())
            .max()
            .unwrap_or(1)
            .max(cg.n_nodes as i64);
        let eps = margin / rat_i(2 * (max_len + 1));
        // Arc pairing values.
        let n_rat = rat_i(alpha.n_alpha());
        let s_rat = rat_i(cg.s_count);
        let pair_arc = |h: &HVec| -> Rat {
            let mut acc = n_rat.clone() / s_rat.clone();
            for (a, x) in alpha.h_part().iter().zip(h) {
                acc += rat_i(a * x);
            }
            acc
        };
        // Shortest paths from a virtual source (all distances start 0)
        // under weights alpha(arc) - eps; no negative cycles by the margin.
        let mut dist = vec![Rat::zero(); cg.n_nodes];
        for _round in 0..=cg.n_nodes {
            let mut changed = false;
            for (from, to, h, _) in &cg.arcs {
                let cand = dist[*from].clone() + pair_arc(h) - eps.clone();
                if cand < dist[*to] {
                    dist[*to] = cand;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // c := -dist satisfies alpha(arc) + c(to) - c(from) >= eps > 0.
        let mut potential: Vec<Vec<Rat>> = Vec::with_capacity(stack.stages.len());
        for (s, stage) in stack.stages.iter().enumerate() {
            potential.push(
                (0..stage.graph.n_vertices())
                    .map(|v| -dist[cg.node(s, v as VertexId)].clone())
                    .collect(),
            );
        }
        let n_pairs: i64 = stack.stages.iter().map(|s| s.graph.n_vertices() as i64).sum();
        // rho stays below eps / (4 (n_pairs + 1)).
        let bound = eps / rat_i(4 * (n_pairs + 1));
        let denom = (rat_i(1) / bound).ceil().to_integer() + Int::from(1);
        let denom = denom * Int::from(n_pairs + 2);
        let mut rho = Vec::new();
        let mut idx = 1i64;
        for s in &stack.stages {
            let mut row = Vec::new();
            for _ in 0..s.graph.n_vertices() {
                row.push(Rat::new(Int::from(idx), denom.clone()));
                idx += 1;
            }
            rho.push(row);
        }
        Heights {
            stack,
            alpha: alpha.clone(),
            s_count: stack.stages.len() as i64,
            potential,
            rho,
        }
    }

    fn a_dot(&self, h: &[i64]) -> Rat {
        let mut acc = Rat::zero();
        for (a, x) in self.alpha.h_part().iter().zip(h) {
            acc += rat_i(a * x);
        }
        acc
    }

    /// Height of the vertex instance `(level, translate, v)`.
    fn vertex(&self, level: i64, translate: &[i64], v: VertexId) -> Rat {
        let s = level.rem_euclid(self.s_count) as usize;
        self.a_dot(translate)
            + Rat::new(Int::from(self.alpha.n_alpha() * level), Int::from(self.s_count))
            + self.potential[s][v as usize].clone()
            + self.rho[s][v as usize].clone()
    }

    /// Fractional parts the cut must avoid: vertex heights and junction
    /// interpolations of chain bottoms, over one period of levels.
    fn special_fractions(&self) -> BTreeSet<Rat> {
        let frac = |r: Rat| -> Rat {
            let f = r.fract();
            if f.is_negative() {
                f + Rat::one()
            } else {
                f
            }
        };
        let mut out = BTreeSet::new();
        for level in 0..self.s_count {
            let s = level as usize;
            let stage = &self.stack.stages[s];
            let base = Rat::new(Int::from(self.alpha.n_alpha() * level), Int::from(self.s_count));
            let corner = |v: VertexId| -> Rat {
                base.clone() + self.potential[s][v as usize].clone() + self.rho[s][v as usize].clone()
            };
            for v in 0..stage.graph.n_vertices() {
                out.insert(frac(corner(v)));
            }
            for dart in stage.graph.darts() {
                let l = stage.dart_image[dart as usize].len();
                if l >= 2 {
                    let b0 = corner(stage.graph.init(dart));
                    let b1 =
                        corner(stage.graph.term(dart)) + self.a_dot(&stage.voltages[dart as usize]);
                    for j in 1..l {
                        let t = Rat::new(Int::from(j as i64), Int::from(l as i64));
                        out.insert(frac(b0.clone() * (Rat::one() - t.clone()) + b1.clone() * t));
                    }
                }
            }
        }
        out
    }

    /// A cut height inside the wrap stage avoiding every special value.
    /// Generic cut candidates: the first sits just above the wrap stage
    /// base (so the suspension class reproduces the original graph on the
    /// nose), the rest spread across one height unit. All avoid the
    /// special fractions exactly.
    fn generic_cuts(&self, count: i64) -> Vec<Rat> {
        let k = self.s_count - 1;
        let special = self.special_fractions();
        let frac = |r: &Rat| -> Rat {
            let f = r.fract();
            if f.is_negative() {
                f + Rat::one()
            } else {
                f
            }
        };
        let base = Rat::new(
            Int::from(self.alpha.n_alpha()) * Int::from(2 * k + 1),
            Int::from(2 * self.s_count),
        );
        let big =
            Int::from(2 * self.s_count) * Int::from(special.len() as i64 + 7) * Int::from(9973) * Int::from(count);
        let mut cuts = Vec::with_capacity(count as usize);
        'outer: for i in 0..count {
            let shifted = base.clone() + Rat::new(Int::from(i), Int::from(count));
            for j in 1..=(special.len() as i64 + 2) {
                let candidate = shifted.clone() + Rat::new(Int::from(j), big.clone());
                if !special.contains(&frac(&candidate)) {
                    cuts.push(candidate);
                    continue 'outer;
                }
            }
            unreachable!("more candidates than special values")
        }
        cuts
    }
}

// ---------------------------------------------------------------------------
// Instances, deck reduction, and crossings
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum CellRef {
    VCell(VertexId),
    Edge(EdgeId),
}

/// Canonicalized instance coordinates `(level, translate)` modulo the
/// alpha-perp deck lattice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Instance {
    level: i64,
    translate: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct CrossKey {
    instance: Instance,
    cell: CellRef,
}

/// Deck reduction modulo the lattice `{(p S, x) : alpha . (x, p) = 0}`
/// acting by `(level, h) -> (level + p S, h + x)`, plus the unit element
/// `gamma_1` with `alpha(gamma_1) = 1`.
struct Deck {
    basis: Vec<Vec<Int>>,
    s_count: i64,
    unit: (i64, Vec<i64>), // (p, x) with a.x + n p = 1
}

impl Deck {
    fn new(alpha: &CohomClass, s_count: i64) -> Self {
        let d = alpha.coords.len() - 1;
        let row: Vec<Int> = alpha.coords.iter().map(|&c| Int::from(c)).collect();
        let kernel = row_kernel_basis(&row);
        let basis: Vec<Vec<Int>> = kernel
            .iter()
            .map(|k| {
                let mut col = Vec::with_capacity(d + 1);
                col.push(k[d].clone() * Int::from(s_count));
                col.extend(k[..d].iter().cloned());
                col
            })
            .collect();
        let unit = solve_unit(&alpha.coords);
        Deck { basis, s_count, unit }
    }

    fn canon(&self, level: i64, translate: &[i64]) -> Instance {
        let mut x: Vec<Int> = Vec::with_capacity(translate.len() + 1);
        x.push(Int::from(level));
        x.extend(translate.iter().map(|&v| Int::from(v)));
        let red = reduce_mod_lattice(&x, &self.basis);
        Instance {
            level: (&red[0]).try_into().expect("level fits i64"),
            translate: red[1..]
                .iter()
                .map(|v| v.try_into().expect("translate fits i64"))
                .collect(),
        }
    }

    /// Translate by `-gamma_1` (drop one height unit).
    fn drop_unit(&self, level: i64, translate: &[i64]) -> (i64, Vec<i64>) {
        let (p, x) = &self.unit;
        (level - p * self.s_count, hvec_sub(translate, x))
    }
}

/// Solve `sum coords[i] y_i = 1` over the integers for a primitive vector;
/// returns `(y_last, y_front)`.
fn solve_unit(coords: &[i64]) -> (i64, Vec<i64>) {
    let mut g: i64 = 0;
    let mut coeffs: Vec<i64> = Vec::new();
    for &c in coords {
        if g == 0 {
            g = c.abs();
            coeffs.push(c.signum());
            continue;
        }
        let (gg, u, v) = ext_gcd(g, c);
        for cf in coeffs.iter_mut() {
            *cf *= u;
        }
        coeffs.push(v);
        g = gg;
    }
    assert_eq!(g.abs(), 1, "class must be primitive");
    if g == -1 {
        for cf in coeffs.iter_mut() {
            *cf = -*cf;
        }
    }
    let d = coords.len() - 1;
    (coeffs[d], coeffs[..d].to_vec())
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a, 1, 0);
    }
    let (g, u, v) = ext_gcd(b, a.rem_euclid(b));
    (g, v, u - a.div_euclid(b) * v)
}

// ---------------------------------------------------------------------------
// Prism geometry
// ---------------------------------------------------------------------------

/// Junction data of a prism: translates, vertices, and heights along the
/// top path, plus the interpolated bottom corner heights.
struct PrismGeometry {
    /// Image path darts.
    path: Vec<DartId>,
    /// Translate of the image-edge instance per piece.
    piece_translate: Vec<HVec>,
    /// Junction translates (length l + 1).
    junction_translate: Vec<HVec>,
    junction_vertex: Vec<VertexId>,
    /// Heights at junctions (top corners), length l + 1.
    tops: Vec<Rat>,
    /// Heights at bottom corners under uniform parametrization, length l + 1.
    bots: Vec<Rat>,
    /// Right-side translate of the bottom edge.
    h_right: HVec,
}

struct FiberBuilder<'a> {
    stack: &'a VoltageStack,
    heights: Heights<'a>,
    deck: Deck,
}

impl<'a> FiberBuilder<'a> {
    fn stage(&self, level: i64) -> (&Stage, &Stage) {
        let s = level.rem_euclid(self.heights.s_count) as usize;
        let next = (s + 1) % self.heights.s_count as usize;
        (&self.stack.stages[s], &self.stack.stages[next])
    }

    fn geometry(&self, level: i64, translate: &[i64], edge: EdgeId) -> PrismGeometry {
        let (stage, next) = self.stage(level);
        let dart = stage.graph.positive_dart(edge);
        let v0 = stage.graph.init(dart);
        let v1 = stage.graph.term(dart);
        let h_right = hvec_add(translate, &stage.voltages[dart as usize]);
        let b_l = self.heights.vertex(level, translate, v0);
        let b_r = self.heights.vertex(level, &h_right, v1);
        let path = stage.dart_image[dart as usize].clone();
        let l = path.len();
        let start = hvec_add(translate, &stage.potentials[v0 as usize]);
        let mut junction_translate = vec![start.clone()];
        let mut junction_vertex = vec![next_vertex_of(stage, v0)];
        let mut piece_translate = Vec::with_capacity(l);
        let mut acc = start;
        for &q in &path {
            let inst = if q % 2 == 0 {
                acc.clone()
            } else {
                hvec_add(&acc, &next.voltages[q as usize])
            };
            piece_translate.push(inst);
            acc = hvec_add(&acc, &next.voltages[q as usize]);
            junction_translate.push(acc.clone());
            junction_vertex.push(next.graph.term(q));
        }
        let tops: Vec<Rat> = (0..=l)
            .map(|j| self.heights.vertex(level + 1, &junction_translate[j], junction_vertex[j]))
            .collect();
        let bots: Vec<Rat> = (0..=l)
            .map(|j| {
                let t = Rat::new(Int::from(j as i64), Int::from(l as i64));
                b_l.clone() * (Rat::one() - t.clone()) + b_r.clone() * t
            })
            .collect();
        if std::env::var("FIBER_PROBE").is_ok() {
            for j in 0..=l {
                if tops[j] <= bots[j] {
                    eprintln!(
                        "NON-MONOTONE column: level {level} edge {edge} j={j} top={} bot={}",
                        tops[j], bots[j]
                    );
                }
            }
        }
        PrismGeometry {
            path,
            piece_translate,
            junction_translate,
            junction_vertex,
            tops,
            bots,
            h_right,
        }
    }

    /// Crossing position of `cut` on an edge instance, if any.
    fn edge_crossing(&self, level: i64, translate: &[i64], edge: EdgeId, cut: &Rat) -> Option<Rat> {
        let (stage, _) = self.stage(level);
        let dart = stage.graph.positive_dart(edge);
        let t0 = self.heights.vertex(level, translate, stage.graph.init(dart));
        let t1 = self.heights.vertex(
            level,
            &hvec_add(translate, &stage.voltages[dart as usize]),
            stage.graph.term(dart),
        );
        if t0 == t1 {
            return None; // flat edge; the generic cut avoids its height
        }
        let x = (cut.clone() - t0.clone()) / (t1 - t0);
        (x > Rat::zero() && x < Rat::one()).then_some(x)
    }

    fn vcell_interval(&self, level: i64, translate: &[i64], v: VertexId) -> (Rat, Rat) {
        let (stage, _) = self.stage(level);
        let bottom = self.heights.vertex(level, translate, v);
        let top = self.heights.vertex(
            level + 1,
            &hvec_add(translate, &stage.potentials[v as usize]),
            stage.vertex_image[v as usize],
        );
        (bottom, top)
    }

    /// Arcs of the cut level set inside one prism instance: endpoints are
    /// global crossing keys with their x-positions, sorted by x-range.
    fn slice_prism(
        &self,
        level: i64,
        translate: &[i64],
        edge: EdgeId,
        cut: &Rat,
    ) -> Vec<(CrossKey, Rat, CrossKey, Rat)> {
        let (stage, next) = self.stage(level);
        let dart = stage.graph.positive_dart(edge);
        let v0 = stage.graph.init(dart);
        let v1 = stage.graph.term(dart);
        let geo = self.geometry(level, translate, edge);
        let l = geo.path.len();
        // Global boundary crossings.
        let bottom_cross = self.edge_crossing(level, translate, edge, cut).map(|x| {
            (x, CrossKey { instance: self.deck.canon(level, translate), cell: CellRef::Edge(edge) })
        });
        let left_cross = {
            let (lo, hi) = self.vcell_interval(level, translate, v0);
            (lo < *cut && *cut < hi).then(|| CrossKey {
                instance: self.deck.canon(level, translate),
                cell: CellRef::VCell(v0),
            })
        };
        let right_cross = {
            let (lo, hi) = self.vcell_interval(level, &geo.h_right, v1);
            (lo < *cut && *cut < hi).then(|| CrossKey {
                instance: self.deck.canon(level, &geo.h_right),
                cell: CellRef::VCell(v1),
            })
        };
        let mut top_cross: Vec<Option<(Rat, CrossKey)>> = Vec::with_capacity(l);
        for (j, &q) in geo.path.iter().enumerate() {
            let e_img = next.graph.edge_of(q);
            let crossing = self
                .edge_crossing(level + 1, &geo.piece_translate[j], e_img, cut)
                .map(|y| {
                    let y_along = if q % 2 == 0 { y.clone() } else { Rat::one() - y };
                    let x = (rat_i(j as i64) + y_along) / rat_i(l as i64);
                    (
                        x,
                        CrossKey {
                            instance: self.deck.canon(level + 1, &geo.piece_translate[j]),
                            cell: CellRef::Edge(e_img),
                        },
                    )
                });
            top_cross.push(crossing);
        }
        // Local micro-graph on crossing nodes.
        #[derive(Clone, PartialEq)]
        enum Node {
            Global(CrossKey, Rat),
            Internal(Rat),
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut node_ids: HashMap<String, usize> = HashMap::new();
        let mut segments: Vec<(usize, usize)> = Vec::new();
        for j in 0..l {
            let xj = Rat::new(Int::from(j as i64), Int::from(l as i64));
            let xj1 = Rat::new(Int::from(j as i64 + 1), Int::from(l as i64));
            let cb0 = geo.bots[j].clone();
            let cb1 = geo.bots[j + 1].clone();
            let ct0 = geo.tops[j].clone();
            let ct1 = geo.tops[j + 1].clone();
            // (x0, h0, x1, h1, tag): tag "bottom", "top", "left", "right",
            // "vertN", "diagN".
            let sides_of = |tri: usize| -> Vec<(Rat, Rat, Rat, Rat, String)> {
                if tri == 0 {
                    vec![
                        (xj.clone(), cb0.clone(), xj1.clone(), cb1.clone(), "bottom".into()),
                        (
                            xj1.clone(),
                            cb1.clone(),
                            xj1.clone(),
                            ct1.clone(),
                            if j + 1 == l { "right".into() } else { format!("vert{}", j + 1) },
                        ),
                        (xj.clone(), cb0.clone(), xj1.clone(), ct1.clone(), format!("diag{j}")),
                    ]
                } else {
                    vec![
                        (xj.clone(), cb0.clone(), xj1.clone(), ct1.clone(), format!("diag{j}")),
                        (xj.clone(), ct0.clone(), xj1.clone(), ct1.clone(), format!("top{j}")),
                        (
                            xj.clone(),
                            cb0.clone(),
                            xj.clone(),
                            ct0.clone(),
                            if j == 0 { "left".into() } else { format!("vert{j}") },
                        ),
                    ]
                }
            };
            for tri in 0..2 {
                let mut hits: Vec<usize> = Vec::new();
                for (x0, h0, x1, h1, tag) in sides_of(tri) {
                    if h0 == h1 {
                        continue;
                    }
                    let t = (cut.clone() - h0.clone()) / (h1.clone() - h0);
                    if t <= Rat::zero() || t >= Rat::one() {
                        continue;
                    }
                    let x = x0.clone() + (x1 - x0) * t;
                    let node = match tag.as_str() {
                        "bottom" => {
                            let Some((bx, key)) = &bottom_cross else { continue };
                            debug_assert_eq!(bx, &x);
                            (key.clone(), x.clone(), "bottom".to_string())
                        }
                        "left" => {
                            let Some(key) = &left_cross else { continue };
                            (key.clone(), Rat::zero(), "left".to_string())
                        }
                        "right" => {
                            let Some(key) = &right_cross else { continue };
                            (key.clone(), Rat::one(), "right".to_string())
                        }
                        other if other.starts_with("top") => {
                            let Some((tx, key)) = &top_cross[j] else { continue };
                            debug_assert_eq!(tx, &x);
                            (key.clone(), x.clone(), tag.clone())
                        }
                        _ => {
                            // Internal node.
                            let id = *node_ids.entry(tag.clone()).or_insert_with(|| {
                                nodes.push(Node::Internal(x.clone()));
                                nodes.len() - 1
                            });
                            hits.push(id);
                            continue;
                        }
                    };
                    let (key, pos, tag) = node;
                    let id = *node_ids.entry(tag).or_insert_with(|| {
                        nodes.push(Node::Global(key, pos));
                        nodes.len() - 1
                    });
                    hits.push(id);
                }
                hits.sort_unstable();
                hits.dedup();
                debug_assert!(hits.len() == 2 || hits.is_empty(), "non-generic triangle slice");
                if hits.len() == 2 {
                    segments.push((hits[0], hits[1]));
                }
            }
        }
        // Chain segments through internal nodes into arcs.
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(a, b) in &segments {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut arcs = Vec::new();
        let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
        for start in 0..nodes.len() {
            if !matches!(nodes[start], Node::Global(..)) {
                continue;
            }
            for &first in adj.get(&start).map(Vec::as_slice).unwrap_or(&[]) {
                let key0 = (start.min(first), start.max(first));
                if used.contains(&key0) {
                    continue;
                }
                used.insert(key0);
                let mut prev = start;
                let mut cur = first;
                while matches!(nodes[cur], Node::Internal(..)) {
                    let follow = adj[&cur]
                        .iter()
                        .copied()
                        .find(|&n| n != prev)
                        .expect("internal nodes have two incident segments");
                    used.insert((cur.min(follow), cur.max(follow)));
                    prev = cur;
                    cur = follow;
                }
                let Node::Global(ka, xa) = nodes[start].clone() else { unreachable!() };
                let Node::Global(kb, xb) = nodes[cur].clone() else { unreachable!() };
                if (xa.clone(), &ka) <= (xb.clone(), &kb) {
                    arcs.push((ka, xa, kb, xb));
                } else {
                    arcs.push((kb, xb, ka, xa));
                }
            }
        }
        arcs.sort_by(|a, b| (&a.1, &a.3, &a.0, &a.2).cmp(&(&b.1, &b.3, &b.0, &b.2)));
        arcs
    }
}

fn next_vertex_of(stage: &Stage, v: VertexId) -> VertexId {
    stage.vertex_image[v as usize]
}

// ---------------------------------------------------------------------------
// Fiber graph and first-return
// ---------------------------------------------------------------------------

/// Graph cross-section of the folded mapping torus dual to a primitive
/// positive-cone class, with its first-return map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberGraph {
    pub graph: CombGraph,
    pub first_return: GraphMap,
    pub n_alpha: i64,
    pub alpha: CohomClass,
}

impl FiberGraph {
    /// First Betti number of the (connected) fiber graph.
    pub fn rank(&self) -> i64 {
        self.graph.n_edges() as i64 - self.graph.n_vertices() as i64 + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct PrismKey {
    instance: Instance,
    edge: EdgeId,
}

/// Arc record: one fiber edge.
struct ArcRec {
    a: CrossKey,
    xa: Rat,
    b: CrossKey,
    xb: Rat,
    /// A concrete representative of the ambient prism.
    rep: (i64, Vec<i64>, EdgeId),
    prism: PrismKey,
}

/// Where a one-unit flow lands.
enum Landing {
    /// Raw coordinates of the crossing cell at the target level.
    AtCell(i64, Vec<i64>, CellRef),
    InsideArc { level: i64, translate: Vec<i64>, edge: EdgeId, x: Rat },
}

enum FlowPoint {
    Vertex(i64, Vec<i64>, VertexId),
    EdgePoint(i64, Vec<i64>, EdgeId, Rat),
}

/// Flow a point upward until it reaches the target height.
fn flow_to_level(fb: &FiberBuilder, start: FlowPoint, target: &Rat) -> Result<Landing, SectionError> {
    let mut point = start;
    for _ in 0..50_000_000u64 {
        match point {
            FlowPoint::Vertex(level, translate, v) => {
                let (lo, hi) = fb.vcell_interval(level, &translate, v);
                debug_assert!(lo < *target);
                if *target < hi {
                    return Ok(Landing::AtCell(level, translate, CellRef::VCell(v)));
                }
                let (stage, _) = fb.stage(level);
                point = FlowPoint::Vertex(
                    level + 1,
                    hvec_add(&translate, &stage.potentials[v as usize]),
                    stage.vertex_image[v as usize],
                );
            }
            FlowPoint::EdgePoint(level, translate, edge, x) => {
                debug_assert!(x > Rat::zero() && x < Rat::one());
                let geo = fb.geometry(level, &translate, edge);
                let (_, next) = fb.stage(level);
                let l = geo.path.len() as i64;
                let scaled = x * rat_i(l);
                let j = scaled.floor().to_integer().to_i64().unwrap().clamp(0, l - 1);
                let frac = scaled - rat_i(j);
                if frac.is_zero() {
                    point = FlowPoint::Vertex(
                        level + 1,
                        geo.junction_translate[j as usize].clone(),
                        geo.junction_vertex[j as usize],
                    );
                    continue;
                }
                let t0 = geo.tops[j as usize].clone();
                let t1 = geo.tops[j as usize + 1].clone();
                let theta_top = t0.clone() + (t1 - t0) * frac.clone();
                if theta_top > *target {
                    return Ok(Landing::InsideArc { level, translate, edge, x: (rat_i(j) + frac) / rat_i(l) });
                }
                let q = geo.path[j as usize];
                let e_img = next.graph.edge_of(q);
                let y = if q % 2 == 0 { frac } else { Rat::one() - frac };
                let inst = geo.piece_translate[j as usize].clone();
                if theta_top == *target {
                    return Ok(Landing::AtCell(level + 1, inst, CellRef::Edge(e_img)));
                }
                point = FlowPoint::EdgePoint(level + 1, inst, e_img, y);
            }
        }
    }
    Err(SectionError::Internal("flow did not reach the target level"))
}

/// End tag of an arc, or a mid-arc entry (only at the sweep's root ends).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum End {
    A,
    B,
    Mid,
}

/// Item of the one-level sweep of an arc.
enum SweepItem {
    /// A fiber vertex hit (already pulled back by gamma_1 and canonical).
    Hit(CrossKey),
    /// A traverse of a fiber edge between hits: (edge index, enter, exit).
    Arc(usize, End, End),
}

struct SweepCtx<'a, 'b> {
    fb: &'a FiberBuilder<'b>,
    /// Cut-level arcs per canonical prism.
    arcs: &'a HashMap<PrismKey, Vec<(CrossKey, Rat, CrossKey, Rat)>>,
    /// (prism, xa, xb) -> fiber edge index.
    edge_lookup: &'a BTreeMap<(PrismKey, Rat, Rat), usize>,
    target: Rat,
}

impl SweepCtx<'_, '_> {
    /// Identify the fiber edge whose gamma_1 translate covers position `x`
    /// in the prism at the target level, together with its x-span.
    fn arc_over(&self, level: i64, translate: &[i64], edge: EdgeId, x: &Rat) -> Result<(usize, Rat, Rat), SectionError> {
        let (l0, t0) = self.fb.deck.drop_unit(level, translate);
        let pk = PrismKey { instance: self.fb.deck.canon(l0, &t0), edge };
        let arcs = self
            .arcs
            .get(&pk)
            .ok_or(SectionError::Internal("landing prism was never sliced"))?;
        for (_, xa, _, xb) in arcs {
            if xa <= x && x <= xb {
                let idx = *self
                    .edge_lookup
                    .get(&(pk.clone(), xa.clone(), xb.clone()))
                    .ok_or(SectionError::Internal("arc not registered as an edge"))?;
                return Ok((idx, xa.clone(), xb.clone()));
            }
        }
        Err(SectionError::Internal("no arc over the landing position"))
    }

    fn end_of(&self, xa: &Rat, xb: &Rat, x: &Rat) -> End {
        if x == xa {
            End::A
        } else if x == xb {
            End::B
        } else {
            End::Mid
        }
    }

    /// Sweep the flow of the open x-interval `(lo, hi)` of the prism at
    /// `(level, translate, edge)` up to the target height, emitting items
    /// in ascending local order.
    fn sweep(
        &self,
        level: i64,
        translate: &[i64],
        edge: EdgeId,
        lo: &Rat,
        hi: &Rat,
        out: &mut Vec<SweepItem>,
    ) -> Result<(), SectionError> {
        let geo = self.fb.geometry(level, translate, edge);
        let (_, next) = self.fb.stage(level);
        let l = geo.path.len() as i64;
        // Breakpoints inside (lo, hi): junction parameters and solutions of
        // theta_top(x) = target.
        #[derive(Clone)]
        enum Break {
            Junction(i64),
            TopCross(i64), // piece index
        }
        let mut breaks: Vec<(Rat, Break)> = Vec::new();
        for j in 1..l {
            let xj = Rat::new(Int::from(j), Int::from(l));
            // A junction interrupts the sweep only when the flow passes
            // through it (its top corner is still below the target);
            // otherwise the level arc runs straight across it.
            if *lo < xj && xj < *hi && geo.tops[j as usize] < self.target {
                breaks.push((xj, Break::Junction(j)));
            }
        }
        for j in 0..l {
            let t0 = geo.tops[j as usize].clone();
            let t1 = geo.tops[j as usize + 1].clone();
            if t0 == t1 {
                continue;
            }
            let f = (self.target.clone() - t0.clone()) / (t1 - t0);
            if f <= Rat::zero() || f >= Rat::one() {
                continue;
            }
            let x = (rat_i(j) + f) / rat_i(l);
            if *lo < x && x < *hi {
                breaks.push((x, Break::TopCross(j)));
            }
        }
        breaks.sort_by(|a, b| a.0.cmp(&b.0));
        // Walk subintervals and breakpoints in order.
        let mut cursor = lo.clone();
        let mut idx = 0usize;
        loop {
            let (sub_hi, br) = if idx < breaks.len() {
                (breaks[idx].0.clone(), Some(breaks[idx].1.clone()))
            } else {
                (hi.clone(), None)
            };
            // Subinterval (cursor, sub_hi).
            if cursor < sub_hi {
                let mid = (cursor.clone() + sub_hi.clone()) / rat_i(2);
                let scaled = mid.clone() * rat_i(l);
                let j = scaled.floor().to_integer().to_i64().unwrap().clamp(0, l - 1);
                let frac = scaled - rat_i(j);
                let t0 = geo.tops[j as usize].clone();
                let t1 = geo.tops[j as usize + 1].clone();
                let theta_top = t0.clone() + (t1.clone() - t0.clone()) * frac;
                if theta_top > self.target {
                    // Landing inside this prism.
                    let (eidx, xa, xb) = self.arc_over(level, translate, edge, &mid)?;
                    let enter = self.end_of(&xa, &xb, &cursor);
                    let exit = self.end_of(&xa, &xb, &sub_hi);
                    out.push(SweepItem::Arc(eidx, enter, exit));
                } else {
                    // Recurse through piece j.
                    let q = geo.path[j as usize];
                    let e_img = next.graph.edge_of(q);
                    let inst = geo.piece_translate[j as usize].clone();
                    let to_piece = |x: &Rat| -> Rat {
                        let f = x.clone() * rat_i(l) - rat_i(j);
                        if q % 2 == 0 {
                            f
                        } else {
                            Rat::one() - f
                        }
                    };
                    let y0 = to_piece(&cursor);
                    let y1 = to_piece(&sub_hi);
                    let flipped = q % 2 == 1;
                    let (ylo, yhi) = if flipped { (y1, y0) } else { (y0, y1) };
                    let mut sub_items = Vec::new();
                    self.sweep(level + 1, &inst, e_img, &ylo, &yhi, &mut sub_items)?;
                    if flipped {
                        sub_items.reverse();
                        for item in &mut sub_items {
                            if let SweepItem::Arc(_, a, b) = item {
                                std::mem::swap(a, b);
                            }
                        }
                    }
                    out.extend(sub_items);
                }
            }
            // Breakpoint hit.
            match br {
                None => return Ok(()),
                Some(Break::Junction(j)) => {
                    let landing = flow_to_level(
                        self.fb,
                        FlowPoint::Vertex(
                            level + 1,
                            geo.junction_translate[j as usize].clone(),
                            geo.junction_vertex[j as usize],
                        ),
                        &self.target,
                    )?;
                    let Landing::AtCell(ll, tt, cell) = landing else {
                        return Err(SectionError::Internal("vertex flow landed mid-arc"));
                    };
                    let (dl, dt) = self.fb.deck.drop_unit(ll, &tt);
                    out.push(SweepItem::Hit(CrossKey {
                        instance: self.fb.deck.canon(dl, &dt),
                        cell,
                    }));
                }
                Some(Break::TopCross(j)) => {
                    let q = geo.path[j as usize];
                    let e_img = next.graph.edge_of(q);
                    let inst = geo.piece_translate[j as usize].clone();
                    let (dl, dt) = self.fb.deck.drop_unit(level + 1, &inst);
                    out.push(SweepItem::Hit(CrossKey {
                        instance: self.fb.deck.canon(dl, &dt),
                        cell: CellRef::Edge(e_img),
                    }));
                }
            }
            cursor = sub_hi;
            idx += 1;
        }
    }
}

/// Build the fiber graph and first-return map of a primitive class in the
/// positive cone.
pub fn fiber_graph(
    alpha: &CohomClass,
    susp: &Suspension,
    h: &HStructure,
) -> Result<FiberGraph, SectionError> {
    if h.d == 0 {
        return Err(SectionError::DegenerateRank);
    }
    if alpha.coords.len() != h.d + 1 {
        return Err(SectionError::BadDimension { expected: h.d + 1, got: alpha.coords.len() });
    }
    if !alpha.is_primitive() {
        return Err(SectionError::NotPrimitive);
    }
    let stack = build_stack(susp, h)?;
    let cg = constraint_graph(&stack);
    let cycles = cycle_classes(&cg);
    if cycles.iter().any(|dg| dg.pair(alpha) <= Rat::zero()) {
        return Err(SectionError::OutsidePositiveCone);
    }
    build_fiber(alpha, &stack, &cg, &cycles)
}

/// Build the fiber over several generic cuts and keep the smallest one.
///
/// Every generic level set is a cross-section whose fundamental group
/// surjects onto the fiber group, so the fiber is the rank-minimal
/// section; varying the cut lets the minimum be attained.
fn build_fiber(
    alpha: &CohomClass,
    stack: &VoltageStack,
    cg: &ConstraintGraph,
    cycles: &[CellDegree],
) -> Result<FiberGraph, SectionError> {
    let heights = Heights::new(stack, alpha, cg, cycles);
    let cuts = heights.generic_cuts(12);
    drop(heights);
    let mut best: Option<(i64, u32, FiberGraph)> = None;
    for cut in cuts {
        let fiber = build_fiber_at(alpha, stack, cg, cycles, &cut)?;
        // Any generic section realizes the fiber class; among the
        // rank-minimal ones prefer a representative whose return passes
        // the train track battery.
        let mut score = 0u32;
        if crate::graph::is_train_track(&fiber.first_return).unwrap_or(false) {
            score += 1;
        }
        if let Ok(t) = crate::graph::transition_matrix(&fiber.first_return) {
            if crate::graph::is_irreducible(&t) {
                score += 1;
            }
            let n = t.n.max(4);
            if crate::graph::is_expanding(&fiber.first_return, n).unwrap_or(false) {
                score += 1;
            }
        }
        let key = (fiber.rank(), score);
        let better = match &best {
            None => true,
            Some((r, s, _)) => key.0 < *r || (key.0 == *r && key.1 > *s),
        };
        if better {
            best = Some((key.0, key.1, fiber));
        }
    }
    Ok(best.expect("at least one cut").2)
}

fn build_fiber_at(
    alpha: &CohomClass,
    stack: &VoltageStack,
    cg: &ConstraintGraph,
    cycles: &[CellDegree],
    cut: &Rat,
) -> Result<FiberGraph, SectionError> {
    let heights = Heights::new(stack, alpha, cg, cycles);
    let cut = cut.clone();
    let deck = Deck::new(alpha, stack.stages.len() as i64);
    let fb = FiberBuilder { stack, heights, deck };

    // Seed: walk the trajectory of vertex 0 into the cut.
    let (seed_key, seed_level, seed_translate) = find_seed(&fb, &cut)?;

    // Flood fill.
    let mut vertex_ids: BTreeMap<CrossKey, u32> = BTreeMap::new();
    let mut reps: BTreeMap<CrossKey, (i64, Vec<i64>)> = BTreeMap::new();
    let mut prism_arcs: HashMap<PrismKey, Vec<(CrossKey, Rat, CrossKey, Rat)>> = HashMap::new();
    let mut arc_recs: Vec<ArcRec> = Vec::new();
    let mut queue: VecDeque<(CrossKey, i64, Vec<i64>)> = VecDeque::new();
    vertex_ids.insert(seed_key.clone(), 0);
    reps.insert(seed_key.clone(), (seed_level, seed_translate.clone()));
    queue.push_back((seed_key, seed_level, seed_translate));
    while let Some((key, level, translate)) = queue.pop_front() {
        for (p_level, p_translate, p_edge) in incident_prisms(&fb, &key, level, &translate) {
            let pk = PrismKey { instance: fb.deck.canon(p_level, &p_translate), edge: p_edge };
            if prism_arcs.contains_key(&pk) {
                continue;
            }
            let arcs = fb.slice_prism(p_level, &p_translate, p_edge, &cut);
            prism_arcs.insert(pk.clone(), arcs.clone());
            for (a, xa, b, xb) in arcs {
                for k2 in [&a, &b] {
                    if !vertex_ids.contains_key(k2) {
                        let id = vertex_ids.len() as u32;
                        vertex_ids.insert(k2.clone(), id);
                        let rep = endpoint_rep(&fb, k2, p_level, &p_translate, p_edge)?;
                        reps.insert(k2.clone(), rep.clone());
                        queue.push_back((k2.clone(), rep.0, rep.1));
                    }
                }
                arc_recs.push(ArcRec {
                    a,
                    xa,
                    b,
                    xb,
                    rep: (p_level, p_translate.clone(), p_edge),
                    prism: pk.clone(),
                });
            }
        }
    }

    // Deterministic edge order and the graph.
    arc_recs.sort_by(|r, s| (&r.prism, &r.xa, &r.xb, &r.a, &r.b).cmp(&(&s.prism, &s.xa, &s.xb, &s.a, &s.b)));
    let mut edge_lookup: BTreeMap<(PrismKey, Rat, Rat), usize> = BTreeMap::new();
    for (i, r) in arc_recs.iter().enumerate() {
        edge_lookup.insert((r.prism.clone(), r.xa.clone(), r.xb.clone()), i);
    }
    let edges: Vec<(VertexId, VertexId)> =
        arc_recs.iter().map(|r| (vertex_ids[&r.a], vertex_ids[&r.b])).collect();
    let graph = CombGraph::new(vertex_ids.len() as u32, &edges)?;

    // Vertex images.
    let target = cut.clone() + Rat::one();
    let ctx = SweepCtx { fb: &fb, arcs: &prism_arcs, edge_lookup: &edge_lookup, target: target.clone() };
    let mut vertex_image: Vec<VertexId> = vec![0; vertex_ids.len()];
    // Landing data per vertex for the edge assembly: Ok(vertex) or the
    // mid-arc edge index.
    let mut vertex_landing: Vec<Result<u32, usize>> = vec![Ok(0); vertex_ids.len()];
    for (key, &vid) in &vertex_ids {
        let (level, translate) = reps[key].clone();
        let start = match &key.cell {
            CellRef::VCell(v) => FlowPoint::Vertex(level, translate.clone(), *v),
            CellRef::Edge(e) => {
                let x = fb
                    .edge_crossing(level, &translate, *e, &cut)
                    .ok_or(SectionError::Internal("vertex key lost its crossing"))?;
                FlowPoint::EdgePoint(level, translate.clone(), *e, x)
            }
        };
        match flow_to_level(&fb, start, &target)? {
            Landing::AtCell(ll, tt, cell) => {
                let (dl, dt) = fb.deck.drop_unit(ll, &tt);
                let k2 = CrossKey { instance: fb.deck.canon(dl, &dt), cell };
                let img = *vertex_ids
                    .get(&k2)
                    .ok_or(SectionError::Internal("flow landed outside the fiber"))?;
                vertex_image[vid as usize] = img;
                vertex_landing[vid as usize] = Ok(img);
            }
            Landing::InsideArc { level: ll, translate: tt, edge: ee, x } => {
                let (eidx, _, _) = ctx.arc_over(ll, &tt, ee, &x)?;
                // Snap forward to the positive-dart head (the B end).
                let img = vertex_ids[&arc_recs[eidx].b];
                vertex_image[vid as usize] = img;
                vertex_landing[vid as usize] = Err(eidx);
            }
        }
    }

    // Edge images via the sweep.
    let mut raw_images: Vec<Vec<DartId>> = Vec::with_capacity(arc_recs.len());
    for rec in &arc_recs {
        let (p_level, p_translate, p_edge) = rec.rep.clone();
        let mut items = Vec::new();
        ctx.sweep(p_level, &p_translate, p_edge, &rec.xa, &rec.xb, &mut items)?;
        raw_images.push(assemble_image(
            &graph,
            &arc_recs,
            &vertex_ids,
            &vertex_image,
            &vertex_landing,
            rec,
            items,
        )?);
    }
    if std::env::var("FIBER_PROBE").is_ok() {
        for (i, rec) in arc_recs.iter().enumerate() {
            eprintln!(
                "edge {i}: {:?}@{} -- {:?}@{} prism {:?} img {:?}",
                rec.a, rec.xa, rec.b, rec.xb, rec.prism, raw_images[i]
            );
        }
        for (i, rec) in arc_recs.iter().enumerate() {
            if !raw_images[i].is_empty() {
                continue;
            }
            eprintln!("NULL edge {i}: span [{}..{}] prism {:?}", rec.xa, rec.xb, rec.rep);
            // Sample flows along the arc.
            let steps = 24i64;
            let mut last: Option<usize> = None;
            for t in 1..steps {
                let x = rec.xa.clone()
                    + (rec.xb.clone() - rec.xa.clone()) * Rat::new(Int::from(t), Int::from(steps));
                let (pl, pt, pe) = rec.rep.clone();
                match flow_to_level(&fb, FlowPoint::EdgePoint(pl, pt, pe, x), &target) {
                    Ok(Landing::InsideArc { level, translate, edge, x }) => {
                        let (eidx, _, _) = ctx.arc_over(level, &translate, edge, &x).unwrap();
                        if last != Some(eidx) {
                            eprintln!("  t={t}/{steps}: arc {eidx}");
                            last = Some(eidx);
                        }
                    }
                    Ok(Landing::AtCell(..)) => eprintln!("  t={t}/{steps}: AT VERTEX"),
                    Err(e) => eprintln!("  t={t}/{steps}: err {e}"),
                }
            }
        }
    }
    if std::env::var("FIBER_STATS").is_ok() {
        eprintln!(
            "pre-collapse: V={} E={} nulls={}",
            vertex_ids.len(),
            arc_recs.len(),
            raw_images.iter().filter(|i| i.is_empty()).count()
        );
        // Sanity: each vertex key is hit by the number of arc-ends that
        // geometric valence dictates; report keys with valence != expected.
        let mut val: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
        for r in arc_recs.iter() {
            *val.entry(vertex_ids[&r.a]).or_default() += 1;
            *val.entry(vertex_ids[&r.b]).or_default() += 1;
        }
        for (k, &vid) in vertex_ids.iter() {
            let expected = match &k.cell {
                CellRef::VCell(_) => 2,
                CellRef::Edge(_) => 3,
            };
            let got = val.get(&vid).copied().unwrap_or(0);
            if got != expected {
                eprintln!("  key {k:?} valence {got} (expected {expected})");
            }
        }
    }
    // Reduce to the stable core: tighten image paths, drop edges with
    // null-homotopic images (collapsing non-loops, deleting loops whose
    // class the return kills), and restrict to the eventual image
    // subgraph. Mapping tori are invariant under these shift equivalences,
    // so the monodromy class survives while the level-set excess dies.
    let (graph, vertex_image, raw_images) =
        stabilize_section(graph, vertex_image, raw_images)?;
    let positive_images: Vec<EdgePath> = graph
        .edges()
        .map(|e| {
            let darts = raw_images[e as usize].clone();
            let basepoint = vertex_image[graph.init(graph.positive_dart(e)) as usize];
            EdgePath::new(&graph, darts, basepoint)
        })
        .collect::<Result<_, _>>()?;
    let first_return = GraphMap::from_edge_images(
        graph.clone(),
        graph.clone(),
        vertex_image,
        positive_images,
    )?;
    Ok(FiberGraph { graph, first_return, n_alpha: alpha.n_alpha(), alpha: alpha.clone() })
}

/// Iterate tightening, null-edge collapsing, and image-subgraph
/// restriction until the section stabilizes.
fn stabilize_section(
    mut graph: CombGraph,
    mut vertex_image: Vec<VertexId>,
    mut images: Vec<Vec<DartId>>,
) -> Result<(CombGraph, Vec<VertexId>, Vec<Vec<DartId>>), SectionError> {
    loop {
        let before = (graph.n_vertices(), graph.n_edges());
        // Tighten: freely reduce the image paths.
        for (e, img) in images.iter_mut().enumerate() {
            let base = graph.init(graph.positive_dart(e as EdgeId));
            let _ = base;
            let mut out: Vec<DartId> = Vec::with_capacity(img.len());
            for &d in img.iter() {
                if out.last() == Some(&graph.reverse(d)) {
                    out.pop();
                } else {
                    out.push(d);
                }
            }
            *img = out;
        }
        let (g2, v2, i2) = collapse_null_edges(graph, vertex_image, images)?;
        let (g3, v3, i3) = restrict_to_image(g2, v2, i2)?;
        let (g4, v4, i4) = fold_equal_images(g3, v3, i3)?;
        let (g5, v5, i5) = collapse_invariant_forest(g4, v4, i4)?;
        graph = g5;
        vertex_image = v5;
        images = i5;
        if (graph.n_vertices(), graph.n_edges()) == before {
            return Ok((graph, vertex_image, images));
        }
    }
}

/// Collapse an invariant subforest when one exists: the forward closure of
/// an edge under "appears in the image of" that spans a forest gets
/// contracted component by component, preserving the homotopy type and the
/// induced return map.
fn collapse_invariant_forest(
    graph: CombGraph,
    vertex_image: Vec<VertexId>,
    images: Vec<Vec<DartId>>,
) -> Result<(CombGraph, Vec<VertexId>, Vec<Vec<DartId>>), SectionError> {
    let n_edges = graph.n_edges() as usize;
    // uses[e] = edges appearing in the image of e.
    let uses: Vec<BTreeSet<EdgeId>> = (0..n_edges)
        .map(|e| images[e].iter().map(|&d| graph.edge_of(d)).collect())
        .collect();
    for seed in 0..n_edges {
        // Forward closure.
        let mut closure: BTreeSet<EdgeId> = BTreeSet::new();
        let mut stack = vec![seed as EdgeId];
        while let Some(e) = stack.pop() {
            if closure.insert(e) {
                stack.extend(uses[e as usize].iter().copied());
            }
        }
        if closure.len() == n_edges {
            continue;
        }
        // Forest test: component count via union-find over the closure.
        let mut parent: Vec<u32> = (0..graph.n_vertices()).collect();
        fn find(parent: &mut Vec<u32>, x: u32) -> u32 {
            if parent[x as usize] != x {
                let r = find(parent, parent[x as usize]);
                parent[x as usize] = r;
            }
            parent[x as usize]
        }
        let mut is_forest = true;
        let mut touched: BTreeSet<u32> = BTreeSet::new();
        for &e in &closure {
            let d = graph.positive_dart(e);
            let (a, b) = (graph.init(d), graph.term(d));
            touched.insert(a);
            touched.insert(b);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                is_forest = false;
                break;
            }
            parent[ra as usize] = rb;
        }
        if !is_forest {
            continue;
        }
        // Contract each component of the forest.
        let merged: Vec<VertexId> =
            (0..graph.n_vertices()).map(|v| find(&mut parent, v)).collect();
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
        let mut edge_remap = vec![u32::MAX; n_edges];
        let mut new_edges: Vec<(VertexId, VertexId)> = Vec::new();
        for e in graph.edges() {
            if closure.contains(&e) {
                continue;
            }
            edge_remap[e as usize] = new_edges.len() as u32;
            let d = graph.positive_dart(e);
            new_edges.push((
                vertex_projection[graph.init(d) as usize],
                vertex_projection[graph.term(d) as usize],
            ));
        }
        let new_graph = CombGraph::new(next, &new_edges)?;
        let mut new_vertex_image = vec![u32::MAX; next as usize];
        for v in 0..graph.n_vertices() {
            let nv = vertex_projection[v as usize] as usize;
            let img = vertex_projection[vertex_image[v as usize] as usize];
            if new_vertex_image[nv] != u32::MAX && new_vertex_image[nv] != img {
                return Err(SectionError::Internal(
                    "forest collapse produced inconsistent vertex images",
                ));
            }
            new_vertex_image[nv] = img;
        }
        let new_images: Vec<Vec<DartId>> = (0..n_edges)
            .filter(|e| !closure.contains(&(*e as EdgeId)))
            .map(|e| {
                images[e]
                    .iter()
                    .filter(|&&d| !closure.contains(&graph.edge_of(d)))
                    .map(|&d| (edge_remap[graph.edge_of(d) as usize] << 1) | (d & 1))
                    .collect()
            })
            .collect();
        return Ok((new_graph, new_vertex_image.into_iter().collect(), new_images));
    }
    Ok((graph, vertex_image, images))
}

/// Fold dart pairs with a common initial vertex and equal image paths and
/// push the return data through the quotient. This is a strong shift
/// equivalence (the return factors through the fold), so the mapping
/// torus, and with it the monodromy class, is unchanged.
fn fold_equal_images(
    mut graph: CombGraph,
    mut vertex_image: Vec<VertexId>,
    mut images: Vec<Vec<DartId>>,
) -> Result<(CombGraph, Vec<VertexId>, Vec<Vec<DartId>>), SectionError> {
    'outer: loop {
        let dart_img = |d: DartId| -> Vec<DartId> {
            let e = (d >> 1) as usize;
            if d % 2 == 0 {
                images[e].clone()
            } else {
                images[e].iter().rev().map(|&q| q ^ 1).collect()
            }
        };
        for d1 in graph.darts() {
            for d2 in d1 + 1..graph.n_darts() {
                if graph.edge_of(d1) == graph.edge_of(d2)
                    || graph.init(d1) != graph.init(d2)
                    || dart_img(d1) != dart_img(d2)
                {
                    continue;
                }
                // Fold d2 onto d1.
                let e1 = graph.edge_of(d1);
                let e2 = graph.edge_of(d2);
                let w1 = graph.term(d1);
                let w2 = graph.term(d2);
                let merged: Vec<VertexId> =
                    (0..graph.n_vertices()).map(|v| if v == w2 && w2 != w1 { w1 } else { v }).collect();
                let mut remap = vec![u32::MAX; graph.n_vertices() as usize];
                let mut next = 0u32;
                for v in 0..graph.n_vertices() {
                    let tgt = merged[v as usize];
                    if remap[tgt as usize] == u32::MAX {
                        remap[tgt as usize] = next;
                        next += 1;
                    }
                }
                let vertex_projection: Vec<VertexId> = (0..graph.n_vertices())
                    .map(|v| remap[merged[v as usize] as usize])
                    .collect();
                let mut edge_remap = vec![u32::MAX; graph.n_edges() as usize];
                let mut new_edges: Vec<(VertexId, VertexId)> = Vec::new();
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
                let dart_projection = |d: DartId| -> DartId {
                    let e = graph.edge_of(d);
                    if e == e2 {
                        let img = edge_remap[e1 as usize];
                        let same_side = (d == d2) == (d1 % 2 == 0);
                        (img << 1) | u32::from(!same_side)
                    } else {
                        (edge_remap[e as usize] << 1) | (d & 1)
                    }
                };
                let new_graph = CombGraph::new(next, &new_edges)?;
                let mut new_vertex_image = vec![u32::MAX; next as usize];
                for v in 0..graph.n_vertices() {
                    new_vertex_image[vertex_projection[v as usize] as usize] =
                        vertex_projection[vertex_image[v as usize] as usize];
                }
                let new_images: Vec<Vec<DartId>> = (0..graph.n_edges())
                    .filter(|&e| e != e2)
                    .map(|e| images[e as usize].iter().map(|&d| dart_projection(d)).collect())
                    .collect();
                graph = new_graph;
                vertex_image = new_vertex_image;
                images = new_images;
                continue 'outer;
            }
        }
        return Ok((graph, vertex_image, images));
    }
}

/// Restrict the section to the subgraph spanned by the return images.
fn restrict_to_image(
    graph: CombGraph,
    vertex_image: Vec<VertexId>,
    images: Vec<Vec<DartId>>,
) -> Result<(CombGraph, Vec<VertexId>, Vec<Vec<DartId>>), SectionError> {
    let mut edge_used = vec![false; graph.n_edges() as usize];
    for img in &images {
        for &d in img {
            edge_used[graph.edge_of(d) as usize] = true;
        }
    }
    if edge_used.iter().all(|&u| u) {
        return Ok((graph, vertex_image, images));
    }
    let mut vertex_used = vec![false; graph.n_vertices() as usize];
    for e in graph.edges() {
        if edge_used[e as usize] {
            let d = graph.positive_dart(e);
            vertex_used[graph.init(d) as usize] = true;
            vertex_used[graph.term(d) as usize] = true;
        }
    }
    for v in 0..graph.n_vertices() {
        vertex_used[vertex_image[v as usize] as usize] = true;
    }
    let mut vertex_remap = vec![u32::MAX; graph.n_vertices() as usize];
    let mut next_v = 0u32;
    for v in 0..graph.n_vertices() {
        if vertex_used[v as usize] {
            vertex_remap[v as usize] = next_v;
            next_v += 1;
        }
    }
    let mut edge_remap = vec![u32::MAX; graph.n_edges() as usize];
    let mut new_edges: Vec<(VertexId, VertexId)> = Vec::new();
    for e in graph.edges() {
        if edge_used[e as usize] {
            edge_remap[e as usize] = new_edges.len() as u32;
            let d = graph.positive_dart(e);
            new_edges.push((
                vertex_remap[graph.init(d) as usize],
                vertex_remap[graph.term(d) as usize],
            ));
        }
    }
    let new_graph = CombGraph::new(next_v, &new_edges)?;
    let new_vertex_image: Vec<VertexId> = (0..graph.n_vertices())
        .filter(|&v| vertex_used[v as usize])
        .map(|v| vertex_remap[vertex_image[v as usize] as usize])
        .collect();
    if new_vertex_image.iter().any(|&v| v == u32::MAX) {
        return Err(SectionError::Internal("image vertex fell outside the image subgraph"));
    }
    let new_images: Vec<Vec<DartId>> = (0..graph.n_edges())
        .filter(|&e| edge_used[e as usize])
        .map(|e| {
            images[e as usize]
                .iter()
                .map(|&d| (edge_remap[graph.edge_of(d) as usize] << 1) | (d & 1))
                .collect()
        })
        .collect();
    Ok((new_graph, new_vertex_image, new_images))
}

/// Collapse edges with empty image paths, merging their endpoints and
/// re-threading all image data through the quotient; iterates until no
/// degenerate edge remains.
fn collapse_null_edges(
    mut graph: CombGraph,
    mut vertex_image: Vec<VertexId>,
    mut images: Vec<Vec<DartId>>,
) -> Result<(CombGraph, Vec<VertexId>, Vec<Vec<DartId>>), SectionError> {
    loop {
        let Some(dead) = graph.edges().find(|&e| images[e as usize].is_empty()) else {
            return Ok((graph, vertex_image, images));
        };
        let dart = graph.positive_dart(dead);
        let u = graph.init(dart);
        let w = graph.term(dart);
        // A null loop is a class the return map kills: the level-set
        // section of a semiflow may overshoot the fiber, and the stable
        // core deletes such loops outright (rank drops by one).
        let merged: Vec<VertexId> =
            (0..graph.n_vertices()).map(|v| if v == w { u } else { v }).collect();
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
        let mut edge_remap = vec![u32::MAX; graph.n_edges() as usize];
        let mut new_edges: Vec<(VertexId, VertexId)> = Vec::new();
        for e in graph.edges() {
            if e == dead {
                continue;
            }
            edge_remap[e as usize] = new_edges.len() as u32;
            let d = graph.positive_dart(e);
            new_edges.push((
                vertex_projection[graph.init(d) as usize],
                vertex_projection[graph.term(d) as usize],
            ));
        }
        let new_graph = CombGraph::new(next, &new_edges)?;
        // Vertex images through the projection; the merged pair must agree.
        let mut new_vertex_image: Vec<Option<VertexId>> = vec![None; next as usize];
        for v in 0..graph.n_vertices() {
            let nv = vertex_projection[v as usize] as usize;
            let img = vertex_projection[vertex_image[v as usize] as usize];
            match new_vertex_image[nv] {
                None => new_vertex_image[nv] = Some(img),
                Some(prev) if prev == img => {}
                Some(_) => {
                    return Err(SectionError::Internal(
                        "merged vertices have different return images",
                    ))
                }
            }
        }
        let new_vertex_image: Vec<VertexId> =
            new_vertex_image.into_iter().map(Option::unwrap).collect();
        // Edge images: drop darts of the dead edge, remap the rest.
        let mut new_images: Vec<Vec<DartId>> = Vec::with_capacity(new_edges.len());
        for e in graph.edges() {
            if e == dead {
                continue;
            }
            let remapped: Vec<DartId> = images[e as usize]
                .iter()
                .filter(|&&d| graph.edge_of(d) != dead)
                .map(|&d| (edge_remap[graph.edge_of(d) as usize] << 1) | (d & 1))
                .collect();
            new_images.push(remapped);
        }
        graph = new_graph;
        vertex_image = new_vertex_image;
        images = new_images;
    }
}

/// Turn a sweep item list into the dart path of one fiber edge's image.
#[allow(clippy::too_many_arguments)]
fn assemble_image(
    graph: &CombGraph,
    _arc_recs: &[ArcRec],
    vertex_ids: &BTreeMap<CrossKey, u32>,
    _vertex_image: &[VertexId],
    vertex_landing: &[Result<u32, usize>],
    rec: &ArcRec,
    items: Vec<SweepItem>,
) -> Result<Vec<DartId>, SectionError> {
    let vid_a = vertex_ids[&rec.a];
    let vid_b = vertex_ids[&rec.b];
    // Dart of edge `idx` traversed from the given end.
    let dart_from = |idx: usize, end: End| -> Result<DartId, SectionError> {
        let d = (idx as u32) << 1;
        match end {
            End::A => Ok(d),
            End::B => Ok(d | 1),
            End::Mid => Err(SectionError::Internal("mid-arc traverse of a full edge")),
        }
    };
    let mut darts: Vec<DartId> = Vec::new();
    let mut pending: Option<(usize, End, End)> = None;
    // Leading partial: the initial endpoint landed mid-arc.
    let mut items = items.into_iter().peekable();
    if let Err(start_arc) = vertex_landing[vid_a as usize] {
        let Some(SweepItem::Arc(first_idx, enter, exit)) = items.next() else {
            return Err(SectionError::Internal("mid-arc landing without a leading arc item"));
        };
        if first_idx != start_arc || enter != End::Mid {
            return Err(SectionError::Internal("leading arc does not match the landing"));
        }
        // Snap target is the B end; the partial traverse exits at `exit`.
        // Exiting at B cancels against the snap; exiting at A emits the
        // reversed dart (B -> A).
        match exit {
            End::B => {}
            End::A => darts.push(dart_from(first_idx, End::B)?),
            End::Mid => {
                // The whole image lies inside one arc: both endpoints snap
                // to the same vertex and the cellular image is the empty
                // path. The caller collapses such edges.
                if items.next().is_some() || vertex_landing[vid_b as usize] != Err(first_idx) {
                    return Err(SectionError::Internal("leading arc never exits"));
                }
                return Ok(Vec::new());
            }
        }
    }
    // Main alternation.
    let mut trailing_arc: Option<(usize, End, End)> = None;
    for item in items {
        match item {
            SweepItem::Arc(idx, enter, exit) => {
                if pending.is_some() {
                    return Err(SectionError::Internal("two arcs without a hit between"));
                }
                pending = Some((idx, enter, exit));
            }
            SweepItem::Hit(key) => {
                let hit_id = *vertex_ids
                    .get(&key)
                    .ok_or(SectionError::Internal("hit vertex outside the fiber"))?;
                if let Some((idx, enter, exit)) = pending.take() {
                    if enter == End::Mid || exit == End::Mid {
                        return Err(SectionError::Internal("interior arc with a mid end"));
                    }
                    let d = dart_from(idx, enter)?;
                    if enter == exit {
                        // In-and-out excursion: null-homotopic, dropped.
                        // The hit sits at the shared entry end.
                        if graph.init(d) != hit_id {
                            return Err(SectionError::Internal("excursion detached from hit"));
                        }
                    } else {
                        if graph.term(d) != hit_id {
                            return Err(SectionError::Internal("arc exit disagrees with hit"));
                        }
                        darts.push(d);
                    }
                }
                let _ = hit_id;
            }
        }
    }
    if let Some(p) = pending {
        trailing_arc = Some(p);
    }
    // Trailing partial or final full arc.
    match vertex_landing[vid_b as usize] {
        Ok(_) => {
            if let Some((idx, enter, exit)) = trailing_arc {
                if enter == End::Mid || exit == End::Mid {
                    return Err(SectionError::Internal("final full arc has mid ends"));
                }
                if enter != exit {
                    darts.push(dart_from(idx, enter)?);
                }
            }
        }
        Err(end_arc) => {
            let Some((idx, enter, exit)) = trailing_arc else {
                return Err(SectionError::Internal("mid-arc landing without a trailing arc item"));
            };
            if idx != end_arc || exit != End::Mid {
                return Err(SectionError::Internal("trailing arc does not match the landing"));
            }
            match enter {
                End::A => darts.push(dart_from(idx, End::A)?),
                End::B => {}
                End::Mid => return Err(SectionError::Internal("trailing arc entered mid-arc")),
            }
        }
    }
    Ok(darts)
}

/// Find a crossing to seed the flood fill: walk vertex 0's trajectory.
fn find_seed(fb: &FiberBuilder, cut: &Rat) -> Result<(CrossKey, i64, Vec<i64>), SectionError> {
    let d = fb.stack.d;
    let mut level: i64 = 0;
    let mut translate = vec![0i64; d];
    let v0: VertexId = 0;
    let theta = fb.heights.vertex(level, &translate, v0);
    if theta >= *cut {
        let excess = (theta - cut.clone()).ceil().to_integer().to_i64().unwrap() + 1;
        for _ in 0..excess {
            let (l2, t2) = fb.deck.drop_unit(level, &translate);
            level = l2;
            translate = t2;
        }
    }
    let mut v = v0;
    for _ in 0..50_000_000u64 {
        let (lo, hi) = fb.vcell_interval(level, &translate, v);
        if lo < *cut && *cut < hi {
            let key = CrossKey {
                instance: fb.deck.canon(level, &translate),
                cell: CellRef::VCell(v),
            };
            return Ok((key, level, translate));
        }
        let (stage, _) = fb.stage(level);
        translate = hvec_add(&translate, &stage.potentials[v as usize]);
        v = stage.vertex_image[v as usize];
        level += 1;
    }
    Err(SectionError::Internal("seed search did not terminate"))
}

/// Prism instances whose boundary carries the given crossing.
fn incident_prisms(
    fb: &FiberBuilder,
    key: &CrossKey,
    level: i64,
    translate: &[i64],
) -> Vec<(i64, Vec<i64>, EdgeId)> {
    let (stage, _) = fb.stage(level);
    let mut out = Vec::new();
    match &key.cell {
        CellRef::VCell(v) => {
            for dart in stage.graph.darts() {
                if stage.graph.init(dart) == *v {
                    let e = stage.graph.edge_of(dart);
                    let tr = if dart % 2 == 0 {
                        translate.to_vec()
                    } else {
                        hvec_sub(translate, &stage.voltages[(dart ^ 1) as usize])
                    };
                    out.push((level, tr, e));
                }
            }
        }
        CellRef::Edge(e) => {
            out.push((level, translate.to_vec(), *e));
            // Prisms one stage down whose image path crosses this edge.
            let prev_level = level - 1;
            let (prev, cur) = fb.stage(prev_level);
            debug_assert!(std::ptr::eq(cur, stage));
            for dart in prev.graph.darts() {
                if dart % 2 == 1 {
                    continue;
                }
                let v0 = prev.graph.init(dart);
                let mut prefix = vec![0i64; fb.stack.d];
                for &q in &prev.dart_image[dart as usize] {
                    if cur.graph.edge_of(q) == *e {
                        let inst_offset = if q % 2 == 0 {
                            prefix.clone()
                        } else {
                            hvec_add(&prefix, &cur.voltages[q as usize])
                        };
                        // prism translate + potential(v0) + inst_offset = translate
                        let t = hvec_sub(
                            &hvec_sub(translate, &inst_offset),
                            &prev.potentials[v0 as usize],
                        );
                        out.push((prev_level, t, prev.graph.edge_of(dart)));
                    }
                    prefix = hvec_add(&prefix, &cur.voltages[q as usize]);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Concrete coordinates of an arc endpoint discovered in a prism.
fn endpoint_rep(
    fb: &FiberBuilder,
    key: &CrossKey,
    p_level: i64,
    p_translate: &[i64],
    p_edge: EdgeId,
) -> Result<(i64, Vec<i64>), SectionError> {
    let (stage, next) = fb.stage(p_level);
    let dart = stage.graph.positive_dart(p_edge);
    match &key.cell {
        CellRef::VCell(v) => {
            if *v == stage.graph.init(dart)
                && fb.deck.canon(p_level, p_translate) == key.instance
            {
                return Ok((p_level, p_translate.to_vec()));
            }
            let right = hvec_add(p_translate, &stage.voltages[dart as usize]);
            if *v == stage.graph.term(dart) && fb.deck.canon(p_level, &right) == key.instance {
                return Ok((p_level, right));
            }
            Err(SectionError::Internal("vcell endpoint not on prism boundary"))
        }
        CellRef::Edge(e) => {
            if *e == p_edge && fb.deck.canon(p_level, p_translate) == key.instance {
                return Ok((p_level, p_translate.to_vec()));
            }
            let geo = fb.geometry(p_level, p_translate, p_edge);
            for (j, &q) in geo.path.iter().enumerate() {
                if next.graph.edge_of(q) == *e
                    && fb.deck.canon(p_level + 1, &geo.piece_translate[j]) == key.instance
                {
                    return Ok((p_level + 1, geo.piece_translate[j].clone()));
                }
            }
            Err(SectionError::Internal("edge endpoint not on prism boundary"))
        }
    }
}
