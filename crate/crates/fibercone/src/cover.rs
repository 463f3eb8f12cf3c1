//! Free-abelian cover data for a train track homotopy equivalence: the
//! invariant cover rank `d` and edge labels (via Smith normal form of
//! `Phi - I`), the `Z[H]`-labeled transition matrix `P_E`, the McMullen
//! polynomial and cone, the generalized fibered cone from a supplied
//! inverse representative, omega supports of matrix powers, the cone
//! confinement check, and the truncated lattice-gap / witness-exponent
//! certificates.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{
    dist_inf_to_span, dual_cone_at_vertex, CohomClass, ConeError, NewtonPolytope, OpenCone,
};
use crate::graph::{
    induced_homology_matrix, is_homotopy_equivalence, pi1_images, GraphError, GraphMap,
};
use crate::laurent::{ExpVec, LaurentError, LaurentMatrix, LaurentPoly};
use crate::linalg::{smith_normal_form, IMat, Smith};
use crate::words::{self, Letter};
use crate::{Int, Rat};

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("map is not a homotopy equivalence")]
    NotHomotopyEquivalence,
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("laurent error: {0}")]
    Laurent(#[from] LaurentError),
    #[error("cone error: {0}")]
    Cone(#[from] ConeError),
    #[error("edge labels are inconsistent with the homology action")]
    LabelInconsistency,
    #[error("the supplied maps do not compose to an inner automorphism")]
    NotInner,
    #[error("the inverse data is not expressed in the same Gamma basis")]
    BasisMismatch,
    #[error("the cover rank is d = 0; the gap/witness search needs d >= 1")]
    DegenerateRank,
    #[error("truncation T = {0} admits no nonzero element of alpha-perp")]
    TruncationTooSmall(i64),
    #[error("char poly is missing its monic u^n vertex (internal error)")]
    MissingVertex,
    #[error("t must be >= 1")]
    BadPower,
    #[error("alpha must be primitive")]
    NotPrimitive,
    #[error("integer overflow converting Smith data to labels")]
    LabelOverflow,
}

pub type HVec = Vec<i64>;

pub fn hvec_add(a: &[i64], b: &[i64]) -> HVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn hvec_sub(a: &[i64], b: &[i64]) -> HVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Free-abelian cover structure of a homotopy equivalence `psi : G -> G`:
/// `H = Z^d` is the free part of the cokernel of the homology action minus
/// the identity, with per-edge labels realizing the covering and the lift
/// potentials fixing `psi~` (base vertex 0 translates to 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HStructure {
    pub d: usize,
    /// Label in `Z^d` per geometric edge of `G` (spanning-tree edges are 0).
    pub edge_label: Vec<HVec>,
    /// Induced homology matrix `Phi` (columns are abelianized images).
    pub homology_rows: Vec<HVec>,
    /// Lift potentials `delta_psi` per vertex: the lift of `psi` sends the
    /// base lift of `v` into the `delta_psi(v)` translate.
    pub psi_potentials: Vec<HVec>,
}

impl HStructure {
    /// Voltage of a dart: the edge label, negated on odd darts.
    pub fn voltage(&self, d: crate::graph::DartId) -> HVec {
        let l = &self.edge_label[(d >> 1) as usize];
        if d % 2 == 0 {
            l.clone()
        } else {
            l.iter().map(|&x| -x).collect()
        }
    }

    pub fn path_voltage(&self, darts: &[crate::graph::DartId]) -> HVec {
        let mut acc = vec![0i64; self.d];
        for &d in darts {
            acc = hvec_add(&acc, &self.voltage(d));
        }
        acc
    }
}

fn imat_to_i64(m: &IMat<Int>) -> Result<Vec<HVec>, CoverError> {
    (0..m.rows)
        .map(|r| {
            m.row(r)
                .iter()
                .map(|v| i64::try_from(v.clone()).map_err(|_| CoverError::LabelOverflow))
                .collect()
        })
        .collect()
}

/// Build the H-structure of a homotopy equivalence, with labels from the
/// free-part projection of the cokernel and lift potentials propagated
/// along a spanning tree and validated on every dart.
pub fn h_structure(m: &GraphMap) -> Result<HStructure, CoverError> {
    internal_h_structure(m, true)
}

fn internal_h_structure(m: &GraphMap, require_he: bool) -> Result<HStructure, CoverError> {
    if require_he && !is_homotopy_equivalence(m)? {
        return Err(CoverError::NotHomotopyEquivalence);
    }
    let g = &m.domain;
    let phi = induced_homology_matrix(m)?;
    let r = phi.rows;
    let a = phi.sub(&IMat::identity(r));
    let smith: Smith<Int> = smith_normal_form(&a);
    let d = smith.free_rank();
    let q = smith.free_projection();
    // Q annihilates (Phi - I) exactly, hence Q Phi = Q: the deck action of
    // the monodromy on H is trivial and the lift is H-equivariant.
    debug_assert!(q.mul(&a).is_zero());
    let q_rows = imat_to_i64(&q)?;
    // Labels per geometric edge: columns of Q on the non-tree basis.
    let basis = g.non_tree_edges();
    let mut edge_label: Vec<HVec> = vec![vec![0; d]; g.n_edges() as usize];
    for (j, &e) in basis.iter().enumerate() {
        edge_label[e as usize] = q_rows.iter().map(|row| row[j]).collect();
    }
    let hs = HStructure {
        d,
        edge_label,
        homology_rows: imat_to_i64(&phi)?,
        psi_potentials: vec![],
    };
    // Lift potentials: delta(term d) - delta(init d) = g(psi(d)) - g(d),
    // propagated over the spanning tree from vertex 0.
    let tree = g.spanning_tree();
    let mut delta: Vec<Option<HVec>> = vec![None; g.n_vertices() as usize];
    delta[0] = Some(vec![0; d]);
    // Tree darts point from root outward; resolve in BFS order.
    let mut order: Vec<u32> = vec![0];
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        i += 1;
        for w in 0..g.n_vertices() {
            if let Some(td) = tree[w as usize] {
                if g.init(td) == v && delta[w as usize].is_none() {
                    let diff = hvec_sub(
                        &hs.path_voltage(&m.dart_image[td as usize].darts),
                        &hs.voltage(td),
                    );
                    delta[w as usize] = Some(hvec_add(delta[v as usize].as_ref().unwrap(), &diff));
                    order.push(w);
                }
            }
        }
    }
    let psi_potentials: Vec<HVec> =
        delta.into_iter().map(|o| o.expect("graph is connected")).collect();
    let hs = HStructure { psi_potentials, ..hs };
    // Consistency on every dart (re-derivation check of the labels).
    for dart in g.darts() {
        let lhs = hvec_add(
            &hs.psi_potentials[g.init(dart) as usize],
            &hs.path_voltage(&m.dart_image[dart as usize].darts),
        );
        let rhs = hvec_add(&hs.voltage(dart), &hs.psi_potentials[g.term(dart) as usize]);
        if lhs != rhs {
            return Err(CoverError::LabelInconsistency);
        }
    }
    Ok(hs)
}

/// `Z[H]`-labeled transition matrix of the lifted map, with a reference to
/// the source map and its labels (the shared Gamma basis).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabeledTransition {
    pub p_e: LaurentMatrix<Int>,
    pub d: usize,
    pub source: GraphMap,
    pub edge_label: Vec<HVec>,
}

/// Build `P_E`: entry `[e][f]` sums one monomial `t^tau` per crossing of
/// `e` by the lifted image of `f`, with the crossing translate read off
/// the accumulated voltage along the image path.
pub fn build_pe(m: &GraphMap, h: &HStructure) -> Result<LabeledTransition, CoverError> {
    let g = &m.domain;
    let n = g.n_edges() as usize;
    let mut entries = vec![LaurentPoly::<Int>::zero(h.d); n * n];
    for f in g.edges() {
        let dart = g.positive_dart(f);
        let mut acc = h.psi_potentials[g.init(dart) as usize].clone();
        for &p in &m.dart_image[dart as usize].darts {
            let volt = h.voltage(p);
            let translate = if p % 2 == 0 { acc.clone() } else { hvec_add(&acc, &volt) };
            let e = g.edge_of(p) as usize;
            let mono =
                LaurentPoly::monomial(h.d, ExpVec::new(translate, 0), Int::one());
            entries[e * n + f as usize] = entries[e * n + f as usize].add(&mono)?;
            acc = hvec_add(&acc, &volt);
        }
    }
    Ok(LabeledTransition {
        p_e: LaurentMatrix::new(n, n, h.d, entries),
        d: h.d,
        source: m.clone(),
        edge_label: h.edge_label.clone(),
    })
}

/// McMullen polynomial: `det(u I - P_E)`.
pub fn mcmullen_polynomial(lt: &LabeledTransition) -> Result<LaurentPoly<Int>, CoverError> {
    Ok(lt.p_e.char_poly()?)
}

/// McMullen cone: dual cone of the Newton polytope of the McMullen
/// polynomial centered at its monic vertex `u^n`.
pub fn mcmullen_cone(lt: &LabeledTransition) -> Result<OpenCone, CoverError> {
    let chi = mcmullen_polynomial(lt)?;
    let n = lt.p_e.rows;
    let vertex = ExpVec::pure_u(lt.d, n as i64);
    if chi.coeff(&vertex) != Int::one() {
        return Err(CoverError::MissingVertex);
    }
    Ok(dual_cone_at_vertex(&chi, &vertex)?)
}

/// Inner-automorphism test: the pi1 images of the composite are a common
/// conjugation of the generators.
fn composite_is_inner(images: &[Vec<Letter>]) -> bool {
    let rank = images.len();
    if rank == 0 {
        return true;
    }
    // Candidate conjugators come from the longest image word: any valid w
    // equals prefix . x^k where x is that word's middle letter.
    let (e_star, u_star) = images
        .iter()
        .enumerate()
        .max_by_key(|(_, u)| u.len())
        .map(|(i, u)| (i, u.clone()))
        .expect("rank >= 1");
    let verify = |w: &[Letter]| -> bool {
        images.iter().enumerate().all(|(i, u)| {
            let x = (i + 1) as Letter;
            let conj = words::reduce(&[words::inverse(w), u.clone(), w.to_vec()].concat());
            conj == vec![x]
        })
    };
    if u_star.len() % 2 == 0 {
        return false; // w x w^-1 always has odd reduced length
    }
    let half = (u_star.len() - 1) / 2;
    let prefix = &u_star[..half];
    let x = (e_star + 1) as Letter;
    let max_k = u_star.len() as i64 * 2 + 2;
    for k in -max_k..=max_k {
        let mut w = prefix.to_vec();
        for _ in 0..k.unsigned_abs() {
            w.push(if k > 0 { x } else { -x });
        }
        let w = words::reduce(&w);
        if verify(&w) {
            return true;
        }
    }
    false
}

/// Generalized fibered cone: the intersection of the forward McMullen cone
/// with the negative of the inverse's, after transporting the inverse's
/// suspension coordinate to the forward basis (the inverse's flow runs
/// backwards, so its `u`-axis is reflected).
pub fn generalized_fibered_cone(
    lt_fwd: &LabeledTransition,
    lt_inv: &LabeledTransition,
) -> Result<OpenCone, CoverError> {
    if lt_fwd.d != lt_inv.d || lt_fwd.edge_label != lt_inv.edge_label {
        return Err(CoverError::BasisMismatch);
    }
    let composite = crate::graph::compose(&lt_fwd.source, &lt_inv.source)?;
    if !composite_is_inner(&pi1_images(&composite)?) {
        return Err(CoverError::NotInner);
    }
    let fwd = mcmullen_cone(lt_fwd)?;
    let inv = mcmullen_cone(lt_inv)?;
    Ok(fwd.intersect(&inv.flip_last().negate())?)
}

// ---------------------------------------------------------------------------
// Support powers and omega sets
// ---------------------------------------------------------------------------

/// Support-only view of `P_E` powers. Coefficients of `P_E` are
/// nonnegative crossing counts, so support arithmetic under products is
/// exact Minkowski arithmetic with no cancellation.
#[derive(Clone, Debug)]
pub struct SupportPowers {
    n: usize,
    d: usize,
    /// powers[k] holds the per-entry supports of `P_E^(k+1)`.
    powers: Vec<Vec<BTreeSet<HVec>>>,
}

impl SupportPowers {
    pub fn new(lt: &LabeledTransition) -> Self {
        let n = lt.p_e.rows;
        let base: Vec<BTreeSet<HVec>> = (0..n * n)
            .map(|i| {
                lt.p_e
                    .at(i / n, i % n)
                    .support()
                    .into_iter()
                    .map(|e| e.h)
                    .collect()
            })
            .collect();
        SupportPowers { n, d: lt.d, powers: vec![base] }
    }

    fn mul(&self, a: &[BTreeSet<HVec>], b: &[BTreeSet<HVec>]) -> Vec<BTreeSet<HVec>> {
        let n = self.n;
        let mut out = vec![BTreeSet::new(); n * n];
        for r in 0..n {
            for k in 0..n {
                if a[r * n + k].is_empty() {
                    continue;
                }
                for c in 0..n {
                    for x in &a[r * n + k] {
                        for y in &b[k * n + c] {
                            out[r * n + c].insert(hvec_add(x, y));
                        }
                    }
                }
            }
        }
        out
    }

    /// Ensure powers up to `t` are available.
    pub fn grow(&mut self, t: usize) {
        while self.powers.len() < t {
            let next = self.mul(self.powers.last().unwrap(), &self.powers[0]);
            self.powers.push(next);
        }
    }

    /// Union of entry supports of `P_E^t` (`t >= 1`).
    pub fn union_support(&mut self, t: usize) -> BTreeSet<HVec> {
        self.grow(t);
        let mut out = BTreeSet::new();
        for s in &self.powers[t - 1] {
            out.extend(s.iter().cloned());
        }
        out
    }

    pub fn entry_supports(&mut self, t: usize) -> &Vec<BTreeSet<HVec>> {
        self.grow(t);
        &self.powers[t - 1]
    }

    /// Point set of `Omega(phi~^m)`: supports of `P_E^m` for `m >= 1`, the
    /// origin for `m = 0`, and the negated supports of `P_E^|m|` for
    /// `m <= -1` (the lift is an equivariant bijection on the suspension,
    /// so `Omega(f^-1) = -Omega(f)` exactly).
    pub fn omega_points(&mut self, m: i64) -> Vec<HVec> {
        if m == 0 {
            return vec![vec![0; self.d]];
        }
        let pts = self.union_support(m.unsigned_abs() as usize);
        if m > 0 {
            pts.into_iter().collect()
        } else {
            pts.into_iter().map(|v| v.iter().map(|&x| -x).collect()).collect()
        }
    }
}

/// Support polytope of all entries of `P_E^t` in H-coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaSupport {
    pub t: usize,
    pub polytope: NewtonPolytope,
}

pub fn omega_support(lt: &LabeledTransition, t: usize) -> Result<OmegaSupport, CoverError> {
    if t == 0 {
        return Err(CoverError::BadPower);
    }
    let mut sp = SupportPowers::new(lt);
    let pts = sp.union_support(t);
    Ok(OmegaSupport { t, polytope: NewtonPolytope::from_points(lt.d, pts) })
}

/// Per-power excess of the omega data beyond the dual cone of the McMullen
/// cone, and the overall constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub t_max: usize,
    /// Sup-metric excess per `t = 1..=t_max`.
    pub excess: Vec<Rat>,
    /// The least confining constant: the maximum excess.
    pub c: Rat,
}

/// Check Lemma-style cone confinement: each negated support point of
/// `P_E^t` at height `t` must lie within a bounded sup-distance of the
/// cone generated by the McMullen-cone normals (the dual cone).
pub fn cone_confinement_check(
    lt: &LabeledTransition,
    t_max: usize,
) -> Result<ConfinementReport, CoverError> {
    let chi = mcmullen_polynomial(lt)?;
    let n = lt.p_e.rows as i64;
    let vertex = ExpVec::pure_u(lt.d, n);
    // Generators of the dual cone: u^n minus the other support points.
    let generators: Vec<HVec> = chi
        .support()
        .iter()
        .filter(|e| **e != vertex)
        .map(|e| {
            let mut v: HVec = e.h.iter().map(|&x| -x).collect();
            v.push(n - e.u);
            v
        })
        .collect();
    let mut sp = SupportPowers::new(lt);
    let mut excess = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let mut worst = Rat::zero();
        for h in sp.union_support(t) {
            let mut p: Vec<Rat> = h.iter().map(|&x| Rat::from_integer(Int::from(-x))).collect();
            p.push(Rat::from_integer(Int::from(t as i64)));
            let dist = dist_inf_to_span(&p, &generators, false)
                .expect("cone distance is always defined");
            if dist > worst {
                worst = dist;
            }
        }
        excess.push(worst);
    }
    let c = excess.iter().cloned().max().unwrap_or_else(Rat::zero);
    Ok(ConfinementReport { t_max, excess, c })
}

// ---------------------------------------------------------------------------
// Lattice gap and witness exponent
// ---------------------------------------------------------------------------

/// Enumerated truncation of `alpha^perp`: elements `(x, m)` with
/// `|m| <= t_bound` and `|x|_inf <= x_bound`.
fn alpha_perp_ball(alpha: &CohomClass, t_bound: i64, x_bound: i64) -> Vec<(HVec, i64)> {
    let d = alpha.coords.len() - 1;
    let mut out = Vec::new();
    let mut x = vec![-x_bound; d];
    loop {
        let ax: i64 = alpha.h_part().iter().zip(&x).map(|(a, b)| a * b).sum();
        let n = alpha.n_alpha();
        // a.x + n m = 0
        if n != 0 && ax % n == 0 {
            let m = -ax / n;
            if m.abs() <= t_bound {
                out.push((x.clone(), m));
            }
        }
        let mut i = d;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            if x[i] < x_bound {
                x[i] += 1;
                for v in x.iter_mut().skip(i + 1) {
                    *v = -x_bound;
                }
                break;
            }
        }
    }
}

/// Gap element and margin: the lattice point of `H` maximizing the
/// sup-distance to the truncated union of `Omega(a)` translates over
/// `a` in `alpha^perp` with `|Z-coordinate| <= T`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeGap {
    pub alpha: CohomClass,
    pub gap_element: HVec,
    pub margin: Rat,
    pub search_bound: i64,
}

fn dist_to_translate(
    h: &[i64],
    x: &[i64],
    points: &[HVec],
) -> Rat {
    // Distance in the sup metric from h to x + CH(points).
    let p: Vec<Rat> = h
        .iter()
        .zip(x)
        .map(|(&a, &b)| Rat::from_integer(Int::from(a - b)))
        .collect();
    if points.iter().all(|pt| pt.len() == 1) {
        // Interval special case (d = 1): exact without an LP.
        let lo = points.iter().map(|p| p[0]).min().unwrap();
        let hi = points.iter().map(|p| p[0]).max().unwrap();
        let v = &p[0];
        let lo = Rat::from_integer(Int::from(lo));
        let hi = Rat::from_integer(Int::from(hi));
        return if *v < lo {
            lo - v.clone()
        } else if *v > hi {
            v.clone() - hi
        } else {
            Rat::zero()
        };
    }
    dist_inf_to_span(&p, points, true).expect("hull distance is defined")
}

pub fn lattice_gap(
    alpha: &CohomClass,
    lt: &LabeledTransition,
    t_bound: i64,
) -> Result<LatticeGap, CoverError> {
    let d = lt.d;
    if d == 0 {
        return Err(CoverError::DegenerateRank);
    }
    if !alpha.is_primitive() {
        return Err(CoverError::NotPrimitive);
    }
    let mut sp = SupportPowers::new(lt);
    // Radius of the one-step omega body, for pruning.
    let p_max: i64 = sp
        .union_support(t_bound.unsigned_abs().max(1) as usize)
        .iter()
        .flat_map(|v| v.iter().map(|&x| x.abs()))
        .max()
        .unwrap_or(0);
    let a_max = alpha.coords.iter().map(|&x| x.abs()).max().unwrap_or(1).max(1);
    let x_bound = 2 * (t_bound * a_max + p_max + 2);
    let ball = alpha_perp_ball(alpha, t_bound, x_bound);
    if ball.iter().all(|(x, m)| *m == 0 && x.iter().all(|&v| v == 0)) {
        return Err(CoverError::TruncationTooSmall(t_bound));
    }
    // Candidate region: between the translates.
    let r_h = ball
        .iter()
        .flat_map(|(x, _)| x.iter().map(|&v| v.abs()))
        .max()
        .unwrap_or(1)
        .max(1);
    // Precompute omega point sets per occurring m.
    let ms: BTreeSet<i64> = ball.iter().map(|(_, m)| *m).collect();
    let omega: std::collections::HashMap<i64, Vec<HVec>> =
        ms.iter().map(|&m| (m, sp.omega_points(m))).collect();
    let mut best: Option<(Rat, HVec)> = None;
    let mut h = vec![-r_h; d];
    loop {
        let mut margin: Option<Rat> = None;
        for (x, m) in &ball {
            let dist = dist_to_translate(&h, x, &omega[m]);
            if margin.as_ref().is_none_or(|cur| dist < *cur) {
                margin = Some(dist.clone());
            }
            if dist.is_zero() {
                break;
            }
        }
        let margin = margin.expect("ball is nonempty");
        let better = match &best {
            None => true,
            Some((bm, bh)) => margin > *bm || (margin == *bm && h < *bh),
        };
        if better {
            best = Some((margin, h.clone()));
        }
        let mut i = d;
        loop {
            if i == 0 {
                let (margin, gap_element) = best.unwrap();
                return Ok(LatticeGap {
                    alpha: alpha.clone(),
                    gap_element,
                    margin,
                    search_bound: t_bound,
                });
            }
            i -= 1;
            if h[i] < r_h {
                h[i] += 1;
                for v in h.iter_mut().skip(i + 1) {
                    *v = -r_h;
                }
                break;
            }
        }
    }
}

/// Per-class certificate: gap element, margin, and the largest verified
/// witness exponent, all relative to the explicit truncation bound (an
/// empirical certificate, not an unconditional proof).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub alpha: CohomClass,
    pub n_alpha: i64,
    pub gap_element: HVec,
    pub margin: Rat,
    pub witness_exponent: i64,
    pub search_bound: i64,
    /// Always true: the disjointness is verified only within the
    /// truncated enumeration.
    pub empirical: bool,
}

/// Largest `k <= T` such that the gap element, pushed forward `k` steps,
/// stays disjoint from every enumerated `Omega(a phi~^{-k})` translate.
pub fn witness_exponent(
    alpha: &CohomClass,
    lt: &LabeledTransition,
    t_bound: i64,
) -> Result<WitnessRecord, CoverError> {
    let gap = lattice_gap(alpha, lt, t_bound)?;
    let h = &gap.gap_element;
    let mut sp = SupportPowers::new(lt);
    let a_max = alpha.coords.iter().map(|&x| x.abs()).max().unwrap_or(1).max(1);
    let p_max: i64 = sp
        .union_support(t_bound.unsigned_abs().max(1) as usize)
        .iter()
        .flat_map(|v| v.iter().map(|&x| x.abs()))
        .max()
        .unwrap_or(0);
    let x_bound = 2 * (t_bound * a_max + p_max + 2) + h.iter().map(|&v| v.abs()).max().unwrap_or(0);
    let ball = alpha_perp_ball(alpha, t_bound, x_bound);
    let mut witness = 0i64;
    for k in (1..=t_bound).rev() {
        // Disjointness: for every a = (x, m), h - x must avoid Omega(m - k).
        let disjoint = ball.iter().all(|(x, m)| {
            let pts = sp.omega_points(m - k);
            !dist_to_translate(h, x, &pts).is_zero()
        });
        if disjoint {
            witness = k;
            break;
        }
    }
    Ok(WitnessRecord {
        alpha: alpha.clone(),
        n_alpha: alpha.n_alpha(),
        gap_element: gap.gap_element,
        margin: gap.margin,
        witness_exponent: witness,
        search_bound: t_bound,
        empirical: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::graph::{transition_matrix, GraphMap};

    #[test]
    fn h_structure_rose2_gold_is_rank_zero() {
        let hs = h_structure(&rose2_gold()).unwrap();
        assert_eq!(hs.d, 0);
    }

    #[test]
    fn h_structure_identity_has_full_rank() {
        let id = GraphMap::identity(&crate::graph::CombGraph::rose(4));
        let hs = h_structure(&id).unwrap();
        assert_eq!(hs.d, 4);
    }

    #[test]
    fn h_structure_fix_d1() {
        let hs = h_structure(&fix_d1()).unwrap();
        assert_eq!(hs.d, 1);
        // Labels a -> 0, b -> 1, c -> -1 up to a global sign.
        let a = hs.edge_label[0][0];
        let b = hs.edge_label[1][0];
        let c = hs.edge_label[2][0];
        assert_eq!(a, 0);
        assert_eq!(b + c, 0);
        assert_eq!(b.abs(), 1);
    }

    #[test]
    fn h_structure_rejects_non_equivalences() {
        assert!(matches!(
            h_structure(&rose1_double()),
            Err(CoverError::NotHomotopyEquivalence)
        ));
    }

    #[test]
    fn pe_evaluates_to_transition_matrix() {
        for m in [rose2_gold(), rose2_fib(), fix_d1(), fix_d1_inverse()] {
            let hs = h_structure(&m).unwrap();
            let lt = build_pe(&m, &hs).unwrap();
            let t = transition_matrix(&m).unwrap();
            let n = lt.p_e.rows;
            for r in 0..n {
                for c in 0..n {
                    assert_eq!(
                        lt.p_e.at(r, c).eval_at_ones(),
                        t.entries.at(r, c).clone(),
                        "entry ({r},{c})"
                    );
                }
            }
        }
    }

    #[test]
    fn mcmullen_polynomial_rose2_gold() {
        let m = rose2_gold();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let chi = mcmullen_polynomial(&lt).unwrap();
        // u^2 - u - 1
        let u = LaurentPoly::<Int>::u(0);
        let expect = u.pow(2).sub(&u).unwrap().sub(&LaurentPoly::one(0)).unwrap();
        assert_eq!(chi, expect);
    }

    #[test]
    fn mcmullen_polynomial_is_monic_and_specializes() {
        let m = fix_d1();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let chi = mcmullen_polynomial(&lt).unwrap();
        assert_eq!(chi.coeff(&ExpVec::pure_u(1, 3)), Int::one());
        assert_eq!(chi.max_u_degree(), Some(3));
        // Setting t = 1 gives the integer characteristic polynomial.
        let t1 = chi.specialize(&[0, 1]).unwrap(); // pair only against u
        let ti = transition_matrix(&m).unwrap();
        let k = |v: Int| LaurentPoly::constant(0, v);
        let mut im = LaurentMatrix::zero(3, 3, 0);
        for r in 0..3 {
            for c in 0..3 {
                *im.at_mut(r, c) = k(ti.entries.at(r, c).clone());
            }
        }
        assert_eq!(t1, im.char_poly().unwrap());
        // Both determinant routes agree on uI - P_E.
        let n = lt.p_e.rows;
        let mut um = LaurentMatrix::zero(n, n, lt.d);
        for r in 0..n {
            for c in 0..n {
                let e = lt.p_e.at(r, c).neg();
                *um.at_mut(r, c) = if r == c {
                    e.add(&LaurentPoly::u(lt.d)).unwrap()
                } else {
                    e
                };
            }
        }
        assert_eq!(um.determinant().unwrap(), um.determinant_cofactor().unwrap());
    }

    #[test]
    fn mcmullen_cone_rose2_gold_is_positive_ray() {
        let m = rose2_gold();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let cone = mcmullen_cone(&lt).unwrap();
        assert_eq!(cone.normals, [vec![1]].into_iter().collect::<BTreeSet<_>>());
        assert!(cone.contains_int(&[1]).unwrap());
    }

    #[test]
    fn mcmullen_cone_contains_monodromy_class() {
        for m in [rose2_gold(), rose2_fib(), fix_d1()] {
            let hs = h_structure(&m).unwrap();
            let lt = build_pe(&m, &hs).unwrap();
            let cone = mcmullen_cone(&lt).unwrap();
            let mut class = vec![0i64; hs.d];
            class.push(1);
            assert!(cone.contains_int(&class).unwrap());
            assert!(cone.has_nonempty_interior());
        }
    }

    #[test]
    fn generalized_cone_rose2_gold() {
        let m = rose2_gold();
        let mi = rose2_gold_inverse();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let hsi = h_structure(&mi).unwrap();
        let lti = build_pe(&mi, &hsi).unwrap();
        let cone = generalized_fibered_cone(&lt, &lti).unwrap();
        assert_eq!(cone.normals, [vec![1]].into_iter().collect::<BTreeSet<_>>());
    }

    #[test]
    fn generalized_cone_fix_d1() {
        let m = fix_d1();
        let mi = fix_d1_inverse();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        // The inverse must be expressed in the same Gamma basis: same labels.
        let lti = build_pe(&mi, &hs).unwrap();
        let cone = generalized_fibered_cone(&lt, &lti).unwrap();
        assert!(cone.contains_int(&[0, 1]).unwrap());
        assert!(cone.has_nonempty_interior());
        // Contained in the forward McMullen cone.
        let fwd = mcmullen_cone(&lt).unwrap();
        for x in [[0, 1], [1, 3], [-1, 4], [1, 9]] {
            if cone.contains_int(&x).unwrap() {
                assert!(fwd.contains_int(&x).unwrap());
            }
        }
    }

    #[test]
    fn generalized_cone_rejects_non_inverse() {
        let m = fix_d1();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let lt2 = build_pe(&m, &hs).unwrap();
        assert!(matches!(
            generalized_fibered_cone(&lt, &lt2),
            Err(CoverError::NotInner)
        ));
    }

    #[test]
    fn omega_support_fixtures() {
        let m = rose2_gold();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        for t in 1..=4 {
            let om = omega_support(&lt, t).unwrap();
            assert_eq!(om.polytope.support.len(), 1);
            assert!(om.polytope.support.contains(&vec![]));
        }
        assert!(matches!(omega_support(&lt, 0), Err(CoverError::BadPower)));
    }

    #[test]
    fn omega_minkowski_containment() {
        let m = fix_d1();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let mut sp = SupportPowers::new(&lt);
        for total in 2..=6usize {
            for a in 1..total {
                let b = total - a;
                let sa = sp.union_support(a);
                let sb = sp.union_support(b);
                let sum: BTreeSet<HVec> = sa
                    .iter()
                    .flat_map(|x| sb.iter().map(move |y| hvec_add(x, y)))
                    .collect();
                for p in sp.union_support(total) {
                    assert!(sum.contains(&p), "t={total} split {a}+{b}: {p:?}");
                }
            }
        }
    }

    #[test]
    fn confinement_d0_is_zero() {
        let m = rose2_gold();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let rep = cone_confinement_check(&lt, 6).unwrap();
        assert!(rep.c.is_zero());
    }

    #[test]
    fn confinement_excess_is_subadditive_on_fix_d1() {
        let m = fix_d1();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let rep = cone_confinement_check(&lt, 8).unwrap();
        for s in 1..=4usize {
            for t in 1..=4usize {
                let lhs = &rep.excess[s + t - 1];
                let rhs = rep.excess[s - 1].clone() + rep.excess[t - 1].clone();
                assert!(*lhs <= rhs, "excess({}) > excess({s}) + excess({t})", s + t);
            }
        }
    }

    #[test]
    fn lattice_gap_replays() {
        let m = fix_d1();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let alpha = CohomClass::new(vec![1, 4]);
        let gap = lattice_gap(&alpha, &lt, 6).unwrap();
        assert!(gap.margin > Rat::zero());
        // Postcondition replay: no enumerated translate comes closer than
        // the reported margin.
        let mut sp = SupportPowers::new(&lt);
        let ball = alpha_perp_ball(&alpha, 6, 200);
        for (x, mm) in ball {
            let pts = sp.omega_points(mm);
            assert!(dist_to_translate(&gap.gap_element, &x, &pts) >= gap.margin);
        }
    }

    #[test]
    fn lattice_gap_requires_positive_rank() {
        let m = rose2_gold();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let alpha = CohomClass::new(vec![1]);
        assert!(matches!(
            lattice_gap(&alpha, &lt, 5),
            Err(CoverError::DegenerateRank)
        ));
    }

    #[test]
    fn witness_exponent_fix_d1() {
        let m = fix_d1();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        let alpha = CohomClass::new(vec![1, 6]);
        let rec = witness_exponent(&alpha, &lt, 8).unwrap();
        assert!(rec.witness_exponent >= 1, "expected a positive witness, got {rec:?}");
        assert!(rec.empirical);
        // Brute-force replay of the recorded disjointness.
        let mut sp = SupportPowers::new(&lt);
        let ball = alpha_perp_ball(&alpha, 8, 300);
        for (x, mm) in ball {
            let pts = sp.omega_points(mm - rec.witness_exponent);
            assert!(
                !dist_to_translate(&rec.gap_element, &x, &pts).is_zero(),
                "x={x:?} m={mm}"
            );
        }
    }

    #[test]
    fn witness_errors_on_degenerate_rank() {
        let m = rose2_gold();
        let hs = h_structure(&m).unwrap();
        let lt = build_pe(&m, &hs).unwrap();
        assert!(matches!(
            witness_exponent(&CohomClass::new(vec![1]), &lt, 5),
            Err(CoverError::DegenerateRank)
        ));
    }
}
