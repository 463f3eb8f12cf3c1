//! Exact rational polyhedral machinery: Newton polytopes with hull-vertex
//! detection, open cones in H-representation, strict membership, rational
//! LP feasibility and sup-distance computations, integral point
//! enumeration in slices, and proper-subcone samples.
//!
//! Every decision is made in exact rational arithmetic; cones are stored
//! as H-representations only (all downstream queries are membership or
//! small LPs, solved by a textbook two-phase simplex with Bland's rule).

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::laurent::LaurentPoly;
use crate::scalar::IntScalar;
use crate::{Int, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConeError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero polynomial has no Newton polytope")]
    ZeroPolynomial,
    #[error("vertex is not in the support")]
    VertexNotInSupport,
    #[error("cone has empty interior")]
    EmptyInterior,
    #[error("slice basis is not linearly independent")]
    DependentSlice,
    #[error("margin must be nonnegative")]
    NegativeMargin,
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(Int::from(n))
}

/// Primitive representative of an integer vector: divide by the gcd of the
/// coordinates (direction preserved). The zero vector stays zero.
pub fn primitive(v: &[i64]) -> Vec<i64> {
    let mut g: i64 = 0;
    for &x in v {
        g = num_integer::gcd(g, x.abs());
    }
    if g <= 1 {
        return v.to_vec();
    }
    v.iter().map(|&x| x / g).collect()
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| num_integer::gcd(g, x.abs()))
}

// ---------------------------------------------------------------------------
// Exact two-phase simplex
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    /// Optimal objective value and a minimizer over the nonnegative vars.
    Optimal(Rat, Vec<Rat>),
}

/// Minimize `c . x` subject to `row . x (rel) rhs` per constraint and
/// `x >= 0`, exactly.
pub fn solve_lp(n: usize, constraints: &[(Vec<Rat>, Rel, Rat)], c: &[Rat]) -> LpOutcome {
    assert_eq!(c.len(), n);
    let m = constraints.len();
    // Normalize rhs >= 0.
    let mut rows: Vec<(Vec<Rat>, Rel, Rat)> = Vec::with_capacity(m);
    for (a, rel, b) in constraints {
        assert_eq!(a.len(), n);
        if b < &Rat::zero() {
            let flipped = match rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
            rows.push((a.iter().map(|x| -x.clone()).collect(), flipped, -b.clone()));
        } else {
            rows.push((a.clone(), *rel, b.clone()));
        }
    }
    // Column layout: n structural, then one slack/surplus per inequality,
    // then artificials as needed.
    let mut n_slack = 0usize;
    for (_, rel, _) in &rows {
        if *rel != Rel::Eq {
            n_slack += 1;
        }
    }
    let mut artificial_cols: Vec<usize> = Vec::new();
    let total_guess = n + n_slack + m;
    let mut tab: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut slack_used = 0usize;
    let mut art_used = 0usize;
    for (a, rel, b) in &rows {
        let mut row = vec![Rat::zero(); total_guess + 1];
        row[..n].clone_from_slice(a);
        row[total_guess] = b.clone();
        match rel {
            Rel::Le => {
                row[n + slack_used] = Rat::one();
                basis.push(n + slack_used);
                slack_used += 1;
            }
            Rel::Ge => {
                row[n + slack_used] = -Rat::one();
                slack_used += 1;
                row[n + n_slack + art_used] = Rat::one();
                basis.push(n + n_slack + art_used);
                artificial_cols.push(n + n_slack + art_used);
                art_used += 1;
            }
            Rel::Eq => {
                row[n + n_slack + art_used] = Rat::one();
                basis.push(n + n_slack + art_used);
                artificial_cols.push(n + n_slack + art_used);
                art_used += 1;
            }
        }
        tab.push(row);
    }
    let total = total_guess; // unused artificial slots stay zero columns
    let is_artificial = |j: usize| j >= n + n_slack;

    // Canonical cost row for a given cost vector (reduce by basic rows).
    let canonical_cost = |tab: &Vec<Vec<Rat>>, basis: &[usize], cost: &dyn Fn(usize) -> Rat| {
        let mut z = vec![Rat::zero(); total + 1];
        for (j, zj) in z.iter_mut().enumerate().take(total) {
            *zj = cost(j);
        }
        for (i, &bi) in basis.iter().enumerate() {
            let cb = cost(bi);
            if !cb.is_zero() {
                for j in 0..=total {
                    let sub = cb.clone() * tab[i][j].clone();
                    z[j] -= sub;
                }
            }
        }
        z
    };

    // Simplex iterations with Bland's rule on a canonical tableau; only
    // columns below `enter_bound` may enter the basis.
    let run = |tab: &mut Vec<Vec<Rat>>, basis: &mut Vec<usize>, z: &mut Vec<Rat>, enter_bound: usize| -> bool {
        loop {
            // Entering: smallest index with negative reduced cost.
            let Some(enter) = (0..enter_bound).find(|&j| z[j] < Rat::zero()) else {
                return true; // optimal
            };
            // Ratio test with Bland tie-break (smallest basis var).
            let mut leave: Option<(usize, Rat)> = None;
            for (i, row) in tab.iter().enumerate() {
                if row[enter] > Rat::zero() {
                    let ratio = row[total].clone() / row[enter].clone();
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && basis[i] < basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((li, _)) = leave else {
                return false; // unbounded
            };
            // Pivot at (li, enter).
            let piv = tab[li][enter].clone();
            for x in tab[li].iter_mut() {
                *x /= piv.clone();
            }
            for i in 0..tab.len() {
                if i != li && !tab[i][enter].is_zero() {
                    let f = tab[i][enter].clone();
                    for j in 0..=total {
                        let sub = f.clone() * tab[li][j].clone();
                        tab[i][j] -= sub;
                    }
                }
            }
            if !z[enter].is_zero() {
                let f = z[enter].clone();
                for j in 0..=total {
                    let sub = f.clone() * tab[li][j].clone();
                    z[j] -= sub;
                }
            }
            basis[li] = enter;
        }
    };

    // Phase 1.
    if !artificial_cols.is_empty() {
        let art_set: BTreeSet<usize> = artificial_cols.iter().copied().collect();
        let cost = |j: usize| if art_set.contains(&j) { Rat::one() } else { Rat::zero() };
        let mut z = canonical_cost(&tab, &basis, &cost);
        let optimal = run(&mut tab, &mut basis, &mut z, total);
        debug_assert!(optimal, "phase 1 is bounded below by 0");
        // Value of phase-1 objective is -z[rhs].
        if -z[total].clone() > Rat::zero() {
            return LpOutcome::Infeasible;
        }
        // Pivot remaining basic artificials out where possible.
        for i in 0..tab.len() {
            if is_artificial(basis[i]) {
                if let Some(j) = (0..n + n_slack).find(|&j| !tab[i][j].is_zero()) {
                    let piv = tab[i][j].clone();
                    for x in tab[i].iter_mut() {
                        *x /= piv.clone();
                    }
                    for k in 0..tab.len() {
                        if k != i && !tab[k][j].is_zero() {
                            let f = tab[k][j].clone();
                            for col in 0..=total {
                                let sub = f.clone() * tab[i][col].clone();
                                tab[k][col] -= sub;
                            }
                        }
                    }
                    basis[i] = j;
                }
                // Otherwise the row is redundant (all-zero over real vars,
                // rhs 0); it can stay with its artificial pinned at 0.
            }
        }
    }

    // Phase 2: artificial columns are barred from entering.
    let cost = |j: usize| if j < n { c[j].clone() } else { Rat::zero() };
    let mut z = canonical_cost(&tab, &basis, &cost);
    if !run(&mut tab, &mut basis, &mut z, n + n_slack) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab[i][total].clone();
        }
    }
    let value = -z[total].clone();
    LpOutcome::Optimal(value, x)
}

/// Feasibility of `rows . y (rel) rhs` over free variables `y` (split into
/// positive and negative parts internally). Returns a witness on success.
pub fn feasible_free(
    dim: usize,
    constraints: &[(Vec<Rat>, Rel, Rat)],
) -> Option<Vec<Rat>> {
    let split: Vec<(Vec<Rat>, Rel, Rat)> = constraints
        .iter()
        .map(|(a, rel, b)| {
            let mut row = Vec::with_capacity(2 * dim);
            row.extend(a.iter().cloned());
            row.extend(a.iter().map(|x| -x.clone()));
            (row, *rel, b.clone())
        })
        .collect();
    let zero_cost = vec![Rat::zero(); 2 * dim];
    match solve_lp(2 * dim, &split, &zero_cost) {
        LpOutcome::Optimal(_, x) => {
            Some((0..dim).map(|i| x[i].clone() - x[dim + i].clone()).collect())
        }
        _ => None,
    }
}

/// Exact sup-norm distance from `p` to the set `{ M lambda : lambda >= 0,
/// (sum lambda = 1 if `affine`) }` where the columns of `M` are `points`.
pub fn dist_inf_to_span(p: &[Rat], points: &[Vec<i64>], affine: bool) -> Option<Rat> {
    let dim = p.len();
    let k = points.len();
    if k == 0 {
        return if affine {
            None
        } else {
            // Distance to the origin-only cone.
            Some(p.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero))
        };
    }
    // Variables: lambda_1..k >= 0, eps >= 0. Minimize eps subject to
    //   sum_j lambda_j p_j[i] - eps <= p[i]
    //   sum_j lambda_j p_j[i] + eps >= p[i]
    let n = k + 1;
    let mut cons: Vec<(Vec<Rat>, Rel, Rat)> = Vec::new();
    for i in 0..dim {
        let mut lo = vec![Rat::zero(); n];
        let mut hi = vec![Rat::zero(); n];
        for (j, pt) in points.iter().enumerate() {
            lo[j] = rat(pt[i]);
            hi[j] = rat(pt[i]);
        }
        lo[k] = -Rat::one();
        hi[k] = Rat::one();
        cons.push((lo, Rel::Le, p[i].clone()));
        cons.push((hi, Rel::Ge, p[i].clone()));
    }
    if affine {
        let mut row = vec![Rat::one(); n];
        row[k] = Rat::zero();
        cons.push((row, Rel::Eq, Rat::one()));
    }
    let mut cost = vec![Rat::zero(); n];
    cost[k] = Rat::one();
    match solve_lp(n, &cons, &cost) {
        LpOutcome::Optimal(v, _) => Some(v),
        _ => None,
    }
}

/// Exact membership of `p` in the convex hull of `points`.
pub fn point_in_hull(p: &[Rat], points: &[Vec<i64>]) -> bool {
    dist_inf_to_span(p, points, true).is_some_and(|d| d.is_zero())
}

// ---------------------------------------------------------------------------
// Newton polytopes
// ---------------------------------------------------------------------------

/// Integer support set with its hull vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolytope {
    pub dim: usize,
    pub support: BTreeSet<Vec<i64>>,
    pub hull_vertices: BTreeSet<Vec<i64>>,
}

impl NewtonPolytope {
    pub fn from_points(dim: usize, points: impl IntoIterator<Item = Vec<i64>>) -> Self {
        let support: BTreeSet<Vec<i64>> = points.into_iter().inspect(|p| {
            assert_eq!(p.len(), dim);
        }).collect();
        let hull_vertices = support
            .iter()
            .filter(|p| {
                let others: Vec<Vec<i64>> =
                    support.iter().filter(|q| q != p).cloned().collect();
                if others.is_empty() {
                    return true;
                }
                let pr: Vec<Rat> = p.iter().map(|&x| rat(x)).collect();
                !point_in_hull(&pr, &others)
            })
            .cloned()
            .collect();
        NewtonPolytope { dim, support, hull_vertices }
    }

    /// Minkowski sum of supports (hull recomputed).
    pub fn minkowski_sum(&self, other: &NewtonPolytope) -> NewtonPolytope {
        assert_eq!(self.dim, other.dim);
        let pts = self
            .support
            .iter()
            .flat_map(|a| {
                other.support.iter().map(move |b| {
                    a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<i64>>()
                })
            })
            .collect::<Vec<_>>();
        NewtonPolytope::from_points(self.dim, pts)
    }
}

/// Newton polytope of a nonzero Laurent polynomial: support exponents in
/// `(h_1..h_d, u)` coordinates.
pub fn newton_polytope<I: IntScalar>(p: &LaurentPoly<I>) -> Result<NewtonPolytope, ConeError> {
    if p.is_zero() {
        return Err(ConeError::ZeroPolynomial);
    }
    let dim = p.ambient_d() + 1;
    Ok(NewtonPolytope::from_points(dim, p.support().iter().map(|e| e.coords())))
}

// ---------------------------------------------------------------------------
// Open cones
// ---------------------------------------------------------------------------

/// Open rational polyhedral cone `{x : n . x > 0 for every normal n}`,
/// stored by primitive integer normals. An empty normal list is the whole
/// space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenCone {
    pub ambient_dim: usize,
    pub normals: BTreeSet<Vec<i64>>,
}

impl OpenCone {
    pub fn whole_space(ambient_dim: usize) -> Self {
        OpenCone { ambient_dim, normals: BTreeSet::new() }
    }

    pub fn from_normals(ambient_dim: usize, normals: impl IntoIterator<Item = Vec<i64>>) -> Self {
        let normals = normals
            .into_iter()
            .inspect(|n| assert_eq!(n.len(), ambient_dim))
            .map(|n| primitive(&n))
            .filter(|n| n.iter().any(|&x| x != 0))
            .collect();
        OpenCone { ambient_dim, normals }
    }

    /// Strict membership of a rational point.
    pub fn contains(&self, x: &[Rat]) -> Result<bool, ConeError> {
        if x.len() != self.ambient_dim {
            return Err(ConeError::DimensionMismatch(x.len(), self.ambient_dim));
        }
        Ok(self.normals.iter().all(|n| {
            let dot: Rat = n.iter().zip(x).map(|(&a, b)| rat(a) * b.clone()).sum();
            dot > Rat::zero()
        }))
    }

    pub fn contains_int(&self, x: &[i64]) -> Result<bool, ConeError> {
        let xr: Vec<Rat> = x.iter().map(|&v| rat(v)).collect();
        self.contains(&xr)
    }

    pub fn intersect(&self, other: &OpenCone) -> Result<OpenCone, ConeError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ConeError::DimensionMismatch(self.ambient_dim, other.ambient_dim));
        }
        let mut normals = self.normals.clone();
        normals.extend(other.normals.iter().cloned());
        Ok(OpenCone { ambient_dim: self.ambient_dim, normals })
    }

    pub fn negate(&self) -> OpenCone {
        OpenCone {
            ambient_dim: self.ambient_dim,
            normals: self.normals.iter().map(|n| n.iter().map(|&x| -x).collect()).collect(),
        }
    }

    /// Reflect the last (suspension) coordinate.
    pub fn flip_last(&self) -> OpenCone {
        OpenCone {
            ambient_dim: self.ambient_dim,
            normals: self
                .normals
                .iter()
                .map(|n| {
                    let mut m = n.clone();
                    let last = m.len() - 1;
                    m[last] = -m[last];
                    m
                })
                .collect(),
        }
    }

    /// Exact nonemptiness of the open cone: feasibility of the scaled
    /// system `{n . x >= 1}` over free `x`.
    pub fn has_nonempty_interior(&self) -> bool {
        if self.normals.is_empty() {
            return true;
        }
        let cons: Vec<(Vec<Rat>, Rel, Rat)> = self
            .normals
            .iter()
            .map(|n| (n.iter().map(|&a| rat(a)).collect(), Rel::Ge, Rat::one()))
            .collect();
        feasible_free(self.ambient_dim, &cons).is_some()
    }

    /// An interior rational point, when one exists.
    pub fn interior_point(&self) -> Option<Vec<Rat>> {
        if self.normals.is_empty() {
            return Some(vec![Rat::zero(); self.ambient_dim]);
        }
        let cons: Vec<(Vec<Rat>, Rel, Rat)> = self
            .normals
            .iter()
            .map(|n| (n.iter().map(|&a| rat(a)).collect(), Rel::Ge, Rat::one()))
            .collect();
        feasible_free(self.ambient_dim, &cons)
    }
}

/// Dual cone of the Newton polytope of `p` centered at the support point
/// `v`: normals `{v - j : j in support \ {v}}`, primitive and deduplicated.
pub fn dual_cone_at_vertex<I: IntScalar>(
    p: &LaurentPoly<I>,
    v: &crate::laurent::ExpVec,
) -> Result<OpenCone, ConeError> {
    if p.is_zero() {
        return Err(ConeError::ZeroPolynomial);
    }
    let support = p.support();
    if !support.contains(v) {
        return Err(ConeError::VertexNotInSupport);
    }
    let vc = v.coords();
    let dim = vc.len();
    Ok(OpenCone::from_normals(
        dim,
        support.iter().filter(|j| *j != v).map(|j| {
            vc.iter().zip(j.coords()).map(|(a, b)| a - b).collect::<Vec<i64>>()
        }),
    ))
}

// ---------------------------------------------------------------------------
// Cohomology classes and slices
// ---------------------------------------------------------------------------

/// Integer class in `Gamma^* = (H + Z)^*`; the last coordinate is `n_alpha`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CohomClass {
    pub coords: Vec<i64>,
}

impl CohomClass {
    pub fn new(coords: Vec<i64>) -> Self {
        CohomClass { coords }
    }

    pub fn n_alpha(&self) -> i64 {
        *self.coords.last().expect("nonempty class")
    }

    pub fn h_part(&self) -> &[i64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn is_primitive(&self) -> bool {
        gcd_all(&self.coords) == 1
    }

    pub fn pair(&self, v: &[i64]) -> i64 {
        self.coords.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Integer basis of a `(d'+1)`-dimensional subspace (a slice is the cone
/// intersected with this subspace).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSlice {
    pub basis: Vec<Vec<i64>>,
}

impl RationalSlice {
    pub fn new(basis: Vec<Vec<i64>>) -> Result<Self, ConeError> {
        if basis.is_empty() {
            return Err(ConeError::DependentSlice);
        }
        let dim = basis[0].len();
        if basis.iter().any(|b| b.len() != dim) {
            return Err(ConeError::DependentSlice);
        }
        let s = RationalSlice { basis };
        if s.rank() != s.basis.len() {
            return Err(ConeError::DependentSlice);
        }
        Ok(s)
    }

    pub fn full(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        RationalSlice { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis[0].len()
    }

    fn rank(&self) -> usize {
        // Gaussian elimination over Q.
        let mut rows: Vec<Vec<Rat>> = self
            .basis
            .iter()
            .map(|b| b.iter().map(|&x| rat(x)).collect())
            .collect();
        let dim = self.ambient_dim();
        let mut rank = 0usize;
        for col in 0..dim {
            if let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) {
                rows.swap(rank, p);
                for r in 0..rows.len() {
                    if r != rank && !rows[r][col].is_zero() {
                        let f = rows[r][col].clone() / rows[rank][col].clone();
                        for c2 in 0..dim {
                            let sub = f.clone() * rows[rank][c2].clone();
                            rows[r][c2] -= sub;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    /// Does the integer point lie in the rational span of the basis?
    pub fn spans(&self, x: &[i64]) -> bool {
        // Solve basis^T lambda = x over Q by elimination on the augmented
        // system.
        let dim = self.ambient_dim();
        let k = self.basis.len();
        let mut aug: Vec<Vec<Rat>> = (0..dim)
            .map(|i| {
                let mut row: Vec<Rat> = (0..k).map(|j| rat(self.basis[j][i])).collect();
                row.push(rat(x[i]));
                row
            })
            .collect();
        let mut rank_rows = 0usize;
        for col in 0..k {
            if let Some(p) = (rank_rows..dim).find(|&r| !aug[r][col].is_zero()) {
                aug.swap(rank_rows, p);
                for r in 0..dim {
                    if r != rank_rows && !aug[r][col].is_zero() {
                        let f = aug[r][col].clone() / aug[rank_rows][col].clone();
                        for c2 in 0..=k {
                            let sub = f.clone() * aug[rank_rows][c2].clone();
                            aug[r][c2] -= sub;
                        }
                    }
                }
                rank_rows += 1;
            }
        }
        // Consistent iff no row (0..0 | nonzero).
        aug.iter().all(|row| !(row[..k].iter().all(Zero::is_zero) && !row[k].is_zero()))
    }
}

/// Primitive integral points of the slice lattice lying in the open cone,
/// with sup-norm at most `norm_bound`, in lexicographic order.
pub fn primitive_points(
    cone: &OpenCone,
    slice: &RationalSlice,
    norm_bound: i64,
) -> Result<Vec<CohomClass>, ConeError> {
    let dim = cone.ambient_dim;
    if slice.ambient_dim() != dim {
        return Err(ConeError::DimensionMismatch(slice.ambient_dim(), dim));
    }
    let mut out = Vec::new();
    let mut point = vec![-norm_bound; dim];
    if norm_bound < 0 {
        return Ok(out);
    }
    loop {
        if gcd_all(&point) == 1 && slice.spans(&point) && cone.contains_int(&point)? {
            out.push(CohomClass::new(point.clone()));
        }
        // Lexicographic increment.
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if point[i] < norm_bound {
                point[i] += 1;
                for p in point.iter_mut().skip(i + 1) {
                    *p = -norm_bound;
                }
                break;
            }
        }
    }
}

/// Shrunken proper-subcone sample: the interior of
/// `{x : n . x >= margin * |x|_1 for all normals n}`, realized by the
/// additional rational normals `n - margin * s` over all sign vectors `s`.
pub fn proper_subcone_sample(cone: &OpenCone, margin: &Rat) -> Result<OpenCone, ConeError> {
    if margin.is_negative() {
        return Err(ConeError::NegativeMargin);
    }
    if !cone.has_nonempty_interior() {
        return Err(ConeError::EmptyInterior);
    }
    if margin.is_zero() {
        return Ok(cone.clone());
    }
    let dim = cone.ambient_dim;
    let p = margin.numer();
    let q = margin.denom();
    let p_i64 = p.try_into().unwrap_or(i64::MAX);
    let q_i64: i64 = q.try_into().unwrap_or(i64::MAX);
    let mut normals: Vec<Vec<i64>> = Vec::new();
    for n in &cone.normals {
        for signs in 0..(1u32 << dim) {
            let row: Vec<i64> = (0..dim)
                .map(|i| {
                    let s = if (signs >> i) & 1 == 1 { 1 } else { -1 };
                    q_i64 * n[i] - p_i64 * s
                })
                .collect();
            normals.push(row);
        }
    }
    Ok(OpenCone::from_normals(dim, normals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::{ExpVec, LaurentPoly};
    use num_bigint::BigInt;

    type P = LaurentPoly<BigInt>;

    fn t() -> P {
        P::t(1, 0)
    }
    fn u() -> P {
        P::u(1)
    }

    fn golden_cone_poly() -> P {
        // u^2 - t u - t in ambient d = 1.
        u().pow(2).sub(&t().mul(&u()).unwrap()).unwrap().sub(&t()).unwrap()
    }

    #[test]
    fn newton_polytope_fixtures() {
        let p = golden_cone_poly();
        let np = newton_polytope(&p).unwrap();
        let expect: BTreeSet<Vec<i64>> =
            [vec![0, 2], vec![1, 1], vec![1, 0]].into_iter().collect();
        assert_eq!(np.support, expect);
        assert_eq!(np.hull_vertices, expect); // all three are vertices

        let mono = P::monomial(1, ExpVec::new(vec![3], -2), BigInt::from(5));
        let np = newton_polytope(&mono).unwrap();
        assert_eq!(np.support.len(), 1);
        assert_eq!(np.hull_vertices.len(), 1);

        // (1+t)(1+u): unit square, all four corners are vertices.
        let p = P::one(1)
            .add(&t())
            .unwrap()
            .mul(&P::one(1).add(&u()).unwrap())
            .unwrap();
        let np = newton_polytope(&p).unwrap();
        assert_eq!(np.support.len(), 4);
        assert_eq!(np.hull_vertices.len(), 4);

        assert_eq!(newton_polytope(&P::zero(1)).unwrap_err(), ConeError::ZeroPolynomial);
    }

    #[test]
    fn hull_vertex_detection_drops_interior_points() {
        // 1 + t + t^2 on a line: the middle point is not a vertex.
        let p = P::one(1).add(&t()).unwrap().add(&t().pow(2)).unwrap();
        let np = newton_polytope(&p).unwrap();
        assert_eq!(np.support.len(), 3);
        assert_eq!(
            np.hull_vertices,
            [vec![0, 0], vec![2, 0]].into_iter().collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn dual_cone_fixtures() {
        let p = golden_cone_poly();
        let c = dual_cone_at_vertex(&p, &ExpVec::new(vec![0], 2)).unwrap();
        let expect: BTreeSet<Vec<i64>> = [vec![-1, 1], vec![-1, 2]].into_iter().collect();
        assert_eq!(c.normals, expect);

        // Monomial: whole space.
        let mono = P::monomial(1, ExpVec::new(vec![1], 1), BigInt::from(2));
        let c = dual_cone_at_vertex(&mono, &ExpVec::new(vec![1], 1)).unwrap();
        assert!(c.normals.is_empty());

        // u^2 - u - 1 (d = 0) at u-exponent 2: positive ray.
        let u0 = P::u(0);
        let p = u0.pow(2).sub(&u0).unwrap().sub(&P::one(0)).unwrap();
        let c = dual_cone_at_vertex(&p, &ExpVec::pure_u(0, 2)).unwrap();
        assert_eq!(c.normals, [vec![1]].into_iter().collect::<BTreeSet<_>>());

        assert_eq!(
            dual_cone_at_vertex(&p, &ExpVec::pure_u(0, 5)).unwrap_err(),
            ConeError::VertexNotInSupport
        );
    }

    #[test]
    fn contains_fixtures() {
        let p = golden_cone_poly();
        let c = dual_cone_at_vertex(&p, &ExpVec::new(vec![0], 2)).unwrap();
        assert!(c.contains_int(&[0, 1]).unwrap());
        assert!(!c.contains_int(&[0, 0]).unwrap()); // strictness at 0
        assert!(!c.contains_int(&[3, 1]).unwrap());
        // Scaling invariance.
        let x = [Rat::new(BigInt::from(1), BigInt::from(7)), Rat::new(BigInt::from(5), BigInt::from(7))];
        let y = [Rat::new(BigInt::from(2), BigInt::from(7)), Rat::new(BigInt::from(10), BigInt::from(7))];
        assert_eq!(c.contains(&x).unwrap(), c.contains(&y).unwrap());
        assert_eq!(
            c.contains(&[Rat::zero()]).unwrap_err(),
            ConeError::DimensionMismatch(1, 2)
        );
    }

    #[test]
    fn intersect_negate_fixtures() {
        let p = golden_cone_poly();
        let c = dual_cone_at_vertex(&p, &ExpVec::new(vec![0], 2)).unwrap();
        let whole = OpenCone::whole_space(2);
        assert_eq!(c.intersect(&whole).unwrap(), c);
        assert_eq!(c.negate().negate(), c);
    }

    #[test]
    fn intersection_matches_pointwise_oracle() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let c1 = OpenCone::from_normals(2, [vec![1, 0], vec![1, 1]]);
        let c2 = OpenCone::from_normals(2, [vec![0, 1], vec![-1, 3]]);
        let c = c1.intersect(&c2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = [
                Rat::new(BigInt::from(rng.gen_range(-50..50i64)), BigInt::from(rng.gen_range(1..9i64))),
                Rat::new(BigInt::from(rng.gen_range(-50..50i64)), BigInt::from(rng.gen_range(1..9i64))),
            ];
            assert_eq!(
                c.contains(&x).unwrap(),
                c1.contains(&x).unwrap() && c2.contains(&x).unwrap()
            );
        }
    }

    #[test]
    fn interior_fixtures() {
        assert!(OpenCone::from_normals(2, [vec![1, 0], vec![0, 1]]).has_nonempty_interior());
        assert!(!OpenCone::from_normals(2, [vec![1, 0], vec![-1, 0]]).has_nonempty_interior());
        assert!(OpenCone::whole_space(3).has_nonempty_interior());
    }

    #[test]
    fn primitive_point_fixtures() {
        // Positive ray in dimension 1, bound 5: only (1).
        let ray = OpenCone::from_normals(1, [vec![1]]);
        let pts = primitive_points(&ray, &RationalSlice::full(1), 5).unwrap();
        assert_eq!(pts, vec![CohomClass::new(vec![1])]);

        // First-quadrant cone, bound 2.
        let quad = OpenCone::from_normals(2, [vec![1, 0], vec![0, 1]]);
        let pts = primitive_points(&quad, &RationalSlice::full(2), 2).unwrap();
        let expect: Vec<CohomClass> = [vec![1, 1], vec![1, 2], vec![2, 1]]
            .into_iter()
            .map(CohomClass::new)
            .collect();
        assert_eq!(pts, expect);

        // Postconditions.
        for p in &pts {
            assert!(p.is_primitive());
            assert!(quad.contains_int(&p.coords).unwrap());
        }
    }

    #[test]
    fn slice_restricts_enumeration() {
        let whole = OpenCone::whole_space(2);
        let diag = RationalSlice::new(vec![vec![1, 1]]).unwrap();
        let pts = primitive_points(&whole, &diag, 3).unwrap();
        assert_eq!(pts, vec![CohomClass::new(vec![-1, -1]), CohomClass::new(vec![1, 1])]);
        assert!(RationalSlice::new(vec![vec![1, 1], vec![2, 2]]).is_err());
    }

    #[test]
    fn subcone_sample_fixtures() {
        let c = OpenCone::from_normals(2, [vec![1, 0], vec![0, 1]]);
        let same = proper_subcone_sample(&c, &Rat::zero()).unwrap();
        assert_eq!(same, c);

        let ray = OpenCone::from_normals(1, [vec![1]]);
        let shr = proper_subcone_sample(&ray, &Rat::new(BigInt::from(1), BigInt::from(2))).unwrap();
        assert_eq!(shr, ray);

        // Shrunken cone is contained in c on random points.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let shr = proper_subcone_sample(&c, &Rat::new(BigInt::from(1), BigInt::from(4))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut inside = 0u32;
        for _ in 0..500 {
            let x = [
                Rat::new(BigInt::from(rng.gen_range(-20..20i64)), BigInt::from(rng.gen_range(1..7i64))),
                Rat::new(BigInt::from(rng.gen_range(-20..20i64)), BigInt::from(rng.gen_range(1..7i64))),
            ];
            if shr.contains(&x).unwrap() {
                inside += 1;
                assert!(c.contains(&x).unwrap());
            }
        }
        assert!(inside > 0, "sample should not be empty");
        let degenerate = OpenCone::from_normals(2, [vec![1, 0], vec![-1, 0]]);
        assert_eq!(
            proper_subcone_sample(&degenerate, &Rat::one()).unwrap_err(),
            ConeError::EmptyInterior
        );
    }

    #[test]
    fn dual_cone_nonempty_iff_hull_vertex() {
        // Cross-check on a fixture with an interior support point.
        let p = P::one(1).add(&t()).unwrap().add(&t().pow(2)).unwrap();
        let np = newton_polytope(&p).unwrap();
        for pt in &np.support {
            let e = ExpVec::new(vec![pt[0]], pt[1]);
            let cone = dual_cone_at_vertex(&p, &e).unwrap();
            assert_eq!(cone.has_nonempty_interior(), np.hull_vertices.contains(pt), "{pt:?}");
        }
    }

    #[test]
    fn minkowski_sum_of_products() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Nonnegative-coefficient random pairs: support of the product is
        // the Minkowski sum of supports.
        for _ in 0..10 {
            let mut rand_poly = || {
                let mut p = P::zero(1);
                for _ in 0..rng.gen_range(1..5) {
                    let e = ExpVec::new(vec![rng.gen_range(-3..4)], rng.gen_range(-3..4));
                    let c = BigInt::from(rng.gen_range(1..4));
                    p = p.add(&P::monomial(1, e, c)).unwrap();
                }
                p
            };
            let a = rand_poly();
            let b = rand_poly();
            let prod = a.mul(&b).unwrap();
            let np = newton_polytope(&prod).unwrap();
            let sum = newton_polytope(&a).unwrap().minkowski_sum(&newton_polytope(&b).unwrap());
            assert_eq!(np.support, sum.support);
            assert_eq!(np.hull_vertices, sum.hull_vertices);
        }
    }
}
