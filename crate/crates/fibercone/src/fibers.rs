//! Alexander-theoretic invariants of the free-by-cyclic mapping torus:
//! the Fox-calculus Alexander matrix of the standard presentation, the
//! Alexander polynomial as a gcd of maximal minors, the Alexander norm,
//! fiber genus, and validation reports for constructed fiber graphs.

use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{CohomClass, OpenCone};
use crate::cover::{h_structure, CoverError, HStructure};
use crate::graph::{
    is_expanding, is_irreducible, is_train_track, pf_eigenvalue, pi1_images, transition_matrix,
    GraphError, GraphMap,
};
use crate::laurent::{fox_derivative, Abelianization, ExpVec, LaurentError, LaurentMatrix, LaurentPoly};
use crate::words::{self, Letter};
use crate::Int;

pub use crate::section::FiberGraph;

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("cover error: {0}")]
    Cover(#[from] CoverError),
    #[error("laurent error: {0}")]
    Laurent(#[from] LaurentError),
    #[error("the Alexander ideal is zero")]
    ZeroIdeal,
    #[error("zero Alexander polynomial has no norm")]
    ZeroPolynomial,
    #[error("genus needs cover rank d >= 1 (b_1 = 1 correction terms are out of scope)")]
    DegenerateRank,
    #[error("class lies outside the positive cone")]
    OutsidePositiveCone,
    #[error("class is not primitive")]
    NotPrimitive,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// Standard free-by-cyclic presentation of the mapping torus group:
/// generators `x_1..x_r, t`, relators `t x_i t^-1 psi(x_i)^-1`, with the
/// abelianization onto `Gamma = H + Z`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MappingTorusPresentation {
    pub rank: usize,
    /// Relators as words over `x_1..x_r, t` (letter `rank + 1` is `t`).
    pub relators: Vec<Vec<Letter>>,
    /// Images of the generators in `Gamma` (exponent vectorso over d cover
    /// variables and the suspension variable).
    pub abelianization: Vec<ExpVec>,
    pub d: usize,
}

impl MappingTorusPresentation {
    /// Presentation of the mapping torus of a homotopy equivalence, in the
    /// pi1 basis of the non-tree edges, abelianized through the given
    /// H-structure.
    pub fn from_map(m: &GraphMap, h: &HStructure) -> Result<Self, FiberError> {
        let images = pi1_images(m)?;
        let rank = images.len();
        let t: Letter = (rank + 1) as Letter;
        let relators: Vec<Vec<Letter>> = images
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mut r = vec![t, (i + 1) as Letter, -t];
                r.extend(words::inverse(w));
                r
            })
            .collect();
        let basis = m.domain.non_tree_edges();
        let mut abelianization: Vec<ExpVec> = basis
            .iter()
            .map(|&e| ExpVec::new(h.edge_label[e as usize].clone(), 0))
            .collect();
        abelianization.push(ExpVec::new(vec![0; h.d], 1)); // t
        Ok(MappingTorusPresentation { rank, relators, abelianization, d: h.d })
    }

    pub fn abelianization_map(&self) -> Abelianization {
        Abelianization::new(self.d, self.abelianization.clone())
    }

    /// Fox fundamental identity on every relator: relators abelianize to 0,
    /// so the weighted sum of derivatives must reproduce `ab(r) - 1 = 0`.
    pub fn fox_identity_holds(&self) -> bool {
        let ab = self.abelianization_map();
        self.relators.iter().all(|r| {
            let mut acc = LaurentPoly::<Int>::zero(self.d);
            for x in 1..=(self.rank + 1) as Letter {
                let Ok(dx) = fox_derivative::<Int>(r, x, &ab) else { return false };
                let Ok(img) = ab.of_word(&[x]) else { return false };
                let gen_minus_one = LaurentPoly::monomial(self.d, img, Int::from(1))
                    .sub(&LaurentPoly::one(self.d))
                    .expect("same ambient");
                let Ok(term) = dx.mul(&gen_minus_one) else { return false };
                let Ok(sum) = acc.add(&term) else { return false };
                acc = sum;
            }
            let Ok(lhs) = ab.of_word(r) else { return false };
            let lhs_poly = LaurentPoly::monomial(self.d, lhs, Int::from(1))
                .sub(&LaurentPoly::one(self.d))
                .expect("same ambient");
            acc == lhs_poly
        })
    }
}

/// Alexander matrix (Fox Jacobian of the relators) with its gcd-of-minors
/// polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlexanderData {
    pub matrix: LaurentMatrix<Int>,
    pub delta: LaurentPoly<Int>,
}

/// Fox Jacobian: row `i`, column `j` is the abelianized derivative of
/// relator `i` with respect to generator `j` (`t` is the last column).
pub fn alexander_matrix(p: &MappingTorusPresentation) -> Result<LaurentMatrix<Int>, FiberError> {
    let ab = p.abelianization_map();
    let mut entries = Vec::with_capacity(p.relators.len() * (p.rank + 1));
    for r in &p.relators {
        for x in 1..=(p.rank + 1) as Letter {
            entries.push(fox_derivative::<Int>(r, x, &ab)?);
        }
    }
    Ok(LaurentMatrix::new(p.relators.len(), p.rank + 1, p.d, entries))
}

/// Alexander polynomial: unit-normalized gcd of the maximal minors of the
/// Alexander matrix.
pub fn alexander_polynomial(p: &MappingTorusPresentation) -> Result<AlexanderData, FiberError> {
    let matrix = alexander_matrix(p)?;
    let delta = matrix.minor_gcd()?;
    if delta.is_zero() {
        return Err(FiberError::ZeroIdeal);
    }
    Ok(AlexanderData { matrix, delta })
}

/// Alexander polynomial straight from a map: presentation, Fox matrix,
/// minor gcd.
pub fn alexander_polynomial_of_map(m: &GraphMap) -> Result<AlexanderData, FiberError> {
    let h = h_structure(m)?;
    alexander_polynomial(&MappingTorusPresentation::from_map(m, &h)?)
}

/// Alexander norm: the support width of Delta along the class.
pub fn alexander_norm(delta: &LaurentPoly<Int>, alpha: &CohomClass) -> Result<i64, FiberError> {
    if delta.is_zero() {
        return Err(FiberError::ZeroPolynomial);
    }
    delta
        .width_along(&alpha.coords)
        .map_err(|_| FiberError::DimensionMismatch)
}

/// Computed genus with its exactness flag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genus {
    pub value: i64,
    /// True when the extremal support vertices along the class are unique,
    /// so no cancellation can undercount the specialized degree.
    pub exact: bool,
}

/// Fiber genus `1 + deg alpha(Delta)` for a primitive class in the
/// positive cone, with the exactness flag from vertex uniqueness.
pub fn genus(
    delta: &LaurentPoly<Int>,
    alpha: &CohomClass,
    positive_cone: &OpenCone,
) -> Result<Genus, FiberError> {
    if alpha.coords.len() < 2 {
        return Err(FiberError::DegenerateRank);
    }
    if !alpha.is_primitive() {
        return Err(FiberError::NotPrimitive);
    }
    if !positive_cone
        .contains_int(&alpha.coords)
        .map_err(|_| FiberError::DimensionMismatch)?
    {
        return Err(FiberError::OutsidePositiveCone);
    }
    if delta.is_zero() {
        return Err(FiberError::ZeroPolynomial);
    }
    let pairings: Vec<i64> = delta
        .support()
        .iter()
        .map(|e| alpha.pair(&e.coords()))
        .collect();
    let hi = *pairings.iter().max().expect("nonzero polynomial");
    let lo = *pairings.iter().min().expect("nonzero polynomial");
    let exact = pairings.iter().filter(|&&v| v == hi).count() == 1
        && pairings.iter().filter(|&&v| v == lo).count() == 1;
    let spec = delta.specialize(&alpha.coords)?;
    let value = 1 + spec.width_along(&[1]).map_err(|_| FiberError::ZeroPolynomial)?;
    Ok(Genus { value, exact })
}

/// Validation report for a constructed fiber.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberReport {
    pub alpha: CohomClass,
    pub n_alpha: i64,
    pub rank_actual: i64,
    pub rank_expected: i64,
    pub rank_ok: bool,
    pub train_track: bool,
    pub irreducible: bool,
    pub expanding: bool,
    /// Certified Perron-Frobenius interval endpoints of the first return,
    /// as exact rational strings, when defined.
    pub pf_interval: Option<(String, String)>,
    pub pf_approx: Option<f64>,
}

impl FiberReport {
    pub fn all_ok(&self) -> bool {
        self.rank_ok && self.train_track && self.irreducible && self.expanding
    }
}

/// Check a fiber graph against the Alexander data: rank identity and the
/// train track battery on the first return. Failures are carried in the
/// report, not raised.
pub fn validate_fiber(f: &FiberGraph, delta: &LaurentPoly<Int>) -> FiberReport {
    let rank_actual = f.rank();
    let rank_expected = delta
        .specialize(&f.alpha.coords)
        .ok()
        .and_then(|s| s.width_along(&[1]).ok())
        .map_or(-1, |w| 1 + w);
    let train_track = is_train_track(&f.first_return).unwrap_or(false);
    let (irreducible, expanding, pf_interval, pf_approx) =
        match transition_matrix(&f.first_return) {
            Ok(t) => {
                let irr = is_irreducible(&t);
                let exp = is_expanding(&f.first_return, t.n.max(4)).unwrap_or(false);
                let pf = if irr { pf_eigenvalue(&t).ok() } else { None };
                let interval = pf.as_ref().map(|b| (b.lo.to_string(), b.hi.to_string()));
                let approx = pf.as_ref().map(crate::graph::PfBounds::approx);
                (irr, exp, interval, approx)
            }
            Err(_) => (false, false, None, None),
        };
    FiberReport {
        alpha: f.alpha.clone(),
        n_alpha: f.n_alpha,
        rank_actual,
        rank_expected,
        rank_ok: rank_actual == rank_expected,
        train_track,
        irreducible,
        expanding,
        pf_interval,
        pf_approx,
    }
}

/// Induced homology matrix of a rose map, wrapped as the u-free Fox
/// Jacobian block `t I - J` determinant route for d = 0 cross-checks.
pub fn char_poly_of_homology(m: &GraphMap) -> Result<LaurentPoly<Int>, FiberError> {
    let phi = crate::graph::induced_homology_matrix(m)?;
    let n = phi.rows;
    let mut lm = LaurentMatrix::zero(n, n, 0);
    for r in 0..n {
        for c in 0..n {
            *lm.at_mut(r, c) = LaurentPoly::constant(0, phi.at(r, c).clone());
        }
    }
    Ok(lm.char_poly()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use num_traits::One;

    fn golden_presentation() -> MappingTorusPresentation {
        let m = rose2_gold();
        let h = h_structure(&m).unwrap();
        MappingTorusPresentation::from_map(&m, &h).unwrap()
    }

    #[test]
    fn golden_alexander_matrix_x_block() {
        // <a, b, t | t a t^-1 b^-1, t b t^-1 (ba)^-1>: the x-block is
        // [[u, -1], [-1, u - 1]] (suspension variable u).
        let p = golden_presentation();
        assert!(p.fox_identity_holds());
        let amat = alexander_matrix(&p).unwrap();
        let u = LaurentPoly::<Int>::u(0);
        let one = LaurentPoly::<Int>::one(0);
        assert_eq!(amat.at(0, 0), &u);
        assert_eq!(amat.at(0, 1), &one.neg());
        assert_eq!(amat.at(1, 0), &one.neg());
        assert_eq!(amat.at(1, 1), &u.sub(&one).unwrap());
    }

    #[test]
    fn golden_alexander_polynomial() {
        let p = golden_presentation();
        let data = alexander_polynomial(&p).unwrap();
        // u^2 - u - 1 up to unit, and it matches det(uI - Phi).
        let u = LaurentPoly::<Int>::u(0);
        let expect = u.pow(2).sub(&u).unwrap().sub(&LaurentPoly::one(0)).unwrap();
        assert!(data.delta.eq_up_to_unit(&expect));
        let chi = char_poly_of_homology(&rose2_gold()).unwrap();
        assert!(data.delta.eq_up_to_unit(&chi));
    }

    #[test]
    fn commutator_presentation_has_trivial_delta() {
        // <a, t | t a t^-1 a^-1>: gcd(u - 1, 1 - a-ish) = 1.
        let p = MappingTorusPresentation {
            rank: 1,
            relators: vec![vec![2, 1, -2, -1]],
            abelianization: vec![ExpVec::new(vec![1], 0), ExpVec::new(vec![0], 1)],
            d: 1,
        };
        assert!(p.fox_identity_holds());
        let data = alexander_polynomial(&p).unwrap();
        assert!(data.delta.eq_up_to_unit(&LaurentPoly::one(1)));
    }

    #[test]
    fn d0_fixture_delta_matches_homology() {
        for m in [rose2_gold(), rose2_fib()] {
            let data = alexander_polynomial_of_map(&m).unwrap();
            let chi = char_poly_of_homology(&m).unwrap();
            assert!(data.delta.eq_up_to_unit(&chi));
        }
    }

    #[test]
    fn golden_alexander_norm() {
        let data = alexander_polynomial_of_map(&rose2_gold()).unwrap();
        // alpha dual to the suspension: exponents {0, 1, 2} give width 2.
        let alpha = CohomClass::new(vec![1]);
        assert_eq!(alexander_norm(&data.delta, &alpha).unwrap(), 2);
        let zero = CohomClass::new(vec![0]);
        assert_eq!(alexander_norm(&data.delta, &zero).unwrap(), 0);
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive() {
        let m = fix_d1();
        let data = alexander_polynomial_of_map(&m).unwrap();
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let a = CohomClass::new(vec![rng.gen_range(-5..=5), rng.gen_range(-5..=5)]);
            let b = CohomClass::new(vec![rng.gen_range(-5..=5), rng.gen_range(-5..=5)]);
            let k = rng.gen_range(1..=4i64);
            let ka = CohomClass::new(a.coords.iter().map(|&x| k * x).collect());
            let na = alexander_norm(&data.delta, &a).unwrap();
            let nb = alexander_norm(&data.delta, &b).unwrap();
            let nka = alexander_norm(&data.delta, &ka).unwrap();
            let sum = CohomClass::new(
                a.coords.iter().zip(&b.coords).map(|(x, y)| x + y).collect(),
            );
            let nsum = alexander_norm(&data.delta, &sum).unwrap();
            assert_eq!(nka, k * na);
            assert!(nsum <= na + nb);
        }
    }

    #[test]
    fn genus_fixtures() {
        let m = fix_d1();
        let h = h_structure(&m).unwrap();
        let susp = crate::folding::suspension(&m).unwrap();
        let cone = crate::section::positive_cone(&susp, &h).unwrap();
        let data = alexander_polynomial_of_map(&m).unwrap();
        // The suspension class: fiber = G itself, rank 3.
        let alpha = CohomClass::new(vec![0, 1]);
        let g = genus(&data.delta, &alpha, &cone).unwrap();
        assert_eq!(g.value, 3);
        // Determinism / idempotence.
        assert_eq!(genus(&data.delta, &alpha, &cone).unwrap(), g);
        // Genus <= norm + 1 always.
        for a in -3..=3i64 {
            for n in 1..=4i64 {
                let alpha = CohomClass::new(vec![a, n]);
                if !alpha.is_primitive() || !cone.contains_int(&alpha.coords).unwrap() {
                    continue;
                }
                let g = genus(&data.delta, &alpha, &cone).unwrap();
                let norm = alexander_norm(&data.delta, &alpha).unwrap();
                assert!(g.value <= norm + 1, "alpha ({a},{n})");
            }
        }
        // d = 0 and non-cone classes are rejected.
        assert!(matches!(
            genus(&data.delta, &CohomClass::new(vec![1]), &cone),
            Err(FiberError::DegenerateRank)
        ));
        assert!(matches!(
            genus(&data.delta, &CohomClass::new(vec![0, -1]), &cone),
            Err(FiberError::OutsidePositiveCone)
        ));
        assert!(matches!(
            genus(&data.delta, &CohomClass::new(vec![0, 2]), &cone),
            Err(FiberError::NotPrimitive)
        ));
    }

    #[test]
    fn genus_affine_along_rays() {
        // g_{alpha + n beta} is affine in n when the extremal vertices stay
        // unique along the ray.
        let m = fix_d1();
        let data = alexander_polynomial_of_map(&m).unwrap();
        let alpha = vec![1i64, 2];
        let beta = vec![0i64, 1];
        let mut values = Vec::new();
        for n in 1..=10i64 {
            let c = CohomClass::new(
                alpha.iter().zip(&beta).map(|(a, b)| a + n * b).collect(),
            );
            let spec = data.delta.specialize(&c.coords).unwrap();
            values.push(1 + spec.width_along(&[1]).unwrap());
        }
        let d1 = values[1] - values[0];
        for w in values.windows(2) {
            assert_eq!(w[1] - w[0], d1, "values {values:?}");
        }
    }

    #[test]
    fn validate_fiber_reports() {
        let m = fix_d1();
        let h = h_structure(&m).unwrap();
        let susp = crate::folding::suspension(&m).unwrap();
        let data = alexander_polynomial_of_map(&m).unwrap();
        let alpha = CohomClass::new(vec![0, 1]);
        let fiber = crate::section::fiber_graph(&alpha, &susp, &h).unwrap();
        let report = validate_fiber(&fiber, &data.delta);
        assert!(report.all_ok(), "{report:?}");
        assert_eq!(report.rank_actual, 3);
        assert!(report.pf_approx.unwrap() > 1.0);
        // Negative control: corrupt the fiber by deleting an edge.
        let mut bad = fiber.clone();
        let g = &bad.graph;
        let keep: Vec<(u32, u32)> = (1..g.n_edges())
            .map(|e| {
                let d = g.positive_dart(e);
                (g.init(d), g.term(d))
            })
            .collect();
        if let Ok(smaller) = crate::graph::CombGraph::new(g.n_vertices(), &keep) {
            bad.graph = smaller;
            let report = validate_fiber(&bad, &data.delta);
            assert!(!report.rank_ok);
        }
    }
}
