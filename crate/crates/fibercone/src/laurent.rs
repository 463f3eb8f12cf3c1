//! Exact multivariate Laurent polynomials over the integers in cover
//! variables `t_1..t_d` plus one distinguished variable `u`, and square or
//! rectangular matrices of them: ring arithmetic, fraction-free
//! determinants with an independent cofactor route, characteristic
//! polynomials, Fox derivatives, class specialization, and the gcd of
//! maximal minors.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vectors, so iteration
//! order (and every derived text rendering) is deterministic.

use std::collections::BTreeMap;
use std::fmt;


use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::IntScalar;
use crate::words::Letter;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LaurentError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("matrix is not square")]
    NotSquare,
    #[error("exact division failed (fraction-free elimination invariant broken)")]
    ExactDivision,
    #[error("entries must be u-free for a characteristic polynomial")]
    NotUFree,
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("unknown generator {0}")]
    UnknownGenerator(Letter),
    #[error("matrix must have one more column than rows for minor gcd")]
    MinorShape,
}

/// Exponent vector: `d` cover exponents and one `u` exponent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExpVec {
    pub h: Vec<i64>,
    pub u: i64,
}

impl ExpVec {
    pub fn new(h: Vec<i64>, u: i64) -> Self {
        ExpVec { h, u }
    }

    pub fn zero(d: usize) -> Self {
        ExpVec { h: vec![0; d], u: 0 }
    }

    pub fn pure_u(d: usize, u: i64) -> Self {
        ExpVec { h: vec![0; d], u }
    }

    pub fn add(&self, other: &ExpVec) -> ExpVec {
        ExpVec {
            h: self.h.iter().zip(&other.h).map(|(a, b)| a + b).collect(),
            u: self.u + other.u,
        }
    }

    pub fn sub(&self, other: &ExpVec) -> ExpVec {
        ExpVec {
            h: self.h.iter().zip(&other.h).map(|(a, b)| a - b).collect(),
            u: self.u - other.u,
        }
    }

    pub fn neg(&self) -> ExpVec {
        ExpVec { h: self.h.iter().map(|a| -a).collect(), u: -self.u }
    }

    /// Flattened coordinates `(h_1, .., h_d, u)`.
    pub fn coords(&self) -> Vec<i64> {
        let mut v = self.h.clone();
        v.push(self.u);
        v
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }
}

/// Integer-coefficient Laurent polynomial; no zero coefficients stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentPoly<I> {
    d: usize,
    terms: BTreeMap<ExpVec, I>,
}

impl<I: IntScalar> LaurentPoly<I> {
    pub fn zero(d: usize) -> Self {
        LaurentPoly { d, terms: BTreeMap::new() }
    }

    pub fn one(d: usize) -> Self {
        Self::monomial(d, ExpVec::zero(d), I::one())
    }

    pub fn constant(d: usize, c: I) -> Self {
        Self::monomial(d, ExpVec::zero(d), c)
    }

    pub fn monomial(d: usize, e: ExpVec, c: I) -> Self {
        assert_eq!(e.dim(), d, "exponent dimension mismatch");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        LaurentPoly { d, terms }
    }

    /// The variable `u`.
    pub fn u(d: usize) -> Self {
        Self::monomial(d, ExpVec::pure_u(d, 1), I::one())
    }

    /// The cover variable `t_i` (0-based).
    pub fn t(d: usize, i: usize) -> Self {
        let mut e = ExpVec::zero(d);
        e.h[i] = 1;
        Self::monomial(d, e, I::one())
    }

    pub fn ambient_d(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpVec, &I)> {
        self.terms.iter()
    }

    pub fn support(&self) -> Vec<ExpVec> {
        self.terms.keys().cloned().collect()
    }

    pub fn coeff(&self, e: &ExpVec) -> I {
        self.terms.get(e).cloned().unwrap_or_else(I::zero)
    }

    fn check_ambient(&self, other: &Self) -> Result<(), LaurentError> {
        if self.d != other.d {
            return Err(LaurentError::AmbientMismatch(self.d, other.d));
        }
        Ok(())
    }

    fn insert_add(terms: &mut BTreeMap<ExpVec, I>, e: ExpVec, c: I) {
        if c.is_zero() {
            return;
        }
        match terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LaurentError> {
        self.check_ambient(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            Self::insert_add(&mut terms, e.clone(), c.clone());
        }
        Ok(LaurentPoly { d: self.d, terms })
    }

    pub fn neg(&self) -> Self {
        LaurentPoly {
            d: self.d,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LaurentError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LaurentError> {
        self.check_ambient(other)?;
        let mut terms = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                Self::insert_add(&mut terms, e1.add(e2), c1.clone() * c2.clone());
            }
        }
        Ok(LaurentPoly { d: self.d, terms })
    }

    pub fn mul_monomial(&self, e: &ExpVec, c: &I) -> Self {
        if c.is_zero() {
            return Self::zero(self.d);
        }
        LaurentPoly {
            d: self.d,
            terms: self.terms.iter().map(|(k, v)| (k.add(e), v.clone() * c.clone())).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.d);
        for _ in 0..n {
            acc = acc.mul(self).expect("same ambient");
        }
        acc
    }

    /// Evaluate with every cover variable and `u` set to 1.
    pub fn eval_at_ones(&self) -> I {
        self.terms.values().fold(I::zero(), |a, c| a + c.clone())
    }

    pub fn is_u_free(&self) -> bool {
        self.terms.keys().all(|e| e.u == 0)
    }

    pub fn max_u_degree(&self) -> Option<i64> {
        self.terms.keys().map(|e| e.u).max()
    }

    /// Substitute `s^(alpha . v)` for each monomial exponent `v`, producing
    /// a one-variable Laurent polynomial (in the `u` slot, ambient 0).
    pub fn specialize(&self, alpha: &[i64]) -> Result<LaurentPoly<I>, LaurentError> {
        if alpha.len() != self.d + 1 {
            return Err(LaurentError::AmbientMismatch(alpha.len(), self.d + 1));
        }
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut pairing = 0i64;
            for (a, x) in alpha.iter().zip(e.coords()) {
                pairing += a * x;
            }
            Self::insert_add(&mut terms, ExpVec::pure_u(0, pairing), c.clone());
        }
        Ok(LaurentPoly { d: 0, terms })
    }

    /// Width of the support along `alpha`: `max alpha.(i - j)` over support
    /// pairs; 0 for constants and the zero polynomial is rejected upstream.
    pub fn width_along(&self, alpha: &[i64]) -> Result<i64, LaurentError> {
        if alpha.len() != self.d + 1 {
            return Err(LaurentError::AmbientMismatch(alpha.len(), self.d + 1));
        }
        let vals: Vec<i64> = self
            .terms
            .keys()
            .map(|e| alpha.iter().zip(e.coords()).map(|(a, x)| a * x).sum())
            .collect();
        match (vals.iter().max(), vals.iter().min()) {
            (Some(hi), Some(lo)) => Ok(hi - lo),
            _ => Err(LaurentError::ZeroPolynomial),
        }
    }

    /// Unit normalization: translate the support so every exponent is >= 0
    /// with 0 attained in each coordinate, then make the coefficient of the
    /// lexicographically least exponent positive.
    pub fn unit_normalized(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut min = self.terms.keys().next().unwrap().clone();
        for e in self.terms.keys() {
            for (m, v) in min.h.iter_mut().zip(&e.h) {
                *m = (*m).min(*v);
            }
            min.u = min.u.min(e.u);
        }
        let shifted: BTreeMap<ExpVec, I> =
            self.terms.iter().map(|(e, c)| (e.sub(&min), c.clone())).collect();
        let lead_negative = shifted.values().next().unwrap().is_negative();
        let terms = if lead_negative {
            shifted.into_iter().map(|(e, c)| (e, -c)).collect()
        } else {
            shifted
        };
        LaurentPoly { d: self.d, terms }
    }

    /// Equality up to a unit monomial `+- t^a u^b`.
    pub fn eq_up_to_unit(&self, other: &Self) -> bool {
        self.unit_normalized() == other.unit_normalized()
    }

    /// Coordinatewise minimum of the support exponents.
    fn min_exponents(&self) -> Option<ExpVec> {
        let mut it = self.terms.keys();
        let mut min = it.next()?.clone();
        for e in it {
            for (m, v) in min.h.iter_mut().zip(&e.h) {
                *m = (*m).min(*v);
            }
            min.u = min.u.min(e.u);
        }
        Some(min)
    }

    /// Exact division in the Laurent ring. Both operands are shifted to
    /// honest polynomials first; the minimal face of a product is the
    /// product of minimal faces, so the shifted quotient has nonnegative
    /// exponents and lex on them is a well-order — any appearance of a
    /// negative quotient exponent certifies the division is not exact.
    pub fn exact_div(&self, divisor: &Self) -> Result<Self, LaurentError> {
        self.check_ambient(divisor)?;
        if divisor.is_zero() {
            return Err(LaurentError::ExactDivision);
        }
        if self.is_zero() {
            return Ok(Self::zero(self.d));
        }
        let shift_n = self.min_exponents().unwrap();
        let shift_d = divisor.min_exponents().unwrap();
        let num = LaurentPoly {
            d: self.d,
            terms: self.terms.iter().map(|(e, c)| (e.sub(&shift_n), c.clone())).collect(),
        };
        let den = LaurentPoly {
            d: self.d,
            terms: divisor.terms.iter().map(|(e, c)| (e.sub(&shift_d), c.clone())).collect(),
        };
        let mut rem = num;
        let mut quot = BTreeMap::new();
        let div_lead = den.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())).unwrap();
        while !rem.is_zero() {
            let (re, rc) = rem.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())).unwrap();
            let e = re.sub(&div_lead.0);
            if e.h.iter().any(|&x| x < 0) || e.u < 0 {
                return Err(LaurentError::ExactDivision);
            }
            let (q, r) = rc.div_rem(&div_lead.1);
            if !r.is_zero() || q.is_zero() {
                return Err(LaurentError::ExactDivision);
            }
            Self::insert_add(&mut quot, e.clone(), q.clone());
            let sub = den.mul_monomial(&e, &q);
            rem = rem.sub(&sub)?;
        }
        let correction = shift_n.sub(&shift_d);
        Ok(LaurentPoly {
            d: self.d,
            terms: quot.into_iter().map(|(e, c)| (e.add(&correction), c)).collect(),
        })
    }

    /// Content: gcd of all coefficients (nonnegative).
    pub fn content(&self) -> I {
        let mut g = I::zero();
        for c in self.terms.values() {
            g = g.gcd(c);
        }
        g
    }
}

impl<I: IntScalar> fmt::Display for LaurentPoly<I> {
    /// Canonical text rendering: monomials sorted by exponent, explicit
    /// exponents, `t1..td` and `u` as variable names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut sorted: Vec<(&ExpVec, &I)> = self.terms.iter().collect();
        sorted.sort_by(|(a, _), (b, _)| (b.u, &b.h).cmp(&(a.u, &a.h)));
        let mut first = true;
        for (e, c) in sorted {
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            let mut vars = String::new();
            for (i, &p) in e.h.iter().enumerate() {
                if p != 0 {
                    let name = if self.d == 1 { "t".to_string() } else { format!("t{}", i + 1) };
                    if p == 1 {
                        vars.push_str(&format!("{name} "));
                    } else {
                        vars.push_str(&format!("{name}^{p} "));
                    }
                }
            }
            if e.u != 0 {
                if e.u == 1 {
                    vars.push_str("u ");
                } else {
                    vars.push_str(&format!("u^{} ", e.u));
                }
            }
            let vars = vars.trim_end();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{vars}")?;
            } else {
                write!(f, "{mag} {vars}")?;
            }
        }
        Ok(())
    }
}

/// Rectangular matrix of Laurent polynomials sharing one ambient dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaurentMatrix<I> {
    pub rows: usize,
    pub cols: usize,
    d: usize,
    entries: Vec<LaurentPoly<I>>,
}

impl<I: IntScalar> LaurentMatrix<I> {
    pub fn new(rows: usize, cols: usize, d: usize, entries: Vec<LaurentPoly<I>>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        assert!(entries.iter().all(|p| p.ambient_d() == d), "ambient mismatch");
        LaurentMatrix { rows, cols, d, entries }
    }

    pub fn zero(rows: usize, cols: usize, d: usize) -> Self {
        Self::new(rows, cols, d, vec![LaurentPoly::zero(d); rows * cols])
    }

    pub fn identity(n: usize, d: usize) -> Self {
        let mut m = Self::zero(n, n, d);
        for i in 0..n {
            *m.at_mut(i, i) = LaurentPoly::one(d);
        }
        m
    }

    pub fn ambient_d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &LaurentPoly<I> {
        &self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut LaurentPoly<I> {
        &mut self.entries[r * self.cols + c]
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LaurentError> {
        if self.cols != other.rows || self.d != other.d {
            return Err(LaurentError::AmbientMismatch(self.d, other.d));
        }
        let mut out = Self::zero(self.rows, other.cols, self.d);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.at(r, k).is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let prod = self.at(r, k).mul(other.at(k, c))?;
                    *out.at_mut(r, c) = out.at(r, c).add(&prod)?;
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<Self, LaurentError> {
        if self.rows != self.cols {
            return Err(LaurentError::NotSquare);
        }
        let mut acc = Self::identity(self.rows, self.d);
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Exact determinant by Bareiss fraction-free elimination. Exact
    /// division failures are implementation bugs and surface as errors.
    pub fn determinant(&self) -> Result<LaurentPoly<I>, LaurentError> {
        if self.rows != self.cols {
            return Err(LaurentError::NotSquare);
        }
        let n = self.rows;
        if n == 0 {
            return Ok(LaurentPoly::one(self.d));
        }
        let mut a: Vec<Vec<LaurentPoly<I>>> =
            (0..n).map(|r| (0..n).map(|c| self.at(r, c).clone()).collect()).collect();
        let mut sign = false;
        let mut prev = LaurentPoly::one(self.d);
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let Some(swap) = (k + 1..n).find(|&r| !a[r][k].is_zero()) else {
                    return Ok(LaurentPoly::zero(self.d));
                };
                a.swap(k, swap);
                sign = !sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = a[k][k].mul(&a[i][j])?.sub(&a[i][k].mul(&a[k][j])?)?;
                    a[i][j] = num.exact_div(&prev)?;
                }
            }
            for i in k + 1..n {
                a[i][k] = LaurentPoly::zero(self.d);
            }
            prev = a[k][k].clone();
        }
        let det = a[n - 1][n - 1].clone();
        Ok(if sign { det.neg() } else { det })
    }

    /// Independent second determinant algorithm: cofactor expansion along
    /// the first row. Exponential; intended for cross-validation at n <= 5.
    pub fn determinant_cofactor(&self) -> Result<LaurentPoly<I>, LaurentError> {
        if self.rows != self.cols {
            return Err(LaurentError::NotSquare);
        }
        let n = self.rows;
        if n == 0 {
            return Ok(LaurentPoly::one(self.d));
        }
        if n == 1 {
            return Ok(self.at(0, 0).clone());
        }
        let mut acc = LaurentPoly::zero(self.d);
        for c in 0..n {
            if self.at(0, c).is_zero() {
                continue;
            }
            let minor_entries: Vec<LaurentPoly<I>> = (1..n)
                .flat_map(|r| (0..n).filter(|&cc| cc != c).map(move |cc| (r, cc)))
                .map(|(r, cc)| self.at(r, cc).clone())
                .collect();
            let minor = Self::new(n - 1, n - 1, self.d, minor_entries);
            let term = self.at(0, c).mul(&minor.determinant_cofactor()?)?;
            acc = if c % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
        }
        Ok(acc)
    }

    /// Characteristic polynomial `det(u I - M)` of a u-free square matrix.
    pub fn char_poly(&self) -> Result<LaurentPoly<I>, LaurentError> {
        if self.rows != self.cols {
            return Err(LaurentError::NotSquare);
        }
        if !self.entries.iter().all(LaurentPoly::is_u_free) {
            return Err(LaurentError::NotUFree);
        }
        let n = self.rows;
        let mut m = Self::zero(n, n, self.d);
        let u = LaurentPoly::u(self.d);
        for r in 0..n {
            for c in 0..n {
                let e = self.at(r, c).neg();
                *m.at_mut(r, c) = if r == c { e.add(&u)? } else { e };
            }
        }
        m.determinant()
    }

    /// Delete one column at a time, take each maximal minor, and gcd them
    /// (up to unit). Requires `cols = rows + 1`. Returns the zero
    /// polynomial when every minor vanishes.
    pub fn minor_gcd(&self) -> Result<LaurentPoly<I>, LaurentError> {
        if self.cols != self.rows + 1 {
            return Err(LaurentError::MinorShape);
        }
        let mut g = LaurentPoly::zero(self.d);
        for skip in 0..self.cols {
            let entries: Vec<LaurentPoly<I>> = (0..self.rows)
                .flat_map(|r| (0..self.cols).filter(|&c| c != skip).map(move |c| (r, c)))
                .map(|(r, c)| self.at(r, c).clone())
                .collect();
            let minor = Self::new(self.rows, self.rows, self.d, entries).determinant()?;
            g = gcd(&g, &minor)?;
        }
        Ok(g.unit_normalized())
    }
}

// ---------------------------------------------------------------------------
// Multivariate gcd via primitive polynomial remainder sequences.
//
// A Laurent polynomial is first unit-normalized into an honest polynomial;
// gcds are computed recursively, one variable at a time, with the cover
// variables eliminated before u.
// ---------------------------------------------------------------------------

/// Dense recursive view: coefficients of the main variable.
fn as_univariate<I: IntScalar>(
    p: &LaurentPoly<I>,
    var: usize, // 0..d are h-vars, d is u
) -> BTreeMap<i64, LaurentPoly<I>> {
    let d = p.ambient_d();
    let mut coeffs: BTreeMap<i64, LaurentPoly<I>> = BTreeMap::new();
    for (e, c) in p.terms() {
        let (deg, rest) = split_exp(e, var, d);
        coeffs
            .entry(deg)
            .or_insert_with(|| LaurentPoly::zero(d))
            .terms
            .insert(rest, c.clone());
    }
    coeffs.retain(|_, v| !v.is_zero());
    coeffs
}

fn split_exp(e: &ExpVec, var: usize, d: usize) -> (i64, ExpVec) {
    let mut rest = e.clone();
    let deg = if var == d {
        rest.u = 0;
        e.u
    } else {
        rest.h[var] = 0;
        e.h[var]
    };
    (deg, rest)
}

fn join_exp(mut rest: ExpVec, var: usize, d: usize, deg: i64) -> ExpVec {
    if var == d {
        rest.u = deg;
    } else {
        rest.h[var] = deg;
    }
    rest
}

fn from_univariate<I: IntScalar>(
    coeffs: &BTreeMap<i64, LaurentPoly<I>>,
    var: usize,
    d: usize,
) -> LaurentPoly<I> {
    let mut out = LaurentPoly::zero(d);
    for (&deg, c) in coeffs {
        for (e, v) in c.terms() {
            LaurentPoly::insert_add(&mut out.terms, join_exp(e.clone(), var, d, deg), v.clone());
        }
    }
    out
}

fn uni_degree<I: IntScalar>(c: &BTreeMap<i64, LaurentPoly<I>>) -> i64 {
    c.keys().next_back().copied().unwrap_or(-1)
}

/// Variables actually occurring in `p`, in elimination order (h-vars first,
/// u last).
fn occurring_vars<I: IntScalar>(p: &LaurentPoly<I>) -> Vec<usize> {
    let d = p.ambient_d();
    let mut vars = Vec::new();
    for i in 0..d {
        if p.terms().any(|(e, _)| e.h[i] != 0) {
            vars.push(i);
        }
    }
    if p.terms().any(|(e, _)| e.u != 0) {
        vars.push(d);
    }
    vars
}

/// Content of `p` with respect to `var`: gcd of its coefficients.
fn content_wrt<I: IntScalar>(p: &LaurentPoly<I>, var: usize) -> Result<LaurentPoly<I>, LaurentError> {
    let mut g = LaurentPoly::zero(p.ambient_d());
    for c in as_univariate(p, var).values() {
        g = gcd(&g, c)?;
    }
    Ok(g)
}

/// Pseudo-remainder of `a` by `b` in the main variable `var`.
fn pseudo_rem<I: IntScalar>(
    a: &LaurentPoly<I>,
    b: &LaurentPoly<I>,
    var: usize,
) -> Result<LaurentPoly<I>, LaurentError> {
    let d = a.ambient_d();
    let mut r = as_univariate(a, var);
    let bu = as_univariate(b, var);
    let db = uni_degree(&bu);
    let lb = bu.get(&db).cloned().unwrap();
    while uni_degree(&r) >= db && !r.is_empty() {
        let dr = uni_degree(&r);
        let lr = r.get(&dr).cloned().unwrap();
        // r <- lb * r - lr * x^(dr-db) * b
        let mut next: BTreeMap<i64, LaurentPoly<I>> = BTreeMap::new();
        for (&deg, c) in &r {
            next.insert(deg, c.mul(&lb)?);
        }
        for (&deg, c) in &bu {
            let sub = c.mul(&lr)?;
            let key = deg + dr - db;
            let cur = next.remove(&key).unwrap_or_else(|| LaurentPoly::zero(d));
            let nv = cur.sub(&sub)?;
            if !nv.is_zero() {
                next.insert(key, nv);
            }
        }
        next.retain(|_, v| !v.is_zero());
        debug_assert!(uni_degree(&next) < dr || next.is_empty());
        r = next;
    }
    Ok(from_univariate(&r, var, d))
}

/// Gcd of Laurent polynomials up to unit monomial, by primitive PRS.
pub fn gcd<I: IntScalar>(a: &LaurentPoly<I>, b: &LaurentPoly<I>) -> Result<LaurentPoly<I>, LaurentError> {
    if a.is_zero() {
        return Ok(b.unit_normalized());
    }
    if b.is_zero() {
        return Ok(a.unit_normalized());
    }
    let a = a.unit_normalized();
    let b = b.unit_normalized();
    let vars = {
        let mut v = occurring_vars(&a);
        for w in occurring_vars(&b) {
            if !v.contains(&w) {
                v.push(w);
            }
        }
        v.sort_unstable();
        v
    };
    let Some(&var) = vars.first() else {
        // Both constants.
        let g = a.content().gcd(&b.content());
        return Ok(LaurentPoly::constant(a.ambient_d(), g));
    };
    // Univariate (in `var`) over the remaining-variable ring.
    let ca = content_wrt(&a, var)?;
    let cb = content_wrt(&b, var)?;
    let cont = gcd(&ca, &cb)?;
    let mut p = a.exact_div(&ca.unit_normalized())?;
    let mut q = b.exact_div(&cb.unit_normalized())?;
    if uni_degree(&as_univariate(&p, var)) < uni_degree(&as_univariate(&q, var)) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        if q.is_zero() {
            let pp = p.exact_div(&content_wrt(&p, var)?.unit_normalized())?;
            return Ok(cont.mul(&pp)?.unit_normalized());
        }
        let r = pseudo_rem(&p, &q, var)?;
        let r = if r.is_zero() {
            r
        } else {
            let cr = content_wrt(&r, var)?;
            r.exact_div(&cr.unit_normalized())?
        };
        p = q;
        q = r;
    }
}

// ---------------------------------------------------------------------------
// Fox calculus
// ---------------------------------------------------------------------------

/// Abelianization data: image exponent vector per generator (1-based).
#[derive(Clone, Debug)]
pub struct Abelianization {
    pub d: usize,
    pub images: Vec<ExpVec>,
}

impl Abelianization {
    pub fn new(d: usize, images: Vec<ExpVec>) -> Self {
        assert!(images.iter().all(|e| e.dim() == d));
        Abelianization { d, images }
    }

    fn of_letter(&self, l: Letter) -> Result<ExpVec, LaurentError> {
        let idx = (l.unsigned_abs() as usize).checked_sub(1).ok_or(LaurentError::UnknownGenerator(l))?;
        let e = self.images.get(idx).ok_or(LaurentError::UnknownGenerator(l))?;
        Ok(if l > 0 { e.clone() } else { e.neg() })
    }

    /// Abelianized image of a word.
    pub fn of_word(&self, w: &[Letter]) -> Result<ExpVec, LaurentError> {
        let mut acc = ExpVec::zero(self.d);
        for &l in w {
            acc = acc.add(&self.of_letter(l)?);
        }
        Ok(acc)
    }
}

/// Fox derivative of a word with respect to generator `x` (1-based),
/// abelianized through `ab`:
/// `d(x)/d(x) = 1`, `d(x^-1)/d(x) = -ab(x)^-1`,
/// `d(uv)/d(x) = d(u)/d(x) + ab(u) d(v)/d(x)`.
pub fn fox_derivative<I: IntScalar>(
    word: &[Letter],
    x: Letter,
    ab: &Abelianization,
) -> Result<LaurentPoly<I>, LaurentError> {
    assert!(x > 0, "derivative is taken with respect to a positive generator");
    let mut acc = LaurentPoly::zero(ab.d);
    let mut prefix = ExpVec::zero(ab.d);
    for &l in word {
        let img = ab.of_letter(l)?;
        if l == x {
            acc = acc.add(&LaurentPoly::monomial(ab.d, prefix.clone(), I::one()))?;
        } else if l == -x {
            acc = acc.add(&LaurentPoly::monomial(ab.d, prefix.add(&img), -I::one()))?;
        }
        prefix = prefix.add(&img);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    type P = LaurentPoly<BigInt>;

    fn c(v: i64) -> BigInt {
        BigInt::from(v)
    }

    // One cover variable t plus u.
    fn t() -> P {
        P::t(1, 0)
    }
    fn u() -> P {
        P::u(1)
    }
    fn one() -> P {
        P::one(1)
    }

    #[test]
    fn ring_fixtures() {
        // (t - 1) + 1 = t
        let p = t().sub(&one()).unwrap().add(&one()).unwrap();
        assert_eq!(p, t());
        // (u - t)(u + t) = u^2 - t^2
        let p = u().sub(&t()).unwrap().mul(&u().add(&t()).unwrap()).unwrap();
        let expect = u().pow(2).sub(&t().pow(2)).unwrap();
        assert_eq!(p, expect);
    }

    #[test]
    fn display_is_canonical() {
        let p = u().pow(2).sub(&t().mul(&u()).unwrap()).unwrap().sub(&t()).unwrap();
        assert_eq!(p.to_string(), "u^2 - t u - t");
        assert_eq!(P::zero(1).to_string(), "0");
    }

    #[test]
    fn determinant_fixtures() {
        // [[u-t, -1], [-t, u]] -> u^2 - tu - t
        let m = LaurentMatrix::new(
            2,
            2,
            1,
            vec![u().sub(&t()).unwrap(), one().neg(), t().neg(), u()],
        );
        let det = m.determinant().unwrap();
        let expect = u().pow(2).sub(&t().mul(&u()).unwrap()).unwrap().sub(&t()).unwrap();
        assert_eq!(det, expect);
        assert_eq!(m.determinant_cofactor().unwrap(), expect);

        assert_eq!(LaurentMatrix::<BigInt>::identity(3, 1).determinant().unwrap(), one());

        // diagonal(u - 1, u - t1 t2^-1) in ambient d = 2
        let t1 = P::t(2, 0);
        let t2inv = P::monomial(2, ExpVec::new(vec![0, -1], 0), c(1));
        let u2 = P::u(2);
        let a = u2.sub(&P::one(2)).unwrap();
        let b = u2.sub(&t1.mul(&t2inv).unwrap()).unwrap();
        let m = LaurentMatrix::new(2, 2, 2, vec![a.clone(), P::zero(2), P::zero(2), b.clone()]);
        assert_eq!(m.determinant().unwrap(), a.mul(&b).unwrap());
    }

    #[test]
    fn char_poly_fixtures() {
        // Integer matrix [[0,1],[1,1]] (d = 0): u^2 - u - 1.
        let k = |v: i64| P::constant(0, c(v));
        let m = LaurentMatrix::new(2, 2, 0, vec![k(0), k(1), k(1), k(1)]);
        let chi = m.char_poly().unwrap();
        let u0 = P::u(0);
        let expect = u0.pow(2).sub(&u0).unwrap().sub(&P::one(0)).unwrap();
        assert_eq!(chi, expect);
        // zero matrix of size 3: u^3
        let m = LaurentMatrix::<BigInt>::zero(3, 3, 0);
        assert_eq!(m.char_poly().unwrap(), P::u(0).pow(3));
        // u-bearing entries are rejected
        let m = LaurentMatrix::new(1, 1, 0, vec![P::u(0)]);
        assert_eq!(m.char_poly().unwrap_err(), LaurentError::NotUFree);
    }

    #[test]
    fn specialize_fixtures() {
        // t^2 - t - 1 under alpha dual to t: s^2 - s - 1.
        let p = t().pow(2).sub(&t()).unwrap().sub(&one()).unwrap();
        let s = p.specialize(&[1, 0]).unwrap();
        let s_var = P::u(0);
        assert_eq!(s, s_var.pow(2).sub(&s_var).unwrap().sub(&P::one(0)).unwrap());
        // t - u under alpha = (1, 1): forced cancellation to 0.
        let p = t().sub(&u()).unwrap();
        assert!(p.specialize(&[1, 1]).unwrap().is_zero());
    }

    #[test]
    fn unit_normalization() {
        // -t^-1 + 1 shifts to support {0, 1}; the lexicographically least
        // exponent (the constant term) gets a positive coefficient: 1 - t.
        let p = P::monomial(1, ExpVec::new(vec![-1], 0), c(-1)).add(&one()).unwrap();
        let n = p.unit_normalized();
        let expect = one().sub(&t()).unwrap();
        assert_eq!(n, expect);
        assert!(p.eq_up_to_unit(&t().sub(&one()).unwrap()));
    }

    #[test]
    fn gcd_fixtures() {
        // gcd(t-1, (t-1)(t+1)) = t - 1 up to unit.
        let a = t().sub(&one()).unwrap();
        let b = a.mul(&t().add(&one()).unwrap()).unwrap();
        assert!(gcd(&a, &b).unwrap().eq_up_to_unit(&a));
        // gcd(t - 1, 1 - a)-style in two variables: coprime.
        let x = P::t(2, 0);
        let y = P::t(2, 1);
        let p = x.sub(&P::one(2)).unwrap();
        let q = P::one(2).sub(&y).unwrap();
        let g = gcd(&p, &q).unwrap();
        assert!(g.eq_up_to_unit(&P::one(2)));
        // gcd of zero and p.
        assert!(gcd(&P::zero(1), &a).unwrap().eq_up_to_unit(&a));
    }

    #[test]
    fn minor_gcd_fixtures() {
        // minors {t-1, (t-1)(t+1)} arranged as a 1x2 matrix.
        let a = t().sub(&one()).unwrap();
        let b = a.mul(&t().add(&one()).unwrap()).unwrap();
        let m = LaurentMatrix::new(1, 2, 1, vec![b.clone(), a.clone()]);
        // minors: delete col 0 -> a; delete col 1 -> b.
        assert!(m.minor_gcd().unwrap().eq_up_to_unit(&a));
    }

    #[test]
    fn fox_fixtures() {
        // Free group <a, b>, abelianization to d = 2, no u.
        let ab = Abelianization::new(
            2,
            vec![ExpVec::new(vec![1, 0], 0), ExpVec::new(vec![0, 1], 0)],
        );
        // d(ab)/da = 1
        let p: P = fox_derivative(&[1, 2], 1, &ab).unwrap();
        assert_eq!(p, P::one(2));
        // d(a^-1)/da = -a^-1
        let p: P = fox_derivative(&[-1], 1, &ab).unwrap();
        assert_eq!(p, P::monomial(2, ExpVec::new(vec![-1, 0], 0), c(-1)));
        // d(ba)/da = b
        let p: P = fox_derivative(&[2, 1], 1, &ab).unwrap();
        assert_eq!(p, P::monomial(2, ExpVec::new(vec![0, 1], 0), c(1)));
    }

    #[test]
    fn fox_fundamental_identity() {
        // ab(w) - 1 = sum_x (dw/dx) (ab(x) - 1), exact, on pseudo-random words.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let ab = Abelianization::new(
            2,
            vec![ExpVec::new(vec![1, 0], 0), ExpVec::new(vec![0, 1], 0)],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let len = rng.gen_range(0..12);
            let w: Vec<i32> = (0..len)
                .map(|_| {
                    let l = rng.gen_range(1..=2);
                    if rng.gen_bool(0.5) { l } else { -l }
                })
                .collect();
            let mut rhs = P::zero(2);
            for x in 1..=2 {
                let dx: P = fox_derivative(&w, x, &ab).unwrap();
                let gen_minus_one = P::monomial(2, ab.of_letter(x).unwrap(), c(1))
                    .sub(&P::one(2))
                    .unwrap();
                rhs = rhs.add(&dx.mul(&gen_minus_one).unwrap()).unwrap();
            }
            let lhs = P::monomial(2, ab.of_word(&w).unwrap(), c(1)).sub(&P::one(2)).unwrap();
            assert_eq!(lhs, rhs, "word {w:?}");
        }
    }
}
