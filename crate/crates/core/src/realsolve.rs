//! Desk-scale exact real solving: Sturm-sequence root isolation with
//! bisection refinement, square-free (Yun) decomposition, resultant
//! elimination for bivariate systems, and the curve/sphere intersection
//! used by the detector.
//!
//! Everything here is exact over the rationals. Returned floating-point
//! coordinates always come with rational certificate intervals and exactly
//! evaluated residual bounds.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::{rat, Rational, SparsePoly};

/// Dense univariate polynomial, ascending coefficients, no trailing zeros.
/// The zero polynomial has an empty coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivariatePoly {
    coeffs: Vec<Rational>,
}

impl UnivariatePoly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UnivariatePoly { coeffs }
    }

    pub fn zero() -> Self {
        UnivariatePoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&Rational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64().unwrap_or(f64::NAN);
        }
        acc
    }

    pub fn derivative(&self) -> UnivariatePoly {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * rat(i as i64))
            .collect();
        Self::new(coeffs)
    }

    pub fn neg(&self) -> UnivariatePoly {
        UnivariatePoly {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn mul(&self, rhs: &UnivariatePoly) -> UnivariatePoly {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    /// Long division: `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &UnivariatePoly) -> (UnivariatePoly, UnivariatePoly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.degree().unwrap();
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Rational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let k = rem.len() - 1 - dd;
            let factor = rem.last().unwrap() / &lead;
            if !factor.is_zero() {
                for (i, c) in divisor.coeffs.iter().enumerate() {
                    rem[k + i] -= &factor * c;
                }
                quot[k] = factor;
            }
            rem.pop();
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Exact division; panics if the remainder is nonzero (internal use on
    /// guaranteed-divisible operands).
    fn div_exact(&self, divisor: &UnivariatePoly) -> UnivariatePoly {
        let (q, r) = self.div_rem(divisor);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Scale by a positive rational so that coefficients become integral and
    /// content-free. Positive scaling preserves every sign, so Sturm counts
    /// are unaffected.
    fn primitive(&self) -> UnivariatePoly {
        if self.is_zero() {
            return Self::zero();
        }
        let mut den_lcm = BigInt::one();
        for c in &self.coeffs {
            den_lcm = den_lcm.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&den_lcm / c.denom()))
            .collect();
        let mut content = BigInt::zero();
        for i in &ints {
            content = content.gcd(i);
        }
        let coeffs = ints
            .into_iter()
            .map(|i| Rational::from_integer(i / &content))
            .collect();
        UnivariatePoly { coeffs }
    }

    /// Positive-primitive GCD.
    pub fn gcd(&self, other: &UnivariatePoly) -> UnivariatePoly {
        let mut a = self.primitive();
        let mut b = other.primitive();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = if r.is_zero() { r } else { r.primitive() };
        }
        if a.is_zero() {
            return a;
        }
        let mut g = a.primitive();
        if g.leading().unwrap().is_negative() {
            g = g.neg();
        }
        g
    }

    /// Square-free part `q / gcd(q, q')`, positive-primitive.
    pub fn squarefree_part(&self) -> UnivariatePoly {
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            return self.primitive();
        }
        self.primitive().div_exact(&g).primitive()
    }

    /// Yun's square-free decomposition: returns `(g_k, k)` pairs with
    /// `self = c * prod g_k^k`, the `g_k` square-free and pairwise coprime.
    pub fn squarefree_decomposition(&self) -> Vec<(UnivariatePoly, u32)> {
        if self.degree().map_or(true, |d| d == 0) {
            return Vec::new();
        }
        let q = self.primitive();
        let dq = q.derivative();
        let a0 = q.gcd(&dq);
        let mut b = q.div_exact(&a0);
        let mut c = dq.div_exact(&a0);
        let mut out = Vec::new();
        let mut k = 1u32;
        loop {
            let d = UnivariatePoly::new(sub_coeffs(c.coeffs(), b.derivative().coeffs()));
            if b.degree().map_or(true, |deg| deg == 0) {
                break;
            }
            let g = b.gcd(&d);
            if g.degree().is_some_and(|deg| deg > 0) {
                out.push((g.clone(), k));
            }
            b = b.div_exact(&g);
            c = d.div_exact(&g);
            k += 1;
        }
        out
    }

    /// Strict upper bound on the magnitude of every real root.
    pub fn cauchy_bound(&self) -> Rational {
        let lead = match self.leading() {
            Some(l) => l.abs(),
            None => return Rational::one(),
        };
        let max_ratio = self.coeffs[..self.coeffs.len().saturating_sub(1)]
            .iter()
            .map(|c| c.abs() / &lead)
            .max()
            .unwrap_or_else(Rational::zero);
        Rational::one() + max_ratio
    }
}

fn sub_coeffs(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x - y
        })
        .collect()
}

fn sum_coeffs(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x + y
        })
        .collect()
}

/// Sturm sequence, each entry positive-primitive.
pub fn sturm_sequence(q: &UnivariatePoly) -> Vec<UnivariatePoly> {
    let mut seq = vec![q.primitive()];
    let d = q.derivative();
    if d.is_zero() {
        return seq;
    }
    seq.push(d.primitive());
    loop {
        let n = seq.len();
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
        if r.is_zero() {
            return seq;
        }
        seq.push(r.neg().primitive());
    }
}

/// Number of sign variations of the sequence at `x`.
pub fn sign_variations_at(seq: &[UnivariatePoly], x: &Rational) -> usize {
    let mut signs = Vec::with_capacity(seq.len());
    for q in seq {
        let v = q.eval(x);
        if !v.is_zero() {
            signs.push(v.is_positive());
        }
    }
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots in the half-open interval `(lo, hi]`.
pub fn sturm_count(seq: &[UnivariatePoly], lo: &Rational, hi: &Rational) -> usize {
    sign_variations_at(seq, lo).saturating_sub(sign_variations_at(seq, hi))
}

/// Isolating interval for one real root.
#[derive(Clone, Debug)]
pub struct RootInterval {
    pub lo: Rational,
    pub hi: Rational,
    /// Multiplicity of the root in the original polynomial (1 when it was
    /// already square-free there).
    pub multiplicity: u32,
}

impl RootInterval {
    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / rat(2)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Isolate all distinct real roots of `q`.
///
/// Isolation runs on the square-free part; intervals are pairwise disjoint,
/// contain exactly one real root each, and their endpoints are not roots.
/// Multiplicities are recovered from the Yun decomposition.
pub fn isolate_real_roots(q: &UnivariatePoly) -> Result<Vec<RootInterval>> {
    if q.is_zero() {
        return Err(Error::Degenerate(
            "cannot isolate roots of the zero polynomial".to_string(),
        ));
    }
    if q.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let sf = q.squarefree_part();
    if sf.degree() == Some(0) {
        return Ok(Vec::new());
    }
    let seq = sturm_sequence(&sf);
    let bound = sf.cauchy_bound();
    let mut intervals = Vec::new();
    isolate_recursive(&sf, &seq, -bound.clone(), bound, &mut intervals);
    intervals.sort_by(|a, b| a.lo.cmp(&b.lo));

    let decomposition = q.squarefree_decomposition();
    let out = intervals
        .into_iter()
        .map(|mut iv| {
            iv.multiplicity = multiplicity_in(&decomposition, &iv);
            iv
        })
        .collect();
    Ok(out)
}

fn multiplicity_in(decomposition: &[(UnivariatePoly, u32)], iv: &RootInterval) -> u32 {
    for (factor, mult) in decomposition {
        let a = factor.eval(&iv.lo);
        let b = factor.eval(&iv.hi);
        if a.is_zero() || b.is_zero() {
            continue;
        }
        if a.is_positive() != b.is_positive() {
            return *mult;
        }
    }
    1
}

fn isolate_recursive(
    q: &UnivariatePoly,
    seq: &[UnivariatePoly],
    lo: Rational,
    hi: Rational,
    out: &mut Vec<RootInterval>,
) {
    let count = sturm_count(seq, &lo, &hi);
    match count {
        0 => {}
        1 => out.push(RootInterval {
            lo,
            hi,
            multiplicity: 1,
        }),
        _ => {
            let mid = split_point(q, &lo, &hi);
            isolate_recursive(q, seq, lo, mid.clone(), out);
            isolate_recursive(q, seq, mid, hi, out);
        }
    }
}

/// A point strictly inside `(lo, hi)` where `q` does not vanish.
fn split_point(q: &UnivariatePoly, lo: &Rational, hi: &Rational) -> Rational {
    let width = hi - lo;
    let mut denom = rat(2);
    loop {
        let step = &width / &denom;
        let mut k = Rational::one();
        while k < denom {
            let candidate = lo + &step * &k;
            if !q.eval(&candidate).is_zero() {
                return candidate;
            }
            k += Rational::one();
        }
        denom *= rat(2);
    }
}

/// Bisect until the interval width drops below `eps`; returns the midpoint.
/// A bisection point that hits the root exactly is returned as-is.
pub fn refine_root(q: &UnivariatePoly, interval: &RootInterval, eps: &Rational) -> Rational {
    let sf = q.squarefree_part();
    let (mut lo, mut hi) = (interval.lo.clone(), interval.hi.clone());
    let sign_lo = sf.eval(&lo).is_positive();
    while &hi - &lo >= *eps {
        let mid = (&lo + &hi) / rat(2);
        let v = sf.eval(&mid);
        if v.is_zero() {
            return mid;
        }
        if v.is_positive() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (&lo + &hi) / rat(2)
}

/// Bisect until the interval width is below `2^-rel_bits` times the root
/// magnitude (with a hard iteration cap), so that even roots many orders of
/// magnitude below the coefficient scale come out to full relative accuracy.
pub fn refine_root_relative(q: &UnivariatePoly, interval: &RootInterval, rel_bits: u32) -> Rational {
    let sf = q.squarefree_part();
    let (mut lo, mut hi) = (interval.lo.clone(), interval.hi.clone());
    let sign_lo = sf.eval(&lo).is_positive();
    let two = rat(2);
    for _ in 0..4000 {
        let mid = (&lo + &hi) / &two;
        let width = &hi - &lo;
        let target = mid.abs() / Rational::from_integer(BigInt::one() << rel_bits);
        if !mid.is_zero() && width <= target {
            return mid;
        }
        let v = sf.eval(&mid);
        if v.is_zero() {
            return mid;
        }
        if v.is_positive() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (&lo + &hi) / two
}

/// Like [`refine_root`] but keeps a genuine bracket; `q` must be square-free
/// with a single sign change on the input interval.
fn refine_interval(
    q: &UnivariatePoly,
    lo0: &Rational,
    hi0: &Rational,
    eps: &Rational,
) -> (Rational, Rational) {
    let (mut lo, mut hi) = (lo0.clone(), hi0.clone());
    let sign_lo = q.eval(&lo).is_positive();
    while &hi - &lo >= *eps {
        let mid = (&lo + &hi) / rat(2);
        let v = q.eval(&mid);
        if v.is_zero() {
            let quarter = (&hi - &lo) / rat(4);
            let nlo = &mid - &quarter;
            let nhi = &mid + &quarter;
            if q.eval(&nlo).is_zero() || q.eval(&nhi).is_zero() {
                return (nlo, nhi);
            }
            lo = nlo;
            hi = nhi;
            continue;
        }
        if v.is_positive() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Resultants
// ---------------------------------------------------------------------------

/// Determinant of a square rational matrix by Gaussian elimination.
fn rational_det(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::one();
    for col in 0..n {
        let pivot_row = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(r) => r,
            None => return Rational::zero(),
        };
        if pivot_row != col {
            m.swap(pivot_row, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Sylvester-matrix resultant of two univariate polynomials.
pub fn univariate_resultant(f: &UnivariatePoly, g: &UnivariatePoly) -> Rational {
    let m = match f.degree() {
        Some(d) => d,
        None => return Rational::zero(),
    };
    let n = match g.degree() {
        Some(d) => d,
        None => return Rational::zero(),
    };
    if m == 0 && n == 0 {
        return Rational::one();
    }
    if m == 0 {
        return crate::poly::pow_rational(&f.coeffs[0], n as u32);
    }
    if n == 0 {
        return crate::poly::pow_rational(&g.coeffs[0], m as u32);
    }
    let size = m + n;
    let mut matrix = vec![vec![Rational::zero(); size]; size];
    for r in 0..n {
        for (k, c) in f.coeffs.iter().rev().enumerate() {
            matrix[r][r + k] = c.clone();
        }
    }
    for r in 0..m {
        for (k, c) in g.coeffs.iter().rev().enumerate() {
            matrix[n + r][r + k] = c.clone();
        }
    }
    rational_det(matrix)
}

/// View a bivariate polynomial as univariate in `var` with the other
/// variable bound to `value`.
pub fn specialize(q: &SparsePoly, var: usize, value: &Rational) -> UnivariatePoly {
    assert_eq!(q.n_vars(), 2);
    let keep = 1 - var;
    let deg = q.degree_in(var) as usize;
    let mut coeffs = vec![Rational::zero(); deg + 1];
    for (exps, coeff) in q.terms() {
        let e = exps[var] as usize;
        coeffs[e] += coeff * crate::poly::pow_rational(value, exps[keep]);
    }
    UnivariatePoly::new(coeffs)
}

/// Coefficient of `var^k` as a polynomial in the other variable.
fn coefficient_in(q: &SparsePoly, var: usize, k: u32) -> UnivariatePoly {
    assert_eq!(q.n_vars(), 2);
    let keep = 1 - var;
    let deg = q.degree_in(keep) as usize;
    let mut coeffs = vec![Rational::zero(); deg + 1];
    for (exps, coeff) in q.terms() {
        if exps[var] == k {
            coeffs[exps[keep] as usize] += coeff;
        }
    }
    UnivariatePoly::new(coeffs)
}

/// Resultant of two bivariate polynomials with respect to the eliminated
/// variable, as a univariate polynomial in the kept variable.
///
/// Computed as Sylvester determinants over the rationals at interpolation
/// nodes where neither leading coefficient vanishes, then interpolated
/// exactly. An identically zero resultant (the inputs share a component) is
/// flagged as degenerate.
pub fn resultant(q1: &SparsePoly, q2: &SparsePoly, eliminate: usize) -> Result<UnivariatePoly> {
    if q1.n_vars() != 2 || q2.n_vars() != 2 || eliminate > 1 {
        return Err(Error::DimensionMismatch(
            "resultant elimination expects bivariate polynomials".to_string(),
        ));
    }
    if q1.is_zero() || q2.is_zero() {
        return Err(Error::Degenerate(
            "resultant of a zero polynomial".to_string(),
        ));
    }
    let keep = 1 - eliminate;
    let d1 = q1.degree_in(eliminate);
    let d2 = q2.degree_in(eliminate);
    if d1 == 0 && d2 == 0 {
        return Ok(UnivariatePoly::constant(Rational::one()));
    }
    if d1 == 0 {
        return Ok(poly_pow(&coefficient_in(q1, eliminate, 0), d2));
    }
    if d2 == 0 {
        return Ok(poly_pow(&coefficient_in(q2, eliminate, 0), d1));
    }

    let lc1 = coefficient_in(q1, eliminate, d1);
    let lc2 = coefficient_in(q2, eliminate, d2);
    let bound = (d1 as usize) * (q2.degree_in(keep) as usize)
        + (d2 as usize) * (q1.degree_in(keep) as usize);
    let needed = bound + 1;

    let mut nodes: Vec<Rational> = Vec::with_capacity(needed);
    let mut values: Vec<Rational> = Vec::with_capacity(needed);
    let mut k: i64 = 0;
    while nodes.len() < needed {
        let x = rat(k);
        k = if k >= 0 { -(k + 1) } else { -k };
        if lc1.eval(&x).is_zero() || lc2.eval(&x).is_zero() {
            continue;
        }
        let f = specialize(q1, eliminate, &x);
        let g = specialize(q2, eliminate, &x);
        values.push(univariate_resultant(&f, &g));
        nodes.push(x);
    }
    let res = lagrange_interpolate(&nodes, &values);
    if res.is_zero() {
        return Err(Error::Degenerate(
            "identically zero resultant: inputs share a component".to_string(),
        ));
    }
    Ok(res)
}

fn poly_pow(base: &UnivariatePoly, exp: u32) -> UnivariatePoly {
    let mut result = UnivariatePoly::constant(Rational::one());
    for _ in 0..exp {
        result = result.mul(base);
    }
    result
}

fn lagrange_interpolate(nodes: &[Rational], values: &[Rational]) -> UnivariatePoly {
    // Newton divided differences, then expansion.
    let n = nodes.len();
    let mut table: Vec<Rational> = values.to_vec();
    let mut newton = vec![table[0].clone()];
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &table[i] - &table[i - 1];
            let den = &nodes[i] - &nodes[i - level];
            table[i] = num / den;
        }
        newton.push(table[level].clone());
    }
    let mut result = UnivariatePoly::zero();
    let mut basis = UnivariatePoly::constant(Rational::one());
    for (k, c) in newton.iter().enumerate() {
        let term = basis.mul(&UnivariatePoly::constant(c.clone()));
        result = UnivariatePoly::new(sum_coeffs(result.coeffs(), term.coeffs()));
        if k + 1 < n {
            basis = basis.mul(&UnivariatePoly::new(vec![-nodes[k].clone(), Rational::one()]));
        }
    }
    result
}

// ---------------------------------------------------------------------------
// Curve / sphere intersection (n = 2)
// ---------------------------------------------------------------------------

/// A certified real solution of `{curve = 0, circle = 0}`.
#[derive(Clone, Debug)]
pub struct RealPoint2 {
    pub x: f64,
    pub y: f64,
    pub x_bounds: (Rational, Rational),
    pub y_bounds: (Rational, Rational),
    /// `|curve(x, y)|` evaluated exactly at the certified rational point.
    pub residual_curve: f64,
    /// `|circle(x, y)|` evaluated exactly at the certified rational point.
    pub residual_sphere: f64,
}

/// Result of slicing a curve with a circle.
#[derive(Clone, Debug)]
pub enum SphereSlice {
    Points(Vec<RealPoint2>),
    /// The curve is identically zero or shares a component with the circle;
    /// callers fall back to sampling the whole circle.
    Degenerate(String),
}

/// The circle polynomial `(x - a0)^2 + (y - a1)^2 - r^2`.
pub fn circle_poly(center: &[Rational], radius: &Rational) -> SparsePoly {
    let mut c = SparsePoly::zero(2);
    for (i, a) in center.iter().enumerate() {
        let shifted = &SparsePoly::var(2, i) - &SparsePoly::constant(2, a.clone());
        c = &c + &(&shifted * &shifted);
    }
    &c - &SparsePoly::constant(2, radius * radius)
}

/// All real intersections of `{m = 0}` with the circle of the given center
/// and radius, certified so that both residuals, evaluated exactly at the
/// returned rational point, are below `1e-10`.
pub fn curve_sphere_intersect(
    m: &SparsePoly,
    center: &[Rational],
    radius: &Rational,
) -> Result<SphereSlice> {
    if m.n_vars() != 2 || center.len() != 2 {
        return Err(Error::DimensionMismatch(
            "curve/sphere intersection is implemented for n = 2".to_string(),
        ));
    }
    if m.is_zero() {
        return Ok(SphereSlice::Degenerate(
            "curve is identically zero".to_string(),
        ));
    }
    let circle = circle_poly(center, radius);
    let rx = match resultant(m, &circle, 1) {
        Ok(r) => r,
        Err(Error::Degenerate(msg)) => return Ok(SphereSlice::Degenerate(msg)),
        Err(e) => return Err(e),
    };
    if rx.degree().map_or(true, |d| d == 0) {
        return Ok(SphereSlice::Points(Vec::new()));
    }

    let threshold = Rational::new(BigInt::one(), BigInt::from(10u32).pow(10));
    let rx_sf = rx.squarefree_part();
    let scale = Rational::one() + radius.abs();
    let mut points = Vec::new();
    for iv in isolate_real_roots(&rx)? {
        let mut x_lo = iv.lo.clone();
        let mut x_hi = iv.hi.clone();
        'depth: for depth in [120u32, 240, 480] {
            let eps = &scale / Rational::from_integer(BigInt::one() << depth);
            let (nlo, nhi) = refine_interval(&rx_sf, &x_lo, &x_hi, &eps);
            x_lo = nlo;
            x_hi = nhi;
            let x_hat = (&x_lo + &x_hi) / rat(2);
            let cy = specialize(&circle, 1, &x_hat);
            if cy.degree().map_or(true, |d| d == 0) {
                break 'depth;
            }
            for yiv in isolate_real_roots(&cy)? {
                let (y_lo, y_hi) =
                    refine_interval(&cy.squarefree_part(), &yiv.lo, &yiv.hi, &eps);
                let y_hat = (&y_lo + &y_hi) / rat(2);
                let res_curve = m.eval(&[x_hat.clone(), y_hat.clone()])?.abs();
                let res_circle = circle.eval(&[x_hat.clone(), y_hat.clone()])?.abs();
                if res_curve < threshold && res_circle < threshold {
                    points.push(RealPoint2 {
                        x: x_hat.to_f64().unwrap_or(f64::NAN),
                        y: y_hat.to_f64().unwrap_or(f64::NAN),
                        x_bounds: (x_lo.clone(), x_hi.clone()),
                        y_bounds: (y_lo, y_hi),
                        residual_curve: res_curve.to_f64().unwrap_or(f64::NAN),
                        residual_sphere: res_circle.to_f64().unwrap_or(f64::NAN),
                    });
                    break 'depth;
                }
            }
        }
    }
    points.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(SphereSlice::Points(points))
}
