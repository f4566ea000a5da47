//! Exact sparse multivariate polynomials over the rationals and the
//! polynomial-map wrapper used throughout the crate.
//!
//! Terms are kept in a `BTreeMap` from exponent vectors to nonzero rational
//! coefficients, so equal polynomials have identical representations and the
//! canonical printing is deterministic.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact coefficient field: arbitrary-precision rationals, always reduced,
/// denominator positive.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small integer rationals.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// The zero polynomial has an empty term map; stored coefficients are never
/// zero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparsePoly {
    n_vars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl SparsePoly {
    pub fn zero(n_vars: usize) -> Self {
        SparsePoly {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, value: Rational) -> Self {
        let mut p = Self::zero(n_vars);
        if !value.is_zero() {
            p.terms.insert(vec![0; n_vars], value);
        }
        p
    }

    pub fn one(n_vars: usize) -> Self {
        Self::constant(n_vars, Rational::one())
    }

    /// The monomial `x_index`.
    pub fn var(n_vars: usize, index: usize) -> Self {
        assert!(index < n_vars, "variable index out of range");
        let mut exps = vec![0; n_vars];
        exps[index] = 1;
        let mut p = Self::zero(n_vars);
        p.terms.insert(exps, Rational::one());
        p
    }

    /// Build from raw (exponents, coefficient) pairs; repeated exponent
    /// vectors are accumulated, zero results dropped.
    pub fn from_terms(n_vars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = Self::zero(n_vars);
        for (e, c) in terms {
            p.add_term(&e, c);
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Degree in a single variable; 0 for the zero polynomial.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    /// Constant (all-exponent-zero) coefficient.
    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.n_vars])
    }

    pub fn add_term(&mut self, exps: &[u32], coeff: Rational) {
        assert_eq!(exps.len(), self.n_vars, "exponent vector length mismatch");
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps.to_vec()).or_insert_with(Rational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(exps);
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n_vars);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, v)| (e.clone(), v * c))
            .collect();
        SparsePoly {
            n_vars: self.n_vars,
            terms,
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut result = Self::one(self.n_vars);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        if point.len() != self.n_vars {
            return Err(Error::DimensionMismatch(format!(
                "polynomial in {} variables evaluated at a point of length {}",
                self.n_vars,
                point.len()
            )));
        }
        let mut acc = Rational::zero();
        for (exps, coeff) in &self.terms {
            let mut term = coeff.clone();
            for (x, &e) in point.iter().zip(exps.iter()) {
                if e > 0 {
                    term *= pow_rational(x, e);
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Floating-point evaluation; non-exact by construction.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n_vars {
            return Err(Error::DimensionMismatch(format!(
                "polynomial in {} variables evaluated at a point of length {}",
                self.n_vars,
                point.len()
            )));
        }
        Ok(self.eval_f64_with_magnitude(point).0)
    }

    /// Signed value together with the sum of the absolute values of the
    /// evaluated terms. The pair supports scale-free cancellation scores:
    /// `|value| / magnitude` is near zero only where the terms genuinely
    /// cancel.
    pub fn eval_f64_with_magnitude(&self, point: &[f64]) -> (f64, f64) {
        let mut value = 0.0;
        let mut magnitude = 0.0;
        for (exps, coeff) in &self.terms {
            let mut term = coeff.to_f64().unwrap_or(f64::NAN);
            for (x, &e) in point.iter().zip(exps.iter()) {
                if e > 0 {
                    term *= x.powi(e as i32);
                }
            }
            value += term;
            magnitude += term.abs();
        }
        (value, magnitude)
    }

    /// Term-by-term power rule.
    pub fn partial_derivative(&self, var: usize) -> Result<SparsePoly> {
        if var >= self.n_vars {
            return Err(Error::IndexOutOfRange(format!(
                "derivative variable {} of {}",
                var, self.n_vars
            )));
        }
        let mut out = Self::zero(self.n_vars);
        for (exps, coeff) in &self.terms {
            let e = exps[var];
            if e == 0 {
                continue;
            }
            let mut new_exps = exps.clone();
            new_exps[var] = e - 1;
            out.add_term(&new_exps, coeff * rat(e as i64));
        }
        Ok(out)
    }

    /// Bind some variables to rational constants; the result stays in the
    /// same ring (bound variables simply no longer occur).
    pub fn substitute(&self, bindings: &[(usize, Rational)]) -> SparsePoly {
        let mut out = Self::zero(self.n_vars);
        for (exps, coeff) in &self.terms {
            let mut c = coeff.clone();
            let mut new_exps = exps.clone();
            for (var, value) in bindings {
                let e = new_exps[*var];
                if e > 0 {
                    c *= pow_rational(value, e);
                    new_exps[*var] = 0;
                }
                if c.is_zero() {
                    break;
                }
            }
            out.add_term(&new_exps, c);
        }
        out
    }

    /// Embed into a larger ring by appending fresh trailing variables.
    pub fn extend_vars(&self, new_n_vars: usize) -> SparsePoly {
        assert!(new_n_vars >= self.n_vars);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut exps = e.clone();
                exps.resize(new_n_vars, 0);
                (exps, c.clone())
            })
            .collect();
        SparsePoly {
            n_vars: new_n_vars,
            terms,
        }
    }

    /// Relabel variables: old index `i` becomes `mapping[i]` in a ring with
    /// `new_n_vars` variables.
    pub fn map_vars(&self, mapping: &[usize], new_n_vars: usize) -> SparsePoly {
        assert_eq!(mapping.len(), self.n_vars);
        let mut out = Self::zero(new_n_vars);
        for (exps, coeff) in &self.terms {
            let mut new_exps = vec![0u32; new_n_vars];
            for (i, &e) in exps.iter().enumerate() {
                new_exps[mapping[i]] += e;
            }
            out.add_term(&new_exps, coeff.clone());
        }
        out
    }

    /// Canonical printing: terms in graded lexicographic order (total degree
    /// descending, then exponent vector descending). Output re-parses to the
    /// same polynomial.
    pub fn to_text(&self, names: &[&str]) -> String {
        assert_eq!(names.len(), self.n_vars, "variable name count mismatch");
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut ordered: Vec<(&Vec<u32>, &Rational)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        let mut out = String::new();
        for (i, (exps, coeff)) in ordered.iter().enumerate() {
            let negative = coeff.is_negative();
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else if negative {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let abs = coeff.abs();
            let monomial = monomial_text(exps, names);
            if monomial.is_empty() {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&monomial);
            } else {
                out.push_str(&abs.to_string());
                out.push('*');
                out.push_str(&monomial);
            }
        }
        out
    }
}

fn monomial_text(exps: &[u32], names: &[&str]) -> String {
    let mut parts = Vec::new();
    for (i, &e) in exps.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(names[i].to_string()),
            _ => parts.push(format!("{}^{}", names[i], e)),
        }
    }
    parts.join("*")
}

pub(crate) fn pow_rational(x: &Rational, e: u32) -> Rational {
    let mut result = Rational::one();
    let mut base = x.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

impl Add for &SparsePoly {
    type Output = SparsePoly;
    fn add(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.n_vars, rhs.n_vars, "ring mismatch in +");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl Sub for &SparsePoly {
    type Output = SparsePoly;
    fn sub(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.n_vars, rhs.n_vars, "ring mismatch in -");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e, -c.clone());
        }
        out
    }
}

impl Neg for &SparsePoly {
    type Output = SparsePoly;
    fn neg(self) -> SparsePoly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), -c.clone()))
            .collect();
        SparsePoly {
            n_vars: self.n_vars,
            terms,
        }
    }
}

impl Mul for &SparsePoly {
    type Output = SparsePoly;
    fn mul(self, rhs: &SparsePoly) -> SparsePoly {
        assert_eq!(self.n_vars, rhs.n_vars, "ring mismatch in *");
        let mut out = SparsePoly::zero(self.n_vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exps: Vec<u32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                out.add_term(&exps, ca * cb);
            }
        }
        out
    }
}

/// Polynomial map `f = (f_1, ..., f_p): R^n -> R^p` with `n > p >= 1`.
///
/// `d` is always computed from the components (with a floor of 1), never
/// trusted from the caller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMap {
    n: usize,
    p: usize,
    components: Vec<SparsePoly>,
    d: u32,
}

impl PolyMap {
    pub fn new(n: usize, components: Vec<SparsePoly>) -> Result<Self> {
        let p = components.len();
        if !(n > p && p >= 1) {
            return Err(Error::InvalidDimensions(format!(
                "polynomial map requires n > p >= 1, got n={n}, p={p}"
            )));
        }
        for (i, c) in components.iter().enumerate() {
            if c.n_vars() != n {
                return Err(Error::DimensionMismatch(format!(
                    "component {} lives in {} variables, map declares {}",
                    i + 1,
                    c.n_vars(),
                    n
                )));
            }
        }
        let d = components
            .iter()
            .map(|c| c.total_degree())
            .max()
            .unwrap_or(0)
            .max(1);
        Ok(PolyMap {
            n,
            p,
            components,
            d,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Maximum component total degree (at least 1).
    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn components(&self) -> &[SparsePoly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &SparsePoly {
        &self.components[i]
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;

    fn tz_poly() -> SparsePoly {
        parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y"]).unwrap()
    }

    #[test]
    fn eval_tz_at_origin_and_ones() {
        let f = tz_poly();
        assert_eq!(f.eval(&[rat(0), rat(0)]).unwrap(), rat(0));
        assert_eq!(f.eval(&[rat(1), rat(1)]).unwrap(), rat(5));
    }

    #[test]
    fn eval_constructed_root() {
        let q = parse_poly("x^2+y", &["x", "y"]).unwrap();
        assert_eq!(q.eval(&[rat(2), rat(-4)]).unwrap(), rat(0));
    }

    #[test]
    fn eval_dimension_mismatch_rejected() {
        let q = parse_poly("x^2+y", &["x", "y"]).unwrap();
        assert!(q.eval(&[rat(1)]).is_err());
    }

    #[test]
    fn derivative_of_tz_in_y_factors() {
        let f = tz_poly();
        let fy = f.partial_derivative(1).unwrap();
        let expected = parse_poly("6*(x*y-1)*(x*y-2)", &["x", "y"]).unwrap();
        assert_eq!(fy, expected);
    }

    #[test]
    fn derivative_of_tz_in_x_factors() {
        let f = tz_poly();
        let fx = f.partial_derivative(0).unwrap();
        let expected = parse_poly("y^2*(4*x*y-9)", &["x", "y"]).unwrap();
        assert_eq!(fx, expected);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let c = SparsePoly::constant(2, rat(12));
        assert!(c.partial_derivative(0).unwrap().is_zero());
    }

    #[test]
    fn derivative_drops_total_degree() {
        let f = tz_poly();
        let fx = f.partial_derivative(0).unwrap();
        assert!(fx.total_degree() < f.total_degree());
    }

    #[test]
    fn substitution_binds_variables() {
        // milnor-style: bind the trailing variables of a 4-variable ring
        let q = parse_poly("x*a1 + y*a2^2", &["x", "y", "a1", "a2"]).unwrap();
        let bound = q.substitute(&[(2, rat(3)), (3, rat(-1))]);
        let expected = parse_poly("3*x + y", &["x", "y", "a1", "a2"]).unwrap();
        assert_eq!(bound, expected);
    }

    #[test]
    fn polymap_dimension_checks() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        assert!(PolyMap::new(2, vec![f.clone()]).is_ok());
        // n = p rejected
        let g = parse_poly("y", &["x", "y"]).unwrap();
        assert!(PolyMap::new(2, vec![f, g]).is_err());
    }

    #[test]
    fn polymap_degree_computed_not_declared() {
        let f = tz_poly();
        let map = PolyMap::new(2, vec![f]).unwrap();
        // 2*x^2*y^3 has total degree 5
        assert_eq!(map.degree(), 5);
    }
}
