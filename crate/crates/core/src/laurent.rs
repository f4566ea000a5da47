//! Finite-window Laurent polynomials in one parameter `t` with rational
//! coefficients: scalars, vector-valued arcs, composition with sparse
//! polynomials, order-at-infinity and truncation.
//!
//! The order convention is the TOP exponent: all limits in this crate are
//! taken as `t -> infinity`, so `ord(g) <= 0` means `g` stays bounded and
//! `ord(g) < 0` means `g -> 0`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poly::{pow_rational, PolyMap, Rational, SparsePoly};

/// Laurent polynomial in `t` over a finite exponent window.
///
/// Coefficients are stored for every exponent in `[lo, lo + coeffs.len())`;
/// stored entries may be zero (the order is computed, never assumed).
#[derive(Clone, Debug)]
pub struct LaurentScalar {
    lo: i64,
    coeffs: Vec<Rational>,
}

impl LaurentScalar {
    pub fn zero() -> Self {
        LaurentScalar {
            lo: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(value: Rational) -> Self {
        if value.is_zero() {
            Self::zero()
        } else {
            LaurentScalar {
                lo: 0,
                coeffs: vec![value],
            }
        }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// `coeff * t^exp`.
    pub fn monomial(coeff: Rational, exp: i64) -> Self {
        if coeff.is_zero() {
            Self::zero()
        } else {
            LaurentScalar {
                lo: exp,
                coeffs: vec![coeff],
            }
        }
    }

    pub fn from_coeffs(lo: i64, coeffs: Vec<Rational>) -> Self {
        LaurentScalar { lo, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Stored window, `None` when no coefficients are stored.
    pub fn window(&self) -> Option<(i64, i64)> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.coeffs.len() as i64 - 1))
        }
    }

    pub fn coeff_at(&self, exp: i64) -> Rational {
        if exp < self.lo {
            return Rational::zero();
        }
        let idx = (exp - self.lo) as usize;
        self.coeffs.get(idx).cloned().unwrap_or_else(Rational::zero)
    }

    /// Largest exponent with a nonzero coefficient; `None` is the
    /// order-at-infinity of the zero series (conventionally minus infinity).
    pub fn ord(&self) -> Option<i64> {
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if !c.is_zero() {
                return Some(self.lo + i as i64);
            }
        }
        None
    }

    /// Drop stored zero coefficients at both window edges.
    pub fn normalized(&self) -> Self {
        let first = self.coeffs.iter().position(|c| !c.is_zero());
        match first {
            None => Self::zero(),
            Some(start) => {
                let end = self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap();
                LaurentScalar {
                    lo: self.lo + start as i64,
                    coeffs: self.coeffs[start..=end].to_vec(),
                }
            }
        }
    }

    pub fn add(&self, rhs: &LaurentScalar) -> LaurentScalar {
        if self.coeffs.is_empty() {
            return rhs.clone();
        }
        if rhs.coeffs.is_empty() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = (self.lo + self.coeffs.len() as i64).max(rhs.lo + rhs.coeffs.len() as i64) - 1;
        let mut coeffs = vec![Rational::zero(); (hi - lo + 1) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[(self.lo + i as i64 - lo) as usize] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            coeffs[(rhs.lo + i as i64 - lo) as usize] += c;
        }
        LaurentScalar { lo, coeffs }
    }

    pub fn neg(&self) -> LaurentScalar {
        LaurentScalar {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn sub(&self, rhs: &LaurentScalar) -> LaurentScalar {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &LaurentScalar) -> LaurentScalar {
        let a = self.normalized();
        let b = rhs.normalized();
        if a.coeffs.is_empty() || b.coeffs.is_empty() {
            return Self::zero();
        }
        let lo = a.lo + b.lo;
        let mut coeffs = vec![Rational::zero(); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, ca) in a.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in b.coeffs.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                coeffs[i + j] += ca * cb;
            }
        }
        LaurentScalar { lo, coeffs }
    }

    pub fn scale(&self, c: &Rational) -> LaurentScalar {
        LaurentScalar {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> LaurentScalar {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Reparametrize `t -> c*t`: the coefficient of `t^i` picks up `c^i`.
    /// Requires `c != 0`.
    pub fn scale_parameter(&self, c: &Rational) -> LaurentScalar {
        assert!(!c.is_zero(), "parameter scale must be nonzero");
        let inv = c.recip();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let e = self.lo + i as i64;
                let factor = if e >= 0 {
                    pow_rational(c, e as u32)
                } else {
                    pow_rational(&inv, (-e) as u32)
                };
                v * factor
            })
            .collect();
        LaurentScalar {
            lo: self.lo,
            coeffs,
        }
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.lo + i as i64;
            acc += c.to_f64().unwrap_or(f64::NAN) * t.powi(e as i32);
        }
        acc
    }

    /// Keep only exponents `>= cutoff`; the stored window becomes
    /// `[cutoff, hi]`. Errors when the cutoff exceeds the stored top.
    pub fn truncate(&self, cutoff: i64) -> Result<LaurentScalar> {
        let hi = match self.window() {
            Some((_, hi)) => hi,
            None => return Ok(Self::zero()),
        };
        if cutoff > hi {
            return Err(Error::EmptyTruncation { cutoff, hi });
        }
        if cutoff <= self.lo {
            return Ok(self.clone());
        }
        let skip = (cutoff - self.lo) as usize;
        Ok(LaurentScalar {
            lo: cutoff,
            coeffs: self.coeffs[skip..].to_vec(),
        })
    }

    /// Render like `t^2 - 3*t^-1 + 1/2`; parses back with [`parse_laurent`].
    pub fn to_text(&self) -> String {
        let norm = self.normalized();
        if norm.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        let mut first = true;
        for (i, c) in norm.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let e = norm.lo + i as i64;
            let negative = c.is_negative();
            if first {
                if negative {
                    out.push('-');
                }
                first = false;
            } else if negative {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let abs = c.abs();
            let power = match e {
                0 => String::new(),
                1 => "t".to_string(),
                _ => format!("t^{e}"),
            };
            if power.is_empty() {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&power);
            } else {
                out.push_str(&abs.to_string());
                out.push('*');
                out.push_str(&power);
            }
        }
        out
    }
}

impl PartialEq for LaurentScalar {
    fn eq(&self, other: &Self) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.lo == b.lo && a.coeffs == b.coeffs
    }
}

impl Eq for LaurentScalar {}

/// Vector-valued Laurent polynomial: one coefficient vector in `Rational^dim`
/// per exponent of the window `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct LaurentArc {
    dim: usize,
    lo: i64,
    /// `coeffs[k][c]` is the coefficient of `t^(lo + k)` in component `c`.
    coeffs: Vec<Vec<Rational>>,
}

impl LaurentArc {
    pub fn zero(dim: usize) -> Self {
        LaurentArc {
            dim,
            lo: 0,
            coeffs: Vec::new(),
        }
    }

    pub fn from_components(components: &[LaurentScalar]) -> Self {
        let dim = components.len();
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for c in components {
            if let Some((clo, chi)) = c.window() {
                lo = lo.min(clo);
                hi = hi.max(chi);
            }
        }
        if lo > hi {
            return Self::zero(dim);
        }
        let coeffs = (lo..=hi)
            .map(|e| components.iter().map(|c| c.coeff_at(e)).collect())
            .collect();
        LaurentArc { dim, lo, coeffs }
    }

    pub fn from_coeffs(dim: usize, lo: i64, coeffs: Vec<Vec<Rational>>) -> Result<Self> {
        for v in &coeffs {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "arc coefficient vector of length {} in dimension {}",
                    v.len(),
                    dim
                )));
            }
        }
        Ok(LaurentArc { dim, lo, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> Option<(i64, i64)> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.coeffs.len() as i64 - 1))
        }
    }

    pub fn component(&self, c: usize) -> LaurentScalar {
        assert!(c < self.dim);
        LaurentScalar::from_coeffs(
            self.lo,
            self.coeffs.iter().map(|v| v[c].clone()).collect(),
        )
        .normalized()
    }

    pub fn components(&self) -> Vec<LaurentScalar> {
        (0..self.dim).map(|c| self.component(c)).collect()
    }

    pub fn coeff_vector(&self, exp: i64) -> Vec<Rational> {
        if exp < self.lo {
            return vec![Rational::zero(); self.dim];
        }
        let idx = (exp - self.lo) as usize;
        self.coeffs
            .get(idx)
            .cloned()
            .unwrap_or_else(|| vec![Rational::zero(); self.dim])
    }

    /// Stack two arcs into one of dimension `dim_a + dim_b`.
    pub fn concat(&self, other: &LaurentArc) -> LaurentArc {
        let mut comps = self.components();
        comps.extend(other.components());
        LaurentArc::from_components(&comps)
    }

    /// Keep only exponents `>= cutoff` in every component.
    pub fn truncate(&self, cutoff: i64) -> Result<LaurentArc> {
        let hi = match self.window() {
            Some((_, hi)) => hi,
            None => return Ok(self.clone()),
        };
        if cutoff > hi {
            return Err(Error::EmptyTruncation { cutoff, hi });
        }
        if cutoff <= self.lo {
            return Ok(self.clone());
        }
        let skip = (cutoff - self.lo) as usize;
        Ok(LaurentArc {
            dim: self.dim,
            lo: cutoff,
            coeffs: self.coeffs[skip..].to_vec(),
        })
    }

    pub fn eval_f64(&self, t: f64) -> Vec<f64> {
        self.components().iter().map(|c| c.eval_f64(t)).collect()
    }

    pub fn scale_parameter(&self, c: &Rational) -> LaurentArc {
        let comps: Vec<LaurentScalar> = self
            .components()
            .iter()
            .map(|s| s.scale_parameter(c))
            .collect();
        LaurentArc::from_components(&comps)
    }

    pub fn to_text(&self) -> String {
        self.components()
            .iter()
            .map(|c| c.to_text())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl PartialEq for LaurentArc {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.components() == other.components()
    }
}

impl Eq for LaurentArc {}

/// Exact Laurent expansion of `poly(components)`.
pub fn compose_scalar(poly: &SparsePoly, components: &[LaurentScalar]) -> Result<LaurentScalar> {
    if components.len() != poly.n_vars() {
        return Err(Error::DimensionMismatch(format!(
            "composing a polynomial in {} variables with an arc of dimension {}",
            poly.n_vars(),
            components.len()
        )));
    }
    // cache powers of each component up to its maximal exponent in poly
    let mut max_exp = vec![0u32; components.len()];
    for (exps, _) in poly.terms() {
        for (i, &e) in exps.iter().enumerate() {
            max_exp[i] = max_exp[i].max(e);
        }
    }
    let mut powers: Vec<Vec<LaurentScalar>> = Vec::with_capacity(components.len());
    for (comp, &m) in components.iter().zip(max_exp.iter()) {
        let mut row = Vec::with_capacity(m as usize + 1);
        row.push(LaurentScalar::one());
        for e in 1..=m {
            let next = row[(e - 1) as usize].mul(comp);
            row.push(next);
        }
        powers.push(row);
    }
    let mut acc = LaurentScalar::zero();
    for (exps, coeff) in poly.terms() {
        let mut term = LaurentScalar::constant(coeff.clone());
        for (i, &e) in exps.iter().enumerate() {
            if e > 0 {
                term = term.mul(&powers[i][e as usize]);
            }
        }
        acc = acc.add(&term);
    }
    Ok(acc.normalized())
}

/// Component-wise composition of a map with an arc of dimension `n`.
pub fn compose_map(map: &PolyMap, arc: &LaurentArc) -> Result<Vec<LaurentScalar>> {
    if arc.dim() != map.n() {
        return Err(Error::DimensionMismatch(format!(
            "map source dimension {} but arc dimension {}",
            map.n(),
            arc.dim()
        )));
    }
    let comps = arc.components();
    map.components()
        .iter()
        .map(|f| compose_scalar(f, &comps))
        .collect()
}

// ---------------------------------------------------------------------------
// Laurent expression parsing: the parametric-path mini-grammar. Components
// are expressions in the single parameter `t` where exponents may be negative
// (written `t^-2`) and division is allowed by pure `t`-monomials: `-1/t`,
// `3/(2*t^2)`.
// ---------------------------------------------------------------------------

struct LaurentParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> LaurentParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<LaurentScalar> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<LaurentScalar> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let pos = self.pos;
                    let divisor = self.factor()?.normalized();
                    let (lo, hi) = divisor.window().ok_or_else(|| {
                        Error::parse(pos, "division by zero in path expression")
                    })?;
                    if lo != hi {
                        return Err(Error::parse(
                            pos,
                            "division is only allowed by a single t-monomial",
                        ));
                    }
                    let inv = LaurentScalar::monomial(divisor.coeff_at(lo).recip(), -lo);
                    acc = acc.mul(&inv);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<LaurentScalar> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.factor()?.neg());
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.signed_integer()?;
            let base = base.normalized();
            let (lo, hi) = match base.window() {
                Some(w) => w,
                None => return Ok(LaurentScalar::zero()),
            };
            if lo == hi {
                // monomial: exponent may be negative
                let c = base.coeff_at(lo);
                let coeff = if exp >= 0 {
                    pow_rational(&c, exp as u32)
                } else {
                    pow_rational(&c.recip(), (-exp) as u32)
                };
                return Ok(LaurentScalar::monomial(coeff, lo * exp));
            }
            if exp < 0 {
                return Err(Error::parse(
                    self.pos,
                    "negative exponent on a non-monomial path expression",
                ));
            }
            return Ok(base.pow(exp as u32));
        }
        Ok(base)
    }

    fn signed_integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let mut negative = false;
        if self.src.get(self.pos) == Some(&b'-') {
            negative = true;
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, "expected an integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: i64 = text
            .parse()
            .map_err(|_| Error::parse(start, "exponent too large"))?;
        Ok(if negative { -value } else { value })
    }

    fn atom(&mut self) -> Result<LaurentScalar> {
        self.skip_ws();
        let pos = self.pos;
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::parse(self.pos, "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b't') => {
                // reject identifiers like "tau"
                if self
                    .src
                    .get(self.pos + 1)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    return Err(Error::parse(pos, "the only path variable is 't'"));
                }
                self.pos += 1;
                Ok(LaurentScalar::monomial(Rational::one(), 1))
            }
            Some(c) if c.is_ascii_digit() => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[pos..self.pos]).unwrap();
                let n: BigInt = text.parse().unwrap();
                Ok(LaurentScalar::constant(Rational::from_integer(n)))
            }
            _ => Err(Error::parse(pos, "expected a number, 't' or '('")),
        }
    }
}

/// Parse a single Laurent expression in `t`, e.g. `-1/t` or `t^2 + 3`.
pub fn parse_laurent(text: &str) -> Result<LaurentScalar> {
    let mut parser = LaurentParser {
        src: text.as_bytes(),
        pos: 0,
    };
    let result = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(Error::parse(parser.pos, "unexpected trailing input"));
    }
    Ok(result.normalized())
}

/// Parse a comma-separated list of Laurent expressions into an arc, e.g.
/// `"t, -1/t"`.
pub fn parse_arc(text: &str) -> Result<LaurentArc> {
    let mut comps = Vec::new();
    for part in text.split(',') {
        comps.push(parse_laurent(part)?);
    }
    if comps.is_empty() {
        return Err(Error::parse(0, "empty arc"));
    }
    Ok(LaurentArc::from_components(&comps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;
    use crate::poly::{rat, ratio};

    #[test]
    fn compose_xy_with_hyperbola_is_constant() {
        let f = parse_poly("x*y", &["x", "y"]).unwrap();
        let arc = parse_arc("t, 1/t").unwrap();
        let g = compose_scalar(&f, &arc.components()).unwrap();
        assert_eq!(g, LaurentScalar::one());
    }

    #[test]
    fn compose_broughton_with_witness_arc() {
        let f = parse_poly("y*(x^2*y^2+3*x*y+3)", &["x", "y"]).unwrap();
        let arc = parse_arc("t, -1/t").unwrap();
        let g = compose_scalar(&f, &arc.components()).unwrap();
        assert_eq!(g, LaurentScalar::monomial(rat(-1), -1));
    }

    #[test]
    fn compose_tz_with_axis_arc_is_zero() {
        let f = parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y"]).unwrap();
        let arc = parse_arc("t, 0").unwrap();
        let g = compose_scalar(&f, &arc.components()).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn ord_reads_top_exponent() {
        let g = parse_laurent("3*t^2 + t^-1").unwrap();
        assert_eq!(g.ord(), Some(2));
        assert_eq!(LaurentScalar::zero().ord(), None);
        assert_eq!(parse_laurent("-1/t").unwrap().ord(), Some(-1));
    }

    #[test]
    fn truncate_filters_low_exponents() {
        let arc = LaurentArc::from_components(&[parse_laurent("t + t^-1 + t^-5").unwrap()]);
        let truncated = arc.truncate(-1).unwrap();
        let expected = LaurentArc::from_components(&[parse_laurent("t + t^-1").unwrap()]);
        assert_eq!(truncated, expected);
        assert_eq!(truncated.window(), Some((-1, 1)));
    }

    #[test]
    fn truncate_below_window_is_identity() {
        let arc = LaurentArc::from_components(&[parse_laurent("t + t^-1").unwrap()]);
        assert_eq!(arc.truncate(-5).unwrap(), arc);
    }

    #[test]
    fn truncate_above_window_errors() {
        let arc = LaurentArc::from_components(&[parse_laurent("t").unwrap()]);
        assert!(matches!(
            arc.truncate(2),
            Err(Error::EmptyTruncation { .. })
        ));
    }

    #[test]
    fn truncation_preserves_nonnegative_coefficients_worked_case() {
        // h(x) = x^2, x(t) = t + 2 t^-1 + 7 t^-3, cutoff -1
        let h = parse_poly("x^2", &["x"]).unwrap();
        let arc = LaurentArc::from_components(&[parse_laurent("t + 2*t^-1 + 7*t^-3").unwrap()]);
        let full = compose_scalar(&h, &arc.components()).unwrap();
        let truncated_arc = arc.truncate(-1).unwrap();
        let trunc = compose_scalar(&h, &truncated_arc.components()).unwrap();
        assert_eq!(full.coeff_at(0), rat(4));
        assert_eq!(trunc.coeff_at(0), rat(4));
        for k in 0..=4 {
            assert_eq!(full.coeff_at(k), trunc.coeff_at(k), "coefficient of t^{k}");
        }
    }

    #[test]
    fn composition_window_is_contained_in_degree_times_window() {
        let f = parse_poly("x^2*y + y^2", &["x", "y"]).unwrap(); // degree 3
        let arc = parse_arc("t^2 + t^-1, t - t^-3").unwrap();
        let g = compose_scalar(&f, &arc.components()).unwrap();
        if let Some((lo, hi)) = g.window() {
            assert!(lo >= 3 * -3 && hi <= 3 * 2);
        }
    }

    #[test]
    fn laurent_parse_and_print_round_trip() {
        for text in ["t", "-1/t", "3*t^2 + t^-1 - 1/2*t^-4", "0", "2", "t^3 - t"] {
            let g = parse_laurent(text).unwrap();
            let round = parse_laurent(&g.to_text()).unwrap();
            assert_eq!(g, round, "round trip of {text}");
        }
    }

    #[test]
    fn laurent_parse_rational_division() {
        let g = parse_laurent("3/(2*t^2)").unwrap();
        assert_eq!(g, LaurentScalar::monomial(ratio(3, 2), -2));
    }

    #[test]
    fn scale_parameter_multiplies_coefficients() {
        let g = parse_laurent("t + 4*t^-2").unwrap();
        let scaled = g.scale_parameter(&rat(2));
        assert_eq!(scaled.coeff_at(1), rat(2));
        assert_eq!(scaled.coeff_at(-2), rat(1));
    }

    #[test]
    fn eval_f64_matches_hand_value() {
        let g = parse_laurent("t - 1/t").unwrap();
        let v = g.eval_f64(2.0);
        assert!((v - 1.5).abs() < 1e-12);
    }
}
