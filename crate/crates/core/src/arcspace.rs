//! Arc-space estimation of asymptotic critical values.
//!
//! Rational arcs `(x(t), y(t))` with coefficient windows sized by the degree
//! bound `s` are constrained by three condition families:
//!
//! * (a') some `a_k != 0` with `k > 0`, and `|b_0| = 1`;
//! * (b') `ord f(x(t)) <= 0` in every component;
//! * (c') `ord (x_i(t) * phi_j(x(t), y(t))) < 0` for all `i, j`,
//!
//! where `phi_j(x, y) = sum_c y_c * d f_c / d x_j`. The limit value
//! `alpha_0 = lim f(x(t))` of any arc passing all three is an asymptotic
//! critical value. This module generates the polynomial condition systems in
//! the unknown coefficients, verifies candidate arcs exactly, extracts
//! `alpha_0`, and searches for arcs numerically with exact re-verification.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::laurent::{compose_map, compose_scalar, LaurentArc, LaurentScalar};
use crate::poly::{rat, PolyMap, Rational, SparsePoly};

/// The parametrization-degree bound
/// `s = [p(d-1)+1]^(n-p) * [p(d-1)(n-p)+2]^(p-1)`; equals `d^(n-1)` for
/// `p = 1`.
pub fn degree_bound(n: u32, p: u32, d: u32) -> Result<u64> {
    if !(n > p && p >= 1 && d >= 1) {
        return Err(Error::InvalidDimensions(format!(
            "degree bound needs n > p >= 1 and d >= 1, got n={n}, p={p}, d={d}"
        )));
    }
    let base1 = (p as u64) * (d as u64 - 1) + 1;
    let base2 = (p as u64) * (d as u64 - 1) * (n as u64 - p as u64) + 2;
    let f1 = base1
        .checked_pow(n - p)
        .ok_or_else(|| Error::Numeric("degree bound overflow".to_string()))?;
    let f2 = base2
        .checked_pow(p - 1)
        .ok_or_else(|| Error::Numeric("degree bound overflow".to_string()))?;
    f1.checked_mul(f2)
        .ok_or_else(|| Error::Numeric("degree bound overflow".to_string()))
}

/// The `n` polynomials `phi_j`.
///
/// For `p = 1` the covector is the constant 1 and `phi_j = d f / d x_j`
/// lives in the `n` source variables (degree `<= d - 1`). For `p > 1` the
/// result lives in `n + p` variables ordered `x_1..x_n, y_1..y_p` (degree
/// `<= d`).
pub fn phi(f: &PolyMap) -> Vec<SparsePoly> {
    let n = f.n();
    let p = f.p();
    if p == 1 {
        return (0..n)
            .map(|j| f.component(0).partial_derivative(j).expect("valid index"))
            .collect();
    }
    let ring = n + p;
    (0..n)
        .map(|j| {
            let mut acc = SparsePoly::zero(ring);
            for (c, comp) in f.components().iter().enumerate() {
                let dfc = comp
                    .partial_derivative(j)
                    .expect("valid index")
                    .extend_vars(ring);
                let y = SparsePoly::var(ring, n + c);
                acc = &acc + &(&y * &dfc);
            }
            acc
        })
        .collect()
}

/// Arc coefficient windows and the lead-index normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcTemplate {
    pub n: usize,
    pub p: usize,
    pub d: u32,
    pub s: i64,
    /// x-coefficient window `[x_lo, s]`: `x_lo = -ds + s` for `p = 1`
    /// (tighter truncation), `-ds` for `p > 1`.
    pub x_lo: i64,
    /// y-coefficient window `[-ds, 0]`; unused for `p = 1` where the y-part
    /// is hardwired to the constant 1.
    pub y_lo: i64,
    /// Lead exponent `k` in `{1, .., s}`: the condition system normalizes
    /// `|a_k| = 1` and pins `a_i = 0` for `i > k`.
    pub lead_index: i64,
}

impl ArcTemplate {
    pub fn has_y(&self) -> bool {
        self.p > 1
    }

    pub fn x_width(&self) -> usize {
        (self.s - self.x_lo + 1) as usize
    }

    pub fn y_width(&self) -> usize {
        if self.has_y() {
            (-self.y_lo + 1) as usize
        } else {
            0
        }
    }

    /// Total unknown coefficient slots: `n` per x-exponent plus (for
    /// `p > 1`) `p` per y-exponent.
    pub fn unknown_count(&self) -> usize {
        self.n * self.x_width() + self.p * self.y_width()
    }

    pub fn with_lead_index(&self, k: i64) -> Result<ArcTemplate> {
        if !(1 <= k && k <= self.s) {
            return Err(Error::IndexOutOfRange(format!(
                "lead index {} outside 1..={}",
                k, self.s
            )));
        }
        let mut t = self.clone();
        t.lead_index = k;
        Ok(t)
    }

    /// Ring index of the x-coefficient unknown `a_{i,c}`.
    pub fn a_var(&self, i: i64, c: usize) -> usize {
        debug_assert!(self.x_lo <= i && i <= self.s && c < self.n);
        (i - self.x_lo) as usize * self.n + c
    }

    /// Ring index of the y-coefficient unknown `b_{j,c}` (`p > 1` only).
    pub fn b_var(&self, j: i64, c: usize) -> usize {
        debug_assert!(self.has_y() && self.y_lo <= j && j <= 0 && c < self.p);
        self.n * self.x_width() + (j - self.y_lo) as usize * self.p + c
    }

    /// Unknown names `a_<i>_<c>` / `b_<j>_<c>`; a negative index is written
    /// with an `m` prefix (`a_m20_1`) to keep names sign-free.
    pub fn unknown_names(&self) -> Vec<String> {
        let fmt = |prefix: &str, i: i64, c: usize| {
            if i < 0 {
                format!("{prefix}_m{}_{}", -i, c + 1)
            } else {
                format!("{prefix}_{}_{}", i, c + 1)
            }
        };
        let mut names = Vec::with_capacity(self.unknown_count());
        for i in self.x_lo..=self.s {
            for c in 0..self.n {
                names.push(fmt("a", i, c));
            }
        }
        if self.has_y() {
            for j in self.y_lo..=0 {
                for c in 0..self.p {
                    names.push(fmt("b", j, c));
                }
            }
        }
        names
    }
}

/// Windows and unknown slots for `f`, with the lead index defaulting to `s`.
pub fn build_template(f: &PolyMap) -> Result<ArcTemplate> {
    let s_u = degree_bound(f.n() as u32, f.p() as u32, f.degree())?;
    let s = i64::try_from(s_u)
        .map_err(|_| Error::Numeric("degree bound exceeds template range".to_string()))?;
    let ds = (f.degree() as i64)
        .checked_mul(s)
        .ok_or_else(|| Error::Numeric("window overflow".to_string()))?;
    let x_lo = if f.p() == 1 { -ds + s } else { -ds };
    Ok(ArcTemplate {
        n: f.n(),
        p: f.p(),
        d: f.degree(),
        s,
        x_lo,
        y_lo: -ds,
        lead_index: s,
    })
}

// ---------------------------------------------------------------------------
// Truncated series with polynomial coefficients
// ---------------------------------------------------------------------------

/// Laurent series in `t` whose coefficients are polynomials in the unknown
/// arc coefficients; slices below `floor` are dropped during arithmetic.
/// `top` is the largest exponent the window can ever produce, used to keep
/// intermediate truncation sound.
#[derive(Clone, Debug)]
struct PolySeries {
    slices: BTreeMap<i64, SparsePoly>,
    top: i64,
}

impl PolySeries {
    fn constant(poly: SparsePoly) -> Self {
        let mut slices = BTreeMap::new();
        if !poly.is_zero() {
            slices.insert(0, poly);
        }
        PolySeries { slices, top: 0 }
    }

    fn add(&self, rhs: &PolySeries) -> PolySeries {
        let mut slices = self.slices.clone();
        for (e, p) in &rhs.slices {
            let entry = slices
                .entry(*e)
                .or_insert_with(|| SparsePoly::zero(p.n_vars()));
            *entry = &*entry + p;
            if entry.is_zero() {
                slices.remove(e);
            }
        }
        PolySeries {
            slices,
            top: self.top.max(rhs.top),
        }
    }

    /// Product, discarding slices below `floor`.
    fn mul(&self, rhs: &PolySeries, floor: i64) -> PolySeries {
        let mut slices: BTreeMap<i64, SparsePoly> = BTreeMap::new();
        for (e1, p1) in &self.slices {
            for (e2, p2) in &rhs.slices {
                let e = e1 + e2;
                if e < floor {
                    continue;
                }
                let prod = p1 * p2;
                if prod.is_zero() {
                    continue;
                }
                let entry = slices
                    .entry(e)
                    .or_insert_with(|| SparsePoly::zero(prod.n_vars()));
                *entry = &*entry + &prod;
                if entry.is_zero() {
                    slices.remove(&e);
                }
            }
        }
        PolySeries {
            slices,
            top: self.top + rhs.top,
        }
    }

    fn coefficient(&self, e: i64, n_vars: usize) -> SparsePoly {
        self.slices
            .get(&e)
            .cloned()
            .unwrap_or_else(|| SparsePoly::zero(n_vars))
    }
}

/// Compose a polynomial with per-variable series, keeping only slices with
/// exponent `>= final_floor`. Intermediate products use the loosest floor
/// that still cannot lose a contribution to the kept slices.
fn compose_series(
    poly: &SparsePoly,
    series: &[PolySeries],
    final_floor: i64,
    n_unknowns: usize,
) -> PolySeries {
    let mut acc = PolySeries {
        slices: BTreeMap::new(),
        top: 0,
    };
    for (exps, coeff) in poly.terms() {
        // flatten the monomial into a factor list
        let mut factors: Vec<&PolySeries> = Vec::new();
        for (v, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                factors.push(&series[v]);
            }
        }
        let mut term = PolySeries::constant(SparsePoly::constant(n_unknowns, coeff.clone()));
        let mut remaining_top: i64 = factors.iter().map(|f| f.top).sum();
        for factor in factors {
            remaining_top -= factor.top;
            term = term.mul(factor, final_floor - remaining_top);
        }
        acc = acc.add(&term);
    }
    acc
}

// ---------------------------------------------------------------------------
// Condition systems
// ---------------------------------------------------------------------------

/// Origin of a condition equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum ConditionTag {
    /// Coefficient of `t^m`, `m >= 1`, of a component of `f(x(t))`.
    PosF,
    /// Coefficient of `t^m`, `m >= 0`, of some `x_i(t) phi_j(x(t), y(t))`.
    NonnegPhi,
    /// `|b_0|^2 = 1` (`p > 1` only).
    NormB0,
    /// `|a_k|^2 = 1` for the template lead index.
    LeadNorm,
    /// `a_{i,c} = 0` for `i > k`.
    LeadZero,
}

/// Polynomial equations over the unknown arc coefficients.
#[derive(Clone, Debug)]
pub struct ConditionSystem {
    pub unknown_count: usize,
    pub equations: Vec<(ConditionTag, SparsePoly)>,
    pub lead_index: i64,
}

impl ConditionSystem {
    pub fn count(&self, tag: ConditionTag) -> usize {
        self.equations.iter().filter(|(t, _)| *t == tag).count()
    }
}

/// Expand `f(x(t))` and every `x_i(t) phi_j` with unknown coefficients and
/// equate each forbidden power of `t` to zero; the lead normalization of the
/// template is encoded as `|a_k|^2 = 1` plus pins `a_i = 0` for `i > k`.
pub fn generate_conditions(f: &PolyMap, tpl: &ArcTemplate) -> ConditionSystem {
    let n = f.n();
    let p = f.p();
    let n_unknowns = tpl.unknown_count();
    let max_exp = (f.degree() as i64) * tpl.s;

    // component series of x(t) over the full template window
    let x_series: Vec<PolySeries> = (0..n)
        .map(|c| {
            let mut slices = BTreeMap::new();
            for i in tpl.x_lo..=tpl.s {
                slices.insert(i, SparsePoly::var(n_unknowns, tpl.a_var(i, c)));
            }
            PolySeries {
                slices,
                top: tpl.s,
            }
        })
        .collect();
    let y_series: Vec<PolySeries> = if tpl.has_y() {
        (0..p)
            .map(|c| {
                let mut slices = BTreeMap::new();
                for j in tpl.y_lo..=0 {
                    slices.insert(j, SparsePoly::var(n_unknowns, tpl.b_var(j, c)));
                }
                PolySeries { slices, top: 0 }
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut equations: Vec<(ConditionTag, SparsePoly)> = Vec::new();

    // (b'): annihilate the coefficients of positive powers of f(x(t))
    for comp in f.components() {
        let expansion = compose_series(comp, &x_series, 1, n_unknowns);
        for m in 1..=max_exp {
            equations.push((ConditionTag::PosF, expansion.coefficient(m, n_unknowns)));
        }
    }

    // (c'): annihilate the coefficients of non-negative powers of
    // x_i(t) * phi_j(x(t), y(t))
    let phis = phi(f);
    let combined: Vec<PolySeries> = if tpl.has_y() {
        x_series.iter().chain(y_series.iter()).cloned().collect()
    } else {
        x_series.clone()
    };
    for phi_j in &phis {
        let phi_floor = -tpl.s; // product with x_i (top s) must reach floor 0
        let phi_comp = compose_series(phi_j, &combined, phi_floor, n_unknowns);
        for xi in &x_series {
            let product = xi.mul(&phi_comp, 0);
            for m in 0..=max_exp {
                equations.push((ConditionTag::NonnegPhi, product.coefficient(m, n_unknowns)));
            }
        }
    }

    // (a'): lead normalization and pins
    let k = tpl.lead_index;
    let mut lead_norm = SparsePoly::constant(n_unknowns, rat(-1));
    for c in 0..n {
        let v = SparsePoly::var(n_unknowns, tpl.a_var(k, c));
        lead_norm = &lead_norm + &(&v * &v);
    }
    equations.push((ConditionTag::LeadNorm, lead_norm));
    for i in k + 1..=tpl.s {
        for c in 0..n {
            equations.push((
                ConditionTag::LeadZero,
                SparsePoly::var(n_unknowns, tpl.a_var(i, c)),
            ));
        }
    }

    // |b_0| = 1, kept polynomial as |b_0|^2 = 1
    if tpl.has_y() {
        let mut b0_norm = SparsePoly::constant(n_unknowns, rat(-1));
        for c in 0..p {
            let v = SparsePoly::var(n_unknowns, tpl.b_var(0, c));
            b0_norm = &b0_norm + &(&v * &v);
        }
        equations.push((ConditionTag::NormB0, b0_norm));
    }

    ConditionSystem {
        unknown_count: n_unknowns,
        equations,
        lead_index: k,
    }
}

/// Plain-text export: header lines, then one `TAG<TAB>polynomial` per line.
pub fn conditions_to_text(f: &PolyMap, tpl: &ArcTemplate, sys: &ConditionSystem) -> String {
    let names = tpl.unknown_names();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut out = String::new();
    out.push_str(&format!(
        "# n={} p={} d={} s={} k={}\n",
        tpl.n, tpl.p, tpl.d, tpl.s, tpl.lead_index
    ));
    let y_window = if tpl.has_y() {
        format!("[{},0]", tpl.y_lo)
    } else {
        "none".to_string()
    };
    out.push_str(&format!(
        "# x_window=[{},{}] y_window={}\n",
        tpl.x_lo, tpl.s, y_window
    ));
    out.push_str(&format!(
        "# unknowns={} equations={}\n",
        sys.unknown_count,
        sys.equations.len()
    ));
    out.push_str("# variables: a_<i>_<c> / b_<j>_<c>; an 'm' prefix marks a negative index\n");
    let _ = f;
    for (tag, eq) in &sys.equations {
        let tag_text = match tag {
            ConditionTag::PosF => "POS_F",
            ConditionTag::NonnegPhi => "NONNEG_PHI",
            ConditionTag::NormB0 => "NORM_B0",
            ConditionTag::LeadNorm => "LEAD_NORM",
            ConditionTag::LeadZero => "LEAD_ZERO",
        };
        out.push_str(&format!("{tag_text}\t{}\n", eq.to_text(&name_refs)));
    }
    out
}

// ---------------------------------------------------------------------------
// Witness verification
// ---------------------------------------------------------------------------

/// Per-condition verification record.
#[derive(Clone, Debug, serde::Serialize)]
pub struct WitnessChecks {
    /// Largest positive exponent with a nonzero x-coefficient vector.
    pub lead_exponent: Option<i64>,
    pub lead_ok: bool,
    pub b0_norm_ok: bool,
    /// `ord f_k(x(t))` per component (`None` = identically zero).
    pub ord_f: Vec<Option<i64>>,
    pub bounded_ok: bool,
    /// `((i, j), ord x_i phi_j)` for every pair.
    pub ord_products: Vec<((usize, usize), Option<i64>)>,
    pub decay_ok: bool,
    pub pass: bool,
}

/// A candidate or verified arc; `y_arc` is `None` for `p = 1` (the constant
/// covector 1).
#[derive(Clone, Debug)]
pub struct ArcWitness {
    pub x_arc: LaurentArc,
    pub y_arc: Option<LaurentArc>,
    pub checks: Option<WitnessChecks>,
    pub alpha0: Option<Vec<Rational>>,
}

impl ArcWitness {
    pub fn new(x_arc: LaurentArc, y_arc: Option<LaurentArc>) -> Self {
        ArcWitness {
            x_arc,
            y_arc,
            checks: None,
            alpha0: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.as_ref().is_some_and(|c| c.pass)
    }
}

fn constant_one_arc(p: usize) -> LaurentArc {
    LaurentArc::from_components(&vec![LaurentScalar::one(); p])
}

/// Exact verification of conditions (a')-(c') with structured per-condition
/// results; on a full pass `alpha0` is the constant coefficient vector of
/// `f(x(t))`.
pub fn verify_witness(f: &PolyMap, candidate: &ArcWitness) -> Result<ArcWitness> {
    let n = f.n();
    let p = f.p();
    if candidate.x_arc.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "x-arc dimension {} but map source dimension {}",
            candidate.x_arc.dim(),
            n
        )));
    }
    let tpl = build_template(f)?;
    if let Some((lo, hi)) = candidate.x_arc.window() {
        let (lo_eff, hi_eff) = effective_window(&candidate.x_arc, lo, hi);
        if lo_eff < tpl.x_lo || hi_eff > tpl.s {
            return Err(Error::InvalidDimensions(format!(
                "x-arc window [{lo_eff},{hi_eff}] outside template [{},{}]",
                tpl.x_lo, tpl.s
            )));
        }
    }
    let y_arc = match (&candidate.y_arc, p) {
        (None, _) if p == 1 => constant_one_arc(1),
        (Some(y), 1) => {
            if *y != constant_one_arc(1) {
                return Err(Error::InvalidDimensions(
                    "for p = 1 the y-part must be the constant 1".to_string(),
                ));
            }
            y.clone()
        }
        (Some(y), _) => {
            if y.dim() != p {
                return Err(Error::DimensionMismatch(format!(
                    "y-arc dimension {} but map target dimension {}",
                    y.dim(),
                    p
                )));
            }
            if let Some((lo, hi)) = y.window() {
                let (lo_eff, hi_eff) = effective_window(y, lo, hi);
                if lo_eff < tpl.y_lo || hi_eff > 0 {
                    return Err(Error::InvalidDimensions(format!(
                        "y-arc window [{lo_eff},{hi_eff}] outside template [{},0]",
                        tpl.y_lo
                    )));
                }
            }
            y.clone()
        }
        (None, _) => {
            return Err(Error::InvalidDimensions(
                "a map with p > 1 needs an explicit y-part".to_string(),
            ))
        }
    };

    // (a'): exists k > 0 with a_k != 0, and |b_0| = 1
    let lead_exponent = (1..=tpl.s)
        .rev()
        .find(|&i| candidate.x_arc.coeff_vector(i).iter().any(|c| !c.is_zero()));
    let lead_ok = lead_exponent.is_some();
    let b0 = y_arc.coeff_vector(0);
    let b0_norm: Rational = b0.iter().map(|c| c * c).fold(Rational::zero(), |a, v| a + v);
    let b0_norm_ok = b0_norm == Rational::one();

    // (b'): ord f(x(t)) <= 0 per component
    let expansions = compose_map(f, &candidate.x_arc)?;
    let ord_f: Vec<Option<i64>> = expansions.iter().map(|g| g.ord()).collect();
    let bounded_ok = ord_f.iter().all(|o| o.map_or(true, |v| v <= 0));

    // (c'): ord x_i phi_j < 0 for all i, j
    let phis = phi(f);
    let x_components = candidate.x_arc.components();
    let combined = if p == 1 {
        candidate.x_arc.clone()
    } else {
        candidate.x_arc.concat(&y_arc)
    };
    let combined_components = combined.components();
    let mut ord_products = Vec::with_capacity(n * n);
    let mut decay_ok = true;
    for (j, phi_j) in phis.iter().enumerate() {
        let phi_val = compose_scalar(phi_j, &combined_components[..phi_j.n_vars()])?;
        for (i, xi) in x_components.iter().enumerate() {
            let ord = xi.mul(&phi_val).ord();
            if ord.is_some_and(|v| v >= 0) {
                decay_ok = false;
            }
            ord_products.push(((i, j), ord));
        }
    }

    let pass = lead_ok && b0_norm_ok && bounded_ok && decay_ok;
    let alpha0 = if pass {
        Some(expansions.iter().map(|g| g.coeff_at(0)).collect())
    } else {
        None
    };
    Ok(ArcWitness {
        x_arc: candidate.x_arc.clone(),
        y_arc: if p == 1 { None } else { Some(y_arc) },
        checks: Some(WitnessChecks {
            lead_exponent,
            lead_ok,
            b0_norm_ok,
            ord_f,
            bounded_ok,
            ord_products,
            decay_ok,
            pass,
        }),
        alpha0,
    })
}

fn effective_window(arc: &LaurentArc, lo: i64, hi: i64) -> (i64, i64) {
    // ignore stored zero padding
    let mut lo_eff = hi;
    let mut hi_eff = lo;
    for e in lo..=hi {
        if arc.coeff_vector(e).iter().any(|c| !c.is_zero()) {
            lo_eff = lo_eff.min(e);
            hi_eff = hi_eff.max(e);
        }
    }
    if lo_eff > hi_eff {
        (0, 0)
    } else {
        (lo_eff, hi_eff)
    }
}

/// The exact limit vector `lim f(x(t))` of a witness that passed (b').
pub fn alpha0(f: &PolyMap, witness: &ArcWitness) -> Result<Vec<Rational>> {
    let verified = if witness.checks.is_some() {
        witness.clone()
    } else {
        verify_witness(f, witness)?
    };
    let checks = verified.checks.as_ref().unwrap();
    if !checks.bounded_ok {
        return Err(Error::Degenerate(
            "alpha0 called on a witness that fails the boundedness condition".to_string(),
        ));
    }
    let expansions = compose_map(f, &verified.x_arc)?;
    Ok(expansions.iter().map(|g| g.coeff_at(0)).collect())
}

/// Arrange a witness's coefficients as a point in the unknown ring of a
/// template (zero outside the witness windows).
pub fn witness_point(tpl: &ArcTemplate, witness: &ArcWitness) -> Vec<Rational> {
    let mut point = vec![Rational::zero(); tpl.unknown_count()];
    for i in tpl.x_lo..=tpl.s {
        let v = witness.x_arc.coeff_vector(i);
        for (c, val) in v.into_iter().enumerate() {
            point[tpl.a_var(i, c)] = val;
        }
    }
    if tpl.has_y() {
        if let Some(y) = &witness.y_arc {
            for j in tpl.y_lo..=0 {
                let v = y.coeff_vector(j);
                for (c, val) in v.into_iter().enumerate() {
                    point[tpl.b_var(j, c)] = val;
                }
            }
        }
    }
    point
}

// ---------------------------------------------------------------------------
// Numeric search with exact re-verification
// ---------------------------------------------------------------------------

/// Search budget; the solver is a heuristic and an empty result is never a
/// proof of emptiness.
#[derive(Clone, Debug)]
pub struct SolveBudget {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Stop after this many verified witnesses (0 = keep going).
    pub max_witnesses: usize,
    /// Largest denominator tried when rationalizing converged coordinates.
    pub denominator_bound: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            restarts: 200,
            max_iters: 80,
            seed: 0,
            max_witnesses: 4,
            denominator_bound: 1024,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Exactly verified witnesses, sorted by search residual then
    /// coefficients.
    pub witnesses: Vec<ArcWitness>,
    pub attempts: usize,
    /// Restarts that converged numerically but did not rationalize to an
    /// exact witness.
    pub near_misses: usize,
    pub best_residual: f64,
    pub diagnostics: String,
}

struct CompiledMonomial {
    coeff: f64,
    factors: Vec<(usize, u32)>,
}

struct CompiledEq {
    monomials: Vec<CompiledMonomial>,
}

fn compile_equations(
    sys: &ConditionSystem,
    tpl: &ArcTemplate,
) -> (Vec<CompiledEq>, Vec<usize>) {
    // variables pinned to zero by the lead-index rule
    let mut pinned = vec![false; tpl.unknown_count()];
    for i in tpl.lead_index + 1..=tpl.s {
        for c in 0..tpl.n {
            pinned[tpl.a_var(i, c)] = true;
        }
    }
    let mut ring_to_active = vec![usize::MAX; tpl.unknown_count()];
    let mut active_to_ring = Vec::new();
    for (ring, &is_pinned) in pinned.iter().enumerate() {
        if !is_pinned {
            ring_to_active[ring] = active_to_ring.len();
            active_to_ring.push(ring);
        }
    }
    let mut compiled = Vec::new();
    for (tag, eq) in &sys.equations {
        if *tag == ConditionTag::LeadZero {
            continue; // enforced by pinning
        }
        let mut monomials = Vec::new();
        'term: for (exps, coeff) in eq.terms() {
            let mut factors = Vec::new();
            for (v, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if pinned[v] {
                    continue 'term; // monomial vanishes
                }
                factors.push((ring_to_active[v], e));
            }
            monomials.push(CompiledMonomial {
                coeff: coeff.to_f64().unwrap_or(f64::NAN),
                factors,
            });
        }
        if !monomials.is_empty() {
            compiled.push(CompiledEq { monomials });
        }
    }
    (compiled, active_to_ring)
}

fn eval_residual(eqs: &[CompiledEq], z: &[f64], out: &mut DVector<f64>) {
    for (row, eq) in eqs.iter().enumerate() {
        let mut acc = 0.0;
        for m in &eq.monomials {
            let mut v = m.coeff;
            for &(var, e) in &m.factors {
                v *= z[var].powi(e as i32);
            }
            acc += v;
        }
        out[row] = acc;
    }
}

fn eval_jacobian(eqs: &[CompiledEq], z: &[f64], out: &mut DMatrix<f64>) {
    out.fill(0.0);
    for (row, eq) in eqs.iter().enumerate() {
        for m in &eq.monomials {
            for (fi, &(var, e)) in m.factors.iter().enumerate() {
                let mut v = m.coeff * e as f64 * z[var].powi(e as i32 - 1);
                for (fj, &(ovar, oe)) in m.factors.iter().enumerate() {
                    if fi != fj {
                        v *= z[ovar].powi(oe as i32);
                    }
                }
                out[(row, var)] += v;
            }
        }
    }
}

fn lm_minimize(eqs: &[CompiledEq], z0: Vec<f64>, max_iters: usize) -> (Vec<f64>, f64) {
    let m = eqs.len();
    let k = z0.len();
    let mut z = DVector::from_vec(z0);
    let mut r = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, k);
    eval_residual(eqs, z.as_slice(), &mut r);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..max_iters {
        if cost.sqrt() < 1e-13 {
            break;
        }
        eval_jacobian(eqs, z.as_slice(), &mut jac);
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * &r;
        let mut accepted = false;
        for _ in 0..8 {
            let mut damped = a.clone();
            for i in 0..k {
                damped[(i, i)] += mu * a[(i, i)] + 1e-12;
            }
            if let Some(chol) = damped.cholesky() {
                let delta = chol.solve(&(-&g));
                let candidate = &z + &delta;
                let mut r_new = DVector::zeros(m);
                eval_residual(eqs, candidate.as_slice(), &mut r_new);
                let cost_new = r_new.norm_squared();
                if cost_new < cost {
                    z = candidate;
                    r = r_new;
                    cost = cost_new;
                    mu = (mu * 0.33).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (z.as_slice().to_vec(), cost.sqrt())
}

/// Best rational approximation with denominator at most `max_den`, by
/// continued fractions.
fn rationalize(x: f64, max_den: u64) -> Rational {
    if x == 0.0 || !x.is_finite() {
        return Rational::zero();
    }
    let negative = x < 0.0;
    let mut v = x.abs();
    let (mut h0, mut h1) = (BigInt::one(), BigInt::from(v.floor() as i64));
    let (mut k0, mut k1) = (BigInt::zero(), BigInt::one());
    v -= v.floor();
    for _ in 0..40 {
        if v.abs() < 1e-15 {
            break;
        }
        v = 1.0 / v;
        let a = v.floor();
        if a >= 1e17 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        v -= a;
    }
    let q = Rational::new(h1, k1);
    if negative {
        -q
    } else {
        q
    }
}

fn assemble_witness(tpl: &ArcTemplate, ring_values: &[Rational]) -> Result<ArcWitness> {
    let x_coeffs: Vec<Vec<Rational>> = (tpl.x_lo..=tpl.s)
        .map(|i| (0..tpl.n).map(|c| ring_values[tpl.a_var(i, c)].clone()).collect())
        .collect();
    let x_arc = LaurentArc::from_coeffs(tpl.n, tpl.x_lo, x_coeffs)?;
    let y_arc = if tpl.has_y() {
        let y_coeffs: Vec<Vec<Rational>> = (tpl.y_lo..=0)
            .map(|j| (0..tpl.p).map(|c| ring_values[tpl.b_var(j, c)].clone()).collect())
            .collect();
        Some(LaurentArc::from_coeffs(tpl.p, tpl.y_lo, y_coeffs)?)
    } else {
        None
    };
    Ok(ArcWitness::new(x_arc, y_arc))
}

fn try_exact_snap(
    f: &PolyMap,
    tpl: &ArcTemplate,
    z: &[f64],
    active_to_ring: &[usize],
    denominator_bound: u64,
) -> Option<ArcWitness> {
    let bounds: Vec<u64> = [1u64, 2, 4, 8, 16, 32, 64, 256, 1024]
        .into_iter()
        .chain(std::iter::once(denominator_bound))
        .filter(|&b| b <= denominator_bound)
        .collect();
    for &bound in &bounds {
        let mut ring_values = vec![Rational::zero(); tpl.unknown_count()];
        for (active, &ring) in active_to_ring.iter().enumerate() {
            let v = z[active];
            ring_values[ring] = if v.abs() < 1e-7 {
                Rational::zero()
            } else {
                rationalize(v, bound)
            };
        }
        let Ok(candidate) = assemble_witness(tpl, &ring_values) else {
            continue;
        };
        if let Ok(verified) = verify_witness(f, &candidate) {
            if verified.passed() {
                return Some(verified);
            }
        }
    }
    None
}

/// Seeded multistart damped least squares over the condition system, with
/// continued-fraction rationalization and exact re-verification of every
/// candidate. Only exact passes are reported; an exhausted budget yields an
/// empty list with diagnostics, never a proof of emptiness.
pub fn solve_conditions(
    f: &PolyMap,
    tpl: &ArcTemplate,
    sys: &ConditionSystem,
    budget: &SolveBudget,
) -> SolveOutcome {
    let (eqs, active_to_ring) = compile_equations(sys, tpl);
    let k = active_to_ring.len();
    let chunk = 32usize;
    let mut witnesses: Vec<(f64, ArcWitness)> = Vec::new();
    let mut attempts = 0usize;
    let mut near_misses = 0usize;
    let mut best_residual = f64::INFINITY;

    let mut start = 0usize;
    while start < budget.restarts {
        let end = (start + chunk).min(budget.restarts);
        let results: Vec<(f64, Option<ArcWitness>)> = (start..end)
            .into_par_iter()
            .map(|restart| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    budget.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                // alternate dense and sparse starts
                let sparse = restart % 2 == 1;
                let z0: Vec<f64> = (0..k)
                    .map(|_| {
                        if sparse && rng.gen_range(0.0..1.0) < 0.75 {
                            0.0
                        } else {
                            rng.gen_range(-1.5..1.5)
                        }
                    })
                    .collect();
                let (z, residual) = lm_minimize(&eqs, z0, budget.max_iters);
                if residual < 1e-8 {
                    let snapped =
                        try_exact_snap(f, tpl, &z, &active_to_ring, budget.denominator_bound);
                    (residual, snapped)
                } else {
                    (residual, None)
                }
            })
            .collect();
        attempts = end;
        for (residual, maybe_witness) in results {
            best_residual = best_residual.min(residual);
            match maybe_witness {
                Some(w) => {
                    let duplicate = witnesses
                        .iter()
                        .any(|(_, old)| old.x_arc == w.x_arc && old.y_arc == w.y_arc);
                    if !duplicate {
                        witnesses.push((residual, w));
                    }
                }
                None if residual < 1e-8 => near_misses += 1,
                None => {}
            }
        }
        if budget.max_witnesses > 0 && witnesses.len() >= budget.max_witnesses {
            break;
        }
        start = end;
    }

    witnesses.sort_by(|(ra, wa), (rb, wb)| {
        ra.partial_cmp(rb)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| witness_sort_key(wa).cmp(&witness_sort_key(wb)))
    });
    let diagnostics = format!(
        "restarts={} converged_unverified={} best_residual={:.3e} verified={}",
        attempts,
        near_misses,
        best_residual,
        witnesses.len()
    );
    SolveOutcome {
        witnesses: witnesses.into_iter().map(|(_, w)| w).collect(),
        attempts,
        near_misses,
        best_residual,
        diagnostics,
    }
}

fn witness_sort_key(w: &ArcWitness) -> Vec<Rational> {
    let mut key = Vec::new();
    if let Some((lo, hi)) = w.x_arc.window() {
        for e in lo..=hi {
            key.extend(w.x_arc.coeff_vector(e));
        }
    }
    if let Some(y) = &w.y_arc {
        if let Some((lo, hi)) = y.window() {
            for e in lo..=hi {
                key.extend(y.coeff_vector(e));
            }
        }
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse_arc;
    use crate::parse::parse_poly;

    fn tz_map() -> PolyMap {
        PolyMap::new(
            2,
            vec![parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y"]).unwrap()],
        )
        .unwrap()
    }

    fn broughton_map() -> PolyMap {
        PolyMap::new(
            2,
            vec![parse_poly("y*(x^2*y^2+3*x*y+3)", &["x", "y"]).unwrap()],
        )
        .unwrap()
    }

    fn linear_map() -> PolyMap {
        PolyMap::new(2, vec![parse_poly("x", &["x", "y"]).unwrap()]).unwrap()
    }

    #[test]
    fn degree_bound_examples() {
        assert_eq!(degree_bound(2, 1, 3).unwrap(), 3);
        assert_eq!(degree_bound(3, 2, 2).unwrap(), 12);
        assert_eq!(degree_bound(2, 1, 1).unwrap(), 1);
    }

    #[test]
    fn degree_bound_rejects_bad_dimensions() {
        assert!(degree_bound(2, 2, 3).is_err());
        assert!(degree_bound(2, 1, 0).is_err());
    }

    #[test]
    fn phi_of_broughton() {
        let phis = phi(&broughton_map());
        let expected = parse_poly("3*x^2*y^2+6*x*y+3", &["x", "y"]).unwrap();
        assert_eq!(phis[1], expected); // 3(xy+1)^2
    }

    #[test]
    fn phi_of_linear() {
        let phis = phi(&linear_map());
        assert_eq!(phis[0], SparsePoly::one(2));
        assert!(phis[1].is_zero());
    }

    #[test]
    fn phi_of_pair_has_covector_weights() {
        let f1 = parse_poly("x^2+y", &["x", "y", "z"]).unwrap();
        let f2 = parse_poly("y*z", &["x", "y", "z"]).unwrap();
        let map = PolyMap::new(3, vec![f1, f2]).unwrap();
        let phis = phi(&map);
        // ring (x, y, z, y1, y2); phi_1 = 2x * y1
        let expected = parse_poly("2*x*y1", &["x", "y", "z", "y1", "y2"]).unwrap();
        assert_eq!(phis[0], expected);
        assert!(phis[0].total_degree() <= map.degree());
    }

    #[test]
    fn template_tz() {
        let tpl = build_template(&tz_map()).unwrap();
        assert_eq!(tpl.s, 5);
        assert_eq!(tpl.x_lo, -20);
        assert_eq!(tpl.unknown_count(), 52);
        assert!(!tpl.has_y());
    }

    #[test]
    fn template_p2() {
        let f1 = parse_poly("x^2+y", &["x", "y", "z"]).unwrap();
        let f2 = parse_poly("y*z", &["x", "y", "z"]).unwrap();
        let map = PolyMap::new(3, vec![f1, f2]).unwrap();
        let tpl = build_template(&map).unwrap();
        assert_eq!(tpl.s, 12);
        assert_eq!(tpl.x_lo, -24);
        assert_eq!(tpl.y_lo, -24);
        assert_eq!(tpl.n * tpl.x_width(), 111);
        assert_eq!(tpl.p * tpl.y_width(), 50);
        assert_eq!(tpl.unknown_count(), 161);
    }

    #[test]
    fn template_smallest() {
        let tpl = build_template(&linear_map()).unwrap();
        assert_eq!(tpl.s, 1);
        assert_eq!(tpl.x_lo, 0);
        assert_eq!(tpl.unknown_count(), 4);
    }

    #[test]
    fn conditions_for_linear_map() {
        let map = linear_map();
        let tpl = build_template(&map).unwrap().with_lead_index(1).unwrap();
        let sys = generate_conditions(&map, &tpl);
        // POS_F: coefficient of t^1 in x_1(t) is the single unknown a_{1,1}
        let pos: Vec<&SparsePoly> = sys
            .equations
            .iter()
            .filter(|(t, _)| *t == ConditionTag::PosF)
            .map(|(_, e)| e)
            .collect();
        assert_eq!(pos.len(), 1);
        assert_eq!(*pos[0], SparsePoly::var(4, tpl.a_var(1, 0)));
        // NONNEG_PHI kills the t^0 and t^1 coefficients of x_1 and x_2
        assert_eq!(sys.count(ConditionTag::NonnegPhi), 8);
        let nonzero_phi: Vec<&SparsePoly> = sys
            .equations
            .iter()
            .filter(|(t, e)| *t == ConditionTag::NonnegPhi && !e.is_zero())
            .map(|(_, e)| e)
            .collect();
        // phi_2 = 0, so only the phi_1 products contribute equations
        assert_eq!(nonzero_phi.len(), 4);
        assert_eq!(sys.count(ConditionTag::LeadNorm), 1);
        // the combination is unsatisfiable: POS_F and NONNEG_PHI force the
        // whole lead vector to zero while LEAD_NORM demands unit norm
        let outcome = solve_conditions(&map, &tpl, &sys, &SolveBudget {
            restarts: 48,
            max_iters: 60,
            seed: 1,
            max_witnesses: 1,
            denominator_bound: 64,
        });
        assert!(outcome.witnesses.is_empty());
    }

    #[test]
    fn condition_counts_match_window_arithmetic() {
        let map = broughton_map();
        let tpl = build_template(&map).unwrap().with_lead_index(1).unwrap();
        let sys = generate_conditions(&map, &tpl);
        let ds = (map.degree() as i64 * tpl.s) as usize;
        assert_eq!(sys.count(ConditionTag::PosF), map.p() * ds);
        assert_eq!(sys.count(ConditionTag::NonnegPhi), map.n() * map.n() * (ds + 1));
        assert_eq!(sys.count(ConditionTag::LeadNorm), 1);
        assert_eq!(
            sys.count(ConditionTag::LeadZero),
            map.n() * (tpl.s - tpl.lead_index) as usize
        );
        assert_eq!(sys.count(ConditionTag::NormB0), 0);
    }

    #[test]
    fn broughton_witness_satisfies_every_equation_exactly() {
        let map = broughton_map();
        let tpl = build_template(&map).unwrap().with_lead_index(1).unwrap();
        let sys = generate_conditions(&map, &tpl);
        let witness = ArcWitness::new(parse_arc("t, -1/t").unwrap(), None);
        let point = witness_point(&tpl, &witness);
        for (tag, eq) in &sys.equations {
            let v = eq.eval(&point).unwrap();
            assert!(
                v.is_zero(),
                "equation tagged {tag:?} evaluates to {v} on the known witness"
            );
        }
    }

    #[test]
    fn verify_broughton_witness_passes() {
        let map = broughton_map();
        let witness = ArcWitness::new(parse_arc("t, -1/t").unwrap(), None);
        let verified = verify_witness(&map, &witness).unwrap();
        assert!(verified.passed());
        let a0 = verified.alpha0.unwrap();
        assert_eq!(a0, vec![Rational::zero()]);
        let checks = verified.checks.unwrap();
        assert_eq!(checks.lead_exponent, Some(1));
        assert_eq!(checks.ord_f, vec![Some(-1)]);
    }

    #[test]
    fn verify_broughton_mirror_arc_fails_decay() {
        let map = broughton_map();
        let witness = ArcWitness::new(parse_arc("t, 1/t").unwrap(), None);
        let verified = verify_witness(&map, &witness).unwrap();
        assert!(!verified.passed());
        let checks = verified.checks.unwrap();
        assert!(checks.bounded_ok);
        assert!(!checks.decay_ok);
        // x_1 * phi_2 = 12 t has order 1
        let bad = checks
            .ord_products
            .iter()
            .find(|((i, j), _)| *i == 0 && *j == 1)
            .unwrap();
        assert_eq!(bad.1, Some(1));
    }

    #[test]
    fn verify_linear_escape_fails_decay() {
        let map = linear_map();
        let witness = ArcWitness::new(parse_arc("0, t").unwrap(), None);
        let verified = verify_witness(&map, &witness).unwrap();
        assert!(!verified.passed());
        let checks = verified.checks.unwrap();
        assert!(checks.bounded_ok); // f(x(t)) = 0
        assert!(!checks.decay_ok); // x_2 * phi_1 = t
    }

    #[test]
    fn alpha0_of_product_map_witness() {
        // alpha0 only needs (b'): f(x(t)) = 5 is bounded even though the
        // decay condition fails for this arc
        let map = PolyMap::new(2, vec![parse_poly("x*y", &["x", "y"]).unwrap()]).unwrap();
        let witness = ArcWitness::new(parse_arc("t, 5/t").unwrap(), None);
        let verified = verify_witness(&map, &witness).unwrap();
        assert!(verified.checks.as_ref().unwrap().bounded_ok);
        assert_eq!(alpha0(&map, &verified).unwrap(), vec![rat(5)]);
    }

    #[test]
    fn alpha0_rejects_unbounded_witness() {
        let map = linear_map();
        let witness = ArcWitness::new(parse_arc("t, 0").unwrap(), None);
        let verified = verify_witness(&map, &witness).unwrap();
        assert!(!verified.passed());
        assert!(alpha0(&map, &verified).is_err());
    }

    #[test]
    fn reparametrization_preserves_pass_and_alpha0() {
        let map = broughton_map();
        let witness = ArcWitness::new(parse_arc("t, -1/t").unwrap(), None);
        let verified = verify_witness(&map, &witness).unwrap();
        for c in [rat(2), crate::poly::ratio(1, 3), rat(7)] {
            let scaled = ArcWitness::new(verified.x_arc.scale_parameter(&c), None);
            let v = verify_witness(&map, &scaled).unwrap();
            assert!(v.passed(), "scaling by {c} broke the witness");
            assert_eq!(v.alpha0.unwrap(), vec![Rational::zero()]);
        }
    }

    #[test]
    fn witness_window_outside_template_rejected() {
        let map = linear_map(); // template window [0, 1]
        let witness = ArcWitness::new(parse_arc("t, t^-5").unwrap(), None);
        assert!(verify_witness(&map, &witness).is_err());
    }

    #[test]
    fn export_has_header_and_tags() {
        let map = linear_map();
        let tpl = build_template(&map).unwrap();
        let sys = generate_conditions(&map, &tpl);
        let text = conditions_to_text(&map, &tpl, &sys);
        assert!(text.starts_with("# n=2 p=1 d=1 s=1 k=1\n"));
        assert!(text.contains("POS_F\t"));
        assert!(text.contains("LEAD_NORM\t"));
        assert!(text.contains("a_1_1"));
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.5, 64), crate::poly::ratio(1, 2));
        assert_eq!(rationalize(-0.75, 64), crate::poly::ratio(-3, 4));
        assert_eq!(rationalize(1.0, 64), rat(1));
        assert_eq!(rationalize(0.3333333333333333, 64), crate::poly::ratio(1, 3));
    }

    #[test]
    fn solver_recovers_broughton_witness() {
        let map = broughton_map();
        let tpl = build_template(&map).unwrap().with_lead_index(1).unwrap();
        let sys = generate_conditions(&map, &tpl);
        let outcome = solve_conditions(&map, &tpl, &sys, &SolveBudget {
            restarts: 10_000,
            max_iters: 120,
            seed: 42,
            max_witnesses: 1,
            denominator_bound: 1024,
        });
        assert!(
            !outcome.witnesses.is_empty(),
            "no witness found: {}",
            outcome.diagnostics
        );
        let w = &outcome.witnesses[0];
        assert!(w.passed());
        assert_eq!(w.alpha0.as_ref().unwrap(), &vec![Rational::zero()]);
    }
}
