//! Jacobians, minors, the singular-set system, the Milnor-set system and the
//! generic-center submersion witness.
//!
//! The Milnor set of `f` with respect to the center `a` is the critical set
//! of `(f, rho_a)` where `rho_a` is the squared distance to `a`. It is cut
//! out by the vanishing of all `(p+1)`-minors of the `(p+1) x n` matrix
//! `D(f, rho_a)`; the gradient row is taken raw as `2(x - a)`, so the systems
//! here match hand-computed equations up to that factor 2.

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::poly::{rat, PolyMap, Rational, SparsePoly};

/// Matrix of polynomials; entry `(i, j)` of the plain Jacobian is
/// `d f_i / d x_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobianMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<SparsePoly>>,
}

impl JacobianMatrix {
    /// Evaluate every entry at a float point.
    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.eval_f64(point)).collect())
            .collect()
    }
}

/// Exact Jacobian of a polynomial map.
pub fn jacobian(f: &PolyMap) -> JacobianMatrix {
    let entries: Vec<Vec<SparsePoly>> = f
        .components()
        .iter()
        .map(|c| {
            (0..f.n())
                .map(|j| c.partial_derivative(j).expect("valid index"))
                .collect()
        })
        .collect();
    JacobianMatrix {
        rows: f.p(),
        cols: f.n(),
        entries,
    }
}

/// Determinant of a small square polynomial matrix by Laplace expansion
/// along the first row.
pub fn poly_det(m: &[Vec<SparsePoly>]) -> SparsePoly {
    let k = m.len();
    let n_vars = m[0][0].n_vars();
    if k == 1 {
        return m[0][0].clone();
    }
    let mut acc = SparsePoly::zero(n_vars);
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<SparsePoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let cofactor = poly_det(&minor);
        let signed = if j % 2 == 0 { cofactor } else { -&cofactor };
        acc = &acc + &(entry * &signed);
    }
    acc
}

fn column_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for i in start..=n.saturating_sub(remaining) {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// Center of a Milnor system: a concrete rational point or a symbolic one
/// (the `a_i` become trailing ring variables).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CenterSpec {
    Numeric(Vec<Rational>),
    Symbolic,
}

/// The `(p+1)`-minor equations of `D(f, rho_a)` cutting out the Milnor set.
///
/// For a numeric center the equations live in the `n` source variables; for
/// a symbolic center they live in `2n` variables ordered `x_1..x_n,
/// a_1..a_n`.
#[derive(Clone, Debug)]
pub struct MilnorSystem {
    pub center: CenterSpec,
    pub equations: Vec<SparsePoly>,
    /// Column multi-index `J` of each equation, in lockstep with `equations`.
    pub index_book: Vec<Vec<usize>>,
    /// All equations are identically zero (e.g. `f = rho_a`); downstream
    /// falls back to whole-sphere sampling.
    pub degenerate: bool,
    pub n_vars: usize,
}

/// Build the Milnor system of `f` at the given center.
pub fn milnor_system(f: &PolyMap, center: &CenterSpec) -> Result<MilnorSystem> {
    let n = f.n();
    let p = f.p();
    if let CenterSpec::Numeric(a) = center {
        if a.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "center of length {} for a map with n = {}",
                a.len(),
                n
            )));
        }
    }
    let symbolic = matches!(center, CenterSpec::Symbolic);
    let n_vars = if symbolic { 2 * n } else { n };

    // rows 1..p: Df, embedded into the working ring
    let jac = jacobian(f);
    let mut rows: Vec<Vec<SparsePoly>> = jac
        .entries
        .iter()
        .map(|row| row.iter().map(|e| e.extend_vars(n_vars)).collect())
        .collect();
    // appended gradient row of rho_a: 2(x_j - a_j)
    let rho_row: Vec<SparsePoly> = (0..n)
        .map(|j| {
            let x = SparsePoly::var(n_vars, j);
            let a = match center {
                CenterSpec::Numeric(a) => SparsePoly::constant(n_vars, a[j].clone()),
                CenterSpec::Symbolic => SparsePoly::var(n_vars, n + j),
            };
            (&x - &a).scale(&rat(2))
        })
        .collect();
    rows.push(rho_row);

    let mut equations = Vec::new();
    let mut index_book = Vec::new();
    for cols in column_subsets(n, p + 1) {
        let sub: Vec<Vec<SparsePoly>> = rows
            .iter()
            .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
            .collect();
        equations.push(poly_det(&sub));
        index_book.push(cols);
    }
    let degenerate = equations.iter().all(|e| e.is_zero());
    Ok(MilnorSystem {
        center: center.clone(),
        equations,
        index_book,
        degenerate,
        n_vars,
    })
}

/// All `p x p` minors of `Df`; their common zero set is `Sing f`.
#[derive(Clone, Debug)]
pub struct SingSystem {
    pub equations: Vec<SparsePoly>,
    pub index_book: Vec<Vec<usize>>,
}

pub fn sing_system(f: &PolyMap) -> SingSystem {
    let jac = jacobian(f);
    let mut equations = Vec::new();
    let mut index_book = Vec::new();
    for cols in column_subsets(f.n(), f.p()) {
        let sub: Vec<Vec<SparsePoly>> = jac
            .entries
            .iter()
            .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
            .collect();
        equations.push(poly_det(&sub));
        index_book.push(cols);
    }
    SingSystem {
        equations,
        index_book,
    }
}

impl SingSystem {
    /// Scale-free proximity score to `Sing f` at a point: the largest
    /// relative (cancellation-normalized) minor magnitude. Exactly zero on
    /// `Sing f`; order one on points where no minor exhibits cancellation.
    pub fn proximity_score(&self, point: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for eq in &self.equations {
            if eq.is_zero() {
                continue;
            }
            let (value, magnitude) = eq.eval_f64_with_magnitude(point);
            if magnitude > 0.0 {
                best = best.max(value.abs() / magnitude);
            }
        }
        best
    }
}

/// True iff every Milnor equation has total degree within the generic bound
/// `p(d - 1) + 1`.
pub fn minor_degree_audit(sys: &MilnorSystem, f: &PolyMap) -> bool {
    let bound = f.p() as u32 * (f.degree() - 1) + 1;
    sys.equations
        .iter()
        .all(|e| e.is_zero() || e.total_degree() <= bound)
}

/// One `J = I + {k}` check of the submersion witness.
#[derive(Clone, Debug)]
pub struct CenterWitnessCheck {
    pub k: usize,
    pub j_index: Vec<usize>,
    /// `|d m_J / d a_k (x, a)|`, from the exact symbolic derivative.
    pub lhs_abs: f64,
    /// `2 |M_I[Df(x)]|`.
    pub rhs_abs: f64,
    pub rel_err: f64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct CenterWitnessReport {
    pub i_index: Vec<usize>,
    pub minor_i_abs: f64,
    pub checks: Vec<CenterWitnessCheck>,
    pub all_ok: bool,
}

/// Verify the diagonal submersion structure at a witness minor `I`: for each
/// `k` outside `I` and `J = I + {k}`, the partial of `m_J` in `a_k` must have
/// magnitude `2 |M_I[Df(x)]|` within the relative tolerance.
pub fn generic_center_witness(
    f: &PolyMap,
    a: &[f64],
    x: &[f64],
    i_cols: &[usize],
    rel_tol: f64,
) -> Result<CenterWitnessReport> {
    let n = f.n();
    let p = f.p();
    if a.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch(
            "point and center must have length n".to_string(),
        ));
    }
    if i_cols.len() != p || i_cols.iter().any(|&c| c >= n) {
        return Err(Error::IndexOutOfRange(format!(
            "witness minor needs {} distinct columns below {}",
            p, n
        )));
    }
    let jac = jacobian(f);
    let sub: Vec<Vec<SparsePoly>> = jac
        .entries
        .iter()
        .map(|row| i_cols.iter().map(|&c| row[c].clone()).collect())
        .collect();
    let minor_poly = poly_det(&sub);
    let (minor_value, minor_magnitude) = minor_poly.eval_f64_with_magnitude(x);
    if !(minor_value.abs() > 1e-9 * minor_magnitude.max(1.0)) {
        return Err(Error::Degenerate(
            "singular witness minor: M_I[Df(x)] is numerically zero".to_string(),
        ));
    }

    let sys = milnor_system(f, &CenterSpec::Symbolic)?;
    let point: Vec<f64> = x.iter().chain(a.iter()).copied().collect();
    let mut checks = Vec::new();
    for k in 0..n {
        if i_cols.contains(&k) {
            continue;
        }
        let mut j_index = i_cols.to_vec();
        j_index.push(k);
        j_index.sort_unstable();
        let eq_pos = sys
            .index_book
            .iter()
            .position(|j| *j == j_index)
            .expect("every (p+1)-subset is emitted");
        let dm = sys.equations[eq_pos].partial_derivative(n + k)?;
        let lhs_abs = dm.eval_f64(&point)?.abs();
        let rhs_abs = 2.0 * minor_value.abs();
        let rel_err = (lhs_abs - rhs_abs).abs() / rhs_abs;
        checks.push(CenterWitnessCheck {
            k,
            j_index,
            lhs_abs,
            rhs_abs,
            rel_err,
            ok: rel_err <= rel_tol,
        });
    }
    let all_ok = checks.iter().all(|c| c.ok);
    Ok(CenterWitnessReport {
        i_index: i_cols.to_vec(),
        minor_i_abs: minor_value.abs(),
        checks,
        all_ok,
    })
}

/// Render a system as plain text, one equation per line, for external
/// solvers.
pub fn system_to_text(equations: &[SparsePoly], names: &[&str]) -> String {
    let mut out = String::new();
    for eq in equations {
        out.push_str(&eq.to_text(names));
        out.push('\n');
    }
    out
}

/// Substitute a numeric center into a symbolic Milnor system; the result
/// stays in the `2n`-variable ring with the `a` variables bound.
pub fn bind_center(sys: &MilnorSystem, a: &[Rational]) -> Result<MilnorSystem> {
    if !matches!(sys.center, CenterSpec::Symbolic) {
        return Err(Error::Degenerate(
            "bind_center expects a symbolic system".to_string(),
        ));
    }
    let n = sys.n_vars / 2;
    if a.len() != n {
        return Err(Error::DimensionMismatch(
            "center length must equal n".to_string(),
        ));
    }
    let bindings: Vec<(usize, Rational)> = a
        .iter()
        .enumerate()
        .map(|(i, v)| (n + i, v.clone()))
        .collect();
    let equations: Vec<SparsePoly> = sys
        .equations
        .iter()
        .map(|e| e.substitute(&bindings))
        .collect();
    let degenerate = equations.iter().all(|e| e.is_zero());
    Ok(MilnorSystem {
        center: CenterSpec::Numeric(a.to_vec()),
        equations,
        index_book: sys.index_book.clone(),
        degenerate,
        n_vars: sys.n_vars,
    })
}

/// Restrict a numeric-center Milnor equation built in the `2n` ring back to
/// the first `n` variables. Panics if any `a` variable is still present.
pub fn restrict_to_source(poly: &SparsePoly, n: usize) -> SparsePoly {
    let mut out = SparsePoly::zero(n);
    for (exps, coeff) in poly.terms() {
        assert!(
            exps[n..].iter().all(|&e| e == 0),
            "center variables still present"
        );
        out.add_term(&exps[..n], coeff.clone());
    }
    out
}

/// `|x - a|` distance helper used by sampling fallbacks.
pub fn rational_point_to_f64(point: &[Rational]) -> Vec<f64> {
    point
        .iter()
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_poly;
    use crate::poly::ratio;

    fn tz_map() -> PolyMap {
        let f = parse_poly("y*(2*x^2*y^2-9*x*y+12)", &["x", "y"]).unwrap();
        PolyMap::new(2, vec![f]).unwrap()
    }

    fn broughton_map() -> PolyMap {
        let f = parse_poly("y*(x^2*y^2+3*x*y+3)", &["x", "y"]).unwrap();
        PolyMap::new(2, vec![f]).unwrap()
    }

    #[test]
    fn jacobian_of_pair() {
        let f1 = parse_poly("x^2+y", &["x", "y", "z"]).unwrap();
        let f2 = parse_poly("y*z", &["x", "y", "z"]).unwrap();
        let map = PolyMap::new(3, vec![f1, f2]).unwrap();
        let jac = jacobian(&map);
        assert_eq!(jac.entries[0][0], parse_poly("2*x", &["x", "y", "z"]).unwrap());
        assert_eq!(jac.entries[0][1], parse_poly("1", &["x", "y", "z"]).unwrap());
        assert_eq!(jac.entries[1][1], parse_poly("z", &["x", "y", "z"]).unwrap());
        assert_eq!(jac.entries[1][2], parse_poly("y", &["x", "y", "z"]).unwrap());
    }

    #[test]
    fn jacobian_of_tz_matches_factored_forms() {
        let jac = jacobian(&tz_map());
        assert_eq!(jac.entries[0][0], parse_poly("y^2*(4*x*y-9)", &["x", "y"]).unwrap());
        assert_eq!(
            jac.entries[0][1],
            parse_poly("6*(x*y-1)*(x*y-2)", &["x", "y"]).unwrap()
        );
    }

    #[test]
    fn jacobian_of_linear_projection() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let jac = jacobian(&PolyMap::new(2, vec![f]).unwrap());
        assert_eq!(jac.entries[0][0], SparsePoly::one(2));
        assert!(jac.entries[0][1].is_zero());
    }

    #[test]
    fn milnor_tz_symbolic_matches_displayed_equation() {
        let sys = milnor_system(&tz_map(), &CenterSpec::Symbolic).unwrap();
        assert_eq!(sys.equations.len(), 1);
        let vars = ["x", "y", "a1", "a2"];
        let expected = parse_poly(
            "2*(y^2*(4*x*y-9)*(y-a2) - 6*(x-a1)*(x*y-1)*(x*y-2))",
            &vars,
        )
        .unwrap();
        assert_eq!(sys.equations[0], expected);
        assert!(!sys.degenerate);
    }

    #[test]
    fn milnor_of_projection_is_axis() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let sys = milnor_system(&map, &CenterSpec::Numeric(vec![rat(0), rat(0)])).unwrap();
        assert_eq!(sys.equations.len(), 1);
        assert_eq!(sys.equations[0], parse_poly("2*y", &["x", "y"]).unwrap());
    }

    #[test]
    fn milnor_of_distance_function_is_degenerate() {
        let f = parse_poly("x^2+y^2", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let sys = milnor_system(&map, &CenterSpec::Numeric(vec![rat(0), rat(0)])).unwrap();
        assert!(sys.degenerate);
        assert!(sys.equations.iter().all(|e| e.is_zero()));
    }

    #[test]
    fn sing_system_of_pair() {
        let f1 = parse_poly("x^2+y", &["x", "y"]).unwrap();
        // n must exceed p, so use a 3-variable embedding of the classic pair
        let f1 = f1.extend_vars(3);
        let f2 = parse_poly("x*y", &["x", "y"]).unwrap().extend_vars(3);
        let map = PolyMap::new(3, vec![f1, f2]).unwrap();
        let sys = sing_system(&map);
        // minor on columns {0,1} is det [[2x, 1], [y, x]] = 2x^2 - y
        let expected = parse_poly("2*x^2-y", &["x", "y", "z"]).unwrap();
        assert!(sys.equations.contains(&expected));
    }

    #[test]
    fn sing_system_of_tz_has_no_common_real_zero_on_grid() {
        let sys = sing_system(&tz_map());
        assert_eq!(sys.equations.len(), 2);
        let mut worst: f64 = 1.0;
        for i in -12..=12 {
            for j in -12..=12 {
                let pt = [i as f64 / 3.0, j as f64 / 3.0];
                worst = worst.min(sys.proximity_score(&pt));
            }
        }
        assert!(worst > 1e-6, "grid minimum {worst} suggests a common zero");
    }

    #[test]
    fn sing_system_of_linear_projection_is_unit() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let sys = sing_system(&PolyMap::new(2, vec![f]).unwrap());
        assert_eq!(sys.equations[0], SparsePoly::one(2));
        assert!(sys.equations[1].is_zero());
    }

    #[test]
    fn degree_audit_on_examples() {
        let tz = tz_map();
        let sys = milnor_system(&tz, &CenterSpec::Symbolic).unwrap();
        assert!(minor_degree_audit(&sys, &tz));
        assert_eq!(sys.equations[0].total_degree(), 5); // p(d-1)+1 = 5 exactly

        let f1 = parse_poly("x^2+y", &["x", "y", "z"]).unwrap();
        let f2 = parse_poly("y*z", &["x", "y", "z"]).unwrap();
        let map = PolyMap::new(3, vec![f1, f2]).unwrap();
        let sys = milnor_system(&map, &CenterSpec::Symbolic).unwrap();
        assert!(minor_degree_audit(&sys, &map));

        let lin = PolyMap::new(2, vec![parse_poly("x", &["x", "y"]).unwrap()]).unwrap();
        let sys = milnor_system(&lin, &CenterSpec::Symbolic).unwrap();
        assert!(minor_degree_audit(&sys, &lin));
    }

    #[test]
    fn symbolic_then_bind_equals_direct_numeric() {
        let map = broughton_map();
        let symbolic = milnor_system(&map, &CenterSpec::Symbolic).unwrap();
        let a = vec![ratio(1, 2), rat(-3)];
        let bound = bind_center(&symbolic, &a).unwrap();
        let direct = milnor_system(&map, &CenterSpec::Numeric(a)).unwrap();
        for (b, d) in bound.equations.iter().zip(direct.equations.iter()) {
            assert_eq!(restrict_to_source(b, 2), d.clone().extend_vars(2));
        }
    }

    #[test]
    fn generic_center_witness_tz_hand_values() {
        // I = {0}, x = (1, 3), a = (0, 0): d m_J / d a_2 = -2 f_x(1,3) = -54
        let report =
            generic_center_witness(&tz_map(), &[0.0, 0.0], &[1.0, 3.0], &[0], 1e-9).unwrap();
        assert!(report.all_ok);
        assert_eq!(report.checks.len(), 1);
        let check = &report.checks[0];
        assert!((check.lhs_abs - 54.0).abs() < 1e-9);
        assert!((report.minor_i_abs - 27.0).abs() < 1e-9);
        assert!((check.rhs_abs - 54.0).abs() < 1e-9);
    }

    #[test]
    fn generic_center_witness_linear() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let report =
            generic_center_witness(&map, &[0.3, -0.7], &[2.0, 5.0], &[0], 1e-9).unwrap();
        assert!(report.all_ok);
        assert!((report.checks[0].lhs_abs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn generic_center_witness_rejects_singular_minor() {
        // f = x^2: the minor at x = 0 vanishes
        let f = parse_poly("x^2", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let res = generic_center_witness(&map, &[0.0, 0.0], &[0.0, 1.0], &[0], 1e-9);
        assert!(matches!(res, Err(Error::Degenerate(_))));
    }
}
