//! The Rabier function `nu` and asymptotic-critical-value evidence along
//! parametric paths.
//!
//! For a real `p x n` matrix `A` with `p <= n`, `nu(A)` is the infimum of
//! `|A^T y|` over unit covectors `y`, i.e. the smallest singular value of
//! `A`. It is computed deterministically: the `p x p` Gram matrix `A A^T` is
//! formed exactly over the rationals, its characteristic polynomial is built
//! by Faddeev-LeVerrier, and the smallest eigenvalue is isolated by Sturm
//! sequences and refined by bisection. A seeded sampling bound
//! [`nu_bruteforce`] serves as an independent upper-bound oracle.

use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffgeo::jacobian;
use crate::error::{Error, Result};
use crate::laurent::LaurentArc;
use crate::poly::{rat, PolyMap, Rational};
use crate::realsolve::{isolate_real_roots, refine_root_relative, UnivariatePoly};

/// Dense real matrix, row-major.
#[derive(Clone, Debug)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged matrix rows".to_string()));
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Characteristic polynomial of the exact rational Gram matrix `A A^T`,
/// by the Faddeev-LeVerrier recurrence. Ascending coefficients.
fn gram_char_poly(a: &RealMatrix) -> UnivariatePoly {
    let p = a.rows;
    let n = a.cols;
    // exact Gram matrix
    let entry = |i: usize, j: usize| -> Rational {
        let mut acc = Rational::zero();
        for k in 0..n {
            let x = Rational::from_float(a.get(i, k)).expect("finite entry");
            let y = Rational::from_float(a.get(j, k)).expect("finite entry");
            acc += x * y;
        }
        acc
    };
    let gram: Vec<Vec<Rational>> = (0..p)
        .map(|i| (0..p).map(|j| entry(i, j)).collect())
        .collect();

    // M_1 = G, c_1 = -tr(M_1); M_k = G (M_{k-1} + c_{k-1} I), c_k = -tr(M_k)/k
    let mut coeffs_desc = vec![Rational::one()]; // lambda^p
    let mut m = gram.clone();
    let mut c = -trace(&m);
    coeffs_desc.push(c.clone());
    for k in 2..=p {
        let mut shifted = m.clone();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += &c;
        }
        m = mat_mul(&gram, &shifted);
        c = -(trace(&m) / rat(k as i64));
        coeffs_desc.push(c.clone());
    }
    coeffs_desc.reverse();
    UnivariatePoly::new(coeffs_desc)
}

fn trace(m: &[Vec<Rational>]) -> Rational {
    m.iter()
        .enumerate()
        .map(|(i, row)| row[i].clone())
        .fold(Rational::zero(), |acc, v| acc + v)
}

fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Rational::zero();
                    for k in 0..n {
                        acc += &a[i][k] * &b[k][j];
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Smallest eigenvalue of the exact Gram matrix, refined to high relative
/// accuracy; exact zero is detected from the constant coefficient.
fn gram_lambda_min(a: &RealMatrix) -> f64 {
    let char_poly = gram_char_poly(a);
    if char_poly.coeffs()[0].is_zero() {
        return 0.0;
    }
    let roots = isolate_real_roots(&char_poly).expect("nonzero characteristic polynomial");
    // Gram eigenvalues are real and nonnegative; take the smallest.
    let iv = roots.first().expect("a symmetric matrix has real spectrum");
    let lambda = refine_root_relative(&char_poly, iv, 50)
        .to_f64()
        .unwrap_or(f64::NAN);
    lambda.max(0.0)
}

/// The Rabier function: smallest singular value of `A` (`p <= n`).
pub fn nu(a: &RealMatrix) -> Result<f64> {
    if a.rows > a.cols {
        return Err(Error::InvalidDimensions(format!(
            "nu expects p <= n, got {}x{}",
            a.rows, a.cols
        )));
    }
    if !a.is_finite() {
        return Err(Error::Numeric("non-finite matrix entry".to_string()));
    }
    Ok(gram_lambda_min(a).sqrt())
}

/// Sampling upper bound for `nu`: the minimum of `|A^T y|` over `samples`
/// uniformly drawn unit covectors. Deterministic for a fixed seed.
pub fn nu_bruteforce(a: &RealMatrix, samples: usize, seed: u64) -> f64 {
    assert!(samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = a.rows;
    let n = a.cols;
    let mut best = f64::INFINITY;
    let mut drawn = 0;
    while drawn < samples {
        // standard normal direction via Box-Muller, normalized to the sphere
        let mut y = Vec::with_capacity(p);
        while y.len() < p {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * u2;
            y.push(r * theta.cos());
            if y.len() < p {
                y.push(r * theta.sin());
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        drawn += 1;
        let mut sq = 0.0;
        for j in 0..n {
            let mut dot = 0.0;
            for (i, yi) in y.iter().enumerate() {
                dot += a.get(i, j) * yi / norm;
            }
            sq += dot * dot;
        }
        best = best.min(sq.sqrt());
    }
    best
}

/// One sample of the Rabier profile along a path.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RabierSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub norm_x: f64,
    pub nu_value: f64,
    /// `norm_x * nu_value` exactly as computed.
    pub product: f64,
    pub f_value: Vec<f64>,
    /// False when the path evaluation overflowed at this `t`.
    pub finite: bool,
}

/// Sample `|x| * nu(Df(x))` and `f(x)` along a Laurent path at the given
/// parameter values (strictly increasing).
pub fn rabier_profile(f: &PolyMap, path: &LaurentArc, schedule: &[f64]) -> Result<Vec<RabierSample>> {
    if path.dim() != f.n() {
        return Err(Error::DimensionMismatch(format!(
            "path dimension {} but map source dimension {}",
            path.dim(),
            f.n()
        )));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidDimensions(
            "t schedule must be strictly increasing".to_string(),
        ));
    }
    let jac = jacobian(f);
    let mut out = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let x = path.eval_f64(t);
        let finite_x = x.iter().all(|v| v.is_finite());
        let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let entries = jac.eval_f64(&x)?;
        let f_value = f.eval_f64(&x)?;
        let matrix = RealMatrix::from_rows(&entries)?;
        let finite = finite_x && matrix.is_finite() && f_value.iter().all(|v| v.is_finite());
        let nu_value = if finite { nu(&matrix)? } else { f64::NAN };
        out.push(RabierSample {
            t,
            x,
            norm_x,
            nu_value,
            product: norm_x * nu_value,
            f_value,
            finite,
        });
    }
    Ok(out)
}

/// Verdict of the finite-sample asymptotic-critical-value test.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EvidenceReport {
    pub pass: bool,
    /// Extrapolated limit of `f` (the last sampled value) when the test
    /// passes.
    pub limit: Option<Vec<f64>>,
    pub last_product: f64,
    pub product_decreasing: bool,
    pub f_cauchy: bool,
    pub norm_growing: bool,
    pub samples_used: usize,
}

/// Finite-sample surrogate for membership of the path limit in the set of
/// asymptotic critical values: the product `|x| nu(Df)` must fall below
/// `tol` and decrease over the trailing window, `f` must be Cauchy within
/// `tol` there, and `|x|` must grow.
pub fn kinfty_evidence(profile: &[RabierSample], tol: f64, window: usize) -> EvidenceReport {
    let window = window.max(2);
    let finite: Vec<&RabierSample> = profile.iter().filter(|s| s.finite).collect();
    let fail = |n: usize| EvidenceReport {
        pass: false,
        limit: None,
        last_product: f64::NAN,
        product_decreasing: false,
        f_cauchy: false,
        norm_growing: false,
        samples_used: n,
    };
    if finite.len() < window.max(3) || !profile.last().is_some_and(|s| s.finite) {
        return fail(finite.len());
    }
    let tail = &finite[finite.len() - window..];
    let last = tail.last().unwrap();
    let product_decreasing = tail.windows(2).all(|w| w[1].product < w[0].product);
    let f_cauchy = tail.windows(2).all(|w| {
        w[0].f_value
            .iter()
            .zip(w[1].f_value.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            < tol
    });
    let norm_growing = tail.windows(2).all(|w| w[1].norm_x > w[0].norm_x)
        && last.norm_x > 10.0 * finite[0].norm_x.max(1e-300);
    let pass = last.product < tol && product_decreasing && f_cauchy && norm_growing;
    EvidenceReport {
        pass,
        limit: if pass { Some(last.f_value.clone()) } else { None },
        last_product: last.product,
        product_decreasing,
        f_cauchy,
        norm_growing,
        samples_used: finite.len(),
    }
}

/// CSV rendering of a profile: `t, norm_x, nu, product, f_1..f_p`.
pub fn profile_to_csv(profile: &[RabierSample], p: usize) -> String {
    let mut out = String::from("t,norm_x,nu,product");
    for i in 1..=p {
        out.push_str(&format!(",f_{i}"));
    }
    out.push('\n');
    for s in profile {
        out.push_str(&format!("{:e},{:e},{:e},{:e}", s.t, s.norm_x, s.nu_value, s.product));
        for v in &s.f_value {
            out.push_str(&format!(",{v:e}"));
        }
        out.push('\n');
    }
    out
}

/// Geometric schedule `start * ratio^k`, `k = 0..steps`.
pub fn geometric_schedule(start: f64, ratio: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| start * ratio.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::parse_arc;
    use crate::parse::parse_poly;
    use crate::poly::PolyMap;

    fn matrix(rows: &[&[f64]]) -> RealMatrix {
        RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn nu_of_unit_row() {
        let a = matrix(&[&[1.0, 0.0]]);
        assert!((nu(&a).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nu_of_zero_matrix() {
        let a = matrix(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(nu(&a).unwrap(), 0.0);
    }

    #[test]
    fn nu_of_diagonal() {
        let a = matrix(&[&[3.0, 0.0], &[0.0, 4.0]]);
        assert!((nu(&a).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nu_rejects_wide_side() {
        let a = matrix(&[&[1.0], &[2.0]]);
        assert!(nu(&a).is_err());
    }

    #[test]
    fn nu_rejects_non_finite() {
        let a = matrix(&[&[f64::NAN, 0.0]]);
        assert!(nu(&a).is_err());
    }

    #[test]
    fn bruteforce_upper_bounds_nu() {
        let a = matrix(&[&[3.0, 0.0, 1.0], &[0.5, 4.0, -2.0]]);
        let exact = nu(&a).unwrap();
        for seed in 0..5 {
            assert!(nu_bruteforce(&a, 500, seed) >= exact - 1e-12);
        }
    }

    #[test]
    fn bruteforce_close_on_diagonal() {
        let a = matrix(&[&[3.0, 0.0], &[0.0, 4.0]]);
        let approx = nu_bruteforce(&a, 100_000, 7);
        assert!(approx >= 3.0 - 1e-12);
        assert!(approx <= 3.0 * 1.02);
    }

    #[test]
    fn bruteforce_exact_for_single_row() {
        let a = matrix(&[&[1.0, 0.0]]);
        assert!((nu_bruteforce(&a, 3, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn profile_of_broughton_witness_decays() {
        let f = parse_poly("y*(x^2*y^2+3*x*y+3)", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let path = parse_arc("t, -1/t").unwrap();
        let schedule = geometric_schedule(10.0, 10.0, 6);
        let profile = rabier_profile(&map, &path, &schedule).unwrap();
        let last = profile.last().unwrap();
        assert!(last.product < 1e-5, "product {}", last.product);
        assert!(last.f_value[0].abs() < 1e-5);
        let evidence = kinfty_evidence(&profile, 1e-3, 3);
        assert!(evidence.pass);
        assert!(evidence.limit.unwrap()[0].abs() < 1e-5);
    }

    #[test]
    fn profile_of_linear_map_gives_no_evidence() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let path = parse_arc("t, 0").unwrap();
        let schedule = geometric_schedule(10.0, 10.0, 5);
        let profile = rabier_profile(&map, &path, &schedule).unwrap();
        // nu is identically 1, so the product grows like |x|
        assert!(profile.last().unwrap().product > 1e4);
        assert!(!kinfty_evidence(&profile, 1e-3, 3).pass);
    }

    #[test]
    fn constant_path_fails_norm_growth() {
        // f with vanishing gradient at the sample point would otherwise pass
        let f = parse_poly("x^2+y^2", &["x", "y", "z"]).unwrap();
        let map = PolyMap::new(3, vec![f]).unwrap();
        let path = parse_arc("1, 1, 0").unwrap();
        let schedule = geometric_schedule(10.0, 10.0, 5);
        let profile = rabier_profile(&map, &path, &schedule).unwrap();
        let evidence = kinfty_evidence(&profile, 1.0, 3);
        assert!(!evidence.pass);
        assert!(!evidence.norm_growing);
    }

    #[test]
    fn schedule_must_increase() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let path = parse_arc("t, 0").unwrap();
        assert!(rabier_profile(&map, &path, &[10.0, 10.0]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let f = parse_poly("x", &["x", "y"]).unwrap();
        let map = PolyMap::new(2, vec![f]).unwrap();
        let path = parse_arc("t, 0").unwrap();
        let profile = rabier_profile(&map, &path, &[10.0, 100.0, 1000.0]).unwrap();
        let csv = profile_to_csv(&profile, 1);
        assert!(csv.starts_with("t,norm_x,nu,product,f_1\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
