//! Estimation of the bifurcation set at infinity of real polynomial maps.
//!
//! Given a polynomial map `f: R^n -> R^p` with `n > p >= 1`, the crate
//! estimates the nontrivial asymptotic nonregular values of `f` by three
//! cooperating pipelines:
//!
//! * a sphere-sweep detector that intersects the Milnor set of `(f, rho_a)`
//!   with growing spheres, clusters the bounded limits of `f`, and intersects
//!   the per-center results;
//! * an arc-space pipeline that generates polynomial condition systems for
//!   rational arcs escaping to infinity with bounded `f`, verifies candidate
//!   arcs exactly, and extracts their limit values;
//! * a Rabier-function audit that scores every candidate value by the decay
//!   of `|x| * nu(Df(x))` along the supporting paths.
//!
//! All symbolic computation is exact over arbitrary-precision rationals;
//! floating point enters only in the numeric audit and solver layers.

pub mod arcspace;
pub mod detector;
pub mod diffgeo;
pub mod error;
pub mod laurent;
pub mod parse;
pub mod poly;
pub mod rabier;
pub mod realsolve;

pub use error::{Error, Result};
pub use poly::{PolyMap, Rational, SparsePoly};
