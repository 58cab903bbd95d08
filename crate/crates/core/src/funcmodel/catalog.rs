//! The fixed six-problem catalog.
//!
//! | name | f                      | base point | notes                         |
//! |------|------------------------|------------|-------------------------------|
//! | P1   | x1^2 + abs(x2)         | (0, 0)     | convex                        |
//! | P2   | -x1^2/2 + abs(x2)      | (0, 0)     | nonconvex, modulus 1 is sharp |
//! | P3   | abs(x1) + abs(x2)      | (0, 0)     | U = {0}                       |
//! | P4   | x1^2 + x2^2            | (1, 0)     | V = {0}                       |
//! | P5   | x1^2 + max(2x2, -x2)   | (0, 0)     | subdifferential {0} x [-1, 2] |
//! | P6   | abs(x2 - x1^2)         | (0, 0)     | curved fast track, modulus 2  |

use std::sync::Arc;

use nalgebra::DVector;

use super::{Problem, Quadratic, Structure};
use crate::error::{Error, Result};

pub const NAMES: [&str; 6] = ["P1", "P2", "P3", "P4", "P5", "P6"];

/// Problems on which the fast-track batteries run (base point is a local minimizer).
pub const FAST_TRACK_PROBLEMS: [&str; 3] = ["P1", "P3", "P6"];

fn origin() -> DVector<f64> {
    DVector::zeros(2)
}

pub fn problem(name: &str) -> Result<Problem> {
    match name {
        "P1" => Problem::new(
            "P1",
            "abs-quad: x1^2 + |x2|",
            Structure::SmoothPlusAbs {
                smooth: Arc::new(Quadratic::diagonal(&[2.0, 0.0], &[0.0, 0.0], 0.0)),
                abs_coords: vec![1],
            },
            origin(),
            1.0,
            0.0,
            false,
        ),
        "P2" => Problem::new(
            "P2",
            "neg-quad-abs: -0.5 x1^2 + |x2|",
            Structure::SmoothPlusAbs {
                smooth: Arc::new(Quadratic::diagonal(&[-1.0, 0.0], &[0.0, 0.0], 0.0)),
                abs_coords: vec![1],
            },
            origin(),
            1.0,
            1.0,
            true,
        ),
        "P3" => Problem::new(
            "P3",
            "l1: |x1| + |x2|",
            Structure::SmoothPlusAbs { smooth: Arc::new(Quadratic::zero(2)), abs_coords: vec![0, 1] },
            origin(),
            1.0,
            0.0,
            false,
        ),
        "P4" => Problem::new(
            "P4",
            "smooth: x1^2 + x2^2 at (1, 0)",
            Structure::SmoothPlusAbs {
                smooth: Arc::new(Quadratic::diagonal(&[2.0, 2.0], &[0.0, 0.0], 0.0)),
                abs_coords: vec![],
            },
            DVector::from_vec(vec![1.0, 0.0]),
            1.0,
            0.0,
            false,
        ),
        "P5" => Problem::new(
            "P5",
            "asymmetric: x1^2 + max(2 x2, -x2)",
            Structure::FiniteMax(vec![
                Arc::new(Quadratic::diagonal(&[2.0, 0.0], &[0.0, 2.0], 0.0)),
                Arc::new(Quadratic::diagonal(&[2.0, 0.0], &[0.0, -1.0], 0.0)),
            ]),
            origin(),
            1.0,
            0.0,
            false,
        ),
        "P6" => Problem::new(
            "P6",
            "parabolic-valley: |x2 - x1^2|",
            Structure::FiniteMax(vec![
                Arc::new(Quadratic::diagonal(&[-2.0, 0.0], &[0.0, 1.0], 0.0)),
                Arc::new(Quadratic::diagonal(&[2.0, 0.0], &[0.0, -1.0], 0.0)),
            ]),
            origin(),
            1.0,
            2.0,
            true,
        ),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

pub fn all() -> Vec<Problem> {
    NAMES.iter().map(|n| problem(n).expect("catalog entries are valid")).collect()
}
