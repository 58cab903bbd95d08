//! Brute-force reference for the inner minimization: a dense grid over the
//! V-ball followed by repeated zoomed subgrids. Shares no code with the solver.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::funcmodel::Problem;
use crate::uvframe::UVFrame;

pub const ORACLE_GRID_N: usize = 2001;
const ZOOM_N: usize = 21;
const ZOOM_STOP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub argmin: DVector<f64>,
    pub evaluations: usize,
}

fn scan(
    lo: &[f64],
    spacing: f64,
    n: usize,
    eps: f64,
    eval: &mut dyn FnMut(&[f64]) -> f64,
) -> (f64, Vec<f64>, usize) {
    let p = lo.len();
    let mut best = (f64::INFINITY, vec![0.0; p]);
    let mut count = 0;
    let mut idx = vec![0usize; p];
    let mut v = vec![0.0; p];
    loop {
        for d in 0..p {
            v[d] = lo[d] + spacing * idx[d] as f64;
        }
        if v.iter().map(|t| t * t).sum::<f64>().sqrt() <= eps {
            let fv = eval(&v);
            count += 1;
            if fv < best.0 {
                best = (fv, v.clone());
            }
        }
        // Odometer increment, last coordinate fastest.
        let mut d = p;
        loop {
            if d == 0 {
                return (best.0, best.1, count);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// `min_{||v|| <= eps} f(xbar + U u + V v) - <gbar, V v>` by exhaustive search.
pub fn dense_grid_minimize(
    problem: &Problem,
    frame: &UVFrame,
    u: &DVector<f64>,
    gbar: &DVector<f64>,
    eps: f64,
    grid_n: usize,
) -> Result<OracleResult> {
    let p = frame.dim_v();
    if p > 3 {
        return Err(Error::DimensionTooLarge { dim_v: p });
    }
    let n = problem.dim;
    let base = &frame.origin + frame.u.embed(u);
    let vb = frame.v.basis().clone();
    let gv = frame.v_coords(gbar);
    let mut x = DVector::zeros(n);
    let mut eval = |v: &[f64]| {
        x.copy_from(&base);
        let mut lin = 0.0;
        for (j, &vj) in v.iter().enumerate() {
            for i in 0..n {
                x[i] += vb[(i, j)] * vj;
            }
            lin += gv[j] * vj;
        }
        problem.eval(&x) - lin
    };
    if p == 0 {
        return Ok(OracleResult { value: eval(&[]), argmin: DVector::zeros(0), evaluations: 1 });
    }
    let spacing = 2.0 * eps / (grid_n - 1) as f64;
    let (mut value, mut arg, mut evaluations) = scan(&vec![-eps; p], spacing, grid_n, eps, &mut eval);
    let mut h = spacing;
    while h > ZOOM_STOP {
        let half = 2.0 * h;
        let new_h = 2.0 * half / (ZOOM_N - 1) as f64;
        let lo: Vec<f64> = arg.iter().map(|a| a - half).collect();
        let (fv, v, c) = scan(&lo, new_h, ZOOM_N, eps, &mut eval);
        evaluations += c;
        if fv <= value {
            value = fv;
            arg = v;
        }
        h = new_h;
    }
    Ok(OracleResult { value, argmin: DVector::from_vec(arg), evaluations })
}
