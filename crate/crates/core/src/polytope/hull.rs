//! Small-dimension conversions between vertex and facet descriptions.

use nalgebra::{DMatrix, DVector};

use super::subspace::Subspace;
use super::Facet;
use crate::error::{Error, Result};

/// Facets of `conv(points)` for affine dimension at most 3.
///
/// Directions orthogonal to the affine hull contribute a pair of opposite
/// facets each, so the result describes the hull as a subset of `R^n`.
pub fn facets_of_hull(points: &[DVector<f64>]) -> Result<Vec<Facet>> {
    let n = points[0].len();
    let g0 = &points[0];
    let diffs: Vec<DVector<f64>> = points.iter().map(|p| p - g0).collect();
    let aff = Subspace::span(n, &diffs);
    let ortho = aff.complement();
    let mut facets = Vec::new();
    for w in ortho.basis().column_iter() {
        let w = w.into_owned();
        let b = w.dot(g0);
        facets.push(Facet { normal: w.clone(), offset: b });
        facets.push(Facet { normal: -w, offset: -b });
    }
    let d = aff.dim();
    let ys: Vec<DVector<f64>> = diffs.iter().map(|p| aff.coords(p)).collect();
    let lift = |n_local: DVector<f64>, off_local: f64| -> Facet {
        let normal = aff.embed(&n_local);
        let offset = off_local + normal.dot(g0);
        Facet { normal, offset }
    };
    match d {
        0 => {}
        1 => {
            let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(y[0]), hi.max(y[0]))
            });
            facets.push(lift(DVector::from_element(1, 1.0), hi));
            facets.push(lift(DVector::from_element(1, -1.0), -lo));
        }
        2 => {
            let pts: Vec<[f64; 2]> = ys.iter().map(|y| [y[0], y[1]]).collect();
            let hull = convex_hull_2d(&pts);
            let k = hull.len();
            for i in 0..k {
                let a = hull[i];
                let b = hull[(i + 1) % k];
                // Counter-clockwise hull: outward normal is (dy, -dx).
                let nrm = [b[1] - a[1], a[0] - b[0]];
                let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1]).sqrt();
                let nl = DVector::from_vec(vec![nrm[0] / len, nrm[1] / len]);
                let off = nl[0] * a[0] + nl[1] * a[1];
                facets.push(lift(nl, off));
            }
        }
        3 => {
            let mut local: Vec<(DVector<f64>, f64)> = Vec::new();
            let scale = ys.iter().map(|y| y.norm()).fold(1.0, f64::max);
            let tol = 1e-10 * scale;
            for i in 0..ys.len() {
                for j in (i + 1)..ys.len() {
                    for k in (j + 1)..ys.len() {
                        let a = ys[j].clone() - &ys[i];
                        let b = ys[k].clone() - &ys[i];
                        let c = a.cross(&b);
                        let len = c.norm();
                        if len <= tol * scale {
                            continue;
                        }
                        let mut nl = c / len;
                        let mut off = nl.dot(&ys[i]);
                        let side: Vec<f64> = ys.iter().map(|y| nl.dot(y) - off).collect();
                        let above = side.iter().any(|&s| s > tol);
                        let below = side.iter().any(|&s| s < -tol);
                        if above && below {
                            continue;
                        }
                        if above {
                            nl = -nl;
                            off = -off;
                        }
                        let dup = local
                            .iter()
                            .any(|(m, o)| (m - &nl).norm() < 1e-9 && (o - off).abs() < 1e-9);
                        if !dup {
                            local.push((nl, off));
                        }
                    }
                }
            }
            for (nl, off) in local {
                facets.push(lift(nl, off));
            }
        }
        _ => return Err(Error::HullDimensionTooLarge { dim: d }),
    }
    Ok(facets)
}

/// Andrew's monotone chain; returns vertices counter-clockwise.
fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-14 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-14 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Vertices of `{x : a_i . x <= b_i}` by enumerating `n`-subsets of facets.
///
/// Intended for the handful of facets that describe subdifferentials in low
/// dimension; the cost is combinatorial in the facet count.
pub fn vertices_of_facets(facets: &[Facet], n: usize, tol: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    if n == 0 {
        out.push(DVector::zeros(0));
        return out;
    }
    for subset in combinations(facets.len(), n) {
        let a = DMatrix::from_fn(n, n, |r, c| facets[subset[r]].normal[c]);
        let b = DVector::from_fn(n, |r, _| facets[subset[r]].offset);
        let lu = a.clone().full_piv_lu();
        if !lu.is_invertible() {
            continue;
        }
        let det = lu.determinant().abs();
        if det < 1e-12 {
            continue;
        }
        let Some(x) = lu.solve(&b) else { continue };
        let feasible = facets.iter().all(|f| f.normal.dot(&x) <= f.offset + tol);
        if feasible && !out.iter().any(|y| (y - &x).norm() < 1e-9) {
            out.push(x);
        }
    }
    out
}

/// Maximizes `t` subject to `a_i . g + t * w_i <= b_i`.
///
/// Returns `None` when every weight vanishes (the objective is unbounded).
pub fn max_uniform_shrink(facets: &[Facet], weights: &[f64], n: usize) -> Option<f64> {
    if weights.iter().all(|&w| w <= 1e-14) {
        return None;
    }
    let dim = n + 1;
    let mut best = f64::NEG_INFINITY;
    for subset in combinations(facets.len(), dim) {
        let a = DMatrix::from_fn(dim, dim, |r, c| {
            let f = &facets[subset[r]];
            if c < n { f.normal[c] } else { weights[subset[r]] }
        });
        let b = DVector::from_fn(dim, |r, _| facets[subset[r]].offset);
        let lu = a.full_piv_lu();
        if lu.determinant().abs() < 1e-12 {
            continue;
        }
        let Some(x) = lu.solve(&b) else { continue };
        let g = x.rows(0, n).into_owned();
        let t = x[n];
        let feasible = facets
            .iter()
            .zip(weights)
            .all(|(f, w)| f.normal.dot(&g) + t * w <= f.offset + 1e-10);
        if feasible && t > best {
            best = t;
        }
    }
    Some(best)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + n - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
