//! Grid-then-refine minimization over the V-ball `{v : ||v|| <= eps}`.

use nalgebra::{DMatrix, DVector};

use crate::funcmodel::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Grid points per V-dimension (bumped to the next odd number so `0` is a node).
    pub grid_n: usize,
    /// Pattern-search step at which refinement stops.
    pub refine_tol: f64,
    /// Points within this much of the best value are minimizers.
    pub value_tol: f64,
    /// Greedy clustering radius for the minimizer set.
    pub cluster_radius: f64,
    /// Most discrete local minima refined.
    pub max_seeds: usize,
    /// Kinks within this distance are snapped onto after refinement.
    pub snap_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_n: 41,
            refine_tol: 1e-8,
            value_tol: 1e-6,
            cluster_radius: 1e-4,
            max_seeds: 16,
            snap_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverLog {
    pub grid_n: usize,
    pub grid_points: usize,
    pub seeds: usize,
    pub refine_iterations: usize,
    pub final_step: f64,
}

/// One cluster of the minimizer set.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub representative: DVector<f64>,
    pub diameter: f64,
    pub value: f64,
    pub size: usize,
}

/// `v -> f(base + V v) - <gv, v>` on the ball of radius `eps`.
pub(crate) struct InnerObjective<'a> {
    pub problem: &'a Problem,
    pub base: DVector<f64>,
    pub vbasis: &'a DMatrix<f64>,
    pub gv: DVector<f64>,
    pub eps: f64,
}

impl InnerObjective<'_> {
    pub fn dim(&self) -> usize {
        self.vbasis.ncols()
    }

    pub fn value(&self, v: &DVector<f64>) -> f64 {
        let x = &self.base + self.vbasis * v;
        self.problem.eval(&x) - self.gv.dot(v)
    }

    fn feasible(&self, v: &DVector<f64>) -> bool {
        v.norm() <= self.eps + 1e-12
    }

    fn project_ball(&self, mut v: DVector<f64>) -> DVector<f64> {
        let norm = v.norm();
        if norm > self.eps {
            v *= self.eps / norm;
        }
        v
    }
}

/// Unsnapped, unclustered output of the solve.
pub(crate) struct RawSolve {
    pub best: f64,
    pub clusters: Vec<Cluster>,
    pub log: SolverLog,
}

fn offsets(p: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..p {
        out = out
            .into_iter()
            .flat_map(|o| {
                [-1i64, 0, 1].into_iter().map(move |d| {
                    let mut o = o.clone();
                    o.push(d);
                    o
                })
            })
            .collect();
    }
    out.retain(|o| o.iter().any(|&d| d != 0));
    out
}

fn pattern_search(
    obj: &InnerObjective<'_>,
    start: DVector<f64>,
    h0: f64,
    tol: f64,
    dirs: &[DVector<f64>],
) -> (DVector<f64>, f64, usize, f64) {
    let mut v = start;
    let mut fv = obj.value(&v);
    let mut step = h0;
    let mut iters = 0;
    while step >= tol && iters < 20_000 {
        let mut best: Option<(DVector<f64>, f64)> = None;
        for d in dirs {
            let cand = obj.project_ball(&v + d * step);
            let fc = obj.value(&cand);
            if fc < best.as_ref().map_or(fv, |b| b.1) {
                best = Some((cand, fc));
            }
        }
        match best {
            Some((c, fc)) => {
                v = c;
                fv = fc;
                iters += 1;
            }
            None => step *= 0.5,
        }
    }
    (v, fv, iters, step)
}

pub(crate) fn solve(obj: &InnerObjective<'_>, cfg: &SolverConfig) -> RawSolve {
    let p = obj.dim();
    let n = if cfg.grid_n % 2 == 0 { cfg.grid_n + 1 } else { cfg.grid_n.max(3) };
    let spacing = 2.0 * obj.eps / (n - 1) as f64;
    let total = n.pow(p as u32);

    // Values on the grid; `None` outside the ball.
    let mut values: Vec<Option<f64>> = vec![None; total];
    let mut nodes: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut idx = vec![0usize; p];
    for flat in 0..total {
        let mut rem = flat;
        for d in (0..p).rev() {
            idx[d] = rem % n;
            rem /= n;
        }
        let v = DVector::from_iterator(
            p,
            idx.iter().map(|&k| obj.eps * (2.0 * k as f64 / (n - 1) as f64 - 1.0)),
        );
        if v.norm() <= obj.eps {
            values[flat] = Some(obj.value(&v));
        }
        nodes.push(v);
    }
    let grid_points = values.iter().filter(|v| v.is_some()).count();

    let offs = offsets(p);
    let strides: Vec<usize> = (0..p).map(|d| n.pow((p - 1 - d) as u32)).collect();
    let mut seeds: Vec<(f64, usize)> = Vec::new();
    for flat in 0..total {
        let Some(fv) = values[flat] else { continue };
        let mut rem = flat;
        for d in (0..p).rev() {
            idx[d] = rem % n;
            rem /= n;
        }
        let is_min = offs.iter().all(|o| {
            let mut nb = 0usize;
            for d in 0..p {
                let k = idx[d] as i64 + o[d];
                if k < 0 || k >= n as i64 {
                    return true;
                }
                nb += k as usize * strides[d];
            }
            values[nb].is_none_or(|fn_| fn_ >= fv)
        });
        if is_min {
            seeds.push((fv, flat));
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    seeds.truncate(cfg.max_seeds.max(1));

    let dirs: Vec<DVector<f64>> =
        offs.iter().map(|o| DVector::from_iterator(p, o.iter().map(|&d| d as f64))).collect();
    let mut log = SolverLog { grid_n: n, grid_points, seeds: seeds.len(), final_step: spacing, ..Default::default() };
    let mut candidates: Vec<(DVector<f64>, f64)> = Vec::new();
    for &(_, flat) in &seeds {
        let (mut v, mut fv, iters, step) =
            pattern_search(obj, nodes[flat].clone(), spacing, cfg.refine_tol, &dirs);
        log.refine_iterations += iters;
        log.final_step = step;
        if let Some(z) = obj.problem.snap_to_stratum(&obj.base, obj.vbasis, &v, cfg.snap_tol) {
            let fz = obj.value(&z);
            if obj.feasible(&z) && fz <= fv + 1e-12 {
                v = z;
                fv = fz;
            }
        }
        candidates.push((v, fv));
    }
    let best_grid = values.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let best = candidates.iter().map(|c| c.1).fold(best_grid, f64::min);
    for flat in 0..total {
        if let Some(fv) = values[flat] {
            if fv <= best + cfg.value_tol {
                candidates.push((nodes[flat].clone(), fv));
            }
        }
    }
    candidates.retain(|c| c.1 <= best + cfg.value_tol);
    // Stable sort keeps refined points ahead of grid nodes at equal value.
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut groups: Vec<Vec<(DVector<f64>, f64)>> = Vec::new();
    for c in candidates {
        match groups.iter_mut().find(|g| (&g[0].0 - &c.0).norm() <= cfg.cluster_radius) {
            Some(g) => g.push(c),
            None => groups.push(vec![c]),
        }
    }
    let clusters = groups
        .into_iter()
        .map(|g| {
            let mut diameter: f64 = 0.0;
            for i in 0..g.len() {
                for j in (i + 1)..g.len() {
                    diameter = diameter.max((&g[i].0 - &g[j].0).norm());
                }
            }
            Cluster { representative: g[0].0.clone(), diameter, value: g[0].1, size: g.len() }
        })
        .collect();
    RawSolve { best, clusters, log }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_cover_the_neighbourhood() {
        assert_eq!(offsets(1).len(), 2);
        assert_eq!(offsets(2).len(), 8);
        assert_eq!(offsets(3).len(), 26);
    }
}
