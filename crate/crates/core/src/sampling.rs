//! Seeded low-discrepancy sampling.
//!
//! Points come from a Halton sequence with a Cranley-Patterson rotation drawn
//! from a ChaCha stream, so a `(seed, dim)` pair always produces the same
//! sequence.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    out
}

/// Rotated Halton sequence on the unit cube `[0, 1)^dim`.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self { shift, index: 1 }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let idx = self.index;
        self.index += 1;
        self.shift
            .iter()
            .zip(PRIMES.iter())
            .map(|(s, &p)| (radical_inverse(idx, p) + s).fract())
            .collect()
    }
}

/// Uniform-ish points in a closed Euclidean ball, by rejection from the cube.
#[derive(Debug, Clone)]
pub struct BallSampler {
    center: DVector<f64>,
    radius: f64,
    halton: Halton,
}

impl BallSampler {
    pub fn new(center: DVector<f64>, radius: f64, seed: u64) -> Self {
        let dim = center.len();
        Self { center, radius, halton: Halton::new(dim, seed) }
    }

    pub fn next_point(&mut self) -> DVector<f64> {
        let dim = self.center.len();
        if dim == 0 {
            return DVector::zeros(0);
        }
        loop {
            let p = self.halton.next_point();
            let z = DVector::from_iterator(dim, p.iter().map(|t| 2.0 * t - 1.0));
            if z.norm() <= 1.0 {
                return &self.center + z * self.radius;
            }
        }
    }

    pub fn take(&mut self, n: usize) -> Vec<DVector<f64>> {
        (0..n).map(|_| self.next_point()).collect()
    }
}

/// Unit directions obtained by normalizing ball samples.
pub fn unit_directions(dim: usize, n: usize, seed: u64) -> Vec<DVector<f64>> {
    if dim == 0 {
        return Vec::new();
    }
    let mut sampler = BallSampler::new(DVector::zeros(dim), 1.0, seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = sampler.next_point();
        let norm = z.norm();
        if norm > 1e-3 {
            out.push(z / norm);
        }
    }
    out
}

/// Tensor grid on `[-radius, radius]^dim` with `per_dim` points per axis, in
/// lexicographic order. `dim = 0` gives the single empty point.
pub fn cube_grid(dim: usize, radius: f64, per_dim: usize) -> Vec<DVector<f64>> {
    let ticks: Vec<f64> = if per_dim <= 1 {
        vec![0.0]
    } else {
        (0..per_dim).map(|k| radius * (2.0 * k as f64 / (per_dim - 1) as f64 - 1.0)).collect()
    };
    let mut out = vec![DVector::zeros(0)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                ticks.iter().map(move |&t| DVector::from_iterator(p.len() + 1, p.iter().cloned().chain([t])))
            })
            .collect();
    }
    out
}

/// Convex weights (summing to one) built from a cube point.
pub fn simplex_weights(point: &[f64], k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    // -ln(u) spacings give a uniform simplex sample.
    let raw: Vec<f64> = (0..k)
        .map(|i| {
            let t = point.get(i).copied().unwrap_or(0.5).clamp(1e-12, 1.0 - 1e-12);
            -t.ln()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_grid_is_symmetric() {
        let g = cube_grid(1, 0.2, 41);
        assert_eq!(g.len(), 41);
        assert_eq!(g[20][0], 0.0);
        assert!((g[0][0] + 0.2).abs() < 1e-15);
        assert_eq!(cube_grid(2, 1.0, 3).len(), 9);
        assert_eq!(cube_grid(0, 1.0, 5).len(), 1);
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = BallSampler::new(DVector::zeros(3), 0.5, 7);
        let mut b = BallSampler::new(DVector::zeros(3), 0.5, 7);
        for _ in 0..50 {
            assert_eq!(a.next_point(), b.next_point());
        }
    }

    #[test]
    fn ball_points_stay_inside() {
        let center = DVector::from_vec(vec![1.0, -2.0]);
        let mut s = BallSampler::new(center.clone(), 0.3, 0);
        for p in s.take(500) {
            assert!((p - &center).norm() <= 0.3 + 1e-15);
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let w = simplex_weights(&[0.1, 0.7, 0.4], 3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&x| x > 0.0));
    }
}
