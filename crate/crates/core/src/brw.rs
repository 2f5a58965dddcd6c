//! Gaussian branching random walk on the `b`-ary tree and its comparison with the field.
//!
//! A leaf `x = (x₁, …, x_n)` carries `φ_x = Σ_{k=0}^{n−1} Z_{(x₁,…,x_k)}` with iid standard
//! normal increments attached to the vertices of depth `0..n`. Leaves are indexed by the
//! base-`b` number with digits `x₁ − 1, …, x_n − 1`, most significant first.

use crate::error::{Error, Result};
use crate::harness::estimate::{estimate, EstimatorSummary};
use crate::harness::seeds::replica_rng;
use crate::lattice::Vertex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Largest leaf count accepted by the samplers.
pub const MAX_LEAVES: u64 = 1 << 28;

fn check_size(b: usize, n: usize) -> Result<()> {
    if b < 2 || n == 0 {
        return Err(Error::InvalidSize(format!("branching factor {b} and depth {n} must be at least 2 and 1")));
    }
    let leaves = (b as u64).checked_pow(n as u32).filter(|&l| l <= MAX_LEAVES);
    if leaves.is_none() {
        return Err(Error::InvalidSize(format!("{b}^{n} leaves exceed the limit {MAX_LEAVES}")));
    }
    Ok(())
}

/// One sample of the walk. Siblings at depth `n` share all increments, so only the values of
/// the `b^{n−1}` parents are stored.
#[derive(Clone, Debug)]
pub struct BrwSample {
    b: usize,
    n: usize,
    parents: Vec<f64>,
}

impl BrwSample {
    pub fn branching(&self) -> usize {
        self.b
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn leaf_count(&self) -> usize {
        self.parents.len() * self.b
    }

    /// `φ_x` for the leaf with index `i`.
    pub fn leaf(&self, i: usize) -> f64 {
        self.parents[i / self.b]
    }

    pub fn leaves(&self) -> Vec<f64> {
        (0..self.leaf_count()).map(|i| self.leaf(i)).collect()
    }

    pub fn max(&self) -> f64 {
        self.parents.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exact level-by-level sampler.
pub fn sample_brw<R: Rng + ?Sized>(b: usize, n: usize, rng: &mut R) -> Result<BrwSample> {
    check_size(b, n)?;
    let mut level = vec![rng.sample::<f64, _>(StandardNormal)];
    for _ in 1..n {
        let mut next = Vec::with_capacity(level.len() * b);
        for &v in &level {
            for _ in 0..b {
                next.push(v + rng.sample::<f64, _>(StandardNormal));
            }
        }
        level = next;
    }
    Ok(BrwSample { b, n, parents: level })
}

/// Maximum over the leaves without storing the sample.
pub fn sample_brw_max<R: Rng + ?Sized>(b: usize, n: usize, rng: &mut R) -> Result<f64> {
    check_size(b, n)?;
    let root: f64 = rng.sample(StandardNormal);
    Ok(root + subtree_max(b, n - 1, rng))
}

fn subtree_max<R: Rng + ?Sized>(b: usize, levels: usize, rng: &mut R) -> f64 {
    if levels == 0 {
        return 0.0;
    }
    (0..b)
        .map(|_| rng.sample::<f64, _>(StandardNormal) + subtree_max(b, levels - 1, rng))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Ultrametric distance `d_n(x, y) = n − (length of the common prefix)`.
pub fn tree_distance(b: usize, n: usize, x: usize, y: usize) -> usize {
    let mut common = 0;
    for k in (0..n).rev() {
        let p = b.pow(k as u32);
        if x / p != y / p {
            break;
        }
        common += 1;
    }
    n - common
}

/// `Cov(φ_x, φ_y) = min(n − d_n(x, y) + 1, n)`.
pub fn leaf_covariance(b: usize, n: usize, x: usize, y: usize) -> f64 {
    (n - tree_distance(b, n, x, y) + 1).min(n) as f64
}

/// `m̃_n = √(2 log b) n − 3/(2√(2 log b)) log n`.
pub fn m_tilde(b: usize, n: usize) -> f64 {
    let s = (2.0 * (b as f64).ln()).sqrt();
    s * n as f64 - 1.5 / s * (n as f64).ln()
}

/// Digits `x_i = 2σ_{n−i} + σ̃_{n−i} + 1` of the leaf of `T⁴` assigned to `x ∈ V_{2ⁿ}`, where
/// `x = (Σ σ_j 2ʲ, Σ σ̃_j 2ʲ)`.
pub fn embed_digits(x: Vertex, n: usize) -> Result<Vec<u8>> {
    let side = 1i64 << n;
    if x.0 <= 0 || x.1 <= 0 || x.0 >= side || x.1 >= side {
        return Err(Error::OutsideDomain(x.0, x.1));
    }
    Ok((1..=n)
        .map(|i| {
            let j = n - i;
            (2 * ((x.0 >> j) & 1) + ((x.1 >> j) & 1) + 1) as u8
        })
        .collect())
}

/// Leaf index in `L_n` of `T⁴` of the vertex `x ∈ V_{2ⁿ}`.
pub fn embed(x: Vertex, n: usize) -> Result<usize> {
    Ok(embed_digits(x, n)?.iter().fold(0usize, |acc, &d| 4 * acc + (d as usize - 1)))
}

/// `max |x − y| / 2^{d_n(x, y)}` over distinct pairs of `V_{2ⁿ}` under the embedding.
pub fn ultrametric_constant(n: usize) -> Result<f64> {
    let side = 1i64 << n;
    let pts: Vec<(Vertex, usize)> = (1..side)
        .flat_map(|y| (1..side).map(move |x| (x, y)))
        .map(|v| embed(v, n).map(|l| (v, l)))
        .collect::<Result<_>>()?;
    Ok(pts
        .par_iter()
        .map(|&(p, lp)| {
            pts.iter()
                .filter(|&&(q, _)| q != p)
                .map(|&(q, lq)| {
                    let d = tree_distance(4, n, lp, lq);
                    let e = (((p.0 - q.0).pow(2) + (p.1 - q.1).pow(2)) as f64).sqrt();
                    e / (1u64 << d) as f64
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// `P(B_t > 0 on [0, r] | B_0 = a, B_r = b) = 1 − e^{−2ab/r}` for standard Brownian motion.
pub fn ballot_bridge(a: f64, b: f64, r: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && r > 0.0) {
        return Err(Error::InvalidArgument("ballot bridge needs a, b, r > 0".into()));
    }
    Ok(-(-2.0 * a * b / r).exp_m1())
}

/// Monte Carlo estimate of [`ballot_bridge`] from discretized bridges, each weighted by the
/// exact probability that the bridge stays positive between consecutive grid points.
pub fn ballot_bridge_mc<R: Rng + ?Sized>(a: f64, b: f64, r: f64, paths: usize, steps: usize, rng: &mut R) -> Vec<f64> {
    let dt = r / steps as f64;
    let sd = dt.sqrt();
    let mut w = vec![0.0; steps + 1];
    (0..paths)
        .map(|_| {
            w[0] = 0.0;
            for k in 1..=steps {
                w[k] = w[k - 1] + sd * rng.sample::<f64, _>(StandardNormal);
            }
            let wr = w[steps];
            let mut p = 1.0;
            let mut prev = a;
            for (k, &wk) in w.iter().enumerate().skip(1) {
                let t = k as f64 * dt;
                let cur = a + wk - t / r * wr + t / r * (b - a);
                if cur <= 0.0 {
                    return 0.0;
                }
                p *= -(-2.0 * prev * cur / dt).exp_m1();
                prev = cur;
            }
            p
        })
        .collect()
}

/// Centered maximum of the walk over replicas.
#[derive(Clone, Debug, Serialize)]
pub struct BrwMaxStats {
    pub b: usize,
    pub n: usize,
    pub m_tilde: f64,
    pub max: EstimatorSummary,
    /// `E max − m̃_n`.
    pub centered_mean: f64,
    /// `(t, P(max > m̃_n + t))`.
    pub upper_tail: Vec<(f64, f64)>,
    /// `(t, P(max < m̃_n − t))`.
    pub lower_tail: Vec<(f64, f64)>,
}

pub fn brw_maxima(b: usize, n: usize, reps: usize, seed: u64) -> Result<Vec<f64>> {
    check_size(b, n)?;
    (0..reps as u64).into_par_iter().map(|r| sample_brw_max(b, n, &mut replica_rng(seed, r))).collect()
}

pub fn brw_max_stats(b: usize, n: usize, reps: usize, seed: u64) -> Result<BrwMaxStats> {
    let maxima = brw_maxima(b, n, reps, seed)?;
    Ok(brw_max_stats_from(b, n, &maxima))
}

pub fn brw_max_stats_from(b: usize, n: usize, maxima: &[f64]) -> BrwMaxStats {
    let mt = m_tilde(b, n);
    let max = estimate(maxima);
    let k = maxima.len() as f64;
    let ts: Vec<f64> = (0..=8).map(|i| 0.5 * i as f64).collect();
    let upper_tail = ts.iter().map(|&t| (t, maxima.iter().filter(|&&m| m > mt + t).count() as f64 / k)).collect();
    let lower_tail = ts.iter().map(|&t| (t, maxima.iter().filter(|&&m| m < mt - t).count() as f64 / k)).collect();
    BrwMaxStats { b, n, m_tilde: mt, centered_mean: max.mean - mt, max, upper_tail, lower_tail }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depth_one_leaves_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_brw(3, 1, &mut rng).unwrap();
        let l = s.leaves();
        assert_eq!(l.len(), 3);
        assert!(l.iter().all(|&v| v == l[0]));
    }

    #[test]
    fn digits_of_unit_vertex() {
        assert_eq!(embed_digits((1, 1), 1).unwrap(), vec![4]);
        assert_eq!(embed((1, 1), 1).unwrap(), 3);
        assert!(embed((0, 1), 1).is_err());
    }

    #[test]
    fn distances() {
        assert_eq!(tree_distance(2, 3, 0b000, 0b001), 1);
        assert_eq!(tree_distance(2, 3, 0b000, 0b100), 3);
        assert_eq!(tree_distance(2, 3, 5, 5), 0);
        assert_eq!(leaf_covariance(2, 3, 5, 5), 3.0);
        assert_eq!(leaf_covariance(2, 3, 0b000, 0b001), 3.0);
        assert_eq!(leaf_covariance(2, 3, 0b000, 0b100), 1.0);
    }

    #[test]
    fn size_guard() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_brw(2, 29, &mut rng).is_err());
        assert!(sample_brw(1, 3, &mut rng).is_err());
    }

    #[test]
    fn ballot_limits() {
        assert!(ballot_bridge(1e-12, 1.0, 1.0).unwrap() < 1e-11);
        assert!(ballot_bridge(0.0, 1.0, 1.0).is_err());
        assert!((ballot_bridge(1.0, 1.0, 5.0).unwrap() - (1.0 - (-0.4f64).exp())).abs() < 1e-15);
    }
}
