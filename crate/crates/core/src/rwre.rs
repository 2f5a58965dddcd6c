//! Random walk among the conductances `c(x, y) = e^{β(h_x + h_y)}` of a field.

use crate::error::{Error, Result};
use crate::harness::estimate::{estimate, least_squares, EstimatorSummary, LinearFit};
use crate::harness::seeds::replica_rng;
use crate::lattice::{LatticeDomain, Vertex};
use crate::linalg::{Ordering, SkylineCholesky, SymSparse};
use crate::network::{solve_potential, Network};
use crate::sampler::{Field, PinnedSampler};
use nalgebra::{DMatrix, DVector};
use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::WeightedAliasIndex;
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// Largest state space accepted by the dense LU routes.
pub const MAX_DENSE_STATES: usize = 4096;

/// `β̃_c = √(π/2)`.
pub fn beta_tilde_c() -> f64 {
    (std::f64::consts::PI / 2.0).sqrt()
}

/// `θ(β) = 2 + 2(β/β̃_c)²` for `β ≤ β̃_c` and `4β/β̃_c` above.
pub fn theta_exponent(beta: f64) -> f64 {
    let r = beta / beta_tilde_c();
    if r <= 1.0 {
        2.0 + 2.0 * r * r
    } else {
        4.0 * r
    }
}

/// Transition kernel `P(x, y) = c(x, y)/π(x)` of the walk on a network, with its reversible
/// measure `π(x) = Σ_y c(x, y)`.
#[derive(Clone, Debug)]
pub struct WalkKernel {
    network: Network,
    pi: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    field: Option<(Vec<f64>, f64)>,
}

impl WalkKernel {
    pub fn from_network(network: Network) -> Self {
        let n = network.vertex_count();
        let pi: Vec<f64> = (0..n).map(|x| network.pi(x)).collect();
        let rows = (0..n)
            .map(|x| {
                let mut row: Vec<(usize, f64)> = Vec::new();
                for &e in network.incident(x) {
                    let y = network.edge(e).other(x);
                    let p = network.edge(e).c / pi[x];
                    match row.iter_mut().find(|(z, _)| *z == y) {
                        Some(entry) => entry.1 += p,
                        None => row.push((y, p)),
                    }
                }
                row.sort_unstable_by_key(|r| r.0);
                row
            })
            .collect();
        WalkKernel { network, pi, rows, field: None }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn total_pi(&self) -> f64 {
        self.pi.iter().sum()
    }

    /// Nonzero entries `(y, P(x, y))` of row `x`, sorted by `y`.
    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.rows[x].iter().find(|r| r.0 == y).map_or(0.0, |r| r.1)
    }

    /// `max_x |Σ_y P(x, y) − 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().map(|p| p.1).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max |π(x)P(x, y) − π(y)P(y, x)| / π(x)P(x, y)`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                let a = self.pi[x] * p;
                let b = self.pi[y] * self.transition(y, x);
                worst = worst.max((a - b).abs() / a);
            }
        }
        worst
    }

    /// `max |P(x, y) − e^{β(h_y − h_x)} / Σ_z e^{β(h_z − h_x)}|` for kernels built from a field.
    pub fn difference_form_residual(&self) -> Option<f64> {
        let (h, beta) = self.field.as_ref()?;
        let mut worst = 0.0f64;
        for (x, row) in self.rows.iter().enumerate() {
            let z: f64 = row.iter().map(|&(y, _)| (beta * (h[y] - h[x])).exp()).sum();
            for &(y, p) in row {
                worst = worst.max((p - (beta * (h[y] - h[x])).exp() / z).abs());
            }
        }
        Some(worst)
    }

    fn alias_tables(&self) -> Result<Vec<WeightedAliasIndex<f64>>> {
        self.rows
            .iter()
            .map(|r| {
                WeightedAliasIndex::new(r.iter().map(|p| p.1).collect())
                    .map_err(|e| Error::InvalidArgument(format!("transition row: {e}")))
            })
            .collect()
    }

    /// Dense `I − P` restricted to `region`, for the LU routes.
    fn dense_generator(&self, region: &[bool]) -> Result<(Vec<usize>, DMatrix<f64>)> {
        let states: Vec<usize> = (0..self.len()).filter(|&x| region[x]).collect();
        if states.len() > MAX_DENSE_STATES {
            return Err(Error::InvalidSize(format!("{} states exceed {MAX_DENSE_STATES}", states.len())));
        }
        let mut pos = vec![usize::MAX; self.len()];
        for (k, &x) in states.iter().enumerate() {
            pos[x] = k;
        }
        let mut m = DMatrix::identity(states.len(), states.len());
        for (k, &x) in states.iter().enumerate() {
            for &(y, p) in &self.rows[x] {
                if region[y] {
                    m[(k, pos[y])] -= p;
                }
            }
        }
        Ok((states, m))
    }
}

/// Kernel of the walk in the landscape `field` at inverse temperature `β`.
pub fn build_kernel(field: &Field, beta: f64) -> Result<WalkKernel> {
    let mut k = WalkKernel::from_network(Network::from_field(field, beta)?);
    k.field = Some((field.values().to_vec(), beta));
    Ok(k)
}

fn region_mask(kernel: &WalkKernel, region: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; kernel.len()];
    for &x in region {
        if x >= mask.len() {
            return Err(Error::InvalidArgument(format!("vertex {x} out of range")));
        }
        mask[x] = true;
    }
    if mask.iter().all(|&m| m) {
        return Err(Error::InvalidArgument("region is the whole state space".into()));
    }
    Ok(mask)
}

/// `E^x τ_{Aᶜ}` for every `x` (zero off `A`) by LU factorization of `(I − P_A) t = 1`.
pub fn exit_times_lu(kernel: &WalkKernel, region: &[usize]) -> Result<Vec<f64>> {
    let mask = region_mask(kernel, region)?;
    let (states, m) = kernel.dense_generator(&mask)?;
    let t = m
        .lu()
        .solve(&DVector::from_element(states.len(), 1.0))
        .ok_or_else(|| Error::Solver("singular exit-time system".into()))?;
    let mut out = vec![0.0; kernel.len()];
    for (k, &x) in states.iter().enumerate() {
        out[x] = t[k];
    }
    Ok(out)
}

/// `E^x τ_{Aᶜ}` for every `x` (zero off `A`) from the symmetric system
/// `π(x)t(x) − Σ_{y∈A} c(x, y)t(y) = π(x)` by envelope Cholesky.
pub fn exit_times(kernel: &WalkKernel, region: &[usize]) -> Result<Vec<f64>> {
    let mask = region_mask(kernel, region)?;
    let states: Vec<usize> = (0..kernel.len()).filter(|&x| mask[x]).collect();
    let mut pos = vec![usize::MAX; kernel.len()];
    for (k, &x) in states.iter().enumerate() {
        pos[x] = k;
    }
    let net = kernel.network();
    let mut m = SymSparse::new(states.len());
    for (k, &x) in states.iter().enumerate() {
        m.add_diag(k, kernel.pi[x]);
    }
    for e in net.edges() {
        if mask[e.u] && mask[e.v] && e.u != e.v {
            m.add_off(pos[e.u], pos[e.v], -e.c);
        }
    }
    let rhs: Vec<f64> = states.iter().map(|&x| kernel.pi[x]).collect();
    let t = SkylineCholesky::factor(&m, Ordering::ReverseCuthillMcKee)?.solve(&rhs);
    let mut out = vec![0.0; kernel.len()];
    for (k, &x) in states.iter().enumerate() {
        out[x] = t[k];
    }
    Ok(out)
}

/// Hitting-time identity `E^x τ_{Aᶜ} = R_eff(x, Aᶜ) Σ_y π(y) φ(y)` with
/// `φ(y) = P^y(τ_x < τ_{Aᶜ})`, together with the bound `R_eff(x, Aᶜ) π(A)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HittingIdentity {
    pub exit_time: f64,
    pub resistance: f64,
    pub bound: f64,
}

pub fn exit_time_via_resistance(kernel: &WalkKernel, x: usize, region: &[usize]) -> Result<HittingIdentity> {
    let mask = region_mask(kernel, region)?;
    if !mask[x] {
        return Err(Error::InvalidArgument("start must lie in the region".into()));
    }
    let outside: Vec<usize> = (0..kernel.len()).filter(|&y| !mask[y]).collect();
    let sol = solve_potential(kernel.network(), &[x], &outside)?;
    let resistance = 1.0 / sol.energy;
    let mass: f64 = sol.potential.iter().zip(&kernel.pi).map(|(f, p)| f * p).sum();
    let pi_a: f64 = (0..kernel.len()).filter(|&y| mask[y]).map(|y| kernel.pi[y]).sum();
    Ok(HittingIdentity { exit_time: resistance * mass, resistance, bound: resistance * pi_a })
}

/// `E^u τ_v` by LU.
pub fn hitting_time(kernel: &WalkKernel, u: usize, v: usize) -> Result<f64> {
    let region: Vec<usize> = (0..kernel.len()).filter(|&x| x != v).collect();
    Ok(exit_times_lu(kernel, &region)?[u])
}

/// `(E^u τ_v + E^v τ_u, R_eff(u, v) π(V))`.
pub fn commute_time(kernel: &WalkKernel, u: usize, v: usize) -> Result<(f64, f64)> {
    if u == v {
        return Err(Error::InvalidArgument("terminals coincide".into()));
    }
    let lhs = hitting_time(kernel, u, v)? + hitting_time(kernel, v, u)?;
    let sol = solve_potential(kernel.network(), &[u], &[v])?;
    Ok((lhs, kernel.total_pi() / sol.energy))
}

/// `P^x(X_t = x)` for `t = 0..=t_max` by propagating the distribution over the sparse kernel.
pub fn heat_kernel(kernel: &WalkKernel, x: usize, t_max: usize) -> Vec<f64> {
    let mut mu = vec![0.0; kernel.len()];
    let mut next = vec![0.0; kernel.len()];
    mu[x] = 1.0;
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(1.0);
    for _ in 0..t_max {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (z, &m) in mu.iter().enumerate() {
            if m != 0.0 {
                for &(y, p) in &kernel.rows[z] {
                    next[y] += m * p;
                }
            }
        }
        std::mem::swap(&mut mu, &mut next);
        out.push(mu[x]);
    }
    out
}

/// Indicators `1{X_t = x}` from `walks` independent walks of `t` steps.
pub fn heat_kernel_mc<R: Rng + ?Sized>(kernel: &WalkKernel, x: usize, t: usize, walks: usize, rng: &mut R) -> Result<Vec<f64>> {
    let alias = kernel.alias_tables()?;
    Ok((0..walks)
        .map(|_| {
            let mut z = x;
            for _ in 0..t {
                z = kernel.rows[z][alias[z].sample(rng)].0;
            }
            if z == x {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

/// Summary of one simulated trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct WalkSummary {
    pub start: usize,
    pub end: usize,
    pub steps: usize,
    /// First time the walk left the region, if it did.
    pub exit_time: Option<usize>,
    /// Visits to the start at times `t ≥ 1`.
    pub returns: usize,
    /// `|X_end − X_0|²` when the network carries lattice sites.
    pub displacement2: Option<f64>,
}

/// Runs the walk from `x` for at most `steps` steps, stopping on leaving `region` when given.
pub fn walk_simulate<R: Rng + ?Sized>(
    kernel: &WalkKernel,
    x: usize,
    steps: usize,
    region: Option<&[usize]>,
    rng: &mut R,
) -> Result<WalkSummary> {
    let alias = kernel.alias_tables()?;
    let mask = region.map(|r| region_mask(kernel, r)).transpose()?;
    Ok(walk_with(kernel, &alias, mask.as_deref(), x, steps, rng))
}

/// Runs `walks` independent trajectories, the `k`-th driven by stream `k` of `seed`.
pub fn walk_many(
    kernel: &WalkKernel,
    x: usize,
    steps: usize,
    region: Option<&[usize]>,
    walks: usize,
    seed: u64,
) -> Result<Vec<WalkSummary>> {
    let alias = kernel.alias_tables()?;
    let mask = region.map(|r| region_mask(kernel, r)).transpose()?;
    Ok((0..walks as u64)
        .into_par_iter()
        .map(|k| walk_with(kernel, &alias, mask.as_deref(), x, steps, &mut replica_rng(seed, k)))
        .collect())
}

fn walk_with<R: Rng + ?Sized>(
    kernel: &WalkKernel,
    alias: &[WeightedAliasIndex<f64>],
    mask: Option<&[bool]>,
    x: usize,
    steps: usize,
    rng: &mut R,
) -> WalkSummary {
    let mut z = x;
    let mut returns = 0;
    let mut exit_time = None;
    let mut taken = 0;
    for t in 1..=steps {
        z = kernel.rows[z][alias[z].sample(rng)].0;
        taken = t;
        if z == x {
            returns += 1;
        }
        if mask.is_some_and(|m| !m[z]) {
            exit_time = Some(t);
            break;
        }
    }
    let displacement2 = kernel.network().sites().map(|s| {
        let (a, b) = (s[x], s[z]);
        ((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as f64
    });
    WalkSummary { start: x, end: z, steps: taken, exit_time, returns, displacement2 }
}

/// Network on `{|x|∞ ≤ N + 1}` carrying `h` on `B(N)` and zero on the outer ring, with the
/// indices of `B(N)` and of the origin.
pub fn exit_landscape(field: &Field, beta: f64) -> Result<(WalkKernel, Vec<usize>, usize)> {
    let inner = field.domain();
    let (offset, side) = inner.box_frame().ok_or_else(|| Error::InvalidArgument("field must live on a box".into()))?;
    let outer = LatticeDomain::translated_box((offset.0 - 1, offset.1 - 1), side + 2)?;
    let mut h = vec![0.0; outer.len()];
    let mut region = Vec::with_capacity(inner.len());
    for (i, &v) in inner.vertices().iter().enumerate() {
        let j = outer.index_of(v).ok_or(Error::Containment)?;
        h[j] = field.values()[i];
        region.push(j);
    }
    let origin = outer.index_of((0, 0)).ok_or(Error::OutsideDomain(0, 0))?;
    let extended = Field::new(Arc::new(outer), h)?;
    Ok((build_kernel(&extended, beta)?, region, origin))
}

/// `E⁰ τ_{B(N)ᶜ}` averaged over pinned environments for each `N`, and the fitted slope of
/// `log E⁰τ` against `log N`.
#[derive(Clone, Debug, Serialize)]
pub struct ExitExponent {
    pub beta: f64,
    pub sizes: Vec<usize>,
    pub exit_times: Vec<EstimatorSummary>,
    pub fit: LinearFit,
    pub theta: f64,
}

/// Exit times from `B(N) = [−N, N]²` for the walk in the pinned field on `B(N)` (Dirichlet
/// outside), `envs` environments per size.
pub fn exit_time_exponent(beta: f64, sizes: &[usize], envs: usize, seed: u64) -> Result<ExitExponent> {
    if sizes.len() < 2 || envs == 0 {
        return Err(Error::InvalidArgument("need two sizes and one environment".into()));
    }
    let mut means = Vec::with_capacity(sizes.len());
    for (s, &n) in sizes.iter().enumerate() {
        let sampler = PinnedSampler::new(Arc::new(LatticeDomain::centered_box(n)?))?;
        let times: Vec<f64> = (0..envs as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = replica_rng(seed ^ ((s as u64 + 1) << 40), r);
                let field = sampler.sample(&mut rng);
                let (kernel, region, origin) = exit_landscape(&field, beta)?;
                Ok(exit_times(&kernel, &region)?[origin])
            })
            .collect::<Result<_>>()?;
        means.push(estimate(&times));
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|e| e.mean.ln()).collect();
    Ok(ExitExponent { beta, sizes: sizes.to_vec(), exit_times: means, fit: least_squares(&xs, &ys), theta: theta_exponent(beta) })
}

/// Index of `v` in a kernel built on lattice sites.
pub fn site_index(kernel: &WalkKernel, v: Vertex) -> Result<usize> {
    kernel.network().site_index(v).ok_or(Error::OutsideDomain(v.0, v.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_branches() {
        assert_eq!(theta_exponent(0.0), 2.0);
        let b = beta_tilde_c();
        assert!((theta_exponent(b) - 4.0).abs() < 1e-15);
        assert!((4.0 * b / b - 4.0).abs() < 1e-15);
        assert!((theta_exponent(2.0 * b) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn two_vertex_chain() {
        let k = WalkKernel::from_network(Network::new(2, vec![(0, 1, 3.0)]).unwrap());
        assert!((hitting_time(&k, 0, 1).unwrap() - 1.0).abs() < 1e-15);
        let id = exit_time_via_resistance(&k, 0, &[0]).unwrap();
        assert!((id.exit_time - 1.0).abs() < 1e-15);
        let (lhs, rhs) = commute_time(&k, 0, 1).unwrap();
        assert!((lhs - 2.0).abs() < 1e-15 && (rhs - 2.0).abs() < 1e-15);
        assert!(exit_times(&k, &[0, 1]).is_err());
    }

    #[test]
    fn three_vertex_path() {
        let k = WalkKernel::from_network(Network::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap());
        assert!((hitting_time(&k, 0, 2).unwrap() - 4.0).abs() < 1e-12);
        let (lhs, rhs) = commute_time(&k, 0, 2).unwrap();
        assert!((lhs - 8.0).abs() < 1e-12);
        assert!((rhs - 8.0).abs() < 1e-12);
    }

    #[test]
    fn heat_kernel_start() {
        let k = WalkKernel::from_network(Network::new(2, vec![(0, 1, 1.0)]).unwrap());
        let p = heat_kernel(&k, 0, 4);
        assert_eq!(p, vec![1.0, 0.0, 1.0, 0.0, 1.0]);
    }
}
