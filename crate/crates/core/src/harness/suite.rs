//! Acceptance suite: sixteen numerical checks, each reported as pass or fail with its measured
//! values.

use super::estimate::{estimate, least_squares, median};
use super::seeds::{mix, replica_rng, tagged_rng};
use crate::brw::brw_max_stats;
use crate::chaos::{alpha, gmc_measure, gmc_step, ChaosLattice};
use crate::error::Result;
use crate::extremes::{a_n, dekking_host_check, m_n, sample_maxima};
use crate::green::{calibrate_c0, green_matrix, green_via_kernel, potential_kernel, KernelTable, G};
use crate::lattice::{LatticeDomain, Vertex};
use crate::network::{
    cut_decompose, duality_check, effective_resistance, log_resistance_gradient, nash_williams, path_bound,
    path_decompose, random_grid, reduce_parallel, reduce_series, star_triangle, subnetwork_reduce, triangle_star,
    Network, Reduction,
};
use crate::rwre::{
    beta_tilde_c, build_kernel, commute_time, exit_time_exponent, exit_time_via_resistance, exit_times_lu,
    heat_kernel, site_index, WalkKernel,
};
use crate::sampler::{ConcentricDecomposition, Field, FieldSampler, GibbsMarkov};
use crate::spectral::BoxSpectral;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

/// Identifiers and titles of the checks.
pub const CRITERIA: [(usize, &str); 16] = [
    (1, "Green-Poisson residual"),
    (2, "potential kernel asymptotics"),
    (3, "Green function from the potential kernel"),
    (4, "Gibbs-Markov covariance identity"),
    (5, "sampler covariance"),
    (6, "concentric decomposition"),
    (7, "binding-field variance limit"),
    (8, "level-set exponent"),
    (9, "tightness of the maximum"),
    (10, "Dekking-Host inequality"),
    (11, "branching random walk centering"),
    (12, "electric identities"),
    (13, "log-resistance gradient bound"),
    (14, "hitting and commute identities"),
    (15, "chaos martingale"),
    (16, "walk exponents"),
];

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {} ({:.1} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.seconds,
            self.detail
        )
    }
}

/// Runs one check; errors inside a check are reported as failures.
pub fn run_criterion(id: usize, seed: u64) -> CriterionResult {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1).to_string();
    let t0 = Instant::now();
    let seed = mix(seed, &format!("criterion-{id}"));
    let out = match id {
        1 => green_poisson(),
        2 => kernel_asymptotics(),
        3 => kernel_representation(seed),
        4 => gibbs_markov(seed),
        5 => sampler_covariance(seed),
        6 => concentric(),
        7 => binding_variance(),
        8 => level_set_exponent(seed),
        9 => max_tightness(seed),
        10 => dekking_host(seed),
        11 => brw_centering(seed),
        12 => electric_identities(seed),
        13 => gradient_bound(seed),
        14 => hitting_identities(seed),
        15 => chaos_martingale(seed),
        16 => walk_exponents(seed),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, title, passed, detail, seconds: t0.elapsed().as_secs_f64() }
}

/// Runs the given checks in order (all of them when `ids` is empty).
pub fn run_suite(seed: u64, ids: &[usize]) -> Vec<CriterionResult> {
    let ids: Vec<usize> = if ids.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { ids.to_vec() };
    ids.into_iter().map(|id| run_criterion(id, seed)).collect()
}

type Outcome = Result<(bool, String)>;

fn green_poisson() -> Outcome {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for n in [4, 8, 16, 32, 64] {
        let g = green_matrix(&Arc::new(LatticeDomain::make_box(n)?))?;
        worst = worst.max(g.poisson_residual());
    }
    let secs = t0.elapsed().as_secs_f64();
    Ok((worst <= 1e-10 && secs < 30.0, format!("max residual {worst:.2e}, {secs:.1} s")))
}

fn kernel_asymptotics() -> Outcome {
    let c0 = calibrate_c0();
    let a0 = potential_kernel((0, 0));
    let a1 = potential_kernel((1, 0));
    let mut worst_ratio = 0.0f64;
    for r in [8i64, 16, 32, 64] {
        for x in [(r, 0), (0, r)] {
            let err = (potential_kernel(x) - G * (r as f64).ln() - c0).abs();
            worst_ratio = worst_ratio.max(err * (r * r) as f64 / 2.0);
        }
    }
    let pass = a0 == 0.0 && (a1 - 1.0).abs() <= 1e-6 && worst_ratio <= 1.0;
    Ok((pass, format!("a(0) = {a0}, |a(e1) - 1| = {:.2e}, max error / (2/|x|^2) = {worst_ratio:.3}", (a1 - 1.0).abs())))
}

fn kernel_representation(seed: u64) -> Outcome {
    let table = KernelTable::new();
    let mut worst = 0.0f64;
    for n in [4usize, 8, 16] {
        let d = Arc::new(LatticeDomain::make_box(n)?);
        let g = green_matrix(&d)?;
        let mut rng = replica_rng(seed, n as u64);
        for _ in 0..100 {
            let (i, j) = (rng.gen_range(0..d.len()), rng.gen_range(0..d.len()));
            let via = green_via_kernel(&d, d.vertex(i), d.vertex(j), &table)?;
            worst = worst.max((via - g.get(i, j)).abs());
        }
    }
    Ok((worst <= 1e-7, format!("max |difference| {worst:.2e} over 300 pairs")))
}

fn gibbs_markov(seed: u64) -> Outcome {
    let v = Arc::new(LatticeDomain::make_box(16)?);
    let quadrants = Arc::new(v.restrict(|p| p.0 != 8 && p.1 != 8)?);
    let punctured = Arc::new(v.restrict(|p| p != (5, 9))?);
    let mut rng = replica_rng(seed, 0);
    let mut id_res = 0.0f64;
    let mut harm = 0.0f64;
    for u in [quadrants, punctured] {
        let gm = GibbsMarkov::new(v.clone(), u)?;
        id_res = id_res.max(gm.identity_residual()?);
        harm = harm.max(gm.sample_binding(&mut rng)?.harmonicity_residual());
    }
    Ok((id_res <= 1e-9 && harm <= 1e-8, format!("identity residual {id_res:.2e}, harmonicity residual {harm:.2e}")))
}

fn sampler_covariance(seed: u64) -> Outcome {
    let d = Arc::new(LatticeDomain::make_box(8)?);
    let g = green_matrix(&d)?;
    let sampler = FieldSampler::new(d.clone())?;
    let n = d.len();
    let reps = 100_000u64;
    let chunks = 100u64;
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; n * n];
            for r in (c * reps / chunks)..((c + 1) * reps / chunks) {
                let h = sampler.sample_values(&mut replica_rng(seed, r));
                for i in 0..n {
                    for j in i..n {
                        acc[i * n + j] += h[i] * h[j];
                    }
                }
            }
            acc
        })
        .reduce(|| vec![0.0; n * n], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let (mut inside, mut total) = (0usize, 0usize);
    for i in 0..n {
        for j in i..n {
            let emp = sums[i * n + j] / reps as f64;
            let se = ((g.get(i, i) * g.get(j, j) + g.get(i, j).powi(2)) / reps as f64).sqrt();
            total += 1;
            if (emp - g.get(i, j)).abs() <= 3.0 * se {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    Ok((frac >= 0.99, format!("{inside}/{total} entries within 3 s.e. ({:.2}%)", 100.0 * frac)))
}

fn concentric() -> Outcome {
    let cd = ConcentricDecomposition::new(Arc::new(LatticeDomain::centered_box(128)?))?;
    let pts: Vec<Vertex> =
        vec![(0, 0), (1, 0), (3, 5), (-7, 2), (20, -30), (64, 64), (-100, 90), (127, 0), (0, -128), (50, 51), (-3, -3), (15, 16)];
    let cov = cd.layer_sum_covariance(&pts)?;
    let solver = crate::green::DirichletSolver::new(cd.outer())?;
    let mut worst = 0.0f64;
    for (j, &p) in pts.iter().enumerate() {
        let col = solver.green_column(cd.outer().index_of(p).unwrap_or(0));
        for (i, &q) in pts.iter().enumerate() {
            worst = worst.max((col[cd.outer().index_of(q).unwrap_or(0)] - cov[(i, j)]).abs());
        }
    }
    let big = ConcentricDecomposition::new(Arc::new(LatticeDomain::centered_box(512)?))?;
    let var = big.layer(4)?.var_phi0();
    let target = G * 2f64.ln();
    let pass = cd.depth() == 6 && big.depth() == 8 && worst <= 1e-8 && (var - target).abs() <= 0.05;
    Ok((pass, format!("n = 6 covariance error {worst:.2e}; Var phi_4(0) = {var:.5} at n = 8 vs g log 2 = {target:.5}")))
}

fn center_green(k: usize) -> f64 {
    let m = 2 * k + 2;
    BoxSpectral::new(m).green_entry((k + 1, k + 1), (k + 1, k + 1))
}

fn binding_variance() -> Outcome {
    let diff = center_green(256) - center_green(128);
    let target = G * 2f64.ln();
    Ok(((diff - target).abs() <= 0.02, format!("G_B(256)(0,0) - G_B(128)(0,0) = {diff:.5}, g log 2 = {target:.5}")))
}

fn level_set_exponent(seed: u64) -> Outcome {
    let sizes = [64usize, 128, 256, 512];
    let lambdas = [0.2, 0.4];
    let reps = 200u64;
    let mut means = vec![Vec::new(); lambdas.len()];
    for &n in &sizes {
        let sampler = FieldSampler::new(Arc::new(LatticeDomain::make_box(n)?))?;
        let thresholds: Vec<f64> = lambdas.iter().map(|&l| a_n(n as f64, l)).collect();
        let counts: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let h = sampler.sample_values(&mut replica_rng(seed ^ n as u64, r));
                thresholds.iter().map(|&t| h.iter().filter(|&&v| v >= t).count() as f64).collect()
            })
            .collect();
        for (l, m) in means.iter_mut().enumerate() {
            let c: Vec<f64> = counts.iter().map(|c| c[l]).collect();
            m.push(estimate(&c).mean);
        }
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for (l, &lambda) in lambdas.iter().enumerate() {
        let ys: Vec<f64> = means[l].iter().map(|m| m.ln()).collect();
        let slope = least_squares(&xs, &ys).slope;
        let target = 2.0 * (1.0 - lambda * lambda);
        pass &= (slope - target).abs() <= 0.15;
        detail.push(format!("lambda {lambda}: slope {slope:.4} vs {target:.2}"));
    }
    Ok((pass, detail.join("; ")))
}

fn max_tightness(seed: u64) -> Outcome {
    let mut centered = Vec::new();
    for n in [64usize, 128, 256, 512] {
        let d = Arc::new(LatticeDomain::make_box(n)?);
        let maxima: Vec<f64> = sample_maxima(&d, 1000, seed ^ n as u64)?.into_iter().map(|p| p.0).collect();
        centered.push(median(&maxima).unwrap_or(f64::NAN) - m_n(n as f64));
    }
    let lo = centered.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = centered.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let list: Vec<String> = centered.iter().map(|c| format!("{c:.3}")).collect();
    Ok((hi - lo <= 4.0, format!("median(M_N) - m_N = [{}], window width {:.3}", list.join(", "), hi - lo)))
}

fn dekking_host(seed: u64) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [32usize, 64, 128] {
        let draw = |m: usize| -> Result<Vec<f64>> {
            let d = Arc::new(LatticeDomain::make_box(m)?);
            Ok(sample_maxima(&d, 1000, mix(seed, &format!("dh-{n}-{m}")))?.into_iter().map(|p| p.0).collect())
        };
        let dh = dekking_host_check(&draw(n)?, &draw(2 * n)?)?;
        pass &= dh.holds(3.0);
        detail.push(format!("N = {n}: {:.3} <= {:.3} (se {:.3})", dh.lhs, dh.rhs, dh.se()));
    }
    Ok((pass, detail.join("; ")))
}

fn brw_centering(seed: u64) -> Outcome {
    let cases: Vec<(usize, usize)> = (8..=18).map(|n| (2, n)).chain((5..=10).map(|n| (4, n))).collect();
    let mut worst = 0.0f64;
    let mut at = (0, 0);
    for &(b, n) in &cases {
        let s = brw_max_stats(b, n, 1000, mix(seed, &format!("brw-{b}-{n}")))?;
        if s.centered_mean.abs() > worst.abs() {
            worst = s.centered_mean;
            at = (b, n);
        }
    }
    Ok((worst.abs() <= 2.0, format!("largest |E max - m~| = {:.3} at b = {}, n = {}", worst.abs(), at.0, at.1)))
}

/// Largest absolute change of `R_eff` over the given pairs of original vertices.
fn reduction_error(net: &Network, red: &Reduction, pairs: &[(usize, usize)]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(a, b) in pairs {
        let (Some(ra), Some(rb)) = (red.image(a), red.image(b)) else { continue };
        let before = effective_resistance(net, &[a], &[b])?.0;
        let after = effective_resistance(&red.network, &[ra], &[rb])?.0;
        worst = worst.max((before - after).abs());
    }
    Ok(worst)
}

fn all_pairs(vs: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            out.push((a, b));
        }
    }
    out
}

/// Edges joining consecutive breadth-first shells around `u`, up to the shell of `v`.
fn shell_cutsets(net: &Network, u: usize, v: usize) -> Vec<Vec<usize>> {
    let mut dist = vec![usize::MAX; net.vertex_count()];
    dist[u] = 0;
    let mut q = VecDeque::from([u]);
    while let Some(x) = q.pop_front() {
        for &e in net.incident(x) {
            let y = net.edge(e).other(x);
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                q.push_back(y);
            }
        }
    }
    let mut cuts = vec![Vec::new(); dist[v]];
    for (k, e) in net.edges().iter().enumerate() {
        let (a, b) = (dist[e.u].min(dist[e.v]), dist[e.u].max(dist[e.v]));
        if b == a + 1 && a < dist[v] {
            cuts[a].push(k);
        }
    }
    cuts
}

/// Greedy family of up to `count` edge-disjoint paths from `u` to `v`.
fn disjoint_paths(net: &Network, u: usize, v: usize, count: usize) -> Vec<Vec<usize>> {
    let mut used = vec![false; net.edge_count()];
    let mut paths = Vec::new();
    for _ in 0..count {
        let mut via = vec![usize::MAX; net.vertex_count()];
        let mut seen = vec![false; net.vertex_count()];
        seen[u] = true;
        let mut q = VecDeque::from([u]);
        while let Some(x) = q.pop_front() {
            for &e in net.incident(x) {
                let y = net.edge(e).other(x);
                if !used[e] && !seen[y] {
                    seen[y] = true;
                    via[y] = e;
                    q.push_back(y);
                }
            }
        }
        if !seen[v] {
            break;
        }
        let mut path = Vec::new();
        let mut y = v;
        while y != u {
            let e = via[y];
            used[e] = true;
            path.push(e);
            y = net.edge(e).other(y);
        }
        path.reverse();
        paths.push(path);
    }
    paths
}

#[derive(Default)]
struct ElectricWorst {
    duality: f64,
    reduction: f64,
    path: f64,
    cut: f64,
    budget: f64,
    nw_slack: f64,
    pb_slack: f64,
}

fn electric_one(net: &Network, rng: &mut impl Rng, w: &mut ElectricWorst) -> Result<()> {
    let n = net.vertex_count();
    let (u, v) = (0, n - 1);
    w.duality = w.duality.max(duality_check(net, u, v)?.residual);
    let (r, sol) = effective_resistance(net, &[u], &[v])?;

    let mut sample: Vec<usize> = (0..n).collect();
    sample.shuffle(rng);
    sample.truncate(8);
    for x in [u, v] {
        if !sample.contains(&x) {
            sample.push(x);
        }
    }
    let pairs = all_pairs(&sample);
    if let Some(site) = (0..n).find(|&x| net.degree(x) == 2 && x != u && x != v) {
        w.reduction = w.reduction.max(reduction_error(net, &reduce_series(net, site)?, &pairs)?);
    }
    let e = net.edge(rng.gen_range(0..net.edge_count()));
    let mut doubled: Vec<(usize, usize, f64)> = net.edges().iter().map(|e| (e.u, e.v, e.c)).collect();
    doubled.push((e.u, e.v, rng.gen_range(0.5..2.0)));
    let doubled = Network::new(n, doubled)?;
    w.reduction = w.reduction.max(reduction_error(&doubled, &reduce_parallel(&doubled, e.u, e.v)?, &pairs)?);
    let star = (0..n).find(|&x| {
        x != u && x != v && net.degree(x) == 3 && {
            let mut nb: Vec<usize> = net.incident(x).iter().map(|&e| net.edge(e).other(x)).collect();
            nb.sort_unstable();
            nb.dedup();
            nb.len() == 3
        }
    });
    if let Some(site) = star {
        let tri = star_triangle(net, site)?;
        w.reduction = w.reduction.max(reduction_error(net, &tri, &pairs)?);
        let nb: Vec<usize> = net.incident(site).iter().map(|&e| net.edge(e).other(site)).collect();
        let img: Vec<usize> = nb.iter().filter_map(|&x| tri.image(x)).collect();
        let back = triangle_star(&tri.network, (img[0], img[1], img[2]))?;
        let tri_pairs: Vec<(usize, usize)> = pairs.iter().filter_map(|&(a, b)| Some((tri.image(a)?, tri.image(b)?))).collect();
        w.reduction = w.reduction.max(reduction_error(&tri.network, &back, &tri_pairs)?);
    }
    let schur = subnetwork_reduce(net, &sample)?;
    w.reduction = w.reduction.max(reduction_error(net, &schur, &pairs)?);

    let p = path_decompose(net, &sol, u, v)?;
    w.path = w.path.max((p.reconstruct() - r).abs() / r);
    let c = cut_decompose(net, &sol, u, v)?;
    w.cut = w.cut.max((c.reconstruct() - 1.0 / r).abs() * r);
    w.budget = w.budget.max(p.budget_violation(net)).max(c.budget_violation(net));

    let nw = nash_williams(net, &shell_cutsets(net, u, v), &[u], &[v])?;
    w.nw_slack = w.nw_slack.min(nw - 1.0 / r + 1e-10);
    let pb = path_bound(net, &disjoint_paths(net, u, v, 3), u, v)?;
    w.pb_slack = w.pb_slack.min(pb - r + 1e-10);
    Ok(())
}

fn electric_identities(seed: u64) -> Outcome {
    let mut w = ElectricWorst::default();
    for k in 0..50u64 {
        let mut rng = replica_rng(seed, k);
        let (a, b) = (rng.gen_range(3..=31), rng.gen_range(3..=31));
        let chords = rng.gen_range(0..=4);
        let net = random_grid(a, b, chords, &mut rng)?;
        electric_one(&net, &mut rng, &mut w)?;
    }
    let pass = w.duality <= 1e-10
        && w.reduction <= 1e-9
        && w.path <= 1e-8
        && w.cut <= 1e-8
        && w.budget <= 1e-12
        && w.nw_slack >= 0.0
        && w.pb_slack >= 0.0;
    Ok((
        pass,
        format!(
            "duality {:.1e}, reductions {:.1e}, path {:.1e}, cut {:.1e}, budget {:.1e}, bound slacks {:.2e} / {:.2e}",
            w.duality, w.reduction, w.path, w.cut, w.budget, w.nw_slack, w.pb_slack
        ),
    ))
}

fn gradient_bound(seed: u64) -> Outcome {
    let d = Arc::new(LatticeDomain::make_box(5)?);
    let sampler = FieldSampler::new(d)?;
    let mut worst = f64::NEG_INFINITY;
    for beta in [0.5, 1.0] {
        for r in 0..20u64 {
            let field = sampler.sample(&mut tagged_rng(seed, "gradient", r));
            let (_, l1) = log_resistance_gradient(&field, beta, (1, 1), (4, 4))?;
            worst = worst.max(l1 - 2.0 * beta);
        }
    }
    Ok((worst <= 1e-3, format!("max (l1 - 2 beta) = {worst:.2e}")))
}

fn hitting_identities(seed: u64) -> Outcome {
    let (mut exit_res, mut commute_res, mut bound_slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for k in 0..20u64 {
        let mut rng = replica_rng(seed, k);
        let (a, b) = (rng.gen_range(2..=8), rng.gen_range(2..=8));
        let chords = rng.gen_range(0..=3);
        let kernel = WalkKernel::from_network(random_grid(a, b, chords, &mut rng)?);
        let n = kernel.len();
        let x = rng.gen_range(0..n);
        let mut others: Vec<usize> = (0..n).filter(|&y| y != x).collect();
        others.shuffle(&mut rng);
        let outside: Vec<usize> = others[..rng.gen_range(1..=others.len().min(3))].to_vec();
        let region: Vec<usize> = (0..n).filter(|y| !outside.contains(y)).collect();
        let lu = exit_times_lu(&kernel, &region)?[x];
        let id = exit_time_via_resistance(&kernel, x, &region)?;
        exit_res = exit_res.max((lu - id.exit_time).abs() / lu);
        bound_slack = bound_slack.min(id.bound - lu);
        let y = others[0];
        let (lhs, rhs) = commute_time(&kernel, x, y)?;
        commute_res = commute_res.max((lhs - rhs).abs() / rhs);
    }
    let pass = exit_res <= 1e-8 && commute_res <= 1e-8 && bound_slack >= 0.0;
    Ok((pass, format!("exit-time residual {exit_res:.2e}, commute residual {commute_res:.2e}, bound slack {bound_slack:.3}")))
}

fn chaos_martingale(seed: u64) -> Outcome {
    let lat = ChaosLattice::new(5)?;
    let beta = 0.3 * alpha();
    let cells = [(0usize, 0usize), (1, 2), (3, 3)];
    let innovations = 10_000u64;
    let mut worst_z = 0.0f64;
    for k in 1..=3usize {
        let mut rng = tagged_rng(seed, "parent", k as u64);
        let parent = gmc_measure(&lat, &lat.sample_levels(k, &mut rng), beta, 2)?;
        let masses: Vec<Vec<f64>> = (0..innovations)
            .into_par_iter()
            .map(|r| {
                let mut rng = tagged_rng(seed, &format!("innovation-{k}"), r);
                let mut inc = vec![0.0; lat.sampler().domain().len()];
                lat.sampler().add_level(k, &mut rng, &mut inc);
                let child = gmc_step(&parent, &inc, lat.level_variance(k), beta)?;
                Ok(cells.iter().map(|&(i, j)| child.cell_mass_at(2, i, j)).collect())
            })
            .collect::<Result<_>>()?;
        for (c, &(i, j)) in cells.iter().enumerate() {
            let s = estimate(&masses.iter().map(|m| m[c]).collect::<Vec<_>>());
            worst_z = worst_z.max((s.mean - parent.cell_mass_at(2, i, j)).abs() / s.se());
        }
    }
    let totals: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = tagged_rng(seed, "total", r);
            Ok(gmc_measure(&lat, &lat.sample_levels(lat.depth(), &mut rng), beta, 0)?.total_mass())
        })
        .collect::<Result<_>>()?;
    let t = estimate(&totals);
    let z_total = (t.mean - 1.0).abs() / t.se();
    Ok((
        worst_z <= 3.0 && z_total <= 3.0,
        format!("largest cell deviation {worst_z:.2} s.e.; E total mass {:.4} ({z_total:.2} s.e. from 1)", t.mean),
    ))
}

fn walk_exponents(seed: u64) -> Outcome {
    let flat = Field::zeros(Arc::new(LatticeDomain::centered_box(200)?));
    let kernel = build_kernel(&flat, 0.0)?;
    let o = site_index(&kernel, (0, 0))?;
    let p = heat_kernel(&kernel, o, 2048);
    let ts: Vec<usize> = (4..=10).map(|e| 1usize << e).collect();
    let xs: Vec<f64> = ts.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| p[2 * t].ln()).collect();
    let heat = least_squares(&xs, &ys).slope;
    let beta = 0.5 * beta_tilde_c();
    let exit = exit_time_exponent(beta, &[16, 32, 64, 128], 30, seed)?;
    let pass = (heat + 1.0).abs() <= 0.1 && (exit.fit.slope - exit.theta).abs() <= 0.5;
    Ok((
        pass,
        format!("heat-kernel slope {heat:.4}; exit-time slope {:.3} vs theta = {:.2}", exit.fit.slope, exit.theta),
    ))
}
