//! Path and cutset decompositions attaining the variational formulas for `R_eff` and `C_eff`.

use super::{Network, PotentialSolution};
use crate::error::{Error, Result};
use serde::Serialize;
use std::cmp::Ordering as CmpOrdering;
use std::collections::BinaryHeap;

/// Flows below this fraction of the value are treated as zero.
const FLOW_FLOOR: f64 = 1e-12;
/// Potentials closer than this share a level set.
const LEVEL_TOLERANCE: f64 = 1e-10;
/// Largest node-law residual accepted as harmonic.
const HARMONIC_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionKind {
    Path,
    Cutset,
}

/// One path or cutset with its weight and per-edge split values: resistances `r_{e,P}` for
/// paths, conductances `c_{e,π}` for cutsets, aligned with `edges`.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionItem {
    pub edges: Vec<usize>,
    pub alpha: f64,
    pub split: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowDecomposition {
    pub kind: DecompositionKind,
    pub items: Vec<DecompositionItem>,
    /// `|i⋆(e)|` for paths, `|∇f⋆(e)|` for cutsets.
    pub edge_weight: Vec<f64>,
}

impl FlowDecomposition {
    pub fn alpha_sum(&self) -> f64 {
        self.items.iter().map(|it| it.alpha).sum()
    }

    /// `[Σ_k (Σ_{e∈P_k} r_{e,P_k})⁻¹]⁻¹` for paths and `[Σ_k (Σ_{e∈π_k} c_{e,π_k})⁻¹]⁻¹` for cutsets.
    pub fn reconstruct(&self) -> f64 {
        1.0 / self.items.iter().map(|it| 1.0 / it.split.iter().sum::<f64>()).sum::<f64>()
    }

    /// Largest relative violation of the per-edge budget: `Σ_k 1/r_{e,P_k} ≤ c_e` and
    /// `Σ_{k: e∈P_k} α_k ≤ |i⋆(e)|` for paths, `Σ_k 1/c_{e,π_k} ≤ r_e` for cutsets.
    /// Nonpositive when every constraint holds.
    pub fn budget_violation(&self, net: &Network) -> f64 {
        let m = net.edge_count();
        let mut inv = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        for it in &self.items {
            for (&e, &s) in it.edges.iter().zip(&it.split) {
                inv[e] += 1.0 / s;
                alpha[e] += it.alpha;
            }
        }
        let mut worst = f64::NEG_INFINITY;
        for (e, edge) in net.edges().iter().enumerate() {
            let v = match self.kind {
                DecompositionKind::Path => {
                    let a = alpha[e] - self.edge_weight[e];
                    a.max((inv[e] - edge.c) / edge.c)
                }
                DecompositionKind::Cutset => (inv[e] - edge.resistance()) / edge.resistance(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

fn check_harmonic(net: &Network, sol: &PotentialSolution, u: usize, v: usize) -> Result<()> {
    if u == v || u >= net.vertex_count() || v >= net.vertex_count() {
        return Err(Error::InvalidArgument("terminals must be distinct vertices".into()));
    }
    if sol.potential.len() != net.vertex_count() || sol.current.len() != net.edge_count() {
        return Err(Error::InvalidArgument("solution does not match the network".into()));
    }
    let res = sol.node_law_residual(net, &[u, v]);
    if !(res <= HARMONIC_TOLERANCE) {
        return Err(Error::Validation(format!("node law violated off the terminals: {res:e}")));
    }
    Ok(())
}

#[derive(PartialEq)]
struct Widest(f64, usize);

impl Eq for Widest {}

impl PartialOrd for Widest {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl Ord for Widest {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Path of largest bottleneck from `u` to `v` along edges carrying positive residual flow,
/// as `(edge, direction)` pairs in order, with its bottleneck.
fn widest_path(net: &Network, residual: &[f64], dir: &[f64], u: usize, v: usize) -> Option<(Vec<usize>, f64)> {
    let n = net.vertex_count();
    let mut best = vec![0.0f64; n];
    let mut via = vec![usize::MAX; n];
    let mut done = vec![false; n];
    best[u] = f64::INFINITY;
    let mut heap = BinaryHeap::from([Widest(f64::INFINITY, u)]);
    while let Some(Widest(w, x)) = heap.pop() {
        if done[x] {
            continue;
        }
        done[x] = true;
        if x == v {
            break;
        }
        for &e in net.incident(x) {
            if residual[e] <= 0.0 {
                continue;
            }
            let edge = net.edge(e);
            let forward = if edge.u == x { dir[e] > 0.0 } else { dir[e] < 0.0 };
            if !forward {
                continue;
            }
            let y = edge.other(x);
            let b = w.min(residual[e]);
            if !done[y] && b > best[y] {
                best[y] = b;
                via[y] = e;
                heap.push(Widest(b, y));
            }
        }
    }
    if !done[v] || best[v] <= 0.0 {
        return None;
    }
    let mut path = Vec::new();
    let mut y = v;
    while y != u {
        let e = via[y];
        path.push(e);
        y = net.edge(e).other(y);
    }
    path.reverse();
    Some((path, best[v]))
}

/// Peels the unit current from `u` to `v` into simple paths, each chosen with the largest
/// bottleneck, with `α_k` the bottleneck and `r_{e,P_k} = |i⋆(e)| r_e / α_k`.
pub fn path_decompose(net: &Network, sol: &PotentialSolution, u: usize, v: usize) -> Result<FlowDecomposition> {
    check_harmonic(net, sol, u, v)?;
    let out: f64 = net
        .incident(u)
        .iter()
        .map(|&e| if net.edge(e).u == u { sol.current[e] } else { -sol.current[e] })
        .sum();
    if !(out > 0.0) {
        return Err(Error::Validation("no current leaves the source".into()));
    }
    let unit: Vec<f64> = sol.current.iter().map(|i| i / out).collect();
    let edge_weight: Vec<f64> = unit.iter().map(|i| i.abs()).collect();
    let mut residual: Vec<f64> = edge_weight.iter().map(|&w| if w < FLOW_FLOOR { 0.0 } else { w }).collect();
    let mut items = Vec::new();
    while let Some((path, alpha)) = widest_path(net, &residual, &unit, u, v) {
        for &e in &path {
            residual[e] -= alpha;
            if residual[e] < FLOW_FLOOR {
                residual[e] = 0.0;
            }
        }
        let split = path.iter().map(|&e| edge_weight[e] * net.edge(e).resistance() / alpha).collect();
        items.push(DecompositionItem { edges: path, alpha, split });
        if items.len() > net.edge_count() {
            return Err(Error::Solver("path peeling did not terminate".into()));
        }
    }
    Ok(FlowDecomposition { kind: DecompositionKind::Path, items, edge_weight })
}

/// Peels the unit potential (`1` at `u`, `0` at `v`) into the cutsets `∂{f ≥ t}` over its
/// level values `t`, with `α_k` the gap to the next level and `c_{e,π_k} = s_e c_e / α_k`,
/// where `s_e` is the total gap spanned by `e`.
pub fn cut_decompose(net: &Network, sol: &PotentialSolution, u: usize, v: usize) -> Result<FlowDecomposition> {
    check_harmonic(net, sol, u, v)?;
    let f = &sol.potential;
    if (f[u] - 1.0).abs() > LEVEL_TOLERANCE || f[v].abs() > LEVEL_TOLERANCE {
        return Err(Error::Validation("potential must be 1 at the source and 0 at the sink".into()));
    }
    let n = net.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    let mut level = vec![0usize; n];
    let mut reps = vec![1.0];
    let mut last = f[order[0]];
    for &x in &order {
        if last - f[x] > LEVEL_TOLERANCE {
            reps.push(f[x]);
        }
        last = f[x];
        level[x] = reps.len() - 1;
    }
    let bottom = level[v];
    reps.truncate(bottom + 1);
    reps[bottom] = 0.0;
    let edge_weight: Vec<f64> = net.edges().iter().map(|e| (f[e.u] - f[e.v]).abs()).collect();
    let mut items: Vec<DecompositionItem> = (0..bottom)
        .map(|k| DecompositionItem { edges: Vec::new(), alpha: reps[k] - reps[k + 1], split: Vec::new() })
        .collect();
    for (e, edge) in net.edges().iter().enumerate() {
        let (hi, lo) = {
            let (a, b) = (level[edge.u].min(bottom), level[edge.v].min(bottom));
            (a.min(b), a.max(b))
        };
        if hi == lo {
            continue;
        }
        let span = reps[hi] - reps[lo];
        for (k, item) in items.iter_mut().enumerate().take(lo).skip(hi) {
            item.edges.push(e);
            item.split.push(span * edge.c / (reps[k] - reps[k + 1]));
        }
    }
    Ok(FlowDecomposition { kind: DecompositionKind::Cutset, items, edge_weight })
}

#[cfg(test)]
mod tests {
    use super::super::{effective_resistance, separates};
    use super::*;

    #[test]
    fn single_edge() {
        let net = Network::new(2, vec![(0, 1, 0.25)]).unwrap();
        let (r, sol) = effective_resistance(&net, &[0], &[1]).unwrap();
        let p = path_decompose(&net, &sol, 0, 1).unwrap();
        assert_eq!(p.items.len(), 1);
        assert!((p.items[0].alpha - 1.0).abs() < 1e-15);
        assert!((p.reconstruct() - r).abs() < 1e-14);
        let c = cut_decompose(&net, &sol, 0, 1).unwrap();
        assert_eq!(c.items.len(), 1);
        assert_eq!(c.items[0].edges, vec![0]);
        assert!((c.reconstruct() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn two_parallel_paths() {
        let net = Network::new(4, vec![(0, 1, 1.0), (1, 3, 1.0), (0, 2, 0.5), (2, 3, 0.5)]).unwrap();
        let (r, sol) = effective_resistance(&net, &[0], &[3]).unwrap();
        let p = path_decompose(&net, &sol, 0, 3).unwrap();
        let mut alphas: Vec<f64> = p.items.iter().map(|it| it.alpha).collect();
        alphas.sort_by(f64::total_cmp);
        let (c1, c2) = (0.5, 0.25);
        assert!((alphas[0] - c2 / (c1 + c2)).abs() < 1e-14);
        assert!((alphas[1] - c1 / (c1 + c2)).abs() < 1e-14);
        assert!((p.reconstruct() - r).abs() < 1e-13);
    }

    #[test]
    fn chain_gives_single_edge_cutsets() {
        let k = 4;
        let net = Network::new(k + 1, (0..k).map(|i| (i, i + 1, 1.0 + i as f64)).collect()).unwrap();
        let (r, sol) = effective_resistance(&net, &[0], &[k]).unwrap();
        let c = cut_decompose(&net, &sol, 0, k).unwrap();
        assert_eq!(c.items.len(), k);
        for it in &c.items {
            assert_eq!(it.edges.len(), 1);
            assert!(separates(&net, &it.edges, &[0], &[k]));
        }
        assert!((c.reconstruct() - 1.0 / r).abs() < 1e-13);
        assert!(c.budget_violation(&net) <= 1e-12);
    }

    #[test]
    fn rejects_non_harmonic() {
        let net = Network::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let (_, mut sol) = effective_resistance(&net, &[0], &[2]).unwrap();
        sol.current[0] *= 2.0;
        assert!(path_decompose(&net, &sol, 0, 2).is_err());
        assert!(cut_decompose(&net, &sol, 0, 2).is_err());
    }
}
