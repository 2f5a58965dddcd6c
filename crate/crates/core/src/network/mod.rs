//! Electric networks: effective resistance and conductance, reductions and certifying
//! decompositions.

mod bounds;
mod decompose;
mod reduce;

pub use bounds::{nash_williams, path_bound, separates};
pub use decompose::{cut_decompose, path_decompose, DecompositionItem, DecompositionKind, FlowDecomposition};
pub use reduce::{
    reduce_parallel, reduce_series, return_hit_conductance, return_hit_conductance_mc, star_triangle,
    subnetwork_reduce, triangle_star, Reduction,
};

use crate::error::{Error, Result};
use crate::lattice::{Vertex, NEIGHBORS};
use crate::linalg::{Ordering, SkylineCholesky, SymSparse};
use crate::sampler::Field;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use std::collections::{HashMap, VecDeque};
use std::path::Path;

/// Undirected edge with conductance `c = 1/r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub c: f64,
}

impl Edge {
    pub fn resistance(&self) -> f64 {
        1.0 / self.c
    }

    /// The endpoint other than `x`.
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Connected finite graph with strictly positive conductances. Parallel edges are allowed.
#[derive(Clone, Debug)]
pub struct Network {
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    names: Vec<String>,
    sites: Option<Vec<Vertex>>,
}

impl Network {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::with_names((0..n).map(|i| i.to_string()).collect(), edges)
    }

    pub fn with_names(names: Vec<String>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::EmptyDomain);
        }
        let mut incident = vec![Vec::new(); n];
        let mut out = Vec::with_capacity(edges.len());
        for (k, (u, v, c)) in edges.into_iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidArgument(format!("edge {k} ({u}, {v}) is not a proper edge")));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("edge {k} has conductance {c}")));
            }
            incident[u].push(out.len());
            incident[v].push(out.len());
            out.push(Edge { u, v, c });
        }
        let net = Network { edges: out, incident, names, sites: None };
        if !net.reaches_all(0) {
            return Err(Error::Disconnected);
        }
        Ok(net)
    }

    /// Nearest-neighbor network on the domain of `field` with `c(x, y) = e^{β(h_x + h_y)}`.
    pub fn from_field(field: &Field, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("β = {beta} must be nonnegative")));
        }
        let d = field.domain();
        let h = field.values();
        let mut edges = Vec::new();
        for (i, &(x, y)) in d.vertices().iter().enumerate() {
            for &(dx, dy) in &NEIGHBORS[..2] {
                if let Some(j) = d.index_of((x + dx, y + dy)) {
                    edges.push((i, j, (beta * (h[i] + h[j])).exp()));
                }
            }
        }
        let names = d.vertices().iter().map(|v| format!("{},{}", v.0, v.1)).collect();
        let mut net = Self::with_names(names, edges)?;
        net.sites = Some(d.vertices().to_vec());
        Ok(net)
    }

    /// Parses lines `u v c`; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut names = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut edges = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `u v c`", ln + 1)));
            }
            let c: f64 = t[2].parse().map_err(|_| Error::Parse(format!("line {}: bad conductance", ln + 1)))?;
            let mut id = |s: &str| {
                *index.entry(s.to_string()).or_insert_with(|| {
                    names.push(s.to_string());
                    names.len() - 1
                })
            };
            let (u, v) = (id(t[0]), id(t[1]));
            edges.push((u, v, c));
        }
        Self::with_names(names, edges)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.edges
            .iter()
            .map(|e| format!("{} {} {:e}\n", self.names[e.u], self.names[e.v], e.c))
            .collect()
    }

    /// Indices of the named vertices.
    pub fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|s| {
                self.names
                    .iter()
                    .position(|n| n == s)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown vertex `{s}`")))
            })
            .collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.incident.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn incident(&self, x: usize) -> &[usize] {
        &self.incident[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.incident[x].len()
    }

    pub fn max_degree(&self) -> usize {
        self.incident.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Lattice positions for networks built from a field.
    pub fn sites(&self) -> Option<&[Vertex]> {
        self.sites.as_deref()
    }

    pub fn site_index(&self, v: Vertex) -> Option<usize> {
        self.sites.as_ref()?.iter().position(|&s| s == v)
    }

    /// `π(x) = Σ_{e∋x} c_e`.
    pub fn pi(&self, x: usize) -> f64 {
        self.incident[x].iter().map(|&e| self.edges[e].c).sum()
    }

    pub fn total_pi(&self) -> f64 {
        (0..self.vertex_count()).map(|x| self.pi(x)).sum()
    }

    /// Copy with the conductance of edge `e` replaced.
    pub fn with_conductance(&self, e: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("conductance {c}")));
        }
        let mut out = self.clone();
        out.edges[e].c = c;
        Ok(out)
    }

    /// The reciprocal network with `r*_e = 1/r_e`.
    pub fn reciprocal(&self) -> Self {
        let mut out = self.clone();
        for e in out.edges.iter_mut() {
            e.c = 1.0 / e.c;
        }
        out
    }

    /// Merges `set` into a single vertex, dropping the edges inside it. Returns the new
    /// network and the image of every old vertex.
    pub fn shorted(&self, set: &[usize]) -> Result<(Self, Vec<usize>)> {
        if set.is_empty() {
            return Err(Error::InvalidArgument("cannot short an empty set".into()));
        }
        let mut inside = vec![false; self.vertex_count()];
        for &x in set {
            inside[x] = true;
        }
        let mut map = vec![0; self.vertex_count()];
        let mut names = Vec::new();
        let merged = set[0];
        for x in 0..self.vertex_count() {
            if inside[x] && x != merged {
                continue;
            }
            map[x] = names.len();
            names.push(self.names[x].clone());
        }
        for &x in set {
            map[x] = map[merged];
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| !(inside[e.u] && inside[e.v]))
            .map(|e| (map[e.u], map[e.v], e.c))
            .collect();
        Ok((Self::with_names(names, edges)?, map))
    }

    /// Weighted Laplacian `L = D − C` (merging parallel edges).
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.vertex_count();
        let mut l = DMatrix::zeros(n, n);
        for e in &self.edges {
            l[(e.u, e.u)] += e.c;
            l[(e.v, e.v)] += e.c;
            l[(e.u, e.v)] -= e.c;
            l[(e.v, e.u)] -= e.c;
        }
        l
    }

    fn reaches_all(&self, start: usize) -> bool {
        let seen = self.reachable(&[start], &[]);
        seen.iter().all(|&s| s)
    }

    /// Vertices reachable from `from` without crossing the edges in `removed`.
    pub fn reachable(&self, from: &[usize], removed: &[usize]) -> Vec<bool> {
        let mut cut = vec![false; self.edges.len()];
        for &e in removed {
            cut[e] = true;
        }
        let mut seen = vec![false; self.vertex_count()];
        let mut q = VecDeque::new();
        for &x in from {
            if !seen[x] {
                seen[x] = true;
                q.push_back(x);
            }
        }
        while let Some(x) = q.pop_front() {
            for &e in &self.incident[x] {
                if cut[e] {
                    continue;
                }
                let y = self.edges[e].other(x);
                if !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
        seen
    }
}

/// Potential, current and energies of the unit-voltage problem between two terminal sets.
#[derive(Clone, Debug, Serialize)]
pub struct PotentialSolution {
    /// `f = 1` on `A`, `0` on `B`, harmonic elsewhere.
    pub potential: Vec<f64>,
    /// `i(e) = c_e (f(u) − f(v))` along the stored orientation of each edge.
    pub current: Vec<f64>,
    /// Net current out of `A`.
    pub value: f64,
    /// Dirichlet energy `E(f) = Σ c_e (∇f)²`.
    pub energy: f64,
    /// Thomson energy `Σ r_e i(e)²`.
    pub flow_energy: f64,
}

impl PotentialSolution {
    /// `max |Σ_{e∋x} i(x → ·)|` over non-terminal vertices, relative to the value.
    pub fn node_law_residual(&self, net: &Network, terminals: &[usize]) -> f64 {
        let mut div = vec![0.0; net.vertex_count()];
        for (e, &i) in net.edges().iter().zip(&self.current) {
            div[e.u] += i;
            div[e.v] -= i;
        }
        for &t in terminals {
            div[t] = 0.0;
        }
        div.iter().fold(0.0f64, |m, d| m.max(d.abs())) / self.value.abs()
    }
}

fn check_terminals(net: &Network, a: &[usize], b: &[usize]) -> Result<Vec<u8>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("terminal sets must be nonempty".into()));
    }
    let mut role = vec![0u8; net.vertex_count()];
    for &x in a {
        if x >= role.len() {
            return Err(Error::InvalidArgument(format!("vertex {x} out of range")));
        }
        role[x] = 1;
    }
    for &x in b {
        if x >= role.len() {
            return Err(Error::InvalidArgument(format!("vertex {x} out of range")));
        }
        if role[x] == 1 {
            return Err(Error::InvalidArgument("terminal sets intersect".into()));
        }
        role[x] = 2;
    }
    Ok(role)
}

/// Solves the Dirichlet problem `f = 1` on `A`, `f = 0` on `B`, `Δ_c f = 0` elsewhere by an
/// envelope Cholesky factorization of the grounded Laplacian.
pub fn solve_potential(net: &Network, a: &[usize], b: &[usize]) -> Result<PotentialSolution> {
    let role = check_terminals(net, a, b)?;
    let free: Vec<usize> = (0..net.vertex_count()).filter(|&x| role[x] == 0).collect();
    let mut pos = vec![usize::MAX; net.vertex_count()];
    for (k, &x) in free.iter().enumerate() {
        pos[x] = k;
    }
    let mut f: Vec<f64> = role.iter().map(|&r| if r == 1 { 1.0 } else { 0.0 }).collect();
    if !free.is_empty() {
        let mut m = SymSparse::new(free.len());
        let mut rhs = vec![0.0; free.len()];
        for e in net.edges() {
            for (x, y) in [(e.u, e.v), (e.v, e.u)] {
                if role[x] != 0 {
                    continue;
                }
                m.add_diag(pos[x], e.c);
                if role[y] == 1 {
                    rhs[pos[x]] += e.c;
                }
            }
            if role[e.u] == 0 && role[e.v] == 0 {
                m.add_off(pos[e.u], pos[e.v], -e.c);
            }
        }
        let chol = SkylineCholesky::factor(&m, Ordering::ReverseCuthillMcKee)?;
        let sol = chol.solve(&rhs);
        for (k, &x) in free.iter().enumerate() {
            f[x] = sol[k];
        }
    }
    let current: Vec<f64> = net.edges().iter().map(|e| e.c * (f[e.u] - f[e.v])).collect();
    let mut value = 0.0;
    for (e, &i) in net.edges().iter().zip(&current) {
        if role[e.u] == 1 {
            value += i;
        }
        if role[e.v] == 1 {
            value -= i;
        }
    }
    if !(value > 0.0) {
        return Err(Error::Disconnected);
    }
    let energy = net.edges().iter().map(|e| e.c * (f[e.u] - f[e.v]).powi(2)).sum();
    let flow_energy = net.edges().iter().zip(&current).map(|(e, i)| i * i / e.c).sum();
    Ok(PotentialSolution { potential: f, current, value, energy, flow_energy })
}

/// `R_eff(A, B) = 1/C_eff(A, B)` with `C_eff = E(f)` for the unit-voltage potential.
pub fn effective_resistance(net: &Network, a: &[usize], b: &[usize]) -> Result<(f64, PotentialSolution)> {
    let sol = solve_potential(net, a, b)?;
    Ok((1.0 / sol.energy, sol))
}

pub fn effective_conductance(net: &Network, a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(solve_potential(net, a, b)?.energy)
}

/// Minimal energy of a unit flow from `u` to `v` and the minimizing flow, computed in the
/// cycle space of a breadth-first spanning tree.
pub fn thomson_resistance(net: &Network, u: usize, v: usize) -> Result<(f64, Vec<f64>)> {
    if u == v {
        return Err(Error::InvalidArgument("terminals coincide".into()));
    }
    let n = net.vertex_count();
    let mut parent_edge = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut tree = vec![false; net.edge_count()];
    let mut q = VecDeque::from([u]);
    seen[u] = true;
    while let Some(x) = q.pop_front() {
        for &e in net.incident(x) {
            let y = net.edge(e).other(x);
            if !seen[y] {
                seen[y] = true;
                parent_edge[y] = e;
                depth[y] = depth[x] + 1;
                tree[e] = true;
                q.push_back(y);
            }
        }
    }
    // Signed edge incidence of the tree path from `x` up to the root, oriented towards `x`.
    let push_path = |x: usize, sign: f64, out: &mut Vec<(usize, f64)>| {
        let mut y = x;
        while y != u {
            let e = parent_edge[y];
            let edge = net.edge(e);
            let s = if edge.v == y { 1.0 } else { -1.0 };
            out.push((e, sign * s));
            y = edge.other(y);
        }
    };
    let mut base = vec![0.0; net.edge_count()];
    let mut p = Vec::new();
    push_path(v, 1.0, &mut p);
    for (e, s) in p {
        base[e] += s;
    }
    let cycles: Vec<Vec<(usize, f64)>> = (0..net.edge_count())
        .filter(|&e| !tree[e])
        .map(|e| {
            let edge = net.edge(e);
            let mut c = vec![(e, 1.0)];
            push_path(edge.u, 1.0, &mut c);
            push_path(edge.v, -1.0, &mut c);
            let mut acc: HashMap<usize, f64> = HashMap::new();
            for (k, s) in c {
                *acc.entry(k).or_insert(0.0) += s;
            }
            let mut c: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, s)| s != 0.0).collect();
            c.sort_unstable_by_key(|p| p.0);
            c
        })
        .collect();
    let k = cycles.len();
    let mut flow = base.clone();
    if k > 0 {
        let mut members: Vec<Vec<(usize, f64)>> = vec![Vec::new(); net.edge_count()];
        for (ci, c) in cycles.iter().enumerate() {
            for &(e, s) in c {
                members[e].push((ci, s));
            }
        }
        let mut a = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for (e, m) in members.iter().enumerate() {
            let r = net.edge(e).resistance();
            for &(i, si) in m {
                rhs[i] -= r * si * base[e];
                for &(j, sj) in m {
                    a[(i, j)] += r * si * sj;
                }
            }
        }
        let y = a
            .cholesky()
            .ok_or_else(|| Error::Factorization("cycle-space energy matrix".into()))?
            .solve(&rhs);
        for (ci, c) in cycles.iter().enumerate() {
            for &(e, s) in c {
                flow[e] += y[ci] * s;
            }
        }
    }
    let energy = net.edges().iter().zip(&flow).map(|(e, i)| i * i / e.c).sum();
    Ok((energy, flow))
}

/// Both variational values between two vertices from independent solves.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualityCheck {
    /// `R_eff` from the minimal-energy unit flow.
    pub resistance: f64,
    /// `C_eff` from the minimal-energy unit potential.
    pub conductance: f64,
    /// `|R·C − 1|`.
    pub residual: f64,
}

pub fn duality_check(net: &Network, u: usize, v: usize) -> Result<DualityCheck> {
    let (resistance, _) = thomson_resistance(net, u, v)?;
    let conductance = effective_conductance(net, &[u], &[v])?;
    Ok(DualityCheck { resistance, conductance, residual: (resistance * conductance - 1.0).abs() })
}

/// Random connected network: the `w × h` grid (vertex `x + w y`) with conductances
/// `e^U`, `U` uniform on `[−1, 1]`, plus `chords` extra edges between random distinct vertices.
pub fn random_grid<R: Rng + ?Sized>(w: usize, h: usize, chords: usize, rng: &mut R) -> Result<Network> {
    if w * h < 2 {
        return Err(Error::InvalidSize(format!("grid {w}×{h} has fewer than two vertices")));
    }
    let mut c = || rng.gen_range(-1.0f64..=1.0).exp();
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = x + w * y;
            if x + 1 < w {
                edges.push((i, i + 1, c()));
            }
            if y + 1 < h {
                edges.push((i, i + w, c()));
            }
        }
    }
    let n = w * h;
    for _ in 0..chords {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let cond = rng.gen_range(-1.0f64..=1.0).exp();
        edges.push((a, b, cond));
    }
    Network::new(n, edges)
}

/// Central finite differences of `h ↦ log R_eff,h(u, v)` with step `1e−5`, and their `ℓ¹` norm.
pub fn log_resistance_gradient(field: &Field, beta: f64, u: Vertex, v: Vertex) -> Result<(Vec<f64>, f64)> {
    if u == v {
        return Err(Error::InvalidArgument("terminals coincide".into()));
    }
    let d = field.domain();
    let iu = d.index_of(u).ok_or(Error::OutsideDomain(u.0, u.1))?;
    let iv = d.index_of(v).ok_or(Error::OutsideDomain(v.0, v.1))?;
    const STEP: f64 = 1e-5;
    let log_r = |h: &[f64]| -> Result<f64> {
        let f = Field::new(d.clone(), h.to_vec())?;
        Ok(effective_resistance(&Network::from_field(&f, beta)?, &[iu], &[iv])?.0.ln())
    };
    let mut h = field.values().to_vec();
    let mut grad = Vec::with_capacity(h.len());
    for x in 0..h.len() {
        let h0 = h[x];
        h[x] = h0 + STEP;
        let up = log_r(&h)?;
        h[x] = h0 - STEP;
        let down = log_r(&h)?;
        h[x] = h0;
        grad.push((up - down) / (2.0 * STEP));
    }
    let l1 = grad.iter().map(|g| g.abs()).sum();
    Ok((grad, l1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let net = Network::new(2, vec![(0, 1, 4.0)]).unwrap();
        let (r, sol) = effective_resistance(&net, &[0], &[1]).unwrap();
        assert!((r - 0.25).abs() < 1e-15);
        assert!((sol.value - 4.0).abs() < 1e-15);
        assert_eq!(duality_check(&net, 0, 1).unwrap().residual, 0.0);
    }

    #[test]
    fn series_and_parallel() {
        let s = Network::new(3, vec![(0, 1, 0.5), (1, 2, 0.25)]).unwrap();
        assert!((effective_resistance(&s, &[0], &[2]).unwrap().0 - 6.0).abs() < 1e-14);
        let p = Network::new(2, vec![(0, 1, 0.5), (0, 1, 0.25)]).unwrap();
        assert!((effective_conductance(&p, &[0], &[1]).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Network::new(3, vec![(0, 1, 1.0)]), Err(Error::Disconnected)));
        assert!(Network::new(2, vec![(0, 1, 0.0)]).is_err());
        let net = Network::new(2, vec![(0, 1, 1.0)]).unwrap();
        assert!(solve_potential(&net, &[0], &[0]).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let net = Network::from_text("a b 2\n# note\nb c 0.5\n").unwrap();
        assert_eq!(net.vertex_count(), 3);
        let back = Network::from_text(&net.to_text()).unwrap();
        assert_eq!(back.edges(), net.edges());
        assert_eq!(net.resolve(&["c"]).unwrap(), vec![2]);
    }
}
