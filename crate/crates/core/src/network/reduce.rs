//! Network reductions preserving effective resistances between retained vertices.

use super::{solve_potential, Network};
use crate::error::{Error, Result};
use crate::linalg::{Ordering, SkylineCholesky, SymSparse};
use rand::Rng;

/// A reduced network and, for each of its vertices, the vertex of the original it came from
/// (`None` for vertices created by the reduction).
#[derive(Clone, Debug)]
pub struct Reduction {
    pub network: Network,
    pub origin: Vec<Option<usize>>,
}

impl Reduction {
    /// Index in the reduced network of original vertex `x`.
    pub fn image(&self, x: usize) -> Option<usize> {
        self.origin.iter().position(|&o| o == Some(x))
    }
}

/// Rebuilds a network without the vertices in `drop`, without the edges in `drop_edges`, and
/// with `extra` edges (in original indices) and `new_vertices` appended.
fn rebuild(
    net: &Network,
    drop: &[usize],
    drop_edges: &[usize],
    new_vertices: &[String],
    extra: &[(usize, usize, f64)],
) -> Result<Reduction> {
    let n = net.vertex_count();
    let mut gone = vec![false; n];
    for &x in drop {
        gone[x] = true;
    }
    let mut map = vec![usize::MAX; n + new_vertices.len()];
    let mut names = Vec::new();
    let mut origin = Vec::new();
    for x in 0..n {
        if !gone[x] {
            map[x] = names.len();
            names.push(net.names()[x].clone());
            origin.push(Some(x));
        }
    }
    for (k, name) in new_vertices.iter().enumerate() {
        map[n + k] = names.len();
        names.push(name.clone());
        origin.push(None);
    }
    let mut skip = vec![false; net.edge_count()];
    for &e in drop_edges {
        skip[e] = true;
    }
    let mut edges = Vec::new();
    for (k, e) in net.edges().iter().enumerate() {
        if skip[k] || gone[e.u] || gone[e.v] {
            continue;
        }
        edges.push((map[e.u], map[e.v], e.c));
    }
    for &(u, v, c) in extra {
        edges.push((map[u], map[v], c));
    }
    Ok(Reduction { network: Network::with_names(names, edges)?, origin })
}

/// Replaces the two edges at a degree-2 vertex by one edge of resistance `r₁ + r₂`.
pub fn reduce_series(net: &Network, site: usize) -> Result<Reduction> {
    let inc = net.incident(site);
    if inc.len() != 2 {
        return Err(Error::PatternNotFound(format!("vertex {site} has degree {}", inc.len())));
    }
    let (e1, e2) = (net.edge(inc[0]), net.edge(inc[1]));
    let (a, b) = (e1.other(site), e2.other(site));
    let extra = if a == b { vec![] } else { vec![(a, b, 1.0 / (e1.resistance() + e2.resistance()))] };
    rebuild(net, &[site], &[], &[], &extra)
}

/// Merges all edges between `u` and `v` into one with the summed conductance.
pub fn reduce_parallel(net: &Network, u: usize, v: usize) -> Result<Reduction> {
    let between: Vec<usize> = net.incident(u).iter().copied().filter(|&e| net.edge(e).other(u) == v).collect();
    if between.len() < 2 {
        return Err(Error::PatternNotFound(format!("fewer than two edges between {u} and {v}")));
    }
    let c = between.iter().map(|&e| net.edge(e).c).sum();
    rebuild(net, &[], &between, &[], &[(u, v, c)])
}

/// Replaces a star at a degree-3 vertex with distinct neighbors by the triangle
/// `c_ij = c_i c_j / (c₁ + c₂ + c₃)`.
pub fn star_triangle(net: &Network, site: usize) -> Result<Reduction> {
    let inc = net.incident(site);
    let nb: Vec<usize> = inc.iter().map(|&e| net.edge(e).other(site)).collect();
    if inc.len() != 3 || nb[0] == nb[1] || nb[1] == nb[2] || nb[0] == nb[2] {
        return Err(Error::PatternNotFound(format!("vertex {site} is not the center of a star")));
    }
    let c: Vec<f64> = inc.iter().map(|&e| net.edge(e).c).collect();
    let s: f64 = c.iter().sum();
    let extra = [
        (nb[0], nb[1], c[0] * c[1] / s),
        (nb[1], nb[2], c[1] * c[2] / s),
        (nb[0], nb[2], c[0] * c[2] / s),
    ];
    rebuild(net, &[site], &[], &[], &extra)
}

/// Replaces the triangle on `(a, b, c)` by a star around a new vertex with
/// `c_a = (c_ab c_bc + c_bc c_ca + c_ca c_ab) / c_bc` and cyclically.
pub fn triangle_star(net: &Network, tri: (usize, usize, usize)) -> Result<Reduction> {
    let (a, b, c) = tri;
    let side = |x: usize, y: usize| -> (Vec<usize>, f64) {
        let es: Vec<usize> = net.incident(x).iter().copied().filter(|&e| net.edge(e).other(x) == y).collect();
        let s = es.iter().map(|&e| net.edge(e).c).sum();
        (es, s)
    };
    let (eab, cab) = side(a, b);
    let (ebc, cbc) = side(b, c);
    let (eca, cca) = side(c, a);
    if eab.is_empty() || ebc.is_empty() || eca.is_empty() {
        return Err(Error::PatternNotFound(format!("no triangle on ({a}, {b}, {c})")));
    }
    let p = cab * cbc + cbc * cca + cca * cab;
    let center = net.vertex_count();
    let name = format!("star({},{},{})", net.names()[a], net.names()[b], net.names()[c]);
    let dropped: Vec<usize> = eab.into_iter().chain(ebc).chain(eca).collect();
    rebuild(net, &[], &dropped, &[name], &[(center, a, p / cbc), (center, b, p / cca), (center, c, p / cab)])
}

/// Schur complement of the Laplacian onto `keep`: `c'(x, y) = −(L_KK − L_KD L_DD⁻¹ L_DK)(x, y)`.
pub fn subnetwork_reduce(net: &Network, keep: &[usize]) -> Result<Reduction> {
    let n = net.vertex_count();
    let mut in_keep = vec![false; n];
    for &x in keep {
        if x >= n {
            return Err(Error::InvalidArgument(format!("vertex {x} out of range")));
        }
        in_keep[x] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&x| in_keep[x]).collect();
    if kept.len() < 2 {
        return Err(Error::InvalidArgument("keep at least two vertices".into()));
    }
    if kept.len() == n {
        return Ok(Reduction { network: net.clone(), origin: (0..n).map(Some).collect() });
    }
    let dropped: Vec<usize> = (0..n).filter(|&x| !in_keep[x]).collect();
    let mut pos = vec![usize::MAX; n];
    for (k, &x) in kept.iter().enumerate() {
        pos[x] = k;
    }
    for (k, &x) in dropped.iter().enumerate() {
        pos[x] = k;
    }
    let (nk, nd) = (kept.len(), dropped.len());
    let mut ldd = SymSparse::new(nd);
    let mut lkk = vec![0.0; nk * nk];
    let mut ldk = vec![vec![0.0; nd]; nk];
    for e in net.edges() {
        let (ku, kv) = (in_keep[e.u], in_keep[e.v]);
        let (pu, pv) = (pos[e.u], pos[e.v]);
        match (ku, kv) {
            (true, true) => {
                lkk[pu * nk + pu] += e.c;
                lkk[pv * nk + pv] += e.c;
                lkk[pu * nk + pv] -= e.c;
                lkk[pv * nk + pu] -= e.c;
            }
            (false, false) => {
                ldd.add_diag(pu, e.c);
                ldd.add_diag(pv, e.c);
                ldd.add_off(pu, pv, -e.c);
            }
            (true, false) => {
                lkk[pu * nk + pu] += e.c;
                ldd.add_diag(pv, e.c);
                ldk[pu][pv] -= e.c;
            }
            (false, true) => {
                lkk[pv * nk + pv] += e.c;
                ldd.add_diag(pu, e.c);
                ldk[pv][pu] -= e.c;
            }
        }
    }
    let chol = SkylineCholesky::factor(&ldd, Ordering::ReverseCuthillMcKee)?;
    let x: Vec<Vec<f64>> = ldk.iter().map(|col| chol.solve(col)).collect();
    let scale = (0..nk).map(|i| lkk[i * nk + i]).fold(0.0, f64::max);
    let mut edges = Vec::new();
    for i in 0..nk {
        for j in i + 1..nk {
            let s: f64 = ldk[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum();
            let c = -(lkk[i * nk + j] - s);
            if c > 1e-15 * scale {
                edges.push((i, j, c));
            }
        }
    }
    let names = kept.iter().map(|&x| net.names()[x].clone()).collect();
    Ok(Reduction { network: Network::with_names(names, edges)?, origin: kept.into_iter().map(Some).collect() })
}

/// `π(x) P^x(X_{τ̂} = y)` with `τ̂` the first time `t ≥ 1` at which the walk is in `keep`,
/// computed from the harmonic function equal to `1_y` on `keep`.
pub fn return_hit_conductance(net: &Network, keep: &[usize], x: usize, y: usize) -> Result<f64> {
    if !keep.contains(&x) || !keep.contains(&y) || x == y {
        return Err(Error::InvalidArgument("x and y must be distinct kept vertices".into()));
    }
    let others: Vec<usize> = keep.iter().copied().filter(|&z| z != y).collect();
    let h = solve_potential(net, &[y], &others)?.potential;
    Ok(net.incident(x).iter().map(|&e| net.edge(e).c * h[net.edge(e).other(x)]).sum())
}

/// Monte Carlo samples of `π(x) 1{X_{τ̂} = y}` from `walks` independent walks.
pub fn return_hit_conductance_mc<R: Rng + ?Sized>(
    net: &Network,
    keep: &[usize],
    x: usize,
    y: usize,
    walks: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut in_keep = vec![false; net.vertex_count()];
    for &k in keep {
        in_keep[k] = true;
    }
    let pi = net.pi(x);
    (0..walks)
        .map(|_| {
            let mut z = x;
            loop {
                let inc = net.incident(z);
                let total = net.pi(z);
                let mut u = rng.gen::<f64>() * total;
                let mut next = net.edge(inc[inc.len() - 1]).other(z);
                for &e in inc {
                    let c = net.edge(e).c;
                    if u < c {
                        next = net.edge(e).other(z);
                        break;
                    }
                    u -= c;
                }
                z = next;
                if in_keep[z] {
                    break;
                }
            }
            if z == y {
                pi
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::effective_resistance;
    use super::*;

    #[test]
    fn chain_collapses_to_one_resistor() {
        let k = 5;
        let mut net = Network::new(k + 1, (0..k).map(|i| (i, i + 1, 1.0)).collect()).unwrap();
        while net.vertex_count() > 2 {
            let site = (0..net.vertex_count()).find(|&v| net.degree(v) == 2).unwrap();
            net = reduce_series(&net, site).unwrap().network;
        }
        assert_eq!(net.edge_count(), 1);
        assert!((net.edge(0).resistance() - k as f64).abs() < 1e-12);
    }

    #[test]
    fn equal_triangle_gives_triple_star() {
        let net = Network::new(3, vec![(0, 1, 2.0), (1, 2, 2.0), (2, 0, 2.0)]).unwrap();
        let red = triangle_star(&net, (0, 1, 2)).unwrap();
        for e in red.network.edges() {
            assert!((e.c - 6.0).abs() < 1e-14);
        }
        let r = effective_resistance(&red.network, &[0], &[1]).unwrap().0;
        assert!((r - 2.0 / (3.0 * 2.0)).abs() < 1e-14);
    }

    #[test]
    fn missing_patterns() {
        let net = Network::new(2, vec![(0, 1, 1.0)]).unwrap();
        assert!(matches!(reduce_series(&net, 0), Err(Error::PatternNotFound(_))));
        assert!(matches!(reduce_parallel(&net, 0, 1), Err(Error::PatternNotFound(_))));
        assert!(matches!(star_triangle(&net, 0), Err(Error::PatternNotFound(_))));
    }

    #[test]
    fn keep_pair_is_effective_conductance() {
        let net = Network::new(4, vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (3, 0, 4.0), (0, 2, 0.5)]).unwrap();
        let red = subnetwork_reduce(&net, &[1, 3]).unwrap();
        assert_eq!(red.network.edge_count(), 1);
        let r = effective_resistance(&net, &[1], &[3]).unwrap().0;
        assert!((red.network.edge(0).c - 1.0 / r).abs() < 1e-12);
        let same = subnetwork_reduce(&net, &[0, 1, 2, 3]).unwrap();
        assert_eq!(same.network.edges(), net.edges());
    }
}
