//! Nash-Williams and disjoint-path bounds.

use super::Network;
use crate::error::{Error, Result};

/// Whether removing `cut` disconnects every vertex of `a` from every vertex of `b`.
pub fn separates(net: &Network, cut: &[usize], a: &[usize], b: &[usize]) -> bool {
    let seen = net.reachable(a, cut);
    !b.iter().any(|&y| seen[y])
}

fn check_disjoint(net: &Network, family: &[Vec<usize>], what: &str) -> Result<()> {
    let mut used = vec![false; net.edge_count()];
    for set in family {
        if set.is_empty() {
            return Err(Error::Validation(format!("empty {what}")));
        }
        for &e in set {
            if e >= used.len() {
                return Err(Error::InvalidArgument(format!("edge {e} out of range")));
            }
            if used[e] {
                return Err(Error::Validation(format!("edge {e} appears in two {what}s")));
            }
            used[e] = true;
        }
    }
    Ok(())
}

/// `[Σ_π (Σ_{e∈π} c_e)⁻¹]⁻¹`, an upper bound on `C_eff(A, B)` for edge-disjoint cutsets
/// separating `A` from `B`.
pub fn nash_williams(net: &Network, cutsets: &[Vec<usize>], a: &[usize], b: &[usize]) -> Result<f64> {
    check_disjoint(net, cutsets, "cutset")?;
    if cutsets.is_empty() {
        return Err(Error::InvalidArgument("no cutsets".into()));
    }
    let mut inv = 0.0;
    for (k, cut) in cutsets.iter().enumerate() {
        if !separates(net, cut, a, b) {
            return Err(Error::Validation(format!("cutset {k} does not separate the terminals")));
        }
        inv += 1.0 / cut.iter().map(|&e| net.edge(e).c).sum::<f64>();
    }
    Ok(1.0 / inv)
}

/// `[Σ_P (Σ_{e∈P} r_e)⁻¹]⁻¹`, an upper bound on `R_eff(u, v)` for edge-disjoint paths from `u`
/// to `v`, each given as its edges in order.
pub fn path_bound(net: &Network, paths: &[Vec<usize>], u: usize, v: usize) -> Result<f64> {
    check_disjoint(net, paths, "path")?;
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no paths".into()));
    }
    let mut inv = 0.0;
    for (k, path) in paths.iter().enumerate() {
        let mut x = u;
        for &e in path {
            let edge = net.edge(e);
            if edge.u != x && edge.v != x {
                return Err(Error::Validation(format!("path {k} is not connected at edge {e}")));
            }
            x = edge.other(x);
        }
        if x != v {
            return Err(Error::Validation(format!("path {k} does not end at the sink")));
        }
        inv += 1.0 / path.iter().map(|&e| net.edge(e).resistance()).sum::<f64>();
    }
    Ok(1.0 / inv)
}

#[cfg(test)]
mod tests {
    use super::super::effective_resistance;
    use super::*;

    #[test]
    fn chain_bounds_are_exact() {
        let net = Network::new(4, vec![(0, 1, 1.0), (1, 2, 2.0), (2, 3, 4.0)]).unwrap();
        let (r, _) = effective_resistance(&net, &[0], &[3]).unwrap();
        let nw = nash_williams(&net, &[vec![0], vec![1], vec![2]], &[0], &[3]).unwrap();
        assert!((nw - 1.0 / r).abs() < 1e-14);
        let pb = path_bound(&net, &[vec![0, 1, 2]], 0, 3).unwrap();
        assert!((pb - r).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_families() {
        let net = Network::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        assert!(matches!(nash_williams(&net, &[vec![0]], &[0], &[2]), Err(Error::Validation(_))));
        assert!(nash_williams(&net, &[vec![0, 2], vec![2, 1]], &[0], &[2]).is_err());
        assert!(path_bound(&net, &[vec![1]], 0, 2).is_err());
        assert!(path_bound(&net, &[vec![0, 1], vec![2]], 0, 2).is_ok());
    }
}
