//! Splitting of the Green function along the lazy-walk heat kernel.

use super::green_matrix;
use crate::error::{Error, Result};
use crate::lattice::LatticeDomain;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Largest domain accepted by [`green_heat_split`].
pub const MAX_SPLIT_VERTICES: usize = 2000;

/// `G = C₁ + C₂` with `C₁ = Σ_{n≤m} ½Qⁿ` for the lazy walk `Q = ½I + ½P` killed off the domain.
#[derive(Clone, Debug)]
pub struct HeatSplit {
    pub cutoff: usize,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
}

pub fn green_heat_split(domain: &Arc<LatticeDomain>, cutoff: usize) -> Result<HeatSplit> {
    let n = domain.len();
    if n > MAX_SPLIT_VERTICES {
        return Err(Error::InvalidSize(format!("{n} vertices exceed the dense limit {MAX_SPLIT_VERTICES}")));
    }
    let g = green_matrix(domain)?;
    let mut term = DMatrix::<f64>::identity(n, n) * 0.5;
    let mut c1 = term.clone();
    let mut next = DMatrix::<f64>::zeros(n, n);
    for _ in 0..cutoff {
        for j in 0..n {
            for i in 0..n {
                let s: f64 = domain.neighbor_indices(i).map(|k| term[(k, j)]).sum();
                next[(i, j)] = 0.5 * term[(i, j)] + 0.125 * s;
            }
        }
        std::mem::swap(&mut term, &mut next);
        c1 += &term;
    }
    let c2 = g.matrix() - &c1;
    Ok(HeatSplit { cutoff, c1, c2 })
}
