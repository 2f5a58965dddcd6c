//! Discrete Green functions, harmonic measure, conformal radius and the potential kernel.
//!
//! The Green function of a finite `V ⊂ ℤ²` is `G^V = 4(−Δ_V)⁻¹`, the expected number of visits
//! to `y` by the simple random walk from `x` before it leaves `V`.

mod kernel;
mod split;

pub use kernel::{calibrate_c0, gauss_legendre, potential_kernel, KernelTable, C0, G};
pub use split::{green_heat_split, HeatSplit};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, Vertex, NEIGHBORS};
use crate::linalg::{Ordering, PivotedCholesky, SkylineCholesky};
use crate::spectral::BoxSpectral;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, OnceLock};

/// `√g`.
pub fn sqrt_g() -> f64 {
    G.sqrt()
}

/// Linear solver for the Dirichlet problem on a lattice domain.
#[derive(Clone, Debug)]
pub enum DirichletSolver {
    Spectral(BoxSpectral),
    Sparse(SkylineCholesky),
}

impl DirichletSolver {
    /// Spectral solver on boxes, envelope Cholesky otherwise.
    pub fn new(domain: &LatticeDomain) -> Result<Self> {
        match domain.box_frame() {
            Some((_, m)) => Ok(DirichletSolver::Spectral(BoxSpectral::new(m))),
            None => Self::sparse(domain),
        }
    }

    /// Envelope Cholesky of `−Δ` in row-major order.
    pub fn sparse(domain: &LatticeDomain) -> Result<Self> {
        let chol = SkylineCholesky::factor(&domain.neg_laplacian(), Ordering::Natural)
            .map_err(|e| Error::Solver(e.to_string()))?;
        Ok(DirichletSolver::Sparse(chol))
    }

    pub fn len(&self) -> usize {
        match self {
            DirichletSolver::Spectral(s) => s.len(),
            DirichletSolver::Sparse(c) => c.dim(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Solves `−Δu = f` with zero boundary values.
    pub fn solve_neg_laplacian(&self, f: &[f64]) -> Vec<f64> {
        match self {
            DirichletSolver::Spectral(s) => s.solve_poisson(f),
            DirichletSolver::Sparse(c) => c.solve(f),
        }
    }

    /// Applies `G = 4(−Δ)⁻¹`.
    pub fn apply_green(&self, f: &[f64]) -> Vec<f64> {
        let mut u = self.solve_neg_laplacian(f);
        for v in u.iter_mut() {
            *v *= 4.0;
        }
        u
    }

    /// Column `G(·, x_i)`.
    pub fn green_column(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.len()];
        e[i] = 1.0;
        self.apply_green(&e)
    }

    /// Exact sample with covariance `G`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            DirichletSolver::Spectral(s) => s.sample(rng),
            DirichletSolver::Sparse(c) => {
                let z: Vec<f64> = (0..c.dim()).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
                c.inverse_sqrt_apply(&z)
            }
        }
    }

    /// Harmonic function on the domain with boundary values `g` on the external boundary.
    pub fn harmonic_extension<F: Fn(Vertex) -> f64>(&self, domain: &LatticeDomain, g: F) -> Vec<f64> {
        let rhs = boundary_flux(domain, g);
        self.solve_neg_laplacian(&rhs)
    }
}

/// For each domain vertex, the sum of `g` over its neighbors outside the domain.
pub fn boundary_flux<F: Fn(Vertex) -> f64>(domain: &LatticeDomain, g: F) -> Vec<f64> {
    domain
        .vertices()
        .iter()
        .map(|&(x, y)| {
            NEIGHBORS
                .iter()
                .map(|&(dx, dy)| (x + dx, y + dy))
                .filter(|&z| !domain.contains(z))
                .map(&g)
                .sum()
        })
        .collect()
}

/// Dense Green matrix of a domain with a cached square-root factor.
#[derive(Debug)]
pub struct GreenOperator {
    domain: Arc<LatticeDomain>,
    g: DMatrix<f64>,
    factor: OnceLock<PivotedCholesky>,
}

/// Pivot floor of the square-root factor, relative to the largest diagonal entry.
pub const PIVOT_FLOOR: f64 = 1e-12;

impl GreenOperator {
    /// Wraps an explicitly given covariance matrix.
    pub fn from_matrix(domain: Arc<LatticeDomain>, g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != domain.len() || g.ncols() != domain.len() {
            return Err(Error::InvalidSize("matrix does not match domain".into()));
        }
        Ok(GreenOperator { domain, g, factor: OnceLock::new() })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.g.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    /// `G(u, v)`, zero when either vertex lies outside the domain.
    pub fn entry(&self, u: Vertex, v: Vertex) -> f64 {
        match (self.domain.index_of(u), self.domain.index_of(v)) {
            (Some(i), Some(j)) => self.g[(i, j)],
            _ => 0.0,
        }
    }

    /// Square-root factor `G = L Lᵀ` with diagonal pivoting and floor [`PIVOT_FLOOR`].
    pub fn factor(&self) -> Result<&PivotedCholesky> {
        if let Some(f) = self.factor.get() {
            return Ok(f);
        }
        let f = PivotedCholesky::factor(self.g.as_slice(), self.len(), PIVOT_FLOOR)?;
        Ok(self.factor.get_or_init(|| f))
    }

    /// `max_x ‖ΔG(·, x) + 4δ_x‖∞`.
    pub fn poisson_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            let col = self.g.column(x);
            let lap = self.domain.laplacian_apply(col.as_slice());
            for (i, v) in lap.iter().enumerate() {
                let target = if i == x { -4.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// Largest asymmetry `max |G − Gᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.g[(i, j)] - self.g[(j, i)]).abs());
            }
        }
        worst
    }

    /// Writes the matrix as CSV in domain index order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:.17e}", self.g[(i, j)])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Dense Green matrix `G^V`, computed column by column from the Dirichlet solver.
pub fn green_matrix(domain: &Arc<LatticeDomain>) -> Result<GreenOperator> {
    let solver = DirichletSolver::new(domain)?;
    green_matrix_with(domain, &solver)
}

/// Dense Green matrix using a given solver for the domain.
pub fn green_matrix_with(domain: &Arc<LatticeDomain>, solver: &DirichletSolver) -> Result<GreenOperator> {
    let n = domain.len();
    if solver.len() != n {
        return Err(Error::InvalidSize("solver does not match domain".into()));
    }
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = solver.green_column(j);
        g.column_mut(j).copy_from_slice(&col);
    }
    for j in 0..n {
        for i in 0..j {
            let s = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    GreenOperator::from_matrix(domain.clone(), g)
}

/// Green matrix of the one-dimensional walk on the interval `(0, N) ∩ ℤ`, `G = 2(−Δ)⁻¹`.
pub fn green_matrix_1d(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("interval length {n} < 2")));
    }
    let m = n - 1;
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut rhs = vec![0.0; m];
        rhs[j] = 2.0;
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        for i in 0..m {
            let sub = if i > 0 { -1.0 } else { 0.0 };
            let denom = 2.0 - sub * if i > 0 { c[i - 1] } else { 0.0 };
            c[i] = -1.0 / denom;
            d[i] = (rhs[i] - sub * if i > 0 { d[i - 1] } else { 0.0 }) / denom;
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            x[i] = d[i] - if i + 1 < m { c[i] * x[i + 1] } else { 0.0 };
        }
        g.column_mut(j).copy_from_slice(&x);
    }
    Ok(g)
}

/// Exit distribution `H^V(x, ·)` of the walk started at `x`.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicMeasure {
    pub source: Vertex,
    pub mass: BTreeMap<Vertex, f64>,
}

impl HarmonicMeasure {
    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn get(&self, z: Vertex) -> f64 {
        self.mass.get(&z).copied().unwrap_or(0.0)
    }
}

/// Harmonic measure from `x`: `H^V(x, z) = ¼ Σ_{y∈V, y∼z} G^V(x, y)`.
pub fn harmonic_measure(domain: &LatticeDomain, x: Vertex) -> Result<HarmonicMeasure> {
    let solver = DirichletSolver::new(domain)?;
    harmonic_measure_with(domain, &solver, x)
}

pub fn harmonic_measure_with(
    domain: &LatticeDomain,
    solver: &DirichletSolver,
    x: Vertex,
) -> Result<HarmonicMeasure> {
    let i = domain.index_of(x).ok_or(Error::OutsideDomain(x.0, x.1))?;
    let col = solver.green_column(i);
    Ok(harmonic_measure_from_column(domain, x, &col))
}

/// Harmonic measure from `x` given the Green column `G(·, x)`.
pub fn harmonic_measure_from_column(domain: &LatticeDomain, x: Vertex, col: &[f64]) -> HarmonicMeasure {
    let mut mass = BTreeMap::new();
    for &z in domain.boundary() {
        let s: f64 = NEIGHBORS
            .iter()
            .filter_map(|&(dx, dy)| domain.index_of((z.0 + dx, z.1 + dy)))
            .map(|j| col[j])
            .sum();
        mass.insert(z, 0.25 * s);
    }
    HarmonicMeasure { source: x, mass }
}

/// `G^V(x, y) = −a(x − y) + Σ_{z∈∂V} H^V(x, z) a(z − y)`.
pub fn green_via_kernel(domain: &LatticeDomain, x: Vertex, y: Vertex, table: &KernelTable) -> Result<f64> {
    if !domain.contains(y) {
        return Err(Error::OutsideDomain(y.0, y.1));
    }
    let h = harmonic_measure(domain, x)?;
    Ok(green_via_kernel_with(&h, y, table))
}

/// Kernel representation of `G^V(x, y)` from a precomputed harmonic measure at `x`.
pub fn green_via_kernel_with(h: &HarmonicMeasure, y: Vertex, table: &KernelTable) -> f64 {
    let x = h.source;
    let mut s = -table.get((x.0 - y.0, x.1 - y.1));
    for (&z, &p) in &h.mass {
        s += p * table.get((z.0 - y.0, z.1 - y.1));
    }
    s
}

/// Discrete conformal radius `exp(Σ_z H(x, z) log|x/N − z/N|)`.
pub fn conformal_radius(domain: &LatticeDomain, x: Vertex) -> Result<f64> {
    let h = harmonic_measure(domain, x)?;
    Ok(conformal_radius_from(&h, domain.scale()))
}

pub fn conformal_radius_from(h: &HarmonicMeasure, scale: usize) -> f64 {
    let nf = scale as f64;
    let x = h.source;
    let s: f64 = h
        .mass
        .iter()
        .map(|(&z, &p)| {
            let d = (((z.0 - x.0) as f64).powi(2) + ((z.1 - x.1) as f64).powi(2)).sqrt() / nf;
            p * d.ln()
        })
        .sum();
    s.exp()
}

/// Continuum Green function of the unit disc, `g log(|1 − x ȳ| / |x − y|)`.
pub fn continuum_green_disc(x: (f64, f64), y: (f64, f64)) -> Result<f64> {
    let dx = ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt();
    if dx == 0.0 {
        return Err(Error::InvalidArgument("continuum Green function is singular at x = y".into()));
    }
    if x.0 * x.0 + x.1 * x.1 >= 1.0 || y.0 * y.0 + y.1 * y.1 >= 1.0 {
        return Err(Error::InvalidArgument("points must lie in the open unit disc".into()));
    }
    let re = 1.0 - (x.0 * y.0 + x.1 * y.1);
    let im = -(x.1 * y.0 - x.0 * y.1);
    Ok(G * ((re * re + im * im).sqrt() / dx).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Region;

    #[test]
    fn single_vertex() {
        let d = Arc::new(LatticeDomain::make_box(2).unwrap());
        let g = green_matrix(&d).unwrap();
        assert!((g.get(0, 0) - 1.0).abs() < 1e-14);
        let h = harmonic_measure(&d, (1, 1)).unwrap();
        assert_eq!(h.mass.len(), 4);
        for v in h.mass.values() {
            assert!((v - 0.25).abs() < 1e-14);
        }
        let t = KernelTable::new();
        assert!((green_via_kernel(&d, (1, 1), (1, 1), &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional() {
        let g = green_matrix_1d(4).unwrap();
        assert!((g[(1, 1)] - 2.0).abs() < 1e-14);
        for x in 1..4 {
            for y in 1..4 {
                let (a, b) = (x.min(y) as f64, x.max(y) as f64);
                assert!((g[(x - 1, y - 1)] - 2.0 * a * (4.0 - b) / 4.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn spectral_and_sparse_agree() {
        let d = Arc::new(LatticeDomain::make_box(9).unwrap());
        let a = green_matrix(&d).unwrap();
        let b = green_matrix_with(&d, &DirichletSolver::sparse(&d).unwrap()).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-12);
        assert_eq!(a.asymmetry(), 0.0);
        assert!(a.poisson_residual() < 1e-12);
    }

    #[test]
    fn disc_radius() {
        let d = LatticeDomain::discretize(&Region::unit_disc(), 48).unwrap();
        let r0 = conformal_radius(&d, (0, 0)).unwrap();
        let r1 = conformal_radius(&d, (24, 0)).unwrap();
        assert!((r0 - 1.0).abs() < 0.05);
        assert!(r1 < r0);
    }

    #[test]
    fn continuum_disc_values() {
        let v = continuum_green_disc((0.0, 0.0), (0.5, 0.0)).unwrap();
        assert!((v - G * 2f64.ln()).abs() < 1e-14);
        assert!(continuum_green_disc((0.1, 0.1), (0.1, 0.1)).is_err());
        let a = continuum_green_disc((0.2, -0.3), (0.4, 0.1)).unwrap();
        let b = continuum_green_disc((0.4, 0.1), (0.2, -0.3)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
