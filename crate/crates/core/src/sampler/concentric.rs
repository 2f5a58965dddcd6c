//! Concentric decomposition of the field on `D_N` around the origin.
//!
//! With `Δᵏ = {|x|∞ < 2ᵏ}` for `k < n` and `Δⁿ = D_N`, the field is
//! `h^{D_N} = Σ_{k=0}^{n} (φ_k + h'_k)` where `φ_k` is the binding field of `Δᵏ` relative to
//! `Δᵏ ∖ ∂Δᵏ⁻¹` and `h'_k` is an independent field on the annulus `Δᵏ ∖ (Δᵏ⁻¹ ∪ ∂Δᵏ⁻¹)`.
//! Each `φ_k` splits as `(1 + b_k) φ_k(0) + χ_k` with `χ_k` independent of `φ_k(0)`.

use super::Field;
use crate::error::{Error, Result};
use crate::green::{harmonic_measure_from_column, DirichletSolver, PIVOT_FLOOR};
use crate::lattice::{LatticeDomain, Vertex};
use crate::linalg::PivotedCholesky;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

/// Covariance data of one layer `k`.
#[derive(Debug)]
pub struct ConcentricLayer {
    k: usize,
    delta: Arc<LatticeDomain>,
    ring: Vec<Vertex>,
    ring_index: HashMap<Vertex, usize>,
    ring_cov: DMatrix<f64>,
    ring_factor: PivotedCholesky,
    inner: Option<(Arc<LatticeDomain>, DirichletSolver)>,
    annulus: Option<(Arc<LatticeDomain>, DirichletSolver)>,
    h0: Vec<f64>,
    var0: f64,
    b: Vec<f64>,
}

/// The decomposition with lazily built layers.
#[derive(Debug)]
pub struct ConcentricDecomposition {
    outer: Arc<LatticeDomain>,
    n: usize,
    layers: Vec<OnceLock<ConcentricLayer>>,
}

/// One joint draw of all layers.
#[derive(Clone, Debug)]
pub struct ConcentricSample {
    /// `φ_k(0)` for `k = 0..=n`.
    pub phi0: Vec<f64>,
    /// `χ_k` on `D_N`.
    pub chi: Vec<Vec<f64>>,
    /// `h'_k` on `D_N`.
    pub h_prime: Vec<Vec<f64>>,
    /// `S_k = Σ_{ℓ<k} φ_ℓ(0)` for `k = 0..=n+1`.
    pub partial_sums: Vec<f64>,
    /// The reconstructed field `Σ_k ((1 + b_k) φ_k(0) + χ_k + h'_k)`.
    pub field: Field,
}

impl ConcentricDecomposition {
    /// Geometry for an outer domain containing the origin; `n` is the largest integer with
    /// `{|x|∞ ≤ 2ⁿ⁺¹} ⊆ D_N`.
    pub fn new(outer: Arc<LatticeDomain>) -> Result<Self> {
        let covers = |r: i64| (-r..=r).all(|x| (-r..=r).all(|y| outer.contains((x, y))));
        if !covers(2) {
            return Err(Error::InvalidArgument(
                "outer domain must contain the ℓ∞ ball of radius 2 about the origin".into(),
            ));
        }
        let mut n = 0usize;
        while covers(1i64 << (n + 2)) {
            n += 1;
        }
        let layers = (0..=n).map(|_| OnceLock::new()).collect();
        Ok(ConcentricDecomposition { outer, n, layers })
    }

    pub fn depth(&self) -> usize {
        self.n
    }

    pub fn outer(&self) -> &Arc<LatticeDomain> {
        &self.outer
    }

    /// `Δᵏ`.
    pub fn delta(&self, k: usize) -> Result<Arc<LatticeDomain>> {
        if k > self.n {
            return Err(Error::InvalidArgument(format!("layer {k} exceeds depth {}", self.n)));
        }
        if k == self.n {
            return Ok(self.outer.clone());
        }
        Ok(Arc::new(LatticeDomain::centered_box((1usize << k) - 1)?))
    }

    pub fn layer(&self, k: usize) -> Result<&ConcentricLayer> {
        if k > self.n {
            return Err(Error::InvalidArgument(format!("layer {k} exceeds depth {}", self.n)));
        }
        if let Some(l) = self.layers[k].get() {
            return Ok(l);
        }
        let l = self.build_layer(k)?;
        Ok(self.layers[k].get_or_init(|| l))
    }

    fn build_layer(&self, k: usize) -> Result<ConcentricLayer> {
        let delta = self.delta(k)?;
        let outer = &self.outer;
        if k == 0 {
            let ring = vec![(0, 0)];
            let ring_index = HashMap::from([((0, 0), 0)]);
            let ring_cov = DMatrix::from_element(1, 1, 1.0);
            let ring_factor = PivotedCholesky::factor(ring_cov.as_slice(), 1, PIVOT_FLOOR)?;
            let b = outer.vertices().iter().map(|&v| if v == (0, 0) { 0.0 } else { -1.0 }).collect();
            return Ok(ConcentricLayer {
                k,
                delta,
                ring,
                ring_index,
                ring_cov,
                ring_factor,
                inner: None,
                annulus: None,
                h0: vec![1.0],
                var0: 1.0,
                b,
            });
        }
        let inner_dom = self.delta(k - 1)?;
        let ring: Vec<Vertex> = inner_dom.boundary().to_vec();
        let ring_index: HashMap<Vertex, usize> = ring.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let delta_solver = DirichletSolver::new(&delta)?;
        let ring_pos: Vec<usize> = ring
            .iter()
            .map(|&v| delta.index_of(v).ok_or(Error::Containment))
            .collect::<Result<_>>()?;
        let m = ring.len();
        let mut ring_cov = DMatrix::zeros(m, m);
        for (c, &p) in ring_pos.iter().enumerate() {
            let col = delta_solver.green_column(p);
            for (r, &q) in ring_pos.iter().enumerate() {
                ring_cov[(r, c)] = col[q];
            }
        }
        ring_cov = (&ring_cov + ring_cov.transpose()) * 0.5;
        let ring_factor = PivotedCholesky::factor(ring_cov.as_slice(), m, PIVOT_FLOOR)?;
        let inner_solver = DirichletSolver::new(&inner_dom)?;
        let r_ring = 1i64 << (k - 1);
        let annulus_dom =
            delta.restrict(|(x, y)| x.abs().max(y.abs()) > r_ring || is_corner(x, y, r_ring));
        let annulus = match annulus_dom {
            Ok(a) => {
                let a = Arc::new(a);
                let s = DirichletSolver::sparse(&a)?;
                Some((a, s))
            }
            Err(Error::EmptyDomain) => None,
            Err(e) => return Err(e),
        };
        let origin = inner_dom.index_of((0, 0)).ok_or(Error::OutsideDomain(0, 0))?;
        let col0 = inner_solver.green_column(origin);
        let hm = harmonic_measure_from_column(&inner_dom, (0, 0), &col0);
        let h0: Vec<f64> = ring.iter().map(|&z| hm.get(z)).collect();
        let c = &ring_cov * nalgebra::DVector::from_column_slice(&h0);
        let var0 = h0.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>();
        let cov_with_origin = extend_from_ring(
            outer,
            &ring_index,
            c.as_slice(),
            &inner_dom,
            &inner_solver,
            annulus.as_ref(),
        );
        let b = cov_with_origin
            .iter()
            .zip(outer.vertices())
            .map(|(v, &x)| if delta.contains(x) { v / var0 - 1.0 } else { -1.0 })
            .collect();
        Ok(ConcentricLayer {
            k,
            delta,
            ring,
            ring_index,
            ring_cov,
            ring_factor,
            inner: Some((inner_dom, inner_solver)),
            annulus,
            h0,
            var0,
            b,
        })
    }

    /// Covariance of `Σ_k (φ_k + h'_k)` at the given vertices, assembled layer by layer.
    pub fn layer_sum_covariance(&self, points: &[Vertex]) -> Result<DMatrix<f64>> {
        let mut total = DMatrix::zeros(points.len(), points.len());
        for k in 0..=self.n {
            total += self.layer(k)?.covariance_block(points)?;
        }
        Ok(total)
    }

    /// Draws every layer independently and reconstructs the field.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ConcentricSample> {
        let len = self.outer.len();
        let mut total = vec![0.0; len];
        let mut phi0 = Vec::with_capacity(self.n + 1);
        let mut chi = Vec::with_capacity(self.n + 1);
        let mut h_prime = Vec::with_capacity(self.n + 1);
        for k in 0..=self.n {
            let layer = self.layer(k)?;
            let phi = layer.sample_phi(&self.outer, rng);
            let origin = self.outer.index_of((0, 0)).unwrap();
            let p0 = phi[origin];
            let c: Vec<f64> = phi.iter().zip(&layer.b).map(|(f, b)| f - (1.0 + b) * p0).collect();
            let hp = layer.sample_annulus(&self.outer, rng);
            for i in 0..len {
                total[i] += phi[i] + hp[i];
            }
            phi0.push(p0);
            chi.push(c);
            h_prime.push(hp);
        }
        let mut partial_sums = vec![0.0];
        for &p in &phi0 {
            partial_sums.push(partial_sums.last().unwrap() + p);
        }
        Ok(ConcentricSample { phi0, chi, h_prime, partial_sums, field: Field::new(self.outer.clone(), total)? })
    }
}

fn is_corner(x: i64, y: i64, r: i64) -> bool {
    x.abs() == r && y.abs() == r
}

/// Extends ring values to `D_N`: identity on the ring, harmonic in `Δᵏ⁻¹` and in the annulus
/// (zero outside `Δᵏ`).
fn extend_from_ring(
    outer: &LatticeDomain,
    ring_index: &HashMap<Vertex, usize>,
    values: &[f64],
    inner: &LatticeDomain,
    inner_solver: &DirichletSolver,
    annulus: Option<&(Arc<LatticeDomain>, DirichletSolver)>,
) -> Vec<f64> {
    let g = |z: Vertex| ring_index.get(&z).map_or(0.0, |&i| values[i]);
    let mut out = vec![0.0; outer.len()];
    for (&v, &i) in ring_index {
        if let Some(j) = outer.index_of(v) {
            out[j] = values[i];
        }
    }
    let u = inner_solver.harmonic_extension(inner, g);
    for (a, &v) in inner.vertices().iter().enumerate() {
        out[outer.index_of(v).unwrap()] = u[a];
    }
    if let Some((ann, solver)) = annulus {
        let u = solver.harmonic_extension(ann, g);
        for (a, &v) in ann.vertices().iter().enumerate() {
            out[outer.index_of(v).unwrap()] = u[a];
        }
    }
    out
}

impl ConcentricLayer {
    pub fn index(&self) -> usize {
        self.k
    }

    /// `Δᵏ`.
    pub fn delta(&self) -> &Arc<LatticeDomain> {
        &self.delta
    }

    /// `∂Δᵏ⁻¹` (the origin alone for `k = 0`).
    pub fn ring(&self) -> &[Vertex] {
        &self.ring
    }

    /// The annulus `Δᵏ ∖ (Δᵏ⁻¹ ∪ ∂Δᵏ⁻¹)` carrying `h'_k`.
    pub fn annulus(&self) -> Option<&Arc<LatticeDomain>> {
        self.annulus.as_ref().map(|(a, _)| a)
    }

    /// `Var φ_k(0)`.
    pub fn var_phi0(&self) -> f64 {
        self.var0
    }

    /// `b_k` on `D_N`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Harmonic measure of the origin on the ring.
    pub fn origin_weights(&self) -> &[f64] {
        &self.h0
    }

    /// Weights `w` with `φ_k(x) = Σ_z w_z φ_k(z)` over ring vertices `z`, and the Green column
    /// of the annulus at `x` when `x` lies in it.
    fn weights(&self, x: Vertex) -> (Vec<f64>, Option<Vec<f64>>) {
        let m = self.ring.len();
        if self.k == 0 {
            return (vec![if x == (0, 0) { 1.0 } else { 0.0 }], None);
        }
        if let Some(&i) = self.ring_index.get(&x) {
            let mut w = vec![0.0; m];
            w[i] = 1.0;
            return (w, None);
        }
        let (inner, isolver) = self.inner.as_ref().unwrap();
        if let Some(j) = inner.index_of(x) {
            let col = isolver.green_column(j);
            let hm = harmonic_measure_from_column(inner, x, &col);
            return (self.ring.iter().map(|&z| hm.get(z)).collect(), None);
        }
        if let Some((ann, asolver)) = &self.annulus {
            if let Some(j) = ann.index_of(x) {
                let col = asolver.green_column(j);
                let hm = harmonic_measure_from_column(ann, x, &col);
                return (self.ring.iter().map(|&z| hm.get(z)).collect(), Some(col));
            }
        }
        (vec![0.0; m], None)
    }

    /// `Cov(φ_k + h'_k)` at the given vertices.
    pub fn covariance_block(&self, points: &[Vertex]) -> Result<DMatrix<f64>> {
        let p = points.len();
        let m = self.ring.len();
        let mut e = DMatrix::zeros(p, m);
        let mut cols = Vec::with_capacity(p);
        for (r, &x) in points.iter().enumerate() {
            let (w, col) = self.weights(x);
            for (c, v) in w.into_iter().enumerate() {
                e[(r, c)] = v;
            }
            cols.push(col);
        }
        let mut cov = &e * &self.ring_cov * e.transpose();
        if let Some((ann, _)) = &self.annulus {
            for (r, col) in cols.iter().enumerate() {
                let Some(col) = col else { continue };
                for (c, &y) in points.iter().enumerate() {
                    if let Some(j) = ann.index_of(y) {
                        cov[(r, c)] += col[j];
                    }
                }
            }
        }
        Ok((&cov + cov.transpose()) * 0.5)
    }

    /// One draw of `φ_k` on `D_N`.
    pub fn sample_phi<R: Rng + ?Sized>(&self, outer: &LatticeDomain, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.ring_factor.rank()).map(|_| rng.sample(StandardNormal)).collect();
        let vals = self.ring_factor.apply(&z);
        match &self.inner {
            None => {
                let mut out = vec![0.0; outer.len()];
                out[outer.index_of((0, 0)).unwrap()] = vals[0];
                out
            }
            Some((inner, solver)) => {
                extend_from_ring(outer, &self.ring_index, &vals, inner, solver, self.annulus.as_ref())
            }
        }
    }

    /// One draw of `h'_k` on `D_N`.
    pub fn sample_annulus<R: Rng + ?Sized>(&self, outer: &LatticeDomain, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; outer.len()];
        if self.k == 0 {
            return out;
        }
        if let Some((ann, solver)) = &self.annulus {
            let v = solver.sample(rng);
            for (a, &x) in ann.vertices().iter().enumerate() {
                out[outer.index_of(x).unwrap()] = v[a];
            }
        }
        out
    }
}
