//! Gibbs-Markov decomposition `h^V = h^U + φ^{V,U}`.

use super::Field;
use crate::error::{Error, Result};
use crate::green::{boundary_flux, green_matrix, DirichletSolver, GreenOperator, PIVOT_FLOOR};
use crate::lattice::LatticeDomain;
use crate::linalg::PivotedCholesky;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

/// The binding field `φ^{V,U}`: values on `V`, harmonic on `U`.
#[derive(Clone, Debug)]
pub struct BindingField {
    pub field: Field,
    inner: Vec<bool>,
}

impl BindingField {
    /// Membership of each outer vertex in the inner set `U`.
    pub fn inner_mask(&self) -> &[bool] {
        &self.inner
    }

    /// `max_{x∈U} |Δφ(x)|`.
    pub fn harmonicity_residual(&self) -> f64 {
        let lap = self.field.domain().laplacian_apply(self.field.values());
        lap.iter()
            .zip(&self.inner)
            .filter(|(_, &u)| u)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Covariance objects of the Gibbs-Markov decomposition for a pair `U ⊊ V`.
#[derive(Debug)]
pub struct GibbsMarkov {
    outer: Arc<LatticeDomain>,
    inner: Arc<LatticeDomain>,
    inner_index: Vec<usize>,
    inner_mask: Vec<bool>,
    g_outer: GreenOperator,
    g_inner: GreenOperator,
    binding_cov: DMatrix<f64>,
    binding_factor: PivotedCholesky,
}

impl GibbsMarkov {
    pub fn new(outer: Arc<LatticeDomain>, inner: Arc<LatticeDomain>) -> Result<Self> {
        let inner_index = outer.embedding_of(&inner)?;
        if inner.len() >= outer.len() {
            return Err(Error::InvalidArgument("inner set must be a proper subset".into()));
        }
        let mut inner_mask = vec![false; outer.len()];
        for &i in &inner_index {
            inner_mask[i] = true;
        }
        let g_outer = green_matrix(&outer)?;
        let g_inner = green_matrix(&inner)?;
        let mut binding_cov = g_outer.matrix().clone();
        for (a, &i) in inner_index.iter().enumerate() {
            for (b, &j) in inner_index.iter().enumerate() {
                binding_cov[(i, j)] -= g_inner.get(a, b);
            }
        }
        let n = outer.len();
        let binding_factor = PivotedCholesky::factor(binding_cov.as_slice(), n, PIVOT_FLOOR)?;
        Ok(GibbsMarkov { outer, inner, inner_index, inner_mask, g_outer, g_inner, binding_cov, binding_factor })
    }

    pub fn outer(&self) -> &Arc<LatticeDomain> {
        &self.outer
    }

    pub fn inner(&self) -> &Arc<LatticeDomain> {
        &self.inner
    }

    pub fn green_outer(&self) -> &GreenOperator {
        &self.g_outer
    }

    pub fn green_inner(&self) -> &GreenOperator {
        &self.g_inner
    }

    /// `C^{V,U} = G^V − G^U`, indexed by the outer domain.
    pub fn binding_covariance(&self) -> &DMatrix<f64> {
        &self.binding_cov
    }

    /// Indices in `V` of the vertices of `V ∖ U`.
    pub fn frame_indices(&self) -> Vec<usize> {
        (0..self.outer.len()).filter(|&i| !self.inner_mask[i]).collect()
    }

    /// Linear map from values on `V ∖ U` to the harmonic extension on `V`, as a `|V| × |V∖U|`
    /// matrix.
    pub fn extension_operator(&self) -> Result<DMatrix<f64>> {
        let frame = self.frame_indices();
        let solver = DirichletSolver::sparse(&self.inner)?;
        let mut e = DMatrix::zeros(self.outer.len(), frame.len());
        for (c, &w) in frame.iter().enumerate() {
            let wv = self.outer.vertex(w);
            let rhs = boundary_flux(&self.inner, |z| if z == wv { 1.0 } else { 0.0 });
            let u = solver.solve_neg_laplacian(&rhs);
            for (a, &i) in self.inner_index.iter().enumerate() {
                e[(i, c)] = u[a];
            }
            e[(w, c)] = 1.0;
        }
        Ok(e)
    }

    /// `C^{V,U}` computed by harmonic extension of `G^V` restricted to `V ∖ U`.
    pub fn binding_covariance_harmonic(&self) -> Result<DMatrix<f64>> {
        let frame = self.frame_indices();
        let e = self.extension_operator()?;
        let gw = DMatrix::from_fn(frame.len(), frame.len(), |a, b| self.g_outer.get(frame[a], frame[b]));
        Ok(&e * gw * e.transpose())
    }

    /// `‖G^V − (G^U + C^{V,U})‖∞` with `C^{V,U}` from the harmonic-extension route.
    pub fn identity_residual(&self) -> Result<f64> {
        let c = self.binding_covariance_harmonic()?;
        let mut total = c;
        for (a, &i) in self.inner_index.iter().enumerate() {
            for (b, &j) in self.inner_index.iter().enumerate() {
                total[(i, j)] += self.g_inner.get(a, b);
            }
        }
        Ok((self.g_outer.matrix() - total).amax())
    }

    fn wrap_binding(&self, values: Vec<f64>) -> Result<BindingField> {
        Ok(BindingField { field: Field::new(self.outer.clone(), values)?, inner: self.inner_mask.clone() })
    }

    /// Binding field sampled from its exact covariance.
    pub fn sample_binding<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BindingField> {
        let z: Vec<f64> = (0..self.binding_factor.rank()).map(|_| rng.sample(StandardNormal)).collect();
        self.wrap_binding(self.binding_factor.apply(&z))
    }

    /// Binding field obtained as the harmonic extension of a sample of `h^V` on `V ∖ U`.
    pub fn sample_binding_harmonic<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BindingField> {
        let h = self.g_outer.factor()?;
        let z: Vec<f64> = (0..h.rank()).map(|_| rng.sample(StandardNormal)).collect();
        let hv = h.apply(&z);
        let solver = DirichletSolver::sparse(&self.inner)?;
        let outer = &self.outer;
        let u = solver.harmonic_extension(&self.inner, |v| outer.index_of(v).map_or(0.0, |i| hv[i]));
        let mut values = hv;
        for (a, &i) in self.inner_index.iter().enumerate() {
            values[i] = u[a];
        }
        self.wrap_binding(values)
    }

    /// Independent pair `(h^U, φ^{V,U})`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Field, BindingField)> {
        let f = self.g_inner.factor()?;
        let z: Vec<f64> = (0..f.rank()).map(|_| rng.sample(StandardNormal)).collect();
        let inner = Field::new(self.inner.clone(), f.apply(&z))?;
        let binding = self.sample_binding(rng)?;
        Ok((inner, binding))
    }

    /// `h^U + φ^{V,U}` as a field on `V`.
    pub fn compose(&self, inner: &Field, binding: &BindingField) -> Result<Field> {
        let mut v = binding.field.values().to_vec();
        for (a, &i) in self.inner_index.iter().enumerate() {
            v[i] += inner.values()[a];
        }
        Field::new(self.outer.clone(), v)
    }
}

/// One draw of the Gibbs-Markov decomposition for `U ⊊ V`.
pub fn gibbs_markov_split<R: Rng + ?Sized>(
    outer: &Arc<LatticeDomain>,
    inner: &Arc<LatticeDomain>,
    rng: &mut R,
) -> Result<(Field, BindingField)> {
    GibbsMarkov::new(outer.clone(), inner.clone())?.sample(rng)
}
