//! Exact samplers of the discrete Gaussian free field and its decompositions.

mod concentric;
mod gibbs;
mod hierarchy;

pub use concentric::{ConcentricDecomposition, ConcentricLayer, ConcentricSample};
pub use gibbs::{gibbs_markov_split, BindingField, GibbsMarkov};
pub use hierarchy::{HierarchicalSampler, MAX_HIERARCHY_DEPTH};

use crate::error::{Error, Result};
use crate::green::{DirichletSolver, GreenOperator};
use crate::lattice::{LatticeDomain, Vertex};
use rand::Rng;
use rand_distr::StandardNormal;
use std::io::{Read, Write};
use std::sync::Arc;

/// Real values indexed by the vertices of a domain, zero off the domain.
#[derive(Clone, Debug)]
pub struct Field {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidSize(format!(
                "field has {} values for {} vertices",
                values.len(),
                domain.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Field { domain, values })
    }

    pub fn zeros(domain: Arc<LatticeDomain>) -> Self {
        let n = domain.len();
        Field { domain, values: vec![0.0; n] }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a vertex, zero off the domain.
    pub fn at(&self, v: Vertex) -> f64 {
        self.domain.index_of(v).map_or(0.0, |i| self.values[i])
    }

    /// Maximum value and the index where it is attained (first index on ties).
    pub fn argmax(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.argmax().1
    }
}

/// Writes fields in the binary format: per record, `N` and the vertex count as little-endian
/// `u64`, followed by the values as little-endian `f64` in index order.
pub fn write_fields<W: Write>(mut w: W, fields: &[Field]) -> Result<()> {
    for f in fields {
        w.write_all(&(f.domain.scale() as u64).to_le_bytes())?;
        w.write_all(&(f.len() as u64).to_le_bytes())?;
        for v in &f.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads records written by [`write_fields`] as `(N, values)` pairs.
pub fn read_fields<R: Read>(mut r: R) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut out = Vec::new();
    let mut word = [0u8; 8];
    loop {
        match r.read_exact(&mut word) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let n = u64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let count = u64::from_le_bytes(word) as usize;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        out.push((n, values));
    }
    Ok(out)
}

/// Writes fields as CSV, one replica per row.
pub fn write_fields_csv<W: Write>(mut w: W, fields: &[Field]) -> Result<()> {
    for f in fields {
        let row: Vec<String> = f.values.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `L Z` with `L` the square-root factor of the Green operator and `Z` iid standard normals.
pub fn sample_dense<R: Rng + ?Sized>(green: &GreenOperator, rng: &mut R) -> Result<Field> {
    let f = green.factor()?;
    let z: Vec<f64> = (0..f.rank()).map(|_| rng.sample(StandardNormal)).collect();
    Field::new(green.domain().clone(), f.apply(&z))
}

/// Exact sampler for large domains: sine transform on boxes, envelope factor otherwise.
#[derive(Clone, Debug)]
pub struct FieldSampler {
    domain: Arc<LatticeDomain>,
    solver: DirichletSolver,
}

impl FieldSampler {
    pub fn new(domain: Arc<LatticeDomain>) -> Result<Self> {
        let solver = DirichletSolver::new(&domain)?;
        Ok(FieldSampler { domain, solver })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn solver(&self) -> &DirichletSolver {
        &self.solver
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.solver.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        Field { domain: self.domain.clone(), values: self.solver.sample(rng) }
    }
}

/// Sampler of the field pinned to zero at the origin, `h^{D∖{0}}`, obtained by conditioning:
/// `h − G(·, 0) h₀ / G(0, 0)`.
#[derive(Clone, Debug)]
pub struct PinnedSampler {
    base: FieldSampler,
    origin: usize,
    regression: Vec<f64>,
}

impl PinnedSampler {
    pub fn new(domain: Arc<LatticeDomain>) -> Result<Self> {
        let origin = domain.index_of((0, 0)).ok_or(Error::OutsideDomain(0, 0))?;
        let base = FieldSampler::new(domain)?;
        let col = base.solver.green_column(origin);
        let g00 = col[origin];
        let regression = col.iter().map(|v| v / g00).collect();
        Ok(PinnedSampler { base, origin, regression })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        self.base.domain()
    }

    /// `G(x, 0) / G(0, 0)`.
    pub fn regression(&self) -> &[f64] {
        &self.regression
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut h = self.base.sample_values(rng);
        let h0 = h[self.origin];
        for (v, r) in h.iter_mut().zip(&self.regression) {
            *v -= r * h0;
        }
        h[self.origin] = 0.0;
        h
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        Field { domain: self.base.domain.clone(), values: self.sample_values(rng) }
    }
}

/// One sample of the pinned field on a domain containing the origin.
pub fn sample_pinned<R: Rng + ?Sized>(domain: &Arc<LatticeDomain>, rng: &mut R) -> Result<Field> {
    Ok(PinnedSampler::new(domain.clone())?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_roundtrip() {
        let d = Arc::new(LatticeDomain::make_box(5).unwrap());
        let s = FieldSampler::new(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fields = vec![s.sample(&mut rng), s.sample(&mut rng)];
        let mut buf = Vec::new();
        write_fields(&mut buf, &fields).unwrap();
        let back = read_fields(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].0, 5);
        assert_eq!(back[1].1, fields[1].values());
    }

    #[test]
    fn pinned_is_zero_at_origin() {
        let d = Arc::new(LatticeDomain::centered_box(6).unwrap());
        let p = PinnedSampler::new(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            assert_eq!(p.sample(&mut rng).at((0, 0)), 0.0);
        }
    }
}
