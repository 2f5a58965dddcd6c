//! Gaussian multiplicative chaos built from the dyadic binding fields of the unit square.
//!
//! The square is represented by the box `V_M`, `M = 2ᵐ`, so that `x ∈ V_M` sits at `x/M`.
//! Level `k` of [`HierarchicalSampler`] is the binding field between the unions of dyadic
//! squares of side `2⁻ᵏ` and `2⁻ᵏ⁻¹`, and `φ_n` is the sum of the first `n` levels. Densities
//! live on the closed grid `{0, …, M}²` and are integrated by the trapezoidal rule, so every
//! dyadic cell of side `2⁻ᶜ` with `c ≤ m` has exactly its Lebesgue area at `β = 0`.

use crate::error::{Error, Result};
use crate::extremes::c_hat;
use crate::green::{C0, G};
use crate::sampler::HierarchicalSampler;
use crate::spectral::BoxSpectral;
use rand::Rng;
use serde::Serialize;
use std::io::Write;

/// `α = 2/√g`.
pub fn alpha() -> f64 {
    2.0 / G.sqrt()
}

/// Default fine resolution `2⁷` per unit length.
pub const DEFAULT_RESOLUTION_DEPTH: usize = 7;

/// Fine lattice of the unit square with per-level exact variances.
#[derive(Debug)]
pub struct ChaosLattice {
    sampler: HierarchicalSampler,
    level_var: Vec<Vec<f64>>,
}

impl ChaosLattice {
    /// Lattice with resolution `M = 2^depth`.
    pub fn new(depth: usize) -> Result<Self> {
        let sampler = HierarchicalSampler::new(depth)?;
        let level_var = (0..depth).map(|k| sampler.level_variance(k)).collect();
        Ok(ChaosLattice { sampler, level_var })
    }

    pub fn depth(&self) -> usize {
        self.sampler.depth()
    }

    /// `M`.
    pub fn side(&self) -> usize {
        self.sampler.side()
    }

    pub fn sampler(&self) -> &HierarchicalSampler {
        &self.sampler
    }

    /// Pointwise variance of level `k` on the interior vertices.
    pub fn level_variance(&self, k: usize) -> &[f64] {
        &self.level_var[k]
    }

    /// `Var φ_n = Σ_{k<n} Var(level k)`.
    pub fn partial_variance(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.sampler.domain().len()];
        for lv in &self.level_var[..n] {
            for (a, b) in v.iter_mut().zip(lv) {
                *a += b;
            }
        }
        v
    }

    /// Independent draws of levels `0..n`.
    pub fn sample_levels<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n)
            .map(|k| {
                let mut v = vec![0.0; self.sampler.domain().len()];
                self.sampler.add_level(k, rng, &mut v);
                v
            })
            .collect()
    }

    /// `G^{S̃ⁿ}(x, x)` on the interior vertices, where `S̃ⁿ` is the union of the open dyadic
    /// squares of side `2⁻ⁿ`; zero on their boundaries.
    pub fn nested_diagonal(&self, n: usize) -> Vec<f64> {
        let m = self.side();
        let l = m >> n;
        let mut out = vec![0.0; (m - 1) * (m - 1)];
        if l < 2 {
            return out;
        }
        let d = BoxSpectral::new(l).green_diagonal();
        for y in 1..m {
            for x in 1..m {
                let (lx, ly) = (x % l, y % l);
                if lx != 0 && ly != 0 {
                    out[(y - 1) * (m - 1) + (x - 1)] = d[(ly - 1) * (l - 1) + (lx - 1)];
                }
            }
        }
        out
    }

    /// Discrete conformal radius `r_{S̃ⁿ}(x) = exp((G^{S̃ⁿ}(x, x) − g log M − c₀)/g)`.
    pub fn conformal_radius(&self, n: usize) -> Vec<f64> {
        let lm = (self.side() as f64).ln();
        self.nested_diagonal(n).iter().map(|&d| radius_from_diagonal(d, lm)).collect()
    }

    /// Conformal radius assigned to the boundary of the square.
    pub fn boundary_radius(&self) -> f64 {
        radius_from_diagonal(0.0, (self.side() as f64).ln())
    }
}

fn radius_from_diagonal(d: f64, log_m: f64) -> f64 {
    ((d - G * log_m - C0) / G).exp()
}

/// How the measure is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    Martingale,
    SenetaHeyde,
}

/// Random measure on the unit square with a density on the closed grid `{0, …, M}²`.
#[derive(Clone, Debug, Serialize)]
pub struct ChaosMeasure {
    side: usize,
    pub cell_level: usize,
    pub generation: usize,
    pub beta: f64,
    pub normalization: Normalization,
    /// Set when `λ = β/α` lies outside the square-integrable range `(0, 1/√2)`.
    pub warning: bool,
    density: Vec<f64>,
}

impl ChaosMeasure {
    /// Lebesgue measure on the square.
    pub fn lebesgue(side: usize, cell_level: usize) -> Result<Self> {
        if !side.is_power_of_two() || side < 2 || (1usize << cell_level) > side {
            return Err(Error::InvalidSize(format!("cells of level {cell_level} on resolution {side}")));
        }
        Ok(ChaosMeasure {
            side,
            cell_level,
            generation: 0,
            beta: 0.0,
            normalization: Normalization::Martingale,
            warning: false,
            density: vec![1.0; (side + 1) * (side + 1)],
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Density on the closed grid, row-major.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn interior_index(&self, i: usize) -> usize {
        let m = self.side;
        let (x, y) = (i % (m - 1) + 1, i / (m - 1) + 1);
        y * (m + 1) + x
    }

    /// Trapezoidal mass of the closed square `[x0, x1] × [y0, y1]` in lattice units.
    pub fn mass_of_rect(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let m = self.side;
        let wt = |t: usize, a: usize, b: usize| if t == a || t == b { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for y in y0..=y1 {
            let wy = wt(y, y0, y1);
            for x in x0..=x1 {
                s += wy * wt(x, x0, x1) * self.density[y * (m + 1) + x];
            }
        }
        s / (m * m) as f64
    }

    /// Mass of dyadic cell `(i, j)` of side `2^{−level}`.
    pub fn cell_mass_at(&self, level: usize, i: usize, j: usize) -> f64 {
        let l = self.side >> level;
        self.mass_of_rect(i * l, (i + 1) * l, j * l, (j + 1) * l)
    }

    /// Masses of the cells of side `2^{−cell_level}`, row-major.
    pub fn cells(&self) -> Vec<f64> {
        let k = 1usize << self.cell_level;
        (0..k * k).map(|c| self.cell_mass_at(self.cell_level, c % k, c / k)).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_of_rect(0, self.side, 0, self.side)
    }

    /// CSV rows `x,y,mass` at the cell centers.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let k = 1usize << self.cell_level;
        writeln!(w, "x,y,mass")?;
        for (c, m) in self.cells().iter().enumerate() {
            let (i, j) = (c % k, c / k);
            writeln!(w, "{},{},{:.17e}", (i as f64 + 0.5) / k as f64, (j as f64 + 0.5) / k as f64, m)?;
        }
        Ok(())
    }
}

/// Multiplies the density by `e^{βφ − β²Var φ/2}` for one level increment `φ` given on the
/// interior vertices.
pub fn gmc_step(measure: &ChaosMeasure, increment: &[f64], variance: &[f64], beta: f64) -> Result<ChaosMeasure> {
    let m = measure.side;
    if increment.len() != (m - 1) * (m - 1) || variance.len() != increment.len() {
        return Err(Error::InvalidSize("increment does not match the chaos lattice".into()));
    }
    let mut out = measure.clone();
    out.generation += 1;
    out.beta = beta;
    if beta != 0.0 {
        for (i, (&f, &v)) in increment.iter().zip(variance).enumerate() {
            out.density[measure.interior_index(i)] *= (beta * f - 0.5 * beta * beta * v).exp();
        }
    }
    Ok(out)
}

/// `μ_n^{β}` from the given level increments.
pub fn gmc_measure(lattice: &ChaosLattice, levels: &[Vec<f64>], beta: f64, cell_level: usize) -> Result<ChaosMeasure> {
    let mut mu = ChaosMeasure::lebesgue(lattice.side(), cell_level)?;
    for (k, inc) in levels.iter().enumerate() {
        mu = gmc_step(&mu, inc, lattice.level_variance(k), beta)?;
    }
    mu.warning = !(beta / alpha() > 0.0 && beta / alpha() < std::f64::consts::FRAC_1_SQRT_2);
    Ok(mu)
}

/// `√t μ_n` at `β = α` with `t = n g log 2`.
pub fn seneta_heyde(measure: &ChaosMeasure) -> Result<ChaosMeasure> {
    if (measure.beta - alpha()).abs() > 1e-12 && measure.beta != 0.0 {
        return Err(Error::InvalidArgument(format!("Seneta-Heyde norming needs β = α, got {}", measure.beta)));
    }
    let t = measure.generation as f64 * G * 2f64.ln();
    let mut out = measure.clone();
    for d in out.density.iter_mut() {
        *d *= t.sqrt();
    }
    out.normalization = Normalization::SenetaHeyde;
    Ok(out)
}

/// `Y_n(dx) = ĉ e^{αλΦ_n(x)} r_{S̃ⁿ}(x)^{2λ²} dx` for a given `Φ_n` on the interior vertices.
pub fn hierarchical_chaos_from(lattice: &ChaosLattice, n: usize, lambda: f64, phi: &[f64], cell_level: usize) -> Result<ChaosMeasure> {
    if !(lambda > 0.0) || n > lattice.depth() {
        return Err(Error::InvalidArgument(format!("λ = {lambda} and n = {n} out of range")));
    }
    let m = lattice.side();
    let c = c_hat(lambda);
    let p = 2.0 * lambda * lambda;
    let b = alpha() * lambda;
    let mut mu = ChaosMeasure::lebesgue(m, cell_level)?;
    let rb = lattice.boundary_radius().powf(p);
    for d in mu.density.iter_mut() {
        *d = c * rb;
    }
    for (i, (&f, &r)) in phi.iter().zip(&lattice.conformal_radius(n)).enumerate() {
        let j = mu.interior_index(i);
        mu.density[j] = c * (b * f).exp() * r.powf(p);
    }
    mu.generation = n;
    mu.beta = b;
    mu.warning = lambda >= std::f64::consts::FRAC_1_SQRT_2;
    Ok(mu)
}

/// One draw of `Y_n` with cells of side `2⁻ⁿ`.
pub fn hierarchical_chaos<R: Rng + ?Sized>(lattice: &ChaosLattice, n: usize, lambda: f64, rng: &mut R) -> Result<ChaosMeasure> {
    let levels = lattice.sample_levels(n, rng);
    let mut phi = vec![0.0; lattice.sampler().domain().len()];
    for l in &levels {
        for (a, b) in phi.iter_mut().zip(l) {
            *a += b;
        }
    }
    hierarchical_chaos_from(lattice, n, lambda, &phi, n.min(lattice.depth()))
}

/// The deterministic measure `ĉ r_S(x)^{2λ²} dx`, equal to `E Y_n` for every `n`.
pub fn y_mean_measure(lattice: &ChaosLattice, lambda: f64) -> Result<ChaosMeasure> {
    let zero = vec![0.0; lattice.sampler().domain().len()];
    hierarchical_chaos_from(lattice, 0, lambda, &zero, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_beta_is_lebesgue() {
        let lat = ChaosLattice::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let levels = lat.sample_levels(3, &mut rng);
        let mu = gmc_measure(&lat, &levels, 0.0, 2).unwrap();
        for c in mu.cells() {
            assert!((c - 1.0 / 16.0).abs() < 1e-15);
        }
        assert!((mu.total_mass() - 1.0).abs() < 1e-14);
        let sh = seneta_heyde(&mu).unwrap();
        assert!((sh.total_mass() - (3.0 * G * 2f64.ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nested_diagonal_vanishes_on_cross() {
        let lat = ChaosLattice::new(3).unwrap();
        let d = lat.nested_diagonal(1);
        assert_eq!(d[3 * 7 + 3], 0.0);
        assert!((lat.nested_diagonal(2)[0] - 1.0).abs() < 1e-14);
        let full = lat.nested_diagonal(0);
        let v = lat.partial_variance(1);
        for i in 0..d.len() {
            assert!((full[i] - d[i] - v[i]).abs() < 1e-12);
        }
    }
}
