//! Level sets, extremal point measures, local maxima and centering sequences.

use crate::error::{Error, Result};
use crate::green::{sqrt_g, C0, G};
use crate::harness::estimate::{estimate, estimate_with_quantiles, median, EstimatorSummary};
use crate::harness::seeds::replica_rng;
use crate::lattice::{LatticeDomain, Vertex};
use crate::sampler::{Field, FieldSampler};
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;
use std::f64::consts::{E, PI};
use std::io::Write;
use std::sync::Arc;

/// `m_N = 2√g log N − ¾√g log log(N ∨ e)`.
pub fn m_n(n: f64) -> f64 {
    let sg = sqrt_g();
    2.0 * sg * n.ln() - 0.75 * sg * n.max(E).ln().ln()
}

/// `K_N = N² / √(log N) · exp(−a_N² / (2g log N))`.
pub fn k_n(n: f64, a_n: f64) -> f64 {
    let l = n.ln();
    n * n / l.sqrt() * (-a_n * a_n / (2.0 * G * l)).exp()
}

/// `a_N = 2√g λ log N`.
pub fn a_n(n: f64, lambda: f64) -> f64 {
    2.0 * sqrt_g() * lambda * n.ln()
}

/// `ĉ = e^{2c₀λ²/g} / (λ√(8π))`.
pub fn c_hat(lambda: f64) -> f64 {
    (2.0 * C0 * lambda * lambda / G).exp() / (lambda * (8.0 * PI).sqrt())
}

/// Indices with `h_x ≥ t`.
pub fn level_set(field: &Field, t: f64) -> Vec<usize> {
    field.values().iter().enumerate().filter(|(_, &v)| v >= t).map(|(i, _)| i).collect()
}

/// `Γ_N(t) = {x: h_x ≥ m_N − t}`.
pub fn extremal_set(field: &Field, n: usize, t: f64) -> Vec<usize> {
    level_set(field, m_n(n as f64) - t)
}

/// One atom of a point measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub w: f64,
    /// `(z, h_x − h_{x+z})` over the cluster window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<Vec<(Vertex, f64)>>,
}

/// Finite weighted point measure on positions scaled by `1/N` and centered heights.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PointMeasure {
    pub atoms: Vec<Atom>,
}

impl PointMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// Mass of `D × [b, ∞)`.
    pub fn mass_above(&self, b: f64) -> f64 {
        self.atoms.iter().filter(|a| a.h >= b).map(|a| a.w).sum()
    }

    /// Atoms with height at least `b`.
    pub fn above(&self, b: f64) -> PointMeasure {
        PointMeasure { atoms: self.atoms.iter().filter(|a| a.h >= b).cloned().collect() }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// JSON lines `{"x":…,"y":…,"h":…,"w":…,"cluster":[[z,dh],…]}`.
    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for a in &self.atoms {
            serde_json::to_writer(&mut w, a)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

fn scaled(domain: &LatticeDomain, v: Vertex) -> (f64, f64) {
    let n = domain.scale() as f64;
    (v.0 as f64 / n, v.1 as f64 / n)
}

/// Atoms at `x/N` with heights `h_x − a_N` and weights `1/K_N` for every `x` with `h_x ≥ a_N`.
pub fn intermediate_measure(field: &Field, lambda: f64) -> Result<PointMeasure> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("λ = {lambda} outside (0, 1)")));
    }
    let domain = field.domain();
    let n = domain.scale() as f64;
    let a = a_n(n, lambda);
    let w = 1.0 / k_n(n, a);
    let atoms = level_set(field, a)
        .into_iter()
        .map(|i| {
            let (x, y) = scaled(domain, domain.vertex(i));
            Atom { x, y, h: field.values()[i] - a, w, cluster: None }
        })
        .collect();
    Ok(PointMeasure { atoms })
}

/// Dense grid over the bounding box of a domain, `None` off the domain.
struct Grid {
    x0: i64,
    y0: i64,
    w: usize,
    h: usize,
    cells: Vec<Option<usize>>,
}

impl Grid {
    fn new(domain: &LatticeDomain) -> Self {
        let vs = domain.vertices();
        let x0 = vs.iter().map(|v| v.0).min().unwrap_or(0);
        let y0 = vs.iter().map(|v| v.1).min().unwrap_or(0);
        let x1 = vs.iter().map(|v| v.0).max().unwrap_or(0);
        let y1 = vs.iter().map(|v| v.1).max().unwrap_or(0);
        let (w, h) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
        let mut cells = vec![None; w * h];
        for (i, &(x, y)) in vs.iter().enumerate() {
            cells[(y - y0) as usize * w + (x - x0) as usize] = Some(i);
        }
        Grid { x0, y0, w, h, cells }
    }

    fn get(&self, x: i64, y: i64) -> Option<usize> {
        let (gx, gy) = (x - self.x0, y - self.y0);
        if gx < 0 || gy < 0 || gx >= self.w as i64 || gy >= self.h as i64 {
            return None;
        }
        self.cells[gy as usize * self.w + gx as usize]
    }
}

/// Whether `x` dominates `y`: a higher value, or an equal value at a lexicographically earlier
/// index.
fn beats(hx: f64, ix: usize, hy: f64, iy: usize) -> bool {
    if iy > ix {
        hx > hy
    } else {
        hx >= hy
    }
}

/// Vertices `x` with `h_x = max_{y ∈ Λ_r(x)} h_y`, `Λ_r(x) = {|y − x|∞ ≤ r}`.
///
/// Against lexicographically later vertices the inequality must be strict, so of two tied
/// values only the later one can qualify.
pub fn local_maxima(field: &Field, r: usize) -> Vec<usize> {
    let domain = field.domain();
    let grid = Grid::new(domain);
    let h = field.values();
    let r = r as i64;
    let is_max = |i: usize, rad: i64| {
        let (x, y) = domain.vertex(i);
        for dy in -rad..=rad {
            for dx in -rad..=rad {
                if dx == 0 && dy == 0 {
                    continue;
                }
                if let Some(j) = grid.get(x + dx, y + dy) {
                    if !beats(h[i], i, h[j], j) {
                        return false;
                    }
                }
            }
        }
        true
    };
    (0..h.len()).filter(|&i| is_max(i, r.min(1)) && is_max(i, r)).collect()
}

/// Default local-maximum radius `⌈√N⌉`.
pub fn default_radius(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

/// Default cluster window.
pub const DEFAULT_CLUSTER_WINDOW: usize = 5;

/// Atoms at the `r`-local maxima with heights `h_x − m_N`, unit weights and the cluster map
/// `z ↦ h_x − h_{x+z}` for `|z|∞ ≤ w`.
pub fn structured_measure(field: &Field, r: usize, w: usize) -> PointMeasure {
    let domain = field.domain();
    let m = m_n(domain.scale() as f64);
    let w = w as i64;
    let atoms = local_maxima(field, r)
        .into_iter()
        .map(|i| {
            let v = domain.vertex(i);
            let hx = field.values()[i];
            let mut cluster = Vec::with_capacity(((2 * w + 1) * (2 * w + 1)) as usize);
            for dy in -w..=w {
                for dx in -w..=w {
                    cluster.push(((dx, dy), hx - field.at((v.0 + dx, v.1 + dy))));
                }
            }
            let (x, y) = scaled(domain, v);
            Atom { x, y, h: hx - m, w: 1.0, cluster: Some(cluster) }
        })
        .collect();
    PointMeasure { atoms }
}

/// Summary of the maximum over replicas.
#[derive(Clone, Debug, Serialize)]
pub struct MaxStats {
    pub n: usize,
    pub m_n: f64,
    pub max: EstimatorSummary,
    /// Quantiles of `M_N − m_N`.
    pub centered: EstimatorSummary,
    pub median: f64,
    /// Scaled argmax positions.
    pub argmax: Vec<(f64, f64)>,
}

/// Maximum and its position for replicas `0..reps` under `seed`.
pub fn sample_maxima(domain: &Arc<LatticeDomain>, reps: usize, seed: u64) -> Result<Vec<(f64, Vertex)>> {
    let sampler = FieldSampler::new(domain.clone())?;
    Ok((0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let f = sampler.sample(&mut replica_rng(seed, r));
            let (i, m) = f.argmax();
            (m, domain.vertex(i))
        })
        .collect())
}

pub fn max_stats(domain: &LatticeDomain, maxima: &[(f64, Vertex)]) -> Result<MaxStats> {
    if maxima.len() < 2 {
        return Err(Error::InvalidArgument("maximum statistics need at least 2 replicas".into()));
    }
    let n = domain.scale();
    let m = m_n(n as f64);
    let vals: Vec<f64> = maxima.iter().map(|p| p.0).collect();
    let centered: Vec<f64> = vals.iter().map(|v| v - m).collect();
    Ok(MaxStats {
        n,
        m_n: m,
        max: estimate_with_quantiles(&vals),
        centered: estimate_with_quantiles(&centered),
        median: median(&vals).unwrap(),
        argmax: maxima.iter().map(|p| scaled(domain, p.1)).collect(),
    })
}

/// Both sides of `E|M_N − E M_N| ≤ 2(E M_{2N} − E M_N)` with standard errors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DekkingHost {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
}

impl DekkingHost {
    /// Combined standard error.
    pub fn se(&self) -> f64 {
        (self.lhs_se.powi(2) + self.rhs_se.powi(2)).sqrt()
    }

    /// `lhs ≤ rhs + k·se`.
    pub fn holds(&self, k: f64) -> bool {
        self.lhs <= self.rhs + k * self.se()
    }
}

pub fn dekking_host_check(max_n: &[f64], max_2n: &[f64]) -> Result<DekkingHost> {
    if max_n.len() < 2 || max_2n.len() < 2 {
        return Err(Error::InvalidArgument("Dekking-Host check needs at least 2 replicas per size".into()));
    }
    let a = estimate(max_n);
    let b = estimate(max_2n);
    let dev: Vec<f64> = max_n.iter().map(|m| (m - a.mean).abs()).collect();
    let d = estimate(&dev);
    Ok(DekkingHost {
        lhs: d.mean,
        lhs_se: d.se(),
        rhs: 2.0 * (b.mean - a.mean),
        rhs_se: 2.0 * (a.se().powi(2) + b.se().powi(2)).sqrt(),
    })
}

/// Exact `E|{x: h_x ≥ t}|` from the pointwise variances.
pub fn expected_level_set_size(variances: &[f64], t: f64) -> f64 {
    variances.iter().map(|&v| normal_tail(t / v.sqrt())).sum()
}

/// `P(Z ≥ z)` for a standard normal `Z`.
pub fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_from(n: usize, f: impl Fn(Vertex) -> f64) -> Field {
        let d = Arc::new(LatticeDomain::make_box(n).unwrap());
        let v = d.vertices().iter().map(|&p| f(p)).collect();
        Field::new(d, v).unwrap()
    }

    #[test]
    fn centering_formulas() {
        assert!((m_n(2.0) - 2.0 * sqrt_g() * 2f64.ln()).abs() < 1e-15);
        let ee = E.powf(E);
        assert!((m_n(ee) - (2.0 * sqrt_g() * E - 0.75 * sqrt_g())).abs() < 1e-12);
        let n = E.powi(4);
        assert!((k_n(n, a_n(n, 0.5)) - E.powi(6) / 2.0).abs() < 1e-9);
        assert!((k_n(n, a_n(n, 1.0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tied_peaks() {
        let cone = |peaks: [Vertex; 2]| {
            move |(x, y): Vertex| {
                let d = |p: Vertex| (((x - p.0).pow(2) + (y - p.1).pow(2)) as f64).sqrt();
                if peaks.contains(&(x, y)) { 5.0 } else { -d(peaks[0]).min(d(peaks[1])) }
            }
        };
        let f = field_from(20, cone([(3, 3), (15, 15)]));
        assert_eq!(local_maxima(&f, 4).len(), 2);
        let g = field_from(8, cone([(3, 3), (4, 3)]));
        let m = local_maxima(&g, 2);
        assert_eq!(m.len(), 1);
        assert_eq!(g.domain().vertex(m[0]), (4, 3));
    }

    #[test]
    fn normal_tail_values() {
        assert!((normal_tail(0.0) - 0.5).abs() < 1e-15);
        for (z, p) in [
            (1.0, 0.158_655_253_931_457_07),
            (1.959_963_984_540_054, 0.025),
            (3.0, 0.001_349_898_031_630_093_3),
            (5.0, 2.866_515_718_791_933e-7),
        ] {
            assert!((normal_tail(z) / p - 1.0).abs() < 1e-10, "{z}");
        }
    }
}
