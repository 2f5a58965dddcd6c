//! Telescoping sampler over the dyadic box hierarchy of `V_N`, `N = 2ⁿ`.
//!
//! Level `k` consists of the boxes of side `L = N/2ᵏ`. Its binding field is independent
//! across boxes; inside one box it is determined by its values on the central cross and is
//! harmonic in the four quadrants.

use super::Field;
use crate::error::{Error, Result};
use crate::green::PIVOT_FLOOR;
use crate::lattice::LatticeDomain;
use crate::linalg::PivotedCholesky;
use crate::spectral::BoxSpectral;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::Arc;

/// Largest supported depth.
pub const MAX_HIERARCHY_DEPTH: usize = 9;

#[derive(Clone, Debug)]
struct Level {
    side: usize,
    /// Cross vertices in box-local coordinates.
    cross: Vec<(usize, usize)>,
    factor: PivotedCholesky,
    quadrant: Option<BoxSpectral>,
}

/// Exact sampler of `h^{V_N}` as a sum of independent level binding fields.
#[derive(Clone, Debug)]
pub struct HierarchicalSampler {
    depth: usize,
    n: usize,
    domain: Arc<LatticeDomain>,
    levels: Vec<Level>,
}

/// `G^{V_L}` restricted to the central cross of the box, with the cross listed as the vertical
/// line followed by the horizontal line without its center.
fn cross_covariance(side: usize) -> (Vec<(usize, usize)>, DMatrix<f64>) {
    let l = side;
    let n = l - 1;
    let h = l / 2;
    let lf = l as f64;
    let spec = BoxSpectral::new(l);
    let s = DMatrix::from_fn(n, n, |a, j| (PI * ((a + 1) * (j + 1)) as f64 / lf).sin());
    let c: Vec<f64> = (1..=n).map(|j| (PI * (j * h) as f64 / lf).sin()).collect();
    let w = DMatrix::from_fn(n, n, |j, k| 1.0 / spec.eigenvalue(j + 1, k + 1));
    let d: Vec<f64> = (0..n).map(|k| (0..n).map(|j| w[(j, k)] * c[j] * c[j]).sum()).collect();
    let scale = 16.0 / (lf * lf);
    let sd = DMatrix::from_fn(n, n, |a, k| s[(a, k)] * d[k]);
    let vv = &sd * s.transpose() * scale;
    let cw = DMatrix::from_fn(n, n, |k, j| c[k] * w[(j, k)] * c[j]);
    let vh = &s * cw * s.transpose() * scale;
    let mut cross = Vec::with_capacity(2 * n - 1);
    for a in 1..=n {
        cross.push((h, a));
    }
    for b in 1..=n {
        if b != h {
            cross.push((b, h));
        }
    }
    let m = cross.len();
    let mut cov = DMatrix::zeros(m, m);
    let pos = |p: (usize, usize)| -> (bool, usize) {
        if p.0 == h {
            (true, p.1 - 1)
        } else {
            (false, p.0 - 1)
        }
    };
    for (u, &p) in cross.iter().enumerate() {
        for (v, &q) in cross.iter().enumerate() {
            let (pv, pa) = pos(p);
            let (qv, qa) = pos(q);
            cov[(u, v)] = match (pv, qv) {
                (true, true) | (false, false) => vv[(pa, qa)],
                (true, false) => vh[(pa, qa)],
                (false, true) => vh[(qa, pa)],
            };
        }
    }
    (cross, cov)
}

impl HierarchicalSampler {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 || depth > MAX_HIERARCHY_DEPTH {
            return Err(Error::InvalidSize(format!(
                "hierarchy depth {depth} outside 1..={MAX_HIERARCHY_DEPTH}"
            )));
        }
        let n = 1usize << depth;
        let domain = Arc::new(LatticeDomain::make_box(n)?);
        let mut levels = Vec::with_capacity(depth);
        for k in 0..depth {
            let side = n >> k;
            let (cross, cov) = if side == 2 {
                (vec![(1, 1)], DMatrix::from_element(1, 1, 1.0))
            } else {
                cross_covariance(side)
            };
            let factor = PivotedCholesky::factor(cov.as_slice(), cross.len(), PIVOT_FLOOR)?;
            let quadrant = (side >= 4).then(|| BoxSpectral::new(side / 2));
            levels.push(Level { side, cross, factor, quadrant });
        }
        Ok(HierarchicalSampler { depth, n, domain, levels })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Side `N = 2ⁿ` of the full box.
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    #[inline]
    fn idx(&self, x: usize, y: usize) -> usize {
        (y - 1) * (self.n - 1) + (x - 1)
    }

    /// Adds one draw of the level-`k` binding field to `out`.
    pub fn add_level<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, out: &mut [f64]) {
        let lev = &self.levels[k];
        let l = lev.side;
        let h = l / 2;
        let boxes = self.n / l;
        let mut z = vec![0.0; lev.factor.rank()];
        let mut cross_vals = vec![0.0; lev.cross.len()];
        let q = h.saturating_sub(1);
        let mut flux = vec![0.0; q * q];
        let mut local = vec![0.0; (l + 1) * (l + 1)];
        for by in 0..boxes {
            for bx in 0..boxes {
                let (ox, oy) = (bx * l, by * l);
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                for v in cross_vals.iter_mut() {
                    *v = 0.0;
                }
                for (r, &zr) in z.iter().enumerate() {
                    crate::linalg::axpy(zr, lev.factor.column(r), &mut cross_vals);
                }
                for (&(cx, cy), &v) in lev.cross.iter().zip(&cross_vals) {
                    let i = self.idx(ox + cx, oy + cy);
                    out[i] += v;
                }
                let Some(qs) = &lev.quadrant else { continue };
                for v in local.iter_mut() {
                    *v = 0.0;
                }
                for (&(cx, cy), &v) in lev.cross.iter().zip(&cross_vals) {
                    local[cy * (l + 1) + cx] = v;
                }
                for (qx, qy) in [(0, 0), (h, 0), (0, h), (h, h)] {
                    for y in 1..h {
                        for x in 1..h {
                            let (gx, gy) = (qx + x, qy + y);
                            let s = local[gy * (l + 1) + gx + 1]
                                + local[gy * (l + 1) + gx - 1]
                                + local[(gy + 1) * (l + 1) + gx]
                                + local[(gy - 1) * (l + 1) + gx];
                            flux[(y - 1) * q + (x - 1)] = s;
                        }
                    }
                    let u = qs.harmonic_extension(&flux);
                    for y in 1..h {
                        for x in 1..h {
                            let i = self.idx(ox + qx + x, oy + qy + y);
                            out[i] += u[(y - 1) * q + (x - 1)];
                        }
                    }
                }
            }
        }
    }

    /// Independent draws of every level, each as values on `V_N`.
    pub fn sample_levels<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        (0..self.depth)
            .map(|k| {
                let mut v = vec![0.0; self.domain.len()];
                self.add_level(k, rng, &mut v);
                v
            })
            .collect()
    }

    /// `h^{V_N}` as the sum of all levels.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Field {
        let mut v = vec![0.0; self.domain.len()];
        for k in 0..self.depth {
            self.add_level(k, rng, &mut v);
        }
        Field::new(self.domain.clone(), v).expect("finite sample")
    }

    /// Pointwise variance of the level-`k` binding field on `V_N`.
    pub fn level_variance(&self, k: usize) -> Vec<f64> {
        let l = self.levels[k].side;
        let h = l / 2;
        let big = BoxSpectral::new(l).green_diagonal();
        let small = (h >= 2).then(|| BoxSpectral::new(h).green_diagonal());
        let mut local = vec![0.0; (l - 1) * (l - 1)];
        for y in 1..l {
            for x in 1..l {
                let mut v = big[(y - 1) * (l - 1) + (x - 1)];
                if x != h && y != h {
                    if let Some(s) = &small {
                        let (qx, qy) = (x % h, y % h);
                        v -= s[(qy - 1) * (h - 1) + (qx - 1)];
                    }
                }
                local[(y - 1) * (l - 1) + (x - 1)] = v;
            }
        }
        let mut out = vec![0.0; self.domain.len()];
        let boxes = self.n / l;
        for by in 0..boxes {
            for bx in 0..boxes {
                for y in 1..l {
                    for x in 1..l {
                        out[self.idx(bx * l + x, by * l + y)] = local[(y - 1) * (l - 1) + (x - 1)];
                    }
                }
            }
        }
        out
    }
}
