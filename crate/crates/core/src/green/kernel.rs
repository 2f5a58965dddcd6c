//! The potential kernel of the planar simple random walk.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// `g = 2/π`.
pub const G: f64 = 2.0 / PI;

/// Additive constant in `a(x) = g log|x| + c₀ + O(|x|⁻²)`, calibrated by quadrature at
/// `x = (512, 0)` via [`calibrate_c0`].
pub const C0: f64 = 1.029_373_503_276_930;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

/// Potential kernel `a(x) = (2π)⁻² ∫ (1 − cos k·x) / (sin²(k₁/2) + sin²(k₂/2)) dk`.
///
/// The `k₂` integral is done in closed form, leaving
/// `a(m, n) = (2/π) ∫₀^π (1 − cos(mk) e^{−2|n| asinh s}) / (2s√(1+s²)) dk` with `s = sin(k/2)`,
/// which is evaluated by composite Gauss-Legendre quadrature.
pub fn potential_kernel(x: (i64, i64)) -> f64 {
    let (m, n) = (x.0.unsigned_abs(), x.1.unsigned_abs());
    if m == 0 && n == 0 {
        return 0.0;
    }
    let (m, n) = (m.min(n) as f64, m.max(n) as f64);
    let panels = 8 + 2 * n as usize;
    let (nodes, weights) = rule();
    let h = PI / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        let mut s_panel = 0.0;
        for (t, w) in nodes.iter().zip(weights) {
            let k = a + 0.5 * h * (t + 1.0);
            let s = (0.5 * k).sin();
            let u = 2.0 * n * s.asinh();
            let e = (-u).exp();
            let sm = (0.5 * m * k).sin();
            let num = -(-u).exp_m1() + e * 2.0 * sm * sm;
            s_panel += w * num / (2.0 * s * (1.0 + s * s).sqrt());
        }
        total += 0.5 * h * s_panel;
    }
    2.0 / PI * total
}

/// Recomputes `a((512, 0)) − g log 512`.
pub fn calibrate_c0() -> f64 {
    potential_kernel((512, 0)) - G * 512f64.ln()
}

/// Memoized evaluation of [`potential_kernel`], symmetric under the lattice symmetries.
#[derive(Debug, Default)]
pub struct KernelTable {
    cache: Mutex<HashMap<(u64, u64), f64>>,
}

impl KernelTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, x: (i64, i64)) -> f64 {
        let (a, b) = (x.0.unsigned_abs(), x.1.unsigned_abs());
        let key = (a.min(b), a.max(b));
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let v = potential_kernel((key.0 as i64, key.1 as i64));
        self.cache.lock().unwrap().insert(key, v);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(38)).sum();
        assert!((m - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn origin_and_neighbor() {
        assert_eq!(potential_kernel((0, 0)), 0.0);
        assert!((potential_kernel((1, 0)) - 1.0).abs() < 1e-13);
        assert!((potential_kernel((0, -1)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn calibration_is_stored() {
        assert!((calibrate_c0() - C0).abs() < 1e-13);
    }
}
