//! Exact spectral calculus on the open box `(0, M)²`.
//!
//! The Dirichlet Laplacian of the box is diagonalized by the discrete sine basis
//! `ψ_{jk}(x) = (2/M) sin(πj x₁/M) sin(πk x₂/M)` with eigenvalue
//! `4 − 2cos(πj/M) − 2cos(πk/M)` of `−Δ`. Arrays are row-major with index
//! `(x₂ − 1)(M − 1) + (x₁ − 1)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Spectral engine for the box `(0, M)² ∩ ℤ²`.
#[derive(Clone)]
pub struct BoxSpectral {
    m: usize,
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    /// `1/λ_{jk}` at `[(k-1) n + (j-1)]`.
    inv_eig: Vec<f64>,
}

impl std::fmt::Debug for BoxSpectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoxSpectral").field("m", &self.m).finish()
    }
}

impl BoxSpectral {
    /// Engine for the box of side parameter `m ≥ 2`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 2, "box side must be at least 2");
        let n = m - 1;
        let fft = FftPlanner::new().plan_fft_forward(2 * m);
        let c: Vec<f64> = (1..=n).map(|j| (PI * j as f64 / m as f64).cos()).collect();
        let mut inv_eig = vec![0.0; n * n];
        for k in 0..n {
            for j in 0..n {
                inv_eig[k * n + j] = 1.0 / (4.0 - 2.0 * c[j] - 2.0 * c[k]);
            }
        }
        BoxSpectral { m, n, fft, inv_eig }
    }

    pub fn side(&self) -> usize {
        self.m
    }

    /// Number of interior vertices `(M − 1)²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Eigenvalue of `−Δ` for the mode `(j, k)`, `1 ≤ j, k ≤ M − 1`.
    pub fn eigenvalue(&self, j: usize, k: usize) -> f64 {
        1.0 / self.inv_eig[(k - 1) * self.n + (j - 1)]
    }

    /// Unnormalized DST-I along each contiguous row of an `n × n` array.
    fn dst_rows(&self, data: &mut [f64]) {
        let n = self.n;
        let len = 2 * self.m;
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut r = 0;
        while r < n {
            let pair = r + 1 < n;
            for v in buf.iter_mut() {
                *v = Complex::new(0.0, 0.0);
            }
            for i in 0..n {
                let a = data[r * n + i];
                let b = if pair { data[(r + 1) * n + i] } else { 0.0 };
                buf[i + 1] = Complex::new(a, b);
                buf[len - 1 - i] = Complex::new(-a, -b);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                let y = buf[i + 1];
                data[r * n + i] = -0.5 * y.im;
                if pair {
                    data[(r + 1) * n + i] = 0.5 * y.re;
                }
            }
            r += 2;
        }
    }

    fn transpose(&self, data: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                data.swap(i * n + j, j * n + i);
            }
        }
    }

    /// Orthonormal two-dimensional sine transform; it is its own inverse.
    pub fn transform(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.len());
        self.dst_rows(data);
        self.transpose(data);
        self.dst_rows(data);
        self.transpose(data);
        let s = 2.0 / self.m as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Applies `G = 4(−Δ)⁻¹` to a vector.
    pub fn apply_green(&self, v: &[f64]) -> Vec<f64> {
        let mut c = v.to_vec();
        self.transform(&mut c);
        for (ci, w) in c.iter_mut().zip(&self.inv_eig) {
            *ci *= 4.0 * w;
        }
        self.transform(&mut c);
        c
    }

    /// Solves `−Δu = f` with zero boundary values.
    pub fn solve_poisson(&self, f: &[f64]) -> Vec<f64> {
        let mut u = self.apply_green(f);
        for v in u.iter_mut() {
            *v *= 0.25;
        }
        u
    }

    /// Column `G(·, x)` for the interior vertex `x = (x₁, x₂)`.
    pub fn green_column(&self, x: (usize, usize)) -> Vec<f64> {
        let mut e = vec![0.0; self.len()];
        e[(x.1 - 1) * self.n + (x.0 - 1)] = 1.0;
        self.apply_green(&e)
    }

    /// A single entry `G(x, y)` by direct summation over the modes.
    pub fn green_entry(&self, x: (usize, usize), y: (usize, usize)) -> f64 {
        let n = self.n;
        let mf = self.m as f64;
        let s = |a: usize| -> Vec<f64> {
            (1..=n).map(|j| (PI * (j * a) as f64 / mf).sin()).collect()
        };
        let (sx1, sx2, sy1, sy2) = (s(x.0), s(x.1), s(y.0), s(y.1));
        let a: Vec<f64> = (0..n).map(|j| sx1[j] * sy1[j]).collect();
        let mut total = 0.0;
        for k in 0..n {
            let row = &self.inv_eig[k * n..(k + 1) * n];
            total += sx2[k] * sy2[k] * crate::linalg::dot(row, &a);
        }
        total * 16.0 / (mf * mf)
    }

    /// The diagonal `G(x, x)` for all interior vertices.
    pub fn green_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let mf = self.m as f64;
        let s2 = DMatrix::from_fn(n, n, |x, j| {
            let v = (PI * ((j + 1) * (x + 1)) as f64 / mf).sin();
            v * v
        });
        let w = DMatrix::from_fn(n, n, |j, k| self.inv_eig[k * n + j]);
        let d = &s2 * w * s2.transpose();
        let scale = 16.0 / (mf * mf);
        let mut out = vec![0.0; n * n];
        for x2 in 0..n {
            for x1 in 0..n {
                out[x2 * n + x1] = scale * d[(x1, x2)];
            }
        }
        out
    }

    /// Exact sample of the field with covariance `G` on the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut c: Vec<f64> = self
            .inv_eig
            .iter()
            .map(|w| {
                let z: f64 = rng.sample(StandardNormal);
                2.0 * w.sqrt() * z
            })
            .collect();
        self.transform(&mut c);
        c
    }

    /// Harmonic extension of boundary data into the box; `boundary_flux[i]` is the sum of the
    /// boundary values adjacent to interior vertex `i`.
    pub fn harmonic_extension(&self, boundary_flux: &[f64]) -> Vec<f64> {
        self.solve_poisson(boundary_flux)
    }
}
