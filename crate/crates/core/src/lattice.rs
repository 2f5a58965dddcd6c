//! Finite lattice domains in ℤ², their boundaries, and discretizations of continuum regions.

use crate::error::{Error, Result};
use crate::linalg::SymSparse;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

/// A lattice vertex `(x₁, x₂)`.
pub type Vertex = (i64, i64);

const NONE: u32 = u32::MAX;

/// Nearest-neighbor offsets in the order east, north, west, south.
pub const NEIGHBORS: [Vertex; 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Shape tag of a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Box,
    Disc,
    Annulus,
    Custom,
}

/// A finite subset of ℤ² with a row-major vertex order and its external vertex boundary.
#[derive(Clone, Debug)]
pub struct LatticeDomain {
    vertices: Vec<Vertex>,
    boundary: Vec<Vertex>,
    scale: usize,
    shape: Shape,
    x0: i64,
    y0: i64,
    w: i64,
    h: i64,
    lookup: Vec<u32>,
    box_frame: Option<(Vertex, usize)>,
}

impl LatticeDomain {
    /// Builds a domain from an arbitrary vertex set.
    pub fn from_vertices<I: IntoIterator<Item = Vertex>>(
        vertices: I,
        scale: usize,
        shape: Shape,
    ) -> Result<Self> {
        let mut vertices: Vec<Vertex> = vertices.into_iter().collect();
        if vertices.is_empty() {
            return Err(Error::EmptyDomain);
        }
        vertices.sort_by_key(|&(x, y)| (y, x));
        vertices.dedup();
        let xmin = vertices.iter().map(|v| v.0).min().unwrap();
        let xmax = vertices.iter().map(|v| v.0).max().unwrap();
        let ymin = vertices.iter().map(|v| v.1).min().unwrap();
        let ymax = vertices.iter().map(|v| v.1).max().unwrap();
        let (x0, y0) = (xmin - 1, ymin - 1);
        let (w, h) = (xmax - xmin + 3, ymax - ymin + 3);
        if vertices.len() >= NONE as usize {
            return Err(Error::InvalidSize("too many vertices".into()));
        }
        let mut lookup = vec![NONE; (w * h) as usize];
        for (i, &(x, y)) in vertices.iter().enumerate() {
            lookup[((y - y0) * w + (x - x0)) as usize] = i as u32;
        }
        let mut dom = LatticeDomain {
            vertices,
            boundary: Vec::new(),
            scale: scale.max(1),
            shape,
            x0,
            y0,
            w,
            h,
            lookup,
            box_frame: None,
        };
        let mut boundary = Vec::new();
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                if !dom.contains((x, y))
                    && NEIGHBORS.iter().any(|&(dx, dy)| dom.contains((x + dx, y + dy)))
                {
                    boundary.push((x, y));
                }
            }
        }
        dom.boundary = boundary;
        let (bw, bh) = (xmax - xmin + 1, ymax - ymin + 1);
        if bw == bh && (bw * bh) as usize == dom.vertices.len() {
            dom.box_frame = Some(((xmin - 1, ymin - 1), (bw + 1) as usize));
        }
        Ok(dom)
    }

    /// The open box `(0, N)² ∩ ℤ²`.
    pub fn make_box(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("box side {n} < 2")));
        }
        let n_i = n as i64;
        let verts = (1..n_i).flat_map(|y| (1..n_i).map(move |x| (x, y)));
        Self::from_vertices(verts, n, Shape::Box)
    }

    /// The translate `offset + (0, M)²` of the open box.
    pub fn translated_box(offset: Vertex, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSize(format!("box side {m} < 2")));
        }
        let m_i = m as i64;
        let verts = (1..m_i).flat_map(move |y| (1..m_i).map(move |x| (x + offset.0, y + offset.1)));
        Self::from_vertices(verts, m, Shape::Box)
    }

    /// The ℓ∞ ball `{x : |x|∞ ≤ r}` centered at the origin.
    pub fn centered_box(r: usize) -> Result<Self> {
        let r_i = r as i64;
        Self::translated_box((-r_i - 1, -r_i - 1), 2 * r + 2)
    }

    /// Admissible discretization `{x : dist∞(x/N, Dᶜ) ≥ 1/N}` of a continuum region.
    pub fn discretize(region: &Region, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("scale must be positive".into()));
        }
        let nf = n as f64;
        let ((ax, ay), (bx, by)) = region.bounding_box();
        let (lx, ly) = ((ax * nf).floor() as i64 - 1, (ay * nf).floor() as i64 - 1);
        let (ux, uy) = ((bx * nf).ceil() as i64 + 1, (by * nf).ceil() as i64 + 1);
        let mut verts = Vec::new();
        for y in ly..=uy {
            for x in lx..=ux {
                let p = (x as f64 / nf, y as f64 / nf);
                if region.dist_inf_to_complement(p) >= 1.0 / nf - 1e-12 {
                    verts.push((x, y));
                }
            }
        }
        if verts.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Self::from_vertices(verts, n, region.shape())
    }

    /// Loads a vertex mask: character `1` at row `i`, column `j` marks vertex `(j, i)`.
    pub fn from_mask_text(text: &str, scale: usize) -> Result<Self> {
        let mut verts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            for (j, ch) in line.trim_end().chars().enumerate() {
                match ch {
                    '1' => verts.push((j as i64, i as i64)),
                    '0' | ' ' => {}
                    other => return Err(Error::Parse(format!("unexpected mask character {other:?}"))),
                }
            }
        }
        Self::from_vertices(verts, scale, Shape::Custom)
    }

    pub fn from_mask_file(path: &Path, scale: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_mask_text(&text, scale)
    }

    /// Writes the vertex mask over the bounding box in the format read by [`Self::from_mask_text`].
    pub fn to_mask_text(&self) -> String {
        let xmax = self.vertices.iter().map(|v| v.0).max().unwrap();
        let ymax = self.vertices.iter().map(|v| v.1).max().unwrap();
        let mut s = String::new();
        for y in 0..=ymax {
            for x in 0..=xmax {
                s.push(if self.contains((x, y)) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        self.vertices[i]
    }

    /// External vertex boundary: vertices outside with a neighbor inside.
    pub fn boundary(&self) -> &[Vertex] {
        &self.boundary
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// If the domain is a translate `offset + (0, M)²` of a box, returns `(offset, M)`.
    pub fn box_frame(&self) -> Option<(Vertex, usize)> {
        self.box_frame
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        let (x, y) = (v.0 - self.x0, v.1 - self.y0);
        if x < 0 || y < 0 || x >= self.w || y >= self.h {
            return None;
        }
        let i = self.lookup[(y * self.w + x) as usize];
        (i != NONE).then_some(i as usize)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.index_of(v).is_some()
    }

    /// Indices of the in-domain neighbors of vertex `i`.
    pub fn neighbor_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.vertices[i];
        NEIGHBORS.iter().filter_map(move |&(dx, dy)| self.index_of((x + dx, y + dy)))
    }

    /// The matrix `−Δ` restricted to the domain (Dirichlet boundary condition).
    pub fn neg_laplacian(&self) -> SymSparse {
        let mut a = SymSparse::new(self.len());
        for i in 0..self.len() {
            a.add_diag(i, 4.0);
            let (x, y) = self.vertices[i];
            for &(dx, dy) in &NEIGHBORS[..2] {
                if let Some(j) = self.index_of((x + dx, y + dy)) {
                    a.add_off(i, j, -1.0);
                }
            }
        }
        a
    }

    /// Applies the lattice Laplacian `Δf(x) = Σ_{y∼x} (f(y) − f(x))` to a function vanishing
    /// off the domain, returning its values on the domain.
    pub fn laplacian_apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let s: f64 = self.neighbor_indices(i).map(|j| f[j]).sum();
                s - 4.0 * f[i]
            })
            .collect()
    }

    /// Vertices at ℓ∞ distance greater than `δN` from the complement; returned as indices.
    pub fn interior_shrink(&self, delta: f64) -> Result<Vec<usize>> {
        if !(0.0..0.5).contains(&delta) {
            return Err(Error::InvalidArgument(format!("shrink fraction {delta} outside [0, 1/2)")));
        }
        let dist = self.chessboard_distance();
        let thr = delta * self.scale as f64;
        Ok((0..self.len()).filter(|&i| dist[i] as f64 > thr).collect())
    }

    /// ℓ∞ distance from each vertex to the complement of the domain.
    pub fn chessboard_distance(&self) -> Vec<u32> {
        let (w, h) = (self.w as usize, self.h as usize);
        let mut d = vec![u32::MAX; w * h];
        let mut queue = VecDeque::new();
        for (k, &l) in self.lookup.iter().enumerate() {
            if l == NONE {
                d[k] = 0;
                queue.push_back(k);
            }
        }
        while let Some(k) = queue.pop_front() {
            let (x, y) = ((k % w) as i64, (k / w) as i64);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nk = ny as usize * w + nx as usize;
                    if d[nk] == u32::MAX {
                        d[nk] = d[k] + 1;
                        queue.push_back(nk);
                    }
                }
            }
        }
        self.vertices
            .iter()
            .map(|&(x, y)| d[((y - self.y0) as usize) * w + (x - self.x0) as usize])
            .collect()
    }

    /// Sub-domain consisting of the vertices satisfying `keep`.
    pub fn restrict<F: Fn(Vertex) -> bool>(&self, keep: F) -> Result<Self> {
        Self::from_vertices(
            self.vertices.iter().copied().filter(|&v| keep(v)),
            self.scale,
            Shape::Custom,
        )
    }

    /// Indices (in `self`) of the vertices of `sub`; fails unless `sub ⊆ self`.
    pub fn embedding_of(&self, sub: &LatticeDomain) -> Result<Vec<usize>> {
        sub.vertices
            .iter()
            .map(|&v| self.index_of(v).ok_or(Error::Containment))
            .collect()
    }
}

/// Bounded continuum regions in ℝ².
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Open axis-parallel square `lo + (0, side)²`.
    Square { lo: (f64, f64), side: f64 },
    /// Open disc.
    Disc { center: (f64, f64), radius: f64 },
    /// Open annulus `inner < |p − center| < outer`.
    Annulus { center: (f64, f64), inner: f64, outer: f64 },
    /// Union of open cells `origin + cell·([j, j+1) × [i, i+1))` flagged in a row-major grid.
    Mask { origin: (f64, f64), cell: f64, cols: usize, rows: usize, cells: Vec<bool> },
}

impl Region {
    pub fn unit_square() -> Self {
        Region::Square { lo: (0.0, 0.0), side: 1.0 }
    }

    pub fn unit_disc() -> Self {
        Region::Disc { center: (0.0, 0.0), radius: 1.0 }
    }

    pub fn shape(&self) -> Shape {
        match self {
            Region::Square { .. } => Shape::Box,
            Region::Disc { .. } => Shape::Disc,
            Region::Annulus { .. } => Shape::Annulus,
            Region::Mask { .. } => Shape::Custom,
        }
    }

    pub fn bounding_box(&self) -> ((f64, f64), (f64, f64)) {
        match self {
            Region::Square { lo, side } => (*lo, (lo.0 + side, lo.1 + side)),
            Region::Disc { center: c, radius: r } | Region::Annulus { center: c, outer: r, .. } => {
                ((c.0 - r, c.1 - r), (c.0 + r, c.1 + r))
            }
            Region::Mask { origin, cell, cols, rows, .. } => {
                (*origin, (origin.0 + cell * *cols as f64, origin.1 + cell * *rows as f64))
            }
        }
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        self.dist_inf_to_complement(p) > 0.0
    }

    /// ℓ∞ distance from `p` to the complement of the region.
    pub fn dist_inf_to_complement(&self, p: (f64, f64)) -> f64 {
        match self {
            Region::Square { lo, side } => {
                let d = [p.0 - lo.0, lo.0 + side - p.0, p.1 - lo.1, lo.1 + side - p.1];
                d.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0)
            }
            Region::Disc { center, radius } => disc_inner_dist(p, *center, *radius),
            Region::Annulus { center, inner, outer } => {
                let a = disc_inner_dist(p, *center, *outer);
                let b = dist_to_closed_disc(p, *center, *inner);
                a.min(b)
            }
            Region::Mask { origin, cell, cols, rows, cells } => {
                let (lx, ly) = *origin;
                let (ux, uy) = (lx + cell * *cols as f64, ly + cell * *rows as f64);
                let mut best = [p.0 - lx, ux - p.0, p.1 - ly, uy - p.1]
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                for i in 0..*rows {
                    for j in 0..*cols {
                        if cells[i * cols + j] {
                            continue;
                        }
                        let (cx0, cy0) = (lx + cell * j as f64, ly + cell * i as f64);
                        let dx = (cx0 - p.0).max(p.0 - (cx0 + cell)).max(0.0);
                        let dy = (cy0 - p.1).max(p.1 - (cy0 + cell)).max(0.0);
                        best = best.min(dx.max(dy));
                    }
                }
                best
            }
        }
    }
}

/// Largest `t` such that the ℓ∞ ball of radius `t` about `p` stays in the closed disc.
fn disc_inner_dist(p: (f64, f64), c: (f64, f64), r: f64) -> f64 {
    let a = (p.0 - c.0).abs();
    let b = (p.1 - c.1).abs();
    if a * a + b * b >= r * r {
        return 0.0;
    }
    let s = a + b;
    let disc = s * s - 2.0 * (a * a + b * b - r * r);
    ((-s + disc.sqrt()) / 2.0).max(0.0)
}

/// ℓ∞ distance from `p` to the closed disc of radius `r` about `c`.
fn dist_to_closed_disc(p: (f64, f64), c: (f64, f64), r: f64) -> f64 {
    let (dx, dy) = ((p.0 - c.0).abs(), (p.1 - c.1).abs());
    if dx * dx + dy * dy <= r * r {
        return 0.0;
    }
    let gap = |t: f64| {
        let ex = (dx - t).max(0.0);
        let ey = (dy - t).max(0.0);
        (ex * ex + ey * ey).sqrt() - r
    };
    let (mut lo, mut hi) = (0.0, dx.max(dy));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Parsed form of the command-line domain flag `box:N | disc:N | mask:path`.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Box(usize),
    Disc(usize),
    Mask(std::path::PathBuf),
}

impl std::str::FromStr for DomainSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("domain {s:?} lacks ':'")))?;
        let num = || {
            arg.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad domain size {arg:?}")))
        };
        match kind {
            "box" => Ok(DomainSpec::Box(num()?)),
            "disc" => Ok(DomainSpec::Disc(num()?)),
            "mask" => Ok(DomainSpec::Mask(arg.into())),
            _ => Err(Error::Parse(format!("unknown domain kind {kind:?}"))),
        }
    }
}

impl DomainSpec {
    pub fn build(&self) -> Result<LatticeDomain> {
        match self {
            DomainSpec::Box(n) => LatticeDomain::make_box(*n),
            DomainSpec::Disc(n) => LatticeDomain::discretize(&Region::unit_disc(), *n),
            DomainSpec::Mask(p) => LatticeDomain::from_mask_file(p, 1),
        }
    }

    /// Scale parameter `N`; masks use 1.
    pub fn scale(&self) -> usize {
        match self {
            DomainSpec::Box(n) | DomainSpec::Disc(n) => *n,
            DomainSpec::Mask(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_box() {
        let d = LatticeDomain::make_box(2).unwrap();
        assert_eq!(d.vertices(), &[(1, 1)]);
        assert_eq!(d.boundary().len(), 4);
    }

    #[test]
    fn box_counts() {
        assert_eq!(LatticeDomain::make_box(4).unwrap().len(), 9);
        assert_eq!(LatticeDomain::make_box(3).unwrap().boundary().len(), 8);
        assert!(LatticeDomain::make_box(1).is_err());
    }

    #[test]
    fn box_frame_detected() {
        let d = LatticeDomain::centered_box(3).unwrap();
        assert_eq!(d.box_frame(), Some(((-4, -4), 8)));
        assert_eq!(d.len(), 49);
        let disc = LatticeDomain::discretize(&Region::unit_disc(), 16).unwrap();
        assert_eq!(disc.box_frame(), None);
    }

    #[test]
    fn shrink_examples() {
        let d = LatticeDomain::make_box(8).unwrap();
        assert_eq!(d.interior_shrink(0.0).unwrap().len(), d.len());
        let s = d.interior_shrink(0.25).unwrap();
        for &i in &s {
            let (x, y) = d.vertex(i);
            assert!(x > 2 && x < 6 && y > 2 && y < 6);
        }
        assert_eq!(s.len(), 9);
        let d16 = LatticeDomain::make_box(16).unwrap();
        assert_eq!(d16.interior_shrink(0.125).unwrap().len(), 121);
    }

    #[test]
    fn square_matches_box() {
        for n in 2..=20 {
            let a = LatticeDomain::discretize(&Region::unit_square(), n).unwrap();
            let b = LatticeDomain::make_box(n).unwrap();
            assert_eq!(a.vertices(), b.vertices());
        }
    }

    #[test]
    fn mask_roundtrip() {
        let d = LatticeDomain::discretize(&Region::unit_disc(), 6).unwrap();
        let shifted = LatticeDomain::from_vertices(d.vertices().iter().map(|&(x, y)| (x + 6, y + 6)), 6, Shape::Custom).unwrap();
        let text = shifted.to_mask_text();
        let back = LatticeDomain::from_mask_text(&text, 6).unwrap();
        assert_eq!(back.vertices(), shifted.vertices());
    }

    #[test]
    fn domain_spec_parse() {
        assert_eq!("box:8".parse::<DomainSpec>().unwrap(), DomainSpec::Box(8));
        assert_eq!("disc:16".parse::<DomainSpec>().unwrap(), DomainSpec::Disc(16));
        assert!("torus:3".parse::<DomainSpec>().is_err());
    }
}
