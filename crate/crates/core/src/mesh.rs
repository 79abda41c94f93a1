//! Periodic strip `[0, lx) × [0, ly]` with dynamic boundary rows at `y = 0`
//! and `y = ly`.
//!
//! Fields are flat row-major vectors, node `(i, j)` at index `j·nx + i`, with
//! `x = i·hx` (periodic) and `y = j·hy`. Rows `0` and `ny − 1` carry the trace
//! `v = u|_Γ`; there is no separate trace storage.
//!
//! The bulk quadrature is uniform in `x` and trapezoidal in `y`, so a node on
//! row `j` carries the weight `hx·w_j` with `w_j = hy` inside and `hy/2` on the
//! boundary rows. The boundary quadrature gives every trace node the weight `hx`.
//! With these weights the operators below satisfy
//! `⟨−Δ_h w, z⟩ = a(w, z) − ⟨∂ₙw, z⟩_Γ` exactly (up to round-off).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh needs nx >= 4 and ny >= 4, got nx = {nx}, ny = {ny}")]
    TooSmall { nx: usize, ny: usize },
    #[error("{0} must be positive and finite, got {1}")]
    BadLength(&'static str, f64),
    #[error("field has {got} values, mesh expects {expected}")]
    Shape { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripMesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Top,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Bottom, Side::Top];
}

impl StripMesh {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, MeshError> {
        if nx < 4 || ny < 4 {
            return Err(MeshError::TooSmall { nx, ny });
        }
        for (name, v) in [("lx", lx), ("ly", ly)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MeshError::BadLength(name, v));
            }
        }
        Ok(StripMesh { nx, ny, lx, ly })
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    pub fn row(&self, side: Side) -> usize {
        match side {
            Side::Bottom => 0,
            Side::Top => self.ny - 1,
        }
    }

    pub fn is_boundary_row(&self, j: usize) -> bool {
        j == 0 || j == self.ny - 1
    }

    /// Trapezoid weight `w_j` in `y`.
    #[inline]
    pub fn bulk_weight(&self, j: usize) -> f64 {
        if self.is_boundary_row(j) {
            0.5 * self.hy()
        } else {
            self.hy()
        }
    }

    /// Boundary weight per unit `hx`: 1 on the trace rows, 0 inside.
    #[inline]
    pub fn boundary_weight(&self, j: usize) -> f64 {
        if self.is_boundary_row(j) {
            1.0
        } else {
            0.0
        }
    }

    /// Evaluate `f(x, y)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }

    pub fn check(&self, u: &[f64]) -> Result<(), MeshError> {
        if u.len() != self.len() {
            return Err(MeshError::Shape {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Trace row `v = u|_Γ` on one side.
    pub fn trace<'a>(&self, u: &'a [f64], side: Side) -> &'a [f64] {
        let j = self.row(side);
        &u[j * self.nx..(j + 1) * self.nx]
    }
}

#[inline]
fn left(nx: usize, i: usize) -> usize {
    if i == 0 {
        nx - 1
    } else {
        i - 1
    }
}

#[inline]
fn right(nx: usize, i: usize) -> usize {
    if i + 1 == nx {
        0
    } else {
        i + 1
    }
}

/// Discrete Laplacian: 5-point stencil inside; on the boundary rows the
/// summation-by-parts closure `δxx u₀ + (u₀ − 2u₁ + u₂)/hy²` (mirrored at the top).
pub fn laplacian(mesh: &StripMesh, u: &[f64]) -> Result<Vec<f64>, MeshError> {
    mesh.check(u)?;
    let (nx, ny) = (mesh.nx, mesh.ny);
    let ihx2 = 1.0 / (mesh.hx() * mesh.hx());
    let ihy2 = 1.0 / (mesh.hy() * mesh.hy());
    let mut out = vec![0.0; u.len()];
    for j in 0..ny {
        for i in 0..nx {
            let k = mesh.idx(i, j);
            let dxx = (u[mesh.idx(left(nx, i), j)] - 2.0 * u[k] + u[mesh.idx(right(nx, i), j)]) * ihx2;
            let dyy = if j == 0 {
                u[k] - 2.0 * u[mesh.idx(i, 1)] + u[mesh.idx(i, 2)]
            } else if j == ny - 1 {
                u[k] - 2.0 * u[mesh.idx(i, ny - 2)] + u[mesh.idx(i, ny - 3)]
            } else {
                u[mesh.idx(i, j - 1)] - 2.0 * u[k] + u[mesh.idx(i, j + 1)]
            } * ihy2;
            out[k] = dxx + dyy;
        }
    }
    Ok(out)
}

/// Periodic second difference along a trace row.
pub fn laplace_beltrami(mesh: &StripMesh, row: &[f64]) -> Result<Vec<f64>, MeshError> {
    if row.len() != mesh.nx {
        return Err(MeshError::Shape {
            expected: mesh.nx,
            got: row.len(),
        });
    }
    let nx = mesh.nx;
    let ihx2 = 1.0 / (mesh.hx() * mesh.hx());
    Ok((0..nx)
        .map(|i| (row[left(nx, i)] - 2.0 * row[i] + row[right(nx, i)]) * ihx2)
        .collect())
}

/// Outward normal derivative by the 3-point one-sided formula.
pub fn normal_derivative(mesh: &StripMesh, u: &[f64], side: Side) -> Result<Vec<f64>, MeshError> {
    mesh.check(u)?;
    let (j0, j1, j2) = match side {
        Side::Bottom => (0, 1, 2),
        Side::Top => (mesh.ny - 1, mesh.ny - 2, mesh.ny - 3),
    };
    let inv = 1.0 / (2.0 * mesh.hy());
    Ok((0..mesh.nx)
        .map(|i| (3.0 * u[mesh.idx(i, j0)] - 4.0 * u[mesh.idx(i, j1)] + u[mesh.idx(i, j2)]) * inv)
        .collect())
}

/// Bulk inner product `⟨w, z⟩` with the trapezoid-in-`y` weights.
pub fn inner_bulk(mesh: &StripMesh, w: &[f64], z: &[f64]) -> f64 {
    let hx = mesh.hx();
    let mut s = 0.0;
    for j in 0..mesh.ny {
        let mut row = 0.0;
        for i in 0..mesh.nx {
            let k = mesh.idx(i, j);
            row += w[k] * z[k];
        }
        s += mesh.bulk_weight(j) * row;
    }
    hx * s
}

/// Boundary inner product over both trace rows.
pub fn inner_boundary(mesh: &StripMesh, w: &[f64], z: &[f64]) -> f64 {
    let hx = mesh.hx();
    Side::BOTH
        .iter()
        .map(|&s| {
            let (a, b) = (mesh.trace(w, s), mesh.trace(z, s));
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
        })
        .sum::<f64>()
        * hx
}

/// Dirichlet form `a(w, z) = ⟨∇_h w, ∇_h z⟩` from forward differences.
pub fn dirichlet_form(mesh: &StripMesh, w: &[f64], z: &[f64]) -> f64 {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let mut sx = 0.0;
    for j in 0..ny {
        let mut row = 0.0;
        for i in 0..nx {
            let (k, kr) = (mesh.idx(i, j), mesh.idx(right(nx, i), j));
            row += (w[kr] - w[k]) * (z[kr] - z[k]);
        }
        sx += mesh.bulk_weight(j) * row;
    }
    let mut sy = 0.0;
    for j in 0..ny - 1 {
        for i in 0..nx {
            let (k, ku) = (mesh.idx(i, j), mesh.idx(i, j + 1));
            sy += (w[ku] - w[k]) * (z[ku] - z[k]);
        }
    }
    sx / hx + sy * hx / hy
}

/// Boundary Dirichlet form `⟨∇_Γ w, ∇_Γ z⟩_Γ` over both trace rows.
pub fn boundary_dirichlet_form(mesh: &StripMesh, w: &[f64], z: &[f64]) -> f64 {
    let nx = mesh.nx;
    let mut s = 0.0;
    for side in Side::BOTH {
        let (a, b) = (mesh.trace(w, side), mesh.trace(z, side));
        for i in 0..nx {
            let r = right(nx, i);
            s += (a[r] - a[i]) * (b[r] - b[i]);
        }
    }
    s / mesh.hx()
}

/// `out_k = ∂a(w, ·)/∂z_k / hx`, the stiffness action per unit `hx`.
pub fn stiffness_apply(mesh: &StripMesh, w: &[f64], out: &mut [f64]) {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let hx = mesh.hx();
    let ihx2 = 1.0 / (hx * hx);
    let ihy = 1.0 / mesh.hy();
    for j in 0..ny {
        let wj = mesh.bulk_weight(j) * ihx2;
        for i in 0..nx {
            let k = mesh.idx(i, j);
            let c = w[k];
            let mut v = wj * (2.0 * c - w[mesh.idx(left(nx, i), j)] - w[mesh.idx(right(nx, i), j)]);
            if j > 0 {
                v += (c - w[k - nx]) * ihy;
            }
            if j + 1 < ny {
                v += (c - w[k + nx]) * ihy;
            }
            out[k] = v;
        }
    }
}

/// Diagonal of [`stiffness_apply`] on row `j`.
pub fn stiffness_diagonal(mesh: &StripMesh, j: usize) -> f64 {
    let hx = mesh.hx();
    let neighbours = if mesh.is_boundary_row(j) { 1.0 } else { 2.0 };
    2.0 * mesh.bulk_weight(j) / (hx * hx) + neighbours / mesh.hy()
}

/// Norm surrogates for `H`, `H_Γ` and the two gradient seminorms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSet {
    pub l2_bulk: f64,
    pub l2_boundary: f64,
    pub h1_semi_bulk: f64,
    pub h1_semi_boundary: f64,
}

pub fn norms(mesh: &StripMesh, u: &[f64]) -> Result<NormSet, MeshError> {
    mesh.check(u)?;
    Ok(NormSet {
        l2_bulk: inner_bulk(mesh, u, u).sqrt(),
        l2_boundary: inner_boundary(mesh, u, u).sqrt(),
        h1_semi_bulk: dirichlet_form(mesh, u, u).sqrt(),
        h1_semi_boundary: boundary_dirichlet_form(mesh, u, u).sqrt(),
    })
}

/// `L²` norm of one trace row.
pub fn l2_row(mesh: &StripMesh, u: &[f64], side: Side) -> f64 {
    (mesh.trace(u, side).iter().map(|x| x * x).sum::<f64>() * mesh.hx()).sqrt()
}

/// Snapshot as CSV: a `nx,ny,lx,ly,t` header line, its values, then one
/// line per grid row `j`.
pub fn snapshot_csv(mesh: &StripMesh, u: &[f64], t: f64) -> String {
    let mut s = format!("nx,ny,lx,ly,t\n{},{},{},{},{}\n", mesh.nx, mesh.ny, mesh.lx, mesh.ly, t);
    for j in 0..mesh.ny {
        let row: Vec<String> = (0..mesh.nx).map(|i| format!("{}", u[mesh.idx(i, j)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Raw little-endian `f64` dump of a field.
pub fn snapshot_raw(u: &[f64]) -> Vec<u8> {
    u.iter().flat_map(|x| x.to_le_bytes()).collect()
}

/// JSON sidecar describing a raw dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub file: String,
    pub dtype: String,
    pub layout: String,
    pub shape: [usize; 2],
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
}

impl RawSidecar {
    pub fn new(file: impl Into<String>, mesh: &StripMesh, t: f64) -> Self {
        RawSidecar {
            file: file.into(),
            dtype: "f64le".into(),
            layout: "row-major, index j*nx + i".into(),
            shape: [mesh.ny, mesh.nx],
            lx: mesh.lx,
            ly: mesh.ly,
            t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn mesh(nx: usize, ny: usize) -> StripMesh {
        StripMesh::new(nx, ny, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_small_meshes() {
        assert!(matches!(StripMesh::new(3, 8, 1.0, 1.0), Err(MeshError::TooSmall { .. })));
        assert!(matches!(StripMesh::new(8, 8, 0.0, 1.0), Err(MeshError::BadLength("lx", _))));
        let m = mesh(8, 8);
        assert!(matches!(laplacian(&m, &[0.0; 3]), Err(MeshError::Shape { .. })));
    }

    #[test]
    fn laplacian_examples() {
        let m = mesh(16, 9);
        assert!(laplacian(&m, &vec![2.5; m.len()]).unwrap().iter().all(|&v| v == 0.0));
        let lin = m.sample(|_, y| y);
        for v in laplacian(&m, &lin).unwrap() {
            assert!(v.abs() < 1e-10);
        }
        // cos(2πx): hand stencil at x = 0 gives (2cos(2πhx) − 2)/hx²
        let c = m.sample(|x, _| (2.0 * PI * x).cos());
        let hx = m.hx();
        let lam = -(2.0 / (hx * hx)) * (1.0 - (2.0 * PI * hx).cos());
        for (k, v) in laplacian(&m, &c).unwrap().iter().enumerate() {
            assert!((v - lam * c[k]).abs() < 1e-9);
        }
        // boundary closure is exact on quadratics in y
        let q = m.sample(|_, y| y * y);
        for v in laplacian(&m, &q).unwrap() {
            assert!((v - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn laplace_beltrami_examples() {
        let m = mesh(8, 5);
        assert!(laplace_beltrami(&m, &[1.0; 8]).unwrap().iter().all(|&v| v == 0.0));
        let alt: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let hx = m.hx();
        for (a, b) in laplace_beltrami(&m, &alt).unwrap().iter().zip(&alt) {
            assert!((a + 4.0 / (hx * hx) * b).abs() < 1e-12);
        }
        assert!(laplace_beltrami(&m, &[1.0; 7]).is_err());
    }

    #[test]
    fn normal_derivative_examples() {
        let m = mesh(8, 11);
        let y = m.sample(|_, y| y);
        for v in normal_derivative(&m, &y, Side::Bottom).unwrap() {
            assert!((v + 1.0).abs() < 1e-12);
        }
        let y2 = m.sample(|_, y| y * y);
        for v in normal_derivative(&m, &y2, Side::Top).unwrap() {
            assert!((v - 2.0).abs() < 1e-12);
        }
        let c = vec![3.0; m.len()];
        assert!(normal_derivative(&m, &c, Side::Top).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn norm_examples() {
        let m = mesh(16, 17);
        let n = norms(&m, &vec![1.0; m.len()]).unwrap();
        assert!((n.l2_bulk - 1.0).abs() < 1e-14);
        assert!((l2_row(&m, &vec![1.0; m.len()], Side::Bottom) - 1.0).abs() < 1e-14);
        assert!((l2_row(&m, &vec![1.0; m.len()], Side::Top) - 1.0).abs() < 1e-14);
        assert_eq!(norms(&m, &vec![0.0; m.len()]).unwrap(), NormSet::default());
    }

    #[test]
    fn norms_converge_at_second_order() {
        // ∫∫ (cos(2πx)·(1 + y))² = ½ · 7/3 and ½∫∫|∇|² over the same field.
        let exact_l2 = 0.5 * 7.0 / 3.0;
        let exact_h1 = 0.5 * 4.0 * PI * PI * 7.0 / 3.0 + 0.5;
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let m = mesh(n, n + 1);
            let u = m.sample(|x, y| (2.0 * PI * x).cos() * (1.0 + y));
            let ns = norms(&m, &u).unwrap();
            errs.push(((ns.l2_bulk.powi(2) - exact_l2).abs(), (ns.h1_semi_bulk.powi(2) - exact_h1).abs()));
        }
        for w in errs.windows(2) {
            assert!((w[0].0 / w[1].0).log2() > 1.8, "{errs:?}");
            assert!((w[0].1 / w[1].1).log2() > 1.8, "{errs:?}");
        }
        // cos² alone integrates exactly under the periodic rule.
        let m = mesh(16, 9);
        let n = norms(&m, &m.sample(|x, _| (2.0 * PI * x).cos())).unwrap();
        assert!((n.l2_bulk.powi(2) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn stiffness_matches_dirichlet_form_and_diagonal() {
        let m = StripMesh::new(6, 5, 1.3, 0.7).unwrap();
        let w = m.sample(|x, y| (3.0 * x).sin() + y * y * x);
        let z = m.sample(|x, y| (x - y).cos());
        let mut kw = vec![0.0; m.len()];
        stiffness_apply(&m, &w, &mut kw);
        let lhs: f64 = kw.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() * m.hx();
        assert!((lhs - dirichlet_form(&m, &w, &z)).abs() < 1e-12);
        let mut e = vec![0.0; m.len()];
        for j in 0..m.ny {
            let k = m.idx(2, j);
            e[k] = 1.0;
            stiffness_apply(&m, &e, &mut kw);
            assert!((kw[k] - stiffness_diagonal(&m, j)).abs() < 1e-12);
            e[k] = 0.0;
        }
    }

    #[test]
    fn snapshot_formats() {
        let m = mesh(4, 4);
        let u: Vec<f64> = (0..16).map(|k| k as f64 * 0.5).collect();
        let csv = snapshot_csv(&m, &u, 0.25);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "nx,ny,lx,ly,t");
        assert_eq!(lines[1], "4,4,1,1,0.25");
        assert_eq!(lines[2], "0,0.5,1,1.5");
        assert_eq!(lines.len(), 6);
        let raw = snapshot_raw(&u);
        assert_eq!(raw.len(), 128);
        assert_eq!(f64::from_le_bytes(raw[8..16].try_into().unwrap()), 0.5);
    }

    proptest! {
        #[test]
        fn summation_by_parts(
            nx in 4usize..9, ny in 4usize..9,
            lx in 0.5f64..2.0, ly in 0.5f64..2.0,
            seed in proptest::collection::vec(-1.0f64..1.0, 128),
        ) {
            let m = StripMesh::new(nx, ny, lx, ly).unwrap();
            let w: Vec<f64> = (0..m.len()).map(|k| seed[k % 128]).collect();
            let z: Vec<f64> = (0..m.len()).map(|k| seed[(7 * k + 3) % 128]).collect();
            let neg_lap: Vec<f64> = laplacian(&m, &w).unwrap().iter().map(|v| -v).collect();
            let lhs = inner_bulk(&m, &neg_lap, &z);
            let mut dn = vec![0.0; m.len()];
            for side in Side::BOTH {
                let j = m.row(side);
                for (i, v) in normal_derivative(&m, &w, side).unwrap().into_iter().enumerate() {
                    dn[m.idx(i, j)] = v;
                }
            }
            let rhs = dirichlet_form(&m, &w, &z) - inner_boundary(&m, &dn, &z);
            let scale = lhs.abs().max(dirichlet_form(&m, &w, &w).sqrt() * dirichlet_form(&m, &z, &z).sqrt()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }

        #[test]
        fn laplace_beltrami_conserves(row in proptest::collection::vec(-5.0f64..5.0, 4..40)) {
            let m = StripMesh::new(row.len(), 4, 1.0, 1.0).unwrap();
            let s: f64 = laplace_beltrami(&m, &row).unwrap().iter().sum();
            let scale = 1.0 / (m.hx() * m.hx());
            prop_assert!(s.abs() <= 1e-12 * scale * row.len() as f64);
        }

        #[test]
        fn norms_are_homogeneous(c in -3.0f64..3.0, seed in proptest::collection::vec(-1.0f64..1.0, 48)) {
            let m = StripMesh::new(6, 8, 1.0, 1.0).unwrap();
            let u = seed.clone();
            let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
            let (a, b) = (norms(&m, &u).unwrap(), norms(&m, &cu).unwrap());
            for (x, y) in [(a.l2_bulk, b.l2_bulk), (a.l2_boundary, b.l2_boundary),
                           (a.h1_semi_bulk, b.h1_semi_bulk), (a.h1_semi_boundary, b.h1_semi_boundary)] {
                prop_assert!((c.abs() * x - y).abs() <= 1e-12 * (1.0 + y));
            }
        }
    }
}
