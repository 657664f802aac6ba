//! Fixed-size dense linear algebra used by the filter and the simulator.
//!
//! Everything here is stack allocated and row-major. The sizes are tiny
//! (at most 9x9), so plain loops beat anything clever.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A 3-D vector; positions in mm, velocities in mm/s, accelerations in mm/s².
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Self { x: v, y: v, z: v }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    /// Component by axis index (0 = x, 1 = y, 2 = z).
    pub fn axis(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {axis} out of range"),
        }
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Dense `R x C` matrix stored row-major on the stack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const R: usize, const C: usize> {
    rows: [[f64; C]; R],
}

pub type Mat3 = Matrix<3, 3>;
pub type Mat9 = Matrix<9, 9>;
pub type Mat3x9 = Matrix<3, 9>;
pub type Mat9x3 = Matrix<9, 3>;

impl<const R: usize, const C: usize> Default for Matrix<R, C> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const R: usize, const C: usize> Matrix<R, C> {
    pub const fn zeros() -> Self {
        Self { rows: [[0.0; C]; R] }
    }

    pub const fn from_rows(rows: [[f64; C]; R]) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[[f64; C]; R] {
        &self.rows
    }

    pub fn transpose(&self) -> Matrix<C, R> {
        let mut out = Matrix::<C, R>::zeros();
        for i in 0..R {
            for j in 0..C {
                out.rows[j][i] = self.rows[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.rows.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    pub fn mul_vec(&self, v: &[f64; C]) -> [f64; R] {
        let mut out = [0.0; R];
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().flatten().copied()
    }
}

impl<const N: usize> Matrix<N, N> {
    pub fn identity() -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            out.rows[i][i] = 1.0;
        }
        out
    }

    pub fn from_diagonal(d: [f64; N]) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            out.rows[i][i] = d[i];
        }
        out
    }

    pub fn diagonal(&self) -> [f64; N] {
        std::array::from_fn(|i| self.rows[i][i])
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// `(M + Mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        let mut out = *self;
        for i in 0..N {
            for j in (i + 1)..N {
                let m = 0.5 * (self.rows[i][j] + self.rows[j][i]);
                out.rows[i][j] = m;
                out.rows[j][i] = m;
            }
        }
        out
    }

    /// `‖M − Mᵀ‖∞`.
    pub fn asymmetry(&self) -> f64 {
        (*self - self.transpose()).norm_inf()
    }

    /// Eigenvalues of the symmetric part, ascending (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> [f64; N] {
        let mut a = self.symmetrized().rows;
        let scale = self.max_abs();
        if scale == 0.0 {
            return [0.0; N];
        }
        for _sweep in 0..64 {
            let off: f64 = (0..N)
                .flat_map(|i| ((i + 1)..N).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
                break;
            }
            for p in 0..N {
                for q in (p + 1)..N {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..N {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..N {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: [f64; N] = std::array::from_fn(|i| a[i][i]);
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.symmetric_eigenvalues().first().copied().unwrap_or(0.0)
    }
}

impl<const R: usize, const C: usize> Index<(usize, usize)> for Matrix<R, C> {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.rows[r][c]
    }
}

impl<const R: usize, const C: usize> IndexMut<(usize, usize)> for Matrix<R, C> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.rows[r][c]
    }
}

impl<const R: usize, const K: usize, const C: usize> Mul<Matrix<K, C>> for Matrix<R, K> {
    type Output = Matrix<R, C>;
    fn mul(self, rhs: Matrix<K, C>) -> Matrix<R, C> {
        let mut out = Matrix::<R, C>::zeros();
        for i in 0..R {
            for k in 0..K {
                let a = self.rows[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..C {
                    out.rows[i][j] += a * rhs.rows[k][j];
                }
            }
        }
        out
    }
}

impl<const R: usize, const C: usize> Add for Matrix<R, C> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.rows.iter_mut().flatten().zip(rhs.rows.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl<const R: usize, const C: usize> Sub for Matrix<R, C> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.rows.iter_mut().flatten().zip(rhs.rows.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::from(self.mul_vec(&v.to_array()))
    }
}

/// Lower-triangular factor `L` with `S = L Lᵀ` for a symmetric 3x3 matrix.
#[derive(Clone, Copy, Debug)]
pub struct Cholesky3 {
    l: Mat3,
}

impl Cholesky3 {
    /// Returns `None` unless `s` is (numerically) positive definite.
    pub fn new(s: &Mat3) -> Option<Self> {
        let mut l = Mat3::zeros();
        for j in 0..3 {
            let mut d = s[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d.is_nan() || d <= 0.0 || d.is_infinite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..3 {
                let mut v = s[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / djj;
            }
        }
        Some(Self { l })
    }

    pub fn factor(&self) -> &Mat3 {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: [f64; 3]) -> [f64; 3] {
        let l = &self.l;
        let mut y = [0.0; 3];
        for i in 0..3 {
            let mut v = b[i];
            for k in 0..i {
                v -= l[(i, k)] * y[k];
            }
            y[i] = v / l[(i, i)];
        }
        y
    }

    /// Solves `S x = b`.
    pub fn solve(&self, b: [f64; 3]) -> [f64; 3] {
        let l = &self.l;
        let y = self.forward(b);
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut v = y[i];
            for k in (i + 1)..3 {
                v -= l[(k, i)] * x[k];
            }
            x[i] = v / l[(i, i)];
        }
        x
    }

    /// `bᵀ S⁻¹ b`, evaluated as `‖L⁻¹ b‖²`.
    pub fn mahalanobis_sq(&self, b: [f64; 3]) -> f64 {
        self.forward(b).iter().map(|v| v * v).sum()
    }
}
