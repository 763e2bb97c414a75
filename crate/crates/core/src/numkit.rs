//! Dense complex linear algebra.
//!
//! Everything in this crate works with small dense matrices (a few hundred
//! rows at most), so the kernels here favour accuracy and simplicity over
//! blocking: a cyclic Jacobi eigensolver for Hermitian matrices and a
//! one-sided (Hestenes) Jacobi SVD. Real-linear maps are represented as
//! complex matrices with vanishing imaginary parts; the Jacobi rotations
//! keep those imaginary parts exactly zero.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative tolerance used when validating Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("column length mismatch".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        CMatrix::from_fn(r, c, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    fn zip_with(&self, other: &CMatrix, f: impl Fn(C64, C64) -> C64) -> Result<CMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn try_add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `max |A - A^H|`.
    pub fn hermiticity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        Ok(worst)
    }

    /// Fails unless the matrix is square and Hermitian within
    /// `HERMITIAN_TOL * max|A|`.
    pub fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermiticity_defect()?;
        if defect > HERMITIAN_TOL * self.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(())
    }

    /// `max |U^H U - I|`.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        let g = self.adjoint().matmul(self)?;
        Ok(g.try_sub(&CMatrix::identity(self.rows))?.max_abs())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on shape mismatch; use [`CMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Hermitian inner product `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Stacks `Re v` over `Im v`.
pub fn realify(v: &[C64]) -> Vec<f64> {
    v.iter()
        .map(|z| z.re)
        .chain(v.iter().map(|z| z.im))
        .collect()
}

/// Inverse of [`realify`].
pub fn complexify(x: &[f64]) -> Vec<C64> {
    let n = x.len() / 2;
    (0..n).map(|i| C64::new(x[i], x[n + i])).collect()
}

/// Eigendecomposition `A = V diag(values) V^H` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `j` belongs to `values[j]`.
    pub vectors: CMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn herm_eig(a: &CMatrix) -> Result<HermEig> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows, a.cols));
    }
    a.check_hermitian()?;
    let n = a.rows;
    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();

    if scale > 0.0 {
        let skip = f64::EPSILON * scale * 1e-2;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    let r = apq.norm();
                    if r <= skip {
                        continue;
                    }
                    rotated = true;
                    let phase = apq / r;
                    let app = m[(p, p)].re;
                    let aqq = m[(q, q)].re;
                    let theta = (aqq - app) / (2.0 * r);
                    let t = theta_sign(theta) / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let pc = phase.conj();
                    for k in 0..n {
                        let (xp, xq) = (m[(k, p)], m[(k, q)]);
                        m[(k, p)] = xp * c - xq * pc * s;
                        m[(k, q)] = xp * s + xq * pc * c;
                    }
                    for k in 0..n {
                        let (xp, xq) = (m[(p, k)], m[(q, k)]);
                        m[(p, k)] = xp * c - xq * phase * s;
                        m[(q, k)] = xp * s + xq * phase * c;
                    }
                    for k in 0..n {
                        let (xp, xq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = xp * c - xq * pc * s;
                        v[(k, q)] = xp * s + xq * pc * c;
                    }
                    m[(p, q)] = C64::new(0.0, 0.0);
                    m[(q, p)] = C64::new(0.0, 0.0);
                    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

fn theta_sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Thin singular value decomposition `A = U diag(s) V^H`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: CMatrix,
    /// Nonincreasing, length `k`.
    pub s: Vec<f64>,
    /// `cols x k` with orthonormal columns.
    pub v: CMatrix,
}

/// Column-orthogonalised form `A V = W` from one-sided Jacobi, with the
/// columns sorted by nonincreasing norm.
struct JacobiColumns {
    w: CMatrix,
    norms: Vec<f64>,
    v: CMatrix,
}

fn one_sided_jacobi(a: &CMatrix) -> JacobiColumns {
    let (m, n) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale > 0.0 {
        let tiny = (f64::EPSILON * scale).powi(2) * 1e-4;
        let tol = 1e-15;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = C64::new(0.0, 0.0);
                    for k in 0..m {
                        let (xp, xq) = (w[(k, p)], w[(k, q)]);
                        alpha += xp.norm_sqr();
                        beta += xq.norm_sqr();
                        gamma += xp.conj() * xq;
                    }
                    if alpha <= tiny || beta <= tiny {
                        continue;
                    }
                    let g = gamma.norm();
                    if g <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let pc = (gamma / g).conj();
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = theta_sign(zeta) / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..m {
                        let xp = w[(k, p)];
                        let xq = w[(k, q)] * pc;
                        w[(k, p)] = xp * c - xq * s;
                        w[(k, q)] = xp * s + xq * c;
                    }
                    for k in 0..n {
                        let xp = v[(k, p)];
                        let xq = v[(k, q)] * pc;
                        v[(k, p)] = xp * c - xq * s;
                        v[(k, q)] = xp * s + xq * c;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }

    let col_norm = |w: &CMatrix, j: usize| (0..m).map(|k| w[(k, j)].norm_sqr()).sum::<f64>().sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<f64> = (0..n).map(|j| col_norm(&w, j)).collect();
    // Stable sort keeps the original column order among exact ties.
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let norms = order.iter().map(|&j| raw[j]).collect();
    let w = CMatrix::from_fn(m, n, |i, j| w[(i, order[j])]);
    let v = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    JacobiColumns { w, norms, v }
}

/// Thin SVD via one-sided Jacobi. Left singular vectors belonging to
/// numerically zero singular values are completed to an orthonormal set.
pub fn svd(a: &CMatrix) -> Svd {
    if a.rows < a.cols {
        let t = svd(&a.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (m, n) = (a.rows, a.cols);
    let JacobiColumns { w, norms, v } = one_sided_jacobi(a);
    let smax = norms.first().copied().unwrap_or(0.0);
    let zero = smax * f64::EPSILON * m.max(n) as f64;
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (j, &s) in norms.iter().enumerate() {
        if s > zero {
            columns.push(w.column(j).into_iter().map(|z| z / s).collect());
        } else {
            columns.push(vec![C64::new(0.0, 0.0); m]);
            missing.push(j);
        }
    }
    complete_orthonormal(&mut columns, &missing);
    Svd {
        u: CMatrix::from_columns(m, &columns).expect("consistent column lengths"),
        s: norms,
        v,
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to
/// every other column (Gram-Schmidt over the standard basis).
fn complete_orthonormal(columns: &mut [Vec<C64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = columns[0].len();
    let mut filled: Vec<bool> = (0..columns.len()).map(|j| !missing.contains(&j)).collect();
    for &slot in missing {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..m {
            let mut x = vec![C64::new(0.0, 0.0); m];
            x[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for (j, col) in columns.iter().enumerate() {
                    if filled[j] {
                        let c = inner(col, &x);
                        for (xi, ci) in x.iter_mut().zip(col) {
                            *xi -= c * ci;
                        }
                    }
                }
            }
            let nx = norm(&x);
            if best.as_ref().is_none_or(|(b, _)| nx > *b + 1e-12) {
                best = Some((nx, x));
            }
        }
        let (nx, x) = best.expect("nonempty standard basis");
        columns[slot] = x.into_iter().map(|z| z / nx).collect();
        filled[slot] = true;
    }
}

/// Threshold policy for [`numerical_rank`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum RankTol {
    /// `DEFAULT_RANK_TOL`.
    #[default]
    Auto,
    /// Relative tolerance `tau_rel`; the absolute threshold is
    /// `tau_rel * sigma_max * max(rows, cols)`.
    Relative(f64),
}

impl RankTol {
    pub fn relative(self) -> f64 {
        match self {
            RankTol::Auto => DEFAULT_RANK_TOL,
            RankTol::Relative(t) => t,
        }
    }

    /// `tau_rel * max(sigma_max, floor) * max(rows, cols)`.
    pub fn threshold(self, sigma_max: f64, floor: f64, rows: usize, cols: usize) -> f64 {
        self.relative() * sigma_max.max(floor) * rows.max(cols) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankResult {
    pub rank: usize,
    /// Nonincreasing, length `min(rows, cols)`.
    pub singular_values: Vec<f64>,
    pub tolerance_used: f64,
}

impl RankResult {
    /// False when some singular value lies within a factor `margin` of the
    /// threshold on either side.
    pub fn is_stable(&self, margin: f64) -> bool {
        let tau = self.tolerance_used;
        !self
            .singular_values
            .iter()
            .any(|&s| s > tau / margin && s <= tau * margin)
    }

    /// Ratio of the smallest retained to the largest discarded singular
    /// value; infinite when nothing was discarded or retained.
    pub fn gap(&self) -> f64 {
        let kept = self.singular_values.get(self.rank.wrapping_sub(1)).copied();
        let dropped = self.singular_values.get(self.rank).copied();
        match (kept, dropped) {
            (Some(k), Some(d)) if d > 0.0 => k / d,
            _ => f64::INFINITY,
        }
    }
}

pub fn numerical_rank(a: &CMatrix, policy: RankTol) -> Result<RankResult> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::Shape("numerical rank of an empty matrix".into()));
    }
    Ok(kernel(a, policy)?.rank)
}

/// Rank decision together with an orthonormal basis of the numerical null
/// space (columns of the returned matrix, `cols x (cols - rank)`).
#[derive(Clone, Debug)]
pub struct Kernel {
    pub rank: RankResult,
    pub basis: CMatrix,
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }
}

pub fn kernel(a: &CMatrix, policy: RankTol) -> Result<Kernel> {
    kernel_with_floor(a, policy, 0.0)
}

/// [`numerical_rank`] with the threshold measured against
/// `max(sigma_max, floor)`. Maps that may vanish identically need a floor:
/// otherwise their rounding noise sets the scale and is counted as rank.
pub fn numerical_rank_with_floor(a: &CMatrix, policy: RankTol, floor: f64) -> Result<RankResult> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::Shape("numerical rank of an empty matrix".into()));
    }
    Ok(kernel_with_floor(a, policy, floor)?.rank)
}

/// [`kernel`] with a scale floor, see [`numerical_rank_with_floor`].
pub fn kernel_with_floor(a: &CMatrix, policy: RankTol, floor: f64) -> Result<Kernel> {
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Err(Error::Shape("kernel of a map with no columns".into()));
    }
    if m == 0 {
        return Ok(Kernel {
            rank: RankResult {
                rank: 0,
                singular_values: Vec::new(),
                tolerance_used: 0.0,
            },
            basis: CMatrix::identity(n),
        });
    }
    let JacobiColumns { norms, v, .. } = one_sided_jacobi(a);
    let tau = policy.threshold(norms[0], floor, m, n);
    let rank = norms.iter().filter(|&&s| s > tau).count();
    let basis = CMatrix::from_fn(n, n - rank, |i, j| v[(i, rank + j)]);
    Ok(Kernel {
        rank: RankResult {
            rank,
            singular_values: norms[..m.min(n)].to_vec(),
            tolerance_used: tau,
        },
        basis,
    })
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn expm_i_herm(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = herm_eig(h)?;
    Ok(unitary_from_eig(&eig, t))
}

/// `V diag(exp(-i lambda t)) V^H` from a precomputed eigendecomposition.
pub fn unitary_from_eig(eig: &HermEig, t: f64) -> CMatrix {
    let n = eig.values.len();
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&l| C64::from_polar(1.0, -l * t))
        .collect();
    let v = &eig.vectors;
    CMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj())
            .sum()
    })
}

/// Random matrices for sampling and tests.
pub mod random {
    use num_complex::Complex64 as C64;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::CMatrix;

    /// Complex standard normal: real and imaginary parts i.i.d. N(0, 1/2).
    pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
        (0..n).map(|_| complex_gaussian(rng)).collect()
    }

    pub fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng))
    }

    /// GUE-like Hermitian matrix `(G + G^H) / 2`.
    pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let g = ginibre(n, rng);
        CMatrix::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
    }

    /// Haar-distributed unitary: Gram-Schmidt on a Ginibre matrix with the
    /// usual phase correction.
    pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let g = ginibre(n, rng);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut x = g.column(j);
            for _ in 0..2 {
                for c in &cols {
                    let p = super::inner(c, &x);
                    for (xi, ci) in x.iter_mut().zip(c) {
                        *xi -= p * ci;
                    }
                }
            }
            let nx = super::norm(&x);
            cols.push(x.into_iter().map(|z| z / nx).collect());
        }
        CMatrix::from_columns(n, &cols).expect("square")
    }
}
