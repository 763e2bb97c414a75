//! The local Lie algebra `su(d_0) + ... + su(d_{L-1})`.
//!
//! Local Hamiltonians are kept in factor form `(F_0, ..., F_{L-1})` and act
//! on state vectors without forming the full `D x D` matrix; [`embed_full`]
//! builds that matrix when a caller needs it explicitly.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numkit::{inner, CMatrix};
use crate::states::{apply_factor, partial_trace, MultipartiteState};

/// Tolerance for the traceless/Hermitian checks on local factors, scaled by
/// `max(1, max|F_k|)`.
pub const FACTOR_TOL: f64 = 1e-12;

/// Generalized Gell-Mann basis of `su(d)`, normalized to `Tr(T_a T_b) = 2 delta_ab`.
///
/// Ordering: for each `k = 1..d-1`, the symmetric and antisymmetric
/// generators of every pair `(j, k)` with `j < k`, followed by the diagonal
/// generator `D_k`. For `d = 2` this yields `X, Y, Z`; for `d = 3` the
/// usual `lambda_1 ... lambda_8`.
pub fn su_basis(d: usize) -> Result<Vec<CMatrix>> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("su({d}) needs d >= 2")));
    }
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(d * d - 1);
    for k in 1..d {
        for j in 0..k {
            let mut s = CMatrix::zeros(d, d);
            s[(j, k)] = one;
            s[(k, j)] = one;
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(j, k)] = -i;
            a[(k, j)] = i;
            out.push(a);
        }
        let norm = (2.0 / (k * (k + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for j in 0..k {
            diag[(j, j)] = C64::new(norm, 0.0);
        }
        diag[(k, k)] = C64::new(-(k as f64) * norm, 0.0);
        out.push(diag);
    }
    Ok(out)
}

/// `(F_0, ..., F_{L-1})`, each traceless Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalHamiltonian {
    factors: Vec<CMatrix>,
}

impl LocalHamiltonian {
    pub fn new(factors: Vec<CMatrix>) -> Result<Self> {
        for f in &factors {
            if !f.is_square() {
                return Err(Error::NotSquare(f.rows(), f.cols()));
            }
            let scale = f.max_abs().max(1.0);
            let herm = f.hermiticity_defect()?;
            if herm > FACTOR_TOL * scale {
                return Err(Error::NotHermitian(herm));
            }
            let tr = f.trace().norm();
            if tr > FACTOR_TOL * scale {
                return Err(Error::NotTraceless(tr));
            }
        }
        Ok(Self { factors })
    }

    /// Accepts Hermitian factors with arbitrary trace and removes the trace
    /// (which only contributes a global phase).
    pub fn from_hermitian(factors: Vec<CMatrix>) -> Result<Self> {
        let traceless = factors
            .into_iter()
            .map(|f| {
                if !f.is_square() {
                    return Err(Error::NotSquare(f.rows(), f.cols()));
                }
                let shift = f.trace() / f.rows() as f64;
                f.try_sub(&CMatrix::identity(f.rows()).scale(shift))
            })
            .collect::<Result<_>>()?;
        Self::new(traceless)
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&d| CMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(CMatrix::rows).collect()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &LocalHamiltonian, b: f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Shape(
                "local Hamiltonians on different spaces".into(),
            ));
        }
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(x, y)| {
                x.scale(C64::new(a, 0.0))
                    .try_add(&y.scale(C64::new(b, 0.0)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { factors })
    }

    /// `Tr(rho_k F_k)` summed over subsystems.
    pub fn reduced_expectation(&self, state: &MultipartiteState) -> Result<f64> {
        self.check_dims(state.dims())?;
        let mut total = 0.0;
        for (k, f) in self.factors.iter().enumerate() {
            let rho = partial_trace(state, k)?;
            total += rho.matmul(f)?.trace().re;
        }
        Ok(total)
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::Shape(format!(
                "local Hamiltonian on {:?} applied to state on {:?}",
                self.dims(),
                dims
            )));
        }
        Ok(())
    }
}

/// Real basis of the local algebra, factor-major.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    dims: Vec<usize>,
    /// `(subsystem, generator)` pairs.
    elements: Vec<(usize, CMatrix)>,
}

impl AlgebraBasis {
    pub fn new(dims: &[usize]) -> Result<Self> {
        let mut elements = Vec::new();
        for (k, &d) in dims.iter().enumerate() {
            for t in su_basis(d)? {
                elements.push((k, t));
            }
        }
        Ok(Self {
            dims: dims.to_vec(),
            elements,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Index range of the generators acting on subsystem `k`.
    pub fn factor_range(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.dims[..k].iter().map(|d| d * d - 1).sum();
        start..start + self.dims[k] * self.dims[k] - 1
    }

    /// Subsystem and single-factor generator of element `a`.
    pub fn generator(&self, a: usize) -> (usize, &CMatrix) {
        let (k, t) = &self.elements[a];
        (*k, t)
    }

    /// Element `a` as a local Hamiltonian with one nonzero factor.
    pub fn element(&self, a: usize) -> LocalHamiltonian {
        let (k, t) = &self.elements[a];
        let mut factors: Vec<CMatrix> = self.dims.iter().map(|&d| CMatrix::zeros(d, d)).collect();
        factors[*k] = t.clone();
        LocalHamiltonian { factors }
    }

    /// `sum_a c_a T_a`.
    pub fn combination(&self, coefficients: &[f64]) -> Result<LocalHamiltonian> {
        if coefficients.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a basis of {}",
                coefficients.len(),
                self.len()
            )));
        }
        let mut factors: Vec<CMatrix> = self.dims.iter().map(|&d| CMatrix::zeros(d, d)).collect();
        for (&c, (k, t)) in coefficients.iter().zip(&self.elements) {
            if c != 0.0 {
                factors[*k] = factors[*k].try_add(&t.scale(C64::new(c, 0.0)))?;
            }
        }
        Ok(LocalHamiltonian { factors })
    }
}

/// `sum_k I (x) ... (x) F_k (x) ... (x) I`.
pub fn embed_full(f: &LocalHamiltonian) -> CMatrix {
    let dims = f.dims();
    let total: usize = dims.iter().product();
    let mut out = CMatrix::zeros(total, total);
    for (k, fk) in f.factors.iter().enumerate() {
        let left = CMatrix::identity(dims[..k].iter().product());
        let right = CMatrix::identity(dims[k + 1..].iter().product());
        out = &out + &left.kron(fk).kron(&right);
    }
    out
}

/// Anything that acts linearly on state vectors of a given factor structure.
pub trait Operator {
    fn apply(&self, dims: &[usize], v: &[C64]) -> Result<Vec<C64>>;
}

impl Operator for LocalHamiltonian {
    fn apply(&self, dims: &[usize], v: &[C64]) -> Result<Vec<C64>> {
        self.check_dims(dims)?;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (k, f) in self.factors.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(apply_factor(dims, k, f, v)?) {
                *o += x;
            }
        }
        Ok(out)
    }
}

impl Operator for CMatrix {
    fn apply(&self, _dims: &[usize], v: &[C64]) -> Result<Vec<C64>> {
        self.mul_vec(v)
    }
}

/// `<psi|F|psi>`.
pub fn expectation<O: Operator + ?Sized>(state: &MultipartiteState, op: &O) -> Result<C64> {
    let fpsi = op.apply(state.dims(), state.amplitudes())?;
    Ok(inner(state.amplitudes(), &fpsi))
}

/// Horizontal tangent vector `-i (F - <F>) |psi>` generated by `F` at `psi`.
pub fn tangent_vector<O: Operator + ?Sized>(state: &MultipartiteState, op: &O) -> Result<Vec<C64>> {
    let psi = state.amplitudes();
    let fpsi = op.apply(state.dims(), psi)?;
    let mean = inner(psi, &fpsi);
    let mi = C64::new(0.0, -1.0);
    Ok(fpsi
        .iter()
        .zip(psi)
        .map(|(f, p)| mi * (f - mean * p))
        .collect())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows(), a.cols()));
    }
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Shape(
            "commutator of differently shaped matrices".into(),
        ));
    }
    a.matmul(b)?.try_sub(&b.matmul(a)?)
}
