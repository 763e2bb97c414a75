//! Orbit geometry of a multipartite state under local unitaries.
//!
//! Every dimension reported here is an integer rank obtained through the
//! shared [`RankTol`] policy, with the scale floored at [`RANK_FLOOR`]: the
//! maps involved have entries of order one, and several of them vanish
//! identically on symmetric states (e.g. commutators with `I/d`), where a
//! purely `sigma_max`-relative threshold would promote rounding noise to rank.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localalg::{commutator, tangent_vector, AlgebraBasis, LocalHamiltonian, Operator};
use crate::numkit::kernel_with_floor;
use crate::numkit::{
    inner, norm, numerical_rank_with_floor, realify, svd, CMatrix, RankResult, RankTol,
};
use crate::spectramap::{group_multiplicities, local_spectra, DEFAULT_GROUP_TOL};
use crate::states::{momentum_map, reduced_cross, MultipartiteState};

/// Lower bound on the scale against which rank thresholds are measured.
pub const RANK_FLOOR: f64 = 1.0;

/// Singular values within this factor of the threshold make a rank
/// decision "unstable".
pub const STABILITY_MARGIN: f64 = 100.0;

/// Imaginary residue of `i<[F, G]>` above which the inputs are rejected.
pub const FORM_IMAG_TOL: f64 = 1e-10;

/// Maximal `|<psi|v>|` accepted for a horizontal vector.
pub const HORIZONTAL_TOL: f64 = 1e-10;

/// Maximal entrywise gap between the two orbit Gram routes.
pub const GRAM_ROUTE_TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rank: RankTol,
    /// Relative eigenvalue grouping tolerance.
    pub group: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: RankTol::Auto,
            group: DEFAULT_GROUP_TOL,
        }
    }
}

fn rank_of(m: &CMatrix, tol: &Tolerances) -> Result<RankResult> {
    numerical_rank_with_floor(m, tol.rank, RANK_FLOOR)
}

/// Real matrix whose columns are `cols`.
fn real_matrix(rows: usize, cols: &[Vec<f64>]) -> CMatrix {
    CMatrix::from_fn(rows, cols.len(), |i, j| C64::new(cols[j][i], 0.0))
}

fn kernel_columns(m: &CMatrix, tol: &Tolerances) -> Result<(RankResult, Vec<Vec<f64>>)> {
    let k = kernel_with_floor(m, tol.rank, RANK_FLOOR)?;
    let cols = (0..k.dim())
        .map(|j| k.basis.column(j).iter().map(|z| z.re).collect())
        .collect();
    Ok((k.rank, cols))
}

/// `i <psi|[F, G]|psi>` before the realness check, with the scale
/// `max(1, |F psi| |G psi|)` the residue is measured against.
fn fs_form_raw<F, G>(state: &MultipartiteState, f: &F, g: &G) -> Result<(C64, f64)>
where
    F: Operator + ?Sized,
    G: Operator + ?Sized,
{
    let dims = state.dims();
    let psi = state.amplitudes();
    let fpsi = f.apply(dims, psi)?;
    let gpsi = g.apply(dims, psi)?;
    let fg = inner(psi, &f.apply(dims, &gpsi)?);
    let gf = inner(psi, &g.apply(dims, &fpsi)?);
    let scale = 1f64.max(norm(&fpsi) * norm(&gpsi));
    Ok((C64::new(0.0, 1.0) * (fg - gf), scale))
}

/// `omega_psi(V_F, V_G) = i <psi|[F, G]|psi>`.
pub fn fs_form_operators<F, G>(state: &MultipartiteState, f: &F, g: &G) -> Result<f64>
where
    F: Operator + ?Sized,
    G: Operator + ?Sized,
{
    let (value, scale) = fs_form_raw(state, f, g)?;
    if value.im.abs() > FORM_IMAG_TOL * scale {
        return Err(Error::ImaginaryResidue(value.im));
    }
    Ok(value.re)
}

/// Fubini-Study form on horizontal representatives: `2 Im<v|u>`.
///
/// With this ordering `fs_form_vectors(V_F, V_G) = fs_form_operators(F, G)`
/// and `fs_form_vectors(i u, u) = 2 |u|^2`.
pub fn fs_form_vectors(state: &MultipartiteState, u: &[C64], v: &[C64]) -> Result<f64> {
    let psi = state.amplitudes();
    if u.len() != psi.len() || v.len() != psi.len() {
        return Err(Error::Shape(
            "tangent vector length does not match state".into(),
        ));
    }
    for w in [u, v] {
        let overlap = inner(psi, w).norm();
        if overlap > HORIZONTAL_TOL * 1f64.max(norm(w)) {
            return Err(Error::NotHorizontal(overlap));
        }
    }
    Ok(2.0 * inner(v, u).im)
}

/// Orbit Gram matrix over the local algebra basis.
#[derive(Clone, Debug)]
pub struct SymplecticGram {
    pub state: MultipartiteState,
    /// `G_ab = i<psi|[T_a, T_b]|psi>`, row-major `N x N`.
    pub matrix: Vec<Vec<f64>>,
    /// The same entries from `i sum_k Tr(rho^k [T_a,k, T_b,k])`.
    pub kks: Vec<Vec<f64>>,
    pub rank: RankResult,
}

impl SymplecticGram {
    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// `max |G + G^T|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0f64;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.matrix[a][b] + self.matrix[b][a]).abs());
            }
        }
        worst
    }

    /// Largest entrywise difference between the two routes.
    pub fn route_gap(&self) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .zip(self.kks.iter().flatten())
            .fold(0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn orbit_gram(state: &MultipartiteState) -> Result<SymplecticGram> {
    orbit_gram_with(state, &Tolerances::default())
}

pub fn orbit_gram_with(state: &MultipartiteState, tol: &Tolerances) -> Result<SymplecticGram> {
    let basis = AlgebraBasis::new(state.dims())?;
    let n = basis.len();
    let dims = state.dims();
    let psi = state.amplitudes();
    let images: Vec<Vec<C64>> = (0..n)
        .map(|a| basis.element(a).apply(dims, psi))
        .collect::<Result<_>>()?;
    let mut matrix = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let g = -2.0 * inner(&images[a], &images[b]).im;
            matrix[a][b] = g;
            matrix[b][a] = -g;
        }
    }

    let rhos = momentum_map(state).rhos;
    let mut kks = vec![vec![0.0; n]; n];
    for (a, row) in kks.iter_mut().enumerate() {
        let (ka, ta) = basis.generator(a);
        for b in basis.factor_range(ka) {
            let (_, tb) = basis.generator(b);
            let c = commutator(ta, tb)?;
            let tr = rhos[ka].matmul(&c)?.trace();
            row[b] = (C64::new(0.0, 1.0) * tr).re;
        }
    }

    let rank = rank_of(&real_matrix(n, &transpose(&matrix)), tol)?;
    Ok(SymplecticGram {
        state: state.clone(),
        matrix,
        kks,
        rank,
    })
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    (0..m.first().map_or(0, Vec::len))
        .map(|j| (0..n).map(|i| m[i][j]).collect())
        .collect()
}

/// Tangent vectors `V_{T_a}` of all basis elements.
fn orbit_tangents(state: &MultipartiteState, basis: &AlgebraBasis) -> Result<Vec<Vec<C64>>> {
    (0..basis.len())
        .map(|a| tangent_vector(state, &basis.element(a)))
        .collect()
}

/// Stabilizer of the state in the local algebra.
#[derive(Clone, Debug)]
pub struct StateStabilizer {
    pub dim: usize,
    pub rank: RankResult,
    /// Orthonormal coefficient vectors (over the algebra basis) spanning the
    /// stabilizer.
    pub basis: Vec<Vec<f64>>,
}

pub fn stab_dim_state(state: &MultipartiteState) -> Result<usize> {
    Ok(state_stabilizer(state, &Tolerances::default())?.dim)
}

pub fn state_stabilizer(state: &MultipartiteState, tol: &Tolerances) -> Result<StateStabilizer> {
    let basis = AlgebraBasis::new(state.dims())?;
    let cols: Vec<Vec<f64>> = orbit_tangents(state, &basis)?
        .iter()
        .map(|v| realify(v))
        .collect();
    let (rank, kernel) = kernel_columns(&real_matrix(2 * state.dim(), &cols), tol)?;
    Ok(StateStabilizer {
        dim: kernel.len(),
        rank,
        basis: kernel,
    })
}

/// Stabilizer of `mu(psi)`: generators commuting with every reduced state.
#[derive(Clone, Debug)]
pub struct MuStabilizer {
    pub dim: usize,
    pub per_subsystem: Vec<usize>,
    /// Grouped eigenvalue multiplicities of each `rho^k`, nonincreasing
    /// eigenvalue order.
    pub multiplicities: Vec<Vec<usize>>,
    pub ranks: Vec<RankResult>,
    /// Orthonormal coefficient vectors over the full algebra basis.
    pub basis: Vec<Vec<f64>>,
}

pub fn stab_dim_mu(state: &MultipartiteState) -> Result<usize> {
    Ok(mu_stabilizer(state, &Tolerances::default())?.dim)
}

pub fn mu_stabilizer(state: &MultipartiteState, tol: &Tolerances) -> Result<MuStabilizer> {
    let basis = AlgebraBasis::new(state.dims())?;
    let rhos = momentum_map(state).rhos;
    let spectra = local_spectra(state);
    let mut out = MuStabilizer {
        dim: 0,
        per_subsystem: Vec::new(),
        multiplicities: Vec::new(),
        ranks: Vec::new(),
        basis: Vec::new(),
    };
    for (k, rho) in rhos.iter().enumerate() {
        let range = basis.factor_range(k);
        let cols: Vec<Vec<f64>> = range
            .clone()
            .map(|a| Ok(realify(commutator(rho, basis.generator(a).1)?.as_slice())))
            .collect::<Result<_>>()?;
        let d = state.dims()[k];
        let (rank, kernel) = kernel_columns(&real_matrix(2 * d * d, &cols), tol)?;
        let mult = group_multiplicities(&spectra[k], tol.group);
        let predicted = mult.iter().map(|m| m * m).sum::<usize>() - 1;
        if predicted != kernel.len() {
            return Err(Error::StabilizerMismatch {
                subsystem: k,
                kernel: kernel.len(),
                multiplicity: predicted,
            });
        }
        for local in kernel {
            let mut c = vec![0.0; basis.len()];
            c[range.clone()].copy_from_slice(&local);
            out.basis.push(c);
        }
        out.dim += predicted;
        out.per_subsystem.push(predicted);
        out.multiplicities.push(mult);
        out.ranks.push(rank);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitDims {
    pub dim_orbit: usize,
    pub dim_adjoint_orbit: usize,
    pub stab_state: usize,
    pub stab_mu: usize,
}

impl OrbitDims {
    pub fn from_stabilizers(algebra_dim: usize, stab_state: usize, stab_mu: usize) -> Self {
        Self {
            dim_orbit: algebra_dim - stab_state,
            dim_adjoint_orbit: algebra_dim - stab_mu,
            stab_state,
            stab_mu,
        }
    }

    /// `dim O_psi - dim O_mu(psi)`.
    pub fn difference(&self) -> usize {
        self.dim_orbit.saturating_sub(self.dim_adjoint_orbit)
    }
}

pub fn algebra_dim(dims: &[usize]) -> usize {
    dims.iter().map(|d| d * d - 1).sum()
}

pub fn orbit_dims(state: &MultipartiteState) -> Result<OrbitDims> {
    orbit_dims_with(state, &Tolerances::default())
}

pub fn orbit_dims_with(state: &MultipartiteState, tol: &Tolerances) -> Result<OrbitDims> {
    let s = state_stabilizer(state, tol)?;
    let m = mu_stabilizer(state, tol)?;
    Ok(OrbitDims::from_stabilizers(
        algebra_dim(state.dims()),
        s.dim,
        m.dim,
    ))
}

/// Local generators of the null directions at a state.
#[derive(Clone, Debug)]
pub struct NullBasis {
    pub generators: Vec<LocalHamiltonian>,
    /// Unit coefficient vectors of the generators over the algebra basis.
    pub coefficients: Vec<Vec<f64>>,
    /// Tangent vectors `V_F` of the generators.
    pub tangents: Vec<Vec<C64>>,
    pub rank: RankResult,
}

impl NullBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

pub fn null_basis(state: &MultipartiteState) -> Result<NullBasis> {
    null_basis_with(state, &Tolerances::default())
}

pub fn null_basis_with(state: &MultipartiteState, tol: &Tolerances) -> Result<NullBasis> {
    let basis = AlgebraBasis::new(state.dims())?;
    let stab = state_stabilizer(state, tol)?;
    let mu = mu_stabilizer(state, tol)?;
    let expected = mu.dim.saturating_sub(stab.dim);
    let tangents = orbit_tangents(state, &basis)?;

    // Remove the state stabilizer component from each candidate.
    let candidates: Vec<Vec<f64>> = mu
        .basis
        .iter()
        .map(|c| {
            let mut c = c.clone();
            for s in &stab.basis {
                let p: f64 = s.iter().zip(&c).map(|(x, y)| x * y).sum();
                for (ci, si) in c.iter_mut().zip(s) {
                    *ci -= p * si;
                }
            }
            c
        })
        .collect();
    let images: Vec<Vec<C64>> = candidates
        .iter()
        .map(|c| combine_vectors(&tangents, c))
        .collect();
    let real_images: Vec<Vec<f64>> = images.iter().map(|v| realify(v)).collect();

    let rank = if real_images.is_empty() {
        RankResult {
            rank: 0,
            singular_values: Vec::new(),
            tolerance_used: 0.0,
        }
    } else {
        rank_of(&real_matrix(2 * state.dim(), &real_images), tol)?
    };
    if rank.rank != expected {
        return Err(Error::NullBasisCount {
            found: rank.rank,
            expected,
        });
    }

    // Column-pivoted Gram-Schmidt on the tangent images; ties go to the
    // lowest candidate index.
    let mut residuals = real_images.clone();
    let mut used = vec![false; residuals.len()];
    let mut picked = Vec::with_capacity(expected);
    for _ in 0..expected {
        let mut best: Option<(usize, f64)> = None;
        for (j, r) in residuals.iter().enumerate() {
            if used[j] {
                continue;
            }
            let nr = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if best.is_none_or(|(_, b)| nr > b) {
                best = Some((j, nr));
            }
        }
        let (j, nr) = best.expect("rank never exceeds the candidate count");
        used[j] = true;
        picked.push(j);
        let q: Vec<f64> = residuals[j].iter().map(|x| x / nr).collect();
        for (r, _) in residuals.iter_mut().zip(&used).filter(|(_, u)| !**u) {
            let p: f64 = q.iter().zip(r.iter()).map(|(a, b)| a * b).sum();
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri -= p * qi;
            }
        }
    }

    let mut out = NullBasis {
        generators: Vec::with_capacity(expected),
        coefficients: Vec::with_capacity(expected),
        tangents: Vec::with_capacity(expected),
        rank,
    };
    for j in picked {
        let c = &candidates[j];
        let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c: Vec<f64> = c.iter().map(|x| x / n).collect();
        out.generators.push(basis.combination(&c)?);
        out.tangents.push(combine_vectors(&tangents, &c));
        out.coefficients.push(c);
    }
    Ok(out)
}

fn combine_vectors(vectors: &[Vec<C64>], coefficients: &[f64]) -> Vec<C64> {
    let len = vectors.first().map_or(0, Vec::len);
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (v, &c) in vectors.iter().zip(coefficients) {
        if c != 0.0 {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x * c;
            }
        }
    }
    out
}

/// Complex orthonormal basis of the orthogonal complement of `psi`.
fn horizontal_basis(state: &MultipartiteState) -> Vec<Vec<C64>> {
    let psi = state.amplitudes();
    let n = psi.len();
    let p = CMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) - psi[i] * psi[j].conj()
    });
    let s = svd(&p);
    (0..n - 1).map(|j| s.u.column(j)).collect()
}

/// Kernel of `d mu` on the horizontal space.
#[derive(Clone, Debug)]
pub struct MomentumKernel {
    /// Real-orthonormal horizontal vectors.
    pub vectors: Vec<Vec<C64>>,
    pub rank: RankResult,
}

pub fn ker_dmu_basis(state: &MultipartiteState) -> Result<Vec<Vec<C64>>> {
    Ok(momentum_kernel(state, &Tolerances::default())?.vectors)
}

/// `d mu_psi(h)_k = Tr_{not k}(|h><psi| + |psi><h|)`.
pub fn momentum_differential(state: &MultipartiteState, h: &[C64]) -> Result<Vec<CMatrix>> {
    let dims = state.dims();
    let psi = state.amplitudes();
    (0..dims.len())
        .map(|k| reduced_cross(dims, k, h, psi)?.try_add(&reduced_cross(dims, k, psi, h)?))
        .collect()
}

pub fn momentum_kernel(state: &MultipartiteState, tol: &Tolerances) -> Result<MomentumKernel> {
    let horizontal = horizontal_basis(state);
    let i = C64::new(0.0, 1.0);
    let real_basis: Vec<Vec<C64>> = horizontal
        .iter()
        .flat_map(|e| [e.clone(), e.iter().map(|z| i * z).collect()])
        .collect();
    if real_basis.is_empty() {
        return Ok(MomentumKernel {
            vectors: Vec::new(),
            rank: RankResult {
                rank: 0,
                singular_values: Vec::new(),
                tolerance_used: 0.0,
            },
        });
    }
    let cols: Vec<Vec<f64>> = real_basis
        .iter()
        .map(|h| {
            Ok(momentum_differential(state, h)?
                .iter()
                .flat_map(|m| realify(m.as_slice()))
                .collect())
        })
        .collect::<Result<_>>()?;
    let rows = cols[0].len();
    let (rank, kernel) = kernel_columns(&real_matrix(rows, &cols), tol)?;
    let vectors = kernel
        .iter()
        .map(|x| combine_vectors(&real_basis, x))
        .collect();
    Ok(MomentumKernel { vectors, rank })
}

/// Degeneracy of the Fubini-Study form on `W = ker d mu + T O_psi`.
#[derive(Clone, Debug)]
pub struct DirectDegeneracy {
    pub degeneracy: usize,
    pub span_dim: usize,
    pub form_rank: usize,
    pub span_rank: RankResult,
    pub form_rank_result: RankResult,
    pub kernel_rank: RankResult,
}

pub fn degeneracy_direct(state: &MultipartiteState) -> Result<usize> {
    Ok(direct_degeneracy(state, &Tolerances::default())?.degeneracy)
}

pub fn direct_degeneracy(state: &MultipartiteState, tol: &Tolerances) -> Result<DirectDegeneracy> {
    let kernel = momentum_kernel(state, tol)?;
    let basis = AlgebraBasis::new(state.dims())?;
    let mut spanning: Vec<Vec<f64>> = kernel.vectors.iter().map(|v| realify(v)).collect();
    spanning.extend(orbit_tangents(state, &basis)?.iter().map(|v| realify(v)));
    let rows = 2 * state.dim();
    let m = real_matrix(rows, &spanning);
    let span_rank = rank_of(&m, tol)?;
    let s = svd(&m);
    let w: Vec<Vec<C64>> = (0..span_rank.rank)
        .map(|j| {
            let col: Vec<f64> = s.u.column(j).iter().map(|z| z.re).collect();
            crate::numkit::complexify(&col)
        })
        .collect();

    let n = w.len();
    let (form_rank_result, form_rank) = if n == 0 {
        (
            RankResult {
                rank: 0,
                singular_values: Vec::new(),
                tolerance_used: 0.0,
            },
            0,
        )
    } else {
        let mut omega = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                let x = fs_form_vectors(state, &w[a], &w[b])?;
                omega[a][b] = x;
                omega[b][a] = -x;
            }
        }
        let r = rank_of(&real_matrix(n, &transpose(&omega)), tol)?;
        let rank = r.rank;
        (r, rank)
    };
    Ok(DirectDegeneracy {
        degeneracy: n - form_rank,
        span_dim: n,
        form_rank,
        span_rank,
        form_rank_result,
        kernel_rank: kernel.rank,
    })
}
