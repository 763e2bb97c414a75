//! Schrodinger flows viewed as Hamiltonian flows on projective space, and
//! their ambiguity along null directions.

use std::io::{self, Write};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::localalg::{embed_full, expectation, AlgebraBasis, LocalHamiltonian, Operator};
use crate::numkit::{expm_i_herm, herm_eig, inner, norm, CMatrix, HermEig};
use crate::orbitgeom::{null_basis_with, NullBasis, Tolerances};
use crate::spectramap::local_spectra;
use crate::states::MultipartiteState;

/// Default bound on `|dH(v)|` for unit null vectors `v`.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

/// Minimal overlap with the previous generator for the continued choice to
/// be kept; below it the first generator of the new basis is used.
const CONTINUATION_MIN: f64 = 0.5;

/// `H(psi) = <psi|H|psi>`.
pub fn classical_hamiltonian<O: Operator + ?Sized>(
    state: &MultipartiteState,
    h: &O,
) -> Result<f64> {
    Ok(expectation(state, h)?.re)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: MultipartiteState,
    /// `| |U psi| - 1 |` of the propagated vector before renormalization.
    pub norm_dev: f64,
    pub energy: f64,
    /// Full nonincreasing spectrum of every reduced state.
    pub spectra: Vec<Vec<f64>>,
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn states(&self) -> Vec<&MultipartiteState> {
        self.samples.iter().map(|s| &s.state).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Fills `fidelity` with `|<self_j|reference_j>|`.
    pub fn attach_fidelity(&mut self, reference: &Trajectory) -> Result<()> {
        if reference.len() != self.len() {
            return Err(Error::Shape("trajectories of different length".into()));
        }
        for (s, r) in self.samples.iter_mut().zip(&reference.samples) {
            s.fidelity = Some(s.state.fidelity(&r.state)?);
        }
        Ok(())
    }

    /// CSV with header `t,norm_dev,energy,fidelity,spec_k_i...` (1-based
    /// subsystem `k` and eigenvalue index `i`).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t,norm_dev,energy,fidelity")?;
        if let Some(first) = self.samples.first() {
            for (k, spec) in first.spectra.iter().enumerate() {
                for i in 0..spec.len() {
                    write!(out, ",spec_{}_{}", k + 1, i + 1)?;
                }
            }
        }
        writeln!(out)?;
        for s in &self.samples {
            write!(out, "{},{},{},", s.t, s.norm_dev, s.energy)?;
            if let Some(f) = s.fidelity {
                write!(out, "{f}")?;
            }
            for x in s.spectra.iter().flatten() {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Largest difference between corresponding reduced spectra.
pub fn max_spectra_drift(a: &Trajectory, b: &Trajectory) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .flat_map(|(x, y)| {
            x.spectra
                .iter()
                .flatten()
                .zip(y.spectra.iter().flatten())
                .map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

fn check_steps(t: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "step count must be at least 1".into(),
        ));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "duration {t} must be positive"
        )));
    }
    Ok(())
}

fn check_square(h: &CMatrix, state: &MultipartiteState) -> Result<()> {
    if h.rows() != state.dim() || h.cols() != state.dim() {
        return Err(Error::Shape(format!(
            "{}x{} Hamiltonian for a state of dimension {}",
            h.rows(),
            h.cols(),
            state.dim()
        )));
    }
    Ok(())
}

fn sample(t: f64, raw: Vec<C64>, dims: &[usize], h: &CMatrix) -> Result<Sample> {
    let norm_dev = (norm(&raw) - 1.0).abs();
    let state = MultipartiteState::new(dims.to_vec(), raw)?;
    Ok(Sample {
        t,
        energy: classical_hamiltonian(&state, h)?,
        spectra: local_spectra(&state),
        state,
        norm_dev,
        fidelity: None,
    })
}

/// `psi_j = exp(-i H t_j) psi_0` at `t_j = j T / n`, `j = 0..=n`, from a
/// single eigendecomposition of `H`.
pub fn flow(state0: &MultipartiteState, h: &CMatrix, t: f64, n: usize) -> Result<Trajectory> {
    check_steps(t, n)?;
    check_square(h, state0)?;
    let eig = herm_eig(h)?;
    flow_from_eig(state0, h, &eig, t, n)
}

fn flow_from_eig(
    state0: &MultipartiteState,
    h: &CMatrix,
    eig: &HermEig,
    t: f64,
    n: usize,
) -> Result<Trajectory> {
    let dim = state0.dim();
    let v = &eig.vectors;
    let coords: Vec<C64> = (0..dim)
        .map(|k| {
            (0..dim)
                .map(|i| v[(i, k)].conj() * state0.amplitudes()[i])
                .sum()
        })
        .collect();
    let mut samples = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let tj = t * j as f64 / n as f64;
        let phased: Vec<C64> = coords
            .iter()
            .zip(&eig.values)
            .map(|(c, &l)| c * C64::from_polar(1.0, -l * tj))
            .collect();
        let raw = v.mul_vec(&phased)?;
        samples.push(sample(tj, raw, state0.dims(), h)?);
    }
    let mut out = Trajectory { samples };
    let reference = out.clone();
    out.attach_fidelity(&reference)?;
    Ok(out)
}

/// Result of [`null_perturbed_flow`].
#[derive(Clone, Debug)]
pub struct PerturbedFlow {
    pub reference: Trajectory,
    pub perturbed: Trajectory,
    /// Null basis size at the start of each step (length `n`).
    pub null_ranks: Vec<usize>,
    /// Steps at which the null basis size changed: `(step, before, after)`.
    pub rank_changes: Vec<(usize, usize, usize)>,
}

impl PerturbedFlow {
    pub fn spectra_drift(&self) -> f64 {
        max_spectra_drift(&self.reference, &self.perturbed)
    }

    pub fn final_fidelity(&self) -> Option<f64> {
        self.perturbed.last().and_then(|s| s.fidelity)
    }
}

/// Coefficients of the generator used for this step: the previous choice
/// projected onto the current null span when it survives, else the first
/// generator.
fn continue_generator(basis: &NullBasis, previous: Option<&[f64]>) -> Vec<f64> {
    let first = basis.coefficients[0].clone();
    let Some(prev) = previous else {
        return first;
    };
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for c in &basis.coefficients {
        let mut q = c.clone();
        for o in &ortho {
            let p: f64 = o.iter().zip(&q).map(|(a, b)| a * b).sum();
            q.iter_mut().zip(o).for_each(|(x, y)| *x -= p * y);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            ortho.push(q.into_iter().map(|x| x / n).collect());
        }
    }
    let mut proj = vec![0.0; prev.len()];
    for o in &ortho {
        let p: f64 = o.iter().zip(prev).map(|(a, b)| a * b).sum();
        proj.iter_mut().zip(o).for_each(|(x, y)| *x += p * y);
    }
    let n = proj.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n >= CONTINUATION_MIN {
        proj.into_iter().map(|x| x / n).collect()
    } else {
        first
    }
}

/// Reference flow under `H` and a flow perturbed by `eps` times a null
/// generator recomputed at every step.
///
/// While no perturbation has been applied (empty null basis or `eps = 0`)
/// the perturbed samples are copies of the reference samples, so the two
/// trajectories coincide bit for bit. After the first perturbed step the
/// state is propagated step by step, with `exp(-i (H + eps F) dt)` on
/// perturbed steps and `exp(-i H dt)` otherwise.
pub fn null_perturbed_flow(
    state0: &MultipartiteState,
    h: &LocalHamiltonian,
    eps: f64,
    t: f64,
    n: usize,
    tol: &Tolerances,
) -> Result<PerturbedFlow> {
    check_steps(t, n)?;
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "perturbation strength {eps} must be >= 0"
        )));
    }
    let h_full = embed_full(h);
    check_square(&h_full, state0)?;
    let eig = herm_eig(&h_full)?;
    let reference = flow_from_eig(state0, &h_full, &eig, t, n)?;
    let dt = t / n as f64;
    let step_h = crate::numkit::unitary_from_eig(&eig, dt);
    let basis = AlgebraBasis::new(state0.dims())?;

    let mut samples = vec![reference.samples[0].clone()];
    let mut diverged = false;
    let mut current = state0.clone();
    let mut previous: Option<Vec<f64>> = None;
    let mut null_ranks = Vec::with_capacity(n);
    let mut rank_changes = Vec::new();
    for j in 0..n {
        let nb = null_basis_with(&current, tol)?;
        if let Some(&last) = null_ranks.last() {
            if last != nb.len() {
                log::info!("null rank changed from {last} to {} at step {j}", nb.len());
                rank_changes.push((j, last, nb.len()));
            }
        }
        null_ranks.push(nb.len());

        let perturb = eps > 0.0 && !nb.is_empty();
        if !perturb && !diverged {
            let next = reference.samples[j + 1].clone();
            current = next.state.clone();
            samples.push(next);
            continue;
        }
        diverged = true;
        let u = if perturb {
            let c = continue_generator(&nb, previous.as_deref());
            let f = basis.combination(&c)?;
            previous = Some(c);
            let generator = h.combine(1.0, &f, eps)?;
            expm_i_herm(&embed_full(&generator), dt)?
        } else {
            previous = None;
            step_h.clone()
        };
        let raw = u.mul_vec(current.amplitudes())?;
        let s = sample(dt * (j + 1) as f64, raw, state0.dims(), &h_full)?;
        current = s.state.clone();
        samples.push(s);
    }
    let mut perturbed = Trajectory { samples };
    perturbed.attach_fidelity(&reference)?;
    Ok(PerturbedFlow {
        reference,
        perturbed,
        null_ranks,
        rank_changes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    pub max_violation: f64,
    pub null_directions: usize,
}

pub fn admissibility_check<O: Operator + ?Sized>(
    state: &MultipartiteState,
    h: &O,
) -> Result<Admissibility> {
    admissibility_check_with(state, h, &Tolerances::default(), ADMISSIBILITY_TOL)
}

/// `max |dH(v)| = max |2 Re<v|H psi>|` over unit null tangent vectors `v`.
pub fn admissibility_check_with<O: Operator + ?Sized>(
    state: &MultipartiteState,
    h: &O,
    tol: &Tolerances,
    adm_tol: f64,
) -> Result<Admissibility> {
    let nb = null_basis_with(state, tol)?;
    let hpsi = h.apply(state.dims(), state.amplitudes())?;
    let mut worst = 0f64;
    for v in &nb.tangents {
        let nv = norm(v);
        worst = worst.max((2.0 * inner(v, &hpsi).re / nv).abs());
    }
    Ok(Admissibility {
        admissible: worst <= adm_tol,
        max_violation: worst,
        null_directions: nb.len(),
    })
}
