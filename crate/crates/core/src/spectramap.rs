//! Ordered local spectra and Kirwan polytope point clouds.
//!
//! Spectra are reported nonincreasing. Consumers comparing against
//! nondecreasing conventions must re-sort.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numkit::herm_eig;
use crate::states::{haar_state, momentum_map, MultipartiteState};

/// Relative gap below which neighbouring eigenvalues are considered equal.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

/// Multiplicities of a nonincreasing sequence under single-link chaining:
/// neighbours merge when their gap is at most `rel_tol * max|value|`.
pub fn group_multiplicities(sorted_desc: &[f64], rel_tol: f64) -> Vec<usize> {
    let scale = sorted_desc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut groups: Vec<usize> = Vec::new();
    for (i, &x) in sorted_desc.iter().enumerate() {
        match groups.last_mut() {
            Some(n) if sorted_desc[i - 1] - x <= rel_tol * scale => *n += 1,
            _ => groups.push(1),
        }
    }
    groups
}

/// Full nonincreasing spectrum of every reduced density matrix.
pub fn local_spectra(state: &MultipartiteState) -> Vec<Vec<f64>> {
    momentum_map(state)
        .rhos
        .iter()
        .map(|rho| {
            let mut ev = herm_eig(rho)
                .expect("reduced density matrices are Hermitian")
                .values;
            ev.reverse();
            ev
        })
        .collect()
}

/// Image of a state under the ordered-spectra map.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectraPoint {
    /// Per subsystem: the first `d_k - 1` eigenvalues, nonincreasing.
    pub spectra: Vec<Vec<f64>>,
    /// Per subsystem: eigenvalue multiplicities (summing to `d_k`).
    pub multiplicities: Vec<Vec<usize>>,
    pub group_tol: f64,
}

impl SpectraPoint {
    /// Flattened coordinates in `R^{sum (d_k - 1)}`.
    pub fn coordinates(&self) -> Vec<f64> {
        self.spectra.concat()
    }
}

pub fn psi_map(state: &MultipartiteState) -> SpectraPoint {
    psi_map_with_tol(state, DEFAULT_GROUP_TOL)
}

pub fn psi_map_with_tol(state: &MultipartiteState, group_tol: f64) -> SpectraPoint {
    let full = local_spectra(state);
    let multiplicities = full
        .iter()
        .map(|ev| group_multiplicities(ev, group_tol))
        .collect();
    let spectra = full
        .into_iter()
        .map(|mut ev| {
            ev.pop();
            ev
        })
        .collect();
    SpectraPoint {
        spectra,
        multiplicities,
        group_tol,
    }
}

/// `n` Haar-random states on `l` qudits of dimension `d`, mapped through
/// [`psi_map`]. Sample `i` draws from ChaCha stream `i` of `seed`, so any
/// chunk of the cloud can be regenerated independently.
pub fn sample_polytope(l: usize, d: usize, n: usize, seed: u64) -> Result<Vec<SpectraPoint>> {
    let dims = vec![d; l];
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            Ok(psi_map(&haar_state(&dims, &mut rng)?))
        })
        .collect()
}

/// Point-cloud CSV: header `sample,k,lambda_1..lambda_{d-1}`, one row per
/// (sample, subsystem), both 1-based. Assumes equal local dimensions.
pub fn write_csv<W: Write>(points: &[SpectraPoint], mut out: W) -> io::Result<()> {
    let width = points
        .first()
        .and_then(|p| p.spectra.first())
        .map_or(0, Vec::len);
    write!(out, "sample,k")?;
    for i in 1..=width {
        write!(out, ",lambda_{i}")?;
    }
    writeln!(out)?;
    for (s, p) in points.iter().enumerate() {
        for (k, spec) in p.spectra.iter().enumerate() {
            write!(out, "{},{}", s + 1, k + 1)?;
            for x in spec {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
