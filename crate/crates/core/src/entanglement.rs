//! The entanglement indicator `E(psi)` by three independent routes.
//!
//! * orbit dimensions: `dim O_psi - dim O_mu(psi)` from the two stabilizers;
//! * orbit Gram: `dim O_psi - rank(G)`;
//! * direct: degeneracy of the Fubini-Study form on `ker d mu + T O_psi`.
//!
//! Bipartite states additionally get the Schmidt closed form
//! `sum_i m_i^2 - 1`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numkit::{expm_i_herm, random, RankResult};
use crate::orbitgeom::{
    direct_degeneracy, mu_stabilizer, orbit_gram_with, state_stabilizer, OrbitDims, Tolerances,
    GRAM_ROUTE_TOL, STABILITY_MARGIN,
};
use crate::spectramap::group_multiplicities;
use crate::states::{apply_local_unitary, schmidt, MultipartiteState};

/// Schmidt weights at or below this are treated as zero.
pub const SCHMIDT_ZERO: f64 = 1e-10;

pub fn e_theorem(state: &MultipartiteState) -> Result<usize> {
    Ok(crate::orbitgeom::orbit_dims(state)?.difference())
}

pub fn e_gram(state: &MultipartiteState) -> Result<usize> {
    let tol = Tolerances::default();
    let dims = crate::orbitgeom::orbit_dims_with(state, &tol)?;
    let gram = orbit_gram_with(state, &tol)?;
    Ok(dims.dim_orbit.saturating_sub(gram.rank.rank))
}

/// `sum_i m_i^2 - 1` over the multiplicities of the nonzero weights.
pub fn e_bipartite(coefficients: &[f64], group_tol: f64) -> Result<usize> {
    Ok(schmidt_multiplicities(coefficients, group_tol)?
        .iter()
        .map(|m| m * m)
        .sum::<usize>()
        - 1)
}

/// Multiplicities of the nonzero weights, largest weight first.
pub fn schmidt_multiplicities(coefficients: &[f64], group_tol: f64) -> Result<Vec<usize>> {
    if coefficients
        .iter()
        .any(|&p| !p.is_finite() || p < -SCHMIDT_ZERO)
    {
        return Err(Error::InvalidParameter(
            "Schmidt weights must be nonnegative".into(),
        ));
    }
    let mut nonzero: Vec<f64> = coefficients
        .iter()
        .copied()
        .filter(|&p| p > SCHMIDT_ZERO)
        .collect();
    if nonzero.is_empty() {
        return Err(Error::InvalidState("no nonzero Schmidt weight".into()));
    }
    nonzero.sort_by(|a, b| b.total_cmp(a));
    Ok(group_multiplicities(&nonzero, group_tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub e_theorem: usize,
    pub e_gram: usize,
    pub e_direct: usize,
    pub e_bipartite: Option<usize>,
    pub schmidt_coefficients: Option<Vec<f64>>,
    pub schmidt_multiplicities: Option<Vec<usize>>,
    pub separable: bool,
    pub rank_stable: bool,
    pub orbit_dims: OrbitDims,
    pub gram_rank: usize,
    pub warnings: Vec<String>,
}

impl EntanglementReport {
    fn routes_agree(&self) -> bool {
        self.e_theorem == self.e_gram
            && self.e_theorem == self.e_direct
            && self.e_bipartite.is_none_or(|e| e == self.e_theorem)
    }

    fn describe(&self) -> String {
        format!(
            "e_theorem={} e_gram={} e_direct={} e_bipartite={:?} dims={:?} gram_rank={}",
            self.e_theorem,
            self.e_gram,
            self.e_direct,
            self.e_bipartite,
            self.orbit_dims,
            self.gram_rank
        )
    }
}

pub fn analyze(state: &MultipartiteState) -> Result<EntanglementReport> {
    analyze_with(state, &Tolerances::default())
}

/// Runs every route. Disagreeing routes are a hard error when all rank
/// decisions were stable and a warning otherwise.
pub fn analyze_with(state: &MultipartiteState, tol: &Tolerances) -> Result<EntanglementReport> {
    let stab = state_stabilizer(state, tol)?;
    let mu = mu_stabilizer(state, tol)?;
    let dims = OrbitDims::from_stabilizers(
        crate::orbitgeom::algebra_dim(state.dims()),
        stab.dim,
        mu.dim,
    );
    let gram = orbit_gram_with(state, tol)?;
    let direct = direct_degeneracy(state, tol)?;

    let mut warnings = Vec::new();
    let mut checks: Vec<(String, &RankResult)> = vec![
        ("state stabilizer".into(), &stab.rank),
        ("orbit Gram".into(), &gram.rank),
        ("ker d mu".into(), &direct.kernel_rank),
        ("stratum span".into(), &direct.span_rank),
        ("stratum form".into(), &direct.form_rank_result),
    ];
    for (k, r) in mu.ranks.iter().enumerate() {
        checks.push((format!("commutant of rho_{}", k + 1), r));
    }
    let mut rank_stable = true;
    for (name, r) in checks {
        if !r.is_stable(STABILITY_MARGIN) {
            rank_stable = false;
            warnings.push(format!(
                "rank-unstable: {name} has singular values within a factor {STABILITY_MARGIN} of the threshold {:e}",
                r.tolerance_used
            ));
        }
    }
    if gram.route_gap() > GRAM_ROUTE_TOL {
        warnings.push(format!(
            "orbit Gram routes differ by {:e}",
            gram.route_gap()
        ));
    }

    let (e_bipartite, schmidt_coefficients, schmidt_mults) = if state.num_subsystems() == 2 {
        let sd = schmidt(state)?;
        let mults = schmidt_multiplicities(&sd.coefficients, tol.group)?;
        let e = mults.iter().map(|m| m * m).sum::<usize>() - 1;
        (Some(e), Some(sd.coefficients), Some(mults))
    } else {
        (None, None, None)
    };

    let e_theorem = dims.difference();
    let report = EntanglementReport {
        e_theorem,
        e_gram: dims.dim_orbit.saturating_sub(gram.rank.rank),
        e_direct: direct.degeneracy,
        e_bipartite,
        schmidt_coefficients,
        schmidt_multiplicities: schmidt_mults,
        separable: e_theorem == 0,
        rank_stable,
        orbit_dims: dims,
        gram_rank: gram.rank.rank,
        warnings,
    };
    if !report.routes_agree() {
        if report.rank_stable {
            return Err(Error::RouteDisagreement(report.describe()));
        }
        let msg = format!(
            "routes disagree on a rank-unstable state: {}",
            report.describe()
        );
        log::warn!("{msg}");
        let mut report = report;
        report.warnings.push(msg);
        return Ok(report);
    }
    Ok(report)
}

/// Values of `E` at `count` states obtained from `state` by local unitaries
/// `exp(-i delta H_k)` with random Hermitian `H_k`. More than one distinct
/// value flags a point where the pointwise dimension is not locally
/// constant along the sampled directions.
pub fn lu_neighbourhood_values<R: Rng + ?Sized>(
    state: &MultipartiteState,
    tol: &Tolerances,
    delta: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut values = vec![analyze_with(state, tol)?.e_theorem];
    for _ in 0..count {
        let unitaries = state
            .dims()
            .iter()
            .map(|&d| expm_i_herm(&random::hermitian(d, rng), delta))
            .collect::<Result<Vec<_>>>()?;
        let moved = apply_local_unitary(state, &unitaries)?;
        let e = analyze_with(&moved, tol)?.e_theorem;
        if !values.contains(&e) {
            values.push(e);
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{haar_state, make_named, random_local_unitary, NamedState};
    use num_complex::Complex64 as C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn named(n: NamedState) -> MultipartiteState {
        make_named(&n).unwrap()
    }

    #[test]
    fn e_theorem_examples() {
        assert_eq!(
            e_theorem(&named(NamedState::Ghz { l: 2, d: 2 })).unwrap(),
            3
        );
        assert_eq!(
            e_theorem(&named(NamedState::Ghz { l: 3, d: 2 })).unwrap(),
            7
        );
        let zero = MultipartiteState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        assert_eq!(e_theorem(&zero).unwrap(), 0);
    }

    #[test]
    fn e_gram_examples() {
        assert_eq!(e_gram(&named(NamedState::Ghz { l: 2, d: 2 })).unwrap(), 3);
        assert_eq!(e_gram(&named(NamedState::W { l: 3 })).unwrap(), 2);
        assert_eq!(
            e_gram(&named(NamedState::Schmidt(vec![0.25; 4]))).unwrap(),
            15
        );
    }

    #[test]
    fn e_bipartite_examples() {
        assert_eq!(e_bipartite(&[1.0, 0.0], 1e-8).unwrap(), 0);
        assert_eq!(e_bipartite(&[0.5, 0.5], 1e-8).unwrap(), 3);
        assert_eq!(e_bipartite(&[0.5, 0.3, 0.2], 1e-8).unwrap(), 2);
        assert_eq!(e_bipartite(&[0.4, 0.4, 0.1, 0.1], 1e-8).unwrap(), 7);
        assert_eq!(e_bipartite(&[0.5, 0.5, 1e-12], 1e-8).unwrap(), 3);
        assert!(e_bipartite(&[0.0, 0.0], 1e-8).is_err());
        assert!(e_bipartite(&[1.5, -0.5], 1e-8).is_err());
    }

    #[test]
    fn analyze_examples() {
        let r = analyze(&named(NamedState::W { l: 3 })).unwrap();
        assert_eq!((r.e_theorem, r.e_gram, r.e_direct), (2, 2, 2));
        assert!(!r.separable && r.e_bipartite.is_none());

        let r = analyze(&named(NamedState::Ghz { l: 2, d: 2 })).unwrap();
        assert_eq!(
            (r.e_theorem, r.e_gram, r.e_direct, r.e_bipartite),
            (3, 3, 3, Some(3))
        );
        assert!(!r.separable);

        let zero = MultipartiteState::basis(vec![2; 4], &[0; 4]).unwrap();
        let r = analyze(&zero).unwrap();
        assert_eq!((r.e_theorem, r.e_gram, r.e_direct), (0, 0, 0));
        assert!(r.separable && r.rank_stable && r.warnings.is_empty());
    }

    #[test]
    fn maximally_entangled_bipartite() {
        for d in 2..=4 {
            let r = analyze(&named(NamedState::Ghz { l: 2, d })).unwrap();
            assert_eq!(r.e_theorem, d * d - 1);
            assert_eq!(r.e_bipartite, Some(d * d - 1));
        }
    }

    #[test]
    fn separable_iff_zero_on_constructed_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for dims in [vec![2, 2], vec![2, 3], vec![2, 2, 2]] {
            for _ in 0..5 {
                let factors: Vec<Vec<C64>> = dims
                    .iter()
                    .map(|&d| random::gaussian_vector(d, &mut rng))
                    .collect();
                let product = named(NamedState::Product(factors));
                let r = analyze(&product).unwrap();
                assert!(r.separable);
                assert_eq!(r.e_theorem, 0);
                let entangled = haar_state(&dims, &mut rng).unwrap();
                let r = analyze(&entangled).unwrap();
                assert!(!r.separable && r.e_theorem > 0);
            }
        }
    }

    #[test]
    fn routes_agree_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dims in [vec![2, 2], vec![2, 3], vec![2, 2, 2], vec![2, 2, 2, 2]] {
            for _ in 0..10 {
                let r = analyze(&haar_state(&dims, &mut rng).unwrap()).unwrap();
                assert!(r.rank_stable);
                assert_eq!(r.e_theorem, r.e_gram);
                assert_eq!(r.e_theorem, r.e_direct);
            }
        }
    }

    #[test]
    fn lu_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in [
            named(NamedState::W { l: 3 }),
            named(NamedState::Ghz { l: 3, d: 2 }),
        ] {
            let e = analyze(&s).unwrap().e_theorem;
            for _ in 0..20 {
                let u = random_local_unitary(s.dims(), &mut rng);
                assert_eq!(
                    analyze(&apply_local_unitary(&s, &u).unwrap())
                        .unwrap()
                        .e_theorem,
                    e
                );
            }
        }
    }

    #[test]
    fn neighbourhood_probe_is_constant_on_orbits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = named(NamedState::W { l: 3 });
        let vals = lu_neighbourhood_values(&s, &Tolerances::default(), 1e-3, 5, &mut rng).unwrap();
        assert_eq!(vals, vec![2]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn weights() -> impl Strategy<Value = Vec<f64>> {
            (2usize..5).prop_flat_map(|d| {
                (
                    prop::collection::vec(0usize..4, d),
                    prop::collection::vec(0.05f64..1.0, 4),
                )
                    .prop_map(|(picks, levels)| {
                        // Index 0 yields a zero weight, others reuse a small
                        // pool of levels so repetitions are common.
                        let mut w: Vec<f64> = picks
                            .iter()
                            .map(|&p| if p == 0 { 0.0 } else { levels[p] })
                            .collect();
                        if w.iter().all(|&x| x == 0.0) {
                            w[0] = 1.0;
                        }
                        let s: f64 = w.iter().sum();
                        w.iter_mut().for_each(|x| *x /= s);
                        w
                    })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]

            #[test]
            fn bipartite_closed_form_matches_orbit_route(w in weights(), seed in any::<u64>()) {
                let s = make_named(&NamedState::Schmidt(w.clone())).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = random_local_unitary(s.dims(), &mut rng);
                let s = apply_local_unitary(&s, &u).unwrap();
                let r = analyze(&s).unwrap();
                prop_assert_eq!(r.e_bipartite, Some(r.e_theorem));
                prop_assert_eq!(e_bipartite(&w, 1e-8).unwrap(), r.e_theorem);
            }
        }
    }
}
