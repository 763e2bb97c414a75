//! Multipartite pure states.
//!
//! Amplitudes are stored big-endian: subsystem 0 is the slowest-varying
//! tensor index, so `|q0 q1 ... q_{L-1}>` maps to
//! `sum_k q_k * prod_{j>k} d_j`. Every state is normalized and carries a
//! fixed global phase (first non-negligible amplitude real positive), which
//! makes each projective point canonical.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numkit::{self, inner, CMatrix};

/// Amplitudes with modulus at or below this are treated as zero when fixing
/// the global phase.
pub const PHASE_ZERO: f64 = 1e-10;

/// Tolerance for unitarity of local factors.
pub const UNITARY_TOL: f64 = 1e-10;

/// Normalized pure state on `C^{d_0} (x) ... (x) C^{d_{L-1}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipartiteState {
    dims: Vec<usize>,
    amplitudes: Vec<C64>,
}

impl MultipartiteState {
    /// Normalizes and phase-fixes `amplitudes`.
    pub fn new(dims: Vec<usize>, amplitudes: Vec<C64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidState("no subsystems".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidState(format!("factor dimension {d} < 2")));
        }
        let total: usize = dims.iter().product();
        if amplitudes.len() != total {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for total dimension {total}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let n = numkit::norm(&amplitudes);
        if n <= 1e-12 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let mut amplitudes: Vec<C64> = amplitudes.into_iter().map(|z| z / n).collect();
        if let Some(lead) = amplitudes.iter().find(|z| z.norm() > PHASE_ZERO) {
            let phase = (lead / lead.norm()).conj();
            for z in amplitudes.iter_mut() {
                *z *= phase;
            }
        }
        if let Some(lead) = amplitudes.iter_mut().find(|z| z.norm() > PHASE_ZERO) {
            lead.im = 0.0;
        }
        Ok(Self { dims, amplitudes })
    }

    /// Computational basis state `|digits>`.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} digits for {} subsystems",
                digits.len(),
                dims.len()
            )));
        }
        if let Some((&q, &d)) = digits.iter().zip(&dims).find(|(q, d)| q >= d) {
            return Err(Error::InvalidParameter(format!(
                "digit {q} >= local dimension {d}"
            )));
        }
        let total: usize = dims.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); total];
        amps[basis_index(&dims, digits)] = C64::new(1.0, 0.0);
        Self::new(dims, amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert space dimension.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn overlap(&self, other: &MultipartiteState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|<self|other>|`.
    pub fn fidelity(&self, other: &MultipartiteState) -> Result<f64> {
        Ok(self.overlap(other)?.norm())
    }
}

/// Flat index of a computational basis ket.
pub fn basis_index(dims: &[usize], digits: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&q, &d)| acc * d + q)
}

/// `(outer, d_k, inner)` split of the flat index around subsystem `k`.
fn split(dims: &[usize], k: usize) -> (usize, usize, usize) {
    let outer = dims[..k].iter().product();
    let inner = dims[k + 1..].iter().product();
    (outer, dims[k], inner)
}

fn check_subsystem(dims: &[usize], k: usize) -> Result<()> {
    if k >= dims.len() {
        return Err(Error::SubsystemIndex {
            index: k,
            count: dims.len(),
        });
    }
    Ok(())
}

/// `Tr_{not k} |u><w|` as a `d_k x d_k` matrix.
pub fn reduced_cross(dims: &[usize], k: usize, u: &[C64], w: &[C64]) -> Result<CMatrix> {
    check_subsystem(dims, k)?;
    let (outer, d, inn) = split(dims, k);
    if u.len() != outer * d * inn || w.len() != u.len() {
        return Err(Error::Shape("vector length does not match dims".into()));
    }
    let mut rho = CMatrix::zeros(d, d);
    for o in 0..outer {
        for a in 0..d {
            for b in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                let base_a = (o * d + a) * inn;
                let base_b = (o * d + b) * inn;
                for n in 0..inn {
                    acc += u[base_a + n] * w[base_b + n].conj();
                }
                rho[(a, b)] += acc;
            }
        }
    }
    Ok(rho)
}

/// Applies a `d_k x d_k` operator to tensor factor `k` of `v`.
pub fn apply_factor(dims: &[usize], k: usize, op: &CMatrix, v: &[C64]) -> Result<Vec<C64>> {
    check_subsystem(dims, k)?;
    let (outer, d, inn) = split(dims, k);
    if op.rows() != d || op.cols() != d {
        return Err(Error::Shape(format!(
            "{}x{} operator on factor of dimension {d}",
            op.rows(),
            op.cols()
        )));
    }
    if v.len() != outer * d * inn {
        return Err(Error::Shape("vector length does not match dims".into()));
    }
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for o in 0..outer {
        for a in 0..d {
            for b in 0..d {
                let m = op[(a, b)];
                if m == C64::new(0.0, 0.0) {
                    continue;
                }
                let dst = (o * d + a) * inn;
                let src = (o * d + b) * inn;
                for n in 0..inn {
                    out[dst + n] += m * v[src + n];
                }
            }
        }
    }
    Ok(out)
}

/// Reduced one-body density matrix of subsystem `k` (0-based).
pub fn partial_trace(state: &MultipartiteState, k: usize) -> Result<CMatrix> {
    reduced_cross(&state.dims, k, &state.amplitudes, &state.amplitudes)
}

/// The tuple of reduced one-body density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityTuple {
    pub rhos: Vec<CMatrix>,
}

impl DensityTuple {
    pub fn len(&self) -> usize {
        self.rhos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhos.is_empty()
    }

    /// Factor-wise conjugation `U_k rho_k U_k^H`.
    pub fn conjugate(&self, unitaries: &[CMatrix]) -> Result<DensityTuple> {
        if unitaries.len() != self.rhos.len() {
            return Err(Error::Shape("one unitary per subsystem required".into()));
        }
        let rhos = self
            .rhos
            .iter()
            .zip(unitaries)
            .map(|(r, u)| u.matmul(r)?.matmul(&u.adjoint()))
            .collect::<Result<_>>()?;
        Ok(DensityTuple { rhos })
    }
}

pub fn momentum_map(state: &MultipartiteState) -> DensityTuple {
    let rhos = (0..state.num_subsystems())
        .map(|k| partial_trace(state, k).expect("subsystem index in range"))
        .collect();
    DensityTuple { rhos }
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    /// Squared singular values, nonincreasing, summing to one.
    pub coefficients: Vec<f64>,
    /// `d_0 x r` with orthonormal columns, `r = min(d_0, d_1)`.
    pub left_basis: CMatrix,
    /// `d_1 x r` with orthonormal columns.
    pub right_basis: CMatrix,
}

impl SchmidtDecomposition {
    /// `sum_i sqrt(p_i) |l_i> (x) |r_i>`.
    pub fn reconstruct(&self) -> Vec<C64> {
        let (d0, d1) = (self.left_basis.rows(), self.right_basis.rows());
        let mut out = vec![C64::new(0.0, 0.0); d0 * d1];
        for (i, p) in self.coefficients.iter().enumerate() {
            let s = p.sqrt();
            for a in 0..d0 {
                for b in 0..d1 {
                    out[a * d1 + b] += self.left_basis[(a, i)] * self.right_basis[(b, i)] * s;
                }
            }
        }
        out
    }
}

pub fn schmidt(state: &MultipartiteState) -> Result<SchmidtDecomposition> {
    if state.num_subsystems() != 2 {
        return Err(Error::InvalidParameter(format!(
            "Schmidt decomposition needs 2 subsystems, got {}",
            state.num_subsystems()
        )));
    }
    let (d0, d1) = (state.dims[0], state.dims[1]);
    let a = CMatrix::new(d0, d1, state.amplitudes.clone())?;
    let svd = numkit::svd(&a);
    let coefficients = svd.s.iter().map(|s| s * s).collect();
    // A = U S V^H, so the right Schmidt vectors are the conjugated columns of V.
    let right_basis = CMatrix::from_fn(d1, svd.v.cols(), |i, j| svd.v[(i, j)].conj());
    Ok(SchmidtDecomposition {
        coefficients,
        left_basis: svd.u,
        right_basis,
    })
}

/// Standard test states.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedState {
    /// `(|0...0> + |1...1> + ... + |d-1...d-1>) / sqrt(d)` on `l` qudits.
    Ghz { l: usize, d: usize },
    /// Uniform superposition of single excitations on `l` qubits.
    W { l: usize },
    /// Uniform superposition of weight-`k` strings on `l` qubits.
    Dicke { l: usize, k: usize },
    /// Tensor product of the given factor vectors.
    Product(Vec<Vec<C64>>),
    /// `sum_i sqrt(p_i) |ii>` in `C^d (x) C^d`, `d = p.len()`.
    Schmidt(Vec<f64>),
}

pub fn make_named(named: &NamedState) -> Result<MultipartiteState> {
    match named {
        NamedState::Ghz { l, d } => {
            let (l, d) = (*l, *d);
            if l < 1 || d < 2 {
                return Err(Error::InvalidParameter(format!("ghz({l},{d})")));
            }
            let dims = vec![d; l];
            let mut amps = vec![C64::new(0.0, 0.0); d.pow(l as u32)];
            for j in 0..d {
                amps[basis_index(&dims, &vec![j; l])] = C64::new(1.0, 0.0);
            }
            MultipartiteState::new(dims, amps)
        }
        NamedState::W { l } => make_named(&NamedState::Dicke { l: *l, k: 1 })
            .map_err(|_| Error::InvalidParameter(format!("w({l})"))),
        NamedState::Dicke { l, k } => {
            let (l, k) = (*l, *k);
            if l < 1 || k > l || l >= usize::BITS as usize {
                return Err(Error::InvalidParameter(format!("dicke({l},{k})")));
            }
            let amps = (0..1usize << l)
                .map(|i| {
                    if i.count_ones() as usize == k {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            MultipartiteState::new(vec![2; l], amps)
        }
        NamedState::Product(factors) => {
            if factors.is_empty() {
                return Err(Error::InvalidParameter("empty product".into()));
            }
            let dims: Vec<usize> = factors.iter().map(Vec::len).collect();
            let mut amps = vec![C64::new(1.0, 0.0)];
            for f in factors {
                amps = amps
                    .iter()
                    .flat_map(|a| f.iter().map(move |b| a * b))
                    .collect();
            }
            MultipartiteState::new(dims, amps)
        }
        NamedState::Schmidt(weights) => {
            let d = weights.len();
            if d < 2 {
                return Err(Error::InvalidParameter(
                    "schmidt_state needs >= 2 weights".into(),
                ));
            }
            if weights.iter().any(|&p| p.is_nan() || p < 0.0) {
                return Err(Error::InvalidParameter("negative Schmidt weight".into()));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "Schmidt weights sum to {total}, expected 1"
                )));
            }
            let mut amps = vec![C64::new(0.0, 0.0); d * d];
            for (i, p) in weights.iter().enumerate() {
                amps[i * d + i] = C64::new(p.sqrt(), 0.0);
            }
            MultipartiteState::new(vec![d, d], amps)
        }
    }
}

/// `|<a|b>| >= 1 - tol`.
pub fn projective_equal(a: &MultipartiteState, b: &MultipartiteState, tol: f64) -> Result<bool> {
    Ok(a.fidelity(b)? >= 1.0 - tol)
}

/// `(U_0 (x) ... (x) U_{L-1}) |psi>`, normalized and phase-fixed.
pub fn apply_local_unitary(
    state: &MultipartiteState,
    unitaries: &[CMatrix],
) -> Result<MultipartiteState> {
    if unitaries.len() != state.num_subsystems() {
        return Err(Error::Shape(format!(
            "{} unitaries for {} subsystems",
            unitaries.len(),
            state.num_subsystems()
        )));
    }
    let mut v = state.amplitudes.clone();
    for (k, u) in unitaries.iter().enumerate() {
        let defect = u.unitarity_defect()?;
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        v = apply_factor(&state.dims, k, u, &v)?;
    }
    MultipartiteState::new(state.dims.clone(), v)
}

/// Haar-random pure state: normalized complex Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<MultipartiteState> {
    let total = dims.iter().product();
    MultipartiteState::new(dims.to_vec(), numkit::random::gaussian_vector(total, rng))
}

/// One Haar unitary per subsystem.
pub fn random_local_unitary<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Vec<CMatrix> {
    dims.iter()
        .map(|&d| numkit::random::haar_unitary(d, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> MultipartiteState {
        make_named(&NamedState::Ghz { l: 2, d: 2 }).unwrap()
    }

    fn w3() -> MultipartiteState {
        make_named(&NamedState::W { l: 3 }).unwrap()
    }

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let err = (a - b).max_abs();
        assert!(err <= tol, "max deviation {err:e}\n{a:?}\n{b:?}");
    }

    fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap()
    }

    #[test]
    fn phase_convention_is_applied() {
        let s =
            MultipartiteState::new(vec![2], vec![C64::new(0.0, 2.0), C64::new(1.0, 0.0)]).unwrap();
        let a = s.amplitudes();
        assert!((numkit::norm(a) - 1.0).abs() < 1e-15);
        assert!(a[0].re > 0.0 && a[0].im == 0.0);
        assert!((a[1] - C64::new(0.0, -1.0 / 5f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(MultipartiteState::new(vec![1, 2], vec![c(1.0); 2]).is_err());
        assert!(MultipartiteState::new(vec![2, 2], vec![c(1.0); 3]).is_err());
        assert!(MultipartiteState::new(vec![2], vec![c(0.0); 2]).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let s = MultipartiteState::basis(vec![2, 2], &[0, 0]).unwrap();
        assert_close(
            &partial_trace(&s, 0).unwrap(),
            &CMatrix::diag(&[c(1.0), c(0.0)]),
            0.0,
        );
        assert!(matches!(
            partial_trace(&s, 2),
            Err(Error::SubsystemIndex { index: 2, count: 2 })
        ));
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let half = CMatrix::diag(&[c(0.5), c(0.5)]);
        assert_close(&partial_trace(&bell(), 0).unwrap(), &half, 1e-15);
        assert_close(&partial_trace(&bell(), 1).unwrap(), &half, 1e-15);
    }

    #[test]
    fn partial_trace_of_w_matches_contraction() {
        // Direct contraction: each qubit is |1> in exactly one of three
        // equally weighted branches and never coherent with |0>.
        let expected = CMatrix::diag(&[c(2.0 / 3.0), c(1.0 / 3.0)]);
        for k in 0..3 {
            assert_close(&partial_trace(&w3(), k).unwrap(), &expected, 1e-15);
        }
    }

    #[test]
    fn momentum_map_examples() {
        let zero = MultipartiteState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        let mu = momentum_map(&zero);
        assert_eq!(mu.len(), 3);
        for r in &mu.rhos {
            assert_close(r, &CMatrix::diag(&[c(1.0), c(0.0)]), 0.0);
        }
        let ghz = make_named(&NamedState::Ghz { l: 3, d: 2 }).unwrap();
        for r in &momentum_map(&ghz).rhos {
            assert_close(r, &CMatrix::diag(&[c(0.5), c(0.5)]), 1e-15);
        }
    }

    #[test]
    fn schmidt_examples() {
        let s = MultipartiteState::basis(vec![2, 2], &[0, 0]).unwrap();
        assert_eq!(schmidt(&s).unwrap().coefficients, vec![1.0, 0.0]);
        let b = schmidt(&bell()).unwrap();
        assert!((b.coefficients[0] - 0.5).abs() < 1e-15 && (b.coefficients[1] - 0.5).abs() < 1e-15);
        let st = MultipartiteState::new(
            vec![2, 2],
            vec![c(0.8f64.sqrt()), c(0.0), c(0.0), c(0.2f64.sqrt())],
        )
        .unwrap();
        let sd = schmidt(&st).unwrap();
        assert!((sd.coefficients[0] - 0.8).abs() < 1e-15);
        assert!((sd.coefficients[1] - 0.2).abs() < 1e-15);
        assert!(schmidt(&w3()).is_err());
    }

    #[test]
    fn schmidt_reconstructs_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for dims in [[2, 2], [2, 3], [3, 2], [4, 4]] {
            let s = haar_state(&dims, &mut rng).unwrap();
            let sd = schmidt(&s).unwrap();
            let total: f64 = sd.coefficients.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(sd.coefficients.windows(2).all(|w| w[0] >= w[1]));
            let back = MultipartiteState::new(dims.to_vec(), sd.reconstruct()).unwrap();
            assert!(projective_equal(&s, &back, 1e-10).unwrap());
        }
    }

    #[test]
    fn named_constructors() {
        let b = bell();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, e) in b.amplitudes().iter().zip([h, 0.0, 0.0, h]) {
            assert!((a - c(e)).norm() < 1e-15);
        }
        let w = w3();
        let t = 1.0 / 3f64.sqrt();
        for (i, a) in w.amplitudes().iter().enumerate() {
            let expected = if [1, 2, 4].contains(&i) { t } else { 0.0 };
            assert!((a.re - expected).abs() < 1e-15 && a.im == 0.0);
        }
        let s = make_named(&NamedState::Schmidt(vec![0.5, 0.5, 0.0])).unwrap();
        assert_eq!(s.dims(), &[3, 3]);
        for (i, a) in s.amplitudes().iter().enumerate() {
            let expected = if i == 0 || i == 4 { h } else { 0.0 };
            assert!((a.re - expected).abs() < 1e-15);
        }
        assert!(make_named(&NamedState::Dicke { l: 2, k: 3 }).is_err());
        assert!(make_named(&NamedState::Schmidt(vec![0.5, 0.6])).is_err());
        assert!(make_named(&NamedState::Schmidt(vec![-0.5, 1.5])).is_err());
        let d = make_named(&NamedState::Dicke { l: 4, k: 2 }).unwrap();
        assert_eq!(d.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 6);
    }

    #[test]
    fn product_amplitudes_are_outer_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let f: Vec<Vec<C64>> = [2, 3, 2]
            .iter()
            .map(|&d| numkit::random::gaussian_vector(d, &mut rng))
            .collect();
        let s = make_named(&NamedState::Product(f.clone())).unwrap();
        let mut expected = Vec::new();
        for a in &f[0] {
            for b in &f[1] {
                for cc in &f[2] {
                    expected.push(a * b * cc);
                }
            }
        }
        let e = MultipartiteState::new(vec![2, 3, 2], expected).unwrap();
        let err = s
            .amplitudes()
            .iter()
            .zip(e.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn projective_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let s = haar_state(&[2, 3], &mut rng).unwrap();
        let rot: Vec<C64> = s
            .amplitudes()
            .iter()
            .map(|z| z * C64::from_polar(1.0, 0.7))
            .collect();
        let r = MultipartiteState::new(vec![2, 3], rot).unwrap();
        assert!(projective_equal(&s, &r, 1e-12).unwrap());
        for (x, y) in s.amplitudes().iter().zip(r.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }

        let a = MultipartiteState::basis(vec![2, 2], &[0, 0]).unwrap();
        let b = MultipartiteState::basis(vec![2, 2], &[1, 1]).unwrap();
        assert!(!projective_equal(&a, &b, 1e-10).unwrap());

        let mut amps = bell().amplitudes().to_vec();
        amps[1] += C64::new(1e-14, -1e-14);
        let p = MultipartiteState::new(vec![2, 2], amps).unwrap();
        assert!(projective_equal(&bell(), &p, 1e-10).unwrap());
        assert!(projective_equal(&bell(), &w3(), 1e-10).is_err());
    }

    #[test]
    fn local_unitary_examples() {
        let id = vec![CMatrix::identity(2); 2];
        let b = bell();
        assert!(projective_equal(&apply_local_unitary(&b, &id).unwrap(), &b, 1e-14).unwrap());
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let bx = apply_local_unitary(&b, &[x.clone(), x]).unwrap();
        assert!(projective_equal(&bx, &b, 1e-14).unwrap());

        let zero = MultipartiteState::basis(vec![2, 2], &[0, 0]).unwrap();
        let out = apply_local_unitary(&zero, &[hadamard(), CMatrix::identity(2)]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [c(h), c(0.0), c(h), c(0.0)];
        for (a, e) in out.amplitudes().iter().zip(expected) {
            assert!((a - e).norm() < 1e-15);
        }

        let bad = CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            apply_local_unitary(&zero, &[bad, CMatrix::identity(2)]),
            Err(Error::NotUnitary(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
            prop::collection::vec(2usize..4, 1..4)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(40))]

            #[test]
            fn reduced_states_are_density_matrices(dims in dims_strategy(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = haar_state(&dims, &mut rng).unwrap();
                for k in 0..dims.len() {
                    let rho = partial_trace(&s, k).unwrap();
                    prop_assert!((rho.trace() - c(1.0)).norm() <= 1e-12);
                    prop_assert!(rho.hermiticity_defect().unwrap() <= 1e-12);
                    let eig = numkit::herm_eig(&rho).unwrap();
                    prop_assert!(eig.values[0] >= -1e-12);
                }
            }

            #[test]
            fn schmidt_matches_reduced_spectra(d0 in 2usize..5, d1 in 2usize..5, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = haar_state(&[d0, d1], &mut rng).unwrap();
                let p = schmidt(&s).unwrap().coefficients;
                for k in 0..2 {
                    let mut ev = numkit::herm_eig(&partial_trace(&s, k).unwrap()).unwrap().values;
                    ev.reverse();
                    for (i, &pi) in p.iter().enumerate() {
                        prop_assert!((ev[i] - pi).abs() <= 1e-10);
                    }
                    for &rest in &ev[p.len()..] {
                        prop_assert!(rest.abs() <= 1e-10);
                    }
                }
            }

            #[test]
            fn momentum_map_is_equivariant(dims in dims_strategy(), seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = haar_state(&dims, &mut rng).unwrap();
                let us = random_local_unitary(&dims, &mut rng);
                let lhs = momentum_map(&apply_local_unitary(&s, &us).unwrap());
                let rhs = momentum_map(&s).conjugate(&us).unwrap();
                for (a, b) in lhs.rhos.iter().zip(&rhs.rhos) {
                    prop_assert!((a - b).max_abs() <= 1e-10);
                }
            }
        }
    }
}
