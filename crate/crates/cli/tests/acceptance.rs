//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one `criterion N: PASS|FAIL` line in plain
//! `cargo test` output. The process fails if any criterion fails, except
//! those listed in `UNATTAINABLE`, whose diagnosis is checked instead.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sympent::entanglement::{analyze, e_bipartite, EntanglementReport};
use sympent::flows::{admissibility_check, flow, null_perturbed_flow, Admissibility};
use sympent::localalg::{embed_full, su_basis};
use sympent::numkit::random;
use sympent::orbitgeom::{orbit_dims, orbit_gram};
use sympent::spectramap::DEFAULT_GROUP_TOL;
use sympent::states::{
    apply_local_unitary, haar_state, make_named, random_local_unitary, MultipartiteState,
    NamedState,
};
use sympent::{CMatrix, LocalHamiltonian, Tolerances};
use sympent_cli::commands::{cmd_polytope, cmd_verify};
use sympent_cli::config::{Command, RunConfig};

const SEED: u64 = 20240611;

struct Verdict {
    pass: bool,
    detail: String,
}

/// Criteria that cannot hold as stated: number, reason, and a check that the
/// reason is what actually happens.
type Diagnosis = fn() -> Result<String, String>;
const UNATTAINABLE: &[(usize, &str, Diagnosis)] = &[(
    7,
    "<GHZ3|W3> = 0, so d<P> vanishes at W3",
    criterion_7_diagnosis,
)];

fn named(n: NamedState) -> MultipartiteState {
    make_named(&n).unwrap()
}

fn named_cases() -> Vec<(String, MultipartiteState, usize)> {
    let mut cases = vec![
        ("bell".to_string(), named(NamedState::Ghz { l: 2, d: 2 }), 3),
        (
            "|00>".to_string(),
            MultipartiteState::basis(vec![2, 2], &[0, 0]).unwrap(),
            0,
        ),
    ];
    for d in [2, 3, 4] {
        cases.push((
            format!("ghz(2,{d})"),
            named(NamedState::Ghz { l: 2, d }),
            d * d - 1,
        ));
    }
    cases.push(("ghz(3,2)".into(), named(NamedState::Ghz { l: 3, d: 2 }), 7));
    cases.push(("w(3)".into(), named(NamedState::W { l: 3 }), 2));
    cases.push((
        "|000>".into(),
        MultipartiteState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap(),
        0,
    ));
    cases.push((
        "schmidt_state(1/2,1/2,0)".into(),
        named(NamedState::Schmidt(vec![0.5, 0.5, 0.0])),
        3,
    ));
    cases
}

fn routes_agree(r: &EntanglementReport) -> bool {
    r.e_theorem == r.e_gram && r.e_theorem == r.e_direct
}

/// `rank(orbit_gram) == dim_adjoint_orbit`.
fn gram_matches_adjoint(state: &MultipartiteState) -> bool {
    let gram = orbit_gram(state).unwrap();
    let dims = orbit_dims(state).unwrap();
    gram.rank.rank == dims.dim_adjoint_orbit
}

fn random_local_hamiltonian<R: Rng>(dims: &[usize], rng: &mut R) -> LocalHamiltonian {
    LocalHamiltonian::from_hermitian(dims.iter().map(|&d| random::hermitian(d, rng)).collect())
        .unwrap()
}

fn haar_cases() -> Vec<(usize, usize, Vec<MultipartiteState>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    [(2, 2), (2, 3), (3, 2), (4, 2)]
        .into_iter()
        .map(|(l, d)| {
            let states = (0..100)
                .map(|_| haar_state(&vec![d; l], &mut rng).unwrap())
                .collect();
            (l, d, states)
        })
        .collect()
}

/// Normalized weights with engineered degeneracies and, sometimes, a zero group.
fn engineered_weights<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut sizes = Vec::new();
        let mut left = d;
        while left > 0 {
            let s = rng.random_range(1..=left);
            sizes.push(s);
            left -= s;
        }
        let zero_group = sizes.len() > 1 && rng.random_bool(0.4);
        let values: Vec<f64> = (0..sizes.len())
            .map(|_| rng.random_range(0.1..1.0))
            .collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] - w[0] < 1e-2) {
            continue;
        }
        let mut w: Vec<f64> = Vec::new();
        for (g, (&s, &v)) in sizes.iter().zip(&values).enumerate() {
            let v = if zero_group && g == 0 { 0.0 } else { v };
            w.extend(std::iter::repeat_n(v, s));
        }
        let total: f64 = w.iter().sum();
        return w.into_iter().map(|x| x / total).collect();
    }
}

fn schmidt_cases() -> Vec<(Vec<f64>, MultipartiteState)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5c);
    let mut out = Vec::new();
    for d in [2, 3, 4] {
        for _ in 0..100 {
            let w = engineered_weights(d, &mut rng);
            let base = named(NamedState::Schmidt(w.clone()));
            let us = random_local_unitary(&[d, d], &mut rng);
            out.push((w, apply_local_unitary(&base, &us).unwrap()));
        }
    }
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut misses = Vec::new();
    for (name, state, want) in named_cases() {
        let r = analyze(&state).unwrap();
        if !(routes_agree(&r) && r.e_theorem == want) {
            misses.push(format!(
                "{name}: got {}/{}/{} want {want}",
                r.e_theorem, r.e_gram, r.e_direct
            ));
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: misses.is_empty() && elapsed < Duration::from_secs(5),
        detail: format!("mismatches {misses:?}, {elapsed:.2?} (budget 5 s)"),
    }
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (l, d, states) in haar_cases() {
        let mut disagree = 0;
        let mut unstable = 0;
        for s in &states {
            match analyze(s) {
                Ok(r) => {
                    disagree += usize::from(!routes_agree(&r));
                    unstable += usize::from(!r.rank_stable);
                }
                Err(_) => disagree += 1,
            }
        }
        pass &= disagree == 0 && unstable * 20 < states.len();
        details.push(format!(
            "({l},{d}) disagree {disagree} unstable {unstable}/{}",
            states.len()
        ));
    }
    let elapsed = start.elapsed();
    Verdict {
        pass: pass && elapsed < Duration::from_secs(120),
        detail: format!("{}, {elapsed:.2?} (budget 120 s)", details.join("; ")),
    }
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let cases = schmidt_cases();
    let misses = cases
        .iter()
        .filter(|(w, state)| {
            let r = analyze(state).unwrap();
            let truth = e_bipartite(w, DEFAULT_GROUP_TOL).unwrap();
            r.e_bipartite != Some(r.e_theorem) || r.e_theorem != truth
        })
        .count();
    let elapsed = start.elapsed();
    Verdict {
        pass: misses == 0 && elapsed < Duration::from_secs(60),
        detail: format!(
            "{misses}/{} mismatches, {elapsed:.2?} (budget 60 s)",
            cases.len()
        ),
    }
}

fn criterion_4() -> Verdict {
    let mut states: Vec<MultipartiteState> = named_cases().into_iter().map(|c| c.1).collect();
    states.extend(haar_cases().into_iter().flat_map(|c| c.2));
    states.extend(schmidt_cases().into_iter().map(|c| c.1));
    let misses = states.iter().filter(|s| !gram_matches_adjoint(s)).count();
    Verdict {
        pass: misses == 0,
        detail: format!("{misses}/{} mismatches", states.len()),
    }
}

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let cases = named_cases();
    let mut misses = Vec::new();
    for (name, state, _) in &cases {
        let e0 = analyze(state).unwrap().e_theorem;
        let d0 = orbit_dims(state).unwrap();
        for _ in 0..20 {
            let us = random_local_unitary(state.dims(), &mut rng);
            let moved = apply_local_unitary(state, &us).unwrap();
            let r = analyze(&moved).unwrap();
            if r.e_theorem != e0 || r.orbit_dims != d0 || !routes_agree(&r) {
                misses.push(name.clone());
            }
        }
    }
    Verdict {
        pass: misses.is_empty(),
        detail: format!("{} states x 20 unitaries, failures {misses:?}", cases.len()),
    }
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let tol = Tolerances::default();
    let z = su_basis(2).unwrap()[2].clone();
    let zzz = LocalHamiltonian::new(vec![z; 3]).unwrap();

    let product = MultipartiteState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
    let sep = null_perturbed_flow(&product, &zzz, 0.5, 10.0, 1000, &tol).unwrap();
    let identical = sep.reference == sep.perturbed;

    // Resampling rule: if the chosen H happens to commute with the null
    // directions, draw a fresh random local H.
    let w = named(NamedState::W { l: 3 });
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut h = zzz;
    let mut draws = 0;
    let (drift, fidelity) = loop {
        let pf = null_perturbed_flow(&w, &h, 0.1, 10.0, 1000, &tol).unwrap();
        let (drift, fid) = (pf.spectra_drift(), pf.final_fidelity().unwrap());
        if fid <= 1.0 - 1e-3 || draws == 5 {
            break (drift, fid);
        }
        draws += 1;
        h = random_local_hamiltonian(&[2, 2, 2], &mut rng);
    };
    let elapsed = start.elapsed();
    Verdict {
        pass: identical && drift <= 1e-6 && fidelity <= 1.0 - 1e-3 && elapsed < Duration::from_secs(30),
        detail: format!(
            "|000> identical {identical}; W3 drift {drift:.3e} (<= 1e-6), final fidelity {fidelity:.6} (<= 0.999), H redraws {draws}, {elapsed:.2?} (budget 30 s)"
        ),
    }
}

struct AdmissibilityRun {
    local_ok: bool,
    local_worst: f64,
    projector: Admissibility,
    overlap: f64,
    nonlocal_violation: f64,
}

fn admissibility_run() -> AdmissibilityRun {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let states = [
        named(NamedState::Ghz { l: 2, d: 2 }),
        named(NamedState::Ghz { l: 3, d: 2 }),
        named(NamedState::W { l: 3 }),
    ];
    let mut local_worst = 0f64;
    let mut local_ok = true;
    for s in &states {
        for _ in 0..10 {
            let h = random_local_hamiltonian(s.dims(), &mut rng);
            let a = admissibility_check(s, &h).unwrap();
            local_ok &= a.admissible;
            local_worst = local_worst.max(a.max_violation);
        }
    }
    let (ghz, w) = (&states[1], &states[2]);
    let amps = ghz.amplitudes();
    let projector = CMatrix::from_fn(8, 8, |i, j| amps[i] * amps[j].conj());
    let nonlocal = random::hermitian(8, &mut rng);
    AdmissibilityRun {
        local_ok,
        local_worst,
        projector: admissibility_check(w, &projector).unwrap(),
        overlap: ghz.overlap(w).unwrap().norm(),
        nonlocal_violation: admissibility_check(w, &nonlocal).unwrap().max_violation,
    }
}

fn criterion_7() -> Verdict {
    let run = admissibility_run();
    Verdict {
        pass: run.local_ok && !run.projector.admissible && run.projector.max_violation > 1e-3,
        detail: format!(
            "local H worst violation {:.3e} (<= 1e-9); |GHZ3><GHZ3| at W3 violation {:.3e} over {} null directions (needs > 1e-3)",
            run.local_worst, run.projector.max_violation, run.projector.null_directions
        ),
    }
}

/// What must hold for criterion 7 to be unattainable for the stated reason,
/// with the attainable half still passing.
fn criterion_7_diagnosis() -> Result<String, String> {
    let run = admissibility_run();
    let detail = format!(
        "<GHZ3|W3> = {:.1e}, projector violation {:.1e}, random nonlocal H violation {:.3e}",
        run.overlap, run.projector.max_violation, run.nonlocal_violation
    );
    if run.local_ok
        && run.overlap < 1e-15
        && run.projector.max_violation < 1e-15
        && run.nonlocal_violation > 1e-3
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let (mut norm_worst, mut energy_worst) = (0f64, 0f64);
    for _ in 0..10 {
        let s = haar_state(&[2, 2, 2], &mut rng).unwrap();
        let h = random_local_hamiltonian(&[2, 2, 2], &mut rng);
        let traj = flow(&s, &embed_full(&h), 10.0, 1000).unwrap();
        let e0 = traj.samples[0].energy;
        for sample in &traj.samples {
            norm_worst = norm_worst.max(sample.norm_dev);
            energy_worst = energy_worst.max((sample.energy - e0).abs());
        }
    }
    Verdict {
        pass: norm_worst <= 1e-12 && energy_worst <= 1e-11,
        detail: format!("norm deviation {norm_worst:.3e} (<= 1e-12), energy drift {energy_worst:.3e} (<= 1e-11)"),
    }
}

fn config(command: Command) -> RunConfig {
    RunConfig {
        command,
        tolerances: Tolerances::default(),
        adm_tol: sympent::flows::ADMISSIBILITY_TOL,
        seed: SEED,
        out: None,
        format: None,
    }
}

fn criterion_9() -> Verdict {
    let cases = "2x2:20,3x2:10,2x3:10";
    let verify = || {
        let cfg = config(Command::Verify {
            cases: cases.into(),
        });
        cmd_verify(&cfg, cases).unwrap().output
    };
    let polytope = || {
        let cfg = config(Command::Polytope { l: 3, d: 2, n: 200 });
        cmd_polytope(&cfg, 3, 2, 200).unwrap()
    };
    let (v1, v2) = (verify(), verify());
    let (p1, p2) = (polytope(), polytope());
    Verdict {
        pass: v1 == v2 && p1 == p2 && !v1.is_empty() && !p1.is_empty(),
        detail: format!(
            "verify {} bytes identical {}, polytope {} bytes identical {}",
            v1.len(),
            v1 == v2,
            p1.len(),
            p1 == p2
        ),
    }
}

fn main() {
    let criteria: [fn() -> Verdict; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut broken = Vec::new();
    let mut green = 0;
    for (i, run) in criteria.iter().enumerate() {
        let n = i + 1;
        let v = run();
        println!(
            "criterion {n}: {} | {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        if v.pass {
            green += 1;
            continue;
        }
        match UNATTAINABLE.iter().find(|(k, _, _)| *k == n) {
            Some((_, reason, diagnose)) => {
                println!("criterion {n}: unattainable as stated ({reason})");
                match diagnose() {
                    Ok(d) => println!("criterion {n}: diagnosis confirmed | {d}"),
                    Err(d) => {
                        println!("criterion {n}: diagnosis NOT confirmed | {d}");
                        broken.push(n);
                    }
                }
            }
            None => broken.push(n),
        }
    }
    println!("acceptance: {green} of {} criteria green", criteria.len());
    if !broken.is_empty() {
        println!("acceptance: unexpected failures {broken:?}");
        std::process::exit(1);
    }
}
