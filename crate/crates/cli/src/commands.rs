//! The four subcommands. Each returns the bytes it would print so tests can
//! compare outputs without spawning processes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use sympent::entanglement::{analyze_with, EntanglementReport};
use sympent::flows::null_perturbed_flow;
use sympent::spectramap::{sample_polytope, write_csv as write_polytope_csv};
use sympent::states::haar_state;
use sympent::statexpr::{eval, parse};
use sympent::{MultipartiteState, Tolerances};

use crate::config::{Command, Format, RunConfig};
use crate::error::CliError;
use crate::hamspec::parse_local_hamiltonian;

/// What a command produced: text for stdout or the `--out` file, plus an
/// error to raise after the output has been written.
pub struct Outcome {
    pub output: Vec<u8>,
    pub deferred: Option<CliError>,
}

impl Outcome {
    fn ok(output: Vec<u8>) -> Self {
        Self {
            output,
            deferred: None,
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    match &config.command {
        Command::Analyze { state, d } => cmd_analyze(config, state, *d).map(Outcome::ok),
        Command::Verify { cases } => cmd_verify(config, cases),
        Command::Flow {
            state,
            ham,
            eps,
            t,
            n,
            d,
        } => cmd_flow(config, state, ham, *eps, *t, *n, *d).map(Outcome::ok),
        Command::Polytope { l, d, n } => cmd_polytope(config, *l, *d, *n).map(Outcome::ok),
    }
}

fn read_state(text: &str, d: usize) -> Result<MultipartiteState, CliError> {
    let expr = parse(text).map_err(|e| CliError::Input(format!("--state: {e}")))?;
    Ok(eval(&expr, d)?)
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOutput {
    pub state: String,
    pub dims: Vec<usize>,
    pub e_theorem: usize,
    pub e_gram: usize,
    pub e_direct: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_bipartite: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<Vec<usize>>,
    pub dim_orbit: usize,
    pub dim_adjoint_orbit: usize,
    pub gram_rank: usize,
    pub separable: bool,
    pub rank_stable: bool,
    pub warnings: Vec<String>,
}

impl AnalyzeOutput {
    pub fn new(text: &str, state: &MultipartiteState, r: EntanglementReport) -> Self {
        Self {
            state: text.to_string(),
            dims: state.dims().to_vec(),
            e_theorem: r.e_theorem,
            e_gram: r.e_gram,
            e_direct: r.e_direct,
            e_bipartite: r.e_bipartite,
            schmidt: r.schmidt_coefficients,
            multiplicities: r.schmidt_multiplicities,
            dim_orbit: r.orbit_dims.dim_orbit,
            dim_adjoint_orbit: r.orbit_dims.dim_adjoint_orbit,
            gram_rank: r.gram_rank,
            separable: r.separable,
            rank_stable: r.rank_stable,
            warnings: r.warnings,
        }
    }

    fn csv(&self) -> Vec<u8> {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "state,dims,e_theorem,e_gram,e_direct,e_bipartite,dim_orbit,dim_adjoint_orbit,gram_rank,separable,rank_stable\n\"{}\",{},{},{},{},{},{},{},{},{},{}\n",
            self.state.replace('"', "\"\""),
            join(&self.dims),
            self.e_theorem,
            self.e_gram,
            self.e_direct,
            opt(self.e_bipartite),
            self.dim_orbit,
            self.dim_adjoint_orbit,
            self.gram_rank,
            self.separable,
            self.rank_stable
        )
        .into_bytes()
    }
}

pub fn cmd_analyze(config: &RunConfig, text: &str, d: usize) -> Result<Vec<u8>, CliError> {
    let state = read_state(text, d)?;
    let report = analyze_with(&state, &config.tolerances)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let out = AnalyzeOutput::new(text, &state, report);
    match config.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&out),
        Format::Csv => Ok(out.csv()),
    }
}

/// One `LxD:count` entry of `--cases`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Case {
    pub l: usize,
    pub d: usize,
    pub count: usize,
}

pub fn parse_cases(text: &str) -> Result<Vec<Case>, CliError> {
    let bad = |item: &str| CliError::Input(format!("malformed case '{item}', expected LxD:count"));
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (shape, count) = item.split_once(':').ok_or_else(|| bad(item))?;
            let (l, d) = shape.split_once(['x', 'X']).ok_or_else(|| bad(item))?;
            let case = Case {
                l: l.trim().parse().map_err(|_| bad(item))?,
                d: d.trim().parse().map_err(|_| bad(item))?,
                count: count.trim().parse().map_err(|_| bad(item))?,
            };
            if case.l < 1 || case.d < 2 || case.count < 1 {
                return Err(CliError::Input(format!(
                    "case '{item}' needs L >= 1, D >= 2, count >= 1"
                )));
            }
            if (case.d as f64).powi(case.l as i32) > 4096.0 {
                return Err(CliError::Input(format!(
                    "case '{item}' exceeds the dense size limit"
                )));
            }
            Ok(case)
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(CliError::Input("--cases is empty".into()))
            } else {
                Ok(v)
            }
        })
}

#[derive(Debug, Default, Serialize, PartialEq, Eq)]
pub struct CaseSummary {
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    pub samples: usize,
    pub agreements: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bipartite_agreements: Option<usize>,
    pub rank_unstable: usize,
    pub disagreements: usize,
}

#[derive(Debug, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub cases: Vec<CaseSummary>,
    pub total_samples: usize,
    pub total_agreements: usize,
    pub total_disagreements: usize,
}

enum Verdict {
    Report(EntanglementReport),
    Inconsistent(String),
}

fn classify(state: &MultipartiteState, tol: &Tolerances) -> Result<Verdict, CliError> {
    match analyze_with(state, tol) {
        Ok(r) => Ok(Verdict::Report(r)),
        Err(e) => match CliError::from(e) {
            CliError::Math(msg) => Ok(Verdict::Inconsistent(msg)),
            input => Err(input),
        },
    }
}

pub fn cmd_verify(config: &RunConfig, cases_text: &str) -> Result<Outcome, CliError> {
    let cases = parse_cases(cases_text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut jobs = Vec::new();
    for (c, case) in cases.iter().enumerate() {
        for _ in 0..case.count {
            jobs.push((c, haar_state(&vec![case.d; case.l], &mut rng)?));
        }
    }
    let verdicts: Vec<(usize, Verdict)> = jobs
        .par_iter()
        .map(|(c, s)| classify(s, &config.tolerances).map(|v| (*c, v)))
        .collect::<Result<_, _>>()?;

    let mut summaries: Vec<CaseSummary> = cases
        .iter()
        .map(|c| CaseSummary {
            l: c.l,
            d: c.d,
            bipartite_agreements: (c.l == 2).then_some(0),
            ..Default::default()
        })
        .collect();
    for (i, (c, verdict)) in verdicts.iter().enumerate() {
        let s = &mut summaries[*c];
        s.samples += 1;
        match verdict {
            Verdict::Report(r) => {
                let agree = r.e_theorem == r.e_gram && r.e_theorem == r.e_direct;
                let bip = r.e_bipartite.map(|e| e == r.e_theorem);
                if !r.rank_stable {
                    s.rank_unstable += 1;
                }
                if agree && bip.unwrap_or(true) {
                    s.agreements += 1;
                }
                if let (Some(true), Some(n)) = (bip, s.bipartite_agreements.as_mut()) {
                    *n += 1;
                }
            }
            Verdict::Inconsistent(msg) => {
                log::error!("sample {i}: {msg}");
                s.disagreements += 1;
            }
        }
    }
    let summary = VerifySummary {
        seed: config.seed,
        total_samples: summaries.iter().map(|s| s.samples).sum(),
        total_agreements: summaries.iter().map(|s| s.agreements).sum(),
        total_disagreements: summaries.iter().map(|s| s.disagreements).sum(),
        cases: summaries,
    };
    let output = match config.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&summary)?,
        Format::Csv => {
            let mut text = String::from(
                "L,d,samples,agreements,bipartite_agreements,rank_unstable,disagreements\n",
            );
            for s in &summary.cases {
                text += &format!(
                    "{},{},{},{},{},{},{}\n",
                    s.l,
                    s.d,
                    s.samples,
                    s.agreements,
                    s.bipartite_agreements
                        .map_or(String::new(), |x| x.to_string()),
                    s.rank_unstable,
                    s.disagreements
                );
            }
            text.into_bytes()
        }
    };
    let deferred = (summary.total_disagreements > 0).then(|| {
        CliError::Math(format!(
            "{} rank-stable samples with disagreeing routes",
            summary.total_disagreements
        ))
    });
    Ok(Outcome { output, deferred })
}

#[derive(Debug, Serialize)]
pub struct FlowSummary {
    pub reference: PathBuf,
    pub perturbed: PathBuf,
    pub samples: usize,
    pub spectra_drift: f64,
    pub final_fidelity: f64,
    pub initial_null_rank: usize,
    /// `[step, before, after]` triples.
    pub null_rank_changes: Vec<(usize, usize, usize)>,
}

/// Paths `PREFIX_reference.csv` and `PREFIX_perturbed.csv`.
pub fn flow_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let base = prefix.to_string_lossy();
    (
        PathBuf::from(format!("{base}_reference.csv")),
        PathBuf::from(format!("{base}_perturbed.csv")),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_flow(
    config: &RunConfig,
    state_text: &str,
    ham: &str,
    eps: f64,
    t: f64,
    n: usize,
    d: usize,
) -> Result<Vec<u8>, CliError> {
    if config.format == Some(Format::Json) {
        return Err(CliError::Input(
            "flow writes CSV trajectories; --format json is not supported".into(),
        ));
    }
    let state = read_state(state_text, d)?;
    let h = parse_local_hamiltonian(ham, state.dims())?;
    let pf = null_perturbed_flow(&state, &h, eps, t, n, &config.tolerances)?;
    let prefix = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("trajectory"));
    let (ref_path, pert_path) = flow_paths(&prefix);
    let mut buf = Vec::new();
    pf.reference.write_csv(&mut buf)?;
    fs::write(&ref_path, &buf)?;
    buf.clear();
    pf.perturbed.write_csv(&mut buf)?;
    fs::write(&pert_path, &buf)?;
    let summary = FlowSummary {
        reference: ref_path,
        perturbed: pert_path,
        samples: pf.reference.len(),
        spectra_drift: pf.spectra_drift(),
        final_fidelity: pf.final_fidelity().unwrap_or(1.0),
        initial_null_rank: pf.null_ranks.first().copied().unwrap_or(0),
        null_rank_changes: pf.rank_changes,
    };
    to_json(&summary)
}

#[derive(Serialize)]
struct PointOut<'a> {
    sample: usize,
    spectra: &'a [Vec<f64>],
    multiplicities: &'a [Vec<usize>],
}

pub fn cmd_polytope(config: &RunConfig, l: usize, d: usize, n: usize) -> Result<Vec<u8>, CliError> {
    if l < 1 || d < 2 || n < 1 {
        return Err(CliError::Input(
            "polytope needs --L >= 1, --d >= 2, --N >= 1".into(),
        ));
    }
    if (d as f64).powi(l as i32) > 1e6 {
        return Err(CliError::Input(
            "state dimension too large for dense sampling".into(),
        ));
    }
    let points = sample_polytope(l, d, n, config.seed)?;
    match config.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = Vec::new();
            write_polytope_csv(&points, &mut out)?;
            Ok(out)
        }
        Format::Json => {
            let rows: Vec<PointOut> = points
                .iter()
                .enumerate()
                .map(|(i, p)| PointOut {
                    sample: i + 1,
                    spectra: &p.spectra,
                    multiplicities: &p.multiplicities,
                })
                .collect();
            to_json(&rows)
        }
    }
}
