use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use nc2ent::discrete::{
    c_rank, conversion_for, convert_state, default_epsilon, epsilon_max, expansion_coefficients,
};
use nc2ent::gcnot::{sweep_surface, sweep_with_optima};
use nc2ent::io::{pairs, StateSetFile, VectorSpec, WitnessFile, SCHEMA_VERSION};
use nc2ent::linalg::{entanglement_entropy, negativity, schmidt_decompose, StateVector, C64};
use nc2ent::modesplit::{coherent_sector_probability, run_protocol_with_rng, ProtocolConfig};
use nc2ent::random::substream;
use nc2ent::symmetric::{coherent_state, dicke_dim, haar_random_su, SymmetricState};
use nc2ent::verify::{run_suite, Suite, VerifyOptions};
use nc2ent::witness::{detect, witness_pipeline};

use crate::{ConvertArgs, InputKind, ModesplitArgs, SweepArgs, VerifyArgs, WitnessArgs};

/// Stream reserved for drawing protocol inputs; runs use streams `0..runs`.
const INPUT_STREAM: u64 = u64::MAX;

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_states(path: &Path) -> Result<StateSetFile> {
    StateSetFile::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn vector_arg(text: &str, normalize: bool) -> Result<StateVector> {
    Ok(VectorSpec::parse(text)?.to_state(normalize)?)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct ConvertReport {
    schema: u32,
    command: &'static str,
    dimension: usize,
    epsilon: f64,
    /// `null` when every positive epsilon is feasible.
    epsilon_max: Option<f64>,
    input: Vec<[f64; 2]>,
    expansion: Vec<[f64; 2]>,
    c_rank: usize,
    output: Vec<[f64; 2]>,
    cut: [usize; 2],
    schmidt_coefficients: Vec<f64>,
    schmidt_rank: usize,
    entropy_ebits: f64,
    negativity: f64,
}

pub fn convert(args: ConvertArgs) -> Result<ExitCode> {
    let cs = load_states(&args.states)?.classical_set(args.normalize)?;
    let epsilon = args.epsilon.unwrap_or_else(|| default_epsilon(&cs));
    let conv = conversion_for(&cs, epsilon)?;
    let input = match (&args.input, &args.input_file) {
        (Some(text), _) => vector_arg(text, args.normalize)?,
        (None, Some(path)) => vector_arg(&read(path)?, args.normalize)?,
        (None, None) => bail!("an input vector is required"),
    };
    let out = convert_state(&conv, &input)?;
    let (da, db) = conv.output_cut();
    let sd = schmidt_decompose(&out, da, db)?;
    let report = ConvertReport {
        schema: SCHEMA_VERSION,
        command: "convert",
        dimension: cs.dim(),
        epsilon,
        epsilon_max: finite(epsilon_max(&cs)),
        input: pairs(input.amplitudes()),
        expansion: pairs(&expansion_coefficients(&input, &cs)?),
        c_rank: c_rank(&input, &cs)?,
        output: pairs(out.amplitudes()),
        cut: [da, db],
        schmidt_coefficients: sd.coefficients.clone(),
        schmidt_rank: sd.rank,
        entropy_ebits: entanglement_entropy(&sd),
        negativity: negativity(&out.projector(), da, db)?,
    };
    write_json(args.out.as_deref(), &report)?;
    Ok(ExitCode::SUCCESS)
}

pub fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let theta = if args.degrees {
        args.theta_range.scaled(std::f64::consts::PI / 180.0)
    } else {
        args.theta_range
    };
    let input = StateVector::basis(2, args.input as usize);
    let (thetas, mus) = (theta.points(), args.mu_range.points());
    let table = if args.grid_only {
        sweep_surface(&thetas, &mus, &input)?
    } else {
        sweep_with_optima(&thetas, &mus, &input)?
    };
    if !table.skipped.is_empty() {
        eprintln!(
            "note: {} infeasible cells (mu < |cos theta|) omitted",
            table.skipped.len()
        );
    }
    let mut out = output(args.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TraceLine {
    run: usize,
    round: usize,
    outcome: (usize, usize),
    probability: f64,
    success: bool,
    fidelity: Option<f64>,
}

#[derive(Serialize)]
struct FidelityStats {
    min: f64,
    mean: f64,
    max: f64,
}

#[derive(Serialize)]
struct ModesplitSummary {
    schema: u32,
    command: &'static str,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    input: &'static str,
    config: ProtocolConfig,
    runs: usize,
    /// `|C_{NX,NY}|²`, the per-round success probability for coherent input.
    coherent_probability: f64,
    first_round_success_rate: Option<f64>,
    success_rate: Option<f64>,
    successes: usize,
    mean_rounds: Option<f64>,
    fidelity: Option<FidelityStats>,
}

fn protocol_input(args: &ModesplitArgs, seed: u64) -> Result<(SymmetricState, &'static str)> {
    if let Some(path) = &args.input_file {
        let v = VectorSpec::parse(&read(path)?)?.to_state(args.normalize)?;
        let expected = dicke_dim(args.k, args.n)?;
        if v.dim() != expected {
            bail!("input file has {} amplitudes, Sym^{}(C^{}) has {expected}", v.dim(), args.n, args.k);
        }
        return Ok((SymmetricState::new(args.k, args.n, v)?, "file"));
    }
    let mut rng = substream(seed, INPUT_STREAM);
    let a = coherent_state(&haar_random_su(args.k, &mut rng)?, args.n)?;
    Ok(match args.input {
        InputKind::Coherent => (a, "coherent"),
        InputKind::Superposition => {
            let b = coherent_state(&haar_random_su(args.k, &mut rng)?, args.n)?;
            (SymmetricState::superposition(&[(C64::new(1.0, 0.0), &a), (C64::new(1.0, 0.0), &b)])?, "superposition")
        }
    })
}

pub fn modesplit(args: ModesplitArgs) -> Result<ExitCode> {
    let cfg = match &args.config {
        Some(path) => serde_json::from_str::<ProtocolConfig>(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => {
            let t = match args.t {
                Some(t) => t,
                None if args.r.abs() <= 1.0 => (1.0 - args.r * args.r).sqrt(),
                None => bail!("|r| = {} exceeds 1", args.r.abs()),
            };
            ProtocolConfig {
                r: args.r,
                t,
                phi: args.phi,
                target: args.target.expect("required without --config"),
                max_rounds: args.max_rounds,
                seed: args.seed,
            }
        }
    };
    let tunneling = cfg.validate(args.n)?;
    let (input, kind) = protocol_input(&args, cfg.seed)?;

    let mut traces = match &args.out {
        Some(p) => Some(output(Some(p))?),
        None => None,
    };
    let (mut first_round, mut successes, mut rounds_total) = (0usize, 0usize, 0usize);
    let mut fids = Vec::new();
    for run in 0..args.runs {
        let trace = run_protocol_with_rng(&input, &cfg, &mut substream(cfg.seed, run as u64))?;
        if trace.success {
            successes += 1;
            rounds_total += trace.round_count();
            first_round += usize::from(trace.round_count() == 1);
            fids.push(trace.fidelity.expect("set on success"));
        }
        if let Some(out) = traces.as_mut() {
            let last = trace.round_count();
            for r in &trace.rounds {
                let done = trace.success && r.round == last;
                let line = TraceLine {
                    run,
                    round: r.round,
                    outcome: r.outcome,
                    probability: r.probability,
                    success: done,
                    fidelity: if done { trace.fidelity } else { None },
                };
                serde_json::to_writer(&mut *out, &line)?;
                writeln!(out)?;
            }
        }
    }
    if let Some(mut out) = traces {
        out.flush()?;
    }

    let rate = |count: usize| (args.runs > 0).then(|| count as f64 / args.runs as f64);
    let summary = ModesplitSummary {
        schema: SCHEMA_VERSION,
        command: "modesplit",
        k: args.k,
        n: args.n,
        input: kind,
        coherent_probability: coherent_sector_probability(cfg.target.0, cfg.target.1, &tunneling),
        config: cfg,
        runs: args.runs,
        first_round_success_rate: rate(first_round),
        success_rate: rate(successes),
        successes,
        mean_rounds: (successes > 0).then(|| rounds_total as f64 / successes as f64),
        fidelity: (!fids.is_empty()).then(|| FidelityStats {
            min: fids.iter().copied().fold(f64::INFINITY, f64::min),
            mean: fids.iter().sum::<f64>() / fids.len() as f64,
            max: fids.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }),
    };
    write_json(None, &summary)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Evaluation {
    state: Vec<[f64; 2]>,
    value: f64,
    verdict: &'static str,
}

#[derive(Serialize)]
struct WitnessReport {
    schema: u32,
    command: &'static str,
    epsilon: f64,
    target: Evaluation,
    classical_values: Vec<f64>,
    classical_min: f64,
    tests: Vec<Evaluation>,
    witness: WitnessFile,
}

fn verdict(detected: bool) -> &'static str {
    if detected {
        "non-classical detected"
    } else {
        "not detected"
    }
}

pub fn witness(args: WitnessArgs) -> Result<ExitCode> {
    let cs = load_states(&args.states)?.classical_set(args.normalize)?;
    let epsilon = args.epsilon.unwrap_or_else(|| default_epsilon(&cs));
    let conv = conversion_for(&cs, epsilon)?;
    let target = vector_arg(&args.target_state, args.normalize)?;
    let pipeline = witness_pipeline(&cs, &conv, &target)?;
    let wt = &pipeline.input_witness;
    let evaluate = |s: &StateVector| -> Result<Evaluation> {
        let d = detect(wt, &s.projector())?;
        Ok(Evaluation {
            state: pairs(s.amplitudes()),
            value: d.value,
            verdict: verdict(d.detected),
        })
    };
    let tests = args
        .test_state
        .iter()
        .map(|t| evaluate(&vector_arg(t, args.normalize)?))
        .collect::<Result<Vec<_>>>()?;
    let classical_values = cs
        .states()
        .iter()
        .map(|s| wt.pure_expectation(s))
        .collect::<nc2ent::Result<Vec<_>>>()?;
    let report = WitnessReport {
        schema: SCHEMA_VERSION,
        command: "witness",
        epsilon,
        target: evaluate(&target)?,
        classical_values,
        classical_min: pipeline.classical_min,
        tests,
        witness: WitnessFile::from_witness(wt),
    };
    if let Some(path) = &args.out {
        write_json(Some(path), &report.witness)?;
    }
    write_json(None, &report)?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let suite: Suite = args.suite.parse()?;
    let opts = VerifyOptions {
        seed: args.seed,
        trials: args.trials.map(|t| t as usize),
    };
    let report = run_suite(suite, &opts);
    for check in &report.checks {
        eprintln!("{check}");
    }
    for (criterion, passed) in report.criterion_summary() {
        eprintln!("criterion {criterion}: {}", if passed { "PASS" } else { "FAIL" });
    }
    write_json(args.out.as_deref(), &report)?;
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
