//! `rxnsel`: simulate, select, reduce and compare reaction mechanisms.
//!
//! Exit codes: 0 success, 2 invalid input, 3 integration failure,
//! 4 infeasible selection chunk, 5 comparison simulation failure.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rxnsel::conditions::{parse_conditions, parse_initial_state, ConditionRecord, SpeciesMatch};
use rxnsel::kinetics::{
    load_trajectory, simulate, write_rates_csv, write_trajectory_csv, Condition, KineticsError,
    Schedule, SimulationOptions,
};
use rxnsel::mechanism::{check_element_balance, parse_mechanism, ElementTable, Mechanism};
use rxnsel::reduction::{
    compare, emit_reduced, union_influential, CompareOptions, ComparisonCase, ReductionError,
};
use rxnsel::selection::{
    aggregate_relevance, build_chunk_problem, chunk_ranges, degenerate_steps,
    minimal_feasible_epsilon, read_mask_csv, threshold, write_mask_csv, write_relevance_csv,
    write_weights_csv, DriftMode, ExactSolver, SelectionConfig, SelectionEngine, SelectionError,
    SolverRegistry,
};
use rxnsel::testnet::{generate, NetworkShape};
use rxnsel::Trajectory;

#[derive(Parser)]
#[command(
    name = "rxnsel",
    version,
    about = "Influential-reaction selection for mass-action mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a mechanism and write trajectory and rates CSVs.
    Simulate(SimulateArgs),
    /// Select influential reactions along trajectories.
    Select(SelectArgs),
    /// Build the reduced mechanism from selection masks.
    Reduce(ReduceArgs),
    /// Compare a reduced mechanism against its parent.
    Compare(CompareArgs),
    /// Generate a seeded random network with exact-Euler data.
    GenTestnet(GenTestnetArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Initial state as NAME=VALUE pairs, e.g. "H2=2,O2=1" (single run).
    #[arg(long, conflicts_with = "conditions")]
    x0: Option<String>,
    /// JSON array of {label, T, P, phi, X0, schedule} records.
    #[arg(long)]
    conditions: Option<PathBuf>,
    /// Sample times: uniform:T_END:N, geometric:T_FIRST:T_END:N or t0,t1,...
    /// Default for condition records without their own schedule.
    #[arg(long)]
    schedule: Option<Schedule>,
    /// Temperature in kelvin for a single run.
    #[arg(long)]
    temperature: Option<f64>,
    /// Label for a single run.
    #[arg(long, default_value = "run")]
    label: String,
    /// One explicit update per sample interval instead of converged RK4.
    #[arg(long)]
    exact_euler: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Mechanism JSON.
    #[arg(long)]
    mechanism: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Element composition JSON ({"H2O": {"H": 2, "O": 1}, ...}); imbalanced
    /// reactions are reported as warnings.
    #[arg(long)]
    check_balance: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Relaxed,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Exact => rxnsel::selection::EXACT,
            Mode::Relaxed => rxnsel::selection::RELAXED,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Drift {
    Endpoint,
    Prefix,
}

#[derive(Args)]
struct SelectionArgs {
    /// Relative tolerance on concentration changes.
    #[arg(long, default_value_t = 0.21)]
    epsilon: f64,
    /// Drift multiplier for the horizon-level bound.
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    /// Steps per jointly optimized chunk.
    #[arg(long, default_value_t = 5)]
    horizon: usize,
    /// Selection threshold: a reaction is selected where its weight exceeds it.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Binary weights by branch-and-bound, or the linear relaxation.
    #[arg(long, value_enum, default_value = "relaxed")]
    mode: Mode,
    /// Impose the drift bound at the chunk end only, or on every prefix.
    #[arg(long, value_enum, default_value = "endpoint")]
    drift: Drift,
    /// Branch-and-bound node budget per chunk (exact mode).
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: usize,
}

impl SelectionArgs {
    fn config(&self) -> SelectionConfig {
        SelectionConfig {
            epsilon: self.epsilon,
            beta: self.beta,
            horizon: self.horizon,
            alpha: self.alpha,
            mode: self.mode.name().to_string(),
            drift: match self.drift {
                Drift::Endpoint => DriftMode::Endpoint,
                Drift::Prefix => DriftMode::Prefix,
            },
            ..SelectionConfig::default()
        }
    }

    fn registry(&self) -> SolverRegistry {
        let mut r = SolverRegistry::builtin();
        r.register(std::sync::Arc::new(ExactSolver {
            node_limit: self.node_limit,
        }));
        r
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Mechanism JSON.
    #[arg(long)]
    mechanism: PathBuf,
    /// Trajectory CSV (`t,<species>`); use --conditions to simulate instead.
    #[arg(
        long,
        conflicts_with = "conditions",
        required_unless_present = "conditions"
    )]
    trajectory: Option<PathBuf>,
    /// Rates CSV (`t,<reaction labels>`); computed from concentrations if absent.
    #[arg(long, requires = "trajectory")]
    rates: Option<PathBuf>,
    /// Temperature in kelvin, needed to recompute Arrhenius rates.
    #[arg(long)]
    temperature: Option<f64>,
    /// Condition label for a trajectory file (default: the file stem).
    #[arg(long)]
    label: Option<String>,
    /// Simulate every record of this conditions file and select on each.
    #[arg(long)]
    conditions: Option<PathBuf>,
    /// Default schedule for condition records without one.
    #[arg(long)]
    schedule: Option<Schedule>,
    /// Simulate with one explicit update per sample interval.
    #[arg(long)]
    exact_euler: bool,
    #[command(flatten)]
    selection: SelectionArgs,
    /// Also write every chunk problem as text.
    #[arg(long)]
    dump_lp: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    /// Mechanism JSON.
    #[arg(long)]
    mechanism: PathBuf,
    /// Mask CSV as PATH or LABEL=PATH; the label defaults to the file name
    /// without `.mask.csv`. Repeat for each condition.
    #[arg(long = "mask", required = true)]
    masks: Vec<String>,
    /// Output file (default: OUT_DIR/reduced.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Parent mechanism JSON.
    #[arg(long)]
    parent: PathBuf,
    /// Reduced mechanism JSON.
    #[arg(long)]
    reduced: PathBuf,
    /// JSON array of condition records.
    #[arg(long)]
    conditions: PathBuf,
    /// Default schedule for condition records without one.
    #[arg(long)]
    schedule: Option<Schedule>,
    /// Species whose 50% progress defines the characteristic time (default:
    /// first reactant of the first parent reaction).
    #[arg(long)]
    progress_species: Option<String>,
    /// Simulate with one explicit update per sample interval.
    #[arg(long)]
    exact_euler: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GenTestnetArgs {
    /// Number of species.
    #[arg(long, default_value_t = 4)]
    species: usize,
    /// Number of reactions.
    #[arg(long, default_value_t = 6)]
    reactions: usize,
    /// Number of sampling steps in the generated trajectory.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Nominal time span (the spacing is halved until no species clamps).
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// A failed command: message for stderr and the process exit code.
struct Failure {
    code: u8,
    message: String,
}

const INVALID: u8 = 2;
const INTEGRATION: u8 = 3;
const INFEASIBLE: u8 = 4;
const COMPARISON: u8 = 5;

fn fail(code: u8, message: impl Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn invalid(message: impl Display) -> Failure {
    fail(INVALID, message)
}

fn kinetics_failure(context: &str, e: KineticsError) -> Failure {
    let code = match e {
        KineticsError::StepUnderflow { .. } => INTEGRATION,
        _ => INVALID,
    };
    fail(code, format!("{context}: {e}"))
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| invalid(format!("{}: {e}", dir.display())))
}

fn load_mechanism(path: &Path) -> Result<Mechanism, Failure> {
    parse_mechanism(&read_text(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn sim_options(exact_euler: bool) -> SimulationOptions {
    if exact_euler {
        SimulationOptions::exact_euler()
    } else {
        SimulationOptions::default()
    }
}

/// One run to simulate: condition, initial state, sample times.
struct Case {
    condition: Condition,
    x0: Vec<f64>,
    times: Vec<f64>,
}

fn load_records(path: &Path) -> Result<Vec<ConditionRecord>, Failure> {
    parse_conditions(&read_text(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn cases_from_records(
    records: &[ConditionRecord],
    mechanism: &Mechanism,
    schedule: Option<&Schedule>,
) -> Result<Vec<Case>, Failure> {
    records
        .iter()
        .map(|r| {
            Ok(Case {
                condition: r.condition(),
                x0: r
                    .initial_state(mechanism, SpeciesMatch::Strict)
                    .map_err(invalid)?,
                times: r.times(schedule).map_err(invalid)?,
            })
        })
        .collect()
}

fn run_cases(mechanism: &Mechanism, run: &RunArgs) -> Result<Vec<Case>, Failure> {
    match (&run.conditions, &run.x0) {
        (Some(path), _) => {
            cases_from_records(&load_records(path)?, mechanism, run.schedule.as_ref())
        }
        (None, Some(x0)) => {
            let schedule = run
                .schedule
                .as_ref()
                .ok_or_else(|| invalid("--schedule is required with --x0"))?;
            Ok(vec![Case {
                condition: Condition {
                    temperature: run.temperature,
                    ..Condition::labeled(run.label.clone())
                },
                x0: parse_initial_state(x0, mechanism).map_err(invalid)?,
                times: schedule.times().map_err(invalid)?,
            }])
        }
        (None, None) => Err(invalid("give either --x0 with --schedule, or --conditions")),
    }
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let mechanism = load_mechanism(&args.mechanism)?;
    if let Some(path) = &args.check_balance {
        let table: ElementTable = serde_json::from_str(&read_text(path)?)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        for issue in check_element_balance(&mechanism, &table) {
            eprintln!("warning: {issue}");
        }
    }
    let cases = run_cases(&mechanism, &args.run)?;
    let opts = sim_options(args.run.exact_euler);
    ensure_dir(&args.out_dir)?;

    let simulate_case = |c: &Case| simulate(&mechanism, &c.x0, &c.condition, &c.times, &opts);
    let results = in_pool(args.jobs, || {
        use rayon::prelude::*;
        cases.par_iter().map(simulate_case).collect::<Vec<_>>()
    });

    println!(
        "mechanism: {} species, {} reactions",
        mechanism.n_species(),
        mechanism.n_reactions()
    );
    for (case, result) in cases.iter().zip(results) {
        let label = &case.condition.label;
        let sim = result.map_err(|e| kinetics_failure(&format!("condition {label:?}"), e))?;
        write_trajectory_csv(
            &sim.trajectory,
            &mechanism,
            create(&args.out_dir, &format!("{label}.trajectory.csv"))?,
        )
        .map_err(invalid)?;
        write_rates_csv(
            &sim.trajectory,
            &mechanism,
            create(&args.out_dir, &format!("{label}.rates.csv"))?,
        )
        .map_err(invalid)?;
        println!(
            "{label}: {} samples, {} clamp events",
            sim.trajectory.n_samples(),
            sim.clamp_events.len()
        );
    }
    Ok(())
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

fn cmd_select(args: SelectArgs) -> CmdResult {
    let mechanism = load_mechanism(&args.mechanism)?;
    let config = args.selection.config();
    config.validate().map_err(invalid)?;

    let trajectories: Vec<Trajectory> = match &args.trajectory {
        Some(path) => {
            let label = args.label.clone().unwrap_or_else(|| {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
                stem.strip_suffix(".trajectory").unwrap_or(stem).to_string()
            });
            let condition = Condition {
                temperature: args.temperature,
                ..Condition::labeled(label)
            };
            let rates = args.rates.as_deref().map(open).transpose()?;
            let tr = load_trajectory(open(path)?, rates, &mechanism, condition)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            vec![tr]
        }
        None => {
            let path = args.conditions.as_deref().expect("clap requires one input");
            let cases =
                cases_from_records(&load_records(path)?, &mechanism, args.schedule.as_ref())?;
            let opts = sim_options(args.exact_euler);
            cases
                .iter()
                .map(|c| {
                    simulate(&mechanism, &c.x0, &c.condition, &c.times, &opts)
                        .map(|s| s.trajectory)
                        .map_err(|e| {
                            kinetics_failure(&format!("condition {:?}", c.condition.label), e)
                        })
                })
                .collect::<Result<_, _>>()?
        }
    };

    ensure_dir(&args.out_dir)?;
    let engine = SelectionEngine::new(args.selection.registry()).with_jobs(args.jobs);
    let stoich = mechanism.stoich_matrix();
    for tr in &trajectories {
        let label = &tr.condition().label;
        if args.dump_lp {
            for (i, steps) in chunk_ranges(tr.n_steps(), config.horizon)
                .into_iter()
                .enumerate()
            {
                let p = build_chunk_problem(tr, &stoich, &config, steps).map_err(invalid)?;
                let mut out = create(&args.out_dir, &format!("{label}.chunk-{i}.lp.txt"))?;
                std::io::Write::write_all(&mut out, p.program.to_tableau_text().as_bytes())
                    .map_err(invalid)?;
            }
        }
        let run = match engine.run(tr, &mechanism, &config) {
            Ok(run) => run,
            Err(SelectionError::ChunkInfeasible { chunk, steps }) => {
                let solver = engine.registry().get(&config.mode).map_err(invalid)?;
                let hint = match minimal_feasible_epsilon(
                    tr,
                    &stoich,
                    &config,
                    solver.as_ref(),
                    steps.clone(),
                ) {
                    Ok(Some(eps)) => {
                        format!("smallest feasible epsilon for this chunk is about {eps:.6}")
                    }
                    Ok(None) => match degenerate_steps(tr, &stoich, &config, steps.clone()) {
                        Ok(found) if !found.is_empty() => {
                            let d = found[0];
                            format!(
                                "no epsilon helps: species {:?} changes by {:e} on step {} while no reaction touching it has a nonzero rate; sample more finely there",
                                mechanism.species()[d.species].name, d.change, d.step
                            )
                        }
                        _ => "no epsilon up to 1e6 makes it feasible".to_string(),
                    },
                    Err(e) => format!("could not search for a feasible epsilon: {e}"),
                };
                return Err(fail(
                    INFEASIBLE,
                    format!(
                        "condition {label:?}: chunk {chunk} (steps {}..{}) is infeasible at epsilon {}; {hint}",
                        steps.start, steps.end, config.epsilon
                    ),
                ));
            }
            Err(e @ SelectionError::NodeLimit { .. }) => {
                return Err(fail(INFEASIBLE, format!("condition {label:?}: {e}")))
            }
            Err(e) => return Err(invalid(format!("condition {label:?}: {e}"))),
        };

        let mask = threshold(&run.weights, config.alpha);
        let relevance = aggregate_relevance(&run.weights);
        write_weights_csv(
            &run.weights,
            &mechanism,
            create(&args.out_dir, &format!("{label}.weights.csv"))?,
        )
        .map_err(invalid)?;
        write_mask_csv(
            &mask,
            &mechanism,
            create(&args.out_dir, &format!("{label}.mask.csv"))?,
        )
        .map_err(invalid)?;
        write_relevance_csv(
            &relevance,
            &mechanism,
            create(&args.out_dir, &format!("{label}.relevance.csv"))?,
        )
        .map_err(invalid)?;

        println!(
            "{label}: {} steps in {} chunks ({} mode)",
            tr.n_steps(),
            run.chunks.len(),
            config.mode
        );
        for c in &run.chunks {
            println!(
                "  chunk {:>4}  steps {:>5}..{:<5}  objective {}",
                c.index, c.steps.start, c.steps.end, c.objective
            );
        }
        println!(
            "  selected at any step: {} of {} reactions",
            mask.ever_selected().len(),
            mechanism.n_reactions()
        );
    }
    Ok(())
}

fn cmd_reduce(args: ReduceArgs) -> CmdResult {
    let mechanism = load_mechanism(&args.mechanism)?;
    let labels: Vec<&str> = mechanism.labels();
    let mut masks = Vec::with_capacity(args.masks.len());
    for entry in &args.masks {
        let (label, path) = match entry.split_once('=') {
            Some((l, p)) => (l.to_string(), PathBuf::from(p)),
            None => {
                let path = PathBuf::from(entry);
                let name = path.file_name().and_then(|s| s.to_str()).unwrap_or(entry);
                let label = name
                    .strip_suffix(".mask.csv")
                    .or_else(|| name.strip_suffix(".csv"))
                    .unwrap_or(name)
                    .to_string();
                (label, path)
            }
        };
        let (header, mask) =
            read_mask_csv(open(&path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if header != labels {
            return Err(invalid(format!(
                "{}: mask has {} reaction columns that do not match the mechanism's {} reactions",
                path.display(),
                header.len(),
                labels.len()
            )));
        }
        masks.push((label, mask));
    }
    let set = union_influential(&masks).map_err(invalid)?;
    let reduced = emit_reduced(&mechanism, &set).map_err(invalid)?;

    let out = match args.out {
        Some(p) => p,
        None => {
            ensure_dir(&args.out_dir)?;
            args.out_dir.join("reduced.json")
        }
    };
    fs::write(&out, reduced.to_json()).map_err(|e| invalid(format!("{}: {e}", out.display())))?;
    println!(
        "kept {} of {} reactions and {} of {} species from {} condition(s); wrote {}",
        reduced.mechanism.n_reactions(),
        mechanism.n_reactions(),
        reduced.mechanism.n_species(),
        mechanism.n_species(),
        masks.len(),
        out.display()
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let parent = load_mechanism(&args.parent)?;
    let reduced = load_mechanism(&args.reduced)?;
    let records = load_records(&args.conditions)?;
    let cases: Vec<ComparisonCase> = cases_from_records(&records, &parent, args.schedule.as_ref())?
        .into_iter()
        .map(|c| ComparisonCase {
            condition: c.condition,
            x0: c.x0,
            times: c.times,
        })
        .collect();
    let options = CompareOptions {
        progress_species: args.progress_species.as_deref(),
        simulation: sim_options(args.exact_euler),
        jobs: args.jobs,
        ..CompareOptions::default()
    };
    let report = compare(&parent, &reduced, &cases, &options).map_err(|e| match e {
        ReductionError::Simulation { .. } | ReductionError::Progress { .. } => fail(COMPARISON, e),
        other => invalid(other),
    })?;
    ensure_dir(&args.out_dir)?;
    let json = args.out_dir.join("comparison.json");
    fs::write(&json, report.to_json()).map_err(|e| invalid(format!("{}: {e}", json.display())))?;
    let text = report.to_text();
    let txt = args.out_dir.join("comparison.txt");
    fs::write(&txt, &text).map_err(|e| invalid(format!("{}: {e}", txt.display())))?;
    print!("{text}");
    Ok(())
}

fn cmd_gen_testnet(args: GenTestnetArgs) -> CmdResult {
    if args.species == 0
        || args.reactions == 0
        || args.steps == 0
        || !args.t_end.is_finite()
        || args.t_end <= 0.0
    {
        return Err(invalid(
            "--species, --reactions, --steps and --t-end must be positive",
        ));
    }
    let shape = NetworkShape {
        t_end: args.t_end,
        ..NetworkShape::new(args.species, args.reactions, args.steps)
    };
    let net = generate(&shape, args.seed).map_err(|e| kinetics_failure("generation", e))?;
    ensure_dir(&args.out_dir)?;
    let m = &net.mechanism;
    let label = &net.trajectory.condition().label;
    let write = |name: &str, text: String| {
        let path = args.out_dir.join(name);
        fs::write(&path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    };
    write("network.json", m.to_json())?;
    let record = ConditionRecord {
        label: label.clone(),
        temperature: None,
        pressure: None,
        phi: None,
        x0: m
            .species()
            .iter()
            .map(|s| s.name.clone())
            .zip(net.x0.iter().copied())
            .collect(),
        schedule: Some(Schedule::Explicit {
            times: net.trajectory.times().to_vec(),
        }),
    };
    write(
        "conditions.json",
        serde_json::to_string_pretty(&[record]).expect("conditions serialize") + "\n",
    )?;
    write_trajectory_csv(
        &net.trajectory,
        m,
        create(&args.out_dir, &format!("{label}.trajectory.csv"))?,
    )
    .map_err(invalid)?;
    write_rates_csv(
        &net.trajectory,
        m,
        create(&args.out_dir, &format!("{label}.rates.csv"))?,
    )
    .map_err(invalid)?;
    println!(
        "seed {}: {} species, {} reactions, {} steps of {} (exact Euler)",
        args.seed,
        m.n_species(),
        m.n_reactions(),
        net.trajectory.n_steps(),
        net.trajectory.delta(0)
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Select(a) => cmd_select(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Compare(a) => cmd_compare(a),
        Command::GenTestnet(a) => cmd_gen_testnet(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
