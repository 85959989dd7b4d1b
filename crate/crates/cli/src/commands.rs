//! One function per subcommand. Each loads the configuration, runs the
//! core-library entry point, prints a short summary to stderr, and writes
//! the output document via [`emit`].

use std::path::Path;
use std::sync::Arc;

use netwave::{
    estimate_rate, parse_config, parse_network, realization_rng, run_control_study,
    run_forward_study, to_csv, to_json, validate_lemma41, validate_lemma42, BatchScheme,
    ControlMode, Discretization, Dynamics, ExperimentConfig, Graph, LemmaReport, Signal,
    Simulator, StudyOutput, TimeGrid, TrackingProblem, ValidationError,
};

use crate::emit::{
    control_document, lemma_document, trajectory_document, write_document, LemmaRow, ParseReport,
    RunReport,
};
use crate::{
    CliError, LemmaArgs, OcpArgs, ParseCheckArgs, RbmSimulateArgs, RocpArgs, SimulateArgs,
    StudyArgs,
};

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn document_base(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = read_text(path)?;
    parse_config(&text, document_base(path)).map_err(CliError::from)
}

/// Accept either a study configuration (using its network and scheme) or
/// a bare network document.
fn load_network(path: &Path) -> Result<(Arc<Graph>, Option<BatchScheme>), CliError> {
    let text = read_text(path)?;
    match parse_config(&text, document_base(path)) {
        Ok(cfg) => Ok((cfg.graph, cfg.scheme)),
        Err(config_err) => match parse_network(&text) {
            Ok((graph, scheme)) => Ok((Arc::new(graph), scheme)),
            Err(network_err) => Err(CliError::Validation(format!(
                "{} is not a valid study configuration ({config_err}) nor a network document ({network_err})",
                path.display()
            ))),
        },
    }
}

/// Grids for a single run: the first entry of the configuration's `steps`
/// list sets the time step.
fn single_run_grids(cfg: &ExperimentConfig) -> Result<Arc<Discretization>, CliError> {
    let tgrid = TimeGrid::new(cfg.horizon, cfg.steps[0])?;
    Ok(Arc::new(Discretization::new(
        Arc::clone(&cfg.graph),
        tgrid,
        cfg.max_dx,
    )?))
}

fn fixed_signals(cfg: &ExperimentConfig, command: &str) -> Result<Vec<Signal>, CliError> {
    match &cfg.control {
        ControlMode::Signals(signals) => Ok(signals.clone()),
        ControlMode::Optimize => Err(CliError::Validation(format!(
            "this configuration sets control = \"optimize\"; `{command}` needs a fixed control expression (use `ocp` or `rocp` to optimize)"
        ))),
    }
}

fn run_report(traj: &netwave::Trajectory) -> RunReport {
    let disc = traj.disc();
    RunReport {
        horizon: disc.tgrid().horizon(),
        step: disc.tgrid().step(),
        steps: traj.steps(),
        state_size: disc.state_len(),
        wall_seconds: traj.wall_time(),
        final_energy: traj.energy(traj.steps()),
        seed: None,
        rel_w_percent: None,
        rel_y_percent: None,
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.io.config)?;
    let signals = fixed_signals(&cfg, "simulate")?;
    let disc = single_run_grids(&cfg)?;
    let sim = Simulator::new(Arc::clone(&disc), None)?;
    let traj = sim.simulate(Dynamics::Deterministic, &cfg.initial, &signals)?;
    let report = run_report(&traj);
    eprintln!(
        "deterministic run: {} steps of h = {}; wall {:.3e} s; final energy {:.6e}",
        report.steps, report.step, report.wall_seconds, report.final_energy
    );
    let doc = if args.export_trajectory {
        trajectory_document(&traj, args.io.format)
    } else {
        report.render(args.io.format)
    };
    write_document(&args.io.out, &doc)
}

pub fn rbm_simulate(args: &RbmSimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.io.config)?;
    let signals = fixed_signals(&cfg, "rbm-simulate")?;
    let scheme = cfg.scheme()?;
    let disc = single_run_grids(&cfg)?;
    let sim = Simulator::new(Arc::clone(&disc), Some(scheme))?;

    let mut rng = realization_rng(args.seed, 0);
    let realization = scheme.sample_realization(disc.tgrid().steps(), &mut rng);
    let traj = sim.simulate(Dynamics::Randomized(&realization), &cfg.initial, &signals)?;
    let reference = sim.simulate(Dynamics::Deterministic, &cfg.initial, &signals)?;

    let mut report = run_report(&traj);
    report.seed = Some(args.seed);
    match netwave::error_norms(&traj, &reference) {
        Ok(norms) => {
            report.rel_w_percent = Some(100.0 * norms.rel_w);
            report.rel_y_percent = Some(100.0 * norms.rel_y);
            eprintln!(
                "randomized run (seed {}): rel_w {:.2}%, rel_y {:.2}% against the deterministic reference; wall {:.3e} s",
                args.seed,
                100.0 * norms.rel_w,
                100.0 * norms.rel_y,
                report.wall_seconds
            );
        }
        // A zero reference (e.g. zero control and zero initial data) makes
        // the relative error meaningless, not the run a failure.
        Err(netwave::Error::Validation(ValidationError::ZeroReferenceNorm)) => {
            eprintln!(
                "randomized run (seed {}): deterministic reference is identically zero, skipping relative errors; wall {:.3e} s",
                args.seed, report.wall_seconds
            );
        }
        Err(e) => return Err(e.into()),
    }
    let doc = if args.export_trajectory {
        trajectory_document(&traj, args.io.format)
    } else {
        report.render(args.io.format)
    };
    write_document(&args.io.out, &doc)
}

struct ControlRun<'a> {
    cfg: &'a ExperimentConfig,
    command: &'static str,
    seed: Option<u64>,
    export_trajectory: bool,
}

fn solve_control(run: ControlRun<'_>, io: &crate::IoArgs) -> Result<(), CliError> {
    let cfg = run.cfg;
    if !matches!(cfg.control, ControlMode::Optimize) {
        return Err(CliError::Validation(format!(
            "this configuration fixes its control; `{}` needs control = \"optimize\"",
            run.command
        )));
    }
    let target = cfg
        .target
        .as_ref()
        .ok_or_else(|| CliError::Validation("no target field configured".into()))?;
    let disc = single_run_grids(cfg)?;

    // The realization must outlive the dynamics that borrow it.
    let scheme_and_realization = match run.seed {
        Some(seed) => {
            let scheme = cfg.scheme()?;
            let mut rng = realization_rng(seed, 0);
            Some((scheme, scheme.sample_realization(disc.tgrid().steps(), &mut rng)))
        }
        None => None,
    };
    let sim = Simulator::new(
        Arc::clone(&disc),
        scheme_and_realization.as_ref().map(|(s, _)| *s),
    )?;
    let dynamics = match &scheme_and_realization {
        Some((_, realization)) => Dynamics::Randomized(realization),
        None => Dynamics::Deterministic,
    };

    let problem = TrackingProblem {
        simulator: &sim,
        initial: &cfg.initial,
        target,
        alpha: cfg.alpha,
    };
    let solution = problem.solve(dynamics, &cfg.optimizer)?;
    eprintln!(
        "{}: J = {:.6e} (tracking {:.6e}, regularization {:.6e}); {} iterations; converged = {}; dual gradient norm {:.3e}; wall {:.3e} s",
        run.command,
        solution.cost.total,
        solution.cost.tracking,
        solution.cost.regularization,
        solution.iterations,
        solution.converged,
        solution.gradient_norm,
        solution.wall_time
    );

    let doc = if run.export_trajectory {
        let signals = solution.control.to_signals();
        let traj = sim.simulate(dynamics, &cfg.initial, &signals)?;
        trajectory_document(&traj, io.format)
    } else {
        control_document(&solution, cfg.graph.controlled(), io.format)
    };
    write_document(&io.out, &doc)
}

pub fn ocp(args: &OcpArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.io.config)?;
    solve_control(
        ControlRun {
            cfg: &cfg,
            command: "ocp",
            seed: None,
            export_trajectory: args.export_trajectory,
        },
        &args.io,
    )
}

pub fn rocp(args: &RocpArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.io.config)?;
    solve_control(
        ControlRun {
            cfg: &cfg,
            command: "rocp",
            seed: Some(args.seed),
            export_trajectory: args.export_trajectory,
        },
        &args.io,
    )
}

fn apply_study_overrides(cfg: &mut ExperimentConfig, args: &StudyArgs) -> Result<(), CliError> {
    if let Some(seed) = args.seed {
        cfg.study_seed = seed;
    }
    if let Some(realizations) = args.realizations {
        if realizations == 0 {
            return Err(CliError::Validation(
                "realizations must be at least 1".into(),
            ));
        }
        cfg.realizations = realizations;
    }
    Ok(())
}

fn render_study(output: &StudyOutput, format: crate::Format) -> Result<String, CliError> {
    Ok(match format {
        crate::Format::Csv => to_csv(&output.rows)?,
        crate::Format::Json => to_json(&output.rows)?,
    })
}

/// Print least-squares convergence rates for the study's error metrics.
fn report_rates(output: &StudyOutput, metrics: &[&str]) {
    for metric in metrics {
        if let Ok((rate, r_squared)) = estimate_rate(&output.series(metric)) {
            eprintln!("{metric}: rate = {rate:.3} (r^2 = {r_squared:.3})");
        }
    }
}

pub fn study_forward(args: &StudyArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.io.config)?;
    apply_study_overrides(&mut cfg, args)?;
    let study = cfg.forward_study()?;
    eprintln!(
        "forward study: {} step sizes, {} realizations each, seed {}",
        study.steps.len(),
        study.realizations,
        study.study_seed
    );
    let output = run_forward_study(&study)?;
    report_rates(&output, &["rel_w_percent", "rel_y_percent"]);
    let doc = render_study(&output, args.io.format)?;
    write_document(&args.io.out, &doc)
}

pub fn study_control(args: &StudyArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.io.config)?;
    apply_study_overrides(&mut cfg, args)?;
    let study = cfg.control_study()?;
    eprintln!(
        "control study: {} step sizes, {} realizations each, seed {}",
        study.steps.len(),
        study.realizations,
        study.study_seed
    );
    let output = run_control_study(&study)?;
    report_rates(
        &output,
        &["control_h2_percent", "control_l2_percent", "gap_percent"],
    );
    let doc = render_study(&output, args.io.format)?;
    write_document(&args.io.out, &doc)
}

/// Step sizes for the characteristic-deviation checks; both divide the
/// unit tracing window exactly.
const LEMMA_STEPS: [f64; 2] = [0.02, 0.005];
const TRACE_WINDOW: f64 = 1.0;

pub fn validate_lemmas(args: &LemmaArgs) -> Result<(), CliError> {
    let (graph, scheme) = load_network(&args.io.config)?;
    let scheme = scheme.ok_or_else(|| {
        CliError::Validation(
            "no randomization scheme: add a [scheme] table to the document".into(),
        )
    })?;
    let speeds: Vec<f64> = (0..graph.edge_count())
        .map(|e| graph.edge(e).speed)
        .collect();

    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &h in &LEMMA_STEPS {
        for e in 0..graph.edge_count() {
            // Decorrelate the Monte Carlo cells with a splitmix stride.
            let seed = args.seed.wrapping_add(cell.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            cell += 1;
            let length = graph.edge(e).length;
            let push = |rows: &mut Vec<LemmaRow>, lemma, report: &LemmaReport| {
                rows.push(LemmaRow {
                    lemma,
                    edge: e + 1,
                    h,
                    samples: report.samples,
                    lhs: report.lhs_estimate,
                    bound: report.bound,
                    margin: report.margin,
                    std_error: report.std_error,
                });
            };
            let deviation = validate_lemma41(
                &scheme,
                &speeds,
                e,
                length,
                0.0,
                TRACE_WINDOW,
                h,
                args.realizations,
                seed,
            )?;
            push(&mut rows, "lemma41_mean_square", &deviation.mean_square);
            push(&mut rows, "lemma41_fourth_moment", &deviation.fourth_moment);
            let exit = validate_lemma42(
                &scheme,
                &speeds,
                e,
                length,
                0.0,
                TRACE_WINDOW,
                h,
                args.realizations,
                seed.wrapping_add(1),
            )?;
            push(&mut rows, "lemma42_exit_time", &exit);
        }
    }

    let within = rows
        .iter()
        .filter(|row| row.margin >= -3.0 * row.std_error)
        .count();
    eprintln!(
        "{within}/{} bound checks hold within three standard errors",
        rows.len()
    );
    write_document(&args.io.out, &lemma_document(&rows, args.io.format))
}

fn push_network_fields(report: &mut ParseReport, graph: &Graph, scheme: Option<&BatchScheme>) {
    report.push("vertices", graph.vertex_count());
    report.push("edges", graph.edge_count());
    report.push(
        "controlled",
        graph
            .controlled()
            .iter()
            .map(|&v| (v + 1).to_string())
            .collect::<Vec<_>>()
            .join(";"),
    );
    report.push(
        "scheme_subsets",
        scheme.map_or(0, |s| s.subset_count()),
    );
}

pub fn parse_check(args: &ParseCheckArgs) -> Result<(), CliError> {
    let text = read_text(&args.io.config)?;
    let mut report = ParseReport::new();
    match parse_config(&text, document_base(&args.io.config)) {
        Ok(cfg) => {
            report.push("kind", "study configuration");
            push_network_fields(&mut report, &cfg.graph, cfg.scheme.as_ref());
            report.push("horizon", cfg.horizon);
            report.push(
                "steps",
                cfg.steps
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            report.push("max_dx", cfg.max_dx);
            report.push(
                "control",
                match cfg.control {
                    ControlMode::Signals(_) => "fixed signals",
                    ControlMode::Optimize => "optimize",
                },
            );
            report.push("realizations", cfg.realizations);
            report.push("study_seed", cfg.study_seed);
            eprintln!("ok: study configuration");
        }
        Err(config_err) => match parse_network(&text) {
            Ok((graph, scheme)) => {
                report.push("kind", "network");
                push_network_fields(&mut report, &graph, scheme.as_ref());
                eprintln!("ok: network document");
            }
            Err(network_err) => {
                return Err(CliError::Validation(format!(
                    "{} is not a valid study configuration ({config_err}) nor a network document ({network_err})",
                    args.io.config.display()
                )));
            }
        },
    }
    write_document(&args.io.out, &report.render(args.io.format))
}
