//! Subcommand pipelines. Each one writes its files under the output
//! directory, a `summary.txt` with `key = value` lines, and echoes the
//! summary on stdout.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bidomain::adjoint::run_adjoint;
use bidomain::control::{history_csv, projected_gradient_descent, StopReason};
use bidomain::forward::{run_forward, simulate, SystemKind};
use bidomain::grid::{write_csv, write_series, Grid, NormReport};
use bidomain::verify::{
    adjoint_apriori_check, apriori_check, convergence_study, gradient_check, monodomain_limit_check,
    regularity_monitor, smooth_direction, stability_experiment, Verdict,
};

use crate::config::{parse_config, RunConfig};
use crate::error::{CliError, CliResult};

/// Relative agreement required from `gradcheck`.
pub const GRADCHECK_TOL: f64 = 1e-4;
/// Relative `C⁰L²` discrepancy accepted by `verify-limit`.
pub const LIMIT_TOL: f64 = 1e-8;
/// Largest max/median ratio spread accepted by `verify-stability`.
pub const STABILITY_SPREAD: f64 = 2.0;
pub const GRADCHECK_DIRECTIONS: usize = 5;

#[derive(Debug, Parser)]
#[command(name = "bidomain", version, about = "Monodomain/bidomain simulation, adjoints and optimal control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Run description (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for random directions; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward solve: snapshots of Φ_tr, Φ_e, W and the norm report.
    Simulate(Common),
    /// Forward and adjoint solve for the configured cost.
    Adjoint(Common),
    /// Projected gradient descent on I_e.
    Optimize(Common),
    /// Solution differences against dyadically scaled control perturbations.
    VerifyStability {
        #[command(flatten)]
        common: Common,
        /// Comma-separated perturbation scales.
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
        scales: Vec<f64>,
    },
    /// Bidomain against monodomain for proportional tensors.
    VerifyLimit(Common),
    /// Observed spatial and temporal orders by self-convergence.
    VerifyConvergence {
        #[command(flatten)]
        common: Common,
        /// Number of grids, each refining the previous one by two.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Adjoint gradient against central differences.
    Gradcheck(Common),
    /// Norm reports, a-priori ratios and the regularity monitor.
    Report(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c)
            | Command::Adjoint(c)
            | Command::Optimize(c)
            | Command::VerifyLimit(c)
            | Command::Gradcheck(c)
            | Command::Report(c) => c,
            Command::VerifyStability { common, .. } | Command::VerifyConvergence { common, .. } => common,
        }
    }
}

/// Collects `key = value` lines and writes them to `summary.txt`.
struct Summary {
    text: String,
}

impl Summary {
    fn new(command: &str) -> Self {
        Summary {
            text: format!("command = {command}\n"),
        }
    }

    fn put(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    fn verdict(&mut self, name: &str, pass: bool, value: f64, tol: f64) {
        let word = if pass { "PASS" } else { "FAIL" };
        self.put(name, format!("{word} ({value:.3e} against {tol:e})"));
    }
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| CliError::new("E_IO", format!("{}: {e}", p.display())))
    }

    fn write_report(&self, name: &str, r: &NormReport) -> CliResult<()> {
        self.write_text(name, &(r.to_json() + "\n"))
    }
}

fn prepare(common: &Common, err: &mut impl Write) -> CliResult<Run> {
    let cfg = parse_config(&common.config)?;
    for w in cfg.warnings()? {
        let _ = writeln!(err, "warning: {w}");
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&out).map_err(|e| CliError::new("E_IO", format!("{}: {e}", out.display())))?;
    let seed = common.seed.unwrap_or(cfg.seed);
    Ok(Run { cfg, out, seed })
}

/// Runs one subcommand, writing the summary to `stdout` and warnings to
/// stderr.
pub fn run(cli: &Cli, stdout: &mut impl Write) -> CliResult<()> {
    let mut stderr = std::io::stderr().lock();
    let run = prepare(cli.command.common(), &mut stderr)?;
    let summary = match &cli.command {
        Command::Simulate(_) => cmd_simulate(&run)?,
        Command::Adjoint(_) => cmd_adjoint(&run)?,
        Command::Optimize(_) => cmd_optimize(&run)?,
        Command::VerifyStability { scales, .. } => cmd_stability(&run, scales)?,
        Command::VerifyLimit(_) => cmd_limit(&run)?,
        Command::VerifyConvergence { levels, .. } => cmd_convergence(&run, *levels)?,
        Command::Gradcheck(_) => cmd_gradcheck(&run)?,
        Command::Report(_) => cmd_report(&run)?,
    };
    run.write_text("summary.txt", &summary.text)?;
    stdout.write_all(summary.text.as_bytes())?;
    Ok(())
}

fn describe(s: &mut Summary, run: &Run) -> CliResult<Grid> {
    let g = run.cfg.grid()?;
    s.put("system", format!("{:?}", run.cfg.model.kind).to_lowercase());
    s.put("ionic", run.cfg.model.ionic.name());
    s.put("nodes", g.n_nodes());
    s.put("steps", g.n_steps());
    Ok(g)
}

fn put_report(s: &mut Summary, prefix: &str, r: &NormReport) {
    for (k, v) in r.iter() {
        s.put(&format!("{prefix}{k}"), format!("{v:e}"));
    }
}

fn cmd_simulate(run: &Run) -> CliResult<Summary> {
    let mut s = Summary::new("simulate");
    let g = describe(&mut s, run)?;
    let problem = run.cfg.problem()?;
    let (traj, report) = run_forward(&problem)?;
    write_series(&run.path("phi_tr.bdmf"), &traj.phi_tr)?;
    write_series(&run.path("w.bdmf"), &traj.w)?;
    if problem.kind() == SystemKind::Bidomain {
        write_series(&run.path("phi_e.bdmf"), &traj.phi_e)?;
    }
    write_csv(&run.path("phi_tr_final.csv"), traj.phi_tr.frame(g.n_steps()))?;
    run.write_report("norms.json", &report)?;
    put_report(&mut s, "", &report);
    Ok(s)
}

fn cmd_adjoint(run: &Run) -> CliResult<Summary> {
    let mut s = Summary::new("adjoint");
    describe(&mut s, run)?;
    let cp = run.cfg.control_problem()?;
    let (j, traj) = cp.cost_of(cp.config.i_e())?;
    let (adj, report) = run_adjoint(&traj, &cp.config, &cp.cost)?;
    write_series(&run.path("p1.bdmf"), &adj.p1)?;
    write_series(&run.path("p3.bdmf"), &adj.p3)?;
    if cp.kind() == SystemKind::Bidomain {
        write_series(&run.path("p2.bdmf"), &adj.p2)?;
    }
    let (_, grad) = cp.cost_and_gradient(cp.config.i_e())?;
    write_series(&run.path("gradient.bdmf"), &grad)?;
    run.write_report("adjoint_norms.json", &report)?;
    s.put("J", format!("{j:e}"));
    s.put("gradient_norm", format!("{:e}", grad.inner(&grad).sqrt()));
    put_report(&mut s, "", &report);
    Ok(s)
}

fn cmd_optimize(run: &Run) -> CliResult<Summary> {
    let mut s = Summary::new("optimize");
    describe(&mut s, run)?;
    let cp = run.cfg.control_problem()?;
    let res = projected_gradient_descent(&cp)?;
    run.write_text("history.csv", &history_csv(&res.history))?;
    write_series(&run.path("control.bdmf"), &res.control)?;
    let first = res.history.first().expect("history has the initial record");
    let last = res.history.last().expect("history has the initial record");
    s.put("iterations", last.iter);
    s.put("J_initial", format!("{:e}", first.cost));
    s.put("J_final", format!("{:e}", last.cost));
    s.put("gradient_norm", format!("{:e}", last.grad_norm));
    s.put("control_norm", format!("{:e}", res.control.inner(&res.control).sqrt()));
    let reason = match res.reason {
        StopReason::Gradient => "gradient",
        StopReason::CostStalled => "cost-stalled",
        StopReason::Budget => "budget",
    };
    s.put("stop", reason);
    Ok(s)
}

fn cmd_stability(run: &Run, scales: &[f64]) -> CliResult<Summary> {
    let mut s = Summary::new("verify-stability");
    let g = describe(&mut s, run)?;
    let problem = run.cfg.problem()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let d_i = smooth_direction(&g, &mut rng);
    let d_e = smooth_direction(&g, &mut rng);
    let rep = stability_experiment(&problem, &d_i, &d_e, scales)?;
    run.write_text("stability.csv", &rep.to_csv())?;
    s.put("seed", run.seed);
    s.put("fitted_c", format!("{:e}", rep.fitted_c));
    s.verdict("stability", rep.spread <= STABILITY_SPREAD, rep.spread, STABILITY_SPREAD);
    Ok(s)
}

fn cmd_limit(run: &Run) -> CliResult<Summary> {
    let mut s = Summary::new("verify-limit");
    describe(&mut s, run)?;
    let problem = run.cfg.problem_as(SystemKind::Bidomain)?;
    s.put("lambda", problem.ops().lambda());
    let d = monodomain_limit_check(&problem)?;
    run.write_text("limit.csv", &format!("lambda,discrepancy\n{:e},{:e}\n", problem.ops().lambda(), d))?;
    s.verdict("limit", d <= LIMIT_TOL, d, LIMIT_TOL);
    Ok(s)
}

fn cmd_convergence(run: &Run, levels: usize) -> CliResult<Summary> {
    let mut s = Summary::new("verify-convergence");
    let g = describe(&mut s, run)?;
    let cfg = &run.cfg;
    let build = |grid: Grid| cfg.problem_on(grid).map_err(|e| bidomain::Error::Config(e.message));
    let (space, time) = convergence_study(&build, g, levels)?;
    run.write_text("convergence_space.csv", &space.to_csv())?;
    run.write_text("convergence_time.csv", &time.to_csv())?;
    for (name, study) in [("space_order", &space), ("time_order", &time)] {
        match &study.verdict {
            Verdict::Order(p) => s.put(name, format!("{p:.3}")),
            Verdict::Inconclusive(why) => s.put(name, format!("inconclusive ({why})")),
        }
    }
    Ok(s)
}

fn cmd_gradcheck(run: &Run) -> CliResult<Summary> {
    let mut s = Summary::new("gradcheck");
    describe(&mut s, run)?;
    let cp = run.cfg.control_problem()?;
    let chk = gradient_check(&cp, cp.config.i_e(), GRADCHECK_DIRECTIONS, run.seed)?;
    let mut csv = String::from("direction,adjoint,finite_difference,step,relative_error\n");
    for (i, d) in chk.directions.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{:e},{:e},{:e},{:e}",
            d.adjoint, d.finite_difference, d.step, d.relative_error
        );
    }
    run.write_text("gradcheck.csv", &csv)?;
    s.put("seed", run.seed);
    s.verdict(
        "gradcheck",
        chk.max_relative_error <= GRADCHECK_TOL,
        chk.max_relative_error,
        GRADCHECK_TOL,
    );
    Ok(s)
}

fn cmd_report(run: &Run) -> CliResult<Summary> {
    let mut s = Summary::new("report");
    let g = describe(&mut s, run)?;
    let cp = run.cfg.control_problem()?;
    let (traj, fwd) = run_forward(&cp.config)?;
    let (adj, adj_report) = run_adjoint(&traj, &cp.config, &cp.cost)?;
    run.write_report("norms.json", &fwd)?;
    run.write_report("adjoint_norms.json", &adj_report)?;
    put_report(&mut s, "", &fwd);
    put_report(&mut s, "", &adj_report);

    let fine_grid = Grid::new(
        &g.nodes_per_axis().iter().map(|n| 2 * n - 1).collect::<Vec<_>>(),
        g.lengths(),
        g.t_final(),
        2 * g.n_steps(),
    )?;
    let fine_cp = run.cfg.control_problem_on(fine_grid)?;
    let fine_traj = simulate(&fine_cp.config)?;
    let fine_adj = bidomain::adjoint::solve_adjoint(&fine_traj, &fine_cp.config, &fine_cp.cost)?;

    let mut csv = String::from("estimate,level,lhs,rhs,ratio\n");
    for (level, cp_l, tr, ad) in [("coarse", &cp, &traj, &adj), ("refined", &fine_cp, &fine_traj, &fine_adj)] {
        let f = apriori_check(tr, &cp_l.config)?;
        let a = adjoint_apriori_check(ad, tr, &cp_l.config, &cp_l.cost)?;
        let _ = writeln!(csv, "forward,{level},{:e},{:e},{:e}", f.lhs, f.rhs, f.ratio);
        let _ = writeln!(csv, "adjoint,{level},{:e},{:e},{:e}", a.lhs, a.rhs, a.ratio);
        s.put(&format!("apriori.forward.{level}"), format!("{:e}", f.ratio));
        s.put(&format!("apriori.adjoint.{level}"), format!("{:e}", a.ratio));
    }
    run.write_text("apriori.csv", &csv)?;

    let reg = regularity_monitor(&traj, &fine_traj, &[cp.config.i_i(), cp.config.i_e()]);
    run.write_text(
        "regularity.csv",
        &format!(
            "control_l4_l2,coarse,refined,ratio\n{:e},{:e},{:e},{:e}\n",
            reg.control_l4_l2, reg.coarse, reg.refined, reg.ratio
        ),
    )?;
    s.put("regularity.l4_h1.coarse", format!("{:e}", reg.coarse));
    s.put("regularity.l4_h1.refined", format!("{:e}", reg.refined));
    s.put("regularity", if reg.pass { "bounded" } else { "growing" });
    Ok(s)
}
