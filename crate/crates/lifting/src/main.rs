use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lifting::commands::{self, LiftOptions};
use lifting::formats::{parse_any_protocol, read_text, resolve_gadget, resolve_problem, to_json, write_text, GadgetFile};
use lifting::report::{render_table, ReportFile};
use lifting::spec::parse_spec;
use lifting::Budgets;
use lifting_core::simulate::Mode;

#[derive(Parser)]
#[command(name = "lifting", version, about = "Exact query-to-communication lifting at desk scale")]
struct Cli {
    #[command(flatten)]
    budgets: BudgetArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BudgetArgs {
    /// Largest rectangle side enumerated for discrepancy.
    #[arg(long, global = true)]
    budget_side: Option<u64>,
    /// Largest n accepted by the decision-tree oracle.
    #[arg(long, global = true)]
    budget_dt_n: Option<u32>,
    /// Largest n accepted by the simulations.
    #[arg(long, global = true)]
    budget_sim_n: Option<u32>,
    /// Largest b accepted by the simulations.
    #[arg(long, global = true)]
    budget_sim_b: Option<u32>,
    /// Branch limit of exact enumeration.
    #[arg(long, global = true)]
    budget_branches: Option<u64>,
}

impl BudgetArgs {
    fn apply(&self, mut b: Budgets) -> Result<Budgets> {
        if let Some(v) = self.budget_side {
            b.side = v;
        }
        if let Some(v) = self.budget_dt_n {
            b.dt_n = v;
        }
        if let Some(v) = self.budget_sim_n {
            b.sim.max_n = v;
        }
        if let Some(v) = self.budget_sim_b {
            b.sim.max_b = v;
        }
        if let Some(v) = self.budget_branches {
            b.sim.branches = v;
        }
        b.validate()?;
        Ok(b)
    }

    fn any_sim(&self) -> bool {
        self.budget_sim_n.is_some() || self.budget_sim_b.is_some() || self.budget_branches.is_some()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Gadget analysis.
    Gadget {
        #[command(subcommand)]
        command: GadgetCommand,
    },
    /// Run a simulation of a protocol on one input z.
    Lift(LiftArgs),
    /// Run a corpus spec and report every check.
    Verify(VerifyArgs),
    /// Exact oracles.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
}

#[derive(Subcommand)]
enum GadgetCommand {
    /// Discrepancy, a witness rectangle and the XOR-lemma sandwich.
    Analyze {
        /// Builtin name or gadget file.
        #[arg(value_name = "GADGET", required_unless_present = "gadget")]
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        gadget: Option<String>,
        /// XOR powers to check.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        m: Vec<u32>,
        /// Write the gadget file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Det,
    Rand,
}

#[derive(Args)]
struct LiftArgs {
    #[arg(long)]
    protocol: PathBuf,
    /// Builtin name or gadget file.
    #[arg(long)]
    gadget: String,
    /// The input z as a bit string, coordinate 1 first.
    #[arg(long)]
    z: String,
    #[arg(long, value_enum, default_value = "det")]
    mode: ModeArg,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enumerate every random choice exactly (randomized mode).
    #[arg(long)]
    enumerate: bool,
    /// Write the trace here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Corpus spec file.
    spec: PathBuf,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exact deterministic decision-tree complexity.
    Dt {
        /// Builtin name or problem file.
        #[arg(long)]
        problem: String,
        /// Write the optimal tree here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also build the canonical protocol for this gadget.
        #[arg(long)]
        gadget: Option<String>,
        #[arg(long, requires = "gadget")]
        protocol_out: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let budgets = cli.budgets.apply(Budgets::default())?;
    let here = Path::new("");
    match cli.command {
        Command::Gadget { command: GadgetCommand::Analyze { name, gadget, m, out } } => {
            let which = name.or(gadget).expect("clap requires one");
            let g = resolve_gadget(&which, here)?;
            print!("{}", commands::gadget_analyze(&g, &m, &budgets)?);
            if let Some(p) = out {
                write(&p, &to_json(&GadgetFile::from_gadget(&g)))?;
            }
        }
        Command::Lift(a) => {
            let rp = parse_any_protocol(&read_text(&a.protocol)?).with_context(|| a.protocol.display().to_string())?;
            let g = resolve_gadget(&a.gadget, here)?;
            let opts = LiftOptions {
                z: a.z,
                mode: match a.mode {
                    ModeArg::Det => Mode::Deterministic,
                    ModeArg::Rand => Mode::Randomized,
                },
                eta: a.eta,
                c: a.c,
                h: a.h,
                seed: a.seed,
                enumerate: a.enumerate,
            };
            let (text, trace) = commands::lift(&rp, &g, &opts, &budgets)?;
            print!("{text}");
            if let Some(p) = a.out {
                write(&p, &to_json(&trace))?;
            }
        }
        Command::Verify(a) => {
            let base = a.spec.parent().unwrap_or(here);
            let mut spec = parse_spec(&read_text(&a.spec)?, base).with_context(|| a.spec.display().to_string())?;
            if let Some(s) = a.seed {
                spec.seed = s;
            }
            if cli.budgets.any_sim() {
                if let Some(sim) = &mut spec.simulation {
                    sim.budget = budgets.sim;
                }
            }
            let jobs = a.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            anyhow::ensure!(jobs > 0, "--jobs must be positive");
            let report = commands::verify(&spec, jobs)?;
            print!("{}", render_table(&report));
            if let Some(p) = a.out {
                write(&p, &to_json(&ReportFile::from(&report)))?;
            }
            if !report.success() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Oracle { command: OracleCommand::Dt { problem, out, gadget, protocol_out } } => {
            let prob = resolve_problem(&problem, here)?;
            let g = gadget.map(|g| resolve_gadget(&g, here)).transpose()?;
            let (text, tree, proto) = commands::oracle_dt(&prob, g.as_ref(), &budgets)?;
            print!("{text}");
            if let Some(p) = out {
                write(&p, &to_json(&tree))?;
            }
            if let (Some(p), Some(f)) = (protocol_out, proto) {
                write(&p, &to_json(&f))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
