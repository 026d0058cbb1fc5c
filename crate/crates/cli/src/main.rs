//! `qphi`: integrated information of quantum states from the command line.
//!
//! States travel as QSTATE JSON, so commands compose through pipes:
//! `qphi gen bell | qphi phi`.

mod units;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qphi::blanket;
use qphi::dendrogram::{self, Dendrogram};
use qphi::observer::{self, ChannelFamily, GridSpec, SearchConfig};
use qphi::verify::{self, SuiteConfig};
use qphi::{generators, io as qio, witness, Bipartition, DensityMatrix, ErrorClass, Mode, PhiConfig, SubsystemLayout};
use serde_json::{json, Value};

use units::Units;

#[derive(Parser, Debug)]
#[command(name = "qphi", version, about = "Quantum integrated information: Φ, cuts, witnesses, dendrograms, observers, blankets")]
struct Cli {
    /// Units for displayed divergences.
    #[arg(long, value_enum, global = true, default_value = "nats")]
    units: Units,
    /// Feasible product-state set for Φ.
    #[arg(long, value_enum, global = true, default_value = "marginal")]
    mode: ModeArg,
    /// Largest subsystem count searched exhaustively.
    #[arg(long, global = true, default_value_t = qphi::phi::DEFAULT_N_CAP)]
    n_cap: usize,
    /// Values within this of the minimum count as tied cuts.
    #[arg(long, global = true, default_value_t = qphi::phi::DEFAULT_TIE_TOL)]
    tie_tol: f64,
    /// Root seed (default 0); every component derives its own stream
    /// from it. Overrides the seed of a `verify --config` file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Marginal,
    Optimized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StateName {
    Bell,
    Ghz,
    W,
    Haar,
    Ginibre,
    Product,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TreeFormat {
    Json,
    Newick,
    Dot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Dephasing,
    Depolarizing,
    PartialTrace,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a named state as QSTATE JSON.
    Gen {
        #[arg(value_enum)]
        name: StateName,
        /// Qubit count for ghz and w.
        n: Option<usize>,
        /// Subsystem dimensions for random states, e.g. 2,2,3.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        dims: Vec<usize>,
        /// Rank of ginibre states (default: full).
        #[arg(long)]
        rank: Option<usize>,
        /// One side of the factorizing cut for product states.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        side: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Φ, optimal cut and closest product state.
    Phi {
        input: Option<PathBuf>,
        /// Include the divergence of every cut.
        #[arg(long)]
        per_cut: bool,
    },
    /// Recursive integration dendrogram.
    Dendrogram {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: TreeFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Difference witness σ* − ρ and a product-state scan.
    Witness {
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Max-Φ observer search over a channel family, or a grid spectrum.
    Observe {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "dephasing")]
        family: FamilyArg,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Grid axes `params:lo:hi:points`, separated by `;`. Switches to
        /// spectrum mode.
        #[arg(long)]
        grid: Option<String>,
        /// Include every evaluation in the output.
        #[arg(long)]
        trace: bool,
    },
    /// Petz-recovery blanket scan over all subsets of a size.
    Blanket {
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        size: usize,
    },
    /// Apply a channel (channel JSON) to a state.
    Apply {
        input: Option<PathBuf>,
        #[arg(long)]
        channel: PathBuf,
        /// Output subsystem dimensions when the channel changes dimension.
        #[arg(long, value_delimiter = ',')]
        out_dims: Option<Vec<usize>>,
    },
    /// Run the property suite; exits 1 if an asserted check fails.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<qphi::Error> for Failure {
    fn from(e: qphi::Error) -> Self {
        let code = match e.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Numeric => 3,
            ErrorClass::Budget => 4,
        };
        Self { code, message: e.to_string() }
    }
}

fn validation(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn read_input(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).map_err(|e| validation(format!("cannot read {}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| validation(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn read_state(path: Option<&Path>) -> Result<DensityMatrix, Failure> {
    Ok(qio::read_qstate(&read_input(path)?)?)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(stdout, "{text}");
            Ok(())
        }
    }
}

fn emit_json(v: &Value, out: Option<&Path>) -> Result<(), Failure> {
    emit(&serde_json::to_string_pretty(v).expect("JSON values serialize"), out)
}

impl Cli {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn phi_config(&self) -> Result<PhiConfig, Failure> {
        if self.n_cap < 2 {
            return Err(validation("--n-cap must be at least 2"));
        }
        if !(self.tie_tol >= 0.0) {
            return Err(validation("--tie-tol must be non-negative"));
        }
        let mode = match self.mode {
            ModeArg::Marginal => Mode::Marginal,
            ModeArg::Optimized => Mode::Optimized,
        };
        let mut cfg = PhiConfig { mode, n_cap: self.n_cap, tie_tol: self.tie_tol, ..PhiConfig::default() };
        cfg.refine.seed = qphi::rng::substream(self.seed(), "refine");
        Ok(cfg)
    }

    fn output(&self, v: Value) -> Value {
        let mut v = self.units.convert(v);
        if let Value::Object(map) = &mut v {
            map.insert("units".into(), json!(self.units.name()));
        }
        v
    }
}

fn gen(cli: &Cli, name: StateName, n: Option<usize>, dims: &[usize], rank: Option<usize>, side: &[usize]) -> Result<DensityMatrix, Failure> {
    let need_n = || n.ok_or_else(|| validation("ghz and w need a qubit count, e.g. `gen ghz 3`"));
    let layout = || SubsystemLayout::new(dims.to_vec()).map_err(Failure::from);
    Ok(match name {
        StateName::Bell => generators::bell(),
        StateName::Ghz => generators::ghz(need_n()?)?,
        StateName::W => generators::w(need_n()?)?,
        StateName::Haar => generators::haar_pure(&layout()?, cli.seed()),
        StateName::Ginibre => {
            let layout = layout()?;
            let rank = rank.unwrap_or(layout.total_dim());
            generators::ginibre_mixed(&layout, rank, cli.seed())?
        }
        StateName::Product => {
            let layout = layout()?;
            let cut = Bipartition::new(side, layout.n())?;
            generators::random_product(&layout, &cut, cli.seed())?
        }
    })
}

fn scaled_tree(d: &Dendrogram, scale: f64) -> Dendrogram {
    fn walk(node: &mut dendrogram::DendrogramNode, scale: f64) {
        node.phi_internal = node.phi_internal.map(|p| qphi::DivergenceValue::from_nats(p.nats() * scale));
        if let Some(children) = node.split.as_deref_mut() {
            children.iter_mut().for_each(|c| walk(c, scale));
        }
    }
    let mut d = d.clone();
    walk(&mut d.root, scale);
    d
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Gen { name, n, dims, rank, side, out } => {
            let rho = gen(cli, *name, *n, dims, *rank, side)?;
            emit(&qio::write_qstate(&rho), out.as_deref())?;
        }
        Command::Phi { input, per_cut } => {
            let rho = read_state(input.as_deref())?;
            let r = qphi::phi(&rho, &cli.phi_config()?)?;
            let mut v = r.to_json(*per_cut);
            v["sigma_star"] = qio::qstate_value(&r.sigma_star);
            emit_json(&cli.output(v), None)?;
        }
        Command::Dendrogram { input, format, out } => {
            let rho = read_state(input.as_deref())?;
            let d = dendrogram::build(&rho, &cli.phi_config()?)?;
            let shown = scaled_tree(&d, cli.units.scale());
            let text = match format {
                TreeFormat::Json => shown.to_json(),
                TreeFormat::Newick => shown.to_newick(),
                TreeFormat::Dot => shown.to_dot(),
            };
            emit(text.trim_end(), out.as_deref())?;
        }
        Command::Witness { input, samples } => {
            let rho = read_state(input.as_deref())?;
            let r = qphi::phi(&rho, &cli.phi_config()?)?;
            let w = witness::build_witness(&rho, &r);
            let claims = witness::claim_record(&w, &rho, &r.sigma_star)?;
            let scan = witness::product_state_scan(&w, *samples, qphi::rng::substream(cli.seed(), "witness"))?;
            let v = json!({
                "witness": witness::WitnessJson::from(&w),
                "eigenvalues": w.eigenvalues(),
                "trace": w.trace(),
                "claims": claims,
                "scan": scan.to_json(),
            });
            emit_json(&cli.output(v), None)?;
        }
        Command::Observe { input, family, budget, restarts, grid, trace } => {
            let rho = read_state(input.as_deref())?;
            let fam = match family {
                FamilyArg::Dephasing => ChannelFamily::local_dephasing(rho.layout())?,
                FamilyArg::Depolarizing => ChannelFamily::local_depolarizing(rho.layout()),
                FamilyArg::PartialTrace => ChannelFamily::partial_trace(rho.layout()),
            };
            let v = match grid {
                Some(spec) => {
                    let s = observer::observer_spectrum(&rho, &fam, &GridSpec::parse(spec)?)?;
                    serde_json::to_value(&s).expect("plain data serializes")
                }
                None => {
                    let search = SearchConfig {
                        budget: *budget,
                        restarts: *restarts,
                        seed: qphi::rng::substream(cli.seed(), "observer"),
                        report_mode: cli.phi_config()?.mode,
                    };
                    observer::maximize_phi(&rho, &fam, &search)?.to_json(*trace)
                }
            };
            emit_json(&cli.output(v), None)?;
        }
        Command::Blanket { input, size } => {
            let rho = read_state(input.as_deref())?;
            let r = blanket::blanket_scan(&rho, *size, &cli.phi_config()?)?;
            emit_json(&cli.output(r.to_json()), None)?;
        }
        Command::Apply { input, channel, out_dims } => {
            let rho = read_state(input.as_deref())?;
            let ch = qio::read_channel(&read_input(Some(channel))?)?;
            let layout = out_dims.clone().map(SubsystemLayout::new).transpose()?;
            let out = ch.apply(&rho, layout)?;
            emit(&qio::write_qstate(&out), None)?;
        }
        Command::Verify { config, out } => {
            let mut cfg = match config {
                Some(p) => SuiteConfig::from_json(&read_input(Some(p))?)?,
                None => SuiteConfig::default(),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let report = verify::run_suite(&cfg)?;
            emit(&report.to_json(), out.as_deref())?;
            if !report.overall_pass {
                for f in report.failures() {
                    eprintln!("qphi: check {} failed (worst violation {:e})", f.name, f.worst_violation);
                }
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match qphi::with_threads(cli.threads, || run(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("qphi: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
