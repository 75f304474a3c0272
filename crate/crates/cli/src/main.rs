use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use ringqed::acceptance;
use ringqed::disorder::{analytic_mean_structure, degraded_tuning_range, mean_structure_factor, DisorderSpec};
use ringqed::meanfield::{find_steady_state, SteadyStateOptions};
use ringqed::model::{chain_with_structure_phase, AtomChain, SystemParams};
use ringqed::modes::{decompose_modes, dispersive_estimates, polariton_eigenvalues, PolaritonSpectrum};
use ringqed::oracle::{solve_converged, DEFAULT_CAP, MAX_ATOMS};
use ringqed::routing::{feasible_region, router_figures};
use ringqed::scan::{recipes, run_scan, ScanConfig, ScanTable};
use ringqed::weak_drive::steady_state_fields;
use ringqed::Error;
use serde_json::{json, Value};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "ringqed", version, about = "Atom chains in a driven ring cavity")]
struct Cli {
    /// JSON scan config (spectrum, phase)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file, or a directory for `figures`; stdout if omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random draw
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Overrides of the fixed system parameters, all rates in units of γ.
#[derive(Args, Clone, Default)]
struct ParamArgs {
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    kappa_in: Option<f64>,
    #[arg(long)]
    kappa_other: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_ac: Option<f64>,
    #[arg(long)]
    n_atoms: Option<usize>,
    /// |S|/N of the generated chain
    #[arg(long)]
    s_ratio: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, mut p: SystemParams) -> SystemParams {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.g, self.g);
        set(&mut p.kappa_in, self.kappa_in);
        set(&mut p.kappa_other, self.kappa_other);
        set(&mut p.gamma, self.gamma);
        set(&mut p.epsilon, self.epsilon);
        set(&mut p.delta, self.delta);
        set(&mut p.delta_ac, self.delta_ac);
        p
    }

    fn apply_to_scan(&self, c: &mut ScanConfig) {
        c.fixed.params = self.apply(c.fixed.params);
        if let Some(n) = self.n_atoms {
            c.fixed.chain.n_atoms = n;
        }
        if let Some(s) = self.s_ratio {
            c.fixed.chain.s_ratio = s;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scan: the config file if given, else a built-in recipe
    Spectrum {
        /// Built-in recipe (see `--list`)
        #[arg(long, default_value = "polariton-map-1")]
        recipe: String,
        /// List the built-in recipes
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Mode decomposition and polariton energies of one chain
    Modes {
        /// Explicit positions in λ, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        positions: Option<Vec<f64>>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Router metrics, or the feasible (NC, Δ) region
    Routing {
        #[arg(long)]
        feasible: bool,
        /// Required tuning range
        #[arg(long, default_value_t = 0.9)]
        w: f64,
        /// Largest tolerated photon loss
        #[arg(long, default_value_t = 0.01)]
        loss: f64,
        /// Collective cooperativity; sets g
        #[arg(long)]
        nc: Option<f64>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Output phases against δ
    Phase {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Thermal disorder: mean |S|/N and the degraded router
    Disorder {
        #[arg(long, default_value_t = 20.0)]
        sigma_nm: f64,
        #[arg(long, default_value_t = 780.0)]
        wavelength_nm: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Atoms used for the |S|/N average
        #[arg(long, default_value_t = 100)]
        average_atoms: usize,
        /// Emit the |S|/N against N curve instead
        #[arg(long)]
        curve: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Compare the density-matrix, weak-drive and mean-field solutions
    Validate {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Run every acceptance check; with --out, also write recipe tables
    Figures,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
    Acceptance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::EmptyChain | Error::CapExceeded { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Acceptance(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_ACCEPTANCE)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Spectrum { recipe, list, params } => {
            if *list {
                for name in recipes::BUILTIN {
                    println!("{name}");
                }
                return Ok(());
            }
            let base = recipes::builtin(recipe).ok_or_else(|| Failure::Config(format!("unknown recipe `{recipe}`")))?;
            scan_command(cli, base, params)
        }
        Command::Phase { params } => scan_command(cli, recipes::phase_curves(1.0), params),
        Command::Modes { positions, params } => modes(cli, positions.as_deref(), params),
        Command::Routing {
            feasible,
            w,
            loss,
            nc,
            params,
        } => {
            if *feasible {
                feasibility(cli, *w, *loss)
            } else {
                routing(cli, *nc, params)
            }
        }
        Command::Disorder {
            sigma_nm,
            wavelength_nm,
            samples,
            average_atoms,
            curve,
            params,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let spec = DisorderSpec::from_metres(sigma_nm * 1e-9, wavelength_nm * 1e-9, *samples, seed)?;
            if *curve {
                let mut c = recipes::disorder_curve(*samples, seed);
                c.fixed.disorder.sigma = spec.sigma;
                return emit_table(cli, &run_scan(&c)?);
            }
            disorder(cli, &spec, *average_atoms, params)
        }
        Command::Validate { params } => validate(cli, params),
        Command::Figures => figures(cli),
    }
}

fn load_config(path: &Path) -> Result<ScanConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(ScanConfig::from_json(&text)?)
}

fn scan_command(cli: &Cli, fallback: ScanConfig, params: &ParamArgs) -> Outcome {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => fallback,
    };
    params.apply_to_scan(&mut config);
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    let table = run_scan(&config)?;
    if table.failed_rows() > 0 {
        eprintln!("warning: {} of {} points failed, see the error column", table.failed_rows(), table.rows.len());
    }
    emit_table(cli, &table)
}

fn write_out(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Runtime(e.to_string())),
    }
}

fn table_text(format: Format, table: &ScanTable) -> Result<String, Failure> {
    Ok(match format {
        Format::Csv => table.to_csv_string()?,
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&table.to_json()).expect("json")),
    })
}

fn emit_table(cli: &Cli, table: &ScanTable) -> Outcome {
    write_out(cli, &table_text(cli.format, table)?)
}

/// Records as JSON, or as `key,value` lines for CSV.
fn emit_record(cli: &Cli, value: &Value) -> Outcome {
    let text = match cli.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(value).expect("json")),
        Format::Csv => {
            let mut out = String::from("key,value\n");
            flatten("", value, &mut out);
            out
        }
    };
    write_out(cli, &text)
}

fn flatten(prefix: &str, value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, out);
            }
        }
        other => out.push_str(&format!("{prefix},{}\n", other.to_string().trim_matches('"'))),
    }
}

fn complex(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn chain_from(params: &ParamArgs, positions: Option<&[f64]>) -> Result<AtomChain, Failure> {
    if let Some(p) = positions {
        return Ok(AtomChain::new(p.to_vec()));
    }
    let n = params.n_atoms.unwrap_or(10);
    let ratio = params.s_ratio.unwrap_or(1.0);
    if ratio == 1.0 {
        return Ok(AtomChain::uniform(n, 0.5));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Failure::Config(format!("--s-ratio {ratio} outside [0, 1]")));
    }
    Ok(chain_with_structure_phase(n, ratio * n as f64, 0.0)?)
}

fn modes(cli: &Cli, positions: Option<&[f64]>, args: &ParamArgs) -> Outcome {
    let p = args.apply(SystemParams::default());
    p.validate()?;
    let chain = chain_from(args, positions)?;
    let m = decompose_modes(&p, &chain)?;
    let spectrum = polariton_eigenvalues(&p, &chain)?;
    let s = ringqed::model::structure_factor(&chain);
    let eigen: serde_json::Map<String, Value> = PolaritonSpectrum::labels()
        .iter()
        .zip(spectrum.all())
        .map(|(l, e)| (l.to_string(), complex(e)))
        .collect();
    let mut record = json!({
        "n_atoms": chain.len(),
        "s": complex(s.value),
        "g1": m.g1,
        "g2": m.g2,
        "c1": [complex(m.c1[0]), complex(m.c1[1])],
        "c2": [complex(m.c2[0]), complex(m.c2[1])],
        "c2_node_offset": m.c2_wave().node_offset(),
        "dark_space_dim": m.dark_space_dim,
        "eigenvalues": eigen,
    });
    if p.delta_ac != 0.0 {
        let d = dispersive_estimates(&p, chain.len(), s.magnitude())?;
        record["dispersive"] = serde_json::to_value(d).expect("json");
    }
    emit_record(cli, &record)
}

fn routing(cli: &Cli, nc: Option<f64>, args: &ParamArgs) -> Outcome {
    let n = args.n_atoms.unwrap_or(10);
    let mut p = args.apply(SystemParams::default());
    if let Some(nc) = nc {
        p = p.with_collective_cooperativity(nc, n);
    }
    p.validate()?;
    let f = router_figures(&p, n)?;
    emit_record(
        cli,
        &json!({
            "n_atoms": n,
            "nc": p.collective_cooperativity(n),
            "delta_ac": p.delta_ac,
            "tuning_range": f.tuning_range,
            "n_loss": f.n_loss,
            "argmax_s_loss": f.argmax_s_loss,
        }),
    )
}

fn feasibility(cli: &Cli, w: f64, loss: f64) -> Outcome {
    if !(w > 0.0 && w < 1.0) || !(loss > 0.0 && loss < 1.0) {
        return Err(Failure::Config("--w and --loss must lie in (0, 1)".into()));
    }
    let region = feasible_region(w, loss)?;
    let summary = format!(
        "minimal NC = {:.2} at delta/gamma = {:.2} (W >= {w}, n_loss <= {loss})",
        region.min_nc, region.window_at_min.delta_min
    );
    match &cli.out {
        // the boundary goes to the file, the headline to stdout
        Some(path) => {
            let text = match cli.format {
                Format::Csv => {
                    let mut s = String::from("nc[1],delta_min[gamma],delta_max[gamma]\n");
                    for b in &region.boundary {
                        s.push_str(&format!("{},{},{}\n", b.nc, b.delta_min, b.delta_max));
                    }
                    s
                }
                Format::Json => serde_json::to_string_pretty(&region).expect("json") + "\n",
            };
            fs::write(path, text).map_err(|e| io_failure(path, e))?;
            println!("{summary}");
            Ok(())
        }
        None => {
            println!("{summary}");
            Ok(())
        }
    }
}

fn disorder(cli: &Cli, spec: &DisorderSpec, average_atoms: usize, args: &ParamArgs) -> Outcome {
    let n = args.n_atoms.unwrap_or(10);
    let p = args.apply(SystemParams::default());
    p.validate()?;
    let mean = mean_structure_factor(average_atoms, spec)?;
    let router = degraded_tuning_range(&p, n, spec)?;
    let w_at_mean = ringqed::disorder::tuning_range_at(&p, n, mean.mean * n as f64)?;
    emit_record(
        cli,
        &json!({
            "sigma_lambda": spec.sigma,
            "samples": spec.samples,
            "seed": spec.seed,
            "average_atoms": average_atoms,
            "mean_s_ratio": mean.mean,
            "std_error": mean.std_error,
            "large_n_limit": analytic_mean_structure(spec.sigma),
            "router_atoms": n,
            "w_clean": router.w_clean,
            "w_at_mean_s": w_at_mean,
            "w_sampled": router.w_monte_carlo,
        }),
    )
}

fn validate(cli: &Cli, args: &ParamArgs) -> Outcome {
    let n = args.n_atoms.unwrap_or(1);
    if n > MAX_ATOMS {
        return Err(Failure::Config(format!("the density-matrix check handles at most {MAX_ATOMS} atoms")));
    }
    let p = args.apply(SystemParams::default());
    p.validate()?;
    let chain = chain_from(&ParamArgs { n_atoms: Some(n), ..args.clone() }, None)?;
    let oracle = solve_converged(&p, &chain, 2, DEFAULT_CAP)?;
    let linear = steady_state_fields(&p, &chain)?;
    let mean_field = find_steady_state(&p, &chain, &SteadyStateOptions::default())?.state;
    let e = &oracle.expectations;
    let rel = |a: Complex64, b: Complex64| if b.norm() == 0.0 { a.norm() } else { (a - b).norm() / b.norm() };
    let vs_linear = rel(linear.a_plus, e.a_plus).max(rel(linear.a_minus, e.a_minus));
    let vs_mean_field = rel(mean_field.a_plus, e.a_plus).max(rel(mean_field.a_minus, e.a_minus));
    let passed = vs_linear < 0.01;
    emit_record(
        cli,
        &json!({
            "n_atoms": n,
            "epsilon": p.epsilon,
            "fock_cutoff": oracle.fock_cutoff,
            "oracle": { "a_plus": complex(e.a_plus), "a_minus": complex(e.a_minus) },
            "weak_drive": { "a_plus": complex(linear.a_plus), "a_minus": complex(linear.a_minus) },
            "mean_field": { "a_plus": complex(mean_field.a_plus), "a_minus": complex(mean_field.a_minus) },
            "max_relative_deviation_weak_drive": vs_linear,
            "max_relative_deviation_mean_field": vs_mean_field,
        }),
    )?;
    eprintln!("max relative deviation {vs_linear:.3e} (weak drive), {vs_mean_field:.3e} (mean field)");
    if passed {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!(
            "weak-drive solution deviates from the density matrix by {:.2}% (> 1%)",
            100.0 * vs_linear
        )))
    }
}

fn figures(cli: &Cli) -> Outcome {
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        for name in recipes::BUILTIN {
            let mut config = recipes::builtin(name).expect("listed recipe");
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let table = run_scan(&config)?;
            let ext = if cli.format == Format::Csv { "csv" } else { "json" };
            let path = dir.join(format!("{name}.{ext}"));
            fs::write(&path, table_text(cli.format, &table)?).map_err(|e| io_failure(&path, e))?;
        }
    }
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        return Err(Failure::Acceptance(format!("{failed} acceptance criteria failed")));
    }
    Ok(())
}
