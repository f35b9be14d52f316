//! `dae` — structural analysis, index reduction, and integration of the
//! built-in differential-algebraic problems.
//!
//! Exit codes: 0 on success, 1 for usage errors (unknown problem, bad
//! flags, invalid selections), 2 for numerical failures. Set `DAE_LOG`
//! (e.g. `DAE_LOG=debug`) for library logging.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use daekit::problems::{find, registry};
use daekit::structural::{sigma_table, StructuralResult};
use daekit::{
    consistent_initialize, rk_integrate, taylor_integrate, validate_dd_spec, DaeSystem, Error,
    IcSpec, IvpConfig, Trajectory,
};

#[derive(Parser)]
#[command(
    name = "dae",
    version,
    about = "Structural analysis, index reduction, and integration of DAE systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in problems.
    List,
    /// Print the signature matrix, offsets, and structural summary.
    Analyze {
        problem: String,
        #[command(flatten)]
        tweaks: Tweaks,
    },
    /// Show the index-reduction plan: state selection and solve stages.
    Reduce {
        problem: String,
        /// State levels to keep per variable, e.g. --dd-spec 2,0,0
        /// (defaults to the automatic selection at the initial point).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        dd_spec: Option<Vec<usize>>,
        #[command(flatten)]
        tweaks: Tweaks,
    },
    /// Integrate a problem and write the trajectory as CSV.
    Solve {
        problem: String,
        /// Local error tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Series order for the taylor method.
        #[arg(long, default_value_t = 15)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, value_enum, default_value_t = Method::Taylor)]
        method: Method,
        /// Largest step size the controller may take.
        #[arg(long)]
        max_h: Option<f64>,
        /// Write the trajectory to this CSV file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print run statistics as a JSON object instead of the CSV.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tweaks: Tweaks,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// Taylor series steps on the augmented system.
    Taylor,
    /// Embedded Runge-Kutta on the dummy-derivative reduced ODE.
    DdRk,
}

#[derive(Args)]
struct Tweaks {
    /// Override a model parameter, e.g. --param g=9.8 (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Pin an initial item, e.g. --ic x=6 or --ic "x'=0" (repeatable);
    /// replaces the default pins.
    #[arg(long = "ic", value_name = "ITEM=VALUE")]
    ics: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("DAE_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::UnknownProblem { name, known } = &e {
                if let Some(best) = closest(name, known) {
                    eprintln!("hint: did you mean '{best}'?");
                }
            }
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::List => list(),
        Command::Analyze { problem, tweaks } => {
            let (dae, sr, _) = setup(&problem, &tweaks)?;
            print!("{}", sigma_table(&sr, dae.names()));
            println!(
                "structural index {}, dof {}, transversal value {}",
                sr.nu, sr.dof, sr.hvt_value
            );
            Ok(())
        }
        Command::Reduce { problem, dd_spec, tweaks } => reduce(&problem, dd_spec, &tweaks),
        Command::Solve { problem, tol, order, t_end, method, max_h, out, json, tweaks } => {
            let (dae, sr, ic) = setup(&problem, &tweaks)?;
            let cfg = IvpConfig { tol, order, t_end, max_h, ..IvpConfig::default() };
            let started = std::time::Instant::now();
            let traj = match method {
                Method::Taylor => taylor_integrate(&dae, &sr, &ic, &cfg)?,
                Method::DdRk => rk_integrate(&dae, &sr, &ic, &cfg)?,
            };
            log::info!(
                "integrated {problem} to t = {t_end} in {:.3} s",
                started.elapsed().as_secs_f64()
            );
            if let Some(path) = &out {
                let file = File::create(path).map_err(|e| {
                    Error::InvalidConfig(format!("cannot create {}: {e}", path.display()))
                })?;
                traj.write_csv(BufWriter::new(file))
                    .map_err(|e| Error::InvalidConfig(format!("write failed: {e}")))?;
            }
            if json {
                println!("{}", stats_json(&problem, method, &cfg, &traj));
            } else if let Some(path) = &out {
                let st = &traj.stats;
                println!(
                    "wrote {} samples to {}; {} steps ({} rejected), {} switches, h in \
                     [{}, {}], {:.3} s",
                    traj.len(),
                    path.display(),
                    st.accepted,
                    st.rejected,
                    st.switches,
                    fmt_h(st.h_min),
                    fmt_h(st.h_max),
                    st.cpu_s
                );
            } else {
                traj.write_csv(std::io::stdout().lock())
                    .map_err(|e| Error::InvalidConfig(format!("write failed: {e}")))?;
            }
            Ok(())
        }
    }
}

fn list() -> Result<(), Error> {
    let mut width = 0;
    for p in registry() {
        width = width.max(p.name.len());
    }
    for p in registry() {
        let dae = (p.build)(&(p.default_params)())?;
        let sr = StructuralResult::analyze(&dae)?;
        println!("{:width$}  n={:<2} dof={:<2}  {}", p.name, dae.n(), sr.dof, p.summary);
    }
    Ok(())
}

fn reduce(problem: &str, dd_spec: Option<Vec<usize>>, tweaks: &Tweaks) -> Result<(), Error> {
    let (dae, sr, ic) = setup(problem, tweaks)?;
    let (_, auto) = consistent_initialize(&dae, &sr, &ic, 0.0, 1e-10)?;
    let given = dd_spec.is_some();
    let delta = match dd_spec {
        Some(d) => {
            validate_dd_spec(&sr, &d).map_err(|v| Error::InvalidDdSpec { reason: v.reason })?;
            d
        }
        None => auto.delta().to_vec(),
    };

    let names = dae.names();
    println!("problem: {problem}");
    print!("variables:");
    for (j, name) in names.iter().enumerate() {
        print!(" {name} (d={})", sr.d[j]);
    }
    println!("\ndof: {}", sr.dof);
    println!(
        "dd-spec: {}{}",
        delta.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
        if given { "" } else { " (auto-selected)" }
    );

    let item = |j: usize, l: usize| format!("{}{}", names[j], "'".repeat(l));
    let mut states = Vec::new();
    let mut rhs = Vec::new();
    let mut algebraic = Vec::new();
    let mut dummies = Vec::new();
    for (j, &dj) in sr.d.iter().enumerate() {
        for l in 0..=dj {
            if l < delta[j] {
                states.push(item(j, l));
            } else if l == delta[j] && l > 0 {
                rhs.push(item(j, l));
            } else if l == 0 {
                algebraic.push(item(j, l));
            } else {
                dummies.push(item(j, l));
            }
        }
    }
    let show = |label: &str, xs: &[String]| {
        println!("{label}: {}", if xs.is_empty() { "(none)".into() } else { xs.join(", ") });
    };
    show("states", &states);
    show("ode right-hand sides", &rhs);
    show("algebraic", &algebraic);
    show("dummy derivatives", &dummies);

    print!("stage solves:");
    let max_d = sr.max_d() as i64;
    for k in -max_d..=0 {
        let m = sr.c.iter().filter(|&&ci| ci as i64 + k >= 0).count();
        print!(" {m}x{m}");
    }
    println!();
    Ok(())
}

fn setup(problem: &str, tweaks: &Tweaks) -> Result<(DaeSystem, StructuralResult, IcSpec), Error> {
    let p = find(problem)?;
    let mut params = (p.default_params)();
    for kv in &tweaks.params {
        let (key, value) = split_kv(kv, "--param")?;
        params = params.set(key, value);
    }
    let dae = (p.build)(&params)?;
    let sr = StructuralResult::analyze(&dae)?;
    let mut ic = (p.default_ics)(&params);
    if !tweaks.ics.is_empty() {
        ic.fixed.clear();
        for kv in &tweaks.ics {
            let (key, value) = split_kv(kv, "--ic")?;
            let (j, l) = parse_item(key, dae.names())?;
            ic.guesses.retain(|((gj, gl), _)| (*gj, *gl) != (j, l));
            ic.fixed.push(((j, l), value));
        }
    }
    Ok((dae, sr, ic))
}

fn split_kv<'a>(kv: &'a str, flag: &str) -> Result<(&'a str, f64), Error> {
    let (key, value) = kv
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("{flag} expects KEY=VALUE, got '{kv}'")))?;
    let value = value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig(format!("{flag} {key}: '{value}' is not a number")))?;
    Ok((key.trim(), value))
}

/// Parse an item name like `x`, `x'`, or `y''` into (variable, level).
fn parse_item(key: &str, names: &[String]) -> Result<(usize, usize), Error> {
    let base = key.trim_end_matches('\'');
    let level = key.len() - base.len();
    match names.iter().position(|n| n == base) {
        Some(j) => Ok((j, level)),
        None => Err(Error::InvalidConfig(format!(
            "unknown item '{key}'; variables are {}",
            names.join(", ")
        ))),
    }
}

fn stats_json(problem: &str, method: Method, cfg: &IvpConfig, traj: &Trajectory) -> String {
    let st = &traj.stats;
    let method = match method {
        Method::Taylor => "taylor",
        Method::DdRk => "dd-rk",
    };
    format!(
        "{{\"problem\":\"{}\",\"method\":\"{}\",\"tol\":{:e},\"t_end\":{:e},\
         \"samples\":{},\"steps\":{},\"rejected\":{},\"switches\":{},\
         \"h_min\":{},\"h_max\":{},\"cpu_s\":{:e}}}",
        problem,
        method,
        cfg.tol,
        cfg.t_end,
        traj.len(),
        st.accepted,
        st.rejected,
        st.switches,
        json_num(st.h_min),
        json_num(st.h_max),
        st.cpu_s
    )
}

fn json_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        "null".to_string()
    }
}

fn fmt_h(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        "-".to_string()
    }
}

/// Nearest known name by edit distance, if convincingly close.
fn closest<'a>(name: &str, known: &'a [String]) -> Option<&'a str> {
    let mut best: Option<(&str, usize)> = None;
    for k in known {
        let d = edit_distance(name, k);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best.filter(|&(_, d)| d <= 3).map(|(k, _)| k)
}

fn edit_distance(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
