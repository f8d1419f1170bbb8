use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracinv::cli::{self, presets, verify, ConfigLayer, SourceTerm, Tolerance};
use fracinv::discretization::TimeGrid;
use fracinv::forward::solve_forward;
use fracinv::{Error, Result};

#[derive(Parser)]
#[command(name = "fracinv", version, about = "Inverse source reconstruction for time-fractional diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem for `f_true` and dump u as CSV.
    Forward {
        #[command(flatten)]
        settings: Settings,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one reconstruction.
    Reconstruct {
        #[command(flatten)]
        settings: Settings,
    },
    /// Reproduce a table of the numerical section.
    Table {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        id: u8,
        #[command(flatten)]
        settings: Settings,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the oracle suite.
    Verify,
}

/// Configuration sources; flags override the file, which overrides the preset.
#[derive(Args)]
struct Settings {
    /// TOML file with the flat configuration schema.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named experiment: ex51a, ex51b, ex52, ex53a, ex53b, ex54.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Nodes per axis.
    #[arg(long)]
    nodes: Option<usize>,
    /// Time steps.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Preset name or expression in x (1D) or x1, x2 (2D).
    #[arg(long)]
    f_true: Option<String>,
    /// Observation box, repeatable: "a,b" in 1D or "a1,b1,a2,b2" in 2D.
    #[arg(long, value_delimiter = ';')]
    omega: Vec<String>,
    /// Observe everything outside this box ("a1,b1,a2,b2").
    #[arg(long)]
    omega_complement: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Use `m` verbatim even when it is below 1.2 × the operator-norm estimate.
    #[arg(long)]
    no_m_safeguard: bool,
    /// Number or rule such as "delta/3".
    #[arg(long)]
    eps: Option<Tolerance>,
    #[arg(long)]
    f0: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Directory for CSV artifacts.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{s}` is not a comma-separated list of numbers")))
        })
        .collect()
}

impl Settings {
    fn layer(&self) -> Result<ConfigLayer> {
        let mut layer = match &self.preset {
            Some(name) => {
                presets::experiment(name)
                    .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?
                    .0
            }
            None => ConfigLayer::default(),
        };
        if let Some(path) = &self.config {
            layer = layer.merged(&ConfigLayer::from_file(path)?);
        }
        let flags = ConfigLayer {
            dim: self.dim,
            nodes: self.nodes,
            steps: self.steps,
            t_end: self.t_end,
            alpha: self.alpha,
            f_true: self.f_true.clone(),
            omega: if self.omega.is_empty() {
                None
            } else {
                Some(self.omega.iter().map(|s| numbers(s)).collect::<Result<_>>()?)
            },
            omega_complement: self.omega_complement.as_deref().map(numbers).transpose()?,
            delta: self.delta,
            seed: self.seed,
            rho: self.rho,
            m: self.m,
            m_safeguard: self.no_m_safeguard.then_some(false),
            eps: self.eps,
            f0: self.f0,
            max_iter: self.max_iter,
            output: self.output.clone(),
        };
        Ok(layer.merged(&flags))
    }
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn forward(settings: &Settings, out: &Option<PathBuf>) -> Result<()> {
    let l = settings.layer()?;
    let dim = l.dim.unwrap_or(1);
    let alpha = l.alpha.ok_or_else(|| Error::Config("`alpha` is required".into()))?;
    let f_true = l.f_true.as_deref().ok_or_else(|| Error::Config("`f_true` is required".into()))?;
    let grid = fracinv::discretization::SpaceGrid::new(dim, l.nodes.unwrap_or(41))?;
    let tgrid = TimeGrid::new(l.t_end.unwrap_or(1.0), l.steps.unwrap_or(40))?;
    let spec = fracinv::forward::ProblemSpec::new(
        fracinv::fraccalc::FractionalOrder::new(alpha)?,
        tgrid,
        fracinv::discretization::assemble_operator(grid),
        fracinv::oracle::Polynomial::reference_profile().sample(&tgrid),
    )?;
    let f = SourceTerm::parse(f_true, dim)?.sample(grid)?;
    let u = solve_forward(&spec, &f)?;
    let mut w = csv::Writer::from_writer(sink(out)?);
    if dim == 1 {
        w.write_record(["t", "x", "u"])?;
    } else {
        w.write_record(["t", "x1", "x2", "u"])?;
    }
    for (n, t) in tgrid.nodes().enumerate() {
        for (k, v) in u.at(n).iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(grid.coords(k)[..dim].iter().map(|c| c.to_string()));
            rec.push(v.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn reconstruct(settings: &Settings) -> Result<()> {
    let cfg = settings.layer()?.resolve()?;
    let out = cli::run_experiment(&cfg)?;
    if let Some(est) = out.m_estimate {
        eprintln!("operator-norm estimate {est:.4}, m used {:.4}", out.m_used);
    }
    for r in &out.result.log {
        eprintln!("k={} phi={:.6e} ratio={:.3e}", r.k, r.phi, r.ratio);
    }
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.serialize(&out.summary)?;
    w.flush()?;
    Ok(())
}

fn table(id: u8, settings: &Settings, out: &Option<PathBuf>) -> Result<()> {
    let lines = cli::run_table(id, &settings.layer()?)?;
    cli::write_table_csv(&lines, sink(out)?)
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Forward { settings, out } => forward(settings, out)?,
        Command::Reconstruct { settings } => reconstruct(settings)?,
        Command::Table { id, settings, out } => table(*id, settings, out)?,
        Command::Verify => {
            let checks = verify::run_suite()?;
            for c in &checks {
                println!("{c}");
            }
            return Ok(checks.iter().all(|c| c.passed()));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
