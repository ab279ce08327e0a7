use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fbscatter::harness::{self, RunConfig};
use fbscatter::Error;

/// Scattering by a locally perturbed periodic array of sound-soft obstacles.
#[derive(Parser)]
#[command(name = "fbscatter", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configuration and write the field grid, trace and manifest.
    Run(Common),
    /// Self-convergence study in one resolution parameter.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Variable and values, e.g. `n=8,12,16`.
        #[arg(long)]
        sweep: String,
        /// Value of the variable for the reference run.
        #[arg(long)]
        reference: usize,
    },
    /// Solve a configuration and write only the field grid.
    Export(Common),
    /// Quick structural checks at reduced resolution.
    Selftest,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Caps the number of concurrent quasi-periodic solves.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> fbscatter::Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_sweep(s: &str) -> anyhow::Result<(String, Vec<usize>)> {
    let (var, vals) = s.split_once('=').context("sweep must look like VAR=V1,V2,...")?;
    let values = vals
        .split(',')
        .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad sweep value `{v}`")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if values.is_empty() {
        bail!("sweep has no values");
    }
    Ok((var.trim().to_string(), values))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(c) => {
            let cfg = c.load()?;
            let (r, a) = harness::run(&cfg)?;
            println!("field    {} ({} rows)", a.field.display(), a.rows);
            println!("trace    {}", a.trace.display());
            println!("manifest {}", a.manifest.display());
            println!(
                "T_nq = {:.3} s, T_q = {:.3} s, T_nq/T_q = {:.2}",
                r.timings.t_nq, r.timings.t_q, r.timings.ratio
            );
        }
        Command::Converge { common, sweep, reference } => {
            let cfg = common.load()?;
            let (var, values) = parse_sweep(&sweep).map_err(|e| Error::Validation {
                field: "sweep".into(),
                message: e.to_string(),
            })?;
            let rec = harness::converge(&cfg, &var, &values, reference)?;
            let table = rec.table();
            let dir = &cfg.output.dir;
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("converge_{var}.csv")), &table)?;
            std::fs::write(dir.join(format!("converge_{var}.json")), serde_json::to_string_pretty(&rec)? + "\n")?;
            print!("{table}");
        }
        Command::Export(c) => {
            let cfg = c.load()?;
            let r = harness::solve(&cfg)?;
            let path = cfg.output.dir.join(&cfg.output.field);
            let rows = harness::export_grid(&r, &path)?;
            println!("field {} ({rows} rows)", path.display());
        }
        Command::Selftest => {
            let checks = harness::selftest()?;
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {:.3e} (tolerance {:.0e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
                ok &= c.pass;
            }
            if !ok {
                return Err(Error::Singular("self-test failed".into()).into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(err) if err.is_validation() => 2,
                Some(_) => 3,
                None if e.downcast_ref::<std::io::Error>().is_some() => 2,
                None => 3,
            };
            ExitCode::from(code)
        }
    }
}
