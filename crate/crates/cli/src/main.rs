use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hiphome::experiment::{self, exit_code_for, ExperimentConfig, Preset};
use hiphome::modal_basis::BasisFamily;
use hiphome::selftest::selftest;
use hiphome::Error;

#[derive(Parser)]
#[command(name = "hiphome", version, about = "Reduced transport models for thin channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write errors.csv / summary.json
    Run(RunArgs),
    /// Write the modal basis traces of every selected family
    DumpBasis(SourceArgs),
    /// Write the corrector table and print the effective coefficients
    DumpCorrectors(SourceArgs),
    /// Run the invariant suites
    Selftest {
        #[arg(long, default_value = "out/selftest")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyChoice {
    Hiphome,
    Educated,
    Legendre,
    Both,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// JSON experiment config
    #[arg(long, group = "source")]
    config: Option<PathBuf>,
    /// Built-in preset: poiseuille-steady, loglaw-steady or loglaw-unsteady
    #[arg(long, group = "source")]
    preset: Option<String>,
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated mode counts
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    family: Option<FamilyChoice>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: SourceArgs,
    /// Comma-separated axial mesh sizes
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock times in errors.csv
    #[arg(long)]
    timings: bool,
    /// Also dump reference and reduced fields
    #[arg(long)]
    dump_fields: bool,
}

fn load(args: &SourceArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match (&args.source.config, &args.source.preset) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) => ExperimentConfig::preset(name.parse::<Preset>()?)?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    if let Some(m) = &args.m {
        config.discretisation.m = m.clone();
    }
    if let Some(f) = args.family {
        config.families = match f {
            FamilyChoice::Hiphome => vec![BasisFamily::Hiphome],
            FamilyChoice::Educated => vec![BasisFamily::Educated],
            FamilyChoice::Legendre => vec![BasisFamily::Legendre],
            FamilyChoice::Both => vec![BasisFamily::Hiphome, BasisFamily::Educated],
        };
    }
    config.validate()?;
    Ok(config)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code_for(e) as u8)
}

fn run(args: RunArgs) -> ExitCode {
    let mut config = match load(&args.common) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(h) = args.h {
        config.discretisation.h = h;
    }
    if args.threads.is_some() {
        config.threads = args.threads;
    }
    config.timings |= args.timings;
    config.dump_fields |= args.dump_fields;
    if let Err(e) = config.validate() {
        return fail(&e);
    }
    let report = match experiment::run(&config) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let s = &report.summary;
    println!(
        "{}: {} records, u_mean = {:.6}, D_eff = {:.6e}",
        s.preset.as_str(),
        s.records,
        s.coefficients.mean_speed,
        s.coefficients.dispersion
    );
    for r in &s.modal_rates {
        let t = r.t.map(|t| format!(" t={t}")).unwrap_or_default();
        match r.fitted_rate {
            Some(rate) => println!("  modal rate {} h={}{t}: {rate:.3}", r.family, r.h),
            None => println!("  modal rate {} h={}{t}: n/a", r.family, r.h),
        }
    }
    for r in &s.mesh_rates {
        if let Some(rate) = r.fitted_rate {
            println!("  mesh rate {} m={}: {rate:.3}", r.family, r.m);
        }
    }
    for e in &s.basis_errors {
        eprintln!("basis: {e}");
    }
    for f in &report.failures {
        eprintln!("failed: {f}");
    }
    for f in &s.invariant_failures {
        eprintln!("invariant: {f}");
    }
    println!("wrote {}", config.output.display());
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
        Command::DumpBasis(args) => {
            let config = match load(&args) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match experiment::emit_basis_dump(&config) {
                Ok((files, errors)) => {
                    for f in &files {
                        println!("wrote {}", f.display());
                    }
                    for e in &errors {
                        eprintln!("basis: {e}");
                    }
                    if errors.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(3)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::DumpCorrectors(args) => {
            let config = match load(&args) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match experiment::emit_corrector_dump(&config) {
                Ok((path, c)) => {
                    println!("u_mean = {:.16e}", c.mean_speed);
                    println!("D_eff = {:.16e}", c.dispersion);
                    println!("enhancement = {:.16e}", c.enhancement);
                    println!("wrote {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Selftest { out } => {
            let report = selftest();
            for c in &report.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} = {:.3e} (tol {:.1e})", c.name, c.value, c.tolerance);
            }
            if let Err(e) = std::fs::create_dir_all(&out)
                .and_then(|_| std::fs::write(out.join("selftest.csv"), report.to_csv()))
            {
                eprintln!("error: {}: {e}", out.display());
                return ExitCode::from(3);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
