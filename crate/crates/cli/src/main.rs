mod config;
mod report;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{BodyInput, Experiment, ProfileInput, RunConfig};
use schwarzlab::fields::{complex_ma_energy, read_field, real_ma_energy, FieldKind};
use schwarzlab::lab::{Verdict, VerificationReport};
use schwarzlab::profiles::{Observable, ProfileSpec, RadialProfile};
use schwarzlab::symmetrize::{
    distribution, equidistribution_check, omega_symmetrize, profile_from_distribution, SigmaOptions,
};
use schwarzlab::variational::{energy_curve, PotentialPath, PATH_SAMPLES};
use schwarzlab::{BodySpec, ConvexBody};

#[derive(Parser)]
#[command(
    name = "schwarzlab",
    version,
    about = "Symmetrization and Monge-Ampère energy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one verification suite.
    Verify {
        experiment: Experiment,
        /// Start from a config file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Body preset name or a JSON/TOML body file.
        #[arg(long)]
        body: Option<String>,
        /// Profile preset name or a JSON/TOML profile file.
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Schwarz (or Ω-) symmetrize a field file.
    Symmetrize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        levels: usize,
        /// Symmetrize with respect to this body instead of the ball.
        #[arg(long)]
        body: Option<String>,
        #[arg(long, default_value = "schwarzlab-out")]
        output: PathBuf,
    },
    /// Monge-Ampère energy of a field file.
    Energy {
        #[arg(long)]
        input: PathBuf,
    },
    /// Volume, polar volume and Mahler volume of a body.
    Mahler {
        #[arg(long)]
        body: String,
    },
    /// Energy curve along a path between two log-radius profiles.
    Geodesic {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value_t = PathArg::Geodesic)]
        kind: PathArg,
        /// Shift constant of the subgeodesic.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = PATH_SAMPLES)]
        samples: usize,
        #[arg(long, default_value = "schwarzlab-out")]
        output: PathBuf,
    },
    /// Summarize report files.
    Report {
        #[arg(required = true)]
        patterns: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Geodesic,
    Subgeodesic,
    Linear,
}

/// Errors in the invocation or its inputs, as opposed to failed checks.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| Usage(e).into())
}

fn read_spec<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "toml") {
        Ok(toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    } else {
        Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
    }
}

fn body_arg(s: &str) -> Result<BodyInput> {
    let p = Path::new(s);
    if p.exists() {
        Ok(BodyInput::Spec(read_spec::<BodySpec>(p)?))
    } else {
        config::body_preset(s)?;
        Ok(BodyInput::Preset(s.into()))
    }
}

fn profile_arg(s: &str) -> Result<ProfileInput> {
    let p = Path::new(s);
    if p.exists() {
        Ok(ProfileInput::Spec(read_spec::<ProfileSpec>(p)?))
    } else {
        config::profile_preset(s)?;
        Ok(ProfileInput::Preset(s.into()))
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    Ok(BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Execute a config, write report, CSV and manifest; true iff it passed.
fn run_config(cfg: RunConfig) -> Result<bool> {
    let cfg = usage(cfg.resolved())?;
    let rep = config::execute(&cfg)?;
    let out = &cfg.output;
    rep.write_record(create(out, "report.jsonl")?)?;
    VerificationReport::write_csv(std::slice::from_ref(&rep), create(out, "report.csv")?)?;
    let mut manifest = create(out, "manifest.toml")?;
    manifest.write_all(toml::to_string_pretty(&cfg)?.as_bytes())?;
    if let (Experiment::Tso, Some(p)) = (cfg.experiment, &cfg.profile) {
        p.build()?.write_csv(create(out, "profile.csv")?)?;
    }
    println!(
        "{}: {} ({:.2} s)",
        rep.experiment,
        rep.verdict.as_str(),
        rep.runtime_s
    );
    for q in rep.failures() {
        eprintln!(
            "failed: {} = {} (tolerance {:?}, {})",
            q.name, q.value, q.tolerance, q.oracle
        );
    }
    println!("wrote {}", out.display());
    Ok(rep.verdict == Verdict::Pass)
}

fn real_main(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = usage(RunConfig::load(&config))?;
            if let Some(o) = output {
                cfg.output = o;
            }
            run_config(cfg)
        }
        Command::Verify {
            experiment,
            config,
            body,
            profile,
            resolution,
            count,
            seed,
            n,
            output,
        } => {
            let mut cfg = match config {
                Some(p) => usage(RunConfig::load(&p))?,
                None => RunConfig::new(experiment),
            };
            cfg.experiment = experiment;
            if let Some(b) = body {
                cfg.body = Some(usage(body_arg(&b))?);
            }
            if let Some(p) = profile {
                cfg.profile = Some(usage(profile_arg(&p))?);
            }
            cfg.resolution = resolution.or(cfg.resolution);
            cfg.count = count.or(cfg.count);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.n = n.or(cfg.n);
            if let Some(o) = output {
                cfg.output = o;
            }
            run_config(cfg)
        }
        Command::Symmetrize {
            input,
            levels,
            body,
            output,
        } => {
            let field = usage(
                File::open(&input)
                    .map_err(anyhow::Error::from)
                    .and_then(|f| Ok(read_field(BufReader::new(f))?))
                    .with_context(|| format!("reading {}", input.display())),
            )?;
            let opts = SigmaOptions::for_dim(field.dim()).with_levels(levels);
            let dist = distribution(&field, &opts)?;
            let profile = match &body {
                Some(b) => {
                    let body: ConvexBody = usage(body_arg(b).and_then(|b| b.build()))?;
                    omega_symmetrize(&field, &body, &opts)?
                }
                None => profile_from_distribution(&dist, field.kind(), opts.min_cells)?,
            };
            dist.write_csv(create(&output, "sigma.csv")?)?;
            profile.write_csv(create(&output, "profile.csv")?)?;
            let obs = [Observable::Power { p: 1.0 }, Observable::ExpNeg];
            for r in equidistribution_check(&field, &profile, &obs)? {
                println!(
                    "{:?}: grid {:.6} radial {:.6} gap {:.2e}",
                    r.observable, r.grid, r.radial, r.rel_gap
                );
            }
            println!(
                "profile: {} knots, convexity defect {:.3e}, tau {:.3e}",
                profile.len(),
                profile.convexity_defect(),
                field.tau()
            );
            println!("wrote {}", output.display());
            Ok(true)
        }
        Command::Energy { input } => {
            let field = usage(
                File::open(&input)
                    .map_err(anyhow::Error::from)
                    .and_then(|f| Ok(read_field(BufReader::new(f))?))
                    .with_context(|| format!("reading {}", input.display())),
            )?;
            let e = match field.kind() {
                FieldKind::Complex => complex_ma_energy(&field, field.dim() / 2)?,
                FieldKind::RealConvex => real_ma_energy(&field)?,
            };
            println!("{e}");
            Ok(true)
        }
        Command::Mahler { body } => {
            let b = usage(body_arg(&body).and_then(|b| b.build()))?;
            let v = b.volume()?;
            let pv = b.polar()?.volume()?;
            println!("volume {v}\npolar_volume {pv}\nmahler {}", v * pv);
            Ok(true)
        }
        Command::Geodesic {
            from,
            to,
            kind,
            c,
            n,
            samples,
            output,
        } => {
            let f0: RadialProfile = usage(profile_arg(&from).and_then(|p| p.build()))?;
            let f1: RadialProfile = usage(profile_arg(&to).and_then(|p| p.build()))?;
            let path = match kind {
                PathArg::Geodesic => PotentialPath::geodesic(f0, f1)?,
                PathArg::Linear => PotentialPath::linear(f0, f1)?,
                PathArg::Subgeodesic => {
                    let c = usage(c.context("--c is required for subgeodesic paths"))?;
                    PotentialPath::subgeodesic(f0, f1, c)?
                }
            };
            let curve = energy_curve(&path, n, samples)?;
            curve.write_csv(create(&output, "energy_curve.csv")?)?;
            println!(
                "chord deviation {:.3e}, concavity defect {:.3e}, convexity defect {:.3e}",
                curve.chord_deviation, curve.concavity_defect, curve.convexity_defect
            );
            println!("wrote {}", output.display());
            Ok(true)
        }
        Command::Report { patterns } => {
            let paths = usage(report::expand(&patterns))?;
            let reports = usage(report::load(&paths))?;
            let (table, ok) = report::summarize(&reports);
            print!("{table}");
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
