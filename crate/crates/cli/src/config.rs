//! Run configuration files and the experiments they describe.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use schwarzlab::fields::{FieldGeneratorSpec, FieldKind, GridSpec};
use schwarzlab::lab::{self, SignatureSample, SymmetrizationTolerance, VerificationReport};
use schwarzlab::profiles::{ProfileSpec, RadialProfile};
use schwarzlab::{BalancedLog, BodySpec, ConvexBody};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Tso,
    Santalo,
    Green,
    MoserTrudinger,
    SymmetrizationComplex,
    SymmetrizationReal,
    EllipsoidSignature,
}

/// A body given by preset name or as a full specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodyInput {
    Preset(String),
    Spec(BodySpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileInput {
    Preset(String),
    Spec(ProfileSpec),
}

/// Overrides of the default tolerances; absent keys keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel: Option<f64>,
    pub abs: Option<f64>,
    pub tau_factor: Option<f64>,
    pub stride: Option<usize>,
    /// Counterexample margin in units of τ, or floor ratio for signatures.
    pub margin: Option<f64>,
    /// Santaló slack or Moser-Trudinger stability.
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Lattice points per axis.
    pub resolution: Option<usize>,
    /// Batch size for random suites.
    pub count: Option<usize>,
    /// Complex dimension or real dimension of the grid.
    pub n: Option<usize>,
    pub body: Option<BodyInput>,
    pub profile: Option<ProfileInput>,
    /// Explicit field recipes; random recipes are used when absent.
    pub fields: Option<Vec<FieldGeneratorSpec>>,
    pub smoothness: Option<f64>,
    pub poles: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("schwarzlab-out")
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            resolution: None,
            count: None,
            n: None,
            body: None,
            profile: None,
            fields: None,
            smoothness: None,
            poles: None,
            tolerance: Tolerances::default(),
            output: default_output(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fill every default so the manifest reproduces the run.
    pub fn resolved(mut self) -> Result<Self> {
        use Experiment::*;
        match self.experiment {
            Tso => {
                self.body.get_or_insert(BodyInput::Preset("square".into()));
                self.profile
                    .get_or_insert(ProfileInput::Preset("s2m1".into()));
                self.n.get_or_insert(2);
            }
            Santalo => {
                self.count.get_or_insert(100);
                self.tolerance.slack.get_or_insert(1e-6);
            }
            Green => {
                self.resolution.get_or_insert(512);
                self.poles.get_or_insert(vec![0.0, 0.25, 0.5, 0.75]);
                self.tolerance.margin.get_or_insert(5.0);
            }
            MoserTrudinger => {
                self.n.get_or_insert(1);
                self.count.get_or_insert(64);
                self.tolerance.slack.get_or_insert(0.05);
            }
            SymmetrizationComplex | SymmetrizationReal => {
                let complex = self.experiment == SymmetrizationComplex;
                self.n.get_or_insert(2);
                self.resolution
                    .get_or_insert(if complex { 24 } else { 512 });
                self.count.get_or_insert(200);
                self.smoothness.get_or_insert(1.0);
                let d = SymmetrizationTolerance::default();
                self.tolerance.rel.get_or_insert(d.rel);
                self.tolerance.abs.get_or_insert(d.abs);
                self.tolerance.tau_factor.get_or_insert(d.tau_factor);
                self.tolerance.stride.get_or_insert(d.stride);
            }
            EllipsoidSignature => {
                self.tolerance.margin.get_or_insert(10.0);
            }
        }
        Ok(self)
    }
}

pub fn body_preset(name: &str) -> Result<ConvexBody> {
    Ok(match name {
        "square" => ConvexBody::square(1.0)?,
        "disc" | "ball" => ConvexBody::ball(2, 1.0)?,
        "hexagon" => ConvexBody::regular_polygon(6, 1.0)?,
        "triangle" => ConvexBody::regular_polygon(3, 1.0)?,
        "ellipse" => ConvexBody::ellipsoid_diag(&[1.0, 2.0])?,
        other => bail!("unknown body preset `{other}` (square, disc, hexagon, triangle, ellipse)"),
    })
}

pub fn profile_preset(name: &str) -> Result<RadialProfile> {
    Ok(match name {
        // s² − 1 on 4096 uniform knots
        "s2m1" => RadialProfile::minkowski_from_fn(4096, |s| s * s - 1.0)?,
        "kink1" => RadialProfile::max_linear(1.0, -1.0)?,
        "kink2" => RadialProfile::max_linear(2.0, -1.0)?,
        "mt2" => RadialProfile::max_linear(1.0, -2.0)?,
        other => bail!("unknown profile preset `{other}` (s2m1, kink1, kink2, mt2)"),
    })
}

impl BodyInput {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodyInput::Preset(name) => body_preset(name),
            BodyInput::Spec(spec) => Ok(ConvexBody::try_from(spec.clone())?),
        }
    }
}

impl ProfileInput {
    pub fn build(&self) -> Result<RadialProfile> {
        match self {
            ProfileInput::Preset(name) => profile_preset(name),
            ProfileInput::Spec(spec) => Ok(RadialProfile::try_from(spec.clone())?),
        }
    }
}

fn need<T: Clone>(v: &Option<T>, key: &str) -> Result<T> {
    v.clone().with_context(|| format!("missing `{key}`"))
}

/// Execute a resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<VerificationReport> {
    use Experiment::*;
    let t = &cfg.tolerance;
    Ok(match cfg.experiment {
        Tso => {
            let body = need(&cfg.body, "body")?.build()?;
            let f = need(&cfg.profile, "profile")?.build()?;
            lab::tso_experiment(&body, &f, need(&cfg.n, "n")?)?
        }
        Santalo => {
            let mut bodies = lab::random_symmetric_polygons(cfg.seed, need(&cfg.count, "count")?)?;
            if let Some(b) = &cfg.body {
                bodies.push(b.build()?);
            }
            lab::santalo_scan(&bodies, need(&t.slack, "tolerance.slack")?)?
        }
        Green => lab::green_counterexample(
            &need(&cfg.poles, "poles")?,
            need(&cfg.resolution, "resolution")?,
            need(&t.margin, "tolerance.margin")?,
        )?,
        MoserTrudinger => {
            let n = need(&cfg.n, "n")?;
            let mut profiles = lab::moser_family(n, need(&cfg.count, "count")?)?;
            if let Some(p) = &cfg.profile {
                profiles.insert(0, p.build()?);
            }
            lab::moser_trudinger_suite(&profiles, n, need(&t.slack, "tolerance.slack")?)?
        }
        SymmetrizationComplex | SymmetrizationReal => {
            let complex = cfg.experiment == SymmetrizationComplex;
            let n = need(&cfg.n, "n")?;
            let res = need(&cfg.resolution, "resolution")?;
            let specs = match &cfg.fields {
                Some(f) => f.clone(),
                None => {
                    let sm = need(&cfg.smoothness, "smoothness")?;
                    (0..need(&cfg.count, "count")? as u64)
                        .map(|i| FieldGeneratorSpec::Random {
                            seed: cfg.seed + i,
                            smoothness: sm,
                        })
                        .collect()
                }
            };
            let tol = SymmetrizationTolerance {
                rel: need(&t.rel, "tolerance.rel")?,
                abs: need(&t.abs, "tolerance.abs")?,
                tau_factor: need(&t.tau_factor, "tolerance.tau_factor")?,
                stride: need(&t.stride, "tolerance.stride")?,
            };
            if complex {
                let grid = GridSpec::ball(FieldKind::Complex, 2 * n, res)?;
                lab::verify_symmetrization_complex(&specs, &grid, n, &tol)?
            } else {
                let grid = match &cfg.body {
                    Some(b) => GridSpec::body(FieldKind::RealConvex, b.build()?, res)?,
                    None => GridSpec::ball(FieldKind::RealConvex, n, res)?,
                };
                lab::verify_symmetrization_real(&specs, &grid, &tol)?
            }
        }
        EllipsoidSignature => {
            let samples = vec![
                SignatureSample {
                    name: "ball".into(),
                    u: BalancedLog::ball(2)?,
                    ellipsoid: true,
                },
                SignatureSample {
                    name: "ellipsoid".into(),
                    u: BalancedLog::complex_ellipsoid(
                        vec![vec![1.0, 0.0], vec![0.0, 2.0]],
                        vec![vec![0.0; 2]; 2],
                    )?,
                    ellipsoid: true,
                },
                SignatureSample {
                    name: "quartic".into(),
                    u: BalancedLog::modulus_power(2, 4.0)?,
                    ellipsoid: false,
                },
            ];
            lab::ellipsoid_signature(
                &samples,
                &[-1.0, -0.5, -0.1],
                [0.05, 0.025],
                256,
                need(&t.margin, "tolerance.margin")?,
            )?
        }
    })
}
