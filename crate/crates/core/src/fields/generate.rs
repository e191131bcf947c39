//! Field recipes. Every generated field vanishes on the boundary of its
//! domain and is checked against its class (psh or convex) afterwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Domain, FieldKind, GridField, GridSpec};
use crate::error::{Error, Result};
use crate::profiles::{Parametrization, RadialProfile};

/// Increasing convex map applied to the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterMap {
    Identity,
    /// (e^{αx} − 1)/α.
    Exp {
        alpha: f64,
    },
    /// x^p, p ≥ 1.
    Power {
        p: f64,
    },
}

impl OuterMap {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            OuterMap::Identity => x,
            OuterMap::Exp { alpha } => (alpha * x).exp_m1() / alpha,
            OuterMap::Power { p } => x.max(0.0).powf(p),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            OuterMap::Identity => true,
            OuterMap::Exp { alpha } => alpha > 0.0 && alpha.is_finite(),
            OuterMap::Power { p } => p >= 1.0 && p.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Generation(format!("invalid outer map {self:?}")))
        }
    }
}

/// An affine function a·x + b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub a: Vec<f64>,
    pub b: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldGeneratorSpec {
    /// f(log|z|) for LogRadius profiles, f(μ_Ω) for MinkowskiScale ones.
    Radial { profile: RadialProfile },
    /// log|(z − a)/(1 − āz)| on the unit disc.
    Green { a: [f64; 2] },
    /// scale · smax_η(χ(Q(z)) − offset, barrier·(|z|² − 1)) with the
    /// S¹-invariant Hermitian form
    /// Q = w₁|z₁|² + w₂|z₂|² + 2b₁ Re z₁z̄₂ + 2b₂ Im z₁z̄₂.
    InvariantPsh {
        /// (w₁, w₂, b₁, b₂).
        weights: [f64; 4],
        outer: OuterMap,
        offset: f64,
        barrier: f64,
        eta: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// scale · smax_η(smax_η-chain of the pieces, barrier·(μ² − 1)).
    ConvexPolyhedral {
        pieces: Vec<Affine>,
        barrier: f64,
        eta: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// Seeded random recipe of the grid's class; see [`FieldGeneratorSpec::resolve`].
    Random { seed: u64, smoothness: f64 },
}

/// C² smooth maximum; equals max(a, b) when |a − b| ≥ η, never below it.
pub fn smax(a: f64, b: f64, eta: f64) -> f64 {
    let d = a - b;
    let s = if d.abs() < eta {
        3.0 * eta / 16.0 + 3.0 * d * d / (8.0 * eta) - d.powi(4) / (16.0 * eta.powi(3))
    } else {
        0.5 * d.abs()
    };
    0.5 * (a + b) + s
}

fn hermitian_lambda_max(w: &[f64; 4]) -> f64 {
    0.5 * (w[0] + w[1]) + (0.25 * (w[0] - w[1]).powi(2) + w[2] * w[2] + w[3] * w[3]).sqrt()
}

fn quad_form(w: &[f64; 4], x: &[f64]) -> f64 {
    let mut q = w[0] * (x[0] * x[0] + x[1] * x[1]);
    if x.len() == 4 {
        // z₁z̄₂ = (x₀ + i x₁)(x₂ − i x₃)
        let re = x[0] * x[2] + x[1] * x[3];
        let im = x[1] * x[2] - x[0] * x[3];
        q += w[1] * (x[2] * x[2] + x[3] * x[3]) + 2.0 * w[2] * re + 2.0 * w[3] * im;
    }
    q
}

impl FieldGeneratorSpec {
    /// Replace a `Random` recipe by the concrete recipe it stands for.
    pub fn resolve(&self, grid: &GridSpec) -> Result<FieldGeneratorSpec> {
        match self {
            FieldGeneratorSpec::Random { seed, smoothness } => {
                Ok(draw_random(*seed, *smoothness, grid)?.0)
            }
            other => Ok(other.clone()),
        }
    }
}

/// Candidates drawn per seed before giving up.
const RANDOM_ATTEMPTS: usize = 16;

/// The first candidate of the seed's stream whose samples pass the class
/// check at this resolution. Smooth maxima narrower than a cell can fail
/// the discrete check although the recipe is psh.
fn draw_random(
    seed: u64,
    smoothness: f64,
    grid: &GridSpec,
) -> Result<(FieldGeneratorSpec, GridField)> {
    if !(smoothness > 0.0 && smoothness <= 1.0) {
        return Err(Error::Generation("smoothness must lie in (0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for _ in 0..RANDOM_ATTEMPTS {
        let spec = match grid.kind {
            FieldKind::Complex => random_invariant(&mut rng, smoothness, grid.lattice.dim)?,
            FieldKind::RealConvex => random_polyhedral(&mut rng, smoothness, grid)?,
        };
        let field = sample_recipe(&spec, grid)?;
        match field.check_class() {
            Ok(()) => return Ok((spec, field)),
            Err(e @ (Error::NotPlurisubharmonic { .. } | Error::NotConvex { .. })) => {
                last = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

fn random_invariant(rng: &mut ChaCha8Rng, smoothness: f64, d: usize) -> Result<FieldGeneratorSpec> {
    let w0: f64 = rng.gen_range(0.1..2.0);
    let w1: f64 = if d == 4 { rng.gen_range(0.1..2.0) } else { 0.0 };
    let (mut b1, mut b2) = if d == 4 {
        let x: f64 = StandardNormal.sample(rng);
        let y: f64 = StandardNormal.sample(rng);
        (0.7 * x, 0.7 * y)
    } else {
        (0.0, 0.0)
    };
    let cap = 0.95 * (w0 * w1).sqrt();
    let mag = b1.hypot(b2);
    if mag > cap {
        b1 *= cap / mag;
        b2 *= cap / mag;
    }
    let weights = [w0, w1, b1, b2];
    let alpha: f64 = rng.gen_range(0.0..1.5) / w0.max(w1);
    let outer = if alpha > 1e-9 {
        OuterMap::Exp { alpha }
    } else {
        OuterMap::Identity
    };
    let chimax = outer.apply(hermitian_lambda_max(&weights));
    let eta = 0.35 * chimax * smoothness;
    let offset = chimax + eta + rng.gen_range(0.0..0.3) * chimax;
    let barrier = offset * rng.gen_range(1.1..3.0);
    let min = smax(-offset, -barrier, eta);
    Ok(FieldGeneratorSpec::InvariantPsh {
        weights,
        outer,
        offset,
        barrier,
        eta,
        scale: -1.0 / min,
    })
}

fn random_polyhedral(
    rng: &mut ChaCha8Rng,
    smoothness: f64,
    grid: &GridSpec,
) -> Result<FieldGeneratorSpec> {
    let d = grid.lattice.dim;
    let body = grid.domain.body(d)?;
    let k = rng.gen_range(2..=6usize);
    let eta = 0.2 * smoothness;
    let margin = eta * (1.0 + 3.0 * k as f64 / 16.0);
    let mut pieces = Vec::with_capacity(k);
    for _ in 0..k {
        let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let len: f64 = rng.gen_range(0.0..2.0);
        let a: Vec<f64> = dir.iter().map(|x| x * len / norm).collect();
        let b = -body.support(&a)? - margin - rng.gen_range(0.0..1.0);
        pieces.push(Affine { a, b });
    }
    let barrier = rng.gen_range(0.5..3.0);
    Ok(FieldGeneratorSpec::ConvexPolyhedral {
        pieces,
        barrier,
        eta,
        scale: 1.0,
    })
}

/// Sample a recipe on a grid and check the result is psh (complex) or
/// convex (real) at resolution h.
pub fn generate(spec: &FieldGeneratorSpec, grid: &GridSpec) -> Result<GridField> {
    if let FieldGeneratorSpec::Random { seed, smoothness } = spec {
        return Ok(draw_random(*seed, *smoothness, grid)?.1);
    }
    let field = sample_recipe(spec, grid)?;
    field.check_class()?;
    Ok(field)
}

fn sample_recipe(spec: &FieldGeneratorSpec, grid: &GridSpec) -> Result<GridField> {
    grid.validate()?;
    let d = grid.lattice.dim;
    match spec {
        FieldGeneratorSpec::Radial { profile } => match profile.parametrization() {
            Parametrization::LogRadius => {
                if grid.kind != FieldKind::Complex || grid.domain != Domain::UnitBall {
                    return Err(Error::Generation(
                        "log-radius profiles need a complex grid on the unit ball".into(),
                    ));
                }
                GridField::sample(grid.clone(), |x| {
                    profile.eval(0.5 * x.iter().map(|a| a * a).sum::<f64>().ln())
                })
            }
            Parametrization::MinkowskiScale => {
                let dom = grid.domain.clone();
                GridField::sample(grid.clone(), move |x| profile.eval(dom.gauge(x)))
            }
        },
        FieldGeneratorSpec::Green { a } => {
            if grid.kind != FieldKind::Complex || d != 2 || grid.domain != Domain::UnitBall {
                return Err(Error::Generation(
                    "green kernel needs a complex 2-d grid on the unit disc".into(),
                ));
            }
            if a[0].hypot(a[1]) >= 1.0 {
                return Err(Error::Generation("pole must satisfy |a| < 1".into()));
            }
            let (ar, ai) = (a[0], a[1]);
            GridField::sample(grid.clone(), |x| {
                // (z − a)/(1 − āz)
                let (nr, ni) = (x[0] - ar, x[1] - ai);
                let (dr, di) = (1.0 - (ar * x[0] + ai * x[1]), -(ar * x[1] - ai * x[0]));
                0.5 * ((nr * nr + ni * ni) / (dr * dr + di * di)).ln()
            })
        }
        FieldGeneratorSpec::InvariantPsh {
            weights,
            outer,
            offset,
            barrier,
            eta,
            scale,
        } => {
            outer.validate()?;
            if grid.kind != FieldKind::Complex
                || !(d == 2 || d == 4)
                || grid.domain != Domain::UnitBall
            {
                return Err(Error::Generation(
                    "invariant recipe needs a complex grid on the unit ball".into(),
                ));
            }
            let w = *weights;
            if w[0] < 0.0 || w[1] < 0.0 || w[2] * w[2] + w[3] * w[3] > w[0] * w[1] {
                return Err(Error::Generation(
                    "Hermitian form not positive semidefinite".into(),
                ));
            }
            if !(*eta > 0.0 && *barrier > 0.0 && *scale > 0.0) {
                return Err(Error::Generation(
                    "eta, barrier and scale must be positive".into(),
                ));
            }
            let lmax = if d == 2 {
                w[0]
            } else {
                hermitian_lambda_max(&w)
            };
            if outer.apply(lmax) - offset > -eta {
                return Err(Error::Generation(
                    "recipe does not vanish on the boundary".into(),
                ));
            }
            GridField::sample(grid.clone(), |x| {
                let r2: f64 = x.iter().map(|a| a * a).sum();
                scale
                    * smax(
                        outer.apply(quad_form(&w, x)) - offset,
                        barrier * (r2 - 1.0),
                        *eta,
                    )
            })
        }
        FieldGeneratorSpec::ConvexPolyhedral {
            pieces,
            barrier,
            eta,
            scale,
        } => {
            if grid.kind != FieldKind::RealConvex {
                return Err(Error::Generation(
                    "polyhedral recipe needs a real grid".into(),
                ));
            }
            if pieces.is_empty() || pieces.iter().any(|p| p.a.len() != d) {
                return Err(Error::Generation(
                    "pieces must be non-empty and match the dimension".into(),
                ));
            }
            if !(*eta >= 0.0 && *barrier > 0.0 && *scale > 0.0) {
                return Err(Error::Generation(
                    "eta ≥ 0, barrier and scale positive".into(),
                ));
            }
            let body = grid.domain.body(d)?;
            let mut top = f64::NEG_INFINITY;
            for p in pieces {
                top = top.max(body.support(&p.a)? + p.b);
            }
            if top + 3.0 * eta * (pieces.len() - 1) as f64 / 16.0 > -eta {
                return Err(Error::Generation(
                    "recipe does not vanish on the boundary".into(),
                ));
            }
            let dom = grid.domain.clone();
            GridField::sample(grid.clone(), move |x| {
                let aff = |p: &Affine| p.a.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + p.b;
                let mut acc = aff(&pieces[0]);
                for p in &pieces[1..] {
                    acc = if *eta > 0.0 {
                        smax(acc, aff(p), *eta)
                    } else {
                        acc.max(aff(p))
                    };
                }
                let mu = dom.gauge(x);
                let bar = barrier * (mu * mu - 1.0);
                scale
                    * if *eta > 0.0 {
                        smax(acc, bar, *eta)
                    } else {
                        acc.max(bar)
                    }
            })
        }
        FieldGeneratorSpec::Random { .. } => unreachable!("resolved above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::rotate;

    #[test]
    fn smooth_max_bounds() {
        for &(a, b) in &[(0.0, 0.0), (1.0, 0.5), (-1.0, 2.0), (0.3, 0.31)] {
            let m = smax(a, b, 0.2);
            assert!(m >= a.max(b));
            assert!(m <= a.max(b) + 3.0 * 0.2 / 16.0 + 1e-15);
        }
        assert_eq!(smax(1.0, 0.0, 0.5), 1.0);
    }

    #[test]
    fn invariant_recipe_is_circle_invariant() {
        let grid = GridSpec::ball(FieldKind::Complex, 4, 8).unwrap();
        let spec = FieldGeneratorSpec::Random {
            seed: 3,
            smoothness: 1.0,
        }
        .resolve(&grid)
        .unwrap();
        let FieldGeneratorSpec::InvariantPsh {
            weights,
            outer,
            offset,
            barrier,
            eta,
            scale,
        } = spec
        else {
            panic!()
        };
        let f = |x: &[f64]| {
            let r2: f64 = x.iter().map(|a| a * a).sum();
            scale
                * smax(
                    outer.apply(quad_form(&weights, x)) - offset,
                    barrier * (r2 - 1.0),
                    eta,
                )
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let th = rng.gen_range(0.0..6.3);
            assert!((f(&z) - f(&rotate(&z, th))).abs() < 1e-10);
        }
    }

    #[test]
    fn green_zero_is_log_radius() {
        let grid = GridSpec::ball(FieldKind::Complex, 2, 64).unwrap();
        let g = generate(&FieldGeneratorSpec::Green { a: [0.0, 0.0] }, &grid).unwrap();
        let prof = RadialProfile::log_radius(&[(-30.0, -30.0), (0.0, 0.0)]).unwrap();
        let r = generate(&FieldGeneratorSpec::Radial { profile: prof }, &grid).unwrap();
        for (a, b) in g.values().iter().zip(r.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_violation_rejected() {
        let grid = GridSpec::ball(FieldKind::RealConvex, 2, 16).unwrap();
        let spec = FieldGeneratorSpec::ConvexPolyhedral {
            pieces: vec![Affine {
                a: vec![1.0, 0.0],
                b: 0.0,
            }],
            barrier: 1.0,
            eta: 0.1,
            scale: 1.0,
        };
        assert!(matches!(generate(&spec, &grid), Err(Error::Generation(_))));
    }
}
