//! Piecewise-linear radial profiles and their closed-form energies.
//!
//! A `LogRadius` profile represents φ(z) = f(log|z|) on the unit ball of C^n,
//! with f ≡ f(t_min) below the first knot. A `MinkowskiScale` profile
//! represents u = f(μ_Ω) on a convex body Ω.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    LogRadius,
    MinkowskiScale,
}

impl Parametrization {
    fn right_end(self) -> f64 {
        match self {
            Parametrization::LogRadius => 0.0,
            Parametrization::MinkowskiScale => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub parametrization: Parametrization,
    /// (abscissa, value) pairs.
    pub knots: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct RadialProfile {
    param: Parametrization,
    x: Vec<f64>,
    v: Vec<f64>,
}

impl TryFrom<ProfileSpec> for RadialProfile {
    type Error = Error;
    fn try_from(s: ProfileSpec) -> Result<Self> {
        RadialProfile::new(
            s.parametrization,
            s.knots.iter().map(|k| k[0]).collect(),
            s.knots.iter().map(|k| k[1]).collect(),
        )
    }
}

impl From<RadialProfile> for ProfileSpec {
    fn from(p: RadialProfile) -> Self {
        ProfileSpec {
            parametrization: p.param,
            knots: p.x.iter().zip(&p.v).map(|(&x, &v)| [x, v]).collect(),
        }
    }
}

/// Result of a sublevel Monge-Ampère mass query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBelow {
    pub value: f64,
    /// The level sits on a knot; the left slope was used.
    pub kink: bool,
}

impl RadialProfile {
    pub fn new(param: Parametrization, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::InvalidProfile("knot and value counts differ".into()));
        }
        if x.len() < 2 {
            return Err(Error::InvalidProfile("need at least two knots".into()));
        }
        if x.iter().chain(&v).any(|a| !a.is_finite()) {
            return Err(Error::InvalidProfile("non-finite knot".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "abscissae must be strictly increasing".into(),
            ));
        }
        let end = param.right_end();
        if *x.last().unwrap() != end {
            return Err(Error::InvalidProfile(format!(
                "last abscissa must be {end}"
            )));
        }
        if param == Parametrization::MinkowskiScale && x[0] != 0.0 {
            return Err(Error::InvalidProfile("first abscissa must be 0".into()));
        }
        if *v.last().unwrap() != 0.0 {
            return Err(Error::InvalidProfile(
                "profile must vanish at the right end".into(),
            ));
        }
        Ok(Self { param, x, v })
    }

    pub fn log_radius(knots: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            Parametrization::LogRadius,
            knots.iter().map(|k| k.0).collect(),
            knots.iter().map(|k| k.1).collect(),
        )
    }

    pub fn minkowski(knots: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            Parametrization::MinkowskiScale,
            knots.iter().map(|k| k.0).collect(),
            knots.iter().map(|k| k.1).collect(),
        )
    }

    /// f(t) = max(c·t, m) with m < 0 < c.
    pub fn max_linear(c: f64, m: f64) -> Result<Self> {
        if !(c > 0.0 && m < 0.0) {
            return Err(Error::InvalidProfile("need c > 0 and m < 0".into()));
        }
        Self::log_radius(&[(m / c, m), (0.0, 0.0)])
    }

    /// Sample a function at the given abscissae.
    pub fn from_fn(param: Parametrization, x: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v = x.iter().map(|&t| f(t)).collect();
        Self::new(param, x, v)
    }

    /// MinkowskiScale samples of f on `k + 1` uniform knots of [0, 1].
    pub fn minkowski_from_fn(k: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(
            Parametrization::MinkowskiScale,
            (0..=k).map(|i| i as f64 / k as f64).collect(),
            f,
        )
    }

    /// The zero profile.
    pub fn zero(param: Parametrization) -> Self {
        let x0 = match param {
            Parametrization::LogRadius => -1.0,
            Parametrization::MinkowskiScale => 0.0,
        };
        Self {
            param,
            x: vec![x0, param.right_end()],
            v: vec![0.0, 0.0],
        }
    }

    pub fn parametrization(&self) -> Parametrization {
        self.param
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_value(&self) -> f64 {
        self.v.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Segment slopes, one per knot interval.
    pub fn slopes(&self) -> Vec<f64> {
        self.x
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.v.windows(2).all(|w| w[1] >= w[0])
    }

    /// Value with flat extension outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.v[0];
        }
        if t >= self.x[n - 1] {
            return self.v[n - 1];
        }
        let i = self.x.partition_point(|&a| a <= t) - 1;
        let w = (t - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.v[i] + w * (self.v[i + 1] - self.v[i])
    }

    /// Slope of the segment to the left of t (0 on the flat extension).
    pub fn left_slope(&self, t: f64) -> f64 {
        if t <= self.x[0] {
            return 0.0;
        }
        let i = self.x.partition_point(|&a| a < t).min(self.x.len() - 1);
        (self.v[i] - self.v[i - 1]) / (self.x[i] - self.x[i - 1])
    }

    /// c·f.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            param: self.param,
            x: self.x.clone(),
            v: self.v.iter().map(|a| a * c).collect(),
        }
    }

    /// Drop knots that are collinear with their neighbours.
    pub fn simplified(&self, tol: f64) -> Self {
        let mut x = vec![self.x[0]];
        let mut v = vec![self.v[0]];
        for i in 1..self.x.len() - 1 {
            let (xa, va) = (*x.last().unwrap(), *v.last().unwrap());
            let s1 = (self.v[i] - va) / (self.x[i] - xa);
            let s2 = (self.v[i + 1] - self.v[i]) / (self.x[i + 1] - self.x[i]);
            if (s2 - s1).abs() > tol {
                x.push(self.x[i]);
                v.push(self.v[i]);
            }
        }
        x.push(*self.x.last().unwrap());
        v.push(*self.v.last().unwrap());
        Self {
            param: self.param,
            x,
            v,
        }
    }

    /// Sup-distance to another profile, evaluated on the union of knots
    /// inside [lo, right end].
    pub fn max_abs_diff(&self, other: &RadialProfile, lo: f64) -> f64 {
        self.x
            .iter()
            .chain(&other.x)
            .chain(std::iter::once(&lo))
            .filter(|&&t| t >= lo)
            .map(|&t| (self.eval(t) - other.eval(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Max over interior knots of the negative part of the second divided
    /// difference; zero iff the profile is convex.
    pub fn convexity_defect(&self) -> f64 {
        let s = self.slopes();
        let mut d: f64 = 0.0;
        for i in 1..s.len() {
            let dd = 2.0 * (s[i] - s[i - 1]) / (self.x[i + 1] - self.x[i - 1]);
            d = d.max(-dd);
        }
        d
    }

    /// Two-column CSV (x, f).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let head = match self.param {
            Parametrization::LogRadius => ["t", "f"],
            Parametrization::MinkowskiScale => ["s", "f"],
        };
        let io = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(head).map_err(io)?;
        for (x, v) in self.x.iter().zip(&self.v) {
            wr.write_record([x.to_string(), v.to_string()])
                .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Format(e.to_string()))
    }

    fn require(&self, p: Parametrization) -> Result<()> {
        if self.param != p {
            return Err(Error::InvalidProfile(format!("expected {p:?} profile")));
        }
        Ok(())
    }

    fn power_sum(&self, n: usize) -> Result<f64> {
        let mut e = 0.0;
        for (s, w) in self.slopes().iter().zip(self.x.windows(2)) {
            if *s < 0.0 {
                return Err(Error::ProfileNotIncreasing);
            }
            e += s.powi(n as i32 + 1) * (w[1] - w[0]);
        }
        Ok(e)
    }
}

/// Complex Monge-Ampère energy 2^{-n} ∫ (f')^{n+1} dt of φ = f(log|z|).
pub fn profile_energy_complex(f: &RadialProfile, n: usize) -> Result<f64> {
    f.require(Parametrization::LogRadius)?;
    Ok(f.power_sum(n)? / 2f64.powi(n as i32))
}

/// Real Monge-Ampère energy |Ω°| ∫₀¹ (f')^{n+1} ds of u = f(μ_Ω).
pub fn profile_energy_real(f: &RadialProfile, polar_volume: f64, n: usize) -> Result<f64> {
    f.require(Parametrization::MinkowskiScale)?;
    Ok(polar_volume * f.power_sum(n)?)
}

/// Monge-Ampère mass of the sublevel set {u < level}, where u is log|z|
/// (complex branch, `polar_volume = None`) or μ_Ω (real branch).
pub fn ma_mass_below(
    f: &RadialProfile,
    level: f64,
    n: usize,
    polar_volume: Option<f64>,
) -> Result<MassBelow> {
    let (lo, hi) = match polar_volume {
        None => {
            f.require(Parametrization::LogRadius)?;
            (f64::NEG_INFINITY, 0.0)
        }
        Some(_) => {
            f.require(Parametrization::MinkowskiScale)?;
            (0.0, 1.0)
        }
    };
    if !(level > lo && level < hi) {
        return Err(Error::LevelOutOfRange(level));
    }
    let scale = f.x.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let kink = f.x.iter().any(|&k| (k - level).abs() <= 1e-12 * scale);
    let s = f.left_slope(level);
    if s < 0.0 {
        return Err(Error::ProfileNotIncreasing);
    }
    let value = match polar_volume {
        None => (s / 2.0).powi(n as i32),
        Some(pv) => s.powi(n as i32) * pv,
    };
    Ok(MassBelow { value, kink })
}

/// One-variable observables F applied to potential values x ≤ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    /// |x|^p.
    Power { p: f64 },
    /// e^{-x}.
    ExpNeg,
    /// exp(κ (−x)^{(n+1)/n}).
    Moser { kappa: f64, n: usize },
    /// 1 if x < t.
    Indicator { t: f64 },
}

impl Observable {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Observable::Power { p } => {
                if p == 0.0 {
                    1.0
                } else {
                    x.abs().powf(p)
                }
            }
            Observable::ExpNeg => (-x).exp(),
            Observable::Moser { kappa, n } => {
                (kappa * (-x).max(0.0).powf((n as f64 + 1.0) / n as f64)).exp()
            }
            Observable::Indicator { t } => {
                if x < t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Surface area of the unit sphere in C^n = R^{2n}.
pub fn sphere_area(n: usize) -> f64 {
    let fact: f64 = (1..n).map(|k| k as f64).product();
    2.0 * PI.powi(n as i32) / fact
}

// ∫_a^b e^{c t + d} dt
fn exp_integral(c: f64, d: f64, a: f64, b: f64) -> f64 {
    if c.abs() * (b - a) < 1e-8 {
        let m = 0.5 * (a + b);
        (b - a) * (c * m + d).exp() * (1.0 + (c * (b - a)).powi(2) / 24.0)
    } else {
        ((c * b + d).exp() - (c * a + d).exp()) / c
    }
}

/// a_n ∫_{−∞}^0 F(f(t)) e^{2nt} dt, i.e. ∫_B F(φ) for φ = f(log|z|).
pub fn radial_integral(obs: &Observable, f: &RadialProfile, n: usize) -> Result<f64> {
    f.require(Parametrization::LogRadius)?;
    if n == 0 {
        return Err(Error::InvalidProfile("n must be positive".into()));
    }
    let k = 2.0 * n as f64;
    let mut total = obs.eval(f.v[0]) * (k * f.x[0]).exp() / k;
    for i in 0..f.x.len() - 1 {
        let (a, b) = (f.x[i], f.x[i + 1]);
        let (va, vb) = (f.v[i], f.v[i + 1]);
        let s = (vb - va) / (b - a);
        let piece = match *obs {
            Observable::Power { p } if p == 0.0 => exp_integral(k, 0.0, a, b),
            Observable::ExpNeg => exp_integral(k - s, -va + s * a, a, b),
            Observable::Indicator { t } => {
                // sub-interval where f < t
                let (lo, hi) = if s == 0.0 {
                    if va < t {
                        (a, b)
                    } else {
                        (a, a)
                    }
                } else {
                    let r = (a + (t - va) / s).clamp(a, b);
                    if s > 0.0 {
                        (a, r)
                    } else {
                        (r, b)
                    }
                };
                if hi > lo {
                    exp_integral(k, 0.0, lo, hi)
                } else {
                    0.0
                }
            }
            _ => {
                let g = |t: f64| obs.eval(va + s * (t - a)) * (k * t).exp();
                let crude = (b - a) * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b)) / 6.0;
                let tol = (1e-10 * crude.abs()).max(1e-300);
                quadrature::double_exponential::integrate(g, a, b, tol).integral
            }
        };
        total += piece;
    }
    let out = sphere_area(n) * total;
    if !out.is_finite() {
        return Err(Error::IntegralDiverges);
    }
    Ok(out)
}

/// ∫_K F(f(μ_K)) dx for a MinkowskiScale profile on a body K of the given
/// volume and dimension.
pub fn body_integral(obs: &Observable, f: &RadialProfile, dim: usize, volume: f64) -> Result<f64> {
    f.require(Parametrization::MinkowskiScale)?;
    if dim == 0 {
        return Err(Error::InvalidProfile("dimension must be positive".into()));
    }
    let n = dim as i32;
    let mut total = 0.0;
    for i in 0..f.x.len() - 1 {
        let (a, b) = (f.x[i], f.x[i + 1]);
        let (va, vb) = (f.v[i], f.v[i + 1]);
        let s = (vb - va) / (b - a);
        let piece = match *obs {
            Observable::Power { p } if p == 0.0 => b.powi(n) - a.powi(n),
            Observable::Indicator { t } => {
                let (lo, hi) = if s == 0.0 {
                    if va < t {
                        (a, b)
                    } else {
                        (a, a)
                    }
                } else {
                    let r = (a + (t - va) / s).clamp(a, b);
                    if s > 0.0 {
                        (a, r)
                    } else {
                        (r, b)
                    }
                };
                hi.powi(n) - lo.powi(n)
            }
            _ => {
                let g = |r: f64| obs.eval(va + s * (r - a)) * dim as f64 * r.powi(n - 1);
                let crude = (b - a) * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b)) / 6.0;
                let tol = (1e-10 * crude.abs()).max(1e-300);
                quadrature::double_exponential::integrate(g, a, b, tol).integral
            }
        };
        total += piece;
    }
    let out = volume * total;
    if !out.is_finite() {
        return Err(Error::IntegralDiverges);
    }
    Ok(out)
}

/// Convex conjugate g(p) = sup_{t ≤ 0} (p t − f(t)) of a convex LogRadius
/// profile, stored on p ∈ [0, p_max]; g ≡ 0 beyond p_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conjugate {
    p: Vec<f64>,
    g: Vec<f64>,
}

impl Conjugate {
    pub fn knots(&self) -> &[f64] {
        &self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn p_max(&self) -> f64 {
        *self.p.last().unwrap()
    }

    pub fn eval(&self, q: f64) -> f64 {
        if q >= self.p_max() {
            return 0.0;
        }
        let q = q.max(0.0);
        let i = self
            .p
            .partition_point(|&a| a <= q)
            .clamp(1, self.p.len() - 1)
            - 1;
        let w = (q - self.p[i]) / (self.p[i + 1] - self.p[i]);
        self.g[i] + w * (self.g[i + 1] - self.g[i])
    }

    /// (1 − t)·a + t·b on the union of knots.
    pub fn interpolate(a: &Conjugate, b: &Conjugate, t: f64) -> Conjugate {
        let mut p: Vec<f64> = a.p.iter().chain(&b.p).cloned().collect();
        p.sort_by(f64::total_cmp);
        p.dedup();
        let g = p
            .iter()
            .map(|&q| (1.0 - t) * a.eval(q) + t * b.eval(q))
            .collect();
        Conjugate { p, g }
    }

    /// Back-transform f(x) = sup_p (p x − g(p)).
    pub fn legendre(&self) -> Result<RadialProfile> {
        let m = self.p.len();
        let mut x = Vec::with_capacity(m);
        let mut v = Vec::with_capacity(m);
        for j in 1..m {
            let slope = (self.g[j] - self.g[j - 1]) / (self.p[j] - self.p[j - 1]);
            let val = self.p[j] * slope - self.g[j];
            if let Some(&last) = x.last() {
                if slope <= last {
                    continue;
                }
            }
            if slope >= 0.0 {
                break;
            }
            x.push(slope);
            v.push(val);
        }
        x.push(0.0);
        v.push(-self.g[m - 1]);
        if x.len() < 2 {
            // zero profile
            return Ok(RadialProfile::zero(Parametrization::LogRadius));
        }
        RadialProfile::new(Parametrization::LogRadius, x, v)
    }
}

/// Convex conjugate of a convex non-decreasing LogRadius profile.
pub fn legendre(f: &RadialProfile) -> Result<Conjugate> {
    f.require(Parametrization::LogRadius)?;
    let s = f.slopes();
    let tol = 1e-12 * s.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if s[0] < -tol || s.windows(2).any(|w| w[1] < w[0] - tol) {
        return Err(Error::ConjugateNotConvex);
    }
    let mut p = vec![0.0];
    let mut g = vec![-f.v[0]];
    for (i, &si) in s.iter().enumerate() {
        let val = si * f.x[i + 1] - f.v[i + 1];
        if si > *p.last().unwrap() + tol {
            p.push(si);
            g.push(val);
        } else {
            *g.last_mut().unwrap() = val.max(*g.last().unwrap());
        }
    }
    if p.len() == 1 {
        // f ≡ 0: conjugate is 0 on [0, ∞); keep a unit stub
        return Ok(Conjugate {
            p: vec![0.0, 1.0],
            g: vec![0.0, 0.0],
        });
    }
    Ok(Conjugate { p, g })
}
