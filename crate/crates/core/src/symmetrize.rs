//! Distribution functions σ(t) = |{φ < t}|, Schwarz and Ω-symmetrization,
//! and the concavity diagnostics behind them.
//!
//! σ is measured on sub-cells: every lattice cell (mask cells plus the
//! ghost layer) carries the local quadratic model of φ, is split into m^d
//! sub-cells, and each sub-cell contributes the exact fraction of its
//! linearised values lying below t (a box-spline CDF). Sub-cells whose
//! centre falls outside the domain are dropped, so σ(0⁻) resolves the
//! domain boundary at scale h/m.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};
use crate::fields::padded::Padded;
use crate::fields::{FieldKind, GridField};
use crate::profiles::{Observable, Parametrization, RadialProfile};

/// Controls of the σ estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaOptions {
    /// Number of uniformly spaced levels in (min φ, 0].
    pub levels: usize,
    /// Sub-cells per axis.
    pub subcells: usize,
    /// Levels whose σ is below this many cell volumes are not inverted.
    pub min_cells: f64,
}

impl SigmaOptions {
    pub fn for_dim(d: usize) -> Self {
        let subcells = match d {
            1 | 2 => 4,
            3 => 3,
            _ => 2,
        };
        Self {
            levels: 64,
            subcells,
            min_cells: 400.0,
        }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }
}

/// Sorted pairs (tᵢ, σᵢ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFunction {
    pub levels: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Exact volume of the field's domain.
    pub domain_volume: f64,
    /// Real dimension of the lattice.
    pub dim: usize,
    /// Cell volume h^d.
    pub cell_volume: f64,
    pub min_value: f64,
    /// Constant field: only the two-point distribution is meaningful.
    pub degenerate: bool,
}

impl DistributionFunction {
    /// σ by linear interpolation between levels (0 below the first).
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.levels.partition_point(|&l| l < t);
        if k == 0 {
            return if t > self.min_value {
                self.sigma[0] * (t - self.min_value) / (self.levels[0] - self.min_value)
            } else {
                0.0
            };
        }
        if k == self.levels.len() {
            return *self.sigma.last().unwrap();
        }
        let w = (t - self.levels[k - 1]) / (self.levels[k] - self.levels[k - 1]);
        self.sigma[k - 1] + w * (self.sigma[k] - self.sigma[k - 1])
    }

    /// Number of adjacent level pairs with equal σ.
    pub fn flat_bins(&self) -> usize {
        self.sigma.windows(2).filter(|w| w[1] <= w[0]).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(["t", "sigma"]).map_err(io)?;
        for (t, s) in self.levels.iter().zip(&self.sigma) {
            wr.write_record([t.to_string(), s.to_string()])
                .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// σ at `levels` uniformly spaced levels min φ + k(0 − min φ)/K, k = 1..K.
pub fn distribution(field: &GridField, opts: &SigmaOptions) -> Result<DistributionFunction> {
    if opts.levels < 64 {
        return Err(Error::InvalidGrid(format!(
            "{} levels requested, need at least 64",
            opts.levels
        )));
    }
    let min = field.min_value();
    let k = opts.levels;
    if min >= 0.0 || -min < 1e-12 {
        let vol = field.domain().volume(field.dim())?;
        return Ok(DistributionFunction {
            levels: vec![min.min(0.0), 0.0],
            sigma: vec![0.0, vol],
            domain_volume: vol,
            dim: field.dim(),
            cell_volume: field.h().powi(field.dim() as i32),
            min_value: min,
            degenerate: true,
        });
    }
    let levels: Vec<f64> = (1..=k)
        .map(|i| min + i as f64 * (0.0 - min) / k as f64)
        .collect();
    distribution_at(field, &levels, opts.subcells)
}

/// σ at arbitrary increasing levels.
pub fn distribution_at(
    field: &GridField,
    levels: &[f64],
    subcells: usize,
) -> Result<DistributionFunction> {
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "levels must be strictly increasing".into(),
        ));
    }
    if subcells == 0 {
        return Err(Error::InvalidGrid("need at least one sub-cell".into()));
    }
    let d = field.dim();
    let sigma = sublevel_volumes(field, levels, subcells);
    Ok(DistributionFunction {
        levels: levels.to_vec(),
        sigma,
        domain_volume: field.domain().volume(d)?,
        dim: d,
        cell_volume: field.h().powi(d as i32),
        min_value: field.min_value(),
        degenerate: false,
    })
}

struct CellModel {
    v: f64,
    g: [f64; 4],
    hs: [[f64; 4]; 4],
    centre: [f64; 4],
    /// Cell fully inside the domain: no per-sub-cell clipping needed.
    interior: bool,
}

fn cell_model(p: &Padded, field: &GridField, q: usize) -> CellModel {
    let d = p.d;
    let h = p.h;
    let mut g = [0.0; 4];
    let mut hs = [[0.0; 4]; 4];
    let lat = field.lattice();
    let mut centre = [0.0; 4];
    for k in 0..d {
        let c = p.coord(q, k) as isize - crate::fields::padded::PAD as isize;
        centre[k] = lat.coord(k, 0) + c as f64 * h;
        let fw = p.step(q, k, 1).filter(|&r| p.known[r]);
        let bw = p.step(q, k, -1).filter(|&r| p.known[r]);
        g[k] = match (fw, bw) {
            (Some(a), Some(b)) => (p.vals[a] - p.vals[b]) / (2.0 * h),
            (Some(a), None) => (p.vals[a] - p.vals[q]) / h,
            (None, Some(b)) => (p.vals[q] - p.vals[b]) / h,
            (None, None) => 0.0,
        };
    }
    // Hessian only where the full stencil is known
    let mut full = true;
    let mut interior = p.in_mask[q];
    for i in 0..d {
        for s in [-1isize, 1] {
            match p.step(q, i, s) {
                Some(r) => {
                    full &= p.known[r];
                    interior &= p.in_mask[r];
                }
                None => full = false,
            }
            for j in i + 1..d {
                for t in [-1isize, 1] {
                    match p.step(q, i, s).and_then(|r| p.step(r, j, t)) {
                        Some(r) => {
                            full &= p.known[r];
                            interior &= p.in_mask[r];
                        }
                        None => full = false,
                    }
                }
            }
        }
    }
    if full {
        hs = p.hessian(q);
    }
    // with every neighbour in the (convex) domain the cell lies inside it;
    // in 1-D the axis neighbours suffice
    CellModel {
        v: p.vals[q],
        g,
        hs,
        centre,
        interior: interior && full,
    }
}

/// Fraction of a box [−a/2, a/2]^d, mapped by the sum of coordinates,
/// lying below s: the CDF of a sum of independent uniforms.
#[cfg(test)]
fn box_cdf(s: f64, a: &[f64], d: usize) -> f64 {
    BoxSpline::new(&a[..d]).cdf(s)
}

/// Precomputed subset sums of the box widths.
struct BoxSpline {
    d: usize,
    half: f64,
    sum: f64,
    shifts: [f64; 16],
    signs: [f64; 16],
    norm: f64,
}

impl BoxSpline {
    fn new(a: &[f64]) -> Self {
        let d = a.len();
        let mut shifts = [0.0; 16];
        let mut signs = [0.0; 16];
        for sub in 0..(1usize << d) {
            let mut z = 0.0;
            let mut sign = 1.0;
            for (k, ak) in a.iter().enumerate() {
                if sub >> k & 1 == 1 {
                    z += ak;
                    sign = -sign;
                }
            }
            shifts[sub] = z;
            signs[sub] = sign;
        }
        let sum: f64 = a.iter().sum();
        let fact: f64 = (1..=d).map(|k| k as f64).product();
        let prod: f64 = a.iter().product();
        Self {
            d,
            half: 0.5 * sum,
            sum,
            shifts,
            signs,
            norm: 1.0 / (fact * prod),
        }
    }

    #[inline]
    fn cdf(&self, s: f64) -> f64 {
        let base = s + self.half;
        if base <= 0.0 {
            return 0.0;
        }
        if base >= self.sum {
            return 1.0;
        }
        let mut acc = 0.0;
        for sub in 0..(1usize << self.d) {
            let z = base - self.shifts[sub];
            if z > 0.0 {
                let p = match self.d {
                    1 => z,
                    2 => z * z,
                    3 => z * z * z,
                    _ => {
                        let z2 = z * z;
                        z2 * z2
                    }
                };
                acc += self.signs[sub] * p;
            }
        }
        (acc * self.norm).clamp(0.0, 1.0)
    }
}

/// Widths above 1e-3 of their sum, their count and the full sum.
fn significant(a: &[f64; 4], d: usize) -> ([f64; 4], usize, f64) {
    let total: f64 = a[..d].iter().sum();
    let mut kept = [0.0; 4];
    let mut dd = 0;
    for &ak in a.iter().take(d) {
        if ak > 1e-3 * total {
            kept[dd] = ak;
            dd += 1;
        }
    }
    (kept, dd, total)
}

fn sublevel_volumes(field: &GridField, levels: &[f64], m: usize) -> Vec<f64> {
    let p = field.padded();
    let d = p.d;
    let h = p.h;
    let hs = h / m as f64;
    let w = hs.powi(d as i32);
    let kn = levels.len();
    let cells: Vec<usize> = (0..p.len()).filter(|&q| p.known[q]).collect();
    let domain = field.domain();
    let offsets: Vec<f64> = (0..m)
        .map(|j| ((j as f64 + 0.5) / m as f64 - 0.5) * h)
        .collect();
    let nsub = m.pow(d as u32);
    let chunk = 256;
    let parts: Vec<(Vec<f64>, Vec<f64>)> = cells
        .par_chunks(chunk)
        .map(|qs| {
            let mut direct = vec![0.0; kn];
            let mut diff = vec![0.0; kn + 1];
            for &q in qs {
                let c = cell_model(&p, field, q);
                let curv = (0..d).map(|k| c.hs[k][k]).sum::<f64>() * hs * hs / 24.0;
                let gauge = (!c.interior).then(|| {
                    let g0 = domain.gauge(&c.centre[..d]);
                    let mut gg = [0.0; 4];
                    let mut xp = [0.0; 4];
                    for k in 0..d {
                        xp[..d].copy_from_slice(&c.centre[..d]);
                        xp[k] += 0.5 * hs;
                        let up = domain.gauge(&xp[..d]);
                        xp[k] -= hs;
                        gg[k] = (up - domain.gauge(&xp[..d])) / hs;
                    }
                    (g0, gg)
                });
                for sub in 0..nsub {
                    let mut y = [0.0; 4];
                    let mut r = sub;
                    for yk in y.iter_mut().take(d) {
                        *yk = offsets[r % m];
                        r /= m;
                    }
                    // fraction of the sub-cell inside the domain, from the
                    // linearised gauge
                    let mut inside = 1.0;
                    if let Some((g0, gg)) = &gauge {
                        let mut gv = *g0;
                        let mut ga = [0.0; 4];
                        for k in 0..d {
                            gv += gg[k] * y[k];
                            ga[k] = (gg[k] * hs).abs();
                        }
                        let (kept, dd, total) = significant(&ga, d);
                        inside = if gv - 0.5 * total >= 1.0 {
                            0.0
                        } else if gv + 0.5 * total <= 1.0 {
                            1.0
                        } else if dd == 0 {
                            if gv < 1.0 {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            BoxSpline::new(&kept[..dd]).cdf(1.0 - gv)
                        };
                        if inside == 0.0 {
                            continue;
                        }
                    }
                    // mean of the quadratic over the sub-cell
                    let mut v = c.v + curv;
                    let mut a = [0.0; 4];
                    for i in 0..d {
                        let mut hy = 0.0;
                        for j in 0..d {
                            hy += c.hs[i][j] * y[j];
                        }
                        v += y[i] * (c.g[i] + 0.5 * hy);
                        a[i] = ((c.g[i] + hy) * hs).abs();
                    }
                    let (kept, dd, total) = significant(&a, d);
                    let lo = v - 0.5 * total;
                    let hi = v + 0.5 * total;
                    let full_from = if dd == 0 {
                        levels.partition_point(|&t| t <= v)
                    } else {
                        levels.partition_point(|&t| t < hi)
                    };
                    // {φ < t} and the domain are nested up to discretisation,
                    // so their intersection is the smaller of the two
                    let wi = w * inside;
                    diff[full_from] += wi;
                    if dd > 0 {
                        let start = levels.partition_point(|&t| t <= lo);
                        if start < full_from {
                            let bs = BoxSpline::new(&kept[..dd]);
                            for kk in start..full_from {
                                direct[kk] += w * bs.cdf(levels[kk] - v).min(inside);
                            }
                        }
                    }
                }
            }
            (direct, diff)
        })
        .collect();
    let mut sigma = vec![0.0; kn];
    let mut diff = vec![0.0; kn + 1];
    for (a, b) in parts {
        for k in 0..kn {
            sigma[k] += a[k];
        }
        for k in 0..=kn {
            diff[k] += b[k];
        }
    }
    let mut run = 0.0;
    for k in 0..kn {
        run += diff[k];
        sigma[k] += run;
    }
    sigma
}

/// Knots (t, σ) that survive the sampling threshold, strictly increasing
/// in σ (ties resolve to the smaller t), ending at t = 0.
fn usable_knots(dist: &DistributionFunction, min_cells: f64) -> Vec<(f64, f64)> {
    let floor = min_cells * dist.cell_volume;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (&t, &s) in dist.levels.iter().zip(&dist.sigma) {
        if s < floor || t >= 0.0 {
            continue;
        }
        if out.last().map_or(true, |&(_, last)| s > last) {
            out.push((t, s));
        }
    }
    out
}

/// Schwarz symmetrization. Complex fields give a LogRadius profile f with
/// φ̂(z) = f(log|z|) on the unit ball; real fields give a MinkowskiScale
/// profile of the ball with the domain's volume.
pub fn schwarz(field: &GridField, opts: &SigmaOptions) -> Result<RadialProfile> {
    let dist = distribution(field, opts)?;
    profile_from_distribution(&dist, field.kind(), opts.min_cells)
}

/// Invert σ into the symmetric profile.
pub fn profile_from_distribution(
    dist: &DistributionFunction,
    kind: FieldKind,
    min_cells: f64,
) -> Result<RadialProfile> {
    let vol = dist.domain_volume;
    let d = dist.dim as f64;
    if dist.degenerate {
        return Ok(match kind {
            FieldKind::Complex => RadialProfile::zero(Parametrization::LogRadius),
            FieldKind::RealConvex => RadialProfile::zero(Parametrization::MinkowskiScale),
        });
    }
    let knots = usable_knots(dist, min_cells);
    match kind {
        FieldKind::Complex => {
            let mut xs: Vec<(f64, f64)> = Vec::new();
            for (t, s) in knots {
                let x = (s / vol).ln() / d;
                if x < 0.0 && xs.last().map_or(true, |&(px, _)| x > px) {
                    xs.push((x, t));
                }
            }
            xs.push((0.0, 0.0));
            if xs.len() < 2 {
                return Ok(RadialProfile::zero(Parametrization::LogRadius));
            }
            RadialProfile::log_radius(&xs)
        }
        FieldKind::RealConvex => {
            let mut ss: Vec<(f64, f64)> = Vec::new();
            for (t, s) in knots {
                let r = (s / vol).powf(1.0 / d);
                if r < 1.0 && ss.last().map_or(true, |&(pr, _)| r > pr) {
                    ss.push((r, t));
                }
            }
            let first = ss.first().map_or(dist.min_value, |k| k.1);
            ss.insert(0, (0.0, first));
            ss.push((1.0, 0.0));
            RadialProfile::minkowski(&ss)
        }
    }
}

/// Ω-symmetrization: the profile f with |{f(μ_{sΩ}) < t}| = σ(t), where sΩ
/// is the dilate of Ω with the field's domain volume. Complex fields give
/// the LogRadius profile of f(log μ_{sΩ}), which coincides with the
/// Schwarz profile.
pub fn omega_symmetrize(
    field: &GridField,
    body: &ConvexBody,
    opts: &SigmaOptions,
) -> Result<RadialProfile> {
    if body.dim() != field.dim() {
        return Err(Error::InvalidBody(
            "body dimension differs from the field".into(),
        ));
    }
    schwarz(field, opts)
}

/// |(sΩ)°| for the dilate sΩ of `body` with the field's domain volume.
pub fn scaled_polar_volume(field: &GridField, body: &ConvexBody) -> Result<f64> {
    let dom = field.domain().volume(field.dim())?;
    Ok(body.polar()?.volume()? * body.volume()? / dom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionRecord {
    pub observable: Observable,
    pub grid: f64,
    pub radial: f64,
    pub rel_gap: f64,
}

/// Compare Σ F(φ) h^d with the integral of F over the symmetric profile.
pub fn equidistribution_check(
    field: &GridField,
    profile: &RadialProfile,
    observables: &[Observable],
) -> Result<Vec<EquidistributionRecord>> {
    let d = field.dim();
    let vol = field.domain().volume(d)?;
    observables
        .iter()
        .map(|obs| {
            let grid = field.integrate(|v| obs.eval(v));
            let radial = match profile.parametrization() {
                Parametrization::LogRadius => {
                    if field.kind() != FieldKind::Complex {
                        return Err(Error::InvalidProfile(
                            "log-radius profile for a real field".into(),
                        ));
                    }
                    crate::profiles::radial_integral(obs, profile, d / 2)? * vol
                        / crate::bodies::unit_ball_volume(d)
                }
                Parametrization::MinkowskiScale => {
                    crate::profiles::body_integral(obs, profile, d, vol)?
                }
            };
            let rel_gap = (grid - radial).abs() / radial.abs().max(f64::MIN_POSITIVE);
            Ok(EquidistributionRecord {
                observable: *obs,
                grid,
                radial,
                rel_gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConcavityMode {
    /// log σ.
    Log,
    /// σ^{1/N}.
    Root { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub defect: f64,
    /// Probed levels.
    pub probes: usize,
    /// Leading levels dropped because σ was below the sampling floor.
    pub dropped: usize,
    pub flat_bins: usize,
}

/// Largest positive second divided difference of log σ or σ^{1/N}, probing
/// every `stride`-th level among those above the sampling floor.
pub fn concavity_diagnostics(
    dist: &DistributionFunction,
    mode: ConcavityMode,
    stride: usize,
    min_cells: f64,
) -> Result<ConcavityReport> {
    let stride = stride.max(1);
    let floor = (min_cells * dist.cell_volume).max(f64::MIN_POSITIVE);
    let first = dist
        .sigma
        .iter()
        .position(|&s| s >= floor)
        .unwrap_or(dist.sigma.len());
    let idx: Vec<usize> = (first..dist.levels.len()).step_by(stride).collect();
    let y: Vec<f64> = idx
        .iter()
        .map(|&i| match mode {
            ConcavityMode::Log => dist.sigma[i].ln(),
            ConcavityMode::Root { n } => dist.sigma[i].powf(1.0 / n as f64),
        })
        .collect();
    let mut defect: f64 = 0.0;
    for j in 1..y.len().saturating_sub(1) {
        let (t0, t1, t2) = (
            dist.levels[idx[j - 1]],
            dist.levels[idx[j]],
            dist.levels[idx[j + 1]],
        );
        let dd = 2.0 * ((y[j + 1] - y[j]) / (t2 - t1) - (y[j] - y[j - 1]) / (t1 - t0)) / (t2 - t0);
        defect = defect.max(dd);
    }
    if y.len() < 3 {
        return Err(Error::InsufficientSampling(y.len()));
    }
    Ok(ConcavityReport {
        defect,
        probes: y.len(),
        dropped: first,
        flat_bins: dist.flat_bins(),
    })
}

/// A function a(s, t) sampled on a rectangular grid, a[i][j] = a(s_i, t_j).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled2D {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

/// Build k(s, x) with a(s, k(s, x)) = x by monotone inversion in t and
/// return the largest violation of midpoint convexity of k on a joint
/// (s, x) grid with `x_samples` uniform x values.
pub fn concave_inverse_convexity(a: &Sampled2D, x_samples: usize) -> Result<f64> {
    let (ns, nt) = (a.s.len(), a.t.len());
    if ns < 3 || nt < 2 || a.a.len() != ns || a.a.iter().any(|r| r.len() != nt) || x_samples < 3 {
        return Err(Error::InvalidGrid(
            "need at least a 3 × 2 sample grid".into(),
        ));
    }
    if a.a.iter().any(|r| r.windows(2).any(|w| w[1] <= w[0])) {
        return Err(Error::NotMonotone);
    }
    let lo = a.a.iter().map(|r| r[0]).fold(f64::NEG_INFINITY, f64::max);
    let hi = a.a.iter().map(|r| r[nt - 1]).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::InvalidGrid("rows share no common range".into()));
    }
    let xs: Vec<f64> = (0..x_samples)
        .map(|l| lo + (hi - lo) * l as f64 / (x_samples - 1) as f64)
        .collect();
    let k: Vec<Vec<f64>> =
        a.a.iter()
            .map(|row| {
                xs.iter()
                    .map(|&x| {
                        let j = row.partition_point(|&v| v < x).clamp(1, nt - 1);
                        let w = (x - row[j - 1]) / (row[j] - row[j - 1]);
                        a.t[j - 1] + w * (a.t[j] - a.t[j - 1])
                    })
                    .collect()
            })
            .collect();
    let uniform_s =
        a.s.windows(3)
            .all(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs() < 1e-12 * (1.0 + w[2].abs()));
    if !uniform_s {
        return Err(Error::InvalidGrid("s samples must be uniform".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 1..ns - 1 {
        for l in 1..x_samples - 1 {
            let c = k[i][l];
            for (di, dl) in [(1isize, 0isize), (0, 1), (1, 1), (1, -1)] {
                let (i0, l0) = ((i as isize - di) as usize, (l as isize - dl) as usize);
                let (i1, l1) = ((i as isize + di) as usize, (l as isize + dl) as usize);
                worst = worst.max(c - 0.5 * (k[i0][l0] + k[i1][l1]));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldGeneratorSpec, GridSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn box_cdf_limits() {
        let a = [0.2, 0.1, 0.3, 0.05];
        for d in 1..=4 {
            assert_eq!(box_cdf(-1.0, &a, d), 0.0);
            assert_eq!(box_cdf(1.0, &a, d), 1.0);
            assert_relative_eq!(box_cdf(0.0, &a, d), 0.5, epsilon = 1e-12);
        }
        // one dimension: uniform
        assert_relative_eq!(box_cdf(0.05, &[0.2], 1), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn log_disc_areas() {
        let g = GridSpec::ball(FieldKind::Complex, 2, 256).unwrap();
        let prof = RadialProfile::log_radius(&[(-4.0, -4.0), (0.0, 0.0)]).unwrap();
        let f = generate(&FieldGeneratorSpec::Radial { profile: prof }, &g).unwrap();
        let levels: Vec<f64> = (0..20).map(|i| -2.0 + 1.9 * i as f64 / 19.0).collect();
        let dist = distribution_at(&f, &levels, 4).unwrap();
        for (t, s) in dist.levels.iter().zip(&dist.sigma) {
            let exact = PI * (2.0 * t).exp();
            assert!(
                (s - exact).abs() < 0.02 * exact,
                "t={t} σ={s} exact={exact}"
            );
        }
    }

    #[test]
    fn inverse_of_shifted_parabola_is_convex() {
        let s: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let t: Vec<f64> = (0..21).map(|j| -3.0 + 0.3 * j as f64).collect();
        let a = Sampled2D {
            a: s.iter()
                .map(|&si| t.iter().map(|&tj| tj - si * si).collect())
                .collect(),
            s,
            t,
        };
        assert!(concave_inverse_convexity(&a, 15).unwrap() < 1e-12);
        let mut bad = a.clone();
        bad.a[3][5] = bad.a[3][4];
        assert_eq!(concave_inverse_convexity(&bad, 15), Err(Error::NotMonotone));
    }

    #[test]
    fn affine_log_sigma_has_no_defect() {
        let levels: Vec<f64> = (1..=64).map(|k| -2.0 + 2.0 * k as f64 / 64.0).collect();
        let dist = DistributionFunction {
            sigma: levels.iter().map(|t| PI * (2.0 * t).exp()).collect(),
            levels,
            domain_volume: PI,
            dim: 2,
            cell_volume: 1e-6,
            min_value: -2.0,
            degenerate: false,
        };
        let r = concavity_diagnostics(&dist, ConcavityMode::Log, 1, 400.0).unwrap();
        assert!(r.defect < 1e-9);
        // log σ = t² has second derivative 2
        let convex = DistributionFunction {
            sigma: dist.levels.iter().map(|t| (t * t).exp()).collect(),
            ..dist
        };
        let r = concavity_diagnostics(&convex, ConcavityMode::Log, 2, 400.0).unwrap();
        assert_relative_eq!(r.defect, 2.0, max_relative = 1e-6);
    }
}
