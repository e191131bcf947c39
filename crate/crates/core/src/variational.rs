//! Paths of radial potentials: geodesics through conjugate interpolation,
//! max-type subgeodesics and linear paths, with their energy curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{FieldKind, GridField};
use crate::profiles::{
    legendre, profile_energy_complex, Conjugate, Parametrization, RadialProfile,
};
use crate::symmetrize::{concave_inverse_convexity, distribution_at, Sampled2D, SigmaOptions};

/// Default number of uniform samples of the path parameter.
pub const PATH_SAMPLES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathKind {
    Geodesic,
    /// max(f₀ − c·t, f₁ − c·(1 − t), K·x).
    Subgeodesic {
        c: f64,
    },
    Linear,
}

/// A path t ↦ f_t of LogRadius profiles on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPath {
    f0: RadialProfile,
    f1: RadialProfile,
    kind: PathKind,
    conj: Option<(Conjugate, Conjugate)>,
    barrier: f64,
}

fn require_log(f: &RadialProfile) -> Result<()> {
    if f.parametrization() != Parametrization::LogRadius {
        return Err(Error::InvalidProfile(
            "paths need log-radius profiles".into(),
        ));
    }
    Ok(())
}

/// max |f₀ − f₁|, attained at a knot of either profile.
fn sup_distance(a: &RadialProfile, b: &RadialProfile) -> f64 {
    a.knots()
        .iter()
        .chain(b.knots())
        .map(|&x| (a.eval(x) - b.eval(x)).abs())
        .fold(0.0, f64::max)
}

impl PotentialPath {
    pub fn geodesic(f0: RadialProfile, f1: RadialProfile) -> Result<Self> {
        require_log(&f0)?;
        require_log(&f1)?;
        let conj = Some((legendre(&f0)?, legendre(&f1)?));
        Ok(Self {
            f0,
            f1,
            kind: PathKind::Geodesic,
            conj,
            barrier: 0.0,
        })
    }

    /// The barrier slope K is the larger final slope of the endpoints, so
    /// K·x lies below both and the endpoints are attained.
    pub fn subgeodesic(f0: RadialProfile, f1: RadialProfile, c: f64) -> Result<Self> {
        require_log(&f0)?;
        require_log(&f1)?;
        let required = sup_distance(&f0, &f1);
        if !(c >= required) {
            return Err(Error::EndpointsNotAttained { c, required });
        }
        let last = |f: &RadialProfile| f.slopes().last().copied().unwrap_or(0.0);
        let barrier = last(&f0).max(last(&f1)).max(0.0);
        let conv = |f: &RadialProfile| f.convexity_defect() <= 1e-12 * (1.0 + f.min_value().abs());
        if !conv(&f0) || !conv(&f1) {
            return Err(Error::ConjugateNotConvex);
        }
        Ok(Self {
            f0,
            f1,
            kind: PathKind::Subgeodesic { c },
            conj: None,
            barrier,
        })
    }

    pub fn linear(f0: RadialProfile, f1: RadialProfile) -> Result<Self> {
        require_log(&f0)?;
        require_log(&f1)?;
        Ok(Self {
            f0,
            f1,
            kind: PathKind::Linear,
            conj: None,
            barrier: 0.0,
        })
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn endpoints(&self) -> (&RadialProfile, &RadialProfile) {
        (&self.f0, &self.f1)
    }

    pub fn at(&self, t: f64) -> Result<RadialProfile> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidProfile(format!(
                "path parameter {t} outside [0, 1]"
            )));
        }
        match self.kind {
            PathKind::Geodesic => {
                if t == 0.0 {
                    return Ok(self.f0.clone());
                }
                if t == 1.0 {
                    return Ok(self.f1.clone());
                }
                let (a, b) = self.conj.as_ref().expect("geodesic conjugates");
                Conjugate::interpolate(a, b, t).legendre()
            }
            PathKind::Linear => {
                let xs = merged_knots(&[&self.f0, &self.f1]);
                let pts: Vec<(f64, f64)> = xs
                    .iter()
                    .map(|&x| (x, (1.0 - t) * self.f0.eval(x) + t * self.f1.eval(x)))
                    .collect();
                RadialProfile::log_radius(&collinear_free(pts))
            }
            PathKind::Subgeodesic { c } => self.subgeodesic_profile(c, t),
        }
    }

    fn subgeodesic_profile(&self, c: f64, t: f64) -> Result<RadialProfile> {
        let (s0, s1) = (c * t, c * (1.0 - t));
        let k = self.barrier;
        let eval = |x: f64| {
            (self.f0.eval(x) - s0)
                .max(self.f1.eval(x) - s1)
                .max(k * x)
                .min(0.0)
        };
        let mut xs = merged_knots(&[&self.f0, &self.f1]);
        let low = (self.f0.min_value() - s0).max(self.f1.min_value() - s1);
        if k > 0.0 {
            xs.push(low / k - 1.0);
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        // crossings of the three linear pieces inside each interval
        let mut pts: Vec<f64> = xs.clone();
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let lines = |x: f64| [self.f0.eval(x) - s0, self.f1.eval(x) - s1, k * x];
            let (la, lb) = (lines(a), lines(b));
            for i in 0..3 {
                for j in i + 1..3 {
                    let (da, db) = (la[i] - la[j], lb[i] - lb[j]);
                    if da * db < 0.0 {
                        pts.push(a + (b - a) * da / (da - db));
                    }
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|p, q| (*p - *q).abs() < 1e-14);
        let knots: Vec<(f64, f64)> = pts.iter().map(|&x| (x, eval(x))).collect();
        RadialProfile::log_radius(&collinear_free(knots))
    }

    /// Distinct slopes of f_t, the kink-collision fingerprint.
    fn slope_count(&self, t: f64) -> Result<usize> {
        let f = self.at(t)?;
        let mut s = f.slopes();
        s.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
        Ok(s.len())
    }
}

fn merged_knots(fs: &[&RadialProfile]) -> Vec<f64> {
    let mut xs: Vec<f64> = fs.iter().flat_map(|f| f.knots().iter().copied()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

/// Drop interior knots where the slope does not change.
fn collinear_free(pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while out.len() >= 2 {
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let s1 = (b.1 - a.1) / (b.0 - a.0);
            let s2 = (p.1 - b.1) / (p.0 - b.0);
            if (s1 - s2).abs() <= 1e-12 * (1.0 + s1.abs().max(s2.abs())) {
                out.pop();
            } else {
                break;
            }
        }
        out.push(p);
    }
    out
}

pub fn geodesic_at(path: &PotentialPath, t: f64) -> Result<RadialProfile> {
    if path.kind != PathKind::Geodesic {
        return Err(Error::Unsupported("not a geodesic path".into()));
    }
    path.at(t)
}

pub fn subgeodesic_at(path: &PotentialPath, t: f64) -> Result<RadialProfile> {
    if !matches!(path.kind, PathKind::Subgeodesic { .. }) {
        return Err(Error::Unsupported("not a subgeodesic path".into()));
    }
    path.at(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub t: Vec<f64>,
    pub energy: Vec<f64>,
    /// max |E(t) − chord(t)| / max(|E(0)|, |E(1)|, 1e-300).
    pub chord_deviation: f64,
    /// Largest positive second difference E(t−δ) − 2E(t) + E(t+δ), divided
    /// by δ², relative to the energy scale.
    pub concavity_defect: f64,
    /// Largest negative second difference, same normalisation.
    pub convexity_defect: f64,
}

impl EnergyCurve {
    pub fn scale(&self) -> f64 {
        self.energy.iter().fold(1e-300, |a, b| a.max(b.abs()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(["t", "energy", "chord_deviation", "second_difference"])
            .map_err(io)?;
        let m = self.t.len();
        let (e0, e1) = (self.energy[0], self.energy[m - 1]);
        for i in 0..m {
            let chord = e0 + (e1 - e0) * self.t[i];
            let dd = if i > 0 && i + 1 < m {
                self.energy[i - 1] - 2.0 * self.energy[i] + self.energy[i + 1]
            } else {
                0.0
            };
            wr.write_record([
                self.t[i].to_string(),
                self.energy[i].to_string(),
                (self.energy[i] - chord).to_string(),
                dd.to_string(),
            ])
            .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn energy_curve(path: &PotentialPath, n: usize, samples: usize) -> Result<EnergyCurve> {
    if samples < 3 {
        return Err(Error::InvalidGrid("need at least 3 path samples".into()));
    }
    let t: Vec<f64> = (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect();
    let energy = t
        .par_iter()
        .map(|&s| profile_energy_complex(&path.at(s)?, n))
        .collect::<Result<Vec<f64>>>()?;
    let m = samples;
    let (e0, e1) = (energy[0], energy[m - 1]);
    let scale = energy.iter().fold(1e-300f64, |a, b| a.max(b.abs()));
    let ends = e0.abs().max(e1.abs()).max(1e-300);
    let chord_deviation = t
        .iter()
        .zip(&energy)
        .map(|(s, e)| (e - (e0 + (e1 - e0) * s)).abs())
        .fold(0.0, f64::max)
        / ends;
    let dt = 1.0 / (m - 1) as f64;
    let mut up: f64 = 0.0;
    let mut down: f64 = 0.0;
    for i in 1..m - 1 {
        let dd = (energy[i - 1] - 2.0 * energy[i] + energy[i + 1]) / (dt * dt) / scale;
        up = up.max(dd);
        down = down.max(-dd);
    }
    Ok(EnergyCurve {
        t,
        energy,
        chord_deviation,
        concavity_defect: up,
        convexity_defect: down,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub t: f64,
    /// Central difference of the energy curve.
    pub finite_difference: f64,
    /// (n + 1) ∫ −φ̇ (dd^c φ)^n from the radial quadrature.
    pub quadrature: f64,
    pub rel_gap: f64,
    /// The slope structure changes across t; the comparison is skipped.
    pub kink_collision: bool,
}

/// Compare dE/dt from finite differences with the radial realisation of
/// (n + 1) ∫ −φ̇ (dd^c φ)^n.
pub fn energy_derivative_check(path: &PotentialPath, t: f64, n: usize) -> Result<DerivativeCheck> {
    let delta = 1e-4;
    let (lo, hi) = ((t - delta).max(0.0), (t + delta).min(1.0));
    let fd = (profile_energy_complex(&path.at(hi)?, n)?
        - profile_energy_complex(&path.at(lo)?, n)?)
        / (hi - lo);
    let collision = path.slope_count(lo)? != path.slope_count(hi)?;
    let ft = path.at(t)?;
    let norm = 0.5f64.powi(n as i32);
    let quad = match path.kind {
        PathKind::Linear => {
            // atoms 2^{-n}(s_i^n − s_{i−1}^n) on the spheres log|z| = x_i
            let x = ft.knots();
            let s = ft.slopes();
            let mut acc = 0.0;
            let mut prev = 0.0f64;
            for (i, &si) in s.iter().enumerate() {
                let fdot = path.f1.eval(x[i]) - path.f0.eval(x[i]);
                acc += -fdot * norm * (si.powi(n as i32) - prev.powi(n as i32));
                prev = si;
            }
            (n as f64 + 1.0) * acc
        }
        PathKind::Geodesic => {
            // in slope coordinates: (n + 1) ∫ ġ(p) d(2^{-n} p^n)
            let (a, b) = path.conj.as_ref().expect("geodesic conjugates");
            let mut p: Vec<f64> = a.knots().iter().chain(b.knots()).copied().collect();
            p.sort_by(f64::total_cmp);
            p.dedup();
            let gdot = |q: f64| b.eval(q) - a.eval(q);
            let mut acc = 0.0;
            for w in p.windows(2) {
                let (p0, p1) = (w[0], w[1]);
                // ġ is linear on [p0, p1]; integrate against n p^{n−1} exactly
                let (g0, g1) = (gdot(p0), gdot(p1));
                let slope = (g1 - g0) / (p1 - p0);
                let nn = n as i32;
                let int_pn1 = p1.powi(nn) - p0.powi(nn);
                let int_pn = (n as f64 / (n as f64 + 1.0)) * (p1.powi(nn + 1) - p0.powi(nn + 1));
                acc += (g0 - slope * p0) * int_pn1 + slope * int_pn;
            }
            (n as f64 + 1.0) * norm * acc
        }
        PathKind::Subgeodesic { .. } => {
            return Err(Error::Unsupported(
                "derivative check needs a geodesic or linear path".into(),
            ))
        }
    };
    let rel_gap = (fd - quad).abs() / fd.abs().max(quad.abs()).max(1e-300);
    let rel_gap = if fd == 0.0 && quad == 0.0 {
        0.0
    } else {
        rel_gap
    };
    Ok(DerivativeCheck {
        t,
        finite_difference: fd,
        quadrature: quad,
        rel_gap,
        kink_collision: collision,
    })
}

/// Field-level subgeodesic sample max(φ₀ − c·s, φ₁ − c·(1 − s), K log|z|),
/// with K the smallest slope keeping the barrier below both endpoints.
pub fn field_subgeodesic(phi0: &GridField, phi1: &GridField, c: f64, s: f64) -> Result<GridField> {
    if phi0.kind() != FieldKind::Complex || phi0.spec() != phi1.spec() {
        return Err(Error::InvalidGrid(
            "subgeodesic needs two complex fields on one grid".into(),
        ));
    }
    let required = phi0
        .values()
        .iter()
        .zip(phi1.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(c >= required) {
        return Err(Error::EndpointsNotAttained { c, required });
    }
    let lat = phi0.lattice();
    let mut x = vec![0.0; lat.dim];
    let mut k: f64 = 0.0;
    let logr: Vec<f64> = (0..lat.len())
        .map(|i| {
            lat.point(i, &mut x);
            0.5 * x.iter().map(|a| a * a).sum::<f64>().ln()
        })
        .collect();
    for (i, &mk) in phi0.mask().iter().enumerate() {
        if mk && logr[i] < 0.0 {
            k = k
                .max(phi0.values()[i] / logr[i])
                .max(phi1.values()[i] / logr[i]);
        }
    }
    let vals: Vec<f64> = (0..lat.len())
        .map(|i| {
            if !phi0.mask()[i] {
                return 0.0;
            }
            let a = phi0.values()[i] - c * s;
            let b = phi1.values()[i] - c * (1.0 - s);
            a.max(b).max(k * logr[i]).min(0.0)
        })
        .collect();
    GridField::new(phi0.spec().clone(), vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostics {
    pub s: Vec<f64>,
    pub levels: Vec<f64>,
    /// log A(s, t) with A(s, t) = |{φ_s < t}|.
    pub log_a: Vec<Vec<f64>>,
    /// Largest violation of midpoint concavity of log A.
    pub log_a_defect: f64,
    /// Largest violation of midpoint convexity of the inverse k(s, x).
    pub inverse_defect: f64,
}

/// A(s, t) on shared levels for a family of fields sampled at uniform s.
pub fn symmetrized_path_diagnostics(
    family: &[GridField],
    s: &[f64],
    levels: usize,
) -> Result<PathDiagnostics> {
    if family.len() != s.len() || family.len() < 3 {
        return Err(Error::InvalidGrid(
            "need at least three fields with matching s samples".into(),
        ));
    }
    let d = family[0].dim();
    let opts = SigmaOptions::for_dim(d);
    let floor = opts.min_cells * family[0].h().powi(d as i32);
    let top_min = family
        .iter()
        .map(|f| f.min_value())
        .fold(f64::NEG_INFINITY, f64::max);
    if top_min >= 0.0 {
        return Err(Error::InvalidGrid("family has a vanishing member".into()));
    }
    let all: Vec<f64> = (1..levels)
        .map(|k| top_min + (0.0 - top_min) * k as f64 / levels as f64)
        .collect();
    let dists = family
        .par_iter()
        .map(|f| distribution_at(f, &all, opts.subcells))
        .collect::<Result<Vec<_>>>()?;
    // keep levels sampled well by every member
    let keep: Vec<usize> = (0..all.len())
        .filter(|&j| dists.iter().all(|dd| dd.sigma[j] >= floor))
        .collect();
    if keep.len() < 3 {
        return Err(Error::InsufficientSampling(keep.len()));
    }
    let t: Vec<f64> = keep.iter().map(|&j| all[j]).collect();
    let log_a: Vec<Vec<f64>> = dists
        .iter()
        .map(|dd| keep.iter().map(|&j| dd.sigma[j].ln()).collect())
        .collect();
    let mut log_a_defect: f64 = 0.0;
    for i in 1..s.len() - 1 {
        for j in 1..t.len() - 1 {
            for (di, dj) in [(1isize, 0isize), (0, 1), (1, 1), (1, -1)] {
                let a = log_a[(i as isize - di) as usize][(j as isize - dj) as usize];
                let b = log_a[(i as isize + di) as usize][(j as isize + dj) as usize];
                log_a_defect = log_a_defect.max(0.5 * (a + b) - log_a[i][j]);
            }
        }
    }
    let sampled = Sampled2D {
        s: s.to_vec(),
        t: t.clone(),
        a: log_a.clone(),
    };
    let inverse_defect = concave_inverse_convexity(&sampled, t.len())?;
    Ok(PathDiagnostics {
        s: s.to_vec(),
        levels: t,
        log_a,
        log_a_defect,
        inverse_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ends() -> (RadialProfile, RadialProfile) {
        (
            RadialProfile::max_linear(1.0, -1.0).unwrap(),
            RadialProfile::max_linear(2.0, -1.0).unwrap(),
        )
    }

    #[test]
    fn geodesic_midpoint_energy() {
        let (a, b) = ends();
        let p = PotentialPath::geodesic(a.clone(), b).unwrap();
        assert_eq!(p.at(0.0).unwrap(), a);
        assert_relative_eq!(
            profile_energy_complex(&p.at(0.5).unwrap(), 1).unwrap(),
            0.75,
            epsilon = 1e-12
        );
    }

    #[test]
    fn linear_path_lies_below_geodesic() {
        let (a, b) = ends();
        let g = energy_curve(
            &PotentialPath::geodesic(a.clone(), b.clone()).unwrap(),
            1,
            33,
        )
        .unwrap();
        let l = energy_curve(&PotentialPath::linear(a, b).unwrap(), 1, 33).unwrap();
        assert!(g.chord_deviation < 1e-10);
        assert!(l.convexity_defect < 1e-9);
        for (eg, el) in g.energy.iter().zip(&l.energy) {
            // convex curve under the affine one with the same ends
            assert!(*el <= eg + 1e-12);
        }
    }

    #[test]
    fn subgeodesic_of_equal_endpoints_is_shifted() {
        let (a, _) = ends();
        let p = PotentialPath::subgeodesic(a.clone(), a.clone(), 0.5).unwrap();
        let f = p.at(0.3).unwrap();
        for x in [-2.0, -1.5, -1.2] {
            assert_relative_eq!(f.eval(x), a.eval(x) - 0.15, epsilon = 1e-12);
        }
        // the barrier takes over near the boundary
        for x in [-0.9, -0.5, -0.1] {
            assert_relative_eq!(f.eval(x), (a.eval(x) - 0.15).max(x), epsilon = 1e-12);
        }
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(p.at(0.0).unwrap().max_abs_diff(&a, -5.0), 0.0);
    }

    #[test]
    fn small_shift_rejected() {
        let (a, b) = ends();
        let err = PotentialPath::subgeodesic(a, b.scaled(3.0), 0.1).unwrap_err();
        assert!(matches!(err, Error::EndpointsNotAttained { .. }));
    }

    #[test]
    fn derivative_matches_on_linear_path() {
        let f0 = RadialProfile::from_fn(
            Parametrization::LogRadius,
            (0..=64).map(|i| -3.0 + 3.0 * i as f64 / 64.0).collect(),
            |x| (2.0 * x).exp() - 1.0,
        )
        .unwrap();
        let f1 = RadialProfile::max_linear(1.5, -1.2).unwrap();
        for n in [1, 2] {
            let chk = energy_derivative_check(
                &PotentialPath::linear(f0.clone(), f1.clone()).unwrap(),
                0.0,
                n,
            )
            .unwrap();
            assert!(chk.rel_gap < 1e-2, "{chk:?}");
            let g = energy_derivative_check(
                &PotentialPath::geodesic(f0.clone(), f1.clone()).unwrap(),
                0.4,
                n,
            )
            .unwrap();
            assert!(g.rel_gap < 1e-2, "{g:?}");
        }
    }
}
