//! Functions sampled on uniform cell-centred lattices over a masked domain,
//! with discrete Monge-Ampère measures and energies.

mod energy;
mod generate;
mod io;
mod levi;
pub(crate) mod padded;

pub use energy::{complex_ma_energy, gradient_image_area, real_ma_energy};
pub use generate::{generate, FieldGeneratorSpec, OuterMap};
pub use levi::levi_density_variation;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};
use padded::Padded;

/// Largest accepted point count, to keep grids at desk scale.
const MAX_POINTS: usize = 1 << 26;

/// Uniform lattice on the cube [-L, L]^d with cell-centred points
/// x_i = -L + (i + 1/2)h + shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub dim: usize,
    /// Points per axis.
    pub n: usize,
    #[serde(default = "one")]
    pub half_width: f64,
    /// Offset of the sample origin; empty means zero.
    #[serde(default)]
    pub shift: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Lattice {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        let l = Self {
            dim,
            n,
            half_width: 1.0,
            shift: Vec::new(),
        };
        l.validate()?;
        Ok(l)
    }

    pub fn with_shift(mut self, shift: Vec<f64>) -> Result<Self> {
        self.shift = shift;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {} outside 1..=4",
                self.dim
            )));
        }
        if self.n < 8 {
            return Err(Error::InvalidGrid(format!(
                "{} points per axis, need at least 8",
                self.n
            )));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidGrid("half width must be positive".into()));
        }
        if !self.shift.is_empty() && self.shift.len() != self.dim {
            return Err(Error::InvalidGrid(
                "shift length must match dimension".into(),
            ));
        }
        if self.shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidGrid("shift not finite".into()));
        }
        match self.n.checked_pow(self.dim as u32) {
            Some(p) if p <= MAX_POINTS => Ok(()),
            _ => Err(Error::InvalidGrid("too many grid points".into())),
        }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index i along axis k.
    pub fn coord(&self, k: usize, i: usize) -> f64 {
        let s = self.shift.get(k).copied().unwrap_or(0.0);
        -self.half_width + (i as f64 + 0.5) * self.h() + s
    }

    /// Point of a flat (row-major) index.
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let mut r = idx;
        for k in (0..self.dim).rev() {
            out[k] = self.coord(k, r % self.n);
            r /= self.n;
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| {
            let mut p = vec![0.0; self.dim];
            self.point(i, &mut p);
            p
        })
    }
}

/// Domain of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    /// Open unit ball.
    UnitBall,
    Body {
        body: ConvexBody,
    },
}

impl Domain {
    pub fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            Domain::UnitBall => x.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Domain::Body { body } => body.minkowski(x),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) < 1.0
    }

    /// Exact volume of the domain in R^d.
    pub fn volume(&self, d: usize) -> Result<f64> {
        match self {
            Domain::UnitBall => Ok(crate::bodies::unit_ball_volume(d)),
            Domain::Body { body } => body.volume(),
        }
    }

    pub fn body(&self, d: usize) -> Result<ConvexBody> {
        match self {
            Domain::UnitBall => ConvexBody::ball(d, 1.0),
            Domain::Body { body } => Ok(body.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Convex function on R^d.
    RealConvex,
    /// Function on C^n = R^{2n}, z_j = x_{2j} + i x_{2j+1}.
    Complex,
}

/// Lattice, kind and domain of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lattice: Lattice,
    pub kind: FieldKind,
    pub domain: Domain,
}

impl GridSpec {
    pub fn ball(kind: FieldKind, dim: usize, n: usize) -> Result<Self> {
        let g = Self {
            lattice: Lattice::new(dim, n)?,
            kind,
            domain: Domain::UnitBall,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn body(kind: FieldKind, body: ConvexBody, n: usize) -> Result<Self> {
        let g = Self {
            lattice: Lattice::new(body.dim(), n)?,
            kind,
            domain: Domain::Body { body },
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        let d = self.lattice.dim;
        if self.kind == FieldKind::Complex && d % 2 != 0 {
            return Err(Error::InvalidGrid(
                "complex fields need even dimension".into(),
            ));
        }
        if let Domain::Body { body } = &self.domain {
            if body.dim() != d {
                return Err(Error::InvalidGrid(
                    "body dimension differs from lattice".into(),
                ));
            }
        }
        // the domain must fit in the lattice box
        let l = self.lattice.half_width + 1e-12;
        let fits = match &self.domain {
            Domain::UnitBall => l >= 1.0,
            Domain::Body { body } => body
                .extent()
                .map(|e| e.iter().all(|&a| a <= l))
                .unwrap_or(false),
        };
        if !fits {
            return Err(Error::InvalidGrid(
                "domain does not fit in the lattice box".into(),
            ));
        }
        Ok(())
    }

    pub fn mask(&self) -> Vec<bool> {
        let lat = &self.lattice;
        (0..lat.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; lat.dim],
                |p, i| {
                    lat.point(i, p);
                    self.domain.contains(p)
                },
            )
            .collect()
    }
}

/// A function sampled on a masked lattice; zero outside the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    mask: Vec<bool>,
    values: Vec<f64>,
}

/// Chunk length for deterministic parallel reductions.
pub(crate) const CHUNK: usize = 4096;

/// Sum of f(i) over 0..len with a fixed summation tree.
pub(crate) fn det_sum(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let parts: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum::<f64>())
        .collect();
    parts.iter().sum()
}

impl GridField {
    /// Wrap sampled values. Values outside the mask must be zero.
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.lattice.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                spec.lattice.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite value".into()));
        }
        let mask = spec.mask();
        if mask.iter().zip(&values).any(|(&m, &v)| !m && v != 0.0) {
            return Err(Error::InvalidGrid("nonzero value outside the mask".into()));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidGrid("empty mask".into()));
        }
        Ok(Self { spec, mask, values })
    }

    /// Sample a function on the mask without any class check.
    pub fn sample(spec: GridSpec, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        spec.validate()?;
        let mask = spec.mask();
        let lat = &spec.lattice;
        let values: Vec<f64> = (0..lat.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; lat.dim],
                |p, i| {
                    if mask[i] {
                        lat.point(i, p);
                        f(p)
                    } else {
                        0.0
                    }
                },
            )
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Generation("non-finite sample".into()));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidGrid("empty mask".into()));
        }
        Ok(Self { spec, mask, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.spec.lattice
    }

    pub fn kind(&self) -> FieldKind {
        self.spec.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.spec.domain
    }

    pub fn dim(&self) -> usize {
        self.spec.lattice.dim
    }

    pub fn h(&self) -> f64 {
        self.spec.lattice.h()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Lattice measure of the mask.
    pub fn mask_volume(&self) -> f64 {
        self.mask_count() as f64 * self.h().powi(self.dim() as i32)
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .fold(f64::INFINITY, f64::min)
    }

    /// c·φ.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            spec: self.spec.clone(),
            mask: self.mask.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise map over masked values, keeping zero outside.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { f(v) } else { 0.0 })
            .collect();
        Self::new(self.spec.clone(), values)
    }

    /// Pointwise maximum of two fields on the same grid.
    pub fn max_with(&self, other: &GridField) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.max(*b))
            .collect();
        Ok(Self {
            spec: self.spec.clone(),
            mask: self.mask.clone(),
            values,
        })
    }

    /// Σ_mask F(φ) h^d.
    pub fn integrate(&self, f: impl Fn(f64) -> f64 + Sync) -> f64 {
        let w = self.h().powi(self.dim() as i32);
        w * det_sum(self.values.len(), |i| {
            if self.mask[i] {
                f(self.values[i])
            } else {
                0.0
            }
        })
    }

    pub(crate) fn padded(&self) -> Padded {
        Padded::from_field(self)
    }

    /// Fraction of mask points below -τ: the smallest eigenvalue of the
    /// complex Hessian for complex fields, the smallest lattice-direction
    /// second difference for real ones.
    pub fn class_violation(&self, tau: f64) -> f64 {
        let p = self.padded();
        let d = self.dim();
        let complex = self.kind() == FieldKind::Complex;
        let bad = det_sum(self.values.len(), |i| {
            if !self.mask[i] {
                return 0.0;
            }
            let q = p.index_of(i);
            let lmin = if complex {
                complex_min_eig(&p.hessian(q), d)
            } else {
                directional_min(&p, q)
            };
            if lmin < -tau {
                1.0
            } else {
                0.0
            }
        });
        bad / self.mask_count() as f64
    }

    /// Tolerance τ = 10h used for class checks.
    pub fn tau(&self) -> f64 {
        10.0 * self.h()
    }

    /// Error if more than 1% of mask points violate the class at τ = 10h.
    pub fn check_class(&self) -> Result<()> {
        let h = self.h();
        let fraction = self.class_violation(self.tau());
        if fraction > 0.01 {
            return Err(match self.kind() {
                FieldKind::Complex => Error::NotPlurisubharmonic { h, fraction },
                FieldKind::RealConvex => Error::NotConvex { h, fraction },
            });
        }
        Ok(())
    }
}

/// Smallest eigenvalue of the complex Hessian (φ_{j k̄}) from the real one.
fn complex_min_eig(hs: &[[f64; 4]; 4], d: usize) -> f64 {
    let a = 0.25 * (hs[0][0] + hs[1][1]);
    if d == 2 {
        return a;
    }
    let dd = 0.25 * (hs[2][2] + hs[3][3]);
    let br = 0.25 * (hs[0][2] + hs[1][3]);
    let bi = 0.25 * (hs[0][3] - hs[1][2]);
    0.5 * (a + dd) - (0.25 * (a - dd).powi(2) + br * br + bi * bi).sqrt()
}

/// Smallest second difference u(x+v) − 2u(x) + u(x−v) over |v|² for the
/// lattice directions e_i and e_i ± e_j. Samples of a convex function
/// never make this negative, kinks included.
fn directional_min(p: &Padded, q: usize) -> f64 {
    let c = p.vals[q];
    let h2 = p.h * p.h;
    let mut m = f64::INFINITY;
    for i in 0..p.d {
        m = m.min((p.at(q, i, 1) - 2.0 * c + p.at(q, i, -1)) / h2);
        for j in i + 1..p.d {
            for s in [-1isize, 1] {
                let v = (p.at2(q, i, 1, j, s) - 2.0 * c + p.at2(q, i, -1, j, -s)) / (2.0 * h2);
                m = m.min(v);
            }
        }
    }
    m
}

pub use io::{read_field, write_field};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_is_cell_centred() {
        let l = Lattice::new(2, 8).unwrap();
        assert_eq!(l.h(), 0.25);
        assert_eq!(l.coord(0, 0), -0.875);
        assert_eq!(l.coord(1, 7), 0.875);
        assert!(Lattice::new(2, 4).is_err());
        assert!(Lattice::new(5, 8).is_err());
    }

    #[test]
    fn sample_zeroes_outside() {
        let g = GridSpec::ball(FieldKind::RealConvex, 2, 16).unwrap();
        let f = GridField::sample(g, |x| x[0] * x[0] + x[1] * x[1] - 1.0).unwrap();
        assert!(f
            .values()
            .iter()
            .zip(f.mask())
            .all(|(&v, &m)| m || v == 0.0));
        assert!(f.min_value() < -0.9);
    }

    #[test]
    fn concave_input_flagged() {
        let g = GridSpec::ball(FieldKind::RealConvex, 2, 64).unwrap();
        let f = GridField::sample(g, |x| 1.0 - x[0] * x[0] - x[1] * x[1] - 1.0).unwrap();
        assert!(matches!(f.check_class(), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn deterministic_sum_matches_serial() {
        let s = det_sum(100_000, |i| i as f64);
        assert_eq!(s, (0..100_000).map(|i| i as f64).sum::<f64>());
    }
}
