//! Discrete Monge-Ampère energies.
//!
//! Complex, n = 1: the five-point Laplacian, dd^cφ = Δφ/(4π) dx.
//! Complex, n = 2: (dd^cφ)² = d(d^cφ ∧ dd^cφ) integrated as a face flux
//! around each lattice cell, so the discrete measure is conservative and
//! a kink contributes its full mass.
//! Real: the Alexandrov measure of each cell, i.e. the volume of the
//! polytope spanned by the gradients at its corners, summed over cells
//! whose stencil stays inside the mask.

use std::f64::consts::PI;

use super::padded::Padded;
use super::{det_sum, FieldKind, GridField};
use crate::error::{Error, Result};

/// E(φ) = ∫(−φ)(dd^cφ)^n on C^n, n ∈ {1, 2}.
pub fn complex_ma_energy(field: &GridField, n: usize) -> Result<f64> {
    if field.kind() != FieldKind::Complex {
        return Err(Error::InvalidGrid(
            "complex energy needs a complex field".into(),
        ));
    }
    if !(n == 1 || n == 2) || field.dim() != 2 * n {
        return Err(Error::Unsupported(format!(
            "complex grid energy for n = {n} on a {}-d grid",
            field.dim()
        )));
    }
    field.check_class()?;
    let p = field.padded();
    let dens: Box<dyn Fn(usize) -> f64 + Sync> = match n {
        1 => Box::new(|q| laplace_mass(&p, q)),
        _ => Box::new(|q| flux_density(&p, q) * p.h.powi(4)),
    };
    Ok(det_sum(field.values().len(), |i| {
        if !field.mask()[i] {
            return 0.0;
        }
        let q = p.index_of(i);
        -p.vals[q] * dens(q)
    }))
}

fn laplace_mass(p: &Padded, q: usize) -> f64 {
    let c = p.vals[q];
    let s: f64 = (0..2)
        .map(|k| p.at(q, k, 1) + p.at(q, k, -1) - 2.0 * c)
        .sum();
    s / (4.0 * PI)
}

// Face quantities at q + e_k/2.
fn first(p: &Padded, q: usize, i: usize, k: usize) -> f64 {
    if i == k {
        (p.at(q, k, 1) - p.vals[q]) / p.h
    } else {
        let r = q + p.stride[k];
        0.5 * (p.d1(q, i) + p.d1(r, i))
    }
}

fn hess(p: &Padded, q: usize, a: usize, b: usize) -> f64 {
    let h2 = p.h * p.h;
    if a == b {
        (p.at(q, a, 1) - 2.0 * p.vals[q] + p.at(q, a, -1)) / h2
    } else {
        (p.at2(q, a, 1, b, 1) - p.at2(q, a, 1, b, -1) - p.at2(q, a, -1, b, 1)
            + p.at2(q, a, -1, b, -1))
            / (4.0 * h2)
    }
}

fn second(p: &Padded, q: usize, a: usize, b: usize, k: usize) -> f64 {
    let r = q + p.stride[k];
    if a == k {
        (p.d1(r, b) - p.d1(q, b)) / p.h
    } else if b == k {
        (p.d1(r, a) - p.d1(q, a)) / p.h
    } else {
        0.5 * (hess(p, q, a, b) + hess(p, r, a, b))
    }
}

// Components of d^cφ (up to 1/(4π)) and dd^cφ in (x1, y1, x2, y2).
fn c_comp(p: &Padded, q: usize, a: usize, k: usize) -> f64 {
    match a {
        0 => -first(p, q, 1, k),
        1 => first(p, q, 0, k),
        2 => -first(p, q, 3, k),
        _ => first(p, q, 2, k),
    }
}

fn omega(p: &Padded, q: usize, i: usize, j: usize, k: usize) -> f64 {
    let s = |a, b| second(p, q, a, b, k);
    match (i, j) {
        (0, 1) => s(0, 0) + s(1, 1),
        (2, 3) => s(2, 2) + s(3, 3),
        (0, 2) => -s(0, 3) + s(1, 2),
        (0, 3) => s(0, 2) + s(1, 3),
        (1, 2) => -s(1, 3) - s(0, 2),
        (1, 3) => s(1, 2) - s(0, 3),
        _ => unreachable!(),
    }
}

// Flux of d^cφ ∧ dd^cφ through the face q + e_k/2.
fn flux(p: &Padded, q: usize, k: usize) -> f64 {
    let mut rest = [0usize; 3];
    let mut m = 0;
    for a in 0..4 {
        if a != k {
            rest[m] = a;
            m += 1;
        }
    }
    let [a, b, c] = rest;
    c_comp(p, q, a, k) * omega(p, q, b, c, k) - c_comp(p, q, b, k) * omega(p, q, a, c, k)
        + c_comp(p, q, c, k) * omega(p, q, a, b, k)
}

/// Density of (dd^cφ)² at a cell centre.
fn flux_density(p: &Padded, q: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..4 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let back = q - p.stride[k];
        s += sign * (flux(p, q, k) - flux(p, back, k)) / p.h;
    }
    s / (4.0 * PI).powi(2)
}

/// E(u) = ∫(−u) MA(u) for a convex field on R^d, d ≤ 3.
pub fn real_ma_energy(field: &GridField) -> Result<f64> {
    if field.kind() != FieldKind::RealConvex {
        return Err(Error::InvalidGrid(
            "real energy needs a real-convex field".into(),
        ));
    }
    if field.dim() > 3 {
        return Err(Error::Unsupported("real grid energy needs d ≤ 3".into()));
    }
    field.check_class()?;
    let p = field.padded();
    Ok(det_sum(field.values().len(), |i| {
        if !field.mask()[i] {
            return 0.0;
        }
        let q = p.index_of(i);
        if !block_in_mask(&p, q) {
            return 0.0;
        }
        -p.vals[q] * alexandrov_mass(&p, q)
    }))
}

// Whole 3^d neighbourhood inside the mask. Ghost values are not used for
// the real measure: extrapolating across a kink (a corner of a polygonal
// level set) can make a boundary cell's gradient image badly negative,
// while the excluded layer only carries weight −u = O(h).
fn block_in_mask(p: &Padded, q: usize) -> bool {
    let d = p.d;
    (0..3usize.pow(d as u32)).all(|code| {
        let mut r = q as isize;
        let mut c = code;
        for k in 0..d {
            r += (c % 3) as isize * p.stride[k] as isize - p.stride[k] as isize;
            c /= 3;
        }
        p.in_mask[r as usize]
    })
}

/// Gradient at the lattice corner q + (1/2, …, 1/2) from its 2^d block.
fn corner_gradient(p: &Padded, q: usize, out: &mut [f64; 3]) {
    let d = p.d;
    *out = [0.0; 3];
    for e in 0..(1usize << d) {
        let mut r = q;
        for k in 0..d {
            if e >> k & 1 == 1 {
                r += p.stride[k];
            }
        }
        let v = p.vals[r];
        for (k, o) in out.iter_mut().enumerate().take(d) {
            if e >> k & 1 == 1 {
                *o += v;
            } else {
                *o -= v;
            }
        }
    }
    let w = 1.0 / ((1usize << (d - 1)) as f64 * p.h);
    out.iter_mut().for_each(|o| *o *= w);
}

/// Volume of the image of the cell around q under the discrete gradient.
pub(crate) fn alexandrov_mass(p: &Padded, q: usize) -> f64 {
    let d = p.d;
    // corner b ∈ {0,1}^d of cell q has block origin q + b − 1
    let mut g = [[0.0; 3]; 8];
    for (b, gb) in g.iter_mut().enumerate().take(1 << d) {
        let mut r = q;
        for k in 0..d {
            if b >> k & 1 == 0 {
                r -= p.stride[k];
            }
        }
        corner_gradient(p, r, gb);
    }
    match d {
        1 => g[1][0] - g[0][0],
        2 => {
            let ring = [g[0], g[1], g[3], g[2]];
            (0..4)
                .map(|i| ring[i][0] * ring[(i + 1) % 4][1] - ring[(i + 1) % 4][0] * ring[i][1])
                .sum::<f64>()
                / 2.0
        }
        _ => hexahedron_volume(&g),
    }
}

const CUBE_FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

fn det3(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Signed volume enclosed by the images of the eight cube corners, each
/// quad face fanned around its centroid.
fn hexahedron_volume(g: &[[f64; 3]; 8]) -> f64 {
    let mut v = 0.0;
    for f in CUBE_FACES {
        let mut c = [0.0; 3];
        for &i in &f {
            for k in 0..3 {
                c[k] += 0.25 * g[i][k];
            }
        }
        for j in 0..4 {
            v += det3(&c, &g[f[j]], &g[f[(j + 1) % 4]]);
        }
    }
    v / 6.0
}

/// Area of the gradient image of the sublevel set {u < level} of a 2-D
/// convex field, found by tracing the level curve along rays from the
/// minimiser and mapping it through the interpolated gradient.
pub fn gradient_image_area(field: &GridField, level: f64) -> Result<f64> {
    if field.kind() != FieldKind::RealConvex || field.dim() != 2 {
        return Err(Error::Unsupported(
            "gradient image needs a 2-D real field".into(),
        ));
    }
    let lat = field.lattice();
    let (n, h) = (lat.n, lat.h());
    let vals = field.values();
    let mask = field.mask();
    let imin = (0..vals.len())
        .filter(|&i| mask[i])
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    if !(level > vals[imin] && level < 0.0) {
        return Err(Error::LevelNotInterior);
    }
    let p = field.padded();
    let x0 = [lat.coord(0, 0), lat.coord(1, 0)];
    let centre = [lat.coord(0, imin / n), lat.coord(1, imin % n)];

    // bilinear interpolation of value and central gradient; None when a
    // supporting point lies outside the mask
    let interp = |x: [f64; 2]| -> Option<(f64, [f64; 2])> {
        let fx = (x[0] - x0[0]) / h;
        let fy = (x[1] - x0[1]) / h;
        let (fi, fj) = (fx.floor(), fy.floor());
        if fi < 0.0 || fj < 0.0 || fi as usize + 1 >= n || fj as usize + 1 >= n {
            return None;
        }
        let (i, j, tx, ty) = (fi as usize, fj as usize, fx - fi, fy - fj);
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for (di, dj, w) in [
            (0, 0, (1.0 - tx) * (1.0 - ty)),
            (1, 0, tx * (1.0 - ty)),
            (0, 1, (1.0 - tx) * ty),
            (1, 1, tx * ty),
        ] {
            let idx = (i + di) * n + (j + dj);
            if !mask[idx] {
                return None;
            }
            let q = p.index_of(idx);
            v += w * p.vals[q];
            g[0] += w * p.d1(q, 0);
            g[1] += w * p.d1(q, 1);
        }
        Some((v, g))
    };

    let rays = 720;
    let mut image = Vec::with_capacity(rays);
    for r in 0..rays {
        let th = 2.0 * std::f64::consts::PI * r as f64 / rays as f64;
        let dir = [th.cos(), th.sin()];
        let at = |s: f64| [centre[0] + s * dir[0], centre[1] + s * dir[1]];
        let step = 0.25 * h;
        let mut lo = 0.0;
        let mut hi = None;
        let mut s = 0.0;
        while hi.is_none() {
            s += step;
            match interp(at(s)) {
                None => return Err(Error::LevelNotInterior),
                Some((v, _)) if v >= level => hi = Some(s),
                Some(_) => lo = s,
            }
        }
        let mut hi = hi.unwrap();
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            match interp(at(mid)) {
                Some((v, _)) if v < level => lo = mid,
                _ => hi = mid,
            }
        }
        let (_, g) = interp(at(0.5 * (lo + hi))).ok_or(Error::LevelNotInterior)?;
        image.push(g);
    }
    let area: f64 = (0..rays)
        .map(|i| {
            let (a, b) = (image[i], image[(i + 1) % rays]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0;
    Ok(area.abs())
}
