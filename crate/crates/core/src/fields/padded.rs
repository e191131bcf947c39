//! Padded copy of a field with ghost values outside the mask.
//!
//! Ghost values come from quadratic extrapolation 3p₁ − 3p₂ + p₃ along every
//! axis direction with three known points, averaged over directions, applied
//! layer by layer. Stencils near the boundary then see a smooth continuation
//! instead of the zero extension.

use rayon::prelude::*;

use super::GridField;

pub(crate) const PAD: usize = 3;
const GHOST_PASSES: usize = 2;

pub(crate) struct Padded {
    pub d: usize,
    /// Points per axis including padding.
    pub m: usize,
    pub stride: [usize; 4],
    pub h: f64,
    pub vals: Vec<f64>,
    /// Mask points and filled ghosts.
    pub known: Vec<bool>,
    pub in_mask: Vec<bool>,
}

impl Padded {
    pub fn from_field(f: &GridField) -> Self {
        let d = f.dim();
        let n = f.lattice().n;
        let m = n + 2 * PAD;
        let mut stride = [0usize; 4];
        let mut s = 1;
        for k in (0..d).rev() {
            stride[k] = s;
            s *= m;
        }
        let total = s;
        let mut p = Padded {
            d,
            m,
            stride,
            h: f.h(),
            vals: vec![0.0; total],
            known: vec![false; total],
            in_mask: vec![false; total],
        };
        for (i, (&v, &mk)) in f.values().iter().zip(f.mask()).enumerate() {
            if mk {
                let q = p.index_of_n(i, n);
                p.vals[q] = v;
                p.known[q] = true;
                p.in_mask[q] = true;
            }
        }
        for _ in 0..GHOST_PASSES {
            p.ghost_pass();
        }
        p
    }

    fn index_of_n(&self, i: usize, n: usize) -> usize {
        let mut r = i;
        let mut q = 0;
        for k in (0..self.d).rev() {
            q += (r % n + PAD) * self.stride[k];
            r /= n;
        }
        q
    }

    /// Padded index of a lattice flat index.
    pub fn index_of(&self, i: usize) -> usize {
        self.index_of_n(i, self.m - 2 * PAD)
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn coord(&self, q: usize, k: usize) -> usize {
        (q / self.stride[k]) % self.m
    }

    /// q + s·e_k when it stays inside the array.
    pub fn step(&self, q: usize, k: usize, s: isize) -> Option<usize> {
        let c = self.coord(q, k) as isize + s;
        if c < 0 || c >= self.m as isize {
            None
        } else {
            Some((q as isize + s * self.stride[k] as isize) as usize)
        }
    }

    fn ghost_pass(&mut self) {
        let new: Vec<Option<f64>> = (0..self.len())
            .into_par_iter()
            .map(|q| {
                if self.known[q] {
                    return None;
                }
                let (mut num, mut cnt) = (0.0, 0);
                for k in 0..self.d {
                    for s in [-1isize, 1] {
                        let pts: Option<Vec<usize>> =
                            (1..=3).map(|j| self.step(q, k, s * j)).collect();
                        if let Some(pts) = pts {
                            if pts.iter().all(|&r| self.known[r]) {
                                num += 3.0 * self.vals[pts[0]] - 3.0 * self.vals[pts[1]]
                                    + self.vals[pts[2]];
                                cnt += 1;
                            }
                        }
                    }
                }
                (cnt > 0).then(|| num / cnt as f64)
            })
            .collect();
        for (q, v) in new.into_iter().enumerate() {
            if let Some(v) = v {
                self.vals[q] = v;
                self.known[q] = true;
            }
        }
    }

    #[inline]
    pub fn at(&self, q: usize, k: usize, s: isize) -> f64 {
        self.vals[(q as isize + s * self.stride[k] as isize) as usize]
    }

    #[inline]
    pub fn at2(&self, q: usize, k: usize, s: isize, l: usize, t: isize) -> f64 {
        self.vals[(q as isize + s * self.stride[k] as isize + t * self.stride[l] as isize) as usize]
    }

    /// Central Hessian at q; needs margin ≥ 1.
    pub fn hessian(&self, q: usize) -> [[f64; 4]; 4] {
        let h2 = self.h * self.h;
        let mut out = [[0.0; 4]; 4];
        let c = self.vals[q];
        for i in 0..self.d {
            out[i][i] = (self.at(q, i, 1) - 2.0 * c + self.at(q, i, -1)) / h2;
            for j in i + 1..self.d {
                let v =
                    (self.at2(q, i, 1, j, 1) - self.at2(q, i, 1, j, -1) - self.at2(q, i, -1, j, 1)
                        + self.at2(q, i, -1, j, -1))
                        / (4.0 * h2);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    /// Central first difference along k; needs margin ≥ 1.
    #[inline]
    pub fn d1(&self, q: usize, k: usize) -> f64 {
        (self.at(q, k, 1) - self.at(q, k, -1)) / (2.0 * self.h)
    }
}
