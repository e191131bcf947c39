//! Constancy of du ∧ d^cu ∧ dd^cu on level sets of a balanced log-gauge.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bodies::BalancedLog;
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 50;

/// Coefficient of variation of the density of du ∧ d^cu ∧ dd^cu against
/// Lebesgue measure over `samples` points of {u = level} in C², with all
/// derivatives taken by central differences of step h.
pub fn levi_density_variation(u: &BalancedLog, level: f64, h: f64, samples: usize) -> Result<f64> {
    if u.n() != 2 {
        return Err(Error::Unsupported("level-form density needs n = 2".into()));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InsufficientSampling(samples));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid("step must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e71);
    let r = level.exp();
    let mut dens = Vec::with_capacity(samples);
    for _ in 0..samples {
        let th: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mu = u.mu(&th);
        let z: Vec<f64> = th.iter().map(|x| x * r / mu).collect();
        dens.push(levi_density(u, &z, h));
    }
    let m = dens.iter().sum::<f64>() / samples as f64;
    let var = dens.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (samples - 1) as f64;
    if m.abs() < f64::MIN_POSITIVE {
        return Err(Error::InsufficientSampling(samples));
    }
    Ok(var.sqrt() / m.abs())
}

/// ∂u* adj(U) ∂u with ∂u_j = (u_{x_j} − i u_{y_j})/2 and U = (u_{j k̄}).
pub(crate) fn levi_density(u: &BalancedLog, z: &[f64], h: f64) -> f64 {
    let f = |x: &[f64]| u.value(x);
    let mut x = z.to_vec();
    let mut shifted = |moves: &[(usize, f64)]| {
        x.copy_from_slice(z);
        for &(k, s) in moves {
            x[k] += s;
        }
        f(&x)
    };
    let c = shifted(&[]);
    let mut g = [0.0; 4];
    let mut hs = [[0.0; 4]; 4];
    for i in 0..4 {
        let (p, m) = (shifted(&[(i, h)]), shifted(&[(i, -h)]));
        g[i] = (p - m) / (2.0 * h);
        hs[i][i] = (p - 2.0 * c + m) / (h * h);
        for j in i + 1..4 {
            let v = (shifted(&[(i, h), (j, h)])
                - shifted(&[(i, h), (j, -h)])
                - shifted(&[(i, -h), (j, h)])
                + shifted(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            hs[i][j] = v;
            hs[j][i] = v;
        }
    }
    let du = [
        Complex64::new(0.5 * g[0], -0.5 * g[1]),
        Complex64::new(0.5 * g[2], -0.5 * g[3]),
    ];
    let uu = |j: usize, k: usize| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        Complex64::new(
            0.25 * (hs[xj][xk] + hs[yj][yk]),
            0.25 * (hs[xj][yk] - hs[yj][xk]),
        )
    };
    let adj = [[uu(1, 1), -uu(0, 1)], [-uu(1, 0), uu(0, 0)]];
    let mut rho = Complex64::new(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            rho += du[j].conj() * adj[j][k] * du[k];
        }
    }
    rho.re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_density_closed_form() {
        // ρ = 1/(8|z|⁴) for log|z|
        let u = BalancedLog::ball(2).unwrap();
        let z = [0.3, -0.2, 0.1, 0.4];
        let r2: f64 = z.iter().map(|a| a * a).sum();
        let rho = levi_density(&u, &z, 1e-4);
        assert!((rho - 1.0 / (8.0 * r2 * r2)).abs() < 1e-5 * rho);
    }

    #[test]
    fn too_few_samples() {
        let u = BalancedLog::ball(2).unwrap();
        assert_eq!(
            levi_density_variation(&u, -0.5, 1e-3, 10),
            Err(Error::InsufficientSampling(10))
        );
    }
}
