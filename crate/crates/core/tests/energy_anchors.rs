//! Grid energies against closed forms.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use schwarzlab::fields::{
    complex_ma_energy, generate, gradient_image_area, real_ma_energy, Domain, FieldGeneratorSpec,
    FieldKind, GridField, GridSpec, Lattice,
};
use schwarzlab::profiles::{profile_energy_complex, profile_energy_real, RadialProfile};
use schwarzlab::ConvexBody;

fn radial(profile: RadialProfile, grid: &GridSpec) -> GridField {
    generate(&FieldGeneratorSpec::Radial { profile }, grid).unwrap()
}

#[test]
fn disc_kink_energy() {
    // max(log|z|, -1): Δ/(4π) puts mass 1/2 on |z| = 1/e, where φ = −1
    let f = RadialProfile::max_linear(1.0, -1.0).unwrap();
    assert_relative_eq!(profile_energy_complex(&f, 1).unwrap(), 0.5, epsilon = 1e-12);
    let field = radial(f, &GridSpec::ball(FieldKind::Complex, 2, 512).unwrap());
    let e = complex_ma_energy(&field, 1).unwrap();
    assert!((e - 0.5).abs() < 0.02 * 0.5, "E = {e}");
}

#[test]
fn ball_quadratic_energy_n2() {
    // φ = |z|² − 1 on the unit ball of C²: (dd^cφ)² = 2/π² dV, E = 1/3
    let grid = GridSpec::ball(FieldKind::Complex, 4, 24).unwrap();
    let field = GridField::sample(grid, |x| x.iter().map(|v| v * v).sum::<f64>() - 1.0).unwrap();
    let e = complex_ma_energy(&field, 2).unwrap();
    assert!((e - 1.0 / 3.0).abs() < 0.05 / 3.0, "E = {e}");
}

#[test]
fn disc_real_quadratic() {
    // ∫(1 − |x|²)·det(2I) over the unit disc
    let oracle = 2.0 * PI;
    let f = RadialProfile::minkowski_from_fn(512, |s| s * s - 1.0).unwrap();
    assert_relative_eq!(
        profile_energy_real(&f, PI, 2).unwrap(),
        oracle,
        max_relative = 1e-4
    );
    let field = radial(f, &GridSpec::ball(FieldKind::RealConvex, 2, 256).unwrap());
    let e = real_ma_energy(&field).unwrap();
    assert!((e - oracle).abs() < 0.02 * oracle, "E = {e}");
}

#[test]
fn square_real_quadratic() {
    // μ_Q(x)² − 1 on Q = [−1,1]²: MA is 4·area on each of the four
    // triangles plus a singular part on the diagonals; total energy
    // |Q°|·∫(2s)³ds = 2·2 = 4
    let q = ConvexBody::square(1.0).unwrap();
    let f = RadialProfile::minkowski_from_fn(512, |s| s * s - 1.0).unwrap();
    let polar = q.polar().unwrap().volume().unwrap();
    assert_relative_eq!(polar, 2.0, epsilon = 1e-12);
    assert_relative_eq!(
        profile_energy_real(&f, polar, 2).unwrap(),
        4.0,
        max_relative = 1e-4
    );
    let field = radial(f, &GridSpec::body(FieldKind::RealConvex, q, 256).unwrap());
    let e = real_ma_energy(&field).unwrap();
    assert!((e - 4.0).abs() < 0.03 * 4.0, "E = {e}");
}

#[test]
fn ball_real_quadratic_3d() {
    // |B³|·∫(2s)⁴ ds = (4π/3)·16/5
    let oracle = 64.0 * PI / 15.0;
    let grid = GridSpec::ball(FieldKind::RealConvex, 3, 48).unwrap();
    let field = GridField::sample(grid, |x| x.iter().map(|v| v * v).sum::<f64>() - 1.0).unwrap();
    let e = real_ma_energy(&field).unwrap();
    assert!((e - oracle).abs() < 0.05 * oracle, "E = {e}");
}

#[test]
fn gradient_image_of_paraboloid() {
    // {|x|² − 1 < c} maps to the disc of radius 2√(1 + c)
    let grid = GridSpec::ball(FieldKind::RealConvex, 2, 256).unwrap();
    let field = GridField::sample(grid, |x| x[0] * x[0] + x[1] * x[1] - 1.0).unwrap();
    for c in [-0.75, -0.5, -0.25] {
        let a = gradient_image_area(&field, c).unwrap();
        let oracle = 4.0 * PI * (1.0 + c);
        assert!(
            (a - oracle).abs() < 0.01 * oracle,
            "level {c}: {a} vs {oracle}"
        );
    }
}

#[test]
fn energy_scales_with_power_of_amplitude() {
    // E(cφ) = c^{n+1} E(φ) holds exactly for the discrete operators
    let grid = GridSpec::ball(FieldKind::Complex, 2, 128).unwrap();
    let field = radial(RadialProfile::max_linear(1.0, -1.0).unwrap(), &grid);
    let e1 = complex_ma_energy(&field, 1).unwrap();
    let e3 = complex_ma_energy(&field.scaled(3.0), 1).unwrap();
    assert_relative_eq!(e3, 9.0 * e1, max_relative = 1e-10);
}

#[test]
fn energy_is_stable_under_lattice_shift() {
    let f = RadialProfile::max_linear(1.0, -1.0).unwrap();
    let n = 256;
    let mut lattice = Lattice::new(2, n).unwrap();
    lattice.half_width = 1.05;
    let h = lattice.h();
    let base = GridSpec {
        lattice: lattice.clone(),
        kind: FieldKind::Complex,
        domain: Domain::UnitBall,
    };
    let e0 = complex_ma_energy(&radial(f.clone(), &base), 1).unwrap();
    for shift in [[0.3 * h, 0.0], [0.45 * h, -0.2 * h]] {
        let spec = GridSpec {
            lattice: lattice.clone().with_shift(shift.to_vec()).unwrap(),
            ..base.clone()
        };
        let e = complex_ma_energy(&radial(f.clone(), &spec), 1).unwrap();
        assert!((e - e0).abs() < 2.0 * h * e0, "{e} vs {e0}");
    }
}
