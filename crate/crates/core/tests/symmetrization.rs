use std::f64::consts::PI;

use schwarzlab::fields::{
    complex_ma_energy, generate, real_ma_energy, FieldGeneratorSpec, FieldKind, GridSpec,
};
use schwarzlab::profiles::{
    profile_energy_complex, profile_energy_real, Observable, RadialProfile,
};
use schwarzlab::symmetrize::{
    distribution_at, equidistribution_check, omega_symmetrize, scaled_polar_volume, schwarz,
    SigmaOptions,
};
use schwarzlab::ConvexBody;

fn random(seed: u64) -> FieldGeneratorSpec {
    FieldGeneratorSpec::Random {
        seed,
        smoothness: 1.0,
    }
}

#[test]
fn green_function_profile() {
    // {|(z − a)/(1 − āz)| < r} is a disc of area πr²(1 − a²)²/(1 − a²r²)²,
    // so the symmetric profile is the inverse of t ↦ t + log((1 − a²)/(1 − a²e^{2t}))
    let a: f64 = 0.5;
    let grid = GridSpec::ball(FieldKind::Complex, 2, 512).unwrap();
    let field = generate(&FieldGeneratorSpec::Green { a: [a, 0.0] }, &grid).unwrap();
    let p = schwarz(&field, &SigmaOptions::for_dim(2)).unwrap();
    let x_of = |t: f64| t + ((1.0 - a * a) / (1.0 - a * a * (2.0 * t).exp())).ln();
    let mut worst = 0.0f64;
    for k in 1..40 {
        let t = -2.0 + k as f64 * 0.05;
        worst = worst.max((p.eval(x_of(t)) - t).abs());
    }
    assert!(worst < 2.0 * field.h(), "worst {worst}");
    // σ at exact levels, free of interpolation between level bins
    let levels = [-2.0, -1.0, -0.5, -0.2];
    let dist = distribution_at(&field, &levels, 4).unwrap();
    for t in levels {
        let exact = PI * (2.0 * x_of(t)).exp();
        assert!(
            (dist.eval(t) - exact).abs() < 0.002 * exact,
            "t = {t}: {} vs {exact}",
            dist.eval(t)
        );
    }
}

#[test]
fn equidistribution_of_random_fields() {
    let obs = [
        Observable::Power { p: 1.0 },
        Observable::Power { p: 2.0 },
        Observable::ExpNeg,
    ];
    let complex = GridSpec::ball(FieldKind::Complex, 2, 256).unwrap();
    let real = GridSpec::body(
        FieldKind::RealConvex,
        ConvexBody::regular_polygon(6, 1.0).unwrap(),
        256,
    )
    .unwrap();
    for grid in [complex, real] {
        for seed in 0..3 {
            let field = generate(&random(seed), &grid).unwrap();
            let p = schwarz(&field, &SigmaOptions::for_dim(2)).unwrap();
            for r in equidistribution_check(&field, &p, &obs).unwrap() {
                assert!(
                    r.rel_gap < 0.01,
                    "{:?} seed {seed}: {} vs {}",
                    r.observable,
                    r.grid,
                    r.radial
                );
            }
        }
    }
}

#[test]
fn omega_symmetrization_fixes_gauge_functions() {
    let hex = ConvexBody::regular_polygon(6, 1.0).unwrap();
    let f = RadialProfile::minkowski_from_fn(256, |s| 0.5 * s * s + s.powi(4) - 1.5).unwrap();
    let grid = GridSpec::body(FieldKind::RealConvex, hex.clone(), 256).unwrap();
    let field = generate(&FieldGeneratorSpec::Radial { profile: f.clone() }, &grid).unwrap();
    let p = omega_symmetrize(&field, &hex, &SigmaOptions::for_dim(2)).unwrap();
    // below the first level the profile is flat by construction
    let diff = p.max_abs_diff(&f, p.knots()[1]);
    assert!(diff < 2.0 * field.h(), "diff {diff}");
    // a field symmetric for its own body has scaled polar volume |Ω°|
    let pv = scaled_polar_volume(&field, &hex).unwrap();
    assert!((pv - hex.polar().unwrap().volume().unwrap()).abs() < 1e-9);
}

#[test]
fn symmetrization_is_idempotent() {
    let grid = GridSpec::ball(FieldKind::Complex, 2, 256).unwrap();
    let opts = SigmaOptions::for_dim(2);
    let field = generate(&random(7), &grid).unwrap();
    let p1 = schwarz(&field, &opts).unwrap();
    let sym = generate(
        &FieldGeneratorSpec::Radial {
            profile: p1.clone(),
        },
        &grid,
    )
    .unwrap();
    let p2 = schwarz(&sym, &opts).unwrap();
    let lo = p1.knots()[1];
    let diff = p2.max_abs_diff(&p1, lo);
    assert!(diff < 2.0 * field.h(), "diff {diff}");
}

#[test]
fn symmetrization_lowers_complex_energy() {
    let grid = GridSpec::ball(FieldKind::Complex, 2, 256).unwrap();
    for seed in [1, 2] {
        let field = generate(&random(seed), &grid).unwrap();
        let e = complex_ma_energy(&field, 1).unwrap();
        let p = schwarz(&field, &SigmaOptions::for_dim(2)).unwrap();
        let es = profile_energy_complex(&p, 1).unwrap();
        assert!(es <= e * 1.02, "seed {seed}: {es} > {e}");
    }
}

#[test]
fn three_dimensional_spot_check() {
    let grid = GridSpec::ball(FieldKind::RealConvex, 3, 40).unwrap();
    let field = generate(&random(3), &grid).unwrap();
    let e = real_ma_energy(&field).unwrap();
    let p = schwarz(&field, &SigmaOptions::for_dim(3)).unwrap();
    let es = profile_energy_real(&p, 4.0 * PI / 3.0, 3).unwrap();
    assert!(es <= e * 1.05, "{es} > {e}");
    assert!(p.convexity_defect() < 10.0 * field.h());
}
