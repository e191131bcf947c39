//! Reproducible pass/fail experiments built on the other modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::io::{BufRead, Write};
use std::time::Instant;

use crate::bodies::{unit_ball_volume, BalancedLog, ConvexBody};
use crate::error::{Error, Result};
use crate::fields::{
    complex_ma_energy, generate, levi_density_variation, real_ma_energy, FieldGeneratorSpec,
    FieldKind, GridField, GridSpec,
};
use crate::profiles::{
    profile_energy_complex, profile_energy_real, radial_integral, sphere_area, Observable,
    Parametrization, RadialProfile,
};
use crate::symmetrize::{
    concavity_diagnostics, distribution, profile_from_distribution, schwarz, ConcavityMode,
    SigmaOptions,
};

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Version of the report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One computed number with the tolerance and oracle it was judged by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    /// Non-finite values serialize as null.
    #[serde(deserialize_with = "nullable_f64")]
    pub value: f64,
    pub unit: String,
    pub tolerance: Option<f64>,
    pub oracle: String,
    pub verdict: Verdict,
}

impl Quantity {
    pub fn info(name: impl Into<String>, value: f64, unit: &str) -> Self {
        Self {
            name: name.into(),
            value,
            unit: unit.into(),
            tolerance: None,
            oracle: "recorded".into(),
            verdict: Verdict::Pass,
        }
    }

    pub fn check(
        name: impl Into<String>,
        value: f64,
        unit: &str,
        tolerance: f64,
        oracle: impl Into<String>,
        ok: bool,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            unit: unit.into(),
            tolerance: Some(tolerance),
            oracle: oracle.into(),
            verdict: Verdict::from_bool(ok),
        }
    }

    pub fn inconclusive(name: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            unit: String::new(),
            tolerance: None,
            oracle: note.into(),
            verdict: Verdict::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub experiment: String,
    pub inputs: serde_json::Value,
    pub quantities: Vec<Quantity>,
    pub verdict: Verdict,
    pub runtime_s: f64,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl VerificationReport {
    fn new(experiment: &str, inputs: serde_json::Value) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            experiment: experiment.into(),
            inputs,
            quantities: Vec::new(),
            verdict: Verdict::Inconclusive,
            runtime_s: 0.0,
            notes: Vec::new(),
        }
    }

    fn push(&mut self, q: Quantity) {
        self.quantities.push(q);
    }

    /// Fail if anything failed, pass if something passed, else inconclusive.
    fn finish(mut self, start: Instant) -> Self {
        let judged: Vec<Verdict> = self
            .quantities
            .iter()
            .filter(|q| q.tolerance.is_some())
            .map(|q| q.verdict)
            .collect();
        self.verdict = if judged.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if judged.contains(&Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Inconclusive
        };
        self.runtime_s = start.elapsed().as_secs_f64();
        self
    }

    pub fn get(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Quantity> {
        self.quantities
            .iter()
            .filter(|q| q.verdict == Verdict::Fail)
    }

    /// One JSON record per line.
    pub fn write_record<W: Write>(&self, mut w: W) -> Result<()> {
        let line = serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::Format(e.to_string()))
    }

    /// Flat rows (experiment, quantity, value, tolerance, verdict).
    pub fn write_csv<W: Write>(reports: &[VerificationReport], w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(["experiment", "quantity", "value", "tolerance", "verdict"])
            .map_err(io)?;
        for r in reports {
            for q in &r.quantities {
                let tol = q.tolerance.map(|t| t.to_string()).unwrap_or_default();
                wr.write_record([
                    r.experiment.as_str(),
                    &q.name,
                    &q.value.to_string(),
                    &tol,
                    q.verdict.as_str(),
                ])
                .map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Read JSON-lines reports, checking the schema version.
pub fn read_reports<R: BufRead>(r: R) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        let schema = v.get("schema").and_then(|s| s.as_u64()).unwrap_or(0);
        if schema != SCHEMA_VERSION as u64 {
            return Err(Error::Format(format!(
                "line {}: schema version {schema}, expected {SCHEMA_VERSION}",
                i + 1
            )));
        }
        out.push(
            serde_json::from_value(v).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Tolerances of the symmetrization suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrizationTolerance {
    pub rel: f64,
    pub abs: f64,
    /// τ = c·h for the concavity diagnostics.
    pub tau_factor: f64,
    /// Probe every stride-th level in the concavity diagnostics.
    pub stride: usize,
}

impl Default for SymmetrizationTolerance {
    fn default() -> Self {
        Self {
            rel: 0.02,
            abs: 1e-6,
            tau_factor: 10.0,
            stride: 4,
        }
    }
}

/// Per-instance outcome of a symmetrization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationInstance {
    pub energy: f64,
    pub symmetrized: f64,
    pub concavity_defect: f64,
}

fn symmetrize_one(
    field: &GridField,
    n: usize,
    tol: &SymmetrizationTolerance,
) -> Result<SymmetrizationInstance> {
    let d = field.dim();
    let opts = SigmaOptions::for_dim(d);
    let dist = distribution(field, &opts)?;
    let profile = profile_from_distribution(&dist, field.kind(), opts.min_cells)?;
    let (energy, symmetrized, mode) = match field.kind() {
        FieldKind::Complex => (
            complex_ma_energy(field, n)?,
            profile_energy_complex(&profile, n)?,
            ConcavityMode::Log,
        ),
        FieldKind::RealConvex => {
            let vol = field.domain().volume(d)?;
            // the polar of the ball with the domain's volume
            let polar = unit_ball_volume(d).powi(2) / vol;
            (
                real_ma_energy(field)?,
                profile_energy_real(&profile, polar, d)?,
                ConcavityMode::Root { n: d },
            )
        }
    };
    let concavity_defect = if dist.degenerate {
        0.0
    } else {
        concavity_diagnostics(&dist, mode, tol.stride, opts.min_cells)?.defect
    };
    Ok(SymmetrizationInstance {
        energy,
        symmetrized,
        concavity_defect,
    })
}

fn verify_symmetrization(
    name: &str,
    specs: &[FieldGeneratorSpec],
    grid: &GridSpec,
    n: usize,
    tol: &SymmetrizationTolerance,
) -> Result<(VerificationReport, Vec<Option<SymmetrizationInstance>>)> {
    let start = Instant::now();
    grid.validate()?;
    let mut rep = VerificationReport::new(
        name,
        json!({ "grid": grid, "n": n, "specs": specs, "tolerance": tol }),
    );
    let h = grid.lattice.h();
    let tau = tol.tau_factor * h;
    let mut gaps = Vec::new();
    let mut instances = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let field = match generate(spec, grid) {
            Ok(f) => f,
            Err(e) => {
                rep.push(Quantity::inconclusive(
                    format!("instance {i}"),
                    format!("generation failed: {e}"),
                ));
                instances.push(None);
                continue;
            }
        };
        let inst = symmetrize_one(&field, n, tol)?;
        let bound = inst.energy * (1.0 + tol.rel) + tol.abs;
        rep.push(Quantity::info(
            format!("instance {i} energy"),
            inst.energy,
            "energy",
        ));
        rep.push(Quantity::check(
            format!("instance {i} symmetrized energy"),
            inst.symmetrized,
            "energy",
            tol.rel,
            "E(sym) <= E(1 + rel) + abs",
            inst.symmetrized <= bound,
        ));
        rep.push(Quantity::check(
            format!("instance {i} concavity defect"),
            inst.concavity_defect,
            "1/level^2",
            tau,
            "tau = c h",
            inst.concavity_defect <= tau,
        ));
        gaps.push(inst.symmetrized / inst.energy.max(1e-300) - 1.0);
        instances.push(Some(inst));
    }
    if !gaps.is_empty() {
        gaps.sort_by(f64::total_cmp);
        rep.push(Quantity::info("relative gap min", gaps[0], "1"));
        rep.push(Quantity::info(
            "relative gap median",
            gaps[gaps.len() / 2],
            "1",
        ));
        rep.push(Quantity::info(
            "relative gap max",
            gaps[gaps.len() - 1],
            "1",
        ));
    }
    Ok((rep.finish(start), instances))
}

/// E(φ̂) ≤ E(φ)(1 + rel) + abs for S¹-invariant psh fields on the ball.
pub fn verify_symmetrization_complex(
    specs: &[FieldGeneratorSpec],
    grid: &GridSpec,
    n: usize,
    tol: &SymmetrizationTolerance,
) -> Result<VerificationReport> {
    if grid.kind != FieldKind::Complex || grid.lattice.dim != 2 * n {
        return Err(Error::InvalidGrid(format!(
            "need a complex grid of real dimension {}",
            2 * n
        )));
    }
    Ok(verify_symmetrization("symmetrization_complex", specs, grid, n, tol)?.0)
}

/// The real analogue on convex fields.
pub fn verify_symmetrization_real(
    specs: &[FieldGeneratorSpec],
    grid: &GridSpec,
    tol: &SymmetrizationTolerance,
) -> Result<VerificationReport> {
    if grid.kind != FieldKind::RealConvex {
        return Err(Error::InvalidGrid("need a real grid".into()));
    }
    let d = grid.lattice.dim;
    Ok(verify_symmetrization("symmetrization_real", specs, grid, d, tol)?.0)
}

/// Mahler-normalised energies of f(μ_Ω) and its symmetrization f(μ_B).
pub fn tso_experiment(
    body: &ConvexBody,
    f: &RadialProfile,
    n: usize,
) -> Result<VerificationReport> {
    let start = Instant::now();
    if f.parametrization() != Parametrization::MinkowskiScale {
        return Err(Error::InvalidProfile(
            "tso experiment needs a Minkowski-scale profile".into(),
        ));
    }
    if body.dim() != n {
        return Err(Error::InvalidBody(format!(
            "body dimension {} differs from n = {n}",
            body.dim()
        )));
    }
    let mut rep = VerificationReport::new("tso", json!({ "body": body, "profile": f, "n": n }));
    let polar = body.polar();
    let (vol, polar_vol, tol) = match (body.volume(), polar.as_ref().map(|p| p.volume())) {
        (Ok(v), Ok(Ok(pv))) => (v, pv, 1e-6),
        _ => {
            // Monte-Carlo volumes; the identity then only holds statistically
            let v = body.volume_estimate(0, 400_000)?;
            let pv = polar?.volume_estimate(1, 400_000)?;
            rep.notes.push("Monte-Carlo volumes".into());
            (v.value, pv.value, 1e-2)
        }
    };
    let ball = unit_ball_volume(n);
    let e_omega = profile_energy_real(f, polar_vol, n)?;
    let e_ball = profile_energy_real(f, ball * ball / vol, n)?;
    let m_omega = vol * polar_vol;
    let m_ball = ball * ball;
    let lhs = e_omega / m_omega;
    let rhs = e_ball / m_ball;
    let err = if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
    };
    rep.push(Quantity::info("E_omega", e_omega, "energy"));
    rep.push(Quantity::info("E_ball", e_ball, "energy"));
    rep.push(Quantity::info("mahler_omega", m_omega, "volume^2"));
    rep.push(Quantity::info("mahler_ball", m_ball, "volume^2"));
    rep.push(Quantity::check(
        "identity ratio error",
        err,
        "1",
        tol,
        "closed-form energies",
        err < tol,
    ));
    rep.push(Quantity::info(
        "counterexample",
        if e_ball > e_omega { 1.0 } else { 0.0 },
        "flag",
    ));
    Ok(rep.finish(start))
}

/// Random origin-symmetric polygons: hulls of k random points and their
/// reflections.
pub fn random_symmetric_polygons(seed: u64, count: usize) -> Result<Vec<ConvexBody>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = rng.gen_range(2..=8usize);
        let mut pts = Vec::with_capacity(2 * k);
        for _ in 0..k {
            let r: f64 = rng.gen_range(0.2..2.0);
            let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            pts.push([r * a.cos(), r * a.sin()]);
            pts.push([-r * a.cos(), -r * a.sin()]);
        }
        if let Ok(b) = ConvexBody::hull(&pts) {
            out.push(b);
        }
    }
    Ok(out)
}

/// M(Ω) ≤ M(B) for origin-symmetric bodies.
pub fn santalo_scan(bodies: &[ConvexBody], tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "santalo",
        json!({ "bodies": bodies.len(), "tolerance": tol }),
    );
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in bodies.iter().enumerate() {
        if !b.is_origin_symmetric() {
            rep.notes
                .push(format!("body {i} skipped: not origin-symmetric"));
            continue;
        }
        let m = b.mahler()?;
        let ball = unit_ball_volume(b.dim()).powi(2);
        rep.push(Quantity::check(
            format!("body {i} mahler"),
            m,
            "volume^2",
            tol,
            "ball value",
            m <= ball + tol,
        ));
        if best.map_or(true, |(_, bm)| m > bm) {
            best = Some((i, m));
        }
    }
    if let Some((i, m)) = best {
        rep.push(Quantity::info("max mahler", m, "volume^2"));
        rep.notes.push(format!("maximiser: body {i}"));
    }
    Ok(rep.finish(start))
}

/// ∫_{−∞}^0 e^{(−w)^{(n+1)/n}} e^s ds for a LogRadius profile w.
pub fn moser_one_variable(w: &RadialProfile, n: usize) -> Result<f64> {
    if w.parametrization() != Parametrization::LogRadius {
        return Err(Error::InvalidProfile("need a log-radius profile".into()));
    }
    let q = (n as f64 + 1.0) / n as f64;
    let x = w.knots();
    let v = w.values();
    let g = |val: f64| (-val).max(0.0).powf(q);
    let mut total = (g(v[0]) + x[0]).exp();
    for i in 0..x.len() - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let s = (v[i + 1] - v[i]) / (b - a);
        let f = |t: f64| (g(v[i] + s * (t - a)) + t).exp();
        let crude = (b - a) * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) / 6.0;
        total += quadrature::double_exponential::integrate(f, a, b, (1e-11 * crude).max(1e-300))
            .integral;
    }
    if !total.is_finite() {
        return Err(Error::IntegralDiverges);
    }
    Ok(total)
}

/// The one-variable function w(s) = n^{n/(n+1)} f(s/(2n)); for E(f) = 1 it
/// has ∫(w')^{n+1} = 1.
pub fn moser_variable(f: &RadialProfile, n: usize) -> Result<RadialProfile> {
    let c = (n as f64).powf(n as f64 / (n as f64 + 1.0));
    let k: Vec<(f64, f64)> = f
        .knots()
        .iter()
        .zip(f.values())
        .map(|(&x, &v)| (2.0 * n as f64 * x, c * v))
        .collect();
    RadialProfile::log_radius(&k)
}

/// Energy-normalised profiles max(t, −a) for a = 0.25, 0.5, …;
/// larger a concentrates more of the energy near the origin.
pub fn moser_family(n: usize, members: usize) -> Result<Vec<RadialProfile>> {
    (0..members)
        .map(|j| {
            let a = 0.25 * (1.0 + j as f64);
            let f = RadialProfile::max_linear(1.0, -a)?;
            let e = profile_energy_complex(&f, n)?;
            Ok(f.scaled(e.powf(-1.0 / (n as f64 + 1.0))))
        })
        .collect()
}

/// Boundedness of the Moser-Trudinger integral over energy-normalised
/// profiles, stability of the log form's additive constant, and the
/// one-variable Moser integral.
pub fn moser_trudinger_suite(
    profiles: &[RadialProfile],
    n: usize,
    stability: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "moser_trudinger",
        json!({ "profiles": profiles.len(), "n": n, "stability": stability }),
    );
    if profiles.is_empty() {
        return Err(Error::InvalidProfile("empty profile batch".into()));
    }
    let obs = Observable::Moser { kappa: n as f64, n };
    let nn = n as f64 + 1.0;
    let mut running = Vec::with_capacity(profiles.len());
    let mut b_values = Vec::with_capacity(profiles.len());
    let mut moser_max: f64 = 0.0;
    for (i, f) in profiles.iter().enumerate() {
        let e = profile_energy_complex(f, n)?;
        if e <= 0.0 {
            rep.notes.push(format!("profile {i} skipped: zero energy"));
            continue;
        }
        let g = f.scaled(e.powf(-1.0 / nn));
        let integral = match radial_integral(&obs, &g, n) {
            Ok(v) => v,
            Err(err) => {
                rep.push(Quantity::check(
                    format!("profile {i} mt integral"),
                    f64::INFINITY,
                    "volume",
                    0.0,
                    err.to_string(),
                    false,
                ));
                continue;
            }
        };
        rep.push(Quantity::info(
            format!("profile {i} mt integral"),
            integral,
            "volume",
        ));
        let prev = running.last().copied().unwrap_or(0.0f64);
        running.push(prev.max(integral));
        // log form on the unnormalised profile
        let lhs = radial_integral(&Observable::ExpNeg, f, n)?.ln();
        b_values.push(lhs - e / nn.powf(nn));
        // one-variable Moser integral, with ∫(w')^{n+1} = 1
        let j = moser_one_variable(&moser_variable(&g, n)?, n)?;
        moser_max = moser_max.max(j);
        // the two integrals agree: J = 2n I / |S^{2n-1}|
        let ratio = j / (2.0 * n as f64 * integral / sphere_area(n)) - 1.0;
        rep.push(Quantity::check(
            format!("profile {i} moser consistency"),
            ratio.abs(),
            "1",
            1e-6,
            "change of variables",
            ratio.abs() < 1e-6,
        ));
    }
    if let Some(&max) = running.last() {
        let half = running[(running.len() + 1) / 2 - 1];
        let change = (max - half) / half;
        rep.push(Quantity::info("mt integral max", max, "volume"));
        rep.push(Quantity::check(
            "mt max change over last doubling",
            change,
            "1",
            stability,
            "running max",
            change < stability,
        ));
        rep.push(Quantity::info("moser constant estimate", moser_max, "1"));
    }
    if b_values.len() >= 2 {
        let half = (b_values.len() + 1) / 2;
        let b_fit = b_values[..half]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let b_all = b_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let drift = (b_all - b_fit).max(0.0) / b_fit.abs().max(1.0);
        rep.push(Quantity::info("log mt constant", b_all, "1"));
        rep.push(Quantity::check(
            "log mt constant drift",
            drift,
            "1",
            stability,
            "fit on first half",
            drift < stability,
        ));
    }
    Ok(rep.finish(start))
}

/// Convexity defect of the symmetrized Green kernel for each pole.
pub fn green_counterexample(
    poles: &[f64],
    n_grid: usize,
    margin: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "green",
        json!({ "poles": poles, "grid": n_grid, "margin": margin }),
    );
    let grid = GridSpec::ball(FieldKind::Complex, 2, n_grid)?;
    let tau = 10.0 * grid.lattice.h();
    for &a in poles {
        let field = generate(&FieldGeneratorSpec::Green { a: [a, 0.0] }, &grid)?;
        let defect = schwarz(&field, &SigmaOptions::for_dim(2))?.convexity_defect();
        let name = format!("pole {a} convexity defect");
        let q = if a == 0.0 {
            Quantity::check(name, defect, "1/level", tau, "radial input", defect <= tau)
        } else if a.abs() >= 0.5 {
            Quantity::check(
                name,
                defect,
                "1/level",
                margin * tau,
                "counterexample margin",
                defect > margin * tau,
            )
        } else {
            Quantity::info(name, defect, "1/level")
        };
        rep.push(q);
    }
    rep.push(Quantity::info("tau", tau, "1/level"));
    Ok(rep.finish(start))
}

/// A balanced log with the expectation of being a complex ellipsoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureSample {
    pub name: String,
    pub u: BalancedLog,
    pub ellipsoid: bool,
}

/// Levi-density variation at several levels and two step sizes.
pub fn ellipsoid_signature(
    samples: &[SignatureSample],
    levels: &[f64],
    steps: [f64; 2],
    points: usize,
    floor_ratio: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "ellipsoid_signature",
        json!({ "samples": samples, "levels": levels, "steps": steps, "points": points }),
    );
    let mut ellipsoid_fine: f64 = 0.0;
    let mut others: Vec<(String, f64)> = Vec::new();
    for s in samples {
        let mut coarse: f64 = 0.0;
        let mut fine: f64 = 0.0;
        for &l in levels {
            coarse = coarse.max(levi_density_variation(&s.u, l, steps[0], points)?);
            fine = fine.max(levi_density_variation(&s.u, l, steps[1], points)?);
        }
        rep.push(Quantity::info(
            format!("{} variation coarse", s.name),
            coarse,
            "1",
        ));
        if s.ellipsoid {
            let ok = fine <= 0.5 * coarse || fine < 1e-9;
            rep.push(Quantity::check(
                format!("{} variation fine", s.name),
                fine,
                "1",
                0.5,
                "halves under refinement",
                ok,
            ));
            ellipsoid_fine = ellipsoid_fine.max(fine);
        } else {
            rep.push(Quantity::info(
                format!("{} variation fine", s.name),
                fine,
                "1",
            ));
            others.push((s.name.clone(), fine));
        }
    }
    for (name, fine) in others {
        let ratio = fine / ellipsoid_fine.max(1e-300);
        rep.push(Quantity::check(
            format!("{name} floor ratio"),
            ratio,
            "1",
            floor_ratio,
            "largest ellipsoid value",
            ratio >= floor_ratio,
        ));
    }
    Ok(rep.finish(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn square_tso_closed_forms() {
        let f = RadialProfile::minkowski_from_fn(4096, |s| s * s - 1.0).unwrap();
        let rep = tso_experiment(&ConvexBody::square(1.0).unwrap(), &f, 2).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_relative_eq!(rep.get("E_omega").unwrap().value, 4.0, max_relative = 1e-6);
        assert_relative_eq!(
            rep.get("E_ball").unwrap().value,
            PI * PI / 2.0,
            max_relative = 1e-6
        );
        assert_eq!(rep.get("counterexample").unwrap().value, 1.0);
    }

    #[test]
    fn moser_one_variable_anchor() {
        let w = RadialProfile::max_linear(1.0, -1.0).unwrap();
        let j = moser_one_variable(&w, 1).unwrap();
        // 1 + e^{-1/4}·2∫₀^{1/2} e^{u²} du
        assert_relative_eq!(
            j,
            1.0 + (-0.25f64).exp() * 2.0 * 0.544_987_104_183_622,
            max_relative = 1e-9
        );
    }

    #[test]
    fn reports_roundtrip_as_json_lines() {
        let rep = santalo_scan(&[ConvexBody::square(1.0).unwrap()], 1e-6).unwrap();
        let mut buf = Vec::new();
        rep.write_record(&mut buf).unwrap();
        let back = read_reports(buf.as_slice()).unwrap();
        assert_eq!(back[0].experiment, "santalo");
        assert_relative_eq!(back[0].quantities[0].value, 8.0, epsilon = 1e-12);
        let bad = String::from_utf8(buf)
            .unwrap()
            .replace("\"schema\":1", "\"schema\":7");
        assert!(read_reports(bad.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("schema version 7"));
    }
}
