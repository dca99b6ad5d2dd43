//! One recipe per command. Each turns resolved [`Params`] into a [`Report`]
//! whose rows are the assertions the recipe checks.

use std::path::Path;

use hadamard_gap::acceptance;
use hadamard_gap::eigensolve::{
    gap_convergence_study, rellich_quotient_check, solve, ProblemKind, RadialEigenProblem, RellichMode,
    DEFAULT_MESH, RESIDUAL_TOL,
};
use hadamard_gap::modelspace::laplace_comparison_check;
use hadamard_gap::oracle::{polynomial_on, random_annular_bump, random_even_bump};
use hadamard_gap::report::{write_atomic, Report, ReportRow};
use hadamard_gap::riccati::{catalog, log_grid, sharp_constant, verify_system, Family, FamilyParams, Mode, DEFAULT_GRID};
use hadamard_gap::sharpness::{sharpness_sweep_with, SweepKind, Truncation, TruncationProfile, DEFAULT_DELTAS};
use hadamard_gap::specialfn::{cross_product_zero, first_zero_j, BesselOrder};
use hadamard_gap::{GapError, ModelSpace, RadialProfile, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Params;

/// Interval on which Riccati systems are verified.
pub const VERIFY_INTERVAL: (f64, f64) = (1e-3, 1e3);
const RELLICH_SEED: u64 = 7;

fn invalid(name: &'static str, reason: impl Into<String>) -> GapError {
    GapError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub fn odi_check(p: &Params) -> Result<Report> {
    let family: Family = p.family.as_deref().unwrap_or("clamped_constant").parse()?;
    if p.optimal && (p.a.is_some() || p.b.is_some() || p.c.is_some()) {
        return Err(invalid("optimal", "--optimal conflicts with explicit a, b or C"));
    }
    let params = FamilyParams::new(p.n.unwrap_or(3), p.kappa.unwrap_or(1.0), p.p.unwrap_or(2.0))
        .gamma(p.gamma.unwrap_or(0.0))
        .with_abc(p.a, p.b, p.c);
    let sys = catalog(family, params)?;
    let verified = verify_system(&sys, VERIFY_INTERVAL, DEFAULT_GRID)?;
    let mut report = Report::new("odi-check");
    report.param("family", family.id());
    report.param("n", params.n);
    report.param("kappa", params.kappa);
    report.param("p", params.p);
    report.param("gamma", params.gamma);
    report.param("a", params.a);
    report.param("b", params.b);
    report.param("C", params.c);
    report.param("interval", VERIFY_INTERVAL);
    report.param("grid", verified.grid_size);
    let condition = match sys.mode {
        Mode::Odi => "T3.1",
        Mode::Pdi => "T3.2",
    };
    let label = format!("{family}, n={}, kappa={}, p={}, gamma={}", params.n, params.kappa, params.p, params.gamma);
    report.push(ReportRow::new(
        condition,
        format!("{label}, min residual at t={:e}", verified.argmin),
        verified.min_residual,
        0.0,
        verified.min_margin,
        verified.pass,
    ));
    report.push(ReportRow::new(
        condition,
        format!("{label}, L, W, G, H positivity"),
        if verified.positive { 1.0 } else { 0.0 },
        1.0,
        0.0,
        verified.positive,
    ));
    if let Some(c2) = &verified.c2 {
        report.push(ReportRow::new(
            condition,
            format!("{label}, max (wG)' at t={:e}", c2.argmax),
            c2.max_derivative,
            0.0,
            c2.max_derivative,
            c2.pass,
        ));
    }
    report.theorem(family.theorem());
    report.param("sharp_constant", sharp_constant(family, &params)?);
    Ok(report)
}

fn truncation_for(kind: SweepKind, raw: Option<&str>) -> Result<Truncation> {
    match raw {
        None | Some("smooth") => Ok(kind.smooth_truncation()),
        Some("linear") => Ok(Truncation::Linear),
        Some(other) => {
            let order = other
                .strip_prefix("smooth:")
                .and_then(|o| o.parse::<usize>().ok())
                .ok_or_else(|| invalid("truncation", format!("expected linear, smooth or smooth:<order>, got `{other}`")))?;
            Ok(Truncation::Smooth { order })
        }
    }
}

pub fn sharpness(p: &Params) -> Result<Report> {
    let kind = SweepKind::parse(p.kind.as_deref().unwrap_or("clamped"), p.k.unwrap_or(1))?;
    let truncation = truncation_for(kind, p.truncation.as_deref())?;
    let (n, kappa, exp) = (p.n.unwrap_or(3), p.kappa.unwrap_or(1.0), p.p.unwrap_or(2.0));
    let deltas = p.deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
    let sweep = sharpness_sweep_with(kind, truncation, n, kappa, exp, &deltas)?;
    let mut report = Report::new("sharpness");
    report.param("kind", format!("{kind:?}"));
    report.param("n", n);
    report.param("kappa", kappa);
    report.param("p", exp);
    report.param("deltas", &deltas);
    report.param("truncation", truncation.to_string());
    let label = format!("{kind:?}, n={n}, kappa={kappa}, p={exp}, {truncation}");
    for row in sweep.assertion_rows(&label) {
        report.push(row);
    }
    if let (Some(tol), Some(last)) = (p.tol, sweep.rows.last()) {
        report.push(ReportRow::new(
            kind.theorem(),
            format!("{label}, final rel_gap within tol"),
            last.residual,
            tol,
            last.residual.abs() - tol,
            last.residual.abs() <= tol,
        ));
    }
    report.push_sweep(sweep);
    Ok(report)
}

/// Radial first eigenvalue on the Euclidean ball of radius `r`.
fn euclidean_baseline(kind: ProblemKind, n: usize, r: f64) -> Result<f64> {
    let nu = BesselOrder::for_dimension(n)?;
    Ok(match kind {
        ProblemKind::Membrane => (first_zero_j(nu)? / r).powi(2),
        ProblemKind::Clamped => (cross_product_zero(nu)? / r).powi(4),
        ProblemKind::Buckling => (first_zero_j(BesselOrder::new(n as f64 / 2.0)?)? / r).powi(2),
    })
}

pub fn eigen(p: &Params) -> Result<Report> {
    let kind: ProblemKind = p.kind.as_deref().unwrap_or("membrane").parse()?;
    let space = ModelSpace::new(p.n.unwrap_or(2), p.kappa.unwrap_or(0.0))?;
    let radii = p.radii.clone().unwrap_or_else(|| vec![1.0]);
    let mesh = p.mesh.unwrap_or(DEFAULT_MESH);
    let mut report = Report::new("eigen");
    report.param("kind", kind.to_string());
    report.param("n", space.n());
    report.param("kappa", space.kappa());
    report.param("R", &radii);
    report.param("mesh", mesh);
    let theorem = kind.theorem();
    if radii.len() > 1 {
        let study = gap_convergence_study(kind, &space, &radii, mesh)?;
        for row in study.assertion_rows(&format!("{kind}, {space}, mesh={mesh}")) {
            report.push(row);
        }
        report.note("rows assert lambda_1 > limit and a strictly decreasing gap; no decay rate is asserted");
        report.push_sweep(study);
        return Ok(report);
    }
    let r = radii[0];
    let count = p.count.unwrap_or(1);
    let prob = RadialEigenProblem::new(kind, space, r, mesh)?;
    let res = solve(&prob, count)?;
    report.param("count", count);
    report.param("eigenvalues", &res.eigenvalues);
    report.param("extrapolated", &res.extrapolated);
    report.param("residuals", &res.residuals);
    report.param("observed_order", res.observed_order);
    report.param("iterations", res.iterations);
    let label = format!("{kind}, {space}, R={r}, mesh={mesh}");
    let lambda = res.eigenvalues[0];
    if space.is_euclidean() {
        let tol = p.tol.unwrap_or(if kind == ProblemKind::Clamped { 1e-5 } else { 1e-6 });
        let reference = euclidean_baseline(kind, space.n(), r)?;
        report.push(ReportRow::close(theorem, format!("{label}, lambda_1 vs Bessel closed form"), lambda, reference, tol));
    } else {
        report.push(ReportRow::at_least(theorem, format!("{label}, lambda_1 >= gap bound"), lambda, kind.gap_bound(&space)));
    }
    let change = (lambda - res.coarse_eigenvalues[0]).abs() / lambda.abs();
    report.push(ReportRow::new(theorem, format!("{label}, mesh halving change"), change, 1e-4, change, change < 1e-4));
    for (i, (lam, resid)) in res.eigenvalues.iter().zip(&res.residuals).enumerate() {
        report.push(ReportRow::new(
            theorem,
            format!("{label}, residual of lambda_{}", i + 1),
            *lam,
            res.extrapolated[i],
            *resid,
            *resid < RESIDUAL_TOL,
        ));
    }
    if let Some(path) = &p.dump {
        dump_eigenvectors(path, &res.nodes, &res.eigenvectors)?;
        report.note(format!("eigenfunctions written to {}", path.display()));
    }
    Ok(report)
}

/// Writes `t, u_1, …, u_m` at the mesh nodes.
fn dump_eigenvectors(path: &Path, nodes: &[f64], vectors: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: String| GapError::Solver {
        message: format!("cannot write {}: {e}", path.display()),
        log: Vec::new(),
    };
    let mut header = vec!["t".to_string()];
    header.extend((1..=vectors.len()).map(|i| format!("u{i}")));
    w.write_record(&header).map_err(|e| io(e.to_string()))?;
    for (j, t) in nodes.iter().enumerate() {
        let mut rec = vec![format!("{t:e}")];
        rec.extend(vectors.iter().map(|v| format!("{:e}", v[j])));
        w.write_record(&rec).map_err(|e| io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| io(e.to_string()))?;
    write_atomic(path, &String::from_utf8_lossy(&bytes)).map_err(|e| io(e.to_string()))
}

fn rellich_mode(p: &Params) -> Result<(RellichMode, usize, f64)> {
    let k = p.k.unwrap_or(1);
    // (mode, default n, default kappa)
    Ok(match p.mode.as_deref().unwrap_or("weighted") {
        "weighted" => (RellichMode::Weighted { gamma: p.gamma.unwrap_or(0.0) }, 5, 0.0),
        "higher_order" => (RellichMode::HigherOrder { k, gradient: false }, 4 * k + 1, 0.0),
        "higher_order_gradient" => (RellichMode::HigherOrder { k, gradient: true }, 4 * k + 3, 0.0),
        "bessel" => (RellichMode::BesselImproved, 5, 0.0),
        "hyperbolic" => (RellichMode::HyperbolicImproved, 5, 1.0),
        "gradient" => (RellichMode::Gradient, 9, 0.0),
        "hardy" => (RellichMode::Hardy, 5, 0.0),
        other => return Err(invalid("mode", format!("unknown Rellich mode `{other}`"))),
    })
}

pub fn rellich(p: &Params) -> Result<Report> {
    let (mode, n, kappa) = rellich_mode(p)?;
    let space = ModelSpace::new(p.n.unwrap_or(n), p.kappa.unwrap_or(kappa))?;
    let exp = p.p.unwrap_or(2.0);
    let samples = p.samples.unwrap_or(10);
    let mut report = Report::new("rellich");
    report.param("mode", format!("{mode:?}"));
    report.param("n", space.n());
    report.param("kappa", space.kappa());
    report.param("p", exp);
    report.param("samples", samples);
    let bump = polynomial_on(vec![1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0], 0.0, 0.0, 1.0)?;
    let mut functions: Vec<(String, RadialProfile)> = vec![("(1-t^2)^4".into(), bump)];
    let mut rng = ChaCha8Rng::seed_from_u64(RELLICH_SEED);
    for i in 0..samples {
        let u = if i % 2 == 0 {
            random_even_bump(&mut rng, 1.0, 4)?
        } else {
            random_annular_bump(&mut rng, 1.0, 6)?
        };
        functions.push((format!("random bump #{i}"), u));
    }
    if mode == RellichMode::HyperbolicImproved {
        let deltas = p.deltas.clone().unwrap_or_else(|| vec![16.0, 64.0]);
        report.param("deltas", &deltas);
        for delta in deltas {
            let truncation = Truncation::Smooth { order: 3 };
            let u = TruncationProfile::with_truncation(delta, space, exp, truncation)?.profile();
            functions.push((format!("u_delta, delta={delta}, {truncation}"), u));
        }
    }
    for (name, u) in functions {
        let c = rellich_quotient_check(&u, mode, exp, &space)?;
        let label = format!("{mode:?}, {space}, p={exp}, {name}");
        report.push(ReportRow::new(c.theorem, label.clone(), c.quotient, c.constant, c.quotient - c.constant, c.pass));
        if let Some(lead) = c.leading_quotient {
            let c0 = c.terms[0].coefficient;
            report.push(ReportRow::at_least(c.theorem, format!("{label}, leading term"), lead, c0));
        }
    }
    Ok(report)
}

/// Runs the selected acceptance criteria; `progress` receives one
/// PASS/FAIL line per criterion.
pub fn validate(p: &Params, progress: &mut dyn FnMut(&str)) -> Result<Report> {
    let ids = p.criteria.clone().unwrap_or_else(|| acceptance::CRITERIA.iter().map(|c| c.id).collect());
    let mut report = Report::new("validate");
    report.param("criteria", &ids);
    for id in ids {
        let outcome = acceptance::run(id)?;
        progress(&outcome.line());
        for f in outcome.failures() {
            progress(&format!("    {f}"));
        }
        report.note(outcome.line());
        let within = outcome.within_budget();
        let mut sub = outcome.report;
        sub.notes.clear();
        report.absorb(sub);
        report.pass &= within;
    }
    Ok(report)
}

/// One default run per result id, merged into a single report.
pub fn full_report(p: &Params) -> Result<Report> {
    let base = Params {
        mesh: p.mesh,
        ..Params::default()
    };
    let with = |f: &dyn Fn(&mut Params)| {
        let mut q = base.clone();
        f(&mut q);
        q
    };
    let mut report = Report::new("report");
    report.param("mesh", p.mesh.unwrap_or(DEFAULT_MESH));
    let runs: Vec<(&str, &str, Params, fn(&Params) -> Result<Report>)> = vec![
        ("T1.1", "clamped sharpness", with(&|q| q.kind = Some("clamped".into())), sharpness),
        ("T1.2", "buckling sharpness", with(&|q| q.kind = Some("buckling".into())), sharpness),
        ("T3.1", "clamped Riccati pair", with(&|q| q.family = Some("clamped_constant".into())), odi_check),
        ("T3.2", "buckling Riccati pair", with(&|q| q.family = Some("buckling_constant".into())), odi_check),
        (
            "T4.3",
            "higher-order clamped sharpness",
            with(&|q| {
                q.kind = Some("higher_order_clamped".into());
                q.k = Some(2);
            }),
            sharpness,
        ),
        (
            "T4.4",
            "higher-order buckling sharpness",
            with(&|q| {
                q.kind = Some("higher_order_buckling".into());
                q.k = Some(2);
            }),
            sharpness,
        ),
        (
            "T5.1",
            "weighted Rellich",
            with(&|q| {
                q.mode = Some("weighted".into());
                q.n = Some(6);
                q.gamma = Some(0.5);
            }),
            rellich,
        ),
        ("R5.2", "classical Rellich", with(&|q| q.mode = Some("weighted".into())), rellich),
        (
            "T5.3",
            "higher-order Rellich",
            with(&|q| {
                q.mode = Some("higher_order".into());
                q.k = Some(2);
            }),
            rellich,
        ),
        ("T5.4", "Bessel-improved Rellich", with(&|q| q.mode = Some("bessel".into())), rellich),
        ("T5.5", "hyperbolic-improved Rellich", with(&|q| q.mode = Some("hyperbolic".into())), rellich),
        ("T5.6", "gradient Rellich", with(&|q| q.mode = Some("gradient".into())), rellich),
        ("H5.2", "Hardy", with(&|q| q.mode = Some("hardy".into())), rellich),
        (
            "McKean",
            "hyperbolic membrane gap",
            with(&|q| {
                q.kind = Some("membrane".into());
                q.kappa = Some(1.0);
                q.radii = Some(vec![2.0, 5.0, 10.0, 20.0]);
            }),
            eigen,
        ),
        (
            "T1.1",
            "hyperbolic clamped gap",
            with(&|q| {
                q.kind = Some("clamped".into());
                q.kappa = Some(1.0);
                q.radii = Some(vec![2.0, 5.0, 10.0, 20.0]);
            }),
            eigen,
        ),
        (
            "T1.2",
            "hyperbolic buckling gap",
            with(&|q| {
                q.kind = Some("buckling".into());
                q.n = Some(3);
                q.kappa = Some(1.0);
                q.radii = Some(vec![2.0, 5.0, 10.0, 20.0]);
            }),
            eigen,
        ),
    ];
    for (id, title, params, recipe) in runs {
        match recipe(&params) {
            Ok(sub) => {
                report.note(format!("{title}: {}", if sub.pass { "pass" } else { "FAIL" }));
                report.absorb(sub);
            }
            Err(e) => report.push(ReportRow::failed(id, title, &e)),
        }
    }
    let space = ModelSpace::hyperbolic(3, 1.0)?;
    let comparison = laplace_comparison_check(&space, &log_grid(1e-3, 1e3, 64))?;
    let worst = comparison.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    report.push(ReportRow::new(
        "T2.1",
        format!("{space}, Lap rho - (n-1)kappa on [1e-3, 1e3]"),
        worst,
        0.0,
        worst,
        comparison.pass,
    ));
    Ok(report)
}
