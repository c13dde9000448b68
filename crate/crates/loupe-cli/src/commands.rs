//! Command implementations: each turns a configuration into an [`Outcome`].

use std::f64::consts::LN_2;

use loupe_core::bubble::{bubble_mass_blocked, rho};
use loupe_core::kernels::{exc_annulus, harm_annulus, poisson_disk, ExcursionStart, Side};
use loupe_core::lambda_star::{lambda_star_centered, Center, ExtrapolationResult, Schedule};
use loupe_core::loops::{concentric_loop_mass, det_loop_mass2, loop_mass, loop_mass_circles, Engine, LoopMassQuery, Root};
use loupe_core::mc::{capacity_estimate, conformal_radius, excursion_estimate, hitting_prob, hull_anchor};
use loupe_core::quad::periodic_trapezoid;
use loupe_core::sle::{self, density_limit_check, exponents, hull_annulus_modulus, whole_plane_sample, SampleOptions, DEFAULT_DT, DEFAULT_T0};
use loupe_core::{c64, Circle, ComplexPoint, Estimate, MobiusMap, C64};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{Outcome, PlotSpec, Table};
use crate::CliError;

fn est(e: &Estimate) -> Value {
    serde_json::to_value(e).expect("estimates serialize")
}

fn plain(summary: String, payload: Value) -> Outcome {
    Outcome { summary, payload, table: None, plot: None }
}

fn fmt(e: &Estimate) -> String {
    format!("{:.6} ± {:.2e}", e.value, e.stderr)
}

/// Runs `cfg.command`.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "harmonic" => harmonic(cfg),
        "excursion" => excursion(cfg),
        "bubble" => bubble(cfg),
        "loop-mass" => loop_mass_cmd(cfg),
        "lambda-star" => lambda_star_cmd(cfg),
        "capacity" => capacity(cfg),
        "conformal-radius" => conformal(cfg),
        "sle-sample" => sle_sample(cfg),
        "sle-modulus" => sle_modulus(cfg),
        "sle-density" => sle_density(cfg),
        "verify" => verify(cfg),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    }
}

fn harmonic(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let (d, z, v) = (cfg.domain("domain")?, cfg.finite_point("z")?, cfg.set("target")?);
    let e = hitting_prob(&d, z, &v, cfg.u64_or("n", 100_000)?, seed)?;
    Ok(plain(format!("harmonic measure {}", fmt(&e)), json!({ "estimate": est(&e) })))
}

fn excursion(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let (d, z, v) = (cfg.domain("domain")?, cfg.finite_point("z")?, cfg.set("target")?);
    let normal = cfg.finite_point("normal")?;
    let ladder = cfg.list_or("ladder", &[0.04, 0.02, 0.01])?;
    let r = excursion_estimate(&d, z, normal / normal.norm(), &v, &ladder, cfg.u64_or("n", 100_000)?, seed)?;
    let table = Table { columns: vec!["eps".into(), "value".into(), "stderr".into()], rows: r.eps.iter().zip(&r.levels).map(|(e, l)| vec![*e, l.value, l.stderr]).collect() };
    Ok(Outcome {
        summary: format!("excursion measure {}", fmt(&r.extrapolated)),
        payload: json!({ "estimate": est(&r.extrapolated), "levels": r.levels.iter().map(est).collect::<Vec<_>>(), "eps": r.eps }),
        table: Some(table),
        plot: Some(PlotSpec { title: "excursion ladder".into(), x: "eps".into(), y: vec!["value".into()], equal_axes: false }),
    })
}

fn bubble(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let big_r = cfg.f64("big-r")?;
    if cfg.get("domain").is_none() {
        let m = rho(big_r)?;
        return Ok(plain(format!("rho({big_r}) = {:.10} (leading {:.10})", m.value, m.leading), json!({ "rho": m })));
    }
    let (d, w) = (cfg.domain("domain")?, cfg.finite_point("w")?);
    let m = bubble_mass_blocked(w, &d, big_r, cfg.u64_or("n", 20_000)?, seed)?;
    Ok(plain(format!("bubble mass inside {} escaping {}", fmt(&m.inside), fmt(&m.escaping)), json!({ "blocked": m })))
}

fn engine(cfg: &RunConfig) -> Result<Engine, CliError> {
    match cfg.get("engine").unwrap_or("det") {
        "det" | "determinant" => Ok(Engine::Determinant),
        "bubble" => {
            let root = match cfg.get("root") {
                None => Root::Closest(c64(0.0, 0.0)),
                Some(s) => {
                    let (kind, p) = s.split_once(':').ok_or_else(|| CliError::Config("`root` is `closest:x,y` or `furthest:x,y`".into()))?;
                    let p = loupe_core::geometry::parse_point(p).map_err(|e| CliError::Config(e.to_string()))?.finite().ok_or_else(|| CliError::Config("root center must be finite".into()))?;
                    match kind {
                        "closest" => Root::Closest(p),
                        "furthest" => Root::Furthest(p),
                        _ => return Err(CliError::Config(format!("unknown root kind `{kind}`"))),
                    }
                }
            };
            Ok(Engine::Bubble { root, radial_nodes: cfg.u64_or("radial-nodes", 16)? as usize, samples: cfg.u64_or("samples", 4_000)? })
        }
        other => Err(CliError::Config(format!("unknown engine `{other}` (det or bubble)"))),
    }
}

fn loop_mass_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    if cfg.get("sets").is_none() {
        let (s, big_r) = (cfg.f64("s")?, cfg.f64("big-r")?);
        let m = loop_mass_circles(s, big_r)?;
        let exact = concentric_loop_mass(s, 1.0, big_r)?;
        return Ok(plain(
            format!("Λ(C_1, C_{big_r}; O_{s}) = {:.10} (log 2 ± {:.2e})", m.estimate.value, m.band),
            json!({ "estimate": est(&m.estimate), "prediction": m.prediction, "band": m.band, "series": exact }),
        ));
    }
    let q = LoopMassQuery { sets: cfg.sets("sets")?, domain: cfg.domain("domain")?, engine: engine(cfg)? };
    let e = loop_mass(&q, seed)?;
    Ok(plain(format!("loop mass {}", fmt(&e)), json!({ "estimate": est(&e) })))
}

fn schedule(cfg: &RunConfig) -> Result<Schedule, CliError> {
    match cfg.get("schedule").unwrap_or("deep") {
        "deep" => Ok(Schedule::deep()),
        "default" => Ok(Schedule::default()),
        other => Err(CliError::Config(format!("unknown schedule `{other}` (deep or default)"))),
    }
}

fn extrapolation_outcome(label: String, r: &ExtrapolationResult) -> Outcome {
    let table = Table {
        columns: vec!["log_inv_r".into(), "mass".into(), "stderr".into(), "renormalized".into()],
        rows: r.table.iter().map(|row| vec![row.log_inv_r, row.mass.value, row.mass.stderr, row.renormalized]).collect(),
    };
    Outcome {
        summary: format!("{label} = {:.6} ± {:.2e} (tail slope {:.2})", r.value, r.error, r.residual_slope),
        payload: serde_json::to_value(r).expect("results serialize"),
        table: Some(table),
        plot: Some(PlotSpec { title: "renormalized loop mass".into(), x: "log_inv_r".into(), y: vec!["renormalized".into()], equal_axes: false }),
    }
}

fn lambda_star_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let (v1, v2) = (cfg.set("v1")?, cfg.set("v2")?);
    let center = Center::from(cfg.point_or("center", ComplexPoint::new(0.0, 0.0))?);
    let r = lambda_star_centered(&v1, &v2, center, &schedule(cfg)?, engine(cfg)?, seed)?;
    Ok(extrapolation_outcome("Λ*".into(), &r))
}

fn capacity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let k = cfg.set("set")?;
    let rad = k.radius_about(hull_anchor(&k));
    let e = capacity_estimate(&k, cfg.u64_or("n", 20_000)?, seed, cfg.f64_or("launch", 2.0 * rad)?)?;
    Ok(plain(format!("log capacity {}", fmt(&e)), json!({ "estimate": est(&e) })))
}

fn conformal(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let e = conformal_radius(&cfg.domain("domain")?, cfg.u64_or("n", 20_000)?, seed)?;
    Ok(plain(format!("psi'(0) {}", fmt(&e)), json!({ "psi_prime": est(&e), "conformal_radius": 1.0 / e.value })))
}

fn sample_options(cfg: &RunConfig, stride: u64) -> Result<SampleOptions, CliError> {
    Ok(SampleOptions { dt: cfg.f64_or("dt", DEFAULT_DT)?, t0: cfg.f64_or("t0", DEFAULT_T0)?, trace_stride: cfg.u64_or("stride", stride)? as usize })
}

fn sle_sample(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let p = exponents(cfg.f64("kappa")?)?;
    let opts = sample_options(cfg, 10)?;
    if opts.trace_stride == 0 {
        return Err(CliError::Config("`stride` must be positive to record a trace".into()));
    }
    let h = whole_plane_sample(&p, cfg.f64("t")?, &opts, seed)?;
    let trace = h.trace.as_ref().expect("trace requested");
    let caps = trace.cap_times().expect("trace carries capacities");
    let rows: Vec<Vec<f64>> = trace.vertices().iter().zip(caps).map(|(z, c)| vec![c.exp(), z.re, z.im]).collect();
    Ok(Outcome {
        summary: format!("trace of {} points, t = {:.6}, radius/t = {:.4}", rows.len(), h.t, h.radius().unwrap_or(f64::NAN) / h.t),
        payload: json!({ "t": h.t, "tip_image": [h.tip_image.re, h.tip_image.im], "radius": h.radius(), "far_field": h.far, "self_intersections": h.self_intersections }),
        table: Some(Table { columns: vec!["t".into(), "re".into(), "im".into()], rows }),
        plot: Some(PlotSpec { title: format!("whole-plane SLE, kappa = {}", p.kappa), x: "re".into(), y: vec!["im".into()], equal_axes: true }),
    })
}

fn sle_modulus(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let p = exponents(cfg.f64("kappa")?)?;
    let d = cfg.domain("domain")?;
    let t = cfg.f64("t")?;
    let mc = cfg.u64_or("n", 0)?;
    let h = whole_plane_sample(&p, t, &sample_options(cfg, if mc > 0 { 2 } else { 0 })?, seed)?;
    let s = hull_annulus_modulus(&h.far, &d)?;
    let mut payload = json!({ "t": h.t, "s": s, "s_over_t": s / h.t });
    let mut summary = format!("s = {s:.8}, s/t = {:.6}", s / h.t);
    if mc > 0 {
        let e = sle::annulus_modulus(&d, &h.hull_set()?, mc, seed.wrapping_add(1))?;
        summary.push_str(&format!(", circle-mean {}", fmt(&e)));
        payload["circle_mean"] = est(&e);
    }
    Ok(plain(summary, payload))
}

fn sle_density(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed()?;
    let p = exponents(cfg.f64("kappa")?)?;
    let (d, w) = (cfg.domain("domain")?, cfg.finite_point("w")?);
    let t = cfg.f64("t")?;
    let ladder = cfg.list_or("ladder", &[t / 2.0, t])?;
    let (rows, diff) = density_limit_check(&d, w, &p, &ladder, &sample_options(cfg, 0)?, cfg.u64_or("n", 2000)?, seed)?;
    let top = rows.last().expect("non-empty ladder");
    let table = Table {
        columns: vec!["t".into(), "mean".into(), "stderr".into(), "target".into(), "deviation".into(), "abs_deviation".into()],
        rows: rows.iter().map(|r| vec![r.t, r.mean.value, r.mean.stderr, r.target, r.deviation, r.abs_deviation.value]).collect(),
    };
    Ok(Outcome {
        summary: format!("mean density at t = {:.4e}: {} (target {:.6})", top.t, fmt(&top.mean), top.target),
        payload: json!({ "rows": rows, "paired_difference": diff.map(|e| est(&e)) }),
        table: Some(table),
        plot: Some(PlotSpec { title: "mean density against t".into(), x: "t".into(), y: vec!["mean".into(), "target".into()], equal_axes: false }),
    })
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, got: f64, want: f64, tol: f64) -> Check {
    Check { name, pass: (got - want).abs() <= tol, detail: format!("{got:.15} vs {want:.15} (tol {tol:e})") }
}

fn kernel_suite() -> Result<Vec<Check>, CliError> {
    let z = c64(0.3, -0.4);
    let poisson = periodic_trapezoid(|th| poisson_disk(z, C64::from_polar(1.0, th)).map(|k| k.value).unwrap_or(f64::NAN), 512);
    let h = harm_annulus(c64(2.0, 0.0), 1.0, 10.0, Side::Outer)?.value;
    let hi = harm_annulus(c64(0.0, 2.0), 1.0, 10.0, Side::Inner)?.value;
    Ok(vec![
        check("harm_annulus(2, A_{1,10}) = log 2/log 10", h, LN_2 / 10f64.ln(), 1e-12),
        check("harmonic measures of both circles sum to 1", h + hi, 1.0, 1e-14),
        check("exc_annulus inner point = 1/(r log(R/r))", exc_annulus(ExcursionStart::InnerPoint, 1.0, 10.0)?.value, 1.0 / 10f64.ln(), 1e-12),
        check("exc_annulus outer point = 1/(R log(R/r))", exc_annulus(ExcursionStart::OuterPoint, 1.0, 10.0)?.value, 1.0 / (10.0 * 10f64.ln()), 1e-12),
        check("Poisson kernel integrates to 1", poisson, 1.0, 1e-10),
        check("rho(R) · 2 log R → 1 at R = 1e6", rho(1e6)?.value * 2.0 * 1e6f64.ln(), 1.0, 1.6 / 1e6),
    ])
}

fn loops_suite() -> Result<Vec<Check>, CliError> {
    let c = |x: f64, y: f64, r: f64| Circle::new(c64(x, y), r);
    let concentric = det_loop_mass2(&[c(0.0, 0.0, 1.0)?], &[c(0.0, 0.0, 5.0)?], &[c(0.0, 0.0, 0.2)?])?;
    let f = MobiusMap::new(c64(1.0, 0.2), c64(0.5, 0.0), c64(0.05, 0.0), c64(1.0, 0.0))?;
    let (v1, v2, dom) = (c(0.0, 0.0, 1.0)?, c(0.3, 0.0, 4.0)?, c(0.1, 0.1, 0.3)?);
    let before = det_loop_mass2(&[v1], &[v2], &[dom])?;
    let after = det_loop_mass2(&[f.image_circle(&v1)?], &[f.image_circle(&v2)?], &[f.image_circle(&dom)?])?;
    Ok(vec![
        check("determinant route matches the concentric series", concentric, concentric_loop_mass(0.2, 1.0, 5.0)?, 1e-10),
        check("loop mass is Möbius invariant", after, before, 1e-9),
    ])
}

fn sle_suite() -> Result<Vec<Check>, CliError> {
    let p = exponents(2.0)?;
    let d = loupe_core::Domain::disk(0.0, 0.0, 2.0)?;
    Ok(vec![
        check("b at kappa = 2", p.b, 1.0, 0.0),
        check("c at kappa = 8/3", exponents(8.0 / 3.0)?.c, 0.0, 1e-12),
        check("density target for disk(0,0,2), w = 2", sle::density_target(&d, c64(2.0, 0.0), &p)?, 0.5, 1e-15),
        check("straight slit has modulus t/2 in disk(0,0,2) to O(t)", {
            let path = sle::DrivingPath::constant(0.0, DEFAULT_T0, 0.01, 1e-3)?;
            let h = sle::hulls_from_path(&path, 0.0, &[path.capacity(path.steps())], 0)?.remove(0);
            hull_annulus_modulus(&h.far, &d)? / h.t
        }, 0.5, 0.01),
    ])
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suite = cfg.get("suite").ok_or_else(|| CliError::Config("missing suite name".into()))?;
    let checks = match suite {
        "kernels" => kernel_suite()?,
        "loops" => loops_suite()?,
        "sle" => sle_suite()?,
        other => return Err(CliError::Config(format!("unknown suite `{other}` (kernels, loops or sle)"))),
    };
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let payload = json!({ "suite": suite, "checks": checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail })).collect::<Vec<_>>() });
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} of {} checks failed in suite `{suite}`", checks.len())));
    }
    Ok(plain(format!("suite {suite}: {} checks passed", checks.len()), payload))
}
