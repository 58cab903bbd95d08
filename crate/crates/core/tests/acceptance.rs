//! Acceptance suite. Prints one line per criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvlag::fasttrack::{self, ManifoldModel, Radii};
use uvlag::suite::{self, RunConfig};
use uvlag::{catalog, oracle, ulag, uvframe, Problem, UVFrame};

type Outcome = Result<String, String>;

fn setup(p: &Problem) -> (UVFrame, f64) {
    let frame = uvframe::build_frame(p, None).expect("frame");
    let eps = frame.default_eps().expect("eps").min(0.5 * p.known_eps_bar);
    (frame, eps)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("{what} took {:.2} s (limit {limit_s} s)", elapsed.as_secs_f64()))
}

fn base_point_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for p in catalog::all() {
        let start = Instant::now();
        let (frame, eps) = setup(&p);
        let ri = frame.eps_ri(eps).map_err(|e| e.to_string())?;
        let gbars = frame.sample_gbars(eps, 4, 0).map_err(|e| e.to_string())?;
        for g in &gbars {
            ensure(ri.contains(g, 1e-12), || format!("{}: sampled gbar outside D_eps f", p.name))?;
            let e = ulag::inner_minimize(&p, &frame, &DVector::zeros(frame.dim_u()), g, eps).map_err(|e| e.to_string())?;
            let gap = (e.value - p.base_value()).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-9, || format!("{}: |L(0) - f(xbar)| = {gap:e}", p.name))?;
            ensure(e.minimizers.len() == 1, || format!("{}: W(0) has {} clusters", p.name, e.minimizers.len()))?;
            let d = e.minimizers[0].diameter;
            ensure(d <= 1e-6, || format!("{}: W(0) diameter {d:e}", p.name))?;
        }
        let el = start.elapsed();
        within(el, 1.0, &p.name)?;
        slowest = slowest.max(el);
    }
    Ok(format!("max |L(0) - f(xbar)| = {worst:.1e}, slowest problem {:.0} ms", slowest.as_secs_f64() * 1e3))
}

fn strict_differentiability() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in catalog::all() {
        let (frame, eps) = setup(&p);
        for g in frame.sample_gbars(eps, 4, 1).map_err(|e| e.to_string())? {
            let grad = ulag::grad_l_at_zero(&p, &frame, &g, eps).map_err(|e| e.to_string())?;
            let err = (grad - frame.u_coords(&g)).norm();
            let bound = 1e-5 * (1.0 + g.norm());
            worst = worst.max(err / bound);
            ensure(err <= bound, || format!("{}: ||FD grad - g_u|| = {err:e} > {bound:e}", p.name))?;
        }
    }
    within(start.elapsed(), 5.0, "gradient checks")?;
    Ok(format!("worst error / bound = {worst:.1e}, {:.0} ms", start.elapsed().as_secs_f64() * 1e3))
}

fn quadratic_lower_bound() -> Outcome {
    let mut lowest = f64::INFINITY;
    for p in catalog::all() {
        let (frame, eps) = setup(&p);
        let gbar = frame.default_gbar(eps).map_err(|e| e.to_string())?;
        let rho = if p.name == "P2" { 1.0 } else { p.bound_rho() };
        let cert = ulag::quadratic_lower_bound_check(&p, &frame, &gbar, eps, rho, 1000, 0).map_err(|e| e.to_string())?;
        let r = cert.param("radius").unwrap_or(0.0);
        let expected_r = (p.known_eps_bar.powi(2) - eps * eps).sqrt();
        ensure((r - expected_r).abs() <= 1e-12, || format!("{}: sampling radius {r} != {expected_r}", p.name))?;
        let slack = cert.param("min_slack").ok_or("min_slack missing")?;
        lowest = lowest.min(slack);
        ensure(slack >= -1e-8, || format!("{}: min slack {slack:e}", p.name))?;
        if p.name == "P2" {
            ensure(slack.abs() <= 1e-8, || format!("P2 equality case: min slack {slack:e}"))?;
        }
    }
    Ok(format!("min slack over catalog = {lowest:.1e}"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let problems = catalog::all();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let p = &problems[i % problems.len()];
        let frame = uvframe::build_frame(p, None).map_err(|e| e.to_string())?;
        let max_eps = frame.max_feasible_eps().map_err(|e| e.to_string())?.min(0.9 * p.known_eps_bar);
        let eps = max_eps * rng.random_range(0.2..0.95);
        let ri = frame.eps_ri(eps).map_err(|e| e.to_string())?;
        let gens = ri.generators();
        let mut w: Vec<f64> = (0..gens.len()).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let g = gens.iter().zip(&w).fold(DVector::zeros(p.dim), |a, (g, wi)| a + g * *wi);
        let u = DVector::from_fn(frame.dim_u(), |_, _| rng.random_range(-0.3..0.3));
        let solved = ulag::inner_minimize(p, &frame, &u, &g, eps).map_err(|e| e.to_string())?;
        let dense = oracle::dense_grid_minimize(p, &frame, &u, &g, eps, oracle::ORACLE_GRID_N).map_err(|e| e.to_string())?;
        let diff = (solved.value - dense.value).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-6, || format!("{} u={:?} eps={eps}: solver {} vs oracle {}", p.name, u.as_slice(), solved.value, dense.value))?;
    }
    within(start.elapsed(), 30.0, "oracle comparison")?;
    Ok(format!("max value gap {worst:.1e} over 20 instances, {:.1} s", start.elapsed().as_secs_f64()))
}

fn uv_geometry() -> Outcome {
    let mut worst_angle: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    for p in catalog::all() {
        let frame = uvframe::build_frame(&p, None).map_err(|e| e.to_string())?;
        let gens = frame.subdiff.generators();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let w: Vec<f64> = (0..gens.len()).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let g = gens.iter().zip(&w).fold(DVector::zeros(p.dim), |a, (g, wi)| a + g * (*wi / s));
            let other = uvframe::build_frame(&p, Some(&g)).map_err(|e| e.to_string())?;
            let a = other.v.max_principal_angle(&frame.v);
            worst_angle = worst_angle.max(a);
            ensure(a <= 1e-8, || format!("{}: V moved by {a:e} with gtilde {:?}", p.name, g.as_slice()))?;
        }
        let up = uvframe::u_prime_crosscheck(&p).map_err(|e| format!("{}: {e}", p.name))?;
        let a = up.max_principal_angle(&frame.u);
        worst_angle = worst_angle.max(a);
        ensure(a <= 1e-8, || format!("{}: U vs U' angle {a:e}", p.name))?;
        let spread = uvframe::gu_constancy(&p, &frame);
        worst_spread = worst_spread.max(spread);
        ensure(spread <= 1e-10, || format!("{}: g_u spread {spread:e}", p.name))?;
    }
    Ok(format!("max principal angle {worst_angle:.1e}, max g_u spread {worst_spread:.1e}"))
}

fn prox_regularity_bracketing() -> Outcome {
    let start = Instant::now();
    let p = catalog::problem("P2").map_err(|e| e.to_string())?;
    let (frame, eps) = setup(&p);
    let gbar = frame.default_gbar(eps).map_err(|e| e.to_string())?;
    let pass = uvlag::certify::certify_function_prox_regularity(&p, &gbar, p.known_eps_bar, 1.0, 10_000, 0).map_err(|e| e.to_string())?;
    ensure(pass.samples_checked >= 10_000, || format!("only {} samples checked", pass.samples_checked))?;
    ensure(pass.passed() && pass.max_violation <= 1e-9, || format!("rho = 1 violation {:e}", pass.max_violation))?;
    let fail = uvlag::certify::certify_function_prox_regularity(&p, &gbar, p.known_eps_bar, 0.5, 10_000, 0).map_err(|e| e.to_string())?;
    ensure(!fail.passed(), || "rho = 0.5 certificate passed".into())?;
    let w = fail.witness.as_ref().ok_or("rho = 0.5 failure has no witness")?;
    within(start.elapsed(), 10.0, "P2 certificates")?;
    Ok(format!(
        "rho=1 max violation {:.1e}; rho=0.5 fails, witness x'={:?}; {:.0} ms",
        pass.max_violation,
        w.get("x_prime").cloned().unwrap_or_default(),
        start.elapsed().as_secs_f64() * 1e3
    ))
}

fn tilt_stability() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in catalog::all() {
        let (frame, eps) = setup(&p);
        let gbar = frame.default_gbar(eps).map_err(|e| e.to_string())?;
        let ri = frame.eps_ri(eps).map_err(|e| e.to_string())?;
        let gens = ri.generators();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let w: Vec<f64> = (0..gens.len()).map(|_| rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let g = gens.iter().zip(&w).fold(DVector::zeros(p.dim), |a, (g, wi)| a + g * (*wi / s));
            let tilt = frame.v_coords(&(g - &gbar));
            let t = ulag::tilt_map(&p, &frame, &gbar, eps, &tilt).map_err(|e| format!("{}: {e}", p.name))?;
            ensure(t.is_single_cluster(), || format!("{}: M(s) split at s={:?}", p.name, tilt.as_slice()))?;
            let bad = t.diameter().max(t.minimizers[0].representative.norm());
            worst = worst.max(bad);
            ensure(bad <= 1e-6, || format!("{}: M(s) at s={:?} misses 0 by {bad:e}", p.name, tilt.as_slice()))?;
        }
    }
    Ok(format!("120 tilts, worst diameter/offset {worst:.1e}"))
}

fn fast_track_parabola() -> Outcome {
    let p = catalog::problem("P6").map_err(|e| e.to_string())?;
    let (frame, eps) = setup(&p);
    let gbars = frame.sample_gbars(eps, 3, 0).map_err(|e| e.to_string())?;
    let radii = Radii::default();
    let trace = fasttrack::trace_fast_track(&p, &frame, eps, &radii.grid(1), &gbars).map_err(|e| e.to_string())?;
    let dev = trace.u_grid.iter().zip(&trace.v_of_u).map(|(u, v)| (v[0] - u[0] * u[0]).abs()).fold(0.0, f64::max);
    ensure(dev <= 1e-6, || format!("max |v(u) - u^2| = {dev:e}"))?;
    let sel = fasttrack::check_smooth_selection(&trace).map_err(|e| e.to_string())?;
    ensure(sel.jacobian_norm <= 1e-4, || format!("||grad v(0)|| = {:e}", sel.jacobian_norm))?;
    let ratio = sel.ratios.iter().find(|(r, _)| *r == 1e-3).map(|(_, q)| *q).ok_or("no ratio at 1e-3")?;
    ensure(ratio <= 1e-2, || format!("||v(u)||/||u|| = {ratio:e} at ||u|| = 1e-3"))?;
    let model = ManifoldModel::traced("parabola", &p, &frame, eps, &gbars[0], radii.grid_radius).map_err(|e| e.to_string())?;
    let angle = fasttrack::tangent_space(&model).max_principal_angle(&frame.u);
    ensure(angle <= 1e-4, || format!("tangent angle {angle:e}"))?;
    Ok(format!("deviation {dev:.1e}, ||grad v(0)|| {:.1e}, ratio {ratio:.1e}, tangent angle {angle:.1e}", sel.jacobian_norm))
}

fn partial_smoothness() -> Outcome {
    let radii = Radii::default();
    for (name, label) in [("P1", "x1-axis"), ("P6", "parabola")] {
        let p = catalog::problem(name).map_err(|e| e.to_string())?;
        let (frame, eps) = setup(&p);
        let g = frame.default_gbar(eps).map_err(|e| e.to_string())?;
        let model = ManifoldModel::traced(label, &p, &frame, eps, &g, radii.grid_radius).map_err(|e| e.to_string())?;
        let v = fasttrack::partial_smoothness_battery(&p, &model, &radii).map_err(|e| e.to_string())?;
        ensure(v.passed(), || format!("({name}, {label}) fails parts {:?}", v.failing_parts()))?;
        if name == "P6" {
            let isc = fasttrack::inner_semicontinuity_check(&p, &model, &fasttrack::default_isc_targets(&model).map_err(|e| e.to_string())?, &radii.u0(1), radii.k_max)
                .map_err(|e| e.to_string())?;
            ensure(isc.passed(), || format!("parabola inner semicontinuity: {}", isc.note))?;
            ensure(isc.param("final_distance").unwrap_or(f64::INFINITY) <= 1e-4, || "final distance above 1e-4".into())?;
        }
    }
    let p = catalog::problem("P6").map_err(|e| e.to_string())?;
    let (frame, eps) = setup(&p);
    let wrong = ManifoldModel::explicit("x1-axis", &p, &frame, eps, |_| DVector::zeros(1), radii.grid_radius).map_err(|e| e.to_string())?;
    let v = fasttrack::partial_smoothness_battery(&p, &wrong, &radii).map_err(|e| e.to_string())?;
    ensure(v.failing_parts() == vec!["iv"], || format!("(P6, x1-axis) fails parts {:?}", v.failing_parts()))?;
    let iv = v.parts.iter().find(|r| r.part == "iv").ok_or("part iv missing")?;
    let limit = iv.witness.as_ref().and_then(|w| w.get("limit")).ok_or("part iv has no limit witness")?;
    ensure(limit.len() == 2 && limit[0].abs() <= 1e-4 && (limit[1] + 1.0).abs() <= 1e-4, || format!("limit witness {limit:?}"))?;
    Ok(format!("genuine manifolds pass; wrong manifold fails only part iv with limit ({:.1e}, {:.4})", limit[0], limit[1]))
}

fn determinism() -> Outcome {
    let cfg = RunConfig::default();
    let a = suite::run(&cfg).map_err(|e| e.to_string())?;
    let b = suite::run(&cfg).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.without_wall_times().to_json(), b.without_wall_times().to_json());
    ensure(ja == jb, || "reports differ beyond wall times".into())?;
    ensure(a.as_expected(), || format!("suite has {} unexpected verdicts", a.summary.fail))?;
    Ok(format!("{} records, {} bytes, identical", a.records.len(), ja.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("base-point identities", base_point_identities),
        ("strict differentiability at 0", strict_differentiability),
        ("quadratic lower bound", quadratic_lower_bound),
        ("oracle equivalence", oracle_equivalence),
        ("UV geometry", uv_geometry),
        ("prox-regularity bracketing", prox_regularity_bracketing),
        ("tilt stability", tilt_stability),
        ("fast track on the parabolic valley", fast_track_parabola),
        ("partial-smoothness battery", partial_smoothness),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("AC{:<2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("AC{:<2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
