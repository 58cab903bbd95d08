//! Sampling certificates for prox-regularity of functions and sets, localized
//! monotonicity, Lipschitz minimizer selections and the fast-track assumptions.

mod certificate;
pub mod sets;

use nalgebra::{DMatrix, DVector};

pub use certificate::{witness, CertKind, Certificate, Tally, Verdict, Witness, DEFAULT_TOL};
pub use sets::SetDescr;

use crate::error::{Error, Result};
use crate::fasttrack::{ManifoldModel, Radii};
use crate::funcmodel::Problem;
use crate::sampling::{simplex_weights, unit_directions, BallSampler, Halton};
use crate::ulag::{fd_gradient, inner_minimize, lower_bound_radius, FD_STEP};
use crate::uvframe::UVFrame;

/// Strict windows `||.|| < r` are tested as `||.|| < r - WINDOW_SLACK`.
pub const WINDOW_SLACK: f64 = 1e-12;

/// Tolerance for the monotonicity certificate.
pub const MONOTONE_TOL: f64 = 1e-8;

/// Hausdorff tolerance for regular-versus-limiting comparisons.
pub const REGULARITY_TOL: f64 = 1e-8;

fn split_budget(n_samples: usize) -> (usize, usize) {
    let pairs = ((n_samples as f64).sqrt().ceil() as usize).max(1);
    (pairs, (n_samples / pairs).max(1))
}

/// Moves `x` onto the kink stratum within reach, if any.
fn snap_point(problem: &Problem, x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    problem
        .snap_to_stratum(x, &DMatrix::identity(n, n), &DVector::zeros(n), 0.5)
        .map(|z| x + z)
        .unwrap_or_else(|| x.clone())
}

/// `f(x') >= f(x) + <g, x' - x> - rho/2 ||x' - x||^2` over sampled pairs
/// `(x, g in df(x))` in the f-attentive window around `(xbar, gbar)` and
/// sampled targets `x'` in `B(xbar, eps_bar)`.
///
/// The first pair is `(xbar, gbar)` and the first targets are the axis points
/// `xbar +- eps_bar/2 e_i`; every other sampled point is moved onto a kink.
pub fn certify_function_prox_regularity(
    problem: &Problem,
    gbar: &DVector<f64>,
    eps_bar: f64,
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let n = problem.dim;
    let x0 = &problem.base_point;
    let f0 = problem.base_value();
    let win = eps_bar - WINDOW_SLACK;
    let (n_pairs, n_targets) = split_budget(n_samples);
    let mut tally = Tally::new(CertKind::ProxRegFunction, DEFAULT_TOL)
        .param("eps_bar", eps_bar)
        .param("rho", rho)
        .param("samples", n_samples as f64)
        .param("seed", seed as f64);

    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = vec![(x0.clone(), gbar.clone())];
    let base_sub = problem.limiting_subdifferential(x0)?;
    for g in base_sub.polytope.generators() {
        if (g - gbar).norm() < win {
            pairs.push((x0.clone(), g.clone()));
        }
    }
    let mut xs = BallSampler::new(x0.clone(), eps_bar, seed);
    let mut weights = Halton::new(8, seed.wrapping_add(1));
    let mut attempt = 0usize;
    while pairs.len() < n_pairs && attempt < 50 * n_pairs {
        attempt += 1;
        let mut x = xs.next_point();
        if attempt % 2 == 1 {
            x = snap_point(problem, &x);
        }
        let fx = problem.eval(&x);
        if (&x - x0).norm() >= win || !((fx - f0).abs() < win) {
            continue;
        }
        let sub = match problem.limiting_subdifferential(&x) {
            Ok(s) => s.polytope,
            Err(_) => {
                tally.skip();
                continue;
            }
        };
        let gens = sub.generators();
        let mut cands: Vec<DVector<f64>> = gens.to_vec();
        cands.push(sub.centroid());
        for _ in 0..2 {
            let w = simplex_weights(&weights.next_point(), gens.len());
            cands.push(gens.iter().zip(&w).fold(DVector::zeros(n), |acc, (g, wi)| acc + g * *wi));
        }
        for g in cands {
            if (&g - gbar).norm() < win && pairs.len() < n_pairs {
                pairs.push((x.clone(), g));
            }
        }
    }

    let mut targets: Vec<DVector<f64>> = Vec::with_capacity(n_targets);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut t = x0.clone();
            t[i] += sign * 0.5 * eps_bar;
            targets.push(t);
        }
    }
    let mut ts = BallSampler::new(x0.clone(), eps_bar, seed.wrapping_add(2));
    let mut k = 0usize;
    while targets.len() < n_targets.max(2 * n) {
        k += 1;
        let mut t = ts.next_point();
        if k % 2 == 0 {
            t = snap_point(problem, &t);
        }
        if (&t - x0).norm() <= eps_bar {
            targets.push(t);
        }
    }

    for (x, g) in &pairs {
        let fx = problem.eval(x);
        for xp in &targets {
            let d = xp - x;
            let lower = fx + g.dot(&d) - 0.5 * rho * d.norm_squared();
            let violation = lower - problem.eval(xp);
            tally.record(violation, || witness(&[("x", x), ("g", g), ("x_prime", xp)]));
        }
    }
    Ok(tally.finish())
}

/// `t`-interval with `||t d - wbar|| < eps`, for a unit `d`.
fn ray_window(d: &DVector<f64>, wbar: &DVector<f64>, eps: f64) -> Option<(f64, f64)> {
    let b = d.dot(wbar);
    let disc = b * b - wbar.norm_squared() + eps * eps;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let lo = (b - s).max(0.0);
    let hi = b + s;
    (hi > lo).then_some((lo, hi))
}

/// `<w, x' - x> <= rho/2 ||x' - x||^2` for sampled `x in C`, `w in N_C(x)` in
/// the windows `||x - xbar|| < eps`, `||w - wbar|| < eps`, and targets
/// `x' in C cap B(xbar, eps)`.
pub fn certify_set_prox_regularity(
    set: &SetDescr,
    xbar: &DVector<f64>,
    wbar: &DVector<f64>,
    eps: f64,
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Certificate {
    let win = eps - WINDOW_SLACK;
    let (n_pairs, n_targets) = split_budget(n_samples);
    let mut tally = Tally::new(CertKind::ProxRegSet, DEFAULT_TOL)
        .param("eps", eps)
        .param("rho", rho)
        .param("samples", n_samples as f64)
        .param("seed", seed as f64);

    let mut pairs: Vec<(DVector<f64>, DVector<f64>)> = vec![(xbar.clone(), wbar.clone())];
    let mut xs = BallSampler::new(xbar.clone(), eps, seed);
    let mut frac = Halton::new(8, seed.wrapping_add(1));
    let mut attempt = 0usize;
    while pairs.len() < n_pairs && attempt < 50 * n_pairs {
        attempt += 1;
        let x = set.to_boundary(&xs.next_point(), attempt);
        if !set.contains(&x, 1e-12) || (&x - xbar).norm() >= win {
            continue;
        }
        let rays = set.normal_rays(&x);
        if rays.is_empty() {
            continue;
        }
        for _ in 0..3 {
            let h = frac.next_point();
            let w = simplex_weights(&h[1..], rays.len());
            let d = rays.iter().zip(&w).fold(DVector::zeros(x.len()), |acc, (r, wi)| acc + r * *wi);
            if d.norm() < 1e-12 {
                continue;
            }
            let d = d.normalize();
            if let Some((lo, hi)) = ray_window(&d, wbar, win) {
                let t = lo + (hi - lo) * (0.005 + 0.99 * h[0]);
                if pairs.len() < n_pairs {
                    pairs.push((x.clone(), d * t));
                }
            }
        }
    }

    let mut targets: Vec<DVector<f64>> = Vec::with_capacity(n_targets);
    let mut ts = BallSampler::new(xbar.clone(), eps, seed.wrapping_add(2));
    let mut k = 0usize;
    while targets.len() < n_targets && k < 50 * n_targets {
        k += 1;
        let raw = ts.next_point();
        let t = if k % 2 == 0 { set.to_boundary(&raw, k / 2) } else { set.retract(&raw) };
        if set.contains(&t, 1e-12) && (&t - xbar).norm() <= eps {
            targets.push(t);
        }
    }

    for (x, w) in &pairs {
        for xp in &targets {
            let d = xp - x;
            let violation = w.dot(&d) - 0.5 * rho * d.norm_squared();
            tally.record(violation, || witness(&[("x", x), ("w", w), ("x_prime", xp)]));
        }
    }
    tally.finish()
}

/// Certifies the product `D x E` at `(xbar, wbar)` and, given that, the factor
/// `D` at the leading components with the same `(eps, rho)`.
#[allow(clippy::too_many_arguments)]
pub fn certify_product_set(
    d: &SetDescr,
    e: &SetDescr,
    xbar: &DVector<f64>,
    wbar: &DVector<f64>,
    eps: f64,
    rho: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Certificate> {
    let product = SetDescr::product(d.clone(), e.clone());
    let outer = certify_set_prox_regularity(&product, xbar, wbar, eps, rho, n_samples, seed);
    if !outer.passed() {
        return Err(Error::Precondition(format!(
            "product set is not certified with eps = {eps}, rho = {rho} (violation {:e})",
            outer.max_violation
        )));
    }
    let k = d.dim();
    let xd = xbar.rows(0, k).into_owned();
    let wd = wbar.rows(0, k).into_owned();
    let mut inner = certify_set_prox_regularity(d, &xd, &wd, eps, rho, n_samples, seed);
    inner.kind = CertKind::ProductSet;
    inner.params.insert("product_max_violation".into(), outer.max_violation);
    Ok(inner)
}

/// Re-certifies `C` at perturbed `(x~, v~)` with `x~ in B(xbar, beta) cap C`,
/// `v~ in N_C(x~) cap B(vbar, beta)`, radius `eps_bar - beta` and the same `rho`.
/// The first perturbed pair is `(xbar, vbar)` itself.
#[allow(clippy::too_many_arguments)]
pub fn certify_perturbation(
    set: &SetDescr,
    xbar: &DVector<f64>,
    vbar: &DVector<f64>,
    eps_bar: f64,
    rho: f64,
    beta: f64,
    n_points: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Certificate> {
    if !(beta > 0.0 && beta < eps_bar) {
        return Err(Error::Precondition(format!("beta = {beta} must lie in (0, {eps_bar})")));
    }
    let base = certify_set_prox_regularity(set, xbar, vbar, eps_bar, rho, n_samples, seed);
    if !base.passed() {
        return Err(Error::Precondition(format!(
            "base certificate fails (violation {:e})",
            base.max_violation
        )));
    }
    let radius = eps_bar - beta;
    let mut tally = Tally::new(CertKind::Perturbed, DEFAULT_TOL)
        .param("eps_bar", eps_bar)
        .param("beta", beta)
        .param("radius", radius)
        .param("rho", rho)
        .param("points", n_points as f64)
        .param("seed", seed as f64);

    let mut points: Vec<(DVector<f64>, DVector<f64>)> = vec![(xbar.clone(), vbar.clone())];
    let mut xs = BallSampler::new(xbar.clone(), beta, seed.wrapping_add(7));
    let mut frac = Halton::new(1, seed.wrapping_add(8));
    let mut attempt = 0usize;
    while points.len() < n_points && attempt < 100 * n_points {
        attempt += 1;
        let x = set.to_boundary(&xs.next_point(), attempt);
        if !set.contains(&x, 1e-12) || (&x - xbar).norm() >= beta - WINDOW_SLACK {
            continue;
        }
        let rays = set.normal_rays(&x);
        let Some(r) = rays.first() else { continue };
        if let Some((lo, hi)) = ray_window(r, vbar, beta - WINDOW_SLACK) {
            let t = lo + (hi - lo) * (0.005 + 0.99 * frac.next_point()[0]);
            points.push((x, r * t));
        }
    }
    for (i, (xt, vt)) in points.iter().enumerate() {
        let c = certify_set_prox_regularity(set, xt, vt, radius, rho, n_samples, seed.wrapping_add(i as u64));
        tally.record(c.max_violation, || {
            let mut w = witness(&[("x_tilde", xt), ("v_tilde", vt)]);
            if let Some(inner) = &c.witness {
                for (k, v) in inner {
                    w.insert(format!("inner_{k}"), v.clone());
                }
            }
            w
        });
    }
    Ok(tally.finish())
}

/// `||z - ybar|| <= alpha` for `y in B(ybar, beta)`, `z in B(y, alpha - beta)`.
/// The first sample is the tight colinear configuration.
pub fn ball_inclusion_check(
    ybar: &DVector<f64>,
    alpha: f64,
    beta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Certificate> {
    if !(beta > 0.0 && beta < alpha) {
        return Err(Error::Precondition(format!("need 0 < beta < alpha, got beta = {beta}, alpha = {alpha}")));
    }
    let n = ybar.len();
    let mut tally = Tally::new(CertKind::BallInclusion, DEFAULT_TOL)
        .param("alpha", alpha)
        .param("beta", beta)
        .param("samples", n_samples as f64)
        .param("seed", seed as f64);
    let mut check = |y: &DVector<f64>, z: &DVector<f64>| {
        let violation = (z - ybar).norm() - alpha;
        tally.record(violation, || witness(&[("y", y), ("z", z)]));
    };
    if n > 0 {
        let mut e = DVector::zeros(n);
        e[0] = 1.0;
        let y = ybar + &e * beta;
        let z = &y + &e * (alpha - beta);
        check(&y, &z);
    }
    let mut ys = BallSampler::new(DVector::zeros(n), beta, seed);
    let mut zs = BallSampler::new(DVector::zeros(n), alpha - beta, seed.wrapping_add(1));
    for _ in 0..n_samples.saturating_sub(1) {
        let y = ybar + ys.next_point();
        let z = &y + zs.next_point();
        check(&y, &z);
    }
    Ok(tally.finish())
}

/// A point of the `L_eps`-attentive window with its gradient.
struct WindowPoint {
    u: DVector<f64>,
    s: DVector<f64>,
}

fn attentive_points(
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    count: usize,
    seed: u64,
) -> Result<(Vec<WindowPoint>, usize)> {
    let m = frame.dim_u();
    let r = lower_bound_radius(problem.known_eps_bar, eps);
    let win = r - WINDOW_SLACK;
    let gu = frame.u_coords(gbar);
    let l0 = inner_minimize(problem, frame, &DVector::zeros(m), gbar, eps)?.value;
    let mut out = Vec::new();
    let mut skipped = 0;
    let mut sampler = BallSampler::new(DVector::zeros(m), r, seed);
    let mut first = true;
    let mut attempts = 0;
    while out.len() < count && attempts < 20 * count {
        attempts += 1;
        let u = if first { DVector::zeros(m) } else { sampler.next_point() };
        first = false;
        if u.norm() >= win {
            skipped += 1;
            continue;
        }
        let l = inner_minimize(problem, frame, &u, gbar, eps)?.value;
        let s = fd_gradient(problem, frame, &u, gbar, eps, FD_STEP)?;
        if (l - l0).abs() >= win || (&s - &gu).norm() >= win {
            skipped += 1;
            continue;
        }
        out.push(WindowPoint { u, s });
        if m == 0 {
            break;
        }
    }
    Ok((out, skipped))
}

/// `<s1 - s0, u1 - u0> + rho_hat ||u1 - u0||^2 >= -1e-8` over pairs of sampled
/// points of the `L_eps`-attentive window, `s` being finite-difference gradients.
#[allow(clippy::too_many_arguments)]
pub fn certify_localization_monotonicity(
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    rho_hat: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<Certificate> {
    // k points give k (k + 1) / 2 pairs, including the diagonal.
    let k = (((8 * n_pairs + 1) as f64).sqrt() as usize).div_ceil(2).max(2);
    let (pts, skipped) = attentive_points(problem, frame, gbar, eps, k, seed)?;
    let mut tally = Tally::new(CertKind::Monotonicity, MONOTONE_TOL)
        .param("eps", eps)
        .param("rho_hat", rho_hat)
        .param("pairs", n_pairs as f64)
        .param("seed", seed as f64);
    for _ in 0..skipped {
        tally.skip();
    }
    let mut done = 0;
    'outer: for i in 0..pts.len() {
        for j in i..pts.len() {
            if done >= n_pairs {
                break 'outer;
            }
            done += 1;
            let du = &pts[j].u - &pts[i].u;
            let ds = &pts[j].s - &pts[i].s;
            let value = ds.dot(&du) + rho_hat * du.norm_squared();
            tally.record(-value, || {
                witness(&[("u0", &pts[i].u), ("u1", &pts[j].u), ("s0", &pts[i].s), ("s1", &pts[j].s)])
            });
        }
    }
    Ok(tally.finish())
}

/// Empirical Lipschitz constant `c = max ||v1 - v2|| / ||u1 - u2||` of the
/// minimizer selection over the grid points that fall in
/// `Theta = {||u|| < r, |L_eps(u) - f(xbar)| < r}`. The estimate is stored in
/// the `c` parameter; the certificate fails only if `W` splits at a grid point.
pub fn estimate_w_lipschitz(
    problem: &Problem,
    frame: &UVFrame,
    gbar: &DVector<f64>,
    eps: f64,
    grid: &[DVector<f64>],
) -> Result<Certificate> {
    let r = lower_bound_radius(problem.known_eps_bar, eps);
    let f0 = problem.base_value();
    let mut tally = Tally::new(CertKind::WLipschitz, DEFAULT_TOL).param("eps", eps).param("radius", r);
    let mut pts: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    for u in grid {
        if u.norm() >= r - WINDOW_SLACK {
            tally.skip();
            continue;
        }
        let e = inner_minimize(problem, frame, u, gbar, eps)?;
        if (e.value - f0).abs() >= r - WINDOW_SLACK {
            tally.skip();
            continue;
        }
        let split = e.minimizers.len() as f64 - 1.0;
        tally.record(split, || witness(&[("u", u)]));
        pts.push((u.clone(), e.minimizers[0].representative.clone()));
    }
    let mut c: f64 = 0.0;
    let mut diameter: f64 = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let du = (&pts[i].0 - &pts[j].0).norm();
            diameter = diameter.max(du);
            if du > 0.0 {
                c = c.max((&pts[i].1 - &pts[j].1).norm() / du);
            }
        }
    }
    tally.set_param("c", c);
    tally.set_param("grid_diameter", diameter);
    tally.set_param("grid_points", pts.len() as f64);
    Ok(tally.finish())
}

/// Hausdorff estimate between the regular and limiting subdifferentials at `x`.
pub fn regularity_gap(problem: &Problem, x: &DVector<f64>, seed: u64) -> Result<f64> {
    let n = x.len();
    let lim = problem.limiting_subdifferential(x)?.polytope;
    let reg = problem.regular_subdifferential(x)?;
    let mut dirs = unit_directions(n, 64, seed);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        dirs.push(-&e);
        dirs.push(e);
    }
    Ok(lim.hausdorff_estimate(&reg, &dirs))
}

fn regularity_certificate(
    kind: CertKind,
    problem: &Problem,
    points: &[(DVector<f64>, DVector<f64>)],
    seed: u64,
) -> Certificate {
    let mut tally = Tally::new(kind, REGULARITY_TOL).param("points", points.len() as f64);
    for (u, x) in points {
        match regularity_gap(problem, x, seed) {
            Ok(gap) => tally.record(gap, || witness(&[("u", u), ("x", x)])),
            Err(_) => tally.record(f64::INFINITY, || witness(&[("u", u), ("x", x)])),
        }
    }
    tally.finish()
}

/// The four fast-track assumptions along a manifold chart:
///
/// * chart regularity: regular equals limiting subdifferential at sampled chart points
/// * selection interior: every selected `v(u)` is strictly inside the V-ball, `||v|| < eps - 1e-9`
/// * boundary approach: each generator `g` of `df(xbar)` is approached in V-projection by
///   subgradients along `x^k = G(2^-k u0)`, with `dist_k <= 10 ||x^k - xbar|| + 1e-8`
/// * sequence regularity: regularity and a nonempty subdifferential at the sequence points
pub fn check_manifold_assumptions(model: &ManifoldModel, radii: &Radii) -> Result<Vec<Certificate>> {
    let problem = &model.problem;
    let frame = &model.frame;
    let grid = radii.grid(frame.dim_u());
    let mut chart: Vec<(DVector<f64>, DVector<f64>)> = Vec::with_capacity(grid.len());
    for u in &grid {
        chart.push((u.clone(), model.point(u)?));
    }
    let a4 = regularity_certificate(CertKind::ChartRegularity, problem, &chart, 11)
        .with_param("grid_radius", radii.grid_radius);

    let mut a5 = Tally::new(CertKind::SelectionInterior, 0.0).param("eps", model.eps);
    for u in &grid {
        let v = model.v_of(u)?;
        a5.record(v.norm() - (model.eps - 1e-9), || witness(&[("u", u), ("v", &v)]));
    }

    let seq = model.sequence(&radii.u0(frame.dim_u()), radii.k_max)?;
    let mut a6 = Tally::new(CertKind::BoundaryApproach, 0.0).param("k_max", radii.k_max as f64);
    for g in frame.subdiff.generators() {
        let target = frame.v_coords(g);
        for (k, (_, x)) in seq.iter().enumerate() {
            let sub = problem.limiting_subdifferential(x)?.polytope.coords_in(&frame.v);
            let (near, _) = sub.nearest_point(&target);
            let dist = (&near - &target).norm();
            let schedule = 10.0 * (x - &frame.origin).norm() + 1e-8;
            a6.record(dist - schedule, || {
                let mut w = witness(&[("g", g), ("x_k", x), ("g_k_v", &near)]);
                w.insert("k".into(), vec![(k + 1) as f64]);
                w
            });
        }
    }
    let a7 = regularity_certificate(CertKind::SequenceRegularity, problem, &seq, 13);
    Ok(vec![a4, a5.finish(), a6.finish(), a7])
}

impl Certificate {
    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}
