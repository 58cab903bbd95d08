//! Batch runner: selected checks over selected catalog problems, assembled
//! into one deterministic JSON report.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{self, Certificate, SetDescr, Verdict, Witness};
use crate::error::{Error, Result};
use crate::fasttrack::{self, ManifoldModel, Radii};
use crate::funcmodel::{catalog, Problem};
use crate::oracle;
use crate::sampling::{cube_grid, simplex_weights, unit_directions, BallSampler, Halton};
use crate::ulag::{self, BoundKind, SolverConfig};
use crate::uvframe::{self, UVFrame};

pub const SCHEMA: &str = "uvlag-report/1";

/// Check groups in execution order.
pub const CHECK_IDS: [&str; 11] = [
    "funcmodel",
    "uv-geometry",
    "ulag-core",
    "oracle",
    "proxreg",
    "tilt",
    "monotonicity",
    "fasttrack",
    "partial-smoothness",
    "manifold-assumptions",
    "sets",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problems: Vec<String>,
    /// Check groups; `"all"` selects every group.
    pub checks: Vec<String>,
    pub eps: Option<f64>,
    pub eps_bar: Option<f64>,
    pub rho: Option<f64>,
    pub grid_n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: u64,
    /// Report destination; `None` means standard output.
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problems: catalog::NAMES.iter().map(|s| s.to_string()).collect(),
            checks: vec!["all".into()],
            eps: None,
            eps_bar: None,
            rho: None,
            grid_n: None,
            samples: None,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for p in &self.problems {
            if !catalog::NAMES.contains(&p.as_str()) {
                return Err(Error::UnknownProblem(p.clone()));
            }
        }
        for c in &self.checks {
            if c != "all" && !CHECK_IDS.contains(&c.as_str()) {
                return Err(Error::Precondition(format!("unknown check `{c}`")));
            }
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::Precondition(format!("eps must be positive, got {e}")));
            }
        }
        if let Some(b) = self.eps_bar {
            if !(b > 0.0) {
                return Err(Error::Precondition(format!("eps-bar must be positive, got {b}")));
            }
        }
        if let (Some(e), Some(b)) = (self.eps, self.eps_bar) {
            if e >= b {
                return Err(Error::EpsilonNotBelowRadius { eps: e, eps_bar: b });
            }
        }
        if let Some(e) = self.eps {
            for p in &self.problems {
                let b = self.eps_bar.unwrap_or(catalog::problem(p)?.known_eps_bar);
                if e >= b {
                    return Err(Error::EpsilonNotBelowRadius { eps: e, eps_bar: b });
                }
            }
        }
        if let Some(r) = self.rho {
            if !(r >= 0.0) {
                return Err(Error::Precondition(format!("rho must be nonnegative, got {r}")));
            }
        }
        if matches!(self.grid_n, Some(n) if n < 3) {
            return Err(Error::Precondition("grid-n must be at least 3".into()));
        }
        if self.samples == Some(0) {
            return Err(Error::Precondition("samples must be positive".into()));
        }
        Ok(())
    }

    pub fn selects(&self, check: &str) -> bool {
        self.checks.iter().any(|c| c == "all" || c == check)
    }

    fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub id: String,
    pub problem: Option<String>,
    pub anchor: String,
    pub params: BTreeMap<String, Value>,
    pub expected: Verdict,
    pub verdict: Verdict,
    pub max_violation: f64,
    pub witness: Option<Witness>,
    pub note: String,
    pub wall_time_ms: f64,
}

impl Record {
    fn new(id: &str, problem: Option<&str>, anchor: &str) -> Self {
        Self {
            id: id.to_string(),
            problem: problem.map(str::to_string),
            anchor: anchor.to_string(),
            params: BTreeMap::new(),
            expected: Verdict::Pass,
            verdict: Verdict::Pass,
            max_violation: 0.0,
            witness: None,
            note: String::new(),
            wall_time_ms: 0.0,
        }
    }

    fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    fn expect(mut self, expected: Verdict) -> Self {
        self.expected = expected;
        self
    }

    fn from_cert(mut self, cert: &Certificate) -> Self {
        for (k, v) in &cert.params {
            self.params.insert(k.clone(), json!(v));
        }
        self.params.insert("kind".into(), json!(cert.kind));
        self.params.insert("tolerance".into(), json!(cert.tolerance));
        self.params.insert("samples_checked".into(), json!(cert.samples_checked));
        self.params.insert("samples_skipped".into(), json!(cert.samples_skipped));
        self.verdict = cert.verdict;
        self.max_violation = cert.max_violation;
        self.witness = cert.witness.clone();
        self.note = cert.note.clone();
        self
    }

    /// Pass iff `value <= tol`.
    fn measured(mut self, value: f64, tol: f64, note: &str) -> Self {
        self.max_violation = value;
        self.verdict = if value <= tol { Verdict::Pass } else { Verdict::Fail };
        self.params.insert("tolerance".into(), json!(tol));
        self.note = note.to_string();
        self
    }

    fn failed(mut self, err: &Error) -> Self {
        self.verdict = Verdict::Fail;
        self.max_violation = f64::INFINITY;
        self.note = format!("error: {err}");
        self
    }

    fn with_witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }

    pub fn as_expected(&self) -> bool {
        self.verdict == self.expected
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    /// Expected-pass checks that passed.
    pub pass: usize,
    /// Checks whose verdict differs from the expectation.
    pub fail: usize,
    /// Expected-fail checks that failed.
    pub expected_fail: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: String,
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    /// True iff every verdict matches its expectation.
    pub fn as_expected(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with every wall time zeroed, for reproducibility comparisons.
    pub fn without_wall_times(&self) -> Report {
        let mut r = self.clone();
        for rec in &mut r.records {
            rec.wall_time_ms = 0.0;
        }
        r
    }

    pub fn find(&self, id: &str, problem: Option<&str>) -> Vec<&Record> {
        self.records.iter().filter(|r| r.id == id && r.problem.as_deref() == problem).collect()
    }
}

fn timed<F: FnOnce() -> Record>(f: F) -> Record {
    let start = Instant::now();
    let mut rec = f();
    rec.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    rec
}

/// Everything a check needs about one problem.
struct Ctx {
    problem: Problem,
    frame: UVFrame,
    eps: f64,
    gbar: DVector<f64>,
    gbars: Vec<DVector<f64>>,
    rho: f64,
}

impl Ctx {
    fn new(name: &str, cfg: &RunConfig) -> Result<Self> {
        let mut problem = catalog::problem(name)?;
        if let Some(b) = cfg.eps_bar {
            problem.known_eps_bar = b;
        }
        let mut solver = SolverConfig::default();
        if let Some(n) = cfg.grid_n {
            solver.grid_n = n;
        }
        let frame = uvframe::build_frame(&problem, None)?.with_solver(solver);
        let eps = match cfg.eps {
            Some(e) => e,
            None => frame.default_eps()?.min(0.5 * problem.known_eps_bar),
        };
        if eps >= problem.known_eps_bar {
            return Err(Error::EpsilonNotBelowRadius { eps, eps_bar: problem.known_eps_bar });
        }
        let gbars = frame.sample_gbars(eps, 3, cfg.seed)?;
        let gbar = gbars[0].clone();
        let rho = cfg.rho.unwrap_or_else(|| problem.bound_rho());
        Ok(Self { problem, frame, eps, gbar, gbars, rho })
    }

    fn name(&self) -> &str {
        &self.problem.name
    }

    fn rec(&self, id: &str, anchor: &str) -> Record {
        Record::new(id, Some(self.name()), anchor).param("eps", self.eps).param("eps_bar", self.problem.known_eps_bar)
    }
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.as_slice())
}

/// Runs the configured suite.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut ctxs: Vec<(String, std::result::Result<Ctx, Error>)> =
        cfg.problems.iter().map(|p| (p.clone(), Ctx::new(p, cfg))).collect();
    ctxs.sort_by(|a, b| a.0.cmp(&b.0));
    ctxs.dedup_by(|a, b| a.0 == b.0);
    for (name, ctx) in &ctxs {
        let ctx = match ctx {
            Ok(c) => c,
            Err(e) => {
                records.push(Record::new("plumbing/context", Some(name), "plumbing").failed(e));
                continue;
            }
        };
        for group in CHECK_IDS {
            if !cfg.selects(group) {
                continue;
            }
            match group {
                "funcmodel" => funcmodel_checks(ctx, cfg, &mut records),
                "uv-geometry" => uv_checks(ctx, cfg, &mut records),
                "ulag-core" => ulag_checks(ctx, cfg, &mut records),
                "oracle" => oracle_checks(ctx, cfg, &mut records),
                "proxreg" => proxreg_checks(ctx, cfg, &mut records),
                "tilt" => tilt_checks(ctx, cfg, &mut records),
                "monotonicity" => monotonicity_checks(ctx, cfg, &mut records),
                "fasttrack" => fasttrack_checks(ctx, cfg, &mut records),
                "partial-smoothness" => partial_smoothness_checks(ctx, cfg, &mut records),
                "manifold-assumptions" => manifold_assumption_checks(ctx, cfg, &mut records),
                _ => {}
            }
        }
    }
    if cfg.selects("sets") {
        set_checks(cfg, &mut records);
    }
    records.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.problem.cmp(&b.problem)));
    let mut summary = Summary::default();
    for r in &records {
        match (r.expected, r.verdict) {
            (Verdict::Pass, Verdict::Pass) => summary.pass += 1,
            (Verdict::Fail, Verdict::Fail) => summary.expected_fail += 1,
            _ => summary.fail += 1,
        }
    }
    Ok(Report { schema: SCHEMA.into(), config: cfg.clone(), records, summary })
}

fn funcmodel_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    out.push(timed(|| {
        let rec = ctx.rec("funcmodel/regularity", "regular and limiting subdifferentials coincide");
        let mut pts = vec![p.base_point.clone()];
        let mut sampler = BallSampler::new(p.base_point.clone(), 0.5 * p.known_eps_bar, cfg.seed);
        for k in 0..20 {
            let x = sampler.next_point();
            pts.push(if k % 2 == 0 {
                let n = p.dim;
                p.snap_to_stratum(&x, &nalgebra::DMatrix::identity(n, n), &DVector::zeros(n), 0.5)
                    .map(|z| &x + z)
                    .unwrap_or(x)
            } else {
                x
            });
        }
        let mut worst: f64 = 0.0;
        for x in &pts {
            match certify::regularity_gap(p, x, cfg.seed) {
                Ok(g) => worst = worst.max(g),
                Err(e) => return rec.failed(&e),
            }
        }
        rec.param("points", pts.len()).measured(worst, certify::REGULARITY_TOL, "Hausdorff estimate over sampled points")
    }));
    out.push(timed(|| {
        let rec = ctx.rec("funcmodel/directional-derivative", "directional derivative is the support function of the subdifferential");
        let x = &p.base_point;
        let t = 1e-7;
        let mut worst: f64 = 0.0;
        for w in unit_directions(p.dim, 32, cfg.seed) {
            let dd = match p.directional_derivative(x, &w) {
                Ok(d) => d,
                Err(e) => return rec.failed(&e),
            };
            let quotient = (p.eval(&(x + &w * t)) - p.base_value()) / t;
            worst = worst.max((dd - quotient).abs());
        }
        rec.param("step", t).measured(worst, 1e-6, "one-sided difference quotients at the base point")
    }));
}

fn uv_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    let f = &ctx.frame;
    out.push(timed(|| {
        let rec = ctx.rec("uv-geometry/gtilde-independence", "V does not depend on the reference subgradient");
        let gens = f.subdiff.generators();
        let mut choices: Vec<DVector<f64>> = gens.to_vec();
        let mut halton = Halton::new(gens.len().max(1), cfg.seed);
        while choices.len() < 10 {
            let w = simplex_weights(&halton.next_point(), gens.len());
            choices.push(gens.iter().zip(&w).fold(DVector::zeros(p.dim), |a, (g, wi)| a + g * *wi));
        }
        choices.truncate(10);
        let mut worst: f64 = 0.0;
        for g in &choices {
            match uvframe::build_frame(p, Some(g)) {
                Ok(other) => worst = worst.max(other.v.max_principal_angle(&f.v)),
                Err(e) => return rec.failed(&e),
            }
        }
        rec.param("choices", choices.len()).measured(worst, uvframe::SUBSPACE_TOL, "max principal angle between V subspaces")
    }));
    out.push(timed(|| {
        let rec = ctx.rec("uv-geometry/u-prime", "U equals the directional-derivative subspace and the normal cone");
        match uvframe::u_prime_crosscheck(p) {
            Ok(up) => rec
                .param("dim_u", f.dim_u())
                .measured(up.max_principal_angle(&f.u), uvframe::SUBSPACE_TOL, "max principal angle to U"),
            Err(e) => rec.failed(&e),
        }
    }));
    out.push(timed(|| {
        ctx.rec("uv-geometry/gu-constancy", "all subgradients share the U-component")
            .measured(uvframe::gu_constancy(p, f), 1e-10, "max spread of U-projections of generators")
    }));
    out.push(timed(|| {
        let rec = ctx.rec("uv-geometry/frame", "U and V are orthogonal complements");
        let cross = (f.u.basis().transpose() * f.v.basis()).amax();
        let mut worst = if f.dim_u() == 0 || f.dim_v() == 0 { 0.0 } else { cross };
        if f.dim_u() + f.dim_v() != p.dim {
            worst = f64::INFINITY;
        }
        let mut sampler = BallSampler::new(DVector::zeros(p.dim), 10.0, cfg.seed);
        for x in sampler.take(16) {
            worst = worst.max(f.reconstruction_error(&x));
        }
        rec.param("dim_u", f.dim_u()).param("dim_v", f.dim_v()).measured(worst, 1e-12, "orthogonality and reconstruction")
    }));
}

fn ulag_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    let f = &ctx.frame;
    let m = f.dim_u();
    out.push(timed(|| {
        let rec = ctx.rec("ulag-core/base-identity", "U-Lagrangian value and minimizers at u = 0");
        let mut worst: f64 = 0.0;
        let mut diam: f64 = 0.0;
        for g in &ctx.gbars {
            let e = match ulag::inner_minimize(p, f, &DVector::zeros(m), g, ctx.eps) {
                Ok(e) => e,
                Err(e) => return rec.failed(&e),
            };
            worst = worst.max((e.value - p.base_value()).abs());
            let rep = e.minimizers[0].representative.norm();
            let d = e.minimizers[0].diameter;
            diam = diam.max(d);
            if e.minimizers.len() != 1 || d > 1e-6 || rep > 1e-6 {
                worst = worst.max(1.0);
            }
        }
        rec.param("gbars", ctx.gbars.len())
            .param("max_diameter", diam)
            .measured(worst, 1e-9, "|L(0) - f(xbar)|, with W(0) a single cluster at 0")
    }));
    out.push(timed(|| {
        let rec = ctx.rec("ulag-core/gradient-at-zero", "strict differentiability of the U-Lagrangian at 0");
        let mut worst: f64 = 0.0;
        for g in &ctx.gbars {
            match ulag::grad_l_at_zero(p, f, g, ctx.eps) {
                Ok(grad) => worst = worst.max((grad - f.u_coords(g)).norm() / (1.0 + g.norm())),
                Err(e) => return rec.failed(&e),
            }
        }
        rec.param("step", ulag::FD_STEP).measured(worst, 1e-5, "||FD grad L(0) - g_u|| / (1 + ||gbar||)")
    }));
    for (id, kind, anchor, n) in [
        ("ulag-core/quadratic-lower-bound", BoundKind::QuadraticLower, "quadratic lower bound on the U-Lagrangian", 1000),
        ("ulag-core/proximal-subgradient", BoundKind::ProximalSubgradient, "g_u is a proximal subgradient of the U-Lagrangian at 0", 200),
        ("ulag-core/sandwich", BoundKind::Sandwich, "two-sided bound on the U-Lagrangian", 200),
    ] {
        out.push(timed(|| {
            let rec = ctx.rec(id, anchor).param("gbar", vec_json(&ctx.gbar));
            match ulag::bound_check(kind, p, f, &ctx.gbar, ctx.eps, ctx.rho, cfg.samples_or(n).min(n * 10), cfg.seed) {
                Ok(c) => rec.from_cert(&c),
                Err(e) => rec.failed(&e),
            }
        }));
    }
    out.push(timed(|| {
        let rec = ctx.rec("ulag-core/marginal-link", "gradient of the U-Lagrangian is a partial subgradient at a minimizer");
        let mut us = vec![DVector::zeros(m)];
        if m > 0 {
            let mut u = DVector::zeros(m);
            u[0] = 0.1;
            us.push(u);
        }
        let mut worst: f64 = 0.0;
        let mut wit = None;
        for u in &us {
            match ulag::marginal_subgradient_link(p, f, &ctx.gbar, ctx.eps, u) {
                Ok(l) => {
                    worst = worst.max(l.distance);
                    if !l.passed && wit.is_none() {
                        wit = Some(certify::witness(&[("u", u), ("s", &l.s), ("vhat", &l.vhat)]));
                    }
                }
                Err(e) => return rec.failed(&e),
            }
        }
        rec.param("points", us.len()).measured(worst, ulag::LINK_TOL, "distance of (s, 0) to the shifted subdifferential").with_witness(wit)
    }));
}

fn oracle_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    let f = &ctx.frame;
    out.push(timed(|| {
        let rec = ctx.rec("oracle/dense-grid", "plumbing");
        let max_eps = match f.max_feasible_eps() {
            Ok(m) => m.min(0.9 * p.known_eps_bar),
            Err(e) => return rec.failed(&e),
        };
        let mut unit = Halton::new(3, cfg.seed.wrapping_add(31));
        let mut worst: f64 = 0.0;
        let mut wit = None;
        for _ in 0..4 {
            let h = unit.next_point();
            let eps = max_eps * (0.3 + 0.6 * h[0]);
            let ri = match f.eps_ri(eps) {
                Ok(r) => r,
                Err(e) => return rec.failed(&e),
            };
            let w = simplex_weights(&[h[1], h[2]], ri.generators().len());
            let g = ri.generators().iter().zip(&w).fold(DVector::zeros(p.dim), |a, (g, wi)| a + g * *wi);
            let u = if f.dim_u() > 0 {
                let mut s = BallSampler::new(DVector::zeros(f.dim_u()), 0.3, cfg.seed.wrapping_add((h[0] * 1e6) as u64));
                s.next_point()
            } else {
                DVector::zeros(0)
            };
            let solved = ulag::inner_minimize(p, f, &u, &g, eps);
            let dense = oracle::dense_grid_minimize(p, f, &u, &g, eps, oracle::ORACLE_GRID_N);
            match (solved, dense) {
                (Ok(s), Ok(d)) => {
                    let diff = (s.value - d.value).abs();
                    if diff > worst {
                        worst = diff;
                        if diff > 1e-6 {
                            wit = Some(certify::witness(&[("u", &u), ("gbar", &g)]));
                        }
                    }
                }
                (Err(e), _) | (_, Err(e)) => return rec.failed(&e),
            }
        }
        rec.param("instances", 4).param("oracle_grid_n", oracle::ORACLE_GRID_N).measured(worst, 1e-6, "|solver - dense grid| in value").with_witness(wit)
    }));
}

/// Expected verdict of the function certificate at `rho`.
pub fn expected_proxreg(problem: &Problem, rho: f64) -> Verdict {
    if problem.rho_is_sharp && rho < problem.known_rho {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}

fn proxreg_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    let rhos: Vec<f64> = match cfg.rho {
        Some(r) => vec![r],
        None if p.rho_is_sharp => vec![p.known_rho, 0.5 * p.known_rho],
        None => vec![p.known_rho],
    };
    for rho in rhos {
        out.push(timed(|| {
            let rec = ctx.rec("proxreg/function", "prox-regularity of the function").param("gbar", vec_json(&ctx.gbar));
            let rec = rec.expect(expected_proxreg(p, rho));
            match certify::certify_function_prox_regularity(p, &ctx.gbar, p.known_eps_bar, rho, cfg.samples_or(10_000), cfg.seed) {
                Ok(c) => rec.from_cert(&c),
                Err(e) => rec.failed(&e),
            }
        }));
    }
}

fn tilt_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let f = &ctx.frame;
    out.push(timed(|| {
        let rec = ctx.rec("tilt/tilt-map", "tilt stability of the V-minimization at 0");
        let gs = match f.sample_gbars(ctx.eps, 21, cfg.seed.wrapping_add(5)) {
            Ok(g) => g,
            Err(e) => return rec.failed(&e),
        };
        let mut tilts: Vec<DVector<f64>> = Vec::new();
        for g in &gs {
            let s = f.v_coords(&(g - &ctx.gbar));
            if !tilts.iter().any(|t| (t - &s).norm() < 1e-14) {
                tilts.push(s);
            }
        }
        tilts.truncate(20);
        let mut worst: f64 = 0.0;
        let mut wit = None;
        for s in &tilts {
            match ulag::tilt_map(&ctx.problem, f, &ctx.gbar, ctx.eps, s) {
                Ok(t) => {
                    let mut bad = t.diameter().max(t.minimizers[0].representative.norm());
                    if !t.is_single_cluster() {
                        bad = bad.max(1.0);
                    }
                    if bad > worst {
                        worst = bad;
                        if bad > 1e-6 && wit.is_none() {
                            wit = Some(certify::witness(&[("s", s), ("representative", &t.minimizers[0].representative)]));
                        }
                    }
                }
                Err(e) => return rec.failed(&e),
            }
        }
        rec.param("tilts", tilts.len()).measured(worst, 1e-6, "M(s) is one cluster at 0").with_witness(wit)
    }));
}

fn monotonicity_checks(ctx: &Ctx, cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    let f = &ctx.frame;
    if f.dim_u() == 0 {
        return;
    }
    let mut c_est = None;
    out.push(timed(|| {
        let rec = ctx.rec("monotonicity/w-lipschitz", "Lipschitz minimizer selection");
        let grid = cube_grid(f.dim_u(), 0.2, 21);
        match certify::estimate_w_lipschitz(p, f, &ctx.gbar, ctx.eps, &grid) {
            Ok(c) => {
                c_est = c.param("c");
                rec.from_cert(&c)
            }
            Err(e) => rec.failed(&e),
        }
    }));
    let c = c_est.unwrap_or(0.0);
    let rho_hat = ctx.rho * (1.0 + c * c) * 1.1;
    out.push(timed(|| {
        let rec = ctx.rec("monotonicity/localization", "monotonicity of the localized U-Lagrangian gradients").param("c", c);
        match certify::certify_localization_monotonicity(p, f, &ctx.gbar, ctx.eps, rho_hat, cfg.samples_or(100).min(1000), cfg.seed) {
            Ok(cert) => rec.from_cert(&cert),
            Err(e) => rec.failed(&e),
        }
    }));
}

fn fast_track_selected(ctx: &Ctx) -> bool {
    catalog::FAST_TRACK_PROBLEMS.contains(&ctx.name())
}

fn fasttrack_checks(ctx: &Ctx, _cfg: &RunConfig, out: &mut Vec<Record>) {
    if !fast_track_selected(ctx) {
        return;
    }
    let p = &ctx.problem;
    let f = &ctx.frame;
    let radii = Radii::default();
    let grid = radii.grid(f.dim_u());
    let start = Instant::now();
    let trace = fasttrack::trace_fast_track(p, f, ctx.eps, &grid, &ctx.gbars);
    let trace_ms = start.elapsed().as_secs_f64() * 1e3;
    let trace = match trace {
        Ok(t) => t,
        Err(e) => {
            out.push(ctx.rec("fasttrack/trace", "minimizer selection common to all gbar").failed(&e));
            return;
        }
    };
    let mut rec = ctx.rec("fasttrack/trace", "minimizer selection common to all gbar");
    let v0 = trace.u_grid.iter().position(|u| u.norm() == 0.0).map_or(0.0, |i| trace.v_of_u[i].norm());
    let gap = trace.membership_gap.iter().cloned().fold(0.0, f64::max);
    rec = rec
        .param("grid_points", grid.len())
        .param("selection_spread", trace.selection_spread)
        .measured(v0.max(trace.selection_spread).max(gap), fasttrack::MEMBERSHIP_TOL, "v(0) = 0 and v(u) minimizes for every sampled gbar");
    rec.wall_time_ms = trace_ms;
    out.push(rec);

    if p.name == "P6" {
        out.push(timed(|| {
            let dev = trace.u_grid.iter().zip(&trace.v_of_u).map(|(u, v)| (v[0] - u[0] * u[0]).abs()).fold(0.0, f64::max);
            ctx.rec("fasttrack/closed-form", "fast track of the parabolic valley is v(u) = u^2")
                .measured(dev, 1e-6, "max |v(u) - u^2| on the grid")
        }));
    }
    out.push(timed(|| {
        let rec = ctx.rec("fasttrack/smooth-selection", "the selection has zero derivative at 0");
        match fasttrack::check_smooth_selection(&trace) {
            Ok(d) => {
                let mut rec = rec.param("jacobian_norm", d.jacobian_norm);
                for (r, q) in &d.ratios {
                    rec = rec.param(&format!("ratio_at_{r:e}"), *q);
                }
                let mut measure = d.jacobian_norm;
                if !d.passed {
                    measure = measure.max(1.0);
                }
                rec.measured(measure, 1e-4, "FD Jacobian of v at 0 and o(||u||) ratios")
            }
            Err(e) => rec.failed(&e),
        }
    }));
    out.push(timed(|| {
        let rec = ctx.rec("fasttrack/tangent-space", "the chart's tangent space at the base point is U");
        match ManifoldModel::traced("traced", p, f, ctx.eps, &ctx.gbar, radii.grid_radius) {
            Ok(model) => rec.measured(
                fasttrack::tangent_space(&model).max_principal_angle(&f.u),
                fasttrack::ANGLE_TOL,
                "principal angle between the column space of grad G(0) and U",
            ),
            Err(e) => rec.failed(&e),
        }
    }));
    out.push(timed(|| {
        let rec = ctx.rec("fasttrack/c1", "the U-Lagrangian is continuously differentiable along the fast track");
        match fasttrack::c1_fast_track_battery(p, f, ctx.eps, &trace) {
            Ok(v) => {
                let measure = if v.passed { v.identity_violation } else { v.identity_violation.max(v.jump_excess).max(1.0) };
                rec.param("max_jump", v.max_jump)
                    .param("identity_violation", v.identity_violation)
                    .measured(measure, 1e-8, "gradient jumps and the affine relation between gbar choices")
                    .with_witness(v.witness)
            }
            Err(e) => rec.failed(&e),
        }
    }));
}

fn partial_smoothness_checks(ctx: &Ctx, _cfg: &RunConfig, out: &mut Vec<Record>) {
    let p = &ctx.problem;
    let f = &ctx.frame;
    let radii = Radii::default();
    let models: Vec<(&str, Result<ManifoldModel>, bool)> = match ctx.name() {
        "P1" => vec![("x1-axis", ManifoldModel::traced("x1-axis", p, f, ctx.eps, &ctx.gbar, radii.grid_radius), true)],
        "P6" => vec![
            ("parabola", ManifoldModel::traced("parabola", p, f, ctx.eps, &ctx.gbar, radii.grid_radius), true),
            (
                "x1-axis",
                ManifoldModel::explicit("x1-axis", p, f, ctx.eps, |_u| DVector::zeros(1), radii.grid_radius),
                false,
            ),
        ],
        _ => Vec::new(),
    };
    for (label, model, genuine) in models {
        let start = Instant::now();
        let verdict = model.and_then(|m| fasttrack::partial_smoothness_battery(p, &m, &radii));
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match verdict {
            Ok(v) => {
                for part in &v.parts {
                    let expected = if !genuine && part.part == "iv" { Verdict::Fail } else { Verdict::Pass };
                    let mut rec = ctx
                        .rec(&format!("partial-smoothness/part-{}", part.part), "partial smoothness relative to a manifold")
                        .param("manifold", label)
                        .expect(expected);
                    rec.max_violation = part.measure;
                    rec.params.insert("tolerance".into(), json!(part.tolerance));
                    rec.verdict = if part.passed { Verdict::Pass } else { Verdict::Fail };
                    rec.witness = part.witness.clone();
                    rec.note = part.note.clone();
                    rec.wall_time_ms = ms / 4.0;
                    out.push(rec);
                }
            }
            Err(e) => out.push(ctx.rec("partial-smoothness/part-i", "partial smoothness relative to a manifold").param("manifold", label).failed(&e)),
        }
    }
}

fn manifold_assumption_checks(ctx: &Ctx, _cfg: &RunConfig, out: &mut Vec<Record>) {
    if !fast_track_selected(ctx) {
        return;
    }
    let radii = Radii::default();
    let start = Instant::now();
    let certs = ManifoldModel::traced("traced", &ctx.problem, &ctx.frame, ctx.eps, &ctx.gbar, radii.grid_radius)
        .and_then(|m| certify::check_manifold_assumptions(&m, &radii));
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let anchors = [
        ("manifold-assumptions/chart-regularity", "regular equals limiting subdifferential on the manifold"),
        ("manifold-assumptions/selection-interior", "the selection stays inside the open V-ball"),
        ("manifold-assumptions/boundary-approach", "boundary subgradients are approached along the manifold"),
        ("manifold-assumptions/sequence-regularity", "subdifferential regularity along the manifold sequence"),
    ];
    match certs {
        Ok(certs) => {
            for ((id, anchor), c) in anchors.iter().zip(&certs) {
                let mut rec = ctx.rec(id, anchor).from_cert(c);
                rec.wall_time_ms = ms / 4.0;
                out.push(rec);
            }
        }
        Err(e) => out.push(ctx.rec(anchors[0].0, anchors[0].1).failed(&e)),
    }
}

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn set_checks(cfg: &RunConfig, out: &mut Vec<Record>) {
    let n = cfg.samples_or(10_000);
    let seed = cfg.seed;
    let disk = SetDescr::unit_disk_complement();
    let cases: Vec<(&str, SetDescr, DVector<f64>, DVector<f64>, f64, f64, Verdict)> = vec![
        ("sets/half-space", SetDescr::half_space(&[0.0, 1.0], 0.0), v(&[0.0, 0.0]), v(&[0.0, 1.0]), 0.5, 0.0, Verdict::Pass),
        ("sets/box-corner", SetDescr::unit_box(&[0.0, 0.0], &[1.0, 1.0]), v(&[0.0, 0.0]), v(&[-1.0, -1.0]), 0.5, 0.0, Verdict::Pass),
        ("sets/parabola-epigraph", SetDescr::ParabolaEpigraph, v(&[0.0, 0.0]), v(&[0.0, -1.0]), 0.5, 0.0, Verdict::Pass),
        ("sets/disk-complement", disk.clone(), v(&[1.0, 0.0]), v(&[-1.0, 0.0]), 0.5, 1.5, Verdict::Pass),
        ("sets/disk-complement-unit-modulus", disk.clone(), v(&[1.0, 0.0]), v(&[-1.0, 0.0]), 0.5, 1.0, Verdict::Fail),
    ];
    for (id, set, x, w, eps, rho, expected) in cases {
        out.push(timed(|| {
            let c = certify::certify_set_prox_regularity(&set, &x, &w, eps, rho, n, seed);
            Record::new(id, None, "prox-regularity of a set")
                .param("set", set.label())
                .param("xbar", vec_json(&x))
                .param("wbar", vec_json(&w))
                .expect(expected)
                .from_cert(&c)
        }));
    }
    let interval = SetDescr::unit_box(&[0.0], &[1.0]);
    let products: Vec<(&str, SetDescr, SetDescr, DVector<f64>, DVector<f64>, f64)> = vec![
        ("sets/product-disk-interval", disk.clone(), interval, v(&[1.0, 0.0, 0.5]), v(&[-1.0, 0.0, 0.0]), 1.5),
        (
            "sets/product-half-spaces",
            SetDescr::half_space(&[0.0, 1.0], 0.0),
            SetDescr::half_space(&[1.0], 0.0),
            v(&[0.0, 0.0, 0.0]),
            v(&[0.0, 1.0, 1.0]),
            0.0,
        ),
        ("sets/product-degenerate", disk.clone(), SetDescr::unit_box(&[0.0], &[0.0]), v(&[1.0, 0.0, 0.0]), v(&[-1.0, 0.0, 0.0]), 1.5),
    ];
    for (id, d, e, x, w, rho) in products {
        out.push(timed(|| {
            let rec = Record::new(id, None, "prox-regularity passes from a product to its factor")
                .param("set", format!("{} x {}", d.label(), e.label()));
            match certify::certify_product_set(&d, &e, &x, &w, 0.5, rho, n, seed) {
                Ok(c) => rec.from_cert(&c),
                Err(err) => rec.failed(&err),
            }
        }));
    }
    for (id, beta) in [("sets/perturbation-small", 0.1), ("sets/perturbation-near-limit", 0.49)] {
        out.push(timed(|| {
            let rec = Record::new(id, None, "prox-regularity persists under perturbation of the base pair").param("set", disk.label());
            match certify::certify_perturbation(&disk, &v(&[1.0, 0.0]), &v(&[-1.0, 0.0]), 0.5, 1.5, beta, 10, n.min(4000), seed) {
                Ok(c) => rec.from_cert(&c),
                Err(err) => rec.failed(&err),
            }
        }));
    }
    out.push(timed(|| {
        let rec = Record::new("sets/ball-inclusion", None, "ball inclusion under center perturbation");
        match certify::ball_inclusion_check(&v(&[0.0, 0.0]), 1.0, 0.3, n, seed) {
            Ok(c) => rec.from_cert(&c),
            Err(err) => rec.failed(&err),
        }
    }));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.eps = Some(0.6);
        c.eps_bar = Some(0.5);
        assert!(matches!(c.validate(), Err(Error::EpsilonNotBelowRadius { .. })));
        let c = RunConfig { problems: vec!["P9".into()], ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(Error::UnknownProblem(_))));
        let c = RunConfig { checks: vec!["bogus".into()], ..RunConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_group_report() {
        let cfg = RunConfig { problems: vec!["P1".into()], checks: vec!["ulag-core".into()], ..RunConfig::default() };
        let r = run(&cfg).unwrap();
        assert!(r.as_expected(), "{}", r.to_json());
        assert!(!r.find("ulag-core/base-identity", Some("P1")).is_empty());
        assert_eq!(r.summary.pass + r.summary.fail + r.summary.expected_fail, r.records.len());
    }

    #[test]
    fn sharp_modulus_bracket() {
        let cfg = RunConfig { problems: vec!["P2".into()], checks: vec!["proxreg".into()], ..RunConfig::default() };
        let r = run(&cfg).unwrap();
        assert_eq!(r.records.len(), 2);
        assert_eq!(r.summary.expected_fail, 1);
        assert!(r.as_expected());
    }
}
