//! Job execution and the run summary.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::output::{csv, dat, write_atomic};
use super::scenario::{Job, JobKind, Scenario};
use crate::entropy::{
    anec_identity, nullcut_entropy, qnec_sweep, superadditivity_check, BMTState, QNEC_FLOOR,
};
use crate::nullcut::{
    hsmi_support_witness, modular_flow_nullcut, modular_generator_apply, CutProfile, NullCutVector,
};
use crate::numerics::QuadratureSpec;
use crate::oneparticle::{zero_mode_diagnose, MassShellParams, ThinTestFunction};
use crate::stdsubspace::{entropy_cutting, make_subspace, realify, trotter_orders, verify_modular_relations};
use crate::Error;

/// Tolerances of the asserted identities at `--tol-scale 1`.
pub mod tol {
    pub const ENTROPY_FLOOR: f64 = 1e-12;
    pub const ANEC_AB: f64 = 1e-6;
    pub const ANEC_CB: f64 = 1e-4;
    pub const SUPERADD: f64 = 1e-8;
    pub const GENERATOR: f64 = 5e-3;
    pub const UNITARITY: f64 = 1e-6;
    pub const SUBSPACE: f64 = 1e-8;
    pub const TROTTER_ORDER: f64 = 0.9;
    pub const ZERO_MODE_GROWTH: f64 = 0.9;
    pub const ZERO_MODE_FLAT: f64 = 1e-8;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// An asserted identity missed its tolerance, or a computation failed.
    Violation,
    /// Input rejected once the job ran.
    Invalid,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 1,
            Status::Invalid => 2,
        }
    }
}

/// One asserted inequality: `value <= bound` or `value >= bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: "<=", bound, pass: value <= bound }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: ">=", bound, pass: value >= bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobReport {
    pub name: String,
    pub kind: &'static str,
    pub status: Status,
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario_sha256: String,
    pub tol_scale: f64,
    pub status: Status,
    pub jobs: Vec<JobReport>,
}

/// Wall-clock seconds per job, kept apart from the deterministic summary.
#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub jobs: Vec<(String, f64)>,
    pub total: f64,
}

/// Collected results of one job before they are classified.
#[derive(Default)]
struct Outcome {
    values: BTreeMap<String, f64>,
    checks: Vec<Check>,
    files: Vec<(String, String)>,
}

impl Outcome {
    fn value(&mut self, k: &str, v: f64) {
        self.values.insert(k.to_string(), v);
    }

    fn file(&mut self, name: String, contents: String) {
        self.files.push((name, contents));
    }
}

fn classify(e: &Error) -> Status {
    match e {
        Error::InvalidInput(_)
        | Error::ProfileOrderViolation { .. }
        | Error::ZeroModePresent { .. }
        | Error::ZeroMassZeroMomentum => Status::Invalid,
        _ => Status::Violation,
    }
}

/// Runs every job in order and writes its files into `out`.
pub fn run(
    scenario: &Scenario,
    sha256: String,
    tol_scale: f64,
    out: &Path,
    mut log: impl FnMut(&str),
) -> anyhow::Result<(RunReport, Timings)> {
    let start = Instant::now();
    let mut jobs = Vec::with_capacity(scenario.jobs.len());
    let mut timings = Vec::with_capacity(scenario.jobs.len());
    for job in &scenario.jobs {
        let t0 = Instant::now();
        let report = match execute(job, &scenario.params, tol_scale) {
            Ok(o) => {
                let mut files = Vec::with_capacity(o.files.len());
                for (name, contents) in &o.files {
                    write_atomic(&out.join(name), contents.as_bytes())?;
                    files.push(name.clone());
                }
                let failed: Vec<&Check> = o.checks.iter().filter(|c| !c.pass).collect();
                let message = (!failed.is_empty()).then(|| {
                    failed
                        .iter()
                        .map(|c| format!("{} = {:e} violates {} {:e}", c.name, c.value, c.relation, c.bound))
                        .collect::<Vec<_>>()
                        .join("; ")
                });
                let status = if failed.is_empty() { Status::Ok } else { Status::Violation };
                JobReport { name: job.name.clone(), kind: job.kind.label(), status, values: o.values, checks: o.checks, files, message }
            }
            Err(e) => JobReport {
                name: job.name.clone(),
                kind: job.kind.label(),
                status: classify(&e),
                values: BTreeMap::new(),
                checks: Vec::new(),
                files: Vec::new(),
                message: Some(e.to_string()),
            },
        };
        match (&report.status, &report.message) {
            (Status::Ok, _) => log(&format!("job `{}` ({}): ok", report.name, report.kind)),
            (s, m) => log(&format!(
                "job `{}` ({}): {}: {}",
                report.name,
                report.kind,
                if *s == Status::Invalid { "invalid" } else { "FAILED" },
                m.as_deref().unwrap_or("")
            )),
        }
        timings.push((job.name.clone(), t0.elapsed().as_secs_f64()));
        jobs.push(report);
    }
    let status = jobs.iter().map(|j| j.status).max().unwrap_or(Status::Ok);
    let report = RunReport {
        tool: "nullplane",
        version: env!("CARGO_PKG_VERSION"),
        scenario_sha256: sha256,
        tol_scale,
        status,
        jobs,
    };
    Ok((report, Timings { jobs: timings, total: start.elapsed().as_secs_f64() }))
}

fn execute(job: &Job, params: &MassShellParams, ts: f64) -> crate::Result<Outcome> {
    let q = &job.quad;
    let stem = &job.output;
    match &job.kind {
        JobKind::Entropy { state, cut } => entropy_job(state, cut, q, ts, stem),
        JobKind::QnecSweep { state, cut, deformation, t_grid } => qnec_job(state, cut, deformation, t_grid, q, ts, stem),
        JobKind::Anec { state, cut, deformation } => {
            let r = anec_identity(state, cut, deformation, params, q)?;
            let mut o = Outcome::default();
            o.value("route_a", r.route_a);
            o.value("route_b", r.route_b);
            o.value("route_c", r.route_c);
            o.value("route_c_imag", r.route_c_imag);
            o.value("t_window_lo", r.t_window.0);
            o.value("t_window_hi", r.t_window.1);
            o.value("compensated", if r.compensated { 1.0 } else { 0.0 });
            o.checks.push(Check::at_most("rel_ab", r.rel_ab, tol::ANEC_AB * ts));
            o.checks.push(Check::at_most("rel_cb", r.rel_cb, tol::ANEC_CB * ts));
            Ok(o)
        }
        JobKind::Superadd { state, cuts } => {
            let r = superadditivity_check(state, &cuts.0, &cuts.1, q)?;
            let mut o = Outcome::default();
            o.value("S1", r.s1);
            o.value("S2", r.s2);
            o.value("S_union", r.s_union);
            o.value("S_intersection", r.s_intersection);
            o.value("residual", r.residual);
            o.checks.push(Check::at_most("relative_residual", r.relative, tol::SUPERADD * ts));
            Ok(o)
        }
        JobKind::ModularCheck { function, cut, epsilon, flow_s } => {
            modular_job(function, cut, *epsilon, *flow_s, params, q, ts)
        }
        JobKind::HsmiWitness { function, cuts, s_grid } => {
            let x = function.spatial_grid(q)?;
            let r = hsmi_support_witness(&cuts.0, &cuts.1, function, s_grid, &x)?;
            let mut o = Outcome::default();
            let min = r.margins.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
            let drop = r.margins.windows(2).map(|w| w[0].1 - w[1].1).fold(0.0, f64::max);
            o.checks.push(Check { name: "min_margin".into(), value: min, relation: ">", bound: 0.0, pass: min > 0.0 });
            o.checks.push(Check::at_most("max_decrease", drop, 0.0));
            let rows: Vec<Vec<f64>> = r.margins.iter().map(|(s, m)| vec![*s, *m]).collect();
            o.file(format!("{stem}_margins.dat"), dat(&["s", "margin"], &rows));
            Ok(o)
        }
        JobKind::SubspaceLab { seed, count, max_dim } => subspace_job(*seed, *count, *max_dim, ts, stem),
        JobKind::ZeroMode { function, cutoffs } => {
            let r = zero_mode_diagnose(function, params, cutoffs, q)?;
            let mut o = Outcome::default();
            let (first, last) = (r.truncated_norms[0], r.truncated_norms[r.truncated_norms.len() - 1]);
            let change = last.1 - first.1;
            o.value("zero_mode_weight", r.zero_mode_weight);
            o.value("offending_terms", r.offending_terms.len() as f64);
            o.value("change", change);
            if r.offending_terms.is_empty() {
                o.checks.push(Check::at_most("abs_change", change.abs(), tol::ZERO_MODE_FLAT * ts));
            } else {
                let growth = change / (last.0 - first.0);
                o.checks.push(Check::at_least("growth_per_unit_cutoff", growth, tol::ZERO_MODE_GROWTH * r.zero_mode_weight));
            }
            let rows: Vec<Vec<f64>> = r.truncated_norms.iter().map(|(c, n)| vec![*c, *n]).collect();
            o.file(format!("{stem}_truncated_norms.dat"), dat(&["cutoff", "truncated_norm"], &rows));
            Ok(o)
        }
    }
}

fn entropy_job(state: &BMTState, cut: &CutProfile, q: &QuadratureSpec, ts: f64, stem: &str) -> crate::Result<Outcome> {
    let r = nullcut_entropy(state, cut, q)?;
    let mut o = Outcome::default();
    o.value("S", r.s);
    o.value("S_prime", r.s_prime);
    o.value("S_double_prime", r.s_double_prime);
    o.value("quadrature_error", r.quadrature_error);
    for (k, v) in &r.identity_residuals {
        o.value(&format!("residual.{k}"), *v);
    }
    o.checks.push(Check::at_least("S", r.s, -tol::ENTROPY_FLOOR * ts));
    o.checks.push(Check::at_least("S_double_prime", r.s_double_prime, QNEC_FLOOR * ts));
    let dim = r.per_fibre.first().map_or(1, |(x, _)| x.len());
    let mut header: Vec<String> = (1..=dim).map(|d| format!("x_perp_{d}")).collect();
    header.push("S_fibre".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = r.per_fibre.iter().map(|(x, s)| x.iter().copied().chain([*s]).collect()).collect();
    o.file(format!("{stem}_per_fibre.dat"), dat(&header, &rows));
    Ok(o)
}

fn qnec_job(
    state: &BMTState,
    cut: &CutProfile,
    deformation: &CutProfile,
    t_grid: &[f64],
    q: &QuadratureSpec,
    ts: f64,
    stem: &str,
) -> crate::Result<Outcome> {
    let r = qnec_sweep(state, cut, deformation, t_grid, q)?;
    let mut o = Outcome::default();
    o.value("min_S_double_prime", r.min_s_double_prime);
    o.value("saturated_points", r.points.iter().filter(|p| p.saturated).count() as f64);
    o.checks.push(Check::at_least("min_S_double_prime", r.min_s_double_prime, QNEC_FLOOR * ts));
    let rows: Vec<Vec<f64>> = r.points.iter().map(|p| vec![p.t, p.s, p.s_prime, p.s_double_prime, p.qnec_margin]).collect();
    o.file(format!("{stem}.csv"), csv(&["t", "S", "S_prime", "S_double_prime", "qnec_margin"], &rows));
    for (col, name) in [(1, "S"), (2, "S_prime"), (3, "S_double_prime")] {
        let curve: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[col]]).collect();
        o.file(format!("{stem}_{name}.dat"), dat(&["t", name], &curve));
    }
    Ok(o)
}

fn modular_job(
    g: &ThinTestFunction,
    cut: &CutProfile,
    eps: f64,
    flow_s: f64,
    params: &MassShellParams,
    q: &QuadratureSpec,
    ts: f64,
) -> crate::Result<Outcome> {
    let x = g.spatial_grid(q)?;
    let v = NullCutVector::from_thin(g, cut.clone(), params, &x, q)?;
    let norm = v.vector.norm_sqr().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidInput("test function has zero norm".into()));
    }
    let gen = modular_generator_apply(&v, cut, q)?;
    // (Δ^{iε}v − v)/(iε), with Δ^{iε} the flow at parameter −ε
    let flowed = modular_flow_nullcut(&v, cut, -eps, q)?.vector;
    let k = Complex64::new(0.0, -1.0 / eps);
    let fd = flowed.lincomb(k, &v.vector, -k)?;
    let gen_rel = gen.distance(&fd)? / norm;
    let moved = modular_flow_nullcut(&v, cut, flow_s, q)?.vector;
    let unitarity = (moved.norm_sqr() / v.vector.norm_sqr() - 1.0).abs();
    let mut o = Outcome::default();
    o.value("norm", norm);
    o.value("generator_norm", gen.norm_sqr().sqrt());
    o.checks.push(Check::at_most("generator_vs_flow", gen_rel, tol::GENERATOR * ts));
    o.checks.push(Check::at_most("flow_unitarity", unitarity, tol::UNITARITY * ts));
    Ok(o)
}

fn random_cvec(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn subspace_job(seed: u64, count: usize, max_dim: usize, ts: f64, stem: &str) -> crate::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(count);
    let (mut worst_res, mut worst_ent, mut min_order) = (0.0f64, 0.0f64, f64::INFINITY);
    for i in 0..count {
        let n = rng.random_range(1..=max_dim);
        let span: Vec<_> = (0..n).map(|_| random_cvec(&mut rng, n)).collect();
        let h = make_subspace(&span)?;
        let residual = verify_modular_relations(&h)?.max_residual();
        worst_res = worst_res.max(residual);
        // odd n leaves an eigenvalue-1 direction of Δ, where the entropy is undefined
        let (mut ent_err, mut order) = (f64::NAN, f64::NAN);
        if n % 2 == 0 {
            let mut v = DVector::<Complex64>::zeros(n);
            for s in &h.spanning {
                v += s * Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            }
            let r = realify(&v);
            let expected = -r.dot(&(h.log_delta() * &r));
            let s = entropy_cutting(&h, &v)?;
            ent_err = (s - expected).abs() / expected.abs().max(1.0);
            worst_ent = worst_ent.max(ent_err);
            let k = make_subspace(&(0..n).map(|_| random_cvec(&mut rng, n)).collect::<Vec<_>>())?;
            let orders = trotter_orders(&h, &k, 0.3, 8, 4)?;
            order = orders.iter().skip(1).map(|o| o.2).fold(f64::INFINITY, f64::min);
            min_order = min_order.min(order);
        }
        rows.push(vec![i as f64, n as f64, residual, ent_err, order]);
    }
    let mut o = Outcome::default();
    o.value("subspaces", count as f64);
    o.checks.push(Check::at_most("max_modular_residual", worst_res, tol::SUBSPACE * ts));
    o.checks.push(Check::at_most("max_entropy_error", worst_ent, tol::SUBSPACE * ts));
    if min_order.is_finite() {
        o.checks.push(Check::at_least("min_trotter_order", min_order, tol::TROTTER_ORDER));
    }
    o.file(
        format!("{stem}.csv"),
        csv(&["index", "n", "modular_residual", "entropy_error", "trotter_min_order"], &rows),
    );
    Ok(o)
}
