//! Scenario files: parsing, name resolution and static validation.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;

use crate::entropy::BMTState;
use crate::nullcut::{CutProfile, ProfileBump};
use crate::numerics::{QuadratureSpec, SmoothBump, SmoothFn1D};
use crate::oneparticle::{MassShellParams, ThinTestFunction};

/// Every job kind, with a one-line description for `list-jobs`.
pub const JOB_KINDS: [(&str, &str); 8] = [
    ("entropy", "relative entropy S(C) of a coherent state with per-fibre breakdown"),
    ("qnec-sweep", "S, S', S'' along C + tA on a t grid; checks S'' >= 0"),
    ("anec", "averaged null energy by t-integration, direct integral and Weyl overlap"),
    ("superadd", "S(min) + S(max) - S(C1) - S(C2) for two crossing cuts"),
    ("modular-check", "modular generator against a finite difference of the flow, and flow unitarity"),
    ("hsmi-witness", "support margins of a test function under the modular flow of the lower cut"),
    ("subspace-lab", "seeded random standard subspaces: modular relations, entropy, Trotter order"),
    ("zero-mode", "truncated-norm growth of the lightlike zero mode"),
];

/// Static problem in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError(pub String);

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ScenarioError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError(msg.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    params: MassShellParams,
    #[serde(default)]
    quad: QuadratureSpec,
    #[serde(default)]
    functions: BTreeMap<String, FunctionDef>,
    #[serde(default)]
    profiles: BTreeMap<String, ProfileDef>,
    #[serde(default)]
    jobs: Vec<JobDef>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpDef {
    center: f64,
    half_width: f64,
    #[serde(default = "one")]
    amplitude: f64,
    #[serde(default)]
    order: u8,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketDef {
    mid: f64,
    half: f64,
    #[serde(default = "default_packet_step")]
    step: f64,
}

fn default_packet_step() -> f64 {
    0.02
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDef {
    #[serde(default)]
    u: Vec<BumpDef>,
    packet: Option<PacketDef>,
    v: Vec<Vec<BumpDef>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDef {
    terms: Vec<TermDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileBumpDef {
    coefficient: f64,
    factors: Vec<BumpDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDef {
    #[serde(default)]
    base: f64,
    #[serde(default)]
    bumps: Vec<ProfileBumpDef>,
    #[serde(default)]
    nonneg: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridDef {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobDef {
    kind: String,
    name: Option<String>,
    output: Option<String>,
    #[serde(alias = "state")]
    function: Option<String>,
    cut: Option<String>,
    deformation: Option<String>,
    cuts: Option<Vec<String>>,
    t_grid: Option<GridDef>,
    s_grid: Option<Vec<f64>>,
    cutoffs: Option<Vec<f64>>,
    epsilon: Option<f64>,
    flow_s: Option<f64>,
    seed: Option<u64>,
    count: Option<usize>,
    max_dim: Option<usize>,
    theta_points: Option<usize>,
    transverse_points_per_dim: Option<usize>,
}

impl JobDef {
    /// Names of the optional fields that are set.
    fn present(&self) -> Vec<&'static str> {
        let flags = [
            ("function", self.function.is_some()),
            ("cut", self.cut.is_some()),
            ("deformation", self.deformation.is_some()),
            ("cuts", self.cuts.is_some()),
            ("t_grid", self.t_grid.is_some()),
            ("s_grid", self.s_grid.is_some()),
            ("cutoffs", self.cutoffs.is_some()),
            ("epsilon", self.epsilon.is_some()),
            ("flow_s", self.flow_s.is_some()),
            ("seed", self.seed.is_some()),
            ("count", self.count.is_some()),
            ("max_dim", self.max_dim.is_some()),
        ];
        flags.into_iter().filter(|(_, on)| *on).map(|(n, _)| n).collect()
    }
}

/// A resolved job.
#[derive(Debug, Clone)]
pub enum JobKind {
    Entropy { state: BMTState, cut: CutProfile },
    QnecSweep { state: BMTState, cut: CutProfile, deformation: CutProfile, t_grid: Vec<f64> },
    Anec { state: BMTState, cut: CutProfile, deformation: CutProfile },
    Superadd { state: BMTState, cuts: (CutProfile, CutProfile) },
    ModularCheck { function: ThinTestFunction, cut: CutProfile, epsilon: f64, flow_s: f64 },
    HsmiWitness { function: ThinTestFunction, cuts: (CutProfile, CutProfile), s_grid: Vec<f64> },
    SubspaceLab { seed: u64, count: usize, max_dim: usize },
    ZeroMode { function: ThinTestFunction, cutoffs: Vec<f64> },
}

impl JobKind {
    pub fn label(&self) -> &'static str {
        match self {
            JobKind::Entropy { .. } => "entropy",
            JobKind::QnecSweep { .. } => "qnec-sweep",
            JobKind::Anec { .. } => "anec",
            JobKind::Superadd { .. } => "superadd",
            JobKind::ModularCheck { .. } => "modular-check",
            JobKind::HsmiWitness { .. } => "hsmi-witness",
            JobKind::SubspaceLab { .. } => "subspace-lab",
            JobKind::ZeroMode { .. } => "zero-mode",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    /// File stem for everything the job writes.
    pub output: String,
    pub quad: QuadratureSpec,
    pub kind: JobKind,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: MassShellParams,
    pub quad: QuadratureSpec,
    pub jobs: Vec<Job>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError(format!("parse error: {e}")))?;
        file.params.validate().map_err(|e| ScenarioError(format!("[params]: {e}")))?;
        file.quad.validate().map_err(|e| ScenarioError(format!("[quad]: {e}")))?;
        let dim = file.params.transverse_dim();
        let mut functions = BTreeMap::new();
        for (name, def) in &file.functions {
            let f = build_function(def, dim).map_err(|e| ScenarioError(format!("function `{name}`: {e}")))?;
            functions.insert(name.clone(), f);
        }
        let mut profiles = BTreeMap::new();
        for (name, def) in &file.profiles {
            let p = build_profile(def, dim).map_err(|e| ScenarioError(format!("profile `{name}`: {e}")))?;
            profiles.insert(name.clone(), p);
        }
        let names = Names { functions: &functions, profiles: &profiles };
        let mut jobs = Vec::with_capacity(file.jobs.len());
        for (i, def) in file.jobs.iter().enumerate() {
            let name = def.name.clone().unwrap_or_else(|| format!("job{i}"));
            let job = build_job(def, &name, &file.quad, &names).map_err(|e| ScenarioError(format!("job `{name}`: {e}")))?;
            if jobs.iter().any(|j: &Job| j.name == job.name) {
                return err(format!("job `{name}`: duplicate job name"));
            }
            if jobs.iter().any(|j: &Job| j.output == job.output) {
                return err(format!("job `{name}`: output `{}` is already used", job.output));
            }
            jobs.push(job);
        }
        Ok(Self { params: file.params, quad: file.quad, jobs })
    }

    /// Scales every tolerance of the quadrature settings.
    pub fn with_tol_scale(mut self, x: f64) -> Self {
        self.quad = self.quad.with_tol_scale(x);
        for j in &mut self.jobs {
            j.quad = j.quad.with_tol_scale(x);
        }
        self
    }
}

fn bump(b: &BumpDef) -> Result<SmoothBump, String> {
    SmoothBump::new(b.center, b.half_width, b.amplitude, b.order).map_err(|e| e.to_string())
}

fn sum_of(bumps: &[BumpDef]) -> Result<SmoothFn1D, String> {
    Ok(SmoothFn1D { terms: bumps.iter().map(|b| bump(b).map(|b| (1.0, b))).collect::<Result<_, _>>()? })
}

fn build_function(def: &FunctionDef, dim: usize) -> Result<ThinTestFunction, String> {
    if def.terms.is_empty() {
        return Err("needs at least one term".into());
    }
    let mut terms = Vec::with_capacity(def.terms.len());
    for (i, t) in def.terms.iter().enumerate() {
        let u = match (&t.packet, t.u.is_empty()) {
            (Some(_), false) => return Err(format!("term {i}: give either `u` or `packet`, not both")),
            (None, true) => return Err(format!("term {i}: needs `u` or `packet`")),
            (Some(p), true) => SmoothFn1D::log_packet(p.mid, p.half, p.step).map_err(|e| e.to_string())?,
            (None, false) => sum_of(&t.u)?,
        };
        if t.v.len() != dim {
            return Err(format!("term {i}: `v` has {} transverse factors, expected {dim}", t.v.len()));
        }
        let v = t.v.iter().map(|axis| sum_of(axis)).collect::<Result<Vec<_>, _>>()?;
        terms.push((u, v));
    }
    ThinTestFunction::new(terms).map_err(|e| e.to_string())
}

fn build_profile(def: &ProfileDef, dim: usize) -> Result<CutProfile, String> {
    let mut bumps = Vec::with_capacity(def.bumps.len());
    for (i, b) in def.bumps.iter().enumerate() {
        if b.factors.len() != dim {
            return Err(format!("bump {i} has {} factors, expected {dim}", b.factors.len()));
        }
        let factors = b.factors.iter().map(bump).collect::<Result<Vec<_>, _>>()?;
        bumps.push(ProfileBump { coefficient: b.coefficient, factors });
    }
    let mut p = CutProfile::new(def.base, bumps).map_err(|e| e.to_string())?;
    p.nonneg_flag = def.nonneg;
    if def.nonneg && p.bumps.is_empty() && p.base < 0.0 {
        return Err(format!("declared nonneg but constant {}", p.base));
    }
    Ok(p)
}

struct Names<'a> {
    functions: &'a BTreeMap<String, ThinTestFunction>,
    profiles: &'a BTreeMap<String, CutProfile>,
}

impl Names<'_> {
    fn function(&self, name: &Option<String>, field: &str) -> Result<ThinTestFunction, String> {
        let n = name.as_ref().ok_or_else(|| format!("missing `{field}`"))?;
        self.functions.get(n).cloned().ok_or_else(|| format!("undefined function `{n}`"))
    }

    fn state(&self, name: &Option<String>) -> Result<BMTState, String> {
        BMTState::new(self.function(name, "function")?).map_err(|e| e.to_string())
    }

    fn profile(&self, name: &Option<String>, field: &str) -> Result<CutProfile, String> {
        let n = name.as_ref().ok_or_else(|| format!("missing `{field}`"))?;
        self.profiles.get(n).cloned().ok_or_else(|| format!("undefined profile `{n}`"))
    }

    fn pair(&self, names: &Option<Vec<String>>) -> Result<(CutProfile, CutProfile), String> {
        match names.as_deref() {
            Some([a, b]) => Ok((self.profile(&Some(a.clone()), "cuts")?, self.profile(&Some(b.clone()), "cuts")?)),
            Some(v) => Err(format!("`cuts` needs exactly two profiles, got {}", v.len())),
            None => Err("missing `cuts`".into()),
        }
    }
}

fn finite(values: &[f64], field: &str) -> Result<(), String> {
    match values.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(format!("`{field}` contains non-finite value {x}")),
        None => Ok(()),
    }
}

fn expand_grid(g: &GridDef) -> Result<Vec<f64>, String> {
    let v = match g {
        GridDef::List(v) => v.clone(),
        GridDef::Range { start, stop, points } => {
            if *points < 2 || !(start.is_finite() && stop.is_finite()) || stop <= start {
                return Err(format!("`t_grid` range needs start < stop and points >= 2, got {start}..{stop} x {points}"));
            }
            let h = (stop - start) / (*points - 1) as f64;
            (0..*points).map(|i| if i + 1 == *points { *stop } else { start + i as f64 * h }).collect()
        }
    };
    if v.is_empty() {
        return Err("`t_grid` is empty".into());
    }
    finite(&v, "t_grid")?;
    Ok(v)
}

fn valid_stem(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('.')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn build_job(def: &JobDef, name: &str, quad: &QuadratureSpec, names: &Names) -> Result<Job, String> {
    let allowed: &[&str] = match def.kind.as_str() {
        "entropy" => &["function", "cut"],
        "qnec-sweep" => &["function", "cut", "deformation", "t_grid"],
        "anec" => &["function", "cut", "deformation"],
        "superadd" => &["function", "cuts"],
        "modular-check" => &["function", "cut", "epsilon", "flow_s"],
        "hsmi-witness" => &["function", "cuts", "s_grid"],
        "subspace-lab" => &["seed", "count", "max_dim"],
        "zero-mode" => &["function", "cutoffs"],
        other => {
            let known: Vec<&str> = JOB_KINDS.iter().map(|k| k.0).collect();
            return Err(format!("unknown kind `{other}` (expected one of {})", known.join(", ")));
        }
    };
    if let Some(extra) = def.present().into_iter().find(|f| !allowed.contains(f)) {
        return Err(format!("field `{extra}` does not apply to kind {}", def.kind));
    }
    let output = def.output.clone().unwrap_or_else(|| name.to_string());
    if !valid_stem(&output) {
        return Err(format!("output `{output}` must be a plain file stem of [A-Za-z0-9_.-]"));
    }
    let mut q = *quad;
    if let Some(n) = def.theta_points {
        q.theta_points = n;
    }
    if let Some(n) = def.transverse_points_per_dim {
        q.transverse_points_per_dim = n;
    }
    q.validate().map_err(|e| e.to_string())?;

    let kind = match def.kind.as_str() {
        "entropy" => JobKind::Entropy { state: names.state(&def.function)?, cut: names.profile(&def.cut, "cut")? },
        "qnec-sweep" => JobKind::QnecSweep {
            state: names.state(&def.function)?,
            cut: names.profile(&def.cut, "cut")?,
            deformation: names.profile(&def.deformation, "deformation")?,
            t_grid: expand_grid(def.t_grid.as_ref().ok_or("missing `t_grid`")?)?,
        },
        "anec" => JobKind::Anec {
            state: names.state(&def.function)?,
            cut: names.profile(&def.cut, "cut")?,
            deformation: names.profile(&def.deformation, "deformation")?,
        },
        "superadd" => JobKind::Superadd { state: names.state(&def.function)?, cuts: names.pair(&def.cuts)? },
        "modular-check" => {
            let epsilon = def.epsilon.unwrap_or(1e-4);
            if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 0.1) {
                return Err(format!("`epsilon` must lie in (0, 0.1), got {epsilon}"));
            }
            let flow_s = def.flow_s.unwrap_or(0.25);
            finite(&[flow_s], "flow_s")?;
            JobKind::ModularCheck {
                function: names.function(&def.function, "function")?,
                cut: names.profile(&def.cut, "cut")?,
                epsilon,
                flow_s,
            }
        }
        "hsmi-witness" => {
            let s_grid = def.s_grid.clone().ok_or("missing `s_grid`")?;
            if s_grid.is_empty() {
                return Err("`s_grid` is empty".into());
            }
            finite(&s_grid, "s_grid")?;
            if let Some(s) = s_grid.iter().find(|s| **s < 0.0) {
                return Err(format!("`s_grid` values must be >= 0, got {s}"));
            }
            JobKind::HsmiWitness {
                function: names.function(&def.function, "function")?,
                cuts: names.pair(&def.cuts)?,
                s_grid,
            }
        }
        "subspace-lab" => {
            let count = def.count.unwrap_or(20);
            let max_dim = def.max_dim.unwrap_or(6);
            if count == 0 || count > 10_000 {
                return Err(format!("`count` must lie in 1..=10000, got {count}"));
            }
            if !(2..=16).contains(&max_dim) {
                return Err(format!("`max_dim` must lie in 2..=16, got {max_dim}"));
            }
            JobKind::SubspaceLab { seed: def.seed.unwrap_or(0), count, max_dim }
        }
        "zero-mode" => {
            let cutoffs = def.cutoffs.clone().ok_or("missing `cutoffs`")?;
            finite(&cutoffs, "cutoffs")?;
            if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[1] <= w[0]) || cutoffs[0] <= 0.0 {
                return Err("`cutoffs` needs at least two increasing positive values".into());
            }
            if cutoffs[cutoffs.len() - 1] > 60.0 {
                return Err(format!("`cutoffs` above 60 are not supported, got {}", cutoffs[cutoffs.len() - 1]));
            }
            JobKind::ZeroMode { function: names.function(&def.function, "function")?, cutoffs }
        }
        _ => unreachable!("kind checked above"),
    };
    Ok(Job { name: name.to_string(), output, quad: q, kind })
}
