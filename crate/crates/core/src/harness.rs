//! Seeded sweeps over random instances, JSONL/CSV/text reports.
//!
//! Every trial `i` draws from its own generator seeded with
//! `trial_seed(seed, i)`, so records do not depend on the worker count.
//! Records are sorted by `(trial, position within trial)` before emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::random_unital_cp_channel_with;
use crate::error::{Error, Result};
use crate::fixtures::{conditional_expectation_fixture, davies_fixture, identity_instance};
use crate::gamma::{
    boundary_agreement, build_v_eta, build_v_psi, dpi_limit_check, gamma_zero_residual,
    hirsch_check, jensen_check, lemma1_grid_norm, lemma_mon_check, remark3_check, thm1_rhs,
    thm2_check, InstanceBundle, Intertwiner,
};
use crate::matcore::CMatrix;
use crate::quadrature::QuadratureSpec;
use crate::quantum::State;
use crate::recovery::averaged_recovery;
use crate::regularize::{
    regularization_invariants, regularized_entropy_convergence, DEFAULT_P_GRID,
};
use crate::sampling::{random_state_density, trial_seed, Prng};

pub const SCHEMA_VERSION: u32 = 1;
pub const WORKERS_ENV: &str = "RECLAB_WORKERS";

/// `t` values for the density-dominance check.
pub const LEMMA_MON_TS: [f64; 7] = [0.0, 0.5, -0.5, 2.0, -2.0, 4.0, -4.0];
/// `θ` pair for the limit check.
pub const LIMIT_THETAS: (f64, f64) = (1e-2, 1e-3);
pub const HIRSCH_THETA: f64 = 0.25;
pub const BOUNDARY_TS: [f64; 5] = [-2.0, -0.5, 0.0, 0.7, 3.0];
const DAVIES_BETAS: [f64; 3] = [0.0, 0.5, 2.0];
const DAVIES_TIMES: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub slack_tol: f64,
    pub cert_tol: f64,
    pub psd_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slack_tol: 1e-6,
            cert_tol: 1e-10,
            psd_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub dpi: bool,
    pub thm1: bool,
    pub thm2: bool,
    pub lemma_mon: bool,
    pub limit: bool,
    pub hirsch: bool,
    pub examples: bool,
    pub regularize: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self::all(true)
    }
}

impl Checks {
    pub const NAMES: [&'static str; 8] = [
        "dpi",
        "thm1",
        "thm2",
        "lemma_mon",
        "limit",
        "hirsch",
        "examples",
        "regularize",
    ];

    pub fn all(on: bool) -> Self {
        Self {
            dpi: on,
            thm1: on,
            thm2: on,
            lemma_mon: on,
            limit: on,
            hirsch: on,
            examples: on,
            regularize: on,
        }
    }

    /// Only the named check; `"all"` enables everything. Dashes are accepted for underscores.
    pub fn only(name: &str) -> Result<Self> {
        let name = name.replace('-', "_");
        if name == "all" {
            return Ok(Self::all(true));
        }
        let mut c = Self::all(false);
        let slot = match name.as_str() {
            "dpi" => &mut c.dpi,
            "thm1" => &mut c.thm1,
            "thm2" => &mut c.thm2,
            "lemma_mon" => &mut c.lemma_mon,
            "limit" => &mut c.limit,
            "hirsch" => &mut c.hirsch,
            "examples" => &mut c.examples,
            "regularize" => &mut c.regularize,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unknown check {name:?}; expected one of {} or all",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = true;
        Ok(c)
    }
}

/// Which channel family a sweep draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelFamily {
    #[default]
    Random,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// `(n, m, d)`: channels `M_m → M_n` with dilation dimension `d`; trial `i` uses entry `i mod len`.
    pub dims: Vec<(usize, usize, usize)>,
    pub trials: usize,
    pub q_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub tolerances: Tolerances,
    pub checks: Checks,
    /// Probability that each random state in a trial is drawn rank-deficient.
    pub rank_deficiency: f64,
    pub channel: ChannelFamily,
    /// Worker threads; `RECLAB_WORKERS` overrides, 0 means the rayon default.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0x5eed_2024,
            dims: vec![(2, 2, 2), (3, 3, 2), (2, 3, 2), (3, 2, 3), (4, 2, 2)],
            trials: 500,
            q_list: vec![1.0, 1.5, 2.0],
            s_list: vec![0.6, 0.75, 0.9],
            quadrature: QuadratureSpec::default(),
            tolerances: Tolerances::default(),
            checks: Checks::default(),
            rank_deficiency: 0.1,
            channel: ChannelFamily::Random,
            workers: 0,
        }
    }
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            config_err(
                &format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if self.dims.is_empty() {
            return Err(config_err("dims", "must list at least one (n, m, d)"));
        }
        for (k, &(n, m, d)) in self.dims.iter().enumerate() {
            if n == 0 || m == 0 || d == 0 {
                return Err(config_err(
                    &format!("dims[{k}]"),
                    "dimensions must be positive",
                ));
            }
            if m * d < n {
                return Err(config_err(
                    &format!("dims[{k}]"),
                    format!(
                        "m·d = {} is smaller than n = {n}; no isometry exists",
                        m * d
                    ),
                ));
            }
        }
        for (k, &q) in self.q_list.iter().enumerate() {
            if !(1.0..=2.0).contains(&q) {
                return Err(config_err(
                    &format!("q_list[{k}]"),
                    format!("q must lie in [1, 2], got {q}"),
                ));
            }
        }
        for (k, &s) in self.s_list.iter().enumerate() {
            if !(s > 0.5 && s < 1.0) {
                return Err(config_err(
                    &format!("s_list[{k}]"),
                    format!("s must lie in (1/2, 1), got {s}"),
                ));
            }
        }
        for (name, v) in [
            ("tolerances.slack_tol", self.tolerances.slack_tol),
            ("tolerances.cert_tol", self.tolerances.cert_tol),
            ("tolerances.psd_tol", self.tolerances.psd_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.rank_deficiency) {
            return Err(config_err("rank_deficiency", "must lie in [0, 1]"));
        }
        self.quadrature
            .validate()
            .map_err(|e| config_err("quadrature", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    VacuousInfinite,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::VacuousInfinite => "vacuous-infinite",
            Self::Skipped => "skipped",
        }
    }
}

/// Non-finite values are written as the strings `"inf"`, `"-inf"`, `"nan"`.
mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Tag(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Tag(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number {other:?}"))),
            },
        }
    }
}

/// One line of `records.jsonl`. Keys, in order: `trial`, `check`, `seed`,
/// `dims`, `digest`, `lhs`, `rhs`, `slack`, `status`, `cert_residual`,
/// `note`, `wall_ms`. A record asserts `lhs ≥ rhs`; equalities are written
/// with `slack = −|lhs − rhs|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub check: String,
    pub seed: u64,
    pub dims: (usize, usize, usize),
    pub digest: String,
    #[serde(with = "lenient_f64")]
    pub lhs: f64,
    #[serde(with = "lenient_f64")]
    pub rhs: f64,
    #[serde(with = "lenient_f64")]
    pub slack: f64,
    pub status: Status,
    #[serde(with = "lenient_f64")]
    pub cert_residual: f64,
    pub note: String,
    pub wall_ms: f64,
}

/// What a single check produced before status assignment.
#[derive(Debug, Clone)]
struct Outcome {
    check: String,
    lhs: f64,
    rhs: f64,
    slack: f64,
    cert: f64,
    note: String,
    forced: Option<Status>,
}

impl Outcome {
    fn ineq(check: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let slack = if lhs == f64::INFINITY {
            f64::INFINITY
        } else {
            lhs - rhs
        };
        Self {
            check: check.into(),
            lhs,
            rhs,
            slack,
            cert: f64::NAN,
            note: String::new(),
            forced: None,
        }
    }

    fn equality(check: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self {
            slack: -(lhs - rhs).abs(),
            ..Self::ineq(check, lhs, rhs)
        }
    }

    fn cert(mut self, residual: f64) -> Self {
        self.cert = residual;
        self
    }

    fn skipped(check: impl Into<String>, why: &str) -> Self {
        Self {
            note: why.to_string(),
            forced: Some(Status::Skipped),
            ..Self::ineq(check, f64::NAN, f64::NAN)
        }
    }

    fn vacuous(check: impl Into<String>) -> Self {
        Self {
            note: "support violation: left side is +inf".into(),
            ..Self::ineq(check, f64::INFINITY, f64::NAN)
        }
    }

    fn error(check: impl Into<String>, e: &Error) -> Self {
        Self {
            slack: f64::NEG_INFINITY,
            note: e.to_string(),
            ..Self::ineq(check, f64::NAN, f64::NAN)
        }
    }
}

fn assign_status(o: &mut Outcome, tol: &Tolerances) -> Status {
    if let Some(s) = o.forced {
        return s;
    }
    if o.cert.is_finite() && o.cert > tol.cert_tol {
        o.slack = f64::NEG_INFINITY;
        o.note = format!("certificate residual {:.3e} above cert_tol", o.cert);
    }
    if o.lhs == f64::INFINITY {
        Status::VacuousInfinite
    } else if o.slack < -tol.slack_tol || o.slack.is_nan() {
        Status::Fail
    } else {
        Status::Pass
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes
        .iter()
        .fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn feed_matrix(h: &mut Sha256, m: &CMatrix) {
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for z in m.iter() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
}

/// SHA-256 over the Choi matrix and both densities.
pub fn instance_digest(inst: &InstanceBundle) -> String {
    let mut h = Sha256::new();
    feed_matrix(&mut h, inst.channel.choi());
    feed_matrix(&mut h, inst.rho_a.density());
    feed_matrix(&mut h, inst.sigma_a.density());
    hex(&h.finalize())
}

fn seed_digest(label: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update(seed.to_le_bytes());
    hex(&h.finalize())
}

fn draw_rank(n: usize, p: f64, rng: &mut Prng) -> usize {
    if n > 1 && rng.random::<f64>() < p {
        rng.random_range(1..n)
    } else {
        n
    }
}

struct TrialCtx<'a> {
    cfg: &'a ExperimentConfig,
    index: usize,
    dims: (usize, usize, usize),
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64() * 1e3)
}

fn instance_for(ctx: &TrialCtx, rng: &mut Prng) -> Result<InstanceBundle> {
    let (n, m, d) = ctx.dims;
    match ctx.cfg.channel {
        ChannelFamily::Identity => identity_instance(n, rng),
        ChannelFamily::Random => {
            let channel = random_unital_cp_channel_with(n, m, d, rng)?;
            let rho_rank = draw_rank(n, ctx.cfg.rank_deficiency, rng);
            let sigma_rank = draw_rank(n, ctx.cfg.rank_deficiency, rng);
            let rho = State::new(random_state_density(n, rho_rank, rng))?;
            let sigma = State::new(random_state_density(n, sigma_rank, rng))?;
            InstanceBundle::new(channel, rho, sigma)
        }
    }
}

/// Checks that need `V_ψ`, `V_η` and a faithful reference pair.
fn gamma_checks(ctx: &TrialCtx, inst: &InstanceBundle, out: &mut Vec<(Outcome, f64)>) {
    let c = &ctx.cfg.checks;
    let quad = &ctx.cfg.quadrature;
    let tol = &ctx.cfg.tolerances;
    let mut names: Vec<String> = Vec::new();
    if c.thm1 {
        names.extend(ctx.cfg.q_list.iter().map(|q| format!("thm1[q={q}]")));
    }
    if c.thm2 {
        names.push("thm2".into());
        names.push("remark3".into());
        names.extend(ctx.cfg.s_list.iter().map(|s| format!("jensen[s={s}]")));
    }
    if c.lemma_mon {
        names.push("lemma_mon".into());
    }
    if c.limit {
        names.push("limit-monotone".into());
        names.push("limit-bound".into());
    }
    if c.hirsch {
        names.extend(["hirsch", "lemma1-norm", "gamma-zero", "gamma-boundary"].map(String::from));
    }
    if names.is_empty() {
        return;
    }
    let delta = inst.delta_s();
    if delta.is_infinite() {
        out.extend(names.into_iter().map(|n| (Outcome::vacuous(n), 0.0)));
        return;
    }
    if !(inst.sigma_a.is_faithful() && inst.sigma_b.is_faithful()) {
        out.extend(
            names
                .into_iter()
                .map(|n| (Outcome::skipped(n, "reference state not faithful"), 0.0)),
        );
        return;
    }
    let (vs, t_build) = timed(|| build_v_psi(inst).and_then(|p| Ok((p, build_v_eta(inst)?))));
    let (v_psi, v_eta): (Intertwiner, Intertwiner) = match vs {
        Ok(v) => v,
        Err(e) => {
            out.extend(names.into_iter().map(|n| (Outcome::error(n, &e), t_build)));
            return;
        }
    };

    if c.thm1 {
        for &q in &ctx.cfg.q_list {
            let name = format!("thm1[q={q}]");
            let (r, ms) = timed(|| thm1_rhs(inst, &v_eta, q, quad));
            out.push((
                match r {
                    Ok((rhs, cert)) => Outcome::ineq(name, delta, rhs).cert(cert.residual),
                    Err(e) => Outcome::error(name, &e),
                },
                ms,
            ));
        }
    }
    if c.thm2 {
        let (rec, ms) = timed(|| {
            inst.recovery_spec(*quad)
                .and_then(|s| averaged_recovery(&s))
        });
        match rec {
            Err(e) => {
                out.push((Outcome::error("thm2", &e), ms));
                out.push((Outcome::error("remark3", &e), 0.0));
                for &s in &ctx.cfg.s_list {
                    out.push((Outcome::error(format!("jensen[s={s}]"), &e), 0.0));
                }
            }
            Ok((alpha, cert)) => {
                let push = |out: &mut Vec<(Outcome, f64)>,
                            name: String,
                            r: Result<crate::gamma::InequalityCheck>,
                            ms| {
                    out.push((
                        match r {
                            Ok(c) => Outcome::ineq(name, c.lhs, c.rhs).cert(cert.residual),
                            Err(e) => Outcome::error(name, &e),
                        },
                        ms,
                    ))
                };
                let (r, ms2) = timed(|| thm2_check(inst, &alpha));
                push(out, "thm2".into(), r, ms + ms2);
                let (r, ms2) = timed(|| remark3_check(inst, &alpha));
                push(out, "remark3".into(), r, ms2);
                for &s in &ctx.cfg.s_list {
                    let (r, ms2) = timed(|| jensen_check(inst, &alpha, s));
                    push(out, format!("jensen[s={s}]"), r, ms2);
                }
            }
        }
    }
    if c.lemma_mon {
        let (r, ms) = timed(|| {
            LEMMA_MON_TS
                .iter()
                .map(|&t| lemma_mon_check(inst, &v_eta, t))
                .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
        });
        out.push((
            match r {
                Ok(min) => Outcome::ineq("lemma_mon", min, -tol.psd_tol),
                Err(e) => Outcome::error("lemma_mon", &e),
            },
            ms,
        ));
    }
    if c.limit {
        if !inst.rho_a.is_faithful() {
            out.push((Outcome::skipped("limit-monotone", "ρ_A not faithful"), 0.0));
            out.push((Outcome::skipped("limit-bound", "ρ_A not faithful"), 0.0));
        } else {
            let q = ctx.cfg.q_list.first().copied().unwrap_or(1.0);
            let (r, ms) = timed(|| {
                Ok::<_, Error>((
                    dpi_limit_check(inst, &v_psi, q, LIMIT_THETAS.0)?,
                    dpi_limit_check(inst, &v_psi, q, LIMIT_THETAS.1)?,
                ))
            });
            match r {
                Ok((coarse, fine)) => {
                    out.push((
                        Outcome::ineq("limit-monotone", coarse.gap.abs(), fine.gap.abs()),
                        ms,
                    ));
                    out.push((
                        Outcome::ineq("limit-bound", 1e-2 * (1.0 + delta.abs()), fine.gap.abs()),
                        0.0,
                    ));
                }
                Err(e) => {
                    out.push((Outcome::error("limit-monotone", &e), ms));
                    out.push((Outcome::error("limit-bound", &e), 0.0));
                }
            }
        }
    }
    if c.hirsch {
        let q = ctx.cfg.q_list.last().copied().unwrap_or(2.0);
        let (r, ms) = timed(|| hirsch_check(inst, &v_psi, &v_eta, HIRSCH_THETA, q, quad));
        out.push((
            match r {
                Ok(h) => {
                    Outcome::ineq("hirsch", h.check.lhs, h.check.rhs).cert(h.certificate_residual)
                }
                Err(e) => Outcome::error("hirsch", &e),
            },
            ms,
        ));
        let (r, ms) = timed(|| lemma1_grid_norm(inst, &v_psi));
        out.push((
            match r {
                Ok(norm) => Outcome::ineq("lemma1-norm", 1.0, norm),
                Err(e) => Outcome::error("lemma1-norm", &e),
            },
            ms,
        ));
        let (r, ms) = timed(|| gamma_zero_residual(inst, &v_psi));
        out.push((
            match r {
                Ok(res) => Outcome::equality("gamma-zero", res, 0.0),
                Err(e) => Outcome::error("gamma-zero", &e),
            },
            ms,
        ));
        let (r, ms) = timed(|| boundary_agreement(inst, &v_psi, &v_eta, &BOUNDARY_TS));
        out.push((
            match r {
                Ok(res) => Outcome::equality("gamma-boundary", res, 0.0),
                Err(e) => Outcome::error("gamma-boundary", &e),
            },
            ms,
        ));
    }
}

fn example_checks(ctx: &TrialCtx, rng: &mut Prng, out: &mut Vec<(Outcome, f64)>) {
    let quad = ctx.cfg.quadrature;
    let rank = draw_rank(4, ctx.cfg.rank_deficiency, rng);
    let (r, ms) = timed(|| conditional_expectation_fixture(2, 2, rank, quad, rng));
    match r {
        Ok(rep) => {
            out.push((
                Outcome::equality("condexp-recovery", rep.choi_distance, 0.0)
                    .cert(rep.certificate_residual),
                ms,
            ));
            out.push((
                Outcome::equality("condexp-chain", rep.chain_lhs, rep.chain_rhs),
                0.0,
            ));
        }
        Err(e) => {
            out.push((Outcome::error("condexp-recovery", &e), ms));
            out.push((Outcome::error("condexp-chain", &e), 0.0));
        }
    }
    let i = ctx.index;
    let n = 2 + i % 2;
    let beta = DAVIES_BETAS[(i / 2) % 3];
    let t = DAVIES_TIMES[(i / 6) % 3];
    let rank = draw_rank(n, ctx.cfg.rank_deficiency, rng);
    let (r, ms) = timed(|| davies_fixture(n, beta, t, rank, quad, rng));
    match r {
        Ok(rep) => {
            out.push((
                Outcome::equality("davies-rotation", rep.rotation_distance, 0.0)
                    .cert(rep.certificate_residual),
                ms,
            ));
            out.push((
                Outcome::ineq("davies-bound", rep.bound.lhs, rep.bound.rhs),
                0.0,
            ));
        }
        Err(e) => {
            out.push((Outcome::error("davies-rotation", &e), ms));
            out.push((Outcome::error("davies-bound", &e), 0.0));
        }
    }
}

fn regularize_checks(ctx: &TrialCtx, rng: &mut Prng, out: &mut Vec<(Outcome, f64)>) {
    let n = ctx.dims.0;
    let rank = draw_rank(n, ctx.cfg.rank_deficiency, rng);
    let rho = State::new(random_state_density(n, rank, rng));
    let sigma = State::new(random_state_density(n, n, rng));
    let (r, ms) = timed(|| {
        let (rho, sigma) = (rho?, sigma?);
        let rows = regularized_entropy_convergence(&rho, &sigma, &DEFAULT_P_GRID)?;
        let lem = regularization_invariants(
            &rho,
            &sigma,
            *DEFAULT_P_GRID.last().expect("nonempty grid"),
        )?;
        Ok::<_, Error>((rows, lem))
    });
    match r {
        Ok((rows, lem)) => {
            let k = rows.len();
            out.push((
                Outcome::ineq("regularize-monotone", rows[k - 2].gap, rows[k - 1].gap),
                ms,
            ));
            out.push((Outcome::ineq("regularize-anorm", 1.0, lem.a_norm), 0.0));
            out.push((
                Outcome::equality("regularize-factor", lem.factor_residual, 0.0),
                0.0,
            ));
            out.push((
                Outcome::ineq(
                    "regularize-dominance",
                    lem.dominance_min_eig,
                    -ctx.cfg.tolerances.psd_tol,
                ),
                0.0,
            ));
            // Finite `c_P` ⇔ `1/c_P > 0`.
            let mut maj = Outcome::ineq("regularize-majorization", lem.majorization.recip(), 0.0);
            if !(lem.majorization.is_finite() && lem.majorization > 0.0) {
                maj.slack = f64::NEG_INFINITY;
                maj.note = "majorization constant is infinite".into();
            }
            out.push((maj, 0.0));
        }
        Err(e) => out.push((Outcome::error("regularize-monotone", &e), ms)),
    }
}

fn run_trial(cfg: &ExperimentConfig, index: usize) -> Vec<TrialRecord> {
    let seed = trial_seed(cfg.seed, index as u64);
    let dims = cfg.dims[index % cfg.dims.len()];
    let ctx = TrialCtx { cfg, index, dims };
    let mut rng = Prng::seed_from_u64(seed);
    let mut out: Vec<(Outcome, f64)> = Vec::new();
    let mut digest = seed_digest("trial", seed);

    let c = &cfg.checks;
    let needs_instance = c.dpi || c.thm1 || c.thm2 || c.lemma_mon || c.limit || c.hirsch;
    if needs_instance {
        let (inst, ms) = timed(|| instance_for(&ctx, &mut rng));
        match inst {
            Ok(inst) => {
                digest = instance_digest(&inst);
                if c.dpi {
                    let (o, ms2) = timed(|| {
                        let a = inst.entropy_a();
                        if a.is_infinite() {
                            Outcome::vacuous("dpi")
                        } else {
                            Outcome::ineq("dpi", a, inst.entropy_b())
                        }
                    });
                    out.push((o, ms + ms2));
                }
                gamma_checks(&ctx, &inst, &mut out);
            }
            Err(e) => out.push((Outcome::error("instance", &e), ms)),
        }
    }
    // Fixture draws use a separate stream so toggling instance checks leaves them unchanged.
    let mut fixture_rng = Prng::seed_from_u64(crate::sampling::mix64(seed ^ 0xf1f1_f1f1));
    if c.examples {
        example_checks(&ctx, &mut fixture_rng, &mut out);
    }
    if c.regularize {
        regularize_checks(&ctx, &mut fixture_rng, &mut out);
    }

    out.into_iter()
        .map(|(mut o, ms)| {
            let status = assign_status(&mut o, &cfg.tolerances);
            TrialRecord {
                trial: index,
                check: o.check,
                seed,
                dims,
                digest: digest.clone(),
                lhs: o.lhs,
                rhs: o.rhs,
                slack: o.slack,
                status,
                cert_residual: o.cert,
                note: o.note,
                wall_ms: ms,
            }
        })
        .collect()
}

/// Worker count from `RECLAB_WORKERS`, falling back to `cfg.workers`.
pub fn worker_count(cfg: &ExperimentConfig) -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            config_err(
                WORKERS_ENV,
                format!("expected a non-negative integer, got {v:?}"),
            )
        }),
        Err(_) => Ok(cfg.workers),
    }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let workers = worker_count(cfg)?;
    run_sweep_with_workers(cfg, workers)
}

pub fn run_sweep_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<TrialRecord>> {
    use rayon::prelude::*;
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<TrialRecord>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, i))
            .collect()
    });
    Ok(per_trial.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub count: usize,
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub skipped: usize,
    pub min_slack: f64,
    pub median_slack: f64,
}

/// Per-check counts; slack statistics cover records that were evaluated
/// (pass or fail) and are `NaN` when there are none.
pub fn summarize(records: &[TrialRecord]) -> Vec<CheckSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.check.as_str()) {
            order.push(&r.check);
        }
    }
    order
        .into_iter()
        .map(|name| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.check == name).collect();
            let count_of = |s: Status| rs.iter().filter(|r| r.status == s).count();
            let mut slacks: Vec<f64> = rs
                .iter()
                .filter(|r| matches!(r.status, Status::Pass | Status::Fail))
                .map(|r| r.slack)
                .collect();
            slacks.sort_by(f64::total_cmp);
            let median = match slacks.len() {
                0 => f64::NAN,
                k if k % 2 == 1 => slacks[k / 2],
                k => slacks[k / 2 - 1] + 0.5 * (slacks[k / 2] - slacks[k / 2 - 1]),
            };
            CheckSummary {
                check: name.to_string(),
                count: rs.len(),
                pass: count_of(Status::Pass),
                fail: count_of(Status::Fail),
                vacuous: count_of(Status::VacuousInfinite),
                skipped: count_of(Status::Skipped),
                min_slack: slacks.first().copied().unwrap_or(f64::NAN),
                median_slack: median,
            }
        })
        .collect()
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const CSV_FILE: &str = "summary.csv";
pub const TEXT_FILE: &str = "summary.txt";
pub const CSV_HEADER: &str =
    "check,count,pass,fail,vacuous_infinite,skipped,min_slack,median_slack";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutcome {
    pub failures: usize,
    pub files: Vec<PathBuf>,
}

impl ReportOutcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failures > 0)
    }
}

pub fn records_to_jsonl(records: &[TrialRecord]) -> Result<String> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<TrialRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

fn summary_csv(rows: &[CheckSummary]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:e},{:e}",
            r.check, r.count, r.pass, r.fail, r.vacuous, r.skipped, r.min_slack, r.median_slack
        );
    }
    s
}

pub fn summary_text(rows: &[CheckSummary]) -> String {
    let failures: usize = rows.iter().map(|r| r.fail).sum();
    let total: usize = rows.iter().map(|r| r.count).sum();
    let mut s = String::new();
    let _ = writeln!(s, "{total} records, {failures} failures");
    for r in rows {
        let tag = if r.fail == 0 { "ok  " } else { "FAIL" };
        let _ = writeln!(
            s,
            "{tag} {:<24} {:>5} pass / {:>5} ({} vacuous, {} skipped)  min slack {:.3e}  median {:.3e}",
            r.check, r.pass, r.count, r.vacuous, r.skipped, r.min_slack, r.median_slack
        );
    }
    s
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `records.jsonl`, `summary.csv` and `summary.txt` into `out_dir`.
pub fn emit_reports(records: &[TrialRecord], out_dir: &Path) -> Result<ReportOutcome> {
    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let rows = summarize(records);
    let files = vec![
        write_file(out_dir.join(RECORDS_FILE), &records_to_jsonl(records)?)?,
        write_file(out_dir.join(CSV_FILE), &summary_csv(&rows))?,
        write_file(out_dir.join(TEXT_FILE), &summary_text(&rows))?,
    ];
    Ok(ReportOutcome {
        failures: records.iter().filter(|r| r.status == Status::Fail).count(),
        files,
    })
}
