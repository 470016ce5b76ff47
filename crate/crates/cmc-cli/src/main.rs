//! Batch interface to the CMC hierarchy toolkit.
//!
//! Subcommands:
//! - `compute` — build the order-N Killing tower and dump canonical JSON,
//!   including balanced forms and spectral weights.
//! - `verify` — run symbolic verification suites (structure equations,
//!   Jacobi property, conservation laws, AKS flows, mixed flows, tangency,
//!   degree-zero pairing, generating series, the so(4,C) cross-check) on a
//!   freshly built or supplied tower; exit 1 when any residual is nonzero.
//! - `flow` — integrate a truncated AKS flow with fixed-step RK4 from seeded
//!   random twisted data, logging invariant drift, sub-degree leakage and
//!   parity violation.
//! - `pde` — sinh-Gordon diagnostics: vacuum residual on a grid, or the
//!   x-only ODE profile with its first integral.
//! - `export` — derived artifacts: the tower itself, the hierarchy
//!   connection form, or the antisymmetric 4×4 realization.
//!
//! All parameters may come from a flat `key = value` manifest (`--manifest`);
//! explicit flags override it, and unknown manifest keys are rejected.
//! Payloads are deterministic: identical parameters produce byte-identical
//! output, with timestamps confined to stderr.  Exit codes: 0 success,
//! 1 verification failure, 2 invalid input, 3 internal error.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use cmc_core::diffring::DiffPoly;
use cmc_core::hierarchy::{
    assemble_mc, h2_flow, verify_aks_flow, verify_antisymmetry, verify_b0, verify_commuting,
    verify_generating_series, verify_mixed, verify_tangency, verify_y2,
};
use cmc_core::killing::{
    verify_conservation, verify_jacobi, verify_killing, verify_matrix_killing, KillingTower,
};
use cmc_core::numerics::{
    integrate_flow, ode_profile, random_state, sinh_gordon_residual, vacuum_value, Method,
};
use cmc_core::report::CheckReport;
use cmc_core::so4::{build_x, verify_so4};
use cmc_core::CoreError;

const EXIT_OK: u8 = 0;
const EXIT_VERIFY: u8 = 1;

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Internal(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Internal(_) => CliError::Internal(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

#[derive(Parser)]
#[command(
    name = "cmc",
    version,
    about = "Exact and numeric toolkit for the CMC integrable hierarchy"
)]
struct Cli {
    /// Flat `key = value` manifest supplying defaults; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,

    /// Tower order N.
    #[arg(long, short = 'N', global = true, allow_hyphen_values = true)]
    order: Option<i64>,

    /// `symbolic` for the exact commands, a positive real for `pde`.
    #[arg(long, global = true)]
    gamma: Option<String>,

    /// Output format: json (default), csv or text where supported.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Write the payload to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Pass/fail threshold for numeric commands.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tolerance: Option<f64>,

    /// RNG seed for numeric initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress stderr diagnostics.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the order-N Killing tower and dump it as canonical JSON.
    Compute,
    /// Run symbolic verification suites; exit 1 if any residual is nonzero.
    Verify {
        /// killing | jacobi | conservation | aks | mixed | tangency | b0 |
        /// series | so4 | all
        #[arg(long)]
        suite: Option<String>,
        /// Verify a previously exported tower JSON instead of recomputing.
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Integrate a truncated AKS flow with RK4 and log invariant drift.
    Flow {
        /// Truncation degree D of the loop matrix band [1, D].
        #[arg(long)]
        degree: Option<i64>,
        /// Flow level m.
        #[arg(long)]
        m: Option<usize>,
        /// Time step.
        #[arg(long)]
        dt: Option<f64>,
        /// Number of RK4 steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// sinh-Gordon diagnostics: vacuum residual grid or ODE profile.
    Pde {
        /// Check the constant vacuum u ≡ -¼ ln γ² on a grid.
        #[arg(long)]
        vacuum: bool,
        /// Initial u for the ODE profile.
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<f64>,
        /// Initial u_x for the ODE profile.
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<f64>,
        /// Integration horizon for the ODE profile.
        #[arg(long = "T", allow_hyphen_values = true)]
        t_end: Option<f64>,
        /// Time step for the ODE profile.
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        /// Grid points per side for the vacuum residual.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Export derived artifacts: tower | form | x4.
    Export {
        #[arg(long)]
        kind: Option<String>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Compute => "compute",
            Cmd::Verify { .. } => "verify",
            Cmd::Flow { .. } => "flow",
            Cmd::Pde { .. } => "pde",
            Cmd::Export { .. } => "export",
        }
    }
}

const MANIFEST_KEYS: &[&str] = &[
    "command",
    "order",
    "gamma",
    "format",
    "out",
    "tolerance",
    "seed",
    "quiet",
    "suite",
    "input",
    "degree",
    "m",
    "dt",
    "steps",
    "vacuum",
    "u0",
    "v0",
    "T",
    "grid",
    "kind",
];

/// Flat `key = value` manifest; `#` lines and blank lines are ignored.
struct Manifest(BTreeMap<String, String>);

impl Manifest {
    fn load(path: Option<&PathBuf>) -> CliResult<Manifest> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| {
                invalid(format!("cannot read manifest {}: {e}", path.display()))
            })?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return Err(invalid(format!(
                        "manifest line {}: expected `key = value`, got {raw:?}",
                        lineno + 1
                    )));
                };
                let key = k.trim().to_string();
                if !MANIFEST_KEYS.contains(&key.as_str()) {
                    return Err(invalid(format!("unknown manifest key {key:?}")));
                }
                map.insert(key, v.trim().to_string());
            }
        }
        Ok(Manifest(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| invalid(format!("manifest key {key:?}: cannot parse {raw:?}: {e}"))),
        }
    }

    fn get_bool(&self, key: &str) -> CliResult<bool> {
        match self.0.get(key).map(String::as_str) {
            None => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(invalid(format!(
                "manifest key {key:?}: expected a boolean, got {other:?}"
            ))),
        }
    }
}

/// Flag value if given, else manifest value, else default.
fn resolve<T: FromStr>(flag: Option<T>, man: &Manifest, key: &str, default: T) -> CliResult<T>
where
    T::Err: Display,
{
    Ok(flag.or(man.get(key)?).unwrap_or(default))
}

fn resolve_opt<T: FromStr>(flag: Option<T>, man: &Manifest, key: &str) -> CliResult<Option<T>>
where
    T::Err: Display,
{
    Ok(flag.or(man.get(key)?))
}

fn require_symbolic_gamma(gamma: &Option<String>) -> CliResult<()> {
    match gamma.as_deref() {
        None | Some("symbolic") => Ok(()),
        Some(other) => Err(invalid(format!(
            "this command keeps γ symbolic; --gamma {other:?} is not supported here"
        ))),
    }
}

fn numeric_gamma(gamma: &Option<String>) -> CliResult<f64> {
    match gamma.as_deref() {
        None => Ok(1.0),
        Some("symbolic") => Err(invalid("pde needs a numeric γ, not `symbolic`")),
        Some(raw) => raw
            .parse::<f64>()
            .map_err(|e| invalid(format!("cannot parse γ {raw:?}: {e}"))),
    }
}

fn check_order(order: i64) -> CliResult<usize> {
    if order < 0 {
        return Err(invalid(format!("tower order must be ≥ 0, got {order}")));
    }
    if order > 12 {
        return Err(invalid(format!(
            "tower order {order} is beyond the supported range (≤ 12)"
        )));
    }
    Ok(order as usize)
}

fn emit(out: &Option<PathBuf>, payload: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, payload)
            .map_err(|e| invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn json_payload(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serialization cannot fail");
    s.push('\n');
    s
}

/// Everything a command run needs beyond its own parameters.
struct Ctx {
    man: Manifest,
    order: Option<i64>,
    gamma: Option<String>,
    format: String,
    out: Option<PathBuf>,
    tolerance: Option<f64>,
    seed: u64,
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let man = Manifest::load(cli.manifest.as_ref())?;
    if let Some(declared) = man.0.get("command") {
        if declared != cli.command.name() {
            return Err(invalid(format!(
                "manifest is for command {declared:?}, but {:?} was invoked",
                cli.command.name()
            )));
        }
    }
    let ctx = Ctx {
        order: resolve_opt(cli.order, &man, "order")?,
        gamma: resolve_opt(cli.gamma, &man, "gamma")?,
        format: resolve(cli.format, &man, "format", "json".to_string())?,
        out: resolve_opt(cli.out, &man, "out")?,
        tolerance: resolve_opt(cli.tolerance, &man, "tolerance")?,
        seed: resolve(cli.seed, &man, "seed", 7)?,
        quiet: cli.quiet || man.get_bool("quiet")?,
        man,
    };
    if std::env::var("CMC_LOG").as_deref() == Ok("debug") && !ctx.quiet {
        eprintln!("# cmc {}: starting", cli.command.name());
    }
    let code = match &cli.command {
        Cmd::Compute => cmd_compute(&ctx)?,
        Cmd::Verify { suite, input } => cmd_verify(&ctx, suite.clone(), input.clone())?,
        Cmd::Flow { degree, m, dt, steps } => cmd_flow(&ctx, *degree, *m, *dt, *steps)?,
        Cmd::Pde { vacuum, u0, v0, t_end, dt, grid } => {
            cmd_pde(&ctx, *vacuum, *u0, *v0, *t_end, *dt, *grid)?
        }
        Cmd::Export { kind } => cmd_export(&ctx, kind.clone())?,
    };
    if !ctx.quiet {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        eprintln!("# cmc {}: finished at unix {secs}", cli.command.name());
    }
    Ok(code)
}

fn balanced_entry(p: &DiffPoly) -> CliResult<Value> {
    let b = p.balanced_form()?;
    Ok(json!({
        "weight": p.weight(),
        "spectral_weight": b.spectral_weight(),
        "z_polynomial": b.is_z_polynomial(),
        "display": b.to_string(),
    }))
}

fn cmd_compute(ctx: &Ctx) -> CliResult<u8> {
    require_symbolic_gamma(&ctx.gamma)?;
    let order = check_order(
        ctx.order
            .ok_or_else(|| invalid("compute requires --order"))?,
    )?;
    let t = KillingTower::new(order)?;
    let balanced = |entries: &[DiffPoly]| -> CliResult<Vec<Value>> {
        entries.iter().map(balanced_entry).collect()
    };
    let (a, b, c) = (t.a_entries(), t.b_entries(), t.c_entries());
    let payload = match ctx.format.as_str() {
        "json" => json_payload(&json!({
            "command": "compute",
            "order": order,
            "tower": t.to_json(),
            "balanced": {
                "a": balanced(a)?,
                "b": balanced(b)?,
                "c": balanced(c)?,
            },
        })),
        "text" => {
            let mut s = String::new();
            for (name, entries) in [("a", a), ("b", b), ("c", c)] {
                for (n, p) in entries.iter().enumerate() {
                    s.push_str(&format!("{name}[{n}] = {p}\n"));
                }
            }
            s
        }
        other => return Err(invalid(format!("compute supports json or text, not {other:?}"))),
    };
    emit(&ctx.out, &payload)?;
    Ok(EXIT_OK)
}

fn so4_band(order: usize) -> i64 {
    (2 * order as i64 - 2).clamp(0, 8)
}

fn run_suite(t: &KillingTower, suite: &str) -> CliResult<Vec<CheckReport>> {
    let n = t.order();
    let mcap = 2.min(n.saturating_sub(1));
    let mut out = Vec::new();
    match suite {
        "killing" => {
            out.extend(verify_killing(t));
            out.extend(verify_matrix_killing(t)?);
        }
        "jacobi" => out.extend(verify_jacobi(t)?),
        "conservation" => out.extend(verify_conservation(t)?),
        "aks" => {
            for m in 0..=mcap {
                out.extend(verify_aks_flow(t, m)?);
            }
            for m in 0..=mcap {
                for l in m..=mcap {
                    if m + l + 1 <= n {
                        out.push(verify_commuting(t, m, l)?);
                        out.push(verify_antisymmetry(t, m, l)?);
                    }
                    out.push(verify_y2(t, m, l)?);
                }
            }
        }
        "mixed" => {
            for m in 0..=mcap {
                for k in 0..=mcap {
                    if m + k + 1 <= n {
                        out.push(verify_mixed(t, m, k)?);
                    }
                }
            }
        }
        "tangency" => {
            out.extend(verify_tangency(t)?);
            for m in 0..=mcap {
                out.extend(h2_flow(t, m)?.1);
            }
        }
        "b0" => {
            for m in 0..=mcap {
                for k in 0..=mcap {
                    out.extend(verify_b0(t, m, k)?);
                }
            }
        }
        "series" => out.extend(verify_generating_series(t)?),
        "so4" => out.extend(verify_so4(t, so4_band(n))?),
        "all" => {
            for s in [
                "killing",
                "jacobi",
                "conservation",
                "aks",
                "mixed",
                "tangency",
                "b0",
                "series",
                "so4",
            ] {
                out.extend(run_suite(t, s)?);
            }
        }
        other => {
            return Err(invalid(format!(
                "unknown suite {other:?} (expected killing, jacobi, conservation, aks, mixed, \
                 tangency, b0, series, so4 or all)"
            )))
        }
    }
    Ok(out)
}

fn cmd_verify(ctx: &Ctx, suite: Option<String>, input: Option<PathBuf>) -> CliResult<u8> {
    require_symbolic_gamma(&ctx.gamma)?;
    let suite = match suite {
        Some(s) => s,
        None => resolve(None, &ctx.man, "suite", "all".to_string())?,
    };
    let input = match input {
        Some(p) => Some(p),
        None => resolve_opt(None, &ctx.man, "input")?,
    };
    let t = match &input {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| invalid(format!("{} is not JSON: {e}", path.display())))?;
            // accept a bare tower, a `compute` payload, or an `export` payload
            let tower_value = v.get("tower").or_else(|| v.get("artifact")).unwrap_or(&v);
            let t = KillingTower::from_json(tower_value)?;
            if let Some(order) = ctx.order {
                if check_order(order)? != t.order() {
                    return Err(invalid(format!(
                        "input tower has order {}, but --order {order} was given",
                        t.order()
                    )));
                }
            }
            t
        }
        None => KillingTower::new(check_order(ctx.order.unwrap_or(4))?)?,
    };
    let reports = run_suite(&t, &suite)?;
    let pass = cmc_core::report::all_zero(&reports);
    let payload = match ctx.format.as_str() {
        "json" => json_payload(&json!({
            "command": "verify",
            "suite": suite,
            "order": t.order(),
            "pass": pass,
            "reports": reports.iter().map(CheckReport::to_json).collect::<Vec<_>>(),
        })),
        "text" => {
            let mut s = String::new();
            for r in &reports {
                let idx = r
                    .indices
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                if r.residual_zero {
                    s.push_str(&format!("PASS {} [{idx}]\n", r.check));
                } else {
                    s.push_str(&format!(
                        "FAIL {} [{idx}] {}\n",
                        r.check,
                        r.residual_sample.as_deref().unwrap_or("")
                    ));
                }
            }
            s.push_str(&format!(
                "{}: {} checks, {}\n",
                suite,
                reports.len(),
                if pass { "all residuals zero" } else { "FAILURES above" }
            ));
            s
        }
        "csv" => {
            let mut s = String::from("check,indices,pass,sample\n");
            for r in &reports {
                let idx = r
                    .indices
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(" ");
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.check,
                    idx,
                    r.residual_zero,
                    r.residual_sample.as_deref().unwrap_or("").replace(',', ";")
                ));
            }
            s
        }
        other => return Err(invalid(format!("unknown format {other:?}"))),
    };
    emit(&ctx.out, &payload)?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_flow(
    ctx: &Ctx,
    degree: Option<i64>,
    m: Option<usize>,
    dt: Option<f64>,
    steps: Option<usize>,
) -> CliResult<u8> {
    let degree = resolve(degree, &ctx.man, "degree", 12)?;
    let m = resolve(m, &ctx.man, "m", 0)?;
    let dt = resolve(dt, &ctx.man, "dt", 1e-3)?;
    let steps = resolve(steps, &ctx.man, "steps", 1000)?;
    let state = random_state(degree, m, dt, ctx.seed)?;
    let (_, log) = integrate_flow(&state, steps, Method::Rk4)?;
    let payload = match ctx.format.as_str() {
        "json" => json_payload(&json!({
            "command": "flow",
            "degree": degree,
            "m": m,
            "dt": dt,
            "steps": steps,
            "seed": ctx.seed,
            "summary": log.to_json(),
        })),
        "csv" => {
            let mut s = format!(
                "# command=flow degree={degree} m={m} dt={dt} steps={steps} seed={}\n",
                ctx.seed
            );
            s.push_str("step,time,invariant,re,im,rel_drift\n");
            for row in &log.rows {
                for (i, v) in row.values.iter().enumerate() {
                    let scale = log.initial[i].norm().max(1.0);
                    let drift = (v - log.initial[i]).norm() / scale;
                    s.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        row.step, row.time, log.monitors[i], v.re, v.im, drift
                    ));
                }
            }
            s
        }
        other => return Err(invalid(format!("flow supports json or csv, not {other:?}"))),
    };
    emit(&ctx.out, &payload)?;
    if let Some(tol) = ctx.tolerance {
        if log.worst_drift() > tol || log.max_leak > tol.max(1e-12) {
            return Ok(EXIT_VERIFY);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_pde(
    ctx: &Ctx,
    vacuum: bool,
    u0: Option<f64>,
    v0: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    grid: Option<usize>,
) -> CliResult<u8> {
    let gamma = numeric_gamma(&ctx.gamma)?;
    let vacuum = vacuum || ctx.man.get_bool("vacuum")?;
    let tolerance = ctx.tolerance.unwrap_or(1e-8);
    if vacuum {
        if u0.is_some() || v0.is_some() {
            return Err(invalid("choose either --vacuum or an initial profile, not both"));
        }
        let side = resolve(grid, &ctx.man, "grid", 5)?;
        if side < 3 {
            return Err(invalid("vacuum grid needs at least 3 points per side"));
        }
        let u = vacuum_value(gamma)?;
        let field = vec![vec![u; side]; side];
        let residual = sinh_gordon_residual(&field, 0.1, 0.1, gamma)?;
        let max_abs = residual
            .iter()
            .flatten()
            .fold(0.0f64, |w, r| w.max(r.abs()));
        let payload = json_payload(&json!({
            "command": "pde",
            "mode": "vacuum",
            "gamma": gamma,
            "u": u,
            "grid": side,
            "max_abs_residual": max_abs,
        }));
        emit(&ctx.out, &payload)?;
        return Ok(if max_abs <= tolerance { EXIT_OK } else { EXIT_VERIFY });
    }
    let u0 = resolve(u0, &ctx.man, "u0", 0.3)?;
    let v0 = resolve(v0, &ctx.man, "v0", 0.0)?;
    let t_end = resolve(t_end, &ctx.man, "T", 10.0)?;
    let dt = resolve(dt, &ctx.man, "dt", 1e-3)?;
    let log = ode_profile(gamma, u0, v0, t_end, dt)?;
    let payload = match ctx.format.as_str() {
        "json" => json_payload(&json!({
            "command": "pde",
            "mode": "ode",
            "gamma": gamma,
            "u0": u0,
            "v0": v0,
            "T": t_end,
            "dt": dt,
            "summary": log.to_json(),
        })),
        "csv" => {
            let mut s =
                format!("# command=pde mode=ode gamma={gamma} u0={u0} v0={v0} T={t_end} dt={dt}\n");
            s.push_str("x,u,v,energy\n");
            for r in &log.rows {
                s.push_str(&format!("{},{},{},{}\n", r.x, r.u, r.v, r.energy));
            }
            s
        }
        other => return Err(invalid(format!("pde supports json or csv, not {other:?}"))),
    };
    emit(&ctx.out, &payload)?;
    Ok(if log.max_rel_drift <= tolerance { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_export(ctx: &Ctx, kind: Option<String>) -> CliResult<u8> {
    require_symbolic_gamma(&ctx.gamma)?;
    let kind = match kind {
        Some(k) => k,
        None => resolve(None, &ctx.man, "kind", "tower".to_string())?,
    };
    let order = check_order(ctx.order.unwrap_or(3))?;
    let t = KillingTower::new(order)?;
    let artifact = match kind.as_str() {
        "tower" => t.to_json(),
        "form" => {
            let cap = 2.min(order.saturating_sub(1));
            assemble_mc(&t, cap, cap)?.to_json()
        }
        "x4" => build_x(&t).to_json(),
        other => {
            return Err(invalid(format!(
                "unknown export kind {other:?} (expected tower, form or x4)"
            )))
        }
    };
    let payload = json_payload(&json!({
        "command": "export",
        "kind": kind,
        "order": order,
        "artifact": artifact,
    }));
    emit(&ctx.out, &payload)?;
    Ok(EXIT_OK)
}
