//! Command implementations. Each builds its report once as JSON and once
//! as text; both are deterministic for fixed input and flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;
use tnf_core::homological::EstimateConstants;
use tnf_core::iteration::{run_iteration, BoundCheck, IterationContext, StepRecord};
use tnf_core::normal_form::{check_a_condition, check_nonresonant_diffeo, normalize};
use tnf_core::resonance::{enumerate_classes, is_resonant_field};
use tnf_core::schedule::{
    brjuno_sum, build_params, check_assumption, AssumptionBoxes, BrjunoSchedule, EpsilonSchedule, GFunction,
    ItemStatus, MSchedule, RSchedule,
};
use tnf_core::{pushforward_residual, BigRational, Diffeo, MultiIndex, NormParams, QuasilinearData, Series, VectorField};

use crate::args::{BackendArg, Cli, Command, Common, Format, ScheduleArgs};
use crate::backend::{coeff_json, coeff_text, Scalar};
use crate::input::{parse_backend, parse_system, parse_terms, terms_to_field, Backend, InputError, SystemSpec};

/// Largest `m` for which `g(m)` is tabulated from the divisor box.
const MAX_DIVISOR_M: u64 = 1024;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(#[from] InputError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Math(#[from] tnf_core::Error),
}

impl CliError {
    /// 2 for input and usage problems, 3 for mathematical failures.
    pub fn exit_code(&self) -> i32 {
        use tnf_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Math(e) => match e {
                E::NotUnit
                | E::ResonantTerm { .. }
                | E::ZeroDivisor { .. }
                | E::ACondition { .. }
                | E::AllFrequenciesZero
                | E::NoNonResonantIndex { .. }
                | E::NonPositiveG { .. } => 3,
                _ => 2,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Outcome {
    pub text: String,
    pub json: Value,
    pub code: i32,
}

impl Outcome {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("reports serialize");
                s.push('\n');
                s
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load(path: &Path) -> Result<SystemSpec> {
    Ok(parse_system(&read(path)?)?)
}

fn resolve(arg: Option<BackendArg>, spec: &SystemSpec) -> Backend {
    match arg {
        Some(BackendArg::Exact) => Backend::Exact,
        Some(BackendArg::Float) => Backend::Float,
        None => spec.backend,
    }
}

/// Runs the command, returning the report and the requested format.
pub fn run(cli: &Cli) -> Result<(Outcome, Format)> {
    macro_rules! dispatch {
        ($backend:expr, $f:ident ( $($arg:expr),* )) => {
            match $backend {
                Backend::Exact => $f::<BigRational>($($arg),*),
                Backend::Float => $f::<f64>($($arg),*),
            }
        };
    }
    match &cli.command {
        Command::Resonances { common, max_p, max_q } => {
            let spec = load(&common.file)?;
            let out = dispatch!(resolve(common.backend, &spec), resonances(&spec, *max_p, *max_q))?;
            Ok((out, common.format))
        }
        Command::Normalize { common, order } => {
            let spec = load(&common.file)?;
            let out = dispatch!(resolve(common.backend, &spec), normalize_cmd(&spec, *order))?;
            Ok((out, common.format))
        }
        Command::Brjuno {
            file,
            backend,
            format,
            schedule,
            terms,
            steps,
            strict,
        } => {
            let out = match file {
                Some(path) => {
                    let spec = load(path)?;
                    dispatch!(resolve(*backend, &spec), brjuno_cmd(Some(&spec), schedule, *terms, *steps, *strict))?
                }
                None => brjuno_cmd::<f64>(None, schedule, *terms, *steps, *strict)?,
            };
            Ok((out, *format))
        }
        Command::Iterate {
            common,
            schedule,
            steps,
            c_s2,
            zeta0,
            delta0,
            strict,
        } => {
            let spec = load(&common.file)?;
            let opts = IterateOptions {
                steps: *steps,
                c_s2: *c_s2,
                zeta0: *zeta0,
                delta0: *delta0,
                strict: *strict,
            };
            let out = dispatch!(resolve(common.backend, &spec), iterate_cmd(&spec, schedule, &opts))?;
            Ok((out, common.format))
        }
        Command::Verify { common, against } => {
            let spec = load(&common.file)?;
            let report = read(against)?;
            let out = verify_with(&spec, common, &report)?;
            Ok((out, common.format))
        }
    }
}

fn verify_with(spec: &SystemSpec, common: &Common, report: &str) -> Result<Outcome> {
    match resolve(common.backend, spec) {
        Backend::Exact => verify_cmd::<BigRational>(spec, report),
        Backend::Float => verify_cmd::<f64>(spec, report),
    }
}

fn index_json(idx: &MultiIndex) -> Value {
    json!({"P": idx.p(), "Q": idx.q()})
}

fn index_text(idx: &MultiIndex) -> String {
    format!("P={:?} Q={:?}", idx.p(), idx.q())
}

/// Terms in the input format, components 1-based.
pub fn field_json<T: Scalar>(f: &VectorField<T>) -> Value {
    Value::Array(
        f.terms()
            .map(|(l, idx, c)| json!({"component": l + 1, "P": idx.p(), "Q": idx.q(), "coeff": coeff_json(c)}))
            .collect(),
    )
}

fn series_json<T: Scalar>(s: &Series<T>) -> Value {
    Value::Array(
        s.terms()
            .map(|(idx, c)| json!({"P": idx.p(), "Q": idx.q(), "coeff": coeff_json(c)}))
            .collect(),
    )
}

fn field_text<T: Scalar>(out: &mut String, f: &VectorField<T>) {
    for (l, idx, c) in f.terms() {
        let _ = writeln!(out, "  component {}  {}  {}", l + 1, index_text(idx), coeff_text(c));
    }
}

fn header(out: &mut String, command: &str, backend: Backend) {
    let _ = writeln!(out, "tnf {command} (backend {})", backend.name());
}

fn backend_of<T: Scalar>() -> Backend {
    if T::EXACT {
        Backend::Exact
    } else {
        Backend::Float
    }
}

fn resonances<T: Scalar>(spec: &SystemSpec, max_p: u32, max_q: u32) -> Result<Outcome> {
    let qd = spec.quasilinear::<T>();
    let cl = enumerate_classes(&qd, max_p, max_q);
    let backend = backend_of::<T>();
    let mut text = String::new();
    header(&mut text, "resonances", backend);
    let _ = writeln!(text, "box |P| <= {max_p}, |Q| <= {max_q}: {} classes", cl.classes.len());
    let mut classes = Vec::new();
    for (id, class) in cl.classes.iter().enumerate() {
        let resonant = id == cl.zero_class;
        let members: Vec<String> = class.members.iter().map(index_text).collect();
        let _ = writeln!(
            text,
            "  class {id}  divisor {}{}  [{}]",
            coeff_text(&class.value),
            if resonant { "  resonant" } else { "" },
            members.join("; ")
        );
        classes.push(json!({
            "divisor": coeff_json(&class.value),
            "resonant": resonant,
            "members": class.members.iter().map(index_json).collect::<Vec<_>>(),
        }));
    }
    let json = json!({
        "command": "resonances",
        "backend": backend.name(),
        "max_p": max_p,
        "max_q": max_q,
        "class_count": cl.classes.len(),
        "classes": classes,
    });
    Ok(Outcome { text, json, code: 0 })
}

fn normalize_cmd<T: Scalar>(spec: &SystemSpec, order: Option<u32>) -> Result<Outcome> {
    let order = order.unwrap_or(spec.cap);
    if order > spec.cap {
        return Err(CliError::Usage(format!("--order {order} exceeds the system's cap {}", spec.cap)));
    }
    let qd = spec.quasilinear::<T>();
    let res = normalize(&spec.field::<T>(), &qd, order, &spec.norm)?;
    let n_part = &res.nf - &qd.s_field(order);
    let a_cond = match check_a_condition(&res.nf, &qd, order) {
        Ok(ac) => Some(ac),
        Err(tnf_core::Error::AllFrequenciesZero) => None,
        Err(e) => return Err(e.into()),
    };
    let phi_nonresonant = check_nonresonant_diffeo(&res.phi, &qd, order)?;
    let backend = backend_of::<T>();

    let mut text = String::new();
    header(&mut text, "normalize", backend);
    let _ = writeln!(text, "order {order}");
    let _ = writeln!(text, "normal form S + N, N with {} terms", n_part.num_terms());
    field_text(&mut text, &n_part);
    let _ = writeln!(
        text,
        "Phi - Id with {} terms ({})",
        res.phi.displacement().num_terms(),
        if phi_nonresonant { "nonresonant" } else { "has resonant terms" }
    );
    field_text(&mut text, res.phi.displacement());
    let residuals: Vec<String> = res.per_order_residuals.iter().map(|r| format!("{r:e}")).collect();
    let _ = writeln!(text, "residuals by order: {}", residuals.join(" "));
    let a_json = match &a_cond {
        Some(ac) => {
            match &ac.witness {
                Some(w) => {
                    let _ = writeln!(text, "A-condition holds, witness a with {} terms", w.len());
                    for (idx, c) in w.terms() {
                        let _ = writeln!(text, "  {}  {}", index_text(idx), coeff_text(c));
                    }
                }
                None => {
                    let _ = writeln!(text, "A-condition fails");
                }
            }
            json!({"holds": ac.holds, "witness": ac.witness.as_ref().map(series_json)})
        }
        None => {
            let _ = writeln!(text, "A-condition not applicable: all frequencies vanish");
            Value::Null
        }
    };
    let json = json!({
        "command": "normalize",
        "backend": backend.name(),
        "order": order,
        "nf": field_json(&n_part),
        "phi": field_json(res.phi.displacement()),
        "phi_nonresonant": phi_nonresonant,
        "residuals": res.per_order_residuals,
        "a_condition": a_json,
    });
    Ok(Outcome { text, json, code: 0 })
}

/// Reads `phi` and `nf` of a normalize report and recomputes the
/// conjugacy residuals against the system.
fn verify_cmd<T: Scalar>(spec: &SystemSpec, report: &str) -> Result<Outcome> {
    let root: Value =
        serde_json::from_str(report).map_err(|e| InputError::new("$", format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| InputError::new("$", "expected a normalize report object"))?;
    if obj.get("command").and_then(Value::as_str) != Some("normalize") {
        return Err(InputError::new("command", "expected a report of `tnf normalize`").into());
    }
    if let Some(b) = obj.get("backend") {
        parse_backend(b, "backend")?;
    }
    let order = obj
        .get("order")
        .and_then(Value::as_u64)
        .and_then(|o| u32::try_from(o).ok())
        .ok_or_else(|| InputError::new("order", "expected a non-negative integer"))?;
    if order > spec.cap {
        return Err(InputError::new("order", format!("order {order} exceeds the system's cap {}", spec.cap)).into());
    }
    let (d, n) = (spec.d, spec.n);
    let mut parsed = Vec::new();
    for key in ["phi", "nf"] {
        let v = obj
            .get(key)
            .ok_or_else(|| InputError::new("$", format!("missing field `{key}`")))?;
        let terms = parse_terms(v, key, d, n)?;
        for (i, t) in terms.iter().enumerate() {
            let limit = if t.component < d { order } else { order + 1 };
            if t.index.q_norm() > limit {
                return Err(InputError::new(format!("{key}[{i}].Q"), format!("beyond order {order}")).into());
            }
        }
        parsed.push(terms_to_field::<T>(d, n, order, &terms));
    }
    let qd = spec.quasilinear::<T>();
    let n_part = parsed.pop().expect("two fields");
    let phi = Diffeo::from_displacement(parsed.pop().expect("two fields"));
    let nf = &qd.s_field(order) + &n_part;
    let f = spec.field::<T>().truncate(order)?;
    let residuals = (1..=order)
        .map(|k| pushforward_residual(&f, &phi, &nf, k, &spec.norm))
        .collect::<tnf_core::Result<Vec<f64>>>()?;
    let tolerance = if T::EXACT {
        0.0
    } else {
        qd.tol().res * f.norm(&spec.norm)
    };
    let nf_resonant = is_resonant_field(&n_part, &qd);
    let verified = nf_resonant && residuals.iter().all(|&r| r <= tolerance);
    let backend = backend_of::<T>();

    let mut text = String::new();
    header(&mut text, "verify", backend);
    let _ = writeln!(text, "order {order}, tolerance {tolerance:e}");
    let shown: Vec<String> = residuals.iter().map(|r| format!("{r:e}")).collect();
    let _ = writeln!(text, "residuals by order: {}", shown.join(" "));
    let _ = writeln!(text, "N resonant: {nf_resonant}");
    let _ = writeln!(text, "{}", if verified { "verified" } else { "NOT verified" });
    let json = json!({
        "command": "verify",
        "backend": backend.name(),
        "order": order,
        "residuals": residuals,
        "tolerance": tolerance,
        "nf_resonant": nf_resonant,
        "verified": verified,
    });
    Ok(Outcome {
        text,
        json,
        code: if verified { 0 } else { 3 },
    })
}

fn parse_mk(s: &str) -> Result<MSchedule> {
    match s {
        "doubling" => Ok(MSchedule::Doubling),
        "saturating" => Ok(MSchedule::Saturating),
        list => list
            .split(',')
            .map(|x| x.trim().parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(MSchedule::List)
            .map_err(|_| CliError::Usage(format!("--mk: expected doubling, saturating or a list of integers, got `{s}`"))),
    }
}

fn read_gtable(path: &Path) -> Result<BTreeMap<u64, f64>> {
    let text = read(path)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| InputError::new("$", format!("invalid JSON: {e}")))?;
    let obj = v
        .as_object()
        .ok_or_else(|| InputError::new("$", "expected an object mapping m to g(m)"))?;
    let mut table = BTreeMap::new();
    for (k, v) in obj {
        let m = k
            .parse::<u64>()
            .map_err(|_| InputError::new(k.as_str(), "keys must be integers m"))?;
        let g = v
            .as_f64()
            .ok_or_else(|| InputError::new(k.as_str(), "expected a number"))?;
        table.insert(m, g);
    }
    Ok(table)
}

/// `g` from the flags, or tabulated from the divisors of `qd` at
/// `m_0, ..., m_{last}`.
fn build_schedule<T: Scalar>(
    args: &ScheduleArgs,
    qd: Option<&QuasilinearData<T>>,
    horizon: usize,
    last: usize,
    r0: f64,
) -> Result<BrjunoSchedule> {
    let m = parse_mk(&args.mk)?;
    let g = if let Some(src) = &args.gform {
        let params: BTreeMap<String, f64> = args.gparams.iter().cloned().collect();
        GFunction::parse(src, &params)?
    } else if let Some(path) = &args.gtable {
        GFunction::Table(read_gtable(path)?)
    } else {
        let qd = qd.ok_or_else(|| CliError::Usage("without a system file, --gform or --gtable is required".into()))?;
        let ms = (0..=last).map(|k| m.m(k)).collect::<tnf_core::Result<Vec<_>>>()?;
        if let Some(&big) = ms.iter().find(|&&v| v > MAX_DIVISOR_M) {
            return Err(CliError::Usage(format!(
                "g from the divisors is limited to m <= {MAX_DIVISOR_M} (needed m = {big}); pass --gform or --gtable"
            )));
        }
        GFunction::from_divisors(qd, &ms)?
    };
    if !r0.is_finite() || r0 <= 0.0 {
        return Err(CliError::Usage(format!("--r0 must be positive, got {r0}")));
    }
    Ok(BrjunoSchedule {
        g,
        m,
        epsilon: Some(EpsilonSchedule::Aurouet { margin: args.eps_margin }),
        r: RSchedule::Aurouet { r0 },
        horizon,
    })
}

fn status_json(s: &ItemStatus) -> Value {
    match s {
        ItemStatus::Pass => json!({"status": "pass"}),
        ItemStatus::Fail { k, index, detail } => json!({
            "status": "fail",
            "k": k,
            "index": index.as_ref().map(index_json),
            "detail": detail,
        }),
        ItemStatus::Skipped(why) => json!({"status": "skipped", "detail": why}),
    }
}

fn status_text(s: &ItemStatus) -> String {
    match s {
        ItemStatus::Pass => "pass".into(),
        ItemStatus::Fail { k, index, detail } => match index {
            Some(idx) => format!("FAIL at k = {k}, {}: {detail}", index_text(idx)),
            None => format!("FAIL at k = {k}: {detail}"),
        },
        ItemStatus::Skipped(why) => format!("skipped: {why}"),
    }
}

fn opt_f64(r: tnf_core::Result<f64>) -> Value {
    r.ok().map_or(Value::Null, |x| json!(x))
}

fn brjuno_cmd<T: Scalar>(
    spec: Option<&SystemSpec>,
    args: &ScheduleArgs,
    terms: Option<usize>,
    steps: usize,
    strict: bool,
) -> Result<Outcome> {
    let qd = spec.map(SystemSpec::quasilinear::<T>);
    let has_g = args.gform.is_some() || args.gtable.is_some();
    let terms = terms.unwrap_or(if has_g { 40 } else { steps });
    let r0 = args.r0.or(spec.map(|s| s.norm.r)).unwrap_or(1.0);
    let sched = build_schedule(args, qd.as_ref(), steps, terms.max(steps + 1), r0)?;
    let sum = brjuno_sum(&sched, terms)?;
    let boxes = AssumptionBoxes {
        steps,
        ..AssumptionBoxes::default()
    };
    let assumption = qd.as_ref().map(|qd| check_assumption(qd, &sched, &boxes)).transpose()?;

    let mut text = String::new();
    header(&mut text, "brjuno", backend_of::<T>());
    let _ = writeln!(text, "{}, m schedule {}", sched.g, sched.m);
    let _ = writeln!(text, "B = {:.12} over {} terms (last summand {:e})", sum.value, sum.terms, sum.last_term);
    let mut seq = Vec::new();
    for k in 0..=steps {
        let m = sched.m(k).ok();
        let g = sched.g_k(k);
        let eps = sched.eps(k).and_then(|e| e.ok());
        let r = sched.r(k);
        let fmt = |x: &tnf_core::Result<f64>| x.as_ref().map_or("-".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(
            text,
            "  k = {k}  m = {}  g(m) = {}  eps = {}  r = {}",
            m.map_or("-".into(), |m| m.to_string()),
            fmt(&g),
            eps.map_or("-".into(), |e| format!("{e:.6}")),
            fmt(&r)
        );
        seq.push(json!({"k": k, "m": m, "g": opt_f64(g), "epsilon": eps, "r": opt_f64(r)}));
    }
    let mut failed = false;
    let assumption_json = match &assumption {
        Some(rep) => {
            let _ = writeln!(text, "assumption items:");
            let mut items = Vec::new();
            for it in &rep.items {
                failed |= matches!(it.status, ItemStatus::Fail { .. });
                let _ = writeln!(text, "  {}. {} [{}]: {}", it.item, it.description, it.scope, status_text(&it.status));
                let mut entry = Map::new();
                entry.insert("item".into(), json!(it.item));
                entry.insert("description".into(), json!(it.description));
                entry.insert("scope".into(), json!(it.scope));
                entry.insert("result".into(), status_json(&it.status));
                items.push(Value::Object(entry));
            }
            json!({"all_pass": rep.all_pass(), "items": items})
        }
        None => Value::Null,
    };
    let json = json!({
        "command": "brjuno",
        "g": sched.g.to_string(),
        "m_schedule": sched.m.to_string(),
        "brjuno_sum": {"value": sum.value, "last_term": sum.last_term, "terms": sum.terms},
        "sequences": seq,
        "assumption": assumption_json,
    });
    Ok(Outcome {
        text,
        json,
        code: if strict && failed { 4 } else { 0 },
    })
}

struct IterateOptions {
    steps: usize,
    c_s2: f64,
    zeta0: Option<f64>,
    delta0: Option<f64>,
    strict: bool,
}

fn bound_json(b: &Option<BoundCheck>) -> Value {
    b.map_or(Value::Null, |b| json!({"value": b.value, "bound": b.bound, "holds": b.holds()}))
}

fn bound_text(name: &str, b: &Option<BoundCheck>) -> String {
    match b {
        Some(b) => format!(
            "{name} {:.3e} <= {:.3e}{}",
            b.value,
            b.bound,
            if b.holds() { "" } else { " VIOLATED" }
        ),
        None => format!("{name} -"),
    }
}

fn record_json(r: &StepRecord) -> Value {
    let h = &r.homological;
    json!({
        "k": r.k,
        "m_k": r.m_k,
        "m_next": r.m_next,
        "removed_terms": r.removed_terms,
        "witness_terms": r.witness_terms,
        "next_order": r.next_order,
        "order_ok": r.order_ok,
        "step_residual": r.step_residual,
        "psi_residual": r.psi_residual,
        "r_norm_ref": r.r_norm_ref,
        "r_next_norm_ref": r.r_next_norm_ref,
        "bounds": {
            "r": bound_json(&r.r_norm),
            "n": bound_json(&r.n_norm),
            "phi": bound_json(&r.phi_norm),
            "dphi": bound_json(&r.dphi_norm),
            "dpsi": bound_json(&r.dpsi_norm),
        },
        "homological": {
            "low_terms": h.low_terms,
            "high_terms": h.high_terms,
            "norm_g_low": h.norm_g_low,
            "norm_g_high": h.norm_g_high,
            "bound_g_low": h.bound_g_low,
            "bound_g_high": h.bound_g_high,
            "a_distance": h.a_distance,
            "within_bounds": h.within_bounds(),
        },
        "bounds_hold": r.bounds_hold(),
    })
}

fn iterate_cmd<T: Scalar>(spec: &SystemSpec, args: &ScheduleArgs, opts: &IterateOptions) -> Result<Outcome> {
    let qd = spec.quasilinear::<T>();
    let f = spec.field::<T>();
    let r0 = args.r0.unwrap_or(spec.norm.r);
    let sched = build_schedule(args, Some(&qd), opts.steps + 1, opts.steps + 2, r0)?;
    let delta0 = opts.delta0.unwrap_or(spec.norm.delta);
    let start = NormParams::new(sched.r(0)?, delta0)?;
    let zeta0 = opts.zeta0.unwrap_or_else(|| spec.perturbation::<T>().norm(&start));
    let params = build_params(&qd, &sched, delta0, zeta0, opts.c_s2)?;
    let ctx = IterationContext {
        qd: &qd,
        sched: &sched,
        params: Some(&params),
        constants: EstimateConstants::default(),
        reference: spec.norm,
    };
    let trace = run_iteration(&f, &ctx, opts.steps)?;
    let violations = !params.zeta0_ok || !params.eta_ok || trace.records.iter().any(|r| !r.bounds_hold());
    let backend = backend_of::<T>();

    let mut text = String::new();
    header(&mut text, "iterate", backend);
    let _ = writeln!(text, "{}, m schedule {}, C''_S = {}", sched.g, sched.m, opts.c_s2);
    let _ = writeln!(
        text,
        "zeta_0 = {:.6e} (bound {:.6e}: {}), eta <= 1/8: {}, zeta decreasing: {}",
        zeta0,
        params.zeta0_bound,
        if params.zeta0_ok { "ok" } else { "VIOLATED" },
        if params.eta_ok { "ok" } else { "VIOLATED" },
        params.zeta_decreasing
    );
    for r in &trace.records {
        let _ = writeln!(
            text,
            "step {}  m {} -> {}  removed {}  order(R') {}{}  |R| {:.6e} -> {:.6e}  residuals {:e} / {:e}",
            r.k,
            r.m_k,
            r.m_next,
            r.removed_terms,
            r.next_order,
            if r.order_ok { "" } else { " (below m_next)" },
            r.r_norm_ref,
            r.r_next_norm_ref,
            r.step_residual,
            r.psi_residual
        );
        let _ = writeln!(
            text,
            "  {}; {}; {}; {}; {}",
            bound_text("|R_k|", &r.r_norm),
            bound_text("|N_k - S|", &r.n_norm),
            bound_text("|Phi - Id|", &r.phi_norm),
            bound_text("|DPhi - I|", &r.dphi_norm),
            bound_text("|DPsi - I|", &r.dpsi_norm)
        );
    }
    let n_part = &trace.state.n - &qd.s_field(f.cap());
    let _ = writeln!(
        text,
        "final: {} steps, R {}, N - S with {} terms, Psi - Id with {} terms",
        trace.records.len(),
        if trace.reached_fixed_point { "vanishes" } else { "nonzero" },
        n_part.num_terms(),
        trace.psi.displacement().num_terms()
    );
    let json = json!({
        "command": "iterate",
        "backend": backend.name(),
        "g": sched.g.to_string(),
        "m_schedule": sched.m.to_string(),
        "params": {
            "c_s2": params.c_s2,
            "d2": params.d2,
            "delta": params.delta,
            "zeta": params.zeta,
            "eta": params.eta,
            "zeta0": zeta0,
            "zeta0_bound": params.zeta0_bound,
            "zeta0_ok": params.zeta0_ok,
            "eta_ok": params.eta_ok,
            "zeta_decreasing": params.zeta_decreasing,
            "brjuno_partial_sum": params.brjuno.value,
        },
        "steps": trace.records.iter().map(record_json).collect::<Vec<_>>(),
        "reached_fixed_point": trace.reached_fixed_point,
        "nf": field_json(&n_part),
        "remainder_terms": trace.state.r.num_terms(),
        "psi": field_json(trace.psi.displacement()),
        "bound_violations": violations,
    });
    Ok(Outcome {
        text,
        json,
        code: if opts.strict && violations { 4 } else { 0 },
    })
}
