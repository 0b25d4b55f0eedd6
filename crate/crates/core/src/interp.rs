//! Cycle-accurate interpreter.
//!
//! Each step computes the set of register transfers all active states
//! perform simultaneously in one clock cycle, as a delta environment, then
//! overlays it on the previous state. Every expression is evaluated
//! against the values registers had when the cycle began. The run loop
//! repeats steps until the environment stops changing.

use serde_json::json;
use thiserror::Error;

use crate::ast::*;
use crate::env::{env_equal, overlay, regs, Env, RegKey};

/// How memory bank cells are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MemInit {
    /// All cells start at zero.
    #[default]
    Zero,
    /// All cells start at the bank size (alternate rule, kept for
    /// differential testing against other tools).
    BankSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuntimeErrorKind {
    DivisionByZero,
    MemoryIndexOutOfBounds,
    ConflictingWrite,
    UndefinedRegister,
}

impl std::fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            RuntimeErrorKind::DivisionByZero => "division-by-zero",
            RuntimeErrorKind::MemoryIndexOutOfBounds => "memory-index-out-of-bounds",
            RuntimeErrorKind::ConflictingWrite => "conflicting-write",
            RuntimeErrorKind::UndefinedRegister => "undefined-register",
        };
        f.write_str(name)
    }
}

/// Raised while evaluating a step. Conflicting writes are reported as
/// warnings on the trace instead of aborting the run: the left-biased
/// overlay keeps the first write, matching the static `dup-write` lint.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{kind} in instance `{instance}` at cycle {cycle} ({loc})")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub cycle: u64,
    pub instance: String,
    pub loc: Loc,
    pub detail: String,
}

impl RuntimeError {
    fn at(kind: RuntimeErrorKind, instance: &str, loc: Loc, detail: impl Into<String>) -> Self {
        RuntimeError { kind, cycle: 0, instance: instance.to_string(), loc, detail: detail.into() }
    }
}

/// Builds the initial environment: registers at their declared values,
/// memory cells zeroed, every state register at 1, channels numbered from 1
/// in connection order with cleared status bits, and each stream name bound
/// to its channel number.
pub fn init_env(p: &Program) -> Env {
    init_env_with(p, MemInit::Zero)
}

pub fn init_env_with(p: &Program, mem_init: MemInit) -> Env {
    let mut env = Env::new();
    for inst in &p.instances {
        let m = inst.instance_name.as_str();
        env.insert(RegKey::state_of(m), 1);
        let Some(decl) = p.decl(&inst.decl_name) else { continue };
        for d in &decl.declarations {
            match d {
                Declaration::IntReg { name, init, .. } => {
                    env.insert(RegKey::instance(m, name), *init);
                }
                Declaration::MemBank { name, size, .. } => {
                    let cell = match mem_init {
                        MemInit::Zero => 0,
                        MemInit::BankSize => *size as i64,
                    };
                    for k in 0..*size {
                        env.insert(RegKey::mem_cell(m, name, k as i64), cell);
                    }
                }
                Declaration::InStream { .. } | Declaration::OutStream { .. } => {}
            }
        }
    }
    for (index, con) in p.connections.iter().enumerate() {
        let c = index as u32 + 1;
        env.insert(RegKey::instance(&con.from_instance, &con.from_stream), c as i64);
        env.insert(RegKey::instance(&con.to_instance, &con.to_stream), c as i64);
        env.insert(RegKey::channel(c, regs::READY), 0);
        env.insert(RegKey::channel(c, regs::VALID), 0);
        env.insert(RegKey::channel(c, regs::DATA), 0);
    }
    env
}

fn defined(sigma: &Env, key: &RegKey, m: &str, loc: Loc) -> Result<i64, RuntimeError> {
    sigma.lookup(key).ok_or_else(|| {
        RuntimeError::at(
            RuntimeErrorKind::UndefinedRegister,
            m,
            loc,
            format!("register `{}` is undefined", key),
        )
    })
}

/// Resolves a stream name to its channel number through the environment.
pub fn channel_of(sigma: &Env, m: &str, stream: &str, loc: Loc) -> Result<u32, RuntimeError> {
    let n = defined(sigma, &RegKey::instance(m, stream), m, loc)?;
    u32::try_from(n).ok().filter(|c| *c >= 1).ok_or_else(|| {
        RuntimeError::at(
            RuntimeErrorKind::UndefinedRegister,
            m,
            loc,
            format!("stream `{}` does not hold a channel number", stream),
        )
    })
}

/// Evaluates an expression in instance `m`. Comparisons and the logical
/// operators yield 1 or 0; all arithmetic is wrapping 64-bit two's
/// complement, `/` truncates toward zero, and `%` takes the dividend's sign.
pub fn eval_expr(e: &Expr, sigma: &Env, m: &str) -> Result<i64, RuntimeError> {
    match e {
        Expr::Number { value, .. } => Ok(*value),
        Expr::Ident { name, loc } => defined(sigma, &RegKey::instance(m, name), m, *loc),
        Expr::BinOp { op, lhs, rhs, loc } => {
            let a = eval_expr(lhs, sigma, m)?;
            let b = eval_expr(rhs, sigma, m)?;
            let bool_to_int = |b: bool| if b { 1 } else { 0 };
            Ok(match op {
                BinaryOp::Add => a.wrapping_add(b),
                BinaryOp::Sub => a.wrapping_sub(b),
                BinaryOp::Mul => a.wrapping_mul(b),
                BinaryOp::Div | BinaryOp::Mod => {
                    if b == 0 {
                        return Err(RuntimeError::at(
                            RuntimeErrorKind::DivisionByZero,
                            m,
                            *loc,
                            format!("`{}` with zero divisor", op.symbol()),
                        ));
                    }
                    if *op == BinaryOp::Div {
                        a.wrapping_div(b)
                    } else {
                        a.wrapping_rem(b)
                    }
                }
                BinaryOp::Lt => bool_to_int(a < b),
                BinaryOp::Gt => bool_to_int(a > b),
                BinaryOp::Le => bool_to_int(a <= b),
                BinaryOp::Ge => bool_to_int(a >= b),
                BinaryOp::Eq => bool_to_int(a == b),
                BinaryOp::Ne => bool_to_int(a != b),
                // truth is exactly the value 1, as in guards and Mux
                BinaryOp::And => bool_to_int(a == 1 && b == 1),
                BinaryOp::Or => bool_to_int(a == 1 || b == 1),
            })
        }
        Expr::Mux { cond, then, els, .. } => {
            if eval_expr(cond, sigma, m)? == 1 {
                eval_expr(then, sigma, m)
            } else {
                eval_expr(els, sigma, m)
            }
        }
        Expr::ChannelReady { stream, loc } => {
            let c = channel_of(sigma, m, stream, *loc)?;
            let ready = defined(sigma, &RegKey::channel(c, regs::READY), m, *loc)?;
            let valid = defined(sigma, &RegKey::channel(c, regs::VALID), m, *loc)?;
            Ok(if ready == 1 && valid == 0 { 1 } else { 0 })
        }
        Expr::ChannelValid { stream, loc } => {
            let c = channel_of(sigma, m, stream, *loc)?;
            let ready = defined(sigma, &RegKey::channel(c, regs::READY), m, *loc)?;
            let valid = defined(sigma, &RegKey::channel(c, regs::VALID), m, *loc)?;
            Ok(if ready == 1 && valid == 1 { 1 } else { 0 })
        }
    }
}

/// Selects the next state. Conditions read the same pre-cycle environment
/// as every other expression in the state.
pub fn eval_goto(g: &GotoExpr, sigma: &Env, m: &str) -> Result<u32, RuntimeError> {
    match g {
        GotoExpr::Target { state, .. } => Ok(*state),
        GotoExpr::Mux { cond, then, els, .. } => {
            if eval_expr(cond, sigma, m)? == 1 {
                eval_goto(then, sigma, m)
            } else {
                eval_goto(els, sigma, m)
            }
        }
    }
}

/// Channel reset delta: any channel whose data has been consumed
/// (ready = 0) gets ready raised and valid cleared, making it writable
/// again in the following cycle.
pub fn reset_channels(p: &Program, sigma: &Env) -> Env {
    let mut delta = Env::new();
    for con in &p.connections {
        let Some(c) = sigma
            .lookup(&RegKey::instance(&con.from_instance, &con.from_stream))
            .and_then(|n| u32::try_from(n).ok())
        else {
            continue;
        };
        if sigma.lookup(&RegKey::channel(c, regs::READY)) == Some(0) {
            delta.insert(RegKey::channel(c, regs::READY), 1);
            delta.insert(RegKey::channel(c, regs::VALID), 0);
        }
    }
    delta
}

/// What touched a channel during a cycle. Used to audit the handshake
/// protocol over whole traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOp {
    Write,
    Read,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelEvent {
    pub cycle: u64,
    pub channel: u32,
    pub op: ChannelOp,
    /// Instance performing the operation; `None` for the reset mechanism.
    pub instance: Option<String>,
    pub pre_ready: i64,
    pub pre_valid: i64,
}

/// One step's delta plus instrumentation.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub delta: Env,
    pub events: Vec<ChannelEvent>,
    pub warnings: Vec<RuntimeError>,
}

struct DeltaBuilder {
    delta: Env,
    warnings: Vec<RuntimeError>,
}

impl DeltaBuilder {
    /// First write wins; later writes to the same key only warn.
    fn write(&mut self, key: RegKey, value: i64, cycle: u64, instance: &str, loc: Loc) {
        if self.delta.contains(&key) {
            self.warnings.push(RuntimeError {
                kind: RuntimeErrorKind::ConflictingWrite,
                cycle,
                instance: instance.to_string(),
                loc,
                detail: format!("`{}` is written more than once in this cycle", key),
            });
        } else {
            self.delta.insert(key, value);
        }
    }
}

/// Computes the delta for one clock cycle. For every instance whose current
/// state's guard evaluates to 1, all statements and the state update
/// contribute; guarded-out instances contribute nothing. The channel reset
/// delta is composed last, so module writes take precedence.
pub fn step(p: &Program, sigma: &Env, cycle: u64) -> Result<StepOutput, RuntimeError> {
    let mut b = DeltaBuilder { delta: Env::new(), warnings: Vec::new() };
    let mut events = Vec::new();
    let stamp = |mut e: RuntimeError| {
        e.cycle = cycle;
        e
    };

    for inst in &p.instances {
        let m = inst.instance_name.as_str();
        let Some(decl) = p.decl(&inst.decl_name) else { continue };
        let state_num = defined(sigma, &RegKey::state_of(m), m, inst.loc).map_err(stamp)?;
        let Some(state) = u32::try_from(state_num).ok().and_then(|n| decl.state(n)) else {
            // no declared state matches the state register: the module idles
            continue;
        };

        let guard = match &state.guard {
            Some(g) => eval_expr(g, sigma, m).map_err(stamp)?,
            None => 1,
        };
        if guard != 1 {
            continue;
        }

        for stmt in &state.statements {
            match stmt {
                Statement::Assign { target, value, loc } => {
                    let v = eval_expr(value, sigma, m).map_err(stamp)?;
                    b.write(RegKey::instance(m, target), v, cycle, m, *loc);
                }
                Statement::MemWrite { bank, index, value, loc } => {
                    let idx = eval_expr(index, sigma, m).map_err(stamp)?;
                    bounds_check(decl, m, bank, idx, *loc).map_err(stamp)?;
                    let v = eval_expr(value, sigma, m).map_err(stamp)?;
                    b.write(RegKey::mem_cell(m, bank, idx), v, cycle, m, *loc);
                }
                Statement::MemRead { target, bank, index, loc } => {
                    let idx = eval_expr(index, sigma, m).map_err(stamp)?;
                    bounds_check(decl, m, bank, idx, *loc).map_err(stamp)?;
                    let v = defined(sigma, &RegKey::mem_cell(m, bank, idx), m, *loc)
                        .map_err(stamp)?;
                    b.write(RegKey::instance(m, target), v, cycle, m, *loc);
                }
                Statement::ChannelWrite { stream, value, loc } => {
                    let c = channel_of(sigma, m, stream, *loc).map_err(stamp)?;
                    let v = eval_expr(value, sigma, m).map_err(stamp)?;
                    events.push(ChannelEvent {
                        cycle,
                        channel: c,
                        op: ChannelOp::Write,
                        instance: Some(m.to_string()),
                        pre_ready: sigma.lookup(&RegKey::channel(c, regs::READY)).unwrap_or(0),
                        pre_valid: sigma.lookup(&RegKey::channel(c, regs::VALID)).unwrap_or(0),
                    });
                    b.write(RegKey::channel(c, regs::DATA), v, cycle, m, *loc);
                    b.write(RegKey::channel(c, regs::VALID), 1, cycle, m, *loc);
                }
                Statement::ChannelRead { target, stream, loc } => {
                    let c = channel_of(sigma, m, stream, *loc).map_err(stamp)?;
                    let data =
                        defined(sigma, &RegKey::channel(c, regs::DATA), m, *loc).map_err(stamp)?;
                    events.push(ChannelEvent {
                        cycle,
                        channel: c,
                        op: ChannelOp::Read,
                        instance: Some(m.to_string()),
                        pre_ready: sigma.lookup(&RegKey::channel(c, regs::READY)).unwrap_or(0),
                        pre_valid: sigma.lookup(&RegKey::channel(c, regs::VALID)).unwrap_or(0),
                    });
                    b.write(RegKey::instance(m, target), data, cycle, m, *loc);
                    b.write(RegKey::channel(c, regs::READY), 0, cycle, m, *loc);
                }
            }
        }

        let next = eval_goto(&state.goto, sigma, m).map_err(stamp)?;
        b.write(RegKey::state_of(m), next as i64, cycle, m, state.loc);
    }

    // reset last: module updates win over the reset mechanism
    for con in &p.connections {
        let Some(c) = sigma
            .lookup(&RegKey::instance(&con.from_instance, &con.from_stream))
            .and_then(|n| u32::try_from(n).ok())
        else {
            continue;
        };
        let pre_ready = sigma.lookup(&RegKey::channel(c, regs::READY)).unwrap_or(1);
        if pre_ready == 0 {
            events.push(ChannelEvent {
                cycle,
                channel: c,
                op: ChannelOp::Reset,
                instance: None,
                pre_ready,
                pre_valid: sigma.lookup(&RegKey::channel(c, regs::VALID)).unwrap_or(0),
            });
            b.write(RegKey::channel(c, regs::READY), 1, cycle, "(reset)", con.loc);
            b.write(RegKey::channel(c, regs::VALID), 0, cycle, "(reset)", con.loc);
        }
    }

    Ok(StepOutput { delta: b.delta, events, warnings: b.warnings })
}

fn bounds_check(
    decl: &ModuleDecl,
    m: &str,
    bank: &str,
    idx: i64,
    loc: Loc,
) -> Result<(), RuntimeError> {
    let size = match decl.find(bank) {
        Some(Declaration::MemBank { size, .. }) => *size as i64,
        _ => {
            return Err(RuntimeError::at(
                RuntimeErrorKind::UndefinedRegister,
                m,
                loc,
                format!("`{}` is not a memory bank", bank),
            ))
        }
    };
    if idx < 0 || idx >= size {
        return Err(RuntimeError::at(
            RuntimeErrorKind::MemoryIndexOutOfBounds,
            m,
            loc,
            format!("index {} is outside bank `{}` of size {}", idx, bank, size),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    /// A step changed nothing: the design reached a fixed configuration.
    Stable,
    MaxCyclesReached,
    RuntimeError(RuntimeError),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Stable => "stable",
            RunStatus::MaxCyclesReached => "max-cycles",
            RunStatus::RuntimeError(_) => "runtime-error",
        }
    }
}

/// Recorded execution. With `full_trace` every cycle is kept, otherwise
/// only the first and the last.
#[derive(Debug, Clone)]
pub struct Trace {
    pub snapshots: Vec<(u64, Env)>,
    pub status: RunStatus,
    /// Number of steps executed, including the final no-change step that
    /// detects stability.
    pub cycles: u64,
    pub events: Vec<ChannelEvent>,
    pub warnings: Vec<RuntimeError>,
}

impl Trace {
    pub fn final_env(&self) -> &Env {
        &self.snapshots.last().expect("trace always holds the initial snapshot").1
    }

    pub fn reads(&self) -> usize {
        self.events.iter().filter(|e| e.op == ChannelOp::Read).count()
    }

    pub fn writes(&self) -> usize {
        self.events.iter().filter(|e| e.op == ChannelOp::Write).count()
    }

    /// One block per snapshot: a `cycle N` header followed by the canonical
    /// environment serialization, then a closing status line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (cycle, env) in &self.snapshots {
            out.push_str(&format!("cycle {}\n", cycle));
            out.push_str(&env.to_text());
            out.push('\n');
        }
        match &self.status {
            RunStatus::Stable => {
                out.push_str(&format!("status: stable after {} cycles\n", self.cycles))
            }
            RunStatus::MaxCyclesReached => out.push_str(&format!(
                "status: no stable configuration within {} cycles\n",
                self.cycles
            )),
            RunStatus::RuntimeError(e) => out.push_str(&format!("status: {}\n", e)),
        }
        out
    }

    /// JSON lines: one object per snapshot, then one status object.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for (cycle, env) in &self.snapshots {
            let mut fields = serde_json::Map::new();
            for (k, v) in env.iter() {
                fields.insert(k.to_string(), json!(v));
            }
            let line = json!({ "cycle": cycle, "env": fields });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let status = match &self.status {
            RunStatus::Stable => json!({ "status": "stable", "cycles": self.cycles }),
            RunStatus::MaxCyclesReached => {
                json!({ "status": "max-cycles", "cycles": self.cycles })
            }
            RunStatus::RuntimeError(e) => json!({
                "status": "runtime-error",
                "cycles": self.cycles,
                "kind": e.kind.to_string(),
                "instance": e.instance,
                "line": e.loc.line,
                "col": e.loc.col,
                "detail": e.detail,
            }),
        };
        out.push_str(&status.to_string());
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub max_cycles: u64,
    pub full_trace: bool,
    pub mem_init: MemInit,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { max_cycles: 10_000, full_trace: false, mem_init: MemInit::Zero }
    }
}

/// Runs from the initial environment until a step changes nothing, the
/// cycle budget is exhausted, or a runtime error aborts the design.
pub fn run(p: &Program, max_cycles: u64, trace_mode: bool) -> Trace {
    run_with(p, &RunConfig { max_cycles, full_trace: trace_mode, ..RunConfig::default() })
}

pub fn run_with(p: &Program, cfg: &RunConfig) -> Trace {
    let mut sigma = init_env_with(p, cfg.mem_init);
    let mut snapshots = vec![(0, sigma.clone())];
    let mut events = Vec::new();
    let mut warnings = Vec::new();

    let mut status = RunStatus::MaxCyclesReached;
    let mut cycles = cfg.max_cycles;
    let mut last_completed = 0;
    for cycle in 1..=cfg.max_cycles {
        match step(p, &sigma, cycle) {
            Err(e) => {
                status = RunStatus::RuntimeError(e);
                cycles = cycle;
                break;
            }
            Ok(out) => {
                events.extend(out.events);
                warnings.extend(out.warnings);
                let next = overlay(&out.delta, &sigma);
                let stable = env_equal(&next, &sigma);
                sigma = next;
                last_completed = cycle;
                if cfg.full_trace {
                    snapshots.push((cycle, sigma.clone()));
                }
                if stable {
                    status = RunStatus::Stable;
                    cycles = cycle;
                    break;
                }
            }
        }
    }
    if !cfg.full_trace && last_completed > 0 {
        snapshots.push((last_completed, sigma));
    }
    Trace { snapshots, status, cycles, events, warnings }
}
