//! Independent reference evaluator.
//!
//! A separate, direct transcription of the cycle semantics used to
//! cross-check the interpreter: string-keyed environments, one little map
//! per module combined with an explicit left-biased update, and panics
//! instead of error plumbing. It shares only the syntax tree with the
//! implementation under test.

use std::collections::BTreeMap;

use corechisel::ast::*;
use corechisel::env::{Env, Namespace};

/// `(namespace, register)`; channel namespaces render as their number.
/// Identifiers cannot start with a digit, so the encoding is injective.
pub type Key = (String, String);
pub type OEnv = BTreeMap<Key, i64>;

fn inst(m: &str, reg: &str) -> Key {
    (m.to_string(), reg.to_string())
}

fn chan(c: i64, reg: &str) -> Key {
    (c.to_string(), reg.to_string())
}

fn cell(m: &str, bank: &str, index: i64) -> Key {
    (m.to_string(), format!("{}::{}", bank, index))
}

/// Left-biased update: bindings of `first` win.
fn oplus(first: &OEnv, second: &OEnv) -> OEnv {
    let mut out = second.clone();
    for (k, v) in first {
        out.insert(k.clone(), *v);
    }
    out
}

pub fn initial(p: &Program) -> OEnv {
    let mut env = OEnv::new();
    for mi in &p.instances {
        let m = mi.instance_name.as_str();
        env.insert(inst(m, "state"), 1);
        let decl = p.decl(&mi.decl_name).expect("declaration resolves");
        for d in &decl.declarations {
            match d {
                Declaration::IntReg { name, init, .. } => {
                    env.insert(inst(m, name), *init);
                }
                Declaration::MemBank { name, size, .. } => {
                    for k in 0..*size as i64 {
                        env.insert(cell(m, name, k), 0);
                    }
                }
                _ => {}
            }
        }
    }
    for (i, con) in p.connections.iter().enumerate() {
        let c = i as i64 + 1;
        env.insert(inst(&con.from_instance, &con.from_stream), c);
        env.insert(inst(&con.to_instance, &con.to_stream), c);
        env.insert(chan(c, "ready"), 0);
        env.insert(chan(c, "valid"), 0);
        env.insert(chan(c, "data"), 0);
    }
    env
}

fn get(env: &OEnv, key: &Key) -> i64 {
    *env.get(key).unwrap_or_else(|| panic!("oracle: `{},{}` undefined", key.0, key.1))
}

fn truth(v: bool) -> i64 {
    if v {
        1
    } else {
        0
    }
}

fn eval(e: &Expr, env: &OEnv, m: &str) -> i64 {
    match e {
        Expr::Number { value, .. } => *value,
        Expr::Ident { name, .. } => get(env, &inst(m, name)),
        Expr::BinOp { op, lhs, rhs, .. } => {
            let a = eval(lhs, env, m);
            let b = eval(rhs, env, m);
            match op {
                BinaryOp::Add => a.wrapping_add(b),
                BinaryOp::Sub => a.wrapping_sub(b),
                BinaryOp::Mul => a.wrapping_mul(b),
                BinaryOp::Div => a.wrapping_div(b),
                BinaryOp::Mod => a.wrapping_rem(b),
                BinaryOp::Lt => truth(a < b),
                BinaryOp::Gt => truth(a > b),
                BinaryOp::Le => truth(a <= b),
                BinaryOp::Ge => truth(a >= b),
                BinaryOp::Eq => truth(a == b),
                BinaryOp::Ne => truth(a != b),
                BinaryOp::And => truth(a == 1 && b == 1),
                BinaryOp::Or => truth(a == 1 || b == 1),
            }
        }
        Expr::Mux { cond, then, els, .. } => {
            if eval(cond, env, m) == 1 {
                eval(then, env, m)
            } else {
                eval(els, env, m)
            }
        }
        Expr::ChannelReady { stream, .. } => {
            let c = get(env, &inst(m, stream));
            truth(get(env, &chan(c, "ready")) == 1 && get(env, &chan(c, "valid")) == 0)
        }
        Expr::ChannelValid { stream, .. } => {
            let c = get(env, &inst(m, stream));
            truth(get(env, &chan(c, "ready")) == 1 && get(env, &chan(c, "valid")) == 1)
        }
    }
}

fn eval_goto(g: &GotoExpr, env: &OEnv, m: &str) -> i64 {
    match g {
        GotoExpr::Target { state, .. } => *state as i64,
        GotoExpr::Mux { cond, then, els, .. } => {
            if eval(cond, env, m) == 1 {
                eval_goto(then, env, m)
            } else {
                eval_goto(els, env, m)
            }
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    pub reads: u64,
    pub writes: u64,
}

/// One cycle's total delta, folding per-module deltas and the channel reset
/// with the left-biased update, exactly in program order.
fn transition(p: &Program, env: &OEnv, counts: &mut OpCounts) -> OEnv {
    let mut deltas: Vec<OEnv> = Vec::new();
    for mi in &p.instances {
        let m = mi.instance_name.as_str();
        let decl = p.decl(&mi.decl_name).expect("declaration resolves");
        let current = get(env, &inst(m, "state"));
        let mut module_delta = OEnv::new();
        for state in &decl.states {
            if state.number as i64 != current {
                continue;
            }
            let guard = state.guard.as_ref().map_or(1, |g| eval(g, env, m));
            if guard != 1 {
                continue;
            }
            let mut acc = OEnv::new();
            for stmt in &state.statements {
                let mut one = OEnv::new();
                match stmt {
                    Statement::Assign { target, value, .. } => {
                        one.insert(inst(m, target), eval(value, env, m));
                    }
                    Statement::MemWrite { bank, index, value, .. } => {
                        one.insert(cell(m, bank, eval(index, env, m)), eval(value, env, m));
                    }
                    Statement::MemRead { target, bank, index, .. } => {
                        one.insert(inst(m, target), get(env, &cell(m, bank, eval(index, env, m))));
                    }
                    Statement::ChannelWrite { stream, value, .. } => {
                        let c = get(env, &inst(m, stream));
                        one.insert(chan(c, "data"), eval(value, env, m));
                        one.insert(chan(c, "valid"), 1);
                        counts.writes += 1;
                    }
                    Statement::ChannelRead { target, stream, .. } => {
                        let c = get(env, &inst(m, stream));
                        one.insert(inst(m, target), get(env, &chan(c, "data")));
                        one.insert(chan(c, "ready"), 0);
                        counts.reads += 1;
                    }
                }
                acc = oplus(&acc, &one);
            }
            let goto: OEnv = [(inst(m, "state"), eval_goto(&state.goto, env, m))].into();
            acc = oplus(&acc, &goto);
            module_delta = oplus(&module_delta, &acc);
        }
        deltas.push(module_delta);
    }

    let mut reset = OEnv::new();
    for con in &p.connections {
        let c = get(env, &inst(&con.from_instance, &con.from_stream));
        if get(env, &chan(c, "ready")) == 0 {
            let one: OEnv = [(chan(c, "ready"), 1), (chan(c, "valid"), 0)].into();
            reset = oplus(&reset, &one);
        }
    }
    deltas.push(reset);

    let mut total = OEnv::new();
    for d in &deltas {
        total = oplus(&total, d);
    }
    total
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub final_env: OEnv,
    pub stable: bool,
    pub cycles: u64,
    pub counts: OpCounts,
}

/// Repeats transitions until the environment stops changing.
pub fn run(p: &Program, limit: u64) -> OracleRun {
    let mut env = initial(p);
    let mut counts = OpCounts::default();
    for cycle in 1..=limit {
        let next = oplus(&transition(p, &env, &mut counts), &env);
        if next == env {
            return OracleRun { final_env: env, stable: true, cycles: cycle, counts };
        }
        env = next;
    }
    OracleRun { final_env: env, stable: false, cycles: limit, counts }
}

/// Interpreter environment rendered into the oracle's key space.
pub fn env_to_oracle(env: &Env) -> OEnv {
    env.iter()
        .map(|(k, v)| {
            let ns = match &k.ns {
                Namespace::Channel(c) => c.to_string(),
                Namespace::Instance(name) => name.clone(),
            };
            ((ns, k.reg.clone()), v)
        })
        .collect()
}
