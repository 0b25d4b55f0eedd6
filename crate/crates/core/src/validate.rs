//! Static checks over parsed programs.
//!
//! [`check_structure`] enforces the invariants every well-formed syntax tree
//! must satisfy (unique names, resolvable references, an initial state).
//! [`validate_program`] adds the semantic rules for memory discipline,
//! channel connectivity, and communication guards; it assumes a
//! structurally sound program and reports violations as diagnostics
//! instead of failing.

use std::collections::HashMap;

use crate::ast::*;
use crate::diag::{codes, sort_diagnostics, Diagnostic};

/// Checks the structural invariants of the tree. Run by `parse_program` on
/// everything it produces, including partial trees after syntax errors.
pub fn check_structure(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    let mut seen = HashMap::new();
    for inst in &p.instances {
        if let Some(_first) = seen.insert(inst.instance_name.clone(), inst.loc) {
            diags.push(Diagnostic::error(
                codes::DUP_NAME,
                format!("duplicate instance name `{}`", inst.instance_name),
                inst.loc.line,
                inst.loc.col,
            ));
        }
        if p.decl(&inst.decl_name).is_none() {
            diags.push(Diagnostic::error(
                codes::UNRESOLVED,
                format!(
                    "unresolved module declaration `{}` for instance `{}`",
                    inst.decl_name, inst.instance_name
                ),
                inst.loc.line,
                inst.loc.col,
            ));
        }
    }

    let mut seen = HashMap::new();
    for decl in &p.declarations {
        if seen.insert(decl.name.clone(), decl.loc).is_some() {
            diags.push(Diagnostic::error(
                codes::DUP_NAME,
                format!("duplicate module declaration `{}`", decl.name),
                decl.loc.line,
                decl.loc.col,
            ));
        }
        check_module_structure(decl, &mut diags);
    }

    for con in &p.connections {
        check_endpoint(p, &con.from_instance, &con.from_stream, true, con.loc, &mut diags);
        check_endpoint(p, &con.to_instance, &con.to_stream, false, con.loc, &mut diags);
    }
    let mut endpoints = HashMap::new();
    for con in &p.connections {
        for (inst, stream) in [
            (&con.from_instance, &con.from_stream),
            (&con.to_instance, &con.to_stream),
        ] {
            if endpoints.insert((inst.clone(), stream.clone()), con.loc).is_some() {
                diags.push(Diagnostic::error(
                    codes::STREAM_CONN,
                    format!("stream `{}.{}` is connected more than once", inst, stream),
                    con.loc.line,
                    con.loc.col,
                ));
            }
        }
    }

    sort_diagnostics(&mut diags);
    diags
}

fn check_endpoint(
    p: &Program,
    instance: &str,
    stream: &str,
    is_out: bool,
    loc: Loc,
    diags: &mut Vec<Diagnostic>,
) {
    let Some(decl) = p.decl_for_instance(instance) else {
        if !p.instances.iter().any(|i| i.instance_name == instance) {
            diags.push(Diagnostic::error(
                codes::UNRESOLVED,
                format!("connection references unknown instance `{}`", instance),
                loc.line,
                loc.col,
            ));
        }
        return;
    };
    match decl.find(stream) {
        None => diags.push(Diagnostic::error(
            codes::UNRESOLVED,
            format!("instance `{}` has no stream `{}`", instance, stream),
            loc.line,
            loc.col,
        )),
        Some(Declaration::OutStream { .. }) if !is_out => diags.push(Diagnostic::error(
            codes::STREAM_DIR,
            format!("`{}.{}` is an outstream but is used as a connection target", instance, stream),
            loc.line,
            loc.col,
        )),
        Some(Declaration::InStream { .. }) if is_out => diags.push(Diagnostic::error(
            codes::STREAM_DIR,
            format!("`{}.{}` is an instream but is used as a connection source", instance, stream),
            loc.line,
            loc.col,
        )),
        Some(Declaration::OutStream { .. }) | Some(Declaration::InStream { .. }) => {}
        Some(other) => diags.push(Diagnostic::error(
            codes::UNRESOLVED,
            format!(
                "`{}.{}` is not a stream (declared as `{}`)",
                instance,
                stream,
                other.name()
            ),
            loc.line,
            loc.col,
        )),
    }
}

fn check_module_structure(m: &ModuleDecl, diags: &mut Vec<Diagnostic>) {
    let mut names = HashMap::new();
    for d in &m.declarations {
        if names.insert(d.name().to_string(), d.loc()).is_some() {
            diags.push(Diagnostic::error(
                codes::DUP_NAME,
                format!("duplicate declaration `{}` in module `{}`", d.name(), m.name),
                d.loc().line,
                d.loc().col,
            ));
        }
        if let Declaration::MemBank { name, size: 0, loc } = d {
            diags.push(Diagnostic::error(
                codes::SYNTAX,
                format!("memory bank `{}` must have size at least 1", name),
                loc.line,
                loc.col,
            ));
        }
    }

    let mut numbers = HashMap::new();
    for s in &m.states {
        if numbers.insert(s.number, s.loc).is_some() {
            diags.push(Diagnostic::error(
                codes::DUP_NAME,
                format!("duplicate state {} in module `{}`", s.number, m.name),
                s.loc.line,
                s.loc.col,
            ));
        }
    }
    if !m.states.is_empty() && m.state(1).is_none() {
        diags.push(Diagnostic::error(
            codes::UNRESOLVED,
            format!("module `{}` has no state 1 (execution starts there)", m.name),
            m.loc.line,
            m.loc.col,
        ));
    }

    for s in &m.states {
        if let Some(g) = &s.guard {
            check_expr(m, g, diags);
        }
        for stmt in &s.statements {
            check_statement(m, stmt, diags);
        }
        check_goto(m, &s.goto, diags);
    }
}

fn is_int_reg(m: &ModuleDecl, name: &str) -> bool {
    matches!(m.find(name), Some(Declaration::IntReg { .. }))
}

fn check_target(m: &ModuleDecl, target: &str, loc: Loc, diags: &mut Vec<Diagnostic>) {
    if !is_int_reg(m, target) {
        diags.push(Diagnostic::error(
            codes::UNRESOLVED,
            format!("assignment target `{}` is not a declared register in module `{}`", target, m.name),
            loc.line,
            loc.col,
        ));
    }
}

fn check_statement(m: &ModuleDecl, stmt: &Statement, diags: &mut Vec<Diagnostic>) {
    match stmt {
        Statement::Assign { target, value, loc } => {
            check_target(m, target, *loc, diags);
            check_expr(m, value, diags);
        }
        Statement::MemWrite { bank, index, value, loc } => {
            if !matches!(m.find(bank), Some(Declaration::MemBank { .. })) {
                diags.push(Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("`{}` is not a declared memory bank in module `{}`", bank, m.name),
                    loc.line,
                    loc.col,
                ));
            }
            check_expr(m, index, diags);
            check_expr(m, value, diags);
        }
        Statement::MemRead { target, bank, index, loc } => {
            check_target(m, target, *loc, diags);
            if !matches!(m.find(bank), Some(Declaration::MemBank { .. })) {
                diags.push(Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("`{}` is not a declared memory bank in module `{}`", bank, m.name),
                    loc.line,
                    loc.col,
                ));
            }
            check_expr(m, index, diags);
        }
        Statement::ChannelWrite { stream, value, loc } => {
            match m.find(stream) {
                Some(Declaration::OutStream { .. }) => {}
                Some(_) => diags.push(Diagnostic::error(
                    codes::STREAM_DIR,
                    format!("write() requires an outstream, but `{}` is not one", stream),
                    loc.line,
                    loc.col,
                )),
                None => diags.push(Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("`{}` is not a declared stream in module `{}`", stream, m.name),
                    loc.line,
                    loc.col,
                )),
            }
            check_expr(m, value, diags);
        }
        Statement::ChannelRead { target, stream, loc } => {
            check_target(m, target, *loc, diags);
            match m.find(stream) {
                Some(Declaration::InStream { .. }) => {}
                Some(_) => diags.push(Diagnostic::error(
                    codes::STREAM_DIR,
                    format!("read() requires an instream, but `{}` is not one", stream),
                    loc.line,
                    loc.col,
                )),
                None => diags.push(Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("`{}` is not a declared stream in module `{}`", stream, m.name),
                    loc.line,
                    loc.col,
                )),
            }
        }
    }
}

fn check_expr(m: &ModuleDecl, e: &Expr, diags: &mut Vec<Diagnostic>) {
    match e {
        Expr::Ident { name, loc } => {
            if !is_int_reg(m, name) {
                diags.push(Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("register `{}` is not declared in module `{}`", name, m.name),
                    loc.line,
                    loc.col,
                ));
            }
        }
        Expr::Number { .. } => {}
        Expr::BinOp { lhs, rhs, .. } => {
            check_expr(m, lhs, diags);
            check_expr(m, rhs, diags);
        }
        Expr::Mux { cond, then, els, .. } => {
            check_expr(m, cond, diags);
            check_expr(m, then, diags);
            check_expr(m, els, diags);
        }
        Expr::ChannelReady { stream, loc } | Expr::ChannelValid { stream, loc } => {
            match m.find(stream) {
                Some(Declaration::InStream { .. }) | Some(Declaration::OutStream { .. }) => {}
                _ => diags.push(Diagnostic::error(
                    codes::UNRESOLVED,
                    format!("`{}` is not a declared stream in module `{}`", stream, m.name),
                    loc.line,
                    loc.col,
                )),
            }
        }
    }
}

fn check_goto(m: &ModuleDecl, g: &GotoExpr, diags: &mut Vec<Diagnostic>) {
    match g {
        GotoExpr::Target { state, loc } => {
            if m.state(*state).is_none() {
                diags.push(Diagnostic::error(
                    codes::GOTO_TARGET,
                    format!("goto target {} is not a declared state in module `{}`", state, m.name),
                    loc.line,
                    loc.col,
                ));
            }
        }
        GotoExpr::Mux { cond, then, els, .. } => {
            check_expr(m, cond, diags);
            check_goto(m, then, diags);
            check_goto(m, els, diags);
        }
    }
}

/// Runs the semantic lint rules on a parsed program:
///
/// * at most one read and one write per memory bank per state (error)
/// * every stream endpoint of every instance connected exactly once (error)
/// * communication statements guarded by the matching `ready()`/`valid()`
///   test (warning: an unguarded design is still well defined, the module
///   simply updates the channel without waiting)
/// * duplicate assignment targets in one state (warning: the first
///   assignment wins)
/// * every goto target resolves (error)
///
/// The result is deterministic and ordered by source position.
pub fn validate_program(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    for decl in &p.declarations {
        for s in &decl.states {
            check_memory_discipline(decl, s, &mut diags);
            check_comm_guards(decl, s, &mut diags);
            check_duplicate_targets(decl, s, &mut diags);
            check_goto(decl, &s.goto, &mut diags);
        }
    }
    check_connectivity(p, &mut diags);

    sort_diagnostics(&mut diags);
    diags
}

fn check_memory_discipline(m: &ModuleDecl, s: &StateDecl, diags: &mut Vec<Diagnostic>) {
    let mut writes: HashMap<&str, u32> = HashMap::new();
    let mut reads: HashMap<&str, u32> = HashMap::new();
    for stmt in &s.statements {
        match stmt {
            Statement::MemWrite { bank, loc, .. } => {
                let n = writes.entry(bank).or_insert(0);
                *n += 1;
                if *n > 1 {
                    diags.push(Diagnostic::error(
                        codes::MEM_ACCESS,
                        format!(
                            "more than one write to memory bank `{}` in state {} of module `{}`",
                            bank, s.number, m.name
                        ),
                        loc.line,
                        loc.col,
                    ));
                }
            }
            Statement::MemRead { bank, loc, .. } => {
                let n = reads.entry(bank).or_insert(0);
                *n += 1;
                if *n > 1 {
                    diags.push(Diagnostic::error(
                        codes::MEM_ACCESS,
                        format!(
                            "more than one read from memory bank `{}` in state {} of module `{}`",
                            bank, s.number, m.name
                        ),
                        loc.line,
                        loc.col,
                    ));
                }
            }
            _ => {}
        }
    }
}

fn guard_tests_ready(guard: Option<&Expr>, stream: &str) -> bool {
    guard.is_some_and(|g| expr_contains(g, &|e| matches!(e, Expr::ChannelReady { stream: s, .. } if s == stream)))
}

fn guard_tests_valid(guard: Option<&Expr>, stream: &str) -> bool {
    guard.is_some_and(|g| expr_contains(g, &|e| matches!(e, Expr::ChannelValid { stream: s, .. } if s == stream)))
}

fn expr_contains(e: &Expr, pred: &dyn Fn(&Expr) -> bool) -> bool {
    if pred(e) {
        return true;
    }
    match e {
        Expr::BinOp { lhs, rhs, .. } => expr_contains(lhs, pred) || expr_contains(rhs, pred),
        Expr::Mux { cond, then, els, .. } => {
            expr_contains(cond, pred) || expr_contains(then, pred) || expr_contains(els, pred)
        }
        _ => false,
    }
}

fn check_comm_guards(m: &ModuleDecl, s: &StateDecl, diags: &mut Vec<Diagnostic>) {
    for stmt in &s.statements {
        match stmt {
            Statement::ChannelWrite { stream, loc, .. }
                if !guard_tests_ready(s.guard.as_ref(), stream) =>
            {
                diags.push(Diagnostic::warning(
                    codes::COMM_GUARD,
                    format!(
                        "state {} of module `{}` writes `{}` without a `when {}.ready()` guard",
                        s.number, m.name, stream, stream
                    ),
                    loc.line,
                    loc.col,
                ));
            }
            Statement::ChannelRead { stream, loc, .. }
                if !guard_tests_valid(s.guard.as_ref(), stream) =>
            {
                diags.push(Diagnostic::warning(
                    codes::COMM_GUARD,
                    format!(
                        "state {} of module `{}` reads `{}` without a `when {}.valid()` guard",
                        s.number, m.name, stream, stream
                    ),
                    loc.line,
                    loc.col,
                ));
            }
            _ => {}
        }
    }
}

fn check_duplicate_targets(m: &ModuleDecl, s: &StateDecl, diags: &mut Vec<Diagnostic>) {
    let mut written: HashMap<String, Loc> = HashMap::new();
    for stmt in &s.statements {
        let (key, what, loc) = match stmt {
            Statement::Assign { target, loc, .. }
            | Statement::MemRead { target, loc, .. }
            | Statement::ChannelRead { target, loc, .. } => {
                (target.clone(), format!("register `{}`", target), *loc)
            }
            Statement::ChannelWrite { stream, loc, .. } => {
                (format!("{}.write", stream), format!("stream `{}`", stream), *loc)
            }
            Statement::MemWrite { .. } => continue, // memory discipline covers banks
        };
        if written.insert(key, loc).is_some() {
            diags.push(Diagnostic::warning(
                codes::DUP_WRITE,
                format!(
                    "{} is assigned more than once in state {} of module `{}`; the first assignment wins",
                    what, s.number, m.name
                ),
                loc.line,
                loc.col,
            ));
        }
    }
}

fn check_connectivity(p: &Program, diags: &mut Vec<Diagnostic>) {
    for inst in &p.instances {
        let Some(decl) = p.decl(&inst.decl_name) else { continue };
        for d in &decl.declarations {
            let is_out = match d {
                Declaration::OutStream { .. } => true,
                Declaration::InStream { .. } => false,
                _ => continue,
            };
            let count = p
                .connections
                .iter()
                .filter(|c| {
                    if is_out {
                        c.from_instance == inst.instance_name && c.from_stream == d.name()
                    } else {
                        c.to_instance == inst.instance_name && c.to_stream == d.name()
                    }
                })
                .count();
            if count == 0 {
                diags.push(Diagnostic::error(
                    codes::STREAM_CONN,
                    format!(
                        "stream `{}.{}` is never connected",
                        inst.instance_name,
                        d.name()
                    ),
                    inst.loc.line,
                    inst.loc.col,
                ));
            } else if count > 1 {
                diags.push(Diagnostic::error(
                    codes::STREAM_CONN,
                    format!(
                        "stream `{}.{}` is connected {} times",
                        inst.instance_name,
                        d.name(),
                        count
                    ),
                    inst.loc.line,
                    inst.loc.col,
                ));
            }
        }
    }
}
