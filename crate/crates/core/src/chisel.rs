//! Translation to standard Chisel.
//!
//! Each module declaration becomes a Chisel `Module` with Decoupled stream
//! ports, a state register starting at 1, and a `switch` over the states.
//! Channels become instances of a generated `ChannelBuf` module that keeps
//! the data word plus registered ready/valid bits and applies the reset
//! rule, so the emitted design clocks through the same handshake sequence
//! the interpreter does. The output is deterministic and meant to be
//! cross-checked manually against a Chisel emulator; nothing here runs
//! Scala.

use crate::ast::*;

#[derive(Debug, Clone)]
pub struct EmitterConfig {
    /// Register and channel width in bits.
    pub width: u32,
    /// Name of the generated top module (and the suggested file name).
    pub top_module: String,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        EmitterConfig { width: 32, top_module: "Top".to_string() }
    }
}

/// Scala reserved words plus names the generated module scope already uses.
fn scala_safe(name: &str) -> String {
    const RESERVED: &[&str] = &[
        "abstract", "case", "catch", "class", "def", "do", "else", "extends", "false", "final",
        "finally", "for", "forSome", "if", "implicit", "import", "lazy", "match", "new", "null",
        "object", "override", "package", "private", "protected", "return", "sealed", "super",
        "this", "throw", "trait", "true", "try", "type", "var", "while", "with", "yield",
        // names bound by chisel3.Module or the generated code itself
        "io", "clock", "reset", "state",
    ];
    if RESERVED.contains(&name) {
        format!("{}_r", name)
    } else {
        name.to_string()
    }
}

/// Emits one Scala source file for the whole design.
pub fn emit_chisel(p: &Program, cfg: &EmitterConfig) -> String {
    let mut out = String::new();
    out.push_str("import chisel3._\n");
    out.push_str("import chisel3.util._\n\n");
    emit_channel_buf(&mut out, cfg);
    for decl in &p.declarations {
        emit_module(&mut out, decl, cfg);
    }
    emit_top(&mut out, p, cfg);
    out
}

fn emit_channel_buf(out: &mut String, cfg: &EmitterConfig) {
    let w = cfg.width;
    out.push_str(&format!(
        "// One-place channel with registered status bits. Writing requires\n\
         // ready && !valid and sets valid; reading requires ready && valid and\n\
         // clears ready; a cleared ready resets to ready && !valid one cycle later.\n\
         class ChannelBuf extends Module {{\n\
         \x20 val io = IO(new Bundle {{\n\
         \x20   val wr = Flipped(Decoupled(SInt({w}.W)))\n\
         \x20   val rd = Decoupled(SInt({w}.W))\n\
         \x20 }})\n\
         \x20 val data = RegInit(0.S({w}.W))\n\
         \x20 val ready = RegInit(false.B)\n\
         \x20 val valid = RegInit(false.B)\n\
         \x20 io.wr.ready := ready && !valid\n\
         \x20 io.rd.valid := ready && valid\n\
         \x20 io.rd.bits := data\n\
         \x20 when(io.wr.fire) {{\n\
         \x20   data := io.wr.bits\n\
         \x20   valid := true.B\n\
         \x20 }}\n\
         \x20 when(io.rd.fire) {{\n\
         \x20   ready := false.B\n\
         \x20 }}.elsewhen(!ready) {{\n\
         \x20   ready := true.B\n\
         \x20   valid := false.B\n\
         \x20 }}\n\
         }}\n\n"
    ));
}

fn emit_module(out: &mut String, m: &ModuleDecl, cfg: &EmitterConfig) {
    let w = cfg.width;
    out.push_str(&format!("class {} extends Module {{\n", scala_safe(&m.name)));
    out.push_str("  val io = IO(new Bundle {\n");
    for d in &m.declarations {
        match d {
            Declaration::InStream { name, .. } => out.push_str(&format!(
                "    val {} = Flipped(Decoupled(SInt({}.W)))\n",
                scala_safe(name),
                w
            )),
            Declaration::OutStream { name, .. } => {
                out.push_str(&format!("    val {} = Decoupled(SInt({}.W))\n", scala_safe(name), w))
            }
            _ => {}
        }
    }
    out.push_str("  })\n");

    for d in &m.declarations {
        match d {
            Declaration::IntReg { name, init, .. } => out.push_str(&format!(
                "  val {} = RegInit({}.S({}.W))\n",
                scala_safe(name),
                init,
                w
            )),
            Declaration::MemBank { name, size, .. } => {
                out.push_str(&format!("  val {} = Mem({}, SInt({}.W))\n", scala_safe(name), size, w))
            }
            _ => {}
        }
    }
    out.push_str("  val state = RegInit(1.U(16.W))\n\n");

    // default port drive: no communication unless a state asks for it
    for d in &m.declarations {
        match d {
            Declaration::InStream { name, .. } => {
                out.push_str(&format!("  io.{}.ready := false.B\n", scala_safe(name)))
            }
            Declaration::OutStream { name, .. } => {
                let n = scala_safe(name);
                out.push_str(&format!("  io.{}.valid := false.B\n", n));
                out.push_str(&format!("  io.{}.bits := 0.S\n", n));
            }
            _ => {}
        }
    }

    out.push_str("\n  switch(state) {\n");
    for s in &m.states {
        out.push_str(&format!("    is({}.U) {{\n", s.number));
        let (indent, close) = match &s.guard {
            Some(g) => {
                out.push_str(&format!("      when({}) {{\n", emit_cond(g)));
                ("        ", true)
            }
            None => ("      ", false),
        };
        for stmt in &s.statements {
            emit_statement(out, indent, stmt);
        }
        out.push_str(&format!("{}state := {}\n", indent, emit_goto(&s.goto)));
        if close {
            out.push_str("      }\n");
        }
        out.push_str("    }\n");
    }
    out.push_str("  }\n");
    out.push_str("}\n\n");
}

fn emit_statement(out: &mut String, indent: &str, stmt: &Statement) {
    match stmt {
        Statement::Assign { target, value, .. } => {
            out.push_str(&format!("{}{} := {}\n", indent, scala_safe(target), emit_value(value)));
        }
        Statement::MemWrite { bank, index, value, .. } => {
            out.push_str(&format!(
                "{}{}(({}).asUInt) := {}\n",
                indent,
                scala_safe(bank),
                emit_value(index),
                emit_value(value)
            ));
        }
        Statement::MemRead { target, bank, index, .. } => {
            out.push_str(&format!(
                "{}{} := {}(({}).asUInt)\n",
                indent,
                scala_safe(target),
                scala_safe(bank),
                emit_value(index)
            ));
        }
        Statement::ChannelWrite { stream, value, .. } => {
            let n = scala_safe(stream);
            out.push_str(&format!("{}io.{}.valid := true.B\n", indent, n));
            out.push_str(&format!("{}io.{}.bits := {}\n", indent, n, emit_value(value)));
        }
        Statement::ChannelRead { target, stream, .. } => {
            let n = scala_safe(stream);
            out.push_str(&format!("{}io.{}.ready := true.B\n", indent, n));
            out.push_str(&format!("{}{} := io.{}.bits\n", indent, scala_safe(target), n));
        }
    }
}

/// Expression in value position: everything is SInt; comparisons and logic
/// produce 0 or 1.
fn emit_value(e: &Expr) -> String {
    match e {
        Expr::Number { value, .. } => format!("{}.S", value),
        Expr::Ident { name, .. } => scala_safe(name),
        Expr::BinOp { op, lhs, rhs, .. } => match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => {
                let sym = match op {
                    BinaryOp::Add => "+",
                    BinaryOp::Sub => "-",
                    BinaryOp::Mul => "*",
                    BinaryOp::Div => "/",
                    _ => "%",
                };
                format!("({} {} {})", emit_value(lhs), sym, emit_value(rhs))
            }
            _ => format!("Mux({}, 1.S, 0.S)", emit_cond(e)),
        },
        Expr::Mux { cond, then, els, .. } => {
            format!("Mux({}, {}, {})", emit_cond(cond), emit_value(then), emit_value(els))
        }
        Expr::ChannelReady { .. } | Expr::ChannelValid { .. } => {
            format!("Mux({}, 1.S, 0.S)", emit_cond(e))
        }
    }
}

/// Expression in condition position: a Bool that is true exactly when the
/// value semantics yields 1.
///
/// Status tests map to the port signal visible on the module's side of the
/// handshake: `out.ready()` on an outstream and `in.valid()` on an instream,
/// the directions communication guards use. The opposite-direction peeks
/// are not observable through a Decoupled port and keep the same mapping.
fn emit_cond(e: &Expr) -> String {
    match e {
        Expr::BinOp { op, lhs, rhs, .. } => match op {
            BinaryOp::Lt => format!("({} < {})", emit_value(lhs), emit_value(rhs)),
            BinaryOp::Gt => format!("({} > {})", emit_value(lhs), emit_value(rhs)),
            BinaryOp::Le => format!("({} <= {})", emit_value(lhs), emit_value(rhs)),
            BinaryOp::Ge => format!("({} >= {})", emit_value(lhs), emit_value(rhs)),
            BinaryOp::Eq => format!("({} === {})", emit_value(lhs), emit_value(rhs)),
            BinaryOp::Ne => format!("({} =/= {})", emit_value(lhs), emit_value(rhs)),
            BinaryOp::And => format!("({} && {})", emit_cond(lhs), emit_cond(rhs)),
            BinaryOp::Or => format!("({} || {})", emit_cond(lhs), emit_cond(rhs)),
            _ => format!("({} === 1.S)", emit_value(e)),
        },
        Expr::ChannelReady { stream, .. } => format!("io.{}.ready", scala_safe(stream)),
        Expr::ChannelValid { stream, .. } => format!("io.{}.valid", scala_safe(stream)),
        _ => format!("({} === 1.S)", emit_value(e)),
    }
}

fn emit_goto(g: &GotoExpr) -> String {
    match g {
        GotoExpr::Target { state, .. } => format!("{}.U", state),
        GotoExpr::Mux { cond, then, els, .. } => {
            format!("Mux({}, {}, {})", emit_cond(cond), emit_goto(then), emit_goto(els))
        }
    }
}

fn emit_top(out: &mut String, p: &Program, cfg: &EmitterConfig) {
    out.push_str(&format!("class {} extends Module {{\n", scala_safe(&cfg.top_module)));
    for inst in &p.instances {
        out.push_str(&format!(
            "  val {} = Module(new {})\n",
            scala_safe(&inst.instance_name),
            scala_safe(&inst.decl_name)
        ));
    }
    for (index, con) in p.connections.iter().enumerate() {
        let chan = format!("chan{}", index + 1);
        out.push_str(&format!("  val {} = Module(new ChannelBuf)\n", chan));
        out.push_str(&format!(
            "  {}.io.wr <> {}.io.{}\n",
            chan,
            scala_safe(&con.from_instance),
            scala_safe(&con.from_stream)
        ));
        out.push_str(&format!(
            "  {}.io.{} <> {}.io.rd\n",
            scala_safe(&con.to_instance),
            scala_safe(&con.to_stream),
            chan
        ));
    }
    out.push_str("}\n");
}

/// Suggested file name for the emitted source.
pub fn output_file_name(cfg: &EmitterConfig) -> String {
    format!("{}.scala", cfg.top_module)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    const SENDREC: &str = include_str!("../corpus/sendrec.cc.txt");

    fn parsed(src: &str) -> Program {
        parse_program(src).program.expect("test program parses")
    }

    fn count(haystack: &str, needle: &str) -> usize {
        haystack.matches(needle).count()
    }

    #[test]
    fn send_receive_emits_both_module_classes_and_the_connection() {
        let scala = emit_chisel(&parsed(SENDREC), &EmitterConfig::default());
        assert!(scala.contains("class Sender extends Module"));
        assert!(scala.contains("class Receiver extends Module"));
        assert_eq!(count(&scala, "Module(new ChannelBuf)"), 1);
        assert!(scala.contains("chan1.io.wr <> sender.io.out"));
        assert!(scala.contains("receiver.io.in <> chan1.io.rd"));
    }

    #[test]
    fn every_state_statement_and_connection_has_a_marker() {
        let p = parsed(SENDREC);
        let scala = emit_chisel(&p, &EmitterConfig::default());
        let states: usize = p.declarations.iter().map(|d| d.states.len()).sum();
        assert_eq!(count(&scala, "    is("), states);
        assert_eq!(count(&scala, "Module(new ChannelBuf)"), p.connections.len());
        // one state register per module declaration
        assert_eq!(count(&scala, "val state = RegInit(1.U"), p.declarations.len());
        // communication statements drive the handshake
        assert!(scala.contains("io.out.valid := true.B"));
        assert!(scala.contains("io.in.ready := true.B"));
        assert!(scala.contains("x := io.in.bits"));
    }

    #[test]
    fn guarded_states_emit_when_clauses() {
        let scala = emit_chisel(&parsed(SENDREC), &EmitterConfig::default());
        assert!(scala.contains("when(io.out.ready)"));
        assert!(scala.contains("when(io.in.valid)"));
    }

    #[test]
    fn minimal_module_emits_a_single_switch_arm() {
        let scala = emit_chisel(
            &parsed("val m = Module(M) module M state 1 goto 1"),
            &EmitterConfig::default(),
        );
        assert_eq!(count(&scala, "    is("), 1);
        assert!(scala.contains("state := 1.U"));
    }

    #[test]
    fn emission_is_deterministic() {
        let p = parsed(SENDREC);
        let cfg = EmitterConfig::default();
        assert_eq!(emit_chisel(&p, &cfg), emit_chisel(&p, &cfg));
    }

    #[test]
    fn goto_mux_becomes_a_mux_over_state_literals() {
        let scala = emit_chisel(&parsed(SENDREC), &EmitterConfig::default());
        assert!(scala.contains("state := Mux((i < 5.S), 1.U, 2.U)"));
    }

    #[test]
    fn memory_banks_emit_mem_and_indexed_access() {
        let scala = emit_chisel(
            &parsed(
                "val m = Module(M) module M int [4] a int x \
                 state 1 a[1] = 2 goto 2 state 2 x = a[1] goto 2",
            ),
            &EmitterConfig::default(),
        );
        assert!(scala.contains("val a = Mem(4, SInt(32.W))"));
        assert!(scala.contains("a((1.S).asUInt) := 2.S"));
        assert!(scala.contains("x := a((1.S).asUInt)"));
    }

    #[test]
    fn reserved_scala_names_are_renamed() {
        let scala = emit_chisel(
            &parsed("val m = Module(M) module M int class int io state 1 goto 1"),
            &EmitterConfig::default(),
        );
        assert!(scala.contains("val class_r = RegInit(0.S(32.W))"));
        assert!(scala.contains("val io_r = RegInit(0.S(32.W))"));
    }

    #[test]
    fn configured_width_and_top_name_are_honored() {
        let cfg = EmitterConfig { width: 8, top_module: "System".into() };
        let scala = emit_chisel(&parsed(SENDREC), &cfg);
        assert!(scala.contains("Decoupled(SInt(8.W))"));
        assert!(scala.contains("class System extends Module"));
        assert_eq!(output_file_name(&cfg), "System.scala");
    }
}
