//! Abstract syntax for Core Chisel.
//!
//! A program creates module instances, connects outstreams to instreams,
//! and declares the modules themselves. Each module is a finite state
//! machine over registers, memory banks, and channel streams. All nodes
//! carry a source location for diagnostics.

/// Source position (1-based line and column).
///
/// Locations are metadata: they never take part in structural equality,
/// so two trees that differ only in positions compare equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub fn new(line: u32, col: u32) -> Self {
        Loc { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl std::fmt::Display for Loc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A whole design: instances, connections, and module declarations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub instances: Vec<ModuleInstance>,
    pub connections: Vec<Connection>,
    pub declarations: Vec<ModuleDecl>,
}

/// `val name = Module(Decl)`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleInstance {
    pub instance_name: String,
    pub decl_name: String,
    pub loc: Loc,
}

/// `from.out <> to.in`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub from_instance: String,
    pub from_stream: String,
    pub to_instance: String,
    pub to_stream: String,
    pub loc: Loc,
}

/// `module Name` followed by declarations and at least one state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDecl {
    pub name: String,
    pub declarations: Vec<Declaration>,
    pub states: Vec<StateDecl>,
    pub loc: Loc,
}

/// Register, memory bank, or stream declaration inside a module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Declaration {
    /// `int x = n` (initial value 0 when omitted)
    IntReg { name: String, init: i64, loc: Loc },
    /// `int [n] a`
    MemBank { name: String, size: u32, loc: Loc },
    /// `instream s`
    InStream { name: String, loc: Loc },
    /// `outstream s`
    OutStream { name: String, loc: Loc },
}

impl Declaration {
    pub fn name(&self) -> &str {
        match self {
            Declaration::IntReg { name, .. }
            | Declaration::MemBank { name, .. }
            | Declaration::InStream { name, .. }
            | Declaration::OutStream { name, .. } => name,
        }
    }

    pub fn loc(&self) -> Loc {
        match self {
            Declaration::IntReg { loc, .. }
            | Declaration::MemBank { loc, .. }
            | Declaration::InStream { loc, .. }
            | Declaration::OutStream { loc, .. } => *loc,
        }
    }
}

/// One FSM state: optional guard, simultaneous statements, next-state expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub number: u32,
    /// An omitted guard behaves as the constant-true guard.
    pub guard: Option<Expr>,
    pub statements: Vec<Statement>,
    pub goto: GotoExpr,
    pub loc: Loc,
}

/// Register transfer executed when the enclosing state is active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    /// `x = e`
    Assign { target: String, value: Expr, loc: Loc },
    /// `a[i] = e`
    MemWrite { bank: String, index: Expr, value: Expr, loc: Loc },
    /// `x = a[i]`
    MemRead { target: String, bank: String, index: Expr, loc: Loc },
    /// `out.write(e)`
    ChannelWrite { stream: String, value: Expr, loc: Loc },
    /// `x = in.read()`
    ChannelRead { target: String, stream: String, loc: Loc },
}

impl Statement {
    pub fn loc(&self) -> Loc {
        match self {
            Statement::Assign { loc, .. }
            | Statement::MemWrite { loc, .. }
            | Statement::MemRead { loc, .. }
            | Statement::ChannelWrite { loc, .. }
            | Statement::ChannelRead { loc, .. } => *loc,
        }
    }
}

/// Binary operators. Comparisons and logic yield 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
        }
    }

    /// Binding strength, higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Lt
            | BinaryOp::Gt
            | BinaryOp::Le
            | BinaryOp::Ge
            | BinaryOp::Eq
            | BinaryOp::Ne => 3,
            BinaryOp::Add | BinaryOp::Sub => 4,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 5,
        }
    }
}

/// Expression evaluated against the environment at the start of a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Ident { name: String, loc: Loc },
    Number { value: i64, loc: Loc },
    BinOp { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr>, loc: Loc },
    Mux { cond: Box<Expr>, then: Box<Expr>, els: Box<Expr>, loc: Loc },
    /// `s.ready()`: channel writable (ready and not valid)
    ChannelReady { stream: String, loc: Loc },
    /// `s.valid()`: channel readable (ready and valid)
    ChannelValid { stream: String, loc: Loc },
}

impl Expr {
    pub fn loc(&self) -> Loc {
        match self {
            Expr::Ident { loc, .. }
            | Expr::Number { loc, .. }
            | Expr::BinOp { loc, .. }
            | Expr::Mux { loc, .. }
            | Expr::ChannelReady { loc, .. }
            | Expr::ChannelValid { loc, .. } => *loc,
        }
    }

    pub fn number(value: i64) -> Expr {
        Expr::Number { value, loc: Loc::default() }
    }

    pub fn ident(name: &str) -> Expr {
        Expr::Ident { name: name.to_string(), loc: Loc::default() }
    }
}

/// Next-state expression: a literal target or a Mux over targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GotoExpr {
    Target { state: u32, loc: Loc },
    Mux { cond: Box<Expr>, then: Box<GotoExpr>, els: Box<GotoExpr>, loc: Loc },
}

impl GotoExpr {
    pub fn loc(&self) -> Loc {
        match self {
            GotoExpr::Target { loc, .. } | GotoExpr::Mux { loc, .. } => *loc,
        }
    }

    pub fn target(state: u32) -> GotoExpr {
        GotoExpr::Target { state, loc: Loc::default() }
    }

    /// All state numbers this goto can select.
    pub fn targets(&self) -> Vec<u32> {
        match self {
            GotoExpr::Target { state, .. } => vec![*state],
            GotoExpr::Mux { then, els, .. } => {
                let mut t = then.targets();
                t.extend(els.targets());
                t
            }
        }
    }
}

impl Program {
    /// Looks up a module declaration by name.
    pub fn decl(&self, name: &str) -> Option<&ModuleDecl> {
        self.declarations.iter().find(|d| d.name == name)
    }

    /// Looks up the declaration backing an instance.
    pub fn decl_for_instance(&self, instance: &str) -> Option<&ModuleDecl> {
        let inst = self.instances.iter().find(|i| i.instance_name == instance)?;
        self.decl(&inst.decl_name)
    }
}

impl ModuleDecl {
    pub fn state(&self, number: u32) -> Option<&StateDecl> {
        self.states.iter().find(|s| s.number == number)
    }

    pub fn find(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.name() == name)
    }
}

// ---------------------------------------------------------------------------
// Pretty printer
// ---------------------------------------------------------------------------

/// Renders a program as Core Chisel source. The output parses back to a
/// structurally identical tree.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for inst in &p.instances {
        out.push_str(&format!(
            "val {} = Module({})\n",
            inst.instance_name, inst.decl_name
        ));
    }
    for con in &p.connections {
        out.push_str(&format!(
            "{}.{} <> {}.{}\n",
            con.from_instance, con.from_stream, con.to_instance, con.to_stream
        ));
    }
    for decl in &p.declarations {
        out.push('\n');
        print_module(&mut out, decl);
    }
    out
}

fn print_module(out: &mut String, m: &ModuleDecl) {
    out.push_str(&format!("module {}\n", m.name));
    for d in &m.declarations {
        match d {
            Declaration::IntReg { name, init, .. } => {
                out.push_str(&format!("int {} = {}\n", name, init));
            }
            Declaration::MemBank { name, size, .. } => {
                out.push_str(&format!("int [{}] {}\n", size, name));
            }
            Declaration::InStream { name, .. } => {
                out.push_str(&format!("instream {}\n", name));
            }
            Declaration::OutStream { name, .. } => {
                out.push_str(&format!("outstream {}\n", name));
            }
        }
    }
    for s in &m.states {
        match &s.guard {
            Some(g) => out.push_str(&format!("state {} when {}\n", s.number, print_expr(g, 0))),
            None => out.push_str(&format!("state {}\n", s.number)),
        }
        for stmt in &s.statements {
            out.push_str("  ");
            out.push_str(&print_stmt(stmt));
            out.push('\n');
        }
        out.push_str(&format!("  goto {}\n", print_goto(&s.goto)));
    }
}

fn print_stmt(s: &Statement) -> String {
    match s {
        Statement::Assign { target, value, .. } => {
            format!("{} = {}", target, print_expr(value, 0))
        }
        Statement::MemWrite { bank, index, value, .. } => {
            format!("{}[{}] = {}", bank, print_expr(index, 0), print_expr(value, 0))
        }
        Statement::MemRead { target, bank, index, .. } => {
            format!("{} = {}[{}]", target, bank, print_expr(index, 0))
        }
        Statement::ChannelWrite { stream, value, .. } => {
            format!("{}.write({})", stream, print_expr(value, 0))
        }
        Statement::ChannelRead { target, stream, .. } => {
            format!("{} = {}.read()", target, stream)
        }
    }
}

/// Prints with the minimal parentheses the grammar needs. `min_prec` is the
/// lowest precedence printable without parens in this position.
fn print_expr(e: &Expr, min_prec: u8) -> String {
    match e {
        Expr::Ident { name, .. } => name.clone(),
        Expr::Number { value, .. } => value.to_string(),
        Expr::BinOp { op, lhs, rhs, .. } => {
            let prec = op.precedence();
            // Operators are left associative: the right operand needs parens
            // at equal precedence, the left one does not.
            let text = format!(
                "{} {} {}",
                print_expr(lhs, prec),
                op.symbol(),
                print_expr(rhs, prec + 1)
            );
            if prec < min_prec {
                format!("({})", text)
            } else {
                text
            }
        }
        Expr::Mux { cond, then, els, .. } => format!(
            "Mux({},{},{})",
            print_expr(cond, 0),
            print_expr(then, 0),
            print_expr(els, 0)
        ),
        Expr::ChannelReady { stream, .. } => format!("{}.ready()", stream),
        Expr::ChannelValid { stream, .. } => format!("{}.valid()", stream),
    }
}

fn print_goto(g: &GotoExpr) -> String {
    match g {
        GotoExpr::Target { state, .. } => state.to_string(),
        GotoExpr::Mux { cond, then, els, .. } => format!(
            "Mux({},{},{})",
            print_expr(cond, 0),
            print_goto(then),
            print_goto(els)
        ),
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pretty_print(self))
    }
}
