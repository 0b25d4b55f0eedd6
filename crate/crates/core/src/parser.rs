//! Recursive descent parser for Core Chisel.
//!
//! Parsing never fails hard: problems become diagnostics and the parser
//! resynchronizes at statement and section boundaries. The returned
//! `ParseResult` carries a program only when no error was produced, and a
//! returned program satisfies every structural invariant of the syntax
//! tree (checked by [`crate::validate::check_structure`]).

use crate::ast::*;
use crate::diag::{codes, sort_diagnostics, Diagnostic, ParseResult};
use crate::lexer::{lex, Tok, Token};
use crate::validate::check_structure;

/// Parses source text and runs the structural checks.
pub fn parse_program(source: &str) -> ParseResult {
    let (tokens, mut diagnostics) = lex(source);
    let mut parser = Parser { tokens, pos: 0, diags: Vec::new(), depth: 0 };
    let program = parser.program();
    diagnostics.extend(parser.diags);
    diagnostics.extend(check_structure(&program));
    sort_diagnostics(&mut diagnostics);
    let ok = !diagnostics.iter().any(|d| d.severity == crate::diag::Severity::Error);
    ParseResult { program: if ok { Some(program) } else { None }, diagnostics }
}

/// Hard limit on expression nesting; inputs beyond it get a diagnostic
/// instead of exhausting the stack.
const MAX_EXPR_DEPTH: u32 = 200;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    depth: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos.min(self.tokens.len() - 1)].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: impl Into<String>) {
        let loc = self.loc();
        self.diags
            .push(Diagnostic::error(codes::SYNTAX, message, loc.line, loc.col));
    }

    fn expect(&mut self, tok: Tok, what: &str) -> bool {
        if self.eat(&tok) {
            true
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected {} but found {}", what, found));
            false
        }
    }

    fn expect_ident(&mut self, what: &str) -> Option<(String, Loc)> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Some((name, loc))
            }
            other => {
                self.error_here(format!("expected {} but found {}", what, other.describe()));
                None
            }
        }
    }

    fn expect_number(&mut self, what: &str) -> Option<(i64, Loc)> {
        let loc = self.loc();
        match *self.peek() {
            Tok::Number(n) => {
                self.bump();
                Some((n, loc))
            }
            ref other => {
                let found = other.describe();
                self.error_here(format!("expected {} but found {}", what, found));
                None
            }
        }
    }

    /// Skips ahead to a token that can start the next construct. Used after
    /// a syntax error so one mistake produces one diagnostic.
    fn resync(&mut self, from_line: u32) {
        while !matches!(
            self.peek(),
            Tok::Eof
                | Tok::KwVal
                | Tok::KwModule
                | Tok::KwState
                | Tok::KwGoto
                | Tok::KwInt
                | Tok::KwInstream
                | Tok::KwOutstream
        ) {
            if matches!(self.peek(), Tok::Ident(_)) && self.loc().line > from_line {
                break;
            }
            self.bump();
        }
    }

    // -- program ------------------------------------------------------------

    fn program(&mut self) -> Program {
        let mut program = Program::default();

        while self.at(&Tok::KwVal) {
            if let Some(inst) = self.instance() {
                program.instances.push(inst);
            }
        }
        if program.instances.is_empty() {
            self.error_here("a program starts with at least one `val name = Module(Decl)` instance");
        }

        while matches!(self.peek(), Tok::Ident(_)) {
            if let Some(con) = self.connection() {
                program.connections.push(con);
            }
        }

        while self.at(&Tok::KwModule) {
            if let Some(decl) = self.module_decl() {
                program.declarations.push(decl);
            }
        }
        if program.declarations.is_empty() {
            self.error_here("expected at least one `module` declaration");
        }

        if !self.at(&Tok::Eof) {
            let found = self.peek().describe();
            self.error_here(format!("unexpected {} after module declarations", found));
        }
        program
    }

    fn instance(&mut self) -> Option<ModuleInstance> {
        let loc = self.loc();
        self.bump(); // val
        let parsed = (|| {
            let (instance_name, _) = self.expect_ident("an instance name")?;
            self.expect(Tok::Assign, "`=`").then_some(())?;
            self.expect(Tok::KwModuleUpper, "`Module`").then_some(())?;
            self.expect(Tok::LParen, "`(`").then_some(())?;
            let (decl_name, _) = self.expect_ident("a module name")?;
            self.expect(Tok::RParen, "`)`").then_some(())?;
            Some(ModuleInstance { instance_name, decl_name, loc })
        })();
        if parsed.is_none() {
            self.resync(loc.line);
        }
        parsed
    }

    fn connection(&mut self) -> Option<Connection> {
        let loc = self.loc();
        let parsed = (|| {
            let (from_instance, _) = self.expect_ident("an instance name")?;
            self.expect(Tok::Dot, "`.`").then_some(())?;
            let (from_stream, _) = self.expect_ident("a stream name")?;
            self.expect(Tok::Connect, "`<>`").then_some(())?;
            let (to_instance, _) = self.expect_ident("an instance name")?;
            self.expect(Tok::Dot, "`.`").then_some(())?;
            let (to_stream, _) = self.expect_ident("a stream name")?;
            Some(Connection { from_instance, from_stream, to_instance, to_stream, loc })
        })();
        if parsed.is_none() {
            self.resync(loc.line);
        }
        parsed
    }

    // -- module declarations --------------------------------------------------

    fn module_decl(&mut self) -> Option<ModuleDecl> {
        let loc = self.loc();
        self.bump(); // module
        let (name, _) = match self.expect_ident("a module name") {
            Some(n) => n,
            None => {
                self.resync(loc.line);
                return None;
            }
        };

        let mut declarations = Vec::new();
        while matches!(self.peek(), Tok::KwInt | Tok::KwInstream | Tok::KwOutstream) {
            if let Some(d) = self.declaration() {
                declarations.push(d);
            }
        }

        let mut states = Vec::new();
        while self.at(&Tok::KwState) {
            if let Some(s) = self.state() {
                states.push(s);
            }
        }
        if states.is_empty() {
            self.error_here(format!("module `{}` declares no states", name));
        }
        Some(ModuleDecl { name, declarations, states, loc })
    }

    fn declaration(&mut self) -> Option<Declaration> {
        let loc = self.loc();
        let parsed = match self.bump().tok {
            Tok::KwInt => {
                if self.eat(&Tok::LBracket) {
                    (|| {
                        let (size, size_loc) = self.expect_number("a memory bank size")?;
                        self.expect(Tok::RBracket, "`]`").then_some(())?;
                        let (name, _) = self.expect_ident("a memory bank name")?;
                        if size < 1 {
                            self.diags.push(Diagnostic::error(
                                codes::SYNTAX,
                                format!("memory bank `{}` must have size at least 1", name),
                                size_loc.line,
                                size_loc.col,
                            ));
                            return None;
                        }
                        Some(Declaration::MemBank { name, size: size as u32, loc })
                    })()
                } else {
                    (|| {
                        let (name, _) = self.expect_ident("a register name")?;
                        let init = if self.eat(&Tok::Assign) {
                            self.expect_number("an initial value")?.0
                        } else {
                            0
                        };
                        Some(Declaration::IntReg { name, init, loc })
                    })()
                }
            }
            Tok::KwInstream => self
                .expect_ident("a stream name")
                .map(|(name, _)| Declaration::InStream { name, loc }),
            Tok::KwOutstream => self
                .expect_ident("a stream name")
                .map(|(name, _)| Declaration::OutStream { name, loc }),
            _ => unreachable!("caller checked the declaration keyword"),
        };
        if parsed.is_none() {
            self.resync(loc.line);
        }
        parsed
    }

    // -- states and statements -------------------------------------------------

    fn state(&mut self) -> Option<StateDecl> {
        let loc = self.loc();
        self.bump(); // state
        let number = match self.expect_number("a state number") {
            Some((n, nloc)) => {
                if n < 1 || n > u32::MAX as i64 {
                    self.diags.push(Diagnostic::error(
                        codes::SYNTAX,
                        format!("state number must be a positive integer, got {}", n),
                        nloc.line,
                        nloc.col,
                    ));
                    1
                } else {
                    n as u32
                }
            }
            None => {
                self.resync(loc.line);
                return None;
            }
        };

        let guard = if self.eat(&Tok::KwWhen) { self.expr() } else { None };

        let mut statements = Vec::new();
        while matches!(self.peek(), Tok::Ident(_)) {
            let stmt_loc = self.loc();
            match self.statement() {
                Some(s) => statements.push(s),
                None => self.resync(stmt_loc.line),
            }
        }

        let goto = if self.eat(&Tok::KwGoto) {
            self.goto_expr()?
        } else {
            self.error_here(format!("state {} is missing its `goto`", number));
            self.resync(self.loc().line);
            return None;
        };

        Some(StateDecl { number, guard, statements, goto, loc })
    }

    fn statement(&mut self) -> Option<Statement> {
        let loc = self.loc();
        let (first, _) = self.expect_ident("a statement")?;
        match self.peek().clone() {
            Tok::Assign => {
                self.bump();
                // `x = s.read()` and `x = a[i]` are statement forms of their
                // own; everything else is a plain assignment expression.
                if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Dot
                    && *self.peek_at(2) == Tok::KwRead
                {
                    let (stream, _) = self.expect_ident("a stream name")?;
                    self.bump(); // .
                    self.bump(); // read
                    self.expect(Tok::LParen, "`(`").then_some(())?;
                    self.expect(Tok::RParen, "`)`").then_some(())?;
                    if self.peek_is_operator() {
                        self.error_here("read() cannot be part of a larger expression");
                        return None;
                    }
                    Some(Statement::ChannelRead { target: first, stream, loc })
                } else if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::LBracket
                {
                    let (bank, _) = self.expect_ident("a memory bank name")?;
                    self.bump(); // [
                    let index = self.expr()?;
                    self.expect(Tok::RBracket, "`]`").then_some(())?;
                    if self.peek_is_operator() {
                        self.error_here("a memory read cannot be part of a larger expression");
                        return None;
                    }
                    Some(Statement::MemRead { target: first, bank, index, loc })
                } else {
                    let value = self.expr()?;
                    Some(Statement::Assign { target: first, value, loc })
                }
            }
            Tok::LBracket => {
                self.bump();
                let index = self.expr()?;
                self.expect(Tok::RBracket, "`]`").then_some(())?;
                self.expect(Tok::Assign, "`=`").then_some(())?;
                let value = self.expr()?;
                Some(Statement::MemWrite { bank: first, index, value, loc })
            }
            Tok::Dot => {
                self.bump();
                match self.peek().clone() {
                    Tok::KwWrite => {
                        self.bump();
                        self.expect(Tok::LParen, "`(`").then_some(())?;
                        let value = self.expr()?;
                        self.expect(Tok::RParen, "`)`").then_some(())?;
                        Some(Statement::ChannelWrite { stream: first, value, loc })
                    }
                    Tok::KwRead => {
                        self.error_here("the result of read() must be assigned: `x = s.read()`");
                        None
                    }
                    other => {
                        let found = other.describe();
                        self.error_here(format!("expected `write` but found {}", found));
                        None
                    }
                }
            }
            other => {
                let found = other.describe();
                self.error_here(format!(
                    "expected `=`, `[`, or `.` after `{}` but found {}",
                    first, found
                ));
                None
            }
        }
    }

    fn peek_is_operator(&self) -> bool {
        binary_op(self.peek()).is_some()
    }

    // -- expressions -------------------------------------------------------------

    fn expr(&mut self) -> Option<Expr> {
        if self.depth >= MAX_EXPR_DEPTH {
            self.error_here("expression nesting is too deep");
            return None;
        }
        self.depth += 1;
        let result = self.binary(1);
        self.depth -= 1;
        result
    }

    fn binary(&mut self, min_prec: u8) -> Option<Expr> {
        let mut lhs = self.atom()?;
        while let Some(op) = binary_op(self.peek()) {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let loc = self.loc();
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::BinOp { op, lhs: Box::new(lhs), rhs: Box::new(rhs), loc };
        }
        Some(lhs)
    }

    fn atom(&mut self) -> Option<Expr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Number(value) => {
                self.bump();
                Some(Expr::Number { value, loc })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`").then_some(())?;
                Some(inner)
            }
            Tok::KwMux => {
                self.bump();
                self.expect(Tok::LParen, "`(`").then_some(())?;
                let cond = self.expr()?;
                self.expect(Tok::Comma, "`,`").then_some(())?;
                let then = self.expr()?;
                self.expect(Tok::Comma, "`,`").then_some(())?;
                let els = self.expr()?;
                self.expect(Tok::RParen, "`)`").then_some(())?;
                Some(Expr::Mux {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    els: Box::new(els),
                    loc,
                })
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::Dot) {
                    match self.peek().clone() {
                        Tok::KwReady => {
                            self.bump();
                            self.eat_unit_parens();
                            Some(Expr::ChannelReady { stream: name, loc })
                        }
                        Tok::KwValid => {
                            self.bump();
                            self.eat_unit_parens();
                            Some(Expr::ChannelValid { stream: name, loc })
                        }
                        Tok::KwRead => {
                            self.error_here(
                                "read() is a statement, not an expression: use `x = s.read()`",
                            );
                            None
                        }
                        other => {
                            let found = other.describe();
                            self.error_here(format!(
                                "expected `ready` or `valid` but found {}",
                                found
                            ));
                            None
                        }
                    }
                } else {
                    Some(Expr::Ident { name, loc })
                }
            }
            other => {
                let found = other.describe();
                self.error_here(format!("expected an expression but found {}", found));
                None
            }
        }
    }

    /// `ready`/`valid` may be written with or without a trailing `()`.
    fn eat_unit_parens(&mut self) {
        if self.eat(&Tok::LParen) {
            self.expect(Tok::RParen, "`)`");
        }
    }

    fn goto_expr(&mut self) -> Option<GotoExpr> {
        if self.depth >= MAX_EXPR_DEPTH {
            self.error_here("goto nesting is too deep");
            return None;
        }
        self.depth += 1;
        let result = self.goto_expr_inner();
        self.depth -= 1;
        result
    }

    fn goto_expr_inner(&mut self) -> Option<GotoExpr> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                if n < 1 || n > u32::MAX as i64 {
                    self.diags.push(Diagnostic::error(
                        codes::SYNTAX,
                        format!("goto target must be a positive state number, got {}", n),
                        loc.line,
                        loc.col,
                    ));
                    return None;
                }
                Some(GotoExpr::Target { state: n as u32, loc })
            }
            Tok::KwMux => {
                self.bump();
                self.expect(Tok::LParen, "`(`").then_some(())?;
                let cond = self.expr()?;
                self.expect(Tok::Comma, "`,`").then_some(())?;
                let then = self.goto_expr()?;
                self.expect(Tok::Comma, "`,`").then_some(())?;
                let els = self.goto_expr()?;
                self.expect(Tok::RParen, "`)`").then_some(())?;
                Some(GotoExpr::Mux {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    els: Box::new(els),
                    loc,
                })
            }
            other => {
                let found = other.describe();
                self.error_here(format!(
                    "expected a state number or Mux after `goto` but found {}",
                    found
                ));
                None
            }
        }
    }
}

fn binary_op(tok: &Tok) -> Option<BinaryOp> {
    Some(match tok {
        Tok::Plus => BinaryOp::Add,
        Tok::Minus => BinaryOp::Sub,
        Tok::Star => BinaryOp::Mul,
        Tok::Slash => BinaryOp::Div,
        Tok::Percent => BinaryOp::Mod,
        Tok::Lt => BinaryOp::Lt,
        Tok::Gt => BinaryOp::Gt,
        Tok::Le => BinaryOp::Le,
        Tok::Ge => BinaryOp::Ge,
        Tok::EqEq => BinaryOp::Eq,
        Tok::NotEq => BinaryOp::Ne,
        Tok::Amp => BinaryOp::And,
        Tok::Pipe => BinaryOp::Or,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Severity;

    const SENDREC: &str = include_str!("../corpus/sendrec.cc.txt");

    #[test]
    fn parses_the_send_receive_design() {
        let result = parse_program(SENDREC);
        assert!(result.diagnostics.is_empty(), "{:?}", result.diagnostics);
        let p = result.program.unwrap();
        assert_eq!(p.instances.len(), 2);
        assert_eq!(p.connections.len(), 1);
        assert_eq!(p.declarations.len(), 2);
        assert_eq!(p.decl("Sender").unwrap().states.len(), 2);
        assert_eq!(p.decl("Receiver").unwrap().states.len(), 6);
    }

    #[test]
    fn parses_a_minimal_program() {
        let result = parse_program("val m = Module(M) module M state 1 goto 1");
        assert!(result.diagnostics.is_empty(), "{:?}", result.diagnostics);
        let p = result.program.unwrap();
        assert_eq!(p.instances.len(), 1);
        assert_eq!(p.connections.len(), 0);
        assert_eq!(p.declarations.len(), 1);
    }

    #[test]
    fn missing_module_declaration_is_reported() {
        let result = parse_program("val m = Module(M)");
        assert!(result.program.is_none());
        assert!(result
            .diagnostics
            .iter()
            .any(|d| d.message.contains("unresolved module declaration")));
    }

    #[test]
    fn duplicate_names_are_reported() {
        let result = parse_program(
            "val m = Module(M) val m = Module(M) module M int x int x state 1 goto 1",
        );
        assert!(result.program.is_none());
        let dups: Vec<_> =
            result.diagnostics.iter().filter(|d| d.code == codes::DUP_NAME).collect();
        assert_eq!(dups.len(), 2);
    }

    #[test]
    fn goto_to_undeclared_state_is_an_error() {
        let result = parse_program("val m = Module(M) module M state 1 goto 7");
        assert!(result.program.is_none());
        assert!(result.diagnostics.iter().any(|d| d.code == codes::GOTO_TARGET));
    }

    #[test]
    fn module_without_state_one_is_an_error() {
        let result = parse_program("val m = Module(M) module M state 2 goto 2");
        assert!(result.program.is_none());
        assert!(result.diagnostics.iter().any(|d| d.message.contains("no state 1")));
    }

    #[test]
    fn expressions_follow_precedence() {
        let p = parse_program(
            "val m = Module(M) module M int a int b int c int x state 1 x = a + b * c | a < b goto 1",
        )
        .program
        .unwrap();
        let Statement::Assign { value, .. } = &p.declarations[0].states[0].statements[0] else {
            panic!("expected assignment");
        };
        // ((a + (b * c)) | (a < b))
        let Expr::BinOp { op: BinaryOp::Or, lhs, rhs, .. } = value else {
            panic!("`|` binds loosest, got {:?}", value);
        };
        assert!(matches!(**lhs, Expr::BinOp { op: BinaryOp::Add, .. }));
        assert!(matches!(**rhs, Expr::BinOp { op: BinaryOp::Lt, .. }));
    }

    #[test]
    fn ready_valid_parse_with_and_without_parens() {
        let with = parse_program(
            "val a = Module(M) val b = Module(M) a.o <> b.i \
             module M instream i outstream o state 1 when o.ready() goto 1",
        );
        let without = parse_program(
            "val a = Module(M) val b = Module(M) a.o <> b.i \
             module M instream i outstream o state 1 when o.ready goto 1",
        );
        assert_eq!(with.program, without.program);
        assert!(with.program.is_some());
    }

    #[test]
    fn read_in_expression_position_is_rejected() {
        let result = parse_program(
            "val m = Module(M) module M int x instream s state 1 x = s.read() + 1 goto 1",
        );
        assert!(result.program.is_none());
        assert!(result
            .diagnostics
            .iter()
            .any(|d| d.message.contains("read() cannot be part of a larger expression")));
    }

    #[test]
    fn comments_are_ignored() {
        let result = parse_program(
            "// a design\nval m = Module(M) // instance\nmodule M\nstate 1 // idle\n  goto 1\n",
        );
        assert!(result.program.is_some());
    }

    #[test]
    fn error_recovery_reports_multiple_problems() {
        let result = parse_program(
            "val m = Module(M)\nmodule M\nint x\nstate 1\n  x = = 1\n  x [ 2\n  goto 1\n",
        );
        assert!(result.program.is_none());
        let errors =
            result.diagnostics.iter().filter(|d| d.severity == Severity::Error).count();
        assert!(errors >= 2, "expected both bad statements reported: {:?}", result.diagnostics);
    }

    #[test]
    fn diagnostics_carry_locations() {
        let result = parse_program("val m = Module(M)\nmodule M\nstate 1\n  goto 9\n");
        let d = &result.diagnostics[0];
        assert_eq!((d.line, d.col), (4, 8));
    }

    #[test]
    fn deep_nesting_is_a_diagnostic_not_a_crash() {
        let mut source = String::from("val m = Module(M) module M int x state 1 x = ");
        source.push_str(&"(".repeat(5000));
        source.push('1');
        source.push_str(&")".repeat(5000));
        source.push_str(" goto 1");
        let result = parse_program(&source);
        assert!(result.program.is_none());
        assert!(result.diagnostics.iter().any(|d| d.message.contains("nesting is too deep")));

        let mut source = String::from("val m = Module(M) module M state 1 goto ");
        source.push_str(&"Mux(1,".repeat(5000));
        source.push('1');
        // unbalanced on purpose; the depth guard must fire first
        let result = parse_program(&source);
        assert!(result.program.is_none());
    }

    proptest::proptest! {
        /// Arbitrary input never panics; it produces diagnostics instead,
        /// and a program comes back exactly when no error was reported.
        #[test]
        fn arbitrary_input_is_handled_gracefully(source in proptest::string::string_regex(".{0,300}").unwrap()) {
            let result = parse_program(&source);
            proptest::prop_assert_eq!(result.program.is_none(), result.has_errors());
        }

        /// Arbitrary token-shaped soup never panics either.
        #[test]
        fn token_soup_is_handled_gracefully(
            words in proptest::collection::vec(
                proptest::sample::select(vec![
                    "val", "module", "Module", "state", "when", "goto", "int", "instream",
                    "outstream", "Mux", "read", "write", "ready", "valid", "x", "m", "M",
                    "0", "1", "42", "=", ".", "<>", "(", ")", "[", "]", ",", "+", "-", "*",
                    "/", "%", "<", ">", "<=", ">=", "==", "!=", "&", "|", "//", "\n",
                ]),
                0..60,
            )
        ) {
            let source = words.join(" ");
            let _ = parse_program(&source);
        }
    }
}
