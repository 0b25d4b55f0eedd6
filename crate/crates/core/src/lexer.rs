//! Tokenizer for Core Chisel source text.
//!
//! Never panics on malformed input: unknown characters become `lex`
//! diagnostics and are skipped, so the parser always sees a token stream.

use crate::ast::Loc;
use crate::diag::{codes, Diagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(i64),
    // Keywords
    KwVal,
    KwModuleUpper, // `Module`
    KwModule,      // `module`
    KwState,
    KwWhen,
    KwGoto,
    KwInt,
    KwInstream,
    KwOutstream,
    KwMux,
    KwRead,
    KwWrite,
    KwReady,
    KwValid,
    // Punctuation and operators
    Assign,  // =
    Dot,     // .
    Connect, // <>
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    NotEq,
    Amp,
    Pipe,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{}`", name),
            Tok::Number(n) => format!("number `{}`", n),
            Tok::KwVal => "`val`".into(),
            Tok::KwModuleUpper => "`Module`".into(),
            Tok::KwModule => "`module`".into(),
            Tok::KwState => "`state`".into(),
            Tok::KwWhen => "`when`".into(),
            Tok::KwGoto => "`goto`".into(),
            Tok::KwInt => "`int`".into(),
            Tok::KwInstream => "`instream`".into(),
            Tok::KwOutstream => "`outstream`".into(),
            Tok::KwMux => "`Mux`".into(),
            Tok::KwRead => "`read`".into(),
            Tok::KwWrite => "`write`".into(),
            Tok::KwReady => "`ready`".into(),
            Tok::KwValid => "`valid`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Connect => "`<>`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Percent => "`%`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::NotEq => "`!=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "val" => Tok::KwVal,
        "Module" => Tok::KwModuleUpper,
        "module" => Tok::KwModule,
        "state" => Tok::KwState,
        "when" => Tok::KwWhen,
        "goto" => Tok::KwGoto,
        "int" => Tok::KwInt,
        "instream" => Tok::KwInstream,
        "outstream" => Tok::KwOutstream,
        "Mux" => Tok::KwMux,
        "read" => Tok::KwRead,
        "write" => Tok::KwWrite,
        "ready" => Tok::KwReady,
        "valid" => Tok::KwValid,
        _ => return None,
    })
}

/// Tokenizes `source`. The returned stream always ends with `Eof`.
pub fn lex(source: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! push {
        ($tok:expr, $line:expr, $col:expr) => {
            tokens.push(Token { tok: $tok, loc: Loc::new($line, $col) })
        };
    }

    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '/' => {
                chars.next();
                col += 1;
                if chars.peek() == Some(&'/') {
                    // line comment
                    for c in chars.by_ref() {
                        if c == '\n' {
                            line += 1;
                            col = 1;
                            break;
                        }
                    }
                } else {
                    push!(Tok::Slash, tline, tcol);
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                match keyword(&word) {
                    Some(tok) => push!(tok, tline, tcol),
                    None => push!(Tok::Ident(word), tline, tcol),
                }
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                match digits.parse::<i64>() {
                    Ok(n) => push!(Tok::Number(n), tline, tcol),
                    Err(_) => diags.push(Diagnostic::error(
                        codes::LEX,
                        format!("number `{}` is too large", digits),
                        tline,
                        tcol,
                    )),
                }
            }
            _ => {
                chars.next();
                col += 1;
                let two = |chars: &mut std::iter::Peekable<std::str::Chars>,
                           col: &mut u32,
                           next: char|
                 -> bool {
                    if chars.peek() == Some(&next) {
                        chars.next();
                        *col += 1;
                        true
                    } else {
                        false
                    }
                };
                let tok = match c {
                    '=' => {
                        if two(&mut chars, &mut col, '=') {
                            Some(Tok::EqEq)
                        } else {
                            Some(Tok::Assign)
                        }
                    }
                    '<' => {
                        if two(&mut chars, &mut col, '>') {
                            Some(Tok::Connect)
                        } else if two(&mut chars, &mut col, '=') {
                            Some(Tok::Le)
                        } else {
                            Some(Tok::Lt)
                        }
                    }
                    '>' => {
                        if two(&mut chars, &mut col, '=') {
                            Some(Tok::Ge)
                        } else {
                            Some(Tok::Gt)
                        }
                    }
                    '!' => {
                        if two(&mut chars, &mut col, '=') {
                            Some(Tok::NotEq)
                        } else {
                            diags.push(Diagnostic::error(
                                codes::LEX,
                                "unexpected character `!` (did you mean `!=`?)",
                                tline,
                                tcol,
                            ));
                            None
                        }
                    }
                    '.' => Some(Tok::Dot),
                    '(' => Some(Tok::LParen),
                    ')' => Some(Tok::RParen),
                    '[' => Some(Tok::LBracket),
                    ']' => Some(Tok::RBracket),
                    ',' => Some(Tok::Comma),
                    '+' => Some(Tok::Plus),
                    '-' => Some(Tok::Minus),
                    '*' => Some(Tok::Star),
                    '%' => Some(Tok::Percent),
                    '&' => Some(Tok::Amp),
                    '|' => Some(Tok::Pipe),
                    other => {
                        diags.push(Diagnostic::error(
                            codes::LEX,
                            format!("unexpected character `{}`", other.escape_default()),
                            tline,
                            tcol,
                        ));
                        None
                    }
                };
                if let Some(tok) = tok {
                    push!(tok, tline, tcol);
                }
            }
        }
    }
    push!(Tok::Eof, line, col);
    (tokens, diags)
}
