#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use corechisel::ast::Program;

pub const CORPUS: &[&str] =
    &["sendrec", "selfloop", "pipeline2", "fastrecv", "blocked", "multi"];

pub fn corpus_path(name: &str) -> String {
    format!("{}/corpus/{}.cc.txt", env!("CARGO_MANIFEST_DIR"), name)
}

pub fn golden_path(name: &str) -> String {
    format!("{}/tests/golden/{}", env!("CARGO_MANIFEST_DIR"), name)
}

pub fn load_corpus(name: &str) -> Program {
    let source = std::fs::read_to_string(corpus_path(name)).expect("corpus file readable");
    let result = corechisel::parse_program(&source);
    assert!(
        result.diagnostics.is_empty(),
        "corpus design `{}` must be diagnostic-free: {:?}",
        name,
        result.diagnostics
    );
    let program = result.program.expect("corpus design parses");
    let lints = corechisel::validate_program(&program);
    assert!(lints.is_empty(), "corpus design `{}` must lint clean: {:?}", name, lints);
    program
}
