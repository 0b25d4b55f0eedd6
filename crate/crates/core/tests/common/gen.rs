//! Random well-formed program generator for round-trip properties.
//!
//! Produces one instance per module declaration and wires every declared
//! stream into exactly one channel, so generated programs always pass the
//! parser's structural checks.

use corechisel::ast::*;
use proptest::prelude::*;
use proptest::sample::select;

#[derive(Debug, Clone)]
struct DeclCtx {
    name: String,
    regs: Vec<String>,
    bank: Option<(String, u32)>,
    ins: Vec<String>,
    outs: Vec<String>,
    n_states: u32,
}

fn op_strategy() -> impl Strategy<Value = BinaryOp> {
    select(vec![
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Mod,
        BinaryOp::Lt,
        BinaryOp::Gt,
        BinaryOp::Le,
        BinaryOp::Ge,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::And,
        BinaryOp::Or,
    ])
}

fn expr_strategy(ctx: &DeclCtx) -> BoxedStrategy<Expr> {
    let mut leaves: Vec<BoxedStrategy<Expr>> = vec![
        (0i64..=9).prop_map(Expr::number).boxed(),
        select(ctx.regs.clone()).prop_map(|r| Expr::ident(&r)).boxed(),
    ];
    let streams: Vec<String> = ctx.ins.iter().chain(&ctx.outs).cloned().collect();
    if !streams.is_empty() {
        leaves.push(
            select(streams.clone())
                .prop_map(|stream| Expr::ChannelReady { stream, loc: Loc::default() })
                .boxed(),
        );
        leaves.push(
            select(streams)
                .prop_map(|stream| Expr::ChannelValid { stream, loc: Loc::default() })
                .boxed(),
        );
    }
    proptest::strategy::Union::new(leaves)
        .prop_recursive(3, 24, 2, |inner| {
            prop_oneof![
                (op_strategy(), inner.clone(), inner.clone()).prop_map(|(op, l, r)| {
                    Expr::BinOp { op, lhs: Box::new(l), rhs: Box::new(r), loc: Loc::default() }
                }),
                (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| Expr::Mux {
                    cond: Box::new(c),
                    then: Box::new(t),
                    els: Box::new(e),
                    loc: Loc::default(),
                }),
            ]
        })
        .boxed()
}

fn statement_strategy(ctx: &DeclCtx) -> BoxedStrategy<Statement> {
    let expr = expr_strategy(ctx);
    let mut choices: Vec<BoxedStrategy<Statement>> = vec![(
        select(ctx.regs.clone()),
        expr.clone(),
    )
        .prop_map(|(target, value)| Statement::Assign { target, value, loc: Loc::default() })
        .boxed()];
    if let Some((bank, _)) = &ctx.bank {
        let bank = bank.clone();
        let bank2 = bank.clone();
        choices.push(
            (expr.clone(), expr.clone())
                .prop_map(move |(index, value)| Statement::MemWrite {
                    bank: bank.clone(),
                    index,
                    value,
                    loc: Loc::default(),
                })
                .boxed(),
        );
        choices.push(
            (select(ctx.regs.clone()), expr.clone())
                .prop_map(move |(target, index)| Statement::MemRead {
                    target,
                    bank: bank2.clone(),
                    index,
                    loc: Loc::default(),
                })
                .boxed(),
        );
    }
    if !ctx.outs.is_empty() {
        choices.push(
            (select(ctx.outs.clone()), expr.clone())
                .prop_map(|(stream, value)| Statement::ChannelWrite {
                    stream,
                    value,
                    loc: Loc::default(),
                })
                .boxed(),
        );
    }
    if !ctx.ins.is_empty() {
        choices.push(
            (select(ctx.regs.clone()), select(ctx.ins.clone()))
                .prop_map(|(target, stream)| Statement::ChannelRead {
                    target,
                    stream,
                    loc: Loc::default(),
                })
                .boxed(),
        );
    }
    proptest::strategy::Union::new(choices).boxed()
}

fn goto_strategy(ctx: &DeclCtx) -> BoxedStrategy<GotoExpr> {
    let target = (1..=ctx.n_states).prop_map(GotoExpr::target).boxed();
    let cond = expr_strategy(ctx);
    target.prop_recursive(2, 6, 2, move |inner| {
        (cond.clone(), inner.clone(), inner)
            .prop_map(|(c, t, e)| GotoExpr::Mux {
                cond: Box::new(c),
                then: Box::new(t),
                els: Box::new(e),
                loc: Loc::default(),
            })
            .boxed()
    })
    .boxed()
}

fn states_strategy(ctx: DeclCtx) -> BoxedStrategy<Vec<StateDecl>> {
    let one_state = (
        proptest::option::of(expr_strategy(&ctx)),
        proptest::collection::vec(statement_strategy(&ctx), 0..=3),
        goto_strategy(&ctx),
    );
    proptest::collection::vec(one_state, ctx.n_states as usize)
        .prop_map(|parts| {
            parts
                .into_iter()
                .enumerate()
                .map(|(i, (guard, statements, goto))| StateDecl {
                    number: i as u32 + 1,
                    guard,
                    statements,
                    goto,
                    loc: Loc::default(),
                })
                .collect()
        })
        .boxed()
}

fn assemble(ctxs: Vec<DeclCtx>, channels: Vec<(usize, usize)>, states: Vec<Vec<StateDecl>>) -> Program {
    let instances = ctxs
        .iter()
        .enumerate()
        .map(|(d, ctx)| ModuleInstance {
            instance_name: format!("inst{}", d),
            decl_name: ctx.name.clone(),
            loc: Loc::default(),
        })
        .collect();
    let connections = channels
        .iter()
        .enumerate()
        .map(|(c, (prod, cons))| Connection {
            from_instance: format!("inst{}", prod),
            from_stream: format!("o{}", c),
            to_instance: format!("inst{}", cons),
            to_stream: format!("i{}", c),
            loc: Loc::default(),
        })
        .collect();
    let declarations = ctxs
        .into_iter()
        .zip(states)
        .map(|(ctx, states)| {
            let mut declarations: Vec<Declaration> = ctx
                .regs
                .iter()
                .enumerate()
                .map(|(i, name)| Declaration::IntReg {
                    name: name.clone(),
                    init: i as i64,
                    loc: Loc::default(),
                })
                .collect();
            if let Some((name, size)) = &ctx.bank {
                declarations.push(Declaration::MemBank {
                    name: name.clone(),
                    size: *size,
                    loc: Loc::default(),
                });
            }
            for name in &ctx.ins {
                declarations.push(Declaration::InStream { name: name.clone(), loc: Loc::default() });
            }
            for name in &ctx.outs {
                declarations.push(Declaration::OutStream { name: name.clone(), loc: Loc::default() });
            }
            ModuleDecl { name: ctx.name, declarations, states, loc: Loc::default() }
        })
        .collect();
    Program { instances, connections, declarations }
}

/// Strategy over well-formed programs.
pub fn programs() -> impl Strategy<Value = Program> {
    (1usize..=3)
        .prop_flat_map(|n_decls| {
            let shapes = proptest::collection::vec(
                (1usize..=3, proptest::option::of(1u32..=4), 1u32..=4),
                n_decls,
            );
            let channels =
                proptest::collection::vec((0..n_decls, 0..n_decls), 0..=3);
            (shapes, channels)
        })
        .prop_flat_map(|(shapes, channels)| {
            let mut ctxs: Vec<DeclCtx> = shapes
                .iter()
                .enumerate()
                .map(|(d, (n_regs, bank, n_states))| DeclCtx {
                    name: format!("M{}", d),
                    regs: (0..*n_regs).map(|i| format!("r{}", i)).collect(),
                    bank: bank.map(|size| ("b0".to_string(), size)),
                    ins: Vec::new(),
                    outs: Vec::new(),
                    n_states: *n_states,
                })
                .collect();
            for (c, (prod, cons)) in channels.iter().enumerate() {
                ctxs[*prod].outs.push(format!("o{}", c));
                ctxs[*cons].ins.push(format!("i{}", c));
            }
            let state_strategies: Vec<BoxedStrategy<Vec<StateDecl>>> =
                ctxs.iter().map(|ctx| states_strategy(ctx.clone())).collect();
            (Just(ctxs), Just(channels), state_strategies)
        })
        .prop_map(|(ctxs, channels, states)| assemble(ctxs, channels, states))
}

/// Small random environments over a fixed key pool, for overlay laws.
pub fn small_envs() -> impl Strategy<Value = corechisel::env::Env> {
    use corechisel::env::{Env, RegKey};
    let keys: Vec<RegKey> = (0..6)
        .map(|i| RegKey::instance("m", &format!("r{}", i)))
        .chain((1..=2).map(|c| RegKey::channel(c, "ready")))
        .collect();
    proptest::collection::btree_map(select(keys), -5i64..=5, 0..=6)
        .prop_map(|map| map.into_iter().collect::<Env>())
}
