//! Communication analysis.
//!
//! Abstracts a design's state down to channel status bits and module state
//! numbers, ignoring all data, then collects every abstract configuration
//! reachable from the initial one. Where a concrete cycle picks one
//! outcome, the abstract step produces the set of all possible outcomes:
//! a guard that cannot be decided yields both the idle and the proceeding
//! successor, and a Mux goto fans out to every target. The reachable set
//! is finite, so the fixpoint needs no widening.
//!
//! The per-state report groups reachable configurations the way a designer
//! reads them: for each state of each instance, which channel bits and
//! which peer states can be live at the same time. A state a module can
//! only occupy while a channel stays empty, or one it never leaves, points
//! at a bottleneck or an idle component.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use crate::ast::{Expr, GotoExpr, ModuleDecl, Program, Statement};
use crate::env::{regs, Env, RegKey};
use crate::interp::Trace;

/// Subset of {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitSet(u8);

impl BitSet {
    pub const EMPTY: BitSet = BitSet(0b00);
    pub const ZERO: BitSet = BitSet(0b01);
    pub const ONE: BitSet = BitSet(0b10);
    pub const BOTH: BitSet = BitSet(0b11);

    /// Singleton set of one bit value.
    pub fn single(bit: i64) -> BitSet {
        if bit == 1 {
            BitSet::ONE
        } else {
            BitSet::ZERO
        }
    }

    pub fn contains(self, bit: i64) -> bool {
        match bit {
            0 => self.0 & 0b01 != 0,
            1 => self.0 & 0b10 != 0,
            _ => false,
        }
    }

    pub fn union(self, other: BitSet) -> BitSet {
        BitSet(self.0 | other.0)
    }

    pub fn insert(&mut self, bit: i64) {
        *self = self.union(BitSet::single(bit));
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = i64> {
        [0, 1].into_iter().filter(move |b| self.contains(*b))
    }
}

impl std::fmt::Display for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            BitSet::EMPTY => write!(f, "{{}}"),
            BitSet::ZERO => write!(f, "0"),
            BitSet::ONE => write!(f, "1"),
            _ => write!(f, "{{0,1}}"),
        }
    }
}

impl Serialize for BitSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Abstract value: a set of possible bits for channel status registers, or
/// an exact natural for state registers and stream channel numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbstractVal {
    Bits(BitSet),
    Num(i64),
}

impl std::fmt::Display for AbstractVal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbstractVal::Bits(b) => write!(f, "{}", b),
            AbstractVal::Num(n) => write!(f, "{}", n),
        }
    }
}

/// Abstract environment over exactly the channel status bits and the state
/// and stream-number registers of a program. Data registers, memory cells,
/// and channel data do not appear.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AbstractEnv {
    map: std::collections::BTreeMap<RegKey, AbstractVal>,
}

impl AbstractEnv {
    pub fn new() -> AbstractEnv {
        AbstractEnv::default()
    }

    pub fn insert(&mut self, key: RegKey, val: AbstractVal) {
        self.map.insert(key, val);
    }

    pub fn get(&self, key: &RegKey) -> Option<AbstractVal> {
        self.map.get(key).copied()
    }

    pub fn bits(&self, key: &RegKey) -> Option<BitSet> {
        match self.get(key)? {
            AbstractVal::Bits(b) => Some(b),
            AbstractVal::Num(_) => None,
        }
    }

    pub fn num(&self, key: &RegKey) -> Option<i64> {
        match self.get(key)? {
            AbstractVal::Num(n) => Some(n),
            AbstractVal::Bits(_) => None,
        }
    }

    pub fn contains(&self, key: &RegKey) -> bool {
        self.map.contains_key(key)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RegKey, AbstractVal)> {
        self.map.iter().map(|(k, v)| (k, *v))
    }
}

impl FromIterator<(RegKey, AbstractVal)> for AbstractEnv {
    fn from_iter<T: IntoIterator<Item = (RegKey, AbstractVal)>>(iter: T) -> AbstractEnv {
        AbstractEnv { map: iter.into_iter().collect() }
    }
}

impl std::fmt::Display for AbstractEnv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in self.iter() {
            writeln!(f, "{}: {}", k, v)?;
        }
        Ok(())
    }
}

/// Left-biased combination, the abstract counterpart of environment overlay.
pub fn overlay_abstract(first: &AbstractEnv, second: &AbstractEnv) -> AbstractEnv {
    let mut map = second.map.clone();
    for (k, v) in &first.map {
        map.insert(k.clone(), *v);
    }
    AbstractEnv { map }
}

/// Abstraction of a concrete environment: channel status bits become
/// singleton sets, state registers and stream numbers carry over, and
/// everything else is dropped.
///
/// Expects `sigma` to define every status bit, state register, and stream
/// key of `p`, which holds for any environment derived from `init_env`.
pub fn alpha(sigma: &Env, p: &Program) -> AbstractEnv {
    let mut abs = AbstractEnv::new();
    for c in 1..=p.connections.len() as u32 {
        for reg in [regs::READY, regs::VALID] {
            let key = RegKey::channel(c, reg);
            let v = sigma.lookup(&key).expect("status bit defined in any initialized environment");
            abs.insert(key, AbstractVal::Bits(BitSet::single(v)));
        }
    }
    for inst in &p.instances {
        let m = inst.instance_name.as_str();
        let key = RegKey::state_of(m);
        let v = sigma.lookup(&key).expect("state register defined in any initialized environment");
        abs.insert(key, AbstractVal::Num(v));
        if let Some(decl) = p.decl(&inst.decl_name) {
            for d in &decl.declarations {
                if matches!(
                    d,
                    crate::ast::Declaration::InStream { .. }
                        | crate::ast::Declaration::OutStream { .. }
                ) {
                    let key = RegKey::instance(m, d.name());
                    let v = sigma
                        .lookup(&key)
                        .expect("stream number defined in any initialized environment");
                    abs.insert(key, AbstractVal::Num(v));
                }
            }
        }
    }
    abs
}

fn channel_bits(abs: &AbstractEnv, m: &str, stream: &str) -> Option<(BitSet, BitSet)> {
    let c = abs.num(&RegKey::instance(m, stream))?;
    let c = u32::try_from(c).ok()?;
    let ready = abs.bits(&RegKey::channel(c, regs::READY))?;
    let valid = abs.bits(&RegKey::channel(c, regs::VALID))?;
    Some((ready, valid))
}

/// Evaluates a guard to the set of truth values it may take. Channel status
/// tests are tracked exactly; `&` and `|` combine operand sets pointwise;
/// anything that reads a data register is unknown and yields both values.
pub fn abstract_eval_guard(e: &Expr, abs: &AbstractEnv, m: &str) -> BitSet {
    match e {
        Expr::Number { value, .. } => BitSet::single(if *value == 1 { 1 } else { 0 }),
        Expr::ChannelReady { stream, .. } => match channel_bits(abs, m, stream) {
            Some((ready, valid)) => {
                let mut out = BitSet::EMPTY;
                // may be 1: some concretization has ready = 1 and valid = 0
                if ready.contains(1) && valid.contains(0) {
                    out.insert(1);
                }
                // may be 0: some concretization has ready = 0 or valid = 1
                if ready.contains(0) || valid.contains(1) {
                    out.insert(0);
                }
                out
            }
            None => BitSet::BOTH,
        },
        Expr::ChannelValid { stream, .. } => match channel_bits(abs, m, stream) {
            Some((ready, valid)) => {
                let mut out = BitSet::EMPTY;
                if ready.contains(1) && valid.contains(1) {
                    out.insert(1);
                }
                if ready.contains(0) || valid.contains(0) {
                    out.insert(0);
                }
                out
            }
            None => BitSet::BOTH,
        },
        Expr::BinOp { op, lhs, rhs, .. }
            if matches!(op, crate::ast::BinaryOp::And | crate::ast::BinaryOp::Or) =>
        {
            let a = abstract_eval_guard(lhs, abs, m);
            let b = abstract_eval_guard(rhs, abs, m);
            let mut out = BitSet::EMPTY;
            for x in a.iter() {
                for y in b.iter() {
                    let v = match op {
                        crate::ast::BinaryOp::And => (x == 1 && y == 1) as i64,
                        _ => (x == 1 || y == 1) as i64,
                    };
                    out.insert(v);
                }
            }
            out
        }
        // data registers are abstracted away, so any other expression may
        // evaluate to anything
        _ => BitSet::BOTH,
    }
}

/// All states a goto may select. Mux conditions are not refined: both
/// branches contribute.
pub fn abstract_eval_goto(g: &GotoExpr) -> BTreeSet<u32> {
    g.targets().into_iter().collect()
}

/// Possible per-cycle contributions of one module instance, as a set of
/// delta environments. An undecidable guard contributes the idle (empty)
/// delta as well as every proceeding one; a proceeding delta records the
/// channel status updates of the state's communication statements plus one
/// goto target.
pub fn abstract_module_step(
    decl: &ModuleDecl,
    abs: &AbstractEnv,
    m: &str,
) -> BTreeSet<AbstractEnv> {
    let mut out = BTreeSet::new();
    let Some(state) =
        abs.num(&RegKey::state_of(m)).and_then(|n| u32::try_from(n).ok()).and_then(|n| decl.state(n))
    else {
        out.insert(AbstractEnv::new());
        return out;
    };

    let guard = match &state.guard {
        Some(g) => abstract_eval_guard(g, abs, m),
        None => BitSet::ONE,
    };

    if guard.contains(0) {
        out.insert(AbstractEnv::new());
    }
    if guard.contains(1) {
        let mut stmt_delta = AbstractEnv::new();
        for stmt in &state.statements {
            let entry = match stmt {
                Statement::ChannelWrite { stream, .. } => abs
                    .num(&RegKey::instance(m, stream))
                    .and_then(|c| u32::try_from(c).ok())
                    .map(|c| (RegKey::channel(c, regs::VALID), AbstractVal::Bits(BitSet::ONE))),
                Statement::ChannelRead { stream, .. } => abs
                    .num(&RegKey::instance(m, stream))
                    .and_then(|c| u32::try_from(c).ok())
                    .map(|c| (RegKey::channel(c, regs::READY), AbstractVal::Bits(BitSet::ZERO))),
                _ => None,
            };
            if let Some((key, val)) = entry {
                if !stmt_delta.contains(&key) {
                    stmt_delta.insert(key, val);
                }
            }
        }
        for target in abstract_eval_goto(&state.goto) {
            let mut delta = stmt_delta.clone();
            if !delta.contains(&RegKey::state_of(m)) {
                delta.insert(RegKey::state_of(m), AbstractVal::Num(target as i64));
            }
            out.insert(delta);
        }
    }
    out
}

/// Abstract channel reset delta.
pub fn abstract_reset(p: &Program, abs: &AbstractEnv) -> AbstractEnv {
    let mut delta = AbstractEnv::new();
    for con in &p.connections {
        let Some(c) = abs
            .num(&RegKey::instance(&con.from_instance, &con.from_stream))
            .and_then(|n| u32::try_from(n).ok())
        else {
            continue;
        };
        let ready_key = RegKey::channel(c, regs::READY);
        let valid_key = RegKey::channel(c, regs::VALID);
        let Some(ready) = abs.bits(&ready_key) else { continue };
        let Some(valid) = abs.bits(&valid_key) else { continue };
        if ready == BitSet::BOTH {
            // the reset may or may not fire, so valid keeps its old values
            // and may also become 0
            delta.insert(ready_key, AbstractVal::Bits(BitSet::ONE));
            delta.insert(valid_key, AbstractVal::Bits(BitSet::ZERO.union(valid)));
        } else if ready == BitSet::ZERO {
            delta.insert(ready_key, AbstractVal::Bits(BitSet::ONE));
            delta.insert(valid_key, AbstractVal::Bits(BitSet::ZERO));
        }
    }
    delta
}

/// All abstract successors of one configuration: the cross product of every
/// instance's possible contributions, composed left to right, then the
/// reset delta, then the unchanged remainder of the configuration.
pub fn abstract_step(p: &Program, abs: &AbstractEnv) -> BTreeSet<AbstractEnv> {
    let mut combos: Vec<AbstractEnv> = vec![AbstractEnv::new()];
    for inst in &p.instances {
        let Some(decl) = p.decl(&inst.decl_name) else { continue };
        let choices = abstract_module_step(decl, abs, &inst.instance_name);
        let mut next = Vec::with_capacity(combos.len() * choices.len());
        for combo in &combos {
            for choice in &choices {
                next.push(overlay_abstract(combo, choice));
            }
        }
        combos = next;
    }
    let reset = abstract_reset(p, abs);
    combos
        .into_iter()
        .map(|delta| overlay_abstract(&overlay_abstract(&delta, &reset), abs))
        .collect()
}

/// Deduplicated set of reachable abstract environments, remembering
/// discovery order.
#[derive(Debug, Clone, Default)]
pub struct ReachableSet {
    order: Vec<AbstractEnv>,
    set: BTreeSet<AbstractEnv>,
}

impl ReachableSet {
    pub fn insert(&mut self, env: AbstractEnv) -> bool {
        if self.set.insert(env.clone()) {
            self.order.push(env);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, env: &AbstractEnv) -> bool {
        self.set.contains(env)
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Iterates in discovery order.
    pub fn iter(&self) -> impl Iterator<Item = &AbstractEnv> {
        self.order.iter()
    }
}

/// Channel status bits of one reachable configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ChannelBits {
    pub channel: u32,
    pub ready: BitSet,
    pub valid: BitSet,
}

/// One line of a report group: all channels' status bits plus the state of
/// every other instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ConfigRow {
    pub channels: Vec<ChannelBits>,
    pub others: Vec<(String, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateGroup {
    pub state: u32,
    pub configurations: Vec<ConfigRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSection {
    pub instance: String,
    pub states: Vec<StateGroup>,
}

/// Reachable configurations grouped per (instance, state), in instance
/// declaration order, state number order, and canonical row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    pub sections: Vec<InstanceSection>,
}

impl AnalysisReport {
    pub fn section(&self, instance: &str) -> Option<&InstanceSection> {
        self.sections.iter().find(|s| s.instance == instance)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            for group in &section.states {
                out.push_str(&format!("{},state : {}\n", section.instance, group.state));
                for row in &group.configurations {
                    let mut fields = Vec::new();
                    for ch in &row.channels {
                        fields.push(format!("{},ready: {}", ch.channel, ch.ready));
                        fields.push(format!("{},valid: {}", ch.channel, ch.valid));
                    }
                    for (inst, state) in &row.others {
                        fields.push(format!("{},state: {}", inst, state));
                    }
                    out.push_str(&format!("// {}\n", fields.join("  ")));
                }
            }
        }
        out
    }
}

fn build_report(p: &Program, reachable: &ReachableSet) -> AnalysisReport {
    let mut sections = Vec::new();
    for inst in &p.instances {
        let m = inst.instance_name.as_str();
        let Some(decl) = p.decl(&inst.decl_name) else { continue };
        let mut numbers: Vec<u32> = decl.states.iter().map(|s| s.number).collect();
        numbers.sort_unstable();
        let mut states = Vec::new();
        for number in numbers {
            let mut rows = BTreeSet::new();
            for env in reachable.iter() {
                if env.num(&RegKey::state_of(m)) != Some(number as i64) {
                    continue;
                }
                let channels = (1..=p.connections.len() as u32)
                    .map(|c| ChannelBits {
                        channel: c,
                        ready: env.bits(&RegKey::channel(c, regs::READY)).unwrap_or(BitSet::EMPTY),
                        valid: env.bits(&RegKey::channel(c, regs::VALID)).unwrap_or(BitSet::EMPTY),
                    })
                    .collect();
                let others = p
                    .instances
                    .iter()
                    .filter(|other| other.instance_name != m)
                    .map(|other| {
                        let state =
                            env.num(&RegKey::state_of(&other.instance_name)).unwrap_or(-1);
                        (other.instance_name.clone(), state)
                    })
                    .collect();
                rows.insert(ConfigRow { channels, others });
            }
            states.push(StateGroup { state: number, configurations: rows.into_iter().collect() });
        }
        sections.push(InstanceSection { instance: m.to_string(), states });
    }
    AnalysisReport { sections }
}

/// Collects every abstract environment reachable from the abstraction of
/// the initial environment, and the grouped report over them. Terminates on
/// every validated program: the abstract domain is finite.
pub fn analyze(p: &Program) -> (ReachableSet, AnalysisReport) {
    let initial = alpha(&crate::interp::init_env(p), p);
    let mut reachable = ReachableSet::default();
    let mut queue = VecDeque::new();
    reachable.insert(initial.clone());
    queue.push_back(initial);
    while let Some(env) = queue.pop_front() {
        for succ in abstract_step(p, &env) {
            if reachable.insert(succ.clone()) {
                queue.push_back(succ);
            }
        }
    }
    let report = build_report(p, &reachable);
    (reachable, report)
}

/// Upper bound on the abstract state space: four status bit combinations
/// per channel times the product of declared state counts.
pub fn state_space_bound(p: &Program) -> u128 {
    let mut bound: u128 = 4u128.saturating_pow(p.connections.len() as u32);
    for inst in &p.instances {
        if let Some(decl) = p.decl(&inst.decl_name) {
            bound = bound.saturating_mul(decl.states.len() as u128);
        }
    }
    bound
}

fn covered_by(concrete: &AbstractEnv, abstracted: &AbstractEnv) -> bool {
    concrete.iter().all(|(key, val)| match (val, abstracted.get(key)) {
        (AbstractVal::Bits(b), Some(AbstractVal::Bits(b2))) => b.iter().all(|x| b2.contains(x)),
        (AbstractVal::Num(n), Some(AbstractVal::Num(n2))) => n == n2,
        _ => false,
    })
}

/// Checks that the abstract transition safely approximates a concrete
/// execution: for every consecutive pair of trace environments, some
/// abstract successor of the first covers the abstraction of the second.
/// Expects a full trace (every cycle recorded).
pub fn check_soundness(p: &Program, trace: &Trace) -> bool {
    for pair in trace.snapshots.windows(2) {
        let (cycle_a, ref sigma_a) = pair[0];
        let (cycle_b, ref sigma_b) = pair[1];
        if cycle_b != cycle_a + 1 {
            continue; // not a single-step pair; nothing to check
        }
        let target = alpha(sigma_b, p);
        let successors = abstract_step(p, &alpha(sigma_a, p));
        if !successors.iter().any(|s| covered_by(&target, s)) {
            return false;
        }
    }
    true
}

/// Status bits of one channel in an abstract environment, as a pair.
pub fn project(env: &AbstractEnv, channel: u32) -> Option<(BitSet, BitSet)> {
    Some((
        env.bits(&RegKey::channel(channel, regs::READY))?,
        env.bits(&RegKey::channel(channel, regs::VALID))?,
    ))
}
