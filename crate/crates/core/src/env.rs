//! State environments.
//!
//! A design's state is a finite partial map from namespaced register keys to
//! integers. Absent keys are undefined. Each module instance and each
//! channel forms its own namespace; memory bank cells live under the
//! enclosing instance with a `bank::index` register name.

use std::collections::BTreeMap;

/// Owner of a register: a module instance (by name) or a channel (by number).
///
/// Channels order before instances, so the canonical serialization lists
/// channel status bits first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Namespace {
    Channel(u32),
    Instance(String),
}

impl std::fmt::Display for Namespace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Namespace::Channel(n) => write!(f, "{}", n),
            Namespace::Instance(name) => write!(f, "{}", name),
        }
    }
}

/// Reserved register names within a namespace.
pub mod regs {
    /// FSM state register of a module instance.
    pub const STATE: &str = "state";
    /// Channel payload register.
    pub const DATA: &str = "data";
    /// Channel status bit: writable side of the handshake.
    pub const READY: &str = "ready";
    /// Channel status bit: data present.
    pub const VALID: &str = "valid";
}

/// Two-part key: namespace plus register name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegKey {
    pub ns: Namespace,
    pub reg: String,
}

impl RegKey {
    pub fn instance(instance: &str, reg: &str) -> RegKey {
        RegKey { ns: Namespace::Instance(instance.to_string()), reg: reg.to_string() }
    }

    pub fn channel(channel: u32, reg: &str) -> RegKey {
        RegKey { ns: Namespace::Channel(channel), reg: reg.to_string() }
    }

    /// Key of one memory bank cell. The `::` separator cannot occur in user
    /// identifiers, so the encoding is injective.
    pub fn mem_cell(instance: &str, bank: &str, index: i64) -> RegKey {
        RegKey {
            ns: Namespace::Instance(instance.to_string()),
            reg: format!("{}::{}", bank, index),
        }
    }

    pub fn state_of(instance: &str) -> RegKey {
        RegKey::instance(instance, regs::STATE)
    }
}

impl std::fmt::Display for RegKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.ns, self.reg)
    }
}

/// Finite partial map from keys to integers; absent keys are undefined.
/// Iteration is in canonical key order (channels, then instances, each with
/// registers sorted by name).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Env {
    map: BTreeMap<RegKey, i64>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Returns the mapped value, or `None` when the key is undefined.
    pub fn lookup(&self, key: &RegKey) -> Option<i64> {
        self.map.get(key).copied()
    }

    pub fn insert(&mut self, key: RegKey, value: i64) {
        self.map.insert(key, value);
    }

    pub fn contains(&self, key: &RegKey) -> bool {
        self.map.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RegKey, i64)> {
        self.map.iter().map(|(k, v)| (k, *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &RegKey> {
        self.map.keys()
    }

    /// Serializes as one `namespace,register: value` line per key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.iter() {
            out.push_str(&format!("{}: {}\n", k, v));
        }
        out
    }
}

impl FromIterator<(RegKey, i64)> for Env {
    fn from_iter<T: IntoIterator<Item = (RegKey, i64)>>(iter: T) -> Env {
        Env { map: iter.into_iter().collect() }
    }
}

impl std::fmt::Display for Env {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Left-biased combination: the first environment's bindings win, the
/// second fills in whatever the first leaves undefined.
pub fn overlay(first: &Env, second: &Env) -> Env {
    let mut map = second.map.clone();
    for (k, v) in &first.map {
        map.insert(k.clone(), *v);
    }
    Env { map }
}

/// Extensional equality of two environments.
pub fn env_equal(a: &Env, b: &Env) -> bool {
    a == b
}
