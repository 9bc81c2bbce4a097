//! BIP models: atomic components with guarded transitions, multiparty
//! interactions with data transfer, and a priority order on interactions.

mod parse;
mod print;
mod validate;

use std::fmt;

pub use parse::{parse_invariants, parse_system, Invariant};
pub use print::print_system;
pub use validate::validate;

use crate::expr::{Expr, Ty};
use crate::syntax::Pos;

/// Default width of an `int` variable without an explicit `<w>`.
pub const DEFAULT_INT_WIDTH: u32 = 32;

/// Variable names that would collide with generated registers.
pub const RESERVED_VARS: &[&str] = &["loc", "fire"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId {
    pub comp: usize,
    pub var: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId {
    pub comp: usize,
    pub port: usize,
}

/// A resolved reference inside a BIP expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BipRef {
    Var(VarId),
    /// `C @ loc`: true when component `comp` is at location `loc`.
    At {
        comp: usize,
        loc: usize,
    },
}

pub type BipExpr = Expr<BipRef>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub ty: Ty,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    /// Indices into the owning component's variables.
    pub support: Vec<usize>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub src: usize,
    pub port: usize,
    pub guard: BipExpr,
    /// Simultaneous assignments `(variable index, expression)`.
    pub assignments: Vec<(usize, BipExpr)>,
    pub dest: usize,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicComponent {
    pub name: String,
    pub variables: Vec<Variable>,
    pub ports: Vec<Port>,
    pub locations: Vec<String>,
    pub transitions: Vec<Transition>,
    pub pos: Pos,
}

impl AtomicComponent {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn port_index(&self, name: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.name == name)
    }

    pub fn loc_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l == name)
    }

    /// Transitions labelled by `port`, in declaration order.
    pub fn transitions_of(&self, port: usize) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.port == port)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub name: String,
    pub ports: Vec<PortId>,
    pub guard: BipExpr,
    /// Simultaneous data transfers `target := expression`.
    pub transfers: Vec<(VarId, BipExpr)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipSystem {
    pub components: Vec<AtomicComponent>,
    pub interactions: Vec<Interaction>,
    /// Declared pairs `(low, high)`: interaction `low` has less priority.
    pub priority: Vec<(usize, usize)>,
    pub init_locations: Vec<usize>,
    /// Explicit initial values; unlisted variables start at 0 / false.
    pub init_valuation: Vec<(VarId, i64)>,
}

impl BipSystem {
    pub fn var(&self, id: VarId) -> &Variable {
        &self.components[id.comp].variables[id.var]
    }

    pub fn port(&self, id: PortId) -> &Port {
        &self.components[id.comp].ports[id.port]
    }

    pub fn interaction_index(&self, name: &str) -> Option<usize> {
        self.interactions.iter().position(|a| a.name == name)
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn var_name(&self, id: VarId) -> String {
        format!("{}.{}", self.components[id.comp].name, self.var(id).name)
    }

    /// Initial value of a variable, defaulting to zero.
    pub fn initial_value(&self, id: VarId) -> i64 {
        self.init_valuation
            .iter()
            .find(|(v, _)| *v == id)
            .map(|(_, x)| *x)
            .unwrap_or(0)
    }

    /// `m[j][k]` is true iff `j ≺ k` in the transitive closure of the
    /// declared priority pairs.
    pub fn priority_closure(&self) -> Vec<Vec<bool>> {
        let n = self.interactions.len();
        let mut m = vec![vec![false; n]; n];
        for &(lo, hi) in &self.priority {
            if lo < n && hi < n {
                m[lo][hi] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if m[i][k] {
                    let via = m[k].clone();
                    for (x, y) in m[i].iter_mut().zip(via) {
                        *x |= y;
                    }
                }
            }
        }
        m
    }

    /// Interactions in which a given port participates.
    pub fn interactions_of(&self, port: PortId) -> Vec<usize> {
        self.interactions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.ports.contains(&port))
            .map(|(j, _)| j)
            .collect()
    }

    /// Reset every source position, so that systems built from different
    /// texts compare by structure alone.
    pub fn strip_positions(&mut self) {
        for c in &mut self.components {
            c.pos = Pos::default();
            c.variables.iter_mut().for_each(|v| v.pos = Pos::default());
            c.ports.iter_mut().for_each(|p| p.pos = Pos::default());
            c.transitions
                .iter_mut()
                .for_each(|t| t.pos = Pos::default());
        }
        self.interactions
            .iter_mut()
            .for_each(|a| a.pos = Pos::default());
    }

    /// Print an expression with qualified names.
    pub fn show<'a>(&'a self, e: &'a BipExpr) -> impl fmt::Display + 'a {
        e.display_with(move |r, f| match r {
            BipRef::Var(v) => write!(f, "{}", self.var_name(*v)),
            BipRef::At { comp, loc } => write!(
                f,
                "{} @ {}",
                self.components[*comp].name, self.components[*comp].locations[*loc]
            ),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagKind {
    Syntax,
    DuplicateName,
    Undeclared,
    PortSupport,
    Priority,
    Type,
    Scope,
    Init,
    Structure,
    Ambiguity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagKind,
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn error(kind: DiagKind, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            kind,
            pos,
            message: message.into(),
        }
    }

    pub fn warning(kind: DiagKind, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            kind,
            pos,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {sev}: {}", self.pos, self.message)
    }
}

/// Errors from [`parse_system`]: every error-severity diagnostic, in
/// source order.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{}", render(.0))]
pub struct Diagnostics(pub Vec<Diagnostic>);

fn render(d: &[Diagnostic]) -> String {
    d.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
