//! And-inverter graphs: inputs, latches with constant reset values, two-input
//! AND gates with complemented edges, and named outputs.

mod aiger;
mod blast;
mod reduce;
mod sim;

use std::collections::HashMap;

pub use aiger::{read_aiger, write_aiger, AigerError, AigerFormat, WriteOptions};
pub use blast::{bitblast, lower_variables, BitMap, BlastError, Blasted};
pub use reduce::{reduce, LatchFate, Reduced};
pub use sim::{AigSim, AigTrace};

/// A literal: `2 * var + complemented`. Variable 0 is the constant false.
pub type Lit = u32;

pub const FALSE: Lit = 0;
pub const TRUE: Lit = 1;

pub fn var_of(l: Lit) -> u32 {
    l >> 1
}

pub fn is_complemented(l: Lit) -> bool {
    l & 1 == 1
}

pub fn negate(l: Lit) -> Lit {
    l ^ 1
}

pub fn lit(var: u32, complemented: bool) -> Lit {
    2 * var + complemented as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const,
    Input(usize),
    Latch(usize),
    And(Lit, Lit),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Latch {
    pub var: u32,
    pub next: Lit,
    pub init: bool,
    pub name: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputKind {
    /// Asserted exactly when a safety property is violated.
    Bad,
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub lit: Lit,
    pub kind: OutputKind,
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WellFormedError {
    #[error("node {0} refers to an undefined variable")]
    Dangling(u32),
    #[error("combinational cycle through AND node {0}")]
    Cycle(u32),
    #[error("latch {0} has a next-state literal outside the network")]
    LatchNext(usize),
    #[error("output {0} refers to an undefined variable")]
    Output(usize),
    #[error("node table and input/latch lists disagree at variable {0}")]
    Table(u32),
}

/// A sequential circuit. Nodes are indexed by variable; AND nodes always
/// come after their fanins.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Aig {
    nodes: Vec<Node>,
    inputs: Vec<u32>,
    input_names: Vec<Option<String>>,
    latches: Vec<Latch>,
    outputs: Vec<Output>,
    strash: HashMap<(Lit, Lit), u32>,
}

impl Aig {
    pub fn new() -> Self {
        Aig {
            nodes: vec![Node::Const],
            ..Default::default()
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, var: u32) -> Node {
        self.nodes[var as usize]
    }

    pub fn max_var(&self) -> u32 {
        self.nodes.len() as u32 - 1
    }

    pub fn inputs(&self) -> &[u32] {
        &self.inputs
    }

    pub fn input_name(&self, i: usize) -> Option<&str> {
        self.input_names[i].as_deref()
    }

    pub fn latches(&self) -> &[Latch] {
        &self.latches
    }

    pub fn outputs(&self) -> &[Output] {
        &self.outputs
    }

    pub fn num_ands(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::And(..)))
            .count()
    }

    /// Variables of AND nodes, in topological order.
    pub fn and_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, Node::And(..)))
            .map(|(v, _)| v as u32)
    }

    pub fn add_input(&mut self, name: Option<String>) -> Lit {
        let v = self.nodes.len() as u32;
        self.nodes.push(Node::Input(self.inputs.len()));
        self.inputs.push(v);
        self.input_names.push(name);
        lit(v, false)
    }

    /// A latch whose next-state function is set later with [`Aig::set_next`];
    /// until then it holds its value.
    pub fn add_latch(&mut self, init: bool, name: Option<String>) -> (usize, Lit) {
        let v = self.nodes.len() as u32;
        let k = self.latches.len();
        self.nodes.push(Node::Latch(k));
        self.latches.push(Latch {
            var: v,
            next: lit(v, false),
            init,
            name,
        });
        (k, lit(v, false))
    }

    pub fn set_next(&mut self, latch: usize, next: Lit) {
        self.latches[latch].next = next;
    }

    pub fn set_init(&mut self, latch: usize, init: bool) {
        self.latches[latch].init = init;
    }

    pub fn add_output(&mut self, lit: Lit, kind: OutputKind, name: Option<String>) -> usize {
        self.outputs.push(Output { lit, kind, name });
        self.outputs.len() - 1
    }

    /// AND with constant propagation and structural hashing.
    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        if a == FALSE || b == FALSE || a == negate(b) {
            return FALSE;
        }
        if a == TRUE || a == b {
            return b;
        }
        if b == TRUE {
            return a;
        }
        self.and_hashed(a, b)
    }

    fn and_hashed(&mut self, a: Lit, b: Lit) -> Lit {
        let key = if a >= b { (a, b) } else { (b, a) };
        if let Some(&v) = self.strash.get(&key) {
            return lit(v, false);
        }
        let v = self.nodes.len() as u32;
        self.nodes.push(Node::And(key.0, key.1));
        self.strash.insert(key, v);
        lit(v, false)
    }

    /// AND without any simplification, for faithful reading of files.
    pub(crate) fn and_raw(&mut self, a: Lit, b: Lit) -> Lit {
        let key = if a >= b { (a, b) } else { (b, a) };
        let v = self.nodes.len() as u32;
        self.nodes.push(Node::And(key.0, key.1));
        self.strash.entry(key).or_insert(v);
        lit(v, false)
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        negate(self.and(negate(a), negate(b)))
    }

    pub fn mux(&mut self, c: Lit, t: Lit, e: Lit) -> Lit {
        if t == e {
            return t;
        }
        let x = self.and(c, t);
        let y = self.and(negate(c), e);
        self.or(x, y)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let x = self.and(a, negate(b));
        let y = self.and(negate(a), b);
        self.or(x, y)
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        negate(self.xor(a, b))
    }

    pub fn and_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(TRUE, |acc, l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: impl IntoIterator<Item = Lit>) -> Lit {
        lits.into_iter().fold(FALSE, |acc, l| self.or(acc, l))
    }

    /// Check the structural invariants: every reference resolves, AND nodes
    /// follow their fanins (so every cycle passes through a latch), and the
    /// input and latch tables match the node table.
    pub fn check(&self) -> Result<(), WellFormedError> {
        let n = self.nodes.len() as u32;
        if self.nodes.first() != Some(&Node::Const) {
            return Err(WellFormedError::Table(0));
        }
        for (v, node) in self.nodes.iter().enumerate() {
            let v = v as u32;
            match *node {
                Node::Const if v != 0 => return Err(WellFormedError::Table(v)),
                Node::Input(i) if self.inputs.get(i) != Some(&v) => {
                    return Err(WellFormedError::Table(v))
                }
                Node::Latch(k) if self.latches.get(k).map(|l| l.var) != Some(v) => {
                    return Err(WellFormedError::Table(v))
                }
                Node::And(a, b) => {
                    if var_of(a) >= n || var_of(b) >= n {
                        return Err(WellFormedError::Dangling(v));
                    }
                    if var_of(a) >= v || var_of(b) >= v {
                        return Err(WellFormedError::Cycle(v));
                    }
                }
                _ => {}
            }
        }
        for (i, &v) in self.inputs.iter().enumerate() {
            if self.nodes.get(v as usize) != Some(&Node::Input(i)) {
                return Err(WellFormedError::Table(v));
            }
        }
        for (k, l) in self.latches.iter().enumerate() {
            if self.nodes.get(l.var as usize) != Some(&Node::Latch(k)) {
                return Err(WellFormedError::Table(l.var));
            }
            if var_of(l.next) >= n {
                return Err(WellFormedError::LatchNext(k));
            }
        }
        for (o, out) in self.outputs.iter().enumerate() {
            if var_of(out.lit) >= n {
                return Err(WellFormedError::Output(o));
            }
        }
        Ok(())
    }

    /// No two AND nodes share the same ordered fanin pair.
    pub fn is_strashed(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::And(a, b) => Some((*a, *b)),
                _ => None,
            })
            .all(|k| seen.insert(k))
    }

    /// Longest chain of AND nodes feeding an output or a latch.
    pub fn levels(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (v, node) in self.nodes.iter().enumerate() {
            if let Node::And(a, b) = node {
                depth[v] = 1 + depth[var_of(*a) as usize].max(depth[var_of(*b) as usize]);
            }
        }
        self.outputs
            .iter()
            .map(|o| o.lit)
            .chain(self.latches.iter().map(|l| l.next))
            .map(|l| depth[var_of(l) as usize])
            .max()
            .unwrap_or(0)
    }

    pub fn bad_outputs(&self) -> impl Iterator<Item = (usize, &Output)> {
        self.outputs
            .iter()
            .enumerate()
            .filter(|(_, o)| o.kind == OutputKind::Bad)
    }

    /// Overwrite a node in place. Nothing is checked; see [`Aig::check`].
    pub fn set_node(&mut self, var: u32, node: Node) {
        self.nodes[var as usize] = node;
    }
}
