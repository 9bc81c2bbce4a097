//! Tseitin unrolling of a circuit into CNF, DIMACS text, and the solver
//! backends the model checkers run on.

use std::io::Write;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use super::sat::{ResourceLimit, Solver};
use crate::aig::{is_complemented, var_of, Aig, Lit, Node};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    ResourceLimit(#[from] ResourceLimit),
    #[error("external solver: {0}")]
    External(String),
}

/// Anything clauses can be loaded into.
pub trait ClauseSink {
    fn new_var(&mut self) -> i32;
    fn add_clause(&mut self, lits: &[i32]);
}

/// An incremental SAT solver.
pub trait SatBackend: ClauseSink + Send {
    fn solve(&mut self, assumptions: &[i32]) -> Result<bool, SolveError>;
    /// Value of a DIMACS literal in the last model.
    fn model_value(&self, lit: i32) -> bool;
    fn set_deadline(&mut self, deadline: Option<Instant>);
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> i32 {
        Solver::new_var(self)
    }

    fn add_clause(&mut self, lits: &[i32]) {
        Solver::add_clause(self, lits);
    }
}

impl SatBackend for Solver {
    fn solve(&mut self, assumptions: &[i32]) -> Result<bool, SolveError> {
        Ok(Solver::solve(self, assumptions)?)
    }

    fn model_value(&self, lit: i32) -> bool {
        Solver::model_value(self, lit)
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        Solver::set_deadline(self, deadline)
    }
}

/// A plain clause list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
}

impl ClauseSink for Cnf {
    fn new_var(&mut self) -> i32 {
        self.num_vars += 1;
        self.num_vars as i32
    }

    fn add_clause(&mut self, lits: &[i32]) {
        let max = lits
            .iter()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        self.num_vars = self.num_vars.max(max);
        self.clauses.push(lits.to_vec());
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("DIMACS line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

impl Cnf {
    /// Whether an assignment (`model[v - 1]` for variable `v`) satisfies
    /// every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| {
                let v = model
                    .get(l.unsigned_abs() as usize - 1)
                    .copied()
                    .unwrap_or(false);
                v == (l > 0)
            })
        })
    }

    /// DIMACS text; `units` are appended as extra one-literal clauses.
    pub fn to_dimacs(&self, units: &[i32]) -> String {
        let mut s = format!(
            "p cnf {} {}\n",
            self.num_vars,
            self.clauses.len() + units.len()
        );
        for c in self
            .clauses
            .iter()
            .map(|c| c.as_slice())
            .chain(units.iter().map(std::slice::from_ref))
        {
            for l in c {
                s += &format!("{l} ");
            }
            s += "0\n";
        }
        s
    }

    pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
        let mut cnf = Cnf::default();
        let mut declared = None;
        let mut current = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let err = |message: String| DimacsError {
                line: idx + 1,
                message,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 3 || f[0] != "cnf" {
                    return Err(err("malformed problem line".into()));
                }
                let v = f[1].parse().map_err(|_| err("bad variable count".into()))?;
                let c: usize = f[2].parse().map_err(|_| err("bad clause count".into()))?;
                cnf.num_vars = v;
                declared = Some(c);
                continue;
            }
            if declared.is_none() {
                return Err(err("clause before problem line".into()));
            }
            for tok in line.split_whitespace() {
                let l: i32 = tok
                    .parse()
                    .map_err(|_| err(format!("bad literal `{tok}`")))?;
                if l == 0 {
                    cnf.add_clause(&current);
                    current.clear();
                } else {
                    current.push(l);
                }
            }
        }
        if !current.is_empty() {
            cnf.add_clause(&current);
        }
        match declared {
            None => Err(DimacsError {
                line: 0,
                message: "missing problem line".into(),
            }),
            Some(c) if c != cnf.clauses.len() => Err(DimacsError {
                line: 0,
                message: format!("header declares {c} clauses, found {}", cnf.clauses.len()),
            }),
            _ => Ok(cnf),
        }
    }
}

/// Output of a DIMACS solver in the competition format.
pub fn parse_solver_output(
    status: Option<i32>,
    stdout: &str,
    num_vars: usize,
) -> Result<Option<Vec<bool>>, String> {
    let mut verdict = match status {
        Some(10) => Some(true),
        Some(20) => Some(false),
        _ => None,
    };
    let mut model = vec![false; num_vars];
    for line in stdout.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            verdict = match s.trim() {
                "SATISFIABLE" => Some(true),
                "UNSATISFIABLE" => Some(false),
                other => return Err(format!("unexpected status `{other}`")),
            };
        } else if let Some(vs) = line.strip_prefix('v') {
            for tok in vs.split_whitespace() {
                let l: i64 = tok
                    .parse()
                    .map_err(|_| format!("bad model literal `{tok}`"))?;
                if l != 0 && (l.unsigned_abs() as usize) <= num_vars {
                    model[l.unsigned_abs() as usize - 1] = l > 0;
                }
            }
        }
    }
    match verdict {
        Some(true) => Ok(Some(model)),
        Some(false) => Ok(None),
        None => Err(format!("no verdict (exit status {status:?})")),
    }
}

/// Runs a command on a DIMACS file for every query; the clause set is
/// rebuilt from scratch each time, with assumptions as unit clauses.
#[derive(Clone, Debug)]
pub struct ExternalSolver {
    command: Vec<String>,
    cnf: Cnf,
    model: Vec<bool>,
    deadline: Option<Instant>,
}

static QUERY: AtomicU64 = AtomicU64::new(0);

impl ExternalSolver {
    /// `command` is split on whitespace; the CNF path is appended.
    pub fn new(command: &str) -> Self {
        ExternalSolver {
            command: command.split_whitespace().map(str::to_string).collect(),
            cnf: Cnf::default(),
            model: Vec::new(),
            deadline: None,
        }
    }
}

impl ClauseSink for ExternalSolver {
    fn new_var(&mut self) -> i32 {
        self.cnf.new_var()
    }

    fn add_clause(&mut self, lits: &[i32]) {
        self.cnf.add_clause(lits)
    }
}

impl SatBackend for ExternalSolver {
    fn solve(&mut self, assumptions: &[i32]) -> Result<bool, SolveError> {
        if matches!(self.deadline, Some(d) if Instant::now() >= d) {
            return Err(ResourceLimit.into());
        }
        let (prog, args) = self
            .command
            .split_first()
            .ok_or_else(|| SolveError::External("empty command".into()))?;
        let path = std::env::temp_dir().join(format!(
            "bipc-{}-{}.cnf",
            std::process::id(),
            QUERY.fetch_add(1, Ordering::Relaxed)
        ));
        let io = |e: std::io::Error| SolveError::External(e.to_string());
        std::fs::File::create(&path)
            .and_then(|mut f| f.write_all(self.cnf.to_dimacs(assumptions).as_bytes()))
            .map_err(io)?;
        let out = Command::new(prog).args(args).arg(&path).output();
        let _ = std::fs::remove_file(&path);
        let out = out.map_err(io)?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        match parse_solver_output(out.status.code(), &stdout, self.cnf.num_vars)
            .map_err(SolveError::External)?
        {
            Some(model) => {
                self.model = model;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn model_value(&self, lit: i32) -> bool {
        self.model
            .get(lit.unsigned_abs() as usize - 1)
            .copied()
            .unwrap_or(false)
            == (lit > 0)
    }

    fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }
}

/// Time frames of a circuit laid out as CNF. Every frame has one variable
/// per input, latch and AND node; a single shared variable stands for the
/// constant.
#[derive(Clone, Debug)]
pub struct Unroller<'a> {
    aig: &'a Aig,
    constant: i32,
    frames: Vec<Vec<i32>>,
}

impl<'a> Unroller<'a> {
    /// Allocates the constant variable and its unit clause.
    pub fn new(aig: &'a Aig, sink: &mut dyn ClauseSink) -> Self {
        let constant = sink.new_var();
        sink.add_clause(&[-constant]);
        Unroller {
            aig,
            constant,
            frames: Vec::new(),
        }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Append a frame: three clauses per AND node, and either the reset
    /// values of the latches (first frame with `reset`) or two clauses per
    /// latch tying it to the previous frame's next-state function.
    pub fn add_frame(&mut self, sink: &mut dyn ClauseSink, reset: bool) -> usize {
        let f = self.frames.len();
        let mut vars = vec![0i32; self.aig.nodes().len()];
        vars[0] = self.constant;
        for (v, node) in self.aig.nodes().iter().enumerate() {
            if !matches!(node, Node::Const) {
                vars[v] = sink.new_var();
            }
        }
        let map = |vars: &[i32], l: Lit| {
            let x = vars[var_of(l) as usize];
            if is_complemented(l) {
                -x
            } else {
                x
            }
        };
        for (v, node) in self.aig.nodes().iter().enumerate() {
            if let Node::And(a, b) = *node {
                let (o, a, b) = (vars[v], map(&vars, a), map(&vars, b));
                sink.add_clause(&[-o, a]);
                sink.add_clause(&[-o, b]);
                sink.add_clause(&[o, -a, -b]);
            }
        }
        for l in self.aig.latches() {
            let x = vars[l.var as usize];
            if f == 0 {
                if reset {
                    sink.add_clause(&[if l.init { x } else { -x }]);
                }
            } else {
                let n = map(&self.frames[f - 1], l.next);
                sink.add_clause(&[-x, n]);
                sink.add_clause(&[x, -n]);
            }
        }
        self.frames.push(vars);
        f
    }

    /// CNF literal of a circuit literal in a frame.
    pub fn lit(&self, frame: usize, l: Lit) -> i32 {
        let x = self.frames[frame][var_of(l) as usize];
        if is_complemented(l) {
            -x
        } else {
            x
        }
    }

    pub fn latch_var(&self, frame: usize, latch: usize) -> i32 {
        self.frames[frame][self.aig.latches()[latch].var as usize]
    }

    pub fn input_var(&self, frame: usize, input: usize) -> i32 {
        self.frames[frame][self.aig.inputs()[input] as usize]
    }
}
