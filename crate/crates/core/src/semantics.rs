//! Reference interpreter for BIP systems and a breadth-first explorer.
//!
//! This is the ground truth every translation is checked against: it works
//! directly on [`BipSystem`] and shares nothing with the circuit path except
//! the expression evaluator.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::bip::{BipExpr, BipRef, BipSystem, PortId, VarId};
use crate::expr::{eval, IntTy, Ty, Val};

/// Control location and variable valuation of every component.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalState {
    pub locations: Vec<usize>,
    /// `values[i][k]`: variable `k` of component `i`; booleans are 0/1.
    pub values: Vec<Vec<i64>>,
}

impl GlobalState {
    pub fn initial(sys: &BipSystem) -> Self {
        GlobalState {
            locations: sys.init_locations.clone(),
            values: sys
                .components
                .iter()
                .enumerate()
                .map(|(ci, c)| {
                    (0..c.variables.len())
                        .map(|var| sys.initial_value(VarId { comp: ci, var }))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn value(&self, v: VarId) -> i64 {
        self.values[v.comp][v.var]
    }

    /// One line per component: `name@loc x=1 y=true`.
    pub fn render(&self, sys: &BipSystem) -> String {
        let mut parts = Vec::new();
        for (ci, c) in sys.components.iter().enumerate() {
            let mut s = format!("{}@{}", c.name, c.locations[self.locations[ci]]);
            for (k, v) in c.variables.iter().enumerate() {
                let x = self.values[ci][k];
                match v.ty {
                    Ty::Bool => s += &format!(" {}={}", v.name, x != 0),
                    Ty::Int(_) => s += &format!(" {}={}", v.name, x),
                }
            }
            parts.push(s);
        }
        parts.join("; ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("interaction `{0}` is not enabled (or not maximal) in this state")]
    PreconditionViolated(String),
    #[error("component `{component}` has several enabled transitions on port `{port}`")]
    Ambiguity { component: String, port: String },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("state space exceeds the bound of {0} states")]
    BoundExceeded(usize),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// A sequence of fired interactions from the initial state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace(pub Vec<usize>);

impl Trace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `step k: <interaction>` lines followed by the state reached, starting
    /// with the initial state.
    pub fn render(&self, sys: &BipSystem) -> Result<String, StepError> {
        let interp = Interpreter::new(sys);
        let mut s = interp.initial();
        let mut out = format!("init: {}\n", s.render(sys));
        for (k, &j) in self.0.iter().enumerate() {
            s = interp.step(&s, j)?;
            out += &format!(
                "step {k}: {}\n  {}\n",
                sys.interactions[j].name,
                s.render(sys)
            );
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreReport {
    pub reachable: usize,
    /// Largest BFS depth of any reachable state.
    pub diameter: usize,
    /// Shortest trace to a state without enabled interactions.
    pub deadlock: Option<Trace>,
    /// Per invariant, a shortest trace to a state violating it.
    pub violations: Vec<Option<Trace>>,
}

impl fmt::Display for ExploreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "reachable states: {}, diameter: {}, deadlock: {}",
            self.reachable,
            self.diameter,
            match &self.deadlock {
                Some(t) => format!("depth {}", t.len()),
                None => "none".into(),
            }
        )
    }
}

pub struct Interpreter<'a> {
    sys: &'a BipSystem,
    below: Vec<Vec<bool>>,
}

impl<'a> Interpreter<'a> {
    pub fn new(sys: &'a BipSystem) -> Self {
        Interpreter {
            sys,
            below: sys.priority_closure(),
        }
    }

    pub fn system(&self) -> &'a BipSystem {
        self.sys
    }

    pub fn initial(&self) -> GlobalState {
        GlobalState::initial(self.sys)
    }

    pub fn eval(&self, state: &GlobalState, e: &BipExpr) -> Val {
        let r: Result<Val, ()> = eval(e, &mut |r, _| {
            Ok(match *r {
                BipRef::Var(v) => {
                    let x = state.value(v);
                    match self.sys.var(v).ty {
                        Ty::Bool => Val::Bool(x != 0),
                        Ty::Int(t) => Val::Int(x, t),
                    }
                }
                BipRef::At { comp, loc } => Val::Bool(state.locations[comp] == loc),
            })
        });
        r.expect("infallible lookup")
    }

    pub fn holds(&self, state: &GlobalState, e: &BipExpr) -> bool {
        self.eval(state, e).as_bool()
    }

    fn enabled_transitions(&self, state: &GlobalState, p: PortId) -> Vec<usize> {
        let c = &self.sys.components[p.comp];
        c.transitions_of(p.port)
            .filter(|(_, t)| t.src == state.locations[p.comp] && self.holds(state, &t.guard))
            .map(|(k, _)| k)
            .collect()
    }

    /// Some transition labelled by the port leaves the current location with
    /// a true guard.
    pub fn port_enabled(&self, state: &GlobalState, p: PortId) -> bool {
        let c = &self.sys.components[p.comp];
        c.transitions_of(p.port)
            .any(|(_, t)| t.src == state.locations[p.comp] && self.holds(state, &t.guard))
    }

    /// Interactions whose ports are all enabled and whose guard holds,
    /// in increasing index order.
    pub fn enabled_interactions(&self, state: &GlobalState) -> Vec<usize> {
        self.sys
            .interactions
            .iter()
            .enumerate()
            .filter(|(_, a)| {
                a.ports.iter().all(|p| self.port_enabled(state, *p)) && self.holds(state, &a.guard)
            })
            .map(|(j, _)| j)
            .collect()
    }

    /// Keep the interactions that are maximal among `enabled`.
    pub fn apply_priority(&self, enabled: &[usize]) -> Vec<usize> {
        enabled
            .iter()
            .copied()
            .filter(|&j| !enabled.iter().any(|&k| self.below[j][k]))
            .collect()
    }

    pub fn maximal_interactions(&self, state: &GlobalState) -> Vec<usize> {
        self.apply_priority(&self.enabled_interactions(state))
    }

    /// Fire interaction `j`: transfers first, all against the pre-state, then
    /// each involved component's transition actions against the post-transfer
    /// state. Transitions are chosen by their guards in the pre-state.
    pub fn step(&self, state: &GlobalState, j: usize) -> Result<GlobalState, StepError> {
        let sys = self.sys;
        let a = &sys.interactions[j];
        if !self.maximal_interactions(state).contains(&j) {
            return Err(StepError::PreconditionViolated(a.name.clone()));
        }
        let mut fired = Vec::with_capacity(a.ports.len());
        for p in &a.ports {
            match self.enabled_transitions(state, *p).as_slice() {
                [t] => fired.push((p.comp, *t)),
                _ => {
                    return Err(StepError::Ambiguity {
                        component: sys.components[p.comp].name.clone(),
                        port: sys.port(*p).name.clone(),
                    })
                }
            }
        }

        let mut next = state.clone();
        let transferred: Vec<(VarId, Val)> = a
            .transfers
            .iter()
            .map(|(v, e)| (*v, self.eval(state, e)))
            .collect();
        for (v, x) in transferred {
            next.values[v.comp][v.var] = store(sys.var(v).ty, x);
        }

        let mid = next.clone();
        for (ci, tk) in fired {
            let t = &sys.components[ci].transitions[tk];
            for (var, e) in &t.assignments {
                let x = self.eval(&mid, e);
                next.values[ci][*var] = store(sys.components[ci].variables[*var].ty, x);
            }
            next.locations[ci] = t.dest;
        }
        Ok(next)
    }

    /// Breadth-first exploration of every priority-maximal interaction.
    pub fn explore(
        &self,
        max_states: usize,
        invariants: &[BipExpr],
    ) -> Result<ExploreReport, ExploreError> {
        let init = self.initial();
        let mut index: HashMap<GlobalState, usize> = HashMap::new();
        // (state, parent, interaction, depth)
        let mut nodes: Vec<(GlobalState, usize, usize, usize)> = Vec::new();
        index.insert(init.clone(), 0);
        nodes.push((init, usize::MAX, usize::MAX, 0));
        let mut queue = VecDeque::from([0usize]);
        let mut deadlock = None;
        let mut violations: Vec<Option<usize>> = vec![None; invariants.len()];
        let mut diameter = 0;

        while let Some(n) = queue.pop_front() {
            let state = nodes[n].0.clone();
            let depth = nodes[n].3;
            diameter = diameter.max(depth);
            for (k, inv) in invariants.iter().enumerate() {
                if violations[k].is_none() && !self.holds(&state, inv) {
                    violations[k] = Some(n);
                }
            }
            let maximal = self.maximal_interactions(&state);
            if maximal.is_empty() && deadlock.is_none() {
                deadlock = Some(n);
            }
            for j in maximal {
                let succ = self.step(&state, j)?;
                if !index.contains_key(&succ) {
                    if nodes.len() >= max_states {
                        return Err(ExploreError::BoundExceeded(max_states));
                    }
                    index.insert(succ.clone(), nodes.len());
                    queue.push_back(nodes.len());
                    nodes.push((succ, n, j, depth + 1));
                }
            }
        }

        let trace_to = |mut n: usize| {
            let mut t = Vec::new();
            while nodes[n].1 != usize::MAX {
                t.push(nodes[n].2);
                n = nodes[n].1;
            }
            t.reverse();
            Trace(t)
        };
        Ok(ExploreReport {
            reachable: nodes.len(),
            diameter,
            deadlock: deadlock.map(trace_to),
            violations: violations.into_iter().map(|v| v.map(trace_to)).collect(),
        })
    }
}

fn store(ty: Ty, x: Val) -> i64 {
    match ty {
        Ty::Bool => x.as_bool() as i64,
        Ty::Int(t) => IntTy::wrap(t, x.as_int()),
    }
}
