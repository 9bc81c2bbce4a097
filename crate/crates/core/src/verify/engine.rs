//! Bounded model checking and k-induction on the bad outputs of a circuit.

use std::time::{Duration, Instant};

use super::cnf::{ExternalSolver, SatBackend, SolveError, Unroller};
use super::sat::Solver;
use crate::aig::{Aig, Lit};

/// Which SAT solver answers the queries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SolverChoice {
    #[default]
    Internal,
    /// A command taking a DIMACS path as its last argument.
    External(String),
}

impl SolverChoice {
    pub fn instantiate(&self, seed: u64) -> Box<dyn SatBackend> {
        match self {
            SolverChoice::Internal => Box::new(Solver::with_seed(seed)),
            SolverChoice::External(cmd) => Box::new(ExternalSolver::new(cmd)),
        }
    }
}

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(300);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub max_k: usize,
    /// Wall-clock budget per property; `None` is unlimited.
    pub time_limit: Option<Duration>,
    pub solver: SolverChoice,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            max_k: 20,
            time_limit: Some(DEFAULT_TIME_LIMIT),
            solver: SolverChoice::Internal,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("no bad output with index {0}")]
    BadIndex(usize),
    #[error("resource limit reached")]
    ResourceLimit,
    #[error("external solver: {0}")]
    Solver(String),
    #[error("counterexample does not replay on the circuit: {0}")]
    Unsound(String),
}

impl From<SolveError> for VerifyError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::ResourceLimit(_) => VerifyError::ResourceLimit,
            SolveError::External(m) => VerifyError::Solver(m),
        }
    }
}

/// Input bits per frame that drive the circuit from reset to a frame where
/// a bad output is asserted, with the latch bits they produce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CexTrace {
    pub output: usize,
    pub inputs: Vec<Vec<bool>>,
    pub latches: Vec<Vec<bool>>,
}

impl CexTrace {
    /// Index of the last frame.
    pub fn depth(&self) -> usize {
        self.inputs.len() - 1
    }

    /// Re-simulate and compare latch bits and the bad output.
    pub fn check(&self, aig: &Aig) -> Result<(), String> {
        let sim = aig.simulate(&self.inputs);
        if let Some(f) = (0..self.latches.len()).find(|&f| sim.latches[f] != self.latches[f]) {
            return Err(format!("latch bits differ at frame {f}"));
        }
        if !sim.outputs[self.depth()][self.output] {
            return Err(format!(
                "output {} is not asserted at frame {}",
                self.output,
                self.depth()
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BmcOutcome {
    SafeUpTo(usize),
    Cex(CexTrace),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InductionOutcome {
    Proved(usize),
    Unknown(usize),
    Cex(CexTrace),
}

fn bad_lit(aig: &Aig, output: usize) -> Result<Lit, VerifyError> {
    aig.outputs()
        .get(output)
        .map(|o| o.lit)
        .ok_or(VerifyError::BadIndex(output))
}

fn deadline(cfg: &CheckConfig) -> Option<Instant> {
    cfg.time_limit.map(|d| Instant::now() + d)
}

fn check_time(deadline: Option<Instant>) -> Result<(), VerifyError> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(VerifyError::ResourceLimit),
        _ => Ok(()),
    }
}

/// Incremental search for a bad frame reachable from reset. Depths are
/// checked in order; a depth shown clean is asserted clean for later ones.
struct Bmc<'a> {
    aig: &'a Aig,
    output: usize,
    bad: Lit,
    solver: Box<dyn SatBackend>,
    unroll: Unroller<'a>,
    clean: usize,
}

impl<'a> Bmc<'a> {
    fn new(
        aig: &'a Aig,
        output: usize,
        cfg: &CheckConfig,
        deadline: Option<Instant>,
    ) -> Result<Self, VerifyError> {
        let bad = bad_lit(aig, output)?;
        let mut solver = cfg.solver.instantiate(cfg.seed);
        solver.set_deadline(deadline);
        let unroll = Unroller::new(aig, solver.as_mut());
        Ok(Bmc {
            aig,
            output,
            bad,
            solver,
            unroll,
            clean: 0,
        })
    }

    fn check_next(&mut self) -> Result<Option<CexTrace>, VerifyError> {
        let k = self.clean;
        while self.unroll.num_frames() <= k {
            let first = self.unroll.num_frames() == 0;
            self.unroll.add_frame(self.solver.as_mut(), first);
        }
        let b = self.unroll.lit(k, self.bad);
        if self.solver.solve(&[b])? {
            let s = &self.solver;
            let inputs: Vec<Vec<bool>> = (0..=k)
                .map(|f| {
                    (0..self.aig.inputs().len())
                        .map(|i| s.model_value(self.unroll.input_var(f, i)))
                        .collect()
                })
                .collect();
            let latches: Vec<Vec<bool>> = (0..=k)
                .map(|f| {
                    (0..self.aig.latches().len())
                        .map(|l| s.model_value(self.unroll.latch_var(f, l)))
                        .collect()
                })
                .collect();
            let cex = CexTrace {
                output: self.output,
                inputs,
                latches,
            };
            cex.check(self.aig).map_err(VerifyError::Unsound)?;
            return Ok(Some(cex));
        }
        self.solver.add_clause(&[-b]);
        self.clean += 1;
        Ok(None)
    }
}

/// The least depth `K <= cfg.max_k` at which the bad output can be asserted.
pub fn bmc(aig: &Aig, output: usize, cfg: &CheckConfig) -> Result<BmcOutcome, VerifyError> {
    let deadline = deadline(cfg);
    let mut engine = Bmc::new(aig, output, cfg, deadline)?;
    for _ in 0..=cfg.max_k {
        check_time(deadline)?;
        if let Some(cex) = engine.check_next()? {
            return Ok(BmcOutcome::Cex(cex));
        }
    }
    Ok(BmcOutcome::SafeUpTo(cfg.max_k))
}

/// k-induction. The base case is the same incremental search as [`bmc`];
/// the step case asks for `k` good frames from an arbitrary state followed
/// by a bad one, adding state-difference constraints between frames only
/// when a spurious path revisits a state.
pub fn kinduction(
    aig: &Aig,
    output: usize,
    cfg: &CheckConfig,
) -> Result<InductionOutcome, VerifyError> {
    let deadline = deadline(cfg);
    let mut base = Bmc::new(aig, output, cfg, deadline)?;
    let bad = base.bad;
    let mut solver = cfg.solver.instantiate(cfg.seed);
    solver.set_deadline(deadline);
    let mut step = Unroller::new(aig, solver.as_mut());
    step.add_frame(solver.as_mut(), false);
    let nl = aig.latches().len();

    for k in 1..=cfg.max_k {
        check_time(deadline)?;
        if let Some(cex) = base.check_next()? {
            return Ok(InductionOutcome::Cex(cex));
        }
        step.add_frame(solver.as_mut(), false);
        let prev = step.lit(k - 1, bad);
        solver.add_clause(&[-prev]);
        let target = step.lit(k, bad);
        loop {
            check_time(deadline)?;
            if !solver.solve(&[target])? {
                return Ok(InductionOutcome::Proved(k));
            }
            let state = |f: usize| -> Vec<bool> {
                (0..nl)
                    .map(|l| solver.model_value(step.latch_var(f, l)))
                    .collect()
            };
            let states: Vec<Vec<bool>> = (0..=k).map(state).collect();
            let repeat = (0..=k)
                .flat_map(|j| (0..j).map(move |i| (i, j)))
                .find(|&(i, j)| states[i] == states[j]);
            let Some((i, j)) = repeat else { break };
            let mut differ = Vec::with_capacity(nl);
            for l in 0..nl {
                let (a, b) = (step.latch_var(i, l), step.latch_var(j, l));
                let d = solver.new_var();
                solver.add_clause(&[-d, a, b]);
                solver.add_clause(&[-d, -a, -b]);
                differ.push(d);
            }
            solver.add_clause(&differ);
        }
    }
    check_time(deadline)?;
    match base.check_next()? {
        Some(cex) => Ok(InductionOutcome::Cex(cex)),
        None => Ok(InductionOutcome::Unknown(cfg.max_k)),
    }
}
