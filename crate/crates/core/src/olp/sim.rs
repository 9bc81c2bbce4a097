use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{OlpProgram, SlotRef, SlotRole};
use crate::expr::{eval, Expr, Need, Ty, Val};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Invalid(#[from] super::OlpError),
    #[error("index {index} out of bounds for `{array}`")]
    ArrayIndexOutOfBounds { array: String, index: i64 },
}

/// One value per slot of the program; booleans are 0/1 and integers hold
/// their mathematical value within the declared range.
pub type Valuation = Vec<i64>;

fn load(ty: Ty, x: i64) -> Val {
    match ty {
        Ty::Bool => Val::Bool(x != 0),
        Ty::Int(t) => Val::Int(x, t),
    }
}

fn store(ty: Ty, v: Val) -> i64 {
    match v.coerce(ty) {
        Val::Bool(b) => b as i64,
        Val::Int(x, _) => x,
    }
}

pub(crate) fn eval_slots(
    prog: &OlpProgram,
    e: &Expr<SlotRef>,
    vals: &[i64],
) -> Result<Val, EvalError> {
    let slots = &prog.compiled().slots;
    eval(e, &mut |r, need| match r {
        SlotRef::Fixed(s) => Ok(load(slots[*s].ty, vals[*s])),
        SlotRef::Dynamic {
            decl,
            base,
            len,
            index,
        } => {
            let ty = slots[*base].ty;
            if need == Need::Type {
                return Ok(load(ty, 0));
            }
            let k = eval_slots(prog, index, vals)?.as_int();
            if k < 0 || k as usize >= *len {
                return Err(EvalError::ArrayIndexOutOfBounds {
                    array: prog.decls()[*decl].name.clone(),
                    index: k,
                });
            }
            Ok(load(ty, vals[base + k as usize]))
        }
    })
}

/// Set the primary inputs and compute every defined wire, in topological
/// order, from the registers already in `vals`.
pub fn olp_eval_wires(
    prog: &OlpProgram,
    vals: &mut Valuation,
    pis: &[i64],
) -> Result<(), EvalError> {
    let c = prog.compiled();
    for (&s, &x) in c.inputs.iter().zip(pis) {
        vals[s] = store(c.slots[s].ty, load(c.slots[s].ty, x));
    }
    for (s, e) in &c.wires {
        let v = eval_slots(prog, e, vals)?;
        vals[*s] = store(c.slots[*s].ty, v);
    }
    Ok(())
}

/// Initial register state: the init list evaluated simultaneously. `pis`
/// is only consulted by programs whose init expressions read inputs.
pub fn olp_init(prog: &OlpProgram, pis: &[i64]) -> Result<Valuation, EvalError> {
    let c = prog.compiled();
    let mut vals = vec![0; c.slots.len()];
    olp_eval_wires(prog, &mut vals, pis)?;
    let mut out = vec![0; c.slots.len()];
    for (s, e) in &c.inits {
        out[*s] = store(c.slots[*s].ty, eval_slots(prog, e, &vals)?);
    }
    Ok(out)
}

/// One iteration of the loop: wires from the pre-state and `pis`, then all
/// next-list right-hand sides against that valuation, committed together.
/// Wire and input slots of the result keep their pre-state values.
pub fn olp_step(prog: &OlpProgram, state: &[i64], pis: &[i64]) -> Result<Valuation, EvalError> {
    let c = prog.compiled();
    let mut frame = state.to_vec();
    olp_eval_wires(prog, &mut frame, pis)?;
    let mut next = frame.clone();
    for (s, e) in &c.nexts {
        next[*s] = store(c.slots[*s].ty, eval_slots(prog, e, &frame)?);
    }
    Ok(next)
}

/// A deterministic stream of primary-input vectors.
pub trait InputSource {
    fn next_inputs(&mut self, prog: &OlpProgram) -> Vec<i64>;
}

/// Uniformly random bits for every input, from a seeded ChaCha stream.
pub struct SeededInputs(ChaCha8Rng);

impl SeededInputs {
    pub fn new(seed: u64) -> Self {
        SeededInputs(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl InputSource for SeededInputs {
    fn next_inputs(&mut self, prog: &OlpProgram) -> Vec<i64> {
        let slots = &prog.compiled().slots;
        prog.inputs()
            .iter()
            .map(|&s| {
                let ty = slots[s].ty;
                let bits = ty.bits();
                let raw: u64 = self.0.gen::<u64>() & (u64::MAX >> (64 - bits));
                store(ty, Val::from_bits(raw, ty))
            })
            .collect()
    }
}

/// Pre-recorded input vectors; zeros once exhausted.
pub struct ExplicitInputs {
    vectors: Vec<Vec<i64>>,
    at: usize,
}

impl ExplicitInputs {
    pub fn new(vectors: Vec<Vec<i64>>) -> Self {
        ExplicitInputs { vectors, at: 0 }
    }
}

impl InputSource for ExplicitInputs {
    fn next_inputs(&mut self, prog: &OlpProgram) -> Vec<i64> {
        let v = self
            .vectors
            .get(self.at)
            .cloned()
            .unwrap_or_else(|| vec![0; prog.inputs().len()]);
        self.at += 1;
        v
    }
}

/// `frames[k]` is the full valuation at step `k`: the register state
/// together with the inputs drawn for that step and the wires they induce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimTrace {
    pub init_inputs: Option<Vec<i64>>,
    pub inputs: Vec<Vec<i64>>,
    pub frames: Vec<Valuation>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Run `steps` iterations. Inputs for the init list are drawn first, and only
/// when the init list reads an input.
pub fn simulate(
    prog: &OlpProgram,
    steps: usize,
    source: &mut dyn InputSource,
) -> Result<SimTrace, EvalError> {
    let init_inputs = prog.init_reads_inputs().then(|| source.next_inputs(prog));
    let empty = vec![0; prog.inputs().len()];
    let mut state = olp_init(prog, init_inputs.as_deref().unwrap_or(&empty))?;
    let mut frames = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let pis = source.next_inputs(prog);
        let mut frame = state.clone();
        olp_eval_wires(prog, &mut frame, &pis)?;
        if k < steps {
            state = olp_step(prog, &state, &pis)?;
        }
        frames.push(frame);
        inputs.push(pis);
    }
    Ok(SimTrace {
        init_inputs,
        inputs,
        frames,
    })
}

impl OlpProgram {
    /// Value of `name` (element `k` for arrays) in a valuation.
    pub fn value(&self, vals: &[i64], name: &str, element: Option<usize>) -> Option<Val> {
        let s = self.slot(name, element)?;
        Some(load(self.compiled().slots[s].ty, vals[s]))
    }

    /// Evaluate a source-level expression under a full valuation.
    pub fn eval_expr(&self, e: &super::OlpExpr, vals: &[i64]) -> Result<Val, EvalError> {
        let compiled = self.compile_expr(e)?;
        eval_slots(self, &compiled, vals)
    }

    pub fn is_register(&self, slot: usize) -> bool {
        self.compiled().slots[slot].role == SlotRole::Register
    }
}
