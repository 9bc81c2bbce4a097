//! Cross-checking the three executable views of a system: the BIP
//! interpreter, the program simulator and the circuit simulator.
//!
//! The program runs on seeded random inputs; the circuit sees the same input
//! bits, and at every step-boundary the interpreter replays the interaction
//! the program selected.

use crate::aig::{AigSim, Blasted, LatchFate, Reduced};
use crate::bip::BipSystem;
use crate::olp::{simulate, EvalError, SeededInputs, SimTrace};
use crate::semantics::Interpreter;
use crate::translate::{TranslationOutput, ENABLED, MAXIMAL, SELECTED};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LockstepError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("frame {frame}: {detail}")]
    Mismatch { frame: usize, detail: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LockstepReport {
    pub frames: usize,
    pub boundaries: usize,
    /// Interactions fired, in order.
    pub fired: Vec<usize>,
    /// Set when a boundary state had no maximal interaction.
    pub deadlock_frame: Option<usize>,
    /// Register bits compared between program and circuit.
    pub bits_compared: usize,
}

/// Run `steps` BIP steps (the program runs `steps` times its steps per
/// interaction) from `seed` and compare all three views.
pub fn lockstep(
    sys: &BipSystem,
    out: &TranslationOutput,
    blasted: &Blasted,
    reduced: Option<&Reduced>,
    steps: usize,
    seed: u64,
) -> Result<LockstepReport, LockstepError> {
    let trace = simulate(
        &out.program,
        steps * out.steps_per_interaction(),
        &mut SeededInputs::new(seed),
    )?;
    check_trace(sys, out, blasted, reduced, &trace)
}

/// Compare a recorded program run against the circuit and the interpreter.
pub fn check_trace(
    sys: &BipSystem,
    out: &TranslationOutput,
    blasted: &Blasted,
    reduced: Option<&Reduced>,
    trace: &SimTrace,
) -> Result<LockstepReport, LockstepError> {
    let prog = &out.program;
    let interp = Interpreter::new(sys);
    let mut aig = AigSim::new(&blasted.aig);
    let mut small = reduced.map(|r| AigSim::new(&r.aig));
    let mut report = LockstepReport::default();
    let mut expected = interp.initial();

    for (f, vals) in trace.frames.iter().enumerate() {
        let mismatch = |detail: String| LockstepError::Mismatch { frame: f, detail };
        let words: Vec<u64> = blasted
            .bits
            .input_bits(vals)
            .into_iter()
            .map(u64::from)
            .collect();
        aig.evaluate(&words);
        for &s in prog.registers() {
            let v = blasted
                .bits
                .decode(s, prog.slots()[s].ty, |l| aig.lit_value(l) & 1 == 1);
            report.bits_compared += blasted.bits.slots[s].len();
            if v != vals[s] {
                return Err(mismatch(format!(
                    "register `{}` is {} in the program and {v} in the circuit",
                    prog.slot_name(s),
                    vals[s]
                )));
            }
        }
        if let (Some(sim), Some(r)) = (small.as_mut(), reduced) {
            sim.evaluate(&words);
            for (k, fate) in r.latches.iter().enumerate() {
                let full = aig.latch_values()[k] & 1 == 1;
                let ok = match *fate {
                    LatchFate::Kept(i) => (sim.latch_values()[i] & 1 == 1) == full,
                    LatchFate::Constant(c) => c == full,
                    LatchFate::Removed => true,
                };
                if !ok {
                    return Err(mismatch(format!(
                        "reduced circuit disagrees on latch {k} ({fate:?})"
                    )));
                }
            }
            for o in 0..r.aig.outputs().len() {
                if sim.output(o) & 1 != aig.output(o) & 1 {
                    return Err(mismatch(format!("reduced circuit disagrees on output {o}")));
                }
            }
            sim.commit();
        }
        aig.commit();

        if !out.at_boundary(vals) {
            continue;
        }
        report.boundaries += 1;
        let state = out.bip_state(sys, vals);
        if expected != state {
            return Err(mismatch(format!(
                "program state {} differs from interpreter state {}",
                state.render(sys),
                expected.render(sys)
            )));
        }
        let flags = |xs: Vec<bool>| -> Vec<usize> { (0..xs.len()).filter(|&j| xs[j]).collect() };
        let enabled = flags(out.interaction_wires(ENABLED, vals));
        let maximal = flags(out.interaction_wires(MAXIMAL, vals));
        let selected = flags(out.interaction_wires(SELECTED, vals));
        if enabled != interp.enabled_interactions(&state) {
            return Err(mismatch(format!(
                "enabled set {enabled:?} differs from the interpreter"
            )));
        }
        if maximal != interp.maximal_interactions(&state) {
            return Err(mismatch(format!(
                "maximal set {maximal:?} differs from the interpreter"
            )));
        }
        expected = match selected[..] {
            [] if maximal.is_empty() => {
                report.deadlock_frame.get_or_insert(f);
                state
            }
            [] => {
                return Err(mismatch(
                    "nothing selected although an interaction is maximal".into(),
                ))
            }
            [j] => {
                report.fired.push(j);
                interp.step(&state, j).map_err(|e| {
                    mismatch(format!("selected `{}`: {e}", sys.interactions[j].name))
                })?
            }
            _ => {
                return Err(mismatch(format!(
                    "several interactions selected: {selected:?}"
                )))
            }
        };
    }
    report.frames = trace.frames.len();
    Ok(report)
}
