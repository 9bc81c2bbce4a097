//! Mapping circuit counterexamples back to BIP executions.

use super::engine::CexTrace;
use crate::aig::{AigSim, Blasted};
use crate::bip::BipSystem;
use crate::olp::Valuation;
use crate::semantics::{GlobalState, Interpreter};
use crate::translate::{TranslationOutput, ENABLED, MAXIMAL, SELECTED};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LiftError {
    #[error("trace does not assert property output {0} on its last frame")]
    NotACounterexample(usize),
    #[error("step {step}: {detail}")]
    Mismatch { step: usize, detail: String },
}

/// One fired interaction and the state it leads to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipStep {
    pub interaction: usize,
    pub state: GlobalState,
}

/// A counterexample as a run of the BIP system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipCex {
    /// Index into the translation's properties.
    pub property: usize,
    pub initial: GlobalState,
    pub steps: Vec<BipStep>,
}

impl BipCex {
    pub fn final_state(&self) -> &GlobalState {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }

    /// Check every step against the interpreter: the interaction must be
    /// enabled and maximal, and firing it must give the recorded state.
    pub fn replay(&self, sys: &BipSystem) -> Result<(), LiftError> {
        let interp = Interpreter::new(sys);
        if self.initial != interp.initial() {
            return Err(LiftError::Mismatch {
                step: 0,
                detail: "initial state differs from the system's".into(),
            });
        }
        let mut s = self.initial.clone();
        for (k, st) in self.steps.iter().enumerate() {
            let next = interp
                .step(&s, st.interaction)
                .map_err(|e| LiftError::Mismatch {
                    step: k,
                    detail: e.to_string(),
                })?;
            if next != st.state {
                return Err(LiftError::Mismatch {
                    step: k,
                    detail: format!(
                        "firing `{}` gives {} but the trace has {}",
                        sys.interactions[st.interaction].name,
                        next.render(sys),
                        st.state.render(sys)
                    ),
                });
            }
            s = next;
        }
        Ok(())
    }

    /// Readable listing: the initial state, then one line per interaction
    /// followed by the state it reaches.
    pub fn render(&self, sys: &BipSystem, property: &str) -> String {
        let mut out = format!(
            "counterexample for `{property}`\ninit: {}\n",
            self.initial.render(sys)
        );
        for (k, st) in self.steps.iter().enumerate() {
            out += &format!(
                "step {k}: {}\n  {}\n",
                sys.interactions[st.interaction].name,
                st.state.render(sys)
            );
        }
        out
    }
}

/// Replay input bits on the bit-blasted circuit and read back the value of
/// every program slot at every frame.
pub fn decode_frames(
    inputs: &[Vec<bool>],
    blasted: &Blasted,
    out: &TranslationOutput,
) -> Vec<Valuation> {
    let prog = &out.program;
    let mut sim = AigSim::new(&blasted.aig);
    let mut frames = Vec::with_capacity(inputs.len());
    for frame in inputs {
        let words: Vec<u64> = frame.iter().map(|&b| b as u64).collect();
        sim.evaluate(&words);
        frames.push(
            prog.slots()
                .iter()
                .enumerate()
                .map(|(s, slot)| {
                    blasted
                        .bits
                        .decode(s, slot.ty, |l| sim.lit_value(l) & 1 == 1)
                })
                .collect(),
        );
        sim.commit();
    }
    frames
}

/// Group circuit frames into BIP steps at interaction-mode boundaries and
/// check each against the interpreter. `property` indexes
/// `out.properties`; `blasted.bad` must follow the same order.
pub fn lift_cex(
    trace: &CexTrace,
    blasted: &Blasted,
    out: &TranslationOutput,
    sys: &BipSystem,
    property: usize,
) -> Result<BipCex, LiftError> {
    let frames = decode_frames(&trace.inputs, blasted, out);
    let last = frames
        .last()
        .ok_or(LiftError::NotACounterexample(property))?;
    if out.property_holds(property, last) {
        return Err(LiftError::NotACounterexample(property));
    }
    let interp = Interpreter::new(sys);
    let boundaries: Vec<usize> = (0..frames.len())
        .filter(|&f| out.at_boundary(&frames[f]))
        .collect();
    let initial = out.bip_state(sys, &frames[0]);
    let mut cex = BipCex {
        property,
        initial: initial.clone(),
        steps: Vec::new(),
    };
    let mut state = initial;
    for (n, w) in boundaries.windows(2).enumerate() {
        let vals = &frames[w[0]];
        let mismatch = |detail: String| LiftError::Mismatch { step: n, detail };
        let flags = |xs: Vec<bool>| -> Vec<usize> { (0..xs.len()).filter(|&j| xs[j]).collect() };
        let enabled = flags(out.interaction_wires(ENABLED, vals));
        let maximal = flags(out.interaction_wires(MAXIMAL, vals));
        if enabled != interp.enabled_interactions(&state) {
            return Err(mismatch(format!(
                "enabled interactions {enabled:?} disagree with the interpreter"
            )));
        }
        if maximal != interp.maximal_interactions(&state) {
            return Err(mismatch(format!(
                "maximal interactions {maximal:?} disagree with the interpreter"
            )));
        }
        let next = out.bip_state(sys, &frames[w[1]]);
        match flags(out.interaction_wires(SELECTED, vals))[..] {
            [] => {
                if !maximal.is_empty() || next != state {
                    return Err(mismatch(
                        "no interaction selected outside a deadlock".into(),
                    ));
                }
            }
            [j] => {
                let expect = interp
                    .step(&state, j)
                    .map_err(|e| mismatch(e.to_string()))?;
                if expect != next {
                    return Err(mismatch(format!(
                        "circuit reaches {} after `{}`, interpreter reaches {}",
                        next.render(sys),
                        sys.interactions[j].name,
                        expect.render(sys)
                    )));
                }
                cex.steps.push(BipStep {
                    interaction: j,
                    state: next.clone(),
                });
            }
            ref many => return Err(mismatch(format!("several interactions selected: {many:?}"))),
        }
        state = next;
    }
    Ok(cex)
}
