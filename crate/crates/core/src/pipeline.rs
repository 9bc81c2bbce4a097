//! The whole flow from a parsed system to checked properties.

use std::time::Instant;

use crate::aig::{bitblast, reduce, Aig, BlastError, Blasted, Reduced};
use crate::bip::{BipSystem, Invariant};
use crate::translate::{translate, TranslateError, TranslateOptions, TranslationOutput};
use crate::verify::report::{CircuitSize, Verdict};
use crate::verify::{
    bmc, kinduction, lift_cex, BipCex, BmcOutcome, CexTrace, CheckConfig, InductionOutcome,
    LiftError, VerifyError,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Blast(#[from] BlastError),
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("counterexample does not map back to the system: {0}")]
    Lift(#[from] LiftError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Engine {
    Bmc,
    #[default]
    Induction,
}

#[derive(Clone, Debug)]
pub struct PropertyResult {
    pub verdict: Verdict,
    pub cex: Option<(CexTrace, BipCex)>,
    pub millis: u64,
}

/// A translated and bit-blasted system; property `k` of the translation is
/// bad output `blasted.bad[k]` of both circuits.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub translation: TranslationOutput,
    pub blasted: Blasted,
    pub reduced: Reduced,
}

pub fn circuit_size(aig: &Aig) -> CircuitSize {
    CircuitSize {
        inputs: aig.inputs().len(),
        latches: aig.latches().len(),
        ands: aig.num_ands(),
        levels: aig.levels(),
    }
}

impl Pipeline {
    pub fn new(
        sys: &BipSystem,
        invariants: &[Invariant],
        opts: TranslateOptions,
    ) -> Result<Self, PipelineError> {
        let translation = translate(sys, invariants, opts)?;
        let wires: Vec<String> = translation
            .properties
            .iter()
            .map(|p| p.wire.clone())
            .collect();
        let blasted = bitblast(&translation.program, &wires)?;
        let reduced = reduce(&blasted.aig);
        Ok(Pipeline {
            translation,
            blasted,
            reduced,
        })
    }

    pub fn property_names(&self) -> Vec<&str> {
        self.translation
            .properties
            .iter()
            .map(|p| p.name.as_str())
            .collect()
    }

    /// Check one property on the reduced circuit (or the full one), and
    /// lift any counterexample to the system.
    pub fn check(
        &self,
        sys: &BipSystem,
        property: usize,
        engine: Engine,
        cfg: &CheckConfig,
        use_reduced: bool,
    ) -> Result<PropertyResult, CheckError> {
        let start = Instant::now();
        let aig = if use_reduced {
            &self.reduced.aig
        } else {
            &self.blasted.aig
        };
        let output = self.blasted.bad[property];
        let outcome = match engine {
            Engine::Bmc => bmc(aig, output, cfg).map(|o| match o {
                BmcOutcome::SafeUpTo(k) => Ok(Verdict::SafeUpTo { k }),
                BmcOutcome::Cex(c) => Err(c),
            }),
            Engine::Induction => kinduction(aig, output, cfg).map(|o| match o {
                InductionOutcome::Proved(k) => Ok(Verdict::Proved { k }),
                InductionOutcome::Unknown(k) => Ok(Verdict::SafeUpTo { k }),
                InductionOutcome::Cex(c) => Err(c),
            }),
        };
        let (verdict, cex) = match outcome {
            Ok(Ok(v)) => (v, None),
            Ok(Err(trace)) => {
                let lifted = lift_cex(&trace, &self.blasted, &self.translation, sys, property)?;
                lifted.replay(sys)?;
                let v = Verdict::Cex {
                    depth: trace.depth(),
                    steps: lifted.steps.len(),
                };
                (v, Some((trace, lifted)))
            }
            Err(VerifyError::ResourceLimit) => (Verdict::ResourceLimit, None),
            Err(e) => return Err(e.into()),
        };
        Ok(PropertyResult {
            verdict,
            cex,
            millis: start.elapsed().as_millis() as u64,
        })
    }
}
