use super::{is_complemented, var_of, Aig, Lit, Node};

/// Cycle-accurate simulation of a circuit. Every node value is a 64-bit
/// word, so one simulator runs 64 independent input patterns at once.
#[derive(Clone, Debug)]
pub struct AigSim<'a> {
    aig: &'a Aig,
    values: Vec<u64>,
    latches: Vec<u64>,
}

impl<'a> AigSim<'a> {
    /// Latches start at their reset values.
    pub fn new(aig: &'a Aig) -> Self {
        AigSim {
            aig,
            values: vec![0; aig.nodes().len()],
            latches: aig
                .latches()
                .iter()
                .map(|l| if l.init { u64::MAX } else { 0 })
                .collect(),
        }
    }

    pub fn latch_values(&self) -> &[u64] {
        &self.latches
    }

    pub fn set_latch_values(&mut self, v: &[u64]) {
        self.latches.copy_from_slice(v);
    }

    pub fn lit_value(&self, l: Lit) -> u64 {
        let v = self.values[var_of(l) as usize];
        if is_complemented(l) {
            !v
        } else {
            v
        }
    }

    /// Valuation of every node for the current latch state and `inputs`.
    pub fn evaluate(&mut self, inputs: &[u64]) {
        for (v, node) in self.aig.nodes().iter().enumerate() {
            self.values[v] = match *node {
                Node::Const => 0,
                Node::Input(i) => inputs.get(i).copied().unwrap_or(0),
                Node::Latch(k) => self.latches[k],
                Node::And(a, b) => self.lit_value(a) & self.lit_value(b),
            };
        }
    }

    /// Evaluate, then load every latch with its next-state value.
    pub fn step(&mut self, inputs: &[u64]) {
        self.evaluate(inputs);
        self.commit();
    }

    /// Load every latch with its next-state value from the last evaluation.
    pub fn commit(&mut self) {
        for (k, l) in self.aig.latches().iter().enumerate() {
            self.latches[k] = self.lit_value(l.next);
        }
    }

    pub fn output(&self, o: usize) -> u64 {
        self.lit_value(self.aig.outputs()[o].lit)
    }
}

/// Single-pattern run: latch and output bits per frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AigTrace {
    pub latches: Vec<Vec<bool>>,
    pub outputs: Vec<Vec<bool>>,
}

impl Aig {
    /// Simulate one input vector per frame.
    pub fn simulate(&self, inputs: &[Vec<bool>]) -> AigTrace {
        let mut sim = AigSim::new(self);
        let mut trace = AigTrace {
            latches: Vec::new(),
            outputs: Vec::new(),
        };
        for frame in inputs {
            let words: Vec<u64> = frame.iter().map(|&b| b as u64).collect();
            sim.evaluate(&words);
            trace
                .latches
                .push(sim.latch_values().iter().map(|&x| x & 1 == 1).collect());
            trace.outputs.push(
                (0..self.outputs().len())
                    .map(|o| sim.output(o) & 1 == 1)
                    .collect(),
            );
            sim.commit();
        }
        trace
    }
}
