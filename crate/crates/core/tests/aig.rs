mod common;

use bipc::aig::{
    bitblast, negate, read_aiger, reduce, write_aiger, Aig, AigSim, AigerFormat, LatchFate, Node,
    OutputKind, WellFormedError, WriteOptions, FALSE, TRUE,
};
use bipc::lockstep::lockstep;
use bipc::olp::{olp_eval_wires, olp_init, parse_program, OlpProgram};
use bipc::translate::{CYCLE, ENABLED, SELECTOR};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn program(src: &str) -> OlpProgram {
    parse_program(src).unwrap_or_else(|e| panic!("{e}"))
}

fn ascii(aig: &Aig) -> String {
    String::from_utf8(write_aiger(aig, &WriteOptions::default())).unwrap()
}

fn opts(format: AigerFormat, compat: bool) -> WriteOptions {
    WriteOptions {
        format,
        compat,
        comment: None,
    }
}

#[test]
fn trace_semantics_per_node_kind() {
    let mut aig = Aig::new();
    let x = aig.add_input(None);
    let (k, r) = aig.add_latch(true, None);
    aig.set_next(k, x);
    let g = aig.and(x, negate(r));
    aig.add_output(FALSE, OutputKind::Plain, None);
    aig.add_output(TRUE, OutputKind::Plain, None);
    aig.add_output(x, OutputKind::Plain, None);
    aig.add_output(r, OutputKind::Plain, None);
    aig.add_output(g, OutputKind::Plain, None);
    let ins = [true, false, true, true];
    let t = aig.simulate(&ins.iter().map(|&b| vec![b]).collect::<Vec<_>>());
    // Latch: reset value, then the previous input.
    assert_eq!(t.latches, [[true], [true], [false], [true]]);
    for (f, o) in t.outputs.iter().enumerate() {
        assert!(!o[0] && o[1]);
        assert_eq!(o[2], ins[f]);
        assert_eq!(o[3], t.latches[f][0]);
        assert_eq!(o[4], ins[f] && !t.latches[f][0]);
    }
}

#[test]
fn single_and_gate() {
    let prog = program(
        "
wire bool a;
wire bool b;
wire bool c;
c = a && b;
do-together { }
while (true) { do-together { } }
",
    );
    let bl = bitblast(&prog, &["c".into()]).unwrap();
    assert_eq!(bl.aig.num_ands(), 1);
    assert_eq!(bl.aig.inputs().len(), 2);
    assert!(bl.aig.latches().is_empty());
}

#[test]
fn mux_of_booleans_is_three_gates() {
    let prog = program(
        "
wire bool c;
wire bool x;
wire bool y;
wire bool z;
z = c ? x : y;
do-together { }
while (true) { do-together { } }
",
    );
    let bl = bitblast(&prog, &["z".into()]).unwrap();
    assert_eq!(bl.aig.num_ands(), 3);
}

#[test]
fn toggling_register() {
    let prog = program(
        "
bool r;
do-together { r = false; }
while (true) { do-together { r = !r; } }
",
    );
    let bl = bitblast(&prog, &[]).unwrap();
    let aig = &bl.aig;
    assert_eq!(aig.latches().len(), 1);
    assert_eq!(aig.num_ands(), 0);
    let l = &aig.latches()[0];
    assert_eq!(l.next, negate(2 * l.var));
    assert!(!l.init);
    let text = ascii(aig);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("aag 1 0 1 0 0"));
    assert_eq!(lines.next(), Some("2 3"));
}

#[test]
fn empty_network() {
    assert_eq!(ascii(&Aig::new()), "aag 0 0 0 0 0\n");
    let back = read_aiger(b"aag 0 0 0 0 0\n").unwrap();
    assert_eq!(back.nodes().len(), 1);
}

#[test]
fn traffic_light_variables() {
    let (sys, invs) = common::load("traffic_light");
    let p = common::pipeline(&sys, &invs, false);
    let prog = &p.translation.program;
    let bits = &p.blasted.bits;
    let cycle = prog.slot(CYCLE, None).unwrap();
    assert_eq!(bits.latches[cycle].len(), 1);
    let sel = prog.slot(SELECTOR, None).unwrap();
    assert_eq!(bits.inputs[sel].len(), 1);
    assert!(bits.latches[sel].is_empty());
    for j in 0..2 {
        let s = prog.slot(ENABLED, Some(j)).unwrap();
        assert!(bits.latches[s].is_empty() && bits.inputs[s].is_empty());
    }
    assert_eq!(p.blasted.aig.inputs().len(), 1);
    let t = prog.slot("timer.t", None).unwrap();
    assert_eq!(bits.latches[t].len(), 32);
}

#[test]
fn non_constant_init_is_rejected() {
    let prog = program(
        "
wire int<4> x;
int<4> r;
do-together { r = x; }
while (true) { do-together { r = r; } }
",
    );
    assert!(
        matches!(bitblast(&prog, &[]), Err(bipc::aig::BlastError::NonConstantInit(n)) if n == "r")
    );
    assert!(bitblast(&program(SIGNALS), &["nope".into()]).is_err());
}

const SIGNALS: &str = "
wire int<5> a;
wire int<7> b;
wire int<32> c;
wire int<32> d;
wire uint<3> u;
wire uint<2> i;
wire bool k;
wire int<4> m[4];
wire bool eq;
wire bool lt;
wire bool le;
wire bool ne;
wire bool gt;
wire bool mix;
wire int<8> sum;
wire int<8> diff;
wire int<8> prod;
wire int<6> neg;
wire int<32> wide;
wire int<32> widemul;
wire uint<5> usum;
wire int<4> pick;
wire int<7> sel;
eq = c == d;
lt = a < b;
le = c <= d;
ne = a != u;
gt = u > 2;
mix = k && (a >= 0) || !(b < c);
sum = a + b;
diff = a - b;
prod = a * b;
neg = -a;
wide = c + d;
widemul = c * d;
usum = u + u + 7;
pick = m[i];
sel = k ? a : b;
do-together { }
while (true) { do-together { } }
";

#[test]
fn lowered_expressions_match_evaluation() {
    let prog = program(SIGNALS);
    let outs: Vec<String> = ["eq", "lt", "le", "ne", "gt", "mix"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let bl = bitblast(&prog, &outs).unwrap();
    assert!(bl.aig.check().is_ok() && bl.aig.is_strashed());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let slots = prog.slots().to_vec();
    for round in 0..1000 {
        let pis: Vec<i64> = prog
            .inputs()
            .iter()
            .map(|&s| {
                let bits = slots[s].ty.bits();
                // Bias toward equal values so equality is exercised.
                if round % 4 == 0 {
                    3
                } else {
                    rng.gen::<i64>() & ((1i64 << bits.min(62)) - 1)
                }
            })
            .collect();
        let mut vals = olp_init(&prog, &pis).unwrap();
        olp_eval_wires(&prog, &mut vals, &pis).unwrap();
        let input_bits: Vec<u64> = bl
            .bits
            .input_bits(&vals)
            .into_iter()
            .map(u64::from)
            .collect();
        let mut sim = AigSim::new(&bl.aig);
        sim.evaluate(&input_bits);
        for (s, slot) in slots.iter().enumerate() {
            let got = bl.bits.decode(s, slot.ty, |l| sim.lit_value(l) & 1 == 1);
            assert_eq!(got, vals[s], "{} in round {round}", prog.slot_name(s));
        }
    }
}

#[test]
fn well_formedness_catches_mutations() {
    let (sys, invs) = common::load("atm");
    let p = common::pipeline(&sys, &invs, false);
    let aig = &p.blasted.aig;
    assert_eq!(aig.check(), Ok(()));
    let ands: Vec<u32> = aig.and_vars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let mut bad = aig.clone();
        let v = ands[rng.gen_range(0..ands.len())];
        match rng.gen_range(0..4) {
            0 => {
                let target = rng.gen_range(v..aig.nodes().len() as u32);
                bad.set_node(v, Node::And(2 * target, 2));
                assert_eq!(bad.check(), Err(WellFormedError::Cycle(v)));
            }
            1 => {
                bad.set_node(v, Node::And(2 * aig.nodes().len() as u32 + 6, 2));
                assert_eq!(bad.check(), Err(WellFormedError::Dangling(v)));
            }
            2 => {
                bad.set_node(v, Node::Input(0));
                assert!(matches!(bad.check(), Err(WellFormedError::Table(_))));
            }
            _ => {
                let k = rng.gen_range(0..aig.latches().len());
                bad.set_next(k, 2 * aig.nodes().len() as u32);
                assert_eq!(bad.check(), Err(WellFormedError::LatchNext(k)));
            }
        }
    }
}

#[test]
fn emitted_networks_are_well_formed() {
    for name in common::CORPUS {
        let (sys, invs) = common::load(name);
        for fuse in [false, true] {
            if fuse && bipc::translate::one_cycle_opt(&sys).is_err() {
                continue;
            }
            let p = common::pipeline(&sys, &invs, fuse);
            for aig in [&p.blasted.aig, &p.reduced.aig] {
                assert_eq!(aig.check(), Ok(()), "{name}");
                assert!(aig.is_strashed(), "{name}");
            }
            assert_eq!(p.blasted.bad.len(), invs.len() + 1);
        }
    }
}

#[test]
fn reduce_merges_duplicate_gates() {
    let mut aig = Aig::new();
    let a = aig.add_input(None);
    let b = aig.add_input(None);
    let c = aig.add_input(None);
    let g = aig.and(a, b);
    let h = aig.and(b, c);
    // Rewrite h into a structural copy of g.
    aig.set_node(h >> 1, Node::And(b, a));
    let o = aig.or(g, h);
    aig.add_output(o, OutputKind::Bad, None);
    assert!(!aig.is_strashed());
    let r = reduce(&aig);
    assert_eq!(r.aig.num_ands(), 1);
    for pattern in 0..8u64 {
        let ins: Vec<bool> = (0..3).map(|k| pattern >> k & 1 == 1).collect();
        let before = aig.simulate(std::slice::from_ref(&ins));
        let after = r.aig.simulate(&[ins]);
        assert_eq!(before.outputs, after.outputs);
    }
}

#[test]
fn reduce_removes_a_stuck_latch() {
    let mut aig = Aig::new();
    let x = aig.add_input(None);
    let (k, r) = aig.add_latch(false, None);
    let g = aig.and(r, x);
    aig.set_next(k, g);
    let (k2, q) = aig.add_latch(false, None);
    aig.set_next(k2, x);
    let out = aig.or(g, q);
    aig.add_output(out, OutputKind::Bad, None);
    let red = reduce(&aig);
    assert_eq!(red.latches[k], LatchFate::Constant(false));
    assert!(matches!(red.latches[k2], LatchFate::Kept(_)));
    assert_eq!(red.aig.num_ands(), 0);
    assert_eq!(red.aig.latches().len(), 1);
}

#[test]
fn reduce_drops_latches_outside_every_cone() {
    let mut aig = Aig::new();
    let x = aig.add_input(None);
    let (k, r) = aig.add_latch(false, None);
    aig.set_next(k, negate(r));
    let (k2, q) = aig.add_latch(false, None);
    aig.set_next(k2, x);
    aig.add_output(q, OutputKind::Bad, None);
    let red = reduce(&aig);
    assert_eq!(red.latches[k], LatchFate::Removed);
    assert_eq!(red.aig.inputs().len(), 1);
}

#[test]
fn reduction_shrinks_the_corpus() {
    for name in common::CORPUS {
        let (sys, invs) = common::load(name);
        let p = common::pipeline(&sys, &invs, false);
        let (orig, red) = (&p.blasted.aig, &p.reduced.aig);
        assert!(red.num_ands() <= orig.num_ands(), "{name}");
        assert!(red.latches().len() <= orig.latches().len(), "{name}");
        assert_eq!(red.inputs().len(), orig.inputs().len(), "{name}");
        assert_eq!(red.outputs().len(), orig.outputs().len(), "{name}");
        assert_eq!(p.reduced.latches.len(), orig.latches().len());
        if *name == "traffic_light" || *name == "atm" {
            assert!(red.num_ands() < orig.num_ands(), "{name}");
        }
    }
}

#[test]
fn netlist_agrees_with_interpreter_on_corpus() {
    for name in common::CORPUS {
        let (sys, invs) = common::load(name);
        let p = common::pipeline(&sys, &invs, false);
        for seed in 0..3 {
            let r = lockstep(
                &sys,
                &p.translation,
                &p.blasted,
                Some(&p.reduced),
                300,
                seed,
            )
            .unwrap_or_else(|e| panic!("{name} seed {seed}: {e}"));
            assert!(r.bits_compared > 0);
        }
    }
}

#[test]
fn traffic_light_never_deadlocks_in_simulation() {
    let (sys, invs) = common::load("traffic_light");
    let p = common::pipeline(&sys, &invs, false);
    let aig = &p.blasted.aig;
    let bad = p.blasted.bad[0];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sim = AigSim::new(aig);
    for _ in 0..1000 {
        let ins: Vec<u64> = (0..aig.inputs().len()).map(|_| rng.gen()).collect();
        sim.evaluate(&ins);
        assert_eq!(sim.output(bad), 0);
        sim.commit();
    }
}

#[test]
fn corpus_aiger_round_trip() {
    for name in common::CORPUS {
        let (sys, invs) = common::load(name);
        let p = common::pipeline(&sys, &invs, false);
        for format in [AigerFormat::Ascii, AigerFormat::Binary] {
            let o = opts(format, false);
            let bytes = write_aiger(&p.blasted.aig, &o);
            let back = read_aiger(&bytes).unwrap();
            assert_eq!(write_aiger(&back, &o), bytes, "{name}");
        }
    }
}

#[test]
fn compat_mode_lists_properties_as_outputs() {
    let (sys, invs) = common::load("quorum");
    let p = common::pipeline(&sys, &invs, false);
    let text =
        String::from_utf8(write_aiger(&p.blasted.aig, &opts(AigerFormat::Ascii, true))).unwrap();
    let header: Vec<usize> = text.lines().next().unwrap()[4..]
        .split(' ')
        .map(|n| n.parse().unwrap())
        .collect();
    assert_eq!(header.len(), 5);
    assert_eq!(header[3], invs.len() + 1);
    let full = ascii(&p.blasted.aig);
    let header: Vec<&str> = full.lines().next().unwrap().split(' ').collect();
    assert_eq!(header.len(), 7);
    assert_eq!(header[4], "0");
    assert!(full.contains("b0 deadlock_free"));
}

#[test]
fn comment_section() {
    let mut aig = Aig::new();
    let x = aig.add_input(Some("x".into()));
    aig.add_output(x, OutputKind::Plain, Some("y".into()));
    let o = WriteOptions {
        comment: Some("made by a test".into()),
        ..Default::default()
    };
    let text = String::from_utf8(write_aiger(&aig, &o)).unwrap();
    assert_eq!(text, "aag 1 1 0 1 0\n2\n2\ni0 x\no0 y\nc\nmade by a test\n");
    let back = read_aiger(text.as_bytes()).unwrap();
    assert_eq!(back.input_name(0), Some("x"));
}

#[test]
fn malformed_aiger_is_rejected() {
    for text in [
        "",
        "aag 1 1 0 0\n",
        "aag 1 1 0 1 0\n2\n",
        "aag 2 1 0 1 1\n2\n4\n4 6 2\n",
        "xyz 0 0 0 0 0\n",
        "aig 3 2 0 1 1\n6\n",
    ] {
        assert!(read_aiger(text.as_bytes()).is_err(), "{text:?}");
    }
}

/// A random strashed network built only through the public constructors.
fn random_aig(seed: u64) -> Aig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut aig = Aig::new();
    let mut pool = vec![FALSE];
    for k in 0..rng.gen_range(0..4) {
        pool.push(aig.add_input(rng.gen_bool(0.5).then(|| format!("in{k}"))));
    }
    let mut latches = Vec::new();
    for k in 0..rng.gen_range(0..4) {
        let (idx, l) = aig.add_latch(
            rng.gen_bool(0.3),
            rng.gen_bool(0.5).then(|| format!("r{k}")),
        );
        latches.push(idx);
        pool.push(l);
    }
    for _ in 0..rng.gen_range(0..20) {
        let a = pool[rng.gen_range(0..pool.len())] ^ rng.gen_range(0..2);
        let b = pool[rng.gen_range(0..pool.len())] ^ rng.gen_range(0..2);
        let g = aig.and(a, b);
        pool.push(g);
    }
    for k in latches {
        let l = pool[rng.gen_range(0..pool.len())] ^ rng.gen_range(0..2);
        aig.set_next(k, l);
    }
    for k in 0..rng.gen_range(0..4) {
        let l = pool[rng.gen_range(0..pool.len())] ^ rng.gen_range(0..2);
        let kind = if rng.gen_bool(0.5) {
            OutputKind::Bad
        } else {
            OutputKind::Plain
        };
        aig.add_output(l, kind, rng.gen_bool(0.5).then(|| format!("o{k}")));
    }
    aig
}

fn random_inputs(aig: &Aig, seed: u64, frames: usize) -> Vec<Vec<bool>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|_| (0..aig.inputs().len()).map(|_| rng.gen()).collect())
        .collect()
}

proptest! {
    #[test]
    fn aiger_round_trip(seed in any::<u64>(), binary in any::<bool>(), compat in any::<bool>()) {
        let aig = random_aig(seed);
        prop_assert!(aig.check().is_ok());
        let format = if binary { AigerFormat::Binary } else { AigerFormat::Ascii };
        let o = opts(format, compat);
        let bytes = write_aiger(&aig, &o);
        let back = read_aiger(&bytes).unwrap();
        prop_assert!(back.check().is_ok());
        prop_assert_eq!(back.inputs().len(), aig.inputs().len());
        prop_assert_eq!(back.latches().len(), aig.latches().len());
        prop_assert_eq!(back.num_ands(), aig.num_ands());
        prop_assert_eq!(write_aiger(&back, &o), bytes);
        let ins = random_inputs(&aig, seed, 12);
        let (a, b) = (aig.simulate(&ins), back.simulate(&ins));
        prop_assert_eq!(a.latches, b.latches);
        if !compat {
            // Outputs are regrouped as plain then bad; compare as multisets per frame.
            let plain: Vec<usize> = (0..aig.outputs().len()).filter(|&o| aig.outputs()[o].kind == OutputKind::Plain).collect();
            let bad: Vec<usize> = (0..aig.outputs().len()).filter(|&o| aig.outputs()[o].kind == OutputKind::Bad).collect();
            let order: Vec<usize> = plain.into_iter().chain(bad).collect();
            for (fa, fb) in a.outputs.iter().zip(&b.outputs) {
                let reordered: Vec<bool> = order.iter().map(|&o| fa[o]).collect();
                prop_assert_eq!(&reordered, fb);
            }
        }
    }

    #[test]
    fn reduce_preserves_behaviour(seed in any::<u64>()) {
        let aig = random_aig(seed);
        let red = reduce(&aig);
        prop_assert!(red.aig.check().is_ok());
        prop_assert!(red.aig.num_ands() <= aig.num_ands());
        prop_assert!(red.aig.latches().len() <= aig.latches().len());
        let ins = random_inputs(&aig, seed ^ 1, 16);
        prop_assert_eq!(aig.simulate(&ins).outputs, red.aig.simulate(&ins).outputs);
    }

    #[test]
    fn random_systems_agree_with_netlist(seed in any::<u64>()) {
        let sys = common::random_system(seed);
        let invs = common::random_invariants(&sys, seed, 2);
        let p = common::pipeline(&sys, &invs, false);
        prop_assert!(p.blasted.aig.check().is_ok());
        let r = lockstep(&sys, &p.translation, &p.blasted, Some(&p.reduced), 60, seed);
        prop_assert!(r.is_ok(), "{:?}\n{}", r, common::random_system_source(seed));
        if bipc::translate::one_cycle_opt(&sys).is_ok() {
            let p = common::pipeline(&sys, &invs, true);
            let r = lockstep(&sys, &p.translation, &p.blasted, Some(&p.reduced), 60, seed);
            prop_assert!(r.is_ok(), "fused: {:?}", r);
        }
    }
}
