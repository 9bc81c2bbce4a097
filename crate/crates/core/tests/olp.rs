mod common;

use std::collections::BTreeSet;

use bipc::bip::BipSystem;
use bipc::expr::{BinOp, Expr, Val};
use bipc::olp::{
    olp_eval_wires, olp_init, olp_step, parse_program, print_program, simulate, EvalError,
    ExplicitInputs, OlpError, OlpProgram, ParseError, SeededInputs, Term,
};
use bipc::semantics::{GlobalState, Interpreter};
use bipc::translate::{translate, TranslateOptions, TranslationOutput, CYCLE, ENABLED};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn program(src: &str) -> OlpProgram {
    parse_program(src).unwrap_or_else(|e| panic!("{e}"))
}

fn invalid(src: &str) -> OlpError {
    match parse_program(src) {
        Err(ParseError::Invalid(e)) => e,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

fn traffic() -> (BipSystem, TranslationOutput) {
    let (sys, invs) = common::load("traffic_light");
    let out = translate(&sys, &invs, TranslateOptions::default()).unwrap();
    (sys, out)
}

fn int(prog: &OlpProgram, vals: &[i64], name: &str) -> i64 {
    prog.value(vals, name, None).unwrap().as_int()
}

const SWAP: &str = "
int<4> a;
int<4> b;
do-together { a = 0; b = 1; }
while (true) { do-together { a = b; b = a; } }
";

#[test]
fn ternary_evaluates_its_branch() {
    let prog = program(SWAP);
    let e = Expr::ite(Expr::Bool(true), Expr::Int(3), Expr::Int(7));
    assert_eq!(prog.eval_expr(&e, &[0, 0]).unwrap().as_int(), 3);
    let e = Expr::ite(Expr::Bool(false), Expr::Int(3), Expr::Int(7));
    assert_eq!(prog.eval_expr(&e, &[0, 0]).unwrap().as_int(), 7);
}

#[test]
fn traffic_light_initial_wires() {
    let (_, out) = traffic();
    let prog = &out.program;
    let mut vals = olp_init(prog, &[]).unwrap();
    olp_eval_wires(prog, &mut vals, &[0]).unwrap();
    assert_eq!(prog.value(&vals, ENABLED, Some(1)), Some(Val::Bool(false)));
    assert_eq!(prog.value(&vals, ENABLED, Some(0)), Some(Val::Bool(true)));
    assert_eq!(
        prog.value(&vals, "timer.done.e", None),
        Some(Val::Bool(false))
    );
}

#[test]
fn addition_wraps_at_the_declared_width() {
    let prog = program(
        "
uint<4> u;
int<4> s;
do-together { u = 15; s = 7; }
while (true) { do-together { u = u + 1; s = s + 1; } }
",
    );
    let init = olp_init(&prog, &[]).unwrap();
    let next = olp_step(&prog, &init, &[]).unwrap();
    assert_eq!(int(&prog, &next, "u"), 0);
    assert_eq!(int(&prog, &next, "s"), -8);
    let sum = Expr::bin(BinOp::Add, Expr::var(Term::scalar("s")), Expr::Int(1));
    assert_eq!(prog.eval_expr(&sum, &init).unwrap().as_int(), -8);
}

#[test]
fn next_list_is_simultaneous() {
    let prog = program(SWAP);
    let init = olp_init(&prog, &[]).unwrap();
    assert_eq!((int(&prog, &init, "a"), int(&prog, &init, "b")), (0, 1));
    let next = olp_step(&prog, &init, &[]).unwrap();
    assert_eq!((int(&prog, &next, "a"), int(&prog, &next, "b")), (1, 0));
}

#[test]
fn cycle_toggles_every_step() {
    let (_, out) = traffic();
    let trace = simulate(&out.program, 40, &mut SeededInputs::new(3)).unwrap();
    for (k, f) in trace.frames.iter().enumerate() {
        assert_eq!(
            out.program.value(f, CYCLE, None),
            Some(Val::Bool(k % 2 == 1))
        );
    }
}

#[test]
fn timer_counts_with_selector_zero() {
    let (_, out) = traffic();
    let prog = &out.program;
    let trace = simulate(prog, 20, &mut ExplicitInputs::new(vec![])).unwrap();
    for k in 0..=10 {
        assert_eq!(int(prog, &trace.frames[2 * k], "timer.t"), k as i64);
    }
}

#[test]
fn traffic_light_init_list() {
    let (_, out) = traffic();
    let prog = &out.program;
    let init = olp_init(prog, &[]).unwrap();
    assert_eq!(int(prog, &init, "timer.t"), 0);
    assert_eq!(int(prog, &init, "timer.n"), 10);
    assert_eq!(int(prog, &init, "light.m"), 5);
    assert_eq!(int(prog, &init, "timer.loc"), 0);
    assert_eq!(int(prog, &init, "light.loc"), 0);
    assert_eq!(prog.value(&init, CYCLE, None), Some(Val::Bool(false)));
}

#[test]
fn program_without_registers() {
    let prog = program(
        "wire bool w;\nwire bool v;\nv = !w;\ndo-together { }\nwhile (true) { do-together { } }\n",
    );
    assert!(prog.registers().is_empty());
    let init = olp_init(&prog, &[0]).unwrap();
    assert!(prog.registers().iter().all(|&s| init[s] == 0));
    let trace = simulate(&prog, 3, &mut SeededInputs::new(0)).unwrap();
    assert_eq!(trace.len(), 4);
}

#[test]
fn init_may_read_inputs() {
    let prog = program("wire int<3> w;\nint<3> r;\ndo-together { r = w; }\nwhile (true) { do-together { r = r; } }\n");
    assert!(prog.init_reads_inputs());
    let init = olp_init(&prog, &[-2]).unwrap();
    assert_eq!(int(&prog, &init, "r"), -2);
}

#[test]
fn validation_errors() {
    assert_eq!(
        invalid("bool r;\ndo-together { }\nwhile (true) { do-together { r = !r; } }\n"),
        OlpError::UninitializedRegister("r".into())
    );
    assert_eq!(
        invalid("bool r;\ndo-together { r = false; }\nwhile (true) { do-together { } }\n"),
        OlpError::MissingNext("r".into())
    );
    assert_eq!(
        invalid("wire bool w1;\nwire bool w2;\nw1 = w2;\nw2 = w1;\ndo-together { }\nwhile (true) { do-together { } }\n"),
        OlpError::CombinationalCycle("w1".into())
    );
    assert_eq!(
        invalid("wire bool w;\nw = true;\nw = false;\ndo-together { }\nwhile (true) { do-together { } }\n"),
        OlpError::WireReassigned("w".into())
    );
    assert_eq!(
        invalid("bool r;\nr = true;\ndo-together { r = false; }\nwhile (true) { do-together { r = r; } }\n"),
        OlpError::NotAWire("r".into())
    );
    assert_eq!(
        invalid("wire bool w;\ndo-together { w = false; }\nwhile (true) { do-together { } }\n"),
        OlpError::NotARegister("w".into())
    );
    assert!(matches!(
        invalid("wire uint<1> k;\nwire bool a[2];\na[k] = true;\na[0] = true;\ndo-together { }\nwhile (true) { do-together { } }\n"),
        OlpError::DynamicTarget(_)
    ));
    assert!(matches!(
        invalid("int<4> r;\nbool s;\ndo-together { r = 0; s = r == 0; }\nwhile (true) { do-together { r = r; s = s; } }\n"),
        OlpError::InitReadsRegister(_)
    ));
    assert!(matches!(
        invalid("bool r;\ndo-together { r = 3; }\nwhile (true) { do-together { r = r; } }\n"),
        OlpError::Type { .. }
    ));
}

#[test]
fn dynamic_index_out_of_bounds() {
    let prog = program(
        "
wire uint<2> k;
wire bool a[3];
wire bool r;
a[0] = true;
a[1] = false;
a[2] = true;
r = a[k];
do-together { }
while (true) { do-together { } }
",
    );
    let mut vals = vec![0; prog.slots().len()];
    olp_eval_wires(&prog, &mut vals, &[2]).unwrap();
    assert_eq!(prog.value(&vals, "r", None), Some(Val::Bool(true)));
    let err = olp_eval_wires(&prog, &mut vals, &[3]).unwrap_err();
    assert_eq!(
        err,
        EvalError::ArrayIndexOutOfBounds {
            array: "a".into(),
            index: 3
        }
    );
}

#[test]
fn simulation_basics() {
    let (sys, out) = traffic();
    let prog = &out.program;
    assert_eq!(
        simulate(prog, 0, &mut SeededInputs::new(1)).unwrap().len(),
        1
    );
    let a = simulate(prog, 200, &mut SeededInputs::new(9)).unwrap();
    let b = simulate(prog, 200, &mut SeededInputs::new(9)).unwrap();
    assert_eq!(a, b);
    let explored = Interpreter::new(&sys).explore(1000, &[]).unwrap();
    assert!(explored.deadlock.is_none());
    for f in &a.frames {
        if out.at_boundary(f) {
            assert!(out.interaction_wires(ENABLED, f).iter().any(|&e| e));
        }
    }
}

#[test]
fn corpus_programs_round_trip() {
    for name in common::CORPUS {
        let (sys, invs) = common::load(name);
        for fuse in [false, true] {
            let opts = TranslateOptions {
                fuse,
                ..Default::default()
            };
            let Ok(out) = translate(&sys, &invs, opts) else {
                continue;
            };
            let text = print_program(&out.program);
            let again = parse_program(&text).unwrap();
            assert_eq!(again, out.program, "{name}");
            assert_eq!(print_program(&again), text);
        }
    }
}

type Run = Vec<GlobalState>;

/// Every boundary-state sequence of `k` BIP steps the program produces
/// over all selector streams. Deadlocked runs end early.
fn program_runs(sys: &BipSystem, out: &TranslationOutput, k: usize) -> BTreeSet<String> {
    let prog = &out.program;
    assert_eq!(prog.inputs().len(), 1, "only the selector is free");
    let width = prog.slots()[prog.inputs()[0]].ty.bits();
    let init = olp_init(prog, &[0]).unwrap();
    let mut runs = BTreeSet::new();
    let mut stack: Vec<(Vec<i64>, Run)> = vec![(init.clone(), vec![out.bip_state(sys, &init)])];
    while let Some((state, run)) = stack.pop() {
        let mut frame = state.clone();
        olp_eval_wires(prog, &mut frame, &[0]).unwrap();
        if run.len() == k + 1 || !out.interaction_wires(ENABLED, &frame).iter().any(|&e| e) {
            runs.insert(render(sys, &run));
            continue;
        }
        let mut succ = BTreeSet::new();
        for sel in 0..(1i64 << width) {
            let mut s = olp_step(prog, &state, &[sel]).unwrap();
            for _ in 1..out.steps_per_interaction() {
                s = olp_step(prog, &s, &[0]).unwrap();
            }
            if succ.insert(s.clone()) {
                let mut r = run.clone();
                r.push(out.bip_state(sys, &s));
                stack.push((s, r));
            }
        }
    }
    runs
}

fn oracle_runs(sys: &BipSystem, k: usize) -> BTreeSet<String> {
    let interp = Interpreter::new(sys);
    let mut runs = BTreeSet::new();
    let mut stack: Vec<Run> = vec![vec![interp.initial()]];
    while let Some(run) = stack.pop() {
        let last = run.last().unwrap();
        let maximal = interp.maximal_interactions(last);
        if run.len() == k + 1 || maximal.is_empty() {
            runs.insert(render(sys, &run));
            continue;
        }
        for j in maximal {
            let mut r = run.clone();
            r.push(interp.step(last, j).unwrap());
            stack.push(r);
        }
    }
    runs
}

fn render(sys: &BipSystem, run: &Run) -> String {
    run.iter()
        .map(|s| s.render(sys))
        .collect::<Vec<_>>()
        .join(" | ")
}

#[test]
fn lockstep_over_all_selector_streams() {
    for (name, k, fuse) in [
        ("traffic_light", 12, false),
        ("atm", 5, false),
        ("quorum", 4, false),
        ("handshake", 6, false),
        ("handshake", 6, true),
    ] {
        let (sys, _) = common::load(name);
        let out = translate(
            &sys,
            &[],
            TranslateOptions {
                fuse,
                ..Default::default()
            },
        )
        .unwrap();
        let from_program = program_runs(&sys, &out, k);
        let from_oracle = oracle_runs(&sys, k);
        assert!(!from_oracle.is_empty());
        assert_eq!(from_program, from_oracle, "{name} (fused: {fuse})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn next_order_does_not_matter(seed in any::<u64>()) {
        let sys = common::random_system(seed);
        let out = translate(&sys, &[], TranslateOptions::default()).unwrap();
        let prog = &out.program;
        let mut perm: Vec<usize> = (0..prog.nexts().len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = prog.with_next_order(&perm).unwrap();
        let a = simulate(prog, 60, &mut SeededInputs::new(seed)).unwrap();
        let b = simulate(&shuffled, 60, &mut SeededInputs::new(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn random_programs_round_trip(seed in any::<u64>()) {
        let sys = common::random_system(seed);
        let invs = common::random_invariants(&sys, seed, 2);
        let out = translate(&sys, &invs, TranslateOptions::default()).unwrap();
        let again = parse_program(&print_program(&out.program)).unwrap();
        prop_assert_eq!(again, out.program);
    }

    #[test]
    fn random_systems_run_in_lockstep_with_the_oracle(seed in any::<u64>()) {
        let sys = common::random_system(seed);
        let out = translate(&sys, &[], TranslateOptions::default()).unwrap();
        let k = 3;
        prop_assert_eq!(program_runs(&sys, &out, k), oracle_runs(&sys, k));
        if let Ok(fused) = translate(&sys, &[], TranslateOptions { fuse: true, ..Default::default() }) {
            prop_assert_eq!(program_runs(&sys, &fused, k), oracle_runs(&sys, k));
        }
    }
}
