use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bipc::verify::report::{parse_report, Record, Verdict};

const BIN: &str = env!("CARGO_BIN_EXE_bipc");

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn model(name: &str) -> String {
    models().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// Header declarations and value changes of a VCD file: every change names
/// a declared code and every `#t` increases.
fn vcd_shape(text: &str) -> (Vec<String>, usize) {
    let (header, body) = text
        .split_once("$enddefinitions $end\n")
        .expect("definitions end");
    assert!(header.starts_with("$version "));
    assert!(header.contains("$timescale 1ns $end"));
    let mut names = Vec::new();
    let mut codes = Vec::new();
    let mut depth = 0i32;
    for line in header.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f[0] {
            "$scope" => depth += 1,
            "$upscope" => depth -= 1,
            "$var" => {
                codes.push(f[3].to_string());
                names.push(f[4].to_string());
            }
            _ => {}
        }
    }
    assert_eq!(depth, 0);
    let mut times = Vec::new();
    for line in body.lines() {
        if let Some(t) = line.strip_prefix('#') {
            times.push(t.parse::<u64>().unwrap());
        } else if line != "$dumpvars" && line != "$end" {
            let id = match line.strip_prefix('b') {
                Some(rest) => rest.split_once(' ').unwrap().1,
                None => &line[1..],
            };
            assert!(codes.iter().any(|c| c == id), "undeclared code in `{line}`");
        }
    }
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    (names, times.len())
}

#[test]
fn compile_matches_golden() {
    let o = run(&["compile", &model("traffic_light.bip")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let golden = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/traffic_light.olp"),
    )
    .unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn compile_writes_files_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let olp = dir.path().join("t.olp").display().to_string();
    let aag = dir.path().join("t.aag").display().to_string();
    let rep = dir.path().join("r.jsonl").display().to_string();
    let o = run(&[
        "compile",
        &model("atm.bip"),
        "-i",
        &model("atm.inv"),
        "-o",
        &olp,
        "--aiger",
        &aag,
        "--report",
        &rep,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("reduced"));
    assert!(std::fs::read_to_string(&olp)
        .unwrap()
        .starts_with("/*** decl-list ***/"));
    let aiger = std::fs::read_to_string(&aag).unwrap();
    assert!(aiger.starts_with("aag "));
    assert!(aiger.contains("\nc\nbipc atm\n"));
    let records = parse_report(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    let Record::Circuit { original, reduced } = &records[1] else {
        panic!("{records:?}");
    };
    assert!(reduced.ands < original.ands);
    assert_eq!(records.last(), Some(&Record::Summary { exit_code: 0 }));
}

#[test]
fn fuse_is_rejected_with_the_dependency() {
    let o = run(&["compile", &model("traffic_light.bip"), "--fuse"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("timer.n"), "{}", stderr(&o));
}

#[test]
fn empty_system_is_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "empty.bip", "");
    let o = run(&["compile", &p]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty.bip"));
    let o = run(&[
        "compile",
        &dir.path().join("missing.bip").display().to_string(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_traffic_light() {
    let o = run(&[
        "simulate",
        &model("traffic_light.bip"),
        "--steps",
        "1000",
        "--seed",
        "42",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("seed 42\n"));
}

#[test]
fn simulate_reports_the_handshake_deadlock() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.jsonl").display().to_string();
    let o = run(&[
        "simulate",
        &model("handshake.bip"),
        "--steps",
        "100",
        "--report",
        &rep,
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("deadlock_free: violated at step 10"));
    let records = parse_report(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert!(records.contains(&Record::Simulation {
        steps: 100,
        violations: vec![("deadlock_free".into(), 10)],
    }));
}

#[test]
fn simulate_zero_steps() {
    let dir = tempfile::tempdir().unwrap();
    let vcd = dir.path().join("z.vcd").display().to_string();
    let o = run(&[
        "simulate",
        &model("traffic_light.bip"),
        "--steps",
        "0",
        "--vcd",
        &vcd,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&vcd).unwrap();
    let (names, times) = vcd_shape(&text);
    assert_eq!(times, 1);
    assert!(text.contains("#0\n$dumpvars\n"));
    assert!(names.iter().any(|n| n == "cycle"));
    assert!(names.iter().any(|n| n == "at_l0"));
}

#[test]
fn check_traffic_light() {
    let o = run(&[
        "check",
        &model("traffic_light.bip"),
        "-i",
        &model("traffic_light.inv"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("bounded: proved (k = 2)"), "{out}");
    assert!(out.contains("deadlock_free: "));
    assert!(!out.contains("counterexample"));
}

#[test]
fn check_finds_the_quorum_bug() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("r.jsonl").display().to_string();
    let out_dir = dir.path().join("cex").display().to_string();
    let o = run(&[
        "check",
        &model("quorum_bug.bip"),
        "-i",
        &model("quorum.inv"),
        "--engine",
        "bmc",
        "--maxk",
        "16",
        "--out-dir",
        &out_dir,
        "--report",
        &rep,
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("Invariant_2: counterexample at depth 12 (6 interactions)"));
    let records = parse_report(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert!(matches!(&records[0], Record::Header { command, seed: 1, .. } if command == "check"));
    let prop = records
        .iter()
        .find_map(|r| match r {
            Record::Property {
                name,
                verdict,
                vcd,
                trace,
                ..
            } if name == "Invariant_2" => Some((
                verdict.clone(),
                vcd.clone().unwrap(),
                trace.clone().unwrap(),
            )),
            _ => None,
        })
        .unwrap();
    assert_eq!(
        prop.0,
        Verdict::Cex {
            depth: 12,
            steps: 6
        }
    );
    let (names, times) = vcd_shape(&std::fs::read_to_string(&prop.1).unwrap());
    assert_eq!(times, 13);
    assert!(names.iter().any(|n| n == "Invariant_2"));
    let trace = std::fs::read_to_string(&prop.2).unwrap();
    assert!(trace.starts_with("counterexample for `Invariant_2`\ninit: "));
    assert_eq!(trace.matches("\nstep ").count(), 6);
    assert_eq!(records.last(), Some(&Record::Summary { exit_code: 1 }));
}

#[test]
fn unknown_invariant_name_stops_before_checking() {
    let dir = tempfile::tempdir().unwrap();
    let inv = write(
        dir.path(),
        "bad.inv",
        "ok: timer.t >= 0\nwrong: lamp.m == 5\n",
    );
    let o = run(&[
        "check",
        &model("traffic_light.bip"),
        "-i",
        &inv,
        "--out-dir",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.inv"));
    assert!(stdout(&o).is_empty());
}

#[test]
fn explore_reports() {
    let o = run(&["explore", &model("traffic_light.bip")]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "reachable states: 21, diameter: 20, deadlock: none\n"
    );

    let o = run(&["explore", &model("traffic_light.bip"), "--max-states", "5"]);
    assert_eq!(code(&o), 3);

    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "stuck.bip",
        "component c { port p(); place s, t; on p from t to t; }\nconnector a(c.p);\ninit { c at s; }\n",
    );
    let o = run(&["explore", &p]);
    assert_eq!(code(&o), 1);
    assert!(
        stdout(&o).contains("deadlock after 0 interactions:\ninit: c@s\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn int_width_override() {
    let o = run(&["explore", &model("traffic_light.bip"), "--int-width", "8"]);
    assert_eq!(code(&o), 0);
    let o = run(&["explore", &model("traffic_light.bip"), "--int-width", "3"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("does not fit"));
    let o = run(&["explore", &model("traffic_light.bip"), "--int-width", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sat_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "f.cnf", "p cnf 3 3\n1 2 0\n-1 0\n-2 3 0\n");
    let o = run(&["sat", &p]);
    assert_eq!(code(&o), 10);
    assert_eq!(stdout(&o), "s SATISFIABLE\nv -1 2 3 0\n");
    let p = write(dir.path(), "g.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    let o = run(&["sat", &p]);
    assert_eq!(code(&o), 20);
    let p = write(dir.path(), "h.cnf", "p cnf 1 5\n1 0\n");
    assert_eq!(code(&run(&["sat", &p])), 2);
}

#[test]
fn external_solver_gives_the_same_verdicts() {
    let solver = format!("external:{BIN} sat");
    let args = |extra: &[&str]| {
        let mut a = vec!["check", "--engine", "bmc", "--maxk", "14"];
        a.extend_from_slice(extra);
        a.iter().map(|s| s.to_string()).collect::<Vec<_>>()
    };
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().display().to_string();
    let bug = model("quorum_bug.bip");
    let inv = model("quorum.inv");
    let internal = Command::new(BIN)
        .args(args(&[&bug, "-i", &inv, "--out-dir", &out_dir]))
        .output()
        .unwrap();
    let external = Command::new(BIN)
        .args(args(&[
            &bug,
            "-i",
            &inv,
            "--out-dir",
            &out_dir,
            "--solver",
            &solver,
        ]))
        .output()
        .unwrap();
    assert_eq!(code(&external), 1, "{}", stderr(&external));
    let verdicts = |o: &Output| -> Vec<String> {
        stdout(o)
            .lines()
            .filter(|l| !l.starts_with(' '))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(verdicts(&internal), verdicts(&external));

    let o = run(&["check", &model("toggler.bip"), "--solver", "external:"]);
    assert_eq!(code(&o), 2);
    let o = run(&[
        "check",
        &model("toggler.bip"),
        "--solver",
        "external:/nonexistent/solver",
    ]);
    assert_eq!(code(&o), 2);
}
