#![allow(dead_code)]

use std::fmt::Write;
use std::path::PathBuf;

use bipc::bip::{parse_invariants, parse_system, BipSystem, Invariant};
use bipc::pipeline::Pipeline;
use bipc::semantics::{ExploreReport, Interpreter};
use bipc::translate::TranslateOptions;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Models shipped with the crate, all small enough to explore exhaustively.
pub const CORPUS: &[&str] = &[
    "traffic_light",
    "handshake",
    "toggler",
    "atm",
    "quorum",
    "quorum_bug",
];

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(model_path(&format!("{name}.bip"))).expect("model exists")
}

/// The faulty quorum variant shares the invariants of the correct one.
pub fn invariant_file(name: &str) -> Option<PathBuf> {
    let p = model_path(&format!("{}.inv", name.trim_end_matches("_bug")));
    p.exists().then_some(p)
}

pub fn load(name: &str) -> (BipSystem, Vec<Invariant>) {
    let sys = parse_system(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let invs = invariant_file(name)
        .map(|p| parse_invariants(&sys, &std::fs::read_to_string(p).unwrap()).unwrap())
        .unwrap_or_default();
    (sys, invs)
}

pub fn pipeline(sys: &BipSystem, invs: &[Invariant], fuse: bool) -> Pipeline {
    Pipeline::new(
        sys,
        invs,
        TranslateOptions {
            fuse,
            ..Default::default()
        },
    )
    .expect("pipeline builds")
}

pub fn explore(sys: &BipSystem, invs: &[Invariant], max_states: usize) -> ExploreReport {
    let exprs: Vec<_> = invs.iter().map(|i| i.expr.clone()).collect();
    Interpreter::new(sys)
        .explore(max_states, &exprs)
        .expect("explores")
}

/// Oracle shortest depth per property in pipeline order: deadlock freedom
/// first, then the invariants.
pub fn oracle_depths(report: &ExploreReport) -> Vec<Option<usize>> {
    std::iter::once(report.deadlock.as_ref().map(|t| t.len()))
        .chain(
            report
                .violations
                .iter()
                .map(|v| v.as_ref().map(|t| t.len())),
        )
        .collect()
}

struct Comp {
    name: String,
    /// (name, is_bool)
    vars: Vec<(String, bool)>,
    ports: Vec<(String, Vec<usize>)>,
    places: usize,
    widths: Vec<u32>,
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn int_expr(&mut self, ints: &[String], depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.5);
        if leaf {
            if !ints.is_empty() && self.rng.gen_bool(0.8) {
                return ints.choose(&mut self.rng).unwrap().clone();
            }
            return self.rng.gen_range(0..4).to_string();
        }
        match self.rng.gen_range(0..6) {
            0 => format!(
                "({} + {})",
                self.int_expr(ints, depth - 1),
                self.int_expr(ints, depth - 1)
            ),
            1 => format!(
                "({} - {})",
                self.int_expr(ints, depth - 1),
                self.int_expr(ints, depth - 1)
            ),
            2 => format!(
                "({} * {})",
                self.int_expr(ints, depth - 1),
                self.int_expr(ints, depth - 1)
            ),
            3 => format!("(-{})", self.int_expr(ints, depth - 1)),
            4 => format!(
                "({} ? {} : {})",
                self.bool_expr(ints, &[], depth - 1),
                self.int_expr(ints, depth - 1),
                self.int_expr(ints, depth - 1)
            ),
            _ => format!("({} + 1)", self.int_expr(ints, depth - 1)),
        }
    }

    fn bool_expr(&mut self, ints: &[String], bools: &[String], depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.3);
        if leaf {
            if !bools.is_empty() && self.rng.gen_bool(0.5) {
                return bools.choose(&mut self.rng).unwrap().clone();
            }
            let op = ["<", "<=", "==", "!=", ">", ">="]
                .choose(&mut self.rng)
                .unwrap();
            return format!(
                "({} {op} {})",
                self.int_expr(ints, 1),
                self.int_expr(ints, 1)
            );
        }
        match self.rng.gen_range(0..4) {
            0 => format!(
                "({} && {})",
                self.bool_expr(ints, bools, depth - 1),
                self.bool_expr(ints, bools, depth - 1)
            ),
            1 => format!(
                "({} || {})",
                self.bool_expr(ints, bools, depth - 1),
                self.bool_expr(ints, bools, depth - 1)
            ),
            2 => format!("!{}", self.bool_expr(ints, bools, depth - 1)),
            _ => {
                let op = ["<", "<=", "==", "!="].choose(&mut self.rng).unwrap();
                format!(
                    "({} {op} {})",
                    self.int_expr(ints, depth - 1),
                    self.int_expr(ints, depth - 1)
                )
            }
        }
    }

    fn split(names: &[(String, bool)]) -> (Vec<String>, Vec<String>) {
        let ints = names.iter().filter(|v| !v.1).map(|v| v.0.clone()).collect();
        let bools = names.iter().filter(|v| v.1).map(|v| v.0.clone()).collect();
        (ints, bools)
    }

    fn rhs(&mut self, is_bool: bool, ints: &[String], bools: &[String]) -> String {
        if is_bool {
            self.bool_expr(ints, bools, 2)
        } else {
            self.int_expr(ints, 2)
        }
    }
}

/// A random well-formed system with narrow integers. Each (port, place)
/// pair has at most one transition, so no step is ambiguous.
pub fn random_system_source(seed: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let ncomp = g.rng.gen_range(1..=3);
    let mut comps = Vec::new();
    let mut out = String::new();
    for ci in 0..ncomp {
        let nvars = g.rng.gen_range(0..=3);
        let vars: Vec<(String, bool)> = (0..nvars)
            .map(|k| (format!("x{k}"), g.rng.gen_bool(0.25)))
            .collect();
        let widths: Vec<u32> = vars.iter().map(|_| g.rng.gen_range(2..=4)).collect();
        let ports: Vec<(String, Vec<usize>)> = (0..g.rng.gen_range(1..=2))
            .map(|k| {
                let support = (0..nvars).filter(|_| g.rng.gen_bool(0.5)).collect();
                (format!("p{k}"), support)
            })
            .collect();
        let places = g.rng.gen_range(1..=3);
        let name = format!("c{ci}");
        writeln!(out, "component {name} {{").unwrap();
        for ((v, b), w) in vars.iter().zip(&widths) {
            if *b {
                writeln!(out, "  var {v} : bool;").unwrap();
            } else {
                writeln!(out, "  var {v} : int<{w}>;").unwrap();
            }
        }
        for (p, support) in &ports {
            let s: Vec<&str> = support.iter().map(|&k| vars[k].0.as_str()).collect();
            writeln!(out, "  port {p}({});", s.join(", ")).unwrap();
        }
        let names: Vec<String> = (0..places).map(|l| format!("l{l}")).collect();
        writeln!(out, "  place {};", names.join(", ")).unwrap();
        let (ints, bools) = Gen::split(&vars);
        for (p, _) in &ports {
            for src in 0..places {
                if !g.rng.gen_bool(0.85) {
                    continue;
                }
                let dest = g.rng.gen_range(0..places);
                write!(out, "  on {p} from l{src} to l{dest}").unwrap();
                if g.rng.gen_bool(0.4) {
                    write!(out, " provided {}", g.bool_expr(&ints, &bools, 1)).unwrap();
                }
                let assigned: Vec<usize> = (0..nvars).filter(|_| g.rng.gen_bool(0.5)).collect();
                if assigned.is_empty() {
                    writeln!(out, ";").unwrap();
                } else {
                    write!(out, " do {{").unwrap();
                    for k in assigned {
                        let e = g.rhs(vars[k].1, &ints, &bools);
                        write!(out, " {} := {e};", vars[k].0).unwrap();
                    }
                    writeln!(out, " }}").unwrap();
                }
            }
        }
        writeln!(out, "}}\n").unwrap();
        comps.push(Comp {
            name,
            vars,
            ports,
            places,
            widths,
        });
    }

    let nint = g.rng.gen_range(1..=4);
    for j in 0..nint {
        let mut members: Vec<usize> = (0..ncomp).filter(|_| g.rng.gen_bool(0.5)).collect();
        if members.is_empty() {
            members.push(g.rng.gen_range(0..ncomp));
        }
        let mut ports = Vec::new();
        let mut support: Vec<(String, bool)> = Vec::new();
        for &ci in &members {
            let c = &comps[ci];
            let (p, sup) = c.ports.choose(&mut g.rng).unwrap();
            ports.push(format!("{}.{p}", c.name));
            support.extend(
                sup.iter()
                    .map(|&k| (format!("{}.{}", c.name, c.vars[k].0), c.vars[k].1)),
            );
        }
        write!(out, "connector a{j}({})", ports.join(", ")).unwrap();
        let (ints, bools) = Gen::split(&support);
        if g.rng.gen_bool(0.3) {
            write!(out, " provided {}", g.bool_expr(&ints, &bools, 1)).unwrap();
        }
        let targets: Vec<&(String, bool)> =
            support.iter().filter(|_| g.rng.gen_bool(0.4)).collect();
        if targets.is_empty() {
            writeln!(out, ";").unwrap();
        } else {
            write!(out, " do {{").unwrap();
            for (v, b) in targets {
                let e = g.rhs(*b, &ints, &bools);
                write!(out, " {v} := {e};").unwrap();
            }
            writeln!(out, " }}").unwrap();
        }
    }
    for lo in 0..nint {
        for hi in lo + 1..nint {
            if g.rng.gen_bool(0.2) {
                writeln!(out, "priority a{lo} < a{hi};").unwrap();
            }
        }
    }

    writeln!(out, "\ninit {{").unwrap();
    for c in &comps {
        writeln!(out, "  {} at l{};", c.name, g.rng.gen_range(0..c.places)).unwrap();
        for ((v, b), w) in c.vars.iter().zip(&c.widths) {
            if !g.rng.gen_bool(0.6) {
                continue;
            }
            if *b {
                writeln!(out, "  {}.{v} := {};", c.name, g.rng.gen_bool(0.5)).unwrap();
            } else {
                let half = 1i64 << (w - 1);
                writeln!(out, "  {}.{v} := {};", c.name, g.rng.gen_range(-half..half)).unwrap();
            }
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

pub fn random_system(seed: u64) -> BipSystem {
    let src = random_system_source(seed);
    parse_system(&src).unwrap_or_else(|e| panic!("generated system does not parse: {e}\n{src}"))
}

/// A random invariant over every variable and place of a system, one per
/// line of the returned sidecar text.
pub fn random_invariants(sys: &BipSystem, seed: u64, count: usize) -> Vec<Invariant> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed),
    };
    let mut ints = Vec::new();
    let mut bools = Vec::new();
    for c in &sys.components {
        for v in &c.variables {
            let n = format!("{}.{}", c.name, v.name);
            if v.ty == bipc::expr::Ty::Bool {
                bools.push(n);
            } else {
                ints.push(n);
            }
        }
        for l in &c.locations {
            bools.push(format!("{} @ {l}", c.name));
        }
    }
    let text: String = (0..count)
        .map(|k| format!("r{k}: {}\n", g.bool_expr(&ints, &bools, 2)))
        .collect();
    parse_invariants(sys, &text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

/// A value change dump read back into full per-time valuations.
#[derive(Debug)]
pub struct Vcd {
    /// (scope, name, width)
    pub signals: Vec<(String, String, u32)>,
    pub times: Vec<u64>,
    /// Value of every signal at every listed time.
    pub frames: Vec<Vec<u64>>,
}

impl Vcd {
    pub fn index(&self, scope: &str, name: &str) -> usize {
        self.signals
            .iter()
            .position(|(s, n, _)| s == scope && n == name)
            .unwrap_or_else(|| panic!("no signal {scope}.{name}"))
    }

    pub fn trace(&self, scope: &str, name: &str) -> Vec<u64> {
        let k = self.index(scope, name);
        self.frames.iter().map(|f| f[k]).collect()
    }
}

/// A strict reader for the subset of VCD a waveform viewer needs: every
/// signal declared once, every value change referring to a declared code,
/// and initial values for all signals under `$dumpvars`.
pub fn parse_vcd(text: &str) -> Result<Vcd, String> {
    let mut signals = Vec::new();
    let mut ids = std::collections::HashMap::new();
    let mut scope: Vec<String> = Vec::new();
    let mut lines = text.lines();
    let mut saw_timescale = false;
    for line in lines.by_ref() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.first().copied() {
            Some("$version") | Some("$date") | Some("$comment") => {}
            Some("$timescale") => saw_timescale = true,
            Some("$scope") if f.len() == 4 && f[3] == "$end" => scope.push(f[2].to_string()),
            Some("$upscope") => {
                scope.pop().ok_or("unbalanced $upscope")?;
            }
            Some("$var") if f.len() == 6 && f[5] == "$end" => {
                let width: u32 = f[2].parse().map_err(|_| format!("bad width in `{line}`"))?;
                if ids.insert(f[3].to_string(), signals.len()).is_some() {
                    return Err(format!("duplicate code `{}`", f[3]));
                }
                signals.push((
                    scope.last().cloned().ok_or("variable outside a scope")?,
                    f[4].to_string(),
                    width,
                ));
            }
            Some("$enddefinitions") => break,
            _ => return Err(format!("unexpected header line `{line}`")),
        }
    }
    if !saw_timescale || !scope.is_empty() {
        return Err("incomplete header".into());
    }
    let mut times = Vec::new();
    let mut frames: Vec<Vec<u64>> = Vec::new();
    let mut current: Vec<Option<u64>> = vec![None; signals.len()];
    let mut in_dump = false;
    let flush = |times: &Vec<u64>,
                 frames: &mut Vec<Vec<u64>>,
                 current: &[Option<u64>]|
     -> Result<(), String> {
        if !times.is_empty() {
            let f: Option<Vec<u64>> = current.iter().copied().collect();
            frames.push(f.ok_or("signal without an initial value")?);
        }
        Ok(())
    };
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(t) = line.strip_prefix('#') {
            flush(&times, &mut frames, &current)?;
            let t: u64 = t.parse().map_err(|_| format!("bad time `{line}`"))?;
            if times.last().is_some_and(|&p| p >= t) {
                return Err("times must increase".into());
            }
            times.push(t);
            continue;
        }
        if times.is_empty() {
            return Err(format!("value before the first time: `{line}`"));
        }
        match line {
            "$dumpvars" => in_dump = true,
            "$end" if in_dump => in_dump = false,
            _ => {
                let (value, id) = if let Some(rest) = line.strip_prefix('b') {
                    let (bits, id) = rest
                        .split_once(' ')
                        .ok_or(format!("bad vector change `{line}`"))?;
                    (
                        u64::from_str_radix(bits, 2).map_err(|_| format!("bad bits `{line}`"))?,
                        id,
                    )
                } else {
                    let (v, id) = line.split_at(1);
                    (
                        v.parse()
                            .map_err(|_| format!("bad scalar change `{line}`"))?,
                        id,
                    )
                };
                let k = *ids.get(id).ok_or(format!("undeclared code in `{line}`"))?;
                if signals[k].2 < 64 && value >> signals[k].2 != 0 {
                    return Err(format!("value wider than its signal in `{line}`"));
                }
                current[k] = Some(value);
            }
        }
    }
    if in_dump {
        return Err("unterminated $dumpvars".into());
    }
    flush(&times, &mut frames, &current)?;
    Ok(Vcd {
        signals,
        times,
        frames,
    })
}
