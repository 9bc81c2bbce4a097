//! Value change dumps of program runs.
//!
//! Layout: a `$version` line, `$timescale 1ns`, a top `system` scope holding
//! `cycle` (two-cycle programs only), `selector`, the `ie`/`ip`/`is` vectors
//! (bit `j` is interaction `j`) and one bit per property, then one scope per
//! component with its variables at their declared widths, `loc` and one
//! `at_<location>` bit per location. Time `t` is frame `t`; `#0` carries the
//! initial values inside `$dumpvars`, later times list only changes.

use std::fmt::Write;

use crate::bip::{BipSystem, VarId};
use crate::expr::Ty;
use crate::olp::Valuation;
use crate::translate::{Names, TranslationOutput, CYCLE, ENABLED, MAXIMAL, SELECTED, SELECTOR};

enum Source {
    Slot(usize),
    /// Bit `j` is slot `j` of the list.
    Bits(Vec<usize>),
    At {
        slot: usize,
        loc: i64,
    },
}

struct Signal {
    name: String,
    width: u32,
    source: Source,
}

fn code(mut n: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'!' + (n % 94) as u8) as char);
        n /= 94;
        if n == 0 {
            return s;
        }
        n -= 1;
    }
}

fn width_of(ty: Ty) -> u32 {
    match ty {
        Ty::Bool => 1,
        Ty::Int(t) => t.width,
    }
}

impl Signal {
    fn value(&self, vals: &[i64]) -> u64 {
        match &self.source {
            Source::Slot(s) => vals[*s] as u64,
            Source::Bits(slots) => slots
                .iter()
                .enumerate()
                .fold(0, |acc, (j, &s)| acc | (((vals[s] != 0) as u64) << j)),
            Source::At { slot, loc } => (vals[*slot] == *loc) as u64,
        }
    }

    fn format(&self, v: u64, id: &str) -> String {
        if self.width == 1 {
            format!("{}{id}", v & 1)
        } else {
            let bits: String = (0..self.width)
                .rev()
                .map(|k| if (v >> k) & 1 == 1 { '1' } else { '0' })
                .collect();
            format!("b{bits} {id}")
        }
    }
}

fn scopes(out: &TranslationOutput, sys: &BipSystem) -> Vec<(String, Vec<Signal>)> {
    let prog = &out.program;
    let slot = |name: &str| prog.slot(name, None);
    let scalar = |name: &str, label: &str| {
        slot(name).map(|s| Signal {
            name: label.to_string(),
            width: width_of(prog.slots()[s].ty),
            source: Source::Slot(s),
        })
    };
    let mut top: Vec<Signal> = Vec::new();
    top.extend(scalar(CYCLE, CYCLE));
    top.extend(scalar(SELECTOR, SELECTOR));
    for array in [ENABLED, MAXIMAL, SELECTED] {
        let n = prog.decl(array).and_then(|d| d.len).unwrap_or(0);
        if n > 0 {
            top.push(Signal {
                name: array.to_string(),
                width: n as u32,
                source: Source::Bits((0..n).filter_map(|j| prog.slot(array, Some(j))).collect()),
            });
        }
    }
    for p in &out.properties {
        top.extend(scalar(&p.wire, &p.name));
    }
    let mut all = vec![("system".to_string(), top)];

    let names = Names::new(sys);
    for (ci, c) in sys.components.iter().enumerate() {
        let mut sigs = Vec::new();
        for (k, v) in c.variables.iter().enumerate() {
            sigs.extend(scalar(&names.variable(VarId { comp: ci, var: k }), &v.name));
        }
        let loc = slot(&names.location(ci)).expect("location register");
        sigs.push(Signal {
            name: "loc".into(),
            width: width_of(prog.slots()[loc].ty),
            source: Source::Slot(loc),
        });
        for (l, lname) in c.locations.iter().enumerate() {
            sigs.push(Signal {
                name: format!("at_{lname}"),
                width: 1,
                source: Source::At {
                    slot: loc,
                    loc: l as i64,
                },
            });
        }
        all.push((c.name.clone(), sigs));
    }
    all
}

/// Render frames (program valuations) as VCD text.
pub fn write_vcd(out: &TranslationOutput, sys: &BipSystem, frames: &[Valuation]) -> String {
    let scopes = scopes(out, sys);
    let mut s = String::new();
    writeln!(s, "$version bipc {} $end", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(s, "$timescale 1ns $end").unwrap();
    let mut signals: Vec<(&Signal, String)> = Vec::new();
    for (scope, sigs) in &scopes {
        writeln!(s, "$scope module {scope} $end").unwrap();
        for sig in sigs {
            let id = code(signals.len());
            writeln!(s, "$var wire {} {id} {} $end", sig.width, sig.name).unwrap();
            signals.push((sig, id));
        }
        writeln!(s, "$upscope $end").unwrap();
    }
    writeln!(s, "$enddefinitions $end").unwrap();

    let mut prev: Vec<Option<u64>> = vec![None; signals.len()];
    for (t, vals) in frames.iter().enumerate() {
        writeln!(s, "#{t}").unwrap();
        if t == 0 {
            writeln!(s, "$dumpvars").unwrap();
        }
        for (k, (sig, id)) in signals.iter().enumerate() {
            let mask = if sig.width >= 64 {
                u64::MAX
            } else {
                (1u64 << sig.width) - 1
            };
            let v = sig.value(vals) & mask;
            if prev[k] != Some(v) {
                writeln!(s, "{}", sig.format(v, id)).unwrap();
                prev[k] = Some(v);
            }
        }
        if t == 0 {
            writeln!(s, "$end").unwrap();
        }
    }
    s
}
