//! Translation of a BIP system into a one-loop program.
//!
//! In the default two-cycle scheme every BIP step takes two loop iterations:
//! an interaction iteration (`cycle` false) that selects an interaction,
//! commits its data transfers and latches which transition each participant
//! fires, then a transition iteration that runs those transitions. The fused
//! scheme does both in one iteration when no transfer can interfere with the
//! transitions it triggers.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::bip::{BipExpr, BipRef, BipSystem, Invariant, PortId, VarId};
use crate::expr::{BinOp, Expr, IntTy, Ty};
use crate::olp::{Assign, Decl, OlpError, OlpExpr, OlpProgram, Term};
use crate::semantics::GlobalState;

/// How `is[j]` picks an interaction when the selector names one that is not
/// enabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Fallback {
    /// The enabled interaction with the highest index.
    #[default]
    Highest,
    /// The enabled interaction with the lowest index.
    Lowest,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslateOptions {
    pub fallback: Fallback,
    /// Use the one-cycle scheme; rejected when it is not applicable.
    pub fuse: bool,
}

/// What a declaration of the generated program stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Variable(VarId),
    Location(usize),
    /// Index (1-based, 0 for none) of the transition a component fires in
    /// the next transition iteration.
    Fire(usize),
    PortEnabled(PortId),
    PortSelected(PortId),
    InteractionEnabled,
    InteractionMaximal,
    InteractionSelected,
    Selector,
    Cycle,
    /// Index into [`TranslationOutput::properties`].
    Property(usize),
}

/// Bidirectional map between program declarations and their BIP origin.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolMap {
    entries: Vec<(String, Origin)>,
    by_name: HashMap<String, usize>,
    by_origin: HashMap<Origin, usize>,
}

impl SymbolMap {
    fn insert(&mut self, name: String, origin: Origin) {
        let k = self.entries.len();
        self.by_name.insert(name.clone(), k);
        self.by_origin.insert(origin, k);
        self.entries.push((name, origin));
    }

    pub fn origin(&self, name: &str) -> Option<Origin> {
        self.by_name.get(name).map(|&k| self.entries[k].1)
    }

    pub fn name(&self, origin: Origin) -> Option<&str> {
        self.by_origin
            .get(&origin)
            .map(|&k| self.entries[k].0.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Origin)> {
        self.entries.iter().map(|(n, o)| (n.as_str(), *o))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyWire {
    /// `deadlock_free` or the invariant's name.
    pub name: String,
    /// Program wire that is true while the property holds.
    pub wire: String,
}

#[derive(Clone, Debug)]
pub struct TranslationOutput {
    pub program: OlpProgram,
    pub symbols: SymbolMap,
    /// Deadlock freedom first, then one entry per invariant.
    pub properties: Vec<PropertyWire>,
    pub fused: bool,
}

impl TranslationOutput {
    /// Loop iterations per BIP step.
    pub fn steps_per_interaction(&self) -> usize {
        if self.fused {
            1
        } else {
            2
        }
    }
}

/// A data dependency that rules out the one-cycle scheme.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuseConflict {
    pub interaction: String,
    pub variable: String,
    pub component: String,
    pub port: String,
}

impl fmt::Display for FuseConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "connector `{}` transfers into `{}`, which a transition of `{}` on port `{}` also uses",
            self.interaction, self.variable, self.component, self.port
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    #[error("one-cycle translation not applicable: {0}")]
    FuseInapplicable(FuseConflict),
    #[error("property name `{0}` clashes with a generated declaration")]
    NameClash(String),
    #[error("generated program is invalid: {0}")]
    Invalid(#[from] OlpError),
}

/// Number of bits needed to represent `0..n` (at least one).
pub fn index_width(n: usize) -> u32 {
    let mut w = 1;
    while (1usize << w) < n {
        w += 1;
    }
    w
}

pub const CYCLE: &str = "cycle";
pub const SELECTOR: &str = "selector";
pub const ENABLED: &str = "ie";
pub const MAXIMAL: &str = "ip";
pub const SELECTED: &str = "is";
pub const DEADLOCK_FREE: &str = "deadlock_free";

fn var(name: impl Into<String>) -> OlpExpr {
    Expr::Var(Term::scalar(name))
}

fn elem(name: &str, k: usize) -> OlpExpr {
    Expr::Var(Term::element(name, k))
}

fn and(a: OlpExpr, b: OlpExpr) -> OlpExpr {
    Expr::bin(BinOp::And, a, b)
}

/// Naming of the generated declarations.
#[derive(Clone, Copy)]
pub struct Names<'a> {
    sys: &'a BipSystem,
}

impl<'a> Names<'a> {
    pub fn new(sys: &'a BipSystem) -> Self {
        Names { sys }
    }

    pub fn variable(&self, v: VarId) -> String {
        self.sys.var_name(v)
    }

    pub fn location(&self, comp: usize) -> String {
        format!("{}.loc", self.sys.components[comp].name)
    }

    pub fn fire(&self, comp: usize) -> String {
        format!("{}.fire", self.sys.components[comp].name)
    }

    pub fn port_enabled(&self, p: PortId) -> String {
        format!(
            "{}.{}.e",
            self.sys.components[p.comp].name,
            self.sys.port(p).name
        )
    }

    pub fn port_selected(&self, p: PortId) -> String {
        format!(
            "{}.{}.s",
            self.sys.components[p.comp].name,
            self.sys.port(p).name
        )
    }

    /// A BIP expression over program registers.
    pub fn expr(&self, e: &BipExpr) -> OlpExpr {
        e.map_vars(&mut |r| match *r {
            BipRef::Var(v) => var(self.variable(v)),
            BipRef::At { comp, loc } => Expr::eq(var(self.location(comp)), Expr::Int(loc as i64)),
        })
    }

    // `(src == C.loc)` and the guard unless it is literally true.
    fn at_source(&self, comp: usize, src: usize, guard: &BipExpr) -> Vec<OlpExpr> {
        let mut parts = vec![Expr::eq(Expr::Int(src as i64), var(self.location(comp)))];
        if !guard.is_true() {
            parts.push(self.expr(guard));
        }
        parts
    }
}

fn fire_width(sys: &BipSystem, comp: usize) -> u32 {
    index_width(sys.components[comp].transitions.len() + 1)
}

/// The declaration list: interaction arrays, selector, cycle, then per
/// component its port wires, location register and variable registers.
pub fn gen_decls(sys: &BipSystem, fused: bool) -> (Vec<Decl>, SymbolMap) {
    let names = Names::new(sys);
    let n = sys.interactions.len();
    let mut decls = Vec::new();
    let mut map = SymbolMap::default();
    let mut push = |d: Decl, o: Origin, decls: &mut Vec<Decl>| {
        map.insert(d.name.clone(), o);
        decls.push(d);
    };
    if n > 0 {
        push(
            Decl::wire_array(ENABLED, Ty::Bool, n),
            Origin::InteractionEnabled,
            &mut decls,
        );
        push(
            Decl::wire_array(MAXIMAL, Ty::Bool, n),
            Origin::InteractionMaximal,
            &mut decls,
        );
        push(
            Decl::wire_array(SELECTED, Ty::Bool, n),
            Origin::InteractionSelected,
            &mut decls,
        );
    }
    push(
        Decl::wire(SELECTOR, Ty::Int(IntTy::unsigned(index_width(n)))),
        Origin::Selector,
        &mut decls,
    );
    if !fused {
        push(Decl::register(CYCLE, Ty::Bool), Origin::Cycle, &mut decls);
    }
    for (ci, c) in sys.components.iter().enumerate() {
        for port in 0..c.ports.len() {
            let p = PortId { comp: ci, port };
            push(
                Decl::wire(names.port_enabled(p), Ty::Bool),
                Origin::PortEnabled(p),
                &mut decls,
            );
            push(
                Decl::wire(names.port_selected(p), Ty::Bool),
                Origin::PortSelected(p),
                &mut decls,
            );
        }
        push(
            Decl::register(
                names.location(ci),
                Ty::Int(IntTy::unsigned(index_width(c.locations.len()))),
            ),
            Origin::Location(ci),
            &mut decls,
        );
        for (var, v) in c.variables.iter().enumerate() {
            let id = VarId { comp: ci, var };
            push(
                Decl::register(names.variable(id), v.ty),
                Origin::Variable(id),
                &mut decls,
            );
        }
        if !fused {
            push(
                Decl::register(
                    names.fire(ci),
                    Ty::Int(IntTy::unsigned(fire_width(sys, ci))),
                ),
                Origin::Fire(ci),
                &mut decls,
            );
        }
    }
    (decls, map)
}

/// Port enables, interaction enables, priority filter, selection and port
/// selection wires.
pub fn gen_wiredefs(sys: &BipSystem, fallback: Fallback) -> Vec<Assign> {
    let names = Names::new(sys);
    let n = sys.interactions.len();
    let mut out = Vec::new();
    for (ci, c) in sys.components.iter().enumerate() {
        for port in 0..c.ports.len() {
            let p = PortId { comp: ci, port };
            let arms = c
                .transitions_of(port)
                .map(|(_, t)| Expr::and_all(names.at_source(ci, t.src, &t.guard)));
            out.push(Assign::new(
                Term::scalar(names.port_enabled(p)),
                Expr::or_all(arms),
            ));
        }
    }

    let below = sys.priority_closure();
    let selector_width = index_width(n);
    let selected_maximal = {
        let read = Expr::Var(Term::dynamic(MAXIMAL, var(SELECTOR)));
        if (1usize << selector_width) > n {
            let in_range = Expr::bin(BinOp::Lt, var(SELECTOR), Expr::Int(n as i64));
            and(in_range, read)
        } else {
            read
        }
    };
    for (j, a) in sys.interactions.iter().enumerate() {
        let mut parts = Vec::new();
        if !a.guard.is_true() {
            parts.push(names.expr(&a.guard));
        }
        parts.extend(a.ports.iter().map(|p| var(names.port_enabled(*p))));
        out.push(Assign::new(Term::element(ENABLED, j), Expr::and_all(parts)));
    }
    for (j, row) in below.iter().enumerate() {
        let higher = (0..n)
            .filter(|&k| row[k])
            .map(|k| Expr::not(elem(ENABLED, k)));
        out.push(Assign::new(
            Term::element(MAXIMAL, j),
            Expr::and_all(std::iter::once(elem(ENABLED, j)).chain(higher)),
        ));
    }
    for j in 0..n {
        let others: Vec<usize> = match fallback {
            Fallback::Highest => (j + 1..n).collect(),
            Fallback::Lowest => (0..j).collect(),
        };
        let fallback_case = Expr::and_all(
            std::iter::once(Expr::not(selected_maximal.clone()))
                .chain(others.into_iter().map(|k| Expr::not(elem(MAXIMAL, k)))),
        );
        let chosen = Expr::eq(var(SELECTOR), Expr::Int(j as i64));
        out.push(Assign::new(
            Term::element(SELECTED, j),
            and(
                elem(MAXIMAL, j),
                Expr::bin(BinOp::Or, chosen, fallback_case),
            ),
        ));
    }

    for (ci, c) in sys.components.iter().enumerate() {
        for port in 0..c.ports.len() {
            let p = PortId { comp: ci, port };
            let arms = sys
                .interactions_of(p)
                .into_iter()
                .map(|k| elem(SELECTED, k));
            out.push(Assign::new(
                Term::scalar(names.port_selected(p)),
                Expr::or_all(arms),
            ));
        }
    }
    out
}

/// `cycle` starts in interaction mode, locations at their initial index and
/// variables at their initial value (zero by default).
pub fn gen_init(sys: &BipSystem, fused: bool) -> Vec<Assign> {
    let names = Names::new(sys);
    let mut out = Vec::new();
    if !fused {
        out.push(Assign::new(Term::scalar(CYCLE), Expr::Bool(false)));
    }
    for (ci, c) in sys.components.iter().enumerate() {
        out.push(Assign::new(
            Term::scalar(names.location(ci)),
            Expr::Int(sys.init_locations[ci] as i64),
        ));
        for (var, v) in c.variables.iter().enumerate() {
            let id = VarId { comp: ci, var };
            let x = sys.initial_value(id);
            let e = match v.ty {
                Ty::Bool => Expr::Bool(x != 0),
                Ty::Int(_) => Expr::Int(x),
            };
            out.push(Assign::new(Term::scalar(names.variable(id)), e));
        }
        if !fused {
            out.push(Assign::new(Term::scalar(names.fire(ci)), Expr::Int(0)));
        }
    }
    out
}

fn chain(arms: Vec<(OlpExpr, OlpExpr)>, otherwise: OlpExpr) -> OlpExpr {
    arms.into_iter()
        .rev()
        .fold(otherwise, |acc, (c, v)| Expr::ite(c, v, acc))
}

/// Next-state functions. Two-cycle: transfers under `is[k]` in interaction
/// mode, latched transitions under `C.fire == k` in transition mode, then
/// `cycle = !cycle`. Fused: both under their selection conditions at once.
pub fn gen_next(sys: &BipSystem, fused: bool) -> Vec<Assign> {
    let names = Names::new(sys);
    let mut out = Vec::new();
    let transfers_into = |v: VarId| -> Vec<(OlpExpr, OlpExpr)> {
        sys.interactions
            .iter()
            .enumerate()
            .flat_map(|(k, a)| {
                a.transfers
                    .iter()
                    .filter(move |(t, _)| *t == v)
                    .map(move |(_, e)| (elem(SELECTED, k), names.expr(e)))
            })
            .collect()
    };
    for (ci, c) in sys.components.iter().enumerate() {
        // Condition under which transition `k` fires, evaluated in the
        // iteration that selects the interaction.
        let fires = |k: usize| {
            let t = &c.transitions[k];
            let s = var(names.port_selected(PortId {
                comp: ci,
                port: t.port,
            }));
            Expr::and_all(std::iter::once(s).chain(names.at_source(ci, t.src, &t.guard)))
        };
        let arm = |k: usize| {
            if fused {
                fires(k)
            } else {
                Expr::eq(var(names.fire(ci)), Expr::Int(k as i64 + 1))
            }
        };
        let mode = |interaction: OlpExpr, transition: OlpExpr| {
            if fused {
                transition
            } else {
                Expr::ite(Expr::not(var(CYCLE)), interaction, transition)
            }
        };

        let loc = names.location(ci);
        let moves = (0..c.transitions.len())
            .map(|k| (arm(k), Expr::Int(c.transitions[k].dest as i64)))
            .collect();
        out.push(Assign::new(
            Term::scalar(&loc),
            mode(var(&loc), chain(moves, var(&loc))),
        ));

        for var_ix in 0..c.variables.len() {
            let id = VarId {
                comp: ci,
                var: var_ix,
            };
            let name = names.variable(id);
            let transfers = transfers_into(id);
            let actions: Vec<(OlpExpr, OlpExpr)> = c
                .transitions
                .iter()
                .enumerate()
                .flat_map(|(k, t)| {
                    t.assignments
                        .iter()
                        .filter(|(x, _)| *x == var_ix)
                        .map(move |(_, e)| (k, e))
                })
                .map(|(k, e)| (arm(k), names.expr(e)))
                .collect();
            let rhs = if fused {
                let mut arms = transfers;
                arms.extend(actions);
                chain(arms, var(&name))
            } else {
                mode(chain(transfers, var(&name)), chain(actions, var(&name)))
            };
            out.push(Assign::new(Term::scalar(&name), rhs));
        }

        if !fused {
            let picks = (0..c.transitions.len())
                .map(|k| (fires(k), Expr::Int(k as i64 + 1)))
                .collect();
            out.push(Assign::new(
                Term::scalar(names.fire(ci)),
                mode(chain(picks, Expr::Int(0)), Expr::Int(0)),
            ));
        }
    }
    if !fused {
        out.push(Assign::new(Term::scalar(CYCLE), Expr::not(var(CYCLE))));
    }
    out
}

/// Property wires: deadlock freedom, then one wire per invariant. Outside
/// the fused scheme both are vacuously true in transition mode, whose
/// states are not BIP states.
pub fn gen_properties(
    sys: &BipSystem,
    invariants: &[Invariant],
    fused: bool,
) -> (Vec<Decl>, Vec<Assign>, Vec<PropertyWire>) {
    let names = Names::new(sys);
    let relax = |e: OlpExpr| {
        if fused {
            e
        } else {
            Expr::bin(BinOp::Or, var(CYCLE), e)
        }
    };
    let mut decls = Vec::new();
    let mut defs = Vec::new();
    let mut props = Vec::new();
    let enabled = (0..sys.interactions.len()).map(|j| elem(ENABLED, j));
    let deadlock_free = if fused {
        Expr::or_all(enabled)
    } else {
        Expr::or_all(std::iter::once(var(CYCLE)).chain(enabled))
    };
    decls.push(Decl::wire(DEADLOCK_FREE, Ty::Bool));
    defs.push(Assign::new(Term::scalar(DEADLOCK_FREE), deadlock_free));
    props.push(PropertyWire {
        name: DEADLOCK_FREE.into(),
        wire: DEADLOCK_FREE.into(),
    });
    for inv in invariants {
        decls.push(Decl::wire(inv.name.clone(), Ty::Bool));
        defs.push(Assign::new(
            Term::scalar(&inv.name),
            relax(names.expr(&inv.expr)),
        ));
        props.push(PropertyWire {
            name: inv.name.clone(),
            wire: inv.name.clone(),
        });
    }
    (decls, defs, props)
}

fn reads(e: &BipExpr, out: &mut HashSet<VarId>) {
    e.for_each_var(&mut |r| {
        if let BipRef::Var(v) = r {
            out.insert(*v);
        }
    });
}

/// Whether the one-cycle scheme preserves the semantics: for every
/// interaction, no transfer target is read or written by a transition that
/// one of its ports can fire.
pub fn one_cycle_opt(sys: &BipSystem) -> Result<(), FuseConflict> {
    for a in &sys.interactions {
        let written: Vec<VarId> = a.transfers.iter().map(|(v, _)| *v).collect();
        for p in &a.ports {
            let c = &sys.components[p.comp];
            for (_, t) in c.transitions_of(p.port) {
                let mut used = HashSet::new();
                reads(&t.guard, &mut used);
                for (x, e) in &t.assignments {
                    used.insert(VarId {
                        comp: p.comp,
                        var: *x,
                    });
                    reads(e, &mut used);
                }
                if let Some(v) = written.iter().find(|v| used.contains(v)) {
                    return Err(FuseConflict {
                        interaction: a.name.clone(),
                        variable: sys.var_name(*v),
                        component: c.name.clone(),
                        port: c.ports[p.port].name.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Translate a validated system and its invariants.
pub fn translate(
    sys: &BipSystem,
    invariants: &[Invariant],
    opts: TranslateOptions,
) -> Result<TranslationOutput, TranslateError> {
    if opts.fuse {
        one_cycle_opt(sys).map_err(TranslateError::FuseInapplicable)?;
    }
    let fused = opts.fuse;
    let (mut decls, mut symbols) = gen_decls(sys, fused);
    let mut wiredefs = gen_wiredefs(sys, opts.fallback);
    let inits = gen_init(sys, fused);
    let nexts = gen_next(sys, fused);
    let (pdecls, pdefs, properties) = gen_properties(sys, invariants, fused);
    for (k, d) in pdecls.into_iter().enumerate() {
        if symbols.origin(&d.name).is_some() {
            return Err(TranslateError::NameClash(d.name));
        }
        symbols.insert(d.name.clone(), Origin::Property(k));
        decls.push(d);
    }
    wiredefs.extend(pdefs);
    let program = OlpProgram::new(decls, wiredefs, inits, nexts)?;
    Ok(TranslationOutput {
        program,
        symbols,
        properties,
        fused,
    })
}

impl TranslationOutput {
    /// The BIP state held in the registers of a program valuation.
    pub fn bip_state(&self, sys: &BipSystem, vals: &[i64]) -> GlobalState {
        let reg = |name: &str| vals[self.program.slot(name, None).expect("declared register")];
        let names = Names::new(sys);
        GlobalState {
            locations: (0..sys.components.len())
                .map(|ci| reg(&names.location(ci)) as usize)
                .collect(),
            values: sys
                .components
                .iter()
                .enumerate()
                .map(|(ci, c)| {
                    (0..c.variables.len())
                        .map(|var| reg(&names.variable(VarId { comp: ci, var })))
                        .collect()
                })
                .collect(),
        }
    }

    /// Values of one of the interaction arrays (`ie`, `ip` or `is`).
    pub fn interaction_wires(&self, array: &str, vals: &[i64]) -> Vec<bool> {
        let n = self.program.decl(array).and_then(|d| d.len).unwrap_or(0);
        (0..n)
            .map(|j| vals[self.program.slot(array, Some(j)).expect("array element")] != 0)
            .collect()
    }

    /// Whether a valuation is at the start of a BIP step.
    pub fn at_boundary(&self, vals: &[i64]) -> bool {
        self.fused || vals[self.program.slot(CYCLE, None).expect("cycle register")] == 0
    }

    /// Whether property `k` holds in a valuation.
    pub fn property_holds(&self, k: usize, vals: &[i64]) -> bool {
        vals[self
            .program
            .slot(&self.properties[k].wire, None)
            .expect("property wire")]
            != 0
    }
}
