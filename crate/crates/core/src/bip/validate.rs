use std::collections::{HashMap, HashSet};

use super::parse::ref_type;
use super::*;
use crate::expr::{type_of, Ty, TypeError, MAX_WIDTH};

fn assignable(target: Ty, value: Ty) -> bool {
    matches!(
        (target, value),
        (Ty::Bool, Ty::Bool) | (Ty::Int(_), Ty::Int(_))
    )
}

struct Checker<'a> {
    sys: &'a BipSystem,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn err(&mut self, kind: DiagKind, pos: Pos, msg: String) {
        self.out.push(Diagnostic::error(kind, pos, msg));
    }

    fn ref_ok(&self, r: &BipRef) -> bool {
        match *r {
            BipRef::Var(v) => {
                v.comp < self.sys.components.len()
                    && v.var < self.sys.components[v.comp].variables.len()
            }
            BipRef::At { comp, loc } => {
                comp < self.sys.components.len() && loc < self.sys.components[comp].locations.len()
            }
        }
    }

    fn typed(&mut self, e: &BipExpr, pos: Pos, what: &str) -> Option<Ty> {
        let mut dangling = false;
        e.for_each_var(&mut |r| dangling |= !self.ref_ok(r));
        if dangling {
            self.err(
                DiagKind::Undeclared,
                pos,
                format!("{what} refers to an undeclared name"),
            );
            return None;
        }
        match type_of(e, &mut |r| Ok::<_, TypeError>(ref_type(self.sys, r))) {
            Ok(t) => Some(t),
            Err(te) => {
                self.err(DiagKind::Type, pos, format!("{what}: {te}"));
                None
            }
        }
    }

    fn expect_bool(&mut self, e: &BipExpr, pos: Pos, what: &str) {
        if let Some(t) = self.typed(e, pos, what) {
            if t != Ty::Bool {
                self.err(
                    DiagKind::Type,
                    pos,
                    format!("{what} has type {t}, expected bool"),
                );
            }
        }
    }

    fn dups<'n>(&mut self, what: &str, items: impl Iterator<Item = (&'n str, Pos)>) {
        let mut seen: HashMap<&str, Pos> = HashMap::new();
        for (n, p) in items {
            if let Some(first) = seen.insert(n, p) {
                self.err(
                    DiagKind::DuplicateName,
                    p,
                    format!("duplicate {what} `{n}` (first declared at {first})"),
                );
            }
        }
    }

    fn component(&mut self, ci: usize) {
        let c = &self.sys.components[ci];
        self.dups(
            "variable",
            c.variables.iter().map(|v| (v.name.as_str(), v.pos)),
        );
        self.dups("port", c.ports.iter().map(|p| (p.name.as_str(), p.pos)));
        self.dups("place", c.locations.iter().map(|l| (l.as_str(), c.pos)));
        if c.locations.is_empty() {
            self.err(
                DiagKind::Structure,
                c.pos,
                format!("component `{}` declares no place", c.name),
            );
        }
        for v in &c.variables {
            if RESERVED_VARS.contains(&v.name.as_str()) {
                self.err(
                    DiagKind::DuplicateName,
                    v.pos,
                    format!("variable name `{}` is reserved", v.name),
                );
            }
            if let Ty::Int(t) = v.ty {
                if t.width == 0 || t.width > MAX_WIDTH || !t.signed {
                    self.err(
                        DiagKind::Type,
                        v.pos,
                        format!("unsupported type {} for `{}`", v.ty, v.name),
                    );
                }
            }
        }
        for p in &c.ports {
            if p.support.iter().any(|&v| v >= c.variables.len()) {
                self.err(
                    DiagKind::PortSupport,
                    p.pos,
                    format!("port `{}` exports an undeclared variable", p.name),
                );
            }
        }
        for t in &c.transitions {
            if t.port >= c.ports.len() || t.src >= c.locations.len() || t.dest >= c.locations.len()
            {
                self.err(
                    DiagKind::Undeclared,
                    t.pos,
                    "transition refers to an undeclared port or place".into(),
                );
                continue;
            }
            let mut foreign = false;
            let local = |r: &BipRef| matches!(r, BipRef::Var(v) if v.comp == ci);
            t.guard.for_each_var(&mut |r| foreign |= !local(r));
            for (_, e) in &t.assignments {
                e.for_each_var(&mut |r| foreign |= !local(r));
            }
            if foreign {
                self.err(
                    DiagKind::Scope,
                    t.pos,
                    format!(
                        "transition on `{}` in `{}` may only refer to the component's own variables",
                        c.ports[t.port].name, c.name
                    ),
                );
                continue;
            }
            self.expect_bool(&t.guard, t.pos, "transition guard");
            let mut targets = HashSet::new();
            for (v, e) in &t.assignments {
                let Some(var) = c.variables.get(*v) else {
                    self.err(
                        DiagKind::Undeclared,
                        t.pos,
                        "assignment to an undeclared variable".into(),
                    );
                    continue;
                };
                if !targets.insert(*v) {
                    self.err(
                        DiagKind::Structure,
                        t.pos,
                        format!("`{}` assigned twice in one transition", var.name),
                    );
                }
                if let Some(ty) = self.typed(e, t.pos, "assignment") {
                    if !assignable(var.ty, ty) {
                        self.err(
                            DiagKind::Type,
                            t.pos,
                            format!("cannot assign {ty} to `{}` of type {}", var.name, var.ty),
                        );
                    }
                }
            }
        }
    }

    fn interaction(&mut self, a: &Interaction) {
        let sys = self.sys;
        if a.ports.is_empty() {
            self.err(
                DiagKind::Structure,
                a.pos,
                format!("connector `{}` has no port", a.name),
            );
            return;
        }
        let mut comps = HashSet::new();
        for p in &a.ports {
            if p.comp >= sys.components.len() || p.port >= sys.components[p.comp].ports.len() {
                self.err(
                    DiagKind::Undeclared,
                    a.pos,
                    format!("connector `{}` names an undeclared port", a.name),
                );
                return;
            }
            if !comps.insert(p.comp) {
                self.err(
                    DiagKind::PortSupport,
                    a.pos,
                    format!(
                        "connector `{}` uses more than one port of component `{}`; an interaction may contain at most one port per component",
                        a.name, sys.components[p.comp].name
                    ),
                );
            }
        }
        let support: HashSet<VarId> = a
            .ports
            .iter()
            .flat_map(|p| {
                sys.port(*p).support.iter().map(move |&v| VarId {
                    comp: p.comp,
                    var: v,
                })
            })
            .collect();
        let mut outside = Vec::new();
        let mut check = |e: &BipExpr| {
            e.for_each_var(&mut |r| match r {
                BipRef::Var(v) if support.contains(v) => {}
                BipRef::Var(v) => outside.push(if self.ref_ok(r) {
                    sys.var_name(*v)
                } else {
                    "?".into()
                }),
                BipRef::At { .. } => outside.push("a location predicate".into()),
            })
        };
        check(&a.guard);
        for (_, e) in &a.transfers {
            check(e);
        }
        if !outside.is_empty() {
            self.err(
                DiagKind::PortSupport,
                a.pos,
                format!(
                    "connector `{}` reads {} outside the support of its ports",
                    a.name,
                    outside.join(", ")
                ),
            );
            return;
        }
        self.expect_bool(&a.guard, a.pos, "connector guard");
        let mut targets = HashSet::new();
        for (v, e) in &a.transfers {
            if !support.contains(v) {
                let name = if self.ref_ok(&BipRef::Var(*v)) {
                    sys.var_name(*v)
                } else {
                    "?".into()
                };
                self.err(
                    DiagKind::PortSupport,
                    a.pos,
                    format!(
                        "connector `{}` writes `{name}`, which is not exported by its ports",
                        a.name
                    ),
                );
                continue;
            }
            if !targets.insert(*v) {
                self.err(
                    DiagKind::Structure,
                    a.pos,
                    format!(
                        "`{}` written twice by connector `{}`",
                        sys.var_name(*v),
                        a.name
                    ),
                );
            }
            if let Some(ty) = self.typed(e, a.pos, "transfer") {
                if !assignable(sys.var(*v).ty, ty) {
                    self.err(
                        DiagKind::Type,
                        a.pos,
                        format!("cannot transfer {ty} to `{}`", sys.var_name(*v)),
                    );
                }
            }
        }
    }
}

/// Check every structural invariant of a system. The result is empty iff
/// the system is well formed and has no ambiguity warnings; diagnostics are
/// ordered by source position.
pub fn validate(sys: &BipSystem) -> Vec<Diagnostic> {
    let mut ck = Checker {
        sys,
        out: Vec::new(),
    };
    if sys.components.is_empty() {
        ck.err(
            DiagKind::Structure,
            Pos::default(),
            "system declares no component".into(),
        );
    }
    ck.dups(
        "component",
        sys.components.iter().map(|c| (c.name.as_str(), c.pos)),
    );
    ck.dups(
        "connector",
        sys.interactions.iter().map(|a| (a.name.as_str(), a.pos)),
    );
    for ci in 0..sys.components.len() {
        ck.component(ci);
    }
    for a in &sys.interactions {
        ck.interaction(a);
    }

    let n = sys.interactions.len();
    if sys.priority.iter().any(|&(a, b)| a >= n || b >= n) {
        ck.err(
            DiagKind::Undeclared,
            Pos::default(),
            "priority refers to an undeclared connector".into(),
        );
    } else {
        let closure = sys.priority_closure();
        if let Some(j) = (0..n).find(|&j| closure[j][j]) {
            ck.err(
                DiagKind::Priority,
                sys.interactions[j].pos,
                format!(
                    "priority not a strict partial order: `{}` is transitively below itself",
                    sys.interactions[j].name
                ),
            );
        }
    }

    if sys.init_locations.len() != sys.components.len() {
        ck.err(
            DiagKind::Init,
            Pos::default(),
            "initial places do not cover every component".into(),
        );
    } else {
        for (c, &l) in sys.components.iter().zip(&sys.init_locations) {
            if l >= c.locations.len() {
                ck.err(
                    DiagKind::Init,
                    c.pos,
                    format!("no initial place for component `{}`", c.name),
                );
            }
        }
    }
    let mut seen = HashSet::new();
    for &(v, x) in &sys.init_valuation {
        if !ck.ref_ok(&BipRef::Var(v)) {
            ck.err(
                DiagKind::Undeclared,
                Pos::default(),
                "initial value for an undeclared variable".into(),
            );
            continue;
        }
        let var = sys.var(v);
        if !seen.insert(v) {
            ck.err(
                DiagKind::Init,
                var.pos,
                format!("initial value of `{}` given twice", sys.var_name(v)),
            );
        }
        let fits = match var.ty {
            Ty::Bool => x == 0 || x == 1,
            Ty::Int(t) => t.contains(x),
        };
        if !fits {
            ck.err(
                DiagKind::Init,
                var.pos,
                format!(
                    "initial value {x} does not fit `{}` of type {}",
                    sys.var_name(v),
                    var.ty
                ),
            );
        }
    }

    for c in &sys.components {
        let mut groups: HashMap<(usize, usize), Vec<Pos>> = HashMap::new();
        for t in &c.transitions {
            groups.entry((t.port, t.src)).or_default().push(t.pos);
        }
        let mut keys: Vec<_> = groups.into_iter().filter(|(_, v)| v.len() > 1).collect();
        keys.sort_by_key(|(_, v)| v[1]);
        for ((port, src), ps) in keys {
            if port < c.ports.len() && src < c.locations.len() {
                ck.out.push(Diagnostic::warning(
                    DiagKind::Ambiguity,
                    ps[1],
                    format!(
                        "component `{}` has {} transitions on `{}` from `{}`; the first enabled one wins in the circuit, the interpreter reports an ambiguity if several are enabled",
                        c.name,
                        ps.len(),
                        c.ports[port].name,
                        c.locations[src]
                    ),
                ));
            }
        }
    }

    ck.out.sort_by_key(|d| d.pos);
    ck.out
}
