use std::collections::HashMap;

use super::*;
use crate::expr::{type_of, Expr, IntTy, Ty, MAX_WIDTH};
use crate::syntax::{Cursor, SyntaxError, Tok};

#[derive(Clone, Debug)]
struct RawRef {
    parts: Vec<String>,
    at: Option<String>,
    pos: Pos,
}

type RawExpr = Expr<RawRef>;

struct RawComponent {
    name: String,
    pos: Pos,
    vars: Vec<(String, Ty, Pos)>,
    ports: Vec<(String, Vec<String>, Pos)>,
    places: Vec<(String, Pos)>,
    transitions: Vec<RawTransition>,
}

struct RawTransition {
    port: String,
    src: String,
    dest: String,
    guard: RawExpr,
    assigns: Vec<(String, RawExpr, Pos)>,
    pos: Pos,
}

struct RawConnector {
    name: String,
    pos: Pos,
    ports: Vec<(String, String, Pos)>,
    guard: RawExpr,
    transfers: Vec<(RawRef, RawExpr)>,
}

#[derive(Default)]
struct RawSystem {
    components: Vec<RawComponent>,
    connectors: Vec<RawConnector>,
    priority: Vec<(String, String, Pos)>,
    init_locs: Vec<(String, String, Pos)>,
    init_vals: Vec<(RawRef, i64, Pos)>,
}

fn atom(c: &mut Cursor) -> Result<RawExpr, SyntaxError> {
    let pos = c.pos();
    let first = c.expect_ident()?;
    if c.accept_punct("@") {
        let loc = c.expect_ident()?;
        return Ok(Expr::Var(RawRef {
            parts: vec![first],
            at: Some(loc),
            pos,
        }));
    }
    let mut parts = vec![first];
    while c.is_punct(".") {
        c.bump();
        parts.push(c.expect_ident()?);
    }
    Ok(Expr::Var(RawRef {
        parts,
        at: None,
        pos,
    }))
}

fn raw_ref(c: &mut Cursor) -> Result<RawRef, SyntaxError> {
    match atom(c)? {
        Expr::Var(r) if r.at.is_none() => Ok(r),
        _ => c.error("expected a variable reference"),
    }
}

fn parse_type(c: &mut Cursor) -> Result<Ty, SyntaxError> {
    if c.accept_keyword("bool") {
        return Ok(Ty::Bool);
    }
    c.expect_keyword("int")?;
    if c.accept_punct("<") {
        let pos = c.pos();
        let w = c.expect_num()?;
        c.expect_punct(">")?;
        if w < 1 || w > MAX_WIDTH as i64 {
            return Err(SyntaxError {
                pos,
                message: format!("integer width must be between 1 and {MAX_WIDTH}"),
            });
        }
        Ok(Ty::Int(IntTy::signed(w as u32)))
    } else {
        Ok(Ty::Int(IntTy::signed(DEFAULT_INT_WIDTH)))
    }
}

// `do { x := e; ... }`, or nothing followed by `;`.
fn parse_actions<T>(
    c: &mut Cursor,
    target: &mut dyn FnMut(&mut Cursor) -> Result<T, SyntaxError>,
) -> Result<Vec<(T, RawExpr, Pos)>, SyntaxError> {
    let mut out = Vec::new();
    if c.accept_keyword("do") {
        c.expect_punct("{")?;
        while !c.accept_punct("}") {
            let pos = c.pos();
            let t = target(c)?;
            c.expect_punct(":=")?;
            let e = c.expr(&mut atom)?;
            c.expect_punct(";")?;
            out.push((t, e, pos));
        }
    } else {
        c.expect_punct(";")?;
    }
    Ok(out)
}

fn parse_component(c: &mut Cursor) -> Result<RawComponent, SyntaxError> {
    let pos = c.pos();
    c.expect_keyword("component")?;
    let name = c.expect_ident()?;
    c.expect_punct("{")?;
    let mut comp = RawComponent {
        name,
        pos,
        vars: vec![],
        ports: vec![],
        places: vec![],
        transitions: vec![],
    };
    while !c.accept_punct("}") {
        let pos = c.pos();
        if c.accept_keyword("var") {
            let name = c.expect_ident()?;
            c.expect_punct(":")?;
            let ty = parse_type(c)?;
            c.expect_punct(";")?;
            comp.vars.push((name, ty, pos));
        } else if c.accept_keyword("port") {
            let name = c.expect_ident()?;
            c.expect_punct("(")?;
            let mut support = Vec::new();
            if !c.accept_punct(")") {
                loop {
                    support.push(c.expect_ident()?);
                    if c.accept_punct(")") {
                        break;
                    }
                    c.expect_punct(",")?;
                }
            }
            c.expect_punct(";")?;
            comp.ports.push((name, support, pos));
        } else if c.accept_keyword("place") {
            loop {
                let pos = c.pos();
                comp.places.push((c.expect_ident()?, pos));
                if c.accept_punct(";") {
                    break;
                }
                c.expect_punct(",")?;
            }
        } else if c.accept_keyword("on") {
            let port = c.expect_ident()?;
            c.expect_keyword("from")?;
            let src = c.expect_ident()?;
            c.expect_keyword("to")?;
            let dest = c.expect_ident()?;
            let guard = if c.accept_keyword("provided") {
                c.expr(&mut atom)?
            } else {
                Expr::Bool(true)
            };
            let assigns = parse_actions(c, &mut |c| c.expect_ident())?;
            comp.transitions.push(RawTransition {
                port,
                src,
                dest,
                guard,
                assigns,
                pos,
            });
        } else {
            return c.error(format!(
                "expected `var`, `port`, `place`, `on` or `}}`, found {}",
                c.peek()
            ));
        }
    }
    Ok(comp)
}

fn parse_raw(src: &str) -> Result<RawSystem, SyntaxError> {
    let mut c = Cursor::new(src)?;
    let mut sys = RawSystem::default();
    while !c.at_eof() {
        let pos = c.pos();
        if c.is_keyword("component") {
            sys.components.push(parse_component(&mut c)?);
        } else if c.accept_keyword("connector") {
            let name = c.expect_ident()?;
            c.expect_punct("(")?;
            let mut ports = Vec::new();
            loop {
                let pos = c.pos();
                let comp = c.expect_ident()?;
                c.expect_punct(".")?;
                ports.push((comp, c.expect_ident()?, pos));
                if c.accept_punct(")") {
                    break;
                }
                c.expect_punct(",")?;
            }
            let guard = if c.accept_keyword("provided") {
                c.expr(&mut atom)?
            } else {
                Expr::Bool(true)
            };
            let transfers = parse_actions(&mut c, &mut raw_ref)?
                .into_iter()
                .map(|(t, e, _)| (t, e))
                .collect();
            sys.connectors.push(RawConnector {
                name,
                pos,
                ports,
                guard,
                transfers,
            });
        } else if c.accept_keyword("priority") {
            let lo = c.expect_ident()?;
            c.expect_punct("<")?;
            let hi = c.expect_ident()?;
            c.expect_punct(";")?;
            sys.priority.push((lo, hi, pos));
        } else if c.accept_keyword("init") {
            c.expect_punct("{")?;
            while !c.accept_punct("}") {
                let pos = c.pos();
                if matches!(c.peek_at(1), Tok::Ident(s) if s == "at") {
                    let comp = c.expect_ident()?;
                    c.expect_keyword("at")?;
                    let loc = c.expect_ident()?;
                    c.expect_punct(";")?;
                    sys.init_locs.push((comp, loc, pos));
                } else {
                    let target = raw_ref(&mut c)?;
                    c.expect_punct(":=")?;
                    let value = if c.accept_keyword("true") {
                        1
                    } else if c.accept_keyword("false") {
                        0
                    } else {
                        c.expect_int()?
                    };
                    c.expect_punct(";")?;
                    sys.init_vals.push((target, value, pos));
                }
            }
        } else {
            return c.error(format!(
                "expected `component`, `connector`, `priority` or `init`, found {}",
                c.peek()
            ));
        }
    }
    Ok(sys)
}

struct Resolver<'a> {
    comps: &'a [AtomicComponent],
    diags: Vec<Diagnostic>,
}

impl Resolver<'_> {
    fn undeclared(&mut self, pos: Pos, what: String) {
        self.diags
            .push(Diagnostic::error(DiagKind::Undeclared, pos, what));
    }

    fn comp(&mut self, name: &str, pos: Pos) -> Option<usize> {
        let i = self.comps.iter().position(|c| c.name == name);
        if i.is_none() {
            self.undeclared(pos, format!("undeclared component `{name}`"));
        }
        i
    }

    fn qualified_var(&mut self, comp: &str, var: &str, pos: Pos) -> Option<VarId> {
        let ci = self.comp(comp, pos)?;
        match self.comps[ci].var_index(var) {
            Some(v) => Some(VarId { comp: ci, var: v }),
            None => {
                self.undeclared(pos, format!("undeclared variable `{comp}.{var}`"));
                None
            }
        }
    }

    /// Resolve a reference; `local` is the component whose variables may be
    /// named without qualification.
    fn reference(&mut self, r: &RawRef, local: Option<usize>) -> Option<BipRef> {
        if let Some(loc) = &r.at {
            let ci = self.comp(&r.parts[0], r.pos)?;
            return match self.comps[ci].loc_index(loc) {
                Some(l) => Some(BipRef::At { comp: ci, loc: l }),
                None => {
                    self.undeclared(
                        r.pos,
                        format!("undeclared location `{loc}` in component `{}`", r.parts[0]),
                    );
                    None
                }
            };
        }
        match (r.parts.as_slice(), local) {
            ([name], Some(ci)) => match self.comps[ci].var_index(name) {
                Some(v) => Some(BipRef::Var(VarId { comp: ci, var: v })),
                None => {
                    self.undeclared(
                        r.pos,
                        format!(
                            "undeclared variable `{name}` in component `{}`",
                            self.comps[ci].name
                        ),
                    );
                    None
                }
            },
            ([name], None) => {
                self.undeclared(
                    r.pos,
                    format!("unqualified variable `{name}`; write `component.{name}`"),
                );
                None
            }
            ([comp, var], _) => self.qualified_var(comp, var, r.pos).map(BipRef::Var),
            _ => {
                self.undeclared(
                    r.pos,
                    format!("malformed reference `{}`", r.parts.join(".")),
                );
                None
            }
        }
    }

    fn expr(&mut self, e: &RawExpr, local: Option<usize>) -> Option<BipExpr> {
        let mut ok = true;
        let out = e.map_vars(&mut |r| match self.reference(r, local) {
            Some(b) => Expr::Var(b),
            None => {
                ok = false;
                Expr::Bool(false)
            }
        });
        ok.then_some(out)
    }
}

fn dup_check<'a>(
    diags: &mut Vec<Diagnostic>,
    what: &str,
    items: impl Iterator<Item = (&'a str, Pos)>,
) {
    let mut seen: HashMap<&str, Pos> = HashMap::new();
    for (name, pos) in items {
        if let Some(first) = seen.get(name) {
            diags.push(Diagnostic::error(
                DiagKind::DuplicateName,
                pos,
                format!("duplicate {what} `{name}` (first declared at {first})"),
            ));
        } else {
            seen.insert(name, pos);
        }
    }
}

fn resolve(raw: RawSystem) -> Result<BipSystem, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    dup_check(
        &mut diags,
        "component",
        raw.components.iter().map(|c| (c.name.as_str(), c.pos)),
    );
    dup_check(
        &mut diags,
        "connector",
        raw.connectors.iter().map(|c| (c.name.as_str(), c.pos)),
    );

    // Declarations first, so expressions can refer to any component.
    let mut comps: Vec<AtomicComponent> = raw
        .components
        .iter()
        .map(|rc| {
            dup_check(
                &mut diags,
                "variable",
                rc.vars.iter().map(|v| (v.0.as_str(), v.2)),
            );
            dup_check(
                &mut diags,
                "port",
                rc.ports.iter().map(|p| (p.0.as_str(), p.2)),
            );
            dup_check(
                &mut diags,
                "place",
                rc.places.iter().map(|p| (p.0.as_str(), p.1)),
            );
            AtomicComponent {
                name: rc.name.clone(),
                variables: rc
                    .vars
                    .iter()
                    .map(|(n, t, p)| Variable {
                        name: n.clone(),
                        ty: *t,
                        pos: *p,
                    })
                    .collect(),
                ports: Vec::new(),
                locations: rc.places.iter().map(|p| p.0.clone()).collect(),
                transitions: Vec::new(),
                pos: rc.pos,
            }
        })
        .collect();

    for (ci, rc) in raw.components.iter().enumerate() {
        for (name, support, pos) in &rc.ports {
            let mut ids = Vec::new();
            for s in support {
                match comps[ci].var_index(s) {
                    Some(v) => ids.push(v),
                    None => diags.push(Diagnostic::error(
                        DiagKind::PortSupport,
                        *pos,
                        format!("port `{name}` exports undeclared variable `{s}`"),
                    )),
                }
            }
            comps[ci].ports.push(Port {
                name: name.clone(),
                support: ids,
                pos: *pos,
            });
        }
    }

    let mut transitions: Vec<Vec<Transition>> = Vec::new();
    {
        let mut r = Resolver {
            comps: &comps,
            diags: Vec::new(),
        };
        for (ci, rc) in raw.components.iter().enumerate() {
            let mut ts = Vec::new();
            for t in &rc.transitions {
                let c = &comps[ci];
                let port = c.port_index(&t.port);
                if port.is_none() {
                    r.undeclared(
                        t.pos,
                        format!("undeclared port `{}` in component `{}`", t.port, c.name),
                    );
                }
                let src = c.loc_index(&t.src);
                let dest = c.loc_index(&t.dest);
                for (l, found) in [(&t.src, src), (&t.dest, dest)] {
                    if found.is_none() {
                        r.undeclared(
                            t.pos,
                            format!("undeclared place `{l}` in component `{}`", c.name),
                        );
                    }
                }
                let guard = r.expr(&t.guard, Some(ci));
                let mut assignments = Vec::new();
                let mut ok = true;
                for (target, e, pos) in &t.assigns {
                    let tv = comps[ci].var_index(target);
                    if tv.is_none() {
                        r.undeclared(
                            *pos,
                            format!(
                                "undeclared variable `{target}` in component `{}`",
                                comps[ci].name
                            ),
                        );
                    }
                    match (tv, r.expr(e, Some(ci))) {
                        (Some(v), Some(e)) => assignments.push((v, e)),
                        _ => ok = false,
                    }
                }
                if let (Some(port), Some(src), Some(dest), Some(guard), true) =
                    (port, src, dest, guard, ok)
                {
                    ts.push(Transition {
                        src,
                        port,
                        guard,
                        assignments,
                        dest,
                        pos: t.pos,
                    });
                }
            }
            transitions.push(ts);
        }
        diags.append(&mut r.diags);
    }
    for (c, ts) in comps.iter_mut().zip(transitions) {
        c.transitions = ts;
    }

    let mut r = Resolver {
        comps: &comps,
        diags: Vec::new(),
    };
    let mut interactions = Vec::new();
    for rc in &raw.connectors {
        let mut ports = Vec::new();
        for (cn, pn, pos) in &rc.ports {
            if let Some(ci) = r.comp(cn, *pos) {
                match comps[ci].port_index(pn) {
                    Some(p) => ports.push(PortId { comp: ci, port: p }),
                    None => r.undeclared(*pos, format!("undeclared port `{cn}.{pn}`")),
                }
            }
        }
        let guard = r.expr(&rc.guard, None);
        let mut transfers = Vec::new();
        for (target, e) in &rc.transfers {
            let t = match target.parts.as_slice() {
                [c, v] => r.qualified_var(c, v, target.pos),
                _ => {
                    r.undeclared(
                        target.pos,
                        "transfer target must be `component.variable`".into(),
                    );
                    None
                }
            };
            if let (Some(t), Some(e)) = (t, r.expr(e, None)) {
                transfers.push((t, e));
            }
        }
        interactions.push(Interaction {
            name: rc.name.clone(),
            ports,
            guard: guard.unwrap_or(Expr::Bool(true)),
            transfers,
            pos: rc.pos,
        });
    }

    let mut priority = Vec::new();
    for (lo, hi, pos) in &raw.priority {
        let find = |n: &str| raw.connectors.iter().position(|c| c.name == n);
        match (find(lo), find(hi)) {
            (Some(a), Some(b)) => priority.push((a, b)),
            (a, _) => {
                let missing = if a.is_none() { lo } else { hi };
                r.undeclared(
                    *pos,
                    format!("undeclared connector `{missing}` in priority"),
                );
            }
        }
    }

    let mut init_locations = vec![usize::MAX; comps.len()];
    for (cn, ln, pos) in &raw.init_locs {
        if let Some(ci) = r.comp(cn, *pos) {
            match comps[ci].loc_index(ln) {
                Some(l) => {
                    if init_locations[ci] != usize::MAX {
                        r.diags.push(Diagnostic::error(
                            DiagKind::Init,
                            *pos,
                            format!("initial place of `{cn}` given twice"),
                        ));
                    }
                    init_locations[ci] = l;
                }
                None => r.undeclared(*pos, format!("undeclared place `{ln}` in component `{cn}`")),
            }
        }
    }
    let mut init_valuation = Vec::new();
    for (target, value, pos) in &raw.init_vals {
        if let [c, v] = target.parts.as_slice() {
            if let Some(id) = r.qualified_var(c, v, *pos) {
                init_valuation.push((id, *value));
            }
        } else {
            r.undeclared(
                *pos,
                "initial value target must be `component.variable`".into(),
            );
        }
    }
    diags.append(&mut r.diags);

    if diags.iter().any(|d| d.is_error()) {
        diags.sort_by_key(|d| d.pos);
        return Err(diags);
    }
    Ok(BipSystem {
        components: comps,
        interactions,
        priority,
        init_locations,
        init_valuation,
    })
}

/// Parse and validate a `.bip` source. On success the system satisfies
/// every structural invariant; warnings are dropped (call [`validate`] to
/// see them).
pub fn parse_system(text: &str) -> Result<BipSystem, Diagnostics> {
    let raw = parse_raw(text)
        .map_err(|e| Diagnostics(vec![Diagnostic::error(DiagKind::Syntax, e.pos, e.message)]))?;
    let sys = resolve(raw).map_err(Diagnostics)?;
    let errors: Vec<_> = validate(&sys)
        .into_iter()
        .filter(|d| d.is_error())
        .collect();
    if errors.is_empty() {
        Ok(sys)
    } else {
        Err(Diagnostics(errors))
    }
}

/// A named safety property over locations and variables of a system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariant {
    pub name: String,
    pub expr: BipExpr,
    pub line: u32,
}

/// Parse an invariant sidecar file: one boolean expression per line,
/// optionally prefixed by `name:`. `C @ loc` tests a location, `a -> b` is
/// implication, `#` starts a comment.
pub fn parse_invariants(system: &BipSystem, text: &str) -> Result<Vec<Invariant>, Diagnostics> {
    let mut out: Vec<Invariant> = Vec::new();
    let mut diags = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx as u32 + 1;
        let shift = |mut p: Pos| {
            p.line = lineno;
            p
        };
        let mut c = match Cursor::new(line) {
            Ok(c) => c,
            Err(e) => {
                diags.push(Diagnostic::error(DiagKind::Syntax, shift(e.pos), e.message));
                continue;
            }
        };
        if c.at_eof() {
            continue;
        }
        c.implication = true;
        let name = if matches!(c.peek(), Tok::Ident(_)) && matches!(c.peek_at(1), Tok::Punct(":")) {
            let n = c.expect_ident().unwrap();
            c.bump();
            n
        } else {
            format!("inv{}", out.len())
        };
        let parsed = c.expr(&mut atom).and_then(|e| {
            if c.at_eof() {
                Ok(e)
            } else {
                c.error(format!("unexpected {} after invariant", c.peek()))
            }
        });
        let raw = match parsed {
            Ok(e) => e,
            Err(e) => {
                diags.push(Diagnostic::error(DiagKind::Syntax, shift(e.pos), e.message));
                continue;
            }
        };
        let mut r = Resolver {
            comps: &system.components,
            diags: Vec::new(),
        };
        let resolved = r.expr(&raw, None);
        diags.extend(r.diags.into_iter().map(|mut d| {
            d.pos = shift(d.pos);
            d
        }));
        let Some(expr) = resolved else { continue };
        match type_of(&expr, &mut |r| Ok(ref_type(system, r))) {
            Ok(Ty::Bool) => {}
            Ok(t) => diags.push(Diagnostic::error(
                DiagKind::Type,
                Pos {
                    line: lineno,
                    col: 1,
                },
                format!("invariant `{name}` has type {t}, expected bool"),
            )),
            Err(e) => diags.push(Diagnostic::error(
                DiagKind::Type,
                Pos {
                    line: lineno,
                    col: 1,
                },
                format!("invariant `{name}`: {e}"),
            )),
        }
        if out.iter().any(|i| i.name == name) {
            diags.push(Diagnostic::error(
                DiagKind::DuplicateName,
                Pos {
                    line: lineno,
                    col: 1,
                },
                format!("duplicate invariant name `{name}`"),
            ));
        }
        out.push(Invariant {
            name,
            expr,
            line: lineno,
        });
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(Diagnostics(diags))
    }
}

pub(crate) fn ref_type(system: &BipSystem, r: &BipRef) -> Ty {
    match r {
        BipRef::Var(v) => system.var(*v).ty,
        BipRef::At { .. } => Ty::Bool,
    }
}
