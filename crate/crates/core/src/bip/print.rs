use std::fmt::Write;

use super::*;
use crate::expr::IntTy;

fn local_expr(sys: &BipSystem, e: &BipExpr) -> String {
    e.display_with(|r, f| match r {
        BipRef::Var(v) => f.write_str(&sys.var(*v).name),
        BipRef::At { comp, loc } => write!(
            f,
            "{} @ {}",
            sys.components[*comp].name, sys.components[*comp].locations[*loc]
        ),
    })
    .to_string()
}

fn type_name(ty: Ty) -> String {
    match ty {
        Ty::Bool => "bool".into(),
        Ty::Int(IntTy { width, .. }) if width == DEFAULT_INT_WIDTH => "int".into(),
        Ty::Int(IntTy { width, .. }) => format!("int<{width}>"),
    }
}

fn actions(out: &mut String, items: &[String]) {
    if items.is_empty() {
        out.push_str(";\n");
    } else {
        out.push_str(" do {");
        for i in items {
            let _ = write!(out, " {i};");
        }
        out.push_str(" }\n");
    }
}

/// Render a system in the `.bip` syntax accepted by [`parse_system`].
pub fn print_system(sys: &BipSystem) -> String {
    let mut out = String::new();
    for c in &sys.components {
        let _ = writeln!(out, "component {} {{", c.name);
        for v in &c.variables {
            let _ = writeln!(out, "  var {} : {};", v.name, type_name(v.ty));
        }
        for p in &c.ports {
            let support: Vec<_> = p
                .support
                .iter()
                .map(|&v| c.variables[v].name.as_str())
                .collect();
            let _ = writeln!(out, "  port {}({});", p.name, support.join(", "));
        }
        if !c.locations.is_empty() {
            let _ = writeln!(out, "  place {};", c.locations.join(", "));
        }
        for t in &c.transitions {
            let _ = write!(
                out,
                "  on {} from {} to {}",
                c.ports[t.port].name, c.locations[t.src], c.locations[t.dest]
            );
            if !t.guard.is_true() {
                let _ = write!(out, " provided {}", local_expr(sys, &t.guard));
            }
            let items: Vec<String> = t
                .assignments
                .iter()
                .map(|(v, e)| format!("{} := {}", c.variables[*v].name, local_expr(sys, e)))
                .collect();
            actions(&mut out, &items);
        }
        out.push_str("}\n\n");
    }
    for a in &sys.interactions {
        let ports: Vec<String> = a
            .ports
            .iter()
            .map(|p| format!("{}.{}", sys.components[p.comp].name, sys.port(*p).name))
            .collect();
        let _ = write!(out, "connector {}({})", a.name, ports.join(", "));
        if !a.guard.is_true() {
            let _ = write!(out, " provided {}", sys.show(&a.guard));
        }
        let items: Vec<String> = a
            .transfers
            .iter()
            .map(|(v, e)| format!("{} := {}", sys.var_name(*v), sys.show(e)))
            .collect();
        actions(&mut out, &items);
    }
    if !sys.priority.is_empty() {
        out.push('\n');
    }
    for &(lo, hi) in &sys.priority {
        let _ = writeln!(
            out,
            "priority {} < {};",
            sys.interactions[lo].name, sys.interactions[hi].name
        );
    }
    out.push_str("\ninit {\n");
    for (c, &l) in sys.components.iter().zip(&sys.init_locations) {
        if let Some(name) = c.locations.get(l) {
            let _ = writeln!(out, "  {} at {};", c.name, name);
        }
    }
    for &(v, x) in &sys.init_valuation {
        let value = match sys.var(v).ty {
            Ty::Bool => (x != 0).to_string(),
            Ty::Int(_) => x.to_string(),
        };
        let _ = writeln!(out, "  {} := {};", sys.var_name(v), value);
    }
    out.push_str("}\n");
    out
}
