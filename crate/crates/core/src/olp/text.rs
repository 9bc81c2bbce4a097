use std::fmt::Write;

use super::{Assign, Decl, DeclKind, OlpError, OlpExpr, OlpProgram, Term};
use crate::expr::{Expr, IntTy, Ty, MAX_WIDTH};
use crate::syntax::{Cursor, SyntaxError};

fn type_name(ty: Ty) -> String {
    match ty {
        Ty::Bool => "bool".into(),
        Ty::Int(IntTy {
            width,
            signed: true,
        }) => format!("int<{width}>"),
        Ty::Int(IntTy {
            width,
            signed: false,
        }) => format!("uint<{width}>"),
    }
}

fn assigns(out: &mut String, items: &[Assign], indent: &str) {
    for a in items {
        let _ = writeln!(out, "{indent}{a}");
    }
}

/// Render a program in the one-loop concrete syntax.
pub fn print_program(p: &OlpProgram) -> String {
    let mut out = String::from("/*** decl-list ***/\n");
    for d in p.decls() {
        if d.kind == DeclKind::Wire {
            out.push_str("wire ");
        }
        let _ = write!(out, "{} {}", type_name(d.ty), d.name);
        if let Some(n) = d.len {
            let _ = write!(out, "[{n}]");
        }
        out.push_str(";\n");
    }
    out.push_str("\n/*** wiredef-list ***/\n");
    assigns(&mut out, p.wiredefs(), "");
    out.push_str("\ndo-together {\n  /*** init-list ***/\n");
    assigns(&mut out, p.inits(), "  ");
    out.push_str("}\n\nwhile (true) {\n  do-together {\n    /*** next-list ***/\n");
    assigns(&mut out, p.nexts(), "    ");
    out.push_str("  }\n}\n");
    out
}

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Invalid(#[from] OlpError),
}

fn dotted(c: &mut Cursor) -> Result<String, SyntaxError> {
    let mut name = c.expect_ident()?;
    while c.accept_punct(".") {
        name.push('.');
        name += &c.expect_ident()?;
    }
    Ok(name)
}

fn term(c: &mut Cursor) -> Result<Term, SyntaxError> {
    let name = dotted(c)?;
    let index = if c.accept_punct("[") {
        let e = expr(c)?;
        c.expect_punct("]")?;
        Some(Box::new(e))
    } else {
        None
    };
    Ok(Term { name, index })
}

fn expr(c: &mut Cursor) -> Result<OlpExpr, SyntaxError> {
    c.expr(&mut |c| term(c).map(Expr::Var))
}

fn width(c: &mut Cursor) -> Result<u32, SyntaxError> {
    if !c.accept_punct("<") {
        return Ok(32);
    }
    let pos = c.pos();
    let w = c.expect_num()?;
    c.expect_punct(">")?;
    if w < 1 || w > MAX_WIDTH as i64 {
        return Err(SyntaxError {
            pos,
            message: format!("integer width must be between 1 and {MAX_WIDTH}"),
        });
    }
    Ok(w as u32)
}

fn is_type_start(c: &Cursor) -> bool {
    c.is_keyword("wire") || c.is_keyword("bool") || c.is_keyword("int") || c.is_keyword("uint")
}

fn decl(c: &mut Cursor) -> Result<Decl, SyntaxError> {
    let kind = if c.accept_keyword("wire") {
        DeclKind::Wire
    } else {
        DeclKind::Register
    };
    let ty = if c.accept_keyword("bool") {
        Ty::Bool
    } else if c.accept_keyword("uint") {
        Ty::Int(IntTy::unsigned(width(c)?))
    } else {
        c.expect_keyword("int")?;
        Ty::Int(IntTy::signed(width(c)?))
    };
    let name = dotted(c)?;
    let len = if c.accept_punct("[") {
        let pos = c.pos();
        let n = c.expect_num()?;
        c.expect_punct("]")?;
        if n < 1 {
            return Err(SyntaxError {
                pos,
                message: "array length must be positive".into(),
            });
        }
        Some(n as usize)
    } else {
        None
    };
    c.expect_punct(";")?;
    Ok(Decl {
        name,
        ty,
        len,
        kind,
    })
}

fn assignment(c: &mut Cursor) -> Result<Assign, SyntaxError> {
    let target = term(c)?;
    c.expect_punct("=")?;
    let e = expr(c)?;
    c.expect_punct(";")?;
    Ok(Assign::new(target, e))
}

fn do_together(c: &mut Cursor) -> Result<(), SyntaxError> {
    c.expect_keyword("do")?;
    c.expect_punct("-")?;
    c.expect_keyword("together")?;
    c.expect_punct("{")
}

fn block(c: &mut Cursor) -> Result<Vec<Assign>, SyntaxError> {
    let mut out = Vec::new();
    while !c.is_punct("}") {
        out.push(assignment(c)?);
    }
    c.expect_punct("}")?;
    Ok(out)
}

/// Parse the concrete syntax produced by [`print_program`] and validate the
/// result.
pub fn parse_program(src: &str) -> Result<OlpProgram, ParseError> {
    let mut c = Cursor::new(src)?;
    let mut decls = Vec::new();
    while is_type_start(&c) {
        decls.push(decl(&mut c)?);
    }
    let mut wiredefs = Vec::new();
    while !c.is_keyword("do") && !c.at_eof() {
        wiredefs.push(assignment(&mut c)?);
    }
    do_together(&mut c)?;
    let inits = block(&mut c)?;
    c.expect_keyword("while")?;
    c.expect_punct("(")?;
    c.expect_keyword("true")?;
    c.expect_punct(")")?;
    c.expect_punct("{")?;
    do_together(&mut c)?;
    let nexts = block(&mut c)?;
    c.expect_punct("}")?;
    if !c.at_eof() {
        return Err(c
            .error::<()>(format!("unexpected {}", c.peek()))
            .unwrap_err()
            .into());
    }
    Ok(OlpProgram::new(decls, wiredefs, inits, nexts)?)
}
