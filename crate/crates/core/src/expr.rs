//! Expression language shared by BIP models, invariants and one-loop programs.
//!
//! Integers are fixed-width two's complement (or unsigned, for location and
//! selector registers). Every binary integer operation is performed at the
//! smallest signed width that holds both operands exactly, and wraps there.
//! The bit-blaster in [`crate::aig::bitblast`] follows the same rules, which
//! is what makes interpreter and circuit agree bit for bit.

use std::fmt;

/// Largest integer width accepted anywhere in the toolchain.
pub const MAX_WIDTH: u32 = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntTy {
    pub width: u32,
    pub signed: bool,
}

impl IntTy {
    pub const fn signed(width: u32) -> Self {
        IntTy {
            width,
            signed: true,
        }
    }

    pub const fn unsigned(width: u32) -> Self {
        IntTy {
            width,
            signed: false,
        }
    }

    /// Width of the smallest signed type that represents every value of `self`.
    pub fn signed_width(self) -> u32 {
        if self.signed {
            self.width
        } else {
            self.width + 1
        }
    }

    /// Reduce `v` modulo 2^width and reinterpret it in this type.
    pub fn wrap(self, v: i64) -> i64 {
        let w = self.width;
        if w >= 64 {
            return v;
        }
        let mask = (1u64 << w) - 1;
        let low = (v as u64) & mask;
        if self.signed && (low >> (w - 1)) & 1 == 1 {
            (low | !mask) as i64
        } else {
            low as i64
        }
    }

    pub fn min_value(self) -> i64 {
        if self.signed {
            -(1i64 << (self.width - 1))
        } else {
            0
        }
    }

    pub fn max_value(self) -> i64 {
        if self.signed {
            (1i64 << (self.width - 1)) - 1
        } else {
            (1i64 << self.width) - 1
        }
    }

    pub fn contains(self, v: i64) -> bool {
        v >= self.min_value() && v <= self.max_value()
    }

    /// Type of an integer literal: the narrowest signed width holding it.
    pub fn of_literal(v: i64) -> Self {
        let mut w = 1;
        while w < 64 && !IntTy::signed(w).contains(v) {
            w += 1;
        }
        IntTy::signed(w)
    }

    /// Common operating type of a binary operation.
    pub fn join(self, other: IntTy) -> IntTy {
        IntTy::signed(self.signed_width().max(other.signed_width()))
    }
}

impl fmt::Display for IntTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.signed {
            write!(f, "int<{}>", self.width)
        } else {
            write!(f, "uint<{}>", self.width)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Bool,
    Int(IntTy),
}

impl Ty {
    pub fn bits(self) -> u32 {
        match self {
            Ty::Bool => 1,
            Ty::Int(t) => t.width,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Bool => f.write_str("bool"),
            Ty::Int(t) => t.fmt(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }

    fn associative(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or | BinOp::Add | BinOp::Mul)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<V> {
    Int(i64),
    Bool(bool),
    Var(V),
    Unary(UnOp, Box<Expr<V>>),
    Binary(BinOp, Box<Expr<V>>, Box<Expr<V>>),
    Ite(Box<Expr<V>>, Box<Expr<V>>, Box<Expr<V>>),
}

impl<V> Expr<V> {
    pub fn var(v: V) -> Self {
        Expr::Var(v)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr<V>) -> Self {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr<V>, b: Expr<V>) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn ite(c: Expr<V>, t: Expr<V>, e: Expr<V>) -> Self {
        Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn eq(a: Expr<V>, b: Expr<V>) -> Self {
        Expr::bin(BinOp::Eq, a, b)
    }

    /// Left-folded conjunction; `true` for an empty list.
    pub fn and_all(items: impl IntoIterator<Item = Expr<V>>) -> Self {
        items
            .into_iter()
            .reduce(|a, b| Expr::bin(BinOp::And, a, b))
            .unwrap_or(Expr::Bool(true))
    }

    /// Left-folded disjunction; `false` for an empty list.
    pub fn or_all(items: impl IntoIterator<Item = Expr<V>>) -> Self {
        items
            .into_iter()
            .reduce(|a, b| Expr::bin(BinOp::Or, a, b))
            .unwrap_or(Expr::Bool(false))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Expr::Bool(true))
    }

    /// Visit every variable reference, in left-to-right order.
    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => f(v),
            Expr::Unary(_, a) => a.for_each_var(f),
            Expr::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::Ite(c, t, e) => {
                c.for_each_var(f);
                t.for_each_var(f);
                e.for_each_var(f);
            }
        }
    }

    pub fn map_vars<W>(&self, f: &mut impl FnMut(&V) -> Expr<W>) -> Expr<W> {
        match self {
            Expr::Int(v) => Expr::Int(*v),
            Expr::Bool(b) => Expr::Bool(*b),
            Expr::Var(v) => f(v),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.map_vars(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            Expr::Ite(c, t, e) => Expr::Ite(
                Box::new(c.map_vars(f)),
                Box::new(t.map_vars(f)),
                Box::new(e.map_vars(f)),
            ),
        }
    }

    pub fn try_map_vars<W, E>(
        &self,
        f: &mut impl FnMut(&V) -> Result<Expr<W>, E>,
    ) -> Result<Expr<W>, E> {
        Ok(match self {
            Expr::Int(v) => Expr::Int(*v),
            Expr::Bool(b) => Expr::Bool(*b),
            Expr::Var(v) => f(v)?,
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.try_map_vars(f)?)),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.try_map_vars(f)?),
                Box::new(b.try_map_vars(f)?),
            ),
            Expr::Ite(c, t, e) => Expr::Ite(
                Box::new(c.try_map_vars(f)?),
                Box::new(t.try_map_vars(f)?),
                Box::new(e.try_map_vars(f)?),
            ),
        })
    }

    /// Render with a caller-supplied variable printer.
    pub fn display_with<'a, F>(&'a self, fmt_var: F) -> DisplayExpr<'a, V, F>
    where
        F: Fn(&V, &mut fmt::Formatter<'_>) -> fmt::Result,
    {
        DisplayExpr {
            expr: self,
            fmt_var,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("expected {expected}, found {found}")]
    Mismatch {
        expected: &'static str,
        found: String,
    },
    #[error("operands of `{op}` have incompatible types {lhs} and {rhs}")]
    Operands { op: &'static str, lhs: Ty, rhs: Ty },
    #[error("branches of `?:` have incompatible types {0} and {1}")]
    Branches(Ty, Ty),
    #[error("integer literal {0} out of range")]
    Literal(i64),
    #[error("unknown variable `{0}`")]
    Unknown(String),
}

/// Infer the type of `expr`. `lookup` returns the type of a variable, or an
/// error that is propagated unchanged.
pub fn type_of<V>(
    expr: &Expr<V>,
    lookup: &mut impl FnMut(&V) -> Result<Ty, TypeError>,
) -> Result<Ty, TypeError> {
    match expr {
        Expr::Int(v) => {
            let t = IntTy::of_literal(*v);
            if t.width > MAX_WIDTH {
                return Err(TypeError::Literal(*v));
            }
            Ok(Ty::Int(t))
        }
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::Var(v) => lookup(v),
        Expr::Unary(UnOp::Not, a) => match type_of(a, lookup)? {
            Ty::Bool => Ok(Ty::Bool),
            t => Err(TypeError::Mismatch {
                expected: "bool",
                found: t.to_string(),
            }),
        },
        Expr::Unary(UnOp::Neg, a) => match type_of(a, lookup)? {
            Ty::Int(t) => Ok(Ty::Int(IntTy::signed(t.signed_width()))),
            t => Err(TypeError::Mismatch {
                expected: "integer",
                found: t.to_string(),
            }),
        },
        Expr::Binary(op, a, b) => {
            let ta = type_of(a, lookup)?;
            let tb = type_of(b, lookup)?;
            let bad = || TypeError::Operands {
                op: op.symbol(),
                lhs: ta,
                rhs: tb,
            };
            match op {
                BinOp::And | BinOp::Or => match (ta, tb) {
                    (Ty::Bool, Ty::Bool) => Ok(Ty::Bool),
                    _ => Err(bad()),
                },
                BinOp::Add | BinOp::Sub | BinOp::Mul => match (ta, tb) {
                    (Ty::Int(x), Ty::Int(y)) => Ok(Ty::Int(x.join(y))),
                    _ => Err(bad()),
                },
                BinOp::Eq | BinOp::Ne => match (ta, tb) {
                    (Ty::Bool, Ty::Bool) | (Ty::Int(_), Ty::Int(_)) => Ok(Ty::Bool),
                    _ => Err(bad()),
                },
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => match (ta, tb) {
                    (Ty::Int(_), Ty::Int(_)) => Ok(Ty::Bool),
                    _ => Err(bad()),
                },
            }
        }
        Expr::Ite(c, t, e) => {
            match type_of(c, lookup)? {
                Ty::Bool => {}
                other => {
                    return Err(TypeError::Mismatch {
                        expected: "bool",
                        found: other.to_string(),
                    })
                }
            }
            let tt = type_of(t, lookup)?;
            let te = type_of(e, lookup)?;
            match (tt, te) {
                (Ty::Bool, Ty::Bool) => Ok(Ty::Bool),
                (Ty::Int(x), Ty::Int(y)) => Ok(Ty::Int(x.join(y))),
                _ => Err(TypeError::Branches(tt, te)),
            }
        }
    }
}

/// A runtime value together with its integer type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Val {
    Bool(bool),
    Int(i64, IntTy),
}

impl Val {
    pub fn as_bool(self) -> bool {
        match self {
            Val::Bool(b) => b,
            Val::Int(v, _) => v != 0,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            Val::Bool(b) => b as i64,
            Val::Int(v, _) => v,
        }
    }

    /// Store this value into a location of type `ty` (truncating integers).
    pub fn coerce(self, ty: Ty) -> Val {
        match ty {
            Ty::Bool => Val::Bool(self.as_bool()),
            Ty::Int(t) => Val::Int(t.wrap(self.as_int()), t),
        }
    }

    /// Raw bit pattern of the value at `bits` width, LSB first in a u64.
    pub fn to_bits(self, bits: u32) -> u64 {
        let v = self.as_int() as u64;
        if bits >= 64 {
            v
        } else {
            v & ((1u64 << bits) - 1)
        }
    }

    pub fn from_bits(bits: u64, ty: Ty) -> Val {
        match ty {
            Ty::Bool => Val::Bool(bits & 1 == 1),
            Ty::Int(t) => Val::Int(t.wrap(bits as i64), t),
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Bool(b) => write!(f, "{b}"),
            Val::Int(v, _) => write!(f, "{v}"),
        }
    }
}

/// What a variable lookup during [`eval`] must produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Need {
    /// The current value.
    Value,
    /// Only the type matters; any value of the right type will do, and the
    /// lookup must not fail on runtime conditions such as an index.
    Type,
}

/// Evaluate `expr`. `&&`, `||` and `?:` short-circuit, so an unevaluated
/// operand cannot raise an error.
pub fn eval<V, E>(
    expr: &Expr<V>,
    lookup: &mut impl FnMut(&V, Need) -> Result<Val, E>,
) -> Result<Val, E> {
    Ok(match expr {
        Expr::Int(v) => Val::Int(*v, IntTy::of_literal(*v)),
        Expr::Bool(b) => Val::Bool(*b),
        Expr::Var(v) => lookup(v, Need::Value)?,
        Expr::Unary(UnOp::Not, a) => Val::Bool(!eval(a, lookup)?.as_bool()),
        Expr::Unary(UnOp::Neg, a) => match eval(a, lookup)? {
            Val::Int(v, t) => {
                let t = IntTy::signed(t.signed_width());
                Val::Int(t.wrap(v.wrapping_neg()), t)
            }
            Val::Bool(b) => Val::Bool(b),
        },
        Expr::Binary(BinOp::And, a, b) => {
            Val::Bool(eval(a, lookup)?.as_bool() && eval(b, lookup)?.as_bool())
        }
        Expr::Binary(BinOp::Or, a, b) => {
            Val::Bool(eval(a, lookup)?.as_bool() || eval(b, lookup)?.as_bool())
        }
        Expr::Binary(op, a, b) => {
            let x = eval(a, lookup)?;
            let y = eval(b, lookup)?;
            binary(*op, x, y)
        }
        Expr::Ite(c, t, e) => {
            let (taken, other) = if eval(c, lookup)?.as_bool() {
                (t, e)
            } else {
                (e, t)
            };
            match eval(taken, lookup)? {
                Val::Int(v, ty) => {
                    // The result type spans both branches; the untaken one only
                    // contributes its static type, never its value.
                    let other_ty = static_int_ty(other, lookup)?;
                    let joined = match other_ty {
                        Some(o) => ty.join(o),
                        None => ty,
                    };
                    Val::Int(v, joined)
                }
                b => b,
            }
        }
    })
}

// Integer type of an expression, without evaluating it.
fn static_int_ty<V, E>(
    expr: &Expr<V>,
    lookup: &mut impl FnMut(&V, Need) -> Result<Val, E>,
) -> Result<Option<IntTy>, E> {
    Ok(match expr {
        Expr::Int(v) => Some(IntTy::of_literal(*v)),
        Expr::Bool(_) => None,
        Expr::Var(v) => match lookup(v, Need::Type)? {
            Val::Int(_, t) => Some(t),
            Val::Bool(_) => None,
        },
        Expr::Unary(UnOp::Not, _) => None,
        Expr::Unary(UnOp::Neg, a) => {
            static_int_ty(a, lookup)?.map(|t| IntTy::signed(t.signed_width()))
        }
        Expr::Binary(op, a, b) => match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                match (static_int_ty(a, lookup)?, static_int_ty(b, lookup)?) {
                    (Some(x), Some(y)) => Some(x.join(y)),
                    _ => None,
                }
            }
            _ => None,
        },
        Expr::Ite(_, t, e) => match (static_int_ty(t, lookup)?, static_int_ty(e, lookup)?) {
            (Some(x), Some(y)) => Some(x.join(y)),
            (x, y) => x.or(y),
        },
    })
}

/// Apply a strict (non short-circuit) binary operator to two values.
pub fn binary(op: BinOp, x: Val, y: Val) -> Val {
    match (x, y) {
        (Val::Int(a, ta), Val::Int(b, tb)) => {
            let t = ta.join(tb);
            match op {
                BinOp::Add => Val::Int(t.wrap(a.wrapping_add(b)), t),
                BinOp::Sub => Val::Int(t.wrap(a.wrapping_sub(b)), t),
                BinOp::Mul => Val::Int(t.wrap(a.wrapping_mul(b)), t),
                BinOp::Eq => Val::Bool(a == b),
                BinOp::Ne => Val::Bool(a != b),
                BinOp::Lt => Val::Bool(a < b),
                BinOp::Le => Val::Bool(a <= b),
                BinOp::Gt => Val::Bool(a > b),
                BinOp::Ge => Val::Bool(a >= b),
                BinOp::And => Val::Bool(a != 0 && b != 0),
                BinOp::Or => Val::Bool(a != 0 || b != 0),
            }
        }
        _ => {
            let (a, b) = (x.as_bool(), y.as_bool());
            Val::Bool(match op {
                BinOp::And => a && b,
                BinOp::Or => a || b,
                BinOp::Eq => a == b,
                BinOp::Ne => a != b,
                // Rejected by the type checker.
                _ => false,
            })
        }
    }
}

pub struct DisplayExpr<'a, V, F> {
    expr: &'a Expr<V>,
    fmt_var: F,
}

impl<V, F> fmt::Display for DisplayExpr<'_, V, F>
where
    F: Fn(&V, &mut fmt::Formatter<'_>) -> fmt::Result,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, &self.fmt_var, f)
    }
}

impl<V: fmt::Display> fmt::Display for Expr<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, &|v: &V, f: &mut fmt::Formatter<'_>| v.fmt(f), f)
    }
}

fn is_compound<V>(e: &Expr<V>) -> bool {
    matches!(e, Expr::Binary(..) | Expr::Ite(..))
}

// Parenthesization: a binary operand is wrapped unless it is an atom, a unary
// expression, or the left operand of the same associative operator; ternary
// chains nest without parentheses in the else position only.
fn write_expr<V>(
    e: &Expr<V>,
    fv: &dyn Fn(&V, &mut fmt::Formatter<'_>) -> fmt::Result,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    match e {
        Expr::Int(v) => write!(f, "{v}"),
        Expr::Bool(b) => write!(f, "{b}"),
        Expr::Var(v) => fv(v, f),
        Expr::Unary(op, a) => {
            f.write_str(match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            })?;
            // `-5` reparses as a literal, so a negated literal keeps its parens.
            let literal = matches!(**a, Expr::Int(_)) && *op == UnOp::Neg;
            if is_compound(a) || matches!(**a, Expr::Unary(..)) || literal {
                f.write_str("(")?;
                write_expr(a, fv, f)?;
                f.write_str(")")
            } else {
                write_expr(a, fv, f)
            }
        }
        Expr::Binary(op, a, b) => {
            let left_plain = match &**a {
                Expr::Binary(inner, ..) => inner == op && op.associative(),
                other => !is_compound(other),
            };
            write_operand(a, left_plain, fv, f)?;
            write!(f, " {} ", op.symbol())?;
            write_operand(b, !is_compound(b), fv, f)
        }
        Expr::Ite(c, t, el) => {
            write_operand(c, !is_compound(c), fv, f)?;
            f.write_str(" ? ")?;
            write_operand(t, !is_compound(t), fv, f)?;
            f.write_str(" : ")?;
            let plain = !matches!(**el, Expr::Binary(..));
            write_operand(el, plain, fv, f)
        }
    }
}

fn write_operand<V>(
    e: &Expr<V>,
    plain: bool,
    fv: &dyn Fn(&V, &mut fmt::Formatter<'_>) -> fmt::Result,
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    if plain {
        write_expr(e, fv, f)
    } else {
        f.write_str("(")?;
        write_expr(e, fv, f)?;
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(e: &Expr<&'static str>, x: Val) -> Val {
        eval::<_, ()>(e, &mut |_, _| Ok(x)).unwrap()
    }

    #[test]
    fn ternary_picks_branch() {
        let e: Expr<&str> = Expr::ite(Expr::Bool(true), Expr::Int(3), Expr::Int(7));
        assert_eq!(
            eval::<_, ()>(&e, &mut |_, _| unreachable!())
                .unwrap()
                .as_int(),
            3
        );
    }

    #[test]
    fn increment_wraps_at_declared_width() {
        for w in [1u32, 4, 8, 32] {
            let t = IntTy::signed(w);
            let all_ones = t.wrap(((1u64 << w) - 1) as i64);
            let e = Expr::bin(BinOp::Add, Expr::Var("x"), Expr::Int(1));
            let r = ev(&e, Val::Int(all_ones, t)).coerce(Ty::Int(t));
            assert_eq!(r.as_int(), 0, "width {w}");
        }
    }

    #[test]
    fn unsigned_compares_exactly_against_literals() {
        let t = IntTy::unsigned(2);
        let e = Expr::eq(Expr::Var("l"), Expr::Int(2));
        assert!(ev(&e, Val::Int(2, t)).as_bool());
        assert_eq!(t.wrap(-2), 2);
    }

    #[test]
    fn literal_widths() {
        assert_eq!(IntTy::of_literal(0).width, 1);
        assert_eq!(IntTy::of_literal(-1).width, 1);
        assert_eq!(IntTy::of_literal(1).width, 2);
        assert_eq!(IntTy::of_literal(10).width, 5);
        assert_eq!(IntTy::of_literal(-128).width, 8);
    }

    #[test]
    fn mixed_types_rejected() {
        let e: Expr<()> = Expr::bin(BinOp::And, Expr::Bool(true), Expr::Int(1));
        assert!(type_of(&e, &mut |_| unreachable!()).is_err());
        let e: Expr<()> = Expr::ite(Expr::Int(1), Expr::Int(1), Expr::Int(2));
        assert!(type_of(&e, &mut |_| unreachable!()).is_err());
    }

    #[test]
    fn printing_parenthesizes_mixed_operators() {
        let e: Expr<&str> = Expr::bin(
            BinOp::And,
            Expr::eq(Expr::Int(0), Expr::Var("l")),
            Expr::bin(BinOp::Lt, Expr::Var("t"), Expr::Var("n")),
        );
        assert_eq!(e.to_string(), "(0 == l) && (t < n)");
        let chain: Expr<&str> = Expr::or_all([Expr::Var("a"), Expr::Var("b"), Expr::Var("c")]);
        assert_eq!(chain.to_string(), "a || b || c");
        let tern: Expr<&str> = Expr::ite(
            Expr::Var("c"),
            Expr::ite(Expr::Var("d"), Expr::Int(1), Expr::Int(2)),
            Expr::ite(Expr::Var("e"), Expr::Int(3), Expr::Int(4)),
        );
        assert_eq!(tern.to_string(), "c ? (d ? 1 : 2) : e ? 3 : 4");
    }
}
