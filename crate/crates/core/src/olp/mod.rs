//! One-loop programs: typed declarations, combinational wire definitions,
//! and two simultaneous assignment lists (`init` once, `next` forever).

mod sim;
mod text;

use std::collections::HashMap;
use std::fmt;

pub use sim::{
    olp_eval_wires, olp_init, olp_step, simulate, EvalError, ExplicitInputs, InputSource,
    SeededInputs, SimTrace, Valuation,
};
pub use text::{parse_program, print_program, ParseError};

use crate::expr::{type_of, Expr, IntTy, Ty, TypeError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeclKind {
    Register,
    Wire,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decl {
    pub name: String,
    /// Element type.
    pub ty: Ty,
    /// `Some(n)` for an array of `n` elements.
    pub len: Option<usize>,
    pub kind: DeclKind,
}

impl Decl {
    pub fn register(name: impl Into<String>, ty: Ty) -> Self {
        Decl {
            name: name.into(),
            ty,
            len: None,
            kind: DeclKind::Register,
        }
    }

    pub fn wire(name: impl Into<String>, ty: Ty) -> Self {
        Decl {
            name: name.into(),
            ty,
            len: None,
            kind: DeclKind::Wire,
        }
    }

    pub fn wire_array(name: impl Into<String>, ty: Ty, len: usize) -> Self {
        Decl {
            name: name.into(),
            ty,
            len: Some(len),
            kind: DeclKind::Wire,
        }
    }

    pub fn elements(&self) -> usize {
        self.len.unwrap_or(1)
    }
}

/// `id` or `id[expr]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub name: String,
    pub index: Option<Box<OlpExpr>>,
}

impl Term {
    pub fn scalar(name: impl Into<String>) -> Self {
        Term {
            name: name.into(),
            index: None,
        }
    }

    pub fn element(name: impl Into<String>, k: usize) -> Self {
        Term {
            name: name.into(),
            index: Some(Box::new(Expr::Int(k as i64))),
        }
    }

    pub fn dynamic(name: impl Into<String>, index: OlpExpr) -> Self {
        Term {
            name: name.into(),
            index: Some(Box::new(index)),
        }
    }

    fn constant_index(&self) -> Option<Option<i64>> {
        match self.index.as_deref() {
            None => Some(None),
            Some(Expr::Int(k)) => Some(Some(*k)),
            Some(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            None => f.write_str(&self.name),
            Some(i) => write!(f, "{}[{}]", self.name, i),
        }
    }
}

pub type OlpExpr = Expr<Term>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assign {
    pub target: Term,
    pub expr: OlpExpr,
}

impl Assign {
    pub fn new(target: Term, expr: OlpExpr) -> Self {
        Assign { target, expr }
    }
}

impl fmt::Display for Assign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {};", self.target, self.expr)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OlpError {
    #[error("duplicate declaration `{0}`")]
    DuplicateDecl(String),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("`{0}`: arrays must be indexed and scalars must not be")]
    Indexing(String),
    #[error("assignment target `{0}` must use a constant index")]
    DynamicTarget(String),
    #[error("index {index} out of bounds for `{name}`")]
    IndexOutOfBounds { name: String, index: i64 },
    #[error("wire `{0}` is assigned more than once")]
    WireReassigned(String),
    #[error("`{0}` is a register and cannot be defined in the wire list")]
    NotAWire(String),
    #[error("`{0}` is a wire and cannot be assigned in the init or next list")]
    NotARegister(String),
    #[error("register `{0}` has no init assignment")]
    UninitializedRegister(String),
    #[error("register `{0}` has no next assignment")]
    MissingNext(String),
    #[error("register `{0}` is assigned more than once in the {1} list")]
    RegisterReassigned(String, &'static str),
    #[error("combinational cycle through wire `{0}`")]
    CombinationalCycle(String),
    #[error("init value of `{0}` depends on a register")]
    InitReadsRegister(String),
    #[error("type error in assignment to `{target}`: {error}")]
    Type { target: String, error: TypeError },
}

/// Storage for one scalar element of a declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub decl: usize,
    pub element: Option<usize>,
    pub ty: Ty,
    pub role: SlotRole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotRole {
    Register,
    /// A wire without definition: a free primary input.
    Input,
    /// A wire defined by a wiredef.
    Defined,
}

/// A compiled variable reference: a fixed slot, or an array element chosen
/// at run time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SlotRef {
    Fixed(usize),
    Dynamic {
        decl: usize,
        base: usize,
        len: usize,
        index: Box<Expr<SlotRef>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Compiled {
    pub(crate) slots: Vec<Slot>,
    pub(crate) decl_base: Vec<usize>,
    /// Wiredefs as (slot, expr), in a topological order.
    pub(crate) wires: Vec<(usize, Expr<SlotRef>)>,
    pub(crate) inits: Vec<(usize, Expr<SlotRef>)>,
    pub(crate) nexts: Vec<(usize, Expr<SlotRef>)>,
    pub(crate) inputs: Vec<usize>,
    pub(crate) registers: Vec<usize>,
    pub(crate) init_reads_inputs: bool,
}

/// A validated one-loop program. Construction checks single assignment of
/// wires, complete init/next coverage of registers, typing, and absence of
/// combinational cycles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OlpProgram {
    decls: Vec<Decl>,
    wiredefs: Vec<Assign>,
    inits: Vec<Assign>,
    nexts: Vec<Assign>,
    compiled: Compiled,
}

impl OlpProgram {
    pub fn new(
        decls: Vec<Decl>,
        wiredefs: Vec<Assign>,
        inits: Vec<Assign>,
        nexts: Vec<Assign>,
    ) -> Result<Self, OlpError> {
        let compiled = compile(&decls, &wiredefs, &inits, &nexts)?;
        Ok(OlpProgram {
            decls,
            wiredefs,
            inits,
            nexts,
            compiled,
        })
    }

    pub fn decls(&self) -> &[Decl] {
        &self.decls
    }

    pub fn wiredefs(&self) -> &[Assign] {
        &self.wiredefs
    }

    pub fn inits(&self) -> &[Assign] {
        &self.inits
    }

    pub fn nexts(&self) -> &[Assign] {
        &self.nexts
    }

    pub fn decl_index(&self, name: &str) -> Option<usize> {
        self.decls.iter().position(|d| d.name == name)
    }

    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn slots(&self) -> &[Slot] {
        &self.compiled.slots
    }

    /// Slot of `name` (element `k` for arrays).
    pub fn slot(&self, name: &str, element: Option<usize>) -> Option<usize> {
        let d = self.decl_index(name)?;
        let decl = &self.decls[d];
        match (decl.len, element) {
            (None, None) => Some(self.compiled.decl_base[d]),
            (Some(n), Some(k)) if k < n => Some(self.compiled.decl_base[d] + k),
            _ => None,
        }
    }

    /// Human-readable name of a slot: `x` or `x[k]`.
    pub fn slot_name(&self, slot: usize) -> String {
        let s = &self.compiled.slots[slot];
        match s.element {
            None => self.decls[s.decl].name.clone(),
            Some(k) => format!("{}[{k}]", self.decls[s.decl].name),
        }
    }

    /// Slots of free primary inputs, in declaration order.
    pub fn inputs(&self) -> &[usize] {
        &self.compiled.inputs
    }

    pub fn registers(&self) -> &[usize] {
        &self.compiled.registers
    }

    pub fn init_reads_inputs(&self) -> bool {
        self.compiled.init_reads_inputs
    }

    pub(crate) fn compiled(&self) -> &Compiled {
        &self.compiled
    }

    /// Resolve the names of an expression against this program.
    pub fn compile_expr(&self, e: &OlpExpr) -> Result<Expr<SlotRef>, OlpError> {
        self.ctx().expr(e)
    }

    /// Type of an expression over this program's declarations.
    pub fn type_of(&self, e: &OlpExpr) -> Result<Ty, TypeError> {
        self.ctx().term_types(e)
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            decls: &self.decls,
            by_name: self
                .decls
                .iter()
                .enumerate()
                .map(|(i, d)| (d.name.as_str(), i))
                .collect(),
            base: self.compiled.decl_base.clone(),
        }
    }

    /// The same program with its next list reordered by `perm`.
    pub fn with_next_order(&self, perm: &[usize]) -> Result<Self, OlpError> {
        let nexts = perm.iter().map(|&i| self.nexts[i].clone()).collect();
        OlpProgram::new(
            self.decls.clone(),
            self.wiredefs.clone(),
            self.inits.clone(),
            nexts,
        )
    }
}

struct Ctx<'a> {
    decls: &'a [Decl],
    by_name: HashMap<&'a str, usize>,
    base: Vec<usize>,
}

impl Ctx<'_> {
    fn decl(&self, name: &str) -> Result<usize, OlpError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| OlpError::Undeclared(name.to_string()))
    }

    fn read(&self, t: &Term) -> Result<SlotRef, OlpError> {
        let d = self.decl(&t.name)?;
        let decl = &self.decls[d];
        match (decl.len, &t.index) {
            (None, None) => Ok(SlotRef::Fixed(self.base[d])),
            (Some(n), Some(ix)) => match **ix {
                Expr::Int(k) if k < 0 || k as usize >= n => Err(OlpError::IndexOutOfBounds {
                    name: t.name.clone(),
                    index: k,
                }),
                Expr::Int(k) => Ok(SlotRef::Fixed(self.base[d] + k as usize)),
                _ => Ok(SlotRef::Dynamic {
                    decl: d,
                    base: self.base[d],
                    len: n,
                    index: Box::new(self.expr(ix)?),
                }),
            },
            _ => Err(OlpError::Indexing(t.name.clone())),
        }
    }

    fn expr(&self, e: &OlpExpr) -> Result<Expr<SlotRef>, OlpError> {
        e.try_map_vars(&mut |t| self.read(t).map(Expr::Var))
    }

    fn target(&self, t: &Term) -> Result<usize, OlpError> {
        if t.constant_index().is_none() {
            return Err(OlpError::DynamicTarget(t.to_string()));
        }
        match self.read(t)? {
            SlotRef::Fixed(s) => Ok(s),
            SlotRef::Dynamic { .. } => Err(OlpError::DynamicTarget(t.to_string())),
        }
    }

    fn type_check(&self, a: &Assign) -> Result<(), OlpError> {
        let err = |error| OlpError::Type {
            target: a.target.to_string(),
            error,
        };
        let d = self.decl(&a.target.name)?;
        let target_ty = self.decls[d].ty;
        let ty = self.term_types(&a.expr).map_err(err)?;
        match (target_ty, ty) {
            (Ty::Bool, Ty::Bool) | (Ty::Int(_), Ty::Int(_)) => Ok(()),
            _ => Err(err(TypeError::Mismatch {
                expected: if target_ty == Ty::Bool {
                    "bool"
                } else {
                    "integer"
                },
                found: ty.to_string(),
            })),
        }
    }

    fn term_types(&self, e: &OlpExpr) -> Result<Ty, TypeError> {
        type_of(e, &mut |t: &Term| {
            let d = *self
                .by_name
                .get(t.name.as_str())
                .ok_or_else(|| TypeError::Unknown(t.name.clone()))?;
            if let Some(ix) = &t.index {
                match self.term_types(ix)? {
                    Ty::Int(_) => {}
                    other => {
                        return Err(TypeError::Mismatch {
                            expected: "integer index",
                            found: other.to_string(),
                        })
                    }
                }
            }
            Ok(self.decls[d].ty)
        })
    }
}

fn slot_deps(e: &Expr<SlotRef>, out: &mut Vec<usize>) {
    e.for_each_var(&mut |r| match r {
        SlotRef::Fixed(s) => out.push(*s),
        SlotRef::Dynamic {
            base, len, index, ..
        } => {
            out.extend(*base..*base + *len);
            slot_deps(index, out);
        }
    });
}

fn compile(
    decls: &[Decl],
    wiredefs: &[Assign],
    inits: &[Assign],
    nexts: &[Assign],
) -> Result<Compiled, OlpError> {
    let mut by_name = HashMap::new();
    let mut base = Vec::with_capacity(decls.len());
    let mut slots = Vec::new();
    for (d, decl) in decls.iter().enumerate() {
        if by_name.insert(decl.name.as_str(), d).is_some() {
            return Err(OlpError::DuplicateDecl(decl.name.clone()));
        }
        if let Ty::Int(IntTy { width, .. }) = decl.ty {
            if width == 0 || width > crate::expr::MAX_WIDTH {
                return Err(OlpError::Type {
                    target: decl.name.clone(),
                    error: TypeError::Mismatch {
                        expected: "a supported integer width",
                        found: decl.ty.to_string(),
                    },
                });
            }
        }
        base.push(slots.len());
        for k in 0..decl.elements() {
            slots.push(Slot {
                decl: d,
                element: decl.len.map(|_| k),
                ty: decl.ty,
                role: match decl.kind {
                    DeclKind::Register => SlotRole::Register,
                    DeclKind::Wire => SlotRole::Input,
                },
            });
        }
    }
    let ctx = Ctx {
        decls,
        by_name,
        base,
    };
    let name_of = |s: usize, slots: &[Slot]| match slots[s].element {
        None => decls[slots[s].decl].name.clone(),
        Some(k) => format!("{}[{k}]", decls[slots[s].decl].name),
    };

    let mut wires = Vec::new();
    for a in wiredefs {
        let s = ctx.target(&a.target)?;
        match slots[s].role {
            SlotRole::Register => return Err(OlpError::NotAWire(name_of(s, &slots))),
            SlotRole::Defined => return Err(OlpError::WireReassigned(name_of(s, &slots))),
            SlotRole::Input => slots[s].role = SlotRole::Defined,
        }
        ctx.type_check(a)?;
        wires.push((s, ctx.expr(&a.expr)?));
    }

    let mut lists = Vec::new();
    for (list, what) in [(inits, "init"), (nexts, "next")] {
        let mut seen = vec![false; slots.len()];
        let mut out = Vec::new();
        for a in list {
            let s = ctx.target(&a.target)?;
            if slots[s].role != SlotRole::Register {
                return Err(OlpError::NotARegister(name_of(s, &slots)));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(OlpError::RegisterReassigned(name_of(s, &slots), what));
            }
            ctx.type_check(a)?;
            out.push((s, ctx.expr(&a.expr)?));
        }
        for (s, slot) in slots.iter().enumerate() {
            if slot.role == SlotRole::Register && !seen[s] {
                return Err(if what == "init" {
                    OlpError::UninitializedRegister(name_of(s, &slots))
                } else {
                    OlpError::MissingNext(name_of(s, &slots))
                });
            }
        }
        lists.push(out);
    }
    let nexts_c = lists.pop().unwrap();
    let inits_c = lists.pop().unwrap();

    // Topological order of wire definitions (Kahn), rejecting cycles.
    let mut def_of = vec![usize::MAX; slots.len()];
    for (i, (s, _)) in wires.iter().enumerate() {
        def_of[*s] = i;
    }
    let deps: Vec<Vec<usize>> = wires
        .iter()
        .map(|(_, e)| {
            let mut d = Vec::new();
            slot_deps(e, &mut d);
            d.into_iter()
                .filter(|&s| def_of[s] != usize::MAX)
                .map(|s| def_of[s])
                .collect()
        })
        .collect();
    let mut indeg: Vec<usize> = deps.iter().map(|d| d.len()).collect();
    let mut users = vec![Vec::new(); wires.len()];
    for (i, d) in deps.iter().enumerate() {
        for &j in d {
            users[j].push(i);
        }
    }
    let mut ready: std::collections::VecDeque<usize> =
        (0..wires.len()).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(wires.len());
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &u in &users[i] {
            indeg[u] -= 1;
            if indeg[u] == 0 {
                ready.push_back(u);
            }
        }
    }
    if order.len() != wires.len() {
        let stuck = (0..wires.len()).find(|&i| indeg[i] > 0).unwrap();
        return Err(OlpError::CombinationalCycle(name_of(
            wires[stuck].0,
            &slots,
        )));
    }
    let mut wires_opt: Vec<Option<(usize, Expr<SlotRef>)>> = wires.into_iter().map(Some).collect();
    let wires: Vec<_> = order
        .iter()
        .map(|&i| wires_opt[i].take().unwrap())
        .collect();

    // Init expressions may read inputs and defined wires, never registers.
    let mut reads_register = vec![false; slots.len()];
    let mut reads_input = vec![false; slots.len()];
    for (s, slot) in slots.iter().enumerate() {
        reads_register[s] = slot.role == SlotRole::Register;
        reads_input[s] = slot.role == SlotRole::Input;
    }
    for (s, e) in &wires {
        let mut d = Vec::new();
        slot_deps(e, &mut d);
        reads_register[*s] = d.iter().any(|&x| reads_register[x]);
        reads_input[*s] = d.iter().any(|&x| reads_input[x]);
    }
    let mut init_reads_inputs = false;
    for (s, e) in &inits_c {
        let mut d = Vec::new();
        slot_deps(e, &mut d);
        if d.iter().any(|&x| reads_register[x]) {
            return Err(OlpError::InitReadsRegister(name_of(*s, &slots)));
        }
        init_reads_inputs |= d.iter().any(|&x| reads_input[x]);
    }

    let inputs = (0..slots.len())
        .filter(|&s| slots[s].role == SlotRole::Input)
        .collect();
    let registers = (0..slots.len())
        .filter(|&s| slots[s].role == SlotRole::Register)
        .collect();
    Ok(Compiled {
        slots,
        decl_base: ctx.base,
        wires,
        inits: inits_c,
        nexts: nexts_c,
        inputs,
        registers,
        init_reads_inputs,
    })
}
