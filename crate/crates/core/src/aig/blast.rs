use super::{is_complemented, var_of, Aig, Lit, OutputKind, FALSE, TRUE};
use crate::expr::{BinOp, Expr, IntTy, Ty, UnOp};
use crate::olp::{OlpProgram, SlotRef, SlotRole};

/// Literals of every scalar element of a program, least significant bit
/// first. Booleans have one bit; integers are two's complement when signed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMap {
    pub slots: Vec<Vec<Lit>>,
    /// Latch index of each register slot bit, in the same layout.
    pub latches: Vec<Vec<usize>>,
    /// Input index of each primary-input slot bit.
    pub inputs: Vec<Vec<usize>>,
}

impl BitMap {
    /// Integer (or 0/1) value of a slot under a bit valuation of literals.
    pub fn decode(&self, slot: usize, ty: Ty, bit: impl Fn(Lit) -> bool) -> i64 {
        let bits = &self.slots[slot];
        let mut raw: u64 = 0;
        for (k, &l) in bits.iter().enumerate() {
            if bit(l) {
                raw |= 1 << k;
            }
        }
        crate::expr::Val::from_bits(raw, ty).as_int()
    }

    /// Circuit input bits carrying the primary-input slots of a valuation.
    pub fn input_bits(&self, vals: &[i64]) -> Vec<bool> {
        let n = self
            .inputs
            .iter()
            .flatten()
            .map(|&i| i + 1)
            .max()
            .unwrap_or(0);
        let mut bits = vec![false; n];
        for (s, ins) in self.inputs.iter().enumerate() {
            for (k, &i) in ins.iter().enumerate() {
                bits[i] = (vals[s] >> k) & 1 == 1;
            }
        }
        bits
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BlastError {
    #[error("initial value of `{0}` is not a constant")]
    NonConstantInit(String),
    #[error("unknown property wire `{0}`")]
    UnknownProperty(String),
}

#[derive(Clone, Debug)]
pub struct Blasted {
    pub aig: Aig,
    pub bits: BitMap,
    /// Output index of each property, in the order given.
    pub bad: Vec<usize>,
}

fn bit_name(base: String, width: usize, k: usize) -> String {
    if width == 1 {
        base
    } else {
        format!("{base}<{k}>")
    }
}

/// Latches for registers, primary inputs for undefined wires, and empty
/// placeholders for defined wires (filled when their definitions are
/// lowered).
pub fn lower_variables(prog: &OlpProgram, aig: &mut Aig) -> BitMap {
    let n = prog.slots().len();
    let mut map = BitMap {
        slots: vec![Vec::new(); n],
        latches: vec![Vec::new(); n],
        inputs: vec![Vec::new(); n],
    };
    for (s, slot) in prog.slots().iter().enumerate() {
        let width = slot.ty.bits() as usize;
        match slot.role {
            SlotRole::Register => {
                for k in 0..width {
                    let (idx, l) =
                        aig.add_latch(false, Some(bit_name(prog.slot_name(s), width, k)));
                    map.slots[s].push(l);
                    map.latches[s].push(idx);
                }
            }
            SlotRole::Input => {
                for k in 0..width {
                    map.inputs[s].push(aig.inputs().len());
                    let l = aig.add_input(Some(bit_name(prog.slot_name(s), width, k)));
                    map.slots[s].push(l);
                }
            }
            SlotRole::Defined => {}
        }
    }
    map
}

/// A lowered value: its bits and its type.
#[derive(Clone, Debug)]
struct Word {
    bits: Vec<Lit>,
    ty: Ty,
}

fn int_ty(t: Ty) -> IntTy {
    match t {
        Ty::Int(t) => t,
        Ty::Bool => IntTy::unsigned(1),
    }
}

fn extend(w: &Word, width: usize) -> Vec<Lit> {
    let mut bits = w.bits.clone();
    bits.truncate(width);
    let fill = match w.ty {
        Ty::Int(t) if t.signed => *w.bits.last().unwrap_or(&FALSE),
        _ => FALSE,
    };
    bits.resize(width, fill);
    bits
}

fn constant(v: i64, width: usize) -> Vec<Lit> {
    (0..width)
        .map(|k| {
            if k < 64 && (v >> k.min(63)) & 1 == 1 {
                TRUE
            } else {
                FALSE
            }
        })
        .collect()
}

struct Lowerer<'a> {
    prog: &'a OlpProgram,
    aig: &'a mut Aig,
    slots: &'a [Vec<Lit>],
}

impl Lowerer<'_> {
    fn add(&mut self, a: &[Lit], b: &[Lit], mut carry: Lit) -> Vec<Lit> {
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let p = self.aig.xor(x, y);
            out.push(self.aig.xor(p, carry));
            let g = self.aig.and(x, y);
            let c = self.aig.and(p, carry);
            carry = self.aig.or(g, c);
        }
        out
    }

    fn sub(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let nb: Vec<Lit> = b.iter().map(|&l| l ^ 1).collect();
        self.add(a, &nb, TRUE)
    }

    fn mul(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        let w = a.len();
        let mut acc = vec![FALSE; w];
        for (i, &bi) in b.iter().enumerate() {
            let mut row = vec![FALSE; w];
            for j in 0..w - i {
                row[i + j] = self.aig.and(a[j], bi);
            }
            acc = self.add(&acc, &row, FALSE);
        }
        acc
    }

    fn eq(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let bits: Vec<Lit> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| self.aig.xnor(x, y))
            .collect();
        self.aig.and_all(bits)
    }

    // Signed a < b on equal-width operands: sign of the difference computed
    // one bit wider, so it cannot overflow.
    fn lt(&mut self, a: &Word, b: &Word) -> Lit {
        let w = int_ty(a.ty).signed_width().max(int_ty(b.ty).signed_width()) as usize + 1;
        let d = self.sub(&extend(a, w), &extend(b, w));
        d[w - 1]
    }

    fn word(&mut self, e: &Expr<SlotRef>) -> Word {
        match e {
            Expr::Int(v) => {
                let t = IntTy::of_literal(*v);
                Word {
                    bits: constant(*v, t.width as usize),
                    ty: Ty::Int(t),
                }
            }
            Expr::Bool(b) => Word {
                bits: vec![if *b { TRUE } else { FALSE }],
                ty: Ty::Bool,
            },
            Expr::Var(SlotRef::Fixed(s)) => Word {
                bits: self.slots[*s].clone(),
                ty: self.prog.slots()[*s].ty,
            },
            Expr::Var(SlotRef::Dynamic {
                base, len, index, ..
            }) => {
                let idx = self.word(index);
                let ty = self.prog.slots()[*base].ty;
                let width = ty.bits() as usize;
                let mut out = vec![FALSE; width];
                for j in 0..*len {
                    let jt = IntTy::of_literal(j as i64);
                    let w = int_ty(idx.ty).signed_width().max(jt.width) as usize;
                    let c = Word {
                        bits: constant(j as i64, jt.width as usize),
                        ty: Ty::Int(jt),
                    };
                    let hit = self.eq(&extend(&idx, w), &extend(&c, w));
                    for (k, o) in out.iter_mut().enumerate() {
                        let b = self.aig.and(hit, self.slots[base + j][k]);
                        *o = self.aig.or(*o, b);
                    }
                }
                Word { bits: out, ty }
            }
            Expr::Unary(UnOp::Not, a) => {
                let x = self.word(a);
                Word {
                    bits: vec![x.bits[0] ^ 1],
                    ty: Ty::Bool,
                }
            }
            Expr::Unary(UnOp::Neg, a) => {
                let x = self.word(a);
                let t = IntTy::signed(int_ty(x.ty).signed_width());
                let w = t.width as usize;
                let bits = self.sub(&vec![FALSE; w], &extend(&x, w));
                Word {
                    bits,
                    ty: Ty::Int(t),
                }
            }
            Expr::Binary(op, a, b) => self.binary(*op, a, b),
            Expr::Ite(c, t, e) => {
                let c = self.word(c).bits[0];
                let x = self.word(t);
                let y = self.word(e);
                let (ty, width) = match (x.ty, y.ty) {
                    (Ty::Int(p), Ty::Int(q)) => {
                        let j = p.join(q);
                        (Ty::Int(j), j.width as usize)
                    }
                    _ => (Ty::Bool, 1),
                };
                let (xs, ys) = (extend(&x, width), extend(&y, width));
                let bits = xs
                    .iter()
                    .zip(&ys)
                    .map(|(&p, &q)| self.aig.mux(c, p, q))
                    .collect();
                Word { bits, ty }
            }
        }
    }

    fn binary(&mut self, op: BinOp, a: &Expr<SlotRef>, b: &Expr<SlotRef>) -> Word {
        let x = self.word(a);
        let y = self.word(b);
        let bool_word = |l: Lit| Word {
            bits: vec![l],
            ty: Ty::Bool,
        };
        match op {
            BinOp::And => bool_word(self.aig.and(x.bits[0], y.bits[0])),
            BinOp::Or => bool_word(self.aig.or(x.bits[0], y.bits[0])),
            BinOp::Eq | BinOp::Ne => {
                let w = match (x.ty, y.ty) {
                    (Ty::Int(p), Ty::Int(q)) => p.join(q).width as usize,
                    _ => 1,
                };
                let e = self.eq(&extend(&x, w), &extend(&y, w));
                bool_word(if op == BinOp::Eq { e } else { e ^ 1 })
            }
            BinOp::Lt => bool_word(self.lt(&x, &y)),
            BinOp::Gt => bool_word(self.lt(&y, &x)),
            BinOp::Le => bool_word(self.lt(&y, &x) ^ 1),
            BinOp::Ge => bool_word(self.lt(&x, &y) ^ 1),
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                let t = int_ty(x.ty).join(int_ty(y.ty));
                let w = t.width as usize;
                let (xs, ys) = (extend(&x, w), extend(&y, w));
                let bits = match op {
                    BinOp::Add => self.add(&xs, &ys, FALSE),
                    BinOp::Sub => self.sub(&xs, &ys),
                    _ => self.mul(&xs, &ys),
                };
                Word {
                    bits,
                    ty: Ty::Int(t),
                }
            }
        }
    }

    // Value of `e` stored into a slot of type `ty`.
    fn store(&mut self, e: &Expr<SlotRef>, ty: Ty) -> Vec<Lit> {
        let w = self.word(e);
        extend(&w, ty.bits() as usize)
    }
}

/// Lower a program into a circuit. Each named property wire becomes a bad
/// output asserting its negation.
pub fn bitblast(prog: &OlpProgram, properties: &[String]) -> Result<Blasted, BlastError> {
    let mut aig = Aig::new();
    let mut bits = lower_variables(prog, &mut aig);
    let c = prog.compiled();

    for (s, e) in &c.wires {
        let ty = c.slots[*s].ty;
        let v = Lowerer {
            prog,
            aig: &mut aig,
            slots: &bits.slots,
        }
        .store(e, ty);
        bits.slots[*s] = v;
    }

    for (s, e) in &c.inits {
        let ty = c.slots[*s].ty;
        let v = Lowerer {
            prog,
            aig: &mut aig,
            slots: &bits.slots,
        }
        .store(e, ty);
        if v.iter().any(|&l| var_of(l) != 0) {
            return Err(BlastError::NonConstantInit(prog.slot_name(*s)));
        }
        for (k, &l) in v.iter().enumerate() {
            aig.set_init(bits.latches[*s][k], is_complemented(l));
        }
    }

    for (s, e) in &c.nexts {
        let ty = c.slots[*s].ty;
        let v = Lowerer {
            prog,
            aig: &mut aig,
            slots: &bits.slots,
        }
        .store(e, ty);
        for (k, &l) in v.iter().enumerate() {
            aig.set_next(bits.latches[*s][k], l);
        }
    }

    let mut bad = Vec::new();
    for name in properties {
        let s = prog
            .slot(name, None)
            .ok_or_else(|| BlastError::UnknownProperty(name.clone()))?;
        let l = bits.slots[s][0];
        bad.push(aig.add_output(l ^ 1, OutputKind::Bad, Some(name.clone())));
    }
    Ok(Blasted { aig, bits, bad })
}
