use super::{is_complemented, negate, var_of, Aig, Lit, Node, FALSE, TRUE};

/// What became of an original latch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatchFate {
    Kept(usize),
    /// Holds this value on every reachable state.
    Constant(bool),
    /// Outside the cone of influence of every output.
    Removed,
}

#[derive(Clone, Debug)]
pub struct Reduced {
    pub aig: Aig,
    /// Indexed by latch of the original network.
    pub latches: Vec<LatchFate>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tern {
    Zero,
    One,
    X,
}

impl Tern {
    fn not(self) -> Tern {
        match self {
            Tern::Zero => Tern::One,
            Tern::One => Tern::Zero,
            Tern::X => Tern::X,
        }
    }

    fn and(self, o: Tern) -> Tern {
        match (self, o) {
            (Tern::Zero, _) | (_, Tern::Zero) => Tern::Zero,
            (Tern::One, Tern::One) => Tern::One,
            _ => Tern::X,
        }
    }
}

// Latches that keep their reset value on every reachable state, found by
// ternary simulation from the reset state with unknown inputs.
fn constant_latches(aig: &Aig) -> Vec<Option<bool>> {
    let tern = |b: bool| if b { Tern::One } else { Tern::Zero };
    let mut state: Vec<Tern> = aig.latches().iter().map(|l| tern(l.init)).collect();
    let mut vals = vec![Tern::Zero; aig.nodes().len()];
    loop {
        for (v, node) in aig.nodes().iter().enumerate() {
            let get = |l: Lit, vals: &[Tern]| {
                let x = vals[var_of(l) as usize];
                if is_complemented(l) {
                    x.not()
                } else {
                    x
                }
            };
            vals[v] = match *node {
                Node::Const => Tern::Zero,
                Node::Input(_) => Tern::X,
                Node::Latch(k) => state[k],
                Node::And(a, b) => get(a, &vals).and(get(b, &vals)),
            };
        }
        let mut changed = false;
        for (k, l) in aig.latches().iter().enumerate() {
            let x = vals[var_of(l.next) as usize];
            let next = if is_complemented(l.next) { x.not() } else { x };
            if next != state[k] && state[k] != Tern::X {
                state[k] = Tern::X;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    state
        .into_iter()
        .map(|t| match t {
            Tern::Zero => Some(false),
            Tern::One => Some(true),
            Tern::X => None,
        })
        .collect()
}

fn and_fanins(aig: &Aig, l: Lit) -> Option<(Lit, Lit)> {
    match aig.node(var_of(l)) {
        Node::And(a, b) => Some((a, b)),
        _ => None,
    }
}

// AND with two-level simplifications on top of hashing and constants.
fn and_rewrite(aig: &mut Aig, a: Lit, b: Lit) -> Lit {
    for (x, y) in [(a, b), (b, a)] {
        if let Some((y0, y1)) = and_fanins(aig, y) {
            if !is_complemented(y) {
                if x == y0 || x == y1 {
                    return y;
                }
                if x == negate(y0) || x == negate(y1) {
                    return FALSE;
                }
            } else {
                if x == y0 {
                    return aig.and(x, negate(y1));
                }
                if x == y1 {
                    return aig.and(x, negate(y0));
                }
                if x == negate(y0) || x == negate(y1) {
                    return x;
                }
            }
        }
    }
    if !is_complemented(a) && !is_complemented(b) {
        if let (Some((a0, a1)), Some((b0, b1))) = (and_fanins(aig, a), and_fanins(aig, b)) {
            if [a0, a1].iter().any(|&p| p == negate(b0) || p == negate(b1)) {
                return FALSE;
            }
        }
    }
    aig.and(a, b)
}

fn pass(aig: &Aig) -> (Aig, Vec<LatchFate>) {
    let consts = constant_latches(aig);

    let mut needed = vec![false; aig.nodes().len()];
    let mut stack: Vec<u32> = aig.outputs().iter().map(|o| var_of(o.lit)).collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut needed[v as usize], true) {
            continue;
        }
        match aig.node(v) {
            Node::And(a, b) => {
                stack.push(var_of(a));
                stack.push(var_of(b));
            }
            Node::Latch(k) if consts[k].is_none() => stack.push(var_of(aig.latches()[k].next)),
            _ => {}
        }
    }

    let mut out = Aig::new();
    let mut map: Vec<Lit> = vec![FALSE; aig.nodes().len()];
    let mut fates = vec![LatchFate::Removed; aig.latches().len()];
    for (i, &v) in aig.inputs().iter().enumerate() {
        map[v as usize] = out.add_input(aig.input_name(i).map(str::to_string));
    }
    for (k, l) in aig.latches().iter().enumerate() {
        if let Some(c) = consts[k] {
            fates[k] = LatchFate::Constant(c);
            map[l.var as usize] = if c { TRUE } else { FALSE };
        } else if needed[l.var as usize] {
            let (idx, nl) = out.add_latch(l.init, l.name.clone());
            fates[k] = LatchFate::Kept(idx);
            map[l.var as usize] = nl;
        }
    }
    let tr = |map: &[Lit], l: Lit| map[var_of(l) as usize] ^ (l & 1);
    for v in aig.and_vars() {
        if !needed[v as usize] {
            continue;
        }
        if let Node::And(a, b) = aig.node(v) {
            let (a, b) = (tr(&map, a), tr(&map, b));
            map[v as usize] = and_rewrite(&mut out, a, b);
        }
    }
    for (k, l) in aig.latches().iter().enumerate() {
        if let LatchFate::Kept(idx) = fates[k] {
            out.set_next(idx, tr(&map, l.next));
        }
    }
    for o in aig.outputs() {
        out.add_output(tr(&map, o.lit), o.kind, o.name.clone());
    }
    (out, fates)
}

/// Apply hashing, constant propagation, two-level rewriting, constant-latch
/// and cone-of-influence sweeps until nothing changes. Inputs are kept so
/// that input vectors stay compatible.
pub fn reduce(aig: &Aig) -> Reduced {
    let mut cur = aig.clone();
    let mut fates: Vec<LatchFate> = (0..aig.latches().len()).map(LatchFate::Kept).collect();
    loop {
        let before = (cur.num_ands(), cur.latches().len());
        let (next, step) = pass(&cur);
        for f in fates.iter_mut() {
            if let LatchFate::Kept(k) = *f {
                *f = step[k];
            }
        }
        cur = next;
        if (cur.num_ands(), cur.latches().len()) == before {
            break;
        }
    }
    Reduced {
        aig: cur,
        latches: fates,
    }
}
