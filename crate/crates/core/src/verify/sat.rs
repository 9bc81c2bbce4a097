//! A conflict-driven clause-learning SAT solver: two watched literals,
//! activity-based branching with phase saving, first-UIP learning with
//! clause minimization, Luby restarts, learnt-clause reduction and
//! solving under assumptions.
//!
//! Literals use the DIMACS convention: variable `v >= 1` is `v` or `-v`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("resource limit reached")]
pub struct ResourceLimit;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct L(u32);

impl L {
    fn from_dimacs(x: i32) -> L {
        let v = x.unsigned_abs() - 1;
        L(2 * v + (x < 0) as u32)
    }

    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    fn neg(self) -> L {
        L(self.0 ^ 1)
    }

    fn sign(self) -> bool {
        self.0 & 1 == 1
    }

    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Value {
    True,
    False,
    Undef,
}

#[derive(Clone, Copy, Debug)]
struct Watch {
    clause: u32,
    /// For binary clauses, the other literal.
    blocker: L,
    binary: bool,
}

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<L>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

/// Max-heap of variables ordered by activity.
#[derive(Clone, Debug, Default)]
struct Heap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl Heap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, None);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v].is_some()
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.heap[p]] >= act[v] {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i]] = Some(i);
            i = p;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r]] > act[self.heap[l]] {
                r
            } else {
                l
            };
            if act[self.heap[c]] <= act[v] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i]] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v] = Some(i);
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v] = Some(i);
        self.up(i, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }
}

fn luby(mut i: u64) -> u64 {
    // Position `i` (0-based) of 1, 1, 2, 1, 1, 2, 4, ...
    let (mut size, mut seq) = (1u64, 0u32);
    while size < i + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size;
    }
    1 << seq
}

#[derive(Clone, Debug, Default)]
pub struct SolverStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub restarts: u64,
    pub learnts: usize,
}

#[derive(Clone, Debug)]
pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<Value>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<L>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    phase: Vec<bool>,
    order: Heap,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    deadline: Option<Instant>,
    seed_rng: Option<ChaCha8Rng>,
    num_learnts: usize,
    max_learnts: f64,
    pub stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

const RESTART_BASE: u64 = 100;

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            phase: Vec::new(),
            order: Heap::default(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            deadline: None,
            seed_rng: None,
            num_learnts: 0,
            max_learnts: 0.0,
            stats: SolverStats::default(),
        }
    }

    /// A solver whose initial branching order is perturbed by `seed`.
    pub fn with_seed(seed: u64) -> Self {
        let mut s = Solver::new();
        if seed != 0 {
            s.seed_rng = Some(ChaCha8Rng::seed_from_u64(seed));
        }
        s
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses
            .iter()
            .filter(|c| !c.learnt && !c.deleted)
            .count()
    }

    /// Allocate a fresh variable and return its (positive) index.
    pub fn new_var(&mut self) -> i32 {
        let v = self.assigns.len();
        self.assigns.push(Value::Undef);
        self.level.push(0);
        self.reason.push(None);
        let a = self
            .seed_rng
            .as_mut()
            .map_or(0.0, |r| r.gen::<f64>() * 1e-5);
        self.activity.push(a);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.grow(v + 1);
        self.order.insert(v, &self.activity);
        v as i32 + 1
    }

    fn ensure_vars(&mut self, lits: &[i32]) {
        let max = lits
            .iter()
            .map(|x| x.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        while self.assigns.len() < max {
            self.new_var();
        }
    }

    fn value(&self, l: L) -> Value {
        match self.assigns[l.var()] {
            Value::Undef => Value::Undef,
            Value::True if !l.sign() => Value::True,
            Value::False if l.sign() => Value::True,
            _ => Value::False,
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: L, reason: Option<u32>) {
        self.assigns[l.var()] = if l.sign() { Value::False } else { Value::True };
        self.level[l.var()] = self.decision_level();
        self.reason[l.var()] = reason;
        self.trail.push(l);
    }

    /// Add a clause. Must be called between solves; returns false once the
    /// clause set is known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[i32]) -> bool {
        self.ensure_vars(lits);
        if !self.ok {
            return false;
        }
        self.backtrack(0);
        let mut ls: Vec<L> = lits.iter().map(|&x| L::from_dimacs(x)).collect();
        ls.sort();
        ls.dedup();
        if ls.windows(2).any(|w| w[0].var() == w[1].var()) {
            return true;
        }
        ls.retain(|&l| self.value(l) != Value::False);
        if ls.iter().any(|&l| self.value(l) == Value::True) {
            return true;
        }
        match ls.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(ls[0], None);
                self.ok = self.propagate().is_none();
                self.ok
            }
            _ => {
                self.attach(ls, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<L>, learnt: bool) -> u32 {
        let cr = self.clauses.len() as u32;
        let binary = lits.len() == 2;
        self.watches[lits[0].neg().idx()].push(Watch {
            clause: cr,
            blocker: lits[1],
            binary,
        });
        self.watches[lits[1].neg().idx()].push(Watch {
            clause: cr,
            blocker: lits[0],
            binary,
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.num_learnts += 1;
        }
        cr
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p.neg();
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                let bv = self.value(w.blocker);
                if bv == Value::True {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                if w.binary {
                    ws[j] = w;
                    j += 1;
                    if bv == Value::False {
                        conflict = Some(w.clause);
                        while i < ws.len() {
                            ws[j] = ws[i];
                            j += 1;
                            i += 1;
                        }
                    } else {
                        self.enqueue(w.blocker, Some(w.clause));
                    }
                    continue;
                }
                let cr = w.clause as usize;
                if self.clauses[cr].deleted {
                    continue;
                }
                {
                    let c = &mut self.clauses[cr].lits;
                    if c[0] == false_lit {
                        c.swap(0, 1);
                    }
                }
                let first = self.clauses[cr].lits[0];
                if first != w.blocker && self.value(first) == Value::True {
                    ws[j] = Watch {
                        blocker: first,
                        ..w
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cr].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cr].lits[k];
                    if self.value(l) != Value::False {
                        self.clauses[cr].lits.swap(1, k);
                        self.watches[l.neg().idx()].push(Watch {
                            blocker: first,
                            ..w
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    blocker: first,
                    ..w
                };
                j += 1;
                if self.value(first) == Value::False {
                    conflict = Some(w.clause);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.clause));
                }
            }
            ws.truncate(j);
            let extra = std::mem::replace(&mut self.watches[p.idx()], ws);
            self.watches[p.idx()].extend(extra);
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cr: usize) {
        self.clauses[cr].activity += self.cla_inc;
        if self.clauses[cr].activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    // First-UIP conflict analysis. Returns the learnt clause (asserting
    // literal first) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<L>, u32) {
        let mut learnt = vec![L(0)];
        let mut path = 0;
        let mut p: Option<L> = None;
        let mut index = self.trail.len();
        loop {
            let cr = confl as usize;
            if self.clauses[cr].learnt {
                self.bump_clause(cr);
            }
            let start = if p.is_some() { 1 } else { 0 };
            for k in start..self.clauses[cr].lits.len() {
                let q = self.clauses[cr].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= self.decision_level() {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var()] = false;
            path -= 1;
            if path == 0 {
                learnt[0] = lit.neg();
                break;
            }
            confl = self.reason[lit.var()].expect("propagated literal has a reason");
            // The reason clause has `lit` at position 0.
            let c = &mut self.clauses[confl as usize].lits;
            if c[0] != lit {
                let k = c.iter().position(|&x| x == lit).unwrap();
                c.swap(0, k);
            }
        }

        // Drop literals implied by the rest of the clause.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                k == 0
                    || match self.reason[l.var()] {
                        None => true,
                        Some(r) => self.clauses[r as usize].lits.iter().any(|&q| {
                            q.var() != l.var() && !self.seen[q.var()] && self.level[q.var()] > 0
                        }),
                    }
            })
            .collect();
        for &l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut out: Vec<L> = learnt
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(l, _)| l)
            .collect();

        let bt = if out.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for k in 2..out.len() {
                if self.level[out[k].var()] > self.level[out[max_i].var()] {
                    max_i = k;
                }
            }
            out.swap(1, max_i);
            self.level[out[1].var()]
        };
        (out, bt)
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var();
            self.assigns[v] = Value::Undef;
            self.reason[v] = None;
            self.phase[v] = !l.sign();
            self.order.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn locked(&self, cr: usize) -> bool {
        let c = &self.clauses[cr];
        let v = c.lits[0].var();
        self.reason[v] == Some(cr as u32) && self.value(c.lits[0]) == Value::True
    }

    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len())
            .filter(|&k| self.clauses[k].learnt && !self.clauses[k].deleted)
            .collect();
        learnts.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let half = learnts.len() / 2;
        for &k in &learnts[..half] {
            if self.clauses[k].lits.len() > 2 && !self.locked(k) {
                self.clauses[k].deleted = true;
                self.clauses[k].lits = Vec::new();
                self.num_learnts -= 1;
            }
        }
        let clauses = &self.clauses;
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !clauses[w.clause as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<L> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v] == Value::Undef {
                return Some(L(2 * v as u32 + (!self.phase[v]) as u32));
            }
        }
        None
    }

    /// Solve under `assumptions`. `Ok(true)` means satisfiable, with the
    /// model available through [`Solver::model_value`].
    pub fn solve(&mut self, assumptions: &[i32]) -> Result<bool, ResourceLimit> {
        self.ensure_vars(assumptions);
        self.model.clear();
        if !self.ok {
            return Ok(false);
        }
        self.backtrack(0);
        if self.propagate().is_some() {
            self.ok = false;
            return Ok(false);
        }
        let assumptions: Vec<L> = assumptions.iter().map(|&x| L::from_dimacs(x)).collect();
        self.max_learnts = (self.num_clauses() as f64 / 3.0).max(1000.0);
        let mut restart = 0u64;
        loop {
            let budget = RESTART_BASE * luby(restart);
            match self.search(budget, &assumptions)? {
                Some(result) => {
                    if result {
                        self.model = self.assigns.iter().map(|&v| v == Value::True).collect();
                    }
                    self.backtrack(0);
                    return Ok(result);
                }
                None => {
                    restart += 1;
                    self.stats.restarts += 1;
                    self.backtrack(0);
                }
            }
        }
    }

    fn search(&mut self, budget: u64, assumptions: &[L]) -> Result<Option<bool>, ResourceLimit> {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.stats.conflicts += 1;
                if self.stats.conflicts.is_multiple_of(256) {
                    self.check_deadline()?;
                }
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Ok(Some(false));
                }
                let (learnt, bt) = self.analyze(confl);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cr = self.attach(learnt, true);
                    self.bump_clause(cr as usize);
                    self.enqueue(first, Some(cr));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                continue;
            }
            if conflicts >= budget {
                return Ok(None);
            }
            if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    Value::True => self.trail_lim.push(self.trail.len()),
                    Value::False => return Ok(Some(false)),
                    Value::Undef => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let decision = match next {
                Some(a) => a,
                None => match self.pick_branch() {
                    Some(l) => l,
                    None => return Ok(Some(true)),
                },
            };
            self.stats.decisions += 1;
            if self.stats.decisions.is_multiple_of(1024) {
                self.check_deadline()?;
            }
            self.trail_lim.push(self.trail.len());
            self.enqueue(decision, None);
        }
    }

    fn check_deadline(&self) -> Result<(), ResourceLimit> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(ResourceLimit),
            _ => Ok(()),
        }
    }

    /// Value of variable `v` (1-based) in the last model.
    pub fn model_value(&self, v: i32) -> bool {
        self.model
            .get(v.unsigned_abs() as usize - 1)
            .copied()
            .unwrap_or(false)
            == (v > 0)
    }

    pub fn model(&self) -> &[bool] {
        &self.model
    }
}
