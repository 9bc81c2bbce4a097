use std::collections::HashMap;
use std::fmt::Write as _;

use super::{var_of, Aig, Lit, Node, OutputKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AigerFormat {
    /// `aag`
    #[default]
    Ascii,
    /// `aig`
    Binary,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WriteOptions {
    pub format: AigerFormat,
    /// Write bad-state outputs as ordinary outputs, for readers that predate
    /// the bad-state section.
    pub compat: bool,
    pub comment: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum AigerError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported AIGER feature: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// Variable numbering of the written file: inputs, then latches, then ANDs.
fn renumber(aig: &Aig) -> Vec<u32> {
    let mut map = vec![0u32; aig.nodes().len()];
    let mut next = 1;
    for &v in aig.inputs() {
        map[v as usize] = next;
        next += 1;
    }
    for l in aig.latches() {
        map[l.var as usize] = next;
        next += 1;
    }
    for v in aig.and_vars() {
        map[v as usize] = next;
        next += 1;
    }
    map
}

fn encode(out: &mut Vec<u8>, mut x: u32) {
    while x & !0x7f != 0 {
        out.push((x & 0x7f) as u8 | 0x80);
        x >>= 7;
    }
    out.push(x as u8);
}

/// Serialize a network. Bad outputs go to the bad-state section unless
/// `compat` is set; symbol entries are written for every named element.
pub fn write_aiger(aig: &Aig, opts: &WriteOptions) -> Vec<u8> {
    let map = renumber(aig);
    let tr = |l: Lit| 2 * map[var_of(l) as usize] + (l & 1);
    let (plain, bad): (Vec<_>, Vec<_>) = if opts.compat {
        (aig.outputs().iter().collect(), Vec::new())
    } else {
        aig.outputs()
            .iter()
            .partition(|o| o.kind == OutputKind::Plain)
    };
    let (i, l, a) = (aig.inputs().len(), aig.latches().len(), aig.num_ands());
    let m = i + l + a;
    let mut text = String::new();
    let tag = match opts.format {
        AigerFormat::Ascii => "aag",
        AigerFormat::Binary => "aig",
    };
    let _ = write!(text, "{tag} {m} {i} {l} {} {a}", plain.len());
    if !bad.is_empty() {
        let _ = write!(text, " {}", bad.len());
    }
    text.push('\n');
    if opts.format == AigerFormat::Ascii {
        for &v in aig.inputs() {
            let _ = writeln!(text, "{}", 2 * map[v as usize]);
        }
    }
    for latch in aig.latches() {
        if opts.format == AigerFormat::Ascii {
            let _ = write!(text, "{} ", 2 * map[latch.var as usize]);
        }
        let _ = write!(text, "{}", tr(latch.next));
        if latch.init {
            text.push_str(" 1");
        }
        text.push('\n');
    }
    for o in plain.iter().chain(bad.iter()) {
        let _ = writeln!(text, "{}", tr(o.lit));
    }
    let mut bytes = Vec::new();
    let ands: Vec<(Lit, Lit, Lit)> = aig
        .and_vars()
        .map(|v| match aig.node(v) {
            Node::And(x, y) => {
                let (x, y) = (tr(x), tr(y));
                (2 * map[v as usize], x.max(y), x.min(y))
            }
            _ => unreachable!(),
        })
        .collect();
    match opts.format {
        AigerFormat::Ascii => {
            for (lhs, r0, r1) in ands {
                let _ = writeln!(text, "{lhs} {r0} {r1}");
            }
            bytes.extend_from_slice(text.as_bytes());
        }
        AigerFormat::Binary => {
            bytes.extend_from_slice(text.as_bytes());
            for (lhs, r0, r1) in ands {
                encode(&mut bytes, lhs - r0);
                encode(&mut bytes, r0 - r1);
            }
        }
    }
    let mut sym = String::new();
    for k in 0..i {
        if let Some(n) = aig.input_name(k) {
            let _ = writeln!(sym, "i{k} {n}");
        }
    }
    for (k, latch) in aig.latches().iter().enumerate() {
        if let Some(n) = &latch.name {
            let _ = writeln!(sym, "l{k} {n}");
        }
    }
    for (k, o) in plain.iter().enumerate() {
        if let Some(n) = &o.name {
            let _ = writeln!(sym, "o{k} {n}");
        }
    }
    for (k, o) in bad.iter().enumerate() {
        if let Some(n) = &o.name {
            let _ = writeln!(sym, "b{k} {n}");
        }
    }
    if let Some(c) = &opts.comment {
        sym.push_str("c\n");
        sym.push_str(c);
        if !c.ends_with('\n') {
            sym.push('\n');
        }
    }
    bytes.extend_from_slice(sym.as_bytes());
    bytes
}

struct Reader<'a> {
    data: &'a [u8],
    at: usize,
    line: usize,
}

impl Reader<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, AigerError> {
        Err(AigerError::Parse {
            line: self.line,
            message: message.into(),
        })
    }

    fn text_line(&mut self) -> Result<&str, AigerError> {
        if self.at >= self.data.len() {
            return self.err("unexpected end of file");
        }
        let start = self.at;
        while self.at < self.data.len() && self.data[self.at] != b'\n' {
            self.at += 1;
        }
        let end = self.at;
        self.at += 1;
        self.line += 1;
        std::str::from_utf8(&self.data[start..end]).map_err(|_| AigerError::Parse {
            line: self.line,
            message: "invalid UTF-8".into(),
        })
    }

    fn numbers(&mut self, min: usize, max: usize) -> Result<Vec<u32>, AigerError> {
        let line = self.text_line()?.to_string();
        let nums: Result<Vec<u32>, _> = line.split_whitespace().map(str::parse).collect();
        match nums {
            Ok(v) if v.len() >= min && v.len() <= max => Ok(v),
            _ => self.err(format!("expected {min} to {max} numbers, found `{line}`")),
        }
    }

    fn varint(&mut self) -> Result<u32, AigerError> {
        let mut x: u32 = 0;
        let mut shift = 0;
        loop {
            let Some(&b) = self.data.get(self.at) else {
                return self.err("truncated binary AND section");
            };
            self.at += 1;
            x |= ((b & 0x7f) as u32) << shift;
            if b & 0x80 == 0 {
                return Ok(x);
            }
            shift += 7;
            if shift > 28 {
                return self.err("oversized delta");
            }
        }
    }
}

/// Parse an `aag` or `aig` file. The result keeps the file's gates as they
/// are (no hashing or simplification), renumbered so that every AND follows
/// its fanins.
pub fn read_aiger(data: &[u8]) -> Result<Aig, AigerError> {
    let mut r = Reader {
        data,
        at: 0,
        line: 0,
    };
    let header = r.text_line()?.to_string();
    let mut parts = header.split_whitespace();
    let binary = match parts.next() {
        Some("aag") => false,
        Some("aig") => true,
        _ => return r.err("missing `aag`/`aig` header"),
    };
    let nums: Vec<usize> = parts
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| AigerError::Parse {
            line: 1,
            message: "malformed header".into(),
        })?;
    if nums.len() < 5 || nums.len() > 9 {
        return r.err("header needs M I L O A [B C J F]");
    }
    let (m, ni, nl, no, na) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    let nb = nums.get(5).copied().unwrap_or(0);
    if nums.iter().skip(6).any(|&x| x > 0) {
        return Err(AigerError::Unsupported(
            "constraint, justice or fairness sections".into(),
        ));
    }
    if m < ni + nl + na {
        return r.err("M is smaller than I + L + A");
    }

    let mut input_lits = Vec::with_capacity(ni);
    for k in 0..ni {
        if binary {
            input_lits.push(2 * (k as u32 + 1));
        } else {
            input_lits.push(r.numbers(1, 1)?[0]);
        }
    }
    let mut latch_rows = Vec::with_capacity(nl);
    for k in 0..nl {
        let row = if binary {
            let mut v = vec![2 * (ni + k + 1) as u32];
            v.extend(r.numbers(1, 2)?);
            v
        } else {
            r.numbers(2, 3)?
        };
        let init = match row.get(2) {
            None | Some(0) => false,
            Some(1) => true,
            Some(_) => return Err(AigerError::Unsupported("uninitialized latches".into())),
        };
        latch_rows.push((row[0], row[1], init));
    }
    let mut outs = Vec::with_capacity(no + nb);
    for _ in 0..no + nb {
        outs.push(r.numbers(1, 1)?[0]);
    }
    let mut and_rows = Vec::with_capacity(na);
    for k in 0..na {
        if binary {
            let lhs = 2 * (ni + nl + k + 1) as u32;
            let d0 = r.varint()?;
            let d1 = r.varint()?;
            let r0 = lhs.checked_sub(d0).ok_or(AigerError::Parse {
                line: r.line,
                message: "invalid delta".into(),
            })?;
            let r1 = r0.checked_sub(d1).ok_or(AigerError::Parse {
                line: r.line,
                message: "invalid delta".into(),
            })?;
            and_rows.push((lhs, r0, r1));
        } else {
            let v = r.numbers(3, 3)?;
            and_rows.push((v[0], v[1], v[2]));
        }
    }

    let mut in_names = vec![None; ni];
    let mut latch_names = vec![None; nl];
    let mut out_names = vec![None; no];
    let mut bad_names = vec![None; nb];
    while r.at < data.len() {
        let line = r.text_line()?.to_string();
        if line == "c" {
            break;
        }
        let Some((head, name)) = line.split_once(' ') else {
            return r.err(format!("malformed symbol `{line}`"));
        };
        let (kind, idx) = head.split_at(1);
        let Ok(idx) = idx.parse::<usize>() else {
            return r.err(format!("malformed symbol `{line}`"));
        };
        let table = match kind {
            "i" => &mut in_names,
            "l" => &mut latch_names,
            "o" => &mut out_names,
            "b" => &mut bad_names,
            _ => return r.err(format!("unknown symbol kind `{kind}`")),
        };
        match table.get_mut(idx) {
            Some(slot) => *slot = Some(name.to_string()),
            None => return r.err(format!("symbol index out of range in `{line}`")),
        }
    }

    let mut aig = Aig::new();
    let mut map: HashMap<u32, Lit> = HashMap::from([(0, 0)]);
    let defined = |map: &HashMap<u32, Lit>, v: u32| map.contains_key(&v);
    for (k, &l) in input_lits.iter().enumerate() {
        if l & 1 == 1 || l == 0 || defined(&map, var_of(l)) {
            return Err(AigerError::Parse {
                line: 2 + k,
                message: format!("invalid input literal {l}"),
            });
        }
        map.insert(var_of(l), aig.add_input(in_names[k].take()));
    }
    let mut latch_ix = Vec::new();
    for (k, &(l, _, init)) in latch_rows.iter().enumerate() {
        if l & 1 == 1 || l == 0 || defined(&map, var_of(l)) {
            return Err(AigerError::Unsupported(format!(
                "invalid latch literal {l}"
            )));
        }
        let (idx, nl) = aig.add_latch(init, latch_names[k].take());
        map.insert(var_of(l), nl);
        latch_ix.push(idx);
    }
    let mut by_lhs: HashMap<u32, (u32, u32)> = HashMap::new();
    for &(lhs, r0, r1) in &and_rows {
        if lhs & 1 == 1
            || defined(&map, var_of(lhs))
            || by_lhs.insert(var_of(lhs), (r0, r1)).is_some()
        {
            return Err(AigerError::Unsupported(format!(
                "invalid AND literal {lhs}"
            )));
        }
    }
    // Define ANDs in dependency order.
    for &(lhs, _, _) in &and_rows {
        let mut stack = vec![(var_of(lhs), false)];
        let mut on_path = std::collections::HashSet::new();
        while let Some((v, expanded)) = stack.pop() {
            if map.contains_key(&v) {
                continue;
            }
            let Some(&(r0, r1)) = by_lhs.get(&v) else {
                return Err(AigerError::Unsupported(format!("undefined variable {v}")));
            };
            if expanded {
                let a = map[&var_of(r0)] ^ (r0 & 1);
                let b = map[&var_of(r1)] ^ (r1 & 1);
                map.insert(v, aig.and_raw(a, b));
                on_path.remove(&v);
                continue;
            }
            if !on_path.insert(v) {
                return Err(AigerError::Unsupported(format!(
                    "combinational cycle at {v}"
                )));
            }
            stack.push((v, true));
            for f in [var_of(r0), var_of(r1)] {
                if !map.contains_key(&f) {
                    if on_path.contains(&f) {
                        return Err(AigerError::Unsupported(format!(
                            "combinational cycle at {f}"
                        )));
                    }
                    stack.push((f, false));
                }
            }
        }
    }
    let resolve = |l: u32| -> Result<Lit, AigerError> {
        map.get(&var_of(l))
            .map(|&x| x ^ (l & 1))
            .ok_or_else(|| AigerError::Unsupported(format!("undefined literal {l}")))
    };
    for (k, &(_, next, _)) in latch_rows.iter().enumerate() {
        aig.set_next(latch_ix[k], resolve(next)?);
    }
    for (k, &l) in outs.iter().enumerate() {
        let (kind, name) = if k < no {
            (OutputKind::Plain, out_names[k].take())
        } else {
            (OutputKind::Bad, bad_names[k - no].take())
        };
        aig.add_output(resolve(l)?, kind, name);
    }
    Ok(aig)
}
