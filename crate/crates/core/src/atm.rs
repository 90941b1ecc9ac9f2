//! Alternating linearly-bounded Turing machines and their encodings as
//! negotiation arenas. Used to generate hard instances with a known answer.
//!
//! Text format:
//!
//! ```text
//! atm <name>
//! states q0[E] q1[U] qa[acc] qr[rej]
//! alphabet a b
//! input ab
//! delta q0 a -> (q1 b R) (qa a L)
//! ```
//!
//! The first declared state is the initial one. Symbols are single
//! characters. A non-halting state without a transition for the symbol under
//! the head is stuck and rejects.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::model::{AgentId, Arena, AtomId, ModelError, NegotiationBuilder, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Existential,
    Universal,
    Accepting,
    Rejecting,
}

impl StateKind {
    fn halting(self) -> bool {
        matches!(self, StateKind::Accepting | StateKind::Rejecting)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    L,
    R,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::L => "L",
            Dir::R => "R",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub state: usize,
    pub symbol: usize,
    pub dir: Dir,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atm {
    pub name: String,
    pub states: Vec<(String, StateKind)>,
    pub alphabet: Vec<char>,
    pub input: Vec<usize>,
    /// `δ(q, α)` keyed by state and symbol index.
    pub delta: BTreeMap<(usize, usize), Vec<Move>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AtmError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("the head leaves the tape: state {state} reading '{symbol}' at cell {cell} moves {dir}")]
    OffTape {
        state: String,
        symbol: char,
        cell: usize,
        dir: Dir,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, message: impl Into<String>) -> AtmError {
    AtmError::Syntax {
        line,
        message: message.into(),
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

impl Atm {
    pub fn parse(text: &str) -> Result<Atm, AtmError> {
        let mut name = None;
        let mut states: Vec<(String, StateKind)> = Vec::new();
        let mut alphabet: Vec<char> = Vec::new();
        let mut input: Option<(usize, String)> = None;
        let mut deltas: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let spaced = content.replace('(', " ( ").replace(')', " ) ");
            let tokens: Vec<&str> = spaced.split_whitespace().collect();
            let Some((&head, rest)) = tokens.split_first() else {
                continue;
            };
            match head {
                "atm" => match rest {
                    [n] if name.is_none() => name = Some(n.to_string()),
                    _ => return Err(syntax(line, "expected 'atm <name>' once")),
                },
                "states" => {
                    for t in rest {
                        let (n, kind) = t
                            .strip_suffix(']')
                            .and_then(|t| t.split_once('['))
                            .ok_or_else(|| syntax(line, format!("expected <state>[E|U|acc|rej], found '{t}'")))?;
                        let kind = match kind {
                            "E" => StateKind::Existential,
                            "U" => StateKind::Universal,
                            "acc" => StateKind::Accepting,
                            "rej" => StateKind::Rejecting,
                            _ => return Err(syntax(line, format!("unknown state label '{kind}'"))),
                        };
                        if !valid_name(n) {
                            return Err(syntax(line, format!("invalid state name '{n}'")));
                        }
                        if states.iter().any(|(s, _)| s == n) {
                            return Err(syntax(line, format!("state '{n}' declared twice")));
                        }
                        states.push((n.to_string(), kind));
                    }
                }
                "alphabet" => {
                    for t in rest {
                        let mut cs = t.chars();
                        match (cs.next(), cs.next()) {
                            (Some(c), None) if c.is_alphanumeric() || c == '$' || c == '_' => {
                                if alphabet.contains(&c) {
                                    return Err(syntax(line, format!("symbol '{c}' declared twice")));
                                }
                                alphabet.push(c);
                            }
                            _ => return Err(syntax(line, format!("invalid symbol '{t}'"))),
                        }
                    }
                }
                "input" => match rest {
                    [w] if input.is_none() => input = Some((line, w.to_string())),
                    _ => return Err(syntax(line, "expected 'input <word>' once")),
                },
                "delta" => deltas.push((line, rest.iter().map(|s| s.to_string()).collect())),
                other => return Err(syntax(line, format!("unexpected '{other}'"))),
            }
        }
        let name = name.ok_or_else(|| syntax(1, "missing 'atm <name>'"))?;
        if states.is_empty() {
            return Err(syntax(1, "no states declared"));
        }
        let (input_line, word) = input.ok_or_else(|| syntax(1, "missing 'input <word>'"))?;
        let sym = |line: usize, s: &str| -> Result<usize, AtmError> {
            let mut cs = s.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => alphabet
                    .iter()
                    .position(|&a| a == c)
                    .ok_or_else(|| syntax(line, format!("unknown symbol '{c}'"))),
                _ => Err(syntax(line, format!("unknown symbol '{s}'"))),
            }
        };
        let state = |line: usize, s: &str| -> Result<usize, AtmError> {
            states
                .iter()
                .position(|(n, _)| n == s)
                .ok_or_else(|| syntax(line, format!("unknown state '{s}'")))
        };
        let input = word
            .chars()
            .map(|c| sym(input_line, &c.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut delta: BTreeMap<(usize, usize), Vec<Move>> = BTreeMap::new();
        for (line, toks) in deltas {
            let (q, a, moves) = match toks.as_slice() {
                [q, a, arrow, moves @ ..] if arrow == "->" => (q, a, moves),
                _ => return Err(syntax(line, "expected 'delta <state> <symbol> -> (<state> <symbol> <L|R>)+'")),
            };
            let key = (state(line, q)?, sym(line, a)?);
            if states[key.0].1.halting() {
                return Err(syntax(line, format!("halting state '{q}' cannot have transitions")));
            }
            if delta.contains_key(&key) {
                return Err(syntax(line, format!("transitions for ({q},{a}) declared twice")));
            }
            let mut list = Vec::new();
            let mut rest = moves;
            while !rest.is_empty() {
                match rest {
                    [open, q2, b, d, close, tail @ ..] if open == "(" && close == ")" => {
                        let dir = match d.as_str() {
                            "L" => Dir::L,
                            "R" => Dir::R,
                            _ => return Err(syntax(line, format!("direction must be L or R, found '{d}'"))),
                        };
                        let m = Move {
                            state: state(line, q2)?,
                            symbol: sym(line, b)?,
                            dir,
                        };
                        if list.contains(&m) {
                            return Err(syntax(line, "duplicate transition"));
                        }
                        list.push(m);
                        rest = tail;
                    }
                    _ => return Err(syntax(line, "malformed transition, expected (<state> <symbol> <L|R>)")),
                }
            }
            if list.is_empty() {
                return Err(syntax(line, "at least one transition expected"));
            }
            delta.insert(key, list);
        }
        if input.is_empty() {
            return Err(syntax(input_line, "the input word must not be empty"));
        }
        Ok(Atm {
            name,
            states,
            alphabet,
            input,
            delta,
        })
    }

    pub fn moves(&self, state: usize, symbol: usize) -> &[Move] {
        self.delta.get(&(state, symbol)).map_or(&[], |v| v.as_slice())
    }

    fn kind(&self, state: usize) -> StateKind {
        self.states[state].1
    }

    fn off_tape(&self, c: &Config, m: &Move) -> AtmError {
        AtmError::OffTape {
            state: self.states[c.state].0.clone(),
            symbol: self.alphabet[c.tape[c.head]],
            cell: c.head + 1,
            dir: m.dir,
        }
    }

    fn step(&self, c: &Config, m: &Move) -> Option<Config> {
        let head = match m.dir {
            Dir::L => c.head.checked_sub(1)?,
            Dir::R => Some(c.head + 1).filter(|&h| h < c.tape.len())?,
        };
        let mut tape = c.tape.clone();
        tape[c.head] = m.symbol;
        Some(Config {
            state: m.state,
            tape,
            head,
        })
    }

    /// Configurations reachable from the initial one, or the first move that
    /// leaves the tape.
    fn reachable(&self) -> Result<(Vec<Config>, Vec<Vec<usize>>), AtmError> {
        let start = Config {
            state: 0,
            tape: self.input.clone(),
            head: 0,
        };
        let mut index: HashMap<Config, usize> = HashMap::from([(start.clone(), 0)]);
        let mut configs = vec![start];
        let mut succ: Vec<Vec<usize>> = Vec::new();
        let mut next = 0;
        while next < configs.len() {
            let c = configs[next].clone();
            let mut out = Vec::new();
            if !self.kind(c.state).halting() {
                for m in self.moves(c.state, c.tape[c.head]) {
                    let d = self.step(&c, m).ok_or_else(|| self.off_tape(&c, m))?;
                    let id = *index.entry(d.clone()).or_insert_with(|| {
                        configs.push(d);
                        configs.len() - 1
                    });
                    out.push(id);
                }
            }
            succ.push(out);
            next += 1;
        }
        Ok((configs, succ))
    }

    /// Direct evaluation: least fixpoint of accepting configurations, where
    /// an existential configuration needs one accepting successor and a
    /// universal one needs at least one successor, all accepting.
    pub fn accepts(&self) -> Result<bool, AtmError> {
        let (configs, succ) = self.reachable()?;
        let mut acc: Vec<bool> = configs
            .iter()
            .map(|c| self.kind(c.state) == StateKind::Accepting)
            .collect();
        loop {
            let mut changed = false;
            for i in 0..configs.len() {
                if acc[i] {
                    continue;
                }
                let s = &succ[i];
                let now = match self.kind(configs[i].state) {
                    StateKind::Existential => s.iter().any(|&j| acc[j]),
                    StateKind::Universal => !s.is_empty() && s.iter().all(|&j| acc[j]),
                    _ => false,
                };
                if now {
                    acc[i] = true;
                    changed = true;
                }
            }
            if !changed {
                return Ok(acc[0]);
            }
        }
    }

    fn cells(&self) -> usize {
        self.input.len()
    }

    /// True if `m` taken at cell `k` (0-based) leaves the tape.
    fn leaves_tape(&self, k: usize, m: &Move) -> bool {
        match m.dir {
            Dir::L => k == 0,
            Dir::R => k + 1 == self.cells(),
        }
    }

    fn move_name(&self, m: &Move) -> String {
        format!("{}.{}.{}", self.states[m.state].0, self.alphabet[m.symbol], m.dir)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Config {
    state: usize,
    tape: Vec<usize>,
    head: usize,
}

struct Agents {
    i: AgentId,
    p: AgentId,
    c: Vec<AgentId>,
}

fn add_agents(b: &mut NegotiationBuilder, cells: usize) -> Result<Agents, ModelError> {
    let i = b.add_agent("I")?;
    let p = b.add_agent("P")?;
    let c = (1..=cells)
        .map(|k| b.add_agent(&format!("C{k}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Agents { i, p, c })
}

fn target_cell(k: usize, dir: Dir) -> usize {
    match dir {
        Dir::L => k - 1,
        Dir::R => k + 1,
    }
}

/// Encoding with one atom `s.q.α.k` per configuration fragment, where the
/// internal state agent `I`, the head agent `P` and the cell agents `C_k`
/// move nondeterministically to every atom consistent with their own part
/// of the next configuration. Every reachable marking enables at most one
/// atom. Atoms of existential states belong to Player 1.
pub fn encode_nondeterministic(atm: &Atm) -> Result<Arena, AtmError> {
    atm.reachable()?;
    let (nq, na, n) = (atm.states.len(), atm.alphabet.len(), atm.cells());
    let mut b = NegotiationBuilder::new(&format!("{}-nd", atm.name));
    let ag = add_agents(&mut b, n)?;
    let all: Vec<AgentId> = std::iter::once(ag.i).chain([ag.p]).chain(ag.c.iter().copied()).collect();
    let init = b.add_atom("init", &all, &["start"])?;
    let mut s = vec![AtomId(0); nq * na * n];
    let id = |q: usize, a: usize, k: usize| (q * na + a) * n + k;
    let mut player1 = Vec::new();
    for q in 0..nq {
        for a in 0..na {
            for k in 0..n {
                let outcomes: Vec<String> = match atm.kind(q) {
                    StateKind::Accepting => vec!["acc".into()],
                    StateKind::Rejecting => vec!["rej".into()],
                    _ if atm.moves(q, a).is_empty() => vec!["stuck".into()],
                    _ => atm.moves(q, a).iter().map(|m| atm.move_name(m)).collect(),
                };
                let name = format!("s.{}.{}.{}", atm.states[q].0, atm.alphabet[a], k + 1);
                let atom = b.add_atom(&name, &[ag.i, ag.p, ag.c[k]], &outcomes)?;
                if atm.kind(q) == StateKind::Existential {
                    player1.push(atom);
                }
                s[id(q, a, k)] = atom;
            }
        }
    }
    let nf = b.add_atom("nf", &all, &["end"])?;
    b.set_initial(init)?;
    b.set_final(nf)?;

    let state_atoms = |q: usize| -> Vec<AtomId> {
        (0..na).flat_map(|a| (0..n).map(move |k| (a, k))).map(|(a, k)| s[id(q, a, k)]).collect()
    };
    let cell_atoms = |k: usize| -> Vec<AtomId> {
        (0..nq).flat_map(|q| (0..na).map(move |a| (q, a))).map(|(q, a)| s[id(q, a, k)]).collect()
    };
    let symbol_cell_atoms = |a: usize, k: usize| -> Vec<AtomId> {
        let mut v: Vec<AtomId> = (0..nq).map(|q| s[id(q, a, k)]).collect();
        v.push(nf);
        v
    };

    let start = Outcome(0);
    b.add_arc(init, ag.i, start, &state_atoms(0))?;
    b.add_arc(init, ag.p, start, &cell_atoms(0))?;
    for k in 0..n {
        b.add_arc(init, ag.c[k], start, &symbol_cell_atoms(atm.input[k], k))?;
    }
    for q in 0..nq {
        for a in 0..na {
            for k in 0..n {
                let atom = s[id(q, a, k)];
                let ck = ag.c[k];
                match atm.kind(q) {
                    StateKind::Accepting => {
                        for x in [ag.i, ag.p, ck] {
                            b.add_arc(atom, x, start, &[nf])?;
                        }
                    }
                    _ if atm.kind(q).halting() || atm.moves(q, a).is_empty() => {
                        for x in [ag.i, ag.p, ck] {
                            b.add_arc(atom, x, start, &[atom])?;
                        }
                    }
                    _ => {
                        for (r, m) in atm.moves(q, a).iter().enumerate() {
                            let r = Outcome(r as u32);
                            if atm.leaves_tape(k, m) {
                                // Never reachable: checked above.
                                for x in [ag.i, ag.p, ck] {
                                    b.add_arc(atom, x, r, &[atom])?;
                                }
                                continue;
                            }
                            b.add_arc(atom, ag.i, r, &state_atoms(m.state))?;
                            b.add_arc(atom, ag.p, r, &cell_atoms(target_cell(k, m.dir)))?;
                            b.add_arc(atom, ck, r, &symbol_cell_atoms(m.symbol, k))?;
                        }
                    }
                }
            }
        }
    }
    Ok(Arena::with_player1(b.build()?, &player1))
}

/// Deterministic encoding. After a move into cell `j`, the state and head
/// agents meet at `h.q.j`, where Player 1 guesses the symbol in cell `j`,
/// and the head agent then meets the cell agent at `c.γ.j`, where Player 1
/// guesses the state. Wrong guesses deadlock. On acceptance the head agent
/// sweeps the tape through `sweep.j`, releasing each cell agent to `nf`
/// with the extra outcome `.halt` of `c.γ.j`.
pub fn encode_deterministic(atm: &Atm) -> Result<Arena, AtmError> {
    atm.reachable()?;
    let (nq, na, n) = (atm.states.len(), atm.alphabet.len(), atm.cells());
    let mut b = NegotiationBuilder::new(&format!("{}-det", atm.name));
    let ag = add_agents(&mut b, n)?;
    let all: Vec<AgentId> = std::iter::once(ag.i).chain([ag.p]).chain(ag.c.iter().copied()).collect();
    let init = b.add_atom("init", &all, &["start"])?;
    let mut player1 = Vec::new();

    let sid = |q: usize, a: usize, k: usize| (q * na + a) * n + k;
    let mut s = vec![AtomId(0); nq * na * n];
    for q in 0..nq {
        for a in 0..na {
            for k in 0..n {
                let outcomes: Vec<String> = match atm.kind(q) {
                    StateKind::Accepting => vec!["acc".into()],
                    StateKind::Rejecting => vec!["rej".into()],
                    _ if atm.moves(q, a).is_empty() => vec!["stuck".into()],
                    _ => atm.moves(q, a).iter().map(|m| atm.move_name(m)).collect(),
                };
                let name = format!("s.{}.{}.{}", atm.states[q].0, atm.alphabet[a], k + 1);
                let atom = b.add_atom(&name, &[ag.i, ag.p, ag.c[k]], &outcomes)?;
                if atm.kind(q) == StateKind::Existential {
                    player1.push(atom);
                }
                s[sid(q, a, k)] = atom;
            }
        }
    }
    let symbols: Vec<String> = atm.alphabet.iter().map(|c| c.to_string()).collect();
    let mut state_names: Vec<String> = atm.states.iter().map(|(q, _)| q.clone()).collect();
    let mut h = vec![AtomId(0); nq * n];
    for q in 0..nq {
        for k in 0..n {
            let atom = b.add_atom(&format!("h.{}.{}", atm.states[q].0, k + 1), &[ag.i, ag.p], &symbols)?;
            player1.push(atom);
            h[q * n + k] = atom;
        }
    }
    state_names.push(".halt".into());
    let mut c = vec![AtomId(0); na * n];
    for a in 0..na {
        for k in 0..n {
            let atom = b.add_atom(
                &format!("c.{}.{}", atm.alphabet[a], k + 1),
                &[ag.p, ag.c[k]],
                &state_names,
            )?;
            player1.push(atom);
            c[a * n + k] = atom;
        }
    }
    let mut sweep = Vec::with_capacity(n);
    for k in 0..n {
        let atom = b.add_atom(&format!("sweep.{}", k + 1), &[ag.p], &symbols)?;
        player1.push(atom);
        sweep.push(atom);
    }
    let nf = b.add_atom("nf", &all, &["end"])?;
    b.set_initial(init)?;
    b.set_final(nf)?;

    let start = Outcome(0);
    b.add_arc(init, ag.i, start, &[h[0]])?;
    b.add_arc(init, ag.p, start, &[h[0]])?;
    for k in 0..n {
        b.add_arc(init, ag.c[k], start, &[c[atm.input[k] * n + k]])?;
    }
    for q in 0..nq {
        for a in 0..na {
            for k in 0..n {
                let atom = s[sid(q, a, k)];
                let ck = ag.c[k];
                match atm.kind(q) {
                    StateKind::Accepting => {
                        b.add_arc(atom, ag.i, start, &[nf])?;
                        b.add_arc(atom, ag.p, start, &[sweep[0]])?;
                        b.add_arc(atom, ck, start, &[c[a * n + k]])?;
                    }
                    _ if atm.kind(q).halting() || atm.moves(q, a).is_empty() => {
                        for x in [ag.i, ag.p, ck] {
                            b.add_arc(atom, x, start, &[atom])?;
                        }
                    }
                    _ => {
                        for (r, m) in atm.moves(q, a).iter().enumerate() {
                            let r = Outcome(r as u32);
                            if atm.leaves_tape(k, m) {
                                for x in [ag.i, ag.p, ck] {
                                    b.add_arc(atom, x, r, &[atom])?;
                                }
                                continue;
                            }
                            let j = target_cell(k, m.dir);
                            b.add_arc(atom, ag.i, r, &[h[m.state * n + j]])?;
                            b.add_arc(atom, ag.p, r, &[h[m.state * n + j]])?;
                            b.add_arc(atom, ck, r, &[c[m.symbol * n + k]])?;
                        }
                    }
                }
            }
        }
    }
    for q in 0..nq {
        for k in 0..n {
            for g in 0..na {
                let r = Outcome(g as u32);
                b.add_arc(h[q * n + k], ag.i, r, &[s[sid(q, g, k)]])?;
                b.add_arc(h[q * n + k], ag.p, r, &[c[g * n + k]])?;
            }
        }
    }
    for g in 0..na {
        for k in 0..n {
            let atom = c[g * n + k];
            for q in 0..nq {
                let r = Outcome(q as u32);
                b.add_arc(atom, ag.p, r, &[s[sid(q, g, k)]])?;
                b.add_arc(atom, ag.c[k], r, &[s[sid(q, g, k)]])?;
            }
            let halt = Outcome(nq as u32);
            let next = if k + 1 < n { sweep[k + 1] } else { nf };
            b.add_arc(atom, ag.p, halt, &[next])?;
            b.add_arc(atom, ag.c[k], halt, &[nf])?;
        }
    }
    for k in 0..n {
        for g in 0..na {
            b.add_arc(sweep[k], ag.p, Outcome(g as u32), &[c[g * n + k]])?;
        }
    }
    Ok(Arena::with_player1(b.build()?, &player1))
}
