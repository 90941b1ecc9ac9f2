//! The line-oriented `.neg` format.
//!
//! ```text
//! negotiation <name>
//! agents <id>+
//! atom <id> [initial|final] parties <agent>+ outcomes <outcome>+
//! arc <atom> <agent> <outcome> -> <atom>+
//! player1 <atom>+            # or: coalition <agent>+
//! goal <agent> (<atom> <outcome>)*
//! ```
//!
//! `#` starts a comment. Declarations may appear in any order after the
//! header line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::coalition::{partition_from_coalition, Coalition};
use crate::model::{
    AgentId, Arena, AtomId, Goals, ModelError, NegotiationBuilder, Outcome, ValidationReport,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: {message}")]
    Semantic {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid negotiation:\n{0}")]
    Invalid(ValidationReport),
}

const KEYWORDS: &[&str] = &[
    "negotiation",
    "agents",
    "atom",
    "arc",
    "initial",
    "final",
    "parties",
    "outcomes",
    "->",
    "player1",
    "coalition",
    "goal",
];

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Vec<Vec<Token<'_>>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let mut tokens = Vec::new();
        let mut start: Option<usize> = None;
        for (pos, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push(Token {
                        text: &content[s..pos],
                        line: i + 1,
                        col: content[..s].chars().count() + 1,
                    });
                }
            } else if start.is_none() {
                start = Some(pos);
            }
        }
        if !tokens.is_empty() {
            lines.push(tokens);
        }
    }
    lines
}

fn syntax(tok: &Token<'_>, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: tok.line,
        col: tok.col,
        message: message.into(),
    }
}

fn semantic(tok: &Token<'_>, message: impl Into<String>) -> ParseError {
    ParseError::Semantic {
        line: tok.line,
        col: tok.col,
        message: message.into(),
    }
}

fn identifier<'a>(tok: &Token<'a>) -> Result<&'a str, ParseError> {
    if KEYWORDS.contains(&tok.text) {
        Err(syntax(tok, format!("expected identifier, found keyword '{}'", tok.text)))
    } else {
        Ok(tok.text)
    }
}

/// End-of-line position just after `tok`, for "expected X" errors.
fn after(tok: &Token<'_>) -> Token<'static> {
    Token {
        text: "",
        line: tok.line,
        col: tok.col + tok.text.chars().count(),
    }
}

struct AtomDecl<'a> {
    name: Token<'a>,
    flag: Option<Token<'a>>,
    parties: Vec<Token<'a>>,
    outcomes: Vec<Token<'a>>,
}

struct ArcDecl<'a> {
    atom: Token<'a>,
    agent: Token<'a>,
    outcome: Token<'a>,
    targets: Vec<Token<'a>>,
}

enum Control<'a> {
    Player1(Vec<Token<'a>>),
    Coalition(Vec<Token<'a>>),
}

struct GoalDecl<'a> {
    agent: Token<'a>,
    pairs: Vec<(Token<'a>, Token<'a>)>,
}

#[derive(Default)]
struct Document<'a> {
    name: &'a str,
    agents: Option<Vec<Token<'a>>>,
    atoms: Vec<AtomDecl<'a>>,
    arcs: Vec<ArcDecl<'a>>,
    control: Option<Control<'a>>,
    goals: Vec<GoalDecl<'a>>,
}

fn read_document<'a>(lines: &[Vec<Token<'a>>]) -> Result<Document<'a>, ParseError> {
    let mut doc = Document::default();
    let Some(header) = lines.first() else {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: "expected 'negotiation'".into(),
        });
    };
    if header[0].text != "negotiation" {
        return Err(syntax(&header[0], "expected 'negotiation'"));
    }
    match header.len() {
        1 => return Err(syntax(&after(&header[0]), "expected negotiation name")),
        2 => doc.name = identifier(&header[1])?,
        _ => return Err(syntax(&header[2], "unexpected token after negotiation name")),
    }

    for line in &lines[1..] {
        let head = &line[0];
        let rest = &line[1..];
        match head.text {
            "agents" => {
                if doc.agents.is_some() {
                    return Err(semantic(head, "agents declared twice"));
                }
                if rest.is_empty() {
                    return Err(syntax(&after(head), "expected at least one agent"));
                }
                for t in rest {
                    identifier(t)?;
                }
                doc.agents = Some(rest.to_vec());
            }
            "atom" => doc.atoms.push(read_atom(head, rest)?),
            "arc" => doc.arcs.push(read_arc(head, rest)?),
            "player1" | "coalition" => {
                if doc.control.is_some() {
                    return Err(semantic(head, "only one 'player1' or 'coalition' declaration is allowed"));
                }
                if rest.is_empty() {
                    return Err(syntax(&after(head), "expected at least one identifier"));
                }
                for t in rest {
                    identifier(t)?;
                }
                doc.control = Some(if head.text == "player1" {
                    Control::Player1(rest.to_vec())
                } else {
                    Control::Coalition(rest.to_vec())
                });
            }
            "goal" => {
                let Some(agent) = rest.first() else {
                    return Err(syntax(&after(head), "expected agent"));
                };
                identifier(agent)?;
                let pairs = &rest[1..];
                if pairs.len() % 2 != 0 {
                    return Err(syntax(
                        &after(pairs.last().unwrap()),
                        "expected outcome after atom in goal pair",
                    ));
                }
                let mut decl = GoalDecl {
                    agent: *agent,
                    pairs: Vec::new(),
                };
                for p in pairs.chunks(2) {
                    identifier(&p[0])?;
                    identifier(&p[1])?;
                    decl.pairs.push((p[0], p[1]));
                }
                doc.goals.push(decl);
            }
            "negotiation" => return Err(semantic(head, "negotiation header repeated")),
            other => return Err(syntax(head, format!("unknown declaration '{other}'"))),
        }
    }
    Ok(doc)
}

fn read_atom<'a>(head: &Token<'a>, rest: &[Token<'a>]) -> Result<AtomDecl<'a>, ParseError> {
    let mut it = rest.iter().peekable();
    let name = *it.next().ok_or_else(|| syntax(&after(head), "expected atom name"))?;
    identifier(&name)?;
    let mut flag = None;
    if let Some(t) = it.peek() {
        if t.text == "initial" || t.text == "final" {
            flag = Some(**t);
            it.next();
        }
    }
    let kw = it
        .next()
        .ok_or_else(|| syntax(&after(&name), "expected 'parties'"))?;
    if kw.text != "parties" {
        return Err(syntax(kw, format!("expected 'parties', found '{}'", kw.text)));
    }
    let mut parties = Vec::new();
    let mut last = *kw;
    let mut saw_outcomes = false;
    for t in it.by_ref() {
        last = *t;
        if t.text == "outcomes" {
            saw_outcomes = true;
            break;
        }
        identifier(t)?;
        parties.push(*t);
    }
    if parties.is_empty() {
        return Err(syntax(&after(kw), "expected at least one party"));
    }
    if !saw_outcomes {
        return Err(syntax(&after(&last), "expected 'outcomes'"));
    }
    let mut outcomes = Vec::new();
    for t in it {
        identifier(t)?;
        outcomes.push(*t);
    }
    if outcomes.is_empty() {
        return Err(syntax(&after(&last), "expected at least one outcome"));
    }
    Ok(AtomDecl {
        name,
        flag,
        parties,
        outcomes,
    })
}

fn read_arc<'a>(head: &Token<'a>, rest: &[Token<'a>]) -> Result<ArcDecl<'a>, ParseError> {
    let names = ["atom", "agent", "outcome"];
    let mut prev = *head;
    for (i, what) in names.iter().enumerate() {
        match rest.get(i) {
            Some(t) => {
                identifier(t)?;
                prev = *t;
            }
            None => return Err(syntax(&after(&prev), format!("expected {what}"))),
        }
    }
    match rest.get(3) {
        Some(t) if t.text == "->" => {}
        Some(t) => return Err(syntax(t, format!("expected '->', found '{}'", t.text))),
        None => return Err(syntax(&after(&rest[2]), "expected '->'")),
    }
    let targets = &rest[4..];
    if targets.is_empty() {
        return Err(syntax(&after(&rest[3]), "expected at least one target atom"));
    }
    for t in targets {
        identifier(t)?;
    }
    Ok(ArcDecl {
        atom: rest[0],
        agent: rest[1],
        outcome: rest[2],
        targets: targets.to_vec(),
    })
}

fn model_err(tok: &Token<'_>, e: ModelError) -> ParseError {
    semantic(tok, e.to_string())
}

/// Parses a `.neg` document without checking the negotiation invariants.
///
/// Syntax and reference errors are still reported.
pub fn parse_unvalidated(text: &str) -> Result<Arena, ParseError> {
    let lines = tokenize(text);
    let doc = read_document(&lines)?;
    let header = lines[0][0];

    let mut b = NegotiationBuilder::new(doc.name);
    let Some(agents) = &doc.agents else {
        return Err(semantic(&header, "no 'agents' declaration"));
    };
    for t in agents {
        b.add_agent(t.text).map_err(|e| model_err(t, e))?;
    }
    let agent = |b: &NegotiationBuilder, t: &Token<'_>| {
        b.agent_id(t.text)
            .ok_or_else(|| semantic(t, format!("undeclared agent '{}'", t.text)))
    };

    let mut initial: Option<Token<'_>> = None;
    let mut final_atom: Option<Token<'_>> = None;
    for decl in &doc.atoms {
        let parties = decl
            .parties
            .iter()
            .map(|t| agent(&b, t))
            .collect::<Result<Vec<_>, _>>()?;
        let outcomes: Vec<&str> = decl.outcomes.iter().map(|t| t.text).collect();
        let id = b
            .add_atom(decl.name.text, &parties, &outcomes)
            .map_err(|e| model_err(&decl.name, e))?;
        if let Some(flag) = decl.flag {
            let slot = if flag.text == "initial" {
                &mut initial
            } else {
                &mut final_atom
            };
            if let Some(prev) = slot {
                return Err(semantic(
                    &flag,
                    format!(
                        "two {} atoms: '{}' (line {}) and '{}'",
                        flag.text, prev.text, prev.line, decl.name.text
                    ),
                ));
            }
            *slot = Some(decl.name);
            if flag.text == "initial" {
                b.set_initial(id).expect("atom just added");
            } else {
                b.set_final(id).expect("atom just added");
            }
        }
    }
    if initial.is_none() {
        return Err(semantic(&header, "no initial atom declared"));
    }
    let Some(final_tok) = final_atom else {
        return Err(semantic(&header, "no final atom declared"));
    };

    let atom = |b: &NegotiationBuilder, t: &Token<'_>| {
        b.atom_id(t.text)
            .ok_or_else(|| semantic(t, format!("undeclared atom '{}'", t.text)))
    };
    let outcome = |b: &NegotiationBuilder, n: AtomId, t: &Token<'_>| {
        b.atom(n).outcome_named(t.text).ok_or_else(|| {
            semantic(
                t,
                format!("atom '{}' has no outcome '{}'", b.atom(n).name, t.text),
            )
        })
    };

    for arc in &doc.arcs {
        let n = atom(&b, &arc.atom)?;
        if arc.atom.text == final_tok.text {
            return Err(semantic(&arc.atom, "arcs leaving the final atom are not allowed"));
        }
        let a = agent(&b, &arc.agent)?;
        let r = outcome(&b, n, &arc.outcome)?;
        let targets = arc
            .targets
            .iter()
            .map(|t| atom(&b, t))
            .collect::<Result<Vec<_>, _>>()?;
        b.add_arc(n, a, r, &targets).map_err(|e| model_err(&arc.atom, e))?;
    }

    let mut goals = None;
    if !doc.goals.is_empty() {
        let mut g = Goals::unconstrained(agents.len());
        for decl in &doc.goals {
            let a = agent(&b, &decl.agent)?;
            if g.is_constrained(a) {
                return Err(semantic(&decl.agent, format!("goal for '{}' declared twice", decl.agent.text)));
            }
            let mut pairs = Vec::new();
            for (nt, rt) in &decl.pairs {
                let n = atom(&b, nt)?;
                pairs.push((n, outcome(&b, n, rt)?));
            }
            g.set(a, pairs);
        }
        goals = Some(g);
    }

    let control = match &doc.control {
        None => None,
        Some(Control::Player1(atoms)) => Some(Ok(atoms
            .iter()
            .map(|t| atom(&b, t))
            .collect::<Result<Vec<_>, _>>()?)),
        Some(Control::Coalition(members)) => Some(Err(members
            .iter()
            .map(|t| agent(&b, t))
            .collect::<Result<Vec<_>, _>>()?)),
    };

    let negotiation = b.build().map_err(|e| model_err(&header, e))?;
    let arena = match control {
        None => Arena::new(negotiation),
        Some(Ok(atoms)) => Arena::with_player1(negotiation, &atoms),
        Some(Err(members)) => partition_from_coalition(negotiation, &Coalition::new(members)),
    };
    Ok(arena.with_goals(goals))
}

/// Parses and validates a `.neg` document.
pub fn parse(text: &str) -> Result<Arena, ParseError> {
    let arena = parse_unvalidated(text)?;
    let report = arena.validate();
    if report.is_valid() {
        Ok(arena)
    } else {
        Err(ParseError::Invalid(report))
    }
}

/// Canonical `.neg` text for an arena.
pub fn export(arena: &Arena) -> String {
    let neg = arena.negotiation();
    let mut out = String::new();
    writeln!(out, "negotiation {}", neg.name()).unwrap();
    out.push_str("agents");
    for a in neg.agents() {
        write!(out, " {}", neg.agent_name(a)).unwrap();
    }
    out.push('\n');
    for n in neg.atom_ids() {
        let atom = neg.atom(n);
        write!(out, "atom {}", atom.name).unwrap();
        if n == neg.initial() {
            out.push_str(" initial");
        } else if n == neg.final_atom() {
            out.push_str(" final");
        }
        out.push_str(" parties");
        for &a in &atom.parties {
            write!(out, " {}", neg.agent_name(a)).unwrap();
        }
        out.push_str(" outcomes");
        for o in &atom.outcomes {
            write!(out, " {o}").unwrap();
        }
        out.push('\n');
    }
    for (n, a, r, targets) in neg.triples() {
        if targets.is_empty() {
            continue;
        }
        write!(
            out,
            "arc {} {} {} ->",
            neg.atom_name(n),
            neg.agent_name(a),
            neg.outcome_name(n, r)
        )
        .unwrap();
        for &t in targets {
            write!(out, " {}", neg.atom_name(t)).unwrap();
        }
        out.push('\n');
    }
    if let Some(coalition) = arena.coalition() {
        out.push_str("coalition");
        for &a in coalition {
            write!(out, " {}", neg.agent_name(a)).unwrap();
        }
        out.push('\n');
    } else {
        let p1 = arena.player1_atoms();
        if !p1.is_empty() {
            out.push_str("player1");
            for n in p1 {
                write!(out, " {}", neg.atom_name(n)).unwrap();
            }
            out.push('\n');
        }
    }
    if let Some(goals) = arena.goals() {
        for (a, pairs) in goals.iter() {
            write!(out, "goal {}", neg.agent_name(a)).unwrap();
            for &(n, r) in pairs {
                write!(out, " {} {}", neg.atom_name(n), neg.outcome_name(n, r)).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Resolves a comma- or space-separated agent list against an arena.
pub fn resolve_agents(arena: &Arena, names: &[String]) -> Result<Vec<AgentId>, String> {
    names
        .iter()
        .map(|n| {
            arena
                .negotiation()
                .agent_named(n)
                .ok_or_else(|| format!("unknown agent '{n}'"))
        })
        .collect()
}

/// Resolves atom names against an arena.
pub fn resolve_atoms(arena: &Arena, names: &[String]) -> Result<Vec<AtomId>, String> {
    names
        .iter()
        .map(|n| {
            arena
                .negotiation()
                .atom_named(n)
                .ok_or_else(|| format!("unknown atom '{n}'"))
        })
        .collect()
}

/// Parses a step written as `(atom,outcome)`.
pub fn parse_step(arena: &Arena, text: &str) -> Result<(AtomId, Outcome), String> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("expected '(atom,outcome)', found '{text}'"))?;
    let (atom, outcome) = inner
        .split_once(',')
        .ok_or_else(|| format!("expected '(atom,outcome)', found '{text}'"))?;
    let neg = arena.negotiation();
    let n = neg
        .atom_named(atom.trim())
        .ok_or_else(|| format!("unknown atom '{}'", atom.trim()))?;
    let r = neg
        .atom(n)
        .outcome_named(outcome.trim())
        .ok_or_else(|| format!("atom '{}' has no outcome '{}'", atom.trim(), outcome.trim()))?;
    Ok((n, r))
}
