//! Line-oriented system definition files.
//!
//! ```text
//! # string sorting
//! alphabet: abcde
//! rule 1: ba -> ab
//! rule 2: ca -> ac
//! initial: edcba, abced
//! goal: abcde
//! strategy: lowest            # or: priority 3, 1, 2
//! prob edcba: 1=0.5, 5=0.5    # optional stochastic control rows
//! ```
//!
//! `prob` weights may carry a `/h` or `/c` suffix to force the halt flag of
//! that outcome; otherwise it halts iff the result is a goal state.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::probabilistic::StochasticControl;
use crate::rules::{Alphabet, ConflictStrategy, Decision, Production, ProductionSystemDef, RuleId};

#[derive(Debug, Clone, PartialEq)]
pub struct ControlRow {
    pub line: usize,
    pub condition: String,
    pub weights: Vec<(RuleId, f64, Option<Decision>)>,
}

#[derive(Debug, Clone)]
pub struct SystemFile {
    pub system: ProductionSystemDef,
    pub control_rows: Vec<ControlRow>,
}

impl SystemFile {
    /// Stochastic control declared by the `prob` lines, if any.
    pub fn control(&self) -> Result<Option<StochasticControl>> {
        if self.control_rows.is_empty() {
            return Ok(None);
        }
        let mut control = StochasticControl::default();
        for row in &self.control_rows {
            control
                .insert_weights(&self.system, &row.condition, &row.weights)
                .map_err(|e| Error::parse(row.line, e.to_string()))?;
        }
        Ok(Some(control))
    }
}

pub fn read_system_file(path: impl AsRef<Path>) -> Result<SystemFile> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::parse(0, format!("cannot read {}: {e}", path.display())))?;
    parse_system(&text)
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

pub fn parse_system(text: &str) -> Result<SystemFile> {
    let mut alphabet: Option<Alphabet> = None;
    let mut rules: Vec<Production> = Vec::new();
    let mut initial: Vec<String> = Vec::new();
    let mut goal: Vec<String> = Vec::new();
    let mut strategy = ConflictStrategy::LowestRuleId;
    let mut control_rows = Vec::new();
    let mut seen_ids = BTreeSet::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, body) = content
            .split_once(':')
            .ok_or_else(|| Error::parse(line, "expected `<key>: <value>`"))?;
        let head = head.trim();
        let body = body.trim();
        let check = |s: &str| -> Result<()> {
            match &alphabet {
                Some(a) => a.check_string(s).map_err(|e| Error::parse(line, e.to_string())),
                None => Err(Error::parse(line, "alphabet must be declared first")),
            }
        };

        if head == "alphabet" {
            if alphabet.is_some() {
                return Err(Error::parse(line, "alphabet declared twice"));
            }
            let symbols = body.chars().filter(|c| !c.is_whitespace() && *c != ',');
            alphabet = Some(Alphabet::new(symbols).map_err(|e| Error::parse(line, e.to_string()))?);
        } else if let Some(id) = head.strip_prefix("rule") {
            let id: RuleId = id.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
            if !seen_ids.insert(id) {
                return Err(Error::parse(line, format!("duplicate rule id {id}")));
            }
            let (pre, act) = body
                .split_once("->")
                .ok_or_else(|| Error::parse(line, "expected `<pre> -> <act>`"))?;
            let (pre, act) = (pre.trim(), act.trim());
            if pre.is_empty() || act.is_empty() {
                return Err(Error::parse(line, "precondition and action must be nonempty"));
            }
            check(pre)?;
            check(act)?;
            rules.push(Production::new(id.0, pre, act));
        } else if head == "initial" {
            for s in split_list(body) {
                check(s)?;
                initial.push(s.to_string());
            }
        } else if head == "goal" {
            for s in split_list(body) {
                check(s)?;
                goal.push(s.to_string());
            }
        } else if head == "strategy" {
            strategy = match body.split_once(char::is_whitespace) {
                None if body == "lowest" => ConflictStrategy::LowestRuleId,
                Some(("priority", order)) => ConflictStrategy::Priority(
                    split_list(order)
                        .map(|s| s.parse())
                        .collect::<Result<_>>()
                        .map_err(|e| Error::parse(line, e.to_string()))?,
                ),
                _ => return Err(Error::parse(line, format!("unknown strategy {body:?}"))),
            };
        } else if let Some(condition) = head.strip_prefix("prob") {
            let condition = condition.trim();
            check(condition)?;
            let mut weights = Vec::new();
            for item in split_list(body) {
                let (id, p) = item
                    .split_once('=')
                    .ok_or_else(|| Error::parse(line, format!("expected `<rule>=<p>`, got {item:?}")))?;
                let id: RuleId = id.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
                let (p, decision) = match p.trim().split_once('/') {
                    Some((p, d)) => (
                        p,
                        Some(d.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?),
                    ),
                    None => (p.trim(), None),
                };
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad probability {p:?}")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::parse(line, format!("probability {p} outside [0, 1]")));
                }
                weights.push((id, p, decision));
            }
            control_rows.push(ControlRow {
                line,
                condition: condition.to_string(),
                weights,
            });
        } else {
            return Err(Error::parse(line, format!("unknown key {head:?}")));
        }
    }

    let end = last_line.max(1);
    let alphabet = alphabet.ok_or_else(|| Error::parse(end, "missing alphabet"))?;
    if rules.is_empty() {
        return Err(Error::parse(end, "no rules declared"));
    }
    if initial.is_empty() {
        return Err(Error::parse(end, "no initial states declared"));
    }
    let system = ProductionSystemDef::new(alphabet, rules, initial, goal, strategy)
        .map_err(|e| Error::parse(end, e.to_string()))?;
    Ok(SystemFile { system, control_rows })
}

/// Renders a system back into the file grammar.
pub fn render_system(system: &ProductionSystemDef) -> String {
    let mut out = format!("alphabet: {}\n", system.alphabet());
    for r in system.rules() {
        out.push_str(&format!("rule {}: {} -> {}\n", r.id.0, r.precondition, r.action));
    }
    out.push_str(&format!("initial: {}\n", system.initial_states().join(", ")));
    if !system.goal_states().is_empty() {
        let goals: Vec<&str> = system.goal_states().iter().map(String::as_str).collect();
        out.push_str(&format!("goal: {}\n", goals.join(", ")));
    }
    if let ConflictStrategy::Priority(order) = system.conflict_strategy() {
        let order: Vec<String> = order.iter().map(|id| id.0.to_string()).collect();
        out.push_str(&format!("strategy: priority {}\n", order.join(", ")));
    }
    out
}
