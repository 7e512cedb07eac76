//! Classical production systems over string working memories.
//!
//! A rule rewrites one contiguous occurrence of its precondition into its
//! action. Each cycle matches every rule against the memory, resolves the
//! conflict set down to one rule and fires it, until a goal state is reached
//! through a firing, nothing matches, or the step budget runs out.

use std::collections::BTreeSet;
use std::fmt;

use crate::csvutil;
use crate::error::{Error, Result};

/// Ordered set of atomic symbols. The order fixes the binary codes used by
/// the quantum operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::InvalidDefinition("alphabet is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for &s in &symbols {
            if !seen.insert(s) {
                return Err(Error::InvalidDefinition(format!(
                    "symbol {s:?} appears twice in the alphabet"
                )));
            }
        }
        Ok(Alphabet { symbols })
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: char) -> Option<usize> {
        self.symbols.iter().position(|&s| s == symbol)
    }

    pub fn contains(&self, symbol: char) -> bool {
        self.index_of(symbol).is_some()
    }

    /// Checks that every character of `s` is a symbol of the alphabet.
    pub fn check_string(&self, s: &str) -> Result<()> {
        match s.chars().find(|&c| !self.contains(c)) {
            Some(symbol) => Err(Error::UnknownSymbol { symbol }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.symbols {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// 1-based rule label, rendered as `R<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub u32);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

impl std::str::FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let digits = s.strip_prefix('R').or_else(|| s.strip_prefix('r')).unwrap_or(s);
        match digits.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(RuleId(n)),
            _ => Err(Error::format("rule id", format!("{s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Production {
    pub id: RuleId,
    pub precondition: String,
    pub action: String,
    /// Set on rules produced by [`Production::inverted`].
    pub inverse: bool,
}

impl Production {
    pub fn new(id: u32, precondition: impl Into<String>, action: impl Into<String>) -> Self {
        Production {
            id: RuleId(id),
            precondition: precondition.into(),
            action: action.into(),
            inverse: false,
        }
    }

    /// The rule mapping the action back onto the precondition.
    pub fn inverted(&self) -> Production {
        Production {
            id: self.id,
            precondition: self.action.clone(),
            action: self.precondition.clone(),
            inverse: !self.inverse,
        }
    }

    /// `R3` or `R3^-1`.
    pub fn label(&self) -> String {
        if self.inverse {
            format!("{}^-1", self.id)
        } else {
            self.id.to_string()
        }
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.label(), self.precondition, self.action)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum ConflictStrategy {
    #[default]
    LowestRuleId,
    /// Rules earlier in the list win; unlisted rules rank after all listed
    /// ones, by id.
    Priority(Vec<RuleId>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Continue,
    Halt,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Continue => "continue",
            Decision::Halt => "halt",
        }
    }
}

impl std::str::FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "continue" | "c" => Ok(Decision::Continue),
            "halt" | "h" => Ok(Decision::Halt),
            other => Err(Error::format("decision", format!("{other:?}"))),
        }
    }
}

/// The tuple of alphabet, initial states, goal states, rules and control.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionSystemDef {
    alphabet: Alphabet,
    rules: Vec<Production>,
    initial_states: Vec<String>,
    goal_states: BTreeSet<String>,
    conflict_strategy: ConflictStrategy,
}

impl ProductionSystemDef {
    pub fn new(
        alphabet: Alphabet,
        rules: Vec<Production>,
        initial_states: Vec<String>,
        goal_states: impl IntoIterator<Item = String>,
        conflict_strategy: ConflictStrategy,
    ) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidDefinition("rule set is empty".into()));
        }
        if initial_states.is_empty() {
            return Err(Error::InvalidDefinition("no initial states".into()));
        }
        let mut ids = BTreeSet::new();
        for rule in &rules {
            if rule.id.0 == 0 {
                return Err(Error::InvalidDefinition("rule ids start at 1".into()));
            }
            if !ids.insert(rule.id) {
                return Err(Error::InvalidDefinition(format!("duplicate rule id {}", rule.id)));
            }
            if rule.precondition.is_empty() || rule.action.is_empty() {
                return Err(Error::InvalidDefinition(format!(
                    "{} has an empty precondition or action",
                    rule.id
                )));
            }
            alphabet.check_string(&rule.precondition)?;
            alphabet.check_string(&rule.action)?;
        }
        let goal_states: BTreeSet<String> = goal_states.into_iter().collect();
        for s in initial_states.iter().chain(goal_states.iter()) {
            alphabet.check_string(s)?;
        }
        if let ConflictStrategy::Priority(order) = &conflict_strategy {
            if let Some(missing) = order.iter().find(|id| !ids.contains(id)) {
                return Err(Error::UnknownRule(*missing));
            }
        }
        Ok(ProductionSystemDef {
            alphabet,
            rules,
            initial_states,
            goal_states,
            conflict_strategy,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Production] {
        &self.rules
    }

    pub fn initial_states(&self) -> &[String] {
        &self.initial_states
    }

    pub fn goal_states(&self) -> &BTreeSet<String> {
        &self.goal_states
    }

    pub fn conflict_strategy(&self) -> &ConflictStrategy {
        &self.conflict_strategy
    }

    pub fn is_goal(&self, memory: &str) -> bool {
        self.goal_states.contains(memory)
    }

    pub fn rule(&self, id: RuleId) -> Option<&Production> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Position of the rule in declaration order.
    pub fn rule_index(&self, id: RuleId) -> Option<usize> {
        self.rules.iter().position(|r| r.id == id)
    }

    pub fn with_initial_states(&self, initial_states: Vec<String>) -> Result<Self> {
        ProductionSystemDef::new(
            self.alphabet.clone(),
            self.rules.clone(),
            initial_states,
            self.goal_states.iter().cloned(),
            self.conflict_strategy.clone(),
        )
    }
}

/// Ids of every rule whose precondition occurs in `memory`, ascending.
pub fn match_rules(memory: &str, rules: &[Production]) -> Vec<RuleId> {
    let mut ids: Vec<RuleId> = rules
        .iter()
        .filter(|r| memory.contains(r.precondition.as_str()))
        .map(|r| r.id)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

pub fn resolve_conflict(conflict: &[RuleId], strategy: &ConflictStrategy) -> Option<RuleId> {
    match strategy {
        ConflictStrategy::LowestRuleId => conflict.iter().min().copied(),
        ConflictStrategy::Priority(order) => order
            .iter()
            .find(|id| conflict.contains(id))
            .copied()
            .or_else(|| conflict.iter().min().copied()),
    }
}

/// Replaces the leftmost occurrence of the precondition with the action.
pub fn apply_rule(memory: &str, rule: &Production) -> Result<String> {
    let at = memory
        .find(rule.precondition.as_str())
        .ok_or_else(|| no_match(memory, rule))?;
    apply_rule_at(memory, rule, at)
}

/// Replaces the occurrence of the precondition starting at byte `at`.
pub fn apply_rule_at(memory: &str, rule: &Production, at: usize) -> Result<String> {
    let end = at + rule.precondition.len();
    if memory.get(at..end) != Some(rule.precondition.as_str()) {
        return Err(no_match(memory, rule));
    }
    let mut out = String::with_capacity(memory.len() - rule.precondition.len() + rule.action.len());
    out.push_str(&memory[..at]);
    out.push_str(&rule.action);
    out.push_str(&memory[end..]);
    Ok(out)
}

fn no_match(memory: &str, rule: &Production) -> Error {
    Error::NoMatch {
        rule: rule.id,
        precondition: rule.precondition.clone(),
        memory: memory.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub iteration: usize,
    pub memory: String,
    pub conflict_set: Vec<RuleId>,
    pub fired: Option<RuleId>,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    GoalReached,
    NoRuleApplicable,
    StepLimit,
    /// A stochastic control chose to halt outside the goal set.
    Halted,
}

/// One row per cycle. Rows that fire a rule continue; the last row records
/// the memory the run stopped at and carries the halt decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn fired(&self) -> Vec<RuleId> {
        self.steps.iter().filter_map(|s| s.fired).collect()
    }

    pub fn final_memory(&self) -> &str {
        self.steps.last().map(|s| s.memory.as_str()).unwrap_or_default()
    }

    pub fn firings(&self) -> usize {
        self.steps.iter().filter(|s| s.fired.is_some()).count()
    }
}

pub fn run_forward(system: &ProductionSystemDef, initial: &str, step_limit: usize) -> Result<Trace> {
    system.alphabet().check_string(initial)?;
    let mut memory = initial.to_string();
    let mut steps = Vec::new();
    let mut firings = 0;
    loop {
        let conflict_set = match_rules(&memory, system.rules());
        let in_goal = system.is_goal(&memory);
        let outcome = if in_goal || conflict_set.is_empty() {
            // A goal only counts when something was achieved by firing, or
            // when the control would otherwise have fired from it.
            if in_goal && (firings > 0 || !conflict_set.is_empty()) {
                Some(Outcome::GoalReached)
            } else {
                Some(Outcome::NoRuleApplicable)
            }
        } else if firings >= step_limit {
            Some(Outcome::StepLimit)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            steps.push(TraceStep {
                iteration: steps.len(),
                memory,
                conflict_set,
                fired: None,
                decision: Decision::Halt,
            });
            return Ok(Trace { steps, outcome });
        }
        let chosen = resolve_conflict(&conflict_set, system.conflict_strategy()).expect("conflict set is nonempty");
        let rule = system.rule(chosen).ok_or(Error::UnknownRule(chosen))?;
        let next = apply_rule(&memory, rule)?;
        steps.push(TraceStep {
            iteration: steps.len(),
            memory,
            conflict_set,
            fired: Some(chosen),
            decision: Decision::Continue,
        });
        memory = next;
        firings += 1;
    }
}

const TRACE_HEADER: [&str; 5] = ["iteration", "memory", "conflict_set", "fired", "decision"];

fn join_ids(ids: &[RuleId]) -> String {
    ids.iter().map(RuleId::to_string).collect::<Vec<_>>().join(";")
}

impl Trace {
    /// CSV with columns `iteration,memory,conflict_set,fired,decision`.
    /// Conflict sets are `;`-joined; an empty `fired` means no rule fired.
    pub fn to_csv(&self) -> String {
        trace_steps_to_csv(&self.steps)
    }
}

pub fn trace_steps_to_csv(steps: &[TraceStep]) -> String {
    csvutil::write_rows(
        &TRACE_HEADER,
        steps.iter().map(|s| {
            [
                s.iteration.to_string(),
                s.memory.clone(),
                join_ids(&s.conflict_set),
                s.fired.map(|r| r.to_string()).unwrap_or_default(),
                s.decision.as_str().to_string(),
            ]
        }),
    )
}

pub fn trace_steps_from_csv(text: &str) -> Result<Vec<TraceStep>> {
    const WHAT: &str = "trace csv";
    csvutil::read_rows(WHAT, text, &TRACE_HEADER)?
        .iter()
        .map(|rec| {
            let conflict_set = rec[2]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<RuleId>>>()?;
            let fired = match &rec[3] {
                "" => None,
                s => Some(s.parse()?),
            };
            Ok(TraceStep {
                iteration: csvutil::field(WHAT, rec, 0)?,
                memory: rec[1].to_string(),
                conflict_set,
                fired,
                decision: rec[4].parse()?,
            })
        })
        .collect()
}

/// Verdict of a pairwise overlap check together with the clashing pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapReport {
    pub ok: bool,
    pub offending: Vec<(RuleId, RuleId)>,
}

fn overlapping_pairs(rules: &[Production], key: impl Fn(&Production) -> &str) -> OverlapReport {
    let mut offending = Vec::new();
    for (i, a) in rules.iter().enumerate() {
        for b in &rules[i + 1..] {
            if key(a) == key(b) {
                offending.push((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    offending.sort_unstable();
    OverlapReport {
        ok: offending.is_empty(),
        offending,
    }
}

/// Deterministic: no two rules share a precondition.
pub fn check_deterministic(rules: &[Production]) -> OverlapReport {
    overlapping_pairs(rules, |r| &r.precondition)
}

/// Reversible: no two rules share an action.
pub fn check_reversible(rules: &[Production]) -> OverlapReport {
    overlapping_pairs(rules, |r| &r.action)
}
