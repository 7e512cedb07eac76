//! Probability-weighted control.
//!
//! The control table maps a whole working-memory string to a distribution
//! over joint outcomes `(rule, result, decision)`. Expanding every
//! positive-probability outcome gives the computation tree; following one
//! sampled outcome per cycle gives a single run.

use std::collections::{BTreeMap, VecDeque};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csvutil;
use crate::error::{Error, Result};
use crate::rules::{
    apply_rule, match_rules, run_forward, Decision, Outcome, ProductionSystemDef, RuleId, Trace, TraceStep,
};

/// Per-condition probabilities must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlEntry {
    pub rule: RuleId,
    pub result: String,
    pub decision: Decision,
    pub probability: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StochasticControl {
    table: BTreeMap<String, Vec<ControlEntry>>,
}

impl StochasticControl {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one outcome, checking that firing `entry.rule` on `condition`
    /// really yields `entry.result`.
    pub fn insert(&mut self, system: &ProductionSystemDef, condition: &str, entry: ControlEntry) -> Result<()> {
        let rule = system.rule(entry.rule).ok_or(Error::UnknownRule(entry.rule))?;
        let result = apply_rule(condition, rule)?;
        if result != entry.result {
            return Err(Error::InvalidDefinition(format!(
                "{} on {condition:?} yields {result:?}, not {:?}",
                entry.rule, entry.result
            )));
        }
        if !(0.0..=1.0).contains(&entry.probability) {
            return Err(Error::InvalidDefinition(format!(
                "probability {} outside [0, 1]",
                entry.probability
            )));
        }
        self.table.entry(condition.to_string()).or_default().push(entry);
        Ok(())
    }

    /// Adds outcomes given by rule and weight. Results come from firing the
    /// rule; the decision defaults to halting exactly on goal states.
    pub fn insert_weights(
        &mut self,
        system: &ProductionSystemDef,
        condition: &str,
        weights: &[(RuleId, f64, Option<Decision>)],
    ) -> Result<()> {
        for &(id, probability, decision) in weights {
            let rule = system.rule(id).ok_or(Error::UnknownRule(id))?;
            let result = apply_rule(condition, rule)?;
            let decision = decision.unwrap_or(if system.is_goal(&result) {
                Decision::Halt
            } else {
                Decision::Continue
            });
            self.insert(
                system,
                condition,
                ControlEntry {
                    rule: id,
                    result,
                    decision,
                    probability,
                },
            )?;
        }
        Ok(())
    }

    pub fn entries(&self, condition: &str) -> &[ControlEntry] {
        self.table.get(condition).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn conditions(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Uniform choice over the conflict set of every state reachable from
    /// `roots` within `depth` firings.
    pub fn uniform(system: &ProductionSystemDef, roots: &[String], depth: usize) -> Result<Self> {
        let mut control = StochasticControl::new();
        let mut queue: VecDeque<(String, usize)> = roots.iter().map(|r| (r.clone(), 0)).collect();
        while let Some((state, d)) = queue.pop_front() {
            if d >= depth || control.table.contains_key(&state) {
                continue;
            }
            let conflict = match_rules(&state, system.rules());
            if conflict.is_empty() {
                continue;
            }
            let p = 1.0 / conflict.len() as f64;
            let weights: Vec<_> = conflict.iter().map(|&id| (id, p, None)).collect();
            control.insert_weights(system, &state, &weights)?;
            for e in control.entries(&state).to_vec() {
                if e.decision == Decision::Continue {
                    queue.push_back((e.result, d + 1));
                }
            }
        }
        Ok(control)
    }

    /// Probability one on the rule the system's own conflict strategy picks,
    /// along the run from `initial`.
    pub fn deterministic(system: &ProductionSystemDef, initial: &str, step_limit: usize) -> Result<Self> {
        let trace = run_forward(system, initial, step_limit)?;
        let mut control = StochasticControl::new();
        for step in &trace.steps {
            if let Some(id) = step.fired {
                if control.entries(&step.memory).is_empty() {
                    control.insert_weights(system, &step.memory, &[(id, 1.0, None)])?;
                }
            }
        }
        Ok(control)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationReport {
    pub ok: bool,
    pub sums: Vec<(String, f64)>,
}

pub fn validate_normalization(control: &StochasticControl) -> NormalizationReport {
    let sums: Vec<(String, f64)> = control
        .table
        .iter()
        .map(|(cond, entries)| (cond.clone(), entries.iter().map(|e| e.probability).sum()))
        .collect();
    let ok = sums.iter().all(|(_, s)| (s - 1.0).abs() <= NORMALIZATION_TOLERANCE);
    NormalizationReport { ok, sums }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub rule: Option<RuleId>,
    pub state: String,
    pub depth: usize,
    pub edge_probability: f64,
    pub path_probability: f64,
    pub decision: Decision,
}

/// Nodes in breadth-first order; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputationTree {
    nodes: Vec<TreeNode>,
}

impl ComputationTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |n| n.parent == Some(id))
    }

    pub fn layer(&self, depth: usize) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(move |n| n.depth == depth)
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        self.nodes
            .iter()
            .filter(|n| self.children(n.id).next().is_none())
            .collect()
    }

    /// Follows `rules` from the root, one edge per rule.
    pub fn find_path(&self, rules: &[RuleId]) -> Option<&TreeNode> {
        let mut current = self.root();
        for &r in rules {
            current = self.children(current.id).find(|c| c.rule == Some(r))?;
        }
        Some(current)
    }

    /// Rules on the path from the root to `id`.
    pub fn path(&self, id: usize) -> Vec<RuleId> {
        let mut rules = Vec::new();
        let mut cur = self.node(id);
        while let Some(n) = cur {
            if let Some(r) = n.rule {
                rules.push(r);
            }
            cur = n.parent.and_then(|p| self.node(p));
        }
        rules.reverse();
        rules
    }

    /// Letter label in breadth-first order: A, B, ..., Z, AA, AB, ...
    pub fn label(&self, id: usize) -> String {
        let mut n = id + 1;
        let mut out = Vec::new();
        while n > 0 {
            n -= 1;
            out.push(b'A' + (n % 26) as u8);
            n /= 26;
        }
        out.reverse();
        String::from_utf8(out).expect("ascii")
    }

    pub fn rows(&self) -> Vec<TreeRow> {
        self.nodes
            .iter()
            .map(|n| TreeRow {
                node_id: n.id,
                parent_id: n.parent,
                rule: n.rule,
                state: n.state.clone(),
                depth: n.depth,
                path_probability: n.path_probability,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        tree_rows_to_csv(&self.rows())
    }
}

/// Breadth-first expansion of every positive-probability outcome down to
/// `depth`. States without outcomes, and outcomes deciding to halt, become
/// leaves early.
pub fn expand_tree(
    system: &ProductionSystemDef,
    control: &StochasticControl,
    root_state: &str,
    depth: usize,
) -> Result<ComputationTree> {
    system.alphabet().check_string(root_state)?;
    let mut nodes = vec![TreeNode {
        id: 0,
        parent: None,
        rule: None,
        state: root_state.to_string(),
        depth: 0,
        edge_probability: 1.0,
        path_probability: 1.0,
        decision: Decision::Continue,
    }];
    let mut next = 0;
    while next < nodes.len() {
        let parent = nodes[next].clone();
        next += 1;
        if parent.depth >= depth || parent.decision == Decision::Halt {
            continue;
        }
        for e in control.entries(&parent.state) {
            if e.probability <= 0.0 {
                continue;
            }
            let id = nodes.len();
            nodes.push(TreeNode {
                id,
                parent: Some(parent.id),
                rule: Some(e.rule),
                state: e.result.clone(),
                depth: parent.depth + 1,
                edge_probability: e.probability,
                path_probability: parent.path_probability * e.probability,
                decision: e.decision,
            });
        }
    }
    Ok(ComputationTree { nodes })
}

/// Product of the edge probabilities from the root down to `node`.
pub fn path_probability(tree: &ComputationTree, node: usize) -> f64 {
    let mut p = 1.0;
    let mut cur = tree.node(node);
    while let Some(n) = cur {
        if n.parent.is_some() {
            p *= n.edge_probability;
        }
        cur = n.parent.and_then(|id| tree.node(id));
    }
    p
}

/// A single run choosing each outcome at random from the control table.
/// Reproducible for a fixed seed.
pub fn sample_run(
    system: &ProductionSystemDef,
    control: &StochasticControl,
    initial: &str,
    seed: u64,
    step_limit: usize,
) -> Result<Trace> {
    let report = validate_normalization(control);
    if !report.ok {
        let (condition, sum) = report
            .sums
            .into_iter()
            .find(|(_, s)| (s - 1.0).abs() > NORMALIZATION_TOLERANCE)
            .expect("a failing condition exists");
        return Err(Error::NotNormalized { condition, sum });
    }
    system.alphabet().check_string(initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut memory = initial.to_string();
    let mut steps = Vec::new();
    let mut firings = 0;

    let outcome = loop {
        let conflict_set = match_rules(&memory, system.rules());
        let options: Vec<&ControlEntry> = control
            .entries(&memory)
            .iter()
            .filter(|e| e.probability > 0.0)
            .collect();
        let halt = if firings == 0 && system.is_goal(&memory) {
            Some(if conflict_set.is_empty() {
                Outcome::NoRuleApplicable
            } else {
                Outcome::GoalReached
            })
        } else if options.is_empty() {
            Some(if firings > 0 && system.is_goal(&memory) {
                Outcome::GoalReached
            } else {
                Outcome::NoRuleApplicable
            })
        } else if firings >= step_limit {
            Some(Outcome::StepLimit)
        } else {
            None
        };
        if let Some(outcome) = halt {
            steps.push(TraceStep {
                iteration: steps.len(),
                memory,
                conflict_set,
                fired: None,
                decision: Decision::Halt,
            });
            break outcome;
        }

        let dist = WeightedIndex::new(options.iter().map(|e| e.probability)).map_err(|e| Error::NotNormalized {
            condition: format!("{memory} ({e})"),
            sum: options.iter().map(|e| e.probability).sum(),
        })?;
        let chosen = options[dist.sample(&mut rng)];
        steps.push(TraceStep {
            iteration: steps.len(),
            memory,
            conflict_set,
            fired: Some(chosen.rule),
            decision: Decision::Continue,
        });
        memory = chosen.result.clone();
        firings += 1;

        if chosen.decision == Decision::Halt {
            let outcome = if system.is_goal(&memory) {
                Outcome::GoalReached
            } else {
                Outcome::Halted
            };
            steps.push(TraceStep {
                iteration: steps.len(),
                conflict_set: match_rules(&memory, system.rules()),
                memory,
                fired: None,
                decision: Decision::Halt,
            });
            break outcome;
        }
    };
    Ok(Trace { steps, outcome })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRow {
    pub node_id: usize,
    pub parent_id: Option<usize>,
    pub rule: Option<RuleId>,
    pub state: String,
    pub depth: usize,
    pub path_probability: f64,
}

const TREE_HEADER: [&str; 6] = ["node_id", "parent_id", "rule", "state", "depth", "path_probability"];

pub fn tree_rows_to_csv(rows: &[TreeRow]) -> String {
    csvutil::write_rows(
        &TREE_HEADER,
        rows.iter().map(|r| {
            [
                r.node_id.to_string(),
                r.parent_id.map(|p| p.to_string()).unwrap_or_default(),
                r.rule.map(|x| x.to_string()).unwrap_or_default(),
                r.state.clone(),
                r.depth.to_string(),
                r.path_probability.to_string(),
            ]
        }),
    )
}

pub fn tree_rows_from_csv(text: &str) -> Result<Vec<TreeRow>> {
    const WHAT: &str = "tree csv";
    csvutil::read_rows(WHAT, text, &TREE_HEADER)?
        .iter()
        .map(|rec| {
            Ok(TreeRow {
                node_id: csvutil::field(WHAT, rec, 0)?,
                parent_id: match &rec[1] {
                    "" => None,
                    _ => Some(csvutil::field(WHAT, rec, 1)?),
                },
                rule: match &rec[2] {
                    "" => None,
                    s => Some(s.parse()?),
                },
                state: rec[3].to_string(),
                depth: csvutil::field(WHAT, rec, 4)?,
                path_probability: csvutil::field(WHAT, rec, 5)?,
            })
        })
        .collect()
}
