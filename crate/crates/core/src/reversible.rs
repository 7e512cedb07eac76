//! Three-tape reversible execution.
//!
//! The forward phase fires rules as usual and appends each fired rule to the
//! history tape. The history head is then rewound, the history is copied
//! cell by cell onto a blank output tape, and the output head is rewound.
//! Finally the backward phase reads the history right to left, applies each
//! inverted rule to the working memory and blanks the cell. The machine ends
//! with the original memory, a blank history and the fired sequence on the
//! output tape.
//!
//! Every primitive step returns a [`StepRecord`] that [`ReversibleMachineState::undo`]
//! reverts exactly.

use std::fmt;

use crate::csvutil;
use crate::error::{Error, Result};
use crate::rules::{apply_rule_at, check_reversible, run_forward, Production, ProductionSystemDef, RuleId, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cell {
    #[default]
    Blank,
    Rule(RuleId),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tape {
    cells: Vec<Cell>,
    head: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn from_cells(cells: Vec<Cell>, head: usize) -> Result<Self> {
        if head > cells.len() {
            return Err(Error::format("tape", format!("head {head} past {} cells", cells.len())));
        }
        Ok(Tape { cells, head })
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn read(&self) -> Cell {
        self.cells.get(self.head).copied().unwrap_or(Cell::Blank)
    }

    fn write(&mut self, cell: Cell) {
        if self.head >= self.cells.len() {
            self.cells.resize(self.head + 1, Cell::Blank);
        }
        self.cells[self.head] = cell;
    }

    fn set(&mut self, index: usize, cell: Cell) {
        if index >= self.cells.len() {
            self.cells.resize(index + 1, Cell::Blank);
        }
        self.cells[index] = cell;
    }

    fn left(&mut self) {
        debug_assert!(self.head > 0);
        self.head -= 1;
    }

    fn right(&mut self) {
        self.head += 1;
    }

    pub fn is_blank(&self) -> bool {
        self.cells.iter().all(|c| *c == Cell::Blank)
    }

    /// Rule ids of the non-blank cells, left to right.
    pub fn written(&self) -> Vec<RuleId> {
        self.cells
            .iter()
            .filter_map(|c| match c {
                Cell::Rule(r) => Some(*r),
                Cell::Blank => None,
            })
            .collect()
    }

    pub fn last_written(&self) -> Option<usize> {
        self.cells.iter().rposition(|c| *c != Cell::Blank)
    }

    fn first_written(&self) -> Option<usize> {
        self.cells.iter().position(|c| *c != Cell::Blank)
    }

    /// Cells up to the last non-blank one, `;`-joined, blanks as `_`.
    pub fn render_cells(&self) -> String {
        let end = self.last_written().map_or(0, |i| i + 1);
        self.cells[..end]
            .iter()
            .map(|c| match c {
                Cell::Rule(r) => r.to_string(),
                Cell::Blank => "_".to_string(),
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_cells(s: &str, head: usize) -> Result<Self> {
        let cells = s
            .split(';')
            .filter(|t| !t.is_empty())
            .map(|t| match t {
                "_" => Ok(Cell::Blank),
                r => r.parse().map(Cell::Rule),
            })
            .collect::<Result<Vec<_>>>()?;
        // Trailing blanks are not rendered, so the head may sit past them.
        let mut tape = Tape { cells, head: 0 };
        if head > tape.cells.len() {
            tape.cells.resize(head, Cell::Blank);
        }
        tape.head = head;
        Ok(tape)
    }

    fn normalized(&self) -> (Vec<Cell>, usize) {
        let end = self.last_written().map_or(0, |i| i + 1);
        (self.cells[..end].to_vec(), self.head)
    }

    /// Equality ignoring trailing blank cells.
    pub fn same_contents(&self, other: &Tape) -> bool {
        self.normalized() == other.normalized()
    }
}

/// `{R1, R2, [R3]}` with the head cell bracketed.
impl fmt::Display for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let end = self.last_written().map_or(0, |i| i + 1).max(self.head + 1);
        let parts: Vec<String> = (0..end)
            .map(|i| {
                let text = match self.cells.get(i).copied().unwrap_or_default() {
                    Cell::Rule(r) => r.to_string(),
                    Cell::Blank => " ".to_string(),
                };
                if i == self.head {
                    format!("[{text}]")
                } else {
                    text
                }
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Forward,
    RewindHistory,
    CopyToOutput,
    RewindOutput,
    Backward,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Forward => "forward",
            Phase::RewindHistory => "rewind-history",
            Phase::CopyToOutput => "copy",
            Phase::RewindOutput => "rewind-output",
            Phase::Backward => "backward",
            Phase::Done => "done",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "forward" => Phase::Forward,
            "rewind-history" => Phase::RewindHistory,
            "copy" => Phase::CopyToOutput,
            "rewind-output" => Phase::RewindOutput,
            "backward" => Phase::Backward,
            "done" => Phase::Done,
            other => return Err(Error::format("phase", format!("{other:?}"))),
        })
    }
}

/// What a primitive step changed, enough to revert it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepRecord {
    Fire {
        rule: RuleId,
        at: usize,
        head_before: usize,
    },
    HistoryLeft,
    HistoryRight,
    OutputLeft,
    OutputRight,
    CopyCell {
        cell: usize,
    },
    Unfire {
        rule: RuleId,
        at: usize,
        head_before: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReversibleMachineState {
    pub memory: String,
    pub history: Tape,
    pub output: Tape,
    pub phase: Phase,
}

impl ReversibleMachineState {
    pub fn new(initial: impl Into<String>) -> Self {
        ReversibleMachineState {
            memory: initial.into(),
            history: Tape::new(),
            output: Tape::new(),
            phase: Phase::Forward,
        }
    }

    /// Fires `rule` at its leftmost occurrence and records it on the history.
    pub fn fire(&mut self, rule: &Production) -> Result<StepRecord> {
        let at = self
            .memory
            .find(rule.precondition.as_str())
            .ok_or_else(|| Error::NoMatch {
                rule: rule.id,
                precondition: rule.precondition.clone(),
                memory: self.memory.clone(),
            })?;
        self.memory = apply_rule_at(&self.memory, rule, at)?;
        let head_before = self.history.head;
        if let Cell::Rule(_) = self.history.read() {
            self.history.right();
        }
        self.history.write(Cell::Rule(rule.id));
        Ok(StepRecord::Fire {
            rule: rule.id,
            at,
            head_before,
        })
    }

    pub fn history_left(&mut self) -> StepRecord {
        self.history.left();
        StepRecord::HistoryLeft
    }

    pub fn history_right(&mut self) -> StepRecord {
        self.history.right();
        StepRecord::HistoryRight
    }

    pub fn output_left(&mut self) -> StepRecord {
        self.output.left();
        StepRecord::OutputLeft
    }

    pub fn output_right(&mut self) -> StepRecord {
        self.output.right();
        StepRecord::OutputRight
    }

    /// Copies the history cell under the head onto the blank output cell at
    /// the same position.
    pub fn copy_cell(&mut self) -> Result<StepRecord> {
        let cell = self.history.head;
        if self.output.head != cell {
            return Err(Error::Phase(format!(
                "history head {cell} and output head {} differ",
                self.output.head
            )));
        }
        if self.output.read() != Cell::Blank {
            return Err(Error::OutputNotBlank { cell });
        }
        self.output.write(self.history.read());
        Ok(StepRecord::CopyCell { cell })
    }

    /// Reads the rule under the history head, applies its inverse to the
    /// memory at the leftmost match, blanks the cell and moves left.
    pub fn unfire(&mut self, system: &ProductionSystemDef) -> Result<StepRecord> {
        let head_before = self.history.head;
        let Cell::Rule(id) = self.history.read() else {
            return Err(Error::Phase(format!("history head {head_before} is on a blank cell")));
        };
        let inverse = system.rule(id).ok_or(Error::UnknownRule(id))?.inverted();
        let at = self
            .memory
            .find(inverse.precondition.as_str())
            .ok_or_else(|| Error::InverseNoMatch {
                rule: id,
                precondition: inverse.precondition.clone(),
                memory: self.memory.clone(),
            })?;
        self.memory = apply_rule_at(&self.memory, &inverse, at)?;
        self.history.write(Cell::Blank);
        if self.history.head > 0 {
            self.history.left();
        }
        Ok(StepRecord::Unfire {
            rule: id,
            at,
            head_before,
        })
    }

    /// Reverts a primitive step previously applied to this state.
    pub fn undo(&mut self, record: &StepRecord, system: &ProductionSystemDef) -> Result<()> {
        match *record {
            StepRecord::Fire { rule, at, head_before } => {
                let inverse = system.rule(rule).ok_or(Error::UnknownRule(rule))?.inverted();
                self.memory = apply_rule_at(&self.memory, &inverse, at)?;
                self.history.write(Cell::Blank);
                self.history.head = head_before;
            }
            StepRecord::HistoryLeft => self.history.right(),
            StepRecord::HistoryRight => self.history.left(),
            StepRecord::OutputLeft => self.output.right(),
            StepRecord::OutputRight => self.output.left(),
            StepRecord::CopyCell { cell } => {
                if self.output.cells.get(cell) != self.history.cells.get(cell) {
                    return Err(Error::Phase(format!("output cell {cell} no longer matches history")));
                }
                self.output.set(cell, Cell::Blank);
            }
            StepRecord::Unfire { rule, at, head_before } => {
                let forward = system.rule(rule).ok_or(Error::UnknownRule(rule))?;
                self.memory = apply_rule_at(&self.memory, forward, at)?;
                self.history.set(head_before, Cell::Rule(rule));
                self.history.head = head_before;
            }
        }
        Ok(())
    }
}

/// Primitive-step counts behind the phase-level log rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellCounts {
    pub firings: usize,
    pub history_rewind_moves: usize,
    pub copied_cells: usize,
    pub copy_moves: usize,
    pub output_rewind_moves: usize,
    pub unfirings: usize,
}

#[derive(Debug, Default)]
struct Recorder {
    steps: Vec<StepRecord>,
    counts: CellCounts,
}

impl Recorder {
    fn push(&mut self, record: StepRecord) {
        match record {
            StepRecord::Fire { .. } => self.counts.firings += 1,
            StepRecord::HistoryLeft => self.counts.history_rewind_moves += 1,
            StepRecord::HistoryRight | StepRecord::OutputRight => self.counts.copy_moves += 1,
            StepRecord::OutputLeft => self.counts.output_rewind_moves += 1,
            StepRecord::CopyCell { .. } => self.counts.copied_cells += 1,
            StepRecord::Unfire { .. } => self.counts.unfirings += 1,
        }
        self.steps.push(record);
    }
}

fn ensure_reversible(system: &ProductionSystemDef) -> Result<()> {
    let report = check_reversible(system.rules());
    if report.ok {
        Ok(())
    } else {
        Err(Error::NotReversible {
            pairs: report.offending,
        })
    }
}

fn replay_forward(
    system: &ProductionSystemDef,
    trace: &Trace,
    rec: &mut Recorder,
    mut on_row: impl FnMut(&ReversibleMachineState, Option<String>),
) -> Result<ReversibleMachineState> {
    let mut state = ReversibleMachineState::new(trace.steps[0].memory.clone());
    for step in &trace.steps {
        debug_assert_eq!(state.memory, step.memory);
        on_row(&state, step.fired.map(|r| r.to_string()));
        if let Some(id) = step.fired {
            let rule = system.rule(id).ok_or(Error::UnknownRule(id))?;
            rec.push(state.fire(rule)?);
        }
    }
    Ok(state)
}

/// Runs the system forward, recording every fired rule on the history tape.
/// Halting is decided by [`run_forward`].
pub fn forward_phase(system: &ProductionSystemDef, initial: &str, step_limit: usize) -> Result<ReversibleMachineState> {
    ensure_reversible(system)?;
    let trace = run_forward(system, initial, step_limit)?;
    replay_forward(system, &trace, &mut Recorder::default(), |_, _| {})
}

fn rewind_history_with(mut state: ReversibleMachineState, rec: &mut Recorder) -> ReversibleMachineState {
    state.phase = Phase::RewindHistory;
    while state.history.head > 0 {
        rec.push(state.history_left());
    }
    state
}

pub fn rewind_history_head(state: ReversibleMachineState) -> ReversibleMachineState {
    rewind_history_with(state, &mut Recorder::default())
}

fn copy_with(mut state: ReversibleMachineState, rec: &mut Recorder) -> Result<ReversibleMachineState> {
    if let Some(cell) = state.output.first_written() {
        return Err(Error::OutputNotBlank { cell });
    }
    if state.history.head != 0 || state.output.head != 0 {
        return Err(Error::Phase(
            "both heads must be at the start of their tapes before copying".into(),
        ));
    }
    state.phase = Phase::CopyToOutput;
    if let Some(last) = state.history.last_written() {
        for i in 0..=last {
            rec.push(state.copy_cell()?);
            if i < last {
                rec.push(state.history_right());
                rec.push(state.output_right());
            }
        }
    }
    Ok(state)
}

/// Copies the history onto the output tape; both heads end on the last cell.
pub fn copy_history_to_output(state: ReversibleMachineState) -> Result<ReversibleMachineState> {
    copy_with(state, &mut Recorder::default())
}

fn rewind_output_with(mut state: ReversibleMachineState, rec: &mut Recorder) -> ReversibleMachineState {
    state.phase = Phase::RewindOutput;
    while state.output.head > 0 {
        rec.push(state.output_left());
    }
    state
}

pub fn rewind_output_head(state: ReversibleMachineState) -> ReversibleMachineState {
    rewind_output_with(state, &mut Recorder::default())
}

fn backward_with(
    mut state: ReversibleMachineState,
    system: &ProductionSystemDef,
    rec: &mut Recorder,
    mut on_row: impl FnMut(&ReversibleMachineState, Option<String>),
) -> Result<ReversibleMachineState> {
    if let Some(last) = state.history.last_written() {
        if state.history.head != last {
            return Err(Error::Phase(format!(
                "history head must be on the last entry {last}, found {}",
                state.history.head
            )));
        }
    }
    state.phase = Phase::Backward;
    on_row(&state, None);
    while let Cell::Rule(id) = state.history.read() {
        let record = state.unfire(system)?;
        rec.push(record);
        on_row(&state, Some(format!("{id}^-1")));
    }
    state.phase = Phase::Done;
    Ok(state)
}

/// Undoes every recorded firing, newest first.
pub fn backward_phase(state: ReversibleMachineState, system: &ProductionSystemDef) -> Result<ReversibleMachineState> {
    backward_with(state, system, &mut Recorder::default(), |_, _| {})
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRow {
    pub iteration: usize,
    pub phase: Phase,
    pub memory: String,
    /// Rule column: the rule fired from this row during the forward phase,
    /// the inverse just applied during the backward phase.
    pub rule: Option<String>,
    pub history: Tape,
    pub output: Tape,
}

#[derive(Debug, Clone)]
pub struct ReversibleLog {
    pub rows: Vec<LogRow>,
    pub final_state: ReversibleMachineState,
    pub forward_trace: Trace,
    pub counts: CellCounts,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReversibleOptions {
    pub step_limit: usize,
    /// Cross-check every backward memory against the forward trace.
    pub verify: bool,
}

impl Default for ReversibleOptions {
    fn default() -> Self {
        ReversibleOptions {
            step_limit: 10_000,
            verify: true,
        }
    }
}

/// Forward, rewind history, copy, rewind output, backward; one log row per
/// firing or unfiring, and one row for each of the intermediate phases.
pub fn run_reversible(system: &ProductionSystemDef, initial: &str, step_limit: usize) -> Result<ReversibleLog> {
    run_reversible_with(
        system,
        initial,
        ReversibleOptions {
            step_limit,
            ..Default::default()
        },
    )
}

pub fn run_reversible_with(
    system: &ProductionSystemDef,
    initial: &str,
    options: ReversibleOptions,
) -> Result<ReversibleLog> {
    ensure_reversible(system)?;
    let trace = run_forward(system, initial, options.step_limit)?;
    let mut rec = Recorder::default();
    let mut rows: Vec<LogRow> = Vec::new();
    let push_row = |rows: &mut Vec<LogRow>, state: &ReversibleMachineState, rule: Option<String>| {
        rows.push(LogRow {
            iteration: rows.len(),
            phase: state.phase,
            memory: state.memory.clone(),
            rule,
            history: state.history.clone(),
            output: state.output.clone(),
        });
    };

    let state = replay_forward(system, &trace, &mut rec, |s, r| push_row(&mut rows, s, r))?;
    let state = rewind_history_with(state, &mut rec);
    push_row(&mut rows, &state, None);
    let state = copy_with(state, &mut rec)?;
    push_row(&mut rows, &state, None);
    let state = rewind_output_with(state, &mut rec);
    push_row(&mut rows, &state, None);
    let state = backward_with(state, system, &mut rec, |s, r| push_row(&mut rows, s, r))?;

    if state.memory != initial {
        return Err(Error::VerificationFailed(format!(
            "backward phase ended at {:?}, expected {initial:?}",
            state.memory
        )));
    }
    if options.verify {
        let fired = trace.fired();
        if state.output.written() != fired {
            return Err(Error::VerificationFailed(
                "output tape differs from the fired sequence".into(),
            ));
        }
        let forward_memories: Vec<&str> = trace.steps.iter().map(|s| s.memory.as_str()).collect();
        let backward_rows = &rows[rows.len() - fired.len() - 1..];
        for (row, expected) in backward_rows.iter().zip(forward_memories.iter().rev()) {
            if row.memory != *expected {
                return Err(Error::VerificationFailed(format!(
                    "row {} holds {:?}, forward run had {expected:?}",
                    row.iteration, row.memory
                )));
            }
        }
    }

    Ok(ReversibleLog {
        rows,
        final_state: state,
        forward_trace: trace,
        counts: rec.counts,
        steps: rec.steps,
    })
}

const LOG_HEADER: [&str; 8] = [
    "iteration",
    "phase",
    "memory",
    "rule",
    "history",
    "history_head",
    "output",
    "output_head",
];

pub fn log_to_csv(rows: &[LogRow]) -> String {
    csvutil::write_rows(
        &LOG_HEADER,
        rows.iter().map(|r| {
            [
                r.iteration.to_string(),
                r.phase.as_str().to_string(),
                r.memory.clone(),
                r.rule.clone().unwrap_or_default(),
                r.history.render_cells(),
                r.history.head().to_string(),
                r.output.render_cells(),
                r.output.head().to_string(),
            ]
        }),
    )
}

pub fn log_from_csv(text: &str) -> Result<Vec<LogRow>> {
    const WHAT: &str = "reversible log csv";
    csvutil::read_rows(WHAT, text, &LOG_HEADER)?
        .iter()
        .map(|rec| {
            Ok(LogRow {
                iteration: csvutil::field(WHAT, rec, 0)?,
                phase: rec[1].parse()?,
                memory: rec[2].to_string(),
                rule: Some(rec[3].to_string()).filter(|s| !s.is_empty()),
                history: Tape::parse_cells(&rec[4], csvutil::field(WHAT, rec, 5)?)?,
                output: Tape::parse_cells(&rec[6], csvutil::field(WHAT, rec, 7)?)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::sorting_system;
    use crate::rules::{Alphabet, ConflictStrategy};

    fn ids(range: std::ops::RangeInclusive<u32>) -> Vec<RuleId> {
        range.map(RuleId).collect()
    }

    #[test]
    fn invert_rule_swaps_sides() {
        let sys = sorting_system();
        let r1 = sys.rule(RuleId(1)).unwrap().inverted();
        assert_eq!((r1.precondition.as_str(), r1.action.as_str()), ("ab", "ba"));
        assert_eq!(r1.label(), "R1^-1");
        let r10 = sys.rule(RuleId(10)).unwrap().inverted();
        assert_eq!((r10.precondition.as_str(), r10.action.as_str()), ("de", "ed"));
    }

    #[test]
    fn forward_phase_fills_history() {
        let sys = sorting_system();
        let s = forward_phase(&sys, "edcba", 100).unwrap();
        assert_eq!(s.memory, "abcde");
        assert_eq!(s.history.written(), ids(1..=10));
        assert_eq!(s.history.head(), 9);
        assert!(s.output.is_blank());

        let s = forward_phase(&sys, "abcde", 100).unwrap();
        assert!(s.history.written().is_empty());
        assert_eq!(s.history.head(), 0);

        let s = forward_phase(&sys, "abced", 100).unwrap();
        assert_eq!(s.memory, "abcde");
        assert_eq!(s.history.written(), vec![RuleId(10)]);
        let t = run_forward(&sys, "abced", 100).unwrap();
        assert_eq!(t.fired(), vec![RuleId(10)]);
    }

    #[test]
    fn phases_move_heads() {
        let sys = sorting_system();
        let s = forward_phase(&sys, "edcba", 100).unwrap();
        let s = rewind_history_head(s);
        assert_eq!(s.history.head(), 0);
        assert_eq!(s.history.written(), ids(1..=10));
        let s = copy_history_to_output(s).unwrap();
        assert_eq!(s.output.written(), ids(1..=10));
        assert_eq!((s.history.head(), s.output.head()), (9, 9));
        let s = rewind_output_head(s);
        assert_eq!(s.output.head(), 0);
        let s = backward_phase(s, &sys).unwrap();
        assert_eq!(s.memory, "edcba");
        assert!(s.history.is_blank());
        assert_eq!(s.output.written(), ids(1..=10));
        assert_eq!(s.phase, Phase::Done);
    }

    #[test]
    fn empty_and_single_histories() {
        let sys = sorting_system();
        let s = rewind_history_head(ReversibleMachineState::new("abcde"));
        assert_eq!(s.history.head(), 0);
        let s = copy_history_to_output(s).unwrap();
        assert!(s.output.is_blank());
        let s = rewind_output_head(s);
        assert_eq!(s.output.head(), 0);
        let s = backward_phase(s, &sys).unwrap();
        assert_eq!(s.memory, "abcde");

        let s = forward_phase(&sys, "abced", 100).unwrap();
        let s = rewind_history_head(s);
        assert_eq!(s.history.head(), 0);
        let s = rewind_output_head(copy_history_to_output(s).unwrap());
        assert_eq!(s.output.head(), 0);
        assert_eq!(s.memory, "abcde");
        let s = backward_phase(s, &sys).unwrap();
        assert_eq!(s.memory, "abced");
    }

    #[test]
    fn copy_refuses_written_output() {
        let sys = sorting_system();
        let mut s = rewind_history_head(forward_phase(&sys, "edcba", 100).unwrap());
        s.output = Tape::from_cells(vec![Cell::Rule(RuleId(3))], 0).unwrap();
        assert_eq!(
            copy_history_to_output(s).unwrap_err(),
            Error::OutputNotBlank { cell: 0 }
        );
    }

    #[test]
    fn backward_requires_head_on_last_entry() {
        let sys = sorting_system();
        let s = rewind_history_head(forward_phase(&sys, "edcba", 100).unwrap());
        assert!(matches!(backward_phase(s, &sys), Err(Error::Phase(_))));
    }

    #[test]
    fn corrupted_history_surfaces_inverse_no_match() {
        let sys = sorting_system();
        let mut s = ReversibleMachineState::new("abcde");
        // R4^-1 needs "ae", which "abcde" lacks.
        s.history = Tape::from_cells(vec![Cell::Rule(RuleId(4))], 0).unwrap();
        assert!(matches!(backward_phase(s, &sys), Err(Error::InverseNoMatch { .. })));
    }

    #[test]
    fn non_reversible_rules_are_rejected() {
        let sys = ProductionSystemDef::new(
            Alphabet::new("abc".chars()).unwrap(),
            vec![Production::new(1, "ba", "ab"), Production::new(2, "ca", "ab")],
            vec!["ba".into()],
            [],
            ConflictStrategy::LowestRuleId,
        )
        .unwrap();
        assert!(matches!(
            forward_phase(&sys, "ba", 10),
            Err(Error::NotReversible { .. })
        ));
        assert!(matches!(
            run_reversible(&sys, "ba", 10),
            Err(Error::NotReversible { .. })
        ));
    }

    #[test]
    fn leftmost_inverse_mismatch_is_reported() {
        // a -> b on "ba" rewrites position 1, but the inverse b -> a matches
        // position 0 first.
        let sys = ProductionSystemDef::new(
            Alphabet::new("ab".chars()).unwrap(),
            vec![Production::new(1, "a", "b")],
            vec!["ba".into()],
            ["bb".to_string()],
            ConflictStrategy::LowestRuleId,
        )
        .unwrap();
        assert!(matches!(
            run_reversible(&sys, "ba", 10),
            Err(Error::VerificationFailed(_))
        ));
    }

    #[test]
    fn every_primitive_step_undoes() {
        let sys = sorting_system();
        let log = run_reversible(&sys, "edcba", 100).unwrap();
        // Replay the recorded steps from scratch, checking undo at each one.
        let mut state = ReversibleMachineState::new("edcba");
        for record in &log.steps {
            let before = state.clone();
            let redone = match record {
                StepRecord::Fire { rule, .. } => state.fire(sys.rule(*rule).unwrap()).unwrap(),
                StepRecord::HistoryLeft => state.history_left(),
                StepRecord::HistoryRight => state.history_right(),
                StepRecord::OutputLeft => state.output_left(),
                StepRecord::OutputRight => state.output_right(),
                StepRecord::CopyCell { .. } => state.copy_cell().unwrap(),
                StepRecord::Unfire { .. } => state.unfire(&sys).unwrap(),
            };
            assert_eq!(&redone, record);
            let after = state.clone();
            state.undo(record, &sys).unwrap();
            assert_eq!(state.memory, before.memory);
            assert!(state.history.same_contents(&before.history));
            assert!(state.output.same_contents(&before.output));
            state = after;
        }
        assert_eq!(state.memory, "edcba");
    }

    #[test]
    fn cell_counts() {
        let sys = sorting_system();
        let log = run_reversible(&sys, "edcba", 100).unwrap();
        assert_eq!(
            log.counts,
            CellCounts {
                firings: 10,
                history_rewind_moves: 9,
                copied_cells: 10,
                copy_moves: 18,
                output_rewind_moves: 9,
                unfirings: 10,
            }
        );
    }

    #[test]
    fn log_shape_for_already_sorted_input() {
        let sys = sorting_system();
        let log = run_reversible(&sys, "abcde", 100).unwrap();
        let phases: Vec<Phase> = log.rows.iter().map(|r| r.phase).collect();
        assert_eq!(
            phases,
            [
                Phase::Forward,
                Phase::RewindHistory,
                Phase::CopyToOutput,
                Phase::RewindOutput,
                Phase::Backward
            ]
        );
        assert!(log.rows.iter().all(|r| r.history.is_blank() && r.output.is_blank()));
    }

    #[test]
    fn log_csv_round_trip() {
        let sys = sorting_system();
        let log = run_reversible(&sys, "edcba", 100).unwrap();
        let csv = log_to_csv(&log.rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "0,forward,edcba,R1,,0,,0");
        assert_eq!(
            lines[16],
            "15,backward,abced,R10^-1,R1;R2;R3;R4;R5;R6;R7;R8;R9,8,R1;R2;R3;R4;R5;R6;R7;R8;R9;R10,0"
        );
        let back = log_from_csv(&csv).unwrap();
        assert_eq!(log_to_csv(&back), csv);
    }

    #[test]
    fn tape_rendering_marks_the_head() {
        let t = Tape::from_cells(vec![Cell::Rule(RuleId(1)), Cell::Rule(RuleId(2))], 1).unwrap();
        assert_eq!(t.to_string(), "{R1, [R2]}");
        assert_eq!(Tape::new().to_string(), "{[ ]}");
    }
}
