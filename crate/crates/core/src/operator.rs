//! The control function as a unitary permutation.
//!
//! A basis index is split big-endian into `γ ‖ b0 ‖ b1 ‖ b2` with widths
//! `α, β, α, 1`, where `α = ⌈log₂|Γ|⌉` and `β = ⌈log₂|R|⌉`. For a symbol
//! transition `γ ↦ (r, γ', d)` the operator sends
//!
//! ```text
//! |γ, b0, b1, b2⟩  ↦  |γ, r ⊕ b0, γ' ⊕ b1, d ⊕ b2⟩
//! ```
//!
//! Since `γ` is carried through, the map is a bijection whatever the
//! transition is. Indices whose `γ` field is not a symbol code are fixed
//! points. The operator is stored as the index map `λ ↦ ω`; the dense 0/1
//! matrix (row `ω`, column `λ`) is only produced for export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rules::{Decision, ProductionSystemDef, RuleId};
use crate::state::StateVector;

/// Dense export refuses operators larger than `2^12 x 2^12`.
pub const DENSE_EXPORT_LIMIT: usize = 1 << 12;

/// `⌈log₂ n⌉`, with `0` for `n <= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub alpha: u32,
    pub beta: u32,
    pub delta: u32,
    /// Symbol with code `i` at position `i`.
    pub symbols: Vec<char>,
    /// Rule with code `i` at position `i`.
    pub rules: Vec<RuleId>,
}

impl Encoding {
    pub fn new(symbols: Vec<char>, rules: Vec<RuleId>) -> Self {
        Encoding {
            alpha: ceil_log2(symbols.len() as u64),
            beta: ceil_log2(rules.len() as u64),
            delta: 1,
            symbols,
            rules,
        }
    }

    /// `2α + β + δ`.
    pub fn width(&self) -> u32 {
        2 * self.alpha + self.beta + self.delta
    }

    pub fn size(&self) -> usize {
        1usize << self.width()
    }

    pub fn symbol_code(&self, symbol: char) -> Option<usize> {
        self.symbols.iter().position(|&s| s == symbol)
    }

    pub fn decode_symbol(&self, code: usize) -> Option<char> {
        self.symbols.get(code).copied()
    }

    pub fn rule_code(&self, rule: RuleId) -> Option<usize> {
        self.rules.iter().position(|&r| r == rule)
    }

    /// Halt is encoded as 1, continue as 0.
    pub fn decision_code(decision: Decision) -> usize {
        match decision {
            Decision::Halt => 1,
            Decision::Continue => 0,
        }
    }

    fn header(&self) -> String {
        let bits = |v: usize, w: u32| {
            if w == 0 {
                String::from("-")
            } else {
                format!("{v:0w$b}", w = w as usize)
            }
        };
        let symbols: Vec<String> = self
            .symbols
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s}={}", bits(i, self.alpha)))
            .collect();
        let rules: Vec<String> = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{r}={}", bits(i, self.beta)))
            .collect();
        format!(
            "# alpha={} beta={} delta={}\n# symbols: {}\n# rules: {}\n# decisions: c=0 h=1\n",
            self.alpha,
            self.beta,
            self.delta,
            symbols.join(" "),
            rules.join(" ")
        )
    }

    fn parse_header(text: &str) -> Result<Option<Encoding>> {
        const WHAT: &str = "operator header";
        let mut symbols = None;
        let mut rules = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let line = line.trim_start_matches('#').trim();
            let names = |body: &str| -> Vec<String> {
                body.split_whitespace()
                    .filter_map(|t| t.split_once('=').map(|(n, _)| n.to_string()))
                    .collect()
            };
            if let Some(body) = line.strip_prefix("symbols:") {
                symbols = Some(
                    names(body)
                        .iter()
                        .map(|n| {
                            let mut cs = n.chars();
                            match (cs.next(), cs.next()) {
                                (Some(c), None) => Ok(c),
                                _ => Err(Error::format(WHAT, format!("bad symbol {n:?}"))),
                            }
                        })
                        .collect::<Result<Vec<char>>>()?,
                );
            } else if let Some(body) = line.strip_prefix("rules:") {
                rules = Some(names(body).iter().map(|n| n.parse()).collect::<Result<Vec<RuleId>>>()?);
            }
        }
        Ok(match (symbols, rules) {
            (Some(s), Some(r)) => Some(Encoding::new(s, r)),
            _ => None,
        })
    }
}

/// Codes follow alphabet order and rule declaration order.
pub fn compute_encoding(system: &ProductionSystemDef) -> Encoding {
    Encoding::new(
        system.alphabet().symbols().to_vec(),
        system.rules().iter().map(|r| r.id).collect(),
    )
}

/// The four fields of a basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisState {
    pub gamma: usize,
    pub b0: usize,
    pub b1: usize,
    pub b2: usize,
}

impl BasisState {
    pub fn from_index(enc: &Encoding, index: usize) -> Self {
        let (a, b, d) = (enc.alpha, enc.beta, enc.delta);
        let mask = |w: u32| (1usize << w) - 1;
        BasisState {
            b2: index & mask(d),
            b1: (index >> d) & mask(a),
            b0: (index >> (d + a)) & mask(b),
            gamma: (index >> (d + a + b)) & mask(a),
        }
    }

    pub fn to_index(&self, enc: &Encoding) -> usize {
        let (a, b, d) = (enc.alpha, enc.beta, enc.delta);
        (self.gamma << (d + a + b)) | (self.b0 << (d + a)) | (self.b1 << d) | self.b2
    }
}

/// Result of the control function on one symbol. `rule` is `None` when no
/// quadruple applies, in which case the symbol halts unchanged and the rule
/// field is encoded as code 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolOutput {
    pub rule: Option<RuleId>,
    pub result: char,
    pub decision: Decision,
}

/// Deterministic single-symbol control function `γ ↦ (r, γ', d)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTransition {
    table: BTreeMap<char, SymbolOutput>,
}

impl SymbolTransition {
    /// Builds the transition from explicit quadruples `(γ, r, γ', d)`.
    pub fn from_quadruples(quadruples: &[(char, RuleId, char, Decision)]) -> Result<Self> {
        let mut table = BTreeMap::new();
        for &(gamma, rule, result, decision) in quadruples {
            let out = SymbolOutput {
                rule: Some(rule),
                result,
                decision,
            };
            if let Some(prev) = table.insert(gamma, out) {
                if prev != out {
                    return Err(Error::NotDeterministic { symbol: gamma });
                }
            }
        }
        Ok(SymbolTransition { table })
    }

    /// Quadruples of the system's single-symbol rules; the result halts iff
    /// it is a goal state on its own.
    pub fn from_system(system: &ProductionSystemDef) -> Result<Self> {
        let quadruples: Vec<_> = system
            .rules()
            .iter()
            .filter_map(|r| {
                let mut pre = r.precondition.chars();
                let mut act = r.action.chars();
                match (pre.next(), pre.next(), act.next(), act.next()) {
                    (Some(g), None, Some(g2), None) => {
                        let decision = if system.is_goal(&g2.to_string()) {
                            Decision::Halt
                        } else {
                            Decision::Continue
                        };
                        Some((g, r.id, g2, decision))
                    }
                    _ => None,
                }
            })
            .collect();
        SymbolTransition::from_quadruples(&quadruples)
    }

    pub fn get(&self, gamma: char) -> SymbolOutput {
        self.table.get(&gamma).copied().unwrap_or(SymbolOutput {
            rule: None,
            result: gamma,
            decision: Decision::Halt,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationOperator {
    map: Vec<usize>,
    encoding: Option<Encoding>,
}

impl PermutationOperator {
    pub fn identity(size: usize) -> Self {
        PermutationOperator {
            map: (0..size).collect(),
            encoding: None,
        }
    }

    /// Wraps a raw map without checking it; see [`verify_bijection`].
    pub fn from_map(map: Vec<usize>) -> Self {
        PermutationOperator { map, encoding: None }
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, lambda: usize) -> usize {
        self.map[lambda]
    }

    pub fn encoding(&self) -> Option<&Encoding> {
        self.encoding.as_ref()
    }

    pub fn inverse(&self) -> PermutationOperator {
        let mut inv = vec![0; self.map.len()];
        for (lambda, &omega) in self.map.iter().enumerate() {
            inv[omega] = lambda;
        }
        PermutationOperator {
            map: inv,
            encoding: self.encoding.clone(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PermutationOperator) -> Result<PermutationOperator> {
        if self.size() != other.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                actual: other.size(),
            });
        }
        Ok(PermutationOperator {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
            encoding: self.encoding.clone(),
        })
    }
}

/// Enumerates every basis index, decodes it, evaluates the transition and
/// XORs the encoded outputs into the ancilla fields.
pub fn build_operator(system: &ProductionSystemDef, transition: &SymbolTransition) -> Result<PermutationOperator> {
    let enc = compute_encoding(system);
    let outputs: Vec<(usize, usize, usize)> = enc
        .symbols
        .iter()
        .map(|&g| {
            let out = transition.get(g);
            let r = match out.rule {
                Some(id) => enc.rule_code(id).ok_or(Error::UnknownRule(id))?,
                None => 0,
            };
            let g2 = enc
                .symbol_code(out.result)
                .ok_or(Error::UnknownSymbol { symbol: out.result })?;
            Ok((r, g2, Encoding::decision_code(out.decision)))
        })
        .collect::<Result<_>>()?;

    let map = (0..enc.size())
        .into_par_iter()
        .map(|lambda| {
            let s = BasisState::from_index(&enc, lambda);
            match outputs.get(s.gamma) {
                None => lambda,
                Some(&(r, g2, d)) => BasisState {
                    gamma: s.gamma,
                    b0: s.b0 ^ r,
                    b1: s.b1 ^ g2,
                    b2: s.b2 ^ d,
                }
                .to_index(&enc),
            }
        })
        .collect();
    Ok(PermutationOperator {
        map,
        encoding: Some(enc),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BijectionReport {
    pub ok: bool,
    /// Two inputs with the same image, the earlier one first.
    pub collision: Option<(usize, usize)>,
    /// An input whose image lies outside `[0, size)`.
    pub out_of_range: Option<usize>,
}

pub fn verify_bijection(op: &PermutationOperator) -> BijectionReport {
    let n = op.size();
    let mut preimage: Vec<Option<usize>> = vec![None; n];
    for (lambda, &omega) in op.map.iter().enumerate() {
        if omega >= n {
            return BijectionReport {
                ok: false,
                collision: None,
                out_of_range: Some(lambda),
            };
        }
        if let Some(first) = preimage[omega] {
            return BijectionReport {
                ok: false,
                collision: Some((first, lambda)),
                out_of_range: None,
            };
        }
        preimage[omega] = Some(lambda);
    }
    BijectionReport {
        ok: true,
        collision: None,
        out_of_range: None,
    }
}

/// Moves the amplitude at `λ` to `map[λ]`.
pub fn apply(op: &PermutationOperator, v: &StateVector) -> Result<StateVector> {
    if v.len() != op.size() {
        return Err(Error::DimensionMismatch {
            expected: op.size(),
            actual: v.len(),
        });
    }
    let mut out = StateVector::zero(v.layout());
    let dst = out.amplitudes_mut();
    for (lambda, &a) in v.amplitudes().iter().enumerate() {
        dst[op.map[lambda]] = a;
    }
    Ok(out)
}

/// `op` composed with itself `d` times.
pub fn power(op: &PermutationOperator, mut d: u64) -> PermutationOperator {
    let mut result = PermutationOperator {
        map: (0..op.size()).collect(),
        encoding: op.encoding.clone(),
    };
    let mut base = op.clone();
    while d > 0 {
        if d & 1 == 1 {
            result = base.compose(&result).expect("same size");
        }
        d >>= 1;
        if d > 0 {
            base = base.compose(&base).expect("same size");
        }
    }
    result
}

/// The 0/1 matrix with a one at row `map[λ]`, column `λ`.
pub fn dense_matrix(op: &PermutationOperator) -> Result<Vec<Vec<u8>>> {
    let n = op.size();
    if n > DENSE_EXPORT_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: DENSE_EXPORT_LIMIT,
        });
    }
    let mut m = vec![vec![0u8; n]; n];
    for (lambda, &omega) in op.map.iter().enumerate() {
        m[omega][lambda] = 1;
    }
    Ok(m)
}

fn header_for(op: &PermutationOperator) -> String {
    op.encoding.as_ref().map(Encoding::header).unwrap_or_default()
}

/// Dense CSV: the encoding header, then one line per row `ω`.
pub fn export_dense(op: &PermutationOperator) -> Result<String> {
    let m = dense_matrix(op)?;
    let mut out = header_for(op);
    out.reserve(op.size() * op.size() * 2);
    for row in &m {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push(if *v == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_dense(text: &str) -> Result<Vec<Vec<u8>>> {
    let rows: Vec<Vec<u8>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|t| match t.trim() {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::format("dense operator", format!("entry {other:?}"))),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::format("dense operator", "matrix is not square"));
    }
    Ok(rows)
}

/// Two-column `lambda,omega` map with the encoding header.
pub fn export_map(op: &PermutationOperator) -> String {
    let mut out = header_for(op);
    out.push_str("lambda,omega\n");
    for (lambda, omega) in op.map.iter().enumerate() {
        let _ = writeln!(out, "{lambda},{omega}");
    }
    out
}

pub fn parse_map(text: &str) -> Result<PermutationOperator> {
    const WHAT: &str = "operator map";
    let encoding = Encoding::parse_header(text)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some("lambda,omega") {
        return Err(Error::format(WHAT, "missing lambda,omega header"));
    }
    let mut map = Vec::new();
    for (i, line) in lines.enumerate() {
        let (l, o) = line
            .split_once(',')
            .ok_or_else(|| Error::format(WHAT, format!("row {line:?}")))?;
        let l: usize = l
            .trim()
            .parse()
            .map_err(|_| Error::format(WHAT, format!("row {line:?}")))?;
        let o: usize = o
            .trim()
            .parse()
            .map_err(|_| Error::format(WHAT, format!("row {line:?}")))?;
        if l != i {
            return Err(Error::format(WHAT, format!("expected lambda {i}, found {l}")));
        }
        map.push(o);
    }
    if let Some(enc) = &encoding {
        if enc.size() != map.len() {
            return Err(Error::DimensionMismatch {
                expected: enc.size(),
                actual: map.len(),
            });
        }
    }
    Ok(PermutationOperator { map, encoding })
}
