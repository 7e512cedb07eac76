//! Grover search over production-system states.
//!
//! The register is `|x, y, z⟩`: `x` indexes a table of working-memory
//! states, `y` is a single phase qubit and `z` holds the trace of rules
//! fired by a depth-`d` run. The extended oracle is
//!
//! ```text
//! O |x, y, z⟩ = |x, y ⊕ f(x), z ⊕ g(x)⟩
//! ```
//!
//! where `f(x) = 1` iff the run from `x` ends in a goal state and `g(x)` packs
//! the fired rules into `d` slots (first rule in the most significant slot,
//! code 0 for unused slots, rule codes starting at 1).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use num_complex::Complex64;

use crate::csvutil::{field, read_rows, write_rows};
use crate::error::{Error, Result};
use crate::operator::ceil_log2;
use crate::reversible::run_reversible;
use crate::rules::{apply_rule, match_rules, run_forward, ProductionSystemDef, RuleId};
use crate::state::{RegisterLayout, StateVector};

/// Widest trace register `classical_g` can return.
pub const MAX_TRACE_BITS: u32 = 64;

#[derive(Debug, Clone)]
pub struct OracleSpec {
    system: ProductionSystemDef,
    depth: usize,
    states: Vec<String>,
    n_bits: u32,
    slot_bits: u32,
    f_table: Vec<bool>,
    g_table: Vec<u64>,
}

impl OracleSpec {
    /// The state table is the system's initial states, in order.
    pub fn new(system: &ProductionSystemDef, depth: usize) -> Result<Self> {
        OracleSpec::with_states(system, depth, system.initial_states().to_vec())
    }

    pub fn with_states(system: &ProductionSystemDef, depth: usize, states: Vec<String>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidDefinition("state table is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &states {
            system.alphabet().check_string(s)?;
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidDefinition(format!("state {s:?} listed twice")));
            }
        }
        let n_bits = ceil_log2(states.len() as u64);
        let slot_bits = ceil_log2(system.rules().len() as u64 + 1);
        let p = slot_bits as u64 * depth as u64;
        if p > MAX_TRACE_BITS as u64 {
            return Err(Error::InvalidDefinition(format!(
                "trace register needs {p} bits, at most {MAX_TRACE_BITS} are supported"
            )));
        }
        let mut spec = OracleSpec {
            system: system.clone(),
            depth,
            states,
            n_bits,
            slot_bits,
            f_table: Vec::new(),
            g_table: Vec::new(),
        };
        let evaluated: Vec<(bool, u64)> = spec
            .states
            .par_iter()
            .map(|s| spec.evaluate(s))
            .collect::<Result<_>>()?;
        (spec.f_table, spec.g_table) = evaluated.into_iter().unzip();
        Ok(spec)
    }

    fn evaluate(&self, state: &str) -> Result<(bool, u64)> {
        let trace = run_forward(&self.system, state, self.depth)?;
        let f = self.system.is_goal(trace.final_memory());
        Ok((f, self.encode_trace(&trace.fired())?))
    }

    /// Packs rule ids into the trace code.
    pub fn encode_trace(&self, fired: &[RuleId]) -> Result<u64> {
        if fired.len() > self.depth {
            return Err(Error::InvalidDefinition(format!(
                "{} rules do not fit in {} slots",
                fired.len(),
                self.depth
            )));
        }
        let mut code = 0u64;
        for slot in 0..self.depth {
            let c = match fired.get(slot) {
                Some(&id) => self.system.rule_index(id).ok_or(Error::UnknownRule(id))? as u64 + 1,
                None => 0,
            };
            code = (code << self.slot_bits) | c;
        }
        Ok(code)
    }

    /// Inverse of [`encode_trace`](Self::encode_trace); stops at the first
    /// padding slot.
    pub fn decode_trace(&self, code: u64) -> Vec<RuleId> {
        let mask = (1u64 << self.slot_bits) - 1;
        let mut out = Vec::new();
        for slot in (0..self.depth).rev() {
            let c = (code >> (slot as u32 * self.slot_bits)) & mask;
            if c == 0 {
                break;
            }
            match self.system.rules().get(c as usize - 1) {
                Some(r) => out.push(r.id),
                None => break,
            }
        }
        out
    }

    pub fn system(&self) -> &ProductionSystemDef {
        &self.system
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_code(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn decode_state(&self, x: usize) -> Result<&str> {
        self.states.get(x).map(String::as_str).ok_or(Error::DecodeFailure(x))
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn slot_bits(&self) -> u32 {
        self.slot_bits
    }

    /// `p = d · w`.
    pub fn trace_bits(&self) -> u32 {
        self.slot_bits * self.depth as u32
    }

    pub fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new(self.n_bits, 1, self.trace_bits())
    }

    pub fn solutions(&self) -> usize {
        self.f_table.iter().filter(|&&f| f).count()
    }

    pub fn classical_f(&self, x: usize) -> Result<bool> {
        self.f_table.get(x).copied().ok_or(Error::DecodeFailure(x))
    }

    pub fn classical_g(&self, x: usize) -> Result<u64> {
        self.g_table.get(x).copied().ok_or(Error::DecodeFailure(x))
    }

    /// `g` recomputed from the output tape of a reversible run. For a
    /// reversible system this agrees with the forward table; the uncompute
    /// step of [`grover_search`] relies on it.
    pub fn g_from_reversible(&self, x: usize) -> Result<u64> {
        let log = run_reversible(&self.system, self.decode_state(x)?, self.depth)?;
        self.encode_trace(&log.final_state.output.written())
    }

    fn f_at(&self, x: usize) -> bool {
        self.f_table.get(x).copied().unwrap_or(false)
    }

    fn g_at(&self, x: usize) -> u64 {
        self.g_table.get(x).copied().unwrap_or(0)
    }
}

/// Uniform over the given initial states, `y` in `(|0⟩ - |1⟩)/√2`, `z = 0`.
/// Every state must appear in `spec`'s table.
pub fn prepare_initial_superposition(spec: &OracleSpec, initial: &[String]) -> Result<StateVector> {
    let layout = spec.layout()?;
    if initial.is_empty() {
        return Err(Error::InvalidDefinition("no initial states".into()));
    }
    if initial.len() > 1usize << layout.x_bits {
        return Err(Error::EncodingOverflow {
            count: initial.len(),
            bits: layout.x_bits,
        });
    }
    let mut v = StateVector::zero(layout);
    let amp = 1.0 / (initial.len() as f64).sqrt() / std::f64::consts::SQRT_2;
    for s in initial {
        let x = spec.state_code(s).ok_or(Error::EncodingOverflow {
            count: initial.len(),
            bits: layout.x_bits,
        })?;
        let a = v.amplitudes_mut();
        a[layout.index(x, 0, 0)] = Complex64::new(amp, 0.0);
        a[layout.index(x, 1, 0)] = Complex64::new(-amp, 0.0);
    }
    Ok(v)
}

fn check_layout(spec: &OracleSpec, v: &StateVector) -> Result<RegisterLayout> {
    let layout = spec.layout()?;
    if v.layout() != layout {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            actual: v.len(),
        });
    }
    Ok(layout)
}

/// `|x, y, z⟩ ↦ |x, y ⊕ f(x), z ⊕ g(x)⟩`. Codes beyond the state table are
/// left alone.
pub fn apply_extended_oracle(v: &StateVector, spec: &OracleSpec) -> Result<StateVector> {
    let layout = check_layout(spec, v)?;
    let mut out = StateVector::zero(layout);
    let dst = out.amplitudes_mut();
    for (i, &a) in v.amplitudes().iter().enumerate() {
        let (x, y, z) = layout.split(i);
        let y2 = y ^ spec.f_at(x) as usize;
        let z2 = z ^ spec.g_at(x) as usize;
        dst[layout.index(x, y2, z2)] = a;
    }
    Ok(out)
}

/// `|x, y, z⟩ ↦ |x, y, z ⊕ g(x)⟩` for a given `g` table.
fn xor_trace(v: &StateVector, g: &[u64]) -> StateVector {
    let layout = v.layout();
    let mut out = StateVector::zero(layout);
    let dst = out.amplitudes_mut();
    for (i, &a) in v.amplitudes().iter().enumerate() {
        let (x, y, z) = layout.split(i);
        let z2 = z ^ g.get(x).copied().unwrap_or(0) as usize;
        dst[layout.index(x, y, z2)] = a;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionScope {
    /// Inversion about the mean over `x` in every `(y, z)` slice.
    X,
    /// Inversion about the mean over the `(x, z)` block in every `y` slice.
    JointXZ,
}

/// `a ↦ 2·mean - a` over the first `x_domain` codes of `x` (together with
/// all of `z` for the joint scope). Amplitudes outside the domain are left
/// alone.
pub fn diffusion(v: &StateVector, scope: DiffusionScope, x_domain: usize) -> StateVector {
    let layout = v.layout();
    let x_domain = x_domain.min(1 << layout.x_bits);
    let (ny, nz) = (1usize << layout.y_bits, 1usize << layout.z_bits);
    let mut out = v.clone();
    let reflect = |a: &mut [Complex64], block: &[usize]| {
        let mean: Complex64 = block.iter().map(|&i| a[i]).sum::<Complex64>() / block.len() as f64;
        for &i in block {
            a[i] = 2.0 * mean - a[i];
        }
    };
    let a = out.amplitudes_mut();
    match scope {
        DiffusionScope::X => {
            for y in 0..ny {
                for z in 0..nz {
                    let block: Vec<usize> = (0..x_domain).map(|x| layout.index(x, y, z)).collect();
                    reflect(a, &block);
                }
            }
        }
        DiffusionScope::JointXZ => {
            for y in 0..ny {
                let block: Vec<usize> = (0..x_domain)
                    .flat_map(|x| (0..nz).map(move |z| layout.index(x, y, z)))
                    .collect();
                reflect(a, &block);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Oracle, then `z ⊕= g(x)` again from the reversible run's output tape,
    /// then diffusion over `x`.
    Uncompute,
    /// Oracle, then diffusion over `(x, z)`; `z` is never cleared.
    Joint,
}

impl SearchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Uncompute => "uncompute",
            SearchMode::Joint => "joint",
        }
    }
}

impl std::str::FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncompute" => Ok(SearchMode::Uncompute),
            "joint" => Ok(SearchMode::Joint),
            _ => Err(Error::format("search mode", format!("{s:?}"))),
        }
    }
}

/// `⌊(π/4)·√(N/M)⌋`.
pub fn optimal_iterations(n: usize, m: usize) -> usize {
    assert!(m >= 1 && m <= n, "need 1 <= M <= N");
    (std::f64::consts::FRAC_PI_4 * (n as f64 / m as f64).sqrt()).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub x: usize,
    pub state: String,
    pub z: u64,
    pub f: bool,
}

#[derive(Debug, Clone)]
pub struct GroverRun {
    pub mode: SearchMode,
    pub iterations: usize,
    /// Probability of measuring an `x` with `f(x) = 1`, before the first
    /// iteration and after each one (`iterations + 1` entries).
    pub success_per_iteration: Vec<f64>,
    pub success_probability: f64,
    /// `iterations · d`.
    pub oracle_calls: usize,
    pub samples: Vec<Sample>,
    pub final_state: StateVector,
}

pub fn success_probability(v: &StateVector, spec: &OracleSpec) -> f64 {
    let layout = v.layout();
    v.probability_where(|i| spec.f_at(layout.split(i).0))
}

/// Runs `iterations` Grover iterates starting from the uniform superposition
/// over the state table, then draws `shots` seeded measurements.
pub fn grover_search(
    spec: &OracleSpec,
    mode: SearchMode,
    iterations: usize,
    seed: u64,
    shots: usize,
) -> Result<GroverRun> {
    let mut v = prepare_initial_superposition(spec, spec.states())?;
    let domain = spec.states().len();
    let uncompute_table: Vec<u64> = match mode {
        SearchMode::Uncompute => (0..domain)
            .into_par_iter()
            .map(|x| spec.g_from_reversible(x))
            .collect::<Result<_>>()?,
        SearchMode::Joint => Vec::new(),
    };
    let mut success = vec![success_probability(&v, spec)];
    for _ in 0..iterations {
        v = apply_extended_oracle(&v, spec)?;
        v = match mode {
            SearchMode::Uncompute => diffusion(&xor_trace(&v, &uncompute_table), DiffusionScope::X, domain),
            SearchMode::Joint => diffusion(&v, DiffusionScope::JointXZ, domain),
        };
        success.push(success_probability(&v, spec));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = v.layout();
    let samples = (0..shots)
        .map(|_| {
            let (x, _, z) = layout.split(v.sample(&mut rng));
            Ok(Sample {
                x,
                state: spec.decode_state(x)?.to_string(),
                z: z as u64,
                f: spec.f_at(x),
            })
        })
        .collect::<Result<_>>()?;

    Ok(GroverRun {
        mode,
        iterations,
        success_probability: *success.last().unwrap(),
        success_per_iteration: success,
        oracle_calls: iterations * spec.depth(),
        samples,
        final_state: v,
    })
}

/// The states one firing away from `state`, one per applicable rule, in rule
/// order and without duplicates.
pub fn neighbour_states(system: &ProductionSystemDef, state: &str) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for id in match_rules(state, system.rules()) {
        let next = apply_rule(state, system.rule(id).ok_or(Error::UnknownRule(id))?)?;
        if next != state && !out.contains(&next) {
            out.push(next);
        }
    }
    Ok(out)
}

/// `states` followed by their depth-1 neighbours not already present. Used to
/// widen a single initial state into a superposition worth searching.
pub fn with_neighbours(system: &ProductionSystemDef, states: &[String]) -> Result<Vec<String>> {
    let mut out = states.to_vec();
    for s in states {
        for n in neighbour_states(system, s)? {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    Ok(out)
}

/// Largest register whose amplitudes are written out in full.
pub const AMPLITUDE_DUMP_LIMIT: u32 = 16;

const AMPLITUDE_HEADER: [&str; 6] = ["index", "x", "y", "z", "re", "im"];

/// One row per basis state in index order.
pub fn amplitudes_to_csv(v: &StateVector) -> Result<String> {
    let layout = v.layout();
    if layout.total_bits() > AMPLITUDE_DUMP_LIMIT {
        return Err(Error::TooLarge {
            size: layout.dim(),
            limit: 1 << AMPLITUDE_DUMP_LIMIT,
        });
    }
    Ok(write_rows(
        &AMPLITUDE_HEADER,
        v.amplitudes().iter().enumerate().map(|(i, a)| {
            let (x, y, z) = layout.split(i);
            [
                i.to_string(),
                x.to_string(),
                y.to_string(),
                z.to_string(),
                a.re.to_string(),
                a.im.to_string(),
            ]
        }),
    ))
}

pub fn amplitudes_from_csv(layout: RegisterLayout, text: &str) -> Result<StateVector> {
    const WHAT: &str = "amplitude dump";
    let rows = read_rows(WHAT, text, &AMPLITUDE_HEADER)?;
    let mut amps = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        let index: usize = field(WHAT, rec, 0)?;
        if index != i {
            return Err(Error::format(WHAT, format!("expected index {i}, found {index}")));
        }
        amps.push(Complex64::new(field(WHAT, rec, 4)?, field(WHAT, rec, 5)?));
    }
    StateVector::from_amplitudes(layout, amps)
}
