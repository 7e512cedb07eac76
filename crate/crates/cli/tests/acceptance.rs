//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qps_core::catalog::{marked_search_system, permutations, sorting_system, toggle_system};
use qps_core::grover::{apply_extended_oracle, grover_search, optimal_iterations, OracleSpec, SearchMode};
use qps_core::operator::{
    build_operator, compute_encoding, dense_matrix, verify_bijection, BasisState, SymbolTransition,
};
use qps_core::perf::{bounds_for_m, hierarchical_comparison, hierarchical_comparison_with, ratio, ratio_surface};
use qps_core::reversible::{log_from_csv, run_reversible};
use qps_core::rules::{trace_steps_from_csv, RuleId};
use qps_core::state::{Complex64, StateVector};

type Check = fn() -> Result<String, String>;

const FORWARD_MEMORIES: [&str; 11] = [
    "edcba", "edcab", "edacb", "eadcb", "aedcb", "aedbc", "aebdc", "abedc", "abecd", "abced", "abcde",
];

/// Conflict sets as printed, in printed order.
const CONFLICT_SETS: [&[u32]; 11] = [
    &[1, 5, 8, 10],
    &[2, 8, 10],
    &[5, 3, 10],
    &[5, 8, 4],
    &[5, 8, 10],
    &[6, 10],
    &[8, 7],
    &[8, 10],
    &[9],
    &[10],
    &[],
];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn qps(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qps"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn golden_trace() -> Result<String, String> {
    let text = qps(&["run", "--input", &data("sort.ps"), "--initial", "edcba"])?;
    let steps = trace_steps_from_csv(&text).map_err(|e| e.to_string())?;
    ensure(steps.len() == 11, || format!("{} rows", steps.len()))?;
    let fired: Vec<RuleId> = steps.iter().filter_map(|s| s.fired).collect();
    let expected: Vec<RuleId> = (1..=10).map(RuleId).collect();
    ensure(fired == expected, || format!("fired {fired:?}"))?;
    for (i, s) in steps.iter().enumerate() {
        ensure(s.memory == FORWARD_MEMORIES[i], || {
            format!("row {i} memory {}", s.memory)
        })?;
        let got: BTreeSet<u32> = s.conflict_set.iter().map(|r| r.0).collect();
        let want: BTreeSet<u32> = CONFLICT_SETS[i].iter().copied().collect();
        ensure(got == want, || format!("row {i} conflict set {got:?}"))?;
    }
    Ok("fires R1..R10, 11 memories and conflict sets match".into())
}

fn golden_reversible_log() -> Result<String, String> {
    let text = qps(&["reverse", "--input", &data("sort.ps"), "--initial", "edcba"])?;
    let rows = log_from_csv(&text).map_err(|e| e.to_string())?;
    ensure(rows.len() == 25, || format!("{} rows", rows.len()))?;
    let mut memories: Vec<&str> = FORWARD_MEMORIES.to_vec();
    memories.extend(["abcde"; 4]);
    memories.extend(FORWARD_MEMORIES.iter().rev().skip(1));
    let mut rules: Vec<Option<String>> = (1..=10).map(|i| Some(format!("R{i}"))).collect();
    rules.extend(vec![None; 5]);
    rules.extend((1..=10).rev().map(|i| Some(format!("R{i}^-1"))));
    for (i, row) in rows.iter().enumerate() {
        ensure(row.memory == memories[i], || format!("row {i} memory {}", row.memory))?;
        ensure(row.rule == rules[i], || format!("row {i} rule {:?}", row.rule))?;
    }
    let last = rows.last().unwrap();
    ensure(last.memory == "edcba", || "final memory".into())?;
    ensure(last.history.is_blank(), || format!("history {}", last.history))?;
    let expected: Vec<RuleId> = (1..=10).map(RuleId).collect();
    ensure(last.output.written() == expected, || format!("output {}", last.output))?;
    Ok("25 rows; ends at edcba, blank history, output R1..R10".into())
}

fn all_permutations_reverse() -> Result<String, String> {
    let sys = sorting_system();
    let perms = permutations("abcde");
    for p in &perms {
        let log = run_reversible(&sys, p, 10_000).map_err(|e| format!("{p}: {e}"))?;
        ensure(&log.final_state.memory == p, || {
            format!("{p} came back as {}", log.final_state.memory)
        })?;
        ensure(log.final_state.output.written() == log.forward_trace.fired(), || {
            format!("{p}: output tape differs from forward trace")
        })?;
    }
    Ok(format!("{} permutations restored", perms.len()))
}

/// Toggle system truth table written out independently of the builder.
fn toggle_truth_table() -> Vec<usize> {
    let mut t = Vec::new();
    for gamma in 0..2usize {
        for b0 in 0..2usize {
            for b1 in 0..2usize {
                for b2 in 0..2usize {
                    let (r, g2, d) = if gamma == 0 { (0, 1, 1) } else { (1, 0, 0) };
                    t.push(8 * gamma + 4 * (b0 ^ r) + 2 * (b1 ^ g2) + (b2 ^ d));
                }
            }
        }
    }
    t
}

fn operator_correctness() -> Result<String, String> {
    let mut sizes = Vec::new();
    for sys in [sorting_system(), toggle_system()] {
        let t = SymbolTransition::from_system(&sys).map_err(|e| e.to_string())?;
        let op = build_operator(&sys, &t).map_err(|e| e.to_string())?;
        ensure(verify_bijection(&op).ok, || "not a bijection".into())?;
        let m = dense_matrix(&op).map_err(|e| e.to_string())?;
        let packed: Vec<Vec<u64>> = m
            .iter()
            .map(|row| {
                let mut w = vec![0u64; row.len().div_ceil(64)];
                for (j, &v) in row.iter().enumerate() {
                    w[j / 64] |= (v as u64) << (j % 64);
                }
                w
            })
            .collect();
        for (i, ri) in packed.iter().enumerate() {
            for (j, rj) in packed.iter().enumerate() {
                let dot: u32 = ri.iter().zip(rj).map(|(a, b)| (a & b).count_ones()).sum();
                ensure(dot == (i == j) as u32, || format!("(M Mᵀ)[{i}][{j}] = {dot}"))?;
            }
        }
        let enc = compute_encoding(&sys);
        for lambda in 0..op.size() {
            let g0 = BasisState::from_index(&enc, lambda).gamma;
            let g1 = BasisState::from_index(&enc, op.image(lambda)).gamma;
            ensure(g0 == g1, || format!("γ changed at {lambda}"))?;
        }
        sizes.push(op.size());
    }
    let sys = toggle_system();
    let op = build_operator(&sys, &SymbolTransition::from_system(&sys).unwrap()).unwrap();
    ensure(op.map() == toggle_truth_table().as_slice(), || {
        format!("toy map {:?}", op.map())
    })?;
    Ok(format!("sizes {sizes:?}; M·Mᵀ = I; γ preserved; toy table matches"))
}

fn sort_toy(depth: usize) -> OracleSpec {
    let states = permutations("abcde").into_iter().take(6).collect();
    OracleSpec::with_states(&sorting_system(), depth, states).unwrap()
}

fn amplitude_flip() -> Result<String, String> {
    let spec = sort_toy(1);
    let layout = spec.layout().map_err(|e| e.to_string())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut worst = 0.0f64;
    for x in 0..spec.states().len() {
        let mut v = StateVector::zero(layout);
        v.amplitudes_mut()[layout.index(x, 0, 0)] = Complex64::new(h, 0.0);
        v.amplitudes_mut()[layout.index(x, 1, 0)] = Complex64::new(-h, 0.0);
        let w = apply_extended_oracle(&v, &spec).map_err(|e| e.to_string())?;
        let sign = if spec.classical_f(x).unwrap() { -1.0 } else { 1.0 };
        let g = spec.classical_g(x).unwrap() as usize;
        for (i, a) in w.amplitudes().iter().enumerate() {
            let want = if i == layout.index(x, 0, g) {
                sign * h
            } else if i == layout.index(x, 1, g) {
                -sign * h
            } else {
                0.0
            };
            worst = worst.max((a - Complex64::new(want, 0.0)).norm());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!(
        "{} basis states, {} with f = 1; max deviation {worst:e}",
        spec.states().len(),
        spec.solutions()
    ))
}

fn brute_force(n: usize, marked: usize, k: usize) -> f64 {
    let mut a = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..k {
        a[marked] = -a[marked];
        let mean = a.iter().sum::<f64>() / n as f64;
        a.iter_mut().for_each(|x| *x = 2.0 * mean - *x);
    }
    a[marked] * a[marked]
}

fn grover_closed_form() -> Result<String, String> {
    let spec8 = OracleSpec::new(&marked_search_system(8, 5), 1).unwrap();
    let p8 = grover_search(&spec8, SearchMode::Uncompute, 2, 0, 0)
        .map_err(|e| e.to_string())?
        .success_probability;
    let closed = (5.0 * (1.0f64 / 8.0).sqrt().asin()).sin().powi(2);
    ensure((p8 - closed).abs() <= 1e-9, || format!("N=8: {p8} vs {closed}"))?;
    ensure((p8 - brute_force(8, 5, 2)).abs() <= 1e-9, || "N=8 brute force".into())?;
    ensure((p8 - 0.9453).abs() <= 1e-4, || format!("N=8: {p8}"))?;

    let spec4 = OracleSpec::new(&marked_search_system(4, 2), 1).unwrap();
    let p4 = grover_search(&spec4, SearchMode::Uncompute, 1, 0, 0)
        .map_err(|e| e.to_string())?
        .success_probability;
    ensure((p4 - 1.0).abs() <= 1e-12, || format!("N=4: {p4}"))?;

    for n in [8, 16, 64] {
        let spec = OracleSpec::new(&marked_search_system(n, 1), 1).unwrap();
        let run = grover_search(&spec, SearchMode::Uncompute, optimal_iterations(n, 1), 0, 0).unwrap();
        ensure(run.success_per_iteration.windows(2).all(|w| w[1] > w[0]), || {
            format!("N={n} not monotone: {:?}", run.success_per_iteration)
        })?;
    }

    // 2^14 candidates, one solution, depth 1: n = 14, y = 1, p = 1, m = 16.
    let big = OracleSpec::new(&marked_search_system(1 << 14, 9_999), 1).unwrap();
    let m = big.layout().unwrap().total_bits();
    ensure(m == 16, || format!("m = {m}"))?;
    let k = optimal_iterations(1 << 14, 1);
    let unc = grover_search(&big, SearchMode::Uncompute, k, 0, 0).map_err(|e| e.to_string())?;
    let joint = grover_search(&big, SearchMode::Joint, k, 0, 0).map_err(|e| e.to_string())?;
    let theta = (1.0f64 / (1 << 14) as f64).sqrt().asin();
    let expected = ((2 * k + 1) as f64 * theta).sin().powi(2);
    ensure((unc.success_probability - expected).abs() <= 1e-9, || {
        format!("m = 16: {} vs {expected}", unc.success_probability)
    })?;
    Ok(format!(
        "N=8 k=2: {p8:.10}; N=4 k=1: {p4:.12}; m=16 k={k}: uncompute {:.9}, joint {:.6} (reported)",
        unc.success_probability, joint.success_probability
    ))
}

fn performance_model() -> Result<String, String> {
    ensure(ratio(4, 2) == 2.0 && ratio(4, 2) == 4f64.sqrt(), || {
        "ratio(4, 2)".into()
    })?;
    for k in 0..=6u32 {
        let s = 4u64.pow(k);
        let m = 4 * k;
        ensure(ratio(s, m) == 1.0, || format!("ratio({s}, {m}) = {}", ratio(s, m)))?;
    }
    ensure(bounds_for_m(8) == (3, 6), || format!("{:?}", bounds_for_m(8)))?;
    let rows = ratio_surface(1..=1 << 13, 1);
    for w in rows.windows(2) {
        if w[0].s_i == w[1].s_i {
            let f = w[1].ratio / w[0].ratio;
            ensure((f - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12, || {
                format!("penalty {f} at s_i = {}", w[0].s_i)
            })?;
        }
    }
    let mut lows = std::collections::BTreeMap::<u64, u32>::new();
    for r in &rows {
        lows.entry(r.s_i).or_insert(r.m);
    }
    for (&s, &lo) in &lows {
        ensure(ratio(s, lo) >= 1.0, || format!("ratio below 1 at s_i = {s}, m = {lo}"))?;
    }
    let mut plateaus = 0;
    for k in 1..=13u32 {
        let plateau: BTreeSet<u32> = ((1u64 << (k - 1)) + 1..=1 << k).map(|s| lows[&s]).collect();
        ensure(plateau.len() == 1 && plateau.contains(&k), || {
            format!("plateau {k}: {plateau:?}")
        })?;
        plateaus += 1;
    }
    Ok(format!(
        "{} surface rows; {plateaus} plateaus with constant m-low",
        rows.len()
    ))
}

fn hierarchical() -> Result<String, String> {
    for n in 0..=10u32 {
        let want = (1.0 / 2f64.powi(n as i32 + 1)).sqrt();
        let got = hierarchical_comparison(n);
        ensure((got - want).abs() <= 1e-15 * want, || format!("n = {n}: {got}"))?;
        for p in 0..=32 {
            let v = hierarchical_comparison_with(n, p);
            ensure((v - want).abs() <= 1e-15 * want, || format!("n = {n}, p = {p}: {v}"))?;
        }
    }
    Ok("n in 0..=10, p in 0..=32".into())
}

fn main() -> ExitCode {
    let checks: [(&str, &str, Check, Duration); 8] = [
        ("AC1", "golden forward trace", golden_trace, Duration::from_secs(1)),
        (
            "AC2",
            "golden reversible log",
            golden_reversible_log,
            Duration::from_secs(1),
        ),
        (
            "AC3",
            "reversibility over all permutations",
            all_permutations_reverse,
            Duration::from_secs(5),
        ),
        (
            "AC4",
            "operator correctness",
            operator_correctness,
            Duration::from_secs(10),
        ),
        ("AC5", "oracle amplitude flip", amplitude_flip, Duration::from_secs(10)),
        ("AC6", "grover closed form", grover_closed_form, Duration::from_secs(30)),
        ("AC7", "performance model", performance_model, Duration::from_secs(5)),
        ("AC8", "hierarchical comparison", hierarchical, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in checks {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= limit {
                Ok(detail)
            } else {
                Err(format!("took {elapsed:?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(detail) => println!("[PASS] {id} {name} ({} ms): {detail}", elapsed.as_millis()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name} ({} ms): {why}", elapsed.as_millis());
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
