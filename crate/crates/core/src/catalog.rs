//! Ready-made systems used by the tests, the CLI and the docs.

use crate::rules::{Alphabet, ConflictStrategy, Production, ProductionSystemDef};

/// Ten adjacent-swap rules sorting strings over `abcde`, from `edcba` to
/// `abcde`.
pub fn sorting_system() -> ProductionSystemDef {
    let pairs = [
        ("ba", "ab"),
        ("ca", "ac"),
        ("da", "ad"),
        ("ea", "ae"),
        ("cb", "bc"),
        ("db", "bd"),
        ("eb", "be"),
        ("dc", "cd"),
        ("ec", "ce"),
        ("ed", "de"),
    ];
    let rules = pairs
        .iter()
        .enumerate()
        .map(|(i, (pre, act))| Production::new(i as u32 + 1, *pre, *act))
        .collect();
    ProductionSystemDef::new(
        Alphabet::new("abcde".chars()).unwrap(),
        rules,
        vec!["edcba".into()],
        ["abcde".to_string()],
        ConflictStrategy::LowestRuleId,
    )
    .unwrap()
}

/// Two symbols, two single-symbol rules `a -> b` and `b -> a`; reaching `b`
/// is the goal.
pub fn toggle_system() -> ProductionSystemDef {
    ProductionSystemDef::new(
        Alphabet::new("ab".chars()).unwrap(),
        vec![Production::new(1, "a", "b"), Production::new(2, "b", "a")],
        vec!["a".into()],
        ["b".to_string()],
        ConflictStrategy::LowestRuleId,
    )
    .unwrap()
}

/// Binary branching: from any memory holding `x`, rule 1 writes a `0` and
/// rule 2 writes a `1` in front of it.
pub fn binary_tree_system() -> ProductionSystemDef {
    ProductionSystemDef::new(
        Alphabet::new("x01".chars()).unwrap(),
        vec![Production::new(1, "x", "0x"), Production::new(2, "x", "1x")],
        vec!["x".into()],
        [],
        ConflictStrategy::LowestRuleId,
    )
    .unwrap()
}

/// `count` candidate states written as fixed-width base-26 codes (`a, b, ...`
/// up to 26 states, then `aa, ab, ...`); one rule turns the candidate at
/// position `marked` into `*`, the only goal. At depth 1 exactly one initial
/// state satisfies the goal test.
pub fn marked_search_system(count: usize, marked: usize) -> ProductionSystemDef {
    assert!(count >= 1 && marked < count);
    let mut width = 1;
    while 26usize.pow(width) < count {
        width += 1;
    }
    let code = |mut i: usize| {
        let mut s = vec!['a'; width as usize];
        for c in s.iter_mut().rev() {
            *c = (b'a' + (i % 26) as u8) as char;
            i /= 26;
        }
        s.into_iter().collect::<String>()
    };
    let states: Vec<String> = (0..count).map(code).collect();
    let mut symbols: Vec<char> = (0..count.min(26)).map(|i| (b'a' + i as u8) as char).collect();
    symbols.push('*');
    ProductionSystemDef::new(
        Alphabet::new(symbols).unwrap(),
        vec![Production::new(1, states[marked].clone(), "*")],
        states,
        ["*".to_string()],
        ConflictStrategy::LowestRuleId,
    )
    .unwrap()
}

/// Every permutation of `symbols`, in lexicographic order of positions.
pub fn permutations(symbols: &str) -> Vec<String> {
    fn go(rest: &mut Vec<char>, prefix: &mut String, out: &mut Vec<String>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let c = rest.remove(i);
            prefix.push(c);
            go(rest, prefix, out);
            prefix.pop();
            rest.insert(i, c);
        }
    }
    let mut out = Vec::new();
    go(&mut symbols.chars().collect(), &mut String::new(), &mut out);
    out
}
