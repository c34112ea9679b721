use roml::disjointness::{from_json, gen_instance_with, solve_exact, to_json, validate_promise, DisjInstance, Kind, Violation};

fn yes() -> DisjInstance {
    gen_instance_with(60, 4, 5, Kind::Yes, 11).unwrap()
}

fn no() -> DisjInstance {
    gen_instance_with(60, 4, 5, Kind::No, 11).unwrap()
}

fn fresh_element(inst: &DisjInstance) -> u32 {
    (1..=inst.universe as u32)
        .find(|e| inst.sets.iter().all(|s| !s.contains(e)))
        .unwrap()
}

fn has(violations: &[Violation], pred: impl Fn(&Violation) -> bool) -> bool {
    violations.iter().any(pred)
}

#[test]
fn generated_instances_are_clean() {
    assert!(validate_promise(&yes()).is_empty());
    assert!(validate_promise(&no()).is_empty());
}

#[test]
fn hand_mutated_instances_are_rejected() {
    let mut cases: Vec<(&str, DisjInstance, fn(&Violation) -> bool)> = Vec::new();

    let mut m = yes();
    m.sets.pop();
    cases.push(("dropped set", m, |v| matches!(v, Violation::WrongSetCount { .. })));

    let mut m = no();
    m.sets[1].pop();
    cases.push(("short set", m, |v| matches!(v, Violation::WrongSize { .. })));

    let mut m = no();
    m.sets[0][1] = m.sets[0][0];
    cases.push(("repeated element", m, |v| matches!(v, Violation::DuplicateInSet { .. })));

    let mut m = no();
    m.sets[2][0] = 61;
    cases.push(("element above N", m, |v| matches!(v, Violation::OutOfUniverse { element: 61, .. })));

    let mut m = no();
    m.sets[3][0] = 0;
    cases.push(("element zero", m, |v| matches!(v, Violation::OutOfUniverse { element: 0, .. })));

    let mut m = no();
    let shared = m.sets[0][0];
    m.sets[1][0] = shared;
    cases.push(("pair overlap in a NO instance", m, |v| {
        matches!(v, Violation::PartialOccurrence { occurrences: 2, .. })
    }));

    let mut m = yes();
    let w = m.witness.unwrap();
    let pos = m.sets[0].iter().position(|&e| e == w).unwrap();
    m.sets[0][pos] = fresh_element(&m);
    cases.push(("witness removed from one set", m, |v| matches!(v, Violation::MissingWitness)));

    let mut m = yes();
    let extra = fresh_element(&m);
    let w = m.witness.unwrap();
    for set in &mut m.sets {
        let slot = set.iter().position(|&e| e != w).unwrap();
        set[slot] = extra;
    }
    cases.push(("two common elements", m, |v| matches!(v, Violation::MultipleCommon { .. })));

    let mut m = yes();
    m.witness = Some(fresh_element(&m));
    cases.push(("wrong declared witness", m, |v| matches!(v, Violation::WitnessMismatch { .. })));

    let mut m = yes();
    m.kind = Kind::No;
    m.witness = None;
    cases.push(("YES relabelled NO", m, |v| matches!(v, Violation::WitnessMismatch { .. })));

    assert_eq!(cases.len(), 10);
    for (name, inst, expected) in cases {
        let found = validate_promise(&inst);
        assert!(has(&found, expected), "{name}: got {found:?}");
    }
}

#[test]
fn solve_exact_matches_generator() {
    for seed in 0..10_000u64 {
        let kind = if seed % 2 == 0 { Kind::Yes } else { Kind::No };
        let inst = gen_instance_with(120, 6, 8, kind, seed).unwrap();
        assert_eq!(solve_exact(&inst), kind, "seed {seed}");
    }
}

#[test]
fn solve_exact_ignores_order_and_duplicates() {
    let mut inst = yes();
    for set in &mut inst.sets {
        set.reverse();
    }
    let first = inst.sets[0][0];
    inst.sets[0].push(first);
    assert_eq!(solve_exact(&inst), Kind::Yes);
}

#[test]
fn infeasible_promises_name_their_inequality() {
    let err = gen_instance_with(5, 2, 3, Kind::No, 0).unwrap_err().to_string();
    assert!(err.contains("t·w ≤ N"), "{err}");
    let err = gen_instance_with(4, 2, 3, Kind::Yes, 0).unwrap_err().to_string();
    assert!(err.contains("t·(w−1)+1 ≤ N"), "{err}");
    assert!(gen_instance_with(5, 2, 3, Kind::Yes, 0).is_ok());
}

#[test]
fn json_round_trip_is_canonical() {
    for inst in [yes(), no()] {
        let text = to_json(&inst);
        assert!(text.starts_with("{\"N\":60,\"t\":4,\"w\":5,\"kind\":"), "{text}");
        let back = from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(to_json(&back), text);
    }
}
