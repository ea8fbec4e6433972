mod common;

use common::*;
use htpg_core::netlist::{parse_bench, GateKind, Netlist};
use htpg_core::profile::Profile;
use htpg_core::satinit::{self, encode_cnf};
use htpg_core::sim;
use htpg_core::trojan::{
    estimate_activation_probability, insert_trojan, sample_trojans, TriggerLiteral, TrojanSpec,
};
use htpg_core::{BitVec, Error};
use rand::seq::SliceRandom;
use rand::Rng as _;

fn spec_by_name(n: &Netlist, id: &str, trigger: &[(&str, bool)], payload: &str) -> TrojanSpec {
    TrojanSpec {
        id: id.into(),
        trigger: trigger
            .iter()
            .map(|&(name, value)| TriggerLiteral {
                node: n.id(name).unwrap(),
                value,
            })
            .collect(),
        payload: n.id(payload).unwrap(),
    }
}

/// Draws a trigger and a payload outside the trigger's fanin cone, both by name.
fn random_trojan(
    toy: &Toy,
    rng: &mut htpg_core::seed::Rng,
) -> Option<(Vec<(String, bool)>, String)> {
    let mut nodes: Vec<&String> = toy
        .inputs
        .iter()
        .chain(toy.gates.iter().map(|g| &g.0))
        .collect();
    nodes.shuffle(rng);
    let q = rng.gen_range(1..=3usize).min(nodes.len() - 1);
    let trigger: Vec<(String, bool)> = nodes[..q]
        .iter()
        .map(|n| ((*n).clone(), rng.gen()))
        .collect();
    let roots: Vec<&str> = trigger.iter().map(|t| t.0.as_str()).collect();
    let cone = toy.fanin_cone(&roots);
    let legal: Vec<&String> = toy
        .gates
        .iter()
        .map(|g| &g.0)
        .filter(|g| !cone.contains(*g))
        .collect();
    let payload = legal.choose(rng)?;
    Some((trigger, (*payload).clone()))
}

#[test]
fn infected_outputs_match_flip_oracle() {
    let mut rng = rng("soundness");
    let mut pairs = 0;
    let mut detectable = 0;
    while pairs < 200 {
        let pis = rng.gen_range(2..=8);
        let gates = rng.gen_range(4..=40);
        let toy = Toy::random(&mut rng, pis, gates);
        let Some((trigger, payload)) = random_trojan(&toy, &mut rng) else {
            continue;
        };
        let golden = toy.netlist();
        let lits: Vec<(&str, bool)> = trigger.iter().map(|(n, v)| (n.as_str(), *v)).collect();
        let spec = spec_by_name(&golden, "ht", &lits, &payload);
        let infected = insert_trojan(&golden, &spec).unwrap();
        let mut any_mismatch = false;
        let mut oracle_says = false;
        for x in 0..1u64 << pis {
            let input = bits_of(x, pis);
            let plain = toy.eval(&input);
            let active = trigger.iter().all(|(n, v)| plain[n] == *v);
            let golden_po = toy.eval_outputs(&input);
            let flipped = toy.eval_flipped(&input, Some(&payload));
            let flipped_po: Vec<bool> = toy.outputs.iter().map(|o| flipped[o]).collect();
            let want = if active { &flipped_po } else { &golden_po };
            let got = sim::primary_outputs_of(
                &sim::simulate(&infected, &vec_of(x, pis)).unwrap(),
                &infected,
            );
            assert_eq!(
                got,
                BitVec::from_bools(want.iter().copied()),
                "{}\n{trigger:?} -> {payload}, x={x}",
                toy.to_bench()
            );
            let g =
                sim::primary_outputs_of(&sim::simulate(&golden, &vec_of(x, pis)).unwrap(), &golden);
            any_mismatch |= g != got;
            oracle_says |= active && flipped_po != golden_po;
        }
        assert_eq!(any_mismatch, oracle_says);
        detectable += oracle_says as usize;
        pairs += 1;
    }
    assert!(
        detectable > 20,
        "too few detectable cases to mean anything: {detectable}"
    );
}

const TOY: &str =
    "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nINPUT(f)\nOUTPUT(o)\nOUTPUT(p)\n\
    x = AND(a, b)\ny = NOR(c, d)\nz = XOR(e, f)\nw = NAND(x, z)\no = OR(w, y)\np = AND(d, e)\n";

#[test]
fn insertion_structure() {
    let n = parse_bench(TOY).unwrap();
    let spec = spec_by_name(&n, "t", &[("x", true), ("y", false), ("f", false)], "p");
    let t = insert_trojan(&n, &spec).unwrap();
    // two inverters, q-1 = 2 ANDs, one XOR
    assert_eq!(t.node_count(), n.node_count() + 5);
    assert_eq!(t.gate_count(), n.gate_count() + 5);
    for i in 0..n.node_count() as u32 {
        let id = htpg_core::netlist::NodeId(i);
        assert_eq!(t.name(id), n.name(id));
        assert_eq!(t.driver(id).map(|g| g.kind), n.driver(id).map(|g| g.kind));
    }
    let added: Vec<GateKind> = (n.node_count()..t.node_count())
        .map(|i| t.driver(htpg_core::netlist::NodeId(i as u32)).unwrap().kind)
        .collect();
    assert_eq!(added.iter().filter(|&&k| k == GateKind::Not).count(), 2);
    assert_eq!(added.iter().filter(|&&k| k == GateKind::And).count(), 2);
    assert_eq!(added.iter().filter(|&&k| k == GateKind::Xor).count(), 1);
    assert_eq!(t.name(t.outputs()[1]), "t_payload");
    assert_eq!(n.name(n.outputs()[1]), "p", "golden untouched");
}

#[test]
fn six_input_exhaustive_mismatch_set() {
    let n = parse_bench(TOY).unwrap();
    let spec = spec_by_name(&n, "t", &[("x", true), ("y", true)], "z");
    let t = insert_trojan(&n, &spec).unwrap();
    let mut mismatches = Vec::new();
    for v in 0..64u64 {
        let g = sim::simulate(&n, &vec_of(v, 6)).unwrap();
        let i = sim::simulate(&t, &vec_of(v, 6)).unwrap();
        if sim::primary_outputs_of(&g, &n) != sim::primary_outputs_of(&i, &t) {
            mismatches.push(v);
        }
    }
    // a=b=1, c=d=0 fires; flipping z changes w, but o = OR(w, y) with y = 1 masks it.
    assert!(mismatches.is_empty());
    let spec = spec_by_name(&n, "t", &[("x", true), ("d", false)], "z");
    let t = insert_trojan(&n, &spec).unwrap();
    let got: Vec<u64> = (0..64u64)
        .filter(|&v| {
            let g = sim::simulate(&n, &vec_of(v, 6)).unwrap();
            let i = sim::simulate(&t, &vec_of(v, 6)).unwrap();
            sim::primary_outputs_of(&g, &n) != sim::primary_outputs_of(&i, &t)
        })
        .collect();
    // fires on a=b=1, d=0; shows at o only when y=0, i.e. c=1.
    let want: Vec<u64> = (0..64u64).filter(|v| v & 0b1111 == 0b0111).collect();
    assert_eq!(got, want);
}

#[test]
fn insertion_errors() {
    let n = parse_bench(TOY).unwrap();
    let cyc = spec_by_name(&n, "t", &[("w", true)], "x");
    assert!(matches!(
        insert_trojan(&n, &cyc),
        Err(Error::TrojanCycle(_))
    ));
    let same = spec_by_name(&n, "t", &[("w", true)], "w");
    assert!(insert_trojan(&n, &same).is_err());
    let mut bogus = spec_by_name(&n, "t", &[("w", true)], "p");
    bogus.trigger[0].node = htpg_core::netlist::NodeId(999);
    assert!(insert_trojan(&n, &bogus).is_err());
    let clash = spec_by_name(&n, "x", &[("w", true), ("y", true)], "p");
    let named = parse_bench(&format!("{TOY}x_payload = BUFF(a)\n")).unwrap();
    let clash = TrojanSpec {
        payload: named.id("p").unwrap(),
        trigger: clash
            .trigger
            .iter()
            .map(|l| TriggerLiteral {
                node: named.id(n.name(l.node)).unwrap(),
                ..*l
            })
            .collect(),
        ..clash
    };
    assert!(insert_trojan(&named, &clash).is_err());
}

#[test]
fn activation_probability_simple_triggers() {
    let n = parse_bench(TOY).unwrap();
    let single = spec_by_name(&n, "t", &[("a", true)], "p");
    let (p, se) = estimate_activation_probability(&n, &single, 100_000, 1).unwrap();
    assert!((p - 0.5).abs() < 4.0 * se.max(1e-3), "{p} {se}");
    let three = spec_by_name(&n, "t", &[("a", true), ("c", true), ("e", true)], "p");
    let (p, se) = estimate_activation_probability(&n, &three, 100_000, 2).unwrap();
    assert!((p - 0.125).abs() < 4.0 * se, "{p} {se}");
    assert!(estimate_activation_probability(&n, &three, 0, 2).is_err());
}

#[test]
fn activation_probability_matches_enumeration() {
    let mut rng = rng("activation");
    let mut checked = 0;
    while checked < 15 {
        let pis = rng.gen_range(3..=10);
        let toy = Toy::random(&mut rng, pis, 30);
        let Some((trigger, payload)) = random_trojan(&toy, &mut rng) else {
            continue;
        };
        let n = toy.netlist();
        let lits: Vec<(&str, bool)> = trigger.iter().map(|(a, v)| (a.as_str(), *v)).collect();
        let spec = spec_by_name(&n, "t", &lits, &payload);
        let exact = (0..1u64 << pis)
            .filter(|&x| {
                let m = toy.eval(&bits_of(x, pis));
                trigger.iter().all(|(a, v)| m[a] == *v)
            })
            .count() as f64
            / (1u64 << pis) as f64;
        let trials = 20_000;
        let (p, _) = estimate_activation_probability(&n, &spec, trials, checked).unwrap();
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((p - exact).abs() <= 3.0 * sigma + 1e-12, "{p} vs {exact}");
        checked += 1;
    }
}

fn check_sampled(n: &Netlist, specs: &[TrojanSpec], p: &Profile, q: usize) {
    let cnf = encode_cnf(n).unwrap();
    let ids: std::collections::HashSet<_> = specs.iter().map(|s| s.id.clone()).collect();
    let unique: std::collections::HashSet<_> = specs
        .iter()
        .map(|s| {
            let mut t: Vec<_> = s.trigger.clone();
            t.sort();
            (t, s.payload)
        })
        .collect();
    assert_eq!(unique.len(), specs.len(), "specs are distinct");
    assert_eq!(ids.len(), specs.len());
    for s in specs {
        assert_eq!(s.trigger.len(), q);
        for l in &s.trigger {
            assert!(p
                .rare_set
                .iter()
                .any(|r| r.node == l.node && r.rare_value == l.value));
        }
        let cone = n.transitive_fanin(&s.trigger.iter().map(|l| l.node).collect::<Vec<_>>());
        assert!(!cone[s.payload.index()] && !n.is_input(s.payload));
        let assumptions: Vec<i32> = s.trigger.iter().map(|l| cnf.lit(l.node, l.value)).collect();
        let a = satinit::solve(&cnf, &assumptions).expect("trigger is satisfiable");
        let v = satinit::input_vector(n, &cnf, &a);
        let st = sim::simulate(n, &v).unwrap();
        assert!(s
            .trigger
            .iter()
            .all(|l| sim::node_value(&st, n, l.node) == l.value));
        insert_trojan(n, s).unwrap();
    }
}

#[test]
fn sampled_trojans_revalidate() {
    for name in ["c432", "c499"] {
        let n = load(name);
        let p = Profile::compute(&n, 0.1, 20_000, 5).unwrap();
        let specs = sample_trojans(&n, &p, 10, 3, 11).unwrap();
        assert_eq!(specs.len(), 10);
        check_sampled(&n, &specs, &p, 3);
        assert_eq!(specs, sample_trojans(&n, &p, 10, 3, 11).unwrap());
    }
}

#[test]
fn sampled_trojans_are_detectable_exhaustively() {
    let mut rng = rng("sampled-small");
    let mut done = 0;
    for _ in 0..400 {
        if done == 25 {
            break;
        }
        let toy = Toy::random(&mut rng, 8, 50);
        let n = toy.netlist();
        let p = Profile::compute(&n, 0.2, 20_000, 1).unwrap();
        let Ok(specs) = sample_trojans(&n, &p, 2, 2, 3) else {
            continue;
        };
        check_sampled(&n, &specs, &p, 2);
        for s in &specs {
            let t = insert_trojan(&n, s).unwrap();
            let seen = (0..256u64).any(|x| {
                let g = sim::simulate(&n, &vec_of(x, 8)).unwrap();
                let i = sim::simulate(&t, &vec_of(x, 8)).unwrap();
                sim::primary_outputs_of(&g, &n) != sim::primary_outputs_of(&i, &t)
            });
            assert!(seen, "sampled trojan {} cannot be observed", s.id);
        }
        done += 1;
    }
    assert_eq!(done, 25);
}

#[test]
fn forced_trigger_when_q_equals_pool() {
    let n = parse_bench(TOY).unwrap();
    let p = Profile::compute(&n, 0.2, 50_000, 1).unwrap();
    let pool = htpg_core::trojan::trigger_pool(&p, p.rare_set.len());
    let q = pool.len();
    if let Ok(specs) = sample_trojans(&n, &p, 1, q, 1) {
        let mut got: Vec<_> = specs[0].trigger.clone();
        got.sort();
        let mut want = pool.clone();
        want.sort();
        assert_eq!(got, want);
    }
    assert!(sample_trojans(&n, &p, 1, q + 1, 1).is_err());
}
