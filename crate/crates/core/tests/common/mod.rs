#![allow(dead_code)]

use std::collections::HashMap;

use htpg_core::netlist::{parse_bench, Netlist};
use htpg_core::seed::{self, Rng};
use htpg_core::BitVec;
use rand::seq::SliceRandom;
use rand::Rng as _;

pub fn bench_text(name: &str) -> String {
    let path = format!("{}/../htpg/data/{name}.bench", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn load(name: &str) -> Netlist {
    parse_bench(&bench_text(name)).unwrap()
}

/// A generated circuit kept in its own plain form so the reference evaluator
/// never touches the library's data structures.
#[derive(Clone, Debug)]
pub struct Toy {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// (output, kind keyword, operand names)
    pub gates: Vec<(String, &'static str, Vec<String>)>,
}

const KINDS: [&str; 8] = ["AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUFF"];

impl Toy {
    /// Random acyclic circuit. Gate lines are shuffled so the text is not in
    /// topological order.
    pub fn random(rng: &mut Rng, pis: usize, gates: usize) -> Toy {
        let inputs: Vec<String> = (0..pis).map(|i| format!("i{i}")).collect();
        let mut pool = inputs.clone();
        let mut gs = Vec::new();
        for g in 0..gates {
            let kind = KINDS[rng.gen_range(0..KINDS.len())];
            let arity = if kind == "NOT" || kind == "BUFF" {
                1
            } else {
                rng.gen_range(2..=4.min(pool.len().max(2)))
            };
            let ins: Vec<String> = (0..arity)
                .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                .collect();
            let name = format!("g{g}");
            pool.push(name.clone());
            gs.push((name, kind, ins));
        }
        let mut outputs: Vec<String> = gs
            .iter()
            .rev()
            .take(3.min(gs.len()))
            .map(|g| g.0.clone())
            .collect();
        if let Some(extra) = gs.get(rng.gen_range(0..gs.len().max(1))) {
            if !outputs.contains(&extra.0) {
                outputs.push(extra.0.clone());
            }
        }
        if outputs.is_empty() {
            outputs.push(inputs[0].clone());
        }
        gs.shuffle(rng);
        Toy {
            inputs,
            outputs,
            gates: gs,
        }
    }

    pub fn to_bench(&self) -> String {
        let mut s = String::new();
        for i in &self.inputs {
            s += &format!("INPUT({i})\n");
        }
        for o in &self.outputs {
            s += &format!("OUTPUT({o})\n");
        }
        for (o, k, ins) in &self.gates {
            s += &format!("{o} = {k}({})\n", ins.join(", "));
        }
        s
    }

    pub fn netlist(&self) -> Netlist {
        parse_bench(&self.to_bench()).unwrap()
    }

    /// Recursive evaluation with memoization, by name.
    pub fn eval(&self, input: &[bool]) -> HashMap<String, bool> {
        self.eval_flipped(input, None)
    }

    /// Same as `eval`, with the gate named `flip` complemented after evaluation.
    pub fn eval_flipped(&self, input: &[bool], flip: Option<&str>) -> HashMap<String, bool> {
        let defs: HashMap<&str, (&str, &Vec<String>)> = self
            .gates
            .iter()
            .map(|(o, k, ins)| (o.as_str(), (*k, ins)))
            .collect();
        let mut memo: HashMap<String, bool> = self
            .inputs
            .iter()
            .cloned()
            .zip(input.iter().copied())
            .collect();
        type Defs<'a> = HashMap<&'a str, (&'a str, &'a Vec<String>)>;
        fn go(n: &str, defs: &Defs, flip: Option<&str>, memo: &mut HashMap<String, bool>) -> bool {
            if let Some(&v) = memo.get(n) {
                return v;
            }
            let (k, ins) = defs[n];
            let vals: Vec<bool> = ins.iter().map(|i| go(i, defs, flip, memo)).collect();
            let and = vals.iter().all(|&b| b);
            let or = vals.iter().any(|&b| b);
            let xor = vals.iter().filter(|&&b| b).count() % 2 == 1;
            let v = match k {
                "AND" => and,
                "NAND" => !and,
                "OR" => or,
                "NOR" => !or,
                "XOR" => xor,
                "XNOR" => !xor,
                "NOT" => !vals[0],
                "BUFF" => vals[0],
                _ => unreachable!(),
            } ^ (flip == Some(n));
            memo.insert(n.to_string(), v);
            v
        }
        for (o, _, _) in &self.gates {
            go(o, &defs, flip, &mut memo);
        }
        memo
    }

    /// Names of every node feeding `roots`, the roots included.
    pub fn fanin_cone(&self, roots: &[&str]) -> std::collections::HashSet<String> {
        let defs: HashMap<&str, &Vec<String>> = self
            .gates
            .iter()
            .map(|(o, _, ins)| (o.as_str(), ins))
            .collect();
        let mut seen = std::collections::HashSet::new();
        let mut stack: Vec<String> = roots.iter().map(|r| r.to_string()).collect();
        while let Some(n) = stack.pop() {
            if seen.insert(n.clone()) {
                if let Some(ins) = defs.get(n.as_str()) {
                    stack.extend(ins.iter().cloned());
                }
            }
        }
        seen
    }

    pub fn eval_outputs(&self, input: &[bool]) -> Vec<bool> {
        let m = self.eval(input);
        self.outputs.iter().map(|o| m[o]).collect()
    }
}

pub fn bits_of(x: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| (x >> i) & 1 == 1).collect()
}

pub fn vec_of(x: u64, width: usize) -> BitVec {
    BitVec::from_bools(bits_of(x, width))
}

pub fn rng(label: &str) -> Rng {
    seed::rng(seed::derive(0x5eed, label))
}
