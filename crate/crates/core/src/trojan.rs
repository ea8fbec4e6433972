//! Benchmark Trojans: an AND over rare-node literals triggers an XOR that
//! flips a payload signal.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand::RngCore;

use crate::error::{invalid, Error, Result};
use crate::netlist::{GateKind, Netlist, NetlistBuilder, NodeId};
use crate::profile::{Profile, RareNode};
use crate::satinit::{self, SolveOutcome, Solver};
use crate::seed;
use crate::sim::{self, LANES};
use crate::BitVec;

/// One trigger input: the trigger needs `node == value`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TriggerLiteral {
    pub node: NodeId,
    pub value: bool,
}

impl From<&RareNode> for TriggerLiteral {
    fn from(r: &RareNode) -> Self {
        TriggerLiteral {
            node: r.node,
            value: r.rare_value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrojanSpec {
    pub id: String,
    pub trigger: Vec<TriggerLiteral>,
    pub payload: NodeId,
}

impl TrojanSpec {
    pub fn oracle(&self) -> crate::tpg::TriggerOracle {
        crate::tpg::TriggerOracle {
            literals: self.trigger.iter().map(|l| (l.node, l.value)).collect(),
            infected: None,
        }
    }

    /// Oracle that fires only when the Trojan shows at a primary output.
    pub fn manifest_oracle(&self, netlist: &Netlist) -> Result<crate::tpg::TriggerOracle> {
        Ok(crate::tpg::TriggerOracle {
            infected: Some(insert_trojan(netlist, self)?),
            ..self.oracle()
        })
    }

    /// Lanes of 64 packed vectors (node values by id) on which the trigger fires.
    pub fn fires_words(&self, values: &[u64]) -> u64 {
        self.trigger.iter().fold(!0u64, |acc, l| {
            acc & if l.value {
                values[l.node.index()]
            } else {
                !values[l.node.index()]
            }
        })
    }

    fn validate(&self, netlist: &Netlist) -> Result<()> {
        let n = netlist.node_count();
        if self.trigger.is_empty() {
            return Err(invalid("trigger must not be empty"));
        }
        for l in self.trigger.iter().map(|l| l.node).chain([self.payload]) {
            if l.index() >= n {
                return Err(Error::UnknownNode(format!("{l}")));
            }
        }
        let distinct: BTreeSet<NodeId> = self.trigger.iter().map(|l| l.node).collect();
        if distinct.len() != self.trigger.len() {
            return Err(invalid("trigger nodes must be distinct"));
        }
        if distinct.contains(&self.payload) {
            return Err(invalid("payload must not be a trigger node"));
        }
        Ok(())
    }
}

/// Name of the XOR gate that replaces the payload signal.
pub fn payload_name(spec: &TrojanSpec) -> String {
    format!("{}_payload", spec.id)
}

/// Builds the Trojan-infected netlist; `netlist` itself is untouched.
///
/// Original nodes keep their ids and names. New nodes are appended: one
/// inverter per literal with value 0, a chain of two-input ANDs and the XOR.
/// Every reader of the payload (and its output ports) moves to the XOR.
pub fn insert_trojan(netlist: &Netlist, spec: &TrojanSpec) -> Result<Netlist> {
    netlist.ensure_combinational()?;
    spec.validate(netlist)?;
    let cone = netlist.transitive_fanin(&spec.trigger.iter().map(|l| l.node).collect::<Vec<_>>());
    if cone[spec.payload.index()] {
        return Err(Error::TrojanCycle(netlist.name(spec.payload).into()));
    }
    let id = &spec.id;
    let xor = payload_name(spec);
    let payload = netlist.name(spec.payload);
    let mut fresh = Vec::new();
    let mut b = NetlistBuilder::new();
    for i in 0..netlist.node_count() as u32 {
        let node = NodeId(i);
        match netlist.driver(node) {
            None => b.input(netlist.name(node)),
            Some(g) => {
                let ins: Vec<&str> = g
                    .inputs
                    .iter()
                    .map(|&x| {
                        if x == spec.payload {
                            xor.as_str()
                        } else {
                            netlist.name(x)
                        }
                    })
                    .collect();
                b.gate(g.kind, netlist.name(node), &ins);
            }
        }
    }
    let mut lits: Vec<String> = Vec::new();
    for (k, l) in spec.trigger.iter().enumerate() {
        if l.value {
            lits.push(netlist.name(l.node).into());
        } else {
            let inv = format!("{id}_trig_inv{k}");
            b.gate(GateKind::Not, &inv, &[netlist.name(l.node)]);
            fresh.push(inv.clone());
            lits.push(inv);
        }
    }
    let mut acc = lits[0].clone();
    for (k, lit) in lits.iter().enumerate().skip(1) {
        let out = format!("{id}_trig{k}");
        b.gate(GateKind::And, &out, &[&acc, lit]);
        fresh.push(out.clone());
        acc = out;
    }
    b.gate(GateKind::Xor, &xor, &[payload, &acc]);
    fresh.push(xor.clone());
    if let Some(clash) = fresh.iter().find(|f| netlist.id(f).is_some()) {
        return Err(invalid(format!(
            "trojan node name `{clash}` already exists"
        )));
    }
    for &o in netlist.outputs() {
        b.output(if o == spec.payload {
            &xor
        } else {
            netlist.name(o)
        });
    }
    b.build().map_err(Error::from)
}

/// Trigger-literal pool: rare-value-1 nodes when there are at least `q`,
/// otherwise every rare node.
pub fn trigger_pool(profile: &Profile, q: usize) -> Vec<TriggerLiteral> {
    let ones: Vec<TriggerLiteral> = profile
        .rare_with_value(true)
        .map(TriggerLiteral::from)
        .collect();
    if ones.len() >= q {
        ones
    } else {
        profile.rare_set.iter().map(TriggerLiteral::from).collect()
    }
}

/// Maximum trigger draws per requested Trojan.
pub const ATTEMPTS_PER_TROJAN: usize = 200;

/// Samples `count` distinct Trojans with `q`-literal triggers. Payloads are
/// uniform over gate outputs outside the trigger's fanin cone; a draw is kept
/// only if some input fires the trigger and exposes the flip at an output.
pub fn sample_trojans(
    netlist: &Netlist,
    profile: &Profile,
    count: usize,
    q: usize,
    seed: u64,
) -> Result<Vec<TrojanSpec>> {
    netlist.ensure_combinational()?;
    if q == 0 {
        return Err(invalid("trigger size must be at least 1"));
    }
    let pool = trigger_pool(profile, q);
    if pool.len() < q {
        return Err(Error::NotEnoughRareNodes {
            needed: q,
            available: pool.len(),
        });
    }
    let cnf = satinit::encode_cnf(netlist)?;
    let mut solver = Solver::new(&cnf);
    let mut rng = seed::rng(seed::derive(seed, "trojans"));
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let attempts = ATTEMPTS_PER_TROJAN * count.max(1);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let Some((mut trigger, _)) = grow_trigger(&mut solver, &cnf, &pool, q, &mut rng) else {
            continue;
        };
        trigger.sort();
        let roots: Vec<NodeId> = trigger.iter().map(|l| l.node).collect();
        let cone = netlist.transitive_fanin(&roots);
        let legal: Vec<NodeId> = (0..netlist.node_count() as u32)
            .map(NodeId)
            .filter(|&n| !netlist.is_input(n) && !cone[n.index()])
            .collect();
        if legal.is_empty() {
            continue;
        }
        let payload = legal[rng.gen_range(0..legal.len())];
        if !seen.insert((trigger.clone(), payload)) {
            continue;
        }
        let Some(witness) = detecting_input(netlist, &trigger, payload, &mut rng)? else {
            continue;
        };
        let spec = TrojanSpec {
            id: format!("t{}", out.len()),
            trigger,
            payload,
        };
        let golden = sim::simulate(netlist, &witness)?;
        let infected = insert_trojan(netlist, &spec)?;
        let state = sim::simulate(&infected, &witness)?;
        if !spec
            .trigger
            .iter()
            .all(|l| sim::node_value(&golden, netlist, l.node) == l.value)
            || sim::primary_outputs_of(&golden, netlist)
                == sim::primary_outputs_of(&state, &infected)
        {
            return Err(Error::Internal(
                "trojan witness does not expose the payload".into(),
            ));
        }
        out.push(spec);
    }
    if out.len() < count {
        return Err(Error::TriggerSearchExhausted { attempts });
    }
    Ok(out)
}

/// An input that fires the trigger and makes the payload flip visible at a
/// primary output, found by SAT on a miter between the netlist and a copy of
/// the payload's fanout cone driven by the inverted payload.
fn detecting_input(
    netlist: &Netlist,
    trigger: &[TriggerLiteral],
    payload: NodeId,
    rng: &mut seed::Rng,
) -> Result<Option<BitVec>> {
    let fanouts = netlist.fanouts();
    let mut cone = vec![false; netlist.node_count()];
    let mut stack = vec![payload];
    cone[payload.index()] = true;
    while let Some(n) = stack.pop() {
        for &f in &fanouts[n.index()] {
            if !cone[f.index()] {
                cone[f.index()] = true;
                stack.push(f);
            }
        }
    }
    let flipped = |n: NodeId| format!("{}__flip", netlist.name(n));
    let mut b = NetlistBuilder::new();
    for i in 0..netlist.node_count() as u32 {
        let node = NodeId(i);
        match netlist.driver(node) {
            None => b.input(netlist.name(node)),
            Some(g) => {
                let ins: Vec<&str> = g.inputs.iter().map(|&x| netlist.name(x)).collect();
                b.gate(g.kind, netlist.name(node), &ins);
            }
        }
    }
    b.gate(GateKind::Not, &flipped(payload), &[netlist.name(payload)]);
    for g in netlist.gates() {
        if g.output != payload && cone[g.output.index()] {
            let ins: Vec<String> = g
                .inputs
                .iter()
                .map(|&x| {
                    if cone[x.index()] {
                        flipped(x)
                    } else {
                        netlist.name(x).into()
                    }
                })
                .collect();
            let ins: Vec<&str> = ins.iter().map(String::as_str).collect();
            b.gate(g.kind, &flipped(g.output), &ins);
        }
    }
    let mut diffs = Vec::new();
    for (k, &o) in netlist.outputs().iter().enumerate() {
        if cone[o.index()] {
            let d = format!("__diff{k}");
            b.gate(GateKind::Xor, &d, &[netlist.name(o), &flipped(o)]);
            diffs.push(d);
        }
    }
    if diffs.is_empty() {
        return Ok(None);
    }
    let diff_refs: Vec<&str> = diffs.iter().map(String::as_str).collect();
    b.gate(
        if diffs.len() == 1 {
            GateKind::Buf
        } else {
            GateKind::Or
        },
        "__miter",
        &diff_refs,
    );
    let miter = b.build().map_err(Error::from)?;
    let cnf = satinit::encode_cnf(&miter)?;
    let mut assumptions: Vec<i32> = trigger.iter().map(|l| cnf.lit(l.node, l.value)).collect();
    assumptions.push(cnf.lit(miter.id("__miter").expect("miter output"), true));
    match Solver::new(&cnf).solve(&assumptions, rng, Some(satinit::CONFLICT_BUDGET)) {
        SolveOutcome::Sat(a) => Ok(Some(satinit::input_vector(&miter, &cnf, &a))),
        _ => Ok(None),
    }
}

/// Visits the pool in random order, keeping each literal that stays jointly
/// satisfiable with those already kept, until `q` are held. Mutually
/// exclusive rare nodes (decoder outputs, say) make blind sampling hopeless.
fn grow_trigger(
    solver: &mut Solver,
    cnf: &satinit::Cnf,
    pool: &[TriggerLiteral],
    q: usize,
    rng: &mut seed::Rng,
) -> Option<(Vec<TriggerLiteral>, satinit::Assignment)> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(rng);
    let mut trigger = Vec::with_capacity(q);
    let mut assumptions = Vec::with_capacity(q);
    for i in order {
        assumptions.push(cnf.lit(pool[i].node, pool[i].value));
        match solver.solve(&assumptions, rng, Some(satinit::CONFLICT_BUDGET)) {
            SolveOutcome::Sat(a) => {
                trigger.push(pool[i]);
                if trigger.len() == q {
                    return Some((trigger, a));
                }
            }
            _ => {
                assumptions.pop();
            }
        }
    }
    None
}

/// Fraction of uniform random inputs that fire the trigger, with its
/// binomial standard error.
pub fn estimate_activation_probability(
    netlist: &Netlist,
    spec: &TrojanSpec,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    netlist.ensure_combinational()?;
    spec.validate(netlist)?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mut rng = seed::rng(seed::derive(seed, "activation"));
    let mut inputs = vec![0u64; netlist.inputs().len()];
    let mut values = Vec::new();
    let mut hits = 0u64;
    let mut left = trials;
    while left > 0 {
        let lanes = left.min(LANES);
        let mask = if lanes == LANES {
            !0
        } else {
            (1u64 << lanes) - 1
        };
        for w in inputs.iter_mut() {
            *w = rng.next_u64();
        }
        sim::simulate_words_into(netlist, &inputs, &mut values);
        hits += (spec.fires_words(&values) & mask).count_ones() as u64;
        left -= lanes;
    }
    let p = hits as f64 / trials as f64;
    Ok((p, libm::sqrt(p * (1.0 - p) / trials as f64)))
}
