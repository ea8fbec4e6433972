//! Circuit profiling: Monte-Carlo signal probabilities, rare nodes and SCOAP.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{invalid, Result};
use crate::netlist::{GateKind, Netlist, NodeId};
use crate::seed;
use crate::sim::{simulate_words_into, LANES};

/// Default number of Monte-Carlo trials.
pub const DEFAULT_TRIALS: usize = 100_000;
/// Default rarity threshold for combinational circuits.
pub const DEFAULT_THETA: f64 = 0.1;
/// Default rarity threshold for unrolled sequential circuits.
pub const DEFAULT_THETA_SEQUENTIAL: f64 = 0.0005;

/// Vectors per independently seeded Monte-Carlo block.
const BLOCK_VECTORS: usize = 64 * LANES;

#[derive(Copy, Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RareNode {
    pub node: NodeId,
    pub rare_value: bool,
    pub p_one: f64,
    pub p_trans: f64,
}

/// SCOAP controllability and observability of one node.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scoap {
    pub cc0: u64,
    pub cc1: u64,
    pub co: u64,
}

impl Scoap {
    /// `co` of a node with no path to any primary output.
    pub const UNOBSERVABLE: u64 = u64::MAX;

    pub fn cc(&self, value: bool) -> u64 {
        if value {
            self.cc1
        } else {
            self.cc0
        }
    }

    pub fn is_observable(&self) -> bool {
        self.co != Self::UNOBSERVABLE
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    /// Indexed by [`NodeId`].
    pub p_one: Vec<f64>,
    pub p_trans: Vec<f64>,
    /// Sorted by node id.
    pub rare_set: Vec<RareNode>,
    pub scoap: Vec<Scoap>,
    pub theta: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Profile {
    /// Runs the whole profiling flow.
    pub fn compute(netlist: &Netlist, theta: f64, trials: usize, seed: u64) -> Result<Profile> {
        let (p_one, p_trans) = estimate_transition_probabilities(netlist, trials, seed)?;
        let rare_set = identify_rare_nodes(&p_one, &p_trans, theta)?;
        let scoap = compute_scoap(netlist)?;
        Ok(Profile {
            p_one,
            p_trans,
            rare_set,
            scoap,
            theta,
            trials,
            seed,
        })
    }

    pub fn is_rare(&self, id: NodeId) -> bool {
        self.rare_set.binary_search_by_key(&id, |r| r.node).is_ok()
    }

    /// `rare_set` restricted to one rare value.
    pub fn rare_with_value(&self, value: bool) -> impl Iterator<Item = &RareNode> {
        self.rare_set.iter().filter(move |r| r.rare_value == value)
    }
}

fn count_block(netlist: &Netlist, block: usize, vectors: usize, seed: u64) -> Vec<u64> {
    let mut rng = seed::rng(seed::derive_indexed(seed, "profile", block as u64));
    let width = netlist.inputs().len();
    let mut counts = vec![0u64; netlist.node_count()];
    let mut inputs = vec![0u64; width];
    let mut values = Vec::new();
    let mut left = vectors;
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
        simulate_words_into(netlist, &inputs, &mut values);
        for (c, v) in counts.iter_mut().zip(&values) {
            *c += (v & mask).count_ones() as u64;
        }
        left -= lanes;
    }
    counts
}

/// Per-node `(p_one, p_trans)` from `trials` uniform random vectors.
///
/// Trials are split into fixed blocks with their own streams, so the result
/// does not depend on how many threads run them.
pub fn estimate_transition_probabilities(
    netlist: &Netlist,
    trials: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    netlist.ensure_combinational()?;
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let blocks = trials.div_ceil(BLOCK_VECTORS);
    let size = |b: usize| (trials - b * BLOCK_VECTORS).min(BLOCK_VECTORS);
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    };
    let zero = vec![0u64; netlist.node_count()];
    #[cfg(feature = "parallel")]
    let counts = {
        use rayon::prelude::*;
        (0..blocks)
            .into_par_iter()
            .map(|b| count_block(netlist, b, size(b), seed))
            .reduce(|| zero.clone(), merge)
    };
    #[cfg(not(feature = "parallel"))]
    let counts = (0..blocks)
        .map(|b| count_block(netlist, b, size(b), seed))
        .fold(zero, merge);
    let h = trials as f64;
    let p_one: Vec<f64> = counts.iter().map(|&c| c as f64 / h).collect();
    let p_trans = p_one.iter().map(|p| p * (1.0 - p)).collect();
    Ok((p_one, p_trans))
}

/// Nodes whose transition probability is below `theta`.
pub fn identify_rare_nodes(p_one: &[f64], p_trans: &[f64], theta: f64) -> Result<Vec<RareNode>> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(invalid("theta must be positive"));
    }
    Ok(p_trans
        .iter()
        .enumerate()
        .filter(|(_, &pt)| pt < theta)
        .map(|(i, &pt)| RareNode {
            node: NodeId(i as u32),
            rare_value: p_one[i] < 0.5,
            p_one: p_one[i],
            p_trans: pt,
        })
        .collect())
}

fn parity_costs<I: Iterator<Item = (u64, u64)>>(inputs: I) -> (u64, u64) {
    let mut even = 0u64;
    let mut odd = u64::MAX;
    for (c0, c1) in inputs {
        let e = even.saturating_add(c0).min(odd.saturating_add(c1));
        let o = even.saturating_add(c1).min(odd.saturating_add(c0));
        even = e;
        odd = o;
    }
    (even, odd)
}

/// Combinational SCOAP (Goldstein) for every node.
pub fn compute_scoap(netlist: &Netlist) -> Result<Vec<Scoap>> {
    netlist.ensure_combinational()?;
    let n = netlist.node_count();
    let mut cc0 = vec![1u64; n];
    let mut cc1 = vec![1u64; n];
    for g in netlist.topo_gates() {
        let ins = || g.inputs.iter().map(|i| (cc0[i.index()], cc1[i.index()]));
        let sum0 = || ins().fold(0u64, |a, (c0, _)| a.saturating_add(c0));
        let sum1 = || ins().fold(0u64, |a, (_, c1)| a.saturating_add(c1));
        let min0 = || ins().map(|(c0, _)| c0).min().unwrap_or(0);
        let min1 = || ins().map(|(_, c1)| c1).min().unwrap_or(0);
        let (z, o) = match g.kind {
            GateKind::And => (min0(), sum1()),
            GateKind::Nand => (sum1(), min0()),
            GateKind::Or => (sum0(), min1()),
            GateKind::Nor => (min1(), sum0()),
            GateKind::Xor => parity_costs(ins()),
            GateKind::Xnor => {
                let (e, o) = parity_costs(ins());
                (o, e)
            }
            GateKind::Not => (cc1[g.inputs[0].index()], cc0[g.inputs[0].index()]),
            GateKind::Buf => (cc0[g.inputs[0].index()], cc1[g.inputs[0].index()]),
            GateKind::Dff => unreachable!(),
        };
        cc0[g.output.index()] = z.saturating_add(1);
        cc1[g.output.index()] = o.saturating_add(1);
    }

    let mut co = vec![Scoap::UNOBSERVABLE; n];
    for &o in netlist.outputs() {
        co[o.index()] = 0;
    }
    let gates: Vec<_> = netlist.topo_gates().collect();
    for g in gates.into_iter().rev() {
        let out = co[g.output.index()];
        if out == Scoap::UNOBSERVABLE {
            continue;
        }
        for (pin, a) in g.inputs.iter().enumerate() {
            let others = g
                .inputs
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != pin)
                .map(|(_, b)| b.index());
            let side: u64 = match g.kind {
                GateKind::And | GateKind::Nand => {
                    others.map(|b| cc1[b]).fold(0, u64::saturating_add)
                }
                GateKind::Or | GateKind::Nor => others.map(|b| cc0[b]).fold(0, u64::saturating_add),
                GateKind::Xor | GateKind::Xnor => others
                    .map(|b| cc0[b].min(cc1[b]))
                    .fold(0, u64::saturating_add),
                GateKind::Not | GateKind::Buf => 0,
                GateKind::Dff => unreachable!(),
            };
            let branch = out
                .saturating_add(side)
                .saturating_add(1)
                .min(Scoap::UNOBSERVABLE - 1);
            let slot = &mut co[a.index()];
            *slot = (*slot).min(branch);
        }
    }
    Ok((0..n)
        .map(|i| Scoap {
            cc0: cc0[i],
            cc1: cc1[i],
            co: co[i],
        })
        .collect())
}
