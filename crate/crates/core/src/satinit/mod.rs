//! SAT-based seeding of the test set.
//!
//! [`smart_initialize`] asks the solver for inputs that put small groups of
//! rare nodes at their rare values, always targeting the least-activated
//! nodes first.

mod cnf;
mod solver;

pub use cnf::{encode_cnf, Cnf};
pub use solver::{solve, Assignment, SolveOutcome, Solver};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::netlist::{Netlist, NodeId};
use crate::profile::RareNode;
use crate::seed;
use crate::sim::{self, PatternVector};

/// Rare nodes targeted by one solver query.
pub const GROUP_SIZE: usize = 3;
/// Conflict budget per query; an exhausted budget counts as unsatisfiable.
pub const CONFLICT_BUDGET: u64 = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmartInit {
    pub vectors: Vec<PatternVector>,
    /// The rare nodes each vector was solved for (empty for random vectors).
    pub targets: Vec<Vec<NodeId>>,
    /// Set when no rare node was satisfiable on its own and the vectors are
    /// plain random ones.
    pub random_fallback: bool,
}

/// Input vector carried by a satisfying assignment.
pub fn input_vector(netlist: &Netlist, cnf: &Cnf, a: &Assignment) -> PatternVector {
    netlist
        .inputs()
        .iter()
        .map(|&pi| a.value(cnf.lit(pi, true)))
        .collect()
}

/// Produces `l` vectors, each driving a group of up to three rare nodes to
/// their rare values.
///
/// Groups are the least-activated live nodes (ties by position in
/// `rare_set`). An unsatisfiable group is shrunk to two nodes, then to one;
/// a node unsatisfiable on its own is dropped for good.
pub fn smart_initialize(
    netlist: &Netlist,
    rare_set: &[RareNode],
    l: usize,
    seed: u64,
) -> Result<SmartInit> {
    if l == 0 {
        return Err(invalid("L must be at least 1"));
    }
    if rare_set.is_empty() {
        return Err(Error::NoRareNodes);
    }
    let cnf = encode_cnf(netlist)?;
    let mut solver = Solver::new(&cnf);
    let mut counts = vec![0u64; rare_set.len()];
    let mut dead = vec![false; rare_set.len()];
    let mut out = SmartInit {
        vectors: Vec::with_capacity(l),
        targets: Vec::with_capacity(l),
        random_fallback: false,
    };
    let mut query = 0u64;

    while out.vectors.len() < l {
        let mut live: Vec<usize> = (0..rare_set.len()).filter(|&i| !dead[i]).collect();
        if live.is_empty() {
            out.random_fallback = true;
            let mut rng = seed::rng(seed::derive(seed, "satinit-random"));
            while out.vectors.len() < l {
                out.vectors
                    .push(sim::random_vector(netlist.inputs().len(), &mut rng));
                out.targets.push(Vec::new());
            }
            break;
        }
        live.sort_by_key(|&i| (counts[i], i));
        let mut k = GROUP_SIZE.min(live.len());
        let found = loop {
            let group = &live[..k];
            let assumptions: Vec<i32> = group
                .iter()
                .map(|&i| cnf.lit(rare_set[i].node, rare_set[i].rare_value))
                .collect();
            let mut rng = seed::rng(seed::derive_indexed(seed, "satinit", query));
            query += 1;
            match solver.solve(&assumptions, &mut rng, Some(CONFLICT_BUDGET)) {
                SolveOutcome::Sat(a) => break Some((group.to_vec(), a)),
                _ if k > 1 => k = k.div_ceil(2),
                _ => break None,
            }
        };
        let Some((group, assignment)) = found else {
            dead[live[0]] = true;
            continue;
        };
        let v = input_vector(netlist, &cnf, &assignment);
        let state = sim::simulate(netlist, &v)?;
        for &i in &group {
            let r = &rare_set[i];
            if sim::node_value(&state, netlist, r.node) != r.rare_value {
                return Err(Error::Internal(format!(
                    "solver vector misses target `{}`",
                    netlist.name(r.node)
                )));
            }
        }
        for (i, r) in rare_set.iter().enumerate() {
            if sim::node_value(&state, netlist, r.node) == r.rare_value {
                counts[i] += 1;
            }
        }
        out.targets
            .push(group.iter().map(|&i| rare_set[i].node).collect());
        out.vectors.push(v);
    }
    Ok(out)
}
