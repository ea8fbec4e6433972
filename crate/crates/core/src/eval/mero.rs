//! MERO-style N-detect baseline.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::netlist::Netlist;
use crate::profile::Profile;
use crate::seed;
use crate::sim::{self, PatternVector};

use super::activation_words;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MeroConfig {
    /// Activations wanted per rare node.
    pub target: u64,
    /// Random vectors drawn up front.
    pub random_pool: usize,
}

impl Default for MeroConfig {
    fn default() -> Self {
        MeroConfig {
            target: 1000,
            random_pool: 2500,
        }
    }
}

/// Random pool sorted by rare activations (most first), then one greedy
/// single-bit-flip pass per vector. A flip is kept when the vector still
/// hits at least as many under-target rare nodes; a vector joins the set when
/// it hits at least one.
pub fn run_mero(
    netlist: &Netlist,
    profile: &Profile,
    cfg: &MeroConfig,
    seed: u64,
) -> Result<Vec<PatternVector>> {
    netlist.ensure_combinational()?;
    if cfg.target == 0 || profile.rare_set.is_empty() {
        return Ok(Vec::new());
    }
    let width = netlist.inputs().len();
    let rare: Vec<_> = profile
        .rare_set
        .iter()
        .map(|r| (r.node, r.rare_value))
        .collect();
    let mut rng = seed::rng(seed::derive(seed, "mero"));
    let pool: Vec<PatternVector> = (0..cfg.random_pool)
        .map(|_| sim::random_vector(width, &mut rng))
        .collect();

    let mut values = Vec::new();
    let mut hits = Vec::with_capacity(pool.len());
    for chunk in pool.chunks(sim::LANES) {
        let act = activation_words(netlist, &rare, chunk, &mut values);
        for lane in 0..chunk.len() {
            hits.push(act.iter().filter(|&&w| (w >> lane) & 1 == 1).count());
        }
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| hits[b].cmp(&hits[a]).then(a.cmp(&b)));

    let mut counters = vec![0u64; rare.len()];
    let mut out = Vec::new();
    let gain = |v: &PatternVector, counters: &[u64], values: &mut Vec<u64>| -> (usize, Vec<u64>) {
        let act = activation_words(netlist, &rare, core::slice::from_ref(v), values);
        let g = act
            .iter()
            .zip(counters)
            .filter(|(&w, &c)| w & 1 == 1 && c < cfg.target)
            .count();
        (g, act)
    };
    for &i in &order {
        if counters.iter().all(|&c| c >= cfg.target) {
            break;
        }
        let mut v = pool[i].clone();
        let (mut best, mut act) = gain(&v, &counters, &mut values);
        for bit in 0..width {
            v.flip(bit);
            let (g, a) = gain(&v, &counters, &mut values);
            if g >= best {
                best = g;
                act = a;
            } else {
                v.flip(bit);
            }
        }
        if best > 0 {
            for (c, w) in counters.iter_mut().zip(&act) {
                *c += w & 1;
            }
            out.push(v);
        }
    }
    Ok(out)
}
