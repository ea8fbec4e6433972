//! TRIAGE-style genetic baseline.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{invalid, Result};
use crate::netlist::Netlist;
use crate::profile::Profile;
use crate::seed;
use crate::sim::{self, PatternVector};

use super::activation_words;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TriageConfig {
    pub population: usize,
    pub select: usize,
    pub p_cross: f64,
    pub p_mut: f64,
    /// Generations without a better best fitness before stopping.
    pub stagnation_window: usize,
    pub max_generations: usize,
}

impl Default for TriageConfig {
    fn default() -> Self {
        TriageConfig {
            population: 100,
            select: 20,
            p_cross: 0.9,
            p_mut: 0.05,
            stagnation_window: 20,
            max_generations: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriageResult {
    /// Union of every generation's elite, first appearance order.
    pub retained: Vec<PatternVector>,
    /// Fitness evaluations performed.
    pub evaluated: usize,
    pub generations: usize,
    /// Best fitness of each generation.
    pub best_fitness: Vec<f64>,
    pub final_population: Vec<PatternVector>,
}

/// Fitness: number of rare nodes hit plus the SCOAP mass of the hit nodes
/// relative to the SCOAP mass of all rare nodes.
fn fitness(netlist: &Netlist, profile: &Profile, pop: &[PatternVector]) -> Vec<f64> {
    let rare: Vec<_> = profile
        .rare_set
        .iter()
        .map(|r| (r.node, r.rare_value))
        .collect();
    let terms: Vec<f64> = profile
        .rare_set
        .iter()
        .map(|r| {
            let s = profile.scoap[r.node.index()];
            s.cc(r.rare_value)
                .saturating_add(if s.is_observable() { s.co } else { 0 }) as f64
        })
        .collect();
    let total: f64 = terms.iter().sum::<f64>().max(1.0);
    let mut values = Vec::new();
    let mut out = Vec::with_capacity(pop.len());
    for chunk in pop.chunks(sim::LANES) {
        let act = activation_words(netlist, &rare, chunk, &mut values);
        for lane in 0..chunk.len() {
            let (mut count, mut mass) = (0usize, 0.0);
            for (w, t) in act.iter().zip(&terms) {
                if (w >> lane) & 1 == 1 {
                    count += 1;
                    mass += t;
                }
            }
            out.push(count as f64 + mass / total);
        }
    }
    out
}

/// Elitist GA: keep the `select` fittest, refill with single-point crossover
/// children of random elite pairs, then per-bit mutation.
pub fn run_triage(
    netlist: &Netlist,
    profile: &Profile,
    cfg: &TriageConfig,
    seed: u64,
) -> Result<TriageResult> {
    netlist.ensure_combinational()?;
    if cfg.select == 0 || cfg.select > cfg.population {
        return Err(invalid("need 0 < select <= population"));
    }
    if !(0.0..=1.0).contains(&cfg.p_cross) || !(0.0..=1.0).contains(&cfg.p_mut) {
        return Err(invalid("probabilities must be in [0, 1]"));
    }
    let mut rng = seed::rng(seed::derive(seed, "triage"));
    let width = netlist.inputs().len();
    let pop: Vec<PatternVector> = (0..cfg.population)
        .map(|_| sim::random_vector(width, &mut rng))
        .collect();
    run_from(netlist, profile, cfg, pop, &mut rng)
}

fn run_from(
    netlist: &Netlist,
    profile: &Profile,
    cfg: &TriageConfig,
    mut pop: Vec<PatternVector>,
    rng: &mut seed::Rng,
) -> Result<TriageResult> {
    let width = netlist.inputs().len();
    let mut seen = BTreeSet::new();
    let mut retained = Vec::new();
    let mut best_fitness = Vec::new();
    let mut evaluated = 0;
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut generations = 0;
    while generations < cfg.max_generations {
        let fit = fitness(netlist, profile, &pop);
        evaluated += pop.len();
        generations += 1;
        let mut idx: Vec<usize> = (0..pop.len()).collect();
        idx.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let elites: Vec<PatternVector> =
            idx[..cfg.select].iter().map(|&i| pop[i].clone()).collect();
        for e in &elites {
            if seen.insert(e.words().to_vec()) {
                retained.push(e.clone());
            }
        }
        let gen_best = fit[idx[0]];
        best_fitness.push(gen_best);
        if gen_best > best {
            best = gen_best;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.stagnation_window {
                break;
            }
        }
        let mut next = elites.clone();
        while next.len() < cfg.population {
            let a = &elites[rng.gen_range(0..elites.len())];
            let b = &elites[rng.gen_range(0..elites.len())];
            let mut child = a.clone();
            if width >= 2 && rng.gen::<f64>() < cfg.p_cross {
                let cut = rng.gen_range(1..width);
                for i in cut..width {
                    child.set(i, b.get(i));
                }
            }
            for i in 0..width {
                if rng.gen::<f64>() < cfg.p_mut {
                    child.flip(i);
                }
            }
            next.push(child);
        }
        pop = next;
    }
    Ok(TriageResult {
        retained,
        evaluated,
        generations,
        best_fitness,
        final_population: pop,
    })
}
