//! Reward-guided adaptive test generation.
//!
//! Each iteration mutates weighted parents from the current test set (plus a
//! share of purely random vectors), scores every candidate with
//! `λ1·v_rare + λ2·v_scoap + λ3·v_dag`, appends the best `L` and reweights.

use alloc::vec;
use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::netlist::{DagState, Netlist, NodeId};
use crate::profile::{Profile, RareNode, Scoap};
use crate::satinit;
use crate::seed::{self, Rng};
use crate::sim::{self, pack_lanes, simulate_words_into, PatternVector, LANES};

/// Floor added to shifted rewards so no vector ends with zero mass.
pub const WEIGHT_EPSILON: f64 = 1e-6;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InitMode {
    #[default]
    Sat,
    Random,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AdaTestConfig {
    pub theta: f64,
    pub trials: usize,
    pub candidate_count: usize,
    pub select_count: usize,
    pub max_iterations: usize,
    pub coverage_percent: f64,
    pub target_activations: u64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub mutation_rate: f64,
    pub explore_fraction: f64,
    pub init: InitMode,
    pub seed: u64,
}

impl Default for AdaTestConfig {
    fn default() -> Self {
        AdaTestConfig {
            theta: crate::profile::DEFAULT_THETA,
            trials: crate::profile::DEFAULT_TRIALS,
            candidate_count: 200,
            select_count: 80,
            max_iterations: 500,
            coverage_percent: 95.0,
            target_activations: 20,
            lambda1: 0.05,
            lambda2: 0.0001,
            lambda3: 0.00025,
            mutation_rate: 0.05,
            explore_fraction: 0.2,
            init: InitMode::Sat,
            seed: 0,
        }
    }
}

impl AdaTestConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.select_count == 0 || self.select_count > self.candidate_count {
            return Err(invalid("need 0 < select_count <= candidate_count"));
        }
        if !(self.coverage_percent > 0.0 && self.coverage_percent <= 100.0) {
            return Err(invalid("coverage_percent must be in (0, 100]"));
        }
        if self.target_activations == 0 {
            return Err(invalid("target_activations must be at least 1"));
        }
        if [self.lambda1, self.lambda2, self.lambda3]
            .iter()
            .any(|l| !l.is_finite() || *l < 0.0)
        {
            return Err(invalid("reward weights must be finite and non-negative"));
        }
        if !unit(self.mutation_rate) || !unit(self.explore_fraction) {
            return Err(invalid(
                "mutation_rate and explore_fraction must be in [0, 1]",
            ));
        }
        if self.theta.is_nan() || self.theta <= 0.0 || self.trials == 0 {
            return Err(invalid("theta must be positive and trials at least 1"));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardBreakdown {
    pub v_rare: f64,
    pub v_scoap: f64,
    pub v_dag: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(v_rare: f64, v_scoap: f64, v_dag: f64, lambdas: [f64; 3]) -> Self {
        let total = lambdas[0] * v_rare + lambdas[1] * v_scoap + lambdas[2] * v_dag;
        RewardBreakdown {
            v_rare,
            v_scoap,
            v_dag,
            total,
        }
    }
}

/// `−Σ |N − count|`.
pub fn v_rare(counts: &[u64], target: u64) -> f64 {
    -(counts.iter().map(|&c| c.abs_diff(target)).sum::<u64>() as f64)
}

/// Sum of rare-value controllability plus observability over the activated
/// rare nodes. Unobservable nodes contribute their controllability only.
pub fn v_scoap<'a, I: IntoIterator<Item = &'a RareNode>>(activated: I, scoap: &[Scoap]) -> f64 {
    activated
        .into_iter()
        .map(|r| scoap_term(&scoap[r.node.index()], r.rare_value))
        .sum::<u64>() as f64
}

fn scoap_term(s: &Scoap, value: bool) -> u64 {
    let co = if s.is_observable() { s.co } else { 0 };
    s.cc(value).saturating_add(co)
}

/// Mean normalized Hamming distance from `candidate` to each history state;
/// 0 for an empty history.
pub fn v_dag(candidate: &DagState, history: &[DagState]) -> f64 {
    if history.is_empty() || candidate.is_empty() {
        return 0.0;
    }
    let total: usize = history
        .iter()
        .map(|s| candidate.bits.hamming(&s.bits))
        .sum();
    total as f64 / (history.len() * candidate.len()) as f64
}

/// The growing test set with everything the reward needs cached.
#[derive(Clone, Debug)]
pub struct TestSet {
    pub vectors: Vec<PatternVector>,
    pub dag_cache: Vec<DagState>,
    /// Activation count per rare node, in `rare` order.
    pub counters: Vec<u64>,
    /// Sampling distribution over `vectors`.
    pub weights: Vec<f64>,
    rare: Vec<(NodeId, bool)>,
    masses: Vec<f64>,
    /// Per flattened position: how many cached states hold a 1.
    ones: Vec<u64>,
}

impl TestSet {
    pub fn new(netlist: &Netlist, rare_set: &[RareNode]) -> Self {
        TestSet {
            vectors: Vec::new(),
            dag_cache: Vec::new(),
            counters: vec![0; rare_set.len()],
            weights: Vec::new(),
            rare: rare_set.iter().map(|r| (r.node, r.rare_value)).collect(),
            masses: Vec::new(),
            ones: vec![0; netlist.node_count()],
        }
    }

    /// Simulates and appends `vectors` with uniform weights.
    pub fn from_vectors(
        netlist: &Netlist,
        rare_set: &[RareNode],
        vectors: Vec<PatternVector>,
    ) -> Result<Self> {
        let mut set = TestSet::new(netlist, rare_set);
        let states = sim::simulate_batch(netlist, &sim::PatternBatch::new(vectors.clone()))?;
        let mass = 1.0 / vectors.len().max(1) as f64;
        for (v, s) in vectors.into_iter().zip(states) {
            set.push(netlist, v, s, mass);
        }
        set.normalize();
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn push(&mut self, netlist: &Netlist, v: PatternVector, state: DagState, mass: f64) {
        for (c, &(node, value)) in self.counters.iter_mut().zip(&self.rare) {
            if sim::node_value(&state, netlist, node) == value {
                *c += 1;
            }
        }
        for (p, o) in self.ones.iter_mut().enumerate() {
            *o += state.bits.get(p) as u64;
        }
        self.vectors.push(v);
        self.dag_cache.push(state);
        self.masses.push(mass);
    }

    fn normalize(&mut self) {
        let sum: f64 = self.masses.iter().sum();
        self.weights = self.masses.iter().map(|m| m / sum).collect();
    }

    /// Percentage of rare nodes whose counter has reached `target`.
    pub fn coverage_pct(&self, target: u64) -> f64 {
        if self.counters.is_empty() {
            return 100.0;
        }
        let hit = self.counters.iter().filter(|&&c| c >= target).count();
        100.0 * hit as f64 / self.counters.len() as f64
    }

    pub fn min_counter(&self) -> u64 {
        self.counters.iter().copied().min().unwrap_or(0)
    }

    pub fn median_counter(&self) -> f64 {
        if self.counters.is_empty() {
            return 0.0;
        }
        let mut c = self.counters.clone();
        c.sort_unstable();
        let m = c.len() / 2;
        if c.len() % 2 == 1 {
            c[m] as f64
        } else {
            (c[m - 1] + c[m]) as f64 / 2.0
        }
    }
}

/// Scores up to 64 candidates against a fixed snapshot of the state.
fn score_block(
    netlist: &Netlist,
    profile: &Profile,
    state: &TestSet,
    cfg: &AdaTestConfig,
    cands: &[PatternVector],
) -> Vec<RewardBreakdown> {
    let order = netlist.flatten_order().expect("combinational netlist");
    let words = pack_lanes(cands, netlist.inputs().len());
    let mut values = Vec::new();
    simulate_words_into(netlist, &words, &mut values);
    let lambdas = [cfg.lambda1, cfg.lambda2, cfg.lambda3];
    let history = state.dag_cache.len() as u64;
    let n = order.len() as u64;
    (0..cands.len())
        .map(|lane| {
            let bit = |id: NodeId| (values[id.index()] >> lane) & 1 == 1;
            let mut dev = 0u64;
            let mut sc = 0u64;
            for (r, &ctr) in profile.rare_set.iter().zip(&state.counters) {
                let hit = bit(r.node) == r.rare_value;
                dev += (ctr + hit as u64).abs_diff(cfg.target_activations);
                if hit {
                    sc =
                        sc.saturating_add(scoap_term(&profile.scoap[r.node.index()], r.rare_value));
                }
            }
            let vd = if history == 0 || n == 0 {
                0.0
            } else {
                let dist: u64 = order
                    .iter()
                    .zip(&state.ones)
                    .map(|(&id, &ones)| if bit(id) { history - ones } else { ones })
                    .sum();
                dist as f64 / (history * n) as f64
            };
            RewardBreakdown::new(-(dev as f64), sc as f64, vd, lambdas)
        })
        .collect()
}

fn check_compatible(netlist: &Netlist, profile: &Profile, state: &TestSet) -> Result<()> {
    netlist.ensure_combinational()?;
    if profile.scoap.len() != netlist.node_count() || state.counters.len() != profile.rare_set.len()
    {
        return Err(invalid(
            "profile or test set does not belong to this netlist",
        ));
    }
    Ok(())
}

/// Reward of one candidate: the state's counters plus the candidate's own
/// activations, SCOAP of what it activates, and diversity against the state.
pub fn reward(
    candidate: &PatternVector,
    state: &TestSet,
    profile: &Profile,
    netlist: &Netlist,
    cfg: &AdaTestConfig,
) -> Result<RewardBreakdown> {
    check_compatible(netlist, profile, state)?;
    if candidate.len() != netlist.inputs().len() {
        return Err(Error::WidthMismatch {
            expected: netlist.inputs().len(),
            found: candidate.len(),
        });
    }
    Ok(score_block(
        netlist,
        profile,
        state,
        cfg,
        core::slice::from_ref(candidate),
    )[0])
}

/// Rewards of many candidates, in candidate order.
pub fn score_candidates(
    netlist: &Netlist,
    profile: &Profile,
    state: &TestSet,
    cfg: &AdaTestConfig,
    cands: &[PatternVector],
) -> Result<Vec<RewardBreakdown>> {
    check_compatible(netlist, profile, state)?;
    if let Some(v) = cands.iter().find(|v| v.len() != netlist.inputs().len()) {
        return Err(Error::WidthMismatch {
            expected: netlist.inputs().len(),
            found: v.len(),
        });
    }
    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<RewardBreakdown>> = {
        use rayon::prelude::*;
        cands
            .par_chunks(LANES)
            .map(|c| score_block(netlist, profile, state, cfg, c))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<RewardBreakdown>> = cands
        .chunks(LANES)
        .map(|c| score_block(netlist, profile, state, cfg, c))
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// `m` candidates: with probability `explore_fraction` a uniform random
/// vector, otherwise a weighted parent with each bit flipped at
/// `mutation_rate`.
pub fn generate_candidates(
    state: &TestSet,
    m: usize,
    cfg: &AdaTestConfig,
    rng: &mut Rng,
) -> Result<Vec<PatternVector>> {
    if state.is_empty() {
        return Err(invalid("cannot generate candidates from an empty test set"));
    }
    let width = state.vectors[0].len();
    let parents =
        WeightedIndex::new(&state.weights).map_err(|_| invalid("invalid sampling weights"))?;
    Ok((0..m)
        .map(|_| {
            if rng.gen::<f64>() < cfg.explore_fraction {
                return sim::random_vector(width, rng);
            }
            let mut v = state.vectors[parents.sample(rng)].clone();
            for i in 0..width {
                if rng.gen::<f64>() < cfg.mutation_rate {
                    v.flip(i);
                }
            }
            v
        })
        .collect())
}

/// Indices of the `l` best rewards, best first; ties keep candidate order.
pub fn select_top(rewards: &[f64], l: usize) -> Result<Vec<usize>> {
    if l > rewards.len() {
        return Err(invalid("cannot select more candidates than exist"));
    }
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    idx.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b)));
    idx.truncate(l);
    Ok(idx)
}

/// Gives the last `rewards.len()` vectors mass `r − min + ε` and
/// renormalizes over the whole set.
pub fn update_weights(state: &mut TestSet, rewards: &[f64]) {
    let k = rewards.len().min(state.masses.len());
    let min = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    let start = state.masses.len() - k;
    for (m, r) in state.masses[start..].iter_mut().zip(rewards) {
        *m = r - min + WEIGHT_EPSILON;
    }
    state.normalize();
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StopReason {
    /// The Trojan oracle reported activation.
    Trojan,
    /// Enough rare nodes reached the activation target.
    Coverage,
    /// The iteration budget ran out.
    Budget,
}

/// Fires when one vector puts every trigger literal at its value. With an
/// infected netlist attached it also requires that vector to change a
/// primary output, i.e. the Trojan must be seen, not just triggered.
#[derive(Clone, Debug)]
pub struct TriggerOracle {
    pub literals: Vec<(NodeId, bool)>,
    pub infected: Option<Netlist>,
}

impl TriggerOracle {
    pub fn fires(&self, netlist: &Netlist, input: &PatternVector, state: &DagState) -> bool {
        if !self
            .literals
            .iter()
            .all(|&(n, v)| sim::node_value(state, netlist, n) == v)
        {
            return false;
        }
        match &self.infected {
            None => true,
            Some(t) => sim::simulate(t, input)
                .map(|s| sim::primary_outputs_of(&s, t) != sim::primary_outputs_of(state, netlist))
                .unwrap_or(false),
        }
    }
}

/// Checks the Trojan oracle, then coverage, then the iteration budget.
pub fn check_termination(
    state: &TestSet,
    iteration: usize,
    trojan_fired: bool,
    cfg: &AdaTestConfig,
) -> Option<StopReason> {
    if trojan_fired {
        return Some(StopReason::Trojan);
    }
    let reached = state
        .counters
        .iter()
        .filter(|&&c| c >= cfg.target_activations)
        .count();
    if reached as f64 * 100.0 >= cfg.coverage_percent * state.counters.len() as f64
        && state.min_counter() >= 1
    {
        return Some(StopReason::Coverage);
    }
    if iteration >= cfg.max_iterations {
        return Some(StopReason::Budget);
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub iteration: usize,
    pub coverage_pct: f64,
    pub min_counter: u64,
    pub median_counter: f64,
}

#[derive(Clone, Debug)]
pub struct AdaTestRun {
    pub test_set: TestSet,
    pub trace: Vec<TracePoint>,
    pub stop: StopReason,
    /// Index of the last completed iteration (0 = initialization only).
    pub iterations: usize,
    pub random_fallback: bool,
}

/// The full adaptive loop, starting from SAT-seeded or random vectors.
pub fn run_adatest(
    netlist: &Netlist,
    profile: &Profile,
    cfg: &AdaTestConfig,
    oracle: Option<&TriggerOracle>,
) -> Result<AdaTestRun> {
    cfg.validate()?;
    netlist.ensure_combinational()?;
    if profile.rare_set.is_empty() {
        return Err(Error::NoRareNodes);
    }
    let l = cfg.select_count;
    let width = netlist.inputs().len();
    let (init, random_fallback) = match cfg.init {
        InitMode::Sat => {
            let s = satinit::smart_initialize(
                netlist,
                &profile.rare_set,
                l,
                seed::derive(cfg.seed, "init"),
            )?;
            (s.vectors, s.random_fallback)
        }
        InitMode::Random => {
            let mut rng = seed::rng(seed::derive(cfg.seed, "init-random"));
            (
                (0..l)
                    .map(|_| sim::random_vector(width, &mut rng))
                    .collect(),
                false,
            )
        }
    };
    let mut state = TestSet::from_vectors(netlist, &profile.rare_set, init)?;
    let mut fired = oracle.is_some_and(|o| {
        state
            .vectors
            .iter()
            .zip(&state.dag_cache)
            .any(|(v, s)| o.fires(netlist, v, s))
    });
    let point = |state: &TestSet, iteration| TracePoint {
        iteration,
        coverage_pct: state.coverage_pct(cfg.target_activations),
        min_counter: state.min_counter(),
        median_counter: state.median_counter(),
    };
    let mut trace = vec![point(&state, 0)];
    let mut iteration = 0;
    // The Trojan oracle and the budget guard the loop; coverage is only
    // judged after a round of expansion.
    let mut stop = if fired {
        Some(StopReason::Trojan)
    } else if cfg.max_iterations == 0 {
        Some(StopReason::Budget)
    } else {
        None
    };
    while stop.is_none() {
        iteration += 1;
        let mut rng = seed::rng(seed::derive_indexed(
            cfg.seed,
            "candidates",
            iteration as u64,
        ));
        let cands = generate_candidates(&state, cfg.candidate_count, cfg, &mut rng)?;
        let rewards: Vec<f64> = score_candidates(netlist, profile, &state, cfg, &cands)?
            .iter()
            .map(|r| r.total)
            .collect();
        let top = select_top(&rewards, l)?;
        let chosen: Vec<PatternVector> = top.iter().map(|&i| cands[i].clone()).collect();
        let states = sim::simulate_batch(netlist, &sim::PatternBatch::new(chosen.clone()))?;
        for (v, s) in chosen.into_iter().zip(states) {
            fired |= oracle.is_some_and(|o| o.fires(netlist, &v, &s));
            state.push(netlist, v, s, 0.0);
        }
        let top_rewards: Vec<f64> = top.iter().map(|&i| rewards[i]).collect();
        update_weights(&mut state, &top_rewards);
        trace.push(point(&state, iteration));
        stop = check_termination(&state, iteration, fired, cfg);
    }
    let stop = stop.expect("loop exits with a reason");
    Ok(AdaTestRun {
        test_set: state,
        trace,
        stop,
        iterations: iteration,
        random_fallback,
    })
}
