use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::netlist::Netlist;
use crate::profile::Profile;
use crate::seed;
use crate::sim::PatternVector;
use crate::tpg::{run_adatest, AdaTestConfig};
use crate::trojan::{sample_trojans, TrojanSpec};

use super::{assess, run_mero, run_triage, Detection, MeroConfig, TriageConfig};

/// Wall-clock source for generation times. [`NoClock`] reports zero, which
/// keeps reports byte-reproducible.
pub trait Clock: Sync {
    /// Seconds since an arbitrary origin.
    fn now(&self) -> f64;
}

pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    AdaTest,
    Mero,
    Triage,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AdaTest => "adatest",
            Method::Mero => "mero",
            Method::Triage => "triage",
        }
    }
}

/// What the adaptive search may learn about the hidden Trojan.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum OracleMode {
    /// Nothing; the search runs to coverage or budget.
    Off,
    /// Stop once a vector fires the whole trigger.
    Trigger,
    /// Stop once a vector makes the Trojan visible at an output.
    Manifest,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct CampaignConfig {
    pub methods: Vec<Method>,
    pub trojan_count: usize,
    pub runs_per_trojan: usize,
    pub trigger_size: usize,
    pub oracle: OracleMode,
    pub adatest: AdaTestConfig,
    pub mero: MeroConfig,
    pub triage: TriageConfig,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            methods: vec![Method::AdaTest, Method::Mero, Method::Triage],
            trojan_count: 10,
            runs_per_trojan: 3,
            trigger_size: 3,
            oracle: OracleMode::Manifest,
            adatest: AdaTestConfig::default(),
            mero: MeroConfig::default(),
            triage: TriageConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrojanOutcome {
    pub trojan: String,
    pub runs: usize,
    pub detected_runs: usize,
    pub triggered_runs: usize,
    pub mean_trigger_fraction: f64,
}

/// One method's row of the comparison table. Counts and times are means
/// over all (Trojan, run) cells.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionReport {
    pub circuit: String,
    pub method: Method,
    /// Vectors in the final test set.
    pub test_vector_count: f64,
    /// Vectors simulated to get there (differs from the final count for the
    /// genetic baseline).
    pub evaluated_vector_count: f64,
    pub generation_time_seconds: f64,
    pub trigger_coverage_pct: f64,
    pub trojan_coverage_pct: f64,
    /// Cells where some vector fired the whole trigger.
    pub full_trigger_pct: f64,
    pub outcomes: Vec<TrojanOutcome>,
    pub config: CampaignConfig,
    pub seed: u64,
}

struct Cell {
    vectors: usize,
    evaluated: usize,
    seconds: f64,
    detection: Detection,
}

fn run_cell(
    netlist: &Netlist,
    profile: &Profile,
    cfg: &CampaignConfig,
    clock: &dyn Clock,
    method: Method,
    trojan: &TrojanSpec,
    cell_seed: u64,
) -> Result<Cell> {
    let start = clock.now();
    let (vectors, evaluated): (Vec<PatternVector>, usize) = match method {
        Method::AdaTest => {
            let ada = AdaTestConfig {
                seed: cell_seed,
                ..cfg.adatest.clone()
            };
            let oracle = match cfg.oracle {
                OracleMode::Off => None,
                OracleMode::Trigger => Some(trojan.oracle()),
                OracleMode::Manifest => Some(trojan.manifest_oracle(netlist)?),
            };
            let run = run_adatest(netlist, profile, &ada, oracle.as_ref())?;
            let evaluated = ada.select_count + run.iterations * ada.candidate_count;
            (run.test_set.vectors, evaluated)
        }
        Method::Mero => {
            let v = run_mero(netlist, profile, &cfg.mero, cell_seed)?;
            (v, cfg.mero.random_pool)
        }
        Method::Triage => {
            let r = run_triage(netlist, profile, &cfg.triage, cell_seed)?;
            (r.retained, r.evaluated)
        }
    };
    let seconds = clock.now() - start;
    let detection = assess(&vectors, netlist, core::slice::from_ref(trojan))?.remove(0);
    Ok(Cell {
        vectors: vectors.len(),
        evaluated,
        seconds,
        detection,
    })
}

/// Samples `trojan_count` Trojans once, then runs every method
/// `runs_per_trojan` times per Trojan with seeds derived from `cfg.seed`.
pub fn run_campaign(
    circuit: &str,
    netlist: &Netlist,
    profile: &Profile,
    cfg: &CampaignConfig,
    clock: &dyn Clock,
) -> Result<Vec<DetectionReport>> {
    if cfg.trojan_count == 0 || cfg.runs_per_trojan == 0 {
        return Err(invalid(
            "trojan_count and runs_per_trojan must be at least 1",
        ));
    }
    let trojans = sample_trojans(
        netlist,
        profile,
        cfg.trojan_count,
        cfg.trigger_size,
        seed::derive(cfg.seed, "campaign-trojans"),
    )?;
    let runs = cfg.runs_per_trojan;
    let cells: Vec<(Method, usize, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| (0..trojans.len()).flat_map(move |t| (0..runs).map(move |r| (m, t, r))))
        .collect();
    let exec = |&(m, t, r): &(Method, usize, usize)| {
        let cell_seed = seed::derive_indexed(
            seed::derive(cfg.seed, m.name()),
            "cell",
            (t * runs + r) as u64,
        );
        run_cell(netlist, profile, cfg, clock, m, &trojans[t], cell_seed)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Cell>> = {
        use rayon::prelude::*;
        cells.par_iter().map(exec).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Cell>> = cells.iter().map(exec).collect();
    let results = results.into_iter().collect::<Result<Vec<Cell>>>()?;

    let per_method = trojans.len() * runs;
    Ok(cfg
        .methods
        .iter()
        .zip(results.chunks(per_method))
        .map(|(&method, chunk)| {
            let n = chunk.len() as f64;
            let mean = |f: &dyn Fn(&Cell) -> f64| chunk.iter().map(f).sum::<f64>() / n;
            let outcomes = trojans
                .iter()
                .zip(chunk.chunks(runs))
                .map(|(t, cs)| TrojanOutcome {
                    trojan: t.id.clone(),
                    runs: cs.len(),
                    detected_runs: cs.iter().filter(|c| c.detection.detected).count(),
                    triggered_runs: cs.iter().filter(|c| c.detection.fully_triggered).count(),
                    mean_trigger_fraction: cs
                        .iter()
                        .map(|c| c.detection.trigger_fraction)
                        .sum::<f64>()
                        / cs.len() as f64,
                })
                .collect();
            DetectionReport {
                circuit: circuit.into(),
                method,
                test_vector_count: mean(&|c| c.vectors as f64),
                evaluated_vector_count: mean(&|c| c.evaluated as f64),
                generation_time_seconds: mean(&|c| c.seconds),
                trigger_coverage_pct: 100.0 * mean(&|c| c.detection.trigger_fraction),
                trojan_coverage_pct: 100.0 * mean(&|c| c.detection.detected as u8 as f64),
                full_trigger_pct: 100.0 * mean(&|c| c.detection.fully_triggered as u8 as f64),
                outcomes,
                config: cfg.clone(),
                seed: cfg.seed,
            }
        })
        .collect())
}
