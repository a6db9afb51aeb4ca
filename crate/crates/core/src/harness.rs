//! Config files, parameter sweeps, and CSV output.
//!
//! Config and plan files are flat `key = value` text, one pair per line,
//! `#` starting a comment. List-valued keys take comma-separated values.
//!
//! Generator keys: `generator` (`erdos_renyi`, `matching_killer`,
//! `block_bipartite`), `n`, `k`, `seed`, `p`, `reinsert`, `tail`,
//! `block_size`, and `count` (number of streams, seeds `seed..seed+count`).
//!
//! Plan keys: the generator keys (with `n` and `k` as lists), plus `algo`
//! (list of `rand`, `det`, `budget`), `epsilon`, `c`, `c_prime`, `delta`
//! (lists; `delta = none` keeps single-row samplers), `slot_scale`,
//! `sampler_rows`, `trials`, `seed`, `verify`, `space_only`, and `out`.
//! Trial `t` of every cell uses seed `seed + t` for both the generator and
//! the algorithm.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drivers::{self, AlgorithmKind, BudgetedRoute, RunResult};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::hierarchy::{HierarchicalMatching, HierarchyMode};
use crate::repair::{AlgorithmConfig, RepairLayout};
use crate::stream::{final_graph, generate, EventKind, GeneratorConfig, GeneratorKind, StreamSpec};

/// Parsed `key = value` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err("empty key"));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(err("duplicate key"));
            }
        }
        Ok(KeyValues(map))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| bad_value(key, v)))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| bad_value(key, x)))
                    .collect()
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

fn bad_value(key: &str, value: &str) -> Error {
    Error::Config(format!("bad value `{value}` for `{key}`"))
}

fn generator_kind(kv: &KeyValues, n: usize) -> Result<GeneratorKind> {
    let name = kv.raw("generator").unwrap_or("erdos_renyi");
    Ok(match name {
        "erdos_renyi" => GeneratorKind::ErdosRenyi {
            p: kv.get_or("p", 0.5)?,
            reinsert: kv.get_or("reinsert", 0.25)?,
        },
        "matching_killer" => GeneratorKind::MatchingKiller {
            p: kv.get_or("p", 0.5)?,
            tail: kv.get_or("tail", 0.1)?,
        },
        "block_bipartite" => {
            let block_size: usize = kv.get_or("block_size", 8)?;
            GeneratorKind::BlockBipartite {
                blocks: kv.get_or("blocks", n / block_size.max(1))?,
                block_size,
                p: kv.get_or("p", 0.5)?,
            }
        }
        other => return Err(Error::Config(format!("unknown generator `{other}`"))),
    })
}

impl GeneratorConfig {
    /// Reads a generator config; `count` is returned alongside.
    pub fn from_key_values(kv: &KeyValues) -> Result<(Self, usize)> {
        let n = kv.require("n")?;
        let cfg = GeneratorConfig {
            kind: generator_kind(kv, n)?,
            n,
            k: kv.get_or("k", 0)?,
            seed: kv.get_or("seed", 0)?,
        };
        Ok((cfg, kv.get_or("count", 1)?))
    }
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub k: usize,
    pub c: f64,
    pub c_prime: f64,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub generator: GeneratorKind,
    pub cells: Vec<Cell>,
    pub trials: usize,
    pub seed_base: u64,
    pub sampler_rows: usize,
    pub slot_scale: f64,
    pub verify: bool,
    /// Randomized cells only count samplers instead of building them.
    pub space_only: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let ns: Vec<usize> = kv
            .list("n")?
            .ok_or_else(|| Error::Config("missing key `n`".into()))?;
        let ks: Vec<usize> = kv.list("k")?.unwrap_or_else(|| vec![0]);
        let algos: Vec<String> = kv.list("algo")?.unwrap_or_else(|| vec!["rand".into()]);
        let epsilons: Vec<f64> = kv.list("epsilon")?.unwrap_or_else(|| vec![0.5]);
        let cs: Vec<f64> = kv.list("c")?.unwrap_or_else(|| vec![4.0]);
        let c_primes: Vec<f64> = kv.list("c_prime")?.unwrap_or_else(|| vec![2.0]);
        let deltas: Vec<Option<f64>> = match kv.raw("delta") {
            None | Some("none") => vec![None],
            Some(_) => kv.list("delta")?.unwrap().into_iter().map(Some).collect(),
        };
        let mut cells = Vec::new();
        for &n in &ns {
            for &k in &ks {
                for algo in &algos {
                    let base = Cell {
                        algorithm: AlgorithmKind::DeterministicK,
                        n,
                        k,
                        c: cs[0],
                        c_prime: c_primes[0],
                        delta: None,
                    };
                    match algo.as_str() {
                        "det" => cells.push(base),
                        "budget" => cells.extend(epsilons.iter().map(|&epsilon| Cell {
                            algorithm: AlgorithmKind::BudgetedApprox { epsilon },
                            ..base.clone()
                        })),
                        "rand" => {
                            for &c in &cs {
                                for &c_prime in &c_primes {
                                    for &delta in &deltas {
                                        cells.push(Cell {
                                            algorithm: AlgorithmKind::RandomizedSqrtK,
                                            c,
                                            c_prime,
                                            delta,
                                            ..base.clone()
                                        });
                                    }
                                }
                            }
                        }
                        other => return Err(Error::Config(format!("unknown algorithm `{other}`"))),
                    }
                }
            }
        }
        let plan = ExperimentPlan {
            generator: generator_kind(kv, ns[0])?,
            cells,
            trials: kv.get_or("trials", 1)?,
            seed_base: kv.get_or("seed", 0)?,
            sampler_rows: kv.get_or("sampler_rows", 1)?,
            slot_scale: kv.get_or("slot_scale", 1.0)?,
            verify: kv.get_or("verify", true)?,
            space_only: kv.get_or("space_only", false)?,
            out: kv.get("out")?,
        };
        if plan.trials == 0 || plan.cells.is_empty() {
            return Err(Error::Config("a plan needs at least one cell and one trial".into()));
        }
        Ok(plan)
    }

    fn generator_for(&self, cell: &Cell, seed: u64) -> GeneratorConfig {
        let kind = match self.generator {
            GeneratorKind::BlockBipartite { block_size, p, .. } => GeneratorKind::BlockBipartite {
                blocks: cell.n / block_size.max(1),
                block_size,
                p,
            },
            ref other => other.clone(),
        };
        GeneratorConfig {
            kind,
            n: cell.n,
            k: cell.k,
            seed,
        }
    }

    fn algorithm_config(&self, cell: &Cell, seed: u64) -> AlgorithmConfig {
        AlgorithmConfig {
            c: cell.c,
            c_prime: cell.c_prime,
            delta: cell.delta,
            sampler_rows: self.sampler_rows,
            slot_scale: self.slot_scale,
            exec: Exec::Sequential,
            ..AlgorithmConfig::new(cell.n, cell.k, seed)
        }
    }
}

/// One CSV row: a single trial of one cell. Failed trials carry the error
/// message and empty metric columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: Option<f64>,
    pub c: Option<f64>,
    pub c_prime: Option<f64>,
    pub delta: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub stored_edges: Option<usize>,
    pub stored_deletions: Option<usize>,
    pub levels: Option<usize>,
    pub sampler_count: Option<u64>,
    pub estimated_bits: Option<u64>,
    pub matching_size: Option<usize>,
    pub is_maximal: Option<bool>,
    pub max_matching_size: Option<usize>,
    pub approx_ratio: Option<f64>,
    pub selected_level: Option<usize>,
    pub affected_vertices: Option<usize>,
    pub chains: Option<usize>,
    pub full_neighborhood: Option<usize>,
    pub matched_free: Option<usize>,
    pub swapped: Option<usize>,
    pub exhausted: Option<usize>,
    pub used_fallback: Option<bool>,
    pub budget: Option<usize>,
    pub evictions: Option<usize>,
    pub wall_time_ms: Option<f64>,
    pub error: String,
}

impl SweepRow {
    fn header(cell: &Cell, trial: usize, seed: u64) -> Self {
        let rand = cell.algorithm == AlgorithmKind::RandomizedSqrtK;
        SweepRow {
            algorithm: cell.algorithm.short_name().into(),
            n: cell.n,
            k: cell.k,
            epsilon: cell.algorithm.epsilon(),
            c: rand.then_some(cell.c),
            c_prime: rand.then_some(cell.c_prime),
            delta: cell.delta,
            trial,
            seed,
            ..SweepRow::default()
        }
    }

    fn fill(&mut self, r: &RunResult) {
        let m = &r.metrics;
        let rand = r.algorithm == AlgorithmKind::RandomizedSqrtK;
        self.stored_edges = Some(m.stored_edges);
        self.stored_deletions = Some(m.stored_deletions);
        self.levels = Some(m.levels);
        self.sampler_count = Some(m.sampler_count);
        self.estimated_bits = Some(m.estimated_bits);
        self.matching_size = Some(m.matching_size);
        self.is_maximal = m.is_maximal;
        self.max_matching_size = m.max_matching_size;
        self.approx_ratio = m.approx_ratio;
        self.selected_level = m.selected_level;
        if rand {
            self.affected_vertices = Some(m.affected_vertices);
            self.chains = Some(m.chains);
            self.full_neighborhood = Some(m.full_neighborhood);
            self.matched_free = Some(m.matched_free);
            self.swapped = Some(m.swapped);
            self.exhausted = Some(m.exhausted);
            self.used_fallback = Some(m.used_fallback);
        }
        self.budget = m.budget;
        self.evictions = m.budget.map(|_| m.evictions);
        self.wall_time_ms = Some(m.wall_time_ms);
    }
}

/// Runs every `(cell, trial)` pair of `plan`; rows come back in cell-major,
/// trial-minor order regardless of `exec`.
pub fn sweep(plan: &ExperimentPlan, exec: Exec) -> Vec<SweepRow> {
    let jobs = plan.cells.len() * plan.trials;
    exec::map_indexed(jobs, exec, |j| {
        let cell = &plan.cells[j / plan.trials];
        let trial = j % plan.trials;
        let seed = plan.seed_base + trial as u64;
        let mut row = SweepRow::header(cell, trial, seed);
        if let Err(e) = run_trial(plan, cell, seed, &mut row) {
            row.error = e.to_string();
        }
        row
    })
}

fn run_trial(plan: &ExperimentPlan, cell: &Cell, seed: u64, row: &mut SweepRow) -> Result<()> {
    let spec = generate(&plan.generator_for(cell, seed))?;
    if plan.space_only && cell.algorithm == AlgorithmKind::RandomizedSqrtK {
        let cfg = plan.algorithm_config(cell, seed);
        let layout = RepairLayout::new(&cfg);
        row.stored_edges = Some(hierarchy_only(&spec, cfg.hierarchy_levels()));
        row.stored_deletions = Some(spec.deletion_count());
        row.sampler_count = Some(layout.sampler_count());
        row.estimated_bits = Some(layout.worst_case_bits());
        return Ok(());
    }
    let graph = plan.verify.then(|| final_graph(&spec)).transpose()?;
    let cfg = plan.algorithm_config(cell, seed);
    let mut result = match cell.algorithm {
        AlgorithmKind::BudgetedApprox { epsilon } => {
            crate::stream::validate_stream(&spec).into_result()?;
            drivers::run_budgeted(spec.n, spec.k, epsilon, BudgetedRoute::default(), spec.into_events())?
        }
        kind => drivers::run(kind, spec, &cfg)?,
    };
    if let Some(g) = &graph {
        result.verify_against(g);
    }
    row.fill(&result);
    Ok(())
}

fn hierarchy_only(spec: &StreamSpec, levels: usize) -> usize {
    let mut h = HierarchicalMatching::new(spec.n, HierarchyMode::FixedLevels(levels));
    for ev in &spec.events {
        if ev.kind == EventKind::Insert {
            h.insert(ev.edge);
        }
    }
    h.stored_edges()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`. Needs two distinct
/// positive abscissae; non-positive points are skipped.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
