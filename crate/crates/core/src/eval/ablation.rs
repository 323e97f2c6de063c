use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Metrics};
use super::stats::{mean, sample_std, t_test, Variance};
use crate::corpus::{write_jsonl, AspectInstance};
use crate::model::{encode_batch, Example, Gcae};
use crate::retrieval::Strategy;
use crate::training::{run_after_stage1, run_stage1, AlphaMode, Components, PipelineConfig, PreparedData, Stage1Artifacts};
use crate::{Error, Result};

/// EMA smoothing values swept by the beta grid.
pub const BETA_VALUES: [f64; 6] = [0.3, 0.5, 0.7, 0.9, 0.99, 0.999];

/// The six component combinations of the component ablation, baseline first.
pub const COMPONENT_MODES: [Components; 6] = [
    Components::BASELINE,
    Components { pretrain: true, consistency: false, ema: false, finetune: true },
    Components { pretrain: true, consistency: true, ema: false, finetune: true },
    Components { pretrain: true, consistency: false, ema: true, finetune: true },
    Components { pretrain: true, consistency: true, ema: true, finetune: false },
    Components::FULL,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub name: String,
    pub cells: Vec<Cell>,
    /// Cell the others are tested against.
    pub baseline: Option<usize>,
}

impl Grid {
    pub fn single(label: &str, config: PipelineConfig) -> Self {
        Grid {
            name: label.to_string(),
            cells: vec![Cell { label: label.to_string(), config }],
            baseline: None,
        }
    }

    /// One of the predefined grids: sampling, alpha, beta, components, benchmark.
    pub fn named(name: &str, base: &PipelineConfig) -> Result<Self> {
        match name {
            "sampling" => Ok(sampling_grid(base)),
            "alpha" => Ok(alpha_grid(base)),
            "beta" => Ok(beta_grid(base)),
            "components" => Ok(components_grid(base)),
            "benchmark" => Ok(benchmark_grid(base)),
            other => Err(Error::Config(format!(
                "unknown grid {other:?} (expected sampling, alpha, beta, components or benchmark)"
            ))),
        }
    }
}

fn cell(label: impl Into<String>, base: &PipelineConfig, edit: impl FnOnce(&mut PipelineConfig)) -> Cell {
    let mut config = base.clone();
    edit(&mut config);
    Cell { label: label.into(), config }
}

pub fn sampling_grid(base: &PipelineConfig) -> Grid {
    let cells = [Strategy::Random, Strategy::Coarse, Strategy::Coarse2Fine]
        .into_iter()
        .map(|s| cell(s.to_string(), base, |c| c.sample.strategy = s))
        .collect();
    Grid { name: "sampling".into(), cells, baseline: Some(0) }
}

pub fn alpha_grid(base: &PipelineConfig) -> Grid {
    let cells = [AlphaMode::None, AlphaMode::Constant(0.7), AlphaMode::Adaptive]
        .into_iter()
        .map(|a| cell(a.to_string(), base, |c| c.guidance.alpha = a))
        .collect();
    Grid { name: "alpha".into(), cells, baseline: Some(0) }
}

pub fn beta_grid(base: &PipelineConfig) -> Grid {
    let cells = BETA_VALUES
        .into_iter()
        .map(|b| cell(format!("beta={b}"), base, |c| c.guidance.beta = b))
        .collect();
    Grid { name: "beta".into(), cells, baseline: None }
}

pub fn components_grid(base: &PipelineConfig) -> Grid {
    let cells = COMPONENT_MODES
        .into_iter()
        .map(|m| cell(m.to_string(), base, |c| c.components = m))
        .collect();
    Grid { name: "components".into(), cells, baseline: Some(0) }
}

/// Baseline, full framework, and full framework with random sampling.
pub fn benchmark_grid(base: &PipelineConfig) -> Grid {
    let cells = vec![
        cell("baseline", base, |c| c.components = Components::BASELINE),
        cell("uika", base, |c| c.components = Components::FULL),
        cell("uika-random", base, |c| {
            c.components = Components::FULL;
            c.sample.strategy = Strategy::Random;
        }),
    ];
    Grid { name: "benchmark".into(), cells, baseline: Some(0) }
}

/// Metrics of one configuration across seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedRunSet {
    pub runs: Vec<(u64, Metrics)>,
}

impl SeedRunSet {
    pub fn accuracies(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.1.accuracy).collect()
    }

    pub fn macro_f1s(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.1.macro_f1).collect()
    }
}

/// Runs cells in-process, sharing stage-1 artifacts between cells whose
/// stage-1 inputs agree.
pub struct LocalRunner<'a> {
    data: &'a PreparedData,
    test: Vec<Example>,
    cache: HashMap<String, Stage1Artifacts>,
}

impl<'a> LocalRunner<'a> {
    pub fn new(data: &'a PreparedData, test: &[AspectInstance]) -> Self {
        LocalRunner {
            data,
            test: encode_batch(test, &data.vocab),
            cache: HashMap::new(),
        }
    }

    pub fn test_set(&self) -> &[Example] {
        &self.test
    }

    pub fn run(&mut self, cfg: &PipelineConfig, seed: u64) -> Result<Metrics> {
        if cfg.bm25 != self.data.index.params() {
            return Err(Error::Config(
                "cell BM25 parameters differ from the prepared index".into(),
            ));
        }
        let s1 = if cfg.components.pretrain {
            let key = cfg.stage1_key(seed);
            if !self.cache.contains_key(&key) {
                let art = run_stage1(self.data, cfg, seed)?;
                self.cache.insert(key.clone(), art);
            }
            self.cache.get(&key)
        } else {
            None
        };
        let out = run_after_stage1(self.data, cfg, seed, s1, &mut |_| Ok(None))?;
        evaluate(&Gcae::new(cfg.model.clone())?, &out.params, &self.test)
    }
}

/// Every cell of `grid` for one seed; failures are kept as messages.
pub fn run_seed<F>(grid: &Grid, seed: u64, run: &mut F) -> Vec<std::result::Result<Metrics, String>>
where
    F: FnMut(&Cell, u64) -> Result<Metrics>,
{
    grid.cells
        .iter()
        .map(|c| {
            run(c, seed).map_err(|e| {
                log::warn!("cell {} seed {seed}: {e}", c.label);
                e.to_string()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValues {
    pub acc: f64,
    pub f1: f64,
    pub t_acc: f64,
    pub t_f1: f64,
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub label: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub macro_f1s: Vec<f64>,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub p_vs_baseline: Option<PValues>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<String>,
}

/// Aggregates `results[seed][cell]` into one row per cell.
pub fn summarize(
    grid: &Grid,
    seeds: &[u64],
    results: &[Vec<std::result::Result<Metrics, String>>],
    variance: Variance,
) -> Vec<CellResult> {
    let sets: Vec<(SeedRunSet, Vec<String>)> = (0..grid.cells.len())
        .map(|ci| {
            let mut set = SeedRunSet::default();
            let mut errors = Vec::new();
            for (si, &seed) in seeds.iter().enumerate() {
                match results.get(si).and_then(|r| r.get(ci)) {
                    Some(Ok(m)) => set.runs.push((seed, m.clone())),
                    Some(Err(e)) => errors.push(format!("seed {seed}: {e}")),
                    None => errors.push(format!("seed {seed}: missing result")),
                }
            }
            (set, errors)
        })
        .collect();
    let base = grid.baseline.map(|b| (sets[b].0.accuracies(), sets[b].0.macro_f1s()));

    grid.cells
        .iter()
        .zip(&sets)
        .enumerate()
        .map(|(ci, (cell, (set, errors)))| {
            let acc = set.accuracies();
            let f1 = set.macro_f1s();
            let p_vs_baseline = match (&base, grid.baseline) {
                (Some((ba, bf)), Some(b)) if b != ci => {
                    match (t_test(&acc, ba, variance), t_test(&f1, bf, variance)) {
                        (Ok(ta), Ok(tf)) => Some(PValues {
                            acc: ta.p,
                            f1: tf.p,
                            t_acc: ta.t,
                            t_f1: tf.t,
                        }),
                        _ => None,
                    }
                }
                _ => None,
            };
            let stat = |xs: &[f64]| if xs.is_empty() { (f64::NAN, f64::NAN) } else { (mean(xs), sample_std(xs)) };
            let (mean_acc, std_acc) = stat(&acc);
            let (mean_f1, std_f1) = stat(&f1);
            CellResult {
                label: cell.label.clone(),
                config: cell.config.echo(),
                seeds: set.runs.iter().map(|r| r.0).collect(),
                accuracies: acc,
                macro_f1s: f1,
                mean_acc,
                std_acc,
                mean_f1,
                std_f1,
                p_vs_baseline,
                errors: errors.clone(),
            }
        })
        .collect()
}

/// Runs the whole grid in-process, seed by seed.
pub fn ablate<F>(grid: &Grid, seeds: &[u64], variance: Variance, mut run: F) -> Result<Vec<CellResult>>
where
    F: FnMut(&Cell, u64) -> Result<Metrics>,
{
    if grid.cells.is_empty() {
        return Err(Error::Empty("ablation grid"));
    }
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let results: Vec<_> = seeds.iter().map(|&s| run_seed(grid, s, &mut run)).collect();
    Ok(summarize(grid, seeds, &results, variance))
}

/// Aligned text rendering of a results table.
pub fn render_table(title: &str, rows: &[CellResult]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "{:<width$}  {:>17}  {:>17}  {:>9}  {:>9}  {:>5}",
        "cell", "acc (mean±std)", "f1 (mean±std)", "p(acc)", "p(f1)", "runs"
    );
    for r in rows {
        let (pa, pf) = match r.p_vs_baseline {
            Some(p) => (format!("{:.3e}", p.acc), format!("{:.3e}", p.f1)),
            None => ("-".to_string(), "-".to_string()),
        };
        let _ = writeln!(
            out,
            "{:<width$}  {:>17}  {:>17}  {:>9}  {:>9}  {:>5}",
            r.label,
            format!("{:.4}±{:.4}", r.mean_acc, r.std_acc),
            format!("{:.4}±{:.4}", r.mean_f1, r.std_f1),
            pa,
            pf,
            r.seeds.len()
        );
    }
    out
}

pub fn write_results(path: impl AsRef<Path>, rows: &[CellResult]) -> Result<()> {
    write_jsonl(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(acc_hits: usize) -> Metrics {
        let labels = [0usize, 1, 2, 0];
        let preds: Vec<usize> = labels.iter().enumerate().map(|(i, &y)| if i < acc_hits { y } else { (y + 1) % 3 }).collect();
        Metrics::from_predictions(&labels, &preds, 3).unwrap()
    }

    #[test]
    fn predefined_grids() {
        let base = PipelineConfig::default();
        let beta = beta_grid(&base);
        let values: Vec<f64> = beta.cells.iter().map(|c| c.config.guidance.beta).collect();
        assert_eq!(values, BETA_VALUES);
        let comps = components_grid(&base);
        let labels: Vec<&str> = comps.cells.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["F", "S+F", "S+R+F", "S+E+F", "S+R+E", "S+R+E+F"]);
        assert!(Grid::named("nope", &base).is_err());
    }

    #[test]
    fn summary_and_errors() {
        let base = PipelineConfig::default();
        let grid = Grid {
            name: "t".into(),
            cells: vec![
                Cell { label: "a".into(), config: base.clone() },
                Cell { label: "b".into(), config: base.clone() },
            ],
            baseline: Some(0),
        };
        let mut calls = 0;
        let rows = ablate(&grid, &[1, 2, 3], Variance::Pooled, |c, s| {
            calls += 1;
            if c.label == "b" && s == 3 {
                return Err(Error::InvalidInput("boom".into()));
            }
            Ok(metrics(if c.label == "a" { (s as usize) % 2 + 1 } else { 4 - (s as usize % 2) }))
        })
        .unwrap();
        assert_eq!(calls, 6);
        assert_eq!(rows[1].seeds, [1, 2]);
        assert_eq!(rows[1].errors.len(), 1);
        assert!(rows[0].p_vs_baseline.is_none());
        assert!(rows[1].p_vs_baseline.is_some());
        let text = render_table("t", &rows);
        assert_eq!(text.lines().count(), 4);

        let one = Grid::single("x", base);
        let rows = ablate(&one, &[1, 2, 3, 4, 5], Variance::Pooled, |_, _| Ok(metrics(3))).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_acc, 0.75);
        assert_eq!(rows[0].std_acc, 0.0);
    }
}
