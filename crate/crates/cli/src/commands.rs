//! Subcommand bodies.

use std::path::{Path, PathBuf};
use std::process::{Child, Command};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use uika_core::config::RunConfig;
use uika_core::corpus::{extract_pseudo_aspect, read_jsonl, write_jsonl, AspectInstance, SentenceRecord};
use uika_core::eval::{evaluate, render_table, run_seed, summarize, write_results, Grid, LocalRunner, Metrics};
use uika_core::model::{encode_batch, init_params, load_checkpoint_matching, Gcae, ModelConfig, ParamSet};
use uika_core::retrieval::{build_sampled_dataset, Bm25Index, SampleConfig};
use uika_core::rng::SeedStream;
use uika_core::synthetic::{benchmark_pipeline_config, SyntheticBenchmark, SyntheticConfig};
use uika_core::training::{
    run_after_stage1, run_pipeline_with, run_stage1, stage1_pretrain, stage3_finetune, PreparedData, RunReport,
    Stage1Artifacts,
};
use uika_core::Error;

use crate::output::{epochs_csv, write_atomic, write_json, RunDir};
use crate::setup::{embeddings, lexicon, prepare, read_instances, read_sentences, required_path, single_seed};

#[derive(Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    run: &'a RunReport,
    complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<&'a Metrics>,
}

fn new_report(cfg: &RunConfig, seed: u64) -> RunReport {
    RunReport {
        seed,
        components: cfg.pipeline.components.to_string(),
        config: cfg.pipeline.echo(),
        ..RunReport::default()
    }
}

/// Writes the final report and the loss series, then re-reads the report.
fn finish(run: &RunDir, report: &RunReport, test: Option<&Metrics>) -> Result<()> {
    let path = run.write_json("report.json", &Report { run: report, complete: true, test })?;
    let text = std::fs::read_to_string(&path)?;
    let back: RunReport = serde_json::from_str(&text).with_context(|| format!("re-reading {}", path.display()))?;
    ensure!(back.epochs.len() == report.epochs.len(), "report {} is incomplete", path.display());
    run.write_text("epochs.csv", &epochs_csv(&report.epochs))?;
    Ok(())
}

fn write_jsonl_atomic<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let tmp = path.with_extension("partial");
    write_jsonl(&tmp, items)?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming {} into place", tmp.display()))
}

/// Parameters with the shapes `model` would have on this data, for
/// checking loaded checkpoints.
fn expected_shapes(model: &ModelConfig, data: &PreparedData) -> Result<ParamSet> {
    Ok(init_params(model, &data.vocab, data.table.as_ref(), &mut SeedStream::new(0).rng("shapes"))?)
}

fn load_matching(path: &Path, model: &ModelConfig, data: &PreparedData) -> Result<ParamSet> {
    load_checkpoint_matching(path, &expected_shapes(model, data)?)
        .with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn sample(cfg: &RunConfig) -> Result<()> {
    cfg.validate(&["source", "target_train"])?;
    let sc = SampleConfig { seed: single_seed(cfg), ..cfg.pipeline.sample };
    let table = embeddings(cfg)?;
    if sc.strategy.needs_embeddings() && table.is_none() {
        bail!("sample.strategy = {} needs an embeddings path", sc.strategy);
    }
    let source = read_sentences(required_path(cfg, "source")?)?;
    let target = read_instances(required_path(cfg, "target_train")?)?;
    let index = Bm25Index::build(&source, cfg.pipeline.bm25)?;
    let sampled = build_sampled_dataset(&target, &source, &sc, &index, table.as_ref(), cfg.pipeline.jobs)?;
    let run = RunDir::create(cfg, "sample", Some(sc.seed))?;
    let path = run.file("sampled.jsonl");
    write_jsonl_atomic(&path, &sampled)?;
    let back: Vec<SentenceRecord> = read_jsonl(&path)?;
    ensure!(back.len() == sampled.len(), "{} did not round-trip", path.display());
    println!(
        "sampled {} of {} source sentences for {} target instances ({})",
        sampled.len(),
        source.len(),
        target.len(),
        sc.strategy
    );
    println!("{}", path.display());
    Ok(())
}

pub fn pseudo(cfg: &RunConfig, input: &Path) -> Result<()> {
    cfg.validate(&[])?;
    let lex = lexicon(cfg)?;
    let records = read_sentences(input)?;
    let pseudo: Vec<AspectInstance> = records.iter().filter_map(|r| extract_pseudo_aspect(r, &lex)).collect();
    let dropped = records.len() - pseudo.len();
    if dropped > 0 {
        log::warn!("{dropped} of {} sentences have no extractable aspect and were dropped", records.len());
    }
    let run = RunDir::create(cfg, "pseudo", None)?;
    let path = run.file("pseudo.jsonl");
    write_jsonl_atomic(&path, &pseudo)?;
    println!("{} pseudo-labelled instances, {dropped} dropped", pseudo.len());
    println!("{}", path.display());
    Ok(())
}

pub fn pretrain(cfg: &RunConfig, pseudo: Option<&Path>) -> Result<()> {
    let required: &[&str] = match pseudo {
        Some(_) => &["target_train"],
        None => &["source", "target_train"],
    };
    cfg.validate(required)?;
    let seed = single_seed(cfg);
    let data = prepare(cfg)?;
    let mut report = new_report(cfg, seed);
    let t = Instant::now();
    let m1 = match pseudo {
        Some(path) => {
            let instances = read_instances(path)?;
            ensure!(!instances.is_empty(), "{} holds no instances", path.display());
            let model = cfg.pipeline.model.with_classes(2);
            let seeds = SeedStream::new(seed);
            let init = init_params(&model, &data.vocab, data.table.as_ref(), &mut seeds.rng("stage1.init"))?;
            let out = stage1_pretrain(init, &encode_batch(&instances, &data.vocab), &model, &cfg.pipeline.stage1, &seeds)?;
            report.pseudo_labelled = instances.len();
            report.epochs = out.log;
            out.params
        }
        None => {
            let art = run_stage1(&data, &cfg.pipeline, seed)?;
            report.sampled = art.sampled.len();
            report.pseudo_labelled = art.pseudo.len();
            report.dropped = art.dropped;
            report.epochs = art.log;
            report.timings = art.timings;
            art.m1
        }
    };
    report.timings.insert("total".into(), t.elapsed().as_secs_f64());
    let run = RunDir::create(cfg, "pretrain", Some(seed))?;
    let path = run.write_checkpoint("stage1.uika", &m1)?;
    report.checkpoints.insert("stage1".into(), path.display().to_string());
    finish(&run, &report, None)?;
    println!("{}", path.display());
    Ok(())
}

pub fn guide(cfg: &RunConfig, from: Option<&Path>) -> Result<()> {
    cfg.validate(&["target_train"])?;
    let seed = single_seed(cfg);
    let data = prepare(cfg)?;
    let mut pc = cfg.pipeline.clone();
    pc.components.finetune = false;
    let stage1 = match (pc.components.pretrain, from) {
        (true, Some(path)) => Some(Stage1Artifacts {
            sampled: Vec::new(),
            pseudo: Vec::new(),
            dropped: 0,
            m1: load_matching(path, &pc.model.with_classes(2), &data)?,
            log: Vec::new(),
            timings: Default::default(),
        }),
        (true, None) => bail!("--from is required when pretraining is among the components"),
        (false, Some(_)) => bail!("--from was given but pretraining is not among the components"),
        (false, None) => None,
    };
    let out = run_after_stage1(&data, &pc, seed, stage1.as_ref(), &mut |_| Ok(None))?;
    let mut report = out.report;
    let run = RunDir::create(cfg, "guide", Some(seed))?;
    let path = run.write_checkpoint("stage2.uika", &out.params)?;
    report.checkpoints.insert("stage2".into(), path.display().to_string());
    finish(&run, &report, None)?;
    println!("{}", path.display());
    Ok(())
}

pub fn finetune(cfg: &RunConfig, from: &Path) -> Result<()> {
    cfg.validate(&["target_train"])?;
    let seed = single_seed(cfg);
    let data = prepare(cfg)?;
    let model = &cfg.pipeline.model;
    let m2 = load_matching(from, model, &data)?;
    let t = Instant::now();
    let out = stage3_finetune(m2, &data.target_encoded, model, &cfg.pipeline.stage3, &SeedStream::new(seed))?;
    let mut report = new_report(cfg, seed);
    report.epochs = out.log;
    report.timings.insert("stage3".into(), t.elapsed().as_secs_f64());
    let run = RunDir::create(cfg, "finetune", Some(seed))?;
    let path = run.write_checkpoint("stage3.uika", &out.params)?;
    report.checkpoints.insert("stage3".into(), path.display().to_string());
    finish(&run, &report, None)?;
    println!("{}", path.display());
    Ok(())
}

fn print_metrics(m: &Metrics) {
    println!("accuracy {:.4}  macro-F1 {:.4}", m.accuracy, m.macro_f1);
}

pub fn eval(cfg: &RunConfig, checkpoint: &Path) -> Result<()> {
    cfg.validate(&["target_train", "target_test"])?;
    let data = prepare(cfg)?;
    let model = &cfg.pipeline.model;
    let params = load_matching(checkpoint, model, &data)?;
    let test = encode_batch(&read_instances(required_path(cfg, "target_test")?)?, &data.vocab);
    let metrics = evaluate(&Gcae::new(model.clone())?, &params, &test)?;
    let run = RunDir::create(cfg, "eval", None)?;
    run.write_json("metrics.json", &metrics)?;
    print_metrics(&metrics);
    Ok(())
}

fn to_core(e: anyhow::Error) -> Error {
    Error::Checkpoint(format!("{e:#}"))
}

pub fn pipeline(cfg: &RunConfig) -> Result<()> {
    cfg.validate(&["source", "target_train"])?;
    let seed = single_seed(cfg);
    let data = prepare(cfg)?;
    let test = match &cfg.paths.target_test {
        Some(p) => Some(encode_batch(&read_instances(p)?, &data.vocab)),
        None => None,
    };
    let run = RunDir::create(cfg, "pipeline", Some(seed))?;
    let t = Instant::now();
    let out = run_pipeline_with(&data, &cfg.pipeline, seed, &mut |ev| {
        let path = run.write_checkpoint(&format!("{}.uika", ev.stage), ev.params).map_err(to_core)?;
        let mut partial = ev.report.clone();
        partial.checkpoints.insert(ev.stage.to_string(), path.display().to_string());
        run.write_json("report.json", &Report { run: &partial, complete: false, test: None })
            .map_err(to_core)?;
        log::info!("{} done, checkpoint {}", ev.stage, path.display());
        Ok(Some(path))
    })
    .with_context(|| format!("pipeline with seed {seed}"))?;
    let mut report = out.report;
    report.timings.insert("total".into(), t.elapsed().as_secs_f64());
    let final_path = run.write_checkpoint("final.uika", &out.params)?;
    report.checkpoints.insert("final".into(), final_path.display().to_string());
    let metrics = match &test {
        Some(test) => Some(evaluate(&Gcae::new(cfg.pipeline.model.clone())?, &out.params, test)?),
        None => None,
    };
    finish(&run, &report, metrics.as_ref())?;
    if let Some(m) = &metrics {
        print_metrics(m);
    }
    println!("{}", run.path.display());
    Ok(())
}

fn grid(cfg: &RunConfig, name: &str) -> Result<Grid> {
    if name == "single" {
        return Ok(Grid::single("config", cfg.pipeline.clone()));
    }
    Ok(Grid::named(name, &cfg.pipeline)?)
}

type SeedResults = Vec<std::result::Result<Metrics, String>>;

fn run_cells(cfg: &RunConfig, grid: &Grid, seeds: &[u64]) -> Result<Vec<SeedResults>> {
    let data = prepare(cfg)?;
    let test = read_instances(required_path(cfg, "target_test")?)?;
    let mut runner = LocalRunner::new(&data, &test);
    Ok(seeds
        .iter()
        .map(|&s| {
            log::info!("seed {s}");
            run_seed(grid, s, &mut |c, s| runner.run(&c.config, s))
        })
        .collect())
}

/// One worker process per seed, at most `jobs` at a time.
fn run_workers(run: &RunDir, name: &str, grid: &Grid, seeds: &[u64], jobs: usize) -> Result<Vec<SeedResults>> {
    let exe = std::env::current_exe().context("locating the uika executable")?;
    let cells = run.file("cells");
    std::fs::create_dir_all(&cells)?;
    let config = run.file("config.txt");
    let mut results = Vec::with_capacity(seeds.len());
    for batch in seeds.chunks(jobs) {
        let children: Vec<(u64, PathBuf, Child)> = batch
            .iter()
            .map(|&s| {
                let out = cells.join(format!("seed{s}.json"));
                let child = Command::new(&exe)
                    .arg("ablate-cell")
                    .arg("--config")
                    .arg(&config)
                    .args(["--grid", name, "--set", "jobs=1", "--seed", &s.to_string()])
                    .arg("--output")
                    .arg(&out)
                    .spawn()
                    .with_context(|| format!("spawning the worker for seed {s}"))?;
                Ok((s, out, child))
            })
            .collect::<Result<_>>()?;
        for (s, out, mut child) in children {
            let status = child.wait()?;
            let r: SeedResults = if status.success() {
                let text = std::fs::read_to_string(&out).with_context(|| format!("reading {}", out.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", out.display()))?
            } else {
                vec![Err(format!("worker for seed {s} exited with {status}")); grid.cells.len()]
            };
            ensure!(r.len() == grid.cells.len(), "worker for seed {s} returned {} cells", r.len());
            results.push(r);
        }
    }
    Ok(results)
}

pub fn ablate(cfg: &RunConfig, name: &str) -> Result<()> {
    cfg.validate(&["source", "target_train", "target_test"])?;
    let grid = grid(cfg, name)?;
    let run = RunDir::create(cfg, &format!("ablate-{name}"), None)?;
    let jobs = cfg.pipeline.jobs;
    let results = if jobs > 1 {
        run_workers(&run, name, &grid, &cfg.seeds, jobs)?
    } else {
        run_cells(cfg, &grid, &cfg.seeds)?
    };
    let rows = summarize(&grid, &cfg.seeds, &results, cfg.variance);
    let path = run.file("results.jsonl");
    write_results(&path, &rows)?;
    let table = render_table(&format!("{name} grid, seeds {:?}", cfg.seeds), &rows);
    run.write_text("table.txt", &table)?;
    print!("{table}");
    println!("{}", run.path.display());
    let failed: Vec<&str> = rows.iter().filter(|r| !r.errors.is_empty()).map(|r| r.label.as_str()).collect();
    ensure!(failed.is_empty(), "cells with failed seeds: {}", failed.join(", "));
    Ok(())
}

pub fn ablate_cell(cfg: &RunConfig, name: &str, output: &Path) -> Result<()> {
    cfg.validate(&["source", "target_train", "target_test"])?;
    let grid = grid(cfg, name)?;
    let results = run_cells(cfg, &grid, &cfg.seeds[..1])?;
    write_json(output, &results[0])
}

pub struct SynthOptions {
    pub dir: PathBuf,
    pub config: SyntheticConfig,
}

/// Writes the benchmark files plus `uika.conf` pointing at them.
pub fn synth(opts: &SynthOptions) -> Result<()> {
    let bench = SyntheticBenchmark::generate(&opts.config)?;
    let files = bench.write(&opts.dir)?;
    let mut cfg = RunConfig {
        pipeline: benchmark_pipeline_config(opts.config.embed_dim),
        noun_suffixes: Vec::new(),
        ..RunConfig::default()
    };
    for (key, path) in [
        ("source", &files.source),
        ("target_train", &files.target_train),
        ("target_test", &files.target_test),
        ("embeddings", &files.embeddings),
        ("nouns", &files.nouns),
        ("stopwords", &files.stopwords),
    ] {
        let name = path.file_name().and_then(|n| n.to_str()).context("benchmark file name")?;
        cfg.set(key, name)?;
    }
    cfg.set("out_dir", "runs")?;
    let conf = opts.dir.join("uika.conf");
    write_atomic(&conf, cfg.to_text().as_bytes())?;
    println!(
        "{} source sentences, {} train and {} test target instances",
        bench.source.len(),
        bench.target_train.len(),
        bench.target_test.len()
    );
    println!("{}", conf.display());
    Ok(())
}
