use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde_json::json;
use tdur_core::baselines::{
    design, flat_features, gbdt_fit, load_baseline, mean_fit, mlp_fit, ridge_fit, save_baseline, targets, Baseline,
    FlatExample, FlatMlpConfig,
};
use tdur_core::embed::{build_features, normalize_key, slot_layout, CachedEmbedder, EmbeddingProvider, ProviderSpec};
use tdur_core::encoder::{load_checkpoint, HierNet, ModelParams};
use tdur_core::eval::{compare, emit_report, render_table, ModelRuns};
use tdur_core::explain::{explain_sentences, explain_words, write_rendering, Mode, MAX_EXACT_PLAYERS};
use tdur_core::ingest::{ingest_dir, read_jsonl, split_temporal, summarize, write_jsonl, TrialRecord};
use tdur_core::train::{embed_records, train as train_model, write_outcome};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::write_manifest;
use crate::{BaselineKind, ConfigArgs, ModeArg, Pool, UnitArg};

fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "input directory {} does not exist",
            path.display()
        )))
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("input file {} does not exist", path.display())))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(p) => fs::create_dir_all(p).map_err(|e| io_err(p, e)),
        None => Ok(()),
    }
}

fn read_dataset(path: &Path) -> Result<Vec<TrialRecord>, CliError> {
    require_file(path)?;
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn write_dataset(path: &Path, records: &[TrialRecord]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_jsonl(&mut w, records)?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::data(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    emit(&(text + "\n"))
}

/// `<path>.run.json` next to a file output.
fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

fn resolve(config: &ConfigArgs) -> Result<RunConfig, CliError> {
    if let Some(path) = &config.config {
        require_file(path)?;
    }
    RunConfig::resolve(config.config.as_deref(), config.dim, &config.overrides)
}

fn provider_of(spec: &ProviderSpec) -> Result<EmbeddingProvider, CliError> {
    if let ProviderSpec::Cache { path } = spec {
        require_file(path)?;
    }
    Ok(spec.build()?)
}

pub fn ingest(input: &Path, out: &Path) -> Result<(), CliError> {
    require_dir(input)?;
    let (records, summary) = ingest_dir(input)?;
    write_dataset(out, &records)?;
    write_manifest(&sidecar(out), "ingest", None, &[out.to_path_buf()])?;
    print_json(&summary)
}

pub fn stats(dataset: &Path) -> Result<(), CliError> {
    let records = read_dataset(dataset)?;
    print_json(&summarize(&records)?)
}

pub fn split(dataset: &Path, cutoff: Option<NaiveDate>, out_dir: &Path, config: &ConfigArgs) -> Result<(), CliError> {
    let mut cfg = resolve(config)?;
    if let Some(c) = cutoff {
        cfg.cutoff = c;
    }
    let records = read_dataset(dataset)?;
    let split = split_temporal(&records, cfg.cutoff);
    let train_path = out_dir.join("train.jsonl");
    let test_path = out_dir.join("test.jsonl");
    write_dataset(&train_path, &split.train)?;
    write_dataset(&test_path, &split.test)?;
    write_manifest(
        &out_dir.join("split.run.json"),
        "split",
        Some(&cfg),
        &[train_path, test_path],
    )?;
    print_json(&json!({
        "cutoff_date": split.cutoff_date,
        "train": split.train.len(),
        "test": split.test.len(),
    }))
}

pub fn embed(datasets: &[PathBuf], out: &Path, config: &ConfigArgs) -> Result<(), CliError> {
    let cfg = resolve(config)?;
    let provider = provider_of(&cfg.provider)?;
    let mut texts: BTreeMap<String, String> = BTreeMap::new();
    for path in datasets {
        for r in read_dataset(path)? {
            for t in r
                .criteria()
                .chain(r.drugs.iter().map(String::as_str))
                .chain(r.diseases.iter().map(String::as_str))
            {
                texts.entry(normalize_key(t)).or_insert_with(|| t.to_string());
            }
        }
    }
    let entries = texts
        .into_iter()
        .map(|(key, text)| Ok((key, provider.embed(&text)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let count = entries.len();
    let cache = CachedEmbedder::from_entries(provider.dim(), entries)?;
    ensure_parent(out)?;
    let file = File::create(out).map_err(|e| io_err(out, e))?;
    let mut w = BufWriter::new(file);
    cache.write(&mut w)?;
    w.flush().map_err(|e| io_err(out, e))?;
    write_manifest(&sidecar(out), "embed", Some(&cfg), &[out.to_path_buf()])?;
    print_json(&json!({ "entries": count, "dim": provider.dim() }))
}

pub struct TrainFlags {
    pub phase: Option<u8>,
    pub pool: Pool,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub seeds: Option<Vec<u64>>,
}

pub fn train(train_path: &Path, out: &Path, flags: TrainFlags, config: &ConfigArgs) -> Result<(), CliError> {
    if flags.pool != Pool::Mean {
        return Err(CliError::usage(
            "--pool max and --pool cls need token-level outputs; the configured providers give one vector per sentence",
        ));
    }
    let mut cfg = resolve(config)?;
    if flags.phase.is_some() {
        cfg.train.phase_filter = flags.phase;
    }
    if let Some(e) = flags.epochs {
        cfg.train.epochs = e;
    }
    if let Some(lr) = flags.lr {
        cfg.train.lr = lr;
    }
    if let Some(b) = flags.batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(s) = flags.seeds {
        cfg.seeds = s;
    }
    cfg.validate()?;
    let records = read_dataset(train_path)?;
    let provider = provider_of(&cfg.provider)?;

    let mut summary = Vec::new();
    let mut outputs = Vec::new();
    for &seed in &cfg.seeds {
        let mut model = cfg.model.clone();
        model.seed = seed;
        let mut tc = cfg.train.clone();
        tc.shuffle_seed = seed;
        let outcome = train_model(&model, &tc, &records, &provider)?;
        let dir = out.join(format!("seed-{seed}"));
        write_outcome(&dir, &outcome, &cfg.provider)?;
        let last = outcome.curve.last().map(|e| e.train_mse);
        summary.push(json!({
            "seed": seed,
            "train_records": outcome.train_ids.len(),
            "epochs": outcome.curve.len(),
            "final_train_mse": last,
            "best_epoch": outcome.best.as_ref().map(|(e, _)| e),
        }));
        outputs.push(dir);
    }
    write_manifest(&out.join("run.json"), "train", Some(&cfg), &outputs)?;
    print_json(&summary)
}

fn flat_set(provider: &EmbeddingProvider, records: &[TrialRecord]) -> Result<Vec<FlatExample>, CliError> {
    Ok(embed_records(provider, records)?
        .iter()
        .map(flat_features)
        .collect::<tdur_core::Result<Vec<_>>>()?)
}

pub fn baseline(
    train_path: &Path,
    kinds: &[BaselineKind],
    out: &Path,
    seeds: Option<Vec<u64>>,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let mut cfg = resolve(config)?;
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    cfg.validate()?;
    let records = read_dataset(train_path)?;
    let provider = provider_of(&cfg.provider)?;
    let train = flat_set(&provider, &records)?;
    if train.is_empty() {
        return Err(CliError::data("training set is empty"));
    }
    let x = design(&train);
    let y = targets(&train)?;

    let mut outputs = Vec::new();
    for &kind in kinds {
        let name = format!("{kind:?}").to_lowercase();
        let dir = out.join(&name);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        // Only the MLP depends on the seed; the others are fitted once.
        let fixed = match kind {
            BaselineKind::Mean => Some(Baseline::Mean(mean_fit(&y)?)),
            BaselineKind::Ridge => Some(Baseline::Ridge(ridge_fit(&x, &y, cfg.ridge_lambda)?)),
            BaselineKind::Gbdt => Some(Baseline::Gbdt(gbdt_fit(&x, &y, &cfg.gbdt)?)),
            BaselineKind::Mlp => None,
        };
        for &seed in &cfg.seeds {
            let model = match &fixed {
                Some(m) => m.clone(),
                None => {
                    let mut mc = FlatMlpConfig::from_model(&cfg.model);
                    mc.seed = seed;
                    let mut tc = cfg.train.clone();
                    tc.shuffle_seed = seed;
                    Baseline::Mlp(mlp_fit(mc, &tc, &train)?)
                }
            };
            let path = dir.join(format!("seed-{seed}.json"));
            save_baseline(&path, &model, Some(&cfg.provider))?;
            outputs.push(path);
        }
    }
    write_manifest(&out.join("baseline.run.json"), "baseline", Some(&cfg), &outputs)?;
    print_json(
        &json!({ "models": kinds.iter().map(|k| format!("{k:?}").to_lowercase()).collect::<Vec<_>>(), "seeds": cfg.seeds }),
    )
}

enum Runnable {
    Hier {
        params: ModelParams,
        provider: ProviderSpec,
    },
    Flat {
        model: Baseline,
        provider: ProviderSpec,
    },
}

fn load_hier(dir: &Path) -> Result<Runnable, CliError> {
    let (params, manifest) = load_checkpoint(dir)?;
    let provider = manifest.provider.ok_or_else(|| {
        CliError::data(format!(
            "{}: checkpoint does not record its embedding provider",
            dir.display()
        ))
    })?;
    Ok(Runnable::Hier { params, provider })
}

fn load_flat(path: &Path) -> Result<Runnable, CliError> {
    let artifact = load_baseline(path)?;
    let provider = artifact.provider.ok_or_else(|| {
        CliError::data(format!(
            "{}: baseline does not record its embedding provider",
            path.display()
        ))
    })?;
    Ok(Runnable::Flat {
        model: artifact.model,
        provider,
    })
}

fn seed_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    stem.strip_prefix("seed-")?.parse().ok()
}

/// Resolves a model location to one runnable per run.
fn load_runs(path: &Path) -> Result<Vec<Runnable>, CliError> {
    if path.is_file() {
        return Ok(vec![load_flat(path)?]);
    }
    if !path.is_dir() {
        return Err(CliError::usage(format!("model path {} does not exist", path.display())));
    }
    if path.join(tdur_core::encoder::MANIFEST_FILE).is_file() {
        return Ok(vec![load_hier(path)?]);
    }
    let mut seeds: Vec<(u64, PathBuf)> = fs::read_dir(path)
        .map_err(|e| io_err(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| seed_number(&p).map(|s| (s, p)))
        .collect();
    seeds.sort();
    if seeds.is_empty() {
        return Err(CliError::usage(format!("{} holds no seed-<n> runs", path.display())));
    }
    seeds
        .iter()
        .map(|(_, p)| {
            if p.is_dir() {
                load_hier(&p.join("final"))
            } else {
                load_flat(p)
            }
        })
        .collect()
}

fn predict_runnable(r: &Runnable, records: &[TrialRecord]) -> Result<Vec<f64>, CliError> {
    match r {
        Runnable::Hier { params, provider } => {
            let net = HierNet::new(params.config.clone())?;
            let provider = provider_of(provider)?;
            let trials = embed_records(&provider, records)?;
            Ok(tdur_core::train::predict_all(&net, &params.values, &trials)?)
        }
        Runnable::Flat { model, provider } => {
            let provider = provider_of(provider)?;
            flat_set(&provider, records)?
                .iter()
                .map(|e| model.predict(&e.x).map_err(CliError::from))
                .collect()
        }
    }
}

pub fn evaluate(
    test_path: &Path,
    models: &[String],
    runs: &Path,
    reference: Option<&str>,
    out: &Path,
    config: &ConfigArgs,
) -> Result<(), CliError> {
    let cfg = resolve(config)?;
    let records = read_dataset(test_path)?;
    if records.is_empty() {
        return Err(CliError::data("test set is empty"));
    }
    let mut model_runs = Vec::new();
    for spec in models {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => (spec.clone(), runs.join(spec)),
        };
        let predictions = load_runs(&path)?
            .iter()
            .map(|r| predict_runnable(r, &records))
            .collect::<Result<Vec<_>, _>>()?;
        model_runs.push(ModelRuns {
            model: name,
            predictions,
        });
    }
    if let Some(r) = reference {
        if !model_runs.iter().any(|m| m.model == r) {
            return Err(CliError::usage(format!("--ref {r} is not among --models")));
        }
    }
    let ids: Vec<String> = records.iter().map(|r| r.nct_id.clone()).collect();
    let y: Vec<f64> = records.iter().map(|r| r.duration_years).collect();
    let phases: Vec<_> = records.iter().map(|r| r.phase).collect();
    let report = compare(
        &ids,
        &y,
        &phases,
        &model_runs,
        reference,
        cfg.n_boot,
        cfg.bootstrap_seed,
    )?;
    let (json_path, csv_path) = emit_report(&report, out)?;
    write_manifest(&sidecar(out), "evaluate", Some(&cfg), &[json_path, csv_path])?;
    emit(&render_table(&report))
}

fn find<'a>(records: &'a [TrialRecord], nct: &str) -> Result<&'a TrialRecord, CliError> {
    records
        .iter()
        .find(|r| r.nct_id == nct)
        .ok_or_else(|| CliError::data(format!("{nct} is not in the dataset")))
}

pub fn predict(checkpoint: &Path, dataset: &Path, nct: Option<&str>) -> Result<(), CliError> {
    require_dir(checkpoint)?;
    let records = read_dataset(dataset)?;
    let selected: Vec<TrialRecord> = match nct {
        Some(id) => vec![find(&records, id)?.clone()],
        None => records,
    };
    let Runnable::Hier { params, provider } = load_hier(checkpoint)? else {
        unreachable!()
    };
    let net = HierNet::new(params.config.clone())?;
    let provider = provider_of(&provider)?;
    let mut lines = String::new();
    for r in &selected {
        let trial = build_features(&provider, r)?;
        let pred = net.forward(&params.values, &trial, None)?;
        lines.push_str(&json!({ "nct_id": r.nct_id, "pred_years": pred }).to_string());
        lines.push('\n');
    }
    emit(&lines)
}

pub struct ExplainFlags {
    pub unit: UnitArg,
    pub sentence: Option<usize>,
    pub mode: ModeArg,
    pub perms: usize,
    pub seed: u64,
}

pub fn explain(checkpoint: &Path, dataset: &Path, nct: &str, flags: ExplainFlags, out: &Path) -> Result<(), CliError> {
    require_dir(checkpoint)?;
    let records = read_dataset(dataset)?;
    let record = find(&records, nct)?;
    let Runnable::Hier { params, provider } = load_hier(checkpoint)? else {
        unreachable!()
    };
    let net = HierNet::new(params.config.clone())?;
    let provider = provider_of(&provider)?;
    let mode_for = |n: usize| match flags.mode {
        ModeArg::Exact => Mode::Exact,
        ModeArg::Auto if n <= MAX_EXACT_PLAYERS => Mode::Exact,
        _ => Mode::Sampled {
            n_perms: flags.perms,
            seed: flags.seed,
        },
    };
    let sentences = explain_sentences(
        &net,
        &params.values,
        &provider,
        record,
        mode_for(slot_layout(record).len()),
    )?;
    let mut words = Vec::new();
    if flags.unit == UnitArg::Word {
        let criteria: Vec<&str> = record.criteria().collect();
        let index = match flags.sentence {
            Some(i) => i,
            None => {
                // Items follow the slot layout, so position k is criteria index layout[k].1.
                let top = sentences
                    .items
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.value.abs().total_cmp(&b.1.value.abs()).then(b.0.cmp(&a.0)))
                    .ok_or_else(|| CliError::data(format!("{nct} has no criteria sentences")))?
                    .0;
                slot_layout(record)[top].1
            }
        };
        let n_words = criteria
            .get(index)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "--sentence {index} out of range ({} sentences)",
                    criteria.len()
                ))
            })?
            .split_whitespace()
            .count();
        words.push(explain_words(
            &net,
            &params.values,
            &provider,
            record,
            index,
            mode_for(n_words),
        )?);
    }
    let paths = write_rendering(out, &sentences, &words)?;
    write_manifest(&sidecar(out), "explain", None, &paths)?;
    let mut text = tdur_core::explain::render_text(&sentences);
    for w in &words {
        text.push('\n');
        text.push_str(&tdur_core::explain::render_text(w));
    }
    emit(&text)
}
