use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use prospector::bench::{run_scaling, ScalingConfig};
use prospector::eval::{default_thresholds, evaluate_datum, EvalReport};
use prospector::io::{
    self, ledger_to_csv, load_dataset, load_dataset_lenient, load_datum, load_kernel,
    load_map_file, load_quantizer, read_ledger, save_json, save_kernel, save_map, save_quantizer, save_synth,
    write_atomic, LedgerWriter,
};
use prospector::kernel::rollup;
use prospector::pipeline::{Prospector, ProspectorParams};
use prospector::select::{grid_search_with, sequential_rank, ConfigResult, HyperGrid, SearchOptions};
use prospector::synth::{generate_dataset, plant_chain_trigram, SynthSpec, TrigramSpec};
use prospector::viz::SemanticNetwork;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{AttributeArgs, BenchArgs, Context, EvaluateArgs, ExportVizArgs, Failure, FitArgs, RankArgs, SweepArgs, SynthArgs, SynthKind};

fn data_dir(flag: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| Failure::Usage(format!("no {what} directory given (flag or config)")))
}

fn thresholds(ctx: &Context, flag: &Option<Vec<f64>>) -> Result<Vec<f64>, Failure> {
    let values = flag
        .clone()
        .or_else(|| ctx.config.thresholds.clone())
        .unwrap_or_else(default_thresholds);
    if values.is_empty() || values.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Failure::Usage("thresholds must be a nonempty list in [0, 1]".into()));
    }
    Ok(values)
}

fn grid(ctx: &Context) -> HyperGrid {
    let mut grid = ctx.config.grid.clone().unwrap_or_else(|| HyperGrid::standard(ctx.seed));
    grid.seed = ctx.seed;
    grid
}

fn read_spec<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn write_model(dir: &Path, model: &Prospector, params: &ProspectorParams) -> Result<(), Failure> {
    save_quantizer(&dir.join("quantizer.json"), &model.quantizer)?;
    save_kernel(&dir.join("kernel.json"), &model.kernel)?;
    save_json(&dir.join("params.json"), params)?;
    Ok(())
}

fn load_model(dir: &Path) -> Result<Prospector, Failure> {
    let quantizer = load_quantizer(&dir.join("quantizer.json"))?;
    let kernel = load_kernel(&dir.join("kernel.json"))?;
    Ok(Prospector::new(quantizer, kernel)?)
}

fn fit_params(ctx: &Context, args: &FitArgs) -> Result<ProspectorParams, Failure> {
    let mut params = ctx.config.prospector.clone();
    params.seed = ctx.seed;
    if let Some(k) = args.k {
        params.k = k;
    }
    if let Some(r) = args.r {
        params.r = r;
    }
    if let Some(v) = &args.variant {
        params.variant = v.parse().map_err(|e: prospector::Error| Failure::Usage(e.to_string()))?;
    }
    if let Some(tau) = args.tau {
        params.tau = tau;
    }
    if let Some(a) = &args.alpha {
        params.alpha = a.parse().map_err(|e: prospector::Error| Failure::Usage(e.to_string()))?;
    }
    if let Some(lambda) = args.lambda {
        params.lambda = lambda;
    }
    Ok(params)
}

/// Runs the grid, appending to `ledger`; rows already in it are kept.
fn run_sweep(
    ctx: &Context,
    train: &[prospector::graph::LabeledDatum],
    ledger: &Path,
    cache: bool,
) -> Result<Vec<ConfigResult>, Failure> {
    let grid = grid(ctx);
    let configs = grid.configs()?;
    let known: HashMap<String, usize> = configs.iter().enumerate().map(|(i, c)| (c.id(), i)).collect();
    let existing = read_ledger(ledger)?;
    for row in &existing {
        if known.get(&row.id) != Some(&row.index) {
            return Err(Failure::Data(format!(
                "{}: row '{}' does not belong to this grid; rerun with --fresh",
                ledger.display(),
                row.id
            )));
        }
    }
    let options = SearchOptions {
        cache,
        thresholds: thresholds(ctx, &None)?,
        skip: existing.iter().map(|r| r.id.clone()).collect::<HashSet<_>>(),
    };
    if !existing.is_empty() {
        eprintln!("resuming: {} of {} configurations already in the ledger", existing.len(), configs.len());
    }
    let mut writer = LedgerWriter::open(ledger)?;
    let mut write_error = None;
    grid_search_with(train, &grid, &options, |result| {
        if write_error.is_none() {
            if let Err(e) = writer.append(result) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    let mut all = read_ledger(ledger)?;
    all.sort_by_key(|r| r.index);
    Ok(all)
}

fn write_ranking(ctx: &Context, results: &[ConfigResult]) -> Result<ConfigResult, Failure> {
    let ranked = sequential_rank(results);
    write_atomic(&ctx.output.join("ranking.csv"), ledger_to_csv(&ranked)?.as_bytes())?;
    let best = ranked
        .into_iter()
        .find(|r| !r.is_failed())
        .ok_or_else(|| Failure::Data("every grid configuration failed".into()))?;
    save_json(&ctx.output.join("selected.json"), &best)?;
    Ok(best)
}

pub fn fit(ctx: &Context, args: &FitArgs) -> Result<(), Failure> {
    let train_dir = data_dir(&args.train, &ctx.config.train, "training")?;
    let train = load_dataset(&train_dir)?;
    let params = if args.grid {
        let results = run_sweep(ctx, &train, &ctx.output.join("ledger.csv"), true)?;
        let best = write_ranking(ctx, &results)?;
        eprintln!("selected {}", best.id);
        let grid = grid(ctx);
        best.params.to_params(ctx.seed, grid.sample_size)
    } else {
        fit_params(ctx, args)?
    };
    let model = Prospector::fit(&train, &params)?;
    write_model(&ctx.output, &model, &params)?;
    eprintln!("fitted on {} data; artifacts in {}", train.len(), ctx.output.display());
    Ok(())
}

#[derive(Serialize)]
struct FailureRow {
    source: String,
    error: String,
}

#[derive(Serialize)]
struct AttributeSummary {
    written: usize,
    failed: usize,
    failures: Vec<FailureRow>,
}

pub fn attribute(ctx: &Context, args: &AttributeArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let loaded = load_dataset_lenient(&args.data)?;
    if loaded.data.is_empty() && loaded.failures.is_empty() {
        eprintln!("warning: no datum files in {}; nothing to attribute", args.data.display());
        return Ok(());
    }
    let outcomes: Vec<(String, prospector::Result<()>)> = loaded
        .data
        .par_iter()
        .map(|d| {
            let result = if args.raw {
                model.attribute_raw(&d.graph)
            } else {
                model.attribute(&d.graph)
            };
            (d.id().to_string(), result.and_then(|map| save_map(&ctx.output, &map)))
        })
        .collect();
    let mut failures: Vec<FailureRow> = loaded
        .failures
        .into_iter()
        .map(|(path, e)| FailureRow {
            source: path.display().to_string(),
            error: e.to_string(),
        })
        .collect();
    let mut written = 0;
    for (id, outcome) in outcomes {
        match outcome {
            Ok(()) => written += 1,
            Err(e) => failures.push(FailureRow {
                source: id,
                error: e.to_string(),
            }),
        }
    }
    let summary = AttributeSummary {
        written,
        failed: failures.len(),
        failures,
    };
    save_json(&ctx.output.join("attribute_summary.json"), &summary)?;
    eprintln!("wrote {written} maps, {} failures", summary.failed);
    for f in &summary.failures {
        eprintln!("  failed {}: {}", f.source, f.error);
    }
    if summary.failed > 0 {
        return Err(Failure::Data(format!("{} data could not be attributed", summary.failed)));
    }
    Ok(())
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<(), Failure> {
    let thresholds = thresholds(ctx, &args.thresholds)?;
    let data = load_dataset(&args.data)?;
    let rows = data
        .par_iter()
        .map(|d| -> Result<_, Failure> {
            let path = args.maps.join(format!("{}.json", d.id()));
            if !path.exists() {
                return Err(Failure::Data(format!("no prospect map for datum '{}' in {}", d.id(), args.maps.display())));
            }
            let file = load_map_file(&path)?;
            if file.datum_id != d.id() {
                return Err(Failure::Data(format!("{}: map is for datum '{}'", path.display(), file.datum_id)));
            }
            let map = file.into_map(d.graph.adjacency().clone())?;
            Ok(evaluate_datum(&map, d, &thresholds)?)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let report = EvalReport::from_rows(rows, &thresholds)?;
    save_json(&ctx.output.join("report.json"), &report)?;
    write_atomic(&ctx.output.join("evaluation.csv"), report.to_csv()?.as_bytes())?;
    println!(
        "evaluated {} ({} skipped): AUPRC {:.4} +/- {:.4}, AP {:.4} +/- {:.4}",
        report.evaluated, report.skipped, report.auprc.mean, report.auprc.stderr, report.ap.mean, report.ap.stderr
    );
    Ok(())
}

pub fn sweep(ctx: &Context, args: &SweepArgs) -> Result<(), Failure> {
    let train_dir = data_dir(&args.train, &ctx.config.train, "training")?;
    let train = load_dataset(&train_dir)?;
    let ledger = ctx.output.join("ledger.csv");
    if args.fresh && ledger.exists() {
        fs::remove_file(&ledger).map_err(|e| Failure::Data(format!("{}: {e}", ledger.display())))?;
    }
    let results = run_sweep(ctx, &train, &ledger, !args.no_cache)?;
    let failed = results.iter().filter(|r| r.is_failed()).count();
    let best = write_ranking(ctx, &results)?;
    eprintln!("{} configurations, {failed} failed", results.len());
    print_json(&best)
}

pub fn rank(ctx: &Context, args: &RankArgs) -> Result<(), Failure> {
    let ledger = args.ledger.clone().unwrap_or_else(|| ctx.output.join("ledger.csv"));
    if !ledger.exists() {
        return Err(Failure::Data(format!("ledger {} does not exist", ledger.display())));
    }
    let results = read_ledger(&ledger)?;
    let best = write_ranking(ctx, &results)?;
    print_json(&best)
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> Result<(), Failure> {
    let dataset = match args.kind {
        SynthKind::Grid => {
            let mut spec: SynthSpec = match &args.spec {
                Some(path) => read_spec(path)?,
                None => SynthSpec::grid_default(ctx.seed),
            };
            spec.seed = ctx.seed;
            if let Some(p) = args.prevalence {
                spec.prevalence = p;
            }
            if let Some(m) = args.components {
                spec.components = m;
            }
            if let Some(n) = args.n_train {
                spec.n_train = n;
            }
            if let Some(n) = args.n_test {
                spec.n_test = n;
            }
            generate_dataset(&spec)?
        }
        SynthKind::Trigram => {
            let mut spec: TrigramSpec = match &args.spec {
                Some(path) => read_spec(path)?,
                None => TrigramSpec::new(ctx.seed),
            };
            spec.seed = ctx.seed;
            if let Some(n) = args.n_train {
                spec.n_train = n;
            }
            if let Some(n) = args.n_test {
                spec.n_test = n;
            }
            plant_chain_trigram(&spec, args.r)?
        }
    };
    save_synth(&ctx.output, &dataset, args.sidecar)?;
    eprintln!(
        "wrote {} train and {} test data to {}",
        dataset.train.len(),
        dataset.test.len(),
        ctx.output.display()
    );
    Ok(())
}

fn write_network(dir: &Path, stem: &str, net: &SemanticNetwork) -> Result<(), Failure> {
    write_atomic(&dir.join(format!("{stem}.dot")), net.to_dot().as_bytes())?;
    write_atomic(&dir.join(format!("{stem}_heatmap.csv")), net.heatmap_csv().as_bytes())?;
    write_atomic(&dir.join(format!("{stem}_monograms.csv")), net.monogram_csv().as_bytes())?;
    eprintln!("{stem}: {} concepts, {} edges", net.concept_count(), net.edges.len());
    Ok(())
}

pub fn export_viz(ctx: &Context, args: &ExportVizArgs) -> Result<(), Failure> {
    match (&args.kernel, &args.sprite, &args.model) {
        (Some(path), None, None) => {
            let kernel = load_kernel(path)?;
            write_network(&ctx.output, "kernel", &SemanticNetwork::from_kernel(&kernel)?)
        }
        (None, Some(datum_path), Some(model_dir)) => {
            let model = load_model(model_dir)?;
            let datum = load_datum(datum_path)?;
            let sprite = model.sprite(&datum.graph)?;
            let vocab = model.kernel.vocabulary();
            let counts = rollup(&sprite, vocab.radius(), vocab)?;
            let net = SemanticNetwork::from_embedding(datum.id(), vocab, &counts)?;
            write_network(&ctx.output, datum.id(), &net)
        }
        _ => Err(Failure::Usage("give --kernel FILE, or --sprite DATUM with --model DIR".into())),
    }
}

pub fn bench_scaling(ctx: &Context, args: &BenchArgs) -> Result<(), Failure> {
    let mut config = ScalingConfig {
        k: args.k,
        r: args.r,
        min_time_ms: args.min_time_ms,
        seed: ctx.seed,
        ..ScalingConfig::default()
    };
    if let Some(sizes) = &args.sizes {
        config.sizes = sizes.clone();
    }
    let report = run_scaling(&config)?;
    write_atomic(&ctx.output.join("scaling.csv"), report.to_csv().as_bytes())?;
    io::save_json(&ctx.output.join("scaling.json"), &report)?;
    for row in &report.rows {
        println!("T={} quantize={:.6}s k2conv={:.6}s", row.t, row.quantize_secs, row.k2conv_secs);
    }
    for ((q, c), pair) in report.ratios().iter().zip(report.rows.windows(2)) {
        println!("ratio T={}->{}: quantize {q:.2}, k2conv {c:.2}", pair[0].t, pair[1].t);
    }
    Ok(())
}
