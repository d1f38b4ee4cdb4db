use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use elmdoc_core::dataset::{
    load_image, make_partitions, read_feature_data, read_features, scan_corpus, scan_images,
    write_feature_data, FeatureData,
};
use elmdoc_core::elm::{read_model, write_model};
use elmdoc_core::evaluation::{accuracy, emit_report};
use elmdoc_core::featx::{
    extract_with, load_netspec, save_netspec, ConvLayer, LayerSpec, ResizeMode,
};
use elmdoc_core::synthetic::dense_blobs;
use elmdoc_core::{DenseMatrix, LabeledFeatureSet, NetSpec, ReportFormat};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require_path, resolve_elm, resolve_grid, FileConfig};
use crate::{BenchArgs, EvaluateArgs, ExtractArgs, NetKind, NetspecArgs, PredictArgs, TrainArgs};

const IMAGENET_MEAN: [f32; 3] = [104.0, 117.0, 123.0];

fn parse_resize(s: &str) -> Result<ResizeMode> {
    match s.split_once(':') {
        None if s == "squash" => Ok(ResizeMode::Squash),
        None if s == "letterbox" => Ok(ResizeMode::Letterbox(0)),
        Some(("letterbox", fill)) => fill
            .parse()
            .map(ResizeMode::Letterbox)
            .with_context(|| format!("--resize: fill value {fill:?} is not in 0..=255")),
        _ => bail!("--resize: expected squash, letterbox or letterbox:FILL, got {s:?}"),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

pub fn extract(file: &FileConfig, a: ExtractArgs) -> Result<()> {
    let corpus = require_path(a.corpus, &file.paths.corpus, "corpus")?;
    let out = require_path(a.out, &file.paths.output, "out")?;
    let mode = parse_resize(&a.resize)?;
    let net = if a.alexnet_stub {
        NetSpec::alexnet_stub(0, IMAGENET_MEAN)
    } else {
        let path = require_path(a.netspec, &file.paths.netspec, "netspec")?;
        load_netspec(&path).context("cannot load network")?
    };

    let (paths, labels, class_names) = if a.unlabeled {
        let (paths, report) = scan_images(&corpus)?;
        report
            .warnings
            .iter()
            .for_each(|w| eprintln!("warning: {w}"));
        (paths, None, Vec::new())
    } else {
        let (corpus, report) = scan_corpus(&corpus)?;
        report
            .warnings
            .iter()
            .for_each(|w| eprintln!("warning: {w}"));
        let labels = corpus.labels();
        let paths = corpus.items().iter().map(|i| i.path.clone()).collect();
        (paths, Some(labels), corpus.class_names().to_vec())
    };
    eprintln!(
        "extracting {} images through {} layers ({:?} -> {} features)",
        paths.len(),
        net.layers().len(),
        net.input_shape(),
        net.feature_dim()
    );

    let start = Instant::now();
    let results: Vec<Result<Vec<f32>, String>> = paths
        .par_iter()
        .map(|p| {
            let image = load_image(p).map_err(|e| e.to_string())?;
            extract_with(&image, &net, mode).map_err(|e| format!("{}: {e}", p.display()))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();

    let d = net.feature_dim();
    let mut values = Vec::with_capacity(paths.len() * d);
    let mut kept_labels = Vec::new();
    let mut kept_paths = Vec::new();
    let mut skipped = 0usize;
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(v) => {
                values.extend(v);
                kept_paths.push(&paths[i]);
                if let Some(l) = &labels {
                    kept_labels.push(l[i]);
                }
            }
            Err(e) => {
                eprintln!("warning: skipped {e}");
                skipped += 1;
            }
        }
    }
    let n = kept_paths.len();
    ensure!(n > 0, "no image in {} could be processed", corpus.display());
    let x = DenseMatrix::new(n, d, values)?;
    let data = match labels {
        Some(_) => FeatureData::Labeled(LabeledFeatureSet::new(x, kept_labels, class_names)?),
        None => FeatureData::Unlabeled(x),
    };
    write_feature_data(&out, &data)?;
    let listing: String = kept_paths
        .iter()
        .map(|p| format!("{}\n", p.display()))
        .collect();
    write_output(&with_suffix(&out, ".files.txt"), listing.as_bytes())?;
    eprintln!(
        "extracted {n} images in {secs:.2}s ({:.1} images/s, {:.2} ms per image); {skipped} skipped",
        n as f64 / secs,
        secs * 1e3 / n as f64
    );
    eprintln!("wrote {}", out.display());
    Ok(())
}

pub fn train(file: &FileConfig, a: TrainArgs) -> Result<()> {
    let cfg = resolve_elm(&file.elm, &a.elm.overrides())?;
    let features = require_path(a.features, &file.paths.features, "features")?;
    let model_path = require_path(a.model, &file.paths.output, "model")?;
    let data = read_features(&features)?;
    let start = Instant::now();
    let model = elmdoc_core::train(&data, &cfg)
        .with_context(|| format!("training on {} failed", features.display()))?;
    let secs = start.elapsed().as_secs_f64();
    write_model(&model_path, &model)?;
    eprintln!(
        "trained N={} on {} samples x {} features in {:.3}s ({:.3} ms per image)",
        cfg.hidden,
        data.len(),
        data.dim(),
        secs,
        secs * 1e3 / data.len() as f64
    );
    eprintln!("wrote {}", model_path.display());
    Ok(())
}

pub fn predict(file: &FileConfig, a: PredictArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let features = require_path(a.features, &file.paths.features, "features")?;
    let data = read_feature_data(&features)?;
    let start = Instant::now();
    let scores = model.predict_scores(data.features()).with_context(|| {
        format!(
            "cannot apply {} to {}",
            a.model.display(),
            features.display()
        )
    })?;
    let secs = start.elapsed().as_secs_f64();
    let names = model.class_names();
    let truth = data.labeled();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index", "predicted", "score"];
    if truth.is_some() {
        header.push("truth");
    }
    w.write_record(&header)?;
    let mut hits = 0usize;
    for r in 0..scores.rows() {
        let row = scores.row(r);
        let best = elmdoc_core::elm::argmax(row);
        let mut record = vec![r.to_string(), names[best].clone(), row[best].to_string()];
        if let Some(set) = truth {
            let t = &set.class_names()[set.labels()[r]];
            hits += usize::from(*t == names[best]);
            record.push(t.clone());
        }
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    match &a.out {
        Some(path) => write_output(path, &bytes)?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    let n = scores.rows();
    eprintln!(
        "classified {n} samples in {:.3}s ({:.3} ms per image)",
        secs,
        secs * 1e3 / n as f64
    );
    if truth.is_some() {
        eprintln!("accuracy: {:.4} ({hits}/{n})", hits as f64 / n as f64);
    }
    Ok(())
}

pub fn evaluate(file: &FileConfig, a: EvaluateArgs) -> Result<()> {
    let cfg = resolve_elm(&file.elm, &a.elm.overrides())?;
    let grid = resolve_grid(&file.grid, &a.grid.overrides(), cfg.seed)?;
    let features = require_path(a.features, &file.paths.features, "features")?;
    let out = a.out.or_else(|| file.paths.output.clone());
    let data = read_features(&features)?;
    let plan = make_partitions(
        data.labels(),
        data.class_names(),
        &grid.sizes,
        grid.reps,
        grid.seed,
    )?;
    eprintln!(
        "evaluating {} cells x {} ELMs (N={}, C={}, {}) on {} samples of {} classes",
        plan.cells().len(),
        grid.elm_repeats,
        cfg.hidden,
        cfg.c,
        cfg.activation,
        data.len(),
        data.num_classes()
    );
    let start = Instant::now();
    let report = elmdoc_core::evaluation::run_grid(&data, &plan, &cfg, grid.elm_repeats)?;
    eprintln!("grid finished in {:.2}s", start.elapsed().as_secs_f64());
    eprintln!(
        "{:>6} {:>8} {:>8} {:>8}",
        "size", "mean", "median", "stddev"
    );
    for s in &report.sizes {
        eprintln!(
            "{:>6} {:>8.4} {:>8.4} {:>8.4}",
            s.size, s.mean, s.median, s.stddev
        );
    }

    let format = ReportFormat::from(a.format);
    std::io::stdout().write_all(&emit_report(&report, format))?;
    if let Some(prefix) = out {
        for f in [ReportFormat::Csv, ReportFormat::Json] {
            write_output(
                &with_suffix(&prefix, &format!(".{f}")),
                &emit_report(&report, f),
            )?;
        }
        let largest = *grid.sizes.iter().max().expect("sizes are non-empty");
        let pooled = report
            .confusion_for_size(largest)
            .expect("every size has cells");
        let text = format!(
            "# size {largest} per class, pooled over {} partitions x {} ELMs; rows are true classes\n# classes: {}\n{}",
            grid.reps,
            grid.elm_repeats,
            data.class_names().join(" "),
            pooled.render()
        );
        write_output(&with_suffix(&prefix, ".confusion.txt"), text.as_bytes())?;
        eprintln!("wrote {}.{{csv,json,confusion.txt}}", prefix.display());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchResult {
    n_train: usize,
    n_test: usize,
    dim: usize,
    hidden: usize,
    train_ms: f64,
    train_ms_per_image: f64,
    predict_ms: f64,
    predict_ms_per_image: f64,
    accuracy: f64,
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let parsed = s
        .split_once(['x', 'X'])
        .and_then(|(n, d)| Some((n.trim().parse().ok()?, d.trim().parse().ok()?)));
    match parsed {
        Some((n, d)) if n > 0 && d > 0 => Ok((n, d)),
        _ => bail!("--synthetic: expected NxD with positive N and D, got {s:?}"),
    }
}

pub fn bench(file: &FileConfig, a: BenchArgs) -> Result<()> {
    let cfg = resolve_elm(&file.elm, &a.elm.overrides())?;
    let (data, per_class) = match (
        &a.synthetic,
        a.features.clone().or_else(|| file.paths.features.clone()),
    ) {
        (Some(shape), _) => {
            let (n, d) = parse_shape(shape)?;
            ensure!(a.classes >= 1, "--classes must be at least 1");
            let train = a.train_per_class.unwrap_or(n / a.classes);
            ensure!(
                train >= 1,
                "--synthetic: N must be at least the class count"
            );
            let test = (train / 4).max(1);
            (
                dense_blobs(a.classes, d, train + test, 1.0, cfg.seed),
                train,
            )
        }
        (None, Some(path)) => {
            let data = read_features(&path)?;
            let smallest = (0..data.num_classes())
                .map(|c| data.labels().iter().filter(|&&y| y == c).count())
                .min()
                .unwrap_or(0);
            let train = a
                .train_per_class
                .unwrap_or_else(|| 100.min(smallest.saturating_sub(1)).max(1));
            (data, train)
        }
        (None, None) => bail!("bench needs --features or --synthetic"),
    };
    let plan = make_partitions(data.labels(), data.class_names(), &[per_class], 1, cfg.seed)?;
    let cell = &plan.cells()[0];
    ensure!(
        !cell.test.is_empty(),
        "--train-per-class {per_class} leaves no test images"
    );
    let train_set = data.subset(&cell.train);
    let test_set = data.subset(&cell.test);

    let start = Instant::now();
    let model = elmdoc_core::train(&train_set, &cfg)?;
    let train_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let pred = model.predict(test_set.features())?;
    let predict_s = start.elapsed().as_secs_f64();

    let result = BenchResult {
        n_train: train_set.len(),
        n_test: test_set.len(),
        dim: data.dim(),
        hidden: cfg.hidden,
        train_ms: train_s * 1e3,
        train_ms_per_image: train_s * 1e3 / train_set.len() as f64,
        predict_ms: predict_s * 1e3,
        predict_ms_per_image: predict_s * 1e3 / test_set.len() as f64,
        accuracy: accuracy(&pred, test_set.labels())?,
    };
    eprintln!(
        "train {:.1} ms ({:.3} ms per image), predict {:.1} ms ({:.3} ms per image), accuracy {:.4}",
        result.train_ms, result.train_ms_per_image, result.predict_ms, result.predict_ms_per_image, result.accuracy
    );
    let mut stdout = std::io::stdout();
    match ReportFormat::from(a.format) {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut stdout, &result)?;
            writeln!(stdout)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(stdout);
            w.serialize(&result)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn netspec(a: NetspecArgs) -> Result<()> {
    let net = match a.kind {
        NetKind::AlexnetStub => NetSpec::alexnet_stub(a.seed, IMAGENET_MEAN),
        NetKind::Identity => {
            ensure!(a.size >= 1, "--size must be at least 1");
            let mut weights = vec![0.0f32; 9];
            for c in 0..3 {
                weights[c * 3 + c] = 1.0;
            }
            let conv = ConvLayer::new(3, 3, 1, 1, 0, 1, weights, vec![0.0; 3])?;
            NetSpec::new(
                (3, a.size, a.size),
                vec![LayerSpec::Conv(conv)],
                vec![0.0; 3],
                None,
            )?
        }
    };
    save_netspec(&a.out, &net)?;
    eprintln!(
        "wrote {} ({:?} -> {} features)",
        a.out.display(),
        net.input_shape(),
        net.feature_dim()
    );
    Ok(())
}
