//! Subcommand implementations.

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use auscult_core::features::{
    load_heatmap, save_heatmap, standardize, MfccConfig, MfccExtractor, MfccHeatMap,
};
use auscult_core::nn::{load_checkpoint, save_checkpoint, Architecture};
use auscult_core::pcg_io::{
    load_wav, resample, DatasetManifest, Label, PcgRecording, Quality, CANONICAL_SAMPLE_RATE,
};
use auscult_core::scoring::{
    challenge_score, format_report, join_predictions, parse_predictions, tally, PredictedClass,
    ScoreReport,
};
use auscult_core::segmentation::{
    compute_envelope_features, extract_segments, hsmm_decode, BandPowerEmissions, DurationPrior,
    EmissionModel, StateSequence, FRAME_RATE,
};
use auscult_core::trainer::{
    predict_recording, split_dataset, train, Hyperparams, PredictConfig, TRAIN_LOG_HEADER,
};

use crate::config::{require, resolve, ConfigMap};
use crate::{CliError, Command, DataArgs, HyperArgs, MfccArgs};

fn at<E: std::fmt::Display>(path: &Path, e: E) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { data, out } => ingest(data, out),
        Command::Segment { data, out } => segment(data, out),
        Command::Featurize { data, mfcc, out } => featurize(data, mfcc, out),
        Command::Render { input, out, scale, config } => render(input, out, scale, config),
        Command::Train { data, mfcc, hyper, out } => run_train(data, mfcc, hyper, out),
        Command::Predict { data, mfcc, checkpoint, out } => {
            predict(data, mfcc, checkpoint, out)
        }
        Command::Evaluate { data, mfcc, checkpoint, out } => {
            evaluate(data, mfcc, checkpoint, out)
        }
        Command::Score { se, sp, input, manifest, config } => {
            score(se, sp, input, manifest, config)
        }
    }
}

/// Resolves the manifest/data-dir pair every dataset command needs.
fn dataset_paths(args: &DataArgs, cfg: &ConfigMap) -> Result<(PathBuf, PathBuf), CliError> {
    let manifest = require(args.manifest.clone(), cfg, "manifest")?;
    let data_dir = require(args.data_dir.clone(), cfg, "data_dir")?;
    Ok((manifest, data_dir))
}

/// Loads every manifest entry's WAV, attaching label, quality, and subject.
fn load_dataset(
    manifest_path: &Path,
    data_dir: &Path,
) -> Result<(DatasetManifest, Vec<PcgRecording>), CliError> {
    let manifest = DatasetManifest::load(manifest_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.entries.is_empty() {
        return Err(CliError::Data(format!(
            "{}: manifest lists no recordings",
            manifest_path.display()
        )));
    }
    let mut recordings = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = data_dir.join(&entry.path);
        let mut rec =
            load_wav(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        rec.id = entry.record_id.clone();
        rec.subject_id = entry.subject_id.clone();
        rec.label = entry.label;
        rec.quality = entry.quality;
        recordings.push(rec);
    }
    Ok((manifest, recordings))
}

/// Brings a recording to the canonical 2000 Hz working rate.
fn canonicalize(rec: PcgRecording) -> Result<PcgRecording, CliError> {
    if rec.sample_rate == CANONICAL_SAMPLE_RATE {
        return Ok(rec);
    }
    let samples = resample(&rec.samples, rec.sample_rate, CANONICAL_SAMPLE_RATE)
        .map_err(|e| CliError::Data(format!("{}: {e}", rec.id)))?;
    Ok(PcgRecording { samples, sample_rate: CANONICAL_SAMPLE_RATE, ..rec })
}

/// Envelope features, self-calibrated emissions, duration-constrained decode.
fn decode_states(rec: &PcgRecording) -> Result<StateSequence, CliError> {
    let features = compute_envelope_features(rec, FRAME_RATE)
        .map_err(|e| CliError::Data(format!("{}: {e}", rec.id)))?;
    let emissions = BandPowerEmissions::fit(&features);
    let rows: Vec<[f64; 4]> = features.iter().map(|f| emissions.likelihoods(f)).collect();
    hsmm_decode(&rows, &DurationPrior::default(), FRAME_RATE)
        .map_err(|e| CliError::Data(format!("{}: {e}", rec.id)))
}

fn heatmaps_for(
    rec: &PcgRecording,
    extractor: &MfccExtractor,
    segment_seconds: f64,
) -> Result<Vec<MfccHeatMap>, CliError> {
    let seq = decode_states(rec)?;
    let segments = extract_segments(rec, &seq, segment_seconds)
        .map_err(|e| CliError::Data(format!("{}: {e}", rec.id)))?;
    Ok(segments.iter().map(|s| extractor.heatmap(s)).collect())
}

fn resolve_mfcc(args: &MfccArgs, cfg: &ConfigMap) -> Result<(MfccConfig, f64), CliError> {
    let mut mfcc = MfccConfig::default();
    if let Some(v) = resolve(args.window_length, cfg, "window_length")? {
        mfcc.window_length = v;
    }
    if let Some(v) = resolve(args.step, cfg, "step")? {
        mfcc.step = v;
    }
    if let Some(v) = resolve(args.dft_length, cfg, "dft_length")? {
        mfcc.dft_length = Some(v);
    }
    if let Some(v) = resolve(args.filter_count, cfg, "filter_count")? {
        mfcc.filter_count = v;
    }
    if let Some(v) = resolve(args.kept_coefficients, cfg, "kept_coefficients")? {
        mfcc.kept_coefficients = v;
    }
    if let Some(v) = resolve(args.freq_low, cfg, "freq_low")? {
        mfcc.freq_range.0 = v;
    }
    if let Some(v) = resolve(args.freq_high, cfg, "freq_high")? {
        mfcc.freq_range.1 = v;
    }
    let segment_seconds = resolve(args.segment_seconds, cfg, "segment_seconds")?.unwrap_or(3.0);
    if !(segment_seconds > 0.0) {
        return Err(CliError::Usage("--segment-seconds must be positive".into()));
    }
    mfcc.validate(f64::from(CANONICAL_SAMPLE_RATE))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((mfcc, segment_seconds))
}

fn resolve_hyper(args: &HyperArgs, cfg: &ConfigMap) -> Result<Hyperparams, CliError> {
    let mut hyper = Hyperparams::default();
    if let Some(v) = resolve(args.learning_rate, cfg, "learning_rate")? {
        hyper.learning_rate = v;
    }
    if let Some(v) = resolve(args.lambda, cfg, "lambda")? {
        hyper.lambda = v;
    }
    if let Some(v) = resolve(args.keep_prob, cfg, "keep_prob")? {
        hyper.keep_prob = v;
    }
    if let Some(v) = resolve(args.batch_size, cfg, "batch_size")? {
        hyper.batch_size = v;
    }
    if let Some(v) = resolve(args.max_epochs, cfg, "max_epochs")? {
        hyper.max_epochs = v;
    }
    if let Some(v) = resolve(args.patience, cfg, "patience")? {
        hyper.patience = v;
    }
    if let Some(v) = resolve(args.seed, cfg, "seed")? {
        hyper.seed = v;
    }
    hyper.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(hyper)
}

/// stdout, or a file when a path is given.
fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        None => Ok(Box::new(std::io::stdout())),
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(Box::new(file))
        }
    }
}

fn ingest(data: DataArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = ConfigMap::load(data.config.as_deref())?;
    let (manifest_path, data_dir) = dataset_paths(&data, &cfg)?;
    let manifest = DatasetManifest::load(&manifest_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;

    let mut recordings = Vec::new();
    let mut failures = Vec::new();
    for entry in &manifest.entries {
        let path = data_dir.join(&entry.path);
        match load_wav(&path) {
            Ok(rec) => recordings.push((entry, rec)),
            Err(e) => failures.push(format!("{}: {e}", path.display())),
        }
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("{f}");
        }
        return Err(CliError::Data(format!(
            "{} of {} recordings failed validation",
            failures.len(),
            manifest.entries.len()
        )));
    }

    let mut rates: Vec<(u32, usize)> = Vec::new();
    for (_, rec) in &recordings {
        match rates.iter_mut().find(|(r, _)| *r == rec.sample_rate) {
            Some((_, n)) => *n += 1,
            None => rates.push((rec.sample_rate, 1)),
        }
    }
    rates.sort_unstable();
    let durations: Vec<f64> = recordings.iter().map(|(_, r)| r.duration_seconds()).collect();
    let total: f64 = durations.iter().sum();
    let min = durations.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let max = durations.iter().fold(0.0f64, |a, &b| a.max(b));
    let subjects: HashSet<&str> =
        recordings.iter().map(|(e, _)| e.subject_id.as_str()).collect();

    let mut summary = String::new();
    summary.push_str(&format!("records {}\n", recordings.len()));
    summary.push_str(&format!("subjects {}\n", subjects.len()));
    let label_count =
        |l: Label| recordings.iter().filter(|(e, _)| e.label == l).count();
    let quality_count =
        |q: Quality| recordings.iter().filter(|(e, _)| e.quality == q).count();
    summary.push_str(&format!(
        "labels normal {} abnormal {}\n",
        label_count(Label::Normal),
        label_count(Label::Abnormal),
    ));
    summary.push_str(&format!(
        "quality good {} poor {} unknown {}\n",
        quality_count(Quality::Good),
        quality_count(Quality::Poor),
        quality_count(Quality::Unknown),
    ));
    let rate_list: Vec<String> =
        rates.iter().map(|(r, n)| format!("{r} Hz x{n}")).collect();
    summary.push_str(&format!("sample rates {}\n", rate_list.join(", ")));
    summary.push_str(&format!(
        "duration total {total:.1} s, min {min:.1} s, max {max:.1} s\n"
    ));

    print!("{summary}");
    if let Some(path) = out {
        std::fs::write(&path, summary).map_err(|e| at(&path, e))?;
    }
    Ok(())
}

fn segment(data: DataArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = ConfigMap::load(data.config.as_deref())?;
    let (manifest_path, data_dir) = dataset_paths(&data, &cfg)?;
    let (_, recordings) = load_dataset(&manifest_path, &data_dir)?;

    let mut writer = csv::Writer::from_writer(open_out(out.as_deref())?);
    let fail = |e: csv::Error| CliError::Data(format!("writing onsets: {e}"));
    writer.write_record(["record_id", "onset_sample"]).map_err(fail)?;
    for rec in recordings {
        let rec = canonicalize(rec)?;
        let seq = decode_states(&rec)?;
        for onset in seq.s1_onset_samples(rec.sample_rate) {
            let onset = onset.to_string();
            writer.write_record([rec.id.as_str(), onset.as_str()]).map_err(fail)?;
        }
    }
    writer.flush().map_err(|e| CliError::Data(format!("writing onsets: {e}")))?;
    Ok(())
}

/// Record ids become file names, so path tricks are data errors.
fn check_id_for_path(id: &str) -> Result<(), CliError> {
    if id.contains(['/', '\\']) || id.contains("..") {
        return Err(CliError::Data(format!("record_id {id:?} is not usable as a file name")));
    }
    Ok(())
}

fn featurize(data: DataArgs, mfcc: MfccArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = ConfigMap::load(data.config.as_deref())?;
    let (manifest_path, data_dir) = dataset_paths(&data, &cfg)?;
    let out_dir: PathBuf = require(out, &cfg, "out")?;
    let (mfcc, segment_seconds) = resolve_mfcc(&mfcc, &cfg)?;
    let extractor = MfccExtractor::new(mfcc, f64::from(CANONICAL_SAMPLE_RATE))
        .map_err(|e| CliError::Usage(e.to_string()))?;

    std::fs::create_dir_all(&out_dir).map_err(|e| at(&out_dir, e))?;
    let (_, recordings) = load_dataset(&manifest_path, &data_dir)?;

    let mut maps_written = 0usize;
    let n_recordings = recordings.len();
    for rec in recordings {
        check_id_for_path(&rec.id)?;
        let rec = canonicalize(rec)?;
        for map in heatmaps_for(&rec, &extractor, segment_seconds)? {
            let name = format!("{}_{:08}.mfhm", map.source_id, map.start_sample);
            let path = out_dir.join(name);
            save_heatmap(&path, &map).map_err(|e| at(&path, e))?;
            maps_written += 1;
        }
    }
    println!("wrote {maps_written} heat maps for {n_recordings} recordings to {}", out_dir.display());
    Ok(())
}

/// Thermal ramp from black through red and yellow to white.
fn ramp(t: f64) -> [u8; 3] {
    let channel = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    let t = t.clamp(0.0, 1.0);
    [channel(t * 3.0), channel(t * 3.0 - 1.0), channel(t * 3.0 - 2.0)]
}

/// Binary PPM of a heat map: min-max normalized colors, coefficient row 0
/// at the bottom, `scale`-fold nearest-neighbor upscaling.
fn heatmap_to_ppm(map: &MfccHeatMap, scale: u32) -> Vec<u8> {
    let scale = scale as usize;
    let (w, h) = (map.cols * scale, map.rows * scale);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &map.values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for y in 0..h {
        let row = map.rows - 1 - y / scale;
        for x in 0..w {
            out.extend_from_slice(&ramp((map.at(row, x / scale) - lo) / span));
        }
    }
    out
}

fn render(
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    scale: Option<u32>,
    config: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = ConfigMap::load(config.as_deref())?;
    let input: PathBuf = require(input, &cfg, "input")?;
    let out: PathBuf = require(out, &cfg, "out")?;
    let scale = resolve(scale, &cfg, "scale")?.unwrap_or(1);
    if scale == 0 {
        return Err(CliError::Usage("--scale must be at least 1".into()));
    }
    let map = load_heatmap(&input).map_err(|e| at(&input, e))?;
    std::fs::write(&out, heatmap_to_ppm(&map, scale))
        .map_err(|e| at(&out, e))?;
    Ok(())
}

fn run_train(
    data: DataArgs,
    mfcc: MfccArgs,
    hyper: HyperArgs,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = ConfigMap::load(data.config.as_deref())?;
    let (manifest_path, data_dir) = dataset_paths(&data, &cfg)?;
    let out_dir: PathBuf = require(out, &cfg, "out")?;
    let (mfcc, segment_seconds) = resolve_mfcc(&mfcc, &cfg)?;
    let hyper = resolve_hyper(&hyper, &cfg)?;
    let extractor = MfccExtractor::new(mfcc.clone(), f64::from(CANONICAL_SAMPLE_RATE))
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let (_, recordings) = load_dataset(&manifest_path, &data_dir)?;
    let recordings: Vec<PcgRecording> =
        recordings.into_iter().map(canonicalize).collect::<Result<_, _>>()?;

    // subject-disjoint 80/20 split, derived from the training seed
    let plan = split_dataset(
        recordings.iter().map(|r| (r.id.as_str(), r.subject_id.as_str())),
        [0.8, 0.2, 0.0],
        hyper.seed,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;
    let train_ids: HashSet<&str> = plan.train.iter().map(String::as_str).collect();
    let val_ids: HashSet<&str> = plan.validation.iter().map(String::as_str).collect();

    let mut train_maps = Vec::new();
    let mut val_maps = Vec::new();
    let mut skipped = 0usize;
    for rec in &recordings {
        let bucket: &mut Vec<MfccHeatMap> = if train_ids.contains(rec.id.as_str()) {
            &mut train_maps
        } else if val_ids.contains(rec.id.as_str()) {
            &mut val_maps
        } else {
            continue;
        };
        match heatmaps_for(rec, &extractor, segment_seconds) {
            Ok(maps) => bucket.extend(maps),
            Err(CliError::Data(msg)) => {
                // a single undecodable recording should not kill a long run
                eprintln!("warning: skipping {msg}");
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    if skipped > 0 {
        eprintln!("warning: {skipped} recordings skipped");
    }
    let Some(first) = train_maps.first() else {
        return Err(CliError::Data("no training maps survived featurization".into()));
    };

    let arch = Architecture { input: (1, first.rows, first.cols), ..Architecture::standard() };
    let (train_maps, stats) = standardize(&train_maps, None);
    let (val_maps, _) = standardize(&val_maps, Some(&stats));

    let outcome = train::<f32>(&train_maps, &val_maps, &arch, hyper.clone(), stats)
        .map_err(|e| CliError::Data(e.to_string()))?;

    std::fs::create_dir_all(&out_dir).map_err(|e| at(&out_dir, e))?;
    let best_path = out_dir.join("best.ckpt");
    let last_path = out_dir.join("last.ckpt");
    save_checkpoint(&best_path, &outcome.best).map_err(|e| at(&best_path, e))?;
    save_checkpoint(&last_path, &outcome.last).map_err(|e| at(&last_path, e))?;

    let log_path = out_dir.join("train_log.csv");
    let mut log = String::from(TRAIN_LOG_HEADER);
    log.push('\n');
    for row in &outcome.log {
        log.push_str(&format!(
            "{},{},{},{},{}\n",
            row.epoch, row.train_loss, row.val_se, row.val_sp, row.val_score
        ));
    }
    std::fs::write(&log_path, log).map_err(|e| at(&log_path, e))?;

    // replayable record of the resolved settings, in config-file syntax
    let mut resolved = String::new();
    resolved.push_str(&format!("manifest={}\n", manifest_path.display()));
    resolved.push_str(&format!("data_dir={}\n", data_dir.display()));
    resolved.push_str(&format!("out={}\n", out_dir.display()));
    resolved.push_str(&format!("window_length={}\n", mfcc.window_length));
    resolved.push_str(&format!("step={}\n", mfcc.step));
    if let Some(k) = mfcc.dft_length {
        resolved.push_str(&format!("dft_length={k}\n"));
    }
    resolved.push_str(&format!("filter_count={}\n", mfcc.filter_count));
    resolved.push_str(&format!("kept_coefficients={}\n", mfcc.kept_coefficients));
    resolved.push_str(&format!("freq_low={}\n", mfcc.freq_range.0));
    resolved.push_str(&format!("freq_high={}\n", mfcc.freq_range.1));
    resolved.push_str(&format!("segment_seconds={segment_seconds}\n"));
    resolved.push_str(&format!("learning_rate={}\n", hyper.learning_rate));
    resolved.push_str(&format!("lambda={}\n", hyper.lambda));
    resolved.push_str(&format!("keep_prob={}\n", hyper.keep_prob));
    resolved.push_str(&format!("batch_size={}\n", hyper.batch_size));
    resolved.push_str(&format!("max_epochs={}\n", hyper.max_epochs));
    resolved.push_str(&format!("patience={}\n", hyper.patience));
    resolved.push_str(&format!("seed={}\n", hyper.seed));
    let cfg_path = out_dir.join("run_config.txt");
    std::fs::write(&cfg_path, resolved).map_err(|e| at(&cfg_path, e))?;

    let best = outcome
        .log
        .iter()
        .max_by(|a, b| a.val_score.total_cmp(&b.val_score).then(b.epoch.cmp(&a.epoch)))
        .expect("training always logs at least one epoch");
    println!(
        "trained {} epochs on {} maps ({} validation); best epoch {} val_score {:.4}; artifacts in {}",
        outcome.log.len(),
        train_maps.len(),
        val_maps.len(),
        best.epoch,
        best.val_score,
        out_dir.display()
    );
    Ok(())
}

/// Shared by predict and evaluate so their CSVs are identical by
/// construction.
fn predict_rows(
    data: &DataArgs,
    mfcc: &MfccArgs,
    checkpoint: Option<PathBuf>,
    cfg: &ConfigMap,
) -> Result<Vec<(String, PredictedClass)>, CliError> {
    let (manifest_path, data_dir) = dataset_paths(data, cfg)?;
    let checkpoint: PathBuf = require(checkpoint, cfg, "checkpoint")?;
    let (mfcc, segment_seconds) = resolve_mfcc(mfcc, cfg)?;
    let params =
        load_checkpoint(&checkpoint).map_err(|e| at(&checkpoint, e))?;
    let predict_cfg =
        PredictConfig { prior: DurationPrior::default(), mfcc, segment_seconds };

    let (_, recordings) = load_dataset(&manifest_path, &data_dir)?;
    recordings
        .iter()
        .map(|rec| {
            let prediction = predict_recording(rec, &params, &predict_cfg)
                .map_err(|e| CliError::Data(format!("{}: {e}", rec.id)))?;
            let class = PredictedClass::from_label(prediction.label)
                .ok_or_else(|| CliError::Data(format!("{}: prediction had no label", rec.id)))?;
            Ok((rec.id.clone(), class))
        })
        .collect()
}

fn write_predictions(
    rows: &[(String, PredictedClass)],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_writer(open_out(out)?);
    let fail = |e: csv::Error| CliError::Data(format!("writing predictions: {e}"));
    writer.write_record(["record_id", "predicted"]).map_err(fail)?;
    for (id, class) in rows {
        writer.write_record([id.as_str(), class.as_str()]).map_err(fail)?;
    }
    writer.flush().map_err(|e| CliError::Data(format!("writing predictions: {e}")))?;
    Ok(())
}

fn predict(
    data: DataArgs,
    mfcc: MfccArgs,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = ConfigMap::load(data.config.as_deref())?;
    let rows = predict_rows(&data, &mfcc, checkpoint, &cfg)?;
    write_predictions(&rows, out.as_deref())
}

/// Truth triples in manifest order, for joining with predictions.
fn manifest_truth(manifest: &DatasetManifest) -> Vec<(String, Label, Quality)> {
    manifest
        .entries
        .iter()
        .map(|e| (e.record_id.clone(), e.label, e.quality))
        .collect()
}

fn score_predictions(
    manifest: &DatasetManifest,
    rows: &[(String, PredictedClass)],
) -> Result<ScoreReport, CliError> {
    let joined = join_predictions(&manifest_truth(manifest), rows)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let (counts, weights) = tally(&joined).map_err(|e| CliError::Data(e.to_string()))?;
    challenge_score(&counts, &weights).map_err(|e| CliError::Data(e.to_string()))
}

fn evaluate(
    data: DataArgs,
    mfcc: MfccArgs,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = ConfigMap::load(data.config.as_deref())?;
    let rows = predict_rows(&data, &mfcc, checkpoint, &cfg)?;
    if let Some(path) = &out {
        write_predictions(&rows, Some(path))?;
    }
    let manifest_path: PathBuf = require(data.manifest, &cfg, "manifest")?;
    let manifest = DatasetManifest::load(&manifest_path)
        .map_err(|e| at(&manifest_path, e))?;
    let report = score_predictions(&manifest, &rows)?;
    println!("{}", format_report(&report));
    Ok(())
}

fn score(
    se: Option<f64>,
    sp: Option<f64>,
    input: Option<PathBuf>,
    manifest: Option<PathBuf>,
    config: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = ConfigMap::load(config.as_deref())?;
    let se = resolve(se, &cfg, "se")?;
    let sp = resolve(sp, &cfg, "sp")?;
    let input: Option<PathBuf> = resolve(input, &cfg, "input")?;

    match (se, sp, input) {
        (Some(se), Some(sp), None) => {
            if !(0.0..=1.0).contains(&se) || !(0.0..=1.0).contains(&sp) {
                return Err(CliError::Usage("--se and --sp must lie in [0,1]".into()));
            }
            println!("{}", format_report(&ScoreReport::from_se_sp(se, sp)));
            Ok(())
        }
        (None, None, Some(input)) => {
            let manifest_path: PathBuf = require(manifest, &cfg, "manifest")?;
            let manifest = DatasetManifest::load(&manifest_path)
                .map_err(|e| at(&manifest_path, e))?;
            let bytes =
                std::fs::read(&input).map_err(|e| at(&input, e))?;
            let rows = parse_predictions(&bytes)
                .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
            let report = score_predictions(&manifest, &rows)?;
            println!("{}", format_report(&report));
            Ok(())
        }
        (Some(_), None, _) | (None, Some(_), _) => {
            Err(CliError::Usage("--se and --sp must be given together".into()))
        }
        (Some(_), Some(_), Some(_)) => Err(CliError::Usage(
            "pass either --se/--sp or --input, not both".into(),
        )),
        (None, None, None) => Err(CliError::Usage(
            "score needs --se/--sp values or an --input predictions CSV".into(),
        )),
    }
}
