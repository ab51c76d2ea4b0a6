use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sdi_core::bscan_io::{format_decimal, load_bscan, save_bscan};
use sdi_core::moisture::{
    build_model, mix_seed, rotating_evaluation, temporal_csv, temporal_series, Algorithm, MoistureModel,
    Normalization,
};
use sdi_core::pipeline::{
    estimate_scan, non_monotone_bands, preprocess as preprocess_scan, samples_csv, time_zero_from,
    train_and_evaluate, BandProcessor, FsvScaling, ProcessingConfig,
};
use sdi_core::scenario::{write_scenario, Manifest, Scenario};
use sdi_core::{BScan, BandPlan, Error, SoilModel};

use crate::config::Config;
use crate::error::CliError;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    write_text(path, &(text + "\n"))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// A scan read from disk together with its manifest metadata.
struct ScanRecord {
    name: String,
    sm: Option<f64>,
    time_min: Option<f64>,
    bscan: BScan,
}

fn load_manifest(path: &Path) -> Result<(SoilModel, Vec<ScanRecord>), CliError> {
    let manifest = Manifest::load(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut records = Vec::with_capacity(manifest.entries.len());
    for entry in manifest.entries {
        records.push(ScanRecord {
            bscan: load_bscan(dir.join(&entry.file))?,
            name: entry.name,
            sm: entry.sm,
            time_min: entry.time_min,
        });
    }
    Ok((manifest.soil, records))
}

/// Scans with a known SM that are not part of a time series.
fn training_set(records: &[ScanRecord]) -> Vec<(f64, BScan)> {
    records
        .iter()
        .filter(|r| r.time_min.is_none())
        .filter_map(|r| r.sm.map(|sm| (sm, r.bscan.clone())))
        .collect()
}

fn processor_for(config: &ProcessingConfig, first: &BScan) -> Result<BandProcessor, CliError> {
    Ok(BandProcessor::new(config.clone(), *first.sweep(), *first.scanline())?)
}

/// Processing settings that reproduce the FSV definition a model was trained with.
fn config_for_model(config: &Config, model: &MoistureModel, first: &BScan) -> Result<ProcessingConfig, CliError> {
    model.band_plan.check_against(first.sweep())?;
    let mut processing = config.processing_with(model.band_plan.clone());
    processing.scaling = match model.normalization {
        Normalization::None => FsvScaling::Raw,
        Normalization::ImageFrobenius { .. } => FsvScaling::ImageFrobenius,
    };
    Ok(processing)
}

pub fn simulate(scenario: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut scenario = Scenario::load(scenario)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let manifest = write_scenario(&scenario, out)?;
    println!("simulated {} scans into {}", manifest.entries.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct PreprocessReport {
    t0_s: f64,
    clutter: sdi_core::preprocess::ClutterReport,
}

pub fn preprocess(input: &Path, out: &Path, reference: Option<&Path>, config: &Config) -> Result<(), CliError> {
    let bscan = load_bscan(input)?;
    let t0 = match reference {
        Some(r) => time_zero_from(&load_bscan(r)?)?,
        None => config.t0,
    };
    let (clean, clutter) = preprocess_scan(&bscan, t0, config.clutter_k)?;
    save_bscan(&clean, out)?;
    write_json(&out.with_extension("json"), &PreprocessReport { t0_s: t0, clutter })
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scan".into())
}

pub fn image(input: &Path, out: &Path, band: Option<usize>, config: &Config) -> Result<(), CliError> {
    let bscan = load_bscan(input)?;
    let sweep = *bscan.sweep();
    let processing = match band {
        Some(_) => config.processing(&sweep)?,
        None => config.processing_with(BandPlan::full(&sweep)),
    };
    let index = band.unwrap_or(0);
    let range = *processing
        .band_plan
        .bands()
        .get(index)
        .ok_or_else(|| CliError::Config(format!("band {index} not in the band plan")))?;
    let mut processor = processor_for(&processing, &bscan)?;
    let (clean, _) = preprocess_scan(&bscan, processing.t0, processing.clutter_k)?;
    create_dir(out)?;
    let name = stem(input);
    for algorithm in config.algorithm.algorithms() {
        let img = processor.band_image(&clean, index, algorithm)?;
        let base = out.join(format!("{name}_{}", algorithm.label()));
        img.write_csv(base.with_extension("csv"))?;
        img.sidecar(Some(range), Some((sweep.frequency(range.0), sweep.frequency(range.1))))
            .write(base.with_extension("json"))?;
        if config.pgm {
            img.write_pgm(base.with_extension("pgm"))?;
        }
        let peak = img.peak();
        println!("{}: peak |{:.6e}| at cell ({}, {})", algorithm.label(), peak.magnitude, peak.ix, peak.iz);
    }
    Ok(())
}

pub fn fit(manifest: &Path, out: &Path, config: &Config) -> Result<(), CliError> {
    let (soil, records) = load_manifest(manifest)?;
    let training = training_set(&records);
    let first = &training
        .first()
        .ok_or_else(|| CliError::Input("manifest lists no scans with known SM".into()))?
        .1;
    let mut processing = config.processing(first.sweep())?;
    processing.soil = soil;
    let mut processor = processor_for(&processing, first)?;
    create_dir(out)?;
    for algorithm in config.algorithm.algorithms() {
        let (samples, normalization) = processor.dataset(&training, algorithm)?;
        let mut build = build_model(&samples, &processing.band_plan, normalization, &config.build_options())?;
        build.model.seed = Some(config.seed);
        let label = algorithm.label();
        build.model.save(out.join(format!("model_{label}.json")))?;
        write_text(&out.join(format!("parameters_{label}.csv")), &build.parameters_csv())?;
        write_text(&out.join(format!("fsv_{label}.csv")), &samples_csv(&samples))?;
        println!(
            "{label}: {} combinations ({} failed), mu_a = {:.6e}, mu_b = {:.6e}",
            build.model.n_combinations,
            build.n_failed(),
            build.model.mu_a,
            build.model.mu_b
        );
    }
    Ok(())
}

/// Per-scan estimates as CSV, plus the temporal series when at least two timed scans succeed.
fn estimate_records(
    processor: &mut BandProcessor,
    records: &[ScanRecord],
    model: &MoistureModel,
    config: &Config,
) -> Result<(String, Option<String>), CliError> {
    let mut csv = String::from("scan,t_min,sm_mean,sm_std,n_valid_draws,n_invalid_draws,status\n");
    let mut timed = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let t = r.time_min.map(format_decimal).unwrap_or_default();
        match estimate_scan(processor, &r.bscan, model, config.draws, mix_seed(config.seed, &[i as u64])) {
            Ok(e) => {
                let res = e.result;
                csv.push_str(&format!(
                    "{},{t},{},{},{},{},ok\n",
                    r.name,
                    format_decimal(res.sm_mean),
                    format_decimal(res.sm_std),
                    res.n_valid_draws,
                    res.n_invalid_draws
                ));
                if let Some(time) = r.time_min {
                    timed.push((time, res.sm_mean, res.sm_std));
                }
            }
            Err(Error::Saturation { .. }) => {
                let invalid = config.draws * model.band_plan.n_bands();
                csv.push_str(&format!("{},{t},,,0,{invalid},saturated\n", r.name));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let temporal = if timed.len() >= 2 { Some(temporal_csv(&temporal_series(&timed)?)) } else { None };
    Ok((csv, temporal))
}

fn parse_times(text: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let times: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad time '{t}'"))))
        .collect::<Result<_, _>>()?;
    if times.len() != n {
        return Err(CliError::Config(format!("{} times given for {n} scans", times.len())));
    }
    Ok(times)
}

pub fn estimate(
    inputs: &[PathBuf],
    manifest: Option<&Path>,
    model_path: &Path,
    out: &Path,
    times: Option<&str>,
    config: &Config,
) -> Result<(), CliError> {
    let model = MoistureModel::load(model_path)?;
    let (soil, mut records) = match manifest {
        Some(m) => load_manifest(m)?,
        None => (config.soil, Vec::new()),
    };
    let times = match times {
        Some(text) => parse_times(text, inputs.len())?.into_iter().map(Some).collect(),
        None => vec![None; inputs.len()],
    };
    for (path, time_min) in inputs.iter().zip(times) {
        records.push(ScanRecord { name: stem(path), sm: None, time_min, bscan: load_bscan(path)? });
    }
    if records.is_empty() {
        return Err(CliError::Config("no scans to estimate".into()));
    }
    let mut processing = config_for_model(config, &model, &records[0].bscan)?;
    processing.soil = soil;
    let mut processor = processor_for(&processing, &records[0].bscan)?;
    let (csv, temporal) = estimate_records(&mut processor, &records, &model, config)?;
    create_dir(out)?;
    let label = model.algorithm.label();
    write_text(&out.join(format!("estimates_{label}.csv")), &csv)?;
    if let Some(t) = temporal {
        write_text(&out.join(format!("temporal_{label}.csv")), &t)?;
    }
    print!("{csv}");
    Ok(())
}

pub fn evaluate(manifest: &Path, model_path: &Path, out: &Path, config: &Config) -> Result<(), CliError> {
    let model = MoistureModel::load(model_path)?;
    let (soil, records) = load_manifest(manifest)?;
    let training = training_set(&records);
    let first = &training
        .first()
        .ok_or_else(|| CliError::Input("manifest lists no scans with known SM".into()))?
        .1;
    let mut processing = config_for_model(config, &model, first)?;
    processing.soil = soil;
    let mut processor = processor_for(&processing, first)?;
    let (samples, _) = processor.dataset(&training, model.algorithm)?;
    let mut levels: Vec<f64> = training.iter().map(|(sm, _)| *sm).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let k = config.build_options().train_size(model.band_plan.n_bands());
    let report = rotating_evaluation(&model, &samples, k, &levels, config.draws, config.seed)?;
    create_dir(out)?;
    write_text(&out.join(format!("smee_{}.csv", model.algorithm.label())), &report.to_csv())?;
    print!("{}", report.to_csv());
    Ok(())
}

#[derive(Serialize)]
struct AlgorithmSummary {
    algorithm: Algorithm,
    n_bands: usize,
    n_combinations: usize,
    n_failed_fits: usize,
    fsv_strictly_increasing: bool,
    non_monotone_bands: Vec<usize>,
    max_abs_smee: Option<f64>,
    mu_a: f64,
    var_a: f64,
    mu_b: f64,
    var_b: f64,
}

pub fn pipeline(scenario: Option<&Path>, out: &Path, config: &Config) -> Result<(), CliError> {
    let scenario = match scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::reference_moisture_sweep(),
    };
    let scan_dir = out.join("scans");
    write_scenario(&scenario, &scan_dir)?;
    let (soil, records) = load_manifest(&scan_dir.join(sdi_core::scenario::MANIFEST_FILE))?;
    let training = training_set(&records);
    if training.is_empty() {
        return Err(CliError::Input("scenario has no scenes with known SM to train on".into()));
    }
    let timed: Vec<ScanRecord> = records.into_iter().filter(|r| r.time_min.is_some()).collect();

    let mut processing = config.processing(&scenario.sweep)?;
    processing.soil = soil;
    let mut processor = processor_for(&processing, &training[0].1)?;
    let mut summary = Vec::new();
    for algorithm in config.algorithm.algorithms() {
        let run = train_and_evaluate(
            &mut processor,
            &training,
            algorithm,
            &config.build_options(),
            config.draws,
            config.seed,
        )?;
        let dir = out.join(algorithm.label());
        create_dir(&dir)?;
        write_text(&dir.join("fsv.csv"), &samples_csv(&run.samples))?;
        run.build.model.save(dir.join("model.json"))?;
        write_text(&dir.join("parameters.csv"), &run.build.parameters_csv())?;
        write_text(&dir.join("smee.csv"), &run.report.to_csv())?;
        if !timed.is_empty() {
            let (csv, temporal) = estimate_records(&mut processor, &timed, &run.build.model, config)?;
            write_text(&dir.join("estimates.csv"), &csv)?;
            if let Some(t) = temporal {
                write_text(&dir.join("temporal.csv"), &t)?;
            }
        }
        let bad = non_monotone_bands(&run.samples);
        let model = &run.build.model;
        let entry = AlgorithmSummary {
            algorithm,
            n_bands: processing.band_plan.n_bands(),
            n_combinations: model.n_combinations,
            n_failed_fits: run.build.n_failed(),
            fsv_strictly_increasing: bad.is_empty(),
            non_monotone_bands: bad,
            max_abs_smee: run.report.max_abs_smee(),
            mu_a: model.mu_a,
            var_a: model.var_a,
            mu_b: model.mu_b,
            var_b: model.var_b,
        };
        println!(
            "{}: fsv increasing = {}, max |SMEE| = {}",
            algorithm.label(),
            entry.fsv_strictly_increasing,
            entry.max_abs_smee.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into())
        );
        summary.push(entry);
    }
    write_json(&out.join("summary.json"), &summary)
}
