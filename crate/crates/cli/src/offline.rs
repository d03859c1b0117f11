use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use adlmon_core::anomaly::{DetectorReport, Feature};
use adlmon_core::artifacts::{fit_anomaly, Artifacts, FitOptions, MODEL_FILE};
use adlmon_core::hmm::{evaluate_lodo, train_ml, DecodeMode, EvalOptions, EvalReport, HmmModel};
use adlmon_core::ingest::Recording;
use adlmon_core::pipeline::{Bus, DialogueHub, Payload, Pipeline, Topic};
use adlmon_core::dialogue::DialogueEngine;
use adlmon_core::simulator::{generate_household, replay, BaseSpec, HouseholdSpec, Scenario, ADLS_FILE, SENSORS_FILE};
use chrono::NaiveDate;

use crate::error::CliError;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Reads `OrdonezA_Sensors.txt` and `OrdonezA_ADLs.txt` from `dir`.
pub fn load_dataset(dir: &Path, sensor_map: Option<PathBuf>) -> Result<Recording, CliError> {
    let base = BaseSpec::Dataset { sensors: dir.join(SENSORS_FILE), activities: dir.join(ADLS_FILE), sensor_map };
    Ok(base.recording(0)?)
}

pub fn synth_dataset(out: &Path, start: NaiveDate, days: usize, seed: u64) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io(out))?;
    let household = generate_household(HouseholdSpec { start, days, seed });
    let (sensors, adls) = household.write_ordonez(out).map_err(io(out))?;
    println!("{}", sensors.display());
    println!("{}", adls.display());
    Ok(())
}

pub fn train(recording: &Recording, smoothing: f64, out: &Path) -> Result<HmmModel, CliError> {
    let model = train_ml(recording, smoothing)?;
    fs::create_dir_all(out).map_err(io(out))?;
    let path = out.join(MODEL_FILE);
    fs::write(&path, model.to_json_string()).map_err(io(&path))?;
    println!("{}", path.display());
    Ok(model)
}

pub fn fit(recording: &Recording, dir: &Path, options: &FitOptions) -> Result<Artifacts, CliError> {
    let model = Artifacts::load_model(&dir.join(MODEL_FILE))?;
    let bundle = fit_anomaly(recording, &model, options)?;
    let artifacts = Artifacts::new(model, bundle)?;
    artifacts.save(dir)?;
    if let Some(report) = &artifacts.bundle.report {
        print!("{}", detector_table(report));
    }
    Ok(artifacts)
}

pub fn hmm_row(report: &EvalReport) -> String {
    format!("{:<12}{:>10}{:>10}\n{:<12}{:>10.4}{:>10.4}\n", "model", "accuracy", "f1", "HMM", report.accuracy, report.f1_macro)
}

pub fn detector_table(report: &DetectorReport) -> String {
    let mut out = format!(
        "{:<12}{:>10}{:>10}{:>10}{:>13}{:>8}{:>10}\n",
        "feature", "accuracy", "f1", "f1_macro", "f1_abnormal", "rows", "abnormal"
    );
    for feature in Feature::ALL {
        let m = &report.per_feature[&feature];
        out += &format!(
            "{:<12}{:>10.4}{:>10.4}{:>10.4}{:>13.4}{:>8}{:>10}\n",
            feature.name(),
            m.accuracy,
            m.f1,
            m.f1_macro,
            m.f1_abnormal,
            m.rows,
            m.abnormal_rows
        );
    }
    out
}

pub struct EvalSummary {
    pub hmm: EvalReport,
    pub detectors: DetectorReport,
}

pub fn eval(recording: &Recording, smoothing: f64, mode: DecodeMode, options: &FitOptions) -> Result<EvalSummary, CliError> {
    let hmm = evaluate_lodo(recording, EvalOptions { smoothing, mode })?;
    let model = train_ml(recording, smoothing)?;
    let bundle = fit_anomaly(recording, &model, &FitOptions { evaluate: true, ..options.clone() })?;
    let detectors = bundle.report.expect("evaluation requested");
    Ok(EvalSummary { hmm, detectors })
}

pub struct LocalReplay {
    pub hub: Arc<DialogueHub>,
    pub report: adlmon_core::simulator::ReplayReport,
}

/// Runs the scenario through a local pipeline.
pub async fn replay_local(
    artifacts: Arc<Artifacts>,
    scenario: &Scenario,
    speed: f64,
    data_dir: Option<&Path>,
    subject: &str,
    lag: usize,
) -> Result<LocalReplay, CliError> {
    let (recording, manifest) = scenario.build(&artifacts.bundle.stats)?;
    let bus = match data_dir {
        Some(dir) => Bus::open(dir)?,
        None => Bus::in_memory(),
    };
    let hub = Arc::new(DialogueHub::new(DialogueEngine::new(subject), bus));
    let mut pipeline = Pipeline::new(artifacts, Arc::clone(&hub), lag);
    let report = replay(&recording, speed, manifest, &mut pipeline).await?;
    Ok(LocalReplay { hub, report })
}

pub fn replay_summary(run: &LocalReplay) -> String {
    let bus = run.hub.bus();
    let mut out = String::new();
    for r in &run.report.manifest {
        out += &format!("injected {} day {} ({}) {} {}\n", r.use_case, r.day, r.date, r.label, r.feature);
    }
    for e in bus.events(Topic::Notification, 0, usize::MAX) {
        if let Payload::Notification(n) = &e.payload {
            let flags: Vec<&str> = n.flags.iter().map(|f| f.name()).collect();
            out += &format!("{} {} [{}] {}\n", n.wallclock.format("%Y-%m-%d %H:%M"), n.activity, flags.join(","), n.summary);
        }
    }
    for topic in Topic::ALL {
        out += &format!("{:<22}{:>8}\n", topic.name(), bus.len(topic));
    }
    out += &format!("slices {} in {} ms\n", run.report.slices_sent, run.report.elapsed_ms);
    out
}
