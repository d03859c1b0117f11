//! Acceptance suite: one line per criterion, nonzero exit if a gating
//! criterion fails.
//!
//! Criterion 1 needs the public OrdonezA files; point `ORDONEZ_DIR` at the
//! directory holding `OrdonezA_Sensors.txt` and `OrdonezA_ADLs.txt`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use adlmon_core::anomaly::{
    featurize, gen_synthetic, label_marginals, rule_label, rule_labels, segment_day, train_detectors,
    ContextFeatures, Feature, GaussianEntry, GaussianStats, TreeConfig, CI_Z,
};
use adlmon_core::artifacts::{build_artifacts, ground_truth_rows, Artifacts, FitOptions};
use adlmon_core::dialogue::{
    render_abnormal_event, render_activity_event, AbnormalEvent, ActivityEvent, DialogueEngine, DialogueEvent,
    DialogueMessage, DialogueState, RequestStatus, Role, SideEffect, Speaker,
};
use adlmon_core::hmm::{decode_observations, evaluate_lodo, train_ml, DecodeMode, EvalOptions, HmmModel};
use adlmon_core::ingest::{Day, Recording, TimeSlice, SLICES_PER_DAY};
use adlmon_core::anomaly::AnomalyVerdict;
use adlmon_core::pipeline::{
    read_log, Bus, DialogueHub, Notification, Payload, Pipeline, RecognizedSlice, Topic, DEFAULT_LAG, LOG_FILE,
};
use adlmon_core::simulator::{
    generate_household, replay, BaseSpec, HouseholdSpec, Scenario, ADLS_FILE, SENSORS_FILE,
};
use adlmon_core::ActivityLabel;
use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    /// Reported only; does not gate.
    Report,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { status: Status::Fail, detail: detail.into() }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    Outcome { status: if ok { Status::Pass } else { Status::Fail }, detail }
}

fn ts(day: u32, h: u32, m: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2011, 11, day).unwrap().and_hms_opt(h, m, 0).unwrap()
}

fn household(days: usize, seed: u64) -> Recording {
    generate_household(HouseholdSpec { days, seed, ..Default::default() }).recording().unwrap()
}

// 1 ------------------------------------------------------------------------

fn hmm_reproduction() -> Outcome {
    let Some(dir) = std::env::var_os("ORDONEZ_DIR").map(PathBuf::from) else {
        let synthetic = household(21, 1);
        let report = evaluate_lodo(&synthetic, EvalOptions::default()).unwrap();
        return fail(format!(
            "(blocked) ORDONEZ_DIR is not set, the public dataset is not available here; \
             for reference only, the 21-day synthetic household gives accuracy {:.3}, macro F1 {:.3}",
            report.accuracy, report.f1_macro
        ));
    };
    let base = BaseSpec::Dataset { sensors: dir.join(SENSORS_FILE), activities: dir.join(ADLS_FILE), sensor_map: None };
    let recording = match base.recording(0) {
        Ok(r) => r,
        Err(e) => return fail(format!("cannot load {}: {e}", dir.display())),
    };
    let started = Instant::now();
    let report = evaluate_lodo(&recording, EvalOptions::default()).unwrap();
    let secs = started.elapsed().as_secs_f64();
    let shape = recording.days.len() == 21 && recording.n_sensors == 12 && recording.total_slices() == 30_240;
    let acc_ok = (report.accuracy - 0.85).abs() <= 0.05;
    let f1_ok = (report.f1_macro - 0.62).abs() <= 0.08;
    verdict(
        shape && acc_ok && f1_ok && secs < 60.0,
        format!(
            "{} days, {} sensors, {} slices; accuracy {:.3} (0.85 +/- 0.05), macro F1 {:.3} (0.62 +/- 0.08), {:.1} s",
            recording.days.len(),
            recording.n_sensors,
            recording.total_slices(),
            report.accuracy,
            report.f1_macro,
            secs
        ),
    )
}

// 2 ------------------------------------------------------------------------

fn detector_reproduction() -> Outcome {
    let (recording, source) = match std::env::var_os("ORDONEZ_DIR").map(PathBuf::from) {
        Some(dir) => {
            let base =
                BaseSpec::Dataset { sensors: dir.join(SENSORS_FILE), activities: dir.join(ADLS_FILE), sensor_map: None };
            (base.recording(0).unwrap(), "OrdonezA")
        }
        None => (household(21, 1), "synthetic household"),
    };
    let model = train_ml(&recording, 1.0).unwrap();
    let bundle = adlmon_core::artifacts::fit_anomaly(&recording, &model, &FitOptions::default()).unwrap();
    let report = bundle.report.unwrap();
    let paper = [
        (Feature::Transition, 0.82, 0.82),
        (Feature::StartHour, 0.83, 0.79),
        (Feature::Duration, 0.95, 0.93),
        (Feature::Frequency, 0.99, 0.99),
    ];
    let mut parts = Vec::new();
    let mut within = true;
    for (feature, acc, f1) in paper {
        let m = &report.per_feature[&feature];
        let ok = (m.accuracy - acc).abs() <= 0.07 && (m.f1 - f1).abs() <= 0.07;
        within &= ok;
        parts.push(format!(
            "{} {:.2}/{:.2} vs {acc:.2}/{f1:.2}{}",
            feature.name(),
            m.accuracy,
            m.f1,
            if ok { "" } else { " (outside)" }
        ));
    }
    Outcome {
        status: Status::Report,
        detail: format!(
            "{}; {source} + {} synthetic days, {}",
            if within { "all within +/- 0.07" } else { "not all within +/- 0.07" },
            bundle.n_synth_days,
            parts.join(", ")
        ),
    }
}

// 3 ------------------------------------------------------------------------

fn random_model(rng: &mut ChaCha8Rng, n_states: usize, n_sensors: usize) -> HmmModel {
    let mut simplex = |n: usize| {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0f64)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect::<Vec<f64>>()
    };
    let prior = simplex(n_states);
    let transition = (0..n_states).map(|_| simplex(n_states)).collect();
    let emission = (0..n_states).map(|_| (0..n_sensors).map(|_| rng.random_range(0.01..0.99)).collect()).collect();
    HmmModel::new(ActivityLabel::ALL[..n_states].to_vec(), prior, transition, emission).unwrap()
}

/// log p(path, obs) straight from the parameters.
fn oracle_log_likelihood(model: &HmmModel, obs: &[Vec<u8>], path: &[usize]) -> f64 {
    let emit = |s: usize, x: &[u8]| -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &v)| if v == 1 { model.emission[s][i].ln() } else { (1.0 - model.emission[s][i]).ln() })
            .sum()
    };
    let mut total = model.prior[path[0]].ln() + emit(path[0], &obs[0]);
    for t in 1..path.len() {
        total += model.transition[path[t - 1]][path[t]].ln() + emit(path[t], &obs[t]);
    }
    total
}

fn decoder_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut paths = 0u64;
    for case in 0..500 {
        let n_states = rng.random_range(1..=4);
        let n_sensors = rng.random_range(1..=3);
        let len = rng.random_range(1..=8);
        let model = random_model(&mut rng, n_states, n_sensors);
        let obs: Vec<Vec<u8>> =
            (0..len).map(|_| (0..n_sensors).map(|_| rng.random_bool(0.5) as u8).collect()).collect();
        let mut best = f64::NEG_INFINITY;
        let mut path = vec![0usize; len];
        loop {
            best = best.max(oracle_log_likelihood(&model, &obs, &path));
            paths += 1;
            let mut i = 0;
            while i < len && path[i] + 1 == n_states {
                path[i] = 0;
                i += 1;
            }
            if i == len {
                break;
            }
            path[i] += 1;
        }
        let refs: Vec<&[u8]> = obs.iter().map(Vec::as_slice).collect();
        let decoded = decode_observations(&model, &refs, DecodeMode::Viterbi).unwrap();
        let indices: Vec<usize> = decoded.path.iter().map(|&l| model.state_index(l).unwrap()).collect();
        let own = oracle_log_likelihood(&model, &obs, &indices);
        let err = (decoded.log_likelihood - best).abs().max((own - best).abs());
        if err > 1e-9 {
            return fail(format!("case {case}: Viterbi {} vs enumeration {best}", decoded.log_likelihood));
        }
        worst = worst.max(err);
    }
    pass(format!("500 random HMMs, {paths} enumerated paths, max |error| {worst:.2e}"))
}

// 4 ------------------------------------------------------------------------

fn one_model() -> HmmModel {
    let n = ActivityLabel::COUNT;
    HmmModel::new(ActivityLabel::ALL.to_vec(), vec![1.0 / n as f64; n], vec![vec![1.0 / n as f64; n]; n], vec![vec![0.5]; n])
        .unwrap()
}

fn features(label: ActivityLabel, transition: f64, duration: u32, frequency: u32, hour: f64) -> ContextFeatures {
    ContextFeatures {
        label,
        prev_label: Some(ActivityLabel::Sleeping),
        transition_prob: transition,
        duration_min: duration,
        frequency_today: frequency,
        start_hour: hour,
    }
}

fn stats_for(feature: Feature, mu: f64, sigma: f64) -> GaussianStats {
    GaussianStats::from_entries(vec![GaussianEntry { label: ActivityLabel::Lunch, feature, mu, sigma, n: 30 }])
}

fn hour_flag(model: &HmmModel, mu: f64, sigma: f64, value: f64) -> bool {
    let f = features(ActivityLabel::Lunch, 0.5, 30, 1, value);
    rule_label(&f, &stats_for(Feature::StartHour, mu, sigma), model).flagged(Feature::StartHour)
}

fn rule_suite() -> Outcome {
    let model = one_model();
    let mut problems = Vec::new();

    // fixed mu = 10, sigma = 2 against the quantile bounds
    let (lo, hi) = (6.7102, 13.2898);
    let mut checked = 0;
    for i in 0..=20_000 {
        let v = i as f64 / 1000.0;
        if (v - lo).abs() < 1e-6 || (v - hi).abs() < 1e-6 {
            continue;
        }
        checked += 1;
        if hour_flag(&model, 10.0, 2.0, v) != (v < lo || v > hi) {
            problems.push(format!("mu 10 sigma 2: value {v}"));
        }
    }
    let duration_stats = stats_for(Feature::Duration, 10.0, 2.0);
    for d in 1..=30u32 {
        let f = features(ActivityLabel::Lunch, 0.5, d, 1, 12.0);
        let flagged = rule_label(&f, &duration_stats, &model).flagged(Feature::Duration);
        if flagged != !(7..=13).contains(&d) {
            problems.push(format!("duration {d}"));
        }
    }

    // transition threshold, strict
    let t = |p: f64| rule_label(&features(ActivityLabel::Lunch, p, 30, 1, 12.0), &GaussianStats::default(), &model);
    if t(0.05).flagged(Feature::Transition) || !t(0.049_999_999).flagged(Feature::Transition) {
        problems.push("transition boundary".into());
    }

    // symmetry and scale covariance
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..10_000 {
        let mu = rng.random_range(-50.0..50.0);
        let sigma = rng.random_range(0.01..20.0);
        let v = mu + rng.random_range(-4.0..4.0) * sigma;
        let near = |x: f64, m: f64, s: f64| ((x - m).abs() - CI_Z * s).abs() < 1e-9 * (1.0 + m.abs() + s);
        if near(v, mu, sigma) {
            continue;
        }
        if hour_flag(&model, mu, sigma, v) != hour_flag(&model, mu, sigma, 2.0 * mu - v) {
            problems.push(format!("symmetry case {case}"));
        }
        let a = rng.random_range(0.1..10.0);
        let b = rng.random_range(-100.0..100.0);
        if near(a * v + b, a * mu + b, a * sigma) {
            continue;
        }
        if hour_flag(&model, mu, sigma, v) != hour_flag(&model, a * mu + b, a * sigma, a * v + b) {
            problems.push(format!("scale case {case}"));
        }
    }

    // unlimited-depth trees on their own training rows
    let recording = household(21, 1);
    let trained = train_ml(&recording, 1.0).unwrap();
    let mut rows = ground_truth_rows(&recording, &trained).unwrap();
    let stats = adlmon_core::anomaly::fit_gaussians(&rows);
    let marginals = label_marginals(&rows);
    rows.extend(gen_synthetic(&trained, &stats, &marginals, 21, 7).unwrap());
    let labels = rule_labels(&rows, &stats, &trained);
    let detectors = train_detectors(&rows, &labels, TreeConfig { max_depth: None, min_leaf: 1 }).unwrap();
    let mut agreement = BTreeMap::new();
    for feature in Feature::ALL {
        let same = rows
            .iter()
            .zip(&labels)
            .filter(|(r, v)| detectors.predict(&r.features)[&feature] == v.flagged(feature))
            .count();
        agreement.insert(feature, same as f64 / rows.len() as f64);
    }
    for feature in [Feature::Duration, Feature::Frequency] {
        if agreement[&feature] < 0.99 {
            problems.push(format!("{} tree agreement {:.4}", feature.name(), agreement[&feature]));
        }
    }
    let trees: Vec<String> = agreement.iter().map(|(f, a)| format!("{} {:.4}", f.name(), a)).collect();
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{checked} grid values, 10^4 symmetry/scale cases, strict 0.05; tree agreement on {} rows: {}",
                rows.len(),
                trees.join(", ")
            )
        } else {
            problems.join("; ")
        },
    )
}

// 5 ------------------------------------------------------------------------

fn random_recording(rng: &mut ChaCha8Rng) -> Recording {
    let n_sensors = rng.random_range(1..=12);
    let n_days = rng.random_range(1..=3);
    let n_labels = rng.random_range(1..=ActivityLabel::COUNT);
    let start = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
    let days = (0..n_days)
        .map(|d| {
            let date = start + Duration::days(d as i64);
            let mut label = ActivityLabel::ALL[rng.random_range(0..n_labels)];
            let slices = (0..SLICES_PER_DAY)
                .map(|t| {
                    if rng.random_bool(0.05) {
                        label = ActivityLabel::ALL[rng.random_range(0..n_labels)];
                    }
                    TimeSlice {
                        t,
                        wallclock: date.and_time(NaiveTime::MIN) + Duration::minutes(t as i64),
                        x: (0..n_sensors).map(|_| rng.random_bool(0.2) as u8).collect(),
                        y: Some(label),
                    }
                })
                .collect();
            Day { date, slices }
        })
        .collect();
    Recording { n_sensors, days }
}

fn stochastic_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let recording = if case % 2 == 0 {
            random_recording(&mut rng)
        } else {
            household(rng.random_range(1..=4), rng.random())
        };
        let smoothing = [0.1, 0.5, 1.0, 2.0][case % 4];
        let model = train_ml(&recording, smoothing).unwrap();
        let mut sums = vec![model.prior.iter().sum::<f64>()];
        sums.extend(model.transition.iter().map(|row| row.iter().sum::<f64>()));
        for s in sums {
            worst = worst.max((s - 1.0).abs());
        }
        let bounded = model.emission.iter().flatten().all(|&p| p > 0.0 && p < 1.0);
        if worst > 1e-9 || !bounded {
            return fail(format!("training set {case}: max |row sum - 1| {worst:.2e}, emissions in (0,1): {bounded}"));
        }
    }
    pass(format!("100 training sets, max |row sum - 1| {worst:.2e}"))
}

// 6 ------------------------------------------------------------------------

fn abnormal_event(label: ActivityLabel, feature: Feature, expected: ActivityLabel) -> AbnormalEvent {
    let mut flags: BTreeMap<Feature, bool> = Feature::ALL.into_iter().map(|f| (f, false)).collect();
    flags.insert(feature, true);
    AbnormalEvent {
        verdict: AnomalyVerdict {
            label,
            flags,
            any: true,
            expected_next: expected,
            above_expected: [(feature, true)].into_iter().collect(),
        },
        features: features(label, 0.4, 200, 1, 3.0),
        start: ts(28, 3, 0),
    }
}

fn last(messages: &[DialogueMessage]) -> &str {
    messages.last().map_or("", |m| m.text.as_str())
}

const UTTERANCES: [&str; 14] = [
    "hello",
    "explain",
    "what is she doing now",
    "check if she has a dietary problem",
    "ask whether he slept well",
    "yes",
    "no",
    "I'd rather not share that",
    "private, skip it",
    "banana",
    "hello yes",
    "why abnormal",
    "check",
    "nope",
];

fn dialogue_golden() -> Outcome {
    let mut problems = Vec::new();
    let verbs = adlmon_core::dialogue::VerbTable::default();
    let activity = render_activity_event(
        "Mike",
        ActivityLabel::SpareTimeTV,
        "living room",
        NaiveTime::from_hms_opt(8, 30, 0).unwrap(),
        &verbs,
    )
    .unwrap();
    if activity != "Mike took a rest in the living room at 8:30" {
        problems.push(format!("activity sentence `{activity}`"));
    }
    let leaving = abnormal_event(ActivityLabel::Leaving, Feature::Duration, ActivityLabel::Sleeping);
    let abnormal = render_abnormal_event("Alice", &leaving.verdict, &leaving.features, &verbs).unwrap();
    if abnormal != "Alice spent much more time in going out. Alice should have slept instead of going out" {
        problems.push(format!("abnormal sentence `{abnormal}`"));
    }

    let mut engine = DialogueEngine::new("Alice");
    let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(28, 8, 0));
    let (oa, _) = engine.open_session(Role::OlderAdult, "Alice", ts(28, 8, 0));
    let toilet = abnormal_event(ActivityLabel::Toileting, Feature::Frequency, ActivityLabel::Sleeping);
    engine.step(DialogueEvent::Abnormal(toilet), ts(28, 8, 0)).unwrap();
    let ack = engine
        .step(DialogueEvent::Utterance { session: cg, text: "check if she has a dietary problem".into() }, ts(28, 8, 1))
        .unwrap();
    if last(&ack.messages) != "I will confirm whether she has a dietary problem" {
        problems.push(format!("acknowledgement `{}`", last(&ack.messages)));
    }
    let rest = ActivityEvent { label: ActivityLabel::SpareTimeTV, start: ts(28, 9, 0), end: ts(28, 9, 30) };
    let prompt = engine.step(DialogueEvent::ActivityCompleted(rest), ts(28, 9, 30)).unwrap();
    let expected = "I found you have an abnormal event of a toilet. I was wondering if you have any dietary problem?";
    if last(&prompt.messages) != expected || prompt.messages.last().map(|m| m.session_id) != Some(oa) {
        problems.push(format!("prompt `{}`", last(&prompt.messages)));
    }

    // fuzz
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut engine = DialogueEngine::new("Alice");
    let mut sessions = Vec::new();
    let mut declines = 0;
    let mut transitions = 0u64;
    let mut status: BTreeMap<u64, RequestStatus> = BTreeMap::new();
    let mut clock = ts(28, 0, 0);
    for i in 0..100_000u32 {
        clock += Duration::seconds(30);
        if sessions.len() < 2 || rng.random_bool(0.002) {
            let role = if rng.random_bool(0.5) { Role::Caregiver } else { Role::OlderAdult };
            let (id, _) = engine.open_session(role, "S", clock);
            sessions.push((id, role));
            continue;
        }
        let event = match rng.random_range(0..10) {
            0..=5 => {
                let (session, _) = sessions[rng.random_range(0..sessions.len())];
                DialogueEvent::Utterance { session, text: UTTERANCES[rng.random_range(0..UTTERANCES.len())].into() }
            }
            6..=8 => {
                let label = ActivityLabel::ALL[rng.random_range(0..ActivityLabel::COUNT)];
                DialogueEvent::ActivityCompleted(ActivityEvent { label, start: clock, end: clock })
            }
            _ => {
                let label = ActivityLabel::ALL[rng.random_range(0..ActivityLabel::COUNT)];
                let feature = Feature::ALL[rng.random_range(0..4)];
                DialogueEvent::Abnormal(abnormal_event(label, feature, ActivityLabel::Sleeping))
            }
        };
        let spoken = match &event {
            DialogueEvent::Utterance { session, text } => Some((*session, text.clone())),
            _ => None,
        };
        let out = match engine.step(event, clock) {
            Ok(out) => out,
            Err(e) => {
                problems.push(format!("event {i}: {e}"));
                break;
            }
        };
        for effect in &out.effects {
            match effect {
                SideEffect::StateChanged { from, to, .. } => {
                    transitions += 1;
                    if !from.can_move_to(*to) || !DialogueState::ALL.contains(to) {
                        problems.push(format!("event {i}: undeclared {from:?} -> {to:?}"));
                    }
                }
                SideEffect::RequestDeclined { request } => {
                    declines += 1;
                    let (_, text) = spoken.clone().expect("declines follow an utterance");
                    let leaked = engine.sessions().filter(|s| s.role == Role::Caregiver).any(|s| {
                        s.id == request.from_session
                            && s.transcript.iter().any(|m| m.speaker == Speaker::System && m.text.contains(&text))
                    });
                    if leaked {
                        problems.push(format!("event {i}: declined answer reached the caregiver"));
                    }
                }
                _ => {}
            }
        }
        for r in engine.requests() {
            if let Some(prev) = status.insert(r.id, r.status) {
                if prev != r.status && !prev.can_move_to(r.status) {
                    problems.push(format!("request {}: {prev:?} -> {:?}", r.id, r.status));
                }
            }
            if r.status == RequestStatus::Declined && r.answer.is_some() {
                problems.push(format!("request {} kept a declined answer", r.id));
            }
        }
        if problems.len() > 5 {
            break;
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("golden strings exact; 10^5 fuzz events, {transitions} state changes, {declines} declines, no leaks")
        } else {
            problems.join("; ")
        },
    )
}

// 7 ------------------------------------------------------------------------

fn scenario_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/scenarios/frequent_toilet.toml")
}

fn run_pipeline(artifacts: &Arc<Artifacts>, recording: &Recording, bus: Bus) -> Arc<DialogueHub> {
    let hub = Arc::new(DialogueHub::new(DialogueEngine::new("Alice"), bus));
    let mut pipeline = Pipeline::new(Arc::clone(artifacts), Arc::clone(&hub), DEFAULT_LAG);
    let rt = tokio::runtime::Builder::new_current_thread().enable_time().build().unwrap();
    rt.block_on(replay(recording, f64::INFINITY, Vec::new(), &mut pipeline)).unwrap();
    hub
}

fn end_to_end() -> Outcome {
    let artifacts = Arc::new(build_artifacts(&household(21, 1), 1.0, &FitOptions::default()).unwrap());
    let scenario = Scenario::load(&scenario_file()).unwrap();
    let (recording, manifest) = scenario.build(&artifacts.bundle.stats).unwrap();

    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let hubs: Vec<_> = dirs.iter().map(|d| run_pipeline(&artifacts, &recording, Bus::open(d.path()).unwrap())).collect();
    let logs: Vec<Vec<u8>> = dirs.iter().map(|d| std::fs::read(d.path().join(LOG_FILE)).unwrap()).collect();
    let identical = logs[0] == logs[1];
    let bus = hubs[0].bus();

    // segments rebuilt from the recognized labels
    let mut by_day: BTreeMap<NaiveDate, Vec<ActivityLabel>> = BTreeMap::new();
    for e in bus.events(Topic::ActivityRecognized, 0, usize::MAX) {
        if let Payload::ActivityRecognized(RecognizedSlice { date, label, .. }) = &e.payload {
            by_day.entry(*date).or_default().push(*label);
        }
    }
    let segments: Vec<_> = by_day.iter().flat_map(|(d, labels)| segment_day(*d, labels)).collect();
    let rows = featurize(&segments, &artifacts.model).unwrap();
    let published: Vec<_> = bus
        .events(Topic::SegmentCompleted, 0, usize::MAX)
        .iter()
        .filter_map(|e| match &e.payload {
            Payload::SegmentCompleted(s) => Some((s.segment, s.features)),
            _ => None,
        })
        .collect();
    let rebuilt: Vec<_> = rows.iter().map(|r| (r.segment, r.features)).collect();
    let same_segments = published == rebuilt;

    let oracle: BTreeSet<_> = rows
        .iter()
        .filter(|r| rule_label(&r.features, &artifacts.bundle.stats, &artifacts.model).any)
        .map(|r| (r.segment.day, r.segment.start_slice))
        .collect();
    let detected: BTreeSet<_> = bus
        .events(Topic::AbnormalDetected, 0, usize::MAX)
        .iter()
        .filter_map(|e| match &e.payload {
            Payload::AbnormalDetected(r) => Some((r.segment.day, r.segment.start_slice)),
            _ => None,
        })
        .collect();
    let injected_day = manifest[0].date;
    let burst = bus.events(Topic::AbnormalDetected, 0, usize::MAX).iter().any(|e| match &e.payload {
        Payload::AbnormalDetected(r) => {
            r.segment.day == injected_day
                && r.segment.label == ActivityLabel::Toileting
                && r.verdict.flagged(Feature::Frequency)
        }
        _ => false,
    });
    verdict(
        identical && same_segments && oracle == detected && burst,
        format!(
            "logs identical: {identical} ({} bytes); segments match decoded labels: {same_segments}; \
             abnormal_detected {} vs oracle {}, equal: {}; toilet frequency flagged on {injected_day}: {burst}",
            logs[0].len(),
            detected.len(),
            oracle.len(),
            oracle == detected
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn payload(i: u64) -> Payload {
    let when = ts(28, 0, 0) + Duration::seconds(i as i64);
    match i % 4 {
        0 => Payload::TimeSlice(TimeSlice {
            t: (i as usize) % SLICES_PER_DAY,
            wallclock: when,
            x: vec![(i % 2) as u8; 12],
            y: None,
        }),
        1 => Payload::ActivityRecognized(RecognizedSlice {
            date: when.date(),
            t: (i as usize) % SLICES_PER_DAY,
            wallclock: when,
            label: ActivityLabel::ALL[(i as usize) % ActivityLabel::COUNT],
        }),
        2 => Payload::DialogueMessage(DialogueMessage {
            session_id: i % 7,
            speaker: Speaker::System,
            text: format!("message {i} \"quoted\" \u{e9}"),
            timestamp: when,
        }),
        _ => Payload::Notification(Notification {
            activity: ActivityLabel::Toileting,
            flags: vec![Feature::Frequency],
            wallclock: when,
            severity: 1,
            style: "highlight".into(),
            summary: format!("summary {i}"),
        }),
    }
}

fn pubsub_contract() -> Outcome {
    const N: u64 = 10_000;
    let dir = tempfile::tempdir().unwrap();
    let topics = [Topic::TimeSlice, Topic::ActivityRecognized, Topic::DialogueMessage, Topic::Notification];
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
    let (live, stored) = rt.block_on(async {
        let bus = Bus::open(dir.path()).unwrap();
        let readers: Vec<_> = topics
            .iter()
            .map(|&topic| {
                let mut sub = bus.subscribe(topic, 0);
                tokio::spawn(async move {
                    let mut got = Vec::new();
                    for _ in 0..N / 4 {
                        got.push((*sub.next().await).clone());
                    }
                    got
                })
            })
            .collect();
        let publisher = {
            let bus = bus.clone();
            tokio::spawn(async move {
                for i in 0..N {
                    let p = payload(i);
                    bus.publish(p.topic(), ts(28, 12, 0), p).unwrap();
                    if i % 64 == 0 {
                        tokio::task::yield_now().await;
                    }
                }
            })
        };
        publisher.await.unwrap();
        let mut live = Vec::new();
        for r in readers {
            live.push(r.await.unwrap());
        }
        let stored: Vec<Vec<_>> =
            topics.iter().map(|&t| bus.events(t, 0, usize::MAX).iter().map(|e| (**e).clone()).collect()).collect();
        (live, stored)
    });
    let reopened = Bus::open(dir.path()).unwrap();
    let replayed: Vec<Vec<_>> =
        topics.iter().map(|&t| reopened.events(t, 0, usize::MAX).iter().map(|e| (**e).clone()).collect()).collect();
    let live_ok = live == stored && stored == replayed && live.iter().map(Vec::len).sum::<usize>() == N as usize;
    let seq_ok = stored.iter().all(|events| events.iter().enumerate().all(|(i, e)| e.seq == i as u64));
    drop(reopened);

    // truncation, on a smaller log so every boundary can be tried
    let small = tempfile::tempdir().unwrap();
    {
        let bus = Bus::open(small.path()).unwrap();
        for i in 0..300 {
            let p = payload(i);
            bus.publish(p.topic(), ts(28, 12, 0), p).unwrap();
        }
    }
    let log_path = small.path().join(LOG_FILE);
    let bytes = std::fs::read(&log_path).unwrap();
    let full = read_log(&log_path).unwrap();
    let mut cuts: Vec<(u64, usize)> = full.offsets.iter().enumerate().map(|(i, &o)| (o, i)).collect();
    cuts.push((bytes.len() as u64, full.events.len()));
    let boundary_count = cuts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let k = rng.random_range(0..full.offsets.len());
        let end = full.offsets.get(k + 1).copied().unwrap_or(bytes.len() as u64);
        let cut = rng.random_range(full.offsets[k] + 1..end);
        cuts.push((cut, k));
    }
    let mut bad = Vec::new();
    let scratch = tempfile::tempdir().unwrap();
    for &(cut, expect) in &cuts {
        let path = scratch.path().join(LOG_FILE);
        std::fs::write(&path, &bytes[..cut as usize]).unwrap();
        let prefix = match read_log(&path) {
            Ok(p) => p,
            Err(e) => {
                bad.push(format!("cut {cut}: {e}"));
                continue;
            }
        };
        if prefix.events.len() != expect || prefix.events[..] != full.events[..expect] {
            bad.push(format!("cut {cut}: {} events, expected {expect}", prefix.events.len()));
        }
        let _ = std::fs::remove_file(scratch.path().join(adlmon_core::pipeline::INDEX_FILE));
        match Bus::open(scratch.path()) {
            Ok(bus) => {
                let n: u64 = Topic::ALL.iter().map(|&t| bus.len(t)).sum();
                if n != expect as u64 {
                    bad.push(format!("cut {cut}: reopened bus holds {n}, expected {expect}"));
                }
            }
            Err(e) => bad.push(format!("cut {cut}: reopen failed: {e}")),
        }
        if std::fs::metadata(&path).unwrap().len() != prefix.valid_len {
            bad.push(format!("cut {cut}: torn tail not truncated"));
        }
        if bad.len() > 5 {
            break;
        }
    }
    verdict(
        live_ok && seq_ok && bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{N} events: live == stored == replayed after reopen: {live_ok}, per-topic seq from 0: {seq_ok}; \
                 {} record boundaries and 200 torn cuts recover exact prefixes",
                boundary_count
            )
        } else {
            bad.join("; ")
        },
    )
}

// --------------------------------------------------------------------------

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("HMM reproduction", hmm_reproduction),
        ("anomaly-detector reproduction", detector_reproduction),
        ("decoder oracle", decoder_oracle),
        ("rule-label suite", rule_suite),
        ("stochastic-matrix invariants", stochastic_invariants),
        ("dialogue golden strings", dialogue_golden),
        ("end-to-end determinism", end_to_end),
        ("pub-sub contract", pubsub_contract),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            fail(format!("panicked: {msg}"))
        });
        let label = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Report => "REPORT",
        };
        println!(
            "criterion {} {name}: {label} [{:.1}s] {}",
            i + 1,
            started.elapsed().as_secs_f64(),
            outcome.detail
        );
        if outcome.status == Status::Fail {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: FAILED criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all gating criteria passed");
}
