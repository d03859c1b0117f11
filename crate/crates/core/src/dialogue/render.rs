use chrono::{NaiveTime, Timelike};

use super::config::fill;
use super::{DialogueError, VerbTable};
use crate::anomaly::{AnomalyVerdict, ContextFeatures, Feature};
use crate::label::ActivityLabel;

fn clock(time: NaiveTime) -> String {
    format!("{}:{:02}", time.hour(), time.minute())
}

/// "@user @what in the @where at @when", e.g. "Mike took a rest in the
/// living room at 8:30".
pub fn render_activity_event(
    user: &str,
    activity: ActivityLabel,
    location: &str,
    time: NaiveTime,
    verbs: &VerbTable,
) -> Result<String, DialogueError> {
    if user.trim().is_empty() {
        return Err(DialogueError::MissingSlot("user"));
    }
    if location.trim().is_empty() {
        return Err(DialogueError::MissingSlot("where"));
    }
    let what = &verbs.forms(activity).past;
    Ok(fill(
        &verbs.templates.activity,
        &[("user", user), ("what", what), ("where", location), ("when", &clock(time))],
    ))
}

/// One sentence per flagged feature, then the expected activity.
pub fn render_abnormal_event(
    user: &str,
    verdict: &AnomalyVerdict,
    features: &ContextFeatures,
    verbs: &VerbTable,
) -> Result<String, DialogueError> {
    if user.trim().is_empty() {
        return Err(DialogueError::MissingSlot("user"));
    }
    if !verdict.any {
        return Err(DialogueError::NotAbnormal);
    }
    let t = &verbs.templates;
    let forms = verbs.forms(verdict.label);
    let mut sentences = Vec::new();
    for feature in verdict.flagged_features() {
        let above = verdict.above_expected.get(&feature).copied().unwrap_or(false);
        let template = match (feature, above) {
            (Feature::Transition, _) if features.prev_label.is_none() => &t.transition_day_start,
            (Feature::Transition, _) => &t.transition,
            (Feature::Duration, true) => &t.duration_above,
            (Feature::Duration, false) => &t.duration_below,
            (Feature::Frequency, true) => &t.frequency_above,
            (Feature::Frequency, false) => &t.frequency_below,
            (Feature::StartHour, true) => &t.start_hour_above,
            (Feature::StartHour, false) => &t.start_hour_below,
        };
        let prev_gerund = features.prev_label.map_or("", |p| verbs.forms(p).gerund.as_str());
        sentences.push(fill(
            template,
            &[
                ("user", user),
                ("past", &forms.past),
                ("gerund", &forms.gerund),
                ("prev_gerund", prev_gerund),
            ],
        ));
    }
    if verdict.expected_next == verdict.label {
        return Ok(sentences.join(". "));
    }
    sentences.push(fill(
        &t.prediction,
        &[
            ("user", user),
            ("expected", &verbs.forms(verdict.expected_next).participle),
            ("gerund", &forms.gerund),
        ],
    ));
    Ok(sentences.join(". "))
}
