use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::config::fill;
use super::render::{render_abnormal_event, render_activity_event};
use super::{
    classify_intent, DialogueError, DialogueMessage, DialogueState, Intent, IntentSet, PendingRequest,
    RequestStatus, Role, SessionId, Speaker, VerbTable,
};
use crate::anomaly::{AnomalyVerdict, ContextFeatures};
use crate::label::ActivityLabel;

/// A completed activity segment reported by monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub label: ActivityLabel,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbnormalEvent {
    pub verdict: AnomalyVerdict,
    pub features: ContextFeatures,
    pub start: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DialogueEvent {
    Utterance { session: SessionId, text: String },
    Abnormal(AbnormalEvent),
    ActivityCompleted(ActivityEvent),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SideEffect {
    StateChanged { session: SessionId, from: DialogueState, to: DialogueState },
    RequestStored { request: PendingRequest },
    RequestPrompted { request: PendingRequest },
    RequestAnswered { request: PendingRequest },
    RequestDeclined { request: PendingRequest },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    /// Every message appended to any transcript, in order.
    pub messages: Vec<DialogueMessage>,
    pub effects: Vec<SideEffect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub role: Role,
    pub name: String,
    pub state: DialogueState,
    pub transcript: Vec<DialogueMessage>,
    /// Request currently being asked in this session.
    pub awaiting: Option<u64>,
}

/// Session store plus the shared request queue.
#[derive(Debug, Clone)]
pub struct DialogueEngine {
    intents: IntentSet,
    verbs: VerbTable,
    subject: String,
    sessions: BTreeMap<SessionId, Session>,
    requests: Vec<PendingRequest>,
    latest_activity: Option<ActivityEvent>,
    latest_abnormal: Option<AbnormalEvent>,
    next_session: SessionId,
}

impl DialogueEngine {
    /// `subject` is the monitored older adult, as named in explanations.
    pub fn new(subject: impl Into<String>) -> Self {
        Self::with_config(subject, IntentSet::default(), VerbTable::default())
    }

    pub fn with_config(subject: impl Into<String>, intents: IntentSet, verbs: VerbTable) -> Self {
        DialogueEngine {
            intents,
            verbs,
            subject: subject.into(),
            sessions: BTreeMap::new(),
            requests: Vec::new(),
            latest_activity: None,
            latest_abnormal: None,
            next_session: 1,
        }
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn verbs(&self) -> &VerbTable {
        &self.verbs
    }

    pub fn session(&self, id: SessionId) -> Option<&Session> {
        self.sessions.get(&id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    pub fn requests(&self) -> &[PendingRequest] {
        &self.requests
    }

    pub fn latest_abnormal(&self) -> Option<&AbnormalEvent> {
        self.latest_abnormal.as_ref()
    }

    /// Opens a session in `Init` and greets its user.
    pub fn open_session(&mut self, role: Role, name: &str, ts: NaiveDateTime) -> (SessionId, StepOutcome) {
        let id = self.next_session;
        self.next_session += 1;
        let name = if name.trim().is_empty() { self.default_name(role) } else { name.trim().to_string() };
        self.sessions.insert(
            id,
            Session { id, role, name, state: DialogueState::Init, transcript: Vec::new(), awaiting: None },
        );
        let mut out = StepOutcome::default();
        let greeting = self.greeting(id);
        self.say(id, Speaker::System, greeting, ts, &mut out);
        (id, out)
    }

    fn default_name(&self, role: Role) -> String {
        match role {
            Role::Caregiver => "there".into(),
            Role::OlderAdult => self.subject.clone(),
        }
    }

    pub fn step(&mut self, event: DialogueEvent, ts: NaiveDateTime) -> Result<StepOutcome, DialogueError> {
        let mut out = StepOutcome::default();
        match event {
            DialogueEvent::Utterance { session, text } => self.utterance(session, &text, ts, &mut out)?,
            DialogueEvent::Abnormal(event) => self.latest_abnormal = Some(event),
            DialogueEvent::ActivityCompleted(event) => self.activity_completed(event, ts, &mut out)?,
        }
        Ok(out)
    }

    fn utterance(
        &mut self,
        id: SessionId,
        text: &str,
        ts: NaiveDateTime,
        out: &mut StepOutcome,
    ) -> Result<(), DialogueError> {
        let session = self.sessions.get(&id).ok_or(DialogueError::UnknownSession(id))?;
        let text = text.trim();
        if text.is_empty() {
            return Err(DialogueError::EmptyUtterance);
        }
        let (role, state) = (session.role, session.state);
        self.say(id, role.into(), text.to_string(), ts, out);
        let intent = classify_intent(text, &self.intents);

        if state == DialogueState::PromptToConfirm {
            return self.answer(id, intent, text, ts, out);
        }
        match (intent, role) {
            (Intent::Greet, _) => {
                self.move_to(id, DialogueState::Init, out);
                let greeting = self.greeting(id);
                self.say(id, Speaker::System, greeting, ts, out);
            }
            (Intent::ExplainActivity, _) => {
                self.move_to(id, DialogueState::ExplainActivityEvents, out);
                let reply = match &self.latest_activity {
                    Some(a) => render_activity_event(
                        &self.subject,
                        a.label,
                        &self.verbs.forms(a.label).location,
                        a.start.time(),
                        &self.verbs,
                    )?,
                    None => self.verbs.templates.no_activity.clone(),
                };
                self.say(id, Speaker::System, reply, ts, out);
            }
            (Intent::ExplainAbnormal, _) => {
                self.move_to(id, DialogueState::ExplainAbnormalEvents, out);
                let reply = match &self.latest_abnormal {
                    Some(a) => render_abnormal_event(&self.subject, &a.verdict, &a.features, &self.verbs)?,
                    None => self.verbs.templates.no_abnormal.clone(),
                };
                self.say(id, Speaker::System, reply, ts, out);
            }
            (Intent::RequestFollowup, Role::Caregiver) => match extract_question(text) {
                Some(question) => {
                    self.move_to(id, DialogueState::StoreRequest, out);
                    let request = PendingRequest {
                        id: self.requests.len() as u64 + 1,
                        from_session: id,
                        target_user: self.subject.clone(),
                        question_text: question.clone(),
                        context: self.latest_abnormal.as_ref().map(|a| a.verdict.label),
                        created_at: ts,
                        status: RequestStatus::Stored,
                        answer: None,
                    };
                    self.requests.push(request.clone());
                    out.effects.push(SideEffect::RequestStored { request });
                    let reply = fill(&self.verbs.templates.store_request, &[("question", &question)]);
                    self.say(id, Speaker::System, reply, ts, out);
                }
                None => self.reprompt(id, ts, out),
            },
            _ => self.reprompt(id, ts, out),
        }
        Ok(())
    }

    fn answer(
        &mut self,
        id: SessionId,
        intent: Intent,
        text: &str,
        ts: NaiveDateTime,
        out: &mut StepOutcome,
    ) -> Result<(), DialogueError> {
        let status = match intent {
            Intent::ConfirmYes | Intent::ConfirmNo => RequestStatus::Answered,
            Intent::DeclineShare => RequestStatus::Declined,
            _ => {
                self.move_to(id, DialogueState::PromptToConfirm, out);
                let reply = self.verbs.templates.reprompt_confirm.clone();
                self.say(id, Speaker::System, reply, ts, out);
                return Ok(());
            }
        };
        let awaiting = self.sessions[&id].awaiting;
        let Some(req_index) = awaiting.and_then(|r| self.requests.iter().position(|q| q.id == r)) else {
            // Nothing left to answer; fall back to the start state.
            self.move_to(id, DialogueState::Init, out);
            return Ok(());
        };
        let request = &mut self.requests[req_index];
        request.advance(status)?;
        let t = &self.verbs.templates;
        let (ack, forward) = if status == RequestStatus::Answered {
            request.answer = Some(text.to_string());
            let forward = fill(
                &t.answered,
                &[("user", &request.target_user), ("answer", text), ("question", &request.question_text)],
            );
            (t.thanks.clone(), forward)
        } else {
            (t.decline_ack.clone(), fill(&t.declined, &[("user", &request.target_user)]))
        };
        let request = request.clone();
        out.effects.push(if status == RequestStatus::Answered {
            SideEffect::RequestAnswered { request: request.clone() }
        } else {
            SideEffect::RequestDeclined { request: request.clone() }
        });
        self.sessions.get_mut(&id).expect("session exists").awaiting = None;
        self.move_to(id, DialogueState::Init, out);
        self.say(id, Speaker::System, ack, ts, out);
        if self.sessions.contains_key(&request.from_session) {
            self.say(request.from_session, Speaker::System, forward, ts, out);
        }
        Ok(())
    }

    fn activity_completed(
        &mut self,
        event: ActivityEvent,
        ts: NaiveDateTime,
        out: &mut StepOutcome,
    ) -> Result<(), DialogueError> {
        self.latest_activity = Some(event);
        if !matches!(event.label, ActivityLabel::SpareTimeTV | ActivityLabel::IdleUnlabeled) {
            return Ok(());
        }
        let Some(req_index) = self.requests.iter().position(|r| r.status == RequestStatus::Stored) else {
            return Ok(());
        };
        let Some(target) = self
            .sessions
            .values()
            .find(|s| s.role == Role::OlderAdult && s.state != DialogueState::PromptToConfirm)
            .map(|s| s.id)
        else {
            return Ok(());
        };
        let request = &mut self.requests[req_index];
        request.advance(RequestStatus::Prompted)?;
        let t = &self.verbs.templates;
        let mut text = String::new();
        if let Some(context) = request.context {
            text.push_str(&fill(&t.prompt_context, &[("noun", &self.verbs.forms(context).noun)]));
            text.push(' ');
        }
        text.push_str(&fill(&t.prompt, &[("question", &second_person(&request.question_text))]));
        let request = request.clone();
        out.effects.push(SideEffect::RequestPrompted { request: request.clone() });
        self.sessions.get_mut(&target).expect("session exists").awaiting = Some(request.id);
        self.move_to(target, DialogueState::PromptToConfirm, out);
        self.say(target, Speaker::System, text, ts, out);
        Ok(())
    }

    fn greeting(&self, id: SessionId) -> String {
        fill(&self.verbs.templates.greeting, &[("name", &self.sessions[&id].name)])
    }

    fn reprompt(&mut self, id: SessionId, ts: NaiveDateTime, out: &mut StepOutcome) {
        let text = self.verbs.templates.reprompt.clone();
        self.say(id, Speaker::System, text, ts, out);
    }

    fn move_to(&mut self, id: SessionId, to: DialogueState, out: &mut StepOutcome) {
        let session = self.sessions.get_mut(&id).expect("session exists");
        let from = session.state;
        assert!(from.can_move_to(to), "undeclared edge {from} -> {to}");
        session.state = to;
        if from != to {
            out.effects.push(SideEffect::StateChanged { session: id, from, to });
        }
    }

    fn say(&mut self, id: SessionId, speaker: Speaker, text: String, ts: NaiveDateTime, out: &mut StepOutcome) {
        let message = DialogueMessage { session_id: id, speaker, text, timestamp: ts };
        self.sessions.get_mut(&id).expect("session exists").transcript.push(message.clone());
        out.messages.push(message);
    }
}

fn bare(word: &str) -> &str {
    word.trim_matches(|c: char| !c.is_alphanumeric())
}

/// The clause after the first "if" or "whether", without end punctuation.
pub fn extract_question(utterance: &str) -> Option<String> {
    let words: Vec<&str> = utterance.split_whitespace().collect();
    let at = words
        .iter()
        .position(|w| bare(w).eq_ignore_ascii_case("if") || bare(w).eq_ignore_ascii_case("whether"))?;
    let clause = words[at + 1..].join(" ");
    let clause = clause.trim_end_matches(['?', '.', '!', ' ']);
    (!clause.is_empty()).then(|| clause.to_string())
}

/// Rewrites a third-person clause for the older adult: "she has a dietary
/// problem" becomes "you have any dietary problem".
pub fn second_person(clause: &str) -> String {
    let mut out = Vec::new();
    let mut after_has = false;
    let mut article_done = false;
    for word in clause.split_whitespace() {
        let core = bare(word);
        let lower = core.to_lowercase();
        let replacement = match lower.as_str() {
            "she" | "he" | "they" | "him" | "them" => Some("you"),
            "her" | "his" | "their" => Some("your"),
            "herself" | "himself" | "themselves" => Some("yourself"),
            "has" => Some("have"),
            "is" => Some("are"),
            "was" => Some("were"),
            "does" => Some("do"),
            "a" | "an" if after_has && !article_done => {
                article_done = true;
                Some("any")
            }
            _ => None,
        };
        after_has = lower == "has";
        out.push(match replacement {
            Some(r) if !core.is_empty() => word.replacen(core, r, 1),
            _ => word.to_string(),
        });
    }
    out.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anomaly::Feature;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn ts(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2011, 11, 28).unwrap().and_hms_opt(h, m, 0).unwrap()
    }

    fn say(engine: &mut DialogueEngine, session: SessionId, text: &str) -> StepOutcome {
        engine.step(DialogueEvent::Utterance { session, text: text.into() }, ts(9, 0)).unwrap()
    }

    fn completed(engine: &mut DialogueEngine, label: ActivityLabel) -> StepOutcome {
        let event = ActivityEvent { label, start: ts(8, 30), end: ts(9, 0) };
        engine.step(DialogueEvent::ActivityCompleted(event), ts(9, 0)).unwrap()
    }

    fn abnormal(label: ActivityLabel, feature: Feature, above: bool, expected: ActivityLabel) -> AbnormalEvent {
        let mut flags: BTreeMap<Feature, bool> = Feature::ALL.into_iter().map(|f| (f, false)).collect();
        flags.insert(feature, true);
        AbnormalEvent {
            verdict: AnomalyVerdict {
                label,
                flags,
                any: true,
                expected_next: expected,
                above_expected: [(feature, above)].into_iter().collect(),
            },
            features: ContextFeatures {
                label,
                prev_label: Some(ActivityLabel::Sleeping),
                transition_prob: 0.4,
                duration_min: 200,
                frequency_today: 1,
                start_hour: 3.0,
            },
            start: ts(3, 0),
        }
    }

    fn last_text(out: &StepOutcome) -> &str {
        &out.messages.last().unwrap().text
    }

    #[test]
    fn greets_on_open() {
        let mut engine = DialogueEngine::new("Alice");
        let (id, out) = engine.open_session(Role::Caregiver, "Bob", ts(8, 0));
        assert_eq!(last_text(&out), "Hello Bob, how can I help you today?");
        assert_eq!(engine.session(id).unwrap().state, DialogueState::Init);
    }

    #[test]
    fn explains_latest_events() {
        let mut engine = DialogueEngine::new("Alice");
        let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(8, 0));
        assert_eq!(last_text(&say(&mut engine, cg, "why abnormal?")), "No abnormal event has been detected.");
        let event = abnormal(ActivityLabel::Leaving, Feature::Duration, true, ActivityLabel::Sleeping);
        engine.step(DialogueEvent::Abnormal(event), ts(8, 0)).unwrap();
        let out = say(&mut engine, cg, "explain");
        assert_eq!(
            last_text(&out),
            "Alice spent much more time in going out. Alice should have slept instead of going out"
        );
        assert_eq!(engine.session(cg).unwrap().state, DialogueState::ExplainAbnormalEvents);

        completed(&mut engine, ActivityLabel::SpareTimeTV);
        let out = say(&mut engine, cg, "what is she doing now");
        assert_eq!(last_text(&out), "Alice took a rest in the living room at 8:30");
        assert_eq!(engine.session(cg).unwrap().state, DialogueState::ExplainActivityEvents);
    }

    #[test]
    fn follow_up_golden_flow() {
        let mut engine = DialogueEngine::new("Alice");
        let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(8, 0));
        let (oa, _) = engine.open_session(Role::OlderAdult, "Alice", ts(8, 0));
        let event = abnormal(ActivityLabel::Toileting, Feature::Frequency, true, ActivityLabel::Sleeping);
        engine.step(DialogueEvent::Abnormal(event), ts(8, 0)).unwrap();

        let out = say(&mut engine, cg, "check if she has a dietary problem");
        assert_eq!(last_text(&out), "I will confirm whether she has a dietary problem");
        assert_eq!(engine.session(cg).unwrap().state, DialogueState::StoreRequest);
        assert_eq!(engine.requests()[0].status, RequestStatus::Stored);

        // Not an eligible moment.
        assert!(completed(&mut engine, ActivityLabel::Lunch).messages.is_empty());
        assert_eq!(engine.requests()[0].status, RequestStatus::Stored);

        let out = completed(&mut engine, ActivityLabel::SpareTimeTV);
        assert_eq!(
            last_text(&out),
            "I found you have an abnormal event of a toilet. I was wondering if you have any dietary problem?"
        );
        assert_eq!(out.messages[0].session_id, oa);
        assert_eq!(engine.requests()[0].status, RequestStatus::Prompted);
        assert_eq!(engine.session(oa).unwrap().state, DialogueState::PromptToConfirm);

        // Prompted at most once.
        assert!(completed(&mut engine, ActivityLabel::IdleUnlabeled).messages.is_empty());

        let out = say(&mut engine, oa, "hmm");
        assert!(last_text(&out).starts_with("Sorry"));
        assert_eq!(engine.session(oa).unwrap().state, DialogueState::PromptToConfirm);

        let out = say(&mut engine, oa, "yes, a little");
        assert_eq!(engine.requests()[0].status, RequestStatus::Answered);
        assert_eq!(engine.session(oa).unwrap().state, DialogueState::Init);
        let to_caregiver: Vec<_> = out.messages.iter().filter(|m| m.session_id == cg).collect();
        assert_eq!(to_caregiver.len(), 1);
        assert_eq!(to_caregiver[0].text, "Alice answered \"yes, a little\" to whether she has a dietary problem");
    }

    #[test]
    fn decline_forwards_only_the_notice() {
        let mut engine = DialogueEngine::new("Alice");
        let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(8, 0));
        let (oa, _) = engine.open_session(Role::OlderAdult, "Alice", ts(8, 0));
        say(&mut engine, cg, "please check whether she is sleeping well?");
        completed(&mut engine, ActivityLabel::IdleUnlabeled);
        let before = engine.session(cg).unwrap().transcript.len();
        let withheld = "I would rather not share my insomnia";
        let out = say(&mut engine, oa, withheld);
        assert_eq!(engine.requests()[0].status, RequestStatus::Declined);
        assert_eq!(engine.requests()[0].answer, None);
        let transcript = &engine.session(cg).unwrap().transcript;
        assert_eq!(transcript.len(), before + 1);
        assert_eq!(transcript.last().unwrap().text, "Alice declined to share");
        assert!(transcript.iter().all(|m| !m.text.contains("insomnia")));
        assert!(out.effects.iter().any(|e| matches!(e, SideEffect::RequestDeclined { .. })));
    }

    #[test]
    fn request_without_clause_reprompts() {
        let mut engine = DialogueEngine::new("Alice");
        let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(8, 0));
        let out = say(&mut engine, cg, "check");
        assert!(last_text(&out).starts_with("Sorry"));
        assert!(engine.requests().is_empty());
        let (oa, _) = engine.open_session(Role::OlderAdult, "Alice", ts(8, 0));
        say(&mut engine, oa, "check if he is fine");
        assert!(engine.requests().is_empty());
    }

    #[test]
    fn rewrites_to_second_person() {
        assert_eq!(second_person("she has a dietary problem"), "you have any dietary problem");
        assert_eq!(second_person("he is taking his pills"), "you are taking your pills");
        assert_eq!(second_person("She has an itch and a cough"), "you have any itch and a cough");
        assert_eq!(extract_question("Check if she has a dietary problem?"), Some("she has a dietary problem".into()));
        assert_eq!(extract_question("ask whether: he slept."), Some("he slept".into()));
        assert_eq!(extract_question("check on her"), None);
    }

    #[test]
    fn empty_utterance_and_unknown_session() {
        let mut engine = DialogueEngine::new("Alice");
        let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(8, 0));
        let err = engine.step(DialogueEvent::Utterance { session: cg, text: "  ".into() }, ts(8, 0));
        assert!(matches!(err, Err(DialogueError::EmptyUtterance)));
        let err = engine.step(DialogueEvent::Utterance { session: 99, text: "hi".into() }, ts(8, 0));
        assert!(matches!(err, Err(DialogueError::UnknownSession(99))));
    }

    const UTTERANCES: [&str; 12] = [
        "hello",
        "explain",
        "what is she doing",
        "check if she has a dietary problem",
        "yes",
        "no",
        "I'd rather not share",
        "banana",
        "hello yes",
        "why abnormal",
        "ask whether he slept well",
        "nope",
    ];

    fn run_events(ops: &[(u8, u8)]) -> DialogueEngine {
        let mut engine = DialogueEngine::new("Alice");
        let (cg, _) = engine.open_session(Role::Caregiver, "Bob", ts(0, 0));
        let (oa, _) = engine.open_session(Role::OlderAdult, "Alice", ts(0, 0));
        let mut last_status: BTreeMap<u64, RequestStatus> = BTreeMap::new();
        for &(kind, arg) in ops {
            let event = match kind % 4 {
                0 => DialogueEvent::Utterance { session: cg, text: UTTERANCES[arg as usize % 12].into() },
                1 => DialogueEvent::Utterance { session: oa, text: UTTERANCES[arg as usize % 12].into() },
                2 => {
                    let label = ActivityLabel::ALL[arg as usize % ActivityLabel::COUNT];
                    DialogueEvent::ActivityCompleted(ActivityEvent { label, start: ts(1, 0), end: ts(2, 0) })
                }
                _ => {
                    let label = ActivityLabel::ALL[arg as usize % ActivityLabel::COUNT];
                    let feature = Feature::ALL[arg as usize % 4];
                    DialogueEvent::Abnormal(abnormal(label, feature, arg % 2 == 0, ActivityLabel::Sleeping))
                }
            };
            let spoken = match &event {
                DialogueEvent::Utterance { session, text } if *session == oa => Some(text.clone()),
                _ => None,
            };
            let out = engine.step(event, ts(3, 0)).unwrap();
            for effect in &out.effects {
                if let SideEffect::StateChanged { from, to, .. } = effect {
                    assert!(from.can_move_to(*to));
                }
            }
            for r in engine.requests() {
                let prev = last_status.insert(r.id, r.status);
                if let Some(prev) = prev {
                    assert!(prev == r.status || prev.can_move_to(r.status));
                }
            }
            let declined = out.effects.iter().any(|e| matches!(e, SideEffect::RequestDeclined { .. }));
            if let (true, Some(withheld)) = (declined, spoken) {
                let caregiver = &engine.session(cg).unwrap().transcript;
                assert!(caregiver.iter().all(|m| m.speaker != Speaker::System || !m.text.contains(&withheld)));
            }
        }
        engine
    }

    proptest! {
        #[test]
        fn random_events_stay_in_declared_states(ops in proptest::collection::vec((0u8..4, any::<u8>()), 0..200)) {
            let engine = run_events(&ops);
            for s in engine.sessions() {
                prop_assert!(DialogueState::ALL.contains(&s.state));
                prop_assert!(s.transcript.iter().all(|m| !m.text.is_empty()));
            }
        }
    }
}
