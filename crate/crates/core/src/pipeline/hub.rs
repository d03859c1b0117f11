use chrono::NaiveDateTime;
use parking_lot::Mutex;

use super::{Bus, Payload, PipelineError, Topic};
use crate::dialogue::{
    DialogueEngine, DialogueEvent, DialogueMessage, Role, SessionId, SideEffect, Speaker, StepOutcome,
};

/// Text published in place of an answer the older adult declined to share.
pub const WITHHELD: &str = "(withheld)";

/// The dialogue engine behind a lock, publishing everything it emits.
#[derive(Debug)]
pub struct DialogueHub {
    engine: Mutex<DialogueEngine>,
    bus: Bus,
}

impl DialogueHub {
    pub fn new(engine: DialogueEngine, bus: Bus) -> Self {
        DialogueHub { engine: Mutex::new(engine), bus }
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn open_session(
        &self,
        role: Role,
        name: &str,
        ts: NaiveDateTime,
    ) -> Result<(SessionId, Vec<DialogueMessage>), PipelineError> {
        let mut engine = self.engine.lock();
        let (id, outcome) = engine.open_session(role, name, ts);
        self.publish(&outcome, ts)?;
        Ok((id, outcome.messages))
    }

    pub fn step(&self, event: DialogueEvent, ts: NaiveDateTime) -> Result<StepOutcome, PipelineError> {
        let mut engine = self.engine.lock();
        let outcome = engine.step(event, ts)?;
        self.publish(&outcome, ts)?;
        Ok(outcome)
    }

    /// Read access to the engine state.
    pub fn read<R>(&self, f: impl FnOnce(&DialogueEngine) -> R) -> R {
        f(&self.engine.lock())
    }

    fn publish(&self, outcome: &StepOutcome, ts: NaiveDateTime) -> Result<(), PipelineError> {
        let declined = outcome.effects.iter().any(|e| matches!(e, SideEffect::RequestDeclined { .. }));
        for m in &outcome.messages {
            let mut m = m.clone();
            if declined && m.speaker == Speaker::OlderAdult {
                m.text = WITHHELD.into();
            }
            self.bus.publish(Topic::DialogueMessage, ts, Payload::DialogueMessage(m))?;
        }
        for effect in &outcome.effects {
            match effect {
                SideEffect::RequestStored { request } => {
                    self.bus.publish(Topic::RequestStored, ts, Payload::RequestStored(request.clone()))?;
                }
                SideEffect::RequestAnswered { request } | SideEffect::RequestDeclined { request } => {
                    self.bus.publish(Topic::RequestAnswered, ts, Payload::RequestAnswered(request.clone()))?;
                }
                SideEffect::RequestPrompted { .. } | SideEffect::StateChanged { .. } => {}
            }
        }
        Ok(())
    }
}
