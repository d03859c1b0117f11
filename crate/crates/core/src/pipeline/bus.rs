use std::path::Path;
use std::sync::Arc;

use chrono::NaiveDateTime;
use parking_lot::{Mutex, RwLock};
use tokio::sync::watch;

use super::store::LogWriter;
use super::{BusEvent, Payload, PipelineError, Topic};

/// A subscriber this far behind reports itself as lagging.
pub const DEFAULT_LAG_LIMIT: u64 = 4096;

#[derive(Debug)]
struct TopicLog {
    events: RwLock<Vec<Arc<BusEvent>>>,
    published: watch::Sender<u64>,
}

#[derive(Debug)]
struct Inner {
    topics: Vec<Arc<TopicLog>>,
    writer: Mutex<Option<LogWriter>>,
    lag_limit: u64,
}

/// In-process publish / subscribe over the eight topics. Every event is kept,
/// so subscribers can start from any sequence number and never miss one.
#[derive(Debug, Clone)]
pub struct Bus {
    inner: Arc<Inner>,
}

impl Bus {
    pub fn in_memory() -> Self {
        Self::build(None, Vec::new(), DEFAULT_LAG_LIMIT)
    }

    /// Opens (or creates) a persistent bus in `dir`, replaying its log.
    pub fn open(dir: &Path) -> Result<Self, PipelineError> {
        let (writer, events) = LogWriter::open(dir)?;
        let mut expected = [0u64; Topic::ALL.len()];
        for e in &events {
            let next = &mut expected[e.topic.index()];
            if e.seq != *next {
                return Err(PipelineError::Corrupt {
                    offset: 0,
                    reason: format!("{} seq {} follows {}", e.topic, e.seq, *next as i64 - 1),
                });
            }
            *next += 1;
        }
        Ok(Self::build(Some(writer), events, DEFAULT_LAG_LIMIT))
    }

    fn build(writer: Option<LogWriter>, events: Vec<BusEvent>, lag_limit: u64) -> Self {
        let mut per_topic: Vec<Vec<Arc<BusEvent>>> = vec![Vec::new(); Topic::ALL.len()];
        for e in events {
            per_topic[e.topic.index()].push(Arc::new(e));
        }
        let topics = per_topic
            .into_iter()
            .map(|events| {
                let (published, _) = watch::channel(events.len() as u64);
                Arc::new(TopicLog { events: RwLock::new(events), published })
            })
            .collect();
        Bus { inner: Arc::new(Inner { topics, writer: Mutex::new(writer), lag_limit }) }
    }

    pub fn with_lag_limit(self, lag_limit: u64) -> Self {
        let inner = Arc::try_unwrap(self.inner).expect("lag limit is set before the bus is shared");
        Bus { inner: Arc::new(Inner { lag_limit, ..inner }) }
    }

    fn topic(&self, topic: Topic) -> &Arc<TopicLog> {
        &self.inner.topics[topic.index()]
    }

    /// Appends `payload` to `topic` and returns its sequence number.
    pub fn publish(&self, topic: Topic, ts: NaiveDateTime, payload: Payload) -> Result<u64, PipelineError> {
        if payload.topic() != topic {
            return Err(PipelineError::SchemaMismatch { topic, found: payload.topic() });
        }
        let mut writer = self.inner.writer.lock();
        let log = self.topic(topic);
        let mut events = log.events.write();
        let seq = events.len() as u64;
        let event = BusEvent { topic, seq, ts, payload };
        if let Some(w) = writer.as_mut() {
            w.append(&event, &event.to_json())?;
        }
        events.push(Arc::new(event));
        drop(events);
        log.published.send_replace(seq + 1);
        Ok(seq)
    }

    /// Events from `from_seq` on, then live ones.
    pub fn subscribe(&self, topic: Topic, from_seq: u64) -> Subscription {
        let log = Arc::clone(self.topic(topic));
        let rx = log.published.subscribe();
        Subscription { log, next: from_seq, rx, lag_limit: self.inner.lag_limit }
    }

    pub fn len(&self, topic: Topic) -> u64 {
        self.topic(topic).events.read().len() as u64
    }

    pub fn is_empty(&self) -> bool {
        Topic::ALL.iter().all(|&t| self.len(t) == 0)
    }

    /// Up to `limit` stored events of `topic` starting at `from_seq`.
    pub fn events(&self, topic: Topic, from_seq: u64, limit: usize) -> Vec<Arc<BusEvent>> {
        let events = self.topic(topic).events.read();
        events.iter().skip(from_seq as usize).take(limit).cloned().collect()
    }
}

/// Ordered, gap-free view of one topic.
#[derive(Debug)]
pub struct Subscription {
    log: Arc<TopicLog>,
    next: u64,
    rx: watch::Receiver<u64>,
    lag_limit: u64,
}

impl Subscription {
    pub fn try_next(&mut self) -> Option<Arc<BusEvent>> {
        let event = self.log.events.read().get(self.next as usize).cloned()?;
        self.next += 1;
        Some(event)
    }

    /// Waits for the next event.
    pub async fn next(&mut self) -> Arc<BusEvent> {
        loop {
            self.rx.borrow_and_update();
            if let Some(event) = self.try_next() {
                return event;
            }
            // The sender lives in the shared topic log, so this cannot close.
            let _ = self.rx.changed().await;
        }
    }

    /// Sequence number of the next event to be delivered.
    pub fn position(&self) -> u64 {
        self.next
    }

    /// Published events not yet delivered.
    pub fn lag(&self) -> u64 {
        (self.log.events.read().len() as u64).saturating_sub(self.next)
    }

    /// Backpressure signal: true once the subscriber is more than the lag
    /// limit behind. Nothing is dropped either way.
    pub fn lagging(&self) -> bool {
        self.lag() > self.lag_limit
    }
}
