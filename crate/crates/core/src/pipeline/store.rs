use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use super::{BusEvent, PipelineError, Topic};

pub const LOG_FILE: &str = "events.log";
pub const INDEX_FILE: &str = "events.idx";
pub const LOG_FORMAT_VERSION: u32 = 1;
const LOG_MAGIC: &[u8; 8] = b"ADLMLOG\0";
const INDEX_MAGIC: &[u8; 8] = b"ADLMIDX\0";
const HEADER_LEN: u64 = 12;

fn header(magic: &[u8; 8]) -> [u8; 12] {
    let mut h = [0u8; 12];
    h[..8].copy_from_slice(magic);
    h[8..].copy_from_slice(&LOG_FORMAT_VERSION.to_le_bytes());
    h
}

/// Events recovered from a log file.
#[derive(Debug, Clone)]
pub struct LogReplay {
    pub events: Vec<BusEvent>,
    /// Byte offset of each event's record.
    pub offsets: Vec<u64>,
    /// Byte length of the intact prefix.
    pub valid_len: u64,
    /// Whether an incomplete record followed the intact prefix.
    pub torn: bool,
}

/// Reads `[u32 LE length][JSON]` records after the header, stopping quietly
/// at a torn tail.
pub fn read_log(path: &Path) -> Result<LogReplay, PipelineError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN as usize || bytes[..8] != LOG_MAGIC[..] {
        return Err(PipelineError::BadHeader(path.display().to_string()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != LOG_FORMAT_VERSION {
        return Err(PipelineError::BadHeader(format!("{} has version {version}", path.display())));
    }
    let mut pos = HEADER_LEN as usize;
    let mut events = Vec::new();
    let mut offsets = Vec::new();
    let mut torn = false;
    while pos < bytes.len() {
        if bytes.len() - pos < 4 {
            torn = true;
            break;
        }
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().expect("4 bytes")) as usize;
        if bytes.len() - pos - 4 < len {
            torn = true;
            break;
        }
        let body = &bytes[pos + 4..pos + 4 + len];
        let event: BusEvent = serde_json::from_slice(body)
            .map_err(|e| PipelineError::Corrupt { offset: pos as u64, reason: e.to_string() })?;
        events.push(event);
        offsets.push(pos as u64);
        pos += 4 + len;
    }
    Ok(LogReplay { events, offsets, valid_len: pos as u64, torn })
}

/// Appends records to the log and `(topic, seq, offset)` entries to the index.
#[derive(Debug)]
pub(crate) struct LogWriter {
    log: File,
    index: File,
    offset: u64,
}

impl LogWriter {
    /// Opens `dir`, recovering any existing log. A torn tail is cut off and
    /// the index is rebuilt from the log.
    pub fn open(dir: &Path) -> Result<(Self, Vec<BusEvent>), PipelineError> {
        std::fs::create_dir_all(dir)?;
        let log_path = dir.join(LOG_FILE);
        let (events, offsets) = if log_path.exists() && std::fs::metadata(&log_path)?.len() > 0 {
            let replay = read_log(&log_path)?;
            let file = OpenOptions::new().write(true).open(&log_path)?;
            file.set_len(replay.valid_len)?;
            (replay.events, replay.offsets)
        } else {
            std::fs::write(&log_path, header(LOG_MAGIC))?;
            (Vec::new(), Vec::new())
        };
        let log = OpenOptions::new().append(true).open(&log_path)?;
        let offset = log.metadata()?.len();

        let mut index = Vec::with_capacity(HEADER_LEN as usize + events.len() * 17);
        index.extend_from_slice(&header(INDEX_MAGIC));
        for (e, &at) in events.iter().zip(&offsets) {
            index.extend_from_slice(&index_entry(e.topic, e.seq, at));
        }
        std::fs::write(dir.join(INDEX_FILE), index)?;
        let index = OpenOptions::new().append(true).open(dir.join(INDEX_FILE))?;
        Ok((LogWriter { log, index, offset }, events))
    }

    pub fn append(&mut self, event: &BusEvent, json: &str) -> Result<(), PipelineError> {
        let mut record = Vec::with_capacity(4 + json.len());
        record.extend_from_slice(&(json.len() as u32).to_le_bytes());
        record.extend_from_slice(json.as_bytes());
        self.log.write_all(&record)?;
        self.index.write_all(&index_entry(event.topic, event.seq, self.offset))?;
        self.offset += record.len() as u64;
        Ok(())
    }
}

fn index_entry(topic: Topic, seq: u64, offset: u64) -> [u8; 17] {
    let mut e = [0u8; 17];
    e[0] = topic.index() as u8;
    e[1..9].copy_from_slice(&seq.to_le_bytes());
    e[9..].copy_from_slice(&offset.to_le_bytes());
    e
}

/// Parses the index file into `(topic, seq, offset)` entries.
pub fn read_index(path: &Path) -> Result<Vec<(Topic, u64, u64)>, PipelineError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < HEADER_LEN as usize || bytes[..8] != INDEX_MAGIC[..] {
        return Err(PipelineError::BadHeader(path.display().to_string()));
    }
    Ok(bytes[HEADER_LEN as usize..]
        .chunks_exact(17)
        .filter_map(|c| {
            let topic = *Topic::ALL.get(c[0] as usize)?;
            let seq = u64::from_le_bytes(c[1..9].try_into().ok()?);
            let offset = u64::from_le_bytes(c[9..].try_into().ok()?);
            Some((topic, seq, offset))
        })
        .collect())
}
