use std::collections::VecDeque;

use adlmon_core::pipeline::BusEvent;
use futures::{Stream, StreamExt};

use crate::{ClientError, Result};

/// Data payload of one complete server-sent event frame, if it has one.
fn frame_data(frame: &str) -> Option<String> {
    let lines: Vec<&str> = frame
        .lines()
        .filter_map(|l| l.strip_prefix("data:"))
        .map(|d| d.strip_prefix(' ').unwrap_or(d))
        .collect();
    (!lines.is_empty()).then(|| lines.join("\n"))
}

pub(crate) fn events<S, B>(bytes: S) -> impl Stream<Item = Result<BusEvent>>
where
    S: Stream<Item = reqwest::Result<B>> + Unpin,
    B: AsRef<[u8]>,
{
    let state = (bytes, String::new(), VecDeque::<Result<BusEvent>>::new());
    futures::stream::unfold(state, |(mut bytes, mut buf, mut ready)| async move {
        loop {
            if let Some(item) = ready.pop_front() {
                return Some((item, (bytes, buf, ready)));
            }
            let chunk = match bytes.next().await? {
                Ok(c) => c,
                Err(e) => return Some((Err(ClientError::Transport(e)), (bytes, buf, ready))),
            };
            buf.push_str(&String::from_utf8_lossy(chunk.as_ref()).replace("\r\n", "\n"));
            while let Some(end) = buf.find("\n\n") {
                let frame: String = buf.drain(..end + 2).collect();
                if let Some(data) = frame_data(&frame) {
                    ready.push_back(serde_json::from_str(&data).map_err(|e| ClientError::Decode(e.to_string())));
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames() {
        assert_eq!(frame_data("id: 3\nevent: notification\ndata: {\"a\":1}\n\n").as_deref(), Some("{\"a\":1}"));
        assert_eq!(frame_data(": keep-alive\n\n"), None);
        assert_eq!(frame_data("data:x\ndata:y\n\n").as_deref(), Some("x\ny"));
    }
}
