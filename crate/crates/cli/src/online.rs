use adlmon_client::Client;
use adlmon_core::dialogue::{DialogueMessage, Role, SessionId};
use adlmon_core::pipeline::Topic;
use futures::StreamExt;

use crate::error::CliError;

fn print_messages(messages: &[DialogueMessage]) {
    for m in messages {
        println!("{} {:?}: {}", m.timestamp.format("%Y-%m-%d %H:%M:%S"), m.speaker, m.text);
    }
}

pub async fn health(c: &Client) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(&c.health().await?).expect("serializes"));
    Ok(())
}

pub async fn open_session(c: &Client, role: Role, name: Option<&str>) -> Result<(), CliError> {
    let view = c.create_session(role, name).await?;
    println!("session {}", view.session_id);
    print_messages(&view.messages);
    Ok(())
}

pub async fn say(c: &Client, session: SessionId, text: &str) -> Result<(), CliError> {
    let reply = c.send_message(session, text).await?;
    print_messages(&reply.replies);
    Ok(())
}

pub async fn transcript(c: &Client, session: SessionId, jsonl: bool) -> Result<(), CliError> {
    if jsonl {
        print!("{}", c.transcript_jsonl(session).await?);
    } else {
        let view = c.transcript(session).await?;
        println!("session {} ({:?} {}) state {}", view.session_id, view.role, view.name, view.state.name());
        print_messages(&view.messages);
    }
    Ok(())
}

pub async fn requests(c: &Client, session: SessionId) -> Result<(), CliError> {
    for r in c.requests(session).await?.requests {
        let answer = r.answer.as_deref().unwrap_or("-");
        println!("{} {:?} {} | {}", r.id, r.status, r.question_text, answer);
    }
    Ok(())
}

pub async fn events(c: &Client, topic: Topic, from: u64, limit: usize) -> Result<(), CliError> {
    for e in c.events(topic, from, limit).await? {
        println!("{}", e.to_json());
    }
    Ok(())
}

pub async fn watch(c: &Client, resume_after: Option<u64>, count: Option<usize>) -> Result<(), CliError> {
    let stream = c.notifications(resume_after).await?;
    let mut stream = std::pin::pin!(stream.take(count.unwrap_or(usize::MAX)));
    while let Some(event) = stream.next().await {
        println!("{}", event?.to_json());
    }
    Ok(())
}
