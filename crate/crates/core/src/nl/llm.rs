//! Pluggable LLM translation backend speaking the chat-completions JSON
//! shape. The transport is a trait so tests can substitute a fake; the
//! default transport is a blocking HTTP client. The API key comes from an
//! environment variable only, never from configuration files.

use serde::{Deserialize, Serialize};

use crate::builder::EntityDictionary;
use crate::query::parse_query;

use super::schema_card::SchemaCard;
use super::template::few_shot_pairs;
use super::NlError;

/// Replies larger than this are treated as a blown token budget.
const REPLY_BYTE_CAP: usize = 262_144;

pub const DEFAULT_API_KEY_ENV: &str = "SOCCERKG_API_KEY";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub retry_cap: u32,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            base_url: "http://localhost:8080/v1".into(),
            model: "gpt-4".into(),
            temperature: 0.0,
            retry_cap: 1,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> ChatMessage {
        ChatMessage {
            role: role.into(),
            content: content.into(),
        }
    }
}

/// Anything that can answer a chat-completions request with assistant text.
pub trait ChatTransport {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, NlError>;
}

/// Logs every prompt message and raw reply verbatim to stderr, then
/// delegates. Activated by the `trace` flag.
pub struct TracingTransport<'a>(pub &'a dyn ChatTransport);

impl ChatTransport for TracingTransport<'_> {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, NlError> {
        for m in messages {
            eprintln!("[trace] >>> {}:\n{}", m.role, m.content);
        }
        let reply = self.0.complete(messages);
        match &reply {
            Ok(text) => eprintln!("[trace] <<< reply:\n{text}"),
            Err(err) => eprintln!("[trace] <<< error: {err}"),
        }
        reply
    }
}

/// Blocking HTTP transport for a chat-completions endpoint.
pub struct HttpTransport {
    config: LlmConfig,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

impl HttpTransport {
    pub fn new(config: LlmConfig) -> HttpTransport {
        HttpTransport {
            config,
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl ChatTransport for HttpTransport {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, NlError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut request = self.client.post(&url).json(&ChatRequest {
            model: &self.config.model,
            temperature: self.config.temperature,
            messages,
        });
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| NlError::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(NlError::Transport(format!(
                "endpoint returned HTTP {}",
                response.status()
            )));
        }
        let body: ChatResponse = response
            .json()
            .map_err(|e| NlError::Transport(format!("bad response body: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| NlError::Transport("response carried no choices".into()))
    }
}

/// First fenced code block of a reply, language tag tolerated.
pub fn extract_fenced(reply: &str) -> Option<String> {
    let open = reply.find("```")?;
    let after = &reply[open + 3..];
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    let close = body.find("```")?;
    let text = body[..close].trim();
    if text.is_empty() {
        None
    } else {
        Some(text.to_string())
    }
}

fn base_prompt(card: &SchemaCard, dict: &EntityDictionary) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::new(
        "system",
        format!(
            "You translate English questions about soccer match data into a \
             Cypher-style query over the graphs below. Use only the listed \
             labels, relationship types, and property keys. One MATCH clause, \
             optional WHERE, RETURN with count/sum/collect as needed. Reply \
             with exactly one query inside a fenced code block.\n\n{}",
            card.to_prompt_text()
        ),
    )];
    for (question, query) in few_shot_pairs(dict, card) {
        messages.push(ChatMessage::new("user", question));
        messages.push(ChatMessage::new("assistant", format!("```\n{query}\n```")));
    }
    messages
}

/// Asks the model to translate `question`, validating the reply by parsing
/// and feeding a parse failure back into the prompt for up to
/// `config.retry_cap` retries. Returns (query text, retries used).
pub fn translate_llm(
    question: &str,
    card: &SchemaCard,
    dict: &EntityDictionary,
    transport: &dyn ChatTransport,
    config: &LlmConfig,
) -> Result<(String, u32), NlError> {
    let mut messages = base_prompt(card, dict);
    messages.push(ChatMessage::new("user", question));

    let mut retries = 0u32;
    loop {
        let reply = transport.complete(&messages)?;
        if reply.len() > REPLY_BYTE_CAP {
            return Err(NlError::Budget { retries });
        }
        let Some(query) = extract_fenced(&reply) else {
            return Err(NlError::Extraction);
        };
        match parse_query(&query) {
            Ok(_) => return Ok((query, retries)),
            Err(parse_err) => {
                if retries >= config.retry_cap {
                    return Err(NlError::Parse(parse_err));
                }
                retries += 1;
                messages.push(ChatMessage::new("assistant", reply));
                messages.push(ChatMessage::new(
                    "user",
                    format!(
                        "That query failed to parse: {parse_err}. Reply with a \
                         corrected query in a fenced code block."
                    ),
                ));
            }
        }
    }
}

/// LLM answer synthesis: question plus the serialized context table.
pub fn synthesize_llm(
    question: &str,
    context_text: &str,
    transport: &dyn ChatTransport,
) -> Result<String, NlError> {
    let messages = [
        ChatMessage::new(
            "system",
            "Answer the user's question using only the provided context \
             table. If the table is empty, say that no matching data was \
             found. When the answer is a list, present every item.",
        ),
        ChatMessage::new(
            "user",
            format!("Question: {question}\n\nContext:\n{context_text}"),
        ),
    ];
    transport.complete(&messages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    struct Scripted {
        replies: RefCell<Vec<String>>,
    }

    impl Scripted {
        fn new(replies: &[&str]) -> Scripted {
            Scripted {
                replies: RefCell::new(replies.iter().rev().map(|s| s.to_string()).collect()),
            }
        }
    }

    impl ChatTransport for Scripted {
        fn complete(&self, _messages: &[ChatMessage]) -> Result<String, NlError> {
            self.replies
                .borrow_mut()
                .pop()
                .ok_or_else(|| NlError::Transport("script exhausted".into()))
        }
    }

    fn config() -> LlmConfig {
        LlmConfig::default()
    }

    fn card() -> SchemaCard {
        SchemaCard::default()
    }

    fn dict() -> EntityDictionary {
        EntityDictionary::new()
    }

    #[test]
    fn well_formed_reply_extracts_and_parses() {
        let transport =
            Scripted::new(&["Sure:\n```cypher\nMATCH (t:Team) RETURN count(t)\n```"]);
        let (query, retries) =
            translate_llm("How many teams?", &card(), &dict(), &transport, &config()).unwrap();
        assert_eq!(query, "MATCH (t:Team) RETURN count(t)");
        assert_eq!(retries, 0);
    }

    #[test]
    fn no_code_fence_is_extraction_error() {
        let transport = Scripted::new(&["MATCH (t:Team) RETURN count(t)"]);
        assert!(matches!(
            translate_llm("How many teams?", &card(), &dict(), &transport, &config()),
            Err(NlError::Extraction)
        ));
    }

    #[test]
    fn malformed_then_fixed_succeeds_with_one_retry() {
        let transport = Scripted::new(&[
            "```\nMATCH t:Team RETURN count(t)\n```",
            "```\nMATCH (t:Team) RETURN count(t)\n```",
        ]);
        let (query, retries) =
            translate_llm("How many teams?", &card(), &dict(), &transport, &config()).unwrap();
        assert_eq!(retries, 1);
        assert!(query.starts_with("MATCH (t:Team)"));
    }

    #[test]
    fn parse_failure_after_retry_cap() {
        let transport = Scripted::new(&[
            "```\nMATCH t RETURN\n```",
            "```\nMATCH t RETURN\n```",
        ]);
        assert!(matches!(
            translate_llm("How many teams?", &card(), &dict(), &transport, &config()),
            Err(NlError::Parse(_))
        ));
    }

    #[test]
    fn oversized_reply_is_budget_error() {
        let huge = format!("```\n{}\n```", "x".repeat(REPLY_BYTE_CAP + 1));
        let transport = Scripted::new(&[huge.as_str()]);
        assert!(matches!(
            translate_llm("How many teams?", &card(), &dict(), &transport, &config()),
            Err(NlError::Budget { .. })
        ));
    }

    #[test]
    fn fence_extraction_variants() {
        assert_eq!(
            extract_fenced("```\nabc\n```").as_deref(),
            Some("abc")
        );
        assert_eq!(
            extract_fenced("text ```sql\nSELECT 1\n``` more").as_deref(),
            Some("SELECT 1")
        );
        assert_eq!(extract_fenced("no fence"), None);
        assert_eq!(extract_fenced("``` ```"), None);
    }
}
