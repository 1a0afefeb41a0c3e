//! Natural-language bridge: repair entity names, translate the question to
//! a query (rule templates or a pluggable LLM backend), execute it on the
//! routed graph, and synthesize an answer. Every phase error lands inside
//! the returned [`AskOutcome`]; asking never aborts the process.

pub mod answer;
pub mod llm;
pub mod repair;
pub mod schema_card;
pub mod template;

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::builder::{BuildOutput, GraphSel};
use crate::query::{self, QueryError, ResultTable};

pub use llm::{ChatMessage, ChatTransport, HttpTransport, LlmConfig, TracingTransport};
pub use repair::{repair_entities, Repair, RepairKind};
pub use schema_card::SchemaCard;
pub use template::{Category, TemplateMatch};

#[derive(Debug, Error)]
pub enum NlError {
    #[error("no translation template matches this question{}", hint.as_ref().map(|h| format!(" (closest category: {h})")).unwrap_or_default())]
    NoTemplate { hint: Option<String> },
    #[error("expected {expected} in the question{}", if span.is_empty() { String::new() } else { format!("; {span:?} is not in the dataset") })]
    UnknownEntity {
        expected: &'static str,
        span: String,
    },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("reply exceeded the token budget after {retries} retries")]
    Budget { retries: u32 },
    #[error("model reply carried no fenced code block")]
    Extraction,
    #[error("generated query failed to parse after retry: {0}")]
    Parse(#[from] QueryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Rule,
    Llm,
}

#[derive(Debug, Clone)]
pub struct AskConfig {
    pub backend: Backend,
    pub llm: Option<LlmConfig>,
    /// Overrides the per-category graph routing when set.
    pub force_graph: Option<GraphSel>,
    /// Log prompts and raw replies verbatim to stderr.
    pub trace: bool,
}

impl Default for AskConfig {
    fn default() -> Self {
        AskConfig {
            backend: Backend::Rule,
            llm: None,
            force_graph: None,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub translate_ms: f64,
    pub execute_ms: f64,
    pub synthesize_ms: f64,
    pub total_ms: f64,
}

/// Full pipeline trace for one question.
#[derive(Debug, Clone, Serialize)]
pub struct AskOutcome {
    pub question: String,
    pub repaired_question: String,
    pub repairs: Vec<Repair>,
    pub backend: String,
    pub category: Option<String>,
    pub query_text: String,
    /// Which graph answered ("labels" or "captions"), once execution ran.
    pub graph: Option<String>,
    pub fallback_used: bool,
    pub retries: u32,
    pub context: ResultTable,
    pub answer: String,
    pub timings: Timings,
    pub error: Option<String>,
}

impl AskOutcome {
    fn new(question: &str, backend: Backend) -> AskOutcome {
        AskOutcome {
            question: question.to_string(),
            repaired_question: String::new(),
            repairs: Vec::new(),
            backend: match backend {
                Backend::Rule => "rule".into(),
                Backend::Llm => "llm".into(),
            },
            category: None,
            query_text: String::new(),
            graph: None,
            fallback_used: false,
            retries: 0,
            context: ResultTable::default(),
            answer: String::new(),
            timings: Timings::default(),
            error: None,
        }
    }
}

fn graph_name(sel: GraphSel) -> &'static str {
    match sel {
        GraphSel::Labels => "labels",
        GraphSel::Captions => "captions",
    }
}

/// Reusable ask pipeline over one build output.
pub struct NlEngine<'a> {
    pub graphs: &'a BuildOutput,
    pub card: SchemaCard,
}

impl<'a> NlEngine<'a> {
    pub fn new(graphs: &'a BuildOutput) -> NlEngine<'a> {
        NlEngine {
            graphs,
            card: SchemaCard::of(graphs),
        }
    }

    pub fn repair(&self, question: &str) -> (String, Vec<Repair>) {
        repair::repair_entities(question, &self.graphs.entity_dict)
    }

    /// Rule-backend translation; the spec-level `translate_rule` surface.
    pub fn translate_rule(&self, question: &str) -> Result<TemplateMatch, NlError> {
        template::translate(question, &self.graphs.entity_dict, &self.card)
    }

    pub fn synthesize_answer(&self, question: &str, context: &ResultTable) -> String {
        answer::synthesize_answer(question, context, &self.graphs.entity_dict, &self.card)
    }

    fn run_query(&self, sel: GraphSel, text: &str) -> Result<ResultTable, QueryError> {
        query::run_query(self.graphs.graph(sel), text)
    }

    /// The full repair -> translate -> route -> execute -> synthesize
    /// pipeline. `transport` backs the LLM phases when the backend is
    /// [`Backend::Llm`].
    pub fn ask(
        &self,
        question: &str,
        config: &AskConfig,
        transport: Option<&dyn ChatTransport>,
    ) -> AskOutcome {
        let total_start = Instant::now();
        let mut outcome = AskOutcome::new(question, config.backend);

        let (repaired, repairs) = self.repair(question);
        outcome.repaired_question = repaired.clone();
        outcome.repairs = repairs;

        // translate
        let translate_start = Instant::now();
        let translated: Result<(String, GraphSel, bool), NlError> = match config.backend {
            Backend::Rule => self.translate_rule(&repaired).map(|m| {
                outcome.category = Some(m.category.id().to_string());
                (m.query, m.graph, m.allow_fallback)
            }),
            Backend::Llm => match transport {
                None => Err(NlError::Transport(
                    "llm backend selected but no endpoint is configured".into(),
                )),
                Some(t) => {
                    let llm_config = config.llm.clone().unwrap_or_default();
                    let tracing = llm::TracingTransport(t);
                    let transport: &dyn ChatTransport =
                        if config.trace { &tracing } else { t };
                    llm::translate_llm(
                        &repaired,
                        &self.card,
                        &self.graphs.entity_dict,
                        transport,
                        &llm_config,
                    )
                    .map(|(query, retries)| {
                        outcome.retries = retries;
                        let route = route_by_query(&query);
                        (query, route.0, route.1)
                    })
                }
            },
        };
        outcome.timings.translate_ms = translate_start.elapsed().as_secs_f64() * 1e3;

        let (query_text, routed, allow_fallback) = match translated {
            Ok(t) => t,
            Err(err) => {
                outcome.answer = answer_for_translation_error(&err, config);
                outcome.error = Some(err.to_string());
                outcome.timings.total_ms = total_start.elapsed().as_secs_f64() * 1e3;
                return outcome;
            }
        };
        outcome.query_text = query_text.clone();
        if config.trace {
            eprintln!("[trace] query: {query_text}");
        }

        // route + execute
        let execute_start = Instant::now();
        let sel = config.force_graph.unwrap_or(routed);
        let mut graph_used = sel;
        let result = self.run_query(sel, &query_text);
        let context = match result {
            Ok(mut table) => {
                if table.is_empty() && allow_fallback && config.force_graph.is_none() {
                    let other = match sel {
                        GraphSel::Labels => GraphSel::Captions,
                        GraphSel::Captions => GraphSel::Labels,
                    };
                    if let Ok(fallback) = self.run_query(other, &query_text) {
                        if !fallback.is_empty() {
                            table = fallback;
                            graph_used = other;
                            outcome.fallback_used = true;
                        }
                    }
                }
                Some(table)
            }
            Err(err) => {
                outcome.error = Some(err.to_string());
                outcome.answer = format!("The generated query could not be executed: {err}");
                None
            }
        };
        outcome.timings.execute_ms = execute_start.elapsed().as_secs_f64() * 1e3;
        outcome.graph = Some(graph_name(graph_used).to_string());

        let Some(context) = context else {
            outcome.timings.total_ms = total_start.elapsed().as_secs_f64() * 1e3;
            return outcome;
        };
        outcome.context = context;

        // synthesize
        let synth_start = Instant::now();
        outcome.answer = match config.backend {
            Backend::Rule => self.synthesize_answer(&repaired, &outcome.context),
            Backend::Llm => match transport {
                Some(t) => {
                    let tracing = llm::TracingTransport(t);
                    let transport: &dyn ChatTransport =
                        if config.trace { &tracing } else { t };
                    match llm::synthesize_llm(
                        &repaired,
                        &outcome.context.to_aligned_text(),
                        transport,
                    ) {
                        Ok(text) => text,
                        Err(err) => {
                            outcome.error = Some(err.to_string());
                            answer::generic(&outcome.context)
                        }
                    }
                }
                None => answer::generic(&outcome.context),
            },
        };
        outcome.timings.synthesize_ms = synth_start.elapsed().as_secs_f64() * 1e3;
        outcome.timings.total_ms = total_start.elapsed().as_secs_f64() * 1e3;
        outcome
    }
}

/// Routing for LLM-generated queries the templates never saw: Event
/// patterns run on the Labels KG, Player/Fact patterns on the Captions KG,
/// anything else tries Captions first with Labels fallback.
fn route_by_query(query: &str) -> (GraphSel, bool) {
    if query.contains(":Event") {
        (GraphSel::Labels, false)
    } else if query.contains(":Player") || query.contains(":Fact") {
        (GraphSel::Captions, false)
    } else {
        (GraphSel::Captions, true)
    }
}

fn answer_for_translation_error(err: &NlError, config: &AskConfig) -> String {
    match err {
        NlError::NoTemplate { hint } => {
            let extra = if config.llm.is_none() {
                " No LLM endpoint is configured, so no translation is available for free-form questions."
            } else {
                ""
            };
            match hint {
                Some(h) => format!(
                    "I couldn't translate this question with the built-in templates (closest category: {h}).{extra}"
                ),
                None => format!("I couldn't translate this question with the built-in templates.{extra}"),
            }
        }
        NlError::UnknownEntity { expected, span } if !span.is_empty() => {
            format!("I don't recognize the name {span:?}; expected {expected} from the dataset.")
        }
        NlError::UnknownEntity { expected, .. } => {
            format!("I couldn't find {expected} in the question.")
        }
        other => format!("Translation failed: {other}"),
    }
}

/// One-shot convenience wrapper around [`NlEngine::ask`]. With the LLM
/// backend an HTTP transport is built from the configured endpoint.
pub fn ask(question: &str, graphs: &BuildOutput, config: &AskConfig) -> AskOutcome {
    let engine = NlEngine::new(graphs);
    match config.backend {
        Backend::Rule => engine.ask(question, config, None),
        Backend::Llm => {
            let transport = HttpTransport::new(config.llm.clone().unwrap_or_default());
            engine.ask(question, config, Some(&transport))
        }
    }
}

/// Renders an outcome in the Generated Cypher / Full Context / Result
/// layout.
pub fn render_outcome(outcome: &AskOutcome) -> String {
    let mut out = String::new();
    out.push_str(&format!("Question: {}\n", outcome.question));
    if outcome.repaired_question != outcome.question {
        out.push_str(&format!("Repaired: {}\n", outcome.repaired_question));
    }
    if let Some(category) = &outcome.category {
        out.push_str(&format!("Category: {category}\n"));
    }
    if let Some(graph) = &outcome.graph {
        let fallback = if outcome.fallback_used { " (fallback)" } else { "" };
        out.push_str(&format!("Graph: {graph}{fallback}\n"));
    }
    out.push_str("\nGenerated Cypher:\n");
    out.push_str(if outcome.query_text.is_empty() {
        "(none)\n"
    } else {
        &outcome.query_text
    });
    if !outcome.query_text.is_empty() {
        out.push('\n');
    }
    out.push_str("\nFull Context:\n");
    out.push_str(&outcome.context.to_aligned_text());
    out.push_str("\nResult:\n");
    out.push_str(&outcome.answer);
    out.push('\n');
    if let Some(err) = &outcome.error {
        out.push_str(&format!("\nError: {err}\n"));
    }
    out.push_str(&format!(
        "\nTimings: translate {:.3} ms, execute {:.3} ms, synthesize {:.3} ms, total {:.3} ms\n",
        outcome.timings.translate_ms,
        outcome.timings.execute_ms,
        outcome.timings.synthesize_ms,
        outcome.timings.total_ms
    ));
    out
}
