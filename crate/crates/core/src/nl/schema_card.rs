//! Schema summary generated from the live graphs; grounds the LLM prompt
//! and supplies the event-name lexicon for the rule templates.

use std::collections::{BTreeMap, BTreeSet};

use crate::builder::{BuildOutput, GraphSel};
use crate::graph::Graph;

const SAMPLES_PER_LABEL: usize = 8;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphCard {
    /// label -> attribute keys observed on nodes of that label
    pub labels: BTreeMap<String, BTreeSet<String>>,
    /// (edge type, source label, destination label) triples observed
    pub edges: BTreeSet<(String, String, String)>,
    /// label -> a few sample `name` values
    pub samples: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemaCard {
    pub labels_kg: GraphCard,
    pub captions_kg: GraphCard,
    /// distinct Event node names across the Labels KG
    pub event_names: Vec<String>,
}

fn card_of(g: &Graph) -> GraphCard {
    let mut card = GraphCard::default();
    for n in g.nodes() {
        let keys = card.labels.entry(n.label.clone()).or_default();
        keys.extend(n.props.keys().cloned());
        if let Some(name) = n.props.get("name").and_then(|v| v.as_text()) {
            let samples = card.samples.entry(n.label.clone()).or_default();
            if samples.len() < SAMPLES_PER_LABEL && !samples.iter().any(|s| s == name) {
                samples.push(name.to_string());
            }
        }
    }
    for e in g.edges() {
        let src = g.node(e.src).map(|n| n.label.clone()).unwrap_or_default();
        let dst = g.node(e.dst).map(|n| n.label.clone()).unwrap_or_default();
        card.edges.insert((e.etype.clone(), src, dst));
    }
    card
}

impl SchemaCard {
    pub fn of(output: &BuildOutput) -> SchemaCard {
        let labels_kg = card_of(&output.labels_kg);
        let captions_kg = card_of(&output.captions_kg);
        let mut event_names: BTreeSet<String> = BTreeSet::new();
        for n in output.labels_kg.nodes() {
            if n.label == "Event" {
                if let Some(name) = n.props.get("name").and_then(|v| v.as_text()) {
                    event_names.insert(name.to_string());
                }
            }
        }
        SchemaCard {
            labels_kg,
            captions_kg,
            event_names: event_names.into_iter().collect(),
        }
    }

    pub fn card(&self, sel: GraphSel) -> &GraphCard {
        match sel {
            GraphSel::Labels => &self.labels_kg,
            GraphSel::Captions => &self.captions_kg,
        }
    }

    /// Plain-text rendering used in LLM prompts.
    pub fn to_prompt_text(&self) -> String {
        let mut out = String::new();
        for (title, card) in [
            ("Labels KG (match events)", &self.labels_kg),
            ("Captions KG (lineups and facts)", &self.captions_kg),
        ] {
            out.push_str(&format!("## {title}\nNode labels:\n"));
            for (label, keys) in &card.labels {
                let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
                out.push_str(&format!("- {label}({})\n", keys.join(", ")));
                if let Some(samples) = card.samples.get(label) {
                    out.push_str(&format!("  sample names: {}\n", samples.join(", ")));
                }
            }
            out.push_str("Relationships:\n");
            for (etype, src, dst) in &card.edges {
                out.push_str(&format!("- ({src})-[:{etype}]->({dst})\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_all;
    use crate::ingest::{Dataset, EventAnnotation, GameRecord, TeamSide};

    #[test]
    fn card_reflects_graph_contents() {
        let mut ds = Dataset::default();
        ds.games.push(GameRecord {
            game_id: "g1".into(),
            home_team: "A FC".into(),
            away_team: "B FC".into(),
            score_home: 1,
            score_away: 0,
            date: "2015-01-01".into(),
            venue: None,
            referee: None,
            season: "2014-2015".into(),
            league: "L1".into(),
            round: None,
        });
        ds.events.push(EventAnnotation {
            game_id: "g1".into(),
            label: "Corner".into(),
            half: 1,
            clock: 5,
            team_side: TeamSide::Home,
            visibility: None,
        });
        let out = build_all(&ds).unwrap();
        let card = SchemaCard::of(&out);
        assert!(card.labels_kg.labels.contains_key("Event"));
        assert_eq!(card.event_names, vec!["Corner".to_string()]);
        assert!(card
            .labels_kg
            .edges
            .contains(&("HOME_TEAM".into(), "Team".into(), "Game".into())));
        let text = card.to_prompt_text();
        assert!(text.contains("sample names: A FC, B FC"));
    }
}
