//! Property tests for the spec-level invariants that aren't already part
//! of the acceptance suite.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use soccerkg::builder::EntityCategory;
use soccerkg::eval::{judge, load_bank, run_accuracy};
use soccerkg::graph::{Direction, PropertyValue};
use soccerkg::ingest::{parse_captions_file, parse_labels_file, FactType};
use soccerkg::nl::{AskConfig, NlEngine};
use soccerkg::query::parse_query;

use common::{build_fixture, fixtures_dir, random_graph, random_query, random_value, seeded};

proptest! {
    /// Parsing never aborts the process; every failure is a positioned error.
    #[test]
    fn parser_totality(input in ".{0,120}") {
        let _ = parse_query(&input);
    }

    /// Lexer survives token soup built from grammar fragments.
    #[test]
    fn parser_totality_token_soup(parts in proptest::collection::vec(
        prop_oneof![
            Just("MATCH"), Just("WHERE"), Just("RETURN"), Just("("), Just(")"),
            Just("["), Just("]"), Just("{"), Just("}"), Just(":"), Just(","),
            Just("-"), Just("->"), Just("<-"), Just("count"), Just("x"),
            Just("'s'"), Just("1"), Just("1.5"), Just("."), Just("AND"),
        ],
        0..24,
    )) {
        let _ = parse_query(&parts.join(" "));
    }
}

#[test]
fn pretty_print_reparses_identically() {
    let mut rng = seeded(0x9e77);
    for _ in 0..500 {
        let text = random_query(&mut rng);
        let ast = parse_query(&text).expect("generated query parses");
        let printed = ast.to_string();
        let reparsed = parse_query(&printed)
            .unwrap_or_else(|e| panic!("printed form failed to reparse: {printed}\n{e}"));
        assert_eq!(ast, reparsed, "round trip changed the tree for {text}");
    }
}

fn labels_json(labels: &[(u8, u32, &str, &str)]) -> String {
    let annotations: Vec<String> = labels
        .iter()
        .map(|(half, clock, label, team)| {
            format!(
                r#"{{"gameTime": "{half} - {:02}:{:02}", "label": "{label}", "team": "{team}"}}"#,
                clock / 60,
                clock % 60
            )
        })
        .collect();
    format!(r#"{{"annotations": [{}]}}"#, annotations.join(", "))
}

proptest! {
    /// Output length always equals the annotations array length.
    #[test]
    fn labels_length_preserved(entries in proptest::collection::vec(
        (1u8..=2, 0u32..2700, prop_oneof![Just("Goal"), Just("Foul"), Just("Corner")],
         prop_oneof![Just("home"), Just("away"), Just("not applicable")]),
        0..20,
    )) {
        let body = labels_json(
            &entries.iter().map(|(h, c, l, t)| (*h, *c, *l, *t)).collect::<Vec<_>>(),
        );
        let events = parse_labels_file(body.as_bytes(), "g").unwrap();
        prop_assert_eq!(events.len(), entries.len());
    }

    /// Every parsed fact type is one of the seven valid codes.
    #[test]
    fn fact_types_always_valid(codes in proptest::collection::vec(
        prop_oneof![Just(1i64), Just(2), Just(3), Just(4), Just(6), Just(7), Just(8)],
        0..6,
    )) {
        let facts: Vec<String> = codes
            .iter()
            .map(|c| format!(
                r#"{{"type": {c}, "time": "1 - 10:00", "player": "P One", "detail": "d"}}"#
            ))
            .collect();
        let body = format!(
            r#"{{"gameDate": "2015-01-01", "gameHomeTeam": "A FC", "gameAwayTeam": "B FC",
                "score": "1 - 0", "league": "L", "season": "2014-2015",
                "lineup": {{"home": [{{"name": "P One", "facts": [{}]}}], "away": []}}}}"#,
            facts.join(", ")
        );
        let (_, players) = parse_captions_file(body.as_bytes(), "g").unwrap();
        let valid = [1, 2, 3, 4, 6, 7, 8];
        for fact in &players[0].facts {
            prop_assert!(valid.contains(&fact.fact_type.code()));
            prop_assert!(FactType::from_code(fact.fact_type.code()) == Some(fact.fact_type));
        }
        prop_assert_eq!(players[0].facts.len(), codes.len());
    }
}

/// parse -> serialize -> parse is the identity on every fixture file.
#[test]
fn fixture_files_round_trip_through_serde() {
    let root = fixtures_dir().join("dataset");
    let mut seen = 0;
    for league in std::fs::read_dir(&root).unwrap() {
        let league = league.unwrap().path();
        for season in std::fs::read_dir(&league).unwrap() {
            let season = season.unwrap().path();
            for game in std::fs::read_dir(&season).unwrap() {
                let game = game.unwrap().path();
                let labels = std::fs::read(game.join("Labels-v2.json")).unwrap();
                let events = parse_labels_file(&labels, "g").unwrap();
                let json = serde_json::to_string(&events).unwrap();
                let back: Vec<soccerkg::ingest::EventAnnotation> =
                    serde_json::from_str(&json).unwrap();
                assert_eq!(events, back);

                let captions = std::fs::read(game.join("Labels-caption.json")).unwrap();
                let parsed = soccerkg::ingest::parse_captions_file_with_context(
                    &captions,
                    "g",
                    &soccerkg::ingest::DirContext {
                        league: Some("UCL".into()),
                        season: Some("2014-2015".into()),
                    },
                )
                .unwrap();
                let json = serde_json::to_string(&parsed).unwrap();
                let back: (soccerkg::ingest::GameRecord, Vec<soccerkg::ingest::PlayerEntry>) =
                    serde_json::from_str(&json).unwrap();
                assert_eq!(parsed, back);
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 4);
}

/// Indexed label/property lookups agree with a brute-force filter.
#[test]
fn label_prop_lookup_matches_brute_force() {
    let mut rng = seeded(0xb10b);
    let labels = ["Game", "Team", "Event", "Player", "Fact", "Thing", "Ghost"];
    let keys = ["name", "season", "kind", "size", "score", "flag", "absent"];
    for _ in 0..300 {
        let g = random_graph(&mut rng, 40);
        use rand::Rng;
        let label = labels[rng.random_range(0..labels.len())];
        let (key, value) = if rng.random_bool(0.8) {
            (
                Some(keys[rng.random_range(0..keys.len())]),
                Some(random_value(&mut rng)),
            )
        } else {
            (None, None)
        };
        let indexed = g.nodes_by_label_prop(label, key, value.as_ref());
        let brute: BTreeSet<_> = g
            .nodes()
            .filter(|n| n.label == label)
            .filter(|n| match (&key, &value) {
                (Some(k), Some(v)) => n.props.get(*k).is_some_and(|actual|

                    matches!((actual, v),
                        (PropertyValue::Int(a), PropertyValue::Int(b)) if a == b)
                        || matches!((actual, v),
                            (PropertyValue::Text(a), PropertyValue::Text(b)) if a == b)
                        || matches!((actual, v),
                            (PropertyValue::Bool(a), PropertyValue::Bool(b)) if a == b)
                        || matches!((actual, v),
                            (PropertyValue::Float(a), PropertyValue::Float(b)) if a == b)
                        || matches!((actual, v),
                            (PropertyValue::Int(a), PropertyValue::Float(b)) if *a as f64 == *b)
                        || matches!((actual, v),
                            (PropertyValue::Float(a), PropertyValue::Int(b)) if *a == *b as f64)),
                _ => true,
            })
            .map(|n| n.id)
            .collect();
        assert_eq!(indexed, brute);
    }
}

/// Outgoing neighbor lists over all nodes partition each edge type exactly.
#[test]
fn out_neighbors_partition_edges() {
    let mut rng = seeded(0x9a27);
    for _ in 0..100 {
        let g = random_graph(&mut rng, 30);
        for etype in ["LINKS", "OWNS", "NEAR", "IS_PART_OF", "PLAYS_FOR"] {
            let mut seen = Vec::new();
            for n in g.nodes() {
                for (eid, _) in g.neighbors(n.id, Some(etype), Direction::Out).unwrap() {
                    seen.push(eid);
                }
            }
            seen.sort();
            let expected: Vec<_> = g
                .edges()
                .filter(|e| e.etype == etype)
                .map(|e| e.id)
                .collect();
            assert_eq!(seen, expected, "partition failed for {etype}");
        }
    }
}

/// Every rule-backend translation parses, across the template x entity
/// cross product of the fixture.
#[test]
fn all_template_translations_parse() {
    let out = build_fixture();
    let engine = NlEngine::new(&out);
    let dict = &out.entity_dict;
    let teams: Vec<String> = dict.names_in(EntityCategory::Team).map(String::from).collect();
    let players: Vec<String> = dict.names_in(EntityCategory::Player).map(String::from).collect();
    let venues: Vec<String> = dict.names_in(EntityCategory::Venue).map(String::from).collect();
    let referees: Vec<String> = dict.names_in(EntityCategory::Referee).map(String::from).collect();
    let seasons = ["2014-2015", "2015-2016"];
    let mut questions: Vec<String> = Vec::new();
    for team in &teams {
        questions.push(format!("Is {team} in the database?"));
        questions.push(format!("List the names of the coaches for {team}."));
        for season in seasons {
            questions.push(format!(
                "Give me the total home goals for {team} in the {season} season."
            ));
            questions.push(format!("Calculate the home advantage for {team} in the {season} season."));
            questions.push(format!(
                "List all the teams that played a game against {team} in the {season} season in the UCL."
            ));
            questions.push(format!("How many games did {team} win in the {season} season?"));
        }
    }
    for pair in teams.windows(2) {
        questions.push(format!(
            "Which team won more games in the 2014-2015 season, {} or {}?",
            pair[0], pair[1]
        ));
        questions.push(format!(
            "Which events happened in the game between {} and {} in the 2014-2015 season?",
            pair[0], pair[1]
        ));
        questions.push(format!(
            "Tell me all information about the game between {} and {} in the 2014-2015 season.",
            pair[0], pair[1]
        ));
    }
    for player in &players {
        questions.push(format!("Is {player} in the database?"));
        questions.push(format!("How many goals did {player} score in the 2014-2015 season?"));
        questions.push(format!(
            "How many yellow cards did {player} get in the 2014-2015 season?"
        ));
        questions.push(format!("What teams and leagues has {player} played in?"));
        questions.push(format!("Who assisted {player} with goals in the 2014-2015 season?"));
        questions.push(format!("Why did {player} get yellow cards in the 2014-2015 season?"));
        questions.push(format!("What information do you have about {player} in your dataset?"));
    }
    for venue in &venues {
        questions.push(format!("Which games are played at {venue}?"));
    }
    for referee in &referees {
        questions.push(format!("Tell me about the games that {referee} was the referee for."));
    }
    for season in seasons {
        questions.push(format!("Give all the teams in the league UCL in the {season} season."));
        questions.push(format!(
            "Give me all games in the UCL with yellow cards in the first half in the {season} season."
        ));
        questions.push(format!("Make a list of when corners happened in the UCL in the {season} season."));
        questions.push(format!(
            "How many yellow and red cards were given in the UCL in the {season} season, and did anyone receive a red card?"
        ));
    }
    questions.push("What league is Bayern Munich, Chelsea, and Liverpool in?".to_string());

    assert!(questions.len() > 300, "cross product too small: {}", questions.len());
    for q in &questions {
        let m = engine
            .translate_rule(q)
            .unwrap_or_else(|e| panic!("no translation for {q:?}: {e}"));
        parse_query(&m.query)
            .unwrap_or_else(|e| panic!("query for {q:?} does not parse: {}\n{e}", m.query));
    }
}

/// Deterministic answers only carry values from the context table, the
/// question itself, or fixed template words.
#[test]
fn answers_never_fabricate_values() {
    const TEMPLATE_WORDS: &[&str] = &[
        "a", "about", "advantage", "against", "and", "away", "both", "came", "card", "cards",
        "coaches", "data", "database", "date", "dates", "event", "events", "for", "found",
        "from", "game", "games", "given", "goal", "goals", "has", "home", "in", "information",
        "is", "leagues", "matching", "no", "not", "of", "plays", "played", "players", "question",
        "received", "red", "result", "row", "rows", "scored", "season", "team", "teams", "that",
        "the", "this", "to", "was", "were", "who", "won", "more", "yellow", "yes",
    ];
    let out = build_fixture();
    let engine = NlEngine::new(&out);
    let bank = load_bank(std::io::BufReader::new(
        std::fs::File::open(fixtures_dir().join("bank.jsonl")).unwrap(),
    ))
    .unwrap();
    let config = AskConfig::default();
    for entry in &bank {
        let outcome = engine.ask(&entry.question, &config, None);
        let context_text: String = outcome
            .context
            .rows
            .iter()
            .flatten()
            .flatten()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase();
        let question_lower = outcome.repaired_question.to_lowercase();
        for token in outcome
            .answer
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let lower = token.to_lowercase();
            if TEMPLATE_WORDS.contains(&lower.as_str()) {
                continue;
            }
            if context_text.contains(&lower) || question_lower.contains(&lower) {
                continue;
            }
            if let Ok(n) = token.parse::<i64>() {
                // counts derived by counting rows are part of rendering
                assert!(
                    n <= outcome.context.rows.len() as i64,
                    "{}: numeric token {token} exceeds row count in {:?}",
                    entry.id,
                    outcome.answer
                );
                continue;
            }
            panic!(
                "{}: fabricated token {token:?} in answer {:?}",
                entry.id, outcome.answer
            );
        }
    }
}

/// Accuracy totals do not depend on question order.
#[test]
fn accuracy_is_permutation_invariant() {
    let out = build_fixture();
    let bank = load_bank(std::io::BufReader::new(
        std::fs::File::open(fixtures_dir().join("bank.jsonl")).unwrap(),
    ))
    .unwrap();
    let subset: Vec<_> = bank.into_iter().filter(|e| e.default_subset).collect();
    let config = AskConfig::default();
    let forward = run_accuracy(&subset, 2, &out, &config, None);
    let mut reversed_bank = subset.clone();
    reversed_bank.reverse();
    let reversed = run_accuracy(&reversed_bank, 2, &out, &config, None);
    assert_eq!(forward.correct, reversed.correct);
    assert_eq!(forward.total, reversed.total);
    assert_eq!(forward.accuracy_pct, reversed.accuracy_pct);
}

/// The gold predicates in the bank stay judgeable: a wrong answer fails.
#[test]
fn judge_rejects_wrong_answers() {
    let out = build_fixture();
    let bank = load_bank(std::io::BufReader::new(
        std::fs::File::open(fixtures_dir().join("bank.jsonl")).unwrap(),
    ))
    .unwrap();
    for entry in &bank {
        assert!(
            !judge(&entry.gold, "completely unrelated text 424242", &out.entity_dict),
            "{}: gold predicate accepts garbage",
            entry.id
        );
    }
}
