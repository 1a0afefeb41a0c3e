//! Shared helpers for integration tests: fixture paths, random graph and
//! dataset generators, a random query generator over the subset grammar,
//! and an independent edit-distance oracle.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::prelude::*;
use rand::rngs::StdRng;

use soccerkg::builder::{build_all, BuildOutput};
use soccerkg::graph::{Graph, PropertyMap, PropertyValue};
use soccerkg::ingest::{
    load_dataset, Dataset, EventAnnotation, FactEntry, FactType, GameRecord, PlayerEntry,
    TeamSide,
};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory exists")
}

pub fn load_fixture() -> Dataset {
    load_dataset(&fixtures_dir().join("dataset")).expect("fixture parses")
}

pub fn build_fixture() -> BuildOutput {
    build_all(&load_fixture()).expect("fixture builds")
}

/// Reference edit distance, written as the plain full-matrix recurrence so
/// it stays independent of the implementation under test.
pub fn edit_distance_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        dp[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = (dp[i - 1][j] + 1)
                .min(dp[i][j - 1] + 1)
                .min(dp[i - 1][j - 1] + cost);
        }
    }
    dp[a.len()][b.len()]
}

// --- random graphs ---

const LABELS: &[&str] = &["Game", "Team", "Event", "Player", "Fact", "Thing"];
const ETYPES: &[&str] = &["LINKS", "OWNS", "NEAR", "IS_PART_OF", "PLAYS_FOR"];
const KEYS: &[&str] = &["name", "season", "kind", "size", "score", "flag"];

pub fn random_value(rng: &mut StdRng) -> PropertyValue {
    match rng.random_range(0..4) {
        0 => PropertyValue::Text(format!("v{}", rng.random_range(0..6))),
        1 => PropertyValue::Int(rng.random_range(-3..8)),
        2 => PropertyValue::Float(rng.random_range(-2..6) as f64 / 2.0),
        _ => PropertyValue::Bool(rng.random_bool(0.5)),
    }
}

pub fn random_props(rng: &mut StdRng, max: usize) -> PropertyMap {
    let mut props = PropertyMap::new();
    for _ in 0..rng.random_range(0..=max) {
        props.insert(
            KEYS[rng.random_range(0..KEYS.len())].to_string(),
            random_value(rng),
        );
    }
    props
}

/// Random multigraph with up to `max_nodes` nodes; self-loops and parallel
/// edges included.
pub fn random_graph(rng: &mut StdRng, max_nodes: usize) -> Graph {
    let mut g = Graph::new();
    let n = rng.random_range(0..=max_nodes);
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let label = LABELS[rng.random_range(0..LABELS.len())];
        ids.push(g.add_node(label, random_props(rng, 3)).unwrap());
    }
    if n > 0 {
        let edges = rng.random_range(0..=(2 * n));
        for _ in 0..edges {
            let src = ids[rng.random_range(0..n)];
            let dst = ids[rng.random_range(0..n)];
            let etype = ETYPES[rng.random_range(0..ETYPES.len())];
            g.add_edge(src, dst, etype, random_props(rng, 2)).unwrap();
        }
    }
    g.freeze();
    g
}

// --- random queries over the subset grammar ---

fn random_node_pattern(rng: &mut StdRng, var_pool: &mut Vec<String>) -> String {
    let mut parts = String::from("(");
    if rng.random_bool(0.8) {
        let var = format!("v{}", rng.random_range(0..4));
        parts.push_str(&var);
        if !var_pool.contains(&var) {
            var_pool.push(var);
        }
    }
    if rng.random_bool(0.7) {
        parts.push(':');
        parts.push_str(LABELS[rng.random_range(0..LABELS.len())]);
    }
    if rng.random_bool(0.35) {
        let key = KEYS[rng.random_range(0..KEYS.len())];
        let value = render_literal(rng);
        parts.push_str(&format!(" {{{key}: {value}}}"));
    }
    parts.push(')');
    parts
}

fn render_literal(rng: &mut StdRng) -> String {
    match random_value(rng) {
        PropertyValue::Text(s) => format!("'{s}'"),
        PropertyValue::Int(i) => i.to_string(),
        PropertyValue::Float(f) => format!("{f:?}"),
        PropertyValue::Bool(b) => b.to_string(),
    }
}

fn random_rel(rng: &mut StdRng, var_pool: &mut Vec<String>) -> String {
    let etype = ETYPES[rng.random_range(0..ETYPES.len())];
    let var = if rng.random_bool(0.3) {
        let var = format!("r{}", rng.random_range(0..4));
        if var_pool.contains(&var) {
            String::new()
        } else {
            var_pool.push(var.clone());
            var
        }
    } else {
        String::new()
    };
    match rng.random_range(0..3) {
        0 => format!("-[{var}:{etype}]->"),
        1 => format!("<-[{var}:{etype}]-"),
        _ => format!("-[{var}:{etype}]-"),
    }
}

fn random_expr(rng: &mut StdRng, vars: &[String], depth: usize) -> String {
    if depth > 0 && rng.random_bool(0.4) {
        let a = random_expr(rng, vars, depth - 1);
        let b = random_expr(rng, vars, depth - 1);
        let op = if rng.random_bool(0.5) { "AND" } else { "OR" };
        let not = if rng.random_bool(0.2) { "NOT " } else { "" };
        return format!("{not}({a} {op} {b})");
    }
    let var = &vars[rng.random_range(0..vars.len())];
    let key = KEYS[rng.random_range(0..KEYS.len())];
    let op = ["=", "<>", "<", "<=", ">", ">=", "CONTAINS"][rng.random_range(0..7)];
    if rng.random_bool(0.25) {
        let var2 = &vars[rng.random_range(0..vars.len())];
        let key2 = KEYS[rng.random_range(0..KEYS.len())];
        format!("{var}.{key} {op} {var2}.{key2}")
    } else {
        format!("{var}.{key} {op} {}", render_literal(rng))
    }
}

/// Random query text within the subset grammar. Node variables are always
/// distinct from relationship variables; LIMIT is never generated (its
/// row choice is order-dependent, which multiset comparison can't judge).
pub fn random_query(rng: &mut StdRng) -> String {
    let mut vars: Vec<String> = Vec::new();
    let paths = if rng.random_bool(0.25) { 2 } else { 1 };
    let mut rendered = Vec::new();
    for _ in 0..paths {
        let mut text = random_node_pattern(rng, &mut vars);
        for _ in 0..rng.random_range(0..=2) {
            text.push_str(&random_rel(rng, &mut vars));
            text.push_str(&random_node_pattern(rng, &mut vars));
        }
        rendered.push(text);
    }
    let mut query = format!("MATCH {}", rendered.join(", "));
    let node_vars: Vec<String> = vars.iter().filter(|v| v.starts_with('v')).cloned().collect();
    if node_vars.is_empty() {
        return format!("{query} RETURN count(*)");
    }
    if rng.random_bool(0.5) {
        query.push_str(&format!(" WHERE {}", random_expr(rng, &node_vars, 2)));
    }
    let mut items: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        let var = &node_vars[rng.random_range(0..node_vars.len())];
        let key = KEYS[rng.random_range(0..KEYS.len())];
        match rng.random_range(0..6) {
            0 => items.push(format!("count({var})")),
            1 => items.push(format!("count(DISTINCT {var}.{key})")),
            2 => items.push(format!("sum({var}.{key})")),
            3 => items.push(format!("collect({var}.{key})")),
            4 => items.push("count(*)".to_string()),
            _ => items.push(format!("{var}.{key}")),
        }
    }
    query.push_str(&format!(" RETURN {}", items.join(", ")));
    if rng.random_bool(0.3) {
        // order by the first returned item so the target always resolves
        let first = items[0].clone();
        if !first.starts_with("count(") && !first.starts_with("sum(") && !first.starts_with("collect(") {
            query.push_str(&format!(" ORDER BY {first}"));
            if rng.random_bool(0.5) {
                query.push_str(" DESC");
            }
        }
    }
    query
}

// --- random datasets (construction-rule fuzzing) ---

pub fn random_dataset(rng: &mut StdRng) -> Dataset {
    let mut dataset = Dataset::default();
    let games = rng.random_range(1..=5);
    let team_pool: Vec<String> = (0..6).map(|i| format!("Team {i}")).collect();
    let player_pool: Vec<String> = (0..12).map(|i| format!("Player {i}")).collect();
    let event_labels = ["Goal", "Foul", "Corner", "Yellow card", "Kick-off"];
    let seasons = ["2014-2015", "2015-2016"];
    for gi in 0..games {
        let game_id = format!("league/season/g{gi}");
        let home_idx = rng.random_range(0..team_pool.len());
        let away_idx = (home_idx + 1 + rng.random_range(0..team_pool.len() - 1)) % team_pool.len();
        let score_home = rng.random_range(0..4);
        let score_away = rng.random_range(0..4);
        dataset.games.push(GameRecord {
            game_id: game_id.clone(),
            home_team: team_pool[home_idx].clone(),
            away_team: team_pool[away_idx].clone(),
            score_home,
            score_away,
            date: format!("2015-01-{:02}", gi + 1),
            venue: rng.random_bool(0.7).then(|| format!("Stadium {gi}")),
            referee: rng.random_bool(0.7).then(|| format!("Referee {}", rng.random_range(0..3))),
            season: seasons[rng.random_range(0..2)].to_string(),
            league: "league".into(),
            round: None,
        });
        for _ in 0..rng.random_range(0..8) {
            let side = match rng.random_range(0..3) {
                0 => TeamSide::Home,
                1 => TeamSide::Away,
                _ => TeamSide::NotApplicable,
            };
            dataset.events.push(EventAnnotation {
                game_id: game_id.clone(),
                label: event_labels[rng.random_range(0..event_labels.len())].into(),
                half: rng.random_range(1..=2),
                clock: rng.random_range(0..2700),
                team_side: side,
                visibility: None,
            });
        }
        for _ in 0..rng.random_range(0..6) {
            let name = player_pool[rng.random_range(0..player_pool.len())].clone();
            let side = if rng.random_bool(0.5) {
                TeamSide::Home
            } else {
                TeamSide::Away
            };
            let mut facts = Vec::new();
            for _ in 0..rng.random_range(0..3) {
                let fact_type = *[
                    FactType::YellowCard,
                    FactType::RedCard,
                    FactType::Goal,
                    FactType::OwnGoal,
                    FactType::SubstitutionOut,
                    FactType::SubstitutionIn,
                    FactType::Assist,
                ]
                .choose(rng)
                .unwrap();
                facts.push(FactEntry {
                    fact_type,
                    time: format!("{} - {:02}:{:02}", rng.random_range(1..=2), rng.random_range(0..45), rng.random_range(0..60)),
                    subject_player: name.clone(),
                    detail: "detail".into(),
                });
            }
            dataset.players.push(PlayerEntry {
                game_id: game_id.clone(),
                name,
                team_side: side,
                shirt_number: Some(rng.random_range(1..30)),
                lineup_role: None,
                facts,
            });
        }
    }
    dataset
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
