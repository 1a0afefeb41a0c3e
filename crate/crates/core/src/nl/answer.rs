//! Deterministic answer synthesis: category-specific sentence templates
//! rendered from the retrieved table. Lists are rendered in full after a
//! colon, ';'-separated, so answers never drop items and downstream
//! correctness judging can extract them exactly. Values never come from
//! anywhere but the context table, the question, and fixed template words.

use crate::builder::EntityDictionary;
use crate::graph::PropertyValue;
use crate::query::ResultTable;

use super::schema_card::SchemaCard;
use super::template::{match_category, Category, Slots};

pub const NO_DATA: &str = "No matching data found for this question.";

fn cell_text(cell: &Option<PropertyValue>) -> String {
    match cell {
        None => "null".into(),
        Some(v) => v.to_string(),
    }
}

fn count_cell(table: &ResultTable) -> Option<i64> {
    table.single_cell().and_then(PropertyValue::as_int)
}

/// Distinct values of one column, sorted, rendered as text.
fn distinct_column(table: &ResultTable, col: usize) -> Vec<String> {
    let mut values: Vec<String> = table
        .rows
        .iter()
        .filter_map(|row| row.get(col).map(cell_text))
        .collect();
    values.sort();
    values.dedup();
    values
}

/// Distinct whole rows rendered as "a, b, c" tuples, sorted.
fn distinct_rows(table: &ResultTable) -> Vec<String> {
    let mut rows: Vec<String> = table
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(cell_text)
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect();
    rows.sort();
    rows.dedup();
    rows
}

fn listed(intro: &str, items: &[String]) -> String {
    if items.is_empty() {
        return NO_DATA.to_string();
    }
    format!("{intro}: {}.", items.join("; "))
}

fn plural(n: i64) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

fn first(list: &[String]) -> String {
    list.first().cloned().unwrap_or_default()
}

fn season_phrase(slots: &Slots) -> String {
    slots
        .seasons
        .first()
        .map(|s| format!(" in the {s} season"))
        .unwrap_or_default()
}

/// Renders the answer for `question` from the retrieved `context`.
/// Category detection mirrors the translation templates; unknown shapes get
/// a generic rendering. An empty context yields an explicit no-data answer.
pub fn synthesize_answer(
    question: &str,
    context: &ResultTable,
    dict: &EntityDictionary,
    card: &SchemaCard,
) -> String {
    let matched = match_category(question, dict, card);
    let Some((category, slots)) = matched else {
        return generic(context);
    };
    let season = season_phrase(&slots);
    match category {
        Category::Existence => {
            let name = if !slots.teams.is_empty() {
                slots.teams[0].clone()
            } else if !slots.players.is_empty() {
                slots.players[0].clone()
            } else {
                "that name".to_string()
            };
            match count_cell(context) {
                Some(n) if n > 0 => format!("Yes, {name} is in the database."),
                Some(_) => format!("No, {name} is not in the database."),
                None => generic(context),
            }
        }
        Category::TotalHomeEvents => {
            let team = first(&slots.teams);
            let event = slots.events.first().cloned().unwrap_or_else(|| "Goal".into());
            match count_cell(context) {
                Some(n) => format!(
                    "Total home {} events for {team}{season}: {n}.",
                    event.to_lowercase()
                ),
                None => generic(context),
            }
        }
        Category::HomeAdvantage => {
            let team = first(&slots.teams);
            let home_wins = context
                .rows
                .iter()
                .filter(|r| r.first().map(cell_text).as_deref() == Some(team.as_str()))
                .count() as i64;
            let away_wins = context.rows.len() as i64 - home_wins;
            format!(
                "{team} won {home_wins} home game{} and {away_wins} away game{}{season}: home advantage of {}.",
                plural(home_wins),
                plural(away_wins),
                home_wins - away_wins
            )
        }
        Category::PlayerGoals => {
            let player = first(&slots.players);
            match count_cell(context) {
                Some(n) => format!("{player} scored {n} goal{}{season}.", plural(n)),
                None => generic(context),
            }
        }
        Category::PlayerCards => {
            let player = first(&slots.players);
            let kind = slots
                .card_kinds
                .first()
                .cloned()
                .unwrap_or_else(|| "Yellow card".into());
            match count_cell(context) {
                Some(n) => format!(
                    "{player} received {n} {}{}{season}.",
                    kind.to_lowercase(),
                    plural(n)
                ),
                None => generic(context),
            }
        }
        Category::Opponents => {
            let team = first(&slots.teams);
            let opponents = distinct_column(context, 0);
            listed(
                &format!(
                    "Found {} team{} that played against {team}{season}",
                    opponents.len(),
                    plural(opponents.len() as i64)
                ),
                &opponents,
            )
        }
        Category::LeagueTeams => {
            let teams = distinct_column(context, 0);
            listed(
                &format!("Found {} team{}", teams.len(), plural(teams.len() as i64)),
                &teams,
            )
        }
        Category::EventsInHalf | Category::VenueGames => {
            let games = distinct_rows(context);
            listed(
                &format!("Found {} game{}", games.len(), plural(games.len() as i64)),
                &games,
            )
        }
        Category::PlayerTeams => {
            let player = first(&slots.players);
            let mut entries: Vec<String> = context
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "{} ({})",
                        cell_text(r.first().unwrap_or(&None)),
                        cell_text(r.get(1).unwrap_or(&None))
                    )
                })
                .collect();
            entries.sort();
            entries.dedup();
            listed(&format!("{player} has played for"), &entries)
        }
        Category::PlayerGoalsInGame => {
            let player = first(&slots.players);
            match count_cell(context) {
                Some(n) => format!("{player} scored {n} goal{} in that game.", plural(n)),
                None => generic(context),
            }
        }
        Category::GoalAssists => {
            let player = first(&slots.players);
            let assisters = distinct_column(context, 0);
            listed(&format!("Players who assisted {player}{season}"), &assisters)
        }
        Category::CardReasons => {
            let player = first(&slots.players);
            let reasons = distinct_column(context, 0);
            listed(&format!("{player} received cards for"), &reasons)
        }
        Category::CardsInLeague => {
            if context.rows.is_empty() {
                return NO_DATA.into();
            }
            let yellow = context
                .rows
                .iter()
                .filter(|r| r.first().map(cell_text).as_deref() == Some("Yellow card"))
                .count();
            let red = context.rows.len() - yellow;
            format!(
                "{yellow} yellow card{} and {red} red card{} were given{season}; a red card was given: {}.",
                plural(yellow as i64),
                plural(red as i64),
                if red > 0 { "yes" } else { "no" }
            )
        }
        Category::GameEvents => {
            let events = distinct_column(context, 0);
            listed(
                &format!("Found {} event{}", events.len(), plural(events.len() as i64)),
                &events,
            )
        }
        Category::EventDates => {
            let dates = distinct_column(context, 0);
            listed(
                &format!("Found {} date{}", dates.len(), plural(dates.len() as i64)),
                &dates,
            )
        }
        Category::PlayerInfo => {
            let player = first(&slots.players);
            let mut entries: Vec<String> = context
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "plays for {} ({}, {})",
                        cell_text(r.get(1).unwrap_or(&None)),
                        cell_text(r.get(2).unwrap_or(&None)),
                        cell_text(r.get(3).unwrap_or(&None))
                    )
                })
                .collect();
            entries.sort();
            entries.dedup();
            listed(&format!("Information about {player}"), &entries)
        }
        Category::RefereeGames | Category::GameInfo => {
            let rows = distinct_rows(context);
            listed(
                &format!("Found {} game{}", rows.len(), plural(rows.len() as i64)),
                &rows,
            )
        }
        Category::Coaches => {
            let team = first(&slots.teams);
            let coaches = distinct_column(context, 0);
            listed(&format!("Coaches for {team}"), &coaches)
        }
        Category::MoreWins => {
            if slots.teams.len() < 2 {
                return generic(context);
            }
            let (a, b) = (&slots.teams[0], &slots.teams[1]);
            let wins = |team: &str| {
                context
                    .rows
                    .iter()
                    .filter(|r| r.first().map(cell_text).as_deref() == Some(team))
                    .count() as i64
            };
            let (wa, wb) = (wins(a), wins(b));
            if wa > wb {
                format!("{a} won more games{season}: {wa} to {wb}.")
            } else if wb > wa {
                format!("{b} won more games{season}: {wb} to {wa}.")
            } else {
                format!("Both teams won {wa} game{}{season}.", plural(wa))
            }
        }
        Category::TeamWins => {
            let team = first(&slots.teams);
            match count_cell(context) {
                Some(n) => format!("{team} won {n} game{}{season}.", plural(n)),
                None => generic(context),
            }
        }
        Category::TeamsLeague => {
            let mut entries: Vec<String> = context
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "{} plays in {}",
                        cell_text(r.first().unwrap_or(&None)),
                        cell_text(r.get(1).unwrap_or(&None))
                    )
                })
                .collect();
            entries.sort();
            entries.dedup();
            listed("Leagues", &entries)
        }
    }
}

/// Fallback rendering for tables without a recognized category (e.g. from
/// LLM-generated queries).
pub fn generic(context: &ResultTable) -> String {
    if context.rows.is_empty() {
        return NO_DATA.into();
    }
    if let Some(cell) = context.single_cell() {
        return format!("Result: {cell}.");
    }
    let rows = distinct_rows(context);
    listed(
        &format!("Found {} row{}", rows.len(), plural(rows.len() as i64)),
        &rows,
    )
}
