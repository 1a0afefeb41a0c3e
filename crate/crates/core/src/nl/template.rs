//! Rule-based translation: matches a question against 23 ordered category
//! templates and fills a parameterized query skeleton.

use crate::builder::{EntityCategory, EntityDictionary, GraphSel};
use crate::ingest::canonicalize_season;

use super::schema_card::SchemaCard;
use super::NlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Existence,
    TotalHomeEvents,
    HomeAdvantage,
    PlayerGoals,
    PlayerCards,
    Opponents,
    LeagueTeams,
    EventsInHalf,
    PlayerTeams,
    PlayerGoalsInGame,
    GoalAssists,
    CardReasons,
    CardsInLeague,
    GameEvents,
    EventDates,
    PlayerInfo,
    RefereeGames,
    Coaches,
    VenueGames,
    GameInfo,
    MoreWins,
    TeamWins,
    TeamsLeague,
}

impl Category {
    pub const ALL: [Category; 23] = [
        Category::Existence,
        Category::TotalHomeEvents,
        Category::HomeAdvantage,
        Category::PlayerGoals,
        Category::PlayerCards,
        Category::Opponents,
        Category::LeagueTeams,
        Category::EventsInHalf,
        Category::PlayerTeams,
        Category::PlayerGoalsInGame,
        Category::GoalAssists,
        Category::CardReasons,
        Category::CardsInLeague,
        Category::GameEvents,
        Category::EventDates,
        Category::PlayerInfo,
        Category::RefereeGames,
        Category::Coaches,
        Category::VenueGames,
        Category::GameInfo,
        Category::MoreWins,
        Category::TeamWins,
        Category::TeamsLeague,
    ];

    /// Stable identifier matching the question-bank category numbering.
    pub fn id(self) -> &'static str {
        match self {
            Category::Existence => "Q1",
            Category::TotalHomeEvents => "Q2",
            Category::HomeAdvantage => "Q3",
            Category::PlayerGoals => "Q4",
            Category::PlayerCards => "Q5",
            Category::Opponents => "Q6",
            Category::LeagueTeams => "Q7",
            Category::EventsInHalf => "Q8",
            Category::PlayerTeams => "Q9",
            Category::PlayerGoalsInGame => "Q10",
            Category::GoalAssists => "Q11",
            Category::CardReasons => "Q12",
            Category::CardsInLeague => "Q13",
            Category::GameEvents => "Q14",
            Category::EventDates => "Q15",
            Category::PlayerInfo => "Q16",
            Category::RefereeGames => "Q17",
            Category::Coaches => "Q18",
            Category::VenueGames => "Q19",
            Category::GameInfo => "Q20",
            Category::MoreWins => "Q21",
            Category::TeamWins => "Q22",
            Category::TeamsLeague => "Q23",
        }
    }

    pub fn from_id(id: &str) -> Option<Category> {
        Category::ALL.iter().copied().find(|c| c.id() == id)
    }

    fn keywords(self) -> &'static [&'static str] {
        match self {
            Category::Existence => &["database", "dataset", "exist"],
            Category::TotalHomeEvents => &["total", "home"],
            Category::HomeAdvantage => &["home", "advantage"],
            Category::PlayerGoals => &["how", "many", "goals", "score"],
            Category::PlayerCards => &["how", "many", "cards"],
            Category::Opponents => &["teams", "against"],
            Category::LeagueTeams => &["teams", "league"],
            Category::EventsInHalf => &["half", "first", "second"],
            Category::PlayerTeams => &["teams", "played"],
            Category::PlayerGoalsInGame => &["goals", "game", "between"],
            Category::GoalAssists => &["assisted", "who"],
            Category::CardReasons => &["why", "cards"],
            Category::CardsInLeague => &["cards", "given"],
            Category::GameEvents => &["events", "game", "between"],
            Category::EventDates => &["when", "list"],
            Category::PlayerInfo => &["information", "about"],
            Category::RefereeGames => &["referee"],
            Category::Coaches => &["coach", "coaches"],
            Category::VenueGames => &["played", "at", "stadium"],
            Category::GameInfo => &["information", "game", "between"],
            Category::MoreWins => &["won", "more", "games"],
            Category::TeamWins => &["how", "many", "games", "win"],
            Category::TeamsLeague => &["what", "league"],
        }
    }
}

/// Extracted question slots, all names canonical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Slots {
    pub teams: Vec<String>,
    pub players: Vec<String>,
    pub leagues: Vec<String>,
    pub referees: Vec<String>,
    pub venues: Vec<String>,
    pub seasons: Vec<String>,
    pub halves: Vec<u8>,
    pub events: Vec<String>,
    pub card_kinds: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TemplateMatch {
    pub category: Category,
    pub query: String,
    pub graph: GraphSel,
    pub allow_fallback: bool,
    pub slots: Slots,
}

/// Case-insensitive word-boundary search; returns the byte offset of the
/// first hit in `haystack_lower`.
fn find_word(haystack_lower: &str, needle_lower: &str) -> Option<usize> {
    if needle_lower.is_empty() {
        return None;
    }
    let mut from = 0;
    while let Some(rel) = haystack_lower[from..].find(needle_lower) {
        let start = from + rel;
        let end = start + needle_lower.len();
        let ok_before = start == 0
            || !haystack_lower[..start]
                .chars()
                .next_back()
                .is_some_and(char::is_alphanumeric);
        let ok_after = end == haystack_lower.len()
            || !haystack_lower[end..].chars().next().is_some_and(char::is_alphanumeric);
        if ok_before && ok_after {
            return Some(start);
        }
        from = start + needle_lower.len().max(1);
    }
    None
}

fn scan_names<'a>(
    question_lower: &str,
    names: impl Iterator<Item = &'a str>,
    allow_plural: bool,
) -> Vec<(usize, String)> {
    let mut sorted: Vec<&str> = names.collect();
    sorted.sort_by_key(|n| std::cmp::Reverse(n.len()));
    let mut hits: Vec<(usize, usize, String)> = Vec::new();
    for name in sorted {
        let lower = name.to_lowercase();
        let found = find_word(question_lower, &lower)
            .map(|at| (at, lower.len()))
            .or_else(|| {
                if allow_plural {
                    let plural = format!("{lower}s");
                    find_word(question_lower, &plural).map(|at| (at, plural.len()))
                } else {
                    None
                }
            });
        if let Some((at, len)) = found {
            let overlaps = hits.iter().any(|&(s, e, _)| at < e && s < at + len);
            if !overlaps {
                hits.push((at, at + len, name.to_string()));
            }
        }
    }
    hits.sort_by_key(|&(s, _, _)| s);
    hits.into_iter().map(|(s, _, n)| (s, n)).collect()
}

fn scan_seasons(question: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut token = String::new();
    let flush = |token: &mut String, out: &mut Vec<String>| {
        if token.contains('-') {
            if let Ok(canonical) = canonicalize_season(token) {
                if !out.contains(&canonical) {
                    out.push(canonical);
                }
            }
        }
        token.clear();
    };
    for c in question.chars() {
        if c.is_ascii_digit() || (c == '-' && !token.is_empty()) {
            token.push(c);
        } else {
            flush(&mut token, &mut out);
        }
    }
    flush(&mut token, &mut out);
    out
}

pub fn extract_slots(question: &str, dict: &EntityDictionary, card: &SchemaCard) -> Slots {
    let lower = question.to_lowercase();
    let grab = |cat: EntityCategory| -> Vec<String> {
        scan_names(&lower, dict.names_in(cat), false)
            .into_iter()
            .map(|(_, n)| n)
            .collect()
    };
    let mut slots = Slots {
        teams: grab(EntityCategory::Team),
        players: grab(EntityCategory::Player),
        leagues: grab(EntityCategory::League),
        referees: grab(EntityCategory::Referee),
        venues: grab(EntityCategory::Venue),
        seasons: scan_seasons(question),
        ..Slots::default()
    };
    if lower.contains("first half") {
        slots.halves.push(1);
    }
    if lower.contains("second half") {
        slots.halves.push(2);
    }
    slots.events = scan_names(&lower, card.event_names.iter().map(String::as_str), true)
        .into_iter()
        .map(|(_, n)| n)
        .collect();
    if lower.contains("yellow card") {
        slots.card_kinds.push("Yellow card".into());
    }
    if lower.contains("red card") {
        slots.card_kinds.push("Red card".into());
    }
    slots
}

fn detect(lower: &str, slots: &Slots) -> Option<Category> {
    let has = |s: &str| lower.contains(s);
    let two_teams = slots.teams.len() >= 2;
    let player = !slots.players.is_empty();

    if has("home advantage") {
        return Some(Category::HomeAdvantage);
    }
    if has("total home") {
        return Some(Category::TotalHomeEvents);
    }
    if has("assisted") {
        return Some(Category::GoalAssists);
    }
    if lower.trim_start().starts_with("why") && !slots.card_kinds.is_empty() {
        return Some(Category::CardReasons);
    }
    if has("yellow and red") || (has("card") && has("how many") && !has("did")) {
        return Some(Category::CardsInLeague);
    }
    if has("how many") && !slots.card_kinds.is_empty() {
        return Some(Category::PlayerCards);
    }
    if has("how many goals") && has("between") {
        return Some(Category::PlayerGoalsInGame);
    }
    if has("how many goals") {
        return Some(Category::PlayerGoals);
    }
    if has("how many games") && (has("win") || has("won")) {
        return Some(Category::TeamWins);
    }
    if has("won more") {
        return Some(Category::MoreWins);
    }
    if has("coach") {
        return Some(Category::Coaches);
    }
    if has("referee") {
        return Some(Category::RefereeGames);
    }
    if !slots.venues.is_empty() && (has("played at") || has("games")) {
        return Some(Category::VenueGames);
    }
    if has("information") && has("game") && two_teams {
        return Some(Category::GameInfo);
    }
    if has("events") && (has("between") || two_teams) {
        return Some(Category::GameEvents);
    }
    if !slots.halves.is_empty() && !slots.events.is_empty() {
        return Some(Category::EventsInHalf);
    }
    if has("when") && !slots.events.is_empty() {
        return Some(Category::EventDates);
    }
    if has("against") {
        return Some(Category::Opponents);
    }
    if has("teams") && has("played") && player {
        return Some(Category::PlayerTeams);
    }
    if player && (has("information") || has("about")) {
        return Some(Category::PlayerInfo);
    }
    if has("teams") && (has("league") || !slots.leagues.is_empty() || !slots.seasons.is_empty()) {
        return Some(Category::LeagueTeams);
    }
    if has("what league") || has("which league") {
        return Some(Category::TeamsLeague);
    }
    if has("database") || has("dataset") {
        return Some(Category::Existence);
    }
    None
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\'', "\\'")
}

/// Renders a Game node pattern with the given optional properties.
fn game_pattern(var: &str, props: &[(&str, Option<&String>)]) -> String {
    let filled: Vec<String> = props
        .iter()
        .filter_map(|(k, v)| v.map(|v| format!("{k}: '{}'", esc(v))))
        .collect();
    if filled.is_empty() {
        format!("({var}:Game)")
    } else {
        format!("({var}:Game {{{}}})", filled.join(", "))
    }
}

fn between_clause(a: &str, b: &str) -> String {
    format!(
        "(g.home_team = '{a}' AND g.away_team = '{b}') OR (g.home_team = '{b}' AND g.away_team = '{a}')",
        a = esc(a),
        b = esc(b)
    )
}

fn missing(expected: &'static str, question: &str, dict: &EntityDictionary) -> NlError {
    let (_, repairs) = super::repair::repair_entities(question, dict);
    let span = repairs
        .iter()
        .find(|r| r.kind == super::repair::RepairKind::Unresolved)
        .map(|r| r.original.clone());
    NlError::UnknownEntity {
        expected,
        span: span.unwrap_or_default(),
    }
}

/// Translates a question via the ordered template list. Returns the match
/// with its query text, or `NoTemplate`/`UnknownEntity`.
pub fn translate(
    question: &str,
    dict: &EntityDictionary,
    card: &SchemaCard,
) -> Result<TemplateMatch, NlError> {
    let lower = question.to_lowercase();
    let slots = extract_slots(question, dict, card);
    let Some(category) = detect(&lower, &slots) else {
        let hint = nearest_category(&lower);
        return Err(NlError::NoTemplate { hint });
    };

    let season = slots.seasons.first();
    let league = slots.leagues.first();
    let team = slots.teams.first();
    let player = slots.players.first();
    let need_team = || team.ok_or_else(|| missing("a team name", question, dict));
    let need_player = || player.ok_or_else(|| missing("a player name", question, dict));
    let need_two_teams = || -> Result<(&String, &String), NlError> {
        if slots.teams.len() >= 2 {
            Ok((&slots.teams[0], &slots.teams[1]))
        } else {
            Err(missing("two team names", question, dict))
        }
    };

    let (query, graph, allow_fallback) = match category {
        Category::Existence => {
            if let Some(t) = team {
                (
                    format!("MATCH (t:Team {{name: '{}'}}) RETURN count(t) AS n", esc(t)),
                    GraphSel::Captions,
                    true,
                )
            } else if let Some(p) = player {
                (
                    format!("MATCH (p:Player {{name: '{}'}}) RETURN count(p) AS n", esc(p)),
                    GraphSel::Captions,
                    false,
                )
            } else {
                return Err(missing("a team or player name", question, dict));
            }
        }
        Category::TotalHomeEvents => {
            let t = need_team()?;
            let event = slots.events.first().cloned().unwrap_or_else(|| "Goal".into());
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (t:Team {{name: '{}'}})-[:HOME_TEAM]->{g}<-[:IS_PART_OF]-(e:Event {{name: '{}'}}) RETURN count(e) AS total",
                    esc(t),
                    esc(&event)
                ),
                GraphSel::Labels,
                false,
            )
        }
        Category::HomeAdvantage => {
            let t = need_team()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (t:Team {{name: '{}'}})-[:WINNER]->{g} RETURN g.home_team, g.away_team",
                    esc(t)
                ),
                GraphSel::Labels,
                false,
            )
        }
        Category::PlayerGoals => {
            let p = need_player()?;
            let g = game_pattern("g", &[("season", season), ("league", league)]);
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:SCORED]->(f:Fact {{kind: 'Goal'}})-[:IS_PART_OF]->{g} RETURN count(f) AS goals",
                    esc(p)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::PlayerCards => {
            let p = need_player()?;
            let kind = slots
                .card_kinds
                .first()
                .cloned()
                .unwrap_or_else(|| "Yellow card".into());
            let g = game_pattern("g", &[("season", season), ("league", league)]);
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:RECEIVED]->(f:Fact {{kind: '{}'}})-[:IS_PART_OF]->{g} RETURN count(f) AS cards",
                    esc(p),
                    esc(&kind)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::Opponents => {
            let t = need_team()?;
            let g = game_pattern("g", &[("season", season), ("league", league)]);
            (
                format!(
                    "MATCH (t:Team {{name: '{t}'}})-[:PARTICIPATED_IN]->{g}<-[:PARTICIPATED_IN]-(o:Team) WHERE o.name <> '{t}' RETURN o.name AS opponent",
                    t = esc(t)
                ),
                GraphSel::Captions,
                true,
            )
        }
        Category::LeagueTeams => {
            let mut props: Vec<String> = Vec::new();
            if let Some(l) = league {
                props.push(format!("league: '{}'", esc(l)));
            }
            if let Some(s) = season {
                props.push(format!("season: '{}'", esc(s)));
            }
            let pat = if props.is_empty() {
                "(t:Team)".to_string()
            } else {
                format!("(t:Team {{{}}})", props.join(", "))
            };
            (
                format!("MATCH {pat} RETURN t.name AS team"),
                GraphSel::Captions,
                true,
            )
        }
        Category::EventsInHalf => {
            let event = slots
                .events
                .first()
                .ok_or_else(|| missing("an event name", question, dict))?;
            let half = slots.halves[0];
            let g = game_pattern("g", &[("league", league), ("season", season)]);
            (
                format!(
                    "MATCH (e:Event {{name: '{}', half: {half}}})-[:IS_PART_OF]->{g} RETURN g.home_team, g.away_team, g.date",
                    esc(event)
                ),
                GraphSel::Labels,
                false,
            )
        }
        Category::PlayerTeams => {
            let p = need_player()?;
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:PLAYS_FOR]->(t:Team) RETURN t.name AS team, t.league AS league",
                    esc(p)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::PlayerGoalsInGame => {
            let p = need_player()?;
            let (a, b) = need_two_teams()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:SCORED]->(f:Fact {{kind: 'Goal'}})-[:IS_PART_OF]->{g} WHERE {} RETURN count(f) AS goals",
                    esc(p),
                    between_clause(a, b)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::GoalAssists => {
            let p = need_player()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:SCORED]->(f:Fact {{kind: 'Goal'}})-[:IS_PART_OF]->{g}, (a:Player)-[:ASSISTED_BY]->(f2:Fact {{kind: 'Assist'}})-[:IS_PART_OF]->(g) WHERE f2.time = f.time RETURN a.name AS assister",
                    esc(p)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::CardReasons => {
            let p = need_player()?;
            let kind = slots
                .card_kinds
                .first()
                .cloned()
                .unwrap_or_else(|| "Yellow card".into());
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:RECEIVED]->(f:Fact {{kind: '{}'}})-[:IS_PART_OF]->{g} RETURN f.detail AS reason",
                    esc(p),
                    esc(&kind)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::CardsInLeague => {
            let g = game_pattern("g", &[("league", league), ("season", season)]);
            (
                format!(
                    "MATCH (f:Fact)-[:IS_PART_OF]->{g} WHERE f.kind = 'Yellow card' OR f.kind = 'Red card' RETURN f.kind AS kind"
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::GameEvents => {
            let (a, b) = need_two_teams()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (e:Event)-[:IS_PART_OF]->{g} WHERE {} RETURN e.name AS event",
                    between_clause(a, b)
                ),
                GraphSel::Labels,
                false,
            )
        }
        Category::EventDates => {
            let event = slots
                .events
                .first()
                .ok_or_else(|| missing("an event name", question, dict))?;
            let g = game_pattern("g", &[("league", league), ("season", season)]);
            (
                format!(
                    "MATCH (e:Event {{name: '{}'}})-[:IS_PART_OF]->{g} RETURN g.date AS date",
                    esc(event)
                ),
                GraphSel::Labels,
                false,
            )
        }
        Category::PlayerInfo => {
            let p = need_player()?;
            (
                format!(
                    "MATCH (p:Player {{name: '{}'}})-[:PLAYS_FOR]->(t:Team) RETURN p.name AS player, t.name AS team, t.league AS league, t.season AS season",
                    esc(p)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::RefereeGames => {
            let referee = slots
                .referees
                .first()
                .ok_or_else(|| missing("a referee name", question, dict))?;
            (
                format!("MATCH (g:Game {{referee: '{}'}}) RETURN g", esc(referee)),
                GraphSel::Captions,
                true,
            )
        }
        Category::Coaches => {
            let t = need_team()?;
            (
                format!(
                    "MATCH (p:Player)-[r:PLAYED_IN]->(g:Game), (p)-[:PLAYS_FOR]->(t:Team {{name: '{}'}}) WHERE r.role = 'Coach' RETURN p.name AS coach",
                    esc(t)
                ),
                GraphSel::Captions,
                false,
            )
        }
        Category::VenueGames => {
            let venue = slots
                .venues
                .first()
                .ok_or_else(|| missing("a venue name", question, dict))?;
            (
                format!(
                    "MATCH (g:Game {{venue: '{}'}}) RETURN g.home_team, g.away_team, g.date",
                    esc(venue)
                ),
                GraphSel::Captions,
                true,
            )
        }
        Category::GameInfo => {
            let (a, b) = need_two_teams()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!("MATCH {g} WHERE {} RETURN g", between_clause(a, b)),
                GraphSel::Captions,
                true,
            )
        }
        Category::MoreWins => {
            let (a, b) = need_two_teams()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (t:Team)-[:WINNER]->{g} WHERE t.name = '{}' OR t.name = '{}' RETURN t.name AS winner",
                    esc(a),
                    esc(b)
                ),
                GraphSel::Captions,
                true,
            )
        }
        Category::TeamWins => {
            let t = need_team()?;
            let g = game_pattern("g", &[("season", season)]);
            (
                format!(
                    "MATCH (t:Team {{name: '{}'}})-[:WINNER]->{g} RETURN count(g) AS wins",
                    esc(t)
                ),
                GraphSel::Captions,
                true,
            )
        }
        Category::TeamsLeague => {
            if slots.teams.is_empty() {
                return Err(missing("at least one team name", question, dict));
            }
            let clauses: Vec<String> = slots
                .teams
                .iter()
                .map(|t| format!("t.name = '{}'", esc(t)))
                .collect();
            (
                format!(
                    "MATCH (t:Team) WHERE {} RETURN t.name AS team, t.league AS league",
                    clauses.join(" OR ")
                ),
                GraphSel::Captions,
                true,
            )
        }
    };

    Ok(TemplateMatch {
        category,
        query,
        graph,
        allow_fallback,
        slots,
    })
}

/// Category detection shared by translation and answer synthesis.
pub fn match_category(
    question: &str,
    dict: &EntityDictionary,
    card: &SchemaCard,
) -> Option<(Category, Slots)> {
    let lower = question.to_lowercase();
    let slots = extract_slots(question, dict, card);
    detect(&lower, &slots).map(|c| (c, slots))
}

fn nearest_category(lower: &str) -> Option<String> {
    let mut best: Option<(usize, Category)> = None;
    for cat in Category::ALL {
        let hits = cat
            .keywords()
            .iter()
            .filter(|k| lower.contains(*k))
            .count();
        if hits > 0 && best.is_none_or(|(b, _)| hits > b) {
            best = Some((hits, cat));
        }
    }
    best.map(|(_, c)| format!("{} ({:?})", c.id(), c))
}

/// (question, query) pairs for the LLM prompt, generated with the rule
/// templates over sample entities so both backends share one schema.
pub fn few_shot_pairs(dict: &EntityDictionary, card: &SchemaCard) -> Vec<(String, String)> {
    let team = dict.names_in(EntityCategory::Team).next().unwrap_or("Example FC");
    let player = dict
        .names_in(EntityCategory::Player)
        .next()
        .unwrap_or("Example Player");
    let league = dict.names_in(EntityCategory::League).next().unwrap_or("LG");
    let questions = [
        format!("Is {team} in the database?"),
        format!("Give me the total home goals for {team} in the 2014-2015 season."),
        format!("How many goals did {player} score in the 2014-2015 season?"),
        format!("Give all the teams in the league {league} in the 2014-2015 season."),
        format!("How many games did {team} win in the 2014-2015 season?"),
    ];
    questions
        .into_iter()
        .filter_map(|q| {
            translate(&q, dict, card)
                .ok()
                .map(|m| (q, m.query))
        })
        .collect()
}
