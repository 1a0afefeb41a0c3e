//! Parsing and validation of the per-game source files.
//!
//! Each game directory carries two JSON files: `Labels-v2.json` (timestamped
//! match events) and `Labels-caption.json` (game metadata plus lineups with
//! per-player facts). The documented schemas are described in
//! `docs/input-format.md`; parsing reports schema violations with the exact
//! JSON path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error at {path}: {detail}")]
    Schema { path: String, detail: String },
    #[error("value error at {path}: {detail}")]
    Value { path: String, detail: String },
    #[error("i/o error for {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn schema(path: impl Into<String>, detail: impl Into<String>) -> IngestError {
    IngestError::Schema {
        path: path.into(),
        detail: detail.into(),
    }
}

fn value_err(path: impl Into<String>, detail: impl Into<String>) -> IngestError {
    IngestError::Value {
        path: path.into(),
        detail: detail.into(),
    }
}

/// Which side of the fixture an event or lineup entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TeamSide {
    Home,
    Away,
    NotApplicable,
}

/// Per-player incident codes from the captions lineups. Code 5 is unused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactType {
    YellowCard = 1,
    RedCard = 2,
    Goal = 3,
    OwnGoal = 4,
    SubstitutionOut = 6,
    SubstitutionIn = 7,
    Assist = 8,
}

impl FactType {
    pub fn from_code(code: i64) -> Option<FactType> {
        match code {
            1 => Some(FactType::YellowCard),
            2 => Some(FactType::RedCard),
            3 => Some(FactType::Goal),
            4 => Some(FactType::OwnGoal),
            6 => Some(FactType::SubstitutionOut),
            7 => Some(FactType::SubstitutionIn),
            8 => Some(FactType::Assist),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        self as i64
    }

    /// Human-readable kind stored on Fact nodes.
    pub fn kind_name(self) -> &'static str {
        match self {
            FactType::YellowCard => "Yellow card",
            FactType::RedCard => "Red card",
            FactType::Goal => "Goal",
            FactType::OwnGoal => "Own goal",
            FactType::SubstitutionOut => "Substitution out",
            FactType::SubstitutionIn => "Substitution in",
            FactType::Assist => "Assist",
        }
    }

    pub fn is_card(self) -> bool {
        matches!(self, FactType::YellowCard | FactType::RedCard)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub home_team: String,
    pub away_team: String,
    pub score_home: u32,
    pub score_away: u32,
    pub date: String,
    pub venue: Option<String>,
    pub referee: Option<String>,
    pub season: String,
    pub league: String,
    pub round: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub game_id: String,
    pub label: String,
    pub half: u8,
    pub clock: u32,
    pub team_side: TeamSide,
    pub visibility: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactEntry {
    pub fact_type: FactType,
    pub time: String,
    pub subject_player: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerEntry {
    pub game_id: String,
    pub name: String,
    pub team_side: TeamSide,
    pub shirt_number: Option<u32>,
    pub lineup_role: Option<String>,
    pub facts: Vec<FactEntry>,
}

/// A fully parsed dataset ready for graph construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub games: Vec<GameRecord>,
    pub events: Vec<EventAnnotation>,
    pub players: Vec<PlayerEntry>,
}

/// Trims, collapses internal whitespace, and applies Unicode NFC.
/// Casing is untouched; the entity dictionary resolves casing downstream.
pub fn normalize_name(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .nfc()
        .collect()
}

/// Canonicalizes season spellings to "YYYY-YYYY".
///
/// Accepts "2014-2015", "2014-15", and "15-2016" (two-digit halves are
/// expanded from the four-digit neighbor). The second year must be the
/// first plus one.
pub fn canonicalize_season(raw: &str) -> Result<String, IngestError> {
    let raw = raw.trim();
    let bad = || value_err("season", format!("unrecognized season {raw:?}"));
    let (a, b) = raw.split_once(['-', '/']).ok_or_else(bad)?;
    let (a, b) = (a.trim(), b.trim());
    if !a.chars().all(|c| c.is_ascii_digit()) || !b.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let (first, second) = match (a.len(), b.len()) {
        (4, 4) => (a.parse::<i32>().unwrap(), b.parse::<i32>().unwrap()),
        (4, 2) => {
            let first = a.parse::<i32>().unwrap();
            let yy = b.parse::<i32>().unwrap();
            let mut second = first - first.rem_euclid(100) + yy;
            if second <= first {
                second += 100;
            }
            (first, second)
        }
        (2, 4) => {
            let second = b.parse::<i32>().unwrap();
            let yy = a.parse::<i32>().unwrap();
            let mut first = second - second.rem_euclid(100) + yy;
            if first >= second {
                first -= 100;
            }
            (first, second)
        }
        _ => return Err(bad()),
    };
    if second != first + 1 {
        return Err(value_err(
            "season",
            format!("season years must be consecutive, got {first}-{second}"),
        ));
    }
    Ok(format!("{first:04}-{second:04}"))
}

/// True iff `s` already has the canonical "YYYY-YYYY" consecutive-year form.
pub fn is_canonical_season(s: &str) -> bool {
    matches!(canonicalize_season(s), Ok(c) if c == s)
}

/// Splits a game-time string "H - MM:SS" into (half, seconds-into-half).
pub fn parse_game_time(raw: &str, path: &str) -> Result<(u8, u32), IngestError> {
    let bad = |detail: String| value_err(path, detail);
    let (half_part, clock_part) = raw
        .split_once(" - ")
        .ok_or_else(|| bad(format!("game time {raw:?} is not \"H - MM:SS\"")))?;
    let half: u8 = half_part
        .trim()
        .parse()
        .map_err(|_| bad(format!("half {half_part:?} is not a number")))?;
    if !(1..=2).contains(&half) {
        return Err(bad(format!("half must be 1 or 2, got {half}")));
    }
    let (m, s) = clock_part
        .trim()
        .split_once(':')
        .ok_or_else(|| bad(format!("clock {clock_part:?} is not \"MM:SS\"")))?;
    let minutes: u32 = m
        .parse()
        .map_err(|_| bad(format!("minutes {m:?} is not a number")))?;
    let seconds: u32 = s
        .parse()
        .map_err(|_| bad(format!("seconds {s:?} is not a number")))?;
    if seconds >= 60 {
        return Err(bad(format!("seconds must be < 60, got {seconds}")));
    }
    Ok((half, minutes * 60 + seconds))
}

fn parse_team_side(raw: &str, path: &str) -> Result<TeamSide, IngestError> {
    let lower = raw.trim().to_lowercase();
    match lower.as_str() {
        "home" => Ok(TeamSide::Home),
        "away" => Ok(TeamSide::Away),
        "not applicable" => Ok(TeamSide::NotApplicable),
        _ => Err(value_err(
            path,
            format!("team must be home/away/not applicable, got {raw:?}"),
        )),
    }
}

// --- JSON navigation with path tracking ---

fn as_object<'a>(
    v: &'a Value,
    path: &str,
) -> Result<&'a serde_json::Map<String, Value>, IngestError> {
    v.as_object()
        .ok_or_else(|| schema(path, "expected a JSON object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, IngestError> {
    v.as_array()
        .ok_or_else(|| schema(path, "expected a JSON array"))
}

fn req<'a>(
    map: &'a serde_json::Map<String, Value>,
    key: &str,
    parent: &str,
) -> Result<&'a Value, IngestError> {
    map.get(key)
        .ok_or_else(|| schema(format!("{parent}.{key}"), "missing required field"))
}

fn req_str(
    map: &serde_json::Map<String, Value>,
    key: &str,
    parent: &str,
) -> Result<String, IngestError> {
    let path = format!("{parent}.{key}");
    req(map, key, parent)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, "expected a string"))
}

fn opt_str(
    map: &serde_json::Map<String, Value>,
    key: &str,
    parent: &str,
) -> Result<Option<String>, IngestError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(schema(format!("{parent}.{key}"), "expected a string")),
    }
}

fn parse_root(bytes: &[u8]) -> Result<Value, IngestError> {
    serde_json::from_slice(bytes).map_err(|e| schema("$", format!("invalid JSON: {e}")))
}

/// Parses a `Labels-v2.json` body into event annotations, order preserved.
pub fn parse_labels_file(
    bytes: &[u8],
    game_id: &str,
) -> Result<Vec<EventAnnotation>, IngestError> {
    let root = parse_root(bytes)?;
    let obj = as_object(&root, "$")?;
    let annotations = as_array(req(obj, "annotations", "$")?, "$.annotations")?;
    let mut events = Vec::with_capacity(annotations.len());
    for (i, entry) in annotations.iter().enumerate() {
        let path = format!("$.annotations[{i}]");
        let entry = as_object(entry, &path)?;
        let label = normalize_name(&req_str(entry, "label", &path)?);
        if label.is_empty() {
            return Err(value_err(format!("{path}.label"), "label is empty"));
        }
        let game_time = req_str(entry, "gameTime", &path)?;
        let (half, clock) = parse_game_time(&game_time, &format!("{path}.gameTime"))?;
        let team_raw = req_str(entry, "team", &path)?;
        let team_side = parse_team_side(&team_raw, &format!("{path}.team"))?;
        let visibility = opt_str(entry, "visibility", &path)?;
        events.push(EventAnnotation {
            game_id: game_id.to_string(),
            label,
            half,
            clock,
            team_side,
            visibility,
        });
    }
    Ok(events)
}

/// Directory-derived metadata used when the captions body omits it.
#[derive(Debug, Clone, Default)]
pub struct DirContext {
    pub league: Option<String>,
    pub season: Option<String>,
}

/// Parses a `Labels-caption.json` body. League and season must be present
/// in the body; see [`parse_captions_file_with_context`] for the loader
/// variant that falls back to directory-derived values.
pub fn parse_captions_file(
    bytes: &[u8],
    game_id: &str,
) -> Result<(GameRecord, Vec<PlayerEntry>), IngestError> {
    parse_captions_file_with_context(bytes, game_id, &DirContext::default())
}

pub fn parse_captions_file_with_context(
    bytes: &[u8],
    game_id: &str,
    ctx: &DirContext,
) -> Result<(GameRecord, Vec<PlayerEntry>), IngestError> {
    let root = parse_root(bytes)?;
    let obj = as_object(&root, "$")?;

    let home_team = normalize_name(&req_str(obj, "gameHomeTeam", "$")?);
    let away_team = normalize_name(&req_str(obj, "gameAwayTeam", "$")?);
    let date = req_str(obj, "gameDate", "$")?.trim().to_string();
    let score_raw = req_str(obj, "score", "$")?;
    let (score_home, score_away) = parse_score(&score_raw, "$.score")?;
    let venue = opt_str(obj, "venue", "$")?.map(|s| normalize_name(&s));
    let referee = opt_str(obj, "referee", "$")?.map(|s| normalize_name(&s));
    let round = opt_str(obj, "round", "$")?.map(|s| normalize_name(&s));

    let league = match opt_str(obj, "league", "$")? {
        Some(l) => normalize_name(&l),
        None => ctx
            .league
            .clone()
            .ok_or_else(|| schema("$.league", "missing required field"))?,
    };
    let season_raw = match opt_str(obj, "season", "$")? {
        Some(s) => s,
        None => ctx
            .season
            .clone()
            .ok_or_else(|| schema("$.season", "missing required field"))?,
    };
    let season = canonicalize_season(&season_raw)?;

    let record = GameRecord {
        game_id: game_id.to_string(),
        home_team,
        away_team,
        score_home,
        score_away,
        date,
        venue,
        referee,
        season,
        league,
        round,
    };

    let lineup = as_object(req(obj, "lineup", "$")?, "$.lineup")?;
    let mut players = Vec::new();
    for (side_key, side) in [("home", TeamSide::Home), ("away", TeamSide::Away)] {
        let arr = as_array(
            req(lineup, side_key, "$.lineup")?,
            &format!("$.lineup.{side_key}"),
        )?;
        for (i, entry) in arr.iter().enumerate() {
            let path = format!("$.lineup.{side_key}[{i}]");
            players.push(parse_player(entry, &path, game_id, side)?);
        }
    }
    Ok((record, players))
}

fn parse_score(raw: &str, path: &str) -> Result<(u32, u32), IngestError> {
    let bad = || value_err(path, format!("score {raw:?} is not \"h - a\""));
    let (h, a) = raw.split_once('-').ok_or_else(bad)?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    Ok((h, a))
}

fn parse_player(
    v: &Value,
    path: &str,
    game_id: &str,
    side: TeamSide,
) -> Result<PlayerEntry, IngestError> {
    let obj = as_object(v, path)?;
    let name = normalize_name(&req_str(obj, "name", path)?);
    if name.is_empty() {
        return Err(value_err(format!("{path}.name"), "player name is empty"));
    }
    let shirt_number = match obj.get("shirt_number") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(n.as_u64().ok_or_else(|| {
            value_err(
                format!("{path}.shirt_number"),
                "shirt number must be a non-negative integer",
            )
        })? as u32),
        Some(Value::String(s)) => Some(s.parse().map_err(|_| {
            value_err(format!("{path}.shirt_number"), "shirt number is not a number")
        })?),
        Some(_) => {
            return Err(schema(
                format!("{path}.shirt_number"),
                "expected a number or numeric string",
            ))
        }
    };
    let lineup_role = opt_str(obj, "lineup", path)?.map(|s| normalize_name(&s));
    let mut facts = Vec::new();
    if let Some(raw_facts) = obj.get("facts") {
        let arr = as_array(raw_facts, &format!("{path}.facts"))?;
        for (i, f) in arr.iter().enumerate() {
            facts.push(parse_fact(f, &format!("{path}.facts[{i}]"))?);
        }
    }
    Ok(PlayerEntry {
        game_id: game_id.to_string(),
        name,
        team_side: side,
        shirt_number,
        lineup_role,
        facts,
    })
}

fn parse_fact(v: &Value, path: &str) -> Result<FactEntry, IngestError> {
    let obj = as_object(v, path)?;
    let code = match req(obj, "type", path)? {
        Value::Number(n) => n
            .as_i64()
            .ok_or_else(|| value_err(format!("{path}.type"), "fact type is not an integer"))?,
        Value::String(s) => s.trim().parse::<i64>().map_err(|_| {
            value_err(format!("{path}.type"), format!("fact type {s:?} is not a number"))
        })?,
        _ => return Err(schema(format!("{path}.type"), "expected a number or string")),
    };
    let fact_type = FactType::from_code(code).ok_or_else(|| {
        value_err(
            format!("{path}.type"),
            format!("unknown fact type code {code} (valid: 1-4, 6-8)"),
        )
    })?;
    let time = req_str(obj, "time", path)?.trim().to_string();
    let subject_player = normalize_name(&req_str(obj, "player", path)?);
    let detail = opt_str(obj, "detail", path)?
        .map(|s| normalize_name(&s))
        .unwrap_or_default();
    if fact_type.is_card() && (time.is_empty() || subject_player.is_empty() || detail.is_empty())
    {
        return Err(schema(
            path.to_string(),
            "card facts require time, player, and detail",
        ));
    }
    Ok(FactEntry {
        fact_type,
        time,
        subject_player,
        detail,
    })
}

// --- dataset-level validation ---

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationKind {
    DanglingGameRef,
    DuplicateGameId,
    SeasonFormat,
    SameTeams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationFinding {
    pub kind: ValidationKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<ValidationFinding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "validation: ok");
        }
        for finding in &self.findings {
            writeln!(f, "validation: {:?}: {}", finding.kind, finding.message)?;
        }
        Ok(())
    }
}

/// Cross-checks a parsed dataset; the dataset is accepted iff the report
/// carries zero findings.
pub fn validate_dataset(
    games: &[GameRecord],
    events: &[EventAnnotation],
    players: &[PlayerEntry],
) -> ValidationReport {
    let mut findings = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for g in games {
        *seen.entry(g.game_id.as_str()).or_default() += 1;
    }
    for (id, count) in &seen {
        if *count > 1 {
            findings.push(ValidationFinding {
                kind: ValidationKind::DuplicateGameId,
                message: format!("game id {id:?} appears {count} times"),
            });
        }
    }
    for g in games {
        if !is_canonical_season(&g.season) {
            findings.push(ValidationFinding {
                kind: ValidationKind::SeasonFormat,
                message: format!("game {:?} has non-canonical season {:?}", g.game_id, g.season),
            });
        }
        if g.home_team == g.away_team {
            findings.push(ValidationFinding {
                kind: ValidationKind::SameTeams,
                message: format!("game {:?} has identical home and away teams", g.game_id),
            });
        }
    }
    let dangling = |what: &str, game_id: &str| {
        if !seen.contains_key(game_id) {
            Some(ValidationFinding {
                kind: ValidationKind::DanglingGameRef,
                message: format!("{what} references unknown game id {game_id:?}"),
            })
        } else {
            None
        }
    };
    for e in events {
        if let Some(f) = dangling("event", &e.game_id) {
            findings.push(f);
        }
    }
    for p in players {
        if let Some(f) = dangling("player entry", &p.game_id) {
            findings.push(f);
        }
    }
    ValidationReport { findings }
}

// --- filesystem loader ---

pub const LABELS_FILE: &str = "Labels-v2.json";
pub const CAPTIONS_FILE: &str = "Labels-caption.json";

/// Walks `data_dir/league/season/game/` and parses every game directory.
/// Directory names supply league and season when the captions body omits
/// them. Game ids are the relative `league/season/game` paths.
pub fn load_dataset(data_dir: &Path) -> Result<Dataset, IngestError> {
    let mut dataset = Dataset::default();
    for league_dir in sorted_dirs(data_dir)? {
        let league = dir_name(&league_dir);
        for season_dir in sorted_dirs(&league_dir)? {
            let season_raw = dir_name(&season_dir);
            for game_dir in sorted_dirs(&season_dir)? {
                let game_id = format!("{league}/{season_raw}/{}", dir_name(&game_dir));
                let ctx = DirContext {
                    league: Some(normalize_name(&league)),
                    season: canonicalize_season(&season_raw).ok(),
                };
                let labels_path = game_dir.join(LABELS_FILE);
                let captions_path = game_dir.join(CAPTIONS_FILE);
                let labels_bytes = read(&labels_path)?;
                let captions_bytes = read(&captions_path)?;
                let mut events = parse_labels_file(&labels_bytes, &game_id)?;
                let (record, mut players) =
                    parse_captions_file_with_context(&captions_bytes, &game_id, &ctx)?;
                dataset.games.push(record);
                dataset.events.append(&mut events);
                dataset.players.append(&mut players);
            }
        }
    }
    Ok(dataset)
}

fn read(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn sorted_dirs(path: &Path) -> Result<Vec<std::path::PathBuf>, IngestError> {
    let entries = std::fs::read_dir(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn dir_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
