//! Knowledge-graph construction from parsed match records.
//!
//! Two independent graphs are built per dataset: the Labels KG
//! (Game/Team/Event) and the Captions KG (Game/Team/Player/Fact). They share
//! an entity dictionary of canonical names but no node ids.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, GraphError, NodeId, PropertyMap, PropertyValue};
use crate::ingest::{Dataset, EventAnnotation, FactEntry, FactType, GameRecord, PlayerEntry, TeamSide};

pub const EDGE_PARTICIPATED_IN: &str = "PARTICIPATED_IN";
pub const EDGE_HOME_TEAM: &str = "HOME_TEAM";
pub const EDGE_AWAY_TEAM: &str = "AWAY_TEAM";
pub const EDGE_WINNER: &str = "WINNER";
pub const EDGE_LOSER: &str = "LOSER";
pub const EDGE_ASSOCIATED_TO: &str = "ASSOCIATED_TO";
pub const EDGE_IS_PART_OF: &str = "IS_PART_OF";
pub const EDGE_PLAYED_IN: &str = "PLAYED_IN";
pub const EDGE_PLAYS_FOR: &str = "PLAYS_FOR";
pub const EDGE_RECEIVED: &str = "RECEIVED";
pub const EDGE_SCORED: &str = "SCORED";
pub const EDGE_COMMITTED: &str = "COMMITTED"; // reserved
pub const EDGE_ASSISTED_BY: &str = "ASSISTED_BY";
pub const EDGE_SUBSTITUTED_WITH: &str = "SUBSTITUTED_WITH";

/// The closed edge-type vocabulary of both graphs.
pub const EDGE_TYPES: &[&str] = &[
    EDGE_PARTICIPATED_IN,
    EDGE_HOME_TEAM,
    EDGE_AWAY_TEAM,
    EDGE_WINNER,
    EDGE_LOSER,
    EDGE_ASSOCIATED_TO,
    EDGE_IS_PART_OF,
    EDGE_PLAYED_IN,
    EDGE_PLAYS_FOR,
    EDGE_RECEIVED,
    EDGE_SCORED,
    EDGE_COMMITTED,
    EDGE_ASSISTED_BY,
    EDGE_SUBSTITUTED_WITH,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EntityCategory {
    Team,
    Player,
    League,
    Referee,
    Venue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSel {
    Labels,
    Captions,
}

/// One canonical entity: display casing fixed by first registration, plus
/// the node ids it resolves to in each graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityEntry {
    pub display: String,
    pub labels_nodes: BTreeSet<NodeId>,
    pub captions_nodes: BTreeSet<NodeId>,
}

/// Canonical-name registry for teams, players, leagues, referees, and venues.
/// Keys are case-folded; the first registered casing wins as display form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityDictionary {
    categories: BTreeMap<EntityCategory, BTreeMap<String, EntityEntry>>,
}

impl EntityDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    fn fold(name: &str) -> String {
        name.to_lowercase()
    }

    /// Registers `name` (already whitespace/NFC normalized) and returns the
    /// canonical display form.
    pub fn canonicalize(&mut self, category: EntityCategory, name: &str) -> String {
        let key = Self::fold(name);
        let entry = self
            .categories
            .entry(category)
            .or_default()
            .entry(key)
            .or_insert_with(|| EntityEntry {
                display: name.to_string(),
                ..EntityEntry::default()
            });
        entry.display.clone()
    }

    pub fn attach(&mut self, category: EntityCategory, name: &str, sel: GraphSel, node: NodeId) {
        let key = Self::fold(name);
        if let Some(entry) = self.categories.entry(category).or_default().get_mut(&key) {
            match sel {
                GraphSel::Labels => entry.labels_nodes.insert(node),
                GraphSel::Captions => entry.captions_nodes.insert(node),
            };
        }
    }

    pub fn lookup(&self, category: EntityCategory, name: &str) -> Option<&EntityEntry> {
        self.categories.get(&category)?.get(&Self::fold(name))
    }

    pub fn is_empty(&self) -> bool {
        self.categories.values().all(BTreeMap::is_empty)
    }

    /// All canonical display names with their categories, deterministic order.
    pub fn all_names(&self) -> impl Iterator<Item = (EntityCategory, &str)> {
        self.categories
            .iter()
            .flat_map(|(cat, m)| m.values().map(move |e| (*cat, e.display.as_str())))
    }

    pub fn names_in(&self, category: EntityCategory) -> impl Iterator<Item = &str> {
        self.categories
            .get(&category)
            .into_iter()
            .flat_map(|m| m.values().map(|e| e.display.as_str()))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct DictEntryIo {
    labels: Vec<u32>,
    captions: Vec<u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct DictFileIo {
    teams: BTreeMap<String, DictEntryIo>,
    players: BTreeMap<String, DictEntryIo>,
    leagues: BTreeMap<String, DictEntryIo>,
    referees: BTreeMap<String, DictEntryIo>,
    venues: BTreeMap<String, DictEntryIo>,
}

impl EntityDictionary {
    pub fn to_json(&self) -> serde_json::Value {
        let mut io = DictFileIo::default();
        for (cat, map) in &self.categories {
            let target = match cat {
                EntityCategory::Team => &mut io.teams,
                EntityCategory::Player => &mut io.players,
                EntityCategory::League => &mut io.leagues,
                EntityCategory::Referee => &mut io.referees,
                EntityCategory::Venue => &mut io.venues,
            };
            for entry in map.values() {
                target.insert(
                    entry.display.clone(),
                    DictEntryIo {
                        labels: entry.labels_nodes.iter().map(|n| n.0).collect(),
                        captions: entry.captions_nodes.iter().map(|n| n.0).collect(),
                    },
                );
            }
        }
        serde_json::to_value(io).expect("dictionary serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let io: DictFileIo = serde_json::from_value(v.clone())?;
        let mut dict = EntityDictionary::new();
        let cats = [
            (EntityCategory::Team, io.teams),
            (EntityCategory::Player, io.players),
            (EntityCategory::League, io.leagues),
            (EntityCategory::Referee, io.referees),
            (EntityCategory::Venue, io.venues),
        ];
        for (cat, map) in cats {
            for (display, entry) in map {
                dict.canonicalize(cat, &display);
                for id in entry.labels {
                    dict.attach(cat, &display, GraphSel::Labels, NodeId(id));
                }
                for id in entry.captions {
                    dict.attach(cat, &display, GraphSel::Captions, NodeId(id));
                }
            }
        }
        Ok(dict)
    }
}

/// Per-graph construction state: the graph plus dedup keys for Team and
/// Player nodes.
pub struct KgBuilder {
    pub graph: Graph,
    sel: GraphSel,
    teams: BTreeMap<(String, String, String), NodeId>,
    players: BTreeMap<String, NodeId>,
    plays_for: BTreeSet<(NodeId, NodeId)>,
}

impl KgBuilder {
    pub fn new(sel: GraphSel) -> Self {
        KgBuilder {
            graph: Graph::new(),
            sel,
            teams: BTreeMap::new(),
            players: BTreeMap::new(),
            plays_for: BTreeSet::new(),
        }
    }

    fn team_node(
        &mut self,
        name: &str,
        league: &str,
        season: &str,
        dict: &mut EntityDictionary,
    ) -> Result<NodeId, GraphError> {
        let canonical = dict.canonicalize(EntityCategory::Team, name);
        let key = (canonical.clone(), league.to_string(), season.to_string());
        if let Some(&id) = self.teams.get(&key) {
            return Ok(id);
        }
        let mut props = PropertyMap::new();
        props.insert("name".into(), PropertyValue::text(&canonical));
        props.insert("league".into(), PropertyValue::text(league));
        props.insert("season".into(), PropertyValue::text(season));
        let id = self.graph.add_node("Team", props)?;
        dict.attach(EntityCategory::Team, &canonical, self.sel, id);
        self.teams.insert(key, id);
        Ok(id)
    }

    /// Builds the Game node, its two Team nodes (reused when already
    /// present), and the PARTICIPATED_IN / HOME_TEAM / AWAY_TEAM edges,
    /// plus WINNER/LOSER when the game is not a draw.
    pub fn build_game_and_teams(
        &mut self,
        rec: &GameRecord,
        dict: &mut EntityDictionary,
    ) -> Result<(NodeId, NodeId, NodeId), GraphError> {
        let league = dict.canonicalize(EntityCategory::League, &rec.league);
        let home_name = dict.canonicalize(EntityCategory::Team, &rec.home_team);
        let away_name = dict.canonicalize(EntityCategory::Team, &rec.away_team);

        let mut props = PropertyMap::new();
        props.insert("game_id".into(), PropertyValue::text(&rec.game_id));
        props.insert("home_team".into(), PropertyValue::text(&home_name));
        props.insert("away_team".into(), PropertyValue::text(&away_name));
        props.insert("score_home".into(), PropertyValue::Int(rec.score_home as i64));
        props.insert("score_away".into(), PropertyValue::Int(rec.score_away as i64));
        props.insert("date".into(), PropertyValue::text(&rec.date));
        props.insert("season".into(), PropertyValue::text(&rec.season));
        props.insert("league".into(), PropertyValue::text(&league));
        if let Some(venue) = &rec.venue {
            let canonical = dict.canonicalize(EntityCategory::Venue, venue);
            props.insert("venue".into(), PropertyValue::text(canonical));
        }
        if let Some(referee) = &rec.referee {
            let canonical = dict.canonicalize(EntityCategory::Referee, referee);
            props.insert("referee".into(), PropertyValue::text(canonical));
        }
        if let Some(round) = &rec.round {
            props.insert("round".into(), PropertyValue::text(round));
        }
        let game = self.graph.add_node("Game", props)?;

        dict.attach(EntityCategory::League, &league, self.sel, game);
        if let Some(venue) = &rec.venue {
            dict.attach(EntityCategory::Venue, venue, self.sel, game);
        }
        if let Some(referee) = &rec.referee {
            dict.attach(EntityCategory::Referee, referee, self.sel, game);
        }

        let home = self.team_node(&home_name, &league, &rec.season, dict)?;
        let away = self.team_node(&away_name, &league, &rec.season, dict)?;

        self.graph
            .add_edge(home, game, EDGE_PARTICIPATED_IN, PropertyMap::new())?;
        self.graph
            .add_edge(away, game, EDGE_PARTICIPATED_IN, PropertyMap::new())?;
        self.graph
            .add_edge(home, game, EDGE_HOME_TEAM, PropertyMap::new())?;
        self.graph
            .add_edge(away, game, EDGE_AWAY_TEAM, PropertyMap::new())?;
        if rec.score_home != rec.score_away {
            let (winner, loser) = if rec.score_home > rec.score_away {
                (home, away)
            } else {
                (away, home)
            };
            self.graph
                .add_edge(winner, game, EDGE_WINNER, PropertyMap::new())?;
            self.graph
                .add_edge(loser, game, EDGE_LOSER, PropertyMap::new())?;
        }
        Ok((game, home, away))
    }

    /// Builds an Event node with IS_PART_OF to the game and, when the event
    /// is attributed to a side, ASSOCIATED_TO to that team.
    pub fn build_event(
        &mut self,
        ev: &EventAnnotation,
        game: NodeId,
        home: NodeId,
        away: NodeId,
    ) -> Result<NodeId, GraphError> {
        let mut props = PropertyMap::new();
        props.insert("name".into(), PropertyValue::text(&ev.label));
        props.insert("half".into(), PropertyValue::Int(ev.half as i64));
        props.insert("clock".into(), PropertyValue::Int(ev.clock as i64));
        if let Some(vis) = &ev.visibility {
            props.insert("visibility".into(), PropertyValue::text(vis));
        }
        let event = self.graph.add_node("Event", props)?;
        self.graph
            .add_edge(event, game, EDGE_IS_PART_OF, PropertyMap::new())?;
        match ev.team_side {
            TeamSide::Home => {
                self.graph
                    .add_edge(event, home, EDGE_ASSOCIATED_TO, PropertyMap::new())?;
            }
            TeamSide::Away => {
                self.graph
                    .add_edge(event, away, EDGE_ASSOCIATED_TO, PropertyMap::new())?;
            }
            TeamSide::NotApplicable => {}
        }
        Ok(event)
    }

    /// Builds (or reuses) a Player node keyed by canonical name, with a
    /// PLAYED_IN edge to the game (carrying shirt number and lineup role)
    /// and a PLAYS_FOR edge to the team, deduplicated per (player, team).
    pub fn build_player(
        &mut self,
        p: &PlayerEntry,
        game: NodeId,
        team: NodeId,
        dict: &mut EntityDictionary,
    ) -> Result<NodeId, GraphError> {
        let canonical = dict.canonicalize(EntityCategory::Player, &p.name);
        let player = match self.players.get(&canonical) {
            Some(&id) => id,
            None => {
                let mut props = PropertyMap::new();
                props.insert("name".into(), PropertyValue::text(&canonical));
                let id = self.graph.add_node("Player", props)?;
                dict.attach(EntityCategory::Player, &canonical, self.sel, id);
                self.players.insert(canonical.clone(), id);
                id
            }
        };
        let mut played_props = PropertyMap::new();
        if let Some(shirt) = p.shirt_number {
            played_props.insert("shirt_number".into(), PropertyValue::Int(shirt as i64));
        }
        if let Some(role) = &p.lineup_role {
            played_props.insert("role".into(), PropertyValue::text(role));
        }
        self.graph
            .add_edge(player, game, EDGE_PLAYED_IN, played_props)?;
        if self.plays_for.insert((player, team)) {
            self.graph
                .add_edge(player, team, EDGE_PLAYS_FOR, PropertyMap::new())?;
        }
        Ok(player)
    }

    /// Builds a Fact node with IS_PART_OF to the game, ASSOCIATED_TO to the
    /// team, and one kind-specific edge from the player.
    pub fn build_fact(
        &mut self,
        f: &FactEntry,
        game: NodeId,
        team: NodeId,
        player: NodeId,
        dict: &mut EntityDictionary,
    ) -> Result<NodeId, GraphError> {
        let subject = dict.canonicalize(EntityCategory::Player, &f.subject_player);
        let mut props = PropertyMap::new();
        props.insert("kind".into(), PropertyValue::text(f.fact_type.kind_name()));
        props.insert("time".into(), PropertyValue::text(&f.time));
        if !f.detail.is_empty() {
            props.insert("detail".into(), PropertyValue::text(&f.detail));
        }
        props.insert("subject_player".into(), PropertyValue::text(subject));
        let fact = self.graph.add_node("Fact", props)?;
        self.graph
            .add_edge(fact, game, EDGE_IS_PART_OF, PropertyMap::new())?;
        self.graph
            .add_edge(fact, team, EDGE_ASSOCIATED_TO, PropertyMap::new())?;
        let player_edge = match f.fact_type {
            FactType::YellowCard | FactType::RedCard => EDGE_RECEIVED,
            FactType::Goal | FactType::OwnGoal => EDGE_SCORED,
            FactType::Assist => EDGE_ASSISTED_BY,
            FactType::SubstitutionOut | FactType::SubstitutionIn => EDGE_SUBSTITUTED_WITH,
        };
        self.graph
            .add_edge(player, fact, player_edge, PropertyMap::new())?;
        Ok(fact)
    }
}

/// Node/edge counts for one graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub node_labels: BTreeMap<String, usize>,
    pub edge_types: BTreeMap<String, usize>,
    pub density: Option<f64>,
}

impl GraphStats {
    pub fn of(g: &Graph) -> GraphStats {
        GraphStats {
            nodes: g.node_count(),
            edges: g.edge_count(),
            node_labels: g.label_counts(),
            edge_types: g.etype_counts(),
            density: g.density().ok(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub labels: GraphStats,
    pub captions: GraphStats,
}

/// The two constructed graphs plus the shared entity dictionary and counts.
pub struct BuildOutput {
    pub labels_kg: Graph,
    pub captions_kg: Graph,
    pub entity_dict: EntityDictionary,
    pub build_stats: BuildStats,
}

impl BuildOutput {
    pub fn graph(&self, sel: GraphSel) -> &Graph {
        match sel {
            GraphSel::Labels => &self.labels_kg,
            GraphSel::Captions => &self.captions_kg,
        }
    }
}

/// Builds both knowledge graphs from a parsed dataset. The result is frozen
/// and deterministic: identical inputs produce identical graphs.
pub fn build_all(dataset: &Dataset) -> Result<BuildOutput, GraphError> {
    let mut dict = EntityDictionary::new();

    let mut events_by_game: BTreeMap<&str, Vec<&EventAnnotation>> = BTreeMap::new();
    for ev in &dataset.events {
        events_by_game.entry(ev.game_id.as_str()).or_default().push(ev);
    }
    let mut players_by_game: BTreeMap<&str, Vec<&PlayerEntry>> = BTreeMap::new();
    for p in &dataset.players {
        players_by_game.entry(p.game_id.as_str()).or_default().push(p);
    }

    let mut labels = KgBuilder::new(GraphSel::Labels);
    for rec in &dataset.games {
        let (game, home, away) = labels.build_game_and_teams(rec, &mut dict)?;
        if let Some(events) = events_by_game.get(rec.game_id.as_str()) {
            for ev in events {
                labels.build_event(ev, game, home, away)?;
            }
        }
    }
    labels.graph.freeze();

    let mut captions = KgBuilder::new(GraphSel::Captions);
    for rec in &dataset.games {
        let (game, home, away) = captions.build_game_and_teams(rec, &mut dict)?;
        if let Some(players) = players_by_game.get(rec.game_id.as_str()) {
            for p in players {
                let team = match p.team_side {
                    TeamSide::Away => away,
                    _ => home,
                };
                let player = captions.build_player(p, game, team, &mut dict)?;
                for f in &p.facts {
                    captions.build_fact(f, game, team, player, &mut dict)?;
                }
            }
        }
    }
    captions.graph.freeze();

    let build_stats = BuildStats {
        labels: GraphStats::of(&labels.graph),
        captions: GraphStats::of(&captions.graph),
    };
    Ok(BuildOutput {
        labels_kg: labels.graph,
        captions_kg: captions.graph,
        entity_dict: dict,
        build_stats,
    })
}

fn cypher_quote(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn cypher_props(gid: &str, id: u32, props: &PropertyMap) -> String {
    let mut parts = vec![format!("_gid: {}", cypher_quote(&format!("{gid}{id}")))];
    for (k, v) in props {
        let rendered = match v {
            PropertyValue::Text(s) => cypher_quote(s),
            PropertyValue::Int(i) => i.to_string(),
            PropertyValue::Float(f) => format!("{f:?}"),
            PropertyValue::Bool(b) => b.to_string(),
        };
        parts.push(format!("{k}: {rendered}"));
    }
    format!("{{{}}}", parts.join(", "))
}

/// Renders both graphs as openCypher CREATE statements, one line per node
/// and per edge, in stable order. Node identity is carried by a `_gid`
/// property ("L<id>" for the Labels KG, "C<id>" for the Captions KG).
pub fn export_cypher(output: &BuildOutput) -> String {
    let mut out = String::new();
    for (prefix, graph) in [("L", &output.labels_kg), ("C", &output.captions_kg)] {
        for n in graph.nodes() {
            out.push_str(&format!(
                "CREATE (:{} {});\n",
                n.label,
                cypher_props(prefix, n.id.0, &n.props)
            ));
        }
        for e in graph.edges() {
            let props = if e.props.is_empty() {
                String::new()
            } else {
                let rendered: Vec<String> = e
                    .props
                    .iter()
                    .map(|(k, v)| {
                        let val = match v {
                            PropertyValue::Text(s) => cypher_quote(s),
                            PropertyValue::Int(i) => i.to_string(),
                            PropertyValue::Float(f) => format!("{f:?}"),
                            PropertyValue::Bool(b) => b.to_string(),
                        };
                        format!("{k}: {val}")
                    })
                    .collect();
                format!(" {{{}}}", rendered.join(", "))
            };
            out.push_str(&format!(
                "MATCH (a {{_gid: {}}}), (b {{_gid: {}}}) CREATE (a)-[:{}{}]->(b);\n",
                cypher_quote(&format!("{prefix}{}", e.src.0)),
                cypher_quote(&format!("{prefix}{}", e.dst.0)),
                e.etype,
                props
            ));
        }
    }
    out
}
