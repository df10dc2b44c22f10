//! Interactive simulation sessions: instructions in, snapshots out.
//!
//! A [`Session`] is a deterministic state machine. Everything that changes
//! its state goes through [`Session::submit_instruction`] or
//! [`Session::tick`], and both are appended to an [`EventLog`] so a run can be
//! replayed bit-exactly from the same assets.

use crate::classifier::ClassifierModel;
use crate::geometry::Point2;
use crate::grounding::{ground_goal, parse_command, GoalGrounding, Lexicon, ParsedCommand};
use crate::planner::{navigation_step, ConstraintDisk, Costmap, NavConfig, NavState, NavStatus, PathMetrics};
use crate::world::{load_map, RobotState, SemanticMap, WorldObject};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const SNAPSHOT_SCHEMA: u32 = 1;
pub const EVENT_LOG_SCHEMA: u32 = 1;
/// Largest costmap side carried inside a snapshot.
pub const SNAPSHOT_COSTMAP_MAX: usize = 120;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown {kind} {id:?}")]
    UnknownAsset { kind: &'static str, id: String },
    #[error("invalid asset {id:?}: {msg}")]
    BadAsset { id: String, msg: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("event log schema {0} is not supported")]
    Schema(u32),
}

/// Resolves asset ids against a directory laid out as `maps/<id>.json`,
/// `models/<id>.json` and `<id>.txt` for lexicons.
#[derive(Debug, Clone)]
pub struct AssetStore {
    root: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl AssetStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn resolve(&self, kind: &'static str, id: &str, path: PathBuf) -> Result<PathBuf, SessionError> {
        if valid_id(id) && path.is_file() {
            Ok(path)
        } else {
            Err(SessionError::UnknownAsset { kind, id: id.to_owned() })
        }
    }

    pub fn map(&self, id: &str) -> Result<SemanticMap, SessionError> {
        let path = self.resolve("map", id, self.root.join("maps").join(format!("{id}.json")))?;
        load_map(&path).map_err(|e| SessionError::BadAsset { id: id.to_owned(), msg: e.to_string() })
    }

    pub fn model(&self, id: &str) -> Result<ClassifierModel, SessionError> {
        let path = self.resolve("model", id, self.root.join("models").join(format!("{id}.json")))?;
        ClassifierModel::load(&path).map_err(|e| SessionError::BadAsset { id: id.to_owned(), msg: e.to_string() })
    }

    pub fn lexicon(&self, id: &str) -> Result<Lexicon, SessionError> {
        let path = self.resolve("lexicon", id, self.root.join(format!("{id}.txt")))?;
        Lexicon::load(&path).map_err(|e| SessionError::BadAsset { id: id.to_owned(), msg: e.to_string() })
    }

    pub fn list_maps(&self) -> Vec<String> {
        let mut ids: Vec<String> = std::fs::read_dir(self.root.join("maps"))
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".json").map(str::to_owned)
            })
            .collect();
        ids.sort();
        ids
    }
}

fn default_model() -> String {
    "attbilstm".into()
}

fn default_lexicon() -> String {
    "lexicon".into()
}

fn default_dt() -> f64 {
    0.1
}

/// Everything needed to build a session from an [`AssetStore`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub map: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_lexicon")]
    pub lexicon: String,
    #[serde(default)]
    pub seed: u64,
    /// Partial [`NavConfig`] merged over the defaults.
    #[serde(default)]
    pub config: Value,
    /// Simulated seconds per tick.
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl SessionSpec {
    pub fn new(map: impl Into<String>) -> Self {
        Self {
            map: map.into(),
            model: default_model(),
            lexicon: default_lexicon(),
            seed: 0,
            config: Value::Null,
            dt: default_dt(),
        }
    }
}

/// Merge `overrides` into `base`, rejecting keys `base` does not have.
fn merge_known(base: &mut Value, overrides: &Value, path: &str) -> Result<(), String> {
    match (base, overrides) {
        (_, Value::Null) => Ok(()),
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(k) {
                    Some(slot) => merge_known(slot, v, &here)?,
                    None => return Err(format!("unknown field {here:?}")),
                }
            }
            Ok(())
        }
        (Value::Object(_), o) => Err(format!("{path:?} expects an object, got {o}")),
        (b, o) => {
            *b = o.clone();
            Ok(())
        }
    }
}

/// Default [`NavConfig`] with `overrides` applied and `seed` installed.
pub fn resolve_config(overrides: &Value, seed: u64) -> Result<NavConfig, SessionError> {
    if !(overrides.is_null() || overrides.is_object()) {
        return Err(SessionError::InvalidConfig("config must be a JSON object".into()));
    }
    let mut base = serde_json::to_value(NavConfig::default()).expect("config serializes");
    merge_known(&mut base, overrides, "").map_err(SessionError::InvalidConfig)?;
    let mut cfg: NavConfig = serde_json::from_value(base).map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
    cfg.planner.seed = seed;
    cfg.planner
        .validate()
        .map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
    let s = &cfg.sensor;
    if !(s.range > 0.0 && s.fov > 0.0 && s.rate_hz > 0.0 && s.noise_std >= 0.0) {
        return Err(SessionError::InvalidConfig("sensor range, fov and rate must be positive".into()));
    }
    let l = &cfg.limits;
    if !(l.v_min <= l.v_max && l.omega_max > 0.0) {
        return Err(SessionError::InvalidConfig("robot limits are inconsistent".into()));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RunMode {
    Paused,
    /// Advance `steps` ticks right away, then pause.
    Stepping { steps: u64 },
    Realtime { hz: f64 },
}

impl RunMode {
    pub fn validate(&self) -> Result<(), SessionError> {
        match *self {
            RunMode::Realtime { hz } if !(hz > 0.0 && hz <= 1000.0) => {
                Err(SessionError::InvalidMode(format!("rate {hz} Hz is outside (0, 1000]")))
            }
            _ => Ok(()),
        }
    }
}

/// A submitted instruction and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionEvent {
    pub id: u64,
    pub text: String,
    /// Tick and simulated time at submission.
    pub tick: u64,
    pub t: f64,
    pub parse: Option<ParsedCommand>,
    pub goal: Option<GoalGrounding>,
    pub constraint_nouns: Vec<String>,
    /// Whether the session state changed.
    pub accepted: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionEvent {
    Instruction { text: String },
    Tick { n: u64 },
}

/// Session header plus the ordered mutations applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub schema: u32,
    pub spec: SessionSpec,
    pub events: Vec<SessionEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: u32,
    pub tick: u64,
    pub t: f64,
    pub robot: RobotState,
    pub objects: Vec<WorldObject>,
    pub goal: Option<GoalGrounding>,
    pub status: NavStatus,
    pub constraint_nouns: Vec<String>,
    pub disks: Vec<ConstraintDisk>,
    pub global_path: Vec<Point2>,
    pub local_path: Vec<Point2>,
    pub intermediate_goal: Option<Point2>,
    pub last_instruction: Option<InstructionEvent>,
    pub costmap: Option<Costmap>,
    pub metrics: PathMetrics,
}

pub struct Session {
    spec: SessionSpec,
    model: Arc<ClassifierModel>,
    lexicon: Arc<Lexicon>,
    nav: NavState,
    mode: RunMode,
    next_instruction: u64,
    last_instruction: Option<InstructionEvent>,
    events: Vec<SessionEvent>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("spec", &self.spec)
            .field("tick", &self.nav.tick)
            .field("mode", &self.mode)
            .finish()
    }
}

impl Session {
    pub fn create(spec: SessionSpec, assets: &AssetStore) -> Result<Self, SessionError> {
        let map = assets.map(&spec.map)?;
        let model = assets.model(&spec.model)?;
        let lexicon = assets.lexicon(&spec.lexicon)?;
        Self::from_parts(spec, map, Arc::new(model), Arc::new(lexicon))
    }

    /// Build from already loaded assets; `spec` ids are kept only for the log.
    pub fn from_parts(
        spec: SessionSpec,
        map: SemanticMap,
        model: Arc<ClassifierModel>,
        lexicon: Arc<Lexicon>,
    ) -> Result<Self, SessionError> {
        if !(spec.dt > 0.0 && spec.dt.is_finite()) {
            return Err(SessionError::InvalidConfig(format!("dt must be positive, got {}", spec.dt)));
        }
        let config = resolve_config(&spec.config, spec.seed)?;
        let nav = NavState::new(map, config);
        Ok(Self {
            spec,
            model,
            lexicon,
            nav,
            mode: RunMode::Paused,
            next_instruction: 0,
            last_instruction: None,
            events: Vec::new(),
        })
    }

    pub fn spec(&self) -> &SessionSpec {
        &self.spec
    }

    pub fn nav(&self) -> &NavState {
        &self.nav
    }

    pub fn mode(&self) -> RunMode {
        self.mode
    }

    pub fn tick_count(&self) -> u64 {
        self.nav.tick
    }

    pub fn event_log(&self) -> EventLog {
        EventLog {
            schema: EVENT_LOG_SCHEMA,
            spec: self.spec.clone(),
            events: self.events.clone(),
        }
    }

    /// Parse and ground `text`. A grounded goal replaces the active one; a
    /// constraint-only instruction extends the active goal's constraints.
    /// On any failure the navigation state is left untouched.
    pub fn submit_instruction(&mut self, text: &str) -> InstructionEvent {
        self.events.push(SessionEvent::Instruction { text: text.to_owned() });
        let id = self.next_instruction;
        self.next_instruction += 1;
        let mut event = InstructionEvent {
            id,
            text: text.to_owned(),
            tick: self.nav.tick,
            t: self.nav.t,
            parse: None,
            goal: None,
            constraint_nouns: Vec::new(),
            accepted: false,
            error: None,
        };
        match parse_command(text, id, &self.model, &self.lexicon) {
            Err(e) => event.error = Some(e.to_string()),
            Ok(parse) => {
                let nouns = parse.constraint_words();
                event.constraint_nouns = nouns.clone();
                let goal = match &parse.goal_noun {
                    Some(n) => match ground_goal(&n.word, &self.nav.map, &self.lexicon, &self.nav.config.grounding) {
                        Ok(g) => Some(g),
                        Err(e) => {
                            event.error = Some(e.to_string());
                            None
                        }
                    },
                    None if !nouns.is_empty() && self.nav.goal.is_some() => self.nav.goal.clone(),
                    None => {
                        event.error = Some("instruction has no goal".into());
                        None
                    }
                };
                if let Some(g) = goal {
                    event.goal = Some(g.clone());
                    event.accepted = true;
                    if parse.goal_noun.is_some() {
                        self.nav.set_goal(g, nouns);
                    } else {
                        for n in nouns {
                            if !self.nav.constraint_nouns.contains(&n) {
                                self.nav.constraint_nouns.push(n);
                            }
                        }
                    }
                }
                event.parse = Some(parse);
            }
        }
        self.last_instruction = Some(event.clone());
        event
    }

    /// Advance `n` ticks and return the snapshot after each one.
    pub fn tick(&mut self, n: u64) -> Vec<Snapshot> {
        if n == 0 {
            return Vec::new();
        }
        match self.events.last_mut() {
            Some(SessionEvent::Tick { n: m }) => *m += n,
            _ => self.events.push(SessionEvent::Tick { n }),
        }
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            navigation_step(&mut self.nav, &self.lexicon, self.spec.dt);
            out.push(self.snapshot());
        }
        out
    }

    /// Switch mode. Stepping runs its ticks now and leaves the session paused.
    pub fn set_mode(&mut self, mode: RunMode) -> Result<Vec<Snapshot>, SessionError> {
        mode.validate()?;
        match mode {
            RunMode::Stepping { steps } => {
                self.mode = RunMode::Paused;
                Ok(self.tick(steps))
            }
            m => {
                self.mode = m;
                Ok(Vec::new())
            }
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let nav = &self.nav;
        Snapshot {
            schema: SNAPSHOT_SCHEMA,
            tick: nav.tick,
            t: nav.t,
            robot: nav.robot,
            objects: nav.map.objects.clone(),
            goal: nav.goal.clone(),
            status: nav.status.clone(),
            constraint_nouns: nav.constraint_nouns.clone(),
            disks: nav.constraints.to_vec(),
            global_path: nav.global.as_ref().map(|p| p.waypoints.clone()).unwrap_or_default(),
            local_path: nav.local.as_ref().map(|p| p.waypoints.clone()).unwrap_or_default(),
            intermediate_goal: nav.intermediate,
            last_instruction: self.last_instruction.clone(),
            costmap: nav.costmap.as_ref().map(|c| c.downsample(SNAPSHOT_COSTMAP_MAX)),
            metrics: nav.metrics(),
        }
    }

    /// Full-resolution costmap of the last tick.
    pub fn costmap(&self) -> Option<&Costmap> {
        self.nav.costmap.as_ref()
    }
}

/// Rebuild a session by re-applying every logged event.
pub fn replay(log: &EventLog, assets: &AssetStore) -> Result<Session, SessionError> {
    if log.schema != EVENT_LOG_SCHEMA {
        return Err(SessionError::Schema(log.schema));
    }
    let mut s = Session::create(log.spec.clone(), assets)?;
    replay_events(&mut s, &log.events);
    Ok(s)
}

pub fn replay_events(session: &mut Session, events: &[SessionEvent]) {
    for e in events {
        match e {
            SessionEvent::Instruction { text } => {
                session.submit_instruction(text);
            }
            SessionEvent::Tick { n } => {
                session.tick(*n);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn session(map: &str) -> Session {
        let assets = AssetStore::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets"));
        Session::create(SessionSpec::new(map), &assets).unwrap()
    }

    #[test]
    fn fresh_session_is_paused_at_tick_zero() {
        let s = session("scene1");
        let snap = s.snapshot();
        assert_eq!(snap.tick, 0);
        assert_eq!(s.mode(), RunMode::Paused);
        assert!(snap.global_path.is_empty() && snap.local_path.is_empty());
        assert_eq!(snap.status, NavStatus::Idle);
    }

    #[test]
    fn unknown_assets_are_rejected() {
        let assets = AssetStore::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets"));
        for spec in [
            SessionSpec::new("nowhere"),
            SessionSpec::new("../maps/scene1"),
            SessionSpec { model: "nope".into(), ..SessionSpec::new("scene1") },
        ] {
            assert!(matches!(
                Session::create(spec, &assets),
                Err(SessionError::UnknownAsset { .. })
            ));
        }
    }

    #[test]
    fn config_overrides_merge_and_typos_fail() {
        let cfg = resolve_config(&json!({"planner": {"goal_tolerance": 0.4}}), 9).unwrap();
        assert_eq!(cfg.planner.goal_tolerance, 0.4);
        assert_eq!(cfg.planner.seed, 9);
        assert_eq!(cfg.planner.disk_radius, NavConfig::default().planner.disk_radius);
        assert!(resolve_config(&json!({"planer": {}}), 0).is_err());
        assert!(resolve_config(&json!({"planner": 3}), 0).is_err());
        assert!(resolve_config(&json!({"planner": {"disk_radius": -1.0}}), 0).is_err());
        assert!(resolve_config(&json!([1]), 0).is_err());
    }

    #[test]
    fn no_goal_instruction_changes_nothing() {
        let mut s = session("scene1");
        let before = s.snapshot();
        let e = s.submit_instruction("you know");
        assert!(!e.accepted);
        assert!(e.error.as_deref().unwrap().contains("no goal"));
        let after = s.snapshot();
        assert_eq!(before.goal, after.goal);
        assert_eq!(before.status, after.status);
        assert_eq!(before.tick, after.tick);
        assert!(after.constraint_nouns.is_empty());
    }

    #[test]
    fn goal_instruction_grounds_and_moves() {
        let mut s = session("scene1");
        let e = s.submit_instruction("go to the restaurant and you know, keep away from people.");
        assert!(e.accepted, "{e:?}");
        assert_eq!(e.goal.as_ref().unwrap().location, "restaurant");
        assert_eq!(e.constraint_nouns, vec!["people".to_string()]);
        let snaps = s.tick(100);
        assert_eq!(snaps.len(), 100);
        let last = snaps.last().unwrap();
        assert!(!last.global_path.is_empty());
        assert!(last.metrics.length > 1.0);
        let cm = last.costmap.as_ref().unwrap();
        assert!(cm.width <= SNAPSHOT_COSTMAP_MAX && cm.height <= SNAPSHOT_COSTMAP_MAX);
    }

    #[test]
    fn parse_is_idempotent() {
        let mut s = session("scene1");
        let a = s.submit_instruction("don't collide with people and walk to the information desk");
        let b = s.submit_instruction("don't collide with people and walk to the information desk");
        assert_eq!(a.parse.unwrap().phrases, b.parse.unwrap().phrases);
        assert_eq!(a.goal, b.goal);
    }

    #[test]
    fn stepping_yields_exact_snapshots_and_pauses() {
        let mut s = session("scene1");
        let snaps = s.set_mode(RunMode::Stepping { steps: 5 }).unwrap();
        assert_eq!(snaps.iter().map(|x| x.tick).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert_eq!(s.mode(), RunMode::Paused);
        assert!(s.tick(0).is_empty());
        assert_eq!(s.tick_count(), 5);
        assert!(s.set_mode(RunMode::Realtime { hz: 0.0 }).is_err());
    }

    #[test]
    fn idle_session_holds_the_robot() {
        let mut s = session("scene1");
        let start = s.snapshot().robot;
        s.tick(20);
        assert_eq!(s.snapshot().robot.position, start.position);
    }

    #[test]
    fn ticks_coalesce_in_the_log() {
        let mut s = session("scene1");
        s.tick(3);
        s.tick(4);
        s.submit_instruction("go to the lift");
        s.tick(2);
        assert_eq!(
            s.event_log().events,
            vec![
                SessionEvent::Tick { n: 7 },
                SessionEvent::Instruction { text: "go to the lift".into() },
                SessionEvent::Tick { n: 2 },
            ]
        );
    }
}
