//! Live combat sessions: the player reports each round as it happens.
//!
//! The luck test is rolled at the table, so a session records whether it
//! succeeded rather than simulating it.

use ffcombat_core::engine::{apply_outcome, LuckResolution};
use ffcombat_core::{CombatStatus, GameState, RoundOutcome, SolverConfig};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::SCHEMA_VERSION;

/// Largest stamina, luck or skill a session accepts; bounds the table size.
pub const MAX_STAT: i32 = 99;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SessionError {
    #[error("invalid stats: {0}")]
    InvalidStats(String),
    #[error("illegal transition: {0}")]
    IllegalTransition(String),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("unsupported schema version {0}")]
    SchemaVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeroStats {
    pub skill: i32,
    pub stamina: i32,
    pub luck: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpponentStats {
    pub skill: i32,
    pub stamina: i32,
}

fn check_stat(name: &str, value: i32, min: i32) -> Result<(), SessionError> {
    if (min..=MAX_STAT).contains(&value) {
        Ok(())
    } else {
        Err(SessionError::InvalidStats(format!("{name} must lie in [{min}, {MAX_STAT}], got {value}")))
    }
}

pub fn validate_stats(hero: &HeroStats, opponent: &OpponentStats) -> Result<(), SessionError> {
    check_stat("hero skill", hero.skill, 1)?;
    check_stat("hero stamina", hero.stamina, 1)?;
    check_stat("hero luck", hero.luck, 0)?;
    check_stat("opponent skill", opponent.skill, 1)?;
    check_stat("opponent stamina", opponent.stamina, 1)
}

/// Solver bounds covering every state reachable from the given start.
pub fn solver_config_for(hero: &HeroStats, opponent: &OpponentStats) -> SolverConfig {
    let d = SolverConfig::default();
    SolverConfig {
        dk: hero.skill - opponent.skill,
        max_s_h: d.max_s_h.max(hero.stamina),
        max_s_o: d.max_s_o.max(opponent.stamina),
        max_l: d.max_l.max(hero.luck),
        ..d
    }
}

/// One reported round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundEntry {
    pub outcome: RoundOutcome,
    #[serde(default)]
    pub luck_used: bool,
    /// Required when luck was used, absent otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub luck_success: Option<bool>,
}

impl RoundEntry {
    pub fn plain(outcome: RoundOutcome) -> Self {
        RoundEntry { outcome, luck_used: false, luck_success: None }
    }

    pub fn lucky(outcome: RoundOutcome, success: bool) -> Self {
        RoundEntry { outcome, luck_used: true, luck_success: Some(success) }
    }

    fn resolution(&self) -> Result<LuckResolution, SessionError> {
        match (self.luck_used, self.luck_success) {
            (false, None) => Ok(LuckResolution::NotUsed),
            (false, Some(_)) => Err(SessionError::IllegalTransition(
                "luck_success given but luck was not used".into(),
            )),
            (true, None) => Err(SessionError::IllegalTransition(
                "luck_success is required when luck is used".into(),
            )),
            (true, Some(true)) => Ok(LuckResolution::Success),
            (true, Some(false)) => Ok(LuckResolution::Failure),
        }
    }
}

/// Applies one reported round to `state`.
pub fn step(state: &GameState, entry: &RoundEntry) -> Result<GameState, SessionError> {
    if !state.is_ongoing() {
        return Err(SessionError::IllegalTransition("combat is already over".into()));
    }
    let luck = entry.resolution()?;
    if luck != LuckResolution::NotUsed {
        if entry.outcome == RoundOutcome::Draw {
            return Err(SessionError::IllegalTransition("a drawn round admits no luck test".into()));
        }
        if state.l <= 0 {
            return Err(SessionError::IllegalTransition("no luck left to test".into()));
        }
    }
    apply_outcome(state, entry.outcome, luck, true)
        .map(|(next, _, _)| next)
        .map_err(|e| SessionError::IllegalTransition(e.to_string()))
}

/// A combat being tracked round by round.
#[derive(Debug, Clone, PartialEq)]
pub struct CombatSession {
    id: Uuid,
    hero: HeroStats,
    opponent: OpponentStats,
    rounds: Vec<RoundEntry>,
    state: GameState,
}

impl CombatSession {
    pub fn new(hero: HeroStats, opponent: OpponentStats) -> Result<Self, SessionError> {
        Self::with_id(Uuid::new_v4(), hero, opponent)
    }

    pub fn with_id(id: Uuid, hero: HeroStats, opponent: OpponentStats) -> Result<Self, SessionError> {
        validate_stats(&hero, &opponent)?;
        Ok(CombatSession {
            id,
            hero,
            opponent,
            rounds: Vec::new(),
            state: GameState::new(hero.stamina, opponent.stamina, hero.luck, hero.skill - opponent.skill),
        })
    }

    pub fn id(&self) -> Uuid {
        self.id
    }

    pub fn hero(&self) -> &HeroStats {
        &self.hero
    }

    pub fn opponent(&self) -> &OpponentStats {
        &self.opponent
    }

    pub fn rounds(&self) -> &[RoundEntry] {
        &self.rounds
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn status(&self) -> CombatStatus {
        self.state.status()
    }

    pub fn solver_config(&self) -> SolverConfig {
        solver_config_for(&self.hero, &self.opponent)
    }

    /// Records a round; the session is unchanged on error.
    pub fn record(&mut self, entry: RoundEntry) -> Result<&GameState, SessionError> {
        self.state = step(&self.state, &entry)?;
        self.rounds.push(entry);
        Ok(&self.state)
    }

    /// Removes the last round and recomputes the state from the log.
    pub fn undo(&mut self) -> Result<RoundEntry, SessionError> {
        let last = self.rounds.pop().ok_or(SessionError::NothingToUndo)?;
        self.state = self.initial_state();
        for entry in &self.rounds {
            self.state = step(&self.state, entry).expect("logged rounds replay");
        }
        Ok(last)
    }

    fn initial_state(&self) -> GameState {
        GameState::new(self.hero.stamina, self.opponent.stamina, self.hero.luck, self.hero.skill - self.opponent.skill)
    }

    pub fn export_log(&self) -> SessionLog {
        SessionLog {
            schema_version: SCHEMA_VERSION,
            id: self.id,
            hero: self.hero,
            opponent: self.opponent,
            rounds: self.rounds.clone(),
            state: self.state,
        }
    }

    /// Rebuilds a session by replaying `log` from its initial stats.
    ///
    /// The stored final state is only a cross-check and must agree.
    pub fn replay(log: &SessionLog) -> Result<Self, SessionError> {
        if log.schema_version != SCHEMA_VERSION {
            return Err(SessionError::SchemaVersion(log.schema_version));
        }
        let mut session = Self::with_id(log.id, log.hero, log.opponent)?;
        for entry in &log.rounds {
            session.record(*entry)?;
        }
        if session.state != log.state {
            return Err(SessionError::IllegalTransition(format!(
                "log ends at {:?} but replay reaches {:?}",
                log.state, session.state
            )));
        }
        Ok(session)
    }
}

/// Portable record of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub schema_version: u32,
    pub id: Uuid,
    pub hero: HeroStats,
    pub opponent: OpponentStats,
    pub rounds: Vec<RoundEntry>,
    pub state: GameState,
}

#[cfg(test)]
mod tests {
    use super::*;
    use RoundOutcome::*;

    fn session(s_h: i32, s_o: i32, l: i32) -> CombatSession {
        CombatSession::new(
            HeroStats { skill: 10, stamina: s_h, luck: l },
            OpponentStats { skill: 10, stamina: s_o },
        )
        .unwrap()
    }

    #[test]
    fn damage_table() {
        let cases = [
            (RoundEntry::lucky(Win, true), (10, 6, 4)),
            (RoundEntry::lucky(Win, false), (10, 9, 4)),
            (RoundEntry::plain(Win), (10, 8, 5)),
            (RoundEntry::lucky(Loss, true), (9, 10, 4)),
            (RoundEntry::lucky(Loss, false), (7, 10, 4)),
            (RoundEntry::plain(Loss), (8, 10, 5)),
            (RoundEntry::plain(Draw), (10, 10, 5)),
        ];
        for (entry, (s_h, s_o, l)) in cases {
            let mut s = session(10, 10, 5);
            let st = *s.record(entry).unwrap();
            assert_eq!((st.s_h, st.s_o, st.l), (s_h, s_o, l), "{entry:?}");
        }
    }

    #[test]
    fn illegal_rounds_leave_session_untouched() {
        let mut s = session(10, 10, 0);
        let before = s.clone();
        assert!(s.record(RoundEntry::lucky(Win, true)).is_err());
        assert!(s.record(RoundEntry::lucky(Draw, true)).is_err());
        assert!(s.record(RoundEntry { outcome: Win, luck_used: false, luck_success: Some(true) }).is_err());
        assert!(s.record(RoundEntry { outcome: Win, luck_used: true, luck_success: None }).is_err());
        assert_eq!(s, before);

        let mut s = session(10, 2, 3);
        s.record(RoundEntry::plain(Win)).unwrap();
        assert_eq!(s.status(), CombatStatus::HeroWon);
        assert!(matches!(s.record(RoundEntry::plain(Loss)), Err(SessionError::IllegalTransition(_))));
    }

    #[test]
    fn undo_and_replay() {
        let mut s = session(12, 12, 6);
        for e in [RoundEntry::lucky(Win, true), RoundEntry::plain(Draw), RoundEntry::lucky(Loss, false)] {
            s.record(e).unwrap();
        }
        let before_last = {
            let mut c = s.clone();
            c.undo().unwrap();
            c
        };
        assert_eq!(*before_last.state(), GameState::new(12, 8, 5, 0));
        let log = s.export_log();
        let json = serde_json::to_string(&log).unwrap();
        let back = CombatSession::replay(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);

        let mut tampered = log.clone();
        tampered.state.s_o = 1;
        assert!(CombatSession::replay(&tampered).is_err());
        let mut empty = session(3, 3, 0);
        assert_eq!(empty.undo(), Err(SessionError::NothingToUndo));
    }

    #[test]
    fn stats_are_validated() {
        assert!(CombatSession::new(HeroStats { skill: 0, stamina: 5, luck: 5 }, OpponentStats { skill: 5, stamina: 5 }).is_err());
        assert!(CombatSession::new(HeroStats { skill: 5, stamina: 5, luck: -1 }, OpponentStats { skill: 5, stamina: 5 }).is_err());
        assert!(CombatSession::new(HeroStats { skill: 5, stamina: 5, luck: 5 }, OpponentStats { skill: 5, stamina: 500 }).is_err());
    }

    #[test]
    fn bounds_grow_with_large_stats() {
        let c = solver_config_for(&HeroStats { skill: 12, stamina: 30, luck: 14 }, &OpponentStats { skill: 9, stamina: 10 });
        assert_eq!((c.dk, c.max_s_h, c.max_s_o, c.max_l), (3, 30, 24, 14));
    }
}
