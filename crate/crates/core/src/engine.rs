//! Executable model of one combat.
//!
//! Each attack round: both sides roll 2d6, the hero adds the skill
//! difference. A drawn round changes nothing. After a won or lost round the
//! hero's policy may spend one point of luck on a 2d6 test that succeeds
//! when the roll is at most the current luck:
//!
//! | round | no luck    | luck, success | luck, failure |
//! |-------|------------|---------------|---------------|
//! | win   | `s_o -= 2` | `s_o -= 4`    | `s_o -= 1`    |
//! | loss  | `s_h -= 2` | `s_h -= 1`    | `s_h -= 3`    |
//!
//! Stamina is not clamped at zero, so damage bookkeeping stays exact.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Combat state from the hero's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub s_h: i32,
    pub s_o: i32,
    pub l: i32,
    /// Skill difference `k_h - k_o`, fixed for the combat.
    pub dk: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombatStatus {
    Ongoing,
    HeroWon,
    HeroLost,
}

impl GameState {
    pub fn new(s_h: i32, s_o: i32, l: i32, dk: i32) -> Self {
        GameState { s_h, s_o, l, dk }
    }

    pub fn status(&self) -> CombatStatus {
        if self.s_h >= 1 && self.s_o >= 1 {
            CombatStatus::Ongoing
        } else if self.s_h >= 1 {
            CombatStatus::HeroWon
        } else {
            CombatStatus::HeroLost
        }
    }

    pub fn is_ongoing(&self) -> bool {
        self.status() == CombatStatus::Ongoing
    }

    fn ensure_ongoing(&self) -> Result<()> {
        if self.is_ongoing() {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "combat already over at s_h={}, s_o={}",
                self.s_h, self.s_o
            )))
        }
    }
}

/// Result of one attack round, from the hero's side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    Win,
    Draw,
    Loss,
}

/// What happened to a luck test after a decisive round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LuckResolution {
    NotUsed,
    Success,
    Failure,
}

/// Decides whether to spend luck after a decisive round.
///
/// `outcome` is never [`RoundOutcome::Draw`]; implementations may ignore
/// `state.l == 0`, the engine refuses luck use there anyway.
pub trait LuckPolicy {
    fn use_luck(&self, state: &GameState, outcome: RoundOutcome) -> bool;
}

impl<P: LuckPolicy + ?Sized> LuckPolicy for &P {
    fn use_luck(&self, state: &GameState, outcome: RoundOutcome) -> bool {
        (**self).use_luck(state, outcome)
    }
}

/// Never spends luck.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverUseLuck;

impl LuckPolicy for NeverUseLuck {
    fn use_luck(&self, _: &GameState, _: RoundOutcome) -> bool {
        false
    }
}

/// Spends luck on every decisive round.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysUseLuck;

impl LuckPolicy for AlwaysUseLuck {
    fn use_luck(&self, _: &GameState, _: RoundOutcome) -> bool {
        true
    }
}

/// How luck tests behave.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LuckRule {
    /// Tests succeed on `2d6 <= l`, and every test costs one point.
    #[default]
    Depleting,
    /// Tests succeed with fixed probability `q` and cost nothing.
    Constant { q: f64 },
}

/// One line of a combat transcript.
///
/// Attack strengths are reported with the opponent's skill taken as zero,
/// so `attack_hero = roll + dk` and `attack_opponent = roll`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub attack_hero: i32,
    pub attack_opponent: i32,
    pub outcome: RoundOutcome,
    pub luck_used: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub luck_roll: Option<i32>,
    pub luck: LuckResolution,
    pub hero_delta: i32,
    pub opponent_delta: i32,
}

/// Applies a round's outcome and luck result; pure bookkeeping.
///
/// Returns the new state and the `(hero, opponent)` stamina deltas. Under
/// [`LuckRule::Constant`] callers pass `consume_luck = false`.
pub fn apply_outcome(
    state: &GameState,
    outcome: RoundOutcome,
    luck: LuckResolution,
    consume_luck: bool,
) -> Result<(GameState, i32, i32)> {
    state.ensure_ongoing()?;
    if luck != LuckResolution::NotUsed {
        if outcome == RoundOutcome::Draw {
            return Err(Error::InvalidState("a drawn round admits no luck test".into()));
        }
        if consume_luck && state.l <= 0 {
            return Err(Error::InvalidState("no luck left to test".into()));
        }
    }
    let (hero_delta, opponent_delta) = match (outcome, luck) {
        (RoundOutcome::Draw, _) => (0, 0),
        (RoundOutcome::Win, LuckResolution::NotUsed) => (0, -2),
        (RoundOutcome::Win, LuckResolution::Success) => (0, -4),
        (RoundOutcome::Win, LuckResolution::Failure) => (0, -1),
        (RoundOutcome::Loss, LuckResolution::NotUsed) => (-2, 0),
        (RoundOutcome::Loss, LuckResolution::Success) => (-1, 0),
        (RoundOutcome::Loss, LuckResolution::Failure) => (-3, 0),
    };
    let mut next = *state;
    next.s_h += hero_delta;
    next.s_o += opponent_delta;
    if consume_luck && luck != LuckResolution::NotUsed {
        next.l -= 1;
    }
    Ok((next, hero_delta, opponent_delta))
}

fn roll_2d6<R: Rng + ?Sized>(rng: &mut R) -> i32 {
    rng.random_range(1..=6) + rng.random_range(1..=6)
}

/// Rolls both attack strengths and classifies the round.
pub fn roll_attack<R: Rng + ?Sized>(dk: i32, rng: &mut R) -> (i32, i32, RoundOutcome) {
    let hero = roll_2d6(rng) + dk;
    let opponent = roll_2d6(rng);
    let outcome = match hero.cmp(&opponent) {
        std::cmp::Ordering::Greater => RoundOutcome::Win,
        std::cmp::Ordering::Equal => RoundOutcome::Draw,
        std::cmp::Ordering::Less => RoundOutcome::Loss,
    };
    (hero, opponent, outcome)
}

/// Resolves a round whose outcome is already known: asks the policy,
/// performs any luck test and applies the damage.
pub fn resolve_round<P, R>(
    state: &GameState,
    outcome: RoundOutcome,
    policy: &P,
    rule: LuckRule,
    rng: &mut R,
) -> Result<(GameState, RoundRecord)>
where
    P: LuckPolicy + ?Sized,
    R: Rng + ?Sized,
{
    state.ensure_ongoing()?;
    let wants_luck =
        outcome != RoundOutcome::Draw && state.l > 0 && policy.use_luck(state, outcome);
    let (luck, luck_roll) = if wants_luck {
        match rule {
            LuckRule::Depleting => {
                let roll = roll_2d6(rng);
                let res = if roll <= state.l {
                    LuckResolution::Success
                } else {
                    LuckResolution::Failure
                };
                (res, Some(roll))
            }
            LuckRule::Constant { q } => {
                let res = if rng.random::<f64>() < q {
                    LuckResolution::Success
                } else {
                    LuckResolution::Failure
                };
                (res, None)
            }
        }
    } else {
        (LuckResolution::NotUsed, None)
    };
    let consume = matches!(rule, LuckRule::Depleting);
    let (next, hero_delta, opponent_delta) = apply_outcome(state, outcome, luck, consume)?;
    let record = RoundRecord {
        round: 0,
        attack_hero: 0,
        attack_opponent: 0,
        outcome,
        luck_used: wants_luck,
        luck_roll,
        luck,
        hero_delta,
        opponent_delta,
    };
    Ok((next, record))
}

/// Plays one full attack round.
pub fn play_round<P, R>(
    state: &GameState,
    policy: &P,
    rule: LuckRule,
    rng: &mut R,
) -> Result<(GameState, RoundRecord)>
where
    P: LuckPolicy + ?Sized,
    R: Rng + ?Sized,
{
    state.ensure_ongoing()?;
    let (attack_hero, attack_opponent, outcome) = roll_attack(state.dk, rng);
    let (next, mut record) = resolve_round(state, outcome, policy, rule, rng)?;
    record.attack_hero = attack_hero;
    record.attack_opponent = attack_opponent;
    Ok((next, record))
}

/// Plays rounds until one side is down, returning the final state and the
/// full transcript.
pub fn play_combat<P, R>(
    initial: &GameState,
    policy: &P,
    rule: LuckRule,
    rng: &mut R,
) -> Result<(GameState, Vec<RoundRecord>)>
where
    P: LuckPolicy + ?Sized,
    R: Rng + ?Sized,
{
    initial.ensure_ongoing()?;
    let mut state = *initial;
    let mut transcript = Vec::new();
    let mut round = 0u32;
    while state.is_ongoing() {
        round += 1;
        let (next, mut record) = play_round(&state, policy, rule, rng)?;
        record.round = round;
        transcript.push(record);
        state = next;
    }
    Ok((state, transcript))
}

/// Transcript-free combat loop used by batch simulation.
///
/// Consumes the random stream exactly as [`play_combat`] does.
pub fn run_combat<P, R>(initial: &GameState, policy: &P, rule: LuckRule, rng: &mut R) -> GameState
where
    P: LuckPolicy + ?Sized,
    R: Rng + ?Sized,
{
    let mut s = *initial;
    while s.s_h >= 1 && s.s_o >= 1 {
        let (_, _, outcome) = roll_attack(s.dk, rng);
        if outcome == RoundOutcome::Draw {
            continue;
        }
        let wants = s.l > 0 && policy.use_luck(&s, outcome);
        let luck = if !wants {
            LuckResolution::NotUsed
        } else {
            let ok = match rule {
                LuckRule::Depleting => roll_2d6(rng) <= s.l,
                LuckRule::Constant { q } => rng.random::<f64>() < q,
            };
            if ok {
                LuckResolution::Success
            } else {
                LuckResolution::Failure
            }
        };
        match (outcome, luck) {
            (RoundOutcome::Win, LuckResolution::NotUsed) => s.s_o -= 2,
            (RoundOutcome::Win, LuckResolution::Success) => s.s_o -= 4,
            (RoundOutcome::Win, LuckResolution::Failure) => s.s_o -= 1,
            (RoundOutcome::Loss, LuckResolution::NotUsed) => s.s_h -= 2,
            (RoundOutcome::Loss, LuckResolution::Success) => s.s_h -= 1,
            (RoundOutcome::Loss, LuckResolution::Failure) => s.s_h -= 3,
            (RoundOutcome::Draw, _) => unreachable!(),
        }
        if wants && matches!(rule, LuckRule::Depleting) {
            s.l -= 1;
        }
    }
    s
}

/// Writes one JSON object per round.
pub fn write_transcript<W: Write>(mut out: W, transcript: &[RoundRecord]) -> Result<()> {
    for record in transcript {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::Format(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_transcript<R: BufRead>(input: R) -> Result<Vec<RoundRecord>> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;

    fn forced(state: GameState, outcome: RoundOutcome, policy: &dyn LuckPolicy) -> GameState {
        let mut rng = trial_stream(1, 0);
        resolve_round(&state, outcome, policy, LuckRule::Depleting, &mut rng).unwrap().0
    }

    #[test]
    fn win_without_luck() {
        let s = GameState::new(10, 10, 5, 0);
        assert_eq!(forced(s, RoundOutcome::Win, &NeverUseLuck), GameState::new(10, 8, 5, 0));
    }

    #[test]
    fn win_with_certain_luck() {
        let s = GameState::new(10, 10, 12, 0);
        for seed in 0..50 {
            let mut rng = trial_stream(seed, 0);
            let (next, rec) =
                resolve_round(&s, RoundOutcome::Win, &AlwaysUseLuck, LuckRule::Depleting, &mut rng)
                    .unwrap();
            assert_eq!(next, GameState::new(10, 6, 11, 0));
            assert_eq!(rec.luck, LuckResolution::Success);
        }
    }

    #[test]
    fn loss_with_hopeless_luck() {
        let s = GameState::new(10, 10, 1, 0);
        for seed in 0..50 {
            let mut rng = trial_stream(seed, 0);
            let (next, rec) =
                resolve_round(&s, RoundOutcome::Loss, &AlwaysUseLuck, LuckRule::Depleting, &mut rng)
                    .unwrap();
            assert_eq!(next, GameState::new(7, 10, 0, 0));
            assert_eq!(rec.hero_delta, -3);
        }
    }

    #[test]
    fn draw_changes_nothing_and_skips_policy() {
        let s = GameState::new(4, 4, 8, 0);
        let mut rng = trial_stream(3, 0);
        let (next, rec) =
            resolve_round(&s, RoundOutcome::Draw, &AlwaysUseLuck, LuckRule::Depleting, &mut rng)
                .unwrap();
        assert_eq!(next, s);
        assert!(!rec.luck_used);
    }

    #[test]
    fn zero_luck_is_never_spent() {
        let s = GameState::new(4, 4, 0, 0);
        assert_eq!(forced(s, RoundOutcome::Loss, &AlwaysUseLuck), GameState::new(2, 4, 0, 0));
    }

    #[test]
    fn terminated_state_is_rejected() {
        let mut rng = trial_stream(0, 0);
        let done = GameState::new(3, 0, 2, 0);
        assert!(play_round(&done, &NeverUseLuck, LuckRule::Depleting, &mut rng).is_err());
        assert!(apply_outcome(&done, RoundOutcome::Win, LuckResolution::NotUsed, true).is_err());
        assert_eq!(done.status(), CombatStatus::HeroWon);
        assert_eq!(GameState::new(-1, 3, 0, 0).status(), CombatStatus::HeroLost);
    }

    #[test]
    fn apply_outcome_rejects_illegal_luck() {
        let s = GameState::new(5, 5, 0, 0);
        assert!(apply_outcome(&s, RoundOutcome::Win, LuckResolution::Success, true).is_err());
        let s = GameState::new(5, 5, 3, 0);
        assert!(apply_outcome(&s, RoundOutcome::Draw, LuckResolution::Failure, true).is_err());
    }

    #[test]
    fn overwhelming_skill_ends_in_one_round() {
        let mut rng = trial_stream(9, 0);
        let (end, log) =
            play_combat(&GameState::new(2, 2, 0, 11), &NeverUseLuck, LuckRule::Depleting, &mut rng)
                .unwrap();
        assert_eq!(end.status(), CombatStatus::HeroWon);
        assert_eq!(log.len(), 1);
        let (end, _) =
            play_combat(&GameState::new(2, 2, 0, -11), &NeverUseLuck, LuckRule::Depleting, &mut rng)
                .unwrap();
        assert_eq!(end.status(), CombatStatus::HeroLost);
    }

    #[test]
    fn run_combat_matches_play_combat() {
        let start = GameState::new(12, 11, 9, -1);
        for trial in 0..200 {
            let mut a = trial_stream(5, trial);
            let mut b = trial_stream(5, trial);
            let (full, _) = play_combat(&start, &AlwaysUseLuck, LuckRule::Depleting, &mut a).unwrap();
            let fast = run_combat(&start, &AlwaysUseLuck, LuckRule::Depleting, &mut b);
            assert_eq!(full, fast);
        }
    }

    #[test]
    fn transcript_round_trips_as_json_lines() {
        let mut rng = trial_stream(21, 4);
        let (_, log) = play_combat(
            &GameState::new(8, 8, 7, 0),
            &AlwaysUseLuck,
            LuckRule::Depleting,
            &mut rng,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_transcript(&mut buf, &log).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), log.len());
        let back = read_transcript(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }
}
