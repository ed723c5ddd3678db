//! Advice for a live state, read straight from a solved table.

use ffcombat_core::engine::{apply_outcome, LuckResolution};
use ffcombat_core::{query, CombatStatus, GameState, PolicyTableF64, RoundOutcome};
use serde::{Deserialize, Serialize};

use crate::session::SessionError;

/// The two choices after one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub no_luck: f64,
    /// Absent when no luck is left.
    pub use_luck: Option<f64>,
    pub recommend_luck: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIfGrid {
    pub win: Choice,
    pub loss: Choice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub state: GameState,
    pub status: CombatStatus,
    pub action_on_win: bool,
    pub action_on_loss: bool,
    /// 1 either outcome, 2 loss only, 3 win only; absent for never.
    pub strategy: Option<u8>,
    pub recommendation: String,
    /// Victory probability with optimal play from here.
    pub v_p: f64,
    /// Victory probability if luck is never used from here.
    pub v_p_no_luck: f64,
    pub v_p_win: f64,
    pub v_p_loss: f64,
    /// Victory probability of each decision after each outcome of the next
    /// round; absent once combat is over.
    pub what_if: Option<WhatIfGrid>,
}

fn recommendation(on_win: bool, on_loss: bool) -> &'static str {
    match (on_win, on_loss) {
        (true, true) => "use luck on a win or a loss",
        (true, false) => "use luck only on a win",
        (false, true) => "use luck only on a loss",
        (false, false) => "never use luck",
    }
}

fn choice(table: &PolicyTableF64, state: &GameState, outcome: RoundOutcome) -> Result<Choice, ffcombat_core::Error> {
    let p = table.propagators(state.s_h, state.s_o, state.l, outcome)?;
    Ok(Choice {
        no_luck: p.no_luck,
        use_luck: p.use_luck,
        recommend_luck: table.action(state.s_h, state.s_o, state.l, outcome)?,
    })
}

pub fn advise(table: &PolicyTableF64, state: &GameState) -> Result<Advice, ffcombat_core::Error> {
    let r = query(table, state, None)?;
    let what_if = if state.is_ongoing() {
        Some(WhatIfGrid {
            win: choice(table, state, RoundOutcome::Win)?,
            loss: choice(table, state, RoundOutcome::Loss)?,
        })
    } else {
        None
    };
    let recommendation = match state.status() {
        CombatStatus::Ongoing => recommendation(r.action_on_win, r.action_on_loss).to_string(),
        CombatStatus::HeroWon => "combat over: victory".to_string(),
        CombatStatus::HeroLost => "combat over: defeat".to_string(),
    };
    Ok(Advice {
        state: *state,
        status: state.status(),
        action_on_win: r.action_on_win,
        action_on_loss: r.action_on_loss,
        strategy: r.strategy.digit(),
        recommendation,
        v_p: r.v_p,
        v_p_no_luck: r.baseline,
        v_p_win: r.v_p_win,
        v_p_loss: r.v_p_loss,
        what_if,
    })
}

/// A hypothetical next round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub outcome: RoundOutcome,
    pub use_luck: bool,
    /// Victory probability of the decision, averaged over the luck test.
    pub v_p: f64,
    /// State and value after each way the round can resolve.
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub luck: LuckResolution,
    pub state: GameState,
    pub v_p: f64,
}

pub fn what_if(
    table: &PolicyTableF64,
    state: &GameState,
    outcome: RoundOutcome,
    use_luck: bool,
) -> Result<WhatIf, WhatIfError> {
    if !state.is_ongoing() {
        return Err(SessionError::IllegalTransition("combat is already over".into()).into());
    }
    if use_luck && outcome == RoundOutcome::Draw {
        return Err(SessionError::IllegalTransition("a drawn round admits no luck test".into()).into());
    }
    if use_luck && state.l <= 0 {
        return Err(SessionError::IllegalTransition("no luck left to test".into()).into());
    }
    let resolutions: &[LuckResolution] = if use_luck {
        &[LuckResolution::Success, LuckResolution::Failure]
    } else {
        &[LuckResolution::NotUsed]
    };
    let mut branches = Vec::with_capacity(resolutions.len());
    for &luck in resolutions {
        let (next, _, _) = apply_outcome(state, outcome, luck, true)?;
        branches.push(Branch { luck, state: next, v_p: table.pre_round_value(next.s_h, next.s_o, next.l)? });
    }
    let v_p = match outcome {
        RoundOutcome::Draw => table.pre_round_value(state.s_h, state.s_o, state.l)?,
        _ => {
            let p = table.propagators(state.s_h, state.s_o, state.l, outcome)?;
            if use_luck {
                p.use_luck.expect("luck available")
            } else {
                p.no_luck
            }
        }
    };
    Ok(WhatIf { outcome, use_luck, v_p, branches })
}

#[derive(Debug, thiserror::Error)]
pub enum WhatIfError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Core(#[from] ffcombat_core::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use ffcombat_core::{build_dice_model, solve, SolverConfig};

    #[test]
    fn what_if_matches_solver_propagators() {
        let t: PolicyTableF64 = solve(&SolverConfig::for_dk(-2), &build_dice_model()).unwrap();
        let s = GameState::new(22, 21, 12, -2);
        for outcome in [RoundOutcome::Win, RoundOutcome::Loss] {
            let p = t.propagators(22, 21, 12, outcome).unwrap();
            assert_eq!(what_if(&t, &s, outcome, true).unwrap().v_p.to_bits(), p.use_luck.unwrap().to_bits());
            let plain = what_if(&t, &s, outcome, false).unwrap();
            assert_eq!(plain.v_p.to_bits(), p.no_luck.to_bits());
            assert_eq!(plain.branches[0].v_p.to_bits(), p.no_luck.to_bits());
        }
        let a = advise(&t, &s).unwrap();
        assert!((a.v_p - 0.22).abs() < 0.01);
        assert!(a.v_p >= a.v_p_no_luck);
        let draw = what_if(&t, &s, RoundOutcome::Draw, false).unwrap();
        assert_eq!(draw.v_p, a.v_p);
        assert!(what_if(&t, &s, RoundOutcome::Draw, true).is_err());
    }

    #[test]
    fn finished_combat_has_no_what_if() {
        let t: PolicyTableF64 = solve(&SolverConfig::for_dk(0), &build_dice_model()).unwrap();
        let a = advise(&t, &GameState::new(3, -1, 2, 0)).unwrap();
        assert_eq!(a.v_p, 1.0);
        assert!(a.what_if.is_none());
        assert_eq!(a.recommendation, "combat over: victory");
    }

    #[test]
    fn zero_luck_advice() {
        let t: PolicyTableF64 = solve(&SolverConfig::for_dk(0), &build_dice_model()).unwrap();
        let a = advise(&t, &GameState::new(10, 10, 0, 0)).unwrap();
        assert_eq!(a.recommendation, "never use luck");
        assert_eq!(a.v_p, a.v_p_no_luck);
        assert!(a.what_if.unwrap().win.use_luck.is_none());
    }
}
