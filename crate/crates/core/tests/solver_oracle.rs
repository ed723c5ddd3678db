mod common;

use ffcombat_core::table_io::{read_binary, read_text, write_binary, write_text};
use ffcombat_core::{
    build_dice_model, query, solve, ExactPolicyTable, GameState, OddsConvention, PolicyTableF32, PolicyTableF64,
    Probability, RoundOutcome, SolverConfig,
};
use proptest::prelude::*;

use common::Expectimax;

const OUTCOMES: [RoundOutcome; 2] = [RoundOutcome::Win, RoundOutcome::Loss];

fn small(dk: i32, s: i32, l: i32) -> SolverConfig {
    SolverConfig { max_s_h: s, max_s_o: s, max_l: l, ..SolverConfig::for_dk(dk) }
}

#[test]
fn exact_table_equals_exact_expectimax() {
    let dice = build_dice_model();
    for dk in [-2, 0, 2] {
        let table: ExactPolicyTable = solve(&small(dk, 5, 3), &dice).unwrap();
        let mut oracle = Expectimax::new(dk);
        for (s_h, s_o, l) in table.cells() {
            assert_eq!(table.pre_round_value(s_h, s_o, l).unwrap(), oracle.pre_round(s_h, s_o, l));
            for o in OUTCOMES {
                let (plain, lucky) = oracle.after(s_h, s_o, l, o);
                let best = match lucky {
                    Some(y) if y > plain => y,
                    _ => plain,
                };
                assert_eq!(table.value(s_h, s_o, l, o).unwrap(), best, "dk={dk} ({s_h},{s_o},{l}) {o:?}");
            }
        }
    }
}

#[test]
fn float_tables_track_exact() {
    let dice = build_dice_model();
    let cfg = small(-1, 6, 4);
    let exact: ExactPolicyTable = solve(&cfg, &dice).unwrap();
    let double: PolicyTableF64 = solve(&cfg, &dice).unwrap();
    let single: PolicyTableF32 = solve(&cfg, &dice).unwrap();
    for (s_h, s_o, l) in exact.cells() {
        for o in OUTCOMES {
            let e = exact.value(s_h, s_o, l, o).unwrap().to_f64();
            assert!((double.value(s_h, s_o, l, o).unwrap() - e).abs() < 1e-14);
            assert!((single.value(s_h, s_o, l, o).unwrap() as f64 - e).abs() < 1e-5);
        }
    }
}

#[test]
fn stored_values_are_the_better_propagator() {
    let dice = build_dice_model();
    let t: PolicyTableF64 = solve(&SolverConfig::for_dk(-3), &dice).unwrap();
    for (s_h, s_o, l) in t.cells() {
        for o in OUTCOMES {
            let p = t.propagators(s_h, s_o, l, o).unwrap();
            let v = t.value(s_h, s_o, l, o).unwrap();
            let act = t.action(s_h, s_o, l, o).unwrap();
            let best = p.use_luck.map_or(p.no_luck, |y| y.max(p.no_luck));
            assert_eq!(v, best.min(1.0));
            if act {
                assert!(p.use_luck.unwrap() > p.no_luck);
            }
            assert_eq!(p.use_luck.is_none(), l == 0);
        }
    }
}

#[test]
fn raw_convention_leaks_draw_mass() {
    let dice = build_dice_model();
    let renorm: PolicyTableF64 = solve(&SolverConfig::for_dk(0), &dice).unwrap();
    let raw: PolicyTableF64 =
        solve(&SolverConfig { odds: OddsConvention::Raw, ..SolverConfig::for_dk(0) }, &dice).unwrap();
    let a = renorm.pre_round_value(10, 10, 6).unwrap();
    let b = raw.pre_round_value(10, 10, 6).unwrap();
    assert!(b < a, "raw {b} should fall below renormalized {a}");
}

#[test]
fn query_reports_baseline_and_terminal_states() {
    let dice = build_dice_model();
    let t: PolicyTableF64 = solve(&SolverConfig::for_dk(-2), &dice).unwrap();
    let r = query(&t, &GameState::new(22, 21, 12, -2), None).unwrap();
    assert!((r.v_p - 0.22).abs() < 0.01);
    assert!((r.baseline - 0.010).abs() < 0.001);
    let done = query(&t, &GameState::new(3, 0, 5, -2), None).unwrap();
    assert_eq!(done.v_p, 1.0);
    assert!(query(&t, &GameState::new(3, 3, 5, 1), None).is_err());
    assert!(query(&t, &GameState::new(3, 3, 5, -2), Some(RoundOutcome::Draw)).is_err());
    assert!(query(&t, &GameState::new(25, 3, 5, -2), None).is_err());
}

#[test]
fn table_files_round_trip() {
    let dice = build_dice_model();
    let t: PolicyTableF64 = solve(&small(-4, 10, 6), &dice).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let text_path = dir.path().join("t.txt");
    write_text(&t, std::fs::File::create(&text_path).unwrap()).unwrap();
    let back = read_text(std::io::BufReader::new(std::fs::File::open(&text_path).unwrap()), &dice).unwrap();
    assert_eq!(back, t);

    let bin_path = dir.path().join("t.bin");
    write_binary(&t, std::fs::File::create(&bin_path).unwrap()).unwrap();
    let back = read_binary(std::fs::File::open(&bin_path).unwrap(), &dice).unwrap();
    assert_eq!(back, t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn luck_never_hurts(dk in -6i32..=6, s_h in 1i32..=12, s_o in 1i32..=12, l in 0i32..12) {
        let dice = build_dice_model();
        let t: PolicyTableF64 = solve(&small(dk, 12, 12), &dice).unwrap();
        prop_assert!(t.pre_round_value(s_h, s_o, l + 1).unwrap() >= t.pre_round_value(s_h, s_o, l).unwrap() - 1e-12);
        for o in OUTCOMES {
            let v = t.value(s_h, s_o, l, o).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
