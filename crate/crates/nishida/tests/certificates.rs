//! Certificate sweeps: the independent recheck agrees with the engine,
//! green certificates stay green as the top degree drops, and green
//! certificates at n = 0 come with a closing single-gap replay.

use nishida::realize::{
    prop_neqn_check, recheck_certificate, thm_main_bound, thm_main_from_nneq, thm_nneq_audit, thm_nneq_certificate,
    Fixture, ModuleDescriptor, Verdict,
};
use nishida::ssq::assumption_threshold;
use nishida::unstable::Parity;
use nishida::Prime;
use proptest::prelude::*;

#[test]
fn recheck_agrees_on_a_parameter_sweep() {
    let p = Prime::new(3).unwrap();
    let mut checked = 0;
    for l in 0..=3 {
        for m in l..=6 {
            for i in 0..=2 {
                for n in 0..=1 {
                    let k = assumption_threshold(p, l, m, n).unwrap();
                    if k > 4 {
                        continue;
                    }
                    let cert = thm_nneq_audit(p, k, l, m, i, n).unwrap();
                    let report = recheck_certificate(&cert);
                    assert!(report.disagreements.is_empty(), "l={l} m={m} i={i} n={n}: {:?}", report.disagreements);
                    assert!(report.checked >= 40);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 50);
}

#[test]
fn green_is_monotone_in_the_top_degree() {
    let p = Prime::new(3).unwrap();
    let mut greens = 0;
    for (l, i) in [(0, 0), (0, 1), (1, 1), (2, 1), (2, 2), (4, 2)] {
        for n in 0..=1 {
            let m_max = 13;
            let k = assumption_threshold(p, l, m_max, n).unwrap();
            let mut was_green = false;
            for m in (l.max(6 * i)..=m_max).rev() {
                let green = thm_nneq_certificate(p, k, l, m, i, n).unwrap().is_green();
                assert!(!was_green || green, "green above but not at l={l} m={m} i={i} n={n} k={k}");
                was_green = green;
                greens += green as usize;
            }
        }
    }
    assert!(greens > 10, "{greens}");
}

#[test]
fn green_certificates_close_the_single_gap_replay() {
    let p = Prime::new(3).unwrap();
    for (l, m, i) in [(0, 4, 0), (2, 6, 1), (2, 9, 1), (0, 12, 2)] {
        let k = assumption_threshold(p, l, m, 0).unwrap();
        let cert = thm_nneq_certificate(p, k, l, m, i, 0).unwrap();
        assert!(cert.is_green(), "{l} {m} {i}: {}", cert.verdict);
        assert!(cert.step("summands.gap-0-1").unwrap().pass);
        let fixture = Fixture::minimal(p, i).unwrap();
        let verdict = prop_neqn_check(p, k, l, m, i, Some(&fixture)).unwrap();
        assert!(!verdict.bound.pass);
        assert!(verdict.contradiction, "{}", verdict.summary());
    }
}

#[test]
fn refusal_is_a_clean_gate() {
    let p = Prime::new(3).unwrap();
    for (l, m, n) in [(2, 2, 0), (0, 5, 1), (1, 3, 2)] {
        let k = assumption_threshold(p, l, m, n).unwrap();
        let cert = thm_nneq_certificate(p, k - 1, l, m, 1, n).unwrap();
        assert_eq!(cert.verdict, Verdict::Refused);
        assert!(!cert.steps[0].pass);
        let json = cert.to_json();
        assert_eq!(json["verdict"]["status"], "refused");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reindexing_dominates_the_top_level_bound(
        l in 0i64..8, extra in 0i64..8, n in 0i64..4, i in 0i64..4, k in 0u32..8,
    ) {
        let m = l + extra;
        prop_assume!(n <= m && 2 * i <= m - n);
        let d = ModuleDescriptor { bottom: l, top: m, desuspension_index: n, class_degree: 2 * i + n, origin: Parity::Even };
        let r = thm_main_from_nneq(Prime::new(3).unwrap(), k, &d).unwrap();
        prop_assert!(r.dominates);
        prop_assert_eq!(r.main, thm_main_bound(Prime::new(3).unwrap(), k, l, m).unwrap());
        // the instantiated bound is the stronger one
        prop_assert!(!r.instantiated.pass || r.main.pass);
    }
}
