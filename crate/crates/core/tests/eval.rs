use std::collections::BTreeMap;

use proptest::prelude::*;

use agent_society::backend::{Backend, CallKind, CallRecord, Category, MeterSnapshot, OracleProvider, Policy, TokenUsage};
use agent_society::eval::export::{
    write_accuracy_csv, write_concentration_csv, write_network_csv, write_pmi_csv, write_summary_line, write_tokens_csv,
};
use agent_society::eval::{
    concentration_report, dissemination_report, herd_ledger, pmi_matrix, purchase_accuracy, ranked_counts,
    recount_from_log, run_purchase_eval, shares, synthetic_histories, token_efficiency, welch_greater, HerdConfig,
    PurchaseEvalConfig,
};
use agent_society::graph::TransmissionRule;
use agent_society::sandbox::{fixtures, PurchaseRecord};

fn rec(user: &str, product: &str) -> PurchaseRecord {
    PurchaseRecord {
        user_id: user.into(),
        product_id: product.into(),
        timestamp: 0,
    }
}

fn v(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn cats() -> BTreeMap<String, String> {
    [("a1", "A"), ("a2", "A"), ("b1", "B"), ("c1", "C")]
        .into_iter()
        .map(|(p, c)| (p.to_string(), c.to_string()))
        .collect()
}

#[test]
fn pmi_matches_hand_computation() {
    let ledger = [
        rec("u1", "a1"),
        rec("u1", "b1"),
        rec("u2", "a1"),
        rec("u2", "a2"),
        rec("u3", "b1"),
        rec("u4", "c1"),
        // repeat purchases count once
        rec("u4", "c1"),
    ];
    let m = pmi_matrix(&ledger, &cats(), 0.5).unwrap();
    assert_eq!(m.users, 4);
    assert_eq!(m.marginals, vec![2, 2, 1]);
    let pmi = |joint: f64, x: f64, y: f64| ((joint + 0.5) * 4.0 / ((x + 0.5) * (y + 0.5))).log2();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    assert!(close(m.get("A", "B").unwrap(), pmi(1.0, 2.0, 2.0)));
    assert!(close(m.get("A", "C").unwrap(), pmi(0.0, 2.0, 1.0)));
    // u2 bought two distinct A products
    assert!(close(m.get("A", "A").unwrap(), pmi(1.0, 2.0, 2.0)));
    assert!(close(m.get("C", "C").unwrap(), pmi(0.0, 1.0, 1.0)));
    assert!(m.is_symmetric());

    assert!(pmi_matrix(&[], &cats(), 0.5).is_err());
    assert!(pmi_matrix(&ledger, &cats(), 0.0).is_err());
    assert!(pmi_matrix(&[rec("u1", "zz")], &cats(), 0.5).is_err());
}

#[test]
fn shares_and_concentration() {
    let buys = v(&["x", "y", "x", "z", "x", "y"]);
    assert_eq!(ranked_counts(&buys), vec![("x".into(), 3), ("y".into(), 2), ("z".into(), 1)]);
    let s = shares(&buys);
    assert_eq!(s[0].1, 0.5);
    assert!((s.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);

    let r = concentration_report(&[(10, v(&["x", "x"])), (10, v(&["x", "y"])), (20, vec![])], 2).unwrap();
    assert_eq!(r.top1(), vec![(10, 0.75), (20, 0.0)]);
    assert_eq!(r.scales[0].top_shares, vec![0.75, 0.25]);
    assert_eq!(r.scales[0].top1_by_run, vec![1.0, 0.5]);
    assert!(concentration_report(&[], 3).is_err());
}

#[test]
fn herd_ledgers_are_seeded() {
    let catalog = fixtures::catalog();
    let cfg = HerdConfig::default();
    let a = herd_ledger(&catalog, 30, &cfg, 2).unwrap();
    assert_eq!(a, herd_ledger(&catalog, 30, &cfg, 2).unwrap());
    assert_eq!(a.len(), 30 * cfg.rounds as usize);
}

fn snap(records: &[(Category, u64)]) -> MeterSnapshot {
    let recs: Vec<CallRecord> = records
        .iter()
        .map(|&(category, n)| CallRecord {
            category,
            kind: CallKind::Chat,
            usage: TokenUsage::new(n, 0),
        })
        .collect();
    MeterSnapshot::from_records(&recs)
}

#[test]
fn token_reduction_arithmetic() {
    let with = snap(&[(Category::Memory, 20), (Category::Prompting, 50)]);
    let without = snap(&[(Category::Memory, 50), (Category::Prompting, 50)]);
    let t = token_efficiency(&with, &without).unwrap();
    assert_eq!((t.with_fast, t.without_fast), (70, 100));
    assert!((t.reduction - 30.0).abs() < 1e-12);
    let mem = t.categories.iter().find(|c| c.category == Category::Memory).unwrap();
    assert!((mem.share_with - 20.0 / 70.0).abs() < 1e-12);
    assert!(token_efficiency(&with, &MeterSnapshot::default()).is_err());

    let mut buf = Vec::new();
    write_tokens_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("category,with_fast,without_fast,share_with,share_without\n"));
    assert!(text.ends_with("total,70,100,1,1\n"));
}

#[test]
fn welch_reference_example() {
    // reference values computed with the Welch–Satterthwaite formulas by hand
    let a = [5.0, 6.0, 7.0, 8.0];
    let b = [1.0, 2.0, 3.0];
    let w = welch_greater(&a, &b).unwrap();
    let (va, vb) = (5.0 / 3.0, 1.0);
    let se2: f64 = va / 4.0 + vb / 3.0;
    assert!((w.t - 4.5 / se2.sqrt()).abs() < 1e-12);
    let df = se2.powi(2) / ((va / 4.0f64).powi(2) / 3.0 + (vb / 3.0f64).powi(2) / 2.0);
    assert!((w.df - df).abs() < 1e-9);
    assert!(w.p_value < 0.01);
    assert!(welch_greater(&b, &a).unwrap().p_value > 0.99);
    assert!(welch_greater(&[1.0], &a).is_err());
}

#[test]
fn accuracy_scoring() {
    let truths = vec![("u1".to_string(), v(&["p", "q"])), ("u2".to_string(), v(&["r", "s"]))];
    let sel = vec![("u1".to_string(), v(&["p", "x"])), ("u2".to_string(), v(&["s", "r"]))];
    let r = purchase_accuracy(&sel, &truths, 4).unwrap();
    assert_eq!(r.setting(), "2@6");
    assert!((r.accuracy - 75.0).abs() < 1e-12);

    assert!(purchase_accuracy(&sel[..1], &truths, 4).is_err());
    let short = vec![("u1".to_string(), v(&["p"])), ("u2".to_string(), v(&["s", "r"]))];
    assert!(purchase_accuracy(&short, &truths, 4).is_err());
    let swapped = vec![sel[1].clone(), sel[0].clone()];
    assert!(purchase_accuracy(&swapped, &truths, 4).is_err());

    let mut buf = Vec::new();
    write_accuracy_csv(&[r], &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "setting,a,b,users,abstentions,accuracy\n2@6,2,4,2,0,75.0000\n"
    );
}

#[test]
fn purchase_eval_recount_agrees() {
    let catalog = fixtures::catalog();
    let users = synthetic_histories(&catalog, 40, 6, 0.8, 3).unwrap();
    for policy in [Policy::GroundTruth, Policy::UniformRandom { seed: 5 }] {
        let backend = Backend::new(OracleProvider::new(policy));
        let out = run_purchase_eval(&catalog, &users, &PurchaseEvalConfig::new(3, 7, 1), &backend).unwrap();
        assert_eq!(out.report.users.len(), 40);
        let recount = recount_from_log(&out.log).unwrap();
        assert!((recount - out.report.accuracy).abs() < 1e-9);
        if policy == Policy::GroundTruth {
            assert_eq!(out.report.accuracy, 100.0);
        } else {
            assert!(out.report.accuracy < 100.0);
        }
    }
    let backend = Backend::new(OracleProvider::new(Policy::GroundTruth));
    assert!(run_purchase_eval(&catalog, &users, &PurchaseEvalConfig::new(0, 7, 1), &backend).is_err());
    assert!(run_purchase_eval(&catalog, &[], &PurchaseEvalConfig::new(1, 5, 1), &backend).is_err());
    // history too short to hold out three purchases
    let tiny = vec![("u".to_string(), users[0].1[..3].to_vec())];
    assert!(run_purchase_eval(&catalog, &tiny, &PurchaseEvalConfig::new(3, 7, 1), &backend).is_err());
}

#[test]
fn table_exports() {
    let m = pmi_matrix(&[rec("u1", "a1"), rec("u1", "b1"), rec("u2", "c1")], &cats(), 0.5).unwrap();
    let mut buf = Vec::new();
    write_pmi_csv(&m, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "category,A,B,C");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("A,"));

    let r = concentration_report(&[(5, v(&["x", "y", "x"]))], 2).unwrap();
    let mut buf = Vec::new();
    write_concentration_csv(&r, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "agents,runs,purchases,rank,share\n5,1,3,1,0.666667\n5,1,3,2,0.333333\n"
    );

    let net = dissemination_report(60, 4, 0.1, 3, &[1, 2], TransmissionRule::AllNeighbors).unwrap();
    let mut buf = Vec::new();
    write_network_csv(&net, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("round,random,small_world,ring_lattice\n"));
    assert_eq!(text.lines().count(), 5);

    let mut buf = Vec::new();
    write_summary_line("demo", &serde_json::json!({"x": 1}), &mut buf).unwrap();
    let line: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(line["report"], "demo");
    assert_eq!(line["x"], 1);
    assert!(buf.ends_with(b"\n"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmi_is_symmetric(buys in prop::collection::vec((0u8..6, 0usize..4), 1..60)) {
        let products = ["a1", "a2", "b1", "c1"];
        let ledger: Vec<PurchaseRecord> = buys.iter().map(|&(u, p)| rec(&format!("u{u}"), products[p])).collect();
        let m = pmi_matrix(&ledger, &cats(), 0.5).unwrap();
        prop_assert!(m.is_symmetric());
        prop_assert!(m.values.iter().flatten().all(|v| v.is_finite()));
        for i in 0..3 {
            prop_assert!(m.marginals[i] <= m.users);
            for j in 0..3 {
                prop_assert!(m.pair_counts[i][j] <= m.marginals[i].min(m.marginals[j]));
            }
        }
    }

    #[test]
    fn shares_sum_to_one(buys in prop::collection::vec(0u8..20, 1..200)) {
        let ids: Vec<String> = buys.iter().map(|b| format!("p{b}")).collect();
        let s = shares(&ids);
        prop_assert!((s.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(s.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}
