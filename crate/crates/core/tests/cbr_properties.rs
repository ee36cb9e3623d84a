use chrono::Utc;
use cplan_core::cbr::{
    distance, evaluate_outcome, retrieve, revise, Case, CaseBase, CaseContext, CaseId, CaseStatus,
    Objectives, Origin, Outcome, QualitySituation, RetrievalConfig, RetrievalProvenance,
    RevisionAction, ScenarioId,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn situation() -> impl Strategy<Value = QualitySituation> {
    (0.0f64..3.0, -1.0f64..3.0, 0.0f64..=100.0, 0.0f64..=100.0)
        .prop_map(|(cp, cpk, ncr, encr)| QualitySituation::new(cp, cpk, ncr, encr).unwrap())
}

fn config() -> impl Strategy<Value = RetrievalConfig> {
    (
        prop::sample::select(vec![1.0, 2.0, 3.5]),
        prop::array::uniform4(0.01f64..5.0),
    )
        .prop_map(|(order_p, attribute_weights)| RetrievalConfig {
            order_p,
            attribute_weights,
            ..RetrievalConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn distance_is_a_metric(a in situation(), b in situation(), c in situation(), cfg in config()) {
        let ab = distance(&a, &b, &cfg);
        let ba = distance(&b, &a, &cfg);
        let bc = distance(&b, &c, &cfg);
        let ac = distance(&a, &c, &cfg);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(distance(&a, &a, &cfg), 0.0);
        prop_assert!(ac <= ab + bc + 1e-9 * (1.0 + ac));
        if a != b {
            prop_assert!(ab > 0.0);
        }
    }

    #[test]
    fn improving_results_never_breaks_satisfaction(
        observed in situation(),
        target in situation(),
        bumps in prop::array::uniform4(0.0f64..10.0),
    ) {
        let objectives = Objectives::new(target.cp, target.cpk, target.ncr, target.encr).unwrap();
        let better = QualitySituation::new(
            observed.cp + bumps[0],
            observed.cpk + bumps[1],
            (observed.ncr - bumps[2]).max(0.0),
            (observed.encr - bumps[3]).max(0.0),
        )
        .unwrap();
        if evaluate_outcome(&observed, &objectives) == Outcome::Satisfactory {
            prop_assert_eq!(evaluate_outcome(&better, &objectives), Outcome::Satisfactory);
        }
    }

    #[test]
    fn repeated_failures_shrink_threshold(
        start in 0.5f64..50.0,
        fractions in prop::collection::vec(0.0f64..1.0, 1..20),
    ) {
        let mut cfg = RetrievalConfig::with_threshold(start);
        let mut case = closed(QualitySituation::new(1.0, 1.0, 10.0, 3.0).unwrap(), "S3", CaseStatus::Failed);
        case.origin = Origin::Automatic;
        for f in fractions {
            // A failed recommendation was retrieved strictly inside the threshold.
            let d = f * cfg.threshold;
            case.retrieval = Some(RetrievalProvenance { source_case: CaseId(1), distance: d });
            let action = revise(&case, Outcome::Unsatisfactory, &cfg).unwrap();
            let RevisionAction::RepairThreshold { new_threshold, .. } = action else {
                panic!("{action:?}")
            };
            prop_assert!(new_threshold >= 0.0);
            prop_assert!(new_threshold <= cfg.threshold);
            if cfg.threshold > 0.0 {
                prop_assert!(new_threshold < cfg.threshold);
            }
            cfg.threshold = new_threshold;
        }
    }
}

fn closed(situation: QualitySituation, scenario: &str, status: CaseStatus) -> Case {
    let mut case = Case::provisional(
        CaseContext::default(),
        situation,
        ScenarioId::new(scenario),
        Objectives::new(1.0, 1.0, 15.0, 3.0).unwrap(),
        Origin::Manual,
        Utc::now(),
    );
    case.observed = Some(situation);
    case.status = status;
    case
}

/// Independent full scan: collect every eligible pair, then pick by
/// (distance ascending, id descending).
fn linear_scan(
    target: &QualitySituation,
    base: &CaseBase,
    cfg: &RetrievalConfig,
) -> Option<(CaseId, f64)> {
    let mut all: Vec<(CaseId, f64)> = base
        .cases()
        .iter()
        .filter(|c| c.status == CaseStatus::Satisfactory)
        .map(|c| {
            let d: f64 = target
                .attributes()
                .iter()
                .zip(c.situation.attributes())
                .zip(cfg.attribute_weights)
                .map(|((a, b), w)| w * (a - b).abs().powf(cfg.order_p))
                .sum::<f64>()
                .powf(1.0 / cfg.order_p);
            (c.id, d)
        })
        .collect();
    all.sort_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
    all.first().copied().filter(|(_, d)| *d < cfg.threshold)
}

fn grid_situation(rng: &mut StdRng) -> QualitySituation {
    // Coarse grid so duplicate situations and exact ties are common.
    QualitySituation::new(
        rng.gen_range(0..=6) as f64 * 0.25,
        rng.gen_range(0..=6) as f64 * 0.25,
        rng.gen_range(0..=20) as f64 * 5.0,
        rng.gen_range(0..=10) as f64 * 2.0,
    )
    .unwrap()
}

#[test]
fn retrieve_matches_linear_scan() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut base = CaseBase::new();
    for i in 0..1000 {
        let status = if rng.gen_bool(0.8) {
            CaseStatus::Satisfactory
        } else {
            CaseStatus::Failed
        };
        base.retain(closed(
            grid_situation(&mut rng),
            &format!("S{}", i % 4 + 1),
            status,
        ))
        .unwrap();
    }
    let mut hits = 0;
    let mut strict_boundary_checks = 0;
    for q in 0..100 {
        let target = grid_situation(&mut rng);
        let p = if q % 2 == 0 { 1.0 } else { 2.0 };
        let mut cfg = RetrievalConfig {
            order_p: p,
            threshold: rng.gen_range(0.0..15.0),
            ..RetrievalConfig::default()
        };
        if q % 5 == 0 {
            // Put the threshold exactly on the nearest distance.
            if let Some((_, d)) = linear_scan(
                &target,
                &base,
                &RetrievalConfig {
                    threshold: f64::INFINITY,
                    ..cfg.clone()
                },
            ) {
                cfg.threshold = d;
                strict_boundary_checks += 1;
            }
        }
        let got = retrieve(&target, &base, &cfg).map(|r| (r.case_id, r.distance));
        let want = linear_scan(&target, &base, &cfg);
        match (got, want) {
            (None, None) => {}
            (Some((gid, gd)), Some((wid, wd))) => {
                assert_eq!(gid, wid, "query {q}");
                assert!((gd - wd).abs() < 1e-12);
                assert!(gd < cfg.threshold);
                assert_eq!(base.get(gid).unwrap().status, CaseStatus::Satisfactory);
                hits += 1;
            }
            other => panic!("query {q}: mismatch {other:?}"),
        }
    }
    assert!(
        hits > 10,
        "too few hits ({hits}) to exercise the comparison"
    );
    assert!(strict_boundary_checks > 5);
}

#[test]
fn duplicate_situations_resolve_to_larger_id() {
    let s = QualitySituation::new(1.0, 0.9, 20.0, 4.0).unwrap();
    let mut base = CaseBase::new();
    for scenario in ["S1", "S2", "S3"] {
        base.retain(closed(s, scenario, CaseStatus::Satisfactory))
            .unwrap();
    }
    for _ in 0..10 {
        let hit = retrieve(&s, &base, &RetrievalConfig::default()).unwrap();
        assert_eq!(hit.case_id, CaseId(3));
    }
}

#[test]
fn retaining_failed_case_leaves_retrieval_unchanged() {
    let mut rng = StdRng::seed_from_u64(11);
    let mut base = CaseBase::new();
    for i in 0..50 {
        base.retain(closed(
            grid_situation(&mut rng),
            &format!("S{}", i % 4 + 1),
            CaseStatus::Satisfactory,
        ))
        .unwrap();
    }
    let queries: Vec<_> = (0..50).map(|_| grid_situation(&mut rng)).collect();
    let cfg = RetrievalConfig::with_threshold(12.0);
    let before: Vec<_> = queries.iter().map(|q| retrieve(q, &base, &cfg)).collect();
    let snapshot = base.cases().to_vec();
    for q in &queries {
        base.retain(closed(*q, "S4", CaseStatus::Failed)).unwrap();
    }
    let after: Vec<_> = queries.iter().map(|q| retrieve(q, &base, &cfg)).collect();
    assert_eq!(before, after);
    assert_eq!(&base.cases()[..snapshot.len()], snapshot.as_slice());
    assert_eq!(base.len(), 100);
    let ids: Vec<u64> = base.cases().iter().map(|c| c.id.0).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn retain_then_retrieve_roundtrip() {
    let s = QualitySituation::new(1.2, 1.2, 10.0, 3.0).unwrap();
    let mut base = CaseBase::new();
    let id = base
        .retain(closed(s, "S2", CaseStatus::Satisfactory))
        .unwrap();
    assert_eq!(id, CaseId(1));
    assert_eq!(base.len(), 1);
    for threshold in [1e-9, 0.5, 100.0] {
        let hit = retrieve(&s, &base, &RetrievalConfig::with_threshold(threshold)).unwrap();
        assert_eq!((hit.case_id, hit.distance), (id, 0.0));
    }
}
