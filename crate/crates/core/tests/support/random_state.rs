//! Random but valid system states, built by driving sessions through the
//! workflow with random inputs and stopping at random points.

use chrono::{DateTime, Utc};
use cplan_core::cbr::{CaseContext, Objectives, QualitySituation, RetrievalConfig};
use cplan_core::mcdm::{Capacity, CriteriaSet, PairwiseMatrix, Subset};
use cplan_core::store::{SystemConfig, SystemState};
use cplan_core::workflow::{
    ConsistencyPolicy, ControlScenario, ReviewPeriod, ScenarioCatalog, SessionState,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

const SCALE: [f64; 17] = [
    1.0 / 9.0,
    1.0 / 8.0,
    1.0 / 7.0,
    1.0 / 6.0,
    1.0 / 5.0,
    1.0 / 4.0,
    1.0 / 3.0,
    0.5,
    1.0,
    2.0,
    3.0,
    4.0,
    5.0,
    6.0,
    7.0,
    8.0,
    9.0,
];

fn timestamp(rng: &mut StdRng) -> DateTime<Utc> {
    DateTime::from_timestamp(
        rng.gen_range(1_500_000_000..2_000_000_000),
        rng.gen_range(0..1_000_000_000),
    )
    .unwrap()
}

fn text(rng: &mut StdRng) -> String {
    const WORDS: [&str; 8] = [
        "boring",
        "Ø12 bore",
        "weld",
        "flatness",
        "cap \"A\"",
        "ébavurage",
        "",
        "op-30",
    ];
    WORDS.choose(rng).unwrap().to_string()
}

pub fn situation(rng: &mut StdRng) -> QualitySituation {
    QualitySituation::new(
        rng.gen_range(0.0..2.5),
        rng.gen_range(-0.5..2.5),
        rng.gen_range(0.0..=100.0),
        rng.gen_range(0.0..=100.0),
    )
    .unwrap()
}

fn objectives(rng: &mut StdRng) -> Objectives {
    Objectives::new(
        rng.gen_range(0.5..1.5),
        rng.gen_range(0.5..1.5),
        rng.gen_range(0.0..60.0),
        rng.gen_range(0.0..30.0),
    )
    .unwrap()
}

pub fn capacity(rng: &mut StdRng, criteria: CriteriaSet) -> Capacity {
    let count = criteria.subset_count();
    let mut v = vec![0.0; count];
    let mut order: Vec<usize> = (1..count).collect();
    order.sort_by_key(|s| s.count_ones());
    for s in order {
        let floor = Subset(s as u32)
            .members()
            .map(|i| v[s ^ (1 << i)])
            .fold(0.0, f64::max);
        v[s] = floor + rng.gen_range(0.0..1.0);
    }
    let top = v[count - 1];
    let mut values: Vec<f64> = v.iter().map(|x| x / top).collect();
    values[count - 1] = 1.0;
    for s in 0..count {
        for i in Subset(s as u32).members() {
            values[s] = values[s].max(values[s ^ (1 << i)]);
        }
    }
    Capacity::from_values(criteria, values).unwrap()
}

fn matrix(rng: &mut StdRng, n: usize) -> PairwiseMatrix {
    let upper: Vec<f64> = (0..n * (n - 1) / 2)
        .map(|_| *SCALE.choose(rng).unwrap())
        .collect();
    PairwiseMatrix::from_upper_triangle(n, &upper).unwrap()
}

fn config(rng: &mut StdRng) -> SystemConfig {
    SystemConfig {
        retrieval: RetrievalConfig {
            threshold: rng.gen_range(0.0..60.0),
            order_p: *[1.0, 2.0, rng.gen_range(1.0..4.0)].choose(rng).unwrap(),
            attribute_weights: [
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.01..0.5),
                rng.gen_range(0.01..0.5),
            ],
            repair_margin: rng.gen_range(0.0..0.5),
        },
        consistency: ConsistencyPolicy {
            threshold: rng.gen_range(0.05..0.2),
            strict: rng.gen_bool(0.2),
        },
    }
}

fn catalog(rng: &mut StdRng) -> ScenarioCatalog {
    let mut c = ScenarioCatalog::default();
    for i in 0..rng.gen_range(0..3) {
        let mut s = ControlScenario::new(
            &format!("X{i}"),
            &format!("Extra plan {}", rng.gen::<u16>()),
        );
        s.description = text(rng);
        if rng.gen_bool(0.5) {
            s.parameters
                .insert("sample_size".into(), rng.gen_range(2..50).to_string());
            s.parameters.insert("frequency".into(), text(rng));
        }
        c.add(s).unwrap();
    }
    c
}

/// One random state. Sessions stop at every reachable state, including
/// closed ones with retained cases and repair successors.
pub fn random_state(rng: &mut StdRng) -> SystemState {
    let mut state = SystemState {
        config: config(rng),
        scenarios: catalog(rng),
        ..SystemState::default()
    };
    let ids: Vec<String> = state
        .scenarios
        .scenarios()
        .iter()
        .map(|s| s.id.0.clone())
        .collect();
    let mut clock = timestamp(rng);
    for _ in 0..rng.gen_range(0..12) {
        clock += chrono::Duration::nanoseconds(rng.gen_range(1..10_000_000_000));
        let now = clock;
        let ctx = CaseContext {
            operation: text(rng),
            characteristic: text(rng),
        };
        let SystemState {
            cases,
            scenarios,
            config,
            sessions,
        } = &mut state;
        let id = sessions.create(ctx, now).id();
        let stop = rng.gen_range(0..8);
        let s = sessions.require_mut(id).unwrap();
        if stop == 0 {
            continue;
        }
        let sit = situation(rng);
        s.submit_situation(sit, objectives(rng), cases, &config.retrieval, now)
            .unwrap();
        if stop == 1 {
            continue;
        }
        if s.state() == SessionState::AutoRecommended {
            if rng.gen_bool(0.6) {
                s.accept_recommendation(now).unwrap();
            } else {
                s.reject_recommendation(now).unwrap();
            }
        }
        if s.state() == SessionState::ManualRequired {
            let mut alts = ids.clone();
            alts.shuffle(rng);
            alts.truncate(rng.gen_range(2..=ids.len()));
            let cap = capacity(rng, CriteriaSet::default());
            let policy = ConsistencyPolicy {
                strict: false,
                ..config.consistency
            };
            let matrices = (0..3).map(|_| matrix(rng, alts.len())).collect();
            s.manual_evaluate(scenarios, alts.clone(), matrices, cap, &policy, now)
                .unwrap();
            if stop == 2 {
                continue;
            }
            let pick = alts.choose(rng).unwrap().clone();
            s.confirm_selection(scenarios, &pick, now).unwrap();
        }
        if stop == 3 {
            continue;
        }
        let period = ReviewPeriod {
            duration_secs: rng.gen_bool(0.5).then(|| rng.gen_range(60..10_000_000)),
            basis: text(rng),
        };
        s.apply(period, now).unwrap();
        if stop == 4 {
            continue;
        }
        let observed = if rng.gen_bool(0.5) {
            situation(rng)
        } else {
            sit
        };
        s.record_results(observed, now).unwrap();
        if stop == 5 {
            continue;
        }
        let next = sessions.next_id();
        let s = sessions.require_mut(id).unwrap();
        let (_, successor) = s.close(cases, &mut config.retrieval, next, now).unwrap();
        if let Some(succ) = successor {
            sessions.insert(succ).unwrap();
        }
    }
    state
}
