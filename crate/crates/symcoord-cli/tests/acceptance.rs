//! Acceptance suite: one test per headline criterion, each printing a
//! single PASS/FAIL line with its runtime. Everything numeric runs in
//! exact rational arithmetic unless stated otherwise; expected values are
//! asserted with exact equality.
//!
//! Criterion 3 is expected red: the source's stated reduced-history
//! optimum for the information-gap scenario (3/4) is refuted by a grid
//! point; see the assertion message for the certified analysis.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symcoord_cli::format::{load_model, Loaded, LoadedModel, NumericMode};
use symcoord_cli::scenario::find_scenario;

use symcoord_core::analysis::reduce_to_current_state;
use symcoord_core::belief::check_conditional_independence;
use symcoord_core::model::{InfoStructure, StrategyPair};
use symcoord_core::prescription::{GridSpec, Refinement};
use symcoord_core::random::{
    random_model, random_pair, random_prescription_sequence, random_strategy, DynamicsKind,
    InstanceConfig,
};
use symcoord_core::scalar::{Rat, Scalar};
use symcoord_core::solver::{
    extract_symmetric_strategy, solve, solve_with_candidates, specialized_cost_certificate,
    Budgets, LiftedCandidates,
};
use symcoord_core::traj::{evaluate_exact, evaluate_mc, DEFAULT_NODE_BUDGET};
use symcoord_core::verify::check_beliefs_against_oracle;
use symcoord_core::{Dist, Strategy};

fn r(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}

fn budgets() -> Budgets {
    Budgets::default()
}

fn load_scenario(name: &str, structure: Option<InfoStructure>) -> LoadedModel<Rat> {
    let scenario = find_scenario(name).expect("shipped scenario");
    match load_model(scenario.text, Some(NumericMode::Rational), structure).expect("loads") {
        Loaded::Rational(m) => m,
        Loaded::Float(_) => unreachable!(),
    }
}

struct Criterion {
    number: u32,
    what: &'static str,
    limit: Duration,
    start: Instant,
}

impl Criterion {
    fn begin(number: u32, what: &'static str, limit_secs: u64) -> Self {
        Criterion {
            number,
            what,
            limit: Duration::from_secs(limit_secs),
            start: Instant::now(),
        }
    }

    fn finish(self) {
        let elapsed = self.start.elapsed();
        println!(
            "criterion {:>2}: PASS ({:.2?} / limit {:?}) — {}",
            self.number, elapsed, self.limit, self.what
        );
        assert!(
            elapsed <= self.limit,
            "criterion {} exceeded its runtime limit: {:.2?} > {:?}",
            self.number,
            elapsed,
            self.limit
        );
    }

    fn fail(self, analysis: &str) -> ! {
        let elapsed = self.start.elapsed();
        println!(
            "criterion {:>2}: FAIL ({:.2?} / limit {:?}) — {}",
            self.number, elapsed, self.limit, self.what
        );
        panic!("criterion {} failed: {analysis}", self.number);
    }
}

#[test]
fn criterion_01_example1_randomization_gap() {
    let c = Criterion::begin(1, "example1: grid K=2 gives 1/2, deterministic-only gives 1", 1);
    let loaded = load_scenario("example1", None);
    let grid = solve(&loaded.model, loaded.structure, &GridSpec::grid(2), &budgets()).unwrap();
    assert_eq!(grid.j_star, r(1, 2));
    let det = solve(
        &loaded.model,
        loaded.structure,
        &GridSpec::deterministic_only(),
        &budgets(),
    )
    .unwrap();
    assert_eq!(det.j_star, r(1, 1));
    c.finish();
}

#[test]
fn criterion_02_example2_reduction_asymmetry() {
    let c = Criterion::begin(
        2,
        "example2: reduced conditionals 5/12 and 7/20 at (x=0,(a,b)), gap >= 1/15",
        1,
    );
    let loaded = load_scenario("example2", None);
    let pair = StrategyPair::symmetric(loaded.strategy.clone().unwrap());
    let report = reduce_to_current_state(&loaded.model, &pair, DEFAULT_NODE_BUDGET).unwrap();
    // Common realization (x0_1, x0_2, u1=a, u2=b); action column `a`.
    let at = vec![0usize, 0, 0, 1];
    assert_eq!(
        report.reduced.g1.action_dist(2, &vec![0], &at).unwrap().get(0),
        &r(5, 12)
    );
    assert_eq!(
        report.reduced.g2.action_dist(2, &vec![0], &at).unwrap().get(0),
        &r(7, 20)
    );
    assert!(report.symmetry_gap >= r(1, 15));
    assert_eq!(report.symmetry_gap, r(1, 15));
    assert_eq!(report.cost_before, report.cost_after);
    c.finish();
}

#[test]
fn criterion_03_example3_information_gap() {
    let c = Criterion::begin(3, "example3: K=4 solves, P1a = 0 and P1c = 3/4", 10);
    let p1a = load_scenario("example3", Some(InfoStructure::P1a));
    let report_a = solve(&p1a.model, InfoStructure::P1a, &GridSpec::grid(4), &budgets()).unwrap();
    assert_eq!(report_a.j_star, Rat::zero(), "delayed sharing reaches 0");

    let p1c = load_scenario("example3", Some(InfoStructure::P1c));
    let report_c = solve(&p1c.model, InfoStructure::P1c, &GridSpec::grid(4), &budgets()).unwrap();

    // Certified context for the assertion below. The source's named
    // strategy (both play 0, then Bernoulli(1/2)) evaluates to exactly
    // 3/4 — but the deterministic stage-2 prescription "play your own
    // state" makes both success events coincide with {x1 = x2} and costs
    // 1/2, checked here through the independent trajectory evaluator.
    let nu = p1c.model.action_space().len();
    let claimed = Strategy::from_fn(&p1c.model, InfoStructure::P1c, |t, _, _| {
        if t == 1 {
            Dist::point(nu, 0)
        } else {
            Dist::uniform(nu)
        }
    })
    .unwrap();
    let j_claimed = evaluate_exact(
        &p1c.model,
        &StrategyPair::symmetric(claimed),
        InfoStructure::P1c,
        DEFAULT_NODE_BUDGET,
    )
    .unwrap();
    assert_eq!(j_claimed, r(3, 4));
    let matching = Strategy::from_fn(&p1c.model, InfoStructure::P1c, |t, p, _| {
        if t == 1 {
            Dist::point(nu, 0)
        } else {
            Dist::point(nu, p[0])
        }
    })
    .unwrap();
    let j_matching = evaluate_exact(
        &p1c.model,
        &StrategyPair::symmetric(matching),
        InfoStructure::P1c,
        DEFAULT_NODE_BUDGET,
    )
    .unwrap();
    assert_eq!(j_matching, r(1, 2));

    if report_c.j_star != r(3, 4) {
        c.fail(&format!(
            "expected J*(P1c, K=4) = 3/4, computed {}. The 3/4 figure is the exact value of \
             the stated strategy (stage 1 action 0, stage 2 Bernoulli(1/2)) but it is not the \
             optimum: the symmetric strategy 'play 0, then play your own state' is a grid \
             point, correlates the two success events into {{x1 = x2}}, and evaluates to 1/2 \
             exactly (verified above via the brute-force evaluator, independently of the \
             dynamic program). The information gap itself stands: 0 = J*(P1a) < J*(P1c) = {}.",
            report_c.j_star, report_c.j_star
        ));
    }
    c.finish();
}

#[test]
fn criterion_04_p1d_independence_counterexample() {
    let c = Criterion::begin(
        4,
        "aggregate actions: joint 1/10 vs product 1/4 (deviation 3/20); reduced history stays independent",
        1,
    );
    let loaded = load_scenario("p1d_independence", None);
    let pair = StrategyPair::symmetric(loaded.strategy.clone().unwrap());
    let report =
        check_conditional_independence(&loaded.model, &pair, InfoStructure::P1d, 2, DEFAULT_NODE_BUDGET)
            .unwrap();
    assert!(!report.holds);
    assert_eq!(report.max_deviation, r(3, 20));
    let witness = report.witness.unwrap();
    assert_eq!(witness.joint, r(1, 10));
    assert_eq!(witness.marginal_product, r(1, 4));
    assert_eq!(witness.p1, vec![0]);
    assert_eq!(witness.p2, vec![0]);

    let as_p1c = load_scenario("p1d_independence", Some(InfoStructure::P1c));
    let pair = StrategyPair::symmetric(as_p1c.strategy.clone().unwrap());
    let report =
        check_conditional_independence(&as_p1c.model, &pair, InfoStructure::P1c, 2, DEFAULT_NODE_BUDGET)
            .unwrap();
    assert!(report.holds);
    assert_eq!(report.max_deviation, Rat::zero());
    c.finish();
}

#[test]
fn criterion_05_specialized_cost_certificate() {
    let c = Criterion::begin(
        5,
        "specialized cost: identity map certified, value 0 for both history structures",
        5,
    );
    let loaded = load_scenario("lemma4_cost", None);
    let identity: Vec<usize> = (0..loaded.model.local_space().len()).collect();
    let cert = specialized_cost_certificate(&loaded.model, &identity);
    assert!(cert.certified, "witness: {:?}", cert.witness);
    for structure in [InfoStructure::P1b, InfoStructure::P1c] {
        let report = solve(
            &loaded.model,
            structure,
            &GridSpec::deterministic_only(),
            &budgets(),
        )
        .unwrap();
        assert_eq!(report.j_star, Rat::zero(), "{structure:?}");
    }
    // The all-m symmetric strategy achieves 0 on both structures.
    let j = evaluate_exact(
        &loaded.model,
        &StrategyPair::symmetric(loaded.strategy.clone().unwrap()),
        InfoStructure::P1b,
        DEFAULT_NODE_BUDGET,
    )
    .unwrap();
    assert_eq!(j, Rat::zero());
    c.finish();
}

#[test]
fn criterion_06_iid_uncontrolled_history_equivalence() {
    let c = Criterion::begin(
        6,
        "50 random i.i.d.-uncontrolled models: J*(P1b over lifts) = J*(P1c), Q-values preserved",
        300,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    for run in 0..50 {
        let config = InstanceConfig {
            horizon: 2,
            shared_len: 1,
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::IidUncontrolled,
            cost_range: (0, 4),
            with_aggregate: false,
            action_symmetric: false,
        };
        let model = random_model(&mut rng, &config).unwrap();
        let spec = GridSpec::grid(2);
        let p1c = solve(&model, InfoStructure::P1c, &spec, &budgets()).unwrap();
        let p1b = solve_with_candidates(
            &model,
            InfoStructure::P1b,
            &LiftedCandidates { spec: spec.clone() },
            &budgets(),
            Refinement::None,
            spec.resolution,
        )
        .unwrap();
        assert_eq!(p1b.j_star, p1c.j_star, "run {run}");

        // Q-value preservation through project/lift at product beliefs.
        use symcoord_core::belief::{Belief, FactoredBelief};
        use symcoord_core::prescription::{lift_c_to_b, project_b_to_c};
        use symcoord_core::solver::{q_value_with, BeliefNode};
        let alpha = model.alpha().clone();
        let hist: Vec<Rat> = model
            .private_domain(InfoStructure::P1b, 2)
            .iter()
            .map(|h| h.iter().fold(Rat::one(), |acc, &x| acc * alpha.get(x).clone()))
            .collect();
        let node_b = BeliefNode {
            t: 2,
            belief: Belief::Factored(FactoredBelief {
                x0: 0,
                pi1: Dist::new(hist.clone()).unwrap(),
                pi2: Dist::new(hist).unwrap(),
            }),
        };
        let node_c = BeliefNode {
            t: 2,
            belief: Belief::Factored(FactoredBelief {
                x0: 0,
                pi1: alpha.clone(),
                pi2: alpha.clone(),
            }),
        };
        let mut zero = |_: &BeliefNode<Rat>| Ok(Rat::zero());
        let gamma_b = symcoord_core::random::random_prescription(&mut rng, 4, 2);
        let q_b = q_value_with(&model, InfoStructure::P1b, &node_b, &gamma_b, &mut zero).unwrap();
        let q_c = q_value_with(
            &model,
            InfoStructure::P1c,
            &node_c,
            &project_b_to_c(&gamma_b, &alpha, 2),
            &mut zero,
        )
        .unwrap();
        assert_eq!(q_b, q_c, "projection Q-value, run {run}");
        let gamma_c = symcoord_core::random::random_prescription(&mut rng, 2, 2);
        let q_c = q_value_with(&model, InfoStructure::P1c, &node_c, &gamma_c, &mut zero).unwrap();
        let q_b = q_value_with(
            &model,
            InfoStructure::P1b,
            &node_b,
            &lift_c_to_b(&gamma_c, 2),
            &mut zero,
        )
        .unwrap();
        assert_eq!(q_c, q_b, "lift Q-value, run {run}");
    }
    c.finish();
}

#[test]
fn criterion_07_state_blind_dynamics_equivalence() {
    let c = Criterion::begin(
        7,
        "50 random state-blind models: J*(P1a) = J*(P1c), beliefs equal the state-blind rows",
        300,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    for run in 0..50 {
        let config = InstanceConfig {
            horizon: 2,
            shared_len: 2,
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::IgnoresOwnState,
            cost_range: (0, 4),
            with_aggregate: false,
            action_symmetric: false,
        };
        let model = random_model(&mut rng, &config).unwrap();
        assert!(model.local_ignores_own_state());
        let spec = GridSpec::grid(2);
        let a = solve(&model, InfoStructure::P1a, &spec, &budgets()).unwrap();
        let cc = solve(&model, InfoStructure::P1c, &spec, &budgets()).unwrap();
        assert_eq!(a.j_star, cc.j_star, "run {run}");
        for (structure, report) in [(InfoStructure::P1a, &a), (InfoStructure::P1c, &cc)] {
            for node in symcoord_core::solver::reachable_tree(&model, structure, report).unwrap() {
                if node.t == 1 {
                    continue;
                }
                let eta = symcoord_core::belief::update_specialized_dynamics(
                    &model,
                    1,
                    node.common[0],
                    node.common[2],
                    node.common[3],
                )
                .unwrap();
                let b = node.node.belief.as_factored();
                assert_eq!(b.pi1, eta, "run {run} {structure:?}");
                assert_eq!(b.pi2, eta, "run {run} {structure:?}");
            }
        }
    }
    c.finish();
}

#[test]
fn criterion_08_belief_oracle_equivalence() {
    let c = Criterion::begin(
        8,
        "200 random models/prescriptions (T<=3, binary): every filter equals the oracle conditional",
        300,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let structures = [
        InfoStructure::P1a,
        InfoStructure::P1b,
        InfoStructure::P1c,
        InfoStructure::P1d,
    ];
    for run in 0..200 {
        let is = structures[run % 4];
        let config = InstanceConfig {
            horizon: 2 + (run / 4) % 2,
            shared_len: if run % 5 == 0 { 2 } else { 1 },
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::General,
            cost_range: (0, 3),
            with_aggregate: is == InfoStructure::P1d,
            action_symmetric: false,
        };
        let model = random_model(&mut rng, &config).unwrap();
        let gammas = random_prescription_sequence(&mut rng, &model, is, false);
        check_beliefs_against_oracle(&model, is, &gammas, DEFAULT_NODE_BUDGET)
            .unwrap_or_else(|e| panic!("run {run} ({is:?}): {e}"));
    }
    c.finish();
}

#[test]
fn criterion_09_conditional_independence_everywhere() {
    let c = Criterion::begin(
        9,
        "100 random history/reduced models with asymmetric pairs: independence holds exactly",
        300,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    for run in 0..100 {
        let is = if run % 2 == 0 {
            InfoStructure::P1b
        } else {
            InfoStructure::P1c
        };
        let config = InstanceConfig {
            horizon: if run % 3 == 0 { 3 } else { 2 },
            shared_len: if run % 4 == 0 { 2 } else { 1 },
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::General,
            cost_range: (0, 3),
            with_aggregate: false,
            action_symmetric: false,
        };
        let model = random_model(&mut rng, &config).unwrap();
        let pair = random_pair(&mut rng, &model, is).unwrap();
        for t in 1..=model.horizon() {
            let report =
                check_conditional_independence(&model, &pair, is, t, DEFAULT_NODE_BUDGET).unwrap();
            assert!(report.holds, "run {run} t={t} ({is:?})");
            assert_eq!(report.max_deviation, Rat::zero(), "run {run} t={t}");
        }
    }
    c.finish();
}

#[test]
fn criterion_10_reduction_preserves_cost() {
    let c = Criterion::begin(
        10,
        "100 random full-history pairs: the current-state reduction preserves J exactly",
        300,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for run in 0..100 {
        let config = InstanceConfig {
            horizon: 2,
            shared_len: if run % 4 == 0 { 2 } else { 1 },
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::General,
            cost_range: (0, 4),
            with_aggregate: false,
            action_symmetric: false,
        };
        let model = random_model(&mut rng, &config).unwrap();
        let pair = random_pair(&mut rng, &model, InfoStructure::P1b).unwrap();
        let report = reduce_to_current_state(&model, &pair, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(report.cost_before, report.cost_after, "run {run}");
    }
    c.finish();
}

#[test]
fn criterion_11_monte_carlo_consistency() {
    let c = Criterion::begin(
        11,
        "200 seeded runs at n = 100000: the estimate lies within 4 stderr of the exact value",
        120,
    );
    let n = 100_000u64;
    let mut within = 0usize;
    let mut total = 0usize;

    // 100 runs on the anti-coordination scenario in float mode.
    let example1 = match load_model(
        find_scenario("example1").unwrap().text,
        Some(NumericMode::Float),
        None,
    ) {
        Err(e) => panic!("example1 should load in float mode: {e}"),
        Ok(Loaded::Float(m)) => m,
        Ok(Loaded::Rational(_)) => unreachable!(),
    };
    let g = example1.strategy.clone().unwrap();
    for seed in 0..100u64 {
        let (est, se) = evaluate_mc(&example1.model, &g, example1.structure, seed, n).unwrap();
        total += 1;
        if (est - 0.5).abs() <= 4.0 * se {
            within += 1;
        }
    }

    // 100 runs on random models; exact values from the rational backend.
    let mut rng = ChaCha8Rng::seed_from_u64(1100);
    for run in 0..100u64 {
        let config = InstanceConfig {
            horizon: 2,
            shared_len: 1,
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::General,
            cost_range: (0, 4),
            with_aggregate: false,
            action_symmetric: false,
        };
        let model = random_model(&mut rng, &config).unwrap();
        let strategy = random_strategy(&mut rng, &model, InfoStructure::P1c).unwrap();
        let exact = evaluate_exact(
            &model,
            &StrategyPair::symmetric(strategy.clone()),
            InfoStructure::P1c,
            DEFAULT_NODE_BUDGET,
        )
        .unwrap()
        .to_f64();
        let (est, se) = evaluate_mc(
            &model.to_f64(),
            &strategy.to_f64(),
            InfoStructure::P1c,
            7_000 + run,
            n,
        )
        .unwrap();
        total += 1;
        // A deterministic sample has stderr 0 and must match exactly.
        if (est - exact).abs() <= 4.0 * se || (se == 0.0 && (est - exact).abs() < 1e-12) {
            within += 1;
        }
    }
    assert_eq!(total, 200);
    assert!(
        within * 100 >= total * 99,
        "only {within}/{total} runs within 4 stderr"
    );
    c.finish();
}

#[test]
fn extraction_round_trip_on_scenarios() {
    // Replaying the extracted symmetric strategy reproduces J* exactly on
    // every solvable shipped scenario and structure.
    for (name, structure, k) in [
        ("example1", None, 2),
        ("example3", Some(InfoStructure::P1a), 4),
        ("example3", Some(InfoStructure::P1c), 4),
        ("lemma5_dynamics", Some(InfoStructure::P1c), 2),
        ("lemma6_dynamics", Some(InfoStructure::P1a), 2),
        ("p1d_independence", None, 2),
    ] {
        let loaded = load_scenario(name, structure);
        let report = solve(&loaded.model, loaded.structure, &GridSpec::grid(k), &budgets()).unwrap();
        let g = extract_symmetric_strategy(&loaded.model, loaded.structure, &report).unwrap();
        let j = evaluate_exact(
            &loaded.model,
            &StrategyPair::symmetric(g),
            loaded.structure,
            DEFAULT_NODE_BUDGET,
        )
        .unwrap();
        assert_eq!(j, report.j_star, "{name} {structure:?}");
    }
}
