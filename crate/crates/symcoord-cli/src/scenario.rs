//! Built-in scenarios and the one-shot verifier.
//!
//! Every scenario is a committed model file under `scenarios/` plus a
//! list of expected quantities. The verifier reruns each scenario's
//! pipeline in exact rational arithmetic and demands exact matches, so
//! the table below is the executable form of the toolkit's headline
//! numbers.

use symcoord_core::analysis::reduce_to_current_state;
use symcoord_core::belief::{check_conditional_independence, update_specialized_dynamics};
use symcoord_core::model::{InfoStructure, StrategyPair};
use symcoord_core::prescription::{project_b_to_c, GridSpec, Prescription, Refinement};
use symcoord_core::scalar::{Rat, Scalar};
use symcoord_core::solver::{
    reachable_tree, solve, solve_with_candidates, specialized_cost_certificate, Budgets,
    LiftedCandidates,
};
use symcoord_core::traj::{evaluate_exact, DEFAULT_NODE_BUDGET};

use crate::format::{load_model, Loaded, LoadedModel, NumericMode};

pub struct Scenario {
    pub name: &'static str,
    pub text: &'static str,
    pub summary: &'static str,
}

/// All shipped scenarios, ordered by name.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "example1",
            text: include_str!("../../../scenarios/example1.toml"),
            summary: "anti-coordination: randomized symmetric play halves the cost",
        },
        Scenario {
            name: "example2",
            text: include_str!("../../../scenarios/example2.toml"),
            summary: "current-state reduction of a symmetric pair turns asymmetric",
        },
        Scenario {
            name: "example3",
            text: include_str!("../../../scenarios/example3.toml"),
            summary: "delayed sharing beats reduced history (0 vs 3/4)",
        },
        Scenario {
            name: "lemma4_cost",
            text: include_str!("../../../scenarios/lemma4_cost.toml"),
            summary: "zero-cost action map certifies value 0 for both history structures",
        },
        Scenario {
            name: "lemma5_dynamics",
            text: include_str!("../../../scenarios/lemma5_dynamics.toml"),
            summary: "i.i.d. uncontrolled locals equate full and reduced history",
        },
        Scenario {
            name: "lemma6_dynamics",
            text: include_str!("../../../scenarios/lemma6_dynamics.toml"),
            summary: "state-blind local dynamics equate delayed sharing and reduced history",
        },
        Scenario {
            name: "p1d_independence",
            text: include_str!("../../../scenarios/p1d_independence.toml"),
            summary: "aggregate actions break conditional independence (1/10 vs 1/4)",
        },
    ]
}

pub fn find_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[derive(Clone, Debug)]
pub struct VerifyRow {
    pub scenario: String,
    pub quantity: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

fn row(scenario: &str, quantity: &str, expected: Rat, computed: Result<Rat, String>) -> VerifyRow {
    match computed {
        Ok(value) => VerifyRow {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            expected: expected.to_string(),
            pass: value == expected,
            computed: value.to_string(),
        },
        Err(message) => VerifyRow {
            scenario: scenario.to_string(),
            quantity: quantity.to_string(),
            expected: expected.to_string(),
            computed: format!("error: {message}"),
            pass: false,
        },
    }
}

fn r(num: i64, den: i64) -> Rat {
    Rat::new(num, den)
}

fn load_rational(
    text: &str,
    structure: Option<InfoStructure>,
) -> Result<LoadedModel<Rat>, String> {
    match load_model(text, Some(NumericMode::Rational), structure) {
        Ok(Loaded::Rational(m)) => Ok(m),
        Ok(Loaded::Float(_)) => Err("expected rational mode".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn budgets() -> Budgets {
    Budgets::default()
}

/// Runs one scenario's checks. Unknown names yield an empty list.
pub fn verify_scenario(name: &str) -> Vec<VerifyRow> {
    let Some(scenario) = find_scenario(name) else {
        return vec![];
    };
    match name {
        "example1" => verify_example1(&scenario),
        "example2" => verify_example2(&scenario),
        "example3" => verify_example3(&scenario),
        "lemma4_cost" => verify_lemma4(&scenario),
        "lemma5_dynamics" => verify_lemma5(&scenario),
        "lemma6_dynamics" => verify_lemma6(&scenario),
        "p1d_independence" => verify_p1d(&scenario),
        _ => vec![],
    }
}

/// Runs every scenario (or one, when `filter` is set), ordered by name.
/// The boolean is true when every row passed.
pub fn verify_all(filter: Option<&str>) -> (Vec<VerifyRow>, bool) {
    let names: Vec<&'static str> = builtin_scenarios()
        .iter()
        .map(|s| s.name)
        .filter(|n| filter.is_none_or(|f| f == *n))
        .collect();
    let rows: Vec<VerifyRow> = names.iter().flat_map(|n| verify_scenario(n)).collect();
    let ok = !rows.is_empty() && rows.iter().all(|r| r.pass);
    (rows, ok)
}

fn verify_example1(s: &Scenario) -> Vec<VerifyRow> {
    let mut out = vec![];
    let load = load_rational(s.text, None);
    match load {
        Err(e) => out.push(row(s.name, "load", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let grid = solve(&loaded.model, loaded.structure, &GridSpec::grid(2), &budgets())
                .map(|rep| rep.j_star)
                .map_err(|e| e.to_string());
            out.push(row(s.name, "j_star_grid2", r(1, 2), grid));
            let det = solve(
                &loaded.model,
                loaded.structure,
                &GridSpec::deterministic_only(),
                &budgets(),
            )
            .map(|rep| rep.j_star)
            .map_err(|e| e.to_string());
            out.push(row(s.name, "j_star_deterministic", r(1, 1), det));
            let j = match &loaded.strategy {
                Some(g) => evaluate_exact(
                    &loaded.model,
                    &StrategyPair::symmetric(g.clone()),
                    loaded.structure,
                    DEFAULT_NODE_BUDGET,
                )
                .map_err(|e| e.to_string()),
                None => Err("no embedded strategy".into()),
            };
            out.push(row(s.name, "j_embedded_strategy", r(1, 2), j));
        }
    }
    out
}

fn verify_example2(s: &Scenario) -> Vec<VerifyRow> {
    let mut out = vec![];
    match load_rational(s.text, None) {
        Err(e) => out.push(row(s.name, "load", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let g = loaded.strategy.clone().expect("shipped strategy");
            let pair = StrategyPair::symmetric(g.clone());
            match reduce_to_current_state(&loaded.model, &pair, DEFAULT_NODE_BUDGET) {
                Err(e) => out.push(row(s.name, "reduce", Rat::zero(), Err(e.to_string()))),
                Ok(report) => {
                    // c = (x0_1, x0_2, u1 = a, u2 = b), x = 0, action a.
                    let c = vec![0usize, 0, 0, 1];
                    let at = |strategy: &symcoord_core::Strategy<Rat>, x: usize| {
                        strategy
                            .action_dist(2, &vec![x], &c)
                            .map(|d| d.get(0).clone())
                            .map_err(|e| e.to_string())
                    };
                    out.push(row(
                        s.name,
                        "reduced_agent1_x0_ab",
                        r(5, 12),
                        at(&report.reduced.g1, 0),
                    ));
                    out.push(row(
                        s.name,
                        "reduced_agent2_x0_ab",
                        r(7, 20),
                        at(&report.reduced.g2, 0),
                    ));
                    out.push(row(
                        s.name,
                        "reduced_agent1_x1_ab",
                        r(1, 3),
                        at(&report.reduced.g1, 1),
                    ));
                    out.push(row(
                        s.name,
                        "reduced_agent2_x1_ab",
                        r(2, 5),
                        at(&report.reduced.g2, 1),
                    ));
                    out.push(row(s.name, "symmetry_gap", r(1, 15), Ok(report.symmetry_gap)));
                    out.push(row(
                        s.name,
                        "cost_preservation_diff",
                        Rat::zero(),
                        Ok(report.cost_before - report.cost_after),
                    ));
                }
            }
            // Projecting the history prescription at t=2 averages the
            // matching/non-matching rows: (1/4 + 1/2) / 2 = 3/8.
            let c1 = loaded.model.initial_common(0);
            let gamma_b = Prescription::new(
                loaded
                    .model
                    .private_domain(InfoStructure::P1b, 2)
                    .iter()
                    .map(|p| {
                        // The shipped table is common-blind; any reachable
                        // c gives the same row. Use c extended by (a, a).
                        let c2 = loaded
                            .model
                            .extend_common(
                                InfoStructure::P1b,
                                &c1,
                                symcoord_core::model::Observation {
                                    x0_next: 0,
                                    u1: 0,
                                    u2: 0,
                                    x1: 0,
                                    x2: 0,
                                },
                            )
                            .unwrap();
                        g.action_dist(2, p, &c2).unwrap().clone()
                    })
                    .collect(),
            );
            let gamma_c = project_b_to_c(&gamma_b, loaded.model.alpha(), 2);
            out.push(row(
                s.name,
                "projected_t2_x0_a",
                r(3, 8),
                Ok(gamma_c.row(0).get(0).clone()),
            ));
            out.push(row(
                s.name,
                "projected_t2_x1_a",
                r(3, 8),
                Ok(gamma_c.row(1).get(0).clone()),
            ));
        }
    }
    out
}

fn verify_example3(s: &Scenario) -> Vec<VerifyRow> {
    // The source's stated reduced-history optimum of 3/4 does not hold
    // up: its named strategy (both play 0, then randomize fifty-fifty)
    // does evaluate to exactly 3/4, but the deterministic prescription
    // "play your own state" at stage 2 correlates the two success events
    // (both succeed exactly when the states match) and achieves 1/2.
    // The expected value 3/4 for `j_star_p1c_grid4` is kept so the table
    // honestly reports the discrepancy; the two strategy-value rows
    // certify both sides of it.
    let mut out = vec![];
    for (quantity, structure, expected) in [
        ("j_star_p1a_grid4", InfoStructure::P1a, Rat::zero()),
        ("j_star_p1c_grid4", InfoStructure::P1c, r(3, 4)),
    ] {
        let computed = load_rational(s.text, Some(structure)).and_then(|loaded| {
            solve(&loaded.model, structure, &GridSpec::grid(4), &budgets())
                .map(|rep| rep.j_star)
                .map_err(|e| e.to_string())
        });
        out.push(row(s.name, quantity, expected, computed));
    }
    if let Ok(loaded) = load_rational(s.text, Some(InfoStructure::P1c)) {
        let nu = loaded.model.action_space().len();
        let j_of = |g: symcoord_core::Strategy<Rat>| {
            evaluate_exact(
                &loaded.model,
                &StrategyPair::symmetric(g),
                InfoStructure::P1c,
                DEFAULT_NODE_BUDGET,
            )
            .map_err(|e| e.to_string())
        };
        // Claimed optimum: action 0 at stage 1, fifty-fifty at stage 2.
        let claimed = symcoord_core::Strategy::from_fn(&loaded.model, InfoStructure::P1c, |t, _, _| {
            if t == 1 {
                symcoord_core::Dist::point(nu, 0)
            } else {
                symcoord_core::Dist::uniform(nu)
            }
        })
        .map_err(|e| e.to_string())
        .and_then(&j_of);
        out.push(row(s.name, "j_claimed_strategy_p1c", r(3, 4), claimed));
        // The strategy that beats it: action 0, then play the own state.
        let matching = symcoord_core::Strategy::from_fn(&loaded.model, InfoStructure::P1c, |t, p, _| {
            if t == 1 {
                symcoord_core::Dist::point(nu, 0)
            } else {
                symcoord_core::Dist::point(nu, p[0])
            }
        })
        .map_err(|e| e.to_string())
        .and_then(&j_of);
        out.push(row(s.name, "j_state_matching_strategy_p1c", r(1, 2), matching));
    }
    out
}

fn verify_lemma4(s: &Scenario) -> Vec<VerifyRow> {
    let mut out = vec![];
    match load_rational(s.text, None) {
        Err(e) => out.push(row(s.name, "load", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let identity: Vec<usize> = (0..loaded.model.local_space().len()).collect();
            let cert = specialized_cost_certificate(&loaded.model, &identity);
            out.push(row(
                s.name,
                "certified_identity_map",
                Rat::one(),
                Ok(if cert.certified { Rat::one() } else { Rat::zero() }),
            ));
            for (quantity, structure) in [
                ("j_star_p1b_det", InfoStructure::P1b),
                ("j_star_p1c_det", InfoStructure::P1c),
            ] {
                let computed = solve(
                    &loaded.model,
                    structure,
                    &GridSpec::deterministic_only(),
                    &budgets(),
                )
                .map(|rep| rep.j_star)
                .map_err(|e| e.to_string());
                out.push(row(s.name, quantity, Rat::zero(), computed));
            }
            let j = match &loaded.strategy {
                Some(g) => evaluate_exact(
                    &loaded.model,
                    &StrategyPair::symmetric(g.clone()),
                    loaded.structure,
                    DEFAULT_NODE_BUDGET,
                )
                .map_err(|e| e.to_string()),
                None => Err("no embedded strategy".into()),
            };
            out.push(row(s.name, "j_always_m_strategy", Rat::zero(), j));
        }
    }
    out
}

fn verify_lemma5(s: &Scenario) -> Vec<VerifyRow> {
    let mut out = vec![];
    match load_rational(s.text, None) {
        Err(e) => out.push(row(s.name, "load", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let iid = loaded.model.iid_uncontrolled_local();
            out.push(row(
                s.name,
                "iid_uncontrolled_flag",
                Rat::one(),
                Ok(if iid { Rat::one() } else { Rat::zero() }),
            ));
            let spec = GridSpec::grid(2);
            let diff = solve(&loaded.model, InfoStructure::P1c, &spec, &budgets())
                .map_err(|e| e.to_string())
                .and_then(|c| {
                    solve_with_candidates(
                        &loaded.model,
                        InfoStructure::P1b,
                        &LiftedCandidates { spec: spec.clone() },
                        &budgets(),
                        Refinement::None,
                        spec.resolution,
                    )
                    .map(|b| b.j_star - c.j_star)
                    .map_err(|e| e.to_string())
                });
            out.push(row(s.name, "j_p1b_lifted_minus_j_p1c", Rat::zero(), diff));
        }
    }
    out
}

fn verify_lemma6(s: &Scenario) -> Vec<VerifyRow> {
    let mut out = vec![];
    match load_rational(s.text, None) {
        Err(e) => out.push(row(s.name, "load", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let spec = GridSpec::grid(2);
            let a = solve(&loaded.model, InfoStructure::P1a, &spec, &budgets());
            let c = solve(&loaded.model, InfoStructure::P1c, &spec, &budgets());
            let diff = match (&a, &c) {
                (Ok(a), Ok(c)) => Ok(a.j_star.clone() - c.j_star.clone()),
                (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
            };
            out.push(row(s.name, "j_p1a_minus_j_p1c", Rat::zero(), diff));

            // Every time-2 belief along both reachable trees is the
            // state-blind kernel row for the realized (x0, u).
            let mut max_dev = Ok(Rat::zero());
            'outer: for (structure, report) in
                [(InfoStructure::P1a, &a), (InfoStructure::P1c, &c)]
            {
                let Ok(report) = report else {
                    continue;
                };
                match reachable_tree(&loaded.model, structure, report) {
                    Err(e) => {
                        max_dev = Err(e.to_string());
                        break 'outer;
                    }
                    Ok(tree) => {
                        for node in tree.iter().filter(|n| n.t == 2) {
                            let x0_prev = node.common[0];
                            let (u1, u2) = (node.common[2], node.common[3]);
                            let eta = update_specialized_dynamics(
                                &loaded.model,
                                1,
                                x0_prev,
                                u1,
                                u2,
                            )
                            .expect("state-blind model");
                            let b = node.node.belief.as_factored();
                            for pi in [&b.pi1, &b.pi2] {
                                for (w, e) in pi.iter().zip(eta.iter()) {
                                    let dev = (w.clone() - e.clone()).abs();
                                    if let Ok(current) = &max_dev {
                                        if dev > *current {
                                            max_dev = Ok(dev);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            out.push(row(s.name, "belief_eta_hat_max_dev", Rat::zero(), max_dev));
        }
    }
    out
}

fn verify_p1d(s: &Scenario) -> Vec<VerifyRow> {
    let mut out = vec![];
    match load_rational(s.text, None) {
        Err(e) => out.push(row(s.name, "load", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let g = loaded.strategy.clone().expect("shipped strategy");
            let pair = StrategyPair::symmetric(g);
            match check_conditional_independence(
                &loaded.model,
                &pair,
                InfoStructure::P1d,
                2,
                DEFAULT_NODE_BUDGET,
            ) {
                Err(e) => out.push(row(s.name, "check", Rat::zero(), Err(e.to_string()))),
                Ok(report) => {
                    out.push(row(
                        s.name,
                        "holds_under_aggregate",
                        Rat::zero(),
                        Ok(if report.holds { Rat::one() } else { Rat::zero() }),
                    ));
                    out.push(row(
                        s.name,
                        "max_deviation",
                        r(3, 20),
                        Ok(report.max_deviation.clone()),
                    ));
                    match &report.witness {
                        Some(w) => {
                            out.push(row(
                                s.name,
                                "witness_joint",
                                r(1, 10),
                                Ok(w.joint.clone()),
                            ));
                            out.push(row(
                                s.name,
                                "witness_marginal_product",
                                r(1, 4),
                                Ok(w.marginal_product.clone()),
                            ));
                        }
                        None => {
                            out.push(row(
                                s.name,
                                "witness_joint",
                                r(1, 10),
                                Err("no witness".into()),
                            ));
                        }
                    }
                }
            }
        }
    }
    // The same model under reduced local history is independent again.
    match load_rational(s.text, Some(InfoStructure::P1c)) {
        Err(e) => out.push(row(s.name, "load_p1c", Rat::zero(), Err(e))),
        Ok(loaded) => {
            let g = loaded.strategy.clone().expect("shipped strategy");
            let pair = StrategyPair::symmetric(g);
            let computed = check_conditional_independence(
                &loaded.model,
                &pair,
                InfoStructure::P1c,
                2,
                DEFAULT_NODE_BUDGET,
            )
            .map(|rep| rep.max_deviation)
            .map_err(|e| e.to_string());
            out.push(row(s.name, "deviation_under_p1c", Rat::zero(), computed));
        }
    }
    out
}
