//! The coordinator dynamic program with identical prescriptions.
//!
//! Top-down value recursion from the initial belief, memoized on
//! `(t, shared state, quantized belief)`. At each node the minimization
//! over prescriptions runs on a finite candidate set (deterministic
//! tables plus a simplex grid, optionally refined by coordinate descent);
//! the reported value never claims optimality beyond that set. Reachable
//! beliefs depend on the chosen prescriptions, so lazy recursion visits
//! exactly the nodes that matter; zero-probability increments are pruned
//! before recursing, which also keeps the Bayes updates well defined.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::belief::{initial_belief, update_belief, Belief, Increment};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{CommonKey, InfoStructure, Strategy, TeamModel};
use crate::prescription::{prescription_grid, GridSpec, Prescription, Refinement};
use crate::scalar::Scalar;

pub const DEFAULT_P1B_HORIZON_CAP: usize = 4;

/// Resource limits for a solve.
#[derive(Clone, Debug)]
pub struct Budgets {
    pub candidates: u64,
    pub p1b_horizon_cap: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            candidates: crate::prescription::DEFAULT_CANDIDATE_BUDGET,
            p1b_horizon_cap: DEFAULT_P1B_HORIZON_CAP,
        }
    }
}

/// A point of the coordinator's state space: time plus belief (the belief
/// carries the shared-state realization).
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNode<N: Scalar> {
    pub t: usize,
    pub belief: Belief<N>,
}

/// Memo key: time, shared state, and the quantized belief weights
/// (exact in rational mode, 1e-9-quantized in float mode).
pub type NodeKey<N> = (usize, usize, bool, Vec<<N as Scalar>::Key>);

pub fn node_key<N: Scalar>(node: &BeliefNode<N>) -> NodeKey<N> {
    match &node.belief {
        Belief::Factored(b) => {
            let mut keys = b.pi1.memo_keys();
            keys.extend(b.pi2.memo_keys());
            (node.t, b.x0, false, keys)
        }
        Belief::Joint(b) => (node.t, b.x0, true, b.pi.memo_keys()),
    }
}

/// Provides the candidate prescriptions for a node. The default solver
/// uses the grid; the correspondence suites plug in custom sets (for
/// example, lifts of a current-state candidate set for the full-history
/// structure).
pub trait CandidateSource<N: Scalar> {
    fn candidates(
        &self,
        model: &TeamModel<N>,
        is: InfoStructure,
        t: usize,
        budgets: &Budgets,
    ) -> Result<Vec<Prescription<N>>>;
}

/// Deterministic tables plus the `1/K` simplex grid, lexicographic.
pub struct GridCandidates {
    pub spec: GridSpec,
}

impl<N: Scalar> CandidateSource<N> for GridCandidates {
    fn candidates(
        &self,
        model: &TeamModel<N>,
        is: InfoStructure,
        t: usize,
        budgets: &Budgets,
    ) -> Result<Vec<Prescription<N>>> {
        let domain = is.private_domain_len(model.local_space().len(), t);
        prescription_grid(
            domain,
            model.action_space().len(),
            &self.spec,
            budgets.candidates,
        )
    }
}

/// Fixed per-time candidate lists.
pub struct FixedCandidates<N: Scalar> {
    pub per_time: Vec<Vec<Prescription<N>>>,
}

impl<N: Scalar> CandidateSource<N> for FixedCandidates<N> {
    fn candidates(
        &self,
        _model: &TeamModel<N>,
        _is: InfoStructure,
        t: usize,
        _budgets: &Budgets,
    ) -> Result<Vec<Prescription<N>>> {
        Ok(self.per_time[t - 1].clone())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport<N: Scalar> {
    /// `V_1` per initial shared state with positive probability.
    pub initial_values: Vec<(usize, N)>,
    /// `J* = sum_x0 alpha0(x0) V_1(x0)`.
    pub j_star: N,
    /// Minimizing prescription at every memoized node.
    pub strategy: BTreeMap<NodeKey<N>, Prescription<N>>,
    pub nodes: u64,
    pub memo_hits: u64,
    pub prescriptions_evaluated: u64,
    pub grid_resolution: u32,
}

struct Solver<'a, N: Scalar, C: CandidateSource<N>> {
    model: &'a TeamModel<N>,
    is: InfoStructure,
    source: &'a C,
    budgets: Budgets,
    refinement: Refinement,
    /// Base grid resolution the refinement spacing divides.
    refine_base: u32,
    memo: RefCell<BTreeMap<NodeKey<N>, (N, Prescription<N>)>>,
    memo_hits: RefCell<u64>,
    evaluated: RefCell<u64>,
}

impl<'a, N: Scalar, C: CandidateSource<N>> Solver<'a, N, C> {
    fn value(&self, node: &BeliefNode<N>) -> Result<N> {
        if node.t > self.model.horizon() {
            return Ok(N::zero());
        }
        let key = node_key(node);
        if let Some((v, _)) = self.memo.borrow().get(&key) {
            *self.memo_hits.borrow_mut() += 1;
            return Ok(v.clone());
        }
        let (gamma, value) = self.optimize(node)?;
        self.memo.borrow_mut().insert(key, (value.clone(), gamma));
        Ok(value)
    }

    fn optimize(&self, node: &BeliefNode<N>) -> Result<(Prescription<N>, N)> {
        let candidates = self
            .source
            .candidates(self.model, self.is, node.t, &self.budgets)?;
        assert!(!candidates.is_empty(), "candidate set must be nonempty");
        let mut best: Option<(Prescription<N>, N)> = None;
        for gamma in candidates {
            let q = self.q_value(node, &gamma)?;
            *self.evaluated.borrow_mut() += 1;
            let better = match &best {
                None => true,
                Some((_, bq)) => q < *bq,
            };
            if better {
                best = Some((gamma, q));
            }
        }
        let (mut gamma, mut value) = best.expect("nonempty candidates");
        if let Refinement::CoordinateDescent { steps, shrink } = self.refinement {
            (gamma, value) = self.refine(node, gamma, value, steps, shrink)?;
        }
        Ok((gamma, value))
    }

    /// Coordinate descent over simplex rows: at shrink level `s`, try
    /// moving mass `1/(K * shrink^s)` between every ordered action pair
    /// of every row, keeping strict improvements. Deterministic scan
    /// order; ties keep the incumbent.
    fn refine(
        &self,
        node: &BeliefNode<N>,
        mut gamma: Prescription<N>,
        mut value: N,
        steps: u32,
        shrink: u32,
    ) -> Result<(Prescription<N>, N)> {
        let k = self.refine_base.max(1);
        let n_actions = self.model.action_space().len();
        for level in 1..=steps {
            let den = (k as i64) * (shrink as i64).pow(level);
            let delta = N::from_ratio(1, den);
            let mut improved = true;
            let mut rounds = 0;
            while improved && rounds < 64 {
                improved = false;
                rounds += 1;
                for p in 0..gamma.domain_len() {
                    for from in 0..n_actions {
                        for to in 0..n_actions {
                            if from == to {
                                continue;
                            }
                            let row = gamma.row(p);
                            if *row.get(from) < delta {
                                continue;
                            }
                            let mut w = row.weights().to_vec();
                            w[from] = w[from].clone() - delta.clone();
                            w[to] = w[to].clone() + delta.clone();
                            let candidate =
                                gamma.with_row(p, Dist::new(w).expect("simplex move"));
                            let q = self.q_value(node, &candidate)?;
                            *self.evaluated.borrow_mut() += 1;
                            if q < value {
                                gamma = candidate;
                                value = q;
                                improved = true;
                            }
                        }
                    }
                }
            }
        }
        Ok((gamma, value))
    }

    /// The bracketed expectation of the dynamic program: exact expected
    /// stage cost plus continuation at the updated belief, under
    /// independent per-agent randomization through `gamma`.
    fn q_value(&self, node: &BeliefNode<N>, gamma: &Prescription<N>) -> Result<N> {
        q_value_with(self.model, self.is, node, gamma, &mut |child| {
            self.value(child)
        })
    }
}

/// Exact Q-value at `node` for prescription `gamma`, with an explicit
/// continuation (`V_{t+1}`); zero-probability branches are skipped.
pub fn q_value_with<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    node: &BeliefNode<N>,
    gamma: &Prescription<N>,
    continuation: &mut dyn FnMut(&BeliefNode<N>) -> Result<N>,
) -> Result<N> {
    let t = node.t;
    let last = t == model.horizon();
    let nu = model.action_space().len();
    match &node.belief {
        Belief::Factored(belief) => {
            let x0 = belief.x0;
            let domain = model.private_domain(is, t);
            debug_assert_eq!(gamma.domain_len(), domain.len());
            let mut total = N::zero();
            // Expected stage cost.
            for (i1, p1) in domain.iter().enumerate() {
                let w1 = belief.pi1.get(i1);
                if w1.is_zero() {
                    continue;
                }
                let s1 = model.current_state_of(p1);
                for (i2, p2) in domain.iter().enumerate() {
                    let w2 = belief.pi2.get(i2);
                    if w2.is_zero() {
                        continue;
                    }
                    let s2 = model.current_state_of(p2);
                    for u1 in gamma.row(i1).support() {
                        for u2 in gamma.row(i2).support() {
                            let p = w1.clone()
                                * w2.clone()
                                * gamma.row(i1).get(u1).clone()
                                * gamma.row(i2).get(u2).clone();
                            total += p * model.cost(t, x0, s1, s2, u1, u2).clone();
                        }
                    }
                }
            }
            if last {
                return Ok(total);
            }
            match is {
                InfoStructure::P1a => {
                    // The increment reveals both states and actions.
                    for (i1, p1) in domain.iter().enumerate() {
                        let w1 = belief.pi1.get(i1);
                        if w1.is_zero() {
                            continue;
                        }
                        let s1 = model.current_state_of(p1);
                        for (i2, p2) in domain.iter().enumerate() {
                            let w2 = belief.pi2.get(i2);
                            if w2.is_zero() {
                                continue;
                            }
                            let s2 = model.current_state_of(p2);
                            for u1 in gamma.row(i1).support() {
                                for u2 in gamma.row(i2).support() {
                                    let p_act = w1.clone()
                                        * w2.clone()
                                        * gamma.row(i1).get(u1).clone()
                                        * gamma.row(i2).get(u2).clone();
                                    let f0 = model.shared_row(t, x0, u1, u2);
                                    for x0n in f0.support() {
                                        let child = BeliefNode {
                                            t: t + 1,
                                            belief: update_belief(
                                                model,
                                                is,
                                                t,
                                                &node.belief,
                                                gamma,
                                                Increment {
                                                    x0_next: x0n,
                                                    u1,
                                                    u2,
                                                    x1: s1,
                                                    x2: s2,
                                                },
                                            )?,
                                        };
                                        let v = continuation(&child)?;
                                        total += p_act.clone() * f0.get(x0n).clone() * v;
                                    }
                                }
                            }
                        }
                    }
                }
                InfoStructure::P1b | InfoStructure::P1c => {
                    // The increment is (x0', u); action marginals are
                    // independent across agents given the belief.
                    let marginal = |pi: &Dist<N>, rows: &Prescription<N>| -> Vec<N> {
                        let mut m = alloc::vec![N::zero(); nu];
                        for (i, w) in pi.iter().enumerate() {
                            if w.is_zero() {
                                continue;
                            }
                            for u in rows.row(i).support() {
                                m[u] += w.clone() * rows.row(i).get(u).clone();
                            }
                        }
                        m
                    };
                    let m1 = marginal(&belief.pi1, gamma);
                    let m2 = marginal(&belief.pi2, gamma);
                    for (u1, q1) in m1.iter().enumerate() {
                        if q1.is_zero() {
                            continue;
                        }
                        for (u2, q2) in m2.iter().enumerate() {
                            if q2.is_zero() {
                                continue;
                            }
                            let f0 = model.shared_row(t, x0, u1, u2);
                            for x0n in f0.support() {
                                let child = BeliefNode {
                                    t: t + 1,
                                    belief: update_belief(
                                        model,
                                        is,
                                        t,
                                        &node.belief,
                                        gamma,
                                        Increment {
                                            x0_next: x0n,
                                            u1,
                                            u2,
                                            x1: 0,
                                            x2: 0,
                                        },
                                    )?,
                                };
                                let v = continuation(&child)?;
                                total += q1.clone() * q2.clone() * f0.get(x0n).clone() * v;
                            }
                        }
                    }
                }
                InfoStructure::P1d => unreachable!("joint belief expected for aggregate actions"),
            }
            Ok(total)
        }
        Belief::Joint(belief) => {
            let x0 = belief.x0;
            let nx = belief.dim;
            let mut total = N::zero();
            // Stage cost plus, per (aggregate, x0') increment, the branch
            // probability; children come from the joint update.
            let mut branch: BTreeMap<(usize, usize), N> = BTreeMap::new();
            for x in 0..nx {
                for y in 0..nx {
                    let mass = belief.joint(x, y);
                    if mass.is_zero() {
                        continue;
                    }
                    for u1 in gamma.row(x).support() {
                        for u2 in gamma.row(y).support() {
                            let p_act = mass.clone()
                                * gamma.row(x).get(u1).clone()
                                * gamma.row(y).get(u2).clone();
                            total += p_act.clone() * model.cost(t, x0, x, y, u1, u2).clone();
                            if last {
                                continue;
                            }
                            let a = model.aggregate_of(u1, u2)?;
                            let f0 = model.shared_row(t, x0, u1, u2);
                            for x0n in f0.support() {
                                *branch.entry((a, x0n)).or_insert_with(N::zero) +=
                                    p_act.clone() * f0.get(x0n).clone();
                            }
                        }
                    }
                }
            }
            if last {
                return Ok(total);
            }
            for ((a, x0n), p) in branch {
                if p.is_zero() {
                    continue;
                }
                let child = BeliefNode {
                    t: t + 1,
                    belief: Belief::Joint(crate::belief::update_p1d(
                        model, t, belief, gamma, a, x0n,
                    )?),
                };
                let v = continuation(&child)?;
                total += p * v;
            }
            Ok(total)
        }
    }
}

/// Minimizes the Q-value over the candidate set, with lexicographic
/// tie-breaking (the candidate list is lexicographically sorted, and only
/// strict improvements replace the incumbent). The returned value is the
/// recomputed Q-value of the winner, not an estimate.
pub fn optimize_prescription<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    node: &BeliefNode<N>,
    continuation: &mut dyn FnMut(&BeliefNode<N>) -> Result<N>,
    spec: &GridSpec,
    budgets: &Budgets,
) -> Result<(Prescription<N>, N)> {
    let domain = is.private_domain_len(model.local_space().len(), node.t);
    let candidates = prescription_grid(domain, model.action_space().len(), spec, budgets.candidates)?;
    let mut best: Option<(Prescription<N>, N)> = None;
    for gamma in candidates {
        let q = q_value_with(model, is, node, &gamma, continuation)?;
        let better = match &best {
            None => true,
            Some((_, bq)) => q < *bq,
        };
        if better {
            best = Some((gamma, q));
        }
    }
    Ok(best.expect("nonempty candidate set"))
}

/// Runs the full dynamic program with the grid candidate source.
pub fn solve<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    spec: &GridSpec,
    budgets: &Budgets,
) -> Result<SolveReport<N>> {
    let source = GridCandidates { spec: spec.clone() };
    let mut report = solve_with_candidates(
        model,
        is,
        &source,
        budgets,
        spec.refinement.clone(),
        spec.resolution,
    )?;
    report.grid_resolution = spec.resolution;
    Ok(report)
}

/// Runs the dynamic program with an explicit candidate source. Used by
/// the structure-correspondence suites, where the full-history candidate
/// set must be exactly the lifts of the current-state one.
pub fn solve_with_candidates<N: Scalar, C: CandidateSource<N>>(
    model: &TeamModel<N>,
    is: InfoStructure,
    source: &C,
    budgets: &Budgets,
    refinement: Refinement,
    refine_base: u32,
) -> Result<SolveReport<N>> {
    if is == InfoStructure::P1b && model.horizon() > budgets.p1b_horizon_cap {
        return Err(Error::HorizonCapExceeded {
            cap: budgets.p1b_horizon_cap,
        });
    }
    if is.requires_aggregate() && !model.has_aggregate() {
        return Err(Error::MissingAggregate);
    }
    let solver = Solver {
        model,
        is,
        source,
        budgets: budgets.clone(),
        refinement,
        refine_base,
        memo: RefCell::new(BTreeMap::new()),
        memo_hits: RefCell::new(0),
        evaluated: RefCell::new(0),
    };
    let mut initial_values = Vec::new();
    let mut j_star = N::zero();
    for x0 in model.alpha0().support() {
        let node = BeliefNode {
            t: 1,
            belief: initial_belief(model, is, x0),
        };
        let v = solver.value(&node)?;
        j_star += model.alpha0().get(x0).clone() * v.clone();
        initial_values.push((x0, v));
    }
    let memo = solver.memo.into_inner();
    let nodes = memo.len() as u64;
    let strategy = memo.into_iter().map(|(k, (_, g))| (k, g)).collect();
    Ok(SolveReport {
        initial_values,
        j_star,
        strategy,
        nodes,
        memo_hits: solver.memo_hits.into_inner(),
        prescriptions_evaluated: solver.evaluated.into_inner(),
        grid_resolution: 0,
    })
}

/// One node of the reachable coordinator tree under a solved strategy.
#[derive(Clone, Debug)]
pub struct ReachableNode<N: Scalar> {
    pub t: usize,
    pub common: CommonKey,
    pub node: BeliefNode<N>,
    pub prescription: Prescription<N>,
    /// Probability of reaching this common realization.
    pub probability: N,
}

/// Walks the reachable common-information tree under the report's
/// coordinator strategy, replaying the belief updates.
pub fn reachable_tree<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    report: &SolveReport<N>,
) -> Result<Vec<ReachableNode<N>>> {
    walk_reachable(model, is, |_, node| {
        report
            .strategy
            .get(&node_key(node))
            .cloned()
            .ok_or(Error::UnreachableInfoRealization { t: node.t })
    })
}

/// Replays a symmetric agent strategy from the coordinator's seat: at
/// each reachable common realization the prescription is `g_t(., c)`.
pub fn replay_symmetric_strategy<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    strategy: &Strategy<N>,
) -> Result<Vec<ReachableNode<N>>> {
    walk_reachable(model, is, |common, node| {
        let rows = model
            .private_domain(is, node.t)
            .iter()
            .map(|p| strategy.action_dist(node.t, p, common).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(Prescription::new(rows))
    })
}

fn walk_reachable<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    mut prescription_at: impl FnMut(&CommonKey, &BeliefNode<N>) -> Result<Prescription<N>>,
) -> Result<Vec<ReachableNode<N>>> {
    let mut out = Vec::new();
    let mut frontier: Vec<(CommonKey, BeliefNode<N>, N)> = Vec::new();
    for x0 in model.alpha0().support() {
        frontier.push((
            model.initial_common(x0),
            BeliefNode {
                t: 1,
                belief: initial_belief(model, is, x0),
            },
            model.alpha0().get(x0).clone(),
        ));
    }
    while let Some((common, node, reach)) = frontier.pop() {
        let gamma = prescription_at(&common, &node)?;
        if node.t < model.horizon() {
            for (inc, p) in increment_distribution(model, is, &node, &gamma)? {
                let child = BeliefNode {
                    t: node.t + 1,
                    belief: update_belief(model, is, node.t, &node.belief, &gamma, inc)?,
                };
                let c_next = model.extend_common(
                    is,
                    &common,
                    crate::model::Observation {
                        x0_next: inc.x0_next,
                        u1: inc.u1,
                        u2: inc.u2,
                        x1: inc.x1,
                        x2: inc.x2,
                    },
                )?;
                frontier.push((c_next, child, reach.clone() * p));
            }
        }
        out.push(ReachableNode {
            t: node.t,
            common,
            node,
            prescription: gamma,
            probability: reach,
        });
    }
    out.sort_by(|a, b| (a.t, &a.common).cmp(&(b.t, &b.common)));
    Ok(out)
}

/// Positive-probability common-information increments out of a node,
/// with their probabilities.
pub fn increment_distribution<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    node: &BeliefNode<N>,
    gamma: &Prescription<N>,
) -> Result<Vec<(Increment, N)>> {
    let t = node.t;
    let mut out: BTreeMap<(usize, usize, usize, usize, usize), N> = BTreeMap::new();
    match &node.belief {
        Belief::Factored(belief) => {
            let domain = model.private_domain(is, t);
            for (i1, p1) in domain.iter().enumerate() {
                let w1 = belief.pi1.get(i1);
                if w1.is_zero() {
                    continue;
                }
                let s1 = model.current_state_of(p1);
                for (i2, p2) in domain.iter().enumerate() {
                    let w2 = belief.pi2.get(i2);
                    if w2.is_zero() {
                        continue;
                    }
                    let s2 = model.current_state_of(p2);
                    for u1 in gamma.row(i1).support() {
                        for u2 in gamma.row(i2).support() {
                            let p_act = w1.clone()
                                * w2.clone()
                                * gamma.row(i1).get(u1).clone()
                                * gamma.row(i2).get(u2).clone();
                            let f0 = model.shared_row(t, belief.x0, u1, u2);
                            for x0n in f0.support() {
                                let p = p_act.clone() * f0.get(x0n).clone();
                                // Delayed sharing distinguishes the revealed
                                // states; the other structures do not.
                                let key = match is {
                                    InfoStructure::P1a => (x0n, u1, u2, s1, s2),
                                    _ => (x0n, u1, u2, 0, 0),
                                };
                                *out.entry(key).or_insert_with(N::zero) += p;
                            }
                        }
                    }
                }
            }
        }
        Belief::Joint(belief) => {
            let nx = belief.dim;
            for x in 0..nx {
                for y in 0..nx {
                    let mass = belief.joint(x, y);
                    if mass.is_zero() {
                        continue;
                    }
                    for u1 in gamma.row(x).support() {
                        for u2 in gamma.row(y).support() {
                            let p_act = mass.clone()
                                * gamma.row(x).get(u1).clone()
                                * gamma.row(y).get(u2).clone();
                            let f0 = model.shared_row(t, belief.x0, u1, u2);
                            for x0n in f0.support() {
                                let p = p_act.clone() * f0.get(x0n).clone();
                                // Only the aggregate is observed: group
                                // action pairs through a representative.
                                let a = model.aggregate_of(u1, u2)?;
                                let rep = representative_pair(model, a)?;
                                let key = (x0n, rep.0, rep.1, 0, 0);
                                *out.entry(key).or_insert_with(N::zero) += p;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|((x0_next, u1, u2, x1, x2), p)| {
            (
                Increment {
                    x0_next,
                    u1,
                    u2,
                    x1,
                    x2,
                },
                p,
            )
        })
        .collect())
}

/// First action pair mapping to aggregate `a`, for rebuilding increments
/// whose common information only records the aggregate.
fn representative_pair<N: Scalar>(model: &TeamModel<N>, a: usize) -> Result<(usize, usize)> {
    let nu = model.action_space().len();
    for u1 in 0..nu {
        for u2 in 0..nu {
            if model.aggregate_of(u1, u2)? == a {
                return Ok((u1, u2));
            }
        }
    }
    Err(Error::Malformed {
        reason: alloc::format!("aggregate label {a} has no preimage"),
    })
}

/// Turns a coordinator strategy into the symmetric agent strategy
/// `g_t(p, c) = Gamma_t(p)`, where `Gamma_t` is the report's prescription
/// at the belief node reached by replaying `c`. Evaluating the extracted
/// pair exactly reproduces the report's value.
pub fn extract_symmetric_strategy<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    report: &SolveReport<N>,
) -> Result<Strategy<N>> {
    let tree = reachable_tree(model, is, report)?;
    let mut tables: Vec<BTreeMap<_, _>> = alloc::vec![BTreeMap::new(); model.horizon()];
    for entry in tree {
        let domain = model.private_domain(is, entry.t);
        for (i, p) in domain.iter().enumerate() {
            tables[entry.t - 1].insert(
                (p.clone(), entry.common.clone()),
                entry.prescription.row(i).clone(),
            );
        }
    }
    Ok(Strategy::new(tables))
}

/// Witness that a cost table fails the zero-cost certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum CertificateFailure<N: Scalar> {
    NegativeEntry {
        t: usize,
        x0: usize,
        x1: usize,
        x2: usize,
        u1: usize,
        u2: usize,
        value: N,
    },
    NonzeroOnMap {
        t: usize,
        x0: usize,
        x1: usize,
        x2: usize,
        value: N,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate<N: Scalar> {
    pub certified: bool,
    pub witness: Option<CertificateFailure<N>>,
}

/// Certifies the specialized-cost condition for a per-state action map
/// `m`: costs are non-negative everywhere and vanish when both agents
/// play `m` on their own states. When certified, every value function is
/// identically zero and "always `m`" is an optimal coordinator strategy
/// for both the full-history and reduced-history structures, with no grid
/// search.
pub fn specialized_cost_certificate<N: Scalar>(
    model: &TeamModel<N>,
    m: &[usize],
) -> Certificate<N> {
    let (n0, nx, nu) = (
        model.shared_space().len(),
        model.local_space().len(),
        model.action_space().len(),
    );
    debug_assert_eq!(m.len(), nx);
    for t in 1..=model.horizon() {
        for x0 in 0..n0 {
            for x1 in 0..nx {
                for x2 in 0..nx {
                    for u1 in 0..nu {
                        for u2 in 0..nu {
                            let v = model.cost(t, x0, x1, x2, u1, u2);
                            if *v < N::zero() {
                                return Certificate {
                                    certified: false,
                                    witness: Some(CertificateFailure::NegativeEntry {
                                        t,
                                        x0,
                                        x1,
                                        x2,
                                        u1,
                                        u2,
                                        value: v.clone(),
                                    }),
                                };
                            }
                        }
                    }
                    let v = model.cost(t, x0, x1, x2, m[x1], m[x2]);
                    if !v.is_zero() {
                        return Certificate {
                            certified: false,
                            witness: Some(CertificateFailure::NonzeroOnMap {
                                t,
                                x0,
                                x1,
                                x2,
                                value: v.clone(),
                            }),
                        };
                    }
                }
            }
        }
    }
    Certificate {
        certified: true,
        witness: None,
    }
}

/// Lifts the current-state candidates to history candidates; the
/// correspondence that makes the full-history and reduced-history solves
/// agree exactly on i.i.d.-uncontrolled models.
pub struct LiftedCandidates {
    pub spec: GridSpec,
}

impl<N: Scalar> CandidateSource<N> for LiftedCandidates {
    fn candidates(
        &self,
        model: &TeamModel<N>,
        _is: InfoStructure,
        t: usize,
        budgets: &Budgets,
    ) -> Result<Vec<Prescription<N>>> {
        let base = prescription_grid(
            model.local_space().len(),
            model.action_space().len(),
            &self.spec,
            budgets.candidates,
        )?;
        Ok(base
            .iter()
            .map(|g| crate::prescription::lift_c_to_b(g, t))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParts, Space};
    use crate::scalar::Rat;
    use crate::traj::evaluate_exact;
    use alloc::vec;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    /// T=1, singleton states, binary actions, cost 1 when actions match.
    fn anticoord_model() -> TeamModel<Rat> {
        let mut costs = vec![r(0, 1); 4];
        costs[0] = r(1, 1);
        costs[3] = r(1, 1);
        TeamModel::new(ModelParts {
            horizon: 1,
            shared_space: Space::singleton(),
            local_space: Space::singleton(),
            action_space: Space::new(vec!["0".into(), "1".into()]).unwrap(),
            aggregate_space: None,
            alpha0: Dist::point(1, 0),
            alpha: Dist::point(1, 0),
            shared_kernels: vec![],
            local_kernels: vec![],
            costs: vec![costs],
            aggregate: None,
            declared_iid_uncontrolled_local: None,
            declared_local_ignores_own_state: None,
        })
        .unwrap()
    }

    fn anticoord_node() -> BeliefNode<Rat> {
        BeliefNode {
            t: 1,
            belief: initial_belief(&anticoord_model(), InfoStructure::P1c, 0),
        }
    }

    #[test]
    fn q_value_matches_hand_computation() {
        let m = anticoord_model();
        let node = anticoord_node();
        let mut zero = |_: &BeliefNode<Rat>| Ok(Rat::zero());
        // Point mass on action 0: both agents match, cost 1.
        let q = q_value_with(
            &m,
            InfoStructure::P1c,
            &node,
            &Prescription::deterministic(&[0], 2),
            &mut zero,
        )
        .unwrap();
        assert_eq!(q, r(1, 1));
        // Fifty-fifty row: they match half the time.
        let q = q_value_with(
            &m,
            InfoStructure::P1c,
            &node,
            &Prescription::uniform(1, 2),
            &mut zero,
        )
        .unwrap();
        assert_eq!(q, r(1, 2));
    }

    #[test]
    fn zero_cost_gives_zero_q_value() {
        let mut m = anticoord_model();
        // Rebuild with zero cost.
        m = TeamModel::new(ModelParts {
            horizon: 1,
            shared_space: Space::singleton(),
            local_space: Space::singleton(),
            action_space: m.action_space().clone(),
            aggregate_space: None,
            alpha0: Dist::point(1, 0),
            alpha: Dist::point(1, 0),
            shared_kernels: vec![],
            local_kernels: vec![],
            costs: vec![vec![r(0, 1); 4]],
            aggregate: None,
            declared_iid_uncontrolled_local: None,
            declared_local_ignores_own_state: None,
        })
        .unwrap();
        let node = BeliefNode {
            t: 1,
            belief: initial_belief(&m, InfoStructure::P1c, 0),
        };
        let mut zero = |_: &BeliefNode<Rat>| Ok(Rat::zero());
        for gamma in prescription_grid::<Rat>(1, 2, &GridSpec::grid(4), 1000).unwrap() {
            let q = q_value_with(&m, InfoStructure::P1c, &node, &gamma, &mut zero).unwrap();
            assert_eq!(q, Rat::zero());
        }
    }

    #[test]
    fn optimize_finds_the_interior_minimum_on_the_grid() {
        let m = anticoord_model();
        let node = anticoord_node();
        let mut zero = |_: &BeliefNode<Rat>| Ok(Rat::zero());
        let (gamma, value) = optimize_prescription(
            &m,
            InfoStructure::P1c,
            &node,
            &mut zero,
            &GridSpec::grid(2),
            &Budgets::default(),
        )
        .unwrap();
        assert_eq!(value, r(1, 2));
        assert_eq!(gamma.row(0).weights(), &[r(1, 2), r(1, 2)]);
        // Deterministic-only search cannot do better than 1.
        let (_, value) = optimize_prescription(
            &m,
            InfoStructure::P1c,
            &node,
            &mut zero,
            &GridSpec::deterministic_only(),
            &Budgets::default(),
        )
        .unwrap();
        assert_eq!(value, r(1, 1));
    }

    #[test]
    fn solve_reproduces_the_randomization_example() {
        let m = anticoord_model();
        let report = solve(&m, InfoStructure::P1c, &GridSpec::grid(2), &Budgets::default()).unwrap();
        assert_eq!(report.j_star, r(1, 2));
        let report_det = solve(
            &m,
            InfoStructure::P1c,
            &GridSpec::deterministic_only(),
            &Budgets::default(),
        )
        .unwrap();
        assert_eq!(report_det.j_star, r(1, 1));
    }

    #[test]
    fn extracted_strategy_reproduces_j_star() {
        let m = anticoord_model();
        let report = solve(&m, InfoStructure::P1c, &GridSpec::grid(2), &Budgets::default()).unwrap();
        let g = extract_symmetric_strategy(&m, InfoStructure::P1c, &report).unwrap();
        // Both agents randomize fifty-fifty at the root.
        let root_c = m.initial_common(0);
        let d = g.action_dist(1, &vec![0], &root_c).unwrap();
        assert_eq!(d.weights(), &[r(1, 2), r(1, 2)]);
        let j = evaluate_exact(
            &m,
            &crate::model::StrategyPair::symmetric(g),
            InfoStructure::P1c,
            10_000,
        )
        .unwrap();
        assert_eq!(j, report.j_star);
    }

    #[test]
    fn refinement_reaches_off_grid_optima() {
        // Cost pushes the optimum to p = 1/2 but the base grid is K=1
        // (deterministic); two halving steps find 1/2 exactly.
        let m = anticoord_model();
        let spec = GridSpec {
            resolution: 1,
            include_deterministic: true,
            refinement: Refinement::CoordinateDescent { steps: 1, shrink: 2 },
        };
        let report = solve(&m, InfoStructure::P1c, &spec, &Budgets::default()).unwrap();
        assert_eq!(report.j_star, r(1, 2));
    }

    #[test]
    fn certificate_examples() {
        // (x1 - u1)^2 [(x2 - u2)^2 + 1] + (x2 - u2)^2 with m = identity.
        let poly = |x1: i64, x2: i64, u1: i64, u2: i64| {
            let a = (x1 - u1) * (x1 - u1);
            let b = (x2 - u2) * (x2 - u2);
            Rat::from_int(a * (b + 1) + b)
        };
        let mut costs = vec![];
        for x1 in 0..2 {
            for x2 in 0..2 {
                for u1 in 0..2 {
                    for u2 in 0..2 {
                        costs.push(poly(x1, x2, u1, u2));
                    }
                }
            }
        }
        let alpha = Dist::new(vec![r(1, 2), r(1, 2)]).unwrap();
        let m = TeamModel::new(ModelParts {
            horizon: 1,
            shared_space: Space::singleton(),
            local_space: Space::new(vec!["0".into(), "1".into()]).unwrap(),
            action_space: Space::new(vec!["0".into(), "1".into()]).unwrap(),
            aggregate_space: None,
            alpha0: Dist::point(1, 0),
            alpha,
            shared_kernels: vec![],
            local_kernels: vec![],
            costs: vec![costs],
            aggregate: None,
            declared_iid_uncontrolled_local: None,
            declared_local_ignores_own_state: None,
        })
        .unwrap();
        let cert = specialized_cost_certificate(&m, &[0, 1]);
        assert!(cert.certified);
        // The anti-coordination cost has no zero-cost diagonal map.
        let cert = specialized_cost_certificate(&anticoord_model(), &[0]);
        assert!(!cert.certified);
        assert!(matches!(
            cert.witness,
            Some(CertificateFailure::NonzeroOnMap { .. })
        ));
    }

    #[test]
    fn p1b_horizon_cap_is_enforced() {
        let m = crate::model::tests::iid_model();
        let tight = Budgets {
            candidates: 1_000_000,
            p1b_horizon_cap: 1,
        };
        let err = solve(&m, InfoStructure::P1b, &GridSpec::grid(2), &tight).unwrap_err();
        assert_eq!(err, Error::HorizonCapExceeded { cap: 1 });
    }
}
