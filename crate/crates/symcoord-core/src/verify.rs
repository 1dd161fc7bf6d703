//! Self-verification: replay the belief filters along every reachable
//! common realization and compare with conditionals computed by the
//! brute-force trajectory oracle. The oracle path shares no code with
//! the filters it checks.

use alloc::format;
use alloc::vec::Vec;

use crate::belief::{initial_belief, update_belief, Belief};
use crate::error::{Error, Result};
use crate::model::{CommonKey, InfoStructure, Observation, StrategyPair, TeamModel};
use crate::prescription::Prescription;
use crate::scalar::Scalar;
use crate::solver::{increment_distribution, BeliefNode};
use crate::traj::{conditional_private_joint, joint_trajectory_distribution};

/// Checks every belief along the reachable tree of the open-loop
/// coordinator strategy `gammas` against the oracle conditional
/// `P(p1, p2 | c_t)`: marginals for the factored structures (plus the
/// factorization itself), the joint table for aggregate actions.
/// Comparisons are exact in rational mode.
pub fn check_beliefs_against_oracle<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    gammas: &[Prescription<N>],
    budget: u64,
) -> Result<()> {
    let strat = crate::model::Strategy::from_fn(model, is, |t, p, _| {
        let idx = model.private_index(is, t, p);
        gammas[t - 1].row(idx).clone()
    })?;
    let pair = StrategyPair::symmetric(strat);
    let traj = joint_trajectory_distribution(model, &pair, is, budget)?;

    let mismatch = |t: usize, reason: alloc::string::String| Error::OracleMismatch { t, reason };

    let mut frontier: Vec<(CommonKey, BeliefNode<N>)> = model
        .alpha0()
        .support()
        .map(|x0| {
            (
                model.initial_common(x0),
                BeliefNode {
                    t: 1,
                    belief: initial_belief(model, is, x0),
                },
            )
        })
        .collect();

    while let Some((common, node)) = frontier.pop() {
        let t = node.t;
        let conditionals = conditional_private_joint(&traj, model, is, t)?;
        let (_, oracle) = conditionals
            .get(&common)
            .ok_or_else(|| mismatch(t, format!("common {common:?} is not oracle-reachable")))?;
        let domain = model.private_domain(is, t);
        match &node.belief {
            Belief::Factored(b) => {
                for (i1, p1) in domain.iter().enumerate() {
                    let mut m1 = N::zero();
                    let mut m2 = N::zero();
                    for p2 in &domain {
                        if let Some(v) = oracle.get(&(p1.clone(), p2.clone())) {
                            m1 += v.clone();
                        }
                        if let Some(v) = oracle.get(&(p2.clone(), p1.clone())) {
                            m2 += v.clone();
                        }
                    }
                    if !b.pi1.get(i1).close_to(&m1) {
                        return Err(mismatch(
                            t,
                            format!(
                                "agent-1 marginal at c={common:?}, p={p1:?}: filter {} vs oracle {m1}",
                                b.pi1.get(i1)
                            ),
                        ));
                    }
                    if !b.pi2.get(i1).close_to(&m2) {
                        return Err(mismatch(
                            t,
                            format!(
                                "agent-2 marginal at c={common:?}, p={p1:?}: filter {} vs oracle {m2}",
                                b.pi2.get(i1)
                            ),
                        ));
                    }
                }
                // The factored structures must actually factorize.
                for (i1, p1) in domain.iter().enumerate() {
                    for (i2, p2) in domain.iter().enumerate() {
                        let joint = oracle
                            .get(&(p1.clone(), p2.clone()))
                            .cloned()
                            .unwrap_or_else(N::zero);
                        let product = b.pi1.get(i1).clone() * b.pi2.get(i2).clone();
                        if !joint.close_to(&product) {
                            return Err(mismatch(
                                t,
                                format!(
                                    "factorization at c={common:?}, ({p1:?}, {p2:?}): \
                                     joint {joint} vs product {product}"
                                ),
                            ));
                        }
                    }
                }
            }
            Belief::Joint(b) => {
                for (i1, p1) in domain.iter().enumerate() {
                    for (i2, p2) in domain.iter().enumerate() {
                        let joint = oracle
                            .get(&(p1.clone(), p2.clone()))
                            .cloned()
                            .unwrap_or_else(N::zero);
                        if !b.joint(i1, i2).close_to(&joint) {
                            return Err(mismatch(
                                t,
                                format!(
                                    "joint belief at c={common:?}, ({p1:?}, {p2:?}): \
                                     filter {} vs oracle {joint}",
                                    b.joint(i1, i2)
                                ),
                            ));
                        }
                    }
                }
            }
        }

        if t < model.horizon() {
            let gamma = &gammas[t - 1];
            for (inc, _) in increment_distribution(model, is, &node, gamma)? {
                let child = BeliefNode {
                    t: t + 1,
                    belief: update_belief(model, is, t, &node.belief, gamma, inc)?,
                };
                let c_next = model.extend_common(
                    is,
                    &common,
                    Observation {
                        x0_next: inc.x0_next,
                        u1: inc.u1,
                        u2: inc.u2,
                        x1: inc.x1,
                        x2: inc.x2,
                    },
                )?;
                frontier.push((c_next, child));
            }
        }
    }
    Ok(())
}
