//! Coordinator beliefs and their exact update maps.
//!
//! For the delayed-sharing, full-history, and reduced-history structures
//! the coordinator's belief factorizes into a point mass on the shared
//! state and one marginal per agent ([`FactoredBelief`]). Under aggregate
//! actions the private states are not conditionally independent given the
//! common information, so the belief stays joint ([`JointBelief`]).
//!
//! Every update is a fixed transformation of (belief, prescription,
//! common-information increment); it never depends on how the
//! prescription was chosen. The delayed-sharing update takes no
//! prescription at all: the derivation cancels it. That asymmetry with
//! the other structures is intentional.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{CommonKey, InfoStructure, PrivateKey, StrategyPair, TeamModel};
use crate::prescription::Prescription;
use crate::scalar::Scalar;
use crate::traj::{conditional_private_joint, joint_trajectory_distribution};

/// Point mass on the shared state plus independent per-agent marginals
/// over the private-information domain (which grows with `t` under the
/// full-history structure).
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredBelief<N: Scalar> {
    pub x0: usize,
    pub pi1: Dist<N>,
    pub pi2: Dist<N>,
}

/// Point mass on the shared state plus a joint law over the two agents'
/// private states, row-major `(p1, p2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointBelief<N: Scalar> {
    pub x0: usize,
    pub dim: usize,
    pub pi: Dist<N>,
}

impl<N: Scalar> JointBelief<N> {
    pub fn joint(&self, p1: usize, p2: usize) -> &N {
        self.pi.get(p1 * self.dim + p2)
    }

    pub fn marginal(&self, agent: usize) -> Dist<N> {
        let mut w = alloc::vec![N::zero(); self.dim];
        for p1 in 0..self.dim {
            for p2 in 0..self.dim {
                let i = if agent == 1 { p1 } else { p2 };
                w[i] += self.joint(p1, p2).clone();
            }
        }
        Dist::from_unnormalized(w).expect("joint belief has mass one")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Belief<N: Scalar> {
    Factored(FactoredBelief<N>),
    Joint(JointBelief<N>),
}

impl<N: Scalar> Belief<N> {
    pub fn x0(&self) -> usize {
        match self {
            Belief::Factored(b) => b.x0,
            Belief::Joint(b) => b.x0,
        }
    }

    pub fn as_factored(&self) -> &FactoredBelief<N> {
        match self {
            Belief::Factored(b) => b,
            Belief::Joint(_) => panic!("expected a factored belief"),
        }
    }

    pub fn as_joint(&self) -> &JointBelief<N> {
        match self {
            Belief::Joint(b) => b,
            Belief::Factored(_) => panic!("expected a joint belief"),
        }
    }
}

/// Belief at `t = 1` for a given realization of the initial shared state.
pub fn initial_belief<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    x0: usize,
) -> Belief<N> {
    let alpha = model.alpha().clone();
    if is.uses_joint_belief() {
        let dim = alpha.len();
        let mut w = Vec::with_capacity(dim * dim);
        for p1 in 0..dim {
            for p2 in 0..dim {
                w.push(alpha.get(p1).clone() * alpha.get(p2).clone());
            }
        }
        Belief::Joint(JointBelief {
            x0,
            dim,
            pi: Dist::new(w).expect("product of distributions"),
        })
    } else {
        Belief::Factored(FactoredBelief {
            x0,
            pi1: alpha.clone(),
            pi2: alpha,
        })
    }
}

/// Delayed-sharing update: both agents' time-`t` states are observed, so
/// each marginal is just the corresponding kernel row. Prescription-free.
pub fn update_p1a<N: Scalar>(
    model: &TeamModel<N>,
    t: usize,
    x0: usize,
    x0_next: usize,
    u1: usize,
    u2: usize,
    x1: usize,
    x2: usize,
) -> FactoredBelief<N> {
    FactoredBelief {
        x0: x0_next,
        pi1: model.local_row(t, x1, x0, u1, u2).clone(),
        pi2: model.local_row(t, x2, x0, u1, u2).clone(),
    }
}

/// Full-history Bayes update over histories:
/// `pi'(h, x') ∝ F(x' | last(h)) * gamma(h; u_i) * pi(h)`.
pub fn update_p1b<N: Scalar>(
    model: &TeamModel<N>,
    t: usize,
    belief: &FactoredBelief<N>,
    gamma: &Prescription<N>,
    x0_next: usize,
    u1: usize,
    u2: usize,
) -> Result<FactoredBelief<N>> {
    let histories = model.private_domain(InfoStructure::P1b, t);
    debug_assert_eq!(gamma.domain_len(), histories.len());
    debug_assert_eq!(belief.pi1.len(), histories.len());
    let nx = model.local_space().len();
    let one_agent = |pi: &Dist<N>, u: usize| -> Result<Dist<N>> {
        let mut w = alloc::vec![N::zero(); histories.len() * nx];
        for (h_idx, h) in histories.iter().enumerate() {
            let stake = pi.get(h_idx).clone() * gamma.row(h_idx).get(u).clone();
            if stake.is_zero() {
                continue;
            }
            let x = model.current_state_of(h);
            let row = model.local_row(t, x, belief.x0, u1, u2);
            for xn in row.support() {
                w[h_idx * nx + xn] += stake.clone() * row.get(xn).clone();
            }
        }
        Dist::from_unnormalized(w)
    };
    Ok(FactoredBelief {
        x0: x0_next,
        pi1: one_agent(&belief.pi1, u1)?,
        pi2: one_agent(&belief.pi2, u2)?,
    })
}

/// Reduced-history Bayes update:
/// `pi'(x') ∝ sum_x F(x' | x) * gamma(x; u_i) * pi(x)`.
pub fn update_p1c<N: Scalar>(
    model: &TeamModel<N>,
    t: usize,
    belief: &FactoredBelief<N>,
    gamma: &Prescription<N>,
    x0_next: usize,
    u1: usize,
    u2: usize,
) -> Result<FactoredBelief<N>> {
    let nx = model.local_space().len();
    debug_assert_eq!(gamma.domain_len(), nx);
    let one_agent = |pi: &Dist<N>, u: usize| -> Result<Dist<N>> {
        let mut w = alloc::vec![N::zero(); nx];
        for x in 0..nx {
            let stake = pi.get(x).clone() * gamma.row(x).get(u).clone();
            if stake.is_zero() {
                continue;
            }
            let row = model.local_row(t, x, belief.x0, u1, u2);
            for xn in row.support() {
                w[xn] += stake.clone() * row.get(xn).clone();
            }
        }
        Dist::from_unnormalized(w)
    };
    Ok(FactoredBelief {
        x0: x0_next,
        pi1: one_agent(&belief.pi1, u1)?,
        pi2: one_agent(&belief.pi2, u2)?,
    })
}

/// Aggregate-action joint update. Sums over every action pair consistent
/// with the observed aggregate; the shared-state likelihood stays inside
/// the sum so the update is exact even when kernels depend on the action
/// pair beyond its aggregate.
pub fn update_p1d<N: Scalar>(
    model: &TeamModel<N>,
    t: usize,
    belief: &JointBelief<N>,
    gamma: &Prescription<N>,
    a: usize,
    x0_next: usize,
) -> Result<JointBelief<N>> {
    if !model.has_aggregate() {
        return Err(Error::MissingAggregate);
    }
    let nx = model.local_space().len();
    let nu = model.action_space().len();
    debug_assert_eq!(belief.dim, nx);
    let mut w = alloc::vec![N::zero(); nx * nx];
    for x in 0..nx {
        for y in 0..nx {
            let mass = belief.joint(x, y).clone();
            if mass.is_zero() {
                continue;
            }
            for u1 in 0..nu {
                for u2 in 0..nu {
                    if model.aggregate_of(u1, u2)? != a {
                        continue;
                    }
                    let stake = mass.clone()
                        * gamma.row(x).get(u1).clone()
                        * gamma.row(y).get(u2).clone()
                        * model.shared_row(t, belief.x0, u1, u2).get(x0_next).clone();
                    if stake.is_zero() {
                        continue;
                    }
                    let row1 = model.local_row(t, x, belief.x0, u1, u2);
                    let row2 = model.local_row(t, y, belief.x0, u1, u2);
                    for xn in row1.support() {
                        for yn in row2.support() {
                            w[xn * nx + yn] +=
                                stake.clone() * row1.get(xn).clone() * row2.get(yn).clone();
                        }
                    }
                }
            }
        }
    }
    Ok(JointBelief {
        x0: x0_next,
        dim: nx,
        pi: Dist::from_unnormalized(w)?,
    })
}

/// Specialized-dynamics belief: when the local kernel ignores the agent's
/// own state, the next marginal is the kernel row itself, the same for
/// both agents and for the delayed-sharing and reduced-history updates.
pub fn update_specialized_dynamics<N: Scalar>(
    model: &TeamModel<N>,
    t: usize,
    x0: usize,
    u1: usize,
    u2: usize,
) -> Result<Dist<N>> {
    if !model.local_ignores_own_state() {
        return Err(Error::FlagViolation {
            required: "local_ignores_own_state",
        });
    }
    Ok(model.local_row(t, 0, x0, u1, u2).clone())
}

/// The common-information increment actually observed between `t` and
/// `t + 1`, as consumed by [`update_belief`].
#[derive(Clone, Copy, Debug)]
pub struct Increment {
    pub x0_next: usize,
    pub u1: usize,
    pub u2: usize,
    /// Time-`t` local states; only the delayed-sharing update reads them.
    pub x1: usize,
    pub x2: usize,
}

/// Structure-dispatched belief update.
pub fn update_belief<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    t: usize,
    belief: &Belief<N>,
    gamma: &Prescription<N>,
    inc: Increment,
) -> Result<Belief<N>> {
    match is {
        InfoStructure::P1a => Ok(Belief::Factored(update_p1a(
            model,
            t,
            belief.x0(),
            inc.x0_next,
            inc.u1,
            inc.u2,
            inc.x1,
            inc.x2,
        ))),
        InfoStructure::P1b => Ok(Belief::Factored(update_p1b(
            model,
            t,
            belief.as_factored(),
            gamma,
            inc.x0_next,
            inc.u1,
            inc.u2,
        )?)),
        InfoStructure::P1c => Ok(Belief::Factored(update_p1c(
            model,
            t,
            belief.as_factored(),
            gamma,
            inc.x0_next,
            inc.u1,
            inc.u2,
        )?)),
        InfoStructure::P1d => {
            let a = model.aggregate_of(inc.u1, inc.u2)?;
            Ok(Belief::Joint(update_p1d(
                model,
                t,
                belief.as_joint(),
                gamma,
                a,
                inc.x0_next,
            )?))
        }
    }
}

/// Witness of the largest factorization violation found.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceWitness<N: Scalar> {
    pub common: CommonKey,
    pub p1: PrivateKey,
    pub p2: PrivateKey,
    pub joint: N,
    pub marginal_product: N,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport<N: Scalar> {
    pub holds: bool,
    pub max_deviation: N,
    pub witness: Option<IndependenceWitness<N>>,
}

/// Checks whether `P(p1, p2 | c_t)` factorizes into its marginals for
/// every reachable `c_t`, from the trajectory oracle. Exact in rational
/// mode. Holds for the delayed-sharing and history structures under any
/// strategy pair; the aggregate-action structure can break it.
pub fn check_conditional_independence<N: Scalar>(
    model: &TeamModel<N>,
    pair: &StrategyPair<N>,
    is: InfoStructure,
    t: usize,
    budget: u64,
) -> Result<IndependenceReport<N>> {
    let traj = joint_trajectory_distribution(model, pair, is, budget)?;
    let by_common = conditional_private_joint(&traj, model, is, t)?;
    let mut max_dev = N::zero();
    let mut witness = None;
    for (c, (_, joint)) in &by_common {
        let mut m1: BTreeMap<&PrivateKey, N> = BTreeMap::new();
        let mut m2: BTreeMap<&PrivateKey, N> = BTreeMap::new();
        for ((p1, p2), v) in joint {
            *m1.entry(p1).or_insert_with(N::zero) += v.clone();
            *m2.entry(p2).or_insert_with(N::zero) += v.clone();
        }
        for p1 in m1.keys() {
            for p2 in m2.keys() {
                let j = joint
                    .get(&((*p1).clone(), (*p2).clone()))
                    .cloned()
                    .unwrap_or_else(N::zero);
                let prod = m1[*p1].clone() * m2[*p2].clone();
                let dev = (j.clone() - prod.clone()).abs();
                if dev > max_dev {
                    max_dev = dev;
                    witness = Some(IndependenceWitness {
                        common: c.clone(),
                        p1: (*p1).clone(),
                        p2: (*p2).clone(),
                        joint: j,
                        marginal_product: prod,
                    });
                }
            }
        }
    }
    Ok(IndependenceReport {
        holds: max_dev.is_zero(),
        max_deviation: max_dev,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Kernel;
    use crate::model::{ModelParts, Space};
    use crate::prescription::Prescription;
    use crate::scalar::Rat;
    use alloc::vec;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    /// The Bernoulli(1/2) i.i.d. two-step model behind the history
    /// reduction counterexample: actions {a, b}, no shared state,
    /// strategy plays `a` w.p. 1/4 on matching histories and 1/2
    /// otherwise.
    fn iid_history_model() -> TeamModel<Rat> {
        let alpha = Dist::new(vec![r(1, 2), r(1, 2)]).unwrap();
        TeamModel::new(ModelParts {
            horizon: 2,
            shared_space: Space::singleton(),
            local_space: Space::new(vec!["0".into(), "1".into()]).unwrap(),
            action_space: Space::new(vec!["a".into(), "b".into()]).unwrap(),
            aggregate_space: None,
            alpha0: Dist::point(1, 0),
            alpha: alpha.clone(),
            shared_kernels: vec![Kernel::new(vec![1, 2, 2], vec![Dist::point(1, 0); 4]).unwrap()],
            local_kernels: vec![Kernel::new(vec![2, 1, 2, 2], vec![alpha; 8]).unwrap()],
            costs: vec![vec![r(0, 1); 16], vec![r(0, 1); 16]],
            aggregate: None,
            declared_iid_uncontrolled_local: None,
            declared_local_ignores_own_state: None,
        })
        .unwrap()
    }

    #[test]
    fn initial_beliefs_match_alpha() {
        let m = iid_history_model();
        let b = initial_belief(&m, InfoStructure::P1c, 0);
        let f = b.as_factored();
        assert_eq!(f.pi1, *m.alpha());
        assert_eq!(f.pi2, *m.alpha());
        // Full-history initial belief is over length-1 histories.
        let b = initial_belief(&m, InfoStructure::P1b, 0);
        assert_eq!(b.as_factored().pi1.len(), 2);
        // Joint initial belief is the product, uniform over 4 pairs here.
        let b = initial_belief(&m, InfoStructure::P1d, 0);
        let j = b.as_joint();
        for p1 in 0..2 {
            for p2 in 0..2 {
                assert_eq!(j.joint(p1, p2), &r(1, 4));
            }
        }
    }

    #[test]
    fn p1a_update_is_the_kernel_row() {
        let m = iid_history_model();
        let b = update_p1a(&m, 1, 0, 0, 0, 1, 1, 0);
        // iid uncontrolled: the row is alpha regardless of inputs.
        assert_eq!(b.pi1, *m.alpha());
        assert_eq!(b.pi2, *m.alpha());
    }

    #[test]
    fn p1b_posterior_after_observing_action_a() {
        // Prescription at t=1: play `a` w.p. 1/4 from state 0 and
        // 1/2 from state 1. Observing u=a gives
        // P(x_1 = 0 | a) = (1/4) / (1/4 + 1/2) = 1/3.
        let m = iid_history_model();
        let gamma = Prescription::new(vec![
            Dist::new(vec![r(1, 4), r(3, 4)]).unwrap(),
            Dist::new(vec![r(1, 2), r(1, 2)]).unwrap(),
        ]);
        let b0 = initial_belief(&m, InfoStructure::P1b, 0);
        let b1 = update_p1b(&m, 1, b0.as_factored(), &gamma, 0, 0, 0).unwrap();
        // Marginalize the 2-history belief over the new state.
        let from_zero = b1.pi1.get(0).clone() + b1.pi1.get(1).clone();
        assert_eq!(from_zero, r(1, 3));
        // Agent 2 observed the same action here, same posterior.
        let from_zero2 = b1.pi2.get(0).clone() + b1.pi2.get(1).clone();
        assert_eq!(from_zero2, r(1, 3));
    }

    #[test]
    fn p1b_impossible_action_is_an_error() {
        let m = iid_history_model();
        let gamma = Prescription::new(vec![Dist::point(2, 0), Dist::point(2, 0)]);
        let b0 = initial_belief(&m, InfoStructure::P1b, 0);
        let err = update_p1b(&m, 1, b0.as_factored(), &gamma, 0, 1, 0).unwrap_err();
        assert_eq!(err, Error::EvidenceImpossible);
    }

    #[test]
    fn p1c_uniform_prescription_pushes_prior_through_kernel() {
        let m = iid_history_model();
        let gamma = Prescription::uniform(2, 2);
        let b0 = initial_belief(&m, InfoStructure::P1c, 0);
        let b1 = update_p1c(&m, 1, b0.as_factored(), &gamma, 0, 0, 1).unwrap();
        assert_eq!(b1.pi1, *m.alpha());
    }

    #[test]
    fn specialized_dynamics_requires_the_flag() {
        let m = iid_history_model();
        let row = update_specialized_dynamics(&m, 1, 0, 0, 1).unwrap();
        assert_eq!(row, *m.alpha());
    }
}
