//! Brute-force trajectory enumeration and strategy evaluation.
//!
//! The enumerator is the ground-truth oracle for every conditional
//! quantity in the library: belief filters and reductions are verified
//! against conditionals computed here. It walks the full tree of
//! positive-probability trajectories, so it is only for desk-scale
//! models; `BudgetExceeded` guards the node count.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{CommonKey, InfoStructure, PrivateKey, Strategy, StrategyPair, TeamModel};
use crate::scalar::{sqrt_f64, Scalar};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// One complete system run: states for `1..=T`, actions for `1..=T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryRecord {
    pub x0: Vec<usize>,
    pub x1: Vec<usize>,
    pub x2: Vec<usize>,
    pub u1: Vec<usize>,
    pub u2: Vec<usize>,
}

impl TrajectoryRecord {
    /// Common-information realization at time `t` under `is`.
    pub fn common_at<N: Scalar>(
        &self,
        model: &TeamModel<N>,
        is: InfoStructure,
        t: usize,
    ) -> Result<CommonKey> {
        let mut c = model.initial_common(self.x0[0]);
        for s in 1..t {
            c = model.extend_common(
                is,
                &c,
                crate::model::Observation {
                    x0_next: self.x0[s],
                    u1: self.u1[s - 1],
                    u2: self.u2[s - 1],
                    x1: self.x1[s - 1],
                    x2: self.x2[s - 1],
                },
            )?;
        }
        Ok(c)
    }

    /// Private-information realization of `agent` (1 or 2) at time `t`.
    pub fn private_at(&self, is: InfoStructure, t: usize, agent: usize) -> PrivateKey {
        let xs = if agent == 1 { &self.x1 } else { &self.x2 };
        match is {
            InfoStructure::P1b => xs[..t].to_vec(),
            _ => alloc::vec![xs[t - 1]],
        }
    }
}

/// Exact joint law over trajectories; positive-probability entries only.
#[derive(Clone, Debug)]
pub struct TrajectoryDist<N: Scalar> {
    pub entries: Vec<(TrajectoryRecord, N)>,
}

impl<N: Scalar> TrajectoryDist<N> {
    pub fn total_mass(&self) -> N {
        let mut acc = N::zero();
        for (_, p) in &self.entries {
            acc += p.clone();
        }
        acc
    }
}

struct Walker<'a, N: Scalar, F: FnMut(&TrajectoryRecord, &N)> {
    model: &'a TeamModel<N>,
    pair: &'a StrategyPair<N>,
    is: InfoStructure,
    budget: u64,
    nodes: u64,
    sink: F,
}

impl<'a, N: Scalar, F: FnMut(&TrajectoryRecord, &N)> Walker<'a, N, F> {
    fn charge(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded {
                what: "trajectory tree",
                needed: self.nodes,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let model = self.model;
        for x0 in model.alpha0().support() {
            for x1 in model.alpha().support() {
                for x2 in model.alpha().support() {
                    let p = model.alpha0().get(x0).clone()
                        * model.alpha().get(x1).clone()
                        * model.alpha().get(x2).clone();
                    let rec = TrajectoryRecord {
                        x0: alloc::vec![x0],
                        x1: alloc::vec![x1],
                        x2: alloc::vec![x2],
                        u1: alloc::vec![],
                        u2: alloc::vec![],
                    };
                    let c = model.initial_common(x0);
                    let p1 = model.extend_private(self.is, &alloc::vec![], x1);
                    let p2 = model.extend_private(self.is, &alloc::vec![], x2);
                    self.step(1, rec, c, p1, p2, p)?;
                }
            }
        }
        Ok(())
    }

    fn step(
        &mut self,
        t: usize,
        rec: TrajectoryRecord,
        c: CommonKey,
        p1: PrivateKey,
        p2: PrivateKey,
        prob: N,
    ) -> Result<()> {
        self.charge()?;
        let model = self.model;
        let d1 = self.pair.g1.action_dist(t, &p1, &c)?.clone();
        let d2 = self.pair.g2.action_dist(t, &p2, &c)?.clone();
        let (x0, x1, x2) = (rec.x0[t - 1], rec.x1[t - 1], rec.x2[t - 1]);
        for u1 in d1.support() {
            for u2 in d2.support() {
                let p_act = prob.clone() * d1.get(u1).clone() * d2.get(u2).clone();
                let mut rec_u = rec.clone();
                rec_u.u1.push(u1);
                rec_u.u2.push(u2);
                if t == model.horizon() {
                    (self.sink)(&rec_u, &p_act);
                    continue;
                }
                let f0 = model.shared_row(t, x0, u1, u2);
                let f1 = model.local_row(t, x1, x0, u1, u2);
                let f2 = model.local_row(t, x2, x0, u1, u2);
                for x0n in f0.support() {
                    for x1n in f1.support() {
                        for x2n in f2.support() {
                            let p_next = p_act.clone()
                                * f0.get(x0n).clone()
                                * f1.get(x1n).clone()
                                * f2.get(x2n).clone();
                            let mut rec_n = rec_u.clone();
                            rec_n.x0.push(x0n);
                            rec_n.x1.push(x1n);
                            rec_n.x2.push(x2n);
                            let c_n = model.extend_common(
                                self.is,
                                &c,
                                crate::model::Observation {
                                    x0_next: x0n,
                                    u1,
                                    u2,
                                    x1,
                                    x2,
                                },
                            )?;
                            let p1_n = model.extend_private(self.is, &p1, x1n);
                            let p2_n = model.extend_private(self.is, &p2, x2n);
                            self.step(t + 1, rec_n, c_n, p1_n, p2_n, p_next)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact joint law of `(x0_{1:T}, x1_{1:T}, x2_{1:T}, u_{1:T})` under the
/// given strategy pair, by forward enumeration.
pub fn joint_trajectory_distribution<N: Scalar>(
    model: &TeamModel<N>,
    pair: &StrategyPair<N>,
    is: InfoStructure,
    budget: u64,
) -> Result<TrajectoryDist<N>> {
    let mut entries = Vec::new();
    let mut walker = Walker {
        model,
        pair,
        is,
        budget,
        nodes: 0,
        sink: |rec: &TrajectoryRecord, p: &N| entries.push((rec.clone(), p.clone())),
    };
    walker.run()?;
    Ok(TrajectoryDist { entries })
}

pub fn total_cost<N: Scalar>(model: &TeamModel<N>, rec: &TrajectoryRecord) -> N {
    let mut acc = N::zero();
    for t in 1..=model.horizon() {
        acc += model
            .cost(
                t,
                rec.x0[t - 1],
                rec.x1[t - 1],
                rec.x2[t - 1],
                rec.u1[t - 1],
                rec.u2[t - 1],
            )
            .clone();
    }
    acc
}

/// Expected total cost `J(g1, g2)`, exact.
pub fn evaluate_exact<N: Scalar>(
    model: &TeamModel<N>,
    pair: &StrategyPair<N>,
    is: InfoStructure,
    budget: u64,
) -> Result<N> {
    let mut acc = N::zero();
    let mut walker = Walker {
        model,
        pair,
        is,
        budget,
        nodes: 0,
        sink: |rec: &TrajectoryRecord, p: &N| {
            acc += p.clone() * total_cost(model, rec);
        },
    };
    walker.run()?;
    Ok(acc)
}

/// Seeded Monte Carlo estimate of `J(g, g)` for a symmetric strategy.
///
/// Trajectory `j` draws from three counter-based streams: nature uses
/// stream `3j`, agent 1 uses `3j + 1`, agent 2 uses `3j + 2`, so the two
/// agents randomize independently of each other and of the dynamics, and
/// the result is a pure function of `(seed, n)`.
pub fn evaluate_mc<N: Scalar>(
    model: &TeamModel<N>,
    strategy: &Strategy<N>,
    is: InfoStructure,
    seed: u64,
    n: u64,
) -> Result<(N, N)> {
    assert!(n >= 1, "sample count must be positive");
    let mut sum = N::zero();
    let mut sum_sq = N::zero();
    for j in 0..n {
        let mut nature = stream(seed, 3 * j);
        let mut k1 = stream(seed, 3 * j + 1);
        let mut k2 = stream(seed, 3 * j + 2);
        let cost = simulate_one(model, strategy, is, &mut nature, &mut k1, &mut k2)?;
        sum += cost.clone();
        sum_sq += cost.clone() * cost;
    }
    let n_scalar = N::from_int(n as i64);
    let mean = sum / n_scalar.clone();
    let stderr = if n == 1 {
        N::zero()
    } else {
        let var = (sum_sq / n_scalar.clone() - mean.clone() * mean.clone())
            .to_f64()
            .max(0.0)
            / (n as f64 - 1.0);
        N::from_f64(sqrt_f64(var))
    };
    Ok((mean, stderr))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn draw<N: Scalar>(dist: &Dist<N>, rng: &mut ChaCha8Rng) -> usize {
    // (0, 1] variate so a point mass is hit even at u = 1.
    let u = 1.0 - rng.gen::<f64>();
    dist.sample(N::from_f64(u))
}

fn simulate_one<N: Scalar>(
    model: &TeamModel<N>,
    strategy: &Strategy<N>,
    is: InfoStructure,
    nature: &mut ChaCha8Rng,
    k1: &mut ChaCha8Rng,
    k2: &mut ChaCha8Rng,
) -> Result<N> {
    let mut x0 = draw(model.alpha0(), nature);
    let mut x1 = draw(model.alpha(), nature);
    let mut x2 = draw(model.alpha(), nature);
    let mut c = model.initial_common(x0);
    let mut p1 = model.extend_private(is, &alloc::vec![], x1);
    let mut p2 = model.extend_private(is, &alloc::vec![], x2);
    let mut cost = N::zero();
    for t in 1..=model.horizon() {
        let u1 = draw(strategy.action_dist(t, &p1, &c)?, k1);
        let u2 = draw(strategy.action_dist(t, &p2, &c)?, k2);
        cost += model.cost(t, x0, x1, x2, u1, u2).clone();
        if t == model.horizon() {
            break;
        }
        let x0n = draw(model.shared_row(t, x0, u1, u2), nature);
        let x1n = draw(model.local_row(t, x1, x0, u1, u2), nature);
        let x2n = draw(model.local_row(t, x2, x0, u1, u2), nature);
        c = model.extend_common(
            is,
            &c,
            crate::model::Observation {
                x0_next: x0n,
                u1,
                u2,
                x1,
                x2,
            },
        )?;
        p1 = model.extend_private(is, &p1, x1n);
        p2 = model.extend_private(is, &p2, x2n);
        x0 = x0n;
        x1 = x1n;
        x2 = x2n;
    }
    Ok(cost)
}

/// Conditional law of the two agents' private information given each
/// reachable common realization at time `t`:
/// `c -> (P(c), (p1, p2) -> P(p1, p2 | c))`.
pub fn conditional_private_joint<N: Scalar>(
    traj: &TrajectoryDist<N>,
    model: &TeamModel<N>,
    is: InfoStructure,
    t: usize,
) -> Result<BTreeMap<CommonKey, (N, BTreeMap<(PrivateKey, PrivateKey), N>)>> {
    let mut by_common: BTreeMap<CommonKey, (N, BTreeMap<(PrivateKey, PrivateKey), N>)> =
        BTreeMap::new();
    for (rec, p) in &traj.entries {
        if p.is_zero() {
            continue;
        }
        let c = rec.common_at(model, is, t)?;
        let key = (rec.private_at(is, t, 1), rec.private_at(is, t, 2));
        let slot = by_common.entry(c).or_insert_with(|| (N::zero(), BTreeMap::new()));
        slot.0 += p.clone();
        *slot.1.entry(key).or_insert_with(N::zero) += p.clone();
    }
    for (_, (mass, table)) in by_common.iter_mut() {
        for (_, v) in table.iter_mut() {
            *v = v.clone() / mass.clone();
        }
    }
    Ok(by_common)
}

/// Conditional action law `P(u_i = . | x_i = x, c_t = c)` for each agent,
/// from the trajectory oracle. Entries exist only for realizations with
/// positive probability.
pub fn conditional_action_given_state<N: Scalar>(
    traj: &TrajectoryDist<N>,
    model: &TeamModel<N>,
    is: InfoStructure,
    t: usize,
    agent: usize,
) -> Result<BTreeMap<(usize, CommonKey), Dist<N>>> {
    let nu = model.action_space().len();
    let mut joint: BTreeMap<(usize, CommonKey), Vec<N>> = BTreeMap::new();
    for (rec, p) in &traj.entries {
        if p.is_zero() {
            continue;
        }
        let c = rec.common_at(model, is, t)?;
        let (x, u) = if agent == 1 {
            (rec.x1[t - 1], rec.u1[t - 1])
        } else {
            (rec.x2[t - 1], rec.u2[t - 1])
        };
        let slot = joint
            .entry((x, c))
            .or_insert_with(|| alloc::vec![N::zero(); nu]);
        slot[u] += p.clone();
    }
    let mut out = BTreeMap::new();
    for (key, weights) in joint {
        out.insert(key, Dist::from_unnormalized(weights)?);
    }
    Ok(out)
}
