//! Reduction of full-history strategies to current-state strategies and
//! the symmetry diagnostics around it.
//!
//! Given any (possibly asymmetric) full-history strategy pair, the
//! conditional law of each agent's action given its current state and the
//! common information is itself a current-state strategy, and the reduced
//! pair reproduces the joint law of `(X_t, U_t, C_t)` — hence the same
//! expected cost. The catch this module measures: starting from a
//! symmetric pair, the two reduced strategies need not be symmetric.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::dist::Dist;
use crate::error::Result;
use crate::model::{CommonKey, InfoStructure, PrivateKey, Strategy, StrategyPair, TeamModel};
use crate::scalar::Scalar;
use crate::traj::{
    conditional_action_given_state, evaluate_exact, joint_trajectory_distribution, TrajectoryDist,
};

/// Where the largest per-realization asymmetry sits.
#[derive(Clone, Debug, PartialEq)]
pub struct GapWitness<N: Scalar> {
    pub t: usize,
    pub private: PrivateKey,
    pub common: CommonKey,
    pub gap: N,
}

#[derive(Clone, Debug)]
pub struct ReductionReport<N: Scalar> {
    /// The reduced pair, kept asymmetric; it is never silently
    /// symmetrized.
    pub reduced: StrategyPair<N>,
    pub cost_before: N,
    pub cost_after: N,
    pub symmetry_gap: N,
    pub witness: Option<GapWitness<N>>,
}

/// Builds the current-state reduction of a full-history strategy pair and
/// checks cost preservation. Realizations with zero probability get a
/// uniform action row, fixed for determinism.
pub fn reduce_to_current_state<N: Scalar>(
    model: &TeamModel<N>,
    pair: &StrategyPair<N>,
    budget: u64,
) -> Result<ReductionReport<N>> {
    let is = InfoStructure::P1b;
    let traj = joint_trajectory_distribution(model, pair, is, budget)?;
    let nu = model.action_space().len();
    let mut tables1 = Vec::with_capacity(model.horizon());
    let mut tables2 = Vec::with_capacity(model.horizon());
    for t in 1..=model.horizon() {
        let cond1 = conditional_action_given_state(&traj, model, is, t, 1)?;
        let cond2 = conditional_action_given_state(&traj, model, is, t, 2)?;
        let mut table1 = BTreeMap::new();
        let mut table2 = BTreeMap::new();
        // Total over the combinatorial information sets; the common-info
        // encoding of the full-history structure is the reduced one.
        for c in model.enumerate_common(InfoStructure::P1c, t)? {
            for x in 0..model.local_space().len() {
                let row1 = cond1
                    .get(&(x, c.clone()))
                    .cloned()
                    .unwrap_or_else(|| Dist::uniform(nu));
                let row2 = cond2
                    .get(&(x, c.clone()))
                    .cloned()
                    .unwrap_or_else(|| Dist::uniform(nu));
                table1.insert((alloc::vec![x], c.clone()), row1);
                table2.insert((alloc::vec![x], c.clone()), row2);
            }
        }
        tables1.push(table1);
        tables2.push(table2);
    }
    let reduced = StrategyPair::new(Strategy::new(tables1), Strategy::new(tables2));
    let cost_before = evaluate_exact(model, pair, is, budget)?;
    let cost_after = evaluate_exact(model, &reduced, InfoStructure::P1c, budget)?;
    let (symmetry_gap, witness) =
        symmetry_gap_from_traj(model, InfoStructure::P1c, &reduced, &reduced_traj(model, &reduced, budget)?)?;
    Ok(ReductionReport {
        reduced,
        cost_before,
        cost_after,
        symmetry_gap,
        witness,
    })
}

fn reduced_traj<N: Scalar>(
    model: &TeamModel<N>,
    pair: &StrategyPair<N>,
    budget: u64,
) -> Result<TrajectoryDist<N>> {
    joint_trajectory_distribution(model, pair, InfoStructure::P1c, budget)
}

/// Maximum total-variation distance between the two agents' action rows
/// over the realizations reachable by both agents. A pair differing only
/// on unreachable realizations has gap zero.
pub fn symmetry_gap<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    pair: &StrategyPair<N>,
    budget: u64,
) -> Result<(N, Option<GapWitness<N>>)> {
    let traj = joint_trajectory_distribution(model, pair, is, budget)?;
    symmetry_gap_from_traj(model, is, pair, &traj)
}

fn symmetry_gap_from_traj<N: Scalar>(
    model: &TeamModel<N>,
    is: InfoStructure,
    pair: &StrategyPair<N>,
    traj: &TrajectoryDist<N>,
) -> Result<(N, Option<GapWitness<N>>)> {
    let mut gap = N::zero();
    let mut witness = None;
    for t in 1..=model.horizon() {
        // Realizations with positive probability for each agent.
        let mut seen1: BTreeMap<(PrivateKey, CommonKey), ()> = BTreeMap::new();
        let mut seen2: BTreeMap<(PrivateKey, CommonKey), ()> = BTreeMap::new();
        for (rec, p) in &traj.entries {
            if p.is_zero() {
                continue;
            }
            let c = rec.common_at(model, is, t)?;
            seen1.insert((rec.private_at(is, t, 1), c.clone()), ());
            seen2.insert((rec.private_at(is, t, 2), c), ());
        }
        for key in seen1.keys() {
            if !seen2.contains_key(key) {
                continue;
            }
            let (p, c) = key;
            let d1 = pair.g1.action_dist(t, p, c)?;
            let d2 = pair.g2.action_dist(t, p, c)?;
            let tv = d1.tv_distance(d2);
            if tv > gap {
                gap = tv.clone();
                witness = Some(GapWitness {
                    t,
                    private: p.clone(),
                    common: c.clone(),
                    gap: tv,
                });
            }
        }
    }
    Ok((gap, witness))
}
