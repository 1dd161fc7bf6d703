//! Seeded random instances for the property and verification suites.
//!
//! Everything draws small exact rationals, so the suites that demand
//! exact equalities can run entirely in the rational backend.

use alloc::vec::Vec;

use rand::Rng;

use crate::dist::{Dist, Kernel};
use crate::error::Result;
use crate::model::{InfoStructure, ModelParts, Space, Strategy, StrategyPair, TeamModel};
use crate::prescription::Prescription;
use crate::scalar::{Rat, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DynamicsKind {
    /// Unconstrained kernels.
    General,
    /// No shared state; local states are uncontrolled i.i.d. draws.
    IidUncontrolled,
    /// Local kernel rows do not depend on the agent's own state.
    IgnoresOwnState,
}

#[derive(Clone, Debug)]
pub struct InstanceConfig {
    pub horizon: usize,
    pub shared_len: usize,
    pub local_len: usize,
    pub action_len: usize,
    pub kind: DynamicsKind,
    /// Integer stage costs drawn uniformly from this inclusive range.
    pub cost_range: (i64, i64),
    /// Attach a sum aggregate map (needed for the aggregate structure).
    pub with_aggregate: bool,
    /// Make both kernels symmetric in the ordered action pair, so the
    /// model is invariant under agent relabeling.
    pub action_symmetric: bool,
}

impl InstanceConfig {
    pub fn small_binary(horizon: usize) -> Self {
        InstanceConfig {
            horizon,
            shared_len: 1,
            local_len: 2,
            action_len: 2,
            kind: DynamicsKind::General,
            cost_range: (0, 4),
            with_aggregate: false,
            action_symmetric: false,
        }
    }
}

/// Random distribution with numerators in `0..=4`, exact by construction.
pub fn random_dist(rng: &mut impl Rng, len: usize) -> Dist<Rat> {
    loop {
        let nums: Vec<i64> = (0..len).map(|_| rng.gen_range(0..=4)).collect();
        let total: i64 = nums.iter().sum();
        if total == 0 {
            continue;
        }
        let weights = nums.into_iter().map(|n| Rat::new(n, total)).collect();
        return Dist::new(weights).expect("normalized by construction");
    }
}

/// Random distribution with full support, for strategies that must not
/// prune any branch.
pub fn random_full_support_dist(rng: &mut impl Rng, len: usize) -> Dist<Rat> {
    let nums: Vec<i64> = (0..len).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = nums.iter().sum();
    Dist::new(nums.into_iter().map(|n| Rat::new(n, total)).collect())
        .expect("normalized by construction")
}

fn index_space(prefix: &str, len: usize) -> Space {
    Space::new((0..len).map(|i| alloc::format!("{prefix}{i}")).collect())
        .expect("nonempty distinct labels")
}

pub fn random_model<R: Rng>(rng: &mut R, config: &InstanceConfig) -> Result<TeamModel<Rat>> {
    let shared_len = match config.kind {
        DynamicsKind::IidUncontrolled => 1,
        _ => config.shared_len,
    };
    let (nx, nu) = (config.local_len, config.action_len);
    let alpha = random_dist(rng, nx);
    let alpha0 = if shared_len == 1 {
        Dist::point(1, 0)
    } else {
        random_dist(rng, shared_len)
    };
    // Draw one row per unordered action pair when symmetry is requested.
    let pair_rows = |rng: &mut R, heads: usize, out_len: usize| -> Vec<Dist<Rat>> {
        let mut rows = Vec::with_capacity(heads * nu * nu);
        for _ in 0..heads {
            let mut canon: Vec<Option<Dist<Rat>>> = alloc::vec![None; nu * nu];
            for u1 in 0..nu {
                for u2 in 0..nu {
                    let row = if config.action_symmetric && u2 < u1 {
                        canon[u2 * nu + u1].clone().expect("filled earlier")
                    } else {
                        random_dist(rng, out_len)
                    };
                    canon[u1 * nu + u2] = Some(row);
                }
            }
            rows.extend(canon.into_iter().map(Option::unwrap));
        }
        rows
    };
    let mut shared_kernels = Vec::new();
    let mut local_kernels = Vec::new();
    for _ in 1..config.horizon {
        let shared_rows = pair_rows(rng, shared_len, shared_len);
        shared_kernels.push(Kernel::new(alloc::vec![shared_len, nu, nu], shared_rows)?);
        let local_rows = match config.kind {
            DynamicsKind::General => pair_rows(rng, nx * shared_len, nx),
            DynamicsKind::IidUncontrolled => alloc::vec![alpha.clone(); nx * shared_len * nu * nu],
            DynamicsKind::IgnoresOwnState => {
                let per_input = pair_rows(rng, shared_len, nx);
                let mut rows = Vec::with_capacity(nx * per_input.len());
                for _x in 0..nx {
                    rows.extend(per_input.iter().cloned());
                }
                rows
            }
        };
        local_kernels.push(Kernel::new(alloc::vec![nx, shared_len, nu, nu], local_rows)?);
    }
    let costs = (0..config.horizon)
        .map(|_| {
            (0..shared_len * nx * nx * nu * nu)
                .map(|_| Rat::from_int(rng.gen_range(config.cost_range.0..=config.cost_range.1)))
                .collect()
        })
        .collect();
    let (aggregate, aggregate_space) = if config.with_aggregate {
        // Sum or max of the two action indices.
        let use_sum = rng.gen_bool(0.5);
        let mut map = Vec::with_capacity(nu * nu);
        for u1 in 0..nu {
            for u2 in 0..nu {
                map.push(if use_sum { u1 + u2 } else { u1.max(u2) });
            }
        }
        let agg_len = if use_sum { 2 * nu - 1 } else { nu };
        (Some(map), Some(index_space("a", agg_len)))
    } else {
        (None, None)
    };
    TeamModel::new(ModelParts {
        horizon: config.horizon,
        shared_space: if shared_len == 1 {
            Space::singleton()
        } else {
            index_space("s", shared_len)
        },
        local_space: index_space("x", nx),
        action_space: index_space("u", nu),
        aggregate_space,
        alpha0,
        alpha,
        shared_kernels,
        local_kernels,
        costs,
        aggregate,
        declared_iid_uncontrolled_local: None,
        declared_local_ignores_own_state: None,
    })
}

/// Symmetrizes the stage costs so that swapping the agents' states and
/// actions leaves every entry unchanged.
pub fn exchangeable_costs(model: &TeamModel<Rat>) -> Vec<Vec<Rat>> {
    let (n0, nx, nu) = (
        model.shared_space().len(),
        model.local_space().len(),
        model.action_space().len(),
    );
    let mut out = Vec::with_capacity(model.horizon());
    for t in 1..=model.horizon() {
        let mut table = alloc::vec![Rat::from_int(0); n0 * nx * nx * nu * nu];
        for x0 in 0..n0 {
            for x1 in 0..nx {
                for x2 in 0..nx {
                    for u1 in 0..nu {
                        for u2 in 0..nu {
                            let a = model.cost(t, x0, x1, x2, u1, u2).clone();
                            let b = model.cost(t, x0, x2, x1, u2, u1).clone();
                            let idx = (((x0 * nx + x1) * nx + x2) * nu + u1) * nu + u2;
                            table[idx] = (a + b) / Rat::from_int(2);
                        }
                    }
                }
            }
        }
        out.push(table);
    }
    out
}

pub fn random_prescription(
    rng: &mut impl Rng,
    domain_len: usize,
    n_actions: usize,
) -> Prescription<Rat> {
    Prescription::new((0..domain_len).map(|_| random_dist(rng, n_actions)).collect())
}

pub fn random_full_support_prescription(
    rng: &mut impl Rng,
    domain_len: usize,
    n_actions: usize,
) -> Prescription<Rat> {
    Prescription::new(
        (0..domain_len)
            .map(|_| random_full_support_dist(rng, n_actions))
            .collect(),
    )
}

/// Random behavioral strategy, total over the combinatorial info sets.
pub fn random_strategy(
    rng: &mut impl Rng,
    model: &TeamModel<Rat>,
    is: InfoStructure,
) -> Result<Strategy<Rat>> {
    let nu = model.action_space().len();
    Strategy::from_fn(model, is, |_, _, _| random_dist(rng, nu))
}

pub fn random_pair(
    rng: &mut impl Rng,
    model: &TeamModel<Rat>,
    is: InfoStructure,
) -> Result<StrategyPair<Rat>> {
    Ok(StrategyPair::new(
        random_strategy(rng, model, is)?,
        random_strategy(rng, model, is)?,
    ))
}

/// The coordinator open-loop strategy that plays `gammas[t]` regardless
/// of the common information.
pub fn strategy_from_prescriptions(
    model: &TeamModel<Rat>,
    is: InfoStructure,
    gammas: &[Prescription<Rat>],
) -> Result<Strategy<Rat>> {
    Strategy::from_fn(model, is, |t, p, _| {
        let idx = model.private_index(is, t, p);
        gammas[t - 1].row(idx).clone()
    })
}

/// Per-time random prescriptions over the structure's private domains.
pub fn random_prescription_sequence(
    rng: &mut impl Rng,
    model: &TeamModel<Rat>,
    is: InfoStructure,
    full_support: bool,
) -> Vec<Prescription<Rat>> {
    (1..=model.horizon())
        .map(|t| {
            let domain = is.private_domain_len(model.local_space().len(), t);
            if full_support {
                random_full_support_prescription(rng, domain, model.action_space().len())
            } else {
                random_prescription(rng, domain, model.action_space().len())
            }
        })
        .collect()
}
