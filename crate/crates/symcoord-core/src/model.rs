//! The two-agent team model, information structures, and strategy tables.
//!
//! State layout: a shared state observed by both agents, plus one local
//! state per agent. Both agents share a single local transition kernel
//! and a single action space, so the model itself is agent-symmetric;
//! asymmetry can only enter through strategies or realized actions.
//!
//! Time is 1-based: transitions happen at `t = 1..T-1`, stage costs at
//! `t = 1..T`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{Dist, Kernel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordered finite label set. Declaration order is the support order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    labels: Vec<String>,
}

impl Space {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Malformed {
                reason: "a space needs at least one label".into(),
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::Malformed {
                    reason: format!("duplicate label `{a}`"),
                });
            }
        }
        Ok(Space { labels })
    }

    pub fn singleton() -> Self {
        Space {
            labels: vec!["_".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// The four supported information structures.
///
/// In every structure the shared-state history and the (individual or
/// aggregate) action history are common information and the agent's own
/// current local state is private.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfoStructure {
    /// One-step delayed sharing: both agents' past local states are common.
    P1a,
    /// Full local history: the agent privately remembers all its states.
    P1b,
    /// Reduced local history: the agent privately knows only its current state.
    P1c,
    /// Aggregate actions: only `a(u1, u2)` is observed, never `(u1, u2)`.
    P1d,
}

impl InfoStructure {
    pub fn code(self) -> &'static str {
        match self {
            InfoStructure::P1a => "p1a",
            InfoStructure::P1b => "p1b",
            InfoStructure::P1c => "p1c",
            InfoStructure::P1d => "p1d",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "p1a" => Some(InfoStructure::P1a),
            "p1b" => Some(InfoStructure::P1b),
            "p1c" => Some(InfoStructure::P1c),
            "p1d" => Some(InfoStructure::P1d),
            _ => None,
        }
    }

    /// Size of the private-information domain at time `t` (1-based).
    pub fn private_domain_len(self, local_len: usize, t: usize) -> usize {
        match self {
            InfoStructure::P1b => local_len.pow(t as u32 - 1) * local_len,
            _ => local_len,
        }
    }

    /// Length of the private-information tuple at time `t`.
    pub fn private_tuple_len(self, t: usize) -> usize {
        match self {
            InfoStructure::P1b => t,
            _ => 1,
        }
    }

    pub fn uses_joint_belief(self) -> bool {
        matches!(self, InfoStructure::P1d)
    }

    pub fn requires_aggregate(self) -> bool {
        matches!(self, InfoStructure::P1d)
    }
}

/// Private-information realization: current state for P1a/P1c/P1d, the
/// oldest-first state history for P1b.
pub type PrivateKey = Vec<usize>;
/// Canonical flat encoding of a common-information realization; see
/// [`TeamModel::initial_common`] and [`TeamModel::extend_common`].
pub type CommonKey = Vec<usize>;

/// Everything observed between `t` and `t+1` that can enter the common
/// information, before structure-specific filtering.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub x0_next: usize,
    pub u1: usize,
    pub u2: usize,
    pub x1: usize,
    pub x2: usize,
}

#[derive(Clone, Debug)]
pub struct TeamModel<N: Scalar> {
    horizon: usize,
    shared_space: Space,
    local_space: Space,
    action_space: Space,
    aggregate_space: Option<Space>,
    alpha0: Dist<N>,
    alpha: Dist<N>,
    /// Shared-state kernels, one per `t` in `1..T`; rows keyed `(x0, u1, u2)`.
    shared_kernels: Vec<Kernel<N>>,
    /// Local kernels, one per `t` in `1..T`; rows keyed `(x, x0, u1, u2)`.
    /// The same kernel serves both agents.
    local_kernels: Vec<Kernel<N>>,
    /// Stage costs, one flat table per `t` in `1..=T`, indexed
    /// `(x0, x1, x2, u1, u2)`.
    costs: Vec<Vec<N>>,
    /// Aggregate action map, flat over `(u1, u2)`.
    aggregate: Option<Vec<usize>>,
    iid_uncontrolled_local: bool,
    local_ignores_own_state: bool,
}

/// Raw parts handed to [`TeamModel::new`]; flags, if declared, are checked
/// against the kernels rather than trusted.
pub struct ModelParts<N: Scalar> {
    pub horizon: usize,
    pub shared_space: Space,
    pub local_space: Space,
    pub action_space: Space,
    pub aggregate_space: Option<Space>,
    pub alpha0: Dist<N>,
    pub alpha: Dist<N>,
    pub shared_kernels: Vec<Kernel<N>>,
    pub local_kernels: Vec<Kernel<N>>,
    pub costs: Vec<Vec<N>>,
    pub aggregate: Option<Vec<usize>>,
    pub declared_iid_uncontrolled_local: Option<bool>,
    pub declared_local_ignores_own_state: Option<bool>,
}

impl<N: Scalar> TeamModel<N> {
    pub fn new(parts: ModelParts<N>) -> Result<Self> {
        let ModelParts {
            horizon,
            shared_space,
            local_space,
            action_space,
            aggregate_space,
            alpha0,
            alpha,
            shared_kernels,
            local_kernels,
            costs,
            aggregate,
            declared_iid_uncontrolled_local,
            declared_local_ignores_own_state,
        } = parts;

        if horizon == 0 {
            return Err(Error::Malformed {
                reason: "horizon must be at least 1".into(),
            });
        }
        let (n0, nx, nu) = (shared_space.len(), local_space.len(), action_space.len());
        if alpha0.len() != n0 || alpha.len() != nx {
            return Err(Error::Malformed {
                reason: "initial distribution length does not match its space".into(),
            });
        }
        if shared_kernels.len() != horizon - 1 || local_kernels.len() != horizon - 1 {
            return Err(Error::Malformed {
                reason: format!(
                    "expected {} transition kernels, got {} shared / {} local",
                    horizon - 1,
                    shared_kernels.len(),
                    local_kernels.len()
                ),
            });
        }
        for k in &shared_kernels {
            if k.shape() != [n0, nu, nu] {
                return Err(Error::Malformed {
                    reason: "shared kernel shape must be (x0, u1, u2)".into(),
                });
            }
        }
        for k in &local_kernels {
            if k.shape() != [nx, n0, nu, nu] {
                return Err(Error::Malformed {
                    reason: "local kernel shape must be (x, x0, u1, u2)".into(),
                });
            }
        }
        if costs.len() != horizon {
            return Err(Error::Malformed {
                reason: format!("expected {horizon} cost tables, got {}", costs.len()),
            });
        }
        let cost_len = n0 * nx * nx * nu * nu;
        for table in &costs {
            if table.len() != cost_len {
                return Err(Error::Malformed {
                    reason: "cost table length does not match (x0, x1, x2, u1, u2)".into(),
                });
            }
            for v in table {
                if !v.is_finite() {
                    return Err(Error::Malformed {
                        reason: "costs must be finite".into(),
                    });
                }
            }
        }
        match (&aggregate, &aggregate_space) {
            (Some(map), Some(space)) => {
                if map.len() != nu * nu {
                    return Err(Error::Malformed {
                        reason: "aggregate map must cover every action pair".into(),
                    });
                }
                if map.iter().any(|&a| a >= space.len()) {
                    return Err(Error::Malformed {
                        reason: "aggregate label out of range".into(),
                    });
                }
            }
            (None, None) => {}
            _ => {
                return Err(Error::Malformed {
                    reason: "aggregate map and aggregate space go together".into(),
                });
            }
        }

        let iid = n0 == 1
            && local_kernels
                .iter()
                .all(|k| k.rows().iter().all(|row| row.weights() == alpha.weights()));
        let ignores_own = local_kernels.iter().all(|k| {
            (0..n0).all(|x0| {
                (0..nu).all(|u1| {
                    (0..nu).all(|u2| {
                        let first = k.row(&[0, x0, u1, u2]);
                        (1..nx).all(|x| k.row(&[x, x0, u1, u2]) == first)
                    })
                })
            })
        });
        if let Some(flag) = declared_iid_uncontrolled_local {
            if flag != iid {
                return Err(Error::InconsistentFlag {
                    flag: "iid_uncontrolled_local",
                });
            }
        }
        if let Some(flag) = declared_local_ignores_own_state {
            if flag != ignores_own {
                return Err(Error::InconsistentFlag {
                    flag: "local_ignores_own_state",
                });
            }
        }

        Ok(TeamModel {
            horizon,
            shared_space,
            local_space,
            action_space,
            aggregate_space,
            alpha0,
            alpha,
            shared_kernels,
            local_kernels,
            costs,
            aggregate,
            iid_uncontrolled_local: iid,
            local_ignores_own_state: ignores_own,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn shared_space(&self) -> &Space {
        &self.shared_space
    }

    pub fn local_space(&self) -> &Space {
        &self.local_space
    }

    pub fn action_space(&self) -> &Space {
        &self.action_space
    }

    pub fn aggregate_space(&self) -> Option<&Space> {
        self.aggregate_space.as_ref()
    }

    pub fn alpha0(&self) -> &Dist<N> {
        &self.alpha0
    }

    pub fn alpha(&self) -> &Dist<N> {
        &self.alpha
    }

    /// Local states are uncontrolled i.i.d. draws from `alpha` and the
    /// shared state is trivial. Recomputed from the kernels at build time.
    pub fn iid_uncontrolled_local(&self) -> bool {
        self.iid_uncontrolled_local
    }

    /// The local kernel ignores the agent's own current local state.
    pub fn local_ignores_own_state(&self) -> bool {
        self.local_ignores_own_state
    }

    /// Shared-state transition row at time `t` (1-based, `t < T`).
    pub fn shared_row(&self, t: usize, x0: usize, u1: usize, u2: usize) -> &Dist<N> {
        self.shared_kernels[t - 1].row(&[x0, u1, u2])
    }

    /// Local transition row at time `t` (1-based, `t < T`). The action
    /// pair is ordered `(u1, u2)` for both agents.
    pub fn local_row(&self, t: usize, x: usize, x0: usize, u1: usize, u2: usize) -> &Dist<N> {
        self.local_kernels[t - 1].row(&[x, x0, u1, u2])
    }

    pub fn cost(&self, t: usize, x0: usize, x1: usize, x2: usize, u1: usize, u2: usize) -> &N {
        let nx = self.local_space.len();
        let nu = self.action_space.len();
        let idx = (((x0 * nx + x1) * nx + x2) * nu + u1) * nu + u2;
        &self.costs[t - 1][idx]
    }

    pub fn aggregate_of(&self, u1: usize, u2: usize) -> Result<usize> {
        let map = self.aggregate.as_ref().ok_or(Error::MissingAggregate)?;
        Ok(map[u1 * self.action_space.len() + u2])
    }

    pub fn has_aggregate(&self) -> bool {
        self.aggregate.is_some()
    }

    /// Lint: a stage cost is exchangeable when swapping the two agents'
    /// states and actions leaves it unchanged. Symmetric strategies are
    /// rarely sensible without this, but the model does not require it.
    pub fn cost_is_exchangeable(&self) -> bool {
        let (n0, nx, nu) = (
            self.shared_space.len(),
            self.local_space.len(),
            self.action_space.len(),
        );
        for t in 1..=self.horizon {
            for x0 in 0..n0 {
                for x1 in 0..nx {
                    for x2 in 0..nx {
                        for u1 in 0..nu {
                            for u2 in 0..nu {
                                if self.cost(t, x0, x1, x2, u1, u2)
                                    != self.cost(t, x0, x2, x1, u2, u1)
                                {
                                    return false;
                                }
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Same model with replaced stage costs.
    pub fn with_costs(&self, costs: Vec<Vec<N>>) -> Result<TeamModel<N>> {
        TeamModel::new(ModelParts {
            horizon: self.horizon,
            shared_space: self.shared_space.clone(),
            local_space: self.local_space.clone(),
            action_space: self.action_space.clone(),
            aggregate_space: self.aggregate_space.clone(),
            alpha0: self.alpha0.clone(),
            alpha: self.alpha.clone(),
            shared_kernels: self.shared_kernels.clone(),
            local_kernels: self.local_kernels.clone(),
            costs,
            aggregate: self.aggregate.clone(),
            declared_iid_uncontrolled_local: None,
            declared_local_ignores_own_state: None,
        })
    }

    pub fn to_f64(&self) -> TeamModel<f64> {
        TeamModel {
            horizon: self.horizon,
            shared_space: self.shared_space.clone(),
            local_space: self.local_space.clone(),
            action_space: self.action_space.clone(),
            aggregate_space: self.aggregate_space.clone(),
            alpha0: self.alpha0.to_f64(),
            alpha: self.alpha.to_f64(),
            shared_kernels: self.shared_kernels.iter().map(Kernel::to_f64).collect(),
            local_kernels: self.local_kernels.iter().map(Kernel::to_f64).collect(),
            costs: self
                .costs
                .iter()
                .map(|t| t.iter().map(Scalar::to_f64).collect())
                .collect(),
            aggregate: self.aggregate.clone(),
            iid_uncontrolled_local: self.iid_uncontrolled_local,
            local_ignores_own_state: self.local_ignores_own_state,
        }
    }

    /// Common information at `t = 1`: just the initial shared state.
    pub fn initial_common(&self, x0: usize) -> CommonKey {
        vec![x0]
    }

    /// Appends the structure-specific common-information increment.
    pub fn extend_common(
        &self,
        is: InfoStructure,
        c: &CommonKey,
        obs: Observation,
    ) -> Result<CommonKey> {
        let mut next = c.clone();
        next.push(obs.x0_next);
        match is {
            InfoStructure::P1a => {
                next.extend([obs.u1, obs.u2, obs.x1, obs.x2]);
            }
            InfoStructure::P1b | InfoStructure::P1c => {
                next.extend([obs.u1, obs.u2]);
            }
            InfoStructure::P1d => {
                next.push(self.aggregate_of(obs.u1, obs.u2)?);
            }
        }
        Ok(next)
    }

    /// Appends the next local state to a private-information realization.
    pub fn extend_private(&self, is: InfoStructure, p: &PrivateKey, x_next: usize) -> PrivateKey {
        match is {
            InfoStructure::P1b => {
                let mut next = p.clone();
                next.push(x_next);
                next
            }
            _ => vec![x_next],
        }
    }

    /// Current local state encoded by a private-information realization.
    pub fn current_state_of(&self, p: &PrivateKey) -> usize {
        *p.last().expect("private info is never empty")
    }

    /// All private-information tuples at time `t`, in lexicographic
    /// (oldest-first) order. This is the prescription domain order.
    pub fn private_domain(&self, is: InfoStructure, t: usize) -> Vec<PrivateKey> {
        let len = is.private_tuple_len(t);
        enumerate_tuples(&vec![self.local_space.len(); len])
    }

    /// Decodes a flat private-domain index back into a tuple.
    pub fn private_index(&self, is: InfoStructure, t: usize, p: &PrivateKey) -> usize {
        debug_assert_eq!(p.len(), is.private_tuple_len(t));
        let nx = self.local_space.len();
        p.iter().fold(0, |acc, &x| acc * nx + x)
    }

    /// Swaps the two agents' coordinates inside a common realization:
    /// the action slots of every increment, and the revealed local states
    /// under delayed sharing. Aggregate increments are untouched. This is
    /// how a common realization reads after relabeling the agents.
    pub fn transpose_common(&self, is: InfoStructure, c: &CommonKey) -> CommonKey {
        let mut out = Vec::with_capacity(c.len());
        out.push(c[0]);
        let step = match is {
            InfoStructure::P1a => 5,
            InfoStructure::P1b | InfoStructure::P1c => 3,
            InfoStructure::P1d => 2,
        };
        let mut i = 1;
        while i < c.len() {
            match is {
                InfoStructure::P1a => {
                    out.extend([c[i], c[i + 2], c[i + 1], c[i + 4], c[i + 3]]);
                }
                InfoStructure::P1b | InfoStructure::P1c => {
                    out.extend([c[i], c[i + 2], c[i + 1]]);
                }
                InfoStructure::P1d => {
                    out.extend([c[i], c[i + 1]]);
                }
            }
            i += step;
        }
        out
    }

    /// True when both transition kernels are symmetric in the ordered
    /// action pair, so that relabeling the agents maps the model to
    /// itself. Together with an exchangeable cost this makes the team
    /// fully exchange-symmetric.
    pub fn kernels_action_symmetric(&self) -> bool {
        let (n0, nx, nu) = (
            self.shared_space.len(),
            self.local_space.len(),
            self.action_space.len(),
        );
        for t in 1..self.horizon {
            for x0 in 0..n0 {
                for u1 in 0..nu {
                    for u2 in 0..nu {
                        if self.shared_row(t, x0, u1, u2) != self.shared_row(t, x0, u2, u1) {
                            return false;
                        }
                        for x in 0..nx {
                            if self.local_row(t, x, x0, u1, u2) != self.local_row(t, x, x0, u2, u1)
                            {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// The full combinatorial superset of common-information realizations
    /// at time `t`. Every reachable realization is in here; unreachable
    /// ones are harmless for table-driven strategies.
    pub fn enumerate_common(&self, is: InfoStructure, t: usize) -> Result<Vec<CommonKey>> {
        let n0 = self.shared_space.len();
        let nu = self.action_space.len();
        let nx = self.local_space.len();
        let mut keys = vec![];
        // c_t = x0_1, then one increment per step 1..t.
        let mut shape = vec![n0];
        for _ in 1..t {
            shape.push(n0);
            match is {
                InfoStructure::P1a => shape.extend([nu, nu, nx, nx]),
                InfoStructure::P1b | InfoStructure::P1c => shape.extend([nu, nu]),
                InfoStructure::P1d => {
                    let na = self
                        .aggregate_space
                        .as_ref()
                        .ok_or(Error::MissingAggregate)?
                        .len();
                    shape.push(na);
                }
            }
        }
        // Reorder: increments are appended after the head, but the shape
        // above already lists components in exactly that order.
        keys.extend(enumerate_tuples(&shape));
        Ok(keys)
    }
}

pub(crate) fn enumerate_tuples(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in shape {
        let mut next = Vec::with_capacity(out.len() * n);
        for prefix in &out {
            for v in 0..n {
                let mut tuple = prefix.clone();
                tuple.push(v);
                next.push(tuple);
            }
        }
        out = next;
    }
    out
}

/// A per-agent behavioral strategy: for each time, a table from
/// (private realization, common realization) to an action distribution.
/// A symmetric pair uses one `Strategy` for both agents.
#[derive(Clone, Debug)]
pub struct Strategy<N: Scalar> {
    tables: Vec<BTreeMap<(PrivateKey, CommonKey), Dist<N>>>,
}

impl<N: Scalar> Strategy<N> {
    pub fn new(tables: Vec<BTreeMap<(PrivateKey, CommonKey), Dist<N>>>) -> Self {
        Strategy { tables }
    }

    pub fn horizon(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, t: usize) -> &BTreeMap<(PrivateKey, CommonKey), Dist<N>> {
        &self.tables[t - 1]
    }

    pub fn table_mut(&mut self, t: usize) -> &mut BTreeMap<(PrivateKey, CommonKey), Dist<N>> {
        &mut self.tables[t - 1]
    }

    pub fn action_dist(&self, t: usize, p: &PrivateKey, c: &CommonKey) -> Result<&Dist<N>> {
        self.tables[t - 1]
            .get(&(p.clone(), c.clone()))
            .ok_or(Error::UnreachableInfoRealization { t })
    }

    /// Builds a total strategy table over the full combinatorial
    /// information sets of `model` under `is`.
    pub fn from_fn(
        model: &TeamModel<N>,
        is: InfoStructure,
        mut f: impl FnMut(usize, &PrivateKey, &CommonKey) -> Dist<N>,
    ) -> Result<Self> {
        let mut tables = Vec::with_capacity(model.horizon());
        for t in 1..=model.horizon() {
            let mut table = BTreeMap::new();
            let commons = model.enumerate_common(is, t)?;
            for p in model.private_domain(is, t) {
                for c in &commons {
                    table.insert((p.clone(), c.clone()), f(t, &p, c));
                }
            }
            tables.push(table);
        }
        Ok(Strategy { tables })
    }

    pub fn to_f64(&self) -> Strategy<f64> {
        Strategy {
            tables: self
                .tables
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|(k, d)| (k.clone(), d.to_f64()))
                        .collect::<BTreeMap<_, _>>()
                })
                .collect(),
        }
    }

    /// The strategy an agent follows after relabeling the agents:
    /// `g'(p, c) = g(p, transpose(c))`.
    pub fn transposed(&self, model: &TeamModel<N>, is: InfoStructure) -> Strategy<N> {
        Strategy {
            tables: self
                .tables
                .iter()
                .map(|table| {
                    table
                        .iter()
                        .map(|((p, c), d)| {
                            ((p.clone(), model.transpose_common(is, c)), d.clone())
                        })
                        .collect::<BTreeMap<_, _>>()
                })
                .collect(),
        }
    }
}

/// An ordered pair of agent strategies. `symmetric` shares one table.
#[derive(Clone, Debug)]
pub struct StrategyPair<N: Scalar> {
    pub g1: Strategy<N>,
    pub g2: Strategy<N>,
}

impl<N: Scalar> StrategyPair<N> {
    pub fn new(g1: Strategy<N>, g2: Strategy<N>) -> Self {
        StrategyPair { g1, g2 }
    }

    pub fn symmetric(g: Strategy<N>) -> Self {
        StrategyPair {
            g1: g.clone(),
            g2: g,
        }
    }

    pub fn swapped(&self) -> Self {
        StrategyPair {
            g1: self.g2.clone(),
            g2: self.g1.clone(),
        }
    }

    pub fn agent(&self, i: usize) -> &Strategy<N> {
        match i {
            1 => &self.g1,
            2 => &self.g2,
            _ => panic!("agent index is 1 or 2"),
        }
    }

    pub fn to_f64(&self) -> StrategyPair<f64> {
        StrategyPair {
            g1: self.g1.to_f64(),
            g2: self.g2.to_f64(),
        }
    }
}
