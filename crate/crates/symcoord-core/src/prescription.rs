//! Prescriptions: maps from a private-information domain to action
//! distributions, their finite candidate sets, and the history /
//! current-state mappings used on i.i.d.-uncontrolled models.
//!
//! Candidate enumeration is lexicographic by domain element, then by
//! action-weight vector; that order is the tie-breaking contract for the
//! optimizer. Grid rows are exact multiples of `1/K` in rational mode.

use alloc::vec::Vec;

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_CANDIDATE_BUDGET: u64 = 1_000_000;

/// One action distribution per private-information domain element; the
/// domain order is the model's private-domain order.
#[derive(Clone, Debug, PartialEq)]
pub struct Prescription<N: Scalar> {
    rows: Vec<Dist<N>>,
}

impl<N: Scalar> Prescription<N> {
    pub fn new(rows: Vec<Dist<N>>) -> Self {
        Prescription { rows }
    }

    pub fn uniform(domain_len: usize, n_actions: usize) -> Self {
        Prescription {
            rows: alloc::vec![Dist::uniform(n_actions); domain_len],
        }
    }

    /// Point-mass prescription realizing the map `p -> action[p]`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        Prescription {
            rows: actions
                .iter()
                .map(|&u| Dist::point(n_actions, u))
                .collect(),
        }
    }

    pub fn domain_len(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, p: usize) -> &Dist<N> {
        &self.rows[p]
    }

    pub fn rows(&self) -> &[Dist<N>] {
        &self.rows
    }

    pub fn with_row(&self, p: usize, row: Dist<N>) -> Self {
        let mut rows = self.rows.clone();
        rows[p] = row;
        Prescription { rows }
    }

    /// Lexicographic comparison by domain element, then weight vector.
    /// Total for rational scalars and for the grid values used here.
    pub fn lex_cmp(&self, other: &Self) -> core::cmp::Ordering {
        use core::cmp::Ordering;
        for (a, b) in self.rows.iter().zip(other.rows.iter()) {
            for (wa, wb) in a.weights().iter().zip(b.weights()) {
                match wa.partial_cmp(wb) {
                    Some(Ordering::Equal) => continue,
                    Some(ord) => return ord,
                    None => return Ordering::Equal,
                }
            }
        }
        Ordering::Equal
    }
}

/// Candidate-set description for the prescription optimizer: all weights
/// are multiples of `1/resolution`, the deterministic tables are included
/// on request (they are grid points whenever `resolution >= 1`), and an
/// optional coordinate-descent refinement polishes the grid winner.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub resolution: u32,
    pub include_deterministic: bool,
    pub refinement: Refinement,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Refinement {
    None,
    /// `steps` shrink levels; level `s` searches row moves of size
    /// `1 / (resolution * shrink^s)`.
    CoordinateDescent { steps: u32, shrink: u32 },
}

impl GridSpec {
    pub fn grid(resolution: u32) -> Self {
        GridSpec {
            resolution,
            include_deterministic: true,
            refinement: Refinement::None,
        }
    }

    pub fn deterministic_only() -> Self {
        GridSpec::grid(1)
    }
}

impl Default for GridSpec {
    /// K = 20 keeps 1/2 and 1/4 on the grid.
    fn default() -> Self {
        GridSpec::grid(20)
    }
}

/// All `n_actions^domain_len` point-mass prescriptions, lexicographic in
/// the action tuple (equivalently in the weight-vector order).
pub fn deterministic_prescriptions<N: Scalar>(
    domain_len: usize,
    n_actions: usize,
    budget: u64,
) -> Result<Vec<Prescription<N>>> {
    let count = checked_pow(n_actions as u64, domain_len as u32);
    match count {
        Some(c) if c <= budget => {}
        _ => {
            return Err(Error::BudgetExceeded {
                what: "deterministic prescriptions",
                needed: count.unwrap_or(u64::MAX),
                budget,
            })
        }
    }
    let tuples = crate::model::enumerate_tuples(&alloc::vec![n_actions; domain_len]);
    Ok(tuples
        .iter()
        .map(|actions| Prescription::deterministic(actions, n_actions))
        .collect())
}

/// Compositions of `k` into `parts` non-negative integers, lexicographic.
fn compositions(k: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if k == 0 {
            alloc::vec![alloc::vec![]]
        } else {
            alloc::vec![]
        };
    }
    if parts == 1 {
        return alloc::vec![alloc::vec![k]];
    }
    let mut out = Vec::new();
    for first in 0..=k {
        for mut rest in compositions(k - first, parts - 1) {
            let mut c = alloc::vec![first];
            c.append(&mut rest);
            out.push(c);
        }
    }
    out
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// Simplex-grid prescriptions at resolution `K`: the product over the
/// domain of all compositions of `K` into `n_actions` parts (each part
/// divided by `K`), merged with the deterministic set when requested and
/// deduplicated. `K = 1` yields exactly the deterministic set.
pub fn prescription_grid<N: Scalar>(
    domain_len: usize,
    n_actions: usize,
    spec: &GridSpec,
    budget: u64,
) -> Result<Vec<Prescription<N>>> {
    assert!(spec.resolution >= 1, "grid resolution must be positive");
    let k = spec.resolution;
    let rows_per_element = binomial((k as u64) + (n_actions as u64) - 1, (n_actions as u64) - 1);
    let count = rows_per_element.and_then(|r| checked_pow(r, domain_len as u32));
    match count {
        Some(c) if c <= budget => {}
        _ => {
            return Err(Error::BudgetExceeded {
                what: "prescription grid",
                needed: count.unwrap_or(u64::MAX),
                budget,
            })
        }
    }
    let rows: Vec<Dist<N>> = compositions(k, n_actions)
        .into_iter()
        .map(|c| {
            Dist::new(
                c.into_iter()
                    .map(|num| N::from_ratio(num as i64, k as i64))
                    .collect(),
            )
            .expect("composition rows are normalized")
        })
        .collect();
    let choices = crate::model::enumerate_tuples(&alloc::vec![rows.len(); domain_len]);
    let mut out: Vec<Prescription<N>> = choices
        .iter()
        .map(|choice| Prescription::new(choice.iter().map(|&i| rows[i].clone()).collect()))
        .collect();
    if spec.include_deterministic && k > 1 {
        // Point-mass rows are the k_i = K compositions, already on the
        // grid; the merge below only deduplicates.
        out.extend(deterministic_prescriptions(domain_len, n_actions, budget)?);
    }
    out.sort_by(|a, b| a.lex_cmp(b));
    out.dedup_by(|a, b| a.lex_cmp(b) == core::cmp::Ordering::Equal);
    Ok(out)
}

/// Projects a history prescription down to a current-state prescription
/// by averaging histories with i.i.d. weights `prod_s alpha(x_s)`:
/// the performance-preserving direction of the history/current-state
/// correspondence on i.i.d.-uncontrolled models. Rows renormalize by
/// construction; states with `alpha(x) = 0` get a uniform row.
pub fn project_b_to_c<N: Scalar>(
    gamma_b: &Prescription<N>,
    alpha: &Dist<N>,
    t: usize,
) -> Prescription<N> {
    let nx = alpha.len();
    let n_actions = if gamma_b.domain_len() > 0 {
        gamma_b.row(0).len()
    } else {
        1
    };
    debug_assert_eq!(gamma_b.domain_len(), nx.pow(t as u32));
    let prefixes = crate::model::enumerate_tuples(&alloc::vec![nx; t - 1]);
    let mut rows = Vec::with_capacity(nx);
    for x in 0..nx {
        if alpha.get(x).is_zero() {
            rows.push(Dist::uniform(n_actions));
            continue;
        }
        let mut w = alloc::vec![N::zero(); n_actions];
        for prefix in &prefixes {
            let mut weight = N::one();
            for &s in prefix {
                weight = weight * alpha.get(s).clone();
            }
            if weight.is_zero() {
                continue;
            }
            let mut h = prefix.clone();
            h.push(x);
            let idx = h.iter().fold(0usize, |acc, &v| acc * nx + v);
            for u in 0..n_actions {
                w[u] += weight.clone() * gamma_b.row(idx).get(u).clone();
            }
        }
        rows.push(Dist::new(w).expect("projection rows stay normalized"));
    }
    Prescription::new(rows)
}

/// History-blind lift `gamma_b(x_{1:t}) = gamma_c(x_t)`; a section of
/// [`project_b_to_c`] for any alpha.
pub fn lift_c_to_b<N: Scalar>(gamma_c: &Prescription<N>, t: usize) -> Prescription<N> {
    let nx = gamma_c.domain_len();
    let histories = crate::model::enumerate_tuples(&alloc::vec![nx; t]);
    Prescription::new(
        histories
            .iter()
            .map(|h| gamma_c.row(*h.last().unwrap()).clone())
            .collect(),
    )
}
