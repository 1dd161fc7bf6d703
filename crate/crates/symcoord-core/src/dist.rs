//! Finite distributions and transition kernels.
//!
//! A [`Dist`] is a probability vector over an implicitly indexed support
//! `0..len`; label names live in [`crate::model::Space`]. The support
//! ordering is the declaration order of the model file and is part of the
//! contract: inverse-CDF sampling and lexicographic tie-breaking depend
//! on it.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Dist<N: Scalar> {
    weights: Vec<N>,
}

impl<N: Scalar> Dist<N> {
    /// Builds a distribution from explicit weights. Does not normalize:
    /// the weights must be non-negative and sum to one (exactly in
    /// rational mode, within 1e-12 in float mode).
    pub fn new(weights: Vec<N>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::LengthMismatch);
        }
        for (index, w) in weights.iter().enumerate() {
            if *w < N::zero() {
                return Err(Error::NegativeWeight { index });
            }
        }
        let sum = sum(&weights);
        if !sum.close_to(&N::one()) {
            return Err(Error::NotNormalized {
                sum: sum.to_string(),
            });
        }
        Ok(Dist { weights })
    }

    /// Point mass at `at` over a support of size `len`.
    pub fn point(len: usize, at: usize) -> Self {
        let mut weights = vec![N::zero(); len];
        weights[at] = N::one();
        Dist { weights }
    }

    pub fn uniform(len: usize) -> Self {
        let w = N::one() / N::from_int(len as i64);
        Dist {
            weights: vec![w; len],
        }
    }

    /// Normalizes non-negative weights; `EvidenceImpossible` if they sum
    /// to zero.
    pub fn from_unnormalized(weights: Vec<N>) -> Result<Self> {
        let total = sum(&weights);
        if total.is_zero() {
            return Err(Error::EvidenceImpossible);
        }
        Ok(Dist {
            weights: weights.into_iter().map(|w| w / total.clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> &N {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[N] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = &N> {
        self.weights.iter()
    }

    /// Indices with positive probability, in support order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| i)
    }

    /// Posterior `prior(x) * lik(x) / Z`. The likelihood values must be
    /// non-negative; `EvidenceImpossible` when the normalizer vanishes.
    pub fn bayes(&self, likelihood: &[N]) -> Result<Self> {
        debug_assert_eq!(likelihood.len(), self.weights.len());
        for (index, l) in likelihood.iter().enumerate() {
            if *l < N::zero() {
                return Err(Error::NegativeWeight { index });
            }
        }
        let weighted: Vec<N> = self
            .weights
            .iter()
            .zip(likelihood)
            .map(|(p, l)| p.clone() * l.clone())
            .collect();
        Dist::from_unnormalized(weighted)
    }

    /// Inverse-CDF sample over the fixed support ordering: the first label
    /// whose cumulative weight reaches `u`, for `u` in (0, 1].
    pub fn sample(&self, u: N) -> usize {
        debug_assert!(u > N::zero() && u <= N::one());
        let mut cum = N::zero();
        let mut last_positive = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if !w.is_zero() {
                last_positive = i;
            }
            cum += w.clone();
            if cum >= u {
                return i;
            }
        }
        // Float rounding can leave the final cumulative a hair below 1.
        last_positive
    }

    /// Total-variation distance, `max_A |P(A) - Q(A)| = L1/2`.
    pub fn tv_distance(&self, other: &Self) -> N {
        debug_assert_eq!(self.len(), other.len());
        let mut acc = N::zero();
        for (a, b) in self.weights.iter().zip(&other.weights) {
            acc += (a.clone() - b.clone()).abs();
        }
        acc / N::from_int(2)
    }

    pub fn memo_keys(&self) -> Vec<N::Key> {
        self.weights.iter().map(|w| w.memo_key()).collect()
    }

    pub fn to_f64(&self) -> Dist<f64> {
        Dist {
            weights: self.weights.iter().map(|w| w.to_f64()).collect(),
        }
    }
}

pub(crate) fn sum<N: Scalar>(weights: &[N]) -> N {
    let mut acc = N::zero();
    for w in weights {
        acc += w.clone();
    }
    acc
}

/// Total map from input tuples (mixed-radix over `shape`) to distributions.
#[derive(Clone, Debug)]
pub struct Kernel<N: Scalar> {
    shape: Vec<usize>,
    rows: Vec<Dist<N>>,
}

impl<N: Scalar> Kernel<N> {
    /// `rows` must contain one valid distribution per input tuple, flat in
    /// mixed-radix order (first shape component most significant).
    pub fn new(shape: Vec<usize>, rows: Vec<Dist<N>>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if rows.len() != expect {
            return Err(Error::Malformed {
                reason: alloc::format!(
                    "kernel needs {expect} rows for shape {shape:?}, got {}",
                    rows.len()
                ),
            });
        }
        Ok(Kernel { shape, rows })
    }

    pub fn flat_index(&self, input: &[usize]) -> usize {
        debug_assert_eq!(input.len(), self.shape.len());
        let mut idx = 0;
        for (i, &component) in input.iter().enumerate() {
            debug_assert!(component < self.shape[i]);
            idx = idx * self.shape[i] + component;
        }
        idx
    }

    pub fn row(&self, input: &[usize]) -> &Dist<N> {
        &self.rows[self.flat_index(input)]
    }

    pub fn rows(&self) -> &[Dist<N>] {
        &self.rows
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn to_f64(&self) -> Kernel<f64> {
        Kernel {
            shape: self.shape.clone(),
            rows: self.rows.iter().map(Dist::to_f64).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rat;

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn make_dist_examples() {
        // Uniform Bernoulli(1/2).
        let d = Dist::new(vec![r(1, 2), r(1, 2)]).unwrap();
        assert_eq!(d.get(0), &r(1, 2));
        // Point mass at 0.
        let d = Dist::new(vec![r(1, 1), r(0, 1)]).unwrap();
        assert_eq!(d.get(0), &r(1, 1));
        // Sum 0.9 is rejected, not normalized.
        let err = Dist::new(vec![r(3, 10), r(6, 10)]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
        // Negative weight.
        let err = Dist::new(vec![r(-1, 2), r(3, 2)]).unwrap_err();
        assert_eq!(err, Error::NegativeWeight { index: 0 });
    }

    #[test]
    fn bayes_examples() {
        // Constant likelihood keeps the prior.
        let prior: Dist<Rat> = Dist::uniform(2);
        let post = prior.bayes(&[r(1, 1), r(1, 1)]).unwrap();
        assert_eq!(post, prior);
        // Hard evidence collapses to a point mass.
        let post = prior.bayes(&[r(1, 1), r(0, 1)]).unwrap();
        assert_eq!(post, Dist::point(2, 0));
        // Hand-computed oracle: prior (1/4,3/4), lik (2,1)
        // -> (1/4*2, 3/4*1)/Z = (1/2, 3/4)/(5/4) = (2/5, 3/5).
        let prior = Dist::new(vec![r(1, 4), r(3, 4)]).unwrap();
        let post = prior.bayes(&[r(2, 1), r(1, 1)]).unwrap();
        assert_eq!(post.weights(), &[r(2, 5), r(3, 5)]);
        // Impossible evidence.
        let err = prior.bayes(&[r(0, 1), r(0, 1)]).unwrap_err();
        assert_eq!(err, Error::EvidenceImpossible);
    }

    #[test]
    fn sample_is_inverse_cdf_over_declared_order() {
        let d: Dist<f64> = Dist::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(d.sample(0.3), 0);
        assert_eq!(d.sample(0.7), 1);
        assert_eq!(d.sample(0.5), 0);
        let point: Dist<f64> = Dist::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(point.sample(1e-12), 0);
        assert_eq!(point.sample(1.0), 0);
    }

    #[test]
    fn empirical_frequencies_match_within_four_over_sqrt_n() {
        use rand::{Rng, SeedableRng};
        let dists: [Dist<f64>; 3] = [
            Dist::new(vec![0.5, 0.5]).unwrap(),
            Dist::new(vec![0.1, 0.2, 0.7]).unwrap(),
            Dist::new(vec![0.25, 0.0, 0.75]).unwrap(),
        ];
        let n = 100_000usize;
        let bound = 4.0 / (n as f64).sqrt();
        for (which, d) in dists.iter().enumerate() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41 + which as u64);
            let mut counts = vec![0usize; d.len()];
            for _ in 0..n {
                let u: f64 = 1.0 - rng.gen::<f64>();
                counts[d.sample(u)] += 1;
            }
            for (i, &c) in counts.iter().enumerate() {
                let freq = c as f64 / n as f64;
                assert!(
                    (freq - d.get(i)).abs() <= bound,
                    "dist {which} coord {i}: {freq} vs {}",
                    d.get(i)
                );
            }
        }
    }

    #[test]
    fn tv_distance_halves_l1() {
        let a = Dist::new(vec![r(5, 12), r(7, 12)]).unwrap();
        let b = Dist::new(vec![r(7, 20), r(13, 20)]).unwrap();
        assert_eq!(a.tv_distance(&b), r(1, 15));
    }
}
