//! Deterministic pairwise summation.
//!
//! All norm and series accumulations in this crate reduce through a pairwise
//! tree over a canonically ordered index set, so results are bit-identical
//! across runs and independent of how callers parallelize.

use std::ops::Add;

use num_traits::Zero;

const LEAF: usize = 32;

/// Pairwise-tree sum of a slice in its given order.
pub(crate) fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Zero + Add<Output = T>,
{
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Streaming pairwise accumulator (binary-counter scheme): equivalent to
/// `pairwise_sum` over the pushed sequence without materializing it.
pub(crate) struct PairwiseBuffer<T> {
    levels: Vec<Option<T>>,
    leaf: Vec<T>,
}

impl<T> PairwiseBuffer<T>
where
    T: Copy + Zero + Add<Output = T>,
{
    pub(crate) fn new() -> Self {
        Self {
            levels: Vec::new(),
            leaf: Vec::with_capacity(LEAF),
        }
    }

    pub(crate) fn push(&mut self, x: T) {
        self.leaf.push(x);
        if self.leaf.len() == LEAF {
            let mut s = T::zero();
            for &v in &self.leaf {
                s = s + v;
            }
            self.leaf.clear();
            self.carry(s);
        }
    }

    fn carry(&mut self, mut s: T) {
        for slot in self.levels.iter_mut() {
            match slot.take() {
                Some(prev) => s = prev + s,
                None => {
                    *slot = Some(s);
                    return;
                }
            }
        }
        self.levels.push(Some(s));
    }

    pub(crate) fn finish(self) -> T {
        let mut acc = T::zero();
        for &v in &self.leaf {
            acc = acc + v;
        }
        for v in self.levels.into_iter().flatten() {
            acc = acc + v;
        }
        acc
    }
}
