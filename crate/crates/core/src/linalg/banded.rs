//! Sparse Hermitian pencils from P1 assembly: reverse Cuthill–McKee
//! ordering into a band, Sylvester inertia by unpivoted `LDLᴴ`, and
//! bisection for the lowest eigenvalues.

use std::collections::VecDeque;

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::scalar::{CMat, Real, C};

/// Reverse Cuthill–McKee order of the nonzero pattern of `a + b`.
pub fn rcm_order<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && (a[(i, j)] != C::default() || b[(i, j)] != C::default())).collect())
        .collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !seen[i]).min_by_key(|&i| adj[i].len()).expect("unvisited node");
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            next.sort_by_key(|&w| adj[w].len());
            for w in next {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// A Hermitian pencil `(K, M)` in lower band storage under a permutation.
#[derive(Clone, Debug)]
pub struct BandedPencil<T: Real> {
    n: usize,
    bw: usize,
    k: Vec<C<T>>,
    m: Vec<C<T>>,
    scale: T,
}

impl<T: Real> BandedPencil<T> {
    pub fn new(k: &CMat<T>, m: &CMat<T>) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n || m.shape() != k.shape() {
            return Err(Error::DimensionMismatch("pencil blocks must be square and equal".into()));
        }
        let perm = rcm_order(k, m);
        let mut bw = 0;
        for i in 0..n {
            for j in 0..i {
                let (pi, pj) = (perm[i], perm[j]);
                if k[(pi, pj)] != C::default() || m[(pi, pj)] != C::default() {
                    bw = bw.max(i - j);
                }
            }
        }
        let w = bw + 1;
        let mut kb = vec![C::default(); n * w];
        let mut mb = vec![C::default(); n * w];
        let mut scale = T::zero();
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                kb[i * w + (i - j)] = k[(perm[i], perm[j])];
                mb[i * w + (i - j)] = m[(perm[i], perm[j])];
                scale = scale.max(k[(perm[i], perm[j])].modulus());
            }
        }
        Ok(Self { n, bw, k: kb, m: mb, scale: scale.max(T::one()) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Number of eigenvalues strictly below `sigma`: the negative pivots of
    /// `K - σM`.
    pub fn count_below(&self, sigma: T) -> usize {
        let w = self.bw + 1;
        let mut a: Vec<C<T>> = self.k.iter().zip(&self.m).map(|(k, m)| *k - *m * sigma).collect();
        let tiny = T::eps() * self.scale * (T::one() + sigma.abs());
        let mut neg = 0;
        for c in 0..self.n {
            let mut d = a[c * w].re;
            if d.abs() < tiny {
                d = tiny;
            }
            if d < T::zero() {
                neg += 1;
            }
            let hi = (c + self.bw).min(self.n - 1);
            for i in c + 1..=hi {
                let lic = a[i * w + (i - c)];
                if lic == C::default() {
                    continue;
                }
                let f = lic / d;
                for j in c + 1..=i {
                    let ljc = a[j * w + (j - c)];
                    a[i * w + (i - j)] -= f * ljc.conj();
                }
            }
        }
        neg
    }

    /// The lowest `count` eigenvalues, ascending, by bisection on inertia.
    pub fn lowest(&self, count: usize) -> Vec<T> {
        let count = count.min(self.n);
        if count == 0 {
            return Vec::new();
        }
        let two = T::lit(2.0);
        let mut lo = -T::one();
        while self.count_below(lo) > 0 {
            lo = lo * two;
        }
        let mut hi = T::one();
        while self.count_below(hi) < count {
            hi = hi * two;
        }
        (0..count)
            .map(|i| {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let mid = (a + b) / two;
                    if b - a <= T::lit(4.0) * T::eps() * (T::one() + mid.abs()) {
                        break;
                    }
                    if self.count_below(mid) > i {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                (a + b) / two
            })
            .collect()
    }
}
