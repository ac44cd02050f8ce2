//! Product-space bookkeeping and total-Sz sectors.
//!
//! Full-space indices are mixed-radix numbers in the local indices, with
//! site 0 the most significant digit (lexicographic order, first site
//! slowest).

use crate::spin::SpinLength;

#[derive(Clone, Debug, PartialEq)]
pub struct ProductBasis {
    spins: Vec<SpinLength>,
    strides: Vec<usize>,
    total_dim: usize,
    sector: Option<Sector>,
}

#[derive(Clone, Debug, PartialEq)]
struct Sector {
    two_m: i64,
    /// Sorted full-space indices of the sector states.
    states: Vec<usize>,
}

impl ProductBasis {
    pub fn full(spins: &[SpinLength]) -> Self {
        let mut strides = vec![1usize; spins.len()];
        for i in (0..spins.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * spins[i + 1].dim();
        }
        let total_dim = spins.iter().map(|s| s.dim()).product();
        Self {
            spins: spins.to_vec(),
            strides,
            total_dim,
            sector: None,
        }
    }

    /// States with total `2M = two_m`; may be empty.
    pub fn sector(spins: &[SpinLength], two_m: i64) -> Self {
        let mut basis = Self::full(spins);
        let states = (0..basis.total_dim)
            .filter(|&f| basis.two_m_of(f) == two_m)
            .collect();
        basis.sector = Some(Sector { two_m, states });
        basis
    }

    /// Every non-empty sector, ordered by ascending `2M`.
    pub fn sectors(spins: &[SpinLength]) -> Vec<Self> {
        let full = Self::full(spins);
        let max: i64 = spins.iter().map(|s| s.twice() as i64).sum();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max as usize + 1];
        for f in 0..full.total_dim {
            // 2M ranges over -max..=max in steps of 2
            let k = (full.two_m_of(f) + max) / 2;
            buckets[k as usize].push(f);
        }
        buckets
            .into_iter()
            .enumerate()
            .filter(|(_, states)| !states.is_empty())
            .map(|(k, states)| {
                let mut b = full.clone();
                b.sector = Some(Sector {
                    two_m: 2 * k as i64 - max,
                    states,
                });
                b
            })
            .collect()
    }

    pub fn spins(&self) -> &[SpinLength] {
        &self.spins
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn dim(&self) -> usize {
        match &self.sector {
            Some(s) => s.states.len(),
            None => self.total_dim,
        }
    }

    pub fn two_m(&self) -> Option<i64> {
        self.sector.as_ref().map(|s| s.two_m)
    }

    pub fn is_sector(&self) -> bool {
        self.sector.is_some()
    }

    pub fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// Full-space index of basis state `i`.
    pub fn full_index(&self, i: usize) -> usize {
        match &self.sector {
            Some(s) => s.states[i],
            None => i,
        }
    }

    /// Basis position of full-space index `f`, if it belongs to this basis.
    pub fn index_of(&self, f: usize) -> Option<usize> {
        match &self.sector {
            Some(s) => s.states.binary_search(&f).ok(),
            None => (f < self.total_dim).then_some(f),
        }
    }

    /// Local index of `site` in full-space state `f`.
    pub fn digit(&self, f: usize, site: usize) -> usize {
        (f / self.strides[site]) % self.spins[site].dim()
    }

    pub fn two_m_of(&self, f: usize) -> i64 {
        (0..self.spins.len())
            .map(|site| self.spins[site].two_m(self.digit(f, site)))
            .sum()
    }

    /// Same site spins without the sector restriction.
    pub fn to_full(&self) -> Self {
        Self::full(&self.spins)
    }
}
