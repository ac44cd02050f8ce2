//! Reference implementations for the integration tests. Everything here is
//! built from scratch (explicit configurations, ladder-operator matrix
//! elements) and only borrows faer for the final dense eigenvalues.

#![allow(dead_code)]

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Configuration: one `2m` per site.
type Config = Vec<i64>;

pub struct DenseModel {
    pub two_s: Vec<i64>,
    pub bonds: Vec<(usize, usize)>,
    /// `(site, [bx, bz])`
    pub fields: Vec<(usize, [f64; 2])>,
}

impl DenseModel {
    pub fn ring(two_s: &[i64]) -> Self {
        let n = two_s.len();
        Self {
            two_s: two_s.to_vec(),
            bonds: (0..n).map(|i| (i, (i + 1) % n)).collect(),
            fields: Vec::new(),
        }
    }

    pub fn chain(two_s: &[i64]) -> Self {
        let n = two_s.len();
        Self {
            two_s: two_s.to_vec(),
            bonds: (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            fields: Vec::new(),
        }
    }

    pub fn with_field(mut self, site: usize, bx: f64, bz: f64) -> Self {
        self.fields.push((site, [bx, bz]));
        self
    }

    /// All configurations, site 0 slowest, `m` descending on each site.
    pub fn configs(&self) -> Vec<Config> {
        let mut out: Vec<Config> = vec![vec![]];
        for &ts in &self.two_s {
            let mut next = Vec::new();
            for c in &out {
                let mut m = ts;
                while m >= -ts {
                    let mut d = c.clone();
                    d.push(m);
                    next.push(d);
                    m -= 2;
                }
            }
            out = next;
        }
        out
    }

    /// `H|c>` as a list of (configuration, amplitude).
    pub fn apply(&self, c: &Config) -> Vec<(Config, f64)> {
        let mut out = Vec::new();
        let mut diag = 0.0;
        for &(i, j) in &self.bonds {
            let (mi, mj) = (c[i] as f64 / 2.0, c[j] as f64 / 2.0);
            diag += mi * mj;
            let (si, sj) = (self.two_s[i] as f64 / 2.0, self.two_s[j] as f64 / 2.0);
            // s+_i s-_j / 2 and its conjugate
            if c[i] < self.two_s[i] && c[j] > -self.two_s[j] {
                let amp = 0.5
                    * (si * (si + 1.0) - mi * (mi + 1.0)).sqrt()
                    * (sj * (sj + 1.0) - mj * (mj - 1.0)).sqrt();
                let mut d = c.clone();
                d[i] += 2;
                d[j] -= 2;
                out.push((d, amp));
            }
            if c[i] > -self.two_s[i] && c[j] < self.two_s[j] {
                let amp = 0.5
                    * (si * (si + 1.0) - mi * (mi - 1.0)).sqrt()
                    * (sj * (sj + 1.0) - mj * (mj + 1.0)).sqrt();
                let mut d = c.clone();
                d[i] -= 2;
                d[j] += 2;
                out.push((d, amp));
            }
        }
        for &(site, [bx, bz]) in &self.fields {
            let m = c[site] as f64 / 2.0;
            let s = self.two_s[site] as f64 / 2.0;
            diag += bz * m;
            if bx != 0.0 {
                // s_x = (s+ + s-) / 2
                if c[site] < self.two_s[site] {
                    let mut d = c.clone();
                    d[site] += 2;
                    out.push((d, 0.5 * bx * (s * (s + 1.0) - m * (m + 1.0)).sqrt()));
                }
                if c[site] > -self.two_s[site] {
                    let mut d = c.clone();
                    d[site] -= 2;
                    out.push((d, 0.5 * bx * (s * (s + 1.0) - m * (m - 1.0)).sqrt()));
                }
            }
        }
        out.push((c.clone(), diag));
        out
    }

    fn index(&self, c: &Config) -> usize {
        let mut f = 0;
        for (i, &ts) in self.two_s.iter().enumerate() {
            f = f * (ts as usize + 1) + ((ts - c[i]) / 2) as usize;
        }
        f
    }

    /// Dense matrix, column-major.
    pub fn matrix(&self) -> (usize, Vec<f64>) {
        let configs = self.configs();
        let n = configs.len();
        let mut h = vec![0.0; n * n];
        for (col, c) in configs.iter().enumerate() {
            for (d, amp) in self.apply(c) {
                h[self.index(&d) + col * n] += amp;
            }
        }
        (n, h)
    }

    pub fn spectrum(&self) -> Vec<f64> {
        let (n, h) = self.matrix();
        eigvalsh(n, &h)
    }

    pub fn ground_energy(&self) -> f64 {
        self.spectrum()[0]
    }

    /// Lowest eigenvalue within `M = 0`, split further by the global flip
    /// `m -> -m` (the model must be field-free and have no `m = 0`
    /// configuration fixed by the flip, i.e. half-integer spins).
    pub fn flip_sector_ground(&self) -> f64 {
        assert!(self.fields.is_empty());
        let zero: Vec<Config> = self
            .configs()
            .into_iter()
            .filter(|c| c.iter().sum::<i64>() == 0)
            .collect();
        let flip = |c: &Config| -> Config { c.iter().map(|m| -m).collect() };
        let reps: Vec<Config> = zero.iter().filter(|c| **c > flip(c)).cloned().collect();
        assert_eq!(2 * reps.len(), zero.len(), "a configuration is its own flip");
        let lookup: std::collections::HashMap<Config, usize> =
            reps.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let n = reps.len();
        let mut best = f64::INFINITY;
        for parity in [1.0, -1.0] {
            let mut h = vec![0.0; n * n];
            for (col, c) in reps.iter().enumerate() {
                for (d, amp) in self.apply(c) {
                    if let Some(&row) = lookup.get(&d) {
                        h[row + col * n] += amp;
                    } else {
                        let row = lookup[&flip(&d)];
                        h[row + col * n] += parity * amp;
                    }
                }
            }
            best = best.min(eigvalsh(n, &h)[0]);
        }
        best
    }
}

pub fn eigvalsh(n: usize, a: &[f64]) -> Vec<f64> {
    let m = Mat::from_fn(n, n, |i, j| a[i + j * n]);
    let mut v = m.self_adjoint_eigenvalues(Side::Lower).expect("dense eigenvalues");
    v.sort_by(f64::total_cmp);
    v
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` for a complex state given as (re, im) parts and a
/// real symmetric column-major `H`.
pub fn rayleigh(n: usize, h: &[f64], re: &[f64], im: &[f64]) -> f64 {
    let mut num = 0.0;
    for j in 0..n {
        let (mut hr, mut hi) = (0.0, 0.0);
        for i in 0..n {
            hr += h[i + j * n] * re[i];
            hi += h[i + j * n] * im[i];
        }
        num += re[j] * hr + im[j] * hi;
    }
    let den: f64 = re.iter().chain(im).map(|x| x * x).sum();
    num / den
}

/// Ground energy of an open spin-1/2 chain of `n` sites.
pub fn qubit_chain_e0(n: usize) -> f64 {
    DenseModel::chain(&vec![1; n]).ground_energy()
}

/// Random rings and chains with at most 4096 states, as `2s` lists.
pub fn random_instances(count: usize, seed: u64) -> Vec<(spinring::hamiltonian::Topology, Vec<i64>)> {
    use spinring::hamiltonian::Topology;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.random_range(2..=9);
        let two_s: Vec<i64> = (0..n).map(|_| rng.random_range(1..=5)).collect();
        let dim: i64 = two_s.iter().map(|t| t + 1).product();
        if dim > 4096 {
            continue;
        }
        let topology = if n >= 3 && rng.random_bool(0.5) {
            Topology::Ring
        } else {
            Topology::Chain
        };
        out.push((topology, two_s));
    }
    out
}
