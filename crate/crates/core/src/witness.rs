//! Energy thresholds that certify entanglement, and the quantities used to
//! check the underlying bound numerically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::ProductBasis;
use crate::eigensolver::{block_spectrum, ground_state, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_complement, build_hamiltonian, build_subsystem, dress_with_fields, FieldTerm, SiteArc,
    SpinSystem, Subsystem, Topology,
};
use crate::operator::{build_operator, total_spin_squared, Scalar, SparseHermitianOperator};
use crate::spin::SpinLength;

/// `E_bs^k`: lowest energy of a product state in which site `k` is
/// factored out. The site is then fully polarized and acts on its
/// neighbours as a field of strength `J s_k`.
pub fn single_site_threshold(system: &SpinSystem, k: usize, opts: &SolverOptions) -> Result<f64> {
    let arc = SiteArc::new(k, 1);
    let rest = build_complement(system, arc)?;
    let strength = system.coupling() * system.spins()[k].value();
    let fields: Vec<FieldTerm> = system
        .neighbours(k)
        .into_iter()
        .map(|nb| {
            let local = rest.local_index(nb).expect("neighbour lies in the complement");
            FieldTerm::z(local, strength)
        })
        .collect();
    let op = dress_with_fields(&rest, &fields)?;
    Ok(ground_state(&op, opts)?.energy)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRow {
    /// Site number in the original (undefected) model.
    pub site: usize,
    pub ebs: f64,
    /// `ebs - e0`
    pub cost: f64,
    /// The site carries no spin; it is trivially separable and its row is
    /// `ebs = e0`.
    pub spinless: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTable {
    pub label: String,
    pub e0: f64,
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdTable {
    pub fn row(&self, site: usize) -> Option<&ThresholdRow> {
        self.rows.iter().find(|r| r.site == site)
    }

    /// Rows of sites that carry a spin.
    pub fn active(&self) -> impl Iterator<Item = &ThresholdRow> {
        self.rows.iter().filter(|r| !r.spinless)
    }

    /// Site with the lowest threshold (first one on ties).
    pub fn argmin(&self) -> Option<usize> {
        self.active()
            .fold(None::<&ThresholdRow>, |best, r| match best {
                Some(b) if b.ebs <= r.ebs => Some(b),
                _ => Some(r),
            })
            .map(|r| r.site)
    }
}

/// Thresholds of every site of `system`.
pub fn threshold_table(system: &SpinSystem, label: &str, opts: &SolverOptions) -> Result<ThresholdTable> {
    let e0 = ground_state(&build_hamiltonian(system)?, opts)?.energy;
    let n = system.n_sites();
    let ebs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| single_site_threshold(system, k, opts))
        .collect::<Result<_>>()?;
    let mut rows: Vec<ThresholdRow> = (0..n)
        .map(|k| ThresholdRow {
            site: system.labels()[k],
            ebs: ebs[k],
            cost: ebs[k] - e0,
            spinless: false,
        })
        .collect();
    rows.sort_by_key(|r| r.site);
    Ok(ThresholdTable {
        label: label.to_string(),
        e0,
        rows,
    })
}

/// `Cr7M` name of a substitution into the eight-membered s = 3/2 ring.
pub fn molecule_label(base: SpinLength, n: usize, defect: SpinLength) -> String {
    let element = match defect.twice() {
        0 => Some("Zn"),
        1 => Some("Cu"),
        2 => Some("Ni"),
        3 => Some("Cr"),
        4 => Some("Fe"),
        5 => Some("Mn"),
        _ => None,
    };
    match element {
        Some("Cr") if base == SpinLength::THREE_HALVES && n == 8 => "Cr8".to_string(),
        Some(e) if base == SpinLength::THREE_HALVES && n == 8 => format!("Cr7{e}"),
        _ => format!("N{n}_s{base}_sM{defect}"),
    }
}

/// One threshold table per substitution of `defect_site` in a homogeneous
/// ring. A spinless substitution opens the ring; its own row then reads
/// `ebs = e0`.
pub fn defect_series(
    base: SpinLength,
    n: usize,
    defect_site: usize,
    defect_spins: &[SpinLength],
    opts: &SolverOptions,
) -> Vec<Result<ThresholdTable>> {
    defect_spins
        .iter()
        .map(|&sm| {
            let ring = SpinSystem::uniform(Topology::Ring, n, base)?;
            let system = ring.with_defect(defect_site, sm)?;
            let label = molecule_label(base, n, sm);
            let mut table = threshold_table(&system, &label, opts)?;
            if sm.is_zero() {
                table.rows.push(ThresholdRow {
                    site: defect_site,
                    ebs: table.e0,
                    cost: 0.0,
                    spinless: true,
                });
                table.rows.sort_by_key(|r| r.site);
            }
            Ok(table)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub measured_energy: f64,
    /// Sites certified to be entangled with the rest of the system.
    pub sites: Vec<usize>,
    pub multipartite: bool,
    /// False when the energy is not below any threshold: nothing follows.
    pub conclusive: bool,
}

/// Site `k` is certified iff `measured < E_bs^k`; multipartite entanglement
/// iff `measured` is below the global biseparable minimum and every site
/// threshold.
pub fn verdict(measured: f64, table: &ThresholdTable, global_ebs: f64) -> Verdict {
    let active: Vec<&ThresholdRow> = table.active().collect();
    let sites: Vec<usize> = active
        .iter()
        .filter(|r| measured < r.ebs)
        .map(|r| r.site)
        .collect();
    let multipartite = measured < global_ebs && sites.len() == active.len();
    Verdict {
        measured_energy: measured,
        conclusive: !sites.is_empty(),
        sites,
        multipartite,
    }
}

/// `sqrt(sum_m m^2 / (2s+1)) = sqrt(s(s+1)/3)`.
pub fn eta_s(s: SpinLength) -> Result<f64> {
    if s.is_zero() {
        return Err(Error::InvalidSpin("eta_s needs s > 0".into()));
    }
    Ok((s.casimir() / 3.0).sqrt())
}

/// `f = 1 + prod_{x in {xa, xb}} (-1)^x [1 - x(x+1) / (2 s(s+1))]`.
pub fn f_factor(xa: u32, xb: u32, s: SpinLength) -> Result<f64> {
    if s.is_zero() {
        return Err(Error::InvalidSpin("f needs s > 0".into()));
    }
    let max = s.twice();
    if xa > max || xb > max {
        return Err(Error::InvalidArgument(format!(
            "x must lie in 0..={max} for s = {s}"
        )));
    }
    let c = s.casimir();
    let bracket = |x: u32| {
        let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
        let x = x as f64;
        sign * (1.0 - x * (x + 1.0) / (2.0 * c))
    };
    Ok(1.0 + bracket(xa) * bracket(xb))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NotEigenstate {
    /// Smallest `<H^2> - <H>^2` over the sampled singlet products.
    MinVariance(f64),
    /// The subsystem has half-integer total spin and no singlet.
    NoSinglet(Side),
}

/// Orthonormal basis (columns, row-major per vector) of the `S = 0`
/// subspace of `sub`, within its `M = 0` sector.
fn singlet_basis(sub: &Subsystem, limit: usize) -> Result<(ProductBasis, Vec<Vec<f64>>)> {
    let basis = ProductBasis::sector(sub.spins(), 0);
    let n = basis.dim();
    if n > limit {
        return Err(Error::DenseLimit { dim: n, limit });
    }
    let s2 = match total_spin_squared(&basis)? {
        SparseHermitianOperator::Real(m) => m,
        SparseHermitianOperator::Complex(_) => unreachable!("S^2 is real"),
    };
    let (vals, vecs) = f64::dense_eigh(n, &s2.to_dense())?;
    let singlets = (0..n)
        .filter(|&k| vals[k].abs() < 1e-8)
        .map(|k| vecs[k * n..(k + 1) * n].to_vec())
        .collect();
    Ok((basis, singlets))
}

fn random_combination(rng: &mut ChaCha8Rng, vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut out = vec![0.0; dim];
    for v in vectors {
        let c: f64 = StandardNormal.sample(rng);
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    let nrm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.iter_mut().for_each(|x| *x /= nrm);
    out
}

/// Samples products of random `S_A = 0` and `S_B = 0` states and returns
/// the smallest energy variance found. A positive value shows that none of
/// them is an eigenstate of `H`.
pub fn verify_not_eigenstate(
    system: &SpinSystem,
    arc: SiteArc,
    samples: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<NotEigenstate> {
    let a = build_subsystem(system, arc)?;
    let b = build_complement(system, arc)?;
    for (side, sub) in [(Side::A, &a), (Side::B, &b)] {
        let two_s: u32 = sub.spins().iter().map(|s| s.twice()).sum();
        if two_s % 2 == 1 {
            return Ok(NotEigenstate::NoSinglet(side));
        }
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let full = ProductBasis::full(system.spins());
    if full.dim() > opts.dense_limit * 16 {
        return Err(Error::DenseLimit {
            dim: full.dim(),
            limit: opts.dense_limit * 16,
        });
    }
    let h = match build_operator(&full, &system.terms())? {
        SparseHermitianOperator::Real(m) => m,
        SparseHermitianOperator::Complex(_) => unreachable!("exchange is real"),
    };
    let (basis_a, singlets_a) = singlet_basis(&a, opts.dense_limit)?;
    let (basis_b, singlets_b) = singlet_basis(&b, opts.dense_limit)?;

    // full index of (a state, b state)
    let index = |fa: usize, fb: usize| {
        let mut f = 0;
        for (k, &site) in a.sites().iter().enumerate() {
            f += basis_a.digit(fa, k) * full.stride(site);
        }
        for (k, &site) in b.sites().iter().enumerate() {
            f += basis_b.digit(fb, k) * full.stride(site);
        }
        f
    };
    let pairs: Vec<(usize, usize, usize)> = (0..basis_a.dim())
        .flat_map(|i| (0..basis_b.dim()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, index(basis_a.full_index(i), basis_b.full_index(j))))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi = vec![0.0; full.dim()];
    let mut h_psi = vec![0.0; full.dim()];
    let mut min_var = f64::INFINITY;
    for _ in 0..samples {
        let ua = random_combination(&mut rng, &singlets_a);
        let ub = random_combination(&mut rng, &singlets_b);
        psi.iter_mut().for_each(|x| *x = 0.0);
        for &(i, j, f) in &pairs {
            psi[f] = ua[i] * ub[j];
        }
        h.matvec(&psi, &mut h_psi);
        let mean: f64 = psi.iter().zip(&h_psi).map(|(x, y)| x * y).sum();
        let square: f64 = h_psi.iter().map(|y| y * y).sum();
        min_var = min_var.min(square - mean * mean);
    }
    Ok(NotEigenstate::MinVariance(min_var))
}

/// Complete spectrum for canonical averages (`k_B = 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalSpectrum {
    levels: Vec<f64>,
}

impl ThermalSpectrum {
    pub fn new(mut levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        levels.sort_by(f64::total_cmp);
        Ok(Self { levels })
    }

    pub fn of(system: &SpinSystem, opts: &SolverOptions) -> Result<Self> {
        let h = build_hamiltonian(system)?;
        Self::new(block_spectrum(&h, opts.sector_dense_limit)?)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0]
    }

    /// Infinite-temperature limit `tr H / dim`.
    pub fn mean(&self) -> f64 {
        self.levels.iter().sum::<f64>() / self.levels.len() as f64
    }

    /// `<H>_T`; `T = 0` gives the ground energy.
    pub fn energy(&self, t: f64) -> f64 {
        let e0 = self.ground_energy();
        if t <= 0.0 {
            return e0;
        }
        if t.is_infinite() {
            return self.mean();
        }
        let (mut z, mut e) = (0.0, 0.0);
        for &l in &self.levels {
            let w = (-(l - e0) / t).exp();
            z += w;
            e += w * l;
        }
        e / z
    }

    /// The temperature at which `<H>_T = ebs`, by bisection.
    pub fn threshold_temperature(&self, ebs: f64) -> Result<ThresholdTemperature> {
        let e0 = self.ground_energy();
        let top = self.mean();
        if ebs <= e0 {
            return Err(Error::NoCrossing(format!(
                "threshold {ebs} is not above the ground energy {e0}"
            )));
        }
        if ebs >= top {
            return Err(Error::NoCrossing(format!(
                "threshold {ebs} is not below the infinite-temperature energy {top}"
            )));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.energy(hi) < ebs {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.energy(mid) < ebs {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t, residual) = [lo, hi]
            .into_iter()
            .map(|t| (t, (self.energy(t) - ebs).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        Ok(ThresholdTemperature { t, residual })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdTemperature {
    pub t: f64,
    /// `|<H>_t - ebs|`
    pub residual: f64,
}

pub fn thermal_energy(system: &SpinSystem, t: f64, opts: &SolverOptions) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument("temperature must be non-negative".into()));
    }
    Ok(ThermalSpectrum::of(system, opts)?.energy(t))
}

pub fn threshold_temperature(
    system: &SpinSystem,
    ebs: f64,
    opts: &SolverOptions,
) -> Result<ThresholdTemperature> {
    ThermalSpectrum::of(system, opts)?.threshold_temperature(ebs)
}
