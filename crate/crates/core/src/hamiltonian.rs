//! Heisenberg rings and chains, their open subsystems, and subsystems
//! dressed with boundary fields.

use std::fmt;

use crate::error::{Error, Result};
use crate::operator::{BlockOperator, Term};
use crate::spin::SpinLength;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    Ring,
    Chain,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Ring => "ring",
            Topology::Chain => "chain",
        })
    }
}

/// `H = J sum_i s_i . s_{i+1}` on a ring or an open chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    topology: Topology,
    spins: Vec<SpinLength>,
    coupling: f64,
    /// Site numbers of the original model (they differ from positions after
    /// a spinless defect has been removed).
    labels: Vec<usize>,
}

impl SpinSystem {
    pub fn new(topology: Topology, spins: Vec<SpinLength>) -> Result<Self> {
        let n = spins.len();
        let min = match topology {
            Topology::Ring => 3,
            Topology::Chain => 2,
        };
        if n < min {
            return Err(Error::InvalidModel(format!(
                "a {topology} needs at least {min} sites, got {n}"
            )));
        }
        if let Some(k) = spins.iter().position(|s| s.is_zero()) {
            return Err(Error::InvalidModel(format!(
                "site {k} has spin 0; spinless sites must be removed"
            )));
        }
        Ok(Self {
            topology,
            spins,
            coupling: 1.0,
            labels: (0..n).collect(),
        })
    }

    pub fn ring(spins: Vec<SpinLength>) -> Result<Self> {
        Self::new(Topology::Ring, spins)
    }

    pub fn chain(spins: Vec<SpinLength>) -> Result<Self> {
        Self::new(Topology::Chain, spins)
    }

    pub fn uniform(topology: Topology, n: usize, spin: SpinLength) -> Result<Self> {
        Self::new(topology, vec![spin; n])
    }

    /// Replaces the spin at `site`. A spinless substitution on a ring deletes
    /// the site and leaves the open chain that starts right after it.
    pub fn with_defect(&self, site: usize, spin: SpinLength) -> Result<Self> {
        let n = self.n_sites();
        if site >= n {
            return Err(Error::SiteOutOfRange { site, n });
        }
        if !spin.is_zero() {
            let mut out = self.clone();
            out.spins[site] = spin;
            return Ok(out);
        }
        let order: Vec<usize> = match self.topology {
            Topology::Ring => (1..n).map(|d| (site + d) % n).collect(),
            Topology::Chain if site == 0 || site + 1 == n => {
                (0..n).filter(|&k| k != site).collect()
            }
            Topology::Chain => {
                return Err(Error::InvalidModel(
                    "a spinless site inside a chain splits it in two".into(),
                ))
            }
        };
        let mut out = Self::chain(order.iter().map(|&k| self.spins[k]).collect())?;
        out.coupling = self.coupling;
        out.labels = order.iter().map(|&k| self.labels[k]).collect();
        Ok(out)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn spins(&self) -> &[SpinLength] {
        &self.spins
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_homogeneous(&self) -> bool {
        self.spins.windows(2).all(|w| w[0] == w[1])
    }

    /// Nearest-neighbour bonds `(i, i+1)`, closing `(N-1, 0)` on a ring.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites();
        let open = (0..n - 1).map(|i| (i, i + 1));
        match self.topology {
            Topology::Ring => open.chain(std::iter::once((n - 1, 0))).collect(),
            Topology::Chain => open.collect(),
        }
    }

    pub fn terms(&self) -> Vec<Term> {
        self.bonds()
            .into_iter()
            .map(|(i, j)| Term::Heisenberg {
                i,
                j,
                coupling: self.coupling,
            })
            .collect()
    }

    /// Sites adjacent to `site`, ascending.
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .bonds()
            .into_iter()
            .filter_map(|(i, j)| {
                if i == site {
                    Some(j)
                } else if j == site {
                    Some(i)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// `length` consecutive sites starting at `offset`, wrapping on rings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteArc {
    pub offset: usize,
    pub length: usize,
}

impl SiteArc {
    pub fn new(offset: usize, length: usize) -> Self {
        Self { offset, length }
    }

    pub fn validate(&self, system: &SpinSystem) -> Result<()> {
        let n = system.n_sites();
        if self.offset >= n {
            return Err(Error::SiteOutOfRange {
                site: self.offset,
                n,
            });
        }
        if self.length == 0 || self.length >= n {
            return Err(Error::InvalidArgument(format!(
                "arc length {} outside 1..{}",
                self.length,
                n - 1
            )));
        }
        if system.topology() == Topology::Chain && self.offset + self.length > n {
            return Err(Error::InvalidArgument(format!(
                "arc ({}, {}) wraps around an open chain",
                self.offset, self.length
            )));
        }
        Ok(())
    }

    pub fn sites(&self, n: usize) -> Vec<usize> {
        (0..self.length).map(|d| (self.offset + d) % n).collect()
    }

    /// Sites outside the arc: on a ring in order from the arc's end round to
    /// its start, on a chain ascending.
    pub fn complement(&self, system: &SpinSystem) -> Vec<usize> {
        let n = system.n_sites();
        match system.topology() {
            Topology::Ring => (0..n - self.length)
                .map(|d| (self.offset + self.length + d) % n)
                .collect(),
            Topology::Chain => (0..n)
                .filter(|&k| k < self.offset || k >= self.offset + self.length)
                .collect(),
        }
    }
}

/// Effective field `b . s` on one site of a subsystem (local index).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldTerm {
    pub site: usize,
    pub b: [f64; 3],
}

impl FieldTerm {
    pub fn new(site: usize, b: [f64; 3]) -> Self {
        Self { site, b }
    }

    pub fn z(site: usize, bz: f64) -> Self {
        Self::new(site, [0.0, 0.0, bz])
    }
}

/// The sites of a system kept together with the bonds among them.
#[derive(Clone, Debug, PartialEq)]
pub struct Subsystem {
    sites: Vec<usize>,
    spins: Vec<SpinLength>,
    coupling: f64,
    bonds: Vec<(usize, usize)>,
    /// Local indices of sites that may carry a field.
    boundary: Vec<usize>,
}

impl Subsystem {
    /// `sites` (global indices, in the order given) with the system bonds
    /// internal to them. Boundary sites are the ones bonded to the rest.
    pub fn of_sites(system: &SpinSystem, sites: &[usize]) -> Result<Self> {
        let n = system.n_sites();
        let mut local = vec![None; n];
        for (k, &s) in sites.iter().enumerate() {
            if s >= n {
                return Err(Error::SiteOutOfRange { site: s, n });
            }
            if local[s].replace(k).is_some() {
                return Err(Error::InvalidArgument(format!("site {s} listed twice")));
            }
        }
        let mut bonds = Vec::new();
        let mut boundary = Vec::new();
        for (i, j) in system.bonds() {
            match (local[i], local[j]) {
                (Some(a), Some(b)) => bonds.push((a, b)),
                (Some(a), None) | (None, Some(a)) => boundary.push(a),
                (None, None) => {}
            }
        }
        bonds.sort_unstable();
        boundary.sort_unstable();
        boundary.dedup();
        Ok(Self {
            sites: sites.to_vec(),
            spins: sites.iter().map(|&s| system.spins()[s]).collect(),
            coupling: system.coupling(),
            bonds,
            boundary,
        })
    }

    /// A stand-alone open chain; both ends count as boundary.
    pub fn open_chain(spins: &[SpinLength]) -> Self {
        let n = spins.len();
        let mut boundary = vec![0, n.saturating_sub(1)];
        boundary.dedup();
        Self {
            sites: (0..n).collect(),
            spins: spins.to_vec(),
            coupling: 1.0,
            bonds: (1..n).map(|i| (i - 1, i)).collect(),
            boundary,
        }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn spins(&self) -> &[SpinLength] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.sites.iter().position(|&s| s == global)
    }

    pub fn terms(&self) -> Vec<Term> {
        self.bonds
            .iter()
            .map(|&(i, j)| Term::Heisenberg {
                i,
                j,
                coupling: self.coupling,
            })
            .collect()
    }

    pub fn hamiltonian(&self) -> Result<BlockOperator> {
        BlockOperator::build(&self.spins, &self.terms())
    }
}

pub fn build_hamiltonian(system: &SpinSystem) -> Result<BlockOperator> {
    BlockOperator::build(system.spins(), &system.terms())
}

/// Open-boundary Hamiltonian of the arc (intra-arc bonds only).
pub fn build_subsystem(system: &SpinSystem, arc: SiteArc) -> Result<Subsystem> {
    arc.validate(system)?;
    Subsystem::of_sites(system, &arc.sites(system.n_sites()))
}

/// The sites outside `arc`, with their internal bonds.
pub fn build_complement(system: &SpinSystem, arc: SiteArc) -> Result<Subsystem> {
    arc.validate(system)?;
    Subsystem::of_sites(system, &arc.complement(system))
}

/// `H_sub + sum b . s_site`. Sector blocking survives iff every field is
/// along z.
pub fn dress_with_fields(sub: &Subsystem, fields: &[FieldTerm]) -> Result<BlockOperator> {
    let mut terms = sub.terms();
    for f in fields {
        if f.site >= sub.len() {
            return Err(Error::SiteOutOfRange {
                site: f.site,
                n: sub.len(),
            });
        }
        if !sub.boundary.contains(&f.site) {
            return Err(Error::InteriorField { site: f.site });
        }
        if f.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field".into()));
        }
        if f.b != [0.0; 3] {
            terms.push(Term::field(f.site, f.b));
        }
    }
    BlockOperator::build(&sub.spins, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::{block_spectrum, ground_state, SolverOptions};

    fn e0(op: &BlockOperator) -> f64 {
        ground_state(op, &SolverOptions::default()).unwrap().energy
    }

    #[test]
    fn small_systems() {
        let chain = SpinSystem::uniform(Topology::Chain, 2, SpinLength::HALF).unwrap();
        assert!((e0(&build_hamiltonian(&chain).unwrap()) + 0.75).abs() < 1e-12);

        let ring = SpinSystem::uniform(Topology::Ring, 3, SpinLength::HALF).unwrap();
        let h = build_hamiltonian(&ring).unwrap();
        let spec = block_spectrum(&h, 4096).unwrap();
        assert!(spec[..4].iter().all(|e| (e + 0.75).abs() < 1e-12));
        assert!((spec[4] - 0.75).abs() < 1e-12);
        assert!(ground_state(&h, &SolverOptions::default()).unwrap().degenerate);
    }

    #[test]
    fn bond_counts_and_validation() {
        let ring = SpinSystem::uniform(Topology::Ring, 5, SpinLength::ONE).unwrap();
        assert_eq!(ring.bonds().len(), 5);
        let chain = SpinSystem::uniform(Topology::Chain, 5, SpinLength::ONE).unwrap();
        assert_eq!(chain.bonds().len(), 4);
        assert!(SpinSystem::uniform(Topology::Ring, 2, SpinLength::HALF).is_err());
        assert!(SpinSystem::uniform(Topology::Chain, 1, SpinLength::HALF).is_err());
        assert!(SpinSystem::chain(vec![SpinLength::HALF, SpinLength::ZERO]).is_err());
    }

    #[test]
    fn spinless_defect_opens_the_ring() {
        let ring = SpinSystem::uniform(Topology::Ring, 8, SpinLength::THREE_HALVES).unwrap();
        let zn = ring.with_defect(4, SpinLength::ZERO).unwrap();
        assert_eq!(zn.topology(), Topology::Chain);
        assert_eq!(zn.labels(), &[5, 6, 7, 0, 1, 2, 3]);
        let ni = ring.with_defect(4, SpinLength::ONE).unwrap();
        assert_eq!(ni.spins()[4], SpinLength::ONE);
        assert!(!ni.is_homogeneous());
    }

    #[test]
    fn arcs_and_subsystems() {
        let ring = SpinSystem::uniform(Topology::Ring, 6, SpinLength::HALF).unwrap();
        let arc = SiteArc::new(4, 3);
        assert_eq!(arc.sites(6), vec![4, 5, 0]);
        assert_eq!(arc.complement(&ring), vec![1, 2, 3]);
        let a = build_subsystem(&ring, arc).unwrap();
        assert_eq!(a.bonds(), &[(0, 1), (1, 2)]);
        assert_eq!(a.boundary(), &[0, 2]);

        let one = build_subsystem(&ring, SiteArc::new(2, 1)).unwrap();
        assert!(one.bonds().is_empty());
        assert_eq!(e0(&one.hamiltonian().unwrap()), 0.0);

        let two = build_subsystem(&ring, SiteArc::new(0, 2)).unwrap();
        assert!((e0(&two.hamiltonian().unwrap()) + 0.75).abs() < 1e-12);

        let chain = SpinSystem::uniform(Topology::Chain, 5, SpinLength::HALF).unwrap();
        assert!(SiteArc::new(3, 3).validate(&chain).is_err());
        let b = build_complement(&chain, SiteArc::new(2, 1)).unwrap();
        assert_eq!(b.sites(), &[0, 1, 3, 4]);
        assert_eq!(b.bonds(), &[(0, 1), (2, 3)]);
        assert_eq!(b.boundary(), &[1, 2]);
    }

    #[test]
    fn dressing() {
        let single = Subsystem::open_chain(&[SpinLength::HALF]);
        let h = dress_with_fields(&single, &[FieldTerm::z(0, 0.5)]).unwrap();
        let gs = ground_state(&h, &SolverOptions::default()).unwrap();
        assert!((gs.energy + 0.25).abs() < 1e-14);
        assert!((gs.state.site_expectation(0)[2] + 0.5).abs() < 1e-14);

        let chain = Subsystem::open_chain(&[SpinLength::HALF; 4]);
        let bare = chain.hamiltonian().unwrap();
        let same = dress_with_fields(&chain, &[]).unwrap();
        assert_eq!(block_spectrum(&bare, 64).unwrap(), block_spectrum(&same, 64).unwrap());
        assert!(matches!(
            dress_with_fields(&chain, &[FieldTerm::z(1, 0.1)]),
            Err(Error::InteriorField { site: 1 })
        ));
        let tilted = dress_with_fields(&chain, &[FieldTerm::new(3, [0.3, 0.0, 0.4])]).unwrap();
        assert!(!tilted.is_sector_blocked());
    }

    #[test]
    fn cyclic_relabeling_keeps_the_spectrum() {
        let base = [SpinLength::HALF, SpinLength::ONE, SpinLength::HALF, SpinLength::THREE_HALVES];
        let reference = block_spectrum(
            &build_hamiltonian(&SpinSystem::ring(base.to_vec()).unwrap()).unwrap(),
            4096,
        )
        .unwrap();
        for shift in 1..base.len() {
            let mut spins = base.to_vec();
            spins.rotate_left(shift);
            let spec =
                block_spectrum(&build_hamiltonian(&SpinSystem::ring(spins).unwrap()).unwrap(), 4096)
                    .unwrap();
            for (a, b) in spec.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
