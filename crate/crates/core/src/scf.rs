//! Minimum energy over biseparable states by self-consistent boundary fields.
//!
//! A bipartition splits the system into a subsystem `A` and its complement
//! `B`, joined by one cross bond (chains) or two (rings). In a product state
//! `|A>|B>` each cross bond contributes `J <s_a> . <s_b>`, so the optimal
//! `|A>` is the ground state of `H_A` plus the fields `J <s_b>` on its
//! boundary sites, and vice versa. The fixed point of this alternation is
//! searched with collinear z fields, one signed scalar per cross bond.
//!
//! [`boundary_map`] exposes one half step with arbitrary x-z fields, which
//! is used to check that restricting to collinear boundary spins is safe.

use rayon::prelude::*;

use crate::eigensolver::{ground_state, select_ground_state, SolverOptions, WarmStart};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_complement, build_hamiltonian, build_subsystem, dress_with_fields, FieldTerm, SiteArc,
    SpinSystem, Subsystem, Topology,
};
use crate::spin::SpinLength;

/// Expectations of the two boundary spins of a chain: `z` for the last
/// site, `zprime` for the first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPair {
    pub z: [f64; 3],
    pub zprime: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryGeometry {
    /// Angle between `z` and `zprime`; `None` when either is (numerically)
    /// zero.
    pub theta: Option<f64>,
    /// `| |z| - |zprime| |`
    pub z_diff: f64,
    pub moduli: (f64, f64),
}

fn modulus(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn boundary_geometry(pair: &BoundaryPair) -> BoundaryGeometry {
    let (a, b) = (modulus(pair.z), modulus(pair.zprime));
    let theta = (a >= 1e-12 && b >= 1e-12).then(|| {
        let c = (pair.z[0] * pair.zprime[0] + pair.z[1] * pair.zprime[1] + pair.z[2] * pair.zprime[2])
            / (a * b);
        c.clamp(-1.0, 1.0).acos()
    });
    BoundaryGeometry {
        theta,
        z_diff: (a - b).abs(),
        moduli: (a, b),
    }
}

/// Boundary expectations of the ground state of
/// `H_chain + z_b . s_last + z_b' . s_first`, fields in the x-z plane.
/// Degenerate ground states are resolved along the applied fields.
pub fn boundary_map(
    chain: &[SpinLength],
    z_b: [f64; 3],
    z_b_prime: [f64; 3],
    opts: &SolverOptions,
) -> Result<BoundaryPair> {
    if chain.is_empty() {
        return Err(Error::InvalidArgument("empty chain".into()));
    }
    if z_b[1] != 0.0 || z_b_prime[1] != 0.0 {
        return Err(Error::InvalidArgument(
            "boundary fields must lie in the x-z plane".into(),
        ));
    }
    let sub = Subsystem::open_chain(chain);
    let last = chain.len() - 1;
    let fields = [FieldTerm::new(last, z_b), FieldTerm::new(0, z_b_prime)];
    let op = dress_with_fields(&sub, &fields)?;
    let select: Vec<FieldTerm> = if z_b == [0.0; 3] && z_b_prime == [0.0; 3] {
        vec![FieldTerm::z(last, 1.0)]
    } else {
        fields.to_vec()
    };
    let sel = select_ground_state(&op, &select, opts, None)?;
    Ok(BoundaryPair {
        z: sel.state.site_expectation(last),
        zprime: sel.state.site_expectation(0),
    })
}

/// One point of the map: `z_b = |z_b| z^` on the last site and a second
/// field at angle `theta_b` on the first site, whose modulus differs by
/// `z_diff_b` (`|z_b| - z_diff_b`, or `|z_b| + z_diff_b` when that would be
/// negative).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapPoint {
    pub theta_b: f64,
    pub z_diff_b: f64,
    pub modulus_b: f64,
    pub out: BoundaryPair,
    pub geometry: BoundaryGeometry,
}

pub fn map_fields(theta_b: f64, z_diff_b: f64, modulus_b: f64) -> ([f64; 3], [f64; 3]) {
    let other = if modulus_b - z_diff_b >= 0.0 {
        modulus_b - z_diff_b
    } else {
        modulus_b + z_diff_b
    };
    // exact axes at the ends of the range keep the problem Sz-conserving
    let (sin, cos) = if theta_b == 0.0 {
        (0.0, 1.0)
    } else if (theta_b - std::f64::consts::PI).abs() < 1e-15 {
        (0.0, -1.0)
    } else {
        theta_b.sin_cos()
    };
    ([0.0, 0.0, modulus_b], [other * sin, 0.0, other * cos])
}

pub fn map_point(
    chain: &[SpinLength],
    theta_b: f64,
    z_diff_b: f64,
    modulus_b: f64,
    opts: &SolverOptions,
) -> Result<MapPoint> {
    let (z, zp) = map_fields(theta_b, z_diff_b, modulus_b);
    let out = boundary_map(chain, z, zp, opts)?;
    Ok(MapPoint {
        theta_b,
        z_diff_b,
        modulus_b,
        out,
        geometry: boundary_geometry(&out),
    })
}

/// Relative sign of the two boundary fields of a subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eta {
    Plus,
    Minus,
}

impl Eta {
    pub fn sign(self) -> f64 {
        match self {
            Eta::Plus => 1.0,
            Eta::Minus => -1.0,
        }
    }
}

impl std::fmt::Display for Eta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Eta::Plus => "+1",
            Eta::Minus => "-1",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScfConfig {
    /// Branches to try; a single cross bond always runs `Plus` only.
    pub etas: Vec<Eta>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Starting moduli as fractions of the boundary spin length.
    pub init_fractions: Vec<f64>,
    pub solver: SolverOptions,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self {
            etas: vec![Eta::Plus, Eta::Minus],
            damping: 0.5,
            tol: 1e-10,
            max_iter: 10_000,
            init_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            solver: SolverOptions {
                tol: 1e-12,
                ..SolverOptions::default()
            },
        }
    }
}

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.tol > 0.0) {
            return bad("scf tolerance must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.etas.is_empty() {
            return bad("at least one eta branch is required");
        }
        if self.init_fractions.iter().any(|f| !(0.0..=1.0).contains(f))
            || !self.init_fractions.contains(&0.0)
            || !self.init_fractions.contains(&1.0)
        {
            return bad("init fractions must lie in [0, 1] and include 0 and 1");
        }
        Ok(())
    }
}

/// One alternation: boundary values of `A` and `B` per cross bond and the
/// product-state energy.
#[derive(Clone, Debug, PartialEq)]
pub struct ScfStep {
    pub z_a: Vec<f64>,
    pub z_b: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchSummary {
    pub eta: Eta,
    /// Starting modulus.
    pub z0: f64,
    pub converged: bool,
    pub ebs: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScfResult {
    pub arc: SiteArc,
    pub ebs: f64,
    /// `<s_z>` of the A (B) site of each cross bond; cross bond 0 joins the
    /// last site of `A` to the first site of `B`.
    pub z_a: Vec<f64>,
    pub z_b: Vec<f64>,
    /// Relative sign of the two A-side moments as converged; the starting
    /// relation of each branch is kept in `branches`.
    pub eta: Eta,
    /// The winner is the uncoupled pair of ground states.
    pub decoupled: bool,
    pub converged: bool,
    pub residual: f64,
    pub history: Vec<ScfStep>,
    pub branches: Vec<BranchSummary>,
    /// `E0(H_A) + E0(H_B)`.
    pub decoupled_energy: f64,
}

impl ScfResult {
    /// Largest boundary modulus of the winning solution.
    pub fn max_moment(&self) -> f64 {
        self.z_a
            .iter()
            .chain(&self.z_b)
            .fold(0.0, |m, z| m.max(z.abs()))
    }
}

#[derive(Clone, Copy, Debug)]
struct Cross {
    a: usize,
    b: usize,
}

struct Problem {
    a: Subsystem,
    b: Subsystem,
    cross: Vec<Cross>,
    coupling: f64,
}

impl Problem {
    fn new(system: &SpinSystem, arc: SiteArc) -> Result<Self> {
        let a = build_subsystem(system, arc)?;
        let b = build_complement(system, arc)?;
        let mut bonds: Vec<(usize, usize)> = system
            .bonds()
            .into_iter()
            .filter_map(|(i, j)| {
                let pair = |x: usize, y: usize| Some((a.local_index(x)?, b.local_index(y)?));
                pair(i, j).or_else(|| pair(j, i))
            })
            .collect();
        // (A last, B first) goes first
        let last = a.len() - 1;
        bonds.sort_by_key(|&(x, y)| (x != last || y != 0, x, y));
        let cross = bonds.into_iter().map(|(a, b)| Cross { a, b }).collect();
        Ok(Self {
            a,
            b,
            cross,
            coupling: system.coupling(),
        })
    }
}

/// `b.s` fields on one side from the other side's moments.
fn side_fields(sites: impl Iterator<Item = (usize, f64)>) -> Vec<FieldTerm> {
    let mut out: Vec<FieldTerm> = Vec::new();
    for (site, bz) in sites {
        match out.iter_mut().find(|f| f.site == site) {
            Some(f) => f.b[2] += bz,
            None => out.push(FieldTerm::z(site, bz)),
        }
    }
    out
}

struct SideSolution {
    /// `<H_sub>` in the selected state.
    bare_energy: f64,
    moments: Vec<[f64; 3]>,
}

fn solve_side(
    sub: &Subsystem,
    fields: &[FieldTerm],
    probe: &[FieldTerm],
    opts: &SolverOptions,
    warm: &mut WarmStart,
) -> Result<SideSolution> {
    let op = dress_with_fields(sub, fields)?;
    let select = if fields.iter().all(|f| f.b == [0.0; 3]) {
        probe
    } else {
        fields
    };
    let sel = select_ground_state(&op, select, opts, Some(warm))?;
    let moments: Vec<[f64; 3]> = (0..sub.len()).map(|k| sel.state.site_expectation(k)).collect();
    let field_energy: f64 = fields
        .iter()
        .map(|f| (0..3).map(|c| f.b[c] * moments[f.site][c]).sum::<f64>())
        .sum();
    Ok(SideSolution {
        bare_energy: sel.energy - field_energy,
        moments,
    })
}

struct Cycle {
    z_a: Vec<f64>,
    z_b: Vec<f64>,
    energy: f64,
}

struct Branch {
    eta: Eta,
    z0: f64,
    converged: bool,
    residual: f64,
    history: Vec<ScfStep>,
    final_cycle: Option<Cycle>,
}

fn cycle(
    p: &Problem,
    z_b: &[f64],
    sigma: &[f64],
    cfg: &ScfConfig,
    warm_a: &mut WarmStart,
    warm_b: &mut WarmStart,
) -> Result<Cycle> {
    let j = p.coupling;
    let fields_a = side_fields(p.cross.iter().zip(z_b).map(|(c, z)| (c.a, j * z)));
    let probe_a = side_fields(p.cross.iter().zip(sigma).map(|(c, s)| (c.a, -s)));
    let sa = solve_side(&p.a, &fields_a, &probe_a, &cfg.solver, warm_a)?;
    let z_a: Vec<f64> = p.cross.iter().map(|c| sa.moments[c.a][2]).collect();

    let fields_b = side_fields(p.cross.iter().zip(&z_a).map(|(c, z)| (c.b, j * z)));
    let probe_b = side_fields(p.cross.iter().zip(sigma).map(|(c, s)| (c.b, *s)));
    let sb = solve_side(&p.b, &fields_b, &probe_b, &cfg.solver, warm_b)?;
    let z_b_new: Vec<f64> = p.cross.iter().map(|c| sb.moments[c.b][2]).collect();

    let coupling_energy: f64 = p
        .cross
        .iter()
        .map(|c| {
            let (u, v) = (sa.moments[c.a], sb.moments[c.b]);
            j * (u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
        })
        .sum();
    Ok(Cycle {
        z_a,
        z_b: z_b_new,
        energy: sa.bare_energy + sb.bare_energy + coupling_energy,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Iterations over which the contraction rate is measured.
const RATE_WINDOW: usize = 100;

/// True when the contraction rate seen over the last window cannot bring
/// the residual below `tol` within the iteration budget. Marginal fixed
/// points (residual decaying like `1/sqrt(n)`) end here instead of running
/// out the full budget.
fn stalled(history: &[ScfStep], cfg: &ScfConfig, last_damping_change: usize) -> bool {
    let k = history.len();
    if k < 2 * RATE_WINDOW || k < last_damping_change + RATE_WINDOW {
        return false;
    }
    let now = history[k - 1].residual;
    let then = history[k - 1 - RATE_WINDOW].residual;
    if !(now > 0.0 && then > 0.0) {
        return false;
    }
    let rate = (now / then).ln() / RATE_WINDOW as f64;
    if rate >= 0.0 {
        return true;
    }
    let needed = (cfg.tol / now).ln() / rate;
    k as f64 + needed > cfg.max_iter as f64
}

fn run_branch(p: &Problem, eta: Eta, z0: f64, cfg: &ScfConfig) -> Result<Branch> {
    let sigma: Vec<f64> = (0..p.cross.len())
        .map(|k| if k == 0 { 1.0 } else { eta.sign() })
        .collect();
    let mut z_b: Vec<f64> = sigma.iter().map(|s| -s * z0).collect();
    let mut alpha = cfg.damping;
    let mut signs: Vec<f64> = Vec::new();
    let mut last_damping_change = 0;
    let mut history = Vec::new();
    let mut warm_a = WarmStart::new();
    let mut warm_b = WarmStart::new();
    for _ in 0..cfg.max_iter {
        let c = cycle(p, &z_b, &sigma, cfg, &mut warm_a, &mut warm_b)?;
        let delta: Vec<f64> = c.z_b.iter().zip(&z_b).map(|(n, o)| n - o).collect();
        let residual = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        history.push(ScfStep {
            z_a: c.z_a.clone(),
            z_b: z_b.clone(),
            energy: c.energy,
            residual,
        });
        if residual < cfg.tol {
            // one plain cycle from the measured values must reproduce them
            let check = cycle(p, &c.z_b, &sigma, cfg, &mut warm_a, &mut warm_b)?;
            let verify = max_diff(&check.z_b, &c.z_b);
            let converged = verify < 10.0 * cfg.tol;
            return Ok(Branch {
                eta,
                z0,
                converged,
                residual,
                history,
                final_cycle: Some(Cycle {
                    z_b: c.z_b,
                    ..check
                }),
            });
        }
        // halve the damping when the dominant update flips sign six times
        let lead = delta
            .iter()
            .copied()
            .fold(0.0f64, |m, d| if d.abs() > m.abs() { d } else { m });
        signs.push(lead.signum());
        if signs.len() >= 6 {
            let tail = &signs[signs.len() - 6..];
            if tail.windows(2).all(|w| w[0] * w[1] < 0.0) {
                alpha = (alpha * 0.5).max(0.05);
                signs.clear();
                last_damping_change = history.len();
            }
        }
        if stalled(&history, cfg, last_damping_change) {
            break;
        }
        for (z, d) in z_b.iter_mut().zip(&delta) {
            *z += alpha * d;
        }
    }
    let residual = history.last().map_or(f64::INFINITY, |s| s.residual);
    Ok(Branch {
        eta,
        z0,
        converged: false,
        residual,
        history,
        final_cycle: None,
    })
}

/// Lowest self-consistent product-state energy for the bipartition
/// `arc | complement`, over every branch and starting point, and never
/// above the decoupled value `E0(H_A) + E0(H_B)`.
pub fn biseparable_minimum(system: &SpinSystem, arc: SiteArc, cfg: &ScfConfig) -> Result<ScfResult> {
    cfg.validate()?;
    let p = Problem::new(system, arc)?;
    let opts = &cfg.solver;
    let e_a = ground_state(&p.a.hamiltonian()?, opts)?.energy;
    let e_b = ground_state(&p.b.hamiltonian()?, opts)?.energy;
    let decoupled_energy = e_a + e_b;

    let s_max = p
        .cross
        .iter()
        .map(|c| p.b.spins()[c.b].value())
        .fold(0.0, f64::max);
    let etas: Vec<Eta> = if p.cross.len() == 1 {
        vec![Eta::Plus]
    } else {
        let mut e = cfg.etas.clone();
        e.sort();
        e.dedup();
        e
    };
    let starts: Vec<(Eta, f64)> = etas
        .iter()
        .flat_map(|&eta| {
            let mut f = cfg.init_fractions.clone();
            f.sort_by(f64::total_cmp);
            f.dedup();
            f.into_iter().map(move |x| (eta, x * s_max))
        })
        .collect();
    let branches: Vec<Result<Branch>> = starts
        .par_iter()
        .map(|&(eta, z0)| run_branch(&p, eta, z0, cfg))
        .collect();
    let branches: Vec<Branch> = branches.into_iter().collect::<Result<_>>()?;

    let summaries: Vec<BranchSummary> = branches
        .iter()
        .map(|b| BranchSummary {
            eta: b.eta,
            z0: b.z0,
            converged: b.converged,
            ebs: b.final_cycle.as_ref().map_or(f64::NAN, |c| c.energy),
            residual: b.residual,
            iterations: b.history.len(),
        })
        .collect();
    if !branches.iter().any(|b| b.converged) {
        return Err(Error::ScfFailed {
            offset: arc.offset,
            length: arc.length,
            histories: branches.into_iter().map(|b| b.history).collect(),
        });
    }

    let n_cross = p.cross.len();
    let mut best = ScfResult {
        arc,
        ebs: decoupled_energy,
        z_a: vec![0.0; n_cross],
        z_b: vec![0.0; n_cross],
        eta: Eta::Plus,
        decoupled: true,
        converged: true,
        residual: 0.0,
        history: Vec::new(),
        branches: summaries.clone(),
        decoupled_energy,
    };
    for b in branches.into_iter().filter(|b| b.converged) {
        let c = b.final_cycle.expect("converged branches keep their last cycle");
        if c.energy < best.ebs - 1e-10 {
            let eta = match c.z_a.as_slice() {
                [a0, a1, ..] if a0.abs() > 1e-12 && a1.abs() > 1e-12 => {
                    if a0 * a1 > 0.0 {
                        Eta::Plus
                    } else {
                        Eta::Minus
                    }
                }
                _ => b.eta,
            };
            best = ScfResult {
                arc,
                ebs: c.energy,
                z_a: c.z_a,
                z_b: c.z_b,
                eta,
                decoupled: false,
                converged: true,
                residual: b.residual,
                history: b.history,
                branches: summaries.clone(),
                decoupled_energy,
            };
        }
    }
    Ok(best)
}

/// Outcome of one bipartition in a scan.
#[derive(Clone, Debug)]
pub struct BipartitionReport {
    pub arc: SiteArc,
    pub n_a: usize,
    pub n_b: usize,
    pub result: std::result::Result<ScfResult, String>,
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub e0: f64,
    pub reports: Vec<BipartitionReport>,
    /// Index into `reports` of the global minimum.
    pub best: Option<usize>,
    /// Some bipartition failed and is missing from the minimum.
    pub incomplete: bool,
}

impl ScanResult {
    pub fn global_ebs(&self) -> Option<f64> {
        self.best
            .and_then(|i| self.reports[i].result.as_ref().ok())
            .map(|r| r.ebs)
    }
}

/// Contiguous bipartitions with `1 <= N_A <= N/2`. Homogeneous rings need
/// one offset; on chains `A` is a prefix or a suffix.
pub fn scan_arcs(system: &SpinSystem) -> Vec<SiteArc> {
    let n = system.n_sites();
    let mut arcs = Vec::new();
    for len in 1..=n / 2 {
        match system.topology() {
            Topology::Ring if system.is_homogeneous() => arcs.push(SiteArc::new(0, len)),
            Topology::Ring => {
                let offsets = if 2 * len == n { n / 2 } else { n };
                arcs.extend((0..offsets).map(|o| SiteArc::new(o, len)));
            }
            Topology::Chain => {
                arcs.push(SiteArc::new(0, len));
                if !system.is_homogeneous() && n - len != 0 {
                    arcs.push(SiteArc::new(n - len, len));
                }
            }
        }
    }
    arcs.sort();
    arcs.dedup();
    arcs.sort_by_key(|a| (a.length, a.offset));
    arcs
}

pub fn biseparable_scan(system: &SpinSystem, cfg: &ScfConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let e0 = ground_state(&build_hamiltonian(system)?, &cfg.solver)?.energy;
    let n = system.n_sites();
    let reports: Vec<BipartitionReport> = scan_arcs(system)
        .par_iter()
        .map(|&arc| BipartitionReport {
            arc,
            n_a: arc.length,
            n_b: n - arc.length,
            result: biseparable_minimum(system, arc, cfg).map_err(|e| e.to_string()),
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, r) in reports.iter().enumerate() {
        if let Ok(res) = &r.result {
            let better = match best.and_then(|b| reports[b].result.as_ref().ok()) {
                None => true,
                Some(cur) => res.ebs < cur.ebs - 1e-10,
            };
            if better {
                best = Some(i);
            }
        }
    }
    let incomplete = reports.iter().any(|r| r.result.is_err());
    Ok(ScanResult {
        e0,
        reports,
        best,
        incomplete,
    })
}
