mod common;

use common::{qubit_chain_e0, DenseModel};
use spinring::eigensolver::{ground_state, select_ground_state, SolverOptions};
use spinring::hamiltonian::{
    build_complement, build_subsystem, dress_with_fields, FieldTerm, SiteArc, SpinSystem,
    Subsystem, Topology,
};
use spinring::scf::{biseparable_minimum, biseparable_scan, ScfConfig, ScfResult};
use spinring::SpinLength;

fn ring(n: usize, s: SpinLength) -> SpinSystem {
    SpinSystem::uniform(Topology::Ring, n, s).unwrap()
}

/// Cross bonds as (A local, B local), (A last, B first) first.
fn cross_bonds(system: &SpinSystem, a: &Subsystem, b: &Subsystem) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = system
        .bonds()
        .into_iter()
        .filter_map(|(i, j)| {
            let pair = |x: usize, y: usize| Some((a.local_index(x)?, b.local_index(y)?));
            pair(i, j).or_else(|| pair(j, i))
        })
        .collect();
    let last = a.len() - 1;
    out.sort_by_key(|&(x, y)| (x != last || y != 0, x, y));
    out
}

/// Solves one side in the fields of the other and returns (dressed energy,
/// boundary moments per cross bond).
fn respond(
    side: &Subsystem,
    sites: &[usize],
    other_moments: &[f64],
    opts: &SolverOptions,
) -> (f64, Vec<f64>) {
    let mut fields: Vec<FieldTerm> = Vec::new();
    for (&site, &z) in sites.iter().zip(other_moments) {
        match fields.iter_mut().find(|f| f.site == site) {
            Some(f) => f.b[2] += z,
            None => fields.push(FieldTerm::z(site, z)),
        }
    }
    let op = dress_with_fields(side, &fields).unwrap();
    let sel = select_ground_state(&op, &fields, opts, None).unwrap();
    let moments = sites.iter().map(|&s| sel.state.site_expectation(s)[2]).collect();
    (sel.energy, moments)
}

/// One undamped cycle from the converged moments must reproduce them, and
/// the energy must equal the product-state expectation.
fn assert_fixed_point(system: &SpinSystem, r: &ScfResult, tol: f64) {
    let a = build_subsystem(system, r.arc).unwrap();
    let b = build_complement(system, r.arc).unwrap();
    let cross = cross_bonds(system, &a, &b);
    let a_sites: Vec<usize> = cross.iter().map(|c| c.0).collect();
    let b_sites: Vec<usize> = cross.iter().map(|c| c.1).collect();
    let opts = SolverOptions {
        tol: 1e-12,
        ..SolverOptions::default()
    };
    if r.decoupled {
        assert!(r.max_moment() == 0.0);
        return;
    }
    let (ea, za) = respond(&a, &a_sites, &r.z_b, &opts);
    let (eb, zb) = respond(&b, &b_sites, &r.z_a, &opts);
    for (x, y) in za.iter().zip(&r.z_a).chain(zb.iter().zip(&r.z_b)) {
        assert!((x - y).abs() < 10.0 * tol, "{x} vs {y}");
    }
    let cross_energy: f64 = r.z_a.iter().zip(&r.z_b).map(|(x, y)| x * y).sum();
    let energy = ea + eb - cross_energy;
    assert!((energy - r.ebs).abs() < 1e-9, "{energy} vs {}", r.ebs);
}

#[test]
fn qubit_ring_scan_goldens() {
    let system = ring(8, SpinLength::HALF);
    let cfg = ScfConfig::default();
    let scan = biseparable_scan(&system, &cfg).unwrap();
    let golden = [
        -3.124932598688,
        -3.243577133888,
        -3.142382945594,
        -3.232050807569,
    ];
    assert!((scan.e0 - -3.651093408937).abs() < 1e-9);
    for (rep, g) in scan.reports.iter().zip(golden) {
        let r = rep.result.as_ref().unwrap();
        assert!((r.ebs - g).abs() < 1e-9, "N_A={}: {} vs {g}", rep.n_a, r.ebs);
        assert!(r.ebs > scan.e0);
        assert_fixed_point(&system, r, cfg.tol);
    }
    assert_eq!(scan.reports[scan.best.unwrap()].n_a, 2);
}

#[test]
fn spin_one_ring_scan_goldens() {
    let system = ring(8, SpinLength::ONE);
    let cfg = ScfConfig::default();
    let scan = biseparable_scan(&system, &cfg).unwrap();
    let golden = [
        -10.158557028818,
        -10.134660606868,
        -10.093679070428,
        -10.092880418626,
    ];
    for (rep, g) in scan.reports.iter().zip(golden) {
        let r = rep.result.as_ref().unwrap();
        assert!((r.ebs - g).abs() < 1e-9, "N_A={}: {} vs {g}", rep.n_a, r.ebs);
        assert!(r.ebs > scan.e0);
        assert_fixed_point(&system, r, cfg.tol);
    }
    assert_eq!(scan.reports[scan.best.unwrap()].n_a, 1);
}

#[test]
fn even_even_splits_decouple() {
    let system = ring(8, SpinLength::HALF);
    for n_a in [2, 4] {
        let r = biseparable_minimum(&system, SiteArc::new(0, n_a), &ScfConfig::default()).unwrap();
        let oracle = qubit_chain_e0(n_a) + qubit_chain_e0(8 - n_a);
        assert!((r.ebs - oracle).abs() < 1e-8);
        assert!(r.decoupled && r.max_moment() < 1e-12);
    }
}

#[test]
fn single_spin_side_saturates() {
    let system = ring(8, SpinLength::ONE);
    let r = biseparable_minimum(&system, SiteArc::new(3, 1), &ScfConfig::default()).unwrap();
    assert!(r.z_a.iter().all(|z| (z.abs() - 1.0).abs() < 1e-8), "{:?}", r.z_a);
    // the dressed 7-chain with the saturated spin's field on both ends
    let oracle = DenseModel::chain(&[2; 7])
        .with_field(0, 0.0, 1.0)
        .with_field(6, 0.0, 1.0)
        .ground_energy();
    assert!((r.ebs - oracle).abs() < 1e-8, "{} vs {oracle}", r.ebs);
}

#[test]
fn edge_dressed_qubit_chain_is_the_single_site_minimum() {
    let chain = Subsystem::open_chain(&[SpinLength::HALF; 7]);
    let op = dress_with_fields(&chain, &[FieldTerm::z(0, 0.5), FieldTerm::z(6, 0.5)]).unwrap();
    let e = ground_state(&op, &SolverOptions::default()).unwrap().energy;
    let r = biseparable_minimum(&ring(8, SpinLength::HALF), SiteArc::new(0, 1), &ScfConfig::default())
        .unwrap();
    assert!((e - r.ebs).abs() < 1e-8);
    let oracle = DenseModel::chain(&[1; 7])
        .with_field(0, 0.0, 0.5)
        .with_field(6, 0.0, 0.5)
        .ground_energy();
    assert!((e - oracle).abs() < 1e-10);
}

#[test]
fn chains_and_inhomogeneous_rings_converge_to_fixed_points() {
    let cfg = ScfConfig::default();
    let chain = SpinSystem::chain(vec![
        SpinLength::HALF,
        SpinLength::ONE,
        SpinLength::HALF,
        SpinLength::ONE,
        SpinLength::HALF,
    ])
    .unwrap();
    let scan = biseparable_scan(&chain, &cfg).unwrap();
    assert!(!scan.incomplete);
    for rep in &scan.reports {
        let r = rep.result.as_ref().unwrap();
        assert!(r.ebs > scan.e0);
        assert_fixed_point(&chain, r, cfg.tol);
    }
    let ni = ring(6, SpinLength::HALF).with_defect(2, SpinLength::ONE).unwrap();
    let scan = biseparable_scan(&ni, &cfg).unwrap();
    for rep in &scan.reports {
        let r = rep.result.as_ref().unwrap();
        assert!(r.ebs > scan.e0);
        assert_fixed_point(&ni, r, cfg.tol);
    }
}
