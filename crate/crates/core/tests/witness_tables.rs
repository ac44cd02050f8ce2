mod common;

use common::DenseModel;
use proptest::prelude::*;
use spinring::eigensolver::SolverOptions;
use spinring::hamiltonian::{SiteArc, SpinSystem, Topology};
use spinring::scf::{biseparable_minimum, ScfConfig};
use spinring::witness::{
    defect_series, f_factor, single_site_threshold, threshold_table, verdict,
    verify_not_eigenstate, NotEigenstate, ThermalSpectrum,
};
use spinring::SpinLength;

const CR: SpinLength = SpinLength::THREE_HALVES;

fn all_defects() -> Vec<SpinLength> {
    (0..=5).map(SpinLength::from_twice).collect()
}

#[test]
fn cr7m_series_goldens_and_shape() {
    let tables = defect_series(CR, 8, 4, &all_defects(), &SolverOptions::default());
    let tables: Vec<_> = tables.into_iter().map(|t| t.unwrap()).collect();
    let labels: Vec<&str> = tables.iter().map(|t| t.label.as_str()).collect();
    assert_eq!(labels, ["Cr7Zn", "Cr7Cu", "Cr7Ni", "Cr8", "Cr7Fe", "Cr7Mn"]);

    // cost of the substituted site, k = 5 in 1-based numbering
    let golden_cost5 = [
        0.0,
        0.6935247386287,
        1.273916315923,
        1.784188038461,
        1.958610885920,
        2.091191625897,
    ];
    let golden_e0 = [
        -17.39721798446,
        -19.23234095597,
        -21.08330666263,
        -22.93004235071,
        -24.48037411393,
        -26.01489591731,
    ];
    for ((t, c), e) in tables.iter().zip(golden_cost5).zip(golden_e0) {
        assert!((t.row(4).unwrap().cost - c).abs() < 1e-9, "{}", t.label);
        assert!((t.e0 - e).abs() < 1e-9, "{}", t.label);
        for d in 1..4 {
            let (l, r) = (t.row(4 - d).unwrap(), t.row((4 + d) % 8).unwrap());
            assert!((l.cost - r.cost).abs() < 1e-8, "{} mirror {d}", t.label);
        }
        for r in t.active() {
            assert!(r.cost > 0.0, "{} site {}", t.label, r.site);
        }
    }
    let zn = &tables[0];
    assert!((zn.row(3).unwrap().cost - 0.9601978492095).abs() < 1e-9);
    assert!((zn.row(0).unwrap().cost - 1.482422689148).abs() < 1e-9);
    // heavier defects invert the ordering around the defect
    for t in &tables[4..] {
        let five = t.row(4).unwrap().cost;
        assert!(t.active().all(|r| r.cost <= five));
    }
}

/// Threshold of position `p` of an open s = 3/2 chain from dense pieces.
fn open_chain_threshold(n: usize, p: usize) -> f64 {
    let s = CR.value();
    let mut e = 0.0;
    if p > 0 {
        e += DenseModel::chain(&vec![3; p])
            .with_field(p - 1, 0.0, s)
            .ground_energy();
    }
    if p + 1 < n {
        e += DenseModel::chain(&vec![3; n - p - 1])
            .with_field(0, 0.0, s)
            .ground_energy();
    }
    e
}

#[test]
fn spinless_defect_reduces_to_the_open_chain() {
    let zn = SpinSystem::uniform(Topology::Ring, 8, CR)
        .unwrap()
        .with_defect(4, SpinLength::ZERO)
        .unwrap();
    let opts = SolverOptions::default();
    // chain positions 0..=3 carry ring labels 5, 6, 7, 0
    for p in 0..4 {
        let ours = single_site_threshold(&zn, p, &opts).unwrap();
        let oracle = open_chain_threshold(7, p);
        assert!((ours - oracle).abs() < 1e-9, "position {p}: {ours} vs {oracle}");
    }
}

#[test]
fn single_site_thresholds_match_scf() {
    let system = SpinSystem::uniform(Topology::Ring, 6, SpinLength::ONE)
        .unwrap()
        .with_defect(1, SpinLength::HALF)
        .unwrap();
    let opts = SolverOptions::default();
    let cfg = ScfConfig::default();
    for k in 0..6 {
        let t = single_site_threshold(&system, k, &opts).unwrap();
        let r = biseparable_minimum(&system, SiteArc::new(k, 1), &cfg).unwrap();
        assert!((t - r.ebs).abs() < 1e-8, "k={k}: {t} vs {}", r.ebs);
    }
}

#[test]
fn verdict_for_an_energy_between_thresholds() {
    let cu = SpinSystem::uniform(Topology::Ring, 8, CR)
        .unwrap()
        .with_defect(4, SpinLength::HALF)
        .unwrap();
    let table = threshold_table(&cu, "Cr7Cu", &SolverOptions::default()).unwrap();
    let e5 = table.row(4).unwrap().ebs;
    let e4 = table.row(3).unwrap().ebs;
    assert!(e5 < e4);
    let v = verdict(0.5 * (e5 + e4), &table, e5);
    assert_eq!(v.sites, [0, 1, 2, 3, 5, 6, 7]);
    assert!(!v.multipartite && v.conclusive);
}

#[test]
fn singlet_products_are_not_eigenstates() {
    let ring = SpinSystem::uniform(Topology::Ring, 8, SpinLength::HALF).unwrap();
    let r = verify_not_eigenstate(&ring, SiteArc::new(0, 4), 1000, 3, &SolverOptions::default())
        .unwrap();
    match r {
        NotEigenstate::MinVariance(v) => assert!(v > 1e-6, "{v}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn thermal_curve_and_crossing() {
    let ring = SpinSystem::uniform(Topology::Ring, 8, SpinLength::HALF).unwrap();
    let th = ThermalSpectrum::of(&ring, &SolverOptions::default()).unwrap();
    assert_eq!(th.levels().len(), 256);
    let oracle = DenseModel::ring(&[1; 8]).spectrum();
    for (a, b) in th.levels().iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10);
    }
    let mut prev = th.energy(0.0);
    for i in 1..=200 {
        let e = th.energy(0.025 * i as f64);
        assert!(e > prev, "not increasing at T = {}", 0.025 * i as f64);
        prev = e;
    }
    let cross = th.threshold_temperature(-3.243577133888).unwrap();
    assert!(cross.residual < 1e-10);
    assert!((cross.t - 0.327706922729).abs() < 1e-9, "{}", cross.t);
}

proptest! {
    #[test]
    fn f_second_term_is_below_one(two_s in 1u32..=5, xa in 0u32..=5, xb in 0u32..=5) {
        prop_assume!(xa <= two_s && xb <= two_s && (xa, xb) != (0, 0));
        let f = f_factor(xa, xb, SpinLength::from_twice(two_s)).unwrap();
        prop_assert!((f - 1.0).abs() < 1.0);
    }
}
