use std::f64::consts::PI;

use crate::eigensolver::ground_state;
use crate::error::{Error, Result};
use crate::hamiltonian::{build_hamiltonian, SiteArc, SpinSystem, Topology};
use crate::operator::total_spin_squared;
use crate::scf::{biseparable_minimum, biseparable_scan, map_point, ScanResult};
use crate::state::expectation;
use crate::witness::{defect_series, molecule_label, threshold_table, verdict, ThermalSpectrum};

use super::config::{one_based, RunConfig};
use super::output::{Cell, Table};

/// Human-readable model: `ring 1/2 1/2 ...`.
pub fn describe(system: &SpinSystem) -> String {
    let spins: Vec<String> = system.spins().iter().map(|s| s.to_string()).collect();
    format!("{} {}", system.topology(), spins.join(" "))
}

/// Output warnings go to stderr; the table itself is unaffected.
pub struct Outcome {
    pub table: Table,
    pub warnings: Vec<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self {
            table,
            warnings: Vec::new(),
        }
    }
}

pub fn ground(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let opts = cfg.solver_options();
    let g = ground_state(&build_hamiltonian(&system)?, &opts)?;
    let s2 = expectation(&g.state, &total_spin_squared(g.state.basis())?)?;
    let mut t = Table::new(&["e0", "gap", "s2", "degenerate", "iterations", "residual"]);
    t.meta("model", describe(&system));
    t.push(vec![
        g.energy.into(),
        g.gap.into(),
        s2.into(),
        g.degenerate.into(),
        g.iterations.into(),
        g.residual.into(),
    ]);
    Ok(t.into())
}

pub fn map(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    if system.topology() != Topology::Chain {
        return Err(Error::InvalidArgument("map needs a chain model".into()));
    }
    let m = &cfg.map;
    if m.theta_points < 2 {
        return Err(Error::InvalidArgument("map.theta_points must be at least 2".into()));
    }
    if m.z_diff.iter().chain(&m.moduli).any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument("map grids must be finite and non-negative".into()));
    }
    let opts = cfg.solver_options();
    let thetas: Vec<f64> = (0..m.theta_points)
        .map(|k| {
            if k + 1 == m.theta_points {
                PI
            } else {
                PI * k as f64 / (m.theta_points - 1) as f64
            }
        })
        .collect();
    let mut t = Table::new(&["theta_b", "z_diff_b", "modulus_b", "theta_a", "z_diff_a"]);
    t.meta("model", describe(&system));
    for &zd in &m.z_diff {
        for &modulus in &m.moduli {
            for &theta in &thetas {
                let p = map_point(system.spins(), theta, zd, modulus, &opts)?;
                t.push(vec![
                    theta.into(),
                    zd.into(),
                    modulus.into(),
                    p.geometry.theta.unwrap_or(f64::NAN).into(),
                    p.geometry.z_diff.into(),
                ]);
            }
        }
    }
    Ok(t.into())
}

pub fn bisep(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let scf = cfg.scf_config()?;
    let n = system.n_sites();
    let arc = SiteArc::new(one_based(cfg.bisep.offset, n)?, cfg.bisep.length);
    arc.validate(&system)?;
    let e0 = ground_state(&build_hamiltonian(&system)?, &scf.solver)?.energy;
    let r = biseparable_minimum(&system, arc, &scf)?;
    let mut t = Table::new(&[
        "row",
        "eta",
        "z0",
        "converged",
        "iterations",
        "ebs",
        "ebs_minus_e0",
        "residual",
    ]);
    t.meta("model", describe(&system));
    t.meta("offset", cfg.bisep.offset);
    t.meta("n_a", arc.length);
    t.meta("e0", e0);
    for b in &r.branches {
        t.push(vec![
            "branch".into(),
            b.eta.to_string().into(),
            b.z0.into(),
            b.converged.into(),
            b.iterations.into(),
            b.ebs.into(),
            (b.ebs - e0).into(),
            b.residual.into(),
        ]);
    }
    t.push(vec![
        "decoupled".into(),
        "".into(),
        0.0.into(),
        true.into(),
        0usize.into(),
        r.decoupled_energy.into(),
        (r.decoupled_energy - e0).into(),
        0.0.into(),
    ]);
    t.push(vec![
        "min".into(),
        if r.decoupled { String::new() } else { r.eta.to_string() }.into(),
        r.max_moment().into(),
        r.converged.into(),
        r.history.len().into(),
        r.ebs.into(),
        (r.ebs - e0).into(),
        r.residual.into(),
    ]);
    Ok(t.into())
}

pub fn scan_table(system: &SpinSystem, scan: &ScanResult) -> Outcome {
    let mut t = Table::new(&[
        "row",
        "n_a",
        "n_b",
        "offset",
        "eta",
        "decoupled",
        "ebs",
        "ebs_minus_e0",
        "status",
    ]);
    t.meta("model", describe(system));
    t.meta("e0", scan.e0);
    if system.is_homogeneous() && system.topology() == Topology::Ring {
        t.meta("note", "homogeneous ring: one offset per N_A by rotational symmetry");
    }
    let mut warnings = Vec::new();
    let row = |kind: &str, r: &crate::scf::BipartitionReport| -> Vec<Cell> {
        let mut cells: Vec<Cell> = vec![
            kind.into(),
            r.n_a.into(),
            r.n_b.into(),
            (r.arc.offset + 1).into(),
        ];
        match &r.result {
            Ok(res) => cells.extend([
                if res.decoupled { String::new() } else { res.eta.to_string() }.into(),
                res.decoupled.into(),
                res.ebs.into(),
                (res.ebs - scan.e0).into(),
                "ok".into(),
            ]),
            Err(_) => cells.extend([
                "".into(),
                false.into(),
                f64::NAN.into(),
                f64::NAN.into(),
                "failed".into(),
            ]),
        }
        cells
    };
    for r in &scan.reports {
        if let Err(e) = &r.result {
            warnings.push(format!(
                "bipartition N_A={} offset={} failed and is excluded from the minimum: {e}",
                r.n_a,
                r.arc.offset + 1
            ));
        }
        t.push(row("arc", r));
    }
    if let Some(b) = scan.best {
        t.push(row("min", &scan.reports[b]));
    }
    t.meta("incomplete", scan.incomplete);
    Outcome { table: t, warnings }
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let result = biseparable_scan(&system, &cfg.scf_config()?)?;
    if result.best.is_none() {
        return Err(Error::InvalidArgument(
            "every bipartition failed; no biseparable minimum".into(),
        ));
    }
    Ok(scan_table(&system, &result))
}

pub fn defect(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.model.defect.is_some() {
        return Err(Error::InvalidArgument(
            "defect series substitutes its own defect; drop model.defect".into(),
        ));
    }
    let base = cfg.base_system()?;
    if base.topology() != Topology::Ring || !base.is_homogeneous() {
        return Err(Error::InvalidArgument("defect needs a homogeneous ring model".into()));
    }
    let n = base.n_sites();
    let site = one_based(cfg.defect.site, n)?;
    let spins = cfg.defect_spins()?;
    let s = base.spins()[0];
    let opts = cfg.solver_options();
    let tables = defect_series(s, n, site, &spins, &opts);

    let mut t = Table::new(&["label", "s_m", "k", "ebs", "cost", "spinless", "status"]);
    t.meta("model", describe(&base));
    t.meta("defect_site", cfg.defect.site);
    let mut warnings = Vec::new();
    for (sm, table) in spins.iter().zip(tables) {
        match table {
            Ok(table) => {
                t.meta(&format!("e0 {}", table.label), table.e0);
                for r in &table.rows {
                    t.push(vec![
                        table.label.clone().into(),
                        sm.to_string().into(),
                        (r.site + 1).into(),
                        r.ebs.into(),
                        r.cost.into(),
                        r.spinless.into(),
                        "ok".into(),
                    ]);
                }
            }
            Err(e) => {
                let label = molecule_label(s, n, *sm);
                warnings.push(format!("substitution {label} failed: {e}"));
                t.push(vec![
                    label.into(),
                    sm.to_string().into(),
                    (site + 1).into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    sm.is_zero().into(),
                    "failed".into(),
                ]);
            }
        }
    }
    Ok(Outcome { table: t, warnings })
}

pub fn verdict_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let measured = cfg
        .verdict
        .energy
        .ok_or_else(|| Error::InvalidArgument("verdict.energy is required".into()))?;
    if !measured.is_finite() {
        return Err(Error::InvalidArgument("verdict.energy must be finite".into()));
    }
    let system = cfg.system()?;
    let opts = cfg.solver_options();
    let table = threshold_table(&system, &describe(&system), &opts)?;
    let scan = biseparable_scan(&system, &cfg.scf_config()?)?;
    let global = scan
        .global_ebs()
        .ok_or_else(|| Error::InvalidArgument("no biseparable minimum available".into()))?;
    let v = verdict(measured, &table, global);

    let mut t = Table::new(&["k", "ebs_k", "entangled"]);
    t.meta("model", describe(&system));
    t.meta("measured_energy", measured);
    t.meta("e0", table.e0);
    t.meta("global_ebs", global);
    t.meta("multipartite", v.multipartite);
    t.meta("conclusive", v.conclusive);
    for r in table.active() {
        t.push(vec![
            (r.site + 1).into(),
            r.ebs.into(),
            v.sites.contains(&r.site).into(),
        ]);
    }
    let mut warnings = Vec::new();
    if scan.incomplete {
        warnings.push("some bipartitions failed; the global minimum may be too high".into());
    }
    Ok(Outcome { table: t, warnings })
}

pub fn thermal(cfg: &RunConfig) -> Result<Outcome> {
    let system = cfg.system()?;
    let temps = cfg.temperatures()?;
    let opts = cfg.solver_options();
    let spectrum = ThermalSpectrum::of(&system, &opts)?;

    let mut thresholds: Vec<(String, f64)> = cfg
        .thermal
        .thresholds
        .iter()
        .map(|&x| ("threshold".to_string(), x))
        .collect();
    if cfg.thermal.include_global_ebs {
        let scan = biseparable_scan(&system, &cfg.scf_config()?)?;
        if let Some(e) = scan.global_ebs() {
            thresholds.push(("global_ebs".into(), e));
        }
    }

    let mut t = Table::new(&["row", "t", "energy", "residual"]);
    t.meta("model", describe(&system));
    t.meta("e0", spectrum.ground_energy());
    t.meta("levels", spectrum.levels().len());
    for &temp in &temps {
        t.push(vec!["curve".into(), temp.into(), spectrum.energy(temp).into(), f64::NAN.into()]);
    }
    let mut warnings = Vec::new();
    for (kind, e) in thresholds {
        match spectrum.threshold_temperature(e) {
            Ok(c) => t.push(vec![kind.into(), c.t.into(), e.into(), c.residual.into()]),
            Err(err) => {
                warnings.push(format!("{kind} {e}: {err}"));
                t.push(vec![kind.into(), f64::NAN.into(), e.into(), f64::NAN.into()]);
            }
        }
    }
    Ok(Outcome { table: t, warnings })
}
