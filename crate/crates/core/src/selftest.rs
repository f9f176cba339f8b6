//! Invariant suites run by the `selftest` subcommand.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::corrector::{compute_correctors, oracle_corrector_bvp, taylor_dispersion};
use crate::error::{Error, Result};
use crate::fem1d::build_mesh;
use crate::geometry::{ChannelDomain, ProblemData, VelocityProfile};
use crate::metrics::{l2_norm, FnField, Lattice};
use crate::modal_basis::{educated_basis, hiphome_basis, hiphome_basis_partial, DEFAULT_PANELS};
use crate::reduced::assemble;
use crate::reference::{solve_effective, TimeMode};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `check,value,tolerance,pass`, one row per check.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,value,tolerance,pass\n");
        for c in &self.checks {
            let _ = writeln!(s, "{},{:.16e},{:.16e},{}", c.name, c.value, c.tolerance, c.passed);
        }
        s
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn preset_channel() -> Result<ChannelDomain> {
    ChannelDomain::new(2.0, 0.2, 0.2)
}

fn corrector_checks(out: &mut Vec<Check>) -> Result<()> {
    let d = preset_channel()?;
    let profiles = [
        ("poiseuille", VelocityProfile::poiseuille(10.0, 0.2)?),
        ("loglaw", VelocityProfile::loglaw(0.41, 0.001, 0.2)?),
    ];
    let n = 4096;
    for (name, p) in &profiles {
        let set = compute_correctors(p, &d, 1.0, 4, n)?;
        let mut worst: f64 = 0.0;
        for i in 1..=4 {
            let lower: Vec<&[f64]> = (0..i).map(|k| set.corrector(k)).collect();
            let fd = oracle_corrector_bvp(p, &d, 1.0, i, &lower, n)?;
            worst = worst.max(max_abs_diff(&fd, set.corrector(i)));
        }
        out.push(Check::at_most(format!("corrector_oracle_{name}"), worst, 1e-6));
    }

    // χ₁* = (s/D)(y³/6 − Y²y/2) for u = s·y
    let d = ChannelDomain::new(1.0, 0.1, 0.1)?;
    let p = VelocityProfile::linear_shear(1.0, 0.1)?;
    let set = compute_correctors(&p, &d, 1.0, 1, 2048)?;
    let y2 = 0.25;
    let exact: Vec<f64> = set.grid().iter().map(|y| y.powi(3) / 6.0 - y2 * y / 2.0).collect();
    out.push(Check::at_most(
        "linear_shear_closed_form",
        max_abs_diff(&exact, set.corrector(1)),
        1e-8,
    ));
    let eff = taylor_dispersion(&set, &d)?;
    out.push(Check::at_most(
        "linear_shear_dispersion",
        (eff.dispersion - 0.1 * (1.0 + 1.0 / 120.0)).abs(),
        1e-8,
    ));
    Ok(())
}

fn basis_checks(out: &mut Vec<Check>) -> Result<()> {
    let d = preset_channel()?;
    let pois = VelocityProfile::poiseuille(10.0, 0.2)?;
    let log = VelocityProfile::loglaw(0.41, 0.001, 0.2)?;
    let pset = compute_correctors(&pois, &d, 1.0, 9, 2048)?;
    let lset = compute_correctors(&log, &d, 1.0, 11, 2048)?;
    let ph = hiphome_basis(&pset, 10, DEFAULT_PANELS)?;
    let lh = hiphome_basis(&lset, 12, DEFAULT_PANELS)?;
    let ed = educated_basis(12, 1.0, DEFAULT_PANELS)?;
    out.push(Check::at_most("gram_defect_hiphome_poiseuille", ph.gram_defect(), 1e-10));
    out.push(Check::at_most("gram_defect_hiphome_loglaw", lh.gram_defect(), 1e-10));
    out.push(Check::at_most("gram_defect_educated", ed.gram_defect(), 1e-10));

    let pts: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    let mut even: f64 = 0.0;
    for k in 0..ph.len() {
        for &z in &pts {
            even = even.max((ph.eval(k, z).0 - ph.eval(k, 1.0 - z).0).abs());
        }
    }
    out.push(Check::at_most("hiphome_poiseuille_symmetry", even, 1e-8));
    let mut odd: f64 = 0.0;
    for k in (1..ed.len()).step_by(2) {
        for &z in &pts {
            odd = odd.max((ed.eval(k, z).0 + ed.eval(k, 1.0 - z).0).abs());
        }
    }
    out.push(Check::at_most("educated_odd_antisymmetry", odd, 1e-12));
    Ok(())
}

fn degenerate_checks(out: &mut Vec<Check>) -> Result<()> {
    let d = preset_channel()?;
    let p = VelocityProfile::constant(3.0);
    let set = compute_correctors(&p, &d, 1.0, 3, 1024)?;
    let worst = (1..=3)
        .flat_map(|i| set.corrector(i).iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    out.push(Check::at_most("constant_profile_correctors", worst, 0.0));
    let eff = taylor_dispersion(&set, &d)?;
    out.push(Check::at_most(
        "constant_profile_dispersion",
        (eff.dispersion - d.epsilon()).abs(),
        0.0,
    ));
    let (basis, err) = hiphome_basis_partial(&set, 2, DEFAULT_PANELS)?;
    let raised = matches!(err, Some(Error::Degenerate { .. })) && basis.len() == 1;
    out.push(Check::at_most(
        "constant_profile_degeneracy_raised",
        if raised { 0.0 } else { 1.0 },
        0.0,
    ));

    let problem = ProblemData::new(1.0, 1.0, 0.0, 1.0)?;
    let mesh = build_mesh(2.0, 0.0125)?;
    let reduced = assemble(&problem, Arc::new(basis), &mesh, &p, &d)?.solve_steady()?;
    let effective = solve_effective(&problem, &eff, &mesh, &d, &TimeMode::Steady)?.remove(0);
    let gap = (0..mesh.len())
        .map(|s| (reduced.coefficient(0, s) - effective.values()[s]).abs())
        .fold(0.0, f64::max);
    out.push(Check::at_most("constant_profile_m1_equals_effective", gap, 1e-10));
    Ok(())
}

fn metric_checks(out: &mut Vec<Check>) -> Result<()> {
    let d = preset_channel()?;
    let n = l2_norm(&FnField(|_, _| 1.0), &d, Lattice::default())?;
    out.push(Check::at_most("unit_field_norm", (n - d.area().sqrt()).abs(), 1e-14));
    Ok(())
}

/// Runs every suite; an error inside a suite is reported as a failed check.
pub fn selftest() -> SelfTestReport {
    let mut checks = Vec::new();
    let suites: [(&str, fn(&mut Vec<Check>) -> Result<()>); 4] = [
        ("correctors", corrector_checks),
        ("bases", basis_checks),
        ("degenerate", degenerate_checks),
        ("metrics", metric_checks),
    ];
    for (name, suite) in suites {
        if suite(&mut checks).is_err() {
            checks.push(Check {
                name: format!("{name}_suite_error"),
                value: 1.0,
                tolerance: 0.0,
                passed: false,
            });
        }
    }
    SelfTestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_and_is_reproducible() {
        let a = selftest();
        for c in &a.checks {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(a.to_csv(), selftest().to_csv());
    }
}
