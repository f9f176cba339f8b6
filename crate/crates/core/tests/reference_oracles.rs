use std::sync::Arc;

use hiphome::corrector::{compute_correctors, taylor_dispersion};
use hiphome::fem1d::build_mesh;
use hiphome::geometry::{ChannelDomain, ProblemData, VelocityProfile};
use hiphome::metrics::{compare, Lattice};
use hiphome::modal_basis::{hiphome_basis, DEFAULT_PANELS};
use hiphome::reduced::assemble;
use hiphome::reference::{solve_effective, solve_reference_2d, ReferenceField2D, TimeMode};

fn setup() -> (ProblemData, VelocityProfile, ChannelDomain) {
    (
        ProblemData::new(1.0, 1.0, 0.0, 1.0).unwrap(),
        VelocityProfile::poiseuille(10.0, 0.2).unwrap(),
        ChannelDomain::new(2.0, 0.2, 0.2).unwrap(),
    )
}

fn reference(nx: usize, nz: usize) -> ReferenceField2D {
    let (p, u, d) = setup();
    solve_reference_2d(&p, &u, &d, nx, nz, &TimeMode::Steady).unwrap().remove(0)
}

#[test]
fn reference_self_convergence_is_second_order() {
    // nodes of the coarsest lattice are shared by the finer ones
    let (nx, nz) = (201, 9);
    let fields: Vec<ReferenceField2D> = (0..3)
        .map(|k| reference((nx - 1) * (1 << k) + 1, (nz - 1) * (1 << k) + 1))
        .collect();
    let coarse_nodes = |f: &ReferenceField2D, k: usize| -> Vec<f64> {
        let (_, fz) = f.lattice();
        let s = 1 << k;
        let mut v = Vec::new();
        for i in 0..nx {
            for j in 0..nz {
                v.push(f.values()[i * s * fz + j * s]);
            }
        }
        v
    };
    let q: Vec<Vec<f64>> = fields.iter().enumerate().map(|(k, f)| coarse_nodes(f, k)).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let rate = (dist(&q[0], &q[1]) / dist(&q[1], &q[2])).log2();
    assert!((rate - 2.0).abs() <= 0.2, "rate {rate}");
}

#[test]
fn transverse_average_matches_effective_model() {
    let (p, u, d) = setup();
    let r = reference(801, 41);
    let set = compute_correctors(&u, &d, 1.0, 1, 2048).unwrap();
    let coeffs = taylor_dispersion(&set, &d).unwrap();
    let mesh = build_mesh(2.0, 0.0025).unwrap();
    let ce = solve_effective(&p, &coeffs, &mesh, &d, &TimeMode::Steady).unwrap().remove(0);
    let (nx, _) = r.lattice();
    let eps = d.epsilon();
    let mut worst: f64 = 0.0;
    for i in 0..nx {
        let x = r.node(i, 0).0;
        if (0.5..=1.5).contains(&x) {
            let gap = (r.column_average(i) - ce.evaluate(x, 0.0).unwrap()).abs();
            worst = worst.max(gap);
        }
    }
    assert!(worst <= 10.0 * eps * eps, "max gap {worst}");
}

#[test]
fn reduced_model_dominates_effective_model() {
    let (p, u, d) = setup();
    let r = reference(801, 41);
    let set = compute_correctors(&u, &d, 1.0, 4, 2048).unwrap();
    let coeffs = taylor_dispersion(&set, &d).unwrap();
    let mesh = build_mesh(2.0, 0.0125).unwrap();
    let lattice = Lattice::default();
    let ce = solve_effective(&p, &coeffs, &mesh, &d, &TimeMode::Steady).unwrap().remove(0);
    let baseline = compare(&r, &ce, &d, lattice).unwrap().l2_error;
    let mut errors = Vec::new();
    for m in 1..=4 {
        let basis = Arc::new(hiphome_basis(&set, m, DEFAULT_PANELS).unwrap());
        let sol = assemble(&p, basis, &mesh, &u, &d).unwrap().solve_steady().unwrap();
        errors.push(compare(&r, &sol, &d, lattice).unwrap().l2_error);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    for e in &errors[1..] {
        assert!(10.0 * e < baseline, "{e} vs {baseline}");
    }
}
