//! Baselines: a full 2D P1 Galerkin solver on a structured triangulation, the
//! leading-order advection-reaction model and the Taylor-dispersion effective model.

use std::io::Write;
use std::path::Path;

use crate::corrector::EffectiveCoefficients;
use crate::error::{Error, Result};
use crate::fem1d::{check_peclet, snapshot_steps, time_steps, Adr1D, Mesh1D};
use crate::geometry::{ChannelDomain, ProblemData, VelocityProfile};
use crate::linalg::BandedMatrix;

/// Steady solve or θ-method trajectory sampled at `snapshots`.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeMode {
    Steady,
    Theta {
        dt: f64,
        theta: f64,
        final_time: f64,
        snapshots: Vec<f64>,
    },
}

/// Seven-point degree-5 rule on the reference triangle: barycentric coordinates
/// and weights summing to one.
const DUNAVANT5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Nodal P1 field on the `N_x × N_z` lattice (index `i·N_z + j`).
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceField2D {
    domain: ChannelDomain,
    nx: usize,
    nz: usize,
    values: Vec<f64>,
    time: f64,
}

impl ReferenceField2D {
    pub fn lattice(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    fn hx(&self) -> f64 {
        self.domain.length() / (self.nx - 1) as f64
    }

    fn hz(&self) -> f64 {
        self.domain.width() / (self.nz - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (
            i as f64 * self.hx(),
            -0.5 * self.domain.width() + j as f64 * self.hz(),
        )
    }

    fn cell(&self, x: f64, z: f64) -> (usize, usize, f64, f64) {
        let sx = (x / self.hx()).clamp(0.0, (self.nx - 1) as f64);
        let sz = ((z + 0.5 * self.domain.width()) / self.hz()).clamp(0.0, (self.nz - 1) as f64);
        let i = (sx.floor() as usize).min(self.nx - 2);
        let j = (sz.floor() as usize).min(self.nz - 2);
        (i, j, sx - i as f64, sz - j as f64)
    }

    /// P1 interpolant on the triangle containing `(x, z)`.
    pub fn evaluate(&self, x: f64, z: f64) -> Result<f64> {
        self.domain.check_point(x, z)?;
        Ok(self.eval_unchecked(x, z))
    }

    fn eval_unchecked(&self, x: f64, z: f64) -> f64 {
        let (i, j, s, t) = self.cell(x, z);
        let v = |a: usize, b: usize| self.values[a * self.nz + b];
        let (v00, v10, v11, v01) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
        if t <= s {
            // lower triangle (i,j)-(i+1,j)-(i+1,j+1)
            v00 + s * (v10 - v00) + t * (v11 - v10)
        } else {
            // upper triangle (i,j)-(i+1,j+1)-(i,j+1)
            v00 + t * (v01 - v00) + s * (v11 - v01)
        }
    }

    pub fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        for &x in xs {
            self.domain.check_point(x, 0.0)?;
        }
        for &z in zs {
            self.domain.check_point(0.0, z)?;
        }
        let mut out = Vec::with_capacity(xs.len() * zs.len());
        for &x in xs {
            for &z in zs {
                out.push(self.eval_unchecked(x, z));
            }
        }
        Ok(out)
    }

    /// Transverse average at lattice column `i` (trapezoid rule, exact for P1).
    pub fn column_average(&self, i: usize) -> f64 {
        let col = &self.values[i * self.nz..(i + 1) * self.nz];
        let inner: f64 = col[1..self.nz - 1].iter().sum();
        (inner + 0.5 * (col[0] + col[self.nz - 1])) / (self.nz - 1) as f64
    }

    /// Writes `x,z,c` over the node lattice.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut body = || -> std::io::Result<()> {
            writeln!(w, "x,z,c")?;
            for i in 0..self.nx {
                for j in 0..self.nz {
                    let (x, z) = self.node(i, j);
                    writeln!(w, "{:.16e},{:.16e},{:.16e}", x, z, self.values[i * self.nz + j])?;
                }
            }
            w.flush()
        };
        body().map_err(|e| Error::io(path, e))
    }
}

/// `ref_t{time}.csv`, time printed with the shortest exact decimal representation.
pub fn snapshot_file_name(time: f64) -> String {
    format!("ref_t{time}.csv")
}

struct Assembled {
    operator: BandedMatrix,
    mass: BandedMatrix,
    load: Vec<f64>,
}

fn assemble_2d(
    problem: &ProblemData,
    profile: &VelocityProfile,
    domain: &ChannelDomain,
    nx: usize,
    nz: usize,
) -> Result<Assembled> {
    let n = nx * nz;
    let hx = domain.length() / (nx - 1) as f64;
    let hz = domain.width() / (nz - 1) as f64;
    let z0 = -0.5 * domain.width();
    let d_eps = problem.scaled_diffusion(domain);
    let band = nz + 1;
    let mut operator = BandedMatrix::zeros(n, band, band);
    let mut mass = BandedMatrix::zeros(n, band, band);
    let mut load = vec![0.0; n];
    let area = 0.5 * hx * hz;

    // speed at the quadrature points of the two triangle shapes in cell row j
    let mut speeds = vec![[[0.0; 7]; 2]; nz - 1];
    for (j, row) in speeds.iter_mut().enumerate() {
        let zs = [z0 + j as f64 * hz, z0 + (j + 1) as f64 * hz];
        // lower: (i,j)(i+1,j)(i+1,j+1); upper: (i,j)(i+1,j+1)(i,j+1)
        let tri_z = [[zs[0], zs[0], zs[1]], [zs[0], zs[1], zs[1]]];
        for (shape, tz) in tri_z.iter().enumerate() {
            for (q, (bary, _)) in DUNAVANT5.iter().enumerate() {
                let z = bary[0] * tz[0] + bary[1] * tz[1] + bary[2] * tz[2];
                row[shape][q] = profile.speed(z.clamp(z0, -z0))?;
            }
        }
    }

    for i in 0..nx - 1 {
        for j in 0..nz - 1 {
            let id = |a: usize, b: usize| a * nz + b;
            let x0 = i as f64 * hx;
            let zb = z0 + j as f64 * hz;
            let tris = [
                (
                    [id(i, j), id(i + 1, j), id(i + 1, j + 1)],
                    [(x0, zb), (x0 + hx, zb), (x0 + hx, zb + hz)],
                ),
                (
                    [id(i, j), id(i + 1, j + 1), id(i, j + 1)],
                    [(x0, zb), (x0 + hx, zb + hz), (x0, zb + hz)],
                ),
            ];
            for (shape, (nodes, pts)) in tris.iter().enumerate() {
                let det = (pts[1].0 - pts[0].0) * (pts[2].1 - pts[0].1)
                    - (pts[2].0 - pts[0].0) * (pts[1].1 - pts[0].1);
                let grads: [(f64, f64); 3] = std::array::from_fn(|k| {
                    let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                    ((pts[a].1 - pts[b].1) / det, (pts[b].0 - pts[a].0) / det)
                });
                // ∫u λ_a over the triangle
                let mut u_lambda = [0.0; 3];
                for (q, (bary, w)) in DUNAVANT5.iter().enumerate() {
                    let u = speeds[j][shape][q];
                    for a in 0..3 {
                        u_lambda[a] += w * area * u * bary[a];
                    }
                }
                for a in 0..3 {
                    for b in 0..3 {
                        let diff = d_eps * area * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                        let m_ab = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                        let adv = u_lambda[a] * grads[b].0;
                        operator.add(nodes[a], nodes[b], diff + adv + problem.reaction * m_ab);
                        mass.add(nodes[a], nodes[b], m_ab);
                    }
                    load[nodes[a]] += problem.forcing * area / 3.0;
                }
            }
        }
    }
    Ok(Assembled {
        operator,
        mass,
        load,
    })
}

/// P1 Galerkin solution of the full problem with Dirichlet inlet `c_B`, natural
/// outflow and Neumann walls. Returns one field for a steady solve, else one per
/// snapshot.
pub fn solve_reference_2d(
    problem: &ProblemData,
    profile: &VelocityProfile,
    domain: &ChannelDomain,
    nx: usize,
    nz: usize,
    mode: &TimeMode,
) -> Result<Vec<ReferenceField2D>> {
    problem.validate()?;
    if nx < 3 || nz < 3 {
        return Err(Error::invalid(format!(
            "reference lattice needs at least 3 × 3 nodes (got {nx} × {nz})"
        )));
    }
    let hx = domain.length() / (nx - 1) as f64;
    check_peclet(profile.max_abs_speed(domain)?, hx, problem.scaled_diffusion(domain))?;
    let sys = assemble_2d(problem, profile, domain, nx, nz)?;
    let inlet_rows = 0..nz;
    let field = |values: Vec<f64>, time: f64| ReferenceField2D {
        domain: *domain,
        nx,
        nz,
        values,
        time,
    };
    match mode {
        TimeMode::Steady => {
            let mut a = sys.operator;
            let mut b = sys.load;
            for r in inlet_rows {
                a.pin_row(r);
                b[r] = problem.inlet;
            }
            Ok(vec![field(a.factor()?.solve(&b), 0.0)])
        }
        TimeMode::Theta {
            dt,
            theta,
            final_time,
            snapshots,
        } => {
            let steps = time_steps(*dt, *final_time)?;
            let wanted = snapshot_steps(snapshots, *dt, steps)?;
            if !(0.0..=1.0).contains(theta) {
                return Err(Error::invalid(format!("theta must lie in [0, 1] (got {theta})")));
            }
            let mut lhs = sys.mass.combine(1.0 / dt, &sys.operator, *theta);
            for r in inlet_rows.clone() {
                lhs.pin_row(r);
            }
            let lu = lhs.factor()?;
            let rhs_op = sys.mass.combine(1.0 / dt, &sys.operator, theta - 1.0);
            let mut c = vec![problem.initial; nx * nz];
            for r in inlet_rows.clone() {
                c[r] = problem.inlet;
            }
            let bound = 1e8 * (1.0 + problem.inlet.abs() + problem.initial.abs() + problem.forcing.abs() * (1.0 + final_time));
            let mut out = Vec::with_capacity(wanted.len());
            for n in 1..=steps {
                let mut b = rhs_op.matvec(&c);
                b.iter_mut().zip(&sys.load).for_each(|(x, f)| *x += f);
                for r in inlet_rows.clone() {
                    b[r] = problem.inlet;
                }
                c = lu.solve(&b);
                if c.iter().any(|v| !(v.abs() <= bound)) {
                    return Err(Error::BlowUp {
                        step: n,
                        time: n as f64 * dt,
                    });
                }
                if wanted.contains(&n) {
                    out.push(field(c.clone(), n as f64 * dt));
                }
            }
            Ok(out)
        }
    }
}

/// 1D field depending on `x` only.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveField1D {
    mesh: Mesh1D,
    domain: ChannelDomain,
    values: Vec<f64>,
    pub mean_speed: f64,
    pub dispersion: f64,
    pub reaction: f64,
    pub forcing: f64,
    pub mesh_peclet: f64,
    time: f64,
}

impl EffectiveField1D {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn evaluate(&self, x: f64, z: f64) -> Result<f64> {
        self.domain.check_point(x, z)?;
        self.mesh.interpolate(&self.values, x)
    }

    pub fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        for &z in zs {
            self.domain.check_point(0.0, z)?;
        }
        let mut out = Vec::with_capacity(xs.len() * zs.len());
        for &x in xs {
            let v = self.mesh.interpolate(&self.values, x)?;
            out.extend(std::iter::repeat(v).take(zs.len()));
        }
        Ok(out)
    }
}

/// Leading-order model `∂_t c₀ + ū∂_x c₀ + σc₀ = f`, first-order upwind in space.
pub fn solve_leading_order(
    problem: &ProblemData,
    mean_speed: f64,
    mesh: &Mesh1D,
    domain: &ChannelDomain,
    mode: &TimeMode,
) -> Result<Vec<EffectiveField1D>> {
    problem.validate()?;
    if !(mean_speed.is_finite() && mean_speed > 0.0) {
        return Err(Error::invalid(format!(
            "the leading-order model needs a positive mean speed (got {mean_speed})"
        )));
    }
    let n = mesh.len();
    let h = mesh.spacing();
    let (u, s, f) = (mean_speed, problem.reaction, problem.forcing);
    let wrap = |values: Vec<f64>, time: f64| EffectiveField1D {
        mesh: *mesh,
        domain: *domain,
        values,
        mean_speed: u,
        dispersion: 0.0,
        reaction: s,
        forcing: f,
        mesh_peclet: f64::INFINITY,
        time,
    };
    match mode {
        TimeMode::Steady => {
            let mut c = vec![problem.inlet; n];
            for k in 1..n {
                c[k] = (u / h * c[k - 1] + f) / (u / h + s);
            }
            Ok(vec![wrap(c, 0.0)])
        }
        TimeMode::Theta {
            dt,
            theta,
            final_time,
            snapshots,
        } => {
            let steps = time_steps(*dt, *final_time)?;
            let wanted = snapshot_steps(snapshots, *dt, steps)?;
            // (L c)_k = u(c_k − c_{k−1})/h + σc_k
            let apply = |c: &[f64], k: usize| u * (c[k] - c[k - 1]) / h + s * c[k];
            let mut c = vec![problem.initial; n];
            c[0] = problem.inlet;
            let mut out = Vec::new();
            for step in 1..=steps {
                let mut next = vec![problem.inlet; n];
                for k in 1..n {
                    let explicit = c[k] / dt - (1.0 - theta) * apply(&c, k) + f;
                    next[k] = (explicit + theta * u / h * next[k - 1]) / (1.0 / dt + theta * (u / h + s));
                }
                c = next;
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::BlowUp {
                        step,
                        time: step as f64 * dt,
                    });
                }
                if wanted.contains(&step) {
                    out.push(wrap(c.clone(), step as f64 * dt));
                }
            }
            Ok(out)
        }
    }
}

/// Effective 1D model with mean speed `ū` and dispersion `D_eff`.
pub fn solve_effective(
    problem: &ProblemData,
    coefficients: &EffectiveCoefficients,
    mesh: &Mesh1D,
    domain: &ChannelDomain,
    mode: &TimeMode,
) -> Result<Vec<EffectiveField1D>> {
    problem.validate()?;
    let base = problem.scaled_diffusion(domain);
    if !(coefficients.dispersion >= base * (1.0 - 1e-12)) {
        return Err(Error::invalid(format!(
            "effective dispersion {} is below εD = {base}",
            coefficients.dispersion
        )));
    }
    let adr = Adr1D::new(
        coefficients.mean_speed,
        coefficients.dispersion,
        problem.reaction,
        problem.forcing,
        problem.inlet,
    );
    let pe = check_peclet(coefficients.mean_speed, mesh.spacing(), coefficients.dispersion)?;
    let wrap = |values: Vec<f64>, time: f64| EffectiveField1D {
        mesh: *mesh,
        domain: *domain,
        values,
        mean_speed: coefficients.mean_speed,
        dispersion: coefficients.dispersion,
        reaction: problem.reaction,
        forcing: problem.forcing,
        mesh_peclet: pe,
        time,
    };
    match mode {
        TimeMode::Steady => Ok(vec![wrap(adr.solve_steady(mesh)?, 0.0)]),
        TimeMode::Theta {
            dt,
            theta,
            final_time,
            snapshots,
        } => Ok(adr
            .solve_theta(mesh, problem.initial, *dt, *theta, *final_time, snapshots)?
            .into_iter()
            .map(|(t, v)| wrap(v, t))
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::build_mesh;

    fn channel() -> ChannelDomain {
        ChannelDomain::new(2.0, 0.2, 0.2).unwrap()
    }

    #[test]
    fn dunavant_rule_is_degree_five() {
        let total: f64 = DUNAVANT5.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        // ∫ λ₀^a λ₁^b λ₂^c = 2·a!b!c!/(a+b+c+2)! · area; normalised by area
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        for (a, b, c) in [(5, 0, 0), (2, 2, 1), (3, 1, 1), (1, 1, 1), (4, 1, 0)] {
            let exact = 2.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 2);
            let got: f64 = DUNAVANT5
                .iter()
                .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                .sum();
            assert!((got - exact).abs() < 1e-13, "{a}{b}{c}: {got} vs {exact}");
        }
    }

    #[test]
    fn constant_state_2d() {
        let d = channel();
        let p = VelocityProfile::poiseuille(10.0, 0.2).unwrap();
        let pd = ProblemData::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let f = solve_reference_2d(&pd, &p, &d, 81, 9, &TimeMode::Steady).unwrap();
        assert!(f[0].values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!((f[0].evaluate(0.77, 0.031).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_d_solver_converges_on_an_x_only_problem() {
        // constant speed: the 2D solution coincides with the 1D closed form
        let d = channel();
        let p = VelocityProfile::constant(1.0);
        let pd = ProblemData::new(0.5, 1.0, 0.0, 1.0).unwrap();
        let (u, dd, s, l): (f64, f64, f64, f64) = (1.0, 0.1, 1.0, 2.0);
        let disc = (u * u + 4.0 * dd * s).sqrt();
        let (r1, r2) = ((u + disc) / (2.0 * dd), (u - disc) / (2.0 * dd));
        let b = 1.0 / (1.0 - r2 / r1 * ((r2 - r1) * l).exp());
        let a = 1.0 - b;
        let exact = |x: f64| a * (r1 * (x - l)).exp() * (r1 * l).exp() + b * (r2 * x).exp();
        let err = |nx: usize| {
            let f = solve_reference_2d(&pd, &p, &d, nx, 5, &TimeMode::Steady).unwrap();
            (0..nx)
                .map(|i| {
                    let (x, _) = f[0].node(i, 2);
                    (f[0].values()[i * 5 + 2] - exact(x)).abs()
                })
                .fold(0.0, f64::max)
        };
        let rate = (err(101) / err(201)).log2();
        assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn lattice_evaluation_matches_pointwise() {
        let d = channel();
        let p = VelocityProfile::poiseuille(10.0, 0.2).unwrap();
        let pd = ProblemData::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let f = &solve_reference_2d(&pd, &p, &d, 161, 9, &TimeMode::Steady).unwrap()[0];
        let xs = [0.0, 0.3333, 1.9999, 2.0];
        let zs = [-0.1, -0.0123, 0.05, 0.1];
        let lat = f.evaluate_lattice(&xs, &zs).unwrap();
        for (a, x) in xs.iter().enumerate() {
            for (b, z) in zs.iter().enumerate() {
                assert_eq!(lat[a * 4 + b], f.evaluate(*x, *z).unwrap());
            }
        }
        assert!(f.evaluate(-0.1, 0.0).is_err());
        // node values are reproduced
        let (x, z) = f.node(7, 3);
        assert!((f.evaluate(x, z).unwrap() - f.values()[7 * 9 + 3]).abs() < 1e-12);
    }

    #[test]
    fn leading_order_examples() {
        let d = channel();
        let mesh = build_mesh(2.0, 1e-3).unwrap();
        let pd = ProblemData::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let c = &solve_leading_order(&pd, 10.0, &mesh, &d, &TimeMode::Steady).unwrap()[0];
        for (x, v) in mesh.nodes().iter().zip(c.values()) {
            assert!((v - (-x / 10.0).exp()).abs() < 1e-4);
        }
        let eq = ProblemData::new(1.0, 2.0, 2.0 * 3.0, 3.0).unwrap();
        let c = &solve_leading_order(&eq, 10.0, &mesh, &d, &TimeMode::Steady).unwrap()[0];
        assert!(c.values().iter().all(|v| (v - 3.0).abs() < 1e-12));
        let flat = ProblemData::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let c = &solve_leading_order(&flat, 10.0, &mesh, &d, &TimeMode::Steady).unwrap()[0];
        assert!(c.values().iter().all(|v| *v == 1.0));
        assert!(solve_leading_order(&flat, 0.0, &mesh, &d, &TimeMode::Steady).is_err());
    }

    #[test]
    fn effective_model_examples() {
        let d = ChannelDomain::new(2.0, 0.1, 0.1).unwrap();
        let mesh = build_mesh(2.0, 0.0125).unwrap();
        let flat = ProblemData::new(1.0, 0.0, 0.0, 1.0).unwrap();
        let coeffs = EffectiveCoefficients {
            mean_speed: 2.0,
            dispersion: 0.1 * (1.0 + 1.0 / 120.0),
            enhancement: 1.0 + 1.0 / 120.0,
        };
        let c = &solve_effective(&flat, &coeffs, &mesh, &d, &TimeMode::Steady).unwrap()[0];
        assert!(c.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let low = EffectiveCoefficients {
            dispersion: 0.05,
            ..coeffs
        };
        assert!(solve_effective(&flat, &low, &mesh, &d, &TimeMode::Steady).is_err());
    }

    #[test]
    fn unsteady_reference_approaches_steady() {
        let d = channel();
        let p = VelocityProfile::poiseuille(10.0, 0.2).unwrap();
        let pd = ProblemData::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let steady = &solve_reference_2d(&pd, &p, &d, 81, 9, &TimeMode::Steady).unwrap()[0];
        let mode = TimeMode::Theta {
            dt: 0.01,
            theta: 1.0,
            final_time: 3.0,
            snapshots: vec![0.1, 3.0],
        };
        let traj = solve_reference_2d(&pd, &p, &d, 81, 9, &mode).unwrap();
        assert_eq!(traj.len(), 2);
        let gap = |f: &ReferenceField2D| {
            f.values().iter().zip(steady.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        assert!(gap(&traj[1]) < 1e-8);
        assert!(gap(&traj[0]) > gap(&traj[1]));
        assert_eq!(snapshot_file_name(0.15), "ref_t0.15.csv");
    }
}
