//! Linear finite elements on the supporting fibre `[0, L]`.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;

/// Galerkin without stabilisation is refused at or above this mesh Péclet number.
pub const PECLET_LIMIT: f64 = 2.0;

/// Uniform partition of `[0, L]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mesh1D {
    length: f64,
    nodes: usize,
}

impl Mesh1D {
    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.nodes - 1) as f64
    }

    pub fn node(&self, s: usize) -> f64 {
        if s + 1 == self.nodes {
            self.length
        } else {
            s as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|s| self.node(s)).collect()
    }

    /// Element index and local coordinate `t ∈ [0, 1]` of `x`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                lo: 0.0,
                hi: self.length,
            });
        }
        let s = x / self.spacing();
        let e = (s.floor() as usize).min(self.nodes - 2);
        Ok((e, (s - e as f64).clamp(0.0, 1.0)))
    }

    /// P1 interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        let (e, t) = self.locate(x)?;
        Ok((1.0 - t) * values[e] + t * values[e + 1])
    }

    /// `∫θ_s` for every node.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.nodes];
        w[0] = 0.5 * h;
        w[self.nodes - 1] = 0.5 * h;
        w
    }
}

/// `N_h = round(L/h) + 1` nodes; the spacing is then `L/(N_h − 1)`.
pub fn build_mesh(length: f64, h: f64) -> Result<Mesh1D> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid(format!("mesh length must be positive (got {length})")));
    }
    if !(h.is_finite() && h > 0.0 && h < length) {
        return Err(Error::invalid(format!("mesh size must lie in (0, L) (got {h})")));
    }
    let nodes = (length / h).round() as usize + 1;
    if nodes < 3 {
        return Err(Error::invalid(format!(
            "mesh size {h} leaves fewer than 3 nodes on [0, {length}]"
        )));
    }
    Ok(Mesh1D { length, nodes })
}

/// Tridiagonal matrix; row `i` holds `(sub[i], diag[i], sup[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match j as isize - i as isize {
            -1 => self.sub[i],
            0 => self.diag[i],
            1 => self.sup[i],
            _ => 0.0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Tridiag, b: f64) -> Tridiag {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Tridiag {
            sub: mix(&self.sub, &other.sub),
            diag: mix(&self.diag, &other.diag),
            sup: mix(&self.sup, &other.sup),
        }
    }

    pub fn pin_row(&mut self, i: usize) {
        self.sub[i] = 0.0;
        self.sup[i] = 0.0;
        self.diag[i] = 1.0;
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut diag = self.diag.clone();
        let mut x = rhs.to_vec();
        solve_tridiagonal(&self.sub, &mut diag, &self.sup, &mut x)?;
        Ok(x)
    }
}

/// Mass `∫θ_sθ_r`, stiffness `∫θ_s'θ_r'` and convection `∫θ_r θ_s'`
/// (row `r` = test function, column `s` = trial function).
#[derive(Clone, Debug, PartialEq)]
pub struct Operators1D {
    pub mass: Tridiag,
    pub stiffness: Tridiag,
    pub convection: Tridiag,
}

pub fn assemble_operators(mesh: &Mesh1D) -> Operators1D {
    let n = mesh.len();
    let h = mesh.spacing();
    let mut mass = Tridiag::zeros(n);
    let mut stiffness = Tridiag::zeros(n);
    let mut convection = Tridiag::zeros(n);
    for e in 0..n - 1 {
        let (a, b) = (e, e + 1);
        mass.diag[a] += h / 3.0;
        mass.diag[b] += h / 3.0;
        mass.sup[a] += h / 6.0;
        mass.sub[b] += h / 6.0;
        stiffness.diag[a] += 1.0 / h;
        stiffness.diag[b] += 1.0 / h;
        stiffness.sup[a] -= 1.0 / h;
        stiffness.sub[b] -= 1.0 / h;
        convection.diag[a] -= 0.5;
        convection.sup[a] += 0.5;
        convection.sub[b] -= 0.5;
        convection.diag[b] += 0.5;
    }
    Operators1D {
        mass,
        stiffness,
        convection,
    }
}

/// `Pe_h = |u|·h/(2D)`.
pub fn mesh_peclet(speed: f64, h: f64, diffusion: f64) -> f64 {
    speed.abs() * h / (2.0 * diffusion)
}

pub fn check_peclet(speed: f64, h: f64, diffusion: f64) -> Result<f64> {
    let pe = mesh_peclet(speed, h, diffusion);
    if !(pe < PECLET_LIMIT) {
        return Err(Error::MeshPeclet {
            peclet: pe,
            limit: PECLET_LIMIT,
        });
    }
    Ok(pe)
}

/// Constant-coefficient problem `−D c'' + u c' + σ c = f` on `[0, L]` with
/// `c(0) = c_in` and `D c'(L) = outflow_flux`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adr1D {
    pub speed: f64,
    pub diffusion: f64,
    pub reaction: f64,
    pub forcing: f64,
    pub inlet: f64,
    pub outflow_flux: f64,
}

impl Adr1D {
    pub fn new(speed: f64, diffusion: f64, reaction: f64, forcing: f64, inlet: f64) -> Self {
        Self {
            speed,
            diffusion,
            reaction,
            forcing,
            inlet,
            outflow_flux: 0.0,
        }
    }

    fn validate(&self, mesh: &Mesh1D) -> Result<()> {
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(Error::invalid(format!(
                "diffusion must be positive (got {})",
                self.diffusion
            )));
        }
        if !(self.reaction >= 0.0) {
            return Err(Error::invalid("reaction must be non-negative"));
        }
        check_peclet(self.speed, mesh.spacing(), self.diffusion)?;
        Ok(())
    }

    /// Unconstrained operator `D·S + u·C + σ·M`.
    pub fn operator(&self, ops: &Operators1D) -> Tridiag {
        ops.stiffness
            .combine(self.diffusion, &ops.convection, self.speed)
            .combine(1.0, &ops.mass, self.reaction)
    }

    /// Unconstrained load for the constant forcing, plus a volume source `g(x)`
    /// integrated by three-point Gauss per element.
    pub fn load(&self, mesh: &Mesh1D, source: Option<&dyn Fn(f64) -> f64>) -> Vec<f64> {
        let mut b: Vec<f64> = mesh.lumped_weights().iter().map(|w| self.forcing * w).collect();
        if let Some(g) = source {
            let h = mesh.spacing();
            let pts = [
                (0.5 - 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
                (0.5, 8.0 / 18.0),
                (0.5 + 0.5 * (0.6f64).sqrt(), 5.0 / 18.0),
            ];
            for e in 0..mesh.len() - 1 {
                let x0 = mesh.node(e);
                for (t, w) in pts {
                    let gv = g(x0 + t * h) * w * h;
                    b[e] += gv * (1.0 - t);
                    b[e + 1] += gv * t;
                }
            }
        }
        let last = b.len() - 1;
        b[last] += self.outflow_flux;
        b
    }

    pub fn solve_steady(&self, mesh: &Mesh1D) -> Result<Vec<f64>> {
        self.solve_steady_with_source(mesh, None)
    }

    pub fn solve_steady_with_source(
        &self,
        mesh: &Mesh1D,
        source: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Vec<f64>> {
        self.validate(mesh)?;
        let ops = assemble_operators(mesh);
        let mut a = self.operator(&ops);
        let mut b = self.load(mesh, source);
        a.pin_row(0);
        b[0] = self.inlet;
        a.solve(&b)
    }

    /// θ-method from the constant initial state `initial`; returns the states at
    /// the requested `snapshots` (times rounded to the nearest step).
    pub fn solve_theta(
        &self,
        mesh: &Mesh1D,
        initial: f64,
        dt: f64,
        theta: f64,
        final_time: f64,
        snapshots: &[f64],
    ) -> Result<Vec<(f64, Vec<f64>)>> {
        self.validate(mesh)?;
        let steps = time_steps(dt, final_time)?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid(format!("theta must lie in [0, 1] (got {theta})")));
        }
        let ops = assemble_operators(mesh);
        let a = self.operator(&ops);
        let f = self.load(mesh, None);
        let mut lhs = ops.mass.combine(1.0 / dt, &a, theta);
        lhs.pin_row(0);
        let rhs_op = ops.mass.combine(1.0 / dt, &a, theta - 1.0);
        let wanted = snapshot_steps(snapshots, dt, steps)?;
        let mut c = vec![initial; mesh.len()];
        let mut out = Vec::new();
        for n in 1..=steps {
            let mut b = rhs_op.apply(&c);
            b.iter_mut().zip(&f).for_each(|(x, y)| *x += y);
            b[0] = self.inlet;
            c = lhs.solve(&b)?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp {
                    step: n,
                    time: n as f64 * dt,
                });
            }
            if wanted.contains(&n) {
                out.push((n as f64 * dt, c.clone()));
            }
        }
        Ok(out)
    }
}

/// Number of θ-steps to reach `final_time`; the ratio must be an integer to 1e−9.
pub fn time_steps(dt: f64, final_time: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0 && final_time.is_finite() && final_time > 0.0) {
        return Err(Error::invalid(format!(
            "time step and final time must be positive (got dt = {dt}, T = {final_time})"
        )));
    }
    let r = final_time / dt;
    let n = r.round();
    if (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::invalid(format!(
            "final time {final_time} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

/// Step indices of snapshot times; each must fall on a step to 1e−9 relative.
pub fn snapshot_steps(times: &[f64], dt: f64, steps: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let r = t / dt;
            let n = r.round();
            if !(t > 0.0) || (r - n).abs() > 1e-9 * r.max(1.0) || n as usize > steps {
                Err(Error::invalid(format!(
                    "snapshot time {t} is not a step of dt = {dt} within the horizon"
                )))
            } else {
                Ok(n as usize)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn mesh_examples() {
        assert_eq!(build_mesh(2.0, 0.0125).unwrap().len(), 161);
        assert_eq!(build_mesh(2.0, 0.05).unwrap().len(), 41);
        assert_eq!(build_mesh(1.0, 0.5).unwrap().nodes(), vec![0.0, 0.5, 1.0]);
        assert!(build_mesh(1.0, 0.0).is_err());
        assert!(build_mesh(1.0, -0.1).is_err());
        assert!(build_mesh(1.0, 0.9).is_err());
        let m = build_mesh(2.0, 0.0125).unwrap();
        assert!((m.spacing() * 160.0 - 2.0).abs() < 1e-12 * 2.0);
    }

    #[test]
    fn element_matrices() {
        let m = build_mesh(1.0, 0.25).unwrap();
        let ops = assemble_operators(&m);
        let h = 0.25;
        assert_abs_diff_eq!(ops.stiffness.get(2, 1), -1.0 / h);
        assert_abs_diff_eq!(ops.stiffness.get(2, 2), 2.0 / h);
        assert_abs_diff_eq!(ops.stiffness.get(2, 3), -1.0 / h);
        assert!(ops.stiffness.apply(&[1.0; 5]).iter().all(|v| v.abs() < 1e-14));
        let row_sums = ops.mass.apply(&[1.0; 5]);
        for (a, b) in row_sums.iter().zip(m.lumped_weights()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        // C applied to the interpolant of x equals ∫θ_r·1
        let cx = ops.convection.apply(&m.nodes());
        for (a, b) in cx.iter().zip(m.lumped_weights()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn patch_test_constant_state() {
        let m = build_mesh(2.0, 0.0125).unwrap();
        let c = Adr1D::new(55.0 / 3.0, 0.2, 0.0, 0.0, 1.0).solve_steady(&m).unwrap();
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn peclet_guard() {
        assert_abs_diff_eq!(mesh_peclet(20.0, 0.0125, 0.2), 0.625);
        let m = build_mesh(2.0, 0.05).unwrap();
        let err = Adr1D::new(20.0, 0.2, 1.0, 0.0, 1.0).solve_steady(&m);
        assert!(matches!(err, Err(Error::MeshPeclet { .. })));
    }

    #[test]
    fn reaction_solution_matches_closed_form() {
        // −Dc'' + uc' + σc = 0, c(0)=1, c'(L)=0: c = A e^{r1 x} + B e^{r2 x}
        let (u, d, s, l): (f64, f64, f64, f64) = (1.0, 0.1, 1.0, 1.0);
        let disc = (u * u + 4.0 * d * s).sqrt();
        let (r1, r2) = ((u + disc) / (2.0 * d), (u - disc) / (2.0 * d));
        let b = 1.0 / (1.0 - r2 / r1 * ((r2 - r1) * l).exp());
        let a = 1.0 - b;
        let exact = |x: f64| a * (r1 * (x - l)).exp() * (r1 * l).exp() + b * (r2 * x).exp();
        let err = |h: f64| {
            let m = build_mesh(l, h).unwrap();
            let c = Adr1D::new(u, d, s, 0.0, 1.0).solve_steady(&m).unwrap();
            m.nodes()
                .iter()
                .zip(&c)
                .map(|(x, v)| (exact(*x) - v).abs())
                .fold(0.0, f64::max)
        };
        assert!(err(0.01) < 2e-4);
        assert!((err(0.02) / err(0.01)).log2() > 1.8);
    }

    #[test]
    fn manufactured_solution_converges_quadratically() {
        // c = sin(πx/L) with D c'(L) supplied as outflow flux
        let (u, d, s, l) = (1.0, 0.2, 1.0, 2.0);
        let k = std::f64::consts::PI / l;
        let src = move |x: f64| d * k * k * (k * x).sin() + u * k * (k * x).cos() + s * (k * x).sin();
        let mut errs = Vec::new();
        let hs = [0.1, 0.05, 0.025, 0.0125];
        for h in hs {
            let m = build_mesh(l, h).unwrap();
            let mut p = Adr1D::new(u, d, s, 0.0, 0.0);
            p.outflow_flux = d * k * (k * l).cos();
            let c = p.solve_steady_with_source(&m, Some(&src)).unwrap();
            // L² error by 5-point Gauss per element
            let g = [
                (0.046910077030668, 0.118463442528095),
                (0.230765344947158, 0.239314335249683),
                (0.5, 0.284444444444444),
                (0.769234655052842, 0.239314335249683),
                (0.953089922969332, 0.118463442528095),
            ];
            let hh = m.spacing();
            let mut e2 = 0.0;
            for e in 0..m.len() - 1 {
                for (t, w) in g {
                    let x = m.node(e) + t * hh;
                    let v = (1.0 - t) * c[e] + t * c[e + 1];
                    e2 += w * hh * ((k * x).sin() - v).powi(2);
                }
            }
            errs.push(e2.sqrt());
        }
        for i in 0..3 {
            let r = (errs[i] / errs[i + 1]).log2();
            assert!((r - 2.0).abs() < 0.1, "rate {r}");
        }
    }

    #[test]
    fn theta_method_relaxes_to_steady_state() {
        let m = build_mesh(2.0, 0.025).unwrap();
        let p = Adr1D::new(10.0, 0.2, 1.0, 0.0, 1.0);
        let steady = p.solve_steady(&m).unwrap();
        let snaps = p.solve_theta(&m, 0.0, 0.01, 1.0, 3.0, &[0.1, 3.0]).unwrap();
        let gap = |c: &[f64]| c.iter().zip(&steady).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap(&snaps[1].1) < 1e-6);
        assert!(gap(&snaps[1].1) < gap(&snaps[0].1));
        assert!(time_steps(0.003, 0.01).is_err());
        assert!(snapshot_steps(&[0.0105], 0.01, 100).is_err());
    }

    proptest! {
        #[test]
        fn interpolation_reproduces_linear_fields(x in 0.0f64..=2.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let m = build_mesh(2.0, 0.1).unwrap();
            let vals: Vec<f64> = m.nodes().iter().map(|s| a + b * s).collect();
            prop_assert!((m.interpolate(&vals, x).unwrap() - (a + b * x)).abs() < 1e-12);
        }
    }
}
