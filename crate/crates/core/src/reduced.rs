//! Reduced Galerkin solver: P1 elements along the channel times a transverse
//! modal basis, with unknowns ordered node-major so the system is
//! block-tridiagonal with `m × m` blocks.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem1d::{assemble_operators, check_peclet, snapshot_steps, time_steps, Mesh1D, Tridiag};
use crate::geometry::{ChannelDomain, ProblemData, VelocityProfile};
use crate::linalg::{BlockLu, BlockTridiagonal};
use crate::modal_basis::{coupling_integrals, ModalBasis};

const BLOW_UP_FACTOR: f64 = 1e8;

/// Assembled reduced problem. Matrices are stored without boundary rows pinned;
/// the solvers pin node 0 of every mode to the projected inlet data.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    basis: Arc<ModalBasis>,
    mesh: Mesh1D,
    domain: ChannelDomain,
    operator: BlockTridiagonal,
    mass: BlockTridiagonal,
    load: Vec<f64>,
    inlet: Vec<f64>,
    initial: f64,
    peclet: f64,
}

/// Coefficients `c̃_{ks}` (node-major) at time `t`.
#[derive(Clone, Debug)]
pub struct ReducedSolution {
    basis: Arc<ModalBasis>,
    mesh: Mesh1D,
    domain: ChannelDomain,
    coefficients: Vec<f64>,
    time: f64,
}

fn kron_into(
    target: &mut BlockTridiagonal,
    transverse: &nalgebra::DMatrix<f64>,
    axial: &Tridiag,
    scale: f64,
) {
    let m = transverse.nrows();
    let n = axial.len();
    for s in 0..n {
        for j in 0..m {
            for k in 0..m {
                let t = scale * transverse[(j, k)];
                if t == 0.0 {
                    continue;
                }
                target.diag_mut(s)[(j, k)] += t * axial.diag[s];
                if s > 0 {
                    target.lower_mut(s)[(j, k)] += t * axial.sub[s];
                }
                if s + 1 < n {
                    target.upper_mut(s)[(j, k)] += t * axial.sup[s];
                }
            }
        }
    }
}

/// Builds `D_ε·l·(M⊗S) + (D_ε/l)·(K⊗M^x) + l·(A⊗C) + σ·l·(M⊗M^x)`, the time mass
/// `l·(M⊗M^x)` and the load `f·l·∫χ_k·∫θ_s`.
pub fn assemble(
    problem: &ProblemData,
    basis: Arc<ModalBasis>,
    mesh: &Mesh1D,
    profile: &VelocityProfile,
    domain: &ChannelDomain,
) -> Result<ReducedSystem> {
    problem.validate()?;
    if (mesh.length() - domain.length()).abs() > 1e-12 * domain.length() {
        return Err(Error::invalid(format!(
            "mesh length {} does not match the channel length {}",
            mesh.length(),
            domain.length()
        )));
    }
    let d_eps = problem.scaled_diffusion(domain);
    let peclet = check_peclet(profile.max_abs_speed(domain)?, mesh.spacing(), d_eps)?;
    let couplings = coupling_integrals(&basis, profile, domain)?;
    let ops = assemble_operators(mesh);
    let l = domain.width();
    let m = basis.len();
    let n = mesh.len();

    let mut operator = BlockTridiagonal::zeros(m, n);
    kron_into(&mut operator, &couplings.mass, &ops.stiffness, d_eps * l);
    kron_into(&mut operator, &couplings.stiffness, &ops.mass, d_eps / l);
    kron_into(&mut operator, &couplings.advection, &ops.convection, l);
    kron_into(&mut operator, &couplings.mass, &ops.mass, problem.reaction * l);
    let mut mass = BlockTridiagonal::zeros(m, n);
    kron_into(&mut mass, &couplings.mass, &ops.mass, l);

    let weights = mesh.lumped_weights();
    let mut load = vec![0.0; m * n];
    for s in 0..n {
        for k in 0..m {
            load[s * m + k] = problem.forcing * l * couplings.moments[k] * weights[s];
        }
    }
    let inlet = couplings.moments.iter().map(|g| problem.inlet * g).collect();
    Ok(ReducedSystem {
        basis,
        mesh: *mesh,
        domain: *domain,
        operator,
        mass,
        load,
        inlet,
        initial: problem.initial,
        peclet,
    })
}

impl ReducedSystem {
    pub fn modes(&self) -> usize {
        self.basis.len()
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn basis(&self) -> &Arc<ModalBasis> {
        &self.basis
    }

    /// Mesh Péclet number at the maximal speed.
    pub fn mesh_peclet(&self) -> f64 {
        self.peclet
    }

    /// Projected inlet data `g_k = ∫c_B χ_k`.
    pub fn inlet(&self) -> &[f64] {
        &self.inlet
    }

    pub fn operator(&self) -> &BlockTridiagonal {
        &self.operator
    }

    pub fn mass(&self) -> &BlockTridiagonal {
        &self.mass
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    fn pinned(&self, mut rhs: Vec<f64>) -> Vec<f64> {
        rhs[..self.modes()].copy_from_slice(&self.inlet);
        rhs
    }

    /// Steady operator with node-0 rows replaced by identity rows.
    pub fn constrained_operator(&self) -> BlockTridiagonal {
        let mut a = self.operator.clone();
        a.pin_block_row(0);
        a
    }

    pub fn constrained_load(&self) -> Vec<f64> {
        self.pinned(self.load.clone())
    }

    fn wrap(&self, coefficients: Vec<f64>, time: f64) -> ReducedSolution {
        ReducedSolution {
            basis: Arc::clone(&self.basis),
            mesh: self.mesh,
            domain: self.domain,
            coefficients,
            time,
        }
    }

    pub fn solve_steady(&self) -> Result<ReducedSolution> {
        let a = self.constrained_operator();
        let b = self.constrained_load();
        let x = a.factor()?.solve(&b)?;
        let r = a.matvec(&x);
        let num: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        if !(num / den <= 1e-10) {
            return Err(Error::Singular {
                what: "reduced steady solve (residual check)",
                row: 0,
            });
        }
        Ok(self.wrap(x, 0.0))
    }

    /// State with every coefficient equal to the projection of the constant
    /// initial value, inlet rows already pinned.
    pub fn initial_state(&self) -> ReducedSolution {
        let m = self.modes();
        let n = self.mesh.len();
        let mut c = vec![0.0; m * n];
        for s in 0..n {
            for k in 0..m {
                c[s * m + k] = self.initial * self.basis.rule().integrate(self.basis.values(k));
            }
        }
        self.wrap(self.pinned(c), 0.0)
    }

    pub fn stepper(&self, dt: f64, theta: f64) -> Result<ThetaStepper<'_>> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive (got {dt})")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid(format!("theta must lie in [0, 1] (got {theta})")));
        }
        let mut lhs = self.mass.combine(1.0 / dt, &self.operator, theta);
        lhs.pin_block_row(0);
        Ok(ThetaStepper {
            system: self,
            lu: lhs.factor()?,
            rhs_op: self.mass.combine(1.0 / dt, &self.operator, theta - 1.0),
            dt,
            steps: 0,
            bound: self.growth_bound(),
        })
    }

    /// Coefficient magnitude beyond which a trajectory is declared unstable: far
    /// above anything the data can produce, far below overflow.
    fn growth_bound(&self) -> f64 {
        let data = self.inlet.iter().fold(self.initial.abs(), |m, g| m.max(g.abs()));
        let force = self.load.iter().fold(0.0f64, |m, f| m.max(f.abs())) / self.mesh.spacing();
        BLOW_UP_FACTOR * (1.0 + data + force)
    }

    /// One θ-step; see [`ThetaStepper`] for repeated stepping with a cached factorisation.
    pub fn step_theta(&self, state: &ReducedSolution, dt: f64, theta: f64) -> Result<ReducedSolution> {
        self.stepper(dt, theta)?.step(state)
    }

    /// θ-method trajectory from [`Self::initial_state`], returning the requested snapshots.
    pub fn trajectory(
        &self,
        dt: f64,
        theta: f64,
        final_time: f64,
        snapshots: &[f64],
    ) -> Result<Vec<ReducedSolution>> {
        let steps = time_steps(dt, final_time)?;
        let wanted = snapshot_steps(snapshots, dt, steps)?;
        let mut stepper = self.stepper(dt, theta)?;
        let mut state = self.initial_state();
        let mut out = Vec::with_capacity(wanted.len());
        for n in 1..=steps {
            state = stepper.step(&state)?;
            // n·dt rather than the accumulated sum
            state.time = n as f64 * dt;
            if wanted.contains(&n) {
                out.push(state.clone());
            }
        }
        Ok(out)
    }
}

/// Cached factorisation of `𝕄/dt + θ𝔸` with pinned inlet rows.
pub struct ThetaStepper<'a> {
    system: &'a ReducedSystem,
    lu: BlockLu,
    rhs_op: BlockTridiagonal,
    dt: f64,
    steps: usize,
    bound: f64,
}

impl ThetaStepper<'_> {
    /// Solves `(𝕄/dt + θ𝔸)c^{n+1} = (𝕄/dt − (1−θ)𝔸)c^n + 𝔽`.
    pub fn step(&mut self, state: &ReducedSolution) -> Result<ReducedSolution> {
        let mut b = self.rhs_op.matvec(&state.coefficients);
        b.iter_mut().zip(&self.system.load).for_each(|(x, f)| *x += f);
        let b = self.system.pinned(b);
        let x = self.lu.solve(&b)?;
        self.steps += 1;
        let time = state.time + self.dt;
        if x.iter().any(|v| !(v.abs() <= self.bound)) {
            return Err(Error::BlowUp {
                step: self.steps,
                time,
            });
        }
        Ok(self.system.wrap(x, time))
    }
}

impl ReducedSolution {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn modes(&self) -> usize {
        self.basis.len()
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `c̃_{ks}`
    pub fn coefficient(&self, k: usize, s: usize) -> f64 {
        self.coefficients[s * self.modes() + k]
    }

    /// `Σ_k c̃_k(x)·χ_k(ψ(z))`.
    pub fn evaluate(&self, x: f64, z: f64) -> Result<f64> {
        self.domain.check_point(x, z)?;
        let zhat = self.domain.fibre_map_psi(z)?;
        let (e, t) = self.mesh.locate(x)?;
        let modes = self.basis.eval_all(zhat);
        let m = self.modes();
        Ok(modes
            .iter()
            .enumerate()
            .map(|(k, v)| {
                v * ((1.0 - t) * self.coefficients[e * m + k] + t * self.coefficients[(e + 1) * m + k])
            })
            .sum())
    }

    /// Values on the tensor lattice `xs × zs`, row-major in `x`.
    pub fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        let m = self.modes();
        let mut modes = Vec::with_capacity(zs.len());
        for &z in zs {
            self.domain.check_point(0.0, z)?;
            modes.push(self.basis.eval_all(self.domain.fibre_map_psi(z)?));
        }
        let mut out = Vec::with_capacity(xs.len() * zs.len());
        let mut ck = vec![0.0; m];
        for &x in xs {
            let (e, t) = self.mesh.locate(x)?;
            for (k, c) in ck.iter_mut().enumerate() {
                *c = (1.0 - t) * self.coefficients[e * m + k] + t * self.coefficients[(e + 1) * m + k];
            }
            for mv in &modes {
                out.push(mv.iter().zip(&ck).map(|(a, b)| a * b).sum());
            }
        }
        Ok(out)
    }

    /// Writes `k,s,coefficient`.
    pub fn write_coefficients(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut body = || -> std::io::Result<()> {
            writeln!(w, "k,s,coefficient")?;
            for s in 0..self.mesh.len() {
                for k in 0..self.modes() {
                    writeln!(w, "{k},{s},{:.16e}", self.coefficient(k, s))?;
                }
            }
            w.flush()
        };
        body().map_err(|e| Error::io(path, e))
    }
}
