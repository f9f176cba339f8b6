//! High-order homogenisation correctors on the rescaled transverse fibre.
//!
//! Starting from `χ₀* = 1` (and `χ₋₁* = χ₋₂* = 0`), each corrector solves
//!
//! ```text
//! D·χᵢ*'' = fluct(φᵢ),   φᵢ = fluct(û)·χᵢ₋₁* − D·χᵢ₋₂*,   D·χᵢ*'(±Y) = 0,   χᵢ*(0) = 0
//! ```
//!
//! and is obtained in closed form by two running integrations,
//! `χᵢ*(y) = [Ψᵢ(y) − Φᵢ(−Y)·y − (Y·y + y²/2)·φ̄ᵢ]/D`, where `Φᵢ`, `Ψᵢ` are the first
//! and second antiderivatives of `φᵢ` with base point `y = 0`. The implementation
//! integrates `fluct(φᵢ)` instead of `φᵢ`, which is the same expression with the
//! `φ̄ᵢ` terms already absorbed and keeps constant sources exactly zero.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{ChannelDomain, VelocityProfile};
use crate::quadrature::{centred_antiderivative, cumulative_simpson, HermiteTable};

/// Smallest admissible number of grid intervals on the rescaled fibre.
pub const MIN_GRID: usize = 64;
pub const DEFAULT_GRID: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectorTolerances {
    /// Neumann residual bound, relative to `max(1, ‖φᵢ‖∞)`.
    pub boundary: f64,
    /// Bound on the difference between the grid and the half grid, relative to
    /// `max(1, ‖χᵢ*‖∞)`.
    pub resolution: f64,
}

impl Default for CorrectorTolerances {
    fn default() -> Self {
        Self {
            boundary: 1e-8,
            resolution: 1e-6,
        }
    }
}

/// Correctors `χ₀* … χₖ*` sampled on a uniform grid of `[−Y, Y]`.
#[derive(Clone, Debug)]
pub struct CorrectorSet {
    order: usize,
    half_width: f64,
    diffusion: f64,
    y: Vec<f64>,
    velocity: Vec<f64>,
    velocity_fluct: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    sources: Vec<Vec<f64>>,
    antiderivatives: Vec<Vec<f64>>,
    source_means: Vec<f64>,
}

impl CorrectorSet {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.y.len() - 1) as f64
    }

    pub fn grid(&self) -> &[f64] {
        &self.y
    }

    /// `û` at the grid nodes.
    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn velocity_fluctuation(&self) -> &[f64] {
        &self.velocity_fluct
    }

    /// `χᵢ*` at the grid nodes, `0 ≤ i ≤ order`.
    pub fn corrector(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// `∂_y χᵢ*` at the grid nodes (exact derivative of the integrated representation).
    pub fn slope(&self, i: usize) -> &[f64] {
        &self.slopes[i]
    }

    /// Source `φᵢ`, `1 ≤ i ≤ order`.
    pub fn source(&self, i: usize) -> &[f64] {
        &self.sources[i - 1]
    }

    /// `Φᵢ(y) = ∫₀^y φᵢ`, `1 ≤ i ≤ order`.
    pub fn antiderivative(&self, i: usize) -> &[f64] {
        &self.antiderivatives[i - 1]
    }

    /// Transverse average `φ̄ᵢ`, `1 ≤ i ≤ order`.
    pub fn source_mean(&self, i: usize) -> f64 {
        self.source_means[i - 1]
    }

    pub fn interpolant(&self, i: usize) -> HermiteTable {
        HermiteTable::new(
            -self.half_width,
            self.half_width,
            self.values[i].clone(),
            self.slopes[i].clone(),
        )
    }

    /// `max |D·∂_y χᵢ*(±Y)|` from the stored derivative samples.
    pub fn neumann_residual(&self, i: usize) -> f64 {
        let s = &self.slopes[i];
        (self.diffusion * s[0])
            .abs()
            .max((self.diffusion * s[s.len() - 1]).abs())
    }

    /// Neumann residual measured by second-order one-sided differences of the values.
    pub fn neumann_residual_fd(&self, i: usize) -> f64 {
        let v = &self.values[i];
        let n = v.len();
        let h = self.spacing();
        let left = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        let right = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
        (self.diffusion * left).abs().max((self.diffusion * right).abs())
    }

    /// `max_j |D·Δ_h χᵢ* − fluct(φᵢ)|` over interior nodes.
    pub fn ode_residual(&self, i: usize) -> f64 {
        let v = &self.values[i];
        let h = self.spacing();
        let g = fluct_in_place(self.sources[i - 1].clone(), h);
        (1..v.len() - 1)
            .map(|j| {
                let lap = (v[j - 1] - 2.0 * v[j] + v[j + 1]) / (h * h);
                (self.diffusion * lap - g[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Writes `y, chi_1..chi_k, phi_1..phi_k` as CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w).map_err(|e| Error::io(path, e))
    }

    pub fn write_csv_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = vec!["y".to_string()];
        header.extend((1..=self.order).map(|i| format!("chi_{i}")));
        header.extend((1..=self.order).map(|i| format!("phi_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for j in 0..self.y.len() {
            let mut row = vec![format!("{:.16e}", self.y[j])];
            row.extend((1..=self.order).map(|i| format!("{:.16e}", self.values[i][j])));
            row.extend((1..=self.order).map(|i| format!("{:.16e}", self.sources[i - 1][j])));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    }
}

/// `ū`, `D_eff` and the enhancement ratio `D_eff/(εD)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EffectiveCoefficients {
    pub mean_speed: f64,
    pub dispersion: f64,
    pub enhancement: f64,
}

fn grid_spacing(n_samples: usize, half_width: f64) -> Result<f64> {
    if n_samples < 2 {
        return Err(Error::invalid(format!(
            "transverse averages need at least 2 grid nodes (got {n_samples})"
        )));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::invalid("half-width must be positive"));
    }
    Ok(2.0 * half_width / (n_samples - 1) as f64)
}

fn integral(g: &[f64], h: f64) -> f64 {
    if g.len() % 2 == 1 && g.len() >= 3 {
        let a = centred_antiderivative(g, h);
        a[a.len() - 1] - a[0]
    } else {
        *cumulative_simpson(g, h).last().unwrap()
    }
}

fn mean_of(g: &[f64], h: f64) -> f64 {
    // shifting by the first sample keeps constants exact
    let g0 = g[0];
    let shifted: Vec<f64> = g.iter().map(|v| v - g0).collect();
    let len = h * (g.len() - 1) as f64;
    g0 + integral(&shifted, h) / len
}

fn fluct_in_place(mut g: Vec<f64>, h: f64) -> Vec<f64> {
    let m = mean_of(&g, h);
    g.iter_mut().for_each(|v| *v -= m);
    g
}

/// Transverse average `(1/2Y)∫_{−Y}^{Y} g dy` from samples on a uniform grid.
pub fn transverse_average(samples: &[f64], half_width: f64) -> Result<f64> {
    let h = grid_spacing(samples.len(), half_width)?;
    Ok(mean_of(samples, h))
}

/// Fluctuation `g − ḡ`.
pub fn fluctuation(samples: &[f64], half_width: f64) -> Result<Vec<f64>> {
    let h = grid_spacing(samples.len(), half_width)?;
    Ok(fluct_in_place(samples.to_vec(), h))
}

struct Recursion {
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    sources: Vec<Vec<f64>>,
    antiderivatives: Vec<Vec<f64>>,
    source_means: Vec<f64>,
    velocity_fluct: Vec<f64>,
}

fn run_recursion(velocity: &[f64], h: f64, diffusion: f64, k_max: usize) -> Recursion {
    let n = velocity.len();
    let velocity_fluct = fluct_in_place(velocity.to_vec(), h);
    let mut values = vec![vec![1.0; n]];
    let mut slopes = vec![vec![0.0; n]];
    let mut sources = Vec::with_capacity(k_max);
    let mut antiderivatives = Vec::with_capacity(k_max);
    let mut source_means = Vec::with_capacity(k_max);
    for i in 1..=k_max {
        let prev = &values[i - 1];
        let phi: Vec<f64> = (0..n)
            .map(|j| {
                let older = if i >= 2 { values[i - 2][j] } else { 0.0 };
                velocity_fluct[j] * prev[j] - diffusion * older
            })
            .collect();
        let g = fluct_in_place(phi.clone(), h);
        let big_phi = centred_antiderivative(&g, h);
        let big_psi = centred_antiderivative(&big_phi, h);
        // Φ(−Y) and Φ(Y) agree up to rounding because g has zero mean; their
        // average keeps even sources free of a spurious odd component.
        let slope = 0.5 * (big_phi[0] + big_phi[n - 1]);
        let y = grid(n - 1, 0.5 * h * (n - 1) as f64);
        let chi: Vec<f64> = (0..n)
            .map(|j| (big_psi[j] - slope * y[j]) / diffusion)
            .collect();
        let dchi: Vec<f64> = (0..n).map(|j| (big_phi[j] - slope) / diffusion).collect();
        antiderivatives.push(centred_antiderivative(&phi, h));
        source_means.push(mean_of(&phi, h));
        sources.push(phi);
        values.push(chi);
        slopes.push(dchi);
    }
    Recursion {
        values,
        slopes,
        sources,
        antiderivatives,
        source_means,
        velocity_fluct,
    }
}

/// Uniform nodes on `[−Y, Y]`, mirrored exactly about the centre.
fn grid(n_intervals: usize, half_width: f64) -> Vec<f64> {
    let h = 2.0 * half_width / n_intervals as f64;
    let mut y: Vec<f64> = (0..=n_intervals).map(|j| -half_width + h * j as f64).collect();
    for j in 0..=n_intervals / 2 {
        y[n_intervals - j] = -y[j];
    }
    if n_intervals % 2 == 0 {
        y[n_intervals / 2] = 0.0;
    }
    y
}

fn sample_velocity(
    profile: &VelocityProfile,
    domain: &ChannelDomain,
    n_intervals: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let big_y = domain.half_width_rescaled();
    let y = grid(n_intervals, big_y);
    let u = y
        .iter()
        .map(|&yj| profile.rescaled_velocity(domain, yj.clamp(-big_y, big_y)))
        .collect::<Result<Vec<_>>>()?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("velocity profile is not finite on the fibre"));
    }
    Ok((y, u))
}

pub fn compute_correctors(
    profile: &VelocityProfile,
    domain: &ChannelDomain,
    diffusion: f64,
    k_max: usize,
    n_y: usize,
) -> Result<CorrectorSet> {
    compute_correctors_with(
        profile,
        domain,
        diffusion,
        k_max,
        n_y,
        CorrectorTolerances::default(),
    )
}

pub fn compute_correctors_with(
    profile: &VelocityProfile,
    domain: &ChannelDomain,
    diffusion: f64,
    k_max: usize,
    n_y: usize,
    tol: CorrectorTolerances,
) -> Result<CorrectorSet> {
    if !(diffusion.is_finite() && diffusion > 0.0) {
        return Err(Error::invalid(format!("diffusion must be positive (got {diffusion})")));
    }
    if n_y < MIN_GRID || n_y % 4 != 0 {
        return Err(Error::invalid(format!(
            "corrector grid needs N_y >= {MIN_GRID} intervals, a multiple of 4 (got {n_y})"
        )));
    }
    let half_width = domain.half_width_rescaled();
    let h = 2.0 * half_width / n_y as f64;
    let (y, velocity) = sample_velocity(profile, domain, n_y)?;
    let rec = run_recursion(&velocity, h, diffusion, k_max);

    // half-grid rerun as an a-posteriori quadrature error estimate
    let coarse_u: Vec<f64> = velocity.iter().step_by(2).copied().collect();
    let coarse = run_recursion(&coarse_u, 2.0 * h, diffusion, k_max);
    for i in 1..=k_max {
        let fine = &rec.values[i];
        let scale = fine.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let residual = coarse.values[i]
            .iter()
            .enumerate()
            .map(|(j, c)| (c - fine[2 * j]).abs())
            .fold(0.0, f64::max)
            / scale;
        if !residual.is_finite() || residual > tol.resolution {
            return Err(Error::Resolution {
                order: i,
                residual,
                tolerance: tol.resolution,
            });
        }
        let phi_scale = rec.sources[i - 1]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let s = &rec.slopes[i];
        let bc = (diffusion * s[0]).abs().max((diffusion * s[s.len() - 1]).abs());
        let bc_tol = tol.boundary * phi_scale;
        if !(bc <= bc_tol) {
            return Err(Error::Resolution {
                order: i,
                residual: bc,
                tolerance: bc_tol,
            });
        }
    }

    Ok(CorrectorSet {
        order: k_max,
        half_width,
        diffusion,
        y,
        velocity,
        velocity_fluct: rec.velocity_fluct,
        values: rec.values,
        slopes: rec.slopes,
        sources: rec.sources,
        antiderivatives: rec.antiderivatives,
        source_means: rec.source_means,
    })
}

/// Taylor dispersion coefficient `D_eff = εD·[1 + (ū·χ̄₁ − \overline{û·χ₁})/D]`.
pub fn taylor_dispersion(
    correctors: &CorrectorSet,
    domain: &ChannelDomain,
) -> Result<EffectiveCoefficients> {
    if correctors.order() < 1 {
        return Err(Error::invalid(
            "Taylor dispersion needs the first-order corrector",
        ));
    }
    let h = correctors.spacing();
    let u = correctors.velocity();
    let chi = correctors.corrector(1);
    let d = correctors.diffusion();
    let mean_u = mean_of(u, h);
    let mean_chi = mean_of(chi, h);
    let u_chi: Vec<f64> = u.iter().zip(chi).map(|(a, b)| a * b).collect();
    let mean_u_chi = mean_of(&u_chi, h);
    let mut correction = mean_u * mean_chi - mean_u_chi;
    if correction < 0.0 {
        // the continuous correction equals D·mean(χ₁'²) ≥ 0; only rounding can flip it
        let scale = (mean_u * mean_chi).abs() + mean_u_chi.abs();
        if -correction > 1e-10 * scale + f64::MIN_POSITIVE {
            return Err(Error::invalid(format!(
                "negative dispersion correction {correction:.3e}; corrector grid too coarse"
            )));
        }
        correction = 0.0;
    }
    let base = domain.epsilon() * d;
    let dispersion = base * (1.0 + correction / d);
    Ok(EffectiveCoefficients {
        mean_speed: mean_u,
        dispersion,
        enhancement: dispersion / base,
    })
}

/// Independent check of `χᵢ*`: second-order finite differences for the Neumann
/// problem `D·χ'' = fluct(φᵢ)` with ghost-point boundary rows, pinned at `y = 0`.
///
/// `lower` holds `χ₀* … χᵢ₋₁*` on the `n_y`-interval grid. The fluctuations use
/// trapezoidal means, so the discrete problem is exactly compatible.
pub fn oracle_corrector_bvp(
    profile: &VelocityProfile,
    domain: &ChannelDomain,
    diffusion: f64,
    i: usize,
    lower: &[&[f64]],
    n_y: usize,
) -> Result<Vec<f64>> {
    if i == 0 {
        return Ok(vec![1.0; n_y + 1]);
    }
    if lower.len() < i || lower.iter().any(|c| c.len() != n_y + 1) {
        return Err(Error::invalid(format!(
            "oracle for order {i} needs {i} lower-order correctors on {} nodes",
            n_y + 1
        )));
    }
    if n_y % 2 != 0 {
        return Err(Error::invalid("oracle grid needs an even number of intervals"));
    }
    let (_, u) = sample_velocity(profile, domain, n_y)?;
    let n = n_y + 1;
    let h = 2.0 * domain.half_width_rescaled() / n_y as f64;
    let trap_mean = |g: &[f64]| {
        let s: f64 = g[1..n - 1].iter().sum::<f64>() + 0.5 * (g[0] + g[n - 1]);
        s / (n - 1) as f64
    };
    let ubar = trap_mean(&u);
    let phi: Vec<f64> = (0..n)
        .map(|j| {
            let older = if i >= 2 { lower[i - 2][j] } else { 0.0 };
            (u[j] - ubar) * lower[i - 1][j] - diffusion * older
        })
        .collect();
    let pm = trap_mean(&phi);
    let rhs: Vec<f64> = phi.iter().map(|p| (p - pm) * h * h / diffusion).collect();

    let c = n / 2;
    let mut sub = vec![1.0; n];
    let mut diag = vec![-2.0; n];
    let mut sup = vec![1.0; n];
    let mut b = rhs;
    sup[0] = 2.0;
    sub[n - 1] = 2.0;
    sub[c] = 0.0;
    sup[c] = 0.0;
    diag[c] = 1.0;
    b[c] = 0.0;
    sub[0] = 0.0;
    sup[n - 1] = 0.0;
    crate::linalg::solve_tridiagonal(&sub, &mut diag, &sup, &mut b)
        .map_err(|_| Error::Singular {
            what: "corrector oracle",
            row: c,
        })?;
    Ok(b)
}
