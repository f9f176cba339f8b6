//! L² norms on a tensor lattice, QoI errors and convergence-rate estimates.

use crate::error::{Error, Result};
use crate::geometry::ChannelDomain;
use crate::quadrature::simpson_weights;
use crate::reduced::ReducedSolution;
use crate::reference::{EffectiveField1D, ReferenceField2D};

pub const MIN_LATTICE: usize = 8;
/// Successive errors shrinking by less than this fraction mark the plateau.
pub const PLATEAU_RATIO: f64 = 0.95;

/// Anything that can be sampled on a tensor lattice `xs × zs` (row-major in `x`).
pub trait Field: Sync {
    fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>>;
}

impl Field for ReducedSolution {
    fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        ReducedSolution::evaluate_lattice(self, xs, zs)
    }
}

impl Field for ReferenceField2D {
    fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        ReferenceField2D::evaluate_lattice(self, xs, zs)
    }
}

impl Field for EffectiveField1D {
    fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        EffectiveField1D::evaluate_lattice(self, xs, zs)
    }
}

/// Wraps a pointwise closure.
pub struct FnField<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> Field for FnField<F> {
    fn evaluate_lattice(&self, xs: &[f64], zs: &[f64]) -> Result<Vec<f64>> {
        Ok(xs
            .iter()
            .flat_map(|&x| zs.iter().map(move |&z| (self.0)(x, z)))
            .collect())
    }
}

/// Uniform evaluation lattice with composite Simpson weights in each direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub nx: usize,
    pub nz: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice { nx: 801, nz: 81 }
    }
}

impl Lattice {
    pub fn new(nx: usize, nz: usize) -> Result<Self> {
        if nx < MIN_LATTICE || nz < MIN_LATTICE {
            return Err(Error::invalid(format!(
                "evaluation lattice {nx} × {nz} is coarser than {MIN_LATTICE} × {MIN_LATTICE}"
            )));
        }
        Ok(Lattice { nx, nz })
    }

    /// Halves both spacings.
    pub fn refined(&self) -> Self {
        Lattice {
            nx: 2 * self.nx - 1,
            nz: 2 * self.nz - 1,
        }
    }

    pub fn points(&self, domain: &ChannelDomain) -> (Vec<f64>, Vec<f64>) {
        let (len, wid) = (domain.length(), domain.width());
        let xs = (0..self.nx)
            .map(|i| len * i as f64 / (self.nx - 1) as f64)
            .collect();
        let zs = (0..self.nz)
            .map(|j| -0.5 * wid + wid * j as f64 / (self.nz - 1) as f64)
            .collect();
        (xs, zs)
    }

    fn weights(&self, domain: &ChannelDomain) -> (Vec<f64>, Vec<f64>) {
        (
            simpson_weights(self.nx, domain.length() / (self.nx - 1) as f64),
            simpson_weights(self.nz, domain.width() / (self.nz - 1) as f64),
        )
    }

    fn check(&self) -> Result<()> {
        Lattice::new(self.nx, self.nz).map(|_| ())
    }

    /// `sqrt(Σ wₓ w_z v²)` for values laid out row-major in `x`.
    pub fn norm_of_values(&self, domain: &ChannelDomain, values: &[f64]) -> Result<f64> {
        self.check()?;
        if values.len() != self.nx * self.nz {
            return Err(Error::invalid(format!(
                "expected {} lattice values, got {}",
                self.nx * self.nz,
                values.len()
            )));
        }
        let (wx, wz) = self.weights(domain);
        let mut total = 0.0;
        for (i, row) in values.chunks(self.nz).enumerate() {
            let inner: f64 = row.iter().zip(&wz).map(|(v, w)| w * v * v).sum();
            total += wx[i] * inner;
        }
        Ok(total.sqrt())
    }
}

/// `‖c‖_{L²(Ω_ε)}` by tensor Simpson over the physical channel.
pub fn l2_norm(field: &dyn Field, domain: &ChannelDomain, lattice: Lattice) -> Result<f64> {
    lattice.check()?;
    let (xs, zs) = lattice.points(domain);
    lattice.norm_of_values(domain, &field.evaluate_lattice(&xs, &zs)?)
}

/// Both error measures from a single sampling of each field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub l2_error: f64,
    pub qoi_error: f64,
    pub reference_norm: f64,
    pub reduced_norm: f64,
}

pub fn compare(
    reference: &dyn Field,
    reduced: &dyn Field,
    domain: &ChannelDomain,
    lattice: Lattice,
) -> Result<Comparison> {
    lattice.check()?;
    let (xs, zs) = lattice.points(domain);
    let a = reference.evaluate_lattice(&xs, &zs)?;
    let b = reduced.evaluate_lattice(&xs, &zs)?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
    let reference_norm = lattice.norm_of_values(domain, &a)?;
    let reduced_norm = lattice.norm_of_values(domain, &b)?;
    Ok(Comparison {
        l2_error: lattice.norm_of_values(domain, &diff)?,
        qoi_error: (reference_norm - reduced_norm).abs(),
        reference_norm,
        reduced_norm,
    })
}

/// `J = | ‖ref‖ − ‖red‖ |`.
pub fn qoi_error(
    reference: &dyn Field,
    reduced: &dyn Field,
    domain: &ChannelDomain,
    lattice: Lattice,
) -> Result<f64> {
    Ok(compare(reference, reduced, domain, lattice)?.qoi_error)
}

/// Change in `‖field‖` when both lattice spacings are halved.
pub fn lattice_sensitivity(field: &dyn Field, domain: &ChannelDomain, lattice: Lattice) -> Result<f64> {
    let coarse = l2_norm(field, domain, lattice)?;
    let fine = l2_norm(field, domain, lattice.refined())?;
    Ok((fine - coarse).abs())
}

fn check_positive(errors: &[f64], params: &[f64]) -> Result<()> {
    if errors.len() != params.len() {
        return Err(Error::invalid(format!(
            "{} errors against {} parameters",
            errors.len(),
            params.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::invalid(format!("error entries must be positive (got {e})")));
    }
    if let Some(p) = params.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::invalid(format!("parameters must be positive (got {p})")));
    }
    let increasing = params.windows(2).all(|w| w[0] < w[1]);
    let decreasing = params.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return Err(Error::invalid("parameters must be strictly monotone"));
    }
    Ok(())
}

/// Pairwise rates `log(e_i/e_{i+1}) / log(p_i/p_{i+1})`.
pub fn eoc(errors: &[f64], params: &[f64]) -> Result<Vec<f64>> {
    check_positive(errors, params)?;
    Ok(errors
        .windows(2)
        .zip(params.windows(2))
        .map(|(e, p)| (e[0] / e[1]).ln() / (p[0] / p[1]).ln())
        .collect())
}

/// Least-squares slope of `log e` against `log p`.
pub fn log_log_slope(errors: &[f64], params: &[f64]) -> Result<f64> {
    check_positive(errors, params)?;
    if errors.len() < 2 {
        return Err(Error::invalid("a slope needs at least two points"));
    }
    let xs: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Number of leading entries before the plateau. The plateau is the trailing run of
/// steps with `e_{i+1} > 0.95·e_i`; flat steps followed by a real drop (a staircase)
/// stay in the range.
pub fn pre_plateau_len(errors: &[f64]) -> usize {
    errors
        .windows(2)
        .rposition(|w| w[1] <= PLATEAU_RATIO * w[0])
        .map_or(errors.len().min(1), |i| i + 2)
}

/// Least-squares slope over the pre-plateau range, if it holds at least two points.
pub fn fitted_rate(errors: &[f64], params: &[f64]) -> Result<Option<f64>> {
    let n = pre_plateau_len(errors);
    if n < 2 {
        return Ok(None);
    }
    log_log_slope(&errors[..n], &params[..n]).map(Some)
}

/// One measurement row of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub config: String,
    pub family: String,
    pub m: usize,
    pub h: f64,
    pub dt: Option<f64>,
    pub time: Option<f64>,
    pub l2_error: f64,
    pub qoi_error: f64,
    pub wall_ms: u64,
}

pub const CSV_HEADER: &str = "family,m,h,dt,t,l2_error,qoi_error,wall_ms";

impl ErrorRecord {
    /// Fails when `e < 0` or the reverse triangle inequality `J ≤ e` is broken
    /// beyond rounding.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        config: impl Into<String>,
        family: impl Into<String>,
        m: usize,
        h: f64,
        dt: Option<f64>,
        time: Option<f64>,
        cmp: &Comparison,
        wall_ms: u64,
    ) -> Result<Self> {
        let e = cmp.l2_error;
        let j = cmp.qoi_error;
        if !(e >= 0.0 && e.is_finite() && j.is_finite()) {
            return Err(Error::Invariant(format!("error measures must be finite and e ≥ 0 (e = {e}, J = {j})")));
        }
        let slack = 4.0 * f64::EPSILON * cmp.reference_norm.max(cmp.reduced_norm);
        if j > e * (1.0 + 1e-12) + slack {
            return Err(Error::Invariant(format!("J = {j:e} exceeds e = {e:e}")));
        }
        Ok(ErrorRecord {
            config: config.into(),
            family: family.into(),
            m,
            h,
            dt,
            time,
            l2_error: e,
            qoi_error: j,
            wall_ms,
        })
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!(
            "{},{},{:.16e},{},{},{:.16e},{:.16e},{}",
            self.family,
            self.m,
            self.h,
            opt(self.dt),
            opt(self.time),
            self.l2_error,
            self.qoi_error,
            self.wall_ms
        )
    }
}
