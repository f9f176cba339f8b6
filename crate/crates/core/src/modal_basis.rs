//! Transverse modal bases on the reference fibre `[0, 1]`.
//!
//! Every basis is stored as a lower-triangular combination of a *raw family*
//! (cosines, shifted Legendre polynomials, monomials or corrector traces), so modes
//! can be evaluated exactly at any `ẑ`, not only at the quadrature nodes.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corrector::CorrectorSet;
use crate::error::{Error, Result};
use crate::geometry::{ChannelDomain, VelocityProfile};
use crate::quadrature::{GaussRule, HermiteTable};

pub const DEFAULT_PANELS: usize = 256;
pub const ORTHONORMALITY_TOL: f64 = 1e-10;
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisFamily {
    Hiphome,
    Educated,
    Legendre,
}

impl BasisFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisFamily::Hiphome => "hiphome",
            BasisFamily::Educated => "educated",
            BasisFamily::Legendre => "legendre",
        }
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hiphome" => Ok(BasisFamily::Hiphome),
            "educated" => Ok(BasisFamily::Educated),
            "legendre" => Ok(BasisFamily::Legendre),
            _ => Err(Error::invalid(format!("unknown basis family '{s}'"))),
        }
    }
}

/// Functions on `[0, 1]` that can be evaluated together with their derivative.
pub trait RawFamily: fmt::Debug + Send + Sync {
    fn count(&self) -> usize;

    /// `(f_i(ẑ), f_i'(ẑ))`.
    fn eval(&self, i: usize, zhat: f64) -> (f64, f64);
}

#[derive(Debug)]
struct Cosines;

impl RawFamily for Cosines {
    fn count(&self) -> usize {
        usize::MAX
    }

    fn eval(&self, i: usize, zhat: f64) -> (f64, f64) {
        if i == 0 {
            return (1.0, 0.0);
        }
        let w = i as f64 * PI;
        let s = std::f64::consts::SQRT_2;
        (s * (w * zhat).cos(), -s * w * (w * zhat).sin())
    }
}

#[derive(Debug)]
struct ShiftedLegendre;

impl RawFamily for ShiftedLegendre {
    fn count(&self) -> usize {
        usize::MAX
    }

    fn eval(&self, i: usize, zhat: f64) -> (f64, f64) {
        let x = 2.0 * zhat - 1.0;
        let (mut p0, mut p1) = (1.0, x);
        let (mut d0, mut d1) = (0.0, 1.0);
        let (p, d) = if i == 0 {
            (p0, d0)
        } else {
            for k in 1..i {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                let d2 = d0 + (2.0 * kf + 1.0) * p1;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            (p1, d1)
        };
        let c = (2.0 * i as f64 + 1.0).sqrt();
        (c * p, 2.0 * c * d)
    }
}

/// `1, ẑ, ẑ², …` (test and demonstration family).
#[derive(Debug)]
pub struct Monomials(pub usize);

impl RawFamily for Monomials {
    fn count(&self) -> usize {
        self.0
    }

    fn eval(&self, i: usize, zhat: f64) -> (f64, f64) {
        if i == 0 {
            (1.0, 0.0)
        } else {
            (zhat.powi(i as i32), i as f64 * zhat.powi(i as i32 - 1))
        }
    }
}

/// Corrector traces `χᵢ*(y(ẑ))`, `y = 2Yẑ − Y`, resampled by Hermite interpolation.
#[derive(Debug)]
pub struct CorrectorTraces {
    half_width: f64,
    tables: Vec<HermiteTable>,
}

impl CorrectorTraces {
    pub fn new(correctors: &CorrectorSet) -> Self {
        Self {
            half_width: correctors.half_width(),
            tables: (0..=correctors.order())
                .map(|i| correctors.interpolant(i))
                .collect(),
        }
    }
}

impl RawFamily for CorrectorTraces {
    fn count(&self) -> usize {
        self.tables.len()
    }

    fn eval(&self, i: usize, zhat: f64) -> (f64, f64) {
        let y = self.half_width * (2.0 * zhat - 1.0);
        let (v, d) = self.tables[i].eval(y);
        (v, 2.0 * self.half_width * d)
    }
}

/// Projection coefficients `p_{i,j}` and residual norms `a_i` of Gram–Schmidt.
#[derive(Clone, Debug, PartialEq)]
pub struct GramSchmidtRecord {
    pub projections: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    /// Per mode, the coefficients subtracted in the first pass then the second.
    pub steps: Vec<Vec<f64>>,
    /// Per mode, the final (signed) normalisation factor.
    pub scales: Vec<f64>,
}

impl GramSchmidtRecord {
    /// Applies the recorded elimination to arbitrary samples of the raw functions
    /// (values or derivatives), one vector per raw function.
    pub fn replay(&self, raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.scales.len());
        for (i, (steps, scale)) in self.steps.iter().zip(&self.scales).enumerate() {
            let mut v = raw[i].clone();
            for pass in 0..2 {
                for j in 0..i {
                    let c = steps[pass * i + j];
                    v.iter_mut().zip(&out[j]).for_each(|(a, b)| *a -= c * b);
                }
            }
            v.iter_mut().for_each(|a| *a *= scale);
            out.push(v);
        }
        out
    }
}

/// `m` orthonormal functions on `[0, 1]` with values and derivatives at the nodes
/// of a composite Gauss–Legendre rule.
#[derive(Clone, Debug)]
pub struct ModalBasis {
    family: BasisFamily,
    rule: GaussRule,
    values: Vec<Vec<f64>>,
    derivatives: Vec<Vec<f64>>,
    eigenvalues: Option<Vec<f64>>,
    record: Option<GramSchmidtRecord>,
    raw: Arc<dyn RawFamily>,
    /// Mode tables on `[0, 1]`, used for pointwise evaluation when present.
    tables: Option<Arc<Vec<HermiteTable>>>,
    transform: DMatrix<f64>,
}

impl ModalBasis {
    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    /// Values of mode `k` at the quadrature nodes.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn derivatives(&self, k: usize) -> &[f64] {
        &self.derivatives[k]
    }

    /// Sturm–Liouville eigenvalues `D(kπ)²` of the educated basis.
    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn gram_schmidt_record(&self) -> Option<&GramSchmidtRecord> {
        self.record.as_ref()
    }

    /// Coefficients `T` with `χ_k = Σ_j T_{kj} f_j` over the raw family.
    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// `(χ_k(ẑ), χ_k'(ẑ))` at an arbitrary point of `[0, 1]`.
    pub fn eval(&self, k: usize, zhat: f64) -> (f64, f64) {
        if let Some(t) = &self.tables {
            return t[k].eval(zhat);
        }
        let mut v = 0.0;
        let mut d = 0.0;
        for j in 0..=k {
            let t = self.transform[(k, j)];
            if t != 0.0 {
                let (a, b) = self.raw.eval(j, zhat);
                v += t * a;
                d += t * b;
            }
        }
        (v, d)
    }

    /// All mode values at `ẑ`.
    pub fn eval_all(&self, zhat: f64) -> Vec<f64> {
        let m = self.len();
        if let Some(t) = &self.tables {
            return t[..m].iter().map(|t| t.eval(zhat).0).collect();
        }
        let raw: Vec<f64> = (0..m).map(|j| self.raw.eval(j, zhat).0).collect();
        (0..m)
            .map(|k| (0..=k).map(|j| self.transform[(k, j)] * raw[j]).sum())
            .collect()
    }

    /// `max_{j,k} |∫χ_jχ_k − δ_jk|`.
    pub fn gram_defect(&self) -> f64 {
        let m = self.len();
        let mut worst = 0.0f64;
        for j in 0..m {
            for k in 0..=j {
                let ip = self.rule.inner(&self.values[j], &self.values[k]);
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }

    /// Keeps the first `m` modes.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::invalid(format!(
                "cannot truncate a {}-mode basis to {m} modes",
                self.len()
            )));
        }
        let mut out = self.clone();
        out.values.truncate(m);
        out.derivatives.truncate(m);
        if let Some(ev) = out.eigenvalues.as_mut() {
            ev.truncate(m);
        }
        if let Some(rec) = out.record.as_mut() {
            rec.projections.truncate(m);
            rec.norms.truncate(m);
            rec.steps.truncate(m);
            rec.scales.truncate(m);
        }
        out.transform = self.transform.view((0, 0), (m, m)).into_owned();
        Ok(out)
    }

    /// Writes `zhat, mode_0..mode_{m-1}` on `points` uniform points.
    pub fn write_csv_to<W: Write>(&self, w: &mut W, points: usize) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("zhat".to_string())
            .chain((0..self.len()).map(|k| format!("mode_{k}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for p in 0..points {
            let z = p as f64 / (points - 1) as f64;
            let mut row = vec![format!("{:.16e}", z)];
            row.extend(self.eval_all(z).iter().map(|v| format!("{:.16e}", v)));
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    }

    pub fn write_csv(&self, path: &Path, points: usize) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv_to(&mut w, points).map_err(|e| Error::io(path, e))
    }
}

fn sample(raw: &dyn RawFamily, i: usize, rule: &GaussRule) -> (Vec<f64>, Vec<f64>) {
    rule.nodes().iter().map(|&z| raw.eval(i, z)).unzip()
}

/// Modified Gram–Schmidt with one reorthogonalisation pass on the first `m`
/// functions of `raw`.
///
/// Returns the basis built so far together with the degeneracy error, if any, so
/// callers can still inspect the modes preceding the offending index.
pub fn gram_schmidt_partial(
    raw: Arc<dyn RawFamily>,
    m: usize,
    rule: GaussRule,
    family: BasisFamily,
) -> Result<(ModalBasis, Option<Error>)> {
    if m == 0 {
        return Err(Error::invalid("a modal basis needs at least one mode"));
    }
    if raw.count() < m {
        return Err(Error::invalid(format!(
            "{m} modes requested from {} raw functions",
            raw.count()
        )));
    }
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut derivatives: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut transform = DMatrix::<f64>::zeros(m, m);
    let mut projections = Vec::with_capacity(m);
    let mut norms = Vec::with_capacity(m);
    let mut steps = Vec::with_capacity(m);
    let mut scales = Vec::with_capacity(m);
    let mut failure = None;

    for i in 0..m {
        let (mut v, mut d) = sample(raw.as_ref(), i, &rule);
        let raw_norm = rule.inner(&v, &v).sqrt();
        let mut coeffs = vec![0.0; i + 1];
        coeffs[i] = 1.0;
        let mut p = vec![0.0; i];
        let mut step = Vec::with_capacity(2 * i);
        for _pass in 0..2 {
            for j in 0..i {
                let c = rule.inner(&v, &values[j]);
                p[j] += c;
                step.push(c);
                for q in 0..v.len() {
                    v[q] -= c * values[j][q];
                    d[q] -= c * derivatives[j][q];
                }
                for r in 0..=j {
                    coeffs[r] -= c * transform[(j, r)];
                }
            }
        }
        let a = rule.inner(&v, &v).sqrt();
        let threshold = DEGENERACY_TOL * raw_norm;
        if !(a > threshold) {
            failure = Some(Error::Degenerate {
                index: i,
                residual: a,
                threshold,
            });
            break;
        }
        let mut scale = 1.0 / a;
        let end_value = |sign: f64| -> (f64, f64) {
            let mut at1 = 0.0;
            let mut at0 = 0.0;
            for (r, c) in coeffs.iter().enumerate() {
                at1 += c * raw.eval(r, 1.0).0;
                at0 += c * raw.eval(r, 0.0).0;
            }
            (sign * at1, sign * at0)
        };
        let (at1, at0) = end_value(1.0);
        let tie = 1e-12 * (a + at1.abs() + at0.abs());
        if at1 < -tie || (at1.abs() <= tie && at0 < 0.0) {
            scale = -scale;
        }
        v.iter_mut().for_each(|x| *x *= scale);
        d.iter_mut().for_each(|x| *x *= scale);
        for (r, c) in coeffs.iter().enumerate() {
            transform[(i, r)] = c * scale;
        }
        projections.push(p);
        norms.push(a);
        steps.push(step);
        scales.push(scale);
        values.push(v);
        derivatives.push(d);
    }

    let kept = values.len();
    if kept == 0 {
        return Err(failure.unwrap_or_else(|| Error::invalid("empty basis")));
    }
    let transform = transform.view((0, 0), (kept, kept)).into_owned();
    Ok((
        ModalBasis {
            family,
            rule,
            values,
            derivatives,
            eigenvalues: None,
            record: Some(GramSchmidtRecord {
                projections,
                norms,
                steps,
                scales,
            }),
            raw,
            tables: None,
            transform,
        },
        failure,
    ))
}

pub fn gram_schmidt(
    raw: Arc<dyn RawFamily>,
    m: usize,
    rule: GaussRule,
    family: BasisFamily,
) -> Result<ModalBasis> {
    match gram_schmidt_partial(raw, m, rule, family)? {
        (basis, None) => Ok(basis),
        (_, Some(e)) => Err(e),
    }
}

/// Gram–Schmidt-orthonormalised corrector traces `χ₀* … χ_{m−1}*`.
pub fn hiphome_basis(correctors: &CorrectorSet, m: usize, panels: usize) -> Result<ModalBasis> {
    hiphome_basis_partial(correctors, m, panels).and_then(|(b, e)| match e {
        None => Ok(b),
        Some(e) => Err(e),
    })
}

pub fn hiphome_basis_partial(
    correctors: &CorrectorSet,
    m: usize,
    panels: usize,
) -> Result<(ModalBasis, Option<Error>)> {
    if correctors.order() + 1 < m {
        return Err(Error::invalid(format!(
            "{m} modes need correctors up to order {} (have {})",
            m - 1,
            correctors.order()
        )));
    }
    let (mut basis, failure) = gram_schmidt_partial(
        Arc::new(CorrectorTraces::new(correctors)),
        m,
        GaussRule::composite(panels),
        BasisFamily::Hiphome,
    )?;
    // Replaying the elimination on the (mirrored) corrector grid gives tables whose
    // evaluation does not cancel large transform entries.
    let rec = basis.record.as_ref().expect("Gram-Schmidt record");
    let kept = rec.scales.len();
    let jac = 2.0 * correctors.half_width();
    let vals: Vec<Vec<f64>> = (0..kept).map(|i| correctors.corrector(i).to_vec()).collect();
    let slopes: Vec<Vec<f64>> = (0..kept)
        .map(|i| correctors.slope(i).iter().map(|d| d * jac).collect())
        .collect();
    let tables = rec
        .replay(&vals)
        .into_iter()
        .zip(rec.replay(&slopes))
        .map(|(v, d)| HermiteTable::new(0.0, 1.0, v, d))
        .collect();
    basis.tables = Some(Arc::new(tables));
    Ok((basis, failure))
}

fn closed_form(
    raw: Arc<dyn RawFamily>,
    m: usize,
    panels: usize,
    family: BasisFamily,
) -> Result<ModalBasis> {
    if m == 0 {
        return Err(Error::invalid("a modal basis needs at least one mode"));
    }
    let rule = GaussRule::composite(panels);
    let (values, derivatives) = (0..m).map(|k| sample(raw.as_ref(), k, &rule)).unzip();
    Ok(ModalBasis {
        family,
        rule,
        values,
        derivatives,
        eigenvalues: None,
        record: None,
        raw,
        tables: None,
        transform: DMatrix::identity(m, m),
    })
}

/// Neumann eigenfunctions `1, √2·cos(kπẑ)` with eigenvalues `D(kπ)²`.
pub fn educated_basis(m: usize, diffusion: f64, panels: usize) -> Result<ModalBasis> {
    let mut b = closed_form(Arc::new(Cosines), m, panels, BasisFamily::Educated)?;
    b.eigenvalues = Some((0..m).map(|k| diffusion * (k as f64 * PI).powi(2)).collect());
    Ok(b)
}

/// Orthonormal shifted Legendre polynomials `√(2k+1)·P_k(2ẑ − 1)`.
pub fn legendre_basis(m: usize, panels: usize) -> Result<ModalBasis> {
    closed_form(Arc::new(ShiftedLegendre), m, panels, BasisFamily::Legendre)
}

/// Transverse Galerkin matrices on the reference fibre.
#[derive(Clone, Debug, PartialEq)]
pub struct Couplings {
    /// `∫χ_jχ_k`
    pub mass: DMatrix<f64>,
    /// `∫χ_j'χ_k'`
    pub stiffness: DMatrix<f64>,
    /// `∫u(z(ẑ))χ_jχ_k`
    pub advection: DMatrix<f64>,
    /// `∫χ_k`
    pub moments: Vec<f64>,
}

pub fn coupling_integrals(
    basis: &ModalBasis,
    profile: &VelocityProfile,
    domain: &ChannelDomain,
) -> Result<Couplings> {
    let rule = basis.rule();
    let l = domain.width();
    let u = rule
        .nodes()
        .iter()
        .map(|&zh| profile.speed(l * zh - 0.5 * l))
        .collect::<Result<Vec<_>>>()?;
    let m = basis.len();
    let mut mass = DMatrix::zeros(m, m);
    let mut stiffness = DMatrix::zeros(m, m);
    let mut advection = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..=j {
            let vj = basis.values(j);
            let vk = basis.values(k);
            let mjk = rule.inner(vj, vk);
            let kjk = rule.inner(basis.derivatives(j), basis.derivatives(k));
            let ajk: f64 = vj
                .iter()
                .zip(vk)
                .zip(&u)
                .zip(rule.weights())
                .map(|(((a, b), c), w)| a * b * c * w)
                .sum();
            for (mat, v) in [(&mut mass, mjk), (&mut stiffness, kjk), (&mut advection, ajk)] {
                mat[(j, k)] = v;
                mat[(k, j)] = v;
            }
        }
    }
    let moments = (0..m).map(|k| rule.integrate(basis.values(k))).collect();
    Ok(Couplings {
        mass,
        stiffness,
        advection,
        moments,
    })
}
