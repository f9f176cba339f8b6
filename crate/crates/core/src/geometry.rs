//! Thin-channel geometry, transverse fibre maps and axial velocity profiles.
//!
//! Three transverse coordinates appear throughout the crate:
//!
//! * the physical coordinate `z ∈ [-l/2, l/2]`,
//! * the rescaled (fast) coordinate `y = z/ε ∈ [-Y, Y]` with `Y = l/(2ε)`,
//! * the reference coordinate `ẑ ∈ [0, 1]` on which modal bases live.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Rectangle `(0, L) × (-l/2, l/2)` together with the scale parameter ε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelDomain {
    length: f64,
    width: f64,
    epsilon: f64,
}

impl ChannelDomain {
    pub fn new(length: f64, width: f64, epsilon: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(length) || !ok(width) {
            return Err(Error::invalid(format!(
                "channel length and width must be positive (got L = {length}, l = {width})"
            )));
        }
        if !ok(epsilon) || epsilon >= 1.0 {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0, 1) (got {epsilon})"
            )));
        }
        Ok(Self {
            length,
            width,
            epsilon,
        })
    }

    /// Domain with ε set to the aspect ratio `l/L`.
    pub fn with_aspect_ratio(length: f64, width: f64) -> Result<Self> {
        Self::new(length, width, width / length)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Half-extent `Y = l/(2ε)` of the rescaled fibre.
    pub fn half_width_rescaled(&self) -> f64 {
        self.width / (2.0 * self.epsilon)
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let hw = 0.5 * self.width;
        (0.0..=self.length).contains(&x) && (-hw..=hw).contains(&z)
    }

    pub(crate) fn check_point(&self, x: f64, z: f64) -> Result<()> {
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                lo: 0.0,
                hi: self.length,
            });
        }
        let hw = 0.5 * self.width;
        if !(-hw..=hw).contains(&z) {
            return Err(Error::Domain {
                what: "z",
                value: z,
                lo: -hw,
                hi: hw,
            });
        }
        Ok(())
    }

    /// Affine map of the physical fibre onto `[0, 1]`.
    pub fn fibre_map_psi(&self, z: f64) -> Result<f64> {
        let hw = 0.5 * self.width;
        if !(-hw..=hw).contains(&z) {
            return Err(Error::Domain {
                what: "z",
                value: z,
                lo: -hw,
                hi: hw,
            });
        }
        Ok((z + hw) / self.width)
    }

    pub fn fibre_map_psi_inv(&self, zhat: f64) -> Result<f64> {
        check_unit(zhat)?;
        Ok(self.width * zhat - 0.5 * self.width)
    }

    /// Affine map of the rescaled fibre `[-Y, Y]` onto `[0, 1]`.
    pub fn fibre_map_theta(&self, y: f64) -> Result<f64> {
        let big_y = self.half_width_rescaled();
        if !(-big_y..=big_y).contains(&y) {
            return Err(Error::Domain {
                what: "y",
                value: y,
                lo: -big_y,
                hi: big_y,
            });
        }
        Ok((y + big_y) / (2.0 * big_y))
    }

    pub fn fibre_map_theta_inv(&self, zhat: f64) -> Result<f64> {
        check_unit(zhat)?;
        let big_y = self.half_width_rescaled();
        Ok(2.0 * big_y * zhat - big_y)
    }
}

fn check_unit(zhat: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&zhat) {
        return Err(Error::Domain {
            what: "zhat",
            value: zhat,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Piecewise-linear table `u(z)` on a strictly increasing grid. No extrapolation.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    z: Vec<f64>,
    u: Vec<f64>,
}

impl Table {
    pub fn new(z: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if z.len() != u.len() || z.len() < 2 {
            return Err(Error::invalid(
                "a tabulated profile needs at least two (z, u) pairs",
            ));
        }
        if z.iter().chain(u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated profile contains non-finite values"));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "tabulated profile abscissae must be strictly increasing",
            ));
        }
        Ok(Self { z, u })
    }

    /// Reads a two-column CSV `(z, u)` with a header row.
    pub fn from_csv_reader<R: Read>(reader: R, origin: &str) -> Result<Self> {
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut z = Vec::new();
        let mut u = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            if rec.len() != 2 {
                return Err(parse_err(format!(
                    "row {}: expected 2 columns, found {}",
                    i + 2,
                    rec.len()
                )));
            }
            let field = |k: usize| -> Result<f64> {
                rec[k]
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("row {}: {}: {e}", i + 2, &rec[k])))
            };
            z.push(field(0)?);
            u.push(field(1)?);
        }
        Table::new(z, u).map_err(|e| parse_err(e.to_string()))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_csv_reader(text.as_bytes(), "<inline>")
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let (lo, hi) = (self.z[0], *self.z.last().unwrap());
        if !(lo..=hi).contains(&z) {
            return Err(Error::Domain {
                what: "z (tabulated profile)",
                value: z,
                lo,
                hi,
            });
        }
        let k = match self.z.partition_point(|&zk| zk <= z) {
            0 => 0,
            p if p >= self.z.len() => self.z.len() - 2,
            p => p - 1,
        };
        let t = (z - self.z[k]) / (self.z[k + 1] - self.z[k]);
        Ok(self.u[k] + t * (self.u[k + 1] - self.u[k]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    Constant {
        speed: f64,
    },
    /// `u(z) = s·z/ε`, i.e. a shear of rate `s` in the rescaled coordinate.
    LinearShear {
        rate: f64,
    },
    /// `u(z) = 2·v̄·(1 − (z/ε)²)`.
    Poiseuille {
        mean: f64,
    },
    /// `u(z) = ln(z + ε + d)/k + C`.
    LogLaw {
        karman: f64,
        roughness: f64,
        offset: f64,
    },
    Tabulated(Table),
}

/// Axial velocity `u(z)` on the transverse fibre.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityProfile {
    kind: ProfileKind,
    epsilon: f64,
}

impl VelocityProfile {
    pub fn new(kind: ProfileKind, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("profile epsilon must be positive (got {epsilon})")));
        }
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("profile parameter {name} is not finite")))
            }
        };
        match &kind {
            ProfileKind::Constant { speed } => finite(*speed, "speed")?,
            ProfileKind::LinearShear { rate } => finite(*rate, "rate")?,
            ProfileKind::Poiseuille { mean } => finite(*mean, "mean")?,
            ProfileKind::LogLaw {
                karman,
                roughness,
                offset,
            } => {
                finite(*offset, "offset")?;
                if !(karman.is_finite() && *karman > 0.0) {
                    return Err(Error::invalid("log-law constant k must be positive"));
                }
                finite(*roughness, "roughness")?;
            }
            ProfileKind::Tabulated(_) => {}
        }
        Ok(Self { kind, epsilon })
    }

    pub fn constant(speed: f64) -> Self {
        Self {
            kind: ProfileKind::Constant { speed },
            epsilon: 1.0,
        }
    }

    pub fn linear_shear(rate: f64, epsilon: f64) -> Result<Self> {
        Self::new(ProfileKind::LinearShear { rate }, epsilon)
    }

    pub fn poiseuille(mean: f64, epsilon: f64) -> Result<Self> {
        Self::new(ProfileKind::Poiseuille { mean }, epsilon)
    }

    /// Log-law with the offset `C = −ln(d)/k` that makes `u` vanish at `z = −ε`.
    pub fn loglaw(karman: f64, roughness: f64, epsilon: f64) -> Result<Self> {
        Self::loglaw_with_offset(karman, roughness, -roughness.ln() / karman, epsilon)
    }

    pub fn loglaw_with_offset(karman: f64, roughness: f64, offset: f64, epsilon: f64) -> Result<Self> {
        Self::new(
            ProfileKind::LogLaw {
                karman,
                roughness,
                offset,
            },
            epsilon,
        )
    }

    pub fn tabulated(table: Table) -> Self {
        Self {
            kind: ProfileKind::Tabulated(table),
            epsilon: 1.0,
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProfileKind::Constant { .. } => "constant",
            ProfileKind::LinearShear { .. } => "linear_shear",
            ProfileKind::Poiseuille { .. } => "poiseuille",
            ProfileKind::LogLaw { .. } => "loglaw",
            ProfileKind::Tabulated(_) => "tabulated",
        }
    }

    /// Whether `u(z) = u(−z)` holds analytically.
    pub fn is_even(&self) -> bool {
        matches!(
            self.kind,
            ProfileKind::Constant { .. } | ProfileKind::Poiseuille { .. }
        )
    }

    /// Axial speed at the physical transverse coordinate `z`.
    pub fn speed(&self, z: f64) -> Result<f64> {
        let eps = self.epsilon;
        let v = match &self.kind {
            ProfileKind::Constant { speed } => *speed,
            ProfileKind::LinearShear { rate } => rate * z / eps,
            ProfileKind::Poiseuille { mean } => {
                let r = z / eps;
                2.0 * mean * (1.0 - r * r)
            }
            ProfileKind::LogLaw {
                karman,
                roughness,
                offset,
            } => {
                let arg = z + eps + roughness;
                if arg <= 0.0 {
                    return Err(Error::Domain {
                        what: "log-law argument z + eps + d",
                        value: arg,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                arg.ln() / karman + offset
            }
            ProfileKind::Tabulated(t) => t.eval(z)?,
        };
        Ok(v)
    }

    /// Checks that the profile is finite on the whole closed fibre of `domain`.
    pub fn validate_on(&self, domain: &ChannelDomain) -> Result<()> {
        let hw = 0.5 * domain.width();
        let n = 64;
        for i in 0..=n {
            let z = -hw + domain.width() * i as f64 / n as f64;
            let v = self.speed(z)?;
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "velocity profile is not finite at z = {z}"
                )));
            }
        }
        Ok(())
    }

    /// `û(y) = u(εy)` on the rescaled fibre of `domain`.
    pub fn rescaled_velocity(&self, domain: &ChannelDomain, y: f64) -> Result<f64> {
        let big_y = domain.half_width_rescaled();
        if !(-big_y..=big_y).contains(&y) {
            return Err(Error::Domain {
                what: "y",
                value: y,
                lo: -big_y,
                hi: big_y,
            });
        }
        let hw = 0.5 * domain.width();
        // clamp the rounding of ε·Y back onto the fibre
        let z = (domain.epsilon() * y).clamp(-hw, hw);
        self.speed(z)
    }

    /// Cross-sectional mean `ū`, by Gauss-Legendre quadrature on the fibre.
    pub fn mean_speed(&self, domain: &ChannelDomain) -> Result<f64> {
        let rule = crate::quadrature::GaussRule::composite(64);
        let mut acc = 0.0;
        for (zhat, w) in rule.nodes().iter().zip(rule.weights()) {
            acc += w * self.speed(domain.fibre_map_psi_inv(*zhat)?)?;
        }
        Ok(acc)
    }

    /// Largest `|u|` over the closed fibre (sampled on 1025 points plus the rule nodes).
    pub fn max_abs_speed(&self, domain: &ChannelDomain) -> Result<f64> {
        let hw = 0.5 * domain.width();
        let n = 1024;
        let mut m: f64 = 0.0;
        for i in 0..=n {
            let z = -hw + domain.width() * i as f64 / n as f64;
            m = m.max(self.speed(z)?.abs());
        }
        Ok(m)
    }
}

/// Scalar data of the advection-diffusion-reaction problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemData {
    /// Order-one diffusion `D`; the physical diffusivity is `ε·D`.
    pub diffusion: f64,
    pub reaction: f64,
    pub forcing: f64,
    /// Dirichlet value on the inflow boundary.
    pub inlet: f64,
    pub initial: f64,
}

impl ProblemData {
    pub fn new(diffusion: f64, reaction: f64, forcing: f64, inlet: f64) -> Result<Self> {
        let p = Self {
            diffusion,
            reaction,
            forcing,
            inlet,
            initial: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusion.is_finite() && self.diffusion > 0.0) {
            return Err(Error::invalid(format!(
                "diffusion D must be positive (got {})",
                self.diffusion
            )));
        }
        if !(self.reaction.is_finite() && self.reaction >= 0.0) {
            return Err(Error::invalid(format!(
                "reaction sigma must be non-negative (got {})",
                self.reaction
            )));
        }
        if ![self.forcing, self.inlet, self.initial]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("forcing, inlet and initial values must be finite"));
        }
        Ok(())
    }

    /// Physical diffusivity `D_ε = ε·D`.
    pub fn scaled_diffusion(&self, domain: &ChannelDomain) -> f64 {
        domain.epsilon() * self.diffusion
    }

    /// Global Péclet number `ū·L/(2·D_ε)`.
    pub fn peclet(&self, domain: &ChannelDomain, mean_speed: f64) -> f64 {
        mean_speed * domain.length() / (2.0 * self.scaled_diffusion(domain))
    }
}
