//! Lifshitz pressure and pressure gradient between two identical thick
//! plates at imaginary Matsubara frequencies.
//!
//! Each Matsubara term is integrated in `y = 2 d q`:
//!
//! ```text
//! P  = -(kB T / 8 pi d^3) sum'_l int y^2 sum_a r_a^2 e^-y / (1 - r_a^2 e^-y)   dy
//! P' =  (kB T / 8 pi d^4) sum'_l int y^3 sum_a r_a^2 e^-y / (1 - r_a^2 e^-y)^2 dy
//! ```
//!
//! over `y >= 2 d xi_l / (hbar c)`. The `l = 0` term uses the static
//! reflection coefficients selected by [`ZeroFreqApproach`]; all `l >= 1`
//! terms use the dielectric model directly.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::permittivity::{permittivity_iw, superfluid_weight, DielectricModel};
use crate::physcore::{matsubara_frequency, SuperconductorParams, HBAR_C_EV_M, HBAR_C_J_M, K_B_J, ZETA3};
use crate::quadrature::{integrate_breaks, KahanSum, QuadOptions};

/// Rule for the static (`l = 0`) TE reflection coefficient above and below `Tc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZeroFreqApproach {
    /// Drude above `Tc` (`r_TE = 0`), BCS below.
    DrudeBcs,
    /// Plasma above `Tc`, BCS below.
    PlasmaBcs,
    /// Plasma on both sides.
    PlasmaPlasma,
}

impl ZeroFreqApproach {
    pub const ALL: [Self; 3] = [Self::PlasmaBcs, Self::PlasmaPlasma, Self::DrudeBcs];

    pub fn name(&self) -> &'static str {
        match self {
            Self::DrudeBcs => "drude-bcs",
            Self::PlasmaBcs => "plasma-bcs",
            Self::PlasmaPlasma => "plasma-plasma",
        }
    }

    /// Plasma frequency (eV) entering the static TE coefficient at `temperature`,
    /// or `None` when the coefficient vanishes.
    pub fn static_te_plasma_frequency(&self, temperature: f64, p: &SuperconductorParams) -> Result<Option<f64>> {
        let superconducting = temperature < p.tc;
        Ok(match (self, superconducting) {
            (Self::DrudeBcs, false) => None,
            (Self::PlasmaBcs, false) | (Self::PlasmaPlasma, _) => Some(p.omega_p),
            (Self::DrudeBcs, true) | (Self::PlasmaBcs, true) => Some(condensate_plasma_frequency(temperature, p)?),
        })
    }
}

impl std::str::FromStr for ZeroFreqApproach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "drude-bcs" => Ok(Self::DrudeBcs),
            "plasma-bcs" => Ok(Self::PlasmaBcs),
            "plasma-plasma" => Ok(Self::PlasmaPlasma),
            other => Err(domain(format!("unknown zero-frequency approach '{other}'"))),
        }
    }
}

/// Effective plasma frequency of the condensate, `sqrt(lim xi^2 (eps_BCS - 1))`.
///
/// The BCS spectral function tends to the superfluid weight as `xi -> 0`, so
/// `Omega_bar^2 = weight * Omega^2`.
pub fn condensate_plasma_frequency(temperature: f64, p: &SuperconductorParams) -> Result<f64> {
    Ok(p.omega_p * superfluid_weight(temperature, p)?.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative tolerance of each Matsubara term's momentum integral.
    pub rel_tol: f64,
    /// Absolute floor for each term's quadrature error, expressed in Pa.
    pub abs_tol_pressure: f64,
    pub max_matsubara: usize,
    /// Stop once three consecutive terms fall below this fraction of the partial sum.
    pub term_stop_rel: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol_pressure: 1e-9, max_matsubara: 100_000, term_stop_rel: 1e-10 }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol_pressure > 0.0 && self.term_stop_rel > 0.0) || self.max_matsubara < 1 {
            return Err(domain(format!("invalid quadrature config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifshitzSpec {
    /// Plate separation, m.
    pub separation: f64,
    /// Temperature, K.
    pub temperature: f64,
    pub model: DielectricModel,
    pub approach: ZeroFreqApproach,
    pub quad: QuadratureConfig,
}

impl LifshitzSpec {
    pub fn new(separation: f64, temperature: f64, model: DielectricModel, approach: ZeroFreqApproach) -> Self {
        Self { separation, temperature, model, approach, quad: QuadratureConfig::default() }
    }

    pub fn with_separation(mut self, d: f64) -> Self {
        self.separation = d;
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn with_quad(mut self, quad: QuadratureConfig) -> Self {
        self.quad = quad;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.separation > 0.0) {
            return Err(domain(format!("separation must be positive, got {}", self.separation)));
        }
        if !(self.temperature > 0.0) {
            return Err(domain(format!("temperature must be positive, got {}", self.temperature)));
        }
        self.model.params().validate()?;
        self.quad.validate()
    }
}

/// Fresnel coefficients `(r_TE, r_TM)` of a half-space at imaginary frequency.
pub fn fresnel_iw(epsilon: f64, xi: f64, k_perp: f64) -> Result<(f64, f64)> {
    if !(epsilon >= 1.0) {
        return Err(domain(format!("permittivity must be >= 1 at imaginary frequency, got {epsilon}")));
    }
    if !(xi >= 0.0 && k_perp >= 0.0) || (xi == 0.0 && k_perp == 0.0) {
        return Err(domain("need xi >= 0, k_perp >= 0, not both zero"));
    }
    let x = xi / HBAR_C_EV_M;
    let q = (x * x + k_perp * k_perp).sqrt();
    Ok(reflection_pair(epsilon - 1.0, x * x, q))
}

/// Reflection coefficients from `eps - 1`, `(xi / hbar c)^2` and `q`, written
/// to avoid the `q - s` and `eps q - s` cancellations.
fn reflection_pair(eps_m1: f64, x2: f64, q: f64) -> (f64, f64) {
    let eps = 1.0 + eps_m1;
    let s = (q * q + eps_m1 * x2).sqrt();
    let r_te = -eps_m1 * x2 / ((q + s) * (q + s));
    let r_tm = eps_m1 * ((eps + 1.0) * q * q - x2) / ((eps * q + s) * (eps * q + s));
    (r_te, r_tm)
}

/// Static TE reflection coefficient for a plasma-like response with
/// effective plasma frequency `omega_eff` (eV).
pub fn static_te_reflection(k_perp: f64, omega_eff: f64) -> f64 {
    let kp = omega_eff / HBAR_C_EV_M;
    let root = (kp * kp + k_perp * k_perp).sqrt();
    if kp == 0.0 {
        return 0.0;
    }
    -kp * kp / ((k_perp + root) * (k_perp + root))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Pressure,
    Gradient,
}

impl Quantity {
    fn weight(&self, y: f64, r2: f64) -> f64 {
        let a = r2 * (-y).exp();
        match self {
            Quantity::Pressure => y * y * a / (1.0 - a),
            Quantity::Gradient => y * y * y * a / ((1.0 - a) * (1.0 - a)),
        }
    }

    /// `int_0^inf` of the weight with `r = 1`: `2 zeta(3)` or `6 zeta(3)`.
    fn perfect_mirror_integral(&self) -> f64 {
        match self {
            Quantity::Pressure => 2.0 * ZETA3,
            Quantity::Gradient => 6.0 * ZETA3,
        }
    }

    /// Converts a dimensionless Matsubara sum into Pa or Pa/m.
    fn prefactor(&self, d: f64, temperature: f64) -> f64 {
        let base = K_B_J * temperature / (8.0 * PI * d * d * d);
        match self {
            Quantity::Pressure => -base,
            Quantity::Gradient => base / d,
        }
    }
}

/// Matsubara-sum decomposition of a pressure or gradient, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatsubaraBreakdown {
    /// Half-weighted `l = 0` TM contribution.
    pub zero_tm: f64,
    /// Half-weighted `l = 0` TE contribution.
    pub zero_te: f64,
    /// Sum over `l >= 1`.
    pub dynamic: f64,
    /// Highest Matsubara index included.
    pub terms: usize,
    /// Estimated relative truncation error of `dynamic`.
    pub achieved_tol: f64,
}

impl MatsubaraBreakdown {
    pub fn total(&self) -> f64 {
        self.zero_tm + self.zero_te + self.dynamic
    }
}

fn y_breaks(y0: f64) -> [f64; 6] {
    [y0, y0 + 0.5, y0 + 2.0, y0 + 6.0, y0 + 16.0, y0 + 60.0]
}

fn zero_term(spec: &LifshitzSpec, quantity: Quantity, opts: QuadOptions) -> Result<(f64, f64)> {
    let d = spec.separation;
    let pref = quantity.prefactor(d, spec.temperature);
    let tm = 0.5 * pref * quantity.perfect_mirror_integral();
    let te = match spec.approach.static_te_plasma_frequency(spec.temperature, spec.model.params())? {
        None => 0.0,
        Some(omega_eff) => {
            let integral = integrate_breaks(
                |y| {
                    let r = static_te_reflection(y / (2.0 * d), omega_eff);
                    quantity.weight(y, r * r)
                },
                &y_breaks(0.0),
                opts,
            );
            0.5 * pref * integral.value
        }
    };
    Ok((tm, te))
}

fn dynamic_term(spec: &LifshitzSpec, quantity: Quantity, xi: f64, opts: QuadOptions) -> Result<f64> {
    let d = spec.separation;
    let eps = permittivity_iw(&spec.model, xi, spec.temperature)?;
    let eps_m1 = eps - 1.0;
    let x = xi / HBAR_C_EV_M;
    let x2 = x * x;
    let y0 = 2.0 * d * x;
    let integral = integrate_breaks(
        |y| {
            let q = y / (2.0 * d);
            let (te, tm) = reflection_pair(eps_m1, x2, q);
            quantity.weight(y, te * te) + quantity.weight(y, tm * tm)
        },
        &y_breaks(y0),
        opts,
    );
    Ok(integral.value)
}

/// Full Matsubara decomposition of the pressure or its separation derivative.
pub fn matsubara_breakdown(spec: &LifshitzSpec, quantity: Quantity) -> Result<MatsubaraBreakdown> {
    spec.validate()?;
    let d = spec.separation;
    let pref = quantity.prefactor(d, spec.temperature);
    let abs_floor = match quantity {
        Quantity::Pressure => spec.quad.abs_tol_pressure,
        Quantity::Gradient => spec.quad.abs_tol_pressure / d,
    } / pref.abs();
    let opts = QuadOptions { rel_tol: spec.quad.rel_tol, abs_tol: abs_floor, max_intervals: 2000 };
    let (zero_tm, zero_te) = zero_term(spec, quantity, opts)?;

    let mut sum = KahanSum::default();
    let mut quiet = 0;
    let mut prev = f64::NAN;
    let mut last = 0.0;
    let mut l = 0;
    while quiet < 3 {
        if l >= spec.quad.max_matsubara {
            let partial = sum.value();
            return Err(Error::Convergence {
                partial_sum: pref * partial,
                achieved_tol: (last / partial).abs(),
                terms: l,
            });
        }
        l += 1;
        let xi = matsubara_frequency(l, spec.temperature)?;
        prev = last;
        last = dynamic_term(spec, quantity, xi, opts)?;
        sum.add(last);
        if last.abs() < spec.quad.term_stop_rel * sum.value().abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
    }
    let partial = sum.value();
    let ratio = last / prev;
    let tail = if ratio.is_finite() && ratio > 0.0 && ratio < 1.0 {
        last.abs() * ratio / (1.0 - ratio)
    } else {
        10.0 * last.abs()
    };
    Ok(MatsubaraBreakdown {
        zero_tm,
        zero_te,
        dynamic: pref * partial,
        terms: l,
        achieved_tol: tail / partial.abs(),
    })
}

/// Casimir pressure in Pa; negative values mean attraction.
pub fn casimir_pressure(spec: &LifshitzSpec) -> Result<f64> {
    Ok(matsubara_breakdown(spec, Quantity::Pressure)?.total())
}

/// Analytic separation derivative of the pressure, Pa/m.
pub fn casimir_pressure_gradient(spec: &LifshitzSpec) -> Result<f64> {
    Ok(matsubara_breakdown(spec, Quantity::Gradient)?.total())
}

/// `(P_TM^(0), P'_cl)`: the universal static TM pressure and the classical
/// gradient `3 kB T zeta(3) / (8 pi d^4)`.
pub fn classical_terms(d: f64, temperature: f64) -> (f64, f64) {
    let kt = K_B_J * temperature;
    let p_tm0 = -kt * ZETA3 / (8.0 * PI * d.powi(3));
    let grad = 3.0 * kt * ZETA3 / (8.0 * PI * d.powi(4));
    (p_tm0, grad)
}

/// Local power-law exponent `n = -d ln|P| / d ln d`, by symmetric differencing
/// at `d * 1.01` and `d / 1.01`.
pub fn local_exponent(spec: &LifshitzSpec) -> Result<f64> {
    const STEP: f64 = 1.01;
    let d = spec.separation;
    let p_up = casimir_pressure(&spec.with_separation(d * STEP))?;
    let p_down = casimir_pressure(&spec.with_separation(d / STEP))?;
    Ok(-(p_up.abs() / p_down.abs()).ln() / (2.0 * STEP.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdealGeometry {
    PlatePlate { area: f64, separation: f64 },
    SpherePlate { radius: f64, separation: f64 },
}

/// Zero-temperature Casimir pressure magnitude between perfect mirrors, Pa.
pub fn ideal_casimir_pressure(d: f64) -> f64 {
    PI.powi(2) * HBAR_C_J_M / (240.0 * d.powi(4))
}

/// Attractive force magnitude between perfect conductors, N (PFA for the sphere).
pub fn ideal_casimir_force(geometry: IdealGeometry) -> Result<f64> {
    match geometry {
        IdealGeometry::PlatePlate { area, separation } => {
            if !(area > 0.0 && separation > 0.0) {
                return Err(domain("plate area and separation must be positive"));
            }
            Ok(area * ideal_casimir_pressure(separation))
        }
        IdealGeometry::SpherePlate { radius, separation } => {
            if !(radius > 0.0 && separation > 0.0) {
                return Err(domain("sphere radius and separation must be positive"));
            }
            Ok(PI.powi(3) * HBAR_C_J_M * radius / (360.0 * separation.powi(3)))
        }
    }
}

/// Change of the pressure gradient across `Tc`:
/// `P'(Tc + dT, normal) - P'(Tc - dT, superconducting)`, Pa/m.
///
/// `l >= 1` terms use the BCS permittivity (Drude above `Tc`); the static TE
/// term follows `approach` on each side. `dT = 0` gives the limit from both
/// sides, where only the static TE coefficient can differ.
pub fn tc_jump(
    d: f64,
    tc: f64,
    dt: f64,
    approach: ZeroFreqApproach,
    p: &SuperconductorParams,
    quad: QuadratureConfig,
) -> Result<f64> {
    if !(dt >= 0.0 && dt < tc) {
        return Err(domain(format!("need 0 <= dT < Tc, got dT = {dt}, Tc = {tc}")));
    }
    let params = SuperconductorParams { tc, ..*p };
    let base = LifshitzSpec::new(d, tc, DielectricModel::Bcs(params), approach).with_quad(quad);
    if dt == 0.0 {
        // The condensate weight vanishes at Tc, so the superconducting-side
        // static TE coefficient is zero unless the approach keeps the plasma value.
        let at_tc = matsubara_breakdown(&base, Quantity::Gradient)?;
        let below_te = match approach {
            ZeroFreqApproach::PlasmaPlasma => at_tc.zero_te,
            ZeroFreqApproach::DrudeBcs | ZeroFreqApproach::PlasmaBcs => 0.0,
        };
        return Ok(at_tc.zero_te - below_te);
    }
    let above = casimir_pressure_gradient(&base.with_temperature(tc + dt))?;
    let below = casimir_pressure_gradient(&base.with_temperature(tc - dt))?;
    Ok(above - below)
}
