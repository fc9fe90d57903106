//! Physical constants, unit conventions and the parameter records shared by
//! the rest of the crate.
//!
//! Spectral quantities (Matsubara frequencies, plasma and relaxation
//! frequencies, the gap) are carried as energies in eV. Wavevectors are in
//! 1/m, and the photon wavevector is `xi / HBAR_C_EV_M`. Pressures and forces
//! are SI.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{domain, Error, Result};

/// Boltzmann constant, J/K (exact).
pub const K_B_J: f64 = 1.380649e-23;
/// Elementary charge, C (exact). Also J per eV.
pub const E_CHARGE: f64 = 1.602176634e-19;
/// Boltzmann constant, eV/K.
pub const K_B_EV: f64 = K_B_J / E_CHARGE;
/// Reduced Planck constant, J s.
pub const HBAR_J: f64 = 1.054571817e-34;
/// Reduced Planck constant, eV s.
pub const HBAR_EV: f64 = HBAR_J / E_CHARGE;
/// Speed of light, m/s (exact).
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.8541878128e-12;
/// hbar * c in eV m.
pub const HBAR_C_EV_M: f64 = HBAR_EV * C;
/// hbar * c in J m.
pub const HBAR_C_J_M: f64 = HBAR_J * C;
/// Riemann zeta(3).
pub const ZETA3: f64 = 1.202_056_903_159_594_2;

/// Imaginary Matsubara frequency `2 pi l kB T`, in eV.
pub fn matsubara_frequency(l: usize, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(domain(format!("temperature must be positive, got {temperature}")));
    }
    Ok(2.0 * PI * l as f64 * K_B_EV * temperature)
}

/// Normal-state Drude and BCS gap-law parameters of the plate material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperconductorParams {
    /// Plasma frequency, eV.
    pub omega_p: f64,
    /// Room-temperature relaxation frequency, eV.
    pub gamma0: f64,
    /// Residual resistance ratio.
    pub rrr: f64,
    /// Critical temperature, K.
    pub tc: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for SuperconductorParams {
    /// NbTiN values. `gamma0 = 0.465 eV` puts the film deep in the dirty
    /// limit (`hbar gamma / 2 Delta(0)` is about 108).
    fn default() -> Self {
        Self {
            omega_p: 5.33,
            gamma0: 0.465,
            rrr: 1.0,
            tc: 14.2,
            c1: 1.764,
            c2: 0.9963,
            c3: 0.7735,
        }
    }
}

impl SuperconductorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_p > 0.0 && self.gamma0 > 0.0 && self.rrr >= 1.0 && self.tc > 0.0) {
            return Err(domain(format!("invalid superconductor parameters: {self:?}")));
        }
        Ok(())
    }

    /// Low-temperature relaxation frequency `gamma0 / RRR`, eV.
    pub fn gamma(&self) -> f64 {
        self.gamma0 / self.rrr
    }

    pub fn with_omega_p(mut self, omega_p: f64) -> Self {
        self.omega_p = omega_p;
        self
    }

    pub fn from_config(cfg: &KvConfig, base: Self) -> Result<Self> {
        let p = Self {
            omega_p: cfg.get_or("Omega_eV", base.omega_p)?,
            gamma0: cfg.get_or("gamma0_eV", base.gamma0)?,
            rrr: cfg.get_or("RRR", base.rrr)?,
            tc: cfg.get_or("Tc_K", base.tc)?,
            c1: cfg.get_or("gap_c1", base.c1)?,
            c2: cfg.get_or("gap_c2", base.c2)?,
            c3: cfg.get_or("gap_c3", base.c3)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_config(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("Omega_eV", self.omega_p),
            ("gamma0_eV", self.gamma0),
            ("RRR", self.rrr),
            ("Tc_K", self.tc),
            ("gap_c1", self.c1),
            ("gap_c2", self.c2),
            ("gap_c3", self.c3),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        s
    }
}

/// Geometry, mechanics and FEM-derived constants of one suspended membrane.
#[derive(Debug, Clone, PartialEq)]
pub struct MembraneSpec {
    /// Side length, m.
    pub length: f64,
    /// Thickness, m.
    pub thickness: f64,
    /// Gap to the backgate, m.
    pub gap: f64,
    /// Tensile stress, Pa.
    pub stress: f64,
    /// Density, kg/m^3.
    pub density: f64,
    /// Young's modulus, Pa.
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// Deflection constant of a square membrane.
    pub c1: f64,
    /// Deflection correction from the hole pattern.
    pub c_hole: f64,
    /// `(f_holes / f_no_holes)^2`.
    pub y_ratio: f64,
    /// Force reduction from the missing hole area.
    pub area_ratio: f64,
    /// CTE linear coefficient, 1/K^2.
    pub cte_a: f64,
    /// CTE cubic coefficient, 1/K^4.
    pub cte_b: f64,
    /// Effective spring constant, N/m. Metadata only.
    pub spring_constant: Option<f64>,
}

impl MembraneSpec {
    /// Membrane over the 190 nm cavity.
    pub fn small_gap() -> Self {
        Self {
            length: 709e-6,
            thickness: 155e-9,
            gap: 190e-9,
            stress: 677e6,
            density: 4992.0,
            youngs_modulus: 375e9,
            poisson_ratio: 0.2949,
            c1: 3.45,
            c_hole: 1.086,
            y_ratio: 0.923,
            area_ratio: 0.945,
            cte_a: 2.001e-10,
            cte_b: 9.159e-13,
            spring_constant: Some(1804.0),
        }
    }

    /// Membrane over the 1213 nm cavity.
    pub fn big_gap() -> Self {
        Self {
            gap: 1213e-9,
            stress: 683e6,
            density: 5332.0,
            cte_a: 4.289e-10,
            cte_b: 3.181e-13,
            spring_constant: Some(1821.0),
            ..Self::small_gap()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.length,
            self.thickness,
            self.gap,
            self.stress,
            self.density,
            self.youngs_modulus,
            self.c1,
            self.c_hole,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(domain("membrane lengths, stress, density and constants must be positive"));
        }
        if !(self.y_ratio > 0.0 && self.y_ratio <= 1.0) {
            return Err(domain(format!("Y_ratio must lie in (0, 1], got {}", self.y_ratio)));
        }
        if !(self.area_ratio > 0.0 && self.area_ratio <= 1.0) {
            return Err(domain(format!("area_ratio must lie in (0, 1], got {}", self.area_ratio)));
        }
        if !(self.poisson_ratio < 1.0) {
            return Err(domain("Poisson ratio must be below 1"));
        }
        Ok(())
    }

    /// Areal mass density `rho * h`, kg/m^2.
    pub fn areal_density(&self) -> f64 {
        self.density * self.thickness
    }

    pub fn from_config(cfg: &KvConfig, base: Self) -> Result<Self> {
        let spring_constant = match cfg.get("k0_N_per_m")? {
            Some(v) => Some(v),
            None => base.spring_constant,
        };
        let m = Self {
            length: cfg.get_or("L_m", base.length)?,
            thickness: cfg.get_or("h_m", base.thickness)?,
            gap: cfg.get_or("d_m", base.gap)?,
            stress: cfg.get_or("sigma_Pa", base.stress)?,
            density: cfg.get_or("rho_kg_per_m3", base.density)?,
            youngs_modulus: cfg.get_or("E_Pa", base.youngs_modulus)?,
            poisson_ratio: cfg.get_or("nu", base.poisson_ratio)?,
            c1: cfg.get_or("C1", base.c1)?,
            c_hole: cfg.get_or("C_hole", base.c_hole)?,
            y_ratio: cfg.get_or("Y_ratio", base.y_ratio)?,
            area_ratio: cfg.get_or("area_ratio", base.area_ratio)?,
            cte_a: cfg.get_or("cte_A_per_K2", base.cte_a)?,
            cte_b: cfg.get_or("cte_B_per_K4", base.cte_b)?,
            spring_constant,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn to_config(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("L_m", self.length),
            ("h_m", self.thickness),
            ("d_m", self.gap),
            ("sigma_Pa", self.stress),
            ("rho_kg_per_m3", self.density),
            ("E_Pa", self.youngs_modulus),
            ("nu", self.poisson_ratio),
            ("C1", self.c1),
            ("C_hole", self.c_hole),
            ("Y_ratio", self.y_ratio),
            ("area_ratio", self.area_ratio),
            ("cte_A_per_K2", self.cte_a),
            ("cte_B_per_K4", self.cte_b),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        if let Some(k0) = self.spring_constant {
            let _ = writeln!(s, "k0_N_per_m = {k0}");
        }
        s
    }
}

/// Which frequency-squared quantity the FEM conversion factors multiply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyBasis {
    /// Factors apply to `delta(omega^2)`, (rad/s)^2.
    AngularSquared,
    /// Factors apply to `delta(f^2)`, Hz^2.
    LinearSquared,
}

impl std::str::FromStr for FrequencyBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angular" | "angular-squared" | "rad2/s2" => Ok(Self::AngularSquared),
            "linear" | "linear-squared" | "hz2" => Ok(Self::LinearSquared),
            other => Err(domain(format!("unknown frequency basis '{other}'"))),
        }
    }
}

/// Linear FEM maps from a frequency-squared shift to force, pressure and
/// center deflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionFactors {
    /// N per unit of the basis.
    pub force: f64,
    /// Pa per unit of the basis.
    pub pressure: f64,
    /// m per unit of the basis.
    pub deflection: f64,
    pub basis: FrequencyBasis,
}

impl ConversionFactors {
    pub fn new(force: f64, pressure: f64, deflection: f64, basis: FrequencyBasis) -> Self {
        Self { force, pressure, deflection, basis }
    }

    /// Factors for the 190 nm membrane, per Hz^2 of `delta(f^2)`.
    pub fn small_gap_fem() -> Self {
        Self::new(7.83e-16, 1.55e-9, 6.28e-19, FrequencyBasis::LinearSquared)
    }

    /// Every key must be present; the basis has no default.
    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        let basis: FrequencyBasis = cfg.require_str("basis")?.parse()?;
        Ok(Self {
            force: cfg.require("force_per_unit_N")?,
            pressure: cfg.require("pressure_per_unit_Pa")?,
            deflection: cfg.require("deflection_per_unit_m")?,
            basis,
        })
    }
}

/// Flat `key = value` configuration with `#` comments.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config { line: line_no, message: format!("expected 'key = value', got '{line}'") });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Config { line: line_no, message: "empty key".into() });
            }
            entries.insert(key.to_string(), (v.trim().to_string(), line_no));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Result<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| Error::Config {
                line: *line,
                message: format!("'{key}' is not a number: '{v}'"),
            }),
        }
    }

    pub fn get_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .ok_or_else(|| Error::Config { line: 0, message: format!("missing required key '{key}'") })
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.get_str(key)
            .ok_or_else(|| Error::Config { line: 0, message: format!("missing required key '{key}'") })
    }
}
