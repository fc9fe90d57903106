//! Tensioned-membrane mechanics: resonance, frequency-shift conversions,
//! electrostatics, contact-potential fitting, deflection, thermal expansion
//! and the frequency-noise floor.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::physcore::{MembraneSpec, EPS0};
use crate::quadrature::{integrate, QuadOptions};

/// One point of a resonance-frequency temperature sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    /// Temperature, K.
    pub temperature: f64,
    /// Resonance frequency, Hz.
    pub frequency: f64,
    /// Frequency uncertainty, Hz.
    pub sigma_f: Option<f64>,
    pub quality_factor: Option<f64>,
}

impl SweepRecord {
    pub fn new(temperature: f64, frequency: f64) -> Self {
        Self { temperature, frequency, sigma_f: None, quality_factor: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(domain(format!("temperature must be positive, got {}", self.temperature)));
        }
        if !(self.frequency > 0.0) {
            return Err(domain(format!("frequency must be positive, got {}", self.frequency)));
        }
        if let Some(s) = self.sigma_f {
            if !(s >= 0.0) {
                return Err(domain(format!("sigma_f must be non-negative, got {s}")));
            }
        }
        Ok(())
    }
}

/// Reads `T_K,f_Hz[,sigma_f_Hz][,Q]` records. Line numbers in errors count
/// the header as line 1.
pub fn read_sweep_csv<R: Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let header_err = |message: String| Error::Input { line: 1, message };
    let headers = rdr.headers().map_err(|e| header_err(e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let expected = ["T_K", "f_Hz", "sigma_f_Hz", "Q"];
    if names.len() < 2 || names.len() > 4 || names.iter().zip(expected).any(|(a, b)| *a != b) {
        return Err(header_err(format!("expected header T_K,f_Hz[,sigma_f_Hz][,Q], got '{}'", names.join(","))));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Input {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<Option<f64>> {
            match row.get(i) {
                None | Some("") => Ok(None),
                Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Input {
                    line,
                    message: format!("column {} ('{}'): cannot parse '{s}' as a number", i + 1, expected[i]),
                }),
            }
        };
        let missing = |i: usize| Error::Input { line, message: format!("missing {}", expected[i]) };
        let rec = SweepRecord {
            temperature: field(0)?.ok_or_else(|| missing(0))?,
            frequency: field(1)?.ok_or_else(|| missing(1))?,
            sigma_f: field(2)?,
            quality_factor: field(3)?,
        };
        rec.validate().map_err(|e| Error::Input { line, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn load_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    read_sweep_csv(std::fs::File::open(path)?)
}

/// Fundamental (1,1) frequency in Hz; the hole pattern scales `f^2` by `Y_ratio`.
pub fn fundamental_frequency(m: &MembraneSpec, with_holes: bool) -> f64 {
    let f = (m.stress / m.density).sqrt() / (2f64.sqrt() * m.length);
    if with_holes {
        f * m.y_ratio.sqrt()
    } else {
        f
    }
}

/// Stress (Pa) that gives the fundamental frequency `f` at the spec's geometry and density.
pub fn stress_from_frequency(f: f64, m: &MembraneSpec, with_holes: bool) -> f64 {
    let y = if with_holes { m.y_ratio } else { 1.0 };
    2.0 * m.length * m.length * m.density * f * f / y
}

/// `delta omega^2 = -P' / (rho h)`, (rad/s)^2.
pub fn dw2_from_gradient(gradient: f64, m: &MembraneSpec) -> f64 {
    -gradient / m.areal_density()
}

pub fn gradient_from_dw2(dw2: f64, m: &MembraneSpec) -> f64 {
    -dw2 * m.areal_density()
}

/// Linear frequency shift (Hz) produced by a jump in the pressure gradient.
pub fn predicted_frequency_jump(gradient_jump: f64, m: &MembraneSpec, f0: f64) -> Result<f64> {
    if !(f0 > 0.0) {
        return Err(domain(format!("f0 must be positive, got {f0}")));
    }
    Ok(dw2_from_gradient(gradient_jump, m) / (8.0 * PI * PI * f0))
}

/// Electrostatic softening `-(eps0 / rho h) (V - V0)^2 / d^3`, (rad/s)^2.
pub fn electrostatic_dw2(v_bg: f64, v0: f64, m: &MembraneSpec) -> f64 {
    let dv = v_bg - v0;
    -EPS0 * dv * dv / (m.areal_density() * m.gap.powi(3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcpdFit {
    /// Contact-potential compensation voltage, V.
    pub v0: f64,
    /// Standard error of `v0` from the linearized covariance, V.
    pub v0_sigma: f64,
    /// Apex (maximum) frequency, Hz.
    pub f_apex: f64,
    /// Stress inferred from the apex frequency, Pa.
    pub stress: f64,
    /// Density inferred from the curvature, kg/m^3.
    pub density: f64,
    /// `(a, b, c)` of `f^2 = a + b V + c V^2`.
    pub coefficients: [f64; 3],
}

/// Fits `f^2 = a + b V + c V^2` to `(V_bg, f)` points and converts the apex and
/// curvature into `(V0, stress, density)`. Uses `length`, `thickness`, `gap`
/// and `y_ratio` of `m`; its stress and density are ignored.
pub fn lcpd_fit(points: &[(f64, f64)], m: &MembraneSpec) -> Result<LcpdFit> {
    let fail = |reason: String, last: Vec<f64>| Error::FitFailure { reason, last };
    if points.len() < 5 {
        return Err(fail(format!("need at least 5 points, got {}", points.len()), vec![]));
    }
    if points.iter().any(|(v, f)| !v.is_finite() || !(*f > 0.0)) {
        return Err(fail("voltages must be finite and frequencies positive".into(), vec![]));
    }
    let n = points.len();
    let center = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let scale = points.iter().map(|p| (p.0 - center).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(fail("all voltages are identical".into(), vec![]));
    }
    let f2_scale = points.iter().map(|p| p.1 * p.1).fold(0.0, f64::max);
    let design = DMatrix::from_fn(n, 3, |i, j| ((points[i].0 - center) / scale).powi(j as i32));
    let rhs = DVector::from_iterator(n, points.iter().map(|p| p.1 * p.1 / f2_scale));
    let svd = design.clone().svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).map_err(|e| fail(e.to_string(), vec![]))?;
    // Back to unscaled coefficients in u = V - center.
    let (a_u, b_u, c_u) = (sol[0] * f2_scale, sol[1] * f2_scale / scale, sol[2] * f2_scale / (scale * scale));
    let coefficients = [a_u - b_u * center + c_u * center * center, b_u - 2.0 * c_u * center, c_u];
    if !(c_u < 0.0) {
        return Err(fail("fitted parabola in f^2 is not concave".into(), coefficients.to_vec()));
    }
    let u0 = -b_u / (2.0 * c_u);
    let v0 = center + u0;
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(v0 > lo && v0 < hi) {
        return Err(fail(format!("apex {v0} V lies outside the sampled range [{lo}, {hi}]"), coefficients.to_vec()));
    }
    let f2_apex = a_u - b_u * b_u / (4.0 * c_u);
    if !(f2_apex > 0.0) {
        return Err(fail("apex frequency squared is not positive".into(), coefficients.to_vec()));
    }
    let f_apex = f2_apex.sqrt();
    // f^2 curvature = -eps0 / (4 pi^2 rho h d^3)
    let density = -EPS0 / (4.0 * PI * PI * m.thickness * m.gap.powi(3) * c_u);
    let stress = 2.0 * m.length * m.length * density * f2_apex / m.y_ratio;

    // Linearized covariance of (b_u, c_u) from the scaled problem.
    let resid = &rhs - &design * &sol;
    let dof = (n - 3).max(1) as f64;
    let s2 = resid.norm_squared() / dof;
    let v0_sigma = match (design.transpose() * &design).try_inverse() {
        Some(cov) => {
            let cov = cov * s2;
            // u0 = -b / 2c in scaled units, then multiplied by `scale`.
            let (b, c) = (sol[1], sol[2]);
            let db = -1.0 / (2.0 * c);
            let dc = b / (2.0 * c * c);
            let var = db * db * cov[(1, 1)] + dc * dc * cov[(2, 2)] + 2.0 * db * dc * cov[(1, 2)];
            var.max(0.0).sqrt() * scale
        }
        None => f64::NAN,
    };
    Ok(LcpdFit { v0, v0_sigma, f_apex, stress, density, coefficients })
}

/// Centre deflection (m) under a power-law pressure `P(d) = coefficient / d^exponent`.
pub fn static_deflection(coefficient: f64, exponent: f64, m: &MembraneSpec) -> f64 {
    let pressure = coefficient / m.gap.powf(exponent);
    deflection_from_pressure(pressure, m)
}

/// `z0 = C_hole P L^2 / (4 C1 h sigma)`.
pub fn deflection_from_pressure(pressure: f64, m: &MembraneSpec) -> f64 {
    m.c_hole * pressure * m.length * m.length / (4.0 * m.c1 * m.thickness * m.stress)
}

/// Quasi-static patch-potential pressure bound `0.9 eps0 V_rms^2 l^2 / d^4`, Pa.
pub fn patch_pressure(v_rms: f64, ell: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(domain(format!("separation must be positive, got {d}")));
    }
    Ok(0.9 * EPS0 * v_rms * v_rms * ell * ell / d.powi(4))
}

/// Thermal expansion coefficient `A T + B T^3`, 1/K.
pub fn cte_alpha(temperature: f64, a: f64, b: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(domain(format!("temperature must be non-negative, got {temperature}")));
    }
    Ok(a * temperature + b * temperature.powi(3))
}

/// Thermal stress (Pa) accumulated from `t1` to `t2`:
/// `E / (1 - nu) int (alpha_film - alpha_sub) dT`. `substrate_poly` holds the
/// substrate CTE coefficients `c_k` of `sum c_k T^k`; empty means zero.
pub fn thermal_stress(t1: f64, t2: f64, m: &MembraneSpec, substrate_poly: &[f64]) -> Result<f64> {
    if !(t1 >= 0.0 && t2 >= 0.0) {
        return Err(domain("temperatures must be non-negative"));
    }
    let alpha_sub = |t: f64| substrate_poly.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let integrand = |t: f64| m.cte_a * t + m.cte_b * t.powi(3) - alpha_sub(t);
    let integral = integrate(integrand, t1, t2, QuadOptions::rel(1e-13));
    Ok(m.youngs_modulus / (1.0 - m.poisson_ratio) * integral.value)
}

/// RMS frequency noise `(f0 / 2Q)(N/S) sqrt(1 / (2 pi tau))`, Hz.
pub fn frequency_noise(f0: f64, q: f64, noise_to_signal: f64, tau: f64) -> Result<f64> {
    if !(f0 > 0.0 && q > 0.0 && tau > 0.0 && noise_to_signal >= 0.0) {
        return Err(domain("frequency_noise needs f0, Q, tau > 0 and N/S >= 0"));
    }
    Ok(f0 / (2.0 * q) * noise_to_signal * (1.0 / (2.0 * PI * tau)).sqrt())
}

/// Noise-to-signal ratio that produces the RMS frequency noise `df`.
pub fn noise_to_signal_for(df: f64, f0: f64, q: f64, tau: f64) -> Result<f64> {
    let unit = frequency_noise(f0, q, 1.0, tau)?;
    if !(df >= 0.0) {
        return Err(domain("frequency noise must be non-negative"));
    }
    Ok(df / unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn frequencies() {
        let s = MembraneSpec::small_gap();
        assert!(rel(fundamental_frequency(&s, false), 367.3e3) < 2e-4);
        assert!(rel(fundamental_frequency(&s, true), 352.8e3) < 1e-3);
        let b = MembraneSpec::big_gap();
        assert!(rel(fundamental_frequency(&b, true), 343.008e3) < 1e-3);
        let f = fundamental_frequency(&s, true);
        assert!(rel(stress_from_frequency(f, &s, true), s.stress) < 1e-14);
    }

    #[test]
    fn gradient_conversions() {
        let s = MembraneSpec::small_gap();
        assert_eq!(dw2_from_gradient(0.0, &s), 0.0);
        assert!(rel(dw2_from_gradient(12.10e3, &s), -1.5638e7) < 1e-3);
        let x = 1234.5;
        assert!(rel(gradient_from_dw2(dw2_from_gradient(x, &s), &s), x) < 1e-12);
        let df = predicted_frequency_jump(6.0e3, &s, 352.8e3).unwrap();
        assert!((df.abs() - 0.28).abs() < 0.01, "{df}");
        assert!(rel(predicted_frequency_jump(12.0e3, &s, 352.8e3).unwrap(), 2.0 * df) < 1e-15);
        assert!(predicted_frequency_jump(1.0, &s, 0.0).is_err());
    }

    #[test]
    fn electrostatics() {
        let s = MembraneSpec::small_gap();
        assert_eq!(electrostatic_dw2(0.3, 0.3, &s), 0.0);
        assert!(rel(electrostatic_dw2(0.1, 0.0, &s), -1.668e10) < 1e-3);
        assert_eq!(electrostatic_dw2(0.25 + 0.07, 0.25, &s), electrostatic_dw2(0.25 - 0.07, 0.25, &s));
    }

    #[test]
    fn lcpd_round_trip() {
        let truth = MembraneSpec::small_gap();
        let v0 = 0.2572;
        let f0 = fundamental_frequency(&truth, true);
        let pts: Vec<(f64, f64)> = (0..41)
            .map(|i| {
                let v = v0 - 1.0 + 2.0 * i as f64 / 40.0;
                let f2 = f0 * f0 + electrostatic_dw2(v, v0, &truth) / (4.0 * PI * PI);
                (v, f2.sqrt())
            })
            .collect();
        let fit = lcpd_fit(&pts, &truth).unwrap();
        assert!((fit.v0 - v0).abs() < 1e-9);
        assert!(rel(fit.stress, truth.stress) < 1e-6);
        assert!(rel(fit.density, truth.density) < 1e-6);
        assert!(rel(fit.f_apex, f0) < 1e-12);
    }

    #[test]
    fn lcpd_failures() {
        let s = MembraneSpec::small_gap();
        assert!(matches!(lcpd_fit(&[(0.0, 1.0); 3], &s), Err(Error::FitFailure { .. })));
        let convex: Vec<(f64, f64)> = (0..9).map(|i| (i as f64 - 4.0, 1.0 + (i as f64 - 4.0).powi(2))).collect();
        assert!(matches!(lcpd_fit(&convex, &s), Err(Error::FitFailure { .. })));
    }

    #[test]
    fn deflection_values() {
        let s = MembraneSpec::small_gap();
        let z = static_deflection(-1.081e-24, 3.507, &s);
        assert!(rel(z, -152e-12) < 0.02, "{z}");
        let b = MembraneSpec::big_gap();
        let z = static_deflection(-1.013e-26, 3.829, &b);
        assert!(rel(z, -0.17e-12) < 0.02, "{z}");
        assert_eq!(deflection_from_pressure(0.0, &s), 0.0);
    }

    #[test]
    fn patch_values() {
        let p = patch_pressure(10e-3, 30e-9, 190e-9).unwrap();
        assert!(rel(p, 5.5e-4) < 0.01, "{p}");
        assert_eq!(patch_pressure(0.0, 30e-9, 190e-9).unwrap(), 0.0);
        assert!(rel(patch_pressure(10e-3, 30e-9, 380e-9).unwrap() * 16.0, p) < 1e-15);
        assert!(patch_pressure(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn cte_values() {
        let s = MembraneSpec::small_gap();
        let b = MembraneSpec::big_gap();
        let a_s = cte_alpha(14.2, s.cte_a, s.cte_b).unwrap();
        let a_b = cte_alpha(14.2, b.cte_a, b.cte_b).unwrap();
        assert_eq!(format!("{a_s:.2e}"), "5.46e-9");
        assert_eq!(format!("{a_b:.2e}"), "7.00e-9");
        assert_eq!(cte_alpha(0.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn thermal_stress_closed_form() {
        let s = MembraneSpec::small_gap();
        let exact = |t: f64| s.cte_a * t * t / 2.0 + s.cte_b * t.powi(4) / 4.0;
        let sig = thermal_stress(4.0, 14.2, &s, &[]).unwrap();
        let want = s.youngs_modulus / (1.0 - s.poisson_ratio) * (exact(14.2) - exact(4.0));
        assert!(rel(sig, want) < 1e-12);
        assert_eq!(thermal_stress(14.2, 4.0, &s, &[]).unwrap(), -sig);
        let same = thermal_stress(4.0, 14.2, &s, &[0.0, s.cte_a, 0.0, s.cte_b]).unwrap();
        assert!(same.abs() < 1e-9 * want.abs());
    }

    #[test]
    fn noise_floor() {
        assert_eq!(frequency_noise(352.8e3, 7.2e5, 0.0, 0.2).unwrap(), 0.0);
        let a = frequency_noise(352.8e3, 7.2e5, 0.02, 0.2).unwrap();
        let b = frequency_noise(352.8e3, 7.2e6, 0.02, 0.2).unwrap();
        assert!(rel(a, 10.0 * b) < 1e-15);
        let ns = noise_to_signal_for(4.7e-3, 352.8e3, 7.2e5, 0.2).unwrap();
        assert!((ns - 0.021497).abs() < 1e-5, "{ns}");
    }

    #[test]
    fn csv_loading() {
        let text = "T_K,f_Hz,sigma_f_Hz\n14.0,352800.1,0.005\n# comment\n14.1,352800.2,\n";
        let recs = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].sigma_f, None);
        let bad = "T_K,f_Hz\n14.0,352800\n14.1,abc\n";
        match read_sweep_csv(bad.as_bytes()) {
            Err(Error::Input { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let neg = "T_K,f_Hz\n-1,352800\n";
        assert!(matches!(read_sweep_csv(neg.as_bytes()), Err(Error::Input { line: 2, .. })));
        assert!(matches!(read_sweep_csv("T,f\n1,2\n".as_bytes()), Err(Error::Input { line: 1, .. })));
    }
}
