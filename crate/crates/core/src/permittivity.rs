//! Dielectric functions at imaginary frequency: Drude, plasma, and the
//! Mattis-Bardeen (dirty-limit BCS) response of the superconducting state.
//!
//! All frequencies are energies in eV.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::physcore::{SuperconductorParams, K_B_EV};
use crate::quadrature::{geometric_breaks, integrate_breaks, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DielectricModel {
    Drude(SuperconductorParams),
    Plasma(SuperconductorParams),
    Bcs(SuperconductorParams),
}

impl DielectricModel {
    pub fn params(&self) -> &SuperconductorParams {
        match self {
            Self::Drude(p) | Self::Plasma(p) | Self::Bcs(p) => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Drude(_) => "drude",
            Self::Plasma(_) => "plasma",
            Self::Bcs(_) => "bcs",
        }
    }

    pub fn from_name(name: &str, p: SuperconductorParams) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "drude" => Ok(Self::Drude(p)),
            "plasma" => Ok(Self::Plasma(p)),
            "bcs" => Ok(Self::Bcs(p)),
            other => Err(domain(format!("unknown dielectric model '{other}'"))),
        }
    }
}

/// Interpolated BCS gap in eV; zero at and above `Tc`.
pub fn bcs_gap(temperature: f64, p: &SuperconductorParams) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(domain(format!("temperature must be non-negative, got {temperature}")));
    }
    if temperature >= p.tc {
        return Ok(0.0);
    }
    let t = temperature / p.tc;
    Ok(p.c1 * K_B_EV * p.tc * (1.0 - t).sqrt() * (p.c2 + p.c3 * t))
}

/// `int_0^inf dx / (sqrt(x^2 + 1/(4 eta^2)) (4 x^2 + 1))`, closed form.
fn zero_temperature_kernel(eta: f64) -> f64 {
    let d = eta - 1.0;
    if d.abs() < 1e-6 {
        // f(eta) = 1 + 2 (eta - 1) / 3 + O((eta - 1)^2)
        1.0 + 2.0 * d / 3.0
    } else if eta < 1.0 {
        eta * eta.acos() / (1.0 - eta * eta).sqrt()
    } else {
        eta * eta.acosh() / (eta * eta - 1.0).sqrt()
    }
}

/// Normalized superfluid weight of the dirty-limit BCS state, in (0, 1).
///
/// This is the `xi -> 0` limit of [`bcs_g`]. The zero-temperature part of
/// the x-integral is evaluated in closed form; only the thermal correction
/// `1 - tanh` is integrated numerically.
pub fn superfluid_weight(temperature: f64, p: &SuperconductorParams) -> Result<f64> {
    if !(temperature > 0.0 && temperature < p.tc) {
        return Err(domain(format!(
            "superfluid weight needs 0 < T < Tc, got T = {temperature} (Tc = {})",
            p.tc
        )));
    }
    let gap = bcs_gap(temperature, p)?;
    let hg = p.gamma();
    let eta = hg / (2.0 * gap);
    let t_red = K_B_EV * temperature / hg;
    let half_gap = 1.0 / (2.0 * eta);
    let energy = |x: f64| (x * x + half_gap * half_gap).sqrt();
    // 1 - tanh(E / 2t) = 2 / (exp(E / t) + 1)
    let thermal = |x: f64| {
        let e = energy(x);
        2.0 / ((e / t_red).exp() + 1.0) / (e * (4.0 * x * x + 1.0))
    };
    let x_max = 60.0 * t_red + 10.0;
    let mut breaks = geometric_breaks(1e-3 * half_gap.min(t_red).min(0.5), x_max, 4.0);
    breaks.push(x_max);
    breaks.dedup();
    let correction = integrate_breaks(thermal, &breaks, QuadOptions::rel(1e-13)).value;
    let first = PI / (2.0 * eta) * (gap / (2.0 * K_B_EV * temperature)).tanh();
    Ok(first - (zero_temperature_kernel(eta) - correction) / (eta * eta))
}

/// Real part of the Mattis-Bardeen kernel `G_+(i xi, eps)`; `xi`, `gap`,
/// `hg` in eV.
pub(crate) fn kernel_re(xi: f64, eps: f64, gap: f64, hg: f64) -> f64 {
    let i = Complex64::i();
    let e = (eps * eps + gap * gap).sqrt();
    // (E + i xi)^2 - gap^2 written without the E^2 - gap^2 cancellation.
    let q2 = Complex64::new(eps * eps - xi * xi, 2.0 * e * xi);
    let mut q = q2.sqrt();
    if q.re < 0.0 {
        q = -q;
    }
    let a = Complex64::new(e * e + gap * gap, e * xi);
    let num = eps * eps * q + (q + i * hg) * a;
    // eps^2 - (Q + i hg)^2 = xi^2 + hg^2 - 2 i (E xi + hg Q)
    let den = q * (Complex64::new(xi * xi + hg * hg, 0.0) - 2.0 * i * (e * xi + hg * q));
    (num / den).re
}

/// Dimensionless BCS spectral function `g(xi; T)`; zero for `T >= Tc`.
///
/// The energy integral runs over `[0, eps_max]` (even integrand, doubled),
/// with `eps_max = max(200 gap, 200 xi, 200 hg, 50 kB T)`; the remaining
/// `1/eps^3` tail is added analytically.
pub fn bcs_g(xi: f64, temperature: f64, p: &SuperconductorParams) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(domain(format!("bcs_g needs xi > 0, got {xi}")));
    }
    if !(temperature >= 0.0) {
        return Err(domain(format!("temperature must be non-negative, got {temperature}")));
    }
    if temperature >= p.tc {
        return Ok(0.0);
    }
    let gap = bcs_gap(temperature, p)?;
    let hg = p.gamma();
    let kt = K_B_EV * temperature;
    let integrand = |eps: f64| {
        let e = (eps * eps + gap * gap).sqrt();
        let th = if kt > 0.0 { (e / (2.0 * kt)).tanh() } else { 1.0 };
        2.0 * th / e * kernel_re(xi, eps, gap, hg)
    };
    let eps_max = (200.0 * gap).max(200.0 * xi).max(200.0 * hg).max(50.0 * kt);
    let finest = gap.min(xi).min(hg).min((gap * xi).sqrt());
    let breaks = geometric_breaks(1e-3 * finest, eps_max, 4.0);
    let body = integrate_breaks(integrand, &breaks, QuadOptions { rel_tol: 1e-10, abs_tol: 1e-14, max_intervals: 4000 });
    let tail = integrand(eps_max) * eps_max / 2.0;
    Ok(body.value + tail)
}

/// `epsilon(i xi)` for the given model, `xi > 0` in eV.
pub fn permittivity_iw(model: &DielectricModel, xi: f64, temperature: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(domain(format!("permittivity needs xi > 0, got {xi}")));
    }
    let p = model.params();
    let om2 = p.omega_p * p.omega_p;
    let eps = match model {
        DielectricModel::Plasma(_) => 1.0 + om2 / (xi * xi),
        DielectricModel::Drude(_) => 1.0 + om2 / (xi * (xi + p.gamma())),
        DielectricModel::Bcs(_) => {
            let g = bcs_g(xi, temperature, p)?;
            1.0 + om2 / xi * (1.0 / (xi + p.gamma()) + g / xi)
        }
    };
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    fn p() -> SuperconductorParams {
        SuperconductorParams::default()
    }

    #[test]
    fn gap_values() {
        let p = p();
        assert_eq!(bcs_gap(p.tc, &p).unwrap(), 0.0);
        assert_eq!(bcs_gap(2.0 * p.tc, &p).unwrap(), 0.0);
        let g0 = bcs_gap(0.0, &p).unwrap();
        assert!((g0 - 2.1506e-3).abs() < 1e-7, "{g0}");
        let g99 = bcs_gap(0.99 * p.tc, &p).unwrap();
        assert!((g99 - 3.803e-4).abs() < 5e-7, "{g99}");
        assert!(bcs_gap(-1.0, &p).is_err());
    }

    #[test]
    fn gap_monotone_above_turning_point() {
        // d/dt [sqrt(1 - t) (c2 + c3 t)] vanishes at t* = (c3 - c2/2) / (3 c3 / 2).
        let p = p();
        let t_star = (p.c3 - p.c2 / 2.0) / (1.5 * p.c3);
        assert!((t_star - 0.2373).abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let t = t_star + (1.0 - t_star) * i as f64 / 1000.0;
            let g = bcs_gap(p.tc * t, &p).unwrap();
            assert!(g < prev || (g == 0.0 && i == 1000));
            prev = g;
        }
        // Below t* the interpolation rises slightly with T.
        let g0 = bcs_gap(0.0, &p).unwrap();
        let gmax = bcs_gap(p.tc * t_star, &p).unwrap();
        assert!(gmax > g0 && (gmax - g0) / g0 < 0.05);
    }

    #[test]
    fn kernel_closed_form_matches_quadrature() {
        for eta in [0.05, 0.5, 0.9999999, 1.0, 1.0000001, 2.0, 30.0] {
            let a = 1.0 / (2.0 * eta);
            let q = integrate(|x: f64| 1.0 / ((x * x + a * a).sqrt() * (4.0 * x * x + 1.0)), 0.0, 1e7, QuadOptions::rel(1e-13));
            let tail = 1.0 / (8.0 * 1e14);
            let k = zero_temperature_kernel(eta);
            assert!((k - (q.value + tail)).abs() / k < 1e-9, "eta {eta}: {k} vs {}", q.value);
        }
    }

    #[test]
    fn superfluid_weight_bounds() {
        let p = p();
        for frac in [0.05, 0.2, 0.5, 0.8, 0.95, 0.99, 0.999] {
            let w = superfluid_weight(frac * p.tc, &p).unwrap();
            assert!(w > 0.0 && w < 1.0, "T/Tc = {frac}: {w}");
        }
        let near = superfluid_weight(p.tc * (1.0 - 1e-6), &p).unwrap();
        assert!(near < 1e-4);
        assert!(superfluid_weight(p.tc, &p).is_err());
        assert!(superfluid_weight(0.0, &p).is_err());
    }

    #[test]
    fn g_gated_above_tc() {
        let p = p();
        assert_eq!(bcs_g(1e-3, 1.01 * p.tc, &p).unwrap(), 0.0);
        assert!(bcs_g(0.0, 5.0, &p).is_err());
    }

    #[test]
    fn closed_forms() {
        let p = p();
        let plasma = DielectricModel::Plasma(p);
        assert!((permittivity_iw(&plasma, p.omega_p, 5.0).unwrap() - 2.0).abs() < 1e-15);
        let clean = SuperconductorParams { gamma0: 0.465e-3, ..p };
        let e = permittivity_iw(&DielectricModel::Drude(clean), clean.gamma(), 5.0).unwrap();
        assert!((e - 6.569e7).abs() / 6.569e7 < 1e-4, "{e}");
        let drude = DielectricModel::Drude(p);
        let e = permittivity_iw(&drude, p.gamma(), 5.0).unwrap();
        assert!((e - 66.7).abs() < 0.05, "{e}");
        let bcs = DielectricModel::Bcs(p);
        for xi in [1e-4, 1e-2, 1.0] {
            let t = 1.5 * p.tc;
            assert_eq!(permittivity_iw(&bcs, xi, t).unwrap(), permittivity_iw(&drude, xi, t).unwrap());
        }
        assert!(permittivity_iw(&drude, 0.0, 5.0).is_err());
    }
}
