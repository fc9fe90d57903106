//! Data reduction: thermal-baseline calibration, small/big-gap differential
//! subtraction, FEM conversion, Dynes tunnelling spectroscopy and synthetic
//! sweep generation.

use std::f64::consts::PI;
use std::io::{Read, Write};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DVector, Dyn, Vector3, U3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, Error, Result};
use crate::membrane::{gradient_from_dw2, SweepRecord};
use crate::physcore::{ConversionFactors, FrequencyBasis, MembraneSpec, K_B_EV};
use crate::quadrature::{integrate_breaks, QuadOptions};

/// One calibrated residual `delta omega^2` at a temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub temperature: f64,
    /// (rad/s)^2.
    pub dw2: f64,
    /// (rad/s)^2; zero when the record carried no frequency uncertainty.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedResiduals {
    /// Sorted by temperature.
    pub records: Vec<Residual>,
    /// (rad/s)^2 / K.
    pub fit_slope: f64,
    /// (rad/s)^2.
    pub fit_intercept: f64,
    pub fit_window: (f64, f64),
}

/// Fits `omega^2 = a + b T` over the records inside `window` and returns the
/// residuals of every record against that line.
pub fn calibrate_thermal(records: &[SweepRecord], window: (f64, f64), tc: f64) -> Result<CalibratedResiduals> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(domain(format!("fit window ({lo}, {hi}) is empty")));
    }
    if hi >= tc {
        return Err(domain(format!("fit window must lie below Tc = {tc} K, got upper edge {hi} K")));
    }
    let omega2 = |r: &SweepRecord| (2.0 * PI * r.frequency).powi(2);
    let inside: Vec<&SweepRecord> = records.iter().filter(|r| r.temperature >= lo && r.temperature <= hi).collect();
    if inside.len() < 3 {
        return Err(domain(format!("need at least 3 records in the fit window, got {}", inside.len())));
    }
    let n = inside.len() as f64;
    let t_mean = inside.iter().map(|r| r.temperature).sum::<f64>() / n;
    let w_mean = inside.iter().map(|r| omega2(r)).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in &inside {
        let dt = r.temperature - t_mean;
        sxy += dt * (omega2(r) - w_mean);
        sxx += dt * dt;
    }
    if sxx == 0.0 {
        return Err(domain("fit window records share a single temperature"));
    }
    let slope = sxy / sxx;
    let intercept = w_mean - slope * t_mean;
    let mut out: Vec<Residual> = records
        .iter()
        .map(|r| Residual {
            temperature: r.temperature,
            dw2: omega2(r) - (intercept + slope * r.temperature),
            sigma: r.sigma_f.map_or(0.0, |s| 8.0 * PI * PI * r.frequency * s),
        })
        .collect();
    out.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    Ok(CalibratedResiduals { records: out, fit_slope: slope, fit_intercept: intercept, fit_window: window })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorRule {
    /// `sigma_small + sigma_lo + sigma_hi`.
    #[default]
    Additive,
    /// Root-sum-square with the interpolation weights applied.
    Quadrature,
}

/// `dw2_small(T) - dw2_big(T)` at each small-gap temperature, with the big-gap
/// residual linearly interpolated between its bracketing points. Small-gap
/// points outside the big-gap temperature range are dropped.
pub fn differential_subtract(small: &CalibratedResiduals, big: &CalibratedResiduals, rule: ErrorRule) -> Result<Vec<Residual>> {
    let b = &big.records;
    if b.is_empty() {
        return Err(domain("big-gap residuals are empty"));
    }
    let (b_lo, b_hi) = (b[0].temperature, b[b.len() - 1].temperature);
    let mut out = Vec::new();
    for s in &small.records {
        let t = s.temperature;
        if t < b_lo || t > b_hi {
            continue;
        }
        let j = b.partition_point(|r| r.temperature <= t);
        let (value, sigma) = if j > 0 && b[j - 1].temperature == t {
            (b[j - 1].dw2, b[j - 1].sigma)
        } else {
            let (l, h) = (&b[j - 1], &b[j]);
            let w = (t - l.temperature) / (h.temperature - l.temperature);
            let value = l.dw2 + w * (h.dw2 - l.dw2);
            let sigma = match rule {
                ErrorRule::Additive => l.sigma + h.sigma,
                ErrorRule::Quadrature => (((1.0 - w) * l.sigma).powi(2) + (w * h.sigma).powi(2)).sqrt(),
            };
            (value, sigma)
        };
        let sigma = match rule {
            ErrorRule::Additive => s.sigma + sigma,
            ErrorRule::Quadrature => (s.sigma * s.sigma + sigma * sigma).sqrt(),
        };
        out.push(Residual { temperature: t, dw2: s.dw2 - value, sigma });
    }
    if out.is_empty() {
        return Err(domain(format!(
            "small-gap temperatures do not overlap the big-gap range [{b_lo}, {b_hi}] K"
        )));
    }
    Ok(out)
}

/// Concatenates several sweeps and sorts the result by temperature.
pub fn merge_records(datasets: &[Vec<SweepRecord>]) -> Vec<SweepRecord> {
    let mut all: Vec<SweepRecord> = datasets.iter().flatten().copied().collect();
    all.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    all
}

/// A shift of `omega^2`, (rad/s)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularShift(pub f64);

/// A shift of `f^2`, Hz^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearShift(pub f64);

impl From<AngularShift> for LinearShift {
    fn from(s: AngularShift) -> Self {
        LinearShift(s.0 / (4.0 * PI * PI))
    }
}

impl From<LinearShift> for AngularShift {
    fn from(s: LinearShift) -> Self {
        AngularShift(s.0 * 4.0 * PI * PI)
    }
}

/// A frequency-squared shift that can be expressed in either basis.
pub trait SquaredShift: Copy {
    fn in_basis(self, basis: FrequencyBasis) -> f64;
}

impl SquaredShift for AngularShift {
    fn in_basis(self, basis: FrequencyBasis) -> f64 {
        match basis {
            FrequencyBasis::AngularSquared => self.0,
            FrequencyBasis::LinearSquared => LinearShift::from(self).0,
        }
    }
}

impl SquaredShift for LinearShift {
    fn in_basis(self, basis: FrequencyBasis) -> f64 {
        match basis {
            FrequencyBasis::AngularSquared => AngularShift::from(self).0,
            FrequencyBasis::LinearSquared => self.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemConversion {
    /// N.
    pub force: f64,
    /// Pa.
    pub pressure: f64,
    /// m.
    pub deflection: f64,
}

pub fn convert_fem<S: SquaredShift>(shift: S, factors: &ConversionFactors) -> FemConversion {
    let x = shift.in_basis(factors.basis);
    FemConversion { force: x * factors.force, pressure: x * factors.pressure, deflection: x * factors.deflection }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEstimate {
    /// `mean(above Tc) - mean(below Tc)`, (rad/s)^2.
    pub dw2: f64,
    /// Standard error of the difference of means, (rad/s)^2.
    pub sigma: f64,
    pub n_below: usize,
    pub n_above: usize,
}

/// Step of the residual across `tc`, averaging points within `half_width`
/// kelvin on each side.
pub fn estimate_jump(points: &[Residual], tc: f64, half_width: f64) -> Result<JumpEstimate> {
    let below: Vec<f64> = points.iter().filter(|p| p.temperature < tc && p.temperature >= tc - half_width).map(|p| p.dw2).collect();
    let above: Vec<f64> = points.iter().filter(|p| p.temperature > tc && p.temperature <= tc + half_width).map(|p| p.dw2).collect();
    if below.is_empty() || above.is_empty() {
        return Err(domain(format!("need residuals on both sides of Tc within {half_width} K")));
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        (m, var / n)
    };
    let (mb, vb) = stats(&below);
    let (ma, va) = stats(&above);
    Ok(JumpEstimate { dw2: ma - mb, sigma: (va + vb).sqrt(), n_below: below.len(), n_above: above.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub tc: f64,
    pub fit_window: (f64, f64),
    /// Half-width of the averaging windows around `tc`, K.
    pub jump_half_width: f64,
    pub rule: ErrorRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub points: Vec<Residual>,
    pub jump: JumpEstimate,
    /// Pressure-gradient jump `P'(above) - P'(below)`, Pa/m.
    pub gradient_jump: f64,
    pub gradient_sigma: f64,
}

/// Calibrate both membranes, subtract, and convert the step at `Tc` into a
/// pressure-gradient jump using the small-gap areal density.
pub fn run_pipeline(small: &[SweepRecord], big: &[SweepRecord], cfg: &PipelineConfig, m: &MembraneSpec) -> Result<PipelineResult> {
    let s = calibrate_thermal(small, cfg.fit_window, cfg.tc)?;
    let b = calibrate_thermal(big, cfg.fit_window, cfg.tc)?;
    let points = differential_subtract(&s, &b, cfg.rule)?;
    let jump = estimate_jump(&points, cfg.tc, cfg.jump_half_width)?;
    Ok(PipelineResult {
        gradient_jump: gradient_from_dw2(jump.dw2, m),
        gradient_sigma: gradient_from_dw2(jump.sigma, m).abs(),
        points,
        jump,
    })
}

/// Ground truth for [`generate_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTruth {
    /// (rad/s)^2 / K.
    pub slope: f64,
    /// (rad/s)^2.
    pub intercept: f64,
    /// Step added to `omega^2` for `T > tc`, (rad/s)^2.
    pub jump: f64,
    pub tc: f64,
    /// Gaussian frequency noise per point, Hz.
    pub sigma_f: f64,
    /// Ascending temperatures, K.
    pub grid: Vec<f64>,
}

pub fn generate_sweep(truth: &SweepTruth, seed: u64) -> Result<Vec<SweepRecord>> {
    if truth.grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("temperature grid must be strictly ascending"));
    }
    if !(truth.sigma_f >= 0.0) {
        return Err(domain("noise must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, truth.sigma_f).map_err(|e| domain(e.to_string()))?;
    truth
        .grid
        .iter()
        .map(|&t| {
            let step = if t > truth.tc { truth.jump } else { 0.0 };
            let w2 = truth.intercept + truth.slope * t + step;
            if !(w2 > 0.0) {
                return Err(domain(format!("omega^2 is not positive at T = {t} K")));
            }
            let noise = if truth.sigma_f > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let rec = SweepRecord { sigma_f: Some(truth.sigma_f), ..SweepRecord::new(t, w2.sqrt() / (2.0 * PI) + noise) };
            rec.validate()?;
            Ok(rec)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynesParams {
    /// Gap, eV.
    pub delta: f64,
    /// Dynes broadening, eV.
    pub gamma: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Normal-state conductance scale.
    pub amplitude: f64,
}

impl DynesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.gamma > 0.0 && self.temperature >= 0.0 && self.amplitude.is_finite()) {
            return Err(domain(format!("invalid Dynes parameters {self:?}")));
        }
        Ok(())
    }
}

/// Dynes density of states `Re[1 / sqrt(1 - Delta^2 / (E - i gamma)^2)]`, even in `E`.
pub fn dynes_dos(energy: f64, delta: f64, gamma: f64) -> f64 {
    let w = Complex64::new(energy, -gamma);
    (1.0 / (1.0 - delta * delta / (w * w)).sqrt()).re
}

/// Tunnelling conductance `A int N(E) (-df/dE)(E - eV) dE`; `v` in volts.
pub fn dynes_conductance(v: f64, p: &DynesParams) -> Result<f64> {
    p.validate()?;
    let kt = K_B_EV * p.temperature;
    if kt == 0.0 {
        return Ok(p.amplitude * dynes_dos(v, p.delta, p.gamma));
    }
    let half = 40.0 * kt;
    let (lo, hi) = (v - half, v + half);
    let mut pts = vec![lo, hi, v];
    for s in [-1.0, 1.0] {
        for off in [0.0, -5.0, 5.0, -50.0, 50.0] {
            pts.push(s * (p.delta + off * p.gamma));
        }
    }
    for k in [-6.0, -2.0, 2.0, 6.0] {
        pts.push(v + k * kt);
    }
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let kernel = |x: f64| {
        let c = (x / (2.0 * kt)).cosh();
        1.0 / (4.0 * kt * c * c)
    };
    let r = integrate_breaks(|e| dynes_dos(e, p.delta, p.gamma) * kernel(e - v), &pts, QuadOptions::rel(1e-11));
    Ok(p.amplitude * r.value)
}

struct DynesProblem<'a> {
    v: &'a [f64],
    g: &'a [f64],
    temperature: f64,
    // ln(delta), ln(gamma), amplitude
    x: Vector3<f64>,
}

impl DynesProblem<'_> {
    fn params_of(&self, x: &Vector3<f64>) -> DynesParams {
        DynesParams { delta: x[0].exp(), gamma: x[1].exp(), temperature: self.temperature, amplitude: x[2] }
    }

    fn model(&self, x: &Vector3<f64>) -> Option<DVector<f64>> {
        let p = self.params_of(x);
        let vals: Option<Vec<f64>> = self.v.iter().map(|&v| dynes_conductance(v, &p).ok().filter(|g| g.is_finite())).collect();
        vals.map(DVector::from_vec)
    }
}

impl LeastSquaresProblem<f64, Dyn, U3> for DynesProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, x: &Vector3<f64>) {
        self.x = *x;
    }

    fn params(&self) -> Vector3<f64> {
        self.x
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let m = self.model(&self.x)?;
        Some(m - DVector::from_column_slice(self.g))
    }

    fn jacobian(&self) -> Option<nalgebra::OMatrix<f64, Dyn, U3>> {
        let mut jac = nalgebra::OMatrix::<f64, Dyn, U3>::zeros(self.v.len());
        for k in 0..3 {
            let h = if k == 2 { 1e-6 * self.x[2].abs().max(1e-12) } else { 1e-6 };
            let mut up = self.x;
            let mut down = self.x;
            up[k] += h;
            down[k] -= h;
            let col = (self.model(&up)? - self.model(&down)?) / (2.0 * h);
            jac.set_column(k, &col);
        }
        Some(jac)
    }
}

/// Deterministic starting point `(Delta0, gamma0, A0)` for [`dynes_fit`].
pub fn dynes_initial_guess(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let argmax = |neg: bool| {
        points
            .iter()
            .filter(|(v, _)| if neg { *v < 0.0 } else { *v > 0.0 })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|p| p.0)
    };
    let (Some(vn), Some(vp)) = (argmax(true), argmax(false)) else {
        return Err(Error::FitFailure { reason: "need points on both sides of zero bias".into(), last: vec![] });
    };
    let delta0 = 0.5 * (vp - vn);
    let mut by_bias: Vec<&(f64, f64)> = points.iter().collect();
    by_bias.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    let outer = (points.len() / 5).max(1);
    let a0 = by_bias[..outer].iter().map(|p| p.1).sum::<f64>() / outer as f64;
    Ok((delta0, 0.1 * delta0, a0))
}

/// Levenberg-Marquardt fit of `(Delta, gamma, A)` at fixed temperature to
/// `(V, G)` points.
pub fn dynes_fit(points: &[(f64, f64)], temperature: f64) -> Result<DynesParams> {
    let fail = |reason: String, last: Vec<f64>| Error::FitFailure { reason, last };
    if points.len() < 20 {
        return Err(fail(format!("need at least 20 points, got {}", points.len()), vec![]));
    }
    if !(temperature >= 0.0) {
        return Err(domain("temperature must be non-negative"));
    }
    let (d0, g0, a0) = dynes_initial_guess(points)?;
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(d0 > 0.0) || lo > -3.0 * d0 || hi < 3.0 * d0 {
        return Err(fail(format!("bias range [{lo}, {hi}] V does not span +-3 Delta0 (Delta0 = {d0})"), vec![d0, g0, a0]));
    }
    let v: Vec<f64> = points.iter().map(|p| p.0).collect();
    let g: Vec<f64> = points.iter().map(|p| p.1).collect();
    let problem = DynesProblem { v: &v, g: &g, temperature, x: Vector3::new(d0.ln(), g0.ln(), a0) };
    let (solved, report) = LevenbergMarquardt::new().with_tol(1e-12).with_patience(200).minimize(problem);
    let x = solved.x;
    let last = vec![x[0].exp(), x[1].exp(), x[2]];
    if !report.termination.was_successful() {
        return Err(fail(format!("{:?}", report.termination), last));
    }
    let p = solved.params_of(&x);
    p.validate().map_err(|e| fail(e.to_string(), last))?;
    Ok(p)
}

/// Reads `V_volt,G_arb` pairs.
pub fn read_dynes_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    read_pairs(reader, ["V_volt", "G_arb"])
}

pub(crate) fn read_pairs<R: Read>(reader: R, header: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let got = rdr.headers().map_err(|e| Error::Input { line: 1, message: e.to_string() })?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::Input { line: 1, message: format!("expected header {}", header.join(",")) });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Input { line: e.position().map_or(0, |p| p.line() as usize), message: e.to_string() })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            let s = row.get(i).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Input { line, message: format!("column {}: invalid number '{s}'", header[i]) })
        };
        out.push((num(0)?, num(1)?));
    }
    Ok(out)
}

/// Formats with 9 significant digits.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes a header and numeric rows with 9 significant digits.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_sig9(*x))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_truth(jump: f64, sigma_f: f64) -> SweepTruth {
        let f0 = 352.8e3;
        SweepTruth {
            slope: -2.0e7,
            intercept: (2.0 * PI * f0).powi(2) + 2.0e7 * 14.0,
            jump,
            tc: 14.2,
            sigma_f,
            grid: (0..=80).map(|i| 13.4 + 0.0125 * i as f64).collect(),
        }
    }

    #[test]
    fn calibrate_exact_line() {
        let recs = generate_sweep(&line_truth(0.0, 0.0), 1).unwrap();
        let cal = calibrate_thermal(&recs, (13.4, 14.1), 14.2).unwrap();
        let scale = (2.0 * PI * 352.8e3f64).powi(2);
        assert!(cal.records.iter().all(|r| r.dw2.abs() < 1e-9 * scale));
        assert!((cal.fit_slope + 2.0e7).abs() / 2.0e7 < 1e-6);
    }

    #[test]
    fn calibrate_step() {
        let recs = generate_sweep(&line_truth(-1.5e7, 0.0), 1).unwrap();
        let cal = calibrate_thermal(&recs, (13.4, 14.1), 14.2).unwrap();
        for r in cal.records.iter().filter(|r| r.temperature > 14.2) {
            assert!((r.dw2 + 1.5e7).abs() / 1.5e7 < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn calibrate_errors() {
        let recs = generate_sweep(&line_truth(0.0, 0.0), 1).unwrap();
        assert!(calibrate_thermal(&recs, (13.4, 14.3), 14.2).is_err());
        assert!(calibrate_thermal(&recs, (13.40, 13.41), 14.2).is_err());
    }

    #[test]
    fn sigma_propagation() {
        let rec = SweepRecord { sigma_f: Some(0.0047), ..SweepRecord::new(14.0, 352.8e3) };
        let cal = calibrate_thermal(&[rec, SweepRecord::new(13.9, 352.8e3), SweepRecord::new(13.8, 352.8e3)], (13.0, 14.1), 14.2).unwrap();
        let s = cal.records.iter().find(|r| r.temperature == 14.0).unwrap().sigma;
        assert!((s - 8.0 * PI * PI * 352.8e3 * 0.0047).abs() < 1e-6);
        assert!((s - 1.309e5).abs() / 1.309e5 < 1e-3);
    }

    fn residuals(pts: &[(f64, f64, f64)]) -> CalibratedResiduals {
        CalibratedResiduals {
            records: pts.iter().map(|&(t, d, s)| Residual { temperature: t, dw2: d, sigma: s }).collect(),
            fit_slope: 0.0,
            fit_intercept: 0.0,
            fit_window: (0.0, 1.0),
        }
    }

    #[test]
    fn subtraction_rules() {
        let small = residuals(&[(1.0, 5.0, 1.0), (1.5, 7.0, 1.0), (3.0, 1.0, 1.0)]);
        let big = residuals(&[(1.0, 1.0, 0.5), (2.0, 3.0, 0.25)]);
        let out = differential_subtract(&small, &big, ErrorRule::Additive).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].dw2, 4.0);
        assert_eq!(out[0].sigma, 1.5);
        assert_eq!(out[1].dw2, 5.0);
        assert_eq!(out[1].sigma, 1.75);
        let q = differential_subtract(&small, &big, ErrorRule::Quadrature).unwrap();
        assert!((q[1].sigma - (1.0f64 + 0.25f64.powi(2) + 0.125f64.powi(2)).sqrt()).abs() < 1e-15);
        let zero = residuals(&[(0.0, 0.0, 0.0), (5.0, 0.0, 0.0)]);
        let same = differential_subtract(&small, &zero, ErrorRule::Additive).unwrap();
        assert_eq!(same.iter().map(|r| r.dw2).collect::<Vec<_>>(), vec![5.0, 7.0, 1.0]);
        let far = residuals(&[(10.0, 0.0, 0.0), (11.0, 0.0, 0.0)]);
        assert!(differential_subtract(&small, &far, ErrorRule::Additive).is_err());
    }

    #[test]
    fn fem_conversion() {
        let f = ConversionFactors::small_gap_fem();
        let dw2 = AngularShift(-4.0 * PI * PI * 4.2e5);
        let c = convert_fem(dw2, &f);
        assert!((c.force + 0.329e-9).abs() < 0.002e-9, "{c:?}");
        assert!((c.pressure + 0.651e-3).abs() < 0.002e-3, "{c:?}");
        assert_eq!(convert_fem(LinearShift(-4.2e5), &f), c);
        assert_eq!(convert_fem(AngularShift(0.0), &f), FemConversion { force: 0.0, pressure: 0.0, deflection: 0.0 });
    }

    #[test]
    fn jump_estimator() {
        let pts: Vec<Residual> = (0..20)
            .map(|i| {
                let t = 14.0 + 0.02 * i as f64;
                Residual { temperature: t, dw2: if t > 14.2 { -3.0 } else { 1.0 }, sigma: 0.0 }
            })
            .collect();
        let j = estimate_jump(&pts, 14.2, 0.5).unwrap();
        assert_eq!(j.dw2, -4.0);
        assert!(estimate_jump(&pts, 20.0, 0.5).is_err());
    }

    #[test]
    fn sweep_determinism() {
        let t = line_truth(-1.0e7, 0.0047);
        assert_eq!(generate_sweep(&t, 7).unwrap(), generate_sweep(&t, 7).unwrap());
        assert_ne!(generate_sweep(&t, 7).unwrap(), generate_sweep(&t, 8).unwrap());
        let mut bad = t.clone();
        bad.grid = vec![2.0, 1.0];
        assert!(generate_sweep(&bad, 1).is_err());
    }

    #[test]
    fn merge_sorts() {
        let a = vec![SweepRecord::new(2.0, 1.0), SweepRecord::new(4.0, 1.0)];
        let b = vec![SweepRecord::new(3.0, 1.0), SweepRecord::new(1.0, 1.0)];
        let t: Vec<f64> = merge_records(&[a, b]).iter().map(|r| r.temperature).collect();
        assert_eq!(t, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn dynes_dos_shape() {
        let (d, g) = (2.6e-3, 0.465e-3);
        assert!((dynes_dos(0.5, d, g) - 1.0).abs() < 1e-4);
        assert_eq!(dynes_dos(1.3 * d, d, g), dynes_dos(-1.3 * d, d, g));
        assert!(dynes_dos(0.0, d, 1e-6 * d) < 1e-5);
    }

    #[test]
    fn dynes_limits() {
        let p = DynesParams { delta: 2.6e-3, gamma: 0.465e-3, temperature: 4.6, amplitude: 2.0 };
        assert!((dynes_conductance(50.0 * p.delta, &p).unwrap() - 2.0).abs() < 0.02);
        let cold = DynesParams { gamma: 1e-6 * p.delta, temperature: 0.05, ..p };
        assert!(dynes_conductance(0.0, &cold).unwrap() < 0.02);
    }

    #[test]
    fn csv_out_sig_digits() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], &[vec![1.0 / 3.0, -12345.678901234]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n3.33333333e-1,-1.23456789e4\n");
    }

    #[test]
    fn pairs_csv() {
        let ok = read_dynes_csv("V_volt,G_arb\n-0.01,1.0\n0.01,1.1\n".as_bytes()).unwrap();
        assert_eq!(ok, vec![(-0.01, 1.0), (0.01, 1.1)]);
        assert!(matches!(read_dynes_csv("V_volt,G_arb\n1,x\n".as_bytes()), Err(Error::Input { line: 2, .. })));
    }
}
