//! Sampling-based audit of the structural assumptions on a potential.
//!
//! Every check evaluates closed-form derivatives on a logarithmic grid and
//! turns the samples into evidence: sign checks, log–log slopes near the
//! origin and in the tail, and discrete integrals. Nothing here is a proof.

use serde::{Deserialize, Serialize};

use super::{l1_norm, Potential};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Evidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceEntry {
    pub item: String,
    pub status: Status,
    pub data: Vec<f64>,
}

/// Ordered list of audit entries; serializes as a JSON array.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplianceReport {
    pub entries: Vec<ComplianceEntry>,
}

impl ComplianceReport {
    fn push(&mut self, item: impl Into<String>, status: Status, data: Vec<f64>) {
        self.entries.push(ComplianceEntry { item: item.into(), status, data });
    }

    fn check(&mut self, item: impl Into<String>, ok: bool, data: Vec<f64>) {
        self.push(item, if ok { Status::Pass } else { Status::Fail }, data);
    }

    /// True when no entry failed.
    pub fn passes(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ComplianceEntry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn get(&self, item: &str) -> Option<&ComplianceEntry> {
        self.entries.iter().find(|e| e.item == item)
    }
}

/// Which assumption ledger to audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    WellPosedness,
    Hj1,
    Hj2,
    Hj3,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "wellposedness" | "wp" => Ok(Profile::WellPosedness),
            "hj1" => Ok(Profile::Hj1),
            "hj2" => Ok(Profile::Hj2),
            "hj3" => Ok(Profile::Hj3),
            _ => Err(Error::Config(format!("unknown audit profile '{s}'"))),
        }
    }
}

impl Profile {
    fn required_order(self) -> usize {
        match self {
            Profile::Hj3 => 4,
            _ => 3,
        }
    }
}

/// Sampling grid and decision thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub per_decade: usize,
    /// Window near the origin used for power-law fits.
    pub origin_window: (f64, f64),
    /// Window in the tail used for power-law fits.
    pub tail_window: (f64, f64),
    /// Margin on fitted slopes before an integrability verdict is drawn.
    pub slope_margin: f64,
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            x_min: 1e-6,
            x_max: 1e4,
            per_decade: 20,
            origin_window: (1e-6, 1e-2),
            tail_window: (1e2, 1e4),
            slope_margin: 0.02,
            alphas: vec![0.5, 1.0, 10.0],
            gammas: vec![0.1, 1.0],
        }
    }
}

impl AuditConfig {
    fn grid(&self) -> Vec<f64> {
        let decades = (self.x_max / self.x_min).log10();
        let count = (decades * self.per_decade as f64).round() as usize;
        (0..=count).map(|i| self.x_min * 10f64.powf(i as f64 / self.per_decade as f64)).collect()
    }
}

/// Least-squares slope and intercept of `log|y|` against `log x` over points
/// in `window` with finite nonzero `y`.
fn loglog_fit(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x >= window.0 * (1.0 - 1e-12) && **x <= window.1 * (1.0 + 1e-12) && y.is_finite() && **y != 0.0)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// `∫ |g| dx` over the sampled range, trapezoid rule in `log x`.
fn log_trapezoid(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = 0.0;
    for i in 1..xs.len() {
        if xs[i - 1] >= lo && xs[i] <= hi {
            let h = (xs[i] / xs[i - 1]).ln();
            s += 0.5 * h * (ys[i - 1].abs() * xs[i - 1] + ys[i].abs() * xs[i]);
        }
    }
    s
}

/// Running supremum of `|v|` from the right, optionally capped at `cap`.
fn suffix_sup(xs: &[f64], vs: &[f64], cap: Option<f64>) -> Vec<f64> {
    let mut out = vec![0.0; vs.len()];
    let mut best = 0.0_f64;
    for i in (0..vs.len()).rev() {
        if cap.is_none_or(|c| xs[i] <= c) {
            best = best.max(vs[i].abs());
        }
        out[i] = best;
    }
    out
}

struct Samples<'a> {
    cfg: &'a AuditConfig,
    xs: Vec<f64>,
    d: Vec<Vec<f64>>,
}

impl Samples<'_> {
    fn weighted(&self, k: usize, power: i32) -> Vec<f64> {
        self.xs.iter().zip(&self.d[k]).map(|(x, v)| x.powi(power) * v).collect()
    }

    fn weighted_sup(&self, k: usize, power: i32, cap: Option<f64>) -> Vec<f64> {
        let s = suffix_sup(&self.xs, &self.d[k], cap);
        self.xs.iter().zip(s).map(|(x, v)| x.powi(power) * v).collect()
    }

    /// Integrability at the origin: slope of the fitted power law above `-1`.
    fn origin_integrable(&self, g: &[f64]) -> (bool, f64) {
        match loglog_fit(&self.xs, g, self.cfg.origin_window) {
            Some((s, _)) => (s > -1.0 + self.cfg.slope_margin, s),
            None => (true, f64::INFINITY),
        }
    }

    /// Integrability at infinity: fitted slope below `-1`, or faster-than-power
    /// decay (fewer than two nonzero samples in the window).
    fn tail_integrable(&self, g: &[f64]) -> (bool, f64) {
        match loglog_fit(&self.xs, g, self.cfg.tail_window) {
            Some((s, _)) => (s < -1.0 - self.cfg.slope_margin, s),
            None => (true, f64::NEG_INFINITY),
        }
    }

    /// Bounded at infinity: fitted slope at most `0`.
    fn tail_bounded(&self, g: &[f64]) -> (bool, f64) {
        match loglog_fit(&self.xs, g, self.cfg.tail_window) {
            Some((s, _)) => (s <= self.cfg.slope_margin, s),
            None => (true, f64::NEG_INFINITY),
        }
    }
}

/// Audits `pot` against the chosen assumption ledger.
pub fn audit_assumptions(pot: &Potential, profile: Profile) -> ComplianceReport {
    audit_with(pot, profile, &AuditConfig::default())
}

/// [`audit_assumptions`] with an explicit sampling configuration.
pub fn audit_with(pot: &Potential, profile: Profile, cfg: &AuditConfig) -> ComplianceReport {
    let mut report = ComplianceReport::default();
    let xs = cfg.grid();
    let order = pot.max_order();
    let need = profile.required_order();
    report.check(format!("V ∈ C^{need}((0,∞))"), order >= need, vec![order as f64]);
    if order < 3 {
        report.push("derivative evaluators of order 3", Status::Fail, vec![order as f64]);
        return report;
    }
    let d: Vec<Vec<f64>> = (0..=order.min(4)).map(|k| xs.iter().map(|&x| pot.d(k, x)).collect()).collect();
    let s = Samples { cfg, xs: xs.clone(), d };

    let even = xs.iter().all(|&x| pot.derivative(0, x).ok() == pot.derivative(0, -x).ok());
    report.check("V even", even, vec![]);

    // Sign ledger for f = -V_α', f' = -V_α'', f'' = -V_α''' at several scalings.
    let mut worst = [0.0_f64; 3];
    for &alpha in &cfg.alphas {
        for &x in &xs {
            for (k, w) in worst.iter_mut().enumerate() {
                let v = -pot.scaled_d(alpha, k + 1, x);
                let signed = if k == 1 { -v } else { v };
                *w = w.min(signed);
            }
        }
    }
    report.check("f ≥ 0", worst[0] >= 0.0, vec![-worst[0]]);
    report.check("f′ ≤ 0", worst[1] >= 0.0, vec![-worst[1]]);
    report.check("f″ ≥ 0", worst[2] >= 0.0, vec![-worst[2]]);
    report.check("V″ ≥ 0 on (0,∞)", s.d[2].iter().all(|v| *v >= 0.0), vec![]);

    let xv2 = s.weighted(2, 1);
    let blowup = loglog_fit(&xs, &xv2, cfg.origin_window).map(|(sl, _)| sl);
    report.check(
        "x f′(x) → −∞ as x → 0",
        blowup.is_some_and(|sl| sl < -cfg.slope_margin),
        vec![blowup.unwrap_or(f64::NAN), xv2[0]],
    );

    let f: Vec<f64> = s.d[1].iter().map(|v| -v).collect();
    let (a_fit, c_fit) = match loglog_fit(&xs, &f, cfg.origin_window) {
        Some((sl, _)) => {
            let a = -sl - 1.0;
            let c = xs.iter().zip(&f).filter(|(x, _)| **x <= 1.0).map(|(x, v)| v * x.powf(1.0 + a)).fold(0.0, f64::max);
            (a, c)
        }
        None => (f64::NAN, f64::NAN),
    };
    report.push("singularity exponent", Status::Evidence, vec![a_fit, c_fit]);
    report.check("f(x) ≤ C x^{−1−a} with a > −1", a_fit > -1.0 && c_fit.is_finite(), vec![a_fit, c_fit]);
    if let Some((sl, _)) = loglog_fit(&xs, &xv2, cfg.origin_window) {
        let a_low = -sl - 1.0;
        let c_low = xs
            .iter()
            .zip(&xv2)
            .filter(|(x, _)| **x <= 1.0)
            .map(|(x, v)| v * x.powf(1.0 + a_low))
            .fold(f64::INFINITY, f64::min);
        report.push("|x f′(x)| ≥ c′ x^{−1−a′} bracket [a′, a]", Status::Evidence, vec![a_low, c_low, a_fit]);
    }

    let mut monotone = true;
    for &gamma in &cfg.gammas {
        let diff: Vec<f64> = xs.iter().map(|&x| pot.force(1.0, x + gamma) - pot.force(1.0, x)).collect();
        monotone &= diff.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(w[1].abs()));
    }
    report.check("f(x+γ) − f(x) nondecreasing", monotone, cfg.gammas.clone());

    let x2v2 = s.weighted(2, 2);
    let loc2 = s.origin_integrable(&x2v2);
    let x2v2_int = log_trapezoid(&xs, &x2v2, 0.0, 1.0);

    match profile {
        Profile::WellPosedness => {}
        Profile::Hj1 => {
            report.check("x²V″ ∈ L¹_loc", loc2.0, vec![loc2.1, x2v2_int]);
            let g = s.weighted_sup(3, 3, Some(1.0));
            let (ok, sl) = s.origin_integrable(&g);
            report.check("x³𝕍₃¹ ∈ L¹(0,1)", ok, vec![sl, log_trapezoid(&xs, &g, 0.0, 1.0)]);
        }
        Profile::Hj2 => {
            sobolev_tail(&mut report, &s);
            let g = s.weighted_sup(3, 3, None);
            let (o, so) = s.origin_integrable(&g);
            let (t, st) = s.tail_integrable(&g);
            report.check("x³𝕍₃ ∈ L¹(ℝ)", o && t, vec![so, st, log_trapezoid(&xs, &g, 0.0, f64::INFINITY)]);
            let x4v3 = s.weighted(3, 4);
            let vanish = loglog_fit(&xs, &x4v3, cfg.origin_window).map(|(sl, _)| sl);
            report.check(
                "x⁴V‴ → 0 as x → 0",
                vanish.is_none_or(|sl| sl > cfg.slope_margin),
                vec![vanish.unwrap_or(f64::NAN), x4v3[0]],
            );
            l1_item(&mut report, pot);
        }
        Profile::Hj3 => {
            sobolev_tail(&mut report, &s);
            report.check("x²V″ ∈ L¹(0,1)", loc2.0, vec![loc2.1, x2v2_int]);
            let g = s.weighted_sup(3, 3, None);
            let (t, st) = s.tail_integrable(&g);
            report.check("x³𝕍₃ ∈ L¹(1,∞)", t, vec![st, log_trapezoid(&xs, &g, 1.0, f64::INFINITY)]);
            for k in [3usize, 4] {
                let w = s.weighted(k, k as i32 + 1);
                let (ok, sl) = s.tail_bounded(&w);
                let sup = xs.iter().zip(&w).filter(|(x, _)| **x >= 1.0).map(|(_, v)| v.abs()).fold(0.0, f64::max);
                report.check(format!("sup_(x>1) x^{}|V^({k})| < ∞", k + 1), ok, vec![sl, sup]);
            }
            let z2v2 = s.weighted_sup(2, 2, None);
            let (t, st) = s.tail_integrable(&z2v2);
            report.check("z²𝕍₂ ∈ L¹(1,∞)", t, vec![st, log_trapezoid(&xs, &z2v2, 1.0, f64::INFINITY)]);
            l1_item(&mut report, pot);
        }
    }
    report
}

fn sobolev_tail(report: &mut ComplianceReport, s: &Samples<'_>) {
    let mut ok = true;
    let mut slopes = Vec::new();
    for k in 0..=3 {
        let (t, sl) = s.tail_integrable(&s.d[k]);
        ok &= t;
        slopes.push(sl);
    }
    report.check("V ∈ W^{3,1}(1,∞)", ok, slopes);
}

fn l1_item(report: &mut ComplianceReport, pot: &Potential) {
    match l1_norm(pot, 1e-8) {
        Ok(v) => report.check("V ∈ L¹(ℝ)", v.is_finite(), vec![v]),
        Err(_) => report.check("V ∈ L¹(ℝ)", false, vec![]),
    }
}
