//! Experiment configuration, initial data, and the experiments that tie the
//! particle system to its limits: discrete-to-continuum convergence, collision
//! exponents, and fourth-order-well envelopes.

mod convergence;
mod exponent;
mod initial;
mod runs;
mod wells;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::IntegrateOptions;
use crate::error::{Error, Result};
use crate::potentials::{audit_assumptions, ComplianceReport, ExternalField, Order, Potential, PotentialSpec, Profile, ScalingRegime};

pub use convergence::{pde_snapshots, run_convergence, ConvergenceReport, ConvergenceRow};
pub use exponent::{cluster_gaps, fit_collision_exponent, fit_gap_exponent, ExponentFit, FitReport};
pub use initial::{DensityComponent, InitialData, Shape};
pub use runs::{parabola_check, rhs_check, simulate, solve_pde, ParabolaReport, PdeReport, RhsCase, RhsReport, SimulationReport};
pub use wells::{minimal_well_constant, quartic_envelope, well_violation, WellEnvelope};

/// Grid and scheme settings for the limit equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSettings {
    pub x_min: f64,
    pub x_max: f64,
    pub nodes: usize,
    pub cfl: f64,
    /// Near-field radius of the nonlocal scheme; defaults to two cells.
    pub rho: Option<f64>,
    pub quad_tol: f64,
    /// Points of the `f₃` table (`m = 3`).
    pub mobility_table: usize,
}

impl Default for PdeSettings {
    fn default() -> Self {
        PdeSettings {
            x_min: -2.0,
            x_max: 2.0,
            nodes: 801,
            cfl: 0.9,
            rho: None,
            quad_tol: 1e-10,
            mobility_table: 4001,
        }
    }
}

impl PdeSettings {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nodes - 1) as f64
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(2.0 * self.dx())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSettings {
    /// Bound on the distance at the largest `n`.
    pub conv_tol: f64,
    /// Allowed relative increase of the distance from one `n` to the next.
    pub slack: f64,
    /// Cells excluded at each end of the grid.
    pub margin_cells: usize,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        ConvergenceSettings {
            conv_tol: 0.05,
            slack: 0.1,
            margin_cells: 3,
        }
    }
}

/// Fit window of a collision exponent, in units of `T = τ - t₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    /// `(τ - t)/T` range used by the regression; times closer to `τ` are dropped.
    pub window: (f64, f64),
    pub bootstrap: usize,
    pub confidence: f64,
    /// Allowed relative deviation from `1/(2+a)`.
    pub tolerance: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            window: (1e-4, 1e-2),
            bootstrap: 1000,
            confidence: 0.95,
            tolerance: 0.1,
        }
    }
}

/// Test function used by the Hamiltonian checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    Sin,
    Cubic,
}

impl TestFunctionKind {
    pub fn build(self) -> crate::hamiltonians::TestFunction {
        match self {
            TestFunctionKind::Sin => crate::hamiltonians::TestFunction::sin(),
            TestFunctionKind::Cubic => crate::hamiltonians::TestFunction::cubic(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HamiltonianSettings {
    pub eps_list: Vec<f64>,
    pub function: TestFunctionKind,
    pub points: Vec<f64>,
    /// Bound on the relative error at the smallest `ε`.
    pub rel_tol: f64,
    pub k: f64,
    pub l: f64,
    /// `ε` values of the quartic-well sweep.
    pub parabola_eps: Vec<f64>,
    /// Number of `|γ|` values, log-spaced on `[10⁻³, L]`; both signs are used.
    pub gamma_points: usize,
    /// Allowed relative change of the maximum between the two finest `ε`.
    pub stability: f64,
    pub quad_tol: f64,
}

impl Default for HamiltonianSettings {
    fn default() -> Self {
        HamiltonianSettings {
            eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            function: TestFunctionKind::Sin,
            points: vec![0.5, 1.0, 2.0],
            rel_tol: 0.05,
            k: 2.0,
            l: 2.0,
            parabola_eps: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4],
            gamma_points: 30,
            stability: 0.2,
            quad_tol: 1e-10,
        }
    }
}

impl HamiltonianSettings {
    /// `±` log-spaced `γ` on `[10⁻³, L]`.
    pub fn gammas(&self) -> Vec<f64> {
        let (lo, hi) = (1e-3_f64, self.l);
        let k = self.gamma_points.max(2);
        (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).flat_map(|g| [-g, g]).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Directory for CSV/JSON outputs; nothing is written when unset.
    pub dir: Option<PathBuf>,
}

/// One JSON document describing an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub regime: ScalingRegime,
    #[serde(default = "zero_field")]
    pub field: ExternalField,
    pub initial: InitialData,
    #[serde(default)]
    pub n_list: Vec<usize>,
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrate: IntegrateOptions,
    #[serde(default)]
    pub pde: PdeSettings,
    #[serde(default)]
    pub convergence: ConvergenceSettings,
    #[serde(default)]
    pub fit: FitSettings,
    #[serde(default)]
    pub hamiltonian: HamiltonianSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

fn zero_field() -> ExternalField {
    ExternalField::Zero
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.build()?;
        self.regime.validate()?;
        self.integrate.validate()?;
        self.initial.validate()?;
        positive("t_end", self.t_end)?;
        if self.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= self.t_end)) {
            return Err(Error::Config("snapshot times must lie in [0, t_end]".into()));
        }
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("snapshot times must increase".into()));
        }
        if self.n_list.contains(&0) {
            return Err(Error::Config("n_list entries must be positive".into()));
        }
        let p = &self.pde;
        if !(p.x_max > p.x_min) || p.nodes < 3 {
            return Err(Error::Config("pde grid needs x_max > x_min and at least three nodes".into()));
        }
        positive("pde.cfl", p.cfl)?;
        positive("pde.quad_tol", p.quad_tol)?;
        positive("pde.rho", p.rho())?;
        positive("convergence.conv_tol", self.convergence.conv_tol)?;
        if !(self.convergence.slack >= 0.0) {
            return Err(Error::Config("convergence.slack must be nonnegative".into()));
        }
        let (lo, hi) = self.fit.window;
        positive("fit.window", lo)?;
        if !(hi > lo && hi <= 1.0) {
            return Err(Error::Config("fit.window must satisfy 0 < lo < hi <= 1".into()));
        }
        if !(self.fit.confidence > 0.0 && self.fit.confidence < 1.0) {
            return Err(Error::Config("fit.confidence must lie in (0, 1)".into()));
        }
        positive("fit.tolerance", self.fit.tolerance)?;
        let h = &self.hamiltonian;
        for &e in h.eps_list.iter().chain(&h.parabola_eps) {
            positive("hamiltonian eps", e)?;
        }
        positive("hamiltonian.quad_tol", h.quad_tol)?;
        positive("hamiltonian.rel_tol", h.rel_tol)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, as lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn build_potential(&self) -> Result<Potential> {
        self.potential.build()
    }

    /// Audit profile matching the scaling regime.
    pub fn profile(&self) -> Profile {
        match self.regime.m {
            Order::One => Profile::Hj1,
            Order::Two => Profile::Hj2,
            Order::Three => Profile::Hj3,
        }
    }

    /// Report header for this configuration and audit profile.
    pub fn header(&self, profile: Profile) -> Result<ReportHeader> {
        let pot = self.build_potential()?;
        Ok(ReportHeader {
            config_hash: self.hash(),
            potential: pot.name(),
            profile,
            compliance: audit_assumptions(&pot, profile),
        })
    }
}

/// Provenance shared by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub config_hash: String,
    pub potential: String,
    pub profile: Profile,
    pub compliance: ComplianceReport,
}

/// Named pass/fail outcome with a human-readable detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "potential": {"kind": "wall"},
        "regime": {"m": 2},
        "initial": {"kind": "density", "components": [
            {"sign": 1, "mass": 1.0, "shape": {"kind": "bump", "center": 0.0, "width": 0.5}}
        ]},
        "n_list": [25, 50],
        "t_end": 0.2,
        "snapshot_times": [0.1, 0.2]
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.field, ExternalField::Zero);
        assert_eq!(cfg.pde, PdeSettings::default());
        assert_eq!(cfg.profile(), Profile::Hj2);
        assert_eq!(cfg.hamiltonian.gammas().len(), 60);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let b = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.seed = 7;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = MINIMAL.replace("\"t_end\": 0.2", "\"t_end\": -1");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
        let unknown = MINIMAL.replace("\"seed_typo\"", "").replace("\"n_list\"", "\"n_lst\"");
        assert!(ExperimentConfig::from_json(&unknown).is_err());
        let order = MINIMAL.replace("[0.1, 0.2]", "[0.2, 0.1]");
        assert!(ExperimentConfig::from_json(&order).is_err());
    }
}
