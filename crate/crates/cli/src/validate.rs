//! Precondition checks and resource estimates, without running anything.

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind, GeometryKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    Config,
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: String,
    pub atoms: usize,
    /// 1 + N
    pub single_dimension: usize,
    /// 1 + N + N(N−1)/2
    pub double_dimension: usize,
    /// Dense single-sector blocks plus integrator work vectors.
    pub estimated_memory_bytes: u64,
    /// Complex multiply-adds per application of H on the truncated basis.
    pub flops_per_apply: u64,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut issues = Vec::new();
    let mut config = |m: String| issues.push(Issue { kind: IssueKind::Config, message: m });
    let l = &cfg.lattice;
    if l.nx == 0 || l.ny == 0 {
        config(format!("lattice needs at least one site per side, got {}×{}", l.nx, l.ny));
    }
    if !(l.layers == 1 || l.layers == 2) {
        config(format!("layers must be 1 or 2, got {}", l.layers));
    }
    if cfg.kind.is_finite() && l.geometry == GeometryKind::Curved && l.layers == 2 && cfg.beam.waist.is_none() {
        config("curved geometry needs a beam waist".into());
    }
    if cfg.kind.is_finite() && cfg.beam.waist.is_none() {
        config("finite arrays are driven by a Gaussian beam; set beam.waist".into());
    }
    if cfg.kind == ExperimentKind::ParaxialCheck && cfg.beam.waist.is_none() {
        config("paraxial-check needs beam.waist".into());
    }
    for (name, n, min) in [
        ("spectrum.delta_points", cfg.spectrum.delta_points, 1),
        ("spectrum.separation_points", cfg.spectrum.separation_points, 1),
        ("correlation.t_points", cfg.correlation.t_points, 2),
        ("momentum.points", cfg.momentum.points, 2),
        ("modes.t_points", cfg.modes.t_points, 4),
        ("numerics.peak_samples", cfg.numerics.peak_samples, 3),
        ("numerics.radial_nodes", cfg.numerics.radial_nodes, 1),
        ("numerics.angular_nodes", cfg.numerics.angular_nodes, 1),
        ("numerics.shells", cfg.numerics.shells, 1),
    ] {
        if n < min {
            config(format!("{name} must be at least {min}, got {n}"));
        }
    }
    if cfg.modes.surrogate_cells == Some(0) {
        config("modes.surrogate_cells must be positive".into());
    }
    let mut pre = |m: String| issues.push(Issue { kind: IssueKind::Precondition, message: m });
    if !(l.a > 0.0) {
        pre(format!("lattice spacing must be positive, got a = {}", l.a));
    } else if l.a >= 1.0 {
        pre(format!("a = {}λ ≥ λ opens diffraction orders at normal incidence", l.a));
    }
    if !(l.separation >= 0.0) {
        pre(format!("array separation must be non-negative, got L = {}", l.separation));
    }
    if l.layers == 2 && !(l.separation > 0.0) {
        pre("a dual array needs L > 0".into());
    }
    if let Some(w) = cfg.beam.waist {
        if !(w > 0.0) {
            pre(format!("beam waist must be positive, got w = {w}"));
        }
    }
    let d = &cfg.drive;
    if !(d.omega > 0.0) {
        pre(format!("drive strength must be positive, got Ω₀ = {}", d.omega));
    } else if d.omega > atomic_arrays::dynamics::steady::MAX_WEAK_DRIVE && cfg.kind.is_finite() {
        pre(format!(
            "Ω₀ = {}γ exceeds the weak-drive limit {}γ of the perturbative steady state",
            d.omega,
            atomic_arrays::dynamics::steady::MAX_WEAK_DRIVE
        ));
    }
    if cfg.drive.detuning.is_none() && !(d.window[1] > d.window[0]) {
        pre(format!("lock window [{}, {}] is empty", d.window[0], d.window[1]));
    }
    let s = &cfg.spectrum;
    if !(s.delta_max >= s.delta_min) || !(s.separation_max >= s.separation_min) {
        pre("spectrum ranges must satisfy min ≤ max".into());
    }
    if matches!(cfg.kind, ExperimentKind::SpectrumInfinite | ExperimentKind::ShiftVsL | ExperimentKind::DelayScan)
        && !(s.separation_min > 0.0)
    {
        pre("separation scans need L > 0 (the in-plane shift is a separate lattice sum)".into());
    }
    if !(cfg.correlation.t_max > 0.0) || !(cfg.modes.t_max > 0.0) {
        pre("time windows must be positive".into());
    }
    let m = &cfg.momentum;
    if !(m.fraction > 0.0 && m.fraction < 1.0) {
        pre(format!("momentum.fraction must lie in (0, 1) so that k_z stays real, got {}", m.fraction));
    }
    if m.k1[0].hypot(m.k1[1]) >= atomic_arrays::params::K {
        pre("momentum.k1 must satisfy |k1| < k".into());
    }
    if m.times.iter().any(|&t| !(t >= 0.0)) {
        pre("momentum.times must be non-negative".into());
    }
    if cfg.paraxial.epsilons.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
        pre("paraxial epsilons must lie in (0, 1/2)".into());
    }
    if !(cfg.numerics.tol > 0.0) {
        pre("numerics.tol must be positive".into());
    }

    let n = if let Some(cells) = cfg.modes.surrogate_cells.filter(|_| cfg.kind == ExperimentKind::ModesFit) {
        2 * cells * cells
    } else {
        cfg.atoms()
    };
    let dim2 = 1 + n + n * n.saturating_sub(1) / 2;
    let nn = (n * n) as u64;
    ValidationReport {
        kind: cfg.kind.name().into(),
        atoms: n,
        single_dimension: 1 + n,
        double_dimension: dim2,
        estimated_memory_bytes: 16 * (8 * nn + 10 * dim2 as u64),
        flops_per_apply: (n as u64).pow(3) + 4 * dim2 as u64,
        issues,
    }
}
