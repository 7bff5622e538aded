//! Experiment dispatch. Every run writes the resolved `config.toml` and, per
//! table, `<name>.csv` plus a `<name>.json` sidecar.

use nalgebra::DVector;
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

use atomic_arrays::beams::{drive_vector, DriveMode, GaussianBeam};
use atomic_arrays::dynamics::{
    build_hamiltonian, driven_mode_series, extract_modes, fit_mode_parameters, steady_state_weak_drive,
    EffectiveHamiltonian, PeriodicSurrogate, SteadyState,
};
use atomic_arrays::dynamics::modes::SETTLE_LIFETIMES;
use atomic_arrays::greens::{assemble_couplings, CouplingMatrices};
use atomic_arrays::lattice::{build_dual_array, build_single_array, AtomSet, Geometry, LatticeSpec};
use atomic_arrays::linear_response::{
    collective_linewidth, coupling_fourier, delay_time, dual_transmission, gaussian_transmission_infinite,
    intralayer_shift, resonance_curve, DelaySystem, DualForm, InterlayerModel, KGrid, DEFAULT_RADII,
};
use atomic_arrays::observables::{
    delay_scan, g2_projection, momentum_cut, momentum_map, non_factorizable_fraction, recovery_time,
    FieldOperatorCoeffs, LinearSpectrum, MomentumGrid, PairCorrelator, TransmissionPeak,
};
use atomic_arrays::params::K;
use atomic_arrays::records::{CsvTable, Sidecar};
use atomic_arrays::Complex64;

use crate::config::{linspace, ExperimentConfig, ExperimentKind, GeometryKind};
use crate::validate::validate;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub artifacts: Vec<PathBuf>,
    pub summary: Value,
}

struct Writer<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    hash: String,
    artifacts: Vec<PathBuf>,
}

impl Writer<'_> {
    fn emit(&mut self, name: &str, table: &CsvTable, summary: Value) -> Result<(), CliError> {
        let csv = self.dir.join(format!("{name}.csv"));
        table.write(fs::File::create(&csv)?)?;
        let sidecar = Sidecar {
            code_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
            kind: self.cfg.kind.name().into(),
            columns: table.columns.clone(),
            summary,
            parameters: serde_json::to_value(self.cfg).map_err(|e| CliError::Config(e.to_string()))?,
        };
        let js = self.dir.join(format!("{name}.json"));
        sidecar.write(fs::File::create(&js)?)?;
        self.artifacts.push(csv);
        self.artifacts.push(js);
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput, CliError> {
    let report = validate(cfg);
    if !report.ok() {
        let msgs: Vec<String> = report.issues.iter().map(|i| i.message.clone()).collect();
        return Err(CliError::Config(msgs.join("; ")));
    }
    fs::create_dir_all(out)?;
    let config_path = out.join("config.toml");
    let mut resolved = cfg.clone();
    resolved.output = Some(out.to_path_buf());
    fs::write(&config_path, resolved.to_toml())?;
    let mut w = Writer { cfg, dir: out, hash: cfg.hash(), artifacts: vec![config_path] };
    let summary = match cfg.kind {
        ExperimentKind::SpectrumInfinite => spectrum_infinite(cfg, &mut w)?,
        ExperimentKind::ShiftVsL => shift_vs_l(cfg, &mut w)?,
        ExperimentKind::SpectrumFinite => spectrum_finite(cfg, &mut w)?,
        ExperimentKind::G2 => g2(cfg, &mut w)?,
        ExperimentKind::MomentumDensity => momentum(cfg, &mut w)?,
        ExperimentKind::ModesFit => modes_fit(cfg, &mut w)?,
        ExperimentKind::DelayScan => delay_scan_kind(cfg, &mut w)?,
        ExperimentKind::ParaxialCheck => paraxial(cfg, &mut w)?,
    };
    Ok(RunOutput { artifacts: w.artifacts, summary })
}

fn separations(cfg: &ExperimentConfig) -> Vec<f64> {
    let s = &cfg.spectrum;
    linspace(s.separation_min, s.separation_max, s.separation_points)
}

fn deltas(cfg: &ExperimentConfig) -> Vec<f64> {
    let s = &cfg.spectrum;
    linspace(s.delta_min, s.delta_max, s.delta_points)
}

fn beam(cfg: &ExperimentConfig) -> Result<GaussianBeam, CliError> {
    let w = cfg.beam.waist.ok_or_else(|| CliError::Config("beam.waist is required".into()))?;
    Ok(GaussianBeam::new(w)?)
}

fn spectrum_infinite(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    use rayon::prelude::*;
    let a = cfg.lattice.a;
    let form = DualForm::TwoResonance(InterlayerModel::Full { shells: cfg.numerics.shells });
    let ds = deltas(cfg);
    let ls = separations(cfg);
    let rows: Vec<Vec<Vec<f64>>> = ls
        .par_iter()
        .map(|&l| {
            ds.iter()
                .map(|&d| {
                    let t = dual_transmission(d, l, a, form)?;
                    let tau = delay_time(d, a, DelaySystem::Dual { separation: l, form }).unwrap_or(f64::NAN);
                    Ok(vec![d, l, t.re, t.im, t.norm_sqr(), tau])
                })
                .collect::<atomic_arrays::Result<Vec<_>>>()
        })
        .collect::<atomic_arrays::Result<_>>()?;
    let mut table = CsvTable::new(&["delta", "L", "re_T", "im_T", "abs_T2", "tau"]);
    for row in rows.into_iter().flatten() {
        table.push(row)?;
    }
    w.emit("spectrum", &table, json!({ "linewidth": collective_linewidth(a)? }))?;

    let mut curve = CsvTable::new(&["L", "delta_star", "re_T", "im_T"]);
    let mut poles = 0;
    for &l in &ls {
        match resonance_curve(l, a) {
            Ok(r) => curve.push(vec![l, r.delta, r.transmission.re, r.transmission.im])?,
            Err(atomic_arrays::Error::TanPole { .. }) => poles += 1,
            Err(e) => return Err(e.into()),
        }
    }
    w.emit("resonance", &curve, json!({ "poles_skipped": poles }))?;

    if let Some(waist) = cfg.beam.waist {
        let b = GaussianBeam::new(waist)?;
        let grid = KGrid { radial: cfg.numerics.radial_nodes, angular: cfg.numerics.angular_nodes };
        let l = cfg.lattice.separation;
        let s = gaussian_transmission_infinite(&b, &ds, l, a, grid)?;
        let mut t = CsvTable::new(&["delta", "L", "re_T", "im_T", "abs_T2"]);
        for (d, v) in s.deltas.iter().zip(&s.transmission) {
            t.push(vec![*d, l, v.re, v.im, v.norm_sqr()])?;
        }
        w.emit("spectrum_beam", &t, json!({ "nodes": s.nodes, "flagged_nodes": s.flagged_nodes, "waist": waist }))?;
    }
    Ok(json!({ "rows": table.len() }))
}

fn shift_vs_l(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let a = cfg.lattice.a;
    let gt = collective_linewidth(a)?;
    let mut table = CsvTable::new(&["L", "delta_L", "gamma_L", "dipole", "propagating"]);
    for l in separations(cfg) {
        let c = coupling_fourier([0.0, 0.0], l, a, cfg.numerics.shells)?;
        let kl = K * l;
        table.push(vec![l, c.delta_l, c.gamma_l, 1.5 / kl.powi(3), gt * kl.sin()])?;
    }
    let shift = intralayer_shift(a, &DEFAULT_RADII)?;
    let summary = json!({ "linewidth": gt, "intralayer_shift": shift.value, "intralayer_shift_error": shift.error });
    w.emit("shift", &table, summary.clone())?;
    Ok(summary)
}

struct FiniteSetup {
    atoms: AtomSet,
    couplings: CouplingMatrices,
    beam: GaussianBeam,
    /// Transmission for dual arrays, reflection for single arrays.
    forward: bool,
}

fn finite_setup(cfg: &ExperimentConfig, separation: f64) -> Result<FiniteSetup, CliError> {
    let l = &cfg.lattice;
    let b = beam(cfg)?;
    let atoms = if l.layers == 1 {
        build_single_array(l.nx, l.ny, l.a)?
    } else {
        let geometry = match l.geometry {
            GeometryKind::Flat => Geometry::Flat,
            GeometryKind::Curved => Geometry::Curved { waist: b.waist() },
        };
        build_dual_array(&LatticeSpec::new(l.nx, l.ny, l.a, separation, geometry)?, Some(&b))?
    };
    let couplings = assemble_couplings(&atoms)?;
    Ok(FiniteSetup { atoms, couplings, beam: b, forward: l.layers == 2 })
}

fn peak_json(p: &TransmissionPeak) -> Value {
    json!({
        "delta": p.delta,
        "magnitude": p.magnitude,
        "re": p.transmission.re,
        "im": p.transmission.im,
        "linewidth": p.linewidth,
        "delay": p.delay,
    })
}

/// Detuning from the config, or the peak of |T| (|r| for single arrays) nearest the target.
fn lock_detuning(cfg: &ExperimentConfig, setup: &FiniteSetup) -> Result<(f64, Value), CliError> {
    if let Some(d) = cfg.drive.detuning {
        return Ok((d, json!({ "locked": false, "detuning": d })));
    }
    let s = LinearSpectrum::gaussian(&setup.couplings, &setup.atoms, &setup.beam, setup.forward)?;
    let [lo, hi] = cfg.drive.window;
    let peaks = s.peaks(lo, hi, cfg.numerics.peak_samples, 0.0)?;
    let target = cfg.drive.target;
    let best = peaks
        .iter()
        .min_by(|a, b| (a.delta - target).abs().total_cmp(&(b.delta - target).abs()))
        .ok_or_else(|| CliError::Numerical(format!("no resonance found in [{lo}, {hi}]")))?;
    Ok((best.delta, json!({ "locked": true, "target": target, "offset": best.delta - target, "peak": peak_json(best) })))
}

fn spectrum_finite(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let l = cfg.lattice.separation;
    let setup = finite_setup(cfg, l)?;
    let t = LinearSpectrum::gaussian(&setup.couplings, &setup.atoms, &setup.beam, true)?;
    let r = LinearSpectrum::gaussian(&setup.couplings, &setup.atoms, &setup.beam, false)?;
    let ds = deltas(cfg);
    let mut table = CsvTable::new(&["delta", "L", "re_T", "im_T", "abs_T2", "tau", "re_r", "im_r"]);
    for (d, (tv, rv)) in ds.iter().zip(t.amplitudes(&ds).into_iter().zip(r.amplitudes(&ds))) {
        let tau = if tv.norm() > 1e-6 { (t.derivative(*d) / tv).im } else { f64::NAN };
        table.push(vec![*d, l, tv.re, tv.im, tv.norm_sqr(), tau, rv.re, rv.im])?;
    }
    w.emit("spectrum", &table, json!({ "atoms": setup.atoms.len() }))?;
    let (lo, hi) = (cfg.spectrum.delta_min, cfg.spectrum.delta_max);
    let main = if setup.forward { &t } else { &r };
    let peaks = if hi > lo { main.peaks(lo, hi, cfg.numerics.peak_samples, 0.0)? } else { Vec::new() };
    let mut pt = CsvTable::new(&["delta", "magnitude", "linewidth", "tau"]);
    for p in &peaks {
        pt.push(vec![p.delta, p.magnitude, p.linewidth.unwrap_or(f64::NAN), p.delay.unwrap_or(f64::NAN)])?;
    }
    let summary = json!({ "peaks": peaks.iter().map(peak_json).collect::<Vec<_>>(), "detected": if setup.forward { "transmission" } else { "reflection" } });
    w.emit("peaks", &pt, summary.clone())?;
    Ok(summary)
}

struct QuantumSetup {
    setup: FiniteSetup,
    hamiltonian: EffectiveHamiltonian,
    steady: SteadyState,
    coeffs: FieldOperatorCoeffs,
    lock: Value,
}

fn quantum_setup(cfg: &ExperimentConfig) -> Result<QuantumSetup, CliError> {
    let setup = finite_setup(cfg, cfg.lattice.separation)?;
    let (detuning, lock) = lock_detuning(cfg, &setup)?;
    let omega = cfg.drive.omega;
    let drive = drive_vector(&setup.atoms, &DriveMode::Gaussian(setup.beam), omega)?;
    let hamiltonian = build_hamiltonian(&setup.couplings, &drive, detuning, 2)?;
    let steady = steady_state_weak_drive(&hamiltonian)?;
    let coeffs = if setup.forward {
        FieldOperatorCoeffs::forward(&setup.atoms, &setup.beam, omega)?
    } else {
        FieldOperatorCoeffs::backward(&setup.atoms, &setup.beam, omega)?
    };
    Ok(QuantumSetup { setup, hamiltonian, steady, coeffs, lock })
}

fn g2(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let q = quantum_setup(cfg)?;
    let times = linspace(0.0, cfg.correlation.t_max, cfg.correlation.t_points);
    let series = g2_projection(&q.steady, &q.hamiltonian, &q.coeffs, &times)?;
    let mut table = CsvTable::new(&["t", "g2"]);
    for (t, g) in series.times.iter().zip(&series.values) {
        table.push(vec![*t, *g])?;
    }
    let (t_min, g_min) = series.minimum();
    let summary = json!({
        "detuning": q.hamiltonian.detuning,
        "lock": q.lock,
        "g2_zero": series.values[0],
        "g2_min": g_min,
        "t_min": t_min,
        "recovery_time": recovery_time(&series),
        "field": { "re": series.transmission.re, "im": series.transmission.im, "abs": series.transmission.norm() },
        "truncation_ratio": q.steady.truncation_ratio,
        "detected": if q.setup.forward { "transmission" } else { "reflection" },
    });
    w.emit("g2", &table, summary.clone())?;
    Ok(summary)
}

fn momentum(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let q = quantum_setup(cfg)?;
    let corr = PairCorrelator::new(&q.setup.atoms, &q.setup.beam, &q.steady, &q.hamiltonian)?;
    let grid = MomentumGrid::new(cfg.momentum.points, cfg.momentum.fraction)?;
    let k1 = cfg.momentum.k1;
    let plane: Vec<[f64; 2]> = grid.axis.iter().flat_map(|&x| grid.axis.iter().map(move |&y| [x, y])).collect();
    let map = momentum_map(&corr, &[k1], &plane, &grid, 0.0)?;
    let mut table = CsvTable::new(&["k1x", "k1y", "k2x", "k2y", "rho"]);
    for (k2, v) in plane.iter().zip(&map.values[0]) {
        table.push(vec![k1[0], k1[1], k2[0], k2[1], *v])?;
    }
    let dk = grid.spacing();
    let argmax = map.argmax().map(|(_, j)| plane[j]);
    let within = argmax.map(|k| (k[0] + k1[0]).abs() <= dk * (1.0 + 1e-9) && (k[1] + k1[1]).abs() <= dk * (1.0 + 1e-9));
    w.emit("momentum_k1", &table, json!({ "argmax_k2": argmax, "minus_k1": [-k1[0], -k1[1]], "spacing": dk, "within_one_cell": within }))?;
    let mut fractions = Vec::new();
    for (idx, &t) in cfg.momentum.times.iter().enumerate() {
        let cut = momentum_cut(&corr, &grid, t)?;
        let mut table = CsvTable::new(&["k1x", "k1y", "k2x", "k2y", "rho"]);
        for (i, ka) in cut.k1.iter().enumerate() {
            for (j, kb) in cut.k2.iter().enumerate() {
                table.push(vec![ka[0], ka[1], kb[0], kb[1], cut.values[i][j]])?;
            }
        }
        let f = non_factorizable_fraction(&cut.matrix());
        fractions.push(json!({ "t": t, "non_factorizable": f }));
        w.emit(&format!("momentum_cut_{idx}"), &table, json!({ "t": t, "non_factorizable": f }))?;
    }
    Ok(json!({ "lock": q.lock, "argmax_k2": argmax, "within_one_cell": within, "cuts": fractions }))
}

/// Post-detection vacuum and single-excitation amplitudes Ê|ψ⟩ at leading order.
fn detected(steady: &SteadyState, coeffs: &FieldOperatorCoeffs) -> (Complex64, DVector<Complex64>) {
    let b = &coeffs.coefficients;
    let c1 = steady.singles();
    (coeffs.input + b.dot(&c1), &c1 * coeffs.input + steady.pairs() * b)
}

fn modes_fit(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let omega = cfg.drive.omega;
    let (h, steady, coeffs, extra) = if let Some(m) = cfg.modes.surrogate_cells {
        let a = cfg.lattice.a;
        let l = cfg.lattice.separation;
        let s = PeriodicSurrogate::new(m, a, l)?;
        let detuning = match cfg.drive.detuning {
            Some(d) => d,
            None => intralayer_shift(a, &DEFAULT_RADII)?.value,
        };
        let h = s.hamiltonian(detuning, omega, 2)?;
        let steady = steady_state_weak_drive(&h)?;
        let atoms = AtomSet::new(s.positions.clone(), (0..s.len()).map(|i| if i < s.len() / 2 { 1 } else { 2 }).collect())?;
        let area = (m as f64 * a).powi(2);
        let coeffs = FieldOperatorCoeffs::plane_wave(&atoms, area, omega, true)?;
        let gt = collective_linewidth(a)?;
        let c = (K * l).cos();
        (h, steady, coeffs, json!({ "surrogate_cells": m, "expected_rates": [gt * (1.0 + c), gt * (1.0 - c)] }))
    } else {
        let q = quantum_setup(cfg)?;
        (q.hamiltonian, q.steady, q.coeffs, json!({ "lock": q.lock }))
    };
    let (phi0, phi1) = detected(&steady, &coeffs);
    let modes = extract_modes(&h, &phi1, cfg.modes.settle)?;
    // each mode is sampled over its own ~10 lifetimes so fast modes stay resolved
    let window = |g: f64| cfg.modes.t_max.min(SETTLE_LIFETIMES / g.max(1e-12));
    let t_minus = linspace(0.0, window(modes.gamma_minus), cfg.modes.t_points);
    let t_plus = linspace(0.0, window(modes.gamma_plus), cfg.modes.t_points);
    let minus = driven_mode_series(&h, &phi1, phi0, &[&modes.minus], &t_minus)?.remove(0);
    let plus = driven_mode_series(&h, &phi1, phi0, &[&modes.plus], &t_plus)?.remove(0);
    let mut table = CsvTable::new(&["t_minus", "re_c_minus", "im_c_minus", "t_plus", "re_c_plus", "im_c_plus"]);
    for k in 0..t_minus.len() {
        table.push(vec![t_minus[k], minus[k].re, minus[k].im, t_plus[k], plus[k].re, plus[k].im])?;
    }
    let fit = |times: &[f64], data: &[Complex64]| match fit_mode_parameters(times, data) {
        Ok(f) => Ok(json!({ "delta": f.delta, "gamma": f.gamma, "g": [f.g.re, f.g.im], "relative_residual": f.relative_residual })),
        Err(e) => Err(e.to_string()),
    };
    let (fm, fp) = (fit(&t_minus, &minus), fit(&t_plus, &plus));
    let failed = fm.is_err() || fp.is_err();
    let as_json = |r: Result<Value, String>| r.unwrap_or_else(|e| json!({ "error": e }));
    let summary = json!({
        "detuning": h.detuning,
        "settle_time": modes.settle_time,
        "gamma_minus": modes.gamma_minus,
        "gamma_plus": modes.gamma_plus,
        "warning": modes.warning,
        "fit_minus": as_json(fm),
        "fit_plus": as_json(fp),
        "setup": extra,
    });
    w.emit("modes", &table, summary.clone())?;
    if failed {
        return Err(CliError::Numerical("mode fit failed; see modes.json".into()));
    }
    Ok(summary)
}

fn delay_scan_kind(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let b = beam(cfg)?;
    let l = &cfg.lattice;
    if l.layers != 2 || l.geometry != GeometryKind::Curved {
        return Err(CliError::Config("delay-scan follows curved dual arrays; set layers = 2 and geometry = \"curved\"".into()));
    }
    let ls = separations(cfg);
    let [lo, hi] = cfg.drive.window;
    let points = delay_scan(l.nx, l.ny, l.a, &b, &ls, (lo, hi), cfg.numerics.peak_samples)?;
    let mut table = CsvTable::new(&["L", "delta", "magnitude", "linewidth", "tau"]);
    let mut best: Option<(f64, f64)> = None;
    for p in &points {
        let pk = p.peak;
        let tau = pk.and_then(|x| x.delay).unwrap_or(f64::NAN);
        table.push(vec![
            p.separation,
            pk.map_or(f64::NAN, |x| x.delta),
            pk.map_or(f64::NAN, |x| x.magnitude),
            pk.and_then(|x| x.linewidth).unwrap_or(f64::NAN),
            tau,
        ])?;
        if tau.is_finite() && best.is_none_or(|(_, t)| tau > t) {
            best = Some((p.separation, tau));
        }
    }
    let summary = json!({ "max_delay": best.map(|b| b.1), "max_delay_separation": best.map(|b| b.0) });
    w.emit("delay_scan", &table, summary.clone())?;
    Ok(summary)
}

fn paraxial(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Value, CliError> {
    let b = beam(cfg)?;
    let mut table = CsvTable::new(&["epsilon", "k_epsilon", "p"]);
    for &e in &cfg.paraxial.epsilons {
        table.push(vec![e, (2.0 * e).sqrt() * K, b.paraxial_tail_fraction(e)?])?;
    }
    let summary = json!({ "waist": b.waist(), "mode_norm": b.mode_norm(0.0), "mode_norm_expected": b.waist().powi(2) });
    w.emit("paraxial", &table, summary.clone())?;
    Ok(summary)
}
