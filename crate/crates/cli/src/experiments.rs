//! Named experiments. Each returns a [`ResultTable`] that depends only on the config.

use crate::config::{ChainModel, Experiment, ExperimentConfig};
use crate::CliError;
use adaprep::analysis::{chain_entropy, fit_relaxation, wineland, LogBase, SpinState};
use adaprep::circuit::{run_ensemble, CircuitParams, RunOptions};
use adaprep::hilbert::{DickeSpace, QubitRegister};
use adaprep::lindblad::{build_superoperator, gap_from_eigenvalues, spectrum, LindbladModel};
use adaprep::models::*;
use adaprep::table::{Cell, Column, ResultTable};
use adaprep::trajectory::{ensemble_summary, mcwf_ensemble, FeedbackController, Observable, PostSelect, UnravelingConfig};
use std::time::Instant;

/// Liouvillian spectra are limited to 2n ≤ 10.
pub const MAX_SPECTRAL_CHAIN: usize = 5;
/// Dicke models are limited to N ≤ 30.
pub const MAX_SPINS: usize = 30;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let t0 = Instant::now();
    let mut table = match cfg.experiment {
        Experiment::Fig1b => chain_sweep(cfg, false)?,
        Experiment::Custom => chain_sweep(cfg, true)?,
        Experiment::Fig2b => fig2b(cfg)?,
        Experiment::Fig2c => fig2c(cfg)?,
        Experiment::Fig2d => fig2d(cfg)?,
        Experiment::Fig3 => fig3(cfg)?,
        Experiment::FigS2 => fig_s2(cfg)?,
        Experiment::FigS5 => fig_s5(cfg)?,
        Experiment::FigS6 => fig_s6(cfg)?,
        Experiment::FigS7 => fig_s7(cfg)?,
    };
    table.set_meta("experiment", cfg.experiment.name());
    table.set_meta("seed", cfg.seed);
    table.set_meta("config", cfg.canonical_json());
    table.set_meta("config_hash", cfg.hash());
    table.set_meta("code_version", env!("CARGO_PKG_VERSION"));
    table.set_meta("schema_version", crate::config::SCHEMA_VERSION);
    table.set_meta(crate::io::RUNTIME_KEY, format!("{:.3}", t0.elapsed().as_secs_f64()));
    Ok(table)
}

fn d_star(n: usize) -> usize {
    (5.0 * 0.66 * (2 * n) as f64).ceil() as usize
}

fn check_v2(v2: &[f64]) -> Result<(), CliError> {
    if v2.is_empty() {
        return Err(CliError::Config("v2 list is empty".into()));
    }
    if let Some(x) = v2.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(CliError::Config(format!("v2 = {x} outside [0,1]")));
    }
    Ok(())
}

fn single_v2(cfg: &ExperimentConfig, default: f64) -> Result<f64, CliError> {
    match &cfg.v2 {
        None => Ok(default),
        Some(v) if v.len() == 1 => {
            check_v2(v)?;
            Ok(v[0])
        }
        Some(_) => Err(CliError::Config(format!("{} takes a single v2 value", cfg.experiment.name()))),
    }
}

fn check_traj(t: usize) -> Result<usize, CliError> {
    if t == 0 {
        return Err(CliError::Config("traj must be ≥ 1".into()));
    }
    Ok(t)
}

fn circuit_params(cfg: &ExperimentConfig, n: usize, v2: f64, adaptive: bool, eps: f64) -> Result<CircuitParams, CliError> {
    let mut p = CircuitParams::new(n, cfg.j, v2, adaptive);
    p.epsilon = eps;
    p.validate()?;
    Ok(p)
}

fn model_for(kind: ChainModel, p: &ChainParams) -> adaprep::Result<LindbladModel> {
    match kind {
        ChainModel::Fermion => fermion_chain(p),
        ChainModel::Spin => spin_chain(p),
        ChainModel::String => string_spin_model(p),
        ChainModel::Adaptive => adaptive_continuous(p),
    }
}

fn chain_sweep(cfg: &ExperimentConfig, custom: bool) -> Result<ResultTable, CliError> {
    let n = cfg.n.unwrap_or(if custom { 2 } else { 3 });
    if n > MAX_SPECTRAL_CHAIN {
        return Err(CliError::Config(format!("Liouvillian spectra need 2n ≤ {}; got n = {n}", 2 * MAX_SPECTRAL_CHAIN)));
    }
    let deltas = cfg.delta.clone().unwrap_or_else(|| if custom { vec![0.0] } else { vec![0.0, 2.0] });
    let v2s = cfg.v2.clone().unwrap_or_else(|| if custom { vec![0.3] } else { vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.49] });
    check_v2(&v2s)?;
    let models = cfg
        .models
        .clone()
        .unwrap_or_else(|| if custom { vec![ChainModel::Spin] } else { vec![ChainModel::Fermion, ChainModel::Spin, ChainModel::Adaptive] });
    let mut cols = vec![
        Column::text("model"),
        Column::real("delta", "J"),
        Column::real("v2", ""),
        Column::real("S_vN", "nats"),
        Column::real("gap", "Γ"),
    ];
    if custom {
        cols.push(Column::text("status"));
    }
    let mut t = ResultTable::new(cols);
    let reg = QubitRegister::chains(n, 0);
    for &kind in &models {
        for &delta in &deltas {
            for &v2 in &v2s {
                let p = ChainParams::new(n, cfg.j, delta, cfg.gamma, v2)?;
                let m = model_for(kind, &p)?;
                let s = chain_entropy(&dimer_state(n, p.u, p.v, &reg)?, &reg, LogBase::E)?.value;
                let ev = spectrum(&build_superoperator(&m)?)?;
                let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
                let gap = gap_from_eigenvalues(&ev, 1e-9 * scale);
                let mut row: Vec<Cell> = vec![kind.name().into(), delta.into(), v2.into(), s.into()];
                match (gap, custom) {
                    (Some(g), false) => row.push(g.into()),
                    (Some(g), true) => {
                        row.push(g.into());
                        row.push("ok".into());
                    }
                    (None, true) => {
                        row.push(0.0.into());
                        row.push("no relaxing mode (gap = 0)".into());
                    }
                    (None, false) => {
                        return Err(CliError::Numeric(format!("{} model at Δ={delta}, v²={v2} has no relaxing mode", kind.name())))
                    }
                }
                t.push_row(row)?;
            }
        }
    }
    Ok(t)
}

fn entropy_columns() -> Vec<Column> {
    vec![Column::real("cycle", ""), Column::real("mean_S_vN", "nats"), Column::real("std_S_vN", "nats")]
}

fn fig2b(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let n = cfg.n.unwrap_or(4);
    let p = circuit_params(cfg, n, single_v2(cfg, 0.5)?, true, cfg.epsilon.as_ref().map_or(0.0, |e| e[0]))?;
    let opts = RunOptions::new(cfg.cycles.unwrap_or(d_star(n)), check_traj(cfg.traj.unwrap_or(1000))?, cfg.seed);
    let e = run_ensemble(&p, &opts)?;
    let (mean, std) = e.entropy_stats();
    let mut t = ResultTable::new(entropy_columns());
    for (k, &c) in e.cycles.iter().enumerate() {
        t.push_reals(&[c as f64, mean[k], std[k]])?;
    }
    t.set_meta("target_n_ln2", n as f64 * 2f64.ln());
    Ok(t)
}

fn fig2c(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let n = cfg.n.unwrap_or(4);
    let v2 = single_v2(cfg, 0.5)?;
    let opts = RunOptions::new(cfg.cycles.unwrap_or(d_star(n)), check_traj(cfg.traj.unwrap_or(3))?, cfg.seed);
    let mut t = ResultTable::new(vec![
        Column::text("protocol"),
        Column::real("trajectory", ""),
        Column::real("cycle", ""),
        Column::real("S_vN", "nats"),
    ]);
    for (name, adaptive) in [("adaptive", true), ("fixed", false)] {
        let e = run_ensemble(&circuit_params(cfg, n, v2, adaptive, 0.0)?, &opts)?;
        for (i, tr) in e.trajectories.iter().enumerate() {
            for (k, &c) in e.cycles.iter().enumerate() {
                t.push_row(vec![name.into(), (i as f64).into(), (c as f64).into(), tr.entropies[k].into()])?;
            }
        }
    }
    Ok(t)
}

fn fig2d(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let n = cfg.n.unwrap_or(4);
    let v2s = cfg.v2.clone().unwrap_or_else(|| vec![0.3, 0.45, 0.5]);
    check_v2(&v2s)?;
    let opts = RunOptions::new(cfg.cycles.unwrap_or(d_star(n)), check_traj(cfg.traj.unwrap_or(200))?, cfg.seed);
    let mut cols = vec![Column::real("v2", "")];
    cols.extend(entropy_columns());
    let mut t = ResultTable::new(cols);
    for &v2 in &v2s {
        let e = run_ensemble(&circuit_params(cfg, n, v2, false, 0.0)?, &opts)?;
        let (mean, std) = e.entropy_stats();
        for (k, &c) in e.cycles.iter().enumerate() {
            t.push_reals(&[v2, c as f64, mean[k], std[k]])?;
        }
    }
    Ok(t)
}

fn check_spins(ns: &[usize]) -> Result<(), CliError> {
    if let Some(n) = ns.iter().find(|&&n| n == 0 || n > MAX_SPINS || n % 2 == 1) {
        return Err(CliError::Config(format!("spin number {n} must be even and in [2, {MAX_SPINS}]")));
    }
    Ok(())
}

fn fig3(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let spins = cfg.spins.clone().unwrap_or_else(|| vec![8, 12, 16]);
    check_spins(&spins)?;
    let rs = cfg.r.clone().unwrap_or_else(|| (0..=8).map(|k| 0.5 * k as f64).collect());
    let mut t = ResultTable::new(vec![
        Column::text("protocol"),
        Column::real("N", ""),
        Column::real("r", ""),
        Column::real("xi2_over_min", ""),
        Column::real("gap", "Γ"),
    ]);
    for (name, adaptive) in [("standard", false), ("adaptive", true)] {
        for &n in &spins {
            let sp = DickeSpace::new(n)?;
            for &r in &rs {
                let p = SqueezeParams { n, r, gamma: cfg.gamma };
                let m = if adaptive { squeezing_adaptive(&p)? } else { squeezing_standard(&p)? };
                let xi = wineland(SpinState::Pure(&squeezing_dark_state(n, r)?), sp)?;
                let ev = spectrum(&build_superoperator(&m)?)?;
                let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
                let gap = gap_from_eigenvalues(&ev, 1e-9 * scale).unwrap_or(0.0);
                t.push_row(vec![name.into(), (n as f64).into(), r.into(), (xi / (2.0 / (n as f64 + 2.0))).into(), gap.into()])?;
            }
        }
    }
    Ok(t)
}

fn fig_s2(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let nl = cfg.local_dim.unwrap_or(4);
    let fr = cfg.s2_fraction.clone().unwrap_or_else(|| vec![0.1, 0.3, 0.5, 0.7, 0.9, 0.95]);
    let seeds = cfg.seeds.unwrap_or(20);
    let mut t = ResultTable::new(vec![
        Column::real("N", ""),
        Column::real("seed", ""),
        Column::real("S2", "nats"),
        Column::real("gap", "Γ"),
        Column::real("with_aux", ""),
    ]);
    for aux in [false, true] {
        for &f in &fr {
            for k in 0..seeds as u64 {
                let s2 = f * (nl as f64).ln();
                let seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
                let (m, _) = random_lindbladian(&RandomModelParams::new(nl, s2, seed, aux)?)?;
                let ev = spectrum(&build_superoperator(&m)?)?;
                let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
                let gap = gap_from_eigenvalues(&ev, 1e-9 * scale).unwrap_or(0.0);
                t.push_reals(&[nl as f64, k as f64, s2, gap, aux as u8 as f64])?;
            }
        }
    }
    Ok(t)
}

fn fig_s5(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let sizes = cfg.chain_sizes.clone().unwrap_or_else(|| vec![2, 3, 4]);
    let v2 = single_v2(cfg, 0.5)?;
    let traj = check_traj(cfg.traj.unwrap_or(500))?;
    let mut t = ResultTable::new(vec![
        Column::real("2n", ""),
        Column::real("xi_n", "cycles"),
        Column::real("amplitude", "nats"),
        Column::real("residual", "nats"),
    ]);
    for &n in &sizes {
        let d = cfg.cycles.unwrap_or((8.0 * 0.66 * (2 * n) as f64).ceil() as usize);
        let e = run_ensemble(&circuit_params(cfg, n, v2, true, 0.0)?, &RunOptions::new(d, traj, cfg.seed))?;
        let (m, _) = e.entropy_stats();
        let series: Vec<(f64, f64)> = e.cycles.iter().zip(&m).map(|(&c, &s)| (c as f64, s)).collect();
        let f = fit_relaxation(&series, n)?;
        t.push_reals(&[(2 * n) as f64, f.xi, f.amplitude, f.residual])?;
    }
    Ok(t)
}

fn fig_s6(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let n = cfg.n.unwrap_or(5);
    let eps = cfg.epsilon.clone().unwrap_or_else(|| vec![0.0, 0.1]);
    let cycles = cfg.cycles.unwrap_or(30);
    let mut t = ResultTable::new(vec![Column::real("epsilon", ""), Column::real("cycle", ""), Column::real("E_N_per_pair", "")]);
    for &e in &eps {
        let mut o = RunOptions::new(cycles, check_traj(cfg.traj.unwrap_or(100))?, cfg.seed);
        o.entropy_stride = cycles;
        o.snapshot_cycles = (0..=cycles).step_by(2).collect();
        let ens = run_ensemble(&circuit_params(cfg, n, single_v2(cfg, 0.5)?, true, e)?, &o)?;
        for (c, en) in ens.log_negativity_per_pair()? {
            t.push_reals(&[e, c as f64, en])?;
        }
    }
    Ok(t)
}

fn fig_s7(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let n = cfg.spins.as_ref().map_or(24, |s| s[0]);
    check_spins(&[n])?;
    let r = cfg.r.as_ref().map_or(2.0, |r| r[0]);
    let eps = cfg.epsilon.clone().unwrap_or_else(|| vec![0.0, 0.1]);
    let sp = DickeSpace::new(n)?;
    let models = squeezing_parity_models(&SqueezeParams { n, r, gamma: cfg.gamma })?;
    let psi0 = sp.state_two_m(n as i64)?;
    let mut t = ResultTable::new(vec![
        Column::real("epsilon", ""),
        Column::real("t", "1/Γ"),
        Column::real("mean_xi2", ""),
        Column::real("std_xi2", ""),
        Column::real("survival", ""),
        Column::real("postselected", ""),
    ]);
    for &e in &eps {
        let mut uc = UnravelingConfig::new(cfg.dt.unwrap_or(1e-5), cfg.t_final.unwrap_or(6.0), cfg.checkpoint.unwrap_or(0.5));
        uc.epsilon = e;
        let recs = mcwf_ensemble(
            &models,
            FeedbackController::adaptive(),
            &psi0,
            &uc,
            &[Observable::Wineland(sp)],
            cfg.seed,
            check_traj(cfg.traj.unwrap_or(100))?,
        )?;
        for (flag, rule) in [(0.0, PostSelect::None), (1.0, PostSelect::EvenDetectedJumps)] {
            let s = ensemble_summary(&recs, rule)?;
            for (k, &tt) in s.times.iter().enumerate() {
                t.push_reals(&[e, tt, s.mean[k][0], s.std[k][0], s.survival, flag])?;
            }
        }
    }
    Ok(t)
}
