//! Monte-Carlo wave-function unraveling with a classical parity controller,
//! missed-record errors and post-selection.

use crate::analysis::{chain_entropy, wineland, wineland_min_quadrature, LogBase, SpinState};
use crate::error::{Error, Result};
use crate::hilbert::{DickeSpace, QubitRegister};
use crate::lindblad::{evolve, Jump, LindbladModel, Register};
use crate::numkernel::{expm, kron, CMatrix, CVector, SparseMatrix, C64, I, ONE};
use crate::table::{Column, ResultTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Largest accepted single-step jump probability.
pub const MAX_STEP_JUMP_PROB: f64 = 0.01;

/// Independent stream for trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackRule {
    /// every detected jump flips P
    FlipOnDetected,
    /// P never changes (non-adaptive control)
    Frozen,
}

/// One classical bit P ∈ {+1, −1} selecting the active jump set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedbackController {
    p: i8,
    rule: FeedbackRule,
}

impl FeedbackController {
    pub fn new(p: i8, rule: FeedbackRule) -> Result<Self> {
        if p != 1 && p != -1 {
            return Err(Error::InvalidParameter(format!("P must be ±1, got {p}")));
        }
        Ok(Self { p, rule })
    }
    pub fn adaptive() -> Self {
        Self { p: 1, rule: FeedbackRule::FlipOnDetected }
    }
    pub fn frozen(p: i8) -> Result<Self> {
        Self::new(p, FeedbackRule::Frozen)
    }
    pub fn p(&self) -> i8 {
        self.p
    }
    /// 0 for P = +1, 1 for P = −1.
    pub fn set_index(&self) -> usize {
        if self.p == 1 {
            0
        } else {
            1
        }
    }
    /// Handles a jump on `_channel`; only detected jumps reach the register.
    pub fn on_jump(&mut self, _channel: usize, detected: bool) -> usize {
        if detected && self.rule == FeedbackRule::FlipOnDetected {
            self.p = -self.p;
        }
        self.set_index()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostSelect {
    None,
    EvenDetectedJumps,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnravelingConfig {
    pub dt: f64,
    pub t_final: f64,
    pub checkpoint_interval: f64,
    pub epsilon: f64,
    pub postselect: PostSelect,
}

impl UnravelingConfig {
    pub fn new(dt: f64, t_final: f64, checkpoint_interval: f64) -> Self {
        Self { dt, t_final, checkpoint_interval, epsilon: 0.0, postselect: PostSelect::None }
    }

    /// (total steps, steps per checkpoint)
    pub fn schedule(&self) -> Result<(usize, usize)> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || !(self.checkpoint_interval > 0.0) {
            return Err(Error::InvalidParameter("dt, T and checkpoint interval must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("ε = {} outside [0,1]", self.epsilon)));
        }
        let steps = (self.t_final / self.dt).round() as usize;
        let every = (self.checkpoint_interval / self.dt).round().max(1.0) as usize;
        if ((steps as f64) * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0)
            || ((every as f64) * self.dt - self.checkpoint_interval).abs() > 1e-9 * self.checkpoint_interval.max(1.0)
        {
            return Err(Error::InvalidParameter("T and checkpoint interval must be multiples of dt".into()));
        }
        Ok((steps, every))
    }

    pub fn checkpoint_times(&self) -> Result<Vec<f64>> {
        let (steps, every) = self.schedule()?;
        Ok((0..=steps).step_by(every).map(|k| k as f64 * self.dt).collect())
    }
}

/// Quantity recorded at checkpoints.
#[derive(Debug, Clone)]
pub enum Observable {
    /// S_vN (nats) between chain A and the rest
    ChainEntropy(QubitRegister),
    /// |⟨target|ψ⟩|²
    Fidelity(CVector),
    /// Wineland parameter along x on a Dicke space (aux traced if present)
    Wineland(DickeSpace),
    WinelandMinQuadrature(DickeSpace),
    /// Re⟨ψ|O|ψ⟩
    Expectation(String, CMatrix),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::ChainEntropy(_) => "S_vN".into(),
            Observable::Fidelity(_) => "fidelity".into(),
            Observable::Wineland(_) => "xi2".into(),
            Observable::WinelandMinQuadrature(_) => "xi2_min_quadrature".into(),
            Observable::Expectation(n, _) => n.clone(),
        }
    }

    pub fn evaluate(&self, psi: &CVector) -> Result<f64> {
        match self {
            Observable::ChainEntropy(reg) => Ok(chain_entropy(psi, reg, LogBase::E)?.value),
            Observable::Fidelity(t) => {
                if t.dim() != psi.dim() {
                    return Err(Error::DimensionMismatch("fidelity target".into()));
                }
                Ok(t.dot(psi).norm_sqr())
            }
            Observable::Wineland(sp) => wineland(SpinState::Pure(psi), *sp),
            Observable::WinelandMinQuadrature(sp) => wineland_min_quadrature(SpinState::Pure(psi), *sp),
            Observable::Expectation(_, o) => {
                if o.rows() != psi.dim() {
                    return Err(Error::DimensionMismatch(format!("observable '{}'", self.name())));
                }
                Ok(psi.expectation(o).re)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
    pub detected: bool,
    /// controller bit after handling the jump
    pub p_after: i8,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub index: u64,
    pub jumps: Vec<JumpEvent>,
    pub checkpoint_times: Vec<f64>,
    /// values[k][j]: observable j at checkpoint k
    pub values: Vec<Vec<f64>>,
    pub observable_names: Vec<String>,
    pub final_state: CVector,
    pub initial_p: i8,
    /// largest jump probability met in a single step
    pub max_step_prob: f64,
}

impl TrajectoryRecord {
    pub fn detected_jumps(&self) -> usize {
        self.jumps.iter().filter(|j| j.detected).count()
    }
    /// Column of one observable across checkpoints.
    pub fn series(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }
    /// True when P flips exactly at detected jumps (adaptive rule).
    pub fn parity_consistent(&self) -> bool {
        let mut p = self.initial_p;
        for e in &self.jumps {
            if e.detected {
                p = -p;
            }
            if e.p_after != p {
                return false;
            }
        }
        true
    }
}

/// Precomputed per-jump-set data.
struct SetCache {
    no_jump: CMatrix,
    ops: Vec<SparseMatrix>,
    rates: Vec<f64>,
}

impl SetCache {
    fn new(m: &LindbladModel, dt: f64) -> Result<Self> {
        let heff = m.effective_hamiltonian();
        let no_jump = expm(&heff.scale(-I * dt), false)?;
        Ok(Self {
            no_jump,
            ops: m.jumps.iter().map(|j| SparseMatrix::from_dense(&j.op, 0.0)).collect(),
            rates: m.jumps.iter().map(|j| j.rate).collect(),
        })
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Runs one trajectory. `models[0]` is active for P = +1, `models[1]` for P = −1.
pub fn mcwf_run(
    models: &[LindbladModel; 2],
    ctrl: FeedbackController,
    psi0: &CVector,
    cfg: &UnravelingConfig,
    observables: &[Observable],
    seed: u64,
    index: u64,
) -> Result<TrajectoryRecord> {
    let caches = prepare(models, psi0, cfg)?;
    run_prepared(&caches, ctrl, psi0, cfg, observables, seed, index)
}

fn prepare(models: &[LindbladModel; 2], psi0: &CVector, cfg: &UnravelingConfig) -> Result<[SetCache; 2]> {
    cfg.schedule()?;
    if models[0].dim() != psi0.dim() || models[1].dim() != psi0.dim() {
        return Err(Error::DimensionMismatch("initial state vs model dimension".into()));
    }
    if models[0].h.max_diff(&models[1].h) > 1e-12 {
        return Err(Error::InvalidParameter("both jump sets must share the Hamiltonian".into()));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("initial state is not normalized".into()));
    }
    Ok([SetCache::new(&models[0], cfg.dt)?, SetCache::new(&models[1], cfg.dt)?])
}

fn run_prepared(
    caches: &[SetCache; 2],
    mut ctrl: FeedbackController,
    psi0: &CVector,
    cfg: &UnravelingConfig,
    observables: &[Observable],
    seed: u64,
    index: u64,
) -> Result<TrajectoryRecord> {
    let (steps, every) = cfg.schedule()?;
    let mut rng = trajectory_rng(seed, index);
    let initial_p = ctrl.p();
    let mut set = ctrl.set_index();
    let mut psi: Vec<C64> = psi0.data().to_vec();
    let mut jumps = Vec::new();
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut max_prob: f64 = 0.0;
    let record = |psi: &[C64], t: f64, times: &mut Vec<f64>, values: &mut Vec<Vec<f64>>| -> Result<()> {
        let v = CVector::from_vec(psi.to_vec());
        times.push(t);
        values.push(observables.iter().map(|o| o.evaluate(&v)).collect::<Result<Vec<_>>>()?);
        Ok(())
    };
    record(&psi, 0.0, &mut times, &mut values)?;
    let mut lpsi: Vec<Vec<C64>> = Vec::new();
    for step in 1..=steps {
        let c = &caches[set];
        lpsi.clear();
        let mut weights = Vec::with_capacity(c.ops.len());
        for (op, &rate) in c.ops.iter().zip(&c.rates) {
            let v = op.matvec(&psi);
            weights.push(rate * norm_sqr(&v));
            lpsi.push(v);
        }
        let total: f64 = weights.iter().sum();
        let p = total * cfg.dt;
        max_prob = max_prob.max(p);
        if p > MAX_STEP_JUMP_PROB {
            return Err(Error::InvalidParameter(format!(
                "step jump probability {p:.3e} exceeds {MAX_STEP_JUMP_PROB}; reduce dt"
            )));
        }
        let t = step as f64 * cfg.dt;
        if rng.random::<f64>() < p {
            let mut x = rng.random::<f64>() * total;
            let mut ch = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if x < *w {
                    ch = k;
                    break;
                }
                x -= w;
            }
            let nrm = weights[ch].sqrt() / c.rates[ch].sqrt();
            psi = lpsi[ch].iter().map(|z| z / nrm).collect();
            let detected = cfg.epsilon == 0.0 || rng.random::<f64>() >= cfg.epsilon;
            set = ctrl.on_jump(ch, detected);
            jumps.push(JumpEvent { time: t, channel: ch, detected, p_after: ctrl.p() });
        } else {
            let next = c.no_jump.apply_slice(&psi);
            let n2 = norm_sqr(&next);
            if !(n2 > 1e-200) {
                return Err(Error::Numeric("state norm underflow".into()));
            }
            if n2 < 1.0 - 2.0 * MAX_STEP_JUMP_PROB {
                return Err(Error::Numeric(format!("no-jump norm loss {:.3e} too large for dt", 1.0 - n2)));
            }
            let s = 1.0 / n2.sqrt();
            psi = next.into_iter().map(|z| z * s).collect();
        }
        if step % every == 0 {
            record(&psi, t, &mut times, &mut values)?;
        }
    }
    Ok(TrajectoryRecord {
        seed,
        index,
        jumps,
        checkpoint_times: times,
        values,
        observable_names: observables.iter().map(|o| o.name()).collect(),
        final_state: CVector::from_vec(psi),
        initial_p,
        max_step_prob: max_prob,
    })
}

/// Runs trajectories 0..n_traj in parallel; output is ordered by index.
pub fn mcwf_ensemble(
    models: &[LindbladModel; 2],
    ctrl: FeedbackController,
    psi0: &CVector,
    cfg: &UnravelingConfig,
    observables: &[Observable],
    seed: u64,
    n_traj: usize,
) -> Result<Vec<TrajectoryRecord>> {
    let caches = prepare(models, psi0, cfg)?;
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| run_prepared(&caches, ctrl, psi0, cfg, observables, seed, i))
        .collect()
}

/// Filters by the post-selection rule; `None` is the identity.
pub fn postselect(records: &[TrajectoryRecord], rule: PostSelect) -> Vec<TrajectoryRecord> {
    match rule {
        PostSelect::None => records.to_vec(),
        PostSelect::EvenDetectedJumps => records.iter().filter(|r| r.detected_jumps() % 2 == 0).cloned().collect(),
    }
}

/// Exact probability of an even number of detected jumps at each time, for the
/// adaptive controller started at P = +1 with missed-record probability `epsilon`.
///
/// The controller bit is appended as a qubit (|0⟩ ↔ P = +1); a detected jump on
/// channel μ applies L_μ of the active set and flips the bit, a missed one leaves it.
/// Since P flips exactly at detections, survival is the weight on bit |0⟩.
pub fn exact_even_detection_probability(
    models: &[LindbladModel; 2],
    psi0: &CVector,
    epsilon: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} outside [0,1]")));
    }
    let (a, b) = (&models[0], &models[1]);
    if a.jumps.len() != b.jumps.len() || a.jumps.iter().zip(&b.jumps).any(|(x, y)| x.rate != y.rate) {
        return Err(Error::InvalidParameter("both jump sets need matching channels and rates".into()));
    }
    if a.h.max_diff(&b.h) > 1e-12 {
        return Err(Error::InvalidParameter("both jump sets must share the Hamiltonian".into()));
    }
    let unit = |i: usize, j: usize| {
        let mut m = CMatrix::zeros(2, 2);
        m[(i, j)] = ONE;
        m
    };
    let mut jumps = Vec::new();
    for (x, y) in a.jumps.iter().zip(&b.jumps) {
        let flip = &kron(&x.op, &unit(1, 0))? + &kron(&y.op, &unit(0, 1))?;
        let stay = &kron(&x.op, &unit(0, 0))? + &kron(&y.op, &unit(1, 1))?;
        if epsilon < 1.0 {
            jumps.push(Jump::new(flip, x.rate * (1.0 - epsilon)));
        }
        if epsilon > 0.0 {
            jumps.push(Jump::new(stay, x.rate * epsilon));
        }
    }
    let d = a.dim();
    let h = kron(&a.h, &CMatrix::identity(2))?;
    let cq = LindbladModel::new(h, jumps, Register::Qudits(vec![d, 2]))?;
    let rho0 = psi0.kron(&CVector::basis(2, 0)).projector();
    Ok(evolve(&cq, &rho0, times)?.iter().map(|r| (0..d).map(|k| r[(2 * k, 2 * k)].re).sum()).collect())
}

/// Per-checkpoint mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    pub n_records: usize,
    pub survival: f64,
}

/// Statistics over the records surviving `rule`.
pub fn ensemble_summary(records: &[TrajectoryRecord], rule: PostSelect) -> Result<EnsembleSummary> {
    let first = records.first().ok_or_else(|| Error::InvalidParameter("no records".into()))?;
    for r in records {
        if r.checkpoint_times != first.checkpoint_times || r.observable_names != first.observable_names {
            return Err(Error::DimensionMismatch("records have mismatched checkpoint schedules".into()));
        }
    }
    let kept = postselect(records, rule);
    let survival = kept.len() as f64 / records.len() as f64;
    let nk = first.checkpoint_times.len();
    let no = first.observable_names.len();
    let mut mean = vec![vec![f64::NAN; no]; nk];
    let mut std = vec![vec![f64::NAN; no]; nk];
    if !kept.is_empty() {
        let n = kept.len() as f64;
        for k in 0..nk {
            for j in 0..no {
                let m = kept.iter().map(|r| r.values[k][j]).sum::<f64>() / n;
                let v = kept.iter().map(|r| (r.values[k][j] - m).powi(2)).sum::<f64>() / n;
                mean[k][j] = m;
                std[k][j] = v.sqrt();
            }
        }
    }
    Ok(EnsembleSummary {
        times: first.checkpoint_times.clone(),
        names: first.observable_names.clone(),
        mean,
        std,
        n_records: kept.len(),
        survival,
    })
}

/// Table with columns t, mean_<obs>, std_<obs>, ..., survival.
pub fn ensemble_stats(records: &[TrajectoryRecord], rule: PostSelect) -> Result<ResultTable> {
    let s = ensemble_summary(records, rule)?;
    let mut cols = vec![Column::real("t", "1/Γ")];
    for n in &s.names {
        cols.push(Column::real(&format!("mean_{n}"), ""));
        cols.push(Column::real(&format!("std_{n}"), ""));
    }
    cols.push(Column::real("survival", ""));
    let mut table = ResultTable::new(cols);
    for k in 0..s.times.len() {
        let mut row = vec![s.times[k]];
        for j in 0..s.names.len() {
            row.push(s.mean[k][j]);
            row.push(s.std[k][j]);
        }
        row.push(s.survival);
        table.push_reals(&row)?;
    }
    table.set_meta("n_records", records.len());
    table.set_meta("n_kept", s.n_records);
    table.set_meta("postselect", format!("{rule:?}"));
    Ok(table)
}

/// Ensemble density matrix Σ|ψ⟩⟨ψ|/n of final states.
pub fn ensemble_density(records: &[TrajectoryRecord]) -> Result<CMatrix> {
    let first = records.first().ok_or_else(|| Error::InvalidParameter("no records".into()))?;
    let d = first.final_state.dim();
    let mut rho = CMatrix::zeros(d, d);
    for r in records {
        rho = &rho + &r.final_state.projector();
    }
    Ok(rho.scale_re(1.0 / records.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::sigma_minus;
    use crate::lindblad::{Jump, Register};
    use crate::numkernel::ZERO;

    fn decay(gamma: f64) -> LindbladModel {
        LindbladModel::new(
            CMatrix::zeros(2, 2),
            vec![Jump::new(sigma_minus(), gamma)],
            Register::Qubits(QubitRegister::chains(0, 1)),
        )
        .unwrap()
    }

    #[test]
    fn dark_initial_state_never_jumps() {
        let m = decay(1.0);
        let psi0 = CVector::basis(2, 0);
        let cfg = UnravelingConfig::new(0.01, 2.0, 0.5);
        let pop = Observable::Expectation("n".into(), CMatrix::from_real_diag(&[0.0, 1.0]));
        let r = mcwf_run(&[m.clone(), m], FeedbackController::adaptive(), &psi0, &cfg, &[pop], 1, 0).unwrap();
        assert!(r.jumps.is_empty());
        assert_eq!(r.checkpoint_times.len(), 5);
        assert!(r.values.iter().all(|v| v[0].abs() < 1e-15));
        assert!((r.final_state.dot(&psi0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_matches_exponential() {
        let m = decay(1.0);
        let psi0 = CVector::basis(2, 1);
        let cfg = UnravelingConfig::new(0.005, 2.0, 0.5);
        let pop = Observable::Expectation("n".into(), CMatrix::from_real_diag(&[0.0, 1.0]));
        let recs = mcwf_ensemble(&[m.clone(), m], FeedbackController::frozen(1).unwrap(), &psi0, &cfg, &[pop], 7, 1000).unwrap();
        let s = ensemble_summary(&recs, PostSelect::None).unwrap();
        for (k, t) in s.times.iter().enumerate() {
            let exact = (-t).exp();
            let sigma = (exact * (1.0 - exact) / 1000.0).sqrt().max(1e-3);
            assert!((s.mean[k][0] - exact).abs() < 3.0 * sigma + 0.01, "t={t}: {} vs {exact}", s.mean[k][0]);
        }
    }

    #[test]
    fn dt_too_large_is_rejected() {
        let m = decay(10.0);
        let cfg = UnravelingConfig::new(0.01, 1.0, 0.5);
        let r = mcwf_run(&[m.clone(), m], FeedbackController::adaptive(), &CVector::basis(2, 1), &cfg, &[], 0, 0);
        assert!(r.is_err());
    }

    #[test]
    fn controller_and_postselect() {
        let mut c = FeedbackController::adaptive();
        assert_eq!(c.on_jump(0, true), 1);
        assert_eq!(c.on_jump(0, false), 1);
        assert_eq!(c.on_jump(1, true), 0);
        let mut f = FeedbackController::frozen(-1).unwrap();
        assert_eq!(f.on_jump(0, true), 1);
        assert!(FeedbackController::new(0, FeedbackRule::Frozen).is_err());

        let mk = |det: usize, v: f64| TrajectoryRecord {
            seed: 0,
            index: 0,
            jumps: (0..det).map(|_| JumpEvent { time: 0.0, channel: 0, detected: true, p_after: 1 }).collect(),
            checkpoint_times: vec![0.0],
            values: vec![vec![v]],
            observable_names: vec!["x".into()],
            final_state: CVector::from_vec(vec![ZERO]),
            initial_p: 1,
            max_step_prob: 0.0,
        };
        let recs = vec![mk(3, 1.0), mk(2, 3.0)];
        assert_eq!(postselect(&recs, PostSelect::None).len(), 2);
        let even = postselect(&recs, PostSelect::EvenDetectedJumps);
        assert_eq!(even.len(), 1);
        assert_eq!(even[0].detected_jumps(), 2);
        let s = ensemble_summary(&recs, PostSelect::None).unwrap();
        assert!((s.mean[0][0] - 2.0).abs() < 1e-15 && (s.std[0][0] - 1.0).abs() < 1e-15);
        let s1 = ensemble_summary(&recs[..1], PostSelect::None).unwrap();
        assert_eq!(s1.mean[0][0], 1.0);
        assert_eq!(s1.std[0][0], 0.0);
        let t = ensemble_stats(&recs, PostSelect::EvenDetectedJumps).unwrap();
        assert_eq!(t.column("survival").unwrap(), vec![0.5]);
    }
}
