//! Statevector simulator for the adaptive brickwork circuit: hopping layers,
//! jump gates through an auxiliary qubit, aux measurement, parity feedback, reset.
//!
//! Layout: A₁..Aₙ, B₁..Bₙ, aux (aux is the least significant bit).
//! Cycle order: U_H1 (odd bonds), U_H2 (even bonds), jump block 1, jump block 2.

use crate::analysis::{chain_entropy, log_negativity, LogBase};
use crate::error::{Error, Result};
use crate::hilbert::{sigma_minus, sigma_plus, QubitRegister, Site};
use crate::numkernel::{expm, kron_all, CMatrix, CVector, C64, I, ZERO};
use crate::table::{Column, ResultTable};
use crate::trajectory::trajectory_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// 2n + 1 qubits at most.
pub const MAX_CIRCUIT_QUBITS: usize = 13;
const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// A = |0…0⟩, B = |1…1⟩: the vacuum of the particle-hole transformed B chain
    GaugeVacuum,
    /// every qubit in |0⟩
    AllZero,
}

/// How the classical record of an aux measurement can be corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordError {
    /// a measured 1 is recorded as 0 with probability ε
    MissOnly,
    /// the recorded bit is flipped with probability ε
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub n: usize,
    pub j: f64,
    pub u: f64,
    pub v: f64,
    pub adaptive: bool,
    pub epsilon: f64,
    /// multiplies the jump-gate exponent
    pub theta: f64,
    /// duration of each hopping layer
    pub layer_time: f64,
    /// sign of the hopping on chain B
    pub sgn_b: f64,
    pub init: InitialState,
    pub record_error: RecordError,
}

impl CircuitParams {
    pub fn new(n: usize, j: f64, v2: f64, adaptive: bool) -> Self {
        Self {
            n,
            j,
            u: (1.0 - v2).sqrt(),
            v: v2.sqrt(),
            adaptive,
            epsilon: 0.0,
            theta: 1.0,
            layer_time: 1.0,
            sgn_b: 1.0,
            init: InitialState::GaugeVacuum,
            record_error: RecordError::MissOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be ≥ 1".into()));
        }
        if 2 * self.n + 1 > MAX_CIRCUIT_QUBITS {
            return Err(Error::ResourceLimit(format!(
                "circuit needs {} qubits, limit is {MAX_CIRCUIT_QUBITS}; use n ≤ {}",
                2 * self.n + 1,
                (MAX_CIRCUIT_QUBITS - 1) / 2
            )));
        }
        if !(self.u >= 0.0 && self.v >= 0.0) || (self.u * self.u + self.v * self.v - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("need u² + v² = 1, got u={} v={}", self.u, self.v)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("ε = {} outside [0,1]", self.epsilon)));
        }
        if self.sgn_b.abs() != 1.0 {
            return Err(Error::InvalidParameter("sgn(B) must be ±1".into()));
        }
        if ![self.j, self.theta, self.layer_time].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite circuit parameter".into()));
        }
        Ok(())
    }

    pub fn register(&self) -> QubitRegister {
        QubitRegister::chains(self.n, 1)
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n + 1
    }
}

/// A dense gate on a few qubits; the first listed qubit is the most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGate {
    pub matrix: CMatrix,
    pub qubits: Vec<usize>,
}

impl LocalGate {
    pub fn apply(&self, psi: &mut [C64], nq: usize) {
        apply_local(psi, &self.matrix, &self.qubits, nq);
    }
}

/// Applies `gate` to qubit positions `qubits` (position 0 is the most significant bit).
pub fn apply_local(psi: &mut [C64], gate: &CMatrix, qubits: &[usize], nq: usize) {
    let k = qubits.len();
    let d = 1usize << k;
    debug_assert_eq!(gate.rows(), d);
    let bits: Vec<usize> = qubits.iter().map(|&q| 1usize << (nq - 1 - q)).collect();
    let mask: usize = bits.iter().sum();
    let offsets: Vec<usize> = (0..d)
        .map(|s| (0..k).filter(|&b| s >> (k - 1 - b) & 1 == 1).map(|b| bits[b]).sum())
        .collect();
    let mut buf = vec![ZERO; d];
    for base in 0..psi.len() {
        if base & mask != 0 {
            continue;
        }
        for s in 0..d {
            buf[s] = psi[base + offsets[s]];
        }
        for r in 0..d {
            let row = gate.row(r);
            let mut acc = ZERO;
            for s in 0..d {
                acc += row[s] * buf[s];
            }
            psi[base + offsets[r]] = acc;
        }
    }
}

/// Gates of one cycle for one value of P.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub h1: Vec<LocalGate>,
    pub h2: Vec<LocalGate>,
    pub jump1: LocalGate,
    pub jump2: LocalGate,
}

impl Gates {
    /// Full 2^(2n+1) matrices (U_H1, U_H2, U_jump1, U_jump2), for checks at small n.
    pub fn to_dense(&self, nq: usize) -> [CMatrix; 4] {
        let dense = |gs: &[&LocalGate]| {
            let d = 1usize << nq;
            let cols: Vec<CVector> = (0..d)
                .map(|c| {
                    let mut v = CVector::basis(d, c).into_vec();
                    for g in gs {
                        g.apply(&mut v, nq);
                    }
                    CVector::from_vec(v)
                })
                .collect();
            CMatrix::from_columns(&cols)
        };
        let h1: Vec<&LocalGate> = self.h1.iter().collect();
        let h2: Vec<&LocalGate> = self.h2.iter().collect();
        [dense(&h1), dense(&h2), dense(&[&self.jump1]), dense(&[&self.jump2])]
    }
}

fn hop_gate(coupling: f64) -> Result<CMatrix> {
    let h = &kron_all(&[&sigma_plus(), &sigma_minus()])? + &kron_all(&[&sigma_minus(), &sigma_plus()])?;
    expm(&h.scale(-I * coupling), true)
}

/// exp(−iθ(σ⁺_aux K + H.c.)) with K = u σ⁻_first − vP σ⁺_second on (first, second, aux).
fn jump_gate(u: f64, v: f64, p: f64, theta: f64) -> Result<CMatrix> {
    let id = crate::hilbert::identity2();
    let k = &kron_all(&[&sigma_minus(), &id])?.scale_re(u) - &kron_all(&[&id, &sigma_plus()])?.scale_re(v * p);
    let g = kron_all(&[&k, &sigma_plus()])?;
    let g = &g + &g.adjoint();
    expm(&g.scale(-I * theta), true)
}

/// U_H1/U_H2 over odd/even bonds of both chains, and the two jump gates built with P.
pub fn build_gates(params: &CircuitParams, p: i8) -> Result<Gates> {
    params.validate()?;
    if p != 1 && p != -1 {
        return Err(Error::InvalidParameter(format!("P must be ±1, got {p}")));
    }
    let n = params.n;
    let ga = hop_gate(params.j * params.layer_time)?;
    let gb = hop_gate(params.sgn_b * params.j * params.layer_time)?;
    let layer = |first: usize| -> Vec<LocalGate> {
        let mut out = Vec::new();
        for (offset, g) in [(0usize, &ga), (n, &gb)] {
            let mut i = first;
            while i + 1 < n {
                out.push(LocalGate { matrix: g.clone(), qubits: vec![offset + i, offset + i + 1] });
                i += 2;
            }
        }
        out
    };
    let aux = 2 * n;
    let jg = jump_gate(params.u, params.v, p as f64, params.theta)?;
    Ok(Gates {
        h1: layer(0),
        h2: layer(1),
        jump1: LocalGate { matrix: jg.clone(), qubits: vec![0, n, aux] },
        jump2: LocalGate { matrix: jg, qubits: vec![n, 0, aux] },
    })
}

/// Gates for P = +1 (index 0) and P = −1 (index 1).
pub fn build_gate_pair(params: &CircuitParams) -> Result<[Gates; 2]> {
    Ok([build_gates(params, 1)?, build_gates(params, -1)?])
}

#[derive(Debug, Clone)]
pub struct CircuitState {
    pub psi: Vec<C64>,
    pub p: i8,
    pub cycle: usize,
    pub rng: ChaCha8Rng,
}

impl CircuitState {
    pub fn new(params: &CircuitParams, seed: u64, index: u64) -> Result<Self> {
        params.validate()?;
        let reg = params.register();
        let excited: Vec<Site> = match params.init {
            InitialState::GaugeVacuum => reg.chain_sites(false),
            InitialState::AllZero => Vec::new(),
        };
        let psi = reg.basis_state(&excited)?.into_vec();
        Ok(Self { psi, p: 1, cycle: 0, rng: trajectory_rng(seed, index) })
    }

    /// System amplitudes with the aux qubit in |0⟩.
    pub fn system_state(&self) -> CVector {
        CVector::from_vec(self.psi.iter().step_by(2).copied().collect())
    }

    pub fn aux_excitation(&self) -> f64 {
        self.psi.iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleReport {
    pub cycle: usize,
    pub measured: [u8; 2],
    pub recorded: [u8; 2],
    pub p_after: i8,
    /// S_vN (nats) between the chains at cycle end
    pub entropy: f64,
}

/// Measures the aux qubit, resets it to |0⟩; returns the outcome.
fn measure_and_reset(st: &mut CircuitState) -> Result<u8> {
    let norm2: f64 = st.psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > NORM_TOL {
        return Err(Error::Numeric(format!("norm loss {:.3e} before measurement", (norm2 - 1.0).abs())));
    }
    // renormalize by the branch weight itself so rounding drift cannot accumulate
    let w1: f64 = st.psi.iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum();
    let one = st.rng.random::<f64>() < w1 / norm2;
    let (src, w) = if one { (1, w1) } else { (0, norm2 - w1) };
    let s = 1.0 / w.sqrt();
    for k in 0..st.psi.len() / 2 {
        st.psi[2 * k] = st.psi[2 * k + src] * s;
        st.psi[2 * k + 1] = ZERO;
    }
    Ok(one as u8)
}

fn record(st: &mut CircuitState, outcome: u8, params: &CircuitParams) -> u8 {
    if params.epsilon == 0.0 {
        return outcome;
    }
    match params.record_error {
        RecordError::MissOnly => {
            if outcome == 1 && st.rng.random::<f64>() < params.epsilon {
                0
            } else {
                outcome
            }
        }
        RecordError::Symmetric => {
            if st.rng.random::<f64>() < params.epsilon {
                1 - outcome
            } else {
                outcome
            }
        }
    }
}

/// One cycle; entropy is evaluated only when `with_entropy`.
pub fn run_cycle_opt(st: &mut CircuitState, gates: &[Gates; 2], params: &CircuitParams, with_entropy: bool) -> Result<CycleReport> {
    if st.aux_excitation() > NORM_TOL {
        return Err(Error::InvalidParameter("aux qubit not in |0⟩ at cycle start".into()));
    }
    let nq = params.n_qubits();
    let g0 = &gates[if st.p == 1 { 0 } else { 1 }];
    for g in g0.h1.iter().chain(&g0.h2) {
        g.apply(&mut st.psi, nq);
    }
    let mut measured = [0u8; 2];
    let mut recorded = [0u8; 2];
    for k in 0..2 {
        let g = &gates[if st.p == 1 { 0 } else { 1 }];
        let jg = if k == 0 { &g.jump1 } else { &g.jump2 };
        jg.apply(&mut st.psi, nq);
        measured[k] = measure_and_reset(st)?;
        recorded[k] = record(st, measured[k], params);
        if recorded[k] == 1 && params.adaptive {
            st.p = -st.p;
        }
    }
    st.cycle += 1;
    let entropy = if with_entropy {
        let reg = QubitRegister::chains(params.n, 0);
        chain_entropy(&st.system_state(), &reg, LogBase::E)?.value
    } else {
        f64::NAN
    };
    Ok(CycleReport { cycle: st.cycle, measured, recorded, p_after: st.p, entropy })
}

pub fn run_cycle(st: &mut CircuitState, gates: &[Gates; 2], params: &CircuitParams) -> Result<CycleReport> {
    run_cycle_opt(st, gates, params, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub cycles: usize,
    pub n_traj: usize,
    pub seed: u64,
    /// entropy is recorded every `entropy_stride` cycles (and at cycle 0)
    pub entropy_stride: usize,
    /// cycles at which system states are kept for ensemble density matrices
    pub snapshot_cycles: Vec<usize>,
}

impl RunOptions {
    pub fn new(cycles: usize, n_traj: usize, seed: u64) -> Self {
        Self { cycles, n_traj, seed, entropy_stride: 1, snapshot_cycles: Vec::new() }
    }
    pub fn entropy_cycles(&self) -> Vec<usize> {
        let s = self.entropy_stride.max(1);
        let mut c: Vec<usize> = (0..=self.cycles).step_by(s).collect();
        if *c.last().unwrap() != self.cycles {
            c.push(self.cycles);
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryOutput {
    pub entropies: Vec<f64>,
    pub reports: Vec<CycleReport>,
    pub snapshots: Vec<CVector>,
    pub final_state: CVector,
    pub final_p: i8,
}

#[derive(Debug, Clone)]
pub struct CircuitEnsemble {
    pub params: CircuitParams,
    pub options: RunOptions,
    pub cycles: Vec<usize>,
    pub trajectories: Vec<TrajectoryOutput>,
}

/// Runs one trajectory with index `index`.
pub fn run_trajectory(params: &CircuitParams, gates: &[Gates; 2], opts: &RunOptions, index: u64) -> Result<TrajectoryOutput> {
    let mut st = CircuitState::new(params, opts.seed, index)?;
    let reg = QubitRegister::chains(params.n, 0);
    let stride = opts.entropy_stride.max(1);
    let mut entropies = vec![chain_entropy(&st.system_state(), &reg, LogBase::E)?.value];
    let mut snapshots = Vec::new();
    if opts.snapshot_cycles.contains(&0) {
        snapshots.push(st.system_state());
    }
    let mut reports = Vec::with_capacity(opts.cycles);
    for c in 1..=opts.cycles {
        let want = c % stride == 0 || c == opts.cycles;
        let rep = run_cycle_opt(&mut st, gates, params, want)?;
        if want {
            entropies.push(rep.entropy);
        }
        if opts.snapshot_cycles.contains(&c) {
            snapshots.push(st.system_state());
        }
        reports.push(rep);
    }
    Ok(TrajectoryOutput { entropies, reports, snapshots, final_state: st.system_state(), final_p: st.p })
}

/// Parallel ensemble; trajectory i uses stream i of the seed.
pub fn run_ensemble(params: &CircuitParams, opts: &RunOptions) -> Result<CircuitEnsemble> {
    params.validate()?;
    if opts.cycles == 0 {
        return Err(Error::InvalidParameter("need at least one cycle".into()));
    }
    let gates = build_gate_pair(params)?;
    let trajectories = (0..opts.n_traj as u64)
        .into_par_iter()
        .map(|i| run_trajectory(params, &gates, opts, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(CircuitEnsemble { params: *params, options: opts.clone(), cycles: opts.entropy_cycles(), trajectories })
}

impl CircuitEnsemble {
    /// (mean, population std) of S_vN at each recorded cycle.
    pub fn entropy_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let nt = self.trajectories.len() as f64;
        let k = self.cycles.len();
        let mut mean = vec![0.0; k];
        let mut std = vec![0.0; k];
        for c in 0..k {
            let m = self.trajectories.iter().map(|t| t.entropies[c]).sum::<f64>() / nt;
            let v = self.trajectories.iter().map(|t| (t.entropies[c] - m).powi(2)).sum::<f64>() / nt;
            mean[c] = m;
            std[c] = v.sqrt();
        }
        (mean, std)
    }

    /// Ensemble density matrix of the system at each snapshot cycle.
    pub fn snapshot_densities(&self) -> Result<Vec<(usize, CMatrix)>> {
        let mut cycles: Vec<usize> = self.options.snapshot_cycles.clone();
        cycles.sort_unstable();
        cycles.dedup();
        cycles.retain(|&c| c <= self.options.cycles);
        let d = 1usize << (2 * self.params.n);
        let nt = self.trajectories.len() as f64;
        let mut out = Vec::new();
        for (k, &c) in cycles.iter().enumerate() {
            let mut rho = vec![ZERO; d * d];
            for t in &self.trajectories {
                let v = t.snapshots[k].data();
                for i in 0..d {
                    if v[i] == ZERO {
                        continue;
                    }
                    let row = &mut rho[i * d..(i + 1) * d];
                    for j in 0..d {
                        row[j] += v[i] * v[j].conj();
                    }
                }
            }
            let rho = CMatrix::from_vec(d, d, rho)?.scale_re(1.0 / nt);
            out.push((c, rho));
        }
        Ok(out)
    }

    /// Log-negativity per pair, E_N / n, of the ensemble state at each snapshot.
    pub fn log_negativity_per_pair(&self) -> Result<Vec<(usize, f64)>> {
        let reg = QubitRegister::chains(self.params.n, 0);
        let part = reg.chain_sites(true);
        self.snapshot_densities()?
            .into_iter()
            .map(|(c, rho)| Ok((c, log_negativity(&rho, &part, &reg)? / self.params.n as f64)))
            .collect()
    }

    /// Columns: cycle, mean_S_vN, std_S_vN.
    pub fn entropy_table(&self) -> Result<ResultTable> {
        let (mean, std) = self.entropy_stats();
        let mut t = ResultTable::new(vec![
            Column::real("cycle", ""),
            Column::real("mean_S_vN", "nats"),
            Column::real("std_S_vN", "nats"),
        ]);
        for (k, &c) in self.cycles.iter().enumerate() {
            t.push_reals(&[c as f64, mean[k], std[k]])?;
        }
        t.set_meta("n_traj", self.trajectories.len());
        t.set_meta("seed", self.options.seed);
        Ok(t)
    }

    /// True when every trajectory's S_vN never drops by more than `tol`.
    pub fn monotone(&self, tol: f64) -> bool {
        self.trajectories.iter().all(|t| t.entropies.windows(2).all(|w| w[1] >= w[0] - tol))
    }
}

/// Per-cycle ensemble mean/std of S_vN over `n_traj` trajectories.
pub fn run_circuit(params: &CircuitParams, d: usize, seed: u64, n_traj: usize) -> Result<ResultTable> {
    run_ensemble(params, &RunOptions::new(d, n_traj, seed))?.entropy_table()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{embed, parity_of, sigma_z};

    #[test]
    fn zero_hopping_gives_identity_layers() {
        let p = CircuitParams::new(3, 0.0, 0.5, true);
        let g = build_gates(&p, 1).unwrap();
        let [h1, h2, j1, j2] = g.to_dense(7);
        assert!(h1.max_diff(&CMatrix::identity(128)) < 1e-14);
        assert!(h2.max_diff(&CMatrix::identity(128)) < 1e-14);
        for u in [j1, j2] {
            assert!(u.adjoint().matmul(&u).max_diff(&CMatrix::identity(128)) < 1e-10);
        }
    }

    #[test]
    fn v_zero_jump_is_excitation_swap() {
        // on the (|1⟩_A|0⟩_aux, |0⟩_A|1⟩_aux) block: cos 1 on the diagonal, −i sin 1 off it
        let p = CircuitParams::new(1, 1.0, 0.0, true);
        let g = build_gates(&p, 1).unwrap();
        let m = &g.jump1.matrix;
        // basis (A, B, aux): |1,0,0⟩ = 4, |0,0,1⟩ = 1
        let (c, s) = (1f64.cos(), 1f64.sin());
        assert!((m[(4, 4)] - C64::new(c, 0.0)).norm() < 1e-12);
        assert!((m[(1, 4)] - C64::new(0.0, -s)).norm() < 1e-12);
        assert!((m[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn parity_gates_differ_by_sigma_z_conjugation() {
        let p = CircuitParams::new(2, 1.0, 0.3, true);
        let reg = p.register();
        // jump 1 carries σ⁺ on B₁, jump 2 carries it on A₁
        let zb = embed(&sigma_z(), &[Site::B(1)], &reg).unwrap();
        let za = embed(&sigma_z(), &[Site::A(1)], &reg).unwrap();
        let plus = build_gates(&p, 1).unwrap().to_dense(5);
        let minus = build_gates(&p, -1).unwrap().to_dense(5);
        for (k, z) in [(2, &zb), (3, &za)] {
            let conj = z.matmul(&plus[k]).matmul(z);
            assert!(conj.max_diff(&minus[k]) < 1e-12);
        }
    }

    #[test]
    fn v_zero_from_vacuum_never_clicks() {
        let mut p = CircuitParams::new(2, 1.0, 0.0, true);
        p.init = InitialState::AllZero;
        let gates = build_gate_pair(&p).unwrap();
        let mut st = CircuitState::new(&p, 3, 0).unwrap();
        let before = st.psi.clone();
        for _ in 0..5 {
            let r = run_cycle(&mut st, &gates, &p).unwrap();
            assert_eq!(r.measured, [0, 0]);
        }
        let diff: f64 = st.psi.iter().zip(&before).map(|(a, b)| (a - b).norm()).sum();
        assert!(diff < 1e-12);
    }

    #[test]
    fn first_jump_matches_dense_oracle() {
        // n = 1 has no bonds; compare the first jump block with the full 8x8 exponential
        let p = CircuitParams::new(1, 1.0, 0.5, true);
        let gates = build_gate_pair(&p).unwrap();
        let reg = p.register();
        let sp_aux = embed(&sigma_plus(), &[Site::Aux(0)], &reg).unwrap();
        let k = &embed(&sigma_minus(), &[Site::A(1)], &reg).unwrap().scale_re(p.u)
            - &embed(&sigma_plus(), &[Site::B(1)], &reg).unwrap().scale_re(p.v);
        let g = sp_aux.matmul(&k);
        let u = expm(&(&g + &g.adjoint()).scale(-I), true).unwrap();
        let psi0 = reg.basis_state(&[Site::B(1)]).unwrap();
        let out = u.apply(&psi0);
        let p1: f64 = out.data().iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum();
        // K annihilates |0⟩_A|1⟩_B, so the first block cannot fire
        assert!(p1.abs() < 1e-12);
        let mut st = CircuitState::new(&p, 0, 0).unwrap();
        gates[0].jump1.apply(&mut st.psi, 3);
        let d: f64 = st.psi.iter().zip(out.data()).map(|(a, b)| (a - b).norm()).sum();
        assert!(d < 1e-12);
        // from all-zero G couples |000⟩ to |011⟩ (amplitude −v), which couples to |110⟩ (u):
        // a three-level system with frequency √(u²+v²) = 1, so p1 = v² sin²1
        let psi0 = CVector::basis(8, 0);
        let out = u.apply(&psi0);
        let p1: f64 = out.data().iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum();
        assert!((p1 - p.v * p.v * 1f64.sin().powi(2)).abs() < 1e-12);
        let mut v = psi0.into_vec();
        gates[0].jump1.apply(&mut v, 3);
        let d: f64 = v.iter().zip(out.data()).map(|(a, b)| (a - b).norm()).sum();
        assert!(d < 1e-12);
    }

    #[test]
    fn physical_parity_tracks_classical_bit() {
        for init in [InitialState::GaugeVacuum, InitialState::AllZero] {
            let mut p = CircuitParams::new(2, 1.0, 0.5, true);
            p.init = init;
            let gates = build_gate_pair(&p).unwrap();
            let sys = QubitRegister::chains(2, 0);
            let par = parity_of(&sys.system_sites(), &sys).unwrap();
            for seed in 0..5 {
                let mut st = CircuitState::new(&p, seed, 0).unwrap();
                let p0 = st.system_state().expectation(&par).re;
                for _ in 0..20 {
                    let r = run_cycle(&mut st, &gates, &p).unwrap();
                    let now = st.system_state().expectation(&par).re;
                    assert!((now - r.p_after as f64 * p0).abs() < 1e-10);
                    assert!(st.aux_excitation() < 1e-14);
                    assert!((st.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let p = CircuitParams::new(2, 1.0, 0.5, true);
        let o = RunOptions::new(10, 4, 99);
        let a = run_ensemble(&p, &o).unwrap();
        let b = run_ensemble(&p, &o).unwrap();
        for (x, y) in a.trajectories.iter().zip(&b.trajectories) {
            assert_eq!(x.reports, y.reports);
        }
    }

    #[test]
    fn resource_limit() {
        let p = CircuitParams::new(7, 1.0, 0.5, true);
        assert!(matches!(p.validate(), Err(Error::ResourceLimit(_))));
    }
}
