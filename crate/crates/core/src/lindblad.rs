//! Lindblad generators ℒρ = −i[H,ρ] + Σ Γ (LρL† − ½{L†L,ρ}).
//!
//! Vectorization is column stacking: ρ[i,j] lives at index j·D + i and
//! vec(AρB) = (Bᵀ⊗A)·vec(ρ). The superoperator is stored sparse; its
//! sparsity graph splits into invariant blocks (symmetry sectors), and all
//! dense work (spectra, propagation) is done blockwise.

use crate::error::{Error, Result};
use crate::hilbert::{DickeSpace, QubitRegister};
use crate::numkernel::{
    eig, expm, null_space, smallest_right_singular_vectors, solve, CMatrix, CVector, SparseMatrix, C64, I, ZERO,
};
use rayon::prelude::*;

/// Hilbert space a model lives on.
#[derive(Debug, Clone, PartialEq)]
pub enum Register {
    Qubits(QubitRegister),
    Dicke(DickeSpace),
    /// Dicke space ⊗ one auxiliary qubit (aux is the least significant factor).
    DickeAux(DickeSpace),
    /// Generic tensor product of qudits, first factor most significant.
    Qudits(Vec<usize>),
}

impl Register {
    pub fn dim(&self) -> usize {
        match self {
            Register::Qubits(r) => r.dim(),
            Register::Dicke(d) => d.dim(),
            Register::DickeAux(d) => 2 * d.dim(),
            Register::Qudits(ds) => ds.iter().product(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub op: CMatrix,
    pub rate: f64,
}

impl Jump {
    pub fn new(op: CMatrix, rate: f64) -> Self {
        Self { op, rate }
    }
}

/// Hamiltonian plus weighted jump operators on a register.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    pub h: CMatrix,
    pub jumps: Vec<Jump>,
    pub register: Register,
}

pub const HERMITIAN_TOL: f64 = 1e-10;

impl LindbladModel {
    pub fn new(h: CMatrix, jumps: Vec<Jump>, register: Register) -> Result<Self> {
        let d = register.dim();
        if h.rows() != d || h.cols() != d {
            return Err(Error::DimensionMismatch(format!("H is {}x{}, register dim {d}", h.rows(), h.cols())));
        }
        let herr = h.hermiticity_error();
        if herr > HERMITIAN_TOL * (1.0 + h.max_abs()) {
            return Err(Error::NotHermitian(herr));
        }
        for (k, j) in jumps.iter().enumerate() {
            if j.op.rows() != d || j.op.cols() != d {
                return Err(Error::DimensionMismatch(format!("jump {k} has wrong dimension")));
            }
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(Error::InvalidParameter(format!("jump {k} rate {} must be finite and ≥ 0", j.rate)));
            }
            if !j.op.is_finite() {
                return Err(Error::Numeric(format!("jump {k} has non-finite entries")));
            }
        }
        Ok(Self { h, jumps, register })
    }

    pub fn dim(&self) -> usize {
        self.register.dim()
    }

    /// H_eff = H − (i/2) Σ Γ L†L
    pub fn effective_hamiltonian(&self) -> CMatrix {
        let mut heff = self.h.clone();
        for j in &self.jumps {
            let k = j.op.adjoint().matmul(&j.op);
            heff = &heff - &k.scale(C64::new(0.0, 0.5 * j.rate));
        }
        heff
    }

    /// Applies ℒ to a density matrix directly (no superoperator).
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = (&self.h.matmul(rho) - &rho.matmul(&self.h)).scale(-I);
        for j in &self.jumps {
            let l = &j.op;
            let ld = l.adjoint();
            let k = ld.matmul(l);
            let term = &l.matmul(rho).matmul(&ld) - &k.anticommutator(rho).scale_re(0.5);
            out = &out + &term.scale_re(j.rate);
        }
        out
    }
}

pub fn vectorize(rho: &CMatrix) -> Vec<C64> {
    let d = rho.rows();
    let mut v = vec![ZERO; d * rho.cols()];
    for i in 0..d {
        for j in 0..rho.cols() {
            v[j * d + i] = rho[(i, j)];
        }
    }
    v
}

pub fn unvectorize(v: &[C64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[j * d + i])
}

/// Sparse D²×D² generator in column-stacking convention.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub matrix: SparseMatrix,
    pub dim: usize,
}

fn nonzeros(a: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let v = a[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

const DROP_TOL: f64 = 1e-14;

/// ℒ = −i(I⊗H − Hᵀ⊗I) + Σ Γ[L̄⊗L − ½ I⊗L†L − ½ (L†L)ᵀ⊗I]
pub fn build_superoperator(m: &LindbladModel) -> Result<Superoperator> {
    let d = m.dim();
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    // K collects H_eff pieces acting from the left: −iH − ½ΣΓL†L
    let mut left = m.h.scale(-I);
    for j in &m.jumps {
        if j.rate == 0.0 {
            continue;
        }
        let k = j.op.adjoint().matmul(&j.op);
        left = &left - &k.scale_re(0.5 * j.rate);
        let nz = nonzeros(&j.op);
        for &(a, b, x) in &nz {
            let xc = x.conj() * j.rate;
            for &(c, e, y) in &nz {
                trip.push((a * d + c, b * d + e, xc * y));
            }
        }
    }
    // right action: ρ ↦ ρ·(+iH − ½ΣΓL†L) = ρ·left†
    let right = left.adjoint();
    for (a, b, x) in nonzeros(&left) {
        // I⊗left
        for jcol in 0..d {
            trip.push((jcol * d + a, jcol * d + b, x));
        }
    }
    for (a, b, x) in nonzeros(&right) {
        // rightᵀ⊗I: entry (b·D + i, a·D + i) = right[a,b]
        for i in 0..d {
            trip.push((b * d + i, a * d + i, x));
        }
    }
    let matrix = SparseMatrix::from_triplets(d * d, d * d, trip, DROP_TOL);
    Ok(Superoperator { matrix, dim: d })
}

impl Superoperator {
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvectorize(&self.matrix.matvec(&vectorize(rho)), self.dim)
    }

    /// ‖vec(I)†ℒ‖∞, which vanishes for trace-preserving generators.
    pub fn trace_defect(&self) -> f64 {
        let id = vectorize(&CMatrix::identity(self.dim));
        self.matrix.left_matvec(&id).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        self.matrix.connected_blocks()
    }

    pub fn largest_block(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).max().unwrap_or(0)
    }
}

/// Spectrum, zero modes and dissipative gap.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub zero_modes: Vec<CVector>,
    /// Hermitian unit-trace steady states built from the zero modes.
    pub steady_states: Vec<CMatrix>,
    /// smallest |Re λ| above the zero threshold; `None` for generators with no
    /// relaxing mode (e.g. purely unitary models)
    pub gap: Option<f64>,
    /// absolute zero threshold actually used
    pub ztol: f64,
}

impl SpectralData {
    pub fn is_degenerate(&self) -> bool {
        self.zero_modes.len() > 1
    }
    pub fn gap_or_err(&self) -> Result<f64> {
        self.gap.ok_or_else(|| Error::Numeric("no relaxing mode: dissipative gap undefined".into()))
    }
}

/// Default relative zero tolerance (scaled by max(1, max|λ|)).
pub const ZTOL_REL: f64 = 1e-9;

/// Largest block handed to the dense eigensolver.
pub const MAX_BLOCK: usize = 4096;

/// Eigenvalues only, block by block.
pub fn spectrum(s: &Superoperator) -> Result<Vec<C64>> {
    let blocks = s.blocks();
    check_blocks(&blocks)?;
    let parts: Vec<Result<Vec<C64>>> =
        blocks.par_iter().map(|b| Ok(eig(&s.matrix.submatrix(b), false, false)?.values)).collect();
    let mut out = Vec::with_capacity(s.dim * s.dim);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn check_blocks(blocks: &[Vec<usize>]) -> Result<()> {
    let big = blocks.iter().map(|b| b.len()).max().unwrap_or(0);
    if big > MAX_BLOCK {
        return Err(Error::ResourceLimit(format!(
            "largest invariant block has {big} entries (limit {MAX_BLOCK})"
        )));
    }
    Ok(())
}

/// Gap = min |Re λ| over eigenvalues with |Re λ| > ztol.
pub fn gap_from_eigenvalues(ev: &[C64], ztol: f64) -> Option<f64> {
    ev.iter().map(|z| z.re.abs()).filter(|&x| x > ztol).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |y| y.min(x))))
}

/// Full spectral analysis. `ztol_rel` defaults to [`ZTOL_REL`].
pub fn spectral_data(s: &Superoperator, ztol_rel: Option<f64>) -> Result<SpectralData> {
    let blocks = s.blocks();
    check_blocks(&blocks)?;
    let per_block: Vec<Result<(CMatrix, Vec<C64>)>> = blocks
        .par_iter()
        .map(|b| {
            let m = s.matrix.submatrix(b);
            let v = eig(&m, false, false)?.values;
            Ok((m, v))
        })
        .collect();
    let mut mats = Vec::with_capacity(blocks.len());
    let mut eigenvalues = Vec::new();
    let mut block_vals = Vec::new();
    for p in per_block {
        let (m, v) = p?;
        eigenvalues.extend_from_slice(&v);
        mats.push(m);
        block_vals.push(v);
    }
    let scale = eigenvalues.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let ztol = ztol_rel.unwrap_or(ZTOL_REL) * scale;
    let gap = gap_from_eigenvalues(&eigenvalues, ztol);
    let d = s.dim;
    let mut zero_modes = Vec::new();
    for ((b, m), vals) in blocks.iter().zip(&mats).zip(&block_vals) {
        let k = vals.iter().filter(|z| z.norm() <= ztol).count();
        if k == 0 {
            continue;
        }
        for (_, v) in smallest_right_singular_vectors(m, k)? {
            let mut full = vec![ZERO; d * d];
            for (a, &idx) in b.iter().enumerate() {
                full[idx] = v[a];
            }
            let res = s.matrix.matvec(&full).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if res > ztol.max(1e-9) {
                return Err(Error::Numeric(format!("zero mode residual {res:.3e} above tolerance")));
            }
            zero_modes.push(CVector::from_vec(full));
        }
    }
    if zero_modes.is_empty() {
        return Err(Error::NoZeroMode(ztol));
    }
    let mut steady_states = Vec::new();
    for z in &zero_modes {
        let rho = unvectorize(z.data(), d);
        let tr = rho.trace();
        if tr.norm() > 1e-8 * z.norm() {
            let r = rho.scale(1.0 / tr);
            steady_states.push(hermitize(&r));
        }
    }
    Ok(SpectralData { eigenvalues, zero_modes, steady_states, gap, ztol })
}

pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + &a.adjoint()).scale_re(0.5)
}

/// Pure steady state annihilated by every jump (rate > 0) and invariant under
/// H. `Ok(None)` if no such state exists; an error if it is not unique.
pub fn steady_state_dark(m: &LindbladModel) -> Result<Option<CVector>> {
    let d = m.dim();
    let ops: Vec<&CMatrix> = m.jumps.iter().filter(|j| j.rate > 0.0).map(|j| &j.op).collect();
    let tol = 1e-9;
    // W: orthonormal basis of ker(L stack)
    let mut w: Vec<CVector> = if ops.is_empty() {
        (0..d).map(|k| CVector::basis(d, k)).collect()
    } else {
        null_space(&CMatrix::vstack(&ops)?, tol)?
    };
    // shrink to the largest H-invariant subspace inside the kernel
    for _ in 0..=d {
        if w.is_empty() {
            return Ok(None);
        }
        let wm = CMatrix::from_columns(&w);
        let hw = m.h.matmul(&wm);
        let proj = wm.matmul(&wm.adjoint().matmul(&hw));
        let q = &hw - &proj;
        if q.max_abs() <= tol * (1.0 + m.h.max_abs()) {
            break;
        }
        let ker = null_space(&q, tol)?;
        let next: Vec<CVector> = ker.iter().map(|x| wm.apply(x)).collect();
        if next.len() == w.len() {
            break;
        }
        w = orthonormalize(&next);
    }
    match w.len() {
        0 => Ok(None),
        1 => Ok(Some(w[0].normalized()?)),
        k => {
            // several dark states: the eigen-split is ambiguous, report it
            Err(Error::DegenerateKernel(k))
        }
    }
}

fn orthonormalize(vs: &[CVector]) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::new();
    for v in vs {
        let mut u = v.clone();
        for q in &out {
            let c = q.dot(&u);
            u = u.sub(&q.scale(c));
        }
        if u.norm() > 1e-10 {
            out.push(u.normalized().expect("nonzero"));
        }
    }
    out
}

/// Backend switch: spectral propagation up to this many superoperator entries per side.
pub const SPECTRAL_LIMIT: usize = 4096;

/// Density matrices e^{ℒt}ρ₀ at each requested time.
pub fn evolve(m: &LindbladModel, rho0: &CMatrix, times: &[f64]) -> Result<Vec<CMatrix>> {
    let d = m.dim();
    check_state(rho0, d, 1e-10)?;
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("times must be finite and non-negative".into()));
    }
    let s = build_superoperator(m)?;
    let out = if d * d <= SPECTRAL_LIMIT {
        evolve_spectral(&s, rho0, times)?
    } else {
        evolve_rk4(&s, rho0, times, 1e-10)?
    };
    for r in &out {
        check_state(r, d, 1e-8)?;
    }
    Ok(out)
}

fn check_state(rho: &CMatrix, d: usize, tol: f64) -> Result<()> {
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch("density matrix dimension".into()));
    }
    let herr = rho.hermiticity_error();
    if herr > tol {
        return Err(Error::NotHermitian(herr));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol.max(1e-8) || tr.im.abs() > tol.max(1e-8) {
        return Err(Error::Numeric(format!("trace {tr} deviates from 1")));
    }
    let ev = eig(&hermitize(rho), true, false)?;
    let min = ev.values.last().map(|z| z.re).unwrap_or(0.0);
    if min < -1e-6 {
        return Err(Error::Numeric(format!("negative eigenvalue {min:.3e} in density matrix")));
    }
    Ok(())
}

/// Spectral propagation per invariant block: x(t) = V e^{Λt} V⁻¹ x₀, with a
/// direct Pade exponential fallback when the eigenbasis is ill-conditioned.
pub fn evolve_spectral(s: &Superoperator, rho0: &CMatrix, times: &[f64]) -> Result<Vec<CMatrix>> {
    let d = s.dim;
    let x0 = vectorize(rho0);
    let mut outs = vec![vec![ZERO; d * d]; times.len()];
    for b in s.blocks() {
        let xb: Vec<C64> = b.iter().map(|&i| x0[i]).collect();
        if xb.iter().all(|z| *z == ZERO) {
            continue;
        }
        let m = s.matrix.submatrix(&b);
        let n = b.len();
        let evd = eig(&m, false, true)?;
        let v = evd.right_vectors.expect("vectors requested");
        let rhs = CMatrix::from_fn(n, 1, |i, _| xb[i]);
        let spectral_ok = solve(&v, &rhs).ok().and_then(|c| {
            let back = v.matmul(&c);
            let err = (0..n).map(|i| (back[(i, 0)] - xb[i]).norm()).fold(0.0, f64::max);
            (err < 1e-10 && c.max_abs() < 1e8).then_some(c)
        });
        for (ti, &t) in times.iter().enumerate() {
            let xt: Vec<C64> = match &spectral_ok {
                Some(c) => {
                    let ct = CMatrix::from_fn(n, 1, |k, _| c[(k, 0)] * (evd.values[k] * t).exp());
                    let r = v.matmul(&ct);
                    (0..n).map(|i| r[(i, 0)]).collect()
                }
                None => expm(&m.scale_re(t), false)?.apply_slice(&xb),
            };
            for (a, &idx) in b.iter().enumerate() {
                outs[ti][idx] = xt[a];
            }
        }
    }
    Ok(outs.into_iter().map(|x| hermitize(&unvectorize(&x, d))).collect())
}

/// Classical RK4 with step-doubling error control on the sparse generator.
pub fn evolve_rk4(s: &Superoperator, rho0: &CMatrix, times: &[f64], tol: f64) -> Result<Vec<CMatrix>> {
    let d = s.dim;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|a, b| times[*a].partial_cmp(&times[*b]).unwrap());
    let mut x = vectorize(rho0);
    let mut t = 0.0;
    let mut h = 0.5 / s.matrix.norm_inf().max(1e-12);
    let mut outs: Vec<Option<CMatrix>> = vec![None; times.len()];
    let step = |x: &[C64], h: f64| -> Vec<C64> {
        let k1 = s.matrix.matvec(x);
        let y: Vec<C64> = x.iter().zip(&k1).map(|(a, k)| a + k * (0.5 * h)).collect();
        let k2 = s.matrix.matvec(&y);
        let y: Vec<C64> = x.iter().zip(&k2).map(|(a, k)| a + k * (0.5 * h)).collect();
        let k3 = s.matrix.matvec(&y);
        let y: Vec<C64> = x.iter().zip(&k3).map(|(a, k)| a + k * h).collect();
        let k4 = s.matrix.matvec(&y);
        (0..x.len()).map(|i| x[i] + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0)).collect()
    };
    for &oi in &order {
        let target = times[oi];
        while t < target {
            let hh = h.min(target - t);
            let full = step(&x, hh);
            let half = step(&step(&x, 0.5 * hh), 0.5 * hh);
            let err = full.iter().zip(&half).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if err > tol * hh.max(1e-3) && hh > 1e-12 {
                h = 0.5 * hh;
                if h < 1e-12 {
                    return Err(Error::Numeric("RK4 step-size underflow".into()));
                }
                continue;
            }
            x = half;
            t += hh;
            if err < 0.05 * tol * hh.max(1e-3) {
                h = (2.0 * hh).max(h);
            }
        }
        outs[oi] = Some(hermitize(&unvectorize(&x, d)));
    }
    Ok(outs.into_iter().map(|o| o.expect("filled")).collect())
}

/// F = ⟨ψ|ρ|ψ⟩ for a pure reference state.
pub fn fidelity(rho: &CMatrix, psi: &CVector) -> Result<f64> {
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("fidelity reference state is not normalized".into()));
    }
    if rho.rows() != psi.dim() {
        return Err(Error::DimensionMismatch("fidelity dimensions".into()));
    }
    Ok(psi.expectation(rho).re.clamp(0.0, 1.0))
}

/// var(L + L†) at a dark state ψ of L, which bounds the fidelity growth rate.
/// Also re-evaluates with L → e^{iπ/3}L and insists on equality.
pub fn variance_rate_bound(l: &CMatrix, psi: &CVector) -> Result<f64> {
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("state is not normalized".into()));
    }
    let res = l.apply(psi).norm();
    if res > 1e-8 * (1.0 + l.max_abs()) {
        return Err(Error::InvalidParameter(format!("state is not annihilated by L (residual {res:.3e})")));
    }
    let var = |op: &CMatrix| {
        let x = op + &op.adjoint();
        let m = psi.expectation(&x).re;
        psi.expectation(&x.matmul(&x)).re - m * m
    };
    let v0 = var(l);
    let phase = C64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let v1 = var(&l.scale(phase));
    if (v0 - v1).abs() > 1e-10 * (1.0 + v0.abs()) {
        return Err(Error::Numeric(format!("gauge invariance violated: {v0} vs {v1}")));
    }
    Ok(v0)
}
