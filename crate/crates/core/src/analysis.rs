//! Entanglement and metrology figures of merit plus the relaxation fit.

use crate::error::{Error, Result};
use crate::hilbert::{dicke_operators, partial_transpose, DickeSpace, QubitRegister, Site};
use crate::models::squeezing_dark_state;
use crate::numkernel::{eig, singular_values, trace_norm, CMatrix, CVector, C64, ZERO};

/// Values below this are dropped from entropy sums.
pub const PROB_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    E,
    Two,
}

/// An entropy tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropy {
    pub value: f64,
    pub base: LogBase,
}

impl Entropy {
    pub fn nats(&self) -> f64 {
        match self.base {
            LogBase::E => self.value,
            LogBase::Two => self.value * std::f64::consts::LN_2,
        }
    }
    pub fn bits(&self) -> f64 {
        match self.base {
            LogBase::E => self.value / std::f64::consts::LN_2,
            LogBase::Two => self.value,
        }
    }
}

/// Schmidt coefficients, descending, Σc² = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub coefficients: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn from_coefficients(mut c: Vec<f64>) -> Result<Self> {
        if c.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidParameter("Schmidt coefficients must be non-negative".into()));
        }
        c.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let s: f64 = c.iter().map(|x| x * x).sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("Σc² = {s} ≠ 1")));
        }
        Ok(Self { coefficients: c })
    }
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }
    pub fn entropy(&self, base: LogBase) -> Entropy {
        entropy_of_probabilities(&self.probabilities(), base)
    }
}

pub fn entropy_of_probabilities(p: &[f64], base: LogBase) -> Entropy {
    let nats: f64 = p.iter().filter(|&&x| x > PROB_FLOOR).map(|&x| -x * x.ln()).sum::<f64>() + 0.0; // + 0.0 turns -0 into 0
    match base {
        LogBase::E => Entropy { value: nats, base },
        LogBase::Two => Entropy { value: nats / std::f64::consts::LN_2, base },
    }
}

/// Schmidt spectrum of a pure state across (part | rest).
pub fn schmidt_spectrum(psi: &CVector, part: &[Site], reg: &QubitRegister) -> Result<SchmidtSpectrum> {
    if part.is_empty() || part.len() >= reg.n_qubits() {
        return Err(Error::InvalidParameter("bipartition must be a proper non-empty subset".into()));
    }
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("state is not normalized".into()));
    }
    let m = crate::hilbert::bipartite_matrix(psi, part, reg)?;
    let s = singular_values(&m)?;
    let tot: f64 = s.iter().map(|x| x * x).sum();
    let s: Vec<f64> = s.iter().map(|x| x / tot.sqrt()).collect();
    SchmidtSpectrum::from_coefficients(s)
}

/// von Neumann entropy of the reduced state on `part`.
pub fn entanglement_entropy(psi: &CVector, part: &[Site], reg: &QubitRegister, base: LogBase) -> Result<Entropy> {
    Ok(schmidt_spectrum(psi, part, reg)?.entropy(base))
}

/// Entropy between chain A and everything else (chain B plus any aux qubit).
pub fn chain_entropy(psi: &CVector, reg: &QubitRegister, base: LogBase) -> Result<Entropy> {
    entanglement_entropy(psi, &reg.chain_sites(true), reg, base)
}

/// (S₂, δE₂) with S₂ = −ln tr ρ_A² and δE₂ = e^{−S₂} − 1/N.
pub fn renyi2_and_delta_e2(rho_a: &CMatrix, n: usize) -> Result<(f64, f64)> {
    if rho_a.rows() != n || rho_a.cols() != n {
        return Err(Error::DimensionMismatch(format!("ρ_A is {}x{}, expected local dimension {n}", rho_a.rows(), rho_a.cols())));
    }
    let tr = rho_a.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("trace {tr} deviates from 1")));
    }
    let purity: f64 = rho_a.data().iter().map(|z| z.norm_sqr()).sum::<f64>();
    let s2 = -purity.ln();
    let de2 = (purity - 1.0 / n as f64).max(0.0);
    Ok((s2, de2))
}

/// E_N = log₂‖ρ^{T_part}‖₁
pub fn log_negativity(rho: &CMatrix, part: &[Site], reg: &QubitRegister) -> Result<f64> {
    if part.is_empty() || part.len() >= reg.n_qubits() {
        return Err(Error::InvalidParameter("bipartition must be a proper non-empty subset".into()));
    }
    let pt = partial_transpose(rho, part, reg)?;
    Ok(trace_norm(&pt)?.log2().max(0.0))
}

/// A state on the Dicke space (or Dicke ⊗ aux, traced automatically).
#[derive(Debug, Clone, Copy)]
pub enum SpinState<'a> {
    Pure(&'a CVector),
    Mixed(&'a CMatrix),
}

/// Reduces a Dicke ⊗ aux density matrix to the Dicke factor.
pub fn trace_out_aux(rho: &CMatrix) -> Result<CMatrix> {
    if rho.rows() % 2 != 0 || !rho.is_square() {
        return Err(Error::DimensionMismatch("Dicke ⊗ aux state must have even dimension".into()));
    }
    let d = rho.rows() / 2;
    Ok(CMatrix::from_fn(d, d, |i, j| rho[(2 * i, 2 * j)] + rho[(2 * i + 1, 2 * j + 1)]))
}

fn spin_density(state: SpinState<'_>, space: DickeSpace) -> Result<CMatrix> {
    let rho = match state {
        SpinState::Pure(v) => v.projector(),
        SpinState::Mixed(m) => m.clone(),
    };
    if rho.rows() == space.dim() {
        Ok(rho)
    } else if rho.rows() == 2 * space.dim() {
        trace_out_aux(&rho)
    } else {
        Err(Error::DimensionMismatch(format!("state of dimension {} on Dicke space N={}", rho.rows(), space.n)))
    }
}

fn ex(rho: &CMatrix, op: &CMatrix) -> C64 {
    // tr(ρ·op) without forming the product
    let n = rho.rows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += rho[(i, k)] * op[(k, i)];
        }
    }
    acc
}

/// Wineland parameter ξ²_R = N·var(Ŝx)/|⟨Ŝ⟩|²; `f64::INFINITY` when |⟨Ŝ⟩| vanishes.
pub fn wineland(state: SpinState<'_>, space: DickeSpace) -> Result<f64> {
    wineland_scaled(state, space, 1.0)
}

/// Same with every spin operator multiplied by `lambda` (the result is independent of it).
pub fn wineland_scaled(state: SpinState<'_>, space: DickeSpace, lambda: f64) -> Result<f64> {
    let rho = spin_density(state, space)?;
    let ops = dicke_operators(space.n)?;
    let (sx, sy, sz) = (ops.sx.scale_re(lambda), ops.sy.scale_re(lambda), ops.sz.scale_re(lambda));
    let tr = rho.trace().re;
    let mx = ex(&rho, &sx).re / tr;
    let my = ex(&rho, &sy).re / tr;
    let mz = ex(&rho, &sz).re / tr;
    let mean2 = mx * mx + my * my + mz * mz;
    if mean2.sqrt() < 1e-10 * lambda.abs().max(1e-300) {
        return Ok(f64::INFINITY);
    }
    let var = ex(&rho, &sx.matmul(&sx)).re / tr - mx * mx;
    Ok(space.n as f64 * var / mean2)
}

/// Wineland parameter minimized over the quadrature angle in the plane
/// orthogonal to the mean spin.
pub fn wineland_min_quadrature(state: SpinState<'_>, space: DickeSpace) -> Result<f64> {
    let rho = spin_density(state, space)?;
    let ops = dicke_operators(space.n)?;
    let tr = rho.trace().re;
    let s = [&ops.sx, &ops.sy, &ops.sz];
    let m: Vec<f64> = s.iter().map(|o| ex(&rho, o).re / tr).collect();
    let mean2: f64 = m.iter().map(|x| x * x).sum();
    if mean2.sqrt() < 1e-10 {
        return Ok(f64::INFINITY);
    }
    let norm = mean2.sqrt();
    let n = [m[0] / norm, m[1] / norm, m[2] / norm];
    // orthonormal pair e1, e2 perpendicular to the mean direction
    let helper = if n[2].abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let e1 = {
        let c = cross(n, helper);
        let l = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        [c[0] / l, c[1] / l, c[2] / l]
    };
    let e2 = cross(n, e1);
    let comb = |e: [f64; 3]| &(&s[0].scale_re(e[0]) + &s[1].scale_re(e[1])) + &s[2].scale_re(e[2]);
    let (a, b) = (comb(e1), comb(e2));
    let ma = ex(&rho, &a).re / tr;
    let mb = ex(&rho, &b).re / tr;
    let caa = ex(&rho, &a.matmul(&a)).re / tr - ma * ma;
    let cbb = ex(&rho, &b.matmul(&b)).re / tr - mb * mb;
    let cab = 0.5 * ex(&rho, &a.anticommutator(&b)).re / tr - ma * mb;
    let min_var = 0.5 * (caa + cbb) - (0.25 * (caa - cbb).powi(2) + cab * cab).sqrt();
    Ok(space.n as f64 * min_var / mean2)
}

/// Quantum Fisher information of a pure squeezing dark state, F_Q = var(Ŝ^y)
/// (σ units), returned with ξ²_R so that F_Q·ξ²_R = N can be checked.
pub fn qfi_check(psi: &CVector, space: DickeSpace, r: f64) -> Result<(f64, f64)> {
    let l = crate::models::squeezing_jump(space.n, r)?;
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter("state is not normalized".into()));
    }
    let res = l.apply(psi).norm();
    if res > 1e-8 * (1.0 + l.max_abs()) {
        return Err(Error::InvalidParameter(format!("state is not a dark state of the squeezing jump (residual {res:.3e})")));
    }
    let ops = dicke_operators(space.n)?;
    let my = psi.expectation(&ops.sy).re;
    let fq = psi.expectation(&ops.sy.matmul(&ops.sy)).re - my * my;
    let xi = wineland(SpinState::Pure(psi), space)?;
    Ok((fq, xi))
}

/// Result of fitting S(d) = a(1 − e^{−d/ξ}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub amplitude: f64,
    pub xi: f64,
    /// root of the summed squared residuals
    pub residual: f64,
}

fn fit_at(d: &[f64], s: &[f64], xi: f64) -> (f64, f64) {
    let f: Vec<f64> = d.iter().map(|x| 1.0 - (-x / xi).exp()).collect();
    let ff: f64 = f.iter().map(|x| x * x).sum();
    let fs: f64 = f.iter().zip(s).map(|(a, b)| a * b).sum();
    let a = if ff > 0.0 { fs / ff } else { 0.0 };
    let r: f64 = f.iter().zip(s).map(|(fi, si)| (si - a * fi).powi(2)).sum();
    (a, r)
}

/// Least squares over (a, ξ): closed-form a for each ξ, golden-section search on ln ξ.
pub fn fit_relaxation(series: &[(f64, f64)], n: usize) -> Result<FitResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be ≥ 1".into()));
    }
    if series.len() < 8 {
        return Err(Error::InvalidParameter(format!("need ≥ 8 points, got {}", series.len())));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::InvalidParameter("d must be strictly increasing".into()));
    }
    let d: Vec<f64> = series.iter().map(|p| p.0).collect();
    let s: Vec<f64> = series.iter().map(|p| p.1).collect();
    let (lo_s, hi_s) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi_s - lo_s <= 1e-12 * (1.0 + hi_s.abs()) {
        return Err(Error::InvalidParameter("degenerate series: constant S".into()));
    }
    let span = d[d.len() - 1] - d[0].min(0.0);
    let step = d.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = ((step * 1e-3).ln(), (span * 1e3).ln());
    // coarse scan to isolate the basin, then golden section
    let grid = 400;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..=grid {
        let x = lo + (hi - lo) * k as f64 / grid as f64;
        let r = fit_at(&d, &s, x.exp()).1;
        if r < best.1 {
            best = (k, r);
        }
    }
    let h = (hi - lo) / grid as f64;
    let c = lo + h * best.0 as f64;
    lo = c - h;
    hi = c + h;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = fit_at(&d, &s, x1.exp()).1;
    let mut f2 = fit_at(&d, &s, x2.exp()).1;
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = fit_at(&d, &s, x1.exp()).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = fit_at(&d, &s, x2.exp()).1;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let xi = (0.5 * (lo + hi)).exp();
    let (a, r) = fit_at(&d, &s, xi);
    Ok(FitResult { amplitude: a, xi, residual: r.sqrt() })
}

/// ξ²_R(α)/ξ²_R(0) for (1−α)|ψ_X⟩⟨ψ_X| + α|ψ_Y⟩⟨ψ_Y|: returns
/// (closed form 1 + (e^{4r} − 1)α, value from the explicit mixture).
pub fn mixed_squeezing_ratio(alpha: f64, r: f64, n: usize) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("α = {alpha} outside [0,1]")));
    }
    let space = DickeSpace::new(n)?;
    let closed = 1.0 + ((4.0 * r).exp() - 1.0) * alpha;
    let psi_x = squeezing_dark_state(n, r)?;
    // opposite phase bit: dark state of S⁺ − tanh(r)S⁻, squeezed along y
    let psi_y = squeezing_dark_state_signed(n, r, -1.0)?;
    let rho = &psi_x.projector().scale_re(1.0 - alpha) + &psi_y.projector().scale_re(alpha);
    let direct = wineland(SpinState::Mixed(&rho), space)? / wineland(SpinState::Pure(&psi_x), space)?;
    Ok((closed, direct))
}

/// Dark state of S⁺ + s·tanh(r)S⁻.
pub fn squeezing_dark_state_signed(n: usize, r: f64, s: f64) -> Result<CVector> {
    let d = dicke_operators(n)?;
    let l = &d.s_plus + &d.s_minus.scale_re(s * r.tanh());
    let ns = crate::numkernel::null_space(&l, 1e-10)?;
    if ns.len() != 1 {
        return Err(Error::DegenerateKernel(ns.len()));
    }
    ns[0].normalized()
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_spectrum(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(eig(a, true, false)?.values.iter().map(|z| z.re).collect())
}
