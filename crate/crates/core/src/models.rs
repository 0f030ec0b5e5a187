//! Builders for the concrete master equations: boundary-driven fermion and
//! spin chains, the parity-string model, the aux-qubit adaptive chain,
//! collective squeezing (plain and adaptive) and random dark-state models.

use crate::error::{Error, Result};
use crate::hilbert::{
    dicke_operators, embed, identity2, jw_site, number_operator, parity_of, sigma_minus, sigma_plus, sigma_x, sigma_y,
    sigma_z, DickeSpace, FermionMap, QubitRegister, Site,
};
use crate::lindblad::{Jump, LindbladModel, Register};
use crate::numkernel::{kron, kron_all, null_space, CMatrix, CVector, C64, ONE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Largest chain register (2n qubits) the builders accept.
pub const MAX_CHAIN_QUBITS: usize = 12;

/// Two n-site chains A and B with boundary pairing baths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n: usize,
    pub j: f64,
    pub delta: f64,
    pub gamma: f64,
    pub u: f64,
    pub v: f64,
    /// sign multiplying the B-chain Hamiltonian (A carries +1)
    pub sgn_b: f64,
}

impl ChainParams {
    /// u = √(1 − v²), v = √v², sgn(B) = −1.
    pub fn new(n: usize, j: f64, delta: f64, gamma: f64, v2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v2) {
            return Err(Error::InvalidParameter(format!("v² = {v2} outside [0,1]")));
        }
        let p = Self { n, j, delta, gamma, u: (1.0 - v2).sqrt(), v: v2.sqrt(), sgn_b: -1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("chains need n ≥ 1".into()));
        }
        if 2 * self.n > MAX_CHAIN_QUBITS {
            return Err(Error::DimensionOverflow { dim: 2 * self.n, max: MAX_CHAIN_QUBITS });
        }
        if (self.u * self.u + self.v * self.v - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("u² + v² = {} ≠ 1", self.u * self.u + self.v * self.v)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("Γ must be finite and ≥ 0".into()));
        }
        if !self.j.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidParameter("J and Δ must be finite".into()));
        }
        if self.sgn_b.abs() != 1.0 {
            return Err(Error::InvalidParameter("sgn(B) must be ±1".into()));
        }
        Ok(())
    }
}

/// Collective squeezing of N spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub n: usize,
    pub r: f64,
    pub gamma: f64,
}

impl SqueezeParams {
    pub fn new(n: usize, r: f64, gamma: f64) -> Result<Self> {
        let p = Self { n, r, gamma };
        p.validate()?;
        Ok(p)
    }
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("N = {} must be even and positive", self.n)));
        }
        if !(self.r >= 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParameter("r must be finite and ≥ 0".into()));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("Γ must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

/// Random dark-state model on C^N ⊗ C^N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomModelParams {
    pub n_local: usize,
    pub m: usize,
    pub s2_target: f64,
    pub seed: u64,
    pub with_aux: bool,
}

impl RandomModelParams {
    pub fn new(n_local: usize, s2_target: f64, seed: u64, with_aux: bool) -> Result<Self> {
        let p = Self { n_local, m: 2, s2_target, seed, with_aux };
        p.validate()?;
        Ok(p)
    }
    pub fn validate(&self) -> Result<()> {
        if self.n_local < 2 {
            return Err(Error::InvalidParameter("local dimension must be ≥ 2".into()));
        }
        if self.m < 2 {
            return Err(Error::InvalidParameter("need at least two jump operators for a unique steady state".into()));
        }
        let max = (self.n_local as f64).ln();
        if !(self.s2_target > 0.0) || self.s2_target > max + 1e-12 {
            return Err(Error::InvalidParameter(format!("S2 target {} outside (0, ln N]", self.s2_target)));
        }
        Ok(())
    }
}

fn op1(op: &CMatrix, s: Site, reg: &QubitRegister) -> Result<CMatrix> {
    embed(op, &[s], reg)
}

fn chain_sign(p: &ChainParams, chain_a: bool) -> f64 {
    if chain_a {
        1.0
    } else {
        p.sgn_b
    }
}

fn site(chain_a: bool, i: usize) -> Site {
    if chain_a {
        Site::A(i)
    } else {
        Site::B(i)
    }
}

/// Σ_s sgn(s)[J σ⁺ᵢσ⁻ᵢ₊₁ + (Δ/2) σzᵢσzᵢ₊₁] + H.c.
pub fn spin_hamiltonian(p: &ChainParams, reg: &QubitRegister) -> Result<CMatrix> {
    let d = reg.dim();
    let mut h = CMatrix::zeros(d, d);
    for chain_a in [true, false] {
        let sg = chain_sign(p, chain_a);
        for i in 1..p.n {
            let (a, b) = (site(chain_a, i), site(chain_a, i + 1));
            let hop = op1(&sigma_plus(), a, reg)?.matmul(&op1(&sigma_minus(), b, reg)?);
            let zz = op1(&sigma_z(), a, reg)?.matmul(&op1(&sigma_z(), b, reg)?);
            let t = &hop.scale_re(sg * p.j) + &zz.scale_re(sg * p.delta / 2.0);
            h = &h + &(&t + &t.adjoint());
        }
    }
    Ok(h)
}

/// Σ_s sgn(s)[J c†ᵢcᵢ₊₁ + (Δ/2) n̂ᵢn̂ᵢ₊₁] + H.c. with Jordan–Wigner fermions.
pub fn fermion_hamiltonian(p: &ChainParams, reg: &QubitRegister) -> Result<CMatrix> {
    let map = FermionMap::canonical(reg);
    let d = reg.dim();
    let mut h = CMatrix::zeros(d, d);
    for chain_a in [true, false] {
        let sg = chain_sign(p, chain_a);
        for i in 1..p.n {
            let (a, b) = (site(chain_a, i), site(chain_a, i + 1));
            let ca = jw_site(a, &map, reg)?;
            let cb = jw_site(b, &map, reg)?;
            let hop = ca.adjoint().matmul(&cb);
            // n̂ is string free: the diagonal excitation count of one site
            let nn = number_operator(&[a], reg)?.matmul(&number_operator(&[b], reg)?);
            let t = &hop.scale_re(sg * p.j) + &nn.scale_re(sg * p.delta / 2.0);
            h = &h + &(&t + &t.adjoint());
        }
    }
    Ok(h)
}

fn lin(a: f64, x: &CMatrix, b: f64, y: &CMatrix) -> CMatrix {
    &x.scale_re(a) + &y.scale_re(b)
}

/// Fermion chains with pairing baths u c_{A1} + v c†_{B1} and u c_{B1} − v c†_{A1}.
pub fn fermion_chain(p: &ChainParams) -> Result<LindbladModel> {
    p.validate()?;
    let reg = QubitRegister::chains(p.n, 0);
    let map = FermionMap::canonical(&reg);
    let ca = jw_site(Site::A(1), &map, &reg)?;
    let cb = jw_site(Site::B(1), &map, &reg)?;
    let l1 = lin(p.u, &ca, p.v, &cb.adjoint());
    let l2 = lin(p.u, &cb, -p.v, &ca.adjoint());
    let h = fermion_hamiltonian(p, &reg)?;
    LindbladModel::new(h, vec![Jump::new(l1, p.gamma), Jump::new(l2, p.gamma)], Register::Qubits(reg))
}

/// XXZ chains with local pairing baths uσ⁻_{A1} + vσ⁺_{B1} and uσ⁻_{B1} + vσ⁺_{A1}.
pub fn spin_chain(p: &ChainParams) -> Result<LindbladModel> {
    p.validate()?;
    let reg = QubitRegister::chains(p.n, 0);
    let l1 = lin(p.u, &op1(&sigma_minus(), Site::A(1), &reg)?, p.v, &op1(&sigma_plus(), Site::B(1), &reg)?);
    let l2 = lin(p.u, &op1(&sigma_minus(), Site::B(1), &reg)?, p.v, &op1(&sigma_plus(), Site::A(1), &reg)?);
    let h = spin_hamiltonian(p, &reg)?;
    LindbladModel::new(h, vec![Jump::new(l1, p.gamma), Jump::new(l2, p.gamma)], Register::Qubits(reg))
}

/// Qubit model with explicit parity strings:
/// L₁ = uσ⁻_{A1} − vσ⁺_{B1}P̂, L₂ = uσ⁻_{B1}P̂ − vσ⁺_{A1}. Requires Δ = 0.
pub fn string_spin_model(p: &ChainParams) -> Result<LindbladModel> {
    p.validate()?;
    if p.delta != 0.0 {
        return Err(Error::InvalidParameter("string model is defined for Δ = 0 only".into()));
    }
    let reg = QubitRegister::chains(p.n, 0);
    let par = parity_of(&reg.system_sites(), &reg)?;
    let sb = op1(&sigma_plus(), Site::B(1), &reg)?.matmul(&par);
    let mb = op1(&sigma_minus(), Site::B(1), &reg)?.matmul(&par);
    let l1 = lin(p.u, &op1(&sigma_minus(), Site::A(1), &reg)?, -p.v, &sb);
    let l2 = lin(p.u, &mb, -p.v, &op1(&sigma_plus(), Site::A(1), &reg)?);
    let h = spin_hamiltonian(p, &reg)?;
    LindbladModel::new(h, vec![Jump::new(l1, p.gamma), Jump::new(l2, p.gamma)], Register::Qubits(reg))
}

/// Parity tracked by an aux qubit:
/// L₁ = σˣ_P(uσ⁻_{A1} + vσ⁺_{B1}σᶻ_P), L₂ = σˣ_P(uσ⁻_{B1}σᶻ_P + vσ⁺_{A1}).
/// The Hamiltonian is the spin-chain one (string free for Δ = 0).
pub fn adaptive_continuous(p: &ChainParams) -> Result<LindbladModel> {
    adaptive_continuous_with_phase(p, 1.0)
}

/// As [`adaptive_continuous`] with σᶻ_P replaced by `z_sign`·σᶻ_P.
pub fn adaptive_continuous_with_phase(p: &ChainParams, z_sign: f64) -> Result<LindbladModel> {
    p.validate()?;
    let reg = QubitRegister::chains(p.n, 1);
    let aux = Site::Aux(0);
    let x = op1(&sigma_x(), aux, &reg)?;
    let z = op1(&sigma_z(), aux, &reg)?.scale_re(z_sign);
    let k1 = lin(p.u, &op1(&sigma_minus(), Site::A(1), &reg)?, p.v, &op1(&sigma_plus(), Site::B(1), &reg)?.matmul(&z));
    let k2 = lin(p.u, &op1(&sigma_minus(), Site::B(1), &reg)?.matmul(&z), p.v, &op1(&sigma_plus(), Site::A(1), &reg)?);
    let h = spin_hamiltonian(p, &reg)?;
    LindbladModel::new(
        h,
        vec![Jump::new(x.matmul(&k1), p.gamma), Jump::new(x.matmul(&k2), p.gamma)],
        Register::Qubits(reg),
    )
}

/// Jump sets of the classical-feedback unraveling for P = +1 and P = −1:
/// {uσ⁻_{A1} − vPσ⁺_{B1}, uσ⁻_{B1} − vPσ⁺_{A1}} with the spin-chain Hamiltonian.
pub fn adaptive_parity_models(p: &ChainParams) -> Result<[LindbladModel; 2]> {
    p.validate()?;
    let reg = QubitRegister::chains(p.n, 0);
    let h = spin_hamiltonian(p, &reg)?;
    let build = |pv: f64| -> Result<LindbladModel> {
        let l1 = lin(p.u, &op1(&sigma_minus(), Site::A(1), &reg)?, -p.v * pv, &op1(&sigma_plus(), Site::B(1), &reg)?);
        let l2 = lin(p.u, &op1(&sigma_minus(), Site::B(1), &reg)?, -p.v * pv, &op1(&sigma_plus(), Site::A(1), &reg)?);
        LindbladModel::new(h.clone(), vec![Jump::new(l1, p.gamma), Jump::new(l2, p.gamma)], Register::Qubits(reg.clone()))
    };
    Ok([build(1.0)?, build(-1.0)?])
}

/// ∏ᵢ(u − v·σ⁺_{A,i}σ⁺_{B,i})|0⟩ with an explicit sign `s` on v.
pub fn dimer_state(n: usize, u: f64, v: f64, reg: &QubitRegister) -> Result<CVector> {
    let mut psi = CVector::basis(reg.dim(), 0);
    for i in 1..=n {
        let pair = op1(&sigma_plus(), Site::A(i), reg)?.matmul(&op1(&sigma_plus(), Site::B(i), reg)?);
        let g = &CMatrix::identity(reg.dim()).scale_re(u) - &pair.scale_re(v);
        psi = g.apply(&psi);
    }
    psi.normalized()
}

/// ∏ᵢ(u − v·c†_{A,i}c†_{B,i})|0⟩ in the Jordan–Wigner representation.
pub fn fermion_dimer_state(n: usize, u: f64, v: f64, reg: &QubitRegister) -> Result<CVector> {
    let map = FermionMap::canonical(reg);
    let mut psi = CVector::basis(reg.dim(), 0);
    for i in 1..=n {
        let ca = jw_site(Site::A(i), &map, reg)?;
        let cb = jw_site(Site::B(i), &map, reg)?;
        let pair = ca.adjoint().matmul(&cb.adjoint());
        let g = &CMatrix::identity(reg.dim()).scale_re(u) - &pair.scale_re(v);
        psi = g.apply(&psi);
    }
    psi.normalized()
}

/// S⁺ + tanh(r)·S⁻ on the Dicke space (ladder normalization).
pub fn squeezing_jump(n: usize, r: f64) -> Result<CMatrix> {
    let d = dicke_operators(n)?;
    Ok(&d.s_plus + &d.s_minus.scale_re(r.tanh()))
}

/// Γ·D[S⁺ + tanh(r)S⁻], H = 0.
pub fn squeezing_standard(p: &SqueezeParams) -> Result<LindbladModel> {
    p.validate()?;
    let space = DickeSpace::new(p.n)?;
    let l = squeezing_jump(p.n, p.r)?;
    LindbladModel::new(CMatrix::zeros(space.dim(), space.dim()), vec![Jump::new(l, p.gamma)], Register::Dicke(space))
}

/// Γ·D[σˣ_aux(S⁺ + σᶻ_aux tanh(r)S⁻)] on Dicke ⊗ aux.
pub fn squeezing_adaptive(p: &SqueezeParams) -> Result<LindbladModel> {
    squeezing_adaptive_with_phase(p, 1.0)
}

pub fn squeezing_adaptive_with_phase(p: &SqueezeParams, z_sign: f64) -> Result<LindbladModel> {
    p.validate()?;
    let space = DickeSpace::new(p.n)?;
    let d = dicke_operators(p.n)?;
    let id = CMatrix::identity(space.dim());
    let x = kron(&id, &sigma_x())?;
    let z = kron(&id, &sigma_z())?.scale_re(z_sign);
    let sp = kron(&d.s_plus, &identity2())?;
    let sm = kron(&d.s_minus, &identity2())?;
    let inner = &sp + &z.matmul(&sm).scale_re(p.r.tanh());
    let l = x.matmul(&inner);
    let dim = 2 * space.dim();
    LindbladModel::new(CMatrix::zeros(dim, dim), vec![Jump::new(l, p.gamma)], Register::DickeAux(space))
}

/// Squeezing models for the two values of the classical phase bit:
/// S⁺ + P·tanh(r)S⁻ for P = +1, −1.
pub fn squeezing_parity_models(p: &SqueezeParams) -> Result<[LindbladModel; 2]> {
    p.validate()?;
    let space = DickeSpace::new(p.n)?;
    let d = dicke_operators(p.n)?;
    let t = p.r.tanh();
    let zero = CMatrix::zeros(space.dim(), space.dim());
    let mk = |s: f64| {
        LindbladModel::new(
            zero.clone(),
            vec![Jump::new(&d.s_plus + &d.s_minus.scale_re(s * t), p.gamma)],
            Register::Dicke(space),
        )
    };
    Ok([mk(1.0)?, mk(-1.0)?])
}

/// Kernel vector of S⁺ + tanh(r)S⁻ with a real positive m = +S amplitude.
pub fn squeezing_dark_state(n: usize, r: f64) -> Result<CVector> {
    let l = squeezing_jump(n, r)?;
    let ns = null_space(&l, 1e-10)?;
    if ns.len() != 1 {
        return Err(Error::DegenerateKernel(ns.len()));
    }
    let v = &ns[0];
    let ph = if v[0].norm() > 1e-300 { v[0].conj() / v[0].norm() } else { ONE };
    v.scale(ph).normalized()
}

/// Samples squared Schmidt coefficients with Rényi-2 entropy equal to the target.
pub fn sample_schmidt<R: Rng>(n: usize, s2_target: f64, rng: &mut R) -> Result<Vec<f64>> {
    let renyi = |q: &[f64]| -(q.iter().map(|x| x * x).sum::<f64>()).ln();
    let uni = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let tot: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|x| x / tot).collect();
        if renyi(&p) > s2_target {
            continue;
        }
        let mix = |l: f64| -> Vec<f64> { p.iter().zip(&uni).map(|(a, b)| (1.0 - l) * a + l * b).collect() };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if renyi(&mix(mid)) < s2_target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let q = mix(hi);
        if (renyi(&q) - s2_target).abs() <= 1e-6 {
            return Ok(q);
        }
    }
    Err(Error::NonConvergence(format!("could not bracket S2 = {s2_target}")))
}

/// L_μ = A_μ⊗I − I⊗ΨA_μᵀΨ⁻¹ (or its aux-qubit extension) with Ginibre A_μ;
/// returns the model and the state |ψ⟩ = Σψᵢ|ii⟩ (⊗|0⟩_aux first if present).
pub fn random_lindbladian(p: &RandomModelParams) -> Result<(LindbladModel, CVector)> {
    p.validate()?;
    let n = p.n_local;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let q = sample_schmidt(n, p.s2_target, &mut rng)?;
    let psi: Vec<f64> = q.iter().map(|x| x.sqrt()).collect();
    let big_psi = CMatrix::from_real_diag(&psi);
    let big_psi_inv = CMatrix::from_real_diag(&psi.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
    let id = CMatrix::identity(n);
    let mut jumps = Vec::with_capacity(p.m);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..p.m {
        let a = CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * inv_sqrt2, im * inv_sqrt2)
        });
        let b = big_psi.matmul(&a.transpose()).matmul(&big_psi_inv);
        let l = if p.with_aux {
            let t1 = kron_all(&[&sigma_x(), &a, &id])?;
            let t2 = kron_all(&[&sigma_y().scale(crate::numkernel::I), &id, &b])?;
            &t1 + &t2
        } else {
            &kron(&a, &id)? - &kron(&id, &b)?
        };
        jumps.push(Jump::new(l, 1.0));
    }
    let mut target = CVector::zeros(n * n);
    for i in 0..n {
        target[i * n + i] = C64::new(psi[i], 0.0);
    }
    let (register, target) = if p.with_aux {
        (Register::Qudits(vec![2, n, n]), CVector::basis(2, 0).kron(&target))
    } else {
        (Register::Qudits(vec![n, n]), target)
    };
    let d = register.dim();
    let model = LindbladModel::new(CMatrix::zeros(d, d), jumps, register)?;
    Ok((model, target))
}
