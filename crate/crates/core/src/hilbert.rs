//! Operators on qubit registers and on the symmetric (Dicke) spin space.
//!
//! Conventions used everywhere in the crate:
//! - qubit basis |0⟩,|1⟩ with σz = diag(1,−1), σ⁺ = |1⟩⟨0|, σ⁻ = |0⟩⟨1|;
//! - the first register label is the most significant tensor factor;
//! - canonical chain layout is A₁…Aₙ, B₁…Bₙ, then auxiliary qubits;
//! - Dicke index k holds |S, m = S − k⟩, so |m = +S⟩ comes first.

use crate::error::{Error, Result};
use crate::numkernel::{CMatrix, CVector, C64, I, ONE, ZERO};
use std::fmt;

/// Ratio between the collective Ŝ = Σσ operators and the ladder generators J.
pub const SPIN_CONVENTION: f64 = 2.0;

pub fn identity2() -> CMatrix {
    CMatrix::identity(2)
}
pub fn sigma_x() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
}
pub fn sigma_y() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}
pub fn sigma_z() -> CMatrix {
    CMatrix::from_real_diag(&[1.0, -1.0])
}
/// |1⟩⟨0|
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, ZERO], &[ONE, ZERO]])
}
/// |0⟩⟨1|
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_rows(&[&[ZERO, ONE], &[ZERO, ZERO]])
}

/// A labelled qubit. Chain indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Site {
    A(usize),
    B(usize),
    Aux(usize),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::A(i) => write!(f, "A{i}"),
            Site::B(i) => write!(f, "B{i}"),
            Site::Aux(0) => write!(f, "aux"),
            Site::Aux(i) => write!(f, "aux{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitRegister {
    labels: Vec<Site>,
}

impl QubitRegister {
    pub fn new(labels: Vec<Site>) -> Result<Self> {
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::InvalidParameter(format!("duplicate register label {l}")));
            }
        }
        if labels.len() > 30 {
            return Err(Error::DimensionOverflow { dim: labels.len(), max: 30 });
        }
        Ok(Self { labels })
    }

    /// Canonical A₁…Aₙ, B₁…Bₙ layout followed by `n_aux` auxiliary qubits.
    pub fn chains(n: usize, n_aux: usize) -> Self {
        let mut labels: Vec<Site> = (1..=n).map(Site::A).collect();
        labels.extend((1..=n).map(Site::B));
        labels.extend((0..n_aux).map(Site::Aux));
        Self { labels }
    }

    pub fn labels(&self) -> &[Site] {
        &self.labels
    }
    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }
    pub fn dim(&self) -> usize {
        1usize << self.labels.len()
    }

    pub fn position(&self, s: Site) -> Result<usize> {
        self.labels.iter().position(|l| *l == s).ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }

    /// Bit mask of `s` inside a basis index.
    pub fn mask(&self, s: Site) -> Result<usize> {
        Ok(1usize << (self.n_qubits() - 1 - self.position(s)?))
    }

    fn masks(&self, sites: &[Site]) -> Result<Vec<usize>> {
        sites.iter().map(|s| self.mask(*s)).collect()
    }

    /// Sites of chain A (or B), in order.
    pub fn chain_sites(&self, chain_a: bool) -> Vec<Site> {
        self.labels
            .iter()
            .copied()
            .filter(|s| matches!((s, chain_a), (Site::A(_), true) | (Site::B(_), false)))
            .collect()
    }

    /// All non-auxiliary sites.
    pub fn system_sites(&self) -> Vec<Site> {
        self.labels.iter().copied().filter(|s| !matches!(s, Site::Aux(_))).collect()
    }

    /// Computational basis state with the given sites set to |1⟩.
    pub fn basis_state(&self, excited: &[Site]) -> Result<CVector> {
        let mut idx = 0;
        for s in excited {
            idx |= self.mask(*s)?;
        }
        Ok(CVector::basis(self.dim(), idx))
    }
}

/// Embeds a 2ᵏ×2ᵏ operator acting on `sites` (first site most significant
/// in `op`) into the full register, identity elsewhere.
pub fn embed(op: &CMatrix, sites: &[Site], reg: &QubitRegister) -> Result<CMatrix> {
    let k = sites.len();
    if op.rows() != 1 << k || op.cols() != 1 << k {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on {k} sites",
            op.rows(),
            op.cols()
        )));
    }
    for (a, s) in sites.iter().enumerate() {
        if sites[..a].contains(s) {
            return Err(Error::InvalidParameter(format!("repeated site {s}")));
        }
    }
    let masks = reg.masks(sites)?;
    let all: usize = masks.iter().fold(0, |m, b| m | b);
    let d = reg.dim();
    let local = |state: usize| -> usize {
        masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(state & m != 0))
    };
    let spread = |loc: usize| -> usize {
        masks.iter().enumerate().fold(0, |acc, (a, &m)| if loc >> (k - 1 - a) & 1 == 1 { acc | m } else { acc })
    };
    let spread_tab: Vec<usize> = (0..1usize << k).map(spread).collect();
    let mut out = CMatrix::zeros(d, d);
    for col in 0..d {
        let li = local(col);
        let rest = col & !all;
        for lo in 0..1usize << k {
            let v = op[(lo, li)];
            if v != ZERO {
                out[(rest | spread_tab[lo], col)] = v;
            }
        }
    }
    Ok(out)
}

/// Jordan–Wigner ordering of sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FermionMap {
    pub ordering: Vec<Site>,
}

impl FermionMap {
    /// String running through the register in its own label order, skipping aux sites.
    pub fn canonical(reg: &QubitRegister) -> Self {
        Self { ordering: reg.system_sites() }
    }

    pub fn index_of(&self, s: Site) -> Result<usize> {
        self.ordering
            .iter()
            .position(|x| *x == s)
            .map(|p| p + 1)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// c_i = (∏_{j<i} σz_j) σ⁻_i with 1-based `i` along `map`.
pub fn jw_annihilation(i: usize, map: &FermionMap, reg: &QubitRegister) -> Result<CMatrix> {
    if i == 0 || i > map.ordering.len() {
        return Err(Error::InvalidParameter(format!(
            "fermion index {i} outside 1..={}",
            map.ordering.len()
        )));
    }
    let string: usize = map.ordering[..i - 1].iter().map(|s| reg.mask(*s)).sum::<Result<usize>>()?;
    let target = reg.mask(map.ordering[i - 1])?;
    let d = reg.dim();
    let mut out = CMatrix::zeros(d, d);
    for col in 0..d {
        if col & target != 0 {
            let sign = if (col & string).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[(col & !target, col)] = C64::new(sign, 0.0);
        }
    }
    Ok(out)
}

/// Fermion annihilator for a labelled site.
pub fn jw_site(s: Site, map: &FermionMap, reg: &QubitRegister) -> Result<CMatrix> {
    jw_annihilation(map.index_of(s)?, map, reg)
}

/// (−1)^n̂ over every qubit of the register.
pub fn total_parity(reg: &QubitRegister) -> CMatrix {
    parity_of(&reg.labels, reg).expect("register labels are valid")
}

/// (−1)^n̂ restricted to `sites`; +1 on the all-|0⟩ state.
pub fn parity_of(sites: &[Site], reg: &QubitRegister) -> Result<CMatrix> {
    let mask: usize = reg.masks(sites)?.iter().sum();
    let d: Vec<f64> =
        (0..reg.dim()).map(|b| if (b & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Ok(CMatrix::from_real_diag(&d))
}

/// Total excitation number Σ σ⁺σ⁻ = ½Σ(1 − σz) on `sites`.
pub fn number_operator(sites: &[Site], reg: &QubitRegister) -> Result<CMatrix> {
    let mask: usize = reg.masks(sites)?.iter().sum();
    let d: Vec<f64> = (0..reg.dim()).map(|b| (b & mask).count_ones() as f64).collect();
    Ok(CMatrix::from_real_diag(&d))
}

fn check_density(rho: &CMatrix, reg: &QubitRegister) -> Result<()> {
    if rho.rows() != reg.dim() || rho.cols() != reg.dim() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix {}x{} for register of dimension {}",
            rho.rows(),
            rho.cols(),
            reg.dim()
        )));
    }
    let herr = rho.hermiticity_error();
    if herr > 1e-10 * (1.0 + rho.max_abs()) {
        return Err(Error::NotHermitian(herr));
    }
    Ok(())
}

/// Index tables mapping (kept, traced) sub-indices to full basis indices.
fn split_tables(keep: &[Site], reg: &QubitRegister) -> Result<(Vec<usize>, Vec<usize>)> {
    let keep_masks: Vec<usize> = {
        let mut ks: Vec<usize> = keep.iter().map(|s| reg.position(*s)).collect::<Result<_>>()?;
        ks.sort_unstable();
        ks.dedup();
        ks.into_iter().map(|p| 1usize << (reg.n_qubits() - 1 - p)).collect()
    };
    let keep_all: usize = keep_masks.iter().sum();
    let other: Vec<usize> =
        (0..reg.n_qubits()).map(|p| 1usize << (reg.n_qubits() - 1 - p)).filter(|m| m & keep_all == 0).collect();
    let table = |ms: &[usize]| -> Vec<usize> {
        let k = ms.len();
        (0..1usize << k)
            .map(|loc| ms.iter().enumerate().fold(0, |acc, (a, &m)| if loc >> (k - 1 - a) & 1 == 1 { acc | m } else { acc }))
            .collect()
    };
    Ok((table(&keep_masks), table(&other)))
}

/// Reduced density matrix on `keep` (kept sites ordered as in the register).
pub fn partial_trace(rho: &CMatrix, keep: &[Site], reg: &QubitRegister) -> Result<CMatrix> {
    check_density(rho, reg)?;
    let (kt, tt) = split_tables(keep, reg)?;
    let dk = kt.len();
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for &t in &tt {
                acc += rho[(kt[a] | t, kt[b] | t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Partial transpose on the qubits in `subsystem`.
pub fn partial_transpose(rho: &CMatrix, subsystem: &[Site], reg: &QubitRegister) -> Result<CMatrix> {
    check_density(rho, reg)?;
    let mask: usize = reg.masks(subsystem)?.iter().fold(0, |m, b| m | b);
    let d = reg.dim();
    Ok(CMatrix::from_fn(d, d, |i, j| {
        let ii = (i & !mask) | (j & mask);
        let jj = (j & !mask) | (i & mask);
        rho[(ii, jj)]
    }))
}

/// Reshapes a pure state into the 2^|part|×2^rest coefficient matrix whose
/// singular values are the Schmidt coefficients across (part | rest).
pub fn bipartite_matrix(psi: &CVector, part: &[Site], reg: &QubitRegister) -> Result<CMatrix> {
    if psi.dim() != reg.dim() {
        return Err(Error::DimensionMismatch("state does not match register".into()));
    }
    let (kt, tt) = split_tables(part, reg)?;
    Ok(CMatrix::from_fn(kt.len(), tt.len(), |a, b| psi[kt[a] | tt[b]]))
}

/// Symmetric subspace of N spins-1/2 (total spin S = N/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DickeSpace {
    pub n: usize,
}

impl DickeSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Dicke space needs N ≥ 1".into()));
        }
        Ok(Self { n })
    }
    pub fn dim(&self) -> usize {
        self.n + 1
    }
    pub fn spin(&self) -> f64 {
        self.n as f64 / 2.0
    }
    /// Magnetic quantum number of basis index k.
    pub fn m_of(&self, k: usize) -> f64 {
        self.spin() - k as f64
    }
    /// |S, m⟩ with m given as twice its value (so it is always an integer).
    pub fn state_two_m(&self, two_m: i64) -> Result<CVector> {
        let n = self.n as i64;
        if two_m.abs() > n || (n - two_m) % 2 != 0 {
            return Err(Error::InvalidParameter(format!("2m = {two_m} not in Dicke space N={n}")));
        }
        Ok(CVector::basis(self.dim(), ((n - two_m) / 2) as usize))
    }
}

/// Collective operators; S± are ladder generators, Sx,Sy,Sz = Σσ.
#[derive(Debug, Clone)]
pub struct DickeOperators {
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

pub fn dicke_operators(n: usize) -> Result<DickeOperators> {
    let sp = DickeSpace::new(n)?;
    let s = sp.spin();
    let d = sp.dim();
    let mut jp = CMatrix::zeros(d, d);
    for k in 1..d {
        let m = sp.m_of(k);
        jp[(k - 1, k)] = C64::new((s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let half = SPIN_CONVENTION / 2.0;
    let sx = (&jp + &jm).scale_re(half);
    let sy = (&jp - &jm).scale(C64::new(0.0, -half));
    let sz = CMatrix::from_real_diag(&(0..d).map(|k| SPIN_CONVENTION * sp.m_of(k)).collect::<Vec<_>>());
    Ok(DickeOperators { s_plus: jp, s_minus: jm, sx, sy, sz })
}
