//! Dense complex linear algebra: matrices, vectors, Kronecker products,
//! matrix exponentials, eigensolves, SVD-based norms and null spaces.
//!
//! Heavy decompositions delegate to `faer`; everything else is plain loops
//! over row-major storage.

use crate::error::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerances and size limits shared by the numeric routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// relative tolerance for null spaces and zero eigenvalues
    pub ztol: f64,
    /// largest matrix side `kron` may produce
    pub max_dim: usize,
    /// cap on squarings in the Pade fallback of `expm`
    pub max_squarings: u32,
    /// Hermiticity tolerance for the eigen-based `expm` path
    pub herm_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self { ztol: 1e-10, max_dim: 1 << 14, max_squarings: 60, herm_tol: 1e-10 }
    }
}

/// Project-wide default policy.
pub const POLICY: NumericPolicy =
    NumericPolicy { ztol: 1e-10, max_dim: 1 << 14, max_squarings: 60, herm_tol: 1e-10 };

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row-major entries. Rejects wrong lengths and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience for small literal matrices.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = C64::new(x, 0.0);
        }
        m
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest absolute row sum (induced 1-norm of the transpose).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (largest absolute column sum).
    pub fn norm_one(&self) -> f64 {
        let mut s = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, z) in self.row(i).iter().enumerate() {
                s[j] += z.norm();
            }
        }
        s.into_iter().fold(0.0, f64::max)
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// max |A − A†|
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut e: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                e = e.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        e
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let (m, k, n) = (self.rows, self.cols, other.cols);
        if m * k * n > 64 * 64 * 64 {
            return from_faer(&(to_faer(self) * to_faer(other)));
        }
        let mut out = Self::zeros(m, n);
        for i in 0..m {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        CVector::from_vec(self.apply_slice(v.data()))
    }

    pub fn apply_slice(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "apply dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    /// Stacks matrices with equal column count on top of each other.
    pub fn vstack(blocks: &[&CMatrix]) -> Result<Self> {
        let cols = blocks.first().map(|b| b.cols).unwrap_or(0);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(Error::DimensionMismatch("vstack column counts differ".into()));
            }
            rows += b.rows;
            data.extend_from_slice(&b.data);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector::from_vec((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn from_columns(cols: &[CVector]) -> Self {
        let n = cols.first().map(|c| c.dim()).unwrap_or(0);
        Self::from_fn(n, cols.len(), |i, j| cols[j][i])
    }

    /// max |A − B| entrywise.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add dimension mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub dimension mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        &self + &rhs
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        &self - &rhs
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        self.matmul(&rhs)
    }
}

/// Dense complex vector (kets, vectorized density matrices).
#[derive(Debug, Clone, PartialEq)]
pub struct CVector {
    data: Vec<C64>,
}

impl CVector {
    pub fn zeros(n: usize) -> Self {
        Self { data: vec![ZERO; n] }
    }
    pub fn from_vec(data: Vec<C64>) -> Self {
        Self { data }
    }
    /// Unit vector |k⟩.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.data[k] = ONE;
        v
    }
    pub fn dim(&self) -> usize {
        self.data.len()
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn dot(&self, other: &Self) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }
    pub fn scale(&self, s: C64) -> Self {
        Self { data: self.data.iter().map(|z| z * s).collect() }
    }
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numeric("cannot normalize zero vector".into()));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }
    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }
    /// |self⟩⟨other|
    pub fn outer(&self, other: &Self) -> CMatrix {
        CMatrix::from_fn(self.dim(), other.dim(), |i, j| self.data[i] * other.data[j].conj())
    }
    /// |ψ⟩⟨ψ|
    pub fn projector(&self) -> CMatrix {
        self.outer(self)
    }
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        self.dot(&op.apply(self))
    }
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                out.push(a * b);
            }
        }
        Self { data: out }
    }
    pub fn add(&self, other: &Self) -> Self {
        Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }
    pub fn sub(&self, other: &Self) -> Self {
        Self { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

/// Eigenvalues (descending real part) and optional right eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub right_vectors: Option<CMatrix>,
    pub is_hermitian_input: bool,
}

pub(crate) fn to_faer(a: &CMatrix) -> Mat<C64> {
    Mat::from_fn(a.rows, a.cols, |i, j| a[(i, j)])
}

pub(crate) fn from_faer(m: &Mat<C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn require_square(a: &CMatrix) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::NonSquare { rows: a.rows, cols: a.cols })
    }
}

/// Kronecker product with the desk-scale size cap from [`POLICY`].
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    kron_with(a, b, &POLICY)
}

pub fn kron_with(a: &CMatrix, b: &CMatrix, policy: &NumericPolicy) -> Result<CMatrix> {
    let rows = a.rows.checked_mul(b.rows).unwrap_or(usize::MAX);
    let cols = a.cols.checked_mul(b.cols).unwrap_or(usize::MAX);
    let big = rows.max(cols);
    if big > policy.max_dim {
        return Err(Error::DimensionOverflow { dim: big, max: policy.max_dim });
    }
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for l in 0..b.cols {
                    out.data[base + l] = x * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list of factors, leftmost most significant.
pub fn kron_all(factors: &[&CMatrix]) -> Result<CMatrix> {
    let mut acc = CMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Matrix exponential. With `hermitian_generator` set, `a` must equal −i·H
/// for Hermitian H and the result is built from the eigendecomposition of H
/// (exactly unitary up to rounding). Otherwise Pade(13) scaling and squaring.
pub fn expm(a: &CMatrix, hermitian_generator: bool) -> Result<CMatrix> {
    expm_with(a, hermitian_generator, &POLICY)
}

pub fn expm_with(a: &CMatrix, hermitian_generator: bool, policy: &NumericPolicy) -> Result<CMatrix> {
    require_square(a)?;
    if !a.is_finite() {
        return Err(Error::Numeric("non-finite input to expm".into()));
    }
    if hermitian_generator {
        let h = a.scale(I);
        let herr = h.hermiticity_error();
        if herr > policy.herm_tol * (1.0 + h.max_abs()) {
            return Err(Error::NotHermitian(herr));
        }
        return Ok(unitary_from_hermitian(&h, 1.0)?);
    }
    expm_pade(a, policy)
}

/// exp(−i·t·H) for Hermitian H via eigendecomposition.
pub fn unitary_from_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    require_square(h)?;
    let n = h.rows;
    let hs = CMatrix::from_fn(n, n, |i, j| 0.5 * (h[(i, j)] + h[(j, i)].conj()));
    let evd = to_faer(&hs)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NonConvergence(format!("hermitian eigensolve: {e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();
    let phases: Vec<C64> = (0..n).map(|k| (-I * t * s[k].re).exp()).collect();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for k in 0..n {
                acc += u[(i, k)] * phases[k] * u[(j, k)].conj();
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

fn expm_pade(a: &CMatrix, policy: &NumericPolicy) -> Result<CMatrix> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.rows;
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm = a.norm_one();
    let mut s: u32 = 0;
    if norm > THETA13 {
        s = (norm / THETA13).log2().ceil().max(0.0) as u32;
    }
    if s > policy.max_squarings {
        return Err(Error::NonConvergence(format!(
            "expm would need {s} squarings (limit {})",
            policy.max_squarings
        )));
    }
    let a = a.scale_re(0.5f64.powi(s as i32));
    let id = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let lin = |c: &[(f64, &CMatrix)]| {
        let mut out = CMatrix::zeros(n, n);
        for (x, m) in c {
            for (o, v) in out.data.iter_mut().zip(&m.data) {
                *o += v * x;
            }
        }
        out
    };
    let inner_u = lin(&[(B[13], &a6), (B[11], &a4), (B[9], &a2)]);
    let u = a.matmul(&(&a6.matmul(&inner_u) + &lin(&[(B[7], &a6), (B[5], &a4), (B[3], &a2), (B[1], &id)])));
    let inner_v = lin(&[(B[12], &a6), (B[10], &a4), (B[8], &a2)]);
    let v = &a6.matmul(&inner_v) + &lin(&[(B[6], &a6), (B[4], &a4), (B[2], &a2), (B[0], &id)]);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p)?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::NonConvergence("expm overflow".into()));
    }
    Ok(r)
}

/// Solves A·X = B with partial-pivoting LU.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    use faer::linalg::solvers::Solve;
    require_square(a)?;
    if a.rows != b.rows {
        return Err(Error::DimensionMismatch("solve rhs rows".into()));
    }
    let lu = to_faer(a).partial_piv_lu();
    let x = lu.solve(to_faer(b));
    let out = from_faer(&x);
    if !out.is_finite() {
        return Err(Error::Numeric("singular system".into()));
    }
    Ok(out)
}

fn sort_desc_real(values: &mut Vec<(C64, usize)>) {
    values.sort_by(|x, y| {
        y.0.re
            .partial_cmp(&x.0.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y.0.im.partial_cmp(&x.0.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Eigen-decomposition, values sorted by descending real part.
pub fn eig(a: &CMatrix, hermitian: bool, vectors: bool) -> Result<EigenDecomposition> {
    require_square(a)?;
    if !a.is_finite() {
        return Err(Error::Numeric("non-finite input to eig".into()));
    }
    let n = a.rows;
    let m = to_faer(a);
    if hermitian {
        let herr = a.hermiticity_error();
        if herr > POLICY.herm_tol * (1.0 + a.max_abs()) {
            return Err(Error::NotHermitian(herr));
        }
        if !vectors {
            let mut v = m
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
            v.reverse();
            return Ok(EigenDecomposition {
                values: v.into_iter().map(|x| C64::new(x, 0.0)).collect(),
                right_vectors: None,
                is_hermitian_input: true,
            });
        }
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NonConvergence(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let values = (0..n).rev().map(|k| C64::new(s[k].re, 0.0)).collect();
        let vecs = CMatrix::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
        return Ok(EigenDecomposition { values, right_vectors: Some(vecs), is_hermitian_input: true });
    }
    if !vectors {
        let v = m.eigenvalues().map_err(|e| {
            Error::NonConvergence(format!("eigensolve failed ({e:?}), norm {:.3e}", a.norm()))
        })?;
        let mut idx: Vec<(C64, usize)> = v.into_iter().enumerate().map(|(i, z)| (z, i)).collect();
        sort_desc_real(&mut idx);
        return Ok(EigenDecomposition {
            values: idx.into_iter().map(|p| p.0).collect(),
            right_vectors: None,
            is_hermitian_input: false,
        });
    }
    let evd = m
        .eigen()
        .map_err(|e| Error::NonConvergence(format!("eigensolve failed ({e:?}), norm {:.3e}", a.norm())))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut idx: Vec<(C64, usize)> = (0..n).map(|k| (s[k], k)).collect();
    sort_desc_real(&mut idx);
    let vecs = CMatrix::from_fn(n, n, |i, j| u[(i, idx[j].1)]);
    Ok(EigenDecomposition {
        values: idx.into_iter().map(|p| p.0).collect(),
        right_vectors: Some(vecs),
        is_hermitian_input: false,
    })
}

/// Singular values, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.rows == 0 || a.cols == 0 {
        return Ok(Vec::new());
    }
    let s = to_faer(a)
        .singular_values()
        .map_err(|e| Error::NonConvergence(format!("svd: {e:?}")))?;
    Ok(s)
}

/// Nuclear norm ‖A‖₁ = tr√(A†A).
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    require_square(a)?;
    if a.is_hermitian(1e-12 * (1.0 + a.max_abs())) {
        let ev = eig(a, true, false)?;
        return Ok(ev.values.iter().map(|z| z.re.abs()).sum());
    }
    Ok(singular_values(a)?.iter().sum())
}

/// Orthonormal basis of the right null space: right singular vectors whose
/// singular value is below `tol·σ_max` (or all vectors for a zero matrix).
pub fn null_space(a: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("null_space tolerance must be positive".into()));
    }
    let n = a.cols;
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.rows == 0 {
        return Ok((0..n).map(|k| CVector::basis(n, k)).collect());
    }
    let svd = to_faer(a).svd().map_err(|e| Error::NonConvergence(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let k = s.nrows();
    let smax = if k > 0 { s[0].re.abs() } else { 0.0 };
    let thresh = tol * smax.max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for j in 0..n {
        let sj = if j < k { s[j].re.abs() } else { 0.0 };
        if sj <= thresh || smax == 0.0 {
            out.push(CVector::from_vec((0..n).map(|i| v[(i, j)]).collect()));
        }
    }
    Ok(out)
}

/// The `k` right singular vectors with the smallest singular values,
/// together with those singular values (ascending).
pub fn smallest_right_singular_vectors(a: &CMatrix, k: usize) -> Result<Vec<(f64, CVector)>> {
    let n = a.cols;
    let k = k.min(n);
    if k == 0 {
        return Ok(Vec::new());
    }
    let svd = to_faer(a).svd().map_err(|e| Error::NonConvergence(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let m = s.nrows();
    Ok((0..k)
        .map(|t| {
            let j = n - 1 - t;
            let sj = if j < m { s[j].re.abs() } else { 0.0 };
            (sj, CVector::from_vec((0..n).map(|i| v[(i, j)]).collect()))
        })
        .collect())
}

/// Compressed sparse row matrix used for superoperators.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// entries with modulus ≤ `drop_tol` removed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut trip: Vec<(usize, usize, C64)>,
        drop_tol: f64,
    ) -> Self {
        trip.sort_unstable_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<C64> = Vec::with_capacity(trip.len());
        let mut rows_of: Vec<usize> = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if let (Some(&lr), Some(&lc)) = (rows_of.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows_of.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let mut ci = Vec::with_capacity(col_idx.len());
        let mut vs = Vec::with_capacity(values.len());
        for ((r, c), v) in rows_of.into_iter().zip(col_idx).zip(values) {
            if v.norm() > drop_tol {
                row_ptr[r + 1] += 1;
                ci.push(c);
                vs.push(v);
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n_rows, n_cols, row_ptr, col_idx: ci, values: vs }
    }

    pub fn from_dense(a: &CMatrix, drop_tol: f64) -> Self {
        let mut trip = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let v = a[(i, j)];
                if v.norm() > drop_tol {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), trip, drop_tol)
    }

    pub fn rows(&self) -> usize {
        self.n_rows
    }
    pub fn cols(&self) -> usize {
        self.n_cols
    }
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates (col, value) of row `i`.
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row_iter(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row_iter(i).find(|(c, _)| *c == j).map(|p| p.1).unwrap_or(ZERO)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows).map(|i| self.row_iter(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// y = x†·A (returned as a row, not conjugated back).
    pub fn left_matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_rows);
        let mut out = vec![ZERO; self.n_cols];
        for i in 0..self.n_rows {
            let xi = x[i].conj();
            for (j, v) in self.row_iter(i) {
                out[j] += xi * v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Dense principal submatrix on the given (sorted) index set.
    pub fn submatrix(&self, idx: &[usize]) -> CMatrix {
        let mut pos = vec![usize::MAX; self.n_cols];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = CMatrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (j, v) in self.row_iter(i) {
                let b = pos[j];
                if b != usize::MAX {
                    m[(a, b)] = v;
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Induced infinity norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row_iter(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Connected components of the (symmetrized) sparsity graph. Each
    /// component is an invariant block, so spectra can be taken blockwise.
    pub fn connected_blocks(&self) -> Vec<Vec<usize>> {
        let n = self.n_rows.max(self.n_cols);
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (i, j, _) in self.triplets() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[label[r]].push(i);
        }
        blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }
    fn sx() -> CMatrix {
        CMatrix::from_rows(&[&[ZERO, ONE], &[ONE, ZERO]])
    }
    fn sz() -> CMatrix {
        CMatrix::from_real_diag(&[1.0, -1.0])
    }

    #[test]
    fn kron_identity_and_pauli() {
        let i2 = CMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), CMatrix::identity(4));
        assert_eq!(kron(&sz(), &i2).unwrap(), CMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0]));
        let xx = kron(&sx(), &sx()).unwrap();
        let out = xx.apply(&CVector::basis(4, 0));
        assert_eq!(out, CVector::basis(4, 3));
    }

    #[test]
    fn kron_entry_formula() {
        let a = CMatrix::from_fn(2, 3, |i, j| c(i as f64 + 1.0, j as f64));
        let b = CMatrix::from_fn(3, 2, |i, j| c(j as f64 - 1.0, i as f64 * 0.5));
        let k = kron(&a, &b).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_overflow() {
        let pol = NumericPolicy { max_dim: 8, ..NumericPolicy::default() };
        let a = CMatrix::identity(4);
        assert!(matches!(kron_with(&a, &a, &pol), Err(Error::DimensionOverflow { dim: 16, max: 8 })));
    }

    #[test]
    fn expm_zero_and_pauli() {
        let z = CMatrix::zeros(3, 3);
        assert!(expm(&z, false).unwrap().max_diff(&CMatrix::identity(3)) < 1e-15);
        let a = sx().scale(c(0.0, -std::f64::consts::FRAC_PI_2));
        for herm in [true, false] {
            let u = expm(&a, herm).unwrap();
            assert!(u.max_diff(&sx().scale(-I)) < 1e-12, "herm={herm}");
        }
    }

    #[test]
    fn expm_swap_two_qubits() {
        // σ⁺σ⁻ + σ⁻σ⁺ on two qubits is the swap generator within the single-excitation block
        let mut h = CMatrix::zeros(4, 4);
        h[(1, 2)] = ONE;
        h[(2, 1)] = ONE;
        let theta = std::f64::consts::FRAC_PI_2;
        let u = expm(&h.scale(c(0.0, -theta)), true).unwrap();
        // oracle: 2x2 block [[cos, -i sin], [-i sin, cos]]
        assert!((u[(0, 0)] - ONE).norm() < 1e-12);
        assert!((u[(3, 3)] - ONE).norm() < 1e-12);
        assert!(u[(1, 1)].norm() < 1e-12);
        assert!((u[(2, 1)] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((u[(1, 2)] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_pade_matches_hermitian_path() {
        let h = CMatrix::from_fn(5, 5, |i, j| {
            let x = ((i * 3 + j * 7) % 5) as f64 - 2.0;
            let y = if i == j { 0.0 } else { (i as f64 - j as f64) * 0.3 };
            c(x + ((j * 3 + i * 7) % 5) as f64 - 2.0, y)
        });
        let a = h.scale(c(0.0, -3.0));
        let u1 = expm(&a, true).unwrap();
        let u2 = expm(&a, false).unwrap();
        assert!(u1.max_diff(&u2) < 1e-10);
    }

    #[test]
    fn expm_rejects_non_square_and_non_hermitian() {
        assert!(matches!(expm(&CMatrix::zeros(2, 3), false), Err(Error::NonSquare { .. })));
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = ONE;
        assert!(matches!(expm(&a, true), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn expm_nilpotent_exact() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(3.0, 0.0);
        let e = expm(&a, false).unwrap();
        assert!((e[(0, 1)] - c(3.0, 0.0)).norm() < 1e-12);
        assert!((e[(0, 0)] - ONE).norm() < 1e-12);
    }

    #[test]
    fn eig_diag_and_sigma_x() {
        let d = CMatrix::from_real_diag(&[3.0, 1.0, 2.0]);
        let e = eig(&d, false, false).unwrap();
        let re: Vec<f64> = e.values.iter().map(|z| z.re).collect();
        assert!((re[0] - 3.0).abs() < 1e-12 && (re[1] - 2.0).abs() < 1e-12 && (re[2] - 1.0).abs() < 1e-12);
        let e = eig(&sx(), true, true).unwrap();
        assert!((e.values[0].re - 1.0).abs() < 1e-12 && (e.values[1].re + 1.0).abs() < 1e-12);
        let v = e.right_vectors.unwrap();
        let plus = v.column(0);
        assert!((plus[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((plus[0] - plus[1]).norm() < 1e-12);
        let minus = v.column(1);
        assert!((minus[0] + minus[1]).norm() < 1e-12);
    }

    #[test]
    fn eig_amplitude_damping_superoperator() {
        // column-stacked generator of D[σ⁻] with Γ=1, written out by hand
        let mut l = CMatrix::zeros(4, 4);
        // ρ00' = ρ11, ρ11' = -ρ11, coherences decay at 1/2
        // vec index = j*2 + i
        l[(0, 3)] = ONE;
        l[(3, 3)] = -ONE;
        l[(1, 1)] = c(-0.5, 0.0);
        l[(2, 2)] = c(-0.5, 0.0);
        let e = eig(&l, false, true).unwrap();
        let want = [0.0, -0.5, -0.5, -1.0];
        for (z, w) in e.values.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
        let v = e.right_vectors.unwrap();
        for k in 0..4 {
            let col = v.column(k);
            let r = l.apply(&col).sub(&col.scale(e.values[k]));
            assert!(r.norm() < 1e-8 * l.norm());
        }
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&CMatrix::identity(4)).unwrap() - 4.0).abs() < 1e-12);
        assert!((trace_norm(&sz()).unwrap() - 2.0).abs() < 1e-12);
        // partial transpose of the Bell projector (|00⟩+|11⟩)/√2
        let mut pt = CMatrix::zeros(4, 4);
        pt[(0, 0)] = c(0.5, 0.0);
        pt[(3, 3)] = c(0.5, 0.0);
        pt[(1, 2)] = c(0.5, 0.0);
        pt[(2, 1)] = c(0.5, 0.0);
        assert!((trace_norm(&pt).unwrap() - 2.0).abs() < 1e-12);
        // non-Hermitian path: nilpotent with singular value 3
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(0.0, 3.0);
        assert!((trace_norm(&a).unwrap() - 3.0).abs() < 1e-12);
        assert!(trace_norm(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn null_space_examples() {
        let sp = CMatrix::from_rows(&[&[ZERO, ZERO], &[ONE, ZERO]]);
        let ns = null_space(&sp, 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        assert!((ns[0][1].norm() - 1.0).abs() < 1e-12);

        let sm = sp.transpose();
        let i2 = CMatrix::identity(2);
        let a = kron(&sm, &i2).unwrap();
        let b = kron(&i2, &sm).unwrap();
        let st = CMatrix::vstack(&[&a, &b]).unwrap();
        let ns = null_space(&st, 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        assert!((ns[0][0].norm() - 1.0).abs() < 1e-12);

        // N=2 Dicke: S⁺ + t S⁻ with ladder elements √2, basis (m=1, 0, -1)
        let t = 0.7f64.tanh();
        let s2 = 2f64.sqrt();
        let mut l = CMatrix::zeros(3, 3);
        l[(0, 1)] = c(s2, 0.0);
        l[(1, 2)] = c(s2, 0.0);
        l[(1, 0)] = c(t * s2, 0.0);
        l[(2, 1)] = c(t * s2, 0.0);
        let ns = null_space(&l, 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert!(v[1].norm() < 1e-12);
        assert!((v[2] / v[0] + c(t, 0.0)).norm() < 1e-12);

        assert!(null_space(&CMatrix::identity(3), 1e-10).unwrap().is_empty());
        assert!(null_space(&sp, 0.0).is_err());
    }

    #[test]
    fn sparse_roundtrip_and_blocks() {
        let mut d = CMatrix::zeros(5, 5);
        d[(0, 3)] = c(1.0, 2.0);
        d[(3, 0)] = ONE;
        d[(1, 1)] = c(-1.0, 0.0);
        d[(2, 4)] = c(0.0, 1.0);
        let s = SparseMatrix::from_dense(&d, 0.0);
        assert_eq!(s.to_dense(), d);
        assert_eq!(s.nnz(), 4);
        let mut blocks = s.connected_blocks();
        blocks.sort();
        assert_eq!(blocks, vec![vec![0, 3], vec![1], vec![2, 4]]);
        let x = vec![ONE, c(0.0, 1.0), c(2.0, 0.0), ONE, c(-1.0, 0.0)];
        assert_eq!(s.matvec(&x), d.apply_slice(&x));
        assert_eq!(s.submatrix(&[0, 3]), CMatrix::from_rows(&[&[ZERO, c(1.0, 2.0)], &[ONE, ZERO]]));
    }

    #[test]
    fn sparse_duplicates_summed() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(0, 1, ONE), (0, 1, ONE), (1, 0, ONE), (1, 0, -ONE)], 1e-14);
        assert_eq!(s.get(0, 1), c(2.0, 0.0));
        assert_eq!(s.nnz(), 1);
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(CMatrix::from_vec(2, 2, vec![ONE; 3]).is_err());
        assert!(CMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
