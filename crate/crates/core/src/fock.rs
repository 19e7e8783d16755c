//! Dense complex linear algebra on a truncated single-mode Fock space.
//!
//! Row and column indices of every [`Operator`] are Fock occupation numbers
//! `0..dim`. Joint qubit–mode operators are `2·dim` square with the qubit
//! index outermost, so block `(q, q')` is the `dim × dim` submatrix starting
//! at `(q·dim, q'·dim)`.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result, C64};

/// Tolerance on `max |H - H†|` for generators passed to the exponential.
pub const GENERATOR_HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on `max |ρ - ρ†|` for density operators.
pub const STATE_HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr ρ - 1|` for density operators.
pub const TRACE_TOL: f64 = 1e-12;
/// Most negative eigenvalue a density operator may carry from truncation
/// and rounding. Anything below is reported as an error.
pub const POSITIVITY_FLOOR: f64 = -1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidDimension { dim: 0, min: 1 });
        }
        Ok(Operator(matrix))
    }

    /// Build from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal<I>(values: I) -> Self
    where
        I: IntoIterator<Item = C64>,
    {
        let values: Vec<C64> = values.into_iter().collect();
        Operator(DMatrix::from_diagonal(&DVector::from_vec(values)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Operator(&self.0 * factor)
    }

    /// `max |A - A†|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.0[(i, j)] - self.0[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `max |U U† - I|` entrywise.
    pub fn unitarity_error(&self) -> f64 {
        let product = &self.0 * self.0.adjoint();
        max_abs_entry(&(product - DMatrix::<C64>::identity(self.dim(), self.dim())))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(max_abs_entry(&(&self.0 - &other.0)))
    }

    /// Top-left `k × k` block.
    pub fn leading_block(&self, k: usize) -> Result<Operator> {
        if k == 0 || k > self.dim() {
            return Err(Error::InvalidDimension { dim: k, min: 1 });
        }
        Ok(Operator(self.0.view((0, 0), (k, k)).into_owned()))
    }

    /// Commutator `[A, B]`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(Operator(&self.0 * &other.0 - &other.0 * &self.0))
    }

    /// `U · self · U†`.
    pub fn conjugated_by(&self, unitary: &Operator) -> Result<Operator> {
        ensure_same_dim(self.dim(), unitary.dim())?;
        Ok(Operator(&unitary.0 * &self.0 * unitary.0.adjoint()))
    }

    /// Eigendecomposition of a Hermitian operator.
    pub fn spectrum(&self) -> Result<HermitianSpectrum> {
        HermitianSpectrum::new(self)
    }

    fn checked_hermitian_part(&self, tol: f64) -> Result<DMatrix<C64>> {
        let deviation = self.hermiticity_error();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator(&self.0 - &rhs.0)
    }
}

fn max_abs_entry(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn ensure_same_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Eigenvalues and eigenvectors of a Hermitian operator, `H = U Λ U†`.
///
/// Kept around so one diagonalization serves a whole time grid.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl HermitianSpectrum {
    pub fn new(op: &Operator) -> Result<Self> {
        Self::with_tolerance(op, GENERATOR_HERMITIAN_TOL)
    }

    fn with_tolerance(op: &Operator, tol: f64) -> Result<Self> {
        let mut hermitian = op.checked_hermitian_part(tol)?;
        // Entries this far below the largest one cannot move any eigenvalue
        // measurably, but near-subnormal values can overflow the QR shifts.
        let largest = hermitian.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
        let floor = largest * f64::EPSILON * f64::EPSILON;
        for z in hermitian.iter_mut() {
            if z.norm() < floor {
                *z = C64::new(0.0, 0.0);
            }
        }
        let eig =
            SymmetricEigen::try_new(hermitian, f64::EPSILON, 0).ok_or(Error::Eigendecomposition)?;
        if !eig.eigenvalues.iter().all(|v| v.is_finite()) {
            return Err(Error::Eigendecomposition);
        }
        Ok(HermitianSpectrum {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalues, in the solver's order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `U f(Λ) U†` for a scalar function applied to the eigenvalues.
    pub fn map<F>(&self, f: F) -> Operator
    where
        F: Fn(f64) -> C64,
    {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let factor = f(lambda);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= factor;
            }
        }
        Operator(scaled * self.vectors.adjoint())
    }

    /// `exp(-i · scale · H)`.
    pub fn exp_minus_i(&self, scale: f64) -> Operator {
        self.map(|lambda| phase(-scale * lambda))
    }

    /// Change of basis into the eigenbasis: `U† A U`.
    pub fn to_eigenbasis(&self, op: &Operator) -> Result<Operator> {
        ensure_same_dim(self.dim(), op.dim())?;
        Ok(Operator(self.vectors.adjoint() * &op.0 * &self.vectors))
    }

    /// Diagonal of `U† A U`, i.e. `⟨u_k|A|u_k⟩` for each eigenvector.
    pub fn eigenbasis_diagonal(&self, op: &Operator) -> Result<Vec<C64>> {
        ensure_same_dim(self.dim(), op.dim())?;
        let applied = &op.0 * &self.vectors;
        Ok((0..self.dim())
            .map(|k| self.vectors.column(k).dotc(&applied.column(k)))
            .collect())
    }
}

/// `e^{iφ}`.
pub fn phase(angle: f64) -> C64 {
    C64::new(libm::cos(angle), libm::sin(angle))
}

fn check_ladder_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidDimension { dim, min: 2 });
    }
    Ok(())
}

/// Annihilation operator `a`, with `⟨n-1|a|n⟩ = √n`.
pub fn annihilation(dim: usize) -> Result<Operator> {
    check_ladder_dim(dim)?;
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new(libm::sqrt(n as f64), 0.0);
    }
    Ok(Operator(m))
}

/// Creation operator `a†`.
pub fn creation(dim: usize) -> Result<Operator> {
    Ok(annihilation(dim)?.adjoint())
}

/// Number operator `a†a = diag(0, 1, …, dim-1)`.
pub fn number(dim: usize) -> Result<Operator> {
    check_ladder_dim(dim)?;
    Ok(Operator::from_diagonal(
        (0..dim).map(|n| C64::new(n as f64, 0.0)),
    ))
}

/// `exp(-i · scale · H)` for Hermitian `H`, via eigendecomposition.
pub fn expm_hermitian(h: &Operator, scale: f64) -> Result<Operator> {
    Ok(h.spectrum()?.exp_minus_i(scale))
}

/// Displacement `D(λ) = exp(λ a† - λ* a)` on the truncated space.
///
/// Computed as `exp(-i K)` with the Hermitian generator
/// `K = i(λ a† - λ* a)`, so the result is unitary to rounding for any cutoff.
pub fn displacement(lambda: C64, dim: usize) -> Result<Operator> {
    let a = annihilation(dim)?;
    let i = C64::new(0.0, 1.0);
    let generator = &a.adjoint().scale(i * lambda) - &a.scale(i * lambda.conj());
    expm_hermitian(&generator, 1.0)
}

/// Fock basis vector `|n⟩`.
pub fn fock_vector(n: usize, dim: usize) -> Result<DVector<C64>> {
    if n >= dim {
        return Err(Error::InvalidDimension { dim, min: n + 1 });
    }
    let mut v = DVector::zeros(dim);
    v[n] = ONE;
    Ok(v)
}

/// Clamp eigenvalues in `[POSITIVITY_FLOOR, 0)` to zero and renormalize.
fn regularize(op: &Operator) -> Result<Operator> {
    let spectrum = HermitianSpectrum::with_tolerance(op, STATE_HERMITIAN_TOL)?;
    let min = spectrum.min_value();
    if min < POSITIVITY_FLOOR {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    if min >= 0.0 {
        return Ok(op.clone());
    }
    let total: f64 = spectrum.values.iter().map(|&v| v.max(0.0)).sum();
    Ok(spectrum.map(|v| C64::new(v.max(0.0) / total, 0.0)))
}

fn validate_state(op: &Operator) -> Result<()> {
    let deviation = op.hermiticity_error();
    if deviation > STATE_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let trace = op.trace();
    if (trace - ONE).norm() > TRACE_TOL {
        return Err(Error::InvalidTrace { trace: trace.re });
    }
    let min = HermitianSpectrum::with_tolerance(op, STATE_HERMITIAN_TOL)?.min_value();
    if min < POSITIVITY_FLOOR {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

/// A density operator of the mode: Hermitian, unit trace, positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(Operator);

impl DensityOperator {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(op: Operator) -> Result<Self> {
        validate_state(&op)?;
        Ok(DensityOperator(op))
    }

    /// For states that are valid by construction (unitary conjugation of a
    /// valid state, normalized diagonal weights).
    pub(crate) fn new_unchecked(op: Operator) -> Self {
        DensityOperator(op)
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if psi.is_empty() || (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace { trace: norm * norm });
        }
        Self::new(Operator(psi * psi.adjoint()))
    }

    /// Fock state `|n⟩⟨n|`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        Self::pure(&fock_vector(n, dim)?)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    /// `U ρ U†` for a unitary `U`.
    pub fn evolve(&self, unitary: &Operator) -> Result<Self> {
        let deviation = unitary.unitarity_error();
        if deviation > GENERATOR_HERMITIAN_TOL {
            return Err(Error::invalid(
                "unitary",
                alloc::format!("max |U U† - I| = {deviation:e}"),
            ));
        }
        Ok(DensityOperator(self.0.conjugated_by(unitary)?))
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ ρ) = Σ |ρ_ij|² for Hermitian ρ.
        self.0 .0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(a†a ρ)`.
    pub fn mean_number(&self) -> f64 {
        (0..self.dim())
            .map(|n| n as f64 * self.0.get(n, n).re)
            .sum()
    }

    /// `Tr(A ρ)`.
    pub fn expectation(&self, observable: &Operator) -> Result<C64> {
        ensure_same_dim(self.dim(), observable.dim())?;
        Ok((&observable.0 * &self.0 .0).trace())
    }

    /// Minimum eigenvalue; diagnostic for truncation artefacts.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(HermitianSpectrum::with_tolerance(&self.0, STATE_HERMITIAN_TOL)?.min_value())
    }

    fn regularized(&self) -> Result<Operator> {
        regularize(&self.0)
    }
}

/// `½ Σ |eig(ρ - σ)|`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    ensure_same_dim(rho.dim(), sigma.dim())?;
    let diff = &rho.regularized()? - &sigma.regularized()?;
    let spectrum = HermitianSpectrum::with_tolerance(&diff, 2.0 * STATE_HERMITIAN_TOL)?;
    Ok(0.5 * spectrum.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// A joint qubit–mode density operator of size `2·env_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    op: Operator,
    env_dim: usize,
}

impl JointState {
    pub fn new(op: Operator) -> Result<Self> {
        let env_dim = Self::env_dim_of(&op)?;
        validate_state(&op)?;
        Ok(JointState { op, env_dim })
    }

    fn env_dim_of(op: &Operator) -> Result<usize> {
        if !op.dim().is_multiple_of(2) || op.dim() < 2 {
            return Err(Error::InvalidDimension {
                dim: op.dim(),
                min: 2,
            });
        }
        Ok(op.dim() / 2)
    }

    /// Assemble from the four `(q, q')` blocks.
    pub fn from_blocks(blocks: [[&Operator; 2]; 2]) -> Result<Self> {
        JointState::new(assemble_blocks(blocks)?)
    }

    /// `ρ_qubit ⊗ R`.
    pub fn product(qubit: &Operator, env: &DensityOperator) -> Result<Self> {
        if qubit.dim() != 2 {
            return Err(Error::DimensionMismatch {
                left: 2,
                right: qubit.dim(),
            });
        }
        let env_op = env.operator();
        let blocks: Vec<Operator> = (0..4)
            .map(|k| env_op.scale(qubit.get(k / 2, k % 2)))
            .collect();
        Self::from_blocks([[&blocks[0], &blocks[1]], [&blocks[2], &blocks[3]]])
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    /// Block `(q, q')`.
    pub fn block(&self, q: usize, q_prime: usize) -> Operator {
        let n = self.env_dim;
        Operator(self.op.0.view((q * n, q_prime * n), (n, n)).into_owned())
    }

    /// `(U_0 ⊕ U_1) σ (U_0 ⊕ U_1)†` for a qubit-diagonal joint unitary.
    pub fn evolve_block_diagonal(&self, u0: &Operator, u1: &Operator) -> Result<Self> {
        ensure_same_dim(self.env_dim, u0.dim())?;
        ensure_same_dim(self.env_dim, u1.dim())?;
        let zero = Operator::zeros(self.env_dim);
        let joint = assemble_blocks([[u0, &zero], [&zero, u1]])?;
        JointState::new(Operator(&joint.0 * &self.op.0 * joint.0.adjoint()))
    }
}

pub(crate) fn assemble_blocks(blocks: [[&Operator; 2]; 2]) -> Result<Operator> {
    let n = blocks[0][0].dim();
    for row in &blocks {
        for b in row {
            ensure_same_dim(n, b.dim())?;
        }
    }
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (q, row) in blocks.iter().enumerate() {
        for (qp, b) in row.iter().enumerate() {
            m.view_mut((q * n, qp * n), (n, n)).copy_from(&b.0);
        }
    }
    Ok(Operator(m))
}

/// Transpose on the qubit factor: block `(q, q')` moves to `(q', q)`.
pub fn partial_transpose_qubit(state: &JointState) -> Operator {
    transpose_qubit_blocks(&state.op, state.env_dim)
}

fn transpose_qubit_blocks(op: &Operator, n: usize) -> Operator {
    let mut m = op.0.clone();
    let upper = op.0.view((0, n), (n, n)).into_owned();
    let lower = op.0.view((n, 0), (n, n)).into_owned();
    m.view_mut((0, n), (n, n)).copy_from(&lower);
    m.view_mut((n, 0), (n, n)).copy_from(&upper);
    Operator(m)
}

/// Sum of the magnitudes of the negative eigenvalues of the qubit partial
/// transpose.
pub fn negativity(state: &JointState) -> Result<f64> {
    let regular = regularize(&state.op)?;
    let pt = transpose_qubit_blocks(&regular, state.env_dim);
    let spectrum = HermitianSpectrum::with_tolerance(&pt, STATE_HERMITIAN_TOL)?;
    Ok(spectrum
        .values
        .iter()
        .filter(|&&v| v < 0.0)
        .map(|v| -v)
        .sum())
}

/// Reduced qubit state, `ρ_qq' = Tr_env block(q, q')`.
pub fn partial_trace_env(state: &JointState) -> Operator {
    let n = state.env_dim;
    let mut m = DMatrix::from_element(2, 2, ZERO);
    for q in 0..2 {
        for qp in 0..2 {
            m[(q, qp)] = (0..n).map(|k| state.op.0[(q * n + k, qp * n + k)]).sum();
        }
    }
    Operator(m)
}
