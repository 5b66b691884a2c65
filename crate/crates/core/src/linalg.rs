//! Dense complex linear algebra for dimensions 2 and 4.
//!
//! Two-spin vectors and matrices use the ordered product basis
//! `|++⟩, |+−⟩, |−+⟩, |−−⟩`. Spin 1 is the first (most significant) tensor
//! factor, so a single-spin operator `K` acts on spin 1 as `K ⊗ σ₀` and on
//! spin 2 as `σ₀ ⊗ K`.

use core::ops::{Add, AddAssign, Deref, Index, IndexMut, Mul, Neg, Sub};

#[allow(unused_imports)] // shadowed by inherent f64 methods whenever std is linked
use num_traits::Float as _;

use crate::error::invalid;
use crate::{Error, Result, ALGEBRAIC_TOL, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Raw complex amplitudes, not necessarily normalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ket<const N: usize>(pub [C64; N]);

impl<const N: usize> Ket<N> {
    pub const fn new(amps: [C64; N]) -> Self {
        Self(amps)
    }

    pub const fn zero() -> Self {
        Self([ZERO; N])
    }

    /// Real-valued amplitudes.
    pub fn real(amps: [f64; N]) -> Self {
        Self(amps.map(|a| C64::new(a, 0.0)))
    }

    pub fn basis(index: usize) -> Self {
        let mut amps = [ZERO; N];
        amps[index] = ONE;
        Self(amps)
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|a| a * s))
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|a| a.conj()))
    }

    /// `|self⟩⟨other|`
    pub fn outer(&self, other: &Self) -> Matrix<N> {
        Matrix::from_fn(|i, j| self.0[i] * other.0[j].conj())
    }

    /// Largest componentwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl<const N: usize> Default for Ket<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Index<usize> for Ket<N> {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl<const N: usize> IndexMut<usize> for Ket<N> {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl<const N: usize> Add for Ket<N> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(core::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl<const N: usize> Sub for Ket<N> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(core::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl<const N: usize> Neg for Ket<N> {
    type Output = Self;

    fn neg(self) -> Self {
        Self(self.0.map(|a| -a))
    }
}

impl<const N: usize> Mul<f64> for Ket<N> {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        Self(self.0.map(|a| a * rhs))
    }
}

impl<const N: usize> Mul<C64> for Ket<N> {
    type Output = Self;

    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

/// A normalized state vector.
///
/// Every constructor rescales its input so that `Σ|aᵢ|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector<const N: usize>(Ket<N>);

impl<const N: usize> StateVector<N> {
    /// Normalizes `amps`; fails on a zero or non-finite vector.
    pub fn new(amps: [C64; N]) -> Result<Self> {
        Self::from_ket(Ket(amps))
    }

    pub fn from_ket(ket: Ket<N>) -> Result<Self> {
        if !ket.is_finite() {
            return Err(invalid!("state amplitudes must be finite"));
        }
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(invalid!("cannot normalize the zero vector"));
        }
        Ok(Self(ket * norm.recip()))
    }

    pub fn basis(index: usize) -> Self {
        Self(Ket::basis(index))
    }

    pub fn as_ket(&self) -> &Ket<N> {
        &self.0
    }

    pub fn into_ket(self) -> Ket<N> {
        self.0
    }

    pub fn amplitudes(&self) -> &[C64; N] {
        &self.0 .0
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.0.inner(&other.0).norm_sqr()
    }
}

impl<const N: usize> Deref for StateVector<N> {
    type Target = Ket<N>;

    fn deref(&self) -> &Ket<N> {
        &self.0
    }
}

/// Dense `N × N` complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

impl<const N: usize> Matrix<N> {
    pub const fn zero() -> Self {
        Self([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(core::array::from_fn(|i| core::array::from_fn(|j| f(i, j))))
    }

    pub fn diagonal(diag: [C64; N]) -> Self {
        Self::from_fn(|i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> C64 {
        (0..N).fold(ZERO, |acc, i| acc + self.0[i][i])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.map(|row| row.map(|a| a * s)))
    }

    pub fn apply(&self, ket: &Ket<N>) -> Ket<N> {
        Ket(core::array::from_fn(|i| {
            self.0[i]
                .iter()
                .zip(ket.0.iter())
                .fold(ZERO, |acc, (m, v)| acc + m * v)
        }))
    }

    /// `[self, other] = self·other − other·self`
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// `self·other + other·self`
    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..N).all(|i| (i..N).all(|j| (self.0[i][j] - self.0[j][i].conj()).norm() <= tol))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C64 {
        let mut a = self.0;
        let mut det = ONE;
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))
                .unwrap_or(col);
            if a[pivot][col] == ZERO {
                return ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            let p = a[col][col];
            det *= p;
            for r in col + 1..N {
                let factor = a[r][col] / p;
                for c in col..N {
                    let v = a[col][c];
                    a[r][c] -= factor * v;
                }
            }
        }
        det
    }
}

impl Matrix<2> {
    /// Kronecker product `self ⊗ other`; `self` indexes the major (first)
    /// tensor factor.
    pub fn kron(&self, other: &Matrix<2>) -> Matrix<4> {
        Matrix::from_fn(|i, j| self.0[i / 2][j / 2] * other.0[i % 2][j % 2])
    }
}

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> AddAssign for Matrix<N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;

    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..N).fold(ZERO, |acc, k| acc + self.0[i][k] * rhs.0[k][j]))
    }
}

impl<const N: usize> Mul<C64> for Matrix<N> {
    type Output = Self;

    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<f64> for Matrix<N> {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        self.scale(C64::new(rhs, 0.0))
    }
}

/// A Hermitian matrix: Hamiltonians (angular-frequency units), projectors,
/// spin components and `M_D`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianOperator<const N: usize>(Matrix<N>);

impl<const N: usize> HermitianOperator<N> {
    /// Checks `mᵢⱼ = conj(mⱼᵢ)` to within [`ALGEBRAIC_TOL`] (relative to the
    /// largest entry when that exceeds one).
    pub fn new(m: Matrix<N>) -> Result<Self> {
        let tol = ALGEBRAIC_TOL * m.max_abs().max(1.0);
        if !m.is_hermitian(tol) {
            return Err(invalid!("matrix is not Hermitian"));
        }
        Ok(Self(m))
    }

    /// Caller guarantees hermiticity by construction.
    pub(crate) fn new_unchecked(m: Matrix<N>) -> Self {
        Self(m)
    }

    pub fn zero() -> Self {
        Self(Matrix::zero())
    }

    pub fn identity() -> Self {
        Self(Matrix::identity())
    }

    /// Real diagonal operator.
    pub fn diagonal(diag: [f64; N]) -> Self {
        Self(Matrix::diagonal(diag.map(|d| C64::new(d, 0.0))))
    }

    pub fn matrix(&self) -> &Matrix<N> {
        &self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0 * s)
    }

    pub fn apply(&self, ket: &Ket<N>) -> Ket<N> {
        self.0.apply(ket)
    }
}

impl<const N: usize> Deref for HermitianOperator<N> {
    type Target = Matrix<N>;

    fn deref(&self) -> &Matrix<N> {
        &self.0
    }
}

impl<const N: usize> Add for HermitianOperator<N> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl<const N: usize> Sub for HermitianOperator<N> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl<const N: usize> Mul<f64> for HermitianOperator<N> {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

/// Density operator of unit trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityOperator<const N: usize>(Matrix<N>);

impl<const N: usize> DensityOperator<N> {
    pub fn new(m: Matrix<N>) -> Result<Self> {
        if !m.is_hermitian(ALGEBRAIC_TOL) {
            return Err(invalid!("density operator is not Hermitian"));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > ALGEBRAIC_TOL {
            return Err(invalid!("density operator trace is {tr}, expected 1"));
        }
        Ok(Self(m))
    }

    /// `ρ = |ψ⟩⟨ψ|`
    pub fn pure(psi: &StateVector<N>) -> Self {
        Self(psi.outer(psi))
    }

    pub fn matrix(&self) -> &Matrix<N> {
        &self.0
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }
}

impl<const N: usize> Deref for DensityOperator<N> {
    type Target = Matrix<N>;

    fn deref(&self) -> &Matrix<N> {
        &self.0
    }
}

/// One of the two spins of a four-dimensional system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    One,
    Two,
}

impl TryFrom<u8> for Spin {
    type Error = Error;

    fn try_from(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Spin::One),
            2 => Ok(Spin::Two),
            other => Err(invalid!("spin tag must be 1 or 2, got {other}")),
        }
    }
}

pub fn sigma0() -> HermitianOperator<2> {
    HermitianOperator::identity()
}

pub fn sigma_x() -> HermitianOperator<2> {
    HermitianOperator(Matrix([[ZERO, ONE], [ONE, ZERO]]))
}

pub fn sigma_y() -> HermitianOperator<2> {
    HermitianOperator(Matrix([[ZERO, -I], [I, ZERO]]))
}

pub fn sigma_z() -> HermitianOperator<2> {
    HermitianOperator::diagonal([1.0, -1.0])
}

/// `v · σ`
pub fn pauli_dot(v: [f64; 3]) -> HermitianOperator<2> {
    let [x, y, z] = v;
    HermitianOperator(Matrix([
        [C64::new(z, 0.0), C64::new(x, -y)],
        [C64::new(x, y), C64::new(-z, 0.0)],
    ]))
}

/// Kronecker product of two single-spin operators.
pub fn kron(a: &HermitianOperator<2>, b: &HermitianOperator<2>) -> HermitianOperator<4> {
    HermitianOperator(a.0.kron(&b.0))
}

/// Embeds a single-spin operator into the two-spin space.
pub fn embed(op: &HermitianOperator<2>, spin: Spin) -> HermitianOperator<4> {
    match spin {
        Spin::One => kron(op, &sigma0()),
        Spin::Two => kron(&sigma0(), op),
    }
}

/// `⟨ψ|O|ψ⟩`. The imaginary residue is checked against [`ALGEBRAIC_TOL`]
/// (scaled by the largest entry of `O` when that exceeds one).
pub fn expectation<const N: usize>(op: &HermitianOperator<N>, psi: &StateVector<N>) -> Result<f64> {
    expectation_raw(op, psi.as_ket())
}

pub(crate) fn expectation_raw<const N: usize>(op: &HermitianOperator<N>, psi: &Ket<N>) -> Result<f64> {
    let value = psi.inner(&op.apply(psi));
    let tol = ALGEBRAIC_TOL * op.max_abs().max(1.0);
    if value.im.abs() > tol {
        return Err(Error::Numerical(alloc::format!(
            "expectation value has imaginary part {}",
            value.im
        )));
    }
    Ok(value.re)
}

/// `|Ψ⟩⟨Ψ| / ⟨Ψ|Ψ⟩`
pub fn projector<const N: usize>(target: &Ket<N>) -> Result<HermitianOperator<N>> {
    let norm_sqr = target.norm_sqr();
    if norm_sqr == 0.0 || !norm_sqr.is_finite() {
        return Err(invalid!("projector target must be a nonzero finite vector"));
    }
    Ok(HermitianOperator(target.outer(target) * norm_sqr.recip()))
}

/// Transposes the indices of one spin of a two-spin operator.
pub fn partial_transpose(rho: &DensityOperator<4>, spin: Spin) -> Matrix<4> {
    let m = rho.matrix();
    Matrix::from_fn(|row, col| {
        let (r1, r2) = (row / 2, row % 2);
        let (c1, c2) = (col / 2, col % 2);
        match spin {
            Spin::One => m[(2 * c1 + r2, 2 * r1 + c2)],
            Spin::Two => m[(2 * r1 + c2, 2 * c1 + r2)],
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ket<const N: usize>(rng: &mut impl Rng) -> Ket<N> {
        Ket(core::array::from_fn(|_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        }))
    }

    fn random_hermitian<const N: usize>(rng: &mut impl Rng) -> HermitianOperator<N> {
        let m = Matrix::<N>::from_fn(|_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianOperator::new((m + m.dagger()) * 0.5).unwrap()
    }

    #[test]
    fn state_vector_normalizes() {
        let psi = StateVector::new([C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert_abs_diff_eq!(psi.norm_sqr(), 1.0, epsilon = 1e-15);
        assert!(StateVector::<2>::new([ZERO, ZERO]).is_err());
        assert!(StateVector::<2>::new([C64::new(f64::NAN, 0.0), ONE]).is_err());
    }

    #[test]
    fn expectation_of_pauli_on_up() {
        let up = StateVector::<2>::basis(0);
        assert_eq!(expectation(&sigma_z(), &up).unwrap(), 1.0);
        assert_eq!(expectation(&sigma_x(), &up).unwrap(), 0.0);
    }

    #[test]
    fn expectation_matches_elementwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let op = random_hermitian::<4>(&mut rng);
            let psi = StateVector::from_ket(random_ket::<4>(&mut rng)).unwrap();
            let mut oracle = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    oracle += psi[i].conj() * op[(i, j)] * psi[j];
                }
            }
            assert!(oracle.im.abs() < 1e-12);
            assert_abs_diff_eq!(expectation(&op, &psi).unwrap(), oracle.re, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = Matrix([[ZERO, ONE], [ZERO, ZERO]]);
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn kron_identity_factors() {
        let d = |v: [f64; 4]| HermitianOperator::diagonal(v);
        assert_eq!(kron(&sigma0(), &sigma_z()), d([1.0, -1.0, 1.0, -1.0]));
        assert_eq!(kron(&sigma_z(), &sigma0()), d([1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn kron_reproduces_spin_one_projection_matrix() {
        // Entry-by-entry expansion of S₁·û₁ in the |++⟩,|+−⟩,|−+⟩,|−−⟩ basis.
        let (theta, phi) = (0.7_f64, -1.3_f64);
        let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let got = kron(&pauli_dot(u), &sigma0());
        let (c, s) = (C64::new(theta.cos(), 0.0), theta.sin());
        let em = C64::from_polar(s, -phi);
        let ep = C64::from_polar(s, phi);
        let expected = Matrix([
            [c, ZERO, em, ZERO],
            [ZERO, c, ZERO, em],
            [ep, ZERO, -c, ZERO],
            [ZERO, ep, ZERO, -c],
        ]);
        assert!(got.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn projector_examples() {
        let p = projector(&Ket::real([1.0, 0.0])).unwrap();
        assert_eq!(p, HermitianOperator::diagonal([1.0, 0.0]));
        let p2 = projector(&Ket::real([2.0, 0.0])).unwrap();
        assert_eq!(p2, p);
        assert!(projector(&Ket::<2>::zero()).is_err());
    }

    #[test]
    fn projector_idempotent_unit_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let target = random_ket::<4>(&mut rng) * 3.7;
            let p = projector(&target).unwrap();
            let p2 = *p.matrix() * *p.matrix();
            assert!(p2.max_abs_diff(p.matrix()) < 1e-12);
            assert!((p.trace() - ONE).norm() < 1e-12);
        }
    }

    fn det_oracle(m: &Matrix<4>) -> C64 {
        // Leibniz expansion over all 24 permutations.
        let mut total = ZERO;
        let mut perm = [0usize, 1, 2, 3];
        let mut permutations = alloc::vec::Vec::new();
        fn heap(k: usize, a: &mut [usize; 4], out: &mut alloc::vec::Vec<[usize; 4]>) {
            if k == 1 {
                out.push(*a);
                return;
            }
            for i in 0..k {
                heap(k - 1, a, out);
                if k % 2 == 0 {
                    a.swap(i, k - 1);
                } else {
                    a.swap(0, k - 1);
                }
            }
        }
        heap(4, &mut perm, &mut permutations);
        for p in permutations {
            let mut inversions = 0;
            for i in 0..4 {
                for j in i + 1..4 {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            total += (0..4).fold(C64::new(sign, 0.0), |acc, i| acc * m[(i, p[i])]);
        }
        total
    }

    #[test]
    fn det_matches_leibniz() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = Matrix::<4>::from_fn(|_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            assert!((m.det() - det_oracle(&m)).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_product_state() {
        let rho = DensityOperator::pure(&StateVector::<4>::basis(0));
        assert_eq!(partial_transpose(&rho, Spin::One).det(), ZERO);
    }

    #[test]
    fn partial_transpose_singlet() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let singlet = StateVector::from_ket(Ket::real([0.0, h, -h, 0.0])).unwrap();
        let rho = DensityOperator::pure(&singlet);
        let det = det_oracle(&partial_transpose(&rho, Spin::One));
        assert_abs_diff_eq!(det.re, -1.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(det.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_transpose_determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let psi = StateVector::from_ket(random_ket::<4>(&mut rng)).unwrap();
            let e = psi[0] * psi[3] - psi[1] * psi[2];
            let expected = -e.norm_sqr() * e.norm_sqr();
            let rho = DensityOperator::pure(&psi);
            for spin in [Spin::One, Spin::Two] {
                let det = partial_transpose(&rho, spin).det();
                assert!((det - C64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_transpose_twice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = StateVector::from_ket(random_ket::<4>(&mut rng)).unwrap();
        let rho = DensityOperator::pure(&psi);
        for spin in [Spin::One, Spin::Two] {
            let once = DensityOperator::new(partial_transpose(&rho, spin)).unwrap();
            assert_eq!(partial_transpose(&once, spin), *rho.matrix());
        }
        let both = DensityOperator::new(partial_transpose(&rho, Spin::One)).unwrap();
        let full = partial_transpose(&both, Spin::Two);
        assert!(full.max_abs_diff(&rho.transpose()) < 1e-15);
    }

    #[test]
    fn spin_tag_validation() {
        assert_eq!(Spin::try_from(1).unwrap(), Spin::One);
        assert_eq!(Spin::try_from(2).unwrap(), Spin::Two);
        assert!(matches!(Spin::try_from(3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn density_operator_validation() {
        assert!(DensityOperator::new(Matrix::<2>::identity()).is_err());
        let rho = DensityOperator::new(Matrix::<2>::identity() * 0.5).unwrap();
        assert_abs_diff_eq!(rho.purity(), 0.5, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn c64() -> impl Strategy<Value = C64> {
            (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
        }

        fn herm2() -> impl Strategy<Value = HermitianOperator<2>> {
            (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
                .prop_map(|(a, x, y, z)| sigma0().scale(a) + pauli_dot([x, y, z]))
        }

        proptest! {
            #[test]
            fn different_factors_commute(k in herm2(), kp in herm2()) {
                let c = embed(&k, Spin::Two).commutator(&embed(&kp, Spin::One));
                prop_assert!(c.max_abs() < 1e-12);
            }

            #[test]
            fn expectation_is_real(entries in proptest::array::uniform16(c64()),
                                   amps in proptest::array::uniform4(c64())) {
                prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3);
                let m = Matrix::<4>(core::array::from_fn(|i| core::array::from_fn(|j| entries[4 * i + j])));
                let op = HermitianOperator::new((m + m.dagger()) * 0.5).unwrap();
                let psi = StateVector::new(amps).unwrap();
                let value = psi.inner(&op.apply(&psi));
                prop_assert!(value.im.abs() < 1e-12);
            }

            #[test]
            fn projector_is_idempotent(amps in proptest::array::uniform4(c64())) {
                prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3);
                let p = projector(&Ket(amps)).unwrap();
                prop_assert!((*p.matrix() * *p.matrix()).max_abs_diff(p.matrix()) < 1e-12);
                prop_assert!((p.trace().re - 1.0).abs() < 1e-12);
            }
        }
    }
}
