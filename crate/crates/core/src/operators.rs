//! Spin operators, basis states and the rotating-frame Hamiltonian of the
//! hybrid NV-center / flux-qubit system.
//!
//! Units: hbar = 1, energies in rad/us, times in us.
//!
//! Basis ordering is fixed crate-wide: the NV factor comes first with levels
//! `(|+1>, |0>, |-1>)`, the flux qubit second with `(|up>, |down>)`. The
//! six-dimensional product index is therefore `2 * nv + fq`.
//!
//! [`SystemParams`] only stores the five rotating-frame combinations that the
//! dynamics depend on. Starting from laboratory-frame quantities (bias `eps`,
//! tunnel splitting `Delta`, zero-field splitting `D`, drive frame `omega`,
//! coupling `G` at polar angle `theta`, NV bias field `B_z`) they are
//!
//! ```text
//! xi        = atan2(Delta, eps)
//! delta_fq  = sqrt(eps^2 + Delta^2) - omega
//! delta_nv  = D - omega
//! g_perp    = G sin(theta) sin(xi)
//! g_par     = G cos(theta) cos(xi)
//! b_z       = g_e mu_B B_z
//! ```
//!
//! The operating point is `Delta = D`, `eps = 0` and `b_z = g_par`; choosing
//! `omega = D` additionally zeroes both detunings.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Dimension of the NV spin-1 factor.
pub const NV_DIM: usize = 3;
/// Dimension of the flux-qubit factor.
pub const FQ_DIM: usize = 2;
/// Dimension of the hybrid Hilbert space.
pub const HYBRID_DIM: usize = NV_DIM * FQ_DIM;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Dense complex square matrix.
///
/// Used for Hamiltonians, collapse operators, projectors and density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return input(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        Ok(Self(m))
    }

    /// Builds a `dim x dim` operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return input(format!(
                "expected {} entries for a {dim}x{dim} operator, got {}",
                dim * dim,
                entries.len()
            ));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, entries)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&d))
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

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Operator) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Operator) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        Ket(&self.0 * &ket.0)
    }

    /// `<bra| self |ket>`
    pub fn matrix_element(&self, bra: &Ket, ket: &Ket) -> C64 {
        bra.0.dotc(&(&self.0 * &ket.0))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max|M - M†|` relative to `max|M|` (absolute when `M` is zero).
    pub fn hermiticity_error(&self) -> f64 {
        let scale = self.max_abs();
        let diff = (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_error() <= rel_tol
    }

    /// Restriction `P† M P` onto the span of `basis` (assumed orthonormal).
    pub fn restrict(&self, basis: &[Ket]) -> Self {
        let p = isometry(basis);
        Self(p.adjoint() * &self.0 * p)
    }
}

/// Columns of the returned matrix are the given kets.
pub(crate) fn isometry(basis: &[Ket]) -> DMatrix<C64> {
    let cols: Vec<DVector<C64>> = basis.iter().map(|k| k.0.clone()).collect();
    DMatrix::from_columns(&cols)
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-self.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator(self.0 * rhs.0)
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator(self.0 * C64::new(rhs, 0.0))
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator(&self.0 * C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        Operator(self.0 * rhs)
    }
}

/// Column state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(DVector<C64>);

impl Ket {
    pub fn new(v: DVector<C64>) -> Self {
        Self(v)
    }

    pub fn from_slice(amps: &[C64]) -> Self {
        Self(DVector::from_column_slice(amps))
    }

    /// Computational basis vector `|index>` of a `dim`-dimensional space.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.0[index]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Ket) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|self><other|`
    pub fn outer(&self, other: &Ket) -> Operator {
        Operator(&self.0 * other.0.adjoint())
    }

    pub fn projector(&self) -> Operator {
        self.outer(self)
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        Ket(self.0.kronecker(&other.0))
    }

    pub fn scale(&self, c: C64) -> Ket {
        Ket(&self.0 * c)
    }

    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &Ket {
    type Output = Ket;
    fn add(self, rhs: &Ket) -> Ket {
        Ket(&self.0 + &rhs.0)
    }
}

impl Sub for &Ket {
    type Output = Ket;
    fn sub(self, rhs: &Ket) -> Ket {
        Ket(&self.0 - &rhs.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => input(format!("unknown axis '{other}', expected x, y or z")),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

/// Pauli matrix in the `(|up>, |down>)` basis, `sigma_z |up> = +|up>`.
pub fn pauli(axis: Axis) -> Operator {
    let entries = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    Operator(DMatrix::from_row_slice(2, 2, &entries))
}

/// `sigma_+ = |up><down|`
pub fn sigma_plus() -> Operator {
    Operator(DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]))
}

/// `sigma_- = |down><up|`
pub fn sigma_minus() -> Operator {
    Operator(DMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]))
}

/// Spin-1 matrices in the `(|+1>, |0>, |-1>)` basis.
pub fn spin1(axis: Axis) -> Operator {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ri = I * r;
    let entries = match axis {
        Axis::X => [ZERO, r, ZERO, r, ZERO, r, ZERO, r, ZERO],
        Axis::Y => [ZERO, -ri, ZERO, ri, ZERO, -ri, ZERO, ri, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, -ONE],
    };
    Operator(DMatrix::from_row_slice(3, 3, &entries))
}

/// NV spin projection `m_s` as a ket of the three-level space.
pub fn nv_level(m_s: i8) -> Result<Ket> {
    let index = match m_s {
        1 => 0,
        0 => 1,
        -1 => 2,
        other => return input(format!("spin-1 projection must be -1, 0 or 1, got {other}")),
    };
    Ok(Ket::basis(NV_DIM, index))
}

pub fn fq_up() -> Ket {
    Ket::basis(FQ_DIM, 0)
}

pub fn fq_down() -> Ket {
    Ket::basis(FQ_DIM, 1)
}

/// Bright/dark decomposition of the `m_s = ±1` doublet.
#[derive(Clone, Debug)]
pub struct BrightDark {
    /// `(|+1> + |-1>)/√2`
    pub ket_b: Ket,
    /// `(|+1> - |-1>)/√2`
    pub ket_d: Ket,
    /// `|B><0|`
    pub s_plus_bar: Operator,
    /// `|0><B|`
    pub s_minus_bar: Operator,
}

pub fn bright_dark_basis() -> BrightDark {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let ket_b = Ket::from_slice(&[C64::new(r, 0.0), ZERO, C64::new(r, 0.0)]);
    let ket_d = Ket::from_slice(&[C64::new(r, 0.0), ZERO, C64::new(-r, 0.0)]);
    let zero = Ket::basis(NV_DIM, 1);
    BrightDark {
        s_plus_bar: ket_b.outer(&zero),
        s_minus_bar: zero.outer(&ket_b),
        ket_b,
        ket_d,
    }
}

/// NV ⊗ flux-qubit product. This is the only ordering used in the crate.
pub fn tensor(nv: &Operator, fq: &Operator) -> Operator {
    nv.kron(fq)
}

/// Named hybrid states, all in the six-dimensional product space.
pub mod states {
    use super::*;

    fn product(nv: Ket, fq: Ket) -> Ket {
        nv.kron(&fq)
    }

    /// `|0, down>`, the lower eigenstate `|E1>` at the operating point.
    pub fn zero_down() -> Ket {
        product(Ket::basis(NV_DIM, 1), fq_down())
    }

    pub fn zero_up() -> Ket {
        product(Ket::basis(NV_DIM, 1), fq_up())
    }

    /// `|D, down>`, the protected eigenstate `|E3>`.
    pub fn dark_down() -> Ket {
        product(bright_dark_basis().ket_d, fq_down())
    }

    pub fn bright_down() -> Ket {
        product(bright_dark_basis().ket_b, fq_down())
    }

    pub fn plus_up() -> Ket {
        product(Ket::basis(NV_DIM, 0), fq_up())
    }

    pub fn minus_up() -> Ket {
        product(Ket::basis(NV_DIM, 2), fq_up())
    }

    /// Ordered basis of the zero/one-excitation block:
    /// `|0↓>, |B↓>, |D↓>, |0↑>`.
    pub fn single_excitation_block() -> [Ket; 4] {
        [zero_down(), bright_down(), dark_down(), zero_up()]
    }

    /// The two-excitation states `|+1↑>`, `|-1↑>` left out of the block.
    pub fn two_excitation() -> [Ket; 2] {
        [plus_up(), minus_up()]
    }

    /// `alpha |0↓> + beta |D↓>`
    pub fn superposition(alpha: C64, beta: C64) -> Ket {
        &zero_down().scale(alpha) + &dark_down().scale(beta)
    }
}

/// Rotating-frame parameters of the hybrid Hamiltonian, all in rad/us.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g_perp: f64,
    pub g_par: f64,
    pub delta_fq: f64,
    pub delta_nv: f64,
    pub b_z: f64,
}

impl SystemParams {
    /// Operating point with `omega = D` (both detunings zero) and no
    /// longitudinal coupling.
    pub fn operating_point(g_perp: f64) -> Self {
        Self {
            g_perp,
            g_par: 0.0,
            delta_fq: 0.0,
            delta_nv: 0.0,
            b_z: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.g_perp, self.g_par, self.delta_fq, self.delta_nv, self.b_z];
        if fields.iter().any(|x| !x.is_finite()) {
            return input("system parameters must be finite");
        }
        if self.g_perp < 0.0 {
            return input(format!("g_perp must be non-negative, got {}", self.g_perp));
        }
        Ok(())
    }

    /// Whether `delta_fq = delta_nv` and `g_par = b_z` within `tol` (relative
    /// to the largest parameter magnitude).
    pub fn is_operating_point(&self, tol: f64) -> bool {
        let scale = [self.g_perp, self.g_par, self.delta_fq, self.delta_nv, self.b_z]
            .iter()
            .fold(1.0_f64, |m, x| m.max(x.abs()));
        (self.delta_fq - self.delta_nv).abs() <= tol * scale
            && (self.g_par - self.b_z).abs() <= tol * scale
    }
}

impl Add for SystemParams {
    type Output = SystemParams;
    fn add(self, o: SystemParams) -> SystemParams {
        SystemParams {
            g_perp: self.g_perp + o.g_perp,
            g_par: self.g_par + o.g_par,
            delta_fq: self.delta_fq + o.delta_fq,
            delta_nv: self.delta_nv + o.delta_nv,
            b_z: self.b_z + o.b_z,
        }
    }
}

/// Rotating-frame Hamiltonian
///
/// ```text
/// H0 = delta_fq/2 I⊗σz + g_perp (S̄₋⊗σ₊ + S̄₊⊗σ₋) + g_par Sz⊗σz
///    + delta_nv Sz²⊗I + b_z Sz⊗I
/// ```
pub fn build_hamiltonian(p: &SystemParams) -> Operator {
    let bd = bright_dark_basis();
    let sz = spin1(Axis::Z);
    let sz2 = &sz * &sz;
    let id_nv = Operator::identity(NV_DIM);
    let id_fq = Operator::identity(FQ_DIM);
    let sigz = pauli(Axis::Z);

    let exchange = tensor(&bd.s_minus_bar, &sigma_plus()) + tensor(&bd.s_plus_bar, &sigma_minus());

    tensor(&id_nv, &sigz) * (0.5 * p.delta_fq)
        + exchange * p.g_perp
        + tensor(&sz, &sigz) * p.g_par
        + tensor(&sz2, &id_fq) * p.delta_nv
        + tensor(&sz, &id_fq) * p.b_z
}

/// `Sz ⊗ I`. The stochastic prefactor `(b/2) f(t)` is applied by the caller.
pub fn noise_operator() -> Operator {
    tensor(&spin1(Axis::Z), &Operator::identity(FQ_DIM))
}

/// `I ⊗ σz`, the flux-qubit quasi-static dephasing channel.
pub fn fq_dephasing_operator() -> Operator {
    tensor(&Operator::identity(NV_DIM), &pauli(Axis::Z))
}

/// `I ⊗ σ₋`, the flux-qubit relaxation channel.
pub fn fq_lowering_operator() -> Operator {
    tensor(&Operator::identity(NV_DIM), &sigma_minus())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn pauli_algebra() {
        assert_eq!(pauli(Axis::Z), Operator::from_diagonal(&[1.0, -1.0]));
        let x = pauli(Axis::X);
        assert!(close(&(&x * &x), &Operator::identity(2), 0.0));
        let comm = pauli(Axis::X).commutator(&pauli(Axis::Y));
        assert!(close(&comm, &(pauli(Axis::Z) * C64::new(0.0, 2.0)), 1e-15));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("Y".parse::<Axis>().unwrap(), Axis::Y);
        assert!(matches!("w".parse::<Axis>(), Err(Error::Input(_))));
    }

    #[test]
    fn spin1_algebra() {
        let plus = nv_level(1).unwrap();
        assert_eq!(spin1(Axis::Z).apply(&plus), plus);
        let casimir = [Axis::X, Axis::Y, Axis::Z]
            .iter()
            .map(|&a| &spin1(a) * &spin1(a))
            .fold(Operator::zeros(3), |acc, s| acc + s);
        assert!(close(&casimir, &(Operator::identity(3) * 2.0), 1e-15));
        let sz = spin1(Axis::Z);
        assert_eq!(&sz * &sz, Operator::from_diagonal(&[1.0, 0.0, 1.0]));
        assert!(nv_level(2).is_err());
    }

    #[test]
    fn bright_dark_relations() {
        let bd = bright_dark_basis();
        assert!(bd.ket_b.inner(&bd.ket_d).norm() < 1e-16);
        let zero = nv_level(0).unwrap();
        assert!(bd.s_plus_bar.apply(&zero).max_abs_diff(&bd.ket_b) < 1e-16);
        assert!(bd.s_minus_bar.apply(&bd.ket_b).max_abs_diff(&zero) < 1e-15);
        // Sz swaps bright and dark
        assert!(spin1(Axis::Z).apply(&bd.ket_d).max_abs_diff(&bd.ket_b) < 1e-16);
        assert!(spin1(Axis::Z).apply(&bd.ket_b).max_abs_diff(&bd.ket_d) < 1e-16);
    }

    #[test]
    fn tensor_ordering() {
        assert_eq!(
            tensor(&Operator::identity(3), &Operator::identity(2)),
            Operator::identity(6)
        );
        let zz = tensor(&spin1(Axis::Z), &pauli(Axis::Z));
        let plus_up = states::plus_up();
        assert_eq!(zz.matrix_element(&plus_up, &plus_up), ONE);
        assert_eq!(plus_up.amplitude(0), ONE);
    }

    #[test]
    fn zero_parameters_give_zero_hamiltonian() {
        let h = build_hamiltonian(&SystemParams::operating_point(0.0));
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn dark_state_decouples_at_operating_point() {
        let p = SystemParams {
            g_perp: 0.7,
            g_par: 0.3,
            delta_fq: 1.1,
            delta_nv: 1.1,
            b_z: 0.3,
        };
        let h = build_hamiltonian(&p);
        assert!(h.is_hermitian(1e-12));
        let d = states::dark_down();
        let b = states::bright_down();
        assert!(h.matrix_element(&d, &b).norm() < 1e-15);
        let proj = d.projector();
        assert!(h.commutator(&proj).max_abs() < 1e-12);
    }

    #[test]
    fn exchange_couples_bright_to_excited_qubit() {
        let h = build_hamiltonian(&SystemParams::operating_point(0.5));
        let el = h.matrix_element(&states::zero_up(), &states::bright_down());
        assert!((el - C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn noise_operator_action() {
        let n = noise_operator();
        assert!(n.apply(&states::zero_down()).norm() < 1e-16);
        assert!(n.apply(&states::dark_down()).max_abs_diff(&states::bright_down()) < 1e-16);
        assert!(n.is_hermitian(0.0));
    }

    #[test]
    fn block_invariant_without_longitudinal_terms() {
        let p = SystemParams {
            g_perp: 0.9,
            g_par: 0.0,
            delta_fq: -0.4,
            delta_nv: 0.25,
            b_z: 0.0,
        };
        let h = build_hamiltonian(&p);
        for outside in states::two_excitation() {
            for inside in states::single_excitation_block() {
                assert!(h.matrix_element(&outside, &inside).norm() < 1e-15);
            }
        }
    }
}
