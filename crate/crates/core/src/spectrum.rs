//! Eigenstructure of the hybrid Hamiltonian: numeric diagonalization and the
//! closed-form levels of the zero/one-excitation block.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{input, Result};
use crate::operators::{isometry, states, Ket, Operator, SystemParams};

/// Relative hermiticity tolerance accepted by [`numeric_eigensystem`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order with matching unit-norm eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: DMatrix<C64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> Ket {
        Ket::new(self.eigenvectors.column(k).into_owned())
    }

    /// `max |V†V - I|`
    pub fn unitarity_error(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.adjoint() * &self.eigenvectors - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max_k max |H v_k - λ_k v_k|`
    pub fn residual(&self, h: &Operator) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.eigenvectors.column(k);
                (h.matrix() * v - v * C64::new(self.eigenvalues[k], 0.0))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `V diag(λ) V†`
    pub fn reconstruct(&self) -> Operator {
        let d = DVector::from_iterator(
            self.len(),
            self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)),
        );
        let m = &self.eigenvectors * DMatrix::from_diagonal(&d) * self.eigenvectors.adjoint();
        Operator::new(m).expect("square by construction")
    }

    /// Sum of `|v_k><v_k|` over every level within `tol` of `energy`.
    pub fn projector_at(&self, energy: f64, tol: f64) -> Operator {
        let n = self.eigenvectors.nrows();
        let mut p = DMatrix::<C64>::zeros(n, n);
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            if (e - energy).abs() <= tol {
                let v = self.eigenvectors.column(k);
                p += v * v.adjoint();
            }
        }
        Operator::new(p).expect("square by construction")
    }

    /// Expresses this system's vectors (given in a subspace basis) in the full
    /// space spanned by `basis`.
    pub fn embed(&self, basis: &[Ket]) -> EigenSystem {
        EigenSystem {
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: isometry(basis) * &self.eigenvectors,
        }
    }
}

/// Full spectral decomposition of a hermitian operator.
pub fn numeric_eigensystem(h: &Operator) -> Result<EigenSystem> {
    let err = h.hermiticity_error();
    if err > HERMITIAN_TOL {
        return input(format!(
            "operator is not hermitian (relative asymmetry {err:.3e})"
        ));
    }
    // symmetrize away the residual asymmetry before handing to the solver
    let m = h.matrix();
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let cols: Vec<_> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors: DMatrix::from_columns(&cols),
    })
}

/// Closed-form levels of the zero/one-excitation block, in the order
/// `E1..E4` (not sorted):
///
/// | level | energy        | state              |
/// |-------|---------------|--------------------|
/// | E1    | -Δ0/2         | `|0↓>`             |
/// | E2    | Δ0/2 - g_perp | `(|B↓> - |0↑>)/√2` |
/// | E3    | Δ0/2          | `|D↓>`             |
/// | E4    | Δ0/2 + g_perp | `(|B↓> + |0↑>)/√2` |
///
/// with `Δ0 = delta_nv`. Only valid at the operating point.
#[derive(Clone, Debug)]
pub struct AnalyticLevels {
    pub energies: [f64; 4],
    pub states: [Ket; 4],
}

impl AnalyticLevels {
    /// Same content as an [`EigenSystem`] sorted ascending.
    pub fn to_eigensystem(&self) -> EigenSystem {
        let mut order = [0usize, 1, 2, 3];
        order.sort_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]));
        let cols: Vec<_> = order.iter().map(|&k| self.states[k].vector().clone()).collect();
        EigenSystem {
            eigenvalues: order.iter().map(|&k| self.energies[k]).collect(),
            eigenvectors: DMatrix::from_columns(&cols),
        }
    }
}

/// Evaluates the closed-form levels without checking the operating-point
/// condition. Off the operating point the result is simply wrong, which is
/// what the spectrum comparison uses to flag mismatches.
pub fn analytic_levels_unchecked(p: &SystemParams) -> AnalyticLevels {
    let d0 = p.delta_nv;
    let g = p.g_perp;
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let b = states::bright_down();
    let up = states::zero_up();
    AnalyticLevels {
        energies: [-d0 / 2.0, d0 / 2.0 - g, d0 / 2.0, d0 / 2.0 + g],
        states: [
            states::zero_down(),
            (&b - &up).scale(r),
            states::dark_down(),
            (&b + &up).scale(r),
        ],
    }
}

/// Closed-form eigen-decomposition of the four-state block, embedded in the
/// six-dimensional space and sorted ascending.
pub fn analytic_subspace(p: &SystemParams) -> Result<EigenSystem> {
    p.validate()?;
    if !p.is_operating_point(1e-12) {
        return input(
            "analytic levels require delta_fq = delta_nv and g_par = b_z (operating point)",
        );
    }
    Ok(analytic_levels_unchecked(p).to_eigensystem())
}

/// Numeric eigen-decomposition of `H0` restricted to
/// `{|0↓>, |B↓>, |D↓>, |0↑>}`, with vectors embedded back into the full space.
pub fn numeric_block(h: &Operator) -> Result<EigenSystem> {
    let basis = states::single_excitation_block();
    let block = h.restrict(&basis);
    Ok(numeric_eigensystem(&block)?.embed(&basis))
}

/// Largest eigenvalue and spectral-projector deviation between two systems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumComparison {
    pub max_eigenvalue_error: f64,
    pub max_projector_error: f64,
}

impl SpectrumComparison {
    pub fn within(&self, tol: f64) -> bool {
        self.max_eigenvalue_error <= tol && self.max_projector_error <= tol
    }
}

/// Compares two systems of equal size. Degenerate levels (closer than
/// `degeneracy_tol` in `reference`) are compared through the projector onto
/// their joint eigenspace, which is gauge invariant.
pub fn compare_spectra(
    reference: &EigenSystem,
    other: &EigenSystem,
    degeneracy_tol: f64,
) -> SpectrumComparison {
    let n = reference.len().min(other.len());
    let max_eigenvalue_error = reference
        .eigenvalues
        .iter()
        .zip(&other.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(if reference.len() == other.len() { 0.0 } else { f64::INFINITY }, f64::max);

    let mut max_projector_error: f64 = 0.0;
    let mut k = 0;
    while k < n {
        let mut end = k + 1;
        while end < n
            && reference.eigenvalues[end] - reference.eigenvalues[end - 1] <= degeneracy_tol
        {
            end += 1;
        }
        let dim = reference.eigenvectors.nrows();
        let mut p_ref = DMatrix::<C64>::zeros(dim, dim);
        let mut p_other = DMatrix::<C64>::zeros(dim, dim);
        for j in k..end {
            let a = reference.eigenvectors.column(j);
            let b = other.eigenvectors.column(j);
            p_ref += a * a.adjoint();
            p_other += b * b.adjoint();
        }
        let err = (p_ref - p_other).iter().map(|z| z.norm()).fold(0.0, f64::max);
        max_projector_error = max_projector_error.max(err);
        k = end;
    }

    SpectrumComparison {
        max_eigenvalue_error,
        max_projector_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_hamiltonian, noise_operator};

    const G: f64 = 0.6283;

    #[test]
    fn diagonal_matrix_is_sorted() {
        let es = numeric_eigensystem(&Operator::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(es.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = Operator::from_rows(
            2,
            &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!(numeric_eigensystem(&m).is_err());
    }

    #[test]
    fn full_spectrum_at_default_operating_point() {
        // |B↓>/|0↑> block is [[0, g], [g, 0]] -> ±g, everything else at zero.
        let es = numeric_eigensystem(&build_hamiltonian(&SystemParams::operating_point(G))).unwrap();
        let expected = [-G, 0.0, 0.0, 0.0, 0.0, G];
        for (a, b) in es.eigenvalues.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(es.unitarity_error() < 1e-10);
    }

    #[test]
    fn analytic_levels_at_zero_detuning() {
        let lv = analytic_levels_unchecked(&SystemParams::operating_point(G));
        assert_eq!(lv.energies, [-0.0, -G, 0.0, G]);
        let es = analytic_subspace(&SystemParams::operating_point(G)).unwrap();
        assert!(es.unitarity_error() < 1e-15);
    }

    #[test]
    fn gap_closes_without_transverse_coupling() {
        let p = SystemParams {
            delta_fq: 0.8,
            delta_nv: 0.8,
            ..SystemParams::operating_point(0.0)
        };
        let lv = analytic_levels_unchecked(&p);
        assert_eq!(lv.energies[1], lv.energies[2]);
        assert_eq!(lv.energies[3], lv.energies[2]);
        let cmp = compare_spectra(
            &analytic_subspace(&p).unwrap(),
            &numeric_block(&build_hamiltonian(&p)).unwrap(),
            1e-9,
        );
        assert!(cmp.within(1e-10), "{cmp:?}");
    }

    #[test]
    fn off_operating_point_rejected() {
        let p = SystemParams {
            g_par: 0.1,
            ..SystemParams::operating_point(G)
        };
        assert!(analytic_subspace(&p).is_err());
    }

    #[test]
    fn dark_state_properties() {
        let p = SystemParams {
            g_perp: 0.4,
            g_par: 0.2,
            delta_fq: -0.3,
            delta_nv: -0.3,
            b_z: 0.2,
        };
        let h = build_hamiltonian(&p);
        let lv = analytic_levels_unchecked(&p);
        let sz = noise_operator();
        // first-order Zeeman insensitivity of E1 and E3
        assert!(sz.matrix_element(&lv.states[0], &lv.states[0]).norm() < 1e-12);
        assert!(sz.matrix_element(&lv.states[2], &lv.states[2]).norm() < 1e-12);
        assert!((lv.states[2].inner(&states::dark_down()).norm() - 1.0).abs() < 1e-15);
        // E3 is an exact eigenvector of the full Hamiltonian
        let hv = h.apply(&lv.states[2]);
        assert!(hv.max_abs_diff(&lv.states[2].scale(C64::new(lv.energies[2], 0.0))) < 1e-12);
    }

    #[test]
    fn numeric_block_matches_analytic() {
        let p = SystemParams {
            g_perp: 0.37,
            g_par: 0.05,
            delta_fq: 0.12,
            delta_nv: 0.12,
            b_z: 0.05,
        };
        let cmp = compare_spectra(
            &analytic_subspace(&p).unwrap(),
            &numeric_block(&build_hamiltonian(&p)).unwrap(),
            1e-9,
        );
        assert!(cmp.within(1e-10), "{cmp:?}");
    }
}
