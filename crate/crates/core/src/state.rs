//! Dense statevectors and density matrices.
//!
//! Amplitudes are indexed little-endian: qubit `q` is bit `q` of the basis
//! index, so qubit 0 (the leftmost Pauli letter) is the least significant bit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::circuit::Gate;
use crate::error::{PeaError, Result};
use crate::pauli::{Pauli, PauliString};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Bit masks describing the action `P|x> = i^{n_y} (-1)^{|x & z|} |x ^ flip>`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliMasks {
    pub flip: usize,
    pub phase: usize,
    pub n_y: u32,
    pub negative: bool,
}

impl PauliMasks {
    pub fn of(p: &PauliString) -> Self {
        let mut m = PauliMasks { flip: 0, phase: 0, n_y: 0, negative: p.is_negative() };
        for (q, l) in p.letters().iter().enumerate() {
            if l.flips() {
                m.flip |= 1 << q;
            }
            if l.phases() {
                m.phase |= 1 << q;
            }
            if *l == Pauli::Y {
                m.n_y += 1;
            }
        }
        m
    }

    fn global(&self) -> Complex64 {
        let base = match self.n_y % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        if self.negative {
            -base
        } else {
            base
        }
    }

    /// Coefficient of `|x ^ flip>` in `P|x>`.
    #[inline]
    pub fn coeff(&self, x: usize) -> Complex64 {
        let g = self.global();
        if (x & self.phase).count_ones() % 2 == 1 {
            -g
        } else {
            g
        }
    }
}

/// In-place `amps <- P amps`.
pub(crate) fn apply_pauli_in_place(amps: &mut [Complex64], p: &PauliString) {
    let m = PauliMasks::of(p);
    if m.flip == 0 {
        for (x, a) in amps.iter_mut().enumerate() {
            *a *= m.coeff(x);
        }
        return;
    }
    let low = m.flip & m.flip.wrapping_neg();
    for x in 0..amps.len() {
        if x & low != 0 {
            continue;
        }
        let y = x ^ m.flip;
        let (ax, ay) = (amps[x], amps[y]);
        amps[y] = m.coeff(x) * ax;
        amps[x] = m.coeff(y) * ay;
    }
}

fn apply_single(amps: &mut [Complex64], q: usize, u: [[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for x in 0..amps.len() {
        if x & bit != 0 {
            continue;
        }
        let (a0, a1) = (amps[x], amps[x | bit]);
        amps[x] = u[0][0] * a0 + u[0][1] * a1;
        amps[x | bit] = u[1][0] * a0 + u[1][1] * a1;
    }
}

fn apply_diagonal(amps: &mut [Complex64], phase: impl Fn(usize) -> Complex64) {
    for (x, a) in amps.iter_mut().enumerate() {
        *a *= phase(x);
    }
}

/// In-place unitary action of `gate` on a length-2^n amplitude slice.
pub(crate) fn apply_gate_in_place(amps: &mut [Complex64], gate: &Gate) {
    use Gate::*;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match *gate {
        X(q) => {
            let bit = 1 << q;
            for x in 0..amps.len() {
                if x & bit == 0 {
                    amps.swap(x, x | bit);
                }
            }
        }
        Y(q) => apply_single(amps, q, [[ZERO, -I], [I, ZERO]]),
        Z(q) => apply_diagonal(amps, |x| if x >> q & 1 == 1 { -ONE } else { ONE }),
        H(q) => {
            let c = Complex64::new(h, 0.0);
            apply_single(amps, q, [[c, c], [c, -c]])
        }
        S(q) => apply_diagonal(amps, |x| if x >> q & 1 == 1 { I } else { ONE }),
        Rx { qubit, theta } => {
            let c = Complex64::new((theta / 2.0).cos(), 0.0);
            let s = Complex64::new(0.0, -(theta / 2.0).sin());
            apply_single(amps, qubit, [[c, s], [s, c]])
        }
        Rz { qubit, theta } => {
            let lo = Complex64::from_polar(1.0, -theta / 2.0);
            let hi = Complex64::from_polar(1.0, theta / 2.0);
            apply_diagonal(amps, |x| if x >> qubit & 1 == 1 { hi } else { lo })
        }
        Rzz { a, b, theta } => {
            let even = Complex64::from_polar(1.0, -theta / 2.0);
            let odd = Complex64::from_polar(1.0, theta / 2.0);
            apply_diagonal(amps, |x| if (x >> a ^ x >> b) & 1 == 1 { odd } else { even })
        }
        Cnot { control, target } => {
            let (cb, tb) = (1 << control, 1 << target);
            for x in 0..amps.len() {
                if x & cb != 0 && x & tb == 0 {
                    amps.swap(x, x | tb);
                }
            }
        }
        Cz(a, b) => apply_diagonal(amps, |x| if x >> a & x >> b & 1 == 1 { -ONE } else { ONE }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0>`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if index >= 1 << n_qubits {
            return Err(PeaError::Parameter(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes `amps`; length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(PeaError::InvalidState(format!("amplitude vector of length {len}")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(PeaError::InvalidState("zero or non-finite norm".into()));
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        apply_gate_in_place(&mut self.amps, gate);
        Ok(())
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        check_dims(self.n_qubits, p)?;
        apply_pauli_in_place(&mut self.amps, p);
        Ok(())
    }

    /// `<ψ|P|ψ>`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        check_dims(self.n_qubits, p)?;
        Ok(self.expectation_unchecked(&PauliMasks::of(p)))
    }

    pub(crate) fn expectation_unchecked(&self, m: &PauliMasks) -> f64 {
        let v: Complex64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(x, a)| self.amps[x ^ m.flip].conj() * m.coeff(x) * a)
            .sum();
        debug_assert!(v.im.abs() <= 1e-10, "imaginary residue {}", v.im);
        v.re
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }
}

fn check_dims(n: usize, p: &PauliString) -> Result<()> {
    if p.n_qubits() != n {
        return Err(PeaError::Dimension { expected: n, got: p.n_qubits() });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::from_state(&StateVector::zero(n_qubits))
    }

    pub fn from_state(psi: &StateVector) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Self { n_qubits: psi.n_qubits(), entries: &v * v.adjoint() }
    }

    /// Wraps a matrix after checking it is a valid density matrix.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || !dim.is_power_of_two() || entries.ncols() != dim {
            return Err(PeaError::InvalidState(format!("{}x{} matrix", entries.nrows(), entries.ncols())));
        }
        let rho = Self { n_qubits: dim.trailing_zeros() as usize, entries };
        rho.validate(1e-10)?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(entries: DMatrix<Complex64>) -> Self {
        Self { n_qubits: entries.nrows().trailing_zeros() as usize, entries }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Err(PeaError::InvalidState(format!("trace {tr}")));
        }
        let herr = self.hermiticity_error();
        if herr > tol {
            return Err(PeaError::InvalidState(format!("hermiticity error {herr:.3e}")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(PeaError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `tr(P ρ)`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        check_dims(self.n_qubits, p)?;
        let m = PauliMasks::of(p);
        // P_{y^flip, y} = coeff(y), so tr(Pρ) = Σ_y coeff(y) ρ_{y, y^flip}.
        let v: Complex64 = (0..self.dim()).map(|y| m.coeff(y) * self.entries[(y, y ^ m.flip)]).sum();
        Ok(v.re)
    }

    /// `P ρ P†`.
    pub fn conjugate_by_pauli(&self, p: &PauliString) -> Result<DensityMatrix> {
        check_dims(self.n_qubits, p)?;
        let m = PauliMasks::of(p);
        let dim = self.dim();
        let coeffs: Vec<Complex64> = (0..dim).map(|x| m.coeff(x)).collect();
        let out = DMatrix::from_fn(dim, dim, |r, c| {
            let (y, yp) = (r ^ m.flip, c ^ m.flip);
            coeffs[y] * self.entries[(y, yp)] * coeffs[yp].conj()
        });
        Ok(Self { n_qubits: self.n_qubits, entries: out })
    }

    /// `ρ <- G ρ G†`.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        let dim = self.dim();
        let mut col = vec![ZERO; dim];
        for pass in 0..2 {
            for c in 0..dim {
                col.copy_from_slice(self.entries.column(c).as_slice());
                apply_gate_in_place(&mut col, gate);
                self.entries.column_mut(c).copy_from_slice(&col);
            }
            if pass == 0 {
                self.entries.adjoint_mut();
            }
        }
        self.entries.adjoint_mut();
        Ok(())
    }

    pub(crate) fn scale_add(&mut self, keep: f64, other: &DensityMatrix, other_weight: f64) {
        self.entries *= Complex64::new(keep, 0.0);
        self.entries += &other.entries * Complex64::new(other_weight, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn x_flips_zero() {
        let mut psi = StateVector::zero(1);
        psi.apply_gate(&Gate::X(0)).unwrap();
        assert_eq!(psi.amplitudes()[1], ONE);
    }

    #[test]
    fn rx_bloch_rotation() {
        for &theta in &[0.0, 0.3, 1.1, -2.5, std::f64::consts::PI] {
            let mut psi = StateVector::zero(1);
            psi.apply_gate(&Gate::Rx { qubit: 0, theta }).unwrap();
            assert_abs_diff_eq!(psi.expectation(&ps("Z")).unwrap(), theta.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rzz_keeps_eigenstate() {
        let mut psi = StateVector::zero(2);
        psi.apply_gate(&Gate::Rzz { a: 0, b: 1, theta: -std::f64::consts::PI }).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(psi.expectation(&ps("ZZ")).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zz_expectations() {
        assert_abs_diff_eq!(StateVector::zero(2).expectation(&ps("ZZ")).unwrap(), 1.0);
        // |01> in ket notation: qubit 1 is |1>, basis index 2.
        assert_abs_diff_eq!(StateVector::basis(2, 2).unwrap().expectation(&ps("ZZ")).unwrap(), -1.0);
        let mut plus = StateVector::zero(2);
        plus.apply_gate(&Gate::H(0)).unwrap();
        plus.apply_gate(&Gate::H(1)).unwrap();
        assert_abs_diff_eq!(plus.expectation(&ps("ZZ")).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(plus.expectation(&ps("XX")).unwrap(), 1.0, epsilon = 1e-14);
        assert!(plus.expectation(&ps("Z")).is_err());
    }

    #[test]
    fn pauli_application_matches_gates() {
        let mut rng_state = StateVector::from_amplitudes(
            (0..8).map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos())).collect(),
        )
        .unwrap();
        let mut via_gates = rng_state.clone();
        rng_state.apply_pauli(&ps("-YXZ")).unwrap();
        via_gates.apply_gate(&Gate::Y(0)).unwrap();
        via_gates.apply_gate(&Gate::X(1)).unwrap();
        via_gates.apply_gate(&Gate::Z(2)).unwrap();
        for (a, b) in rng_state.amplitudes().iter().zip(via_gates.amplitudes()) {
            assert_abs_diff_eq!((a + b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn density_matches_statevector() {
        let mut psi = StateVector::zero(2);
        let mut rho = DensityMatrix::zero_state(2);
        let gates = [Gate::H(0), Gate::Cnot { control: 0, target: 1 }, Gate::Rx { qubit: 1, theta: 0.4 },
            Gate::S(0), Gate::Rzz { a: 0, b: 1, theta: 0.9 }];
        for g in &gates {
            psi.apply_gate(g).unwrap();
            rho.apply_gate(g).unwrap();
        }
        for p in ["XX", "YZ", "ZI", "IY", "XY"] {
            assert_abs_diff_eq!(rho.expectation(&ps(p)).unwrap(), psi.expectation(&ps(p)).unwrap(), epsilon = 1e-12);
        }
        rho.validate(1e-10).unwrap();
    }

    #[test]
    fn conjugate_by_pauli_matches_dense() {
        let psi = StateVector::from_amplitudes(
            (0..4).map(|k| Complex64::new(1.0 + k as f64, 0.5 * k as f64)).collect(),
        )
        .unwrap();
        let rho = DensityMatrix::from_state(&psi);
        let p = ps("YX");
        let mut ppsi = psi.clone();
        ppsi.apply_pauli(&p).unwrap();
        let expected = DensityMatrix::from_state(&ppsi);
        let got = rho.conjugate_by_pauli(&p).unwrap();
        assert_abs_diff_eq!((got.matrix() - expected.matrix()).norm(), 0.0, epsilon = 1e-13);
    }
}
