//! Pauli-string algebra and Clifford conjugation.
//!
//! Strings are written with qubit 0 as the leftmost letter: `"XZ"` is X on
//! qubit 0 and Z on qubit 1. An optional leading `-` (or `+`) carries the sign.
//! Only real signs are representable; phases of ±i are handled internally while
//! conjugating and rejected at the public boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{PeaError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    #[inline]
    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    /// X-component bit in the symplectic picture (X and Y flip the basis state).
    #[inline]
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Z-component bit (Y and Z carry a phase on |1>).
    #[inline]
    pub fn phases(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    /// Single-site product `self * other = i^k * result`.
    fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }
}

/// Signed Pauli string `±P_0 ⊗ P_1 ⊗ … ⊗ P_{n-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
    negative: bool,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(PeaError::PauliParse(String::new()));
        }
        Ok(Self { letters, negative: false })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { letters: vec![Pauli::I; n_qubits.max(1)], negative: false }
    }

    /// String with `letter` on `qubit` and identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: Pauli) -> Result<Self> {
        if qubit >= n_qubits {
            return Err(PeaError::QubitIndex { index: qubit, n_qubits });
        }
        let mut p = Self::identity(n_qubits);
        p.letters[qubit] = letter;
        Ok(p)
    }

    /// Builds an `n_qubits` string from `(qubit, letter)` pairs.
    pub fn from_sparse(n_qubits: usize, terms: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(n_qubits);
        for &(q, l) in terms {
            if q >= n_qubits {
                return Err(PeaError::QubitIndex { index: q, n_qubits });
            }
            p.letters[q] = l;
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        self.letters[qubit]
    }

    /// +1 or -1.
    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|l| !l.is_identity()).count()
    }

    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_identity())
            .map(|(q, _)| q)
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Same letters with a positive sign.
    pub fn unsigned(&self) -> Self {
        Self { letters: self.letters.clone(), negative: false }
    }

    pub fn negated(&self) -> Self {
        Self { letters: self.letters.clone(), negative: !self.negative }
    }

    pub fn with_sign(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }

    fn check_dims(&self, other: &PauliString) -> Result<()> {
        if self.n_qubits() != other.n_qubits() {
            return Err(PeaError::Dimension { expected: self.n_qubits(), got: other.n_qubits() });
        }
        Ok(())
    }

    /// True when the two strings anticommute: an odd number of sites carry
    /// distinct non-identity letters.
    pub fn anticommutes(&self, other: &PauliString) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self.anticommutes_unchecked(other))
    }

    pub(crate) fn anticommutes_unchecked(&self, other: &PauliString) -> bool {
        let clashes = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| !a.is_identity() && !b.is_identity() && a != b)
            .count();
        clashes % 2 == 1
    }

    /// Operator product `self * other`. Anticommuting factors would produce an
    /// anti-Hermitian result and are rejected.
    pub fn product(&self, other: &PauliString) -> Result<PauliString> {
        self.check_dims(other)?;
        let phased = Phased::from(self).mul(&Phased::from(other));
        phased.into_real().ok_or(PeaError::ImaginaryPhase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PeaError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let (negative, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let letters = body
            .chars()
            .map(Pauli::from_char)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| PeaError::PauliParse(s.to_string()))?;
        if letters.is_empty() {
            return Err(PeaError::PauliParse(s.to_string()));
        }
        Ok(Self { letters, negative })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pauli string with a phase `i^phase`, used while composing conjugations.
#[derive(Clone, Debug)]
struct Phased {
    phase: u8,
    letters: Vec<Pauli>,
}

impl Phased {
    fn identity(n: usize) -> Self {
        Self { phase: 0, letters: vec![Pauli::I; n] }
    }

    fn on(n: usize, terms: &[(usize, Pauli)], negative: bool) -> Self {
        let mut p = Self::identity(n);
        for &(q, l) in terms {
            p.letters[q] = l;
        }
        if negative {
            p.phase = 2;
        }
        p
    }

    fn mul(&self, other: &Phased) -> Phased {
        let mut phase = self.phase + other.phase;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (k, l) = a.mul(b);
                phase += k;
                l
            })
            .collect();
        Phased { phase: phase % 4, letters }
    }

    fn into_real(self) -> Option<PauliString> {
        match self.phase {
            0 => Some(PauliString { letters: self.letters, negative: false }),
            2 => Some(PauliString { letters: self.letters, negative: true }),
            _ => None,
        }
    }
}

impl From<&PauliString> for Phased {
    fn from(p: &PauliString) -> Self {
        Phased { phase: if p.negative { 2 } else { 0 }, letters: p.letters.clone() }
    }
}

/// Clifford gates whose conjugation action on Pauli strings is tracked exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum CliffordGate {
    X(usize),
    Y(usize),
    Z(usize),
    H(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    /// `exp(-iθA/2)` with θ an odd multiple of π; conjugates like `A` itself.
    PauliExpHalfTurn(PauliString),
}

impl CliffordGate {
    pub fn support(&self) -> Vec<usize> {
        match self {
            CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q)
            | CliffordGate::H(q)
            | CliffordGate::S(q) => vec![*q],
            CliffordGate::Cnot { control, target } => vec![*control, *target],
            CliffordGate::Cz(a, b) => vec![*a, *b],
            CliffordGate::PauliExpHalfTurn(a) => a.support(),
        }
    }

    /// Self-inverse up to a global phase.
    pub fn is_self_inverse(&self) -> bool {
        !matches!(self, CliffordGate::S(_))
    }

    fn check(&self, n: usize) -> Result<()> {
        if let CliffordGate::PauliExpHalfTurn(a) = self {
            if a.n_qubits() != n {
                return Err(PeaError::Dimension { expected: n, got: a.n_qubits() });
            }
            return Ok(());
        }
        let support = self.support();
        for &q in &support {
            if q >= n {
                return Err(PeaError::QubitIndex { index: q, n_qubits: n });
            }
        }
        if support.len() == 2 && support[0] == support[1] {
            return Err(PeaError::Parameter(format!("two-qubit gate on repeated qubit {}", support[0])));
        }
        Ok(())
    }

    /// Image `g† X_q g` (flip = true) or `g† Z_q g` (flip = false) for a qubit
    /// in the gate's support.
    fn image(&self, n: usize, q: usize, flip: bool) -> Phased {
        use Pauli::*;
        let gen = if flip { X } else { Z };
        match *self {
            CliffordGate::X(_) => Phased::on(n, &[(q, gen)], !flip),
            CliffordGate::Y(_) => Phased::on(n, &[(q, gen)], true),
            CliffordGate::Z(_) => Phased::on(n, &[(q, gen)], flip),
            CliffordGate::H(_) => Phased::on(n, &[(q, if flip { Z } else { X })], false),
            CliffordGate::S(_) => {
                if flip {
                    Phased::on(n, &[(q, Y)], true)
                } else {
                    Phased::on(n, &[(q, Z)], false)
                }
            }
            CliffordGate::Cnot { control, target } => match (q == control, flip) {
                (true, true) => Phased::on(n, &[(control, X), (target, X)], false),
                (true, false) => Phased::on(n, &[(control, Z)], false),
                (false, true) => Phased::on(n, &[(target, X)], false),
                (false, false) => Phased::on(n, &[(control, Z), (target, Z)], false),
            },
            CliffordGate::Cz(a, b) => {
                let other = if q == a { b } else { a };
                if flip {
                    Phased::on(n, &[(q, X), (other, Z)], false)
                } else {
                    Phased::on(n, &[(q, Z)], false)
                }
            }
            CliffordGate::PauliExpHalfTurn(_) => unreachable!(),
        }
    }
}

/// Heisenberg conjugation `g† · p · g`.
pub fn conjugate(gate: &CliffordGate, p: &PauliString) -> Result<PauliString> {
    let n = p.n_qubits();
    gate.check(n)?;
    if let CliffordGate::PauliExpHalfTurn(a) = gate {
        let flip = a.anticommutes_unchecked(p);
        return Ok(p.clone().with_sign(p.negative ^ flip));
    }

    let support = gate.support();
    let mut rest = Phased::from(p);
    let mut acc = Phased::identity(n);
    for &q in &support {
        let letter = p.letters[q];
        rest.letters[q] = Pauli::I;
        let img = match letter {
            Pauli::I => continue,
            Pauli::X => gate.image(n, q, true),
            Pauli::Z => gate.image(n, q, false),
            Pauli::Y => {
                // Y = i X Z
                let mut y = gate.image(n, q, true).mul(&gate.image(n, q, false));
                y.phase = (y.phase + 1) % 4;
                y
            }
        };
        acc = acc.mul(&img);
    }
    acc.mul(&rest)
        .into_real()
        .ok_or_else(|| PeaError::NotClifford("conjugation produced an imaginary phase".into()))
}

/// Conjugates `p` through an entire layer of gates acting on disjoint qubits.
pub fn conjugate_layer(layer: &[CliffordGate], p: &PauliString) -> Result<PauliString> {
    layer.iter().try_fold(p.clone(), |acc, g| conjugate(g, &acc))
}

/// Heisenberg-propagates `p` backwards through `layers`.
///
/// Element `l` of the result is the observable as seen just before layer `l`,
/// i.e. `p` conjugated through layers `L-1, …, l`. Element 0 is the fully
/// propagated observable. An empty tail returns `[p]`.
pub fn propagate_observable(layers: &[Vec<CliffordGate>], p: &PauliString) -> Result<Vec<PauliString>> {
    if layers.is_empty() {
        return Ok(vec![p.clone()]);
    }
    let mut out = vec![p.clone(); layers.len()];
    let mut current = p.clone();
    for (l, layer) in layers.iter().enumerate().rev() {
        current = conjugate_layer(layer, &current)?;
        out[l] = current.clone();
    }
    Ok(out)
}
