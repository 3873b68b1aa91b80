use crate::error::{Error, Result};
use crate::qubit::Qubit;
use num_complex::Complex64;
use rand::Rng;

pub const MAX_QUBITS: usize = 12;
/// Entrywise tolerance for unitarity and norm checks.
pub const NORM_TOL: f64 = 1e-10;
/// Negative probabilities above this magnitude are clamped to 0 before sampling.
pub const PROB_CLAMP: f64 = 1e-12;

/// Joint-parity outcome of a pair readout: `Even` means both bits equal.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flipped(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Clamps small negative round-off to 0 and caps at 1.
pub fn clamp_probability(p: f64) -> f64 {
    if p < 0.0 && p >= -PROB_CLAMP {
        0.0
    } else if p > 1.0 && p <= 1.0 + PROB_CLAMP {
        1.0
    } else {
        p
    }
}

/// Square complex matrix of dimension 2^k, k in 1..=6, validated unitary.
#[derive(Clone, Debug)]
pub struct Unitary {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Unitary {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if !dim.is_power_of_two() || dim < 2 || dim > 64 {
            return Err(Error::BadDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                dim: entries.len(),
                n_targets: dim.trailing_zeros() as usize,
            });
        }
        let u = Unitary { dim, entries };
        let dev = u.unitarity_deviation();
        if dev > NORM_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::ONE;
        }
        Unitary::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn dagger(&self) -> Unitary {
        let d = self.dim;
        let mut entries = vec![Complex64::ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.get(r, c).conj();
            }
        }
        Unitary {
            dim: d,
            entries,
        }
    }

    /// Matrix product self * rhs (rhs acts first when applied to a state).
    pub fn mul(&self, rhs: &Unitary) -> Result<Unitary> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                dim: rhs.dim,
                n_targets: self.n_qubits(),
            });
        }
        let d = self.dim;
        let mut entries = vec![Complex64::ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..d {
                    entries[r * d + c] += a * rhs.get(k, c);
                }
            }
        }
        Unitary::new(d, entries)
    }

    fn unitarity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut max_dev: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let mut s = Complex64::ZERO;
                for k in 0..d {
                    s += self.get(r, k) * self.get(c, k).conj();
                }
                let expect = if r == c { Complex64::ONE } else { Complex64::ZERO };
                max_dev = max_dev.max((s - expect).norm());
            }
        }
        max_dev
    }

    /// Max entrywise distance after aligning `other`'s global phase to `self`
    /// (phase from tr(self^dagger * other)).
    pub fn distance_up_to_phase(&self, other: &Unitary) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let mut tr = Complex64::ZERO;
        for r in 0..self.dim {
            for k in 0..self.dim {
                tr += self.get(k, r).conj() * other.get(k, r);
            }
        }
        let phase = if tr.norm() > 1e-14 {
            tr / tr.norm()
        } else {
            Complex64::ONE
        };
        let mut max_dev: f64 = 0.0;
        for i in 0..self.dim * self.dim {
            max_dev = max_dev.max((self.entries[i] - other.entries[i] * phase.conj()).norm());
        }
        max_dev
    }
}

/// Complex amplitude vector over n qubits. Basis index bit k is qubit k
/// (least-significant bit = qubit 0).
#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All-qubits-down state |0...0>.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits < 1 || n_qubits > MAX_QUBITS {
            return Err(Error::Size(n_qubits));
        }
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[0] = Complex64::ONE;
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Resets to the computational basis state with the given index
    /// (bit k of `index` is qubit k).
    pub fn set_basis_state(&mut self, index: usize) -> Result<()> {
        if index >= self.amps.len() {
            return Err(Error::BadDimension(index));
        }
        self.amps.fill(Complex64::ZERO);
        self.amps[index] = Complex64::ONE;
        Ok(())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: Qubit) -> Result<()> {
        if q.index() >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies `u` on `targets`; the first-listed target is the most significant
    /// bit of the matrix's basis index (so written kets read left to right).
    pub fn apply(&mut self, u: &Unitary, targets: &[Qubit]) -> Result<()> {
        #[cfg(debug_assertions)]
        let _norm_before = self.norm_sq();
        let m = targets.len();
        if u.dim() != 1 << m {
            return Err(Error::DimensionMismatch {
                dim: u.dim(),
                n_targets: m,
            });
        }
        let mut target_mask = 0usize;
        for (i, &t) in targets.iter().enumerate() {
            self.check_qubit(t)?;
            if targets[..i].contains(&t) {
                return Err(Error::DuplicateTarget(t));
            }
            target_mask |= t.bit();
        }
        // offsets[l]: global-index bits for local matrix index l
        let local_dim = 1 << m;
        let mut offsets = vec![0usize; local_dim];
        for (l, off) in offsets.iter_mut().enumerate() {
            for p in 0..m {
                if l >> p & 1 == 1 {
                    *off |= targets[m - 1 - p].bit();
                }
            }
        }
        let mut scratch = vec![Complex64::ZERO; local_dim];
        for base in 0..self.amps.len() {
            if base & target_mask != 0 {
                continue;
            }
            for (l, s) in scratch.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for k in 0..local_dim {
                    let e = u.get(l, k);
                    if e != Complex64::ZERO {
                        acc += e * self.amps[base | offsets[k]];
                    }
                }
                *s = acc;
            }
            for (l, s) in scratch.iter().enumerate() {
                self.amps[base | offsets[l]] = *s;
            }
        }
        #[cfg(debug_assertions)]
        debug_assert!(
            (self.norm_sq() - _norm_before).abs() < 1e-9 * _norm_before.max(1.0),
            "apply must preserve the 2-norm"
        );
        Ok(())
    }

    /// Multiplies the amplitude of every basis state with qubit `q` up by phase.
    pub fn apply_up_phase(&mut self, q: Qubit, phase_rad: f64) -> Result<()> {
        self.check_qubit(q)?;
        let ph = Complex64::from_polar(1.0, phase_rad);
        let bit = q.bit();
        for (idx, a) in self.amps.iter_mut().enumerate() {
            if idx & bit != 0 {
                *a *= ph;
            }
        }
        Ok(())
    }

    /// Marginal probability that qubit `q` reads up.
    pub fn qubit_up_probability(&self, q: Qubit) -> Result<f64> {
        self.check_qubit(q)?;
        let bit = q.bit();
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(clamp_probability(p))
    }

    /// Probability that the pair's bits are equal.
    pub fn pair_even_probability(&self, pair: (Qubit, Qubit)) -> Result<f64> {
        self.check_qubit(pair.0)?;
        self.check_qubit(pair.1)?;
        if pair.0 == pair.1 {
            return Err(Error::DuplicateTarget(pair.0));
        }
        let (a_bit, b_bit) = (pair.0.bit(), pair.1.bit());
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| (idx & a_bit != 0) == (idx & b_bit != 0))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(clamp_probability(p))
    }

    /// Samples the pair's joint parity and collapses onto the sampled subspace.
    pub fn measure_pair<R: Rng + ?Sized>(
        &mut self,
        pair: (Qubit, Qubit),
        rng: &mut R,
    ) -> Result<Parity> {
        let p_even = self.pair_even_probability(pair)?;
        let u: f64 = rng.random();
        let outcome = if u < p_even { Parity::Even } else { Parity::Odd };
        let keep_even = outcome == Parity::Even;
        let norm = if keep_even { p_even } else { 1.0 - p_even };
        let scale = 1.0 / norm.max(f64::MIN_POSITIVE).sqrt();
        let (a_bit, b_bit) = (pair.0.bit(), pair.1.bit());
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if ((idx & a_bit != 0) == (idx & b_bit != 0)) == keep_even {
                *amp *= scale;
            } else {
                *amp = Complex64::ZERO;
            }
        }
        Ok(outcome)
    }

    /// |<self|other>| in [0, 1]; 1 means equal up to global phase.
    pub fn overlap_magnitude(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }
}
