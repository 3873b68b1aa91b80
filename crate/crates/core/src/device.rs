use crate::error::{Error, Result};
use crate::qubit::Qubit;
use crate::qubit::{Q1, Q2, Q3, Q4};

/// Static description of the qubit array: Larmor frequencies, drive rates,
/// exchange connectivity and parity-readout pairing.
#[derive(Clone, Debug)]
pub struct DeviceModel {
    frequencies_hz: Vec<f64>,
    rabi_hz: Vec<f64>,
    edges: Vec<(Qubit, Qubit)>,
    readout_pairs: Vec<((Qubit, Qubit), String)>,
    pub external_field_t: f64,
}

impl Default for DeviceModel {
    fn default() -> Self {
        DeviceModel::new(
            vec![1.393e9, 2.192e9, 2.101e9, 2.412e9],
            vec![5e6; 4],
            vec![(Q1, Q2), (Q2, Q3), (Q3, Q4), (Q4, Q1)],
            vec![((Q1, Q2), "S1".into()), ((Q3, Q4), "S2".into())],
            0.65,
        )
        .expect("built-in device description is valid")
    }
}

impl DeviceModel {
    pub fn new(
        frequencies_hz: Vec<f64>,
        rabi_hz: Vec<f64>,
        edges: Vec<(Qubit, Qubit)>,
        readout_pairs: Vec<((Qubit, Qubit), String)>,
        external_field_t: f64,
    ) -> Result<Self> {
        let device = DeviceModel {
            frequencies_hz,
            rabi_hz,
            edges,
            readout_pairs,
            external_field_t,
        };
        device.validate()?;
        Ok(device)
    }

    fn validate(&self) -> Result<()> {
        let n = self.frequencies_hz.len();
        if n == 0 || n > crate::state::MAX_QUBITS {
            return Err(Error::Size(n));
        }
        if self.rabi_hz.len() != n {
            return Err(Error::DimensionMismatch {
                dim: self.rabi_hz.len(),
                n_targets: n,
            });
        }
        for (i, &f) in self.frequencies_hz.iter().enumerate() {
            if !(f > 0.0) {
                return Err(Error::Domain {
                    name: "frequencies_hz",
                    value: f,
                    domain: "(0, inf)",
                });
            }
            if !(self.rabi_hz[i] > 0.0) {
                return Err(Error::Domain {
                    name: "rabi_hz",
                    value: self.rabi_hz[i],
                    domain: "(0, inf)",
                });
            }
        }
        for &(a, b) in &self.edges {
            self.check_index(a)?;
            self.check_index(b)?;
            if a == b {
                return Err(Error::DuplicateTarget(a));
            }
        }
        for i in 0..self.edges.len() {
            for j in 0..i {
                if unordered_eq(self.edges[i], self.edges[j]) {
                    return Err(Error::DuplicateTarget(self.edges[i].0));
                }
            }
        }
        // Readout pairs must partition the array and lie on exchange edges.
        let mut seen = vec![false; n];
        for (pair, _) in &self.readout_pairs {
            self.require_edge(*pair)?;
            for q in [pair.0, pair.1] {
                if seen[q.index()] {
                    return Err(Error::DuplicateTarget(q));
                }
                seen[q.index()] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            let q = Qubit(seen.iter().position(|&s| !s).unwrap() as u8);
            return Err(Error::NotAReadoutPair(q, q));
        }
        Ok(())
    }

    fn check_index(&self, q: Qubit) -> Result<()> {
        if q.index() >= self.n_qubits() {
            return Err(Error::IndexOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits(),
            });
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn qubits(&self) -> impl Iterator<Item = Qubit> {
        (0..self.n_qubits() as u8).map(Qubit)
    }

    pub fn frequency_hz(&self, q: Qubit) -> Result<f64> {
        self.check_index(q)?;
        Ok(self.frequencies_hz[q.index()])
    }

    pub fn rabi_hz(&self, q: Qubit) -> Result<f64> {
        self.check_index(q)?;
        Ok(self.rabi_hz[q.index()])
    }

    pub fn edges(&self) -> &[(Qubit, Qubit)] {
        &self.edges
    }

    pub fn has_edge(&self, edge: (Qubit, Qubit)) -> bool {
        self.edges.iter().any(|&e| unordered_eq(e, edge))
    }

    pub fn require_edge(&self, edge: (Qubit, Qubit)) -> Result<()> {
        if self.has_edge(edge) {
            Ok(())
        } else {
            Err(Error::MissingEdge(edge.0, edge.1))
        }
    }

    /// Difference of the Larmor frequencies across an edge; the resonance
    /// condition for swap pulses.
    pub fn zeeman_diff_hz(&self, edge: (Qubit, Qubit)) -> Result<f64> {
        self.require_edge(edge)?;
        Ok((self.frequencies_hz[edge.0.index()] - self.frequencies_hz[edge.1.index()]).abs())
    }

    pub fn readout_pairs(&self) -> &[((Qubit, Qubit), String)] {
        &self.readout_pairs
    }

    pub fn require_readout_pair(&self, pair: (Qubit, Qubit)) -> Result<()> {
        if self
            .readout_pairs
            .iter()
            .any(|(p, _)| unordered_eq(*p, pair))
        {
            Ok(())
        } else {
            Err(Error::NotAReadoutPair(pair.0, pair.1))
        }
    }

    /// Canonical readout pair containing `q`.
    pub fn readout_pair_of(&self, q: Qubit) -> Result<(Qubit, Qubit)> {
        self.check_index(q)?;
        for (pair, _) in &self.readout_pairs {
            if pair.0 == q || pair.1 == q {
                return Ok(*pair);
            }
        }
        Err(Error::NotAReadoutPair(q, q))
    }

    /// The qubit read out jointly with `q`.
    pub fn readout_partner(&self, q: Qubit) -> Result<Qubit> {
        self.check_index(q)?;
        for (pair, _) in &self.readout_pairs {
            if pair.0 == q {
                return Ok(pair.1);
            }
            if pair.1 == q {
                return Ok(pair.0);
            }
        }
        Err(Error::NotAReadoutPair(q, q))
    }
}

fn unordered_eq(a: (Qubit, Qubit), b: (Qubit, Qubit)) -> bool {
    a == b || a == (b.1, b.0)
}
