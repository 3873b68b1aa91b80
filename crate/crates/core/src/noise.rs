use crate::error::{Error, Result};
use crate::qubit::Qubit;
use crate::state::Parity;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Measured dephasing times of one qubit, in seconds.
#[derive(Clone, Copy, Debug)]
pub struct CoherencePair {
    pub t2_star_s: f64,
    pub t2_hahn_s: f64,
}

/// Default coherence times for the four-qubit array (seconds).
pub fn device_coherence_defaults() -> Vec<CoherencePair> {
    [(0.28, 2.72), (0.25, 3.0), (0.25, 3.0), (0.23, 3.26)]
        .iter()
        .map(|&(s, h)| CoherencePair {
            t2_star_s: s * 1e-6,
            t2_hahn_s: h * 1e-6,
        })
        .collect()
}

/// Dephasing model of one qubit: a quasi-static Gaussian detuning (fresh each
/// shot) plus Markovian pi phase flips at a fixed rate.
#[derive(Clone, Copy, Debug)]
pub struct QubitNoise {
    pub sigma_qs_rad_per_s: f64,
    pub gamma_markov_hz: f64,
}

/// Noise strengths that reproduce the given coherence times: the quasi-static
/// width gives a Gaussian free-induction envelope exp(-(t/t2_star)^2) and the
/// flip rate gives an echo envelope exp(-t/t2_hahn).
pub fn calibrate_noise(pair: &CoherencePair) -> Result<QubitNoise> {
    if !(pair.t2_star_s > 0.0) || !pair.t2_star_s.is_finite() {
        return Err(Error::Domain {
            name: "t2_star_s",
            value: pair.t2_star_s,
            domain: "(0, inf)",
        });
    }
    if !pair.t2_hahn_s.is_finite() || pair.t2_hahn_s < pair.t2_star_s {
        return Err(Error::InconsistentCoherence {
            t2_star_s: pair.t2_star_s,
            t2_hahn_s: pair.t2_hahn_s,
        });
    }
    Ok(QubitNoise {
        sigma_qs_rad_per_s: std::f64::consts::SQRT_2 / pair.t2_star_s,
        gamma_markov_hz: 1.0 / pair.t2_hahn_s,
    })
}

/// Per-qubit dephasing parameters for the whole array.
#[derive(Clone, Debug)]
pub struct NoiseParams {
    qubits: Vec<QubitNoise>,
}

impl NoiseParams {
    pub fn new(pairs: &[CoherencePair]) -> Result<Self> {
        let qubits = pairs.iter().map(calibrate_noise).collect::<Result<_>>()?;
        Ok(NoiseParams { qubits })
    }

    pub fn device_defaults() -> Self {
        Self::new(&device_coherence_defaults()).expect("built-in coherence times are consistent")
    }

    /// Directly supplied per-qubit parameters, bypassing calibration.
    pub fn from_qubits(qubits: Vec<QubitNoise>) -> Self {
        NoiseParams { qubits }
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, q: Qubit) -> Result<&QubitNoise> {
        self.qubits.get(q.index()).ok_or(Error::IndexOutOfRange {
            qubit: q,
            n_qubits: self.qubits.len(),
        })
    }
}

/// Quasi-static detunings for one shot: sigma * N(0,1) per qubit, rad/s.
pub fn sample_offsets<R: Rng + ?Sized>(params: &NoiseParams, rng: &mut R) -> Vec<f64> {
    params
        .qubits
        .iter()
        .map(|q| {
            let z: f64 = StandardNormal.sample(rng);
            q.sigma_qs_rad_per_s * z
        })
        .collect()
}

/// Probability that an odd number of telegraph flips occurs in `duration_s`.
pub fn idle_flip_probability(gamma_hz: f64, duration_s: f64) -> f64 {
    (1.0 - (-gamma_hz * duration_s).exp()) / 2.0
}

/// Free-induction bright-state probability at delay t.
pub fn ramsey_up_probability(noise: &QubitNoise, t_s: f64) -> f64 {
    let gauss = (-(noise.sigma_qs_rad_per_s * t_s).powi(2) / 2.0).exp();
    let markov = (-noise.gamma_markov_hz * t_s).exp();
    (1.0 + gauss * markov) / 2.0
}

/// Echo bright-state probability at total delay t: the quasi-static part
/// refocuses, the telegraph part does not.
pub fn hahn_up_probability(noise: &QubitNoise, t_s: f64) -> f64 {
    (1.0 + (-noise.gamma_markov_hz * t_s).exp()) / 2.0
}

/// Assignment fidelities of one parity readout: the probability of reporting
/// even given even, and odd given odd.
#[derive(Clone, Copy, Debug)]
pub struct PairFidelity {
    pub f_even: f64,
    pub f_odd: f64,
}

impl PairFidelity {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("f_even", self.f_even), ("f_odd", self.f_odd)] {
            if !(0.5..=1.0).contains(&v) {
                return Err(Error::Domain {
                    name,
                    value: v,
                    domain: "[0.5, 1]",
                });
            }
        }
        Ok(())
    }
}

/// Readout error model: one default fidelity pair with optional per-pair
/// overrides.
#[derive(Clone, Debug)]
pub struct ReadoutModel {
    default: PairFidelity,
    overrides: Vec<((Qubit, Qubit), PairFidelity)>,
}

pub const DEFAULT_F_EVEN: f64 = 0.95;
pub const DEFAULT_F_ODD: f64 = 0.85;

impl Default for ReadoutModel {
    fn default() -> Self {
        ReadoutModel::uniform(DEFAULT_F_EVEN, DEFAULT_F_ODD)
            .expect("built-in readout fidelities are in range")
    }
}

impl ReadoutModel {
    pub fn uniform(f_even: f64, f_odd: f64) -> Result<Self> {
        let default = PairFidelity { f_even, f_odd };
        default.validate()?;
        Ok(ReadoutModel {
            default,
            overrides: Vec::new(),
        })
    }

    pub fn ideal() -> Self {
        ReadoutModel::uniform(1.0, 1.0).expect("unit fidelities are in range")
    }

    pub fn with_pair(mut self, pair: (Qubit, Qubit), fidelity: PairFidelity) -> Result<Self> {
        fidelity.validate()?;
        self.overrides.retain(|(p, _)| !same_pair(*p, pair));
        self.overrides.push((pair, fidelity));
        Ok(self)
    }

    pub fn for_pair(&self, pair: (Qubit, Qubit)) -> PairFidelity {
        self.overrides
            .iter()
            .find(|(p, _)| same_pair(*p, pair))
            .map(|(_, f)| *f)
            .unwrap_or(self.default)
    }
}

fn same_pair(a: (Qubit, Qubit), b: (Qubit, Qubit)) -> bool {
    a == b || a == (b.1, b.0)
}

/// Parity reported by an imperfect readout of a known true parity.
pub fn readout_with_error<R: Rng + ?Sized>(
    rng: &mut R,
    true_parity: Parity,
    fidelity: PairFidelity,
) -> Parity {
    let u: f64 = rng.random();
    match true_parity {
        Parity::Even => {
            if u < fidelity.f_even {
                Parity::Even
            } else {
                Parity::Odd
            }
        }
        Parity::Odd => {
            if u < fidelity.f_odd {
                Parity::Odd
            } else {
                Parity::Even
            }
        }
    }
}

/// Mean reported-even probability when the true even probability is `q_even`.
pub fn reported_even_prob(q_even: f64, fidelity: PairFidelity) -> f64 {
    q_even * fidelity.f_even + (1.0 - q_even) * (1.0 - fidelity.f_odd)
}

/// Imperfect reset: a swap pulse leaves the pair untouched with this
/// probability.
#[derive(Clone, Copy, Debug)]
pub struct ResetModel {
    pub retain_probability: f64,
}

pub const DEFAULT_RETAIN_PROBABILITY: f64 = 0.1;

impl Default for ResetModel {
    fn default() -> Self {
        ResetModel {
            retain_probability: DEFAULT_RETAIN_PROBABILITY,
        }
    }
}

impl ResetModel {
    pub fn ideal() -> Self {
        ResetModel {
            retain_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.retain_probability) {
            return Err(Error::Domain {
                name: "retain_probability",
                value: self.retain_probability,
                domain: "[0, 1]",
            });
        }
        Ok(())
    }
}

/// Deliberate phase errors applied at a chosen point in a circuit.
#[derive(Clone, Debug)]
pub struct ErrorInjection {
    pub targets: Vec<Qubit>,
    pub mode: InjectionMode,
}

#[derive(Clone, Copy, Debug)]
pub enum InjectionMode {
    /// Deterministic phase rotation diag(1, e^{i phi}) on every target.
    PhaseAll { phi_rad: f64 },
    /// Independent pi phase flip on each target with probability p.
    Bernoulli { p: f64 },
}

impl ErrorInjection {
    pub fn validate(&self) -> Result<()> {
        if let InjectionMode::Bernoulli { p } = self.mode {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain {
                    name: "p",
                    value: p,
                    domain: "[0, 1]",
                });
            }
        }
        Ok(())
    }
}
