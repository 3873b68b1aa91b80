use flipcode::device::DeviceModel;
use flipcode::exec::ExecModel;
use flipcode::experiments::{CodeInput, Estimator, TwoQubitEcho};
use flipcode::noise::{calibrate_noise, CoherencePair, NoiseParams, ReadoutModel, ResetModel};
use flipcode::qubit::Qubit;
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

/// A rejected configuration: the offending path and what went wrong.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Applies `key.path=value` overrides onto the raw config. Intermediate
/// objects are created as needed; array indices must already exist. Values
/// parse as JSON, falling back to a plain string.
pub fn apply_overrides(root: &mut Value, sets: &[String]) -> Result<(), ConfigError> {
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| err(set.clone(), "expected KEY=VALUE"))?;
        let parsed: Value =
            serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let segments: Vec<&str> = key.split('.').collect();
        let mut cursor = &mut *root;
        for (i, segment) in segments.iter().enumerate() {
            let last = i + 1 == segments.len();
            let path = || segments[..=i].join(".");
            match cursor {
                Value::Object(map) => {
                    if last {
                        map.insert(segment.to_string(), parsed);
                        break;
                    }
                    cursor = map
                        .entry(segment.to_string())
                        .or_insert_with(|| Value::Object(Default::default()));
                }
                Value::Array(items) => {
                    let idx: usize = segment
                        .parse()
                        .map_err(|_| err(path(), "expected an array index"))?;
                    let len = items.len();
                    let slot = items
                        .get_mut(idx)
                        .ok_or_else(|| err(path(), format!("index {idx} out of range (len {len})")))?;
                    if last {
                        *slot = parsed;
                        break;
                    }
                    cursor = slot;
                }
                _ => return Err(err(path(), "path runs through a scalar value")),
            }
        }
    }
    Ok(())
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push(':');
                write_canonical(&map[*k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&serde_json::to_string(other).expect("scalar serializes")),
    }
}

/// Order-independent digest of the effective (post-override) config.
pub fn config_hash(value: &Value) -> String {
    let mut canonical = String::new();
    write_canonical(value, &mut canonical);
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DeviceSection {
    frequencies_mhz: Vec<f64>,
    rabi_rates_mhz: Vec<f64>,
    edges: Vec<(Qubit, Qubit)>,
    readout_pairs: Vec<ReadoutPairSpec>,
    external_field_t: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutPairSpec {
    qubits: (Qubit, Qubit),
    sensor: String,
}

impl Default for DeviceSection {
    fn default() -> Self {
        let d = DeviceModel::default();
        DeviceSection {
            frequencies_mhz: d.qubits().map(|q| d.frequency_hz(q).unwrap() / 1e6).collect(),
            rabi_rates_mhz: d.qubits().map(|q| d.rabi_hz(q).unwrap() / 1e6).collect(),
            edges: d.edges().to_vec(),
            readout_pairs: d
                .readout_pairs()
                .iter()
                .map(|(qubits, sensor)| ReadoutPairSpec {
                    qubits: *qubits,
                    sensor: sensor.clone(),
                })
                .collect(),
            external_field_t: d.external_field_t,
        }
    }
}

impl DeviceSection {
    fn build(&self) -> Result<DeviceModel, ConfigError> {
        DeviceModel::new(
            self.frequencies_mhz.iter().map(|f| f * 1e6).collect(),
            self.rabi_rates_mhz.iter().map(|f| f * 1e6).collect(),
            self.edges.clone(),
            self.readout_pairs
                .iter()
                .map(|p| (p.qubits, p.sensor.clone()))
                .collect(),
            self.external_field_t,
        )
        .map_err(|e| err("device", e))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NoiseSection {
    enabled: bool,
    t2_star_us: Vec<f64>,
    t2_hahn_us: Vec<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            enabled: true,
            t2_star_us: vec![0.28, 0.25, 0.25, 0.23],
            t2_hahn_us: vec![2.72, 3.0, 3.0, 3.26],
        }
    }
}

impl NoiseSection {
    fn build(&self, n_qubits: usize) -> Result<Option<NoiseParams>, ConfigError> {
        if !self.enabled {
            return Ok(None);
        }
        if self.t2_star_us.len() != n_qubits || self.t2_hahn_us.len() != n_qubits {
            return Err(err(
                "noise",
                format!(
                    "expected {n_qubits} entries in t2_star_us and t2_hahn_us, got {} and {}",
                    self.t2_star_us.len(),
                    self.t2_hahn_us.len()
                ),
            ));
        }
        let mut qubits = Vec::with_capacity(n_qubits);
        for (star, hahn) in self.t2_star_us.iter().zip(&self.t2_hahn_us) {
            let pair = CoherencePair {
                t2_star_s: star * 1e-6,
                t2_hahn_s: hahn * 1e-6,
            };
            qubits.push(calibrate_noise(&pair).map_err(|e| err("noise", e))?);
        }
        Ok(Some(NoiseParams::from_qubits(qubits)))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ReadoutSection {
    f_even: f64,
    f_odd: f64,
}

impl Default for ReadoutSection {
    fn default() -> Self {
        ReadoutSection {
            f_even: flipcode::noise::DEFAULT_F_EVEN,
            f_odd: flipcode::noise::DEFAULT_F_ODD,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ResetSection {
    retain_probability: f64,
}

impl Default for ResetSection {
    fn default() -> Self {
        ResetSection {
            retain_probability: flipcode::noise::DEFAULT_RETAIN_PROBABILITY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    #[default]
    Sampled,
    Exact,
}

impl EstimatorChoice {
    pub fn to_estimator(self) -> Estimator {
        match self {
            EstimatorChoice::Sampled => Estimator::Sampled,
            EstimatorChoice::Exact => Estimator::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InputChoice {
    Down,
    #[default]
    Plus,
}

impl InputChoice {
    fn to_input(self) -> CodeInput {
        match self {
            InputChoice::Down => CodeInput::Down,
            InputChoice::Plus => CodeInput::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum EchoChoice {
    #[default]
    None,
    AncillaY2,
}

impl EchoChoice {
    fn to_echo(self) -> TwoQubitEcho {
        match self {
            EchoChoice::None => TwoQubitEcho::None,
            EchoChoice::AncillaY2 => TwoQubitEcho::AncillaY2,
        }
    }
}

/// A sweep axis: either an explicit list of values or an inclusive linear
/// range `{"from": a, "to": b, "points": n}`.
#[derive(Debug, Clone)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { from: f64, to: f64, points: usize },
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as _;
        let value = Value::deserialize(deserializer)?;
        match &value {
            Value::Array(_) => Vec::<f64>::deserialize(value)
                .map(Grid::List)
                .map_err(D::Error::custom),
            Value::Object(map) => {
                for key in map.keys() {
                    if !matches!(key.as_str(), "from" | "to" | "points") {
                        return Err(D::Error::custom(format!(
                            "unknown grid key `{key}`, expected from/to/points"
                        )));
                    }
                }
                let number = |name: &str| -> Result<f64, D::Error> {
                    map.get(name)
                        .and_then(Value::as_f64)
                        .ok_or_else(|| D::Error::custom(format!("grid needs a number `{name}`")))
                };
                let points = map
                    .get("points")
                    .and_then(Value::as_u64)
                    .ok_or_else(|| D::Error::custom("grid needs an integer `points`"))?;
                Ok(Grid::Linspace {
                    from: number("from")?,
                    to: number("to")?,
                    points: points as usize,
                })
            }
            _ => Err(D::Error::custom(
                "expected an array of numbers or {from, to, points}",
            )),
        }
    }
}

impl Grid {
    fn values(&self, scale: f64) -> Result<Vec<f64>, String> {
        let values = match self {
            Grid::List(v) => v.clone(),
            Grid::Linspace { from, to, points } => {
                if *points < 2 {
                    return Err("a linear grid needs at least 2 points".into());
                }
                let step = (to - from) / (*points as f64 - 1.0);
                (0..*points).map(|i| from + step * i as f64).collect()
            }
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        Ok(values.iter().map(|v| v * scale).collect())
    }
}

const MICROSECONDS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum Action {
    Rabi {
        qubit: Qubit,
        durations_s: Vec<f64>,
    },
    Ramsey {
        qubit: Qubit,
        waits_s: Vec<f64>,
        fit: bool,
    },
    Hahn {
        qubit: Qubit,
        waits_s: Vec<f64>,
        fit: bool,
    },
    CphaseCalibration {
        control: Qubit,
        target: Qubit,
        conditional_phase_rad: f64,
        analysis_phases_rad: Vec<f64>,
    },
    SwapDemo {
        thetas_rad: Vec<f64>,
    },
    ToffoliTest {
        swept_control: Qubit,
        thetas_rad: Vec<f64>,
    },
    TwoQubitCode {
        ancilla: Qubit,
        input: CodeInput,
        echo: TwoQubitEcho,
        waits_s: Vec<f64>,
        fit: bool,
    },
    ThreeQubitPhaseSweep {
        input: CodeInput,
        subsets: Vec<Vec<Qubit>>,
        phases_rad: Vec<f64>,
    },
    ThreeQubitRandom {
        input: CodeInput,
        p_grid: Vec<f64>,
        fit: bool,
    },
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub shots: u64,
    pub estimator: EstimatorChoice,
    pub action: Action,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RabiSpec {
    qubit: Qubit,
    durations_us: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EchoPairSpec {
    qubit: Qubit,
    waits_us: Grid,
    #[serde(default)]
    fit: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CphaseSpec {
    control: Qubit,
    target: Qubit,
    conditional_phase_pi: f64,
    analysis_phases_pi: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwapSpec {
    thetas_pi: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToffoliSpec {
    swept_control: Qubit,
    thetas_pi: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoQubitSpec {
    ancilla: Qubit,
    #[serde(default)]
    input: InputChoice,
    #[serde(default)]
    echo: EchoChoice,
    waits_us: Grid,
    #[serde(default)]
    fit: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseSweepSpec {
    #[serde(default)]
    input: InputChoice,
    subsets: Vec<Vec<Qubit>>,
    phases_pi: Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomSpec {
    #[serde(default)]
    input: InputChoice,
    p_grid: Grid,
    #[serde(default)]
    fit: bool,
}

/// Experiment kinds in the order `list-experiments` reports them, with the
/// kind-specific option names.
pub const EXPERIMENT_KINDS: [(&str, &str); 9] = [
    ("cphase_calibration", "control, target, conditional_phase_pi, analysis_phases_pi"),
    ("hahn", "qubit, waits_us, fit"),
    ("rabi", "qubit, durations_us"),
    ("ramsey", "qubit, waits_us, fit"),
    ("swap_demo", "thetas_pi"),
    ("three_qubit_phase_sweep", "input, subsets, phases_pi"),
    ("three_qubit_random", "input, p_grid, fit"),
    ("toffoli_test", "swept_control, thetas_pi"),
    ("two_qubit_code", "ancilla, input, echo, waits_us, fit"),
];

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn parse_experiment(index: usize, value: &Value) -> Result<Experiment, ConfigError> {
    let at = |suffix: &str| format!("experiments[{index}]{suffix}");
    let map = value
        .as_object()
        .ok_or_else(|| err(at(""), "expected an object"))?;
    let mut rest = map.clone();
    let name = match rest.remove("name") {
        Some(Value::String(s)) if valid_name(&s) => s,
        Some(Value::String(s)) => {
            return Err(err(
                at(".name"),
                format!("`{s}` is not a valid output name (letters, digits, _ and - only)"),
            ))
        }
        _ => return Err(err(at(".name"), "a string `name` is required")),
    };
    let shots = match rest.remove("shots") {
        None => 10_000,
        Some(v) => v
            .as_u64()
            .filter(|&s| s >= 1)
            .ok_or_else(|| err(at(".shots"), "expected a positive integer"))?,
    };
    let estimator = match rest.remove("estimator") {
        None => EstimatorChoice::default(),
        Some(v) => EstimatorChoice::deserialize(v).map_err(|e| err(at(".estimator"), e))?,
    };
    let kind = match rest.remove("kind") {
        Some(Value::String(s)) => s,
        _ => return Err(err(at(".kind"), "a string `kind` is required")),
    };
    let rest = Value::Object(rest);
    let serde_err = |e: serde_json::Error| err(at(""), e);
    let grid_err = |field: &str| {
        let at = at(format!(".{field}").as_str());
        move |e: String| err(at.clone(), e)
    };
    let action = match kind.as_str() {
        "rabi" => {
            let spec = RabiSpec::deserialize(rest).map_err(serde_err)?;
            Action::Rabi {
                qubit: spec.qubit,
                durations_s: spec
                    .durations_us
                    .values(MICROSECONDS)
                    .map_err(grid_err("durations_us"))?,
            }
        }
        "ramsey" | "hahn" => {
            let spec = EchoPairSpec::deserialize(rest).map_err(serde_err)?;
            let waits_s = spec
                .waits_us
                .values(MICROSECONDS)
                .map_err(grid_err("waits_us"))?;
            if kind == "ramsey" {
                Action::Ramsey {
                    qubit: spec.qubit,
                    waits_s,
                    fit: spec.fit,
                }
            } else {
                Action::Hahn {
                    qubit: spec.qubit,
                    waits_s,
                    fit: spec.fit,
                }
            }
        }
        "cphase_calibration" => {
            let spec = CphaseSpec::deserialize(rest).map_err(serde_err)?;
            Action::CphaseCalibration {
                control: spec.control,
                target: spec.target,
                conditional_phase_rad: spec.conditional_phase_pi * PI,
                analysis_phases_rad: spec
                    .analysis_phases_pi
                    .values(PI)
                    .map_err(grid_err("analysis_phases_pi"))?,
            }
        }
        "swap_demo" => {
            let spec = SwapSpec::deserialize(rest).map_err(serde_err)?;
            Action::SwapDemo {
                thetas_rad: spec.thetas_pi.values(PI).map_err(grid_err("thetas_pi"))?,
            }
        }
        "toffoli_test" => {
            let spec = ToffoliSpec::deserialize(rest).map_err(serde_err)?;
            Action::ToffoliTest {
                swept_control: spec.swept_control,
                thetas_rad: spec.thetas_pi.values(PI).map_err(grid_err("thetas_pi"))?,
            }
        }
        "two_qubit_code" => {
            let spec = TwoQubitSpec::deserialize(rest).map_err(serde_err)?;
            Action::TwoQubitCode {
                ancilla: spec.ancilla,
                input: spec.input.to_input(),
                echo: spec.echo.to_echo(),
                waits_s: spec
                    .waits_us
                    .values(MICROSECONDS)
                    .map_err(grid_err("waits_us"))?,
                fit: spec.fit,
            }
        }
        "three_qubit_phase_sweep" => {
            let spec = PhaseSweepSpec::deserialize(rest).map_err(serde_err)?;
            Action::ThreeQubitPhaseSweep {
                input: spec.input.to_input(),
                subsets: spec.subsets,
                phases_rad: spec.phases_pi.values(PI).map_err(grid_err("phases_pi"))?,
            }
        }
        "three_qubit_random" => {
            let spec = RandomSpec::deserialize(rest).map_err(serde_err)?;
            Action::ThreeQubitRandom {
                input: spec.input.to_input(),
                p_grid: spec.p_grid.values(1.0).map_err(grid_err("p_grid"))?,
                fit: spec.fit,
            }
        }
        other => {
            return Err(err(
                at(".kind"),
                format!(
                    "unknown experiment kind `{other}`; known kinds: {}",
                    EXPERIMENT_KINDS
                        .iter()
                        .map(|(k, _)| *k)
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ))
        }
    };
    Ok(Experiment {
        name,
        shots,
        estimator,
        action,
    })
}

/// Fully validated run plan with all quantities in SI units.
#[derive(Debug)]
pub struct RunConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub model: ExecModel,
    pub experiments: Vec<Experiment>,
}

const TOP_LEVEL_KEYS: [&str; 7] = [
    "master_seed",
    "output_dir",
    "device",
    "noise",
    "readout",
    "reset",
    "experiments",
];

pub fn parse(value: &Value) -> Result<RunConfig, ConfigError> {
    let map = value
        .as_object()
        .ok_or_else(|| err("<root>", "config must be a JSON object"))?;
    for key in map.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) {
            return Err(err(
                key.clone(),
                format!(
                    "unknown top-level key; expected one of: {}",
                    TOP_LEVEL_KEYS.join(", ")
                ),
            ));
        }
    }
    let master_seed = match map.get("master_seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| err("master_seed", "expected an unsigned integer"))?,
    };
    let output_dir = match map.get("output_dir") {
        None => PathBuf::from("out"),
        Some(Value::String(s)) => PathBuf::from(s),
        Some(_) => return Err(err("output_dir", "expected a string path")),
    };
    let section = |name: &str| map.get(name).cloned().unwrap_or(Value::Null);
    let device_section: DeviceSection = match section("device") {
        Value::Null => DeviceSection::default(),
        v => DeviceSection::deserialize(v).map_err(|e| err("device", e))?,
    };
    let noise_section: NoiseSection = match section("noise") {
        Value::Null => NoiseSection::default(),
        v => NoiseSection::deserialize(v).map_err(|e| err("noise", e))?,
    };
    let readout_section: ReadoutSection = match section("readout") {
        Value::Null => ReadoutSection::default(),
        v => ReadoutSection::deserialize(v).map_err(|e| err("readout", e))?,
    };
    let reset_section: ResetSection = match section("reset") {
        Value::Null => ResetSection::default(),
        v => ResetSection::deserialize(v).map_err(|e| err("reset", e))?,
    };

    let device = device_section.build()?;
    let noise = noise_section.build(device.n_qubits())?;
    let readout = ReadoutModel::uniform(readout_section.f_even, readout_section.f_odd)
        .map_err(|e| err("readout", e))?;
    let reset = ResetModel {
        retain_probability: reset_section.retain_probability,
    };
    let mut model = ExecModel::ideal();
    model.device = device;
    model.noise = noise;
    model.readout = readout;
    model.reset = reset;
    model.validate().map_err(|e| err("<config>", e))?;

    let experiments_value = map
        .get("experiments")
        .ok_or_else(|| err("experiments", "a non-empty experiment list is required"))?;
    let items = experiments_value
        .as_array()
        .ok_or_else(|| err("experiments", "expected an array"))?;
    if items.is_empty() {
        return Err(err("experiments", "a non-empty experiment list is required"));
    }
    let mut experiments = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        experiments.push(parse_experiment(i, item)?);
    }
    for (i, e) in experiments.iter().enumerate() {
        if experiments[..i].iter().any(|other| other.name == e.name) {
            return Err(err(
                format!("experiments[{i}].name"),
                format!("duplicate experiment name `{}`", e.name),
            ));
        }
    }
    Ok(RunConfig {
        master_seed,
        output_dir,
        model,
        experiments,
    })
}
