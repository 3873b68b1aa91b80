use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Zero-based qubit index. Displays as the one-based device name ("Q1" is index 0).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Qubit(pub u8);

pub const Q1: Qubit = Qubit(0);
pub const Q2: Qubit = Qubit(1);
pub const Q3: Qubit = Qubit(2);
pub const Q4: Qubit = Qubit(3);

impl Qubit {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn bit(self) -> usize {
        1 << self.0
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0 + 1)
    }
}

impl fmt::Debug for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.0 + 1)
    }
}

impl FromStr for Qubit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix('Q')
            .or_else(|| s.strip_prefix('q'))
            .ok_or_else(|| format!("invalid qubit name {s:?}: expected \"Q<n>\""))?;
        let n: u8 = digits
            .parse()
            .map_err(|_| format!("invalid qubit name {s:?}: expected \"Q<n>\""))?;
        if n == 0 || n as usize > crate::state::MAX_QUBITS {
            return Err(format!(
                "invalid qubit name {s:?}: n must be in 1..={}",
                crate::state::MAX_QUBITS
            ));
        }
        Ok(Qubit(n - 1))
    }
}

impl TryFrom<String> for Qubit {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Qubit> for String {
    fn from(q: Qubit) -> String {
        q.to_string()
    }
}
