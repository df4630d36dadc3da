use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolTag {
    /// Repeated ZZ checks.
    Zz,
    /// Interleaved ZZ and XX checks (ZZ on even rounds).
    Zzxx,
    /// Bell-state idling under dynamical decoupling, no checks.
    IdlingDd,
}

impl ProtocolTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolTag::Zz => "zz",
            ProtocolTag::Zzxx => "zzxx",
            ProtocolTag::IdlingDd => "idling_dd",
        }
    }

    /// Number of outcomes multiplied into one syndrome value.
    pub fn syndrome_span(self) -> Option<usize> {
        match self {
            ProtocolTag::Zz => Some(3),
            ProtocolTag::Zzxx => Some(4),
            ProtocolTag::IdlingDd => None,
        }
    }
}

impl std::str::FromStr for ProtocolTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zz" => Ok(ProtocolTag::Zz),
            "zzxx" => Ok(ProtocolTag::Zzxx),
            "idling_dd" | "idling" => Ok(ProtocolTag::IdlingDd),
            other => Err(Error::InvalidConfig(format!("unknown protocol `{other}`"))),
        }
    }
}

impl std::fmt::Display for ProtocolTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Data-qubit syndrome `s_D[m]` for `m >= start` (0-indexed rounds).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyndromeSequence {
    pub values: Vec<i8>,
    pub start: usize,
}

impl SyndromeSequence {
    pub fn symbols(&self) -> Vec<usize> {
        self.values.iter().map(|&v| symbol(v)).collect()
    }

    pub fn all_clear(&self) -> bool {
        self.values.iter().all(|&v| v == 1)
    }
}

/// Output symbol of a `+1`/`-1` value: 0 for `+1`, 1 for `-1`.
pub fn symbol(v: i8) -> usize {
    usize::from(v < 0)
}

/// ZZ: `s[m] = M[m] M[m-2]`; ZZXX: `s[m] = M[m] M[m-1] M[m-2] M[m-3]`.
pub fn syndrome_from_measurements(protocol: ProtocolTag, m_a: &[i8]) -> Result<SyndromeSequence> {
    let span = protocol.syndrome_span().ok_or_else(|| {
        Error::ProtocolMismatch("syndromes are defined only for zz and zzxx".into())
    })?;
    if m_a.len() < span {
        return Err(Error::SequenceTooShort {
            needed: span,
            got: m_a.len(),
        });
    }
    let start = span - 1;
    let values = (start..m_a.len())
        .map(|m| match protocol {
            ProtocolTag::Zz => m_a[m] * m_a[m - 2],
            _ => m_a[m] * m_a[m - 1] * m_a[m - 2] * m_a[m - 3],
        })
        .collect();
    Ok(SyndromeSequence { values, start })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zz_repeated_error_pattern() {
        let s = syndrome_from_measurements(ProtocolTag::Zz, &[1, 1, -1, -1, 1, 1]).unwrap();
        assert_eq!(s.values, vec![-1, -1, -1, -1]);
        assert_eq!(s.start, 2);
    }

    #[test]
    fn zz_all_plus() {
        let s = syndrome_from_measurements(ProtocolTag::Zz, &[1; 8]).unwrap();
        assert!(s.all_clear());
        assert_eq!(s.values.len(), 6);
    }

    #[test]
    fn zzxx_four_fold_product() {
        let s = syndrome_from_measurements(ProtocolTag::Zzxx, &[1, -1, 1, -1, 1]).unwrap();
        assert_eq!(s.values, vec![1, 1]);
        assert_eq!(s.start, 3);
    }

    #[test]
    fn too_short_and_wrong_protocol() {
        assert!(matches!(
            syndrome_from_measurements(ProtocolTag::Zz, &[1, 1]),
            Err(Error::SequenceTooShort { needed: 3, got: 2 })
        ));
        assert!(matches!(
            syndrome_from_measurements(ProtocolTag::Zzxx, &[1, 1, 1]),
            Err(Error::SequenceTooShort { needed: 4, got: 3 })
        ));
        assert!(syndrome_from_measurements(ProtocolTag::IdlingDd, &[1, 1, 1]).is_err());
    }
}
