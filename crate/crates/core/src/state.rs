use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Positions of `n` tokens in `R^d` at one time step.
///
/// Stored row-major; row `i` is token `i`. Values are immutable once built: a
/// dynamics step returns a fresh configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration", into = "RawConfiguration")]
pub struct TokenConfiguration {
    n: usize,
    d: usize,
    states: Vec<f64>,
    time: u64,
}

#[derive(Serialize, Deserialize)]
struct RawConfiguration {
    t: u64,
    states: Vec<Vec<f64>>,
}

impl TryFrom<RawConfiguration> for TokenConfiguration {
    type Error = CoreError;

    fn try_from(raw: RawConfiguration) -> Result<Self> {
        TokenConfiguration::from_rows(&raw.states, raw.t)
    }
}

impl From<TokenConfiguration> for RawConfiguration {
    fn from(c: TokenConfiguration) -> Self {
        RawConfiguration {
            t: c.time,
            states: c.to_rows(),
        }
    }
}

impl TokenConfiguration {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], time: u64) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if n == 0 || d == 0 {
            return Err(CoreError::EmptyConfiguration);
        }
        let mut states = Vec::with_capacity(n * d);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(CoreError::RaggedRows {
                    row,
                    expected: d,
                    found: r.len(),
                });
            }
            states.extend_from_slice(r);
        }
        Self::from_flat(n, d, states, time)
    }

    pub fn from_flat(n: usize, d: usize, states: Vec<f64>, time: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(CoreError::EmptyConfiguration);
        }
        if states.len() != n * d {
            return Err(CoreError::LengthMismatch {
                what: "state buffer vs n*d",
                left: states.len(),
                right: n * d,
            });
        }
        if let Some(pos) = states.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { n, d, states, time })
    }

    /// Number of tokens.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.states[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.states.chunks_exact(self.d)
    }

    /// Row-major flat view of all coordinates.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn with_time(mut self, time: u64) -> Self {
        self.time = time;
        self
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(CoreError::IndexOutOfRange {
                index: i,
                n: self.n,
            })
        }
    }

    /// Largest Euclidean displacement of any token between `self` and `other`.
    pub fn max_displacement(&self, other: &TokenConfiguration) -> f64 {
        self.rows()
            .zip(other.rows())
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max)
    }

    /// Reorders tokens so that token `k` of the result is token `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(CoreError::LengthMismatch {
                what: "permutation vs token count",
                left: perm.len(),
                right: self.n,
            });
        }
        let mut states = Vec::with_capacity(self.states.len());
        for &p in perm {
            self.check_index(p)?;
            states.extend_from_slice(self.row(p));
        }
        Ok(Self {
            states,
            ..self.clone()
        })
    }

    /// True when every token sits at the same point (bitwise).
    pub fn is_consensus(&self) -> bool {
        let first = self.row(0);
        self.rows().all(|r| r == first)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(
            TokenConfiguration::from_rows(&empty, 0),
            Err(CoreError::EmptyConfiguration)
        );
        assert!(matches!(
            TokenConfiguration::from_rows(&[vec![1.0, 2.0], vec![1.0]], 0),
            Err(CoreError::RaggedRows { row: 1, .. })
        ));
        assert!(matches!(
            TokenConfiguration::from_rows(&[vec![1.0, f64::NAN]], 0),
            Err(CoreError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn json_shape() {
        let c = TokenConfiguration::from_rows(&[[1.0, 2.0], [3.0, 4.5]], 7).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(text, r#"{"t":7,"states":[[1.0,2.0],[3.0,4.5]]}"#);
        let back: TokenConfiguration = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<TokenConfiguration>(r#"{"t":0,"states":[]}"#).is_err());
    }

    #[test]
    fn permutation_round_trip() {
        let c = TokenConfiguration::from_rows(&[[1.0], [2.0], [3.0]], 0).unwrap();
        let p = c.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.to_rows(), vec![vec![3.0], vec![1.0], vec![2.0]]);
        assert!(c.permuted(&[0, 1]).is_err());
    }
}
