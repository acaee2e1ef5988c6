//! A plain serde-friendly container for matrix-product states.
//!
//! Layout (`format = "mps/1"`): per-site tensors are stored row-major as
//! flat `f64` arrays (`a0` for the physical-0 component, `a1` for
//! physical-1), all of size `bond_dim²`. `boundary` is `"ring"` or
//! `"open"`; open states carry their boundary vectors. `period` records a
//! translation-invariant unit cell when one is known, and `canonical` the
//! gauge the tensors are known to satisfy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CanonicalFlag, MatrixProductState, MpsBoundary, MpsError};

pub const MPS_FORMAT: &str = "mps/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MpsContainer {
    pub format: String,
    pub n: usize,
    pub bond_dim: usize,
    /// `"ring"` or `"open"`.
    pub boundary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub canonical: CanonicalFlag,
    pub tensors: Vec<SiteTensorPair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SiteTensorPair {
    /// Row-major `bond_dim × bond_dim` entries of `A⁰`.
    pub a0: Vec<f64>,
    /// Row-major entries of `A¹`.
    pub a1: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

impl From<&MatrixProductState> for MpsContainer {
    fn from(state: &MatrixProductState) -> Self {
        let (boundary, left, right) = match state.boundary() {
            MpsBoundary::Ring => ("ring".to_string(), None, None),
            MpsBoundary::Open { left, right } => (
                "open".to_string(),
                Some(left.iter().copied().collect()),
                Some(right.iter().copied().collect()),
            ),
        };
        MpsContainer {
            format: MPS_FORMAT.to_string(),
            n: state.n(),
            bond_dim: state.bond_dim(),
            boundary,
            left,
            right,
            period: state.ti_period(),
            canonical: state.canonical_flag(),
            tensors: (0..state.n())
                .map(|s| {
                    let [a0, a1] = state.tensor(s);
                    SiteTensorPair { a0: row_major(a0), a1: row_major(a1) }
                })
                .collect(),
        }
    }
}

impl TryFrom<&MpsContainer> for MatrixProductState {
    type Error = MpsError;

    fn try_from(c: &MpsContainer) -> Result<Self, MpsError> {
        if c.format != MPS_FORMAT {
            return Err(MpsError::Container(format!(
                "unsupported format {:?}, expected {MPS_FORMAT:?}",
                c.format
            )));
        }
        if c.tensors.len() != c.n {
            return Err(MpsError::Container(format!(
                "{} site tensors for n = {}",
                c.tensors.len(),
                c.n
            )));
        }
        let d = c.bond_dim;
        let mut tensors = Vec::with_capacity(c.n);
        for (site, pair) in c.tensors.iter().enumerate() {
            if pair.a0.len() != d * d || pair.a1.len() != d * d {
                return Err(MpsError::Container(format!(
                    "site {site}: tensor length must be bond_dim² = {}",
                    d * d
                )));
            }
            tensors.push([
                DMatrix::from_row_slice(d, d, &pair.a0),
                DMatrix::from_row_slice(d, d, &pair.a1),
            ]);
        }
        let boundary = match c.boundary.as_str() {
            "ring" => MpsBoundary::Ring,
            "open" => {
                let left = c.left.as_ref().ok_or_else(|| {
                    MpsError::Container("open boundary needs a left vector".into())
                })?;
                let right = c.right.as_ref().ok_or_else(|| {
                    MpsError::Container("open boundary needs a right vector".into())
                })?;
                MpsBoundary::Open {
                    left: DVector::from_column_slice(left),
                    right: DVector::from_column_slice(right),
                }
            }
            other => {
                return Err(MpsError::Container(format!("unknown boundary {other:?}")));
            }
        };
        if let Some(p) = c.period {
            if p == 0 || c.n % p != 0 {
                return Err(MpsError::Container(format!("period {p} does not divide n = {}", c.n)));
            }
        }
        let mut state = MatrixProductState::from_site_tensors(tensors, boundary)?;
        state.period = c.period;
        state.canonical = c.canonical;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::tilted_bz_mps;

    #[test]
    fn container_rejects_malformed_input() {
        let state = tilted_bz_mps(4, 0.3).unwrap();
        let good = MpsContainer::from(&state);

        let mut bad = good.clone();
        bad.format = "mps/0".into();
        assert!(MatrixProductState::try_from(&bad).is_err());

        let mut bad = good.clone();
        bad.tensors.pop();
        assert!(MatrixProductState::try_from(&bad).is_err());

        let mut bad = good.clone();
        bad.tensors[0].a0.pop();
        assert!(MatrixProductState::try_from(&bad).is_err());

        let mut bad = good.clone();
        bad.boundary = "twisted".into();
        assert!(MatrixProductState::try_from(&bad).is_err());

        let mut bad = good.clone();
        bad.period = Some(3);
        assert!(MatrixProductState::try_from(&bad).is_err());

        let mut bad = good;
        bad.boundary = "open".into();
        bad.left = None;
        assert!(MatrixProductState::try_from(&bad).is_err());
    }
}
