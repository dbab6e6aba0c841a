//! Persisted scheduling policies.
//!
//! A policy file is a JSON document carrying the code fingerprint, the
//! clustering, the hyperparameters and training provenance together with
//! the sparse action-value tables. Floats are written in shortest
//! round-trip form, so write → read → write is byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code::LdpcCode;
use crate::error::{Error, Result};
use crate::mdp::{Hyperparams, QTable};

pub const POLICY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Reldec,
    AmReldec,
    MReldec,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reldec" => Ok(Self::Reldec),
            "am-reldec" | "am_reldec" => Ok(Self::AmReldec),
            "m-reldec" | "m_reldec" => Ok(Self::MReldec),
            _ => Err(Error::InvalidArgument(format!("unknown scheme {s:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Reldec => "reldec",
            Self::AmReldec => "am-reldec",
            Self::MReldec => "m-reldec",
        })
    }
}

/// Summary of the run that produced a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub snr_grid_db: Vec<f64>,
    pub meta_iterations: usize,
    pub global_examples: usize,
    pub local_examples: Vec<usize>,
    pub adapt_examples: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyArtifact {
    pub version: u32,
    pub scheme: Scheme,
    pub code_fingerprint: String,
    pub rows: usize,
    pub cols: usize,
    pub z: usize,
    pub clusters: Vec<Vec<usize>>,
    pub hyperparams: Hyperparams,
    pub provenance: Provenance,
    pub global_q: QTable,
    /// Per-SNR tables (M-RELDEC, or AM-RELDEC after online adaptation).
    pub local_q: Vec<QTable>,
}

/// Which table of a policy drives the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableChoice {
    Global,
    Local(usize),
}

impl PolicyArtifact {
    pub fn new(
        code: &LdpcCode,
        scheme: Scheme,
        hyperparams: Hyperparams,
        provenance: Provenance,
        global_q: QTable,
        local_q: Vec<QTable>,
    ) -> Self {
        let cl = code.clustering();
        Self {
            version: POLICY_VERSION,
            scheme,
            code_fingerprint: code.fingerprint().to_string(),
            rows: code.matrix().rows(),
            cols: code.matrix().cols(),
            z: cl.z(),
            clusters: (0..cl.num_clusters()).map(|a| cl.cns(a).to_vec()).collect(),
            hyperparams,
            provenance,
            global_q,
            local_q,
        }
    }

    /// Checks that this policy was trained for `code` with the same clustering.
    pub fn check_compatible(&self, code: &LdpcCode) -> Result<()> {
        if self.code_fingerprint != code.fingerprint() {
            return Err(Error::FingerprintMismatch {
                policy: self.code_fingerprint.clone(),
                code: code.fingerprint().to_string(),
            });
        }
        let cl = code.clustering();
        let same = self.z == cl.z()
            && self.clusters.len() == cl.num_clusters()
            && self
                .clusters
                .iter()
                .enumerate()
                .all(|(a, g)| g == cl.cns(a));
        if !same {
            return Err(Error::PolicyFormat(
                "policy clustering differs from the code's".into(),
            ));
        }
        Ok(())
    }

    pub fn table(&self, choice: TableChoice) -> Result<&QTable> {
        match choice {
            TableChoice::Global => Ok(&self.global_q),
            TableChoice::Local(k) => self.local_q.get(k).ok_or_else(|| {
                Error::PolicyFormat(format!(
                    "policy has {} local tables, asked for {k}",
                    self.local_q.len()
                ))
            }),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.version != POLICY_VERSION {
            return Err(Error::PolicyFormat(format!(
                "unsupported policy version {}",
                p.version
            )));
        }
        let actions = p.clusters.len();
        if std::iter::once(&p.global_q)
            .chain(&p.local_q)
            .any(|q| q.num_actions() != actions)
        {
            return Err(Error::PolicyFormat(
                "table width differs from cluster count".into(),
            ));
        }
        let referenced_ok = std::iter::once(&p.global_q)
            .chain(&p.local_q)
            .flat_map(|q| q.sorted_cells())
            .all(|(k, _, v)| (k.cluster as usize) < actions && v.is_finite());
        if !referenced_ok {
            return Err(Error::PolicyFormat(
                "table references a missing cluster".into(),
            ));
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{build_ab_code, ClusterMethod};
    use crate::mdp::StateKey;

    fn artifact() -> (LdpcCode, PolicyArtifact) {
        let code =
            LdpcCode::new(build_ab_code(3, 5).unwrap(), 1, ClusterMethod::Sequential).unwrap();
        let mut q = QTable::new(15);
        q.set(StateKey::new(3, 17), 3, 0.123_456_789_012_345_6);
        q.set(StateKey::new(0, 0), 0, 9.999_999_999_999_998);
        let prov = Provenance {
            seed: 7,
            snr_grid_db: vec![1.0, 1.5],
            meta_iterations: 1,
            global_examples: 10,
            local_examples: vec![],
            adapt_examples: vec![],
        };
        let p = PolicyArtifact::new(
            &code,
            Scheme::Reldec,
            Hyperparams::default(),
            prov,
            q,
            vec![],
        );
        (code, p)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let (code, p) = artifact();
        let text = p.to_json().unwrap();
        let back = PolicyArtifact::from_json(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_json().unwrap(), text);
        back.check_compatible(&code).unwrap();
    }

    #[test]
    fn rejects_other_code() {
        let (_, p) = artifact();
        let other =
            LdpcCode::new(build_ab_code(3, 7).unwrap(), 1, ClusterMethod::Sequential).unwrap();
        assert!(matches!(
            p.check_compatible(&other),
            Err(Error::FingerprintMismatch { .. })
        ));
        assert!(p.table(TableChoice::Local(0)).is_err());
    }

    #[test]
    fn rejects_bad_version() {
        let (_, mut p) = artifact();
        p.version = 99;
        assert!(PolicyArtifact::from_json(&p.to_json().unwrap()).is_err());
    }
}
