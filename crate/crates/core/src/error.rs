use thiserror::Error;

use crate::model::SectorBounds;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PbcError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dissipativity triple (q={q}, s={s}, r={r}) is outside every designable case")]
    NotSectorDesignable { q: f64, s: f64, r: f64 },

    #[error("no multiplier certifies the sector: {0}")]
    CertificateSearchFailed(String),

    #[error("state left the admissible set (v={v}, z1={z1}, residual={residual:e})")]
    StateLeftAdmissibleSet { v: f64, z1: f64, residual: f64 },

    #[error("numerical blowup at t={time}")]
    NumericalBlowup { time: f64, state: Vec<f64> },

    #[error("plant has no storage function, dissipativity cannot be checked")]
    NotCheckable,
}

impl PbcError {
    pub(crate) fn search_failed(bounds: Option<SectorBounds>, why: &str) -> Self {
        match bounds {
            Some(b) => PbcError::CertificateSearchFailed(format!(
                "{why} (tried k1={}, k2={})",
                b.k1(),
                b.k2()
            )),
            None => PbcError::CertificateSearchFailed(why.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, PbcError>;
