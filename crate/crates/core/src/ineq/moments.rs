use serde::{Deserialize, Serialize};

use super::bounds::MeanTerm;

/// `B_n = Σ E[X_k²]` and `M_{n,p} = Σ E[|X_k|^p]` with the per-step upper
/// and lower means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub b_n: f64,
    pub m_np: f64,
    pub p: f64,
    pub upper_means: Vec<f64>,
    pub lower_means: Vec<f64>,
}

impl MomentSummary {
    pub fn mean_terms(&self) -> Vec<MeanTerm> {
        self.lower_means
            .iter()
            .zip(&self.upper_means)
            .map(|(&lower, &upper)| MeanTerm { lower, upper })
            .collect()
    }
}
