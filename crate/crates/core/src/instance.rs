use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::linalg::{common_dim, GramState, Vector};
use crate::matroid::Matroid;

/// Vectors `v_1..v_n ∈ R^d` together with a matroid over their indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    vectors: Vec<Vector>,
    matroid: Matroid,
}

impl Instance {
    pub fn new(vectors: Vec<Vector>, matroid: Matroid) -> Result<Self> {
        common_dim(&vectors)?;
        matroid.validate()?;
        if matroid.ground_size() != vectors.len() {
            return Err(Error::InvalidInstance(format!(
                "matroid ground set has {} elements but there are {} vectors",
                matroid.ground_size(),
                vectors.len()
            )));
        }
        Ok(Self { vectors, matroid })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &Vector {
        &self.vectors[i]
    }

    pub fn matroid(&self) -> &Matroid {
        &self.matroid
    }

    /// Rank `r` of the constraint matroid.
    pub fn rank(&self) -> usize {
        self.matroid.full_rank()
    }

    /// Same vectors under a different matroid.
    pub fn with_matroid(&self, matroid: Matroid) -> Result<Self> {
        Self::new(self.vectors.clone(), matroid)
    }

    pub fn gram(&self, s: &IndexSet) -> Result<GramState> {
        GramState::build(&self.vectors, s.as_slice())
    }

    /// `ln det(Σ_{i∈s} v_i v_iᵀ)`, `-∞` when singular.
    pub fn log_det(&self, s: &IndexSet) -> Result<f64> {
        Ok(self.gram(s)?.log_det())
    }

    /// `d · ln(trace(Σ_i v_i v_iᵀ))`, an upper bound on any `ln det` over subsets.
    pub fn log_det_upper_bound(&self) -> f64 {
        let trace: f64 = self.vectors.iter().map(|v| v.norm_squared()).sum();
        self.dim() as f64 * trace.ln()
    }
}
