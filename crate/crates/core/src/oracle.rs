//! Brute-force ground truth for small instances.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact;
use crate::index_set::IndexSet;
use crate::instance::Instance;
use crate::matroid::Matroid;

/// Largest ground set [`enumerate_bases`] accepts.
pub const MAX_GROUND: usize = 20;
/// Largest number of bases [`enumerate_bases`] produces.
pub const MAX_BASES: usize = 1_000_000;

/// All bases in lexicographic order.
pub fn enumerate_bases(m: &Matroid) -> Result<Vec<IndexSet>> {
    if m.ground_size() > MAX_GROUND {
        return Err(Error::GuardExceeded(format!(
            "basis enumeration over {} elements (cap {MAX_GROUND})",
            m.ground_size()
        )));
    }
    let elements: Vec<usize> = m.elements().iter().collect();
    let rank = m.full_rank();
    let mut out = Vec::new();
    let mut current = IndexSet::new();
    backtrack(m, &elements, 0, rank, &mut current, &mut out)?;
    Ok(out)
}

fn backtrack(
    m: &Matroid,
    elements: &[usize],
    from: usize,
    rank: usize,
    current: &mut IndexSet,
    out: &mut Vec<IndexSet>,
) -> Result<()> {
    if current.len() == rank {
        if out.len() >= MAX_BASES {
            return Err(Error::GuardExceeded(format!("more than {MAX_BASES} bases")));
        }
        out.push(current.clone());
        return Ok(());
    }
    for k in from..elements.len() {
        if elements.len() - k < rank - current.len() {
            break;
        }
        let e = elements[k];
        current.insert(e);
        if m.is_independent(current)? {
            // the remaining elements must still be able to complete a basis
            let reach: IndexSet = current.union(&elements[k + 1..].iter().copied().collect());
            if m.rank(&reach)? == rank {
                backtrack(m, elements, k + 1, rank, current, out)?;
            }
        }
        current.remove(e);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Float,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// First maximizer in lexicographic order; `None` when every basis is singular.
    pub best_set: Option<IndexSet>,
    /// `None` stands for `-∞`.
    pub log_det_ln: Option<f64>,
    pub bases_enumerated: usize,
    pub mode: OracleMode,
}

impl OracleResult {
    pub fn log_det(&self) -> f64 {
        self.log_det_ln.unwrap_or(f64::NEG_INFINITY)
    }
}

/// Relative tolerance under which two float determinants tie.
const FLOAT_TIE_REL: f64 = 1e-12;

/// Exact maximizer of `det(Σ_{i∈S} v_i v_iᵀ)` over all bases.
pub fn brute_force_opt(instance: &Instance, mode: OracleMode) -> Result<OracleResult> {
    let bases = enumerate_bases(instance.matroid())?;
    let count = bases.len();
    let (best_set, log_det) = match mode {
        OracleMode::Float => {
            let mut best: Option<(IndexSet, f64)> = None;
            for b in bases {
                let ld = instance.log_det(&b)?;
                if !ld.is_finite() {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((_, cur)) => ld > cur + FLOAT_TIE_REL * cur.abs().max(1.0),
                };
                if better {
                    best = Some((b, ld));
                }
            }
            match best {
                Some((b, ld)) => (Some(b), Some(ld)),
                None => (None, None),
            }
        }
        OracleMode::Exact => {
            let mut best: Option<(IndexSet, BigRational)> = None;
            for b in bases {
                let det = exact::gram_det(instance.vectors(), b.as_slice())?;
                if det <= BigRational::default() {
                    continue;
                }
                if best.as_ref().is_none_or(|(_, cur)| det > *cur) {
                    best = Some((b, det));
                }
            }
            match best {
                Some((b, det)) => (Some(b), Some(exact::ln(&det))),
                None => (None, None),
            }
        }
    };
    Ok(OracleResult {
        best_set,
        log_det_ln: log_det,
        bases_enumerated: count,
        mode,
    })
}
