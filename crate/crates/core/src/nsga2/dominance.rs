use crate::error::{Error, Result};

/// Pareto dominance for minimisation: `a` is no worse everywhere and
/// strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

/// [`dominates`] without the length check. Extra components of the longer
/// slice are ignored.
pub fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}
