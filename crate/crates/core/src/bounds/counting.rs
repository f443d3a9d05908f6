//! Exact cost counts for the rearrangement bound.

use crate::error::{Error, Result};

fn factorial(m: u128) -> Option<u128> {
    (1..=m).try_fold(1u128, |acc, v| acc.checked_mul(v))
}

fn check_sizes(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::input(format!("need k >= 1 and n >= 1, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// Number of row rearrangements of a `k+1`-block family: `((k+1)!)^n`.
pub fn rearrangement_cardinality(k: usize, n: usize) -> Result<u128> {
    check_sizes(k, n)?;
    let n = u32::try_from(n).map_err(|_| Error::Overflow("rearrangement cardinality"))?;
    factorial(k as u128 + 1).and_then(|f| f.checked_pow(n)).ok_or(Error::Overflow("rearrangement cardinality"))
}

/// Number of per-row block pairs: `(k(k+1)/2)^n`.
pub fn pair_enumeration_count(k: usize, n: usize) -> Result<u128> {
    check_sizes(k, n)?;
    let n = u32::try_from(n).map_err(|_| Error::Overflow("pair enumeration count"))?;
    let k = k as u128;
    (k * (k + 1) / 2).checked_pow(n).ok_or(Error::Overflow("pair enumeration count"))
}

/// Box maximizations needed when every rearrangement is visited with all
/// of its block pairs: `k(k+1)/2 * ((k+1)!)^n`.
pub fn naive_rearrangement_cost(k: usize, n: usize) -> Result<u128> {
    let pairs = (k as u128) * (k as u128 + 1) / 2;
    rearrangement_cardinality(k, n)?.checked_mul(pairs).ok_or(Error::Overflow("naive rearrangement cost"))
}
