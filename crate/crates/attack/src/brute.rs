//! Exact minimum occlusion by subset enumeration. Ground truth for testing
//! the other attacks; exponential, so it refuses anything but tiny inputs.

use iso3d_nn::ModelInput;

use crate::occlude::Occluded;
use crate::oracle::{AttackOracle, Session};
use crate::Error;

pub const BRUTE_FORCE_MAX_ELEMENTS: usize = 20;

#[derive(Debug, Clone)]
pub struct BruteForceOutcome {
    /// Element ids of a smallest misclassifying removal set, ascending.
    /// None when no proper subset removal changes the prediction.
    pub minimal_removal: Option<Vec<usize>>,
    pub queries: usize,
}

/// Smallest set of elements whose removal flips the prediction away from the
/// clean class. Searches subsets in order of increasing size, so the first
/// hit is a global minimum; among equal-sized hits the lexicographically
/// first (by ascending id) is returned, which keeps results reproducible.
pub fn brute_force_min_occlusion<O: AttackOracle>(
    oracle: O,
    input: &ModelInput,
) -> Result<BruteForceOutcome, Error> {
    let n = input.element_count();
    if n == 0 {
        return Err(Error::BadInput("cannot attack an empty input".into()));
    }
    if n > BRUTE_FORCE_MAX_ELEMENTS {
        return Err(Error::TooLargeForBruteForce { got: n, cap: BRUTE_FORCE_MAX_ELEMENTS });
    }
    let session = Session::new(oracle, None, None);
    let base = session.judge(input)?;
    let y = base.class;

    let occ = Occluded::new(input.clone());
    // all proper non-empty subsets, by size; at least one element must survive
    for k in 1..n {
        let mut picked: Vec<usize> = (0..k).collect();
        loop {
            let mut mask_occ = occ.clone();
            for &pos in &picked {
                mask_occ.remove(pos);
            }
            let judged = session.judge(&mask_occ.current())?;
            if judged.class != y {
                let ids = picked.iter().map(|&p| occ.id_at(p)).collect();
                return Ok(BruteForceOutcome {
                    minimal_removal: Some(ids),
                    queries: session.queries(),
                });
            }
            if !next_combination(&mut picked, n) {
                break;
            }
        }
    }
    Ok(BruteForceOutcome { minimal_removal: None, queries: session.queries() })
}

/// Advance `picked` to the next k-combination of 0..n in lexicographic order.
fn next_combination(picked: &mut [usize], n: usize) -> bool {
    let k = picked.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if picked[i] < n - k + i {
            picked[i] += 1;
            for j in i + 1..k {
                picked[j] = picked[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
