//! Distinct-permutation source for the attack's restart schedule.
//!
//! The first ordering is always saliency-descending. For sets of up to 8
//! members every further call walks the remaining permutations in
//! lexicographic order, so distinctness up to exhaustion is exact. Larger
//! sets fall back to seeded shuffles with a bounded repeat check against
//! recently emitted orderings; with 9!+ possibilities a repeat is already
//! vanishingly unlikely.

use iso3d_shapes::mix_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::critical::CriticalSet;

/// Above this cardinality permutations are sampled, not enumerated.
const ENUMERATION_LIMIT: usize = 8;
/// How many emitted orderings the sampling mode remembers.
const REPEAT_MEMORY: usize = 64;
/// Redraw attempts before accepting a possible repeat.
const REDRAW_LIMIT: usize = 8;

/// Progress through the permutation space of one critical set. A value, not
/// a shared handle: `rank` consumes none of it and returns the successor.
#[derive(Debug, Clone, PartialEq)]
pub struct RankState {
    permutation_index: usize,
    seed: u64,
    ordering: Vec<usize>,
    recent: Vec<u64>,
}

impl RankState {
    pub fn new(seed: u64) -> Self {
        RankState { permutation_index: 0, seed, ordering: Vec::new(), recent: Vec::new() }
    }

    /// Orderings emitted so far.
    pub fn emitted(&self) -> usize {
        self.permutation_index
    }

    /// The most recently emitted ordering (element indices). Empty before
    /// the first `rank` call.
    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }
}

/// Emit the next ordering of the set's members, or None once the permutation
/// space is exhausted (only reachable for enumerable sets).
pub fn rank(cs: &CriticalSet, state: &RankState) -> Option<RankState> {
    let n = cs.len();
    assert!(n > 0, "rank needs a non-empty critical set");
    let ascending = cs.indices();
    let by_saliency = cs.ordered_by_saliency();

    let ordering = if state.permutation_index == 0 {
        by_saliency
    } else if n <= ENUMERATION_LIMIT {
        let total = factorial(n);
        if state.permutation_index >= total {
            return None;
        }
        // lexicographic walk with the already-emitted first ordering spliced out
        let skip = lex_rank(&by_saliency, &ascending);
        let q = state.permutation_index - 1;
        let lex_index = if q < skip { q } else { q + 1 };
        lex_unrank(lex_index, &ascending)
    } else {
        let mut pick = Vec::new();
        for attempt in 0..=REDRAW_LIMIT {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[
                state.seed,
                state.permutation_index as u64,
                attempt as u64,
            ]));
            pick = ascending.clone();
            pick.shuffle(&mut rng);
            if !state.recent.contains(&ordering_hash(&pick)) {
                break;
            }
        }
        pick
    };

    let mut next = RankState {
        permutation_index: state.permutation_index + 1,
        seed: state.seed,
        ordering,
        recent: state.recent.clone(),
    };
    if n > ENUMERATION_LIMIT {
        next.recent.push(ordering_hash(&next.ordering));
        if next.recent.len() > REPEAT_MEMORY {
            next.recent.remove(0);
        }
    }
    Some(next)
}

fn factorial(n: usize) -> usize {
    (2..=n).product::<usize>().max(1)
}

/// Seed-stable hash of an ordering (the std hasher randomizes per process).
fn ordering_hash(ordering: &[usize]) -> u64 {
    let words: Vec<u64> = ordering.iter().map(|&i| i as u64).collect();
    mix_seed(&words)
}

/// Position of `perm` in the lexicographic order of all permutations of
/// `sorted` (which must be ascending).
fn lex_rank(perm: &[usize], sorted: &[usize]) -> usize {
    let mut remaining: Vec<usize> = sorted.to_vec();
    let mut rank = 0usize;
    for (i, &p) in perm.iter().enumerate() {
        let pos = remaining.iter().position(|&r| r == p).expect("member of the set");
        rank += pos * factorial(perm.len() - 1 - i);
        remaining.remove(pos);
    }
    rank
}

/// Inverse of `lex_rank`.
fn lex_unrank(mut index: usize, sorted: &[usize]) -> Vec<usize> {
    let mut remaining: Vec<usize> = sorted.to_vec();
    let mut out = Vec::with_capacity(sorted.len());
    for i in 0..sorted.len() {
        let f = factorial(sorted.len() - 1 - i);
        out.push(remaining.remove(index / f));
        index %= f;
    }
    out
}
