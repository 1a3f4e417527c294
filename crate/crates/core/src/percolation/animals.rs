//! Lattice animals under king adjacency (blocks sharing a face, edge or corner).
//!
//! Redelmeier's algorithm counts fixed animals (up to translation); an animal of size n has
//! exactly n translates that contain the origin.

use std::collections::HashSet;

pub fn king_degree(d: usize) -> usize {
    3usize.pow(d as u32) - 1
}

fn neighbours(d: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out.into_iter().flat_map(|v| (-1..=1).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|&c| c != 0));
    out
}

/// Cells after the origin in the enumeration order: last coordinate positive, or zero with
/// the remaining prefix after the origin (recursively).
fn allowed(c: &[i64]) -> bool {
    for &v in c.iter().rev() {
        if v != 0 {
            return v > 0;
        }
    }
    true
}

/// Fixed animal counts `a[n]` for `n = 0..=n_max` (`a[0] = 0`).
pub fn fixed_animals(d: usize, n_max: usize) -> Vec<u64> {
    let nb = neighbours(d);
    let mut counts = vec![0u64; n_max + 1];
    if n_max == 0 {
        return counts;
    }
    let origin = vec![0i64; d];
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    seen.insert(origin.clone());
    let mut untried = vec![origin];
    let mut size = 0usize;
    redelmeier(&nb, &mut untried, &mut seen, &mut size, n_max, &mut counts);
    counts
}

fn redelmeier(
    nb: &[Vec<i64>],
    untried: &mut Vec<Vec<i64>>,
    seen: &mut HashSet<Vec<i64>>,
    size: &mut usize,
    n_max: usize,
    counts: &mut [u64],
) {
    while let Some(cell) = untried.pop() {
        *size += 1;
        counts[*size] += 1;
        if *size < n_max {
            let mut added = Vec::new();
            for o in nb {
                let n: Vec<i64> = cell.iter().zip(o).map(|(a, b)| a + b).collect();
                if allowed(&n) && !seen.contains(&n) {
                    seen.insert(n.clone());
                    added.push(n);
                }
            }
            let mut next = untried.clone();
            next.extend(added.iter().cloned());
            redelmeier(nb, &mut next, seen, size, n_max, counts);
            for n in added {
                seen.remove(&n);
            }
        }
        *size -= 1;
    }
}

/// Number of king-connected n-sets of blocks containing the origin, `n = 0..=n_max`.
pub fn connected_sets_with_origin(d: usize, n_max: usize) -> Vec<u64> {
    fixed_animals(d, n_max).into_iter().enumerate().map(|(n, a)| n as u64 * a).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    // direct growth of sets containing the origin, deduplicated
    fn brute(d: usize, n_max: usize) -> Vec<u64> {
        let nb = neighbours(d);
        let mut level: HashSet<BTreeSet<Vec<i64>>> = HashSet::new();
        level.insert([vec![0i64; d]].into_iter().collect());
        let mut out = vec![0, 1];
        for _ in 2..=n_max {
            let mut next = HashSet::new();
            for s in &level {
                for c in s {
                    for o in &nb {
                        let n: Vec<i64> = c.iter().zip(o).map(|(a, b)| a + b).collect();
                        if !s.contains(&n) {
                            let mut t = s.clone();
                            t.insert(n);
                            next.insert(t);
                        }
                    }
                }
            }
            out.push(next.len() as u64);
            level = next;
        }
        out
    }

    #[test]
    fn known_polyking_counts() {
        assert_eq!(fixed_animals(2, 8), vec![0, 1, 4, 20, 110, 638, 3832, 23592, 147941]);
        assert_eq!(fixed_animals(1, 5), vec![0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn matches_brute_force() {
        assert_eq!(connected_sets_with_origin(2, 5), brute(2, 5));
        assert_eq!(connected_sets_with_origin(1, 6), brute(1, 6));
    }
}
