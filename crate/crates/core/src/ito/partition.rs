/// A split of the positions `0..k` into `r` unordered pairs and `k - 2r` singles.
///
/// Pairs are stored as `(a, b)` with `a < b`, sorted by `a`; singles ascend.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    pub pairs: Vec<(usize, usize)>,
    pub singles: Vec<usize>,
}

/// Every partition of `0..k` with exactly `r` pairs.
pub fn enumerate_pair_partitions(k: usize, r: usize) -> Vec<PairPartition> {
    let mut out = Vec::new();
    if 2 * r > k {
        return out;
    }
    let mut used = vec![false; k];
    let mut pairs = Vec::with_capacity(r);
    let mut singles = Vec::with_capacity(k - 2 * r);
    recurse(0, k, r, &mut used, &mut pairs, &mut singles, &mut out);
    out
}

fn recurse(
    start: usize,
    k: usize,
    r: usize,
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    singles: &mut Vec<usize>,
    out: &mut Vec<PairPartition>,
) {
    let Some(a) = (start..k).find(|&i| !used[i]) else {
        if pairs.len() == r {
            out.push(PairPartition {
                pairs: pairs.clone(),
                singles: singles.clone(),
            });
        }
        return;
    };
    used[a] = true;
    let remaining = used.iter().filter(|u| !**u).count();
    if singles.len() < k - 2 * r {
        singles.push(a);
        recurse(a + 1, k, r, used, pairs, singles, out);
        singles.pop();
    }
    if pairs.len() < r && remaining > 0 {
        for b in a + 1..k {
            if used[b] {
                continue;
            }
            used[b] = true;
            pairs.push((a, b));
            recurse(a + 1, k, r, used, pairs, singles, out);
            pairs.pop();
            used[b] = false;
        }
    }
    used[a] = false;
}

/// `k! / ((k - 2r)! r! 2^r)`.
pub fn partition_count(k: usize, r: usize) -> usize {
    if 2 * r > k {
        return 0;
    }
    let fact = |n: usize| (1..=n).product::<usize>();
    fact(k) / (fact(k - 2 * r) * fact(r) * (1 << r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        assert_eq!(enumerate_pair_partitions(2, 1).len(), 1);
        assert_eq!(enumerate_pair_partitions(5, 1).len(), 10);
        assert_eq!(enumerate_pair_partitions(5, 2).len(), 15);
        assert_eq!(enumerate_pair_partitions(4, 2).len(), 3);
        assert!(enumerate_pair_partitions(3, 2).is_empty());
        for k in 0..=8 {
            for r in 0..=k / 2 {
                let parts = enumerate_pair_partitions(k, r);
                assert_eq!(parts.len(), partition_count(k, r), "k={k} r={r}");
                let unique: HashSet<_> = parts.iter().collect();
                assert_eq!(unique.len(), parts.len());
                for p in &parts {
                    let mut all: Vec<usize> = p.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
                    all.extend(&p.singles);
                    all.sort_unstable();
                    assert_eq!(all, (0..k).collect::<Vec<_>>());
                }
            }
        }
    }
}
