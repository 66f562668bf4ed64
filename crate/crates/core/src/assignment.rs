//! Bipartite matching primitives on dense cost matrices where `None` marks
//! a forbidden pair.

/// Maximum matching on the pairs accepted by `allowed`. Returns, per row,
/// the matched column.
pub fn max_matching(
    rows: usize,
    cols: usize,
    allowed: impl Fn(usize, usize) -> bool,
) -> Vec<Option<usize>> {
    fn augment(
        row: usize,
        cols: usize,
        allowed: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        col_owner: &mut [Option<usize>],
    ) -> bool {
        for c in 0..cols {
            if allowed(row, c) && !seen[c] {
                seen[c] = true;
                let free = match col_owner[c] {
                    None => true,
                    Some(other) => augment(other, cols, allowed, seen, col_owner),
                };
                if free {
                    col_owner[c] = Some(row);
                    return true;
                }
            }
        }
        false
    }

    let mut col_owner = vec![None; cols];
    for row in 0..rows {
        let mut seen = vec![false; cols];
        augment(row, cols, &allowed, &mut seen, &mut col_owner);
    }
    let mut row_match = vec![None; rows];
    for (c, owner) in col_owner.iter().enumerate() {
        if let Some(r) = owner {
            row_match[*r] = Some(c);
        }
    }
    row_match
}

pub fn matching_size(cost: &[Vec<Option<f64>>], cols: usize, threshold: f64) -> usize {
    max_matching(cost.len(), cols, |r, c| {
        cost[r][c].is_some_and(|v| v <= threshold)
    })
    .iter()
    .flatten()
    .count()
}

/// Smallest threshold `t` among the finite costs such that the pairs with
/// cost `≤ t` admit a matching of size `target`; `None` if no threshold does.
/// A zero target needs no pairs and yields `Some(0.0)`.
pub fn bottleneck_threshold(cost: &[Vec<Option<f64>>], cols: usize, target: usize) -> Option<f64> {
    if target == 0 {
        return Some(0.0);
    }
    let mut values: Vec<f64> = cost.iter().flatten().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let last = *values.last()?;
    if matching_size(cost, cols, last) < target {
        return None;
    }
    let (mut lo, mut hi) = (0, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if matching_size(cost, cols, values[mid]) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(values[lo])
}

/// Minimum-sum assignment of every row to a distinct column of a dense
/// finite cost matrix with `rows ≤ cols` (shortest augmenting paths with
/// potentials).
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian needs rows <= cols");
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Among matchings that use only pairs with cost `≤ threshold`, one of
/// maximum cardinality and, within those, minimum total cost.
pub fn min_sum_within(
    cost: &[Vec<Option<f64>>],
    cols: usize,
    threshold: f64,
) -> Vec<Option<usize>> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let allowed_total: f64 = cost
        .iter()
        .flatten()
        .flatten()
        .filter(|&&v| v <= threshold)
        .sum();
    // each row gets a private dummy column; leaving a row unmatched costs
    // more than any set of allowed pairs, and forbidden pairs cost more still
    let dummy = 2.0 * allowed_total + 1.0;
    let forbidden = 4.0 * dummy;
    let dense: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..cols + rows)
                .map(|c| {
                    if c < cols {
                        match cost[r][c] {
                            Some(v) if v <= threshold => v,
                            _ => forbidden,
                        }
                    } else if c - cols == r {
                        dummy
                    } else {
                        forbidden
                    }
                })
                .collect()
        })
        .collect();
    hungarian(&dense)
        .into_iter()
        .enumerate()
        .map(|(r, c)| (c < cols && cost[r][c].is_some_and(|v| v <= threshold)).then_some(c))
        .collect()
}
