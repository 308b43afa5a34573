//! Rank correlation between scoring schemes.
//!
//! Used to measure how much the stable ranking actually differs from a
//! plain single-grid ranking: Kendall's tau-b and Spearman's rho over the
//! top-n papers, swept across a grid of n values. Both handle ties (tau
//! via the b variant, rho via average ranks).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "score vectors differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Validation(
            "correlation needs at least two observations".to_owned(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "correlation input contains a non-finite score".to_owned(),
        ));
    }
    Ok(())
}

fn tied_pair_count(sorted: &[f64]) -> u64 {
    let mut ties = 0u64;
    let mut run = 1u64;
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            run += 1;
        } else {
            ties += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties + run * (run - 1) / 2
}

/// Merge sort that counts inversions (pairs out of strict ascending
/// order). Equal elements are not inversions.
fn count_inversions(values: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut swaps = count_inversions(left, scratch) + count_inversions(right, scratch);

    let (mut i, mut j) = (0, 0);
    for slot in scratch[..n].iter_mut() {
        if i < left.len() && (j >= right.len() || left[i] <= right[j]) {
            *slot = left[i];
            i += 1;
        } else {
            swaps += (left.len() - i) as u64;
            *slot = right[j];
            j += 1;
        }
    }
    values.copy_from_slice(&scratch[..n]);
    swaps
}

/// Kendall's tau-b. Sorts by (x, y), counts discordant pairs as the
/// inversions of the resulting y sequence, and corrects both the
/// numerator and denominator for ties. Errors when either vector is
/// constant (the coefficient is undefined).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then_with(|| y[a].total_cmp(&y[b])));

    let x_sorted: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut y_by_x: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pair_count(&x_sorted);
    let joint: Vec<u64> = {
        // Runs of identical (x, y) pairs in the sorted order.
        let mut runs = Vec::new();
        let mut run = 1u64;
        for i in 1..n {
            if x_sorted[i] == x_sorted[i - 1] && y_by_x[i] == y_by_x[i - 1] {
                run += 1;
            } else {
                runs.push(run);
                run = 1;
            }
        }
        runs.push(run);
        runs
    };
    let n3: u64 = joint.iter().map(|t| t * (t - 1) / 2).sum();

    let mut y_sorted = y_by_x.clone();
    y_sorted.sort_by(f64::total_cmp);
    let n2 = tied_pair_count(&y_sorted);

    let mut scratch = vec![0.0; n];
    let discordant = count_inversions(&mut y_by_x, &mut scratch);

    if n0 == n1 || n0 == n2 {
        return Err(Error::Validation(
            "kendall tau undefined: a score vector is constant".to_owned(),
        ));
    }
    let numerator = (n0 - n1 - n2 + n3) as f64 - 2.0 * discordant as f64;
    let denominator = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((numerator / denominator).clamp(-1.0, 1.0))
}

/// Positions 1..=n with tied values sharing the average of the positions
/// they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions are 1-based; a run spanning positions start+1..=end
        // shares their midpoint.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Validation(
            "spearman rho undefined: a score vector is constant".to_owned(),
        ));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: the Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Coefficients of two scoring schemes restricted to the top `n` papers
/// of the reference scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub n: usize,
    pub kendall_tau: f64,
    pub spearman_rho: f64,
}

/// Correlates two scoring schemes over growing prefixes of the reference
/// ranking. `reference` defines the prefix order (descending score, ties
/// by id); both maps must score every id they share with the prefix.
pub fn prefix_sweep(
    reference: &BTreeMap<String, f64>,
    other: &BTreeMap<String, f64>,
    ns: &[usize],
) -> Result<Vec<CorrelationPoint>> {
    let mut order: Vec<&String> = reference.keys().collect();
    order.sort_by(|a, b| {
        reference[*b]
            .total_cmp(&reference[*a])
            .then_with(|| a.cmp(b))
    });

    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        if n < 2 || n > order.len() {
            return Err(Error::Validation(format!(
                "prefix size {n} outside 2..={}",
                order.len()
            )));
        }
        let prefix = &order[..n];
        let missing: Vec<&str> = prefix
            .iter()
            .filter(|id| !other.contains_key(**id))
            .map(|id| id.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(format!(
                "second scheme is missing scores for: {}",
                missing.join(", ")
            )));
        }
        let x: Vec<f64> = prefix.iter().map(|id| reference[*id]).collect();
        let y: Vec<f64> = prefix.iter().map(|id| other[*id]).collect();
        points.push(CorrelationPoint {
            n,
            kendall_tau: kendall_tau(&x, &y)?,
            spearman_rho: spearman_rho(&x, &y)?,
        });
    }
    Ok(points)
}

/// Default sweep grid: multiples of 10 up to `len`, with `len` itself
/// appended when it is not a multiple of 10.
pub fn default_grid(len: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=len / 10).map(|k| k * 10).collect();
    if grid.last() != Some(&len) && len >= 2 {
        grid.push(len);
    }
    grid
}

/// How many ids the two lists share.
pub fn overlap_count<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let set: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    b.iter().filter(|id| set.contains(id.as_ref())).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tau_on_one_swap() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_abs_diff_eq!(kendall_tau(&x, &y).unwrap(), 4.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn tau_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        assert_abs_diff_eq!(kendall_tau(&x, &x).unwrap(), 1.0);
        assert_abs_diff_eq!(kendall_tau(&x, &rev).unwrap(), -1.0);
    }

    #[test]
    fn tau_rejects_constant_vector() {
        let x = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        assert!(kendall_tau(&x, &y).is_err());
    }

    #[test]
    fn rho_on_one_swap() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_abs_diff_eq!(spearman_rho(&x, &y).unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn average_ranks_share_positions() {
        let ranks = average_ranks(&[10.0, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn sweep_orders_by_reference_score() {
        let reference: BTreeMap<String, f64> = [
            ("a".to_owned(), 3.0),
            ("b".to_owned(), 2.0),
            ("c".to_owned(), 1.0),
            ("d".to_owned(), 0.5),
        ]
        .into();
        let other: BTreeMap<String, f64> = [
            ("a".to_owned(), 30.0),
            ("b".to_owned(), 10.0),
            ("c".to_owned(), 20.0),
            ("d".to_owned(), 5.0),
        ]
        .into();
        let points = prefix_sweep(&reference, &other, &[3, 4]).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].n, 3);
        assert_abs_diff_eq!(points[0].kendall_tau, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(points[1].n as f64, 4.0);
    }

    #[test]
    fn sweep_rejects_missing_scores() {
        let reference: BTreeMap<String, f64> =
            [("a".to_owned(), 3.0), ("b".to_owned(), 2.0)].into();
        let other: BTreeMap<String, f64> = [("a".to_owned(), 1.0)].into();
        let err = prefix_sweep(&reference, &other, &[2]).unwrap_err();
        assert!(err.to_string().contains("b"));
    }

    #[test]
    fn grid_covers_len() {
        assert_eq!(default_grid(40), vec![10, 20, 30, 40]);
        assert_eq!(default_grid(197), {
            let mut g: Vec<usize> = (1..=19).map(|k| k * 10).collect();
            g.push(197);
            g
        });
        assert_eq!(default_grid(7), vec![7]);
    }

    #[test]
    fn overlap_counts_shared_ids() {
        let a = ["x", "y", "z"];
        let b = ["y", "z", "w"];
        assert_eq!(overlap_count(&a, &b), 2);
    }
}
