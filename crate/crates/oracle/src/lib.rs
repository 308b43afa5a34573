//! Deliberately naive reference implementations.
//!
//! Everything here trades speed for obviousness: day-by-day scans
//! instead of calendar arithmetic, O(n^2) pair enumeration instead of
//! merge counting, textbook normal equations instead of orthogonal
//! polynomials. Test suites in the other crates compare the production
//! code against these to catch errors that a shared implementation
//! would hide. Never call this crate from non-test code.

use chrono::{Datelike, Days, NaiveDate, Weekday};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Latest date on or before `epoch` that falls on `weekday`, found by
/// walking backwards one day at a time.
pub fn anchor_by_scan(epoch: NaiveDate, weekday: Weekday) -> NaiveDate {
    let mut date = epoch;
    while date.weekday() != weekday {
        date = date.pred_opt().expect("date range underflow");
    }
    date
}

/// Week index of `date` on a grid of 7-day bins starting at `anchor`,
/// found by stepping whole weeks from the anchor.
pub fn week_index_by_scan(date: NaiveDate, anchor: NaiveDate) -> i64 {
    let week = Days::new(7);
    let mut index = 0i64;
    let mut cursor = anchor;
    if date >= anchor {
        while cursor.checked_add_days(week).expect("date range overflow") <= date {
            cursor = cursor.checked_add_days(week).unwrap();
            index += 1;
        }
    } else {
        while cursor > date {
            cursor = cursor.checked_sub_days(week).expect("date range underflow");
            index -= 1;
        }
    }
    index
}

/// One paper as the scoring oracles see it.
#[derive(Debug, Clone)]
pub struct Paper {
    pub id: String,
    pub submitted: NaiveDate,
    pub citations: u64,
}

/// Per-paper z-scores for a single week split, grouping papers by
/// linear scan. A week whose counts have zero spread yields z = 0.
pub fn zscores_one_split(papers: &[Paper], anchor: NaiveDate, population: bool) -> Vec<f64> {
    let weeks: Vec<i64> = papers
        .iter()
        .map(|p| week_index_by_scan(p.submitted, anchor))
        .collect();
    papers
        .iter()
        .enumerate()
        .map(|(i, paper)| {
            let counts: Vec<f64> = papers
                .iter()
                .zip(&weeks)
                .filter(|(_, w)| **w == weeks[i])
                .map(|(p, _)| p.citations as f64)
                .collect();
            let m = mean(&counts);
            let s = if population {
                population_std(&counts)
            } else {
                sample_std(&counts)
            };
            if s == 0.0 {
                0.0
            } else {
                (paper.citations as f64 - m) / s
            }
        })
        .collect()
}

const WEEKDAYS: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

/// Stable z-score per paper: mean minus std of the seven per-split
/// z-scores, with anchors found by scanning back from `epoch`.
pub fn stable_zscores(papers: &[Paper], epoch: NaiveDate, population: bool) -> Vec<f64> {
    let splits: Vec<Vec<f64>> = WEEKDAYS
        .iter()
        .map(|wd| zscores_one_split(papers, anchor_by_scan(epoch, *wd), population))
        .collect();
    (0..papers.len())
        .map(|i| {
            let zs: Vec<f64> = splits.iter().map(|s| s[i]).collect();
            let spread = if population {
                population_std(&zs)
            } else {
                sample_std(&zs)
            };
            mean(&zs) - spread
        })
        .collect()
}

/// Paper ids ranked by score descending, citations descending, id
/// ascending, via a plain sort over index tuples.
pub fn rank_ids(papers: &[Paper], scores: &[f64]) -> Vec<String> {
    let mut order: Vec<usize> = (0..papers.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(papers[b].citations.cmp(&papers[a].citations))
            .then(papers[a].id.cmp(&papers[b].id))
    });
    order.into_iter().map(|i| papers[i].id.clone()).collect()
}

/// Kendall tau-b by enumerating every pair and counting concordant,
/// discordant, and tied pairs directly.
pub fn kendall_tau_pairs(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant) = (0u64, 0u64);
    let (mut tied_x, mut tied_y) = (0u64, 0u64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tied_x += 1;
            }
            if dy == 0.0 {
                tied_y += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if dx * dy > 0.0 {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let denom = ((n0 - tied_x as f64) * (n0 - tied_y as f64)).sqrt();
    (concordant as f64 - discordant as f64) / denom
}

/// Average ranks computed by counting, for each element, how many
/// others are smaller and how many are equal.
pub fn counting_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let smaller = xs.iter().filter(|&&o| o < x).count();
            let equal = xs.iter().filter(|&&o| o == x).count();
            smaller as f64 + 1.0 + (equal as f64 - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson_explicit(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// Spearman rho as Pearson over counting ranks.
pub fn spearman_via_ranks(x: &[f64], y: &[f64]) -> f64 {
    pearson_explicit(&counting_ranks(x), &counting_ranks(y))
}

/// The 1 - 6*sum(d^2)/(n(n^2-1)) shortcut. Only valid without ties.
pub fn spearman_no_ties(x: &[f64], y: &[f64]) -> f64 {
    let rx = counting_ranks(x);
    let ry = counting_ranks(y);
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[allow(clippy::needless_range_loop)]
fn solve_gauss(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &c| m[a][col].abs().total_cmp(&m[c][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    x
}

/// Savitzky-Golay smoothing via per-position least squares: build the
/// Vandermonde matrix for the window around each sample, solve the
/// normal equations by Gaussian elimination, evaluate the fit at the
/// sample itself. Windows near the edges shift inward. For even
/// windows the longer arm points left.
pub fn savgol_normal_equations(values: &[f64], window: usize, degree: usize) -> Vec<f64> {
    let n = values.len();
    assert!(window >= 2 && degree < window && window <= n);
    let left = window / 2;
    (0..n)
        .map(|i| {
            let mut start = i.saturating_sub(left);
            if start + window > n {
                start = n - window;
            }
            let offsets: Vec<f64> = (0..window).map(|j| (start + j) as f64 - i as f64).collect();
            let mut m = vec![vec![0.0; degree + 1]; degree + 1];
            let mut b = vec![0.0; degree + 1];
            for (j, &t) in offsets.iter().enumerate() {
                let powers: Vec<f64> = (0..=degree).map(|p| t.powi(p as i32)).collect();
                for r in 0..=degree {
                    for c in 0..=degree {
                        m[r][c] += powers[r] * powers[c];
                    }
                    b[r] += powers[r] * values[start + j];
                }
            }
            solve_gauss(m, b)[0]
        })
        .collect()
}
