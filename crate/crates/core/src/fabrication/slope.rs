use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::span::DeckSurface;

/// Inclusive index rectangle over slope cells: rows `i0..=i1` along the walk,
/// columns `j0..=j1` across it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlopeRegion {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

/// Walking slopes of a deck, in percent.
///
/// `along[i][j]` is the slope between rows `i` and `i + 1` at column `j`;
/// `cross[i][j]` is the slope between columns `j` and `j + 1` at row `i`.
/// A step with no horizontal extent is reported as `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    pub threshold_pct: f64,
    pub along: Vec<Vec<f64>>,
    pub cross: Vec<Vec<f64>>,
    pub max_slope_pct: f64,
    pub max_cross_slope_pct: f64,
    pub regions: Vec<SlopeRegion>,
}

fn step_slope(a: &Point3, b: &Point3) -> f64 {
    let run = (b.x - a.x).hypot(b.z - a.z);
    let rise = (b.y - a.y).abs();
    if run <= 1e-12 {
        if rise <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * rise / run
    }
}

fn max_of(rows: &[Vec<f64>]) -> f64 {
    rows.iter().flatten().copied().fold(0.0, f64::max)
}

pub fn slope_report(deck: &DeckSurface, threshold_pct: f64) -> Result<SlopeReport> {
    if !(threshold_pct > 0.0 && threshold_pct.is_finite()) {
        return Err(Error::invalid(format!(
            "slope threshold must be positive, got {threshold_pct}"
        )));
    }
    let (n, m) = (deck.rows(), deck.cols());
    let along: Vec<Vec<f64>> = (0..n.saturating_sub(1))
        .map(|i| (0..m).map(|j| step_slope(&deck.at(i, j), &deck.at(i + 1, j))).collect())
        .collect();
    let cross: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..m.saturating_sub(1))
                .map(|j| step_slope(&deck.at(i, j), &deck.at(i, j + 1)))
                .collect()
        })
        .collect();
    let regions = flagged_regions(&along, threshold_pct);
    Ok(SlopeReport {
        threshold_pct,
        max_slope_pct: max_of(&along),
        max_cross_slope_pct: max_of(&cross),
        along,
        cross,
        regions,
    })
}

/// Bounding rectangles of 4-connected components of cells at or above the
/// threshold, in row-major order of their first cell.
fn flagged_regions(cells: &[Vec<f64>], threshold: f64) -> Vec<SlopeRegion> {
    let rows = cells.len();
    let cols = cells.first().map_or(0, Vec::len);
    let mut seen = vec![vec![false; cols]; rows];
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if seen[i][j] || cells[i][j] < threshold {
                continue;
            }
            let mut r = SlopeRegion { i0: i, i1: i, j0: j, j1: j };
            let mut stack = vec![(i, j)];
            seen[i][j] = true;
            while let Some((a, b)) = stack.pop() {
                r.i0 = r.i0.min(a);
                r.i1 = r.i1.max(a);
                r.j0 = r.j0.min(b);
                r.j1 = r.j1.max(b);
                let mut push = |x: usize, y: usize| {
                    if !seen[x][y] && cells[x][y] >= threshold {
                        seen[x][y] = true;
                        stack.push((x, y));
                    }
                };
                if a > 0 {
                    push(a - 1, b);
                }
                if a + 1 < rows {
                    push(a + 1, b);
                }
                if b > 0 {
                    push(a, b - 1);
                }
                if b + 1 < cols {
                    push(a, b + 1);
                }
            }
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, m: usize, f: impl Fn(f64, f64) -> Point3) -> DeckSurface {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..m {
                pts.push(f(i as f64 / (n - 1) as f64, j as f64 / (m - 1) as f64));
            }
        }
        DeckSurface::from_grid(n, m, pts).unwrap()
    }

    #[test]
    fn flat_deck_is_zero() {
        let d = grid(5, 3, |u, v| Point3::new(v, 0.0, 4.0 * u));
        let r = slope_report(&d, 50.0).unwrap();
        assert_eq!(r.max_slope_pct, 0.0);
        assert!(r.regions.is_empty());
    }

    #[test]
    fn ramp_one_over_two_is_fifty_percent() {
        let d = grid(9, 4, |u, v| Point3::new(v, u, 2.0 * u));
        let r = slope_report(&d, 50.0).unwrap();
        for s in r.along.iter().flatten() {
            assert!((s - 50.0).abs() < 1e-9);
        }
        assert_eq!(r.max_cross_slope_pct, 0.0);
        assert_eq!(r.regions, vec![SlopeRegion { i0: 0, i1: 7, j0: 0, j1: 3 }]);
    }

    #[test]
    fn vertical_step_is_infinite() {
        let d = grid(3, 2, |u, v| Point3::new(v, u, 0.0));
        let r = slope_report(&d, 10.0).unwrap();
        assert!(r.max_slope_pct.is_infinite());
    }

    #[test]
    fn separate_components() {
        let cells = vec![vec![60.0, 0.0, 70.0], vec![0.0, 0.0, 80.0]];
        let r = flagged_regions(&cells, 50.0);
        assert_eq!(
            r,
            vec![
                SlopeRegion { i0: 0, i1: 0, j0: 0, j1: 0 },
                SlopeRegion { i0: 0, i1: 1, j0: 2, j1: 2 }
            ]
        );
    }

    #[test]
    fn rejects_bad_threshold() {
        let d = grid(2, 2, |u, v| Point3::new(v, 0.0, u));
        assert!(slope_report(&d, 0.0).is_err());
    }
}
