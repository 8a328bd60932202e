use crate::error::{Result, SpotError};

use super::{BodyRect, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyConfig {
    /// Minimum share of numeric-or-blank cells inside the rectangle.
    pub min_density: f64,
}

impl Default for BodyConfig {
    fn default() -> Self {
        BodyConfig { min_density: 0.6 }
    }
}

pub fn detect_body_rect(grid: &Grid) -> Result<BodyRect> {
    detect_body_rect_with(grid, &BodyConfig::default())
}

fn density_ok(ok: usize, area: usize, min_density: f64) -> bool {
    ok as f64 / area as f64 >= min_density - 1e-12
}

/// Largest axis-aligned rectangle such that
/// - at least `min_density` of its cells are numeric or blank,
/// - every column holds at least one numeric cell,
/// - its top and bottom rows each hold at least one numeric cell.
///
/// Ties go to the smaller top, then left, then bottom.
pub fn detect_body_rect_with(grid: &Grid, cfg: &BodyConfig) -> Result<BodyRect> {
    let (rows, cols) = (grid.n_rows, grid.n_cols);
    let numeric: Vec<Vec<bool>> = grid
        .cells
        .iter()
        .map(|r| r.iter().map(|c| c.is_numeric).collect())
        .collect();
    if !numeric.iter().flatten().any(|&n| n) {
        return Err(SpotError::NoBody(grid.table_id.clone()));
    }
    // ok_prefix[r+1][c+1]: numeric-or-blank count in [0..=r] x [0..=c].
    let mut ok_prefix = vec![vec![0usize; cols + 1]; rows + 1];
    // row_num_prefix[r][c+1]: numeric count in row r, cols [0..=c].
    let mut row_num_prefix = vec![vec![0usize; cols + 1]; rows];
    for r in 0..rows {
        for c in 0..cols {
            let cell = &grid.cells[r][c];
            let ok = (cell.is_numeric || cell.is_blank()) as usize;
            ok_prefix[r + 1][c + 1] = ok_prefix[r][c + 1] + ok_prefix[r + 1][c] - ok_prefix[r][c] + ok;
            row_num_prefix[r][c + 1] = row_num_prefix[r][c] + numeric[r][c] as usize;
        }
    }
    let ok_in = |t: usize, l: usize, b: usize, r: usize| {
        ok_prefix[b + 1][r + 1] + ok_prefix[t][l] - ok_prefix[t][r + 1] - ok_prefix[b + 1][l]
    };
    let row_has_numeric = |row: usize, l: usize, r: usize| row_num_prefix[row][r + 1] > row_num_prefix[row][l];

    let mut best: Option<(usize, BodyRect)> = None;
    for top in 0..rows {
        let mut col_numeric = vec![0usize; cols];
        for bottom in top..rows {
            for c in 0..cols {
                col_numeric[c] += numeric[bottom][c] as usize;
            }
            for left in 0..cols {
                for right in left..cols {
                    if col_numeric[right] == 0 {
                        break;
                    }
                    if !row_has_numeric(top, left, right) || !row_has_numeric(bottom, left, right) {
                        continue;
                    }
                    let area = (bottom - top + 1) * (right - left + 1);
                    if let Some((best_area, b)) = best {
                        if area < best_area || (area == best_area && (top, left, bottom) >= (b.top, b.left, b.bottom)) {
                            continue;
                        }
                    }
                    if density_ok(ok_in(top, left, bottom, right), area, cfg.min_density) {
                        best = Some((area, BodyRect::new(top, left, bottom, right)));
                    }
                }
            }
        }
    }
    best.map(|(_, rect)| rect)
        .ok_or_else(|| SpotError::NoBody(grid.table_id.clone()))
}

/// Exhaustive reference search over all rectangles, counting cells
/// directly. Used as the oracle for [`detect_body_rect_with`].
pub fn brute_force_body_rect(grid: &Grid, cfg: &BodyConfig) -> Option<BodyRect> {
    let mut best: Option<BodyRect> = None;
    let better = |cand: &BodyRect, cur: &BodyRect| {
        (std::cmp::Reverse(cand.area()), cand.top, cand.left, cand.bottom)
            < (std::cmp::Reverse(cur.area()), cur.top, cur.left, cur.bottom)
    };
    for top in 0..grid.n_rows {
        for bottom in top..grid.n_rows {
            for left in 0..grid.n_cols {
                for right in left..grid.n_cols {
                    let rect = BodyRect::new(top, left, bottom, right);
                    let mut ok = 0;
                    for r in rect.rows() {
                        for c in rect.cols() {
                            let cell = &grid.cells[r][c];
                            if cell.is_numeric || cell.is_blank() {
                                ok += 1;
                            }
                        }
                    }
                    let cols_ok = rect.cols().all(|c| rect.rows().any(|r| grid.cells[r][c].is_numeric));
                    let edge = |r: usize| rect.cols().any(|c| grid.cells[r][c].is_numeric);
                    if !cols_ok || !edge(top) || !edge(bottom) {
                        continue;
                    }
                    if !density_ok(ok, rect.area(), cfg.min_density) {
                        continue;
                    }
                    if best.as_ref().map_or(true, |b| better(&rect, b)) {
                        best = Some(rect);
                    }
                }
            }
        }
    }
    best
}
