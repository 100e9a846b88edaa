// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Level contours of a rectilinear grid by marching squares with linear
//! interpolation along cell edges.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// A connected piece of a contour as `(x, y)` vertices.
pub type Polyline = Vec<(f64, f64)>;

/// Edge identifier: (row, col, horizontal?) of the cell edge a crossing lies on.
type EdgeId = (usize, usize, bool);

/// Extracts the `level` contour of `values[row][col]` sampled at
/// `(xs[col], ys[row])`.
///
/// Saddle cells are disambiguated by the mean of their four corners. Segments
/// sharing an edge crossing are chained into polylines; closed contours repeat
/// their first vertex at the end.
pub fn contour_lines(xs: &[f64], ys: &[f64], values: &[Vec<f64>], level: f64) -> Vec<Polyline> {
    if xs.len() < 2 || ys.len() < 2 || values.len() != ys.len() {
        return Vec::new();
    }
    let above = |r: usize, c: usize| values[r][c] >= level;
    let point = |e: EdgeId| -> (f64, f64) {
        let (r, c, horizontal) = e;
        let (r2, c2) = if horizontal { (r, c + 1) } else { (r + 1, c) };
        let (v1, v2) = (values[r][c], values[r2][c2]);
        let t = if v2 == v1 { 0.5 } else { (level - v1) / (v2 - v1) };
        let x = xs[c] + t * (xs[c2] - xs[c]);
        let y = ys[r] + t * (ys[r2] - ys[r]);
        (x, y)
    };

    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for r in 0..ys.len() - 1 {
        for c in 0..xs.len() - 1 {
            // Corners counter-clockwise from (r, c).
            let idx = (above(r, c) as u8)
                | (above(r, c + 1) as u8) << 1
                | (above(r + 1, c + 1) as u8) << 2
                | (above(r + 1, c) as u8) << 3;
            let bottom = (r, c, true);
            let right = (r, c + 1, false);
            let top = (r + 1, c, true);
            let left = (r, c, false);
            let mean = 0.25 * (values[r][c] + values[r][c + 1] + values[r + 1][c] + values[r + 1][c + 1]);
            match idx {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if mean >= level {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if mean >= level {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // Chain segments through shared edge crossings.
    let mut incident: BTreeMap<EdgeId, Vec<usize>> = BTreeMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(i);
        incident.entry(*b).or_default().push(i);
    }
    let mut used = alloc::vec![false; segments.len()];
    let mut lines = Vec::new();
    let other_end = |seg: usize, from: EdgeId| {
        let (a, b) = segments[seg];
        if a == from {
            b
        } else {
            a
        }
    };
    let walk = |start_seg: usize, start: EdgeId, used: &mut Vec<bool>| -> Vec<EdgeId> {
        let mut chain = alloc::vec![start];
        let mut seg = start_seg;
        let mut at = start;
        loop {
            used[seg] = true;
            at = other_end(seg, at);
            chain.push(at);
            match incident[&at].iter().copied().find(|&s| !used[s]) {
                Some(next) => seg = next,
                None => break,
            }
        }
        chain
    };
    // Open chains first start from their endpoints (edges touched once).
    for (&edge, segs) in &incident {
        if segs.len() == 1 && !used[segs[0]] {
            let chain = walk(segs[0], edge, &mut used);
            lines.push(chain.into_iter().map(point).collect());
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            let chain = walk(i, segments[i].0, &mut used);
            lines.push(chain.into_iter().map(point).collect());
        }
    }
    lines
}
