//! Grids that follow a density's support under a map.

use crate::error::{invalid, Result};
use crate::kvn::GridSpec;

const MAX_NODES: usize = 1 << 22;

/// Flat indices of the nodes on the faces of `grid`.
pub(crate) fn boundary_nodes(grid: &GridSpec) -> Vec<usize> {
    let mut idx = vec![0usize; grid.dims()];
    (0..grid.len())
        .filter(|&i| {
            grid.multi_index(i, &mut idx);
            idx.iter().zip(grid.shape()).any(|(&j, &n)| j == 0 || j + 1 == n)
        })
        .collect()
}

/// Grid with the spacing of `base` covering the bounding box of `image`
/// (packed points), padded by two cells per side.
pub(crate) fn tracking_grid(base: &GridSpec, image: &[Vec<f64>]) -> Result<GridSpec> {
    let d = base.dims();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for z in image {
        for k in 0..d {
            lo[k] = lo[k].min(z[k]);
            hi[k] = hi[k].max(z[k]);
        }
    }
    let mut n = vec![0usize; d];
    for k in 0..d {
        if !(lo[k].is_finite() && hi[k].is_finite()) {
            return Err(invalid("support", "image of the grid boundary is not finite"));
        }
        let h = base.spacing(k);
        let cells = ((hi[k] - lo[k]) / h).ceil().max(3.0) as usize + 4;
        let centre = 0.5 * (lo[k] + hi[k]);
        lo[k] = centre - 0.5 * cells as f64 * h;
        hi[k] = centre + 0.5 * cells as f64 * h;
        n[k] = cells + 1;
    }
    let total = n.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m)).unwrap_or(usize::MAX);
    if total > MAX_NODES {
        return Err(invalid("support", format!("tracking grid needs {total} nodes (limit {MAX_NODES})")));
    }
    GridSpec::new(lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_of_square() {
        let g = GridSpec::plane((0.0, 1.0), (0.0, 1.0), 5, 6).unwrap();
        assert_eq!(boundary_nodes(&g).len(), 5 * 6 - 3 * 4);
    }

    #[test]
    fn tracking_keeps_spacing_and_covers() {
        let g = GridSpec::plane((0.0, 1.0), (0.0, 2.0), 11, 21).unwrap();
        let pts = vec![vec![3.0, -1.0], vec![5.5, 0.5]];
        let t = tracking_grid(&g, &pts).unwrap();
        assert!((t.spacing(0) - 0.1).abs() < 1e-12 && (t.spacing(1) - 0.1).abs() < 1e-12);
        assert!(t.lo()[0] < 3.0 && t.hi()[0] > 5.5 && t.lo()[1] < -1.0 && t.hi()[1] > 0.5);
    }
}
