use serde::{Deserialize, Serialize};

use super::PdeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridBoundary {
    #[default]
    Periodic,
    /// Walls with zero mass and energy flux; the wall pushes back with the adjacent pressure.
    Reflecting,
}

/// Uniform cell-centred grid in 1 to 3 dimensions. Inactive dimensions have count 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub counts: [usize; 3],
    pub dims: usize,
    /// Cell size `h` (cm).
    pub spacing: f64,
    pub boundary: GridBoundary,
}

impl Grid {
    pub fn new(counts: &[usize], spacing: f64, boundary: GridBoundary) -> Result<Self, PdeError> {
        if counts.is_empty() || counts.len() > 3 {
            return Err(PdeError::Grid(format!("need 1 to 3 dimensions, got {}", counts.len())));
        }
        if let Some(&c) = counts.iter().find(|&&c| c < 4) {
            return Err(PdeError::Grid(format!("at least 4 cells per axis, got {c}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(PdeError::Grid(format!("spacing must be positive, got {spacing:e}")));
        }
        let mut c = [1; 3];
        c[..counts.len()].copy_from_slice(counts);
        Ok(Self {
            counts: c,
            dims: counts.len(),
            spacing,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^dims`, the measure used for totals.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dims as i32)
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.counts[0] * (c[1] + self.counts[1] * c[2])
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        let x = i % self.counts[0];
        let r = i / self.counts[0];
        [x, r % self.counts[1], r / self.counts[1]]
    }

    pub fn center(&self, i: usize) -> [f64; 3] {
        self.coords(i).map(|c| (c as f64 + 0.5) * self.spacing)
    }

    pub fn centers(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    /// Neighbour one cell along `axis` in direction `dir` (±1), or `None` past a wall.
    pub fn neighbor(&self, i: usize, axis: usize, dir: isize) -> Option<usize> {
        let mut c = self.coords(i);
        let n = self.counts[axis] as isize;
        let t = c[axis] as isize + dir;
        let t = match self.boundary {
            GridBoundary::Periodic => t.rem_euclid(n),
            GridBoundary::Reflecting => {
                if t < 0 || t >= n {
                    return None;
                }
                t
            }
        };
        c[axis] = t as usize;
        Some(self.index(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(Grid::new(&[3], 1.0, GridBoundary::Periodic).is_err());
        assert!(Grid::new(&[8], 0.0, GridBoundary::Periodic).is_err());
        assert!(Grid::new(&[], 1.0, GridBoundary::Periodic).is_err());
        let g = Grid::new(&[4, 5], 0.5, GridBoundary::Reflecting).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g.cell_volume(), 0.25);
    }

    #[test]
    fn neighbours_wrap_or_stop() {
        let p = Grid::new(&[4, 4], 1.0, GridBoundary::Periodic).unwrap();
        assert_eq!(p.neighbor(0, 0, -1), Some(3));
        assert_eq!(p.neighbor(0, 1, -1), Some(12));
        let r = Grid::new(&[4, 4], 1.0, GridBoundary::Reflecting).unwrap();
        assert_eq!(r.neighbor(0, 0, -1), None);
        assert_eq!(r.neighbor(3, 0, 1), None);
        assert_eq!(r.neighbor(5, 1, 1), Some(9));
        assert_eq!(r.center(5), [1.5, 1.5, 0.5]);
    }
}
