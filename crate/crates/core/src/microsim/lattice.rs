use serde::{Deserialize, Serialize};

use super::MicroError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LatticeBoundary {
    #[default]
    Periodic,
    /// Hops that would leave the lattice are not made.
    Closed,
}

/// A box of sites in 1 to 3 dimensions. Inactive dimensions have count 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub counts: [usize; 3],
    pub dims: usize,
    pub boundary: LatticeBoundary,
}

impl Lattice {
    pub fn new(counts: &[usize], boundary: LatticeBoundary) -> Result<Self, MicroError> {
        if counts.is_empty() || counts.len() > 3 {
            return Err(MicroError::Lattice(format!(
                "need 1 to 3 dimensions, got {}",
                counts.len()
            )));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(MicroError::Lattice("zero sites along an axis".into()));
        }
        let mut c = [1; 3];
        c[..counts.len()].copy_from_slice(counts);
        Ok(Self {
            counts: c,
            dims: counts.len(),
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.counts[0] * (c[1] + self.counts[1] * c[2])
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        let x = i % self.counts[0];
        let r = i / self.counts[0];
        [x, r % self.counts[1], r / self.counts[1]]
    }

    /// Site reached by moving `steps` sites along `axis`, or `None` if it leaves a closed lattice.
    pub fn neighbor(&self, i: usize, axis: usize, steps: isize) -> Option<usize> {
        let mut c = self.coords(i);
        let n = self.counts[axis] as isize;
        let t = c[axis] as isize + steps;
        let t = match self.boundary {
            LatticeBoundary::Periodic => t.rem_euclid(n),
            LatticeBoundary::Closed => {
                if t < 0 || t >= n {
                    return None;
                }
                t
            }
        };
        c[axis] = t as usize;
        Some(self.index(c))
    }

    /// Centre of site `i` for spacing `a`: `(c + 1/2) a`.
    pub fn position(&self, i: usize, a: f64) -> [f64; 3] {
        self.coords(i).map(|c| (c as f64 + 0.5) * a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum SiteState {
    #[default]
    Hole,
    /// Momentum of the particle at the site (g·cm/s).
    Particle([f64; 3]),
}

impl SiteState {
    pub fn momentum(&self) -> Option<&[f64; 3]> {
        match self {
            SiteState::Hole => None,
            SiteState::Particle(k) => Some(k),
        }
    }

    pub fn is_occupied(&self) -> bool {
        matches!(self, SiteState::Particle(_))
    }
}

/// One microstate of the whole lattice.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Configuration {
    pub sites: Vec<SiteState>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Self {
            sites: vec![SiteState::Hole; n],
        }
    }

    pub fn particles(&self) -> usize {
        self.sites.iter().filter(|s| s.is_occupied()).count()
    }

    /// Total energy `sum (|k|²/(2m) + Phi)` over occupied sites.
    pub fn energy(&self, phi: &[f64], m: f64) -> f64 {
        self.sites
            .iter()
            .zip(phi)
            .map(|(s, p)| match s {
                SiteState::Hole => 0.0,
                SiteState::Particle(k) => (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) / (2.0 * m) + p,
            })
            .sum()
    }

    pub fn momentum(&self) -> [f64; 3] {
        let mut w = [0.0; 3];
        for k in self.sites.iter().filter_map(|s| s.momentum()) {
            for i in 0..3 {
                w[i] += k[i];
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_neighbors() {
        let l = Lattice::new(&[4, 3, 2], LatticeBoundary::Periodic).unwrap();
        for i in 0..l.len() {
            assert_eq!(l.index(l.coords(i)), i);
        }
        assert_eq!(l.neighbor(0, 0, -1), Some(3));
        assert_eq!(l.neighbor(0, 1, 4), Some(l.index([0, 1, 0])));
        let c = Lattice::new(&[4], LatticeBoundary::Closed).unwrap();
        assert_eq!(c.neighbor(0, 0, -1), None);
        assert_eq!(c.neighbor(3, 0, 1), None);
        assert_eq!(c.neighbor(1, 0, 2), Some(3));
    }

    #[test]
    fn bad_lattices_rejected() {
        assert!(Lattice::new(&[], LatticeBoundary::Periodic).is_err());
        assert!(Lattice::new(&[3, 0], LatticeBoundary::Periodic).is_err());
        assert!(Lattice::new(&[1, 1, 1, 1], LatticeBoundary::Periodic).is_err());
    }
}
