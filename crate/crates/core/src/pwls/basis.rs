use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mesh::Point;

/// `p` equispaced unit propagation directions starting at `(1, 0)`.
pub fn directions(p: usize) -> Result<Vec<Point>> {
    if p < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 plane-wave directions, got {p}")));
    }
    Ok((0..p)
        .map(|l| {
            let t = 2.0 * PI * l as f64 / p as f64;
            [t.cos(), t.sin()]
        })
        .collect())
}

/// Plane-wave trial space: on element `m` the `p` functions
/// `exp(i κ_m α_l·x)`, dof index `m·p + l`.
#[derive(Debug, Clone)]
pub struct PlaneWaveSpace {
    pub p: usize,
    pub dirs: Vec<Point>,
    pub kappa: Vec<f64>,
}

impl PlaneWaveSpace {
    pub fn new(p: usize, kappa: Vec<f64>) -> Result<Self> {
        if let Some(k) = kappa.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidInput(format!("wave numbers must be positive, got {k}")));
        }
        Ok(Self {
            p,
            dirs: directions(p)?,
            kappa,
        })
    }

    /// Constant wave number `omega / c` on `n_elements` elements.
    pub fn uniform(p: usize, n_elements: usize, kappa: f64) -> Result<Self> {
        Self::new(p, vec![kappa; n_elements])
    }

    pub fn n_elements(&self) -> usize {
        self.kappa.len()
    }

    pub fn dim(&self) -> usize {
        self.p * self.kappa.len()
    }

    pub fn dof(&self, m: usize, l: usize) -> usize {
        m * self.p + l
    }

    pub fn wavevector(&self, m: usize, l: usize) -> Point {
        let k = self.kappa[m];
        [k * self.dirs[l][0], k * self.dirs[l][1]]
    }

    pub fn eval(&self, m: usize, l: usize, x: Point) -> C64 {
        let k = self.wavevector(m, l);
        C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1])
    }

    /// Dof indices of a list of elements, element-major.
    pub fn dofs_of(&self, elements: &[usize]) -> Vec<usize> {
        elements
            .iter()
            .flat_map(|&m| (0..self.p).map(move |l| m * self.p + l))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns() {
        let d = directions(4).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (a, b) in d.iter().zip(want.iter()) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_and_distinct() {
        for p in 3..20 {
            let d = directions(p).unwrap();
            for (i, a) in d.iter().enumerate() {
                assert!(((a[0] * a[0] + a[1] * a[1]).sqrt() - 1.0).abs() < 1e-15);
                for b in &d[i + 1..] {
                    assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() > 1e-3);
                }
            }
        }
        let d = directions(13).unwrap();
        assert_eq!(d[1], [(2.0 * PI / 13.0).cos(), (2.0 * PI / 13.0).sin()]);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(directions(2).is_err());
        assert!(PlaneWaveSpace::new(4, vec![1.0, 0.0]).is_err());
    }
}
