use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::mesh::{Point, Rect, RectMesh};
use crate::pwls::moments::cell_moment;
use crate::pwls::PlaneWaveSpace;

const I: C64 = C64::new(0.0, 1.0);

/// Benchmark problem family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    /// Constant medium on (0,2)×(0,1) with a closed-form solution.
    #[default]
    Constant,
    /// Three horizontal layers on (0,7200)×(0,3600).
    Layered,
    /// Per-element random wave speed on (0,7200)×(0,3600).
    Random,
}

impl std::str::FromStr for Example {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" | "1" => Ok(Example::Constant),
            "layered" | "2" => Ok(Example::Layered),
            "random" | "3" => Ok(Example::Random),
            other => Err(Error::InvalidInput(format!("unknown example '{other}'"))),
        }
    }
}

/// Wave speed field.
#[derive(Debug, Clone, PartialEq)]
pub enum Speed {
    Constant(f64),
    /// Speeds on consecutive horizontal bands `[y_i, y_{i+1})`.
    Layers { bounds: Vec<f64>, speeds: Vec<f64> },
    /// Uniform draw per element from `[lo, hi]`, in element order, from a
    /// ChaCha8 stream seeded with `seed`.
    Random { lo: f64, hi: f64, seed: u64 },
}

/// Superposition `Σ_q a_q exp(i k_q·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSum {
    pub terms: Vec<(C64, Point)>,
}

impl WaveSum {
    pub fn eval(&self, x: Point) -> C64 {
        self.terms.iter().map(|(a, k)| a * C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1])).sum()
    }

    pub fn grad(&self, x: Point) -> [C64; 2] {
        let mut g = [C64::new(0.0, 0.0); 2];
        for (a, k) in &self.terms {
            let e = a * I * C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]);
            g[0] += e * k[0];
            g[1] += e * k[1];
        }
        g
    }

    /// `−Δu − ω² u`.
    pub fn helmholtz_residual(&self, x: Point, omega: f64) -> C64 {
        self.terms
            .iter()
            .map(|(a, k)| a * (k[0] * k[0] + k[1] * k[1] - omega * omega) * C64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub example: Example,
    pub domain: Rect,
    pub omega: f64,
    pub speed: Speed,
    pub exact: Option<WaveSum>,
}

/// Coefficients of the constant-medium solution from its 2×2 system.
pub fn constant_coefficients(omega: f64) -> Result<(f64, C64, C64)> {
    let ky = 12.0 * PI;
    if omega <= ky {
        return Err(Error::InvalidInput(format!("need omega > 12π, got {omega}")));
    }
    let wx = (omega * omega - ky * ky).sqrt();
    // [wx, -wx; (ω-wx) e^{-2i wx}, (ω+wx) e^{2i wx}] (A1, A2) = (-i, 0)
    let m11 = C64::new(wx, 0.0);
    let m12 = C64::new(-wx, 0.0);
    let m21 = (omega - wx) * C64::from_polar(1.0, -2.0 * wx);
    let m22 = (omega + wx) * C64::from_polar(1.0, 2.0 * wx);
    let det = m11 * m22 - m12 * m21;
    let a1 = (-I * m22) / det;
    let a2 = (I * m21) / det;
    Ok((wx, a1, a2))
}

pub fn example_constant(omega: f64) -> Result<ProblemSpec> {
    let (wx, a1, a2) = constant_coefficients(omega)?;
    let ky = 12.0 * PI;
    // cos(12πy) = (e^{i ky y} + e^{-i ky y}) / 2
    let terms = vec![
        (a1 * 0.5, [-wx, ky]),
        (a1 * 0.5, [-wx, -ky]),
        (a2 * 0.5, [wx, ky]),
        (a2 * 0.5, [wx, -ky]),
    ];
    Ok(ProblemSpec {
        example: Example::Constant,
        domain: Rect::new(0.0, 0.0, 2.0, 1.0),
        omega,
        speed: Speed::Constant(1.0),
        exact: Some(WaveSum { terms }),
    })
}

pub fn example_layered(omega: f64) -> ProblemSpec {
    ProblemSpec {
        example: Example::Layered,
        domain: Rect::new(0.0, 0.0, 7200.0, 3600.0),
        omega,
        speed: Speed::Layers {
            bounds: vec![0.0, 1200.0, 2400.0, 3600.0],
            speeds: vec![1800.0, 3600.0, 5400.0],
        },
        exact: None,
    }
}

pub fn example_random(omega: f64, seed: u64) -> ProblemSpec {
    ProblemSpec {
        example: Example::Random,
        domain: Rect::new(0.0, 0.0, 7200.0, 3600.0),
        omega,
        speed: Speed::Random {
            lo: 1500.0,
            hi: 5500.0,
            seed,
        },
        exact: None,
    }
}

impl ProblemSpec {
    pub fn new(example: Example, omega: f64, seed: u64) -> Result<Self> {
        match example {
            Example::Constant => example_constant(omega),
            Example::Layered => Ok(example_layered(omega)),
            Example::Random => Ok(example_random(omega, seed)),
        }
    }

    /// Wave speed at a point (not defined for the random field).
    pub fn speed_at(&self, x: Point) -> Option<f64> {
        match &self.speed {
            Speed::Constant(c) => Some(*c),
            Speed::Layers { bounds, speeds } => {
                let i = bounds[1..bounds.len() - 1].iter().take_while(|&&b| x[1] >= b).count();
                Some(speeds[i])
            }
            Speed::Random { .. } => None,
        }
    }

    /// Wave speed of every element (layers sampled at element centres).
    pub fn element_speeds(&self, mesh: &RectMesh) -> Vec<f64> {
        match &self.speed {
            Speed::Random { lo, hi, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..mesh.n_elements()).map(|_| rng.random_range(*lo..=*hi)).collect()
            }
            Speed::Layers { bounds, .. } => {
                for b in &bounds[1..bounds.len() - 1] {
                    let rows = (b - mesh.domain.y0) / mesh.hy;
                    if (rows - rows.round()).abs() > 1e-9 {
                        log::warn!("layer boundary y = {b} cuts through element row {}", rows.floor());
                    }
                }
                (0..mesh.n_elements())
                    .map(|m| self.speed_at(mesh.element_center(m)).unwrap_or(1.0))
                    .collect()
            }
            Speed::Constant(c) => vec![*c; mesh.n_elements()],
        }
    }

    pub fn space(&self, mesh: &RectMesh, p: usize) -> Result<PlaneWaveSpace> {
        let kappa = self.element_speeds(mesh).into_iter().map(|c| self.omega / c).collect();
        PlaneWaveSpace::new(p, kappa)
    }

    /// Robin datum `g` at a boundary point with outward normal `n`.
    pub fn boundary_data(&self, x: Point, normal: Point) -> C64 {
        match &self.exact {
            Some(u) => {
                let g = u.grad(x);
                g[0] * normal[0] + g[1] * normal[1] + I * self.omega * u.eval(x)
            }
            None => C64::new(x[0] * x[0] + x[1] * x[1], 0.0),
        }
    }
}

/// Outward unit normal of the domain at a boundary point.
pub fn outward_normal(domain: &Rect, x: Point) -> Point {
    let d = [
        ((x[0] - domain.x0).abs(), [-1.0, 0.0]),
        ((x[0] - domain.x1).abs(), [1.0, 0.0]),
        ((x[1] - domain.y0).abs(), [0.0, -1.0]),
        ((x[1] - domain.y1).abs(), [0.0, 1.0]),
    ];
    d.iter().min_by(|a, b| a.0.total_cmp(&b.0)).map(|e| e.1).unwrap()
}

/// `‖u_ex − u_h‖ / ‖u_ex‖` in L², with every product term integrated by
/// closed-form cell moments.
pub fn relative_l2_error(coef: &crate::linalg::CVec, exact: Option<&WaveSum>, mesh: &RectMesh, space: &PlaneWaveSpace) -> Result<f64> {
    let exact = exact.ok_or(Error::NoExactSolution)?;
    let mut err = 0.0;
    let mut norm = 0.0;
    let mut waves: Vec<(C64, Point)> = Vec::with_capacity(space.p + exact.terms.len());
    for m in 0..mesh.n_elements() {
        let rect = mesh.element_rect(m);
        waves.clear();
        waves.extend(exact.terms.iter().copied());
        let ne = waves.len();
        for l in 0..space.p {
            waves.push((-coef[space.dof(m, l)], space.wavevector(m, l)));
        }
        for (i, (ai, ki)) in waves.iter().enumerate() {
            for (j, (aj, kj)) in waves.iter().enumerate() {
                let t = ai * aj.conj() * cell_moment(&rect, [ki[0] - kj[0], ki[1] - kj[1]]);
                err += t.re;
                if i < ne && j < ne {
                    norm += t.re;
                }
            }
        }
    }
    Ok((err.max(0.0) / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwls::moments::gauss_legendre;

    #[test]
    fn frequency_and_coefficients() {
        let (wx, a1, a2) = constant_coefficients(20.0 * PI).unwrap();
        assert!((wx - 16.0 * PI).abs() < 1e-12);
        let r1 = wx * a1 - wx * a2 + I;
        let r2 = (20.0 * PI - wx) * C64::from_polar(1.0, -2.0 * wx) * a1 + (20.0 * PI + wx) * C64::from_polar(1.0, 2.0 * wx) * a2;
        assert!(r1.norm() < 1e-14 && r2.norm() < 1e-14);
        assert!(example_constant(12.0 * PI).is_err());
    }

    #[test]
    fn exact_solution_solves_helmholtz_and_robin_data_is_consistent() {
        let omega = 20.0 * PI;
        let problem = example_constant(omega).unwrap();
        let u = problem.exact.as_ref().unwrap();
        let (wx, a1, a2) = constant_coefficients(omega).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = [rng.random_range(0.0..2.0), rng.random_range(0.0..1.0)];
            let closed = (12.0 * PI * x[1]).cos() * (a1 * C64::from_polar(1.0, -wx * x[0]) + a2 * C64::from_polar(1.0, wx * x[0]));
            assert!((u.eval(x) - closed).norm() < 1e-12 * closed.norm().max(1e-3));
            // second derivatives by the product rule on the closed form
            let fx = a1 * C64::from_polar(1.0, -wx * x[0]) + a2 * C64::from_polar(1.0, wx * x[0]);
            let lap = -(12.0 * PI).powi(2) * (12.0 * PI * x[1]).cos() * fx - wx * wx * (12.0 * PI * x[1]).cos() * fx;
            let res = -lap - omega * omega * closed;
            assert!(res.norm() < 1e-9 * closed.norm().max(1.0));
            assert!(u.helmholtz_residual(x, omega).norm() < 1e-9 * closed.norm().max(1.0));
        }
        // g on x = 0: −∂_x u + iω u
        let y = 0.3;
        let dx = (12.0 * PI * y).cos() * (-I * wx * a1 + I * wx * a2);
        let want = -dx + I * omega * u.eval([0.0, y]);
        assert!((problem.boundary_data([0.0, y], [-1.0, 0.0]) - want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn layered_speeds() {
        let problem = example_layered(20.0 * PI);
        assert_eq!(problem.speed_at([100.0, 100.0]), Some(1800.0));
        assert_eq!(problem.speed_at([100.0, 1300.0]), Some(3600.0));
        assert_eq!(problem.speed_at([100.0, 2500.0]), Some(5400.0));
        let mesh = RectMesh::new(problem.domain, 6, 6).unwrap();
        let space = problem.space(&mesh, 4).unwrap();
        assert!((space.kappa[0] - 20.0 * PI / 1800.0).abs() < 1e-15);
        assert!((space.kappa[35] - 20.0 * PI / 5400.0).abs() < 1e-15);
    }

    #[test]
    fn random_speeds_are_reproducible() {
        let problem = example_random(20.0 * PI, 42);
        let mesh = RectMesh::new(problem.domain, 100, 100).unwrap();
        let a = problem.element_speeds(&mesh);
        let b = example_random(20.0 * PI, 42).element_speeds(&mesh);
        assert_eq!(a, b);
        assert!(a.iter().all(|&c| (1500.0..=5500.0).contains(&c)));
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((mean - 3500.0).abs() < 100.0);
        assert_ne!(a, example_random(20.0 * PI, 43).element_speeds(&mesh));
    }

    #[test]
    fn error_zero_for_exact_basis_wave() {
        let mesh = RectMesh::new(Rect::new(0.0, 0.0, 0.5, 0.5), 1, 1).unwrap();
        let space = PlaneWaveSpace::uniform(6, 1, 10.0).unwrap();
        let k = space.wavevector(0, 2);
        let exact = WaveSum {
            terms: vec![(C64::new(0.7, -0.2), k)],
        };
        let mut coef = crate::linalg::CVec::zeros(6);
        coef[2] = C64::new(0.7, -0.2);
        assert!(relative_l2_error(&coef, Some(&exact), &mesh, &space).unwrap() < 1e-7);
        assert!(matches!(relative_l2_error(&coef, None, &mesh, &space), Err(Error::NoExactSolution)));
    }

    #[test]
    fn error_matches_tensor_quadrature() {
        let problem = example_constant(20.0 * PI).unwrap();
        let mesh = RectMesh::new(problem.domain, 4, 3).unwrap();
        let space = problem.space(&mesh, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let coef = crate::linalg::CVec::from_shape_fn(space.dim(), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let got = relative_l2_error(&coef, problem.exact.as_ref(), &mesh, &space).unwrap();
        let (x, w) = gauss_legendre(32);
        let u = problem.exact.as_ref().unwrap();
        let (mut e2, mut n2) = (0.0, 0.0);
        for m in 0..mesh.n_elements() {
            let r = mesh.element_rect(m);
            for i in 0..32 {
                for j in 0..32 {
                    let p = [r.x0 + 0.5 * (x[i] + 1.0) * r.width(), r.y0 + 0.5 * (x[j] + 1.0) * r.height()];
                    let wt = 0.25 * w[i] * w[j] * r.area();
                    let uh: C64 = (0..space.p).map(|l| coef[space.dof(m, l)] * space.eval(m, l, p)).sum();
                    let ue = u.eval(p);
                    e2 += wt * (ue - uh).norm_sqr();
                    n2 += wt * ue.norm_sqr();
                }
            }
        }
        let want = (e2 / n2).sqrt();
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn normals_point_outward() {
        let d = Rect::new(0.0, 0.0, 2.0, 1.0);
        assert_eq!(outward_normal(&d, [0.0, 0.5]), [-1.0, 0.0]);
        assert_eq!(outward_normal(&d, [2.0, 0.5]), [1.0, 0.0]);
        assert_eq!(outward_normal(&d, [1.0, 0.0]), [0.0, -1.0]);
        assert_eq!(outward_normal(&d, [1.0, 1.0]), [0.0, 1.0]);
    }
}
