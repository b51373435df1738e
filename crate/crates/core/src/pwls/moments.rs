//! Closed-form integrals of complex exponentials over segments and
//! rectangles, plus Gauss-Legendre rules for black-box integrands.

use std::f64::consts::PI;

use crate::linalg::C64;
use crate::mesh::{Point, Rect, Segment};

/// Below this phase the sinc is evaluated from its Taylor series.
pub const SMALL_PHASE: f64 = 1e-6;

/// `sin(x) / x` with a truncated series near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SMALL_PHASE {
        let x2 = x * x;
        // 1 - x²/3! + x⁴/5! - x⁶/7! + x⁸/9! - x¹⁰/11!
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        x.sin() / x
    }
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `∫_seg exp(i k·x) ds`.
pub fn edge_moment(seg: &Segment, k: Point) -> C64 {
    let len = seg.length();
    let phase = dot(k, seg.tangent()) * len;
    let mid = seg.midpoint();
    C64::from_polar(len * sinc(0.5 * phase), dot(k, mid))
}

/// `∫_a^b exp(i k x) dx`.
pub fn interval_moment(a: f64, b: f64, k: f64) -> C64 {
    let w = b - a;
    C64::from_polar(w * sinc(0.5 * k * w), 0.5 * k * (a + b))
}

/// `∫_rect exp(i k·x) dx`, the product of the two one-dimensional factors.
pub fn cell_moment(rect: &Rect, k: Point) -> C64 {
    interval_moment(rect.x0, rect.x1, k[0]) * interval_moment(rect.y0, rect.y1, k[1])
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre rule on a segment: `(points, weights)` with the
/// weights already scaled by the panel length.
pub fn segment_rule(seg: &Segment, panels: usize, order: usize) -> (Vec<Point>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let panels = panels.max(1);
    let len = seg.length();
    let mut pts = Vec::with_capacity(panels * order);
    let mut wts = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let t0 = p as f64 / panels as f64;
        let t1 = (p + 1) as f64 / panels as f64;
        for q in 0..order {
            let t = t0 + 0.5 * (x[q] + 1.0) * (t1 - t0);
            pts.push(seg.point_at(t));
            wts.push(0.5 * w[q] * (t1 - t0) * len);
        }
    }
    (pts, wts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn quad_segment(seg: &Segment, k: Point, n: usize) -> C64 {
        let (pts, wts) = segment_rule(seg, 1, n);
        pts.iter()
            .zip(&wts)
            .map(|(p, w)| C64::from_polar(*w, dot(k, *p)))
            .sum()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // ∫ x^14 = 2/15, exact for 8 points
        let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((q - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn zero_wavevector_gives_length_and_area() {
        let seg = Segment::new([0.3, -1.0], [2.0, 0.5]);
        let m = edge_moment(&seg, [0.0, 0.0]);
        assert!((m.re - seg.length()).abs() < 1e-15 && m.im.abs() < 1e-15);
        let r = Rect::new(-1.0, 0.5, 0.25, 3.0);
        let m = cell_moment(&r, [0.0, 0.0]);
        assert!((m.re - r.area()).abs() < 1e-14 && m.im.abs() < 1e-15);
    }

    #[test]
    fn reversed_wavevector_conjugates() {
        let seg = Segment::new([0.1, 0.2], [0.4, 0.9]);
        let k = [13.0, -7.5];
        let a = edge_moment(&seg, k);
        let b = edge_moment(&seg, [-k[0], -k[1]]);
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn small_phase_branch_is_continuous() {
        let seg = Segment::new([0.0, 0.0], [1.0, 0.0]);
        for &kx in &[0.999e-6, 1.001e-6, 1e-8, 2e-7] {
            let m = edge_moment(&seg, [2.0 * kx, 0.0]);
            let exact = C64::new((2.0 * kx).sin(), 2.0 * kx.sin().powi(2)) / (2.0 * kx);
            assert!((m - exact).norm() < 1e-15, "{kx}");
        }
    }

    #[test]
    fn edge_moment_matches_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let b = [a[0] + rng.random_range(-0.2..0.2), a[1] + rng.random_range(-0.2..0.2)];
            let seg = Segment::new(a, b);
            let k = [rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0)];
            let exact = edge_moment(&seg, k);
            let quad = quad_segment(&seg, k, 64);
            assert!((exact - quad).norm() <= 1e-12 * seg.length().max(quad.norm()));
        }
    }

    #[test]
    fn cell_moment_matches_tensor_quadrature() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let (x, w) = gauss_legendre(64);
        for _ in 0..200 {
            let x0 = rng.random_range(-1.0..1.0);
            let y0 = rng.random_range(-1.0..1.0);
            let r = Rect::new(x0, y0, x0 + rng.random_range(0.01..0.2), y0 + rng.random_range(0.01..0.2));
            let k = [rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0)];
            let mut quad = C64::new(0.0, 0.0);
            for i in 0..64 {
                let px = r.x0 + 0.5 * (x[i] + 1.0) * r.width();
                for j in 0..64 {
                    let py = r.y0 + 0.5 * (x[j] + 1.0) * r.height();
                    quad += C64::from_polar(0.25 * w[i] * w[j] * r.area(), k[0] * px + k[1] * py);
                }
            }
            let exact = cell_moment(&r, k);
            assert!((exact - quad).norm() <= 1e-12 * r.area());
            let separable = interval_moment(r.x0, r.x1, k[0]) * interval_moment(r.y0, r.y1, k[1]);
            assert!((exact - separable).norm() == 0.0);
        }
    }
}
