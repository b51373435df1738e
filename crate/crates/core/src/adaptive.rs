//! Interface scalings and the adaptive primal space.
//!
//! For each face a generalized eigenproblem compares the energy of the
//! scaled jump with the parallel sum of the two minimal-energy face Schur
//! complements. Eigenvectors with eigenvalue above the tolerance `Θ` become
//! primal (continuous) coordinates, the rest stay dual.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ct, eigh, hermitian_part, identity, max_abs, pinv_hermitian, CMat, CVec, Cholesky, C64, PINV_CUTOFF};
use crate::mesh::CoarsePartition;
use crate::schur::{face_schur, minimal_face_schur, SchurOperator, Substructure};

/// Interface averaging weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    #[default]
    Multiplicity,
    Deluxe,
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scaling::Multiplicity => "multiplicity",
            Scaling::Deluxe => "deluxe",
        })
    }
}

impl FromStr for Scaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "multiplicity" => Ok(Scaling::Multiplicity),
            "deluxe" => Ok(Scaling::Deluxe),
            other => Err(Error::InvalidInput(format!("unknown scaling '{other}'"))),
        }
    }
}

/// Weights of the two sides of a face, `D^(r) + D^(j) = I`.
#[derive(Debug, Clone)]
pub struct ScalingPair {
    pub face: usize,
    pub d_r: CMat,
    pub d_j: CMat,
}

pub fn multiplicity_scaling(face: usize, n: usize) -> ScalingPair {
    let half = identity(n).mapv(|z| z * 0.5);
    ScalingPair {
        face,
        d_r: half.clone(),
        d_j: half,
    }
}

/// `D^(ν) = (S^(r) + S^(j))^{-1} S^(ν)`.
pub fn deluxe_scaling(face: usize, s_r: &CMat, s_j: &CMat) -> Result<ScalingPair> {
    let sum = s_r + s_j;
    let (d_r, d_j) = match Cholesky::new(&sum.view()) {
        Ok(ch) => (ch.solve_mat(&s_r.view()), ch.solve_mat(&s_j.view())),
        Err(_) => {
            let inv = pinv_hermitian(&sum.view())?;
            (inv.dot(s_r), inv.dot(s_j))
        }
    };
    let residual = max_abs(&(&d_r + &d_j - identity(s_r.nrows())).view());
    if residual > 1e-8 {
        return Err(Error::Scaling { face, residual });
    }
    Ok(ScalingPair { face, d_r, d_j })
}

/// Parallel sum `B (A + B)^† A`, Hermitian part.
pub fn parallel_sum(a: &CMat, b: &CMat) -> Result<CMat> {
    let pinv = pinv_hermitian(&(a + b).view())?;
    Ok(hermitian_part(&b.dot(&pinv).dot(a)))
}

/// Eigenpairs of `A v = λ B v` in ascending order; directions in the null
/// space of `B` carry `λ = ∞`.
#[derive(Debug, Clone)]
pub struct FaceEigen {
    pub lambda: Vec<f64>,
    pub vectors: CMat,
}

/// Generalized eigenproblem of the face pencil restricted to `range(B)`: the
/// reduced pencil on the `B`-eigenvectors above the relative cutoff,
/// completed by a basis of `null(B)` with `λ = ∞`. Finite-λ eigenvectors have
/// unit `B`-norm, null directions unit Euclidean norm.
pub fn face_gevp(a: &CMat, b: &CMat) -> Result<FaceEigen> {
    let n = a.nrows();
    if n == 0 {
        return Ok(FaceEigen {
            lambda: vec![],
            vectors: CMat::zeros((0, 0)),
        });
    }
    let (w, u) = eigh(&b.view())?;
    let w_max = w.iter().fold(0.0f64, |m, x| m.max(*x));
    let range: Vec<usize> = (0..n).filter(|&i| w_max > 0.0 && w[i] > PINV_CUTOFF * w_max).collect();
    let null: Vec<usize> = (0..n).filter(|i| !range.contains(i)).collect();
    let mut pairs = Vec::with_capacity(n);
    if !range.is_empty() {
        // W^{-1/2} U_r^H A U_r W^{-1/2}
        let mut ur = CMat::zeros((n, range.len()));
        for (c, &i) in range.iter().enumerate() {
            let s = 1.0 / w[i].sqrt();
            ur.column_mut(c).assign(&u.column(i).mapv(|z| z * s));
        }
        let red = ct(&ur.view()).dot(a).dot(&ur);
        let (lam, z) = eigh(&red.view())?;
        let scale = lam.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if lam.iter().any(|&l| l < -1e-8 * scale) {
            return Err(Error::Face {
                face: usize::MAX,
                msg: "indefinite reduced pencil".into(),
            });
        }
        let v = ur.dot(&z);
        for c in 0..range.len() {
            pairs.push((lam[c].max(0.0), v.column(c).to_owned()));
        }
    }
    for &i in &null {
        pairs.push((f64::INFINITY, u.column(i).to_owned()));
    }
    Ok(sorted(pairs, n))
}

/// Full-space eigenpairs of the pencil through `A = L L^H`: the eigenvalues
/// `μ = 1/λ` of `L^{-1} B L^{-H}`, with `μ` below the relative cutoff marking
/// `null(B)`. Unlike [`face_gevp`] the eigenvectors are not confined to
/// `range(B)`, so the finite eigenvalues can only be smaller. A singular `A`
/// falls back to [`face_gevp`].
pub fn face_gevp_inverse(a: &CMat, b: &CMat) -> Result<FaceEigen> {
    let n = a.nrows();
    if n == 0 {
        return Ok(FaceEigen {
            lambda: vec![],
            vectors: CMat::zeros((0, 0)),
        });
    }
    let ch = match Cholesky::new(&a.view()) {
        Ok(ch) => ch,
        Err(_) => return face_gevp(a, b),
    };
    let x = ch.solve_lower(&b.view());
    let m = ch.solve_lower(&ct(&x.view()).view());
    let (mu, y) = eigh(&m.view())?;
    let mu_max = mu.iter().fold(0.0f64, |m, x| m.max(*x));
    let v = ch.solve_upper(&y.view());
    let mut pairs: Vec<(f64, CVec)> = Vec::with_capacity(n);
    for i in 0..n {
        let col = v.column(i).to_owned();
        if mu[i] > PINV_CUTOFF * mu_max && mu_max > 0.0 {
            pairs.push((1.0 / mu[i], col.mapv(|z| z / mu[i].sqrt())));
        } else {
            let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            pairs.push((f64::INFINITY, col.mapv(|z| z / nrm)));
        }
    }
    Ok(sorted(pairs, n))
}

fn sorted(mut pairs: Vec<(f64, CVec)>, n: usize) -> FaceEigen {
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut vectors = CMat::zeros((n, pairs.len()));
    for (c, (_, v)) in pairs.iter().enumerate() {
        vectors.column_mut(c).assign(v);
    }
    FaceEigen {
        lambda: pairs.into_iter().map(|p| p.0).collect(),
        vectors,
    }
}

/// Change of basis on one face: `T = [T_Δ | T_Π]`.
#[derive(Debug, Clone)]
pub struct FaceTransform {
    pub face: usize,
    pub t: CMat,
    pub n_delta: usize,
    pub lambda: Vec<f64>,
    pub a_d: CMat,
    pub b: CMat,
}

impl FaceTransform {
    pub fn n(&self) -> usize {
        self.t.nrows()
    }

    pub fn n_pi(&self) -> usize {
        self.n() - self.n_delta
    }

    pub fn t_delta(&self) -> CMat {
        self.t.slice(ndarray::s![.., ..self.n_delta]).to_owned()
    }

    pub fn t_pi(&self) -> CMat {
        self.t.slice(ndarray::s![.., self.n_delta..]).to_owned()
    }
}

/// Samples used to check the dual energy bound on every face.
pub const BOUND_SAMPLES: usize = 20;

/// Splits eigenvectors at `Θ` (ties dual) and checks on random coefficient
/// pairs that the scaled jump energy of the dual part stays below `Θ` times
/// each side's minimal face energy, with 10% slack.
pub fn select_primal(face: usize, eig: FaceEigen, theta: f64, a_d: CMat, b: CMat, s_bar: [&CMat; 2], seed: u64) -> Result<FaceTransform> {
    if theta < 1.0 {
        return Err(Error::InvalidInput(format!("tolerance must be at least 1, got {theta}")));
    }
    let n_delta = eig.lambda.iter().take_while(|&&l| l <= theta).count();
    // unit columns keep the transformed local and coarse matrices well scaled
    let mut t = eig.vectors;
    for mut col in t.columns_mut() {
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            col.mapv_inplace(|z| z / nrm);
        }
    }
    let ft = FaceTransform {
        face,
        t,
        n_delta,
        lambda: eig.lambda,
        a_d,
        b,
    };
    let worst = bound_violation(&ft, theta, s_bar, BOUND_SAMPLES, seed);
    if worst > 1.1 {
        return Err(Error::Face {
            face,
            msg: format!("dual energy bound violated by a factor {worst:.3}"),
        });
    }
    Ok(ft)
}

/// Largest ratio `jump energy / (Θ · min side energy)` over random samples.
pub fn bound_violation(ft: &FaceTransform, theta: f64, s_bar: [&CMat; 2], samples: usize, seed: u64) -> f64 {
    let n = ft.n();
    if ft.n_delta == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (ft.face as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let t_delta = ft.t_delta();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let coef = CVec::from_shape_fn(n, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let w = ft.t.dot(&coef);
        let wd = t_delta.dot(&coef.slice(ndarray::s![..ft.n_delta]));
        let jump = quad(&ft.a_d, &wd);
        let side = quad(s_bar[0], &w).min(quad(s_bar[1], &w));
        if jump > 0.0 {
            worst = worst.max(if side > 0.0 { jump / (theta * side) } else { f64::INFINITY });
        }
    }
    worst
}

fn quad(a: &CMat, x: &CVec) -> f64 {
    x.iter().zip(a.dot(x).iter()).map(|(u, v)| (u.conj() * v).re).sum()
}

/// `Θ = 1 + ln(min_r min(n_x^(r), n_y^(r)))`.
pub fn theta_default(part: &CoarsePartition) -> f64 {
    let m = part
        .subdomains
        .iter()
        .map(|s| s.nx.min(s.ny))
        .min()
        .unwrap_or(1);
    1.0 + (m as f64).ln()
}

/// Where a primal coordinate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalOrigin {
    Face(usize),
    Vertex(usize),
}

/// All faces' transforms and scalings plus the primal layout: face primal
/// blocks in face order, then the vertex blocks.
#[derive(Debug, Clone)]
pub struct CoarseSpace {
    pub theta: f64,
    pub scaling: Scaling,
    pub transforms: Vec<FaceTransform>,
    pub scalings: Vec<ScalingPair>,
    pub face_offsets: Vec<usize>,
    pub vertex_offsets: Vec<usize>,
    pub vertex_sizes: Vec<usize>,
    /// Coarse dimension, vertex blocks included.
    pub pnum: usize,
    /// Interface coefficient count `p · |D_Γ|` at the element level.
    pub n_gamma: usize,
}

impl CoarseSpace {
    pub fn n_faces(&self) -> usize {
        self.transforms.len()
    }

    /// Primal dofs contributed by faces only.
    pub fn face_pnum(&self) -> usize {
        self.transforms.iter().map(|t| t.n_pi()).sum()
    }

    /// Face primal count over the interface coefficient count.
    pub fn ppnum(&self) -> f64 {
        if self.n_gamma == 0 {
            0.0
        } else {
            self.face_pnum() as f64 / self.n_gamma as f64
        }
    }

    pub fn avg_per_interface(&self) -> f64 {
        if self.n_faces() == 0 {
            0.0
        } else {
            self.face_pnum() as f64 / self.n_faces() as f64
        }
    }

    pub fn face_primal(&self, k: usize) -> std::ops::Range<usize> {
        self.face_offsets[k]..self.face_offsets[k] + self.transforms[k].n_pi()
    }

    pub fn vertex_primal(&self, v: usize) -> std::ops::Range<usize> {
        self.vertex_offsets[v]..self.vertex_offsets[v] + self.vertex_sizes[v]
    }

    pub fn origins(&self) -> Vec<PrimalOrigin> {
        let mut out = Vec::with_capacity(self.pnum);
        for (k, t) in self.transforms.iter().enumerate() {
            out.extend(std::iter::repeat_n(PrimalOrigin::Face(k), t.n_pi()));
        }
        for (v, &s) in self.vertex_sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(PrimalOrigin::Vertex(v), s));
        }
        out
    }

    /// Per-face diagnostics: sides, sizes and the eigenvalues.
    pub fn write_face_csv<W: Write>(&self, sides: &[(usize, usize)], mut w: W) -> std::io::Result<()> {
        writeln!(w, "face,r,j,n,n_delta,n_pi,eigenvalues")?;
        for (k, t) in self.transforms.iter().enumerate() {
            let eigs: Vec<String> = t.lambda.iter().map(|l| format!("{l:.6e}")).collect();
            writeln!(w, "{},{},{},{},{},{},{}", k, sides[k].0, sides[k].1, t.n(), t.n_delta, t.n_pi(), eigs.join(";"))?;
        }
        Ok(())
    }
}

/// Face matrices of both sides: `S`, `S̄`, then the pencil.
#[derive(Debug, Clone)]
pub struct FacePencil {
    pub s: [CMat; 2],
    pub s_bar: [CMat; 2],
    pub scaling: ScalingPair,
    pub a_d: CMat,
    pub b: CMat,
}

pub fn face_pencil(sub: &Substructure, op: &SchurOperator, k: usize, scaling: Scaling) -> Result<FacePencil> {
    let (r, j) = sub.face_sides[k];
    let s_r = face_schur(&op.locals[r], k)?;
    let s_j = face_schur(&op.locals[j], k)?;
    let sb_r = minimal_face_schur(&op.locals[r], k)?;
    let sb_j = minimal_face_schur(&op.locals[j], k)?;
    let pair = match scaling {
        Scaling::Multiplicity => multiplicity_scaling(k, s_r.nrows()),
        Scaling::Deluxe => deluxe_scaling(k, &s_r, &s_j)?,
    };
    let a_d = hermitian_part(&(ct(&pair.d_r.view()).dot(&s_j).dot(&pair.d_r) + ct(&pair.d_j.view()).dot(&s_r).dot(&pair.d_j)));
    let b = parallel_sum(&sb_r, &sb_j)?;
    Ok(FacePencil {
        s: [s_r, s_j],
        s_bar: [sb_r, sb_j],
        scaling: pair,
        a_d,
        b,
    })
}

/// Runs the per-face pipeline (scaling, pencil, full-space eigenproblem,
/// selection) and lays out the primal space.
pub fn build_coarse_space(sub: &Substructure, op: &SchurOperator, scaling: Scaling, theta: f64, seed: u64) -> Result<CoarseSpace> {
    let mut transforms = Vec::with_capacity(sub.n_faces());
    let mut scalings = Vec::with_capacity(sub.n_faces());
    for k in 0..sub.n_faces() {
        let fp = face_pencil(sub, op, k, scaling)?;
        let eig = face_gevp_inverse(&fp.a_d, &fp.b).map_err(|e| match e {
            Error::Face { msg, .. } => Error::Face { face: k, msg },
            other => other,
        })?;
        let ft = select_primal(k, eig, theta, fp.a_d, fp.b, [&fp.s_bar[0], &fp.s_bar[1]], seed)?;
        log::debug!("face {k}: n = {}, primal = {}", ft.n(), ft.n_pi());
        transforms.push(ft);
        scalings.push(fp.scaling);
    }
    let mut face_offsets = Vec::with_capacity(transforms.len());
    let mut off = 0;
    for t in &transforms {
        face_offsets.push(off);
        off += t.n_pi();
    }
    let vertex_sizes: Vec<usize> = sub.dofs.vertices.iter().map(|v| v.len()).collect();
    let mut vertex_offsets = Vec::with_capacity(vertex_sizes.len());
    for &s in &vertex_sizes {
        vertex_offsets.push(off);
        off += s;
    }
    Ok(CoarseSpace {
        theta,
        scaling,
        transforms,
        scalings,
        face_offsets,
        vertex_offsets,
        vertex_sizes,
        pnum: off,
        n_gamma: sub.dofs.n_gamma(),
    })
}
