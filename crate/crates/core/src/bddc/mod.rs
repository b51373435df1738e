//! BDDC preconditioner on the interface Schur system.
//!
//! The partially assembled space `W̃` is stored as one flat vector: the dual
//! coordinates of every subdomain in subdomain order, followed by the global
//! primal coordinates.

mod multilevel;
mod pcg;

use ndarray::s;
use ndarray_linalg::Inverse;

pub use multilevel::{agglomerate, build_bddc, Bddc, BddcOptions, LevelInfo};
pub use pcg::{pcg, SolveStats};

use crate::adaptive::CoarseSpace;
use crate::error::{Error, Result};
use crate::linalg::{add_block, ct, select, select_vec, CMat, CVec, Cholesky, C64};
use crate::schur::{SchurOperator, Substructure};

/// One dual face block of a subdomain.
#[derive(Debug, Clone)]
struct DualFace {
    face: usize,
    /// Offset of the block in the subdomain's dual vector.
    offset: usize,
    n_delta: usize,
    /// `D^(ν) T_Δ` for this side.
    dt: CMat,
}

/// Transformed local data of one subdomain.
#[derive(Debug, Clone)]
pub struct SubdomainBlock {
    pub subdomain: usize,
    faces: Vec<DualFace>,
    /// Global primal index of each local primal coordinate.
    pub primal: Vec<usize>,
    pub n_dual: usize,
    /// Offset of the dual block in `W̃`.
    offset: usize,
    s_dd: Cholesky,
    s_dp: CMat,
    /// Transformed local matrix in the order (dual, primal).
    s_hat: CMat,
    /// `Ŝ_ΠΠ − Ŝ_ΠΔ Ŝ_ΔΔ^{-1} Ŝ_ΔΠ`.
    pub coarse: CMat,
}

/// How the assembled coarse problem is solved.
#[derive(Debug)]
pub enum CoarseSolve {
    Empty,
    Direct(Cholesky),
    Inner(Box<multilevel::InnerLevel>),
}

/// Partially assembled operator `S̃`, averaging `E_D`, and the coarse solver.
#[derive(Debug)]
pub struct PartiallyAssembled {
    pub blocks: Vec<SubdomainBlock>,
    pub pnum: usize,
    pub n_gamma: usize,
    pub n_dual: usize,
    face_gamma: Vec<std::ops::Range<usize>>,
    vertex_gamma: Vec<std::ops::Range<usize>>,
    face_primal: Vec<std::ops::Range<usize>>,
    vertex_primal: Vec<std::ops::Range<usize>>,
    n_delta: Vec<usize>,
    t_pi: Vec<CMat>,
    t_inv: Vec<CMat>,
    pub coarse_matrix: CMat,
    pub coarse: CoarseSolve,
}

impl PartiallyAssembled {
    /// Transformed local blocks and the assembled coarse matrix; the coarse
    /// solver is attached separately.
    pub fn setup(sub: &Substructure, op: &SchurOperator, cs: &CoarseSpace) -> Result<Self> {
        let verts = sub.subdomain_vertices();
        let mut blocks = Vec::with_capacity(sub.n_subdomains());
        let mut offset = 0;
        for (r, loc) in op.locals.iter().enumerate() {
            let n = loc.n_gamma();
            let mut t = CMat::zeros((n, n));
            let mut dual_idx = Vec::new();
            let mut primal_idx = Vec::new();
            let mut primal = Vec::new();
            let mut faces = Vec::with_capacity(loc.faces.len());
            let mut n_dual = 0;
            for lf in &loc.faces {
                let ft = &cs.transforms[lf.face];
                let p0 = lf.positions[0];
                let nk = lf.positions.len();
                t.slice_mut(s![p0..p0 + nk, p0..p0 + nk]).assign(&ft.t);
                dual_idx.extend(p0..p0 + ft.n_delta);
                primal_idx.extend(p0 + ft.n_delta..p0 + nk);
                primal.extend(cs.face_primal(lf.face));
                let sp = &cs.scalings[lf.face];
                let d = if sub.face_sides[lf.face].0 == r { &sp.d_r } else { &sp.d_j };
                faces.push(DualFace {
                    face: lf.face,
                    offset: n_dual,
                    n_delta: ft.n_delta,
                    dt: d.dot(&ft.t_delta()),
                });
                n_dual += ft.n_delta;
            }
            let mut vpos = loc.vertex_positions.iter();
            for &v in &verts[r] {
                for g in cs.vertex_primal(v) {
                    let p = *vpos.next().ok_or_else(|| Error::InvalidInput("vertex layout mismatch".into()))?;
                    t[[p, p]] = C64::new(1.0, 0.0);
                    primal_idx.push(p);
                    primal.push(g);
                }
            }
            let s_t = ct(&t.view()).dot(&loc.s).dot(&t);
            let order: Vec<usize> = dual_idx.iter().chain(&primal_idx).copied().collect();
            let s_hat = crate::linalg::hermitian_part(&select(&s_t.view(), &order, &order));
            let nd = dual_idx.len();
            let s_dd_m = s_hat.slice(s![..nd, ..nd]).to_owned();
            let s_dp = s_hat.slice(s![..nd, nd..]).to_owned();
            let s_pp = s_hat.slice(s![nd.., nd..]).to_owned();
            let s_dd = Cholesky::new(&s_dd_m.view()).map_err(|_| Error::SingularDual { subdomain: r })?;
            let y = s_dd.solve_lower(&s_dp.view());
            let coarse = crate::linalg::hermitian_part(&(s_pp - ct(&y.view()).dot(&y)));
            blocks.push(SubdomainBlock {
                subdomain: r,
                faces,
                primal,
                n_dual,
                offset,
                s_dd,
                s_dp,
                s_hat,
                coarse,
            });
            offset += n_dual;
        }
        let mut coarse_matrix = CMat::zeros((cs.pnum, cs.pnum));
        for b in &blocks {
            add_block(&mut coarse_matrix, &b.primal, &b.primal, &b.coarse.view());
        }
        let coarse_matrix = crate::linalg::hermitian_part(&coarse_matrix);
        let t_inv = cs
            .transforms
            .iter()
            .map(|ft| {
                if ft.n() == 0 {
                    Ok(CMat::zeros((0, 0)))
                } else {
                    ft.t.inv().map_err(|e| Error::Face {
                        face: ft.face,
                        msg: format!("singular transform: {e}"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            blocks,
            pnum: cs.pnum,
            n_gamma: op.n_gamma,
            n_dual: offset,
            face_gamma: (0..sub.n_faces()).map(|k| sub.dofs.face_range(k)).collect(),
            vertex_gamma: (0..sub.dofs.vertices.len()).map(|v| sub.dofs.vertex_range(v)).collect(),
            face_primal: (0..cs.n_faces()).map(|k| cs.face_primal(k)).collect(),
            vertex_primal: (0..cs.vertex_sizes.len()).map(|v| cs.vertex_primal(v)).collect(),
            n_delta: cs.transforms.iter().map(|t| t.n_delta).collect(),
            t_pi: cs.transforms.iter().map(|t| t.t_pi()).collect(),
            t_inv,
            coarse_matrix,
            coarse: CoarseSolve::Empty,
        })
    }

    /// Attaches a direct factorization of the coarse matrix.
    pub fn with_direct_coarse(mut self) -> Result<Self> {
        self.coarse = if self.pnum == 0 {
            CoarseSolve::Empty
        } else {
            CoarseSolve::Direct(Cholesky::new(&self.coarse_matrix.view())?)
        };
        Ok(self)
    }

    /// Dimension of `W̃`.
    pub fn n_tilde(&self) -> usize {
        self.n_dual + self.pnum
    }

    fn coarse_solve(&self, g: &CVec) -> Result<CVec> {
        match &self.coarse {
            CoarseSolve::Empty => Ok(CVec::zeros(self.pnum)),
            CoarseSolve::Direct(ch) => Ok(ch.solve_vec(&g.view())),
            CoarseSolve::Inner(level) => level.solve(g),
        }
    }

    /// `E_D^H g`: dual parts `T_Δ^H D^H g_k` per side, primal parts
    /// `T_Π^H g_k` and the vertex values.
    pub fn averaging_adjoint(&self, g: &CVec) -> CVec {
        let mut w = CVec::zeros(self.n_tilde());
        for b in &self.blocks {
            for f in &b.faces {
                let gk = g.slice(s![self.face_gamma[f.face].clone()]);
                let y = ct(&f.dt.view()).dot(&gk);
                let o = b.offset + f.offset;
                w.slice_mut(s![o..o + f.n_delta]).assign(&y);
            }
        }
        let base = self.n_dual;
        for (k, tp) in self.t_pi.iter().enumerate() {
            let gk = g.slice(s![self.face_gamma[k].clone()]);
            let r = &self.face_primal[k];
            w.slice_mut(s![base + r.start..base + r.end]).assign(&ct(&tp.view()).dot(&gk));
        }
        for (v, rg) in self.vertex_gamma.iter().enumerate() {
            let r = &self.vertex_primal[v];
            w.slice_mut(s![base + r.start..base + r.end]).assign(&g.slice(s![rg.clone()]));
        }
        w
    }

    /// `E_D w̃`: per face `D^(r) T_Δ w^r + D^(j) T_Δ w^j + T_Π w_Π`, vertex
    /// values passed through.
    pub fn averaging(&self, w: &CVec) -> CVec {
        let mut u = CVec::zeros(self.n_gamma);
        for b in &self.blocks {
            for f in &b.faces {
                let o = b.offset + f.offset;
                let y = f.dt.dot(&w.slice(s![o..o + f.n_delta]));
                let mut dst = u.slice_mut(s![self.face_gamma[f.face].clone()]);
                dst += &y;
            }
        }
        let base = self.n_dual;
        for (k, tp) in self.t_pi.iter().enumerate() {
            let r = &self.face_primal[k];
            let y = tp.dot(&w.slice(s![base + r.start..base + r.end]));
            let mut dst = u.slice_mut(s![self.face_gamma[k].clone()]);
            dst += &y;
        }
        for (v, rg) in self.vertex_gamma.iter().enumerate() {
            let r = &self.vertex_primal[v];
            u.slice_mut(s![rg.clone()]).assign(&w.slice(s![base + r.start..base + r.end]));
        }
        u
    }

    /// Embedding `Ŵ → W̃` of continuous interface functions: both sides get
    /// the dual coordinates `(T_k^{-1} u_k)_Δ`.
    pub fn embed(&self, u: &CVec) -> CVec {
        let mut w = CVec::zeros(self.n_tilde());
        let coefs: Vec<CVec> = self
            .t_inv
            .iter()
            .enumerate()
            .map(|(k, ti)| ti.dot(&u.slice(s![self.face_gamma[k].clone()])))
            .collect();
        for b in &self.blocks {
            for f in &b.faces {
                let o = b.offset + f.offset;
                w.slice_mut(s![o..o + f.n_delta]).assign(&coefs[f.face].slice(s![..f.n_delta]));
            }
        }
        let base = self.n_dual;
        for (k, c) in coefs.iter().enumerate() {
            let r = &self.face_primal[k];
            w.slice_mut(s![base + r.start..base + r.end]).assign(&c.slice(s![self.n_delta[k]..]));
        }
        for (v, rg) in self.vertex_gamma.iter().enumerate() {
            let r = &self.vertex_primal[v];
            w.slice_mut(s![base + r.start..base + r.end]).assign(&u.slice(s![rg.clone()]));
        }
        w
    }

    /// Jump operator `P_D w̃ = w̃ − embed(E_D w̃)`.
    pub fn jump(&self, w: &CVec) -> CVec {
        w - &self.embed(&self.averaging(w))
    }

    /// `S̃ w̃`.
    pub fn apply_tilde(&self, w: &CVec) -> CVec {
        let mut y = CVec::zeros(self.n_tilde());
        let base = self.n_dual;
        for b in &self.blocks {
            let x = self.local_vector(b, w);
            let z = b.s_hat.dot(&x);
            let mut dst = y.slice_mut(s![b.offset..b.offset + b.n_dual]);
            dst += &z.slice(s![..b.n_dual]);
            for (i, &g) in b.primal.iter().enumerate() {
                y[base + g] += z[b.n_dual + i];
            }
        }
        y
    }

    fn local_vector(&self, b: &SubdomainBlock, w: &CVec) -> CVec {
        let mut x = CVec::zeros(b.n_dual + b.primal.len());
        x.slice_mut(s![..b.n_dual]).assign(&w.slice(s![b.offset..b.offset + b.n_dual]));
        for (i, &g) in b.primal.iter().enumerate() {
            x[b.n_dual + i] = w[self.n_dual + g];
        }
        x
    }

    /// `S̃^{-1} f` by local dual solves around the coarse solve.
    pub fn solve_tilde(&self, f: &CVec) -> Result<CVec> {
        let base = self.n_dual;
        let mut ys = Vec::with_capacity(self.blocks.len());
        let mut g = f.slice(s![base..]).to_owned();
        for b in &self.blocks {
            let y = b.s_dd.solve_vec(&f.slice(s![b.offset..b.offset + b.n_dual]));
            let c = ct(&b.s_dp.view()).dot(&y);
            for (i, &p) in b.primal.iter().enumerate() {
                g[p] -= c[i];
            }
            ys.push(y);
        }
        let x_pi = self.coarse_solve(&g)?;
        let mut x = CVec::zeros(self.n_tilde());
        for (b, y) in self.blocks.iter().zip(ys) {
            let xp = select_vec(&x_pi.view(), &b.primal);
            let corr = b.s_dd.solve_vec(&b.s_dp.dot(&xp).view());
            x.slice_mut(s![b.offset..b.offset + b.n_dual]).assign(&(y - corr));
        }
        x.slice_mut(s![base..]).assign(&x_pi);
        Ok(x)
    }

    /// `M^{-1} g = E_D S̃^{-1} E_D^H g`.
    pub fn apply_preconditioner(&self, g: &CVec) -> Result<CVec> {
        let f = self.averaging_adjoint(g);
        let x = self.solve_tilde(&f)?;
        Ok(self.averaging(&x))
    }

    /// Dense `S̃`, for tests.
    pub fn tilde_dense(&self) -> CMat {
        let n = self.n_tilde();
        let mut out = CMat::zeros((n, n));
        for b in &self.blocks {
            let idx: Vec<usize> = (b.offset..b.offset + b.n_dual)
                .chain(b.primal.iter().map(|p| self.n_dual + p))
                .collect();
            add_block(&mut out, &idx, &idx, &b.s_hat.view());
        }
        out
    }

    /// `ã(P_D w̃, P_D w̃) / ã(w̃, w̃)`.
    pub fn jump_ratio(&self, w: &CVec) -> f64 {
        let pw = self.jump(w);
        let num = energy(&self.apply_tilde(&pw), &pw);
        let den = energy(&self.apply_tilde(w), w);
        num / den
    }
}

fn energy(aw: &CVec, w: &CVec) -> f64 {
    crate::linalg::dotc(&w.view(), &aw.view()).re
}

/// Interface solve followed by interior recovery.
pub fn solve_full(sub: &Substructure, bddc: &Bddc, b: &CVec, tol: f64, maxit: usize) -> Result<(CVec, SolveStats)> {
    let g = bddc.op.condense_rhs(&sub.dofs, b);
    let (x, stats) = pcg(|v| Ok(bddc.op.apply(v)), |v| bddc.pa.apply_preconditioner(v), &g, tol, maxit)?;
    Ok((bddc.op.recover(&sub.dofs, b, &x), stats))
}
