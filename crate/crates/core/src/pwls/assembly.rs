//! Assembly of the weighted plane-wave least-squares form.
//!
//! Matrix convention: `A[(e', l'), (e, l)] = a(φ_{e,l}, φ_{e',l'})`, so that
//! `a(u, v) = v^H A u` on coefficient vectors and the discrete system is
//! `A u = b` with `b_i = L(φ_i)`.

use std::io::Write;

use ndarray::{s, Array2};

use super::basis::PlaneWaveSpace;
use super::moments::{edge_moment, segment_rule};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, CMat, CVec, C64};
use crate::mesh::{clip_edges_to_subdomains, CoarsePartition, EdgeRef, Point, RectMesh, Segment, SubSegment};

const I: C64 = C64::new(0.0, 1.0);

/// Weight on trace jumps, `1/h + κ`.
pub fn trace_weight(h: f64, kappa: f64) -> f64 {
    1.0 / h + kappa
}

/// Weight on flux jumps and on the Robin residual, `1/(h κ²) + 1/κ`.
pub fn flux_weight(h: f64, kappa: f64) -> f64 {
    1.0 / (h * kappa * kappa) + 1.0 / kappa
}

/// Element-to-element `p × p` blocks for an interior edge (or a clipped piece
/// of one): `[kk, kj, jk, jj]`, with the first element of each pair the row.
pub fn interior_edge_blocks(space: &PlaneWaveSpace, h: f64, k: usize, j: usize, n_k: Point, seg: &Segment) -> [CMat; 4] {
    let p = space.p;
    let kap_kj = 0.5 * (space.kappa[k] + space.kappa[j]);
    let alpha = trace_weight(h, kap_kj);
    let beta = flux_weight(h, kap_kj);
    let n_j = [-n_k[0], -n_k[1]];
    // per-side coefficients of the trace jump and of the flux sum
    let side = |e: usize, n: Point, sign: f64| -> (Vec<C64>, Vec<C64>) {
        let trace = vec![C64::new(sign, 0.0); p];
        let flux = (0..p)
            .map(|l| {
                let d = space.dirs[l];
                I * space.kappa[e] * (d[0] * n[0] + d[1] * n[1])
            })
            .collect();
        (trace, flux)
    };
    let sides = [(k, side(k, n_k, 1.0)), (j, side(j, n_j, -1.0))];
    let mut out: [CMat; 4] = Default::default();
    for (bi, (row_e, (row_tr, row_fl))) in sides.iter().enumerate() {
        for (bj, (col_e, (col_tr, col_fl))) in sides.iter().enumerate() {
            let mut blk = CMat::zeros((p, p));
            for lr in 0..p {
                let kr = space.wavevector(*row_e, lr);
                for lc in 0..p {
                    let kc = space.wavevector(*col_e, lc);
                    let m = edge_moment(seg, [kc[0] - kr[0], kc[1] - kr[1]]);
                    let coef = alpha * col_tr[lc] * row_tr[lr].conj() + beta * col_fl[lc] * row_fl[lr].conj();
                    blk[[lr, lc]] = coef * m;
                }
            }
            out[bi * 2 + bj] = blk;
        }
    }
    out
}

/// Robin-residual block for a boundary edge (or piece) of element `k`.
pub fn boundary_edge_block(space: &PlaneWaveSpace, h: f64, k: usize, normal: Point, seg: &Segment) -> CMat {
    let p = space.p;
    let kap = space.kappa[k];
    let theta = flux_weight(h, kap);
    let coef: Vec<C64> = (0..p)
        .map(|l| {
            let d = space.dirs[l];
            I * kap * (d[0] * normal[0] + d[1] * normal[1] + 1.0)
        })
        .collect();
    let mut blk = CMat::zeros((p, p));
    for lr in 0..p {
        let kr = space.wavevector(k, lr);
        for lc in 0..p {
            let kc = space.wavevector(k, lc);
            let m = edge_moment(seg, [kc[0] - kr[0], kc[1] - kr[1]]);
            blk[[lr, lc]] = theta * coef[lc] * coef[lr].conj() * m;
        }
    }
    blk
}

/// Square block-sparse matrix with dense `p × p` blocks indexed by element.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub p: usize,
    rows: Vec<Vec<(usize, CMat)>>,
}

impl BlockMatrix {
    pub fn new(p: usize, n_blocks: usize) -> Self {
        Self {
            p,
            rows: vec![Vec::new(); n_blocks],
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.p * self.rows.len()
    }

    pub fn add(&mut self, row: usize, col: usize, blk: &CMat) {
        let r = &mut self.rows[row];
        match r.binary_search_by_key(&col, |(c, _)| *c) {
            Ok(pos) => r[pos].1 += blk,
            Err(pos) => r.insert(pos, (col, blk.clone())),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&CMat> {
        let r = &self.rows[row];
        r.binary_search_by_key(&col, |(c, _)| *c).ok().map(|pos| &r[pos].1)
    }

    pub fn row(&self, row: usize) -> &[(usize, CMat)] {
        &self.rows[row]
    }

    pub fn matvec(&self, x: &CVec) -> CVec {
        let p = self.p;
        let mut y = CVec::zeros(self.dim());
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = y.slice_mut(s![r * p..(r + 1) * p]);
            for (c, blk) in row {
                acc += &blk.dot(&x.slice(s![c * p..(c + 1) * p]));
            }
        }
        y
    }

    /// Dense submatrix over element lists (element-major dof order).
    pub fn dense_block(&self, row_elems: &[usize], col_elems: &[usize]) -> CMat {
        let p = self.p;
        let mut pos = std::collections::HashMap::with_capacity(col_elems.len());
        for (i, &e) in col_elems.iter().enumerate() {
            pos.insert(e, i);
        }
        let mut out = CMat::zeros((row_elems.len() * p, col_elems.len() * p));
        for (i, &re) in row_elems.iter().enumerate() {
            for (c, blk) in &self.rows[re] {
                if let Some(&j) = pos.get(c) {
                    out.slice_mut(s![i * p..(i + 1) * p, j * p..(j + 1) * p]).assign(blk);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let all: Vec<usize> = (0..self.n_blocks()).collect();
        self.dense_block(&all, &all)
    }

    /// Matrix Market coordinate dump (complex general).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = self.p;
        let nnz: usize = self.rows.iter().map(|r| r.len() * p * p).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", self.dim(), self.dim(), nnz)?;
        for (r, row) in self.rows.iter().enumerate() {
            for (c, blk) in row {
                for i in 0..p {
                    for j in 0..p {
                        let z = blk[[i, j]];
                        writeln!(w, "{} {} {:.17e} {:.17e}", r * p + i + 1, c * p + j + 1, z.re, z.im)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Global stiffness matrix with its load vector.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: BlockMatrix,
    pub rhs: CVec,
}

/// Matrix Market dump of a vector (complex array format).
pub fn write_vector_market<W: Write>(v: &CVec, mut w: W) -> std::io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array complex general")?;
    writeln!(w, "{} 1", v.len())?;
    for z in v.iter() {
        writeln!(w, "{:.17e} {:.17e}", z.re, z.im)?;
    }
    Ok(())
}

/// Assembles the global sesquilinear form over all edges.
pub fn assemble_global(mesh: &RectMesh, space: &PlaneWaveSpace) -> Result<BlockMatrix> {
    if space.n_elements() != mesh.n_elements() {
        return Err(Error::InvalidInput("space and mesh disagree on the element count".into()));
    }
    let h = mesh.h();
    let mut a = BlockMatrix::new(space.p, mesh.n_elements());
    for e in &mesh.interior_edges {
        let [kk, kj, jk, jj] = interior_edge_blocks(space, h, e.k, e.j, e.n_k, &e.seg);
        a.add(e.k, e.k, &kk);
        a.add(e.k, e.j, &kj);
        a.add(e.j, e.k, &jk);
        a.add(e.j, e.j, &jj);
    }
    for e in &mesh.boundary_edges {
        a.add(e.k, e.k, &boundary_edge_block(space, h, e.k, e.normal, &e.seg));
    }
    for m in 0..mesh.n_elements() {
        if let Some(blk) = a.get(m, m) {
            let defect = hermitian_defect(&blk.view());
            if defect > 1e-12 {
                return Err(Error::NonHermitian { defect });
            }
        }
    }
    Ok(a)
}

/// Gauss points per panel for the load integrals.
const RHS_ORDER: usize = 20;

/// Load vector `b_{(k,l)} = θ_k ∫_{γ_k} g · conj((∂_n + iκ_k) φ_{k,l}) ds`.
pub fn assemble_rhs(mesh: &RectMesh, space: &PlaneWaveSpace, g: &dyn Fn(Point) -> C64) -> CVec {
    let h = mesh.h();
    let p = space.p;
    let mut b = CVec::zeros(space.dim());
    for e in &mesh.boundary_edges {
        let kap = space.kappa[e.k];
        let theta = flux_weight(h, kap);
        let len = e.seg.length();
        let panels = 1 + (kap * len / 4.0).ceil() as usize;
        let (pts, wts) = segment_rule(&e.seg, panels, RHS_ORDER);
        let gv: Vec<C64> = pts.iter().map(|x| g(*x)).collect();
        for l in 0..p {
            let d = space.dirs[l];
            let coef = I * kap * (d[0] * e.normal[0] + d[1] * e.normal[1] + 1.0);
            let mut acc = C64::new(0.0, 0.0);
            for ((x, w), gx) in pts.iter().zip(&wts).zip(&gv) {
                acc += *w * gx * space.eval(e.k, l, *x).conj();
            }
            b[space.dof(e.k, l)] += theta * coef.conj() * acc;
        }
    }
    b
}

/// Subdomain-local form `a_r` as a dense matrix over the dofs of all
/// elements touching the subdomain.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub subdomain: usize,
    /// Local element order; local dof `i·p + l` belongs to `elements[i]`.
    pub elements: Vec<usize>,
    pub matrix: CMat,
}

impl LocalSystem {
    /// Scatter-adds the local matrix into a dense global matrix.
    pub fn expand_into(&self, global: &mut CMat, p: usize) {
        for (i, &ei) in self.elements.iter().enumerate() {
            for (j, &ej) in self.elements.iter().enumerate() {
                let mut dst = global.slice_mut(s![ei * p..(ei + 1) * p, ej * p..(ej + 1) * p]);
                dst += &self.matrix.slice(s![i * p..(i + 1) * p, j * p..(j + 1) * p]);
            }
        }
    }
}

/// Assembles `a_r` for subdomain `r`.
pub fn assemble_local(mesh: &RectMesh, part: &CoarsePartition, space: &PlaneWaveSpace, r: usize) -> LocalSystem {
    let pieces = clip_edges_to_subdomains(mesh, part);
    assemble_local_from_pieces(mesh, part, space, r, &pieces[r])
}

/// Same as [`assemble_local`] with precomputed clipped edges of subdomain `r`.
pub fn assemble_local_from_pieces(
    mesh: &RectMesh,
    part: &CoarsePartition,
    space: &PlaneWaveSpace,
    r: usize,
    pieces: &[SubSegment],
) -> LocalSystem {
    let p = space.p;
    let h = mesh.h();
    let elements = part.subdomains[r].touching.clone();
    let mut local = std::collections::HashMap::with_capacity(elements.len());
    for (i, &m) in elements.iter().enumerate() {
        local.insert(m, i);
    }
    let mut a = Array2::<C64>::zeros((elements.len() * p, elements.len() * p));
    let mut add = |re: usize, ce: usize, blk: &CMat| {
        let (i, j) = (local[&re], local[&ce]);
        let mut dst = a.slice_mut(s![i * p..(i + 1) * p, j * p..(j + 1) * p]);
        dst += blk;
    };
    for piece in pieces {
        match piece.edge {
            EdgeRef::Interior(ei) => {
                let e = &mesh.interior_edges[ei];
                let [kk, kj, jk, jj] = interior_edge_blocks(space, h, e.k, e.j, e.n_k, &piece.seg);
                add(e.k, e.k, &kk);
                add(e.k, e.j, &kj);
                add(e.j, e.k, &jk);
                add(e.j, e.j, &jj);
            }
            EdgeRef::Boundary(bi) => {
                let e = &mesh.boundary_edges[bi];
                add(e.k, e.k, &boundary_edge_block(space, h, e.k, e.normal, &piece.seg));
            }
        }
    }
    LocalSystem {
        subdomain: r,
        elements,
        matrix: a,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, max_abs};
    use crate::mesh::{build_mesh, Rect};
    use crate::pwls::moments::segment_rule;

    fn small(dx: usize, n: usize, p: usize, kappa: f64) -> (RectMesh, CoarsePartition, PlaneWaveSpace) {
        let (mesh, part) = build_mesh(Rect::new(0.0, 0.0, 1.0, 1.0), dx, dx, n).unwrap();
        let space = PlaneWaveSpace::uniform(p, mesh.n_elements(), kappa).unwrap();
        (mesh, part, space)
    }

    #[test]
    fn single_element_is_boundary_gram() {
        let mesh = RectMesh::new(Rect::new(0.0, 0.0, 0.5, 0.5), 1, 1).unwrap();
        let space = PlaneWaveSpace::uniform(5, 1, 9.0).unwrap();
        let a = assemble_global(&mesh, &space).unwrap().to_dense();
        // independent evaluation by quadrature of θ Σ ∫ (∂n+iκ)φ_c conj((∂n+iκ)φ_r)
        let theta = flux_weight(0.5, 9.0);
        let mut want = CMat::zeros((5, 5));
        for e in &mesh.boundary_edges {
            let (pts, wts) = segment_rule(&e.seg, 4, 20);
            for r in 0..5 {
                for cc in 0..5 {
                    let dr = space.dirs[r];
                    let dc = space.dirs[cc];
                    let fr = I * 9.0 * (dr[0] * e.normal[0] + dr[1] * e.normal[1] + 1.0);
                    let fc = I * 9.0 * (dc[0] * e.normal[0] + dc[1] * e.normal[1] + 1.0);
                    for (x, w) in pts.iter().zip(&wts) {
                        want[[r, cc]] += theta * *w * fc * space.eval(0, cc, *x) * (fr * space.eval(0, r, *x)).conj();
                    }
                }
            }
        }
        assert!(max_abs(&(&a - &want).view()) < 1e-11 * max_abs(&want.view()));
    }

    #[test]
    fn global_is_hermitian_positive_definite() {
        let (mesh, _, space) = small(2, 2, 5, 7.0);
        let a = assemble_global(&mesh, &space).unwrap().to_dense();
        assert!(hermitian_defect(&a.view()) < 1e-12);
        let (w, _) = eigh(&a.view()).unwrap();
        assert!(w[0] > 0.0);
    }

    #[test]
    fn local_forms_sum_to_global() {
        let (mesh, part, space) = small(3, 2, 4, 11.0);
        let a = assemble_global(&mesh, &space).unwrap().to_dense();
        let mut sum = CMat::zeros(a.raw_dim());
        for r in 0..part.n_subdomains() {
            let loc = assemble_local(&mesh, &part, &space, r);
            assert!(hermitian_defect(&loc.matrix.view()) < 1e-12);
            loc.expand_into(&mut sum, space.p);
        }
        assert!(max_abs(&(&sum - &a).view()) <= 1e-12 * max_abs(&a.view()));
    }

    #[test]
    fn local_forms_are_psd() {
        let (mesh, part, space) = small(2, 2, 5, 6.0);
        for r in 0..part.n_subdomains() {
            let loc = assemble_local(&mesh, &part, &space, r);
            let (w, _) = eigh(&loc.matrix.view()).unwrap();
            let scale = max_abs(&loc.matrix.view());
            assert!(w[0] > -1e-10 * scale);
        }
    }

    #[test]
    fn interior_elements_only_in_own_subdomain() {
        let (mesh, part, space) = small(2, 3, 3, 5.0);
        let a = assemble_global(&mesh, &space).unwrap();
        let m = part.subdomains[0].interior[4];
        let loc = assemble_local(&mesh, &part, &space, 0);
        let i = loc.elements.iter().position(|&e| e == m).unwrap();
        let blk = loc.matrix.slice(s![i * 3..i * 3 + 3, i * 3..i * 3 + 3]).to_owned();
        assert!(max_abs(&(&blk - a.get(m, m).unwrap()).view()) < 1e-12 * max_abs(&blk.view()));
        for r in 1..part.n_subdomains() {
            assert!(!part.subdomains[r].touching.contains(&m));
        }
    }

    #[test]
    fn rhs_vanishes_for_zero_data_and_interior_rows() {
        let (mesh, part, space) = small(2, 2, 4, 8.0);
        let b = assemble_rhs(&mesh, &space, &|_| C64::new(0.0, 0.0));
        assert!(b.iter().all(|z| z.norm() == 0.0));
        let b = assemble_rhs(&mesh, &space, &|x| C64::new(x[0] * x[0] + x[1] * x[1], 0.0));
        let m = part.subdomains[0].interior[3];
        let (ix, iy) = mesh.coords(m);
        assert!(ix > 0 && iy > 0 && ix + 1 < mesh.mx && iy + 1 < mesh.my);
        for l in 0..4 {
            assert_eq!(b[space.dof(m, l)], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn rhs_of_plane_wave_matches_closed_form() {
        let (mesh, _, space) = small(2, 2, 5, 10.0);
        let kappa = 10.0;
        let dir = [0.6, 0.8];
        let g = move |x: Point| C64::from_polar(1.0, kappa * (dir[0] * x[0] + dir[1] * x[1]));
        let b = assemble_rhs(&mesh, &space, &g);
        let h = mesh.h();
        let mut want = CVec::zeros(space.dim());
        for e in &mesh.boundary_edges {
            let theta = flux_weight(h, kappa);
            for l in 0..5 {
                let d = space.dirs[l];
                let coef = I * kappa * (d[0] * e.normal[0] + d[1] * e.normal[1] + 1.0);
                let kw = space.wavevector(e.k, l);
                let m = edge_moment(&e.seg, [kappa * dir[0] - kw[0], kappa * dir[1] - kw[1]]);
                want[space.dof(e.k, l)] += theta * coef.conj() * m;
            }
        }
        let err = (&b - &want).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let scale = want.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(err < 1e-12 * scale);
    }

    #[test]
    fn dimension_matches_element_count() {
        let (mesh, _) = build_mesh(Rect::new(0.0, 0.0, 2.0, 1.0), 4, 4, 8).unwrap();
        let space = PlaneWaveSpace::uniform(13, mesh.n_elements(), 20.0 * std::f64::consts::PI).unwrap();
        assert_eq!(space.dim(), 15925);
    }
}
