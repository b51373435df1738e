//! Interior/interface splitting, subdomain Schur complements and the
//! assembled interface operator.
//!
//! Everything here works on a [`Substructure`]: global dofs, per-subdomain
//! dense local matrices, and the face/vertex grouping of interface dofs. The
//! element-level discretization and every agglomerated multilevel problem
//! share this description.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg::{ct, hermitian_part, schur_complement, select, select_vec, CMat, CVec, Cholesky, CsrMat, SparseCholesky, C64};
use crate::mesh::{CoarsePartition, RectMesh};
use crate::pwls::{assemble_local_from_pieces, BlockMatrix, PlaneWaveSpace};

/// Interior and interface dof sets. The interface layout `gamma` lists the
/// face blocks in face order followed by the vertex blocks.
#[derive(Debug, Clone)]
pub struct DofPartition {
    pub n_dofs: usize,
    pub interior: Vec<Vec<usize>>,
    pub faces: Vec<Vec<usize>>,
    pub vertices: Vec<Vec<usize>>,
    /// Global dof of each interface coefficient.
    pub gamma: Vec<usize>,
    /// Offset of each face block, then each vertex block, in `gamma`.
    face_offsets: Vec<usize>,
    vertex_offsets: Vec<usize>,
}

impl DofPartition {
    pub fn new(n_dofs: usize, interior: Vec<Vec<usize>>, faces: Vec<Vec<usize>>, vertices: Vec<Vec<usize>>) -> Result<Self> {
        let mut gamma = Vec::new();
        let mut face_offsets = Vec::with_capacity(faces.len());
        for f in &faces {
            face_offsets.push(gamma.len());
            gamma.extend_from_slice(f);
        }
        let mut vertex_offsets = Vec::with_capacity(vertices.len());
        for v in &vertices {
            vertex_offsets.push(gamma.len());
            gamma.extend_from_slice(v);
        }
        let mut seen = vec![false; n_dofs];
        for &d in gamma.iter().chain(interior.iter().flatten()) {
            if d >= n_dofs || seen[d] {
                return Err(Error::InvalidInput(format!("dof {d} is out of range or assigned twice")));
            }
            seen[d] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("some dofs are neither interior nor interface".into()));
        }
        Ok(Self {
            n_dofs,
            interior,
            faces,
            vertices,
            gamma,
            face_offsets,
            vertex_offsets,
        })
    }

    pub fn n_gamma(&self) -> usize {
        self.gamma.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.iter().map(|v| v.len()).sum()
    }

    /// Interface-layout indices of face `k`.
    pub fn face_range(&self, k: usize) -> std::ops::Range<usize> {
        let o = self.face_offsets[k];
        o..o + self.faces[k].len()
    }

    /// Interface-layout indices of vertex `v`.
    pub fn vertex_range(&self, v: usize) -> std::ops::Range<usize> {
        let o = self.vertex_offsets[v];
        o..o + self.vertices[v].len()
    }

    /// Restriction of a full vector to the interface layout.
    pub fn restrict(&self, u: &CVec) -> CVec {
        select_vec(&u.view(), &self.gamma)
    }
}

/// Element-level dof partition: interior elements per subdomain, face strips
/// and vertex patches.
pub fn split_dofs(part: &CoarsePartition, space: &PlaneWaveSpace) -> Result<DofPartition> {
    DofPartition::new(
        space.dim(),
        part.subdomains.iter().map(|s| space.dofs_of(&s.interior)).collect(),
        part.faces.iter().map(|f| space.dofs_of(&f.elements)).collect(),
        part.vertices.iter().map(|v| space.dofs_of(&v.elements)).collect(),
    )
}

/// Subdomain matrix over a list of global dofs, kept in sparse form.
#[derive(Debug, Clone)]
pub struct LocalMatrix {
    pub dofs: Vec<usize>,
    pub matrix: CsrMat,
}

impl LocalMatrix {
    pub fn new(dofs: Vec<usize>, matrix: &CMat) -> Self {
        Self {
            dofs,
            matrix: CsrMat::from_dense(&matrix.view()),
        }
    }

    pub fn dense(&self) -> CMat {
        self.matrix.to_dense()
    }
}

/// One level of a substructured problem.
#[derive(Debug, Clone)]
pub struct Substructure {
    pub dofs: DofPartition,
    pub locals: Vec<LocalMatrix>,
    /// Subdomain pair `(r, j)`, `r < j`, sharing each face.
    pub face_sides: Vec<(usize, usize)>,
    pub vertex_subdomains: Vec<Vec<usize>>,
    /// Subdomain grid size and the grid position of each subdomain.
    pub grid: (usize, usize),
    pub coords: Vec<(usize, usize)>,
}

impl Substructure {
    /// Element-level substructure from the mesh, partition and basis.
    pub fn from_mesh(mesh: &RectMesh, part: &CoarsePartition, space: &PlaneWaveSpace) -> Result<Self> {
        let dofs = split_dofs(part, space)?;
        let pieces = crate::mesh::clip_edges_to_subdomains(mesh, part);
        let locals = (0..part.n_subdomains())
            .map(|r| {
                let loc = assemble_local_from_pieces(mesh, part, space, r, &pieces[r]);
                LocalMatrix::new(space.dofs_of(&loc.elements), &loc.matrix)
            })
            .collect();
        Ok(Self {
            dofs,
            locals,
            face_sides: part.faces.iter().map(|f| f.sides).collect(),
            vertex_subdomains: part.vertices.iter().map(|v| v.subdomains.clone()).collect(),
            grid: (part.dx, part.dy),
            coords: part.subdomains.iter().map(|s| (s.sx, s.sy)).collect(),
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.locals.len()
    }

    pub fn n_faces(&self) -> usize {
        self.face_sides.len()
    }

    /// Faces of each subdomain, ascending.
    pub fn subdomain_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_subdomains()];
        for (k, &(r, j)) in self.face_sides.iter().enumerate() {
            out[r].push(k);
            out[j].push(k);
        }
        out
    }

    /// Vertices of each subdomain, ascending.
    pub fn subdomain_vertices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_subdomains()];
        for (v, subs) in self.vertex_subdomains.iter().enumerate() {
            for &r in subs {
                out[r].push(v);
            }
        }
        out
    }

    /// Largest number of faces on one subdomain.
    pub fn max_faces(&self) -> usize {
        self.subdomain_faces().iter().map(|f| f.len()).max().unwrap_or(0)
    }

    /// Dense global matrix `Σ_r R_r^T A_r R_r`.
    pub fn assemble_dense(&self) -> CMat {
        let n = self.dofs.n_dofs;
        let mut a = CMat::zeros((n, n));
        for loc in &self.locals {
            crate::linalg::add_block(&mut a, &loc.dofs, &loc.dofs, &loc.dense().view());
        }
        a
    }
}

/// A face block seen from one subdomain: the face index and the positions of
/// its dofs in the subdomain's interface list.
#[derive(Debug, Clone)]
pub struct LocalFace {
    pub face: usize,
    pub positions: Vec<usize>,
}

/// Interface Schur complement `S_Γ^(r)` of one subdomain together with the
/// factorized interior block used for extensions.
#[derive(Debug, Clone)]
pub struct LocalSchur {
    pub subdomain: usize,
    /// Interface-layout index of each local interface coefficient: the
    /// subdomain's faces in ascending order, then its vertices.
    pub gamma: Vec<usize>,
    pub faces: Vec<LocalFace>,
    /// Positions of the vertex blocks in `gamma`.
    pub vertex_positions: Vec<usize>,
    /// Global interior dofs.
    pub interior: Vec<usize>,
    pub s: CMat,
    /// `A_II^(r)` factor and `A_IΓ^(r)`.
    interior_factor: SparseCholesky,
    a_ig: CsrMat,
}

impl LocalSchur {
    pub fn build(sub: &Substructure, r: usize, faces: &[usize], vertices: &[usize]) -> Result<Self> {
        let loc = &sub.locals[r];
        let mut pos = HashMap::with_capacity(loc.dofs.len());
        for (i, &d) in loc.dofs.iter().enumerate() {
            pos.insert(d, i);
        }
        let lookup = |d: usize| -> Result<usize> {
            pos.get(&d)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("dof {d} missing from the local matrix of subdomain {r}")))
        };
        let mut gamma = Vec::new();
        let mut keep = Vec::new();
        let mut local_faces = Vec::with_capacity(faces.len());
        for &k in faces {
            let start = gamma.len();
            for (g, &d) in sub.dofs.face_range(k).zip(&sub.dofs.faces[k]) {
                gamma.push(g);
                keep.push(lookup(d)?);
            }
            local_faces.push(LocalFace {
                face: k,
                positions: (start..gamma.len()).collect(),
            });
        }
        let mut vertex_positions = Vec::new();
        for &v in vertices {
            for (g, &d) in sub.dofs.vertex_range(v).zip(&sub.dofs.vertices[v]) {
                vertex_positions.push(gamma.len());
                gamma.push(g);
                keep.push(lookup(d)?);
            }
        }
        let interior = sub.dofs.interior[r].clone();
        let elim = interior.iter().map(|&d| lookup(d)).collect::<Result<Vec<_>>>()?;
        if keep.len() + elim.len() != loc.dofs.len() {
            return Err(Error::InvalidInput(format!(
                "subdomain {r} touches dofs outside its interior and interface"
            )));
        }
        let dense = loc.dense();
        let a = &dense.view();
        let interior_factor = Cholesky::new(&select(a, &elim, &elim).view()).map_err(|_| Error::SingularInterior { subdomain: r })?;
        let a_ig = select(a, &elim, &keep);
        // A_ΓΓ - A_ΓI A_II^{-1} A_IΓ = A_ΓΓ - W^H W with W = L^{-1} A_IΓ
        let w = interior_factor.solve_lower(&a_ig.view());
        let s = hermitian_part(&(select(a, &keep, &keep) - ct(&w.view()).dot(&w)));
        Ok(Self {
            subdomain: r,
            gamma,
            faces: local_faces,
            vertex_positions,
            interior,
            s,
            interior_factor: SparseCholesky::new(&interior_factor),
            a_ig: CsrMat::from_dense(&a_ig.view()),
        })
    }

    pub fn n_gamma(&self) -> usize {
        self.gamma.len()
    }

    pub fn local_face(&self, k: usize) -> Option<&LocalFace> {
        self.faces.iter().find(|f| f.face == k)
    }

    /// Interior values of the discrete harmonic extension of local interface data.
    pub fn extend(&self, u_gamma: &ArrayView1<C64>) -> CVec {
        let rhs = self.a_ig.matvec(u_gamma);
        -self.interior_factor.solve_vec(&rhs.view())
    }

    /// `A_II^{-1} f` on the interior dofs.
    pub fn solve_interior(&self, f: &ArrayView1<C64>) -> CVec {
        self.interior_factor.solve_vec(f)
    }

    /// `A_ΓI A_II^{-1} f`.
    pub fn interior_to_gamma(&self, f: &ArrayView1<C64>) -> CVec {
        let y = self.interior_factor.solve_vec(f);
        self.a_ig.matvec_h(&y.view())
    }
}

/// `S_Fk^(r)`: the face block of the subdomain interface Schur complement.
pub fn face_schur(local: &LocalSchur, k: usize) -> Result<CMat> {
    let f = local.local_face(k).ok_or(Error::Face {
        face: k,
        msg: format!("not a face of subdomain {}", local.subdomain),
    })?;
    Ok(select(&local.s.view(), &f.positions, &f.positions))
}

/// `S̄_Fk^(r)`: every local dof except face `k` eliminated.
pub fn minimal_face_schur(local: &LocalSchur, k: usize) -> Result<CMat> {
    let f = local.local_face(k).ok_or(Error::Face {
        face: k,
        msg: format!("not a face of subdomain {}", local.subdomain),
    })?;
    let rest: Vec<usize> = (0..local.n_gamma()).filter(|i| !f.positions.contains(i)).collect();
    schur_complement(&local.s.view(), &f.positions, &rest).map_err(|_| Error::Face {
        face: k,
        msg: format!("singular complement block on subdomain {}", local.subdomain),
    })
}

/// The assembled interface operator `Ŝ = Σ_r R_r^T S_Γ^(r) R_r` with the
/// subdomain data needed to condense and recover the interior.
#[derive(Debug, Clone)]
pub struct SchurOperator {
    pub n_gamma: usize,
    pub locals: Vec<LocalSchur>,
}

impl SchurOperator {
    pub fn new(sub: &Substructure) -> Result<Self> {
        let faces = sub.subdomain_faces();
        let verts = sub.subdomain_vertices();
        let locals = (0..sub.n_subdomains())
            .map(|r| LocalSchur::build(sub, r, &faces[r], &verts[r]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_gamma: sub.dofs.n_gamma(),
            locals,
        })
    }

    pub fn apply(&self, x: &CVec) -> CVec {
        let mut y = CVec::zeros(self.n_gamma);
        for loc in &self.locals {
            let xl = select_vec(&x.view(), &loc.gamma);
            let yl = loc.s.dot(&xl);
            for (&g, v) in loc.gamma.iter().zip(yl.iter()) {
                y[g] += v;
            }
        }
        y
    }

    /// Dense `Ŝ`, for tests and small direct solves.
    pub fn to_dense(&self) -> CMat {
        let mut s = Array2::zeros((self.n_gamma, self.n_gamma));
        for loc in &self.locals {
            crate::linalg::add_block(&mut s, &loc.gamma, &loc.gamma, &loc.s.view());
        }
        s
    }

    /// Condensed right-hand side `b_Γ − Σ_r A_ΓI^(r) (A_II^(r))^{-1} b_I^(r)`.
    pub fn condense_rhs(&self, dofs: &DofPartition, b: &CVec) -> CVec {
        let mut g = dofs.restrict(b);
        for loc in &self.locals {
            let bi = select_vec(&b.view(), &loc.interior);
            let corr = loc.interior_to_gamma(&bi.view());
            for (&k, v) in loc.gamma.iter().zip(corr.iter()) {
                g[k] -= v;
            }
        }
        g
    }

    /// Full vector from interface values: interior `A_II^{-1}(b_I − A_IΓ u_Γ)`.
    pub fn recover(&self, dofs: &DofPartition, b: &CVec, u_gamma: &CVec) -> CVec {
        let mut u = CVec::zeros(dofs.n_dofs);
        for (&d, v) in dofs.gamma.iter().zip(u_gamma.iter()) {
            u[d] = *v;
        }
        for loc in &self.locals {
            let ug = select_vec(&u_gamma.view(), &loc.gamma);
            let rhs = select_vec(&b.view(), &loc.interior) - loc.a_ig.matvec(&ug.view());
            let ui = loc.solve_interior(&rhs.view());
            for (&d, v) in loc.interior.iter().zip(ui.iter()) {
                u[d] = *v;
            }
        }
        u
    }

    /// Discrete harmonic extension of interface values (zero interior data).
    pub fn harmonic_extend(&self, dofs: &DofPartition, u_gamma: &CVec) -> CVec {
        self.recover(dofs, &CVec::zeros(dofs.n_dofs), u_gamma)
    }
}

/// Global-route Schur complement `A_ΓΓ − A_ΓI A_II^{-1} A_IΓ` from the
/// assembled block matrix, dense. Only used to cross-check [`SchurOperator`].
pub fn global_schur_dense(a: &BlockMatrix, dofs: &DofPartition) -> Result<CMat> {
    let full = a.to_dense();
    let interior: Vec<usize> = dofs.interior.iter().flatten().copied().collect();
    schur_complement(&full.view(), &dofs.gamma, &interior)
}
