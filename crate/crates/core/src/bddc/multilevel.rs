use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{pcg, CoarseSolve, PartiallyAssembled};
use crate::adaptive::{build_coarse_space, CoarseSpace, PrimalOrigin, Scaling};
use crate::error::{Error, Result};
use crate::linalg::{add_block, CMat, CVec};
use crate::schur::{DofPartition, LocalMatrix, SchurOperator, Substructure};

/// Preconditioner settings shared by all levels.
#[derive(Debug, Clone)]
pub struct BddcOptions {
    pub scaling: Scaling,
    pub theta: f64,
    /// Total number of levels, at least 2.
    pub levels: usize,
    pub inner_tol: f64,
    pub inner_maxit: usize,
    pub seed: u64,
}

/// Sizes of one level of the hierarchy.
#[derive(Debug, Clone, Serialize)]
pub struct LevelInfo {
    pub level: usize,
    pub subdomains: usize,
    pub dofs: usize,
    pub interface_dofs: usize,
    pub pnum: usize,
}

/// A level `s ≥ 1` problem solved inexactly by PCG with its own BDDC.
#[derive(Debug)]
pub struct InnerLevel {
    pub sub: Substructure,
    pub op: SchurOperator,
    pub pa: PartiallyAssembled,
    pub tol: f64,
    pub maxit: usize,
}

impl InnerLevel {
    pub fn solve(&self, g: &CVec) -> Result<CVec> {
        let gg = self.op.condense_rhs(&self.sub.dofs, g);
        let (x, stats) = pcg(|v| Ok(self.op.apply(v)), |v| self.pa.apply_preconditioner(v), &gg, self.tol, self.maxit)?;
        if !stats.converged {
            log::warn!("inner coarse solve stopped at {} iterations", stats.iterations);
        }
        Ok(self.op.recover(&self.sub.dofs, g, &x))
    }
}

/// Top-level BDDC: the interface operator, the adaptive coarse space of the
/// finest level and the preconditioner with its (possibly recursive) coarse
/// solver.
#[derive(Debug)]
pub struct Bddc {
    pub op: SchurOperator,
    pub cs: CoarseSpace,
    pub pa: PartiallyAssembled,
    pub levels: Vec<LevelInfo>,
}

impl Bddc {
    /// Size of the directly factorized coarse matrix.
    pub fn coarsest_dofs(&self) -> usize {
        self.levels.last().map(|l| l.pnum).unwrap_or(0)
    }
}

pub fn build_bddc(sub: &Substructure, opts: &BddcOptions) -> Result<Bddc> {
    if opts.levels < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 levels, got {}", opts.levels)));
    }
    let mut levels = Vec::new();
    let (op, cs, pa) = build_level(sub, 0, opts, &mut levels)?;
    Ok(Bddc { op, cs, pa, levels })
}

fn build_level(sub: &Substructure, depth: usize, opts: &BddcOptions, infos: &mut Vec<LevelInfo>) -> Result<(SchurOperator, CoarseSpace, PartiallyAssembled)> {
    let op = SchurOperator::new(sub)?;
    let cs = build_coarse_space(sub, &op, opts.scaling, opts.theta, opts.seed)?;
    let mut pa = PartiallyAssembled::setup(sub, &op, &cs)?;
    infos.push(LevelInfo {
        level: depth,
        subdomains: sub.n_subdomains(),
        dofs: sub.dofs.n_dofs,
        interface_dofs: sub.dofs.n_gamma(),
        pnum: cs.pnum,
    });
    log::info!("level {depth}: {} subdomains, {} interface dofs, {} primal", sub.n_subdomains(), sub.dofs.n_gamma(), cs.pnum);
    if depth + 2 >= opts.levels {
        pa = pa.with_direct_coarse()?;
    } else {
        let next = agglomerate(sub, &cs, &pa, depth + 1)?;
        let (op2, _, pa2) = build_level(&next, depth + 1, opts, infos)?;
        pa.coarse = CoarseSolve::Inner(Box::new(InnerLevel {
            sub: next,
            op: op2,
            pa: pa2,
            tol: opts.inner_tol,
            maxit: opts.inner_maxit,
        }));
    }
    Ok((op, cs, pa))
}

/// Next-level substructure: the subdomains become elements, grouped 2×2
/// into coarse subdomains. Each primal dof is interior, face or vertex
/// according to how many coarse subdomains its generating face or vertex
/// touches (1, 2 or 4).
pub fn agglomerate(sub: &Substructure, cs: &CoarseSpace, pa: &PartiallyAssembled, level: usize) -> Result<Substructure> {
    let (dx, dy) = sub.grid;
    if dx % 2 != 0 || dy % 2 != 0 {
        return Err(Error::Agglomeration {
            level,
            msg: format!("subdomain grid {dx}x{dy} is not even"),
        });
    }
    let (cx, cy) = (dx / 2, dy / 2);
    if cx < 2 && cy < 2 {
        return Err(Error::Agglomeration {
            level,
            msg: "a single coarse subdomain has no interface".into(),
        });
    }
    let parent: Vec<usize> = sub.coords.iter().map(|&(sx, sy)| (sy / 2) * cx + sx / 2).collect();
    let n_coarse = cx * cy;
    let mut interior = vec![Vec::new(); n_coarse];
    let mut faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut vertices: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, origin) in cs.origins().into_iter().enumerate() {
        let mut set: Vec<usize> = match origin {
            PrimalOrigin::Face(k) => vec![parent[sub.face_sides[k].0], parent[sub.face_sides[k].1]],
            PrimalOrigin::Vertex(v) => sub.vertex_subdomains[v].iter().map(|&r| parent[r]).collect(),
        };
        set.sort_unstable();
        set.dedup();
        match set.len() {
            1 => interior[set[0]].push(i),
            2 => faces.entry((set[0], set[1])).or_default().push(i),
            4 => vertices.entry(set).or_default().push(i),
            n => {
                return Err(Error::Agglomeration {
                    level,
                    msg: format!("primal dof {i} touches {n} coarse subdomains"),
                })
            }
        }
    }
    for yy in 0..cy {
        for xx in 0..cx {
            let r = yy * cx + xx;
            let neighbours = [(xx + 1 < cx).then(|| r + 1), (yy + 1 < cy).then(|| r + cx)];
            for j in neighbours.into_iter().flatten() {
                if !faces.contains_key(&(r, j)) {
                    return Err(Error::Agglomeration {
                        level,
                        msg: format!("empty coarse face between {r} and {j}"),
                    });
                }
            }
        }
    }
    let mut members = vec![Vec::new(); n_coarse];
    for (r, &c) in parent.iter().enumerate() {
        members[c].push(r);
    }
    let locals = members
        .iter()
        .map(|rs| {
            let mut dofs: Vec<usize> = rs.iter().flat_map(|&r| pa.blocks[r].primal.iter().copied()).collect();
            dofs.sort_unstable();
            dofs.dedup();
            let pos: HashMap<usize, usize> = dofs.iter().enumerate().map(|(i, &d)| (d, i)).collect();
            let mut matrix = CMat::zeros((dofs.len(), dofs.len()));
            for &r in rs {
                let b = &pa.blocks[r];
                let idx: Vec<usize> = b.primal.iter().map(|d| pos[d]).collect();
                add_block(&mut matrix, &idx, &idx, &b.coarse.view());
            }
            LocalMatrix::new(dofs, &matrix)
        })
        .collect();
    let face_sides: Vec<(usize, usize)> = faces.keys().copied().collect();
    let vertex_subdomains: Vec<Vec<usize>> = vertices.keys().cloned().collect();
    let dofs = DofPartition::new(cs.pnum, interior, faces.into_values().collect(), vertices.into_values().collect())?;
    Ok(Substructure {
        dofs,
        locals,
        face_sides,
        vertex_subdomains,
        grid: (cx, cy),
        coords: (0..n_coarse).map(|r| (r % cx, r / cx)).collect(),
    })
}
