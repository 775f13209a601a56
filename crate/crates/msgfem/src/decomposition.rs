//! Overlapping decomposition of the mesh into square subdomains, their
//! oversampling extensions, internal-dof bookkeeping and the discrete
//! partition-of-unity operators with zero extension.

use crate::error::{Error, Result};
use crate::mesh::{CellRect, Edge, GridMesh};
use crate::sparse::SparseVec;

/// Role of a node within a subdomain patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Hat function supported inside the closed patch and not constrained:
    /// a degree of freedom of the local test space.
    Free,
    /// On the artificial boundary (the part of the patch boundary inside
    /// the domain), not Dirichlet-constrained: Steklov/Schur dofs.
    Gamma,
    /// On the Dirichlet part of the outer boundary: eliminated.
    Dirichlet,
}

/// One subdomain (or oversampling domain): a clipped rectangle of whole
/// cells with its dof sets.
#[derive(Debug, Clone)]
pub struct Subdomain {
    pub index: usize,
    pub rect: CellRect,
    /// Global node ids, ascending (= rect row-major order).
    pub nodes: Vec<usize>,
    /// Classification aligned with `nodes`.
    pub class: Vec<NodeClass>,
    /// Internal dofs: hat-function support contained in the closed patch.
    /// Aligned with `nodes`; includes Dirichlet nodes on patch sides that
    /// lie on the outer boundary (they are excluded from trial spaces via
    /// the Dirichlet class, not from the support criterion).
    pub internal: Vec<bool>,
    pub touches_dirichlet: bool,
    pub touches_neumann: bool,
}

impl Subdomain {
    fn build(index: usize, rect: CellRect, mesh: &GridMesh) -> Self {
        let nodes = rect.global_nodes(mesh);
        let (nx, ny) = (mesh.n_cells_x(), mesh.n_cells_y());
        let mut class = Vec::with_capacity(nodes.len());
        let mut internal = Vec::with_capacity(nodes.len());
        let mut touches_dirichlet = false;
        let mut touches_neumann = false;
        for &node in &nodes {
            let (ix, iy) = mesh.node_coords_of(node);
            let on_artificial = (ix == rect.x0 && rect.x0 > 0)
                || (ix == rect.x1 && rect.x1 < nx)
                || (iy == rect.y0 && rect.y0 > 0)
                || (iy == rect.y1 && rect.y1 < ny);
            internal.push(!on_artificial);
            let c = match mesh.node_kind(node) {
                crate::mesh::NodeKind::Dirichlet => {
                    touches_dirichlet = true;
                    NodeClass::Dirichlet
                }
                kind => {
                    if kind == crate::mesh::NodeKind::Neumann {
                        touches_neumann = true;
                    }
                    if on_artificial {
                        NodeClass::Gamma
                    } else {
                        NodeClass::Free
                    }
                }
            };
            class.push(c);
        }
        Subdomain { index, rect, nodes, class, internal, touches_dirichlet, touches_neumann }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Local indices of the given class, in ascending node order.
    pub fn locals_of(&self, class: NodeClass) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&l| self.class[l] == class).collect()
    }

    /// Global ids of the internal dofs dof(omega).
    pub fn internal_nodes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .zip(&self.internal)
            .filter_map(|(&g, &int)| int.then_some(g))
            .collect()
    }

    /// Edges of the patch boundary that lie strictly inside the domain
    /// (the artificial boundary carrying the Steklov mass).
    pub fn artificial_edges(&self, mesh: &GridMesh) -> Vec<Edge> {
        let (nx, ny) = (mesh.n_cells_x(), mesh.n_cells_y());
        let r = &self.rect;
        let mut edges = Vec::new();
        if r.x0 > 0 {
            for iy in r.y0..r.y1 {
                edges.push(Edge::new(mesh.node_id(r.x0, iy), mesh.node_id(r.x0, iy + 1)));
            }
        }
        if r.x1 < nx {
            for iy in r.y0..r.y1 {
                edges.push(Edge::new(mesh.node_id(r.x1, iy), mesh.node_id(r.x1, iy + 1)));
            }
        }
        if r.y0 > 0 {
            for ix in r.x0..r.x1 {
                edges.push(Edge::new(mesh.node_id(ix, r.y0), mesh.node_id(ix + 1, r.y0)));
            }
        }
        if r.y1 < ny {
            for ix in r.x0..r.x1 {
                edges.push(Edge::new(mesh.node_id(ix, r.y1), mesh.node_id(ix + 1, r.y1)));
            }
        }
        edges
    }
}

/// Overlapping decomposition with oversampling domains and PU multiplicities.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub m: usize,
    pub overlap_layers: usize,
    pub oversample_layers: usize,
    /// Overlapping subdomains omega_i (m^2 of them, row-major by block).
    pub subdomains: Vec<Subdomain>,
    /// Oversampling domains omega_i^* (same order).
    pub oversampled: Vec<Subdomain>,
    /// Multiplicity mu_k = number of subdomains with k internal.
    pub multiplicity: Vec<u32>,
    /// Max number of subdomains sharing one element.
    pub kappa: usize,
    /// Same for the oversampling domains.
    pub kappa_star: usize,
    /// Nominal subdomain side length (ceil(n/m) + 2*overlap) * h.
    pub side_h: f64,
    /// Nominal oversampling side length side_h + 2*ell*h.
    pub side_h_star: f64,
}

impl Decomposition {
    pub fn new(
        mesh: &GridMesh,
        m: usize,
        overlap_layers: usize,
        oversample_layers: usize,
    ) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument { name: "m", value: m as f64 });
        }
        let min_cells = mesh.n_cells_x().min(mesh.n_cells_y());
        if m > min_cells {
            return Err(Error::TooManySubdomains(m, min_cells));
        }
        if overlap_layers < 1 {
            return Err(Error::OverlapTooSmall);
        }
        let bx = mesh.n_cells_x().div_ceil(m);
        let by = mesh.n_cells_y().div_ceil(m);
        let mut subdomains = Vec::with_capacity(m * m);
        let mut oversampled = Vec::with_capacity(m * m);
        for bj in 0..m {
            for bi in 0..m {
                let block = CellRect {
                    x0: bi * bx,
                    x1: ((bi + 1) * bx).min(mesh.n_cells_x()),
                    y0: bj * by,
                    y1: ((bj + 1) * by).min(mesh.n_cells_y()),
                };
                let index = bj * m + bi;
                let omega = block.dilate(overlap_layers, mesh);
                let star = omega.dilate(oversample_layers, mesh);
                subdomains.push(Subdomain::build(index, omega, mesh));
                oversampled.push(Subdomain::build(index, star, mesh));
            }
        }

        let mut multiplicity = vec![0u32; mesh.n_nodes()];
        for sub in &subdomains {
            for (local, &g) in sub.nodes.iter().enumerate() {
                if sub.internal[local] {
                    multiplicity[g] += 1;
                }
            }
        }

        let kappa = max_cell_overlap(mesh, subdomains.iter().map(|s| s.rect));
        let kappa_star = max_cell_overlap(mesh, oversampled.iter().map(|s| s.rect));

        let side_h = (bx + 2 * overlap_layers) as f64 * mesh.h();
        let side_h_star = side_h + 2.0 * oversample_layers as f64 * mesh.h();

        Ok(Decomposition {
            m,
            overlap_layers,
            oversample_layers,
            subdomains,
            oversampled,
            multiplicity,
            kappa,
            kappa_star,
            side_h,
            side_h_star,
        })
    }

    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// Oversampling ratio H / H^*.
    pub fn rho(&self) -> f64 {
        self.side_h / self.side_h_star
    }

    /// Applies the local PU operator: scales internal dofs by 1/mu, zeroes
    /// the rest. `v` is indexed like `subdomains[j].nodes`.
    pub fn pu_apply(&self, j: usize, v: &[f64]) -> Result<Vec<f64>> {
        let sub = &self.subdomains[j];
        crate::sparse::check_len(v, sub.n_nodes())?;
        let mut out = vec![0.0; v.len()];
        for (local, &g) in sub.nodes.iter().enumerate() {
            if sub.internal[local] {
                out[local] = v[local] / self.multiplicity[g] as f64;
            }
        }
        Ok(out)
    }

    /// Zero extension of a subdomain-local vector to a global one. Rejects
    /// vectors with nonnegligible entries outside dof(omega_j).
    pub fn zero_extend(&self, j: usize, v: &[f64], n_global: usize) -> Result<Vec<f64>> {
        let sub = &self.subdomains[j];
        crate::sparse::check_len(v, sub.n_nodes())?;
        let mut max_off = 0.0f64;
        for (local, &val) in v.iter().enumerate() {
            if !sub.internal[local] {
                max_off = max_off.max(val.abs());
            }
        }
        if max_off >= 1e-14 {
            return Err(Error::SupportViolation { subdomain: j, max_abs: max_off });
        }
        let mut out = vec![0.0; n_global];
        for (local, &g) in sub.nodes.iter().enumerate() {
            if sub.internal[local] {
                out[g] = v[local];
            }
        }
        Ok(out)
    }

    /// R_j^T Xi_j(v|omega_j) as a sparse global vector: PU weighting followed
    /// by zero extension, the gluing step of the method.
    pub fn glue(&self, j: usize, v: &[f64]) -> Result<SparseVec> {
        let sub = &self.subdomains[j];
        crate::sparse::check_len(v, sub.n_nodes())?;
        let mut pairs = Vec::new();
        for (local, &g) in sub.nodes.iter().enumerate() {
            if sub.internal[local] && v[local] != 0.0 {
                pairs.push((g, v[local] / self.multiplicity[g] as f64));
            }
        }
        Ok(SparseVec::from_pairs(pairs))
    }

    /// Restricts a global vector to the nodes of subdomain j.
    pub fn restrict(&self, j: usize, v: &[f64]) -> Vec<f64> {
        self.subdomains[j].nodes.iter().map(|&g| v[g]).collect()
    }

    /// Sum_j R_j^T Xi_j(v|omega_j), which must reproduce `v`.
    pub fn reconstruct(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; v.len()];
        for j in 0..self.n_subdomains() {
            let local = self.restrict(j, v);
            let weighted = self.pu_apply(j, &local)?;
            let sub = &self.subdomains[j];
            for (l, &g) in sub.nodes.iter().enumerate() {
                out[g] += weighted[l];
            }
        }
        Ok(out)
    }

    /// Per-subdomain bounding boxes and dof counts as CSV (debug dump).
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "subdomain,x0,x1,y0,y1,star_x0,star_x1,star_y0,star_y1,n_dofs,n_internal,star_n_dofs,star_n_gamma"
        )?;
        for (sub, star) in self.subdomains.iter().zip(&self.oversampled) {
            let internal = sub.internal.iter().filter(|&&b| b).count();
            let gamma = star.locals_of(NodeClass::Gamma).len();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                sub.index,
                sub.rect.x0,
                sub.rect.x1,
                sub.rect.y0,
                sub.rect.y1,
                star.rect.x0,
                star.rect.x1,
                star.rect.y0,
                star.rect.y1,
                sub.n_nodes(),
                internal,
                star.n_nodes(),
                gamma
            )?;
        }
        Ok(())
    }
}

fn max_cell_overlap(mesh: &GridMesh, rects: impl Iterator<Item = CellRect>) -> usize {
    let mut counts = vec![0u16; mesh.n_elements()];
    for rect in rects {
        for (cx, cy) in rect.cells() {
            counts[mesh.element_id(cx, cy)] += 1;
        }
    }
    counts.iter().copied().max().unwrap_or(0) as usize
}
