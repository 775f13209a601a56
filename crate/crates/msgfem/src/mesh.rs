//! Uniform Cartesian Q1 mesh on the unit square with the mixed boundary
//! split used throughout: Dirichlet on the vertical sides, Neumann on the
//! horizontal ones (an all-Dirichlet layout is available for verification
//! problems).

use crate::error::{Error, Result};

/// How the boundary of the unit square is split into Dirichlet/Neumann parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryLayout {
    /// Dirichlet on {x=0} and {x=1}, Neumann on {y=0} and {y=1}.
    /// Corner nodes count as Dirichlet.
    DirichletLeftRight,
    /// Dirichlet on the whole boundary.
    DirichletAll,
}

/// Classification of a mesh node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// An edge between two mesh nodes (endpoints stored with `a < b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge { a, b }
        } else {
            Edge { a: b, b: a }
        }
    }
}

/// Axis-aligned block of whole cells, half-open in cell indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl CellRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn n_cells(&self) -> usize {
        self.width() * self.height()
    }

    /// Node grid dimensions of the rect (one more than cells per axis).
    pub fn node_dims(&self) -> (usize, usize) {
        (self.width() + 1, self.height() + 1)
    }

    pub fn n_nodes(&self) -> usize {
        let (w, h) = self.node_dims();
        w * h
    }

    pub fn contains_cell(&self, cx: usize, cy: usize) -> bool {
        cx >= self.x0 && cx < self.x1 && cy >= self.y0 && cy < self.y1
    }

    pub fn contains_rect(&self, other: &CellRect) -> bool {
        self.x0 <= other.x0 && other.x1 <= self.x1 && self.y0 <= other.y0 && other.y1 <= self.y1
    }

    /// Grow by `layers` cells on every side, clipped to the mesh.
    pub fn dilate(&self, layers: usize, mesh: &GridMesh) -> CellRect {
        CellRect {
            x0: self.x0.saturating_sub(layers),
            x1: (self.x1 + layers).min(mesh.n_cells_x()),
            y0: self.y0.saturating_sub(layers),
            y1: (self.y1 + layers).min(mesh.n_cells_y()),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let xs = self.x0..self.x1;
        (self.y0..self.y1).flat_map(move |cy| xs.clone().map(move |cx| (cx, cy)))
    }

    /// Local index of a node of the rect (row-major within the rect).
    pub fn local_node(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix >= self.x0 && ix <= self.x1 && iy >= self.y0 && iy <= self.y1);
        (iy - self.y0) * (self.width() + 1) + (ix - self.x0)
    }

    pub fn local_node_coords(&self, local: usize) -> (usize, usize) {
        let w = self.width() + 1;
        (local % w + self.x0, local / w + self.y0)
    }

    /// Global node ids of the rect in rect-row-major (= ascending global) order.
    pub fn global_nodes(&self, mesh: &GridMesh) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(self.n_nodes());
        for iy in self.y0..=self.y1 {
            for ix in self.x0..=self.x1 {
                nodes.push(mesh.node_id(ix, iy));
            }
        }
        nodes
    }
}

/// Uniform Cartesian mesh of bilinear quadrilaterals on [0,1]^2.
///
/// Nodes and elements are indexed densely, 0-based and row-major. Element
/// corner nodes are listed counterclockwise starting from the lower-left
/// corner.
#[derive(Debug, Clone)]
pub struct GridMesh {
    n_cells_x: usize,
    n_cells_y: usize,
    hx: f64,
    hy: f64,
    layout: BoundaryLayout,
}

impl GridMesh {
    pub fn new(n_cells_x: usize, n_cells_y: usize) -> Result<Self> {
        Self::with_layout(n_cells_x, n_cells_y, BoundaryLayout::DirichletLeftRight)
    }

    pub fn with_layout(
        n_cells_x: usize,
        n_cells_y: usize,
        layout: BoundaryLayout,
    ) -> Result<Self> {
        if n_cells_x < 2 || n_cells_y < 2 {
            return Err(Error::MeshTooSmall(n_cells_x, n_cells_y));
        }
        Ok(GridMesh {
            n_cells_x,
            n_cells_y,
            hx: 1.0 / n_cells_x as f64,
            hy: 1.0 / n_cells_y as f64,
            layout,
        })
    }

    pub fn n_cells_x(&self) -> usize {
        self.n_cells_x
    }

    pub fn n_cells_y(&self) -> usize {
        self.n_cells_y
    }

    /// Cell side length along x; equals the nominal mesh size h = 1/n_cells_x.
    pub fn h(&self) -> f64 {
        self.hx
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn layout(&self) -> BoundaryLayout {
        self.layout
    }

    pub fn n_nodes(&self) -> usize {
        (self.n_cells_x + 1) * (self.n_cells_y + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.n_cells_x * self.n_cells_y
    }

    pub fn node_id(&self, ix: usize, iy: usize) -> usize {
        iy * (self.n_cells_x + 1) + ix
    }

    pub fn node_coords_of(&self, node: usize) -> (usize, usize) {
        let w = self.n_cells_x + 1;
        (node % w, node / w)
    }

    pub fn node_xy(&self, node: usize) -> (f64, f64) {
        let (ix, iy) = self.node_coords_of(node);
        (ix as f64 * self.hx, iy as f64 * self.hy)
    }

    pub fn element_id(&self, cx: usize, cy: usize) -> usize {
        cy * self.n_cells_x + cx
    }

    pub fn element_coords_of(&self, element: usize) -> (usize, usize) {
        (element % self.n_cells_x, element / self.n_cells_x)
    }

    /// Corner nodes of a cell, counterclockwise from the lower-left corner.
    pub fn element_nodes(&self, element: usize) -> [usize; 4] {
        let (cx, cy) = self.element_coords_of(element);
        self.cell_nodes(cx, cy)
    }

    pub fn cell_nodes(&self, cx: usize, cy: usize) -> [usize; 4] {
        let n00 = self.node_id(cx, cy);
        let n10 = n00 + 1;
        let n01 = n00 + self.n_cells_x + 1;
        let n11 = n01 + 1;
        [n00, n10, n11, n01]
    }

    pub fn element_center(&self, element: usize) -> (f64, f64) {
        let (cx, cy) = self.element_coords_of(element);
        ((cx as f64 + 0.5) * self.hx, (cy as f64 + 0.5) * self.hy)
    }

    pub fn node_kind(&self, node: usize) -> NodeKind {
        let (ix, iy) = self.node_coords_of(node);
        let on_lr = ix == 0 || ix == self.n_cells_x;
        let on_tb = iy == 0 || iy == self.n_cells_y;
        match self.layout {
            BoundaryLayout::DirichletLeftRight => {
                if on_lr {
                    NodeKind::Dirichlet
                } else if on_tb {
                    NodeKind::Neumann
                } else {
                    NodeKind::Interior
                }
            }
            BoundaryLayout::DirichletAll => {
                if on_lr || on_tb {
                    NodeKind::Dirichlet
                } else {
                    NodeKind::Interior
                }
            }
        }
    }

    pub fn is_dirichlet_node(&self, node: usize) -> bool {
        self.node_kind(node) == NodeKind::Dirichlet
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.node_kind(node) != NodeKind::Interior
    }

    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&k| self.is_dirichlet_node(k)).collect()
    }

    /// Boundary edges carrying Neumann data, i.e. lying on the horizontal
    /// sides for the mixed layout (empty for the all-Dirichlet layout).
    pub fn neumann_edges(&self) -> Vec<Edge> {
        match self.layout {
            BoundaryLayout::DirichletAll => Vec::new(),
            BoundaryLayout::DirichletLeftRight => {
                let mut edges = Vec::with_capacity(2 * self.n_cells_x);
                for ix in 0..self.n_cells_x {
                    edges.push(Edge::new(self.node_id(ix, 0), self.node_id(ix + 1, 0)));
                    edges.push(Edge::new(
                        self.node_id(ix, self.n_cells_y),
                        self.node_id(ix + 1, self.n_cells_y),
                    ));
                }
                edges
            }
        }
    }

    /// All edges on the boundary of the square.
    pub fn boundary_edges(&self) -> Vec<Edge> {
        let mut edges = Vec::with_capacity(2 * (self.n_cells_x + self.n_cells_y));
        for ix in 0..self.n_cells_x {
            edges.push(Edge::new(self.node_id(ix, 0), self.node_id(ix + 1, 0)));
            edges.push(Edge::new(
                self.node_id(ix, self.n_cells_y),
                self.node_id(ix + 1, self.n_cells_y),
            ));
        }
        for iy in 0..self.n_cells_y {
            edges.push(Edge::new(self.node_id(0, iy), self.node_id(0, iy + 1)));
            edges.push(Edge::new(
                self.node_id(self.n_cells_x, iy),
                self.node_id(self.n_cells_x, iy + 1),
            ));
        }
        edges
    }

    /// Length of a mesh edge; errors when the node pair is not grid-adjacent.
    pub fn edge_length(&self, edge: Edge) -> Result<f64> {
        let (ax, ay) = self.node_coords_of(edge.a);
        let (bx, by) = self.node_coords_of(edge.b);
        if edge.a >= self.n_nodes() || edge.b >= self.n_nodes() {
            return Err(Error::EdgeNotInMesh { a: edge.a, b: edge.b });
        }
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        match (dx, dy) {
            (1, 0) => Ok(self.hx),
            (0, 1) => Ok(self.hy),
            _ => Err(Error::EdgeNotInMesh { a: edge.a, b: edge.b }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_on_2x2() {
        let mesh = GridMesh::new(2, 2).unwrap();
        assert_eq!(mesh.n_nodes(), 9);
        assert_eq!(mesh.n_elements(), 4);
        let boundary = (0..9).filter(|&k| mesh.is_boundary_node(k)).count();
        assert_eq!(boundary, 8);
        assert_eq!(9 - boundary, 1);
    }

    #[test]
    fn paper_scale_mesh() {
        let mesh = GridMesh::new(400, 400).unwrap();
        assert_eq!(mesh.h(), 1.0 / 400.0);
        assert_eq!(mesh.n_nodes(), 160_801);
    }

    #[test]
    fn element_indexing_3x2() {
        let mesh = GridMesh::new(3, 2).unwrap();
        assert_eq!(mesh.h(), 1.0 / 3.0);
        let mut nodes = mesh.element_nodes(0);
        nodes.sort_unstable();
        assert_eq!(nodes, [0, 1, 4, 5]);
        // counterclockwise from lower-left
        assert_eq!(mesh.element_nodes(0), [0, 1, 5, 4]);
    }

    #[test]
    fn boundary_split_matches_mixed_layout() {
        let mesh = GridMesh::new(4, 4).unwrap();
        // corners are Dirichlet (Dirichlet wins ties)
        assert_eq!(mesh.node_kind(mesh.node_id(0, 0)), NodeKind::Dirichlet);
        assert_eq!(mesh.node_kind(mesh.node_id(4, 4)), NodeKind::Dirichlet);
        assert_eq!(mesh.node_kind(mesh.node_id(2, 0)), NodeKind::Neumann);
        assert_eq!(mesh.node_kind(mesh.node_id(2, 4)), NodeKind::Neumann);
        assert_eq!(mesh.node_kind(mesh.node_id(0, 2)), NodeKind::Dirichlet);
        assert_eq!(mesh.node_kind(mesh.node_id(2, 2)), NodeKind::Interior);
    }

    #[test]
    fn rejects_tiny_mesh() {
        assert!(GridMesh::new(1, 2).is_err());
        assert!(GridMesh::new(2, 1).is_err());
    }

    #[test]
    fn edge_lengths() {
        let mesh = GridMesh::new(3, 2).unwrap();
        let horizontal = Edge::new(0, 1);
        let vertical = Edge::new(0, 4);
        assert_eq!(mesh.edge_length(horizontal).unwrap(), 1.0 / 3.0);
        assert_eq!(mesh.edge_length(vertical).unwrap(), 0.5);
        assert!(mesh.edge_length(Edge::new(0, 5)).is_err());
    }
}
