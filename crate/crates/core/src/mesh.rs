//! Conforming triangulations of polygonal domains.
//!
//! Cells are stored as vertex triples `[v0, v1, v2]` in counter-clockwise
//! order. The edge `(v0, v1)` is the refinement edge used by newest-vertex
//! bisection and `v2` is the newest vertex. Local edge `i` is the edge
//! opposite local vertex `i`, traversed counter-clockwise, so its outward
//! normal points to the right of the traversal direction.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Marker for a missing neighbour in [`EdgeTable::edge_cells`].
pub const NO_CELL: usize = usize::MAX;

/// Local edge index of the refinement edge `(v0, v1)`.
pub const REFINEMENT_EDGE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundaryFacet {
    pub cell: usize,
    pub local_edge: usize,
}

/// Global edge numbering derived from the cell list.
#[derive(Debug, Clone)]
pub struct EdgeTable {
    /// Endpoints of each edge, smaller index first.
    pub edges: Vec<[usize; 2]>,
    /// Global edge index of each local edge of each cell.
    pub cell_edges: Vec<[usize; 3]>,
    /// The one or two cells adjacent to each edge; the second slot is
    /// [`NO_CELL`] for boundary edges.
    pub edge_cells: Vec<[usize; 2]>,
}

impl EdgeTable {
    pub fn is_boundary(&self, edge: usize) -> bool {
        self.edge_cells[edge][1] == NO_CELL
    }
}

/// Which diagonal splits each square of a structured mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    /// From the lower-left to the upper-right corner.
    #[default]
    Right,
    /// From the lower-right to the upper-left corner.
    Left,
}

#[derive(Debug, Clone)]
pub struct Mesh<T: Real> {
    vertices: Vec<[T; 2]>,
    cells: Vec<[usize; 3]>,
    generation: Vec<u32>,
    topology: EdgeTable,
    boundary_facets: Vec<BoundaryFacet>,
}

#[inline]
fn local_edge_vertices(cell: &[usize; 3], local: usize) -> (usize, usize) {
    (cell[(local + 1) % 3], cell[(local + 2) % 3])
}

#[inline]
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::of(0.5)
}

fn point_segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let mut s = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2;
    if s < T::zero() {
        s = T::zero();
    } else if s > T::one() {
        s = T::one();
    }
    let q = [a[0] + s * d[0] - p[0], a[1] + s * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

fn build_topology(n_vertices: usize, cells: &[[usize; 3]]) -> Result<(EdgeTable, Vec<BoundaryFacet>)> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len() * 2);
    let mut edges = Vec::with_capacity(cells.len() * 2);
    let mut edge_cells: Vec<[usize; 2]> = Vec::with_capacity(cells.len() * 2);
    let mut cell_edges = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let mut ce = [0usize; 3];
        for (local, slot) in ce.iter_mut().enumerate() {
            let (a, b) = local_edge_vertices(cell, local);
            if a == b || a >= n_vertices || b >= n_vertices {
                return Err(Error::InvalidArgument(format!("cell {c} has invalid vertex indices {cell:?}")));
            }
            let key = edge_key(a, b);
            let e = *index.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edge_cells.push([NO_CELL, NO_CELL]);
                edges.len() - 1
            });
            let adj = &mut edge_cells[e];
            if adj[0] == NO_CELL {
                adj[0] = c;
            } else if adj[1] == NO_CELL {
                adj[1] = c;
            } else {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) is shared by more than two cells",
                    key.0, key.1
                )));
            }
            *slot = e;
        }
        cell_edges.push(ce);
    }
    let mut boundary_facets = Vec::new();
    for (c, ce) in cell_edges.iter().enumerate() {
        for (local, &e) in ce.iter().enumerate() {
            if edge_cells[e][1] == NO_CELL {
                boundary_facets.push(BoundaryFacet { cell: c, local_edge: local });
            }
        }
    }
    Ok((EdgeTable { edges, cell_edges, edge_cells }, boundary_facets))
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh from raw data, reorienting clockwise cells.
    ///
    /// Reorientation swaps `v0` and `v1`, which keeps the refinement edge.
    pub fn new(vertices: Vec<[T; 2]>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let generation = vec![0; cells.len()];
        Self::with_generation(vertices, cells, generation)
    }

    fn with_generation(vertices: Vec<[T; 2]>, mut cells: Vec<[usize; 3]>, generation: Vec<u32>) -> Result<Self> {
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("cell {c} references a vertex out of range")));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area < T::zero() {
                cell.swap(0, 1);
            } else if area == T::zero() {
                return Err(Error::InvalidArgument(format!("cell {c} is degenerate")));
            }
        }
        let (topology, boundary_facets) = build_topology(vertices.len(), &cells)?;
        Ok(Self { vertices, cells, generation, topology, boundary_facets })
    }

    /// Uniform criss-cross triangulation of the unit square with `n`
    /// intervals per side. Every square is split along the diagonal from its
    /// lower-left to its upper-right corner.
    pub fn unit_square(n: usize) -> Self {
        Self::unit_square_with(n, Diagonal::Right)
    }

    /// `n x n` squares, each split along the given diagonal.
    pub fn unit_square_with(n: usize, diagonal: Diagonal) -> Self {
        assert!(n >= 1, "unit_square needs at least one interval");
        let h = T::one() / T::of_usize(n);
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([T::of_usize(i) * h, T::of_usize(j) * h]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                // the shared diagonal is the refinement edge of both halves
                match diagonal {
                    Diagonal::Right => {
                        cells.push([p11, p00, p10]);
                        cells.push([p00, p11, p01]);
                    }
                    Diagonal::Left => {
                        cells.push([p10, p01, p00]);
                        cells.push([p01, p10, p11]);
                    }
                }
            }
        }
        Self::new(vertices, cells).expect("unit square mesh is valid")
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn generation(&self) -> &[u32] {
        &self.generation
    }

    pub fn topology(&self) -> &EdgeTable {
        &self.topology
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        self.topology.edges.len()
    }

    pub fn cell_points(&self, cell: usize) -> [[T; 2]; 3] {
        let c = &self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn area(&self, cell: usize) -> T {
        let [a, b, c] = self.cell_points(cell);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> T {
        (0..self.cell_count()).fold(T::zero(), |acc, c| acc + self.area(c))
    }

    pub fn centroid(&self, cell: usize) -> [T; 2] {
        let [a, b, c] = self.cell_points(cell);
        let third = T::one() / T::of(3.0);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    /// Longest edge length of a cell.
    pub fn diameter(&self, cell: usize) -> T {
        let p = self.cell_points(cell);
        let mut h = T::zero();
        for i in 0..3 {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            let d = ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt();
            if d > h {
                h = d;
            }
        }
        h
    }

    /// Endpoints of local edge `local` of `cell`, counter-clockwise.
    pub fn facet_points(&self, cell: usize, local: usize) -> ([T; 2], [T; 2]) {
        let (a, b) = local_edge_vertices(&self.cells[cell], local);
        (self.vertices[a], self.vertices[b])
    }

    /// Flags vertices lying on a boundary facet.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        for e in 0..self.edge_count() {
            if self.topology.is_boundary(e) {
                let [a, b] = self.topology.edges[e];
                mask[a] = true;
                mask[b] = true;
            }
        }
        mask
    }

    /// Distance from the centroid of `cell` to the domain boundary.
    pub fn boundary_distance(&self, cell: usize) -> T {
        self.point_boundary_distance(self.centroid(cell))
    }

    pub fn point_boundary_distance(&self, p: [T; 2]) -> T {
        let mut best: Option<T> = None;
        for f in &self.boundary_facets {
            let (a, b) = self.facet_points(f.cell, f.local_edge);
            let d = point_segment_distance(p, a, b);
            if best.is_none_or(|x| d < x) {
                best = Some(d);
            }
        }
        best.unwrap_or_else(T::zero)
    }

    /// Counts how many cells reference every edge.
    pub fn edge_census(&self) -> HashMap<(usize, usize), usize> {
        let mut census = HashMap::new();
        for cell in &self.cells {
            for local in 0..3 {
                let (a, b) = local_edge_vertices(cell, local);
                *census.entry(edge_key(a, b)).or_insert(0) += 1;
            }
        }
        census
    }

    /// Checks the structural invariants: orientation, edge multiplicity,
    /// boundary facet bookkeeping and the absence of hanging vertices.
    pub fn check_invariants(&self) -> Result<()> {
        for c in 0..self.cell_count() {
            if self.area(c) <= T::zero() {
                return Err(Error::InvalidArgument(format!("cell {c} has non-positive area")));
            }
        }
        let census = self.edge_census();
        let mut single: Vec<(usize, usize)> = Vec::new();
        for (&edge, &count) in &census {
            match count {
                1 => single.push(edge),
                2 => {}
                _ => return Err(Error::InvalidArgument(format!("edge {edge:?} has multiplicity {count}"))),
            }
        }
        let mut facets: Vec<(usize, usize)> = self
            .boundary_facets
            .iter()
            .map(|f| {
                let (a, b) = local_edge_vertices(&self.cells[f.cell], f.local_edge);
                edge_key(a, b)
            })
            .collect();
        single.sort_unstable();
        facets.sort_unstable();
        if single != facets {
            return Err(Error::InvalidArgument("boundary facets do not match single-multiplicity edges".into()));
        }
        // A hanging vertex sits in the interior of a boundary-looking edge.
        let on_boundary = self.boundary_vertex_mask();
        for &(a, b) in &single {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            for (v, p) in self.vertices.iter().enumerate() {
                if v == a || v == b || !on_boundary[v] {
                    continue;
                }
                let d = point_segment_distance(*p, pa, pb);
                let scale = (pb[0] - pa[0]).abs() + (pb[1] - pa[1]).abs();
                if d <= scale * T::of(1e-12) {
                    let inside = (p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1]);
                    let len2 = (pb[0] - pa[0]) * (pb[0] - pa[0]) + (pb[1] - pa[1]) * (pb[1] - pa[1]);
                    if inside > T::zero() && inside < len2 {
                        return Err(Error::InvalidArgument(format!("vertex {v} hangs on edge ({a}, {b})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Newest-vertex bisection of the marked cells with conformity closure.
    ///
    /// Every marked cell is bisected at least once. Unmarked cells are
    /// bisected only where a neighbouring refinement forces it.
    pub fn refine(&self, marked: &[usize]) -> Result<Self> {
        Ok(self.refine_with_parents(marked)?.0)
    }

    /// As `refine`, also returning the parent of every cell of the result.
    pub fn refine_with_parents(&self, marked: &[usize]) -> Result<(Self, Vec<usize>)> {
        let topo = &self.topology;
        let mut edge_marked = vec![false; self.edge_count()];
        let mut queue = Vec::new();
        for &c in marked {
            if c >= self.cell_count() {
                return Err(Error::InvalidArgument(format!("marked cell {c} out of range")));
            }
            let e = topo.cell_edges[c][REFINEMENT_EDGE];
            if !edge_marked[e] {
                edge_marked[e] = true;
                queue.push(e);
            }
        }
        if queue.is_empty() {
            return Ok((self.clone(), (0..self.cell_count()).collect()));
        }
        // closure: a cell with any marked edge must also bisect its refinement edge
        while let Some(e) = queue.pop() {
            for &c in &topo.edge_cells[e] {
                if c == NO_CELL {
                    continue;
                }
                let r = topo.cell_edges[c][REFINEMENT_EDGE];
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    queue.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, &[a, b]) in topo.edges.iter().enumerate() {
            if edge_marked[e] {
                let (pa, pb) = (vertices[a], vertices[b]);
                let half = T::of(0.5);
                vertices.push([(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]);
                midpoint.insert((a, b), vertices.len() - 1);
            }
        }

        let mut cells = Vec::with_capacity(self.cell_count() + 2 * midpoint.len());
        let mut generation = Vec::with_capacity(cells.capacity());
        let mut parent = Vec::with_capacity(cells.capacity());
        let mut stack = Vec::new();
        for (c, cell) in self.cells.iter().enumerate() {
            stack.push((*cell, self.generation[c]));
            while let Some((t, g)) = stack.pop() {
                let [v0, v1, v2] = t;
                match midpoint.get(&edge_key(v0, v1)) {
                    Some(&m) => {
                        stack.push(([v2, v0, m], g + 1));
                        stack.push(([v1, v2, m], g + 1));
                    }
                    None => {
                        cells.push(t);
                        generation.push(g);
                        parent.push(c);
                    }
                }
            }
        }
        Ok((Self::with_generation(vertices, cells, generation)?, parent))
    }

    /// Bisects the marked cells `bisections` times, the descendants of a
    /// marked cell being marked again in each round. Two rounds split every
    /// marked cell into at least four.
    pub fn refine_repeated(&self, marked: &[usize], bisections: usize) -> Result<Self> {
        let mut mesh = self.clone();
        let mut flags = vec![false; self.cell_count()];
        for &c in marked {
            if c >= self.cell_count() {
                return Err(Error::InvalidArgument(format!("marked cell {c} out of range")));
            }
            flags[c] = true;
        }
        for _ in 0..bisections {
            let current: Vec<usize> = (0..mesh.cell_count()).filter(|&c| flags[c]).collect();
            if current.is_empty() {
                break;
            }
            let (next, parent) = mesh.refine_with_parents(&current)?;
            flags = parent.iter().map(|&p| flags[p]).collect();
            mesh = next;
        }
        Ok(mesh)
    }

    /// Bisects every cell `levels` times.
    pub fn refine_uniformly(&self, levels: usize) -> Self {
        let mut mesh = self.clone();
        for _ in 0..levels {
            let all: Vec<usize> = (0..mesh.cell_count()).collect();
            mesh = mesh.refine(&all).expect("uniform refinement of a valid mesh");
        }
        mesh
    }

    /// Red refinement: every cell is split into four similar children.
    ///
    /// Returns the refined mesh and the parent cell of each child. The four
    /// children of cell `c` are stored at indices `4c..4c+4`, corner children
    /// first (at `v0`, `v1`, `v2`) and the interior child last.
    pub fn red_refine(&self) -> (Self, Vec<usize>) {
        let mut vertices = self.vertices.clone();
        let half = T::of(0.5);
        let mid: Vec<usize> = self
            .topology
            .edges
            .iter()
            .map(|&[a, b]| {
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                vertices.push([(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]);
                vertices.len() - 1
            })
            .collect();
        let mut cells = Vec::with_capacity(4 * self.cell_count());
        let mut parent = Vec::with_capacity(4 * self.cell_count());
        let mut generation = Vec::with_capacity(4 * self.cell_count());
        for (c, &[a, b, v]) in self.cells.iter().enumerate() {
            let ce = self.topology.cell_edges[c];
            // local edge i is opposite vertex i
            let (m_bc, m_ca, m_ab) = (mid[ce[0]], mid[ce[1]], mid[ce[2]]);
            cells.push([a, m_ab, m_ca]);
            cells.push([m_ab, b, m_bc]);
            cells.push([m_ca, m_bc, v]);
            cells.push([m_bc, m_ca, m_ab]);
            parent.extend_from_slice(&[c; 4]);
            generation.extend_from_slice(&[self.generation[c] + 2; 4]);
        }
        let mesh = Self::with_generation(vertices, cells, generation).expect("red refinement of a valid mesh");
        (mesh, parent)
    }

    /// Writes the mesh in the plain text exchange format.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "vertices {}", self.vertex_count()).ok();
        for p in &self.vertices {
            writeln!(s, "{:.17e} {:.17e}", p[0].to_f64_lossy(), p[1].to_f64_lossy()).ok();
        }
        writeln!(s, "cells {}", self.cell_count()).ok();
        for c in &self.cells {
            writeln!(s, "{} {} {}", c[0], c[1], c[2]).ok();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    /// Reads the plain text exchange format written by [`Mesh::write_text`].
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        let mut last = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            last = i + 1;
            let fields: Vec<String> = line.split_whitespace().map(String::from).collect();
            if !fields.is_empty() {
                rows.push((i + 1, fields));
            }
        }
        let mut reader = TextRows { rows: rows.into_iter(), end: last + 1 };
        let nv = reader.header("vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, f) = reader.next(2, "a vertex `x y`")?;
            vertices.push([T::of(parse_field(line, &f[0])?), T::of(parse_field(line, &f[1])?)]);
        }
        let nc = reader.header("cells")?;
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (line, f) = reader.next(3, "a cell `i j k`")?;
            let cell = [parse_field(line, &f[0])?, parse_field(line, &f[1])?, parse_field(line, &f[2])?];
            if let Some(&v) = cell.iter().find(|&&v| v >= nv) {
                return Err(Error::Parse { line, message: format!("vertex index {v} out of range") });
            }
            cells.push(cell);
        }
        if let Some((line, _)) = reader.rows.next() {
            return Err(Error::Parse { line, message: "unexpected content after the cells".into() });
        }
        Self::new(vertices, cells)
    }
}

/// Non-blank lines of a mesh file split into fields.
struct TextRows {
    rows: std::vec::IntoIter<(usize, Vec<String>)>,
    /// Line number reported at end of file.
    end: usize,
}

impl TextRows {
    fn next(&mut self, arity: usize, what: &str) -> Result<(usize, Vec<String>)> {
        let (line, fields) = self.rows.next().ok_or_else(|| Error::Parse {
            line: self.end,
            message: format!("unexpected end of file, expected {what}"),
        })?;
        if fields.len() != arity {
            return Err(Error::Parse { line, message: format!("expected {what}, found {} fields", fields.len()) });
        }
        Ok((line, fields))
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let (line, fields) = self.next(2, &format!("`{name} <count>`"))?;
        if fields[0] != name {
            return Err(Error::Parse { line, message: format!("expected `{name} <count>`") });
        }
        parse_field(line, &fields[1])
    }
}

fn parse_field<V: std::str::FromStr>(line: usize, field: &str) -> Result<V> {
    field.parse().map_err(|_| Error::Parse { line, message: format!("invalid number `{field}`") })
}
