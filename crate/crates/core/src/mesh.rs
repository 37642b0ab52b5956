//! Structured tetrahedral meshing of a [`SolidOutline`] and region-of-interest
//! selection for candidate inclusions.
//!
//! The bounding box of the outline is divided into cubic cells whose edge
//! divides the outline's grid unit. Cells whose centre falls inside a cavity
//! are removed; every remaining cell inside a body is split into five tets
//! with alternating orientation so that face diagonals match across
//! neighbours.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::candidates::CandidatePath;
use crate::geometry::SolidOutline;
use crate::Vec3;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("resolution {resolution} mm must be positive and at most {limit} mm")]
    InvalidResolution { resolution: f64, limit: f64 },
    #[error("outline extent {extent} mm is not a multiple of the cell size {cell} mm")]
    NotGridAligned { extent: f64, cell: f64 },
    #[error("resolution too coarse to resolve cavity {0}: no cells removed")]
    UnresolvedCavity(usize),
    #[error("tet {0} has non-positive volume")]
    Inverted(usize),
    #[error("no vertices on the proximal face to clamp")]
    NoFixedVertices,
    #[error("monitor points {0} and {1} snap to the same vertex")]
    MonitorCollision(usize, usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Lattice,
    Membrane,
}

impl Region {
    fn as_str(self) -> &'static str {
        match self {
            Region::Lattice => "lattice",
            Region::Membrane => "membrane",
        }
    }
}

/// Local vertex triples of the four faces of a positively oriented tet,
/// wound so that the right-hand normal points out of the element.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// A tet face on a cavity wall; its outward normal points into the void.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CavityFace {
    pub tet: usize,
    /// Index into [`TET_FACES`].
    pub face: usize,
    pub cavity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub region: Vec<Region>,
    pub cavity_faces: Vec<CavityFace>,
    pub fixed_vertices: Vec<usize>,
    pub monitored_vertices: Vec<usize>,
}

pub fn signed_volume(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

impl TetMesh {
    pub fn volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t].map(|v| &self.vertices[v]);
        signed_volume(a, b, c, d)
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        self.tets[t]
            .iter()
            .fold(Vec3::zeros(), |acc, &v| acc + self.vertices[v])
            / 4.0
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.volume(t)).sum()
    }

    /// Global vertex indices of a cavity face, outward winding.
    pub fn face_vertices(&self, face: &CavityFace) -> [usize; 3] {
        let tet = &self.tets[face.tet];
        TET_FACES[face.face].map(|l| tet[l])
    }

    /// Area-weighted outward normal (half the cross product) of a cavity
    /// face at the given vertex positions.
    pub fn face_area_normal(&self, face: &CavityFace, positions: &[Vec3]) -> Vec3 {
        let [a, b, c] = self.face_vertices(face).map(|v| positions[v]);
        0.5 * (b - a).cross(&(c - a))
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        self.vertices.iter().fold(
            (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), v| (lo.inf(v), hi.sup(v)),
        )
    }

    /// Checks element orientation and the boundary-set invariants.
    pub fn validate(&self) -> Result<(), MeshError> {
        if let Some(t) = (0..self.tets.len()).find(|&t| !(self.volume(t) > 0.0)) {
            return Err(MeshError::Inverted(t));
        }
        if self.fixed_vertices.is_empty() {
            return Err(MeshError::NoFixedVertices);
        }
        for (a, va) in self.monitored_vertices.iter().enumerate() {
            if let Some(b) = self.monitored_vertices[a + 1..]
                .iter()
                .position(|vb| vb == va)
            {
                return Err(MeshError::MonitorCollision(a, a + 1 + b));
            }
        }
        Ok(())
    }

    /// Writes the `tetmesh v1` text format.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tetmesh v1")?;
        writeln!(out, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
        }
        writeln!(out, "tets {}", self.tets.len())?;
        for (t, r) in self.tets.iter().zip(&self.region) {
            writeln!(out, "{} {} {} {} {}", t[0], t[1], t[2], t[3], r.as_str())?;
        }
        writeln!(out, "cavity_faces {}", self.cavity_faces.len())?;
        for f in &self.cavity_faces {
            writeln!(out, "{} {} {}", f.tet, f.face, f.cavity)?;
        }
        writeln!(out, "fixed {}", self.fixed_vertices.len())?;
        for v in &self.fixed_vertices {
            writeln!(out, "{v}")?;
        }
        writeln!(out, "monitored {}", self.monitored_vertices.len())?;
        for v in &self.monitored_vertices {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    /// Reads the `tetmesh v1` text format.
    pub fn read<R: BufRead>(input: R) -> Result<TetMesh, MeshError> {
        let mut lines = Lines {
            inner: input.lines(),
            line: 0,
        };
        let header = lines.next_line()?;
        if header != "tetmesh v1" {
            return Err(lines.err(format!("expected `tetmesh v1`, found `{header}`")));
        }
        let n = lines.section("vertices")?;
        let mut vertices = Vec::with_capacity(n);
        for _ in 0..n {
            let f: Vec<f64> = lines.fields(3)?;
            vertices.push(Vec3::new(f[0], f[1], f[2]));
        }
        let n = lines.section("tets")?;
        let mut tets = Vec::with_capacity(n);
        let mut region = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next_line()?;
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 5 {
                return Err(lines.err("expected four indices and a region".into()));
            }
            let mut t = [0usize; 4];
            for (slot, s) in t.iter_mut().zip(&parts[..4]) {
                *slot = s
                    .parse()
                    .map_err(|_| lines.err(format!("bad index `{s}`")))?;
                if *slot >= vertices.len() {
                    return Err(lines.err(format!("vertex index {slot} out of range")));
                }
            }
            tets.push(t);
            region.push(match parts[4] {
                "lattice" => Region::Lattice,
                "membrane" => Region::Membrane,
                other => return Err(lines.err(format!("unknown region `{other}`"))),
            });
        }
        let n = lines.section("cavity_faces")?;
        let mut cavity_faces = Vec::with_capacity(n);
        for _ in 0..n {
            let f: Vec<usize> = lines.fields(3)?;
            if f[0] >= tets.len() || f[1] >= 4 {
                return Err(lines.err("cavity face out of range".into()));
            }
            cavity_faces.push(CavityFace {
                tet: f[0],
                face: f[1],
                cavity: f[2],
            });
        }
        let fixed_vertices = lines.index_list("fixed", vertices.len())?;
        let monitored_vertices = lines.index_list("monitored", vertices.len())?;
        Ok(TetMesh {
            vertices,
            tets,
            region,
            cavity_faces,
            fixed_vertices,
            monitored_vertices,
        })
    }
}

struct Lines<I> {
    inner: I,
    line: usize,
}

impl<I: Iterator<Item = std::io::Result<String>>> Lines<I> {
    fn err(&self, msg: String) -> MeshError {
        MeshError::Parse {
            line: self.line,
            msg,
        }
    }

    fn next_line(&mut self) -> Result<String, MeshError> {
        self.line += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(self.err("unexpected end of file".into())),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshError> {
        let line = self.next_line()?;
        line.strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(' '))
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| self.err(format!("expected `{name} <count>`, found `{line}`")))
    }

    fn fields<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>, MeshError> {
        let line = self.next_line()?;
        let parsed: Option<Vec<T>> = line.split(' ').map(|s| s.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == count => Ok(v),
            _ => Err(self.err(format!("expected {count} numeric fields, found `{line}`"))),
        }
    }

    fn index_list(&mut self, name: &str, bound: usize) -> Result<Vec<usize>, MeshError> {
        let n = self.section(name)?;
        (0..n)
            .map(|_| {
                let v: usize = self.fields(1)?[0];
                if v >= bound {
                    return Err(self.err(format!("vertex index {v} out of range")));
                }
                Ok(v)
            })
            .collect()
    }
}

/// State of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Void,
    Solid,
    Cavity(usize),
}

/// Cell classification of an outline on its meshing grid.
#[derive(Debug, Clone)]
pub struct Voxelization {
    pub origin: Vec3,
    pub dims: [usize; 3],
    grid_unit: f64,
    cells_per_unit: usize,
    pub cells: Vec<CellState>,
}

impl Voxelization {
    pub fn new(outline: &SolidOutline, resolution: f64) -> Result<Self, MeshError> {
        let bounds = outline.bounds();
        let min_dim = outline
            .bodies()
            .map(|b| b.extent().min())
            .fold(f64::INFINITY, f64::min);
        // Loosest bound that still places at least two cells across the
        // thinnest body.
        let limit = min_dim / 2.0;
        if !(resolution > 0.0) || resolution > limit {
            return Err(MeshError::InvalidResolution { resolution, limit });
        }
        let cells_per_unit = ((outline.grid_unit / resolution).round() as usize).max(1);
        let cell = outline.grid_unit / cells_per_unit as f64;
        let extent = bounds.extent();
        let mut dims = [0usize; 3];
        for a in 0..3 {
            let n = (extent[a] / cell).round();
            if ((n * cell) - extent[a]).abs() > 1e-9 * extent[a].max(1.0) || n < 1.0 {
                return Err(MeshError::NotGridAligned {
                    extent: extent[a],
                    cell,
                });
            }
            dims[a] = n as usize;
        }
        let mut vox = Voxelization {
            origin: bounds.min,
            dims,
            grid_unit: outline.grid_unit,
            cells_per_unit,
            cells: Vec::with_capacity(dims[0] * dims[1] * dims[2]),
        };
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let c = vox.cell_center(i, j, k);
                    let state = if !outline.bodies().any(|b| b.contains(&c)) {
                        CellState::Void
                    } else if let Some(id) = outline.cavity_at(&c) {
                        CellState::Cavity(id)
                    } else {
                        CellState::Solid
                    };
                    vox.cells.push(state);
                }
            }
        }
        for cav in &outline.cavities {
            if !vox.cells.contains(&CellState::Cavity(cav.id)) {
                return Err(MeshError::UnresolvedCavity(cav.id));
            }
        }
        Ok(vox)
    }

    /// Cell edge length, mm.
    pub fn cell_size(&self) -> f64 {
        self.grid_unit / self.cells_per_unit as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_size().powi(3)
    }

    fn coord(&self, axis: usize, n: f64) -> f64 {
        self.origin[axis] + self.grid_unit * (n / self.cells_per_unit as f64)
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.coord(0, i as f64),
            self.coord(1, j as f64),
            self.coord(2, k as f64),
        )
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.coord(0, i as f64 + 0.5),
            self.coord(1, j as f64 + 0.5),
            self.coord(2, k as f64 + 0.5),
        )
    }

    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn state(&self, i: usize, j: usize, k: usize) -> CellState {
        self.cells[self.cell_index(i, j, k)]
    }

    fn neighbor(&self, cell: [usize; 3], axis: usize, up: bool) -> Option<CellState> {
        let mut n = cell;
        if up {
            n[axis] += 1;
            if n[axis] >= self.dims[axis] {
                return None;
            }
        } else {
            n[axis] = n[axis].checked_sub(1)?;
        }
        Some(self.state(n[0], n[1], n[2]))
    }

    pub fn count(&self, pred: impl Fn(CellState) -> bool) -> usize {
        self.cells.iter().filter(|&&c| pred(c)).count()
    }
}

fn flip(c: [usize; 3], axis: usize) -> [usize; 3] {
    let mut c = c;
    c[axis] = 1 - c[axis];
    c
}

/// The five tets of a cell, as local corner triples `(dx, dy, dz)`.
fn cell_tets(parity: usize) -> [[[usize; 3]; 4]; 5] {
    let corners = [
        [0, 0, 0],
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 1, 0],
        [1, 0, 1],
        [0, 1, 1],
        [1, 1, 1],
    ];
    let is_central = |c: &[usize; 3]| (c[0] + c[1] + c[2]) % 2 == parity;
    let central: Vec<[usize; 3]> = corners.iter().copied().filter(is_central).collect();
    let mut out = [[[0usize; 3]; 4]; 5];
    out[0] = [central[0], central[1], central[2], central[3]];
    for (slot, c) in corners.iter().filter(|c| !is_central(c)).enumerate() {
        out[slot + 1] = [*c, flip(*c, 0), flip(*c, 1), flip(*c, 2)];
    }
    out
}

/// Voxelizes `outline` and builds the labelled tet mesh.
pub fn mesh_outline(outline: &SolidOutline, resolution: f64) -> Result<TetMesh, MeshError> {
    let vox = Voxelization::new(outline, resolution)?;
    mesh_voxels(outline, &vox)
}

pub fn mesh_voxels(outline: &SolidOutline, vox: &Voxelization) -> Result<TetMesh, MeshError> {
    let [nx, ny, nz] = vox.dims;
    let node_index = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
    let mut node_map = vec![usize::MAX; (nx + 1) * (ny + 1) * (nz + 1)];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if vox.state(i, j, k) == CellState::Solid {
                    for c in 0..8 {
                        node_map[node_index(i + (c & 1), j + ((c >> 1) & 1), k + (c >> 2))] = 0;
                    }
                }
            }
        }
    }
    let mut vertices = Vec::new();
    let mut on_proximal_face = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                let slot = &mut node_map[node_index(i, j, k)];
                if *slot != usize::MAX {
                    *slot = vertices.len();
                    if i == 0 {
                        on_proximal_face.push(vertices.len());
                    }
                    vertices.push(vox.node_position(i, j, k));
                }
            }
        }
    }

    let mut tets = Vec::new();
    let mut tet_cell = Vec::new();
    let mut cavity_faces = Vec::new();
    let splits = [cell_tets(0), cell_tets(1)];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if vox.state(i, j, k) != CellState::Solid {
                    continue;
                }
                for local in &splits[(i + j + k) % 2] {
                    let mut local = *local;
                    let global =
                        |c: &[usize; 3]| node_map[node_index(i + c[0], j + c[1], k + c[2])];
                    let mut tet = local.map(|c| global(&c));
                    let [a, b, c, d] = tet.map(|v| &vertices[v]);
                    if signed_volume(a, b, c, d) < 0.0 {
                        tet.swap(2, 3);
                        local.swap(2, 3);
                    }
                    let t = tets.len();
                    for (f, face) in TET_FACES.iter().enumerate() {
                        let pts = face.map(|l| local[l]);
                        for axis in 0..3 {
                            let side = pts[0][axis];
                            if pts.iter().all(|p| p[axis] == side) {
                                if let Some(CellState::Cavity(id)) =
                                    vox.neighbor([i, j, k], axis, side == 1)
                                {
                                    cavity_faces.push(CavityFace {
                                        tet: t,
                                        face: f,
                                        cavity: id,
                                    });
                                }
                            }
                        }
                    }
                    tets.push(tet);
                    tet_cell.push([i, j, k]);
                }
            }
        }
    }

    let mut on_cavity = vec![false; vertices.len()];
    for f in &cavity_faces {
        let tet = &tets[f.tet];
        for l in TET_FACES[f.face] {
            on_cavity[tet[l]] = true;
        }
    }
    let h = vox.cell_size();
    let reach = (outline.membrane_band / h).ceil() as isize + 1;
    let region = tets
        .iter()
        .zip(&tet_cell)
        .map(|(tet, cell)| {
            if tet.iter().any(|&v| on_cavity[v]) {
                return Region::Membrane;
            }
            if outline.membrane_band <= 0.0 {
                return Region::Lattice;
            }
            let centroid = tet.iter().fold(Vec3::zeros(), |acc, &v| acc + vertices[v]) / 4.0;
            let near = near_cavity(vox, *cell, reach, &centroid, outline.membrane_band);
            if near {
                Region::Membrane
            } else {
                Region::Lattice
            }
        })
        .collect();

    let mut monitored_vertices = Vec::with_capacity(outline.monitor_points.len());
    for p in &outline.monitor_points {
        let tol = 1e-9 * h;
        let mut best = (f64::INFINITY, usize::MAX);
        for (v, x) in vertices.iter().enumerate() {
            let d = (x - p).norm();
            if d < best.0 - tol {
                best = (d, v);
            }
        }
        monitored_vertices.push(best.1);
    }

    let mesh = TetMesh {
        vertices,
        tets,
        region,
        cavity_faces,
        fixed_vertices: on_proximal_face,
        monitored_vertices,
    };
    mesh.validate()?;
    Ok(mesh)
}

fn near_cavity(vox: &Voxelization, cell: [usize; 3], reach: isize, p: &Vec3, band: f64) -> bool {
    let h = vox.cell_size();
    for di in -reach..=reach {
        for dj in -reach..=reach {
            for dk in -reach..=reach {
                let n = [
                    cell[0] as isize + di,
                    cell[1] as isize + dj,
                    cell[2] as isize + dk,
                ];
                if (0..3).any(|a| n[a] < 0 || n[a] >= vox.dims[a] as isize) {
                    continue;
                }
                let (i, j, k) = (n[0] as usize, n[1] as usize, n[2] as usize);
                if let CellState::Cavity(_) = vox.state(i, j, k) {
                    let lo = vox.node_position(i, j, k);
                    let hi = lo + Vec3::repeat(h);
                    let d = (lo - p).sup(&(p - hi)).sup(&Vec3::zeros()).norm();
                    if d <= band {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Tets selected by one candidate inclusion.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiSet {
    pub candidate: String,
    /// Sorted tet indices.
    pub element_ids: Vec<usize>,
    /// Set when the selection is empty; the candidate then matches the
    /// baseline.
    pub warning: Option<String>,
}

impl RoiSet {
    pub fn len(&self) -> usize {
        self.element_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_ids.is_empty()
    }
}

/// Distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + t * ab)).norm()
}

/// Tets whose centroid lies within the inclusion radius of any segment of
/// the candidate's inclusion polylines.
pub fn roi_elements(mesh: &TetMesh, path: &CandidatePath) -> RoiSet {
    let r = path.radius;
    let segments: Vec<(Vec3, Vec3)> = path
        .inclusions
        .iter()
        .flat_map(|line| line.windows(2).map(|w| (w[0], w[1])))
        .collect();
    let element_ids: Vec<usize> = (0..mesh.tets.len())
        .filter(|&t| {
            let c = mesh.centroid(t);
            segments
                .iter()
                .any(|(a, b)| point_segment_distance(&c, a, b) <= r)
        })
        .collect();
    let warning = element_ids.is_empty().then(|| {
        let msg = format!(
            "inclusion of {} (radius {r} mm) selects no elements; candidate equals the baseline",
            path.label
        );
        log::warn!("{msg}");
        msg
    });
    RoiSet {
        candidate: path.label.clone(),
        element_ids,
        warning,
    }
}
