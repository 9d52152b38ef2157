//! Structured axis-aligned hexahedral box mesh.
//!
//! Entities live on a lattice. Every kind is numbered lexicographically with
//! the x index running fastest; edges and faces are grouped by axis
//! (all x-edges, then y-edges, then z-edges). Edges point along `+axis`,
//! faces carry the `+axis` normal. With `periodic_z` the top vertex/edge/face
//! layer is identified with the bottom one, so z-indices wrap modulo `nz`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("axis {axis}: resolution must be at least 1")]
    ZeroResolution { axis: char },
    #[error("axis {axis}: interval ({lo}, {hi}) has non-positive length")]
    DegenerateExtent { axis: char, lo: f64, hi: f64 },
    #[error("periodic z requires nz >= 2, got {nz}")]
    PeriodicTooThin { nz: usize },
}

const AXES: [char; 3] = ['x', 'y', 'z'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntityKind {
    Vertex,
    EdgeX,
    EdgeY,
    EdgeZ,
    FaceX,
    FaceY,
    FaceZ,
    Cell,
}

impl EntityKind {
    pub const EDGES: [EntityKind; 3] = [EntityKind::EdgeX, EntityKind::EdgeY, EntityKind::EdgeZ];
    pub const FACES: [EntityKind; 3] = [EntityKind::FaceX, EntityKind::FaceY, EntityKind::FaceZ];

    /// Axis of the edge tangent or face normal.
    pub fn axis(self) -> Option<usize> {
        match self {
            EntityKind::EdgeX | EntityKind::FaceX => Some(0),
            EntityKind::EdgeY | EntityKind::FaceY => Some(1),
            EntityKind::EdgeZ | EntityKind::FaceZ => Some(2),
            EntityKind::Vertex | EntityKind::Cell => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EntityId {
    pub kind: EntityKind,
    pub index: [usize; 3],
}

/// Per-kind entity totals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntityCounts {
    pub vertices: usize,
    pub edges: [usize; 3],
    pub faces: [usize; 3],
    pub cells: usize,
}

impl EntityCounts {
    pub fn total_edges(&self) -> usize {
        self.edges.iter().sum()
    }

    pub fn total_faces(&self) -> usize {
        self.faces.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.total_edges() as i64 + self.total_faces() as i64
            - self.cells as i64
    }
}

/// Per-entity flag marking DOFs constrained by an essential boundary condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMask {
    pub masked: Vec<bool>,
}

impl BoundaryMask {
    pub fn count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }

    pub fn len(&self) -> usize {
        self.masked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masked.is_empty()
    }
}

/// Which family of entities a boundary mask refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityFamily {
    Vertices,
    Edges,
    Faces,
    Cells,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxMesh {
    extents: [(f64, f64); 3],
    resolution: [usize; 3],
    periodic_z: bool,
    spacing: [f64; 3],
}

impl BoxMesh {
    pub fn new(
        extents: [(f64, f64); 3],
        resolution: [usize; 3],
        periodic_z: bool,
    ) -> Result<Self, MeshError> {
        for axis in 0..3 {
            if resolution[axis] == 0 {
                return Err(MeshError::ZeroResolution { axis: AXES[axis] });
            }
            let (lo, hi) = extents[axis];
            if !(hi - lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
                return Err(MeshError::DegenerateExtent { axis: AXES[axis], lo, hi });
            }
        }
        if periodic_z && resolution[2] < 2 {
            return Err(MeshError::PeriodicTooThin { nz: resolution[2] });
        }
        let spacing = [0, 1, 2].map(|a| (extents[a].1 - extents[a].0) / resolution[a] as f64);
        Ok(Self { extents, resolution, periodic_z, spacing })
    }

    pub fn extents(&self) -> [(f64, f64); 3] {
        self.extents
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn periodic_z(&self) -> bool {
        self.periodic_z
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().map(|(lo, hi)| hi - lo).product()
    }

    /// Number of distinct vertex layers in z.
    fn nz_vertices(&self) -> usize {
        if self.periodic_z {
            self.resolution[2]
        } else {
            self.resolution[2] + 1
        }
    }

    /// Lattice dimensions of one entity kind.
    pub fn lattice(&self, kind: EntityKind) -> [usize; 3] {
        let [nx, ny, nz] = self.resolution;
        let nzv = self.nz_vertices();
        match kind {
            EntityKind::Vertex => [nx + 1, ny + 1, nzv],
            EntityKind::EdgeX => [nx, ny + 1, nzv],
            EntityKind::EdgeY => [nx + 1, ny, nzv],
            EntityKind::EdgeZ => [nx + 1, ny + 1, nz],
            EntityKind::FaceX => [nx + 1, ny, nz],
            EntityKind::FaceY => [nx, ny + 1, nz],
            EntityKind::FaceZ => [nx, ny, nzv],
            EntityKind::Cell => [nx, ny, nz],
        }
    }

    fn kind_count(&self, kind: EntityKind) -> usize {
        self.lattice(kind).iter().product()
    }

    pub fn entity_counts(&self) -> EntityCounts {
        EntityCounts {
            vertices: self.kind_count(EntityKind::Vertex),
            edges: EntityKind::EDGES.map(|k| self.kind_count(k)),
            faces: EntityKind::FACES.map(|k| self.kind_count(k)),
            cells: self.kind_count(EntityKind::Cell),
        }
    }

    pub fn family_count(&self, family: EntityFamily) -> usize {
        let c = self.entity_counts();
        match family {
            EntityFamily::Vertices => c.vertices,
            EntityFamily::Edges => c.total_edges(),
            EntityFamily::Faces => c.total_faces(),
            EntityFamily::Cells => c.cells,
        }
    }

    /// Offset of a kind's block inside its family numbering.
    fn family_offset(&self, kind: EntityKind) -> usize {
        let c = self.entity_counts();
        match kind {
            EntityKind::Vertex | EntityKind::Cell | EntityKind::EdgeX | EntityKind::FaceX => 0,
            EntityKind::EdgeY => c.edges[0],
            EntityKind::EdgeZ => c.edges[0] + c.edges[1],
            EntityKind::FaceY => c.faces[0],
            EntityKind::FaceZ => c.faces[0] + c.faces[1],
        }
    }

    /// Global id within the entity's family. The z index wraps on periodic
    /// meshes, so `k == nz` addresses the bottom layer.
    pub fn global_index(&self, kind: EntityKind, i: usize, j: usize, k: usize) -> usize {
        let [lx, ly, lz] = self.lattice(kind);
        let k = if self.periodic_z { k % lz } else { k };
        debug_assert!(i < lx && j < ly && k < lz, "{kind:?} ({i},{j},{k}) out of lattice");
        self.family_offset(kind) + i + lx * (j + ly * k)
    }

    pub fn id_to_index(&self, id: EntityId) -> usize {
        let [i, j, k] = id.index;
        self.global_index(id.kind, i, j, k)
    }

    /// Inverse of [`BoxMesh::global_index`].
    pub fn entity(&self, family: EntityFamily, global: usize) -> EntityId {
        let kinds: &[EntityKind] = match family {
            EntityFamily::Vertices => &[EntityKind::Vertex],
            EntityFamily::Edges => &EntityKind::EDGES,
            EntityFamily::Faces => &EntityKind::FACES,
            EntityFamily::Cells => &[EntityKind::Cell],
        };
        let mut local = global;
        for &kind in kinds {
            let [lx, ly, lz] = self.lattice(kind);
            let n = lx * ly * lz;
            if local < n {
                return EntityId { kind, index: [local % lx, (local / lx) % ly, local / (lx * ly)] };
            }
            local -= n;
        }
        panic!("global index {global} out of range for {family:?}");
    }

    /// Coordinates of the lattice point (i, j, k); k may equal nz.
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.extents[0].0 + i as f64 * self.spacing[0],
            self.extents[1].0 + j as f64 * self.spacing[1],
            self.extents[2].0 + k as f64 * self.spacing[2],
        ]
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let p = self.point(i, j, k);
        [0, 1, 2].map(|a| p[a] + 0.5 * self.spacing[a])
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| {
            (a == 2 && self.periodic_z) || (p[a] >= self.extents[a].0 && p[a] <= self.extents[a].1)
        })
    }

    /// Whether the entity lies in the part of the boundary that carries
    /// essential conditions (the side planes only, when periodic in z).
    pub fn on_essential_boundary(&self, id: EntityId) -> bool {
        let [nx, ny, nz] = self.resolution;
        let [i, j, k] = id.index;
        let on_x = i == 0 || i == nx;
        let on_y = j == 0 || j == ny;
        let on_z = !self.periodic_z && (k == 0 || k == nz);
        match id.kind {
            EntityKind::Vertex => on_x || on_y || on_z,
            EntityKind::EdgeX => on_y || on_z,
            EntityKind::EdgeY => on_x || on_z,
            EntityKind::EdgeZ => on_x || on_y,
            EntityKind::FaceX => on_x,
            EntityKind::FaceY => on_y,
            EntityKind::FaceZ => on_z,
            EntityKind::Cell => false,
        }
    }

    pub fn boundary_mask(&self, family: EntityFamily) -> BoundaryMask {
        let n = self.family_count(family);
        let masked = (0..n).map(|g| self.on_essential_boundary(self.entity(family, g))).collect();
        BoundaryMask { masked }
    }

    /// Smallest cell spacing.
    pub fn h_min(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Cell containing `p`, clamped to the lattice; z wraps when periodic.
    pub fn locate(&self, p: [f64; 3]) -> ([usize; 3], [f64; 3]) {
        let mut cell = [0usize; 3];
        let mut local = [0.0; 3];
        for a in 0..3 {
            let n = self.resolution[a];
            let mut s = (p[a] - self.extents[a].0) / self.spacing[a];
            if a == 2 && self.periodic_z {
                s = s.rem_euclid(n as f64);
            }
            let c = (s.floor().max(0.0) as usize).min(n - 1);
            cell[a] = c;
            local[a] = s - c as f64;
        }
        (cell, local)
    }
}

/// Free-function form of [`BoxMesh::new`].
pub fn build_box_mesh(
    extents: [(f64, f64); 3],
    resolution: [usize; 3],
    periodic_z: bool,
) -> Result<BoxMesh, MeshError> {
    BoxMesh::new(extents, resolution, periodic_z)
}
