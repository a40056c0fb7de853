use thiserror::Error;

/// Failures raised while building, reading or querying a [`crate::mesh::Mesh`].
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: face has {count} vertices, only triangles are supported")]
    NonTriangle { line: usize, count: usize },
    #[error("face {face} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, vertex: usize, count: usize },
    #[error("face {face} repeats a vertex index")]
    DegenerateFace { face: usize },
    #[error("non-manifold edge ({a}, {b}): more than two incident faces or inconsistent orientation")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("boundary edge ({a}, {b}): only closed surfaces are supported")]
    BoundaryEdge { a: usize, b: usize },
    #[error("non-manifold vertex {0}: its incident faces do not form a single fan")]
    NonManifoldVertex(usize),
    #[error("vertex {0} is not referenced by any face")]
    UnreferencedVertex(usize),
    #[error("({0}, {1}) is not an edge of the mesh")]
    NotAnEdge(usize, usize),
    #[error("mesh is empty")]
    Empty,
    #[error("mesh has a degenerate bounding box")]
    DegenerateBounds,
}

pub type Result<T, E = MeshError> = std::result::Result<T, E>;
