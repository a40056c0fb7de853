use super::{Mesh, MeshError, Result, Vec3};

/// Uniform scale followed by translation: `x ↦ scale · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub translation: Vec3,
}

impl Default for Similarity {
    fn default() -> Self {
        Self::identity()
    }
}

impl Similarity {
    pub fn identity() -> Self {
        Self { scale: 1.0, translation: Vec3::zeros() }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.translation
    }

    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        (p - self.translation) / self.scale
    }

    pub fn inverse(&self) -> Self {
        Self { scale: 1.0 / self.scale, translation: -self.translation / self.scale }
    }

    pub fn apply_mesh(&self, mesh: &Mesh) -> Mesh {
        mesh.map_positions(|p| self.apply(p))
    }

    pub fn apply_inverse_mesh(&self, mesh: &Mesh) -> Mesh {
        mesh.map_positions(|p| self.apply_inverse(p))
    }
}

/// Centers the bounding box at the origin and scales its diagonal to 1.
pub fn normalize_unit_box(mesh: &Mesh) -> Result<(Mesh, Similarity)> {
    let (lo, hi) = mesh.bounding_box();
    let diag = (hi - lo).norm();
    if !(diag > 0.0) || !diag.is_finite() {
        return Err(MeshError::DegenerateBounds);
    }
    let scale = 1.0 / diag;
    let center = (lo + hi) * 0.5;
    let transform = Similarity { scale, translation: -center * scale };
    Ok((transform.apply_mesh(mesh), transform))
}
