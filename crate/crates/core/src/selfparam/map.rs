use super::collapse::{CollapseRecord, DecimationState};
use super::SelfParamError;
use crate::mesh::{BarycentricPoint, Mesh, Vec3};

/// Chart point location may land this far outside a triangle before the
/// map is considered corrupt.
pub const LOCATE_TOL: f64 = 1e-8;

/// Composition of per-collapse chart maps from a decimated mesh back to the
/// mesh it came from.
#[derive(Debug, Clone)]
pub struct BijectiveMap {
    fine: Mesh,
    coarse: Mesh,
    coarse_vertex_ids: Vec<usize>,
    coarse_face_ids: Vec<usize>,
    records: Vec<CollapseRecord>,
    /// For every fine face id, the ascending indices of the records whose
    /// post-collapse chart contains it.
    face_records: Vec<Vec<u32>>,
}

impl BijectiveMap {
    pub fn new(
        fine: Mesh,
        coarse: Mesh,
        coarse_vertex_ids: Vec<usize>,
        coarse_face_ids: Vec<usize>,
        records: Vec<CollapseRecord>,
    ) -> Self {
        let mut face_records = vec![Vec::new(); fine.num_faces()];
        for (r, rec) in records.iter().enumerate() {
            for t in &rec.post.triangles {
                face_records[t.face].push(r as u32);
            }
        }
        Self { fine, coarse, coarse_vertex_ids, coarse_face_ids, records, face_records }
    }

    /// The map of a mesh onto itself.
    pub fn identity(mesh: &Mesh) -> Self {
        Self::new(
            mesh.clone(),
            mesh.clone(),
            (0..mesh.num_vertices()).collect(),
            (0..mesh.num_faces()).collect(),
            Vec::new(),
        )
    }

    pub fn fine(&self) -> &Mesh {
        &self.fine
    }

    pub fn coarse(&self) -> &Mesh {
        &self.coarse
    }

    pub fn records(&self) -> &[CollapseRecord] {
        &self.records
    }

    /// Fine-mesh id of each coarse vertex.
    pub fn coarse_vertex_ids(&self) -> &[usize] {
        &self.coarse_vertex_ids
    }

    /// Fine-mesh id of each coarse face.
    pub fn coarse_face_ids(&self) -> &[usize] {
        &self.coarse_face_ids
    }

    fn apply_record(&self, r: usize, face: usize, coords: [f64; 3]) -> Result<(usize, [f64; 3]), SelfParamError> {
        let rec = &self.records[r];
        let t = rec.post.triangle_of_face(face).expect("face belongs to the post-collapse chart");
        let uv = rec.post.point(t, &coords);
        let (pre_t, bary) = rec.pre.locate(&uv);
        let min = bary[0].min(bary[1]).min(bary[2]);
        if !(min >= -LOCATE_TOL) {
            return Err(SelfParamError::LocationFailed { record: r, min_bary: min });
        }
        let p = BarycentricPoint::new(rec.pre.triangles[pre_t].face, bary);
        Ok((p.face, p.coords))
    }

    /// Maps a point on the coarse mesh to the fine mesh. Only the records
    /// whose charts touch the point's current face are visited.
    pub fn map_point(&self, p: &BarycentricPoint) -> Result<(BarycentricPoint, Vec3), SelfParamError> {
        let mut face = self.coarse_face_ids[p.face];
        let mut coords = p.coords;
        let mut cur = self.records.len();
        loop {
            let list = &self.face_records[face];
            let n = list.partition_point(|&r| (r as usize) < cur);
            if n == 0 {
                break;
            }
            let r = list[n - 1] as usize;
            (face, coords) = self.apply_record(r, face, coords)?;
            cur = r;
        }
        let out = BarycentricPoint { face, coords };
        Ok((out, out.position(&self.fine)))
    }

    /// Reference implementation of [`Self::map_point`] that walks every
    /// record in reverse; also returns how many records were processed.
    pub fn map_point_sequential(&self, p: &BarycentricPoint) -> Result<(BarycentricPoint, Vec3, usize), SelfParamError> {
        let mut face = self.coarse_face_ids[p.face];
        let mut coords = p.coords;
        let mut processed = 0;
        for r in (0..self.records.len()).rev() {
            processed += 1;
            if self.records[r].post.triangle_of_face(face).is_some() {
                (face, coords) = self.apply_record(r, face, coords)?;
            }
        }
        let out = BarycentricPoint { face, coords };
        Ok((out, out.position(&self.fine), processed))
    }

    /// Replays every record on the fine mesh and re-runs all collapse checks,
    /// comparing recomputed charts with the stored ones. Finally checks that
    /// the replayed connectivity equals the coarse mesh.
    pub fn verify(&self) -> Result<(), SelfParamError> {
        let mut state = DecimationState::new(&self.fine);
        for (r, rec) in self.records.iter().enumerate() {
            let (j, k) = rec.edge;
            let plan = state
                .validate_collapse(j, k, rec.position)
                .map_err(|e| SelfParamError::Corrupt { record: r, message: e.to_string() })?;
            if plan.pre != rec.pre || plan.post != rec.post || plan.removed_faces != rec.removed_faces {
                return Err(SelfParamError::Corrupt { record: r, message: "stored charts differ from replay".into() });
            }
            let replayed = state.apply(plan);
            if replayed.relabeled_faces != rec.relabeled_faces {
                return Err(SelfParamError::Corrupt { record: r, message: "face relabeling differs from replay".into() });
            }
        }
        let (mesh, vids, fids) = state.to_mesh();
        if mesh.faces() != self.coarse.faces() || vids != self.coarse_vertex_ids || fids != self.coarse_face_ids {
            return Err(SelfParamError::Corrupt {
                record: self.records.len(),
                message: "replayed connectivity differs from the coarse mesh".into(),
            });
        }
        Ok(())
    }
}

/// UV round trip post → pre → post for a point of record `rec`'s chart,
/// returning the distance between the start and end UV.
pub fn record_round_trip_error(rec: &CollapseRecord, post_triangle: usize, bary: &[f64; 3]) -> f64 {
    let uv = rec.post.point(post_triangle, bary);
    let (pt, pb) = rec.pre.locate(&uv);
    let mid = rec.pre.point(pt, &pb);
    let (qt, qb) = rec.post.locate(&mid);
    let back = rec.post.point(qt, &qb);
    (back - uv).norm()
}
