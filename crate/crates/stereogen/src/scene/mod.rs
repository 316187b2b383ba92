//! Scene data model: objects with semantic identity, materials, lights,
//! stereo rigs, and scene-level edits.

pub mod archive;

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, RigidTransform, StereoRig, TriangleMesh, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("scene has no ceiling record")]
    NoCeiling,
    #[error("operation requires scene type {0}")]
    WrongSceneType(&'static str),
    #[error("material id {0} referenced but not defined")]
    MissingMaterial(u32),
    #[error("duplicate id {0}")]
    DuplicateId(u32),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Diffuse,
    Metal,
    Glass,
    Emissive,
}

/// Parts below this roughness are the ill-posed mirror/clear-glass cases the
/// default exclusion policy removes.
pub const MIN_NON_LAMBERTIAN_ROUGHNESS: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub id: u32,
    pub name: String,
    pub kind: MaterialKind,
    /// Albedo for diffuse, tint for metal/glass, linear RGB in [0,1].
    pub albedo: [f64; 3],
    pub roughness: f64,
    /// Index of refraction; meaningful for glass only.
    pub ior: f64,
    /// Emitted radiance, W/sr/m^2; meaningful for emissive only.
    pub emission: [f64; 3],
    /// Procedural 3D value-noise modulation of the albedo: spatial frequency
    /// (1/m) and amplitude in [0,1]. Zero amount leaves the albedo constant.
    pub noise_scale: f64,
    pub noise_amount: f64,
}

impl Material {
    pub fn diffuse(id: u32, name: &str, albedo: [f64; 3]) -> Material {
        Material {
            id,
            name: name.to_string(),
            kind: MaterialKind::Diffuse,
            albedo,
            roughness: 1.0,
            ior: 1.0,
            emission: [0.0; 3],
            noise_scale: 0.0,
            noise_amount: 0.0,
        }
    }

    pub fn with_noise(mut self, scale: f64, amount: f64) -> Material {
        self.noise_scale = scale;
        self.noise_amount = amount;
        self
    }
}

/// Exclusion policy for ill-posed materials. Data-driven so the removal
/// experiment can be re-run with the policy disabled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialDenyList {
    pub enabled: bool,
    pub min_metal_roughness: f64,
    pub min_glass_roughness: f64,
}

impl Default for MaterialDenyList {
    fn default() -> Self {
        MaterialDenyList {
            enabled: true,
            min_metal_roughness: MIN_NON_LAMBERTIAN_ROUGHNESS,
            min_glass_roughness: MIN_NON_LAMBERTIAN_ROUGHNESS,
        }
    }
}

impl MaterialDenyList {
    pub fn allows(&self, m: &Material) -> bool {
        if !self.enabled {
            return true;
        }
        match m.kind {
            MaterialKind::Metal => m.roughness >= self.min_metal_roughness,
            MaterialKind::Glass => m.roughness >= self.min_glass_roughness,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LightSource {
    Point {
        position: Vec3,
        /// Total radiated power in watts.
        power_w: f64,
        color: [f64; 3],
    },
    Area {
        /// Rectangle origin corner and two edge vectors.
        origin: Vec3,
        edge_u: Vec3,
        edge_v: Vec3,
        /// Emitted radiance per channel.
        radiance: [f64; 3],
    },
    Environment {
        sky_strength: f64,
        sky_color: [f64; 3],
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectTag {
    Floating,
    Background,
    Architecture,
    WindowGlass,
    Terrain,
    /// Geometry outside the room shell, masked together with the sky.
    Exterior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    /// Generator name plus instance index, stable across regeneration.
    pub name: String,
    #[serde(skip)]
    pub mesh: TriangleMesh,
    pub transform: RigidTransform,
    /// Sorted (part id, material id) pairs.
    pub part_materials: Vec<(u32, u32)>,
    pub tags: Vec<ObjectTag>,
    /// Set by generators whose geometry is dominated by thin needles/holes.
    pub thin_structure: bool,
}

impl SceneObject {
    pub fn has_tag(&self, tag: ObjectTag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn material_for_part(&self, part: u32) -> Option<u32> {
        self.part_materials
            .binary_search_by_key(&part, |&(p, _)| p)
            .ok()
            .map(|i| self.part_materials[i].1)
    }

    pub fn set_part_material(&mut self, part: u32, material: u32) {
        match self.part_materials.binary_search_by_key(&part, |&(p, _)| p) {
            Ok(i) => self.part_materials[i].1 = material,
            Err(i) => self.part_materials.insert(i, (part, material)),
        }
    }

    pub fn world_aabb(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for p in &self.mesh.positions {
            bb.grow(self.transform.apply_point(*p));
        }
        bb
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneType {
    IndoorFloating,
    DenseFloating,
    Nature,
}

impl SceneType {
    pub fn tag(&self) -> &'static str {
        match self {
            SceneType::IndoorFloating => "indoor_floating",
            SceneType::DenseFloating => "dense_floating",
            SceneType::Nature => "nature",
        }
    }

    pub fn parse(s: &str) -> Option<SceneType> {
        match s {
            "indoor_floating" => Some(SceneType::IndoorFloating),
            "dense_floating" => Some(SceneType::DenseFloating),
            "nature" => Some(SceneType::Nature),
            _ => None,
        }
    }
}

/// Room bookkeeping kept by indoor scenes so lighting augmentation can edit
/// the ceiling and its lights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomRecord {
    pub ceiling_object: Option<u32>,
    /// Indices into `Scene::lights` of the ceiling area lights.
    pub ceiling_lights: Vec<usize>,
    pub interior_min: Vec3,
    pub interior_max: Vec3,
}

impl RoomRecord {
    pub fn interior(&self) -> Aabb {
        Aabb::new(self.interior_min, self.interior_max)
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub materials: Vec<Material>,
    pub lights: Vec<LightSource>,
    pub rigs: Vec<StereoRig>,
    pub seed: u64,
    pub scene_type: SceneType,
    pub room: Option<RoomRecord>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SceneStats {
    pub object_count: usize,
    pub floating_count: usize,
    pub background_count: usize,
    pub architecture_count: usize,
    pub terrain_count: usize,
    pub triangle_count: usize,
    pub light_count: usize,
    pub rig_count: usize,
    pub bounds_min: Option<Vec3>,
    pub bounds_max: Option<Vec3>,
}

impl Scene {
    pub fn empty(scene_type: SceneType, seed: u64) -> Scene {
        Scene {
            objects: Vec::new(),
            materials: Vec::new(),
            lights: Vec::new(),
            rigs: Vec::new(),
            seed,
            scene_type,
            room: None,
        }
    }

    pub fn next_object_id(&self) -> u32 {
        self.objects.iter().map(|o| o.id + 1).max().unwrap_or(1)
    }

    pub fn next_material_id(&self) -> u32 {
        self.materials.iter().map(|m| m.id + 1).max().unwrap_or(1)
    }

    pub fn material(&self, id: u32) -> Option<&Material> {
        self.materials.iter().find(|m| m.id == id)
    }

    pub fn add_material(&mut self, mut material: Material) -> u32 {
        let id = self.next_material_id();
        material.id = id;
        self.materials.push(material);
        id
    }

    pub fn bounds(&self) -> Aabb {
        let mut bb = Aabb::empty();
        for o in &self.objects {
            bb = bb.union(&o.world_aabb());
        }
        bb
    }

    pub fn environment(&self) -> Option<(f64, [f64; 3])> {
        self.lights.iter().find_map(|l| match l {
            LightSource::Environment { sky_strength, sky_color } => Some((*sky_strength, *sky_color)),
            _ => None,
        })
    }

    /// Full referential-integrity scan.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut ids = std::collections::BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id) {
                return Err(SceneError::DuplicateId(o.id));
            }
            for part in o.mesh.part_ids() {
                let mat = o
                    .material_for_part(part)
                    .ok_or_else(|| SceneError::Invalid(format!("object {} part {} has no material", o.id, part)))?;
                if self.material(mat).is_none() {
                    return Err(SceneError::MissingMaterial(mat));
                }
            }
            if o.has_tag(ObjectTag::Floating) && o.has_tag(ObjectTag::Background) {
                return Err(SceneError::Invalid(format!("object {} tagged both floating and background", o.id)));
            }
            if o.has_tag(ObjectTag::WindowGlass) {
                for part in o.mesh.part_ids() {
                    let mat = o.material_for_part(part).unwrap();
                    if self.material(mat).map(|m| m.kind) != Some(MaterialKind::Glass) {
                        return Err(SceneError::Invalid(format!(
                            "window_glass object {} has a non-glass part",
                            o.id
                        )));
                    }
                }
            }
        }
        let mut mat_ids = std::collections::BTreeSet::new();
        for m in &self.materials {
            if !mat_ids.insert(m.id) {
                return Err(SceneError::DuplicateId(m.id));
            }
            if m.name.is_empty() {
                return Err(SceneError::Invalid("material name empty".into()));
            }
        }
        let env_count = self
            .lights
            .iter()
            .filter(|l| matches!(l, LightSource::Environment { .. }))
            .count();
        if env_count > 1 {
            return Err(SceneError::Invalid("more than one environment light".into()));
        }
        Ok(())
    }

    /// Remove all window-pane glass geometry. Parts of window-glass-tagged
    /// objects whose material is glass are deleted; objects left empty are
    /// dropped and unreferenced materials pruned. Lighting is untouched.
    pub fn delete_window_glass(&mut self) {
        let glass_ids: std::collections::BTreeSet<u32> = self
            .materials
            .iter()
            .filter(|m| m.kind == MaterialKind::Glass)
            .map(|m| m.id)
            .collect();
        let mut removed_any = false;
        for obj in &mut self.objects {
            if !obj.has_tag(ObjectTag::WindowGlass) {
                continue;
            }
            let parts: Vec<u32> = obj
                .mesh
                .part_ids()
                .into_iter()
                .filter(|p| obj.material_for_part(*p).map(|m| glass_ids.contains(&m)).unwrap_or(false))
                .collect();
            if parts.is_empty() {
                continue;
            }
            obj.mesh.remove_parts(&parts);
            obj.part_materials.retain(|(p, _)| !parts.contains(p));
            removed_any = true;
        }
        if removed_any {
            self.objects.retain(|o| !o.mesh.triangles.is_empty());
            self.prune_unreferenced_materials();
        }
    }

    fn prune_unreferenced_materials(&mut self) {
        let used: std::collections::BTreeSet<u32> = self
            .objects
            .iter()
            .flat_map(|o| o.part_materials.iter().map(|&(_, m)| m))
            .collect();
        self.materials.retain(|m| used.contains(&m.id));
    }

    /// Remove the ceiling so the environment is visible from inside.
    /// Errors when the scene carries no ceiling record.
    pub fn remove_ceiling(&mut self) -> Result<(), SceneError> {
        let room = self.room.as_mut().ok_or(SceneError::NoCeiling)?;
        let ceiling = room.ceiling_object.take().ok_or(SceneError::NoCeiling)?;
        self.objects.retain(|o| o.id != ceiling);
        self.prune_unreferenced_materials();
        Ok(())
    }

    pub fn stats(&self) -> SceneStats {
        let bounds = self.bounds();
        SceneStats {
            object_count: self.objects.len(),
            floating_count: self.objects.iter().filter(|o| o.has_tag(ObjectTag::Floating)).count(),
            background_count: self.objects.iter().filter(|o| o.has_tag(ObjectTag::Background)).count(),
            architecture_count: self.objects.iter().filter(|o| o.has_tag(ObjectTag::Architecture)).count(),
            terrain_count: self.objects.iter().filter(|o| o.has_tag(ObjectTag::Terrain)).count(),
            triangle_count: self.objects.iter().map(|o| o.mesh.triangles.len()).sum(),
            light_count: self.lights.len(),
            rig_count: self.rigs.len(),
            bounds_min: (!bounds.is_empty()).then_some(bounds.min),
            bounds_max: (!bounds.is_empty()).then_some(bounds.max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    fn pane_scene() -> Scene {
        let mut scene = Scene::empty(SceneType::IndoorFloating, 1);
        scene.materials.push(Material {
            id: 1,
            name: "window_glass".into(),
            kind: MaterialKind::Glass,
            albedo: [0.9; 3],
            roughness: 0.05,
            ior: 1.5,
            emission: [0.0; 3],
            noise_scale: 0.0,
            noise_amount: 0.0,
        });
        scene.materials.push(Material::diffuse(2, "plaster", [0.7; 3]));
        for (i, x) in [0.0f64, 2.0].iter().enumerate() {
            scene.objects.push(SceneObject {
                id: 10 + i as u32,
                name: format!("window_pane.{i:03}"),
                mesh: TriangleMesh::make_box(vec3(*x, 0.0, 0.0), vec3(*x + 0.8, 0.02, 1.0), 0),
                transform: RigidTransform::IDENTITY,
                part_materials: vec![(0, 1)],
                tags: vec![ObjectTag::Architecture, ObjectTag::WindowGlass],
                thin_structure: false,
            });
        }
        scene.objects.push(SceneObject {
            id: 20,
            name: "wall.000".into(),
            mesh: TriangleMesh::make_box(vec3(-1.0, 1.0, 0.0), vec3(3.0, 1.1, 2.0), 0),
            transform: RigidTransform::IDENTITY,
            part_materials: vec![(0, 2)],
            tags: vec![ObjectTag::Architecture],
            thin_structure: false,
        });
        scene
    }

    #[test]
    fn delete_window_glass_removes_panes() {
        let mut scene = pane_scene();
        scene.validate().unwrap();
        scene.delete_window_glass();
        assert_eq!(scene.objects.len(), 1);
        assert!(scene.objects.iter().all(|o| !o.has_tag(ObjectTag::WindowGlass)));
        // Pane material is gone from the table, the wall material stays.
        assert_eq!(scene.materials.len(), 1);
        assert_eq!(scene.materials[0].id, 2);
        scene.validate().unwrap();
    }

    #[test]
    fn delete_window_glass_without_windows_is_noop() {
        let mut scene = pane_scene();
        scene.delete_window_glass();
        let objects_before = scene.objects.clone();
        scene.delete_window_glass();
        assert_eq!(scene.objects, objects_before);
    }

    #[test]
    fn depth_behind_pane_matches_second_hit() {
        use crate::geom::{Bvh, Ray, SceneTri};
        let scene = pane_scene();
        let to_tris = |s: &Scene| -> Vec<SceneTri> {
            s.objects
                .iter()
                .flat_map(|o| {
                    (0..o.mesh.triangles.len()).map(move |i| {
                        let [v0, v1, v2] = o.mesh.triangle_vertices(i);
                        SceneTri {
                            v0: o.transform.apply_point(v0),
                            v1: o.transform.apply_point(v1),
                            v2: o.transform.apply_point(v2),
                            data: crate::geom::HitData { object_id: o.id, material_id: 0, part_id: 0 },
                        }
                    })
                })
                .collect()
        };
        let ray = Ray::new(vec3(0.4, -1.0, 0.5), vec3(0.0, 1.0, 0.0));
        let before = Bvh::build(to_tris(&scene)).unwrap();
        let first = before.intersect(&ray, f64::INFINITY).unwrap();
        assert_eq!(first.data.object_id, 10, "pane is the first hit");
        // Second hit: continue past the pane's two faces.
        let second = {
            let mut t0 = first.t;
            loop {
                let next = before
                    .intersect(&Ray::new(ray.at(t0), ray.dir), f64::INFINITY)
                    .expect("wall behind");
                t0 += next.t;
                if next.data.object_id != 10 {
                    break t0;
                }
            }
        };
        let mut edited = scene;
        edited.delete_window_glass();
        let after = Bvh::build(to_tris(&edited)).unwrap();
        let hit = after.intersect(&ray, f64::INFINITY).unwrap();
        assert_eq!(hit.data.object_id, 20);
        assert!((hit.t - second).abs() < 1e-9);
    }

    #[test]
    fn remove_ceiling_requires_room() {
        let mut scene = Scene::empty(SceneType::DenseFloating, 3);
        assert!(matches!(scene.remove_ceiling(), Err(SceneError::NoCeiling)));
    }

    #[test]
    fn empty_scene_stats_are_zero() {
        let scene = Scene::empty(SceneType::IndoorFloating, 0);
        let stats = scene.stats();
        assert_eq!(stats.object_count, 0);
        assert_eq!(stats.triangle_count, 0);
        assert_eq!(stats.light_count, 0);
        assert!(stats.bounds_min.is_none());
    }

    #[test]
    fn floating_background_exclusive() {
        let mut scene = pane_scene();
        scene.objects[0].tags = vec![ObjectTag::Floating, ObjectTag::Background];
        assert!(scene.validate().is_err());
    }
}
