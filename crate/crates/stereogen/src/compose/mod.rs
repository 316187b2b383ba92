//! Scene composition: indoor rooms with solver-placed furniture plus
//! floating objects, dense floating fields, and nature terrains, with
//! lighting augmentation and stereo-rig placement.

pub mod dense;
pub mod floating;
pub mod lighting;
pub mod nature;
pub mod rigs;
pub mod room;

use serde::{Deserialize, Serialize};

use crate::assets::{GeneratedObject, MaterialPolicy, Registry};
use crate::geom::{Aabb, Bvh, RigidTransform, SceneTri};
use crate::rng::{stage, Pcg32};
use crate::scene::{ObjectTag, Scene, SceneType};

pub use dense::{compose_dense_floating, DenseSceneSet};
pub use floating::{place_floating_bbox, place_floating_raycast, DepthLaw};
pub use lighting::augment_lighting;
pub use nature::compose_nature;
pub use rigs::place_camera_rigs;
pub use room::{compose_indoor, greedy_solve, RoomShell, SolveOutcome, SolverMode};

#[derive(Debug, thiserror::Error)]
pub enum ComposeError {
    #[error(transparent)]
    Asset(#[from] crate::assets::AssetError),
    #[error(transparent)]
    Scene(#[from] crate::scene::SceneError),
    #[error("camera path search failed after {0} attempts")]
    PathSearch(u32),
    #[error("scene type {0:?} cannot be composed by this operation")]
    WrongSceneType(SceneType),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightingMode {
    Realistic,
    Augmented,
}

/// Every parameter-study knob. Field defaults follow the reference
/// configuration; per-scene-type baseline defaults apply when
/// `baseline_range_m` is unset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenConfig {
    pub scene_type: SceneType,
    /// Optional (indoor, dense, nature) mix; when set, each scene index
    /// draws its type by these weights.
    pub mix_weights: Option<[f64; 3]>,
    pub floating_count_range: (u32, u32),
    pub background_objects: bool,
    /// Restrict the generator registry; `None` uses everything.
    pub object_subset: Option<Vec<String>>,
    pub include_thin_structures: bool,
    pub material_policy: MaterialPolicy,
    pub baseline_range_m: Option<(f64, f64)>,
    pub lighting_mode: LightingMode,
    pub solver_mode: SolverMode,
    /// Defaults to 60 for the greedy solver and 550 for the full solver.
    pub solver_steps: Option<u32>,
    pub allow_intersect: bool,
    pub delete_window_glass: bool,
    pub rigs_per_scene: u32,
    pub rig_candidates: u32,
    pub dense_object_count: u32,
    pub dense_rerandomizations: u32,
    pub nature_frames: u32,
    pub floating_size_range: (f64, f64),
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            scene_type: SceneType::IndoorFloating,
            mix_weights: None,
            floating_count_range: (10, 30),
            background_objects: true,
            object_subset: None,
            include_thin_structures: false,
            material_policy: MaterialPolicy::default(),
            baseline_range_m: None,
            lighting_mode: LightingMode::Augmented,
            solver_mode: SolverMode::Greedy,
            solver_steps: None,
            allow_intersect: false,
            delete_window_glass: true,
            rigs_per_scene: 20,
            rig_candidates: 200,
            dense_object_count: 200,
            dense_rerandomizations: 200,
            nature_frames: 50,
            floating_size_range: (0.3, 1.5),
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn registry(&self) -> Result<Registry, crate::assets::AssetError> {
        let base = if self.include_thin_structures {
            Registry::with_thin_structures()
        } else {
            Registry::standard()
        };
        match &self.object_subset {
            Some(names) => base.subset(names),
            None => Ok(base),
        }
    }

    pub fn solver_budget(&self) -> u32 {
        self.solver_steps.unwrap_or(match self.solver_mode {
            SolverMode::Greedy => 60,
            SolverMode::Full => 550,
        })
    }

    /// Baseline sampling range; per-scene-type defaults when unset.
    pub fn baseline_range(&self, scene_type: SceneType) -> (f64, f64) {
        self.baseline_range_m.unwrap_or(match scene_type {
            SceneType::IndoorFloating => (0.04, 0.4),
            SceneType::DenseFloating => (0.1, 0.4),
            SceneType::Nature => (0.075, 0.5),
        })
    }

    /// Scene type for a given scene index under the optional mix.
    pub fn scene_type_for(&self, scene_index: u32) -> SceneType {
        match self.mix_weights {
            None => self.scene_type,
            Some(w) => {
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return self.scene_type;
                }
                let mut rng = Pcg32::from_parts(&[self.seed, scene_index as u64, stage::SCENE_TYPE]);
                let x = rng.f64() * total;
                if x < w[0] {
                    SceneType::IndoorFloating
                } else if x < w[0] + w[1] {
                    SceneType::DenseFloating
                } else {
                    SceneType::Nature
                }
            }
        }
    }
}

/// One composed scene ready for rendering.
pub enum Composed {
    /// Indoor or nature scene: a single frozen scene with one rig per frame.
    Static(Scene),
    /// Dense floating set: variants materialized on demand.
    Dense(DenseSceneSet),
}

impl Composed {
    pub fn frame_count(&self) -> u32 {
        match self {
            Composed::Static(s) => s.rigs.len() as u32,
            Composed::Dense(d) => d.variant_count(),
        }
    }

    pub fn warnings(&self) -> u32 {
        match self {
            Composed::Static(_) => 0,
            Composed::Dense(_) => 0,
        }
    }
}

/// Compose the scene at `scene_index` under `config`. Deterministic in
/// (config, seed, scene_index) and independent of thread count.
pub fn compose_scene(config: &GenConfig, scene_index: u32) -> Result<Composed, ComposeError> {
    let scene_type = config.scene_type_for(scene_index);
    let mut rng = Pcg32::from_parts(&[config.seed, scene_index as u64, stage::COMPOSE]);
    match scene_type {
        SceneType::IndoorFloating => Ok(Composed::Static(compose_indoor(config, scene_index, &mut rng)?)),
        SceneType::DenseFloating => Ok(Composed::Dense(compose_dense_floating(config, scene_index, &mut rng)?)),
        SceneType::Nature => Ok(Composed::Static(compose_nature(config, scene_index, &mut rng)?)),
    }
}

// --- shared helpers ---

/// Intern a generated object into the scene with fresh material ids.
pub(crate) fn add_generated(
    scene: &mut Scene,
    mut object: GeneratedObject,
    transform: RigidTransform,
    tags: Vec<ObjectTag>,
    instance: u32,
) -> u32 {
    let id = scene.next_object_id();
    let mut part_materials = Vec::with_capacity(object.parts.len());
    for part in &mut object.parts {
        let mat_id = scene.add_material(part.default_material.clone());
        part_materials.push((part.part, mat_id));
    }
    part_materials.sort_unstable_by_key(|&(p, _)| p);
    scene.objects.push(crate::scene::SceneObject {
        id,
        name: format!("{}.{:03}", object.generator, instance),
        mesh: object.mesh,
        transform,
        part_materials,
        tags,
        thin_structure: object.thin_structure,
    });
    id
}

/// Recenter a mesh so its bounding-box center sits at the origin; floating
/// objects rotate about their centers.
pub(crate) fn recentered(object: &mut GeneratedObject) {
    let c = object.mesh.aabb().center();
    object.mesh = object
        .mesh
        .transformed(&RigidTransform::translate(-c));
}

/// World AABBs of collidable (non-architecture, non-terrain) objects.
pub(crate) fn collidable_aabbs(scene: &Scene) -> Vec<Aabb> {
    scene
        .objects
        .iter()
        .filter(|o| {
            !o.has_tag(ObjectTag::Architecture) && !o.has_tag(ObjectTag::Terrain)
        })
        .map(|o| o.world_aabb())
        .collect()
}

/// Geometry-only BVH over the scene as currently composed.
pub(crate) fn scene_bvh(scene: &Scene) -> Option<Bvh> {
    let mut tris: Vec<SceneTri> = Vec::new();
    for obj in &scene.objects {
        for i in 0..obj.mesh.triangles.len() {
            let [v0, v1, v2] = obj.mesh.triangle_vertices(i);
            tris.push(SceneTri {
                v0: obj.transform.apply_point(v0),
                v1: obj.transform.apply_point(v1),
                v2: obj.transform.apply_point(v2),
                data: crate::geom::HitData {
                    object_id: obj.id,
                    material_id: 0,
                    part_id: 0,
                },
            });
        }
    }
    if tris.is_empty() {
        None
    } else {
        Some(Bvh::build(tris).expect("nonempty"))
    }
}

/// Uniform random rotation from three Euler draws; adequate coverage for
/// tumbling floating objects.
pub(crate) fn random_orientation(rng: &mut Pcg32) -> crate::geom::Mat3 {
    use crate::geom::Mat3;
    let yaw = rng.range(0.0, std::f64::consts::TAU);
    let pitch = rng.range(0.0, std::f64::consts::TAU);
    let roll = rng.range(0.0, std::f64::consts::TAU);
    Mat3::rot_z(yaw).matmul(&Mat3::rot_y(pitch)).matmul(&Mat3::rot_x(roll))
}
