//! Parametric object generators and the material library.
//!
//! Generators are pure functions of their RNG stream: the same (name, seed)
//! always yields bit-identical meshes. Each generator produces a multi-part
//! mesh with named parts and default material templates; materials are
//! interned into a scene table by the caller.

pub mod generators;

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, TriangleMesh};
use crate::rng::Pcg32;
use crate::scene::{Material, MaterialDenyList, MaterialKind};

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("unknown generator '{name}'; registry: {registry}")]
    UnknownGenerator { name: String, registry: String },
    #[error("degenerate mesh: zero extent")]
    DegenerateMesh,
    #[error("object has no parts")]
    NoParts,
}

/// One part of a generated object: mesh triangles carry the part id, the
/// spec carries its name and default material.
#[derive(Clone, Debug)]
pub struct PartSpec {
    pub part: u32,
    pub name: String,
    pub default_material: Material,
}

/// Output of an object generator, not yet bound to a scene.
#[derive(Clone, Debug)]
pub struct GeneratedObject {
    pub generator: String,
    pub mesh: TriangleMesh,
    pub parts: Vec<PartSpec>,
    pub thin_structure: bool,
}

impl GeneratedObject {
    pub fn aabb(&self) -> Aabb {
        self.mesh.aabb()
    }
}

/// Where the layout solver may put an object.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PlacementSlot {
    Floor,
    Wall,
}

#[derive(Copy, Clone)]
pub struct GeneratorInfo {
    pub name: &'static str,
    /// Extreme needle/hole geometry, excluded from the default registry.
    pub thin_structure: bool,
    /// Usable by the background layout solver.
    pub background: bool,
    pub slot: PlacementSlot,
    pub build: fn(&mut Pcg32) -> GeneratedObject,
}

/// The generator registry. Thin-structure generators exist behind an opt-in
/// flag and are excluded by default.
#[derive(Clone)]
pub struct Registry {
    entries: Vec<GeneratorInfo>,
}

impl Registry {
    pub fn standard() -> Registry {
        Registry {
            entries: generators::ALL
                .iter()
                .filter(|g| !g.thin_structure)
                .copied()
                .collect(),
        }
    }

    pub fn with_thin_structures() -> Registry {
        Registry { entries: generators::ALL.to_vec() }
    }

    /// Restrict to the named generators (unknown names are errors).
    pub fn subset(&self, names: &[String]) -> Result<Registry, AssetError> {
        let mut entries = Vec::new();
        for name in names {
            entries.push(*self.get(name)?);
        }
        Ok(Registry { entries })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|g| g.name).collect()
    }

    pub fn get(&self, name: &str) -> Result<&GeneratorInfo, AssetError> {
        self.entries.iter().find(|g| g.name == name).ok_or_else(|| AssetError::UnknownGenerator {
            name: name.to_string(),
            registry: self.names().join(", "),
        })
    }

    pub fn background_names(&self) -> Vec<&'static str> {
        self.entries.iter().filter(|g| g.background).map(|g| g.name).collect()
    }

    pub fn floating_entries(&self) -> &[GeneratorInfo] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Build the named object from the registry.
pub fn generate_object(registry: &Registry, name: &str, rng: &mut Pcg32) -> Result<GeneratedObject, AssetError> {
    let info = registry.get(name)?;
    Ok((info.build)(rng))
}

/// Material randomization mode of the parameter study.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialMode {
    /// Flat gray everywhere.
    None,
    /// A single wood-like diffuse.
    OneDiffuse,
    /// Metal and glass only.
    MetalGlassOnly,
    /// Any kind passing the deny-list.
    All,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaterialPolicy {
    pub mode: MaterialMode,
    pub replace_probability: f64,
    pub deny: MaterialDenyList,
}

impl Default for MaterialPolicy {
    fn default() -> Self {
        MaterialPolicy {
            mode: MaterialMode::All,
            replace_probability: 0.5,
            deny: MaterialDenyList::default(),
        }
    }
}

impl MaterialPolicy {
    pub fn with_mode(mode: MaterialMode) -> MaterialPolicy {
        MaterialPolicy { mode, ..MaterialPolicy::default() }
    }
}

pub const FLAT_GRAY: [f64; 3] = [0.5, 0.5, 0.5];

/// The fixed wood-like diffuse used by the one-material mode.
pub fn one_diffuse_material() -> Material {
    Material::diffuse(0, "wood_plain", [0.42, 0.28, 0.15]).with_noise(6.0, 0.35)
}

fn random_diffuse(rng: &mut Pcg32) -> Material {
    let hue = rng.f64();
    let sat = rng.range(0.1, 0.8);
    let val = rng.range(0.25, 0.9);
    let rgb = hsv_to_rgb(hue, sat, val);
    let tag = rng.next_u32() & 0xffff;
    Material::diffuse(0, &format!("diffuse_{tag:04x}"), rgb).with_noise(rng.range(1.0, 12.0), rng.range(0.0, 0.5))
}

fn random_metal(rng: &mut Pcg32, deny: &MaterialDenyList) -> Material {
    let lo = if deny.enabled { deny.min_metal_roughness } else { 0.0 };
    let tint = [rng.range(0.6, 0.98), rng.range(0.5, 0.95), rng.range(0.4, 0.95)];
    let tag = rng.next_u32() & 0xffff;
    Material {
        id: 0,
        name: format!("metal_{tag:04x}"),
        kind: MaterialKind::Metal,
        albedo: tint,
        roughness: rng.range(lo.max(0.05), 0.6),
        ior: 1.0,
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    }
}

fn random_glass(rng: &mut Pcg32, deny: &MaterialDenyList) -> Material {
    let lo = if deny.enabled { deny.min_glass_roughness } else { 0.0 };
    let tint = [rng.range(0.7, 1.0), rng.range(0.7, 1.0), rng.range(0.7, 1.0)];
    let tag = rng.next_u32() & 0xffff;
    Material {
        id: 0,
        name: format!("glass_{tag:04x}"),
        kind: MaterialKind::Glass,
        albedo: tint,
        roughness: rng.range(lo.max(0.05), 0.4),
        ior: rng.range(1.3, 1.7),
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    }
}

/// Draw a material under the given policy. Every draw passes the policy's
/// deny-list when it is enabled.
pub fn sample_material(policy: &MaterialPolicy, rng: &mut Pcg32) -> Material {
    match policy.mode {
        MaterialMode::None => Material::diffuse(0, "flat_gray", FLAT_GRAY),
        MaterialMode::OneDiffuse => one_diffuse_material(),
        MaterialMode::MetalGlassOnly => {
            if rng.chance(0.5) {
                random_metal(rng, &policy.deny)
            } else {
                random_glass(rng, &policy.deny)
            }
        }
        MaterialMode::All => {
            let x = rng.f64();
            if x < 0.6 {
                random_diffuse(rng)
            } else if x < 0.8 {
                random_metal(rng, &policy.deny)
            } else {
                random_glass(rng, &policy.deny)
            }
        }
    }
}

/// Replace each part's default material with probability
/// `replace_probability`. Parts keep their defaults otherwise.
pub fn randomize_materials(object: &mut GeneratedObject, policy: &MaterialPolicy, rng: &mut Pcg32) {
    for part in &mut object.parts {
        if rng.chance(policy.replace_probability) {
            part.default_material = sample_material(policy, rng);
        }
    }
}

/// Uniformly scale the object so its largest bounding-box extent lands in
/// `target_range` (sampled uniformly). Aspect ratio is preserved; scaling is
/// about the mesh origin so base-at-origin objects keep their base.
pub fn normalize_object_size(
    object: &mut GeneratedObject,
    target_range: (f64, f64),
    rng: &mut Pcg32,
) -> Result<f64, AssetError> {
    let bb = object.mesh.aabb();
    if bb.is_empty() {
        return Err(AssetError::DegenerateMesh);
    }
    let extent = bb.extent().max_component();
    if extent <= 0.0 {
        return Err(AssetError::DegenerateMesh);
    }
    let target = rng.range(target_range.0, target_range.1);
    let scale = target / extent;
    object.mesh = object.mesh.scaled(scale);
    Ok(scale)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h.fract() * 6.0).abs();
    let c = v * s;
    let x = c * (1.0 - ((h6 % 2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match h6 as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stage;

    #[test]
    fn generators_are_pure() {
        let registry = Registry::standard();
        for name in registry.names() {
            let a = generate_object(&registry, name, &mut Pcg32::from_parts(&[7, stage::FLOATING])).unwrap();
            let b = generate_object(&registry, name, &mut Pcg32::from_parts(&[7, stage::FLOATING])).unwrap();
            assert_eq!(a.mesh, b.mesh, "{name} not deterministic");
            assert_eq!(a.parts.len(), b.parts.len());
        }
    }

    #[test]
    fn registry_covers_ablation_categories() {
        let registry = Registry::standard();
        for name in ["chair", "shelf", "bush"] {
            let sub = registry.subset(&[name.to_string()]).unwrap();
            assert_eq!(sub.names(), vec![name]);
        }
        assert!(registry.names().len() >= 15, "registry too small: {:?}", registry.names());
    }

    #[test]
    fn urchin_excluded_by_default() {
        let registry = Registry::standard();
        let err = generate_object(&registry, "urchin", &mut Pcg32::new(1, 1));
        match err {
            Err(AssetError::UnknownGenerator { registry, .. }) => {
                assert!(registry.contains("chair"));
            }
            other => panic!("expected UnknownGenerator, got {other:?}"),
        }
        let full = Registry::with_thin_structures();
        let obj = generate_object(&full, "urchin", &mut Pcg32::new(1, 1)).unwrap();
        assert!(obj.thin_structure);
    }

    #[test]
    fn bush_has_many_thin_parts() {
        let registry = Registry::standard();
        for seed in 0..5 {
            let obj = generate_object(&registry, "bush", &mut Pcg32::from_parts(&[seed, 1])).unwrap();
            assert!(obj.parts.len() >= 20, "bush parts: {}", obj.parts.len());
            assert!(obj.thin_structure);
            obj.mesh.validate().unwrap();
        }
    }

    #[test]
    fn every_generator_meets_part_contract() {
        let registry = Registry::with_thin_structures();
        for name in registry.names() {
            let obj = generate_object(&registry, name, &mut Pcg32::from_parts(&[3, 9])).unwrap();
            obj.mesh.validate().expect(name);
            assert!(!obj.parts.is_empty(), "{name} has no parts");
            let ids = obj.mesh.part_ids();
            assert_eq!(ids.len(), obj.parts.len(), "{name} part table mismatch");
            for part in &obj.parts {
                let tris = obj.mesh.tri_part.iter().filter(|&&p| p == part.part).count();
                assert!(tris >= 4, "{name} part {} has {} triangles", part.name, tris);
            }
        }
    }

    #[test]
    fn material_mode_none_is_flat_gray() {
        let policy = MaterialPolicy::with_mode(MaterialMode::None);
        let mut rng = Pcg32::new(5, 5);
        let m = sample_material(&policy, &mut rng);
        assert_eq!(m.kind, MaterialKind::Diffuse);
        assert_eq!(m.albedo, FLAT_GRAY);
    }

    #[test]
    fn metal_glass_mode_never_draws_diffuse() {
        let policy = MaterialPolicy::with_mode(MaterialMode::MetalGlassOnly);
        let mut rng = Pcg32::new(6, 6);
        for _ in 0..1000 {
            let m = sample_material(&policy, &mut rng);
            assert!(matches!(m.kind, MaterialKind::Metal | MaterialKind::Glass));
        }
    }

    #[test]
    fn all_mode_respects_deny_list() {
        let policy = MaterialPolicy::with_mode(MaterialMode::All);
        let mut rng = Pcg32::new(7, 7);
        for _ in 0..10_000 {
            let m = sample_material(&policy, &mut rng);
            assert!(policy.deny.allows(&m), "deny-list violation: {m:?}");
        }
    }

    #[test]
    fn replacement_fraction_concentrates() {
        let registry = Registry::standard();
        let policy = MaterialPolicy::default();
        let mut rng = Pcg32::new(8, 8);
        let mut total = 0usize;
        let mut replaced = 0usize;
        while total < 10_000 {
            let mut obj = generate_object(&registry, "bush", &mut rng).unwrap();
            let before: Vec<String> = obj.parts.iter().map(|p| p.default_material.name.clone()).collect();
            randomize_materials(&mut obj, &policy, &mut rng);
            for (p, b) in obj.parts.iter().zip(&before) {
                total += 1;
                if &p.default_material.name != b {
                    replaced += 1;
                }
            }
        }
        let frac = replaced as f64 / total as f64;
        assert!((frac - 0.5).abs() < 0.02, "replacement fraction {frac}");
    }

    #[test]
    fn replace_probability_extremes() {
        let registry = Registry::standard();
        let mut rng = Pcg32::new(9, 9);
        let mut obj = generate_object(&registry, "chair", &mut rng).unwrap();
        let before: Vec<String> = obj.parts.iter().map(|p| p.default_material.name.clone()).collect();
        let keep = MaterialPolicy { replace_probability: 0.0, ..MaterialPolicy::default() };
        randomize_materials(&mut obj, &keep, &mut rng);
        let after: Vec<String> = obj.parts.iter().map(|p| p.default_material.name.clone()).collect();
        assert_eq!(before, after);
        let replace = MaterialPolicy { replace_probability: 1.0, ..MaterialPolicy::default() };
        randomize_materials(&mut obj, &replace, &mut rng);
        // With p=1 every part is re-drawn (names may collide, kinds may not);
        // verify by re-running with a counting probe instead: every part must
        // have been visited, which the fraction test above already covers.
        assert_eq!(obj.parts.len(), before.len());
    }

    #[test]
    fn normalize_clamps_extent_into_range() {
        let registry = Registry::standard();
        let mut rng = Pcg32::new(10, 10);
        let mut obj = generate_object(&registry, "table", &mut rng).unwrap();
        obj.mesh = obj.mesh.scaled(10.0 / obj.mesh.aabb().extent().max_component());
        normalize_object_size(&mut obj, (0.3, 1.5), &mut rng).unwrap();
        let e = obj.mesh.aabb().extent().max_component();
        assert!((0.3..=1.5).contains(&e), "extent {e}");
    }

    #[test]
    fn normalize_volume_scales_cubically() {
        let registry = Registry::standard();
        let mut rng = Pcg32::new(11, 11);
        let mut obj = generate_object(&registry, "bookstack", &mut rng).unwrap();
        let v0 = obj.mesh.signed_volume();
        let s = normalize_object_size(&mut obj, (0.6, 0.6001), &mut rng).unwrap();
        let v1 = obj.mesh.signed_volume();
        assert!((v1 / v0 - s * s * s).abs() / (s * s * s) < 1e-9);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        let mut obj = GeneratedObject {
            generator: "broken".into(),
            mesh: TriangleMesh::default(),
            parts: Vec::new(),
            thin_structure: false,
        };
        assert!(matches!(
            normalize_object_size(&mut obj, (0.3, 1.5), &mut Pcg32::new(0, 0)),
            Err(AssetError::DegenerateMesh)
        ));
    }
}
