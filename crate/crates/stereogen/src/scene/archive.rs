//! Scene archive: a directory holding `scene.json` plus one binary mesh blob
//! per object. The JSON carries ids, names, transforms, materials, lights,
//! rigs, and the seed; blobs carry little-endian float32 positions, uint32
//! triangle indices, and uint32 per-triangle part ids. See docs/formats.md.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{vec3, RigidTransform, StereoRig, TriangleMesh};
use crate::scene::{LightSource, Material, ObjectTag, RoomRecord, Scene, SceneObject, SceneType};

const MESH_MAGIC: &[u8; 8] = b"SGMESH01";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("descriptor parse error: {0}")]
    Descriptor(#[from] serde_json::Error),
    #[error("bad mesh blob {path}: {reason}")]
    BadBlob { path: String, reason: &'static str },
    #[error("unsupported archive version {0}")]
    Version(u32),
}

fn io_err(path: &Path, source: std::io::Error) -> ArchiveError {
    ArchiveError::Io { path: path.display().to_string(), source }
}

#[derive(Serialize, Deserialize)]
struct ObjectEntry {
    id: u32,
    name: String,
    tags: Vec<ObjectTag>,
    thin_structure: bool,
    transform: RigidTransform,
    part_materials: Vec<(u32, u32)>,
    mesh_file: String,
    vertex_count: u32,
    triangle_count: u32,
}

#[derive(Serialize, Deserialize)]
struct Descriptor {
    version: u32,
    seed: u64,
    scene_type: SceneType,
    materials: Vec<Material>,
    lights: Vec<LightSource>,
    rigs: Vec<StereoRig>,
    room: Option<RoomRecord>,
    objects: Vec<ObjectEntry>,
}

fn write_mesh_blob(path: &Path, mesh: &TriangleMesh) -> Result<(), ArchiveError> {
    let mut buf: Vec<u8> = Vec::with_capacity(16 + mesh.positions.len() * 12 + mesh.triangles.len() * 16);
    buf.extend_from_slice(MESH_MAGIC);
    buf.extend_from_slice(&(mesh.positions.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for p in &mesh.positions {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    for t in &mesh.triangles {
        for i in t {
            buf.extend_from_slice(&i.to_le_bytes());
        }
    }
    for p in &mesh.tri_part {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&buf).map_err(|e| io_err(path, e))
}

fn read_mesh_blob(path: &Path) -> Result<TriangleMesh, ArchiveError> {
    let mut data = Vec::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut data)
        .map_err(|e| io_err(path, e))?;
    let bad = |reason: &'static str| ArchiveError::BadBlob { path: path.display().to_string(), reason };
    if data.len() < 16 || &data[..8] != MESH_MAGIC {
        return Err(bad("missing magic"));
    }
    let nv = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
    let nt = u32::from_le_bytes(data[12..16].try_into().unwrap()) as usize;
    let expect = 16 + nv * 12 + nt * 12 + nt * 4;
    if data.len() != expect {
        return Err(bad("truncated payload"));
    }
    let mut off = 16;
    let f32_at = |off: usize| f32::from_le_bytes(data[off..off + 4].try_into().unwrap());
    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let x = f32_at(off) as f64;
        let y = f32_at(off + 4) as f64;
        let z = f32_at(off + 8) as f64;
        positions.push(vec3(x, y, z));
        off += 12;
    }
    let u32_at = |off: usize| u32::from_le_bytes(data[off..off + 4].try_into().unwrap());
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        triangles.push([u32_at(off), u32_at(off + 4), u32_at(off + 8)]);
        off += 12;
    }
    let mut tri_part = Vec::with_capacity(nt);
    for _ in 0..nt {
        tri_part.push(u32_at(off));
        off += 4;
    }
    Ok(TriangleMesh { positions, triangles, tri_part })
}

/// Write a scene archive into `dir`, creating it if needed.
pub fn write_archive(scene: &Scene, dir: &Path) -> Result<(), ArchiveError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut objects = Vec::with_capacity(scene.objects.len());
    for obj in &scene.objects {
        let mesh_file = format!("mesh_{:04}.bin", obj.id);
        write_mesh_blob(&dir.join(&mesh_file), &obj.mesh)?;
        objects.push(ObjectEntry {
            id: obj.id,
            name: obj.name.clone(),
            tags: obj.tags.clone(),
            thin_structure: obj.thin_structure,
            transform: obj.transform,
            part_materials: obj.part_materials.clone(),
            mesh_file,
            vertex_count: obj.mesh.positions.len() as u32,
            triangle_count: obj.mesh.triangles.len() as u32,
        });
    }
    let descriptor = Descriptor {
        version: ARCHIVE_VERSION,
        seed: scene.seed,
        scene_type: scene.scene_type,
        materials: scene.materials.clone(),
        lights: scene.lights.clone(),
        rigs: scene.rigs.clone(),
        room: scene.room.clone(),
        objects,
    };
    let path = dir.join("scene.json");
    let json = serde_json::to_vec_pretty(&descriptor)?;
    let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
    f.write_all(&json).map_err(|e| io_err(&path, e))?;
    f.write_all(b"\n").map_err(|e| io_err(&path, e))
}

pub fn read_archive(dir: &Path) -> Result<Scene, ArchiveError> {
    let path = dir.join("scene.json");
    let json = fs::read(&path).map_err(|e| io_err(&path, e))?;
    let descriptor: Descriptor = serde_json::from_slice(&json)?;
    if descriptor.version != ARCHIVE_VERSION {
        return Err(ArchiveError::Version(descriptor.version));
    }
    let mut objects = Vec::with_capacity(descriptor.objects.len());
    for entry in descriptor.objects {
        let mesh = read_mesh_blob(&dir.join(&entry.mesh_file))?;
        objects.push(SceneObject {
            id: entry.id,
            name: entry.name,
            mesh,
            transform: entry.transform,
            part_materials: entry.part_materials,
            tags: entry.tags,
            thin_structure: entry.thin_structure,
        });
    }
    Ok(Scene {
        objects,
        materials: descriptor.materials,
        lights: descriptor.lights,
        rigs: descriptor.rigs,
        seed: descriptor.seed,
        scene_type: descriptor.scene_type,
        room: descriptor.room,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Mat3, PinholeIntrinsics};
    use crate::scene::MaterialKind;

    fn sample_scene() -> Scene {
        let mut scene = Scene::empty(SceneType::IndoorFloating, 99);
        scene.materials.push(Material::diffuse(1, "oak", [0.6, 0.4, 0.2]).with_noise(3.0, 0.4));
        scene.materials.push(Material {
            id: 2,
            name: "brushed_steel".into(),
            kind: MaterialKind::Metal,
            albedo: [0.8, 0.8, 0.85],
            roughness: 0.3,
            ior: 1.0,
            emission: [0.0; 3],
            noise_scale: 0.0,
            noise_amount: 0.0,
        });
        scene.lights.push(LightSource::Point {
            position: vec3(1.0, 2.0, 2.5),
            power_w: 400.0,
            color: [1.0, 0.9, 0.8],
        });
        scene.lights.push(LightSource::Environment { sky_strength: 0.6, sky_color: [0.5, 0.7, 1.0] });
        let mut mesh = TriangleMesh::make_box(vec3(0.0, 0.0, 0.0), vec3(1.0, 1.0, 0.1), 0);
        mesh.merge(&TriangleMesh::make_cylinder(0.05, 0.7, 12, 0), 1);
        scene.objects.push(SceneObject {
            id: 1,
            name: "table.000".into(),
            mesh,
            transform: RigidTransform::from_parts(Mat3::rot_z(0.37), vec3(0.5, -0.25, 0.0)),
            part_materials: vec![(0, 1), (1, 2)],
            tags: vec![ObjectTag::Background],
            thin_structure: false,
        });
        scene.rigs.push(
            StereoRig::new(
                PinholeIntrinsics::default_hd(),
                RigidTransform::from_parts(Mat3::rot_z(1.1), vec3(2.0, 1.0, 1.5)),
                0.21,
            )
            .unwrap(),
        );
        scene
    }

    #[test]
    fn archive_round_trip_preserves_identity() {
        let scene = sample_scene();
        let dir = tempfile::tempdir().unwrap();
        write_archive(&scene, dir.path()).unwrap();
        let back = read_archive(dir.path()).unwrap();
        assert_eq!(back.seed, scene.seed);
        assert_eq!(back.scene_type, scene.scene_type);
        assert_eq!(back.materials, scene.materials);
        assert_eq!(back.lights, scene.lights);
        assert_eq!(back.rigs.len(), 1);
        assert_eq!(back.objects.len(), 1);
        let (a, b) = (&scene.objects[0], &back.objects[0]);
        assert_eq!(a.id, b.id);
        assert_eq!(a.name, b.name);
        assert_eq!(a.tags, b.tags);
        assert_eq!(a.part_materials, b.part_materials);
        let dt = (a.transform.translation - b.transform.translation).length();
        assert!(dt <= 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                assert!((a.transform.rotation.0[i][j] - b.transform.rotation.0[i][j]).abs() <= 1e-9);
            }
        }
        assert_eq!(a.mesh.triangles, b.mesh.triangles);
        assert_eq!(a.mesh.tri_part, b.mesh.tri_part);
        // Positions are quantized to f32 by the blob format.
        for (p, q) in a.mesh.positions.iter().zip(&b.mesh.positions) {
            assert!((*p - *q).length() < 1e-6);
        }
    }

    #[test]
    fn writes_are_byte_deterministic() {
        let scene = sample_scene();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_archive(&scene, d1.path()).unwrap();
        write_archive(&scene, d2.path()).unwrap();
        for name in ["scene.json", "mesh_0001.bin"] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical writes");
        }
    }

    #[test]
    fn truncated_blob_is_detected() {
        let scene = sample_scene();
        let dir = tempfile::tempdir().unwrap();
        write_archive(&scene, dir.path()).unwrap();
        let blob = dir.path().join("mesh_0001.bin");
        let data = fs::read(&blob).unwrap();
        fs::write(&blob, &data[..data.len() - 5]).unwrap();
        match read_archive(dir.path()) {
            Err(ArchiveError::BadBlob { reason, .. }) => assert_eq!(reason, "truncated payload"),
            other => panic!("expected BadBlob, got {other:?}"),
        }
    }
}
