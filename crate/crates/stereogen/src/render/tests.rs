use super::*;
use crate::geom::{vec3, Mat3, TriangleMesh};
use crate::scene::{Material, MaterialKind, ObjectTag, SceneObject, SceneType};

fn push_object(scene: &mut Scene, name: &str, mesh: TriangleMesh, material: u32, tags: Vec<ObjectTag>) {
    let id = scene.next_object_id();
    let parts = mesh.part_ids();
    scene.objects.push(SceneObject {
        id,
        name: format!("{name}.{:03}", id),
        mesh,
        transform: RigidTransform::IDENTITY,
        part_materials: parts.iter().map(|&p| (p, material)).collect(),
        tags,
        thin_structure: false,
    });
}

/// Lambertian sphere floating in a uniform environment.
fn furnace_scene(albedo: f64) -> Scene {
    let mut scene = Scene::empty(SceneType::DenseFloating, 7);
    let mat = scene.add_material(Material::diffuse(0, "probe", [albedo; 3]));
    push_object(
        &mut scene,
        "sphere",
        TriangleMesh::make_icosphere(1.0, 3, 0).transformed(&RigidTransform::translate(vec3(0.0, 0.0, 4.0))),
        mat,
        vec![ObjectTag::Floating],
    );
    scene.lights.push(crate::scene::LightSource::Environment { sky_strength: 1.0, sky_color: [1.0; 3] });
    scene
}

/// Closed diffuse box room with a point light, camera inside.
fn box_room_scene() -> Scene {
    let mut scene = Scene::empty(SceneType::IndoorFloating, 11);
    let wall = scene.add_material(Material::diffuse(0, "wall", [0.6, 0.55, 0.5]));
    let accent = scene.add_material(Material::diffuse(0, "accent", [0.25, 0.35, 0.6]).with_noise(3.0, 0.4));
    let s = 3.0;
    // Six slabs enclosing [-s, s]^2 x [0, 2.5].
    let walls = [
        TriangleMesh::make_box(vec3(-s, -s, -0.1), vec3(s, s, 0.0), 0),
        TriangleMesh::make_box(vec3(-s, -s, 2.5), vec3(s, s, 2.6), 0),
        TriangleMesh::make_box(vec3(-s - 0.1, -s, 0.0), vec3(-s, s, 2.5), 0),
        TriangleMesh::make_box(vec3(s, -s, 0.0), vec3(s + 0.1, s, 2.5), 0),
        TriangleMesh::make_box(vec3(-s, -s - 0.1, 0.0), vec3(s, -s, 2.5), 0),
        TriangleMesh::make_box(vec3(-s, s, 0.0), vec3(s, s + 0.1, 2.5), 0),
    ];
    for w in walls {
        push_object(&mut scene, "wall", w, wall, vec![ObjectTag::Architecture]);
    }
    push_object(
        &mut scene,
        "box",
        TriangleMesh::make_box(vec3(-0.5, 0.8, 0.0), vec3(0.5, 1.8, 1.0), 0),
        accent,
        vec![ObjectTag::Background],
    );
    scene.lights.push(crate::scene::LightSource::Point {
        position: vec3(0.0, 0.0, 2.3),
        power_w: 800.0,
        color: [1.0, 0.95, 0.9],
    });
    scene
}

fn small_settings(spp: u32, seed: u64) -> RenderSettings {
    RenderSettings {
        spp,
        max_bounces: 6,
        width: 48,
        height: 32,
        denoise: false,
        tile: 16,
        seed,
        firefly_clamp: DEFAULT_FIREFLY_CLAMP,
    }
}

#[test]
fn furnace_converges_to_albedo() {
    let scene = furnace_scene(0.7);
    let frozen = FrozenScene::freeze(&scene);
    let settings = RenderSettings { width: 32, height: 32, spp: 256, denoise: false, ..Default::default() };
    let camera = RenderCamera::new(
        PinholeIntrinsics::with_hfov(32, 32, 40f64.to_radians()),
        RigidTransform::IDENTITY,
    );
    let frame = render(&frozen, &camera, &settings);
    // Interior pixels only; silhouette pixels mix sphere and sky.
    for y in 12..20 {
        for x in 12..20 {
            let i = frame.idx(x, y);
            assert_eq!(frame.object_id[i], 1, "center pixels must hit the sphere");
            for c in frame.rgb[i] {
                assert!((c - 0.7).abs() < 0.014, "furnace pixel {c}");
            }
        }
    }
}

#[test]
fn frontal_wall_depth_is_exact() {
    let mut scene = Scene::empty(SceneType::DenseFloating, 3);
    let mat = scene.add_material(Material::diffuse(0, "wall", [0.5; 3]));
    push_object(
        &mut scene,
        "wall",
        TriangleMesh::make_box(vec3(-50.0, -50.0, 5.0), vec3(50.0, 50.0, 5.2), 0),
        mat,
        vec![ObjectTag::Architecture],
    );
    scene.lights.push(crate::scene::LightSource::Environment { sky_strength: 1.0, sky_color: [1.0; 3] });
    let frozen = FrozenScene::freeze(&scene);
    let settings = small_settings(4, 0);
    let camera = RenderCamera::new(
        PinholeIntrinsics::with_hfov(48, 32, 60f64.to_radians()),
        RigidTransform::IDENTITY,
    );
    let frame = render(&frozen, &camera, &settings);
    for &d in &frame.depth {
        assert_eq!(d, 5.0f32, "camera-frame z must be exactly the plane depth");
    }
}

#[test]
fn render_is_thread_count_invariant() {
    let scene = box_room_scene();
    let frozen = FrozenScene::freeze(&scene);
    let settings = small_settings(8, 42);
    let camera = RenderCamera::new(
        PinholeIntrinsics::with_hfov(48, 32, 70f64.to_radians()),
        look_at(vec3(0.0, -2.5, 1.4), vec3(0.0, 1.0, 1.0)),
    );
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| render(&frozen, &camera, &settings))
    };
    let a = run(1);
    let b = run(8);
    assert_eq!(a.rgb, b.rgb);
    assert_eq!(a.depth, b.depth);
    assert_eq!(a.object_id, b.object_id);
    assert_eq!(a.clamped_samples, b.clamped_samples);
}

#[test]
fn doubling_spp_halves_variance() {
    let scene = box_room_scene();
    let frozen = FrozenScene::freeze(&scene);
    let camera = RenderCamera::new(
        PinholeIntrinsics::with_hfov(48, 32, 70f64.to_radians()),
        look_at(vec3(0.0, -2.5, 1.4), vec3(0.0, 1.0, 1.0)),
    );
    let mean_pixel_variance = |spp: u32| {
        let runs = 12;
        let frames: Vec<FrameBuffers> = (0..runs)
            .map(|k| render(&frozen, &camera, &small_settings(spp, 1000 + k)))
            .collect();
        let n = frames[0].pixel_count();
        let mut total = 0.0f64;
        for i in 0..n {
            for c in 0..3 {
                let vals: Vec<f64> = frames.iter().map(|f| f.rgb[i][c] as f64).collect();
                let mean = vals.iter().sum::<f64>() / runs as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
                total += var;
            }
        }
        total / (n * 3) as f64
    };
    let v16 = mean_pixel_variance(16);
    let v32 = mean_pixel_variance(32);
    let ratio = v16 / v32;
    assert!((1.6..=2.4).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn zero_baseline_rig_renders_identical_views() {
    let scene = box_room_scene();
    let frozen = FrozenScene::freeze(&scene);
    let rig = StereoRig::degenerate(
        PinholeIntrinsics::with_hfov(48, 32, 70f64.to_radians()),
        look_at(vec3(0.5, -2.0, 1.5), vec3(0.0, 1.0, 1.0)),
    );
    let (l, r) = render_stereo(&frozen, &rig, &small_settings(8, 5));
    assert_eq!(l.rgb, r.rgb);
    assert_eq!(l.depth, r.depth);
}

#[test]
fn gt_buffers_ignore_spp_and_denoise() {
    let scene = box_room_scene();
    let frozen = FrozenScene::freeze(&scene);
    let camera = RenderCamera::new(
        PinholeIntrinsics::with_hfov(48, 32, 70f64.to_radians()),
        look_at(vec3(0.0, -2.5, 1.4), vec3(0.0, 1.0, 1.0)),
    );
    let a = render(&frozen, &camera, &small_settings(2, 9));
    let mut noisy = small_settings(16, 9);
    noisy.denoise = true;
    let b = render(&frozen, &camera, &noisy);
    assert_eq!(a.depth, b.depth);
    assert_eq!(a.object_id, b.object_id);
    assert_eq!(a.material_id, b.material_id);
    assert_eq!(a.normal, b.normal);
    assert_eq!(a.albedo, b.albedo);
}

#[test]
fn radiance_is_finite_and_nonnegative() {
    let scene = box_room_scene();
    let frozen = FrozenScene::freeze(&scene);
    let camera = RenderCamera::new(
        PinholeIntrinsics::with_hfov(48, 32, 70f64.to_radians()),
        look_at(vec3(1.5, -2.0, 1.2), vec3(-1.0, 1.0, 0.8)),
    );
    let frame = render(&frozen, &camera, &small_settings(32, 77));
    for c in frame.rgb.iter().flatten() {
        assert!(c.is_finite() && *c >= 0.0);
    }
}

#[test]
fn rectified_disparity_identity_on_rendered_plane() {
    // For a frontal plane, disparity from depth matches fx*B/z at every pixel.
    let mut scene = Scene::empty(SceneType::DenseFloating, 3);
    let mat = scene.add_material(Material::diffuse(0, "wall", [0.5; 3]).with_noise(5.0, 0.5));
    push_object(
        &mut scene,
        "wall",
        TriangleMesh::make_box(vec3(-50.0, -50.0, 8.0), vec3(50.0, 50.0, 8.2), 0),
        mat,
        vec![ObjectTag::Architecture],
    );
    scene.lights.push(crate::scene::LightSource::Environment { sky_strength: 1.0, sky_color: [1.0; 3] });
    let frozen = FrozenScene::freeze(&scene);
    let intr = PinholeIntrinsics::with_hfov(64, 40, 60f64.to_radians());
    let rig = StereoRig::new(intr, RigidTransform::from_parts(Mat3::rot_z(0.2), vec3(0.3, -0.1, 1.0)), 0.25).unwrap();
    let (l, r) = render_stereo(&frozen, &rig, &small_settings(2, 0));
    // Camera sits at world z=1 looking along +z, so camera-frame depth is 7.
    let expected = (intr.fx * rig.baseline_m / 7.0) as f32;
    for i in 0..l.pixel_count() {
        assert_eq!(l.depth[i], 7.0f32);
        assert_eq!(r.depth[i], 7.0f32);
        let d = (intr.fx as f32) * (rig.baseline_m as f32) / l.depth[i];
        assert_eq!(d, expected);
    }
}
