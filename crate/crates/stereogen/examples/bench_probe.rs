use std::time::Instant;
use stereogen::compose::{compose_scene, Composed, GenConfig};
use stereogen::render::{render, FrozenScene, RenderCamera, RenderSettings};
use stereogen::geom::StereoView;

fn main() {
    let config = GenConfig { seed: 5, rigs_per_scene: 1, rig_candidates: 60, ..Default::default() };
    let t0 = Instant::now();
    let scene = match compose_scene(&config, 0).unwrap() {
        Composed::Static(s) => s,
        _ => unreachable!(),
    };
    println!("compose: {:?}, tris={}, objects={}", t0.elapsed(), scene.stats().triangle_count, scene.objects.len());
    let t1 = Instant::now();
    let frozen = FrozenScene::freeze(&scene);
    println!("freeze: {:?}", t1.elapsed());
    let cam = RenderCamera::from_rig(&scene.rigs[0], StereoView::Left);
    let settings = RenderSettings { width: 160, height: 90, spp: 16, denoise: false, ..Default::default() };
    // pure ray throughput on the composed scene
    {
        use stereogen::geom::{Ray, vec3};
        use stereogen::rng::Pcg32;
        let bvh = {
            let mut tris = Vec::new();
            for obj in &scene.objects {
                for i in 0..obj.mesh.triangles.len() {
                    let [v0, v1, v2] = obj.mesh.triangle_vertices(i);
                    tris.push(stereogen::geom::SceneTri {
                        v0: obj.transform.apply_point(v0),
                        v1: obj.transform.apply_point(v1),
                        v2: obj.transform.apply_point(v2),
                        data: Default::default(),
                    });
                }
            }
            stereogen::geom::Bvh::build(tris).unwrap()
        };
        let mut rng = Pcg32::new(1, 1);
        let n = 1_000_000;
        let t = Instant::now();
        let mut hits = 0u64;
        for _ in 0..n {
            let o = vec3(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0), rng.range(0.3, 2.2));
            let d = vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
            if bvh.intersect(&Ray::new(o, d), f64::INFINITY).is_some() { hits += 1; }
        }
        println!("bvh: {:.0} ns/ray, hit rate {:.3}", t.elapsed().as_secs_f64()/n as f64*1e9, hits as f64/n as f64);
        // same soup but only small objects (no architecture slabs)
        let mut tris2 = Vec::new();
        for obj in scene.objects.iter().filter(|o| !o.tags.contains(&stereogen::scene::ObjectTag::Architecture)) {
            for i in 0..obj.mesh.triangles.len() {
                let [v0, v1, v2] = obj.mesh.triangle_vertices(i);
                tris2.push(stereogen::geom::SceneTri {
                    v0: obj.transform.apply_point(v0),
                    v1: obj.transform.apply_point(v1),
                    v2: obj.transform.apply_point(v2),
                    data: Default::default(),
                });
            }
        }
        println!("non-arch tris: {}", tris2.len());
        let bvh2 = stereogen::geom::Bvh::build(tris2).unwrap();
        let t = Instant::now();
        let mut hits2 = 0u64;
        for _ in 0..n {
            let o = vec3(rng.range(-2.0, 2.0), rng.range(-2.0, 2.0), rng.range(0.3, 2.2));
            let d = vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
            if bvh2.intersect(&Ray::new(o, d), f64::INFINITY).is_some() { hits2 += 1; }
        }
        println!("bvh no-arch: {:.0} ns/ray, hit rate {:.3}", t.elapsed().as_secs_f64()/n as f64*1e9, hits2 as f64/n as f64);
    }
    // rayon sanity: a pure busy loop should scale with threads
    for threads in [1usize, 8] {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let t = Instant::now();
        let total: u64 = pool.install(|| (0..64_000_000u64 as usize).into_par_iter().with_min_len(1024).map(|x| (x as u64).wrapping_mul(0x9e3779b9)).map(|x| (x >> 7) & 1).sum());
        println!("busy {threads}t: {:?} (sum {total})", t.elapsed());
    }
    for threads in [1usize] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let t2 = Instant::now();
        let f = pool.install(|| render(&frozen, &cam, &settings));
        let dt = t2.elapsed();
        let samples = 160.0 * 90.0 * 16.0;
        println!("render {threads}t: {:?} ({:.2} us/sample), mean={:.3}", dt, dt.as_secs_f64()/samples*1e6, f.mean_intensity());
    }
    // dump preview frames for several seeds
    for seed in [5u64, 6, 7, 8] {
        let config = GenConfig { seed, rigs_per_scene: 1, rig_candidates: 60, ..Default::default() };
        let scene = match compose_scene(&config, 0).unwrap() { Composed::Static(s) => s, _ => unreachable!() };
        let frozen = FrozenScene::freeze(&scene);
        let cam = RenderCamera::from_rig(&scene.rigs[0], StereoView::Left);
        let settings = RenderSettings { width: 320, height: 180, spp: 48, denoise: true, ..Default::default() };
        let f = render(&frozen, &cam, &settings);
        let mut raw = Vec::new();
        for px in &f.rgb {
            for c in 0..3 { raw.push(stereogen::dataset::linear_to_srgb_u8(px[c])); }
        }
        let img: image::RgbImage = image::ImageBuffer::from_raw(320, 180, raw).unwrap();
        img.save(format!("/tmp/preview_{seed}.png")).unwrap();
        println!("seed {seed}: mean={:.4}, lights={}", f.mean_intensity(), scene.lights.len());
    }
}
// quick rayon sanity probe appended by bench
