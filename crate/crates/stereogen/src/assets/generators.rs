//! The parametric generator library. Builders assemble boxes, cylinders,
//! lathes, cards, and deformed spheres into multi-part objects with base at
//! z=0, sized in meters.

use crate::geom::{vec3, Mat3, RigidTransform, TriangleMesh, Vec3};
use crate::rng::Pcg32;
use crate::scene::{Material, MaterialKind};

use super::{GeneratedObject, GeneratorInfo, PartSpec, PlacementSlot};

struct Builder {
    generator: &'static str,
    mesh: TriangleMesh,
    parts: Vec<PartSpec>,
}

impl Builder {
    fn new(generator: &'static str) -> Builder {
        Builder { generator, mesh: TriangleMesh::default(), parts: Vec::new() }
    }

    fn part(&mut self, name: impl Into<String>, material: Material, mut part_mesh: TriangleMesh) -> u32 {
        let id = self.parts.len() as u32;
        for p in part_mesh.tri_part.iter_mut() {
            *p = id;
        }
        self.mesh.merge(&part_mesh, 0);
        self.parts.push(PartSpec { part: id, name: name.into(), default_material: material });
        id
    }

    fn finish(self, thin_structure: bool) -> GeneratedObject {
        GeneratedObject {
            generator: self.generator.to_string(),
            mesh: self.mesh,
            parts: self.parts,
            thin_structure,
        }
    }
}

fn box_at(cx: f64, cy: f64, z0: f64, w: f64, d: f64, h: f64) -> TriangleMesh {
    TriangleMesh::make_box(vec3(cx - w * 0.5, cy - d * 0.5, z0), vec3(cx + w * 0.5, cy + d * 0.5, z0 + h), 0)
}

fn placed(mesh: TriangleMesh, yaw: f64, at: Vec3) -> TriangleMesh {
    mesh.transformed(&RigidTransform::from_parts(Mat3::rot_z(yaw), at))
}

fn tilted(mesh: TriangleMesh, yaw: f64, tilt: f64, at: Vec3) -> TriangleMesh {
    let rot = Mat3::rot_z(yaw).matmul(&Mat3::rot_x(tilt));
    mesh.transformed(&RigidTransform::from_parts(rot, at))
}

// --- default material palette ---

fn wood(rng: &mut Pcg32) -> Material {
    let shade = rng.range(0.25, 0.7);
    let albedo = [shade, shade * rng.range(0.55, 0.75), shade * rng.range(0.25, 0.45)];
    Material::diffuse(0, &format!("wood_{:04x}", rng.next_u32() & 0xffff), albedo)
        .with_noise(rng.range(4.0, 14.0), rng.range(0.2, 0.45))
}

fn painted(rng: &mut Pcg32) -> Material {
    let albedo = [rng.range(0.2, 0.9), rng.range(0.2, 0.9), rng.range(0.2, 0.9)];
    Material::diffuse(0, &format!("paint_{:04x}", rng.next_u32() & 0xffff), albedo)
}

fn fabric(rng: &mut Pcg32) -> Material {
    let albedo = [rng.range(0.2, 0.8), rng.range(0.15, 0.7), rng.range(0.15, 0.7)];
    Material::diffuse(0, &format!("fabric_{:04x}", rng.next_u32() & 0xffff), albedo)
        .with_noise(rng.range(20.0, 60.0), rng.range(0.05, 0.2))
}

fn plastic(rng: &mut Pcg32) -> Material {
    let v = rng.range(0.1, 0.9);
    Material::diffuse(0, &format!("plastic_{:04x}", rng.next_u32() & 0xffff), [v, v, v])
}

fn ceramic(rng: &mut Pcg32) -> Material {
    let albedo = [rng.range(0.5, 0.95), rng.range(0.5, 0.95), rng.range(0.45, 0.9)];
    Material::diffuse(0, &format!("ceramic_{:04x}", rng.next_u32() & 0xffff), albedo)
}

fn metal_part(rng: &mut Pcg32) -> Material {
    Material {
        id: 0,
        name: format!("metal_{:04x}", rng.next_u32() & 0xffff),
        kind: MaterialKind::Metal,
        albedo: [0.85, 0.85, 0.88],
        roughness: rng.range(0.15, 0.5),
        ior: 1.0,
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    }
}

fn glass_part(rng: &mut Pcg32) -> Material {
    Material {
        id: 0,
        name: format!("glass_{:04x}", rng.next_u32() & 0xffff),
        kind: MaterialKind::Glass,
        albedo: [0.92, 0.95, 0.92],
        roughness: rng.range(0.05, 0.2),
        ior: rng.range(1.4, 1.6),
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    }
}

fn foliage(rng: &mut Pcg32) -> Material {
    let g = rng.range(0.3, 0.65);
    Material::diffuse(0, &format!("leaf_{:04x}", rng.next_u32() & 0xffff), [g * 0.35, g, g * 0.25])
        .with_noise(rng.range(8.0, 24.0), rng.range(0.1, 0.3))
}

fn bark(rng: &mut Pcg32) -> Material {
    let b = rng.range(0.18, 0.35);
    Material::diffuse(0, &format!("bark_{:04x}", rng.next_u32() & 0xffff), [b, b * 0.7, b * 0.45])
        .with_noise(rng.range(10.0, 30.0), rng.range(0.2, 0.4))
}

fn stone(rng: &mut Pcg32) -> Material {
    let g = rng.range(0.3, 0.65);
    Material::diffuse(0, &format!("stone_{:04x}", rng.next_u32() & 0xffff), [g, g, g * rng.range(0.85, 1.0)])
        .with_noise(rng.range(3.0, 10.0), rng.range(0.15, 0.4))
}

// --- furniture ---

fn four_legs(b: &mut Builder, rng: &mut Pcg32, w: f64, d: f64, h: f64, thickness: f64) {
    let mat = if rng.chance(0.4) { metal_part(rng) } else { wood(rng) };
    let mut legs = TriangleMesh::default();
    for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        let lx = sx * (w * 0.5 - thickness);
        let ly = sy * (d * 0.5 - thickness);
        legs.merge(&box_at(lx, ly, 0.0, thickness, thickness, h), 0);
    }
    b.part("legs", mat, legs);
}

fn chair(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("chair");
    let w = rng.range(0.38, 0.52);
    let d = rng.range(0.38, 0.5);
    let seat_h = rng.range(0.4, 0.5);
    let back_h = rng.range(0.35, 0.55);
    let leg_t = rng.range(0.025, 0.045);
    four_legs(&mut b, rng, w, d, seat_h, leg_t);
    b.part("seat", wood(rng), box_at(0.0, 0.0, seat_h, w, d, 0.04));
    let posts = {
        let mut m = TriangleMesh::default();
        for sx in [-1.0, 1.0] {
            m.merge(&box_at(sx * (w * 0.5 - 0.02), -d * 0.5 + 0.02, seat_h, 0.035, 0.035, back_h), 0);
        }
        m
    };
    b.part("back_posts", wood(rng), posts);
    let n_slats = rng.int_in(2, 4);
    let mut slats = TriangleMesh::default();
    for i in 0..n_slats {
        let z = seat_h + back_h * (0.35 + 0.6 * i as f64 / n_slats as f64);
        slats.merge(&box_at(0.0, -d * 0.5 + 0.02, z, w - 0.06, 0.02, back_h * 0.12), 0);
    }
    b.part("back_slats", wood(rng), slats);
    b.finish(false)
}

fn armchair(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("armchair");
    let w = rng.range(0.7, 0.95);
    let d = rng.range(0.7, 0.9);
    let base_h = rng.range(0.25, 0.35);
    let upholstery = fabric(rng);
    b.part("base", upholstery.clone(), box_at(0.0, 0.0, 0.0, w, d, base_h));
    b.part("cushion", fabric(rng), box_at(0.0, 0.03, base_h, w - 0.2, d - 0.15, 0.12));
    b.part("back", upholstery.clone(), box_at(0.0, -d * 0.5 + 0.08, base_h, w, 0.16, rng.range(0.35, 0.5)));
    let mut arms = TriangleMesh::default();
    for sx in [-1.0, 1.0] {
        arms.merge(&box_at(sx * (w * 0.5 - 0.06), 0.02, base_h, 0.12, d - 0.1, 0.2), 0);
    }
    b.part("arms", upholstery, arms);
    b.finish(false)
}

fn office_chair(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("office_chair");
    let seat_h = rng.range(0.42, 0.55);
    let mut spokes = TriangleMesh::default();
    let n = 5;
    for i in 0..n {
        let a = i as f64 / n as f64 * std::f64::consts::TAU;
        let spoke = box_at(0.14, 0.0, 0.01, 0.28, 0.04, 0.035);
        spokes.merge(&placed(spoke, a, vec3(0.0, 0.0, 0.0)), 0);
    }
    b.part("base_spokes", metal_part(rng), spokes);
    b.part("column", metal_part(rng), TriangleMesh::make_cylinder(0.03, seat_h, 10, 0));
    b.part("seat", fabric(rng), box_at(0.0, 0.0, seat_h, 0.46, 0.44, 0.07));
    b.part(
        "back",
        fabric(rng),
        box_at(0.0, -0.2, seat_h + 0.07, 0.44, 0.05, rng.range(0.4, 0.55)),
    );
    b.finish(false)
}

fn table(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("table");
    let w = rng.range(0.9, 1.8);
    let d = rng.range(0.6, 1.0);
    let h = rng.range(0.7, 0.78);
    let leg_t = rng.range(0.04, 0.07);
    four_legs(&mut b, rng, w, d, h, leg_t);
    b.part("top", wood(rng), box_at(0.0, 0.0, h, w, d, 0.04));
    b.finish(false)
}

fn coffee_table(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("coffee_table");
    let w = rng.range(0.6, 1.1);
    let d = rng.range(0.4, 0.6);
    let h = rng.range(0.3, 0.45);
    four_legs(&mut b, rng, w, d, h, 0.04);
    let top_mat = if rng.chance(0.3) { glass_part(rng) } else { wood(rng) };
    b.part("top", top_mat, box_at(0.0, 0.0, h, w, d, 0.03));
    b.finish(false)
}

fn shelf(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("shelf");
    let w = rng.range(0.6, 1.2);
    let d = rng.range(0.25, 0.4);
    let h = rng.range(0.9, 2.0);
    let frame_mat = wood(rng);
    let mut sides = TriangleMesh::default();
    for sx in [-1.0, 1.0] {
        sides.merge(&box_at(sx * (w * 0.5 - 0.01), 0.0, 0.0, 0.02, d, h), 0);
    }
    b.part("sides", frame_mat.clone(), sides);
    let n_boards = rng.int_in(3, 6);
    let mut boards = TriangleMesh::default();
    for i in 0..=n_boards {
        let z = h * i as f64 / n_boards as f64;
        boards.merge(&box_at(0.0, 0.0, (z - 0.02).max(0.0), w - 0.04, d, 0.02), 0);
    }
    b.part("boards", frame_mat, boards);
    if rng.chance(0.5) {
        b.part("back_panel", wood(rng), box_at(0.0, d * 0.5 - 0.005, 0.0, w, 0.01, h));
    }
    b.finish(false)
}

fn bookstack(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("bookstack");
    let n = rng.int_in(3, 8);
    let mut z = 0.0;
    for i in 0..n {
        let w = rng.range(0.14, 0.24);
        let d = rng.range(0.18, 0.3);
        let t = rng.range(0.02, 0.05);
        let yaw = rng.range(-0.3, 0.3);
        let book = placed(box_at(0.0, 0.0, 0.0, w, d, t), yaw, vec3(rng.range(-0.02, 0.02), rng.range(-0.02, 0.02), z));
        b.part(format!("book_{i}"), painted(rng), book);
        z += t;
    }
    b.finish(false)
}

fn lamp(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("lamp");
    let pole_h = rng.range(0.35, 0.55);
    b.part("base", metal_part(rng), TriangleMesh::make_cylinder(rng.range(0.07, 0.11), 0.02, 16, 0));
    b.part("pole", metal_part(rng), TriangleMesh::make_cylinder(0.012, pole_h, 8, 0));
    let r0 = rng.range(0.05, 0.08);
    let r1 = rng.range(0.11, 0.16);
    let shade = TriangleMesh::make_lathe(&[(r0, 0.0), (r1, -rng.range(0.12, 0.2))], 16, 0)
        .transformed(&RigidTransform::translate(vec3(0.0, 0.0, pole_h + 0.15)));
    b.part("shade", fabric(rng), shade);
    b.finish(false)
}

fn floor_lamp(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("floor_lamp");
    let pole_h = rng.range(1.2, 1.7);
    b.part("base", metal_part(rng), TriangleMesh::make_cylinder(rng.range(0.12, 0.18), 0.025, 16, 0));
    b.part("pole", metal_part(rng), TriangleMesh::make_cylinder(0.015, pole_h, 8, 0));
    let shade = TriangleMesh::make_lathe(&[(0.09, 0.0), (0.17, -0.25)], 16, 0)
        .transformed(&RigidTransform::translate(vec3(0.0, 0.0, pole_h + 0.2)));
    b.part("shade", fabric(rng), shade);
    b.finish(false)
}

fn monitor(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("monitor");
    let w = rng.range(0.5, 0.7);
    let h = w * rng.range(0.55, 0.62);
    b.part("base", plastic(rng), box_at(0.0, 0.0, 0.0, 0.22, 0.16, 0.02));
    b.part("stand", plastic(rng), box_at(0.0, 0.02, 0.02, 0.05, 0.03, 0.12));
    b.part("panel", plastic(rng), box_at(0.0, 0.0, 0.14, w, 0.03, h));
    let screen = Material {
        id: 0,
        name: format!("screen_{:04x}", rng.next_u32() & 0xffff),
        kind: MaterialKind::Metal,
        albedo: [0.12, 0.12, 0.14],
        roughness: 0.08,
        ior: 1.0,
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    };
    b.part("screen", screen, box_at(0.0, -0.017, 0.16, w - 0.04, 0.005, h - 0.05));
    b.finish(false)
}

fn tv(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("tv");
    let w = rng.range(0.9, 1.5);
    let h = w * 0.56;
    b.part("panel", plastic(rng), box_at(0.0, 0.0, 0.0, w, 0.04, h));
    let screen = Material {
        id: 0,
        name: format!("screen_{:04x}", rng.next_u32() & 0xffff),
        kind: MaterialKind::Metal,
        albedo: [0.1, 0.1, 0.12],
        roughness: 0.06,
        ior: 1.0,
        emission: [0.0; 3],
        noise_scale: 0.0,
        noise_amount: 0.0,
    };
    b.part("screen", screen, box_at(0.0, -0.022, 0.04, w - 0.06, 0.005, h - 0.08));
    b.finish(false)
}

fn pot(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("pot");
    let r = rng.range(0.08, 0.16);
    let h = rng.range(0.1, 0.2);
    let profile = [(r * 0.7, 0.0), (r, h * 0.4), (r * 0.95, h)];
    b.part("body", ceramic(rng), TriangleMesh::make_lathe(&profile, 20, 0));
    b.part("rim", ceramic(rng), TriangleMesh::make_lathe(&[(r * 0.95, h), (r * 1.05, h + 0.015)], 20, 0));
    b.finish(false)
}

fn vase(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("vase");
    let h = rng.range(0.2, 0.45);
    let mut profile = vec![(rng.range(0.04, 0.08), 0.0)];
    let n = rng.int_in(3, 5);
    for i in 1..=n {
        profile.push((rng.range(0.03, 0.13), h * i as f64 / n as f64));
    }
    let mat = if rng.chance(0.4) { glass_part(rng) } else { ceramic(rng) };
    b.part("body", mat, TriangleMesh::make_lathe(&profile, 20, 0));
    b.part("foot", ceramic(rng), TriangleMesh::make_cylinder(rng.range(0.045, 0.075), 0.012, 16, 0));
    b.finish(false)
}

fn bottle(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("bottle");
    let r = rng.range(0.03, 0.05);
    let body_h = rng.range(0.16, 0.26);
    let profile = [
        (r, 0.0),
        (r, body_h),
        (r * 0.45, body_h + 0.05),
        (r * 0.4, body_h + 0.1),
    ];
    b.part("body", glass_part(rng), TriangleMesh::make_lathe(&profile, 16, 0));
    b.part("cap", plastic(rng), {
        TriangleMesh::make_cylinder(r * 0.45, 0.02, 12, 0)
            .transformed(&RigidTransform::translate(vec3(0.0, 0.0, body_h + 0.1)))
    });
    b.finish(false)
}

fn cup(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("cup");
    let r = rng.range(0.035, 0.05);
    let h = rng.range(0.08, 0.12);
    b.part("body", ceramic(rng), TriangleMesh::make_lathe(&[(r * 0.85, 0.0), (r, h)], 16, 0));
    b.part("bottom", ceramic(rng), TriangleMesh::make_cylinder(r * 0.85, 0.008, 16, 0));
    b.part("handle", ceramic(rng), box_at(r + 0.012, 0.0, h * 0.3, 0.024, 0.012, h * 0.45));
    b.finish(false)
}

fn bowl(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("bowl");
    let r = rng.range(0.08, 0.15);
    let h = rng.range(0.05, 0.09);
    let profile = [(r * 0.4, 0.0), (r * 0.85, h * 0.5), (r, h)];
    b.part("body", ceramic(rng), TriangleMesh::make_lathe(&profile, 20, 0));
    b.part("foot", ceramic(rng), TriangleMesh::make_cylinder(r * 0.4, 0.01, 16, 0));
    b.finish(false)
}

fn cabinet(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("cabinet");
    let w = rng.range(0.7, 1.3);
    let d = rng.range(0.35, 0.5);
    let h = rng.range(0.7, 1.6);
    let body = wood(rng);
    b.part("body", body.clone(), box_at(0.0, 0.0, 0.0, w, d, h));
    let mut doors = TriangleMesh::default();
    for sx in [-1.0, 1.0] {
        doors.merge(&box_at(sx * w * 0.25, -d * 0.5 - 0.008, 0.02, w * 0.46, 0.016, h - 0.04), 0);
    }
    b.part("doors", wood(rng), doors);
    let mut handles = TriangleMesh::default();
    for sx in [-1.0, 1.0] {
        handles.merge(&box_at(sx * 0.05, -d * 0.5 - 0.03, h * 0.5, 0.015, 0.03, 0.1), 0);
    }
    b.part("handles", metal_part(rng), handles);
    b.finish(false)
}

fn sofa(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("sofa");
    let w = rng.range(1.5, 2.2);
    let d = rng.range(0.8, 0.95);
    let base_h = 0.3;
    let upholstery = fabric(rng);
    b.part("base", upholstery.clone(), box_at(0.0, 0.0, 0.0, w, d, base_h));
    let n_cushions = rng.int_in(2, 3);
    let mut cushions = TriangleMesh::default();
    let cw = (w - 0.3) / n_cushions as f64;
    for i in 0..n_cushions {
        let cx = -w * 0.5 + 0.15 + cw * (i as f64 + 0.5);
        cushions.merge(&box_at(cx, 0.04, base_h, cw - 0.03, d - 0.25, 0.13), 0);
    }
    b.part("cushions", fabric(rng), cushions);
    b.part("back", upholstery.clone(), box_at(0.0, -d * 0.5 + 0.1, base_h, w, 0.2, rng.range(0.35, 0.5)));
    let mut arms = TriangleMesh::default();
    for sx in [-1.0, 1.0] {
        arms.merge(&box_at(sx * (w * 0.5 - 0.08), 0.0, base_h, 0.16, d, 0.25), 0);
    }
    b.part("arms", upholstery, arms);
    b.finish(false)
}

fn bed(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("bed");
    let w = rng.range(1.0, 1.8);
    let d = rng.range(1.9, 2.1);
    b.part("frame", wood(rng), box_at(0.0, 0.0, 0.0, w, d, 0.25));
    b.part("mattress", fabric(rng), box_at(0.0, 0.0, 0.25, w - 0.06, d - 0.06, 0.22));
    b.part("headboard", wood(rng), box_at(0.0, -d * 0.5 + 0.03, 0.0, w, 0.06, rng.range(0.8, 1.1)));
    b.part("pillow", fabric(rng), box_at(0.0, -d * 0.5 + 0.35, 0.47, w * 0.7, 0.4, 0.12));
    b.finish(false)
}

fn staircase(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("staircase");
    let n = rng.int_in(5, 9);
    let step_w = rng.range(0.8, 1.2);
    let rise = rng.range(0.16, 0.2);
    let run = rng.range(0.24, 0.3);
    let mat = wood(rng);
    let mut steps = TriangleMesh::default();
    for i in 0..n {
        steps.merge(
            &box_at(0.0, i as f64 * run, 0.0, step_w, run, rise * (i + 1) as f64),
            0,
        );
    }
    b.part("steps", mat, steps);
    let mut rail = TriangleMesh::default();
    for i in [0u32, n - 1] {
        rail.merge(
            &box_at(step_w * 0.5 + 0.02, i as f64 * run, rise * (i + 1) as f64, 0.04, 0.04, 0.85),
            0,
        );
    }
    b.part("rail_posts", wood(rng), rail);
    b.finish(false)
}

fn plant(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("plant");
    let pot_r = rng.range(0.08, 0.14);
    let pot_h = rng.range(0.1, 0.16);
    b.part("pot", ceramic(rng), TriangleMesh::make_lathe(&[(pot_r * 0.75, 0.0), (pot_r, pot_h)], 16, 0));
    let n_stems = rng.int_in(4, 7);
    for i in 0..n_stems {
        let yaw = rng.range(0.0, std::f64::consts::TAU);
        let tilt = rng.range(0.1, 0.5);
        let len = rng.range(0.2, 0.45);
        let stem = tilted(TriangleMesh::make_cylinder(0.006, len, 6, 0), yaw, tilt, vec3(0.0, 0.0, pot_h * 0.9));
        b.part(format!("stem_{i}"), foliage(rng), stem);
        let tip = Mat3::rot_z(yaw)
            .matmul(&Mat3::rot_x(tilt))
            .apply(vec3(0.0, 0.0, len))
            + vec3(0.0, 0.0, pot_h * 0.9);
        let leaf = tilted(
            TriangleMesh::make_card(rng.range(0.06, 0.12), rng.range(0.08, 0.16), 0),
            rng.range(0.0, std::f64::consts::TAU),
            rng.range(-0.9, 0.9),
            tip,
        );
        b.part(format!("leaf_{i}"), foliage(rng), leaf);
    }
    b.finish(false)
}

fn wall_art(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("wall_art");
    let w = rng.range(0.4, 1.0);
    let h = rng.range(0.3, 0.8);
    b.part("canvas", painted(rng), box_at(0.0, 0.0, 0.0, w, 0.02, h));
    let mut frame = TriangleMesh::default();
    for (cx, cz, fw, fh) in [
        (0.0, h, w + 0.06, 0.04),
        (0.0, 0.0, w + 0.06, 0.04),
        (w * 0.5 + 0.01, h * 0.5, 0.04, h),
        (-w * 0.5 - 0.01, h * 0.5, 0.04, h),
    ] {
        frame.merge(&box_at(cx, -0.005, cz - fh * 0.5, fw, 0.03, fh), 0);
    }
    b.part("frame", wood(rng), frame);
    b.finish(false)
}

fn basket(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("basket");
    let r = rng.range(0.12, 0.2);
    let h = rng.range(0.15, 0.3);
    b.part("body", wood(rng), TriangleMesh::make_lathe(&[(r * 0.8, 0.0), (r, h)], 14, 0));
    b.part("bottom", wood(rng), TriangleMesh::make_cylinder(r * 0.8, 0.01, 14, 0));
    b.part("rim", wood(rng), TriangleMesh::make_lathe(&[(r, h), (r * 1.06, h + 0.02)], 14, 0));
    b.finish(false)
}

// --- nature assets ---

fn bush(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("bush");
    let size = rng.range(0.6, 1.1);
    b.part("trunk", bark(rng), TriangleMesh::make_cylinder(0.035 * size, 0.22 * size, 8, 0));
    let n_branches = rng.int_in(5, 8);
    let mut tips = Vec::new();
    for i in 0..n_branches {
        let yaw = i as f64 / n_branches as f64 * std::f64::consts::TAU + rng.range(-0.3, 0.3);
        let tilt = rng.range(0.4, 1.1);
        let len = size * rng.range(0.25, 0.45);
        let base = vec3(0.0, 0.0, 0.2 * size);
        let branch = tilted(TriangleMesh::make_cylinder(0.012 * size, len, 6, 0), yaw, tilt, base);
        b.part(format!("branch_{i}"), bark(rng), branch);
        tips.push(Mat3::rot_z(yaw).matmul(&Mat3::rot_x(tilt)).apply(vec3(0.0, 0.0, len)) + base);
    }
    let leaf_mat = foliage(rng);
    let mut leaf_index = 0;
    for tip in tips {
        let per_branch = rng.int_in(3, 5);
        for _ in 0..per_branch {
            let offset = vec3(rng.range(-0.12, 0.12), rng.range(-0.12, 0.12), rng.range(-0.05, 0.15)) * size;
            let card = tilted(
                TriangleMesh::make_card(size * rng.range(0.1, 0.2), size * rng.range(0.12, 0.22), 0),
                rng.range(0.0, std::f64::consts::TAU),
                rng.range(-1.2, 1.2),
                tip + offset,
            );
            b.part(format!("leaf_{leaf_index}"), leaf_mat.clone(), card);
            leaf_index += 1;
        }
    }
    b.finish(true)
}

fn noisy_sphere(rng: &mut Pcg32, radius: f64, subdiv: u32, bumps: usize, amount: f64) -> TriangleMesh {
    let mut mesh = TriangleMesh::make_icosphere(radius, subdiv, 0);
    let waves: Vec<(Vec3, f64, f64)> = (0..bumps)
        .map(|_| {
            let k = vec3(rng.normal(), rng.normal(), rng.normal()).normalized() * rng.range(1.5, 4.0) / radius;
            (k, rng.range(0.0, std::f64::consts::TAU), rng.range(0.3, 1.0))
        })
        .collect();
    for p in &mut mesh.positions {
        let mut d = 0.0;
        for (k, phase, a) in &waves {
            d += a * (k.dot(*p) + phase).sin();
        }
        let scale = 1.0 + amount * d / bumps as f64;
        *p = *p * scale.max(0.3);
    }
    mesh
}

fn rock(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("rock");
    let r = rng.range(0.15, 0.5);
    let mesh = noisy_sphere(rng, r, 2, 5, 0.8)
        .transformed(&RigidTransform::translate(vec3(0.0, 0.0, r * 0.8)));
    b.part("body", stone(rng), mesh);
    b.finish(false)
}

fn tree(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("tree");
    let trunk_h = rng.range(1.8, 3.5);
    let trunk_r = trunk_h * rng.range(0.03, 0.05);
    b.part("trunk", bark(rng), TriangleMesh::make_cylinder(trunk_r, trunk_h, 10, 0));
    let n_branches = rng.int_in(3, 5);
    for i in 0..n_branches {
        let yaw = rng.range(0.0, std::f64::consts::TAU);
        let tilt = rng.range(0.5, 1.2);
        let len = trunk_h * rng.range(0.2, 0.35);
        let base = vec3(0.0, 0.0, trunk_h * rng.range(0.55, 0.9));
        let branch = tilted(TriangleMesh::make_cylinder(trunk_r * 0.4, len, 8, 0), yaw, tilt, base);
        b.part(format!("branch_{i}"), bark(rng), branch);
    }
    let canopy_mat = foliage(rng);
    let n_blobs = rng.int_in(2, 4);
    for i in 0..n_blobs {
        let r = trunk_h * rng.range(0.22, 0.38);
        let center = vec3(
            rng.range(-0.3, 0.3) * trunk_h * 0.3,
            rng.range(-0.3, 0.3) * trunk_h * 0.3,
            trunk_h + r * rng.range(-0.2, 0.4),
        );
        let blob = noisy_sphere(rng, r, 1, 4, 0.5).transformed(&RigidTransform::translate(center));
        b.part(format!("canopy_{i}"), canopy_mat.clone(), blob);
    }
    b.finish(false)
}

// --- thin-structure generators, excluded by default ---

fn cactus(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("cactus");
    let h = rng.range(0.4, 0.9);
    let r = h * 0.12;
    let body_mat = foliage(rng);
    b.part("body", body_mat.clone(), TriangleMesh::make_lathe(&[(r * 0.8, 0.0), (r, h * 0.6), (r * 0.5, h)], 12, 0));
    let n_arms = rng.int_in(1, 3);
    for i in 0..n_arms {
        let yaw = rng.range(0.0, std::f64::consts::TAU);
        let arm = tilted(
            TriangleMesh::make_cylinder(r * 0.5, h * 0.35, 8, 0),
            yaw,
            rng.range(0.9, 1.4),
            vec3(0.0, 0.0, h * rng.range(0.4, 0.7)),
        );
        b.part(format!("arm_{i}"), body_mat.clone(), arm);
    }
    let needle_mat = Material::diffuse(0, "needles", [0.85, 0.83, 0.6]);
    let n_needles = rng.int_in(30, 60);
    let mut needles = TriangleMesh::default();
    for _ in 0..n_needles {
        let a = rng.range(0.0, std::f64::consts::TAU);
        let z = rng.range(0.05, h * 0.95);
        let at = vec3(r * 0.95 * a.cos(), r * 0.95 * a.sin(), z);
        needles.merge(
            &tilted(TriangleMesh::make_card(0.002, 0.04, 0), a, rng.range(0.8, 1.6), at),
            0,
        );
    }
    b.part("needles", needle_mat, needles);
    b.finish(true)
}

fn urchin(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("urchin");
    let r = rng.range(0.08, 0.16);
    b.part("body", stone(rng), TriangleMesh::make_icosphere(r, 1, 0).transformed(&RigidTransform::translate(vec3(0.0, 0.0, r))));
    let spike_mat = Material::diffuse(0, "spines", [0.25, 0.2, 0.3]);
    let n = rng.int_in(60, 120);
    let mut spikes = TriangleMesh::default();
    for _ in 0..n {
        let dir = vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
        let len = r * rng.range(1.0, 2.2);
        let tip = dir * (r + len) + vec3(0.0, 0.0, r);
        let base = dir * (r * 0.95) + vec3(0.0, 0.0, r);
        let side = dir.any_orthonormal() * 0.0015;
        spikes.merge(
            &TriangleMesh::new(
                vec![base - side, base + side, tip, base - side, tip, base + side].to_vec(),
                vec![[0, 1, 2], [3, 4, 5]],
                vec![0, 0],
            ),
            0,
        );
    }
    b.part("spines", spike_mat, spikes);
    b.finish(true)
}

fn rack(rng: &mut Pcg32) -> GeneratedObject {
    let mut b = Builder::new("rack");
    let w = rng.range(0.6, 1.0);
    let h = rng.range(1.2, 1.8);
    let d = rng.range(0.3, 0.45);
    let bar = 0.015;
    let mat = metal_part(rng);
    let mut posts = TriangleMesh::default();
    for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        posts.merge(&box_at(sx * w * 0.5, sy * d * 0.5, 0.0, bar, bar, h), 0);
    }
    b.part("posts", mat.clone(), posts);
    let n_bars = rng.int_in(8, 14);
    let mut bars = TriangleMesh::default();
    for i in 0..n_bars {
        let z = h * (i as f64 + 0.5) / n_bars as f64;
        bars.merge(&box_at(0.0, -d * 0.5, z, w, bar, bar), 0);
        bars.merge(&box_at(0.0, d * 0.5, z, w, bar, bar), 0);
    }
    b.part("bars", mat, bars);
    b.finish(true)
}

/// Every generator, including the thin-structure set.
pub const ALL: &[GeneratorInfo] = &[
    GeneratorInfo { name: "chair", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: chair },
    GeneratorInfo { name: "armchair", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: armchair },
    GeneratorInfo { name: "office_chair", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: office_chair },
    GeneratorInfo { name: "table", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: table },
    GeneratorInfo { name: "coffee_table", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: coffee_table },
    GeneratorInfo { name: "shelf", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: shelf },
    GeneratorInfo { name: "bookstack", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: bookstack },
    GeneratorInfo { name: "lamp", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: lamp },
    GeneratorInfo { name: "floor_lamp", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: floor_lamp },
    GeneratorInfo { name: "monitor", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: monitor },
    GeneratorInfo { name: "tv", thin_structure: false, background: true, slot: PlacementSlot::Wall, build: tv },
    GeneratorInfo { name: "pot", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: pot },
    GeneratorInfo { name: "vase", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: vase },
    GeneratorInfo { name: "bottle", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: bottle },
    GeneratorInfo { name: "cup", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: cup },
    GeneratorInfo { name: "bowl", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: bowl },
    GeneratorInfo { name: "cabinet", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: cabinet },
    GeneratorInfo { name: "sofa", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: sofa },
    GeneratorInfo { name: "bed", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: bed },
    GeneratorInfo { name: "staircase", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: staircase },
    GeneratorInfo { name: "plant", thin_structure: false, background: true, slot: PlacementSlot::Floor, build: plant },
    GeneratorInfo { name: "wall_art", thin_structure: false, background: true, slot: PlacementSlot::Wall, build: wall_art },
    GeneratorInfo { name: "basket", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: basket },
    GeneratorInfo { name: "bush", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: bush },
    GeneratorInfo { name: "rock", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: rock },
    GeneratorInfo { name: "tree", thin_structure: false, background: false, slot: PlacementSlot::Floor, build: tree },
    GeneratorInfo { name: "cactus", thin_structure: true, background: false, slot: PlacementSlot::Floor, build: cactus },
    GeneratorInfo { name: "urchin", thin_structure: true, background: false, slot: PlacementSlot::Floor, build: urchin },
    GeneratorInfo { name: "rack", thin_structure: true, background: true, slot: PlacementSlot::Floor, build: rack },
];
