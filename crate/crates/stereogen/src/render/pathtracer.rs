//! Unbiased path integrator: cosine-sampled Lambertian diffuse, GGX
//! microfacet metal, rough dielectric glass, next-event estimation for point
//! and area lights. The uniform environment is integrated through BSDF rays
//! only, and area-light emission is added on a hit only when the previous
//! vertex did not run NEE, so each light path is counted exactly once.

use crate::geom::{vec3, Ray, Vec3, RAY_EPSILON};
use crate::rng::Pcg32;
use crate::scene::MaterialKind;

use super::{FrozenLight, FrozenScene, RenderMaterial};

const INV_PI: f64 = std::f64::consts::FRAC_1_PI;

/// Orthonormal basis around a unit normal.
struct Frame {
    t: Vec3,
    b: Vec3,
    n: Vec3,
}

impl Frame {
    fn new(n: Vec3) -> Frame {
        let t = n.any_orthonormal();
        let b = n.cross(t);
        Frame { t, b, n }
    }

    #[inline]
    fn to_world(&self, v: Vec3) -> Vec3 {
        self.t * v.x + self.b * v.y + self.n * v.z
    }

    #[inline]
    fn to_local(&self, v: Vec3) -> Vec3 {
        vec3(v.dot(self.t), v.dot(self.b), v.dot(self.n))
    }
}

fn cosine_sample_hemisphere(rng: &mut Pcg32) -> Vec3 {
    let u1 = rng.f64();
    let u2 = rng.f64();
    let r = u1.sqrt();
    let phi = std::f64::consts::TAU * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    vec3(r * phi.cos(), r * phi.sin(), z)
}

/// Sample a GGX half-vector in the local frame (z up).
fn sample_ggx_half(roughness: f64, rng: &mut Pcg32) -> Vec3 {
    let a2 = (roughness * roughness).max(1e-8);
    let u1 = rng.f64();
    let u2 = rng.f64();
    let cos2 = ((1.0 - u1) / (1.0 + (a2 - 1.0) * u1)).clamp(0.0, 1.0);
    let cos_t = cos2.sqrt();
    let sin_t = (1.0 - cos2).max(0.0).sqrt();
    let phi = std::f64::consts::TAU * u2;
    vec3(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
}

#[inline]
fn ggx_d(roughness: f64, cos_h: f64) -> f64 {
    if cos_h <= 0.0 {
        return 0.0;
    }
    let a2 = (roughness * roughness).max(1e-8);
    let d = cos_h * cos_h * (a2 - 1.0) + 1.0;
    a2 / (std::f64::consts::PI * d * d)
}

#[inline]
fn smith_g1(roughness: f64, cos_v: f64) -> f64 {
    let a2 = (roughness * roughness).max(1e-8);
    let c = cos_v.abs().max(1e-6);
    2.0 * c / (c + (a2 + (1.0 - a2) * c * c).sqrt())
}

#[inline]
fn schlick(f0: f64, cos_t: f64) -> f64 {
    f0 + (1.0 - f0) * (1.0 - cos_t).clamp(0.0, 1.0).powi(5)
}

/// Fresnel reflectance for a dielectric; `eta` is n_incident / n_transmitted.
fn fresnel_dielectric(cos_i: f64, eta: f64) -> f64 {
    let cos_i = cos_i.clamp(0.0, 1.0);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
    if sin2_t >= 1.0 {
        return 1.0; // total internal reflection
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = (eta * cos_i - cos_t) / (eta * cos_i + cos_t);
    let rp = (cos_i - eta * cos_t) / (cos_i + eta * cos_t);
    0.5 * (rs * rs + rp * rp)
}

/// BSDF value times cosine for NEE, in world space. Glass is skipped for
/// NEE (transmission paths carry it).
fn eval_bsdf_cos(mat: &RenderMaterial, albedo: [f64; 3], normal: Vec3, wo: Vec3, wi: Vec3) -> [f64; 3] {
    let cos_i = normal.dot(wi);
    let cos_o = normal.dot(wo);
    if cos_i <= 0.0 || cos_o <= 0.0 {
        return [0.0; 3];
    }
    match mat.kind {
        MaterialKind::Diffuse => {
            let f = INV_PI * cos_i;
            [albedo[0] * f, albedo[1] * f, albedo[2] * f]
        }
        MaterialKind::Metal => {
            let h = (wo + wi).normalized();
            let cos_h = normal.dot(h).max(0.0);
            let d = ggx_d(mat.roughness, cos_h);
            let g = smith_g1(mat.roughness, cos_o) * smith_g1(mat.roughness, cos_i);
            let spec = d * g / (4.0 * cos_o.max(1e-6));
            [
                schlick(albedo[0], wo.dot(h).max(0.0)) * spec,
                schlick(albedo[1], wo.dot(h).max(0.0)) * spec,
                schlick(albedo[2], wo.dot(h).max(0.0)) * spec,
            ]
        }
        _ => [0.0; 3],
    }
}

struct BsdfSample {
    wi: Vec3,
    /// f * cos / pdf per channel.
    weight: [f64; 3],
    /// Delta-ish transmission/reflection that must keep direct-light hits.
    specular: bool,
}

fn sample_bsdf(
    mat: &RenderMaterial,
    albedo: [f64; 3],
    normal: Vec3,
    wo: Vec3,
    back_face: bool,
    rng: &mut Pcg32,
) -> Option<BsdfSample> {
    let frame = Frame::new(normal);
    let wo_l = frame.to_local(wo);
    if wo_l.z <= 0.0 {
        return None;
    }
    match mat.kind {
        MaterialKind::Diffuse => {
            let wi_l = cosine_sample_hemisphere(rng);
            Some(BsdfSample {
                wi: frame.to_world(wi_l),
                weight: albedo,
                specular: false,
            })
        }
        MaterialKind::Metal => {
            let h = sample_ggx_half(mat.roughness, rng);
            let wi_l = h * (2.0 * wo_l.dot(h)) - wo_l;
            if wi_l.z <= 0.0 {
                return None;
            }
            // pdf_h = D cos_h, pdf_wi = pdf_h / (4 (wo.h));
            // weight = F * G * (wo.h) / (cos_o * cos_h).
            let woh = wo_l.dot(h).max(1e-6);
            let g = smith_g1(mat.roughness, wo_l.z) * smith_g1(mat.roughness, wi_l.z);
            let base = (g * woh / (wo_l.z * h.z.max(1e-6))).min(4.0);
            let weight = [
                schlick(albedo[0], woh) * base,
                schlick(albedo[1], woh) * base,
                schlick(albedo[2], woh) * base,
            ];
            Some(BsdfSample { wi: frame.to_world(wi_l), weight, specular: false })
        }
        MaterialKind::Glass => {
            // eta = n_i / n_t along the incident side.
            let eta = if back_face { mat.ior } else { 1.0 / mat.ior };
            let h = sample_ggx_half(mat.roughness, rng);
            let woh = wo_l.dot(h);
            if woh <= 0.0 {
                return None;
            }
            let fresnel = fresnel_dielectric(woh, eta);
            let g = smith_g1(mat.roughness, wo_l.z);
            let base = (g * woh / (wo_l.z * h.z.max(1e-6))).min(4.0);
            if rng.f64() < fresnel {
                let wi_l = h * (2.0 * woh) - wo_l;
                if wi_l.z <= 0.0 {
                    return None;
                }
                let w = (base * smith_g1(mat.roughness, wi_l.z)).min(1.5);
                Some(BsdfSample {
                    wi: frame.to_world(wi_l),
                    weight: [w, w, w],
                    specular: true,
                })
            } else {
                // Refract -wo about h.
                let cos_i = woh;
                let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
                if sin2_t >= 1.0 {
                    return None;
                }
                let cos_t = (1.0 - sin2_t).sqrt();
                let wi_l = (-wo_l) * eta + h * (eta * cos_i - cos_t);
                if wi_l.z >= 0.0 {
                    return None;
                }
                let w = (base * smith_g1(mat.roughness, wi_l.z)).min(1.5);
                Some(BsdfSample {
                    wi: frame.to_world(wi_l.normalized()),
                    weight: [albedo[0] * w, albedo[1] * w, albedo[2] * w],
                    specular: true,
                })
            }
        }
        MaterialKind::Emissive => None,
    }
}

/// Direct lighting via one uniformly chosen light.
fn sample_one_light(
    scene: &FrozenScene,
    p: Vec3,
    normal: Vec3,
    wo: Vec3,
    mat: &RenderMaterial,
    albedo: [f64; 3],
    rng: &mut Pcg32,
) -> [f64; 3] {
    let n_lights = scene.lights.len();
    if n_lights == 0 {
        return [0.0; 3];
    }
    let light = &scene.lights[rng.below(n_lights as u32) as usize];
    let scale = n_lights as f64;
    match light {
        FrozenLight::Point { position, intensity } => {
            let delta = *position - p;
            let dist2 = delta.length_sq();
            if dist2 <= 1e-12 {
                return [0.0; 3];
            }
            let dist = dist2.sqrt();
            let wi = delta / dist;
            let f = eval_bsdf_cos(mat, albedo, normal, wo, wi);
            if f == [0.0; 3] {
                return [0.0; 3];
            }
            let shadow = Ray::new(p + normal * RAY_EPSILON, wi);
            if scene.occluded(&shadow, dist - RAY_EPSILON) {
                return [0.0; 3];
            }
            let g = scale / dist2;
            [f[0] * intensity[0] * g, f[1] * intensity[1] * g, f[2] * intensity[2] * g]
        }
        FrozenLight::Area { origin, edge_u, edge_v, normal: ln, area, radiance } => {
            let q = *origin + *edge_u * rng.f64() + *edge_v * rng.f64();
            let delta = q - p;
            let dist2 = delta.length_sq();
            if dist2 <= 1e-9 {
                return [0.0; 3];
            }
            let dist = dist2.sqrt();
            let wi = delta / dist;
            let cos_light = -wi.dot(*ln);
            if cos_light <= 0.0 {
                return [0.0; 3];
            }
            let f = eval_bsdf_cos(mat, albedo, normal, wo, wi);
            if f == [0.0; 3] {
                return [0.0; 3];
            }
            let shadow = Ray::new(p + normal * RAY_EPSILON, wi);
            // Back off the target so the emitter's own face does not shadow.
            let t_max = dist - (1e-3 + dist * 1e-4);
            if t_max > RAY_EPSILON && scene.occluded(&shadow, t_max) {
                return [0.0; 3];
            }
            let g = cos_light / dist2 * area * scale;
            [f[0] * radiance[0] * g, f[1] * radiance[1] * g, f[2] * radiance[2] * g]
        }
    }
}

/// Trace one camera sample path and return its radiance estimate.
pub(crate) fn trace(scene: &FrozenScene, mut ray: Ray, rng: &mut Pcg32, max_bounces: u32) -> [f64; 3] {
    let mut radiance = [0.0f64; 3];
    let mut throughput = [1.0f64; 3];
    // Emission is credited on hit only while NEE has not covered it.
    let mut count_emission = true;
    for bounce in 0..=max_bounces {
        let hit = match scene.intersect(&ray) {
            Some(h) => h,
            None => {
                let env = scene.env_radiance();
                for c in 0..3 {
                    radiance[c] += throughput[c] * env[c];
                }
                break;
            }
        };
        let mat = match scene.material(hit.data.material_id) {
            Some(m) => m,
            None => break,
        };
        let p = ray.at(hit.t);
        if mat.kind == MaterialKind::Emissive {
            if count_emission {
                for c in 0..3 {
                    radiance[c] += throughput[c] * mat.emission[c];
                }
            }
            break;
        }
        let albedo = mat.albedo_at(p);
        let wo = -ray.dir;
        if matches!(mat.kind, MaterialKind::Diffuse | MaterialKind::Metal) {
            let direct = sample_one_light(scene, p, hit.normal, wo, mat, albedo, rng);
            for c in 0..3 {
                radiance[c] += throughput[c] * direct[c];
            }
            count_emission = false;
        } else {
            count_emission = true;
        }
        if bounce == max_bounces {
            break;
        }
        let sample = match sample_bsdf(mat, albedo, hit.normal, wo, hit.back_face, rng) {
            Some(s) => s,
            None => break,
        };
        for c in 0..3 {
            throughput[c] *= sample.weight[c];
        }
        if sample.specular {
            count_emission = true;
        }
        // Russian roulette once the path has a couple of bounces.
        if bounce >= 2 {
            let q = (0.9 * throughput[0].max(throughput[1]).max(throughput[2])).clamp(0.05, 0.85);
            if rng.f64() >= q {
                break;
            }
            for c in throughput.iter_mut() {
                *c /= q;
            }
        }
        let offset = if sample.wi.dot(hit.normal) >= 0.0 { hit.normal } else { -hit.normal };
        ray = Ray::new(p + offset * RAY_EPSILON, sample.wi);
    }
    radiance
}
