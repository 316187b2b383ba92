//! Seeded value noise on integer lattices. Used for terrain height, the
//! procedural albedo modulation of materials, and low-frequency mesh warps.

use crate::geom::{vec3, Vec3};
use crate::rng::mix64;

#[inline]
fn lattice2(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = mix64(seed ^ (ix as u64).wrapping_mul(0x9e3779b97f4a7c15) ^ (iy as u64).wrapping_mul(0xc2b2ae3d27d4eb4f));
    (h >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

#[inline]
fn lattice3(seed: u64, ix: i64, iy: i64, iz: i64) -> f64 {
    let h = mix64(
        seed ^ (ix as u64).wrapping_mul(0x9e3779b97f4a7c15)
            ^ (iy as u64).wrapping_mul(0xc2b2ae3d27d4eb4f)
            ^ (iz as u64).wrapping_mul(0x165667b19e3779f9),
    );
    (h >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

#[inline]
fn smooth(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// 2D value noise in [-1, 1].
pub fn value_noise2(seed: u64, x: f64, y: f64) -> f64 {
    let ix = x.floor() as i64;
    let iy = y.floor() as i64;
    let fx = smooth(x - ix as f64);
    let fy = smooth(y - iy as f64);
    let v00 = lattice2(seed, ix, iy);
    let v10 = lattice2(seed, ix + 1, iy);
    let v01 = lattice2(seed, ix, iy + 1);
    let v11 = lattice2(seed, ix + 1, iy + 1);
    let a = v00 + (v10 - v00) * fx;
    let b = v01 + (v11 - v01) * fx;
    a + (b - a) * fy
}

/// 3D value noise in [-1, 1].
pub fn value_noise3(seed: u64, p: Vec3) -> f64 {
    let ix = p.x.floor() as i64;
    let iy = p.y.floor() as i64;
    let iz = p.z.floor() as i64;
    let fx = smooth(p.x - ix as f64);
    let fy = smooth(p.y - iy as f64);
    let fz = smooth(p.z - iz as f64);
    let mut acc = 0.0;
    for (dz, wz) in [(0, 1.0 - fz), (1, fz)] {
        let v00 = lattice3(seed, ix, iy, iz + dz);
        let v10 = lattice3(seed, ix + 1, iy, iz + dz);
        let v01 = lattice3(seed, ix, iy + 1, iz + dz);
        let v11 = lattice3(seed, ix + 1, iy + 1, iz + dz);
        let a = v00 + (v10 - v00) * fx;
        let b = v01 + (v11 - v01) * fx;
        acc += (a + (b - a) * fy) * wz;
    }
    acc
}

/// Multi-octave 2D noise, still roughly in [-1, 1].
pub fn fbm2(seed: u64, x: f64, y: f64, octaves: u32) -> f64 {
    let mut sum = 0.0;
    let mut amp = 0.5;
    let mut freq = 1.0;
    let mut norm = 0.0;
    for octave in 0..octaves {
        sum += amp * value_noise2(mix64(seed ^ octave as u64), x * freq, y * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

/// Smooth low-frequency displacement field for mesh warps.
pub fn warp_field(seed: u64, p: Vec3, frequency: f64) -> Vec3 {
    let q = p * frequency;
    vec3(
        value_noise3(mix64(seed ^ 0xa1), q),
        value_noise3(mix64(seed ^ 0xa2), q),
        value_noise3(mix64(seed ^ 0xa3), q),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_deterministic_and_bounded() {
        for i in 0..200 {
            let x = i as f64 * 0.371;
            let y = i as f64 * -0.713;
            let a = value_noise2(42, x, y);
            let b = value_noise2(42, x, y);
            assert_eq!(a, b);
            assert!((-1.0..=1.0).contains(&a));
            let c = value_noise3(42, vec3(x, y, 0.2 * i as f64));
            assert!((-1.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn noise_is_continuous_at_lattice_steps() {
        let eps = 1e-6;
        for i in -3..3 {
            let at = i as f64;
            let below = value_noise2(7, at - eps, 0.4);
            let above = value_noise2(7, at + eps, 0.4);
            assert!((below - above).abs() < 1e-3);
        }
    }
}
