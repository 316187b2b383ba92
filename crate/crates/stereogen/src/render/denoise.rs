//! Feature-guided edge-aware denoiser: an a-trous wavelet filter whose tap
//! weights come from the albedo and normal buffers, so material and
//! geometric edges survive while Monte Carlo noise is averaged away.

use rayon::prelude::*;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
const ITERATIONS: u32 = 4;
const SIGMA_ALBEDO: f64 = 0.12;
const NORMAL_POWER: i32 = 32;

#[inline]
fn feature_weight(albedo_p: [f32; 3], albedo_q: [f32; 3], normal_p: [f32; 3], normal_q: [f32; 3]) -> f64 {
    let da = (albedo_p[0] as f64 - albedo_q[0] as f64).powi(2)
        + (albedo_p[1] as f64 - albedo_q[1] as f64).powi(2)
        + (albedo_p[2] as f64 - albedo_q[2] as f64).powi(2);
    let wa = (-da / (SIGMA_ALBEDO * SIGMA_ALBEDO)).exp();
    let ndot = (normal_p[0] as f64 * normal_q[0] as f64
        + normal_p[1] as f64 * normal_q[1] as f64
        + normal_p[2] as f64 * normal_q[2] as f64)
        .max(0.0);
    // Environment pixels have zero normals; treat same-zero pairs as aligned.
    let wn = if normal_p == [0.0; 3] && normal_q == [0.0; 3] { 1.0 } else { ndot.powi(NORMAL_POWER) };
    wa * wn
}

/// Pure function of the input buffers; deterministic and thread-safe.
pub fn denoise(
    width: u32,
    height: u32,
    rgb: &[[f32; 3]],
    albedo: &[[f32; 3]],
    normal: &[[f32; 3]],
) -> Vec<[f32; 3]> {
    assert_eq!(rgb.len(), (width * height) as usize);
    assert_eq!(albedo.len(), rgb.len());
    assert_eq!(normal.len(), rgb.len());
    let w = width as i64;
    let h = height as i64;
    let mut current = rgb.to_vec();
    for iter in 0..ITERATIONS {
        let step = 1i64 << iter;
        let src = current;
        current = (0..w * h)
            .into_par_iter()
            .map(|i| {
                let x = i % w;
                let y = i / w;
                let pi = i as usize;
                let mut acc = [0.0f64; 3];
                let mut total = 0.0f64;
                for (dy, ky) in (-2..=2).zip(KERNEL) {
                    let qy = (y + dy * step).clamp(0, h - 1);
                    for (dx, kx) in (-2..=2).zip(KERNEL) {
                        let qx = (x + dx * step).clamp(0, w - 1);
                        let qi = (qy * w + qx) as usize;
                        let wgt = kx * ky * feature_weight(albedo[pi], albedo[qi], normal[pi], normal[qi]);
                        acc[0] += src[qi][0] as f64 * wgt;
                        acc[1] += src[qi][1] as f64 * wgt;
                        acc[2] += src[qi][2] as f64 * wgt;
                        total += wgt;
                    }
                }
                if total > 0.0 {
                    [
                        (acc[0] / total) as f32,
                        (acc[1] / total) as f32,
                        (acc[2] / total) as f32,
                    ]
                } else {
                    src[pi]
                }
            })
            .collect();
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Pcg32;

    #[test]
    fn constant_buffer_noise_is_reduced() {
        let (w, h) = (32u32, 32u32);
        let n = (w * h) as usize;
        let albedo = vec![[0.5f32; 3]; n];
        let normal = vec![[0.0, 0.0, 1.0f32]; n];
        let mut rng = Pcg32::new(1, 1);
        let noisy: Vec<[f32; 3]> = (0..n)
            .map(|_| {
                let e = (rng.f64() - 0.5) as f32 * 0.4;
                [0.5 + e, 0.5 + e, 0.5 + e]
            })
            .collect();
        let out = denoise(w, h, &noisy, &albedo, &normal);
        let rmse = |buf: &[[f32; 3]]| {
            (buf.iter().map(|c| (c[0] as f64 - 0.5).powi(2)).sum::<f64>() / n as f64).sqrt()
        };
        assert!(rmse(&out) < rmse(&noisy) * 0.3, "{} vs {}", rmse(&out), rmse(&noisy));
    }

    #[test]
    fn albedo_edge_is_preserved() {
        let (w, h) = (32u32, 32u32);
        let n = (w * h) as usize;
        let mut albedo = vec![[0.1f32; 3]; n];
        let normal = vec![[0.0, 0.0, 1.0f32]; n];
        for y in 0..h {
            for x in w / 2..w {
                albedo[(y * w + x) as usize] = [0.9; 3];
            }
        }
        let mut rng = Pcg32::new(2, 2);
        let noisy: Vec<[f32; 3]> = (0..n)
            .map(|i| {
                let base = albedo[i][0];
                let e = (rng.f64() - 0.5) as f32 * 0.2;
                [base + e; 3]
            })
            .collect();
        let out = denoise(w, h, &noisy, &albedo, &normal);
        let rmse_region = |buf: &[[f32; 3]], left: bool| {
            let mut acc = 0.0f64;
            let mut count = 0usize;
            for y in 0..h {
                for x in 0..w {
                    if (x < w / 2) == left {
                        let target = if left { 0.1f64 } else { 0.9 };
                        acc += (buf[(y * w + x) as usize][0] as f64 - target).powi(2);
                        count += 1;
                    }
                }
            }
            (acc / count as f64).sqrt()
        };
        assert!(rmse_region(&out, true) < rmse_region(&noisy, true));
        assert!(rmse_region(&out, false) < rmse_region(&noisy, false));
    }
}
