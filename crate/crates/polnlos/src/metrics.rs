//! Image-quality metrics on normalized [0, 1] images: PSNR, ZNCC
//! (Pearson correlation), and SSIM with the standard 11x11 Gaussian
//! window.

use crate::error::{Error, Result};

/// 2D intensity image, pixel values in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::invariant("pixel values must be finite and in [0, 1]"));
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
        })
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

fn check_same_shape(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "images are {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB with peak 1.0. Identical images
/// return `f64::INFINITY`.
pub fn psnr(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    check_same_shape(reference, test)?;
    let n = reference.pixels.len() as f64;
    let mse: f64 = reference
        .pixels
        .iter()
        .zip(&test.pixels)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Zero-mean normalized cross correlation (Pearson correlation of the
/// pixel vectors). Errors on constant images.
pub fn zncc(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    check_same_shape(reference, test)?;
    let n = reference.pixels.len() as f64;
    let mean_a = reference.pixels.iter().sum::<f64>() / n;
    let mean_b = test.pixels.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (a, b) in reference.pixels.iter().zip(&test.pixels) {
        let da = a - mean_a;
        let db = b - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::UndefinedMetric(
            "zncc is undefined for a constant image".into(),
        ));
    }
    Ok(cov / (var_a.sqrt() * var_b.sqrt()))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for y in 0..SSIM_WINDOW {
        for x in 0..SSIM_WINDOW {
            let dx = x as f64 - c;
            let dy = y as f64 - c;
            let v = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[y * SSIM_WINDOW + x] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean local SSIM over all fully contained 11x11 windows, Gaussian
/// weighted (sigma 1.5), constants C1 = 0.01^2 and C2 = 0.03^2 on the
/// [0, 1] range.
pub fn ssim(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    check_same_shape(reference, test)?;
    if reference.width < SSIM_WINDOW || reference.height < SSIM_WINDOW {
        return Err(Error::DimensionMismatch(format!(
            "ssim needs both dimensions >= {SSIM_WINDOW}, image is {}x{}",
            reference.width, reference.height
        )));
    }
    let window = gaussian_window();
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(reference.height - SSIM_WINDOW) {
        for x0 in 0..=(reference.width - SSIM_WINDOW) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for wy in 0..SSIM_WINDOW {
                for wx in 0..SSIM_WINDOW {
                    let w = window[wy * SSIM_WINDOW + wx];
                    mu_a += w * reference.at(x0 + wx, y0 + wy);
                    mu_b += w * test.at(x0 + wx, y0 + wy);
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for wy in 0..SSIM_WINDOW {
                for wx in 0..SSIM_WINDOW {
                    let w = window[wy * SSIM_WINDOW + wx];
                    let da = reference.at(x0 + wx, y0 + wy) - mu_a;
                    let db = test.at(x0 + wx, y0 + wy) - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            }
            let num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn image(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> ImageBuffer {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        ImageBuffer::new(width, height, pixels).unwrap()
    }

    fn gradient(width: usize, height: usize) -> ImageBuffer {
        image(width, height, |x, y| {
            (x + y) as f64 / (width + height - 2) as f64
        })
    }

    #[test]
    fn psnr_offsets() {
        let a = image(8, 8, |x, _| 0.1 + 0.05 * (x as f64 / 8.0));
        let b = ImageBuffer::new(8, 8, a.pixels.iter().map(|p| p + 0.1).collect()).unwrap();
        assert_abs_diff_eq!(psnr(&a, &b).unwrap(), 20.0, epsilon = 1e-10);
        let c = ImageBuffer::new(8, 8, a.pixels.iter().map(|p| p + 0.01).collect()).unwrap();
        assert_abs_diff_eq!(psnr(&a, &c).unwrap(), 40.0, epsilon = 1e-10);
        assert!(psnr(&a, &a).unwrap().is_infinite());
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let a = gradient(16, 16);
        let mut last = f64::INFINITY;
        for sigma in [0.01, 0.05, 0.1] {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            let noisy = ImageBuffer::new(
                16,
                16,
                a.pixels
                    .iter()
                    .map(|p| (p + rng.gen_range(-sigma..sigma)).clamp(0.0, 1.0))
                    .collect(),
            )
            .unwrap();
            let v = psnr(&a, &noisy).unwrap();
            assert!(v < last, "sigma {sigma}: {v} !< {last}");
            last = v;
        }
    }

    #[test]
    fn zncc_affine_invariance() {
        let a = gradient(10, 10);
        let scaled = ImageBuffer::new(
            10,
            10,
            a.pixels.iter().map(|p| 0.5 * p + 0.1).collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(zncc(&a, &scaled).unwrap(), 1.0, epsilon = 1e-12);
        let inverted = ImageBuffer::new(10, 10, a.pixels.iter().map(|p| 1.0 - p).collect()).unwrap();
        assert_abs_diff_eq!(zncc(&a, &inverted).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn zncc_constant_image_errors() {
        let a = gradient(6, 6);
        let flat = image(6, 6, |_, _| 0.5);
        assert!(matches!(zncc(&a, &flat), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn zncc_independent_images_decorrelate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        let a = image(100, 100, |_, _| rng.gen_range(0.0..1.0));
        let b = image(100, 100, |_, _| rng.gen_range(0.0..1.0));
        assert!(zncc(&a, &b).unwrap().abs() < 0.05);
    }

    #[test]
    fn ssim_self_and_symmetry() {
        let a = gradient(16, 16);
        assert_abs_diff_eq!(ssim(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let b = ImageBuffer::new(
            16,
            16,
            a.pixels
                .iter()
                .map(|p| (p + rng.gen_range(-0.2..0.2)).clamp(0.0, 1.0))
                .collect(),
        )
        .unwrap();
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-12);
        assert!(ab <= 1.0);
    }

    #[test]
    fn ssim_strong_noise_scores_low() {
        let a = gradient(32, 32);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let noisy = ImageBuffer::new(
            32,
            32,
            a.pixels
                .iter()
                .map(|p| {
                    let n: f64 = rng.gen_range(-1.0..1.0) * 0.3 * 1.7320508075688772;
                    (p + n).clamp(0.0, 1.0)
                })
                .collect(),
        )
        .unwrap();
        assert!(ssim(&a, &noisy).unwrap() < 0.5);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = gradient(8, 8);
        assert!(ssim(&a, &a).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = gradient(8, 8);
        let b = gradient(8, 9);
        assert!(psnr(&a, &b).is_err());
        assert!(zncc(&a, &b).is_err());
    }
}
