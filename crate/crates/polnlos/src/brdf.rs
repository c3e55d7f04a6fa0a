//! Parametric rough-wall BRDF: a normalized Gaussian specular lobe
//! blended with a Lambertian term by a single roughness knob.
//!
//! roughness 0 is mirror-like (narrow lobe), 1 is fully diffuse (1/pi).
//! Foreshortening and distance falloff are applied by the transport
//! assembly, not here.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::RwLock;

use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::polarization::FresnelMedium;
use crate::Vec3;

/// Lobe width floor; keeps the specular lobe integrable at roughness 0.
const SIGMA_MIN: f64 = 1e-3;

/// Wall material: roughness in [0, 1], dielectric medium, outward
/// unit normal.
#[derive(Debug, Clone, Copy)]
pub struct RoughSurface {
    roughness: f64,
    medium: FresnelMedium,
    wall_normal: Vec3,
}

impl RoughSurface {
    pub fn new(roughness: f64, medium: FresnelMedium, wall_normal: Vec3) -> Result<Self> {
        if !(0.0..=1.0).contains(&roughness) {
            return Err(Error::invariant(format!(
                "roughness must lie in [0, 1], got {roughness}"
            )));
        }
        if (wall_normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invariant(format!(
                "wall normal must be unit-length, norm = {}",
                wall_normal.norm()
            )));
        }
        Ok(RoughSurface {
            roughness,
            medium,
            wall_normal,
        })
    }

    pub fn roughness(&self) -> f64 {
        self.roughness
    }

    pub fn medium(&self) -> &FresnelMedium {
        &self.medium
    }

    pub fn wall_normal(&self) -> &Vec3 {
        &self.wall_normal
    }

    /// Same surface with a different roughness; used by sweeps.
    pub fn with_roughness(&self, roughness: f64) -> Result<Self> {
        RoughSurface::new(roughness, self.medium, self.wall_normal)
    }
}

/// Lobe angular width for a given roughness.
fn lobe_sigma(roughness: f64) -> f64 {
    roughness * FRAC_PI_2 + SIGMA_MIN
}

/// Solid-angle normalization of the Gaussian lobe,
/// 2 pi * Int_0^{pi/2} exp(-a^2 / (2 sigma^2)) sin(a) da,
/// computed once per sigma by Simpson quadrature and cached.
/// The cache is filled on first use per sigma and read-only afterward.
static LOBE_NORM_CACHE: Lazy<RwLock<HashMap<u64, f64>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

fn lobe_normalization(sigma: f64) -> f64 {
    let key = sigma.to_bits();
    if let Some(&n) = LOBE_NORM_CACHE.read().unwrap().get(&key) {
        return n;
    }
    // The integrand is concentrated within a few sigma of zero; cut the
    // range accordingly so narrow lobes are still resolved.
    let upper = FRAC_PI_2.min(10.0 * sigma);
    let steps = 4096usize; // even; Simpson error far below 1e-6 relative
    let h = upper / steps as f64;
    let f = |a: f64| (-a * a / (2.0 * sigma * sigma)).exp() * a.sin();
    let mut sum = f(0.0) + f(upper);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    let n = 2.0 * PI * sum * h / 3.0;
    LOBE_NORM_CACHE.write().unwrap().insert(key, n);
    n
}

/// Angle between the mirror reflection of `omega_i` and `omega_o`.
/// Symmetric under swapping the two directions.
fn mirror_angle(omega_i: &Vec3, omega_o: &Vec3, normal: &Vec3) -> f64 {
    let mirror = normal * (2.0 * omega_i.dot(normal)) - omega_i;
    mirror.dot(omega_o).clamp(-1.0, 1.0).acos()
}

/// Half angle of the reflection path: acos(omega_o . omega_i) / 2.
pub fn half_angle(omega_i: &Vec3, omega_o: &Vec3) -> f64 {
    0.5 * omega_o.dot(omega_i).clamp(-1.0, 1.0).acos()
}

/// Evaluate the wall BRDF for directions pointing away from the patch.
/// Returns zero when either direction is below the surface.
pub fn brdf_eval(omega_i: &Vec3, omega_o: &Vec3, surface: &RoughSurface) -> f64 {
    let n = &surface.wall_normal;
    if omega_i.dot(n) <= 0.0 || omega_o.dot(n) <= 0.0 {
        return 0.0;
    }
    let gamma = surface.roughness;
    if gamma == 1.0 {
        return 1.0 / PI;
    }
    let sigma = lobe_sigma(gamma);
    let alpha = mirror_angle(omega_i, omega_o, n);
    let lobe = (-alpha * alpha / (2.0 * sigma * sigma)).exp() / lobe_normalization(sigma);
    (1.0 - gamma) * lobe + gamma / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn surface(gamma: f64) -> RoughSurface {
        RoughSurface::new(
            gamma,
            FresnelMedium::new(1.5).unwrap(),
            Vec3::new(0.0, 0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_roughness() {
        let m = FresnelMedium::new(1.5).unwrap();
        assert!(RoughSurface::new(-0.1, m, Vec3::new(0.0, 0.0, 1.0)).is_err());
        assert!(RoughSurface::new(1.1, m, Vec3::new(0.0, 0.0, 1.0)).is_err());
        assert!(RoughSurface::new(0.5, m, Vec3::new(0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn fully_diffuse_is_one_over_pi() {
        let s = surface(1.0);
        let wi = Vec3::new(0.3, 0.1, 0.9486832980505138).normalize();
        let wo = Vec3::new(-0.5, 0.2, 0.8).normalize();
        assert_eq!(brdf_eval(&wi, &wo, &s), 1.0 / PI);
    }

    #[test]
    fn below_surface_is_zero() {
        let s = surface(0.5);
        let wi = Vec3::new(0.0, 0.0, -1.0);
        let wo = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(brdf_eval(&wi, &wo, &s), 0.0);
        assert_eq!(brdf_eval(&wo, &wi, &s), 0.0);
    }

    #[test]
    fn mirror_limit_peaks_on_mirror_direction() {
        let s = surface(0.0);
        let wi = Vec3::new(0.5, 0.0, 0.8660254037844386);
        let mirror = Vec3::new(-0.5, 0.0, 0.8660254037844386);
        let off = Vec3::new(-0.3, 0.2, 0.9327379053088816).normalize();
        let on_peak = brdf_eval(&wi, &mirror, &s);
        let off_peak = brdf_eval(&wi, &off, &s);
        assert!(on_peak > 1e4, "narrow lobe should be tall, got {on_peak}");
        assert!(off_peak < 1e-6 * on_peak);
    }

    #[test]
    fn matches_closed_form_blend() {
        // Independent re-evaluation of the stated formula at gamma 0.5.
        let gamma = 0.5;
        let s = surface(gamma);
        let wi = Vec3::new(0.2, -0.1, 0.9746794344808963).normalize();
        let wo = Vec3::new(-0.4, 0.3, 0.8660254037844386).normalize();
        let n = Vec3::new(0.0, 0.0, 1.0);
        let mirror = n * (2.0 * wi.dot(&n)) - wi;
        let alpha = mirror.dot(&wo).clamp(-1.0, 1.0).acos();
        let sigma = gamma * FRAC_PI_2 + 1e-3;
        // Trapezoid oracle for the lobe norm, independent of the
        // Simpson implementation.
        let steps = 200_000;
        let h = FRAC_PI_2 / steps as f64;
        let mut norm = 0.0;
        for i in 0..steps {
            let a0 = i as f64 * h;
            let a1 = a0 + h;
            let f0 = (-a0 * a0 / (2.0 * sigma * sigma)).exp() * a0.sin();
            let f1 = (-a1 * a1 / (2.0 * sigma * sigma)).exp() * a1.sin();
            norm += 0.5 * (f0 + f1) * h;
        }
        norm *= 2.0 * PI;
        let expected =
            (1.0 - gamma) * (-alpha * alpha / (2.0 * sigma * sigma)).exp() / norm + gamma / PI;
        assert_abs_diff_eq!(brdf_eval(&wi, &wo, &s), expected, epsilon = 1e-6 * expected);
    }

    #[test]
    fn reciprocity_of_the_lobe() {
        let s = surface(0.3);
        let wi = Vec3::new(0.2, 0.5, 0.8426149773176359).normalize();
        let wo = Vec3::new(-0.6, 0.1, 0.7937253933193772).normalize();
        assert_abs_diff_eq!(
            brdf_eval(&wi, &wo, &s),
            brdf_eval(&wo, &wi, &s),
            epsilon = 1e-14
        );
    }

    #[test]
    fn continuous_in_roughness() {
        let wi = Vec3::new(0.3, -0.2, 0.9327379053088816).normalize();
        let wo = Vec3::new(-0.1, 0.4, 0.9110433579144299).normalize();
        let values: Vec<f64> = (0..=1000)
            .map(|i| brdf_eval(&wi, &wo, &surface(i as f64 * 1e-3)))
            .collect();
        let scale = values.iter().cloned().fold(0.0f64, f64::max);
        assert!(scale > 0.0);
        let mut worst = (0usize, 0.0f64);
        for (i, w) in values.windows(2).enumerate() {
            assert!(w[1] >= 0.0 && w[1].is_finite());
            let jump = (w[1] - w[0]).abs();
            assert!(
                jump / scale < 5e-2,
                "jump at gamma step {i}: {} -> {}",
                w[0],
                w[1]
            );
            if jump > worst.1 {
                worst = (i, jump);
            }
        }
        // Refining the worst interval 10x must shrink the largest step
        // accordingly; a genuine discontinuity would not shrink at all.
        let g0 = worst.0 as f64 * 1e-3;
        let fine: Vec<f64> = (0..=10)
            .map(|i| brdf_eval(&wi, &wo, &surface(g0 + i as f64 * 1e-4)))
            .collect();
        let fine_max = fine
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0f64, f64::max);
        assert!(
            fine_max < 0.35 * worst.1,
            "refined jump {fine_max} vs coarse {}",
            worst.1
        );
    }
}
