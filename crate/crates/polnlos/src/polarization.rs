//! Closed-form polarization math: effective polarizer angle, Fresnel
//! reflectances, Brewster angle, and the leakage factor of a
//! near-crossed camera-side polarizer.
//!
//! All angles are radians. The effective polarizer axis is an
//! orientation, meaningful modulo pi; callers comparing angles should
//! compare modulo pi.

use crate::error::{Error, Result};
use crate::Vec3;

const UNIT_TOL: f64 = 1e-12;

/// Dielectric medium of the relay wall, refractive index `eta > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelMedium {
    eta: f64,
}

impl FresnelMedium {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta <= 1.0 {
            return Err(Error::invariant(format!(
                "refractive index must satisfy eta > 1, got {eta}"
            )));
        }
        Ok(FresnelMedium { eta })
    }

    pub fn refractive_index(&self) -> f64 {
        self.eta
    }
}

/// Per-point polarization state of an emitting scene: intensities of
/// the p and s components.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PolarizationComponents {
    pub i_p: f64,
    pub i_s: f64,
}

impl PolarizationComponents {
    pub fn new(i_p: f64, i_s: f64) -> Result<Self> {
        if !(i_p.is_finite() && i_s.is_finite()) || i_p < 0.0 || i_s < 0.0 {
            return Err(Error::invariant(format!(
                "polarization components must be finite and >= 0, got ({i_p}, {i_s})"
            )));
        }
        Ok(PolarizationComponents { i_p, i_s })
    }
}

/// Linear polarizer in front of a camera.
///
/// `normal` faces the incoming light (for a valid viewing ray,
/// `-omega_o . normal > 0`). `axis_world` is the transmission axis
/// embedded in 3D, perpendicular to `normal`. `axis_angle` is the same
/// axis as an in-plane angle against a fixed reference frame.
#[derive(Debug, Clone, Copy)]
pub struct PolarizerConfig {
    axis_angle: f64,
    normal: Vec3,
    axis_world: Vec3,
}

/// In-plane reference frame for converting between the scalar axis
/// angle and the embedded 3D axis. `e1` is the world x axis projected
/// into the polarizer plane (world y when the normal is near x);
/// `e2 = normal x e1`.
fn plane_frame(normal: &Vec3) -> (Vec3, Vec3) {
    let x = Vec3::new(1.0, 0.0, 0.0);
    let mut e1 = x - normal * normal.dot(&x);
    if e1.norm() < 1e-8 {
        let y = Vec3::new(0.0, 1.0, 0.0);
        e1 = y - normal * normal.dot(&y);
    }
    e1.normalize_mut();
    let e2 = normal.cross(&e1);
    (e1, e2)
}

impl PolarizerConfig {
    /// Build from a unit normal and the in-plane axis angle.
    pub fn from_angle(normal: Vec3, axis_angle: f64) -> Result<Self> {
        check_unit(&normal, "polarizer normal")?;
        if !axis_angle.is_finite() {
            return Err(Error::invariant("polarizer axis angle must be finite"));
        }
        let (e1, e2) = plane_frame(&normal);
        let axis_world = e1 * axis_angle.cos() + e2 * axis_angle.sin();
        Ok(PolarizerConfig {
            axis_angle,
            normal,
            axis_world,
        })
    }

    /// Build from a unit normal and an explicit 3D axis.
    pub fn from_axis(normal: Vec3, axis_world: Vec3) -> Result<Self> {
        check_unit(&normal, "polarizer normal")?;
        check_unit(&axis_world, "polarizer axis")?;
        if axis_world.dot(&normal).abs() > UNIT_TOL {
            return Err(Error::invariant(format!(
                "polarizer axis must be perpendicular to the normal, dot = {}",
                axis_world.dot(&normal)
            )));
        }
        let (e1, e2) = plane_frame(&normal);
        let axis_angle = axis_world.dot(&e2).atan2(axis_world.dot(&e1));
        Ok(PolarizerConfig {
            axis_angle,
            normal,
            axis_world,
        })
    }

    pub fn axis_angle(&self) -> f64 {
        self.axis_angle
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn axis_world(&self) -> &Vec3 {
        &self.axis_world
    }

    /// Same polarizer with the transmission axis rotated in-plane by
    /// `delta` radians. Used for rotating-polarizer image stacks.
    pub fn rotated(&self, delta: f64) -> Result<Self> {
        PolarizerConfig::from_angle(self.normal, self.axis_angle + delta)
    }
}

fn check_unit(v: &Vec3, what: &str) -> Result<()> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::invariant(format!("{what} has non-finite components")));
    }
    if (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::invariant(format!(
            "{what} must be unit-length, norm = {}",
            v.norm()
        )));
    }
    Ok(())
}

/// Weighting applied to the effective-angle terms of the leakage
/// factor. `Linear` is the first-power cos/sin form; `Malus` squares
/// the weights for sensitivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakageWeighting {
    #[default]
    Linear,
    Malus,
}

/// Effective transmission-axis angle of a polarizer seen from an
/// oblique incident ray.
///
/// `theta` is the polarizer axis from top view, `azimuth` and `zenith`
/// locate the incident ray. Computed from the two-component projection
/// (cos t' = cos(theta - a + pi/2), sin t' = cos z * sin(theta - a + pi/2))
/// resolved with atan2, so the result lies in (-pi, pi]. As an axis
/// orientation it is meaningful modulo pi; the single-tangent form
/// tan t' = -cos z / tan(theta - a) agrees modulo pi wherever defined.
pub fn effective_polarizer_angle(theta: f64, azimuth: f64, zenith: f64) -> Result<f64> {
    if !(theta.is_finite() && azimuth.is_finite() && zenith.is_finite()) {
        return Err(Error::invariant("angles must be finite"));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&zenith) {
        return Err(Error::invariant(format!(
            "zenith must lie in [0, pi/2), got {zenith}"
        )));
    }
    let d = theta - azimuth + std::f64::consts::FRAC_PI_2;
    Ok((zenith.cos() * d.sin()).atan2(d.cos()))
}

/// Fresnel reflectance of the p (parallel) polarization component.
///
/// `incidence` in [0, pi/2). The 0/0 at normal incidence resolves to
/// ((eta-1)/(eta+1))^2.
pub fn fresnel_rp(incidence: f64, medium: &FresnelMedium) -> f64 {
    assert!(
        (0.0..std::f64::consts::FRAC_PI_2).contains(&incidence),
        "incidence must lie in [0, pi/2), got {incidence}"
    );
    let eta = medium.eta;
    if incidence == 0.0 {
        return ((eta - 1.0) / (eta + 1.0)).powi(2);
    }
    let refraction = (incidence.sin() / eta).asin();
    let r = (incidence - refraction).tan() / (incidence + refraction).tan();
    r * r
}

/// Fresnel reflectance of the s (perpendicular) polarization component.
pub fn fresnel_rs(incidence: f64, medium: &FresnelMedium) -> f64 {
    assert!(
        (0.0..std::f64::consts::FRAC_PI_2).contains(&incidence),
        "incidence must lie in [0, pi/2), got {incidence}"
    );
    let eta = medium.eta;
    if incidence == 0.0 {
        return ((eta - 1.0) / (eta + 1.0)).powi(2);
    }
    let refraction = (incidence.sin() / eta).asin();
    let r = (incidence - refraction).sin() / (incidence + refraction).sin();
    r * r
}

/// Incidence angle at which the p reflectance vanishes: atan(eta).
pub fn brewster_angle(medium: &FresnelMedium) -> f64 {
    medium.eta.atan()
}

/// Intermediate quantities of the leakage chain; split out so the
/// transport builder and the tests can inspect them.
#[derive(Debug, Clone, Copy)]
pub struct LeakageGeometry {
    /// Half angle of the reflection path.
    pub half_angle: f64,
    /// Zenith angle of the viewing ray against the polarizer.
    pub zenith: f64,
    /// Effective polarizer angle for this ray.
    pub effective_angle: f64,
}

/// Resolve the leakage geometry for a reflection path.
///
/// `omega_i` points from the wall patch toward the scene point,
/// `omega_o` from the wall patch toward the camera. Both unit-length.
pub fn leakage_geometry(
    omega_i: &Vec3,
    omega_o: &Vec3,
    polarizer: &PolarizerConfig,
) -> Result<LeakageGeometry> {
    check_unit(omega_i, "omega_i")?;
    check_unit(omega_o, "omega_o")?;
    let half_angle = 0.5 * omega_o.dot(omega_i).clamp(-1.0, 1.0).acos();
    let cos_z = (-omega_o.dot(&polarizer.normal)).clamp(-1.0, 1.0);
    if cos_z <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "viewing ray does not face the polarizer (cos z = {cos_z})"
        )));
    }
    let zenith = cos_z.acos();
    let w = omega_o + polarizer.normal * cos_z;
    let w_norm = w.norm();
    if w_norm < 1e-9 {
        return Err(Error::DegenerateGeometry(
            "viewing ray is anti-parallel to the polarizer normal; azimuth undefined".into(),
        ));
    }
    let w = w / w_norm;
    // theta - a recovered from the projected ray against the axis.
    let axis_offset = (-w.dot(&polarizer.axis_world)).clamp(-1.0, 1.0).acos();
    let d = axis_offset + std::f64::consts::FRAC_PI_2;
    let effective_angle = (zenith.cos() * d.sin()).atan2(d.cos());
    Ok(LeakageGeometry {
        half_angle,
        zenith,
        effective_angle,
    })
}

fn weights(effective_angle: f64, weighting: LeakageWeighting) -> (f64, f64) {
    let (c, s) = (effective_angle.cos(), effective_angle.sin());
    match weighting {
        LeakageWeighting::Linear => (c, s),
        LeakageWeighting::Malus => (c * c, s * s),
    }
}

/// Leakage factor of an unpolarized scene through a near-crossed
/// polarizer: R_p(theta_h) cos(t') + R_s(theta_h) sin(t'), clamped to
/// [0, 1] (the raw form can leave that range for effective angles
/// outside [0, pi/2]).
pub fn leakage(
    omega_i: &Vec3,
    omega_o: &Vec3,
    polarizer: &PolarizerConfig,
    medium: &FresnelMedium,
) -> Result<f64> {
    leakage_weighted(omega_i, omega_o, polarizer, medium, LeakageWeighting::Linear)
}

/// As [`leakage`] with an explicit term weighting.
pub fn leakage_weighted(
    omega_i: &Vec3,
    omega_o: &Vec3,
    polarizer: &PolarizerConfig,
    medium: &FresnelMedium,
    weighting: LeakageWeighting,
) -> Result<f64> {
    let g = leakage_geometry(omega_i, omega_o, polarizer)?;
    let (wc, ws) = weights(g.effective_angle, weighting);
    let raw = fresnel_rp(g.half_angle, medium) * wc + fresnel_rs(g.half_angle, medium) * ws;
    Ok(raw.clamp(0.0, 1.0))
}

/// Leakage factor when the scene itself is polarized: the p/s
/// reflectance terms are scaled by the scene's component intensities.
/// Clamped to [0, max(I_p, I_s)] so unit components reduce exactly to
/// [`leakage`].
pub fn leakage_polarized_scene(
    omega_i: &Vec3,
    omega_o: &Vec3,
    polarizer: &PolarizerConfig,
    medium: &FresnelMedium,
    components: &PolarizationComponents,
    weighting: LeakageWeighting,
) -> Result<f64> {
    let g = leakage_geometry(omega_i, omega_o, polarizer)?;
    let (wc, ws) = weights(g.effective_angle, weighting);
    let raw = components.i_p * fresnel_rp(g.half_angle, medium) * wc
        + components.i_s * fresnel_rs(g.half_angle, medium) * ws;
    Ok(raw.clamp(0.0, components.i_p.max(components.i_s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn angle_diff_mod_pi(a: f64, b: f64) -> f64 {
        let mut d = (a - b) % PI;
        if d > PI / 2.0 {
            d -= PI;
        }
        if d < -PI / 2.0 {
            d += PI;
        }
        d.abs()
    }

    #[test]
    fn effective_angle_at_crossed_offset_is_zero_mod_pi() {
        // theta - a = pi/2 makes the tangent form vanish.
        for z in [0.0, 0.3, 1.2] {
            let t = effective_polarizer_angle(FRAC_PI_2, 0.0, z).unwrap();
            assert!(angle_diff_mod_pi(t, 0.0) < 1e-12, "z={z}, t={t}");
        }
    }

    #[test]
    fn effective_angle_at_zero_zenith_is_identity_shift() {
        for d in [-1.2, 0.0, 0.4, 2.0] {
            let t = effective_polarizer_angle(d, 0.0, 0.0).unwrap();
            assert!(angle_diff_mod_pi(t, d + FRAC_PI_2) < 1e-12);
        }
    }

    #[test]
    fn effective_angle_matches_tangent_form() {
        // theta - a = pi/4, z = pi/3: tangent form gives atan(-0.5).
        let t = effective_polarizer_angle(FRAC_PI_4, 0.0, FRAC_PI_3).unwrap();
        assert!(angle_diff_mod_pi(t, (-0.5f64).atan()) < 1e-12);
        // Literal atan2 value of the two-component form.
        assert_abs_diff_eq!(t, 2.677945044588987, epsilon = 1e-12);
    }

    #[test]
    fn effective_angle_rejects_grazing_zenith() {
        assert!(effective_polarizer_angle(0.1, 0.0, FRAC_PI_2).is_err());
        assert!(effective_polarizer_angle(0.1, 0.0, 2.0).is_err());
    }

    #[test]
    fn fresnel_normal_incidence_limit() {
        let m = FresnelMedium::new(1.5).unwrap();
        assert_abs_diff_eq!(fresnel_rp(0.0, &m), 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(fresnel_rs(0.0, &m), 0.04, epsilon = 1e-15);
        // Continuity against the analytic limit.
        assert_abs_diff_eq!(fresnel_rp(1e-8, &m), 0.04, epsilon = 1e-6);
        assert_abs_diff_eq!(fresnel_rs(1e-8, &m), 0.04, epsilon = 1e-6);
    }

    #[test]
    fn fresnel_known_values_at_45_degrees() {
        let m = FresnelMedium::new(1.5).unwrap();
        assert_abs_diff_eq!(
            fresnel_rp(FRAC_PI_4, &m),
            0.008466458978947476,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            fresnel_rs(FRAC_PI_4, &m),
            0.09201336304552440,
            epsilon = 1e-12
        );
    }

    #[test]
    fn brewster_root_and_values() {
        for eta in [1.3, 1.5, 1.7] {
            let m = FresnelMedium::new(eta).unwrap();
            let b = brewster_angle(&m);
            assert_abs_diff_eq!(b, eta.atan(), epsilon = 0.0);
            assert!(fresnel_rp(b, &m).abs() < 1e-12);
        }
        let m = FresnelMedium::new(1.5).unwrap();
        assert_abs_diff_eq!(brewster_angle(&m), 0.9827937232473290, epsilon = 1e-15);
    }

    #[test]
    fn fresnel_grazing_limit_approaches_one() {
        let m = FresnelMedium::new(1.5).unwrap();
        assert!(fresnel_rs(FRAC_PI_2 - 1e-6, &m) > 0.999);
    }

    #[test]
    fn fresnel_ordering() {
        let m = FresnelMedium::new(1.5).unwrap();
        let mut phi = 0.0;
        while phi < FRAC_PI_2 {
            let rp = fresnel_rp(phi, &m);
            let rs = fresnel_rs(phi, &m);
            assert!((0.0..=1.0).contains(&rp));
            assert!(rp <= rs + 1e-15, "phi={phi}");
            assert!(rs <= 1.0 + 1e-15);
            phi += 0.01;
        }
    }

    #[test]
    fn medium_rejects_nonphysical_index() {
        assert!(FresnelMedium::new(1.0).is_err());
        assert!(FresnelMedium::new(0.9).is_err());
        assert!(FresnelMedium::new(f64::NAN).is_err());
    }

    #[test]
    fn polarizer_config_invariants() {
        let n = Vec3::new(0.0, 0.0, -1.0);
        let p = PolarizerConfig::from_angle(n, 0.3).unwrap();
        assert_abs_diff_eq!(p.axis_world().norm(), 1.0, epsilon = 1e-12);
        assert!(p.axis_world().dot(p.normal()).abs() < 1e-12);
        // Round trip through the explicit-axis constructor.
        let p2 = PolarizerConfig::from_axis(n, *p.axis_world()).unwrap();
        assert!(angle_diff_mod_pi(p2.axis_angle(), 0.3) < 1e-12);
        // Axis not perpendicular to normal is rejected.
        assert!(PolarizerConfig::from_axis(n, Vec3::new(0.0, 0.6, 0.8)).is_err());
    }

    /// Constructs a geometry whose leakage chain lands on a prescribed
    /// (half-angle, effective-angle) pair: camera ray head-on-ish to
    /// the polarizer with a chosen in-plane azimuth.
    fn geometry_for(theta_h: f64, axis_offset: f64, zenith: f64) -> (Vec3, Vec3, PolarizerConfig) {
        // omega_o at the given zenith from the polarizer normal -z.
        let np = Vec3::new(0.0, 0.0, -1.0);
        let omega_o = Vec3::new(zenith.sin(), 0.0, zenith.cos());
        // w = normalized tangential part of omega_o = +x; want
        // acos(-w.q) = axis_offset.
        let q_angle = std::f64::consts::PI - axis_offset; // so -w.q = cos(axis_offset)
        let q = Vec3::new(q_angle.cos(), q_angle.sin(), 0.0);
        let polarizer = PolarizerConfig::from_axis(np, q).unwrap();
        // omega_i at angle 2*theta_h from omega_o, rotated in the x-z plane.
        let a = 2.0 * theta_h;
        let omega_i = Vec3::new(
            zenith.sin() * a.cos() - zenith.cos() * a.sin(),
            0.0,
            zenith.cos() * a.cos() + zenith.sin() * a.sin(),
        );
        (omega_i, omega_o, polarizer)
    }

    #[test]
    fn leakage_dark_band_at_brewster() {
        let m = FresnelMedium::new(1.5).unwrap();
        let b = brewster_angle(&m);
        // axis_offset = pi/2 gives effective angle 0 regardless of zenith.
        let (wi, wo, pol) = geometry_for(b, FRAC_PI_2, 0.4);
        let g = leakage_geometry(&wi, &wo, &pol).unwrap();
        assert!(angle_diff_mod_pi(g.effective_angle, 0.0) < 1e-9);
        assert_abs_diff_eq!(g.half_angle, b, epsilon = 1e-12);
        let lam = leakage(&wi, &wo, &pol, &m).unwrap();
        assert!(lam < 1e-12, "dark band expected, got {lam}");
    }

    #[test]
    fn leakage_selects_rs_at_quarter_turn() {
        let m = FresnelMedium::new(1.5).unwrap();
        // zenith = 0 keeps the projection undistorted: effective angle
        // is axis_offset + pi/2 exactly, so axis_offset = 0 gives pi/2.
        let (wi, wo, pol) = geometry_for(0.7, 0.0, 1e-6);
        let g = leakage_geometry(&wi, &wo, &pol).unwrap();
        assert!(angle_diff_mod_pi(g.effective_angle, FRAC_PI_2) < 1e-5);
        let lam = leakage(&wi, &wo, &pol, &m).unwrap();
        assert_abs_diff_eq!(lam, fresnel_rs(0.7, &m), epsilon = 1e-5);
    }

    #[test]
    fn leakage_degenerate_antiparallel_ray() {
        let np = Vec3::new(0.0, 0.0, -1.0);
        let pol = PolarizerConfig::from_angle(np, 0.0).unwrap();
        let wo = Vec3::new(0.0, 0.0, 1.0); // exactly along -normal
        let wi = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            leakage(&wi, &wo, &pol, &FresnelMedium::new(1.5).unwrap()),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn polarized_scene_reduces_to_unpolarized() {
        let m = FresnelMedium::new(1.5).unwrap();
        let (wi, wo, pol) = geometry_for(0.5, 0.9, 0.6);
        let unit = PolarizationComponents::new(1.0, 1.0).unwrap();
        let a = leakage(&wi, &wo, &pol, &m).unwrap();
        let b = leakage_polarized_scene(&wi, &wo, &pol, &m, &unit, LeakageWeighting::Linear)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn polarized_scene_term_selection() {
        let m = FresnelMedium::new(1.5).unwrap();
        // effective angle pi/2, only the s term survives.
        let (wi, wo, pol) = geometry_for(0.7, 0.0, 1e-6);
        let s_only = PolarizationComponents::new(0.0, 1.0).unwrap();
        let lam =
            leakage_polarized_scene(&wi, &wo, &pol, &m, &s_only, LeakageWeighting::Linear).unwrap();
        assert_abs_diff_eq!(lam, fresnel_rs(0.7, &m), epsilon = 1e-5);
        // p-only at Brewster with effective angle 0 blocks completely.
        let b = brewster_angle(&m);
        let (wi, wo, pol) = geometry_for(b, FRAC_PI_2, 0.4);
        let p_only = PolarizationComponents::new(1.0, 0.0).unwrap();
        let lam =
            leakage_polarized_scene(&wi, &wo, &pol, &m, &p_only, LeakageWeighting::Linear).unwrap();
        assert!(lam < 1e-12);
    }

    #[test]
    fn leakage_finite_nonnegative_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = FresnelMedium::new(1.5).unwrap();
        let np = Vec3::new(0.0, 0.0, -1.0);
        let mut tested = 0;
        while tested < 500 {
            let pol = PolarizerConfig::from_angle(np, rng.gen_range(-PI..PI)).unwrap();
            let wo = random_unit(&mut rng);
            let wi = random_unit(&mut rng);
            match leakage(&wi, &wo, &pol, &m) {
                Ok(lam) => {
                    assert!(lam.is_finite() && (0.0..=1.0).contains(&lam));
                    tested += 1;
                }
                Err(Error::DegenerateGeometry(_)) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    fn random_unit(rng: &mut impl rand::Rng) -> Vec3 {
        loop {
            let v = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 {
                return v / n;
            }
        }
    }
}
