//! Light-transport matrix assembly for the passive, occluded, and
//! active (transient) NLOS configurations, with or without a
//! camera-side polarizer, plus multi-camera stacking and the noisy
//! forward model.
//!
//! Row order is camera-major, then wall row-major (v outer, u inner);
//! the active builder adds time bins innermost within a wall patch.
//! Columns are scene row-major (voxels: w outer, then v, then u inner
//! -- see `voxel_order`).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ray_directions, visibility, SceneConfig};
use crate::polarization::{
    leakage_polarized_scene, leakage_weighted, PolarizerConfig,
};
use crate::{brdf, Vec3, SPEED_OF_LIGHT};

/// Provenance of one matrix row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub camera: usize,
    pub wall_iu: usize,
    pub wall_iv: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time_bin: Option<usize>,
}

/// Provenance of one matrix column (scene point or voxel).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColMeta {
    pub iu: usize,
    pub iv: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iw: Option<usize>,
}

/// Dense light-transport matrix with per-row/column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMatrix {
    pub data: DMatrix<f64>,
    pub row_meta: Vec<RowMeta>,
    pub col_meta: Vec<ColMeta>,
}

impl TransportMatrix {
    pub fn new(data: DMatrix<f64>, row_meta: Vec<RowMeta>, col_meta: Vec<ColMeta>) -> Result<Self> {
        if data.nrows() != row_meta.len() || data.ncols() != col_meta.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but meta is {}x{}",
                data.nrows(),
                data.ncols(),
                row_meta.len(),
                col_meta.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invariant(
                "transport entries must be finite and >= 0",
            ));
        }
        Ok(TransportMatrix {
            data,
            row_meta,
            col_meta,
        })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    /// Scene grid shape (nu, nv) recovered from column provenance.
    pub fn scene_shape(&self) -> (usize, usize) {
        let nu = self.col_meta.iter().map(|m| m.iu).max().map_or(0, |m| m + 1);
        let nv = self.col_meta.iter().map(|m| m.iv).max().map_or(0, |m| m + 1);
        (nu, nv)
    }
}

/// Hidden-scene intensity vector, entries in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneVector {
    pub values: DVector<f64>,
}

impl SceneVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invariant("scene values must lie in [0, 1]"));
        }
        Ok(SceneVector { values })
    }
}

/// Wall observation vector (one entry per matrix row).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector {
    pub values: DVector<f64>,
}

impl ObservationVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invariant("observations must be finite"));
        }
        Ok(ObservationVector { values })
    }
}

/// Wall patches in row order: v outer, u inner.
pub fn wall_order(nu: usize, nv: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..nv).flat_map(move |iv| (0..nu).map(move |iu| (iu, iv)))
}

/// Voxels in column order: w outer, then v, then u inner.
pub fn voxel_order(nu: usize, nv: usize, nw: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..nw).flat_map(move |iw| {
        (0..nv).flat_map(move |iv| (0..nu).map(move |iu| (iu, iv, iw)))
    })
}

fn polarizer_for(config: &SceneConfig, camera: usize) -> Result<&PolarizerConfig> {
    config.cameras[camera].polarizer.as_ref().ok_or_else(|| {
        Error::invariant(format!(
            "camera {camera} has no polarizer but use_polarizer is set"
        ))
    })
}

/// Per-entry passive transport value: BRDF times optional geometric
/// falloff times optional leakage times optional visibility.
#[allow(clippy::too_many_arguments)]
fn passive_entry(
    config: &SceneConfig,
    s: &Vec3,
    c: &Vec3,
    o: &Vec3,
    polarizer: Option<&PolarizerConfig>,
    emission_idx: Option<usize>,
    with_occluders: bool,
) -> Result<f64> {
    if with_occluders && visibility(s, c, &config.occluders) == 0 {
        return Ok(0.0);
    }
    let (omega_i, omega_o) = ray_directions(s, c, o)?;
    let omega = brdf::brdf_eval(&omega_i, &omega_o, &config.surface);
    if omega == 0.0 {
        return Ok(0.0);
    }
    let falloff = if config.falloff_enabled {
        let n = config.wall.normal();
        let cos_in = omega_i.dot(&n).max(0.0);
        cos_in / (s - c).norm_squared()
    } else {
        1.0
    };
    if falloff == 0.0 {
        return Ok(0.0);
    }
    let lam = match polarizer {
        Some(pol) => match emission_idx
            .and_then(|i| config.scene.emission.as_ref().map(|e| e[i]))
        {
            Some(components) => leakage_polarized_scene(
                &omega_i,
                &omega_o,
                pol,
                config.surface.medium(),
                &components,
                config.leakage_weighting,
            )?,
            None => leakage_weighted(
                &omega_i,
                &omega_o,
                pol,
                config.surface.medium(),
                config.leakage_weighting,
            )?,
        },
        None => 1.0,
    };
    Ok(omega * falloff * lam)
}

fn build_passive_impl(
    config: &SceneConfig,
    use_polarizer: bool,
    with_occluders: bool,
) -> Result<TransportMatrix> {
    config.validate()?;
    let wall = &config.wall;
    let scene = &config.scene;
    let cols = scene.point_count();
    let per_camera = wall.patch_count();
    let rows = config.cameras.len() * per_camera;

    let scene_points: Vec<Vec3> = wall_order(scene.nu, scene.nv)
        .map(|(iu, iv)| scene.patch_center(iu, iv))
        .collect::<Result<_>>()?;
    let col_meta: Vec<ColMeta> = wall_order(scene.nu, scene.nv)
        .map(|(iu, iv)| ColMeta { iu, iv, iw: None })
        .collect();
    let wall_patches: Vec<(usize, usize, Vec3)> = wall_order(wall.nu, wall.nv)
        .map(|(iu, iv)| wall.patch_center(iu, iv).map(|p| (iu, iv, p)))
        .collect::<Result<_>>()?;

    let mut row_meta = Vec::with_capacity(rows);
    for (k, _) in config.cameras.iter().enumerate() {
        for &(iu, iv, _) in &wall_patches {
            row_meta.push(RowMeta {
                camera: k,
                wall_iu: iu,
                wall_iv: iv,
                time_bin: None,
            });
        }
    }

    // Row-parallel assembly; every entry is a pure function of the
    // config, so the result is identical to the sequential order.
    let row_values: Vec<Vec<f64>> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let k = r / per_camera;
            let (_, _, ref c) = wall_patches[r % per_camera];
            let o = &config.cameras[k].position;
            let pol = if use_polarizer {
                Some(polarizer_for(config, k)?)
            } else {
                None
            };
            scene_points
                .iter()
                .enumerate()
                .map(|(j, s)| passive_entry(config, s, c, o, pol, Some(j), with_occluders))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let data = DMatrix::from_fn(rows, cols, |r, c| row_values[r][c]);
    TransportMatrix::new(data, row_meta, col_meta)
}

/// Passive transport: one row per (camera, wall patch), one column per
/// scene point. Occluders in the config are ignored here.
pub fn build_passive(config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix> {
    build_passive_impl(config, use_polarizer, false)
}

/// Passive transport with the config's occluders applied: entries are
/// zeroed where the scene-to-wall segment is blocked.
pub fn build_occluded(config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix> {
    build_passive_impl(config, use_polarizer, true)
}

/// Vertically concatenate transport matrices sharing the same columns.
pub fn stack_cameras(matrices: &[TransportMatrix]) -> Result<TransportMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::invariant("cannot stack an empty matrix list"))?;
    let cols = first.cols();
    for (i, m) in matrices.iter().enumerate().skip(1) {
        if m.cols() != cols || m.col_meta != first.col_meta {
            return Err(Error::DimensionMismatch(format!(
                "matrix {i} has different columns than the first"
            )));
        }
    }
    let rows: usize = matrices.iter().map(|m| m.rows()).sum();
    let mut data = DMatrix::zeros(rows, cols);
    let mut row_meta = Vec::with_capacity(rows);
    let mut at = 0;
    for m in matrices {
        data.rows_mut(at, m.rows()).copy_from(&m.data);
        row_meta.extend_from_slice(&m.row_meta);
        at += m.rows();
    }
    TransportMatrix::new(data, row_meta, first.col_meta.clone())
}

/// Rotating-polarizer stack: rebuild the polarized transport with the
/// transmission axis offset by each angle and stack the copies.
pub fn build_rotating(config: &SceneConfig, angles: &[f64]) -> Result<TransportMatrix> {
    if angles.is_empty() {
        return Err(Error::invariant("rotating stack needs at least one angle"));
    }
    let mut parts = Vec::with_capacity(angles.len());
    for &delta in angles {
        let mut rotated = config.clone();
        for cam in &mut rotated.cameras {
            if let Some(p) = &cam.polarizer {
                cam.polarizer = Some(p.rotated(delta)?);
            }
        }
        parts.push(build_passive(&rotated, true)?);
    }
    stack_cameras(&parts)
}

/// Active transient transport plus the number of (patch, voxel) paths
/// whose arrival time falls outside the configured bin range.
pub fn build_active_counted(
    config: &SceneConfig,
    use_polarizer: bool,
) -> Result<(TransportMatrix, usize)> {
    config.validate()?;
    let active = config
        .active
        .as_ref()
        .ok_or_else(|| Error::invariant("config has no active section"))?;
    let wall = &config.wall;
    let bins = active.bin_count;
    let bin_len = SPEED_OF_LIGHT * active.bin_width;
    let p = wall.patch_center(active.illumination_patch.0, active.illumination_patch.1)?;

    let voxels: Vec<(usize, usize, usize, Vec3)> =
        voxel_order(active.voxels.nu, active.voxels.nv, active.voxels.nw)
            .map(|(i, j, k)| (i, j, k, active.voxels.center(i, j, k)))
            .collect();
    let col_meta: Vec<ColMeta> = voxels
        .iter()
        .map(|&(iu, iv, iw, _)| ColMeta {
            iu,
            iv,
            iw: Some(iw),
        })
        .collect();
    let wall_patches: Vec<(usize, usize, Vec3)> = wall_order(wall.nu, wall.nv)
        .map(|(iu, iv)| wall.patch_center(iu, iv).map(|c| (iu, iv, c)))
        .collect::<Result<_>>()?;

    let per_camera = wall.patch_count() * bins;
    let rows = config.cameras.len() * per_camera;
    let cols = voxels.len();

    let mut row_meta = Vec::with_capacity(rows);
    for (k, _) in config.cameras.iter().enumerate() {
        for &(iu, iv, _) in &wall_patches {
            for b in 0..bins {
                row_meta.push(RowMeta {
                    camera: k,
                    wall_iu: iu,
                    wall_iv: iv,
                    time_bin: Some(b),
                });
            }
        }
    }

    let mut data = DMatrix::zeros(rows, cols);
    let mut truncated = 0usize;
    for (k, cam) in config.cameras.iter().enumerate() {
        let o = &cam.position;
        let pol = if use_polarizer {
            Some(polarizer_for(config, k)?)
        } else {
            None
        };
        for (pi, &(_, _, ref c)) in wall_patches.iter().enumerate() {
            for (j, &(_, _, _, ref s)) in voxels.iter().enumerate() {
                let d_p = (s - p).norm();
                let d_c = (s - c).norm();
                if d_p < 1e-12 || d_c < 1e-12 {
                    return Err(Error::DegenerateGeometry(
                        "voxel coincides with a wall patch".into(),
                    ));
                }
                let path = d_p + d_c;
                let bin = (path / bin_len).floor() as usize;
                if bin >= bins {
                    truncated += 1;
                    continue;
                }
                let omega_il = (s - p) / d_p;
                let omega_ol = (o - p).normalize();
                let omega_ic = (s - c) / d_c;
                let omega_oc = (o - c).normalize();
                let w_l = brdf::brdf_eval(&omega_il, &omega_ol, &config.surface);
                let w_c = brdf::brdf_eval(&omega_ic, &omega_oc, &config.surface);
                if w_l == 0.0 || w_c == 0.0 {
                    continue;
                }
                let lam = match pol {
                    Some(pconf) => leakage_weighted(
                        &omega_ic,
                        &omega_oc,
                        pconf,
                        config.surface.medium(),
                        config.leakage_weighting,
                    )?,
                    None => 1.0,
                };
                let value = w_l * w_c * lam / (d_p * d_p * d_c * d_c);
                let row = k * per_camera + pi * bins + bin;
                data[(row, j)] = value;
            }
        }
    }
    let matrix = TransportMatrix::new(data, row_meta, col_meta)?;
    Ok((matrix, truncated))
}

/// Active transient transport; prints a warning when paths fall outside
/// the bin range.
pub fn build_active(config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix> {
    let (matrix, truncated) = build_active_counted(config, use_polarizer)?;
    if truncated > 0 {
        eprintln!(
            "warning: {truncated} path(s) arrive outside the {} configured time bins",
            config.active.as_ref().map_or(0, |a| a.bin_count)
        );
    }
    Ok(matrix)
}

/// Forward model i = T l + eps with seeded Gaussian noise, clamped at
/// zero (sensor nonnegativity). Deterministic for a fixed seed.
pub fn forward(
    transport: &TransportMatrix,
    scene: &SceneVector,
    noise_sigma: f64,
    seed: u64,
) -> Result<ObservationVector> {
    if scene.values.len() != transport.cols() {
        return Err(Error::DimensionMismatch(format!(
            "scene has {} entries, transport has {} columns",
            scene.values.len(),
            transport.cols()
        )));
    }
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::invariant("noise_sigma must be finite and >= 0"));
    }
    let mut obs = &transport.data * &scene.values;
    if noise_sigma > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_sigma)
            .map_err(|e| Error::invariant(format!("bad noise distribution: {e}")))?;
        for v in obs.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    for v in obs.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    ObservationVector::new(obs)
}
