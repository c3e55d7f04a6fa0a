//! JSON scene-config schema: parsing with field-path diagnostics and
//! serialization back to the same schema.
//!
//! Angles are accepted in degrees (`_deg` keys) or radians (`_rad`);
//! vectors that must be unit-length (polarizer normals and axes) are
//! normalized on ingest, and polarizer axes given as `axis_world` are
//! projected into the polarizer plane.

use serde::{Deserialize, Serialize};

use crate::brdf::RoughSurface;
use crate::error::{Error, Result};
use crate::geometry::{
    ActiveParams, CameraPose, OccluderRect, SceneConfig, SceneGrid, VoxelGrid, WallGrid,
};
use crate::polarization::{
    FresnelMedium, LeakageWeighting, PolarizationComponents, PolarizerConfig,
};
use crate::Vec3;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    wall: RawGrid,
    scene: RawScene,
    cameras: Vec<RawCamera>,
    surface: RawSurface,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    occluders: Vec<RawOccluder>,
    #[serde(default)]
    noise_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    active: Option<RawActive>,
    #[serde(default = "default_true")]
    falloff_enabled: bool,
    #[serde(default)]
    leakage_weighting: LeakageWeighting,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    origin: [f64; 3],
    u_axis: [f64; 3],
    v_axis: [f64; 3],
    nu: usize,
    nv: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    origin: [f64; 3],
    u_axis: [f64; 3],
    v_axis: [f64; 3],
    nu: usize,
    nv: usize,
    /// Optional per-point (I_p, I_s) emission components, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    emission: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCamera {
    position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polarizer: Option<RawPolarizer>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolarizer {
    normal: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_rad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis_world: Option<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    roughness: f64,
    refractive_index: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOccluder {
    corner: [f64; 3],
    edge_u: [f64; 3],
    edge_v: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActive {
    bin_width_ps: f64,
    bin_count: usize,
    illumination_patch: [usize; 2],
    voxels: RawVoxels,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVoxels {
    origin: [f64; 3],
    extent_u: [f64; 3],
    extent_v: [f64; 3],
    extent_w: [f64; 3],
    nu: usize,
    nv: usize,
    nw: usize,
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn at_path<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::config(path, e.to_string()))
}

fn normalized(v: Vec3, path: &str) -> Result<Vec3> {
    let n = v.norm();
    if n < 1e-12 || !n.is_finite() {
        return Err(Error::config(path, "vector must be nonzero and finite"));
    }
    Ok(v / n)
}

fn convert_polarizer(raw: &RawPolarizer, path: &str) -> Result<PolarizerConfig> {
    let normal = normalized(vec3(raw.normal), &format!("{path}.normal"))?;
    let given = [
        raw.axis_deg.is_some(),
        raw.axis_rad.is_some(),
        raw.axis_world.is_some(),
    ]
    .iter()
    .filter(|b| **b)
    .count();
    if given != 1 {
        return Err(Error::config(
            path,
            "exactly one of axis_deg, axis_rad, axis_world is required",
        ));
    }
    if let Some(deg) = raw.axis_deg {
        return at_path(path, PolarizerConfig::from_angle(normal, deg.to_radians()));
    }
    if let Some(rad) = raw.axis_rad {
        return at_path(path, PolarizerConfig::from_angle(normal, rad));
    }
    let world = vec3(raw.axis_world.unwrap());
    // Project into the polarizer plane, then normalize.
    let in_plane = world - normal * world.dot(&normal);
    let axis = normalized(in_plane, &format!("{path}.axis_world"))?;
    at_path(path, PolarizerConfig::from_axis(normal, axis))
}

fn convert(raw: RawConfig) -> Result<SceneConfig> {
    let wall = at_path(
        "wall",
        WallGrid::new(
            vec3(raw.wall.origin),
            vec3(raw.wall.u_axis),
            vec3(raw.wall.v_axis),
            raw.wall.nu,
            raw.wall.nv,
        ),
    )?;
    let emission = match &raw.scene.emission {
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for (i, e) in list.iter().enumerate() {
                out.push(at_path(
                    &format!("scene.emission[{i}]"),
                    PolarizationComponents::new(e[0], e[1]),
                )?);
            }
            Some(out)
        }
        None => None,
    };
    let scene = at_path(
        "scene",
        SceneGrid::new(
            vec3(raw.scene.origin),
            vec3(raw.scene.u_axis),
            vec3(raw.scene.v_axis),
            raw.scene.nu,
            raw.scene.nv,
            emission,
        ),
    )?;
    let medium = at_path(
        "surface.refractive_index",
        FresnelMedium::new(raw.surface.refractive_index),
    )?;
    let surface = at_path(
        "surface.roughness",
        RoughSurface::new(raw.surface.roughness, medium, wall.normal()),
    )?;
    let mut cameras = Vec::with_capacity(raw.cameras.len());
    for (i, cam) in raw.cameras.iter().enumerate() {
        let polarizer = match &cam.polarizer {
            Some(p) => Some(convert_polarizer(p, &format!("cameras[{i}].polarizer"))?),
            None => None,
        };
        cameras.push(CameraPose {
            position: vec3(cam.position),
            polarizer,
        });
    }
    let mut occluders = Vec::with_capacity(raw.occluders.len());
    for (i, occ) in raw.occluders.iter().enumerate() {
        occluders.push(at_path(
            &format!("occluders[{i}]"),
            OccluderRect::new(vec3(occ.corner), vec3(occ.edge_u), vec3(occ.edge_v)),
        )?);
    }
    let active = match &raw.active {
        Some(a) => {
            let voxels = at_path(
                "active.voxels",
                VoxelGrid::new(
                    vec3(a.voxels.origin),
                    vec3(a.voxels.extent_u),
                    vec3(a.voxels.extent_v),
                    vec3(a.voxels.extent_w),
                    a.voxels.nu,
                    a.voxels.nv,
                    a.voxels.nw,
                ),
            )?;
            Some(ActiveParams {
                bin_width: a.bin_width_ps * 1e-12,
                bin_count: a.bin_count,
                illumination_patch: (a.illumination_patch[0], a.illumination_patch[1]),
                voxels,
            })
        }
        None => None,
    };
    let config = SceneConfig {
        wall,
        scene,
        cameras,
        surface,
        occluders,
        noise_sigma: raw.noise_sigma,
        active,
        falloff_enabled: raw.falloff_enabled,
        leakage_weighting: raw.leakage_weighting,
    };
    at_path("<config>", config.validate())?;
    Ok(config)
}

/// Parse and fully validate a JSON scene configuration.
pub fn parse_config(text: &str) -> Result<SceneConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    convert(raw)
}

fn deconvert(config: &SceneConfig) -> RawConfig {
    RawConfig {
        wall: RawGrid {
            origin: arr(&config.wall.origin),
            u_axis: arr(&config.wall.u_axis),
            v_axis: arr(&config.wall.v_axis),
            nu: config.wall.nu,
            nv: config.wall.nv,
        },
        scene: RawScene {
            origin: arr(&config.scene.origin),
            u_axis: arr(&config.scene.u_axis),
            v_axis: arr(&config.scene.v_axis),
            nu: config.scene.nu,
            nv: config.scene.nv,
            emission: config
                .scene
                .emission
                .as_ref()
                .map(|e| e.iter().map(|c| [c.i_p, c.i_s]).collect()),
        },
        cameras: config
            .cameras
            .iter()
            .map(|cam| RawCamera {
                position: arr(&cam.position),
                polarizer: cam.polarizer.as_ref().map(|p| RawPolarizer {
                    normal: arr(p.normal()),
                    axis_deg: None,
                    axis_rad: None,
                    axis_world: Some(arr(p.axis_world())),
                }),
            })
            .collect(),
        surface: RawSurface {
            roughness: config.surface.roughness(),
            refractive_index: config.surface.medium().refractive_index(),
        },
        occluders: config
            .occluders
            .iter()
            .map(|o| RawOccluder {
                corner: arr(&o.corner),
                edge_u: arr(&o.edge_u),
                edge_v: arr(&o.edge_v),
            })
            .collect(),
        noise_sigma: config.noise_sigma,
        active: config.active.as_ref().map(|a| RawActive {
            bin_width_ps: a.bin_width * 1e12,
            bin_count: a.bin_count,
            illumination_patch: [a.illumination_patch.0, a.illumination_patch.1],
            voxels: RawVoxels {
                origin: arr(&a.voxels.origin),
                extent_u: arr(&a.voxels.extent_u),
                extent_v: arr(&a.voxels.extent_v),
                extent_w: arr(&a.voxels.extent_w),
                nu: a.voxels.nu,
                nv: a.voxels.nv,
                nw: a.voxels.nw,
            },
        }),
        falloff_enabled: config.falloff_enabled,
        leakage_weighting: config.leakage_weighting,
    }
}

/// Serialize a config back to the JSON schema accepted by
/// [`parse_config`].
pub fn serialize_config(config: &SceneConfig) -> Result<String> {
    let mut body = serde_json::to_string_pretty(&deconvert(config))?;
    body.push('\n');
    Ok(body)
}
