//! Experiment geometry: wall and scene grids, camera poses, polarizer
//! placement, rectangular occluders, and segment visibility queries.

use crate::error::{Error, Result};
use crate::polarization::{LeakageWeighting, PolarizationComponents, PolarizerConfig};
use crate::brdf::RoughSurface;
use crate::Vec3;

/// Regular grid of wall patches. `u_axis` / `v_axis` are meters per
/// grid step and must be orthogonal.
#[derive(Debug, Clone)]
pub struct WallGrid {
    pub origin: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub nu: usize,
    pub nv: usize,
}

impl WallGrid {
    pub fn new(origin: Vec3, u_axis: Vec3, v_axis: Vec3, nu: usize, nv: usize) -> Result<Self> {
        if nu < 1 || nv < 1 {
            return Err(Error::invariant("wall grid needs nu, nv >= 1"));
        }
        if u_axis.dot(&v_axis).abs() > 1e-9 {
            return Err(Error::invariant(format!(
                "wall grid axes must be orthogonal, u.v = {}",
                u_axis.dot(&v_axis)
            )));
        }
        if u_axis.norm() == 0.0 || v_axis.norm() == 0.0 {
            return Err(Error::invariant("wall grid axes must be nonzero"));
        }
        Ok(WallGrid {
            origin,
            u_axis,
            v_axis,
            nu,
            nv,
        })
    }

    /// Unit normal of the wall plane (u x v normalized).
    pub fn normal(&self) -> Vec3 {
        self.u_axis.cross(&self.v_axis).normalize()
    }

    pub fn patch_count(&self) -> usize {
        self.nu * self.nv
    }

    pub fn patch_center(&self, iu: usize, iv: usize) -> Result<Vec3> {
        patch_center(&self.origin, &self.u_axis, &self.v_axis, self.nu, self.nv, iu, iv)
    }
}

/// Regular grid of hidden-scene point sources, with optional per-point
/// polarized emission components.
#[derive(Debug, Clone)]
pub struct SceneGrid {
    pub origin: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub nu: usize,
    pub nv: usize,
    pub emission: Option<Vec<PolarizationComponents>>,
}

impl SceneGrid {
    pub fn new(
        origin: Vec3,
        u_axis: Vec3,
        v_axis: Vec3,
        nu: usize,
        nv: usize,
        emission: Option<Vec<PolarizationComponents>>,
    ) -> Result<Self> {
        if nu < 1 || nv < 1 {
            return Err(Error::invariant("scene grid needs nu, nv >= 1"));
        }
        if let Some(e) = &emission {
            if e.len() != nu * nv {
                return Err(Error::DimensionMismatch(format!(
                    "emission has {} entries for a {}x{} grid",
                    e.len(),
                    nu,
                    nv
                )));
            }
        }
        Ok(SceneGrid {
            origin,
            u_axis,
            v_axis,
            nu,
            nv,
            emission,
        })
    }

    pub fn point_count(&self) -> usize {
        self.nu * self.nv
    }

    pub fn patch_center(&self, iu: usize, iv: usize) -> Result<Vec3> {
        patch_center(&self.origin, &self.u_axis, &self.v_axis, self.nu, self.nv, iu, iv)
    }
}

fn patch_center(
    origin: &Vec3,
    u_axis: &Vec3,
    v_axis: &Vec3,
    nu: usize,
    nv: usize,
    iu: usize,
    iv: usize,
) -> Result<Vec3> {
    if iu >= nu || iv >= nv {
        return Err(Error::invariant(format!(
            "grid index ({iu}, {iv}) out of range for a {nu}x{nv} grid"
        )));
    }
    Ok(origin + u_axis * (iu as f64 + 0.5) + v_axis * (iv as f64 + 0.5))
}

/// Camera position with an optional polarizer mounted in front.
#[derive(Debug, Clone)]
pub struct CameraPose {
    pub position: Vec3,
    pub polarizer: Option<PolarizerConfig>,
}

/// Rectangular (parallelogram) occluder spanned by two edges.
#[derive(Debug, Clone)]
pub struct OccluderRect {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
}

impl OccluderRect {
    pub fn new(corner: Vec3, edge_u: Vec3, edge_v: Vec3) -> Result<Self> {
        if edge_u.cross(&edge_v).norm() < 1e-12 {
            return Err(Error::invariant(
                "occluder edges must be linearly independent",
            ));
        }
        Ok(OccluderRect {
            corner,
            edge_u,
            edge_v,
        })
    }
}

/// Active (transient) capture parameters: time binning, the wall patch
/// lit by the pulsed source, and the NLOS voxel box.
#[derive(Debug, Clone)]
pub struct ActiveParams {
    /// Time bin width in seconds.
    pub bin_width: f64,
    pub bin_count: usize,
    /// (iu, iv) index of the illuminated wall patch.
    pub illumination_patch: (usize, usize),
    pub voxels: VoxelGrid,
}

/// Axis-aligned-in-its-own-frame voxel box. Extents are the full box
/// edges in meters; cell size is extent / count, so changing counts
/// changes resolution at fixed physical size.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub origin: Vec3,
    pub extent_u: Vec3,
    pub extent_v: Vec3,
    pub extent_w: Vec3,
    pub nu: usize,
    pub nv: usize,
    pub nw: usize,
}

impl VoxelGrid {
    pub fn new(
        origin: Vec3,
        extent_u: Vec3,
        extent_v: Vec3,
        extent_w: Vec3,
        nu: usize,
        nv: usize,
        nw: usize,
    ) -> Result<Self> {
        if nu < 1 || nv < 1 || nw < 1 {
            return Err(Error::invariant("voxel grid needs nu, nv, nw >= 1"));
        }
        Ok(VoxelGrid {
            origin,
            extent_u,
            extent_v,
            extent_w,
            nu,
            nv,
            nw,
        })
    }

    pub fn voxel_count(&self) -> usize {
        self.nu * self.nv * self.nw
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin
            + self.extent_u * ((i as f64 + 0.5) / self.nu as f64)
            + self.extent_v * ((j as f64 + 0.5) / self.nv as f64)
            + self.extent_w * ((k as f64 + 0.5) / self.nw as f64)
    }

    /// Same box re-binned to `edge` cells per axis.
    pub fn with_resolution(&self, edge: usize) -> Result<Self> {
        VoxelGrid::new(
            self.origin,
            self.extent_u,
            self.extent_v,
            self.extent_w,
            edge,
            edge,
            edge,
        )
    }
}

/// Full experiment description consumed by the transport builders.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub wall: WallGrid,
    pub scene: SceneGrid,
    pub cameras: Vec<CameraPose>,
    pub surface: RoughSurface,
    pub occluders: Vec<OccluderRect>,
    pub noise_sigma: f64,
    pub active: Option<ActiveParams>,
    /// Apply cos-foreshortening / squared-distance falloff in passive
    /// transport entries. Disable to use the bare BRDF-times-leakage
    /// form.
    pub falloff_enabled: bool,
    pub leakage_weighting: LeakageWeighting,
}

impl SceneConfig {
    /// Structural validation beyond what member constructors enforce.
    pub fn validate(&self) -> Result<()> {
        if self.cameras.is_empty() {
            return Err(Error::invariant("at least one camera is required"));
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(Error::invariant("noise_sigma must be finite and >= 0"));
        }
        let n = self.wall.normal();
        for (i, cam) in self.cameras.iter().enumerate() {
            let off_plane = (cam.position - self.wall.origin).dot(&n).abs();
            if off_plane < 1e-9 {
                return Err(Error::invariant(format!(
                    "camera {i} lies in the wall plane"
                )));
            }
        }
        if let Some(active) = &self.active {
            if active.bin_width <= 0.0 || !active.bin_width.is_finite() {
                return Err(Error::invariant("active bin_width must be positive"));
            }
            if active.bin_count < 1 {
                return Err(Error::invariant("active bin_count must be >= 1"));
            }
            let (iu, iv) = active.illumination_patch;
            if iu >= self.wall.nu || iv >= self.wall.nv {
                return Err(Error::invariant(format!(
                    "illumination patch ({iu}, {iv}) outside the wall grid"
                )));
            }
        }
        Ok(())
    }
}

/// Incident and viewing unit vectors at the wall patch `c` for scene
/// point `s` and camera `o`.
pub fn ray_directions(s: &Vec3, c: &Vec3, o: &Vec3) -> Result<(Vec3, Vec3)> {
    let si = s - c;
    let oo = o - c;
    let ns = si.norm();
    let no = oo.norm();
    if ns < 1e-12 || no < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "scene point or camera coincides with the wall patch".into(),
        ));
    }
    Ok((si / ns, oo / no))
}

/// 1 if the open segment (s, c) misses every occluder, 0 if blocked.
///
/// Intersections exactly on a rectangle edge count as blocked (the
/// rectangle is closed); intersections at the segment endpoints do not
/// block (the segment is open).
pub fn visibility(s: &Vec3, c: &Vec3, occluders: &[OccluderRect]) -> u8 {
    for occ in occluders {
        if segment_hits_rect(s, c, occ) {
            return 0;
        }
    }
    1
}

fn segment_hits_rect(s: &Vec3, c: &Vec3, rect: &OccluderRect) -> bool {
    // Solve s + t (c - s) = corner + a eu + b ev.
    let d = c - s;
    let m = nalgebra::Matrix3::from_columns(&[d, -rect.edge_u, -rect.edge_v]);
    let rhs = rect.corner - s;
    match m.lu().solve(&rhs) {
        Some(sol) => {
            let (t, a, b) = (sol[0], sol[1], sol[2]);
            t > 0.0 && t < 1.0 && (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
        }
        // Segment parallel to the occluder plane: no transversal hit.
        None => false,
    }
}
