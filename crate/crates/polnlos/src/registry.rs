//! Runtime-selectable strategy registries: transport models and
//! reconstruction methods, each behind a common trait and looked up by
//! name from the CLI or config.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::SceneConfig;
use crate::reconstruct::{admm_tv_box, pinv_solve, AdmmParams, ReconResult};
use crate::transport::{
    build_active_counted, build_occluded, build_passive, stack_cameras, ObservationVector,
    TransportMatrix,
};

/// A way of assembling a light-transport matrix from a scene config.
pub trait TransportModel: Sync {
    fn name(&self) -> &'static str;
    fn build(&self, config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix>;
}

struct PassiveModel;
struct OccludedModel;
struct ActiveModel;

impl TransportModel for PassiveModel {
    fn name(&self) -> &'static str {
        "passive"
    }
    fn build(&self, config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix> {
        build_passive(config, use_polarizer)
    }
}

impl TransportModel for OccludedModel {
    fn name(&self) -> &'static str {
        "occluded"
    }
    fn build(&self, config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix> {
        build_occluded(config, use_polarizer)
    }
}

impl TransportModel for ActiveModel {
    fn name(&self) -> &'static str {
        "active"
    }
    fn build(&self, config: &SceneConfig, use_polarizer: bool) -> Result<TransportMatrix> {
        build_active_counted(config, use_polarizer).map(|(t, _)| t)
    }
}

static TRANSPORT_MODELS: &[&dyn TransportModel] = &[&PassiveModel, &OccludedModel, &ActiveModel];

pub fn transport_models() -> &'static [&'static dyn TransportModel] {
    TRANSPORT_MODELS
}

pub fn transport_model(name: &str) -> Result<&'static dyn TransportModel> {
    TRANSPORT_MODELS
        .iter()
        .find(|m| m.name() == name)
        .copied()
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "transport model",
            name: name.to_string(),
            available: TRANSPORT_MODELS
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Camera/polarizer arrangement applied on top of a transport model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    /// First camera, no polarizer.
    Unpolarized,
    /// First camera with its polarizer.
    PolarizedSingle,
    /// All cameras with polarizers, rows stacked.
    PolarizedMulti,
    /// First camera, polarizer rotated over [`ROTATION_ANGLES`],
    /// images stacked.
    Rotating,
}

/// Default rotating-polarizer capture angles: 0, 45, 90, 135 degrees.
pub const ROTATION_ANGLES: [f64; 4] = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];

fn first_camera_only(config: &SceneConfig) -> SceneConfig {
    let mut single = config.clone();
    single.cameras.truncate(1);
    single
}

impl Variant {
    pub fn build(
        &self,
        model: &dyn TransportModel,
        config: &SceneConfig,
    ) -> Result<TransportMatrix> {
        match self {
            Variant::Unpolarized => model.build(&first_camera_only(config), false),
            Variant::PolarizedSingle => model.build(&first_camera_only(config), true),
            Variant::PolarizedMulti => model.build(config, true),
            Variant::Rotating => {
                let single = first_camera_only(config);
                let mut parts = Vec::with_capacity(ROTATION_ANGLES.len());
                for delta in ROTATION_ANGLES {
                    let mut rotated = single.clone();
                    for cam in &mut rotated.cameras {
                        if let Some(p) = &cam.polarizer {
                            cam.polarizer = Some(p.rotated(delta)?);
                        }
                    }
                    parts.push(model.build(&rotated, true)?);
                }
                stack_cameras(&parts)
            }
        }
    }
}

/// A reconstruction method mapping observations back to a scene
/// estimate in the [0, 1] box.
pub trait Reconstructor: Sync {
    fn name(&self) -> &'static str;
    fn solve(
        &self,
        transport: &TransportMatrix,
        obs: &ObservationVector,
        params: &AdmmParams,
    ) -> Result<ReconResult>;
}

struct PinvReconstructor;
struct AdmmReconstructor;

impl Reconstructor for PinvReconstructor {
    fn name(&self) -> &'static str {
        "pinv"
    }
    fn solve(
        &self,
        transport: &TransportMatrix,
        obs: &ObservationVector,
        _params: &AdmmParams,
    ) -> Result<ReconResult> {
        let sol = pinv_solve(transport, obs)?;
        ReconResult::from_pinv(transport, obs, sol)
    }
}

impl Reconstructor for AdmmReconstructor {
    fn name(&self) -> &'static str {
        "admm"
    }
    fn solve(
        &self,
        transport: &TransportMatrix,
        obs: &ObservationVector,
        params: &AdmmParams,
    ) -> Result<ReconResult> {
        admm_tv_box(transport, obs, params)
    }
}

static RECONSTRUCTORS: &[&dyn Reconstructor] = &[&PinvReconstructor, &AdmmReconstructor];

pub fn reconstructors() -> &'static [&'static dyn Reconstructor] {
    RECONSTRUCTORS
}

pub fn reconstructor(name: &str) -> Result<&'static dyn Reconstructor> {
    RECONSTRUCTORS
        .iter()
        .find(|m| m.name() == name)
        .copied()
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "reconstructor",
            name: name.to_string(),
            available: RECONSTRUCTORS
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join(", "),
        })
}
