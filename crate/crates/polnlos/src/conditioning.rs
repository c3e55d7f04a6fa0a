//! Condition-number computation and the parameter sweeps comparing
//! polarized against unpolarized transport.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::SceneConfig;
use crate::registry::{transport_model, Variant};
use crate::transport::TransportMatrix;

/// Relative singular-value floor below which the matrix is reported
/// rank-deficient (condition number infinite).
const RANK_TOL: f64 = 1e-14;

/// sigma_max / sigma_min of the full SVD; `f64::INFINITY` flags
/// rank deficiency.
pub fn condition_number(transport: &TransportMatrix) -> Result<f64> {
    if transport.rows() == 0 || transport.cols() == 0 {
        return Err(Error::invariant("empty matrix has no condition number"));
    }
    let svd = transport.data.clone().svd(false, false);
    let sv = &svd.singular_values;
    let s_max = sv.iter().cloned().fold(0.0f64, f64::max);
    let s_min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if s_max == 0.0 || s_min < s_max * RANK_TOL {
        return Ok(f64::INFINITY);
    }
    Ok((s_max / s_min).max(1.0))
}

/// One sweep's worth of condition numbers, keyed by configuration name,
/// plus improvement ratios against the matching unpolarized baseline.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub parameter: String,
    pub values: Vec<f64>,
    pub condition_numbers: BTreeMap<String, Vec<f64>>,
    pub ratios: BTreeMap<String, Vec<f64>>,
}

/// Transport configurations a sweep can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SweepConfiguration {
    pub variant: Variant,
    pub occluded: bool,
}

impl SweepConfiguration {
    pub fn name(&self) -> String {
        let base = match self.variant {
            Variant::Unpolarized => "unpolarized",
            Variant::PolarizedSingle => "polarized-single",
            Variant::PolarizedMulti => "polarized-multi",
            Variant::Rotating => "rotating",
        };
        if self.occluded {
            format!("occluded-{base}")
        } else {
            base.to_string()
        }
    }

    /// The unpolarized configuration this one is compared against.
    fn baseline(&self) -> SweepConfiguration {
        SweepConfiguration {
            variant: Variant::Unpolarized,
            occluded: self.occluded,
        }
    }
}

/// The four standalone passive configurations.
pub fn standalone_configurations() -> Vec<SweepConfiguration> {
    [
        Variant::Unpolarized,
        Variant::Rotating,
        Variant::PolarizedSingle,
        Variant::PolarizedMulti,
    ]
    .into_iter()
    .map(|variant| SweepConfiguration {
        variant,
        occluded: false,
    })
    .collect()
}

/// The same four with the config's occluders applied.
pub fn occluded_configurations() -> Vec<SweepConfiguration> {
    standalone_configurations()
        .into_iter()
        .map(|mut c| {
            c.occluded = true;
            c
        })
        .collect()
}

/// Build the transport matrix for one sweep configuration.
pub fn build_configuration(
    config: &SceneConfig,
    sweep_config: &SweepConfiguration,
) -> Result<TransportMatrix> {
    let model = transport_model(if sweep_config.occluded {
        "occluded"
    } else {
        "passive"
    })?;
    sweep_config.variant.build(model, config)
}

/// Condition numbers over a roughness grid for the requested
/// configurations. Unpolarized baselines are always computed so every
/// polarized column gets a ratio.
pub fn roughness_sweep(
    base: &SceneConfig,
    gammas: &[f64],
    configurations: &[SweepConfiguration],
) -> Result<SweepResult> {
    if gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(Error::invariant("roughness values must lie in [0, 1]"));
    }
    let mut wanted: Vec<SweepConfiguration> = configurations.to_vec();
    for c in configurations {
        if !wanted.contains(&c.baseline()) {
            wanted.push(c.baseline());
        }
    }

    let mut kappas: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &gamma in gammas {
        let mut config = base.clone();
        config.surface = config.surface.with_roughness(gamma)?;
        for sc in &wanted {
            let t = build_configuration(&config, sc)?;
            kappas.entry(sc.name()).or_default().push(condition_number(&t)?);
        }
    }

    let mut ratios = BTreeMap::new();
    for sc in configurations {
        if sc.variant == Variant::Unpolarized {
            continue;
        }
        let own = &kappas[&sc.name()];
        let baseline = &kappas[&sc.baseline().name()];
        let r: Vec<f64> = own.iter().zip(baseline).map(|(a, b)| a / b).collect();
        ratios.insert(sc.name(), r);
    }

    // Baselines stay in the report even when not requested: the ratio
    // columns are meaningless without them.
    Ok(SweepResult {
        parameter: "roughness".into(),
        values: gammas.to_vec(),
        condition_numbers: kappas,
        ratios,
    })
}

/// Active-transport condition numbers over a (roughness, voxel
/// resolution) grid. Cells are flattened roughness-major; the values
/// column stores the roughness and the resolution is reported in its
/// own column of the CSV (see `SweepResult::parameter`).
pub fn active_sweep(
    base: &SceneConfig,
    gammas: &[f64],
    resolutions: &[usize],
) -> Result<SweepResult> {
    let active = base
        .active
        .as_ref()
        .ok_or_else(|| Error::invariant("active sweep needs an active config section"))?;
    if gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(Error::invariant("roughness values must lie in [0, 1]"));
    }
    let model = transport_model("active")?;
    let mut values = Vec::new();
    let mut res_col = Vec::new();
    let mut unpol = Vec::new();
    let mut pol = Vec::new();
    for &gamma in gammas {
        for &res in resolutions {
            let mut config = base.clone();
            config.surface = config.surface.with_roughness(gamma)?;
            config.active = Some(crate::geometry::ActiveParams {
                voxels: active.voxels.with_resolution(res)?,
                ..active.clone()
            });
            let t_u = model.build(&config, false)?;
            let t_p = model.build(&config, true)?;
            values.push(gamma);
            res_col.push(res as f64);
            unpol.push(condition_number(&t_u)?);
            pol.push(condition_number(&t_p)?);
        }
    }
    let ratio: Vec<f64> = pol.iter().zip(&unpol).map(|(p, u)| p / u).collect();
    let mut condition_numbers = BTreeMap::new();
    condition_numbers.insert("resolution".to_string(), res_col);
    condition_numbers.insert("active-unpolarized".to_string(), unpol);
    condition_numbers.insert("active-polarized".to_string(), pol);
    let mut ratios = BTreeMap::new();
    ratios.insert("active-polarized".to_string(), ratio);
    Ok(SweepResult {
        parameter: "roughness".into(),
        values,
        condition_numbers,
        ratios,
    })
}
