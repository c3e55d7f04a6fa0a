//! `polnlos` command-line interface.
//!
//! Every subcommand that writes files also writes a
//! `<output>.manifest.json` recording the config, parameters, seed, and
//! tool version used, so results can be reproduced from artifacts
//! alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use polnlos::conditioning::{
    condition_number, occluded_configurations, roughness_sweep, standalone_configurations,
};
use polnlos::error::Result;
use polnlos::io::{
    parse_config, read_matrix, read_observation, read_pgm, write_matrix, write_observation,
    write_pgm, write_sweep_csv, RunManifest,
};
use polnlos::metrics::{psnr, ssim, zncc, ImageBuffer};
use polnlos::reconstruct::AdmmParams;
use polnlos::registry::{reconstructor, transport_model};
use polnlos::transport::{forward, SceneVector};

#[derive(Parser)]
#[command(
    name = "polnlos",
    version,
    about = "Polarization-enhanced non-line-of-sight imaging simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolarizerState {
    On,
    Off,
}

impl PolarizerState {
    fn enabled(self) -> bool {
        self == PolarizerState::On
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a wall observation from a scene config.
    Simulate {
        /// JSON scene configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output observation (PNLT, single column).
        #[arg(long)]
        out: PathBuf,
        /// Capture through the camera polarizers or without them.
        #[arg(long, value_enum)]
        polarizer: PolarizerState,
        /// Transport model from the registry.
        #[arg(long, default_value = "passive")]
        model: String,
        /// Ground-truth scene image (PGM); defaults to a uniform scene.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Noise seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a light-transport matrix and write it to disk.
    Transport {
        #[arg(long)]
        config: PathBuf,
        /// Output matrix (PNLT).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        polarizer: PolarizerState,
        /// Transport model from the registry.
        #[arg(long, default_value = "passive")]
        model: String,
    },
    /// Report the condition number of a stored transport matrix.
    Cond {
        /// Transport matrix (PNLT).
        #[arg(long)]
        transport: PathBuf,
    },
    /// Reconstruct a hidden scene from a transport matrix and
    /// observation.
    Reconstruct {
        #[arg(long)]
        transport: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        /// Output reconstruction (16-bit PGM).
        #[arg(long)]
        out: PathBuf,
        /// TV regularization weight.
        #[arg(long, default_value_t = 1e-2)]
        tv: f64,
        /// Reconstruction method from the registry.
        #[arg(long, default_value = "admm")]
        method: String,
    },
    /// Sweep a scene parameter and tabulate condition numbers.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output table (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Parameter to sweep (only `roughness` is supported).
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Apply the config's occluders to every configuration.
        #[arg(long, default_value_t = false)]
        occluded: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build an active (transient) transport matrix.
    ActiveSim {
        #[arg(long)]
        config: PathBuf,
        /// Output matrix (PNLT).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        polarizer: PolarizerState,
    },
    /// Sweep roughness and voxel resolution for the active
    /// configuration.
    ActiveSweep {
        #[arg(long)]
        config: PathBuf,
        /// Output table (CSV).
        #[arg(long)]
        out: PathBuf,
        /// Parameter to sweep (only `roughness` is supported).
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Comma-separated voxel grid edge sizes.
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        resolutions: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare two images (PSNR, ZNCC, SSIM).
    Metrics {
        /// Reference image (PGM).
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Test image (PGM).
        #[arg(long)]
        test: PathBuf,
    },
}

fn load_config(path: &Path) -> Result<polnlos::geometry::SceneConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn grid_points(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(polnlos::Error::invariant("steps must be >= 1"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn check_sweep_param(param: &str) -> Result<()> {
    if param != "roughness" {
        return Err(polnlos::Error::UnknownStrategy {
            kind: "sweep parameter",
            name: param.to_string(),
            available: "roughness".to_string(),
        });
    }
    Ok(())
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn manifest(
    subcommand: &str,
    config: Option<&Path>,
    out: &Path,
    seed: u64,
    parameters: BTreeMap<String, String>,
) -> RunManifest {
    let mut m = RunManifest::new(subcommand, seed);
    m.config = config.map(path_str);
    m.outputs = vec![path_str(out)];
    m.parameters = parameters;
    m
}

/// Convert a scene-shaped image to the scene vector ordering
/// (row-major, v outer / u inner -- the same layout PGM uses).
fn scene_from_image(image: &ImageBuffer, nu: usize, nv: usize) -> Result<SceneVector> {
    if image.width != nu || image.height != nv {
        return Err(polnlos::Error::DimensionMismatch(format!(
            "scene image is {}x{}, config scene grid is {}x{}",
            image.width, image.height, nu, nv
        )));
    }
    SceneVector::new(DVector::from_vec(image.pixels.clone()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            polarizer,
            model,
            scene,
            seed,
        } => {
            let cfg = load_config(&config)?;
            let transport = transport_model(&model)?.build(&cfg, polarizer.enabled())?;
            let truth = match &scene {
                Some(path) => scene_from_image(&read_pgm(path)?, cfg.scene.nu, cfg.scene.nv)?,
                None => SceneVector::new(DVector::from_element(transport.cols(), 1.0))?,
            };
            let obs = forward(&transport, &truth, cfg.noise_sigma, seed)?;
            write_observation(&obs, &transport.row_meta, &out)?;
            let mut params = BTreeMap::new();
            params.insert("model".into(), model);
            params.insert(
                "polarizer".into(),
                if polarizer.enabled() { "on" } else { "off" }.into(),
            );
            if let Some(path) = &scene {
                params.insert("scene".into(), path_str(path));
            }
            manifest("simulate", Some(&config), &out, seed, params).write_alongside()?;
            println!(
                "wrote {} observation entries to {}",
                obs.values.len(),
                out.display()
            );
        }
        Command::Transport {
            config,
            out,
            polarizer,
            model,
        } => {
            let cfg = load_config(&config)?;
            let transport = transport_model(&model)?.build(&cfg, polarizer.enabled())?;
            write_matrix(&transport, &out)?;
            let mut params = BTreeMap::new();
            params.insert("model".into(), model);
            params.insert(
                "polarizer".into(),
                if polarizer.enabled() { "on" } else { "off" }.into(),
            );
            manifest("transport", Some(&config), &out, 0, params).write_alongside()?;
            println!(
                "wrote {}x{} transport matrix to {}",
                transport.rows(),
                transport.cols(),
                out.display()
            );
        }
        Command::Cond { transport } => {
            let matrix = read_matrix(&transport)?;
            let kappa = condition_number(&matrix)?;
            if kappa.is_infinite() {
                println!("condition_number inf");
            } else {
                println!("condition_number {kappa:.16e}");
            }
        }
        Command::Reconstruct {
            transport,
            obs,
            out,
            tv,
            method,
        } => {
            let matrix = read_matrix(&transport)?;
            let observation = read_observation(&obs)?;
            let params = AdmmParams {
                reg_weight: tv,
                ..AdmmParams::default()
            };
            let result = reconstructor(&method)?.solve(&matrix, &observation, &params)?;
            let (nu, nv) = matrix.scene_shape();
            let image = ImageBuffer::new(
                nu,
                nv,
                result.estimate.values.iter().cloned().collect(),
            )?;
            write_pgm(&image, &out)?;
            let mut p = BTreeMap::new();
            p.insert("method".into(), method);
            p.insert("tv".into(), format!("{tv:e}"));
            p.insert("transport".into(), path_str(&transport));
            p.insert("obs".into(), path_str(&obs));
            p.insert("iterations".into(), result.iterations.to_string());
            p.insert("objective".into(), format!("{:.16e}", result.objective));
            p.insert("converged".into(), result.converged.to_string());
            manifest("reconstruct", None, &out, 0, p).write_alongside()?;
            println!(
                "reconstructed {}x{} scene in {} iterations (objective {:.6e}) -> {}",
                nu,
                nv,
                result.iterations,
                result.objective,
                out.display()
            );
        }
        Command::Sweep {
            config,
            out,
            param,
            from,
            to,
            steps,
            occluded,
            seed,
        } => {
            check_sweep_param(&param)?;
            let cfg = load_config(&config)?;
            let gammas = grid_points(from, to, steps)?;
            let configurations = if occluded {
                occluded_configurations()
            } else {
                standalone_configurations()
            };
            let result = roughness_sweep(&cfg, &gammas, &configurations)?;
            write_sweep_csv(&result, &out, seed)?;
            let mut p = BTreeMap::new();
            p.insert("param".into(), param);
            p.insert("from".into(), format!("{from:e}"));
            p.insert("to".into(), format!("{to:e}"));
            p.insert("steps".into(), steps.to_string());
            p.insert("occluded".into(), occluded.to_string());
            manifest("sweep", Some(&config), &out, seed, p).write_alongside()?;
            println!("wrote {} sweep points to {}", steps, out.display());
        }
        Command::ActiveSim {
            config,
            out,
            polarizer,
        } => {
            let cfg = load_config(&config)?;
            let transport = transport_model("active")?.build(&cfg, polarizer.enabled())?;
            write_matrix(&transport, &out)?;
            let mut params = BTreeMap::new();
            params.insert(
                "polarizer".into(),
                if polarizer.enabled() { "on" } else { "off" }.into(),
            );
            manifest("active-sim", Some(&config), &out, 0, params).write_alongside()?;
            println!(
                "wrote {}x{} active transport matrix to {}",
                transport.rows(),
                transport.cols(),
                out.display()
            );
        }
        Command::ActiveSweep {
            config,
            out,
            param,
            from,
            to,
            steps,
            resolutions,
            seed,
        } => {
            check_sweep_param(&param)?;
            let cfg = load_config(&config)?;
            let gammas = grid_points(from, to, steps)?;
            let result = polnlos::conditioning::active_sweep(&cfg, &gammas, &resolutions)?;
            write_sweep_csv(&result, &out, seed)?;
            let mut p = BTreeMap::new();
            p.insert("param".into(), param);
            p.insert("from".into(), format!("{from:e}"));
            p.insert("to".into(), format!("{to:e}"));
            p.insert("steps".into(), steps.to_string());
            p.insert(
                "resolutions".into(),
                resolutions
                    .iter()
                    .map(|r| r.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            manifest("active-sweep", Some(&config), &out, seed, p).write_alongside()?;
            println!(
                "wrote {} sweep points to {}",
                result.values.len(),
                out.display()
            );
        }
        Command::Metrics { reference, test } => {
            let a = read_pgm(&reference)?;
            let b = read_pgm(&test)?;
            let p = psnr(&a, &b)?;
            if p.is_infinite() {
                println!("psnr inf");
            } else {
                println!("psnr {p:.6}");
            }
            println!("zncc {:.6}", zncc(&a, &b)?);
            match ssim(&a, &b) {
                Ok(s) => println!("ssim {s:.6}"),
                // SSIM needs an 11x11 window; smaller images still get
                // the other two metrics.
                Err(polnlos::Error::DimensionMismatch(msg)) => {
                    println!("ssim undefined ({msg})")
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    polnlos::init_threads();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
