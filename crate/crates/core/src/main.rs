use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use regrasp::estimate::{EstimateOptions, RotationExtraction};
use regrasp::experiment::{run_experiment, write_report, TrialConfig};
use regrasp::geometry::io::MeshSource;
use regrasp::grasp::{GripperModel, PlannerConfig};
use regrasp::pipeline::{
    estimate, simulate, ConformedFile, GraspsFile, PlanFile, PoseFile, SimParamsFile, TripletsFile, TruthFile,
};
use regrasp::sequence::Scene;
use regrasp::triplet::DEFAULT_SINGULARITY_TOL;

#[derive(Parser)]
#[command(name = "regrasp", version, about = "Regrasp planning and contact-based object pose recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample antipodal parallel-jaw grasps on a mesh.
    PlanGrasps {
        /// Mesh file (.stl or .obj) or `builtin:<shape>`.
        #[arg(long)]
        mesh: String,
        /// Factor applied to mesh coordinates to get meters.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = PlannerConfig::default().n_points)]
        n_points: usize,
        #[arg(long, default_value_t = PlannerConfig::default().n_rotations)]
        n_rotations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gripper geometry as JSON; defaults are used when omitted.
        #[arg(long)]
        gripper: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group grasps by closing axis and rank triplets of groups.
    Triplets {
        #[arg(long)]
        grasps: PathBuf,
        /// Axes closer than this angle share a group, degrees.
        #[arg(long, default_value_t = 2.0)]
        group_tol_deg: f64,
        #[arg(long, default_value_t = DEFAULT_SINGULARITY_TOL)]
        singularity_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find a pick, two handovers and a place using one triplet.
    Sequence {
        #[arg(long)]
        grasps: PathBuf,
        #[arg(long)]
        triplets: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conform the second and third grasps against a hidden true pose.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Admittance, contact and convergence settings; defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also writes `<stem>_traces.csv` next to this file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the object pose from planned and conformed grasps.
    Estimate {
        #[arg(long)]
        conformed: PathBuf,
        #[arg(long)]
        sim_object: PathBuf,
        #[arg(long, value_enum, default_value_t = Rotation::AxisSwing)]
        rotation: Rotation,
        #[arg(long, default_value_t = DEFAULT_SINGULARITY_TOL)]
        singularity_tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run randomized trials and write per-trial and summary reports.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Rotation {
    AxisSwing,
    LogProjection,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn traces_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("conformed".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_traces.csv"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PlanGrasps {
            mesh,
            scale,
            n_points,
            n_rotations,
            seed,
            gripper,
            out,
        } => {
            let gripper: GripperModel = match gripper {
                Some(p) => read_json(&p)?,
                None => GripperModel::default(),
            };
            let planner = PlannerConfig {
                n_points,
                n_rotations,
                seed,
                ..Default::default()
            };
            let doc = GraspsFile::plan(MeshSource::parse(&mesh, scale)?, gripper, planner)?;
            eprintln!("{} grasps", doc.grasps.len());
            write_json(&out, &doc)
        }
        Command::Triplets {
            grasps,
            group_tol_deg,
            singularity_tol,
            out,
        } => {
            let g: GraspsFile = read_json(&grasps)?;
            let tol = 1.0 - group_tol_deg.to_radians().cos();
            let doc = TripletsFile::from_grasps(&g.grasps, tol, singularity_tol)?;
            eprintln!("{} groups, {} triplets", doc.groups.len(), doc.triplets.len());
            write_json(&out, &doc)
        }
        Command::Sequence {
            grasps,
            triplets,
            scene,
            out,
        } => {
            let scene: Scene = read_json(&scene)?;
            let doc = PlanFile::plan(&read_json(&grasps)?, &read_json(&triplets)?, scene)?;
            eprintln!("plan uses triplet {} with grasps {:?}", doc.plan.triplet, doc.plan.grasps);
            write_json(&out, &doc)
        }
        Command::Simulate {
            plan,
            truth,
            params,
            out,
        } => {
            let plan: PlanFile = read_json(&plan)?;
            let truth: TruthFile = read_json(&truth)?;
            let params: SimParamsFile = match params {
                Some(p) => read_json(&p)?,
                None => SimParamsFile::default(),
            };
            let (doc, traces) = simulate(&plan, &truth, &params)?;
            for (r, name) in doc.results.iter().zip(["g2", "g3"]) {
                if !r.converged {
                    eprintln!("warning: {name} did not converge in {} steps", r.steps_used);
                }
            }
            write_json(&out, &doc)?;
            let tp = traces_path(&out);
            std::fs::write(&tp, traces).with_context(|| format!("writing {}", tp.display()))
        }
        Command::Estimate {
            conformed,
            sim_object,
            rotation,
            singularity_tol,
            out,
        } => {
            let conformed: ConformedFile = read_json(&conformed)?;
            let sim: PoseFile = read_json(&sim_object)?;
            let options = EstimateOptions {
                singularity_tol,
                rotation: match rotation {
                    Rotation::AxisSwing => RotationExtraction::AxisSwing,
                    Rotation::LogProjection => RotationExtraction::LogProjection,
                },
            };
            write_json(&out, &estimate(&conformed, &sim.pose, &options)?)
        }
        Command::Experiment { config, out } => {
            let config: TrialConfig = read_json(&config)?;
            let report = run_experiment(&config)?;
            write_report(&report, &out)?;
            eprintln!("{} trials written to {}", report.rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
