//! Command-line front end: file-based workflows over the library.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when an algorithm
//! fails (no plan, no IK convergence, every benchmark trial failed).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::actuation::{config_to_tendons, tendons_to_config, TendonVector};
use crate::bench::{run_benchmark, BenchConfig};
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, inverse_kinematics, ArmGeometry, IkOptions, JointConfig, Pose};
use crate::planner::{plan, trajectory_cost, validate_trajectory, ActuationTrajectory, Method, PlannerParams, ServoSet, ValidationOptions};
use crate::scheduler::{schedule_trajectory, simulate_execution, AxialServoMap, HardwarePlan, TimingModel};
use crate::workspace::{azimuth_uniformity, dexterity_map, monte_carlo_workspace, GridSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

const CONFIG_SCHEMA: &str = "tdma-config/1";
const PLAN_SCHEMA: &str = "tdma-hardware-plan/1";

#[derive(Debug, Parser)]
#[command(name = "tdma-arm", version, about = "Kinematics, planning and scheduling for a TDMA tendon-driven continuum arm")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Working servos, e.g. `1,2,3` or `13`.
    #[arg(long, global = true)]
    pub servos: Option<ServoSet>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Print angles in degrees (files stay in radians).
    #[arg(long, global = true)]
    pub degrees: bool,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Planner and timing parameters settable from the command line.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub step_max: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub beam_width: Option<usize>,
    #[arg(long, global = true)]
    pub lambda_b: Option<f64>,
    #[arg(long, global = true)]
    pub lambda_sw: Option<f64>,
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    /// Servo speed limit, rad/s.
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Switch time per stage, s.
    #[arg(long, global = true)]
    pub t_switch: Option<f64>,
    /// Servo radians per meter of tendon.
    #[arg(long, global = true)]
    pub gear_factor: Option<f64>,
    /// Tendon slip per axial switch, m.
    #[arg(long, global = true)]
    pub slip: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward kinematics of a joint configuration (JSON file or inline).
    Fk { q: String },
    /// Inverse kinematics of a pose `{rotation: [9], position: [3]}`.
    Ik {
        pose: String,
        /// Initial configuration.
        #[arg(long)]
        init: Option<String>,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        max_iterations: usize,
    },
    /// Configuration to tendon displacement and back.
    Map {
        #[command(subcommand)]
        direction: MapDirection,
    },
    /// Plan, schedule and simulate a move; writes trajectory, hardware plan and trace.
    Plan {
        /// Start as a configuration object or nine tendon values; straight by default.
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "beamstep")]
        method: Method,
        /// Trace sampling interval, s.
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
    /// Turn a trajectory file into a hardware plan.
    Schedule { trajectory: PathBuf },
    /// Execute a hardware plan against the timing model; writes the trace CSV.
    Simulate {
        plan: PathBuf,
        /// Overrides the start state stored in the plan.
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
    /// Monte Carlo workspace with dexterity grid.
    Workspace {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Radial bins; the height axis gets twice as many.
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Orientation match tolerance, degrees.
        #[arg(long, default_value_t = 10.0)]
        angle_tol: f64,
    },
    /// Method comparison table over seeded random targets.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "beamstep,reversed,sequential,greedy")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        servo_counts: Vec<usize>,
        #[arg(long, default_value_t = 15)]
        targets: usize,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum MapDirection {
    /// Configuration JSON to nine tendon displacements.
    ToTendons { q: String },
    /// Nine tendon displacements (JSON array) to configuration.
    ToConfig { tendons: String },
}

/// Contents of a `--config` file. Missing fields take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Option<String>,
    /// Geometry JSON, relative to the config file.
    pub geometry: Option<PathBuf>,
    pub planner: PlannerParams,
    pub timing: TimingModel,
    pub servos: Option<ServoSet>,
    pub seed: u64,
    /// Whether the file set `planner.step_max` itself.
    #[serde(skip)]
    pub step_max_given: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        let step_max_given = value.pointer("/planner/step_max").is_some();
        let mut config: RunConfig = serde_json::from_value(value)?;
        config.step_max_given = step_max_given;
        if let Some(schema) = &config.schema {
            if schema != CONFIG_SCHEMA {
                return Err(Error::invalid(format!("unsupported config schema {schema:?}")));
            }
        }
        if let Some(geom) = &config.geometry {
            if geom.is_relative() {
                config.geometry = Some(path.parent().unwrap_or(Path::new(".")).join(geom));
            }
        }
        Ok(config)
    }
}

/// Fully resolved run parameters: flag > file > default.
#[derive(Debug, Clone)]
pub struct Settings {
    pub geom: ArmGeometry,
    pub planner: PlannerParams,
    /// Step size set by flag or file rather than defaulted.
    pub step_max_given: bool,
    pub timing: TimingModel,
    pub servos: ServoSet,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub degrees: bool,
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Settings> {
        let file = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let geom = match &file.geometry {
            Some(path) => ArmGeometry::from_json(&fs::read_to_string(path)?)?,
            None => ArmGeometry::default(),
        };
        geom.validate()?;
        let o = &cli.overrides;
        let mut planner = file.planner;
        planner.step_max = o.step_max.unwrap_or(planner.step_max);
        planner.tol = o.tol.unwrap_or(planner.tol);
        planner.beam_width = o.beam_width.unwrap_or(planner.beam_width);
        planner.lambda_b = o.lambda_b.unwrap_or(planner.lambda_b);
        planner.lambda_sw = o.lambda_sw.unwrap_or(planner.lambda_sw);
        planner.max_steps = o.max_steps.unwrap_or(planner.max_steps);
        let mut timing = file.timing;
        timing.omega = o.omega.unwrap_or(timing.omega);
        timing.t_switch = o.t_switch.unwrap_or(timing.t_switch);
        timing.gear_factor = o.gear_factor.unwrap_or(timing.gear_factor);
        timing.slip = o.slip.unwrap_or(timing.slip);
        timing.validate()?;
        Ok(Settings {
            geom,
            planner,
            step_max_given: o.step_max.is_some() || file.step_max_given,
            timing,
            servos: cli.servos.or(file.servos).unwrap_or_else(ServoSet::all),
            seed: cli.seed.unwrap_or(file.seed),
            out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            degrees: cli.degrees,
        })
    }

    fn output(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(self.out_dir.join(name))
    }

    fn angles(&self, q: &JointConfig) -> serde_json::Value {
        let k = if self.degrees { 180.0 / std::f64::consts::PI } else { 1.0 };
        json!({
            "theta": q.theta.map(|t| t * k),
            "phi": q.phi.map(|p| p * k),
            "unit": if self.degrees { "deg" } else { "rad" },
        })
    }
}

/// Inline JSON when the argument starts with `{` or `[`, else a file path.
fn read_input(arg: &str) -> Result<String> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(arg.to_string())
    } else {
        Ok(fs::read_to_string(arg)?)
    }
}

fn parse_config(arg: &str) -> Result<JointConfig> {
    Ok(serde_json::from_str(&read_input(arg)?)?)
}

/// A configuration object is mapped to tendons; an array is taken as tendons.
fn parse_state(arg: &str, geom: &ArmGeometry) -> Result<TendonVector> {
    let value: serde_json::Value = serde_json::from_str(&read_input(arg)?)?;
    if value.is_array() {
        let dl: TendonVector = serde_json::from_value(value)?;
        dl.validate(geom)?;
        Ok(dl)
    } else {
        let q: JointConfig = serde_json::from_value(value)?;
        config_to_tendons(geom, &q)
    }
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    schema: String,
    start: TendonVector,
    servos: ServoSet,
    #[serde(flatten)]
    plan: HardwarePlan,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn print_json<W: Write>(out: &mut W, value: &serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Runs one parsed command, writing human-facing output to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    let s = Settings::resolve(cli)?;
    match &cli.command {
        Command::Fk { q } => {
            let q = parse_config(q)?;
            let fk = forward_kinematics(&s.geom, &q)?;
            print_json(
                out,
                &json!({
                    "schema": "tdma-fk/1",
                    "pose": fk.end_effector,
                    "frames": fk.frames,
                }),
            )
        }
        Command::Ik {
            pose,
            init,
            restarts,
            max_iterations,
        } => {
            let desired: Pose = serde_json::from_str(&read_input(pose)?)?;
            let init = match init {
                Some(arg) => parse_config(arg)?,
                None => JointConfig::straight(),
            };
            let opts = IkOptions {
                restarts: *restarts,
                max_iterations: *max_iterations,
                seed: s.seed,
                ..IkOptions::default()
            };
            let sol = inverse_kinematics(&s.geom, &init, &desired, &opts)?;
            print_json(
                out,
                &json!({
                    "schema": "tdma-ik/1",
                    "q": sol.q,
                    "display": s.angles(&sol.q),
                    "converged": sol.converged,
                    "residual": sol.residual,
                    "iterations": sol.iterations,
                    "start_index": sol.start_index,
                }),
            )?;
            if !sol.converged {
                return Err(Error::NoConvergence {
                    residual: sol.residual.norm(),
                });
            }
            Ok(())
        }
        Command::Map { direction } => match direction {
            MapDirection::ToTendons { q } => {
                let q = parse_config(q)?;
                let dl = config_to_tendons(&s.geom, &q)?;
                print_json(out, &json!({ "schema": "tdma-tendons/1", "tendons": dl }))
            }
            MapDirection::ToConfig { tendons } => {
                let dl: TendonVector = serde_json::from_str(&read_input(tendons)?)?;
                dl.validate(&s.geom)?;
                let q = tendons_to_config(&s.geom, &dl)?;
                print_json(
                    out,
                    &json!({ "schema": "tdma-config-space/1", "q": q, "display": s.angles(&q) }),
                )
            }
        },
        Command::Plan {
            start,
            target,
            method,
            dt,
        } => {
            let start = match start {
                Some(arg) => parse_state(arg, &s.geom)?,
                None => TendonVector::zeros(),
            };
            let target = parse_state(target, &s.geom)?;
            let problem = s.planner.problem(&s.geom, start, target, s.servos);
            let traj = plan(*method, &problem)?;
            let report = validate_trajectory(&problem, &traj, ValidationOptions::default());
            let cost = trajectory_cost(&problem, &traj)?;
            let schedule = schedule_trajectory(&AxialServoMap::canonical(), &traj, &s.servos, problem.tol, &s.timing)?;
            let trace = simulate_execution(&s.geom, &schedule.plan, &s.timing, &start, *dt, s.seed)?;

            write_json(&s.output("trajectory.json")?, &traj)?;
            write_json(
                &s.output("hardware_plan.json")?,
                &PlanFile {
                    schema: PLAN_SCHEMA.to_string(),
                    start,
                    servos: s.servos,
                    plan: schedule.plan.clone(),
                },
            )?;
            trace.write_csv(fs::File::create(s.output("trace.csv")?)?)?;

            writeln!(out, "method      {method}")?;
            writeln!(out, "T           {} s", trace.total_time)?;
            writeln!(out, "K           {}", traj.len())?;
            writeln!(out, "K_h         {}", schedule.plan.len())?;
            writeln!(out, "W_sw        {} (layer changes {})", cost.switches, cost.layer_switches)?;
            writeln!(out, "cost        {}", cost.total)?;
            writeln!(out, "valid       {}", report.passed)?;
            if let Some(exc) = &report.joint_limit_excursion {
                writeln!(
                    out,
                    "note        segment {} passes theta_max at step {} ({:.4} > {:.4})",
                    exc.segment, exc.step, exc.theta, exc.limit
                )?;
            }
            Ok(())
        }
        Command::Schedule { trajectory } => {
            let traj: ActuationTrajectory = serde_json::from_str(&fs::read_to_string(trajectory)?)?;
            let schedule = schedule_trajectory(&AxialServoMap::canonical(), &traj, &s.servos, s.planner.tol, &s.timing)?;
            write_json(
                &s.output("hardware_plan.json")?,
                &PlanFile {
                    schema: PLAN_SCHEMA.to_string(),
                    start: traj.start,
                    servos: s.servos,
                    plan: schedule.plan.clone(),
                },
            )?;
            writeln!(out, "K           {}", traj.len())?;
            writeln!(out, "K_h         {}", schedule.plan.len())?;
            writeln!(out, "discarded   {}", schedule.fusion.discarded.len())?;
            writeln!(out, "T           {} s", schedule.plan.total_time(&s.timing))?;
            Ok(())
        }
        Command::Simulate { plan, start, dt } => {
            let file: PlanFile = serde_json::from_str(&fs::read_to_string(plan)?)?;
            if file.schema != PLAN_SCHEMA {
                return Err(Error::invalid(format!("unsupported plan schema {:?}", file.schema)));
            }
            file.plan.check(&AxialServoMap::canonical(), &file.servos)?;
            let start = match start {
                Some(arg) => parse_state(arg, &s.geom)?,
                None => file.start,
            };
            let trace = simulate_execution(&s.geom, &file.plan, &s.timing, &start, *dt, s.seed)?;
            trace.write_csv(fs::File::create(s.output("trace.csv")?)?)?;
            writeln!(out, "T           {} s", trace.total_time)?;
            writeln!(out, "samples     {}", trace.samples.len())?;
            Ok(())
        }
        Command::Workspace {
            samples,
            bins,
            angle_tol,
        } => {
            let grid = GridSpec::for_geometry(&s.geom, *bins);
            grid.validate()?;
            let cloud = monte_carlo_workspace(&s.geom, *samples, s.seed)?;
            let map = dexterity_map(&cloud, &grid, angle_tol.to_radians())?;
            let ball = s.geom.total_length();
            let max_radius = cloud.iter().map(|p| p.position.norm()).fold(0.0, f64::max);
            let outside = cloud.iter().filter(|p| p.position.norm() > ball * (1.0 + 1e-12)).count();
            let chi = azimuth_uniformity(&cloud, 36).ok();
            map.write_csv(fs::File::create(s.output("dexterity.csv")?)?)?;
            let reachable: Vec<f64> = map.reachable().filter_map(|c| c.dexterity).collect();
            write_json(
                &s.output("workspace.json")?,
                &json!({
                    "schema": "tdma-workspace/1",
                    "samples": samples,
                    "seed": s.seed,
                    "ball_radius": ball,
                    "max_radius": max_radius,
                    "outside_ball": outside,
                    "azimuth_chi_square": chi,
                    "grid": grid,
                    "angle_tol_rad": angle_tol.to_radians(),
                    "reachable_cells": reachable.len(),
                    "max_dexterity": reachable.iter().copied().fold(0.0, f64::max),
                }),
            )?;
            writeln!(out, "samples     {samples}")?;
            writeln!(out, "max |p|     {max_radius} m (bound {ball} m)")?;
            if let Some(chi) = chi {
                writeln!(out, "azimuth     chi2 {:.2}, p {:.4}", chi.statistic, chi.p_value)?;
            }
            writeln!(out, "reachable   {} of {} cells", reachable.len(), map.cells.len())?;
            Ok(())
        }
        Command::Bench {
            methods,
            servo_counts,
            targets,
            dt,
        } => {
            let config = BenchConfig {
                geom: s.geom.clone(),
                methods: methods.clone(),
                servo_counts: servo_counts.clone(),
                n_targets: *targets,
                seed: s.seed,
                planner: PlannerParams {
                    step_max: if s.step_max_given { s.planner.step_max } else { BenchConfig::DEFAULT_STEP_MAX },
                    ..s.planner
                },
                timing: s.timing,
                sample_dt: *dt,
            };
            let table = run_benchmark(&config)?;
            table.write_csv(fs::File::create(s.output("bench.csv")?)?)?;
            write_json(&s.output("bench.json")?, &table)?;
            writeln!(out, "rows        {}", table.rows.len())?;
            writeln!(out, "failures    {}", table.failures().count())?;
            if table.all_failed() {
                return Err(Error::AllTrialsFailed {
                    trials: table.trials.len(),
                });
            }
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_algorithmic() {
                EXIT_FAILURE
            } else {
                EXIT_INVALID
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("tdma-arm").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"planner": {"step_max": 0.004}, "timing": {"omega": 3.0}, "seed": 9}"#).unwrap();
        let p = path.to_str().unwrap();

        let s = Settings::resolve(&parse(&["--config", p, "fk", "{}"])).unwrap();
        assert_eq!(s.planner.step_max, 0.004);
        assert_eq!(s.timing.omega, 3.0);
        assert_eq!(s.seed, 9);
        assert_eq!(s.planner.tol, PlannerParams::default().tol);
        assert_eq!(s.timing.t_switch, 3.0);

        let s = Settings::resolve(&parse(&["--config", p, "--step-max", "0.002", "--seed", "1", "fk", "{}"])).unwrap();
        assert_eq!(s.planner.step_max, 0.002);
        assert_eq!(s.seed, 1);
    }

    #[test]
    fn geometry_path_is_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut geom = ArmGeometry::default();
        geom.anchor_radius = 0.02;
        fs::write(dir.path().join("arm.json"), serde_json::to_string(&geom).unwrap()).unwrap();
        fs::write(dir.path().join("run.json"), r#"{"geometry": "arm.json"}"#).unwrap();
        let p = dir.path().join("run.json");
        let s = Settings::resolve(&parse(&["--config", p.to_str().unwrap(), "fk", "{}"])).unwrap();
        assert_eq!(s.geom.anchor_radius, 0.02);
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"planer": {}}"#).unwrap();
        assert!(Settings::resolve(&parse(&["--config", path.to_str().unwrap(), "fk", "{}"])).is_err());
    }

    #[test]
    fn state_parsing_accepts_both_spaces() {
        let geom = ArmGeometry::default();
        let q = r#"{"theta": [0.3, 0.0, 0.0], "phi": [0.0, 0.0, 0.0]}"#;
        let from_q = parse_state(q, &geom).unwrap();
        assert!(from_q.tendon(1) < 0.0);
        let arr = serde_json::to_string(&from_q).unwrap();
        assert_eq!(parse_state(&arr, &geom).unwrap(), from_q);
    }

    #[test]
    fn exit_codes() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(["tdma-arm", "fk", r#"{"theta":[9,0,0],"phi":[0,0,0]}"#], &mut out, &mut err);
        assert_eq!(code, EXIT_INVALID);
        let code = main_with_args(["tdma-arm", "plan", "--target", "[0,0,0,0,0,0,0,0,0]", "--method", "astar"], &mut out, &mut err);
        assert_eq!(code, EXIT_INVALID);
        let code = main_with_args(["tdma-arm", "--help"], &mut out, &mut err);
        assert_eq!(code, EXIT_OK);
    }
}
