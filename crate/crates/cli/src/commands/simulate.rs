//! `maxid simulate`: synthetic datasets on the uniform or model scale.

use clap::{Args, ValueEnum};

use maxid_core::inference::simulate_fitted;
use maxid_core::model::Family;
use maxid_core::simulate::{simulate_gaussian_copula, simulate_maxid, simulate_t_copula, OutputScale, SimulationSpec};

use crate::config::{DesignConfig, Generator, Loaded, ModelChoice, MountainConfig, ParamsConfig, SimulationConfig};
use crate::error::CliResult;
use crate::output::{report, write_json};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimPreset {
    /// 7×7 mountain-range design, 50 replicates, non-stationary max-id truth.
    SimStudy,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub preset: Option<SimPreset>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Number of replicates.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// The simulation-study configuration: truth (α, β, λ0, λ1, ν) = (1, 0.5, −0.5, −0.25, 0.25).
pub fn sim_study(loaded: &mut Loaded) {
    let c = &mut loaded.config;
    c.design.get_or_insert(DesignConfig {
        file: None,
        metric: maxid_core::model::Metric::Euclidean,
        mountain: Some(MountainConfig { grid: 7, perturbation: 0.05, seed: 0 }),
    });
    c.model.get_or_insert(ModelChoice::Name("model6".into()));
    c.params.get_or_insert(ParamsConfig {
        alpha: Some(1.0),
        beta: Some(0.5),
        lambda0: Some(-0.5),
        lambda1: Some(-0.25),
        lambda2: Some(0.0),
        nu: Some(0.25),
        ..Default::default()
    });
    c.simulation.get_or_insert(SimulationConfig {
        replicates: 50,
        seed: 1,
        epsilon: 1e-4,
        max_points: 100_000,
        scale: OutputScale::Uniform,
        generator: Generator::MaxId,
        dof: None,
    });
}

pub fn run(loaded: &Loaded, args: &SimulateArgs) -> CliResult<()> {
    let mut loaded = loaded.clone();
    if args.preset == Some(SimPreset::SimStudy) {
        sim_study(&mut loaded);
    }
    {
        let c = &mut loaded.config;
        let p = c.params.get_or_insert_with(ParamsConfig::default);
        let set = |slot: &mut Option<f64>, v: Option<f64>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut p.alpha, args.alpha);
        set(&mut p.beta, args.beta);
        set(&mut p.lambda0, args.lambda0);
        set(&mut p.lambda1, args.lambda1);
        set(&mut p.lambda2, args.lambda2);
        set(&mut p.nu, args.nu);
        if args.reps.is_some() || args.seed.is_some() {
            let s = c.simulation.get_or_insert(SimulationConfig {
                replicates: 50,
                seed: 0,
                epsilon: 1e-4,
                max_points: 100_000,
                scale: OutputScale::Uniform,
                generator: Generator::MaxId,
                dof: None,
            });
            if let Some(r) = args.reps {
                s.replicates = r;
            }
            if let Some(seed) = args.seed {
                s.seed = seed;
            }
        }
    }
    let Some(sim) = loaded.config.simulation.clone() else {
        return loaded.err("simulation", "a `simulation` section (or --preset) is required");
    };
    if sim.replicates == 0 {
        return loaded.err("replicates", "replicate count must be positive");
    }
    let params = loaded.params();
    params.validate().or_else(|e| loaded.err("params", e))?;
    let design = loaded.design(sim.replicates)?;
    let data = match sim.generator {
        Generator::MaxId => {
            let spec = SimulationSpec {
                replicates: sim.replicates,
                seed: sim.seed,
                epsilon: sim.epsilon,
                max_points: sim.max_points,
                scale: sim.scale,
            };
            spec.validate().or_else(|e| loaded.err("simulation", e))?;
            simulate_maxid(&design, &params, &spec)?
        }
        Generator::Gaussian => simulate_gaussian_copula(&design, &params, sim.replicates, sim.seed)?,
        Generator::T => match sim.dof {
            Some(dof) => simulate_t_copula(&design, &params, dof, sim.replicates, sim.seed)?,
            None => simulate_fitted(&design, Family::TCopula, &params, sim.replicates, sim.seed)?,
        },
    };
    let dir = loaded.output_dir()?;
    let (data_path, design_path, cfg_path) = (dir.join("data.csv"), dir.join("design.csv"), dir.join("config.json"));
    data.write(&data_path)?;
    design.write_csv(&design_path)?;
    // The effective configuration, so the run can be repeated or refitted.
    write_json(&cfg_path, &loaded.config)?;
    let flagged = data.metadata.flagged.len();
    if flagged > 0 {
        eprintln!("warning: {flagged} replicate(s) reached the point budget before the truncation bound");
    }
    report(&[data_path, design_path, cfg_path]);
    Ok(())
}
