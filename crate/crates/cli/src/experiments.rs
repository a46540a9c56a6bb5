//! Experiment registry: configuration plans and their runners.

use anyhow::{anyhow, Context, Result};
use serde_json::json;

use qestlab_core::bayes::{
    coupling_sweep, mse_monte_carlo, prior_evaluate, GridModel, PosteriorGrid, PriorSpec,
    TemperatureGrid,
};
use qestlab_core::collisional::{
    likelihood, mutual_information, sample_trajectory, CollisionalParams, ProbePrep,
};
use qestlab_core::holonomic::{
    average_infidelity, fibonacci_states, plus_minus_states, two_qubit_infidelity, GateProgram,
    TwoQubitConfig,
};
use qestlab_core::math::linear_fit;
use qestlab_core::qcore::CMat;
use qestlab_core::qfi::{classical_fi, qfi, thermal_fi, ParamStateFamily};

use crate::config::{Config, ConfigError};
use crate::output::{fmt_f64, CsvWriter};

pub const EXPERIMENTS: [&str; 8] = [
    "posterior-demo",
    "mse-sweep",
    "coupling-sweep",
    "probe-noise",
    "qfi-table",
    "mutual-info",
    "gate-sweep",
    "fibonacci-dump",
];

fn cfg_err(msg: String) -> anyhow::Error {
    anyhow::Error::new(ConfigError(msg))
}

fn parse_probe_prep(spec: &str) -> Result<ProbePrep<f64>> {
    if spec == "ground" {
        return Ok(ProbePrep::Ground);
    }
    if let Some(tp) = spec.strip_prefix("thermal:") {
        let tp: f64 = tp
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad probe temperature `{tp}`")))?;
        return Ok(ProbePrep::Thermal(tp));
    }
    if let Some(q) = spec.strip_prefix("mixture:") {
        let q: f64 = q
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad mixture weight `{q}`")))?;
        return Ok(ProbePrep::Mixture(q));
    }
    Err(cfg_err(format!(
        "probe_prep must be `ground`, `thermal:<T_p>` or `mixture:<q>`, got `{spec}`"
    )))
}

fn model_from(cfg: &Config) -> Result<CollisionalParams<f64>> {
    let omega = cfg.get_f64("model", "omega")?.unwrap_or(1.0);
    let gamma_tau_se = cfg.require_f64("model", "gamma_tau_se")?;
    let g_tau_sa = cfg
        .get_f64("model", "g_tau_sa")?
        .unwrap_or(std::f64::consts::FRAC_PI_2);
    let prep = match cfg.get_str("model", "probe_prep") {
        Some(s) => parse_probe_prep(&s)?,
        None => ProbePrep::Ground,
    };
    CollisionalParams::new(omega, gamma_tau_se, g_tau_sa, prep)
        .map_err(|e| cfg_err(format!("[model]: {e}")))
}

fn grid_from(cfg: &Config) -> Result<TemperatureGrid<f64>> {
    let t_min = cfg.require_f64("grid", "t_min")?;
    let t_max = cfg.require_f64("grid", "t_max")?;
    let n_points = cfg.require_usize("grid", "n_points")?;
    TemperatureGrid::new(t_min, t_max, n_points).map_err(|e| cfg_err(format!("[grid]: {e}")))
}

fn prior_from(cfg: &Config, grid: &TemperatureGrid<f64>) -> Result<(PriorSpec<f64>, Vec<f64>)> {
    let spec = match cfg.get_str("prior", "family") {
        Some(f) if f == "flat" => PriorSpec::flat(),
        Some(f) if f == "lambda_alpha" || f == "lambda-alpha" => {
            PriorSpec::lambda_alpha(cfg.get_f64("prior", "alpha")?.unwrap_or(-100.0))
        }
        Some(other) => return Err(cfg_err(format!("unknown prior family `{other}`"))),
        None => PriorSpec::lambda_alpha(cfg.get_f64("prior", "alpha")?.unwrap_or(-100.0)),
    };
    let weights = prior_evaluate(&spec, grid).map_err(|e| cfg_err(format!("[prior]: {e}")))?;
    Ok((spec, weights))
}

fn parse_gate(name: &str) -> Result<&'static str> {
    match name {
        "hadamard" => Ok("hadamard"),
        "x" => Ok("x"),
        "z" => Ok("z"),
        "s" => Ok("s"),
        "cz" => Ok("cz"),
        other => Err(cfg_err(format!(
            "unknown gate `{other}` (hadamard|x|z|s|cz)"
        ))),
    }
}

fn single_qubit_program(gate: &str, beta: f64, f: f64, gamma: f64, rwa: bool) -> GateProgram<f64> {
    match gate {
        "hadamard" => GateProgram::hadamard(beta, f, gamma, rwa),
        "x" => GateProgram::x_gate(beta, f, gamma, rwa),
        "z" => GateProgram::z_gate(beta, f, gamma, rwa),
        _ => GateProgram::s_gate(beta, f, gamma, rwa),
    }
}

/// A validated experiment, ready to describe or run.
pub enum Plan {
    PosteriorDemo {
        model: CollisionalParams<f64>,
        grid: TemperatureGrid<f64>,
        prior: Vec<f64>,
        t0: f64,
        n: usize,
    },
    MseSweep {
        model: CollisionalParams<f64>,
        grid: TemperatureGrid<f64>,
        prior: Vec<f64>,
        t0_list: Vec<f64>,
        checkpoints: Vec<usize>,
        trials: usize,
    },
    CouplingSweep {
        omega: f64,
        gamma_grid: Vec<f64>,
        g_list: Vec<f64>,
        alpha: f64,
        n_points: usize,
        intervals: Vec<(f64, f64, f64)>, // (delta-or-0, t_min, t_max)
    },
    ProbeNoise {
        ideal: CollisionalParams<f64>,
        grid: TemperatureGrid<f64>,
        prior: Vec<f64>,
        tp_list: Vec<f64>,
        q: f64,
        t0: f64,
        checkpoints: Vec<usize>,
        trials: usize,
        fi_points: usize,
    },
    QfiTable {
        omega: f64,
        gamma_list: Vec<f64>,
        grid: TemperatureGrid<f64>,
    },
    MutualInfo {
        omega: f64,
        gamma_tau_se: f64,
        g_list: Vec<f64>,
        t0: f64,
        max_gap: usize,
    },
    GateSweep {
        gate: &'static str,
        mode: String,
        values: Vec<f64>,
        f: f64,
        gamma: f64,
        rwa: bool,
        n_states: usize,
    },
    FibonacciDump {
        n: usize,
    },
}

pub fn build_plan(kind: &str, cfg: &Config) -> Result<Plan> {
    let declared = cfg
        .require_str("experiment", "kind")
        .map_err(anyhow::Error::new)?;
    if declared != kind {
        return Err(cfg_err(format!(
            "config declares kind `{declared}` but the `{kind}` experiment was requested"
        )));
    }
    let plan = match kind {
        "posterior-demo" => {
            let grid = grid_from(cfg)?;
            let prior = prior_from(cfg, &grid)?.1;
            Plan::PosteriorDemo {
                model: model_from(cfg)?,
                grid,
                prior,
                t0: cfg.require_f64("posterior", "t0")?,
                n: cfg.get_usize("posterior", "n_outcomes")?.unwrap_or(1000),
            }
        }
        "mse-sweep" => {
            let grid = grid_from(cfg)?;
            let prior = prior_from(cfg, &grid)?.1;
            Plan::MseSweep {
                model: model_from(cfg)?,
                grid,
                prior,
                t0_list: cfg
                    .get_f64_list("mse", "t0_list")?
                    .ok_or_else(|| cfg_err("missing [mse] t0_list".into()))?,
                checkpoints: cfg
                    .get_usize_list("mse", "checkpoints")?
                    .ok_or_else(|| cfg_err("missing [mse] checkpoints".into()))?,
                trials: cfg.get_usize("mse", "trials")?.unwrap_or(500),
            }
        }
        "coupling-sweep" => {
            let gamma_min = cfg.require_f64("coupling", "gamma_min")?;
            let gamma_max = cfg.require_f64("coupling", "gamma_max")?;
            let gamma_count = cfg.require_usize("coupling", "gamma_count")?;
            if !(gamma_min > 0.0 && gamma_max > gamma_min && gamma_count >= 2) {
                return Err(cfg_err(
                    "[coupling]: need 0 < gamma_min < gamma_max, count >= 2".into(),
                ));
            }
            let gamma_grid: Vec<f64> = (0..gamma_count)
                .map(|i| gamma_min + (gamma_max - gamma_min) * i as f64 / (gamma_count - 1) as f64)
                .collect();
            let g_list = cfg
                .get_f64_list("coupling", "g_list")?
                .unwrap_or_else(|| vec![std::f64::consts::FRAC_PI_2]);
            let alpha = cfg.get_f64("prior", "alpha")?.unwrap_or(-100.0);
            let n_points = cfg.get_usize("grid", "n_points")?.unwrap_or(200);
            let intervals = match cfg.get_f64_list("coupling", "delta_list")? {
                Some(deltas) => {
                    let t0 = cfg.require_f64("coupling", "t0")?;
                    deltas.iter().map(|&d| (d, t0 - d, t0 + d)).collect()
                }
                None => {
                    let t_min = cfg.require_f64("grid", "t_min")?;
                    let t_max = cfg.require_f64("grid", "t_max")?;
                    vec![(0.0, t_min, t_max)]
                }
            };
            Plan::CouplingSweep {
                omega: cfg.get_f64("model", "omega")?.unwrap_or(1.0),
                gamma_grid,
                g_list,
                alpha,
                n_points,
                intervals,
            }
        }
        "probe-noise" => {
            let grid = grid_from(cfg)?;
            let prior = prior_from(cfg, &grid)?.1;
            Plan::ProbeNoise {
                ideal: model_from(cfg)?,
                grid,
                prior,
                tp_list: cfg
                    .get_f64_list("probe", "tp_list")?
                    .unwrap_or_else(|| vec![0.2, 0.5, 1.0, 2.0]),
                q: cfg.get_f64("probe", "q")?.unwrap_or(0.9),
                t0: cfg.get_f64("probe", "t0")?.unwrap_or(1.5),
                checkpoints: cfg
                    .get_usize_list("probe", "checkpoints")?
                    .unwrap_or_else(|| vec![100, 1000, 10_000]),
                trials: cfg.get_usize("probe", "trials")?.unwrap_or(300),
                fi_points: cfg.get_usize("probe", "fi_points")?.unwrap_or(50),
            }
        }
        "qfi-table" => Plan::QfiTable {
            omega: cfg.get_f64("model", "omega")?.unwrap_or(1.0),
            gamma_list: cfg
                .get_f64_list("qfi", "gamma_list")?
                .unwrap_or_else(|| vec![0.2, 0.4, 1.0]),
            grid: grid_from(cfg)?,
        },
        "mutual-info" => Plan::MutualInfo {
            omega: cfg.get_f64("model", "omega")?.unwrap_or(1.0),
            gamma_tau_se: cfg.require_f64("model", "gamma_tau_se")?,
            g_list: cfg
                .get_f64_list("mutual", "g_list")?
                .unwrap_or_else(|| vec![0.3 * std::f64::consts::PI]),
            t0: cfg.get_f64("mutual", "t0")?.unwrap_or(2.0),
            max_gap: cfg.get_usize("mutual", "max_gap")?.unwrap_or(6),
        },
        "gate-sweep" => {
            let gate = parse_gate(
                &cfg.require_str("gate", "gate")
                    .map_err(anyhow::Error::new)?,
            )?;
            let mode = cfg.get_str("gate", "mode").unwrap_or_else(|| "beta".into());
            if mode != "beta" && mode != "frequency-ratio" {
                return Err(cfg_err(format!(
                    "[gate] mode must be beta|frequency-ratio, got {mode}"
                )));
            }
            if gate == "cz" && mode != "beta" {
                return Err(cfg_err("[gate]: the cz gate sweeps over beta only".into()));
            }
            let values = cfg
                .get_f64_list("gate", "values")?
                .ok_or_else(|| cfg_err("missing [gate] values".into()))?;
            if values.iter().any(|&v| v <= 0.0) {
                return Err(cfg_err("[gate] values must be > 0".into()));
            }
            Plan::GateSweep {
                gate,
                mode,
                values,
                f: cfg.get_f64("gate", "f")?.unwrap_or(1.0),
                gamma: cfg.require_f64("gate", "gamma")?,
                rwa: cfg.get_bool("gate", "rwa")?.unwrap_or(false),
                n_states: cfg.get_usize("gate", "n_states")?.unwrap_or(12),
            }
        }
        "fibonacci-dump" => Plan::FibonacciDump {
            n: cfg.get_usize("fibonacci", "n")?.unwrap_or(100),
        },
        other => return Err(cfg_err(format!("unknown experiment `{other}`"))),
    };
    Ok(plan)
}

impl Plan {
    /// Static validation report: echoes derived quantities for review.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        match self {
            Plan::PosteriorDemo {
                model, grid, t0, n, ..
            } => {
                out += &format!(
                    "posterior-demo: {n} outcomes at T0 = {t0}\n{}",
                    describe_model(model, grid.t_min(), grid.t_max())
                );
            }
            Plan::MseSweep {
                model,
                grid,
                t0_list,
                checkpoints,
                trials,
                ..
            } => {
                out += &format!(
                    "mse-sweep: T0 in {t0_list:?}, checkpoints {checkpoints:?}, {trials} trials\n{}",
                    describe_model(model, grid.t_min(), grid.t_max())
                );
            }
            Plan::CouplingSweep {
                gamma_grid,
                g_list,
                intervals,
                ..
            } => {
                out += &format!(
                    "coupling-sweep: {} bath couplings x {} probe couplings over {} interval(s)\n",
                    gamma_grid.len(),
                    g_list.len(),
                    intervals.len()
                );
                for (d, lo, hi) in intervals {
                    out += &format!("  interval [{lo}, {hi}] (delta = {d})\n");
                }
            }
            Plan::ProbeNoise {
                ideal,
                grid,
                tp_list,
                q,
                ..
            } => {
                out += &format!(
                    "probe-noise: T_p in {tp_list:?}, preparation weight q = {q}\n{}",
                    describe_model(ideal, grid.t_min(), grid.t_max())
                );
            }
            Plan::QfiTable {
                omega,
                gamma_list,
                grid,
            } => {
                out += &format!(
                    "qfi-table: omega = {omega}, couplings {gamma_list:?}, T in [{}, {}]\n",
                    grid.t_min(),
                    grid.t_max()
                );
            }
            Plan::MutualInfo {
                g_list,
                t0,
                max_gap,
                ..
            } => {
                out +=
                    &format!("mutual-info: couplings {g_list:?}, T = {t0}, gaps 1..={max_gap}\n");
            }
            Plan::GateSweep {
                gate,
                mode,
                values,
                f,
                gamma,
                rwa,
                n_states,
            } => {
                out += &format!(
                    "gate-sweep: {gate} over {mode} values {values:?} (f = {f}, gamma = {gamma}, rwa = {rwa}, {n_states} input states)\n"
                );
                if mode == "beta" {
                    let b0 = values[0] * f;
                    out += &format!(
                        "  derived: pulse window 40/beta = {} at the first point; spacing 10/beta = {}\n",
                        fmt_f64(40.0 / b0),
                        fmt_f64(10.0 / b0)
                    );
                }
            }
            Plan::FibonacciDump { n } => {
                out += &format!("fibonacci-dump: {n} lattice points\n");
            }
        }
        out
    }

    pub fn run(&self, seed: u64, csv: &mut CsvWriter) -> Result<serde_json::Value> {
        match self {
            Plan::PosteriorDemo {
                model,
                grid,
                prior,
                t0,
                n,
            } => {
                let record = sample_trajectory(*t0, *n, model, seed)?;
                let mut post = PosteriorGrid::new(grid.clone(), prior.clone())?;
                let lik = |x: u8, t: f64| likelihood(x, t, model).expect("grid likelihood");
                let est0 = post.point_estimates();
                csv.row_f64(&[0.0, est0.ba, est0.map, est0.median, est0.variance]);
                for (i, &bit) in record.bits.iter().enumerate() {
                    post.update(bit, &lik)?;
                    let e = post.point_estimates();
                    csv.row_f64(&[(i + 1) as f64, e.ba, e.map, e.median, e.variance]);
                }
                let e = post.point_estimates();
                Ok(json!({
                    "t0": t0,
                    "final_ba": e.ba,
                    "final_sigma": e.variance.sqrt(),
                    "pull": (e.ba - t0) / e.variance.sqrt(),
                }))
            }
            Plan::MseSweep {
                model,
                grid,
                prior,
                t0_list,
                checkpoints,
                trials,
            } => {
                let gm = GridModel::tabulate(grid, |x, t| likelihood(x, t, model).unwrap())?;
                let pmf = model.likelihood_pmf();
                let mut summary = Vec::new();
                for (i, &t0) in t0_list.iter().enumerate() {
                    let gen_p1 = likelihood(1, t0, model)?;
                    let curve = mse_monte_carlo(
                        t0,
                        gen_p1,
                        checkpoints,
                        *trials,
                        &gm,
                        prior,
                        grid,
                        seed.wrapping_add(i as u64),
                    )?;
                    let fi = classical_fi(&pmf, t0, 1e-5 * t0.max(1.0))?;
                    for pt in &curve {
                        let crb = if pt.n > 0 {
                            1.0 / (pt.n as f64 * fi)
                        } else {
                            f64::INFINITY
                        };
                        csv.row_f64(&[t0, pt.n as f64, pt.value, pt.se, crb]);
                    }
                    let last = curve.last().context("empty checkpoint list")?;
                    summary.push(json!({
                        "t0": t0,
                        "final_n": last.n,
                        "mse_times_nf": last.value * last.n as f64 * fi,
                    }));
                }
                Ok(json!({ "per_t0": summary }))
            }
            Plan::CouplingSweep {
                omega,
                gamma_grid,
                g_list,
                alpha,
                n_points,
                intervals,
            } => {
                let mut argmin = Vec::new();
                for &(delta, lo, hi) in intervals {
                    let grid = TemperatureGrid::new(lo, hi, *n_points)
                        .map_err(|e| anyhow!("interval [{lo}, {hi}]: {e}"))?;
                    let prior = prior_evaluate(&PriorSpec::lambda_alpha(*alpha), &grid)?;
                    let sweep = coupling_sweep(*omega, gamma_grid, g_list, &prior, &grid)?;
                    for cell in &sweep.cells {
                        csv.row_f64(&[cell.g_tau_sa, delta, cell.gamma_tau_se, cell.e_inv_f]);
                    }
                    for &(g, best_gamma, best_value) in &sweep.argmin {
                        argmin.push(json!({
                            "g_tau_sa": g,
                            "delta": delta,
                            "gamma_tau_se_opt": best_gamma,
                            "min_e_inv_f": best_value,
                        }));
                    }
                }
                Ok(json!({ "argmin": argmin }))
            }
            Plan::ProbeNoise {
                ideal,
                grid,
                prior,
                tp_list,
                q,
                t0,
                checkpoints,
                trials,
                fi_points,
            } => {
                // part 1: Fisher information vs T for each probe temperature
                let coarse = TemperatureGrid::new(grid.t_min(), grid.t_max(), *fi_points)?;
                let f_ideal: Vec<f64> = coarse
                    .points()
                    .iter()
                    .map(|&t| classical_fi(&ideal.likelihood_pmf(), t, 1e-5 * t.max(1.0)).unwrap())
                    .collect();
                for (k, &t) in coarse.points().iter().enumerate() {
                    csv.row(&[
                        "fi".into(),
                        fmt_f64(0.0),
                        fmt_f64(t),
                        fmt_f64(f_ideal[k]),
                        String::new(),
                    ]);
                }
                let mut convexity_ok = true;
                for &tp in tp_list {
                    let noisy = CollisionalParams::new(
                        ideal.omega,
                        ideal.gamma_tau_se,
                        ideal.g_tau_sa,
                        ProbePrep::Thermal(tp),
                    )?;
                    for (k, &t) in coarse.points().iter().enumerate() {
                        let fi = classical_fi(&noisy.likelihood_pmf(), t, 1e-5 * t.max(1.0))?;
                        convexity_ok &= fi <= f_ideal[k] + 1e-9;
                        csv.row(&[
                            "fi".into(),
                            fmt_f64(tp),
                            fmt_f64(t),
                            fmt_f64(fi),
                            String::new(),
                        ]);
                    }
                }
                // part 2: systematic preparation error, inference with the
                // ideal model
                let gen = CollisionalParams::new(
                    ideal.omega,
                    ideal.gamma_tau_se,
                    ideal.g_tau_sa,
                    ProbePrep::Mixture(*q),
                )?;
                let gm = GridModel::tabulate(grid, |x, t| likelihood(x, t, ideal).unwrap())?;
                let gen_p1 = likelihood(1, *t0, &gen)?;
                let curve =
                    mse_monte_carlo(*t0, gen_p1, checkpoints, *trials, &gm, prior, grid, seed)?;
                let fi0 = classical_fi(&ideal.likelihood_pmf(), *t0, 1e-5 * t0.max(1.0))?;
                for pt in &curve {
                    let crb = 1.0 / (pt.n.max(1) as f64 * fi0);
                    csv.row(&[
                        "mse".into(),
                        fmt_f64(*q),
                        fmt_f64(pt.n as f64),
                        fmt_f64(pt.value),
                        fmt_f64(crb),
                    ]);
                }
                let last = curve.last().context("empty checkpoints")?;
                Ok(json!({
                    "fi_convexity_holds": convexity_ok,
                    "plateau_mse": last.value,
                    "plateau_over_crb": last.value * last.n as f64 * fi0,
                }))
            }
            Plan::QfiTable {
                omega,
                gamma_list,
                grid,
            } => {
                let h = CMat::diag_real(&[omega / 2.0, -omega / 2.0]);
                let mut worst: f64 = 0.0;
                for &g in gamma_list {
                    let p = CollisionalParams::full_swap(*omega, g)?;
                    let fam = ParamStateFamily::new(move |t: f64| {
                        qestlab_core::collisional::ancilla_state(t, &p).unwrap()
                    });
                    for &t in grid.points() {
                        let tfi = thermal_fi(&h, t)?;
                        let f = qfi(&fam, t, 0.0)?;
                        let closed = qestlab_core::collisional::qfi_ratio(t, &p)?;
                        worst = worst.max((f / tfi - closed).abs());
                        csv.row_f64(&[g, t, tfi, f, f / tfi, closed]);
                    }
                }
                Ok(json!({ "max_ratio_deviation": worst }))
            }
            Plan::MutualInfo {
                omega,
                gamma_tau_se,
                g_list,
                t0,
                max_gap,
            } => {
                let mut fits = Vec::new();
                for &g in g_list {
                    let p = CollisionalParams::new(*omega, *gamma_tau_se, g, ProbePrep::Ground)?;
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for gap in 1..=*max_gap {
                        let mi = mutual_information(gap, *t0, &p)?;
                        csv.row_f64(&[g, gap as f64, mi]);
                        if mi > 0.0 {
                            xs.push(gap as f64);
                            ys.push(mi.ln());
                        }
                    }
                    if xs.len() >= 2 {
                        let (_, slope, r2) = linear_fit(&xs, &ys);
                        fits.push(json!({ "g_tau_sa": g, "slope": slope, "r2": r2 }));
                    } else {
                        fits.push(json!({ "g_tau_sa": g, "slope": null, "r2": null }));
                    }
                }
                Ok(json!({ "log_linear_fits": fits }))
            }
            Plan::GateSweep {
                gate,
                mode,
                values,
                f,
                gamma,
                rwa,
                n_states,
            } => {
                let mut best = (f64::INFINITY, 0.0f64);
                for &v in values {
                    let (mean, max, min) = if *gate == "cz" {
                        let cfg = TwoQubitConfig::cz(v * f, *f, *gamma, *rwa);
                        let inputs = plus_minus_states::<f64>();
                        let infs: Vec<f64> = inputs
                            .iter()
                            .map(|s| two_qubit_infidelity(&cfg, s))
                            .collect::<std::result::Result<_, _>>()?;
                        let mean = infs.iter().sum::<f64>() / infs.len() as f64;
                        (
                            mean,
                            infs.iter().cloned().fold(f64::MIN, f64::max),
                            infs.iter().cloned().fold(f64::MAX, f64::min),
                        )
                    } else {
                        let prog = match mode.as_str() {
                            "beta" => single_qubit_program(gate, v * f, *f, *gamma, *rwa),
                            _ => {
                                // frequency-ratio sweep at fixed beta = 1
                                let mut p = single_qubit_program(gate, 1.0, *f, *gamma, *rwa);
                                p.f_e1 = v * p.f_e0;
                                p
                            }
                        };
                        let stats = average_infidelity(&prog, *n_states)?;
                        (stats.mean, stats.max, stats.min)
                    };
                    if mean < best.0 {
                        best = (mean, v);
                    }
                    csv.row_f64(&[v, mean, max, min]);
                }
                Ok(json!({ "argmin_value": best.1, "min_mean_infidelity": best.0 }))
            }
            Plan::FibonacciDump { n } => {
                let states = fibonacci_states::<f64>(*n)?;
                let mut avg = [0.0f64; 3];
                for (k, s) in states.iter().enumerate() {
                    let a = s.amplitudes();
                    let x = 2.0 * (a[0].conj() * a[1]).re;
                    let y = 2.0 * (a[0].conj() * a[1]).im;
                    let z = a[0].norm_sqr() - a[1].norm_sqr();
                    avg[0] += x;
                    avg[1] += y;
                    avg[2] += z;
                    csv.row_f64(&[(k + 1) as f64, x, y, z]);
                }
                let norm = (avg.iter().map(|v| v * v).sum::<f64>()).sqrt() / states.len() as f64;
                Ok(json!({ "mean_bloch_norm": norm }))
            }
        }
    }

    pub fn csv_header(&self) -> Vec<&'static str> {
        match self {
            Plan::PosteriorDemo { .. } => {
                vec![
                    "n [outcomes]",
                    "ba [Omega]",
                    "map [Omega]",
                    "median [Omega]",
                    "variance [Omega^2]",
                ]
            }
            Plan::MseSweep { .. } => {
                vec![
                    "t0 [Omega]",
                    "n [outcomes]",
                    "mse [Omega^2]",
                    "mse_se [Omega^2]",
                    "crb [Omega^2]",
                ]
            }
            Plan::CouplingSweep { .. } => {
                vec![
                    "g_tau_sa [rad]",
                    "delta [Omega]",
                    "gamma_tau_se [1]",
                    "e_inv_f [Omega^2]",
                ]
            }
            Plan::ProbeNoise { .. } => vec![
                "series [fi|mse]",
                "tp_or_q [Omega|1]",
                "t_or_n [Omega|outcomes]",
                "fi_or_mse [1/Omega^2|Omega^2]",
                "crb [Omega^2]",
            ],
            Plan::QfiTable { .. } => vec![
                "gamma_tau_se [1]",
                "t [Omega]",
                "thermal_fi [1/Omega^2]",
                "qfi [1/Omega^2]",
                "ratio [1]",
                "ratio_closed_form [1]",
            ],
            Plan::MutualInfo { .. } => {
                vec!["g_tau_sa [rad]", "gap [collisions]", "mutual_info [nat]"]
            }
            Plan::GateSweep { .. } => {
                vec![
                    "value [beta/f or f1/f0]",
                    "mean_infidelity [1]",
                    "max_infidelity [1]",
                    "min_infidelity [1]",
                ]
            }
            Plan::FibonacciDump { .. } => vec!["k [index]", "x [1]", "y [1]", "z [1]"],
        }
    }
}

fn describe_model(p: &CollisionalParams<f64>, t_min: f64, t_max: f64) -> String {
    format!(
        "  model: omega = {}, gamma_tau_se = {}, g_tau_sa = {} (full swap: {})\n  derived: nbar in [{:.6}, {:.6}], Gamma in [{:.6}, {:.6}] over T in [{t_min}, {t_max}]\n",
        p.omega,
        p.gamma_tau_se,
        p.g_tau_sa,
        p.is_full_swap(),
        p.nbar(t_min),
        p.nbar(t_max),
        p.big_gamma(t_min),
        p.big_gamma(t_max),
    )
}
