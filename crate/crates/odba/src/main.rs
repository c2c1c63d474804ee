//! Command-line front end: verification suites, benchmark tables, root
//! solves, thermodynamic series, and scaling fits, emitted as versioned
//! JSON or plot-ready CSV.
//!
//! Every command is deterministic for a fixed seed: random spectral
//! points flow from one seeded generator, parallel work is aggregated in
//! sorted order, and JSON objects serialize with sorted keys, so a rerun
//! is byte-identical.  Exit codes: 0 on success, 1 when a scientific
//! check fails, 2 on configuration errors.

use clap::{ArgAction, Parser, Subcommand};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use spinchain::bae_engine::{
    benchmark_states_2n4, energy_from_roots, homogeneous_energy, inhomogeneous_contribution,
    newton_polish, relative_bae_residual, solve_log_bae, QuantumNumbers,
};
use spinchain::ed_spectrum::full_spectrum;
use spinchain::operator_core::{hermitian_eigs, lanczos_extremal, max_abs, Extremal};
use spinchain::string_analysis::{
    bae_u_residual, fit_exponential, solve_string_ground, string_energy_thermo,
    twisted_boundary_j_minus,
};
use spinchain::thermo_limit::{
    ground_state_energy_thermo, periodic_ground_energy, twisted_boundary_energy_j1,
};
use spinchain::transfer_chain::{
    hamiltonian_direct, hamiltonian_from_transfer, hamiltonian_terms, transfer, transfer_hat,
    Boundary,
};
use spinchain::yang_baxter::{r_local, verify_r_identities, verify_ybe_with};
use spinchain::ModelParams;

#[derive(Parser)]
#[command(
    name = "odba",
    about = "Numerical laboratory for the antiperiodic anisotropic spin chain",
    version
)]
struct Cli {
    /// Chain length 2N (even, at least 4)
    #[arg(long, global = true, default_value_t = 4)]
    sites: usize,
    /// Crossing parameter
    #[arg(long, global = true, default_value_t = 1.0)]
    eta: f64,
    /// Staggering strength (the inhomogeneity is ib)
    #[arg(long, global = true, default_value_t = 0.3)]
    b: f64,
    /// Overall coupling, +1 or -1
    #[arg(long, global = true, default_value_t = 1.0, allow_hyphen_values = true)]
    coupling: f64,
    /// Numerical tolerance handed to solvers and series truncation
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Output file; .csv emits CSV, anything else JSON. Default: stdout JSON
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every randomized choice
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads for parallel sections
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the defining identities of the integrable structure
    Verify {
        /// Random spectral points per identity
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Corrupt one R-matrix entry first (negative control)
        #[arg(long, hide = true, action = ArgAction::SetTrue)]
        corrupt_r: bool,
    },
    /// Full dense spectrum with degeneracy multiplicities
    Spectrum,
    /// Reproduce the 16-state benchmark table at 4 sites
    Table1 {
        /// Polish the root sets from a previous table run instead of
        /// the built-in seeds
        #[arg(long)]
        roots_in: Option<PathBuf>,
    },
    /// Solve the logarithmic root equations for the ground state
    Bae,
    /// Ground-state energy and its exactly solvable description
    Ground,
    /// Thermodynamic-limit energies from the truncated series
    Thermo,
    /// Solve the ladder configuration that carries the coupling -1 ground state
    Strings,
    /// Fit the finite-size decay of energy gaps over a size list
    Scaling {
        /// Comma-separated even chain lengths
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
}

/// Scientific-check failure: report written, exit code 1.
struct CheckFailure;

enum RunError {
    Config(String),
    Check(CheckFailure),
}

impl From<CheckFailure> for RunError {
    fn from(c: CheckFailure) -> Self {
        RunError::Check(c)
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Config(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ODBA_LOG")).init();
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Check(_)) => ExitCode::from(1),
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), RunError> {
    if cli.tol <= 0.0 || !cli.tol.is_finite() {
        return Err(RunError::Config(format!("tolerance must be positive, got {}", cli.tol)));
    }
    let params =
        ModelParams::new(cli.sites, cli.eta, cli.b, cli.coupling).map_err(config_err)?;
    match &cli.command {
        Command::Verify { points, corrupt_r } => cmd_verify(cli, &params, *points, *corrupt_r),
        Command::Spectrum => cmd_spectrum(cli, &params),
        Command::Table1 { roots_in } => cmd_table1(cli, roots_in.as_deref()),
        Command::Bae => cmd_bae(cli, &params),
        Command::Ground => cmd_ground(cli, &params),
        Command::Thermo => cmd_thermo(cli, &params),
        Command::Strings => cmd_strings(cli, &params),
        Command::Scaling { sizes } => cmd_scaling(cli, &params, sizes),
    }
}

fn params_json(cli: &Cli, params: &ModelParams) -> Value {
    json!({
        "sites": params.sites,
        "eta": params.eta,
        "b": params.b,
        "coupling": params.coupling,
        "tol": cli.tol,
        "seed": cli.seed,
    })
}

fn complex_json(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

/// Writes the report to --out (CSV when the extension says so) or
/// stdout.  `csv_rows` carries (header, rows) for the CSV rendering.
fn emit(
    cli: &Cli,
    report: &Value,
    csv_rows: Option<(&[&str], Vec<Vec<String>>)>,
) -> Result<(), RunError> {
    match &cli.out {
        Some(path) if path.extension().is_some_and(|e| e == "csv") => {
            let (header, rows) = csv_rows.ok_or_else(|| {
                RunError::Config("this command has no CSV rendering".into())
            })?;
            let mut w = csv::Writer::from_path(path).map_err(config_err)?;
            w.write_record(header).map_err(config_err)?;
            for row in rows {
                w.write_record(&row).map_err(config_err)?;
            }
            w.flush().map_err(config_err)?;
        }
        Some(path) => {
            let text = serde_json::to_string_pretty(report).map_err(config_err)?;
            std::fs::write(path, text + "\n").map_err(config_err)?;
        }
        None => {
            let text = serde_json::to_string_pretty(report).map_err(config_err)?;
            println!("{text}");
        }
    }
    Ok(())
}

fn cmd_verify(
    cli: &Cli,
    params: &ModelParams,
    points: usize,
    corrupt_r: bool,
) -> Result<(), RunError> {
    if params.sites > 6 {
        return Err(RunError::Config(format!(
            "operator-level checks are dense; use --sites 4 or 6, got {}",
            params.sites
        )));
    }
    if points == 0 {
        return Err(RunError::Config("--points must be at least 1".into()));
    }
    let eta = C64::new(params.eta, 0.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
    };
    let spectral: Vec<[C64; 3]> = (0..points)
        .map(|_| [draw(&mut rng), draw(&mut rng), draw(&mut rng)])
        .collect();

    // deliberately scaled (0,1) entry; breaks YBE but nothing else we test
    let r_used = move |u: C64, e: C64| {
        let mut r = r_local(u, e);
        if corrupt_r {
            r.m[(0, 1)] += C64::new(1e-3, 0.0);
            r.m[(1, 2)] *= C64::new(1.0 + 1e-3, 0.0);
        }
        r
    };

    let mut checks: Vec<(String, f64)> = Vec::new();

    let local: Vec<(f64, f64, f64, f64, f64)> = spectral
        .par_iter()
        .map(|pts| {
            let rep = verify_r_identities(pts[0], eta);
            let ybe = verify_ybe_with(pts[0], pts[1], pts[2], eta, &r_used);
            (rep.initial, rep.unitary, rep.crossing, rep.pt, ybe)
        })
        .collect();
    let fold = |f: fn(&(f64, f64, f64, f64, f64)) -> f64| {
        local.iter().map(f).fold(0.0f64, f64::max)
    };
    checks.push(("r_initial_condition".into(), fold(|t| t.0)));
    checks.push(("r_unitarity".into(), fold(|t| t.1)));
    checks.push(("r_crossing".into(), fold(|t| t.2)));
    checks.push(("r_pt_symmetry".into(), fold(|t| t.3)));
    checks.push(("yang_baxter".into(), fold(|t| t.4)));

    // twist compatibility: R commutes with sigma^x tensor sigma^x
    use spinchain::operator_core::{sigma_x, LocalOperator};
    let xx = LocalOperator::kron(&sigma_x(), &sigma_x()).m;
    let twist = spectral
        .iter()
        .map(|pts| {
            let r = r_used(pts[0], eta).m;
            (r * xx - xx * r).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0f64, f64::max);
    checks.push(("twist_commutation".into(), twist));

    // permutation commutator identity behind the Hamiltonian expansion:
    // [P R'(u), xx] vanishes at u = 0 where R'(0) acts through P
    let perm = spectral
        .iter()
        .map(|pts| {
            let u = pts[1];
            let p = LocalOperator::permutation().m;
            let r = r_used(u, eta).m;
            let pr = p * r;
            let rp = r * p;
            // P R12(u) P = R21(u) and PT symmetry make these transposes
            (pr.transpose() - rp).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0f64, f64::max);
    checks.push(("permutation_transpose".into(), perm));

    // transfer-matrix level: commuting family and the crossing image
    let scale = params.dim() as f64;
    let family: Vec<(f64, f64)> = spectral
        .par_iter()
        .take(points.min(8))
        .map(|pts| {
            let (u, v) = (pts[0], pts[1]);
            let tu = transfer(u, params).unwrap();
            let tv = transfer(v, params).unwrap();
            let comm = max_abs(&(tu.mat() * tv.mat() - tv.mat() * tu.mat()))
                / (1.0 + max_abs(tu.mat()) * max_abs(tv.mat()));
            let hat = transfer_hat(u, params).unwrap();
            let minus = transfer(-u - eta, params).unwrap();
            let cross = max_abs(&(hat.mat() + minus.mat())) / (1.0 + max_abs(minus.mat()));
            (comm, cross / scale)
        })
        .collect();
    checks.push((
        "transfer_commutation".into(),
        family.iter().map(|t| t.0).fold(0.0f64, f64::max),
    ));
    checks.push((
        "transfer_crossing".into(),
        family.iter().map(|t| t.1).fold(0.0f64, f64::max),
    ));

    let hd = hamiltonian_direct(params).map_err(config_err)?;
    let ht = hamiltonian_from_transfer(params).map_err(config_err)?;
    let hres = max_abs(&(ht.mat() - hd.mat())) / max_abs(hd.mat());
    checks.push(("hamiltonian_from_transfer".into(), hres));

    let tol = 1e-11f64.max(cli.tol);
    let mut all_pass = true;
    let results: Vec<Value> = checks
        .iter()
        .map(|(name, res)| {
            let pass = *res <= tol;
            all_pass &= pass;
            json!({"check": name, "residual": res, "pass": pass})
        })
        .collect();
    let residuals: Value = checks
        .iter()
        .map(|(name, res)| (name.clone(), json!(res)))
        .collect::<serde_json::Map<_, _>>()
        .into();
    let report = json!({
        "schema_version": 1,
        "command": "verify",
        "params": params_json(cli, params),
        "points": points,
        "results": results,
        "residuals": residuals,
        "pass": all_pass,
    });
    let rows = checks
        .iter()
        .map(|(name, res)| vec![name.clone(), format!("{res:e}"), (*res <= tol).to_string()])
        .collect();
    emit(cli, &report, Some((&["check", "residual", "pass"], rows)))?;
    if all_pass {
        Ok(())
    } else {
        Err(CheckFailure.into())
    }
}

fn cmd_spectrum(cli: &Cli, params: &ModelParams) -> Result<(), RunError> {
    let record = full_spectrum(params).map_err(config_err)?;
    let results: Vec<Value> = record
        .energies
        .iter()
        .zip(&record.multiplicities)
        .map(|(e, m)| json!({"energy": e, "multiplicity": m}))
        .collect();
    let report = json!({
        "schema_version": 1,
        "command": "spectrum",
        "params": params_json(cli, params),
        "results": results,
        "residuals": {},
    });
    let rows = record
        .energies
        .iter()
        .zip(&record.multiplicities)
        .map(|(e, m)| vec![format!("{e:.12}"), m.to_string()])
        .collect();
    emit(cli, &report, Some((&["energy", "multiplicity"], rows)))
}

fn parse_roots_file(path: &Path) -> Result<Vec<Vec<C64>>, RunError> {
    let text = std::fs::read_to_string(path).map_err(config_err)?;
    let value: Value = serde_json::from_str(&text).map_err(config_err)?;
    let results = value
        .get("results")
        .and_then(Value::as_array)
        .ok_or_else(|| RunError::Config(format!("{} has no results array", path.display())))?;
    results
        .iter()
        .map(|row| {
            let roots = row
                .get("roots")
                .and_then(Value::as_array)
                .ok_or_else(|| RunError::Config("row without roots".into()))?;
            roots
                .iter()
                .map(|z| {
                    let re = z.get("re").and_then(Value::as_f64);
                    let im = z.get("im").and_then(Value::as_f64);
                    match (re, im) {
                        (Some(re), Some(im)) => Ok(C64::new(re, im)),
                        _ => Err(RunError::Config("malformed complex entry".into())),
                    }
                })
                .collect()
        })
        .collect()
}

fn cmd_table1(cli: &Cli, roots_in: Option<&Path>) -> Result<(), RunError> {
    // the benchmark table is pinned to one parameter point
    let params = ModelParams::new(4, 1.0, 1.0, 1.0).map_err(config_err)?;
    if cli.sites != 4 {
        return Err(RunError::Config(format!(
            "the benchmark table is defined at 4 sites, got --sites {}",
            cli.sites
        )));
    }
    let seeds: Vec<(Vec<C64>, Option<f64>)> = match roots_in {
        Some(path) => parse_roots_file(path)?
            .into_iter()
            .map(|r| (r, None))
            .collect(),
        None => benchmark_states_2n4()
            .into_iter()
            .map(|(r, e)| (r, Some(e)))
            .collect(),
    };
    if seeds.len() != 16 {
        return Err(RunError::Config(format!(
            "expected 16 root sets, got {}",
            seeds.len()
        )));
    }

    let spectrum = full_spectrum(&params).map_err(config_err)?;
    let mut levels: Vec<f64> = Vec::new();
    for (e, m) in spectrum.energies.iter().zip(&spectrum.multiplicities) {
        levels.extend(std::iter::repeat_n(*e, *m));
    }

    // fresh seeds get the tight gate; reloaded roots a slightly looser
    // one, so a set already at convergence is returned untouched even
    // though strip normalization shifted its residual by an ulp
    let polish_tol = if roots_in.is_some() { 1e-10 } else { 1e-11 };
    let mut rows: Vec<(usize, Vec<C64>, f64, f64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(idx, (seed, _))| {
            let polished = newton_polish(seed, &params, polish_tol, 60)
                .map_err(|e| RunError::Config(format!("state {idx}: {e}")))?;
            let residual = relative_bae_residual(&polished.lambdas, &params)
                .into_iter()
                .fold(0.0f64, f64::max);
            let energy = energy_from_roots(&polished)
                .map_err(|e| RunError::Config(format!("state {idx}: {e}")))?;
            Ok((idx, polished.lambdas, energy, residual))
        })
        .collect::<Result<_, RunError>>()?;
    rows.sort_by_key(|r| r.0);

    // greedy match of table energies against the dense levels
    let mut used = vec![false; levels.len()];
    let mut all_matched = true;
    let mut results: Vec<Value> = Vec::new();
    let mut csv_rows: Vec<Vec<String>> = Vec::new();
    for (idx, lambdas, energy, residual) in &rows {
        let mut best: Option<(usize, f64)> = None;
        for (k, level) in levels.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (energy - level).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        let (ed_energy, matched) = match best {
            Some((k, d)) if d <= 5e-4 => {
                used[k] = true;
                (levels[k], true)
            }
            Some((k, _)) => (levels[k], false),
            None => (f64::NAN, false),
        };
        all_matched &= matched;
        let reference = benchmark_states_2n4()[*idx].1;
        results.push(json!({
            "state": idx,
            "roots": lambdas.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "energy": energy,
            "reference_energy": reference,
            "ed_energy": ed_energy,
            "bae_residual": residual,
            "matched": matched,
        }));
        let mut row = vec![idx.to_string()];
        for z in lambdas {
            row.push(format!("{:.10}", z.re));
            row.push(format!("{:.10}", z.im));
        }
        row.extend([
            format!("{energy:.10}"),
            format!("{ed_energy:.10}"),
            format!("{residual:e}"),
            matched.to_string(),
        ]);
        csv_rows.push(row);
    }

    let worst_residual = rows.iter().map(|r| r.3).fold(0.0f64, f64::max);
    let report = json!({
        "schema_version": 1,
        "command": "table1",
        "params": params_json(cli, &params),
        "results": results,
        "residuals": {"worst_bae_residual": worst_residual},
        "pass": all_matched,
    });
    let header = [
        "state",
        "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im",
        "lambda3_re", "lambda3_im", "lambda4_re", "lambda4_im",
        "energy", "ed_energy", "bae_residual", "matched",
    ];
    emit(cli, &report, Some((&header, csv_rows)))?;
    if all_matched {
        Ok(())
    } else {
        Err(CheckFailure.into())
    }
}

fn cmd_bae(cli: &Cli, params: &ModelParams) -> Result<(), RunError> {
    let n = params.n();
    let qn = QuantumNumbers::ground(n);
    let sol = solve_log_bae(&qn, params, n).map_err(config_err)?;
    let e_h = homogeneous_energy(&sol);
    let results: Vec<Value> = sol
        .u
        .iter()
        .zip(&sol.quantum_numbers.i)
        .map(|(u, i)| json!({"quantum_number": i, "u": u}))
        .collect();
    let report = json!({
        "schema_version": 1,
        "command": "bae",
        "params": params_json(cli, params),
        "results": results,
        "holes": sol.hole_positions,
        "homogeneous_energy": e_h,
        "energy_per_site": e_h / params.sites as f64,
        "residuals": {},
    });
    let rows = sol
        .u
        .iter()
        .zip(&sol.quantum_numbers.i)
        .map(|(u, i)| vec![format!("{i}"), format!("{u:.14}")])
        .collect();
    emit(cli, &report, Some((&["quantum_number", "u"], rows)))
}

fn cmd_ground(cli: &Cli, params: &ModelParams) -> Result<(), RunError> {
    let ed = if params.sites <= 10 {
        let dense = hamiltonian_direct(params).map_err(config_err)?;
        hermitian_eigs(&dense).map_err(config_err)?.values[0]
    } else {
        let compiled = hamiltonian_terms(params, Boundary::Antiperiodic).compile();
        // the coupling -1 ground doublet is nearly degenerate, which
        // caps how far Lanczos can push the residual
        let floor = if params.coupling == -1.0 { 1e-6 } else { 1e-10 };
        lanczos_extremal(&compiled, Extremal::Lowest, cli.tol.max(floor), cli.seed)
            .map_err(config_err)?
            .value
    };
    let mut report = json!({
        "schema_version": 1,
        "command": "ground",
        "params": params_json(cli, params),
        "results": [{"ground_energy": ed, "per_site": ed / params.sites as f64}],
        "residuals": {},
    });
    let mut rows = vec![vec![
        "ground_energy".to_string(),
        format!("{ed:.12}"),
    ]];
    if params.coupling == 1.0 {
        let n = params.n();
        let sol = solve_log_bae(&QuantumNumbers::ground(n), params, n).map_err(config_err)?;
        let e_h = homogeneous_energy(&sol);
        report["homogeneous_energy"] = json!(e_h);
        report["inhomogeneous_contribution"] = json!(e_h - ed);
        rows.push(vec!["homogeneous_energy".into(), format!("{e_h:.12}")]);
        rows.push(vec![
            "inhomogeneous_contribution".into(),
            format!("{:.12}", e_h - ed),
        ]);
    } else {
        let cfg = solve_string_ground(params).map_err(config_err)?;
        report["string_energy"] = json!(cfg.energy);
        report["string_energy_mismatch"] = json!((cfg.energy - ed).abs());
        rows.push(vec!["string_energy".into(), format!("{:.12}", cfg.energy)]);
    }
    emit(cli, &report, Some((&["quantity", "value"], rows)))
}

fn cmd_thermo(cli: &Cli, params: &ModelParams) -> Result<(), RunError> {
    let ground = ground_state_energy_thermo(params, cli.tol).map_err(config_err)?;
    let periodic = periodic_ground_energy(params, cli.tol).map_err(config_err)?;
    let twisted = twisted_boundary_energy_j1(params, cli.tol).map_err(config_err)?;
    let entries = [
        ("ground", &ground),
        ("periodic", &periodic),
        ("twisted_boundary", &twisted),
    ];
    let results: Vec<Value> = entries
        .iter()
        .map(|(name, s)| {
            json!({
                "quantity": name,
                "value": s.value,
                "per_site": s.value / params.sites as f64,
                "truncation_order": s.truncation_order,
                "tail_bound": s.tail_bound,
            })
        })
        .collect();
    let report = json!({
        "schema_version": 1,
        "command": "thermo",
        "params": params_json(cli, params),
        "results": results,
        "residuals": {"tail_bound": ground.tail_bound},
    });
    let rows = entries
        .iter()
        .map(|(name, s)| {
            vec![
                name.to_string(),
                format!("{:.14}", s.value),
                s.truncation_order.to_string(),
                format!("{:e}", s.tail_bound),
            ]
        })
        .collect();
    emit(
        cli,
        &report,
        Some((&["quantity", "value", "truncation_order", "tail_bound"], rows)),
    )
}

fn cmd_strings(cli: &Cli, params: &ModelParams) -> Result<(), RunError> {
    if params.coupling != -1.0 {
        return Err(RunError::Config(format!(
            "string configurations exist at coupling -1, got {}",
            params.coupling
        )));
    }
    let cfg = solve_string_ground(params).map_err(config_err)?;
    let rel = bae_u_residual(&cfg.roots, params)
        .relative
        .into_iter()
        .fold(0.0f64, f64::max);
    let closed = string_energy_thermo(params);
    let results: Vec<Value> = cfg
        .roots
        .iter()
        .zip(&cfg.deviations)
        .map(|(r, d)| {
            json!({
                "root": complex_json(*r),
                "deviation": complex_json(*d),
            })
        })
        .collect();
    let report = json!({
        "schema_version": 1,
        "command": "strings",
        "params": params_json(cli, params),
        "center": cfg.x0,
        "energy": cfg.energy,
        "closed_form_energy": closed,
        "twist_shift": twisted_boundary_j_minus(params, Some(params.sites)),
        "results": results,
        "residuals": {
            "newton_scaled": cfg.residual,
            "f64_relative": rel,
        },
    });
    let rows = cfg
        .roots
        .iter()
        .zip(&cfg.deviations)
        .map(|(r, d)| {
            vec![
                format!("{:.12}", r.re),
                format!("{:.12}", r.im),
                format!("{:.6e}", d.norm()),
            ]
        })
        .collect();
    emit(cli, &report, Some((&["u_re", "u_im", "deviation"], rows)))
}

fn cmd_scaling(cli: &Cli, params: &ModelParams, sizes: &[usize]) -> Result<(), RunError> {
    if sizes.is_empty() {
        return Err(RunError::Config(
            "--sizes needs at least one chain length".into(),
        ));
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    // per-size gap; errors are recorded, not fatal
    let gaps: Vec<(usize, Result<f64, String>)> = sorted
        .par_iter()
        .map(|&sites| {
            let gap = if sites > spinchain::bae_engine::MAX_COMPARISON_SITES {
                Err(format!(
                    "chain of {sites} sites is beyond Lanczos reach ({} max)",
                    spinchain::bae_engine::MAX_COMPARISON_SITES
                ))
            } else if params.coupling == 1.0 {
                inhomogeneous_contribution(&params.with_sites(sites), &[sites])
                    .map(|v| v[0].1)
                    .map_err(|e| e.to_string())
            } else {
                let p = params.with_sites(sites);
                ModelParams::new(sites, p.eta, p.b, -1.0)
                    .map_err(|e| e.to_string())
                    .and_then(|p| {
                        let compiled =
                            hamiltonian_terms(&p, Boundary::Antiperiodic).compile();
                        lanczos_extremal(&compiled, Extremal::Lowest, 1e-6, cli.seed)
                            .map(|r| string_energy_thermo(&p) - r.value)
                            .map_err(|e| e.to_string())
                    })
            };
            (sites, gap)
        })
        .collect();

    let good: Vec<(usize, f64)> = gaps
        .iter()
        .filter_map(|(s, g)| g.as_ref().ok().map(|v| (*s, *v)))
        .collect();

    // coupling +1 decays as a power of the length, coupling -1
    // exponentially; fit in the matching log variables
    let fit = if good.len() >= 4 {
        if params.coupling == 1.0 {
            let xs: Vec<f64> = good.iter().map(|(s, _)| (*s as f64).ln()).collect();
            let ys: Vec<f64> = good.iter().map(|(_, g)| g.abs().ln()).collect();
            let n = xs.len() as f64;
            let xm = xs.iter().sum::<f64>() / n;
            let ym = ys.iter().sum::<f64>() / n;
            let var: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
            let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
            let rate = cov / var;
            let amp = (ym - rate * xm).exp();
            let rms = (xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let e = y - (amp.ln() + rate * x);
                    e * e
                })
                .sum::<f64>()
                / n)
                .sqrt();
            Some(json!({"form": "power_law", "amplitude": amp, "exponent": rate, "rms": rms}))
        } else {
            let (ss, ds): (Vec<usize>, Vec<f64>) = good.iter().cloned().unzip();
            let f = fit_exponential(&ss, &ds).map_err(config_err)?;
            let n = ss.len() as f64;
            let rms = (ss
                .iter()
                .zip(&ds)
                .map(|(s, d)| {
                    let e = d.ln() - (f.amplitude.ln() + f.rate * *s as f64);
                    e * e
                })
                .sum::<f64>()
                / n)
                .sqrt();
            Some(json!({"form": "exponential", "amplitude": f.amplitude, "rate": f.rate, "rms": rms}))
        }
    } else {
        None
    };

    let results: Vec<Value> = gaps
        .iter()
        .map(|(s, g)| match g {
            Ok(v) => json!({"sites": s, "gap": v}),
            Err(e) => json!({"sites": s, "error": e}),
        })
        .collect();
    let report = json!({
        "schema_version": 1,
        "command": "scaling",
        "params": params_json(cli, params),
        "results": results,
        "fit": fit,
        "residuals": {},
    });
    let rows = gaps
        .iter()
        .map(|(s, g)| match g {
            Ok(v) => vec![s.to_string(), format!("{v:.12e}"), String::new()],
            Err(e) => vec![s.to_string(), String::new(), e.clone()],
        })
        .collect();
    emit(cli, &report, Some((&["sites", "gap", "error"], rows)))?;
    if fit.is_none() {
        return Err(CheckFailure.into());
    }
    Ok(())
}
