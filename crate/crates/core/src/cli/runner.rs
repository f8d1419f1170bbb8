//! Synthetic data, single reconstructions and table sweeps.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigLayer, ExperimentConfig};
use super::presets::{self, TableRow};
use crate::discretization::{assemble_operator, Field, ObservationMask, SpaceTimeField, TimeGrid};
use crate::error::{Error, Result};
use crate::forward::{solve_forward, ProblemSpec};
use crate::fraccalc::FractionalOrder;
use crate::inversion::{estimate_m, iterate, unit_uniform, ReconstructionConfig, ReconstructionResult};
use crate::oracle::Polynomial;

/// Power-iteration steps behind the `m` safeguard.
pub const ESTIMATE_ITERS: usize = 50;
/// Factor applied to the operator-norm estimate by the safeguard.
pub const M_SAFETY: f64 = 1.2;

/// `u^δ = (1 + δ(2U - 1)) u(f_true)` on ω, zero elsewhere. One uniform `U` is
/// drawn per space-time sample inside ω, time-major, from xoshiro256++
/// seeded with `seed`.
pub fn synthesize_observation(
    spec: &ProblemSpec,
    f_true: &Field,
    mask: &ObservationMask,
    delta: f64,
    seed: u64,
) -> Result<SpaceTimeField> {
    if !(delta >= 0.0) {
        return Err(Error::Config(format!("noise level must be non-negative, got {delta}")));
    }
    let mut u = solve_forward(spec, f_true)?;
    let chi = mask.indicator();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for sample in u.values_mut().chunks_mut(chi.len()) {
        for (v, &c) in sample.iter_mut().zip(chi) {
            if c != 0.0 {
                *v *= 1.0 + delta * (2.0 * unit_uniform(&mut rng) - 1.0);
            } else {
                *v = 0.0;
            }
        }
    }
    Ok(u)
}

/// Problem data shared by every run with the same grids and order.
pub fn problem(cfg: &ExperimentConfig) -> Result<ProblemSpec> {
    let grid = cfg.grid()?;
    let tgrid = TimeGrid::new(cfg.t_end, cfg.steps)?;
    ProblemSpec::new(
        FractionalOrder::new(cfg.alpha)?,
        tgrid,
        assemble_operator(grid),
        Polynomial::reference_profile().sample(&tgrid),
    )
}

/// The `(delta, omega, err_percent, K)` summary row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub delta: f64,
    pub omega: String,
    pub err_percent: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub result: ReconstructionResult,
    pub f_true: Field,
    /// `m` actually used by the iteration.
    pub m_used: f64,
    /// Operator-norm estimate, when the safeguard computed one.
    pub m_estimate: Option<f64>,
    pub summary: Summary,
}

/// Full pipeline: synthesize data, reconstruct, and write CSV artifacts when
/// `cfg.output` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let spec = problem(cfg)?;
    let grid = spec.grid();
    let mask = cfg.omega.mask(grid)?;
    let f_true = cfg.f_true.sample(grid)?;
    let u_obs = synthesize_observation(&spec, &f_true, &mask, cfg.delta, cfg.seed)?;
    let (m_used, m_estimate) = if cfg.m_safeguard {
        let est = estimate_m(&spec, &mask, ESTIMATE_ITERS)?;
        (cfg.m.max(M_SAFETY * est), Some(est))
    } else {
        (cfg.m, None)
    };
    let rc = ReconstructionConfig::new(
        cfg.rho,
        m_used,
        cfg.tolerance(),
        Field::constant(grid, cfg.f0),
        cfg.max_iter,
    )?;
    let result = iterate(&spec, &u_obs, &mask, &rc, Some(&f_true))?;
    let summary = Summary {
        delta: cfg.delta,
        omega: cfg.omega.label(cfg.dim),
        err_percent: 100.0 * result.err.unwrap_or(f64::NAN),
        k: result.iterations,
    };
    let outcome = ExperimentOutcome {
        result,
        f_true,
        m_used,
        m_estimate,
        summary,
    };
    if let Some(dir) = &cfg.output {
        write_artifacts(dir, &outcome)?;
    }
    Ok(outcome)
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(fill: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        fill(&mut w)?;
        w.flush()?;
    }
    Ok(buf)
}

/// `profile.csv`, `iterations.csv` and `summary.csv` in `dir`.
pub fn write_artifacts(dir: &Path, out: &ExperimentOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = out.f_true.grid();
    let profile = csv_bytes(|w| {
        if grid.dim() == 1 {
            w.write_record(["x", "f_true", "f_reconstructed"])?;
        } else {
            w.write_record(["x1", "x2", "f_true", "f_reconstructed"])?;
        }
        for k in 0..grid.len() {
            let p = grid.coords(k);
            let mut rec: Vec<String> = p[..grid.dim()].iter().map(|v| v.to_string()).collect();
            rec.push(out.f_true.values()[k].to_string());
            rec.push(out.result.f.values()[k].to_string());
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    let log = csv_bytes(|w| {
        w.write_record(["k", "phi", "ratio"])?;
        for r in &out.result.log {
            w.write_record([r.k.to_string(), r.phi.to_string(), r.ratio.to_string()])?;
        }
        Ok(())
    })?;
    let summary = csv_bytes(|w| {
        w.serialize(&out.summary)?;
        Ok(())
    })?;
    write_atomic(&dir.join("profile.csv"), &profile)?;
    write_atomic(&dir.join("iterations.csv"), &log)?;
    write_atomic(&dir.join("summary.csv"), &summary)
}

/// One reconstructed table row next to its reference values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableLine {
    pub delta: f64,
    pub omega: String,
    pub err_percent: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub paper_err_percent: f64,
    #[serde(rename = "paper_K")]
    pub paper_k: usize,
}

/// Runs every row of table `id` concurrently; `overrides` (for example grid
/// sizes or the seed) apply to all rows. Every row uses the same seed.
pub fn run_table(id: u8, overrides: &ConfigLayer) -> Result<Vec<TableLine>> {
    let (base, rows) = presets::table(id)?;
    let configs: Vec<(ExperimentConfig, &TableRow)> = rows
        .iter()
        .map(|row| {
            let mut l = presets::table_row_layer(&base, row).merged(overrides);
            l.output = None;
            Ok((l.resolve()?, row))
        })
        .collect::<Result<_>>()?;
    configs
        .par_iter()
        .map(|(cfg, row)| {
            let out = run_experiment(cfg)?;
            Ok(TableLine {
                delta: row.delta,
                omega: out.summary.omega,
                err_percent: out.summary.err_percent,
                k: out.summary.k,
                paper_err_percent: row.paper_err_percent,
                paper_k: row.paper_k,
            })
        })
        .collect()
}

pub fn write_table_csv<W: Write>(lines: &[TableLine], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in lines {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::Subdomain;
    use crate::discretization::SpaceGrid;

    fn small() -> (ProblemSpec, Field, ObservationMask) {
        let grid = SpaceGrid::new(1, 21).unwrap();
        let tgrid = TimeGrid::new(1.0, 10).unwrap();
        let spec = ProblemSpec::new(
            FractionalOrder::new(0.5).unwrap(),
            tgrid,
            assemble_operator(grid),
            Polynomial::reference_profile().sample(&tgrid),
        )
        .unwrap();
        let f = Field::from_fn(grid, |x| 2.0 + x[0]);
        let mask = Subdomain::intervals(&[(0.0, 0.2)]).mask(grid).unwrap();
        (spec, f, mask)
    }

    #[test]
    fn noise_free_data_is_masked_solution() {
        let (spec, f, mask) = small();
        let obs = synthesize_observation(&spec, &f, &mask, 0.0, 3).unwrap();
        let u = solve_forward(&spec, &f).unwrap();
        let chi = mask.indicator();
        for (n, chunk) in obs.values().chunks(chi.len()).enumerate() {
            for (k, v) in chunk.iter().enumerate() {
                assert_eq!(*v, chi[k] * u.at(n)[k]);
            }
        }
    }

    #[test]
    fn noise_is_bounded_and_reproducible() {
        let (spec, f, mask) = small();
        let a = synthesize_observation(&spec, &f, &mask, 0.04, 11).unwrap();
        let b = synthesize_observation(&spec, &f, &mask, 0.04, 11).unwrap();
        let c = synthesize_observation(&spec, &f, &mask, 0.04, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let u = solve_forward(&spec, &f).unwrap();
        for (x, y) in a.values().iter().zip(u.values()) {
            if *x != 0.0 {
                assert!((x / y - 1.0).abs() <= 0.04 + 1e-15);
            }
        }
        assert!(synthesize_observation(&spec, &f, &mask, -0.1, 1).is_err());
    }

    #[test]
    fn artifacts_have_documented_headers() {
        let dir = tempfile::tempdir().unwrap();
        let (mut l, _, _) = presets::experiment("ex51b").unwrap();
        l.nodes = Some(11);
        l.steps = Some(8);
        l.output = Some(dir.path().to_path_buf());
        let out = run_experiment(&l.resolve().unwrap()).unwrap();
        assert!(out.m_used >= out.m_estimate.unwrap() * M_SAFETY);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with("delta,omega,err_percent,K\n"), "{summary}");
        let log = fs::read_to_string(dir.path().join("iterations.csv")).unwrap();
        assert_eq!(log.lines().count(), out.result.iterations + 1);
        let profile = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
        assert!(profile.starts_with("x,f_true,f_reconstructed\n"));
        assert_eq!(profile.lines().count(), 12);
    }
}
