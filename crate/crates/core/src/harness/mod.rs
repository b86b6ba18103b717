//! Experiment runner: config parsing, subcommands, artifacts and reports.

mod config;
mod manifest;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

pub use config::{
    parse_config, BoundsConfig, ClassifyConfig, ExperimentConfig, MgaleConfig, MgaleNetworkConfig,
    NetworkRegionsConfig, RegionsConfig, SelectConfig, SimulateConfig, WalkConfig,
};
pub use manifest::{file_sha256, sha256_hex, OutputChecksum, RunManifest, ARTIFACT_VERSION};
pub use report::{emit_report, write_acceptance_csv, AcceptanceRow, Report, REPORT_FILE};

use crate::classify::{disagreement_audit, write_audit_csv, AuditVerdict};
use crate::concentration::{
    lattice_region_bound, martingale_bound_reports, martingale_grade_check, mean_vector, random_walks,
    region_count_concentration, sample_region_counts, verify_concentration, write_reports_csv, write_reports_json,
    xi_certificates, BoundReport, MartingaleReport,
};
use crate::error::{Error, Result};
use crate::layer_select::{select_layers, GammaSpec, Penalty, ProcessSpec, SelectMethod, Utility};
use crate::sdnn::{sample_input_tagged, simulate, simulate_at, simulate_nu, write_runs_csv, write_runs_json, StreamTags};
use crate::rng::tags;
use crate::tropical::{count_linear_regions, GridSpec, RegionMethod, TropicalPolynomial};

/// Default output directory when neither flag, environment nor config set one.
pub const DEFAULT_OUT_DIR: &str = "stochtrop-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Bounds,
    Classify,
    SelectLayers,
    Regions,
    MgaleCheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Bounds,
        Command::Classify,
        Command::SelectLayers,
        Command::Regions,
        Command::MgaleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Bounds => "bounds",
            Command::Classify => "classify",
            Command::SelectLayers => "select-layers",
            Command::Regions => "regions",
            Command::MgaleCheck => "mgale-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub horizon: Option<usize>,
    pub method: Option<SelectMethod>,
    pub gamma_table: Option<PathBuf>,
    pub basis_degree: Option<usize>,
    /// Polynomial JSON for `regions`.
    pub poly: Option<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    /// Number of violated verdicts across all artifacts.
    pub violations: usize,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.violations > 0 {
            2
        } else {
            0
        }
    }
}

/// Exit code for a finished run: 0 clean, 2 violations, 1 error.
pub fn exit_code<T>(result: &Result<T>, violations: impl Fn(&T) -> bool) -> i32 {
    match result {
        Ok(v) if violations(v) => 2,
        Ok(_) => 0,
        Err(_) => 1,
    }
}

/// Applies overrides, validates, and runs `command` on a pool of
/// `workers` threads. Artifacts and the manifest go to the output dir.
pub fn run_subcommand(command: Command, config: &ExperimentConfig, overrides: &Overrides) -> Result<RunOutcome> {
    let cfg = effective_config(command, config, overrides)?;
    cfg.validate()?;
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    fs::create_dir_all(&out_dir)?;
    let workers = cfg.workers.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let mut run = Run {
        dir: out_dir.clone(),
        files: Vec::new(),
        timings: BTreeMap::new(),
        violations: 0,
    };
    let started = Instant::now();
    pool.install(|| dispatch(command, &cfg, &mut run))?;
    run.timings.insert("total".into(), started.elapsed().as_secs_f64() * 1e3);

    let mut hashed = cfg.clone();
    hashed.workers = None;
    hashed.out = None;
    let outputs = run
        .files
        .iter()
        .map(|f| {
            let bytes = fs::read(out_dir.join(f))?;
            Ok(OutputChecksum {
                file: f.clone(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        command: command.name().into(),
        version: ARTIFACT_VERSION.into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(serde_json::to_string(&hashed)?.as_bytes()),
        seed: cfg.seed,
        workers,
        outputs,
        timings_ms: run.timings,
    };
    fs::write(
        out_dir.join(RunManifest::file_name(command.name())),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(RunOutcome {
        out_dir,
        manifest,
        violations: run.violations,
    })
}

/// Config after command-line overrides; sections implied by flags are created.
pub fn effective_config(command: Command, config: &ExperimentConfig, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = config.clone();
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    if o.out.is_some() {
        cfg.out = o.out.clone();
    }
    match command {
        Command::SelectLayers => {
            let section = cfg.select_layers.get_or_insert_with(|| SelectConfig {
                gamma: GammaSpec::log_over_sqrt(o.horizon.unwrap_or(1000)),
                options: Default::default(),
            });
            if let Some(path) = &o.gamma_table {
                section.gamma = gamma_from_table(path)?;
            }
            if let Some(h) = o.horizon {
                section.gamma.horizon = h;
            }
            if let Some(m) = o.method {
                section.options.method = m;
            }
            if let Some(d) = o.basis_degree {
                section.options.lsmc.degree = d;
            }
        }
        Command::Regions => {
            if let Some(text) = &o.poly {
                let poly: TropicalPolynomial = serde_json::from_str(text).map_err(|e| Error::Config {
                    path: "--poly".into(),
                    reason: e.to_string(),
                })?;
                cfg.regions
                    .get_or_insert_with(|| RegionsConfig {
                        polynomials: Vec::new(),
                        networks: None,
                    })
                    .polynomials
                    .push(poly);
            }
        }
        _ => {}
    }
    Ok(cfg)
}

/// Reads realized rewards: either `layer,gamma` columns for one trajectory,
/// or one trajectory per headerless row.
pub fn gamma_from_table(path: &Path) -> Result<GammaSpec> {
    let text = read_input(path)?;
    let field = |s: &str, row: usize| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::Config {
            path: format!("{}:{}", path.display(), row + 1),
            reason: format!("not a number: {s:?}"),
        })
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    let first = rows.first().ok_or_else(|| Error::Config {
        path: path.display().to_string(),
        reason: "empty table".into(),
    })?;
    let paths: Vec<Vec<f64>> = if first.iter().any(|h| h.trim() == "gamma") {
        let col = first.iter().position(|h| h.trim() == "gamma").expect("checked");
        let gamma = rows[1..]
            .iter()
            .enumerate()
            .map(|(i, r)| field(r.get(col).unwrap_or(""), i + 1))
            .collect::<Result<Vec<_>>>()?;
        vec![gamma]
    } else {
        rows.iter()
            .enumerate()
            .map(|(i, r)| r.iter().map(|s| field(s, i)).collect())
            .collect::<Result<_>>()?
    };
    let horizon = paths.first().map_or(0, Vec::len);
    Ok(GammaSpec {
        horizon,
        utility: Utility::Identity,
        penalty: Penalty::None,
        process: ProcessSpec::Paths { paths },
    })
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&read_input(path)?)
}

fn read_input(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    Ok(fs::read_to_string(path)?)
}

struct Run {
    dir: PathBuf,
    files: Vec<String>,
    timings: BTreeMap<String, f64>,
    violations: usize,
}

impl Run {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        fs::write(self.dir.join(name), buf)?;
        self.files.push(name.into());
        Ok(())
    }

    fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.timings.insert(stage.into(), t.elapsed().as_secs_f64() * 1e3);
        Ok(out)
    }

    fn count_violations(&mut self, reports: &[BoundReport]) {
        self.violations += reports.iter().filter(|r| !r.is_consistent()).count();
    }
}

fn missing(section: &str) -> Error {
    Error::Config {
        path: section.into(),
        reason: "section required by this subcommand".into(),
    }
}

fn dispatch(command: Command, cfg: &ExperimentConfig, run: &mut Run) -> Result<()> {
    let seed = cfg.seed;
    match command {
        Command::Simulate => {
            let s = cfg.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
            let runs = run.timed("simulate", || match &s.x {
                Some(x) => simulate_at(&s.network, x, seed, s.n),
                None => simulate(&s.network, seed, s.n),
            })?;
            run.write("runs.csv", |b| write_runs_csv(&runs, b))?;
            if s.json {
                run.write("runs.json", |b| write_runs_json(&runs, b))?;
            }
        }
        Command::Bounds => {
            let b = cfg.bounds.as_ref().ok_or_else(|| missing("bounds"))?;
            let certs = xi_certificates(&b.network)?;
            let reports = run.timed("bounds", || verify_concentration(&b.network, &b.options, seed))?;
            run.count_violations(&reports);
            run.write("bounds.csv", |w| write_reports_csv(&reports, w))?;
            run.write("bounds.json", |w| write_reports_json(&reports, w))?;
            run.write_json("xi.json", &certs)?;
        }
        Command::Classify => {
            let c = cfg.classify.as_ref().ok_or_else(|| missing("classify"))?;
            let inputs = match &c.inputs {
                Some(xs) => xs.clone(),
                None => (0..c.random_inputs as u64)
                    .map(|i| sample_input_tagged(&c.network, seed, tags::INPUT, i))
                    .collect(),
            };
            let audits = run.timed("audit", || disagreement_audit(&c.network, &c.score, &inputs, c.n, seed))?;
            run.violations += audits.iter().filter(|a| a.verdict == AuditVerdict::Violated).count();
            run.write("audit.csv", |w| write_audit_csv(&audits, w))?;
            run.write_json("audit.json", &audits)?;
        }
        Command::SelectLayers => {
            let s = cfg.select_layers.as_ref().ok_or_else(|| missing("select-layers"))?;
            let opts = crate::layer_select::SelectOptions {
                seed,
                ..s.options.clone()
            };
            let selection = run.timed("select", || select_layers(&s.gamma, &opts))?;
            run.write_json("selection.json", &selection)?;
            run.write("envelope.csv", |w| selection.solution.write_envelope_csv(w))?;
        }
        Command::Regions => {
            let r = cfg.regions.as_ref().ok_or_else(|| missing("regions"))?;
            if r.polynomials.is_empty() && r.networks.is_none() {
                return Err(Error::Config {
                    path: "regions".into(),
                    reason: "need polynomials or networks".into(),
                });
            }
            if !r.polynomials.is_empty() {
                let rows = run.timed("polynomials", || polynomial_regions(&r.polynomials))?;
                run.violations += rows.iter().filter(|r| r.grid.is_some_and(|g| g > r.exact_lp)).count();
                run.write("regions.csv", |w| write_region_rows(&rows, w))?;
            }
            if let Some(n) = &r.networks {
                let counts = run.timed("networks", || {
                    sample_region_counts(&n.network, n.unit, n.n, seed, n.method, n.cap)
                })?;
                let b1 = lattice_region_bound(&n.network, n.unit)?;
                let grid = n
                    .t_grid
                    .clone()
                    .unwrap_or_else(|| (1..=10).map(|k| (b1 - 1) as f64 * k as f64 / 10.0).collect());
                let reports = region_count_concentration(&counts, b1, &grid)?;
                run.violations += counts.iter().filter(|c| **c > b1).count();
                run.count_violations(&reports);
                run.write("region_counts.csv", |w| {
                    let mut csv = csv::Writer::from_writer(w);
                    csv.write_record(["network", "count", "b1"])?;
                    for (i, c) in counts.iter().enumerate() {
                        csv.write_record([i.to_string(), c.to_string(), b1.to_string()])?;
                    }
                    csv.flush()?;
                    Ok(())
                })?;
                run.write("region_bounds.csv", |w| write_reports_csv(&reports, w))?;
            }
        }
        Command::MgaleCheck => {
            let m = cfg.mgale_check.as_ref().ok_or_else(|| missing("mgale-check"))?;
            let (grades, shifted) = run.timed("trajectories", || mgale_inputs(m, seed))?;
            let bound_m = m.m.unwrap_or(grades.m_estimate);
            let reports = martingale_bound_reports(&shifted, bound_m, &m.a_grid)?;
            run.count_violations(&reports);
            run.write("mgale_bounds.csv", |w| write_reports_csv(&reports, w))?;
            let summary = MgaleSummary {
                m: bound_m,
                m_plug_in: m.m.is_none(),
                grades: m.grades.then_some(grades),
            };
            run.write_json("mgale_grades.json", &summary)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MgaleSummary {
    m: f64,
    /// `m` is the observed maximum increment rather than a supplied bound.
    m_plug_in: bool,
    grades: Option<MartingaleReport>,
}

/// Grade check of the sequence, and the sequence shifted to start at zero
/// for the tail bound.
fn mgale_inputs(m: &MgaleConfig, seed: u64) -> Result<(MartingaleReport, Vec<Vec<Vec<f64>>>)> {
    let (trajectories, centers) = match (&m.walk, &m.network) {
        (Some(w), None) => {
            let mut walks = random_walks(w.runs, w.steps, w.dim, seed);
            for v in walks.iter_mut().flatten().flatten() {
                *v *= w.step;
            }
            (walks, None)
        }
        (None, Some(n)) => {
            let widths = &n.network.widths;
            if widths.iter().any(|w| *w != widths[0]) {
                return Err(Error::spec(
                    "mgale-check.network.network.widths",
                    "martingale checks need one width for every layer",
                ));
            }
            let by_layer = simulate_nu(&n.network, seed, n.n, StreamTags::MAIN)?;
            let centers = if n.centered {
                let pilot = simulate_nu(&n.network, seed, n.pilot_n, StreamTags::PILOT)?;
                Some(pilot.iter().map(|s| mean_vector(s)).collect::<Result<Vec<_>>>()?)
            } else {
                None
            };
            let runs = (0..n.n)
                .map(|i| by_layer.iter().map(|layer| layer[i].clone()).collect())
                .collect();
            (runs, centers)
        }
        _ => {
            return Err(Error::Config {
                path: "mgale-check".into(),
                reason: "set exactly one of walk or network".into(),
            })
        }
    };
    let report = martingale_grade_check(&trajectories, centers.as_deref(), &m.convex)?;
    let shifted = trajectories
        .iter()
        .map(|run| {
            let base = run[0].clone();
            run.iter()
                .enumerate()
                .map(|(l, v)| {
                    let c = centers.as_ref().map(|c| &c[l]);
                    let c0 = centers.as_ref().map(|c| &c[0]);
                    v.iter()
                        .enumerate()
                        .map(|(k, x)| {
                            let z = x - c.map_or(0.0, |c| c[k]);
                            let z0 = base[k] - c0.map_or(0.0, |c| c[k]);
                            z - z0
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok((report, shifted))
}

struct RegionRow {
    dim: usize,
    monomials: usize,
    exact_lp: usize,
    grid: Option<usize>,
}

fn polynomial_regions(polys: &[TropicalPolynomial]) -> Result<Vec<RegionRow>> {
    use rayon::prelude::*;
    polys
        .par_iter()
        .map(|p| {
            let exact = count_linear_regions(p, RegionMethod::ExactLp)?;
            let grid = count_linear_regions(p, RegionMethod::GridOracle(GridSpec::default_for(p.dim())))?;
            Ok(RegionRow {
                dim: p.dim(),
                monomials: p.len(),
                exact_lp: exact.count,
                grid: Some(grid.count),
            })
        })
        .collect()
}

fn write_region_rows(rows: &[RegionRow], out: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "dim", "monomials", "exact_lp", "grid", "agree"])?;
    for (i, r) in rows.iter().enumerate() {
        let grid = r.grid.map_or(String::new(), |g| g.to_string());
        let agree = r.grid.is_none_or(|g| g == r.exact_lp);
        w.write_record([
            i.to_string(),
            r.dim.to_string(),
            r.monomials.to_string(),
            r.exact_lp.to_string(),
            grid,
            agree.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
