//! Experiment harness: configuration, the convergence sweeps and field
//! dumps behind the CLI, with deterministic CSV output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::coefficients::{paper_coefficient, paper_problem_data, Example};
use crate::error::{Error, Result};
use crate::gfem::GfemWorkspace;
use crate::mesh::GridMesh;

/// How the number of harmonic basis functions is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SChoice {
    /// s = max(4 n_loc, 40) per record (clamped to the built basis).
    Auto,
    List(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mesh_n: usize,
    pub example: Example,
    pub seed: u64,
    pub m: usize,
    pub overlap_layers: usize,
    pub ell_list: Vec<usize>,
    pub nloc_list: Vec<usize>,
    pub s_list: SChoice,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mesh_n: 100,
            example: Example::RandomField,
            seed: 0,
            m: 4,
            overlap_layers: 2,
            ell_list: vec![0, 4, 8],
            nloc_list: (2..=16).collect(),
            s_list: SChoice::Auto,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mesh_n < 2 {
            return Err(Error::Config("mesh_n must be >= 2".into()));
        }
        if self.ell_list.is_empty() || self.nloc_list.is_empty() {
            return Err(Error::Config("ell_list and nloc_list must be nonempty".into()));
        }
        if let SChoice::List(s) = &self.s_list {
            if s.is_empty() || s.contains(&0) {
                return Err(Error::Config("s_list must be nonempty and positive".into()));
            }
        }
        if self.nloc_list.contains(&0) {
            return Err(Error::Config("n_loc values must be positive".into()));
        }
        if self.m == 0 || self.m > self.mesh_n {
            return Err(Error::Config(format!(
                "m = {} must be in 1..={}",
                self.m, self.mesh_n
            )));
        }
        if self.example == Example::RandomField && self.mesh_n % 50 != 0 {
            return Err(Error::Config(
                "the random-field example varies at scale 1/50: mesh_n must be a multiple of 50"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Parses a flat key=value config file ('#' starts a comment).
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let text = std::fs::read_to_string(path)?;
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value, got '{line}'", line_no + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what}: '{value}'"));
        match key {
            "mesh_n" => self.mesh_n = value.parse().map_err(|_| bad("mesh_n"))?,
            "example" => self.example = value.parse()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "m" => self.m = value.parse().map_err(|_| bad("m"))?,
            "overlap" | "overlap_layers" => {
                self.overlap_layers = value.parse().map_err(|_| bad("overlap"))?
            }
            "ell_list" => self.ell_list = parse_list(value)?,
            "nloc_list" => self.nloc_list = parse_list(value)?,
            "s_list" => {
                self.s_list = if value.eq_ignore_ascii_case("auto") {
                    SChoice::Auto
                } else {
                    SChoice::List(parse_list(value)?)
                }
            }
            "out_dir" | "out" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }
}

/// Parses "0,4,8" and inclusive ranges "2..20" (mixable: "0,2..5,9").
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad range start '{part}'")))?;
            let b: usize = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| Error::Config(format!("bad range end '{part}'")))?;
            if b < a {
                return Err(Error::Config(format!("empty range '{part}'")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                part.parse()
                    .map_err(|_| Error::Config(format!("bad list entry '{part}'")))?,
            );
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty list '{text}'")));
    }
    Ok(out)
}

/// One sweep result row; the CSV column order is fixed.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub example: Example,
    pub mesh_n: usize,
    pub seed: u64,
    pub m: usize,
    pub ell: usize,
    pub h: f64,
    pub h_star: f64,
    pub rho: f64,
    pub n_loc: usize,
    pub s: usize,
    pub error: f64,
    pub kappa: usize,
    pub kappa_star: usize,
    pub wall_time_ms: u128,
    pub dropped_cols: usize,
}

pub const SWEEP_CSV_HEADER: &str =
    "example,mesh_n,seed,m,ell,H,Hstar,rho,n_loc,s,error,kappa,kappastar,wall_time_ms,dropped_cols";

impl SweepRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.example,
            self.mesh_n,
            self.seed,
            self.m,
            self.ell,
            self.h,
            self.h_star,
            self.rho,
            self.n_loc,
            self.s,
            self.error,
            self.kappa,
            self.kappa_star,
            self.wall_time_ms,
            self.dropped_cols
        )
    }
}

pub fn write_records_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

fn auto_s(n_loc: usize) -> usize {
    (4 * n_loc).max(40)
}

fn build_workspace(cfg: &ExperimentConfig, ell: usize, s_build: usize) -> Result<GfemWorkspace> {
    let mesh = GridMesh::new(cfg.mesh_n, cfg.mesh_n)?;
    let coeff = paper_coefficient(&mesh, cfg.example, cfg.seed)?;
    let data = paper_problem_data(cfg.example);
    GfemWorkspace::build(mesh, coeff, data, cfg.m, cfg.overlap_layers, ell, s_build)
}

fn record_for(
    cfg: &ExperimentConfig,
    ws: &GfemWorkspace,
    ell: usize,
    s: usize,
    n_loc: usize,
) -> Result<SweepRecord> {
    let start = Instant::now();
    let (solution, error) = ws.solve(s, n_loc)?;
    let wall_time_ms = start.elapsed().as_millis();
    Ok(SweepRecord {
        example: cfg.example,
        mesh_n: cfg.mesh_n,
        seed: cfg.seed,
        m: cfg.m,
        ell,
        h: ws.decomp.side_h,
        h_star: ws.decomp.side_h_star,
        rho: ws.decomp.rho(),
        n_loc,
        s,
        error,
        kappa: ws.decomp.kappa,
        kappa_star: ws.decomp.kappa_star,
        wall_time_ms,
        dropped_cols: solution.dropped_columns + solution.dropped_pivots,
    })
}

/// Sweep over (ell, n_loc); the decomposition, reference solution and
/// Steklov work are shared across n_loc values at fixed ell. Per-record
/// failures are logged and counted, the sweep continues.
pub fn run_nloc_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRecord>, usize)> {
    cfg.validate()?;
    let n_loc_max = *cfg.nloc_list.iter().max().expect("nonempty");
    let s_build = match &cfg.s_list {
        SChoice::Auto => auto_s(n_loc_max),
        SChoice::List(list) => *list.iter().max().expect("nonempty"),
    };
    let mut records = Vec::new();
    let mut failures = 0usize;
    for &ell in &cfg.ell_list {
        let ws = match build_workspace(cfg, ell, s_build) {
            Ok(ws) => ws,
            Err(e) => {
                eprintln!("sweep point ell={ell} failed to build: {e}");
                failures += cfg.nloc_list.len();
                continue;
            }
        };
        for &n_loc in &cfg.nloc_list {
            let s = match &cfg.s_list {
                SChoice::Auto => auto_s(n_loc).min(s_build),
                SChoice::List(list) => *list.iter().max().expect("nonempty"),
            };
            match record_for(cfg, &ws, ell, s, n_loc) {
                Ok(r) => records.push(r),
                Err(e) => {
                    eprintln!("sweep point ell={ell} n_loc={n_loc} failed: {e}");
                    failures += 1;
                }
            }
        }
    }
    Ok((records, failures))
}

/// Identical computation to the n_loc sweep, sweeping ell at fixed n_loc
/// values; rho = H/H* varies along ell.
pub fn run_rho_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRecord>, usize)> {
    run_nloc_sweep(cfg)
}

/// Sweep over the harmonic space dimension s at fixed (ell, n_loc): the
/// Steklov eigenproblem is solved once at the largest s, smaller values
/// reuse leading subsets of the same basis.
pub fn run_s_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SweepRecord>, usize)> {
    cfg.validate()?;
    let ell = cfg.ell_list[0];
    let n_loc = cfg.nloc_list[0];
    let s_values: Vec<usize> = match &cfg.s_list {
        SChoice::List(list) => {
            let mut v = list.clone();
            v.sort_unstable();
            v.dedup();
            v
        }
        SChoice::Auto => {
            let mut v: Vec<usize> =
                [1, 2, 4, 6, 8, 10].iter().map(|&f| (f * n_loc).max(2)).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    let s_build = *s_values.last().expect("nonempty");
    let ws = build_workspace(cfg, ell, s_build)?;
    let mut records = Vec::new();
    let mut failures = 0usize;
    for &s in &s_values {
        match record_for(cfg, &ws, ell, s, n_loc) {
            Ok(r) => records.push(r),
            Err(e) => {
                eprintln!("sweep point s={s} failed: {e}");
                failures += 1;
            }
        }
    }
    Ok((records, failures))
}

/// Solves a single configuration and dumps the reference solution, GFEM
/// solution, pointwise error field, coefficient field, decomposition
/// summary and per-subdomain spectral diagnostics as CSV files.
pub fn run_field_dump(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let ell = cfg.ell_list[0];
    let n_loc = cfg.nloc_list[0];
    let s = match &cfg.s_list {
        SChoice::Auto => auto_s(n_loc),
        SChoice::List(list) => list[0],
    };
    let ws = build_workspace(cfg, ell, s)?;
    let (solution, error) = ws.solve(s, n_loc)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    crate::assemble::write_nodal_csv(&ws.mesh, &ws.u_h, &cfg.out_dir.join("u_h.csv"))?;
    crate::assemble::write_nodal_csv(&ws.mesh, &solution.u_g, &cfg.out_dir.join("u_g.csv"))?;
    let abs_err: Vec<f64> = ws
        .u_h
        .iter()
        .zip(&solution.u_g)
        .map(|(a, b)| (a - b).abs())
        .collect();
    crate::assemble::write_nodal_csv(&ws.mesh, &abs_err, &cfg.out_dir.join("error_abs.csv"))?;
    ws.coeff.write_csv(&ws.mesh, &cfg.out_dir.join("coefficient.csv"))?;
    ws.decomp.write_csv(&cfg.out_dir.join("decomposition.csv"))?;
    write_subdomain_diagnostics(&ws, s, n_loc, &cfg.out_dir.join("subdomain_diagnostics.csv"))?;
    let (worst, node) = abs_err
        .iter()
        .enumerate()
        .fold((0.0f64, 0usize), |acc, (i, &v)| if v > acc.0 { (v, i) } else { acc });
    let (x, y) = ws.mesh.node_xy(node);
    let bounds = crate::gfem::TheoryBounds::for_decomposition(&ws.decomp)?;
    println!(
        "field-dump: relative energy error {error}; max |u_h - u_G| = {worst} at ({x}, {y}); rho = {}, h(rho) = {}",
        bounds.rho, bounds.h_of_rho
    );
    Ok(())
}

fn write_subdomain_diagnostics(
    ws: &GfemWorkspace,
    s: usize,
    n_loc: usize,
    path: &Path,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "subdomain,n_boundary,s_used,rank,lambda,nwidth_estimate")?;
    for solver in &ws.solvers {
        let space = solver.local_space(s, n_loc)?;
        for (j, &lambda) in space.eigenvalues.iter().enumerate().take(n_loc + 1) {
            let nwidth = space.nwidth_estimate(j).unwrap_or(f64::NAN);
            writeln!(
                out,
                "{},{},{},{},{},{}",
                space.subdomain,
                space.n_boundary,
                space.s_used,
                j + 1,
                lambda,
                nwidth
            )?;
        }
    }
    Ok(())
}

/// Quick end-to-end property checks, printing one PASS/FAIL line each.
/// Returns the number of failures.
pub fn run_selftest() -> usize {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{} {}", if ok { "PASS" } else { "FAIL" }, name);
        if !ok {
            failures += 1;
        }
    };

    // partition of unity reconstruction
    let ok = (|| -> Result<bool> {
        let mesh = GridMesh::new(40, 40)?;
        for &m in &[2usize, 4] {
            for &overlap in &[1usize, 2, 3] {
                let d = crate::decomposition::Decomposition::new(&mesh, m, overlap, 0)?;
                let v: Vec<f64> = (0..mesh.n_nodes())
                    .map(|k| ((k * 2654435761) % 997) as f64 / 499.0 - 1.0)
                    .collect();
                let r = d.reconstruct(&v)?;
                let worst = v
                    .iter()
                    .zip(&r)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if worst > 1e-14 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })()
    .unwrap_or(false);
    check("pu-reconstruction", ok);

    // assembly sanity
    let ok = (|| -> Result<bool> {
        let mesh = GridMesh::new(20, 20)?;
        let coeff = crate::coefficients::CoefficientField::constant(&mesh, 1.0);
        let k = crate::assemble::assemble_stiffness(&mesh, &coeff)?;
        let ones = vec![1.0; mesh.n_nodes()];
        let ky = k.matvec(&ones);
        let sym_ok = k.asymmetry() <= 1e-13 * k.max_abs();
        let null_ok = ky.iter().all(|v| v.abs() <= 1e-12 * k.max_abs());
        let f = crate::assemble::assemble_load(&mesh, &|_, _| 1.0, &|_, _| 0.0);
        let area_ok = (f.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        Ok(sym_ok && null_ok && area_ok)
    })()
    .unwrap_or(false);
    check("assembly", ok);

    // h(s) shape
    let ok = (|| -> Result<bool> {
        let mid = crate::gfem::h_of_s(0.5)?;
        if (mid - (1.0 - std::f64::consts::LN_2)).abs() > 1e-12 {
            return Ok(false);
        }
        let mut last = 1.0 + 1e-15;
        for i in 1..1000 {
            let s = i as f64 / 1000.0;
            let h = crate::gfem::h_of_s(s)?;
            if h >= last || h < (0.75 - s).max((1.0 - s) / 2.0) - 1e-12 {
                return Ok(false);
            }
            last = h;
        }
        Ok(true)
    })()
    .unwrap_or(false);
    check("h-of-s", ok);

    // full-space exactness on a tiny problem
    let ok = (|| -> Result<bool> {
        let mesh = GridMesh::new(16, 16)?;
        let coeff = crate::coefficients::random_field(&mesh, 5, 0.25, 1.0, 10.0)?;
        let data = paper_problem_data(Example::RandomField);
        let ws = GfemWorkspace::build(mesh, coeff, data, 2, 2, 4, 200)?;
        let n_i = ws.solvers.iter().map(|s| s.harm.n_boundary).max().unwrap_or(0);
        let (_, error) = ws.solve(n_i.max(1), n_i.max(1))?;
        Ok(error <= 1e-8)
    })()
    .unwrap_or(false);
    check("full-space-exactness", ok);

    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("0,4,8").unwrap(), vec![0, 4, 8]);
        assert_eq!(parse_list("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_list("1,3..5,9").unwrap(), vec![1, 3, 4, 5, 9]);
        assert!(parse_list("").is_err());
        assert!(parse_list("5..2").is_err());
        assert!(parse_list("x").is_err());
    }

    #[test]
    fn config_file_roundtrip() {
        let dir = std::env::temp_dir().join("msgfem_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("exp.cfg");
        std::fs::write(
            &path,
            "mesh_n = 100\nexample = high-contrast # comment\nseed=9\nm=4\noverlap=2\nell_list=0,4\nnloc_list=2..4\ns_list=auto\nout_dir=/tmp/msgfem-out\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.mesh_n, 100);
        assert_eq!(cfg.example, Example::HighContrast);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ell_list, vec![0, 4]);
        assert_eq!(cfg.nloc_list, vec![2, 3, 4]);
        assert_eq!(cfg.s_list, SChoice::Auto);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut cfg = ExperimentConfig::default();
        cfg.mesh_n = 77; // not a multiple of 50 for the random field
        assert!(cfg.validate().is_err());
        cfg.example = Example::HighContrast;
        assert!(cfg.validate().is_ok());
        cfg.nloc_list.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn record_csv_shape() {
        let r = SweepRecord {
            example: Example::RandomField,
            mesh_n: 100,
            seed: 0,
            m: 4,
            ell: 8,
            h: 0.29,
            h_star: 0.45,
            rho: 0.29 / 0.45,
            n_loc: 10,
            s: 40,
            error: 1.5e-3,
            kappa: 4,
            kappa_star: 4,
            wall_time_ms: 12,
            dropped_cols: 0,
        };
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), SWEEP_CSV_HEADER.split(',').count());
        assert!(row.starts_with("random-field,100,0,4,8,"));
    }
}
