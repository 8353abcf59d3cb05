//! One function per subcommand. Each writes its files under the configured
//! output directory and returns the paths written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use corrdyn::branches::branch_diameter_stats;
use corrdyn::equilibrium::{brolin_sample, brolin_sample_with_stats, grid_density, mixing_series, moments, preimage_tree, BBox, PointMeasure};
use corrdyn::exceptional::{exceptional_test_in, find_e0, orbit};
use corrdyn::periodic::{periodic_points_with, EquidistributionRow, Reference};
use corrdyn::uniqueness::{factor_compose, julia_like_check, preimage_equal, uniqueness_verdict};
use corrdyn::{Complex64, Correspondence};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Op};

/// Points closer than this to the exceptional orbit count as exceptional.
const EXCEPTIONAL_REL: f64 = 1e-6;
const EXCEPTIONAL_ORBIT_DEPTH: usize = 2;

struct Output<'a> {
    cfg: &'a RunConfig,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.output_dir).map_err(|source| CliError::Io {
            path: cfg.output_dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            cfg,
            written: Vec::new(),
        })
    }

    fn write(&mut self, suffix: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.cfg.output_dir.join(format!("{}.{suffix}", self.cfg.name));
        let io = |source| CliError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, suffix: &str, value: &Value) -> Result<(), CliError> {
        self.write(suffix, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    /// `<name>.report.json` wrapped in the common envelope.
    fn report(&mut self, command: &str, corr: Option<&Correspondence>, result: Value, started: Instant) -> Result<(), CliError> {
        let envelope = json!({
            "tool": "corrdyn",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": self.cfg.echo(),
            "degrees": corr.map(|c| c.degrees()),
            "lojasiewicz": corr.and_then(|c| c.lojasiewicz_exponent().ok()),
            "result": result,
            "wall_time_s": started.elapsed().as_secs_f64(),
        });
        self.json("report.json", &envelope)
    }
}

fn reference_box(cfg: &RunConfig, mu: &PointMeasure) -> Result<BBox, CliError> {
    Ok(cfg.grid.bbox()?.unwrap_or_else(|| BBox::covering(&[mu])))
}

/// Whether `z` lies on the truncated forward orbit of `ℰ₀`, or `None` when
/// `ℰ₀` cannot be computed for this correspondence.
fn on_exceptional_orbit(f: &Correspondence, z: Complex64) -> Option<bool> {
    let rep = find_e0(f, corrdyn::exceptional::MAX_E0).ok()?;
    let orb = orbit(f, &rep.e0, EXCEPTIONAL_ORBIT_DEPTH).ok()?;
    Some(orb.iter().any(|e| (e - z).norm() <= EXCEPTIONAL_REL * (1.0 + e.norm())))
}

pub fn measure(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let f = cfg.correspondence()?;
    let m = &cfg.measure;
    let (mu, stats) = match m.tree_depth {
        Some(depth) => (preimage_tree(&f, m.start_point, depth).op("preimage_tree")?, None),
        None => {
            let seed = cfg.require_seed("measure")?;
            let (mu, stats) = brolin_sample_with_stats(&f, &m.sampler(seed)).op("brolin_sample")?;
            (mu, Some(stats))
        }
    };
    let bbox = reference_box(cfg, &mu)?;
    let size = cfg.grid.image_size;
    let density = grid_density(&mu, bbox, size, size).op("grid_density")?;
    let first = mu.atoms()[0].location;
    let collapsed = mu.locations().all(|z| (z - first).norm() <= EXCEPTIONAL_REL * (1.0 + first.norm()));
    let on_orbit = on_exceptional_orbit(&f, m.start_point);

    let mut out = Output::new(cfg)?;
    out.write("measure.csv", |w| mu.write_csv(w))?;
    let mut sidecar = None;
    out.write("density.pgm", |w| {
        sidecar = Some(density.write_pgm(w, cfg.grid.bit_depth).map_err(std::io::Error::other)?);
        Ok(())
    })?;
    out.json("density.json", &serde_json::to_value(sidecar).expect("sidecar serializes"))?;
    let result = json!({
        "atoms": mu.len(),
        "total_mass": mu.total_mass(),
        "moments": moments(&mu),
        "bbox": bbox,
        "overflow": density.overflow,
        "sampler": stats,
        "start_point": m.start_point,
        "exceptional_start": {
            "flagged": collapsed || on_orbit == Some(true),
            "collapsed": collapsed,
            "on_exceptional_orbit": on_orbit,
        },
    });
    out.report("measure", Some(&f), result, started)?;
    Ok(out.written)
}

pub fn periodic(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let f = cfg.correspondence()?;
    let seed = cfg.require_seed("periodic")?;
    if cfg.periodic.n_max == 0 {
        return Err(CliError::Config("periodic.n_max must be at least 1".into()));
    }
    let mu = brolin_sample(&f, &cfg.measure.sampler(seed)).op("brolin_sample")?;
    let reference = Reference {
        measure: &mu,
        bbox: reference_box(cfg, &mu)?,
        n_grid: cfg.grid.n_grid,
    };
    let minimal = cfg.periodic.minimal_only;
    // Every period is computed before anything is written, so a guard trip
    // leaves no partial output.
    let reports = (1..=cfg.periodic.n_max)
        .map(|n| periodic_points_with(&f, n, Some(reference), minimal).op("periodic_points"))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = reports
        .iter()
        .map(|rep| EquidistributionRow::from_report(rep, reference, minimal).op("repelling_equidistribution"))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Output::new(cfg)?;
    for rep in &reports {
        out.write(&format!("period{}.csv", rep.n), |w| rep.write_csv(w))?;
    }
    let result = json!({
        "periods": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
        "equidistribution": rows,
        "reference_atoms": mu.len(),
    });
    out.report("periodic", Some(&f), result, started)?;
    Ok(out.written)
}

pub fn mixing(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let f = cfg.correspondence()?;
    let seed = cfg.require_seed("mixing")?;
    let mut sampler = cfg.measure.sampler(seed);
    sampler.n_samples = cfg.mixing.n_samples;
    let mu = brolin_sample(&f, &sampler).op("brolin_sample")?;
    let (phi, psi) = (cfg.mixing.phi, cfg.mixing.psi);
    let rep = mixing_series(&f, &mu, move |z| phi.eval(z), move |z| psi.eval(z), cfg.mixing.n_max).op("mixing_series")?;
    let mut out = Output::new(cfg)?;
    out.report("mixing", Some(&f), serde_json::to_value(&rep).expect("serializable"), started)?;
    Ok(out.written)
}

pub fn branches(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let f = cfg.correspondence()?;
    let b = &cfg.branches;
    let stats = branch_diameter_stats(&f, b.base, b.radius, b.m_max, b.n_boundary).op("branch_diameter_stats")?;
    let mut out = Output::new(cfg)?;
    out.write("branches.csv", |w| stats.write_csv(w))?;
    let mut result = serde_json::to_value(&stats).expect("serializable");
    result["alive_fraction"] = json!(stats.alive_fraction(b.m_max));
    out.report("branches", Some(&f), result, started)?;
    Ok(out.written)
}

pub fn exceptional(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let f = cfg.correspondence()?;
    let e = &cfg.exceptional;
    let mut rep = find_e0(&f, e.max_size).op("find_e0")?;
    rep.orbit_truncation = orbit(&f, &rep.e0, e.orbit_depth).op("orbit")?;
    let mut result = rep.to_json();
    if !e.test_points.is_empty() {
        let seed = cfg.require_seed("exceptional with test_points")?;
        let mu = brolin_sample(&f, &cfg.measure.sampler(seed)).op("brolin_sample")?;
        let bbox = reference_box(cfg, &mu)?;
        let tests = e
            .test_points
            .iter()
            .map(|&z| {
                exceptional_test_in(&f, z, e.tree_depth, &mu, bbox, cfg.grid.n_grid)
                    .op("exceptional_test")
                    .map(|t| json!({ "point": z, "distance": t.distance, "baseline": t.baseline, "flagged": t.flagged }))
            })
            .collect::<Result<Vec<_>, _>>()?;
        result["tests"] = Value::Array(tests);
    }
    let mut out = Output::new(cfg)?;
    out.report("exceptional", Some(&f), result, started)?;
    Ok(out.written)
}

pub fn uniqueness(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let u = cfg
        .uniqueness
        .as_ref()
        .ok_or_else(|| CliError::Config("uniqueness needs a `uniqueness` section".into()))?;
    let k = u.compact.build().op("compact set")?;
    let mut result = json!({
        "compact": {
            "descriptor": k.descriptor,
            "samples": k.len(),
            "spacing": k.spacing(),
            "default_tolerance": k.default_tolerance(),
            "infinite_proxy": k.is_infinite_proxy(),
        },
    });
    let mut corr = None;
    match (&u.f, &u.g) {
        (Some(f), Some(g)) => {
            let cmp = preimage_equal(f, g, &k, u.tolerance).op("preimage_equal")?;
            let factor = factor_compose(f, g);
            let julia = match &factor {
                Some(p) if p.degree() >= 2 => Some(julia_like_check(p, &k, u.tolerance).op("julia_like_check")?),
                _ => None,
            };
            result["preimage_equal"] = json!(cmp);
            result["factor"] = json!(factor);
            result["factor_julia_like"] = json!(julia);
            corr = Correspondence::parametrized(g.clone(), f.clone()).ok();
        }
        (None, None) => {}
        _ => return Err(CliError::Config("uniqueness.f and uniqueness.g must be given together".into())),
    }
    let verdict = uniqueness_verdict(&k, &u.candidates, u.m_max).op("uniqueness_verdict")?;
    result["verdict"] = verdict.to_json();
    let mut out = Output::new(cfg)?;
    out.json("compact.json", &k.to_json())?;
    out.report("uniqueness", corr.as_ref(), result, started)?;
    Ok(out.written)
}
