use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use ppstat::bootstrap::{bootstrap, bootstrap_stats, characteristics_pipeline, write_bootstrap_csv, PIPELINE_NAMES};
use ppstat::detection::{noise_correct, read_count_log, write_count_log, CountRecord, Layout};
use ppstat::estimator::{
    count_based_g2, count_based_gh2, count_based_pg_eta, estimate, EstimateOptions, EstimateResult, LikelihoodModel,
    Objective, Reconstruction,
};
use ppstat::jsd::{pnd_from_segmentation, schmidt_number_analytic, schmidt_number_svd, segment};
use ppstat::pnd::{g2_marginal, gh2, heralding_bounds, pair_gen_prob, write_pnd_csv, Mode, PndMatrix};
use ppstat::simulator::{mean_rmsle_by_cell, run_sweep, write_sweep_csv, ExperimentConfig, PndSource};

use crate::cli::config::{parse_method, trial_count, RunConfig};
use crate::cli::CliError;

/// Guidance thresholds on the smallest expected outcome count.
const MIN_EXPECTED: f64 = 10.0;
const ADVISED_EXPECTED: f64 = 100.0;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let p = dir.join(name);
    File::create(&p).map(BufWriter::new).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Input(e.to_string())
}

/// Every characteristic on its own, NaN where undefined.
fn characteristics(p: &PndMatrix) -> [f64; 7] {
    let (hs, hi) = heralding_bounds(p).unwrap_or((f64::NAN, f64::NAN));
    [
        pair_gen_prob(p).unwrap_or(f64::NAN),
        hs,
        hi,
        g2_marginal(&p.marginal(Mode::Signal)).unwrap_or(f64::NAN),
        g2_marginal(&p.marginal(Mode::Idler)).unwrap_or(f64::NAN),
        gh2(p, Mode::Signal).unwrap_or(f64::NAN),
        gh2(p, Mode::Idler).unwrap_or(f64::NAN),
    ]
}

pub fn cmd_jsd(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let jsd = cfg.build_jsd()?;
    let gain = cfg.gain()?;
    let fs_ = cfg.build_filter("filter_s", &jsd)?;
    let fi = cfg.build_filter("filter_i", &jsd)?;
    let k_svd = schmidt_number_svd(&jsd)?;
    let k_an = schmidt_number_analytic(&jsd)?;
    let seg = segment(&jsd, &fs_, &fi)?;
    let p = pnd_from_segmentation(&seg, gain)?;

    let mut rows: Vec<(String, f64)> = vec![("K_svd".into(), k_svd), ("K_analytic".into(), k_an)];
    for j in 0..4 {
        rows.push((format!("q{}", j + 1), seg.q[j]));
    }
    for j in 0..4 {
        rows.push((format!("kappa{}", j + 1), seg.kappa[j]));
    }
    rows.extend([
        ("ox13".into(), seg.ox13),
        ("ox24".into(), seg.ox24),
        ("oy14".into(), seg.oy14),
        ("oy23".into(), seg.oy23),
        ("oc_re".into(), seg.oc.re),
        ("oc_im".into(), seg.oc.im),
    ]);
    for (name, v) in PIPELINE_NAMES.iter().zip(characteristics(&p)) {
        rows.push((name.to_string(), v));
    }
    let mut w = create(out, "jsd_report.csv")?;
    writeln!(w, "quantity,value").map_err(io_err)?;
    for (k, v) in rows {
        writeln!(w, "{k},{v:?}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let meta = vec![("xi_sq".to_string(), gain.xi_sq().to_string())];
    write_pnd_csv(&p, &meta, create(out, "pnd.csv")?)?;
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path, seed: u64, reps: Option<usize>) -> Result<(), CliError> {
    let s = cfg.simulate.as_ref().ok_or_else(|| CliError::Input("missing section [simulate]".into()))?;
    let source = match s.source.as_str() {
        "random" => PndSource::Random {
            p_g: s.p_g.ok_or_else(|| CliError::Input("missing key 'simulate.p_g'".into()))?,
        },
        "jsd" => {
            let jsd = cfg.build_jsd()?;
            let seg = segment(&jsd, &cfg.build_filter("filter_s", &jsd)?, &cfg.build_filter("filter_i", &jsd)?)?;
            PndSource::Explicit(pnd_from_segmentation(&seg, cfg.gain()?)?)
        }
        "pnd" => {
            let p = s.pnd_path.as_ref().ok_or_else(|| CliError::Input("missing key 'simulate.pnd_path'".into()))?;
            PndSource::Explicit(cfg.read_pnd(p)?)
        }
        other => {
            return Err(CliError::Input(format!("'simulate.source' must be random, jsd or pnd, got '{other}'")));
        }
    };
    let (det_s, det_i) = cfg.arms()?;
    let exp = ExperimentConfig {
        source,
        det_s,
        det_i,
        settings: cfg.settings()?,
        n_m: trial_count(s.n_m, "simulate.n_m")?,
        seed,
        reps: reps.unwrap_or(s.reps),
    };
    exp.validate()?;
    for rep in 0..exp.reps {
        let run = exp.run(rep)?;
        write_count_log(&run.records, create(out, &format!("counts_{rep:03}.csv"))?)?;
        let meta = vec![("seed".to_string(), seed.to_string()), ("rep".to_string(), rep.to_string())];
        write_pnd_csv(&run.truth, &meta, create(out, &format!("truth_{rep:03}.csv"))?)?;
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path, seed: u64, reps: Option<usize>) -> Result<(), CliError> {
    let spec = cfg.sweep_spec(seed, reps)?;
    let rows = run_sweep(&spec)?;
    write_sweep_csv(&rows, create(out, "sweep.csv")?)?;
    let mut w = create(out, "sweep_summary.csv")?;
    writeln!(w, "cell_id,p_g,n_m,eta,d,gamma,mean_rmsle,n_ok,n_converged").map_err(io_err)?;
    for (c, mean, n_ok) in mean_rmsle_by_cell(&rows) {
        let conv = rows.iter().filter(|r| r.cell.id == c.id && r.converged).count();
        writeln!(w, "{},{:?},{:?},{:?},{:?},{:?},{:?},{},{}", c.id, c.p_g, c.n_m, c.eta, c.d, c.gamma, mean, n_ok, conv)
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

struct Loaded {
    records: Vec<CountRecord>,
    model: LikelihoodModel,
    meta: Vec<(String, String)>,
}

fn load_counts(cfg: &RunConfig, counts: &Path) -> Result<Loaded, CliError> {
    let f = File::open(counts).map_err(|e| CliError::Input(format!("{}: {e}", counts.display())))?;
    let (records, summary) = read_count_log(f)?;
    let two_mode = records[0].layout() == Layout::Bipartite;
    let model = cfg.model(two_mode)?;
    let meta = vec![
        ("rows".to_string(), summary.rows.to_string()),
        ("settings".to_string(), summary.settings.to_string()),
        ("summed_rows".to_string(), summary.summed_rows.to_string()),
    ];
    Ok(Loaded { records, model, meta })
}

fn model_hash(model: &LikelihoodModel, objective: Objective) -> String {
    let digest = Sha256::digest(format!("{objective:?}|{model:?}").as_bytes());
    hex::encode(&digest[..8])
}

/// Smallest expected outcome count over all settings under the fit.
fn min_expected(est: &EstimateResult, records: &[CountRecord], model: &LikelihoodModel) -> Result<f64, CliError> {
    let mut m = f64::INFINITY;
    for r in records {
        let w = model.outcome_probs(r.setting(), est.reconstruction.cells())?;
        // outcomes a setup cannot produce at all are not data shortfalls
        m = w.iter().filter(|v| **v > 0.0).map(|v| v * r.n_m()).fold(m, f64::min);
    }
    Ok(m)
}

/// Count-based characteristics from the least attenuated setting, after
/// noise correction.
fn count_based(cfg: &RunConfig, records: &[CountRecord]) -> Result<[f64; 7], CliError> {
    let d = &cfg.detectors;
    let settings = cfg.settings()?;
    let rec = records
        .iter()
        .max_by(|a, b| {
            let g = |r: &CountRecord| settings.get(r.setting()).map(|(s, i)| s * i).unwrap_or(0.0);
            g(a).total_cmp(&g(b))
        })
        .expect("loader returns at least one record");
    let (gs, gi) = settings.get(rec.setting()).copied().unwrap_or((1.0, 1.0));
    let corrected = noise_correct(rec, &[d.d1, d.d2, d.d3, d.d4])?.record;
    // split ratios cancel in the sums over detector pairs
    let etas = [d.eta1 * gs, d.eta2 * gs, d.eta3 * gi, d.eta4 * gi];
    let (pg, hs, hi) = count_based_pg_eta(&corrected, etas).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    Ok([
        pg,
        hs,
        hi,
        count_based_g2(&corrected, Mode::Signal).unwrap_or(f64::NAN),
        count_based_g2(&corrected, Mode::Idler).unwrap_or(f64::NAN),
        count_based_gh2(&corrected, Mode::Signal).unwrap_or(f64::NAN),
        count_based_gh2(&corrected, Mode::Idler).unwrap_or(f64::NAN),
    ])
}

pub fn cmd_estimate(cfg: &RunConfig, out: &Path, seed: u64, counts: &Path, reps: Option<usize>) -> Result<(), CliError> {
    let loaded = load_counts(cfg, counts)?;
    let objective = parse_method(&cfg.estimate.method, "estimate.method")?;
    let opts = cfg.estimate_options(seed);
    let est = estimate(objective, &loaded.records, &loaded.model, &opts)?;

    let min_exp = min_expected(&est, &loaded.records, &loaded.model)?;
    let mut guidance = "ok";
    if min_exp < MIN_EXPECTED {
        guidance = "low";
        eprintln!(
            "warning: smallest expected outcome count is {min_exp:.3}; at least {MIN_EXPECTED} is needed and {ADVISED_EXPECTED} or more is advised"
        );
    } else if min_exp < ADVISED_EXPECTED {
        guidance = "marginal";
        eprintln!("warning: smallest expected outcome count is {min_exp:.3}; {ADVISED_EXPECTED} or more is advised");
    }
    for r in &loaded.records {
        let all_click = loaded.model.setup(r.setting()).map(|s| s.all_click());
        if let Some(k) = all_click {
            if r.counts()[k] == 0.0 {
                eprintln!("warning: setting {} has no all-click events", r.setting());
            }
        }
    }

    let mut meta = vec![
        ("method".to_string(), format!("{objective:?}").to_lowercase()),
        ("loglik".to_string(), est.loglik.to_string()),
        ("iterations".to_string(), est.iterations.to_string()),
        ("converged".to_string(), est.converged.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("model_hash".to_string(), model_hash(&loaded.model, objective)),
        ("min_expected_count".to_string(), format!("{min_exp:?}")),
        ("guidance".to_string(), guidance.to_string()),
    ];
    meta.extend(loaded.meta.iter().cloned());

    let r_r = cfg.detectors.rep_rate_hz;
    let mut w = match &est.reconstruction {
        Reconstruction::Bipartite(p) => {
            write_pnd_csv(p, &meta, create(out, "pnd.csv")?)?;
            let fit = characteristics(p);
            let cb = count_based(cfg, &loaded.records)?;
            let mut w = create(out, "characteristics.csv")?;
            writeln!(w, "characteristic,pnd,counts").map_err(io_err)?;
            for ((name, a), b) in PIPELINE_NAMES.iter().zip(fit).zip(cb) {
                writeln!(w, "{name},{a:?},{b:?}").map_err(io_err)?;
            }
            writeln!(w, "pair_rate_hz,{:?},{:?}", fit[0] * r_r, cb[0] * r_r).map_err(io_err)?;
            w
        }
        Reconstruction::Single(v) => {
            let mut w = create(out, "pn.csv")?;
            for (k, v) in &meta {
                writeln!(w, "# {k} = {v}").map_err(io_err)?;
            }
            writeln!(w, "n,p").map_err(io_err)?;
            for (n, p) in v.iter().enumerate() {
                writeln!(w, "{n},{p:?}").map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
            let mut w = create(out, "characteristics.csv")?;
            writeln!(w, "characteristic,pnd").map_err(io_err)?;
            writeln!(w, "p1,{:?}", v[1]).map_err(io_err)?;
            writeln!(w, "g2,{:?}", g2_marginal(v).unwrap_or(f64::NAN)).map_err(io_err)?;
            writeln!(w, "photon_rate_hz,{:?}", v[1] * r_r).map_err(io_err)?;
            w
        }
    };
    w.flush().map_err(io_err)?;

    if cfg.bootstrap.is_some() {
        run_bootstrap(cfg, out, seed, &loaded, objective, reps)?;
    }
    if !est.converged {
        return Err(CliError::NotConverged(format!(
            "the fit did not converge in {} iterations; results were written but should not be trusted",
            est.iterations
        )));
    }
    Ok(())
}

pub fn cmd_bootstrap(cfg: &RunConfig, out: &Path, seed: u64, counts: &Path, reps: Option<usize>) -> Result<(), CliError> {
    let loaded = load_counts(cfg, counts)?;
    let objective = parse_method(&cfg.estimate.method, "estimate.method")?;
    run_bootstrap(cfg, out, seed, &loaded, objective, reps)
}

fn single_pipeline<'a>(
    model: &'a LikelihoodModel,
    objective: Objective,
    opts: EstimateOptions,
) -> impl Fn(&[CountRecord]) -> ppstat::Result<Vec<f64>> + Sync + 'a {
    move |records| {
        let est = estimate(objective, records, model, &opts)?;
        let v = est.reconstruction.cells();
        Ok(vec![v[1], g2_marginal(v)?])
    }
}

fn run_bootstrap(
    cfg: &RunConfig,
    out: &Path,
    seed: u64,
    loaded: &Loaded,
    objective: Objective,
    reps: Option<usize>,
) -> Result<(), CliError> {
    let section = cfg.bootstrap.as_ref().map(|b| (b.n_boot, b.sample_sizes.clone())).unwrap_or((100, None));
    let n_boot = reps.unwrap_or(section.0);
    let sizes: Vec<u64> = match section.1 {
        Some(v) => v.iter().map(|s| trial_count(*s, "bootstrap.sample_sizes")).collect::<Result<_, _>>()?,
        None => vec![trial_count(loaded.records[0].n_m().round().max(1.0), "n_m")?],
    };
    let opts = EstimateOptions { restarts: 0, ..cfg.estimate_options(seed) };
    let mut rows = Vec::new();
    for (k, &size) in sizes.iter().enumerate() {
        let samples = bootstrap(&loaded.records, n_boot, size, seed.wrapping_add(k as u64))?;
        let summary = if loaded.model.layout() == Layout::Bipartite {
            bootstrap_stats(&samples, size, &PIPELINE_NAMES, characteristics_pipeline(&loaded.model, objective, opts))?
        } else {
            bootstrap_stats(&samples, size, &["p1", "g2"], single_pipeline(&loaded.model, objective, opts))?
        };
        rows.extend(summary);
    }
    write_bootstrap_csv(&rows, create(out, "bootstrap.csv")?)?;
    Ok(())
}

pub fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = flag.or_else(|| cfg.out.as_ref().map(|p| cfg.resolve(p))).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}
