//! Subcommand implementations. Every output is a headered comma-separated
//! file with `#`-prefixed metadata lines, written atomically; numeric
//! payloads depend only on the configuration and seed.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{stdin, Read, Write as IoWrite};
use std::path::{Path, PathBuf};

use extload_core::basis::AllowedTypes;
use extload_core::binning::{
    binned_extreme_load_from_model, fit_binned, quantile_difference_grid, BinGrid, BinParams,
};
use extload_core::dist::{target_exceedance, WindDistKind, WindDistParams};
use extload_core::extreme::{
    estimate_extreme_load, pointwise_credible_band, BandAxis, EstimateConfig, QuantileResult,
};
use extload_core::fit::Likelihood;
use extload_core::ingest::{
    aggregate_raw, read_raw_samples, read_records, write_atomic, write_quantile_draws,
    write_quantile_result, write_records,
};
use extload_core::rjs::{run_chain, ChainConfig, PosteriorDraw};
use extload_core::scoring::{compare_methods, ScoreConfig, ScoreReport};
use extload_core::simgen::{generate_reference_quantiles, generate_training, SimConfig};
use extload_core::wind::{
    fit_turbulence, sample_wind_joint_seeded, select_wind_family, TurbulenceFit, WindFit,
};
use extload_core::{child_seed, Error, Result, TenMinRecord};

use crate::config::RunConfig;

const TAG_TURB: u64 = 0x5455_5242;
const TAG_PAIRS: u64 = 0x5041_4952;
const TAG_LOAD: u64 = 0x4C4F_4144;
const TAG_BIN: u64 = 0x4249_4E51;
const TAG_SCORE: u64 = 0x5343_4F52;
const TAG_BAND: u64 = 0x424E_4443;

fn read_input(path: &Path) -> Result<Vec<TenMinRecord>> {
    let file = File::open(path)?;
    let (records, _) = read_records(file)?;
    if records.is_empty() {
        return Err(Error::invalid_argument(format!(
            "no records in {}",
            path.display()
        )));
    }
    Ok(records)
}

fn metadata_block(meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out
}

fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents.as_bytes())
}

fn allowed_types(codes: &[u8]) -> Result<AllowedTypes> {
    AllowedTypes::from_codes(codes)
}

fn format_prob(p: f64) -> String {
    // decimal form keeps file names readable for the usual targets
    if p >= 1e-6 {
        format!("{p:.8}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        format!("{p:e}")
    }
}

fn format_years(t: f64) -> String {
    if t.fract() == 0.0 {
        format!("{}", t as i64)
    } else {
        format!("{t}")
    }
}

type WindSubmodel = (WindFit, TurbulenceFit, Vec<(f64, f64)>);

/// Wind submodel end to end: family selection, turbulence chain, joint
/// predictive pairs. Seeds derive from the run seed, so the spline and
/// binning pipelines consume identical pairs.
fn step_two(records: &[TenMinRecord], cfg: &RunConfig) -> Result<WindSubmodel> {
    let v: Vec<f64> = records.iter().map(|r| r.v).collect();
    let s: Vec<f64> = records.iter().map(|r| r.s).collect();
    let wind = select_wind_family(&v)?;
    let turb_chain = ChainConfig {
        burn_in: cfg.burn_in,
        n_draws: cfg.m_w,
        seed: child_seed(cfg.seed, TAG_TURB, 0),
        k_max: cfg.k_max,
        ..ChainConfig::default()
    };
    let turb = fit_turbulence(&v, &s, &turb_chain)?;
    let pairs = sample_wind_joint_seeded(
        &wind,
        &turb,
        cfg.m_w,
        cfg.n_w,
        child_seed(cfg.seed, TAG_PAIRS, 0),
    )?;
    Ok((wind, turb, pairs))
}

fn render_sic_table(wind: &WindFit, meta: &[(String, String)]) -> String {
    let mut out = metadata_block(meta);
    let _ = writeln!(out, "# chosen: {}", wind.chosen.kind.name());
    for (kind, reason) in &wind.failures {
        let _ = writeln!(out, "# failed: {} ({reason})", kind.name());
    }
    let _ = writeln!(out, "family,sic");
    for kind in WindDistKind::ALL {
        if let Some(sic) = wind.sic_of(kind) {
            let _ = writeln!(out, "{},{}", kind.name(), sic);
        }
    }
    out
}

fn render_wind_fit(wind: &WindFit, meta: &[(String, String)]) -> String {
    let mut out = metadata_block(meta);
    let _ = writeln!(out, "# family: {}", wind.chosen.kind.name());
    let _ = writeln!(out, "key,value");
    let _ = writeln!(out, "loglik,{}", wind.loglik);
    for (i, nu) in wind.chosen.nu.iter().enumerate() {
        let _ = writeln!(out, "nu{},{}", i + 1, nu);
    }
    for i in 0..wind.nu_cov.nrows() {
        for j in 0..wind.nu_cov.ncols() {
            let _ = writeln!(out, "cov{}{},{}", i + 1, j + 1, wind.nu_cov[(i, j)]);
        }
    }
    out
}

fn render_pairs(pairs: &[(f64, f64)], meta: &[(String, String)]) -> String {
    let mut out = metadata_block(meta);
    let _ = writeln!(out, "v,s");
    for (v, s) in pairs {
        let _ = writeln!(out, "{v},{s}");
    }
    out
}

fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    let mut header_seen = false;
    for (pos, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line != "v,s" {
                return Err(Error::Ingest {
                    line: pos + 1,
                    msg: format!("expected header 'v,s', got '{line}'"),
                });
            }
            continue;
        }
        let (v, s) = line.split_once(',').ok_or_else(|| Error::Ingest {
            line: pos + 1,
            msg: "expected two fields".into(),
        })?;
        let parse = |x: &str| {
            x.trim().parse::<f64>().map_err(|_| Error::Ingest {
                line: pos + 1,
                msg: format!("cannot parse '{x}'"),
            })
        };
        pairs.push((parse(v)?, parse(s)?));
    }
    if pairs.is_empty() {
        return Err(Error::invalid_argument("wind-pair file has no rows"));
    }
    Ok(pairs)
}

fn write_quantile_files(
    out_dir: &Path,
    stem: &str,
    result: &QuantileResult,
    meta: &[(String, String)],
) -> Result<()> {
    let mut buf = Vec::new();
    write_quantile_result(&mut buf, result, meta)?;
    write_atomic(&out_dir.join(format!("{stem}.csv")), &buf)?;
    let mut draws = Vec::new();
    write_quantile_draws(&mut draws, result, meta)?;
    write_atomic(&out_dir.join(format!("{stem}_draws.csv")), &draws)?;
    Ok(())
}

pub fn cmd_ingest(input: Option<PathBuf>, output: Option<PathBuf>, cfg: &RunConfig) -> Result<()> {
    let samples = match &input {
        Some(path) => read_raw_samples(File::open(path)?)?,
        None => {
            let mut buf = String::new();
            stdin().read_to_string(&mut buf)?;
            read_raw_samples(buf.as_bytes())?
        }
    };
    let outcome = aggregate_raw(samples, cfg.block_len_secs)?;
    let mut meta = cfg.metadata();
    meta.push(("block_len_secs".into(), cfg.block_len_secs.to_string()));
    meta.push(("dropped_blocks".into(), outcome.dropped_blocks.to_string()));
    let mut buf = Vec::new();
    write_records(&mut buf, &outcome.records, &meta)?;
    match &output {
        Some(path) => write_atomic(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    eprintln!(
        "ingest: {} records written to {} ({} incomplete block(s) dropped)",
        outcome.records.len(),
        output
            .as_deref()
            .map_or_else(|| "stdout".to_string(), |p| p.display().to_string()),
        outcome.dropped_blocks
    );
    Ok(())
}

pub fn cmd_fit_wind(input: PathBuf, out_dir: PathBuf, cfg: &RunConfig) -> Result<()> {
    let records = read_input(&input)?;
    let (wind, turb, _) = step_two(&records, cfg)?;
    let meta = cfg.metadata();
    write_text(
        &out_dir.join("sic_table.csv"),
        &render_sic_table(&wind, &meta),
    )?;
    write_text(
        &out_dir.join("wind_fit.csv"),
        &render_wind_fit(&wind, &meta),
    )?;

    let mut out = metadata_block(&meta);
    let _ = writeln!(out, "draw,k_eta,k_delta");
    for (i, d) in turb.draws.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i, d.phi_loc.k(), d.phi_scale.k());
    }
    write_text(&out_dir.join("turbulence_fit.csv"), &out)?;
    eprintln!(
        "fit-wind: chose {} (see {})",
        wind.chosen.kind.name(),
        out_dir.join("sic_table.csv").display()
    );
    Ok(())
}

fn estimate_config(cfg: &RunConfig) -> Result<EstimateConfig> {
    Ok(EstimateConfig {
        chain: ChainConfig {
            burn_in: cfg.burn_in,
            n_draws: cfg.m_l,
            seed: child_seed(cfg.seed, TAG_LOAD, 0),
            k_max: cfg.k_max,
            ..ChainConfig::default()
        },
        allowed_loc: allowed_types(&cfg.allowed_mu)?,
        allowed_scale: allowed_types(&cfg.allowed_sigma)?,
        n_l: cfg.n_l,
    })
}

pub fn cmd_estimate(
    input: PathBuf,
    out_dir: PathBuf,
    trace: Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<()> {
    let records = read_input(&input)?;
    let (wind, _turb, pairs) = step_two(&records, cfg)?;
    let meta = cfg.metadata();
    write_text(
        &out_dir.join("sic_table.csv"),
        &render_sic_table(&wind, &meta),
    )?;
    write_text(
        &out_dir.join("wind_pairs.csv"),
        &render_pairs(&pairs, &meta),
    )?;

    let probs: Vec<f64> = cfg
        .t_years
        .iter()
        .map(|&t| target_exceedance(t))
        .collect::<Result<_>>()?;
    let mut trace_buf: Option<Vec<u8>> = trace.as_ref().map(|_| Vec::new());
    let mut results = estimate_extreme_load(
        &records,
        &pairs,
        &estimate_config(cfg)?,
        &probs,
        trace_buf.as_mut().map(|b| b as &mut dyn std::io::Write),
    )?;
    if let (Some(path), Some(buf)) = (&trace, &trace_buf) {
        write_atomic(path, buf)?;
    }
    for (t, result) in cfg.t_years.iter().zip(&mut results) {
        result.t_years = *t; // requested value, not the round-tripped one
        let mut m = meta.clone();
        m.push(("method".into(), "spline".into()));
        write_quantile_files(
            &out_dir,
            &format!("quantile_t{}", format_years(*t)),
            result,
            &m,
        )?;
        eprintln!(
            "estimate: T={t}y mean {:.4} [{:.4}, {:.4}]",
            result.mean, result.ci_lower, result.ci_upper
        );
    }
    Ok(())
}

fn render_bin_summary(
    model: &extload_core::binning::BinnedModel,
    meta: &[(String, String)],
) -> String {
    let mut out = metadata_block(meta);
    let _ = writeln!(out, "# xi_shared: {}", model.xi_shared);
    let _ = writeln!(out, "bin,v_lo,v_hi,s_lo,s_hi,count,mu,sigma,interpolated");
    for (idx, bin) in model.bins.iter().enumerate() {
        let ((vl, vh), (sl, sh)) = model.grid.ranges(idx);
        match bin {
            BinParams::Fitted {
                mu, sigma, count, ..
            } => {
                let _ = writeln!(out, "{idx},{vl},{vh},{sl},{sh},{count},{mu},{sigma},0");
            }
            BinParams::Interpolated { mu, sigma } => {
                let _ = writeln!(out, "{idx},{vl},{vh},{sl},{sh},0,{mu},{sigma},1");
            }
            BinParams::Excluded => {
                let _ = writeln!(out, "{idx},{vl},{vh},{sl},{sh},0,,,");
            }
        }
    }
    out
}

pub fn cmd_estimate_binned(
    input: PathBuf,
    out_dir: PathBuf,
    wind_pairs: Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<()> {
    let records = read_input(&input)?;
    let pairs = match wind_pairs {
        Some(path) => read_pairs(&path)?,
        None => step_two(&records, cfg)?.2,
    };
    let grid = BinGrid::from_data(&records, cfg.grid_v, cfg.grid_s)?;
    let model = fit_binned(&records, &grid)?;
    let meta = cfg.metadata();
    write_text(
        &out_dir.join("bin_summary.csv"),
        &render_bin_summary(&model, &meta),
    )?;

    let probs: Vec<f64> = cfg
        .t_years
        .iter()
        .map(|&t| target_exceedance(t))
        .collect::<Result<_>>()?;
    let mut results = binned_extreme_load_from_model(
        &model,
        &pairs,
        &probs,
        cfg.m_l,
        cfg.n_l,
        child_seed(cfg.seed, TAG_BIN, 0),
    )?;
    for (t, result) in cfg.t_years.iter().zip(&mut results) {
        result.t_years = *t;
        let mut m = meta.clone();
        m.push(("method".into(), "binning".into()));
        write_quantile_files(
            &out_dir,
            &format!("binned_quantile_t{}", format_years(*t)),
            result,
            &m,
        )?;
        eprintln!(
            "estimate-binned: T={t}y mean {:.4} [{:.4}, {:.4}]",
            result.mean, result.ci_lower, result.ci_upper
        );
    }
    Ok(())
}

/// The tau grid of the sweep series (the loss-versus-tau plot).
fn sweep_taus() -> Vec<f64> {
    let mut taus: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
    taus.push(0.99);
    taus
}

fn render_score_table(
    reports: &[ScoreReport],
    taus: &[f64],
    bs: &[f64],
    meta: &[(String, String)],
) -> String {
    let mut out = metadata_block(meta);
    let _ = writeln!(out, "tau,b,binning,spline,reduction_pct,n_repeats,n_failed");
    for r in reports {
        if taus.contains(&r.tau) && bs.contains(&r.b) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.tau, r.b, r.binning_mean, r.spline_mean, r.reduction_pct, r.n_repeats, r.n_failed
            );
        }
    }
    out
}

pub fn cmd_score(input: PathBuf, out_dir: PathBuf, cfg: &RunConfig) -> Result<()> {
    let records = read_input(&input)?;
    // one pass computes both the table cells and the sweep series
    let mut tau_list = cfg.taus.clone();
    for t in sweep_taus() {
        if !tau_list.contains(&t) {
            tau_list.push(t);
        }
    }
    let mut b_list = cfg.bs.clone();
    if !b_list.contains(&1.0) {
        b_list.push(1.0);
    }
    let score_cfg = ScoreConfig {
        tau_list,
        b_list,
        n_repeats: cfg.score_repeats,
        split_frac: cfg.split_frac,
        seed: child_seed(cfg.seed, TAG_SCORE, 0),
        chain: ChainConfig {
            burn_in: cfg.burn_in,
            n_draws: cfg.score_draws,
            k_max: cfg.k_max,
            ..ChainConfig::default()
        },
        allowed_loc: allowed_types(&cfg.allowed_mu)?,
        allowed_scale: allowed_types(&cfg.allowed_sigma)?,
        n_l: cfg.n_l,
        grid_v: cfg.grid_v,
        grid_s: cfg.grid_s,
        ..ScoreConfig::default()
    };
    let reports = compare_methods(&records, &score_cfg)?;
    let meta = cfg.metadata();
    write_text(
        &out_dir.join("score_table.csv"),
        &render_score_table(&reports, &cfg.taus, &cfg.bs, &meta),
    )?;
    write_text(
        &out_dir.join("tau_sweep.csv"),
        &render_score_table(&reports, &sweep_taus(), &[1.0], &meta),
    )?;

    // per-bin 0.99-quantile difference on the full data, for the
    // standardized comparison map
    let grid = BinGrid::from_data(&records, cfg.grid_v, cfg.grid_s)?;
    let model = fit_binned(&records, &grid)?;
    let (draws, _) = run_chain(
        Likelihood::Gev,
        &records,
        score_cfg.allowed_loc,
        score_cfg.allowed_scale,
        &ChainConfig {
            seed: child_seed(cfg.seed, TAG_LOAD, 1),
            ..score_cfg.chain.clone()
        },
        None,
    )?;
    let rows = quantile_difference_grid(
        &model,
        &draws,
        &records,
        0.99,
        cfg.n_l,
        child_seed(cfg.seed, TAG_BIN, 1),
    )?;
    let mut out = metadata_block(&meta);
    let _ = writeln!(out, "# tau: 0.99");
    let _ = writeln!(
        out,
        "bin,v_median,s_median,count,binning_q,spline_q,difference,std_difference"
    );
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.bin,
            r.v_median,
            r.s_median,
            r.count,
            r.binning_quantile,
            r.spline_quantile,
            r.difference,
            r.std_difference
        );
    }
    write_text(&out_dir.join("diff_grid.csv"), &out)?;
    for r in reports
        .iter()
        .filter(|r| cfg.taus.contains(&r.tau) && cfg.bs.contains(&r.b))
    {
        eprintln!(
            "score: tau={} b={} binning {:.5} spline {:.5} ({:+.1}%)",
            r.tau, r.b, r.binning_mean, r.spline_mean, r.reduction_pct
        );
    }
    Ok(())
}

fn sim_config(cfg: &RunConfig) -> Result<SimConfig> {
    if cfg.sim_weibull.len() != 3 {
        return Err(Error::invalid_argument(
            "sim_weibull needs shape,scale,shift",
        ));
    }
    Ok(SimConfig {
        n_blocks: cfg.sim_blocks,
        block_size: cfg.sim_block_size,
        weibull: WindDistParams::new(WindDistKind::W3, cfg.sim_weibull.clone())?,
        seed: cfg.seed,
    })
}

fn render_reference(rows: &[Vec<f64>], probs: &[f64], meta: &[(String, String)]) -> String {
    let mut out = metadata_block(meta);
    let cols: Vec<String> = probs
        .iter()
        .map(|p| format!("q_{}", format_prob(*p)))
        .collect();
    let _ = writeln!(out, "dataset,{}", cols.join(","));
    for (i, row) in rows.iter().enumerate() {
        let vals: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{},{}", i, vals.join(","));
    }
    out
}

fn simulate_outputs(out_dir: &Path, cfg: &RunConfig) -> Result<(Vec<TenMinRecord>, Vec<Vec<f64>>)> {
    let sim = sim_config(cfg)?;
    let train = generate_training(&sim)?;
    let mut meta = cfg.metadata();
    meta.push(("generator".into(), "block-maxima".into()));
    meta.push((
        "weibull".into(),
        format!(
            "{},{},{}",
            cfg.sim_weibull[0], cfg.sim_weibull[1], cfg.sim_weibull[2]
        ),
    ));
    meta.push(("n_blocks".into(), cfg.sim_blocks.to_string()));
    meta.push(("block_size".into(), cfg.sim_block_size.to_string()));
    let mut buf = Vec::new();
    write_records(&mut buf, &train, &meta)?;
    write_atomic(&out_dir.join("train.csv"), &buf)?;

    let refs = generate_reference_quantiles(&sim, cfg.ref_datasets, cfg.ref_size, &cfg.sim_probs)?;
    let mut ref_meta = meta.clone();
    ref_meta.push(("ref_datasets".into(), cfg.ref_datasets.to_string()));
    ref_meta.push(("ref_size".into(), cfg.ref_size.to_string()));
    write_text(
        &out_dir.join("reference_quantiles.csv"),
        &render_reference(&refs, &cfg.sim_probs, &ref_meta),
    )?;
    Ok((train, refs))
}

pub fn cmd_simulate(out_dir: PathBuf, cfg: &RunConfig) -> Result<()> {
    let (train, refs) = simulate_outputs(&out_dir, cfg)?;
    eprintln!(
        "simulate: {} training pairs, {} reference datasets written to {}",
        train.len(),
        refs.len(),
        out_dir.display()
    );
    Ok(())
}

struct MethodSummary {
    mean: f64,
    lo: f64,
    hi: f64,
}

fn render_verdict(
    probs: &[f64],
    refs: &[Vec<f64>],
    spline: &[QuantileResult],
    binned: &[QuantileResult],
    meta: &[(String, String)],
) -> (String, bool) {
    let mut out = metadata_block(meta);
    let _ = writeln!(
        out,
        "p,ref_min,ref_max,spline_mean,spline_lo,spline_hi,binning_mean,binning_lo,binning_hi,spline_in_range,binning_gt_spline,binning_wider"
    );
    let mut all_ok = true;
    for (j, &p) in probs.iter().enumerate() {
        let ref_vals: Vec<f64> = refs.iter().map(|row| row[j]).collect();
        let ref_min = ref_vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let ref_max = ref_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s = MethodSummary {
            mean: spline[j].mean,
            lo: spline[j].ci_lower,
            hi: spline[j].ci_upper,
        };
        let b = MethodSummary {
            mean: binned[j].mean,
            lo: binned[j].ci_lower,
            hi: binned[j].ci_upper,
        };
        let in_range = s.mean >= ref_min && s.mean <= ref_max;
        let bin_gt = b.mean > s.mean;
        let wider = (b.hi - b.lo) > (s.hi - s.lo);
        all_ok &= in_range && bin_gt && wider;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            p,
            ref_min,
            ref_max,
            s.mean,
            s.lo,
            s.hi,
            b.mean,
            b.lo,
            b.hi,
            u8::from(in_range),
            u8::from(bin_gt),
            u8::from(wider)
        );
    }
    let _ = writeln!(out, "# all_checks_pass: {}", u8::from(all_ok));
    (out, all_ok)
}

pub fn cmd_replicate_sim(out_dir: PathBuf, cfg: &RunConfig) -> Result<()> {
    let (train, refs) = simulate_outputs(&out_dir, cfg)?;
    eprintln!("replicate-sim: training and reference sets generated");

    // the generator has a single covariate; restrict both model functions
    // to speed hinges and bin over speed alone
    let mut rep_cfg = cfg.clone();
    rep_cfg.allowed_mu = vec![1];
    rep_cfg.allowed_sigma = vec![1];
    rep_cfg.grid_s = 1;

    let (wind, _turb, pairs) = step_two(&train, &rep_cfg)?;
    let meta = rep_cfg.metadata();
    write_text(
        &out_dir.join("sic_table.csv"),
        &render_sic_table(&wind, &meta),
    )?;
    write_text(
        &out_dir.join("wind_pairs.csv"),
        &render_pairs(&pairs, &meta),
    )?;
    eprintln!(
        "replicate-sim: wind submodel done ({})",
        wind.chosen.kind.name()
    );

    let spline = estimate_extreme_load(
        &train,
        &pairs,
        &estimate_config(&rep_cfg)?,
        &rep_cfg.sim_probs,
        None,
    )?;
    eprintln!("replicate-sim: spline estimate done");
    let grid = BinGrid::from_data(&train, rep_cfg.grid_v, rep_cfg.grid_s)?;
    let model = fit_binned(&train, &grid)?;
    write_text(
        &out_dir.join("bin_summary.csv"),
        &render_bin_summary(&model, &meta),
    )?;
    let binned = binned_extreme_load_from_model(
        &model,
        &pairs,
        &rep_cfg.sim_probs,
        rep_cfg.m_l,
        rep_cfg.n_l,
        child_seed(rep_cfg.seed, TAG_BIN, 0),
    )?;
    eprintln!("replicate-sim: binning estimate done");

    for (j, &p) in rep_cfg.sim_probs.iter().enumerate() {
        let mut m = meta.clone();
        m.push(("method".into(), "spline".into()));
        write_quantile_files(
            &out_dir,
            &format!("spline_quantile_p{}", format_prob(p)),
            &spline[j],
            &m,
        )?;
        let mut m = meta.clone();
        m.push(("method".into(), "binning".into()));
        write_quantile_files(
            &out_dir,
            &format!("binned_quantile_p{}", format_prob(p)),
            &binned[j],
            &m,
        )?;
    }

    let (verdict, all_ok) = render_verdict(&rep_cfg.sim_probs, &refs, &spline, &binned, &meta);
    write_text(&out_dir.join("verdict.csv"), &verdict)?;
    eprintln!(
        "replicate-sim: verdict written ({})",
        if all_ok {
            "all checks pass"
        } else {
            "some checks fail"
        }
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_credible_band(
    input: PathBuf,
    out_dir: PathBuf,
    axis: BandAxis,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    halfwidth: Option<f64>,
    n_chain_draws: usize,
    cfg: &RunConfig,
) -> Result<()> {
    let records = read_input(&input)?;
    let chain = ChainConfig {
        burn_in: cfg.burn_in,
        n_draws: n_chain_draws,
        seed: child_seed(cfg.seed, TAG_LOAD, 0),
        k_max: cfg.k_max,
        ..ChainConfig::default()
    };
    let (draws, _): (Vec<PosteriorDraw>, _) = run_chain(
        Likelihood::Gev,
        &records,
        allowed_types(&cfg.allowed_mu)?,
        allowed_types(&cfg.allowed_sigma)?,
        &chain,
        None,
    )?;

    let values = |r: &TenMinRecord| match axis {
        BandAxis::V => r.v,
        BandAxis::S => r.s,
    };
    let lo = start.unwrap_or_else(|| {
        records
            .iter()
            .map(values)
            .fold(f64::INFINITY, f64::min)
            .ceil()
    });
    let hi = stop.unwrap_or_else(|| {
        records
            .iter()
            .map(values)
            .fold(f64::NEG_INFINITY, f64::max)
            .floor()
    });
    let step = step.unwrap_or(match axis {
        BandAxis::V => 1.0,
        BandAxis::S => 0.2,
    });
    let halfwidth = halfwidth.unwrap_or_else(|| axis.default_halfwidth());
    if step <= 0.0 || hi < lo {
        return Err(Error::invalid_argument("empty or inverted sweep range"));
    }

    let mut out = metadata_block(&cfg.metadata());
    let _ = writeln!(out, "# axis: {}", axis.name());
    let _ = writeln!(out, "# halfwidth: {halfwidth}");
    let _ = writeln!(out, "center,lower,upper,n_obs");
    let mut center = lo;
    let mut skipped = 0usize;
    let band_seed = child_seed(cfg.seed, TAG_BAND, 0);
    while center <= hi + 1e-9 {
        match pointwise_credible_band(&records, &draws, axis, center, halfwidth, 10, band_seed) {
            Ok(band) => {
                let _ = writeln!(out, "{center},{},{},{}", band.lower, band.upper, band.n_obs);
            }
            Err(Error::EmptySlab { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
        center += step;
    }
    let _ = writeln!(out, "# empty_slabs_skipped: {skipped}");
    write_text(&out_dir.join(format!("band_{}.csv", axis.name())), &out)?;
    eprintln!(
        "credible-band: wrote band_{}.csv ({} empty slab(s) skipped)",
        axis.name(),
        skipped
    );
    Ok(())
}
