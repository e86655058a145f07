use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use graph_filterbank::audit::audit_pyramid;
use graph_filterbank::fourier::{compute_basis_with_report, BasisOptions};
use graph_filterbank::io::{
    load_pyramid, save_pyramid, write_columns_csv, write_energies_csv, write_json, write_matrix_csv, write_phi_csv,
};
use graph_filterbank::linalg::sym_eigenvalues;
use graph_filterbank::multires::{
    keep_top_k, lowpass_reconstruction, threshold_highpass, Pyramid, PyramidConfig,
};
use graph_filterbank::{
    build_pyramid, generate, laplacian, parse_graph, pyramid_analyze, pyramid_synthesize, seeds, write_edge_list,
    Graph, Signal,
};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::config::{Command, GraphSource, RunConfig, ThresholdChoice};

const GRAPH_STAGE: u64 = 0;
const SIGNAL_STAGE: u64 = 1;
const NOISE_STAGE: u64 = 2;
const PYRAMID_STAGE: u64 = 3;

/// A verification step ran to completion and reported a failure.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "check failed: {}", self.0)
    }
}

impl std::error::Error for CheckFailed {}

pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    fs::write(cfg.out.join("run_config.toml"), cfg.to_toml()?)?;
    match cfg.command {
        Command::Generate => cmd_generate(cfg),
        Command::Basis => cmd_basis(cfg),
        Command::Roundtrip => cmd_roundtrip(cfg),
        Command::Denoise => cmd_denoise(cfg),
        Command::Locality => cmd_locality(cfg),
        Command::Verify => cmd_verify(cfg),
    }
}

fn load_graph(cfg: &RunConfig) -> anyhow::Result<(Graph, Option<Signal>)> {
    match &cfg.graph {
        GraphSource::File { path } => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(parse_graph(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        source => {
            let kind = source.generator().expect("generator source");
            Ok((generate(kind, seeds::derive(cfg.seed, GRAPH_STAGE))?, None))
        }
    }
}

fn basis_options(cfg: &RunConfig) -> BasisOptions {
    let mut opts = BasisOptions::default();
    opts.solver.record_trace = cfg.verbose;
    opts
}

fn pyramid_config(cfg: &RunConfig) -> PyramidConfig {
    PyramidConfig {
        depth: cfg.depth,
        eps: cfg.eps,
        seed: seeds::derive(cfg.seed, PYRAMID_STAGE),
        design: cfg.filter.design(),
        sampling: cfg.sampling,
        basis: basis_options(cfg),
    }
}

fn out(cfg: &RunConfig, name: &str) -> std::path::PathBuf {
    cfg.out.join(name)
}

fn write_coords(path: &Path, g: &Graph) -> anyhow::Result<()> {
    if let Some(c) = g.coords() {
        let x: Vec<f64> = c.iter().map(|p| p[0]).collect();
        let y: Vec<f64> = c.iter().map(|p| p[1]).collect();
        write_columns_csv(path, &["x", "y"], &[&x, &y])?;
    }
    Ok(())
}

fn cmd_generate(cfg: &RunConfig) -> anyhow::Result<()> {
    let (g, signal) = load_graph(cfg)?;
    fs::write(out(cfg, "graph.txt"), write_edge_list(&g, signal.as_ref()))?;
    write_coords(&out(cfg, "coords.csv"), &g)?;
    println!("wrote graph with {} vertices and {} edges to {}", g.n(), g.edges().len(), cfg.out.display());
    Ok(())
}

#[derive(Serialize)]
struct BasisSummary {
    n: usize,
    low_channel: usize,
    qecqp_steps: usize,
    certificates_failed: usize,
    orthonormality_error: f64,
    folding_error: f64,
    max_energy_vs_laplacian: f64,
}

fn cmd_basis(cfg: &RunConfig) -> anyhow::Result<()> {
    let (g, _) = load_graph(cfg)?;
    let l = laplacian(&g);
    let pattern = cfg.sampling.pattern(&g)?;
    let (basis, report) = compute_basis_with_report(&l, &pattern, &basis_options(cfg))?;
    let eigs = sym_eigenvalues(l.matrix())?;

    write_matrix_csv(&out(cfg, "basis.csv"), basis.matrix())?;
    write_phi_csv(&out(cfg, "phi.csv"), basis.phi())?;
    write_energies_csv(&out(cfg, "energies.csv"), &basis, Some(&eigs))?;
    write_json(&out(cfg, "pattern.json"), &pattern)?;
    write_json(&out(cfg, "certificates.json"), &report)?;
    if cfg.verbose {
        let mut step = Vec::new();
        let mut mu2 = Vec::new();
        let mut fval = Vec::new();
        for s in &report.steps {
            for t in &s.trace {
                step.push(s.step as f64);
                mu2.push(t.mu2);
                fval.push(t.fval);
            }
        }
        write_columns_csv(&out(cfg, "qecqp_trace.csv"), &["step", "mu2", "fval"], &[&step, &mu2, &fval])?;
    }

    let failed = report.steps.iter().filter(|s| !s.certificate.passes()).count();
    let summary = BasisSummary {
        n: g.n(),
        low_channel: pattern.keep_low().len(),
        qecqp_steps: report.steps.len(),
        certificates_failed: failed,
        orthonormality_error: basis.orthonormality_error(),
        folding_error: basis.folding_error(),
        max_energy_vs_laplacian: basis.energies().iter().zip(&eigs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
    };
    write_json(&out(cfg, "basis_summary.json"), &summary)?;
    println!(
        "n={} |V_L|={} steps={} folding={:.2e} orthonormality={:.2e} max|energy-eig|={:.2e}",
        summary.n,
        summary.low_channel,
        summary.qecqp_steps,
        summary.folding_error,
        summary.orthonormality_error,
        summary.max_energy_vs_laplacian
    );
    if failed > 0 {
        return Err(CheckFailed(format!("{failed} QECQP certificates failed")).into());
    }
    Ok(())
}

fn random_signal(n: usize, rng: &mut ChaCha8Rng) -> Signal {
    Signal::new(DVector::from_fn(n, |_, _| StandardNormal.sample(rng)))
}

/// Ten kept-coefficient counts from the lowpass size up to the full tree.
fn default_sweep(lows: usize, total: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (0..10)
        .map(|i| lows + ((total - lows) as f64 * i as f64 / 9.0).round() as usize)
        .collect();
    ks.dedup();
    ks
}

#[derive(Serialize)]
struct RoundtripReport {
    n: usize,
    depth: usize,
    tolerance: f64,
    max_relative_error: f64,
    trials: Vec<TrialResult>,
}

#[derive(Serialize)]
struct TrialResult {
    trial: usize,
    relative_error: f64,
    lowpass_only_error: f64,
}

fn cmd_roundtrip(cfg: &RunConfig) -> anyhow::Result<()> {
    let (g, file_signal) = load_graph(cfg)?;
    let p = build_pyramid(&g, &pyramid_config(cfg))?;
    save_pyramid(&out(cfg, "pyramid"), &p)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, SIGNAL_STAGE));
    let signals: Vec<Signal> = file_signal
        .into_iter()
        .chain((0..cfg.trials).map(|_| random_signal(g.n(), &mut rng)))
        .take(cfg.trials)
        .collect();

    let mut trials = Vec::new();
    for (k, f) in signals.iter().enumerate() {
        let t = pyramid_analyze(&p, f)?;
        let back = pyramid_synthesize(&p, &t)?;
        let low = pyramid_synthesize(&p, &t.lowpass_only())?;
        trials.push(TrialResult { trial: k, relative_error: f.relative_error(&back), lowpass_only_error: f.relative_error(&low) });
    }
    let tolerance = if p.depth() == 1 { 1e-8 } else { 1e-7 };
    let max_re = trials.iter().map(|t| t.relative_error).fold(0.0, f64::max);
    let cols: [Vec<f64>; 3] = [
        trials.iter().map(|t| t.trial as f64).collect(),
        trials.iter().map(|t| t.relative_error).collect(),
        trials.iter().map(|t| t.lowpass_only_error).collect(),
    ];
    write_columns_csv(
        &out(cfg, "roundtrip.csv"),
        &["trial", "relative_error", "lowpass_only_error"],
        &[&cols[0], &cols[1], &cols[2]],
    )?;

    let f = &signals[0];
    let tree = pyramid_analyze(&p, f)?;
    let ks = if cfg.keep.is_empty() { default_sweep(tree.lows.len(), tree.len()) } else { cfg.keep.clone() };
    let mut errors = Vec::with_capacity(ks.len());
    for &k in &ks {
        errors.push(f.relative_error(&pyramid_synthesize(&p, &keep_top_k(&tree, k)?)?));
    }
    let kcol: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    write_columns_csv(&out(cfg, "compression.csv"), &["k", "relative_error"], &[&kcol, &errors])?;

    let report = RoundtripReport { n: g.n(), depth: p.depth(), tolerance, max_relative_error: max_re, trials };
    write_json(&out(cfg, "roundtrip.json"), &report)?;
    println!("n={} depth={} trials={} max RE={:.3e} (tolerance {:.0e})", g.n(), p.depth(), signals.len(), max_re, tolerance);
    if max_re > tolerance {
        return Err(CheckFailed(format!("reconstruction error {max_re:.3e} exceeds {tolerance:.0e}")).into());
    }
    Ok(())
}

/// x-coordinates rescaled to `[0, 5]`.
pub fn coordinate_signal(g: &Graph) -> anyhow::Result<Signal> {
    let Some(c) = g.coords() else {
        bail!("denoise needs vertex coordinates (use a grid or random_geometric graph)");
    };
    let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])));
    let span = if hi > lo { hi - lo } else { 1.0 };
    Ok(Signal::from(c.iter().map(|p| 5.0 * (p[0] - lo) / span).collect::<Vec<_>>()))
}

pub fn median_abs(values: &[f64]) -> f64 {
    let mut a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    a.sort_by(f64::total_cmp);
    let m = a.len() / 2;
    if a.len() % 2 == 0 {
        0.5 * (a[m - 1] + a[m])
    } else {
        a[m]
    }
}

#[derive(Serialize)]
struct DenoiseReport {
    n: usize,
    depth: usize,
    sigma: f64,
    threshold: f64,
    rmse_noisy: f64,
    rmse_denoised: f64,
    rmse_threshold_zero: f64,
    improved: bool,
}

fn cmd_denoise(cfg: &RunConfig) -> anyhow::Result<()> {
    let (g, _) = load_graph(cfg)?;
    let clean = coordinate_signal(&g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(cfg.seed, NOISE_STAGE));
    let normal = Normal::new(0.0, cfg.sigma)?;
    let noise: Vec<f64> = (0..g.n()).map(|_| normal.sample(&mut rng)).collect();
    let r = match cfg.threshold.rule {
        ThresholdChoice::Median => median_abs(&noise),
        ThresholdChoice::Fixed => cfg.threshold.r,
    };
    let noisy = Signal::new(clean.as_vector() + DVector::from_vec(noise));

    let p = build_pyramid(&g, &pyramid_config(cfg))?;
    let tree = pyramid_analyze(&p, &noisy)?;
    let denoised = pyramid_synthesize(&p, &threshold_highpass(&tree, r, cfg.threshold.direction)?)?;
    let zeroed = pyramid_synthesize(&p, &threshold_highpass(&tree, 0.0, cfg.threshold.direction)?)?;

    let c = g.coords().expect("checked by coordinate_signal");
    let vertex: Vec<f64> = (0..g.n()).map(|i| i as f64).collect();
    let x: Vec<f64> = c.iter().map(|p| p[0]).collect();
    let y: Vec<f64> = c.iter().map(|p| p[1]).collect();
    write_columns_csv(
        &out(cfg, "signals.csv"),
        &["vertex", "x", "y", "clean", "noisy", "denoised", "denoised_r0"],
        &[&vertex, &x, &y, clean.values(), noisy.values(), denoised.values(), zeroed.values()],
    )?;
    let report = DenoiseReport {
        n: g.n(),
        depth: p.depth(),
        sigma: cfg.sigma,
        threshold: r,
        rmse_noisy: noisy.rmse(&clean),
        rmse_denoised: denoised.rmse(&clean),
        rmse_threshold_zero: zeroed.rmse(&clean),
        improved: denoised.rmse(&clean) < noisy.rmse(&clean),
    };
    write_json(&out(cfg, "denoise.json"), &report)?;
    println!(
        "r={:.4} RMSE noisy={:.4} denoised={:.4} (r=0: {:.4})",
        r, report.rmse_noisy, report.rmse_denoised, report.rmse_threshold_zero
    );
    Ok(())
}

/// 0 on vertices `i < ⌊n/2⌋`, 2 on the rest.
pub fn step_signal(n: usize) -> Signal {
    Signal::from((0..n).map(|i| if 2 * (i + 1) <= n { 0.0 } else { 2.0 }).collect::<Vec<_>>())
}

fn cmd_locality(cfg: &RunConfig) -> anyhow::Result<()> {
    let (g, _) = load_graph(cfg)?;
    let f = step_signal(g.n());
    let p = build_pyramid(&g, &pyramid_config(cfg))?;
    let layers: Vec<Signal> = (1..=p.depth()).map(|k| lowpass_reconstruction(&p, &f, k)).collect::<Result<_, _>>()?;

    let vertex: Vec<f64> = (0..g.n()).map(|i| i as f64).collect();
    let names: Vec<String> = (1..=p.depth()).map(|k| format!("layer{k}")).collect();
    let mut headers = vec!["vertex", "signal"];
    headers.extend(names.iter().map(String::as_str));
    let mut cols: Vec<&[f64]> = vec![&vertex, f.values()];
    cols.extend(layers.iter().map(Signal::values));
    write_columns_csv(&out(cfg, "locality.csv"), &headers, &cols)?;

    let errors: Vec<f64> = layers.iter().map(|r| f.relative_error(r)).collect();
    write_json(&out(cfg, "locality.json"), &serde_json::json!({ "n": g.n(), "depth": p.depth(), "relative_errors": errors }))?;
    for (k, e) in errors.iter().enumerate() {
        println!("layer {}: RE={:.4}", k + 1, e);
    }
    Ok(())
}

fn cmd_verify(cfg: &RunConfig) -> anyhow::Result<()> {
    let p: Pyramid = match &cfg.pyramid {
        Some(dir) => load_pyramid(dir).with_context(|| format!("loading pyramid from {}", dir.display()))?,
        None => {
            let (g, _) = load_graph(cfg)?;
            build_pyramid(&g, &pyramid_config(cfg))?
        }
    };
    let report = audit_pyramid(&p);
    write_json(&out(cfg, "verify.json"), &report)?;
    for c in &report.checks {
        println!(
            "{} level {} {:<28} {:.3e} (tol {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.level,
            c.name,
            c.value,
            c.tol
        );
    }
    let failed = report.failures().count();
    if failed > 0 {
        return Err(CheckFailed(format!("{failed} of {} checks failed", report.checks.len())).into());
    }
    println!("all {} checks passed", report.checks.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spans_lowpass_to_full() {
        let ks = default_sweep(25, 100);
        assert_eq!(ks.len(), 10);
        assert_eq!(ks[0], 25);
        assert_eq!(*ks.last().unwrap(), 100);
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn median_and_step() {
        assert_eq!(median_abs(&[-3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_abs(&[-4.0, 1.0, 2.0, 0.0]), 1.5);
        assert_eq!(step_signal(4).values(), &[0.0, 0.0, 2.0, 2.0]);
        assert_eq!(step_signal(5).values(), &[0.0, 0.0, 2.0, 2.0, 2.0]);
    }
}
