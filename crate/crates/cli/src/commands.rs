use std::io::Write;
use std::path::{Path, PathBuf};

use fbmexit_core::exit::{
    estimate_beta, estimate_persistence_exponent, estimate_polynomial_exponent, survival_ladder, BetaEstimate,
    DerivedExponents, KappaPoint, LadderFit, McSettings, ProblemParams, Regime,
};
use fbmexit_core::fbm::{
    io, CholeskySampler, CirculantSampler, HurstParam, MultiPath, RiemannLiouvilleSampler, SampledPath, TimeGrid,
};
use fbmexit_core::ladder::{write_ladder_csv, ExponentFit, LadderPoint};
use fbmexit_core::parallel::{map_chunks, Workers};
use fbmexit_core::rng::SeedSpec;
use fbmexit_core::smalldev::{brownian_kappa, estimate_kappa_hd, KappaConstant, SmallDevEstimate};
use fbmexit_core::variational::{theorem_constant, theorem_constant_refined, SolutionRecord};
use serde::{Deserialize, Serialize};

use crate::config::{
    self, BetaConfig, ExitprobConfig, GammaConfig, LadderMc, PersistenceConfig, RunConfig, SampleConfig,
    SampleMethod, SmalldevConfig, SolveConfig, VerifyConfig,
};
use crate::output;
use crate::CliError;

pub struct Outputs<'a> {
    pub json: Option<&'a Path>,
    pub ladder_csv: Option<&'a Path>,
}

impl Outputs<'_> {
    fn finish<T: Serialize>(
        &self,
        cfg: &RunConfig,
        result: &T,
        scale_name: &str,
        ladder: &[LadderPoint],
        summary: &str,
    ) -> Result<(), CliError> {
        if let Some(path) = self.ladder_csv {
            output::write_csv(path, cfg, |w, comments| write_ladder_csv(w, scale_name, ladder, comments))?;
        }
        output::write_report(self.json, cfg, result)?;
        if self.json.is_some() {
            println!("{summary}");
        }
        Ok(())
    }
}

fn mc_settings(mc: &LadderMc, workers: Workers) -> McSettings {
    McSettings::new(mc.paths, SeedSpec::new(mc.seed, 0)).with_workers(workers)
}

enum Sampler {
    Cholesky(CholeskySampler),
    Circulant(CirculantSampler),
    RiemannLiouville(RiemannLiouvilleSampler),
}

impl Sampler {
    fn path(&self, seed: SeedSpec) -> SampledPath {
        match self {
            Sampler::Cholesky(s) => s.sample(seed),
            Sampler::Circulant(s) => s.sample(seed),
            Sampler::RiemannLiouville(s) => s.sample(seed),
        }
    }
}

/// `paths.csv`, 3 → `paths_0003.csv`
fn indexed(path: &Path, j: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{j:04}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{j:04}"),
    };
    path.with_file_name(name)
}

pub fn sample(
    cfg: &RunConfig,
    c: &SampleConfig,
    workers: Workers,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> Result<(), CliError> {
    if out.is_none() && csv.is_none() {
        return Err(CliError::Usage("nothing to write: pass --out and/or --csv".into()));
    }
    if c.dim == 0 || c.paths == 0 {
        return Err(CliError::Usage("dim and paths must be at least 1".into()));
    }
    let h = HurstParam::new(c.hurst)?;
    let grid = TimeGrid::new(c.horizon, c.steps)?;
    let sampler = match c.method {
        SampleMethod::Cholesky => Sampler::Cholesky(CholeskySampler::new(h, grid)?),
        SampleMethod::Circulant => Sampler::Circulant(CirculantSampler::new(h, grid)?),
        SampleMethod::RiemannLiouville => Sampler::RiemannLiouville(RiemannLiouvilleSampler::new(h, grid)),
    };
    // path j, coordinate i reads stream j·d + i
    let stride = c.dim as u64;
    let chunks = map_chunks(c.paths, 16, workers, |range| {
        range
            .map(|j| {
                let base = SeedSpec::new(c.seed, j as u64 * stride);
                MultiPath::new((0..c.dim).map(|i| sampler.path(base.offset(i as u64))).collect())
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut paths = Vec::with_capacity(c.paths);
    for chunk in chunks {
        paths.extend(chunk?);
    }

    if let Some(path) = out {
        let mut w = output::create(path)?;
        for mp in &paths {
            io::write_binary(&mut w, h, mp).map_err(|e| CliError::Compute(format!("writing {}: {e}", path.display())))?;
        }
        w.flush().map_err(|e| CliError::Compute(format!("writing {}: {e}", path.display())))?;
        output::write_config(&config::sidecar_path(path), cfg)?;
        println!("wrote {} paths to {}", paths.len(), path.display());
    }
    if let Some(path) = csv {
        for (j, mp) in paths.iter().enumerate() {
            let target = if paths.len() == 1 { path.to_path_buf() } else { indexed(path, j) };
            output::write_csv(&target, cfg, |w, comments| io::write_csv(w, mp, comments))?;
        }
        println!("wrote {} CSV file(s) next to {}", paths.len(), path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ExitprobReport {
    regime: Regime,
    exponents: DerivedExponents,
    ladder: Vec<LadderPoint>,
}

pub fn exitprob(cfg: &RunConfig, c: &ExitprobConfig, workers: Workers, out: &Outputs) -> Result<(), CliError> {
    let params = c.domain.params()?;
    let ladder = survival_ladder(&params, &c.mc.horizons, c.mc.steps_per_unit, &mc_settings(&c.mc, workers))?;
    let last = ladder.last().map(|p| (p.scale, p.estimate.prob_hat));
    let report = ExitprobReport {
        regime: params.regime(),
        exponents: params.exponents(),
        ladder,
    };
    let summary = match last {
        Some((t, p)) => format!("P(τ > {t}) ≈ {p:.6e}"),
        None => "empty ladder".into(),
    };
    out.finish(cfg, &report, "T", &report.ladder, &summary)
}

pub fn beta(cfg: &RunConfig, c: &BetaConfig, workers: Workers, out: &Outputs) -> Result<(), CliError> {
    let params = c.domain.params()?;
    let est = estimate_beta(&params, &c.mc.horizons, c.mc.steps_per_unit, &mc_settings(&c.mc, workers))?;
    let summary = format!(
        "β̂ = {:.4} ± {:.4} (theory {:.4})",
        est.fit.exponent_hat, est.fit.stderr, est.beta_theory
    );
    out.finish(cfg, &est, "T", &est.ladder, &summary)
}

#[derive(Debug, Clone, Serialize)]
struct Reference {
    value: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct GammaReport {
    regime: Regime,
    gamma_hat: f64,
    stderr: f64,
    reference: Option<Reference>,
    #[serde(flatten)]
    fit: LadderFit,
}

/// Known decay exponent, when there is one.
fn gamma_reference(params: &ProblemParams) -> Option<Reference> {
    let (h, ht) = (params.hurst.value(), params.hurst_tilde.value());
    if params.p == 1.0 && params.d == 1 && h == 0.5 && ht == 0.5 {
        return Some(Reference {
            value: std::f64::consts::PI / (4.0 * params.k.atan()),
            source: "planar Brownian wedge: π / (4 arctan K)",
        });
    }
    (params.regime() == Regime::Polynomial).then(|| Reference {
        value: 1.0 - ht,
        source: "pH < H̃: 1 − H̃",
    })
}

pub fn gamma(cfg: &RunConfig, c: &GammaConfig, workers: Workers, out: &Outputs) -> Result<(), CliError> {
    let params = c.domain.params()?;
    let fit = estimate_polynomial_exponent(
        &params,
        &c.mc.horizons,
        c.mc.steps_per_unit,
        &mc_settings(&c.mc, workers),
        c.override_regime,
    )?;
    let report = GammaReport {
        regime: params.regime(),
        gamma_hat: fit.fit.exponent_hat,
        stderr: fit.fit.stderr,
        reference: gamma_reference(&params),
        fit,
    };
    let mut summary = format!("γ̂ = {:.4} ± {:.4}", report.gamma_hat, report.stderr);
    if let Some(r) = &report.reference {
        summary.push_str(&format!(" (reference {:.4})", r.value));
    }
    out.finish(cfg, &report, "T", &report.fit.ladder, &summary)
}

#[derive(Serialize)]
struct PersistenceReport {
    gamma_hat: f64,
    stderr: f64,
    /// `1 − H`.
    gamma_theory: f64,
    #[serde(flatten)]
    fit: LadderFit,
}

pub fn persistence(cfg: &RunConfig, c: &PersistenceConfig, workers: Workers, out: &Outputs) -> Result<(), CliError> {
    let h = HurstParam::new(c.hurst)?;
    let fit = estimate_persistence_exponent(h, c.a, &c.mc.horizons, c.mc.steps_per_unit, &mc_settings(&c.mc, workers))?;
    let report = PersistenceReport {
        gamma_hat: fit.fit.exponent_hat,
        stderr: fit.fit.stderr,
        gamma_theory: 1.0 - h.value(),
        fit,
    };
    let summary = format!(
        "γ̂ = {:.4} ± {:.4} (1 − H = {:.4})",
        report.gamma_hat, report.stderr, report.gamma_theory
    );
    out.finish(cfg, &report, "T", &report.fit.ladder, &summary)
}

#[derive(Serialize)]
struct SmalldevReport {
    /// Closed form for `H = 1/2`, `d ≤ 2`.
    kappa_closed_form: Option<f64>,
    #[serde(flatten)]
    estimate: SmallDevEstimate,
}

pub fn smalldev(
    cfg: &RunConfig,
    c: &SmalldevConfig,
    workers: Workers,
    out: &Outputs,
    constants_out: Option<&Path>,
) -> Result<(), CliError> {
    let h = HurstParam::new(c.hurst)?;
    let mc = McSettings::new(c.paths, SeedSpec::new(c.seed, 0)).with_workers(workers);
    let est = estimate_kappa_hd(h, c.dim, &c.epsilons, c.steps, &mc, c.process)?;
    if let Some(path) = constants_out {
        let mut doc = serde_json::to_value(KappaConstant::from_estimate(&est, &mc))
            .map_err(|e| CliError::Compute(format!("serializing constants: {e}")))?;
        doc["config"] = serde_json::to_value(cfg).map_err(|e| CliError::Compute(e.to_string()))?;
        let mut w = output::create(path)?;
        serde_json::to_writer_pretty(&mut w, &doc)
            .map_err(|e| CliError::Compute(e.to_string()))
            .and_then(|_| {
                w.write_all(b"\n")
                    .and_then(|_| w.flush())
                    .map_err(|e| CliError::Compute(format!("writing {}: {e}", path.display())))
            })?;
    }
    let report = SmalldevReport {
        kappa_closed_form: if h.is_brownian() { brownian_kappa(c.dim) } else { None },
        estimate: est,
    };
    let summary = format!("κ̂ = {:.4} ± {:.4}", report.estimate.kappa_hat, report.estimate.stderr);
    let ladder = report.estimate.ladder();
    out.finish(cfg, &report, "eps", &ladder, &summary)
}

/// `κ_{H,d}` from the flag, the constants file or the Brownian closed form.
fn resolve_kappa_hd(kappa_hd: Option<f64>, constants: Option<&Path>, params: &ProblemParams) -> Result<f64, CliError> {
    if let Some(k) = kappa_hd {
        return Ok(k);
    }
    if let Some(path) = constants {
        let k = KappaConstant::load(path).map_err(|e| CliError::Usage(e.to_string()))?;
        if k.hurst != params.hurst || k.d != params.d {
            return Err(CliError::Usage(format!(
                "{} holds κ for H = {}, d = {}; the problem has H = {}, d = {}",
                path.display(),
                k.hurst.value(),
                k.d,
                params.hurst.value(),
                params.d
            )));
        }
        return Ok(k.kappa_hat);
    }
    if params.hurst.is_brownian() {
        if let Some(k) = brownian_kappa(params.d) {
            return Ok(k);
        }
    }
    Err(CliError::Usage(
        "no small-deviation constant: pass --kappa-hd or --constants (closed forms exist only for H = 0.5, d ≤ 2)"
            .into(),
    ))
}

fn solve_record(params: &ProblemParams, kappa_hd: f64, n: usize, refine: bool) -> Result<SolutionRecord, CliError> {
    let record = if refine {
        let (sol, study) = theorem_constant_refined(params, kappa_hd, n)?;
        SolutionRecord::for_theorem(params, kappa_hd, &sol)?.with_refinement(study)
    } else {
        let sol = theorem_constant(params, kappa_hd, n)?;
        SolutionRecord::for_theorem(params, kappa_hd, &sol)?
    };
    if !record.converged {
        eprintln!(
            "fbmexit: warning: solver stopped after {} iterations with KKT residual {:.3e}",
            record.iterations, record.kkt_residual
        );
    }
    Ok(record)
}

pub fn solve(cfg: &RunConfig, c: &SolveConfig, out: Option<&Path>, h_csv: Option<&Path>) -> Result<(), CliError> {
    let params = c.domain.params()?;
    let kappa_hd = resolve_kappa_hd(c.kappa_hd, c.constants.as_deref(), &params)?;
    let record = solve_record(&params, kappa_hd, c.n, c.refine)?;
    if let Some(path) = h_csv {
        output::write_csv(path, cfg, |w, comments| {
            for line in comments {
                writeln!(w, "# {line}")?;
            }
            writeln!(w, "t,h")?;
            writeln!(w, "0,0")?;
            for (t, h) in record.grid.iter().zip(&record.h_star) {
                writeln!(w, "{t},{h}")?;
            }
            Ok(())
        })?;
    }
    output::write_report(out, cfg, &record)?;
    if out.is_some() {
        println!("κ = {:.6} (discrete {:.6} on n = {})", record.kappa_value, record.kappa_discrete, record.n);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Monotone and ending closer to the solver value than it started.
    Toward,
    /// Monotone but moving away.
    Away,
    NonMonotone,
    /// Fewer than two rungs with survivors.
    Insufficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Warn,
}

#[derive(Serialize)]
struct VerifyReport {
    params: ProblemParams,
    beta_theory: f64,
    beta_hat: f64,
    beta_stderr: f64,
    beta_tol: f64,
    beta_within_tolerance: bool,
    kappa_solver: f64,
    kappa_solver_discrete: f64,
    kappa_trend: Vec<KappaPoint>,
    trend: Trend,
    verdict: Verdict,
    beta_fit: ExponentFit,
}

pub fn kappa_trend(points: &[KappaPoint], target: f64) -> Trend {
    let v: Vec<f64> = points.iter().filter_map(|p| p.kappa_hat).collect();
    if v.len() < 2 {
        return Trend::Insufficient;
    }
    let up = v.windows(2).all(|w| w[1] >= w[0]);
    let down = v.windows(2).all(|w| w[1] <= w[0]);
    if !(up || down) {
        return Trend::NonMonotone;
    }
    if (v[v.len() - 1] - target).abs() < (v[0] - target).abs() {
        Trend::Toward
    } else {
        Trend::Away
    }
}

/// The `result` member of a JSON output written by an earlier `expect` run.
fn read_output(path: &Path, expect: &str) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: malformed JSON: {e}", path.display())))?;
    let command = doc["config"]["command"].as_str().unwrap_or_default();
    if command != expect {
        return Err(CliError::Usage(format!(
            "{} is not the output of `{expect}` (found {command:?})",
            path.display()
        )));
    }
    Ok(doc.as_object_mut().and_then(|o| o.remove("result")).unwrap_or_default())
}

pub fn verify(cfg: &RunConfig, c: &VerifyConfig, workers: Workers, out: Option<&Path>) -> Result<(), CliError> {
    let mut params = c.domain.params()?;
    let est: BetaEstimate = match &c.beta_report {
        Some(path) => {
            let cfg = config::load(path)?;
            let RunConfig::Beta(b) = cfg else {
                return Err(CliError::Usage(format!("{} is not the output of `beta`", path.display())));
            };
            params = b.domain.params()?;
            serde_json::from_value(read_output(path, "beta")?)
                .map_err(|e| CliError::Usage(format!("{}: not a β report: {e}", path.display())))?
        }
        None => estimate_beta(&params, &c.mc.horizons, c.mc.steps_per_unit, &mc_settings(&c.mc, workers))?,
    };
    let record: SolutionRecord = match &c.solution {
        Some(path) => {
            let r: SolutionRecord = serde_json::from_value(read_output(path, "solve")?)
                .map_err(|e| CliError::Usage(format!("{}: not a solution: {e}", path.display())))?;
            if r.params != Some(params) {
                return Err(CliError::Usage(format!(
                    "{} was solved for different domain parameters",
                    path.display()
                )));
            }
            r
        }
        None => {
            let kappa_hd = resolve_kappa_hd(c.kappa_hd, c.constants.as_deref(), &params)?;
            solve_record(&params, kappa_hd, c.n, true)?
        }
    };
    let trend = kappa_trend(&est.kappa_trend, record.kappa_value);
    let within = (est.fit.exponent_hat - est.beta_theory).abs() <= c.beta_tol;
    let report = VerifyReport {
        params,
        beta_theory: est.beta_theory,
        beta_hat: est.fit.exponent_hat,
        beta_stderr: est.fit.stderr,
        beta_tol: c.beta_tol,
        beta_within_tolerance: within,
        kappa_solver: record.kappa_value,
        kappa_solver_discrete: record.kappa_discrete,
        kappa_trend: est.kappa_trend.clone(),
        trend,
        verdict: if within && trend == Trend::Toward { Verdict::Pass } else { Verdict::Warn },
        beta_fit: est.fit,
    };
    let text = render_verify(&report);
    output::write_report(out, cfg, &report)?;
    if out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    Ok(())
}

fn render_verify(r: &VerifyReport) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "β̂ = {:.4} ± {:.4}, theory {:.4}, tolerance {:.2}: {}\n",
        r.beta_hat,
        r.beta_stderr,
        r.beta_theory,
        r.beta_tol,
        if r.beta_within_tolerance { "within" } else { "outside" }
    ));
    s.push_str(&format!("solver κ = {:.5}\n", r.kappa_solver));
    s.push_str("T          κ̂(T) = −ln p̂ / T^β\n");
    for p in &r.kappa_trend {
        match p.kappa_hat {
            Some(k) => s.push_str(&format!("{:<10} {k:.5}\n", p.t)),
            None => s.push_str(&format!("{:<10} (no survivors)\n", p.t)),
        }
    }
    s.push_str(&format!("trend: {:?}\nverdict: {:?}\n", r.trend, r.verdict));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[Option<f64>]) -> Vec<KappaPoint> {
        v.iter()
            .enumerate()
            .map(|(i, &k)| KappaPoint {
                t: i as f64 + 1.0,
                kappa_hat: k,
            })
            .collect()
    }

    #[test]
    fn trend_classification() {
        assert_eq!(kappa_trend(&pts(&[Some(1.0), Some(1.5), Some(1.8)]), 2.0), Trend::Toward);
        assert_eq!(kappa_trend(&pts(&[Some(1.8), Some(1.5)]), 2.0), Trend::Away);
        assert_eq!(kappa_trend(&pts(&[Some(1.0), Some(1.5), Some(1.2)]), 2.0), Trend::NonMonotone);
        assert_eq!(kappa_trend(&pts(&[Some(1.0), None]), 2.0), Trend::Insufficient);
    }

    #[test]
    fn indexed_names() {
        assert_eq!(indexed(Path::new("out/p.csv"), 3), PathBuf::from("out/p_0003.csv"));
        assert_eq!(indexed(Path::new("p"), 12), PathBuf::from("p_0012"));
    }

    #[test]
    fn wedge_reference() {
        let h = HurstParam::new(0.5).unwrap();
        let cone = ProblemParams::isotropic(h, 1, 1.0, 1.0, 1.0).unwrap();
        assert!((gamma_reference(&cone).unwrap().value - 1.0).abs() < 1e-15);
        let sub = ProblemParams::isotropic(h, 1, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(gamma_reference(&sub).unwrap().value, 0.5);
        let stretched = ProblemParams::isotropic(h, 1, 2.0, 1.0, 1.0).unwrap();
        assert!(gamma_reference(&stretched).is_none());
    }
}
