//! Config-driven experiment runner.
//!
//! A config is a flat `key=value` text file (`#` starts a comment). Command
//! line overrides use the same syntax and win over the file. Unknown keys,
//! keys that do not apply to the chosen experiment, and values that
//! contradict the chosen method are errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::similarity_profile;
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::gradcheck::GradCheckSummary;
use crate::optimizer::{Method, PgaConfig, Schedule};
use crate::testbeds::{run_spurious, run_zdt1, SpuriousExperiment};

/// Exit status for a rejected config.
pub const EXIT_CONFIG: i32 = 1;
/// Exit status for a run that aborted after the config was accepted.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Zdt1,
    Spurious,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Zdt1 => "zdt1",
            Experiment::Spurious => "spurious",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zdt1" => Ok(Experiment::Zdt1),
            "spurious" => Ok(Experiment::Spurious),
            other => Err(Error::InvalidConfig(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub experiment: Experiment,
    pub method: Method,
    pub seeds: Vec<u64>,
    /// Already passed through [`Method::configure`].
    pub cfg: PgaConfig,
    /// Only read when `experiment` is `spurious`.
    pub spurious: SpuriousExperiment,
    pub output_dir: PathBuf,
}

const COMMON_KEYS: &[&str] = &[
    "experiment",
    "method",
    "seeds",
    "output_dir",
    "rho_ga",
    "rho_gn",
    "lambda",
    "eta0",
    "total_iters",
    "eps_guard",
    "schedule",
];

const SPURIOUS_KEYS: &[&str] = &[
    "tau",
    "p_src",
    "p_tgt",
    "c",
    "noise_dim",
    "n_samples",
    "batch_size",
    "anchor_warmup",
    "anchor_eta",
    "pseudo_refresh",
];

fn split_pair(entry: &str) -> Option<(&str, &str)> {
    let (k, v) = entry.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty()).then_some((k, v))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items = value
        .split(',')
        .map(|s| parse_num(key, s.trim()))
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(Error::InvalidConfig(format!("{key}: empty list")));
    }
    Ok(items)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Collects `key=value` pairs from the file text then the overrides; a
/// later value for the same key replaces the earlier one.
fn collect_pairs(text: &str, overrides: &[String]) -> Result<Vec<(String, String)>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut set = |k: &str, v: &str| match pairs.iter_mut().find(|(key, _)| key == k) {
        Some(slot) => slot.1 = v.to_string(),
        None => pairs.push((k.to_string(), v.to_string())),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_pair(line).ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: format!("expected key=value, got {line:?}"),
        })?;
        set(k, v);
    }
    for o in overrides {
        let (k, v) = split_pair(o)
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects key=value, got {o:?}")))?;
        set(k, v);
    }
    Ok(pairs)
}

/// Builds a validated [`RunSpec`] from config text plus `key=value`
/// overrides.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunSpec> {
    let pairs = collect_pairs(text, overrides)?;
    let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());

    for (k, _) in &pairs {
        if !COMMON_KEYS.contains(&k.as_str()) && !SPURIOUS_KEYS.contains(&k.as_str()) {
            return Err(Error::InvalidConfig(format!("unknown key {k:?}")));
        }
    }
    let experiment: Experiment = get("experiment")
        .ok_or_else(|| Error::InvalidConfig("missing required key \"experiment\"".into()))?
        .parse()?;
    let method: Method = get("method")
        .ok_or_else(|| Error::InvalidConfig("missing required key \"method\"".into()))?
        .parse()?;
    if experiment == Experiment::Zdt1 {
        if let Some((k, _)) = pairs.iter().find(|(k, _)| SPURIOUS_KEYS.contains(&k.as_str())) {
            return Err(Error::InvalidConfig(format!(
                "key {k:?} only applies to experiment=spurious"
            )));
        }
    }

    let mut cfg = PgaConfig::default();
    let mut exp = SpuriousExperiment::default();
    let mut seeds = vec![0];
    let mut output_dir = PathBuf::from("runs");
    let mut explicit = BTreeSet::new();
    for (k, v) in &pairs {
        let (k, v) = (k.as_str(), v.as_str());
        match k {
            "experiment" | "method" => {}
            "seeds" => seeds = parse_list(k, v)?,
            "output_dir" => output_dir = PathBuf::from(v),
            "rho_ga" => cfg.rho_ga = parse_num(k, v)?,
            "rho_gn" => cfg.rho_gn = parse_num(k, v)?,
            "lambda" => cfg.lambda = parse_num(k, v)?,
            "eta0" => cfg.eta0 = parse_num(k, v)?,
            "total_iters" => cfg.total_iters = parse_num(k, v)?,
            "eps_guard" => cfg.eps_guard = parse_num(k, v)?,
            "schedule" => cfg.schedule = v.parse::<Schedule>()?,
            "tau" => cfg.tau = parse_num(k, v)?,
            "p_src" => exp.p_src = parse_list(k, v)?,
            "p_tgt" => exp.p_tgt = parse_num(k, v)?,
            "c" => exp.c = parse_num(k, v)?,
            "noise_dim" => exp.noise_dim = parse_num(k, v)?,
            "n_samples" => exp.n_samples = parse_num(k, v)?,
            "batch_size" => exp.batch_size = parse_num(k, v)?,
            "anchor_warmup" => exp.anchor_warmup = parse_num(k, v)?,
            "anchor_eta" => exp.anchor_eta = parse_num(k, v)?,
            "pseudo_refresh" => exp.pseudo_refresh = parse_num(k, v)?,
            _ => unreachable!("keys checked above"),
        }
        explicit.insert(k);
    }

    let contradicts = |key: &str, value: f64| explicit.contains(key) && value != 0.0;
    match method {
        Method::Erm if contradicts("rho_ga", cfg.rho_ga) || contradicts("rho_gn", cfg.rho_gn) => {
            return Err(Error::InvalidConfig(
                "method=erm fixes rho_ga=0 and rho_gn=0".into(),
            ));
        }
        Method::AlignOnly if contradicts("rho_gn", cfg.rho_gn) => {
            return Err(Error::InvalidConfig("method=align_only fixes rho_gn=0".into()));
        }
        _ => {}
    }
    cfg.validate()?;
    let cfg = method.configure(&cfg);
    if experiment == Experiment::Spurious {
        exp.validate()?;
    }
    let mut unique = seeds.clone();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() != seeds.len() {
        return Err(Error::InvalidConfig("seeds must be distinct".into()));
    }

    Ok(RunSpec {
        experiment,
        method,
        seeds,
        cfg,
        spurious: exp,
        output_dir,
    })
}

/// Reads `path` and applies `overrides` on top.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, overrides)
}

/// Effective settings as config text that [`parse_config`] accepts.
pub fn render_config(spec: &RunSpec) -> String {
    let c = &spec.cfg;
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
    line("experiment", spec.experiment.name().into());
    line("method", spec.method.name().into());
    line("seeds", join(&spec.seeds));
    line("output_dir", spec.output_dir.display().to_string());
    line("rho_ga", format!("{:?}", c.rho_ga));
    line("rho_gn", format!("{:?}", c.rho_gn));
    line("lambda", format!("{:?}", c.lambda));
    line("eta0", format!("{:?}", c.eta0));
    line("total_iters", c.total_iters.to_string());
    line("eps_guard", format!("{:?}", c.eps_guard));
    line("schedule", c.schedule.to_string());
    if spec.experiment == Experiment::Spurious {
        let e = &spec.spurious;
        line("tau", format!("{:?}", c.tau));
        line("p_src", e.p_src.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(","));
        line("p_tgt", format!("{:?}", e.p_tgt));
        line("c", format!("{:?}", e.c));
        line("noise_dim", e.noise_dim.to_string());
        line("n_samples", e.n_samples.to_string());
        line("batch_size", e.batch_size.to_string());
        line("anchor_warmup", e.anchor_warmup.to_string());
        line("anchor_eta", format!("{:?}", e.anchor_eta));
        line("pseudo_refresh", e.pseudo_refresh.to_string());
    }
    out
}

/// Defaults for both experiments, with `method=pga`.
pub fn dump_config() -> String {
    let mut out = String::from("# experiment=zdt1\n");
    out.push_str(&render_config(&parse_config("experiment=zdt1\nmethod=pga", &[]).unwrap()));
    out.push_str("\n# experiment=spurious\n");
    out.push_str(&render_config(
        &parse_config("experiment=spurious\nmethod=pga", &[]).unwrap(),
    ));
    out
}

/// Per-seed metrics plus their mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub seeds: Vec<u64>,
    /// Metric name and one value per seed, in seed order.
    pub metrics: Vec<(&'static str, Vec<f64>)>,
}

/// Arithmetic mean and standard error of the mean (0 for one value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl Summary {
    pub fn values(&self, metric: &str) -> Option<&[f64]> {
        self.metrics
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|(_, v)| v.as_slice())
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.values(metric).map(|v| mean_stderr(v).0)
    }

    /// `metric,value` rows: `<name>_seed<k>` for each seed, then
    /// `<name>_mean` and `<name>_stderr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "metric,value")?;
        for (name, values) in &self.metrics {
            for (seed, v) in self.seeds.iter().zip(values) {
                writeln!(out, "{name}_seed{seed},{}", fmt_f64(*v))?;
            }
            let (mean, stderr) = mean_stderr(values);
            writeln!(out, "{name}_mean,{}", fmt_f64(mean))?;
            writeln!(out, "{name}_stderr,{}", fmt_f64(stderr))?;
        }
        Ok(())
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Metrics of one seed, in the order they appear in the summary.
fn run_seed(spec: &RunSpec, seed: u64) -> Result<Vec<(&'static str, f64)>> {
    let dir = &spec.output_dir;
    let (params, trace, mut metrics) = match spec.experiment {
        Experiment::Spurious => {
            let out = run_spurious(&spec.spurious, &spec.cfg, spec.method, seed)?;
            let m = vec![
                ("in_dist_acc", out.in_dist_acc),
                ("ood_acc", out.ood_acc),
                ("anchor_target_acc", out.anchor_target_acc),
                ("pseudo_included", out.pseudo_included as f64),
            ];
            (out.params, out.trace, m)
        }
        Experiment::Zdt1 => {
            let out = run_zdt1(&spec.cfg, spec.method, seed)?;
            let m = vec![("f1", out.f1), ("f2", out.f2), ("convergence", out.convergence)];
            (out.x, out.trace, m)
        }
    };
    write_file(&dir.join(format!("trace_seed{seed}.csv")), |w| trace.write_csv(w))?;
    write_file(&dir.join(format!("params_seed{seed}.txt")), |w| params.write_text(w))?;

    metrics.push(("bound_proxy", trace.bound_cumulative()));
    // Too-short runs have no meaningful profile; report them as flat.
    let profile = similarity_profile(&trace).unwrap_or_default();
    metrics.push(("sim_rise", flag(profile.rise)));
    metrics.push(("sim_fall", flag(profile.fall)));
    metrics.push(("sim_peak_iter", profile.peak_iter as f64));
    Ok(metrics)
}

/// Runs every seed (concurrently), writing `trace_seed<k>.csv` and
/// `params_seed<k>.txt` per seed and then `summary.csv` and `config.txt`.
pub fn run(spec: &RunSpec) -> Result<Summary> {
    fs::create_dir_all(&spec.output_dir).map_err(|e| Error::io(&spec.output_dir, e))?;
    let results: Vec<Result<Vec<(&'static str, f64)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = spec
            .seeds
            .iter()
            .map(|&seed| s.spawn(move || run_seed(spec, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });

    let mut metrics: Vec<(&'static str, Vec<f64>)> = Vec::new();
    for result in results {
        for (i, (name, v)) in result?.into_iter().enumerate() {
            match metrics.get_mut(i) {
                Some(slot) => slot.1.push(v),
                None => metrics.push((name, vec![v])),
            }
        }
    }
    let summary = Summary {
        seeds: spec.seeds.clone(),
        metrics,
    };
    let dir = &spec.output_dir;
    write_file(&dir.join("summary.csv"), |w| summary.write_csv(w))?;
    write_file(&dir.join("config.txt"), |w| w.write_all(render_config(spec).as_bytes()))?;
    Ok(summary)
}

/// One line per objective with its worst finite-difference errors.
pub fn render_gradcheck(results: &[GradCheckSummary]) -> String {
    let mut out = String::from("objective,points,passed,worst_abs_error,worst_rel_error\n");
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.name,
            r.points,
            r.passed,
            fmt_f64(r.worst_abs_error),
            fmt_f64(r.worst_rel_error)
        )
        .unwrap();
    }
    out
}

/// Single-line reason printed on failure: `error stage=<stage> kind=<kind> msg=<message>`.
pub fn failure_line(stage: &str, err: &Error) -> String {
    let msg = err.to_string().replace('\n', " ");
    format!("error stage={stage} kind={} msg={msg}", err.kind())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunSpec> {
        parse_config(text, &[])
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let spec = parse("experiment=zdt1\nmethod=pga\n").unwrap();
        assert_eq!(spec.experiment, Experiment::Zdt1);
        assert_eq!(spec.method, Method::Pga);
        assert_eq!(spec.seeds, vec![0]);
        assert_eq!(spec.cfg.rho_ga, 0.5);
        assert_eq!(spec.cfg.rho_gn, 0.01);
        assert_eq!(spec.cfg.lambda, 1.0);
        assert_eq!(spec.cfg.tau, 0.4);
        assert_eq!(spec.cfg.total_iters, 2000);
    }

    #[test]
    fn erm_with_explicit_rho_is_rejected() {
        let err = parse("experiment=zdt1\nmethod=erm\nrho_ga=0.5").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
        assert!(parse("experiment=zdt1\nmethod=align_only\nrho_gn=0.1").is_err());
        // Zero is consistent with the method.
        let spec = parse("experiment=zdt1\nmethod=erm\nrho_ga=0").unwrap();
        assert_eq!((spec.cfg.rho_ga, spec.cfg.rho_gn), (0.0, 0.0));
        let spec = parse("experiment=zdt1\nmethod=align_only\nrho_ga=0.3").unwrap();
        assert_eq!((spec.cfg.rho_ga, spec.cfg.rho_gn), (0.3, 0.0));
    }

    #[test]
    fn out_of_range_and_unknown_keys() {
        assert!(parse("experiment=spurious\nmethod=pga\ntau=1.5").is_err());
        assert!(parse("experiment=zdt1\nmethod=pga\nrho=0.5").is_err());
        assert!(parse("experiment=zdt1\nmethod=pga\np_tgt=0.2").is_err());
        assert!(parse("experiment=zdt1").is_err());
        assert!(parse("experiment=zdt1\nmethod=pga\nseeds=1,1").is_err());
        assert!(matches!(
            parse("experiment=zdt1\nmethod=pga\njunk"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn overrides_win_and_comments_are_ignored() {
        let text = "# demo\nexperiment=spurious # inline\nmethod=pga\nseeds=1,2\n\ntau=0.3\n";
        let spec = parse_config(text, &["tau=0.6".into(), "p_src=0.8,0.95".into()]).unwrap();
        assert_eq!(spec.cfg.tau, 0.6);
        assert_eq!(spec.seeds, vec![1, 2]);
        assert_eq!(spec.spurious.p_src, vec![0.8, 0.95]);
        assert!(parse_config(text, &["tau".into()]).is_err());
    }

    #[test]
    fn rendered_config_round_trips() {
        let spec = parse_config(
            "experiment=spurious\nmethod=align_only\nseeds=3,4\neta0=0.05",
            &[],
        )
        .unwrap();
        assert_eq!(parse(&render_config(&spec)).unwrap(), spec);
        for block in dump_config().split("\n\n") {
            assert!(parse(block).is_ok());
        }
    }

    #[test]
    fn summary_mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[4.0]), (4.0, 0.0));
        let summary = Summary {
            seeds: vec![0, 5],
            metrics: vec![("ood_acc", vec![0.5, 0.75])],
        };
        let mut buf = Vec::new();
        summary.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric,value\nood_acc_seed0,5.0000000000000000e-1\nood_acc_seed5,"));
        assert!(text.contains("ood_acc_mean,6.2500000000000000e-1\n"));
    }

    #[test]
    fn failure_line_is_one_line() {
        let e = Error::InvalidConfig("a\nb".into());
        let line = failure_line("config", &e);
        assert!(!line.contains('\n'));
        assert!(line.starts_with("error stage=config kind=invalid_config msg="));
    }
}
