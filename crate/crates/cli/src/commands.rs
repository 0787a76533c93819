//! Subcommand implementations. Each returns a [`Output`]: the report plus
//! the files to write.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lbaudit::aggregate::{aggregate, aggregate_scores};
use lbaudit::rankstats::{
    aggregator_agreement, audit_grid, render_topk_table, subset_tau_profile, AuditOptions,
    SubsetAuditResult, TauEntry,
};
use lbaudit::reuse::{reuse_bound, simulate_trials, Mechanism, TrialRecord};
use lbaudit::scorebank::{human_normalize, load_matrix, load_metrics, orient, Format};
use lbaudit::significance::{
    holm_correction, per_dataset_tests, prob_a_le_b, wilcoxon_signed_rank, Alternative,
    PairedSamples, PermutationOptions, ReplicateSet,
};
use lbaudit::{fixtures, seed, AggregationSpec, Error, Method, NormalizedMatrix, ScoreMatrix};
use serde_json::{json, Value};

use crate::cli::{
    AggregateArgs, AggregationArgs, AuditArgs, CompareArgs, CorrArgs, Fixture, GlobalArgs,
    MechanismChoice, ReuseArgs,
};
use crate::config::{AuditConfig, AuditParams};
use crate::report::{InputHash, Provenance, Report, Section};

pub struct Output {
    pub report: Report,
    /// Primary CSV, also used for `--format csv`.
    pub csv: String,
    /// (file name, contents) written under the output directory.
    pub files: Vec<(String, String)>,
}

impl Output {
    fn new(name: &str, report: Report, csv: String) -> Self {
        let files = vec![
            (format!("{name}.json"), report.to_json()),
            (format!("{name}.csv"), csv.clone()),
            ("summary.txt".to_owned(), report.to_text()),
        ];
        Self { report, csv, files }
    }
}

/// Everything a command needs besides its own arguments.
pub struct RunContext {
    pub config: AuditConfig,
    pub provenance: Provenance,
    pub seed: u64,
    global: GlobalArgs,
}

impl RunContext {
    pub fn new(global: &GlobalArgs) -> Result<Self> {
        let (config, config_hash) = match &global.config {
            Some(p) => {
                let (cfg, bytes) = AuditConfig::load(p)?;
                (cfg, Some(InputHash::of_path("config", p, &bytes)))
            }
            None => (AuditConfig::default(), None),
        };
        config.validate()?;
        let seed = global.seed.or(config.seed).unwrap_or(0);
        let mut provenance = Provenance::new(seed);
        provenance.inputs.extend(config_hash);
        if global.timestamp {
            provenance.generated_unix = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs());
        }
        Ok(Self {
            config,
            provenance,
            seed,
            global: global.clone(),
        })
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.global.out.as_deref().or(self.config.output_dir.as_deref())
    }

    fn read(&mut self, role: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path)
            .map_err(Error::from)
            .with_context(|| format!("reading {role} {}", path.display()))?;
        self.provenance.inputs.push(InputHash::of_path(role, path, &bytes));
        Ok(bytes)
    }

    fn load_matrix(&mut self) -> Result<ScoreMatrix> {
        if let Some(Fixture::Lra) = self.global.fixture {
            self.provenance
                .inputs
                .push(InputHash::of_bytes("matrix", "fixture:lra", fixtures::LRA_CSV.as_bytes()));
            self.provenance
                .inputs
                .push(InputHash::of_bytes("metrics", "fixture:lra", fixtures::LRA_METRICS_JSON.as_bytes()));
            return Ok(fixtures::lra()?);
        }
        let path = self
            .global
            .matrix
            .clone()
            .or_else(|| self.config.matrix_path.clone())
            .ok_or_else(|| Error::Config("no score matrix: pass --matrix, --fixture or a config matrix_path".into()))?;
        let bytes = self.read("matrix", &path)?;
        let format = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Format::Json
        } else {
            Format::Csv
        };
        let mut m = load_matrix(bytes.as_slice(), format).with_context(|| format!("loading {}", path.display()))?;
        if let Some(mp) = self.global.metrics.clone().or_else(|| self.config.metrics_path.clone()) {
            let bytes = self.read("metrics", &mp)?;
            let metrics = load_metrics(bytes.as_slice()).with_context(|| format!("loading {}", mp.display()))?;
            m = m.with_metrics(metrics).with_context(|| format!("applying {}", mp.display()))?;
        }
        Ok(m)
    }

    /// Loads, orients (optionally human-normalizes) and resolves audit
    /// parameters, with command-line aggregation flags applied last.
    fn prepare(&mut self, agg: &AggregationArgs) -> Result<(NormalizedMatrix, AuditParams)> {
        let raw = self.load_matrix()?;
        let m = if agg.human_normalize {
            human_normalize(&raw)?
        } else {
            orient(&raw)
        };
        let mut params = AuditParams::resolve(&self.config, m.n_tasks(), m.n_models())?;
        if let Some(method) = agg.method {
            params.spec.method = method;
        }
        if let Some(w) = agg.bin_width {
            params.spec.bin_width = w;
        }
        params.spec.validate()?;
        Ok((m, params))
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

/// Shortest round-trip decimal, always with a fractional part.
fn num(f: f64) -> String {
    format!("{f:?}")
}

fn opt_num(f: Option<f64>) -> String {
    f.map(num).unwrap_or_default()
}

fn aggregation_entries(spec: &AggregationSpec, m: &NormalizedMatrix) -> Vec<(&'static str, Value)> {
    let mut e = vec![
        ("method", json!(spec.method.name())),
        ("models", json!(m.n_models())),
        ("tasks", json!(m.n_tasks())),
        ("human_normalized", json!(m.is_human_normalized())),
    ];
    if spec.method == Method::RobustAverageRank {
        e.push(("bin_width", json!(spec.bin_width)));
    }
    e
}

fn audit_sections(results: &[SubsetAuditResult], table_limit: usize) -> Vec<Section> {
    let rows = results
        .iter()
        .map(|r| {
            vec![
                json!(r.subset_size),
                json!(r.k),
                json!(r.unique_count),
                json!(r.total_combinations),
                json!(r.evaluated),
                json!(r.sampled),
            ]
        })
        .collect();
    let mut sections = vec![Section::table(
        "Unique Top-k counts",
        ["size", "k", "unique", "total", "evaluated", "sampled"],
        rows,
    )];
    for r in results.iter().filter(|r| r.evaluated <= table_limit) {
        sections.push(Section::text(
            &format!("Top-{} by subset (size {})", r.k, r.subset_size),
            render_topk_table(&r.per_subset_topk),
        ));
    }
    sections
}

fn audit_csv(results: &[SubsetAuditResult]) -> Result<String> {
    csv_string(
        &["size", "k", "unique", "total", "evaluated", "sampled"],
        results.iter().map(|r| {
            vec![
                r.subset_size.to_string(),
                r.k.to_string(),
                r.unique_count.to_string(),
                r.total_combinations.to_string(),
                r.evaluated.to_string(),
                r.sampled.to_string(),
            ]
        }),
    )
}

fn run_audit(ctx: &mut RunContext, args: &AuditArgs) -> Result<(NormalizedMatrix, AuditParams, Vec<SubsetAuditResult>)> {
    let (m, mut params) = ctx.prepare(&args.aggregation)?;
    if let Some(s) = &args.sizes {
        params.sizes = s.clone();
    }
    if let Some(k) = &args.ks {
        params.ks = k.clone();
    }
    if let Some(b) = args.budget {
        params.budget = b;
    }
    if let Some(&bad) = params.sizes.iter().find(|&&s| s < 1 || s > m.n_tasks()) {
        return Err(Error::Config(format!("subset size {bad} outside [1, {}]", m.n_tasks())).into());
    }
    if params.ks.is_empty() || params.sizes.is_empty() {
        return Err(Error::Config("need at least one subset size and one k".into()).into());
    }
    let opts = AuditOptions {
        budget: params.budget,
        seed: ctx.seed,
    };
    let results = audit_grid(&m, &params.spec, &params.sizes, &params.ks, &opts)?;
    ctx.provenance.mode = Some(if results.iter().any(|r| r.sampled) { "sampled" } else { "exact" });
    Ok((m, params, results))
}

pub fn audit(mut ctx: RunContext, args: &AuditArgs) -> Result<Output> {
    let (m, params, results) = run_audit(&mut ctx, args)?;
    let mut report = Report::new("audit", ctx.provenance);
    let mut settings = aggregation_entries(&params.spec, &m);
    settings.push(("sampling_budget", json!(params.budget)));
    report.push(Section::key_value("Settings", settings));
    for s in audit_sections(&results, args.table_limit) {
        report.push(s);
    }
    report.data = json!({ "aggregation": params.spec, "results": results });
    let csv = audit_csv(&results)?;
    Ok(Output::new("audit", report, csv))
}

/// Group name → task indices, from the spec's group map or the metrics.
fn task_groups(m: &NormalizedMatrix, spec: &AggregationSpec) -> BTreeMap<String, Vec<usize>> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (t, id) in m.task_ids().iter().enumerate() {
        let g = match &spec.group_map {
            Some(map) => map.get(id).cloned(),
            None => m.metric(t).group.clone(),
        };
        if let Some(g) = g {
            groups.entry(g).or_default().push(t);
        }
    }
    groups
}

struct CorrResult {
    tasks: Vec<TauEntry>,
    groups: Vec<(String, TauEntry)>,
    agreement: lbaudit::rankstats::AgreementMatrix,
}

fn run_corr(m: &NormalizedMatrix, spec: &AggregationSpec, methods: &[Method]) -> Result<CorrResult> {
    let singles: Vec<Vec<usize>> = (0..m.n_tasks()).map(|t| vec![t]).collect();
    let tasks = subset_tau_profile(m, spec, &singles)?;
    let grouped = task_groups(m, spec);
    let subsets: Vec<Vec<usize>> = grouped.values().cloned().collect();
    let groups = grouped
        .keys()
        .cloned()
        .zip(subset_tau_profile(m, spec, &subsets)?)
        .collect();
    let specs: Vec<AggregationSpec> = methods
        .iter()
        .map(|&method| AggregationSpec { method, ..spec.clone() })
        .collect();
    let all: Vec<usize> = (0..m.n_tasks()).collect();
    let agreement = aggregator_agreement(m, &specs, &all)?;
    Ok(CorrResult { tasks, groups, agreement })
}

fn tau_value(e: &TauEntry) -> Value {
    e.tau.map(Value::from).unwrap_or(Value::Null)
}

fn corr_sections(r: &CorrResult) -> Vec<Section> {
    let mut out = vec![Section::table(
        "Per-task tau-b against the full ranking",
        ["task", "tau"],
        r.tasks.iter().map(|e| vec![json!(e.subset.join(" + ")), tau_value(e)]).collect(),
    )];
    if !r.groups.is_empty() {
        out.push(Section::table(
            "Per-group tau-b against the full ranking",
            ["group", "tasks", "tau"],
            r.groups
                .iter()
                .map(|(g, e)| vec![json!(g), json!(e.subset.join(" + ")), tau_value(e)])
                .collect(),
        ));
    }
    let labels = &r.agreement.labels;
    let rows = labels
        .iter()
        .zip(&r.agreement.tau)
        .map(|(l, row)| {
            std::iter::once(json!(l))
                .chain(row.iter().map(|t| t.map(Value::from).unwrap_or(Value::Null)))
                .collect()
        })
        .collect();
    out.push(Section::table(
        "Aggregator agreement (tau-b, all tasks)",
        std::iter::once("method".to_owned()).chain(labels.iter().cloned()),
        rows,
    ));
    out
}

fn corr_csv(r: &CorrResult) -> Result<String> {
    let rows = r
        .tasks
        .iter()
        .map(|e| vec!["task".into(), e.subset.join(" + "), opt_num(e.tau)])
        .chain(
            r.groups
                .iter()
                .map(|(g, e)| vec![format!("group:{g}"), e.subset.join(" + "), opt_num(e.tau)]),
        );
    csv_string(&["kind", "subset", "tau"], rows)
}

fn corr_data(r: &CorrResult) -> Value {
    let groups: Vec<Value> = r
        .groups
        .iter()
        .map(|(g, e)| json!({ "group": g, "subset": e.subset, "tau": e.tau, "undefined": e.undefined }))
        .collect();
    json!({ "tasks": r.tasks, "groups": groups, "agreement": r.agreement })
}

pub fn corr(mut ctx: RunContext, args: &CorrArgs) -> Result<Output> {
    let (m, params) = ctx.prepare(&args.aggregation)?;
    let result = run_corr(&m, &params.spec, &args.agreement)?;
    let mut report = Report::new("corr", ctx.provenance);
    report.push(Section::key_value("Settings", aggregation_entries(&params.spec, &m)));
    for s in corr_sections(&result) {
        report.push(s);
    }
    report.data = corr_data(&result);
    let csv = corr_csv(&result)?;
    Ok(Output::new("corr", report, csv))
}

struct AggregateRows {
    higher_is_better: Option<bool>,
    rows: Vec<(String, Option<f64>, f64)>,
}

fn run_aggregate(m: &NormalizedMatrix, spec: &AggregationSpec, subset: &[usize]) -> Result<AggregateRows> {
    let ranking = aggregate(m, subset, spec)?;
    let scores = match spec.method {
        Method::EliminationRanking => None,
        _ => Some(aggregate_scores(m, subset, spec)?),
    };
    let mut rows: Vec<(String, Option<f64>, f64)> = ranking
        .entries()
        .iter()
        .map(|(model, rank)| (model.clone(), scores.as_ref().and_then(|s| s.value(model)), *rank))
        .collect();
    rows.sort_by(|a, b| a.2.total_cmp(&b.2).then_with(|| a.0.cmp(&b.0)));
    Ok(AggregateRows {
        higher_is_better: scores.map(|s| s.higher_is_better),
        rows,
    })
}

fn aggregate_section(r: &AggregateRows) -> Section {
    Section::table(
        "Aggregate ranking",
        ["rank", "model", "score"],
        r.rows
            .iter()
            .map(|(m, s, rank)| vec![json!(rank), json!(m), s.map(Value::from).unwrap_or(Value::Null)])
            .collect(),
    )
}

fn aggregate_csv(r: &AggregateRows) -> Result<String> {
    csv_string(
        &["model", "score", "rank"],
        r.rows.iter().map(|(m, s, rank)| vec![m.clone(), opt_num(*s), num(*rank)]),
    )
}

fn aggregate_data(r: &AggregateRows, spec: &AggregationSpec, tasks: &[String]) -> Value {
    let rows: Vec<Value> = r
        .rows
        .iter()
        .map(|(m, s, rank)| json!({ "model": m, "score": s, "rank": rank }))
        .collect();
    json!({
        "aggregation": spec,
        "tasks": tasks,
        "higher_is_better": r.higher_is_better,
        "ranking": rows,
    })
}

pub fn aggregate_cmd(mut ctx: RunContext, args: &AggregateArgs) -> Result<Output> {
    let (m, params) = ctx.prepare(&args.aggregation)?;
    let subset = match &args.tasks {
        Some(names) => m.task_indices(names)?,
        None => (0..m.n_tasks()).collect(),
    };
    let names: Vec<String> = subset.iter().map(|&t| m.task_ids()[t].clone()).collect();
    let result = run_aggregate(&m, &params.spec, &subset)?;
    let mut report = Report::new("aggregate", ctx.provenance);
    let mut settings = aggregation_entries(&params.spec, &m);
    settings.push(("subset", json!(names.join(" + "))));
    report.push(Section::key_value("Settings", settings));
    report.push(aggregate_section(&result));
    report.data = aggregate_data(&result, &params.spec, &names);
    let csv = aggregate_csv(&result)?;
    Ok(Output::new("aggregate", report, csv))
}

pub fn report(mut ctx: RunContext, args: &AuditArgs) -> Result<Output> {
    let (m, params, results) = run_audit(&mut ctx, args)?;
    let corr = run_corr(&m, &params.spec, &[Method::ArithmeticMean, Method::Median])?;
    let all: Vec<usize> = (0..m.n_tasks()).collect();
    let agg = run_aggregate(&m, &params.spec, &all)?;

    let mut report = Report::new("report", ctx.provenance);
    let mut settings = aggregation_entries(&params.spec, &m);
    settings.push(("sampling_budget", json!(params.budget)));
    report.push(Section::key_value("Settings", settings));
    report.push(aggregate_section(&agg));
    for s in audit_sections(&results, args.table_limit) {
        report.push(s);
    }
    for s in corr_sections(&corr) {
        report.push(s);
    }
    report.data = json!({
        "aggregate": aggregate_data(&agg, &params.spec, m.task_ids()),
        "audit": results,
        "corr": corr_data(&corr),
    });
    let audit = audit_csv(&results)?;
    let mut out = Output::new("report", report, audit.clone());
    out.files.retain(|(name, _)| name != "report.csv");
    out.files.push(("audit.csv".into(), audit));
    out.files.push(("corr.csv".into(), corr_csv(&corr)?));
    out.files.push(("aggregate.csv".into(), aggregate_csv(&agg)?));
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn compare(mut ctx: RunContext, args: &CompareArgs) -> Result<Output> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0, 1), got {}", args.alpha)).into());
    }
    let bytes = ctx.read("replicates", &args.replicates)?;
    let set: ReplicateSet = serde_json::from_slice(&bytes)
        .map_err(Error::from)
        .with_context(|| format!("parsing {}", args.replicates.display()))?;
    if set.datasets.is_empty() {
        return Err(Error::Config("replicate file lists no datasets".into()).into());
    }
    for (id, r) in &set.datasets {
        if r.a.iter().chain(&r.b).any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("dataset {id:?} has a non-finite replicate")).into());
        }
    }
    let seed_root = ctx.seed;
    let ids: Vec<String> = set.datasets.keys().cloned().collect();
    let per = per_dataset_tests(
        &set.datasets,
        args.alternative,
        &PermutationOptions {
            exact_limit: args.exact_limit,
            resamples: args.resamples,
            seed: seed::derive(seed_root, "compare/permutation"),
        },
    )?;
    let means_a: Vec<f64> = set.datasets.values().map(|r| mean(&r.a)).collect();
    let means_b: Vec<f64> = set.datasets.values().map(|r| mean(&r.b)).collect();
    let paired = PairedSamples::new(ids.clone(), means_a.clone(), means_b.clone())?;
    let wilcoxon = match wilcoxon_signed_rank(&paired, args.alternative) {
        Ok(r) => Some(r),
        Err(Error::DegenerateInput(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let p_values: Vec<f64> = per.iter().map(|(_, t)| t.p_value).collect();
    let corrected = holm_correction(&p_values, args.alpha, args.correction)?;
    let uncorrected: Vec<bool> = p_values.iter().map(|&p| p <= args.alpha).collect();
    let p_le: Vec<f64> = set
        .datasets
        .iter()
        .map(|(id, r)| prob_a_le_b(&r.a, &r.b, args.bootstrap_n, seed::derive(seed_root, &format!("compare/bootstrap/{id}"))))
        .collect::<lbaudit::Result<_>>()?;

    let on_average = wilcoxon.as_ref().is_some_and(|w| w.p_value <= args.alpha);
    let all_rejected = corrected.iter().all(|&r| r);
    let n_rejected = corrected.iter().filter(|&&r| r).count();
    let claim = match args.alternative {
        Alternative::BGreater => "B better than A",
        Alternative::TwoSided => "A and B differ",
    };

    let mut report = Report::new("compare", ctx.provenance);
    report.push(Section::key_value(
        "Settings",
        vec![
            ("alpha", json!(args.alpha)),
            ("alternative", json!(args.alternative)),
            ("correction", json!(args.correction)),
            ("datasets", json!(ids.len())),
            ("bootstrap_n", json!(args.bootstrap_n)),
        ],
    ));
    let w_entries = match &wilcoxon {
        Some(w) => vec![
            ("statistic (W+)", json!(w.statistic)),
            ("p", json!(w.p_value)),
            ("exact", json!(w.exact)),
            ("n", json!(w.n)),
            ("zero differences dropped", json!(w.zero_dropped)),
            ("rejected", json!(on_average)),
        ],
        None => vec![
            ("note", json!("every per-dataset mean difference is zero")),
            ("rejected", json!(false)),
        ],
    };
    report.push(Section::key_value("Wilcoxon signed-rank on per-dataset means", w_entries));
    let rows = per
        .iter()
        .enumerate()
        .map(|(i, (id, t))| {
            vec![
                json!(id),
                json!(means_a[i]),
                json!(means_b[i]),
                json!(t.p_value),
                json!(t.exact),
                json!(uncorrected[i]),
                json!(corrected[i]),
                json!(p_le[i]),
            ]
        })
        .collect();
    report.push(Section::table(
        "Per-dataset permutation tests",
        ["dataset", "mean A", "mean B", "p", "exact", "rejected (uncorrected)", "rejected (corrected)", "p(A<=B)"],
        rows,
    ));
    report.push(Section::key_value(
        "Conclusions",
        vec![
            (
                &*format!("{claim} on average"),
                json!(if on_average { "yes" } else { "no" }),
            ),
            (
                &*format!("{claim} on all datasets"),
                json!(if all_rejected { "yes".to_owned() } else { format!("no ({n_rejected} of {} datasets)", ids.len()) }),
            ),
        ],
    ));
    let per_json: Vec<Value> = per
        .iter()
        .enumerate()
        .map(|(i, (id, t))| {
            json!({
                "dataset": id,
                "mean_a": means_a[i],
                "mean_b": means_b[i],
                "test": t,
                "rejected_uncorrected": uncorrected[i],
                "rejected_corrected": corrected[i],
                "p_a_le_b": p_le[i],
            })
        })
        .collect();
    report.data = json!({
        "alpha": args.alpha,
        "wilcoxon": wilcoxon,
        "per_dataset": per_json,
        "better_on_average": on_average,
        "better_on_all_datasets": all_rejected,
    });
    let csv = csv_string(
        &["dataset", "mean_a", "mean_b", "p", "exact", "rejected_uncorrected", "rejected_corrected", "p_a_le_b"],
        per.iter().enumerate().map(|(i, (id, t))| {
            vec![
                id.clone(),
                num(means_a[i]),
                num(means_b[i]),
                num(t.p_value),
                t.exact.to_string(),
                uncorrected[i].to_string(),
                corrected[i].to_string(),
                num(p_le[i]),
            ]
        }),
    )?;
    Ok(Output::new("compare", report, csv))
}

pub fn simulate_reuse(ctx: RunContext, args: &ReuseArgs) -> Result<Output> {
    if args.n == 0 || args.trials == 0 || args.i_schedule.is_empty() || args.i_schedule.contains(&0) {
        return Err(Error::Config("n, trials and every i must be positive".into()).into());
    }
    let ladder = match args.step {
        Some(step) => Mechanism::Ladder { step },
        None => Mechanism::default_ladder(args.n),
    };
    let mechanisms = match args.mechanism {
        MechanismChoice::Naive => vec![Mechanism::Naive],
        MechanismChoice::Ladder => vec![ladder],
        MechanismChoice::Both => vec![Mechanism::Naive, ladder],
    };
    let mut records: Vec<TrialRecord> = Vec::new();
    let mut summary = Vec::new();
    for &mech in &mechanisms {
        for &i in &args.i_schedule {
            // same seed across mechanisms: naive and ladder runs are paired
            let r = simulate_trials(args.n, i, mech, args.trials, seed::derive(ctx.seed, &format!("reuse/i={i}")))?;
            let k = r.len() as f64;
            let reported = r.iter().map(|t| t.report.reported_accuracy).sum::<f64>() / k;
            let fresh = r.iter().map(|t| t.report.true_accuracy).sum::<f64>() / k;
            summary.push(vec![
                json!(mech.name()),
                json!(i),
                json!(reported),
                json!(fresh),
                json!(reported - fresh),
                json!(reuse_bound(args.n as u64, i)?),
            ]);
            records.extend(r);
        }
    }
    let mut settings = vec![
        ("n", json!(args.n)),
        ("trials", json!(args.trials)),
        ("mechanisms", json!(mechanisms.iter().map(|m| m.name()).collect::<Vec<_>>())),
    ];
    if let Mechanism::Ladder { step } = ladder {
        if args.mechanism != MechanismChoice::Naive {
            settings.push(("ladder step", json!(step)));
        }
    }
    let mut report = Report::new("simulate-reuse", ctx.provenance);
    report.push(Section::key_value("Settings", settings));
    report.push(Section::table(
        "Mean accuracy of the boosted predictor",
        ["mechanism", "i", "reported", "fresh", "gap", "sqrt(i/n)"],
        summary,
    ));
    report.data = json!({ "mechanisms": mechanisms, "trials": records });
    let csv = csv_string(
        &["trial", "i", "mechanism", "reported", "true", "bound"],
        records.iter().map(|r| {
            vec![
                r.trial.to_string(),
                r.report.i.to_string(),
                r.mechanism.to_owned(),
                num(r.report.reported_accuracy),
                num(r.report.true_accuracy),
                num(r.report.bound_value),
            ]
        }),
    )?;
    Ok(Output::new("reuse", report, csv))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        bail!(Error::Config(format!("output path {} is not a directory", dir.display())));
    }
    std::fs::create_dir_all(dir)
        .map_err(Error::from)
        .with_context(|| format!("creating {}", dir.display()))
}
