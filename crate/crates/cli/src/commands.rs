use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use chrono::Utc;
use log::{info, warn};

use hawkdove::config::{BackendKind, Config};
use hawkdove::corpus::load_corpus;
use hawkdove::diff::{partition_points, summarize_points};
use hawkdove::grammar::compile_tree;
use hawkdove::llm::{Backend, HttpBackend, HttpConfig, LlmClient, MockBackend, MockScript, ENV_URL};
use hawkdove::reasoner::{DocumentResult, Reasoner};
use hawkdove::report::{file_stem, load_result_json, render_document_report_with, write_report, write_result};
use hawkdove::retrieval::{HybridRetriever, TopicRanking};
use hawkdove::scoring::{document_score, moving_average, normalize_series, ScorePoint, ScoreScheme, ScoreSeries};
use hawkdove::stance::StanceClass;
use hawkdove::taxonomy::{load_taxonomy, validate_taxonomy, Taxonomy};

use crate::manifest::{sha256_hex, timestamp, DocEntry, DocStatus, RunManifest, MANIFEST_FILE};
use crate::{BackendArg, Cli, Command, GlobalArgs};

/// Exit status when at least one document failed outright.
const EXIT_DOCUMENT_FAILURE: u8 = 2;

pub fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Classify { corpus, out, jobs } => classify(g, &corpus, &out, jobs),
        Command::Report { results, out, script } => report(g, &results, &out, script.as_deref()),
        Command::Diff { new, old, tau, stance, summarize, out } => {
            diff(g, &new, &old, tau, &stance, summarize, out.as_deref())
        }
        Command::Series { inputs, scheme, window, normalize, doc_type, out } => {
            series(&inputs, scheme.into(), window, normalize, doc_type.as_deref(), out.as_deref())
        }
        Command::Retrieve { paragraph, json } => retrieve(g, &paragraph, json),
        Command::CompileGrammar { mnemonic, node_map } => compile_grammar(g, &mnemonic, node_map),
        Command::Econ { model } => crate::econ::run(model),
        Command::Validate => validate(g),
        Command::Config => {
            out!("{}", toml::to_string_pretty(&load_config(g)?)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// The configuration file (or defaults) with command-line overrides applied.
fn load_config(g: &GlobalArgs) -> Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        cfg.decoding.seed = seed;
    }
    if let Some(b) = g.backend {
        cfg.backend.kind = match b {
            BackendArg::Http => BackendKind::Http,
            BackendArg::Mock => BackendKind::Mock,
        };
    }
    if let Some(s) = &g.mock_script {
        cfg.backend.mock_script = Some(s.clone());
    }
    Ok(cfg)
}

fn load_taxonomy_arg(g: &GlobalArgs) -> Result<Taxonomy> {
    match &g.taxonomy {
        None => Ok(Taxonomy::reference()),
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot open taxonomy {}", p.display()))?;
            load_taxonomy(BufReader::new(f)).with_context(|| format!("taxonomy {}", p.display()))
        }
    }
}

fn build_client(cfg: &Config) -> Result<LlmClient> {
    let backend: Arc<dyn Backend> = match cfg.backend.kind {
        BackendKind::Mock => {
            let script = match &cfg.backend.mock_script {
                Some(p) => {
                    let text =
                        fs::read_to_string(p).with_context(|| format!("cannot read mock script {}", p.display()))?;
                    MockScript::from_json(&text).with_context(|| format!("mock script {}", p.display()))?
                }
                None => MockScript::default(),
            };
            Arc::new(MockBackend::new(script))
        }
        BackendKind::Http => {
            let http = cfg.backend.http.clone().or_else(HttpConfig::from_env).ok_or_else(|| {
                anyhow!("the http backend needs [backend.http] in the config or the {ENV_URL} environment variable")
            })?;
            Arc::new(HttpBackend::new(http)?)
        }
    };
    Ok(LlmClient::new(backend, cfg.retry))
}

fn classify(g: &GlobalArgs, corpus: &Path, out: &Path, jobs: u16) -> Result<ExitCode> {
    let started = Utc::now();
    let cfg = load_config(g)?;
    let taxonomy = load_taxonomy_arg(g)?;
    let f = File::open(corpus).with_context(|| format!("cannot open corpus {}", corpus.display()))?;
    let docs = load_corpus(BufReader::new(f)).with_context(|| format!("corpus {}", corpus.display()))?;
    let client = build_client(&cfg)?;
    let reasoner = Reasoner::new(&taxonomy, &cfg, client)?;
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;

    let mut stems = HashSet::new();
    let mut entries = Vec::with_capacity(docs.len());
    for doc in &docs {
        info!("classifying {}", doc.doc_id);
        let mut entry = DocEntry {
            doc_id: doc.doc_id.clone(),
            status: DocStatus::Failed,
            result_file: None,
            paragraphs: 0,
            degraded_paragraphs: 0,
            error: None,
        };
        let stem = file_stem(&doc.doc_id);
        if !stems.insert(stem.clone()) {
            entry.error = Some(format!("file name {stem:?} already used by another document"));
        } else {
            match reasoner.classify_document(doc, usize::from(jobs)) {
                Ok(r) => {
                    entry.paragraphs = r.paragraphs.len();
                    entry.degraded_paragraphs = r.degraded_paragraphs();
                    for w in &r.warnings {
                        warn!("{}: {w}", doc.doc_id);
                    }
                    match write_result(out, &r) {
                        Ok(path) => {
                            entry.result_file = path.file_name().map(|n| n.to_string_lossy().into_owned());
                            entry.status =
                                if entry.degraded_paragraphs > 0 { DocStatus::Degraded } else { DocStatus::Ok };
                        }
                        Err(e) => entry.error = Some(format!("cannot write result: {e}")),
                    }
                }
                Err(e) => entry.error = Some(e.to_string()),
            }
        }
        if let Some(e) = &entry.error {
            warn!("{}: {e}", doc.doc_id);
        }
        entries.push(entry);
    }

    let manifest = RunManifest {
        config_hash: sha256_hex(toml::to_string(&cfg)?.as_bytes()),
        taxonomy_version: taxonomy.version.clone(),
        backend_id: reasoner.backend_id(),
        seed: cfg.decoding.seed,
        jobs,
        started_at: timestamp(started),
        finished_at: timestamp(Utc::now()),
        documents: entries,
    };
    let path = out.join(MANIFEST_FILE);
    let mut body = serde_json::to_vec_pretty(&manifest)?;
    body.push(b'\n');
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    let failed = manifest.hard_failures();
    info!("{} document(s), {failed} failed; manifest {}", manifest.documents.len(), path.display());
    Ok(if failed > 0 { ExitCode::from(EXIT_DOCUMENT_FAILURE) } else { ExitCode::SUCCESS })
}

fn read_result(path: &Path) -> Result<DocumentResult> {
    let bytes = fs::read(path).with_context(|| format!("cannot read result {}", path.display()))?;
    load_result_json(&bytes).with_context(|| format!("result {}", path.display()))
}

fn report(g: &GlobalArgs, results: &[PathBuf], out: &Path, script: Option<&Path>) -> Result<ExitCode> {
    let cfg = load_config(g)?;
    let asset = match script {
        Some(p) => fs::read_to_string(p).with_context(|| format!("cannot read script {}", p.display()))?,
        None => String::new(),
    };
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    for p in results {
        let bundle = render_document_report_with(&read_result(p)?, &asset, &cfg.report);
        for w in &bundle.warnings {
            warn!("{}: {w}", p.display());
        }
        let written =
            write_report(out, &bundle).with_context(|| format!("cannot write report into {}", out.display()))?;
        outln!("{}", written.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_stances(items: &[String]) -> Result<BTreeSet<StanceClass>> {
    items.iter().map(|s| s.trim().parse::<StanceClass>().map_err(|e| anyhow!("--stance: {e}"))).collect()
}

fn diff(
    g: &GlobalArgs,
    new: &Path,
    old: &Path,
    tau: Option<f64>,
    stance: &[String],
    summarize: bool,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = load_config(g)?;
    let stance = parse_stances(stance)?;
    let tau = tau.unwrap_or(cfg.diff.tau);
    let result = partition_points(&read_result(new)?, &read_result(old)?, &stance, tau)?;
    let mut value = serde_json::to_value(&result)?;
    if summarize {
        let client = build_client(&cfg)?;
        let summary = summarize_points(&client, &cfg.prompts.summary, &result.new_points, cfg.decoding.seed)?;
        value["summary"] = summary.into();
    }
    let mut body = serde_json::to_vec_pretty(&value)?;
    body.push(b'\n');
    emit(out, &body)
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<ExitCode> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("cannot write {}", p.display()))?,
        None => io::stdout().write_all(body)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn collect_points(input: &Path, scheme: ScoreScheme, points: &mut Vec<ScorePoint>) -> Result<()> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)
            .with_context(|| format!("cannot list {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".result.json"))
            .collect();
        files.sort();
        for f in files {
            collect_points(&f, scheme, points)?;
        }
    } else if input.extension().is_some_and(|e| e == "csv") {
        let f = File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
        let s = ScoreSeries::read_csv(f).with_context(|| format!("series {}", input.display()))?;
        points.extend_from_slice(s.points());
    } else {
        let r = read_result(input)?;
        let score = document_score(&r, scheme).with_context(|| format!("result {}", input.display()))?;
        points.push(ScorePoint { date: r.date, doc_id: r.doc_id, doc_type: r.doc_type, score });
    }
    Ok(())
}

fn series(
    inputs: &[PathBuf],
    scheme: ScoreScheme,
    window: usize,
    normalize: bool,
    doc_type: Option<&str>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    if window == 0 {
        bail!("--window must be at least 1");
    }
    let mut points = Vec::new();
    for i in inputs {
        collect_points(i, scheme, &mut points)?;
    }
    let mut s = ScoreSeries::from_unsorted(points);
    if let Some(t) = doc_type {
        s = s.filter_doc_type(t);
    }
    if normalize {
        s = normalize_series(&s)?;
    }
    s = moving_average(&s, window)?;
    let mut body = Vec::new();
    s.write_csv(&mut body)?;
    emit(out, &body)
}

fn ranking_lines(label: &str, r: &TopicRanking, selected: &[String]) -> String {
    let mut s = format!("{label}\n");
    if r.is_empty() {
        s.push_str("  (none)\n");
    }
    for e in &r.entries {
        let mark = if selected.contains(&e.mnemonic) { "*" } else { " " };
        s.push_str(&format!("{mark} {:>3}  {:<28} {:.6}\n", e.rank, e.mnemonic, e.score));
    }
    s
}

fn retrieve(g: &GlobalArgs, paragraph: &str, json: bool) -> Result<ExitCode> {
    let cfg = load_config(g)?;
    let taxonomy = load_taxonomy_arg(g)?;
    let text = if paragraph == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        paragraph.to_string()
    };
    let retriever = HybridRetriever::new(&taxonomy, cfg.retrieval.clone())?;
    let r = retriever.retrieve(text.trim());
    for w in &r.warnings {
        warn!("{w}");
    }
    if json {
        let v = serde_json::json!({
            "keyword": r.keyword,
            "dense": r.dense,
            "fused": r.fused,
            "selected": r.selected,
            "warnings": r.warnings,
        });
        outln!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        out!("{}", ranking_lines("fused (* = walked):", &r.fused, &r.selected));
        out!("{}", ranking_lines("keyword:", &r.keyword, &[]));
        if let Some(d) = &r.dense {
            let top = TopicRanking { entries: d.entries.iter().take(10).cloned().collect() };
            out!("{}", ranking_lines("dense (top 10):", &top, &[]));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn compile_grammar(g: &GlobalArgs, mnemonic: &str, node_map: bool) -> Result<ExitCode> {
    let taxonomy = load_taxonomy_arg(g)?;
    let topic = taxonomy.topic(mnemonic).ok_or_else(|| anyhow!("no topic {mnemonic:?} in the taxonomy"))?;
    let compiled = compile_tree(topic)?;
    if node_map {
        outln!("{}", serde_json::to_string_pretty(&compiled.node_ids)?);
    } else {
        out!("{}", compiled.grammar_text);
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(g: &GlobalArgs) -> Result<ExitCode> {
    let mut problems = 0;
    let taxonomy: Taxonomy = match &g.taxonomy {
        None => serde_json::from_str(Taxonomy::reference_json())?,
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read taxonomy {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("malformed taxonomy {}", p.display()))?
        }
    };
    let name = g.taxonomy.as_ref().map_or("reference taxonomy".to_string(), |p| p.display().to_string());
    let violations = validate_taxonomy(&taxonomy);
    for v in &violations {
        outln!("{name}: {v}");
    }
    problems += violations.len();
    if violations.is_empty() {
        for t in &taxonomy.topics {
            compile_tree(t).with_context(|| format!("{name}: topic {}", t.mnemonic))?;
        }
        outln!("{name}: ok, version {}, {} topics", taxonomy.version, taxonomy.topics.len());
    }
    if let Some(p) = &g.config {
        match Config::load(p) {
            Ok(_) => outln!("{}: ok", p.display()),
            Err(e) => {
                outln!("{e}");
                problems += 1;
            }
        }
    }
    Ok(if problems > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
