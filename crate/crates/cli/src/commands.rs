use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use amlnet_core::export::{to_dot, to_graphml};
use amlnet_core::features::{read_features, write_features, ClientFeatureRow, COLUMNS};
use amlnet_core::ledger::{apply_recording_threshold, read_labels, read_ledger, write_labels, write_ledger};
use amlnet_core::network::{build_attribute_network, build_tacit_network, build_transactions_network, NetworkKind};
use amlnet_core::pipeline::{analyze as run_analysis, AnalysisOptions};
use amlnet_core::stats::logit::PAPER_MODELS_JSON;
use amlnet_core::stats::report::{
    render_correlation_text, render_model_table_text, write_correlation_csv, write_model_table_csv, write_ranking,
};
use amlnet_core::stats::{correlation_report, fit_logit, paper_model, paper_models, rank_clients, FitOptions, LogitModel};
use amlnet_core::synth::{generate as synthesize, ScenarioConfig};
use amlnet_core::tacit::{
    apply_flags, components, label_flags, parse_flags, propagate_alerts, write_alerts, write_components, AlertLevel,
};
use amlnet_core::{Error, Ledger, PartyId, RiskNetwork, RiskTables};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::config::FileConfig;
use crate::manifest::{require_file, sha256_hex, Run, StageWriter};
use crate::{AlertsArgs, AnalyzeArgs, CliError, ExportArgs, ExportFormat, FitArgs, GenerateArgs, IngestArgs, ScoreArgs};

type Result<T> = std::result::Result<T, CliError>;

const SYNTH_LEDGER: &str = "synthetic/ledger.csv";
const SYNTH_LABELS: &str = "synthetic/labels.csv";
const DATA_LEDGER: &str = "dataset/ledger.csv";
const DATA_LABELS: &str = "dataset/labels.csv";
const DATA_TABLES: &str = "dataset/tables.json";
const FEATURES: &str = "features.csv";

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> amlnet_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Core(Error::Json(e)))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Names end up in file paths, so keep them to a safe alphabet.
fn check_name(name: &str) -> Result<&str> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    if ok {
        Ok(name)
    } else {
        Err(CliError::Validation(format!(
            "model name `{name}` may only use letters, digits, `_`, `-` and `.`"
        )))
    }
}

fn load_tables(path: Option<&Path>) -> Result<(RiskTables, String)> {
    match path {
        Some(p) => {
            require_file("tables", p)?;
            Ok((RiskTables::load(p)?, p.display().to_string()))
        }
        None => Ok((RiskTables::builtin(), "builtin".into())),
    }
}

/// The validated dataset written by `ingest`, with labels applied.
fn load_dataset(st: &mut StageWriter<'_>) -> Result<(RiskTables, Ledger)> {
    let tables_bytes = st.read_artifact(DATA_TABLES, "ingest")?;
    let tables: RiskTables = serde_json::from_slice(&tables_bytes).map_err(|e| CliError::Core(Error::Json(e)))?;
    let ledger_bytes = st.read_artifact(DATA_LEDGER, "ingest")?;
    let mut ledger = read_ledger(&ledger_bytes[..], DATA_LEDGER, &tables)?;
    let label_bytes = st.read_artifact(DATA_LABELS, "ingest")?;
    read_labels(&label_bytes[..], DATA_LABELS, &mut ledger.parties)?;
    Ok((tables, ledger))
}

pub fn generate(cfg: &FileConfig, a: GenerateArgs) -> Result<()> {
    let t0 = Instant::now();
    let scenario_path = a.scenario.or_else(|| cfg.scenario.clone());
    let tables_path = a.tables.or_else(|| cfg.tables.clone());
    let mut scenario = match &scenario_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            ScenarioConfig::from_toml(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => ScenarioConfig::paper_preset(),
    };
    if let Some(seed) = a.seed.or(cfg.seed) {
        scenario.seed = seed;
    }
    let (tables, tables_source) = load_tables(tables_path.as_deref())?;

    let mut run = Run::open(&a.run.run)?;
    let mut st = run.begin("generate", &scenario)?;
    st.note_input(&format!("tables:{tables_source}"), sha256_hex(&json_bytes(&tables)?));
    let ds = synthesize(&scenario, &tables)?;
    let ledger = to_bytes(|b| write_ledger(b, &ds.ledger.records, &ds.ledger.parties))?;
    let labels = to_bytes(|b| write_labels(b, &ds.ledger.parties))?;
    let scenario_toml = toml::to_string(&scenario).map_err(|e| CliError::Validation(e.to_string()))?;
    st.write(SYNTH_LEDGER, &ledger)?;
    st.write(SYNTH_LABELS, &labels)?;
    st.write("synthetic/truth.json", &json_bytes(&ds.truth)?)?;
    st.write("synthetic/scenario.toml", scenario_toml.as_bytes())?;
    st.count("parties", ds.ledger.parties.len());
    st.count("transactions", ds.ledger.records.len());
    st.count("labeled", ds.ledger.labeled_count());
    st.count("criminal", ds.truth.criminals.len());
    st.count("smurfing_pairs", ds.truth.smurfing.len());
    st.count("owner_clusters", ds.truth.shared_owner_clusters.len());
    println!(
        "generate: {} parties, {} transactions, {} labeled ({} criminal) -> {}",
        ds.ledger.parties.len(),
        ds.ledger.records.len(),
        ds.ledger.labeled_count(),
        ds.truth.criminals.len(),
        st.run().path("synthetic").display()
    );
    st.commit(t0.elapsed())
}

pub fn ingest(cfg: &FileConfig, a: IngestArgs) -> Result<()> {
    let t0 = Instant::now();
    let tables_path = a.tables.or_else(|| cfg.tables.clone());
    let (mut tables, tables_source) = load_tables(tables_path.as_deref())?;
    if let Some(w) = a.window.or(cfg.window) {
        if w == 0 {
            return Err(CliError::Validation("--window must be at least 1 day".into()));
        }
        tables.aggregation_window_days = w;
    }
    let settings = json!({
        "tables": tables_source,
        "window_days": tables.aggregation_window_days,
        "recording_threshold": tables.recording_threshold.to_string(),
    });

    let mut run = Run::open(&a.run.run)?;
    let mut st = run.begin("ingest", &settings)?;
    st.note_input(&format!("tables:{tables_source}"), sha256_hex(&json_bytes(&tables)?));

    let (ledger_bytes, ledger_name, from_synthetic) = match &a.ledger {
        Some(p) => (st.read_external("ledger", p)?, p.display().to_string(), false),
        None if st.run().has_artifact(SYNTH_LEDGER) => {
            (st.read_artifact(SYNTH_LEDGER, "generate")?, SYNTH_LEDGER.to_string(), true)
        }
        None => {
            return Err(CliError::Validation(
                "no --ledger given and this run has no generated ledger".into(),
            ))
        }
    };
    let labels = match &a.labels {
        Some(p) => Some((st.read_external("labels", p)?, p.display().to_string())),
        None if from_synthetic && st.run().has_artifact(SYNTH_LABELS) => {
            Some((st.read_artifact(SYNTH_LABELS, "generate")?, SYNTH_LABELS.to_string()))
        }
        None => None,
    };

    let mut ledger = read_ledger(&ledger_bytes[..], &ledger_name, &tables)?;
    let mut skipped_labels = Vec::new();
    if let Some((bytes, name)) = &labels {
        let outcome = read_labels(&bytes[..], name, &mut ledger.parties)?;
        for (row, id) in &outcome.skipped {
            warn!("{name}: row {row}: party `{id}` does not appear in the ledger; label skipped");
        }
        skipped_labels = outcome.skipped;
    }
    let read = ledger.records.len();
    let outcome = apply_recording_threshold(&ledger.records, &tables);
    let dropped = outcome.dropped;
    let kept = ledger.with_records(outcome.kept);

    let report = json!({
        "records_read": read,
        "records_kept": kept.records.len(),
        "records_below_threshold": dropped,
        "parties": kept.parties.len(),
        "labeled": kept.labeled_count(),
        "labels_skipped": skipped_labels.iter().map(|(r, id)| json!({"row": r, "party_id": id})).collect::<Vec<_>>(),
    });
    st.write(DATA_LEDGER, &to_bytes(|b| write_ledger(b, &kept.records, &kept.parties))?)?;
    st.write(DATA_LABELS, &to_bytes(|b| write_labels(b, &kept.parties))?)?;
    st.write(DATA_TABLES, &json_bytes(&tables)?)?;
    st.write("dataset/ingest_report.json", &json_bytes(&report)?)?;
    st.count("records_read", read);
    st.count("records_kept", kept.records.len());
    st.count("records_below_threshold", dropped);
    st.count("parties", kept.parties.len());
    st.count("labeled", kept.labeled_count());
    println!(
        "ingest: {read} records read, {} kept, {dropped} below the recording threshold; {} parties, {} labeled",
        kept.records.len(),
        kept.parties.len(),
        kept.labeled_count()
    );
    st.commit(t0.elapsed())
}

fn network_files(
    prefix: &str,
    nets: &[&RiskNetwork],
    suffix: &str,
    ledger: &Ledger,
    format: ExportFormat,
) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for net in nets {
        let stem = format!("{prefix}{}{suffix}", net.kind());
        if format != ExportFormat::Dot {
            out.push((format!("{stem}.graphml"), to_graphml(net, &ledger.parties, None)));
        }
        if format != ExportFormat::Graphml {
            out.push((format!("{stem}.dot"), to_dot(net)));
        }
    }
    out
}

pub fn analyze(cfg: &FileConfig, a: AnalyzeArgs) -> Result<()> {
    let t0 = Instant::now();
    let options = cfg.analysis(a.threshold, a.collapse, a.arc_combine)?;
    let mut run = Run::open(&a.run.run)?;
    let mut st = run.begin("analyze", &options)?;
    let (tables, ledger) = load_dataset(&mut st)?;
    let analysis = run_analysis(&ledger, &tables, &options)?;

    st.write(FEATURES, &to_bytes(|b| write_features(b, &analysis.features))?)?;
    let tacit = analysis.tacit.without_isolates();
    let unfiltered: Vec<&RiskNetwork> = analysis.networks.iter().chain([&tacit]).collect();
    let filtered: Vec<&RiskNetwork> = analysis.filtered.iter().collect();
    let mut files = network_files("networks/", &unfiltered, "", &ledger, ExportFormat::Both);
    files.extend(network_files("networks/", &filtered, "_filtered", &ledger, ExportFormat::Both));
    for (path, body) in &files {
        st.write(path, body.as_bytes())?;
    }

    let labeled = analysis.features.iter().filter(|r| r.is_fit_eligible()).count();
    match correlation_report(&analysis.features) {
        Ok(report) => {
            st.write("reports/table1.csv", &to_bytes(|b| write_correlation_csv(b, &report))?)?;
            st.write("reports/table1.txt", render_correlation_text(&report).as_bytes())?;
        }
        Err(Error::InsufficientData(msg)) => warn!("correlation report skipped: {msg}"),
        Err(e) => return Err(e.into()),
    }

    for (net, filt) in analysis.networks.iter().zip(&analysis.filtered) {
        let k = net.kind();
        st.count(&format!("{k}_nodes"), net.node_count());
        st.count(&format!("{k}_arcs"), net.arc_count());
        st.count(&format!("{k}_loops_removed"), net.loops_removed());
        st.count(&format!("{k}_filtered_arcs"), filt.arc_count());
    }
    st.count("tacit_connected_nodes", tacit.node_count());
    st.count("tacit_edges", tacit.arc_count());
    st.count("feature_rows", analysis.features.len());
    st.count("labeled_rows", labeled);
    let txn = &analysis.networks[0];
    println!(
        "analyze: {} clients, transactions network {} nodes / {} arcs ({} after filter), {} tacit-linked parties -> {}",
        analysis.features.len(),
        txn.node_count(),
        txn.arc_count(),
        analysis.filtered[0].arc_count(),
        tacit.node_count(),
        st.run().path(FEATURES).display()
    );
    info!("feature matrix has {labeled} labeled rows");
    st.commit(t0.elapsed())
}

fn check_predictors(predictors: &[String]) -> Result<()> {
    if predictors.is_empty() {
        return Err(CliError::Validation("--predictors is empty".into()));
    }
    for p in predictors {
        if p == "high_risk" {
            return Err(CliError::Validation("high_risk is the response, not a predictor".into()));
        }
        if !COLUMNS.contains(&p.as_str()) {
            return Err(CliError::Validation(format!(
                "unknown predictor `{p}`; expected one of {}",
                COLUMNS[1..].join(", ")
            )));
        }
    }
    let unique: BTreeSet<&String> = predictors.iter().collect();
    if unique.len() != predictors.len() {
        return Err(CliError::Validation("a predictor is listed twice".into()));
    }
    Ok(())
}

pub fn fit(cfg: &FileConfig, a: FitArgs) -> Result<()> {
    let t0 = Instant::now();
    let options = FitOptions {
        standardize: a.standardize || cfg.standardize.unwrap_or(false),
        max_iter: a.max_iter.or(cfg.max_iter).unwrap_or(FitOptions::default().max_iter),
    };
    if options.max_iter == 0 {
        return Err(CliError::Validation("--max-iter must be at least 1".into()));
    }
    let specs: Vec<(String, Vec<String>)> = match &a.predictors {
        Some(p) => {
            check_predictors(p)?;
            vec![(check_name(&a.name)?.to_string(), p.clone())]
        }
        None => paper_models().into_iter().map(|m| (m.name, m.predictors)).collect(),
    };
    let key = match &a.predictors {
        Some(_) => format!("fit:{}", a.name),
        None => "fit".to_string(),
    };
    let settings = json!({ "options": options, "models": specs });

    let mut run = Run::open(&a.run.run)?;
    let mut st = run.begin(key, &settings)?;
    let bytes = st.read_artifact(FEATURES, "analyze")?;
    let rows = read_features(&bytes[..], FEATURES)?;
    let mut models = Vec::with_capacity(specs.len());
    for (name, predictors) in &specs {
        let model = fit_logit(name, &rows, predictors, options)?;
        st.write(&format!("models/{name}.json"), format!("{}\n", model.to_json()?).as_bytes())?;
        models.push(model);
    }
    if a.predictors.is_none() {
        st.write("reports/table2.csv", &to_bytes(|b| write_model_table_csv(b, &models))?)?;
        st.write("reports/table2.txt", render_model_table_text(&models).as_bytes())?;
    }
    st.count("rows", rows.len());
    st.count("labeled_rows", models.first().map_or(0, |m| m.n));
    st.count("models", models.len());
    print!("{}", render_model_table_text(&models));
    let failed: Vec<String> = models
        .iter()
        .filter(|m| !m.converged)
        .map(|m| format!("{}: {}", m.name, m.diagnostic.as_deref().unwrap_or("did not converge")))
        .collect();
    st.commit(t0.elapsed())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("model fit failed: {}", failed.join("; "))))
    }
}

pub fn score(cfg: &FileConfig, a: ScoreArgs) -> Result<()> {
    let t0 = Instant::now();
    let top_k = a.top_k.or(cfg.top_k);
    let mut run = Run::open(&a.run.run)?;
    let settings = json!({ "model": a.model, "top_k": top_k, "features": a.features.as_ref().map(|p| p.display().to_string()) });
    let model_key = a.model.strip_prefix("paper:").unwrap_or(&a.model).to_string();
    let mut st = run.begin(format!("score:{model_key}"), &settings)?;

    let model: LogitModel = if let Some(name) = a.model.strip_prefix("paper:") {
        paper_model(name).ok_or_else(|| {
            let names: Vec<String> = paper_models().into_iter().map(|m| format!("paper:{}", m.name)).collect();
            CliError::Validation(format!("unknown bundled model `{}`; available: {}", a.model, names.join(", ")))
        })?
    } else if st.run().has_artifact(&a.model) {
        let bytes = st.read_artifact(&a.model, "fit")?;
        LogitModel::from_json(&String::from_utf8_lossy(&bytes))?
    } else {
        let bytes = st.read_external("model", Path::new(&a.model))?;
        LogitModel::from_json(&String::from_utf8_lossy(&bytes))?
    };
    let name = check_name(&model.name)?.to_string();

    let rows: Vec<ClientFeatureRow> = match &a.features {
        Some(p) => {
            let bytes = st.read_external("features", p)?;
            read_features(&bytes[..], &p.display().to_string())?
        }
        None => {
            let bytes = st.read_artifact(FEATURES, "analyze")?;
            read_features(&bytes[..], FEATURES)?
        }
    };
    let ranked = rank_clients(&model, &rows, top_k.unwrap_or(usize::MAX))?;
    let body = to_bytes(|b| write_ranking(b, &ranked, &rows))?;
    let out = format!("scores/{name}.csv");
    st.write(&out, &body)?;
    st.count("rows", rows.len());
    st.count("ranked", ranked.len());
    println!("score: {} of {} clients ranked with {name} -> {}", ranked.len(), rows.len(), st.run().path(&out).display());
    for (i, (id, p)) in ranked.iter().take(10).enumerate() {
        println!("{:>4}  {id}  {p:.4}", i + 1);
    }
    st.commit(t0.elapsed())
}

pub fn alerts(_cfg: &FileConfig, a: AlertsArgs) -> Result<()> {
    let t0 = Instant::now();
    let settings = json!({
        "flags": a.flags.as_ref().map(|p| p.display().to_string()),
        "ignore_labels": a.ignore_labels,
    });
    let mut run = Run::open(&a.run.run)?;
    let mut st = run.begin("alerts", &settings)?;
    let (_, ledger) = load_dataset(&mut st)?;

    let mut flags = if a.ignore_labels { BTreeSet::new() } else { label_flags(&ledger.parties) };
    if let Some(p) = &a.flags {
        let bytes = st.read_external("flags", p)?;
        let known: BTreeSet<&PartyId> = ledger.parties.iter().map(|p| &p.id).collect();
        for id in parse_flags(&String::from_utf8_lossy(&bytes)) {
            if known.contains(&id) {
                flags.insert(id);
            } else {
                warn!("{}: flagged party `{id}` does not appear in the ledger; ignored", p.display());
            }
        }
    }

    let tacit = build_tacit_network(&ledger.records);
    let mut comps = components(&tacit);
    apply_flags(&mut comps, &flags);
    let alerts = propagate_alerts(&comps, &flags);
    st.write("alerts/alerts.csv", &to_bytes(|b| write_alerts(b, &alerts))?)?;
    st.write("alerts/components.csv", &to_bytes(|b| write_components(b, &comps))?)?;
    st.write(
        "alerts/tacit.graphml",
        to_graphml(&tacit.without_isolates(), &ledger.parties, Some(&flags)).as_bytes(),
    )?;
    let watch = comps.iter().filter(|c| c.alert_level == AlertLevel::Watch).count();
    st.count("flags", flags.len());
    st.count("components", comps.len());
    st.count("watch_components", watch);
    st.count("alerts", alerts.len());
    println!(
        "alerts: {} flagged parties, {} components ({watch} on watch), {} alerts -> {}",
        flags.len(),
        comps.len(),
        alerts.len(),
        st.run().path("alerts/alerts.csv").display()
    );
    st.commit(t0.elapsed())
}

pub fn export(_cfg: &FileConfig, a: ExportArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut run = Run::open(&a.run.run)?;
    let options: AnalysisOptions = match run.manifest().stages.get("analyze") {
        Some(rec) => serde_json::from_value(rec.config.clone())
            .map_err(|e| CliError::Validation(format!("analyze settings in manifest: {e}")))?,
        None => return Err(CliError::Validation("run `amlnet analyze` first".into())),
    };
    let settings = json!({ "format": format!("{:?}", a.format).to_lowercase(), "tables": a.tables, "analysis": options });
    let mut st = run.begin("export", &settings)?;
    let (tables, ledger) = load_dataset(&mut st)?;

    let transactions = build_transactions_network(&ledger.records, &tables);
    let sector = build_attribute_network(&ledger, &tables, NetworkKind::Sector, options.arc_combine, options.collapse)?;
    let geo = build_attribute_network(&ledger, &tables, NetworkKind::Geo, options.arc_combine, options.collapse)?;
    let tacit = build_tacit_network(&ledger.records).without_isolates();
    let nets = [transactions, sector, geo];
    let filtered: Vec<RiskNetwork> = nets.iter().map(|n| n.filtered(options.thresholds.get(n.kind()))).collect();
    let all: Vec<&RiskNetwork> = nets.iter().chain([&tacit]).collect();
    let mut files = network_files("export/", &all, "", &ledger, a.format);
    files.extend(network_files("export/", &filtered.iter().collect::<Vec<_>>(), "_filtered", &ledger, a.format));
    if a.tables {
        for (name, body) in RiskTables::default_bundle() {
            files.push((format!("export/tables/{name}"), body.to_string()));
        }
        files.push(("export/paper_models.json".into(), PAPER_MODELS_JSON.to_string()));
    }
    for (path, body) in &files {
        st.write(path, body.as_bytes())?;
    }
    st.count("files", files.len());
    println!("export: {} files -> {}", files.len(), st.run().path("export").display());
    st.commit(t0.elapsed())
}
