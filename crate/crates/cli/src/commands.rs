use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use threatsent_core::alignment::{alignment_report, join_scores, read_score_entries, AlignmentReport, ScoreEntry};
use threatsent_core::annotation::{router, AnnotationService, SessionStore};
use threatsent_core::corpus::{
    cochran_estimate, filter_by_keywords, parse_reviews_with, random_sample, write_reviews, KeywordFilter,
    ParseOptions, SamplePlan,
};
use threatsent_core::diversity::{diversity_report, DiversityReport};
use threatsent_core::gateway::{
    score_reviews, BatchLogEntry, BatchOptions, ChatProvider, HttpProvider, MockProvider, TranscriptLog,
};
use threatsent_core::synthesis::generate_batch;
use threatsent_core::{Review, Source};

use crate::config::{ExperimentConfig, Overrides, ProviderKind};
use crate::{data_err, CliError, Command};

pub fn run(overrides: &Overrides, command: Command) -> Result<(), CliError> {
    let config = ExperimentConfig::load(overrides)?;
    match command {
        Command::Filter { stems, columns } => filter(&config, stems, columns),
        Command::Sample {
            population,
            z,
            proportion,
            margin,
            size,
        } => sample(&config, population, z, proportion, margin, size),
        Command::Synth { log, transcript } => runtime()?.block_on(synth(&config, log, transcript)),
        Command::Score { log, transcript } => runtime()?.block_on(score(&config, log, transcript)),
        Command::Diversity { label } => diversity(&config, label),
        Command::Align { label, disagreements } => align(&config, label, disagreements),
        Command::AnnotateServe { store, ui_dir, host } => {
            runtime()?.block_on(annotate_serve(&config, &store, ui_dir, &host))
        }
        Command::Report { diversity, alignment } => report(&config, &diversity, &alignment),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Runtime::new().map_err(data_err)
}

/// First line of every artifact.
fn metadata(stage: &str, config: &ExperimentConfig) -> String {
    format!(
        "# tool=threatsent version={} stage={stage} seed={} config={}\n",
        env!("CARGO_PKG_VERSION"),
        config.seed,
        config.hash()
    )
}

/// Writes to `--out`, or stdout when it is unset.
fn emit(config: &ExperimentConfig, content: &[u8]) -> Result<(), CliError> {
    match &config.paths.output {
        Some(path) => write_file(path, content),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content).and_then(|_| out.flush()).map_err(data_err)
        }
    }
}

fn write_file(path: &Path, content: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_corpus(path: &Path, options: &ParseOptions) -> Result<Vec<Review>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_reviews_with(BufReader::new(file), options).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn corpus_bytes(stage: &str, config: &ExperimentConfig, reviews: &[Review]) -> Result<Vec<u8>, CliError> {
    let mut out = metadata(stage, config).into_bytes();
    write_reviews(reviews, &mut out).map_err(data_err)?;
    Ok(out)
}

fn jsonl<T: serde::Serialize>(stage: &str, config: &ExperimentConfig, rows: &[T]) -> Vec<u8> {
    let mut out = metadata(stage, config);
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("rows serialize"));
        out.push('\n');
    }
    out.into_bytes()
}

fn filter(config: &ExperimentConfig, stems: Option<Vec<String>>, columns: Vec<(String, String)>) -> Result<(), CliError> {
    let mut options = ParseOptions::new(Source::Human);
    options.column_map = columns.into_iter().collect();
    let reviews = read_corpus(config.input()?, &options)?;
    let keywords = match stems {
        Some(s) => KeywordFilter::new(s).map_err(|e| CliError::Usage(e.to_string()))?,
        None => KeywordFilter::default(),
    };
    let kept = filter_by_keywords(&reviews, &keywords);
    eprintln!("kept {} of {} reviews", kept.len(), reviews.len());
    emit(config, &corpus_bytes("filter", config, &kept)?)
}

fn sample(
    config: &ExperimentConfig,
    population: Option<u64>,
    z: f64,
    proportion: f64,
    margin: f64,
    size: Option<usize>,
) -> Result<(), CliError> {
    let reviews = read_corpus(config.input()?, &ParseOptions::new(Source::Human))?;
    let k = match size {
        Some(k) => k,
        None => {
            let plan = SamplePlan {
                population: population.unwrap_or(reviews.len() as u64),
                confidence_z: z,
                proportion,
                margin,
                seed: config.seed,
            };
            let est = cochran_estimate(&plan).map_err(|e| CliError::Usage(e.to_string()))?;
            eprintln!(
                "cochran: n0={:.4} corrected={:.4} sample_size={}",
                est.initial, est.corrected, est.sample_size
            );
            est.sample_size as usize
        }
    };
    if k > reviews.len() {
        return Err(CliError::Data(format!(
            "sample of {k} requested but the input holds {} reviews",
            reviews.len()
        )));
    }
    let mut drawn = random_sample(&reviews, k, config.seed).map_err(data_err)?;
    drawn.sort_by_key(|r| r.id);
    emit(config, &corpus_bytes("sample", config, &drawn)?)
}

fn provider(config: &ExperimentConfig) -> Result<Box<dyn ChatProvider>, CliError> {
    Ok(match config.provider.kind {
        ProviderKind::Mock => Box::new(MockProvider::new(config.seed)),
        ProviderKind::Http => Box::new(HttpProvider::from_env(config.provider.settings.clone()).map_err(data_err)?),
    })
}

fn transcript(path: Option<&Path>) -> Result<Option<TranscriptLog>, CliError> {
    path.map(|p| TranscriptLog::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))))
        .transpose()
}

fn write_log(stage: &str, config: &ExperimentConfig, path: Option<&Path>, log: &[BatchLogEntry]) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, &jsonl(stage, config, log)),
        None => Ok(()),
    }
}

async fn synth(
    config: &ExperimentConfig,
    log: Option<std::path::PathBuf>,
    transcript_path: Option<std::path::PathBuf>,
) -> Result<(), CliError> {
    let schedule = config.schedule()?;
    let provider = provider(config)?;
    let transcript = transcript(transcript_path.as_deref())?;
    let options = BatchOptions {
        temperature: config.provider.settings.generation_temperature(),
        concurrency: config.provider.settings.max_in_flight,
        transcript: transcript.as_ref(),
    };
    let outcome = generate_batch(&schedule, provider.as_ref(), &options).await;
    // Partial results are kept even when the run was cut short.
    emit(config, &corpus_bytes("synth", config, &outcome.reviews)?)?;
    write_log("synth", config, log.as_deref(), &outcome.log)?;
    eprintln!(
        "generated {} of {} reviews, {} failed",
        outcome.reviews.len(),
        schedule.total(),
        outcome.failures()
    );
    match outcome.aborted {
        Some(e) => Err(CliError::Data(format!("generation aborted: {e}"))),
        None => Ok(()),
    }
}

async fn score(
    config: &ExperimentConfig,
    log: Option<std::path::PathBuf>,
    transcript_path: Option<std::path::PathBuf>,
) -> Result<(), CliError> {
    let reviews = read_corpus(config.input()?, &ParseOptions::new(Source::Human))?;
    let provider = provider(config)?;
    let transcript = transcript(transcript_path.as_deref())?;
    let options = BatchOptions {
        temperature: config.provider.settings.analysis_temperature(),
        concurrency: config.provider.settings.max_in_flight,
        transcript: transcript.as_ref(),
    };
    let outcome = score_reviews(&reviews, provider.as_ref(), &options).await;
    emit(config, &jsonl("score", config, &outcome.records))?;
    write_log("score", config, log.as_deref(), &outcome.log)?;
    eprintln!("scored {} of {} reviews", outcome.records.len(), reviews.len());
    match outcome.aborted {
        Some(e) => Err(CliError::Data(format!("scoring aborted: {e}"))),
        None => Ok(()),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn diversity(config: &ExperimentConfig, label: Option<String>) -> Result<(), CliError> {
    let input = config.input()?;
    let reviews = read_corpus(input, &ParseOptions::new(Source::Human))?;
    let report = diversity_report(&reviews).map_err(data_err)?;
    let label = label.unwrap_or_else(|| stem(input));
    let text = format!(
        "{}{}\n{}\n",
        metadata("diversity", config),
        DiversityReport::CSV_HEADER,
        report.csv_row(&label)
    );
    emit(config, text.as_bytes())
}

/// Gold scores from JSONL, or from a review file's `orig_sentiment` column.
fn read_reference(path: &Path) -> Result<Vec<ScoreEntry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.starts_with('{') {
        return read_score_entries(text.as_bytes()).map_err(|e| CliError::Data(format!("{}: {e}", path.display())));
    }
    let reviews = parse_reviews_with(text.as_bytes(), &ParseOptions::new(Source::Human))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    reviews
        .iter()
        .map(|r| match r.orig_sentiment {
            Some(score) => Ok(ScoreEntry { review_id: r.id, score }),
            None => Err(CliError::Data(format!(
                "{}: review {} has no orig_sentiment",
                path.display(),
                r.id
            ))),
        })
        .collect()
}

fn align(config: &ExperimentConfig, label: Option<String>, disagreements: Option<std::path::PathBuf>) -> Result<(), CliError> {
    let reference = read_reference(config.gold()?)?;
    let scores_path = config.scores()?;
    let file = File::open(scores_path).map_err(data_err)?;
    let evaluated = read_score_entries(BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", scores_path.display())))?;
    let pairs = join_scores(&reference, &evaluated).map_err(data_err)?;
    let report = alignment_report(&pairs, config.disagreement_threshold).map_err(data_err)?;
    let label = label.unwrap_or_else(|| stem(scores_path));
    let text = format!("{}{}", metadata("align", config), report.render_csv(&label));
    emit(config, text.as_bytes())?;
    if let Some(path) = disagreements {
        let text = format!("{}{}", metadata("align", config), report.render_disagreements());
        write_file(&path, text.as_bytes())?;
    }
    eprintln!(
        "{} pairs, {} at or above {} ({:.1}%)",
        report.count,
        report.disagreements.len(),
        report.threshold,
        100.0 * report.disagreement_rate()
    );
    Ok(())
}

async fn annotate_serve(
    config: &ExperimentConfig,
    store: &Path,
    ui_dir: Option<std::path::PathBuf>,
    host: &str,
) -> Result<(), CliError> {
    let store = SessionStore::open(store).map_err(data_err)?;
    let service = AnnotationService::open(store, ui_dir).map_err(data_err)?;
    let resumed = service.session_ids().await.len();
    let mut out = std::io::stdout().lock();
    writeln!(out, "resumed {resumed} session(s)").map_err(data_err)?;
    if config.paths.input.is_some() {
        let input = config.input()?;
        let (id, total) = service
            .create_session(&input.to_string_lossy(), config.seed)
            .await
            .map_err(data_err)?;
        writeln!(out, "session {id} total {total}").map_err(data_err)?;
    }
    let listener = tokio::net::TcpListener::bind((host, config.annotation_port))
        .await
        .map_err(|e| CliError::Data(format!("cannot bind {host}:{}: {e}", config.annotation_port)))?;
    let addr = listener.local_addr().map_err(data_err)?;
    writeln!(out, "listening on http://{addr}").map_err(data_err)?;
    out.flush().map_err(data_err)?;
    drop(out);
    axum_serve(listener, Arc::new(service)).await
}

async fn axum_serve(listener: tokio::net::TcpListener, service: Arc<AnnotationService>) -> Result<(), CliError> {
    threatsent_core::annotation::serve(listener, router(service), async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
    .map_err(data_err)
}

fn read_rows(path: &Path, width: usize) -> Result<Vec<Vec<String>>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if record.len() < width {
            return Err(CliError::Data(format!("{}: expected {width} columns", path.display())));
        }
        rows.push(record.iter().take(width).map(str::to_string).collect());
    }
    Ok(rows)
}

fn report(config: &ExperimentConfig, diversity: &[std::path::PathBuf], alignment: &[std::path::PathBuf]) -> Result<(), CliError> {
    if diversity.is_empty() && alignment.is_empty() {
        return Err(CliError::Usage("report needs --diversity and/or --alignment files".into()));
    }
    let diversity_header: Vec<&str> = DiversityReport::CSV_HEADER.split(',').take(4).collect();
    let alignment_header: Vec<&str> = AlignmentReport::CSV_HEADER.split(',').collect();
    let mut tables = Vec::new();
    for (header, files) in [(diversity_header, diversity), (alignment_header, alignment)] {
        if files.is_empty() {
            continue;
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&header).map_err(data_err)?;
        for path in files {
            if !path.exists() {
                return Err(CliError::Data(format!("{} does not exist", path.display())));
            }
            for row in read_rows(path, header.len())? {
                writer.write_record(&row).map_err(data_err)?;
            }
        }
        tables.push(writer.into_inner().map_err(data_err)?);
    }
    let body = tables.join(&b"\n"[..]);
    let mut out = metadata("report", config).into_bytes();
    out.extend(body);
    emit(config, &out)
}
