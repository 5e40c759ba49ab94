use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;

use draftkit::analysis::{
    characteristic_terms, dataset_stats, edit_type_distribution, linguistic_profile, write_terms_tsv, DatasetStats,
    LinguisticProfile, ProfileOptions,
};
use draftkit::corpus::{self, normalize, PairFormat, Rejection, SentenceFilter};
use draftkit::lexicon::{Dictionary, Stopwords};
use draftkit::lm::{self, NGramModel, Smoothing};
use draftkit::metrics::{evaluate, EditType, EvalContext};
use draftkit::noising::{noise_corpus, token_counts, ReplacementVocab};
use draftkit::quality::{filter_pairs, score_workers, FilterConfig, WorkerSubmission};
use draftkit::{DraftPair, Sentence};

use crate::config::Config;
use crate::manifest::{RunRecorder, SCHEMA_VERSION};
use crate::{
    AnalysisCmd, Command, CorpusCmd, EvalCmd, Failure, FilterMode, LmCmd, NoiseCmd, QualityCmd, SmoothingArg, StatsCmd,
};

/// Copies subcommand flags into the config; flags win over file values.
pub fn apply_overrides(cmd: &Command, cfg: &mut Config) {
    match cmd {
        Command::Lm(LmCmd::Train(a)) => {
            if let Some(o) = a.order {
                cfg.lm.order = o;
            }
            match (a.smoothing, a.k) {
                (Some(SmoothingArg::Kn), _) => cfg.lm.smoothing = Smoothing::InterpolatedKneserNey,
                (Some(SmoothingArg::AddK), k) => {
                    cfg.lm.smoothing = Smoothing::AddK { k: k.unwrap_or(1.0) }
                }
                (None, Some(k)) => {
                    if let Smoothing::AddK { .. } = cfg.lm.smoothing {
                        cfg.lm.smoothing = Smoothing::AddK { k };
                    }
                }
                (None, None) => {}
            }
        }
        Command::Noise(NoiseCmd::Run(a)) => {
            let n = &mut cfg.noise;
            if let Some(v) = a.delete_p {
                n.delete_p = v;
            }
            if let Some(v) = a.replace_p {
                n.replace_p = v;
            }
            if let Some(v) = a.replace_vocab_min_count {
                n.replace_vocab_min_count = v;
            }
            if let Some(v) = a.shuffle_k {
                n.shuffle_k = v;
            }
            if let Some(v) = a.mask_fraction_max {
                n.mask_fraction_max = v;
            }
        }
        Command::Quality(QualityCmd::FilterPairs(a)) => {
            if let Some(v) = a.alpha {
                cfg.quality.alpha = v;
            }
            if let Some(p) = &a.stopwords {
                cfg.quality.stopwords = Some(p.clone());
            }
        }
        Command::Eval(EvalCmd::Run(a)) => {
            if a.spellcheck_hyp {
                cfg.eval.spellcheck_hyp = true;
            }
        }
        Command::Analysis(AnalysisCmd::Terms(a)) => {
            if let Some(k) = a.top_k {
                cfg.analysis.top_k = k;
            }
            if let Some(e) = a.epsilon {
                cfg.analysis.epsilon = e;
            }
        }
        _ => {}
    }
}

/// Refuses to overwrite any input file.
fn guard_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<(), Failure> {
    let canon = |p: &Path| p.canonicalize().ok();
    let ins: Vec<_> = inputs.iter().filter_map(|p| canon(p)).collect();
    for o in outputs {
        if let Some(c) = canon(o) {
            if ins.contains(&c) {
                return Err(Failure::Usage(format!("output {} would overwrite an input", o.display())));
            }
        }
    }
    let mut seen = HashSet::new();
    for o in outputs {
        if !seen.insert(o.to_path_buf()) {
            return Err(Failure::Usage(format!("output {} given twice", o.display())));
        }
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Non-blank sentences; any unreadable line is a data error.
fn sentences_strict(path: &Path) -> anyhow::Result<Vec<Sentence>> {
    let file = corpus::read_sentences(path)?;
    if let Some(e) = file.errors.first() {
        bail!("{}: {e}", path.display());
    }
    Ok(file.sentences)
}

/// Every line, blank ones included, so several files stay index-aligned.
fn aligned_sentences(path: &Path) -> anyhow::Result<Vec<Sentence>> {
    corpus::read_lines(path)?
        .into_iter()
        .map(|l| l.map(Sentence::new).map_err(|e| anyhow!("{}: {e}", path.display())))
        .collect()
}

fn pairs_strict(path: &Path) -> anyhow::Result<Vec<DraftPair>> {
    let file = corpus::load_pairs(path, PairFormat::from_path(path))?;
    if let Some(e) = file.errors.first() {
        bail!("{}: {e}", path.display());
    }
    Ok(file.pairs)
}

fn load_lm(path: Option<&Path>) -> anyhow::Result<Option<NGramModel>> {
    path.map(|p| lm::load_arpa(p).map_err(anyhow::Error::from)).transpose()
}

pub fn dispatch(cmd: &Command, cfg: &Config, jobs: Option<usize>) -> Result<(), Failure> {
    match cmd {
        Command::Corpus(CorpusCmd::Extract(a)) => {
            let mut inputs = vec![a.input.as_path()];
            inputs.extend(a.exclude.as_deref());
            guard_outputs(&inputs, &[&a.out])?;
            let rec = RunRecorder::start("corpus extract", cfg, jobs);
            corpus_extract(a.input.as_path(), &a.out, a.mode, a.exclude.as_deref(), cfg)?;
            rec.finish(&inputs, &[&a.out])?;
        }
        Command::Corpus(CorpusCmd::Counts(a)) => {
            guard_outputs(&[&a.input], &[&a.out])?;
            let rec = RunRecorder::start("corpus counts", cfg, jobs);
            let sentences = sentences_strict(&a.input)?;
            let mut w = create(&a.out)?;
            for (tok, c) in token_counts(&sentences) {
                writeln!(w, "{tok}\t{c}").map_err(anyhow::Error::from)?;
            }
            w.flush().map_err(anyhow::Error::from)?;
            rec.finish(&[&a.input], &[&a.out])?;
        }
        Command::Lm(LmCmd::Train(a)) => {
            guard_outputs(&[&a.input], &[&a.out])?;
            let rec = RunRecorder::start("lm train", cfg, jobs);
            let sentences = sentences_strict(&a.input)?;
            let model = lm::train(&sentences, &cfg.lm).map_err(anyhow::Error::from)?;
            lm::save_arpa(&model, &a.out).map_err(anyhow::Error::from)?;
            rec.finish(&[&a.input], &[&a.out])?;
        }
        Command::Lm(LmCmd::Ppl(a)) => {
            guard_outputs(&[&a.input, &a.lm], &[&a.report])?;
            let rec = RunRecorder::start("lm ppl", cfg, jobs);
            lm_ppl(&a.lm, &a.input, &a.report)?;
            rec.finish(&[&a.lm, &a.input], &[&a.report])?;
        }
        Command::Noise(NoiseCmd::Run(a)) => {
            let mut inputs = vec![a.input.as_path()];
            inputs.extend(a.vocab_counts.as_deref());
            let mut outputs = vec![a.out.as_path()];
            outputs.extend(a.trace.as_deref());
            guard_outputs(&inputs, &outputs)?;
            let rec = RunRecorder::start("noise run", cfg, jobs);
            noise_run(a, cfg)?;
            rec.finish(&inputs, &outputs)?;
        }
        Command::Quality(QualityCmd::ScoreWorkers(a)) => {
            guard_outputs(&[&a.input], &[&a.out])?;
            let rec = RunRecorder::start("quality score-workers", cfg, jobs);
            score_workers_cmd(&a.input, &a.out, cfg)?;
            rec.finish(&[&a.input], &[&a.out])?;
        }
        Command::Quality(QualityCmd::FilterPairs(a)) => {
            let mut inputs = vec![a.input.as_path()];
            inputs.extend(cfg.quality.stopwords.as_deref());
            guard_outputs(&inputs, &[&a.kept, &a.removed])?;
            let rec = RunRecorder::start("quality filter-pairs", cfg, jobs);
            filter_pairs_cmd(&a.input, &a.kept, &a.removed, cfg)?;
            rec.finish(&inputs, &[&a.kept, &a.removed])?;
        }
        Command::Quality(QualityCmd::Stopwords) => {
            print!("{}", Stopwords::bundled_text());
        }
        Command::Eval(EvalCmd::Run(a)) => {
            let mut inputs = vec![a.src.as_path(), a.hyp.as_path(), a.reference.as_path()];
            inputs.extend(a.lm.as_deref());
            guard_outputs(&inputs, &[&a.report])?;
            let rec = RunRecorder::start("eval run", cfg, jobs);
            eval_run(a, cfg)?;
            rec.finish(&inputs, &[&a.report])?;
        }
        Command::Stats(StatsCmd::Dataset(a)) => {
            let mut inputs = vec![a.input.as_path()];
            inputs.extend(a.lm.as_deref());
            guard_outputs(&inputs, &[&a.report])?;
            let rec = RunRecorder::start("stats dataset", cfg, jobs);
            stats_dataset(&a.input, a.lm.as_deref(), &a.report, cfg)?;
            rec.finish(&inputs, &[&a.report])?;
        }
        Command::Analysis(AnalysisCmd::Terms(a)) => {
            guard_outputs(&[&a.input], &[&a.out])?;
            let rec = RunRecorder::start("analysis terms", cfg, jobs);
            let pairs = pairs_strict(&a.input)?;
            let terms = characteristic_terms(&pairs, cfg.analysis.top_k, cfg.analysis.epsilon)
                .map_err(anyhow::Error::from)?;
            let mut w = create(&a.out)?;
            write_terms_tsv(&mut w, &terms).map_err(anyhow::Error::from)?;
            w.flush().map_err(anyhow::Error::from)?;
            rec.finish(&[&a.input], &[&a.out])?;
        }
    }
    Ok(())
}

fn rejection_name(r: Rejection) -> String {
    match r {
        Rejection::TooShort => "too-short".into(),
        Rejection::TooLong => "too-long".into(),
        Rejection::Forbidden(Some(c)) => format!("forbidden-{}", serde_json::to_value(c).unwrap().as_str().unwrap()),
        Rejection::Forbidden(None) => "forbidden-pattern".into(),
        Rejection::TooFewTokens => "too-few-tokens".into(),
        Rejection::TooManyTokens => "too-many-tokens".into(),
        Rejection::LowAlphaRatio => "low-alpha-ratio".into(),
        Rejection::Excluded => "excluded".into(),
    }
}

fn corpus_extract(
    input: &Path,
    out: &Path,
    mode: FilterMode,
    exclude: Option<&Path>,
    cfg: &Config,
) -> anyhow::Result<()> {
    let filter = SentenceFilter::new(cfg.corpus.clone())?;
    let file = corpus::read_sentences(input)?;
    for e in &file.errors {
        eprintln!("warning: {}: {e}; skipped", input.display());
    }
    // each tab-separated field of the exclusion file counts, so a pair
    // file excludes both drafts and references
    let mut excluded = HashSet::new();
    if let Some(path) = exclude {
        for line in corpus::read_lines(path)?.into_iter().flatten() {
            excluded.extend(line.split('\t').filter(|f| !f.trim().is_empty()).map(normalize));
        }
    }
    let mut w = create(out)?;
    let mut dropped: BTreeMap<String, usize> = BTreeMap::new();
    let mut kept = 0usize;
    for s in &file.sentences {
        let verdict = match mode {
            FilterMode::Final => filter.check_final(s),
            FilterMode::Training => filter.check_training(s, &excluded),
        };
        match verdict {
            None => {
                writeln!(w, "{}", s.text())?;
                kept += 1;
            }
            Some(r) => *dropped.entry(rejection_name(r)).or_insert(0) += 1,
        }
    }
    w.flush()?;
    eprintln!("kept {kept} of {} sentences", file.sentences.len());
    for (reason, n) in dropped {
        eprintln!("  dropped {n}: {reason}");
    }
    Ok(())
}

#[derive(Serialize)]
struct SentencePpl {
    line: usize,
    tokens: usize,
    logprob: f64,
    ppl: f64,
}

#[derive(Serialize)]
struct PplReport {
    schema_version: u32,
    sentences: usize,
    mean_ppl: f64,
    /// Perplexity of the file as one event stream.
    corpus_ppl: f64,
    per_sentence: Vec<SentencePpl>,
}

fn lm_ppl(lm_path: &Path, input: &Path, report: &Path) -> anyhow::Result<()> {
    let model = lm::load_arpa(lm_path)?;
    let sentences = aligned_sentences(input)?;
    if sentences.is_empty() {
        bail!("{}: no sentences", input.display());
    }
    let per_sentence: Vec<SentencePpl> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let logprob = model.sentence_logprob(s);
            SentencePpl {
                line: i + 1,
                tokens: s.len(),
                logprob,
                ppl: lm::perplexity_from_logprob(logprob, s.len()),
            }
        })
        .collect();
    let total_lp: f64 = per_sentence.iter().map(|p| p.logprob).sum();
    let events: usize = per_sentence.iter().map(|p| p.tokens + 1).sum();
    let rep = PplReport {
        schema_version: SCHEMA_VERSION,
        sentences: per_sentence.len(),
        mean_ppl: per_sentence.iter().map(|p| p.ppl).sum::<f64>() / per_sentence.len() as f64,
        corpus_ppl: 10f64.powf(-total_lp / events as f64),
        per_sentence,
    };
    write_json(report, &rep)
}

fn noise_run(a: &crate::NoiseRunArgs, cfg: &Config) -> anyhow::Result<()> {
    let sentences = sentences_strict(&a.input)?;
    let min = cfg.noise.replace_vocab_min_count;
    let vocab = match &a.vocab_counts {
        Some(p) => ReplacementVocab::load(p, min)?,
        None => ReplacementVocab::from_corpus(&sentences, min),
    };
    if vocab.is_empty() && cfg.noise.replace_p > 0.0 {
        bail!(
            "no token occurs more than {min} times; pass --vocab-counts with corpus-scale counts, \
             lower --replace-vocab-min-count, or set --replace-p 0"
        );
    }
    let noised = noise_corpus(&sentences, &cfg.noise, &vocab)?;
    let mut w = create(&a.out)?;
    for (pair, _) in &noised {
        writeln!(w, "{}\t{}", pair.draft.text(), pair.reference.text())?;
    }
    w.flush()?;
    if let Some(path) = &a.trace {
        let mut t = create(path)?;
        for (_, trace) in &noised {
            serde_json::to_writer(&mut t, trace)?;
            writeln!(t)?;
        }
        t.flush()?;
    }
    Ok(())
}

fn score_workers_cmd(input: &Path, out: &Path, cfg: &Config) -> anyhow::Result<()> {
    let mut subs = Vec::new();
    for (idx, line) in corpus::read_lines(input)?.into_iter().enumerate() {
        let line = line.map_err(|e| anyhow!("{}: {e}", input.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let sub: WorkerSubmission = serde_json::from_str(&line)
            .map_err(|e| anyhow!("{}: line {}: bad submission: {e}", input.display(), idx + 1))?;
        subs.push(sub);
    }
    let verdicts = score_workers(&subs, Dictionary::english(), &cfg.quality.workers);
    let mut w = create(out)?;
    for v in &verdicts {
        serde_json::to_writer(&mut w, v)?;
        writeln!(w)?;
    }
    w.flush()?;
    let accepted = verdicts.iter().filter(|v| v.accepted).count();
    eprintln!("accepted {accepted} of {} workers", verdicts.len());
    Ok(())
}

fn filter_pairs_cmd(input: &Path, kept: &Path, removed: &Path, cfg: &Config) -> anyhow::Result<()> {
    let pairs = pairs_strict(input)?;
    let stopwords = match &cfg.quality.stopwords {
        Some(p) => Stopwords::load(p)?,
        None => Stopwords::english().clone(),
    };
    let fc = FilterConfig {
        alpha: cfg.quality.alpha,
        stopwords,
        ..FilterConfig::default()
    };
    let outcome = filter_pairs(pairs, &fc, Dictionary::english())?;
    let mut w = create(kept)?;
    corpus::write_pairs_tsv(&mut w, &outcome.kept)?;
    w.flush()?;
    let mut w = create(removed)?;
    for (p, reason) in &outcome.removed {
        writeln!(w, "{}\t{}\t{reason}", p.draft.text(), p.reference.text())?;
    }
    w.flush()?;
    eprintln!("kept {}, removed {}", outcome.kept.len(), outcome.removed.len());
    Ok(())
}

fn eval_run(a: &crate::EvalRunArgs, cfg: &Config) -> anyhow::Result<()> {
    let src = aligned_sentences(&a.src)?;
    let hyp = aligned_sentences(&a.hyp)?;
    let refs = aligned_sentences(&a.reference)?;
    if src.len() != hyp.len() || hyp.len() != refs.len() {
        bail!(
            "line counts differ: src {}, hyp {}, ref {}",
            src.len(),
            hyp.len(),
            refs.len()
        );
    }
    let model = load_lm(a.lm.as_deref())?;
    let ctx = EvalContext {
        dictionary: Dictionary::english(),
        stopwords: Stopwords::english(),
        lm: model.as_ref(),
    };
    let report = evaluate(&src, &hyp, &refs, &cfg.eval, &ctx)?;
    write_json(&a.report, &report)
}

#[derive(Serialize)]
struct EditTypeReport {
    total: usize,
    counts: BTreeMap<EditType, usize>,
    fractions: BTreeMap<EditType, f64>,
}

#[derive(Serialize)]
struct StatsReport {
    schema_version: u32,
    dataset: DatasetStats,
    profile: LinguisticProfile,
    edit_types: EditTypeReport,
}

fn stats_dataset(input: &Path, lm_path: Option<&Path>, report: &Path, cfg: &Config) -> anyhow::Result<()> {
    let pairs = pairs_strict(input)?;
    let model = load_lm(lm_path)?;
    let dataset = dataset_stats(&pairs)?;
    let profile = linguistic_profile(
        &pairs,
        &ProfileOptions {
            lm: model.as_ref(),
            stopwords: Stopwords::english(),
            repetition_window: cfg.analysis.repetition_window,
        },
    )?;
    let dist = edit_type_distribution(&pairs, Dictionary::english());
    let rep = StatsReport {
        schema_version: SCHEMA_VERSION,
        dataset,
        profile,
        edit_types: EditTypeReport {
            total: dist.total(),
            fractions: dist.fractions(),
            counts: dist.counts,
        },
    };
    write_json(report, &rep)
}
