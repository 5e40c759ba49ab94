use std::io::Write;

use draftkit::corpus::{load_pairs, read_sentences, write_pairs_tsv, PairFormat};
use draftkit::lexicon::{Dictionary, Stopwords};
use draftkit::lm::{load_arpa, save_arpa, train, LmConfig};
use draftkit::metrics::{evaluate, EvalConfig, EvalContext};
use draftkit::noising::{noise_corpus, NoiseConfig, ReplacementVocab};
use draftkit::{Error, Sentence};

fn write(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::File::create(&p).unwrap().write_all(bytes).unwrap();
    p
}

fn corpus() -> Vec<Sentence> {
    let subjects = ["We", "The model", "Our parser", "This method", "The system"];
    let verbs = ["improves", "reduces", "predicts", "uses", "learns"];
    let objects = ["the accuracy", "long sentences", "the error rate", "a large corpus", "new features"];
    let mut out = Vec::new();
    for (i, s) in subjects.iter().enumerate() {
        for (j, v) in verbs.iter().enumerate() {
            for o in objects.iter().skip((i + j) % 3) {
                out.push(Sentence::new(format!("{s} {v} {o} in this work .")));
            }
        }
    }
    out
}

#[test]
fn pair_files_report_bad_records_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = write(&dir, "p.tsv", b"a <*> b\tA and B\nonly one field\nx\ty\tz\nc\tC <*>\nd\tD\n");
    let f = load_pairs(&tsv, PairFormat::Tsv).unwrap();
    assert_eq!(f.pairs.len(), 2);
    assert!(f.pairs[0].has_mask);
    let lines: Vec<usize> = f.errors.iter().map(|e| e.line).collect();
    assert_eq!(lines, vec![2, 3, 4]);

    let jsonl = write(
        &dir,
        "p.jsonl",
        b"{\"draft\": \"a b\", \"reference\": \"A B .\"}\n\n{\"draft\": 3}\n",
    );
    let f = load_pairs(&jsonl, PairFormat::from_path(&jsonl)).unwrap();
    assert_eq!(f.pairs.len(), 1);
    assert_eq!(f.errors[0].line, 3);

    let empty = write(&dir, "e.tsv", b"");
    assert!(load_pairs(&empty, PairFormat::Tsv).unwrap().pairs.is_empty());
    assert!(matches!(
        load_pairs(&dir.path().join("missing.tsv"), PairFormat::Tsv),
        Err(Error::Io { .. })
    ));
}

#[test]
fn pair_tsv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = write(&dir, "p.tsv", b"a <*> b\tA and B\nc d\tC D .\n");
    let pairs = load_pairs(&tsv, PairFormat::Tsv).unwrap().pairs;
    let mut buf = Vec::new();
    write_pairs_tsv(&mut buf, &pairs).unwrap();
    assert_eq!(buf, std::fs::read(&tsv).unwrap());
}

#[test]
fn non_utf8_lines_are_record_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "s.txt", b"good line\n\xff\xfe bad\n\nanother\n");
    let f = read_sentences(&p).unwrap();
    assert_eq!(f.sentences.len(), 2);
    assert_eq!(f.lines, vec![1, 4]);
    assert_eq!(f.errors[0].line, 2);
}

#[test]
fn trained_model_survives_arpa_round_trip() {
    let sentences = corpus();
    let model = train(&sentences, &LmConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.arpa");
    save_arpa(&model, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let loaded = load_arpa(&path).unwrap();
    let probes = [
        Sentence::new("We improves the accuracy in this work ."),
        Sentence::new("unseen words everywhere"),
        Sentence::new(""),
    ];
    for s in sentences.iter().chain(&probes) {
        assert!((model.sentence_logprob(s) - loaded.sentence_logprob(s)).abs() < 1e-9);
    }
    save_arpa(&loaded, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
    // training twice gives the same bytes
    let again = train(&sentences, &LmConfig::default()).unwrap();
    save_arpa(&again, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn parallel_results_do_not_depend_on_thread_count() {
    let sentences = corpus();
    let vocab = ReplacementVocab::from_corpus(&sentences, 10);
    let cfg = NoiseConfig::default();
    let one = in_pool(1, || noise_corpus(&sentences, &cfg, &vocab).unwrap());
    let many = in_pool(8, || noise_corpus(&sentences, &cfg, &vocab).unwrap());
    assert_eq!(one, many);

    let drafts: Vec<Sentence> = one.iter().map(|(p, _)| p.draft.clone()).collect();
    let ctx = EvalContext {
        dictionary: Dictionary::english(),
        stopwords: Stopwords::english(),
        lm: None,
    };
    let eval = |n| in_pool(n, || evaluate(&drafts, &drafts, &sentences, &EvalConfig::default(), &ctx).unwrap());
    let (a, b) = (eval(1), eval(8));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
