mod common;

use common::{fixture_dir, small_config, FixtureSize};
use dvngram::config::{Mode, Precision};
use dvngram::formats::checkpoint::{read_checkpoint, read_header, DOC_VECTORS_FILE, HEADER_FILE};
use dvngram::formats::vectors::read_vectors;
use dvngram::ingest::Split;
use dvngram::pipeline::{
    cmd_evaluate, cmd_ingest, cmd_train, load_corpus, mean, run_dir, run_experiment, MetricsReport,
};
use dvngram::Error;
use dvngram_core::corpus::Label;

#[test]
fn ingest_eight_file_fixture() {
    let size = FixtureSize {
        train_per_class: 2,
        test_per_class: 1,
        unlabeled: 2,
        words: 5,
    };
    let (dir, _) = fixture_dir(size, 1);
    let config = small_config(dir.path());
    let m = cmd_ingest(&config).unwrap();
    assert_eq!(m.entries.len(), 8);
    let labels: Vec<_> = m.entries.iter().map(|e| (e.split, e.label)).collect();
    assert_eq!(
        labels,
        [
            (Split::Train, Some(Label::Positive)),
            (Split::Train, Some(Label::Positive)),
            (Split::Train, Some(Label::Negative)),
            (Split::Train, Some(Label::Negative)),
            (Split::Test, Some(Label::Positive)),
            (Split::Test, Some(Label::Negative)),
            (Split::Unsup, None),
            (Split::Unsup, None),
        ]
    );
    assert!(config.output_dir.join("manifest.tsv").exists());
}

#[test]
fn empty_dataset_dir_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path());
    std::fs::create_dir_all(&config.dataset_path).unwrap();
    let err = cmd_ingest(&config).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    config.dataset_path = dir.path().join("nowhere");
    assert_eq!(cmd_ingest(&config).unwrap_err().exit_code(), 2);
}

#[test]
fn toy_four_document_corpus_gives_four_vectors() {
    let size = FixtureSize {
        train_per_class: 1,
        test_per_class: 1,
        unlabeled: 0,
        words: 12,
    };
    let (dir, _) = fixture_dir(size, 2);
    let mut config = small_config(dir.path());
    config.runs = 1;
    config.train.epochs = 2;
    let out = cmd_train(&config).unwrap();
    assert_eq!(out.num_docs, 4);
    assert_eq!(out.reports[0].len(), 2);
    let (names, m) = read_vectors::<f32>(&run_dir(&config, 0).join(DOC_VECTORS_FILE)).unwrap();
    assert_eq!((m.rows(), m.cols()), (4, config.train.dim));
    assert_eq!(names, ["doc_0", "doc_1", "doc_2", "doc_3"]);
    let text = std::fs::read_to_string(run_dir(&config, 0).join(DOC_VECTORS_FILE)).unwrap();
    assert_eq!(text.lines().next(), Some("4 12"));
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(' ').count() == 1 + config.train.dim));
}

#[test]
fn unlabeled_toggle_changes_document_count() {
    let size = FixtureSize::default();
    let (dir, _) = fixture_dir(size, 3);
    let mut config = small_config(dir.path());
    config.runs = 1;
    config.train.epochs = 1;
    let without = cmd_train(&config).unwrap().num_docs;
    config.use_unlabeled = true;
    let with = cmd_train(&config).unwrap().num_docs;
    assert_eq!(with - without, size.unlabeled);
    assert_eq!(
        load_corpus(&config).unwrap().count(Split::Unsup),
        size.unlabeled
    );
}

#[test]
fn rerun_reproduces_vector_files_byte_for_byte() {
    for precision in [Precision::F32, Precision::F64] {
        let (dir, _) = fixture_dir(FixtureSize::default(), 4);
        let mut config = small_config(dir.path());
        config.precision = precision;
        cmd_train(&config).unwrap();
        let first: Vec<Vec<u8>> = (0..config.runs)
            .map(|r| std::fs::read(run_dir(&config, r).join(DOC_VECTORS_FILE)).unwrap())
            .collect();
        std::fs::remove_dir_all(&config.output_dir).unwrap();
        cmd_train(&config).unwrap();
        for (r, bytes) in first.iter().enumerate() {
            assert_eq!(
                &std::fs::read(run_dir(&config, r).join(DOC_VECTORS_FILE)).unwrap(),
                bytes
            );
        }
        assert_ne!(first[0], first[1], "runs use different seeds");
    }
}

#[test]
fn bag_of_ngrams_separates_toy_corpus() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 5);
    let mut config = small_config(dir.path());
    config.mode = Mode::Bo;
    let report = cmd_evaluate(&config).unwrap();
    assert_eq!(report.accuracies, [1.0, 1.0]);
    assert_eq!(report.mean_accuracy, 1.0);
}

#[test]
fn single_run_mean_is_that_run() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 6);
    let mut config = small_config(dir.path());
    config.mode = Mode::Bo;
    config.runs = 1;
    config.classifier.c_grid = vec![0.05];
    let report = cmd_evaluate(&config).unwrap();
    assert_eq!(report.accuracies.len(), 1);
    assert_eq!(report.mean_accuracy, report.accuracies[0]);
    assert_eq!(report.selected_c, [0.05]);
}

#[test]
fn report_echoes_config_and_averages_runs() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 7);
    let mut config = small_config(dir.path());
    config.runs = 3;
    let report = run_experiment(&config).unwrap();
    assert!((report.mean_accuracy - mean(&report.accuracies)).abs() <= 1e-12);
    assert!(
        report.mean_accuracy >= 0.8,
        "dv accuracy {}",
        report.mean_accuracy
    );
    let json = config
        .output_dir
        .join(format!("{}.json", report.file_stem()));
    let back = MetricsReport::read(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.config, config);
    assert_eq!(back.config_hash, config.hash());
    let text = std::fs::read_to_string(json.with_extension("txt")).unwrap();
    assert!(text.contains(&format!("config_hash = {}", config.hash())));
}

#[test]
fn combined_mode_uses_both_feature_blocks() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 8);
    let mut config = small_config(dir.path());
    config.mode = Mode::DvNbbo;
    config.classifier.bag_order = 2;
    let report = run_experiment(&config).unwrap();
    assert!(report.feature_dim > config.train.dim);
    assert!(report.mean_accuracy >= 0.9);
}

#[test]
fn evaluation_requires_matching_vectors() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 9);
    let mut config = small_config(dir.path());
    let err = cmd_evaluate(&config).unwrap_err();
    assert!(
        matches!(err, Error::Data(_)) && err.to_string().contains("train"),
        "{err}"
    );
    cmd_train(&config).unwrap();
    config.train.epochs += 1;
    let err = cmd_evaluate(&config).unwrap_err();
    assert!(err.to_string().contains("different configuration"), "{err}");
}

#[test]
fn checkpoints_hold_the_final_epoch() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 10);
    let mut config = small_config(dir.path());
    config.runs = 1;
    config.precision = Precision::F64;
    cmd_train(&config).unwrap();
    let run = run_dir(&config, 0);
    let header = read_header(&run.join(HEADER_FILE)).unwrap();
    assert_eq!(header.epoch, config.train.epochs);
    assert_eq!(header.config_hash, config.embedding_hash());
    let (ck_header, ck_model) = read_checkpoint::<f64>(&run.join("checkpoint")).unwrap();
    let (_, final_model) = read_checkpoint::<f64>(&run).unwrap();
    assert_eq!(ck_header, header);
    assert_eq!(ck_model, final_model);
}

#[test]
fn parallel_training_stays_finite() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 11);
    let mut config = small_config(dir.path());
    config.workers = 4;
    config.runs = 1;
    let report = run_experiment(&config).unwrap();
    assert!(report.mean_accuracy >= 0.8);
}

#[test]
fn exploding_learning_rate_is_a_numeric_failure() {
    let (dir, _) = fixture_dir(FixtureSize::default(), 12);
    let mut config = small_config(dir.path());
    config.runs = 1;
    config.train.learning_rate = 1e250;
    config.train.dim = 4;
    let err = cmd_train(&config).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}
