use ban_core::attention::{AttentionMode, AttentionStack};
use ban_core::corpus::{AlignedPair, EmbeddingTable, Vocab};
use ban_core::numerics::seeded_rng;
use ban_core::source_model::{train_charlm, train_source_model, CharLmConfig, FrozenNerModel};
use ban_core::synthetic::{generate, SyntheticConfig};
use ban_core::training::ExperimentConfig;
use ban_core::transfer::{ban_embedding_records, transfer_for_sentence};
use ban_core::Matrix;

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn small_source() -> FrozenNerModel {
    let cfg = SyntheticConfig {
        source_sentences: 40,
        charlm_lines: 30,
        train: 2,
        dev: 2,
        test: 2,
        ..SyntheticConfig::default()
    };
    let world = generate(&cfg).unwrap();
    let lm_cfg = CharLmConfig {
        hidden: 6,
        epochs: 1,
        ..CharLmConfig::default()
    };
    let (lm, _) = train_charlm(&world.charlm_text, &lm_cfg).unwrap();
    let vocab = Vocab::from_tokens(world.source_words());
    let table = EmbeddingTable::from_entries(vocab, cfg.static_dim, world.static_entries.clone(), &mut seeded_rng(1)).unwrap();
    let exp = ExperimentConfig {
        epochs: 2,
        hidden: 5,
        ..ExperimentConfig::default()
    };
    train_source_model(&world.source_corpus, lm, table, &exp, 1).unwrap().0.freeze()
}

#[test]
fn identity_alignment_exports_source_states() {
    let source = small_source();
    let sentence = tokens("yesterday someone spoke about it");
    let n = sentence.len();
    let stack = AttentionStack::new(vec![Matrix::identity(n), Matrix::identity(n)]).unwrap();
    let pair = AlignedPair::new(sentence.clone(), sentence.clone(), stack).unwrap();
    for mode in [AttentionMode::First, AttentionMode::Average, AttentionMode::Layer(2)] {
        let t = transfer_for_sentence(&pair, mode, true, &source).unwrap();
        let records = ban_embedding_records(&pair, &t).unwrap();
        let r = source.english_hidden_states(&sentence).unwrap();
        assert_eq!(records.len(), n);
        for (i, (word, v)) in records.iter().enumerate() {
            assert_eq!(word, &sentence[i]);
            assert_eq!(v.len(), source.state_dim());
            assert_eq!(v.as_slice(), r.row(i));
        }
    }
}

#[test]
fn transfer_has_one_row_per_low_resource_token() {
    let source = small_source();
    let low = tokens("na ko zi mu");
    let high = tokens("the report mentions");
    let mut layer = Matrix::zeros(high.len(), low.len());
    layer.as_mut_slice().fill(0.25);
    let pair = AlignedPair::new(low.clone(), high.clone(), AttentionStack::new(vec![layer]).unwrap()).unwrap();
    let t = transfer_for_sentence(&pair, AttentionMode::Last, true, &source).unwrap();
    assert_eq!(t.matrix.shape(), (low.len(), source.state_dim()));
    // Every low-resource token attends uniformly, so all rows equal the mean state.
    let r = source.english_hidden_states(&high).unwrap();
    for j in 0..low.len() {
        for c in 0..r.cols() {
            let mean = (0..high.len()).map(|i| r.get(i, c)).sum::<f64>() / high.len() as f64;
            assert!((t.matrix.get(j, c) - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn repeated_word_gets_context_dependent_vectors() {
    let text: Vec<String> = [
        "the river bank was quiet",
        "she went to the bank today",
        "a bank of fog rolled in",
        "the old bank closed early",
    ]
    .iter()
    .cycle()
    .take(60)
    .map(|s| s.to_string())
    .collect();
    assert!(text.iter().map(String::len).sum::<usize>() >= 1000);
    let cfg = CharLmConfig {
        hidden: 8,
        epochs: 2,
        ..CharLmConfig::default()
    };
    let (lm, _) = train_charlm(&text, &cfg).unwrap();
    let a = lm.embed(&tokens("the river bank was quiet")).unwrap();
    let b = lm.embed(&tokens("a bank of fog rolled in")).unwrap();
    assert_eq!(a.cols(), 2 * cfg.hidden);
    assert_ne!(a.row(2), b.row(1));
}
