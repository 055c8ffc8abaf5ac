use std::collections::BTreeMap;

use colenc::analogy::EncodingTable;
use colenc::corpus::{encode_tokens, generate_synthetic, ColumnId, DrugRecord, Preprocessor, SyntheticSpec};
use colenc::model::{
    batch_loss, encode_sequence, export_encodings, gradients, grid_search, prepare_column, train, EncoderConfig,
    EncoderModel, GridPoint, PairExample, ParamGroup,
};
use colenc::partition::{stratified_split, PartitionSet};
use colenc::seeds;
use rand::Rng;

struct Fixture {
    drugs: Vec<DrugRecord>,
    partition: PartitionSet,
    column: ColumnId,
}

/// 32 drugs, complete ordered graph: 992 labelled pairs over 8 labels.
fn planted() -> Fixture {
    let spec = SyntheticSpec {
        num_drugs: 32,
        num_labels: 8,
        seed: 7,
        ..Default::default()
    };
    let corpus = generate_synthetic(&spec).unwrap();
    let partition = stratified_split(&corpus.triples, [0.8, 0.1, 0.1], 9).unwrap();
    Fixture {
        drugs: corpus.drugs,
        partition,
        column: spec.rule_column,
    }
}

fn small_config(vocab_size: usize, epochs: usize, lr: f64) -> EncoderConfig {
    EncoderConfig {
        embed_dim: 8,
        hidden: 8,
        layers: 1,
        max_len: 6,
        vocab_size,
        num_labels: 8,
        learning_rate: lr,
        batch_size: 32,
        epochs,
        seed: 3,
    }
}

#[test]
fn planted_rule_learned_within_30_epochs() {
    let f = planted();
    let (vocab, data) = prepare_column(&f.drugs, f.column, &f.partition.fitting_drugs(), 1, 6, &Preprocessor::default());
    let cfg = small_config(vocab.len(), 30, 1e-2);
    let (_, history) = train(&cfg, &data, &f.partition).unwrap();
    assert!(history.best_val_accuracy() >= 0.95, "{:?}", history.epochs.last());
    let recs = &history.epochs;
    assert_eq!(recs.len(), 30);
    for w in recs.windows(2) {
        assert!(w[1].best_val_accuracy >= w[0].best_val_accuracy);
    }
    let best = &recs[history.best_epoch - 1];
    assert_eq!(best.val_accuracy, history.best_val_accuracy());
    assert!(recs[..history.best_epoch - 1].iter().all(|r| r.val_accuracy < best.val_accuracy));
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let f = planted();
    let (vocab, data) = prepare_column(&f.drugs, f.column, &f.partition.fitting_drugs(), 1, 6, &Preprocessor::default());
    let cfg = small_config(vocab.len(), 2, 0.0);
    let (model, _) = train(&cfg, &data, &f.partition).unwrap();
    let init = EncoderModel::init(cfg.clone(), &mut seeds::rng(cfg.seed)).unwrap();
    assert_eq!(model, init);
}

#[test]
fn same_seed_is_bit_identical() {
    let f = planted();
    let (vocab, data) = prepare_column(&f.drugs, f.column, &f.partition.fitting_drugs(), 1, 6, &Preprocessor::default());
    let cfg = small_config(vocab.len(), 3, 1e-2);
    let (a, ha) = train(&cfg, &data, &f.partition).unwrap();
    let (b, hb) = train(&cfg, &data, &f.partition).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    assert_eq!(ha.to_tsv(), hb.to_tsv());
    let other = EncoderConfig { seed: 4, ..cfg };
    let (c, _) = train(&other, &data, &f.partition).unwrap();
    assert_ne!(a.to_bytes(), c.to_bytes());
}

#[test]
fn finite_differences_per_group() {
    let cfg = EncoderConfig {
        embed_dim: 2,
        hidden: 3,
        layers: 2,
        max_len: 4,
        vocab_size: 6,
        num_labels: 3,
        seed: 77,
        ..Default::default()
    };
    let mut model = EncoderModel::seeded(cfg).unwrap();
    let mut rng = seeds::rng(78);
    let seqs: Vec<Vec<usize>> = (0..6).map(|_| (0..4).map(|_| rng.gen_range(0..6)).collect()).collect();
    let batch: Vec<PairExample> = (0..5)
        .map(|i| PairExample {
            left: &seqs[i],
            right: &seqs[i + 1],
            label: i % 3,
        })
        .collect();
    let (_, g) = gradients(&model, &batch).unwrap();
    let layout = model.layout().clone();
    let mut groups = 0;
    for (group, range, _) in layout.groups() {
        groups += 1;
        for i in range {
            let orig = model.params()[i];
            model.params_mut()[i] = orig + 1e-5;
            let up = batch_loss(&model, &batch).unwrap();
            model.params_mut()[i] = orig - 1e-5;
            let down = batch_loss(&model, &batch).unwrap();
            model.params_mut()[i] = orig;
            let fd = (up - down) / 2e-5;
            let a = g.values()[i];
            assert!((a - fd).abs() <= 1e-7 + 1e-5 * a.abs().max(fd.abs()), "{group:?}[{i}]: {a} vs {fd}");
        }
    }
    // Embedding, 2 layers x 2 directions x 4 tensors, head weight and bias.
    assert_eq!(groups, 1 + 16 + 2);
    assert_eq!(g.group(ParamGroup::HeadBias).len(), 3);
}

#[test]
fn grid_search_rules() {
    let f = planted();
    let base = small_config(0, 15, 1e-2);
    let pre = Preprocessor::default();
    let single = vec![GridPoint {
        embed_dim: 4,
        hidden: 4,
        layers: 1,
        max_len: 6,
        min_count: 1,
        learning_rate: 1e-2,
    }];
    let r = grid_search(&single, &base, &f.drugs, f.column, &f.partition, &pre).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.best, 0);
    assert_eq!(r.best_config.embed_dim, 4);

    let points = GridPoint::product(&[8], &[8], &[1], &[6], &[1], &[0.0, 1e-2]);
    let r = grid_search(&points, &base, &f.drugs, f.column, &f.partition, &pre).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.best, 1, "{:?}", r.rows);
    assert!(r.rows[1].val_accuracy > r.rows[0].val_accuracy);
    assert_eq!(r.to_tsv().lines().count(), 3);

    // Equal accuracy: the smaller model wins, then the earlier point.
    let frozen = GridPoint::product(&[4, 2], &[3], &[1], &[6], &[1], &[0.0]);
    let r = grid_search(&frozen, &base, &f.drugs, f.column, &f.partition, &pre).unwrap();
    if r.rows[0].val_accuracy == r.rows[1].val_accuracy {
        assert_eq!(r.best_config.embed_dim, 2);
    }
    assert!(grid_search(&[], &base, &f.drugs, f.column, &f.partition, &pre).is_err());
}

#[test]
fn export_matches_fresh_encoding() {
    let mut drugs = planted().drugs;
    let twin = drugs[0].clone();
    drugs.push(DrugRecord {
        drug_id: "ZZTWIN".into(),
        ..twin
    });
    let column = ColumnId::Description;
    let pre = Preprocessor::default();
    let fitting = drugs.iter().map(|d| d.drug_id.as_str()).collect();
    let (vocab, _) = prepare_column(&drugs, column, &fitting, 1, 6, &pre);
    let model = EncoderModel::seeded(small_config(vocab.len(), 1, 1e-3)).unwrap();
    let table = export_encodings(&model, &drugs, column, &vocab, 6, &pre).unwrap();
    assert_eq!(table.len(), drugs.len());
    assert_eq!(table.dim(), 16);
    assert_eq!(table.get("ZZTWIN"), table.get(&drugs[0].drug_id));
    let reloaded = EncodingTable::parse(&table.to_text()).unwrap();
    for d in &drugs {
        let seq = pre.process(d.column(column), column).sequence;
        let fresh = encode_sequence(&model, &encode_tokens(&seq, &vocab, 6)).unwrap();
        assert_eq!(reloaded.get(&d.drug_id).unwrap(), fresh.as_slice());
    }
    let mut by_id: BTreeMap<&str, &[f64]> = BTreeMap::new();
    for (id, v) in table.iter() {
        by_id.insert(id, v);
    }
    assert_eq!(by_id.len(), drugs.len());
}

#[test]
fn checkpoint_file_round_trip() {
    let model = EncoderModel::seeded(small_config(20, 1, 1e-3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.ckpt");
    model.save(&p).unwrap();
    assert_eq!(EncoderModel::load(&p).unwrap(), model);
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(bytes.len(), 8 + 4 + 10 * 8 + 8 + model.param_count() * 8 + 32);
}
