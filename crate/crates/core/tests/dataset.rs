use std::fs;
use std::path::Path;

use roomscope_core::dataset::{
    generate_dataset, read_shard, CorrectionPolicy, DatasetManifest, DatasetReader, DatasetSubset, GenerateOptions,
    Variant,
};
use roomscope_core::FrequencyGrid;

fn smoke(policy: CorrectionPolicy) -> GenerateOptions {
    GenerateOptions {
        policy,
        subset: DatasetSubset {
            rooms: Some(vec![1]),
            configs: Some(vec![0, 1]),
            sources: Some(vec![0, 1]),
            receivers: Some(vec![0, 1]),
        },
        ..GenerateOptions::default()
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn shard_bytes(dir: &Path, m: &DatasetManifest) -> Vec<Vec<u8>> {
    m.shards.iter().map(|s| fs::read(dir.join(&s.file)).unwrap()).collect()
}

#[test]
fn smoke_subset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&smoke(CorrectionPolicy::Both), dir.path()).unwrap();
    assert_eq!(m.counts.total, 16);
    assert_eq!(m.shards.len(), 2);
    assert_eq!(m.shards[0].file, "shards/room1_cfg0.bin");

    let split = m.split.as_ref().unwrap();
    assert_eq!((split.train.len(), split.test.len()), (12, 4));

    let reader = DatasetReader::open(dir.path()).unwrap();
    assert_eq!(reader.manifest(), &m);
    let all: Vec<_> = reader.iter().collect::<Result<_, _>>().unwrap();
    assert_eq!(all.len(), 16);
    for (i, rec) in all.iter().enumerate() {
        assert_eq!(&reader.record(i).unwrap(), rec);
        assert_eq!(rec.tf.len(), 707);
        assert!((rec.tf.values()[0].norm() - 1.0).abs() < 1e-6);
        assert_eq!(rec.y_d, [3.0, 4.5, 2.7]);
    }
    // record order: config, source, receiver, variant
    let r = &all[8 + 2 * 2 + 2 + 1];
    assert_eq!(
        (r.config_id, r.source_id, r.receiver_id, r.variant),
        (1, 1, 1, Variant::Corrected)
    );
    // config 1 has material A on surface 1, concrete elsewhere
    assert!(r.y_a[0] > 0.05 && r.y_a[0] < r.y_a[1] && r.y_a[1] < r.y_a[2]);
    assert_eq!(&r.y_a[3..6], &[0.029, 0.048, 0.043]);
    assert_eq!(all[0].y_a[..3], [0.029, 0.048, 0.043]);
    // positions are shared across configs
    assert_eq!(all[0].source_pos, all[8].source_pos);
    assert_ne!(all[0].tf, all[1].tf);
}

#[test]
fn regeneration_is_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let opts = smoke(CorrectionPolicy::Simu);
    let ma = in_pool(1, || generate_dataset(&opts, a.path()).unwrap());
    let mb = in_pool(4, || generate_dataset(&opts, b.path()).unwrap());
    assert_eq!(ma, mb);
    assert_eq!(shard_bytes(a.path(), &ma), shard_bytes(b.path(), &mb));
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(b.path().join("manifest.json")).unwrap()
    );
}

#[test]
fn seed_changes_positions() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut opts = smoke(CorrectionPolicy::Simu);
    let ma = generate_dataset(&opts, a.path()).unwrap();
    opts.plan.seed = 9;
    let mb = generate_dataset(&opts, b.path()).unwrap();
    assert_ne!(ma.shards[0].crc32, mb.shards[0].crc32);
}

#[test]
fn resume_keeps_complete_shards_and_corruption_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let mut opts = smoke(CorrectionPolicy::Aug);
    let first = generate_dataset(&opts, dir.path()).unwrap();

    // an interrupted run leaves a partial temp file and no second shard
    let second = dir.path().join(&first.shards[1].file);
    fs::remove_file(&second).unwrap();
    fs::write(second.with_extension("bin.partial"), b"junk").unwrap();
    fs::remove_file(dir.path().join("manifest.json")).unwrap();
    opts.resume = true;
    let again = generate_dataset(&opts, dir.path()).unwrap();
    assert_eq!(again, first);

    let path = dir.path().join(&first.shards[0].file);
    let mut bytes = fs::read(&path).unwrap();
    bytes[100] ^= 1;
    fs::write(&path, bytes).unwrap();
    let grid = FrequencyGrid::dataset();
    let err = read_shard(&path, &grid, Some(first.shards[0].crc32)).unwrap_err();
    assert!(err.to_string().contains("CRC32"), "{err}");
    assert!(DatasetReader::open(dir.path()).unwrap().shard(0).is_err());
}

#[test]
fn truncated_shard_is_rejected_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_dataset(&smoke(CorrectionPolicy::Simu), dir.path()).unwrap();
    let path = dir.path().join(&m.shards[1].file);
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
    assert!(DatasetReader::open(dir.path()).is_err());
}
