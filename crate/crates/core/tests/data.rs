//! Dataset files, splits and the generator, exercised through the public API.

use affect_core::data::{
    generate_var, load_dataset, parse_split_file, random_adjacency, save_dataset, split_samples,
    write_split_file, AlignPolicy, LabelKind, SplitName, SyntheticLabels, SyntheticSpec,
    VarProcess,
};

fn spec(kind: LabelKind, channels: usize, seed: u64) -> SyntheticSpec {
    let mut spec = SyntheticSpec::new(3, 2, 25, random_adjacency(3, 0.4, seed, false));
    spec.seed = seed;
    spec.labels = SyntheticLabels {
        kind,
        channels,
        ..Default::default()
    };
    spec
}

#[test]
fn dataset_directory_round_trips() {
    for (kind, channels) in [
        (LabelKind::Continuous, 1),
        (LabelKind::Continuous, 2),
        (LabelKind::Categorical, 1),
    ] {
        let spec = spec(kind, channels, 5);
        let process = VarProcess::from_spec(&spec).unwrap();
        let samples: Vec<_> = (0..4)
            .map(|i| process.sample(&spec, &format!("s{i}"), i).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &samples).unwrap();
        let loaded = load_dataset(dir.path(), AlignPolicy::Strict).unwrap();
        assert_eq!(loaded.len(), samples.len());
        for (a, b) in samples.iter().zip(&loaded) {
            assert_eq!(a.sample_id, b.sample_id);
            assert_eq!(a.labels, b.labels);
            for (x, y) in a.streams.iter().zip(&b.streams) {
                assert_eq!(x.values(), y.values());
            }
        }
    }
}

#[test]
fn splits_partition_and_round_trip() {
    let ids: Vec<String> = (0..20).map(|i| format!("s{i:02}")).collect();
    let splits = split_samples(&ids, [0.7, 0.15, 0.15], 3).unwrap();
    let mut all: Vec<String> = [SplitName::Train, SplitName::Val, SplitName::Test]
        .iter()
        .flat_map(|s| splits.get(*s).to_vec())
        .collect();
    all.sort();
    assert_eq!(all, ids);
    let parsed = parse_split_file(&write_split_file(&splits)).unwrap();
    assert_eq!(parsed, splits);
}

#[test]
fn generator_is_seeded_and_reports_its_graph() {
    let spec = spec(LabelKind::Continuous, 1, 8);
    let (a, truth) = generate_var(&spec).unwrap();
    let (b, _) = generate_var(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(truth.adjacency, spec.adjacency);
    let mut other = spec.clone();
    other.seed += 1;
    assert_ne!(generate_var(&other).unwrap().0, a);
}
