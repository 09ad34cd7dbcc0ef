use std::path::PathBuf;

use lipp::workload::{generate, AnyDataset, Dataset, Provenance};
use lipp::{Error, KeyType};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn golden_u64_file() {
    let d = Dataset::<u64>::load(data("golden_u64.bin")).unwrap();
    assert_eq!(d.keys, vec![1, 1000, (1u64 << 63) + 5]);
    assert_eq!(d.provenance, Provenance::File);
    assert_eq!(d.to_bytes(), std::fs::read(data("golden_u64.bin")).unwrap());
}

#[test]
fn golden_f64_file() {
    let bytes = std::fs::read(data("golden_f64.bin")).unwrap();
    assert_eq!(&bytes[..9], b"LIDXKEY1\x01");
    match AnyDataset::load(data("golden_f64.bin")).unwrap() {
        AnyDataset::F64(d) => {
            assert_eq!(d.keys, vec![-2.5, 0.0, 1e10]);
            assert_eq!(d.to_bytes(), bytes);
        }
        other => panic!("wrong key type {:?}", other.key_type()),
    }
    assert!(matches!(Dataset::<u64>::load(data("golden_f64.bin")), Err(Error::Format(_))));
}

#[test]
fn generated_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for p in Provenance::GENERATED {
        let d = generate(p, 5000, 9).unwrap();
        assert_eq!(d.len(), 5000, "{p}");
        assert!(d.keys.windows(2).all(|w| w[0] < w[1]), "{p}");
        let path = dir.path().join(format!("{p}.bin"));
        d.save(&path).unwrap();
        let back = AnyDataset::load(&path).unwrap();
        assert_eq!(back.key_type(), KeyType::U64);
        assert_eq!(std::fs::read(&path).unwrap(), d.to_bytes());
    }
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.bin");
    let bytes = std::fs::read(data("golden_u64.bin")).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(AnyDataset::load(&path), Err(Error::Format(_))));
}
