//! Builds a small feature set by hand, writes it as an FSET1 container and
//! as CSV, and reads both back.
//!
//! ```text
//! cargo run --example container_io
//! ```

use ncdd::featureset::{export_csv, import_csv, load_fset, save_fset, FeatureSet};

fn main() -> ncdd::Result<()> {
    let rows = vec![
        vec![0.9, 0.1, 0.0],
        vec![1.1, -0.2, 0.1],
        vec![0.0, 1.0, 0.2],
        vec![-0.1, 0.8, 0.0],
    ];
    let set = FeatureSet::from_rows(2, &rows)?
        .with_labels(vec![0, 0, 1, 1])?
        .with_logits(vec![2.0, -1.0, 1.5, -0.5, -1.0, 2.2, -0.7, 1.9])?
        .with_class_names(vec!["cat".into(), "dog".into()])?
        .with_source_tag("hand-made");

    let dir = std::env::temp_dir().join(format!("ncdd-container-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| ncdd::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let fset = dir.join("tiny.fset");
    save_fset(&set, &fset)?;
    let back = load_fset(&fset)?;
    assert_eq!(back, set);

    // the header is plain JSON after the magic and a little-endian length
    let bytes = std::fs::read(&fset).expect("just written");
    let header_len = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    println!("{} bytes on disk, header:", bytes.len());
    println!("{}", String::from_utf8_lossy(&bytes[9..9 + header_len]));

    let csv = dir.join("tiny.csv");
    export_csv(&set, &csv)?;
    println!("\n{}", std::fs::read_to_string(&csv).expect("just written"));
    let from_csv = import_csv(&csv, set.n_classes())?;
    assert_eq!(from_csv.features(), set.features());
    assert_eq!(from_csv.labels(), set.labels());

    let mut damaged = bytes.clone();
    damaged[0] = b'G';
    match FeatureSet::from_bytes(&damaged) {
        Err(e) => println!("damaged copy rejected ({}): {e}", e.kind().as_str()),
        Ok(_) => unreachable!("bad magic must not decode"),
    }

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
