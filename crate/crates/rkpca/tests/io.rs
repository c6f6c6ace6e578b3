use proptest::prelude::*;
use rkpca::io::{
    format_labels, format_matrix_csv, parse_labels, parse_matrix_csv, read_matrix_csv, write_matrix_csv,
    SampleLayout,
};
use rkpca_core::DataMatrix;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(f64::MAX),
    ]
}

fn matrix() -> impl Strategy<Value = DataMatrix> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        prop::collection::vec(finite(), r * c).prop_map(move |v| DataMatrix::new(r, c, v).unwrap())
    })
}

fn bits(m: &DataMatrix) -> Vec<u64> {
    m.as_slice().iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        rng_seed: proptest::test_runner::RngSeed::Fixed(17),
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn csv_round_trip_is_exact(m in matrix(), rows_layout in any::<bool>()) {
        let layout = if rows_layout { SampleLayout::Rows } else { SampleLayout::Cols };
        let back = parse_matrix_csv(&format_matrix_csv(&m, layout), layout).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        prop_assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn label_round_trip(labels in prop::collection::vec(0usize..1000, 1..50)) {
        prop_assert_eq!(parse_labels(&format_labels(&labels)).unwrap(), labels);
    }
}

#[test]
fn parse_examples() {
    let m = parse_matrix_csv("1,2\n3,4", SampleLayout::Cols).unwrap();
    assert_eq!(m, DataMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
    let m = parse_matrix_csv("a,b\n1,2", SampleLayout::Cols).unwrap();
    assert_eq!(m, DataMatrix::from_rows(&[&[1.0, 2.0]]));
    let m = parse_matrix_csv("# samples as rows\n 1 , 2 \n3,4\n", SampleLayout::Rows).unwrap();
    assert_eq!(m, DataMatrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]));
}

#[test]
fn parse_errors_name_the_row() {
    let e = parse_matrix_csv("1,2\n3,4\n5\n", SampleLayout::Cols).unwrap_err();
    assert!(e.to_string().starts_with("row 3"), "{e}");
    let e = parse_matrix_csv("h1,h2\n1,2\n3,oops\n", SampleLayout::Cols).unwrap_err();
    assert_eq!(e.to_string(), "row 3, column 2: cannot parse \"oops\" as a number");
}

#[test]
fn files_round_trip_and_report_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let m = DataMatrix::from_rows(&[&[0.1, -2.5e-300], &[1.0 / 3.0, 7.0]]);
    write_matrix_csv(&path, &m, SampleLayout::Cols).unwrap();
    assert_eq!(read_matrix_csv(&path, SampleLayout::Cols).unwrap(), m);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1, "temporary files must not remain");

    let missing = dir.path().join("missing.csv");
    let e = read_matrix_csv(&missing, SampleLayout::Cols).unwrap_err();
    assert!(e.to_string().contains("missing.csv"), "{e}");
}
