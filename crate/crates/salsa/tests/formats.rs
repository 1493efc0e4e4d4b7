use proptest::prelude::*;
use salsa::pgm::{encode_pgm, parse_pgm, quantize, read_pgm, write_pgm, PgmError};
use salsa::trace_csv::{read_trace, trace_to_string, HEADER};
use salsa_core::{ImageBuffer, SolverTrace, TraceRecord};

#[test]
fn pgm_header_with_comments() {
    let mut bytes = b"P5\n# made by hand\n3 2\n# depth\n255\n".to_vec();
    bytes.extend([0, 10, 20, 30, 40, 255]);
    let img = parse_pgm(&bytes).unwrap();
    assert_eq!(img.shape(), (2, 3));
    assert_eq!(img.get(1, 2), 255.0);
    assert_eq!(img.get(0, 1), 10.0);
}

#[test]
fn pgm_errors_carry_offsets() {
    let truncated = b"P5\n4 4\n255\n\x01\x02".to_vec();
    match parse_pgm(&truncated) {
        Err(e @ PgmError::Truncated { expected: 16, found: 2, .. }) => assert_eq!(e.offset(), Some(11)),
        other => panic!("{other:?}"),
    }
    let ascii = b"P2\n2 2\n255\n0 0 0 0".to_vec();
    assert!(matches!(parse_pgm(&ascii), Err(PgmError::Unsupported { offset: 0, .. })));
    let wide = b"P5\n1 1\n65535\n\x00\x00".to_vec();
    assert!(matches!(parse_pgm(&wide), Err(PgmError::Unsupported { .. })));
    assert!(matches!(parse_pgm(b"P5\nx 1\n255\n\x00"), Err(PgmError::Malformed { .. })));
    assert!(matches!(read_pgm("/nonexistent/image.pgm"), Err(PgmError::Io { .. })));
}

#[test]
fn pgm_writer_rounds_and_clamps() {
    assert_eq!([quantize(-4.0), quantize(12.5), quantize(12.49), quantize(300.0)], [0, 13, 12, 255]);
    let img = ImageBuffer::new(1, 3, vec![-1.0, 127.6, 999.0]).unwrap();
    let bytes = encode_pgm(&img);
    assert!(bytes.starts_with(b"P5\n3 1\n255\n"));
    assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
}

#[test]
fn pgm_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let img = ImageBuffer::from_fn(5, 7, |r, c| ((r * 7 + c) * 6) as f64);
    write_pgm(&img, &path).unwrap();
    assert_eq!(read_pgm(&path).unwrap(), img);
}

#[test]
fn trace_csv_layout() {
    let trace = SolverTrace {
        records: vec![
            TraceRecord { iter: 0, elapsed_seconds: 0.0, objective: 12.5, isnr_db: Some(0.0) },
            TraceRecord { iter: 1, elapsed_seconds: 0.25, objective: 3.0, isnr_db: None },
        ],
    };
    let text = trace_to_string(&trace);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER.join(","));
    assert_eq!(lines[2], "1,2.5000000000000000e-1,3.0000000000000000e0,");
    assert!(!text.contains('\r'));
    assert!(read_trace("iter,objective\n0,1\n".as_bytes()).is_err());
    assert!(read_trace("iter,elapsed_s,objective,isnr_db\nzero,0,1,\n".as_bytes()).is_err());
}

fn record() -> impl Strategy<Value = TraceRecord> {
    (0usize..100_000, 0.0f64..1e4, -1e12f64..1e12, prop::option::of(prop_oneof![-80.0f64..80.0, Just(f64::INFINITY)]))
        .prop_map(|(iter, elapsed_seconds, objective, isnr_db)| TraceRecord { iter, elapsed_seconds, objective, isnr_db })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_round_trip_is_exact(records in prop::collection::vec(record(), 0..40)) {
        let trace = SolverTrace { records };
        let back = read_trace(trace_to_string(&trace).as_bytes()).unwrap();
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn pgm_round_trip_is_exact(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
        let img = ImageBuffer::from_fn(h, w, |r, c| ((seed ^ (r * 31 + c) as u64).wrapping_mul(2654435761) % 256) as f64);
        prop_assert_eq!(parse_pgm(&encode_pgm(&img)).unwrap(), img);
    }
}
