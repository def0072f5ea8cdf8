use lddc::plants::{make_log_grid, sample_response, FreqResponseData, RationalLti, TransferModel};
use lddc::Error;

fn sample() -> FreqResponseData {
    let m: TransferModel = RationalLti::new(vec![2.0, 1.0], vec![1.0, 0.7, 3.0]).unwrap().into();
    sample_response(&m, &make_log_grid(1e-3, 1e3, 250).unwrap()).unwrap()
}

#[test]
fn round_trip_is_bit_exact() {
    let data = sample();
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    let back = FreqResponseData::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, data);
    let mut again = Vec::new();
    back.write_csv(&mut again).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn header_is_written_first() {
    let mut buf = Vec::new();
    sample().write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("omega_rad_s,re,im"));
    assert_eq!(text.lines().count(), 251);
}

#[test]
fn wrong_header_is_a_parse_error() {
    let text = "omega,re,im\n1,0,0\n2,0,0\n";
    assert!(matches!(FreqResponseData::read_csv(text.as_bytes()), Err(Error::Parse { .. })));
}

#[test]
fn unsorted_rows_are_rejected() {
    let text = "omega_rad_s,re,im\n2,0,0\n1,0,0\n";
    assert!(FreqResponseData::read_csv(text.as_bytes()).is_err());
}

#[test]
fn non_numeric_fields_name_the_row() {
    let text = "omega_rad_s,re,im\n1,0,0\n2,x,0\n";
    let err = FreqResponseData::read_csv(text.as_bytes()).unwrap_err().to_string();
    assert!(err.contains("row 2"), "{err}");
}

#[test]
fn short_rows_are_rejected() {
    let text = "omega_rad_s,re,im\n1,0\n2,0,0\n";
    assert!(FreqResponseData::read_csv(text.as_bytes()).is_err());
}
