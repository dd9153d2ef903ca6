use surfflow::io::{
    colorize, encode_flow, encode_ppm, read_float_image, read_flow, FlowImage, WHEEL,
};
use surfflow::{GridSpec, VectorField};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/");

#[test]
fn flow_golden_hex_dump() {
    #[rustfmt::skip]
    let expected: [u8; 28] = [
        0x50, 0x49, 0x45, 0x48, 0x02, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x40,
        0x00, 0x00, 0x40, 0x40, 0x00, 0x00, 0x80, 0x40,
    ];
    let flow = FlowImage {
        width: 2,
        height: 1,
        data: vec![[1.0, 2.0], [3.0, 4.0]],
    };
    assert_eq!(encode_flow(&flow), expected);
    assert_eq!(
        std::fs::read(format!("{DATA}two_by_one.flo")).unwrap(),
        expected
    );
    assert_eq!(read_flow(format!("{DATA}two_by_one.flo")).unwrap(), flow);
}

#[test]
fn float_image_golden_hex_dump() {
    let mut expected = b"Pf\n2 2\n-1.0\n".to_vec();
    #[rustfmt::skip]
    expected.extend_from_slice(&[
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3f,
        0x00, 0x00, 0x00, 0xc0, 0x00, 0x00, 0x00, 0x3f,
    ]);
    assert_eq!(
        std::fs::read(format!("{DATA}two_by_two.pfm")).unwrap(),
        expected
    );
    let img = read_float_image(format!("{DATA}two_by_two.pfm")).unwrap();
    assert_eq!(img.data, vec![0.0, 1.0, -2.0, 0.5]);
}

/// Radial field `(i − 4, j − 4)` on 9x9, normalised by 4.
#[test]
fn wheel_golden_image() {
    let spec = GridSpec::new(9, 9, 1.0, 1.0).unwrap();
    let u = VectorField::from_fn(spec, |i, j| (i as f64 - 4.0, j as f64 - 4.0));
    let img = colorize(&u, Some(4.0)).unwrap();
    assert_eq!(
        encode_ppm(&img),
        std::fs::read(format!("{DATA}wheel_9x9.ppm")).unwrap()
    );
    assert_eq!(img.data[4 * 9 + 4], [255, 255, 255]);
    assert_eq!(img.data[4 * 9 + 8], WHEEL[0]);
}
