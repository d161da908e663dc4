use dualsparse::io::{
    read_codes, read_dictionary, read_image, write_codes, write_dictionary, write_image,
    ImageFormat,
};
use dualsparse::sparse::{Dictionary, SparseCodes};
use dualsparse::{Image, Matrix};
use std::fs;
use std::path::Path;

fn gradient() -> Image {
    Image::from_fn(5, 7, |r, c| (r * 40 + c * 9) as f64).unwrap()
}

#[test]
fn images_round_trip_in_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let img = gradient();
    for name in ["a.pgm", "a.png", "a.dsf"] {
        let path = dir.path().join(name);
        write_image(&path, &img).unwrap();
        assert_eq!(read_image(&path).unwrap().pixels(), img.pixels(), "{name}");
    }
}

#[test]
fn raw_keeps_full_precision_and_pgm_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::new(1, 3, vec![-4.25, 12.5000001, 300.7]).unwrap();
    let raw = dir.path().join("x.dsf");
    write_image(&raw, &img).unwrap();
    assert_eq!(read_image(&raw).unwrap(), img);

    let pgm = dir.path().join("x.pgm");
    write_image(&pgm, &img).unwrap();
    assert_eq!(read_image(&pgm).unwrap().pixels(), &[0.0, 13.0, 255.0]);
}

#[test]
fn sixteen_bit_range_survives() {
    let dir = tempfile::tempdir().unwrap();
    let img = Image::new(1, 2, vec![0.0, 4000.0]).unwrap().with_dynamic_range(4095.0);
    for name in ["w.pgm", "w.png"] {
        let path = dir.path().join(name);
        write_image(&path, &img).unwrap();
        assert_eq!(read_image(&path).unwrap().pixels(), &[0.0, 4000.0], "{name}");
    }
}

#[test]
fn unknown_extension_is_rejected() {
    assert!(ImageFormat::from_path(Path::new("x.bmp")).is_err());
    assert_eq!(ImageFormat::from_path(Path::new("x.PGM")).unwrap(), ImageFormat::Pgm);
}

#[test]
fn dictionaries_and_codes_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let atoms = Matrix::from_fn(4, 6, |r, c| ((r * 6 + c) as f64).sin());
    let dict = Dictionary::normalized(atoms).unwrap();
    let dpath = dir.path().join("d.dsdd");
    write_dictionary(&dpath, &dict).unwrap();
    assert_eq!(read_dictionary(&dpath).unwrap(), dict);

    let dense = Matrix::from_fn(6, 3, |r, c| if (r + c) % 3 == 0 { r as f64 - 2.5 } else { 0.0 });
    let codes = SparseCodes::from_dense(&dense);
    let cpath = dir.path().join("c.dsdc");
    write_codes(&cpath, &codes).unwrap();
    assert_eq!(read_codes(&cpath).unwrap(), codes);

    let mut bytes = fs::read(&dpath).unwrap();
    bytes.push(0);
    fs::write(&dpath, &bytes).unwrap();
    assert!(read_dictionary(&dpath).is_err());
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_image(Path::new("/nonexistent/none.pgm")).unwrap_err();
    assert!(matches!(err, dualsparse::Error::Io(_)), "{err}");
}
