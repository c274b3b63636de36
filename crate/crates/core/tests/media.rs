use std::path::Path;

use apsk::channel::{ChannelModel, Hpa, SalehParams};
use apsk::geometry::{build_uniform, equally_spaced_radii, BundledMapping};
use apsk::media::{pack, psnr, synthetic_image, transmit_image, GreyImage};

fn shipped() -> GreyImage {
    GreyImage::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/images/synthetic-512.pgm"))
        .unwrap()
}

#[test]
fn shipped_test_image_is_the_synthetic_picture() {
    let img = shipped();
    assert_eq!((img.width(), img.height()), (512, 512));
    assert_eq!(img, synthetic_image(512, 512));
    let distinct = img
        .pixels()
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    assert!(distinct > 200, "only {distinct} grey levels");
}

#[test]
fn whole_frame_round_trips_without_noise() {
    let img = shipped();
    assert_eq!(pack(&img).labels.len(), 349_526);
    let b = BundledMapping::Ccsds4_12_20_28;
    let m = b.mapping();
    let c = build_uniform(m.layout(), &equally_spaced_radii(4), &m, b.symmetry()).unwrap();
    for hpa in [Hpa::Ideal, Hpa::Saleh(SalehParams::default())] {
        let t = transmit_image(&img, &c, &ChannelModel::noiseless(hpa), 1).unwrap();
        assert_eq!(t.image, img);
        assert_eq!((t.pixel_mse, t.label_mse), (0.0, 0.0));
        assert_eq!(t.psnr_db, f64::INFINITY);
    }
}

#[test]
fn noisy_scores_are_consistent() {
    let img = synthetic_image(96, 64);
    let b = BundledMapping::Proposed4_12_20_28;
    let m = b.mapping();
    let c = build_uniform(m.layout(), &equally_spaced_radii(4), &m, b.symmetry()).unwrap();
    let model = ChannelModel::new(Hpa::Ideal, 5.0).unwrap();
    let t = transmit_image(&img, &c, &model, 2).unwrap();
    let mse = img
        .pixels()
        .iter()
        .zip(t.image.pixels())
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum::<f64>()
        / img.pixels().len() as f64;
    assert!((t.pixel_mse - mse).abs() < 1e-9);
    assert!((t.psnr_db - 10.0 * (255.0f64 * 255.0 / mse).log10()).abs() < 1e-9);
    assert_eq!(t.psnr_db, psnr(mse));
    assert!(t.label_mse > 0.0);
    assert_eq!(t, transmit_image(&img, &c, &model, 2).unwrap());
}
