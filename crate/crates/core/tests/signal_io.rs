use proptest::prelude::*;
use tfstretch::{read_wav, write_wav, Signal};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn white_noise_round_trip(samples in proptest::collection::vec(-1.0..1.0f64, 1..4000), rate in 8000u32..96000) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noise.wav");
        write_wav(&path, &Signal::new(samples.clone(), rate).unwrap()).unwrap();
        let back = read_wav(&path).unwrap();
        prop_assert_eq!(back.sample_rate(), rate);
        prop_assert_eq!(back.len(), samples.len());
        let worst = back.samples().iter().zip(&samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(worst <= 2f64.powi(-23));
    }

    #[test]
    fn values_beyond_unit_range_survive(scale in 1.0..100.0f64) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loud.wav");
        let samples = vec![scale, -scale, 0.25];
        write_wav(&path, &Signal::new(samples.clone(), 44100).unwrap()).unwrap();
        let back = read_wav(&path).unwrap();
        for (a, b) in back.samples().iter().zip(&samples) {
            prop_assert!((a - b).abs() <= b.abs() * 2f64.powi(-23));
        }
    }
}

#[test]
fn float_file_at_44100() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.wav");
    write_wav(&path, &Signal::new(vec![0.1; 44100], 44100).unwrap()).unwrap();
    let s = read_wav(&path).unwrap();
    assert_eq!((s.len(), s.sample_rate()), (44100, 44100));
}
