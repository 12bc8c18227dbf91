use std::f64::consts::PI;

use noisepulse::conditions::{evaluate_conditions, ConditionPolicy, Reduction};
use noisepulse::io::catalog;
use noisepulse::io::export::waveform_csv;
use noisepulse::io::specfile::{self, NoiseKind, SpecFile};
use noisepulse::pulse::{FmPulse, PiecewiseAm, PulseSpec};
use noisepulse::Error;
use proptest::prelude::*;

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

fn fm_file() -> impl Strategy<Value = SpecFile> {
    (
        1.0..9.0f64,
        prop::collection::btree_map(1usize..12, -2.0..2.0f64, 1..6),
        prop::option::of(0.001..0.4f64),
        prop::sample::select(vec![PI, PI / 2.0, 1.234]),
        any::<bool>(),
    )
        .prop_map(|(v0, coeffs, ts, theta, general)| {
            let spec = PulseSpec::Fm(FmPulse { theta, amplitude: v0, coefficients: coeffs.into_iter().collect(), switching_time: ts });
            let mut f = SpecFile::new(spec, 2, if general { NoiseKind::General } else { NoiseKind::Dephasing });
            f.name = Some("random".into());
            f.printed_decimals = Some(6);
            f
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spec_files_round_trip_with_identical_residuals(f in fm_file()) {
        let back = specfile::parse(&specfile::serialize(&f)).unwrap();
        prop_assert_eq!(&back, &f);
        let policy = ConditionPolicy::default();
        let noise = f.noise.unit_model();
        let a = evaluate_conditions(&f.spec, 2, &noise, Reduction::Full, &policy).unwrap();
        let b = evaluate_conditions(&back.spec, 2, &noise, Reduction::Full, &policy).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }
}

#[test]
fn written_files_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    let f = catalog::find("table9-amfm2-pi-ts0.1").unwrap();
    specfile::write(&path, &f).unwrap();
    assert_eq!(specfile::read(&path).unwrap(), f);
}

#[test]
fn syntax_errors_report_the_line() {
    let text = "family = \"fm\"\norder = 2\ntheta = \"pi\"\namplitude = = 3\n";
    match specfile::parse(text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, Some(4)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = "family = \"fm\"\norder = 2\ntheta = \"pi\"\namplitude = 3.0\ncolour = 1\n";
    assert!(matches!(specfile::parse(text), Err(Error::Parse { .. })));
}

#[test]
fn fm_waveform_has_constant_magnitude() {
    let spec = catalog::find("table3-fm2-pi").unwrap().spec;
    let PulseSpec::Fm(p) = &spec else { unreachable!() };
    let tau = 2.0;
    for r in rows(&waveform_csv(&spec, tau, 101).unwrap()) {
        let m = (r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt();
        assert!((m - p.amplitude / tau).abs() < 1e-12, "{r:?}");
        assert_eq!(r[5], 1.0);
    }
}

#[test]
fn amfm_waveform_ramps_with_squared_sines() {
    let spec = catalog::find("table9-amfm2-pi-ts0.1").unwrap().spec;
    let PulseSpec::Fm(p) = &spec else { unreachable!() };
    let data = rows(&waveform_csv(&spec, 1.0, 1001).unwrap());
    assert_eq!(data.len(), 1001);
    let at = |t: f64| data.iter().find(|r| (r[0] - t).abs() < 1e-9).unwrap().clone();
    assert!((at(0.1)[5] - 1.0).abs() < 1e-12);
    assert!((at(0.9)[5] - 1.0).abs() < 1e-12);
    assert_eq!(at(0.0)[5], 0.0);
    assert!(at(1.0)[5].abs() < 1e-12);
    let r = at(0.05);
    assert!((r[5] - 0.5).abs() < 1e-12);
    let m = (r[1] * r[1] + r[2] * r[2]).sqrt();
    assert!((m - 0.5 * p.amplitude).abs() < 1e-12);
}

#[test]
fn am_waveform_switches_sign_at_the_instants() {
    let p = PiecewiseAm::symmetric(PI, 0.1, 0.3, 5.0);
    let data = rows(&waveform_csv(&PulseSpec::PiecewiseAm(p), 1.0, 21).unwrap());
    let signs: Vec<f64> = data.iter().map(|r| r[2].signum()).collect();
    assert!(data.iter().all(|r| r[1] == 0.0 && r[3] == 0.0));
    assert_eq!(signs[1], 1.0);
    assert_eq!(signs[4], -1.0);
    assert_eq!(signs[10], 1.0);
    assert_eq!(signs[16], -1.0);
}

#[test]
fn catalog_directory_loads_in_name_order() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["table3-fm2-pi", "fig1-am-pi"] {
        specfile::write(&dir.path().join(format!("{name}.toml")), &catalog::find(name).unwrap()).unwrap();
    }
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let all = catalog::load_dir(dir.path()).unwrap();
    let names: Vec<&str> = all.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["fig1-am-pi", "table3-fm2-pi"]);
    std::fs::write(dir.path().join("zz.toml"), "family = \"fm\"\norder = 7\ntheta = 1.0\namplitude = 1.0\n").unwrap();
    match catalog::load_dir(dir.path()) {
        Err(Error::Parse { line, message }) => {
            assert_eq!(line, Some(2));
            assert!(message.contains("zz.toml"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}
