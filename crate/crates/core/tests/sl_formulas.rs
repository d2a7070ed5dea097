//! Source-level formulas against frozen values from an independent Python oracle
//! (`tests/oracles/formula_oracle.py`).

use serde_json::Value;
use urnmap_core::bands::{band_edges, broadband_bands, integrate_band, SourceSpectrum};
use urnmap_core::sl::{aquo, je, lbds, randi, JeClass};
use urnmap_core::{SlModelId, SourceModels, VesselAttributes};

fn fixture() -> Value {
    serde_json::from_str(include_str!("fixtures/formula_oracle.json")).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

fn cases<'a>(fx: &'a Value, key: &str) -> &'a Vec<Value> {
    let list = fx[key].as_array().unwrap();
    assert!(list.len() >= 50, "{key} has only {} cases", list.len());
    list
}

#[test]
fn randi_matches_oracle() {
    let fx = fixture();
    for c in cases(&fx, "randi") {
        let v = VesselAttributes::<f64>::new(70, num(c, "length_m"), num(c, "speed_kn"));
        let got = randi::randi_psd(&v, num(c, "f_hz")).unwrap();
        assert!((got - num(c, "expected")).abs() < 1e-6, "{c}: {got}");
    }
}

#[test]
fn je_matches_oracle() {
    let fx = fixture();
    for c in cases(&fx, "je") {
        let class = JeClass::new(c["class"].as_u64().unwrap() as u8).unwrap();
        let v = VesselAttributes::<f64>::new(70, num(c, "length_m"), num(c, "speed_kn"));
        let got = je::je_psd_for_class(class, &v, num(c, "f_hz")).unwrap();
        assert!((got - num(c, "expected")).abs() < 1e-6, "{c}: {got}");
    }
}

#[test]
fn lbds_matches_oracle() {
    let fx = fixture();
    for c in cases(&fx, "lbds") {
        let got = lbds::lbds_level(
            num(c, "f_hz"),
            num(c, "length_m"),
            num(c, "beam_m"),
            num(c, "draft_m"),
            num(c, "speed_kn"),
        );
        assert!((got - num(c, "expected")).abs() < 1e-6, "{c}: {got}");
    }
}

#[test]
fn aquo_cargo_matches_oracle() {
    let fx = fixture();
    let table = aquo::AquoClassParams::<f64>::cargo();
    for c in cases(&fx, "aquo_cargo") {
        let got = table.psd(num(c, "f_hz"), num(c, "speed_kn"), num(c, "length_m"));
        assert!((got - num(c, "expected")).abs() < 1e-6, "{c}: {got}");
    }
}

#[test]
fn randi_reference_band_at_1khz() {
    let fx = fixture();
    let c = &fx["randi_1000hz_band"];
    let v = VesselAttributes::<f64>::new(70, num(c, "length_m"), num(c, "speed_kn"));
    let l = SourceModels::builtin().band_levels(&v, SlModelId::Randi, &[1000.0]).unwrap();
    assert!((l.levels_db[0] - num(c, "expected_db")).abs() < 0.01, "{}", l.levels_db[0]);
}

#[test]
fn flat_psd_broadband_is_exact() {
    let fx = fixture();
    let c = &fx["flat_psd_broadband"];
    let bands = broadband_bands::<f64>();
    assert!((bands[0].lower_hz - num(c, "lower_hz")).abs() < 1e-9);
    assert!((bands.last().unwrap().upper_hz - num(c, "upper_hz")).abs() < 1e-9);
    let psd = num(c, "psd_db");
    let spectrum = SourceSpectrum::Psd(Box::new(move |_f: f64| Ok(psd)));
    let got = urnmap_core::bands::broadband_level(&spectrum).unwrap();
    assert_eq!(bands.len() as u64, c["band_count"].as_u64().unwrap());
    assert!((got - num(c, "per_band_expected_db")).abs() < 1e-9, "{got}");
    // The continuous span differs because nominal centres leave gaps and overlaps.
    let span = num(c, "expected_db");
    assert!((got - span).abs() < 0.05, "{got} vs span {span}");
}

#[test]
fn band_integration_agrees_with_fine_trapezoid() {
    let fx = fixture();
    let models = SourceModels::<f64>::with_placeholders();
    let list = fx["band_trapezoid"].as_array().unwrap();
    assert!(!list.is_empty());
    for c in list {
        let model: SlModelId = c["model"].as_str().unwrap().parse().unwrap();
        let ais_type = c["ais_type"].as_u64().unwrap() as u8;
        let v = VesselAttributes::<f64>::new(ais_type, num(c, "length_m"), num(c, "speed_kn"));
        let band = band_edges(num(c, "center_hz")).unwrap();
        let energy = integrate_band(&band, |f| models.psd_db(&v, model, f)).unwrap();
        let got = 10.0 * energy.log10();
        assert!((got - num(c, "expected_db")).abs() <= 0.01, "{c}: {got}");
    }
}
