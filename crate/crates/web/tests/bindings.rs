use amh_web::{fit_json, rolling_json, simulate_json};
use serde_json::Value;

const GARCH: &str = r#"{"omega":0.0005,"a1":0.2,"b1":0.7,"sigma2_w":0.0001}"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

/// Month-end closes built from the simulated returns, starting at 100.
fn prices_from(y: &[f64]) -> String {
    let dates = amh_core::ingest::month_ends(amh_core::simulate::start_date(), y.len() + 1);
    let mut out = String::from("date,close\n1994-12-31,100\n");
    let mut log_price = 100f64.ln();
    for (d, r) in dates.iter().zip(y) {
        log_price += r;
        out.push_str(&format!("{d},{:?}\n", log_price.exp()));
    }
    out
}

fn simulated_prices(seed: u32) -> String {
    let v = parse(&simulate_json("garch", 1, GARCH, 300, seed).unwrap());
    let y: Vec<f64> = v["y"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    prices_from(&y)
}

#[test]
fn simulation_is_seeded() {
    let a = simulate_json("tgarch", 1, r#"{"omega":0.0005,"a1_plus":0.1,"a1_minus":0.3,"b1":0.6,"sigma2_w":0.0001}"#, 200, 9);
    let b = simulate_json("tgarch", 1, r#"{"omega":0.0005,"a1_plus":0.1,"a1_minus":0.3,"b1":0.6,"sigma2_w":0.0001}"#, 200, 9);
    assert_eq!(a, b);
    assert_ne!(a, simulate_json("tgarch", 1, r#"{"omega":0.0005,"a1_plus":0.1,"a1_minus":0.3,"b1":0.6,"sigma2_w":0.0001}"#, 200, 10));
}

#[test]
fn smoothed_band_contains_estimate() {
    let v = parse(&simulate_json("tvar", 2, r#"{"sigma2_w":[0.0001,0.0001],"sigma2_eps":0.002}"#, 150, 3).unwrap());
    let beta = v["smoothed_beta"].as_array().unwrap();
    for ((b, lo), hi) in beta.iter().zip(v["lower"].as_array().unwrap()).zip(v["upper"].as_array().unwrap()) {
        let (b, lo, hi) = (b.as_f64().unwrap(), lo.as_f64().unwrap(), hi.as_f64().unwrap());
        assert!(lo <= b && b <= hi);
    }
    assert_eq!(beta.len(), 148);
}

#[test]
fn rolling_matches_window_count() {
    let v = parse(&rolling_json(&simulated_prices(4), 80, 1, 0.05).unwrap());
    assert_eq!(v["acf"].as_array().unwrap().len(), 300 - 80 + 1);
    assert_eq!(v["lb_p_value"].as_array().unwrap().len(), 221);
    assert!((v["upper"].as_f64().unwrap() - 0.21915).abs() < 1e-4);
    assert_eq!(v["end_dates"][0], "2001-08-31");
}

#[test]
fn rolling_rejects_oversized_window() {
    assert!(rolling_json(&simulated_prices(4), 400, 1, 0.05).is_err());
}

#[test]
fn fit_returns_named_parameters() {
    let v = parse(&fit_json(&simulated_prices(5), "garch", 1).unwrap());
    assert_eq!(v["converged"], true);
    for key in ["omega", "a1", "b1", "sigma2_w"] {
        assert!(v["theta"][key].is_number(), "{key}");
    }
    assert_eq!(v["smoothed_beta"].as_array().unwrap().len(), 299);
}
