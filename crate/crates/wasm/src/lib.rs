//! Browser bindings: a tail-probability curve, a min-spend solve and the
//! ruin bounds. Each export returns JSON text; errors become JS exceptions.

use serde_json::json;
use wasm_bindgen::prelude::*;

use luckscreen::betamath::{tail_prob, TailQuery};
use luckscreen::ruin::{
    expected_prize_count, expected_stopping_time_bounds, BankrollScenario, TicketSpec,
};
use luckscreen::solver::{solve_min_spend, Bet, MinSpendProblem};

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `D(n; w, p)` at `points` evenly spaced n in `[w, n_max]`, as `[[n, D], ...]`.
pub fn tail_curve_json(w: u32, p: f64, n_max: f64, points: u32) -> Result<String, String> {
    let w = u64::from(w);
    let lo = w as f64;
    if n_max.is_nan() || n_max <= lo || !(2..=10_000).contains(&points) {
        return Err(format!("need n_max > {lo} and 2..=10000 points"));
    }
    let step = (n_max - lo) / f64::from(points - 1);
    let curve = (0..points)
        .map(|i| {
            let n = lo + step * f64::from(i);
            let d = TailQuery::new(n, w, p)
                .and_then(|q| tail_prob(&q))
                .map_err(|e| e.to_string())?;
            Ok([n, d])
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!(curve).to_string())
}

/// Bets as JSON `[[cost, prob, wins], ...]`.
pub fn min_spend_json(bets: &str, eps: f64) -> Result<String, String> {
    let raw: Vec<(f64, f64, u64)> = serde_json::from_str(bets).map_err(|e| e.to_string())?;
    let bets = raw
        .into_iter()
        .map(|(c, p, w)| Bet::new(c, p, w))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let problem = MinSpendProblem::new(bets, eps).map_err(|e| e.to_string())?;
    let bound = solve_min_spend(&problem).map_err(|e| e.to_string())?;
    Ok(json!(bound).to_string())
}

pub fn ruin_json(bankroll: f64, cost: f64, prize: f64, p: f64) -> Result<String, String> {
    let s = TicketSpec::new(cost, prize, p)
        .and_then(|t| BankrollScenario::new(bankroll, t))
        .map_err(|e| e.to_string())?;
    let bounds = expected_stopping_time_bounds(&s).map_err(|e| e.to_string())?;
    let wins = expected_prize_count(&s).map_err(|e| e.to_string())?;
    Ok(json!({ "stopping_time": bounds, "expected_wins": wins }).to_string())
}

#[wasm_bindgen]
pub fn tail_curve(w: u32, p: f64, n_max: f64, points: u32) -> Result<String, JsError> {
    tail_curve_json(w, p, n_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn min_spend(bets: &str, eps: f64) -> Result<String, JsError> {
    min_spend_json(bets, eps).map_err(js)
}

#[wasm_bindgen]
pub fn ruin(bankroll: f64, cost: f64, prize: f64, p: f64) -> Result<String, JsError> {
    ruin_json(bankroll, cost, prize, p).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_is_increasing() {
        let v: Vec<[f64; 2]> =
            serde_json::from_str(&tail_curve_json(3, 0.01, 2000.0, 50).unwrap()).unwrap();
        assert_eq!(v.len(), 50);
        assert!(v.windows(2).all(|w| w[1][1] >= w[0][1]));
        assert!((v[0][1] - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn johnson_min_spend() {
        let v: serde_json::Value =
            serde_json::from_str(&min_spend_json("[[1, 1e-4, 57]]", 5e-14).unwrap()).unwrap();
        let spend = v["spend"].as_f64().unwrap();
        assert!((spend / 174_000.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn ruin_and_errors() {
        let v: serde_json::Value =
            serde_json::from_str(&ruin_json(175_000.0, 1.0, 800.0, 6e-4).unwrap()).unwrap();
        assert!((v["expected_wins"].as_f64().unwrap() - 201.92).abs() < 0.01);
        assert!(ruin_json(1.0, 1.0, 5000.0, 3e-4).is_err());
        assert!(min_spend_json("not json", 1e-3).is_err());
        assert!(tail_curve_json(5, 0.1, 2.0, 10).is_err());
    }
}
