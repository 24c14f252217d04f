//! Reference bridge process: a linear model with the coefficients given as
//! arguments, `--intercept <c>` optional. `--fail` answers every prediction
//! with an error.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let mut coefs = Vec::new();
    let mut intercept = 0.0;
    let mut fail = false;
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        match a.as_str() {
            "--fail" => fail = true,
            "--intercept" => intercept = args.next().and_then(|v| v.parse().ok()).expect("--intercept <number>"),
            v => coefs.push(v.parse::<f64>().expect("coefficient")),
        }
    }
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let msg: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("bad request: {e}");
                break;
            }
        };
        let reply = match msg["op"].as_str() {
            Some("hello") if msg["n_features"].as_u64() == Some(coefs.len() as u64) => json!({"ok": true}),
            Some("hello") => json!({"error": format!("expected {} features", coefs.len())}),
            Some("predict") if fail => {
                eprintln!("refusing to predict");
                json!({"error": "prediction failed"})
            }
            Some("predict") => {
                let outputs: Vec<f64> = msg["inputs"]
                    .as_array()
                    .map(|rows| {
                        rows.iter()
                            .map(|r| {
                                let r = r.as_array().map(Vec::as_slice).unwrap_or(&[]);
                                intercept + r.iter().zip(&coefs).map(|(x, a)| x.as_f64().unwrap_or(f64::NAN) * a).sum::<f64>()
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                json!({ "outputs": outputs })
            }
            _ => json!({"error": "unknown op"}),
        };
        if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
