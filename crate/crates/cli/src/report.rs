//! Aggregation of JSON artifacts into a summary table.

use std::fs;
use std::path::Path;

use serde_json::Value;

/// One table row.
#[derive(Debug, PartialEq)]
pub struct Row {
    pub artifact: String,
    pub item: String,
    pub expected: String,
    pub measured: String,
    pub pass: Option<bool>,
}

fn num(v: &Value) -> String {
    v.as_f64().map_or("-".into(), |x| format!("{x:.4}"))
}

fn rows_of(file: &str, v: &Value) -> Vec<Row> {
    let kind = v["kind"].as_str().unwrap_or("unknown");
    let p = &v["payload"];
    let row = |item: &str, expected: String, measured: String, pass: Option<bool>| Row {
        artifact: file.to_string(),
        item: item.to_string(),
        expected,
        measured,
        pass,
    };
    match kind {
        "sweep" => {
            let mut out: Vec<Row> = p["fits"]
                .as_array()
                .map(|fits| {
                    fits.iter()
                        .map(|f| {
                            let cmp = if f["one_sided"].as_bool() == Some(true) { ">=" } else { "=" };
                            row(
                                f["name"].as_str().unwrap_or("?"),
                                format!("{cmp} {} +- {}", num(&f["claim"]), num(&f["band"])),
                                num(&f["fitted"]),
                                f["pass"].as_bool(),
                            )
                        })
                        .collect()
                })
                .unwrap_or_default();
            out.push(row("decay_rate", "all points".into(), String::new(), p["decay_pass"].as_bool()));
            out
        }
        "rate_fits" => Vec::new(),
        "structure" => vec![row("structure", "sd_ok, gc_ok, theta_K > 0".into(), num(&p["theta_k"]), p["ok"].as_bool())],
        "chapman_enskog" => {
            vec![row("ce_residual_hs0", String::new(), format!("{:.4e}", p["residual_hs0"].as_f64().unwrap_or(f64::NAN)), None)]
        }
        "iteration_trace" => {
            let status = p["trace"]["status"].as_str().unwrap_or("?");
            vec![row(
                "iteration",
                "converged".into(),
                format!("{status} ({} its)", p["trace"]["iterations"]),
                Some(status == "converged" || status == "floor"),
            )]
        }
        "uniqueness" => vec![row(
            "uniqueness",
            "max distance <= 1e-6".into(),
            format!("{:.3e}", p["max_distance"].as_f64().unwrap_or(f64::NAN)),
            p["pass"].as_bool(),
        )],
        "linear_solve" => vec![row("tame ratio", String::new(), format!("{:.4e}", p["tame"]["rho"].as_f64().unwrap_or(f64::NAN)), None)],
        "oracle" => vec![row("oracle ce distance", String::new(), format!("{:.4e}", p["ce_distance"].as_f64().unwrap_or(f64::NAN)), None)],
        "error" => vec![row("error", String::new(), p["message"].as_str().unwrap_or("").to_string(), Some(false))],
        other => vec![row(other, String::new(), String::new(), None)],
    }
}

/// Rows for every `*.json` file in `dir`, in file-name order.
pub fn collect(dir: &Path) -> Result<Vec<Row>, String> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| format!("{}: {e}", f.display()))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", f.display()))?;
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        rows.extend(rows_of(&name, &v));
    }
    Ok(rows)
}

pub fn render(rows: &[Row]) -> String {
    let mut out = format!("{:<18} {:<24} {:<22} {:<22} {}\n", "artifact", "item", "expected", "measured", "pass");
    for r in rows {
        let pass = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "-",
        };
        out.push_str(&format!("{:<18} {:<24} {:<22} {:<22} {}\n", r.artifact, r.item, r.expected, r.measured, pass));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sweep_rows_list_each_claim() {
        let v = json!({
            "kind": "sweep",
            "payload": {
                "fits": [
                    {"name": "profile_0", "claim": 2.0, "band": 0.3, "one_sided": false, "fitted": 2.01, "pass": true},
                    {"name": "fluid", "claim": 1.0, "band": 0.2, "one_sided": false, "fitted": null, "pass": false}
                ],
                "decay_pass": true
            }
        });
        let rows = rows_of("sweep.json", &v);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].measured, "2.0100");
        assert_eq!(rows[1].pass, Some(false));
        assert_eq!(rows[1].measured, "-");
        assert!(render(&rows).contains("FAIL"));
    }

    #[test]
    fn unknown_kinds_are_listed() {
        let rows = rows_of("x.json", &json!({"kind": "other", "payload": {}}));
        assert_eq!(rows[0].item, "other");
        assert_eq!(rows[0].pass, None);
    }
}
