//! Tidy CSV export of stored records.
//!
//! A query is a list of `path=value` clauses joined by `,` or `&&`; `path`
//! is a dotted path into the record JSON (`op`, `model.kind`, `params.s_max`).

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::store;
use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub path: Vec<String>,
    pub value: String,
}

pub fn parse_query(expr: &str) -> Result<Vec<Clause>, CliError> {
    let clauses: Vec<Clause> = expr
        .split("&&")
        .flat_map(|s| s.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|c| {
            let (k, v) = c.split_once('=').ok_or_else(|| CliError::Config(format!("query clause {c:?} is not key=value")))?;
            let k = k.trim().trim_end_matches('=');
            if k.is_empty() {
                return Err(CliError::Config(format!("query clause {c:?} has an empty key")));
            }
            Ok(Clause { path: k.split('.').map(str::to_string).collect(), value: v.trim().trim_start_matches('=').trim().to_string() })
        })
        .collect::<Result<_, _>>()?;
    if clauses.is_empty() {
        return Err(CliError::Config("empty query".into()));
    }
    Ok(clauses)
}

fn lookup<'a>(v: &'a Value, path: &[String]) -> Option<&'a Value> {
    path.iter().try_fold(v, |node, key| match node {
        Value::Object(m) => m.get(key),
        Value::Array(a) => a.get(key.parse::<usize>().ok()?),
        _ => None,
    })
}

fn matches_value(v: &Value, want: &str) -> bool {
    match v {
        Value::String(s) => s == want,
        Value::Number(n) => match (n.as_f64(), want.parse::<f64>()) {
            (Some(a), Ok(b)) => a == b,
            _ => false,
        },
        Value::Bool(b) => want.parse::<bool>().is_ok_and(|w| w == *b),
        other => other == want,
    }
}

pub fn matches(record: &Value, clauses: &[Clause]) -> bool {
    clauses.iter().all(|c| lookup(record, &c.path).is_some_and(|v| matches_value(v, &c.value)))
}

fn num(v: &Value) -> String {
    match v {
        Value::Number(n) => n.to_string(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn model_label(r: &Value) -> String {
    r["model"]["kind"].as_str().unwrap_or("unknown").to_string()
}

/// CSV table for one op: header plus one row per observation.
fn table(op: &str, records: &[&Value]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let mut rows = Vec::new();
    match op {
        "entropy_estimate" => {
            for r in records {
                for row in r["report"]["table"].as_array().into_iter().flatten() {
                    let count = row["count"].as_f64().unwrap_or(f64::NAN);
                    rows.push(vec![num(&row["s"]), count.ln().to_string(), model_label(r)]);
                }
            }
            (vec!["s", "log_V_s", "model"], rows)
        }
        "laplace_G" => {
            for r in records {
                for row in r["report"]["rows"].as_array().into_iter().flatten() {
                    rows.push(vec![num(&row["sigma"]), num(&row["value"]), num(&row["abs_error"]), model_label(r)]);
                }
            }
            (vec!["sigma", "G", "tail_error", "model"], rows)
        }
        "delta_estimate" => {
            for r in records {
                for row in r["report"]["refinement_history"].as_array().into_iter().flatten() {
                    rows.push(vec![num(&row[0]), num(&row[1]), num(&row[2]), model_label(r)]);
                }
            }
            (vec!["n", "delta_b", "delta_4pt", "model"], rows)
        }
        "crit_ratio" => {
            for r in records {
                for row in r["report"]["rows"].as_array().into_iter().flatten() {
                    rows.push(vec![num(&row["sigma"]), num(&row["height"]), num(&row["ratio"]), model_label(r)]);
                }
            }
            (vec!["sigma", "height", "ratio", "model"], rows)
        }
        "ps_renormalize" => {
            for r in records {
                for row in r["report"]["ahlfors"]["rows"].as_array().into_iter().flatten() {
                    rows.push(vec![num(&row["radius"]), num(&row["ratio_min"]), num(&row["ratio_max"]), model_label(r)]);
                }
            }
            (vec!["radius", "ratio_min", "ratio_max", "model"], rows)
        }
        _ => {
            for r in records {
                for v in r["values"].as_array().into_iter().flatten() {
                    let method = v["method"].as_str().unwrap_or_default().to_string();
                    rows.push(vec![
                        v["name"].as_str().unwrap_or_default().to_string(),
                        num(&v["value"]),
                        num(&v["abs_error"]),
                        method,
                        model_label(r),
                    ]);
                }
            }
            (vec!["name", "value", "abs_error", "method", "model"], rows)
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes one CSV per op among the matching records; returns the files written.
pub fn export(store_path: &Path, query: &str, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let clauses = parse_query(query)?;
    let records = store::read_all(store_path)?;
    let hits: Vec<&Value> = records.iter().filter(|r| matches(r, &clauses)).collect();
    if hits.is_empty() {
        return Err(CliError::Config(format!("query {query:?} matched no records in {}", store_path.display())));
    }
    let mut ops: Vec<&str> = hits.iter().filter_map(|r| r["op"].as_str()).collect();
    ops.sort_unstable();
    ops.dedup();
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    for op in ops {
        let group: Vec<&Value> = hits.iter().copied().filter(|r| r["op"] == op).collect();
        let (header, rows) = table(op, &group);
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
            text.push('\n');
        }
        let path = out_dir.join(format!("{op}.csv"));
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn query_grammar() {
        let q = parse_query("op=entropy_estimate && model.kind=HalfPlane, seed = 3").unwrap();
        assert_eq!(q.len(), 3);
        assert_eq!(q[1].path, vec!["model", "kind"]);
        let rec = json!({"op": "entropy_estimate", "model": {"kind": "HalfPlane"}, "seed": 3});
        assert!(matches(&rec, &q));
        assert!(!matches(&json!({"op": "laplace_G"}), &q));
        assert!(parse_query("op").is_err());
        assert!(parse_query(" , ").is_err());
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
