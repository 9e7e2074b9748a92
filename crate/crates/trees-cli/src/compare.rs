use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::{EXIT_CONFIG, EXIT_GOLDEN_MISMATCH, EXIT_OK};

pub(crate) fn cmd_compare_trace(actual: &Path, golden: &Path) -> u8 {
    let read = |path: &Path| -> Result<String, String> {
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
    };
    let (actual_text, golden_text) = match (read(actual), read(golden)) {
        (Ok(a), Ok(g)) => (a, g),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match compare_texts(&actual_text, &golden_text) {
        Ok(()) => {
            println!("traces identical");
            EXIT_OK
        }
        Err(message) => {
            if message.starts_with("malformed") {
                eprintln!("error: {message}");
                EXIT_CONFIG
            } else {
                eprintln!("trace mismatch: {message}");
                EXIT_GOLDEN_MISMATCH
            }
        }
    }
}

/// Field-by-field comparison of two line-delimited JSON streams. Reports
/// the first divergence by epoch index and field name.
pub(crate) fn compare_texts(actual: &str, golden: &str) -> Result<(), String> {
    let parse = |text: &str, side: &str| -> Result<Vec<Value>, String> {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, line)| {
                serde_json::from_str(line)
                    .map_err(|e| format!("malformed JSON on {side} line {}: {e}", i + 1))
            })
            .collect()
    };
    let actual = parse(actual, "actual")?;
    let golden = parse(golden, "golden")?;

    for (index, (a, g)) in actual.iter().zip(&golden).enumerate() {
        if a == g {
            continue;
        }
        // Positional: for well-formed traces the position is the epoch
        // ordinal, and it stays meaningful when one side dropped an epoch.
        let label = if a.get("epoch_index").is_some() || g.get("epoch_index").is_some() {
            format!("epoch index {index}")
        } else {
            format!("line {}", index + 1)
        };
        if let (Some(a_obj), Some(g_obj)) = (a.as_object(), g.as_object()) {
            for (key, a_val) in a_obj {
                match g_obj.get(key) {
                    Some(g_val) if g_val == a_val => {}
                    Some(g_val) => {
                        return Err(format!(
                            "{label}, field {key}: actual {a_val}, golden {g_val}"
                        ));
                    }
                    None => {
                        return Err(format!("{label}: field {key} missing from golden"));
                    }
                }
            }
            for key in g_obj.keys() {
                if !a_obj.contains_key(key) {
                    return Err(format!("{label}: field {key} missing from actual"));
                }
            }
        }
        return Err(format!("{label}: records differ"));
    }
    if actual.len() != golden.len() {
        return Err(format!(
            "length mismatch (actual {} lines, golden {} lines)",
            actual.len(),
            golden.len()
        ));
    }
    Ok(())
}
