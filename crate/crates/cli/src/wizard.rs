//! Interactive configuration: one prompt per setting, in pipeline order.

use std::io::{BufRead, Write};

use anyhow::{bail, Result};
use segcube::pipeline::{RunConfig, CONFIG_KEYS};

const HELP: &[(&str, &str)] = &[
    ("mode", "tabular, unipartite or bipartite (empty: infer from inputs)"),
    ("schema", "attribute schema CSV"),
    ("individuals", "individuals CSV"),
    ("groups", "groups CSV"),
    ("membership", "membership CSV"),
    ("final_table", "ready unit table CSV (tabular mode)"),
    ("node_units", "precomputed node-unit CSV (unipartite mode)"),
    ("snapshot_file", "CSV with a date column"),
    ("snapshots", "comma-separated YYYY-MM-DD dates"),
    ("project", "groups or individuals"),
    ("max_pairs_per_hub", "skip hubs generating more pairs"),
    ("clustering", "cc or threshold"),
    ("min_weight", "edge weight threshold for threshold clustering"),
    ("minsup", "absolute count or percentage such as 1%"),
    ("indexes", "subset of D,G,H,ISO,INT,ATK"),
    ("atkinson_b", "Atkinson shape in (0, 1)"),
    ("out", "output directory"),
    ("jobs", "snapshots processed at once"),
];

/// Asks for every key, keeping the shown value on an empty answer and `-`
/// clearing it. Invalid answers are asked again; the finished configuration
/// must validate.
pub fn prompt<R: BufRead, W: Write>(mut input: R, mut output: W, mut config: RunConfig) -> Result<RunConfig> {
    for &key in CONFIG_KEYS {
        let help = HELP.iter().find(|(k, _)| *k == key).map_or("", |(_, h)| h);
        loop {
            let current = config.get(key).unwrap_or_default();
            write!(output, "{key} ({help}) [{current}]: ")?;
            output.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                bail!("input ended before the wizard finished");
            }
            let answer = line.trim();
            let result = match answer {
                "" => Ok(()),
                "-" => config.set(key, ""),
                value => config.set(key, value),
            };
            match result {
                Ok(()) => break,
                Err(e) => writeln!(output, "  {e}")?,
            }
        }
    }
    if let Err(errors) = config.validate() {
        let text: Vec<String> = errors.iter().map(ToString::to_string).collect();
        bail!(text.join("\n"));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn answers(lines: &[&str]) -> Vec<u8> {
        lines.iter().map(|l| format!("{l}\n")).collect::<String>().into_bytes()
    }

    #[test]
    fn walks_every_key_and_retries_bad_answers() {
        let mut script = vec![""; CONFIG_KEYS.len() + 1];
        let at = |k: &str| CONFIG_KEYS.iter().position(|x| *x == k).unwrap();
        script[at("schema")] = "s.csv";
        script[at("final_table")] = "t.csv";
        // minsup gets one bad answer, then a good one
        script.insert(at("minsup"), "zero");
        script[at("minsup") + 1] = "5";
        let mut out = Vec::new();
        let cfg = prompt(&answers(&script)[..], &mut out, RunConfig::default()).unwrap();
        assert_eq!(cfg.minsup, "5");
        assert_eq!(cfg.final_table.as_deref(), Some(std::path::Path::new("t.csv")));
        let shown = String::from_utf8(out).unwrap();
        assert_eq!(shown.matches("minsup (").count(), 2);
    }

    #[test]
    fn dash_clears_and_truncated_input_fails() {
        let mut start = RunConfig::default();
        start.set("schema", "s.csv").unwrap();
        start.set("final_table", "t.csv").unwrap();
        start.set("clustering", "cc").unwrap();
        let mut script = vec![""; CONFIG_KEYS.len()];
        script[CONFIG_KEYS.iter().position(|k| *k == "clustering").unwrap()] = "-";
        let cfg = prompt(&answers(&script)[..], Vec::new(), start.clone()).unwrap();
        assert_eq!(cfg.clustering, None);
        assert!(prompt(&answers(&["", ""])[..], Vec::new(), start).is_err());
    }

    #[test]
    fn inconsistent_result_is_rejected() {
        let script = vec![""; CONFIG_KEYS.len()];
        assert!(prompt(&answers(&script)[..], Vec::new(), RunConfig::default()).is_err());
    }
}
