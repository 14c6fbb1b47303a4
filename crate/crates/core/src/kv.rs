//! Flat `key = value` text configs (`#` starts a comment).

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type KvMap = BTreeMap<String, String>;

pub fn parse_kv(text: &str) -> Result<KvMap> {
    let mut out = KvMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key=value, got `{line}`",
                lineno + 1
            ))
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    Ok(out)
}

pub fn render_kv(map: &KvMap) -> String {
    map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn get_parsed<T: FromStr>(map: &KvMap, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::Config(format!("cannot parse `{key}` = `{v}`"))),
    }
}

pub fn get_or<T: FromStr>(map: &KvMap, key: &str, default: T) -> Result<T> {
    Ok(get_parsed(map, key)?.unwrap_or(default))
}

pub fn require<T: FromStr>(map: &KvMap, key: &str) -> Result<T> {
    get_parsed(map, key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
}

/// Comma-separated list, e.g. `seeds = 0,1,2`.
pub fn get_list<T: FromStr>(map: &KvMap, key: &str) -> Result<Option<Vec<T>>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| Error::Config(format!("cannot parse `{key}` item `{s}`")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let m = parse_kv("# header\n pde = convdiff \nkappa=0.005 # trailing\n\n").unwrap();
        assert_eq!(m["pde"], "convdiff");
        assert_eq!(require::<f64>(&m, "kappa").unwrap(), 0.005);
        assert!(require::<f64>(&m, "beta").is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_kv("novalue").is_err());
        assert!(parse_kv("a=1\na=2").is_err());
        assert!(parse_kv("=3").is_err());
    }

    #[test]
    fn lists() {
        let m = parse_kv("seeds=0, 1,2").unwrap();
        assert_eq!(
            get_list::<u64>(&m, "seeds").unwrap().unwrap(),
            vec![0, 1, 2]
        );
    }
}
