//! Flat `key = value` configuration files.
//!
//! UTF-8 text, one pair per line. `#` starts a comment, blank lines are
//! skipped. Integers are decimal, seeds are 64 hex chars, lists are
//! comma-separated.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::chain::{Func, Params};
use crate::oracle::{Mode, OracleSeed};
use crate::Error;

#[derive(Clone, Debug, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, Error> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(Config { map })
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Config, Error> {
        let text = fs::read_to_string(&path).map_err(|e| {
            Error::Config(format!("{}: {e}", path.as_ref().display()))
        })?;
        Config::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>, Error> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: '{s}' is not a u32"))),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, Error> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{key}: '{s}' is not a u64"))),
        }
    }

    pub fn require_u32(&self, key: &str) -> Result<u32, Error> {
        self.get_u32(key)?
            .ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
    }

    pub fn get_list_u32(&self, key: &str) -> Result<Option<Vec<u32>>, Error> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("{key}: '{t}' is not a u32")))
                })
                .collect::<Result<Vec<u32>, Error>>()
                .map(Some),
        }
    }

    pub fn get_seed(&self) -> Result<Option<OracleSeed>, Error> {
        match self.get("seed") {
            None => Ok(None),
            Some(s) => OracleSeed::from_hex(s)
                .map(Some)
                .map_err(|e| Error::Config(format!("seed: {e}"))),
        }
    }

    pub fn get_mode(&self) -> Result<Option<Mode>, Error> {
        match self.get("mode") {
            None => Ok(None),
            Some(s) => Mode::from_name(s).map(Some).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn get_func(&self) -> Result<Option<Func>, Error> {
        match self.get("func") {
            None => Ok(None),
            Some(s) => Func::from_name(s).map(Some).map_err(|e| Error::Config(e.to_string())),
        }
    }

    /// Builds `Params` from keys `n`, `v`, `w` (required) plus optional
    /// overrides `u`, `m`, `s`, `q`, `d`. Validation is left to the caller,
    /// which knows the chain function.
    pub fn params(&self) -> Result<Params, Error> {
        let n = self.require_u32("n")?;
        let v = self.require_u32("v")?;
        let w = self.require_u32("w")?;
        let mut p = Params::new(n, v, w);
        if let Some(u) = self.get_u32("u")? {
            p.u = u;
        }
        if let Some(m) = self.get_u32("m")? {
            p.m = m;
        }
        if let Some(s) = self.get_u32("s")? {
            p.s = s;
        }
        if let Some(q) = self.get_u32("q")? {
            p.q = q;
        }
        if let Some(d) = self.get_u32("d")? {
            p.d = d;
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_lists() {
        let cfg = Config::parse(
            "# experiment\nn = 12\nv=4\nw = 8  # chain length\n\nb_list = 1, 2,4\nseed = 0000000000000000000000000000000000000000000000000000000000000007\n",
        )
        .unwrap();
        assert_eq!(cfg.get_u32("n").unwrap(), Some(12));
        assert_eq!(cfg.get_list_u32("b_list").unwrap(), Some(vec![1, 2, 4]));
        assert_eq!(cfg.get("missing"), None);
        let seed = cfg.get_seed().unwrap().unwrap();
        assert_eq!(seed, OracleSeed::from_u64(7));
        let p = cfg.params().unwrap();
        assert_eq!((p.n, p.u, p.v, p.w), (12, 4, 4, 8));
    }

    #[test]
    fn overrides_apply() {
        let cfg = Config::parse("n=12\nv=4\nw=8\nu=5\nq=9\nd=3\n").unwrap();
        let p = cfg.params().unwrap();
        assert_eq!((p.u, p.q, p.d), (5, 9, 3));
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(Config::parse("n 12"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("= 12"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("n=1\nn=2"), Err(Error::Config(_))));
        let cfg = Config::parse("n=twelve").unwrap();
        assert!(matches!(cfg.get_u32("n"), Err(Error::Config(_))));
        let cfg2 = Config::parse("seed=abc").unwrap();
        assert!(matches!(cfg2.get_seed(), Err(Error::Config(_))));
        let cfg3 = Config::parse("v=4\nw=8").unwrap();
        assert!(matches!(cfg3.params(), Err(Error::Config(_))));
    }
}
