//! Flat key=value configuration with typed, per-command keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    Count,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Count(usize),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v}"),
            Value::Count(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
        }
    }
}

/// A key the command accepts, with its type and default.
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
}

pub const fn key(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key { name, kind, default }
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse(k: &Key, raw: &str) -> Result<Value, UsageError> {
    let bad = || UsageError(format!("{} expects {:?}, got {raw:?}", k.name, k.kind));
    Ok(match k.kind {
        Kind::Real => Value::Real(raw.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(bad)?),
        Kind::Count => Value::Count(raw.parse().map_err(|_| bad())?),
        Kind::Text => Value::Text(raw.to_string()),
    })
}

fn split_pair(line: &str, origin: &str) -> Result<(String, String), UsageError> {
    let (k, v) = line.split_once('=').ok_or_else(|| UsageError(format!("{origin}: expected key=value, got {line:?}")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(UsageError(format!("{origin}: empty key in {line:?}")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Reads key=value lines; blank lines and `#` comments are skipped. A file
/// with no entries is rejected.
pub fn read_file(path: &Path) -> Result<Vec<(String, String)>, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(split_pair(line, &format!("{}:{}", path.display(), i + 1))?);
    }
    if out.is_empty() {
        return Err(UsageError(format!("{} has no key=value entries", path.display())));
    }
    Ok(out)
}

pub fn parse_set(raw: &str) -> Result<(String, String), UsageError> {
    split_pair(raw, "--set")
}

/// Resolved parameters: defaults overlaid with the file, then with --set.
#[derive(Debug, Clone)]
pub struct Params {
    values: BTreeMap<&'static str, Value>,
}

impl Params {
    pub fn resolve(keys: &[Key], overrides: &[(String, String)]) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        for k in keys {
            values.insert(k.name, parse(k, k.default).expect("defaults parse"));
        }
        for (name, raw) in overrides {
            let k = keys.iter().find(|k| k.name == name).ok_or_else(|| {
                let known: Vec<&str> = keys.iter().map(|k| k.name).collect();
                UsageError(format!("unknown key {name:?}; this command accepts {}", known.join(", ")))
            })?;
            values.insert(k.name, parse(k, raw)?);
        }
        Ok(Self { values })
    }

    pub fn real(&self, name: &str) -> f64 {
        match self.values.get(name) {
            Some(Value::Real(v)) => *v,
            other => panic!("{name} is not a real key: {other:?}"),
        }
    }

    pub fn count(&self, name: &str) -> usize {
        match self.values.get(name) {
            Some(Value::Count(v)) => *v,
            other => panic!("{name} is not a count key: {other:?}"),
        }
    }

    pub fn text(&self, name: &str) -> &str {
        match self.values.get(name) {
            Some(Value::Text(v)) => v,
            other => panic!("{name} is not a text key: {other:?}"),
        }
    }

    pub fn echo(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: [Key; 3] = [key("h", Kind::Real, "0.1"), key("n", Kind::Count, "3"), key("f", Kind::Text, "gaussian")];

    #[test]
    fn overrides_apply_in_order() {
        let o = vec![("n".to_string(), "5".to_string()), ("n".to_string(), "7".to_string())];
        let p = Params::resolve(&KEYS, &o).unwrap();
        assert_eq!(p.count("n"), 7);
        assert_eq!(p.real("h"), 0.1);
        assert_eq!(p.text("f"), "gaussian");
    }

    #[test]
    fn rejects_unknown_and_mistyped() {
        assert!(Params::resolve(&KEYS, &[("m".into(), "1".into())]).is_err());
        assert!(Params::resolve(&KEYS, &[("n".into(), "1.5".into())]).is_err());
        assert!(Params::resolve(&KEYS, &[("h".into(), "nan".into())]).is_err());
    }

    #[test]
    fn set_needs_an_equals_sign() {
        assert!(parse_set("h").is_err());
        assert_eq!(parse_set(" h = 2 ").unwrap(), ("h".to_string(), "2".to_string()));
    }
}
