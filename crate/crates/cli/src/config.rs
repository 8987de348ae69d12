//! Key-value config files and typed parameter resolution.
//!
//! A config file holds `key = value` lines; `#` starts a comment. Keys may be
//! bare (`seed = 7`) or scoped to a subcommand (`holder.ns = 20,40`); a scoped
//! key beats a bare one and a command-line flag beats both.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use ri2d::Point;
use serde_json::Value;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type Res<T> = std::result::Result<T, ConfigError>;

fn bad<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

pub fn parse_file(text: &str) -> Res<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return bad(format!("config line {}: expected key = value", i + 1));
        };
        let k = k.trim().replace('-', "_");
        if k.is_empty() {
            return bad(format!("config line {}: empty key", i + 1));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

pub fn load_file(path: &Path) -> Res<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("reading {}: {e}", path.display())))?;
    parse_file(&text)
}

/// `x,y;x,y;...`
pub fn parse_points(s: &str) -> Res<Vec<Point>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (x, y) = p.split_once(',').ok_or_else(|| ConfigError(format!("point `{p}` is not x,y")))?;
            let x = x.trim().parse::<i64>().map_err(|e| ConfigError(format!("point `{p}`: {e}")))?;
            let y = y.trim().parse::<i64>().map_err(|e| ConfigError(format!("point `{p}`: {e}")))?;
            Ok(Point::new(x, y))
        })
        .collect()
}

/// Comma separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Res<Vec<T>>
where
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| ConfigError(format!("list entry `{v}`: {e}"))))
        .collect()
}

/// Resolves parameters from flags, the config file and defaults, and keeps
/// the resolved values for the manifest.
pub struct Params {
    scope: String,
    file: HashMap<String, String>,
    resolved: BTreeMap<String, Value>,
}

impl Params {
    pub fn new(scope: &str, file: HashMap<String, String>) -> Self {
        Params { scope: scope.replace('-', "_"), file, resolved: BTreeMap::new() }
    }

    fn from_file(&self, key: &str) -> Option<&String> {
        self.file.get(&format!("{}.{key}", self.scope)).or_else(|| self.file.get(key))
    }

    fn record(&mut self, key: &str, v: Value) {
        self.resolved.insert(key.to_string(), v);
    }

    pub fn resolved(&self) -> &BTreeMap<String, Value> {
        &self.resolved
    }

    /// A scalar; `flag` wins over the file, the file over `default`.
    pub fn get<T>(&mut self, flag: Option<T>, key: &str, default: T) -> Res<T>
    where
        T: FromStr + Into<Value> + Clone,
        T::Err: Display,
    {
        let v = match (flag, self.from_file(key)) {
            (Some(v), _) => v,
            (None, Some(s)) => s.parse::<T>().map_err(|e| ConfigError(format!("config key `{key}` = `{s}`: {e}")))?,
            (None, None) => default,
        };
        self.record(key, v.clone().into());
        Ok(v)
    }

    pub fn flag(&mut self, flag: bool, key: &str) -> Res<bool> {
        let v = flag || self.get(None, key, false)?;
        self.record(key, v.into());
        Ok(v)
    }

    fn raw(&self, flag: Option<&str>, key: &str) -> Option<String> {
        flag.map(str::to_string).or_else(|| self.from_file(key).cloned())
    }

    pub fn list<T>(&mut self, flag: Option<&str>, key: &str, default: Vec<T>) -> Res<Vec<T>>
    where
        T: FromStr + Into<Value> + Clone,
        T::Err: Display,
    {
        let v = match self.raw(flag, key) {
            Some(s) => parse_list(&s).map_err(|e| ConfigError(format!("`{key}`: {e}")))?,
            None => default,
        };
        if v.is_empty() {
            return bad(format!("`{key}` must not be empty"));
        }
        self.record(key, Value::Array(v.iter().cloned().map(Into::into).collect()));
        Ok(v)
    }

    pub fn points(&mut self, flag: Option<&str>, key: &str, default: Option<Vec<Point>>) -> Res<Vec<Point>> {
        let v = match (self.raw(flag, key), default) {
            (Some(s), _) => parse_points(&s).map_err(|e| ConfigError(format!("`{key}`: {e}")))?,
            (None, Some(d)) => d,
            (None, None) => return bad(format!("`{key}` is required")),
        };
        if v.is_empty() {
            return bad(format!("`{key}` must list at least one point"));
        }
        self.record(key, Value::String(format_points(&v)));
        Ok(v)
    }

    pub fn point(&mut self, flag: Option<&str>, key: &str, default: Point) -> Res<Point> {
        match self.points(flag, key, Some(vec![default]))?.as_slice() {
            [p] => Ok(*p),
            _ => bad(format!("`{key}` must be a single point")),
        }
    }
}

pub fn format_points(ps: &[Point]) -> String {
    ps.iter().map(|p| format!("{},{}", p.x, p.y)).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_comments_and_scopes() {
        let f = parse_file("# header\nseed = 9\nholder.ns = 20, 40 # two scales\nns = 80\n").unwrap();
        let mut p = Params::new("holder", f.clone());
        assert_eq!(p.list::<i64>(None, "ns", vec![1]).unwrap(), vec![20, 40]);
        let mut q = Params::new("critical", f);
        assert_eq!(q.list::<i64>(None, "ns", vec![1]).unwrap(), vec![80]);
        assert_eq!(q.get::<u64>(Some(3), "seed", 0).unwrap(), 3);
        assert_eq!(q.get::<u64>(None, "seed", 0).unwrap(), 9);
    }

    #[test]
    fn point_lists() {
        assert_eq!(parse_points("0,0; 5,-1").unwrap(), vec![Point::new(0, 0), Point::new(5, -1)]);
        assert!(parse_points("0,0;5").is_err());
        assert!(parse_file("novalue").is_err());
    }
}
