//! Layered run configuration.
//!
//! Every subcommand resolves its parameters from three layers with fixed
//! precedence: command-line flags override entries from a `--config` file,
//! which override built-in defaults.  A config file is either a flat
//! `key = value` listing (one pair per line, `#` starts a comment) or a
//! summary document from an earlier run, in which case the echoed `config`
//! object is read back.  Both forms use the same keys as the long
//! command-line flags.
//!
//! The [`Resolver`] walks a subcommand's parameters, records the canonical
//! rendering of every resolved value, and rejects keys no parameter asked
//! for — so a typo in a file is reported by name instead of being ignored.
//! The recorded echo is what the summary publishes; feeding it back through
//! `--config` therefore replays the run with byte-identical results.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use crate::commands::RunError;

/// Parameters loaded from a `--config` file.
#[derive(Debug)]
pub struct FileConfig {
    subcommand: Option<String>,
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self {
            subcommand: None,
            entries: BTreeMap::new(),
        }
    }

    /// Reads either format, deciding by the first non-blank byte (`{`
    /// means a summary document).
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_summary(&text)
        } else {
            Self::from_flat(&text)
        }
        .map_err(|e| RunError(format!("config {}: {}", path.display(), e.0)))
    }

    fn from_flat(text: &str) -> Result<Self, RunError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((head, _)) => head,
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                RunError(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(RunError(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(RunError(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            subcommand: None,
            entries,
        })
    }

    fn from_summary(text: &str) -> Result<Self, RunError> {
        let doc: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| RunError(format!("invalid summary document: {e}")))?;
        let subcommand = match doc.get("subcommand") {
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(RunError(String::from("`subcommand` must be a string"))),
            None => None,
        };
        let config = doc
            .get("config")
            .ok_or_else(|| RunError(String::from("summary document has no `config` object")))?;
        let object = config
            .as_object()
            .ok_or_else(|| RunError(String::from("`config` must be an object")))?;
        let mut entries = BTreeMap::new();
        for (key, value) in object {
            let text = value.as_str().ok_or_else(|| {
                RunError(format!("config value for `{key}` must be a string"))
            })?;
            entries.insert(key.clone(), text.to_string());
        }
        Ok(Self {
            subcommand,
            entries,
        })
    }

    /// Subcommand recorded in a summary document, if this came from one.
    pub fn subcommand(&self) -> Option<&str> {
        self.subcommand.as_deref()
    }
}

/// Resolves one subcommand's parameters against a [`FileConfig`] and
/// accumulates the canonical echo of every value.
pub struct Resolver {
    remaining: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: &FileConfig) -> Self {
        Self {
            remaining: file.entries.clone(),
            echo: BTreeMap::new(),
        }
    }

    /// Winning raw string for `key`: the flag if given, else the file entry.
    fn raw(&mut self, key: &str, flag: Option<&String>) -> Option<String> {
        match flag {
            Some(s) => {
                self.remaining.remove(key);
                Some(s.clone())
            }
            None => self.remaining.remove(key),
        }
    }

    /// Records a canonical value the caller computed itself (for example a
    /// sampled point that later runs should reuse verbatim).
    pub fn set_echo(&mut self, key: &str, value: String) {
        self.echo.insert(key.to_string(), value);
    }

    pub fn f64(&mut self, key: &str, flag: Option<&String>, default: f64) -> Result<f64, RunError> {
        let value = match self.raw(key, flag) {
            Some(s) => parse_f64(key, &s)?,
            None => default,
        };
        self.set_echo(key, fmt_f64(value));
        Ok(value)
    }

    pub fn u32(&mut self, key: &str, flag: Option<&String>, default: u32) -> Result<u32, RunError> {
        let value = match self.raw(key, flag) {
            Some(s) => parse_int::<u32>(key, &s)?,
            None => default,
        };
        self.set_echo(key, value.to_string());
        Ok(value)
    }

    pub fn u64(&mut self, key: &str, flag: Option<&String>, default: u64) -> Result<u64, RunError> {
        let value = match self.raw(key, flag) {
            Some(s) => parse_int::<u64>(key, &s)?,
            None => default,
        };
        self.set_echo(key, value.to_string());
        Ok(value)
    }

    pub fn usize(
        &mut self,
        key: &str,
        flag: Option<&String>,
        default: usize,
    ) -> Result<usize, RunError> {
        let value = match self.raw(key, flag) {
            Some(s) => parse_int::<usize>(key, &s)?,
            None => default,
        };
        self.set_echo(key, value.to_string());
        Ok(value)
    }

    pub fn bool(
        &mut self,
        key: &str,
        flag: Option<&String>,
        default: bool,
    ) -> Result<bool, RunError> {
        let value = match self.raw(key, flag) {
            Some(s) => match s.trim() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(RunError(format!(
                        "invalid value for `{key}`: expected `true` or `false`, got `{other}`"
                    )))
                }
            },
            None => default,
        };
        self.set_echo(key, value.to_string());
        Ok(value)
    }

    /// Optional positive integer; echoed only when present.
    pub fn opt_usize(
        &mut self,
        key: &str,
        flag: Option<&String>,
    ) -> Result<Option<usize>, RunError> {
        match self.raw(key, flag) {
            Some(s) => {
                let value = parse_int::<usize>(key, &s)?;
                self.set_echo(key, value.to_string());
                Ok(Some(value))
            }
            None => Ok(None),
        }
    }

    /// Required string drawn from a fixed set of choices.
    pub fn choice(
        &mut self,
        key: &str,
        flag: Option<&String>,
        choices: &[&str],
        default: &str,
    ) -> Result<String, RunError> {
        let value = match self.raw(key, flag) {
            Some(s) => s.trim().to_string(),
            None => default.to_string(),
        };
        if !choices.contains(&value.as_str()) {
            return Err(RunError(format!(
                "invalid value for `{key}`: expected one of {}, got `{value}`",
                choices.join(", ")
            )));
        }
        self.set_echo(key, value.clone());
        Ok(value)
    }

    /// Raw string parameter with a default; the caller parses it further
    /// and is responsible for echoing the canonical form via [`set_echo`].
    ///
    /// [`set_echo`]: Resolver::set_echo
    pub fn string(&mut self, key: &str, flag: Option<&String>, default: &str) -> String {
        self.raw(key, flag)
            .unwrap_or_else(|| default.to_string())
            .trim()
            .to_string()
    }

    /// Required comma-separated float list (the domain exponents).
    pub fn f64_list_required(
        &mut self,
        key: &str,
        flag: Option<&String>,
    ) -> Result<Vec<f64>, RunError> {
        let raw = self
            .raw(key, flag)
            .ok_or_else(|| RunError(format!("missing required parameter `{key}`")))?;
        let values = parse_f64_list(key, &raw)?;
        self.set_echo(key, fmt_f64_list(&values));
        Ok(values)
    }

    /// Comma-separated non-negative integer list with a default.
    pub fn u32_list(
        &mut self,
        key: &str,
        flag: Option<&String>,
        default: &[u32],
    ) -> Result<Vec<u32>, RunError> {
        let values = match self.raw(key, flag) {
            Some(s) => split_list(key, &s)?
                .iter()
                .map(|item| parse_int::<u32>(key, item))
                .collect::<Result<Vec<u32>, RunError>>()?,
            None => default.to_vec(),
        };
        self.set_echo(
            key,
            values
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        Ok(values)
    }

    /// Optional comma-separated complex list.  Not echoed here: callers
    /// echo the canonical form once the final value (parsed or sampled)
    /// is known.
    pub fn opt_complex_list(
        &mut self,
        key: &str,
        flag: Option<&String>,
    ) -> Result<Option<Vec<Complex64>>, RunError> {
        match self.raw(key, flag) {
            Some(s) => Ok(Some(parse_complex_list(key, &s)?)),
            None => Ok(None),
        }
    }

    /// Rejects config-file keys that no parameter consumed and returns the
    /// accumulated echo.
    pub fn finish(self) -> Result<BTreeMap<String, String>, RunError> {
        if let Some(key) = self.remaining.keys().next() {
            return Err(RunError(format!(
                "unknown config key `{key}` for this subcommand"
            )));
        }
        Ok(self.echo)
    }
}

/// Shortest `f64` rendering that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_f64_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

/// Canonical complex rendering, e.g. `0.5+0i`, `0.3-0.2i`, `-1+2.5i`.
pub fn fmt_complex(z: Complex64) -> String {
    let re = fmt_f64(z.re);
    let im = fmt_f64(z.im);
    if im.starts_with('-') {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

pub fn fmt_complex_list(values: &[Complex64]) -> String {
    values
        .iter()
        .map(|z| fmt_complex(*z))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_f64(key: &str, text: &str) -> Result<f64, RunError> {
    let value: f64 = text
        .trim()
        .parse()
        .map_err(|_| RunError(format!("invalid value for `{key}`: `{text}` is not a number")))?;
    if !value.is_finite() {
        return Err(RunError(format!(
            "invalid value for `{key}`: `{text}` is not finite"
        )));
    }
    Ok(value)
}

fn parse_int<T: std::str::FromStr>(key: &str, text: &str) -> Result<T, RunError> {
    text.trim().parse().map_err(|_| {
        RunError(format!(
            "invalid value for `{key}`: `{text}` is not a non-negative integer"
        ))
    })
}

fn split_list(key: &str, text: &str) -> Result<Vec<String>, RunError> {
    let items: Vec<String> = text
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if items.iter().any(String::is_empty) {
        return Err(RunError(format!(
            "invalid value for `{key}`: empty item in list `{text}`"
        )));
    }
    Ok(items)
}

pub fn parse_f64_list(key: &str, text: &str) -> Result<Vec<f64>, RunError> {
    split_list(key, text)?
        .iter()
        .map(|item| parse_f64(key, item))
        .collect()
}

pub fn parse_usize_list(key: &str, text: &str) -> Result<Vec<usize>, RunError> {
    split_list(key, text)?
        .iter()
        .map(|item| parse_int::<usize>(key, item))
        .collect()
}

pub fn parse_u32_list(key: &str, text: &str) -> Result<Vec<u32>, RunError> {
    split_list(key, text)?
        .iter()
        .map(|item| parse_int::<u32>(key, item))
        .collect()
}

/// Parses one complex number in `a`, `bi`, or `a+bi` form; the imaginary
/// unit is a trailing `i`, and bare `i` / `-i` mean `±1i`.
pub fn parse_complex(key: &str, text: &str) -> Result<Complex64, RunError> {
    let s = text.trim();
    let bad = || RunError(format!("invalid value for `{key}`: `{text}` is not a complex number"));
    if s.is_empty() {
        return Err(bad());
    }
    let bytes = s.as_bytes();
    // The sign splitting real and imaginary parts: rightmost '+'/'-' that
    // is neither leading nor an exponent sign.
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let unit = |token: &str| -> Result<f64, RunError> {
        match token {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            other => parse_f64(key, other),
        }
    };
    match split {
        None => {
            if let Some(body) = s.strip_suffix('i') {
                Ok(Complex64::new(0.0, unit(body)?))
            } else {
                Ok(Complex64::new(parse_f64(key, s)?, 0.0))
            }
        }
        Some(i) => {
            let (re_text, im_text) = s.split_at(i);
            let body = im_text.strip_suffix('i').ok_or_else(bad)?;
            Ok(Complex64::new(parse_f64(key, re_text)?, unit(body)?))
        }
    }
}

pub fn parse_complex_list(key: &str, text: &str) -> Result<Vec<Complex64>, RunError> {
    split_list(key, text)?
        .iter()
        .map(|item| parse_complex(key, item))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms_parse() {
        let cases = [
            ("0.5+0i", Complex64::new(0.5, 0.0)),
            ("0.3-0.2i", Complex64::new(0.3, -0.2)),
            ("-1+2.5i", Complex64::new(-1.0, 2.5)),
            ("i", Complex64::new(0.0, 1.0)),
            ("-i", Complex64::new(0.0, -1.0)),
            ("2", Complex64::new(2.0, 0.0)),
            ("0.25i", Complex64::new(0.0, 0.25)),
            ("1e-3+2e-4i", Complex64::new(1e-3, 2e-4)),
            ("1.5-i", Complex64::new(1.5, -1.0)),
        ];
        for (text, want) in cases {
            assert_eq!(parse_complex("z", text).unwrap(), want, "{text}");
        }
        assert!(parse_complex("z", "1+2j").is_err());
        assert!(parse_complex("z", "").is_err());
    }

    #[test]
    fn complex_rendering_round_trips() {
        for z in [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.3, -0.2),
            Complex64::new(-1.25e-4, 7.0),
        ] {
            let text = fmt_complex(z);
            assert_eq!(parse_complex("z", &text).unwrap(), z, "{text}");
            // Canonical forms are fixed points of parse-then-render.
            assert_eq!(fmt_complex(parse_complex("z", &text).unwrap()), text);
        }
        assert_eq!(fmt_complex(Complex64::new(0.5, 0.0)), "0.5+0i");
    }

    #[test]
    fn flat_files_parse_and_reject_junk() {
        let file = FileConfig::from_flat("# comment\n m = 1,2 \ncap = 8 # inline\n\n").unwrap();
        assert_eq!(file.entries["m"], "1,2");
        assert_eq!(file.entries["cap"], "8");
        assert!(FileConfig::from_flat("novalue\n").is_err());
        let dup = FileConfig::from_flat("cap = 1\ncap = 2\n").unwrap_err();
        assert!(dup.0.contains("cap"), "{}", dup.0);
    }

    #[test]
    fn summary_documents_feed_back() {
        let text = r#"{"schema":"bergman-lab/1","subcommand":"moments",
                       "config":{"m":"1,2","cap":"6"},"result":{}}"#;
        let file = FileConfig::from_summary(text).unwrap();
        assert_eq!(file.subcommand(), Some("moments"));
        assert_eq!(file.entries["cap"], "6");
    }

    #[test]
    fn resolver_precedence_and_unknown_keys() {
        let file = FileConfig::from_flat("cap = 8\nmystery = 1\n").unwrap();
        let mut r = Resolver::new(&file);
        let flag = String::from("6");
        assert_eq!(r.u32("cap", Some(&flag), 0).unwrap(), 6);
        let err = r.finish().unwrap_err();
        assert!(err.0.contains("mystery"), "{}", err.0);

        let file = FileConfig::from_flat("cap = 8\n").unwrap();
        let mut r = Resolver::new(&file);
        assert_eq!(r.u32("cap", None, 0).unwrap(), 8);
        assert_eq!(r.u32("starts", None, 64).unwrap(), 64);
        let echo = r.finish().unwrap();
        assert_eq!(echo["cap"], "8");
        assert_eq!(echo["starts"], "64");
    }
}
