//! Run configuration: a sectioned `key = value` file with `[model]`,
//! `[numerics]` and `[output]` blocks.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

use touchdown_core::asymptotics::AsymptoticConstants;
use touchdown_core::func::ScalarFn;
use touchdown_core::model::{GapFunction, Model, PhiOperator, SourceProfile, Term};
use touchdown_core::monotone::Numerics;
use touchdown_core::shooter::ShooterConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A function given either as a constant or as `x:y` knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FnSpec {
    Constant(f64),
    Table(Vec<(f64, f64)>),
}

impl FnSpec {
    fn build(&self) -> Result<ScalarFn, String> {
        match self {
            FnSpec::Constant(c) => Ok(ScalarFn::constant(*c)),
            FnSpec::Table(knots) => ScalarFn::table(knots.clone()).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorSpec {
    Power { alpha: f64, beta: f64 },
    Sum { terms: Vec<(f64, f64)> },
    Variable { n: f64, p: FnSpec, epsilon: f64 },
    Sphere { n: u32, rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GapSpec {
    Mems { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceSpec {
    Weighted {
        gamma: f64,
        c: f64,
        h: Option<Vec<(f64, f64)>>,
    },
    Direct {
        f: FnSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    pub operator: OperatorSpec,
    pub gap: GapSpec,
    pub source: SourceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericsSpec {
    #[serde(rename = "M")]
    pub m: usize,
    pub grading: f64,
    pub tol_fix: f64,
    pub tol_res: f64,
    pub tol_quad: f64,
    pub eps_td: f64,
    pub g_floor: f64,
    pub max_iter: usize,
    pub dt: f64,
    #[serde(rename = "T_auto")]
    pub t_auto: bool,
    /// Seed time when `T_auto` is off.
    #[serde(rename = "T")]
    pub t_seed: Option<f64>,
    pub seed_tail_tol: f64,
    pub root_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub svg: bool,
}

/// The resolved configuration, defaults filled in. Serialised verbatim
/// into every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub numerics: NumericsSpec,
    pub output: OutputSpec,
}

const MODEL_KEYS: &[&str] = &[
    "operator", "alpha", "beta", "gamma", "gap", "p", "source", "C", "terms", "N", "rho",
    "epsilon", "p_const", "p_table", "h_table", "f_const", "f_table",
];
const NUMERICS_KEYS: &[&str] = &[
    "M",
    "grading",
    "tol_fix",
    "tol_res",
    "tol_quad",
    "eps_td",
    "g_floor",
    "max_iter",
    "dt",
    "T_auto",
    "T",
    "seed_tail_tol",
    "root_tol",
];
const OUTPUT_KEYS: &[&str] = &["dir", "svg"];

/// One `key = value` line.
struct Entry<'a> {
    section: &'a str,
    key: &'a str,
    value: &'a str,
    line: usize,
}

/// Split the text into entries. Blank lines and lines starting with `#` or
/// `;` are skipped; anything else must be a `[section]` header or contain `=`.
fn lex(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut entries = Vec::new();
    let mut current: Option<&str> = None;
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        let fail = |message: String| ConfigError {
            line: Some(line),
            message,
        };
        if let Some(rest) = t.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| fail(format!("unterminated section header '{t}'")))?
                .trim();
            if !matches!(name, "model" | "numerics" | "output") {
                return Err(fail(format!("unknown section [{name}]")));
            }
            if !seen.insert(name) {
                return Err(fail(format!("section [{name}] appears more than once")));
            }
            current = Some(name);
            continue;
        }
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| fail(format!("expected 'key = value' or '[section]', got '{t}'")))?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(fail(format!("invalid key '{key}'")));
        }
        let section =
            current.ok_or_else(|| fail(format!("key '{key}' appears before any section")))?;
        if entries
            .iter()
            .any(|e: &Entry| e.section == section && e.key == key)
        {
            return Err(fail(format!("[{section}] {key}: given more than once")));
        }
        entries.push(Entry {
            section,
            key,
            value: value.trim(),
            line,
        });
    }
    Ok(entries)
}

struct Section<'a> {
    name: &'static str,
    keys: &'static [&'static str],
    entries: Vec<&'a Entry<'a>>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(all: &'a [Entry<'a>], name: &'static str, keys: &'static [&'static str]) -> Self {
        Section {
            name,
            keys,
            entries: all.iter().filter(|e| e.section == name).collect(),
            used: BTreeSet::new(),
        }
    }

    fn err(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            line: self.entries.iter().find(|e| e.key == key).map(|e| e.line),
            message: format!("[{}] {key}: {message}", self.name),
        }
    }

    fn raw(&mut self, key: &'static str) -> Result<Option<&'a str>, ConfigError> {
        self.used.insert(key);
        Ok(self.entries.iter().find(|e| e.key == key).map(|e| e.value))
    }

    fn string(&mut self, key: &'static str) -> Result<Option<&'a str>, ConfigError> {
        self.raw(key)
    }

    fn number(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key)? {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| self.err(key, format!("expected a number, got '{s}'"))),
        }
    }

    fn required(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        self.number(key)?
            .ok_or_else(|| self.err(key, "required key is missing".into()))
    }

    fn count(&mut self, key: &'static str) -> Result<Option<usize>, ConfigError> {
        match self.raw(key)? {
            None => Ok(None),
            Some(s) => s
                .parse::<usize>()
                .map(Some)
                .map_err(|_| self.err(key, format!("expected a non-negative integer, got '{s}'"))),
        }
    }

    fn flag(&mut self, key: &'static str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key)? {
            None => Ok(None),
            Some("true" | "yes" | "on" | "1") => Ok(Some(true)),
            Some("false" | "no" | "off" | "0") => Ok(Some(false)),
            Some(s) => Err(self.err(key, format!("expected true or false, got '{s}'"))),
        }
    }

    fn pairs(&mut self, key: &'static str) -> Result<Option<Vec<(f64, f64)>>, ConfigError> {
        let Some(s) = self.raw(key)? else {
            return Ok(None);
        };
        let parse = |item: &str| -> Option<(f64, f64)> {
            let (a, b) = item.split_once(':')?;
            Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
        };
        let items: Option<Vec<_>> = s.split(',').map(|item| parse(item.trim())).collect();
        match items {
            Some(v) if !v.is_empty() => Ok(Some(v)),
            _ => Err(self.err(key, format!("expected 'x:y, x:y, ...', got '{s}'"))),
        }
    }

    fn function(
        &mut self,
        konst: &'static str,
        table: &'static str,
    ) -> Result<Option<FnSpec>, ConfigError> {
        match (self.number(konst)?, self.pairs(table)?) {
            (Some(_), Some(_)) => Err(self.err(table, format!("conflicts with {konst}"))),
            (Some(c), None) => Ok(Some(FnSpec::Constant(c))),
            (None, Some(t)) => Ok(Some(FnSpec::Table(t))),
            (None, None) => Ok(None),
        }
    }

    fn reject_unused(&self) -> Result<(), ConfigError> {
        for e in &self.entries {
            if !self.used.contains(e.key) {
                let why = if self.keys.contains(&e.key) {
                    "not used by the selected variants"
                } else {
                    "unknown key"
                };
                return Err(self.err(e.key, why.into()));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = lex(text)?;
        if !entries.iter().any(|e| e.section == "model") {
            return Err(ConfigError {
                line: None,
                message: "missing or empty [model] section".into(),
            });
        }
        let mut model = Section::new(&entries, "model", MODEL_KEYS);
        let mut numerics = Section::new(&entries, "numerics", NUMERICS_KEYS);
        let mut output = Section::new(&entries, "output", OUTPUT_KEYS);
        let config = RunConfig {
            model: parse_model(&mut model)?,
            numerics: parse_numerics(&mut numerics)?,
            output: OutputSpec {
                dir: PathBuf::from(output.string("dir")?.unwrap_or("out")),
                svg: output.flag("svg")?.unwrap_or(false),
            },
        };
        model.reject_unused()?;
        numerics.reject_unused()?;
        output.reject_unused()?;
        // catch invalid parameter combinations at load time
        config.build_model().map_err(|message| ConfigError {
            line: None,
            message,
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn build_model(&self) -> Result<Model, String> {
        let m = &self.model;
        let operator = match &m.operator {
            OperatorSpec::Power { alpha, beta } => PhiOperator::power(*alpha, *beta),
            OperatorSpec::Sum { terms } => PhiOperator::monomial_sum(
                terms
                    .iter()
                    .map(|&(alpha, beta)| Term { alpha, beta })
                    .collect(),
            ),
            OperatorSpec::Variable { n, p, epsilon } => {
                PhiOperator::variable_exponent(*n, p.build()?, *epsilon)
            }
            OperatorSpec::Sphere { n, rho } => PhiOperator::sphere_cap(*n, *rho),
        }
        .map_err(|e| e.to_string())?;
        let gap = match m.gap {
            GapSpec::Mems { p } => GapFunction::mems(p),
        }
        .map_err(|e| e.to_string())?;
        let source = match &m.source {
            SourceSpec::Weighted { gamma, c, h: None } => SourceProfile::weighted_power(*gamma, *c),
            SourceSpec::Weighted {
                gamma,
                c,
                h: Some(knots),
            } => SourceProfile::weighted_power_with(
                *gamma,
                FnSpec::Table(knots.clone()).build()?,
                *c,
            ),
            SourceSpec::Direct { f } => Ok(SourceProfile::direct(f.build()?)),
        }
        .map_err(|e| e.to_string())?;
        Ok(Model::new(operator, gap, source))
    }

    pub fn numerics(&self) -> Numerics {
        let n = &self.numerics;
        Numerics {
            cells: n.m,
            grading: n.grading,
            tol_fix: n.tol_fix,
            tol_res: n.tol_res,
            tol_quad: n.tol_quad,
            eps_td: n.eps_td,
            g_floor: n.g_floor,
            max_iter: n.max_iter,
            ..Numerics::default()
        }
    }

    pub fn shooter(&self, k: &AsymptoticConstants) -> ShooterConfig {
        let n = &self.numerics;
        let base = match (n.t_auto, n.t_seed) {
            (false, Some(t)) => ShooterConfig::with_seed_time(t),
            _ => ShooterConfig::auto(k),
        };
        ShooterConfig {
            dt: n.dt,
            seed_tail_tol: n.seed_tail_tol,
            root_tol: n.root_tol,
            ..base
        }
    }
}

fn parse_model(s: &mut Section<'_>) -> Result<ModelSpec, ConfigError> {
    let operator = match s.string("operator")?.unwrap_or("power") {
        "power" => OperatorSpec::Power {
            alpha: s.required("alpha")?,
            beta: s.required("beta")?,
        },
        "sum" => OperatorSpec::Sum {
            terms: s
                .pairs("terms")?
                .ok_or_else(|| s.err("terms", "required for operator = sum".into()))?,
        },
        "variable" => OperatorSpec::Variable {
            n: s.required("N")?,
            p: s.function("p_const", "p_table")?.ok_or_else(|| {
                s.err(
                    "p_const",
                    "operator = variable needs p_const or p_table".into(),
                )
            })?,
            epsilon: s.number("epsilon")?.unwrap_or(1e-3),
        },
        "sphere" => {
            let n = s.required("N")?;
            if n.fract() != 0.0 || n < 1.0 {
                return Err(s.err("N", format!("expected a positive integer, got {n}")));
            }
            OperatorSpec::Sphere {
                n: n as u32,
                rho: s.required("rho")?,
            }
        }
        other => {
            return Err(s.err(
                "operator",
                format!("expected power, sum, variable or sphere, got '{other}'"),
            ))
        }
    };
    let gap = match s.string("gap")?.unwrap_or("mems") {
        "mems" => GapSpec::Mems {
            p: s.number("p")?.unwrap_or(2.0),
        },
        other => return Err(s.err("gap", format!("expected mems, got '{other}'"))),
    };
    let source = match s.string("source")?.unwrap_or("weighted") {
        "weighted" => SourceSpec::Weighted {
            gamma: s.required("gamma")?,
            c: s.number("C")?.unwrap_or(1.0),
            h: s.pairs("h_table")?,
        },
        "direct" => SourceSpec::Direct {
            f: s.function("f_const", "f_table")?.ok_or_else(|| {
                s.err("f_const", "source = direct needs f_const or f_table".into())
            })?,
        },
        other => {
            return Err(s.err(
                "source",
                format!("expected weighted or direct, got '{other}'"),
            ))
        }
    };
    Ok(ModelSpec {
        operator,
        gap,
        source,
    })
}

fn parse_numerics(s: &mut Section<'_>) -> Result<NumericsSpec, ConfigError> {
    let d = Numerics::default();
    let spec = NumericsSpec {
        m: s.count("M")?.unwrap_or(d.cells),
        grading: s.number("grading")?.unwrap_or(d.grading),
        tol_fix: s.number("tol_fix")?.unwrap_or(d.tol_fix),
        tol_res: s.number("tol_res")?.unwrap_or(d.tol_res),
        tol_quad: s.number("tol_quad")?.unwrap_or(d.tol_quad),
        eps_td: s.number("eps_td")?.unwrap_or(d.eps_td),
        g_floor: s.number("g_floor")?.unwrap_or(d.g_floor),
        max_iter: s.count("max_iter")?.unwrap_or(d.max_iter),
        dt: s.number("dt")?.unwrap_or(1e-3),
        t_auto: s.flag("T_auto")?.unwrap_or(true),
        t_seed: s.number("T")?,
        seed_tail_tol: s
            .number("seed_tail_tol")?
            .unwrap_or(touchdown_core::shooter::DEFAULT_SEED_TAIL),
        root_tol: s.number("root_tol")?.unwrap_or(1e-10),
    };
    if spec.m == 0 {
        return Err(s.err("M", "must be at least 1".into()));
    }
    if !(spec.dt > 0.0) {
        return Err(s.err("dt", format!("must be positive, got {}", spec.dt)));
    }
    if !spec.t_auto && spec.t_seed.is_none() {
        return Err(s.err("T_auto", "T_auto = false needs an explicit T".into()));
    }
    Ok(spec)
}
