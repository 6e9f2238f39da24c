//! Experiment configuration: a TOML document checked against a fixed schema
//! before anything runs. Every violation is reported with its key path.

use std::fmt;

use serde::Serialize;
use toml::{Table, Value};

use crate::classification::SeriesConfig;
use crate::examples::builtin_names;
use crate::simulate::{TailCorrection, Truncation};
use crate::spectral::FieldKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted path to the offending key (empty for document-level errors).
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Float,
    Str,
    Bool,
    IntList,
    FloatList,
    IntMatrix,
    FloatMatrix,
    /// An integer or the string "adaptive".
    Truncation,
    Table(&'static [Field]),
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Int => "an integer",
            Ty::Float => "a number",
            Ty::Str => "a string",
            Ty::Bool => "a boolean",
            Ty::IntList => "an array of integers",
            Ty::FloatList => "an array of numbers",
            Ty::IntMatrix => "an array of integer arrays",
            Ty::FloatMatrix => "an array of number arrays",
            Ty::Truncation => "\"adaptive\" or an integer",
            Ty::Table(_) => "a table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Field {
    name: &'static str,
    ty: Ty,
    required: bool,
}

const fn req(name: &'static str, ty: Ty) -> Field {
    Field { name, ty, required: true }
}

const fn opt(name: &'static str, ty: Ty) -> Field {
    Field { name, ty, required: false }
}

const PARAMS: &[Field] = &[opt("m", Ty::Int), opt("width", Ty::Int), opt("radius", Ty::Int), opt("states", Ty::Int)];

const TABLE: &[Field] = &[req("forward", Ty::IntMatrix), opt("weight", Ty::FloatMatrix), opt("mu", Ty::FloatList), req("f0", Ty::FloatList)];

const FAMILY: &[Field] = &[
    opt("example", Ty::Str),
    req("alpha", Ty::Float),
    req("kind", Ty::Str),
    opt("params", Ty::Table(PARAMS)),
    opt("table", Ty::Table(TABLE)),
];

const CLASSIFY: &[Field] = &[
    opt("horizon", Ty::Int),
    opt("powers", Ty::IntList),
    opt("t0_radius", Ty::Int),
    opt("wandering", Ty::Bool),
    opt("conv_tail_tol", Ty::Float),
    opt("conv_exponent", Ty::Float),
    opt("div_exponent", Ty::Float),
    opt("growth_ratio", Ty::Float),
    opt("div_threshold", Ty::Float),
    opt("min_prefix_frac", Ty::Float),
    opt("greedy_states", Ty::Int),
];

const SIMULATE: &[Field] = &[
    req("T", Ty::Int),
    req("n_paths", Ty::Int),
    opt("truncation", Ty::Truncation),
    opt("M", Ty::Int),
    opt("tail", Ty::Str),
];

const DIAGNOSE: &[Field] = &[
    opt("T_list", Ty::IntList),
    opt("K", Ty::FloatList),
    opt("eps", Ty::Float),
    opt("mixing_terms", Ty::Int),
    opt("n_paths", Ty::Int),
    opt("T", Ty::Int),
    opt("levels", Ty::FloatList),
];

const ROOT: &[Field] = &[
    req("seed", Ty::Int),
    opt("output", Ty::Str),
    opt("expectation", Ty::Str),
    req("family", Ty::Table(FAMILY)),
    opt("classify", Ty::Table(CLASSIFY)),
    opt("simulate", Ty::Table(SIMULATE)),
    opt("diagnose", Ty::Table(DIAGNOSE)),
];

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn suggestion(key: &str, fields: &[Field]) -> Option<&'static str> {
    fields
        .iter()
        .map(|f| (f.name, strsim::normalized_damerau_levenshtein(&key.to_lowercase(), &f.name.to_lowercase())))
        .filter(|(_, score)| *score >= 0.5)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(name, _)| name)
}

fn type_ok(ty: Ty, v: &Value) -> bool {
    let all = |v: &Value, f: fn(&Value) -> bool| v.as_array().is_some_and(|a| a.iter().all(f));
    let int = |v: &Value| v.is_integer();
    let num = |v: &Value| v.is_integer() || v.is_float();
    match ty {
        Ty::Int => int(v),
        Ty::Float => num(v),
        Ty::Str => v.is_str(),
        Ty::Bool => v.is_bool(),
        Ty::IntList => all(v, int),
        Ty::FloatList => all(v, num),
        Ty::IntMatrix => all(v, |r| r.as_array().is_some_and(|a| a.iter().all(|x| x.is_integer()))),
        Ty::FloatMatrix => all(v, |r| r.as_array().is_some_and(|a| a.iter().all(|x| x.is_integer() || x.is_float()))),
        Ty::Truncation => int(v) || v.as_str() == Some("adaptive"),
        Ty::Table(_) => v.is_table(),
    }
}

fn walk(table: &Table, fields: &[Field], prefix: &str, errors: &mut Vec<ConfigError>) {
    for (key, value) in table {
        let path = join(prefix, key);
        match fields.iter().find(|f| f.name == key) {
            None => {
                let message = match suggestion(key, fields) {
                    Some(s) => format!("unknown key `{key}` (did you mean `{s}`?)"),
                    None => format!("unknown key `{key}`"),
                };
                errors.push(ConfigError { path, message });
            }
            Some(f) if !type_ok(f.ty, value) => {
                errors.push(ConfigError { path, message: format!("expected {}, found {}", f.ty.name(), value.type_str()) });
            }
            Some(f) => {
                if let (Ty::Table(sub), Some(t)) = (f.ty, value.as_table()) {
                    walk(t, sub, &path, errors);
                }
            }
        }
    }
    for f in fields.iter().filter(|f| f.required) {
        if !table.contains_key(f.name) {
            errors.push(ConfigError { path: join(prefix, f.name), message: "missing required key".into() });
        }
    }
}

/// Where the family comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FamilySource {
    Example { name: String, params: ExampleParams },
    Table { forward: Vec<Vec<i64>>, weight: Option<Vec<Vec<f64>>>, mu: Option<Vec<f64>>, f0: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExampleParams {
    pub m: Option<usize>,
    pub width: Option<usize>,
    pub radius: Option<i64>,
    pub states: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyConfig {
    pub source: FamilySource,
    pub alpha: f64,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    /// Overrides the family's default number of terms.
    pub horizon: Option<usize>,
    pub series: SeriesConfig,
    pub powers: Option<Vec<u32>>,
    pub t0_radius: Option<i64>,
    pub wandering: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateConfig {
    pub t: u32,
    pub n_paths: usize,
    pub truncation: Truncation,
    pub m: usize,
    pub tail: TailCorrection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseConfig {
    pub t_list: Option<Vec<u32>>,
    pub k: (f64, f64),
    pub eps: f64,
    pub mixing_terms: usize,
    pub n_paths: usize,
    pub t: Option<u32>,
    /// Marginal probability levels of the event thresholds.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Vanishes,
    Persists,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: String,
    pub expectation: Option<Expectation>,
    pub family: FamilyConfig,
    pub classify: ClassifyConfig,
    pub simulate: Option<SimulateConfig>,
    pub diagnose: DiagnoseConfig,
}

/// Typed reads from a table whose types were already checked.
struct Reader<'a> {
    table: Option<&'a Table>,
    prefix: &'static str,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> Reader<'a> {
    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn fail(&mut self, key: &str, message: impl Into<String>) {
        self.errors.push(ConfigError { path: join(self.prefix, key), message: message.into() });
    }

    fn float(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
    }

    fn int(&self, key: &str) -> Option<i64> {
        self.get(key).and_then(Value::as_integer)
    }

    fn str(&self, key: &str) -> Option<&'a str> {
        self.get(key).and_then(Value::as_str)
    }

    fn positive(&mut self, key: &str, min: i64) -> Option<i64> {
        let v = self.int(key)?;
        if v < min {
            self.fail(key, format!("must be at least {min}, got {v}"));
            return None;
        }
        Some(v)
    }

    fn floats(&self, key: &str) -> Option<Vec<f64>> {
        self.get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().map(|v| v.as_float().unwrap_or_else(|| v.as_integer().unwrap_or(0) as f64)).collect())
    }

    fn ints(&self, key: &str) -> Option<Vec<i64>> {
        self.get(key).and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_integer).collect())
    }

    fn matrix<T>(&self, key: &str, f: fn(&Value) -> T) -> Option<Vec<Vec<T>>> {
        self.get(key)
            .and_then(Value::as_array)
            .map(|rows| rows.iter().map(|r| r.as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default()).collect())
    }
}

fn parse_kind(r: &mut Reader) -> Option<FieldKind> {
    match r.str("kind")? {
        "max-stable" => Some(FieldKind::MaxStable),
        "sum-stable" => Some(FieldKind::SumStable),
        other => {
            r.fail("kind", format!("expected \"max-stable\" or \"sum-stable\", found \"{other}\""));
            None
        }
    }
}

fn parse_family(table: Option<&Table>, errors: &mut Vec<ConfigError>) -> Option<FamilyConfig> {
    let mut r = Reader { table, prefix: "family", errors };
    let kind = parse_kind(&mut r);
    let alpha = r.float("alpha");
    if let (Some(kind), Some(alpha)) = (kind, alpha) {
        match kind {
            FieldKind::SumStable if !(alpha > 0.0 && alpha < 2.0) => {
                r.fail("alpha", format!("sum-stable fields need 0 < alpha < 2, got {alpha}"));
            }
            FieldKind::MaxStable if !(alpha > 0.0 && alpha.is_finite()) => {
                r.fail("alpha", format!("max-stable fields need alpha > 0, got {alpha}"));
            }
            _ => {}
        }
    }
    let example = r.str("example");
    let tab = r.get("table").and_then(Value::as_table);
    let source = match (example, tab) {
        (Some(_), Some(_)) => {
            r.fail("table", "give either `example` or `table`, not both");
            None
        }
        (None, None) => {
            r.fail("example", "missing: give a built-in `example` name or an explicit `table`");
            None
        }
        (Some(name), None) => {
            if !builtin_names().iter().any(|(n, _)| *n == name) {
                let names: Vec<&str> = builtin_names().iter().map(|(n, _)| *n).collect();
                let best = names
                    .iter()
                    .map(|n| (*n, strsim::normalized_damerau_levenshtein(name, n)))
                    .filter(|(_, s)| *s >= 0.5)
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                let hint = best.map(|(n, _)| format!(" (did you mean `{n}`?)")).unwrap_or_default();
                r.fail("example", format!("unknown example `{name}`{hint}; known: {}", names.join(", ")));
                None
            } else {
                let mut p = Reader { table: r.get("params").and_then(Value::as_table), prefix: "family.params", errors: r.errors };
                let params = ExampleParams {
                    m: p.positive("m", 1).map(|v| v as usize),
                    width: p.positive("width", 1).map(|v| v as usize),
                    radius: p.positive("radius", 1),
                    states: p.positive("states", 1).map(|v| v as usize),
                };
                Some(FamilySource::Example { name: name.to_string(), params })
            }
        }
        (None, Some(t)) => {
            if r.get("params").is_some() {
                r.fail("params", "`params` only applies to built-in examples");
            }
            let t = Reader { table: Some(t), prefix: "family.table", errors: r.errors };
            Some(FamilySource::Table {
                forward: t.matrix("forward", |v| v.as_integer().unwrap_or(-1)).unwrap_or_default(),
                weight: t.matrix("weight", |v| v.as_float().unwrap_or_else(|| v.as_integer().unwrap_or(0) as f64)),
                mu: t.floats("mu"),
                f0: t.floats("f0").unwrap_or_default(),
            })
        }
    };
    Some(FamilyConfig { source: source?, alpha: alpha?, kind: kind? })
}

fn parse_classify(table: Option<&Table>, errors: &mut Vec<ConfigError>) -> ClassifyConfig {
    let mut r = Reader { table, prefix: "classify", errors };
    let d = SeriesConfig::default();
    let horizon = r.positive("horizon", 8).map(|v| v as usize);
    let series = SeriesConfig {
        horizon: horizon.unwrap_or(d.horizon),
        conv_tail_tol: r.float("conv_tail_tol").unwrap_or(d.conv_tail_tol),
        conv_exponent: r.float("conv_exponent").unwrap_or(d.conv_exponent),
        div_exponent: r.float("div_exponent").unwrap_or(d.div_exponent),
        growth_ratio: r.float("growth_ratio").unwrap_or(d.growth_ratio),
        div_threshold: r.float("div_threshold").or(d.div_threshold),
        min_prefix_frac: r.float("min_prefix_frac").unwrap_or(d.min_prefix_frac),
        greedy_states: r.positive("greedy_states", 1).map_or(d.greedy_states, |v| v as usize),
    };
    let powers = r.ints("powers");
    if powers.as_ref().is_some_and(|p| p.is_empty() || p.iter().any(|&x| !(1..=8).contains(&x))) {
        r.fail("powers", "need a nonempty list of powers between 1 and 8");
    }
    ClassifyConfig {
        horizon,
        series,
        powers: powers.map(|p| p.into_iter().map(|x| x.clamp(1, 8) as u32).collect()),
        t0_radius: r.positive("t0_radius", 0),
        wandering: r.get("wandering").and_then(Value::as_bool).unwrap_or(true),
    }
}

fn parse_simulate(table: Option<&Table>, kind: Option<FieldKind>, errors: &mut Vec<ConfigError>) -> Option<SimulateConfig> {
    table?;
    let mut r = Reader { table, prefix: "simulate", errors };
    let t = r.positive("T", 1);
    let n_paths = r.positive("n_paths", 1);
    let truncation = match r.get("truncation") {
        None => Truncation::Adaptive,
        Some(v) => match v.as_integer() {
            Some(m) if m >= 1 => Truncation::Fixed(m as usize),
            Some(m) => {
                r.fail("truncation", format!("atom count must be positive, got {m}"));
                Truncation::Adaptive
            }
            None => Truncation::Adaptive,
        },
    };
    if kind == Some(FieldKind::SumStable) && matches!(truncation, Truncation::Fixed(_)) {
        r.fail("truncation", "sum-stable runs take the series length from `M`");
    }
    let m = r.positive("M", 10).map_or(2000, |v| v as usize);
    let tail = match r.str("tail") {
        None | Some("gaussian") => TailCorrection::Gaussian,
        Some("none") => TailCorrection::None,
        Some(other) => {
            r.fail("tail", format!("expected \"gaussian\" or \"none\", found \"{other}\""));
            TailCorrection::Gaussian
        }
    };
    Some(SimulateConfig { t: t? as u32, n_paths: n_paths? as usize, truncation, m, tail })
}

fn parse_diagnose(table: Option<&Table>, errors: &mut Vec<ConfigError>) -> DiagnoseConfig {
    let mut r = Reader { table, prefix: "diagnose", errors };
    let t_list = r.ints("T_list");
    if let Some(l) = &t_list {
        if l.is_empty() || l[0] < 1 || l.windows(2).any(|w| w[1] <= w[0]) {
            r.fail("T_list", "horizons must be positive and strictly increasing");
        }
    }
    let k = match r.floats("K") {
        None => (0.5, 2.0),
        Some(v) if v.len() == 2 && v[0] > 0.0 && v[0] <= v[1] => (v[0], v[1]),
        Some(_) => {
            r.fail("K", "need [k_lo, k_hi] with 0 < k_lo ≤ k_hi");
            (0.5, 2.0)
        }
    };
    let eps = r.float("eps").unwrap_or(0.5);
    if !(eps > 0.0) {
        r.fail("eps", "must be positive");
    }
    let levels = r.floats("levels").unwrap_or_else(|| vec![0.25, 0.5, 0.75]);
    if levels.is_empty() || levels.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        r.fail("levels", "need probabilities strictly between 0 and 1");
    }
    DiagnoseConfig {
        t_list: t_list.map(|l| l.into_iter().map(|x| x.max(1) as u32).collect()),
        k,
        eps,
        mixing_terms: r.positive("mixing_terms", 8).map_or(64, |v| v as usize),
        n_paths: r.positive("n_paths", 2).map_or(2000, |v| v as usize),
        t: r.positive("T", 1).map(|v| v as u32),
        levels,
    }
}

/// Parses and validates a configuration, returning every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| vec![ConfigError { path: String::new(), message: format!("syntax error: {e}") }])?;
    let mut errors = Vec::new();
    walk(&doc, ROOT, "", &mut errors);
    let mut root = Reader { table: Some(&doc), prefix: "", errors: &mut errors };
    let seed = root.int("seed");
    if seed.is_some_and(|s| s < 0) {
        root.fail("seed", "must be nonnegative");
    }
    let output = root.str("output").unwrap_or("stablefield-out").to_string();
    let expectation = match root.str("expectation") {
        None => None,
        Some("vanishes") => Some(Expectation::Vanishes),
        Some("persists") => Some(Expectation::Persists),
        Some(other) => {
            root.fail("expectation", format!("expected \"vanishes\" or \"persists\", found \"{other}\""));
            None
        }
    };
    let section = |name: &str| doc.get(name).and_then(Value::as_table);
    let family = parse_family(section("family"), &mut errors);
    let classify = parse_classify(section("classify"), &mut errors);
    let simulate = parse_simulate(section("simulate"), family.as_ref().map(|f| f.kind), &mut errors);
    let diagnose = parse_diagnose(section("diagnose"), &mut errors);
    if !errors.is_empty() {
        // the value checks repeat some structural errors; keep one per key
        let mut seen = std::collections::HashSet::new();
        errors.retain(|e| seen.insert(e.path.clone()));
        return Err(errors);
    }
    Ok(ExperimentConfig {
        seed: seed.unwrap_or(0) as u64,
        output,
        expectation,
        family: family.expect("family validated"),
        classify,
        simulate,
        diagnose,
    })
}
