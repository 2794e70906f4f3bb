//! JSON run configuration. Validation keeps going after the first problem
//! and reports every error it finds.

use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::chain::{make_basis, BasisKind, ChainSpec, ChannelPotential, Entry, TransformationMatrix};
use crate::scattering::KvGParameters;
use crate::transform::Spacing;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Potential,
    Solution,
    Smatrix,
    Kvg,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Potential => "potential",
            Self::Solution => "solution",
            Self::Smatrix => "smatrix",
            Self::Kvg => "kvg",
            Self::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Potential, Self::Solution, Self::Smatrix, Self::Kvg, Self::Verify].into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Grid fields left unset fall back to per-command defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridConfig {
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub count: Option<usize>,
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tolerances {
    pub realness: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub chain: Option<ChainSpec>,
    pub solution: Option<Vec<Entry>>,
    pub grid: GridConfig,
    pub k_list: Option<Vec<f64>>,
    pub kvg: Option<KvGParameters>,
    /// Asymptotic angular momenta for the S-matrix solver; read off the
    /// potential tail when absent.
    pub angular_momenta: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub energies: Option<usize>,
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const TOP_LEVEL: [&str; 14] = [
    "command", "chain", "solution", "grid", "k", "k1", "k2", "chi", "l", "output", "tolerances", "seed", "chains", "energies",
];

/// Parses a configuration whose `command` field is mandatory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let cfg = parse_inner(text, None)?;
    if cfg.command.is_none() {
        return Err(ConfigErrors(vec!["command: missing".into()]));
    }
    Ok(cfg)
}

/// Parses a configuration for `command`; a `command` field in the file must
/// agree with it.
pub fn parse_config_for(text: &str, command: Command) -> Result<RunConfig, ConfigErrors> {
    let mut cfg = parse_inner(text, Some(command))?;
    cfg.command = Some(command);
    Ok(cfg)
}

struct Ctx {
    errors: Vec<String>,
}

impl Ctx {
    fn err(&mut self, path: &str, msg: impl fmt::Display) {
        self.errors.push(if path.is_empty() { msg.to_string() } else { format!("{path}: {msg}") });
    }

    fn number(&mut self, path: &str, v: &Value) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(path, "expected a finite number");
                None
            }
        }
    }

    fn positive(&mut self, path: &str, v: &Value) -> Option<f64> {
        let x = self.number(path, v)?;
        if x <= 0.0 {
            self.err(path, format!("must be positive, got {x}"));
            return None;
        }
        Some(x)
    }

    fn count(&mut self, path: &str, v: &Value) -> Option<usize> {
        match v.as_u64() {
            Some(x) => Some(x as usize),
            None => {
                self.err(path, "expected a non-negative integer");
                None
            }
        }
    }

    /// A real number or a `[re, im]` pair.
    fn complex(&mut self, path: &str, v: &Value) -> Option<Complex64> {
        match v {
            Value::Array(a) if a.len() == 2 => {
                let re = self.number(&format!("{path}[0]"), &a[0]);
                let im = self.number(&format!("{path}[1]"), &a[1]);
                Some(Complex64::new(re?, im?))
            }
            Value::Number(_) => self.number(path, v).map(|x| Complex64::new(x, 0.0)),
            _ => {
                self.err(path, "expected a number or a [re, im] pair");
                None
            }
        }
    }

    fn object<'a>(&mut self, path: &str, v: &'a Value, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(&join(path, key), "unknown field");
            }
        }
        Some(map)
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn parse_inner(text: &str, expected: Option<Command>) -> Result<RunConfig, ConfigErrors> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        ConfigErrors(vec![format!("syntax error at line {}, column {}: {e}", e.line(), e.column())])
    })?;
    let mut ctx = Ctx { errors: Vec::new() };
    let mut cfg = RunConfig::default();
    let Some(map) = ctx.object("", &root, &TOP_LEVEL) else {
        return Err(ConfigErrors(ctx.errors));
    };

    if let Some(v) = map.get("command") {
        match v.as_str().and_then(Command::parse) {
            Some(c) => {
                if let Some(e) = expected.filter(|&e| e != c) {
                    ctx.err("command", format!("config is for '{c}' but '{e}' was requested"));
                }
                cfg.command = Some(c);
            }
            None => ctx.err("command", "expected one of potential, solution, smatrix, kvg, verify"),
        }
    }
    let command = expected.or(cfg.command);

    let background = map.get("chain").and_then(|c| parse_chain(&mut ctx, c, &mut cfg));
    if let Some(v) = map.get("solution") {
        match (&background, v.as_array()) {
            (Some(bg), Some(items)) => {
                if items.len() != bg.len() {
                    ctx.err("solution", format!("needs {} entries, one per channel, got {}", bg.len(), items.len()));
                } else {
                    let entries: Vec<Option<Entry>> = items
                        .iter()
                        .enumerate()
                        .map(|(i, e)| parse_entry(&mut ctx, &format!("solution[{i}]"), e, &bg[i]))
                        .collect();
                    if entries.iter().all(Option::is_some) {
                        cfg.solution = Some(entries.into_iter().flatten().collect());
                    }
                }
            }
            (None, _) => ctx.err("solution", "needs a chain to fix the channels"),
            (_, None) => ctx.err("solution", "expected an array of entries"),
        }
    }

    if let Some(g) = map.get("grid") {
        parse_grid(&mut ctx, g, &mut cfg.grid);
    }

    if let Some(v) = map.get("k") {
        match v.as_array() {
            Some(items) => {
                let ks: Vec<Option<f64>> =
                    items.iter().enumerate().map(|(i, k)| ctx.positive(&format!("k[{i}]"), k)).collect();
                if ks.iter().all(Option::is_some) {
                    cfg.k_list = Some(ks.into_iter().flatten().collect());
                }
            }
            None => ctx.err("k", "expected an array of wavenumbers"),
        }
    }

    let kvg: Vec<Option<f64>> = ["k1", "k2", "chi"].iter().map(|k| map.get(*k).and_then(|v| ctx.positive(k, v))).collect();
    let given = ["k1", "k2", "chi"].iter().filter(|k| map.contains_key(**k)).count();
    if given > 0 {
        if given < 3 {
            ctx.err("", "k1, k2 and chi must be given together");
        } else if let [Some(k1), Some(k2), Some(chi)] = kvg[..] {
            match KvGParameters::new(k1, k2, chi) {
                Ok(p) => cfg.kvg = Some(p),
                Err(e) => ctx.err("", e),
            }
        }
    }

    if let Some(v) = map.get("l") {
        match v.as_array() {
            Some(items) => {
                let ls: Vec<Option<usize>> =
                    items.iter().enumerate().map(|(i, l)| ctx.count(&format!("l[{i}]"), l)).collect();
                if ls.iter().all(Option::is_some) {
                    cfg.angular_momenta = Some(ls.into_iter().flatten().map(|l| l as u32).collect());
                }
            }
            None => ctx.err("l", "expected an array of angular momenta"),
        }
    }

    if let Some(o) = map.get("output") {
        if let Some(om) = ctx.object("output", o, &["path", "format"]) {
            if let Some(p) = om.get("path") {
                match p.as_str() {
                    Some(s) => cfg.out = Some(PathBuf::from(s)),
                    None => ctx.err("output.path", "expected a string"),
                }
            }
            if let Some(f) = om.get("format") {
                match f.as_str() {
                    Some("csv") => cfg.format = Some(Format::Csv),
                    Some("json") => cfg.format = Some(Format::Json),
                    _ => ctx.err("output.format", "expected \"csv\" or \"json\""),
                }
            }
        }
    }

    if let Some(t) = map.get("tolerances") {
        if let Some(tm) = ctx.object("tolerances", t, &["realness", "step"]) {
            cfg.tolerances.realness = tm.get("realness").and_then(|v| ctx.positive("tolerances.realness", v));
            cfg.tolerances.step = tm.get("step").and_then(|v| ctx.positive("tolerances.step", v));
        }
    }

    cfg.seed = map.get("seed").and_then(|v| ctx.count("seed", v)).map(|s| s as u64);
    cfg.chains = map.get("chains").and_then(|v| ctx.count("chains", v));
    cfg.energies = map.get("energies").and_then(|v| ctx.count("energies", v));

    match command {
        Some(Command::Potential | Command::Solution) if !map.contains_key("chain") => ctx.err("chain", "missing"),
        Some(Command::Smatrix) if !map.contains_key("chain") && given == 0 => {
            ctx.err("chain", "missing; give a chain or k1, k2, chi")
        }
        _ => {}
    }
    if command == Some(Command::Solution) && !map.contains_key("solution") {
        ctx.err("solution", "missing");
    }
    if command == Some(Command::Smatrix) && cfg.k_list.as_ref().map_or(!map.contains_key("k"), Vec::is_empty) {
        ctx.err("k", "k-list required");
    }

    if ctx.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(ctx.errors))
    }
}

fn parse_grid(ctx: &mut Ctx, v: &Value, grid: &mut GridConfig) {
    let Some(g) = ctx.object("grid", v, &["r_min", "r_max", "count", "spacing"]) else {
        return;
    };
    if let Some(x) = g.get("r_min") {
        if let Some(r) = ctx.number("grid.r_min", x) {
            if r <= 0.0 {
                ctx.err("grid.r_min", format!("nonpositive grid: r_min = {r}, the potentials are singular at the origin"));
            } else {
                grid.r_min = Some(r);
            }
        }
    }
    if let Some(x) = g.get("r_max") {
        if let Some(r) = ctx.number("grid.r_max", x) {
            if r <= 0.0 {
                ctx.err("grid.r_max", format!("nonpositive grid: r_max = {r}"));
            } else {
                grid.r_max = Some(r);
            }
        }
    }
    if let (Some(a), Some(b)) = (grid.r_min, grid.r_max) {
        if b <= a {
            ctx.err("grid", format!("r_max = {b} must exceed r_min = {a}"));
        }
    }
    if let Some(x) = g.get("count") {
        match ctx.count("grid.count", x) {
            Some(n) if n < 2 => ctx.err("grid.count", "needs at least 2 points"),
            n => grid.count = n,
        }
    }
    if let Some(x) = g.get("spacing") {
        match x.as_str() {
            Some("linear") => grid.spacing = Some(Spacing::Linear),
            Some("log") => grid.spacing = Some(Spacing::Log),
            _ => ctx.err("grid.spacing", "expected \"linear\" or \"log\""),
        }
    }
}

/// Returns the channel potentials once the chain header parses; the chain
/// itself is stored in `cfg` only if every link is valid.
fn parse_chain(ctx: &mut Ctx, v: &Value, cfg: &mut RunConfig) -> Option<Vec<ChannelPotential>> {
    let c = ctx.object("chain", v, &["n", "m", "l", "links"])?;
    let n = match c.get("n") {
        Some(x) => ctx.count("chain.n", x),
        None => {
            ctx.err("chain.n", "missing");
            None
        }
    };
    let n = match n {
        Some(0) => {
            ctx.err("chain.n", "needs at least one channel");
            None
        }
        n => n,
    }?;
    let background: Vec<ChannelPotential> = match c.get("l").map(|l| (l, l.as_array())) {
        None => vec![ChannelPotential::Free; n],
        Some((_, Some(items))) if items.len() == n => items
            .iter()
            .enumerate()
            .map(|(i, l)| match ctx.count(&format!("chain.l[{i}]"), l) {
                Some(0) | None => ChannelPotential::Free,
                Some(l) => ChannelPotential::Centrifugal(l as u32),
            })
            .collect(),
        Some(_) => {
            ctx.err("chain.l", format!("expected {n} angular momenta"));
            vec![ChannelPotential::Free; n]
        }
    };
    let m = c.get("m").and_then(|x| ctx.count("chain.m", x));
    let links_v = match c.get("links").and_then(Value::as_array) {
        Some(l) if !l.is_empty() => l,
        _ => {
            ctx.err("chain.links", "expected a non-empty array of links");
            return Some(background);
        }
    };
    let any_singular = links_v.iter().any(|l| l.get("kind").and_then(Value::as_str) == Some("singular"));
    let m = match m {
        Some(m) if any_singular && m >= n => {
            ctx.err("chain.m", format!("m must be < n (m = {m}, n = {n})"));
            None
        }
        Some(0) => {
            ctx.err("chain.m", "m must be at least 1");
            None
        }
        Some(m) => Some(m),
        None if any_singular => {
            ctx.err("chain.m", "missing; singular links need the subsystem size");
            None
        }
        None => Some(1.min(n)),
    };

    let mut seen_regular: Option<usize> = None;
    let mut links = Vec::new();
    let before = ctx.errors.len();
    for (idx, lv) in links_v.iter().enumerate() {
        let path = format!("chain.links[{idx}]");
        let Some(l) = ctx.object(&path, lv, &["kind", "lambda", "entries"]) else {
            continue;
        };
        let singular = match l.get("kind").and_then(Value::as_str) {
            Some("singular") => true,
            Some("regular") => false,
            _ => {
                ctx.err(&join(&path, "kind"), "expected \"singular\" or \"regular\"");
                continue;
            }
        };
        if singular {
            if let Some(r) = seen_regular {
                ctx.err(
                    &path,
                    format!("singular link follows the regular link chain.links[{r}]; singular links must come first"),
                );
            }
        } else if seen_regular.is_none() {
            seen_regular = Some(idx);
        }
        let size = if singular { m } else { Some(n) };
        let Some(size) = size else { continue };
        let rows = parse_block(ctx, &join(&path, "entries"), l.get("entries"), size, &background);
        let lambda = match l.get("lambda") {
            Some(x) => ctx.complex(&join(&path, "lambda"), x),
            None => rows.as_ref().and_then(|r| first_spectral_value(r)).or_else(|| {
                ctx.err(&join(&path, "lambda"), "missing and no basis entry to infer it from");
                None
            }),
        };
        if let (Some(rows), Some(lambda)) = (rows, lambda) {
            let built = if singular {
                TransformationMatrix::singular(rows, n, lambda)
            } else {
                TransformationMatrix::regular(rows, lambda)
            };
            match built {
                Ok(t) => links.push(t),
                Err(e) => ctx.err(&path, e),
            }
        }
    }
    if ctx.errors.len() == before {
        if let Some(m) = m {
            match ChainSpec::new(m, links, background.clone()) {
                Ok(chain) => cfg.chain = Some(chain),
                Err(e) => ctx.err("chain", e),
            }
        }
    }
    Some(background)
}

fn first_spectral_value(rows: &[Vec<Entry>]) -> Option<Complex64> {
    rows.iter().flatten().find_map(|e| match e {
        Entry::Sum(terms) => terms.first().map(|(_, b)| b.spectral_value()),
        Entry::Const(_) => None,
    })
}

fn parse_block(
    ctx: &mut Ctx,
    path: &str,
    v: Option<&Value>,
    size: usize,
    background: &[ChannelPotential],
) -> Option<Vec<Vec<Entry>>> {
    let Some(rows) = v.and_then(Value::as_array) else {
        ctx.err(path, format!("expected a {size}x{size} array of entries"));
        return None;
    };
    if rows.len() != size {
        ctx.err(path, format!("expected {size} rows, got {}", rows.len()));
        return None;
    }
    let mut out = Vec::with_capacity(size);
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        let row_path = format!("{path}[{i}]");
        match row.as_array() {
            Some(cells) if cells.len() == size => {
                let parsed: Vec<Option<Entry>> = cells
                    .iter()
                    .enumerate()
                    .map(|(j, e)| parse_entry(ctx, &format!("{row_path}[{j}]"), e, &background[i]))
                    .collect();
                ok &= parsed.iter().all(Option::is_some);
                out.push(parsed.into_iter().flatten().collect());
            }
            _ => {
                ctx.err(&row_path, format!("expected {size} entries"));
                ok = false;
            }
        }
    }
    ok.then_some(out)
}

/// A constant (number or `[re, im]`), one basis term
/// `{"basis", "k", "coeff"}`, or `{"sum": [terms]}`.
fn parse_entry(ctx: &mut Ctx, path: &str, v: &Value, channel: &ChannelPotential) -> Option<Entry> {
    match v {
        Value::Number(_) | Value::Array(_) => ctx.complex(path, v).map(Entry::Const),
        Value::Object(o) if o.contains_key("sum") => {
            ctx.object(path, v, &["sum"])?;
            let Some(items) = o["sum"].as_array() else {
                ctx.err(&join(path, "sum"), "expected an array of terms");
                return None;
            };
            let terms: Vec<Option<(Complex64, _)>> = items
                .iter()
                .enumerate()
                .map(|(i, t)| parse_term(ctx, &format!("{path}.sum[{i}]"), t, channel))
                .collect();
            if terms.is_empty() {
                ctx.err(&join(path, "sum"), "needs at least one term");
                return None;
            }
            terms.iter().all(Option::is_some).then(|| Entry::Sum(terms.into_iter().flatten().collect()))
        }
        Value::Object(_) => parse_term(ctx, path, v, channel).map(|t| Entry::Sum(vec![t])),
        _ => {
            ctx.err(path, "expected a constant or a basis term");
            None
        }
    }
}

fn parse_term(
    ctx: &mut Ctx,
    path: &str,
    v: &Value,
    channel: &ChannelPotential,
) -> Option<(Complex64, crate::chain::BasisSolution)> {
    let o = ctx.object(path, v, &["basis", "k", "coeff"])?;
    let kind = match o.get("basis").and_then(Value::as_str) {
        Some(name) => match BasisKind::parse(name).filter(|&k| k != BasisKind::Custom) {
            Some(k) => Some(k),
            None => {
                ctx.err(
                    &join(path, "basis"),
                    format!("unknown basis '{name}'; expected jost_s, jost_d, regular_s, regular_d, exp, sinh or cosh"),
                );
                None
            }
        },
        None => {
            ctx.err(&join(path, "basis"), "missing");
            None
        }
    };
    let k = match o.get("k") {
        Some(x) => ctx.complex(&join(path, "k"), x),
        None => {
            ctx.err(&join(path, "k"), "missing");
            None
        }
    };
    let coeff = match o.get("coeff") {
        Some(x) => ctx.complex(&join(path, "coeff"), x),
        None => Some(Complex64::new(1.0, 0.0)),
    };
    let (kind, k, coeff) = (kind?, k?, coeff?);
    match make_basis(kind, k, channel.clone()) {
        Ok(b) => Some((coeff, b)),
        Err(e) => {
            ctx.err(path, e);
            None
        }
    }
}
