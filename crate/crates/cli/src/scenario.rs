//! Typed scenario files.
//!
//! ```text
//! [metric]
//! rank = 2
//! mode = product              # or fibration
//! h11 = "1 + 0.1*(x1*x2 + y1*y2)"
//! h12 = "0.05*i*(x1*y2 + y1*x2)"   # h21 defaults to conj(h12)
//! h22 = "1"
//!
//! [patch]
//! x1 = -0.5, 0.5              # also y1, x2, y2; default 0, 1
//! periodic = none             # none | z1 | z2 | both
//! margin = 0.01
//!
//! [grid]
//! resolution = 8x8x8x8        # or a single number
//! refinements = 4, 6, 8       # convergence table grids
//! fd_step = 1e-3              # relative to the patch width
//! tolerance = 1e-8
//!
//! [run]
//! commands = inspect, verify
//! convention = both           # paper | chernweil | both
//! points = "0 0 0 0; 0.1 0.2 0.3 0.4"
//! samples = 4                 # random points when `points` is absent
//! seed = 7
//!
//! [lattice]
//! form = "1 0; 0 -1"
//! class.H = "2 1"
//! class.Hp = "1 0"
//! ample = H, Hp
//! distance = "H Hp"
//! k_plus = H
//! xi = "Hp 2 H 1"             # c1(G') rk(G') c1(G) rk(G)
//! discriminant = "0; -1; class H"
//! polarization = H
//! dimension = 2
//! bound = "2 4 3 4"           # r R delta n
//!
//! [family]
//! mode = constant-curve       # product | fibration
//! singularity_threshold = 2
//! fiber.t0 = "genus=2 singularities=0 stable=true rho=a"
//! assign.t0 = "rho=b"         # overrides the fiber's own point
//! parabolic.weights = "0, 1/2"
//! parabolic.multiplicities = "1, 1"
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use chern_core::curvature::Convention;
use chern_core::family::{BundlePoint, FamilyMode, FiberDescriptor, ParabolicData};
use chern_core::lattice::{Discriminant, LatticeClass, Rational};
use chern_core::metricfield::{
    BasePoint, Expr, FiniteDifference, Grid, HermitianMetricField, Mode, Patch,
};

use crate::ini::{self, Section, SyntaxError, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Inspect,
    Curvature,
    C2,
    Verify,
    Bound,
    Family,
    Report,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Inspect,
        Command::Curvature,
        Command::C2,
        Command::Verify,
        Command::Bound,
        Command::Family,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Inspect => "inspect",
            Command::Curvature => "curvature",
            Command::C2 => "c2",
            Command::Verify => "verify",
            Command::Bound => "bound",
            Command::Family => "family",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ConventionChoice {
    Paper,
    Chernweil,
    Both,
}

impl ConventionChoice {
    pub fn conventions(self) -> Vec<Convention> {
        match self {
            ConventionChoice::Paper => vec![Convention::Paper],
            ConventionChoice::Chernweil => vec![Convention::ChernWeil],
            ConventionChoice::Both => Convention::ALL.to_vec(),
        }
    }
}

impl FromStr for ConventionChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(ConventionChoice::Paper),
            "chernweil" => Ok(ConventionChoice::Chernweil),
            "both" => Ok(ConventionChoice::Both),
            other => Err(format!(
                "unknown convention `{other}` (paper, chernweil, both)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub resolution: Grid,
    pub refinements: Vec<Grid>,
    pub fd: FiniteDifference,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub commands: Vec<Command>,
    pub convention: ConventionChoice,
    pub points: Vec<BasePoint>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LatticeSpec {
    pub form: Vec<Vec<i64>>,
    /// Named classes in file order.
    pub classes: Vec<(String, LatticeClass)>,
    pub ample: Vec<String>,
    pub distances: Vec<(String, String)>,
    pub k_plus: Vec<String>,
    pub xi: Vec<(String, i64, String, i64)>,
    pub discriminants: Vec<Discriminant>,
    pub polarization: Option<String>,
    pub dimension: u32,
    /// `(r, R, delta, n)`
    pub bounds: Vec<(u32, Rational, Rational, u64)>,
}

impl LatticeSpec {
    pub fn class(&self, name: &str) -> Option<&LatticeClass> {
        self.classes.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }
}

#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub mode: FamilyMode,
    pub fibers: Vec<FiberDescriptor>,
    pub assignments: Option<BTreeMap<String, BundlePoint>>,
    pub singularity_threshold: Option<u32>,
    pub parabolic: Option<ParabolicData>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub metric: Option<HermitianMetricField>,
    pub patch: Patch,
    pub grid: GridSpec,
    pub run: RunSpec,
    pub lattice: Option<LatticeSpec>,
    pub family: Option<FamilySpec>,
}

const KNOWN_SECTIONS: [&str; 6] = ["metric", "patch", "grid", "run", "lattice", "family"];

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, SyntaxError> {
        let doc = ini::parse(text)?;
        for s in &doc.sections {
            if !KNOWN_SECTIONS.contains(&s.name.as_str()) {
                return Err(SyntaxError {
                    line: s.line,
                    column: 2,
                    message: format!("unknown section [{}]", s.name),
                });
            }
        }
        Ok(Scenario {
            metric: doc.section("metric").map(parse_metric).transpose()?,
            patch: parse_patch(doc.section("patch"))?,
            grid: parse_grid(doc.section("grid"))?,
            run: parse_run(doc.section("run"))?,
            lattice: doc.section("lattice").map(parse_lattice).transpose()?,
            family: doc.section("family").map(parse_family).transpose()?,
        })
    }
}

fn check_keys(section: &Section, allowed: &[&str], prefixes: &[&str]) -> Result<(), SyntaxError> {
    for e in &section.entries {
        let ok = allowed.contains(&e.key.as_str())
            || prefixes
                .iter()
                .any(|p| e.key.starts_with(p) && e.key[p.len()..].starts_with('.'));
        if !ok {
            return Err(SyntaxError {
                line: e.value.line,
                column: e.key_column,
                message: format!("unknown key `{}` in [{}]", e.key, section.name),
            });
        }
    }
    Ok(())
}

fn parse_num<T: FromStr>(v: &Value, what: &str) -> Result<T, SyntaxError> {
    v.text
        .trim()
        .parse()
        .map_err(|_| v.error(format!("expected {what}, found `{}`", v.text)))
}

fn require<'a>(section: &'a Section, key: &str) -> Result<&'a Value, SyntaxError> {
    section.get(key).ok_or_else(|| SyntaxError {
        line: section.line,
        column: 1,
        message: format!("[{}] is missing `{key}`", section.name),
    })
}

/// Splits on `sep`, yielding trimmed pieces with their character offsets.
fn split_with_offsets(text: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in text.split(sep) {
        let lead = piece.len() - piece.trim_start().len();
        out.push((text[..start + lead].chars().count(), piece.trim()));
        start += piece.len() + sep.len_utf8();
    }
    out
}

fn parse_list<T: FromStr>(v: &Value, sep: char, what: &str) -> Result<Vec<T>, SyntaxError> {
    split_with_offsets(&v.text, sep)
        .into_iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|(off, s)| {
            s.parse()
                .map_err(|_| v.error_at(off, format!("expected {what}, found `{s}`")))
        })
        .collect()
}

fn parse_rational(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.trim().parse().ok()?;
            let b: i64 = b.trim().parse().ok()?;
            (b != 0).then(|| Rational::new(a, b))
        }
        None => s.trim().parse::<i64>().ok().map(Rational::from_integer),
    }
}

fn rational_at(v: &Value, off: usize, s: &str) -> Result<Rational, SyntaxError> {
    parse_rational(s).ok_or_else(|| {
        v.error_at(
            off,
            format!("expected a rational like 3 or 1/2, found `{s}`"),
        )
    })
}

fn parse_metric(section: &Section) -> Result<HermitianMetricField, SyntaxError> {
    let rank_v = require(section, "rank")?;
    let rank: usize = parse_num(rank_v, "a positive rank")?;
    if rank == 0 {
        return Err(rank_v.error("rank must be at least 1"));
    }
    let mode = match section.get("mode") {
        None => Mode::Product,
        Some(v) => match v.text.as_str() {
            "product" => Mode::Product,
            "fibration" => Mode::Fibration,
            other => return Err(v.error(format!("unknown mode `{other}` (product, fibration)"))),
        },
    };
    let mut grid: Vec<Vec<Option<Expr>>> = vec![vec![None; rank]; rank];
    for e in &section.entries {
        if e.key == "rank" || e.key == "mode" {
            continue;
        }
        let (i, j) = entry_index(&e.key).ok_or_else(|| SyntaxError {
            line: e.value.line,
            column: e.key_column,
            message: format!(
                "unknown key `{}` in [metric]; entries are hIJ or hI_J",
                e.key
            ),
        })?;
        if i == 0 || j == 0 || i > rank || j > rank {
            return Err(SyntaxError {
                line: e.value.line,
                column: e.key_column,
                message: format!("entry {} is outside a rank {rank} metric", e.key),
            });
        }
        if !e.value.quoted {
            return Err(e.value.error("metric entries must be quoted expressions"));
        }
        let expr =
            Expr::parse(&e.value.text).map_err(|pe| e.value.error_at(pe.column - 1, pe.message))?;
        grid[i - 1][j - 1] = Some(expr);
    }
    HermitianMetricField::from_upper(grid, mode).map_err(|me| SyntaxError {
        line: section.line,
        column: 1,
        message: me.to_string(),
    })
}

fn entry_index(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('h')?;
    if let Some((a, b)) = rest.split_once('_') {
        return Some((a.parse().ok()?, b.parse().ok()?));
    }
    let mut chars = rest.chars();
    let (a, b) = (chars.next()?, chars.next()?);
    if chars.next().is_some() {
        return None;
    }
    Some((a.to_digit(10)? as usize, b.to_digit(10)? as usize))
}

const AXES: [&str; 4] = ["x1", "y1", "x2", "y2"];

fn parse_patch(section: Option<&Section>) -> Result<Patch, SyntaxError> {
    let Some(section) = section else {
        return Ok(Patch::unit_cube());
    };
    check_keys(
        section,
        &["x1", "y1", "x2", "y2", "periodic", "margin"],
        &[],
    )?;
    let mut ranges = [(0.0, 1.0); 4];
    for (axis, name) in AXES.iter().enumerate() {
        if let Some(v) = section.get(name) {
            let r: Vec<f64> = parse_list(v, ',', "a number")?;
            if r.len() != 2 {
                return Err(v.error(format!("{name} needs `lo, hi`")));
            }
            ranges[axis] = (r[0], r[1]);
        }
    }
    let mut patch = Patch::new(ranges).map_err(|e| SyntaxError {
        line: section.line,
        column: 1,
        message: e.to_string(),
    })?;
    if let Some(v) = section.get("periodic") {
        let periodic = match v.text.as_str() {
            "none" => [false, false],
            "z1" => [true, false],
            "z2" => [false, true],
            "both" => [true, true],
            other => {
                return Err(v.error(format!(
                    "unknown periodicity `{other}` (none, z1, z2, both)"
                )))
            }
        };
        patch = patch.with_periodic(periodic);
    }
    if let Some(v) = section.get("margin") {
        let m: f64 = parse_num(v, "a margin")?;
        patch = patch.with_margin(m).map_err(|e| v.error(e.to_string()))?;
    }
    Ok(patch)
}

pub fn parse_resolution(text: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = text.split('x').map(str::trim).collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.parse().map_err(|_| format!("bad resolution `{text}`")))
        .collect::<Result<_, _>>()?;
    let res = match nums.as_slice() {
        [n] => [*n; 4],
        [a, b, c, d] => [*a, *b, *c, *d],
        _ => return Err(format!("resolution `{text}` needs one or four numbers")),
    };
    if res.iter().any(|&n| n < 2) {
        return Err(format!("resolution `{text}` must be at least 2 per axis"));
    }
    Ok(Grid::new(res))
}

fn parse_grid(section: Option<&Section>) -> Result<GridSpec, SyntaxError> {
    let mut spec = GridSpec {
        resolution: Grid::uniform(6),
        refinements: Vec::new(),
        fd: FiniteDifference::default(),
        tolerance: 1e-8,
    };
    let Some(section) = section else {
        spec.refinements = default_refinements(spec.resolution);
        return Ok(spec);
    };
    check_keys(
        section,
        &["resolution", "refinements", "fd_step", "tolerance"],
        &[],
    )?;
    if let Some(v) = section.get("resolution") {
        spec.resolution = parse_resolution(&v.text).map_err(|m| v.error(m))?;
    }
    spec.refinements = match section.get("refinements") {
        Some(v) => split_with_offsets(&v.text, ',')
            .into_iter()
            .map(|(off, s)| parse_resolution(s).map_err(|m| v.error_at(off, m)))
            .collect::<Result<_, _>>()?,
        None => default_refinements(spec.resolution),
    };
    if let Some(v) = section.get("fd_step") {
        let s: f64 = parse_num(v, "a relative step")?;
        if !(s > 0.0 && s < 0.5) {
            return Err(v.error("fd_step must lie in (0, 0.5)"));
        }
        spec.fd = FiniteDifference::new(s);
    }
    if let Some(v) = section.get("tolerance") {
        let t: f64 = parse_num(v, "a tolerance")?;
        if !(t >= 0.0) {
            return Err(v.error("tolerance must be >= 0"));
        }
        spec.tolerance = t;
    }
    Ok(spec)
}

/// Quarter, half and full resolution.
pub fn default_refinements(g: Grid) -> Vec<Grid> {
    let half = g.halved();
    vec![half.halved(), half, g]
}

fn parse_run(section: Option<&Section>) -> Result<RunSpec, SyntaxError> {
    let mut spec = RunSpec {
        commands: Vec::new(),
        convention: ConventionChoice::Both,
        points: Vec::new(),
        samples: 4,
        seed: 0,
    };
    let Some(section) = section else {
        return Ok(spec);
    };
    check_keys(
        section,
        &["commands", "convention", "points", "samples", "seed"],
        &[],
    )?;
    if let Some(v) = section.get("commands") {
        spec.commands = split_with_offsets(&v.text, ',')
            .into_iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(off, s)| s.parse().map_err(|m: String| v.error_at(off, m)))
            .collect::<Result<_, _>>()?;
    }
    if let Some(v) = section.get("convention") {
        spec.convention = v.text.parse().map_err(|m: String| v.error(m))?;
    }
    if let Some(v) = section.get("points") {
        for (off, s) in split_with_offsets(&v.text, ';') {
            if s.is_empty() {
                continue;
            }
            let coords: Vec<f64> = s
                .split_whitespace()
                .map(|c| {
                    c.parse()
                        .map_err(|_| v.error_at(off, format!("bad coordinate `{c}`")))
                })
                .collect::<Result<_, _>>()?;
            let p: BasePoint = coords
                .try_into()
                .map_err(|_| v.error_at(off, "a point needs four coordinates x1 y1 x2 y2"))?;
            spec.points.push(p);
        }
    }
    if let Some(v) = section.get("samples") {
        spec.samples = parse_num(v, "a sample count")?;
    }
    if let Some(v) = section.get("seed") {
        spec.seed = parse_num(v, "an unsigned seed")?;
    }
    Ok(spec)
}

fn class_from(v: &Value, off: usize, text: &str) -> Result<LatticeClass, SyntaxError> {
    let coords = text
        .split_whitespace()
        .map(|s| rational_at(v, off, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LatticeClass::new(coords))
}

fn parse_lattice(section: &Section) -> Result<LatticeSpec, SyntaxError> {
    check_keys(
        section,
        &[
            "form",
            "ample",
            "distance",
            "k_plus",
            "xi",
            "discriminant",
            "polarization",
            "dimension",
            "bound",
        ],
        &["class"],
    )?;
    let form_v = require(section, "form")?;
    let mut form = Vec::new();
    for (off, row) in split_with_offsets(&form_v.text, ';') {
        let r: Vec<i64> = row
            .split_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|_| form_v.error_at(off, format!("bad integer `{s}`")))
            })
            .collect::<Result<_, _>>()?;
        form.push(r);
    }
    let mut classes = Vec::new();
    for (name, e) in section.prefixed("class") {
        classes.push((name.to_string(), class_from(&e.value, 0, &e.value.text)?));
    }
    let known = |v: &Value, off: usize, name: &str| -> Result<String, SyntaxError> {
        if classes.iter().any(|(n, _)| n == name) {
            Ok(name.to_string())
        } else {
            Err(v.error_at(off, format!("unknown class `{name}`")))
        }
    };
    let names = |key: &str| -> Result<Vec<String>, SyntaxError> {
        match section.get(key) {
            None => Ok(Vec::new()),
            Some(v) => split_with_offsets(&v.text, ',')
                .into_iter()
                .filter(|(_, s)| !s.is_empty())
                .map(|(off, s)| known(v, off, s))
                .collect(),
        }
    };
    let ample = names("ample")?;
    let k_plus = names("k_plus")?;
    let polarization = names("polarization")?.into_iter().next();

    let mut distances = Vec::new();
    if let Some(v) = section.get("distance") {
        for (off, s) in split_with_offsets(&v.text, ';') {
            let parts: Vec<&str> = s.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                [a, b] => distances.push((known(v, off, a)?, known(v, off, b)?)),
                _ => return Err(v.error_at(off, "a distance needs two class names")),
            }
        }
    }
    let mut xi = Vec::new();
    if let Some(v) = section.get("xi") {
        for (off, s) in split_with_offsets(&v.text, ';') {
            let parts: Vec<&str> = s.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                [a, ra, b, rb] => {
                    let ra: i64 = ra.parse().map_err(|_| v.error_at(off, "bad rank"))?;
                    let rb: i64 = rb.parse().map_err(|_| v.error_at(off, "bad rank"))?;
                    xi.push((known(v, off, a)?, ra, known(v, off, b)?, rb));
                }
                _ => return Err(v.error_at(off, "xi needs `c1' rank' c1 rank`")),
            }
        }
    }
    let mut discriminants = Vec::new();
    if let Some(v) = section.get("discriminant") {
        for (off, s) in split_with_offsets(&v.text, ';') {
            if s.is_empty() {
                continue;
            }
            if let Some(name) = s.strip_prefix("class") {
                let name = known(v, off, name.trim())?;
                let class = classes
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, c)| c.clone());
                discriminants.push(Discriminant::Class(class.expect("checked above")));
            } else {
                discriminants.push(Discriminant::Scalar(rational_at(v, off, s)?));
            }
        }
    }
    let dimension = match section.get("dimension") {
        Some(v) => parse_num(v, "a dimension")?,
        None => 2,
    };
    let mut bounds = Vec::new();
    if let Some(v) = section.get("bound") {
        for (off, s) in split_with_offsets(&v.text, ';') {
            let parts: Vec<&str> = s.split_whitespace().collect();
            match parts.as_slice() {
                [] => {}
                [r, big_r, delta, n] => bounds.push((
                    r.parse()
                        .map_err(|_| v.error_at(off, format!("bad rank `{r}`")))?,
                    rational_at(v, off, big_r)?,
                    rational_at(v, off, delta)?,
                    n.parse()
                        .map_err(|_| v.error_at(off, format!("bad multiple `{n}`")))?,
                )),
                _ => return Err(v.error_at(off, "a bound needs `r R delta n`")),
            }
        }
    }
    Ok(LatticeSpec {
        form,
        classes,
        ample,
        distances,
        k_plus,
        xi,
        discriminants,
        polarization,
        dimension,
        bounds,
    })
}

fn parse_payload(v: &Value, tokens: &[(usize, &str)]) -> Result<BundlePoint, SyntaxError> {
    let mut point = BundlePoint::new();
    for (off, tok) in tokens {
        let Some((k, val)) = tok.split_once('=') else {
            return Err(v.error_at(*off, format!("expected key=value, found `{tok}`")));
        };
        point.insert(k.to_string(), val.to_string());
    }
    Ok(point)
}

fn tokens(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut chars = 0;
    let mut rest = text;
    while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
        chars += rest[..start].chars().count();
        let tail = &rest[start..];
        let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
        out.push((chars, &tail[..end]));
        chars += tail[..end].chars().count();
        rest = &tail[end..];
    }
    out
}

fn parse_family(section: &Section) -> Result<FamilySpec, SyntaxError> {
    check_keys(
        section,
        &[
            "mode",
            "singularity_threshold",
            "parabolic.weights",
            "parabolic.multiplicities",
        ],
        &["fiber", "assign"],
    )?;
    let mode_v = require(section, "mode")?;
    let mode: FamilyMode = mode_v.text.parse().map_err(|m: String| mode_v.error(m))?;
    let mut fibers = Vec::new();
    for (name, e) in section.prefixed("fiber") {
        let v = &e.value;
        let mut genus = None;
        let mut singularities = 0;
        let mut stable = true;
        let mut payload = Vec::new();
        for (off, tok) in tokens(&v.text) {
            match tok.split_once('=') {
                Some(("genus", g)) => {
                    genus = Some(
                        g.parse()
                            .map_err(|_| v.error_at(off, format!("bad genus `{g}`")))?,
                    )
                }
                Some(("singularities", s)) => {
                    singularities = s
                        .parse()
                        .map_err(|_| v.error_at(off, format!("bad count `{s}`")))?
                }
                Some(("stable", s)) => {
                    stable = match s {
                        "true" | "yes" => true,
                        "false" | "no" => false,
                        _ => return Err(v.error_at(off, format!("bad flag `{s}`"))),
                    }
                }
                _ => payload.push((off, tok)),
            }
        }
        let genus = genus.ok_or_else(|| v.error(format!("fiber {name} needs genus=<n>")))?;
        fibers.push(
            FiberDescriptor::new(name, genus, singularities)
                .with_point(parse_payload(v, &payload)?)
                .with_stable(stable),
        );
    }
    let mut assignments: Option<BTreeMap<String, BundlePoint>> = None;
    for (name, e) in section.prefixed("assign") {
        let point = parse_payload(&e.value, &tokens(&e.value.text))?;
        assignments
            .get_or_insert_with(BTreeMap::new)
            .insert(name.to_string(), point);
    }
    let singularity_threshold = section
        .get("singularity_threshold")
        .map(|v| parse_num(v, "a singularity count"))
        .transpose()?;
    let parabolic = match (
        section.get("parabolic.weights"),
        section.get("parabolic.multiplicities"),
    ) {
        (None, None) => None,
        (Some(w), k) => {
            let weights = split_with_offsets(&w.text, ',')
                .into_iter()
                .filter(|(_, s)| !s.is_empty())
                .map(|(off, s)| rational_at(w, off, s))
                .collect::<Result<Vec<_>, _>>()?;
            let multiplicities = match k {
                Some(k) => parse_list(k, ',', "a multiplicity")?,
                None => vec![1; weights.len()],
            };
            Some(ParabolicData {
                weights,
                multiplicities,
            })
        }
        (None, Some(k)) => {
            return Err(k.error("parabolic.multiplicities given without parabolic.weights"))
        }
    };
    Ok(FamilySpec {
        mode,
        fibers,
        assignments,
        singularity_threshold,
        parabolic,
    })
}
