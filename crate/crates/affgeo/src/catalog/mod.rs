//! The surface atlas: every explicit surface with its chart, constants
//! and expected invariants, stored as data files in the expression
//! grammar so new entries need no rebuild.
//!
//! File format, one surface per file:
//!
//! ```text
//! # comment
//! id: thm62-ii
//! description: one line
//! kind: parametric              # graph | parametric | implicit
//! geometry: centroaffine        # calabi | centroaffine
//! vars: t u
//! ambient: x1 x2 x3             # names for the implicit program
//! const: c4 = sqrt(3)/2         # may reference earlier constants
//! domain: -1 1 ; -1 1           # lo hi per chart variable
//! figure: 3                     # optional
//!
//! component x1: sinh(t)
//! component x2: ...             # expression may continue on
//!     following lines           # indented or not, until a directive
//! implicit: x2^(1/2) * x3^(3/2) - x1^2 - 1
//!
//! expect gaussian-curvature = -1 tol=1e-8 tag=PAPER ref=constant curvature -1
//! expect warped-metric = c4*cosh(t) tag=PAPER ref=warped form
//! ```
//!
//! `expect NAME [= EXPR [; EXPR]*] [tol=T] tag=TAG ref=TEXT` attaches an
//! expected invariant; parameters are expressions over the chart
//! variables and constants.

use crate::error::{Error, Result};
use crate::expr::{parse_program, ExpressionProgram, ParseContext};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Graph,
    Parametric,
    Implicit,
}

impl SurfaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurfaceKind::Graph => "graph",
            SurfaceKind::Parametric => "parametric",
            SurfaceKind::Implicit => "implicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Calabi,
    Centroaffine,
}

#[derive(Debug, Clone)]
pub struct ExpectSpec {
    pub name: String,
    /// Raw parameter expressions (split on ';'), compiled on demand.
    pub params: Vec<String>,
    pub tolerance: Option<f64>,
    pub tag: String,
    pub reference: String,
}

/// A fully resolved catalog entry: raw sources plus compiled programs.
#[derive(Debug, Clone)]
pub struct SurfaceSpec {
    pub id: String,
    pub description: String,
    pub kind: SurfaceKind,
    pub geometry: Geometry,
    pub vars: Vec<String>,
    pub ambient_vars: Vec<String>,
    pub constants: BTreeMap<String, f64>,
    pub domain: Vec<(f64, f64)>,
    pub figure: Option<u32>,
    pub component_sources: Vec<(String, String)>,
    pub implicit_source: Option<String>,
    pub expects: Vec<ExpectSpec>,
    /// Compiled component programs, in file order.
    pub programs: Vec<ExpressionProgram>,
    /// Compiled implicit program over the ambient variables.
    pub implicit: Option<ExpressionProgram>,
}

impl SurfaceSpec {
    pub fn chart_dim(&self) -> usize {
        self.vars.len()
    }

    fn chart_context(&self) -> ParseContext {
        let mut ctx = ParseContext {
            variables: self.vars.clone(),
            constants: Default::default(),
        };
        for (k, v) in &self.constants {
            ctx.constants.insert(k.clone(), *v);
        }
        ctx
    }

    /// Compile an expected-value expression over the chart variables.
    pub fn compile_chart_expr(&self, text: &str) -> Result<ExpressionProgram> {
        parse_program(text, &self.chart_context())
    }

    /// Verification lattice: the spec'd default resolution per axis,
    /// shrunk 10% from each chart edge to stay clear of singular rims.
    pub fn sample_grid(&self, resolution: Option<Vec<usize>>) -> Vec<Vec<f64>> {
        let dims = self.chart_dim();
        let res = resolution.unwrap_or_else(|| {
            let d = if dims >= 3 { 7 } else { 11 };
            vec![d; dims]
        });
        let axes: Vec<Vec<f64>> = self
            .domain
            .iter()
            .zip(&res)
            .map(|(&(lo, hi), &n)| {
                let pad = 0.1 * (hi - lo);
                let (a, b) = (lo + pad, hi - pad);
                (0..n)
                    .map(|i| {
                        if n == 1 {
                            0.5 * (a + b)
                        } else {
                            a + (b - a) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let mut points = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }

    /// Sparse deterministic subsample used by the stencil-heavy checks
    /// (finite-difference oracle, Codazzi probes).
    pub fn oracle_points(&self) -> Vec<Vec<f64>> {
        let dims = self.chart_dim();
        self.sample_grid(Some(vec![3; dims]))
    }

    /// The grid spec string ("11x11") for reports.
    pub fn grid_label(&self, resolution: Option<&[usize]>) -> String {
        let dims = self.chart_dim();
        let res: Vec<usize> = match resolution {
            Some(r) => r.to_vec(),
            None => vec![if dims >= 3 { 7 } else { 11 }; dims],
        };
        res.iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// Parse one catalog file, applying constant overrides after the file's
/// own definitions.
pub fn parse_surface(source: &str, overrides: &[(String, f64)]) -> Result<SurfaceSpec> {
    let mut id = String::new();
    let mut description = String::new();
    let mut kind = None;
    let mut geometry = None;
    let mut vars: Vec<String> = Vec::new();
    let mut ambient_vars: Vec<String> = Vec::new();
    let mut const_lines: Vec<(String, String)> = Vec::new();
    let mut domain = Vec::new();
    let mut figure = None;
    let mut components: Vec<(String, String)> = Vec::new();
    let mut implicit_source: Option<String> = None;
    let mut expects = Vec::new();

    // A component/implicit expression may continue over several lines;
    // capture until the next directive.
    let mut capture: Option<(Option<String>, String)> = None;
    let directives = [
        "id:",
        "description:",
        "kind:",
        "geometry:",
        "vars:",
        "ambient:",
        "const:",
        "domain:",
        "figure:",
        "component ",
        "implicit:",
        "expect ",
    ];
    let flush = |capture: &mut Option<(Option<String>, String)>,
                 components: &mut Vec<(String, String)>,
                 implicit_source: &mut Option<String>| {
        if let Some((name, text)) = capture.take() {
            match name {
                Some(n) => components.push((n, text.trim().to_string())),
                None => *implicit_source = Some(text.trim().to_string()),
            }
        }
    };

    for raw in source.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let is_directive = directives.iter().any(|d| line.starts_with(d));
        if !is_directive {
            if let Some((_, text)) = capture.as_mut() {
                text.push(' ');
                text.push_str(line);
                continue;
            }
            return Err(Error::Parse(format!("unexpected catalog line '{line}'")));
        }
        flush(&mut capture, &mut components, &mut implicit_source);
        if let Some(rest) = line.strip_prefix("id:") {
            id = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("description:") {
            description = rest.trim().to_string();
        } else if let Some(rest) = line.strip_prefix("kind:") {
            kind = Some(match rest.trim() {
                "graph" => SurfaceKind::Graph,
                "parametric" => SurfaceKind::Parametric,
                "implicit" => SurfaceKind::Implicit,
                other => return Err(Error::Parse(format!("unknown kind '{other}'"))),
            });
        } else if let Some(rest) = line.strip_prefix("geometry:") {
            geometry = Some(match rest.trim() {
                "calabi" => Geometry::Calabi,
                "centroaffine" => Geometry::Centroaffine,
                other => return Err(Error::Parse(format!("unknown geometry '{other}'"))),
            });
        } else if let Some(rest) = line.strip_prefix("vars:") {
            vars = rest.split_whitespace().map(|s| s.to_string()).collect();
        } else if let Some(rest) = line.strip_prefix("ambient:") {
            ambient_vars = rest.split_whitespace().map(|s| s.to_string()).collect();
        } else if let Some(rest) = line.strip_prefix("const:") {
            let (name, expr) = rest
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad const line '{line}'")))?;
            const_lines.push((name.trim().to_string(), expr.trim().to_string()));
        } else if let Some(rest) = line.strip_prefix("domain:") {
            for chunk in rest.split(';') {
                let parts: Vec<f64> = chunk
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::Parse(format!("bad domain bound '{t}'")))
                    })
                    .collect::<Result<_>>()?;
                if parts.len() != 2 || parts[0] >= parts[1] {
                    return Err(Error::Parse(format!("bad domain chunk '{chunk}'")));
                }
                domain.push((parts[0], parts[1]));
            }
        } else if let Some(rest) = line.strip_prefix("figure:") {
            figure = Some(
                rest.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad figure number '{}'", rest.trim())))?,
            );
        } else if let Some(rest) = line.strip_prefix("component ") {
            let (name, expr) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad component line '{line}'")))?;
            capture = Some((Some(name.trim().to_string()), expr.trim().to_string()));
        } else if let Some(rest) = line.strip_prefix("implicit:") {
            capture = Some((None, rest.trim().to_string()));
        } else if let Some(rest) = line.strip_prefix("expect ") {
            expects.push(parse_expect(rest)?);
        }
    }
    flush(&mut capture, &mut components, &mut implicit_source);

    let kind = kind.ok_or_else(|| Error::Parse(format!("surface '{id}': missing kind")))?;
    let geometry =
        geometry.ok_or_else(|| Error::Parse(format!("surface '{id}': missing geometry")))?;
    if id.is_empty() {
        return Err(Error::Parse("missing id".into()));
    }
    if vars.is_empty() && kind != SurfaceKind::Implicit {
        return Err(Error::Parse(format!("surface '{id}': missing vars")));
    }
    if domain.len() != vars.len() {
        return Err(Error::Parse(format!(
            "surface '{id}': domain does not match vars"
        )));
    }

    // Resolve constants in declaration order, allowing references to
    // earlier ones, then apply overrides.
    let mut constants: BTreeMap<String, f64> = BTreeMap::new();
    for (name, expr) in &const_lines {
        let mut ctx = ParseContext::new(&[]);
        for (k, v) in &constants {
            ctx.constants.insert(k.clone(), *v);
        }
        let p = parse_program(expr, &ctx)?;
        let v = crate::expr::fold_constant(&p)
            .ok_or_else(|| Error::Parse(format!("constant '{name}' does not fold to a value")))?;
        constants.insert(name.clone(), v);
    }
    for (name, v) in overrides {
        if !constants.contains_key(name) {
            return Err(Error::Parse(format!(
                "surface '{id}' has no constant '{name}' to override"
            )));
        }
        constants.insert(name.clone(), *v);
    }

    let chart_ctx = {
        let mut ctx = ParseContext {
            variables: vars.clone(),
            constants: Default::default(),
        };
        for (k, v) in &constants {
            ctx.constants.insert(k.clone(), *v);
        }
        ctx
    };
    let programs: Vec<ExpressionProgram> = components
        .iter()
        .map(|(_, src)| parse_program(src, &chart_ctx))
        .collect::<Result<_>>()?;
    let implicit = match &implicit_source {
        Some(src) => {
            if ambient_vars.is_empty() {
                return Err(Error::Parse(format!(
                    "surface '{id}': implicit block needs ambient names"
                )));
            }
            let mut ctx = ParseContext {
                variables: ambient_vars.clone(),
                constants: Default::default(),
            };
            for (k, v) in &constants {
                ctx.constants.insert(k.clone(), *v);
            }
            Some(parse_program(src, &ctx)?)
        }
        None => None,
    };

    Ok(SurfaceSpec {
        id,
        description,
        kind,
        geometry,
        vars,
        ambient_vars,
        constants,
        domain,
        figure,
        component_sources: components,
        implicit_source,
        expects,
        programs,
        implicit,
    })
}

fn parse_expect(rest: &str) -> Result<ExpectSpec> {
    // NAME [= EXPR [; EXPR]*] [tol=T] tag=TAG ref=TEXT
    let rest = rest.trim();
    let (head, reference) = rest
        .split_once("ref=")
        .ok_or_else(|| Error::Parse(format!("expect line missing ref=: '{rest}'")))?;
    let (head, tag) = head
        .split_once("tag=")
        .ok_or_else(|| Error::Parse(format!("expect line missing tag=: '{rest}'")))?;
    let mut head = head.trim().to_string();
    let mut tolerance = None;
    if let Some((before, tol_part)) = head.split_once("tol=") {
        tolerance = Some(
            tol_part
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad tol in expect line '{rest}'")))?,
        );
        head = before.trim().to_string();
    }
    let (name, params) = match head.split_once('=') {
        Some((n, p)) => (
            n.trim().to_string(),
            p.split(';').map(|s| s.trim().to_string()).collect(),
        ),
        None => (head.trim().to_string(), Vec::new()),
    };
    let tag = tag.trim().to_string();
    if !matches!(tag.as_str(), "PAPER" | "DERIVED" | "TRIVIAL") {
        return Err(Error::Parse(format!("unknown provenance tag '{tag}'")));
    }
    Ok(ExpectSpec {
        name,
        params,
        tolerance,
        tag,
        reference: reference.trim().to_string(),
    })
}

macro_rules! builtin_surfaces {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("data/", $file, ".surf")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = builtin_surfaces![
    "paraboloid",
    "thm44-i",
    "thm44-ii",
    "thm44-iii",
    "thm44-iv",
    "flat-maximal",
    "thm46",
    "calabi-product-r4",
    "hyperboloid",
    "thm62-i",
    "thm62-i-graph",
    "thm62-ii",
    "thm62-iii",
    "thm62-iv",
    "thm62-v",
];

/// The runtime registry: builtin sources plus any loaded from disk.
#[derive(Debug, Clone)]
pub struct Catalog {
    entries: BTreeMap<String, String>,
}

impl Catalog {
    pub fn builtin() -> Catalog {
        let mut entries = BTreeMap::new();
        for (name, src) in BUILTIN {
            entries.insert(name.to_string(), src.to_string());
        }
        Catalog { entries }
    }

    /// Load additional `.surf` files; entries with known ids replace the
    /// builtin ones.
    pub fn add_dir(&mut self, dir: &std::path::Path) -> Result<usize> {
        let mut added = 0;
        let rd = std::fs::read_dir(dir).map_err(|e| Error::Io(e.to_string()))?;
        for entry in rd {
            let entry = entry.map_err(|e| Error::Io(e.to_string()))?;
            let path = entry.path();
            if path.extension().and_then(|s| s.to_str()) == Some("surf") {
                let src = std::fs::read_to_string(&path).map_err(|e| Error::Io(e.to_string()))?;
                let spec = parse_surface(&src, &[])?;
                self.entries.insert(spec.id.clone(), src);
                added += 1;
            }
        }
        Ok(added)
    }

    /// Stable-ordered (id, kind, description) listing.
    pub fn list(&self) -> Vec<(String, String, String)> {
        self.entries
            .iter()
            .filter_map(|(id, src)| {
                parse_surface(src, &[])
                    .ok()
                    .map(|s| (id.clone(), s.kind.as_str().to_string(), s.description))
            })
            .collect()
    }

    pub fn get(&self, id: &str) -> Result<SurfaceSpec> {
        self.get_with(id, &[])
    }

    pub fn get_with(&self, id: &str, overrides: &[(String, f64)]) -> Result<SurfaceSpec> {
        let src = self
            .entries
            .get(id)
            .ok_or_else(|| Error::UnknownSurface(id.to_string()))?;
        parse_surface(src, overrides)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_catalog_parses_and_lists() {
        let cat = Catalog::builtin();
        let list = cat.list();
        assert_eq!(list.len(), BUILTIN.len());
        for id in ["thm44-i", "thm44-ii", "thm44-iii", "thm44-iv"] {
            assert!(list.iter().any(|(i, _, _)| i == id), "{id} missing");
        }
        assert!(list.iter().any(|(i, _, _)| i == "calabi-product-r4"));
        assert!(list.iter().any(|(i, _, _)| i == "hyperboloid"));
    }

    #[test]
    fn every_builtin_surface_roundtrips() {
        let cat = Catalog::builtin();
        for (id, kind, _) in cat.list() {
            let spec = cat.get(&id).unwrap();
            assert_eq!(spec.kind.as_str(), kind);
            assert_eq!(spec.domain.len(), spec.vars.len());
            assert!(!spec.programs.is_empty(), "{id} has no components");
            // Reparse the component sources with the resolved constants:
            // identical programs.
            for ((_, src), prog) in spec.component_sources.iter().zip(&spec.programs) {
                let again = spec.compile_chart_expr(src).unwrap();
                assert_eq!(&again, prog, "{id} does not round-trip");
            }
            // Expected-invariant parameters compile over the chart.
            for e in &spec.expects {
                for p in &e.params {
                    spec.compile_chart_expr(p)
                        .unwrap_or_else(|err| panic!("{id}/{}: {err}", e.name));
                }
            }
        }
    }

    #[test]
    fn unknown_id_is_reported() {
        let cat = Catalog::builtin();
        assert!(matches!(
            cat.get("no-such-surface"),
            Err(Error::UnknownSurface(_))
        ));
    }

    #[test]
    fn constant_overrides_apply() {
        let cat = Catalog::builtin();
        let spec = cat
            .get_with("thm44-iii", &[("c".to_string(), 2.0)])
            .unwrap();
        assert_eq!(spec.constants["c"], 2.0);
        // Bad override name errors.
        assert!(cat
            .get_with("thm44-iii", &[("zz".to_string(), 1.0)])
            .is_err());
    }

    #[test]
    fn user_surfaces_load_from_a_directory() {
        let dir = std::env::temp_dir().join(format!("affgeo-cat-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("demo.surf"),
            "id: user-demo\n\
             description: user-supplied quadratic graph\n\
             kind: graph\n\
             geometry: calabi\n\
             vars: x1 x2\n\
             const: a = 2\n\
             domain: -1 1 ; -1 1\n\
             component f: a*(x1^2 + x2^2)/2\n\
             expect maximal-residual tol=1e-10 tag=TRIVIAL ref=constant Hessian\n",
        )
        .unwrap();
        let mut cat = Catalog::builtin();
        let added = cat.add_dir(&dir).unwrap();
        assert_eq!(added, 1);
        let spec = cat.get("user-demo").unwrap();
        assert_eq!(spec.constants["a"], 2.0);
        assert!(cat.list().iter().any(|(id, _, _)| id == "user-demo"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sample_grid_respects_shrink_and_resolution() {
        let cat = Catalog::builtin();
        let spec = cat.get("paraboloid").unwrap();
        let grid = spec.sample_grid(None);
        assert_eq!(grid.len(), 121);
        let (lo, hi) = spec.domain[0];
        let pad = 0.1 * (hi - lo);
        for p in &grid {
            assert!(p[0] >= lo + pad - 1e-12 && p[0] <= hi - pad + 1e-12);
        }
        let product = cat.get("calabi-product-r4").unwrap();
        assert_eq!(product.sample_grid(None).len(), 343);
        assert_eq!(product.grid_label(None), "7x7x7");
    }
}
