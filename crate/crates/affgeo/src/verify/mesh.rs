//! Figure meshes: deterministic CSV exports of the plotted surfaces.

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::jet::eval_value;

/// A rendered mesh: '#'-prefixed header lines followed by comma-separated
/// rows of chart coordinates and ambient coordinates, 17 significant
/// digits each.
#[derive(Debug, Clone)]
pub struct MeshFile {
    pub surface_id: String,
    pub rows: usize,
    pub bytes: Vec<u8>,
}

/// Figure registry: surface id plus constant overrides.
pub fn figure_surface(figure: u32) -> Result<(&'static str, Vec<(String, f64)>)> {
    match figure {
        1 => Ok(("flat-maximal", vec![])),
        2 => Ok(("thm62-i", vec![])),
        // Exponent 1/2 is the default constant of the cosh family.
        3 => Ok(("thm62-ii", vec![])),
        // Exponent -1 in the spiral family means c5 = sqrt(5)/2.
        4 => Ok(("thm62-v", vec![("c5".to_string(), 5.0f64.sqrt() / 2.0)])),
        other => Err(Error::Domain(format!("no figure {other}"))),
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render the mesh of a figure over its surface's full chart rectangle.
pub fn emit_figure(catalog: &Catalog, figure: u32, grid: (usize, usize)) -> Result<MeshFile> {
    let (id, overrides) = figure_surface(figure)?;
    let spec = catalog.get_with(id, &overrides)?;
    if spec.chart_dim() != 2 {
        return Err(Error::Domain(
            "figure meshes need 2-parameter charts".into(),
        ));
    }
    let (nx, ny) = grid;
    if nx < 2 || ny < 2 {
        return Err(Error::Domain("mesh grid must be at least 2x2".into()));
    }
    let axis = |(lo, hi): (f64, f64), n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs = axis(spec.domain[0], nx);
    let ys = axis(spec.domain[1], ny);
    let mut out = String::new();
    out.push_str(&format!("# surface: {}\n", spec.id));
    out.push_str(&format!("# figure: {figure}\n"));
    out.push_str(&format!("# grid: {nx}x{ny}\n"));
    let ambient: Vec<String> = if spec.ambient_vars.is_empty() {
        (0..spec.programs.len())
            .map(|i| format!("x{}", i + 1))
            .collect()
    } else {
        spec.ambient_vars.clone()
    };
    out.push_str(&format!(
        "# columns: {},{}\n",
        spec.vars.join(","),
        ambient.join(",")
    ));
    let mut rows = 0;
    for &x in &xs {
        for &y in &ys {
            let p = [x, y];
            let mut cols: Vec<String> = vec![fmt17(x), fmt17(y)];
            for comp in &spec.programs {
                cols.push(fmt17(eval_value(comp, &p, 1e-12)?));
            }
            out.push_str(&cols.join(","));
            out.push('\n');
            rows += 1;
        }
    }
    Ok(MeshFile {
        surface_id: spec.id.clone(),
        rows,
        bytes: out.into_bytes(),
    })
}

/// Check every mesh row against the defining equation of its surface:
/// the implicit equation where one exists, otherwise re-evaluation of the
/// parameterization at a 100x tighter quadrature tolerance. Returns the
/// max residual.
pub fn mesh_defining_residual(catalog: &Catalog, figure: u32, mesh: &MeshFile) -> Result<f64> {
    let (id, overrides) = figure_surface(figure)?;
    let spec = catalog.get_with(id, &overrides)?;
    let text = std::str::from_utf8(&mesh.bytes).map_err(|e| Error::Io(e.to_string()))?;
    let chart = spec.chart_dim();
    let mut worst = 0.0f64;
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad mesh value '{t}'")))
            })
            .collect::<Result<_>>()?;
        let (p, ambient) = vals.split_at(chart);
        match &spec.implicit {
            Some(f) => {
                worst = worst.max(eval_value(f, ambient, 1e-12)?.abs());
            }
            None => {
                for (comp, &have) in spec.programs.iter().zip(ambient) {
                    let tight = eval_value(comp, p, 1e-14)?;
                    worst = worst.max((have - tight).abs());
                }
            }
        }
    }
    Ok(worst)
}
