//! Model files: parameters, a polynomial field, the polycycle geometry and
//! options, in an INI-like sectioned format.
//!
//! ```text
//! [params]
//! a = 1/2
//! [field]
//! dot_x = x*(x-1)*(1 - a*y)
//! dot_y = y*(y-1)*(x - 2)
//! [polycycle]
//! corners = (0,1), (0,0), (1,0), (1,1)
//! orientation = ccw
//! ```

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{evaluate_constant, parse_expression};
use crate::field::ParametricField;
use crate::tolerances::Tolerances;

const SECTIONS: [&str; 6] = ["params", "field", "polycycle", "sections", "return_section", "options"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Ccw,
    Cw,
}

/// Corners of the polycycle in the order the flow visits them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub corners: Vec<[f64; 2]>,
    pub orientation: Orientation,
    /// Position of the transversal on edge `i → i+1`, as a fraction of the
    /// edge length measured from corner `i`.
    pub fractions: Vec<f64>,
}

impl Polygon {
    pub fn n(&self) -> usize {
        self.corners.len()
    }

    pub fn corner(&self, i: usize) -> [f64; 2] {
        self.corners[i % self.n()]
    }

    /// Twice the signed area.
    pub fn signed_area2(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let (p, q) = (self.corner(i), self.corner(i + 1));
                p[0] * q[1] - p[1] * q[0]
            })
            .sum()
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (p, q) = (self.corner(i), self.corner(i + 1));
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 3 {
            return Err(Error::Model(format!("a polycycle needs at least 3 corners, got {n}")));
        }
        for i in 0..n {
            if !(self.edge_length(i) > 0.0) {
                return Err(Error::Model(format!("corners {} and {} coincide", i + 1, (i + 1) % n + 1)));
            }
        }
        let area = self.signed_area2();
        let expect = match self.orientation {
            Orientation::Ccw => 1.0,
            Orientation::Cw => -1.0,
        };
        if !(area * expect > 0.0) {
            return Err(Error::Model(format!(
                "corners are not listed {} (twice the signed area is {area})",
                match self.orientation {
                    Orientation::Ccw => "counterclockwise",
                    Orientation::Cw => "clockwise",
                }
            )));
        }
        for i in 0..n {
            let (a, b, c) = (self.corner(i), self.corner(i + 1), self.corner(i + 2));
            let turn = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if !(turn * expect > 0.0) {
                return Err(Error::Model(format!("polygon is not convex at corner {}", (i + 1) % n + 1)));
            }
        }
        for (i, f) in self.fractions.iter().enumerate() {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(Error::Model(format!("section fraction {f} on edge {} is not in (0, 1)", i + 1)));
            }
        }
        Ok(())
    }
}

/// The half-line `origin + s·direction` used as a return section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySection {
    pub origin: [f64; 2],
    pub direction: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: Vec<String>,
    pub defaults: Vec<f64>,
    pub field: ParametricField,
    pub dot_x: String,
    pub dot_y: String,
    pub polygon: Option<Polygon>,
    pub ray: Option<RaySection>,
    pub tolerances: Tolerances,
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

fn model_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Model(format!("line {line}: {msg}"))
}

fn constant(text: &str, line: usize) -> Result<f64> {
    let e = parse_expression(text, &[]).map_err(|e| model_err(line, e))?;
    evaluate_constant(&e, &HashMap::new()).map_err(|e| model_err(line, e))
}

/// Split `(a, b), (c, d)` into pairs.
fn points(text: &str, line: usize) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('(')
            .ok_or_else(|| model_err(line, format!("expected '(' at `{rest}`")))?;
        let close = open
            .find(')')
            .ok_or_else(|| model_err(line, "unbalanced parenthesis"))?;
        let inner = &open[..close];
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 2 {
            return Err(model_err(line, format!("point `({inner})` needs two coordinates")));
        }
        out.push([constant(parts[0], line)?, constant(parts[1], line)?]);
        rest = open[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        }
    }
    Ok(out)
}

fn single_point(text: &str, line: usize) -> Result<[f64; 2]> {
    match points(text, line)?.as_slice() {
        [p] => Ok(*p),
        other => Err(model_err(line, format!("expected one point, got {}", other.len()))),
    }
}

fn sections(text: &str) -> Result<HashMap<String, Vec<Entry>>> {
    let mut out: HashMap<String, Vec<Entry>> = HashMap::new();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(model_err(line, format!("unknown section [{name}]")));
            }
            if out.contains_key(name) {
                return Err(model_err(line, format!("section [{name}] appears twice")));
            }
            out.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
            continue;
        }
        let section = current
            .as_ref()
            .ok_or_else(|| model_err(line, "entry before the first section header"))?;
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| model_err(line, format!("expected `name = value`, got `{content}`")))?;
        let key = key.trim().to_string();
        let entries = out.get_mut(section).expect("section registered");
        if entries.iter().any(|e| e.key == key) {
            return Err(model_err(line, format!("`{key}` is set twice in [{section}]")));
        }
        entries.push(Entry {
            line,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn is_identifier(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

impl Model {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut secs = sections(text)?;
        let mut params = Vec::new();
        let mut defaults = Vec::new();
        for e in secs.remove("params").unwrap_or_default() {
            if !is_identifier(&e.key) || e.key == "x" || e.key == "y" {
                return Err(model_err(e.line, format!("`{}` is not a valid parameter name", e.key)));
            }
            defaults.push(constant(&e.value, e.line)?);
            params.push(e.key);
        }

        let field_entries = secs
            .remove("field")
            .ok_or_else(|| Error::Model("missing [field] section".into()))?;
        let mut dot_x = None;
        let mut dot_y = None;
        for e in field_entries {
            match e.key.as_str() {
                "dot_x" => dot_x = Some((e.value, e.line)),
                "dot_y" => dot_y = Some((e.value, e.line)),
                other => return Err(model_err(e.line, format!("unknown field entry `{other}`"))),
            }
        }
        let (dot_x, dot_y) = match (dot_x, dot_y) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Model("[field] needs both dot_x and dot_y".into())),
        };
        let names: Vec<&str> = params.iter().map(String::as_str).collect();
        for (text, line) in [&dot_x, &dot_y] {
            parse_expression(text, &names).map_err(|e| model_err(*line, e))?;
        }
        let field = ParametricField::parse(&params, &dot_x.0, &dot_y.0)?;

        let mut polygon = match secs.remove("polycycle") {
            None => None,
            Some(entries) => {
                let mut corners = None;
                let mut orientation = Orientation::Ccw;
                for e in entries {
                    match e.key.as_str() {
                        "corners" => corners = Some(points(&e.value, e.line)?),
                        "orientation" => {
                            orientation = match e.value.as_str() {
                                "ccw" => Orientation::Ccw,
                                "cw" => Orientation::Cw,
                                v => return Err(model_err(e.line, format!("orientation must be ccw or cw, got `{v}`"))),
                            }
                        }
                        other => return Err(model_err(e.line, format!("unknown polycycle entry `{other}`"))),
                    }
                }
                let corners = corners.ok_or_else(|| Error::Model("[polycycle] needs corners".into()))?;
                let n = corners.len();
                Some(Polygon {
                    corners,
                    orientation,
                    fractions: vec![0.5; n],
                })
            }
        };

        if let Some(entries) = secs.remove("sections") {
            let poly = polygon
                .as_ref()
                .ok_or_else(|| Error::Model("[sections] without [polycycle]".into()))?;
            let n = poly.n();
            let mut fractions = poly.fractions.clone();
            let mut overrides = Vec::new();
            for e in entries {
                let f = constant(&e.value, e.line)?;
                if e.key == "fraction" {
                    fractions = vec![f; n];
                } else if let Some(k) = e.key.strip_prefix("edge").and_then(|k| k.parse::<usize>().ok()) {
                    if k == 0 || k > n {
                        return Err(model_err(e.line, format!("edge {k} outside 1..={n}")));
                    }
                    overrides.push((k - 1, f));
                } else {
                    return Err(model_err(e.line, format!("unknown sections entry `{}`", e.key)));
                }
            }
            for (k, f) in overrides {
                fractions[k] = f;
            }
            if let Some(p) = polygon.as_mut() {
                p.fractions = fractions;
            }
        }
        Self::finish(params, defaults, field, dot_x.0, dot_y.0, polygon, secs)
    }

    fn finish(
        params: Vec<String>,
        defaults: Vec<f64>,
        field: ParametricField,
        dot_x: String,
        dot_y: String,
        polygon: Option<Polygon>,
        mut secs: HashMap<String, Vec<Entry>>,
    ) -> Result<Self> {
        if let Some(p) = &polygon {
            p.validate()?;
        }
        let ray = match secs.remove("return_section") {
            None => None,
            Some(entries) => {
                let mut origin = None;
                let mut direction = None;
                for e in entries {
                    match e.key.as_str() {
                        "origin" => origin = Some(single_point(&e.value, e.line)?),
                        "direction" => direction = Some(single_point(&e.value, e.line)?),
                        other => return Err(model_err(e.line, format!("unknown return_section entry `{other}`"))),
                    }
                }
                match (origin, direction) {
                    (Some(origin), Some(direction)) if direction[0].hypot(direction[1]) > 0.0 => {
                        Some(RaySection { origin, direction })
                    }
                    _ => {
                        return Err(Error::Model(
                            "[return_section] needs an origin and a nonzero direction".into(),
                        ))
                    }
                }
            }
        };
        let mut tolerances = Tolerances::default();
        for e in secs.remove("options").unwrap_or_default() {
            let v = match e.value.parse::<f64>() {
                Ok(v) => v,
                Err(_) => constant(&e.value, e.line)?,
            };
            tolerances.set(&e.key, v).map_err(|err| model_err(e.line, err))?;
        }
        if polygon.is_none() && ray.is_none() {
            return Err(Error::Model("model needs a [polycycle] or a [return_section]".into()));
        }
        Ok(Self {
            params,
            defaults,
            field,
            dot_x,
            dot_y,
            polygon,
            ray,
            tolerances,
        })
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.params.iter().position(|p| p == name).ok_or_else(|| {
            Error::Usage(format!(
                "unknown parameter `{name}` (model declares: {})",
                self.params.join(", ")
            ))
        })
    }

    /// Defaults with `NAME=VALUE` overrides applied.
    pub fn parameter_point(&self, overrides: &[(String, f64)]) -> Result<Vec<f64>> {
        let mut mu = self.defaults.clone();
        for (name, v) in overrides {
            mu[self.param_index(name)?] = *v;
        }
        Ok(mu)
    }

    pub fn polygon(&self) -> Result<&Polygon> {
        self.polygon
            .as_ref()
            .ok_or_else(|| Error::Model("model has no [polycycle] section".into()))
    }
}
