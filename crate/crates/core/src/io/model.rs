//! Line-oriented text format for splines, trimmed surfaces, shells,
//! trimmed trivariates and untrimming results.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spline::KnotVector;
use crate::trim::{Shell, Space, TrimLoop, TrimmedSurface, TrimmedTrivariate};
use crate::untrim::UntrimResult;
use crate::Spline;

pub const HEADER: &str = "untrim-model 1";

#[derive(Clone, Debug, PartialEq)]
pub struct TrimmedDef {
    pub base: String,
    pub inward: bool,
    /// Curve ids of each trim loop.
    pub loops: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShellDef {
    pub surfaces: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDef {
    pub trivariate: String,
    pub shell: String,
    pub space: Space,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultDef {
    pub model: String,
    pub tiles: Vec<String>,
}

/// Parsed model document. Entries keep their order within each kind; the
/// canonical text lists maps, trimmed surfaces, shells, models and results
/// in that order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelFile {
    pub maps: Vec<(String, Spline)>,
    pub trimmed: Vec<(String, TrimmedDef)>,
    pub shells: Vec<(String, ShellDef)>,
    pub models: Vec<(String, ModelDef)>,
    pub results: Vec<(String, ResultDef)>,
}

fn map_keyword(m: &Spline) -> &'static str {
    match m.dim_in() {
        1 => "curve",
        2 => "surface",
        _ => "trivariate",
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn join(xs: impl IntoIterator<Item = String>) -> String {
    xs.into_iter().collect::<Vec<_>>().join(" ")
}

fn find<'a, T>(items: &'a [(String, T)], id: &str) -> Option<&'a T> {
    items.iter().find(|(k, _)| k == id).map(|(_, v)| v)
}

impl ModelFile {
    pub fn map(&self, id: &str) -> Result<&Spline> {
        find(&self.maps, id).ok_or_else(|| Error::Reference(id.into()))
    }

    fn map_of(&self, id: &str, dim_in: usize) -> Result<&Spline> {
        let m = self.map(id)?;
        if m.dim_in() != dim_in {
            return Err(Error::Shape(format!("`{id}` is a {}", map_keyword(m))));
        }
        Ok(m)
    }

    pub fn trimmed_surface(&self, id: &str) -> Result<TrimmedSurface> {
        let d = find(&self.trimmed, id).ok_or_else(|| Error::Reference(id.into()))?;
        let base = self.map_of(&d.base, 2)?.clone();
        let (ul, uh) = base.domain(0);
        let (vl, vh) = base.domain(1);
        let tol = 1e-9 * (uh - ul).hypot(vh - vl);
        let loops = d
            .loops
            .iter()
            .map(|ids| {
                let curves = ids.iter().map(|c| self.map_of(c, 1).cloned()).collect::<Result<Vec<_>>>()?;
                TrimLoop::new(curves, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrimmedSurface { base, loops, inward: d.inward })
    }

    pub fn shell(&self, id: &str) -> Result<Shell> {
        let d = find(&self.shells, id).ok_or_else(|| Error::Reference(id.into()))?;
        Ok(Shell::new(d.surfaces.iter().map(|s| self.trimmed_surface(s)).collect::<Result<Vec<_>>>()?))
    }

    /// Builds the trimmed trivariate named `id`.
    pub fn model(&self, id: &str) -> Result<TrimmedTrivariate> {
        let d = find(&self.models, id).ok_or_else(|| Error::Reference(id.into()))?;
        TrimmedTrivariate::new(self.map_of(&d.trivariate, 3)?.clone(), self.shell(&d.shell)?, d.space)
    }

    pub fn model_ids(&self) -> Vec<&str> {
        self.models.iter().map(|(k, _)| k.as_str()).collect()
    }

    /// Tiles listed by the result named `id`.
    pub fn result_tiles(&self, id: &str) -> Result<Vec<Spline>> {
        let d = find(&self.results, id).ok_or_else(|| Error::Reference(id.into()))?;
        d.tiles.iter().map(|t| self.map_of(t, 3).cloned()).collect()
    }

    /// Adds `tt` under `name`, with derived ids for its parts.
    pub fn add_model(&mut self, name: &str, tt: &TrimmedTrivariate) {
        let t_id = format!("{name}.t");
        self.maps.push((t_id.clone(), tt.t.clone()));
        let mut surfaces = Vec::new();
        for (i, s) in tt.shell.surfaces.iter().enumerate() {
            let base = format!("{name}.s{i}");
            self.maps.push((base.clone(), s.base.clone()));
            let mut loops = Vec::new();
            for (j, l) in s.loops.iter().enumerate() {
                let mut ids = Vec::new();
                for (k, c) in l.curves.iter().enumerate() {
                    let id = format!("{name}.s{i}.l{j}.c{k}");
                    self.maps.push((id.clone(), c.clone()));
                    ids.push(id);
                }
                loops.push(ids);
            }
            let f = format!("{name}.f{i}");
            self.trimmed.push((f.clone(), TrimmedDef { base, inward: s.inward, loops }));
            surfaces.push(f);
        }
        let shell = format!("{name}.shell");
        self.shells.push((shell.clone(), ShellDef { surfaces }));
        self.models.push((name.into(), ModelDef { trivariate: t_id, shell, space: tt.space }));
    }

    /// Adds the tiles of `ur` as a result of the model `model`.
    pub fn add_result(&mut self, name: &str, model: &str, ur: &UntrimResult) {
        let mut tiles = Vec::new();
        for (i, t) in ur.tiles.iter().enumerate() {
            let id = format!("{name}.tile{i}");
            self.maps.push((id.clone(), t.clone()));
            tiles.push(id);
        }
        self.results.push((name.into(), ResultDef { model: model.into(), tiles }));
    }
}

/// Canonical text of `m`.
pub fn serialize_model(m: &ModelFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    for (id, s) in &m.maps {
        let _ = writeln!(out, "{} {id}", map_keyword(s));
        let _ = writeln!(out, "  degree {}", join(s.degrees().iter().map(|d| d.to_string())));
        for b in s.bases() {
            let _ = writeln!(out, "  knots {}", join(b.knots().iter().map(|k| num(*k))));
        }
        let _ = writeln!(out, "  dim {}", s.dim_out());
        for p in s.points() {
            let _ = writeln!(out, "  ctrl {}", join(p.iter().map(|x| num(*x))));
        }
        let _ = writeln!(out, "end");
    }
    for (id, t) in &m.trimmed {
        let _ = writeln!(out, "trimmed {id}");
        let _ = writeln!(out, "  base {}", t.base);
        let _ = writeln!(out, "  inward {}", t.inward);
        for l in &t.loops {
            let _ = writeln!(out, "  loop {}", l.join(" "));
        }
        let _ = writeln!(out, "end");
    }
    for (id, s) in &m.shells {
        let _ = writeln!(out, "shell {id}");
        let _ = writeln!(out, "  surfaces {}", s.surfaces.join(" "));
        let _ = writeln!(out, "end");
    }
    for (id, d) in &m.models {
        let space = match d.space {
            Space::Parametric => "parametric",
            Space::Euclidean => "euclidean",
        };
        let _ = writeln!(out, "model {id}");
        let _ = writeln!(out, "  trivariate {}", d.trivariate);
        let _ = writeln!(out, "  shell {}", d.shell);
        let _ = writeln!(out, "  space {space}");
        let _ = writeln!(out, "end");
    }
    for (id, r) in &m.results {
        let _ = writeln!(out, "result {id}");
        let _ = writeln!(out, "  model {}", r.model);
        let _ = writeln!(out, "  tiles {}", r.tiles.join(" "));
        let _ = writeln!(out, "end");
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    col: usize,
}

impl Tok<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn float(&self) -> Result<f64> {
        self.text.parse::<f64>().map_err(|_| self.err(format!("expected a number, found `{}`", self.text)))
    }

    fn usize(&self) -> Result<usize> {
        self.text.parse::<usize>().map_err(|_| self.err(format!("expected a count, found `{}`", self.text)))
    }
}

fn lines(text: &str) -> Vec<Vec<Tok<'_>>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("");
            let mut toks = Vec::new();
            let mut start = None;
            for (c, ch) in l.char_indices().chain(std::iter::once((l.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(c),
                    (true, Some(s)) => {
                        toks.push(Tok { text: &l[s..c], line: i + 1, col: l[..s].chars().count() + 1 });
                        start = None;
                    }
                    _ => {}
                }
            }
            toks
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Want {
    Map(usize),
    Trimmed,
    Shell,
    Model,
    Result,
}

fn kind_name(w: Want) -> &'static str {
    match w {
        Want::Map(1) => "curve",
        Want::Map(2) => "surface",
        Want::Map(_) => "trivariate",
        Want::Trimmed => "trimmed surface",
        Want::Shell => "shell",
        Want::Model => "model",
        Want::Result => "result",
    }
}

fn expect_args<'a>(l: &[Tok<'a>], n: usize) -> Result<()> {
    if l.len() != n + 1 {
        return Err(l[0].err(format!("`{}` takes {n} argument(s)", l[0].text)));
    }
    Ok(())
}

fn parse_map(head: &Tok, dim_in: usize, body: &[Vec<Tok>]) -> Result<Spline> {
    let mut degree: Option<Vec<usize>> = None;
    let mut knots: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut ctrl: Vec<f64> = Vec::new();
    let mut n_ctrl = 0;
    for l in body {
        let rest = &l[1..];
        match l[0].text {
            "degree" => {
                expect_args(l, dim_in)?;
                degree = Some(rest.iter().map(Tok::usize).collect::<Result<_>>()?);
            }
            "knots" => {
                if knots.len() == dim_in {
                    return Err(l[0].err(format!("more than {dim_in} knot vectors")));
                }
                knots.push(rest.iter().map(Tok::float).collect::<Result<_>>()?);
            }
            "dim" => {
                expect_args(l, 1)?;
                dim = Some(rest[0].usize()?);
            }
            "ctrl" => {
                let q = dim.ok_or_else(|| l[0].err("`dim` must precede `ctrl`"))?;
                expect_args(l, q)?;
                ctrl.extend(rest.iter().map(Tok::float).collect::<Result<Vec<_>>>()?);
                n_ctrl += 1;
            }
            "weights" | "weight" => {
                return Err(Error::Unsupported(format!(
                    "{}:{}: rational weights are not supported",
                    l[0].line, l[0].col
                )))
            }
            other => return Err(l[0].err(format!("unknown field `{other}`"))),
        }
    }
    let degree = degree.ok_or_else(|| head.err("missing `degree`"))?;
    let dim = dim.ok_or_else(|| head.err("missing `dim`"))?;
    if knots.len() != dim_in {
        return Err(head.err(format!("expected {dim_in} knot vectors, found {}", knots.len())));
    }
    let bases = degree
        .iter()
        .zip(knots)
        .map(|(d, k)| KnotVector::new(*d, k))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| head.err(e.to_string()))?;
    let want: usize = bases.iter().map(|b| b.num_ctrl()).product();
    if n_ctrl != want {
        return Err(head.err(format!("expected {want} control points, found {n_ctrl}")));
    }
    Spline::new(bases, dim, ctrl).map_err(|e| head.err(e.to_string()))
}

/// Parses a model document. Errors carry the line and column of the
/// offending token.
pub fn parse_model(text: &str) -> Result<ModelFile> {
    let ls = lines(text);
    let Some(first) = ls.first() else {
        return Err(Error::Parse { line: 1, col: 1, msg: "empty document".into() });
    };
    if first[0].text != "untrim-model" {
        return Err(first[0].err(format!("expected `{HEADER}`")));
    }
    expect_args(first, 1)?;
    if first[1].text != "1" {
        return Err(Error::Unsupported(format!("format version {}", first[1].text)));
    }
    let mut m = ModelFile::default();
    let mut seen: HashMap<String, Want> = HashMap::new();
    let mut refs: Vec<(Tok, Want)> = Vec::new();
    let mut i = 1;
    while i < ls.len() {
        let head = &ls[i];
        let kw = head[0];
        expect_args(head, 1)?;
        let id = head[1];
        let end = ls[i + 1..]
            .iter()
            .position(|l| l[0].text == "end")
            .map(|p| p + i + 1)
            .ok_or_else(|| kw.err(format!("`{}` block is not closed by `end`", kw.text)))?;
        expect_args(&ls[end], 0)?;
        let body = &ls[i + 1..end];
        let kind = match kw.text {
            "curve" => Want::Map(1),
            "surface" => Want::Map(2),
            "trivariate" => Want::Map(3),
            "trimmed" => Want::Trimmed,
            "shell" => Want::Shell,
            "model" => Want::Model,
            "result" => Want::Result,
            other => return Err(kw.err(format!("unknown block `{other}`"))),
        };
        if seen.insert(id.text.to_string(), kind).is_some() {
            return Err(id.err(format!("duplicate id `{}`", id.text)));
        }
        match kw.text {
            "curve" | "surface" | "trivariate" => {
                let Want::Map(d) = kind else { unreachable!() };
                m.maps.push((id.text.into(), parse_map(&kw, d, body)?));
            }
            "trimmed" => {
                let mut base = None;
                let mut inward = None;
                let mut loops = Vec::new();
                for l in body {
                    match l[0].text {
                        "base" => {
                            expect_args(l, 1)?;
                            refs.push((l[1], Want::Map(2)));
                            base = Some(l[1].text.to_string());
                        }
                        "inward" => {
                            expect_args(l, 1)?;
                            inward = Some(match l[1].text {
                                "true" => true,
                                "false" => false,
                                _ => return Err(l[1].err("expected `true` or `false`")),
                            });
                        }
                        "loop" => {
                            if l.len() < 2 {
                                return Err(l[0].err("empty loop"));
                            }
                            refs.extend(l[1..].iter().map(|t| (*t, Want::Map(1))));
                            loops.push(l[1..].iter().map(|t| t.text.to_string()).collect());
                        }
                        other => return Err(l[0].err(format!("unknown field `{other}`"))),
                    }
                }
                let base = base.ok_or_else(|| kw.err("missing `base`"))?;
                let inward = inward.ok_or_else(|| kw.err("missing `inward`"))?;
                m.trimmed.push((id.text.into(), TrimmedDef { base, inward, loops }));
            }
            "shell" => {
                let mut surfaces = Vec::new();
                for l in body {
                    if l[0].text != "surfaces" {
                        return Err(l[0].err(format!("unknown field `{}`", l[0].text)));
                    }
                    refs.extend(l[1..].iter().map(|t| (*t, Want::Trimmed)));
                    surfaces.extend(l[1..].iter().map(|t| t.text.to_string()));
                }
                m.shells.push((id.text.into(), ShellDef { surfaces }));
            }
            "model" => {
                let (mut t, mut shell, mut space) = (None, None, None);
                for l in body {
                    expect_args(l, 1)?;
                    match l[0].text {
                        "trivariate" => {
                            refs.push((l[1], Want::Map(3)));
                            t = Some(l[1].text.to_string());
                        }
                        "shell" => {
                            refs.push((l[1], Want::Shell));
                            shell = Some(l[1].text.to_string());
                        }
                        "space" => {
                            space = Some(match l[1].text {
                                "parametric" => Space::Parametric,
                                "euclidean" => Space::Euclidean,
                                _ => return Err(l[1].err("expected `parametric` or `euclidean`")),
                            });
                        }
                        other => return Err(l[0].err(format!("unknown field `{other}`"))),
                    }
                }
                m.models.push((
                    id.text.into(),
                    ModelDef {
                        trivariate: t.ok_or_else(|| kw.err("missing `trivariate`"))?,
                        shell: shell.ok_or_else(|| kw.err("missing `shell`"))?,
                        space: space.ok_or_else(|| kw.err("missing `space`"))?,
                    },
                ));
            }
            _ => {
                let (mut model, mut tiles) = (None, Vec::new());
                for l in body {
                    match l[0].text {
                        "model" => {
                            expect_args(l, 1)?;
                            refs.push((l[1], Want::Model));
                            model = Some(l[1].text.to_string());
                        }
                        "tiles" => {
                            refs.extend(l[1..].iter().map(|t| (*t, Want::Map(3))));
                            tiles.extend(l[1..].iter().map(|t| t.text.to_string()));
                        }
                        other => return Err(l[0].err(format!("unknown field `{other}`"))),
                    }
                }
                let model = model.ok_or_else(|| kw.err("missing `model`"))?;
                m.results.push((id.text.into(), ResultDef { model, tiles }));
            }
        }
        i = end + 1;
    }
    for (t, want) in refs {
        match seen.get(t.text) {
            None => return Err(Error::Reference(t.text.into())),
            Some(k) if *k != want => {
                return Err(t.err(format!("`{}` is not a {}", t.text, kind_name(want))));
            }
            _ => {}
        }
    }
    Ok(m)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn write_model(path: impl AsRef<Path>, m: &ModelFile) -> Result<()> {
    Ok(std::fs::write(path, serialize_model(m))?)
}
