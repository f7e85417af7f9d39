//! Plain-text mesh format.
//!
//! ```text
//! #nodes n
//! x y z            (n lines, cm)
//! #tets m
//! a b c d          (m lines, zero-based node ids)
//! #coords n
//! tm ab rt side    (side is LV or RV)
//! #tags n
//! tags layer       (tags: none | epi, lvendo, rvendo, base joined by '+';
//!                   layer: none | sparse | dense)
//! ```
//!
//! Reals are written with nine significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::coords::{CobivecoCoord, Side};
use crate::mesh::{EndoLayer, Mesh, SurfaceTags};
use crate::num::Real;
use crate::vec3::Vec3;

pub fn write_mesh<T: Real, W: Write>(mesh: &Mesh<T>, mut w: W) -> Result<()> {
    writeln!(w, "#nodes {}", mesh.nodes.len())?;
    for p in &mesh.nodes {
        writeln!(w, "{:.8e} {:.8e} {:.8e}", p[0], p[1], p[2])?;
    }
    writeln!(w, "#tets {}", mesh.tets.len())?;
    for t in &mesh.tets {
        writeln!(w, "{} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "#coords {}", mesh.coords.len())?;
    for c in &mesh.coords {
        writeln!(w, "{:.8e} {:.8e} {:.8e} {}", c.tm, c.ab, c.rt, c.side)?;
    }
    writeln!(w, "#tags {}", mesh.surface_tags.len())?;
    for (t, l) in mesh.surface_tags.iter().zip(&mesh.endo_layer) {
        writeln!(w, "{} {}", t, l.as_str())?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_mesh<T: Real>(mesh: &Mesh<T>, path: impl AsRef<Path>) -> Result<()> {
    write_mesh(mesh, BufWriter::new(File::create(path)?))
}

pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<Mesh<T>> {
    let path = path.as_ref();
    read_mesh(BufReader::new(File::open(path)?), path)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
    path: PathBuf,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, reason: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), line: self.line, reason: reason.into() }
    }

    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let l = self.next_line()?;
        let mut it = l.split_whitespace();
        let tag = format!("#{name}");
        if it.next() != Some(tag.as_str()) {
            return Err(self.err(format!("expected `{tag} <count>` section header")));
        }
        let count = it
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| self.err(format!("`{tag}` needs a record count")))?;
        Ok(count)
    }

    fn fields<const N: usize>(&mut self, what: &str, index: usize) -> Result<[String; N]> {
        let l = self.next_line()?;
        let parts: Vec<String> = l.split_whitespace().map(String::from).collect();
        parts
            .try_into()
            .map_err(|p: Vec<String>| self.err(format!("{what} {index}: expected {N} fields, found {}", p.len())))
    }

    fn real<T: Real>(&self, s: &str, what: &str, index: usize) -> Result<T> {
        s.parse::<T>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("{what} {index}: `{s}` is not a finite number")))
    }
}

pub fn read_mesh<T: Real, R: BufRead>(reader: R, path: impl AsRef<Path>) -> Result<Mesh<T>> {
    let mut r = Lines { inner: reader.lines(), line: 0, path: path.as_ref().to_path_buf() };

    let n = r.header("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let [x, y, z] = r.fields::<3>("node", i)?;
        nodes.push(Vec3::new(r.real(&x, "node", i)?, r.real(&y, "node", i)?, r.real(&z, "node", i)?));
    }

    let m = r.header("tets")?;
    let mut tets = Vec::with_capacity(m);
    for i in 0..m {
        let f = r.fields::<4>("tet", i)?;
        let mut t = [0usize; 4];
        for (slot, s) in t.iter_mut().zip(&f) {
            *slot = s.parse().map_err(|_| r.err(format!("tet {i}: `{s}` is not a node index")))?;
            if *slot >= n {
                return Err(r.err(format!("tet {i}: node index {slot} out of range (n = {n})")));
            }
        }
        tets.push(t);
    }

    let nc = r.header("coords")?;
    if nc != n {
        return Err(r.err(format!("#coords has {nc} records for {n} nodes")));
    }
    let mut coords = Vec::with_capacity(n);
    for i in 0..n {
        let [tm, ab, rt, side] = r.fields::<4>("coord", i)?;
        let side: Side = side.parse().map_err(|e: String| r.err(format!("coord {i}: {e}")))?;
        let c = CobivecoCoord {
            tm: r.real(&tm, "coord", i)?,
            ab: r.real(&ab, "coord", i)?,
            rt: r.real(&rt, "coord", i)?,
            side,
        };
        c.validate().map_err(|e| {
            Error::CoordinateRange(format!("{}:{}: coord {i}: {e}", r.path.display(), r.line))
        })?;
        coords.push(c);
    }

    let nt = r.header("tags")?;
    if nt != n {
        return Err(r.err(format!("#tags has {nt} records for {n} nodes")));
    }
    let mut tags = Vec::with_capacity(n);
    let mut layer = Vec::with_capacity(n);
    for i in 0..n {
        let [t, l] = r.fields::<2>("tag", i)?;
        tags.push(SurfaceTags::parse(&t).ok_or_else(|| r.err(format!("tag {i}: unknown surface tag `{t}`")))?);
        layer.push(EndoLayer::parse(&l).ok_or_else(|| r.err(format!("tag {i}: unknown endo layer `{l}`")))?);
    }
    Mesh::new(nodes, tets, coords, tags, layer)
}
