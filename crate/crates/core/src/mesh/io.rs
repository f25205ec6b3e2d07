//! Plain-text mesh format.
//!
//! ```text
//! vertices N triangles M edges K h H eps E
//! x y cx cs          (N lines: physical and chart coordinates)
//! i j k tag          (M lines: interior | strip)
//! i j tag            (K lines: graph | side | base)
//! ```
//!
//! Floats use the shortest representation that parses back to the same bits,
//! so a write/read cycle is exact.

use super::{EdgeTag, ElementTag, Mesh};
use crate::error::{Error, Result};
use crate::scalar::Real;
use std::io::{BufRead, Write};

pub fn write_mesh<T: Real, W: Write>(mesh: &Mesh<T>, mut out: W) -> Result<()> {
    writeln!(
        out,
        "vertices {} triangles {} edges {} h {} eps {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_edges.len(),
        mesh.h,
        mesh.eps
    )?;
    for (p, c) in mesh.vertices.iter().zip(&mesh.chart_coords) {
        writeln!(out, "{} {} {} {}", p[0], p[1], c[0], c[1])?;
    }
    for (t, tag) in mesh.triangles.iter().zip(&mesh.element_tags) {
        writeln!(out, "{} {} {} {}", t[0], t[1], t[2], tag.name())?;
    }
    for (e, tag) in &mesh.boundary_edges {
        writeln!(out, "{} {} {}", e[0], e[1], tag.name())?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<(usize, String)> {
        loop {
            self.line += 1;
            match self.inner.next() {
                None => {
                    return Err(Error::Parse {
                        line: self.line,
                        message: "unexpected end of file".into(),
                    })
                }
                Some(l) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok((self.line, l));
                    }
                }
            }
        }
    }
}

fn parse<V: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<V> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("malformed {what} `{tok}`"),
    })
}

fn fields(l: &str, n: usize, line: usize) -> Result<Vec<&str>> {
    let f: Vec<&str> = l.split_whitespace().collect();
    if f.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} fields, found {}", f.len()),
        });
    }
    Ok(f)
}

pub fn read_mesh<T: Real, R: BufRead>(input: R) -> Result<Mesh<T>> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    let (ln, header) = lines.next_line()?;
    let f = fields(&header, 10, ln)?;
    for (i, k) in ["vertices", "triangles", "edges", "h", "eps"].iter().enumerate() {
        if f[2 * i] != *k {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected `{k}`, found `{}`", f[2 * i]),
            });
        }
    }
    let nv: usize = parse(f[1], ln, "count")?;
    let nt: usize = parse(f[3], ln, "count")?;
    let ne: usize = parse(f[5], ln, "count")?;
    let h: T = parse(f[7], ln, "number")?;
    let eps: T = parse(f[9], ln, "number")?;

    let mut vertices = Vec::with_capacity(nv);
    let mut chart_coords = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next_line()?;
        let f = fields(&l, 4, ln)?;
        let v: Vec<T> = f.iter().map(|t| parse(t, ln, "number")).collect::<Result<_>>()?;
        vertices.push([v[0], v[1]]);
        chart_coords.push([v[2], v[3]]);
    }
    let index = |t: &str, ln: usize| -> Result<usize> {
        let i: usize = parse(t, ln, "vertex index")?;
        if i >= nv {
            return Err(Error::Parse {
                line: ln,
                message: format!("vertex index {i} out of range"),
            });
        }
        Ok(i)
    };
    let mut triangles = Vec::with_capacity(nt);
    let mut element_tags = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next_line()?;
        let f = fields(&l, 4, ln)?;
        triangles.push([index(f[0], ln)?, index(f[1], ln)?, index(f[2], ln)?]);
        element_tags.push(match f[3] {
            "interior" => ElementTag::Interior,
            "strip" => ElementTag::Strip,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("unknown element tag `{other}`"),
                })
            }
        });
    }
    let mut boundary_edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next_line()?;
        let f = fields(&l, 3, ln)?;
        let tag = match f[2] {
            "graph" => EdgeTag::Graph,
            "side" => EdgeTag::Side,
            "base" => EdgeTag::Base,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("unknown edge tag `{other}`"),
                })
            }
        };
        boundary_edges.push(([index(f[0], ln)?, index(f[1], ln)?], tag));
    }
    Ok(Mesh {
        vertices,
        chart_coords,
        triangles,
        element_tags,
        boundary_edges,
        h,
        eps,
    })
}
