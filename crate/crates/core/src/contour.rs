//! Marching squares over a rectilinear grid.
//!
//! A vertex is *inside* when its value is `≤ level` (and not NaN); `+∞` is
//! always outside. Crossing points are computed once per grid edge by a
//! caller-supplied locator so that neighbouring cells share coordinates
//! exactly. Output polylines are oriented counterclockwise.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    /// Closed polylines do not repeat their first point.
    pub closed: bool,
}

impl Polyline {
    /// Shoelace area (signed; positive for counterclockwise).
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }
}

pub fn signed_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = points[i];
        let [x1, y1] = points[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

/// Even–odd point-in-polygon test.
pub fn point_in_polygon(points: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = points.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let [xi, yi] = points[i];
        let [xj, yj] = points[j];
        if (yi > p[1]) != (yj > p[1]) && p[0] < (xj - xi) * (p[1] - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Scalar field sampled on `xs × ys`; `values[j * xs.len() + i]` is the value
/// at `(xs[i], ys[j])`.
#[derive(Debug, Clone, Copy)]
pub struct GridField<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub values: &'a [f64],
}

impl GridField<'_> {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.xs[i], self.ys[j]]
    }
}

fn is_inside(v: f64, level: f64) -> bool {
    v <= level
}

/// Linear interpolation of the level crossing between two vertices, falling
/// back to the midpoint when one value is not finite.
pub fn linear_crossing(level: f64) -> impl FnMut([f64; 2], f64, [f64; 2], f64) -> [f64; 2] {
    move |pa, va, pb, vb| {
        let t = if va.is_finite() && vb.is_finite() && va != vb {
            ((level - va) / (vb - va)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    }
}

// Edge keys: (orientation, i, j); 0 = horizontal (i,j)-(i+1,j), 1 = vertical
// (i,j)-(i,j+1).
type EdgeKey = (u8, usize, usize);

/// Traces the `level` contour. `locate(pa, va, pb, vb)` returns the crossing on
/// the segment from an inside vertex `pa` to an outside vertex `pb`.
pub fn contour_lines<L>(field: GridField<'_>, level: f64, mut locate: L) -> Vec<Polyline>
where
    L: FnMut([f64; 2], f64, [f64; 2], f64) -> [f64; 2],
{
    let (nx, ny) = (field.xs.len(), field.ys.len());
    assert_eq!(field.values.len(), nx * ny, "grid value count mismatch");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let mut adjacency: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
    let mut link = |a: EdgeKey, b: EdgeKey| {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v = [
                field.at(i, j),
                field.at(i + 1, j),
                field.at(i + 1, j + 1),
                field.at(i, j + 1),
            ];
            let inside = v.map(|x| is_inside(x, level));
            let bottom = (0, i, j);
            let right = (1, i + 1, j);
            let top = (0, i, j + 1);
            let left = (1, i, j);
            // the two edges adjacent to each corner
            let corner_edges = [(left, bottom), (bottom, right), (right, top), (top, left)];
            let count = inside.iter().filter(|&&b| b).count();
            match count {
                0 | 4 => {}
                1 | 3 => {
                    // the odd corner out
                    let c = (0..4).find(|&c| inside[c] == (count == 1)).unwrap();
                    let (a, b) = corner_edges[c];
                    link(a, b);
                }
                _ => {
                    if inside[0] == inside[2] {
                        // saddle: decide by the cell-centre value
                        let centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                        let centre_inside = is_inside(centre, level);
                        let cut = if centre_inside == inside[0] {
                            [1, 3]
                        } else {
                            [0, 2]
                        };
                        for c in cut {
                            let (a, b) = corner_edges[c];
                            link(a, b);
                        }
                    } else if inside[0] == inside[1] {
                        link(left, right);
                    } else {
                        link(bottom, top);
                    }
                }
            }
        }
    }

    let mut points: BTreeMap<EdgeKey, [f64; 2]> = BTreeMap::new();
    for &(o, i, j) in adjacency.keys() {
        let (ia, ja, ib, jb) = if o == 0 {
            (i, j, i + 1, j)
        } else {
            (i, j, i, j + 1)
        };
        let (va, vb) = (field.at(ia, ja), field.at(ib, jb));
        let (pa, pb) = (field.point(ia, ja), field.point(ib, jb));
        let p = if is_inside(va, level) {
            locate(pa, va, pb, vb)
        } else {
            locate(pb, vb, pa, va)
        };
        points.insert((o, i, j), p);
    }

    let mut visited: BTreeMap<EdgeKey, bool> = adjacency.keys().map(|&k| (k, false)).collect();
    let mut lines = Vec::new();
    // open chains (degree 1) first, then cycles, each in key order
    let starts: Vec<EdgeKey> = adjacency
        .iter()
        .filter(|(_, n)| n.len() == 1)
        .map(|(k, _)| *k)
        .chain(adjacency.keys().copied())
        .collect();
    for start in starts {
        if visited[&start] {
            continue;
        }
        let mut chain = Vec::new();
        let mut prev: Option<EdgeKey> = None;
        let mut cur = start;
        let closed;
        loop {
            visited.insert(cur, true);
            chain.push(points[&cur]);
            let next = adjacency[&cur]
                .iter()
                .copied()
                .find(|&n| Some(n) != prev && !visited[&n]);
            match next {
                Some(n) => {
                    prev = Some(cur);
                    cur = n;
                }
                None => {
                    closed = chain.len() > 2 && adjacency[&cur].contains(&start);
                    break;
                }
            }
        }
        let mut line = Polyline {
            points: chain,
            closed,
        };
        if line.closed && line.signed_area() < 0.0 {
            line.points.reverse();
        }
        lines.push(line);
    }
    lines
}
