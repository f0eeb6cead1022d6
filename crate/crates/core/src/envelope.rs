//! One-dimensional piecewise-affine envelopes of lines over an interval,
//! with exact area and centroid of the regions they cut against a level.

/// `y = slope * x + intercept`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    /// Line through `(x0, y0)` with the given slope.
    pub fn through(x0: f64, y0: f64, slope: f64) -> Self {
        Line {
            slope,
            intercept: y0 - slope * x0,
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    fn negated(&self) -> Line {
        Line {
            slope: -self.slope,
            intercept: -self.intercept,
        }
    }
}

/// Vertices `(x, y)` of a piecewise-affine function, sorted by `x`.
pub type Vertices = Vec<(f64, f64)>;

/// Pointwise minimum of `lines` over `[lo, hi]` (a concave function).
pub fn lower_envelope(lines: &[Line], lo: f64, hi: f64) -> Vertices {
    assert!(!lines.is_empty() && lo <= hi);
    let better_at = |x: f64, a: &Line, b: &Line| {
        let (ya, yb) = (a.at(x), b.at(x));
        ya < yb || (ya == yb && a.slope < b.slope)
    };
    let mut current = lines[0];
    for l in &lines[1..] {
        if better_at(lo, l, &current) {
            current = *l;
        }
    }
    let mut x = lo;
    let mut out = vec![(lo, current.at(lo))];
    loop {
        // the next line to take over is the one with smaller slope whose
        // crossing comes first; ties go to the smaller slope
        let mut next: Option<(f64, Line)> = None;
        for l in lines {
            if l.slope >= current.slope {
                continue;
            }
            let cross = ((l.intercept - current.intercept) / (current.slope - l.slope)).max(x);
            if cross >= hi {
                continue;
            }
            next = match next {
                Some((nx, nl)) if nx < cross || (nx == cross && nl.slope <= l.slope) => Some((nx, nl)),
                _ => Some((cross, *l)),
            };
        }
        match next {
            Some((cross, l)) => {
                if cross > x {
                    out.push((cross, current.at(cross).min(l.at(cross))));
                }
                x = cross;
                current = l;
            }
            None => break,
        }
    }
    if hi > out.last().unwrap().0 {
        out.push((hi, current.at(hi)));
    }
    out
}

/// Pointwise maximum of `lines` over `[lo, hi]` (a convex function).
pub fn upper_envelope(lines: &[Line], lo: f64, hi: f64) -> Vertices {
    let neg: Vec<Line> = lines.iter().map(Line::negated).collect();
    lower_envelope(&neg, lo, hi)
        .into_iter()
        .map(|(x, y)| (x, -y))
        .collect()
}

/// Value of a piecewise-affine function at `x` (clamped to its domain).
pub fn evaluate(vertices: &[(f64, f64)], x: f64) -> f64 {
    let first = vertices[0];
    if x <= first.0 {
        return first.1;
    }
    for w in vertices.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 1.0 };
            return y0 + t * (y1 - y0);
        }
    }
    vertices.last().unwrap().1
}

/// Minimizer of a piecewise-affine function; on a flat bottom the midpoint
/// of the minimizing interval is returned.
pub fn argmin(vertices: &[(f64, f64)]) -> (f64, f64) {
    let min = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * min.abs().max(1.0);
    let first = vertices.iter().position(|v| v.1 <= min + tol).unwrap();
    let last = vertices.iter().rposition(|v| v.1 <= min + tol).unwrap();
    let x = 0.5 * (vertices[first].0 + vertices[last].0);
    (x, min)
}

/// Maximizer, with the same flat-top midpoint rule as [`argmin`].
pub fn argmax(vertices: &[(f64, f64)]) -> (f64, f64) {
    let neg: Vec<(f64, f64)> = vertices.iter().map(|&(x, y)| (x, -y)).collect();
    let (x, y) = argmin(&neg);
    (x, -y)
}

/// Area and centroid of a planar region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub area: f64,
    pub cx: f64,
    pub cz: f64,
}

/// Integrals of `g`, `x g` and `g^2 / 2` over the part of each segment
/// where `g = sign * (y - level) >= 0`.
fn moments(vertices: &[(f64, f64)], level: f64, sign: f64) -> (f64, f64, f64) {
    let (mut a, mut mx, mut mz) = (0.0, 0.0, 0.0);
    for w in vertices.windows(2) {
        let (x0, x1) = (w[0].0, w[1].0);
        let (g0, g1) = (sign * (w[0].1 - level), sign * (w[1].1 - level));
        if x1 <= x0 || (g0 <= 0.0 && g1 <= 0.0) {
            continue;
        }
        let (mut a0, mut b0, mut ga, mut gb) = (x0, x1, g0, g1);
        if g0 < 0.0 {
            a0 = x0 + (x1 - x0) * (-g0) / (g1 - g0);
            ga = 0.0;
        } else if g1 < 0.0 {
            b0 = x0 + (x1 - x0) * g0 / (g0 - g1);
            gb = 0.0;
        }
        let h = b0 - a0;
        a += h * (ga + gb) / 2.0;
        mx += h / 6.0 * ((2.0 * a0 + b0) * ga + (a0 + 2.0 * b0) * gb);
        mz += h / 6.0 * (ga * ga + ga * gb + gb * gb);
    }
    (a, mx, mz)
}

/// `{(x, z) : level <= z <= f(x)}`
pub fn region_above(vertices: &[(f64, f64)], level: f64) -> Region {
    let (a, mx, mz) = moments(vertices, level, 1.0);
    if a <= 0.0 {
        return Region { area: 0.0, cx: f64::NAN, cz: level };
    }
    Region {
        area: a,
        cx: mx / a,
        cz: level + mz / a,
    }
}

/// `{(x, z) : f(x) <= z <= level}`
pub fn region_below(vertices: &[(f64, f64)], level: f64) -> Region {
    let (a, mx, mz) = moments(vertices, level, -1.0);
    if a <= 0.0 {
        return Region { area: 0.0, cx: f64::NAN, cz: level };
    }
    Region {
        area: a,
        cx: mx / a,
        cz: level - mz / a,
    }
}
