use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::comparison_distance;
use super::space::{GeodesicSpace, SpaceDescriptor};
use crate::error::{Error, Result};

/// Default absolute comparison tolerance.
pub const DEFAULT_CAT_TOL: f64 = 1e-7;

/// Default number of points sampled on each side.
pub const DEFAULT_SAMPLES_PER_SIDE: usize = 8;

/// A sampled side point: `side` is the index of the opposite vertex.
#[derive(Debug, Clone)]
pub struct SideSample<P> {
    pub side: usize,
    pub fraction: f64,
    pub point: P,
}

/// Vertices `[x, y, z]`, sides `[a, b, c] = [d(y,z), d(z,x), d(x,y)]` and
/// the sampled side points.
#[derive(Debug, Clone)]
pub struct GeodesicTriangle<P> {
    pub vertices: [P; 3],
    pub sides: [f64; 3],
    pub samples: Vec<SideSample<P>>,
}

impl<P: Clone> GeodesicTriangle<P> {
    /// Builds the triangle with `m` points per side at fractions `j/(m+1)`.
    pub fn sample<S: GeodesicSpace<Point = P>>(space: &S, vertices: [P; 3], m: usize) -> Result<Self> {
        let sides = side_lengths(space, &vertices, false)?;
        let mut samples = Vec::with_capacity(3 * m);
        for side in 0..3 {
            let (from, to) = (&vertices[(side + 1) % 3], &vertices[(side + 2) % 3]);
            for j in 1..=m {
                let fraction = j as f64 / (m + 1) as f64;
                let point = space.geodesic_point(from, to, fraction)?;
                samples.push(SideSample { side, fraction, point });
            }
        }
        Ok(GeodesicTriangle { vertices, sides, samples })
    }
}

/// A violating quadruple: vertex `x`, the side `[y, z]` opposite it and the
/// point `w` at `fraction` along that side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub fraction: f64,
    /// `[d(y,z), d(z,x), d(x,y)]`
    pub sides: [f64; 3],
    pub space_distance: f64,
    pub model_distance: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatReport {
    pub space: SpaceDescriptor,
    pub k: f64,
    pub triangles: usize,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub verdict: Verdict,
    /// Largest `d_X(x, w) - d_M(x~, w~)` seen.
    pub worst_margin: f64,
    /// The sample attaining `worst_margin`, when the verdict is fail.
    pub witness: Option<Witness>,
}

fn side_lengths<S: GeodesicSpace>(space: &S, v: &[S::Point; 3], verify: bool) -> Result<[f64; 3]> {
    let d = |p: &S::Point, q: &S::Point| {
        if verify {
            space.verify_distance(p, q)
        } else {
            space.distance(p, q)
        }
    };
    let mut s = [d(&v[1], &v[2])?, d(&v[2], &v[0])?, d(&v[0], &v[1])?];
    // Solver noise may break the triangle inequality by a hair.
    for i in 0..3 {
        let bound = s[(i + 1) % 3] + s[(i + 2) % 3];
        if s[i] > bound {
            s[i] = bound;
        }
    }
    Ok(s)
}

/// Comparison distance from the vertex opposite `side` to the point at
/// `fraction` along that side.
fn model_margin_target(k: f64, sides: &[f64; 3], side: usize, fraction: f64) -> Result<f64> {
    let a = sides[side];
    let b = sides[(side + 1) % 3];
    let c = sides[(side + 2) % 3];
    // Seen from vertex i the side runs from vertex i+1 to i+2.
    comparison_distance(k, a, b, c, fraction)
}

struct Candidate<P> {
    vertices: [P; 3],
    sides: [f64; 3],
    side: usize,
    fraction: f64,
    point: P,
    space_distance: f64,
    model_distance: f64,
    margin: f64,
    /// Whether `point` came from an alternative geodesic.
    alternative: bool,
}

impl<P> Candidate<P> {
    fn witness<S: GeodesicSpace<Point = P>>(&self, space: &S) -> Witness {
        let i = self.side;
        Witness {
            x: space.coords(&self.vertices[i]),
            y: space.coords(&self.vertices[(i + 1) % 3]),
            z: space.coords(&self.vertices[(i + 2) % 3]),
            w: space.coords(&self.point),
            fraction: self.fraction,
            sides: [self.sides[i], self.sides[(i + 1) % 3], self.sides[(i + 2) % 3]],
            space_distance: self.space_distance,
            model_distance: self.model_distance,
            margin: self.margin,
        }
    }
}

fn evaluate<S: GeodesicSpace>(
    space: &S,
    k: f64,
    vertices: &[S::Point; 3],
    sides: &[f64; 3],
    side: usize,
    fraction: f64,
    point: S::Point,
    alternative: bool,
) -> Result<Candidate<S::Point>> {
    let space_distance = space.distance(&vertices[side], &point)?;
    let model_distance = model_margin_target(k, sides, side, fraction)?;
    Ok(Candidate {
        vertices: vertices.clone(),
        sides: *sides,
        side,
        fraction,
        point,
        space_distance,
        model_distance,
        margin: space_distance - model_distance,
        alternative,
    })
}

/// Recomputes a candidate at the space's verification tolerance.
fn reverify<S: GeodesicSpace>(space: &S, k: f64, c: &Candidate<S::Point>) -> Result<Candidate<S::Point>> {
    let sides = side_lengths(space, &c.vertices, true)?;
    let point = if c.alternative {
        c.point.clone()
    } else {
        let (from, to) = (&c.vertices[(c.side + 1) % 3], &c.vertices[(c.side + 2) % 3]);
        space.verify_geodesic_point(from, to, c.fraction)?
    };
    let space_distance = space.verify_distance(&c.vertices[c.side], &point)?;
    let model_distance = model_margin_target(k, &sides, c.side, c.fraction)?;
    Ok(Candidate {
        vertices: c.vertices.clone(),
        sides,
        side: c.side,
        fraction: c.fraction,
        point,
        space_distance,
        model_distance,
        margin: space_distance - model_distance,
        alternative: c.alternative,
    })
}

fn check_k(k: f64) -> Result<()> {
    if !(k < 0.0) || !k.is_finite() {
        return Err(Error::Unsupported(format!("CAT(k) comparison needs finite k < 0, got {k}")));
    }
    Ok(())
}

fn triangle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn in_triangle(e: Error, index: usize) -> Error {
    match e {
        Error::Numerical { what, estimate, residual } => Error::Numerical {
            what: format!("triangle {index}: {what}"),
            estimate,
            residual,
        },
        Error::Domain(m) => Error::Domain(format!("triangle {index}: {m}")),
        other => other,
    }
}

struct TriangleOutcome<P> {
    samples: usize,
    worst: Option<Candidate<P>>,
}

fn test_triangle<S: GeodesicSpace>(
    space: &S,
    k: f64,
    m: usize,
    seed: u64,
    index: usize,
    tol: f64,
) -> Result<TriangleOutcome<S::Point>> {
    let mut rng = triangle_rng(seed, index);
    let vertices = [space.sample_point(&mut rng), space.sample_point(&mut rng), space.sample_point(&mut rng)];
    let triangle = GeodesicTriangle::sample(space, vertices, m)?;
    let mut samples = 0;
    let mut worst: Option<Candidate<S::Point>> = None;
    let mut consider = |c: Candidate<S::Point>| -> Result<()> {
        let c = if c.margin > tol && !space.is_exact() {
            reverify(space, k, &c)?
        } else {
            c
        };
        if worst.as_ref().map_or(true, |w| c.margin > w.margin) {
            worst = Some(c);
        }
        Ok(())
    };
    for sample in &triangle.samples {
        let c = evaluate(space, k, &triangle.vertices, &triangle.sides, sample.side, sample.fraction, sample.point.clone(), false)?;
        samples += 1;
        consider(c)?;
        let (from, to) = (&triangle.vertices[(sample.side + 1) % 3], &triangle.vertices[(sample.side + 2) % 3]);
        for alt in space.alternative_geodesic_points(from, to, sample.fraction)? {
            let c = evaluate(space, k, &triangle.vertices, &triangle.sides, sample.side, sample.fraction, alt, true)?;
            samples += 1;
            consider(c)?;
        }
    }
    Ok(TriangleOutcome { samples, worst })
}

/// Checks `d_X(x, w) <= d_M(x~, w~) + tol` for every vertex and every sampled
/// point on the opposite side of `triangle_count` seeded random triangles,
/// including every alternative geodesic the space lists.
///
/// Triangle `i` draws from stream `i` of the seeded generator, so the report
/// does not depend on the number of worker threads.
pub fn cat_test<S: GeodesicSpace>(
    space: &S,
    k: f64,
    triangle_count: usize,
    samples_per_side: usize,
    seed: u64,
    tol: f64,
) -> Result<CatReport> {
    check_k(k)?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {tol}")));
    }
    if triangle_count == 0 || samples_per_side == 0 {
        return Err(Error::domain("need at least one triangle and one point per side"));
    }
    let outcomes: Vec<Result<TriangleOutcome<S::Point>>> = (0..triangle_count)
        .into_par_iter()
        .map(|i| test_triangle(space, k, samples_per_side, seed, i, tol).map_err(|e| in_triangle(e, i)))
        .collect();
    let mut samples = 0;
    let mut worst: Option<Candidate<S::Point>> = None;
    for outcome in outcomes {
        let outcome = outcome?;
        samples += outcome.samples;
        if let Some(c) = outcome.worst {
            if worst.as_ref().map_or(true, |w| c.margin > w.margin) {
                worst = Some(c);
            }
        }
    }
    let worst_margin = worst.as_ref().map_or(f64::NEG_INFINITY, |c| c.margin);
    let verdict = if worst_margin > tol { Verdict::Fail } else { Verdict::Pass };
    Ok(CatReport {
        space: space.descriptor(),
        k,
        triangles: triangle_count,
        samples,
        tolerance: tol,
        seed,
        verdict,
        worst_margin,
        witness: match verdict {
            Verdict::Fail => worst.map(|c| c.witness(space)),
            Verdict::Pass => None,
        },
    })
}

/// Random search for the largest comparison violation within `budget`
/// side-point evaluations. Each triangle tries every vertex against the
/// midpoint and one random point of the opposite side, on the default
/// geodesic and every alternative.
///
/// Returns the best witness whose margin exceeds `DEFAULT_CAT_TOL` after an
/// independent recomputation. Triangles on which the space's solver fails
/// are skipped.
pub fn counterexample_search<S: GeodesicSpace>(space: &S, k: f64, budget: usize, seed: u64) -> Result<Option<Witness>> {
    check_k(k)?;
    if budget == 0 {
        return Err(Error::domain("search budget must be > 0"));
    }
    let search_triangle = |index: usize| -> Result<(usize, Option<Candidate<S::Point>>)> {
        let mut rng = triangle_rng(seed, index);
        let vertices = [space.sample_point(&mut rng), space.sample_point(&mut rng), space.sample_point(&mut rng)];
        let sides = side_lengths(space, &vertices, false)?;
        let mut used = 0;
        let mut best: Option<Candidate<S::Point>> = None;
        for side in 0..3 {
            let (from, to) = (&vertices[(side + 1) % 3], &vertices[(side + 2) % 3]);
            for fraction in [0.5, rng.random_range(0.0..1.0)] {
                let mut points = vec![(space.geodesic_point(from, to, fraction)?, false)];
                points.extend(space.alternative_geodesic_points(from, to, fraction)?.into_iter().map(|p| (p, true)));
                for (point, alternative) in points {
                    let c = evaluate(space, k, &vertices, &sides, side, fraction, point, alternative)?;
                    used += 1;
                    if best.as_ref().map_or(true, |b| c.margin > b.margin) {
                        best = Some(c);
                    }
                }
            }
        }
        Ok((used, best))
    };

    // Triangles are searched in parallel batches so that the budget cut-off
    // falls at the same triangle for any worker count.
    const BATCH: usize = 64;
    let mut used = 0;
    let mut best: Option<Candidate<S::Point>> = None;
    let mut next = 0;
    while used < budget {
        let results: Vec<_> = (next..next + BATCH).into_par_iter().map(search_triangle).collect();
        next += BATCH;
        for r in results {
            if used >= budget {
                break;
            }
            let Ok((n, cand)) = r else { continue };
            used += n;
            if let Some(c) = cand {
                if best.as_ref().map_or(true, |b| c.margin > b.margin) {
                    best = Some(c);
                }
            }
        }
    }
    let Some(c) = best else {
        return Ok(None);
    };
    if !(c.margin > DEFAULT_CAT_TOL) {
        return Ok(None);
    }
    let checked = reverify(space, k, &c)?;
    Ok((checked.margin > DEFAULT_CAT_TOL).then(|| checked.witness(space)))
}
