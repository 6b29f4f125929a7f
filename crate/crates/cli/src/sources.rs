use std::fs::File;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use translike_core::horolattice::LatticeWindow;
use translike_core::hyp3::{dist, HPoint};
use translike_core::PointCloud;

use crate::stream_seed;

/// Bound on the hyperbolic distance a `perturbed:` source may move a point.
pub const MAX_PERTURBATION: f64 = 0.1;

/// Where a point cloud comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CloudSource {
    Lattice {
        a: i64,
        c: i64,
    },
    /// The lattice window with every point moved by at most `eps`.
    Perturbed {
        a: i64,
        c: i64,
        eps: f64,
    },
    /// `n` points, x and y uniform in [-4, 4], ln z uniform in [-2, 2].
    Random {
        n: usize,
    },
    Csv(String),
}

fn numbers<T: std::str::FromStr>(body: &str, count: usize, what: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let parts: Vec<&str> = body.split(',').map(str::trim).collect();
    ensure!(
        parts.len() == count,
        "`{what}` expects {count} comma separated values, got `{body}`"
    );
    parts
        .iter()
        .map(|p| p.parse::<T>().with_context(|| format!("bad number `{p}` in `{what}`")))
        .collect()
}

impl CloudSource {
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(body) = spec.strip_prefix("lattice:") {
            let v = numbers::<i64>(body, 2, "lattice:A,C")?;
            return Ok(Self::Lattice { a: v[0], c: v[1] });
        }
        if let Some(body) = spec.strip_prefix("perturbed:") {
            let parts: Vec<&str> = body.splitn(3, ',').collect();
            ensure!(
                parts.len() == 3,
                "`perturbed:A,C,EPS` expects three values, got `{body}`"
            );
            let ac = numbers::<i64>(&parts[..2].join(","), 2, "perturbed:A,C,EPS")?;
            let eps: f64 = parts[2]
                .trim()
                .parse()
                .with_context(|| format!("bad EPS `{}`", parts[2]))?;
            ensure!(
                (0.0..=MAX_PERTURBATION).contains(&eps),
                "perturbation must lie in [0, {MAX_PERTURBATION}], got {eps}"
            );
            return Ok(Self::Perturbed {
                a: ac[0],
                c: ac[1],
                eps,
            });
        }
        if let Some(body) = spec.strip_prefix("random:") {
            let n = numbers::<usize>(body, 1, "random:N")?[0];
            return Ok(Self::Random { n });
        }
        ensure!(!spec.is_empty(), "empty cloud source");
        Ok(Self::Csv(spec.to_string()))
    }

    /// Builds the cloud; `stream` names the random stream so that two sources
    /// in one run never share randomness.
    pub fn build(&self, seed: u64, stream: &str) -> Result<PointCloud> {
        match self {
            Self::Lattice { a, c } => Ok(LatticeWindow::build(*a, *c)?.to_cloud()),
            Self::Perturbed { a, c, eps } => {
                let base = LatticeWindow::build(*a, *c)?.to_cloud();
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, stream));
                let half = eps / 2.0;
                let mut pts = Vec::with_capacity(base.len());
                for p in base.points() {
                    let mut s = [0.0; 3];
                    if half > 0.0 {
                        for v in &mut s {
                            *v = rng.gen_range(-half..=half);
                        }
                    }
                    let q = HPoint::new(p.x() + p.z() * s[0], p.y() + p.z() * s[1], p.z() * s[2].exp())?;
                    let moved = dist(p, &q);
                    ensure!(moved <= *eps, "perturbation moved a point by {moved} > {eps}");
                    pts.push(q);
                }
                Ok(PointCloud::new(format!("perturbed(A={a},C={c},eps={eps})"), pts)?)
            }
            Self::Random { n } => {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, stream));
                let pts = (0..*n)
                    .map(|_| {
                        let x = rng.gen_range(-4.0..=4.0);
                        let y = rng.gen_range(-4.0..=4.0);
                        let z = rng.gen_range(-2.0f64..=2.0).exp();
                        HPoint::new(x, y, z)
                    })
                    .collect::<translike_core::Result<Vec<_>>>()?;
                Ok(PointCloud::new(format!("random(N={n})"), pts)?)
            }
            Self::Csv(path) => {
                let file = File::open(path).with_context(|| format!("opening {path}"))?;
                PointCloud::read_csv(path.clone(), file).with_context(|| format!("reading {path}"))
            }
        }
    }
}

pub fn load_cloud(spec: &str, seed: u64, stream: &str) -> Result<PointCloud> {
    let source = CloudSource::parse(spec)?;
    let cloud = source.build(seed, stream)?;
    if cloud.is_empty() {
        bail!("cloud `{spec}` is empty");
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sources() {
        assert_eq!(
            CloudSource::parse("lattice:3,1").unwrap(),
            CloudSource::Lattice { a: 3, c: 1 }
        );
        assert_eq!(
            CloudSource::parse("perturbed:3,1,0.05").unwrap(),
            CloudSource::Perturbed { a: 3, c: 1, eps: 0.05 }
        );
        assert_eq!(CloudSource::parse("random:7").unwrap(), CloudSource::Random { n: 7 });
        assert_eq!(CloudSource::parse("x.csv").unwrap(), CloudSource::Csv("x.csv".into()));
        assert!(CloudSource::parse("lattice:3").is_err());
        assert!(CloudSource::parse("perturbed:3,1,0.5").is_err());
        assert!(CloudSource::parse("random:-1").is_err());
    }

    #[test]
    fn perturbation_is_bounded_and_seeded() {
        let src = CloudSource::parse("perturbed:4,2,0.1").unwrap();
        let a = src.build(9, "target").unwrap();
        let b = src.build(9, "target").unwrap();
        let c = src.build(9, "other").unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
        let base = LatticeWindow::build(4, 2).unwrap().to_cloud();
        for (p, q) in base.points().iter().zip(a.points()) {
            assert!(dist(p, q) <= 0.1);
        }
    }
}
