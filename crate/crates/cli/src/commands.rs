use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use translike_core::bilip_match::{bottleneck_bijection_clouds, trim_to_cardinality, BottleneckBijection};
use translike_core::horolattice::{displacement, verify_action_free, GridVector, LatticeWindow};
use translike_core::hyp3::{dist, HPoint};
use translike_core::orbitnet::{
    band_graph_metric, enumerate_orbit, grid_compare, horoband_intersect, load_generators_with_tolerance, qi_epsilon,
    qi_lambda_grid, qi_scatter, GridComparison, HoroBand,
};
use translike_core::tla::{
    check_conjugation, conjugate_action, orbit_partition, verify_translation_like, FiniteAction,
};
use translike_core::udbg_profile::{
    ball_profile, covering_radius, growth_slope, min_pairwise_distance, BoxRegion, CenterStrategy, RegionSampler,
    WindowInterior,
};
use translike_core::{fmt17, PointCloud};

use crate::config::{
    ConjugateArgs, CoveringArgs, Fault, HorobandArgs, MatchArgs, ProfileGrowthArgs, Region, RegionArgs,
    VerifyLatticeArgs, WindowArgs,
};
use crate::report::Check;
use crate::sources::load_cloud;
use crate::stream_seed;

/// Largest cloud the `--oracle` enumeration accepts.
pub const ORACLE_LIMIT: usize = 9;
/// Violations listed in a report before truncation.
const LISTED: usize = 20;

/// What a command produces: checks decide the exit code, results and
/// artifacts are data.
#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub results: serde_json::Map<String, Value>,
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn put(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.to_string(), serde_json::to_value(value).expect("result serialises"));
    }
}

fn window_cloud(w: &WindowArgs, cloud: &Option<String>, seed: u64) -> Result<PointCloud> {
    match cloud {
        Some(spec) => load_cloud(spec, seed, "cloud"),
        None => Ok(LatticeWindow::build(w.a, w.c)?.to_cloud()),
    }
}

fn centers(count: usize, seed: u64) -> CenterStrategy {
    if count == 0 {
        CenterStrategy::All
    } else {
        CenterStrategy::Sample {
            k: count,
            seed: stream_seed(seed, "centers"),
        }
    }
}

fn sampler(region: &RegionArgs, window: &WindowArgs) -> Result<Box<dyn RegionSampler>> {
    Ok(match region.region {
        Region::Interior => Box::new(WindowInterior::new(window.a, window.c, region.margin)?),
        Region::Box => {
            let (w, h) = (region.box_half_width, region.box_height);
            ensure!(h >= 1.0, "box height must be at least 1, got {h}");
            Box::new(BoxRegion::new((-w, w), (-w, w), (1.0 / h, h))?)
        }
    })
}

fn point(p: &HPoint) -> [f64; 3] {
    p.coords()
}

pub fn verify_lattice(args: &VerifyLatticeArgs, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let window = LatticeWindow::build(args.window.a, args.window.c)?;
    ensure!(args.k >= 1, "word range K must be at least 1, got {}", args.k);
    let cloud = window.to_cloud();
    out.put("points", cloud.len());

    let md = min_pairwise_distance(&cloud)?;
    let (p, q) = (cloud.points()[md.witness.0], cloud.points()[md.witness.1]);
    let vertical = p.x() == q.x() && p.y() == q.y() && (p.z() == 2.0 * q.z() || q.z() == 2.0 * p.z());
    let err = (md.distance - std::f64::consts::LN_2).abs();
    out.checks.push(Check::new(
        "min_distance",
        err <= args.min_distance_tolerance,
        json!({
            "distance": md.distance,
            "expected": std::f64::consts::LN_2,
            "error": err,
            "witness": [md.witness.0, md.witness.1],
            "witness_points": [point(&p), point(&q)],
            "vertical_doubling": vertical,
        }),
    ));

    let mut action = FiniteAction::from_window(&window);
    if args.fault == Some(Fault::NonFree) {
        let identity = (0..cloud.len()).map(Some).collect();
        action = FiniteAction::new(cloud.clone(), identity, action.generator(1).clone())?;
    }

    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    let mut per_word = Vec::new();
    for v in GridVector::box_range(args.k).filter(|v| !v.is_identity()) {
        let expected = displacement(v);
        let mut word_err = 0.0f64;
        for (x, y) in action.word_map(v).iter().enumerate() {
            if let Some(y) = *y {
                word_err = word_err.max((dist(&cloud.points()[x], &cloud.points()[y]) - expected).abs());
                pairs += 1;
            }
        }
        worst = worst.max(word_err);
        per_word.push(json!({"word": v.to_string(), "expected": expected, "max_error": word_err}));
    }
    out.checks.push(Check::new(
        "displacement_constancy",
        worst < args.displacement_tolerance,
        json!({
            "K": args.k,
            "pairs_checked": pairs,
            "max_error": worst,
            "generator_displacement": displacement(GridVector::E1),
        }),
    ));
    out.put("displacement_by_word", per_word);

    let bound = displacement(GridVector { m: args.k, n: args.k }) + args.displacement_tolerance;
    let cert = verify_translation_like(&action, args.k, Some(bound))?;
    let lattice_free = verify_action_free(&window, args.k)?;
    out.checks.push(Check::new(
        "freeness",
        cert.pass && lattice_free.pass(),
        json!({
            "K": args.k,
            "action_violations": cert.violations.len(),
            "first_violations": &cert.violations[..cert.violations.len().min(LISTED)],
            "coordinate_violations": lattice_free.violations.len(),
            "pairs_checked": cert.pairs_checked,
        }),
    ));
    out.put("certificate", &cert);

    let profile = ball_profile(&cloud, &args.radii, &centers(args.centers, seed))?;
    let slope = growth_slope(&profile, args.slope_from, args.slope_to)?;
    out.checks.push(Check::new(
        "growth_slope",
        (args.slope_min..=args.slope_max).contains(&slope),
        json!({
            "slope": slope,
            "range": [args.slope_from, args.slope_to],
            "accepted": [args.slope_min, args.slope_max],
        }),
    ));
    out.put("growth_profile", &profile);
    out.artifacts.push(("growth".into(), profile.to_csv()));

    let region = sampler(&args.region, &args.window)?;
    let cov = covering_radius(&cloud, region.as_ref(), args.samples, stream_seed(seed, "covering"))?;
    out.checks.push(Check::new(
        "covering_radius",
        cov.radius <= args.covering_bound,
        json!({
            "radius": cov.radius,
            "bound": args.covering_bound,
            "region": args.region.region,
            "worst_sample": point(&cov.worst_sample),
            "nearest": cov.nearest,
            "samples": cov.samples,
        }),
    ));

    let parts = orbit_partition(&action);
    let side = (2 * args.window.a + 1) as usize;
    let levels = (2 * args.window.c + 1) as usize;
    let slabs = parts
        .iter()
        .all(|p| p.points.len() == side * side && p.extent == [side, side]);
    out.checks.push(Check::new(
        "orbit_partition",
        parts.len() == levels && slabs,
        json!({
            "components": parts.len(),
            "expected_components": levels,
            "all_full_grids": slabs,
        }),
    ));
    Ok(out)
}

pub fn profile_growth(args: &ProfileGrowthArgs, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cloud = window_cloud(&args.window, &args.cloud, seed)?;
    let profile = ball_profile(&cloud, &args.radii, &centers(args.centers, seed))?;
    out.put("cloud", cloud.label());
    out.put("points", cloud.len());
    out.put("profile", &profile);
    let slope = growth_slope(&profile, args.slope_from, args.slope_to);
    match (&slope, args.slope_min, args.slope_max) {
        (Ok(s), lo, hi) => {
            out.put("slope", s);
            if lo.is_some() || hi.is_some() {
                let ok = lo.is_none_or(|l| *s >= l) && hi.is_none_or(|h| *s <= h);
                out.checks.push(Check::new(
                    "growth_slope",
                    ok,
                    json!({"slope": s, "min": lo, "max": hi}),
                ));
            }
        }
        (Err(e), None, None) => out.put("slope_error", e.to_string()),
        (Err(e), _, _) => bail!("growth slope: {e}"),
    }
    out.artifacts.push(("growth".into(), profile.to_csv()));
    Ok(out)
}

pub fn covering(args: &CoveringArgs, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let cloud = window_cloud(&args.window, &args.cloud, seed)?;
    let region = sampler(&args.region, &args.window)?;
    let cov = covering_radius(&cloud, region.as_ref(), args.samples, stream_seed(seed, "covering"))?;
    out.put("cloud", cloud.label());
    out.put("points", cloud.len());
    out.put("radius", cov.radius);
    out.put("worst_sample", point(&cov.worst_sample));
    out.put("nearest", cov.nearest);
    out.put("samples", cov.samples);
    if let Some(bound) = args.bound {
        out.checks.push(Check::new(
            "covering_radius",
            cov.radius <= bound,
            json!({"radius": cov.radius, "bound": bound}),
        ));
    }
    Ok(out)
}

/// R* by enumerating every bijection (Heap's algorithm).
pub fn brute_force_bottleneck(left: &PointCloud, right: &PointCloud) -> Result<f64> {
    let n = left.len();
    ensure!(n == right.len(), "clouds differ in size");
    ensure!(
        n <= ORACLE_LIMIT,
        "oracle enumeration is limited to {ORACLE_LIMIT} points, got {n}"
    );
    let cost = |perm: &[usize]| {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| dist(&left.points()[i], &right.points()[j]))
            .fold(0.0, f64::max)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = cost(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

fn measure(psi: &mut BottleneckBijection, left: &PointCloud, right: &PointCloud, seed: u64) -> Result<()> {
    let (l, r) = (left.points(), right.points());
    psi.measure_lipschitz(
        |i, j| dist(&l[i], &l[j]),
        |i, j| dist(&r[i], &r[j]),
        stream_seed(seed, "lipschitz"),
    )?;
    Ok(())
}

pub fn matching(args: &MatchArgs, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut left = load_cloud(&args.left, seed, "left")?;
    let mut right = load_cloud(&args.right, seed, "right")?;
    if left.len() != right.len() {
        ensure!(
            args.trim,
            "clouds have {} and {} points; pass --trim to trim the larger",
            left.len(),
            right.len()
        );
        let m = left.len().min(right.len());
        if left.len() > m {
            left = trim_to_cardinality(&left, m)?;
        } else {
            right = trim_to_cardinality(&right, m)?;
        }
    }
    let mut psi = bottleneck_bijection_clouds(&left, &right)?;
    measure(&mut psi, &left, &right, seed)?;
    out.put("left", left.label());
    out.put("right", right.label());
    out.put("points", left.len());
    out.put("r_star", psi.r_star);
    out.put("thresholds_tried", psi.thresholds_tried);
    out.put("lipschitz", psi.lipschitz);
    out.put("pairing_checksum", format!("{:016x}", psi.checksum()));
    if args.oracle {
        let brute = brute_force_bottleneck(&left, &right)?;
        out.checks.push(Check::new(
            "oracle",
            brute == psi.r_star,
            json!({"r_star": psi.r_star, "brute_force": brute}),
        ));
    }
    out.artifacts.push(("pairing".into(), psi.to_csv()));
    Ok(out)
}

pub fn conjugate(args: &ConjugateArgs, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    ensure!(args.k >= 1, "word range K must be at least 1, got {}", args.k);
    let window = LatticeWindow::build(args.a, args.c)?;
    let source_cloud = window.to_cloud();
    let source = FiniteAction::from_window(&window);
    let spec = args
        .target
        .clone()
        .unwrap_or_else(|| format!("perturbed:{},{},0.1", args.a, args.c));
    let target = load_cloud(&spec, seed, "target")?;
    ensure!(
        target.len() == source_cloud.len(),
        "target has {} points, the window has {}",
        target.len(),
        source_cloud.len()
    );

    let mut psi = bottleneck_bijection_clouds(&source_cloud, &target)?;
    if args.fault == Some(Fault::NonInjectivePairing) && psi.len() >= 2 {
        let mut pairing = psi.pairing.clone();
        pairing[1] = pairing[0];
        if let Err(e) = BottleneckBijection::from_pairing(pairing, psi.r_star) {
            out.checks
                .push(Check::new("pairing_bijective", false, json!({"error": e.to_string()})));
            return Ok(out);
        }
    }
    out.checks
        .push(Check::new("pairing_bijective", true, json!({"points": psi.len()})));
    measure(&mut psi, &source_cloud, &target, seed)?;
    let lip = psi.lipschitz.context("lipschitz constants missing")?;

    let conj = conjugate_action(&source, &psi, target.clone())?;
    let cert = verify_translation_like(&conj, args.k, None)?;
    let check = check_conjugation(&source, &conj, &psi, lip.forward, args.k)?;
    out.checks.push(Check::new(
        "freeness",
        cert.violations.is_empty(),
        json!({
            "violations": cert.violations.len(),
            "first_violations": &cert.violations[..cert.violations.len().min(LISTED)],
        }),
    ));
    out.checks
        .push(Check::new("displacement_inequality", check.violations == 0, &check));

    let sizes = |a: &FiniteAction| {
        let mut s: Vec<usize> = orbit_partition(a).iter().map(|c| c.points.len()).collect();
        s.sort_unstable();
        s
    };
    let (src_sizes, dst_sizes) = (sizes(&source), sizes(&conj));
    out.checks.push(Check::new(
        "orbit_partition",
        src_sizes == dst_sizes,
        json!({"source_components": src_sizes.len(), "target_components": dst_sizes.len()}),
    ));

    out.put("source", source_cloud.label());
    out.put("target", target.label());
    out.put("points", psi.len());
    out.put("r_star", psi.r_star);
    out.put("lipschitz", lip);
    out.put("pairing_checksum", format!("{:016x}", psi.checksum()));
    out.put("certificate", &cert);
    out.artifacts.push(("pairing".into(), psi.to_csv()));
    Ok(out)
}

fn default_sides(n: usize) -> Vec<usize> {
    (1..).map(|j| 2 * j + 1).take_while(|s| s * s <= n).collect()
}

fn grid_csv(cmp: &GridComparison) -> String {
    let cell = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    let mut s = String::from("side,status,r_star,lip_forward,lip_inverse,raw_lip_forward,raw_lip_inverse\n");
    for r in &cmp.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.side,
            r.status,
            cell(r.r_star),
            cell(r.lip_forward),
            cell(r.lip_inverse),
            cell(r.raw_lip_forward),
            cell(r.raw_lip_inverse)
        ));
    }
    s
}

pub fn horoband(args: &HorobandArgs, _seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let gens = load_generators_with_tolerance(&args.generators, args.det_tolerance)
        .with_context(|| format!("loading {}", args.generators.display()))?;
    ensure!(args.basepoint.len() == 3, "basepoint needs three coordinates");
    let base = HPoint::new(args.basepoint[0], args.basepoint[1], args.basepoint[2])?;
    let band = HoroBand::new(args.height, args.epsilon)?;
    ensure!(args.edge_threshold > 0.0, "edge threshold must be positive");

    let orbit = enumerate_orbit(&gens, base, args.word_length, args.merge_tolerance, args.budget)?;
    let scatter = qi_scatter(&orbit);
    out.put("generators", gens.len());
    out.put("orbit_points", orbit.len());
    out.put("max_word_length", orbit.word_length.iter().max());
    out.put("qi_fit", &scatter.fit);
    out.artifacts.push(("orbit".into(), orbit.to_csv()));
    let mut sc = String::from("word_length,distance\n");
    for (w, d) in &scatter.pairs {
        sc.push_str(&format!("{w},{}\n", fmt17(*d)));
    }
    out.artifacts.push(("scatter".into(), sc));
    let mut curve = String::from("lambda,epsilon\n");
    for l in qi_lambda_grid() {
        curve.push_str(&format!("{},{}\n", fmt17(l), fmt17(qi_epsilon(&scatter.pairs, l))));
    }
    out.artifacts.push(("qi_curve".into(), curve));

    let cloud = horoband_intersect(&orbit.cloud, &band);
    out.put("band_points", cloud.len());
    out.artifacts.push(("band".into(), cloud.to_csv_string()));
    if cloud.len() < 4 {
        out.put("grid", Value::Null);
        out.put("grid_note", "band holds fewer than 4 points; nothing to compare");
        return Ok(out);
    }
    let graph = band_graph_metric(&cloud, args.edge_threshold)?;
    out.put("graph_edges", graph.edge_count());
    out.put("graph_components", graph.components());
    let sides = if args.sides.is_empty() {
        default_sides(cloud.len())
    } else {
        args.sides.clone()
    };
    let cmp = grid_compare(&cloud, |i, j| graph.distance(i, j), args.height, &sides)?;
    out.artifacts.push(("grid".into(), grid_csv(&cmp)));
    out.put("grid", &cmp);
    if args.ambient {
        let p = cloud.points();
        let amb = grid_compare(&cloud, |i, j| Some(dist(&p[i], &p[j])), args.height, &sides)?;
        out.artifacts.push(("grid_ambient".into(), grid_csv(&amb)));
        out.put("grid_ambient", &amb);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_enumeration_visits_every_permutation() {
        // Only the identity pairing is cheap, so the minimum must find it
        // wherever it sits in the enumeration.
        let pts: Vec<HPoint> = (0..6)
            .map(|i| HPoint::new(i as f64 * 10.0, 0.0, 1.0).unwrap())
            .collect();
        let left = PointCloud::new("l", pts.clone()).unwrap();
        let mut rev = pts;
        rev.reverse();
        let right = PointCloud::new("r", rev).unwrap();
        assert_eq!(brute_force_bottleneck(&left, &right).unwrap(), 0.0);
    }

    #[test]
    fn default_sides_fit() {
        assert_eq!(default_sides(8), Vec::<usize>::new());
        assert_eq!(default_sides(9), vec![3]);
        assert_eq!(default_sides(49), vec![3, 5, 7]);
    }
}
