//! End-to-end acceptance checks. Runs as a plain binary so the timing
//! criteria execute one at a time; prints one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use mdlbench::bench::{run_bench, BenchConfig, BenchRecord, DatasetInfo, Workload};
use mdlbench::geom::{dist_sq, distances_match};
use mdlbench::grid::{FloodIndex, GridIndex, GridMode};
use mdlbench::projection::{LisaIndex, MliIndex, ZmiIndex};
use mdlbench::tree::{FullScanIndex, IfiIndex, StrTree};
use mdlbench::workload::{
    gen_dataset, gen_knn_queries, gen_range_queries, write_dataset, write_knn_workload,
    write_range_workload, DatasetSpec, Distribution,
};
use mdlbench::zorder::ZCurve;
use mdlbench::{BuildParams, Dataset, IndexKind, PlaModel, ResultSet, SpatialIndex};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const TARGETS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

fn data(dist: Distribution, n: usize, d: usize, seed: u64) -> Dataset {
    gen_dataset(&DatasetSpec::new(dist, n, d, seed)).expect("valid spec")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of `runs` builds.
fn build_time<T>(runs: usize, mut build: impl FnMut() -> T) -> f64 {
    median(
        (0..runs)
            .map(|_| {
                let (idx, t) = timed(&mut build);
                drop(idx);
                t.as_secs_f64()
            })
            .collect(),
    )
}

fn criterion_1() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (di, dist) in Distribution::ALL.into_iter().enumerate() {
        for d in 2..=4 {
            let ds = data(dist, 100_000, d, 100 + (di * 10 + d) as u64);
            let oracle = FullScanIndex::build(&ds).unwrap();
            let wl = gen_range_queries(&ds, 100, &TARGETS, 7).unwrap();
            let expected: Vec<ResultSet> = wl
                .queries()
                .iter()
                .map(|q| oracle.range(&q.range).unwrap())
                .collect();
            for kind in IndexKind::ALL {
                let idx = kind.build(&ds, &BuildParams::default()).unwrap();
                let mismatches = wl
                    .queries()
                    .iter()
                    .zip(&expected)
                    .filter(|(q, want)| !idx.range(&q.range).unwrap().same_ids(want))
                    .count();
                checked += wl.len();
                if mismatches > 0 {
                    failures.push(format!("{kind} on {dist} d={d}: {mismatches} mismatches"));
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{checked} index/query pairs equal FullScan"))
    } else {
        Err(failures.join("; "))
    }
}

/// Independent linear-scan kNN distances.
fn brute_distances(ds: &Dataset, q: &[f64], k: usize) -> Vec<f64> {
    let mut d: Vec<f64> = ds.points().map(|p| dist_sq(p, q).sqrt()).collect();
    d.sort_by(f64::total_cmp);
    d.truncate(k);
    d
}

fn criterion_2() -> Outcome {
    let ds = data(Distribution::Uniform, 100_000, 2, 21);
    let wl = gen_knn_queries(&ds, 20, &[1, 10, 100, 1000], 22).unwrap();
    let expected: Vec<Vec<f64>> = wl
        .queries()
        .iter()
        .map(|q| brute_distances(&ds, q.point(), q.k()))
        .collect();
    let kinds = [
        IndexKind::Zmi,
        IndexKind::Mli,
        IndexKind::Lisa,
        IndexKind::Str,
        IndexKind::Kd,
    ];
    let mut failures = Vec::new();
    for kind in kinds {
        let idx = kind.build(&ds, &BuildParams::default()).unwrap();
        let bad = wl
            .queries()
            .iter()
            .zip(&expected)
            .filter(|(q, want)| {
                let got = idx.knn(q).unwrap().sorted_distances(&ds, q.point());
                !distances_match(&got, want, 1e-9)
            })
            .count();
        if bad > 0 {
            failures.push(format!("{kind}: {bad} queries differ"));
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "{} queries x {} indices match brute force",
            wl.len(),
            kinds.len()
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    for dist in [Distribution::Uniform, Distribution::Lognormal] {
        let mut keys = data(dist, 1_000_000, 2, 31).column(0);
        keys.sort_by(f64::total_cmp);
        let mut last_segments = usize::MAX;
        let mut counts = Vec::new();
        for eps in [4usize, 16, 64, 256, 1024] {
            let model = PlaModel::build(&keys, eps).unwrap();
            let mut worst = 0.0f64;
            let mut first = 0;
            for (i, &k) in keys.iter().enumerate() {
                if i > 0 && k != keys[i - 1] {
                    first = i;
                }
                worst = worst.max((model.predict(k) - first as f64).abs());
            }
            if worst > eps as f64 {
                return Err(format!("{dist} eps={eps}: max error {worst}"));
            }
            let segs = model.segments().len();
            if segs > last_segments {
                return Err(format!(
                    "{dist}: {segs} segments at eps={eps} after {last_segments}"
                ));
            }
            last_segments = segs;
            counts.push(segs.to_string());
        }
        notes.push(format!("{dist} segments {}", counts.join("/")));
    }
    Ok(notes.join(", "))
}

/// Deinterleaves `z` with dimension 0 in the lowest bit of each group.
fn cell_of(z: u64, dim: usize, bits: u32) -> Vec<u64> {
    let mut c = vec![0u64; dim];
    for b in 0..bits as usize {
        for (j, v) in c.iter_mut().enumerate() {
            *v |= ((z >> (b * dim + j)) & 1) << b;
        }
    }
    c
}

fn boxes(dim: usize, side: u64) -> Vec<(Vec<u64>, Vec<u64>)> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for _ in 0..dim {
        let mut next = Vec::new();
        for (lo, hi) in &out {
            for l in 0..side {
                for h in l..side {
                    let (mut a, mut b) = (lo.clone(), hi.clone());
                    a.push(l);
                    b.push(h);
                    next.push((a, b));
                }
            }
        }
        out = next;
    }
    out
}

fn criterion_4() -> Outcome {
    let mut checks = 0usize;
    for (dim, bits) in [(2usize, 3u32), (3, 2)] {
        let curve = ZCurve::new(dim, bits).unwrap();
        let total = 1u64 << (dim as u32 * bits);
        let cells: Vec<Vec<u64>> = (0..total).map(|z| cell_of(z, dim, bits)).collect();
        for (lo, hi) in boxes(dim, 1 << bits) {
            let inside: Vec<bool> = cells
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(lo.iter().zip(&hi))
                        .all(|(v, (l, h))| l <= v && v <= h)
                })
                .collect();
            let z_lo = curve.encode(&lo).unwrap();
            let z_hi = curve.encode(&hi).unwrap();
            for start in 0..total {
                let want = (start..total).find(|&z| inside[z as usize]);
                let got = curve.bigmin(start, z_lo, z_hi);
                if got != want {
                    return Err(format!(
                        "bigmin({start}) in {lo:?}..{hi:?}: {got:?} != {want:?}"
                    ));
                }
                checks += 1;
            }
            let mut runs = Vec::new();
            let mut z = 0;
            while z < total {
                if inside[z as usize] {
                    let s = z;
                    while z + 1 < total && inside[z as usize + 1] {
                        z += 1;
                    }
                    runs.push((s, z));
                }
                z += 1;
            }
            if curve.decompose_box(&lo, &hi).unwrap() != runs {
                return Err(format!("decomposition of {lo:?}..{hi:?} differs"));
            }
            checks += 1;
        }
    }
    Ok(format!(
        "{checks} bigmin/decomposition cases match enumeration"
    ))
}

fn criterion_5() -> Outcome {
    let ds = data(Distribution::Uniform, 1_000_000, 2, 51);
    let str_bytes = StrTree::build(&ds).unwrap().metadata_bytes() as f64;
    let sizes: Vec<(&str, usize)> = vec![
        ("zmi", ZmiIndex::build(&ds, 64).unwrap().metadata_bytes()),
        (
            "mli",
            MliIndex::build(&ds, 64, None, 42).unwrap().metadata_bytes(),
        ),
        (
            "lisa",
            LisaIndex::build(&ds, 64, 2000).unwrap().metadata_bytes(),
        ),
        (
            "flood",
            FloodIndex::build(&ds, 64, 2000, None)
                .unwrap()
                .metadata_bytes(),
        ),
    ];
    let report: Vec<String> = sizes
        .iter()
        .map(|(name, b)| format!("{name} {b} B ({:.0}x smaller)", str_bytes / *b as f64))
        .collect();
    let detail = format!("str {str_bytes} B; {}", report.join(", "));
    if sizes.iter().all(|(_, b)| (*b as f64) * 50.0 <= str_bytes) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6() -> Outcome {
    let ds = data(Distribution::Uniform, 1_000_000, 2, 61);
    let t_str = build_time(3, || StrTree::build(&ds).unwrap());
    let t_zmi = build_time(3, || ZmiIndex::build(&ds, 64).unwrap());
    let t_mli = build_time(1, || MliIndex::build(&ds, 64, None, 42).unwrap());
    let detail = format!(
        "str {t_str:.3}s, zmi {t_zmi:.3}s ({:.2}x), mli {t_mli:.3}s ({:.2}x)",
        t_zmi / t_str,
        t_mli / t_str
    );
    if t_zmi <= 1.2 * t_str && t_mli >= 3.0 * t_str {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Per-index median latency in seconds, with queries interleaved across
/// indices so each sees the same cache conditions.
fn median_latencies(
    indices: &[&dyn SpatialIndex],
    wl: &[mdlbench::workload::RangeQuery],
) -> Vec<f64> {
    let mut samples = vec![Vec::with_capacity(wl.len()); indices.len()];
    let mut sink = Vec::new();
    for q in wl {
        for (i, idx) in indices.iter().enumerate() {
            sink.clear();
            let (_, t) = timed(|| idx.range_into(&q.range, &mut sink));
            samples[i].push(t.as_secs_f64());
        }
    }
    samples.into_iter().map(median).collect()
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (dist, seed) in [(Distribution::Uniform, 71), (Distribution::Lognormal, 72)] {
        let ds = data(dist, 1_000_000, 2, seed);
        let wl = gen_range_queries(&ds, 200, &[1e-4, 1e-3, 1e-2], seed + 100).unwrap();
        let str_tree = StrTree::build(&ds).unwrap();
        let flood = FloodIndex::build(&ds, 64, 2000, None).unwrap();
        let lisa = LisaIndex::build(&ds, 64, 2000).unwrap();
        let ifi = IfiIndex::build(&ds).unwrap();
        let med = median_latencies(&[&str_tree, &flood, &lisa, &ifi], wl.queries());
        let ratios: Vec<String> = ["flood", "lisa", "ifi"]
            .iter()
            .zip(&med[1..])
            .map(|(name, m)| {
                ok &= *m <= 1.2 * med[0];
                format!("{name} {:.2}x", m / med[0])
            })
            .collect();
        notes.push(format!(
            "{dist}: str {:.1}us, {}",
            med[0] * 1e6,
            ratios.join(", ")
        ));
    }
    let detail = notes.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8() -> Outcome {
    let ds = data(Distribution::Uniform, 1_000_000, 2, 81);
    let wl = gen_range_queries(&ds, 200, &[1e-4, 1e-3, 1e-2], 82).unwrap();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, builds: Vec<f64>, lats: Vec<f64>| {
        let spread = |v: &[f64]| {
            let max = v.iter().cloned().fold(f64::MIN, f64::max);
            let min = v.iter().cloned().fold(f64::MAX, f64::min);
            max / min
        };
        let (b, l) = (spread(&builds), spread(&lats));
        ok &= b < 2.0 && l < 2.0;
        notes.push(format!(
            "{name} build spread {b:.2}x, latency spread {l:.2}x"
        ));
    };
    let eps = [4usize, 64, 1024];
    let lisa_builds: Vec<f64> = eps
        .iter()
        .map(|&e| build_time(3, || LisaIndex::build(&ds, e, 2000).unwrap()))
        .collect();
    let lisas: Vec<LisaIndex> = eps
        .iter()
        .map(|&e| LisaIndex::build(&ds, e, 2000).unwrap())
        .collect();
    let refs: Vec<&dyn SpatialIndex> = lisas.iter().map(|i| i as &dyn SpatialIndex).collect();
    check("lisa", lisa_builds, median_latencies(&refs, wl.queries()));
    drop(lisas);
    let flood_builds: Vec<f64> = eps
        .iter()
        .map(|&e| build_time(3, || FloodIndex::build(&ds, e, 2000, None).unwrap()))
        .collect();
    let floods: Vec<FloodIndex> = eps
        .iter()
        .map(|&e| FloodIndex::build(&ds, e, 2000, None).unwrap())
        .collect();
    let refs: Vec<&dyn SpatialIndex> = floods.iter().map(|i| i as &dyn SpatialIndex).collect();
    check("flood", flood_builds, median_latencies(&refs, wl.queries()));
    let detail = notes.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn balanced(counts: &[usize]) -> bool {
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    *counts.iter().max().unwrap() as f64 <= 2.0 * mean + 1.0
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut note = |counts: Vec<usize>, what: String| -> Result<(), String> {
        let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
        worst = worst.max(*counts.iter().max().unwrap() as f64 / mean);
        if balanced(&counts) {
            Ok(())
        } else {
            Err(format!("{what} unbalanced: {counts:?}"))
        }
    };
    for d in [2usize, 3] {
        let ds = data(Distribution::Lognormal, 100_000, d, 90 + d as u64);
        let lisa = LisaIndex::build(&ds, 64, 2000).unwrap();
        let edg = GridIndex::build(&ds, GridMode::EqualDepth, 2000).unwrap();
        let flood = FloodIndex::build(&ds, 64, 2000, None).unwrap();
        for j in 0..d {
            note(
                lisa.grid().axis(j).slab_counts(ds.column(j)),
                format!("lisa d={d} dim {j}"),
            )?;
            note(edg.slab_counts(j), format!("edg d={d} dim {j}"))?;
        }
        for i in 0..flood.grid_dims().len() {
            note(flood.slab_counts(i), format!("flood d={d} grid dim {i}"))?;
        }
    }
    Ok(format!("largest slab is {worst:.3}x the mean"))
}

fn run_once() -> (Vec<u8>, Vec<u8>, Vec<u8>, Vec<BenchRecord>) {
    let ds = data(Distribution::Lognormal, 20_000, 2, 101);
    let mut ds_bytes = Vec::new();
    write_dataset(&ds, &mut ds_bytes).unwrap();
    let range = gen_range_queries(&ds, 50, &TARGETS, 102).unwrap();
    let knn = gen_knn_queries(&ds, 5, &[1, 10, 100], 103).unwrap();
    let (mut range_bytes, mut knn_bytes) = (Vec::new(), Vec::new());
    write_range_workload(&range, &mut range_bytes).unwrap();
    write_knn_workload(&knn, &mut knn_bytes).unwrap();
    let config = BenchConfig {
        verify: true,
        ..BenchConfig::default()
    };
    let info = DatasetInfo::new("lognormal", &ds);
    let records = run_bench(
        &ds,
        &info,
        &[Workload::Range(range), Workload::Knn(knn)],
        &config,
    )
    .unwrap();
    let stripped = records.iter().map(BenchRecord::without_timing).collect();
    (ds_bytes, range_bytes, knn_bytes, stripped)
}

fn criterion_10() -> Outcome {
    let a = run_once();
    let b = run_once();
    let parts = [
        ("dataset", a.0 == b.0),
        ("range workload", a.1 == b.1),
        ("knn workload", a.2 == b.2),
        ("records", a.3 == b.3),
    ];
    let differing: Vec<&str> = parts.iter().filter(|p| !p.1).map(|p| p.0).collect();
    if differing.is_empty() {
        Ok(format!(
            "{} records and all files identical across runs",
            a.3.len()
        ))
    } else {
        Err(format!("differs: {}", differing.join(", ")))
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("range results equal full scan", criterion_1),
        ("knn distances equal brute force", criterion_2),
        ("PLA error bound and segment monotonicity", criterion_3),
        ("bigmin and box decomposition", criterion_4),
        ("learned index metadata at most 1/50 of STR", criterion_5),
        ("build time ordering against STR", criterion_6),
        (
            "range latency of flood/lisa/ifi within 1.2x of STR",
            criterion_7,
        ),
        ("epsilon insensitivity of lisa and flood", criterion_8),
        ("equal-depth bucket balance", criterion_9),
        ("determinism under fixed seeds", criterion_10),
    ];
    // Optional criterion numbers on the command line select a subset.
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let (outcome, t) = timed(run);
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} criterion {}: {name} [{:.1}s] {detail}",
            i + 1,
            t.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
