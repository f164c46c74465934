//! Acceptance suite: one line per criterion, `PASS`, `FAIL` or `NOT RUN`
//! (dataset files absent). Exits non-zero if any criterion fails.
//!
//! Datasets are looked up under `$HDC_DATA_DIR`, falling back to the
//! workspace `data/` directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hdc_cli::datasets::{self, dataset_available, SplitData, DATA_DIR_ENV};
use hdc_cli::pipeline::{self, PipelineOutcome};
use hdc_cli::{DatasetId, ExperimentConfig, ThetaSetting};
use hdc_core::data::{decode_container, encode_container, LabeledBinaryDataset, Provenance};
use hdc_core::encoders::{DenseBinaryLayer, LearnedEncoder};
use hdc_core::hv::{bind, bundle_majority, hamming, inner_pm1};
use hdc_core::model::{count_ops, retrain_step2_encoded, Architecture, ClassPrototypes, CLASSIC_BASELINE_ADDITIONS};
use hdc_core::snapshot::{decode_snapshot, encode_snapshot};
use hdc_core::theory::{
    average_case_accuracy, lemma1_closed_form, lemma1_monte_carlo, lemma2_bruteforce, lemma2_sup,
    projection_monotonicity, theorem1_construction_check, worst_case_accuracy,
};
use hdc_core::{BinaryHypervector, SplittableRng};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    NotRun,
}

struct Report {
    lines: Vec<(Status, String, String)>,
}

impl Report {
    fn record(&mut self, name: &str, status: Status, detail: String) {
        let tag = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotRun => "NOT RUN",
        };
        println!("{tag:<7} {name}: {detail}");
        self.lines.push((status, name.to_string(), detail));
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.record(name, if ok { Status::Pass } else { Status::Fail }, detail);
    }
}

fn data_root() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn theorem1(r: &mut Report) {
    let t = Instant::now();
    let a1 = worst_case_accuracy(1).unwrap().value;
    let a2 = worst_case_accuracy(2).unwrap().value;
    let mut prev = a1;
    let mut decreasing = true;
    for d in 2..=10_000 {
        let v = worst_case_accuracy(d).unwrap().value;
        decreasing &= v < prev;
        prev = v;
    }
    let mut worst_gap: f64 = 0.0;
    for d in 1..=500 {
        let gap = (theorem1_construction_check(d).unwrap() - worst_case_accuracy(d).unwrap().value).abs();
        worst_gap = worst_gap.max(gap);
    }
    let el = t.elapsed();
    r.check(
        "worst-case closed form",
        (a1 - 1.0).abs() <= 1e-12
            && (a2 - 0.875).abs() <= 1e-12
            && decreasing
            && worst_gap <= 1e-10
            && el < Duration::from_secs(5),
        format!(
            "Acc(1)={a1}, Acc(2)={a2}, strictly decreasing to d=10000: {decreasing}, Acc(10000)={prev:.6}, \
             construction max gap {worst_gap:.1e} (d<=500), {}",
            secs(el)
        ),
    );
}

fn random_delta(rng: &mut SplittableRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.next_f64() - rng.next_f64()).collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

fn lemma2(r: &mut Report) {
    let t = Instant::now();
    let root = SplittableRng::new(11).named("lemma2");
    let mut worst: f64 = 0.0;
    for d in 1..=10 {
        let mut rng = root.split(d as u64);
        for _ in 0..1000 {
            let delta = random_delta(&mut rng, d);
            let diff = (lemma2_sup(&delta).unwrap().0 - lemma2_bruteforce(&delta).unwrap()).abs();
            worst = worst.max(diff);
        }
    }
    let el = t.elapsed();
    r.check(
        "sorted-prefix supremum equals brute force",
        worst <= 1e-12 && el < Duration::from_secs(60),
        format!("10000 instances d=1..10, max |diff| {worst:.1e}, {}", secs(el)),
    );
}

fn lemma1(r: &mut Report) {
    let t = Instant::now();
    let root = SplittableRng::new(5).named("lemma1-configs");
    let mut worst_z: f64 = 0.0;
    let mut misses = 0;
    let mut total = 0;
    for d in [2usize, 5, 10] {
        for c in 0..20 {
            let mut rng = root.split((d * 100 + c) as u64);
            let mut v = || (0..d).map(|_| rng.next_f64()).collect::<Vec<f64>>();
            let (t1, t2, h1, h2) = (v(), v(), v(), v());
            let exact = lemma1_closed_form(&t1, &t2, &h1, &h2).unwrap();
            let est = lemma1_monte_carlo(&t1, &t2, &h1, &h2, 1_000_000, (d * 100 + c) as u64).unwrap();
            let z = (est.mean - exact).abs() / est.stderr.max(f64::MIN_POSITIVE);
            worst_z = worst_z.max(z);
            misses += usize::from(z > 3.0);
            total += 1;
        }
    }
    let el = t.elapsed();
    r.check(
        "two-halfspace probability vs Monte Carlo",
        misses == 0 && el < Duration::from_secs(120),
        format!(
            "{total} configurations (20 each at d=2,5,10), 1e6 samples, {misses} beyond 3 stderr, max z {worst_z:.2}, {}",
            secs(el)
        ),
    );
}

fn average_trend(r: &mut Report) {
    let dims = [2usize, 8, 32, 128, 512];
    let res: Vec<_> = dims.iter().map(|&d| average_case_accuracy(d, 1000, 0).unwrap()).collect();
    let mut inversions = 0;
    let mut outside = 0;
    for w in res.windows(2) {
        if w[1].value >= w[0].value {
            inversions += 1;
            let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            outside += usize::from(w[1].value - w[0].value > 2.0 * se);
        }
    }
    let above = res
        .iter()
        .all(|x| x.value >= worst_case_accuracy(x.d).unwrap().value);
    let cells: Vec<String> = res
        .iter()
        .map(|x| format!("d={} {:.4}±{:.4}", x.d, x.value, x.stderr))
        .collect();
    r.check(
        "average-case trend",
        inversions <= 1 && outside == 0 && above,
        format!(
            "{}; {inversions} inversion(s), {outside} beyond 2 stderr, average >= worst everywhere: {above}",
            cells.join(", ")
        ),
    );
}

fn projection(r: &mut Report) {
    let t = Instant::now();
    let table = projection_monotonicity(4, 100, 0, 0).unwrap();
    let el = t.elapsed();
    let means: Vec<String> = table.means().iter().map(|m| format!("{m:.4}")).collect();
    r.check(
        "projection monotonicity",
        table.violations() == 0 && el < Duration::from_secs(300),
        format!(
            "m=4, 100 trials, {} violations, mean best accuracy by d [{}], {}",
            table.violations(),
            means.join(", "),
            secs(el)
        ),
    );
}

fn opcounts(r: &mut Report) {
    let one = count_ops(&Architecture::Learned(vec![784, 64]), 10);
    let two = count_ops(&Architecture::Learned(vec![784, 64, 64]), 10);
    let classic = count_ops(
        &Architecture::Classic {
            positions: 784,
            dim: 10_000,
        },
        10,
    );
    let ratio = one.baseline_ratio();
    r.check(
        "op counting",
        one.encoder_additions == 50_176
            && one.boolean_ops == 0
            && two.encoder_additions == 54_272
            && classic.encoder_additions == 7_840_000
            && classic.boolean_ops == 7_840_000
            && CLASSIC_BASELINE_ADDITIONS == 7_840_000
            && (100.0 * ratio - 0.64).abs() < 0.005,
        format!(
            "784->64 {}/{}, 784->64->64 {}, classic {}/{}, ratio {:.3}%",
            one.encoder_additions,
            one.boolean_ops,
            two.encoder_additions,
            classic.encoder_additions,
            classic.boolean_ops,
            100.0 * ratio
        ),
    );
}

fn hv_of(rng: &mut SplittableRng, d: usize) -> BinaryHypervector {
    BinaryHypervector::from_bits((0..d).map(|_| rng.next_bit())).unwrap()
}

fn pm(b: bool) -> i64 {
    if b {
        1
    } else {
        -1
    }
}

/// Randomized versions of the core property suites; returns failures.
fn property_suites() -> Vec<String> {
    let mut fails = Vec::new();
    let root = SplittableRng::new(2024).named("properties");
    for case in 0..300u64 {
        let mut rng = root.split(case);
        let d = 1 + rng.below(512) as usize;
        let (a, b, c) = (hv_of(&mut rng, d), hv_of(&mut rng, d), hv_of(&mut rng, d));

        let h = (0..d).filter(|&i| a.bit(i) != b.bit(i)).count();
        let inner: i64 = (0..d).map(|i| pm(a.bit(i)) * pm(b.bit(i))).sum();
        if hamming(&a, &b).unwrap() != h || inner_pm1(&a, &b).unwrap() != inner || inner != d as i64 - 2 * h as i64 {
            fails.push(format!("hamming/inner identity, case {case}"));
        }

        let ab = bind(&a, &b).unwrap();
        let algebra = ab == bind(&b, &a).unwrap()
            && bind(&ab, &c).unwrap() == bind(&a, &bind(&b, &c).unwrap()).unwrap()
            && bind(&ab, &b).unwrap() == a
            && bind(&a, &a).unwrap() == BinaryHypervector::ones(d).unwrap()
            && (0..d).all(|i| pm(ab.bit(i)) == pm(a.bit(i)) * pm(b.bit(i)));
        if !algebra {
            fails.push(format!("bind algebra, case {case}"));
        }

        let n = 1 + rng.below(9) as usize;
        let vs: Vec<_> = (0..n).map(|_| hv_of(&mut rng, d)).collect();
        let mut ties = SplittableRng::new(case);
        let mut shadow = SplittableRng::new(case);
        let out = bundle_majority(&vs, &mut ties).unwrap();
        let brute = (0..d).all(|i| {
            let s: i64 = vs.iter().map(|v| pm(v.bit(i))).sum();
            let e = if s > 0 {
                true
            } else if s < 0 {
                false
            } else {
                shadow.next_bit()
            };
            out.bit(i) == e
        });
        if !brute || ties.next_f64() != shadow.next_f64() {
            fails.push(format!("majority vs brute force, case {case}"));
        }

        let k = 2 + rng.below(4) as usize;
        let pd = 1 + rng.below(40) as usize;
        let sums: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..pd).map(|_| (rng.below(41) as f64) - 20.0).collect())
            .collect();
        let theta = rng.next_f64() * 10.0 - 5.0;
        let p = ClassPrototypes::from_sums(sums, theta).unwrap();
        let enc: Vec<_> = (0..30).map(|_| hv_of(&mut rng, pd)).collect();
        let labels: Vec<usize> = (0..30).map(|_| rng.below(k as u64) as usize).collect();
        let q = retrain_step2_encoded(&p, &enc, &labels, 0.5 + rng.next_f64(), 2).unwrap();
        let consistent = |p: &ClassPrototypes| {
            p.sums()
                .iter()
                .zip(p.reps())
                .all(|(s, r)| s.iter().enumerate().all(|(i, &v)| r.bit(i) == (v > p.theta())))
        };
        if !consistent(&p) || !consistent(&q) || !consistent(&q.with_theta(theta + 1.0).unwrap()) {
            fails.push(format!("threshold consistency, case {case}"));
        }
        let conserved = (0..pd).all(|i| {
            let before: f64 = p.sums().iter().map(|s| s[i]).sum();
            let after: f64 = q.sums().iter().map(|s| s[i]).sum();
            (before - after).abs() < 1e-9
        });
        if !conserved {
            fails.push(format!("step-2 conservation, case {case}"));
        }

        let (i, o) = (1 + rng.below(20) as usize, 1 + rng.below(20) as usize);
        let w: Vec<i32> = (0..i * o).map(|_| rng.below(255) as i32 - 127).collect();
        let th: Vec<i32> = (0..o).map(|_| rng.below(200) as i32 - 100).collect();
        let fl: Vec<bool> = (0..o).map(|_| rng.next_bit()).collect();
        let model = LearnedEncoder::new(vec![DenseBinaryLayer::from_integer(i, o, &w, th, fl).unwrap()]).unwrap();
        let protos = ClassPrototypes::from_sums(vec![vec![1.0; o], vec![-1.0; o]], 0.0).unwrap();
        let bytes = encode_snapshot(&model, Some(&protos)).unwrap();
        let snap_ok = decode_snapshot(&bytes).is_ok_and(|(m, p)| m == model && p.as_ref() == Some(&protos));
        let ds = LabeledBinaryDataset::new(
            (0..5).map(|_| hv_of(&mut rng, d)).collect(),
            (0..5).map(|j| j % 3).collect(),
            3,
            Provenance::from_bytes([&case.to_le_bytes()[..]], "test"),
        )
        .unwrap();
        let cont_ok = decode_container(&encode_container(&ds))
            .is_ok_and(|b| b.samples() == ds.samples() && b.labels() == ds.labels());
        if !snap_ok || !cont_ok {
            fails.push(format!("serialization round trip, case {case}"));
        }
    }
    fails
}

fn properties(r: &mut Report) {
    let t = Instant::now();
    let fails = property_suites();
    let el = t.elapsed();
    r.check(
        "core property suites",
        fails.is_empty() && el < Duration::from_secs(30),
        if fails.is_empty() {
            format!("300 random cases of each of 6 suites, {}", secs(el))
        } else {
            format!("{} failures, first: {}", fails.len(), fails[0])
        },
    );
}

fn timed_run(cfg: &ExperimentConfig, data: &SplitData) -> (PipelineOutcome, Duration) {
    let t = Instant::now();
    let outcome = pipeline::run(cfg, data, &mut |_| {}).expect("pipeline");
    (outcome, t.elapsed())
}

fn one_layer(dim: usize) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetId::Mnist,
        dim,
        layers: 1,
        theta: ThetaSetting::Auto,
        retrain_step1: false,
        retrain_step2: false,
        ..Default::default()
    }
}

fn two_layer(dataset: DatasetId) -> ExperimentConfig {
    ExperimentConfig {
        dataset,
        dim: 64,
        layers: 2,
        ..Default::default()
    }
}

const THETAS: [f64; 8] = [1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3500.0, 4000.0, 4500.0];

fn sweep_range(outcome: &PipelineOutcome, test: &LabeledBinaryDataset) -> (f64, Vec<f64>) {
    let accs: Vec<f64> = outcome
        .theta_sweep(test, &THETAS)
        .unwrap()
        .into_iter()
        .map(|(_, a)| a)
        .collect();
    let hi = accs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = accs.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo, accs)
}

fn mnist(r: &mut Report, root: &Path) {
    let names = [
        "MNIST 1-layer d=64",
        "MNIST 2-layer d=64 with retraining",
        "dimension trend: d=32 near 78.8%",
        "dimension trend: increasing over d=32,64,128",
        "threshold robustness",
    ];
    if !dataset_available(DatasetId::Mnist, root) {
        for n in names {
            r.record(n, Status::NotRun, format!("MNIST files not found under {}", root.display()));
        }
        return;
    }
    let data = datasets::load(&one_layer(64), root).expect("load MNIST");

    let (m64, t64) = timed_run(&one_layer(64), &data);
    r.check(
        names[0],
        m64.accuracy() >= 0.815 && t64 < Duration::from_secs(15 * 60),
        format!(
            "accuracy {} (threshold 81.50%), theta {:.0}, {}",
            pct(m64.accuracy()),
            m64.prototypes.theta(),
            secs(t64)
        ),
    );

    let (two, t2) = timed_run(&two_layer(DatasetId::Mnist), &data);
    let base = two.base_accuracy();
    let worst_drop = two
        .stages
        .iter()
        .map(|s| base - s.test_accuracy)
        .fold(0.0f64, f64::max);
    let stages: Vec<String> = two
        .stages
        .iter()
        .map(|s| format!("{} {}", s.name, pct(s.test_accuracy)))
        .collect();
    r.check(
        names[1],
        two.accuracy() >= 0.885 && worst_drop <= 0.003,
        format!(
            "accuracy {} (threshold 88.50%), stages [{}], largest drop below base {:.2} points (limit 0.30), {}",
            pct(two.accuracy()),
            stages.join(", "),
            100.0 * worst_drop,
            secs(t2)
        ),
    );

    let (m32, _) = timed_run(&one_layer(32), &data);
    let (m128, _) = timed_run(&one_layer(128), &data);
    let a = [m32.accuracy(), m64.accuracy(), m128.accuracy()];
    r.check(
        names[2],
        (100.0 * a[0] - 78.8).abs() <= 3.0,
        format!("d=32 accuracy {} (window 75.80%..81.80%)", pct(a[0])),
    );
    r.check(
        names[3],
        a[0] < a[1] && a[1] < a[2],
        format!("d=32 {}, d=64 {}, d=128 {}", pct(a[0]), pct(a[1]), pct(a[2])),
    );

    let (range, accs) = sweep_range(&two, &data.test);
    let (range1, _) = sweep_range(&m64, &data.test);
    let cells: Vec<String> = THETAS.iter().zip(&accs).map(|(t, a)| format!("{t:.0}:{}", pct(*a))).collect();
    r.check(
        names[4],
        100.0 * range < 1.5,
        format!(
            "2-layer d=64 retrained, theta 1000..4500 step 500: [{}], range {:.2} points (limit 1.50); \
             1-layer d=64 range {:.2} points",
            cells.join(", "),
            100.0 * range,
            100.0 * range1
        ),
    );
}

fn secondary(r: &mut Report, root: &Path) {
    for (id, floor, label) in [
        (DatasetId::Isolet, 0.87, "ISOLET d=64"),
        (DatasetId::UciHar, 0.90, "UCI-HAR d=64"),
        (DatasetId::Fashion, 0.77, "Fashion-MNIST d=64"),
    ] {
        if !dataset_available(id, root) {
            r.record(label, Status::NotRun, format!("{id} files not found under {}", root.display()));
            continue;
        }
        let cfg = two_layer(id);
        let data = datasets::load(&cfg, root).expect("load dataset");
        let (out, el) = timed_run(&cfg, &data);
        r.check(
            label,
            out.accuracy() >= floor,
            format!(
                "2-layer accuracy {} (threshold {}), input bits {}, {}",
                pct(out.accuracy()),
                pct(floor),
                data.train.input_dim(),
                secs(el)
            ),
        );
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not supported; run everything.
    let root = data_root();
    let mut r = Report { lines: Vec::new() };
    let start = Instant::now();
    theorem1(&mut r);
    lemma2(&mut r);
    lemma1(&mut r);
    average_trend(&mut r);
    projection(&mut r);
    opcounts(&mut r);
    properties(&mut r);
    mnist(&mut r, &root);
    secondary(&mut r, &root);
    let count = |s: Status| r.lines.iter().filter(|l| l.0 == s).count();
    println!(
        "\nacceptance: {} passed, {} failed, {} not run ({})",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::NotRun),
        secs(start.elapsed())
    );
    if count(Status::Fail) > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
