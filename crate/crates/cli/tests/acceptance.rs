//! Acceptance checks A1-A10, one PASS/FAIL line each.
//!
//! The full run trains every acceptance sweep at 10^5 samples and takes
//! a long time on one core. `COVQCS_ACCEPTANCE=A3,A8` limits the run to
//! the listed checks (A2 then covers only the sweeps that ran).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use covqcs::bounds::{bound_noiseless, c2, BoundInputs};
use covqcs::channel::{bsc, bsc_capacity, Dmc};
use covqcs::codebook::{Codebook, Domain};
use covqcs::covq::covq_encode;
use covqcs::harness::experiment::to_db;
use covqcs::harness::{
    generate, run_point, run_sweep, train_system, ExperimentConfig, PointOutcome, Quantizer,
    Scheme, SweepConfig,
};
use covqcs::model::mutual_coherence;
use covqcs::msvq::{msvq_encode_stage, Stage, StagePlan};
use covqcs::rng::Purpose;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Training monotonicity of every point run so far, for A2.
#[derive(Default)]
struct Seen {
    points: Vec<(String, bool)>,
}

impl Seen {
    fn record(&mut self, label: &str, outcomes: &[PointOutcome]) {
        for o in outcomes {
            let ok = o.result.as_ref().is_ok_and(|r| r.train_monotone);
            self.points.push((format!("{label} {} @ {}", o.scheme, o.value), ok));
        }
    }
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).expect("acceptance config is valid")
}

fn sweep(text: &str, label: &str, seen: &mut Seen) -> Vec<PointOutcome> {
    let sweep = SweepConfig::from_toml(text).expect("acceptance sweep is valid");
    let out = run_sweep(&sweep, |o| match &o.result {
        Ok(r) => eprintln!(
            "  {label}: {} {} -> {:.3} dB ({:.0} s)",
            o.scheme,
            o.value,
            r.eval.nmse_db,
            r.train_seconds + r.eval_seconds
        ),
        Err(e) => eprintln!("  {label}: {} {} failed: {e}", o.scheme, o.value),
    });
    seen.record(label, &out);
    out
}

fn point(out: &[PointOutcome], scheme: Scheme, value: f64) -> &covqcs::harness::PointResult {
    out.iter()
        .find(|o| o.scheme == scheme && o.value == value)
        .and_then(|o| o.result.as_ref().ok())
        .unwrap_or_else(|| panic!("{scheme} at {value} failed"))
}

// Example 1: N = 2, K = 1, perfect recovery, noiseless channel. The NMSE
// must sit on or above the noiseless bound and within 0.5 dB of it.
fn a1(seen: &mut Seen) -> Verdict {
    let out = sweep(
        "schemes = [\"covq-cs\"]\naxis = \"rate\"\nvalues = [4, 5, 6, 7, 8]\n\
         [base]\nn = 2\nk = 1\nm = 2\nestimator = \"oracle\"\nn_train = 200000\nn_eval = 200000\nseed = 1\n",
        "A1",
        seen,
    );
    let mut pass = true;
    let mut gaps = Vec::new();
    for r in 4..=8 {
        let got = point(&out, Scheme::CovqCs, r as f64).eval.nmse_db;
        let b = BoundInputs {
            n: 2,
            k: 1,
            mu: 0.0,
            sigma_w2: 0.0,
            rate_bits: r as f64,
            capacity: 1.0,
        };
        let gap = got - to_db(bound_noiseless(&b).unwrap() / b.k as f64);
        pass &= (0.0..=0.5).contains(&gap);
        gaps.push(format!("R={r}: {gap:+.3} dB"));
    }
    verdict(pass, format!("NMSE minus bound: {}", gaps.join(", ")))
}

fn a2(seen: &mut Seen) -> Verdict {
    // every scheme on a small noisy sweep, on top of the acceptance sweeps
    sweep(
        "schemes = [\"covq-cs\", \"comsvq-cs\", \"nnc-cs\", \"msnnc-cs\", \"ssc\", \"ssc-ideal-support\"]\n\
         axis = \"epsilon\"\nvalues = [0.0, 0.01, 0.05]\n\
         [base]\nn = 8\nk = 2\nm = 6\nrate = 8\nsigma_w2 = 0.01\nn_train = 30000\nn_eval = 10000\nseed = 2\n",
        "A2",
        seen,
    );
    let bad: Vec<&str> = seen.points.iter().filter(|p| !p.1).map(|p| p.0.as_str()).collect();
    verdict(
        bad.is_empty(),
        format!("{} points, non-monotone or failed: {:?}", seen.points.len(), bad),
    )
}

// A single-stage MSVQ is the COVQ: same codebook bits, indices and NMSE.
fn a3() -> Verdict {
    let base = "n = 8\nk = 2\nm = 5\nrate = 8\nsigma_w2 = 0.01\nn_train = 20000\nn_eval = 20000\nseed = 5\n";
    let mut notes = Vec::new();
    let mut pass = true;
    for eps in [0.0, 0.03] {
        let covq_cfg = cfg(&format!("scheme = \"covq-cs\"\nepsilon = {eps}\n{base}"));
        let msvq_cfg = cfg(&format!("scheme = \"comsvq-cs\"\nstages = 1\nepsilon = {eps}\n{base}"));
        let (a_init, b_init) = if eps > 0.0 {
            (
                Some(train_system(&covq_cfg.noiseless(), None).unwrap()),
                Some(train_system(&msvq_cfg.noiseless(), None).unwrap()),
            )
        } else {
            (None, None)
        };
        let (a, ar) = run_point(&covq_cfg, a_init.as_ref()).unwrap();
        let (b, br) = run_point(&msvq_cfg, b_init.as_ref()).unwrap();
        let bits = |cb: &Codebook| cb.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        let same_cb = a.codebooks().len() == 1
            && b.codebooks().len() == 1
            && bits(a.codebooks()[0]) == bits(b.codebooks()[0]);
        let data = generate(&covq_cfg, &a.model, None, Purpose::Evaluation, 0, 5000).unwrap();
        let est = covqcs::harness::experiment::reconstructor(&covq_cfg, &a.model).unwrap();
        let targets: Vec<f64> = data
            .y
            .chunks_exact(a.model.m())
            .zip(data.x.chunks_exact(8))
            .flat_map(|(y, x)| est.estimate(y, x).unwrap())
            .collect();
        let ia = match &a.quantizer {
            Quantizer::Single { tables, .. } => tables.encode_batch(&targets).unwrap().0,
            _ => unreachable!(),
        };
        let ib = match &b.quantizer {
            Quantizer::Multi(plan) => plan.encode_batch(&targets).unwrap().remove(0),
            _ => unreachable!(),
        };
        let same_nmse = ar.eval.nmse.mean.to_bits() == br.eval.nmse.mean.to_bits();
        pass &= same_cb && ia == ib && same_nmse;
        notes.push(format!(
            "eps={eps}: codebooks {}, indices {}, NMSE {}",
            if same_cb { "equal" } else { "differ" },
            if ia == ib { "equal" } else { "differ" },
            if same_nmse { "equal" } else { "differ" }
        ));
    }
    verdict(pass, notes.join("; "))
}

fn random_channel(rng: &mut ChaCha8Rng, rate: u32) -> Dmc {
    if rng.random_bool(0.5) {
        return bsc(rate, rng.random_range(0.0..0.5)).unwrap();
    }
    let size = 1usize << rate;
    let mut p = Vec::with_capacity(size * size);
    for _ in 0..size {
        let row: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect();
        let total: f64 = row.iter().sum();
        p.extend(row.iter().map(|v| v / total));
    }
    Dmc::from_matrix(rate, p).unwrap()
}

fn random_codebook(rng: &mut ChaCha8Rng, dim: usize, rate: u32) -> Codebook {
    Codebook::new(Domain::Source, dim, (0..dim << rate).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

fn brute_argmin(costs: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in costs.enumerate() {
        if c < best.1 {
            best = (i, c);
        }
    }
    best.0
}

fn sq(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

// Encoder rules against direct evaluation of the expected distortion.
fn a4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut covq_miss, mut msvq_miss) = (0, 0);
    let trials = 1000;
    for _ in 0..trials {
        let dim = rng.random_range(1..=4);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.5..2.5)).collect();

        let rate = rng.random_range(0..=4);
        let (cb, ch) = (random_codebook(&mut rng, dim, rate), random_channel(&mut rng, rate));
        let size = cb.size();
        let want = brute_argmin((0..size).map(|i| {
            (0..size)
                .map(|j| {
                    let d: Vec<f64> = x.iter().zip(cb.vector(j)).map(|(a, b)| a - b).collect();
                    ch.prob(i, j) * sq(&d)
                })
                .sum()
        }));
        covq_miss += usize::from(covq_encode(&x, &cb, &ch).unwrap() != want);

        let (r0, r1) = (rng.random_range(0..=4), rng.random_range(0..=4));
        let stages = vec![
            Stage {
                codebook: random_codebook(&mut rng, dim, r0),
                channel: random_channel(&mut rng, r0),
            },
            Stage {
                codebook: random_codebook(&mut rng, dim, r1),
                channel: random_channel(&mut rng, r1),
            },
        ];
        let i0 = rng.random_range(0..1usize << r0);
        let (s0, s1) = (&stages[0], &stages[1]);
        let want = brute_argmin((0..1usize << r1).map(|i1| {
            let mut cost = 0.0;
            for j0 in 0..1usize << r0 {
                for j1 in 0..1usize << r1 {
                    let d: Vec<f64> = (0..dim)
                        .map(|t| x[t] - s0.codebook.vector(j0)[t] - s1.codebook.vector(j1)[t])
                        .collect();
                    cost += s0.channel.prob(i0, j0) * s1.channel.prob(i1, j1) * sq(&d);
                }
            }
            cost
        }));
        let plan = StagePlan::new(stages).unwrap();
        msvq_miss += usize::from(msvq_encode_stage(&x, 1, &[i0], &plan).unwrap() != want);
    }
    verdict(
        covq_miss == 0 && msvq_miss == 0,
        format!("{trials} instances: covq mismatches {covq_miss}, msvq stage-2 mismatches {msvq_miss}"),
    )
}

fn a5(seen: &mut Seen) -> Verdict {
    let t = Instant::now();
    let alphas = [0.5, 0.67, 0.75, 0.83];
    let out = sweep(
        "schemes = [\"covq-cs\", \"comsvq-cs\", \"msnnc-cs\"]\naxis = \"alpha\"\nvalues = [0.5, 0.67, 0.75, 0.83]\n\
         [base]\nn = 12\nk = 2\nrate = 12\nseed = 1\n",
        "A5",
        seen,
    );
    let mut pass = true;
    let mut rows = Vec::new();
    for a in alphas {
        let db = |s| point(&out, s, a).eval.nmse_db;
        let (c, m, n) = (db(Scheme::CovqCs), db(Scheme::ComsvqCs), db(Scheme::MsnncCs));
        pass &= c <= m + 0.3 && m <= n + 0.3;
        rows.push(format!("a={a}: {c:.2}/{m:.2}/{n:.2}"));
    }
    let minutes = t.elapsed().as_secs_f64() / 60.0;
    pass &= minutes < 30.0;
    verdict(
        pass,
        format!("covq/comsvq/msnnc dB {}; {minutes:.1} min", rows.join(", ")),
    )
}

fn a6(seen: &mut Seen) -> Verdict {
    let t = Instant::now();
    let rates = [10.0, 15.0, 20.0, 25.0, 30.0];
    let out = sweep(
        "schemes = [\"comsvq-cs\"]\naxis = \"rate\"\nvalues = [10, 15, 20, 25, 30]\n\
         [base]\nn = 32\nk = 3\nm = 20\nsigma_w2 = 0.005\nestimator = \"omp\"\nseed = 1\n",
        "A6",
        seen,
    );
    let db: Vec<f64> = rates.iter().map(|&r| point(&out, Scheme::ComsvqCs, r).eval.nmse_db).collect();
    let last = point(&out, Scheme::ComsvqCs, 30.0);
    let floor = to_db(last.eval.d_cs.mean / 3.0);
    let monotone = db.windows(2).all(|w| w[1] <= w[0]);
    let near = (db[4] - floor).abs() <= 2.0;
    let minutes = t.elapsed().as_secs_f64() / 60.0;
    verdict(
        monotone && near && minutes < 60.0,
        format!(
            "NMSE dB {:?}, measured D_cs {floor:.2} dB, final gap {:.2} dB; {minutes:.1} min",
            db.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>(),
            db[4] - floor
        ),
    )
}

fn a7(seen: &mut Seen) -> Verdict {
    let eps = [0.005, 0.01, 0.02, 0.05];
    let schemes = [Scheme::CovqCs, Scheme::ComsvqCs, Scheme::Ssc];
    let out = sweep(
        "schemes = [\"covq-cs\", \"comsvq-cs\", \"ssc\"]\naxis = \"epsilon\"\nvalues = [0.005, 0.01, 0.02, 0.05]\n\
         [base]\nn = 12\nk = 2\nm = 9\nrate = 15\nseed = 1\n",
        "A7",
        seen,
    );
    let gain = point(&out, Scheme::Ssc, 0.05).eval.nmse_db - point(&out, Scheme::CovqCs, 0.05).eval.nmse_db;
    let mut pass = gain >= 3.0;
    let mut curves = Vec::new();
    for s in schemes {
        let est: Vec<_> = eps.iter().map(|&e| point(&out, s, e).eval.nmse).collect();
        let ok = est.windows(2).all(|w| {
            let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[1].mean >= w[0].mean - se
        });
        pass &= ok;
        let db: Vec<String> = est.iter().map(|e| format!("{:.2}", to_db(e.mean))).collect();
        curves.push(format!("{s} [{}]{}", db.join(" "), if ok { "" } else { " not monotone" }));
    }
    verdict(pass, format!("gain over ssc at 0.05: {gain:.2} dB; {}", curves.join("; ")))
}

fn a8() -> Verdict {
    let c2_1 = c2(1);
    let c2_2 = c2(2);
    let cap = bsc_capacity(0.02);
    let phi = DMatrix::from_row_slice(2, 3, &[0.9924, 0.8961, 0.7201, 0.1230, 0.4439, 0.6939]);
    let mu = mutual_coherence(&phi).unwrap();
    let want_c2_1 = std::f64::consts::FRAC_PI_2 * 3f64.sqrt();
    let pass = (c2_1 - want_c2_1).abs() <= 1e-6 && c2_2 == 4.0 && (cap - 0.8586).abs() <= 1e-4 && (mu - 0.9533).abs() <= 1e-4;
    verdict(pass, format!("c2(1) = {c2_1:.9}, c2(2) = {c2_2}, C(0.02) = {cap:.6}, mu = {mu:.6}"))
}

// With the exact MMSE estimate the cross term vanishes in expectation.
fn a9() -> Verdict {
    let c = cfg("scheme = \"covq-cs\"\nn = 8\nk = 1\nm = 4\nrate = 6\nsigma_w2 = 0.01\nestimator = \"exact\"\nseed = 9\n");
    let (_, r) = run_point(&c, None).unwrap();
    let e = &r.eval;
    let d = e.nmse.mean * c.k as f64;
    let gap = (d - (e.d_cs.mean + e.d_q.mean)).abs();
    verdict(
        gap <= 3.0 * e.cross.stderr,
        format!(
            "D = {d:.6}, D_cs + D_q = {:.6}, |gap| = {gap:.2e}, 3 sigma of cross term = {:.2e}",
            e.d_cs.mean + e.d_q.mean,
            3.0 * e.cross.stderr
        ),
    )
}

fn a10() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "schemes = [\"covq-cs\", \"comsvq-cs\", \"msnnc-cs\", \"ssc\"]\naxis = \"epsilon\"\nvalues = [0.0, 0.02]\n\
         [base]\nn = 10\nk = 2\nm = 6\nrate = 8\nsigma_w2 = 0.01\nn_train = 20000\nn_eval = 20000\nseed = 77\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_covqcs"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("covqcs runs");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    let rows = a.iter().filter(|&&c| c == b'\n').count();
    verdict(a == b && rows == 9, format!("{rows} lines, {} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let only: Option<Vec<String>> = std::env::var("COVQCS_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').map(|s| s.trim().to_uppercase()).collect());
    let wanted = |id: &str| only.as_ref().is_none_or(|o| o.iter().any(|s| s == id));
    let mut seen = Seen::default();
    type Check<'a> = (&'static str, Box<dyn FnOnce(&mut Seen) -> Verdict + 'a>);
    // A2 runs last so it sees every sweep point trained before it.
    let checks: Vec<Check> = vec![
        ("A1", Box::new(a1)),
        ("A3", Box::new(|_| a3())),
        ("A4", Box::new(|_| a4())),
        ("A5", Box::new(a5)),
        ("A6", Box::new(a6)),
        ("A7", Box::new(a7)),
        ("A8", Box::new(|_| a8())),
        ("A9", Box::new(|_| a9())),
        ("A10", Box::new(|_| a10())),
        ("A2", Box::new(a2)),
    ];
    let mut lines = Vec::new();
    for (id, check) in checks {
        if !wanted(id) {
            continue;
        }
        eprintln!("{id} ...");
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| check(&mut seen)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        eprintln!("{id} done in {:.1} s", t.elapsed().as_secs_f64());
        lines.push((id, v));
    }
    lines.sort_by_key(|(id, _)| id[1..].parse::<u32>().unwrap());
    let mut failed = 0;
    for (id, v) in &lines {
        failed += usize::from(!v.pass);
        println!("{id} {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
