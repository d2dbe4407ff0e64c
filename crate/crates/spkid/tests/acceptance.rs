//! Acceptance checks, one line per criterion. Runs as a plain binary so each
//! criterion reports PASS or FAIL with its measured values; exits non-zero
//! if any fails.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use spkid::config::{parse_config, Overrides};
use spkid::corpus::{build_synth_corpus, render_corpus, SynthCorpusParams};
use spkid::experiment::{run_cells, run_experiment_config};
use spkid_core::eval::{compute_eer, Cell, Experiment, LabeledAnalysis, Scenario};
use spkid_core::frontend::{extract, lpc_to_lpcc, FrontendConfig};
use spkid_core::linalg::Matrix;
use spkid_core::models::{argmin_by_label, sphericity, trace_product, ClassifierConfig, CovarianceModel, ModelPayload, Probe};
use spkid_core::transforms::{acw_frame, acw_numerator, TransformChain};

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

// ---------- independent oracles ----------

fn random_poles(rng: &mut ChaCha8Rng, p: usize) -> Vec<Complex64> {
    let mut poles = Vec::with_capacity(p);
    while poles.len() + 1 < p {
        let z = Complex64::from_polar(rng.random_range(0.1..0.95), rng.random_range(0.05..3.09));
        poles.push(z);
        poles.push(z.conj());
    }
    if poles.len() < p {
        poles.push(Complex64::new(rng.random_range(-0.95..0.95), 0.0));
    }
    poles
}

fn poly_from_poles(poles: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] -= ck * r;
        }
        c = next;
    }
    c[1..].iter().map(|z| z.re).collect()
}

/// c_1..c_q of a minimum-phase response from its power spectrum on an
/// N-point grid (inverse DFT of the log power).
fn cepstrum_from_power(power: impl Fn(f64) -> f64, q: usize) -> Vec<f64> {
    const N: usize = 4096;
    let logs: Vec<f64> = (0..N).map(|k| power(2.0 * std::f64::consts::PI * k as f64 / N as f64).ln()).collect();
    (1..=q)
        .map(|m| {
            logs.iter()
                .enumerate()
                .map(|(k, l)| l * (2.0 * std::f64::consts::PI * ((k * m) % N) as f64 / N as f64).cos())
                .sum::<f64>()
                / N as f64
        })
        .collect()
}

fn linf(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn eer_sweep(client: &[f64], impostor: &[f64]) -> f64 {
    let mut th: Vec<f64> = client.iter().chain(impostor).copied().collect();
    th.sort_by(f64::total_cmp);
    th.dedup();
    let rate = |s: &[f64], t: f64| s.iter().filter(|&&x| x <= t).count() as f64 / s.len() as f64;
    let mut pts = vec![(0.0, 1.0)];
    pts.extend(th.iter().map(|&t| (rate(impostor, t), 1.0 - rate(client, t))));
    for w in pts.windows(2) {
        let ((f0, r0), (f1, r1)) = (w[0], w[1]);
        if f1 == r1 {
            return 100.0 * f1;
        }
        if f0 < r0 && f1 > r1 {
            let t = (r0 - f0) / ((f1 - r1) - (f0 - r0));
            return 100.0 * (f0 + t * (f1 - f0));
        }
    }
    unreachable!()
}

fn random_spd(rng: &mut ChaCha8Rng, q: usize) -> Matrix {
    let l: Vec<f64> = (0..q * q)
        .map(|i| if i % q < i / q { rng.random_range(-0.5..0.5) } else if i % q == i / q { rng.random_range(0.3..2.0) } else { 0.0 })
        .collect();
    let mut data = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            data[i * q + j] = (0..q).map(|k| l[i * q + k] * l[j * q + k]).sum();
        }
    }
    Matrix::from_row_major(q, data).unwrap()
}

fn cm(m: Matrix) -> CovarianceModel {
    let q = m.n();
    CovarianceModel::from_parts(m, vec![0.0; q], 0.0).unwrap()
}

// ---------- corpora ----------

fn analyses(params: &SynthCorpusParams, frontend: &FrontendConfig, acw: bool) -> Vec<LabeledAnalysis> {
    render_corpus(params)
        .unwrap()
        .into_par_iter()
        .map(|(key, clip)| {
            let mut analysis = extract(&clip, frontend).unwrap();
            if acw {
                analysis = analysis.with_acw().unwrap();
            }
            LabeledAnalysis { key, analysis }
        })
        .collect()
}

fn mic_scenarios(names: &[&str]) -> Vec<Scenario> {
    names
        .iter()
        .map(|n| {
            let (train, test) = n.split_at(2);
            Scenario::parse(n, &format!("microphone={train}"), &format!("microphone={}", test)).unwrap()
        })
        .collect()
}

fn rates(exp: &Experiment, utts: &[LabeledAnalysis]) -> Vec<Vec<f64>> {
    let report = run_cells(exp, utts);
    let t = &report.identification;
    (0..t.rows.len())
        .map(|i| {
            (0..t.cols.len())
                .map(|j| match t.get(i, j) {
                    Cell::Rate(r) => *r,
                    _ => f64::NAN,
                })
                .collect()
        })
        .collect()
}

// ---------- criteria ----------

fn c1_lpcc_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for i in 0..100 {
        let p = [10, 16, 20][i % 3];
        let q = rng.random_range(p..=20);
        let a = poly_from_poles(&random_poles(&mut rng, p));
        let oracle = cepstrum_from_power(
            |w| {
                let s: Complex64 = std::iter::once(Complex64::new(1.0, 0.0))
                    .chain(a.iter().enumerate().map(|(k, ak)| ak * Complex64::from_polar(1.0, -w * (k + 1) as f64)))
                    .sum();
                1.0 / s.norm_sqr()
            },
            q,
        );
        worst = worst.max(linf(&lpc_to_lpcc(&a, q), &oracle));
    }
    verdict(worst < 1e-6, format!("100 filters, max L-inf error {worst:.2e} (tol 1e-6)"))
}

fn c2_acw_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst, mut worst_imag) = (0.0_f64, 0.0_f64);
    for i in 0..50 {
        let p = [10, 16, 20][i % 3];
        let poles = random_poles(&mut rng, p);
        let a = poly_from_poles(&poles);
        let (_, imag) = acw_numerator(&a).unwrap();
        worst_imag = worst_imag.max(imag);
        let oracle = cepstrum_from_power(
            |w| {
                let e = Complex64::from_polar(1.0, -w);
                poles.iter().map(|p| (Complex64::new(1.0, 0.0) - p * e).inv()).sum::<Complex64>().norm_sqr()
            },
            20,
        );
        worst = worst.max(linf(&acw_frame(&a, 20).unwrap(), &oracle));
    }
    verdict(
        worst < 1e-6 && worst_imag < 1e-10,
        format!("50 filters, max L-inf error {worst:.2e} (tol 1e-6), max imaginary residue {worst_imag:.1e} (tol 1e-10)"),
    )
}

fn c3_sphericity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let target = -std::f64::consts::LN_2;
    let (mut self_err, mut scale_err, mut sym_err) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..50 {
        let q = [2, 8, 16, 20][i % 4];
        let c = random_spd(&mut rng, q);
        let b = random_spd(&mut rng, q);
        self_err = self_err.max((sphericity(&cm(c.clone()), &cm(c.clone())).unwrap() - target).abs());
        for k in [0.1, 10.0] {
            scale_err = scale_err.max((sphericity(&cm(c.clone()), &cm(c.scaled(k))).unwrap() - target).abs());
        }
        let (x, y) = (cm(c), cm(b));
        sym_err = sym_err.max((sphericity(&x, &y).unwrap() - sphericity(&y, &x).unwrap()).abs());
    }
    verdict(
        self_err <= 1e-10 && scale_err <= 1e-10 && sym_err <= 1e-12,
        format!("d(C,C) err {self_err:.1e}, d(C,kC) err {scale_err:.1e} (tol 1e-10), asymmetry {sym_err:.1e} (tol 1e-12)"),
    )
}

fn c4_eer() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0_f64;
    for i in 0..100 {
        let nc = rng.random_range(1..60);
        let ni = rng.random_range(1..200);
        let shift = rng.random_range(0.0..3.0);
        // every fourth instance on a coarse grid to force ties
        let draw = |rng: &mut ChaCha8Rng, offset: f64| {
            let v: f64 = rng.random_range(0.0..4.0) + offset;
            if i % 4 == 0 { (v * 4.0).round() / 4.0 } else { v }
        };
        let client: Vec<f64> = (0..nc).map(|_| draw(&mut rng, 0.0)).collect();
        let impostor: Vec<f64> = (0..ni).map(|_| draw(&mut rng, shift)).collect();
        worst = worst.max((compute_eer(&client, &impostor).unwrap() - eer_sweep(&client, &impostor)).abs());
    }
    let separated = compute_eer(&[0.1, 0.2, 0.3], &[1.0, 2.0]).unwrap();
    let same: Vec<f64> = (0..37).map(|_| rng.random_range(0.0..1.0)).collect();
    let identical = compute_eer(&same, &same).unwrap();
    verdict(
        worst < 0.1 && separated == 0.0 && (identical - 50.0).abs() < 1e-9,
        format!("100 instances, max deviation {worst:.2e} pp (tol 0.1), separated {separated}, identical {identical}"),
    )
}

fn matched_params() -> SynthCorpusParams {
    SynthCorpusParams {
        speakers: 8,
        microphones: vec!["M1".into(), "M3".into()],
        ..SynthCorpusParams::default()
    }
}

fn c5_matched() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    let params = SynthCorpusParams {
        microphones: vec!["M1".into()],
        ..matched_params()
    };
    for (classifier, frontend, name) in [
        (ClassifierConfig::vq(), FrontendConfig::vq(), "VQ"),
        (ClassifierConfig::cm(), FrontendConfig::cm(), "CM"),
    ] {
        let utts = analyses(&params, &frontend, false);
        let exp = Experiment {
            scenarios: mic_scenarios(&["M1M1"]),
            chains: vec![TransformChain::parse("LPCC").unwrap()],
            classifier,
            cohort_size: 0,
            master_seed: 5,
        };
        let outcome = spkid_core::eval::run_cell_of(&exp, &utts, 0).unwrap();
        ok &= outcome.identification_rate >= 95.0 && outcome.identification_trials >= 40;
        lines.push(format!("{name} {:.1}% over {} trials", outcome.identification_rate, outcome.identification_trials));
    }
    verdict(ok, format!("8 speakers, LPCC: {} (need >= 95% over >= 40)", lines.join(", ")))
}

fn c6_cms_recovery() -> Verdict {
    let utts = analyses(&matched_params(), &FrontendConfig::vq(), false);
    let exp = Experiment {
        scenarios: mic_scenarios(&["M1M1", "M1M3"]),
        chains: vec![TransformChain::parse("LPCC").unwrap(), TransformChain::parse("CMS").unwrap()],
        classifier: ClassifierConfig::vq(),
        cohort_size: 0,
        master_seed: 6,
    };
    let r = rates(&exp, &utts);
    let (lpcc_match, lpcc_mis, cms_match, cms_mis) = (r[0][0], r[0][1], r[1][0], r[1][1]);
    let matched = lpcc_match.max(cms_match);
    let pass = lpcc_match - lpcc_mis >= 20.0 && cms_mis >= matched - 10.0 && cms_mis > lpcc_mis;
    verdict(
        pass,
        format!(
            "VQ, tilt channel on test audio: LPCC {lpcc_match:.1} -> {lpcc_mis:.1}, CMS {cms_match:.1} -> {cms_mis:.1} \
             (need LPCC drop >= 20, CMS within 10 of {matched:.1}, CMS > LPCC)"
        ),
    )
}

fn c7_ranking() -> Verdict {
    let params = SynthCorpusParams {
        speakers: 8,
        tests_per_cell: 3,
        train_s: 20.0,
        ..SynthCorpusParams::default()
    };
    let utts = analyses(&params, &FrontendConfig::cm(), false);
    let classifier = ClassifierConfig::cm();
    let train: Vec<_> = utts.iter().filter(|u| u.key.role == spkid_core::Role::Train).collect();
    let models: Vec<(String, CovarianceModel)> = train
        .iter()
        .map(|u| match classifier.train(&u.analysis.cepstra, 0).unwrap() {
            ModelPayload::Cm(c) => (u.key.speaker.clone(), c),
            ModelPayload::Vq(_) => unreachable!(),
        })
        .collect();
    let labels: Vec<&str> = models.iter().map(|m| m.0.as_str()).collect();
    let mut trials = 0;
    let mut agree = 0;
    for u in utts.iter().filter(|u| u.key.role == spkid_core::Role::Test).take(20) {
        let Probe::Cm(test) = classifier.probe(u.analysis.cepstra.clone()).unwrap() else { unreachable!() };
        let formula: Vec<f64> = models.iter().map(|(_, m)| sphericity(m, &test).unwrap()).collect();
        let bare: Vec<f64> = models.iter().map(|(_, m)| trace_product(m, &test).unwrap()).collect();
        trials += 1;
        agree += usize::from(argmin_by_label(&labels, &formula) == argmin_by_label(&labels, &bare));
    }
    verdict(trials == 20 && agree == trials, format!("{agree}/{trials} decisions identical"))
}

const TABLE_CHAINS: [&str; 13] = [
    "LPCC", "LPCC3P", "SIGMA", "ACW", "CMS", "CMS+ACW", "CMS+ACW+SIGMA", "CMS+SIGMA", "CMS-LW", "ACW+SIGMA", "PF",
    "CMS+PF", "CMS+PF+SIGMA",
];

fn c8_table_shape() -> Verdict {
    let params = SynthCorpusParams {
        speakers: 6,
        microphones: vec!["M1".into(), "M3".into()],
        train_s: 20.0,
        tests_per_cell: 3,
        ..SynthCorpusParams::default()
    };
    let utts = analyses(&params, &FrontendConfig::vq(), true);
    let exp = Experiment {
        scenarios: mic_scenarios(&["M1M1", "M1M3", "M3M3", "M3M1"]),
        chains: TABLE_CHAINS.iter().map(|c| TransformChain::parse(c).unwrap()).collect(),
        classifier: ClassifierConfig::vq(),
        cohort_size: 3,
        master_seed: 8,
    };
    let a = run_cells(&exp, &utts);
    let b = run_cells(&exp, &utts);
    let t = &a.identification;
    let shape = t.rows.len() == 13 && t.cols == ["M1M1", "M1M3", "M3M3", "M3M1"] && t.rows.iter().zip(TABLE_CHAINS).all(|(r, c)| r == c);
    let failed = a.failed_cells() + a.verification.failed_cells();
    let same = a == b;
    verdict(
        shape && failed == 0 && same,
        format!("{}x{} table, {failed} failed cells, identical across runs: {same}", t.rows.len(), t.cols.len()),
    )
}

fn c9_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let params = SynthCorpusParams {
        speakers: 4,
        microphones: vec!["M1".into(), "M3".into()],
        train_s: 10.0,
        test_s: 1.0,
        tests_per_cell: 2,
        ..SynthCorpusParams::default()
    };
    let (manifest, _) = build_synth_corpus(&params, dir.path()).unwrap();
    let text = "chains = [\"LPCC\", \"CMS+ACW+SIGMA\"]\ncohort_size = 2\nmaster_seed = 11\n\
                [classifier]\nkind = \"vq\"\nbits = 5\n\
                [[scenario]]\nname = \"M1M1\"\ntrain = \"mic=M1\"\ntest = \"mic=M1\"\n\
                [[scenario]]\nname = \"M1M3\"\ntrain = \"mic=M1\"\ntest = \"mic=M3\"\n";
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let o = Overrides {
            manifest: Some(manifest.clone()),
            output_dir: Some(dir.path().join(run)),
            ..Overrides::default()
        };
        let cfg = parse_config(text, dir.path(), &o).unwrap();
        run_experiment_config(&cfg).unwrap();
        let read = |f: &str| std::fs::read(dir.path().join(run).join(f)).unwrap();
        outputs.push((read("identification.csv"), read("verification.csv")));
    }
    let same = outputs[0] == outputs[1];
    verdict(same, format!("two runs, {} + {} CSV bytes, byte-identical: {same}", outputs[0].0.len(), outputs[0].1.len()))
}

type Criterion = (&'static str, fn() -> Verdict, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 LPCC oracle", c1_lpcc_oracle, Some(Duration::from_secs(5))),
        ("2 ACW oracle", c2_acw_oracle, Some(Duration::from_secs(10))),
        ("3 sphericity identities", c3_sphericity, None),
        ("4 EER oracle", c4_eer, None),
        ("5 matched identification", c5_matched, Some(Duration::from_secs(60))),
        ("6 CMS mismatch recovery", c6_cms_recovery, None),
        ("7 ranking invariance", c7_ranking, None),
        ("8 table shape", c8_table_shape, None),
        ("9 determinism", c9_determinism, None),
    ];
    let mut failures = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let mut v = check();
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            if elapsed > limit {
                v.pass = false;
                v.detail.push_str(&format!("; over the {}s budget", limit.as_secs()));
            }
        }
        failures += usize::from(!v.pass);
        println!(
            "[{}] criterion {name}: {} ({:.2}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
