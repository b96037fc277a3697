use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use threshold_matching::io::Instance;
use threshold_matching::sampling::{derive_seed, random_marginals, random_profile};
use threshold_matching::{GeneralizedDims, OneSidedInstance, ThresholdVector};

use crate::commands::{default_delta, distortion_record, write, CliResult, Failure};
use crate::{MechanismName, SweepArgs};

pub const HEADER: [&str; 11] = [
    "n",
    "t",
    "delta",
    "mechanism",
    "trial",
    "seed",
    "distortion",
    "welfare",
    "optimal_welfare",
    "runtime_ms",
    "error",
];

/// `a..b` (inclusive), `a,b,c` or a single value.
pub fn parse_range(text: &str) -> CliResult<Vec<usize>> {
    let bad = || Failure::Data(format!("cannot parse range `{text}`"));
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (parse(a)?, parse(b.trim_start_matches('='))?);
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        text.split(',').map(parse).collect()
    }
}

struct Task {
    n: usize,
    t: usize,
    mechanism: MechanismName,
    trial: usize,
    seed: u64,
}

/// One trial: a random instance under the mechanism's default thresholds.
fn trial_row(task: &Task, timing: bool) -> Vec<String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let inst = if task.mechanism.generalized() {
        let caps = (0..task.n).map(|_| rng.gen_range(1..=2)).collect();
        let sups = (0..task.n).map(|_| rng.gen_range(1..=2)).collect();
        let dims = GeneralizedDims::new(caps, sups, None).expect("positive counts");
        Instance::Generalized(random_marginals(dims, &mut rng))
    } else {
        Instance::OneSided {
            items: OneSidedInstance::indexed(task.n).expect("n >= 1"),
            profile: random_profile(task.n, &mut rng),
        }
    };
    let total = match &inst {
        Instance::Generalized(g) => g.dims().total(),
        Instance::OneSided { .. } => task.n,
    };
    let delta = default_delta(task.mechanism, task.n, total, task.t);
    let outcome = ThresholdVector::geometric(delta, task.t)
        .map_err(Failure::from)
        .and_then(|taus| distortion_record(&inst, task.mechanism, &taus, task.seed));
    let runtime = if timing {
        format!("{:.3}", start.elapsed().as_secs_f64() * 1e3)
    } else {
        String::new()
    };
    let mut row = vec![
        task.n.to_string(),
        task.t.to_string(),
        delta.to_string(),
        task.mechanism.label().to_string(),
        task.trial.to_string(),
        task.seed.to_string(),
    ];
    match outcome {
        Ok(rec) => {
            let d = if rec.distortion == f64::INFINITY {
                "+inf".to_string()
            } else {
                rec.distortion.to_string()
            };
            row.extend([
                d,
                rec.welfare.to_string(),
                rec.optimal_welfare.to_string(),
                runtime,
                String::new(),
            ]);
        }
        Err(e) => row.extend([
            String::new(),
            String::new(),
            String::new(),
            runtime,
            e.to_string(),
        ]),
    }
    row
}

pub fn sweep(args: SweepArgs) -> CliResult {
    let ns = parse_range(&args.n_range)?;
    let ts = parse_range(&args.t_range)?;
    if ns.contains(&0) || ts.contains(&0) {
        return Err(Failure::Data("n and t must be at least 1".into()));
    }
    let mut tasks = Vec::new();
    for &n in &ns {
        for &t in &ts {
            for &mechanism in &args.mechanisms {
                for trial in 0..args.trials {
                    let seed = derive_seed(args.seed, tasks.len() as u64);
                    tasks.push(Task {
                        n,
                        t,
                        mechanism,
                        trial,
                        seed,
                    });
                }
            }
        }
    }
    let rows: Vec<Vec<String>> = tasks
        .par_iter()
        .map(|task| trial_row(task, args.timing))
        .collect();
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(HEADER)?;
    for row in &rows {
        out.write_record(row)?;
    }
    let bytes = out.into_inner().map_err(|e| Failure::Data(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("CSV of UTF-8 fields");
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    let failed = rows.iter().filter(|r| !r[10].is_empty()).count();
    if failed > 0 {
        eprintln!(
            "{failed} of {} trials failed; see the error column",
            rows.len()
        );
    }
    Ok(())
}
