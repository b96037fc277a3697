use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use threshold_matching::adversary::{
    gen_empty_det_adversary, gen_empty_rand_adversary, max_gap_index, GapInstance,
};
use threshold_matching::elicitation::{
    elicit as elicit_profile, elicit_generalized, feasibility, feasibility_generalized,
};
use threshold_matching::flow::build_network;
use threshold_matching::generalized::{
    allocation_coefficients, default_grt_delta, default_gt_delta, grt_coefficients,
    grt_expected_welfare, run_grt, run_gt, values_from_input,
};
use threshold_matching::io::{instance_to_json, parse_instance, Instance};
use threshold_matching::onesided::{
    default_ft_delta, default_rt_delta, indicator, rt_distribution, run_ft, run_rt,
    threshold_weight, MechanismConfig, Mode,
};
use threshold_matching::oracle::{
    exact_distortion, exact_distortion_generalized, expected_welfare, maximal_allocations,
    optimal_matching,
};
use threshold_matching::{
    allocation_welfare, Allocation, Error, GeneralizedDims, GeneralizedInput, GeneralizedInstance,
    InputProfile, OneSidedInput, ThresholdVector,
};

use crate::{
    AdversarialArgs, DistortionArgs, ElicitArgs, Family, FlowDumpArgs, MechanismName, RunArgs,
    ThresholdArgs,
};

#[derive(Debug)]
pub enum Failure {
    Data(String),
    SizeLimit(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Data(_) => 2,
            Failure::SizeLimit(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Data(s) | Failure::SizeLimit(s) => f.write_str(s),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SizeLimit { .. } => Failure::SizeLimit(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, contents: &str) -> CliResult {
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> CliResult<Instance> {
    parse_instance(&read(path)?).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

/// `+inf` as a string, finite values as numbers.
pub fn ratio_json(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("+inf")
    } else {
        json!(x)
    }
}

/// Default ratio for `mechanism` on an instance of `n` agents and total `T`.
pub fn default_delta(mechanism: MechanismName, n: usize, total: usize, t: usize) -> f64 {
    match mechanism {
        MechanismName::Ft => default_ft_delta(n, t),
        MechanismName::Rt => default_rt_delta(n, t),
        MechanismName::Gt => default_gt_delta(total, t),
        MechanismName::Grt => default_grt_delta(total, t),
    }
}

fn resolve_taus(
    args: &ThresholdArgs,
    default: impl FnOnce(usize) -> f64,
) -> CliResult<ThresholdVector> {
    match &args.taus {
        Some(list) => Ok(ThresholdVector::new(list.clone())?),
        None => {
            let delta = args.delta.unwrap_or_else(|| default(args.t));
            Ok(ThresholdVector::geometric(delta, args.t)?)
        }
    }
}

/// A config whose thresholds are exactly `taus`.
pub fn config_for(taus: &ThresholdVector, mechanism: MechanismName, seed: u64) -> MechanismConfig {
    let mode = match mechanism {
        MechanismName::Ft | MechanismName::Gt => Mode::Deterministic,
        MechanismName::Rt | MechanismName::Grt => Mode::Randomized,
    };
    MechanismConfig {
        t: taus.len(),
        delta: 1.0 / taus.tau(1),
        taus: taus.clone(),
        mode,
        seed,
    }
}

fn generalized_of(inst: &Instance) -> GeneralizedInstance {
    match inst {
        Instance::OneSided { profile, .. } => GeneralizedInstance::from_one_sided(profile),
        Instance::Generalized(g) => g.clone(),
    }
}

pub fn elicit(args: ElicitArgs) -> CliResult {
    let inst = load_instance(&args.instance)?;
    let (profile_json, feasible) = match &inst {
        Instance::OneSided { profile, .. } => {
            let n = profile.n();
            let taus = resolve_taus(&args.thresholds, |t| default_ft_delta(n, t))?;
            let s = elicit_profile(profile, &taus);
            (serde_json::to_value(&s)?, feasibility(&s, n))
        }
        Instance::Generalized(g) => {
            let total = g.dims().total();
            let taus = resolve_taus(&args.thresholds, |t| default_gt_delta(total, t))?;
            let s = elicit_generalized(g, &taus);
            (
                serde_json::to_value(&s)?,
                feasibility_generalized(&s, g.dims()),
            )
        }
    };
    let text = pretty(&profile_json);
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    eprintln!("feasible: {feasible}");
    if !feasible {
        eprintln!("warning: no unit-sum utility profile is consistent with these thresholds");
    }
    Ok(())
}

fn value_welfare(
    input: &GeneralizedInput,
    dims: &GeneralizedDims,
    alloc: &Allocation,
) -> CliResult<f64> {
    let values = values_from_input(input, dims)?;
    Ok(alloc
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(a, &x)| values[i][a][..x].iter().sum::<f64>())
                .sum::<f64>()
        })
        .sum())
}

pub fn run(args: RunArgs) -> CliResult {
    let start = Instant::now();
    let record = if args.mechanism.generalized() {
        let input: GeneralizedInput = load_json(&args.input)?;
        let path = args.instance.as_ref().ok_or_else(|| {
            Failure::Data("gt and grt need --instance for capacities and supplies".into())
        })?;
        let dims = generalized_of(&load_instance(path)?).dims().clone();
        let config = config_for(input.taus(), args.mechanism, args.seed);
        let alloc = if args.mechanism == MechanismName::Gt {
            run_gt(&input, &dims, &config)?.allocation
        } else {
            run_grt(
                &input,
                &dims,
                &config,
                &mut ChaCha8Rng::seed_from_u64(args.seed),
            )?
        };
        json!({
            "mechanism": args.mechanism.label(),
            "seed": args.seed,
            "allocation": alloc,
            "value_welfare": value_welfare(&input, &dims, &alloc)?,
        })
    } else {
        let input: OneSidedInput = serde_json::from_str(&read(&args.input)?).map_err(|e| {
            Failure::Data(format!(
                "{}: not a one-sided input profile: {e}",
                args.input.display()
            ))
        })?;
        let config = config_for(input.taus(), args.mechanism, args.seed);
        let matching = if args.mechanism == MechanismName::Ft {
            run_ft(&input, &config)?
        } else {
            run_rt(&input, &config, &mut ChaCha8Rng::seed_from_u64(args.seed))?
        };
        json!({
            "mechanism": args.mechanism.label(),
            "seed": args.seed,
            "assignment": matching,
            "value_welfare": threshold_weight(&input, &matching),
        })
    };
    print!("{}", pretty(&record));
    eprintln!("wall time: {:.3} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

/// Exact distortion record for one instance, shared with the sweep.
pub struct DistortionRecord {
    pub distortion: f64,
    pub welfare: f64,
    pub optimal_welfare: f64,
    pub json: Value,
}

pub fn distortion_record(
    inst: &Instance,
    mechanism: MechanismName,
    taus: &ThresholdVector,
    seed: u64,
) -> CliResult<DistortionRecord> {
    let config = config_for(taus, mechanism, seed);
    match (inst, mechanism.generalized()) {
        (Instance::OneSided { profile, .. }, false) => {
            let input = elicit_profile(profile, taus);
            let p = match mechanism {
                MechanismName::Ft => indicator(&run_ft(&input, &config)?),
                _ => rt_distribution(&input, &config)?,
            };
            let report = exact_distortion(&p, &input)?;
            let welfare = expected_welfare(&p, profile);
            let (_, optimal_welfare) = optimal_matching(profile);
            Ok(DistortionRecord {
                distortion: report.distortion,
                welfare,
                optimal_welfare,
                json: json!({
                    "mechanism": mechanism.label(),
                    "n": profile.n(),
                    "taus": taus,
                    "distortion": ratio_json(report.distortion),
                    "welfare": welfare,
                    "optimal_welfare": optimal_welfare,
                    "assignment_probabilities": p,
                    "alternative": report.alternative,
                    "witness": report.witness,
                    "alternatives_checked": report.alternatives_checked,
                }),
            })
        }
        (Instance::Generalized(_), false) => Err(Failure::Data(format!(
            "{} needs a one-sided instance",
            mechanism.label()
        ))),
        (_, true) => {
            let g = generalized_of(inst);
            let dims = g.dims();
            let input = elicit_generalized(&g, taus);
            let gt = run_gt(&input, dims, &config)?;
            let (den, welfare) = if mechanism == MechanismName::Gt {
                (
                    allocation_coefficients(&gt.allocation, dims),
                    allocation_welfare(&gt.allocation, &g)?,
                )
            } else {
                (
                    grt_coefficients(&gt.allocation, dims),
                    grt_expected_welfare(&gt.allocation, &g),
                )
            };
            let report = exact_distortion_generalized(&den, &input, dims)?;
            let optimal_welfare = maximal_allocations(dims)?
                .iter()
                .map(|x| allocation_welfare(x, &g).expect("enumerated allocations are feasible"))
                .fold(0.0, f64::max);
            Ok(DistortionRecord {
                distortion: report.distortion,
                welfare,
                optimal_welfare,
                json: json!({
                    "mechanism": mechanism.label(),
                    "n": dims.n(),
                    "m": dims.m(),
                    "total": dims.total(),
                    "taus": taus,
                    "distortion": ratio_json(report.distortion),
                    "welfare": welfare,
                    "optimal_welfare": optimal_welfare,
                    "deterministic_allocation": gt.allocation,
                    "alternative": report.alternative,
                    "witness": report.witness,
                    "alternatives_checked": report.alternatives_checked,
                }),
            })
        }
    }
}

pub fn distortion(args: DistortionArgs) -> CliResult {
    let inst = load_instance(&args.instance)?;
    let (n, total) = match &inst {
        Instance::OneSided { profile, .. } => (profile.n(), profile.n()),
        Instance::Generalized(g) => (g.dims().n(), g.dims().total()),
    };
    let taus = resolve_taus(&args.thresholds, |t| {
        default_delta(args.mechanism, n, total, t)
    })?;
    let record = distortion_record(&inst, args.mechanism, &taus, args.seed)?;
    if let Some(path) = &args.witness_out {
        let witness = json!({
            "alternative": record.json["alternative"],
            "witness": record.json["witness"],
        });
        write(path, &pretty(&witness))?;
    }
    print!("{}", pretty(&record.json));
    Ok(())
}

pub fn gen_adversarial(args: AdversarialArgs) -> CliResult {
    let n = args.n;
    if args.mechanism.generalized() {
        return Err(Failure::Data(
            "adversarial families target the one-sided mechanisms ft and rt".into(),
        ));
    }
    let mechanism = match args.family {
        Family::Gap => args.mechanism,
        Family::EmptyDet => MechanismName::Ft,
        Family::EmptyRand => MechanismName::Rt,
    };
    let taus = resolve_taus(&args.thresholds, |t| default_delta(mechanism, n, n, t))?;
    let config = config_for(&taus, mechanism, 0);
    let probabilities = |input: &OneSidedInput| -> CliResult<Vec<Vec<f64>>> {
        Ok(match mechanism {
            MechanismName::Ft => indicator(&run_ft(input, &config)?),
            _ => rt_distribution(input, &config)?,
        })
    };
    let (input, profile, extra) = match args.family {
        Family::Gap => {
            let k = args.k.unwrap_or_else(|| max_gap_index(&taus));
            let gap = GapInstance::new(&taus, k, n)?;
            let (u, picks) = gap.utilities(&probabilities(&gap.input)?)?;
            let extra = json!({"k": k, "m": gap.m, "residual_level": gap.residual_level, "block_matching": picks});
            (gap.input, u, extra)
        }
        Family::EmptyDet => {
            let input = InputProfile::empty(taus.clone(), n);
            let a = run_ft(&input, &config)?;
            let u = gen_empty_det_adversary(&taus, n, &a)?;
            (input, u, json!({}))
        }
        Family::EmptyRand => {
            let input = InputProfile::empty(taus.clone(), n);
            let (u, alt) = gen_empty_rand_adversary(&taus, n, &probabilities(&input)?)?;
            (input, u, json!({"alternative": alt}))
        }
    };
    let p = probabilities(&input)?;
    let welfare = expected_welfare(&p, &profile);
    let (_, optimal) = optimal_matching(&profile);
    let instance = Instance::OneSided {
        items: threshold_matching::OneSidedInstance::indexed(n)?,
        profile,
    };
    write(&args.out_instance, &pretty(&instance_to_json(&instance)))?;
    if let Some(path) = &args.out_input {
        write(path, &pretty(&serde_json::to_value(&input)?))?;
    }
    let ratio = if welfare > 0.0 {
        optimal / welfare
    } else {
        f64::INFINITY
    };
    let mut record = json!({
        "family": args.family.to_possible_value().expect("no skipped variants").get_name().to_string(),
        "mechanism": mechanism.label(),
        "n": n,
        "taus": taus,
        "mechanism_welfare": welfare,
        "optimal_welfare": optimal,
        "realized_ratio": ratio_json(ratio),
    });
    if let (Some(r), Some(e)) = (record.as_object_mut(), extra.as_object()) {
        r.extend(e.clone());
    }
    print!("{}", pretty(&record));
    Ok(())
}

pub fn flow_dump(args: FlowDumpArgs) -> CliResult {
    let g = generalized_of(&load_instance(&args.instance)?);
    let dims = g.dims();
    let values = match &args.input {
        Some(path) => {
            let input: GeneralizedInput = load_json(path)?;
            input.check_slots(dims)?;
            values_from_input(&input, dims)?
        }
        None => (0..dims.n())
            .map(|i| {
                (0..dims.m())
                    .map(|a| g.utilities()[i][a][..dims.max_copies(i, a)].to_vec())
                    .collect()
            })
            .collect(),
    };
    let net = build_network(dims.capacities(), dims.supplies(), &values)?;
    for (i, a, j) in net.increasing_marginals() {
        eprintln!("warning: values increase for agent {i}, item {a} at copy {j}");
    }
    print!("{}", net.dump());
    Ok(())
}
