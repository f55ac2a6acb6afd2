use std::fmt::Write as _;
use std::fs;

use blockdiscrim::classifier::{FittedClassifier, WeightScheme};
use blockdiscrim::dataset::{format_feature, DataRow, Label, LabeledDataset};
use blockdiscrim::model::{fit, BlockPartition, PopulationModel, SpdMatrix};
use blockdiscrim::montecarlo::{self, derive_seed, ExperimentConfig, PowerAssignment};
use blockdiscrim::risk::{
    limiting_divergence, optimal_risk, optimal_weight, unit_error_limits, unit_risk,
    weighted_error_limits,
};
use blockdiscrim::{Error, PowerDistribution, Regime, Result, Scalar};

use crate::{ClassifyArgs, GenerateArgs, RiskArgs, RiskcurveArgs, SimulateArgs, WeightfnArgs};

/// Purpose tags for the two generated classes (the Monte Carlo harness
/// owns the replication-level tags).
const GEN_CLASS1: u64 = 0xC1;
const GEN_CLASS2: u64 = 0xC2;

pub fn generate(args: GenerateArgs) -> Result<()> {
    let model =
        PopulationModel::canonical(args.kappa, args.block_size, args.gamma2, args.n, args.pi1)?;
    if args.count_per_class == 0 {
        return Err(Error::Usage("--count-per-class must be >= 1".into()));
    }
    let class1 = model.sample(
        Label::Class1,
        args.count_per_class,
        derive_seed(args.seed, 0, GEN_CLASS1),
    )?;
    let class2 = model.sample(
        Label::Class2,
        args.count_per_class,
        derive_seed(args.seed, 0, GEN_CLASS2),
    )?;
    let mut rows: Vec<DataRow> = class1.rows().to_vec();
    rows.extend_from_slice(class2.rows());
    let data = LabeledDataset::new(model.partition(), rows)?;

    fs::write(&args.model_out, to_json(&model)?)?;
    fs::write(&args.data_out, data.to_csv_string())?;
    Ok(())
}

pub fn classify(args: ClassifyArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let partition = model.partition();
    let train = read_dataset(&args.train, partition)?;
    let train1 = single_class(&train, Label::Class1)?;
    let train2 = single_class(&train, Label::Class2)?;
    let covariances: Vec<SpdMatrix> = model
        .blocks()
        .iter()
        .map(|b| b.covariance().clone())
        .collect();
    let clf = fit(&train1, &train2, &covariances, partition, model.prior1())?;
    let scheme = parse_scheme(&args.scheme, args.h.as_deref(), partition.block_size())?;
    let weights = clf.resolve_weights(&scheme)?;

    let test = read_test_rows(&args.test, partition.total_features())?;
    let mut out = String::from("row,true_label,predicted_label,discriminant\n");
    let mut errors = [0usize; 2];
    let mut counts = [0usize; 2];
    for (i, (label, features)) in test.iter().enumerate() {
        let d = clf.discriminant(features, &weights)?;
        let predicted = predict(&clf, d);
        let true_text = label.map_or(String::new(), |l| l.as_int().to_string());
        writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            true_text,
            predicted.as_int(),
            format_feature(d)
        )
        .expect("writing to memory");
        if let Some(l) = *label {
            let idx = (l.as_int() - 1) as usize;
            counts[idx] += 1;
            if predicted != l {
                errors[idx] += 1;
            }
        }
    }
    // summary lines only when every row carries a true label
    if !test.is_empty() && test.iter().all(|(l, _)| l.is_some()) {
        let e1 = errors[0] as Scalar / counts[0].max(1) as Scalar;
        let e2 = errors[1] as Scalar / counts[1].max(1) as Scalar;
        if counts[0] > 0 {
            writeln!(
                out,
                "# e1 = {} ({} class-1 rows)",
                format_feature(e1),
                counts[0]
            )
            .unwrap();
        }
        if counts[1] > 0 {
            writeln!(
                out,
                "# e2 = {} ({} class-2 rows)",
                format_feature(e2),
                counts[1]
            )
            .unwrap();
        }
        if counts[0] > 0 && counts[1] > 0 {
            let risk = model.prior1() * e1 + model.prior2() * e2;
            writeln!(out, "# bayes_risk = {}", format_feature(risk)).unwrap();
        }
    }
    fs::write(&args.out, out)?;
    Ok(())
}

pub fn risk(args: RiskArgs) -> Result<()> {
    let h = power_distribution(args.gamma2, args.h.as_deref())?;
    let m = block_size_u32(args.m)?;
    let pi0 = log_prior_ratio(args.pi1)?;
    let regime = Regime::new(m, args.rho, pi0)?;
    let j = limiting_divergence(&h, args.rho);
    // rho = 0 leaves no estimation noise: the unit column degenerates to
    // the known-densities limit Phi(-sqrt(J)/2), which is 1/2 since the
    // limiting divergence carries a factor rho
    let (e1, e2) = if args.rho == 0.0 && pi0 == 0.0 {
        (0.5, 0.5)
    } else {
        unit_error_limits(j, &regime)?
    };
    let risk_unit = args.pi1 * e1 + (1.0 - args.pi1) * e2;
    let risk_w0 = optimal_weight_risk(&regime, &h, args.pi1)?;

    let mut out = String::from("m,rho,pi1,j,e1_unit,e2_unit,risk_unit,risk_w0\n");
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        args.m,
        format_feature(args.rho),
        format_feature(args.pi1),
        format_feature(j),
        format_feature(e1),
        format_feature(e2),
        format_feature(risk_unit),
        format_feature(risk_w0),
    )
    .expect("writing to memory");
    print!("{out}");
    Ok(())
}

pub fn weightfn(args: WeightfnArgs) -> Result<()> {
    if !(args.u_min > 0.0 && args.u_max > args.u_min) {
        return Err(Error::Usage(
            "require 0 < --u-min < --u-max for the weight grid".into(),
        ));
    }
    if args.u_steps < 2 {
        return Err(Error::Usage("--u-steps must be >= 2".into()));
    }
    let h = power_distribution(args.gamma2, args.h.as_deref())?;
    let m = block_size_u32(args.m)?;
    let mut out = String::from("u,w0\n");
    for i in 0..args.u_steps {
        let t = i as Scalar / (args.u_steps - 1) as Scalar;
        let u = args.u_min + (args.u_max - args.u_min) * t;
        let w = optimal_weight(u, m, &h)?;
        writeln!(out, "{},{}", format_feature(u), format_feature(w)).expect("writing to memory");
    }
    emit(args.out.as_deref(), &out)
}

pub fn riskcurve(args: RiskcurveArgs) -> Result<()> {
    if args.n == 0 {
        return Err(Error::Usage("--n must be >= 1".into()));
    }
    if !(args.gamma2_min >= 0.0 && args.gamma2_max >= args.gamma2_min) {
        return Err(Error::Usage(
            "require 0 <= --gamma2-min <= --gamma2-max".into(),
        ));
    }
    if args.steps < 2 {
        return Err(Error::Usage("--steps must be >= 2".into()));
    }
    let m = block_size_u32(args.m)?;
    let rho = args.kappa as Scalar / args.n as Scalar;
    let regime = Regime::equal_priors(m, rho)?;
    let mut out = String::from("gamma2,rho,risk_w0,risk_unit\n");
    for i in 0..args.steps {
        let t = i as Scalar / (args.steps - 1) as Scalar;
        let gamma2 = args.gamma2_min + (args.gamma2_max - args.gamma2_min) * t;
        let h = PowerDistribution::point_mass(gamma2)?;
        writeln!(
            out,
            "{},{},{},{}",
            format_feature(gamma2),
            format_feature(rho),
            format_feature(optimal_risk(&regime, &h)?),
            format_feature(unit_risk(&regime, &h)?),
        )
        .expect("writing to memory");
    }
    emit(args.out.as_deref(), &out)
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let powers = match (args.gamma2, args.h.as_deref()) {
        (Some(g), None) => PowerAssignment::Uniform(g),
        (None, Some(spec)) => PowerAssignment::Cyclic(parse_h(spec)?),
        _ => {
            return Err(Error::Usage(
                "exactly one of --gamma2 or --h is required".into(),
            ))
        }
    };
    let scheme_h = power_distribution(args.gamma2, args.h.as_deref())?;
    let schemes = args
        .schemes
        .split(',')
        .map(|name| scheme_from_name(name.trim(), &scheme_h, args.block_size))
        .collect::<Result<Vec<_>>>()?;

    let config = ExperimentConfig {
        kappa: args.kappa,
        block_size: args.block_size,
        powers,
        train_size: args.n,
        prior1: args.pi1,
        schemes,
        replications: args.reps,
        test_per_class_per_rep: args.test_per_class,
        base_seed: args.seed,
    };
    let report = if args.parallel {
        montecarlo::run_parallel(&config, thread_cap()?)?
    } else {
        montecarlo::run(&config)?
    };
    fs::write(format!("{}.json", args.out), to_json(&report)?)?;
    fs::write(format!("{}.csv", args.out), report.to_csv_string())?;
    Ok(())
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("BLOCKDISCRIM_THREADS") {
        Ok(text) => {
            let n: usize = text.parse().map_err(|_| {
                Error::Usage(format!(
                    "BLOCKDISCRIM_THREADS must be an integer, got `{text}`"
                ))
            })?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn predict(clf: &FittedClassifier, discriminant: Scalar) -> Label {
    if discriminant > clf.log_prior_ratio() {
        Label::Class1
    } else {
        Label::Class2
    }
}

/// Bayes risk under the optimal weight function. Equal priors use the
/// closed-form minimum; otherwise the weighted limits carry the threshold.
fn optimal_weight_risk(regime: &Regime, h: &PowerDistribution, pi1: Scalar) -> Result<Scalar> {
    if regime.log_prior_ratio() == 0.0 {
        return optimal_risk(regime, h);
    }
    let m = regime.block_size();
    let w = |u: Scalar| optimal_weight(u, m, h).expect("positive quadrature abscissas");
    let (e1, e2) = weighted_error_limits(w, regime, h)?;
    Ok(pi1 * e1 + (1.0 - pi1) * e2)
}

fn log_prior_ratio(pi1: Scalar) -> Result<Scalar> {
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::Usage(format!(
            "--pi1 must lie strictly inside (0, 1), got {pi1}"
        )));
    }
    Ok(((1.0 - pi1) / pi1).ln())
}

fn block_size_u32(m: usize) -> Result<u32> {
    u32::try_from(m).map_err(|_| Error::Usage("block size too large".into()))
}

fn emit(path: Option<&str>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Usage(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn load_model(path: &str) -> Result<PopulationModel> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(json_error)
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        message: e.to_string(),
    }
}

fn read_dataset(path: &str, partition: BlockPartition) -> Result<LabeledDataset> {
    let text = fs::read_to_string(path)?;
    LabeledDataset::read_csv(text.as_bytes(), partition)
}

fn single_class(data: &LabeledDataset, label: Label) -> Result<LabeledDataset> {
    LabeledDataset::new(data.partition(), data.class_rows(label).cloned().collect())
}

/// Test rows: like the dataset CSV, except label 0 marks an unlabeled row.
fn read_test_rows(path: &str, total_features: usize) -> Result<Vec<(Option<Label>, Vec<Scalar>)>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.starts_with('#') || trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            let names = trimmed.split(',').count();
            if !trimmed.starts_with("label") || names != total_features + 1 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("test header must be `label,f1,...,f{total_features}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let mut fields = trimmed.split(',');
        let label_text = fields.next().unwrap_or_default().trim();
        let label = match label_text {
            "0" => None,
            other => Some(
                other
                    .parse::<u8>()
                    .ok()
                    .and_then(Label::from_int)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: format!("label must be 0, 1 or 2, got `{other}`"),
                    })?,
            ),
        };
        let features = fields
            .map(|f| {
                f.trim().parse::<Scalar>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid feature value `{f}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if features.len() != total_features {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "row has {} features, expected {total_features}",
                    features.len()
                ),
            });
        }
        rows.push((label, features));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: "missing test header".into(),
        });
    }
    Ok(rows)
}

/// `point:<gamma2>` or a JSON file path.
fn parse_h(spec: &str) -> Result<PowerDistribution> {
    if let Some(value) = spec.strip_prefix("point:") {
        let gamma2: Scalar = value.parse().map_err(|_| {
            Error::Usage(format!(
                "invalid point mass `{spec}`; expected point:<gamma2>"
            ))
        })?;
        return PowerDistribution::point_mass(gamma2);
    }
    let text = fs::read_to_string(spec)?;
    serde_json::from_str(&text).map_err(json_error)
}

fn power_distribution(gamma2: Option<Scalar>, h: Option<&str>) -> Result<PowerDistribution> {
    match (gamma2, h) {
        (Some(g), None) => PowerDistribution::point_mass(g),
        (None, Some(spec)) => parse_h(spec),
        (None, None) => Err(Error::Usage("one of --gamma2 or --h is required".into())),
        (Some(_), Some(_)) => Err(Error::Usage(
            "--gamma2 and --h are mutually exclusive".into(),
        )),
    }
}

fn parse_scheme(name: &str, h: Option<&str>, block_size: usize) -> Result<WeightScheme> {
    match name {
        "unit" => Ok(WeightScheme::Unit),
        "optimal" => {
            let spec = h.ok_or_else(|| {
                Error::Usage("--scheme optimal requires --h (point:<gamma2> or a JSON path)".into())
            })?;
            Ok(WeightScheme::OptimalPlugIn {
                h: parse_h(spec)?,
                block_size,
            })
        }
        other => fixed_scheme(other),
    }
}

fn scheme_from_name(name: &str, h: &PowerDistribution, block_size: usize) -> Result<WeightScheme> {
    match name {
        "unit" => Ok(WeightScheme::Unit),
        "optimal" => Ok(WeightScheme::OptimalPlugIn {
            h: h.clone(),
            block_size,
        }),
        other => fixed_scheme(other),
    }
}

/// `fixed:<path>`: whitespace/newline-separated weights, `#` comments.
fn fixed_scheme(name: &str) -> Result<WeightScheme> {
    let Some(path) = name.strip_prefix("fixed:") else {
        return Err(Error::Usage(format!(
            "unknown scheme `{name}`; expected unit, optimal or fixed:<path>"
        )));
    };
    let text = fs::read_to_string(path)?;
    let mut weights = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        for field in line.split_whitespace() {
            let w: Scalar = field.parse().map_err(|_| Error::Parse {
                line: index + 1,
                message: format!("invalid weight `{field}`"),
            })?;
            weights.push(w);
        }
    }
    Ok(WeightScheme::Fixed(weights))
}
