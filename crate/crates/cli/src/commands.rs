use std::path::{Path, PathBuf};

use serde_json::json;
use spinscape::analysis::{
    self, annotate_sensitivities, concordance, report_bias, report_controller, SignatureReport,
};
use spinscape::export::{write_csv, PlotKind};
use spinscape::optimizer::{self, fastest_above_threshold};
use spinscape::record::{Experiment, ExperimentRecord};
use spinscape::{
    BiasVector, ControllerSet, EigenSystem, ObjectiveKind, OptimizationConfig, Readout,
    SpinNetwork, TimeSpec, TransferTask,
};

use crate::{
    CliError, DesignArgs, ExportArgs, LocalizeArgs, NetworkArgs, SearchArgs, TimeMode, VerifyArgs,
    OUT_DIR_ENV,
};

type CliResult<T> = Result<T, CliError>;

pub fn design(args: &DesignArgs) -> CliResult<()> {
    let net = network(&args.network)?;
    let (m, n) = (
        node_index(args.from, "--from")?,
        node_index(args.to, "--to")?,
    );
    let config = config(&args.search)?;
    let experiment = match args.time {
        TimeMode::Fixed => {
            let grid = args
                .t_grid
                .as_deref()
                .ok_or_else(|| CliError::Usage("--time fixed needs --t-grid".into()))?;
            let times = parse_grid(grid)?;
            if let [t] = times[..] {
                Experiment::Transfer {
                    task: TransferTask::new(&net, m, n, TimeSpec::Fixed { t }, args.window)?,
                }
            } else {
                Experiment::Sweep {
                    input: m,
                    output: n,
                    window: args.window,
                    times,
                }
            }
        }
        TimeMode::Free | TimeMode::Joint => {
            let (lo, hi) = parse_range(&args.t_range)?;
            Experiment::Transfer {
                task: TransferTask::new(&net, m, n, TimeSpec::Free { lo, hi }, args.window)?,
            }
        }
    };
    let set = match &experiment {
        Experiment::Transfer { task } => optimizer::maximize(task, &net, &config)?,
        Experiment::Sweep {
            input,
            output,
            window,
            times,
        } => optimizer::sweep_fixed_times(*input, *output, *window, times, &net, &config)?,
        Experiment::Localization { .. } => unreachable!(),
    };
    let default_name = format!(
        "design-{}{}-{}-{}-seed{}.json",
        net.topology(),
        net.n_spins(),
        args.from,
        args.to,
        config.seed
    );
    let record = finish(&net, experiment, config, set)?;
    if let Experiment::Sweep { times, .. } = &record.experiment {
        println!("T\tbest_infidelity");
        for &t in times {
            let best = record
                .controllers
                .iter()
                .filter(|c| c.time == t)
                .map(|c| c.infidelity)
                .fold(f64::INFINITY, f64::min);
            println!("{t}\t{best:.6e}");
        }
    }
    summarize(&record);
    write_record(&record, args.search.out.as_deref(), &default_name)
}

pub fn localize(args: &LocalizeArgs) -> CliResult<()> {
    let net = network(&args.network)?;
    let node = node_index(args.node, "--node")?;
    let config = config(&args.search)?;
    let set = optimizer::localize(&net, node, args.hold, &config)?;
    let default_name = format!(
        "localize-{}{}-{}-seed{}.json",
        net.topology(),
        net.n_spins(),
        args.node,
        config.seed
    );
    let record = finish(
        &net,
        Experiment::Localization {
            node,
            hold: args.hold,
        },
        config,
        set,
    )?;
    if let Some(best) = record.controllers.best() {
        println!("best localization error: {:.6e}", best.infidelity);
    }
    summarize(&record);
    write_record(&record, args.search.out.as_deref(), &default_name)
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let (net, m, n, bias, readout) = match &args.record {
        Some(path) => {
            let record = ExperimentRecord::read(path)?;
            let net = record.network()?;
            let (m, n) = record.experiment.endpoints();
            let c = record
                .controllers
                .controllers()
                .get(args.index)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "record holds {} controllers, index {} is out of range",
                        record.controllers.len(),
                        args.index
                    ))
                })?;
            (net, m, n, c.bias.clone(), c.readout())
        }
        None => {
            let missing = || {
                CliError::Usage("give --record or all of --n, --from, --to, --bias, --time".into())
            };
            let n_spins = args.n_spins.ok_or_else(missing)?;
            let net = SpinNetwork::new(n_spins, args.topology.into(), args.kappa)?;
            let m = node_index(args.from.ok_or_else(missing)?, "--from")?;
            let n = node_index(args.to.ok_or_else(missing)?, "--to")?;
            let bias = parse_bias(args.bias.as_deref().ok_or_else(missing)?)?;
            let t = args.time.ok_or_else(missing)?;
            let readout = Readout::new(t, args.window)?;
            (net, m, n, bias, readout)
        }
    };
    if bias.len() != net.n_spins() {
        return Err(CliError::Usage(format!(
            "bias has {} entries for {} spins",
            bias.len(),
            net.n_spins()
        )));
    }
    net.check_node(m)?;
    net.check_node(n)?;
    let eig = EigenSystem::from_network(&net, &bias)?;
    let fidelity = readout.value(&eig, m, n);
    let report = report_bias(&net, m, n, &bias, readout, args.eps)?;

    println!(
        "fidelity: {fidelity:.12} (infidelity {:.3e})",
        1.0 - fidelity
    );
    let sup = &report.superoptimality;
    if sup.superoptimal {
        println!(
            "SUPEROPTIMAL (residual {:.3e} < {:.0e})",
            sup.total_residual(),
            args.eps
        );
    } else {
        println!(
            "NOT SUPEROPTIMAL (projection residual {:.3e}, max phase residual {:.3e})",
            sup.projection_residual, sup.max_phase_residual
        );
    }
    if let Some(z) = &report.zero_sum {
        println!("zero-sum residual: {:.3e}", z.residual);
    }
    match &report.signature {
        Some(SignatureReport::Checked { max_violation, .. }) => {
            println!("signature violation: {max_violation:.3e}")
        }
        Some(SignatureReport::Inconclusive { min_gap }) => {
            println!("signature: inconclusive (eigenvalue gap {min_gap:.3e})")
        }
        None => println!("signature: not applicable (bias is not reflection symmetric)"),
    }
    println!(
        "sensitivity norm: {:.3e} (finite-difference residual {:.3e})",
        report.sensitivity.norm, report.sensitivity.fd_residual
    );

    let (t, half_width) = match readout {
        Readout::Instant { t } => (t, None),
        Readout::Window { t, half_width } => (t, Some(half_width)),
    };
    let doc = json!({
        "network": net.descriptor(),
        "input": m,
        "output": n,
        "bias": bias,
        "time": t,
        "window": half_width,
        "fidelity": fidelity,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    let path = output_path(args.out.as_deref(), "verify-report.json");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!("report: {}", path.display());
    Ok(())
}

pub fn export_plot(args: &ExportArgs) -> CliResult<()> {
    let kind: PlotKind = args.kind.parse()?;
    let records = args
        .records
        .iter()
        .map(ExperimentRecord::read)
        .collect::<Result<Vec<_>, _>>()?;
    let path = output_path(args.out.as_deref(), &format!("{kind}.csv"));
    write_csv(&records, kind, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn network(args: &NetworkArgs) -> CliResult<SpinNetwork> {
    Ok(SpinNetwork::new(
        args.n_spins,
        args.topology.into(),
        args.kappa,
    )?)
}

fn config(args: &SearchArgs) -> CliResult<OptimizationConfig> {
    let config = OptimizationConfig {
        restarts: args.restarts,
        symmetry: !args.no_symmetry,
        bias_init: args.bias_init.into(),
        seed: args.seed,
        grad_tol: args.grad_tol,
        max_iter: args.max_iter,
        bias_bound: args.bias_bound,
        fidelity_threshold: args.threshold,
        ..OptimizationConfig::default()
    };
    config.validate()?;
    Ok(config)
}

/// Annotates sensitivities, attaches the best controller's report and the
/// concordance statistic, and builds the record.
fn finish(
    net: &SpinNetwork,
    experiment: Experiment,
    config: OptimizationConfig,
    mut set: ControllerSet,
) -> CliResult<ExperimentRecord> {
    if set.iter().all(|c| c.provenance.failed) {
        return Err(CliError::Numerical("every restart failed".into()));
    }
    let (m, n) = experiment.endpoints();
    annotate_sensitivities(&mut set, net, m, n)?;
    let mut record = ExperimentRecord::new(net, experiment, config, set);
    if let Some(best) = record.controllers.best() {
        let report = report_controller(net, m, n, best, 0, analysis::SUPEROPTIMAL_EPS)?;
        record.reports.controllers.push(report);
    }
    record.reports.concordance = concordance(&record.controllers).ok();
    Ok(record)
}

fn summarize(record: &ExperimentRecord) {
    let Some(best) = record.controllers.best() else {
        println!("best: none");
        return;
    };
    println!(
        "best: infidelity {:.6e} at T = {:.6} (restart {})",
        best.infidelity, best.time, best.provenance.restart
    );
    let threshold = record.config.threshold_for(best.objective);
    if !matches!(best.objective, ObjectiveKind::Localization { .. }) {
        match fastest_above_threshold(&record.controllers, threshold) {
            Some(c) => println!(
                "fastest with fidelity >= {threshold}: T = {:.6}, infidelity {:.6e}",
                c.time, c.infidelity
            ),
            None => println!("fastest with fidelity >= {threshold}: none"),
        }
    }
    if let Some(c) = &record.reports.concordance {
        println!(
            "concordance: tau = {:.3} over {} controllers (median sensitivity top decile {:.3e}, bottom decile {:.3e})",
            c.tau, c.n_used, c.top_decile_median, c.bottom_decile_median
        );
    }
}

fn write_record(
    record: &ExperimentRecord,
    out: Option<&Path>,
    default_name: &str,
) -> CliResult<()> {
    let path = output_path(out, default_name);
    record.write(&path)?;
    println!("record: {}", path.display());
    Ok(())
}

fn output_path(out: Option<&Path>, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name),
    }
}

fn node_index(label: usize, flag: &str) -> CliResult<usize> {
    label
        .checked_sub(1)
        .ok_or_else(|| CliError::Usage(format!("{flag} takes 1-based spin labels")))
}

fn parse_number(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Usage(format!("cannot read {what} from '{s}'")))
}

/// `start:step:stop` (inclusive) or a single value.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        [single] => Ok(vec![parse_number(single, "time")?]),
        [a, s, b] => {
            let (start, step, stop) = (
                parse_number(a, "grid start")?,
                parse_number(s, "grid step")?,
                parse_number(b, "grid stop")?,
            );
            if !(step > 0.0) || stop < start {
                return Err(CliError::Usage(format!("empty time grid '{spec}'")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(CliError::Usage(format!(
            "time grid '{spec}' is not start:step:stop"
        ))),
    }
}

fn parse_range(spec: &str) -> CliResult<(f64, f64)> {
    match spec.split(':').collect::<Vec<_>>()[..] {
        [lo, hi] => Ok((
            parse_number(lo, "range start")?,
            parse_number(hi, "range end")?,
        )),
        _ => Err(CliError::Usage(format!("time range '{spec}' is not lo:hi"))),
    }
}

fn parse_bias(spec: &str) -> CliResult<BiasVector> {
    let values = spec
        .split(',')
        .map(|s| parse_number(s, "bias"))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(BiasVector::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints_are_inclusive() {
        let g = parse_grid("1:0.2:30").unwrap();
        assert_eq!(g.len(), 146);
        assert!((g[145] - 30.0).abs() < 1e-12);
        assert_eq!(parse_grid("2.5").unwrap(), vec![2.5]);
        assert!(parse_grid("3:0.1:1").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn node_labels_are_one_based() {
        assert_eq!(node_index(1, "--from").unwrap(), 0);
        assert!(node_index(0, "--from").is_err());
    }
}
