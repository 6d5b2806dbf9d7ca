//! The `cumbia` command-line tool.
//!
//! Every command reads at most one delimited-text matrix, writes its outputs
//! atomically and leaves a `<out>.manifest.json` beside the primary output
//! recording the resolved parameters, input digest and replayable arguments.
//! Exit status is 0 on success, 1 for input or usage errors and 2 for
//! internal invariant violations.

pub mod args;
pub mod labels;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use cumbia_core::export::{
    write_biplot, write_dissimilarity, write_embedding, write_matrix, write_scree, write_spectrum,
    write_trace,
};
use cumbia_core::{
    bottom_indices, classical_mds, f_statistic, filter_and_log2, joint_matrix, parse_table,
    pca_biplot, scree, shave, svd, synth_block, t_statistic, top_indices, zscore_variables,
    CumbiaConfig, DataMatrix, Error, GroupLabels, PreprocessReport, Result, ScreeMode, ShaveConfig,
    ShaveTrace, SynthConfig, DEFAULT_RANK_TOLERANCE,
};
use serde_json::json;

use crate::args::{
    Cli, Command, CumbiaArgs, InputArgs, Order, PcaArgs, PlotArgs, PreprocessArgs, ScreeArgs,
    ScreeSource, ShaveArgs, SynthArgs,
};
use crate::labels::LabelFile;
use crate::output::{sha256_hex, FileDigest, Manifest, Outputs};
use crate::plot::{emit_scatter, emit_scree, Scatter};

/// Parses `argv` (program name first) and runs the command, returning the
/// process exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(cli.command, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 2 for internal invariant violations, 1 for everything the caller can fix.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_internal() {
        2
    } else {
        1
    }
}

fn execute(command: Command, args: Vec<String>) -> Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.name().to_string(),
        args,
        parameters: serde_json::to_value(&command)
            .map_err(|e| Error::Invariant(format!("cannot record parameters: {e}")))?,
        seed: None,
        input: None,
        outputs: Vec::new(),
        warnings: Vec::new(),
    };
    match command {
        Command::Synth(a) => synth_cmd(&a, manifest),
        Command::Preprocess(a) => preprocess_cmd(&a, manifest),
        Command::Cumbia(a) => cumbia_cmd(&a, manifest),
        Command::Pca(a) => pca_cmd(&a, manifest),
        Command::Scree(a) => scree_cmd(&a, manifest),
        Command::Shave(a) => shave_cmd(&a, manifest),
        Command::Replay(a) => replay(&a.manifest),
    }
}

struct Loaded {
    matrix: DataMatrix,
    digest: FileDigest,
}

fn load(input: &InputArgs) -> Result<Loaded> {
    let bytes = output::read_file(&input.input)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Input(format!("{} is not UTF-8: {e}", input.input.display())))?;
    let matrix = parse_table(text, &input.format()).map_err(|e| match e {
        Error::Parse {
            line,
            column,
            message,
        } => Error::Input(format!(
            "{} line {line}{}: {message}",
            input.input.display(),
            column.map(|c| format!(", column {c}")).unwrap_or_default()
        )),
        other => other,
    })?;
    Ok(Loaded {
        matrix,
        digest: FileDigest {
            path: input.input.display().to_string(),
            sha256: sha256_hex(&bytes),
        },
    })
}

fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn synth_cmd(a: &SynthArgs, mut manifest: Manifest) -> Result<()> {
    let block = synth_block(&SynthConfig {
        n_samples: a.samples,
        n_variables: a.variables,
        planted_samples: a.planted_samples,
        planted_variables: a.planted_variables,
        shift: a.shift,
        seed: a.seed,
    })?;
    let mut outputs = Outputs::default();
    outputs.add(
        &a.out,
        render(|b| write_matrix(b, &block.matrix, a.delim.byte()))?,
    )?;
    if let Some(path) = &a.labels {
        let x = &block.matrix;
        let mut w = csv::WriterBuilder::new()
            .delimiter(a.delim.byte())
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Invariant(format!("label serialization failed: {e}"));
        w.write_record(["object", "group"]).map_err(csv_err)?;
        let kinds = [
            (
                cumbia_core::ObjectKind::Sample,
                x.sample_labels(),
                &block.sample_groups,
            ),
            (
                cumbia_core::ObjectKind::Variable,
                x.variable_labels(),
                &block.variable_groups,
            ),
        ];
        for (kind, labels, groups) in kinds {
            for (label, group) in labels.iter().zip(groups.assignment()) {
                w.write_record([
                    cumbia_core::export::prefixed_label(kind, label),
                    group.clone(),
                ])
                .map_err(csv_err)?;
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Invariant(format!("label serialization failed: {e}")))?;
        outputs.add(path, bytes)?;
    }
    manifest.seed = Some(a.seed);
    outputs.commit(&a.out, None, manifest)
}

fn select_variables(
    x: &DataMatrix,
    a: &PreprocessArgs,
    groups: Option<&GroupLabels>,
) -> Result<DataMatrix> {
    let Some(groups) = groups else {
        return Ok(x.clone());
    };
    let mut keep = if let Some(spec) = &a.t_top {
        let (group, m) = spec
            .rsplit_once('=')
            .ok_or_else(|| Error::Parameter(format!("--t-top expects GROUP=M, got `{spec}`")))?;
        let m: usize = m
            .parse()
            .map_err(|_| Error::Parameter(format!("--t-top count `{m}` is not an integer")))?;
        top_indices(&t_statistic(x, groups, group)?, m)
    } else if let Some(m) = a.f_bottom {
        bottom_indices(&f_statistic(x, groups)?, m)
    } else {
        return Ok(x.clone());
    };
    // keep the input's column order
    keep.sort_unstable();
    x.select_variables(&keep)
}

fn preprocess_cmd(a: &PreprocessArgs, mut manifest: Manifest) -> Result<()> {
    let loaded = load(&a.input)?;
    let mut x = loaded.matrix;
    let mut outputs = Outputs::default();
    let mut report = PreprocessReport::default();
    if a.log2 {
        let (filtered, r) = filter_and_log2(&x)?;
        x = filtered;
        report = r;
    }
    let groups = match &a.groups {
        Some(path) => {
            let file = LabelFile::read(path, a.input.delim.byte())?;
            Some(GroupLabels::new(file.sample_groups(x.sample_labels())?)?)
        }
        None => None,
    };
    if groups.is_some() && a.t_top.is_none() && a.f_bottom.is_none() {
        outputs.warn("--groups given without --t-top or --f-bottom; no selection applied");
    }
    let standardize = |x: &DataMatrix,
                       report: &mut PreprocessReport,
                       outputs: &mut Outputs|
     -> Result<DataMatrix> {
        if !a.zscore {
            return Ok(x.clone());
        }
        let (z, dropped) = zscore_variables(x, a.zero_variance.into())?;
        report.zscored = true;
        report.dropped_constant = dropped.len();
        if !dropped.is_empty() {
            outputs.warn(format!(
                "dropped constant variables: {}",
                dropped.join(", ")
            ));
        }
        Ok(z)
    };
    x = match a.order {
        Order::SelectFirst => {
            let selected = select_variables(&x, a, groups.as_ref())?;
            standardize(&selected, &mut report, &mut outputs)?
        }
        Order::ZscoreFirst => {
            let z = standardize(&x, &mut report, &mut outputs)?;
            select_variables(&z, a, groups.as_ref())?
        }
    };
    eprintln!(
        "kept {} samples x {} variables; dropped {} for missing values, {} for nonpositive values, {} constant",
        x.n_samples(),
        x.n_variables(),
        report.dropped_missing,
        report.dropped_negative,
        report.dropped_constant
    );
    manifest.parameters["report"] = json!({
        "dropped_missing": report.dropped_missing,
        "dropped_negative": report.dropped_negative,
        "dropped_constant": report.dropped_constant,
        "log2": report.log2,
        "zscored": report.zscored,
        "samples": x.n_samples(),
        "variables": x.n_variables(),
    });
    outputs.add(
        &a.out,
        render(|b| write_matrix(b, &x, a.input.delim.byte()))?,
    )?;
    manifest.input = Some(loaded.digest);
    outputs.commit(&a.out, Some(&a.input.input), manifest)
}

fn plot_path(out: &Path) -> Result<std::path::PathBuf> {
    let svg = out.with_extension("svg");
    if svg == out {
        return Err(Error::Parameter(format!(
            "{} already ends in .svg; choose another output name",
            out.display()
        )));
    }
    Ok(svg)
}

fn add_scatter(
    outputs: &mut Outputs,
    out: &Path,
    points: &Scatter,
    p: &PlotArgs,
    delim: u8,
) -> Result<()> {
    if !p.plot {
        return Ok(());
    }
    if p.component_x == 0 || p.component_y == 0 {
        return Err(Error::Parameter("components are counted from 1".into()));
    }
    let groups = match &p.labels {
        Some(path) => Some(LabelFile::read(path, delim)?.assign(points.kinds(), points.labels())),
        None => None,
    };
    let svg = emit_scatter(
        points,
        p.component_x - 1,
        p.component_y - 1,
        groups.as_deref(),
    )?;
    outputs.add(&plot_path(out)?, svg.into_bytes())
}

fn cumbia_cmd(a: &CumbiaArgs, mut manifest: Manifest) -> Result<()> {
    let loaded = load(&a.input)?;
    let x = &loaded.matrix;
    let delim = a.input.delim.byte();
    let cfg = a.dissimilarity.config();
    let f = svd(x, DEFAULT_RANK_TOLERANCE)?;
    let d = joint_matrix(x, &f, &cfg)?;
    let e = classical_mds(&d, a.dims)?;

    let mut outputs = Outputs::default();
    for w in e.warnings() {
        outputs.warn(w.to_string());
    }
    if e.shortfall() {
        outputs.warn(format!(
            "only {} positive eigenvalues; embedding has {} of {} requested dimensions",
            e.dims_used(),
            e.dims_used(),
            e.dims_requested()
        ));
    }
    manifest.parameters["resolved"] = json!({
        "rank": cfg.resolve_rank(f.rank())?,
        "data_rank": f.rank(),
        "lambda1": f.lambda1(),
        "k_samples": cfg.k_samples,
        "k_variables": cfg.k_variables(),
        "dims_used": e.dims_used(),
    });
    outputs.add(&a.out, render(|b| write_embedding(b, &e, delim))?)?;
    if let Some(path) = &a.spectrum {
        outputs.add(path, render(|b| write_spectrum(b, e.eigenvalues()))?)?;
    }
    if let Some(path) = &a.dissimilarity_out {
        outputs.add(path, render(|b| write_dissimilarity(b, &d, delim))?)?;
    }
    add_scatter(
        &mut outputs,
        &a.out,
        &Scatter::from_embedding(&e),
        &a.plot,
        delim,
    )?;
    manifest.input = Some(loaded.digest);
    outputs.commit(&a.out, Some(&a.input.input), manifest)
}

fn pca_cmd(a: &PcaArgs, mut manifest: Manifest) -> Result<()> {
    let loaded = load(&a.input)?;
    let delim = a.input.delim.byte();
    let b = pca_biplot(&loaded.matrix, a.rank.into(), a.alpha)?;
    manifest.parameters["resolved"] =
        json!({ "rank": b.rank, "singular_values": b.singular_values });
    let mut outputs = Outputs::default();
    outputs.add(&a.out, render(|w| write_biplot(w, &b, delim))?)?;
    add_scatter(
        &mut outputs,
        &a.out,
        &Scatter::from_biplot(&b),
        &a.plot,
        delim,
    )?;
    manifest.input = Some(loaded.digest);
    outputs.commit(&a.out, Some(&a.input.input), manifest)
}

fn scree_cmd(a: &ScreeArgs, mut manifest: Manifest) -> Result<()> {
    let loaded = load(&a.input)?;
    let x = &loaded.matrix;
    let mut outputs = Outputs::default();
    let table = match a.mode {
        ScreeSource::Pca => {
            let f = svd(x, DEFAULT_RANK_TOLERANCE)?;
            scree(f.singular_values(), ScreeMode::SingularValues)?
        }
        ScreeSource::Cumbia => {
            let cfg: CumbiaConfig = a.dissimilarity.config();
            let f = svd(x, DEFAULT_RANK_TOLERANCE)?;
            let d = joint_matrix(x, &f, &cfg)?;
            for w in d.warnings() {
                outputs.warn(w.to_string());
            }
            let e = classical_mds(&d, 1)?;
            scree(e.eigenvalues(), ScreeMode::Eigenvalues)?
        }
    };
    manifest.parameters["resolved"] = json!({
        "positive_components": table.components.len(),
        "negative_eigenvalues": table.negatives.len(),
    });
    outputs.add(
        &a.out,
        render(|b| write_scree(b, &table, a.input.delim.byte()))?,
    )?;
    if a.plot {
        outputs.add(&plot_path(&a.out)?, emit_scree(&table).into_bytes())?;
    }
    manifest.input = Some(loaded.digest);
    outputs.commit(&a.out, Some(&a.input.input), manifest)
}

/// Rewrites a trace computed on a submatrix in terms of the full matrix.
fn remap(mut trace: ShaveTrace, samples: &[usize], variables: &[usize]) -> ShaveTrace {
    for step in &mut trace.steps {
        step.samples.iter_mut().for_each(|i| *i = samples[*i]);
        step.variables.iter_mut().for_each(|j| *j = variables[*j]);
    }
    trace
}

fn shave_cmd(a: &ShaveArgs, mut manifest: Manifest) -> Result<()> {
    if a.rounds == 0 {
        return Err(Error::Parameter("--rounds must be at least 1".into()));
    }
    let loaded = load(&a.input)?;
    let x = &loaded.matrix;
    let cfg = a.dissimilarity.config();
    let shave_cfg = ShaveConfig {
        k0: a.k0,
        drop_fraction: a.drop_fraction,
        min_objects: a.min_objects,
    };
    let mut outputs = Outputs::default();
    let mut samples: Vec<usize> = (0..x.n_samples()).collect();
    let mut variables: Vec<usize> = (0..x.n_variables()).collect();
    let mut traces = Vec::new();
    for round in 1..=a.rounds {
        if samples.len() <= a.min_objects || variables.len() <= a.min_objects {
            outputs.warn(format!(
                "stopped after {} rounds: too few objects left for another",
                round - 1
            ));
            break;
        }
        let sub = x.select(&samples, &variables)?;
        let trace = remap(shave(&sub, &cfg, &shave_cfg)?, &samples, &variables);
        for w in &trace.warnings {
            outputs.warn(format!("round {round}: {w}"));
        }
        let last = trace.last();
        samples.retain(|i| !last.samples.contains(i));
        variables.retain(|j| !last.variables.contains(j));
        traces.push((round, trace));
    }
    let refs: Vec<(usize, &ShaveTrace)> = traces.iter().map(|(r, t)| (*r, t)).collect();
    manifest.parameters["resolved"] = json!({
        "rounds_run": refs.len(),
        "steps": traces.iter().map(|(_, t)| t.steps.len()).collect::<Vec<_>>(),
    });
    outputs.add(
        &a.out,
        render(|b| write_trace(b, &refs, x, a.input.delim.byte()))?,
    )?;
    manifest.input = Some(loaded.digest);
    outputs.commit(&a.out, Some(&a.input.input), manifest)
}

fn replay(path: &Path) -> Result<()> {
    let manifest = Manifest::read(path)?;
    if manifest.command == "replay" {
        return Err(Error::Input("a replay manifest cannot be replayed".into()));
    }
    if let Some(input) = &manifest.input {
        let bytes = output::read_file(Path::new(&input.path))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(Error::Input(format!(
                "{} has changed since the manifest was written",
                input.path
            )));
        }
    }
    let argv = std::iter::once("cumbia".to_string()).chain(manifest.args.iter().cloned());
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| Error::Input(format!("manifest arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Input("a replay manifest cannot be replayed".into()));
    }
    execute(cli.command, manifest.args)
}
